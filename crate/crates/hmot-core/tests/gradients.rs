//! Analytic gradients of every loss against central finite differences, and
//! the saturation contrast between the transport loss and the pixel losses
//! on disjoint supports.
//!
//! For the Wasserstein loss the differentiated scalar is the entropic dual
//! objective: by the envelope theorem its gradient in the source
//! distribution is exactly the dual potential, which is what the analytic
//! path returns (the sharp primal cost differs from it at order eps).

mod common;

use common::*;
use hmot_core::heatmap::{make_normalized_target, Heatmap, LandmarkPoint};
use hmot_core::ot::{
    js_divergence_loss, l2_heatmap_loss, sinkhorn_gradient, sinkhorn_solve, soft_argmax_loss,
    softmax_normalize, SinkhornConfig,
};

const FD_STEP: f64 = 1e-5;
const REL_TOL: f64 = 1e-4;

fn tight_cfg() -> SinkhornConfig {
    SinkhornConfig {
        epsilon: 0.01,
        max_iterations: 30000,
        marginal_tolerance: 1e-10,
        log_domain: true,
    }
}

#[test]
fn wasserstein_gradient_matches_finite_differences() {
    let mut r = rng(3001);
    let (h, w) = (6, 6);
    let cfg = tight_cfg();
    let cases = 25; // the acceptance suite runs the full 100
    for case in 0..cases {
        let logits: Vec<f64> = (0..h * w).map(|_| normal(&mut r)).collect();
        let target = random_softmax(h, w, 1.0, &mut r);
        let hm = Heatmap::new(h, w, logits.clone()).unwrap();
        let analytic = sinkhorn_gradient(&hm, &target, &cfg).unwrap();
        assert!(analytic.converged);

        let mut probe = EntropicProbe::new(target.clone(), cfg);
        probe.value(&hm); // seed the warm start at the base point
        let fd = fd_gradient(&logits, h, w, FD_STEP, |x| probe.value(x));
        let err = max_rel_err(&analytic.gradient, &fd, 1e-3);
        assert!(err <= REL_TOL, "case {case}: rel err {err}");
    }
}

#[test]
fn l2_gradient_matches_finite_differences() {
    let mut r = rng(3002);
    let (h, w) = (6, 6);
    for case in 0..25 {
        let pred: Vec<f64> = (0..h * w).map(|_| normal(&mut r)).collect();
        let target: Vec<f64> = (0..h * w).map(|_| normal(&mut r)).collect();
        let t = Heatmap::new(h, w, target).unwrap();
        let (_, analytic) = l2_heatmap_loss(&Heatmap::new(h, w, pred.clone()).unwrap(), &t).unwrap();
        let fd = fd_gradient(&pred, h, w, FD_STEP, |x| l2_heatmap_loss(x, &t).unwrap().0);
        let err = max_rel_err(&analytic, &fd, 1e-3);
        assert!(err <= REL_TOL, "case {case}: rel err {err}");
    }
}

#[test]
fn js_gradient_matches_finite_differences() {
    let mut r = rng(3003);
    let (h, w) = (4, 4);
    for case in 0..25 {
        let logits: Vec<f64> = (0..h * w).map(|_| normal(&mut r)).collect();
        let target = random_softmax(h, w, 1.0, &mut r);
        let (_, analytic) =
            js_divergence_loss(&Heatmap::new(h, w, logits.clone()).unwrap(), &target).unwrap();
        let fd = fd_gradient(&logits, h, w, FD_STEP, |x| {
            js_divergence_loss(x, &target).unwrap().0
        });
        let err = max_rel_err(&analytic, &fd, 1e-3);
        assert!(err <= REL_TOL, "case {case}: rel err {err}");
    }
}

#[test]
fn soft_argmax_gradient_matches_finite_differences() {
    let mut r = rng(3004);
    let (h, w) = (6, 6);
    for case in 0..25 {
        let logits: Vec<f64> = (0..h * w).map(|_| normal(&mut r)).collect();
        let gt = LandmarkPoint::new(1.0 + unit(&mut r) * 3.0, 1.0 + unit(&mut r) * 3.0);
        let (_, analytic) =
            soft_argmax_loss(&Heatmap::new(h, w, logits.clone()).unwrap(), gt).unwrap();
        let fd = fd_gradient(&logits, h, w, FD_STEP, |x| {
            soft_argmax_loss(x, gt).unwrap().0
        });
        let err = max_rel_err(&analytic, &fd, 1e-3);
        assert!(err <= REL_TOL, "case {case}: rel err {err}");
    }
}

/// Blob logits centered at `c` with unit sigma.
fn blob_logits(h: usize, w: usize, cx: f64, cy: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(h * w);
    for y in 0..h {
        for x in 0..w {
            let (dx, dy) = (x as f64 - cx, y as f64 - cy);
            out.push(-(dx * dx + dy * dy) / 2.0);
        }
    }
    out
}

/// The saturation contrast, measured exactly as a +-1 px central difference
/// of each loss under a rigid source translation, reported per pixel of
/// shift converted to the unit cost frame.
#[test]
fn disjoint_support_translation_sensitivity() {
    let (h, w) = (32, 32);
    let norm = 31.0;
    let (cx, cy) = (15.5, 5.5);
    let target = make_normalized_target(LandmarkPoint::new(cx, cy + 20.0), 1.0, h, w).unwrap();

    // Wasserstein: the value tracks the blob distance one-for-one.
    let cfg = SinkhornConfig {
        epsilon: 0.01,
        max_iterations: 30000,
        marginal_tolerance: 1e-9,
        log_domain: true,
    };
    let value_at = |shift: f64| {
        let logits = Heatmap::new(h, w, blob_logits(h, w, cx, cy + shift)).unwrap();
        let p = softmax_normalize(&logits);
        let sol = sinkhorn_solve(&p, &target, &cfg, None).unwrap();
        assert!(sol.converged);
        sol.value
    };
    // Derivative with respect to shift in unit-frame lengths.
    let dw = (value_at(1.0) - value_at(-1.0)) / (2.0 / norm);
    assert!(
        dw.abs() >= 0.1,
        "transport derivative {dw} should be order 1"
    );

    // Pixel L2 on softmaxed fields: blind to the shift.
    let l2_at = |shift: f64| {
        let logits = Heatmap::new(h, w, blob_logits(h, w, cx, cy + shift)).unwrap();
        let p = softmax_normalize(&logits);
        l2_heatmap_loss(p.as_heatmap(), target.as_heatmap())
            .unwrap()
            .0
    };
    let dl2 = (l2_at(1.0) - l2_at(-1.0)) / (2.0 / norm);
    assert!(
        dl2.abs() <= 1e-6,
        "pixel-L2 derivative {dl2} should have saturated"
    );

    // Raw-value L2 against a peak-one target saturates the same way.
    let spec = hmot_core::heatmap::TargetSpec::new(
        1.0,
        h,
        w,
        hmot_core::heatmap::AmplitudeMode::PeakOne,
    )
    .unwrap();
    let raw_target =
        hmot_core::heatmap::make_gaussian_target(LandmarkPoint::new(cx, cy + 20.0), &spec)
            .unwrap()
            .heatmap;
    let raw_at = |shift: f64| {
        let pred = hmot_core::heatmap::make_gaussian_target(
            LandmarkPoint::new(cx, cy + shift),
            &spec,
        )
        .unwrap()
        .heatmap;
        l2_heatmap_loss(&pred, &raw_target).unwrap().0
    };
    let draw = (raw_at(1.0) - raw_at(-1.0)) / (2.0 / norm);
    assert!(draw.abs() <= 1e-6, "raw-L2 derivative {draw}");
}

/// On the canonical disjoint fit instance the transport gradient norm
/// dominates the pixel-L2 one; the floor is the measured family behaviour
/// (ratio about 48 at the canonical init, falling toward parity for very
/// sharp inits whose pixel gradients are p^2-large).
#[test]
fn disjoint_support_gradient_norm_contrast() {
    let (h, w) = (64, 64);
    let (cx, cy) = (41.5, 31.5);
    let logits = {
        let mut out = Vec::with_capacity(h * w);
        for y in 0..h {
            for x in 0..w {
                let (dx, dy) = (x as f64 - cx, y as f64 - cy);
                out.push(-(dx * dx + dy * dy) / (2.0 * 12.0 * 12.0));
            }
        }
        Heatmap::new(h, w, out).unwrap()
    };
    let target = make_normalized_target(LandmarkPoint::new(21.5, 31.5), 3.0, h, w).unwrap();
    let cfg = SinkhornConfig {
        epsilon: 0.05,
        max_iterations: 2000,
        marginal_tolerance: 1e-7,
        log_domain: true,
    };
    let p = softmax_normalize(&logits);
    let sol = hmot_core::ot::sinkhorn_solve_with(
        &p,
        &target,
        &cfg,
        None,
        hmot_core::ot::SinkhornEngine::Scaling,
    )
    .unwrap();
    let wg = sol.logit_gradient(p.values());
    let (_, l2_grad_p) = l2_heatmap_loss(p.as_heatmap(), target.as_heatmap()).unwrap();
    let l2_logit_grad: Vec<f64> = {
        // chain through softmax as the fit harness does
        let mut dot = 0.0;
        for (pk, vk) in p.values().iter().zip(l2_grad_p.iter()) {
            dot += pk * vk;
        }
        p.values()
            .iter()
            .zip(l2_grad_p.iter())
            .map(|(&pk, &vk)| pk * (vk - dot))
            .collect()
    };
    let norm = |g: &[f64]| g.iter().map(|x| x * x).sum::<f64>().sqrt();
    let ratio = norm(&wg) / norm(&l2_logit_grad);
    assert!(
        ratio >= 30.0,
        "transport/pixel gradient-norm ratio {ratio} collapsed"
    );
}
