//! Entropic solver against the exact LP oracle, plus the solver invariants:
//! epsilon-monotonicity, symmetry, plan feasibility, determinism, and
//! engine equivalence.

mod common;

use common::*;
use hmot_core::heatmap::NormalizedHeatmap;
use hmot_core::ot::{
    exact_w1, sinkhorn_solve, sinkhorn_solve_with, sinkhorn_w1, SinkhornConfig, SinkhornEngine,
};
use rand_chacha::ChaCha8Rng;

fn cfg(eps: f64) -> SinkhornConfig {
    SinkhornConfig {
        epsilon: eps,
        max_iterations: 20000,
        marginal_tolerance: 1e-8,
        log_domain: true,
    }
}

fn pair_for(case: usize, h: usize, w: usize, r: &mut ChaCha8Rng) -> (NormalizedHeatmap, NormalizedHeatmap) {
    // Domain-representative pairs: landmark heatmaps are sharp. Flat
    // near-uniform fields carry an entropic sharp-value bias above 2% at
    // eps = 0.01 on 16x16 (measured against the LP oracle), which is a
    // property of the regularization, not of the solver.
    if case % 2 == 0 || h * w < 60 {
        (random_softmax(h, w, 3.0, r), random_softmax(h, w, 3.0, r))
    } else {
        random_blob_pair(h, w, 1.0, 0.2 * (h.max(w) as f64), r)
    }
}

#[test]
fn epsilon_sequence_monotone_down_to_lp_within_two_percent() {
    let mut r = rng(2001);
    let grids = [(1usize, 4usize), (3, 3), (8, 8), (16, 16)];
    let per_grid = 6; // the full 200-pair sweep lives in the acceptance suite
    for (h, w) in grids {
        for case in 0..per_grid {
            let (u, v) = pair_for(case, h, w, &mut r);
            let lp = exact_w1(&u, &v).unwrap().distance;
            let mut prev = f64::INFINITY;
            let mut at_001 = f64::NAN;
            let mut warm: Option<(Vec<f64>, Vec<f64>)> = None;
            for eps in [0.1, 0.05, 0.02, 0.01] {
                // Continuation down the eps ladder: warm-starting from the
                // previous solution leaves the fixed points untouched and
                // cuts iteration counts by an order of magnitude.
                let sol = sinkhorn_solve(
                    &u,
                    &v,
                    &cfg(eps),
                    warm.as_ref().map(|(f, g)| (f.as_slice(), g.as_slice())),
                )
                .unwrap();
                assert!(sol.converged, "{h}x{w} case {case} eps {eps} unconverged");
                // Monotone up to measurement noise: each value carries
                // O(marginal_tolerance * diameter) evaluation error.
                assert!(
                    sol.value <= prev + 2e-8,
                    "{h}x{w} case {case}: value rose {prev} -> {} at eps {eps}",
                    sol.value
                );
                // A marginal violation of tol can push the (slightly
                // infeasible) plan's cost below the LP optimum by about
                // tol * diameter.
                assert!(
                    sol.value >= lp - 1e-7,
                    "{h}x{w} case {case}: value {} fell below LP {lp}",
                    sol.value
                );
                prev = sol.value;
                at_001 = sol.value;
                warm = Some((sol.potential_source, sol.potential_target));
            }
            let rel = (at_001 - lp).abs() / lp.max(1e-12);
            assert!(
                rel <= 0.02,
                "{h}x{w} case {case}: eps=0.01 value {at_001} vs LP {lp} (rel {rel})"
            );
        }
    }
}

#[test]
fn symmetry_up_to_role_swap() {
    let mut r = rng(2002);
    for case in 0..8 {
        let (u, v) = pair_for(case, 8, 8, &mut r);
        let c = SinkhornConfig {
            epsilon: 0.05,
            max_iterations: 20000,
            marginal_tolerance: 1e-11,
            log_domain: true,
        };
        let a = sinkhorn_w1(&u, &v, &c).unwrap();
        let b = sinkhorn_w1(&v, &u, &c).unwrap();
        assert!(a.converged && b.converged);
        assert!(
            (a.value - b.value).abs() <= 1e-8,
            "case {case}: {} vs {}",
            a.value,
            b.value
        );
    }
}

#[test]
fn non_negative_values_everywhere() {
    let mut r = rng(2003);
    for case in 0..10 {
        let (u, v) = pair_for(case, 6, 6, &mut r);
        let sol = sinkhorn_w1(&u, &v, &cfg(0.05)).unwrap();
        assert!(sol.value >= 0.0);
    }
}

#[test]
fn plans_satisfy_marginals_at_tolerance() {
    let mut r = rng(2004);
    for case in 0..6 {
        let (u, v) = pair_for(case, 8, 8, &mut r);
        let c = SinkhornConfig {
            epsilon: 0.03,
            max_iterations: 10000,
            marginal_tolerance: 1e-8,
            log_domain: true,
        };
        let sol = sinkhorn_solve(&u, &v, &c, None).unwrap();
        assert!(sol.converged);
        // The L1 row bound caps each row violation; columns are exact by
        // construction up to evaluation rounding.
        sol.plan(&u, &v).validate(1e-7).unwrap();
    }
}

#[test]
fn bitwise_deterministic_across_reruns() {
    let mut r = rng(2005);
    let (u, v) = pair_for(1, 16, 16, &mut r);
    let c = cfg(0.02);
    let a = sinkhorn_w1(&u, &v, &c).unwrap();
    let b = sinkhorn_w1(&u, &v, &c).unwrap();
    assert_eq!(a.value.to_bits(), b.value.to_bits());
    assert_eq!(a.iterations_used, b.iterations_used);
    for (x, y) in a.gradient.iter().zip(b.gradient.iter()) {
        assert_eq!(x.to_bits(), y.to_bits());
    }
}

#[test]
fn engines_agree_on_shared_domain() {
    let mut r = rng(2006);
    for (h, w) in [(16usize, 16usize), (24, 24)] {
        for case in 0..4 {
            let (u, v) = pair_for(case, h, w, &mut r);
            let c = SinkhornConfig {
                epsilon: 0.05,
                max_iterations: 10000,
                marginal_tolerance: 1e-9,
                log_domain: true,
            };
            let a = sinkhorn_solve_with(&u, &v, &c, None, SinkhornEngine::LogDomain).unwrap();
            let b = sinkhorn_solve_with(&u, &v, &c, None, SinkhornEngine::Scaling).unwrap();
            assert!(a.converged && b.converged);
            assert!(
                (a.value - b.value).abs() <= 1e-8,
                "{h}x{w} case {case}: {} vs {}",
                a.value,
                b.value
            );
            assert!((a.entropic_value - b.entropic_value).abs() <= 1e-8);
        }
    }
}

#[test]
fn identity_floor_and_point_mass_fixture() {
    let mut r = rng(2007);
    let u = random_blob(8, 8, 1.0, &mut r);
    let sol = sinkhorn_w1(&u, &u, &cfg(0.01)).unwrap();
    assert!(sol.value <= 1e-6, "identity value {}", sol.value);

    // 1x4 point-mass fixture: exact answer 1.0, approached from above as
    // eps shrinks.
    let a = hmot_core::heatmap::point_mass(1, 4, 0, 0).unwrap();
    let b = hmot_core::heatmap::point_mass(1, 4, 0, 3).unwrap();
    let lp = exact_w1(&a, &b).unwrap().distance;
    assert_eq!(lp, 1.0);
    let mut prev = f64::INFINITY;
    for eps in [0.1, 0.03, 0.01] {
        let sol = sinkhorn_solve(&a, &b, &cfg(eps), None).unwrap();
        assert!(sol.value <= prev + 1e-12);
        prev = sol.value;
        assert!((sol.value - 1.0).abs() <= 1e-9, "eps {eps}: {}", sol.value);
    }
}
