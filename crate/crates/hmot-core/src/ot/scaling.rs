//! Stabilized-scaling form of the Sinkhorn iteration for large grids.
//!
//! Maintains scaling vectors `u = exp(f/eps)`, `v = exp(g/eps)` and applies
//! the kernel through a lookup table indexed by integer squared pixel
//! distance, so an iteration is two multiply-add sweeps with no
//! transcendentals. On the unit-normalized ground cost the diameter is at
//! most sqrt(2), which bounds every exponent by `(sqrt 2 + |ln min_mass|
//! * eps) / eps`; for `eps >= 0.005` everything stays comfortably inside f64
//! range, and the solver refuses smaller `eps` rather than risk silent
//! under/overflow (the log-domain engine handles those).
//!
//! Same fixed point, same convergence measure, and same outputs as
//! [`super::sinkhorn`]; the two are cross-checked in the test suite.

use alloc::vec;
use alloc::vec::Vec;

use crate::heatmap::NormalizedHeatmap;
use crate::math;
use crate::ot::grid::GroundCost;
use crate::ot::sinkhorn::SinkhornSolution;
use crate::ot::SinkhornConfig;
use crate::{Error, Result};

/// Smallest epsilon the scaling representation accepts.
pub const SCALING_MIN_EPSILON: f64 = 0.005;

/// Kernel rows unrolled by `|dy|` into symmetric lines of length `2W-1`, so
/// the matvec inner loop is a contiguous dot product the compiler can
/// vectorize: `line[dy][(w-1) + (jx - ix)] = kernel(dy, ix - jx)`.
struct KernelLines {
    lines: Vec<Vec<f64>>,
    width: usize,
}

impl KernelLines {
    fn build(dist_lut: &[f64], h: usize, w: usize, f: impl Fn(f64) -> f64) -> Self {
        let mut lines = Vec::with_capacity(h);
        for dy in 0..h {
            let mut line = Vec::with_capacity(2 * w - 1);
            for idx in 0..2 * w - 1 {
                let dx = idx as isize - (w as isize - 1);
                let d2 = dy * dy + (dx * dx) as usize;
                line.push(f(dist_lut[d2]));
            }
            lines.push(line);
        }
        Self { lines, width: w }
    }

    /// `out_i = sum_j kernel(i, j) * x_j` over the grid.
    fn matvec(&self, x: &[f64], h: usize, out: &mut [f64]) {
        let w = self.width;
        for o in out.iter_mut() {
            *o = 0.0;
        }
        for iy in 0..h {
            let out_row = &mut out[iy * w..(iy + 1) * w];
            for jy in 0..h {
                let line = &self.lines[iy.abs_diff(jy)];
                let x_row = &x[jy * w..(jy + 1) * w];
                for (ix, o) in out_row.iter_mut().enumerate() {
                    let seg = &line[w - 1 - ix..2 * w - 1 - ix];
                    let mut acc = 0.0;
                    for (a, b) in seg.iter().zip(x_row.iter()) {
                        acc += a * b;
                    }
                    *o += acc;
                }
            }
        }
    }
}

struct Kernels {
    /// exp(-C/eps).
    k: KernelLines,
    /// C * exp(-C/eps), for the sharp transport cost.
    kc: KernelLines,
}

fn kernels(dist_lut: &[f64], eps: f64, h: usize, w: usize) -> Kernels {
    Kernels {
        k: KernelLines::build(dist_lut, h, w, |c| math::exp(-c / eps)),
        kc: KernelLines::build(dist_lut, h, w, |c| c * math::exp(-c / eps)),
    }
}

/// Runs rounds until the L1 row violation of the current `(u, v)` coupling
/// reaches `tol` or the budget is spent; returns the kernel application
/// `K v` from the exit check so callers can reuse it.
fn run_stage(
    kern: &Kernels,
    a: &[f64],
    b: &[f64],
    u: &mut Vec<f64>,
    v: &mut Vec<f64>,
    h: usize,
    tol: f64,
    budget: u32,
    mut valid_state: bool,
) -> Result<(u32, bool, f64, Vec<f64>)> {
    let n = a.len();
    let mut kv = vec![0.0; n];
    let mut used = 0u32;
    loop {
        kern.k.matvec(v, h, &mut kv);
        let mut err = 0.0;
        for i in 0..n {
            err += math::abs(u[i] * kv[i] - a[i]);
        }
        if !err.is_finite() {
            return Err(Error::InvalidParameter {
                what: "scaling-domain sinkhorn",
                reason: "iterate left f64 range; use the log-domain engine",
            });
        }
        if valid_state && err <= tol {
            return Ok((used, true, err, kv));
        }
        if used >= budget {
            return Ok((used, false, err, kv));
        }
        for i in 0..n {
            u[i] = if a[i] > 0.0 { a[i] / kv[i] } else { 0.0 };
        }
        kern.k.matvec(u, h, &mut kv);
        for j in 0..n {
            v[j] = if b[j] > 0.0 { b[j] / kv[j] } else { 0.0 };
        }
        used += 1;
        valid_state = true;
    }
}

pub(crate) fn solve(
    source: &NormalizedHeatmap,
    target: &NormalizedHeatmap,
    cfg: &SinkhornConfig,
    warm: Option<(&[f64], &[f64])>,
) -> Result<SinkhornSolution> {
    source.as_heatmap().same_shape(target.as_heatmap())?;
    cfg.validate()?;
    if cfg.epsilon < SCALING_MIN_EPSILON {
        return Err(Error::InvalidParameter {
            what: "epsilon",
            reason: "below the scaling engine's stability floor of 0.005",
        });
    }
    let (h, w) = source.shape();
    let n = h * w;
    let a = source.values();
    let b = target.values();
    let cost = GroundCost::new(h, w)?;
    let dist_lut = cost.dist_lut();

    let mut u;
    let mut v;
    let mut valid;
    match warm {
        Some((wf, wg)) => {
            if wf.len() != n || wg.len() != n {
                return Err(Error::LengthMismatch {
                    left: wf.len(),
                    right: n,
                });
            }
            u = wf.iter().map(|&f| math::exp(f / cfg.epsilon)).collect();
            v = wg.iter().map(|&g| math::exp(g / cfg.epsilon)).collect();
            valid = true;
        }
        None => {
            u = vec![1.0; n];
            v = vec![1.0; n];
            valid = false;
        }
    }
    for i in 0..n {
        if a[i] <= 0.0 {
            u[i] = 0.0;
        }
        if b[i] <= 0.0 {
            v[i] = 0.0;
        }
    }

    let mut total_used = 0u32;
    if warm.is_none() {
        let mut eps = 1.0;
        while eps > cfg.epsilon * 3.0 {
            let remaining = cfg.max_iterations.saturating_sub(total_used);
            if remaining <= 1 {
                break;
            }
            let kern = kernels(&dist_lut, eps, h, w);
            let (used, _, _, _) = run_stage(
                &kern,
                a,
                b,
                &mut u,
                &mut v,
                h,
                1e-3f64.max(cfg.marginal_tolerance),
                100.min(remaining - 1),
                valid,
            )?;
            total_used += used;
            valid = true;
            // Rescale the potentials into the next stage's representation.
            let next = (eps / 3.0).max(cfg.epsilon);
            let ratio = eps / next;
            for x in u.iter_mut() {
                *x = crate::math::exp(crate::math::ln(x.max(f64::MIN_POSITIVE)) * ratio);
            }
            for x in v.iter_mut() {
                *x = crate::math::exp(crate::math::ln(x.max(f64::MIN_POSITIVE)) * ratio);
            }
            for i in 0..n {
                if a[i] <= 0.0 {
                    u[i] = 0.0;
                }
                if b[i] <= 0.0 {
                    v[i] = 0.0;
                }
            }
            eps = next;
        }
    }

    let kern = kernels(&dist_lut, cfg.epsilon, h, w);
    let remaining = cfg.max_iterations.saturating_sub(total_used);
    let (used, converged, marginal_error, kv) = run_stage(
        &kern,
        a,
        b,
        &mut u,
        &mut v,
        h,
        cfg.marginal_tolerance,
        remaining,
        valid,
    )?;
    total_used += used;

    // Sharp value via the cost-weighted kernel; plan mass reuses the exit
    // check's kernel application.
    let mut kcv = vec![0.0; n];
    kern.kc.matvec(&v, h, &mut kcv);
    let mut value = 0.0;
    let mut mass = 0.0;
    for i in 0..n {
        value += u[i] * kcv[i];
        mass += u[i] * kv[i];
    }

    let to_potential = |x: f64| {
        if x > 0.0 {
            cfg.epsilon * math::ln(x)
        } else {
            f64::NEG_INFINITY
        }
    };
    let mut f: Vec<f64> = u.iter().map(|&x| to_potential(x)).collect();
    let mut g: Vec<f64> = v.iter().map(|&x| to_potential(x)).collect();

    let mut dual = -cfg.epsilon * mass;
    for i in 0..n {
        if a[i] > 0.0 {
            dual += f[i] * a[i];
        }
        if b[i] > 0.0 {
            dual += g[i] * b[i];
        }
    }

    let mut mean = 0.0;
    let mut count = 0usize;
    for i in 0..n {
        if a[i] > 0.0 {
            mean += f[i];
            count += 1;
        }
    }
    mean /= count as f64;
    for fi in f.iter_mut() {
        if *fi != f64::NEG_INFINITY {
            *fi -= mean;
        }
    }
    for gj in g.iter_mut() {
        if *gj != f64::NEG_INFINITY {
            *gj += mean;
        }
    }

    Ok(SinkhornSolution {
        potential_source: f,
        potential_target: g,
        value,
        entropic_value: dual,
        iterations: total_used,
        converged,
        marginal_error,
        height: h,
        width: w,
        epsilon: cfg.epsilon,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::heatmap::{make_normalized_target, LandmarkPoint};
    use crate::ot::sinkhorn;

    fn cfg(eps: f64, max_it: u32, tol: f64) -> SinkhornConfig {
        SinkhornConfig {
            epsilon: eps,
            max_iterations: max_it,
            marginal_tolerance: tol,
            log_domain: true,
        }
    }

    #[test]
    fn agrees_with_log_domain_engine() {
        let u = make_normalized_target(LandmarkPoint::new(4.0, 9.0), 1.5, 16, 16).unwrap();
        let v = make_normalized_target(LandmarkPoint::new(11.0, 5.0), 2.0, 16, 16).unwrap();
        let c = cfg(0.05, 5000, 1e-9);
        let a = sinkhorn::solve(&u, &v, &c, None).unwrap();
        let b = solve(&u, &v, &c, None).unwrap();
        assert!(a.converged && b.converged);
        assert!(
            (a.value - b.value).abs() < 1e-9,
            "values {} vs {}",
            a.value,
            b.value
        );
        assert!((a.entropic_value - b.entropic_value).abs() < 1e-9);
        for (fa, fb) in a
            .potential_source
            .iter()
            .zip(b.potential_source.iter())
        {
            if fa.is_finite() || fb.is_finite() {
                assert!((fa - fb).abs() < 1e-6, "potentials {fa} vs {fb}");
            }
        }
    }

    #[test]
    fn refuses_epsilon_below_floor() {
        let u = make_normalized_target(LandmarkPoint::new(4.0, 4.0), 1.0, 8, 8).unwrap();
        assert!(solve(&u, &u, &cfg(0.001, 100, 1e-6), None).is_err());
    }

    #[test]
    fn warm_start_roundtrip() {
        let u = make_normalized_target(LandmarkPoint::new(10.0, 20.0), 3.0, 32, 32).unwrap();
        let v = make_normalized_target(LandmarkPoint::new(20.0, 12.0), 3.0, 32, 32).unwrap();
        let c = cfg(0.05, 5000, 1e-8);
        let cold = solve(&u, &v, &c, None).unwrap();
        let warm = solve(
            &u,
            &v,
            &c,
            Some((&cold.potential_source, &cold.potential_target)),
        )
        .unwrap();
        assert!(warm.converged);
        assert!(warm.iterations <= 2);
        assert!((warm.value - cold.value).abs() < 1e-10);
    }
}
