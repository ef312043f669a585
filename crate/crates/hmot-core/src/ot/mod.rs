//! Discrete 2D optimal transport on pixel grids.
//!
//! The Wasserstein-1 distance between two heatmaps treats them as piles of
//! mass on the grid and charges Euclidean distance per unit moved; unlike
//! pixel-wise losses it keeps growing as the piles move apart. Two routes are
//! provided: an exact linear-programming oracle for small grids
//! ([`exact_w1`]) and the entropic Sinkhorn approximation ([`sinkhorn_w1`])
//! whose dual potentials give analytic gradients through the softmax
//! front-end. The reference losses trained against in ablations (pixel L2,
//! Jensen-Shannon, soft-argmax) live in this module too.

use alloc::vec::Vec;

use crate::heatmap::{Heatmap, NormalizedHeatmap};
use crate::math;
use crate::{Error, Result};

mod grid;
mod lp;
mod losses;
mod scaling;
mod sinkhorn;

pub use grid::GroundCost;
pub use lp::{ExactW1, LP_CELL_LIMIT};
pub use losses::{
    js_divergence, js_divergence_loss, l2_heatmap_loss, soft_argmax_loss, softmax_normalize,
};
pub use scaling::SCALING_MIN_EPSILON;
pub use sinkhorn::SinkhornSolution;

pub(crate) use losses::softmax_vjp;

/// Entropic regularization settings.
///
/// `epsilon` is in units of the normalized ground cost (the longest grid axis
/// has length 1), so the same value means the same amount of blur on every
/// grid size. Iteration always runs in the stabilized log domain;
/// `log_domain` exists to make that explicit and must stay `true`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SinkhornConfig {
    pub epsilon: f64,
    pub max_iterations: u32,
    /// L1 violation of the row marginals at which iteration stops.
    pub marginal_tolerance: f64,
    pub log_domain: bool,
}

impl Default for SinkhornConfig {
    fn default() -> Self {
        Self {
            epsilon: 0.01,
            max_iterations: 1000,
            marginal_tolerance: 1e-6,
            log_domain: true,
        }
    }
}

impl SinkhornConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0) || !self.epsilon.is_finite() {
            return Err(Error::InvalidParameter {
                what: "epsilon",
                reason: "must be a finite positive real",
            });
        }
        if self.max_iterations < 1 {
            return Err(Error::InvalidParameter {
                what: "max_iterations",
                reason: "must be at least 1",
            });
        }
        if !(self.marginal_tolerance > 0.0) || !self.marginal_tolerance.is_finite() {
            return Err(Error::InvalidParameter {
                what: "marginal_tolerance",
                reason: "must be a finite positive real",
            });
        }
        if !self.log_domain {
            return Err(Error::InvalidParameter {
                what: "log_domain",
                reason: "only log-domain iteration is provided",
            });
        }
        Ok(())
    }
}

/// Which internal iteration representation evaluates the solve.
///
/// Both compute the same fixed point; `Scaling` trades the per-entry
/// log-sum-exp for kernel lookup-table sweeps, which is much faster on big
/// grids but requires `epsilon >=` [`SCALING_MIN_EPSILON`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SinkhornEngine {
    LogDomain,
    Scaling,
}

/// A dense coupling between two heatmaps together with the distributions it
/// transports.
#[derive(Debug, Clone)]
pub struct TransportPlan {
    coupling: Vec<f64>,
    source: NormalizedHeatmap,
    target: NormalizedHeatmap,
}

impl TransportPlan {
    pub(crate) fn new(
        coupling: Vec<f64>,
        source: NormalizedHeatmap,
        target: NormalizedHeatmap,
    ) -> Self {
        debug_assert_eq!(coupling.len(), source.values().len() * target.values().len());
        Self {
            coupling,
            source,
            target,
        }
    }

    /// Row-major `(H*W) x (H*W)` coupling matrix.
    pub fn coupling(&self) -> &[f64] {
        &self.coupling
    }

    pub fn source(&self) -> &NormalizedHeatmap {
        &self.source
    }

    pub fn target(&self) -> &NormalizedHeatmap {
        &self.target
    }

    pub fn row_sums(&self) -> Vec<f64> {
        let n = self.source.values().len();
        let mut out = Vec::with_capacity(n);
        for i in 0..n {
            out.push(self.coupling[i * n..(i + 1) * n].iter().sum());
        }
        out
    }

    pub fn col_sums(&self) -> Vec<f64> {
        let n = self.source.values().len();
        let mut out = alloc::vec![0.0; n];
        for i in 0..n {
            for (j, o) in out.iter_mut().enumerate() {
                *o += self.coupling[i * n + j];
            }
        }
        out
    }

    /// Largest absolute marginal violation against either heatmap.
    pub fn max_marginal_violation(&self) -> f64 {
        let mut worst = 0.0f64;
        for (r, a) in self.row_sums().iter().zip(self.source.values()) {
            worst = worst.max(math::abs(r - a));
        }
        for (c, b) in self.col_sums().iter().zip(self.target.values()) {
            worst = worst.max(math::abs(c - b));
        }
        worst
    }

    /// Checks non-negativity and that both marginals hold within `tol`.
    pub fn validate(&self, tol: f64) -> Result<()> {
        if self.coupling.iter().any(|&x| x < 0.0) {
            return Err(Error::InvalidParameter {
                what: "transport plan",
                reason: "negative coupling entry",
            });
        }
        if self.max_marginal_violation() > tol {
            return Err(Error::InvalidParameter {
                what: "transport plan",
                reason: "marginal violation exceeds tolerance",
            });
        }
        Ok(())
    }

    /// Transport cost `<C, pi>` of this plan under the grid's ground metric.
    pub fn transport_cost(&self) -> f64 {
        let (h, w) = self.source.shape();
        let cost = GroundCost::new(h, w).expect("plan shapes validated");
        let n = h * w;
        let mut acc = 0.0;
        for i in 0..n {
            for j in 0..n {
                let p = self.coupling[i * n + j];
                if p > 0.0 {
                    acc += p * cost.cost(i, j);
                }
            }
        }
        acc
    }
}

/// Sinkhorn loss evaluation: sharp transport cost plus the logit-space
/// gradient.
#[derive(Debug, Clone)]
pub struct LossResult {
    /// Sharp primal transport cost `<C, pi_eps>`, non-negative.
    pub value: f64,
    /// `d loss / d logit` for every cell of the source, i.e. the dual
    /// potential chain-ruled through the softmax front-end.
    pub gradient: Vec<f64>,
    pub iterations_used: u32,
    pub converged: bool,
}

/// Gradient of the entropic loss with respect to source logits, with the
/// solver's convergence state attached as a warning rather than an error.
#[derive(Debug, Clone)]
pub struct GradientResult {
    pub gradient: Vec<f64>,
    pub converged: bool,
}

/// Exact Wasserstein-1 between two normalized heatmaps on the same grid via
/// the transportation LP. Grids above [`LP_CELL_LIMIT`] cells are refused.
pub fn exact_w1(source: &NormalizedHeatmap, target: &NormalizedHeatmap) -> Result<ExactW1> {
    lp::solve(source, target)
}

/// Entropic Sinkhorn solve exposing dual potentials, both value conventions,
/// and warm starting. This is the full-information entry point; use
/// [`sinkhorn_w1`] for the packaged loss.
pub fn sinkhorn_solve(
    source: &NormalizedHeatmap,
    target: &NormalizedHeatmap,
    cfg: &SinkhornConfig,
    warm: Option<(&[f64], &[f64])>,
) -> Result<SinkhornSolution> {
    sinkhorn::solve(source, target, cfg, warm)
}

/// As [`sinkhorn_solve`] but choosing the iteration engine explicitly.
pub fn sinkhorn_solve_with(
    source: &NormalizedHeatmap,
    target: &NormalizedHeatmap,
    cfg: &SinkhornConfig,
    warm: Option<(&[f64], &[f64])>,
    engine: SinkhornEngine,
) -> Result<SinkhornSolution> {
    match engine {
        SinkhornEngine::LogDomain => sinkhorn::solve(source, target, cfg, warm),
        SinkhornEngine::Scaling => scaling::solve(source, target, cfg, warm),
    }
}

/// Entropic Wasserstein-1 loss between normalized heatmaps.
///
/// Returns the sharp primal cost and the gradient with respect to the
/// *logits* of the source (treating `source = softmax(logits)`). On
/// non-convergence the partial result is returned flagged, never clamped.
pub fn sinkhorn_w1(
    source: &NormalizedHeatmap,
    target: &NormalizedHeatmap,
    cfg: &SinkhornConfig,
) -> Result<LossResult> {
    let sol = sinkhorn::solve(source, target, cfg, None)?;
    Ok(LossResult {
        value: sol.value,
        gradient: sol.logit_gradient(source.values()),
        iterations_used: sol.iterations,
        converged: sol.converged,
    })
}

/// Gradient of the entropic transport loss with respect to raw source logits
/// against a fixed normalized target: softmax, solve, chain rule.
pub fn sinkhorn_gradient(
    logits_source: &Heatmap,
    target: &NormalizedHeatmap,
    cfg: &SinkhornConfig,
) -> Result<GradientResult> {
    logits_source.same_shape(target.as_heatmap())?;
    let p = softmax_normalize(logits_source);
    let sol = sinkhorn::solve(&p, target, cfg, None)?;
    Ok(GradientResult {
        gradient: sol.logit_gradient(p.values()),
        converged: sol.converged,
    })
}
