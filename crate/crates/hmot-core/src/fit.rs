//! Desk-scale optimization harness: plain gradient descent on per-landmark
//! logit fields under each loss.
//!
//! Optimizing logits directly (instead of CNN weights) isolates what the loss
//! itself rewards, which is exactly where the Wasserstein / pixel-L2
//! difference shows: on disjoint supports the pixel losses are blind to how
//! far apart the blobs are, while the transport loss keeps a usable gradient.

use alloc::vec::Vec;

use crate::heatmap::{
    decode_get_bc, decode_get_max, make_normalized_target, AmplitudeMode, Heatmap, LandmarkPoint,
    NormalizedHeatmap, TargetSpec,
};
use crate::math;
use crate::ot::{
    self, js_divergence_loss, l2_heatmap_loss, soft_argmax_loss, softmax_normalize,
    SinkhornConfig, SinkhornEngine, SCALING_MIN_EPSILON,
};
use crate::rng;
use crate::{Error, Result};

/// Which loss drives the descent.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FitLoss {
    /// Entropic Wasserstein-1 on softmaxed logits against a normalized target.
    Wasserstein,
    /// Pixel L2 on softmaxed logits against the same normalized target (the
    /// shared-pipeline arm used for saturation comparisons).
    L2Softmax,
    /// Pixel L2 on raw logits against a peak-one target (vanilla heatmap
    /// regression training).
    L2Raw,
    /// Jensen-Shannon on softmaxed logits against the normalized target.
    JensenShannon,
    /// Squared coordinate error of the softmax barycenter.
    SoftArgmax,
}

impl FitLoss {
    /// Step sizes tuned once on the canonical 64x64 / sigma-3 instance and
    /// frozen; the fit tests pin the behaviour they must deliver. The
    /// Wasserstein step looks enormous because its logit gradients carry a
    /// factor `p_k` (softmax chain rule) times a unit-frame potential, both
    /// small; descent speed is set by their product.
    pub fn default_step(self) -> f64 {
        match self {
            FitLoss::Wasserstein => 3000.0,
            FitLoss::L2Softmax => 10.0,
            FitLoss::L2Raw => 0.4,
            FitLoss::JensenShannon => 1.0,
            FitLoss::SoftArgmax => 50.0,
        }
    }
}

/// Initial logit field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitPreset {
    /// All-zero logits (softmax gives the uniform distribution).
    Zero,
    /// Standard-normal logits from a seeded stream.
    RandomSeeded { seed: u64 },
    /// Gaussian-blob logits (`-|q - c'|^2 / 2 sigma^2`) displaced `distance`
    /// pixels along +x from the target center, so the softmax is exactly a
    /// normalized Gaussian of width `sigma` there.
    OffsetBlob { distance: f64, sigma: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitProblem {
    pub height: usize,
    pub width: usize,
    pub target_center: LandmarkPoint,
    pub target_sigma: f64,
    pub loss: FitLoss,
    pub init: InitPreset,
    pub step_size: f64,
    pub iterations: u32,
    pub sinkhorn: SinkhornConfig,
}

impl FitProblem {
    /// Canonical instance: 64x64 grid, sigma-3 target left of center, a wide
    /// blob initialized 20 px to its right. The wide init matters twice over:
    /// plain gradient descent transports mass at a rate proportional to the
    /// local softmax value, so a sharp far blob crawls, while a wide one both
    /// travels fast under the transport gradient and leaves the pixel-L2
    /// gradient even flatter.
    pub fn canonical(loss: FitLoss) -> Self {
        Self {
            height: 64,
            width: 64,
            target_center: LandmarkPoint::new(21.5, 31.5),
            target_sigma: 3.0,
            loss,
            init: InitPreset::OffsetBlob {
                distance: 20.0,
                sigma: 12.0,
            },
            step_size: loss.default_step(),
            iterations: 2000,
            sinkhorn: Self::default_sinkhorn(),
        }
    }

    /// Sinkhorn settings for fit runs: a softer epsilon than the measurement
    /// default, because the harness needs thousands of solves and the induced
    /// entropic blur is symmetric (it does not move the barycenter).
    pub fn default_sinkhorn() -> SinkhornConfig {
        SinkhornConfig {
            epsilon: 0.05,
            max_iterations: 500,
            marginal_tolerance: 1e-7,
            log_domain: true,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.iterations < 1 {
            return Err(Error::InvalidParameter {
                what: "iterations",
                reason: "budget must be at least 1",
            });
        }
        if !(self.step_size > 0.0) || !self.step_size.is_finite() {
            return Err(Error::InvalidParameter {
                what: "step_size",
                reason: "must be a finite positive real",
            });
        }
        self.sinkhorn.validate()
    }
}

/// Recorded descent trajectory.
#[derive(Debug, Clone)]
pub struct FitTrace {
    pub loss_history: Vec<f64>,
    pub grad_norm_history: Vec<f64>,
    /// Barycenter decode of softmax(logits) at every recorded iteration.
    pub bc_history: Vec<LandmarkPoint>,
    /// GET_MAX decode of the raw logits at every recorded iteration.
    pub max_history: Vec<LandmarkPoint>,
    pub final_logits: Heatmap,
    pub final_bc: LandmarkPoint,
    pub final_max: LandmarkPoint,
    /// Loss left f64 range; the trace is truncated at the last finite entry.
    pub diverged: bool,
    /// Gradient norm fell below 1e-10.
    pub stopped_early: bool,
    /// Number of steps whose Sinkhorn solve hit its iteration cap.
    pub sinkhorn_unconverged_steps: u32,
}

fn initial_logits(problem: &FitProblem) -> Result<Vec<f64>> {
    let n = problem.height * problem.width;
    match problem.init {
        InitPreset::Zero => Ok(alloc::vec![0.0; n]),
        InitPreset::RandomSeeded { seed } => {
            let mut r = rng::seeded(seed);
            Ok((0..n).map(|_| rng::normal_f64(&mut r)).collect())
        }
        InitPreset::OffsetBlob { distance, sigma } => {
            if !(sigma > 0.0) || !sigma.is_finite() {
                return Err(Error::InvalidParameter {
                    what: "init blob sigma",
                    reason: "must be a finite positive real",
                });
            }
            let c = LandmarkPoint::new(
                problem.target_center.x + distance,
                problem.target_center.y,
            );
            if c.x < 0.0 || c.x > (problem.width - 1) as f64 {
                return Err(Error::OutOfBounds {
                    x: c.x,
                    y: c.y,
                    height: problem.height,
                    width: problem.width,
                });
            }
            let inv = 1.0 / (2.0 * sigma * sigma);
            let mut out = Vec::with_capacity(n);
            for y in 0..problem.height {
                let dy = y as f64 - c.y;
                for x in 0..problem.width {
                    let dx = x as f64 - c.x;
                    out.push(-(dx * dx + dy * dy) * inv);
                }
            }
            Ok(out)
        }
    }
}

struct WassersteinState {
    target: NormalizedHeatmap,
    engine: SinkhornEngine,
    warm: Option<(Vec<f64>, Vec<f64>)>,
    unconverged: u32,
}

enum LossState {
    Wasserstein(WassersteinState),
    L2Softmax(NormalizedHeatmap),
    L2Raw(Heatmap),
    JensenShannon(NormalizedHeatmap),
    SoftArgmax(LandmarkPoint),
}

impl LossState {
    fn eval(&mut self, logits: &Heatmap, cfg: &SinkhornConfig) -> Result<(f64, Vec<f64>)> {
        match self {
            LossState::Wasserstein(state) => {
                let p = softmax_normalize(logits);
                let warm = state
                    .warm
                    .as_ref()
                    .map(|(f, g)| (f.as_slice(), g.as_slice()));
                let sol = ot::sinkhorn_solve_with(&p, &state.target, cfg, warm, state.engine)?;
                if !sol.converged {
                    state.unconverged += 1;
                }
                let grad = sol.logit_gradient(p.values());
                state.warm = Some((sol.potential_source, sol.potential_target));
                Ok((sol.value, grad))
            }
            LossState::L2Softmax(target) => {
                let p = softmax_normalize(logits);
                let (v, grad_p) = l2_heatmap_loss(p.as_heatmap(), target.as_heatmap())?;
                Ok((v, ot::softmax_vjp(p.values(), &grad_p)))
            }
            LossState::L2Raw(target) => l2_heatmap_loss(logits, target),
            LossState::JensenShannon(target) => js_divergence_loss(logits, target),
            LossState::SoftArgmax(gt) => soft_argmax_loss(logits, *gt),
        }
    }
}

/// Plain gradient descent on the logits; the target side stays fixed. No
/// early stopping unless the gradient norm drops below 1e-10; a non-finite
/// loss truncates the trace and flags divergence.
pub fn fit(problem: &FitProblem) -> Result<FitTrace> {
    problem.validate()?;
    let normalized_target = make_normalized_target(
        problem.target_center,
        problem.target_sigma,
        problem.height,
        problem.width,
    )?;
    let mut state = match problem.loss {
        FitLoss::Wasserstein => {
            let n = problem.height * problem.width;
            let engine = if n > 1024 && problem.sinkhorn.epsilon >= SCALING_MIN_EPSILON {
                SinkhornEngine::Scaling
            } else {
                SinkhornEngine::LogDomain
            };
            LossState::Wasserstein(WassersteinState {
                target: normalized_target,
                engine,
                warm: None,
                unconverged: 0,
            })
        }
        FitLoss::L2Softmax => LossState::L2Softmax(normalized_target),
        FitLoss::L2Raw => {
            let spec = TargetSpec::new(
                problem.target_sigma,
                problem.height,
                problem.width,
                AmplitudeMode::PeakOne,
            )?;
            LossState::L2Raw(crate::heatmap::make_gaussian_target(problem.target_center, &spec)?.heatmap)
        }
        FitLoss::JensenShannon => LossState::JensenShannon(normalized_target),
        FitLoss::SoftArgmax => LossState::SoftArgmax(problem.target_center),
    };

    let mut logits = initial_logits(problem)?;
    let mut trace = FitTrace {
        loss_history: Vec::new(),
        grad_norm_history: Vec::new(),
        bc_history: Vec::new(),
        max_history: Vec::new(),
        final_logits: Heatmap::new(problem.height, problem.width, logits.clone())?,
        final_bc: LandmarkPoint::new(0.0, 0.0),
        final_max: LandmarkPoint::new(0.0, 0.0),
        diverged: false,
        stopped_early: false,
        sinkhorn_unconverged_steps: 0,
    };

    for _ in 0..problem.iterations {
        let hm = Heatmap::new(problem.height, problem.width, logits.clone())?;
        let (value, grad) = state.eval(&hm, &problem.sinkhorn)?;
        if !value.is_finite() {
            trace.diverged = true;
            break;
        }
        let norm = math::sqrt(grad.iter().map(|g| g * g).sum());
        let p = softmax_normalize(&hm);
        trace.loss_history.push(value);
        trace.grad_norm_history.push(norm);
        trace.bc_history.push(decode_get_bc(&p));
        trace.max_history.push(decode_get_max(&hm).point);
        if norm < 1e-10 {
            trace.stopped_early = true;
            break;
        }
        for (l, g) in logits.iter_mut().zip(grad.iter()) {
            *l -= problem.step_size * g;
        }
    }

    if let LossState::Wasserstein(ws) = &state {
        trace.sinkhorn_unconverged_steps = ws.unconverged;
    }
    let hm = Heatmap::new(problem.height, problem.width, logits)?;
    let p = softmax_normalize(&hm);
    trace.final_bc = decode_get_bc(&p);
    trace.final_max = decode_get_max(&hm).point;
    trace.final_logits = hm;
    Ok(trace)
}

/// One row of the spurious-activation table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpuriousRow {
    pub mass_fraction: f64,
    /// Measured barycenter displacement from the clean target's barycenter.
    pub bc_displacement: f64,
    /// Measured GET_MAX displacement from the clean target's argmax decode.
    pub max_displacement: f64,
    /// Mixture-linearity prediction `m * |bc_blob - bc_target|`.
    pub analytic_bc_displacement: f64,
}

#[derive(Debug, Clone)]
pub struct SpuriousStudy {
    pub rows: Vec<SpuriousRow>,
    /// Mass fraction above which the spurious peak strictly dominates the
    /// true peak, computed from the two discrete peak values.
    pub crossover_mass: f64,
    /// Distance between the target center and the blob center, pixels.
    pub blob_distance: f64,
}

const SPURIOUS_GRID: usize = 64;
const SPURIOUS_TARGET: (f64, f64) = (16.0, 32.0);
const SPURIOUS_BLOB: (f64, f64) = (46.0, 32.0);
const SPURIOUS_TARGET_SIGMA: f64 = 3.0;
const SPURIOUS_BLOB_SIGMA: f64 = 1.5;

/// Mixes a far-away spurious blob of mass `m` into a normalized target and
/// decodes with both decoders.
///
/// The barycenter moves linearly with the outlier mass while GET_MAX ignores
/// it until the spurious peak dominates — the mechanism behind barycenter
/// decoding being unusable on outputs with far-field activations.
pub fn spurious_activation_study(mass_fractions: &[f64]) -> Result<SpuriousStudy> {
    for &m in mass_fractions {
        if !(m > 0.0 && m < 0.5) {
            return Err(Error::InvalidParameter {
                what: "mass fraction",
                reason: "fractions must lie in (0, 0.5)",
            });
        }
    }
    let target = make_normalized_target(
        LandmarkPoint::new(SPURIOUS_TARGET.0, SPURIOUS_TARGET.1),
        SPURIOUS_TARGET_SIGMA,
        SPURIOUS_GRID,
        SPURIOUS_GRID,
    )?;
    let blob = make_normalized_target(
        LandmarkPoint::new(SPURIOUS_BLOB.0, SPURIOUS_BLOB.1),
        SPURIOUS_BLOB_SIGMA,
        SPURIOUS_GRID,
        SPURIOUS_GRID,
    )?;
    let bc_target = decode_get_bc(&target);
    let bc_blob = decode_get_bc(&blob);
    let max_target = decode_get_max(target.as_heatmap()).point;
    let analytic_distance = bc_blob.distance(&bc_target);

    let peak = |h: &NormalizedHeatmap| h.values().iter().cloned().fold(0.0f64, f64::max);
    let peak_t = peak(&target);
    let peak_b = peak(&blob);
    let crossover_mass = peak_t / (peak_t + peak_b);

    let mut rows = Vec::with_capacity(mass_fractions.len());
    for &m in mass_fractions {
        let values: Vec<f64> = target
            .values()
            .iter()
            .zip(blob.values().iter())
            .map(|(&t, &b)| (1.0 - m) * t + m * b)
            .collect();
        let mix = NormalizedHeatmap::new(Heatmap::new(SPURIOUS_GRID, SPURIOUS_GRID, values)?)?;
        let bc = decode_get_bc(&mix);
        let mx = decode_get_max(mix.as_heatmap()).point;
        rows.push(SpuriousRow {
            mass_fraction: m,
            bc_displacement: bc.distance(&bc_target),
            max_displacement: mx.distance(&max_target),
            analytic_bc_displacement: m * analytic_distance,
        });
    }
    Ok(SpuriousStudy {
        rows,
        crossover_mass,
        blob_distance: LandmarkPoint::new(SPURIOUS_BLOB.0, SPURIOUS_BLOB.1)
            .distance(&LandmarkPoint::new(SPURIOUS_TARGET.0, SPURIOUS_TARGET.1)),
    })
}
