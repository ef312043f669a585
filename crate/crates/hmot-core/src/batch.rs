//! Batched operations over borrowed contiguous `f32` buffers.
//!
//! This is the surface foreign-function bindings wrap: shapes are explicit
//! `(count, height, width)`, buffers are row-major and heatmap-major, and
//! every slot is processed independently by the same code paths as the
//! single-instance API (so a batched call equals a loop of direct calls).
//!
//! Distribution-valued inputs arriving as `f32` cannot satisfy the crate's
//! 1e-9 normalization tolerance after storage rounding; slots whose sum is
//! within 1e-4 of 1 are accepted and exactly renormalized in f64, anything
//! further off is rejected.

use alloc::vec::Vec;

use crate::fit::FitLoss;
use crate::heatmap::{
    decode_get_bc, decode_get_max, make_gaussian_target, DecodeMethod, Heatmap, LandmarkPoint,
    NormalizedHeatmap, TargetSpec,
};
use crate::math;
use crate::ot::{
    self, js_divergence_loss, l2_heatmap_loss, soft_argmax_loss, softmax_normalize, SinkhornConfig,
};
use crate::{Error, Result};

/// Acceptance band for `f32`-borne distributions before exact renormalization.
pub const F32_NORMALIZATION_TOL: f64 = 1e-4;

fn check_len(buf: &[f32], count: usize, height: usize, width: usize) -> Result<()> {
    if buf.len() != count * height * width {
        return Err(Error::LengthMismatch {
            left: buf.len(),
            right: count * height * width,
        });
    }
    Ok(())
}

fn slot_heatmap(buf: &[f32], slot: usize, height: usize, width: usize) -> Result<Heatmap> {
    let n = height * width;
    let values: Vec<f64> = buf[slot * n..(slot + 1) * n]
        .iter()
        .map(|&v| v as f64)
        .collect();
    Heatmap::new(height, width, values)
}

/// Exact renormalization of a distribution that lost precision in f32
/// storage; rejects anything more than [`F32_NORMALIZATION_TOL`] off.
pub fn renormalize(hm: Heatmap) -> Result<NormalizedHeatmap> {
    let sum: f64 = hm.values().iter().sum();
    if sum <= 0.0 {
        return Err(Error::DegenerateMass);
    }
    if math::abs(sum - 1.0) > F32_NORMALIZATION_TOL {
        return Err(Error::NotNormalized { sum });
    }
    let (h, w) = hm.shape();
    let values: Vec<f64> = hm.values().iter().map(|v| v / sum).collect();
    NormalizedHeatmap::new(Heatmap::new(h, w, values)?)
}

/// Per-heatmap loss values and logit gradients for a batch.
///
/// `pred_logits` holds raw logits per slot. `targets` holds, per slot: a
/// normalized target heatmap for the distribution losses, a raw target for
/// `L2Raw`, or any normalized heatmap whose barycenter is the ground-truth
/// point for `SoftArgmax`.
pub fn loss_and_grad(
    pred_logits: &[f32],
    targets: &[f32],
    count: usize,
    height: usize,
    width: usize,
    loss: FitLoss,
    cfg: &SinkhornConfig,
) -> Result<(Vec<f32>, Vec<f32>)> {
    check_len(pred_logits, count, height, width)?;
    check_len(targets, count, height, width)?;
    let mut values = Vec::with_capacity(count);
    let mut grads = Vec::with_capacity(count * height * width);
    for slot in 0..count {
        let logits = slot_heatmap(pred_logits, slot, height, width)?;
        let target = slot_heatmap(targets, slot, height, width)?;
        let (value, grad) = match loss {
            FitLoss::Wasserstein => {
                let p = softmax_normalize(&logits);
                let t = renormalize(target)?;
                let r = ot::sinkhorn_w1(&p, &t, cfg)?;
                (r.value, r.gradient)
            }
            FitLoss::L2Softmax => {
                let p = softmax_normalize(&logits);
                let t = renormalize(target)?;
                let (v, grad_p) = l2_heatmap_loss(p.as_heatmap(), t.as_heatmap())?;
                (v, ot::softmax_vjp(p.values(), &grad_p))
            }
            FitLoss::L2Raw => l2_heatmap_loss(&logits, &target)?,
            FitLoss::JensenShannon => {
                let t = renormalize(target)?;
                js_divergence_loss(&logits, &t)?
            }
            FitLoss::SoftArgmax => {
                let t = renormalize(target)?;
                soft_argmax_loss(&logits, decode_get_bc(&t))?
            }
        };
        values.push(value as f32);
        grads.extend(grad.iter().map(|&g| g as f32));
    }
    Ok((values, grads))
}

/// Batched decode to a `count x 2` coordinate array `(x, y)` in image frame.
///
/// With `inputs_are_logits` the slots are softmaxed first; otherwise `GetBc`
/// requires (f32-tolerance) normalized slots.
pub fn decode(
    heatmaps: &[f32],
    count: usize,
    height: usize,
    width: usize,
    method: DecodeMethod,
    scale: f64,
    inputs_are_logits: bool,
) -> Result<Vec<f32>> {
    check_len(heatmaps, count, height, width)?;
    if !(scale > 0.0) || !scale.is_finite() {
        return Err(Error::InvalidParameter {
            what: "scale",
            reason: "must be a finite positive real",
        });
    }
    let mut out = Vec::with_capacity(count * 2);
    for slot in 0..count {
        let hm = slot_heatmap(heatmaps, slot, height, width)?;
        let p = match method {
            DecodeMethod::GetMax => decode_get_max(&hm).point,
            DecodeMethod::GetBc => {
                let n = if inputs_are_logits {
                    softmax_normalize(&hm)
                } else {
                    renormalize(hm)?
                };
                decode_get_bc(&n)
            }
        };
        out.push((p.x * scale) as f32);
        out.push((p.y * scale) as f32);
    }
    Ok(out)
}

/// Batched Gaussian target synthesis from `count x 2` centers `(x, y)` in
/// heatmap frame. Returns the heatmap buffer and per-slot boundary warnings.
pub fn make_targets(centers: &[f32], spec: &TargetSpec) -> Result<(Vec<f32>, Vec<bool>)> {
    if centers.len() % 2 != 0 {
        return Err(Error::LengthMismatch {
            left: centers.len(),
            right: centers.len() + 1,
        });
    }
    let count = centers.len() / 2;
    let mut data = Vec::with_capacity(count * spec.height * spec.width);
    let mut warnings = Vec::with_capacity(count);
    for slot in 0..count {
        let c = LandmarkPoint::new(centers[slot * 2] as f64, centers[slot * 2 + 1] as f64);
        let t = make_gaussian_target(c, spec)?;
        warnings.push(t.boundary_warning);
        data.extend(t.heatmap.values().iter().map(|&v| v as f32));
    }
    Ok((data, warnings))
}
