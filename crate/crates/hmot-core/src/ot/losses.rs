//! Softmax front-end and the reference losses: pixel-wise L2, Jensen-Shannon
//! divergence, and soft-argmax coordinate regression.
//!
//! All gradients are with respect to raw logits, chain-ruled through the
//! softmax where the loss consumes a distribution.

use alloc::vec::Vec;

use crate::heatmap::{Heatmap, LandmarkPoint, NormalizedHeatmap};
use crate::math;
use crate::{Error, Result};

/// Numerically stable softmax over the whole grid: `exp(x - max) / sum`.
///
/// Monotone, so the argmax cell is preserved; the output sums to 1 within a
/// few ulps. Non-finite inputs are impossible here because [`Heatmap`]
/// validates them at construction, naming the offending cell.
pub fn softmax_normalize(logits: &Heatmap) -> NormalizedHeatmap {
    let mut max = f64::NEG_INFINITY;
    for &v in logits.values() {
        if v > max {
            max = v;
        }
    }
    let mut vals: Vec<f64> = logits.values().iter().map(|&v| math::exp(v - max)).collect();
    let sum: f64 = vals.iter().sum();
    for v in vals.iter_mut() {
        *v /= sum;
    }
    NormalizedHeatmap::new(
        Heatmap::new(logits.height(), logits.width(), vals)
            .expect("softmax preserves shape and finiteness"),
    )
    .expect("softmax output is normalized by construction")
}

/// Vector-Jacobian product of the softmax: `out_k = p_k (v_k - <p, v>)`.
///
/// Constant shifts of `v` vanish, which is what makes dual-potential gauge
/// freedom harmless. Cells where `p_k` underflowed to zero get a zero
/// gradient (their true derivative is below f64 resolution).
pub(crate) fn softmax_vjp(p: &[f64], v: &[f64]) -> Vec<f64> {
    let mut dot = 0.0;
    for (pk, vk) in p.iter().zip(v.iter()) {
        if *pk > 0.0 {
            dot += pk * vk;
        }
    }
    p.iter()
        .zip(v.iter())
        .map(|(&pk, &vk)| if pk > 0.0 { pk * (vk - dot) } else { 0.0 })
        .collect()
}

/// Pixel-wise squared-error heatmap loss: `sum (pred - target)^2` with
/// gradient `2 (pred - target)`. Operates on raw values, no softmax.
pub fn l2_heatmap_loss(pred: &Heatmap, target: &Heatmap) -> Result<(f64, Vec<f64>)> {
    pred.same_shape(target)?;
    let mut value = 0.0;
    let grad: Vec<f64> = pred
        .values()
        .iter()
        .zip(target.values().iter())
        .map(|(&p, &t)| {
            let d = p - t;
            value += d * d;
            2.0 * d
        })
        .collect();
    Ok((value, grad))
}

/// Jensen-Shannon divergence between two distributions (natural log, so the
/// value lives in `[0, ln 2]`). Zero-mass cells contribute zero by the usual
/// `0 ln 0 = 0` convention.
pub fn js_divergence(p: &NormalizedHeatmap, q: &NormalizedHeatmap) -> Result<f64> {
    p.as_heatmap().same_shape(q.as_heatmap())?;
    let mut acc = 0.0;
    for (&pk, &qk) in p.values().iter().zip(q.values().iter()) {
        let m = 0.5 * (pk + qk);
        if pk > 0.0 {
            acc += 0.5 * pk * math::ln(pk / m);
        }
        if qk > 0.0 {
            acc += 0.5 * qk * math::ln(qk / m);
        }
    }
    Ok(acc.max(0.0))
}

/// Jensen-Shannon loss on softmaxed logits against a normalized target, with
/// the analytic logit gradient (`dJS/dp_k = ln(p_k / m_k) / 2` through the
/// softmax VJP).
pub fn js_divergence_loss(
    logits_pred: &Heatmap,
    target: &NormalizedHeatmap,
) -> Result<(f64, Vec<f64>)> {
    logits_pred.same_shape(target.as_heatmap())?;
    let p = softmax_normalize(logits_pred);
    let value = js_divergence(&p, target)?;
    let v: Vec<f64> = p
        .values()
        .iter()
        .zip(target.values().iter())
        .map(|(&pk, &qk)| {
            if pk > 0.0 {
                0.5 * math::ln(pk / (0.5 * (pk + qk)))
            } else {
                0.0
            }
        })
        .collect();
    Ok((value, softmax_vjp(p.values(), &v)))
}

/// Soft-argmax loss: squared Euclidean distance, in the unit cost frame,
/// between the barycenter of the softmaxed logits and a ground-truth point.
pub fn soft_argmax_loss(logits_pred: &Heatmap, gt: LandmarkPoint) -> Result<(f64, Vec<f64>)> {
    let (h, w) = logits_pred.shape();
    if !gt.x.is_finite()
        || !gt.y.is_finite()
        || gt.x < 0.0
        || gt.y < 0.0
        || gt.x > (w - 1) as f64
        || gt.y > (h - 1) as f64
    {
        return Err(Error::OutOfBounds {
            x: gt.x,
            y: gt.y,
            height: h,
            width: w,
        });
    }
    let p = softmax_normalize(logits_pred);
    let bc = crate::heatmap::decode_get_bc(&p);
    let norm = (h - 1).max(w - 1) as f64;
    let ex = (bc.x - gt.x) / norm;
    let ey = (bc.y - gt.y) / norm;
    let value = ex * ex + ey * ey;
    // d bc_x / d logit_k = p_k (x_k - bc_x); same for y.
    let scale = 2.0 / norm;
    let grad: Vec<f64> = p
        .values()
        .iter()
        .enumerate()
        .map(|(k, &pk)| {
            let (ky, kx) = (k / w, k % w);
            pk * scale * (ex * (kx as f64 - bc.x) + ey * (ky as f64 - bc.y))
        })
        .collect();
    Ok((value, grad))
}
