//! Heatmap grids, Gaussian target synthesis, and coordinate decoding.
//!
//! Coordinate convention used everywhere in this crate: `x` is the column
//! index, `y` is the row index, the origin is the top-left *cell center*, and
//! decoded sub-pixel coordinates live in cell-center units.

use alloc::vec;
use alloc::vec::Vec;

use crate::math;
use crate::{Error, Result};

/// Tolerance on `|sum - 1|` for a heatmap to count as normalized.
pub const NORMALIZATION_TOL: f64 = 1e-9;

/// A non-negative-or-arbitrary H x W grid of finite activations for one
/// landmark, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Heatmap {
    height: usize,
    width: usize,
    values: Vec<f64>,
}

impl Heatmap {
    /// Builds a heatmap, validating that every value is finite and the grid
    /// carries at least two cells (so the ground-cost unit frame exists).
    pub fn new(height: usize, width: usize, values: Vec<f64>) -> Result<Self> {
        if height == 0 || width == 0 || height * width < 2 {
            return Err(Error::GridTooSmall { height, width });
        }
        if values.len() != height * width {
            return Err(Error::LengthMismatch {
                left: values.len(),
                right: height * width,
            });
        }
        for (i, v) in values.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::NonFinite {
                    row: i / width,
                    col: i % width,
                });
            }
        }
        Ok(Self {
            height,
            width,
            values,
        })
    }

    pub fn from_fn(height: usize, width: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let mut values = Vec::with_capacity(height * width);
        for y in 0..height {
            for x in 0..width {
                values.push(f(y, x));
            }
        }
        Self::new(height, width, values)
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, y: usize, x: usize) -> f64 {
        self.values[y * self.width + x]
    }

    pub(crate) fn same_shape(&self, other: &Heatmap) -> Result<()> {
        if self.shape() != other.shape() {
            return Err(Error::ShapeMismatch {
                expected: self.shape(),
                got: other.shape(),
            });
        }
        Ok(())
    }
}

/// A heatmap checked to be a probability distribution: all values >= 0 and
/// summing to 1 within [`NORMALIZATION_TOL`].
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedHeatmap(Heatmap);

impl NormalizedHeatmap {
    pub fn new(hm: Heatmap) -> Result<Self> {
        let mut sum = 0.0;
        for (i, &v) in hm.values.iter().enumerate() {
            if v < 0.0 {
                return Err(Error::NegativeValue {
                    row: i / hm.width,
                    col: i % hm.width,
                    value: v,
                });
            }
            sum += v;
        }
        if sum == 0.0 {
            return Err(Error::DegenerateMass);
        }
        if math::abs(sum - 1.0) > NORMALIZATION_TOL {
            return Err(Error::NotNormalized { sum });
        }
        Ok(Self(hm))
    }

    pub fn as_heatmap(&self) -> &Heatmap {
        &self.0
    }

    pub fn into_heatmap(self) -> Heatmap {
        self.0
    }

    pub fn height(&self) -> usize {
        self.0.height
    }

    pub fn width(&self) -> usize {
        self.0.width
    }

    pub fn shape(&self) -> (usize, usize) {
        self.0.shape()
    }

    pub fn values(&self) -> &[f64] {
        &self.0.values
    }
}

/// A 2D point in heatmap-frame pixel coordinates (sub-pixel allowed).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LandmarkPoint {
    pub x: f64,
    pub y: f64,
}

impl LandmarkPoint {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: &LandmarkPoint) -> f64 {
        math::hypot(self.x - other.x, self.y - other.y)
    }
}

/// How a Gaussian target is scaled.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AmplitudeMode {
    /// Maximum grid value scaled to exactly 1 (conventional L2 training target).
    PeakOne,
    /// Values divided by their sum, producing a distribution for the
    /// Wasserstein / divergence losses.
    SoftmaxNormalized,
}

/// Parameters of a Gaussian target heatmap.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TargetSpec {
    pub sigma: f64,
    pub height: usize,
    pub width: usize,
    pub amplitude: AmplitudeMode,
}

impl TargetSpec {
    pub fn new(sigma: f64, height: usize, width: usize, amplitude: AmplitudeMode) -> Result<Self> {
        if !(sigma > 0.0) || !sigma.is_finite() {
            return Err(Error::InvalidParameter {
                what: "sigma",
                reason: "must be a finite positive real",
            });
        }
        if height == 0 || width == 0 || height * width < 2 {
            return Err(Error::GridTooSmall { height, width });
        }
        Ok(Self {
            sigma,
            height,
            width,
            amplitude,
        })
    }

    /// True when `center` lies within `3 * sigma` of any grid edge, i.e. the
    /// Gaussian visibly touches the map boundary.
    pub fn near_boundary(&self, center: LandmarkPoint) -> bool {
        let margin = 3.0 * self.sigma;
        center.x < margin
            || center.y < margin
            || center.x > (self.width - 1) as f64 - margin
            || center.y > (self.height - 1) as f64 - margin
    }
}

/// A synthesized Gaussian target plus its boundary-proximity warning.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianTarget {
    pub heatmap: Heatmap,
    /// Set when the center is within 3 sigma of an edge; the tails are then
    /// visibly truncated and downstream decodes lose accuracy.
    pub boundary_warning: bool,
}

/// Evaluates `exp(-|q - center|^2 / (2 sigma^2))` at every integer grid
/// position and scales per `spec.amplitude`.
///
/// The center must lie inside the grid (`0 <= x <= W-1`, `0 <= y <= H-1`).
pub fn make_gaussian_target(center: LandmarkPoint, spec: &TargetSpec) -> Result<GaussianTarget> {
    if !center.x.is_finite() || !center.y.is_finite() {
        return Err(Error::NonFinite { row: 0, col: 0 });
    }
    if center.x < 0.0
        || center.y < 0.0
        || center.x > (spec.width - 1) as f64
        || center.y > (spec.height - 1) as f64
    {
        return Err(Error::OutOfBounds {
            x: center.x,
            y: center.y,
            height: spec.height,
            width: spec.width,
        });
    }
    let inv_two_sigma2 = 1.0 / (2.0 * spec.sigma * spec.sigma);
    let mut values = Vec::with_capacity(spec.height * spec.width);
    let mut max = 0.0f64;
    let mut sum = 0.0f64;
    for y in 0..spec.height {
        let dy = y as f64 - center.y;
        for x in 0..spec.width {
            let dx = x as f64 - center.x;
            let v = math::exp(-(dx * dx + dy * dy) * inv_two_sigma2);
            max = max.max(v);
            sum += v;
            values.push(v);
        }
    }
    let scale = match spec.amplitude {
        AmplitudeMode::PeakOne => 1.0 / max,
        AmplitudeMode::SoftmaxNormalized => 1.0 / sum,
    };
    for v in &mut values {
        *v *= scale;
    }
    Ok(GaussianTarget {
        heatmap: Heatmap::new(spec.height, spec.width, values)?,
        boundary_warning: spec.near_boundary(center),
    })
}

/// Convenience: a softmax-normalized Gaussian target as a [`NormalizedHeatmap`].
pub fn make_normalized_target(center: LandmarkPoint, sigma: f64, height: usize, width: usize) -> Result<NormalizedHeatmap> {
    let spec = TargetSpec::new(sigma, height, width, AmplitudeMode::SoftmaxNormalized)?;
    NormalizedHeatmap::new(make_gaussian_target(center, &spec)?.heatmap)
}

/// Result of `GET_MAX` decoding.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaxDecode {
    pub point: LandmarkPoint,
    /// Set for an all-constant heatmap, for which the argmax is meaningless;
    /// the point is then the grid center.
    pub degenerate: bool,
}

/// `GET_MAX`: locates the maximum cell, then shifts a quarter pixel along each
/// axis toward the strictly larger of the two axis neighbors. Boundary cells
/// and exact ties get no shift on that axis. Equal maxima resolve to the first
/// in row-major order.
pub fn decode_get_max(hm: &Heatmap) -> MaxDecode {
    let (h, w) = hm.shape();
    let vals = hm.values();
    let mut best = 0usize;
    for (i, &v) in vals.iter().enumerate() {
        if v > vals[best] {
            best = i;
        }
    }
    let constant = vals.iter().all(|&v| v == vals[0]);
    if constant {
        return MaxDecode {
            point: LandmarkPoint::new((w - 1) as f64 / 2.0, (h - 1) as f64 / 2.0),
            degenerate: true,
        };
    }
    let (by, bx) = (best / w, best % w);
    let mut x = bx as f64;
    let mut y = by as f64;
    if bx > 0 && bx + 1 < w {
        let (left, right) = (hm.get(by, bx - 1), hm.get(by, bx + 1));
        if right > left {
            x += 0.25;
        } else if left > right {
            x -= 0.25;
        }
    }
    if by > 0 && by + 1 < h {
        let (up, down) = (hm.get(by - 1, bx), hm.get(by + 1, bx));
        if down > up {
            y += 0.25;
        } else if up > down {
            y -= 0.25;
        }
    }
    MaxDecode {
        point: LandmarkPoint::new(x, y),
        degenerate: false,
    }
}

/// `GET_BC`: the spatial barycenter `sum_q q * hm(q)` of a normalized heatmap.
///
/// Always lands inside the grid (it is a convex combination of grid points).
/// Callers holding raw logits must softmax first.
pub fn decode_get_bc(hm: &NormalizedHeatmap) -> LandmarkPoint {
    let (h, w) = hm.shape();
    let vals = hm.values();
    let (mut bx, mut by) = (0.0f64, 0.0f64);
    let mut i = 0usize;
    for y in 0..h {
        for x in 0..w {
            let p = vals[i];
            bx += x as f64 * p;
            by += y as f64 * p;
            i += 1;
        }
    }
    LandmarkPoint::new(bx, by)
}

/// Which decoder to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DecodeMethod {
    GetMax,
    GetBc,
}

/// Decodes every heatmap and maps coordinates to image frame by multiplying
/// with `scale`. `GET_BC` rejects members that are not normalized; an empty
/// list yields an empty set.
pub fn decode_batch(
    hms: &[Heatmap],
    method: DecodeMethod,
    scale: f64,
) -> Result<Vec<LandmarkPoint>> {
    if !(scale > 0.0) || !scale.is_finite() {
        return Err(Error::InvalidParameter {
            what: "scale",
            reason: "must be a finite positive real",
        });
    }
    if let Some(first) = hms.first() {
        for hm in hms {
            first.same_shape(hm)?;
        }
    }
    let mut out = Vec::with_capacity(hms.len());
    for hm in hms {
        let p = match method {
            DecodeMethod::GetMax => decode_get_max(hm).point,
            DecodeMethod::GetBc => decode_get_bc(&NormalizedHeatmap::new(hm.clone())?),
        };
        out.push(LandmarkPoint::new(p.x * scale, p.y * scale));
    }
    Ok(out)
}

/// Uniform heatmap, handy for tests and degenerate cases.
pub fn uniform(height: usize, width: usize) -> Result<NormalizedHeatmap> {
    let n = height * width;
    NormalizedHeatmap::new(Heatmap::new(height, width, vec![1.0 / n as f64; n])?)
}

/// Point mass at a single cell.
pub fn point_mass(height: usize, width: usize, y: usize, x: usize) -> Result<NormalizedHeatmap> {
    let mut values = vec![0.0; height * width];
    values[y * width + x] = 1.0;
    NormalizedHeatmap::new(Heatmap::new(height, width, values)?)
}
