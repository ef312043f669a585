//! Landmark-localization evaluation: NME, failure rates, CED, AUC.
//!
//! Error for one landmark is the Euclidean distance to ground truth divided
//! by a per-image normalization distance (inter-ocular or bounding-box
//! width). Failure counting uses strict inequality (`NME > theta`): an error
//! sitting exactly on the threshold is not a failure. Landmarks flagged
//! invisible are excluded from every aggregate.

use alloc::vec::Vec;

use crate::heatmap::LandmarkPoint;
use crate::{Error, Result};

/// Ordered landmarks for one image, in image-frame pixels.
#[derive(Debug, Clone, PartialEq)]
pub struct LandmarkSet {
    points: Vec<LandmarkPoint>,
    visibility: Option<Vec<bool>>,
}

impl LandmarkSet {
    pub fn new(points: Vec<LandmarkPoint>, visibility: Option<Vec<bool>>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::EmptyInput("landmark set"));
        }
        for p in &points {
            if !p.x.is_finite() || !p.y.is_finite() {
                return Err(Error::NonFinite { row: 0, col: 0 });
            }
        }
        if let Some(v) = &visibility {
            if v.len() != points.len() {
                return Err(Error::LengthMismatch {
                    left: v.len(),
                    right: points.len(),
                });
            }
        }
        Ok(Self { points, visibility })
    }

    pub fn points(&self) -> &[LandmarkPoint] {
        &self.points
    }

    pub fn visibility(&self) -> Option<&[bool]> {
        self.visibility.as_deref()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn visible(&self, j: usize) -> bool {
        self.visibility.as_ref().map_or(true, |v| v[j])
    }
}

/// How the per-image normalization distance `d_i` is produced.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NormalizationRule {
    /// Distance between two ground-truth landmarks (the eye points).
    InterOcular { left: usize, right: usize },
    /// Face bounding-box width supplied per image.
    BboxWidth { width: f64 },
    /// A direct distance.
    Explicit { distance: f64 },
}

impl NormalizationRule {
    pub fn resolve(&self, gt: &LandmarkSet) -> Result<f64> {
        let d = match *self {
            NormalizationRule::InterOcular { left, right } => {
                let m = gt.len();
                if left >= m || right >= m {
                    return Err(Error::MappingIndex {
                        index: left.max(right),
                        len: m,
                    });
                }
                gt.points[left].distance(&gt.points[right])
            }
            NormalizationRule::BboxWidth { width } => width,
            NormalizationRule::Explicit { distance } => distance,
        };
        if !(d > 0.0) || !d.is_finite() {
            return Err(Error::BadNormalization { value: d });
        }
        Ok(d)
    }
}

/// One image's prediction / ground-truth pair with its resolved
/// normalization distance.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalEntry {
    pub pred: LandmarkSet,
    pub gt: LandmarkSet,
    pub norm_distance: f64,
}

impl EvalEntry {
    pub fn new(pred: LandmarkSet, gt: LandmarkSet, rule: &NormalizationRule) -> Result<Self> {
        if pred.len() != gt.len() {
            return Err(Error::LengthMismatch {
                left: pred.len(),
                right: gt.len(),
            });
        }
        let norm_distance = rule.resolve(&gt)?;
        Ok(Self {
            pred,
            gt,
            norm_distance,
        })
    }

    /// A landmark pair participates only when neither side flags it invisible.
    fn pair_visible(&self, j: usize) -> bool {
        self.pred.visible(j) && self.gt.visible(j)
    }
}

/// A full prediction/ground-truth pairing over N images.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalPairing {
    entries: Vec<EvalEntry>,
}

impl EvalPairing {
    pub fn new(entries: Vec<EvalEntry>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::EmptyInput("evaluation pairing"));
        }
        let m = entries[0].pred.len();
        for e in &entries {
            if e.pred.len() != m {
                return Err(Error::LengthMismatch {
                    left: e.pred.len(),
                    right: m,
                });
            }
        }
        Ok(Self { entries })
    }

    pub fn entries(&self) -> &[EvalEntry] {
        &self.entries
    }

    pub fn images(&self) -> usize {
        self.entries.len()
    }

    pub fn landmarks(&self) -> usize {
        self.entries[0].pred.len()
    }
}

/// Normalized error of a single landmark: `|pred - gt|_2 / d`.
pub fn nme_landmark(pred: LandmarkPoint, gt: LandmarkPoint, d: f64) -> Result<f64> {
    if !(d > 0.0) || !d.is_finite() {
        return Err(Error::BadNormalization { value: d });
    }
    Ok(pred.distance(&gt) / d)
}

/// Aggregated evaluation over one pairing.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    /// `NME_{i,j}`; `None` where the pair is flagged invisible.
    pub nme_per_landmark: Vec<Vec<Option<f64>>>,
    /// Mean over visible landmarks per image; `None` if none are visible.
    pub nme_per_image: Vec<Option<f64>>,
    /// Mean over images of the per-image means.
    pub nme: f64,
    /// Image-wise failure rate per requested threshold.
    pub fr_image: Vec<(f64, f64)>,
    /// Landmark-wise failure rate per requested threshold.
    pub fr_landmark: Vec<(f64, f64)>,
    /// Landmark-wise CED `(theta, 1 - FR^L_theta)` on the supplied grid.
    pub ced: Vec<(f64, f64)>,
    /// Image-wise CED on the same grid.
    pub ced_image: Vec<(f64, f64)>,
    /// Trapezoidal integral of the landmark-wise CED over the grid, divided
    /// by the grid ceiling.
    pub auc: f64,
    pub auc_ceiling: f64,
}

fn fr_image_at(nme_per_image: &[Option<f64>], theta: f64) -> f64 {
    let mut n = 0usize;
    let mut fails = 0usize;
    for v in nme_per_image.iter().flatten() {
        n += 1;
        if *v > theta {
            fails += 1;
        }
    }
    fails as f64 / n as f64
}

fn fr_landmark_at(nme: &[Vec<Option<f64>>], m: usize, theta: f64) -> f64 {
    let mut acc = 0.0;
    let mut landmarks_counted = 0usize;
    for j in 0..m {
        let mut n = 0usize;
        let mut fails = 0usize;
        for row in nme {
            if let Some(v) = row[j] {
                n += 1;
                if v > theta {
                    fails += 1;
                }
            }
        }
        if n > 0 {
            acc += fails as f64 / n as f64;
            landmarks_counted += 1;
        }
    }
    acc / landmarks_counted as f64
}

/// Computes every metric over the pairing.
///
/// `ced_grid` must be strictly increasing and start at 0 (the AUC is defined
/// over `[0, theta_max]`).
pub fn evaluate(
    pairing: &EvalPairing,
    thresholds: &[f64],
    ced_grid: &[f64],
) -> Result<EvalReport> {
    if ced_grid.len() < 2 || ced_grid[0] != 0.0 {
        return Err(Error::InvalidParameter {
            what: "ced_grid",
            reason: "must start at 0 and contain at least two points",
        });
    }
    for w in ced_grid.windows(2) {
        if !(w[1] > w[0]) {
            return Err(Error::InvalidParameter {
                what: "ced_grid",
                reason: "must be strictly increasing",
            });
        }
    }

    let n = pairing.images();
    let m = pairing.landmarks();
    let mut nme_per_landmark: Vec<Vec<Option<f64>>> = Vec::with_capacity(n);
    for e in pairing.entries() {
        let mut row = Vec::with_capacity(m);
        for j in 0..m {
            if e.pair_visible(j) {
                row.push(Some(nme_landmark(
                    e.pred.points[j],
                    e.gt.points[j],
                    e.norm_distance,
                )?));
            } else {
                row.push(None);
            }
        }
        nme_per_landmark.push(row);
    }

    let nme_per_image: Vec<Option<f64>> = nme_per_landmark
        .iter()
        .map(|row| {
            let mut sum = 0.0;
            let mut count = 0usize;
            for v in row.iter().flatten() {
                sum += v;
                count += 1;
            }
            (count > 0).then(|| sum / count as f64)
        })
        .collect();

    let mut nme_sum = 0.0;
    let mut nme_count = 0usize;
    for v in nme_per_image.iter().flatten() {
        nme_sum += v;
        nme_count += 1;
    }
    if nme_count == 0 {
        return Err(Error::EmptyInput("no visible landmarks in pairing"));
    }
    let nme = nme_sum / nme_count as f64;

    let fr_image: Vec<(f64, f64)> = thresholds
        .iter()
        .map(|&t| (t, fr_image_at(&nme_per_image, t)))
        .collect();
    let fr_landmark: Vec<(f64, f64)> = thresholds
        .iter()
        .map(|&t| (t, fr_landmark_at(&nme_per_landmark, m, t)))
        .collect();

    let ced: Vec<(f64, f64)> = ced_grid
        .iter()
        .map(|&t| (t, 1.0 - fr_landmark_at(&nme_per_landmark, m, t)))
        .collect();
    let ced_image: Vec<(f64, f64)> = ced_grid
        .iter()
        .map(|&t| (t, 1.0 - fr_image_at(&nme_per_image, t)))
        .collect();

    let ceiling = *ced_grid.last().expect("grid has at least two points");
    let mut integral = 0.0;
    for w in ced.windows(2) {
        integral += 0.5 * (w[0].1 + w[1].1) * (w[1].0 - w[0].0);
    }
    let auc = integral / ceiling;

    Ok(EvalReport {
        nme_per_landmark,
        nme_per_image,
        nme,
        fr_image,
        fr_landmark,
        ced,
        ced_image,
        auc,
        auc_ceiling: ceiling,
    })
}

/// Restriction of a pairing to the common landmarks of two annotation
/// formats, as `(pred_index, gt_index)` pairs applied in order.
#[derive(Debug, Clone, PartialEq)]
pub struct LandmarkMapping {
    pairs: Vec<(usize, usize)>,
    pred_len: usize,
    gt_len: usize,
}

impl LandmarkMapping {
    pub fn new(pred_len: usize, gt_len: usize, pairs: Vec<(usize, usize)>) -> Result<Self> {
        if pairs.is_empty() {
            return Err(Error::EmptyInput("landmark mapping"));
        }
        for &(p, g) in &pairs {
            if p >= pred_len {
                return Err(Error::MappingIndex {
                    index: p,
                    len: pred_len,
                });
            }
            if g >= gt_len {
                return Err(Error::MappingIndex {
                    index: g,
                    len: gt_len,
                });
            }
        }
        Ok(Self {
            pairs,
            pred_len,
            gt_len,
        })
    }

    pub fn identity(len: usize) -> Result<Self> {
        Self::new(len, len, (0..len).map(|k| (k, k)).collect())
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    /// Projects every entry onto the mapped pairs, order preserved.
    /// Normalization distances were resolved on the full ground-truth format
    /// and are kept as-is.
    pub fn apply(&self, pairing: &EvalPairing) -> Result<EvalPairing> {
        let mut entries = Vec::with_capacity(pairing.images());
        for e in pairing.entries() {
            if e.pred.len() != self.pred_len || e.gt.len() != self.gt_len {
                return Err(Error::LengthMismatch {
                    left: e.pred.len(),
                    right: self.pred_len,
                });
            }
            let mut pred_pts = Vec::with_capacity(self.pairs.len());
            let mut gt_pts = Vec::with_capacity(self.pairs.len());
            let mut pred_vis = Vec::with_capacity(self.pairs.len());
            let mut gt_vis = Vec::with_capacity(self.pairs.len());
            for &(pi, gi) in &self.pairs {
                pred_pts.push(e.pred.points[pi]);
                gt_pts.push(e.gt.points[gi]);
                pred_vis.push(e.pred.visible(pi));
                gt_vis.push(e.gt.visible(gi));
            }
            let pred = LandmarkSet::new(pred_pts, e.pred.visibility.is_some().then_some(pred_vis))?;
            let gt = LandmarkSet::new(gt_pts, e.gt.visibility.is_some().then_some(gt_vis))?;
            entries.push(EvalEntry {
                pred,
                gt,
                norm_distance: e.norm_distance,
            });
        }
        EvalPairing::new(entries)
    }
}
