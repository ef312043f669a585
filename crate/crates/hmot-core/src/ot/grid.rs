//! Euclidean ground cost on a pixel grid, held implicitly.
//!
//! Grid coordinates are divided by `max(H-1, W-1)` so costs live in a
//! size-invariant unit frame: the longest grid axis has length 1 regardless of
//! resolution. The full (H*W)^2 cost matrix is never materialized on Sinkhorn
//! paths; lookups go through a table indexed by the integer squared pixel
//! distance, which is exact and cheap.

use alloc::vec::Vec;

use crate::math;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GroundCost {
    height: usize,
    width: usize,
}

impl GroundCost {
    pub fn new(height: usize, width: usize) -> Result<Self> {
        if height == 0 || width == 0 || height * width < 2 {
            return Err(Error::GridTooSmall { height, width });
        }
        Ok(Self { height, width })
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn cells(&self) -> usize {
        self.height * self.width
    }

    /// The unit-frame divisor `max(H-1, W-1)`.
    pub fn normalization(&self) -> f64 {
        (self.height - 1).max(self.width - 1) as f64
    }

    /// Cost between two cells given as linear row-major indices.
    pub fn cost(&self, a: usize, b: usize) -> f64 {
        let (ay, ax) = (a / self.width, a % self.width);
        let (by, bx) = (b / self.width, b % self.width);
        math::hypot(ay as f64 - by as f64, ax as f64 - bx as f64) / self.normalization()
    }

    /// Largest possible integer squared pixel distance on this grid.
    pub(crate) fn max_d2(&self) -> usize {
        let dy = self.height - 1;
        let dx = self.width - 1;
        dy * dy + dx * dx
    }

    /// `lut[d2] = sqrt(d2) / max(H-1, W-1)` for every reachable integer
    /// squared distance.
    pub(crate) fn dist_lut(&self) -> Vec<f64> {
        let norm = self.normalization();
        (0..=self.max_d2())
            .map(|d2| math::sqrt(d2 as f64) / norm)
            .collect()
    }
}
