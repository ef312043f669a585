//! # hmot-core
//!
//! Numerical core for heatmap-based landmark localization built around the 2D
//! Wasserstein-1 (earth mover's) distance between per-landmark activation
//! grids.
//!
//! The crate provides:
//!
//! - [`ot`] — discrete optimal transport on pixel grids: an exact
//!   linear-programming oracle for small grids, an entropic Sinkhorn solver in
//!   the stabilized log domain with analytic gradients through a softmax
//!   front-end, and the reference L2 / Jensen-Shannon / soft-argmax losses.
//! - [`heatmap`] — Gaussian target-heatmap synthesis and the two coordinate
//!   decoders: `GET_MAX` (argmax with quarter-pixel correction) and `GET_BC`
//!   (spatial barycenter).
//! - [`metrics`] — NME, image-/landmark-wise failure rates, CED curves and AUC
//!   over prediction/ground-truth landmark pairings, with common-landmark
//!   projection between annotation formats.
//! - [`perturb`] — seeded synthetic robustness perturbations: random
//!   elliptical occlusion and nose-track-directed linear motion blur.
//! - [`fit`] — a desk-scale gradient-descent harness that optimizes logit
//!   fields under each loss, isolating loss-function behaviour from any
//!   network architecture.
//! - [`batch`] — batched operations over borrowed contiguous `f32` buffers,
//!   the surface intended for foreign-function bindings.
//!
//! Everything is a pure function of its inputs: no global state, no hidden
//! randomness (RNG seeds are explicit), deterministic results. The crate is
//! `no_std`-compatible (with `alloc`); the default `std` feature routes float
//! math through the faster platform intrinsics, while `no_std` builds fall
//! back to `libm` (last-ulp results may differ between the two).
#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

mod error;
pub(crate) mod math;
pub(crate) mod rng;

pub mod batch;
pub mod fit;
pub mod heatmap;
pub mod metrics;
pub mod ot;
pub mod perturb;

pub use error::{Error, Result};
pub use heatmap::{
    decode_batch, decode_get_bc, decode_get_max, make_gaussian_target, AmplitudeMode,
    DecodeMethod, Heatmap, LandmarkPoint, MaxDecode, NormalizedHeatmap, TargetSpec,
};
pub use ot::{
    exact_w1, js_divergence_loss, l2_heatmap_loss, sinkhorn_gradient, sinkhorn_solve,
    sinkhorn_w1, soft_argmax_loss, softmax_normalize, ExactW1, GradientResult, GroundCost,
    LossResult, SinkhornConfig, SinkhornSolution, TransportPlan,
};
