//! Synthetic robustness perturbations: random elliptical occlusion on single
//! images and nose-track-directed linear motion blur on frame sequences.
//!
//! Both are pure functions of (input, spec): the spec carries the RNG seed,
//! and identical seeds give bit-identical outputs. Protocol parameter values
//! ("large" / "medium") are configuration with documented defaults, not
//! constants.

use alloc::vec::Vec;

use rand_chacha::ChaCha8Rng;

use crate::heatmap::LandmarkPoint;
use crate::math;
use crate::rng;
use crate::{Error, Result};

/// An 8-bit-image-shaped buffer held as reals in `[0, 1]`, row-major with
/// interleaved channels.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    height: usize,
    width: usize,
    channels: usize,
    data: Vec<f32>,
}

impl Image {
    pub fn new(height: usize, width: usize, channels: usize, data: Vec<f32>) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::GridTooSmall { height, width });
        }
        if channels != 1 && channels != 3 {
            return Err(Error::InvalidParameter {
                what: "channels",
                reason: "must be 1 or 3",
            });
        }
        if data.len() != height * width * channels {
            return Err(Error::LengthMismatch {
                left: data.len(),
                right: height * width * channels,
            });
        }
        if data.iter().any(|v| !v.is_finite() || *v < 0.0 || *v > 1.0) {
            return Err(Error::InvalidParameter {
                what: "image data",
                reason: "values must be finite and in [0, 1]",
            });
        }
        Ok(Self {
            height,
            width,
            channels,
            data,
        })
    }

    pub fn filled(height: usize, width: usize, channels: usize, value: f32) -> Result<Self> {
        Self::new(height, width, channels, alloc::vec![value; height * width * channels])
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn get(&self, y: usize, x: usize, c: usize) -> f32 {
        self.data[(y * self.width + x) * self.channels + c]
    }

    /// Sum of all values, the "energy" the blur audit conserves.
    pub fn energy(&self) -> f64 {
        self.data.iter().map(|&v| v as f64).sum()
    }

    /// Bilinear sample at real coordinates with edge replication.
    fn sample(&self, x: f64, y: f64, c: usize) -> f64 {
        let clamp_x = |v: isize| v.clamp(0, self.width as isize - 1) as usize;
        let clamp_y = |v: isize| v.clamp(0, self.height as isize - 1) as usize;
        let x0 = math::floor(x);
        let y0 = math::floor(y);
        let fx = x - x0;
        let fy = y - y0;
        let (x0, y0) = (x0 as isize, y0 as isize);
        let v00 = self.get(clamp_y(y0), clamp_x(x0), c) as f64;
        let v01 = self.get(clamp_y(y0), clamp_x(x0 + 1), c) as f64;
        let v10 = self.get(clamp_y(y0 + 1), clamp_x(x0), c) as f64;
        let v11 = self.get(clamp_y(y0 + 1), clamp_x(x0 + 1), c) as f64;
        v00 * (1.0 - fx) * (1.0 - fy) + v01 * fx * (1.0 - fy) + v10 * (1.0 - fx) * fy
            + v11 * fx * fy
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PerturbKind {
    Occlusion,
    MotionBlur,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Protocol {
    Large,
    Medium,
}

/// Ellipse semi-axis range as fractions of `min(H, W)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OcclusionParams {
    pub semi_min_frac: f64,
    pub semi_max_frac: f64,
}

impl OcclusionParams {
    pub fn for_protocol(p: Protocol) -> Self {
        match p {
            Protocol::Large => Self {
                semi_min_frac: 0.15,
                semi_max_frac: 0.30,
            },
            Protocol::Medium => Self {
                semi_min_frac: 0.08,
                semi_max_frac: 0.15,
            },
        }
    }
}

/// Blur-kernel length per pixel of nose displacement, and the length cap.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlurParams {
    pub length_multiplier: f64,
    pub length_cap: usize,
}

impl BlurParams {
    pub fn for_protocol(p: Protocol) -> Self {
        match p {
            Protocol::Large => Self {
                length_multiplier: 1.0,
                length_cap: 31,
            },
            Protocol::Medium => Self {
                length_multiplier: 0.5,
                length_cap: 15,
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerturbSpec {
    pub kind: PerturbKind,
    pub protocol: Protocol,
    pub rng_seed: u64,
    pub occlusion: OcclusionParams,
    pub blur: BlurParams,
}

impl PerturbSpec {
    pub fn occlusion(protocol: Protocol, rng_seed: u64) -> Self {
        Self {
            kind: PerturbKind::Occlusion,
            protocol,
            rng_seed,
            occlusion: OcclusionParams::for_protocol(protocol),
            blur: BlurParams::for_protocol(protocol),
        }
    }

    pub fn motion_blur(protocol: Protocol, rng_seed: u64) -> Self {
        Self {
            kind: PerturbKind::MotionBlur,
            ..Self::occlusion(protocol, rng_seed)
        }
    }

    pub fn validate(&self) -> Result<()> {
        let o = &self.occlusion;
        // The zero end is a legal degenerate override (empty occluder).
        if !(o.semi_min_frac >= 0.0)
            || !(o.semi_max_frac >= o.semi_min_frac)
            || !(o.semi_max_frac <= 0.5)
        {
            return Err(Error::InvalidParameter {
                what: "occlusion semi-axis fractions",
                reason: "need 0 <= min <= max <= 0.5",
            });
        }
        if !(self.blur.length_multiplier > 0.0) || !self.blur.length_multiplier.is_finite() {
            return Err(Error::InvalidParameter {
                what: "blur length multiplier",
                reason: "must be a finite positive real",
            });
        }
        if self.blur.length_cap < 1 {
            return Err(Error::InvalidParameter {
                what: "blur length cap",
                reason: "must be at least 1",
            });
        }
        Ok(())
    }

    /// Per-item spec for parallel batch work: same parameters, derived seed.
    pub fn for_item(&self, index: u64) -> Self {
        Self {
            rng_seed: self.rng_seed.wrapping_add(index),
            ..*self
        }
    }
}

/// The parameters actually drawn for one occlusion, in pixel units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EllipseDraw {
    pub center_x: f64,
    pub center_y: f64,
    pub semi_a: f64,
    pub semi_b: f64,
    /// Rotation of the `a` axis, in `[0, pi)`.
    pub angle: f64,
}

impl EllipseDraw {
    pub fn area(&self) -> f64 {
        core::f64::consts::PI * self.semi_a * self.semi_b
    }

    /// True when the ellipse cannot touch the image border (so the pixel
    /// audit against the analytic area is meaningful).
    pub fn fully_inside(&self, height: usize, width: usize) -> bool {
        let r = self.semi_a.max(self.semi_b);
        self.center_x - r >= 0.0
            && self.center_y - r >= 0.0
            && self.center_x + r <= (width - 1) as f64
            && self.center_y + r <= (height - 1) as f64
    }
}

fn draw_ellipse(img: &Image, spec: &PerturbSpec, rng: &mut ChaCha8Rng) -> EllipseDraw {
    let side = img.height.min(img.width) as f64;
    let o = &spec.occlusion;
    let semi_a = rng::range_f64(rng, o.semi_min_frac, o.semi_max_frac) * side;
    let semi_b = rng::range_f64(rng, o.semi_min_frac, o.semi_max_frac) * side;
    let center_x = rng::range_f64(rng, 0.0, (img.width - 1) as f64);
    let center_y = rng::range_f64(rng, 0.0, (img.height - 1) as f64);
    let angle = rng::range_f64(rng, 0.0, core::f64::consts::PI);
    EllipseDraw {
        center_x,
        center_y,
        semi_a,
        semi_b,
        angle,
    }
}

/// Rasterizes the occluder: a pixel is zeroed exactly when its center lies
/// inside the rotated ellipse. No anti-aliasing, so outputs are bit-exact.
pub fn occlude_with(img: &Image, ellipse: &EllipseDraw) -> Image {
    let mut out = img.clone();
    if ellipse.semi_a <= 0.0 || ellipse.semi_b <= 0.0 {
        return out;
    }
    let (sin, cos) = (math::sin(ellipse.angle), math::cos(ellipse.angle));
    let inv_a2 = 1.0 / (ellipse.semi_a * ellipse.semi_a);
    let inv_b2 = 1.0 / (ellipse.semi_b * ellipse.semi_b);
    for y in 0..img.height {
        let dy = y as f64 - ellipse.center_y;
        for x in 0..img.width {
            let dx = x as f64 - ellipse.center_x;
            let u = dx * cos + dy * sin;
            let v = -dx * sin + dy * cos;
            if u * u * inv_a2 + v * v * inv_b2 <= 1.0 {
                let base = (y * img.width + x) * img.channels;
                for c in 0..img.channels {
                    out.data[base + c] = 0.0;
                }
            }
        }
    }
    out
}

/// Superposes one randomly drawn black ellipse; returns the perturbed image
/// and the drawn parameters for manifests and audits.
pub fn occlude(img: &Image, spec: &PerturbSpec) -> Result<(Image, EllipseDraw)> {
    if spec.kind != PerturbKind::Occlusion {
        return Err(Error::InvalidParameter {
            what: "perturb kind",
            reason: "spec is not an occlusion spec",
        });
    }
    spec.validate()?;
    let mut r = rng::seeded(spec.rng_seed);
    let ellipse = draw_ellipse(img, spec, &mut r);
    Ok((occlude_with(img, &ellipse), ellipse))
}

/// The kernel actually applied to one frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlurDraw {
    /// Number of box-filter taps; below 2 the frame passes through unchanged.
    pub length: usize,
    /// Nose displacement driving this frame, in pixels.
    pub displacement: (f64, f64),
    /// Orientation of the smear, `atan2(dy, dx)`.
    pub angle: f64,
}

fn blur_frame(img: &Image, displacement: (f64, f64), params: &BlurParams) -> (Image, BlurDraw) {
    let (dx, dy) = displacement;
    let mag = math::hypot(dx, dy);
    let len = math::round(params.length_multiplier * mag) as usize;
    let length = len.min(params.length_cap);
    let draw = BlurDraw {
        length,
        displacement,
        angle: math::atan2(dy, dx),
    };
    if length < 2 || mag == 0.0 {
        return (img.clone(), BlurDraw { length: 0, ..draw });
    }
    let (ux, uy) = (dx / mag, dy / mag);
    let weight = 1.0 / length as f64;
    let half = (length - 1) as f64 / 2.0;
    let mut out = img.clone();
    for y in 0..img.height {
        for x in 0..img.width {
            for c in 0..img.channels {
                let mut acc = 0.0;
                for k in 0..length {
                    let t = k as f64 - half;
                    acc += img.sample(x as f64 - t * ux, y as f64 - t * uy, c);
                }
                out.data[(y * img.width + x) * img.channels + c] =
                    (acc * weight).clamp(0.0, 1.0) as f32;
            }
        }
    }
    (out, draw)
}

/// Directional box blur over a frame sequence.
///
/// For each interior frame `t` the blur direction is
/// `nose_track[t+1] - nose_track[t-1]`; the first and last frames use
/// one-sided differences. The kernel is a normalized 1D box of
/// `round(multiplier * |direction|)` taps (capped), oriented along the
/// direction and applied with bilinear sampling and edge replication. Zero
/// displacement leaves the frame untouched.
pub fn motion_blur_sequence(
    frames: &[Image],
    nose_track: &[LandmarkPoint],
    spec: &PerturbSpec,
) -> Result<(Vec<Image>, Vec<BlurDraw>)> {
    if spec.kind != PerturbKind::MotionBlur {
        return Err(Error::InvalidParameter {
            what: "perturb kind",
            reason: "spec is not a motion-blur spec",
        });
    }
    spec.validate()?;
    if frames.len() != nose_track.len() {
        return Err(Error::LengthMismatch {
            left: frames.len(),
            right: nose_track.len(),
        });
    }
    if frames.len() < 3 {
        return Err(Error::InvalidParameter {
            what: "frame sequence",
            reason: "needs at least 3 frames",
        });
    }
    let n = frames.len();
    let mut out = Vec::with_capacity(n);
    let mut draws = Vec::with_capacity(n);
    for t in 0..n {
        let (from, to) = if t == 0 {
            (0, 1)
        } else if t == n - 1 {
            (n - 2, n - 1)
        } else {
            (t - 1, t + 1)
        };
        let disp = (
            nose_track[to].x - nose_track[from].x,
            nose_track[to].y - nose_track[from].y,
        );
        let (frame, draw) = blur_frame(&frames[t], disp, &spec.blur);
        out.push(frame);
        draws.push(draw);
    }
    Ok((out, draws))
}
