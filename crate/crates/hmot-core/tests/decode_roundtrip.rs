//! Generate-and-decode round trips for both decoders at the tolerances the
//! evaluation pipeline relies on.

mod common;

use common::*;
use hmot_core::heatmap::{
    decode_get_bc, decode_get_max, make_gaussian_target, make_normalized_target, AmplitudeMode,
    LandmarkPoint, NormalizedHeatmap, TargetSpec,
};

#[test]
fn barycenter_recovers_interior_centers_within_tenth_pixel() {
    let mut r = rng(4001);
    let (h, w) = (64, 64);
    for sigma in [1.0, 1.5, 3.0] {
        let margin = 3.0 * sigma;
        let mut worst = 0.0f64;
        for _ in 0..50 {
            let cx = margin + unit(&mut r) * ((w - 1) as f64 - 2.0 * margin);
            let cy = margin + unit(&mut r) * ((h - 1) as f64 - 2.0 * margin);
            let hm = make_normalized_target(LandmarkPoint::new(cx, cy), sigma, h, w).unwrap();
            let p = decode_get_bc(&hm);
            worst = worst.max(p.distance(&LandmarkPoint::new(cx, cy)));
        }
        assert!(
            worst <= 0.1,
            "sigma {sigma}: worst barycenter decode error {worst} px"
        );
    }
}

#[test]
fn argmax_recovers_integer_centers_within_quarter_pixel() {
    let mut r = rng(4002);
    let (h, w) = (64, 64);
    for sigma in [1.0, 1.5, 3.0] {
        let spec = TargetSpec::new(sigma, h, w, AmplitudeMode::PeakOne).unwrap();
        let margin = (3.0 * sigma).ceil() as usize;
        let mut worst = 0.0f64;
        for _ in 0..50 {
            let cx = margin + (unit(&mut r) * ((w - 2 * margin) as f64)) as usize;
            let cy = margin + (unit(&mut r) * ((h - 2 * margin) as f64)) as usize;
            let center = LandmarkPoint::new(cx as f64, cy as f64);
            let hm = make_gaussian_target(center, &spec).unwrap().heatmap;
            let d = decode_get_max(&hm);
            assert!(!d.degenerate);
            worst = worst.max(d.point.distance(&center));
        }
        assert!(
            worst <= 0.25,
            "sigma {sigma}: worst argmax decode error {worst} px"
        );
    }
}

#[test]
fn sixty_eight_point_batch_roundtrip() {
    // 68 sigma-1 peak-one targets at random integer centers, decoded in a
    // batch at unit scale: every decode within a quarter pixel.
    let mut r = rng(4003);
    let (h, w) = (64, 64);
    let spec = TargetSpec::new(1.0, h, w, AmplitudeMode::PeakOne).unwrap();
    let mut centers = Vec::new();
    let mut maps = Vec::new();
    for _ in 0..68 {
        let cx = 4 + (unit(&mut r) * 56.0) as usize;
        let cy = 4 + (unit(&mut r) * 56.0) as usize;
        centers.push(LandmarkPoint::new(cx as f64, cy as f64));
        maps.push(
            make_gaussian_target(LandmarkPoint::new(cx as f64, cy as f64), &spec)
                .unwrap()
                .heatmap,
        );
    }
    let decoded =
        hmot_core::heatmap::decode_batch(&maps, hmot_core::heatmap::DecodeMethod::GetMax, 1.0)
            .unwrap();
    for (d, c) in decoded.iter().zip(centers.iter()) {
        assert!(d.distance(c) <= 0.25);
    }
}

#[test]
fn spurious_mass_moves_barycenter_predictably() {
    // Mixture linearity: mass fraction m at distance d drags the barycenter
    // by at least 0.99 * m/(1-m) * (distance measured from the mixed
    // barycenter to the blob).
    let mut r = rng(4004);
    let (h, w) = (64, 64);
    for _ in 0..20 {
        let m = 0.02 + unit(&mut r) * 0.4;
        let t = make_normalized_target(LandmarkPoint::new(16.0, 30.0), 2.0, h, w).unwrap();
        let b = make_normalized_target(LandmarkPoint::new(50.0, 34.0), 1.0, h, w).unwrap();
        let mix: Vec<f64> = t
            .values()
            .iter()
            .zip(b.values().iter())
            .map(|(&tv, &bv)| (1.0 - m) * tv + m * bv)
            .collect();
        let mix = NormalizedHeatmap::new(
            hmot_core::heatmap::Heatmap::new(h, w, mix).unwrap(),
        )
        .unwrap();
        let bc_t = decode_get_bc(&t);
        let bc_b = decode_get_bc(&b);
        let bc_mix = decode_get_bc(&mix);
        let displacement = bc_mix.distance(&bc_t);
        let bound = 0.99 * (m / (1.0 - m)) * bc_mix.distance(&bc_b);
        assert!(
            displacement >= bound,
            "m={m}: displacement {displacement} below bound {bound}"
        );
        // And the exact linearity identity.
        assert!((displacement - m * bc_b.distance(&bc_t)).abs() <= 1e-9);
    }
}
