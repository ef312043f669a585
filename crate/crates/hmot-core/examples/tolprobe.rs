use hmot_core::heatmap::{make_normalized_target, LandmarkPoint};
use hmot_core::ot::{sinkhorn_solve, softmax_normalize, SinkhornConfig};
use hmot_core::heatmap::Heatmap;
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use std::time::Instant;

fn unit(r: &mut ChaCha8Rng) -> f64 { (r.next_u64() >> 11) as f64 * (1.0/(1u64<<53) as f64) }
fn normal(r: &mut ChaCha8Rng) -> f64 { let u = 1.0-unit(r); let v = unit(r); (-2.0*u.ln()).sqrt()*(2.0*std::f64::consts::PI*v).cos() }

fn main() {
    let mut r = ChaCha8Rng::seed_from_u64(7);
    let cfg = SinkhornConfig { epsilon: 0.01, max_iterations: 20000, marginal_tolerance: 1e-9, log_domain: true };
    // rough softmax pair 16x16
    let logits: Vec<f64> = (0..256).map(|_| normal(&mut r)).collect();
    let u1 = softmax_normalize(&Heatmap::new(16,16,logits).unwrap());
    let logits: Vec<f64> = (0..256).map(|_| normal(&mut r)).collect();
    let v1 = softmax_normalize(&Heatmap::new(16,16,logits).unwrap());
    let t0 = Instant::now();
    let s = sinkhorn_solve(&u1, &v1, &cfg, None).unwrap();
    println!("softmax16: conv={} it={} err={:.2e} time={:.1?}", s.converged, s.iterations, s.marginal_error, t0.elapsed());
    // blob pair 16x16
    let u2 = make_normalized_target(LandmarkPoint::new(4.0, 8.0), 1.0, 16, 16).unwrap();
    let v2 = make_normalized_target(LandmarkPoint::new(11.0, 7.0), 1.0, 16, 16).unwrap();
    let t0 = Instant::now();
    let s = sinkhorn_solve(&u2, &v2, &cfg, None).unwrap();
    println!("blob16:    conv={} it={} err={:.2e} time={:.1?}", s.converged, s.iterations, s.marginal_error, t0.elapsed());
    // blob pair with tighter sigma cap? try sigma 1.5
    let u3 = make_normalized_target(LandmarkPoint::new(4.0, 8.0), 1.5, 16, 16).unwrap();
    let v3 = make_normalized_target(LandmarkPoint::new(11.0, 7.0), 1.5, 16, 16).unwrap();
    let t0 = Instant::now();
    let s = sinkhorn_solve(&u3, &v3, &cfg, None).unwrap();
    println!("blob16s15: conv={} it={} err={:.2e} time={:.1?}", s.converged, s.iterations, s.marginal_error, t0.elapsed());
}
