use hmot_core::heatmap::Heatmap;
use hmot_core::ot::{exact_w1, sinkhorn_solve, softmax_normalize, SinkhornConfig};
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

fn unit(r: &mut ChaCha8Rng) -> f64 { (r.next_u64() >> 11) as f64 * (1.0/(1u64<<53) as f64) }
fn normal(r: &mut ChaCha8Rng) -> f64 { let u = 1.0-unit(r); let v = unit(r); (-2.0*u.ln()).sqrt()*(2.0*std::f64::consts::PI*v).cos() }

fn main() {
    let cfg = SinkhornConfig { epsilon: 0.01, max_iterations: 30000, marginal_tolerance: 1e-8, log_domain: true };
    for tau in [1.0, 2.0, 3.0, 4.0] {
        let mut r = ChaCha8Rng::seed_from_u64(42);
        let mut worst: f64 = 0.0;
        let mut mean = 0.0;
        let n = 8;
        for _ in 0..n {
            let a: Vec<f64> = (0..256).map(|_| normal(&mut r) * tau).collect();
            let b: Vec<f64> = (0..256).map(|_| normal(&mut r) * tau).collect();
            let u = softmax_normalize(&Heatmap::new(16, 16, a).unwrap());
            let v = softmax_normalize(&Heatmap::new(16, 16, b).unwrap());
            let lp = exact_w1(&u, &v).unwrap().distance;
            let s = sinkhorn_solve(&u, &v, &cfg, None).unwrap();
            assert!(s.converged);
            let rel = (s.value - lp).abs() / lp;
            worst = worst.max(rel);
            mean += rel / n as f64;
        }
        println!("tau={tau}: mean_rel={mean:.4} worst_rel={worst:.4}");
    }
}
