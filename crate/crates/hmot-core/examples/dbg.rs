use hmot_core::heatmap::{make_normalized_target, LandmarkPoint};
use hmot_core::ot::{sinkhorn_solve, SinkhornConfig};

fn main() {
    let u = make_normalized_target(LandmarkPoint::new(3.5, 4.0), 1.0, 8, 8).unwrap();
    for (eps, max_it, tol) in [(0.01, 5000u32, 1e-8f64), (0.01, 5000, 1e-6), (0.05, 2000, 1e-7)] {
        let cfg = SinkhornConfig { epsilon: eps, max_iterations: max_it, marginal_tolerance: tol, log_domain: true };
        let sol = sinkhorn_solve(&u, &u, &cfg, None).unwrap();
        println!(
            "eps={eps} tol={tol}: converged={} iters={} err={:.3e} value={:.3e}",
            sol.converged, sol.iterations, sol.marginal_error, sol.value
        );
    }
}
