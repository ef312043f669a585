use hmot_core::fit::{fit, FitLoss, FitProblem, InitPreset};
use std::time::Instant;

fn run(loss: FitLoss, step: f64, iters: u32, eps: f64) {
    let mut p = FitProblem::canonical(loss);
    p.step_size = step;
    p.iterations = iters;
    p.sinkhorn.epsilon = eps;
    let t0 = Instant::now();
    let tr = fit(&p).unwrap();
    let first = tr.loss_history[0];
    let at100 = tr.loss_history.get(99).copied().unwrap_or(f64::NAN);
    let last = *tr.loss_history.last().unwrap();
    let dist = ((tr.final_bc.x - p.target_center.x).powi(2)
        + (tr.final_bc.y - p.target_center.y).powi(2))
    .sqrt();
    println!(
        "{:?} step={step} iters={} eps={eps}: L0={first:.5} L100={at100:.5} (dec {:.2}%) Lend={last:.5} bc_err={dist:.3}px unconv={} grad0={:.3e} time={:.1?}",
        loss,
        tr.loss_history.len(),
        (1.0 - at100 / first) * 100.0,
        tr.sinkhorn_unconverged_steps,
        tr.grad_norm_history[0],
        t0.elapsed()
    );
}

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let mode = args.get(1).map(|s| s.as_str()).unwrap_or("w");
    match mode {
        "w" => {
            for step in [10.0, 30.0, 100.0, 300.0] {
                run(FitLoss::Wasserstein, step, 300, 0.05);
            }
        }
        "wfull" => {
            run(FitLoss::Wasserstein, args[2].parse().unwrap(), args[3].parse().unwrap(), 0.05);
        }
        "l2" => {
            for step in [1.0, 3.0, 10.0] {
                run(FitLoss::L2Softmax, step, 150, 0.05);
            }
        }
        _ => {
            // small-grid descent test instance
            use hmot_core::heatmap::LandmarkPoint;
            let mut p = FitProblem::canonical(FitLoss::Wasserstein);
            p.height = 16;
            p.width = 16;
            p.target_center = LandmarkPoint::new(5.0, 8.0);
            p.target_sigma = 1.5;
            p.init = InitPreset::OffsetBlob { distance: 6.0, sigma: 4.0 };
            p.sinkhorn.epsilon = 0.05;
            for (step, iters) in [(15.0, 300u32), (30.0, 300), (30.0, 600)] {
                p.step_size = step;
                p.iterations = iters;
                let tr = fit(&p).unwrap();
                println!(
                    "small step={step} iters={iters}: L0={:.4} Lend={:.4} bc_err={:.3}",
                    tr.loss_history[0],
                    tr.loss_history.last().unwrap(),
                    ((tr.final_bc.x - 5.0).powi(2) + (tr.final_bc.y - 8.0).powi(2)).sqrt()
                );
            }
        }
    }
}
