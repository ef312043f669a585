use hmot_core::fit::{fit, FitLoss, FitProblem};

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let step: f64 = args[1].parse().unwrap();
    let iters: u32 = args[2].parse().unwrap();
    let eps: f64 = args.get(3).map(|s| s.parse().unwrap()).unwrap_or(0.05);
    let mut p = FitProblem::canonical(FitLoss::Wasserstein);
    if let Ok(sig) = std::env::var("HMOT_INIT_SIGMA") {
        p.init = hmot_core::fit::InitPreset::OffsetBlob { distance: 20.0, sigma: sig.parse().unwrap() };
    }
    p.step_size = step;
    p.iterations = iters;
    p.sinkhorn.epsilon = eps;
    let tr = fit(&p).unwrap();
    for k in (0..tr.loss_history.len()).step_by((iters as usize / 10).max(1)) {
        println!(
            "it={k:5} loss={:.5} |g|={:.3e} bc=({:.2},{:.2})",
            tr.loss_history[k], tr.grad_norm_history[k], tr.bc_history[k].x, tr.bc_history[k].y
        );
    }
    // x-profile of the final softmax: sum over rows, printed in 8-col bins
    let hm = &tr.final_logits;
    let p2 = {
        let mx = hm.values().iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let e: Vec<f64> = hm.values().iter().map(|v| (v - mx).exp()).collect();
        let s: f64 = e.iter().sum();
        e.into_iter().map(|v| v / s).collect::<Vec<f64>>()
    };
    let mut cols = vec![0.0f64; 64];
    for y in 0..64 {
        for x in 0..64 {
            cols[x] += p2[y * 64 + x];
        }
    }
    print!("x-profile(8px bins): ");
    for b in 0..8 {
        let m: f64 = cols[b * 8..(b + 1) * 8].iter().sum();
        print!("{:.3} ", m);
    }
    println!();
}
