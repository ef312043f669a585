use hmot_core::fit::{fit, FitLoss, FitProblem, InitPreset};

fn main() {
    for sigma in [3.0, 6.0, 12.0] {
        let mut grads = Vec::new();
        for loss in [FitLoss::Wasserstein, FitLoss::L2Softmax] {
            let mut p = FitProblem::canonical(loss);
            p.init = InitPreset::OffsetBlob { distance: 20.0, sigma };
            p.iterations = 1;
            let tr = fit(&p).unwrap();
            grads.push(tr.grad_norm_history[0]);
        }
        println!(
            "sigma={sigma}: |gW|={:.3e} |gL2|={:.3e} ratio={:.1}",
            grads[0], grads[1], grads[0] / grads[1]
        );
    }
}
