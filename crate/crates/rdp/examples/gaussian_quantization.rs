//! Euclidean quantizers and the continuous-source lift.
//!
//! Prism quantizers cut space into cubes of side `l^{-s}` inside a ball of
//! radius `l`; the checks confirm the displacement bound, the two
//! quantizability inequalities for squared error under a Gaussian source,
//! and the uniform-integrability probe. The lift then runs a finite code
//! over cell indices (decoder enforced to exact quantized realism) and
//! resamples each output cell from the Gaussian conditional: the
//! reconstruction is distributed exactly like the source.
//!
//! ```bash
//! cargo run --release --example gaussian_quantization
//! ```

use rdp::perfect::GaussianLift;
use rdp::quant::{
    probe_sampler, standard_gaussian, verify_quantizability, EuclideanQuantizer,
};
use rdp::seeding;

fn main() -> rdp::Result<()> {
    // Displacement: inside the ball, |x - [x]| <= sqrt(dim) l^{-s}.
    let q = EuclideanQuantizer::new(1, 8, 1.0)?;
    let mut gauss = standard_gaussian(1);
    let mut rng = seeding::task_rng(3, "demo", 0);
    let mut worst = 0.0f64;
    for _ in 0..100_000 {
        let x = gauss(&mut rng);
        if x[0].abs() <= 7.0 {
            worst = worst.max((x[0] - q.quantize(&x)?[0]).abs());
        }
    }
    println!(
        "displacement inside the shrunk ball: {worst:.5} <= bound {:.5}",
        q.cell_side()
    );

    // Quantizability of squared error at level 16.
    let q16 = EuclideanQuantizer::new(1, 16, 2.0)?;
    let report = verify_quantizability(&q16, 2.0, standard_gaussian(1), 100_000, 0.1, 0.01, 5)?;
    println!(
        "quantizability at l = 16, s = 2: B_tau radius {}, inside violation {:.4}, \
         outside violation {:.4}, pass = {}",
        report.b_tau_radius, report.max_violation_inside, report.max_violation_outside, report.pass
    );

    // Uniform-integrability probe: adversarial tail mass of squared error
    // under an independent Gaussian coupling.
    let probe = probe_sampler(standard_gaussian(1), 2.0, 200_000, &[0.001, 0.01, 0.1], 7)?;
    println!("uniform-integrability probe (tau, E[d; top-tau]):");
    for (tau, value) in &probe {
        println!("  tau = {tau:<6} probe = {value:.5}");
    }

    // The quantize-code-dequantize lift at l = 4, blocks of 2 symbols.
    let lift = GaussianLift::build(4, 1.0, 2, 2.0, 11)?;
    println!(
        "\nlift: {} cells, inner code with {} messages, enforcement moved {:.4} of mass \
         (post deviation {:.1e})",
        lift.cells.len(),
        lift.inner.msg_count,
        lift.enforcement.delta,
        lift.enforcement.post_sup_dev
    );
    let stats = lift.run(50_000, 13)?;
    println!(
        "lift output over {} samples: mean {:.4} (3 sigma band ±{:.4}), variance {:.4}, mse {:.4}",
        stats.samples,
        stats.mean,
        3.0 / (stats.samples as f64).sqrt(),
        stats.variance,
        stats.mse
    );
    println!("the output marginal is the source law itself; only the coupling is lossy.");
    Ok(())
}
