//! Build a random-codebook code from a region witness and evaluate it
//! exactly at small blocklengths: realism (output-law TVD to the i.i.d.
//! source), per-symbol realism, and distortion.
//!
//! ```bash
//! cargo run --release --example code_simulation
//! ```

use rdp::codec::{
    codeword_type_deviation, evaluate_distortion, evaluate_per_symbol_realism,
    evaluate_strong_realism, induced_distribution_exact, sample_codebook, CodeSpec,
};
use rdp::prob::Pmf;
use rdp::region::{hamming, min_distortion, RealismMode, RegionProblem, SolverOptions};

fn main() -> rdp::Result<()> {
    let problem =
        RegionProblem::new(Pmf::bernoulli(0.3)?, hamming(2), RealismMode::Strong, Some(2))?;
    let h = problem.source.entropy();
    let (r, rc) = (0.2 * h, 0.25);
    let sol = min_distortion(&problem, r, rc, f64::INFINITY, &SolverOptions::default())?;
    let witness = sol.achieving_joint.unwrap();
    println!(
        "region point: delta* = {:.5}, witness I(X;V) = {:.4}, I(Y;V) = {:.4}",
        sol.delta_star,
        witness.i_xv()?,
        witness.i_yv()?
    );

    // Codes need a rate margin over the witness informations; the margin
    // per symbol shrinks nothing here, it buys finite-n covering.
    let rate_margin = 0.5;
    let rc_margin = 0.45;
    println!("\n{:>3} {:>5} {:>4} {:>11} {:>13} {:>11} {:>11}", "n", "msgs", "cr", "tvd_strong", "tvd_per_symb", "distortion", "type_exceed");
    for n in [4usize, 6, 8] {
        let r_code = r + rate_margin;
        let rc_code = (witness.i_yv()? - r_code).max(0.0) + rc_margin;
        let spec = CodeSpec::new(n, r_code, rc_code, f64::INFINITY)?;
        let cb = sample_codebook(witness.p_v(), &spec, 11)?;
        let ij = induced_distribution_exact(
            &cb,
            witness.k_x_given_v(),
            witness.k_y_given_v(),
            &problem.source,
            None,
        )?;
        // The induced joint is exact: its x-marginal reproduces the i.i.d.
        // source to round-off and the encoder cannot leak past (m, j).
        assert!(ij.marginal_x_sup_dev() <= 1e-9);
        assert!(ij.markov_residual() <= 1e-9);
        let types = codeword_type_deviation(&cb, witness.p_v())?;
        println!(
            "{:>3} {:>5} {:>4} {:>11.5} {:>13.5} {:>11.5} {:>11.3}",
            n,
            cb.msg_count,
            cb.cr_count,
            evaluate_strong_realism(&ij, &problem.source)?,
            evaluate_per_symbol_realism(&ij, &problem.source)?,
            evaluate_distortion(&ij, &problem.distortion)?,
            types.exceedance_fraction(0.1),
        );
    }
    println!(
        "\nrealism drifts down with n while distortion stays near delta* + margin effects;"
    );
    println!("per-symbol realism sits below strong realism (marginals of a joint).");
    Ok(())
}
