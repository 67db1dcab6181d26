//! Thin command-line front end. The library and its `examples/` are the
//! primary interface; these subcommands expose the same capabilities for
//! file-based pipelines.
//!
//! Exit codes: 0 success, 2 configuration/input error, 3 budget guard,
//! 4 numeric failure. Thread count is capped by `RAYON_NUM_THREADS`.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use rdp::codec::{
    codeword_type_deviation, evaluate_distortion, evaluate_per_symbol_realism,
    evaluate_strong_realism, induced_distribution_exact, induced_distribution_sampled,
    sample_codebook, CodeSpec,
};
use rdp::derand::derandomize_code;
use rdp::harness;
use rdp::perfect::{enforce_perfect_realism, BlockJoint};
use rdp::prob::{Kernel, MarkovJoint, Pmf};
use rdp::quant::{probe_sampler, standard_gaussian, verify_quantizability, EuclideanQuantizer};
use rdp::region::{
    grid_oracle, min_distortion, trace_boundary, RealismMode, RegionProblem, SolverOptions,
};
use rdp::synth::{build_synth_channel, verify_synthesis};
use rdp::{Error, Result};

#[derive(Parser)]
#[command(
    name = "rdp",
    version,
    about = "Rate-distortion-perception regions and code simulations"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Minimal distortion at a rate point, with witness and diagnostics.
    Region(RegionArgs),
    /// Exact (or sampled) evaluation of a code built from a witness joint.
    Simulate(SimulateArgs),
    /// Derandomize the likelihood encoder of a code.
    Derand(DerandArgs),
    /// Synthesize a memoryless channel with fixed-rate private randomness.
    Synth(SynthArgs),
    /// Enforce an exact output marginal on a Markov block joint.
    Perfect(PerfectArgs),
    /// Quantizer checks and uniform-integrability probe.
    Quant(QuantArgs),
    /// Run a TOML experiment config into a results directory.
    Sweep(SweepArgs),
    /// Flatten a results directory into long-format plot data.
    Plotdata(PlotdataArgs),
}

fn parse_rate(s: &str) -> std::result::Result<f64, String> {
    if s == "inf" || s == "infinity" {
        return Ok(f64::INFINITY);
    }
    s.parse::<f64>().map_err(|e| e.to_string())
}

#[derive(Args)]
struct RegionArgs {
    /// Source pmf JSON: {"alphabet": [...], "probs": [...]}
    #[arg(long)]
    source: PathBuf,
    /// Distortion matrix CSV (one row per source symbol).
    #[arg(long)]
    distortion: PathBuf,
    #[arg(long = "R", value_parser = parse_rate)]
    r: f64,
    #[arg(long = "Rc", value_parser = parse_rate)]
    r_c: f64,
    #[arg(long = "Rd", value_parser = parse_rate)]
    r_d: f64,
    /// Drop the I(Y;V) bound (per-symbol realism region).
    #[arg(long)]
    per_symbol: bool,
    /// Also run the exhaustive grid oracle at --resolution.
    #[arg(long)]
    oracle: bool,
    #[arg(long, default_value_t = 0.02)]
    resolution: f64,
    /// Auxiliary cardinality cap (default |X|^2 + 1).
    #[arg(long)]
    v_cap: Option<usize>,
    /// Additional R values to sweep into --trace-out (comma separated).
    #[arg(long, value_delimiter = ',')]
    sweep_r: Vec<f64>,
    #[arg(long)]
    trace_out: Option<PathBuf>,
    #[arg(long, default_value_t = 0x5eed)]
    seed: u64,
    /// Output JSON path (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    /// Code spec JSON: {"n": .., "r": .., "r_c": .., "r_d": ..}
    #[arg(long)]
    spec: PathBuf,
    /// Witness MarkovJoint JSON (p_v, k_x_given_v, k_y_given_v).
    #[arg(long)]
    joint: PathBuf,
    /// Distortion matrix CSV.
    #[arg(long)]
    distortion: PathBuf,
    /// Override the spec blocklength.
    #[arg(long)]
    n: Option<usize>,
    /// Exact evaluation (the default; present for explicitness).
    #[arg(long)]
    exact: bool,
    /// Monte Carlo sample count; switches off exact mode.
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long, default_value_t = 0.1)]
    type_eps: f64,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Everything needed to rebuild a code deterministically.
#[derive(Serialize, Deserialize)]
struct CodeConfigFile {
    source: Pmf,
    joint: MarkovJoint,
    n: usize,
    r: f64,
    r_c: f64,
    #[serde(default)]
    codebook_seed: u64,
}

#[derive(Args)]
struct DerandArgs {
    /// Code config JSON (see the README for the schema).
    #[arg(long)]
    code: PathBuf,
    #[arg(long, default_value_t = 32)]
    candidates: usize,
    #[arg(long, default_value_t = 3)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SynthArgs {
    /// Kernel JSON (rows of the memoryless channel).
    #[arg(long)]
    kernel: PathBuf,
    /// Words JSON: list of symbol-index sequences.
    #[arg(long)]
    words: PathBuf,
    #[arg(long, value_parser = parse_rate)]
    r: f64,
    #[arg(long, default_value_t = 0.2)]
    gamma: f64,
    /// Expected blocklength (validated against the words).
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, default_value_t = 11)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PerfectArgs {
    /// BlockJoint JSON: {"x_size": .., "u_size": .., "y_size": .., "p": [...]}
    #[arg(long)]
    joint: PathBuf,
    /// Target pmf JSON over the y block (length y_size).
    #[arg(long)]
    target: PathBuf,
    #[arg(long, default_value_t = 1e-9)]
    markov_tol: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct QuantArgs {
    #[arg(long, default_value_t = 1)]
    dim: usize,
    #[arg(long, default_value_t = 8)]
    level: u32,
    #[arg(long = "s", default_value_t = 2.0)]
    exponent: f64,
    /// Source to probe (only "gaussian" is built in).
    #[arg(long, default_value = "gaussian")]
    probe: String,
    #[arg(long, default_value_t = 100_000)]
    pairs: usize,
    #[arg(long, default_value_t = 0.1)]
    eps: f64,
    #[arg(long, default_value_t = 0.01)]
    tau: f64,
    #[arg(long, default_value_t = 13)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Override the config's master seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct PlotdataArgs {
    #[arg(long)]
    results: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn read_json<T: serde::de::DeserializeOwned>(path: &PathBuf) -> Result<T> {
    let text = fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

fn read_distortion_csv(path: &PathBuf) -> Result<Vec<Vec<f64>>> {
    let text = fs::read_to_string(path)?;
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|line| {
            line.split(',')
                .map(|c| {
                    c.trim()
                        .parse::<f64>()
                        .map_err(|e| Error::Config(format!("distortion entry {c:?}: {e}")))
                })
                .collect()
        })
        .collect()
}

fn emit(out: &Option<PathBuf>, contents: &str) -> Result<()> {
    match out {
        Some(path) => fs::write(path, contents)?,
        None => println!("{contents}"),
    }
    Ok(())
}

fn run() -> Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Region(args) => {
            let source: Pmf = read_json(&args.source)?;
            let distortion = read_distortion_csv(&args.distortion)?;
            let mode = if args.per_symbol { RealismMode::PerSymbol } else { RealismMode::Strong };
            let problem = RegionProblem::new(source, distortion, mode, args.v_cap)?;
            let opts = SolverOptions { seed: args.seed, ..SolverOptions::default() };
            let sol = min_distortion(&problem, args.r, args.r_c, args.r_d, &opts)?;
            let oracle_value = if args.oracle {
                Some(grid_oracle(&problem, args.r, args.r_c, args.r_d, args.resolution)?)
            } else {
                None
            };
            // JSON has no infinity literal; infeasible points report the
            // string "inf".
            fn ext(v: f64) -> serde_json::Value {
                if v.is_infinite() {
                    serde_json::Value::String("inf".into())
                } else {
                    serde_json::json!(v)
                }
            }
            #[derive(Serialize)]
            struct RegionOutput {
                delta_star: serde_json::Value,
                oracle: Option<serde_json::Value>,
                witness: Option<MarkovJoint>,
                diagnostics: rdp::region::SolverDiagnostics,
            }
            let output = RegionOutput {
                delta_star: ext(sol.delta_star),
                oracle: oracle_value.map(ext),
                witness: sol.achieving_joint,
                diagnostics: sol.diagnostics,
            };
            emit(&args.out, &serde_json::to_string_pretty(&output)?)?;
            if !args.sweep_r.is_empty() {
                let grid: Vec<(f64, f64, f64)> =
                    args.sweep_r.iter().map(|&r| (r, args.r_c, args.r_d)).collect();
                let trace = trace_boundary(&problem, &grid, &opts)?;
                let mut csv = String::from("r,r_c,r_d,delta_star\n");
                for row in &trace.rows {
                    csv.push_str(&format!(
                        "{},{},{},{}\n",
                        row.r, row.r_c, row.r_d, row.delta_star
                    ));
                }
                if trace.monotonicity_violated {
                    eprintln!("warning: raw trace violates monotonicity beyond tolerance");
                }
                match &args.trace_out {
                    Some(p) => fs::write(p, csv)?,
                    None => print!("{csv}"),
                }
            }
            Ok(())
        }
        Command::Simulate(args) => {
            let mut spec: CodeSpec = read_json(&args.spec)?;
            if let Some(n) = args.n {
                spec = CodeSpec::new(n, spec.r, spec.r_c, spec.r_d)?;
            }
            let joint: MarkovJoint = read_json(&args.joint)?;
            let distortion = read_distortion_csv(&args.distortion)?;
            let source = joint.marginal_x()?;
            let cb = sample_codebook(joint.p_v(), &spec, args.seed)?;
            let types = codeword_type_deviation(&cb, joint.p_v())?;
            let mut csv = String::from("n,tvd_strong,tvd_per_symbol,distortion,exceedance\n");
            match args.samples {
                None => {
                    let ij = induced_distribution_exact(
                        &cb,
                        joint.k_x_given_v(),
                        joint.k_y_given_v(),
                        &source,
                        None,
                    )?;
                    csv.push_str(&format!(
                        "{},{},{},{},{}\n",
                        spec.n,
                        evaluate_strong_realism(&ij, &source)?,
                        evaluate_per_symbol_realism(&ij, &source)?,
                        evaluate_distortion(&ij, &distortion)?,
                        types.exceedance_fraction(args.type_eps)
                    ));
                }
                Some(samples) => {
                    let mc = induced_distribution_sampled(
                        &cb,
                        joint.k_x_given_v(),
                        joint.k_y_given_v(),
                        &source,
                        &distortion,
                        samples,
                        args.seed,
                    )?;
                    eprintln!("note: {}", mc.plugin_bias_warning);
                    csv.push_str(&format!(
                        "{},{},,{},{}\n",
                        spec.n,
                        mc.strong_realism_plugin,
                        mc.distortion_mean,
                        types.exceedance_fraction(args.type_eps)
                    ));
                }
            }
            emit(&args.out, &csv)
        }
        Command::Derand(args) => {
            let code: CodeConfigFile = read_json(&args.code)?;
            let spec = CodeSpec::new(code.n, code.r, code.r_c, f64::INFINITY)?;
            let cb = sample_codebook(code.joint.p_v(), &spec, code.codebook_seed)?;
            let ij = induced_distribution_exact(
                &cb,
                code.joint.k_x_given_v(),
                code.joint.k_y_given_v(),
                &code.source,
                None,
            )?;
            let (_, report) = derandomize_code(&ij, args.candidates, args.seed)?;
            #[derive(Serialize)]
            struct DerandOutput {
                scores: Vec<f64>,
                argmin: usize,
                min: f64,
                mean: f64,
                n: usize,
                r: f64,
                h_x: f64,
            }
            let out = DerandOutput {
                scores: report.scores.clone(),
                argmin: report.argmin,
                min: report.min_score,
                mean: report.mean_score,
                n: code.n,
                r: code.r,
                h_x: report.source_entropy,
            };
            emit(&args.out, &serde_json::to_string_pretty(&out)?)
        }
        Command::Synth(args) => {
            let kernel: Kernel = read_json(&args.kernel)?;
            let words: Vec<Vec<usize>> = read_json(&args.words)?;
            if let Some(n) = args.n {
                if words.iter().any(|w| w.len() != n) {
                    return Err(Error::Config(format!("words must have length {n}")));
                }
            }
            let sc = build_synth_channel(&kernel, &words, args.r, args.seed)?;
            let mut csv = String::from("word,tvd,eligible,type_conditional_entropy\n");
            for w in 0..words.len() {
                let check = verify_synthesis(&sc, &kernel, w, args.gamma)?;
                csv.push_str(&format!(
                    "{},{},{},{}\n",
                    w, check.tvd, check.eligible, check.type_conditional_entropy
                ));
            }
            emit(&args.out, &csv)
        }
        Command::Perfect(args) => {
            let joint: BlockJoint = read_json(&args.joint)?;
            let target: Pmf = read_json(&args.target)?;
            let (adjusted, report) =
                enforce_perfect_realism(&joint, target.probs(), args.markov_tol)?;
            #[derive(Serialize)]
            struct PerfectOutput {
                delta: f64,
                post_check_sup_dev: f64,
                moved_tvd: f64,
                joint: BlockJoint,
            }
            let out = PerfectOutput {
                delta: report.delta,
                post_check_sup_dev: report.post_sup_dev,
                moved_tvd: report.moved_tvd,
                joint: adjusted,
            };
            emit(&args.out, &serde_json::to_string_pretty(&out)?)
        }
        Command::Quant(args) => {
            if args.probe != "gaussian" {
                return Err(Error::Config(format!(
                    "unknown probe source {:?}; available: gaussian",
                    args.probe
                )));
            }
            let q = EuclideanQuantizer::new(args.dim, args.level, args.exponent)?;
            let report = verify_quantizability(
                &q,
                args.exponent,
                standard_gaussian(args.dim),
                args.pairs,
                args.eps,
                args.tau,
                args.seed,
            )?;
            let probe = probe_sampler(
                standard_gaussian(args.dim),
                args.exponent,
                args.pairs,
                &[0.001, 0.01, 0.1],
                args.seed,
            )?;
            #[derive(Serialize)]
            struct QuantOutput {
                quantizability: rdp::quant::QuantizabilityReport,
                uniform_integrability_probe: Vec<(f64, f64)>,
            }
            let out = QuantOutput { quantizability: report, uniform_integrability_probe: probe };
            emit(&args.out, &serde_json::to_string_pretty(&out)?)
        }
        Command::Sweep(args) => {
            let mut config = harness::Config::from_path(&args.config)?;
            if let Some(seed) = args.seed {
                config.master_seed = seed;
            }
            let manifest = harness::run_experiment(&config, &args.out)?;
            println!(
                "wrote {} files to {} in {:.2}s",
                manifest.files.len(),
                args.out.display(),
                manifest.wall_clock_seconds
            );
            Ok(())
        }
        Command::Plotdata(args) => {
            let data = harness::emit_plotdata(&args.results)?;
            match &args.out {
                Some(p) => fs::write(p, data)?,
                None => print!("{data}"),
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            let code = match e {
                Error::Budget(_) => 3,
                Error::Domain(_) | Error::Numeric(_) => 4,
                _ => 2,
            };
            ExitCode::from(code)
        }
    }
}
