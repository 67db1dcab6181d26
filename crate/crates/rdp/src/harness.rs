//! Experiment orchestration.
//!
//! A TOML config names a master seed and a list of experiments; each
//! experiment solves a region point, builds codes from the witness at a list
//! of blocklengths, evaluates the privately randomized encoder exactly, then
//! derandomizes it and evaluates the deterministic encoder on the same
//! decoder: the headline comparison. An optional section swaps the decoder
//! for a rate-limited synthesized channel.
//!
//! Outputs are deterministic byte for byte given `(config, master seed)`:
//! every random choice derives from the master seed through
//! [`crate::seeding::derive_seed`], results are written in a fixed order,
//! and floats use Rust's shortest round-trip formatting. `manifest.json`
//! lists each output with its SHA-256 digest (the wall clock lives only in
//! the manifest, never in the CSVs). Worker count does not influence any
//! output; cap threads with `RAYON_NUM_THREADS`.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::codec::{
    codeword_type_deviation, evaluate_distortion, evaluate_per_symbol_realism,
    evaluate_strong_realism, induced_distribution_exact, sample_codebook, CodeSpec,
};
use crate::derand::derandomize_code;
use crate::prob::Pmf;
use crate::region::{min_distortion, RealismMode, RegionProblem, SolverOptions};
use crate::seeding;
use crate::synth::attach_to_code;
use crate::{Error, Result};

// ---------------------------------------------------------------------------
// Config
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Config {
    pub master_seed: u64,
    #[serde(default)]
    pub experiment: Vec<ExperimentConfig>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub name: String,
    pub source: Pmf,
    pub distortion: Vec<Vec<f64>>,
    #[serde(default = "default_mode")]
    pub mode: RealismMode,
    #[serde(default)]
    pub v_card_cap: Option<usize>,
    pub region: RegionSection,
    pub code: CodeSection,
    #[serde(default)]
    pub derand: DerandSection,
    #[serde(default)]
    pub synth: Option<SynthSection>,
}

fn default_mode() -> RealismMode {
    RealismMode::Strong
}

/// Rate point whose witness seeds the code constructions. `inf` is valid
/// TOML for unconstrained `r_c` / `r_d`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct RegionSection {
    pub r: f64,
    pub r_c: f64,
    pub r_d: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CodeSection {
    pub n_values: Vec<usize>,
    /// Per-symbol rate margin over the region point. A growing total surplus
    /// drives the realism trend down with `n`.
    #[serde(default = "default_rate_margin")]
    pub rate_margin: f64,
    /// Absolute extra codebook bits spread over the block (a vanishing
    /// per-symbol margin `bits / n`). Keeping the message count a constant
    /// multiple of `2^{nR}` is what makes the derandomization scores shrink
    /// with `n` at desk scale.
    #[serde(default)]
    pub rate_margin_bits: f64,
    /// Extra common-randomness rate over the witness's `I(Y;V) - R_code`.
    #[serde(default = "default_rc_margin")]
    pub rc_margin: f64,
    /// Threshold for the codeword type-deviation exceedance column.
    #[serde(default = "default_type_eps")]
    pub type_eps: f64,
}

impl CodeSection {
    /// Code compression rate at blocklength `n`.
    pub fn code_rate(&self, region_r: f64, n: usize) -> f64 {
        region_r + self.rate_margin + self.rate_margin_bits / n as f64
    }
}

fn default_rate_margin() -> f64 {
    0.35
}
fn default_rc_margin() -> f64 {
    0.3
}
fn default_type_eps() -> f64 {
    0.1
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DerandSection {
    pub candidates: usize,
}

impl Default for DerandSection {
    fn default() -> Self {
        DerandSection { candidates: 32 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SynthSection {
    /// Eligibility slack in the typed entropy condition.
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    /// Synthesis rate offset over the witness's `H(Y|V)`.
    #[serde(default = "default_rate_offset")]
    pub rate_offset: f64,
}

fn default_gamma() -> f64 {
    0.2
}
fn default_rate_offset() -> f64 {
    0.4
}

impl Config {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(format!("config parse error: {e}")))
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        Config::from_toml(&text)
    }
}

// ---------------------------------------------------------------------------
// Manifest
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ManifestFile {
    pub name: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub crate_version: String,
    pub master_seed: u64,
    pub config_sha256: String,
    pub wall_clock_seconds: f64,
    pub files: Vec<ManifestFile>,
}

fn sha256_hex(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    let digest = hasher.finalize();
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

// ---------------------------------------------------------------------------
// Pipeline
// ---------------------------------------------------------------------------

/// One blocklength of an experiment: the exact code evaluations for the
/// randomized encoder, the derandomization report, and the same evaluations
/// for the selected deterministic encoder.
#[derive(Debug, Clone)]
pub struct CodeRun {
    pub n: usize,
    pub ij: crate::codec::InducedJoint,
    pub tvd_strong: f64,
    pub tvd_per_symbol: f64,
    pub distortion: f64,
    pub type_exceedance: f64,
    pub derand: crate::derand::DerandReport,
    pub det_ij: crate::codec::InducedJoint,
    pub det_tvd_strong: f64,
    pub det_tvd_per_symbol: f64,
    pub det_distortion: f64,
}

/// Solve the experiment's region point and return the witness.
pub fn solve_region(
    exp: &ExperimentConfig,
    master_seed: u64,
) -> Result<(crate::region::RegionSolution, crate::prob::MarkovJoint)> {
    let problem = RegionProblem::new(
        exp.source.clone(),
        exp.distortion.clone(),
        exp.mode,
        exp.v_card_cap,
    )?;
    let solver_opts = SolverOptions {
        seed: seeding::derive_seed(master_seed, &format!("region:{}", exp.name), 0),
        ..SolverOptions::default()
    };
    let sol =
        min_distortion(&problem, exp.region.r, exp.region.r_c, exp.region.r_d, &solver_opts)?;
    let witness = sol.achieving_joint.clone().ok_or_else(|| {
        Error::Numeric(format!(
            "experiment {:?}: rate point ({}, {}, {}) is infeasible",
            exp.name, exp.region.r, exp.region.r_c, exp.region.r_d
        ))
    })?;
    Ok((sol, witness))
}

/// Build and evaluate the experiment's code at one blocklength.
///
/// The codebook seed is shared across blocklengths of one experiment, so
/// codebooks are nested through the per-word streams and trend comparisons
/// use common random numbers.
pub fn build_code_run(
    exp: &ExperimentConfig,
    witness: &crate::prob::MarkovJoint,
    master_seed: u64,
    n: usize,
) -> Result<CodeRun> {
    let i_yv = witness.i_yv()?;
    let r_code = exp.code.code_rate(exp.region.r, n);
    let rc_code = (i_yv - r_code).max(0.0) + exp.code.rc_margin;
    let spec = CodeSpec::new(n, r_code, rc_code, exp.region.r_d)?;
    let cb_seed = seeding::derive_seed(master_seed, &format!("codebook:{}", exp.name), 0);
    let cb = sample_codebook(witness.p_v(), &spec, cb_seed)?;
    let ij = induced_distribution_exact(
        &cb,
        witness.k_x_given_v(),
        witness.k_y_given_v(),
        &exp.source,
        None,
    )?;
    let type_report = codeword_type_deviation(&cb, witness.p_v())?;
    let type_exceedance = type_report.exceedance_fraction(exp.code.type_eps);
    let tvd_strong = evaluate_strong_realism(&ij, &exp.source)?;
    let tvd_per_symbol = evaluate_per_symbol_realism(&ij, &exp.source)?;
    let distortion = evaluate_distortion(&ij, &exp.distortion)?;

    let derand_seed =
        seeding::derive_seed(master_seed, &format!("derand:{}", exp.name), n as u64);
    let (det, derand) = derandomize_code(&ij, exp.derand.candidates, derand_seed)?;
    let det_ij = det.apply(&ij)?;
    let det_tvd_strong = evaluate_strong_realism(&det_ij, &exp.source)?;
    let det_tvd_per_symbol = evaluate_per_symbol_realism(&det_ij, &exp.source)?;
    let det_distortion = evaluate_distortion(&det_ij, &exp.distortion)?;
    Ok(CodeRun {
        n,
        ij,
        tvd_strong,
        tvd_per_symbol,
        distortion,
        type_exceedance,
        derand,
        det_ij,
        det_tvd_strong,
        det_tvd_per_symbol,
        det_distortion,
    })
}

/// Run every experiment in the config, writing CSVs and a manifest into
/// `out_dir` (created if needed). Returns the manifest.
pub fn run_experiment(config: &Config, out_dir: &Path) -> Result<Manifest> {
    let start = std::time::Instant::now();
    fs::create_dir_all(out_dir)?;

    let mut results = String::from(
        "experiment,n,encoder,tvd_strong,tvd_per_symbol,distortion,type_exceedance,\
         derand_min_score,derand_mean_score\n",
    );
    let mut synth_rows = String::from(
        "experiment,n,rate,gamma,joint_tvd,weighted_word_tvd,mean_word_tvd,eligible_fraction\n",
    );
    let mut any_synth = false;

    for exp in &config.experiment {
        let (_, witness) = solve_region(exp, config.master_seed)?;
        let h_ygv = witness.h_y_given_v()?;

        for &n in &exp.code.n_values {
            let run = build_code_run(exp, &witness, config.master_seed, n)?;
            results.push_str(&format!(
                "{},{},randomized,{},{},{},{},,\n",
                exp.name, n, run.tvd_strong, run.tvd_per_symbol, run.distortion,
                run.type_exceedance
            ));
            results.push_str(&format!(
                "{},{},derandomized,{},{},{},{},{},{}\n",
                exp.name,
                n,
                run.det_tvd_strong,
                run.det_tvd_per_symbol,
                run.det_distortion,
                run.type_exceedance,
                run.derand.min_score,
                run.derand.mean_score
            ));

            if let Some(synth) = &exp.synth {
                any_synth = true;
                let synth_seed =
                    seeding::derive_seed(config.master_seed, &format!("synth:{}", exp.name), n as u64);
                let rate = h_ygv + synth.rate_offset;
                let report = attach_to_code(
                    &run.ij,
                    witness.k_y_given_v(),
                    rate,
                    synth.gamma,
                    synth_seed,
                )?;
                let mean_word_tvd = report.per_word.iter().map(|c| c.tvd).sum::<f64>()
                    / report.per_word.len() as f64;
                let eligible = report.per_word.iter().filter(|c| c.eligible).count() as f64
                    / report.per_word.len() as f64;
                synth_rows.push_str(&format!(
                    "{},{},{},{},{},{},{},{}\n",
                    exp.name,
                    n,
                    rate,
                    synth.gamma,
                    report.joint_tvd,
                    report.weighted_word_tvd,
                    mean_word_tvd,
                    eligible
                ));
            }
        }
    }

    let mut files = Vec::new();
    let mut write_file = |name: &str, contents: &str| -> Result<()> {
        let path = out_dir.join(name);
        fs::write(&path, contents)?;
        files.push(ManifestFile {
            name: name.to_string(),
            sha256: sha256_hex(contents.as_bytes()),
            bytes: contents.len() as u64,
        });
        Ok(())
    };
    write_file("results.csv", &results)?;
    if any_synth {
        write_file("synth.csv", &synth_rows)?;
    }

    let config_text = toml::to_string(config)
        .map_err(|e| Error::Config(format!("config serialization: {e}")))?;
    let manifest = Manifest {
        crate_version: env!("CARGO_PKG_VERSION").to_string(),
        master_seed: config.master_seed,
        config_sha256: sha256_hex(config_text.as_bytes()),
        wall_clock_seconds: start.elapsed().as_secs_f64(),
        files,
    };
    fs::write(out_dir.join("manifest.json"), serde_json::to_string_pretty(&manifest)?)?;
    Ok(manifest)
}

// ---------------------------------------------------------------------------
// Plot data
// ---------------------------------------------------------------------------

/// Flatten every CSV listed in a results directory's manifest into one
/// long-format CSV: `experiment,n,metric,value` rows. Non-numeric columns
/// other than the keys become part of the metric name.
pub fn emit_plotdata(results_dir: &Path) -> Result<String> {
    let manifest_path = results_dir.join("manifest.json");
    if !manifest_path.exists() {
        return Err(Error::Config(format!(
            "missing manifest.json in {}",
            results_dir.display()
        )));
    }
    let manifest: Manifest = serde_json::from_str(&fs::read_to_string(&manifest_path)?)?;
    let mut out = String::from("experiment,n,metric,value\n");
    for file in &manifest.files {
        if !file.name.ends_with(".csv") {
            continue;
        }
        let text = fs::read_to_string(results_dir.join(&file.name))?;
        let mut lines = text.lines();
        let header: Vec<&str> = match lines.next() {
            Some(h) => h.split(',').collect(),
            None => continue,
        };
        let exp_col = header.iter().position(|c| *c == "experiment");
        let n_col = header.iter().position(|c| *c == "n");
        let (Some(exp_col), Some(n_col)) = (exp_col, n_col) else {
            continue;
        };
        for line in lines {
            if line.is_empty() {
                continue;
            }
            let cells: Vec<&str> = line.split(',').collect();
            // Qualifier columns (non-numeric, non-key) tag the metric name.
            let mut qualifier = String::new();
            for (i, cell) in cells.iter().enumerate() {
                if i == exp_col || i == n_col || cell.is_empty() {
                    continue;
                }
                if cell.parse::<f64>().is_err() {
                    qualifier.push('_');
                    qualifier.push_str(cell);
                }
            }
            for (i, cell) in cells.iter().enumerate() {
                if i == exp_col || i == n_col || cell.is_empty() {
                    continue;
                }
                if let Ok(v) = cell.parse::<f64>() {
                    out.push_str(&format!(
                        "{},{},{}{},{}\n",
                        cells[exp_col], cells[n_col], header[i], qualifier, v
                    ));
                }
            }
        }
    }
    Ok(out)
}

/// Write the plot data next to the results and return its path.
pub fn write_plotdata(results_dir: &Path) -> Result<PathBuf> {
    let data = emit_plotdata(results_dir)?;
    let path = results_dir.join("plotdata.csv");
    fs::write(&path, data)?;
    Ok(path)
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------
