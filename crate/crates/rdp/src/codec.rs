//! Finite-blocklength fixed-length codes and their exact induced
//! distributions.
//!
//! A code here is a random codebook of auxiliary words `v^n(m, j)` (message
//! `m`, common randomness `j`), a likelihood encoder that picks `m` with
//! probability proportional to `prod_t k_{X|V}(x_t | v_t(m, j))`, and a
//! memoryless decoder that emits `y_t ~ k_{Y|V}(. | v_t(m, j))`
//! independently per position.
//!
//! At desk-scale blocklengths the induced joint over `(x^n, j, m, y^n)` is
//! held exactly in factored form: the i.i.d. source power, the encoder
//! conditional table, and the decoder law. Realism (output-law TVD),
//! per-symbol realism, distortion and the Markov factorization residual are
//! all computed from it without Monte Carlo error; a sampled surrogate is
//! available for larger `n` and flags the plug-in TVD estimator's upward
//! bias.

use std::collections::BTreeSet;

use rand::Rng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::index;
use crate::prob::{tvd_slices, EmpiricalDist, Kernel, Pmf};
use crate::seeding;
use crate::{Error, Result};

/// Serde adapter for extended rates: JSON has no infinity literal, so
/// unconstrained rates appear as the string `"inf"` (and `null` or a missing
/// field also read as infinite).
pub mod ext_rate {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_infinite() {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(*v)
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Number(f64),
            Text(String),
            Null,
        }
        match Raw::deserialize(d)? {
            Raw::Number(v) => Ok(v),
            Raw::Text(t) if t == "inf" || t == "infinity" => Ok(f64::INFINITY),
            Raw::Text(t) => t.parse::<f64>().map_err(serde::de::Error::custom),
            Raw::Null => Ok(f64::INFINITY),
        }
    }
}

/// Fixed-length code parameters. `message_count = floor(2^{nR})` and
/// `cr_count = floor(2^{n R_c})`; `r_d` is carried as metadata (the plain
/// memoryless decoder draws unbounded private randomness; the synthesized
/// decoder realizes a finite rate).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CodeSpec {
    pub n: usize,
    pub r: f64,
    pub r_c: f64,
    #[serde(with = "ext_rate", default = "default_inf")]
    pub r_d: f64,
}

fn default_inf() -> f64 {
    f64::INFINITY
}

impl CodeSpec {
    pub fn new(n: usize, r: f64, r_c: f64, r_d: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidInput("blocklength must be >= 1".into()));
        }
        if !r.is_finite() || r < 0.0 || !r_c.is_finite() || r_c < 0.0 {
            return Err(Error::InvalidInput("R and R_c must be finite and >= 0".into()));
        }
        if r_d < 0.0 || r_d.is_nan() {
            return Err(Error::InvalidInput("R_d must be >= 0 or +inf".into()));
        }
        Ok(CodeSpec { n, r, r_c, r_d })
    }

    pub fn message_count(&self) -> usize {
        ((2.0f64).powf(self.n as f64 * self.r).floor() as usize).max(1)
    }

    pub fn cr_count(&self) -> usize {
        ((2.0f64).powf(self.n as f64 * self.r_c).floor() as usize).max(1)
    }
}

/// Codebook: one auxiliary word per `(m, j)` pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Codebook {
    pub n: usize,
    pub v_alphabet: Vec<String>,
    pub msg_count: usize,
    pub cr_count: usize,
    /// Indexed `m * cr_count + j`; symbols as alphabet indices.
    words: Vec<Vec<usize>>,
    pub generator_seed: u64,
}

impl Codebook {
    pub fn word(&self, m: usize, j: usize) -> &[usize] {
        &self.words[m * self.cr_count + j]
    }

    pub fn words(&self) -> &[Vec<usize>] {
        &self.words
    }

    pub fn word_count(&self) -> usize {
        self.words.len()
    }
}

/// I.i.d. codebook: `msg_count x cr_count` words, each with i.i.d. symbols
/// from `p_v`. Deterministic given the seed.
///
/// Each word `(m, j)` draws from its own stream keyed by `(seed, m, j)`, so
/// codebooks at different blocklengths or rate schedules share word prefixes
/// (common random numbers): finite-`n` trends compare correlated draws
/// instead of independent noise.
pub fn sample_codebook(p_v: &Pmf, spec: &CodeSpec, seed: u64) -> Result<Codebook> {
    let msg = spec.message_count();
    let cr = spec.cr_count();
    let total = msg
        .checked_mul(cr)
        .and_then(|t| t.checked_mul(spec.n))
        .ok_or_else(|| Error::Budget("codebook size overflows".into()))?;
    if total > 200_000_000 || cr >= (1 << 24) {
        return Err(Error::Budget(format!("codebook of {total} symbols exceeds budget")));
    }
    let mut words = Vec::with_capacity(msg * cr);
    for m in 0..msg {
        for j in 0..cr {
            let key = ((m as u64) << 24) | j as u64;
            let mut rng = seeding::task_rng(seed, "codebook-word", key);
            words.push((0..spec.n).map(|_| p_v.sample_index(rng.random::<f64>())).collect());
        }
    }
    Ok(Codebook {
        n: spec.n,
        v_alphabet: p_v.alphabet().to_vec(),
        msg_count: msg,
        cr_count: cr,
        words,
        generator_seed: seed,
    })
}

/// Rejection-sampling report for [`build_circular_codebook`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CircularReport {
    pub base_accepted: usize,
    pub attempts: usize,
    pub acceptance_rate: f64,
    /// Distinct words after expanding all circular shifts.
    pub shift_count: usize,
}

/// Codebook of typical words closed under circular shifts.
///
/// Base words are drawn i.i.d. from `p_v` and kept only if their empirical
/// type satisfies the multiplicative constraint
/// `|emp(v) - p_v(v)| <= delta * p_v(v)` for every symbol; each kept word is
/// expanded into the set of its `n` circular shifts (shifting preserves the
/// type, so the whole set is typical). The result uses no common randomness
/// (`cr_count = 1`).
pub fn build_circular_codebook(
    p_v: &Pmf,
    n: usize,
    r: f64,
    delta: f64,
    seed: u64,
) -> Result<(Codebook, CircularReport)> {
    if delta <= 0.0 {
        return Err(Error::InvalidInput("delta must be positive".into()));
    }
    if !p_v.full_support() {
        return Err(Error::InvalidInput(
            "circular codebook requires a full-support p_V (the type constraint \
             is multiplicative)"
            .into(),
        ));
    }
    let spec = CodeSpec::new(n, r, 0.0, f64::INFINITY)?;
    let k_target = spec.message_count();
    let budget = k_target.saturating_mul(10_000).max(100_000);
    let mut rng = seeding::task_rng(seed, "circular-codebook", 0);
    let mut base: Vec<Vec<usize>> = Vec::with_capacity(k_target);
    let mut attempts = 0usize;
    while base.len() < k_target && attempts < budget {
        attempts += 1;
        let word: Vec<usize> = (0..n).map(|_| p_v.sample_index(rng.random::<f64>())).collect();
        let t = EmpiricalDist::from_indices(&word, p_v.alphabet().to_vec())?;
        let emp = t.to_pmf()?;
        let ok = (0..p_v.len())
            .all(|v| (emp.prob(v) - p_v.prob(v)).abs() <= delta * p_v.prob(v) + 1e-15);
        if ok {
            base.push(word);
        }
    }
    if base.len() < k_target {
        return Err(Error::Budget(format!(
            "rejection budget exhausted after {attempts} attempts ({} of {k_target} words); \
             delta = {delta} is too tight for n = {n}",
            base.len()
        )));
    }
    let mut shifts: BTreeSet<Vec<usize>> = BTreeSet::new();
    for word in &base {
        for s in 0..n {
            let mut shifted = Vec::with_capacity(n);
            shifted.extend_from_slice(&word[s..]);
            shifted.extend_from_slice(&word[..s]);
            shifts.insert(shifted);
        }
    }
    let words: Vec<Vec<usize>> = shifts.into_iter().collect();
    let report = CircularReport {
        base_accepted: base.len(),
        attempts,
        acceptance_rate: base.len() as f64 / attempts as f64,
        shift_count: words.len(),
    };
    let cb = Codebook {
        n,
        v_alphabet: p_v.alphabet().to_vec(),
        msg_count: words.len(),
        cr_count: 1,
        words,
        generator_seed: seed,
    };
    Ok((cb, report))
}

// ---------------------------------------------------------------------------
// Encoding and decoding
// ---------------------------------------------------------------------------

/// Exact conditional law of the likelihood encoder: the probability of each
/// message given `(x^n, j)` is the normalized product likelihood
/// `prod_t k_{X|V}(x_t | v_t(m, j))`. Returns the row and whether the
/// all-zero-likelihood fallback (uniform over messages) fired.
pub fn encoder_distribution(
    x: &[usize],
    j: usize,
    cb: &Codebook,
    k_xgv: &Kernel,
) -> Result<(Vec<f64>, bool)> {
    if x.len() != cb.n {
        return Err(Error::InvalidInput("input length differs from blocklength".into()));
    }
    if j >= cb.cr_count {
        return Err(Error::InvalidInput("common randomness index out of range".into()));
    }
    if k_xgv.input_alphabet() != cb.v_alphabet {
        return Err(Error::AlphabetMismatch("encoder kernel input vs codebook alphabet".into()));
    }
    let mut row: Vec<f64> = (0..cb.msg_count)
        .map(|m| {
            let word = cb.word(m, j);
            word.iter().zip(x).map(|(&v, &xt)| k_xgv.prob(v, xt)).product()
        })
        .collect();
    let total: f64 = row.iter().sum();
    if total <= 0.0 {
        let u = 1.0 / cb.msg_count as f64;
        row.iter_mut().for_each(|p| *p = u);
        return Ok((row, true));
    }
    row.iter_mut().for_each(|p| *p /= total);
    Ok((row, false))
}

/// Outcome of one likelihood-encoder draw.
#[derive(Debug, Clone, Copy)]
pub struct EncodeOutcome {
    pub m: usize,
    /// True when every message had zero likelihood and the encoder fell back
    /// to a uniform draw.
    pub fallback: bool,
}

/// Sample a message from the likelihood encoder's conditional law.
pub fn likelihood_encode(
    x: &[usize],
    j: usize,
    cb: &Codebook,
    k_xgv: &Kernel,
    rng: &mut ChaCha12Rng,
) -> Result<EncodeOutcome> {
    let (row, fallback) = encoder_distribution(x, j, cb, k_xgv)?;
    let u = rng.random::<f64>();
    let mut acc = 0.0;
    let mut m = row.len() - 1;
    for (i, p) in row.iter().enumerate() {
        acc += p;
        if u < acc {
            m = i;
            break;
        }
    }
    Ok(EncodeOutcome { m, fallback })
}

/// Sample `y^n` from the memoryless decoder: `y_t ~ k_{Y|V}(. | v_t(m, j))`.
pub fn memoryless_decode(
    m: usize,
    j: usize,
    cb: &Codebook,
    k_ygv: &Kernel,
    rng: &mut ChaCha12Rng,
) -> Result<Vec<usize>> {
    if m >= cb.msg_count || j >= cb.cr_count {
        return Err(Error::InvalidInput("message or common randomness index out of range".into()));
    }
    if k_ygv.input_alphabet() != cb.v_alphabet {
        return Err(Error::AlphabetMismatch("decoder kernel input vs codebook alphabet".into()));
    }
    let word = cb.word(m, j);
    Ok(word
        .iter()
        .map(|&v| {
            let row = k_ygv.row(v);
            let u = rng.random::<f64>();
            let mut acc = 0.0;
            for (y, p) in row.iter().enumerate() {
                acc += p;
                if u < acc {
                    return y;
                }
            }
            row.len() - 1
        })
        .collect())
}

/// `prod_t k(y_t | word_t)`: the memoryless decoder's probability of an
/// output sequence.
pub fn decoder_seq_prob(word: &[usize], y: &[usize], k_ygv: &Kernel) -> f64 {
    word.iter().zip(y).map(|(&v, &yt)| k_ygv.prob(v, yt)).product()
}

// ---------------------------------------------------------------------------
// Exact induced distribution
// ---------------------------------------------------------------------------

/// Decoder stage of an induced joint: either the memoryless product law or an
/// explicit per-(m, j) table over output sequences (used by channel
/// synthesis).
#[derive(Debug, Clone)]
pub enum DecoderLaw {
    Memoryless(Kernel),
    /// `rows[m * cr + j][y_idx]`
    Table { y_card: usize, rows: Vec<Vec<f64>> },
}

/// Exact induced distribution of a code, in factored form
/// `p_X^n(x) * (1/cr) * enc(m | x, j) * dec(y | m, j)`.
///
/// The factorization is the Markov chain `x^n - (m, j) - y^n`; every
/// evaluation below sums it exactly.
#[derive(Debug, Clone)]
pub struct InducedJoint {
    pub n: usize,
    pub x_card: usize,
    pub y_card: usize,
    pub msg_count: usize,
    pub cr_count: usize,
    pub p_x: Pmf,
    codebook: Codebook,
    decoder: DecoderLaw,
    /// `enc[(x_idx * cr + j) * msg + m]`
    enc: Vec<f64>,
    /// `p_X^{(x) n}` per ranked sequence.
    p_x_pow: Vec<f64>,
    /// Joint `P(m, j)`, indexed `m * cr + j`.
    w_mj: Vec<f64>,
    /// Inputs `(x, j)` on which the zero-likelihood fallback fired.
    pub fallback_inputs: usize,
}

/// Budget on `|X|^n * cr * msg * |Y|^n` for exact evaluation.
pub const DEFAULT_EXACT_BUDGET: u128 = 100_000_000;

/// Build the exact induced joint by enumerating all `(x^n, j)` encoder rows.
///
/// Fails with a budget error (pointing at the Monte Carlo surrogate) when
/// `|X|^n * cr * msg * |Y|^n` exceeds `budget`.
pub fn induced_distribution_exact(
    cb: &Codebook,
    k_xgv: &Kernel,
    k_ygv: &Kernel,
    p_x: &Pmf,
    budget: Option<u128>,
) -> Result<InducedJoint> {
    let budget = budget.unwrap_or(DEFAULT_EXACT_BUDGET);
    let x_card = k_xgv.output_len();
    let y_card = k_ygv.output_len();
    if p_x.len() != x_card {
        return Err(Error::AlphabetMismatch("source vs encoder kernel output".into()));
    }
    if k_ygv.input_alphabet() != cb.v_alphabet || k_xgv.input_alphabet() != cb.v_alphabet {
        return Err(Error::AlphabetMismatch("kernel inputs vs codebook alphabet".into()));
    }
    let n = cb.n;
    let x_pow = index::pow(x_card, n)
        .ok_or_else(|| Error::Budget("|X|^n overflows".into()))?;
    let y_pow = index::pow(y_card, n)
        .ok_or_else(|| Error::Budget("|Y|^n overflows".into()))?;
    let table = x_pow as u128 * cb.msg_count as u128 * cb.cr_count as u128 * y_pow as u128;
    if table > budget {
        return Err(Error::Budget(format!(
            "exact induced joint would cover {table} table entries (budget {budget}); \
             use the Monte Carlo surrogate instead"
        )));
    }

    let mut p_x_pow = vec![0.0; x_pow];
    let mut seq = vec![0usize; n];
    for (x_idx, slot) in p_x_pow.iter_mut().enumerate() {
        index::unrank_into(x_idx, x_card, &mut seq);
        *slot = seq.iter().map(|&s| p_x.prob(s)).product();
    }

    let msg = cb.msg_count;
    let cr = cb.cr_count;
    let mut enc = vec![0.0; x_pow * cr * msg];
    let mut fallback_inputs = 0usize;
    for x_idx in 0..x_pow {
        index::unrank_into(x_idx, x_card, &mut seq);
        for j in 0..cr {
            let (row, fb) = encoder_distribution(&seq, j, cb, k_xgv)?;
            if fb {
                fallback_inputs += 1;
            }
            enc[(x_idx * cr + j) * msg..(x_idx * cr + j) * msg + msg].copy_from_slice(&row);
        }
    }

    let mut w_mj = vec![0.0; msg * cr];
    for x_idx in 0..x_pow {
        let px = p_x_pow[x_idx];
        for j in 0..cr {
            let base = (x_idx * cr + j) * msg;
            for m in 0..msg {
                w_mj[m * cr + j] += px / cr as f64 * enc[base + m];
            }
        }
    }

    Ok(InducedJoint {
        n,
        x_card,
        y_card,
        msg_count: msg,
        cr_count: cr,
        p_x: p_x.clone(),
        codebook: cb.clone(),
        decoder: DecoderLaw::Memoryless(k_ygv.clone()),
        enc,
        p_x_pow,
        w_mj,
        fallback_inputs,
    })
}

impl InducedJoint {
    pub fn codebook(&self) -> &Codebook {
        &self.codebook
    }

    pub fn encoder_row(&self, x_idx: usize, j: usize) -> &[f64] {
        let base = (x_idx * self.cr_count + j) * self.msg_count;
        &self.enc[base..base + self.msg_count]
    }

    pub fn w_mj(&self) -> &[f64] {
        &self.w_mj
    }

    /// `p_X^{(x) n}` of the ranked input sequence.
    pub fn p_x_mass(&self, x_idx: usize) -> f64 {
        self.p_x_pow[x_idx]
    }

    /// Decoder law over ranked output sequences for a given `(m, j)`.
    pub fn decoder_row(&self, m: usize, j: usize) -> Vec<f64> {
        match &self.decoder {
            DecoderLaw::Memoryless(k) => {
                let y_pow = index::pow(self.y_card, self.n).unwrap();
                let word = self.codebook.word(m, j);
                let mut row = vec![0.0; y_pow];
                let mut seq = vec![0usize; self.n];
                for (y_idx, slot) in row.iter_mut().enumerate() {
                    index::unrank_into(y_idx, self.y_card, &mut seq);
                    *slot = decoder_seq_prob(word, &seq, k);
                }
                row
            }
            DecoderLaw::Table { rows, .. } => rows[m * self.cr_count + j].clone(),
        }
    }

    /// Replace the encoder table (same shape), recomputing the `(m, j)` law.
    pub fn with_encoder_table(&self, enc: Vec<f64>) -> Result<InducedJoint> {
        if enc.len() != self.enc.len() {
            return Err(Error::InvalidInput("encoder table shape mismatch".into()));
        }
        let mut out = self.clone();
        out.enc = enc;
        out.fallback_inputs = 0;
        out.w_mj.iter_mut().for_each(|w| *w = 0.0);
        for x_idx in 0..out.p_x_pow.len() {
            let px = out.p_x_pow[x_idx];
            for j in 0..out.cr_count {
                let base = (x_idx * out.cr_count + j) * out.msg_count;
                for m in 0..out.msg_count {
                    out.w_mj[m * out.cr_count + j] += px / out.cr_count as f64 * out.enc[base + m];
                }
            }
        }
        Ok(out)
    }

    /// Replace the decoder stage, keeping source, codebook and encoder table.
    pub fn with_decoder(&self, decoder: DecoderLaw) -> Result<InducedJoint> {
        if let DecoderLaw::Table { y_card, rows } = &decoder {
            let y_pow = index::pow(*y_card, self.n)
                .ok_or_else(|| Error::Budget("|Y|^n overflows".into()))?;
            if rows.len() != self.msg_count * self.cr_count
                || rows.iter().any(|r| r.len() != y_pow)
            {
                return Err(Error::InvalidInput("decoder table shape mismatch".into()));
            }
        }
        let mut out = self.clone();
        out.decoder = decoder;
        Ok(out)
    }

    /// Explicit summation of the full factored table; 1 within round-off.
    pub fn total_mass(&self) -> f64 {
        let mut total = 0.0;
        for x_idx in 0..self.p_x_pow.len() {
            let px = self.p_x_pow[x_idx];
            for j in 0..self.cr_count {
                let row = self.encoder_row(x_idx, j);
                let enc_sum: f64 = row.iter().sum();
                total += px / self.cr_count as f64 * enc_sum;
            }
        }
        // The decoder stage is row-stochastic; verify on the first pair.
        let dec_sum: f64 = self.decoder_row(0, 0).iter().sum();
        total * dec_sum
    }

    /// Sup deviation of the `x^n`-marginal from `p_X^{(x) n}`.
    pub fn marginal_x_sup_dev(&self) -> f64 {
        let mut worst = 0.0f64;
        for x_idx in 0..self.p_x_pow.len() {
            let mut mass = 0.0;
            for j in 0..self.cr_count {
                let enc_sum: f64 = self.encoder_row(x_idx, j).iter().sum();
                mass += self.p_x_pow[x_idx] / self.cr_count as f64 * enc_sum;
            }
            worst = worst.max((mass - self.p_x_pow[x_idx]).abs());
        }
        worst
    }

    /// Exact output law over ranked `y^n`.
    pub fn output_law(&self) -> Vec<f64> {
        let y_pow = index::pow(self.y_card, self.n).unwrap();
        let mut law = vec![0.0; y_pow];
        for m in 0..self.msg_count {
            for j in 0..self.cr_count {
                let w = self.w_mj[m * self.cr_count + j];
                if w == 0.0 {
                    continue;
                }
                let row = self.decoder_row(m, j);
                for (l, r) in law.iter_mut().zip(&row) {
                    *l += w * r;
                }
            }
        }
        law
    }

    /// Product law `p_X^{(x) n}` over ranked `y^n` (requires `|Y| = |X|`).
    pub fn source_power_law(&self) -> Result<Vec<f64>> {
        if self.y_card != self.x_card {
            return Err(Error::AlphabetMismatch(
                "output alphabet differs from source alphabet".into(),
            ));
        }
        Ok(self.p_x_pow.clone())
    }

    /// Per-position output marginals, `n` rows of length `|Y|`.
    pub fn per_symbol_marginals(&self) -> Vec<Vec<f64>> {
        let mut marg = vec![vec![0.0; self.y_card]; self.n];
        match &self.decoder {
            DecoderLaw::Memoryless(k) => {
                for m in 0..self.msg_count {
                    for j in 0..self.cr_count {
                        let w = self.w_mj[m * self.cr_count + j];
                        if w == 0.0 {
                            continue;
                        }
                        let word = self.codebook.word(m, j);
                        for (t, &v) in word.iter().enumerate() {
                            for (y, p) in k.row(v).iter().enumerate() {
                                marg[t][y] += w * p;
                            }
                        }
                    }
                }
            }
            DecoderLaw::Table { .. } => {
                let mut seq = vec![0usize; self.n];
                for m in 0..self.msg_count {
                    for j in 0..self.cr_count {
                        let w = self.w_mj[m * self.cr_count + j];
                        if w == 0.0 {
                            continue;
                        }
                        let row = self.decoder_row(m, j);
                        for (y_idx, p) in row.iter().enumerate() {
                            if *p == 0.0 {
                                continue;
                            }
                            index::unrank_into(y_idx, self.y_card, &mut seq);
                            for (t, &yt) in seq.iter().enumerate() {
                                marg[t][yt] += w * p;
                            }
                        }
                    }
                }
            }
        }
        marg
    }

    /// Exact expected distortion `E[(1/n) sum_t d(x_t, y_t)]`.
    pub fn distortion(&self, d: &[Vec<f64>]) -> Result<f64> {
        if d.len() != self.x_card || d.iter().any(|r| r.len() != self.y_card) {
            return Err(Error::InvalidInput("distortion matrix shape mismatch".into()));
        }
        // E[d] = sum_{x, j, m} P(x, j, m) * (1/n) sum_t E_dec[d(x_t, y_t)],
        // and under the memoryless decoder each position's expectation only
        // needs the word symbol's row.
        let mut dec_exp: Vec<Vec<f64>> = Vec::new(); // [v][x] for memoryless
        if let DecoderLaw::Memoryless(k) = &self.decoder {
            dec_exp = (0..k.input_len())
                .map(|v| {
                    (0..self.x_card)
                        .map(|x| k.row(v).iter().zip(&d[x]).map(|(p, dd)| p * dd).sum())
                        .collect()
                })
                .collect();
        }
        let mut total = 0.0;
        let mut x_seq = vec![0usize; self.n];
        let mut y_seq = vec![0usize; self.n];
        for x_idx in 0..self.p_x_pow.len() {
            let px = self.p_x_pow[x_idx];
            if px == 0.0 {
                continue;
            }
            index::unrank_into(x_idx, self.x_card, &mut x_seq);
            for j in 0..self.cr_count {
                let row = self.encoder_row(x_idx, j);
                for (m, em) in row.iter().enumerate() {
                    if *em == 0.0 {
                        continue;
                    }
                    let w = px / self.cr_count as f64 * em;
                    let mut block = 0.0;
                    match &self.decoder {
                        DecoderLaw::Memoryless(_) => {
                            let word = self.codebook.word(m, j);
                            for (t, &v) in word.iter().enumerate() {
                                block += dec_exp[v][x_seq[t]];
                            }
                        }
                        DecoderLaw::Table { .. } => {
                            let dec = self.decoder_row(m, j);
                            for (y_idx, p) in dec.iter().enumerate() {
                                if *p == 0.0 {
                                    continue;
                                }
                                index::unrank_into(y_idx, self.y_card, &mut y_seq);
                                let s: f64 =
                                    x_seq.iter().zip(&y_seq).map(|(&x, &y)| d[x][y]).sum();
                                block += p * s;
                            }
                        }
                    }
                    total += w * block / self.n as f64;
                }
            }
        }
        Ok(total)
    }

    /// Sup over `(x, j, m, y)` of `|P(y | x, m, j) - P(y | m, j)|`, computed
    /// from the assembled joint. Zero up to round-off: the encoder cannot
    /// leak into the decoder stage except through `(m, j)`.
    pub fn markov_residual(&self) -> f64 {
        let mut worst = 0.0f64;
        for m in 0..self.msg_count {
            for j in 0..self.cr_count {
                let dec = self.decoder_row(m, j);
                // P(y | m, j) reconstructed from the joint: sum over x of
                // P(x, j, m, y) / P(m, j).
                let w = self.w_mj[m * self.cr_count + j];
                if w == 0.0 {
                    continue;
                }
                let mut py_given_mj = vec![0.0; dec.len()];
                for x_idx in 0..self.p_x_pow.len() {
                    let via_x = self.p_x_pow[x_idx] / self.cr_count as f64
                        * self.encoder_row(x_idx, j)[m];
                    if via_x == 0.0 {
                        continue;
                    }
                    for (acc, dy) in py_given_mj.iter_mut().zip(&dec) {
                        *acc += via_x * dy;
                    }
                }
                for (acc, dy) in py_given_mj.iter().zip(&dec) {
                    worst = worst.max((acc / w - dy).abs());
                }
            }
        }
        worst
    }

    /// Materialize the full `(x^n, j, m, y^n)` table (row-major in that
    /// order). Budget-guarded; intended for brute-force checks at small `n`.
    pub fn materialize(&self, budget: Option<u128>) -> Result<Vec<f64>> {
        let budget = budget.unwrap_or(DEFAULT_EXACT_BUDGET);
        let y_pow = index::pow(self.y_card, self.n).unwrap();
        let x_pow = self.p_x_pow.len();
        let total =
            x_pow as u128 * self.cr_count as u128 * self.msg_count as u128 * y_pow as u128;
        if total > budget.min(20_000_000) {
            return Err(Error::Budget(format!("materialized table of {total} entries")));
        }
        let mut table = vec![0.0; total as usize];
        let mut dec_rows = Vec::with_capacity(self.msg_count * self.cr_count);
        for m in 0..self.msg_count {
            for j in 0..self.cr_count {
                dec_rows.push(self.decoder_row(m, j));
            }
        }
        let mut idx = 0usize;
        for x_idx in 0..x_pow {
            for j in 0..self.cr_count {
                let enc = self.encoder_row(x_idx, j);
                for m in 0..self.msg_count {
                    let w = self.p_x_pow[x_idx] / self.cr_count as f64 * enc[m];
                    let dec = &dec_rows[m * self.cr_count + j];
                    for dy in dec {
                        table[idx] = w * dy;
                        idx += 1;
                    }
                }
            }
        }
        Ok(table)
    }
}

// ---------------------------------------------------------------------------
// Evaluations
// ---------------------------------------------------------------------------

/// Exact strong-realism score: `tvd(P_{Y^n}, p_X^{(x) n})`.
pub fn evaluate_strong_realism(ij: &InducedJoint, p_x: &Pmf) -> Result<f64> {
    if p_x != &ij.p_x {
        return Err(Error::AlphabetMismatch("realism target differs from code source".into()));
    }
    let law = ij.output_law();
    let target = ij.source_power_law()?;
    Ok(tvd_slices(&law, &target))
}

/// Exact per-symbol realism score: `max_t tvd(P_{Y_t}, p_X)`.
pub fn evaluate_per_symbol_realism(ij: &InducedJoint, p_x: &Pmf) -> Result<f64> {
    if p_x.len() != ij.y_card {
        return Err(Error::AlphabetMismatch("per-symbol target vs output alphabet".into()));
    }
    let marg = ij.per_symbol_marginals();
    Ok(marg
        .iter()
        .map(|row| tvd_slices(row, p_x.probs()))
        .fold(0.0f64, f64::max))
}

/// Exact expected distortion of the induced joint.
pub fn evaluate_distortion(ij: &InducedJoint, d: &[Vec<f64>]) -> Result<f64> {
    ij.distortion(d)
}

/// Per-word TVD between empirical type and `p_V`, plus the fraction of words
/// (uniform over `(m, j)`) whose deviation reaches a threshold.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TypeDeviationReport {
    pub deviations: Vec<f64>,
}

impl TypeDeviationReport {
    pub fn exceedance_fraction(&self, eps: f64) -> f64 {
        let hits = self.deviations.iter().filter(|d| **d >= eps).count();
        hits as f64 / self.deviations.len() as f64
    }
}

pub fn codeword_type_deviation(cb: &Codebook, p_v: &Pmf) -> Result<TypeDeviationReport> {
    if p_v.alphabet() != cb.v_alphabet {
        return Err(Error::AlphabetMismatch("p_V vs codebook alphabet".into()));
    }
    let deviations = cb
        .words()
        .iter()
        .map(|w| {
            let t = EmpiricalDist::from_indices(w, p_v.alphabet().to_vec())?;
            crate::prob::tvd(&t.to_pmf()?, p_v)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(TypeDeviationReport { deviations })
}

// ---------------------------------------------------------------------------
// Monte Carlo surrogate
// ---------------------------------------------------------------------------

/// Sampled surrogate of the induced joint for blocklengths beyond the exact
/// budget.
#[derive(Debug, Clone)]
pub struct SampledJoint {
    pub n: usize,
    pub samples: usize,
    /// Empirical counts of output sequences (hashed by rank when they fit).
    pub distortion_mean: f64,
    pub distortion_ci_halfwidth: f64,
    /// Plug-in TVD estimate of strong realism. Biased upward: the empirical
    /// law of finitely many samples overstates the distance.
    pub strong_realism_plugin: f64,
    pub plugin_bias_warning: &'static str,
}

/// Simulate the code end to end `samples` times and report plug-in
/// estimates. Exact mode is preferred whenever the budget allows; the
/// plug-in realism estimate carries a documented upward bias.
pub fn induced_distribution_sampled(
    cb: &Codebook,
    k_xgv: &Kernel,
    k_ygv: &Kernel,
    p_x: &Pmf,
    d: &[Vec<f64>],
    samples: usize,
    seed: u64,
) -> Result<SampledJoint> {
    let n = cb.n;
    let y_card = k_ygv.output_len();
    let y_pow = index::pow(y_card, n)
        .filter(|&p| p <= 1 << 26)
        .ok_or_else(|| Error::Budget("|Y|^n too large for the plug-in estimator".into()))?;
    let mut rng = seeding::task_rng(seed, "mc-joint", 0);
    let mut counts = vec![0u64; y_pow];
    let mut dist_sum = 0.0;
    let mut dist_sq = 0.0;
    for _ in 0..samples {
        let x: Vec<usize> = (0..n).map(|_| p_x.sample_index(rng.random::<f64>())).collect();
        let j = rng.random_range(0..cb.cr_count);
        let enc = likelihood_encode(&x, j, cb, k_xgv, &mut rng)?;
        let y = memoryless_decode(enc.m, j, cb, k_ygv, &mut rng)?;
        counts[index::rank(&y, y_card)] += 1;
        let dd: f64 =
            x.iter().zip(&y).map(|(&a, &b)| d[a][b]).sum::<f64>() / n as f64;
        dist_sum += dd;
        dist_sq += dd * dd;
    }
    let mean = dist_sum / samples as f64;
    let var = (dist_sq / samples as f64 - mean * mean).max(0.0);
    let ci = 1.96 * (var / samples as f64).sqrt();
    let mut seq = vec![0usize; n];
    let mut tv = 0.0;
    for (y_idx, &c) in counts.iter().enumerate() {
        index::unrank_into(y_idx, y_card, &mut seq);
        let target: f64 = seq.iter().map(|&s| p_x.prob(s)).product();
        tv += (c as f64 / samples as f64 - target).abs();
    }
    Ok(SampledJoint {
        n,
        samples,
        distortion_mean: mean,
        distortion_ci_halfwidth: ci,
        strong_realism_plugin: 0.5 * tv,
        plugin_bias_warning: "plug-in TVD from samples is biased upward; use exact mode for \
                              acceptance-grade numbers",
    })
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prob::tvd;

    fn spec(n: usize, r: f64, rc: f64) -> CodeSpec {
        CodeSpec::new(n, r, rc, f64::INFINITY).unwrap()
    }

    #[test]
    fn code_spec_extended_rate_json() {
        let parse = |s: &str| serde_json::from_str::<CodeSpec>(s).unwrap();
        assert!(parse(r#"{"n":6,"r":0.5,"r_c":0.3,"r_d":null}"#).r_d.is_infinite());
        assert!(parse(r#"{"n":6,"r":0.5,"r_c":0.3,"r_d":"inf"}"#).r_d.is_infinite());
        assert!(parse(r#"{"n":6,"r":0.5,"r_c":0.3}"#).r_d.is_infinite());
        assert_eq!(parse(r#"{"n":6,"r":0.5,"r_c":0.3,"r_d":1.5}"#).r_d, 1.5);
        // Infinite rates serialize as "inf" and round-trip.
        let spec = CodeSpec::new(6, 0.5, 0.3, f64::INFINITY).unwrap();
        let text = serde_json::to_string(&spec).unwrap();
        assert!(text.contains("\"inf\""));
        assert_eq!(parse(&text), spec);
    }

    #[test]
    fn monte_carlo_streams_deterministic() {
        let p_v = Pmf::bernoulli(0.4).unwrap();
        let p_x = Pmf::bernoulli(0.3).unwrap();
        let cb = sample_codebook(&p_v, &spec(4, 0.5, 0.25), 91).unwrap();
        let kx = Kernel::from_rows(vec![vec![0.85, 0.15], vec![0.25, 0.75]]).unwrap();
        let ky = Kernel::from_rows(vec![vec![0.9, 0.1], vec![0.35, 0.65]]).unwrap();
        let d = crate::region::hamming(2);
        let a = induced_distribution_sampled(&cb, &kx, &ky, &p_x, &d, 5_000, 7).unwrap();
        let b = induced_distribution_sampled(&cb, &kx, &ky, &p_x, &d, 5_000, 7).unwrap();
        assert_eq!(a.distortion_mean.to_bits(), b.distortion_mean.to_bits());
        assert_eq!(a.strong_realism_plugin.to_bits(), b.strong_realism_plugin.to_bits());
    }

    #[test]
    fn degenerate_pv_gives_constant_words() {
        let p_v = Pmf::from_probs(vec![1.0, 0.0]).unwrap();
        let cb = sample_codebook(&p_v, &spec(6, 0.5, 0.5), 1).unwrap();
        assert!(cb.words().iter().all(|w| w.iter().all(|&s| s == 0)));
    }

    #[test]
    fn single_word_codebook() {
        let p_v = Pmf::bernoulli(0.5).unwrap();
        let cb = sample_codebook(&p_v, &spec(4, 0.0, 0.0), 2).unwrap();
        assert_eq!(cb.word_count(), 1);
        assert_eq!(cb.msg_count, 1);
        assert_eq!(cb.cr_count, 1);
    }

    #[test]
    fn long_word_type_approaches_pv() {
        let p_v = Pmf::bernoulli(0.5).unwrap();
        let cb = sample_codebook(&p_v, &spec(10_000, 0.0, 0.0), 3).unwrap();
        let report = codeword_type_deviation(&cb, &p_v).unwrap();
        assert!(report.deviations[0] < 0.05);
    }

    #[test]
    fn codebook_determinism() {
        let p_v = Pmf::bernoulli(0.3).unwrap();
        let a = sample_codebook(&p_v, &spec(8, 0.5, 0.25), 42).unwrap();
        let b = sample_codebook(&p_v, &spec(8, 0.5, 0.25), 42).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn encoder_single_message_is_constant() {
        let p_v = Pmf::bernoulli(0.5).unwrap();
        let cb = sample_codebook(&p_v, &spec(4, 0.0, 0.0), 5).unwrap();
        let k = Kernel::from_rows(vec![vec![0.8, 0.2], vec![0.2, 0.8]]).unwrap();
        let (row, fb) = encoder_distribution(&[0, 1, 0, 1], 0, &cb, &k).unwrap();
        assert_eq!(row, vec![1.0]);
        assert!(!fb);
        let mut rng = seeding::task_rng(7, "t", 0);
        assert_eq!(likelihood_encode(&[0, 1, 0, 1], 0, &cb, &k, &mut rng).unwrap().m, 0);
    }

    #[test]
    fn encoder_copy_channel_exact_match() {
        // With an identity k_{X|V}, only a word equal to x^n has positive
        // likelihood.
        let p_v = Pmf::bernoulli(0.5).unwrap();
        let cb = sample_codebook(&p_v, &spec(5, 0.4, 0.0), 11).unwrap();
        let k = Kernel::identity(p_v.alphabet().to_vec()).unwrap();
        let target = cb.word(1, 0).to_vec();
        let unique = cb.words().iter().filter(|w| **w == target).count() == 1;
        if unique {
            let (row, fb) = encoder_distribution(&target, 0, &cb, &k).unwrap();
            assert!(!fb);
            assert_eq!(row[1], 1.0);
            assert!(row.iter().enumerate().all(|(m, p)| m == 1 || *p == 0.0));
        }
    }

    #[test]
    fn encoder_law_matches_brute_force() {
        // Independent recomputation of the normalized product likelihood.
        let p_v = Pmf::bernoulli(0.4).unwrap();
        let cb = sample_codebook(&p_v, &spec(6, 0.5, 0.2), 13).unwrap();
        let k = Kernel::from_rows(vec![vec![0.9, 0.1], vec![0.25, 0.75]]).unwrap();
        let x = [0, 1, 1, 0, 0, 1];
        for j in 0..cb.cr_count {
            let (row, _) = encoder_distribution(&x, j, &cb, &k).unwrap();
            let mut brute: Vec<f64> = (0..cb.msg_count)
                .map(|m| {
                    let mut p = 1.0;
                    for (t, &xt) in x.iter().enumerate() {
                        p *= k.prob(cb.word(m, j)[t], xt);
                    }
                    p
                })
                .collect();
            let s: f64 = brute.iter().sum();
            brute.iter_mut().for_each(|p| *p /= s);
            for (a, b) in row.iter().zip(&brute) {
                assert!((a - b).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn zero_likelihood_falls_back_to_uniform() {
        let p_v = Pmf::from_probs(vec![1.0, 0.0]).unwrap();
        let cb = sample_codebook(&p_v, &spec(3, 0.5, 0.0), 17).unwrap();
        // Kernel maps symbol 0 deterministically to 0; input containing a 1
        // has zero likelihood under every word.
        let k = Kernel::from_rows(vec![vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let (row, fb) = encoder_distribution(&[0, 1, 0], 0, &cb, &k).unwrap();
        assert!(fb);
        let u = 1.0 / cb.msg_count as f64;
        assert!(row.iter().all(|p| (p - u).abs() < 1e-15));
    }

    #[test]
    fn decoder_deterministic_kernel_maps_word() {
        let p_v = Pmf::bernoulli(0.5).unwrap();
        let cb = sample_codebook(&p_v, &spec(6, 0.3, 0.0), 19).unwrap();
        let k = Kernel::from_rows(vec![vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap(); // flip
        let mut rng = seeding::task_rng(23, "t", 0);
        let y = memoryless_decode(0, 0, &cb, &k, &mut rng).unwrap();
        let expect: Vec<usize> = cb.word(0, 0).iter().map(|&v| 1 - v).collect();
        assert_eq!(y, expect);
    }

    #[test]
    fn decoder_law_is_product_of_rows() {
        // n = 5: empirical law over many draws approaches the product law;
        // the exact statement is checked through InducedJoint::decoder_row.
        let p_v = Pmf::bernoulli(0.5).unwrap();
        let cb = sample_codebook(&p_v, &spec(5, 0.2, 0.0), 29).unwrap();
        let k = Kernel::from_rows(vec![vec![0.7, 0.3], vec![0.4, 0.6]]).unwrap();
        let p_x = Pmf::bernoulli(0.5).unwrap();
        let ij = induced_distribution_exact(&cb, &k, &k, &p_x, None).unwrap();
        let row = ij.decoder_row(0, 0);
        let word = cb.word(0, 0);
        for (y_idx, p) in row.iter().enumerate() {
            let y = index::unrank(y_idx, 5, 2);
            let expect: f64 = word.iter().zip(&y).map(|(&v, &yt)| k.prob(v, yt)).product();
            assert!((p - expect).abs() < 1e-15);
        }
        let total: f64 = row.iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn circular_codebook_type_constraint() {
        let p_v = Pmf::bernoulli(0.5).unwrap();
        let (cb, report) = build_circular_codebook(&p_v, 4, 0.5, 0.5, 31).unwrap();
        // |emp(1) - 0.5| <= 0.25 means 1..=3 ones out of 4.
        for w in cb.words() {
            let ones: usize = w.iter().sum();
            assert!((1..=3).contains(&ones), "word {w:?}");
        }
        assert!(report.base_accepted >= 1);
        assert_eq!(cb.cr_count, 1);
    }

    #[test]
    fn circular_codebook_contains_all_shifts() {
        let p_v = Pmf::bernoulli(0.5).unwrap();
        let (cb, _) = build_circular_codebook(&p_v, 6, 0.4, 0.5, 37).unwrap();
        let set: BTreeSet<Vec<usize>> = cb.words().iter().cloned().collect();
        for w in cb.words() {
            for s in 0..cb.n {
                let mut shifted = Vec::with_capacity(cb.n);
                shifted.extend_from_slice(&w[s..]);
                shifted.extend_from_slice(&w[..s]);
                assert!(set.contains(&shifted));
            }
        }
    }

    #[test]
    fn circular_acceptance_rate_matches_binomial() {
        // n = 8, delta = 0.25 keeps words with 3..=5 ones; the exact
        // acceptance probability is (C(8,3)+C(8,4)+C(8,5)) / 2^8 = 182/256.
        let p_v = Pmf::bernoulli(0.5).unwrap();
        let (_, report) = build_circular_codebook(&p_v, 8, 1.2, 0.25, 41).unwrap();
        // About 2^(8*1.2) ≈ 776 accepted words worth of attempts: enough for
        // a 5-sigma band around 182/256.
        let p = 182.0 / 256.0;
        let sigma = (p * (1.0 - p) / report.attempts as f64).sqrt();
        assert!(
            (report.acceptance_rate - p).abs() <= 5.0 * sigma + 1e-9,
            "rate {} vs exact {p}",
            report.acceptance_rate
        );
    }

    #[test]
    fn circular_budget_error() {
        let p_v = Pmf::from_probs(vec![0.999, 0.001]).unwrap();
        // delta so tight that no length-4 word can satisfy the constraint on
        // the rare symbol.
        assert!(matches!(
            build_circular_codebook(&p_v, 4, 0.5, 0.01, 43),
            Err(Error::Budget(_))
        ));
    }

    #[test]
    fn induced_point_mass_when_deterministic() {
        // n = 1, single word, deterministic kernels: the joint is a point
        // mass in (j, m, y); x keeps the source law.
        let p_v = Pmf::from_probs(vec![1.0, 0.0]).unwrap();
        let cb = sample_codebook(&p_v, &spec(1, 0.0, 0.0), 47).unwrap();
        let ident = Kernel::identity(p_v.alphabet().to_vec()).unwrap();
        let p_x = Pmf::bernoulli(0.3).unwrap();
        let ij = induced_distribution_exact(&cb, &ident, &ident, &p_x, None).unwrap();
        let law = ij.output_law();
        assert_eq!(law[0], 1.0);
        assert_eq!(law[1], 0.0);
        assert!((ij.total_mass() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn induced_marginal_and_markov() {
        let p_v = Pmf::bernoulli(0.4).unwrap();
        let p_x = Pmf::bernoulli(0.3).unwrap();
        let cb = sample_codebook(&p_v, &spec(4, 0.5, 0.25), 53).unwrap();
        let kx = Kernel::from_rows(vec![vec![0.85, 0.15], vec![0.2, 0.8]]).unwrap();
        let ky = Kernel::from_rows(vec![vec![0.9, 0.1], vec![0.3, 0.7]]).unwrap();
        let ij = induced_distribution_exact(&cb, &kx, &ky, &p_x, None).unwrap();
        assert!(ij.marginal_x_sup_dev() <= 1e-9);
        assert!(ij.markov_residual() <= 1e-9);
        assert!((ij.total_mass() - 1.0).abs() <= 1e-9);
    }

    #[test]
    fn strong_realism_zero_when_decoder_outputs_source() {
        // Every decoder row equal to p_X makes the output i.i.d. p_X no
        // matter the words.
        let p_v = Pmf::bernoulli(0.5).unwrap();
        let p_x = Pmf::bernoulli(0.3).unwrap();
        let cb = sample_codebook(&p_v, &spec(4, 0.5, 0.0), 59).unwrap();
        let kx = Kernel::from_rows(vec![vec![0.8, 0.2], vec![0.3, 0.7]]).unwrap();
        let ky =
            Kernel::from_rows(vec![vec![0.7, 0.3], vec![0.7, 0.3]]).unwrap();
        let ij = induced_distribution_exact(&cb, &kx, &ky, &p_x, None).unwrap();
        assert!(evaluate_strong_realism(&ij, &p_x).unwrap() < 1e-12);
        assert!(evaluate_per_symbol_realism(&ij, &p_x).unwrap() < 1e-12);
    }

    #[test]
    fn strong_realism_constant_output() {
        // Deterministic constant output at n = 2: TVD to the product law is
        // 1 - p_X^{(x)2}(const).
        let p_v = Pmf::from_probs(vec![1.0, 0.0]).unwrap();
        let p_x = Pmf::bernoulli(0.3).unwrap();
        let cb = sample_codebook(&p_v, &spec(2, 0.0, 0.0), 61).unwrap();
        let kx = Kernel::from_rows(vec![vec![0.7, 0.3], vec![0.7, 0.3]]).unwrap();
        let ky = Kernel::from_rows(vec![vec![1.0, 0.0], vec![1.0, 0.0]]).unwrap();
        let ij = induced_distribution_exact(&cb, &kx, &ky, &p_x, None).unwrap();
        let expect = 1.0 - 0.7 * 0.7;
        assert!((evaluate_strong_realism(&ij, &p_x).unwrap() - expect).abs() < 1e-12);
    }

    #[test]
    fn per_symbol_picks_corrupted_position() {
        // Single word (0, 1); row 0 emits p_X, row 1 emits q != p_X: the
        // per-symbol score is tvd(q, p_X) at position 1.
        let p_v = Pmf::bernoulli(0.5).unwrap();
        let p_x = Pmf::bernoulli(0.3).unwrap();
        let mut cb = sample_codebook(&p_v, &spec(2, 0.0, 0.0), 67).unwrap();
        cb.words = vec![vec![0, 1]];
        let kx = Kernel::from_rows(vec![vec![0.7, 0.3], vec![0.7, 0.3]]).unwrap();
        let ky = Kernel::from_rows(vec![vec![0.7, 0.3], vec![0.5, 0.5]]).unwrap();
        let ij = induced_distribution_exact(&cb, &kx, &ky, &p_x, None).unwrap();
        let q = Pmf::bernoulli(0.5).unwrap();
        let expect = tvd(&q, &p_x).unwrap();
        assert!((evaluate_per_symbol_realism(&ij, &p_x).unwrap() - expect).abs() < 1e-12);
    }

    #[test]
    fn distortion_identity_coupling_is_zero() {
        // V = X = Y through identity kernels and a rich codebook: encoding
        // x^n picks a word equal to x^n whenever one exists. Use n = 1 with
        // both symbols as words so coupling is exact.
        let p_v = Pmf::bernoulli(0.5).unwrap();
        let p_x = Pmf::bernoulli(0.3).unwrap();
        let mut cb = sample_codebook(&p_v, &spec(1, 1.0, 0.0), 71).unwrap();
        cb.words = vec![vec![0], vec![1]];
        cb.msg_count = 2;
        let ident = Kernel::identity(p_v.alphabet().to_vec()).unwrap();
        let ij = induced_distribution_exact(&cb, &ident, &ident, &p_x, None).unwrap();
        let d = crate::region::hamming(2);
        assert!(evaluate_distortion(&ij, &d).unwrap() < 1e-12);
    }

    #[test]
    fn distortion_independent_uniform_half() {
        // X and Y independent uniform under Hamming: E[d] = 1/2.
        let p_v = Pmf::bernoulli(0.5).unwrap();
        let p_x = Pmf::bernoulli(0.5).unwrap();
        let cb = sample_codebook(&p_v, &spec(3, 0.4, 0.0), 73).unwrap();
        let kx = Kernel::from_rows(vec![vec![0.5, 0.5], vec![0.5, 0.5]]).unwrap();
        let ky = kx.clone();
        let ij = induced_distribution_exact(&cb, &kx, &ky, &p_x, None).unwrap();
        let d = crate::region::hamming(2);
        assert!((evaluate_distortion(&ij, &d).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn type_deviation_trivials() {
        let p_v = Pmf::from_probs(vec![1.0, 0.0]).unwrap();
        let cb = sample_codebook(&p_v, &spec(5, 0.4, 0.0), 79).unwrap();
        let report = codeword_type_deviation(&cb, &p_v).unwrap();
        assert!(report.deviations.iter().all(|d| *d == 0.0));
        assert_eq!(report.exceedance_fraction(0.1), 0.0);
    }

    #[test]
    fn type_deviation_exceedance_matches_binomial_tail() {
        // 10^5 words of length 100 from Bern(1/2): the fraction with type
        // deviation >= 0.1 is the exact binomial tail P(|K - 50| >= 10),
        // computed here by direct summation, and sits below the
        // exponential bound 2 exp(-2 n eps^2).
        let p_v = Pmf::bernoulli(0.5).unwrap();
        let n = 100;
        let words = 100_000usize;
        let r = (words as f64).log2() / n as f64;
        let cb = sample_codebook(&p_v, &spec(n, r, 0.0), 83).unwrap();
        let report = codeword_type_deviation(&cb, &p_v).unwrap();
        // Threshold between type-lattice points: |k/n - 1/2| >= 0.095 is the
        // event |k - 50| >= 10 without boundary round-off sensitivity.
        let measured = report.exceedance_fraction(0.095);

        // Exact tail: sum C(100, k) 2^{-100} over |k - 50| >= 10.
        let mut log_c = vec![0.0f64; n + 1];
        for k in 1..=n {
            log_c[k] = log_c[k - 1] + ((n - k + 1) as f64).ln() - (k as f64).ln();
        }
        let tail: f64 = (0..=n)
            .filter(|&k| (k as i64 - 50).unsigned_abs() >= 10)
            .map(|k| (log_c[k] - n as f64 * (2.0f64).ln()).exp())
            .sum();
        let sigma = (tail * (1.0 - tail) / cb.word_count() as f64).sqrt();
        assert!(
            (measured - tail).abs() <= 5.0 * sigma,
            "exceedance {measured} vs exact tail {tail}"
        );
        let hoeffding = 2.0 * (-2.0 * n as f64 * 0.095f64.powi(2)).exp();
        assert!(measured <= hoeffding, "exceedance {measured} above bound {hoeffding}");
    }

    #[test]
    fn circular_scheme_per_symbol_below_strong() {
        // Shift-closed codebooks flatten the per-position marginals; the
        // per-symbol score is a marginal of the joint either way.
        let p_v = Pmf::bernoulli(0.5).unwrap();
        let p_x = Pmf::bernoulli(0.5).unwrap();
        let (cb, _) = build_circular_codebook(&p_v, 8, 0.4, 0.25, 9).unwrap();
        let k = Kernel::from_rows(vec![vec![0.85, 0.15], vec![0.15, 0.85]]).unwrap();
        let ij = induced_distribution_exact(&cb, &k, &k, &p_x, None).unwrap();
        let strong = evaluate_strong_realism(&ij, &p_x).unwrap();
        let per_symbol = evaluate_per_symbol_realism(&ij, &p_x).unwrap();
        assert!(per_symbol <= strong + 1e-12, "{per_symbol} vs {strong}");
    }

    #[test]
    fn materialized_table_sums_to_one() {
        let p_v = Pmf::bernoulli(0.4).unwrap();
        let p_x = Pmf::bernoulli(0.3).unwrap();
        let cb = sample_codebook(&p_v, &spec(3, 0.5, 0.34), 83).unwrap();
        let kx = Kernel::from_rows(vec![vec![0.85, 0.15], vec![0.2, 0.8]]).unwrap();
        let ky = Kernel::from_rows(vec![vec![0.9, 0.1], vec![0.3, 0.7]]).unwrap();
        let ij = induced_distribution_exact(&cb, &kx, &ky, &p_x, None).unwrap();
        let table = ij.materialize(None).unwrap();
        let sum: f64 = table.iter().sum();
        assert!((sum - 1.0).abs() < 1e-9);
    }

    #[test]
    fn budget_guard_fires() {
        let p_v = Pmf::bernoulli(0.5).unwrap();
        let p_x = Pmf::bernoulli(0.5).unwrap();
        let cb = sample_codebook(&p_v, &spec(20, 0.2, 0.1), 89).unwrap();
        let k = Kernel::from_rows(vec![vec![0.5, 0.5], vec![0.5, 0.5]]).unwrap();
        assert!(matches!(
            induced_distribution_exact(&cb, &k, &k, &p_x, None),
            Err(Error::Budget(_))
        ));
    }

    #[test]
    fn sampled_surrogate_tracks_exact() {
        let p_v = Pmf::bernoulli(0.4).unwrap();
        let p_x = Pmf::bernoulli(0.3).unwrap();
        let cb = sample_codebook(&p_v, &spec(4, 0.5, 0.25), 97).unwrap();
        let kx = Kernel::from_rows(vec![vec![0.85, 0.15], vec![0.2, 0.8]]).unwrap();
        let ky = Kernel::from_rows(vec![vec![0.9, 0.1], vec![0.3, 0.7]]).unwrap();
        let d = crate::region::hamming(2);
        let ij = induced_distribution_exact(&cb, &kx, &ky, &p_x, None).unwrap();
        let exact_d = evaluate_distortion(&ij, &d).unwrap();
        let mc =
            induced_distribution_sampled(&cb, &kx, &ky, &p_x, &d, 20_000, 101).unwrap();
        assert!((mc.distortion_mean - exact_d).abs() < 3.0 * mc.distortion_ci_halfwidth + 1e-3);
        // Plug-in TVD is biased upward relative to the exact value.
        let exact_tv = evaluate_strong_realism(&ij, &p_x).unwrap();
        assert!(mc.strong_realism_plugin >= exact_tv - 0.05);
    }
}
