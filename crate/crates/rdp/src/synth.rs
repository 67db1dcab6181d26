//! Local channel synthesis: simulate the memoryless decoder channel with a
//! fixed-length private seed.
//!
//! For each auxiliary word `v^n` a list of `2^{ceil(n r)}` candidate outputs
//! is drawn i.i.d. from the true product law `prod_t k_{Y|V}(. | v_t)`; at
//! use time the decoder picks one candidate uniformly, consuming exactly
//! `ceil(n r)` bits of private randomness. Once `r` clears the conditional
//! entropy of the word's type, the uniform-over-candidates law approaches
//! the product law in total variation; below it, synthesis stalls.
//!
//! Candidate lists are held as multiset counts over ranked output sequences:
//! duplicates keep their multiplicity and the exact synthesized law is a
//! counts table, so per-word TVD and code-level attachment are exact sums.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::codec::{DecoderLaw, InducedJoint};
use crate::index;
use crate::prob::{entropy_slice, tvd_slices, EmpiricalDist, Kernel};
use crate::seeding;
use crate::{Error, Result};

/// Synthesized channel: one candidate multiset per word.
#[derive(Debug, Clone)]
pub struct SynthChannel {
    pub n: usize,
    pub y_card: usize,
    /// Private randomness rate in bits per symbol.
    pub rate: f64,
    /// Bits consumed per block: `ceil(n * rate)`.
    pub seed_bits: u32,
    pub seed: u64,
    words: Vec<Vec<usize>>,
    /// `counts[w][y_idx]`: multiplicity of each output sequence among the
    /// `2^seed_bits` candidates of word `w`.
    counts: Vec<Vec<u32>>,
}

impl SynthChannel {
    pub fn candidates_per_word(&self) -> u64 {
        1u64 << self.seed_bits
    }

    pub fn words(&self) -> &[Vec<usize>] {
        &self.words
    }

    pub fn word_index(&self, word: &[usize]) -> Option<usize> {
        self.words.iter().position(|w| w == word)
    }

    /// Exact synthesized law of a word, over ranked output sequences.
    pub fn law(&self, word_idx: usize) -> Vec<f64> {
        let total = self.candidates_per_word() as f64;
        self.counts[word_idx].iter().map(|&c| c as f64 / total).collect()
    }

    /// Build directly from candidate counts (each row must sum to a power of
    /// two matching `seed_bits`).
    pub fn from_counts(
        n: usize,
        y_card: usize,
        rate: f64,
        seed_bits: u32,
        words: Vec<Vec<usize>>,
        counts: Vec<Vec<u32>>,
    ) -> Result<Self> {
        let y_pow = index::pow(y_card, n)
            .ok_or_else(|| Error::Budget("|Y|^n overflows".into()))?;
        if counts.len() != words.len() {
            return Err(Error::InvalidInput("one count row per word required".into()));
        }
        for row in &counts {
            if row.len() != y_pow {
                return Err(Error::InvalidInput("count row length must be |Y|^n".into()));
            }
            let total: u64 = row.iter().map(|&c| c as u64).sum();
            if total != 1u64 << seed_bits {
                return Err(Error::InvalidInput(format!(
                    "count row sums to {total}, expected 2^{seed_bits}"
                )));
            }
        }
        Ok(SynthChannel { n, y_card, rate, seed_bits, seed: 0, words, counts })
    }

    /// Draw one output for a word using `seed_bits` bits of the given rng.
    pub fn sample(&self, word_idx: usize, rng: &mut rand_chacha::ChaCha12Rng) -> Vec<usize> {
        let pick = rng.random_range(0..self.candidates_per_word());
        let mut acc = 0u64;
        for (y_idx, &c) in self.counts[word_idx].iter().enumerate() {
            acc += c as u64;
            if pick < acc {
                return index::unrank(y_idx, self.n, self.y_card);
            }
        }
        index::unrank(self.counts[word_idx].len() - 1, self.n, self.y_card)
    }
}

/// Draw the synthesized channel for a list of words.
///
/// Candidates for word `w` are derived from `(seed, w)`, so channels are
/// reproducible and independent of iteration order. `r = 0` produces a
/// single candidate (a point mass per word).
pub fn build_synth_channel(
    k_ygv: &Kernel,
    words: &[Vec<usize>],
    r: f64,
    seed: u64,
) -> Result<SynthChannel> {
    if r < 0.0 || !r.is_finite() {
        return Err(Error::InvalidInput("synthesis rate must be finite and >= 0".into()));
    }
    let n = words
        .first()
        .map(|w| w.len())
        .ok_or_else(|| Error::InvalidInput("need at least one word".into()))?;
    if words.iter().any(|w| w.len() != n) {
        return Err(Error::InvalidInput("words must share one blocklength".into()));
    }
    let y_card = k_ygv.output_len();
    let y_pow = index::pow(y_card, n)
        .filter(|&p| p <= 1 << 22)
        .ok_or_else(|| Error::Budget("|Y|^n beyond the synthesis budget".into()))?;
    let seed_bits = (n as f64 * r).ceil() as u32;
    if seed_bits > 26 {
        return Err(Error::Budget(format!(
            "2^{seed_bits} candidates per word exceeds the budget"
        )));
    }
    let candidates = 1u64 << seed_bits;
    let mut counts = Vec::with_capacity(words.len());
    for (w_idx, word) in words.iter().enumerate() {
        if word.iter().any(|&v| v >= k_ygv.input_len()) {
            return Err(Error::InvalidInput("word symbol outside kernel input alphabet".into()));
        }
        let mut rng = seeding::task_rng(seed, "synth-word", w_idx as u64);
        let mut row = vec![0u32; y_pow];
        for _ in 0..candidates {
            let mut y_idx = 0usize;
            for &v in word {
                let u = rng.random::<f64>();
                let krow = k_ygv.row(v);
                let mut acc = 0.0;
                let mut sym = krow.len() - 1;
                for (y, p) in krow.iter().enumerate() {
                    acc += p;
                    if u < acc {
                        sym = y;
                        break;
                    }
                }
                y_idx = y_idx * y_card + sym;
            }
            row[y_idx] += 1;
        }
        counts.push(row);
    }
    Ok(SynthChannel {
        n,
        y_card,
        rate: r,
        seed_bits,
        seed,
        words: words.to_vec(),
        counts,
    })
}

/// Exact per-word synthesis check.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SynthesisCheck {
    /// Exact TVD between the uniform-over-candidates law and the product law.
    pub tvd: f64,
    /// Whether `r - gamma >= H_{type(word) . k}(Y | V)`: the typed condition
    /// under which synthesis is guaranteed to work asymptotically.
    pub eligible: bool,
    /// Conditional entropy of the word's empirical type through the kernel.
    pub type_conditional_entropy: f64,
}

/// Compare the synthesized law of one word against the true product law.
pub fn verify_synthesis(
    sc: &SynthChannel,
    k_ygv: &Kernel,
    word_idx: usize,
    gamma: f64,
) -> Result<SynthesisCheck> {
    if word_idx >= sc.words.len() {
        return Err(Error::InvalidInput("word index out of range".into()));
    }
    let word = &sc.words[word_idx];
    let y_pow = index::pow(sc.y_card, sc.n).unwrap();
    let mut product = vec![0.0; y_pow];
    let mut seq = vec![0usize; sc.n];
    for (y_idx, slot) in product.iter_mut().enumerate() {
        index::unrank_into(y_idx, sc.y_card, &mut seq);
        *slot = word.iter().zip(&seq).map(|(&v, &y)| k_ygv.prob(v, y)).product();
    }
    let law = sc.law(word_idx);
    let tvd = tvd_slices(&law, &product);

    let t = EmpiricalDist::from_indices(word, k_ygv.input_alphabet().to_vec())?;
    let emp = t.to_pmf()?;
    let h_type: f64 = (0..k_ygv.input_len())
        .map(|v| emp.prob(v) * entropy_slice(k_ygv.row(v)))
        .sum();
    Ok(SynthesisCheck {
        tvd,
        eligible: sc.rate - gamma >= h_type - 1e-12,
        type_conditional_entropy: h_type,
    })
}

/// Result of swapping a code's memoryless decoder for a synthesized one.
#[derive(Debug, Clone)]
pub struct AttachReport {
    pub synthesized: InducedJoint,
    /// TVD between the original and synthesized joints over
    /// `(x^n, j, m, y^n)`, summed through the shared factorization.
    pub joint_tvd: f64,
    /// `sum_{m, j} P(m, j) * tvd_word(m, j)`: the marginal-weighted per-word
    /// channel TVD, equal to `joint_tvd` by the expectation identity for
    /// shared-input channels.
    pub weighted_word_tvd: f64,
    pub per_word: Vec<SynthesisCheck>,
}

/// Replace the memoryless decoder of `ij` by a synthesized channel of rate
/// `r` (+`gamma` slack in the eligibility check).
pub fn attach_to_code(
    ij: &InducedJoint,
    k_ygv: &Kernel,
    r: f64,
    gamma: f64,
    seed: u64,
) -> Result<AttachReport> {
    // Distinct words share one synthesized channel: the channel is a map
    // from v^n, not from (m, j).
    let cb = ij.codebook();
    let mut unique: Vec<Vec<usize>> = Vec::new();
    let mut word_of_mj = vec![0usize; ij.msg_count * ij.cr_count];
    for m in 0..ij.msg_count {
        for j in 0..ij.cr_count {
            let w = cb.word(m, j).to_vec();
            let idx = match unique.iter().position(|u| *u == w) {
                Some(i) => i,
                None => {
                    unique.push(w);
                    unique.len() - 1
                }
            };
            word_of_mj[m * ij.cr_count + j] = idx;
        }
    }
    let sc = build_synth_channel(k_ygv, &unique, r, seed)?;

    let mut per_word = Vec::with_capacity(unique.len());
    for w_idx in 0..unique.len() {
        per_word.push(verify_synthesis(&sc, k_ygv, w_idx, gamma)?);
    }

    let rows: Vec<Vec<f64>> = (0..ij.msg_count * ij.cr_count)
        .map(|mj| sc.law(word_of_mj[mj]))
        .collect();
    let synthesized = ij.with_decoder(DecoderLaw::Table { y_card: sc.y_card, rows })?;

    // Joint TVD through the factorization: the encoder stage is shared, so
    // the block difference sits entirely in the decoder rows.
    let mut joint_tvd = 0.0;
    let x_pow = index::pow(ij.x_card, ij.n).unwrap();
    for x_idx in 0..x_pow {
        for j in 0..ij.cr_count {
            let row = ij.encoder_row(x_idx, j);
            for (m, &em) in row.iter().enumerate() {
                if em == 0.0 {
                    continue;
                }
                let w = ij.p_x_mass(x_idx) / ij.cr_count as f64 * em;
                joint_tvd += w * per_word[word_of_mj[m * ij.cr_count + j]].tvd;
            }
        }
    }
    let weighted_word_tvd: f64 = (0..ij.msg_count * ij.cr_count)
        .map(|mj| ij.w_mj()[mj] * per_word[word_of_mj[mj]].tvd)
        .sum();
    Ok(AttachReport { synthesized, joint_tvd, weighted_word_tvd, per_word })
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codec::{induced_distribution_exact, sample_codebook, CodeSpec};
    use crate::prob::Pmf;

    fn kernel() -> Kernel {
        Kernel::from_rows(vec![vec![0.9, 0.1], vec![0.35, 0.65]]).unwrap()
    }

    #[test]
    fn zero_rate_is_point_mass() {
        let k = kernel();
        let words = vec![vec![0, 1, 0, 1]];
        let sc = build_synth_channel(&k, &words, 0.0, 3).unwrap();
        assert_eq!(sc.candidates_per_word(), 1);
        let law = sc.law(0);
        let ones: usize = law.iter().filter(|p| **p == 1.0).count();
        assert_eq!(ones, 1);
        // TVD of a point mass against the product law is 1 - product(point).
        let check = verify_synthesis(&sc, &k, 0, 0.0).unwrap();
        let y_idx = law.iter().position(|p| *p == 1.0).unwrap();
        let y = index::unrank(y_idx, 4, 2);
        let prod: f64 = words[0].iter().zip(&y).map(|(&v, &yy)| k.prob(v, yy)).product();
        assert!((check.tvd - (1.0 - prod)).abs() < 1e-12);
    }

    #[test]
    fn deterministic_kernel_synthesizes_exactly() {
        let k = Kernel::from_rows(vec![vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let words = vec![vec![0, 1, 1], vec![1, 0, 0]];
        let sc = build_synth_channel(&k, &words, 0.7, 5).unwrap();
        for w in 0..2 {
            let check = verify_synthesis(&sc, &k, w, 0.5).unwrap();
            assert_eq!(check.tvd, 0.0);
            assert!(check.eligible); // H of type is 0, rate 0.7 >= gamma 0.5
            assert_eq!(check.type_conditional_entropy, 0.0);
        }
    }

    #[test]
    fn exact_multiset_representation_gives_zero_tvd() {
        // Uniform rows: the product law is uniform over |Y|^n; candidate
        // counts of exactly one per sequence reproduce it exactly.
        let k = Kernel::from_rows(vec![vec![0.5, 0.5], vec![0.5, 0.5]]).unwrap();
        let n = 3;
        let words = vec![vec![0, 1, 0]];
        let counts = vec![vec![1u32; 8]];
        let sc = SynthChannel::from_counts(n, 2, 1.0, 3, words, counts).unwrap();
        let check = verify_synthesis(&sc, &k, 0, 0.2).unwrap();
        assert_eq!(check.tvd, 0.0);
    }

    #[test]
    fn rate_accounting_exact_bits() {
        let k = kernel();
        let words = vec![vec![0, 1, 0, 1, 1, 0]];
        let sc = build_synth_channel(&k, &words, 1.1, 7).unwrap();
        assert_eq!(sc.seed_bits, (6.0f64 * 1.1).ceil() as u32);
        assert_eq!(sc.candidates_per_word(), 1 << sc.seed_bits);
        let total: u64 = sc.counts[0].iter().map(|&c| c as u64).sum();
        assert_eq!(total, sc.candidates_per_word());
    }

    #[test]
    fn tvd_shrinks_with_rate_margin() {
        // Same word, increasing rate: the synthesized law tightens.
        let k = kernel();
        let word = vec![0, 1, 0, 1, 0, 1, 0, 1];
        let h_row: f64 = 0.5 * entropy_slice(k.row(0)) + 0.5 * entropy_slice(k.row(1));
        let lo = build_synth_channel(&k, &[word.clone()], (h_row - 0.2).max(0.05), 11).unwrap();
        let hi = build_synth_channel(&k, &[word.clone()], h_row + 1.2, 11).unwrap();
        let tvd_lo = verify_synthesis(&lo, &k, 0, 0.0).unwrap().tvd;
        let tvd_hi = verify_synthesis(&hi, &k, 0, 0.0).unwrap().tvd;
        assert!(tvd_hi < tvd_lo, "tvd {tvd_hi} at high rate vs {tvd_lo} at low rate");
    }

    #[test]
    fn attach_identity_for_deterministic_kernel() {
        let p_v = Pmf::bernoulli(0.5).unwrap();
        let p_x = Pmf::bernoulli(0.3).unwrap();
        let spec = CodeSpec::new(4, 0.5, 0.25, f64::INFINITY).unwrap();
        let cb = sample_codebook(&p_v, &spec, 13).unwrap();
        let kx = Kernel::from_rows(vec![vec![0.85, 0.15], vec![0.25, 0.75]]).unwrap();
        let ky = Kernel::from_rows(vec![vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let ij = induced_distribution_exact(&cb, &kx, &ky, &p_x, None).unwrap();
        let report = attach_to_code(&ij, &ky, 0.5, 0.2, 17).unwrap();
        assert!(report.joint_tvd.abs() < 1e-12);
        assert!(report.weighted_word_tvd.abs() < 1e-12);
    }

    #[test]
    fn attach_joint_tvd_matches_weighted_identity() {
        let p_v = Pmf::bernoulli(0.4).unwrap();
        let p_x = Pmf::bernoulli(0.3).unwrap();
        let spec = CodeSpec::new(4, 0.5, 0.25, f64::INFINITY).unwrap();
        let cb = sample_codebook(&p_v, &spec, 19).unwrap();
        let kx = Kernel::from_rows(vec![vec![0.85, 0.15], vec![0.25, 0.75]]).unwrap();
        let ky = kernel();
        let ij = induced_distribution_exact(&cb, &kx, &ky, &p_x, None).unwrap();
        let report = attach_to_code(&ij, &ky, 1.0, 0.2, 23).unwrap();
        assert!((report.joint_tvd - report.weighted_word_tvd).abs() < 1e-12);

        // Independent route: materialize both joints and take the TVD.
        let a = ij.materialize(None).unwrap();
        let b = report.synthesized.materialize(None).unwrap();
        let direct = tvd_slices(&a, &b);
        assert!(
            (direct - report.weighted_word_tvd).abs() < 1e-9,
            "direct {direct} vs weighted {}",
            report.weighted_word_tvd
        );
    }

    #[test]
    fn attach_shares_channel_between_duplicate_words() {
        let p_v = Pmf::from_probs(vec![1.0, 0.0]).unwrap(); // all words identical
        let p_x = Pmf::bernoulli(0.3).unwrap();
        let spec = CodeSpec::new(3, 0.7, 0.4, f64::INFINITY).unwrap();
        let cb = sample_codebook(&p_v, &spec, 29).unwrap();
        let kx = Kernel::from_rows(vec![vec![0.85, 0.15], vec![0.25, 0.75]]).unwrap();
        let ky = kernel();
        let ij = induced_distribution_exact(&cb, &kx, &ky, &p_x, None).unwrap();
        let report = attach_to_code(&ij, &ky, 0.8, 0.2, 31).unwrap();
        assert_eq!(report.per_word.len(), 1);
        // Identical words mean identical decoder rows after synthesis.
        let r0 = report.synthesized.decoder_row(0, 0);
        let r1 = report.synthesized.decoder_row(1, 1.min(ij.cr_count - 1));
        assert_eq!(r0, r1);
    }

    #[test]
    fn budget_guards() {
        let k = kernel();
        assert!(matches!(
            build_synth_channel(&k, &[vec![0; 6]], 5.0, 37),
            Err(Error::Budget(_))
        ));
        assert!(build_synth_channel(&k, &[], 0.5, 37).is_err());
    }
}
