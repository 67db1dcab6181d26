//! Encoder derandomization.
//!
//! A privately randomized encoder is a conditional law from `(x^n, j)` to
//! messages. For compression rates below the source entropy it can be
//! replaced by a deterministic map with almost no statistical footprint: draw
//! a functional representation `m = psi(x^n, j, U)`, fix one realization of
//! the per-input noise `U`, and keep the realization whose induced statistics
//! sit closest to the original's.
//!
//! The score of a candidate is the total variation distance between the
//! joints of `(M, J)` with the average empirical distribution over
//! `X x V` pairs `(x_t, v_t(M, J))`, original encoder versus candidate.
//! Marginalizing that object recovers both the `(M, J)` law and the average
//! empirical distribution, and composing with a shared memoryless decoder
//! cannot increase TVD, so the one score bounds every downstream comparison.
//! The selected candidate is the argmin, which is never worse than the
//! candidate mean: the finite-sample stand-in for choosing a
//! below-average realization.

use std::collections::HashMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::codec::{Codebook, InducedJoint};
use crate::index;
use crate::prob::{tvd_slices, Pmf};
use crate::seeding;
use crate::{Error, Result};

/// Conditional law from `(x^n, j)` to messages; one probability row per
/// input pair.
#[derive(Debug, Clone)]
pub struct StochasticEncoder {
    pub n: usize,
    pub x_card: usize,
    pub cr_count: usize,
    pub msg_count: usize,
    /// `rows[(x_idx * cr + j) * msg + m]`
    rows: Vec<f64>,
}

impl StochasticEncoder {
    pub fn from_rows(
        n: usize,
        x_card: usize,
        cr_count: usize,
        msg_count: usize,
        rows: Vec<f64>,
    ) -> Result<Self> {
        let x_pow = index::pow(x_card, n)
            .ok_or_else(|| Error::Budget("|X|^n overflows".into()))?;
        if rows.len() != x_pow * cr_count * msg_count {
            return Err(Error::InvalidInput("encoder table shape mismatch".into()));
        }
        for chunk in rows.chunks(msg_count) {
            let s: f64 = chunk.iter().sum();
            if (s - 1.0).abs() > 1e-9 || chunk.iter().any(|p| *p < 0.0) {
                return Err(Error::InvalidInput("encoder row is not a pmf".into()));
            }
        }
        Ok(StochasticEncoder { n, x_card, cr_count, msg_count, rows })
    }

    pub fn from_induced(ij: &InducedJoint) -> Self {
        let x_pow = index::pow(ij.x_card, ij.n).unwrap();
        let mut rows = Vec::with_capacity(x_pow * ij.cr_count * ij.msg_count);
        for x_idx in 0..x_pow {
            for j in 0..ij.cr_count {
                rows.extend_from_slice(ij.encoder_row(x_idx, j));
            }
        }
        StochasticEncoder {
            n: ij.n,
            x_card: ij.x_card,
            cr_count: ij.cr_count,
            msg_count: ij.msg_count,
            rows,
        }
    }

    pub fn row(&self, x_idx: usize, j: usize) -> &[f64] {
        let base = (x_idx * self.cr_count + j) * self.msg_count;
        &self.rows[base..base + self.msg_count]
    }

    fn input_pairs(&self) -> usize {
        self.rows.len() / self.msg_count
    }

    /// True when every row is a point mass.
    pub fn is_deterministic(&self) -> bool {
        self.rows.chunks(self.msg_count).all(|r| r.iter().any(|p| *p == 1.0))
    }
}

/// Deterministic encoder `(x^n, j) -> m`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeterministicEncoder {
    pub n: usize,
    pub x_card: usize,
    pub cr_count: usize,
    pub msg_count: usize,
    /// `map[x_idx * cr + j]`
    map: Vec<usize>,
}

impl DeterministicEncoder {
    pub fn message(&self, x_idx: usize, j: usize) -> usize {
        self.map[x_idx * self.cr_count + j]
    }

    /// Induced joint of the original code with this encoder substituted in.
    pub fn apply(&self, ij: &InducedJoint) -> Result<InducedJoint> {
        if self.n != ij.n
            || self.x_card != ij.x_card
            || self.cr_count != ij.cr_count
            || self.msg_count != ij.msg_count
        {
            return Err(Error::InvalidInput("encoder shape differs from the code".into()));
        }
        let x_pow = index::pow(self.x_card, self.n).unwrap();
        let mut rows = vec![0.0; x_pow * self.cr_count * self.msg_count];
        for pair in 0..x_pow * self.cr_count {
            rows[pair * self.msg_count + self.map[pair]] = 1.0;
        }
        ij.with_encoder_table(rows)
    }
}

// ---------------------------------------------------------------------------
// Functional representation
// ---------------------------------------------------------------------------

/// Functional representation of a stochastic encoder: a finite noise
/// alphabet `U` with distribution `p_U` and a deterministic
/// `psi(x^n, j, u) -> m` whose push-forward reproduces every encoder row.
///
/// `U` is the common refinement of all rows' CDF breakpoints: each atom is a
/// gap between consecutive breakpoints, so the atom lies inside exactly one
/// CDF interval of every row.
#[derive(Debug, Clone)]
pub struct FunctionalRep {
    /// Sorted CDF breakpoints starting at 0 and ending at 1.
    breakpoints: Vec<f64>,
    /// Row CDFs, same layout as the encoder rows.
    row_cdf: Vec<f64>,
    msg_count: usize,
}

impl FunctionalRep {
    pub fn atom_count(&self) -> usize {
        self.breakpoints.len() - 1
    }

    /// `p_U(u)`: the width of the `u`-th breakpoint gap.
    pub fn atom_prob(&self, u: usize) -> f64 {
        self.breakpoints[u + 1] - self.breakpoints[u]
    }

    /// The message whose CDF interval (for the given row) contains atom `u`.
    pub fn psi(&self, enc: &StochasticEncoder, x_idx: usize, j: usize, u: usize) -> usize {
        let mid = 0.5 * (self.breakpoints[u] + self.breakpoints[u + 1]);
        self.message_at(enc, x_idx, j, mid)
    }

    /// Inverse-CDF lookup of a point in `[0, 1)` through one row.
    fn message_at(&self, enc: &StochasticEncoder, x_idx: usize, j: usize, point: f64) -> usize {
        let base = (x_idx * enc.cr_count + j) * self.msg_count;
        let cdf = &self.row_cdf[base..base + self.msg_count];
        match cdf.binary_search_by(|c| c.partial_cmp(&point).unwrap()) {
            Ok(i) => (i + 1).min(self.msg_count - 1),
            Err(i) => i.min(self.msg_count - 1),
        }
    }

    /// Push `p_U` through `psi` for one input pair: the reconstructed row.
    pub fn push_forward(&self, enc: &StochasticEncoder, x_idx: usize, j: usize) -> Vec<f64> {
        let mut row = vec![0.0; self.msg_count];
        let mut comp = vec![0.0; self.msg_count];
        for u in 0..self.atom_count() {
            let m = self.psi(enc, x_idx, j, u);
            // Neumaier-compensated accumulation keeps the reconstruction
            // error at a few ulps even with many atoms.
            let x = self.atom_prob(u);
            let t = row[m] + x;
            comp[m] += if row[m].abs() >= x.abs() { (row[m] - t) + x } else { (x - t) + row[m] };
            row[m] = t;
        }
        for (r, c) in row.iter_mut().zip(&comp) {
            *r += c;
        }
        row
    }
}

/// Build the common-refinement functional representation of an encoder.
pub fn functional_representation(enc: &StochasticEncoder) -> FunctionalRep {
    let pairs = enc.input_pairs();
    let msg = enc.msg_count;
    let mut row_cdf = vec![0.0; pairs * msg];
    let mut breakpoints = Vec::with_capacity(pairs * msg + 2);
    breakpoints.push(0.0);
    breakpoints.push(1.0);
    for pair in 0..pairs {
        let mut acc = 0.0;
        for m in 0..msg {
            acc += enc.rows[pair * msg + m];
            let c = if m + 1 == msg { 1.0 } else { acc };
            row_cdf[pair * msg + m] = c;
            if c > 0.0 && c < 1.0 {
                breakpoints.push(c);
            }
        }
    }
    breakpoints.sort_by(|a, b| a.partial_cmp(b).unwrap());
    breakpoints.dedup();
    FunctionalRep { breakpoints, row_cdf, msg_count: msg }
}

// ---------------------------------------------------------------------------
// Derandomization
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DerandReport {
    /// TVD score of each candidate, in candidate order.
    pub scores: Vec<f64>,
    pub argmin: usize,
    pub min_score: f64,
    pub mean_score: f64,
    /// Effective rate `log2(msg) / n` checked against `H(p_X)`.
    pub effective_rate: f64,
    pub source_entropy: f64,
}

/// Joint of `(M, J)` with the average empirical distribution over
/// `(x_t, v_t(m, j))` pairs, as a flat table indexed
/// `((m * cr + j) * |X| + a) * |V| + b`.
fn empirical_statistic_table<'a>(
    n: usize,
    x_card: usize,
    v_card: usize,
    cb: &Codebook,
    p_x_pow: &[f64],
    row: impl Fn(usize, usize) -> EncRow<'a>,
    msg_count: usize,
    cr_count: usize,
) -> Vec<f64> {
    let mut table = vec![0.0; msg_count * cr_count * x_card * v_card];
    let mut x_seq = vec![0usize; n];
    let inv_n = 1.0 / n as f64;
    for (x_idx, &px) in p_x_pow.iter().enumerate() {
        if px == 0.0 {
            continue;
        }
        index::unrank_into(x_idx, x_card, &mut x_seq);
        for j in 0..cr_count {
            match row(x_idx, j) {
                EncRow::Dense(r) => {
                    for (m, &em) in r.iter().enumerate() {
                        if em == 0.0 {
                            continue;
                        }
                        let w = px / cr_count as f64 * em * inv_n;
                        let word = cb.word(m, j);
                        let base = (m * cr_count + j) * x_card * v_card;
                        for (t, &xt) in x_seq.iter().enumerate() {
                            table[base + xt * v_card + word[t]] += w;
                        }
                    }
                }
                EncRow::Point(m) => {
                    let w = px / cr_count as f64 * inv_n;
                    let word = cb.word(m, j);
                    let base = (m * cr_count + j) * x_card * v_card;
                    for (t, &xt) in x_seq.iter().enumerate() {
                        table[base + xt * v_card + word[t]] += w;
                    }
                }
            }
        }
    }
    table
}

enum EncRow<'a> {
    Dense(&'a [f64]),
    Point(usize),
}

/// Derandomize a stochastic encoder against the codeword map `cb`.
///
/// Each of `candidates` realizations fixes an i.i.d. noise draw per input
/// pair through the functional representation; candidates are scored by the
/// TVD described in the module docs and the argmin is returned. Requires the
/// effective compression rate to sit below the source entropy.
pub fn derandomize(
    enc: &StochasticEncoder,
    cb: &Codebook,
    p_x: &Pmf,
    candidates: usize,
    seed: u64,
) -> Result<(DeterministicEncoder, DerandReport)> {
    if candidates == 0 {
        return Err(Error::InvalidInput("need at least one candidate".into()));
    }
    if cb.msg_count != enc.msg_count || cb.cr_count != enc.cr_count || cb.n != enc.n {
        return Err(Error::InvalidInput("codebook shape differs from encoder".into()));
    }
    if p_x.len() != enc.x_card {
        return Err(Error::AlphabetMismatch("source vs encoder input alphabet".into()));
    }
    let h_x = p_x.entropy();
    let effective_rate = (enc.msg_count as f64).log2() / enc.n as f64;
    if effective_rate >= h_x {
        return Err(Error::Domain(format!(
            "effective rate {effective_rate:.4} is not below H(X) = {h_x:.4}; encoder \
             derandomization is only guaranteed for compression below the source entropy"
        )));
    }

    let x_pow = index::pow(enc.x_card, enc.n)
        .ok_or_else(|| Error::Budget("|X|^n overflows".into()))?;
    let v_card = cb.v_alphabet.len();
    let mut x_seq = vec![0usize; enc.n];
    let mut p_x_pow = vec![0.0; x_pow];
    for (x_idx, slot) in p_x_pow.iter_mut().enumerate() {
        index::unrank_into(x_idx, enc.x_card, &mut x_seq);
        *slot = x_seq.iter().map(|&s| p_x.prob(s)).product();
    }

    let rep = functional_representation(enc);
    let original = empirical_statistic_table(
        enc.n,
        enc.x_card,
        v_card,
        cb,
        &p_x_pow,
        |x_idx, j| EncRow::Dense(enc.row(x_idx, j)),
        enc.msg_count,
        enc.cr_count,
    );

    let mut scores = Vec::with_capacity(candidates);
    let mut best: Option<(f64, DeterministicEncoder)> = None;
    for c in 0..candidates {
        let mut rng = seeding::task_rng(seed, "derand-candidate", c as u64);
        let map: Vec<usize> = (0..x_pow * enc.cr_count)
            .map(|pair| {
                // Drawing an atom of p_U and applying psi is an inverse-CDF
                // lookup of a uniform point through this row.
                let u = rng.random::<f64>();
                rep.message_at(enc, pair / enc.cr_count, pair % enc.cr_count, u)
            })
            .collect();
        let det = DeterministicEncoder {
            n: enc.n,
            x_card: enc.x_card,
            cr_count: enc.cr_count,
            msg_count: enc.msg_count,
            map,
        };
        let table = empirical_statistic_table(
            enc.n,
            enc.x_card,
            v_card,
            cb,
            &p_x_pow,
            |x_idx, j| EncRow::Point(det.message(x_idx, j)),
            enc.msg_count,
            enc.cr_count,
        );
        let score = tvd_slices(&table, &original);
        scores.push(score);
        let better = best.as_ref().map(|(s, _)| score < *s).unwrap_or(true);
        if better {
            best = Some((score, det));
        }
    }
    let (min_score, det) = best.unwrap();
    let argmin = scores.iter().position(|s| *s == min_score).unwrap();
    let mean_score = scores.iter().sum::<f64>() / scores.len() as f64;
    Ok((
        det,
        DerandReport {
            scores,
            argmin,
            min_score,
            mean_score,
            effective_rate,
            source_entropy: h_x,
        },
    ))
}

/// Convenience wrapper taking an exact induced joint.
pub fn derandomize_code(
    ij: &InducedJoint,
    candidates: usize,
    seed: u64,
) -> Result<(DeterministicEncoder, DerandReport)> {
    let enc = StochasticEncoder::from_induced(ij);
    derandomize(&enc, ij.codebook(), &ij.p_x, candidates, seed)
}

// ---------------------------------------------------------------------------
// Soft-covering diagnostic
// ---------------------------------------------------------------------------

/// One atom of the diagnostic: an `(x^n, j, m)` cell of the exact joint.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct DiagnosticAtom {
    pub prob: f64,
    /// `log2 P(w | v)` with `w = (x^n, j)` and
    /// `v = (m, j, type of (x_t, v_t(m, j)))`: the information-density
    /// difference whose drift to minus infinity is the soft-covering
    /// hypothesis.
    pub d_value: f64,
    /// `i(w) = -log2 P(x^n, j)`.
    pub i_w: f64,
    /// Index of the `v` class this atom belongs to.
    pub v_class: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SoftCoveringReport {
    pub atoms: Vec<DiagnosticAtom>,
    /// Probability-weighted median of the `d_value`s.
    pub median: f64,
    /// `P(D > -n c)` for each requested threshold `c`.
    pub exceedance: Vec<(f64, f64)>,
    pub n: usize,
}

/// Distribution of `i(W; V) - i(W) = log2 P(W | V)` under the exact joint,
/// with `W = (X^n, J)` and `V = (M, J, empirical type of (X^n, v(M, J)))`.
pub fn soft_covering_diagnostic(
    ij: &InducedJoint,
    thresholds: &[f64],
) -> Result<SoftCoveringReport> {
    let x_pow = index::pow(ij.x_card, ij.n)
        .ok_or_else(|| Error::Budget("|X|^n overflows".into()))?;
    let v_card = ij.codebook().v_alphabet.len();
    let cr = ij.cr_count as f64;

    // First pass: aggregate the v-class masses.
    let mut class_mass: HashMap<Vec<u32>, (usize, f64)> = HashMap::new();
    let mut x_seq = vec![0usize; ij.n];
    let mut p_x_pow = vec![0.0; x_pow];
    for (x_idx, slot) in p_x_pow.iter_mut().enumerate() {
        index::unrank_into(x_idx, ij.x_card, &mut x_seq);
        *slot = x_seq.iter().map(|&s| ij.p_x.prob(s)).product();
    }
    let key_of = |m: usize, j: usize, x_seq: &[usize]| -> Vec<u32> {
        let word = ij.codebook().word(m, j);
        let mut key = vec![0u32; 2 + ij.x_card * v_card];
        key[0] = m as u32;
        key[1] = j as u32;
        for (t, &xt) in x_seq.iter().enumerate() {
            key[2 + xt * v_card + word[t]] += 1;
        }
        key
    };
    for x_idx in 0..x_pow {
        if p_x_pow[x_idx] == 0.0 {
            continue;
        }
        index::unrank_into(x_idx, ij.x_card, &mut x_seq);
        for j in 0..ij.cr_count {
            let row = ij.encoder_row(x_idx, j);
            for (m, &em) in row.iter().enumerate() {
                if em == 0.0 {
                    continue;
                }
                let q = p_x_pow[x_idx] / cr * em;
                let key = key_of(m, j, &x_seq);
                let next_id = class_mass.len();
                let entry = class_mass.entry(key).or_insert((next_id, 0.0));
                entry.1 += q;
            }
        }
    }

    // Second pass: per-atom information densities.
    let mut atoms = Vec::new();
    for x_idx in 0..x_pow {
        if p_x_pow[x_idx] == 0.0 {
            continue;
        }
        index::unrank_into(x_idx, ij.x_card, &mut x_seq);
        let i_w = -(p_x_pow[x_idx] / cr).log2();
        for j in 0..ij.cr_count {
            let row = ij.encoder_row(x_idx, j);
            for (m, &em) in row.iter().enumerate() {
                if em == 0.0 {
                    continue;
                }
                let q = p_x_pow[x_idx] / cr * em;
                let key = key_of(m, j, &x_seq);
                let (class, mass) = class_mass[&key];
                atoms.push(DiagnosticAtom {
                    prob: q,
                    d_value: (q / mass).log2(),
                    i_w,
                    v_class: class,
                });
            }
        }
    }

    let mut sorted: Vec<(f64, f64)> = atoms.iter().map(|a| (a.d_value, a.prob)).collect();
    sorted.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let mut acc = 0.0;
    let mut median = sorted.last().map(|x| x.0).unwrap_or(0.0);
    for (d, p) in &sorted {
        acc += p;
        if acc >= 0.5 {
            median = *d;
            break;
        }
    }
    let exceedance = thresholds
        .iter()
        .map(|&c| {
            let bar = -(ij.n as f64) * c;
            let p: f64 = atoms.iter().filter(|a| a.d_value > bar).map(|a| a.prob).sum();
            (c, p)
        })
        .collect();
    Ok(SoftCoveringReport { atoms, median, exceedance, n: ij.n })
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------
