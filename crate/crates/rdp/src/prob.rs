//! Finite-alphabet probability objects and information measures.
//!
//! [`Pmf`], [`Kernel`] (row-stochastic conditional), [`Joint`] (bivariate
//! table), [`MarkovJoint`] (a joint over `(X, V, Y)` factored as
//! `p_V · k_{X|V} · k_{Y|V}`, so the chain `X - V - Y` holds by construction)
//! and [`EmpiricalDist`] (symbol counts). All quantities are in bits.
//!
//! Types are immutable after construction and validated on construction:
//! probabilities are non-negative and sum to one within [`PMF_TOL`].

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Absolute tolerance on `sum(probs) == 1` at construction.
pub const PMF_TOL: f64 = 1e-12;

const LN_2: f64 = std::f64::consts::LN_2;

/// `x * log2(x)` with the convention `0 log 0 = 0`.
#[inline]
pub fn xlog2x(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        x * x.ln() / LN_2
    }
}

/// Shannon entropy of a probability vector, in bits. No validation.
pub fn entropy_slice(probs: &[f64]) -> f64 {
    -probs.iter().copied().map(xlog2x).sum::<f64>()
}

// ---------------------------------------------------------------------------
// Pmf
// ---------------------------------------------------------------------------

/// Probability mass function over a labeled finite alphabet.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PmfRaw")]
pub struct Pmf {
    alphabet: Vec<String>,
    probs: Vec<f64>,
}

#[derive(Deserialize)]
struct PmfRaw {
    alphabet: Vec<String>,
    probs: Vec<f64>,
}

impl TryFrom<PmfRaw> for Pmf {
    type Error = Error;
    fn try_from(raw: PmfRaw) -> Result<Pmf> {
        Pmf::new(raw.alphabet, raw.probs)
    }
}

impl Pmf {
    /// Validates lengths, distinct labels, non-negativity and normalization.
    pub fn new(alphabet: Vec<String>, probs: Vec<f64>) -> Result<Self> {
        if alphabet.is_empty() {
            return Err(Error::InvalidInput("empty alphabet".into()));
        }
        if alphabet.len() != probs.len() {
            return Err(Error::InvalidInput(format!(
                "alphabet has {} labels but {} probabilities given",
                alphabet.len(),
                probs.len()
            )));
        }
        for (i, a) in alphabet.iter().enumerate() {
            if alphabet[..i].contains(a) {
                return Err(Error::InvalidInput(format!("duplicate label {a:?}")));
            }
        }
        if probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::InvalidInput("negative or non-finite probability".into()));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > PMF_TOL {
            return Err(Error::InvalidInput(format!(
                "probabilities sum to {sum}, not 1 within {PMF_TOL}"
            )));
        }
        Ok(Pmf { alphabet, probs })
    }

    /// Pmf with labels `"0", "1", ...`.
    pub fn from_probs(probs: Vec<f64>) -> Result<Self> {
        let alphabet = (0..probs.len()).map(|i| i.to_string()).collect();
        Pmf::new(alphabet, probs)
    }

    /// Bernoulli(p1) over labels `"0", "1"` with `P(1) = p1`.
    pub fn bernoulli(p1: f64) -> Result<Self> {
        Pmf::from_probs(vec![1.0 - p1, p1])
    }

    /// Uniform over `k` symbols.
    pub fn uniform(k: usize) -> Result<Self> {
        Pmf::from_probs(vec![1.0 / k as f64; k])
    }

    /// Rescales an almost-normalized vector onto the simplex exactly.
    pub fn renormalized(alphabet: Vec<String>, mut probs: Vec<f64>) -> Result<Self> {
        let sum: f64 = probs.iter().sum();
        if sum <= 0.0 || !sum.is_finite() {
            return Err(Error::InvalidInput(format!("cannot renormalize mass {sum}")));
        }
        probs.iter_mut().for_each(|p| *p = p.max(0.0) / sum);
        Pmf::new(alphabet, probs)
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        false // construction requires a non-empty alphabet
    }

    pub fn alphabet(&self) -> &[String] {
        &self.alphabet
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn prob(&self, i: usize) -> f64 {
        self.probs[i]
    }

    pub fn index_of(&self, label: &str) -> Result<usize> {
        self.alphabet
            .iter()
            .position(|a| a == label)
            .ok_or_else(|| Error::UnknownSymbol { symbol: label.to_string() })
    }

    pub fn entropy(&self) -> f64 {
        entropy_slice(&self.probs)
    }

    /// True if every symbol has positive mass.
    pub fn full_support(&self) -> bool {
        self.probs.iter().all(|p| *p > 0.0)
    }

    /// Inverse-CDF draw; `u` in `[0, 1)`.
    pub fn sample_index(&self, u: f64) -> usize {
        let mut acc = 0.0;
        for (i, p) in self.probs.iter().enumerate() {
            acc += p;
            if u < acc {
                return i;
            }
        }
        self.probs.len() - 1
    }
}

/// Total variation distance between pmfs over identical alphabets.
///
/// Equals half the L1 distance, which on a finite alphabet coincides with the
/// supremum over events of the probability difference.
pub fn tvd(p: &Pmf, q: &Pmf) -> Result<f64> {
    if p.alphabet != q.alphabet {
        return Err(Error::AlphabetMismatch("tvd over different alphabets".into()));
    }
    Ok(tvd_slices(&p.probs, &q.probs))
}

/// Half L1 distance between two raw probability vectors of equal length.
pub fn tvd_slices(p: &[f64], q: &[f64]) -> f64 {
    debug_assert_eq!(p.len(), q.len());
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

/// Entropy in bits.
pub fn entropy(p: &Pmf) -> f64 {
    p.entropy()
}

/// Arithmetic mean of per-position marginals: the average empirical
/// distribution of a random string with those marginals.
pub fn average_empirical(marginals: &[Pmf]) -> Result<Pmf> {
    let first = marginals
        .first()
        .ok_or_else(|| Error::InvalidInput("average_empirical of empty list".into()))?;
    let mut acc = vec![0.0; first.len()];
    for m in marginals {
        if m.alphabet != first.alphabet {
            return Err(Error::AlphabetMismatch("average_empirical alphabets differ".into()));
        }
        for (a, p) in acc.iter_mut().zip(m.probs()) {
            *a += p;
        }
    }
    let n = marginals.len() as f64;
    acc.iter_mut().for_each(|a| *a /= n);
    Pmf::renormalized(first.alphabet.clone(), acc)
}

// ---------------------------------------------------------------------------
// Kernel
// ---------------------------------------------------------------------------

/// Conditional pmf: one probability row per input symbol.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "KernelRaw")]
pub struct Kernel {
    input_alphabet: Vec<String>,
    output_alphabet: Vec<String>,
    rows: Vec<Vec<f64>>,
}

#[derive(Deserialize)]
struct KernelRaw {
    input_alphabet: Vec<String>,
    output_alphabet: Vec<String>,
    rows: Vec<Vec<f64>>,
}

impl TryFrom<KernelRaw> for Kernel {
    type Error = Error;
    fn try_from(raw: KernelRaw) -> Result<Kernel> {
        Kernel::new(raw.input_alphabet, raw.output_alphabet, raw.rows)
    }
}

impl Kernel {
    pub fn new(
        input_alphabet: Vec<String>,
        output_alphabet: Vec<String>,
        rows: Vec<Vec<f64>>,
    ) -> Result<Self> {
        if rows.len() != input_alphabet.len() {
            return Err(Error::InvalidInput(format!(
                "kernel has {} rows for {} input symbols",
                rows.len(),
                input_alphabet.len()
            )));
        }
        for row in &rows {
            // Row validation piggybacks on Pmf validation.
            Pmf::new(output_alphabet.clone(), row.clone())?;
        }
        Ok(Kernel { input_alphabet, output_alphabet, rows })
    }

    /// Kernel with numeric labels on both sides.
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let out_len = rows.first().map(|r| r.len()).unwrap_or(0);
        let input = (0..rows.len()).map(|i| i.to_string()).collect();
        let output = (0..out_len).map(|i| i.to_string()).collect();
        Kernel::new(input, output, rows)
    }

    /// Identity channel over an alphabet.
    pub fn identity(alphabet: Vec<String>) -> Result<Self> {
        let k = alphabet.len();
        let rows = (0..k)
            .map(|i| (0..k).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .collect();
        Kernel::new(alphabet.clone(), alphabet, rows)
    }

    pub fn input_alphabet(&self) -> &[String] {
        &self.input_alphabet
    }

    pub fn output_alphabet(&self) -> &[String] {
        &self.output_alphabet
    }

    pub fn input_len(&self) -> usize {
        self.input_alphabet.len()
    }

    pub fn output_len(&self) -> usize {
        self.output_alphabet.len()
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.rows[i]
    }

    pub fn prob(&self, input: usize, output: usize) -> f64 {
        self.rows[input][output]
    }

    /// Push an input distribution through the kernel: the output marginal.
    pub fn push(&self, p_in: &Pmf) -> Result<Pmf> {
        if p_in.alphabet() != self.input_alphabet {
            return Err(Error::AlphabetMismatch("push input alphabet".into()));
        }
        let mut out = vec![0.0; self.output_len()];
        for (v, pv) in p_in.probs().iter().enumerate() {
            for (y, o) in out.iter_mut().enumerate() {
                *o += pv * self.rows[v][y];
            }
        }
        Pmf::renormalized(self.output_alphabet.clone(), out)
    }
}

/// `H(Out | In)` in bits: the input-weighted entropy of the kernel rows.
pub fn conditional_entropy(k: &Kernel, p_in: &Pmf) -> Result<f64> {
    if p_in.alphabet() != k.input_alphabet() {
        return Err(Error::AlphabetMismatch("conditional_entropy input alphabet".into()));
    }
    Ok(p_in
        .probs()
        .iter()
        .zip(k.rows())
        .map(|(pv, row)| pv * entropy_slice(row))
        .sum())
}

// ---------------------------------------------------------------------------
// Joint
// ---------------------------------------------------------------------------

/// Joint pmf over a pair of labeled alphabets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Joint {
    a_alphabet: Vec<String>,
    b_alphabet: Vec<String>,
    /// `p[a][b]`
    p: Vec<Vec<f64>>,
}

impl Joint {
    pub fn new(a_alphabet: Vec<String>, b_alphabet: Vec<String>, p: Vec<Vec<f64>>) -> Result<Self> {
        if p.len() != a_alphabet.len() || p.iter().any(|r| r.len() != b_alphabet.len()) {
            return Err(Error::InvalidInput("joint table shape mismatch".into()));
        }
        let mut sum = 0.0;
        for row in &p {
            for &x in row {
                if !x.is_finite() || x < 0.0 {
                    return Err(Error::InvalidInput("negative or non-finite joint mass".into()));
                }
                sum += x;
            }
        }
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidInput(format!("joint mass sums to {sum}")));
        }
        Ok(Joint { a_alphabet, b_alphabet, p })
    }

    /// Joint `p(a, b) = p_in(a) · k(b | a)`.
    pub fn from_input_and_kernel(p_in: &Pmf, k: &Kernel) -> Result<Self> {
        if p_in.alphabet() != k.input_alphabet() {
            return Err(Error::AlphabetMismatch("joint input alphabet".into()));
        }
        let p = p_in
            .probs()
            .iter()
            .zip(k.rows())
            .map(|(pa, row)| row.iter().map(|kb| pa * kb).collect())
            .collect();
        Joint::new(p_in.alphabet().to_vec(), k.output_alphabet().to_vec(), p)
    }

    /// Product joint of two independent marginals.
    pub fn product(p: &Pmf, q: &Pmf) -> Result<Self> {
        let table = p
            .probs()
            .iter()
            .map(|pa| q.probs().iter().map(|qb| pa * qb).collect())
            .collect();
        Joint::new(p.alphabet().to_vec(), q.alphabet().to_vec(), table)
    }

    pub fn table(&self) -> &[Vec<f64>] {
        &self.p
    }

    pub fn prob(&self, a: usize, b: usize) -> f64 {
        self.p[a][b]
    }

    pub fn marginal_a(&self) -> Result<Pmf> {
        let probs = self.p.iter().map(|row| row.iter().sum()).collect();
        Pmf::renormalized(self.a_alphabet.clone(), probs)
    }

    pub fn marginal_b(&self) -> Result<Pmf> {
        let mut probs = vec![0.0; self.b_alphabet.len()];
        for row in &self.p {
            for (acc, x) in probs.iter_mut().zip(row) {
                *acc += x;
            }
        }
        Pmf::renormalized(self.b_alphabet.clone(), probs)
    }
}

/// Mutual information `I(A; B) = H(A) + H(B) − H(A, B)` in bits.
pub fn mutual_information(joint: &Joint) -> Result<f64> {
    let ha = joint.marginal_a()?.entropy();
    let hb = joint.marginal_b()?.entropy();
    let hab = -joint.p.iter().flatten().copied().map(xlog2x).sum::<f64>();
    // Clamp tiny negative round-off; I is non-negative.
    Ok((ha + hb - hab).max(0.0))
}

/// Pointwise information density `log2( p(a,b) / (p(a) p(b)) )`.
///
/// Returns `-inf` where the joint mass is zero but both marginals are
/// positive, `+inf` is impossible for valid joints, and errors if both
/// marginals vanish (the ratio is undefined).
pub fn information_density(joint: &Joint, a: usize, b: usize) -> Result<f64> {
    let pa: f64 = joint.p[a].iter().sum();
    let pb: f64 = joint.p.iter().map(|row| row[b]).sum();
    if pa == 0.0 && pb == 0.0 {
        return Err(Error::Domain("information density at a point with zero marginals".into()));
    }
    let pab = joint.p[a][b];
    if pab == 0.0 {
        return Ok(f64::NEG_INFINITY);
    }
    Ok((pab / (pa * pb)).log2())
}

// ---------------------------------------------------------------------------
// MarkovJoint
// ---------------------------------------------------------------------------

/// Joint over `(X, V, Y)` factored as `p_V · k_{X|V} · k_{Y|V}`.
///
/// The Markov chain `X - V - Y` holds by construction; this is the shape of
/// the auxiliary joints that trace out the trade-off region.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarkovJoint {
    p_v: Pmf,
    k_x_given_v: Kernel,
    k_y_given_v: Kernel,
}

impl MarkovJoint {
    pub fn new(p_v: Pmf, k_x_given_v: Kernel, k_y_given_v: Kernel) -> Result<Self> {
        if k_x_given_v.input_alphabet() != p_v.alphabet()
            || k_y_given_v.input_alphabet() != p_v.alphabet()
        {
            return Err(Error::AlphabetMismatch(
                "kernel input alphabets must match the auxiliary alphabet".into(),
            ));
        }
        Ok(MarkovJoint { p_v, k_x_given_v, k_y_given_v })
    }

    pub fn p_v(&self) -> &Pmf {
        &self.p_v
    }

    pub fn k_x_given_v(&self) -> &Kernel {
        &self.k_x_given_v
    }

    pub fn k_y_given_v(&self) -> &Kernel {
        &self.k_y_given_v
    }

    pub fn v_len(&self) -> usize {
        self.p_v.len()
    }

    pub fn marginal_x(&self) -> Result<Pmf> {
        self.k_x_given_v.push(&self.p_v)
    }

    pub fn marginal_y(&self) -> Result<Pmf> {
        self.k_y_given_v.push(&self.p_v)
    }

    pub fn joint_vx(&self) -> Result<Joint> {
        Joint::from_input_and_kernel(&self.p_v, &self.k_x_given_v)
    }

    pub fn joint_vy(&self) -> Result<Joint> {
        Joint::from_input_and_kernel(&self.p_v, &self.k_y_given_v)
    }

    pub fn i_xv(&self) -> Result<f64> {
        mutual_information(&self.joint_vx()?)
    }

    pub fn i_yv(&self) -> Result<f64> {
        mutual_information(&self.joint_vy()?)
    }

    pub fn h_y_given_v(&self) -> Result<f64> {
        conditional_entropy(&self.k_y_given_v, &self.p_v)
    }

    /// `E[d(X, Y)]`, with `X ⊥ Y` given `V`.
    pub fn expected_distortion(&self, d: &[Vec<f64>]) -> Result<f64> {
        let nx = self.k_x_given_v.output_len();
        let ny = self.k_y_given_v.output_len();
        if d.len() != nx || d.iter().any(|r| r.len() != ny) {
            return Err(Error::InvalidInput("distortion matrix shape mismatch".into()));
        }
        let mut total = 0.0;
        for (v, pv) in self.p_v.probs().iter().enumerate() {
            if *pv == 0.0 {
                continue;
            }
            let ax = self.k_x_given_v.row(v);
            let by = self.k_y_given_v.row(v);
            let mut dv = 0.0;
            for (x, axx) in ax.iter().enumerate() {
                for (y, byy) in by.iter().enumerate() {
                    dv += axx * byy * d[x][y];
                }
            }
            total += pv * dv;
        }
        Ok(total)
    }
}

// ---------------------------------------------------------------------------
// EmpiricalDist
// ---------------------------------------------------------------------------

/// Symbol counts of a finite sequence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalDist {
    alphabet: Vec<String>,
    counts: Vec<u64>,
}

impl EmpiricalDist {
    pub fn from_counts(alphabet: Vec<String>, counts: Vec<u64>) -> Result<Self> {
        if alphabet.len() != counts.len() {
            return Err(Error::InvalidInput("counts length mismatch".into()));
        }
        if counts.iter().all(|c| *c == 0) {
            return Err(Error::InvalidInput("empty empirical distribution".into()));
        }
        Ok(EmpiricalDist { alphabet, counts })
    }

    /// Counts of symbol indices over an alphabet of size `k`.
    pub fn from_indices(seq: &[usize], alphabet: Vec<String>) -> Result<Self> {
        if seq.is_empty() {
            return Err(Error::InvalidInput("empirical type of empty sequence".into()));
        }
        let mut counts = vec![0u64; alphabet.len()];
        for &s in seq {
            if s >= alphabet.len() {
                return Err(Error::UnknownSymbol { symbol: s.to_string() });
            }
            counts[s] += 1;
        }
        EmpiricalDist::from_counts(alphabet, counts)
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn alphabet(&self) -> &[String] {
        &self.alphabet
    }

    pub fn to_pmf(&self) -> Result<Pmf> {
        let total = self.total() as f64;
        let probs = self.counts.iter().map(|c| *c as f64 / total).collect();
        Pmf::renormalized(self.alphabet.clone(), probs)
    }
}

/// Empirical type of a labeled sequence over an explicit alphabet.
pub fn empirical_type(seq: &[&str], alphabet: &[String]) -> Result<EmpiricalDist> {
    if seq.is_empty() {
        return Err(Error::InvalidInput("empirical type of empty sequence".into()));
    }
    let mut counts = vec![0u64; alphabet.len()];
    for s in seq {
        let i = alphabet
            .iter()
            .position(|a| a == s)
            .ok_or_else(|| Error::UnknownSymbol { symbol: s.to_string() })?;
        counts[i] += 1;
    }
    EmpiricalDist::from_counts(alphabet.to_vec(), counts)
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------
