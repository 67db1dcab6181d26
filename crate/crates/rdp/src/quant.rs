//! Euclidean quantizers over axis-aligned prisms, and the checks that make a
//! continuous `(distortion, source)` pair reducible to finite alphabets.
//!
//! At level `l` the space is cut into half-open cubes of side `l^{-s}`.
//! Cubes wholly inside the open ball of radius `l` map to their centers;
//! cubes meeting the sphere map to a fixed representative (their center,
//! possibly just outside the ball); points of any cube lying entirely
//! outside are first projected onto the sphere and then quantized. The image
//! set is finite and refines as `l` grows, and inside the ball the
//! displacement is at most `sqrt(dim) * l^{-s}`.

use rand::Rng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::seeding;
use crate::{Error, Result};

/// Prism quantizer: dimension, level `l`, and cell-side exponent `s`
/// (cell side `l^{-s}`, ball radius `l`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EuclideanQuantizer {
    pub dim: usize,
    pub level: u32,
    pub exponent: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum PrismClass {
    Interior,
    Border,
    Outside,
}

impl EuclideanQuantizer {
    pub fn new(dim: usize, level: u32, exponent: f64) -> Result<Self> {
        if dim == 0 || level == 0 {
            return Err(Error::InvalidInput("dimension and level must be >= 1".into()));
        }
        if !(exponent > 0.0) || !exponent.is_finite() {
            return Err(Error::InvalidInput("exponent must be positive and finite".into()));
        }
        Ok(EuclideanQuantizer { dim, level, exponent })
    }

    pub fn cell_side(&self) -> f64 {
        (self.level as f64).powf(-self.exponent)
    }

    pub fn ball_radius(&self) -> f64 {
        self.level as f64
    }

    fn prism_of(&self, x: &[f64]) -> Vec<i64> {
        let side = self.cell_side();
        x.iter().map(|&c| (c / side).floor() as i64).collect()
    }

    fn center(&self, prism: &[i64]) -> Vec<f64> {
        let side = self.cell_side();
        prism.iter().map(|&i| (i as f64 + 0.5) * side).collect()
    }

    fn classify(&self, prism: &[i64]) -> PrismClass {
        let side = self.cell_side();
        let r2 = self.ball_radius() * self.ball_radius();
        let mut dmin2 = 0.0;
        let mut dmax2 = 0.0;
        for &i in prism {
            let lo = i as f64 * side;
            let hi = (i + 1) as f64 * side;
            let near = if lo <= 0.0 && 0.0 <= hi { 0.0 } else { lo.abs().min(hi.abs()) };
            let far = lo.abs().max(hi.abs());
            dmin2 += near * near;
            dmax2 += far * far;
        }
        if dmax2 < r2 {
            PrismClass::Interior
        } else if dmin2 <= r2 {
            PrismClass::Border
        } else {
            PrismClass::Outside
        }
    }

    /// Quantize a point to its cell representative.
    pub fn quantize(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.dim {
            return Err(Error::InvalidInput("point dimension mismatch".into()));
        }
        if x.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidInput("non-finite coordinate".into()));
        }
        let prism = self.prism_of(x);
        match self.classify(&prism) {
            PrismClass::Interior | PrismClass::Border => Ok(self.center(&prism)),
            PrismClass::Outside => {
                let norm = x.iter().map(|c| c * c).sum::<f64>().sqrt();
                let scale = self.ball_radius() / norm;
                let projected: Vec<f64> = x.iter().map(|c| c * scale).collect();
                // The projection lands on the sphere, whose prism meets it.
                Ok(self.center(&self.prism_of(&projected)))
            }
        }
    }

    /// One-dimensional cell table: representative, cell probability mass
    /// under a CDF, and the preimage intervals (border cells absorb the
    /// projected tails).
    pub fn cells_1d(&self, cdf: impl Fn(f64) -> f64) -> Result<Vec<Cell1d>> {
        if self.dim != 1 {
            return Err(Error::InvalidInput("cells_1d requires dim = 1".into()));
        }
        let side = self.cell_side();
        let radius = self.ball_radius();
        let lo_idx = (-radius / side).floor() as i64 - 1;
        let hi_idx = (radius / side).floor() as i64 + 1;
        let mut cells = Vec::new();
        for i in lo_idx..=hi_idx {
            let prism = [i];
            if self.classify(&prism) == PrismClass::Outside {
                continue;
            }
            let lo = i as f64 * side;
            let hi = (i + 1) as f64 * side;
            // Tail mass flows to the cells whose prisms contain the
            // projections +-radius.
            let contains_plus = lo <= radius && radius < hi;
            let contains_minus = lo <= -radius && -radius < hi;
            let mut pieces = vec![(lo, hi)];
            if contains_plus {
                pieces = vec![(lo, f64::INFINITY)];
            }
            if contains_minus {
                pieces = vec![(f64::NEG_INFINITY, hi)];
            }
            let mass: f64 = pieces
                .iter()
                .map(|&(a, b)| {
                    let ca = if a.is_infinite() { 0.0 } else { cdf(a) };
                    let cb = if b.is_infinite() { 1.0 } else { cdf(b) };
                    (cb - ca).max(0.0)
                })
                .sum();
            cells.push(Cell1d { rep: (i as f64 + 0.5) * side, mass, pieces });
        }
        Ok(cells)
    }
}

/// One cell of a 1-d quantizer: representative point, probability mass, and
/// preimage intervals.
#[derive(Debug, Clone)]
pub struct Cell1d {
    pub rep: f64,
    pub mass: f64,
    pub pieces: Vec<(f64, f64)>,
}

/// Standard Gaussian sampler (Box-Muller), one point in `R^dim` per call.
pub fn standard_gaussian(dim: usize) -> impl FnMut(&mut ChaCha12Rng) -> Vec<f64> {
    move |rng| {
        (0..dim)
            .map(|_| {
                let u1: f64 = rng.random::<f64>().max(1e-300);
                let u2: f64 = rng.random();
                (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
            })
            .collect()
    }
}

/// Result of [`verify_quantizability`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QuantizabilityReport {
    /// Smallest integer radius whose empirical mass reaches `1 - tau`.
    pub b_tau_radius: u32,
    /// Max of `|d(x,y) - d([x],[y])|` over sampled pairs inside the ball.
    pub max_violation_inside: f64,
    /// Max of `d([x],[y]) - d(x,y)` over pairs not both inside.
    pub max_violation_outside: f64,
    pub inside_pairs: usize,
    pub outside_pairs: usize,
    pub pass: bool,
}

/// Sample-based check of the two quantizability inequalities for
/// `d(x, y) = ||x - y||^s`: inside `B_tau x B_tau` the quantized distortion
/// must track the true one within `eps`; outside, it must not exceed it by
/// more than `eps`.
pub fn verify_quantizability(
    q: &EuclideanQuantizer,
    s: f64,
    mut sampler: impl FnMut(&mut ChaCha12Rng) -> Vec<f64>,
    pairs: usize,
    eps: f64,
    tau: f64,
    seed: u64,
) -> Result<QuantizabilityReport> {
    if !(0.0..1.0).contains(&tau) || tau == 0.0 {
        return Err(Error::Domain("tau must be in (0, 1)".into()));
    }
    let norm = |p: &[f64]| p.iter().map(|c| c * c).sum::<f64>().sqrt();

    // Pick the smallest integer-radius ball with empirical mass >= 1 - tau.
    let mut rng = seeding::task_rng(seed, "quantizability-radius", 0);
    let probe: Vec<f64> = (0..pairs.max(1000)).map(|_| norm(&sampler(&mut rng))).collect();
    let mut b_tau_radius = 1u32;
    loop {
        let inside = probe.iter().filter(|&&r| r <= b_tau_radius as f64).count();
        if inside as f64 >= (1.0 - tau) * probe.len() as f64 || b_tau_radius >= q.level {
            break;
        }
        b_tau_radius += 1;
    }

    let mut rng = seeding::task_rng(seed, "quantizability-pairs", 0);
    let radius = b_tau_radius as f64;
    let mut max_inside = 0.0f64;
    let mut max_outside = 0.0f64;
    let mut inside_pairs = 0;
    let mut outside_pairs = 0;
    for _ in 0..pairs {
        let x = sampler(&mut rng);
        let y = sampler(&mut rng);
        let qx = q.quantize(&x)?;
        let qy = q.quantize(&y)?;
        let dist = |a: &[f64], b: &[f64]| -> f64 {
            a.iter().zip(b).map(|(u, v)| (u - v) * (u - v)).sum::<f64>().sqrt().powf(s)
        };
        let d_true = dist(&x, &y);
        let d_quant = dist(&qx, &qy);
        if norm(&x) <= radius && norm(&y) <= radius {
            inside_pairs += 1;
            max_inside = max_inside.max((d_true - d_quant).abs());
        } else {
            outside_pairs += 1;
            max_outside = max_outside.max(d_quant - d_true);
        }
    }
    Ok(QuantizabilityReport {
        b_tau_radius,
        max_violation_inside: max_inside,
        max_violation_outside: max_outside,
        inside_pairs,
        outside_pairs,
        pass: max_inside <= eps && max_outside <= eps,
    })
}

/// Adversarial tail expectation of a distortion under an independent
/// coupling: for each `tau`, the mean of the top `ceil(tau N)` distortion
/// values. A probe of the uniform-integrability supremum, not a certified
/// bound.
pub fn uniform_integrability_probe(
    mut d_values: Vec<f64>,
    tau_grid: &[f64],
) -> Result<Vec<(f64, f64)>> {
    if d_values.is_empty() {
        return Err(Error::InvalidInput("no distortion samples".into()));
    }
    if tau_grid.iter().any(|t| !(0.0..=1.0).contains(t)) {
        return Err(Error::Domain("tau values must lie in [0, 1]".into()));
    }
    d_values.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let n = d_values.len();
    let mut prefix = Vec::with_capacity(n + 1);
    prefix.push(0.0);
    for &d in &d_values {
        prefix.push(prefix.last().unwrap() + d);
    }
    Ok(tau_grid
        .iter()
        .map(|&tau| {
            let k = ((tau * n as f64).ceil() as usize).min(n);
            (tau, prefix[k] / n as f64)
        })
        .collect())
}

/// Convenience: probe squared-error uniform integrability for a sampler.
pub fn probe_sampler(
    mut sampler: impl FnMut(&mut ChaCha12Rng) -> Vec<f64>,
    s: f64,
    pairs: usize,
    tau_grid: &[f64],
    seed: u64,
) -> Result<Vec<(f64, f64)>> {
    let mut rng = seeding::task_rng(seed, "ui-probe", 0);
    let d_values: Vec<f64> = (0..pairs)
        .map(|_| {
            let x = sampler(&mut rng);
            let y = sampler(&mut rng);
            x.iter().zip(&y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt().powf(s)
        })
        .collect();
    uniform_integrability_probe(d_values, tau_grid)
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------
