//! Trade-off region computation.
//!
//! For a finite source `p_X` and distortion `d`, the minimal distortion under
//! rates `(R, R_c, R_d)` is a minimum of `E[d(X, Y)]` over Markov-factored
//! joints `X - V - Y` with both the `X`- and `Y`-marginals equal to the
//! source, subject to
//!
//! ```text
//! I(X;V) <= R,    I(Y;V) <= R + R_c,    H(Y|V) <= R_d,    |V| <= cap
//! ```
//!
//! In per-symbol mode the `I(Y;V)` bound is dropped. `R_c` or `R_d` equal to
//! infinity drop the corresponding constraint.
//!
//! Only the region is characterized, not an algorithm, so [`min_distortion`]
//! runs a multi-restart penalty optimization followed by an exact feasibility
//! repair, and [`grid_oracle`] cross-checks it by exhaustive search over a
//! simplex grid. Both report exactly feasible witnesses: grid points within
//! tolerance of the marginal constraints are projected onto them before being
//! scored.
//!
//! A useful reformulation: once the `Y`-marginal equals the source exactly,
//! `I(Y;V) = H(X) − H(Y|V)`, so the two `Y`-side constraints form an entropy
//! band `H(X) − R − R_c <= H(Y|V) <= R_d`. The band is non-empty iff
//! `R + R_c + R_d >= H(X)`, which is the exact feasibility predicate used by
//! the solver (per-symbol mode is always feasible). Infeasible rate points
//! get `delta_star = +inf`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::prob::{entropy_slice, tvd_slices, Kernel, MarkovJoint, Pmf};
use crate::seeding;
use crate::{Error, Result};

/// Realism constraint flavor: strong keeps the `I(Y;V) <= R + R_c` bound,
/// per-symbol removes it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RealismMode {
    Strong,
    PerSymbol,
}

/// A rate-distortion operating point. `r` is finite; `r_c`, `r_d` and
/// `delta` may be `f64::INFINITY`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateTuple {
    pub r: f64,
    pub r_c: f64,
    pub r_d: f64,
    pub delta: f64,
}

impl RateTuple {
    pub fn new(r: f64, r_c: f64, r_d: f64, delta: f64) -> Result<Self> {
        if !r.is_finite() || r < 0.0 {
            return Err(Error::InvalidInput("R must be finite and non-negative".into()));
        }
        for (name, v) in [("R_c", r_c), ("R_d", r_d), ("Delta", delta)] {
            if v < 0.0 || v.is_nan() {
                return Err(Error::InvalidInput(format!("{name} must be >= 0 or +inf")));
            }
        }
        Ok(RateTuple { r, r_c, r_d, delta })
    }
}

/// Source, distortion matrix and constraint flavor for region queries.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RegionProblem {
    pub source: Pmf,
    /// `d[x][y] >= 0`, finite.
    pub distortion: Vec<Vec<f64>>,
    pub mode: RealismMode,
    /// Auxiliary alphabet cardinality cap; `|X|^2 + 1` suffices.
    pub v_card_cap: usize,
}

impl RegionProblem {
    pub fn new(
        source: Pmf,
        distortion: Vec<Vec<f64>>,
        mode: RealismMode,
        v_card_cap: Option<usize>,
    ) -> Result<Self> {
        let k = source.len();
        if distortion.len() != k || distortion.iter().any(|r| r.len() != k) {
            return Err(Error::InvalidInput(format!("distortion matrix must be {k}x{k}")));
        }
        if distortion.iter().flatten().any(|d| !d.is_finite() || *d < 0.0) {
            return Err(Error::InvalidInput(
                "distortion entries must be finite and non-negative".into(),
            ));
        }
        let cap = v_card_cap.unwrap_or(k * k + 1);
        if cap < 1 {
            return Err(Error::InvalidInput("v_card_cap must be >= 1".into()));
        }
        Ok(RegionProblem { source, distortion, mode, v_card_cap: cap })
    }

    pub fn max_distortion(&self) -> f64 {
        self.distortion.iter().flatten().fold(0.0f64, |m, d| m.max(*d))
    }
}

/// Hamming distortion matrix on `k` symbols.
pub fn hamming(k: usize) -> Vec<Vec<f64>> {
    (0..k).map(|x| (0..k).map(|y| if x == y { 0.0 } else { 1.0 }).collect()).collect()
}

/// Solver knobs. Defaults are sized for desk-scale problems (`|X| <= 4`).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolverOptions {
    pub restarts: usize,
    pub seed: u64,
    /// Penalty continuation rounds.
    pub outer_rounds: usize,
    /// Projected-gradient iterations per round.
    pub inner_iters: usize,
    /// Initial penalty weight; multiplied by `penalty_growth` each round.
    pub penalty_init: f64,
    pub penalty_growth: f64,
    /// Witnesses with all slacks above `-feas_tol` count as feasible.
    pub feas_tol: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            restarts: 32,
            seed: 0x5eed,
            outer_rounds: 8,
            inner_iters: 220,
            penalty_init: 8.0,
            penalty_growth: 8.0,
            feas_tol: 1e-6,
        }
    }
}

impl SolverOptions {
    /// Cheaper settings for smoke tests and sweeps over many points.
    pub fn fast() -> Self {
        SolverOptions { restarts: 12, outer_rounds: 7, inner_iters: 150, ..Default::default() }
    }
}

/// Exact constraint slacks of a witness (`slack >= 0` means satisfied).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WitnessSlacks {
    pub r: f64,
    pub r_c: f64,
    pub r_d: f64,
    pub marginal_x_tvd: f64,
    pub marginal_y_tvd: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolverDiagnostics {
    pub restarts_used: usize,
    /// Final (post-repair) objective of each restart, in restart order;
    /// `NaN` marks restarts whose repair failed feasibility.
    pub objective_trace: Vec<f64>,
    /// Number of restarts within 1e-3 of the best objective.
    pub agreement: usize,
    /// False when the best value was attained by a single restart only.
    pub converged: bool,
    pub slacks: Option<WitnessSlacks>,
    pub feasible: bool,
}

/// Result of [`min_distortion`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RegionSolution {
    /// Minimal distortion found; `+inf` when the rate point is infeasible.
    pub delta_star: f64,
    pub achieving_joint: Option<MarkovJoint>,
    pub diagnostics: SolverDiagnostics,
}

// ---------------------------------------------------------------------------
// Constraint bookkeeping
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy)]
struct Constraints {
    r: f64,
    /// `I(Y;V)` bound; `None` when dropped (per-symbol mode or `R_c = inf`).
    r_plus_rc: Option<f64>,
    /// `H(Y|V)` bound; `None` when `R_d = inf`.
    r_d: Option<f64>,
}

impl Constraints {
    /// `require_below_entropy` applies the `R < H(X)` hypothesis; the grid
    /// oracle skips it (and so covers degenerate sources), the solver keeps
    /// it because the region is only characterized there.
    fn build(
        problem: &RegionProblem,
        r: f64,
        r_c: f64,
        r_d: f64,
        require_below_entropy: bool,
    ) -> Result<Self> {
        if !r.is_finite() || r < 0.0 {
            return Err(Error::InvalidInput("R must be finite and non-negative".into()));
        }
        if r_c < 0.0 || r_d < 0.0 || r_c.is_nan() || r_d.is_nan() {
            return Err(Error::InvalidInput("R_c, R_d must be >= 0 or +inf".into()));
        }
        let h_x = problem.source.entropy();
        if require_below_entropy && r >= h_x {
            return Err(Error::Domain(format!(
                "R = {r} is not below H(source) = {h_x}; the region is only \
                 characterized for R < H(X) and this solver refuses to extrapolate"
            )));
        }
        let r_plus_rc = match problem.mode {
            RealismMode::PerSymbol => None,
            RealismMode::Strong => {
                if r_c.is_infinite() {
                    None
                } else {
                    Some(r + r_c)
                }
            }
        };
        let r_d_bound = if r_d.is_infinite() { None } else { Some(r_d) };
        Ok(Constraints { r, r_plus_rc, r_d: r_d_bound })
    }

    /// Entropy band for `H(Y|V)` once the `Y`-marginal is exact.
    fn entropy_band(&self, h_x: f64) -> (f64, f64) {
        let lo = self.r_plus_rc.map(|b| (h_x - b).max(0.0)).unwrap_or(0.0);
        let hi = self.r_d.unwrap_or(f64::INFINITY).min(h_x);
        (lo, hi)
    }

    fn feasible(&self, h_x: f64) -> bool {
        let (lo, hi) = self.entropy_band(h_x);
        lo <= hi + 1e-9
    }
}

// ---------------------------------------------------------------------------
// Block parameterization: p_V plus the two kernels, all rows on simplices
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
struct Blocks {
    cap: usize,
    k: usize,
    p_v: Vec<f64>,
    /// `a[v * k + x] = k_{X|V}(x | v)`
    a: Vec<f64>,
    /// `b[v * k + y] = k_{Y|V}(y | v)`
    b: Vec<f64>,
}

#[derive(Debug, Clone, Copy, Default)]
struct Quantities {
    e_d: f64,
    i_xv: f64,
    i_yv: f64,
    h_ygv: f64,
    marg_x_tvd: f64,
    marg_y_tvd: f64,
}

impl Blocks {
    fn marg_x(&self) -> Vec<f64> {
        let mut q = vec![0.0; self.k];
        for v in 0..self.cap {
            let pv = self.p_v[v];
            for x in 0..self.k {
                q[x] += pv * self.a[v * self.k + x];
            }
        }
        q
    }

    fn marg_y(&self) -> Vec<f64> {
        let mut q = vec![0.0; self.k];
        for v in 0..self.cap {
            let pv = self.p_v[v];
            for y in 0..self.k {
                q[y] += pv * self.b[v * self.k + y];
            }
        }
        q
    }

    fn h_x_given_v(&self) -> f64 {
        (0..self.cap)
            .map(|v| self.p_v[v] * entropy_slice(&self.a[v * self.k..(v + 1) * self.k]))
            .sum()
    }

    fn h_y_given_v(&self) -> f64 {
        (0..self.cap)
            .map(|v| self.p_v[v] * entropy_slice(&self.b[v * self.k..(v + 1) * self.k]))
            .sum()
    }

    fn expected_distortion(&self, d: &[Vec<f64>]) -> f64 {
        let mut total = 0.0;
        for v in 0..self.cap {
            let pv = self.p_v[v];
            if pv == 0.0 {
                continue;
            }
            let a = &self.a[v * self.k..(v + 1) * self.k];
            let b = &self.b[v * self.k..(v + 1) * self.k];
            let mut dv = 0.0;
            for (x, ax) in a.iter().enumerate() {
                if *ax == 0.0 {
                    continue;
                }
                let row = &d[x];
                dv += ax * b.iter().zip(row).map(|(by, dxy)| by * dxy).sum::<f64>();
            }
            total += pv * dv;
        }
        total
    }

    fn quantities(&self, problem: &RegionProblem) -> Quantities {
        let qx = self.marg_x();
        let qy = self.marg_y();
        let h_qx = entropy_slice(&qx);
        let h_qy = entropy_slice(&qy);
        Quantities {
            e_d: self.expected_distortion(&problem.distortion),
            i_xv: (h_qx - self.h_x_given_v()).max(0.0),
            i_yv: (h_qy - self.h_y_given_v()).max(0.0),
            h_ygv: self.h_y_given_v(),
            marg_x_tvd: tvd_slices(&qx, problem.source.probs()),
            marg_y_tvd: tvd_slices(&qy, problem.source.probs()),
        }
    }

    fn to_markov_joint(&self, problem: &RegionProblem) -> Result<MarkovJoint> {
        let v_alphabet: Vec<String> = (0..self.cap).map(|v| format!("v{v}")).collect();
        let x_alpha = problem.source.alphabet().to_vec();
        let p_v = Pmf::renormalized(v_alphabet.clone(), self.p_v.clone())?;
        let rows_a: Vec<Vec<f64>> =
            (0..self.cap).map(|v| self.a[v * self.k..(v + 1) * self.k].to_vec()).collect();
        let rows_b: Vec<Vec<f64>> =
            (0..self.cap).map(|v| self.b[v * self.k..(v + 1) * self.k].to_vec()).collect();
        let k_x = Kernel::new(v_alphabet.clone(), x_alpha.clone(), rows_a)?;
        let k_y = Kernel::new(v_alphabet, x_alpha, rows_b)?;
        MarkovJoint::new(p_v, k_x, k_y)
    }
}

// ---------------------------------------------------------------------------
// Simplex geometry
// ---------------------------------------------------------------------------

/// Euclidean projection onto the probability simplex.
fn project_simplex(v: &mut [f64]) {
    let n = v.len();
    let mut sorted = v.to_vec();
    sorted.sort_by(|x, y| y.partial_cmp(x).unwrap());
    let mut cum = 0.0;
    let mut theta = (sorted[0] - 1.0).max(0.0);
    for (i, &s) in sorted.iter().enumerate() {
        cum += s;
        let t = (cum - 1.0) / (i + 1) as f64;
        if s > t {
            theta = t;
        }
    }
    for x in v.iter_mut() {
        *x = (*x - theta).max(0.0);
    }
    // Guard against accumulated round-off.
    let sum: f64 = v.iter().sum();
    if sum > 0.0 {
        v.iter_mut().for_each(|x| *x /= sum);
    } else {
        v.iter_mut().for_each(|x| *x = 1.0 / n as f64);
    }
}

const LOG_FLOOR: f64 = 1e-12;

#[inline]
fn log2c(x: f64) -> f64 {
    x.max(LOG_FLOOR).log2()
}

// ---------------------------------------------------------------------------
// Penalized descent
// ---------------------------------------------------------------------------

fn penalized_value(blocks: &Blocks, problem: &RegionProblem, cons: &Constraints, w: f64) -> f64 {
    let k = blocks.k;
    let qx = blocks.marg_x();
    let qy = blocks.marg_y();
    let src = problem.source.probs();
    let mut marg_pen = 0.0;
    for i in 0..k {
        marg_pen += (qx[i] - src[i]).powi(2) + (qy[i] - src[i]).powi(2);
    }
    let i_xv = (entropy_slice(&qx) - blocks.h_x_given_v()).max(0.0);
    let i_yv = (entropy_slice(&qy) - blocks.h_y_given_v()).max(0.0);
    let h_ygv = blocks.h_y_given_v();
    let mut rate_pen = (i_xv - cons.r).max(0.0).powi(2);
    if let Some(bound) = cons.r_plus_rc {
        rate_pen += (i_yv - bound).max(0.0).powi(2);
    }
    if let Some(bound) = cons.r_d {
        rate_pen += (h_ygv - bound).max(0.0).powi(2);
    }
    blocks.expected_distortion(&problem.distortion) + w * (marg_pen + rate_pen)
}

/// Gradient of the penalized objective in the `(p_v, a, b)` layout. Constant
/// shifts within a simplex block are irrelevant (the projection removes
/// them), so per-block constants are dropped from the log-derivative terms.
fn penalized_gradient(
    blocks: &Blocks,
    problem: &RegionProblem,
    cons: &Constraints,
    w: f64,
) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let k = blocks.k;
    let cap = blocks.cap;
    let d = &problem.distortion;
    let src = problem.source.probs();
    let qx = blocks.marg_x();
    let qy = blocks.marg_y();

    let i_xv = (entropy_slice(&qx) - blocks.h_x_given_v()).max(0.0);
    let i_yv = (entropy_slice(&qy) - blocks.h_y_given_v()).max(0.0);
    let h_ygv = blocks.h_y_given_v();

    let lam_r = 2.0 * w * (i_xv - cons.r).max(0.0);
    let lam_rc = cons.r_plus_rc.map(|b| 2.0 * w * (i_yv - b).max(0.0)).unwrap_or(0.0);
    let lam_rd = cons.r_d.map(|b| 2.0 * w * (h_ygv - b).max(0.0)).unwrap_or(0.0);

    let mut g_p = vec![0.0; cap];
    let mut g_a = vec![0.0; cap * k];
    let mut g_b = vec![0.0; cap * k];

    for v in 0..cap {
        let pv = blocks.p_v[v];
        let a = &blocks.a[v * k..(v + 1) * k];
        let b = &blocks.b[v * k..(v + 1) * k];

        // Distortion terms.
        let mut dv = 0.0;
        for (x, ax) in a.iter().enumerate() {
            let dot: f64 = b.iter().zip(&d[x]).map(|(by, dxy)| by * dxy).sum();
            dv += ax * dot;
            g_a[v * k + x] += pv * dot;
        }
        for y in 0..k {
            let dot: f64 = a.iter().enumerate().map(|(x, ax)| ax * d[x][y]).sum();
            g_b[v * k + y] += pv * dot;
        }
        g_p[v] += dv;

        // Marginal penalties (squared L2).
        for x in 0..k {
            let gx = 2.0 * w * (qx[x] - src[x]);
            g_p[v] += gx * a[x];
            g_a[v * k + x] += gx * pv;
            let gy = 2.0 * w * (qy[x] - src[x]);
            g_p[v] += gy * b[x];
            g_b[v * k + x] += gy * pv;
        }

        // I(X;V) penalty.
        if lam_r > 0.0 {
            let mut kl = 0.0;
            for x in 0..k {
                let l = log2c(a[x]) - log2c(qx[x]);
                kl += a[x] * l;
                g_a[v * k + x] += lam_r * pv * l;
            }
            g_p[v] += lam_r * kl;
        }
        // I(Y;V) penalty.
        if lam_rc > 0.0 {
            let mut kl = 0.0;
            for y in 0..k {
                let l = log2c(b[y]) - log2c(qy[y]);
                kl += b[y] * l;
                g_b[v * k + y] += lam_rc * pv * l;
            }
            g_p[v] += lam_rc * kl;
        }
        // H(Y|V) penalty.
        if lam_rd > 0.0 {
            let mut h = 0.0;
            for y in 0..k {
                let l = log2c(b[y]);
                h -= b[y] * l;
                g_b[v * k + y] -= lam_rd * pv * l;
            }
            g_p[v] += lam_rd * h;
        }
    }
    (g_p, g_a, g_b)
}

fn descend(blocks: &mut Blocks, problem: &RegionProblem, cons: &Constraints, w: f64, iters: usize) {
    let k = blocks.k;
    let mut step = 0.1;
    let mut value = penalized_value(blocks, problem, cons, w);
    for _ in 0..iters {
        let (g_p, g_a, g_b) = penalized_gradient(blocks, problem, cons, w);
        let mut improved = false;
        while step > 1e-13 {
            let mut cand = blocks.clone();
            for v in 0..cand.cap {
                cand.p_v[v] -= step * g_p[v];
            }
            for (x, g) in cand.a.iter_mut().zip(&g_a) {
                *x -= step * g;
            }
            for (x, g) in cand.b.iter_mut().zip(&g_b) {
                *x -= step * g;
            }
            project_simplex(&mut cand.p_v);
            for v in 0..cand.cap {
                project_simplex(&mut cand.a[v * k..(v + 1) * k]);
                project_simplex(&mut cand.b[v * k..(v + 1) * k]);
            }
            let cand_value = penalized_value(&cand, problem, cons, w);
            if cand_value < value {
                *blocks = cand;
                value = cand_value;
                step = (step * 1.4).min(1.0);
                improved = true;
                break;
            }
            step *= 0.5;
        }
        if !improved {
            break;
        }
    }
}

// ---------------------------------------------------------------------------
// Exact feasibility repair
// ---------------------------------------------------------------------------

/// Rescale-and-redistribute rows so the mixture marginal equals `target`
/// exactly. Rows (length `k`, weighted by `weights`) are adjusted in place;
/// rows with zero weight are set to the target itself.
fn repair_marginal(weights: &[f64], rows: &mut [f64], k: usize, target: &[f64]) {
    let cap = weights.len();
    let mut q = vec![0.0; k];
    for v in 0..cap {
        for (x, qx) in q.iter_mut().enumerate() {
            *qx += weights[v] * rows[v * k + x];
        }
    }
    let mut deficit = vec![0.0; k];
    let mut total_deficit = 0.0;
    for x in 0..k {
        deficit[x] = (target[x] - q[x]).max(0.0);
        total_deficit += deficit[x];
    }
    for v in 0..cap {
        if weights[v] == 0.0 {
            rows[v * k..(v + 1) * k].copy_from_slice(target);
        }
    }
    if total_deficit <= 0.0 {
        return; // no deficit means no excess either: marginal already exact
    }
    let scale: Vec<f64> =
        (0..k).map(|x| if q[x] > 0.0 { (target[x] / q[x]).min(1.0) } else { 1.0 }).collect();
    for v in 0..cap {
        if weights[v] == 0.0 {
            continue;
        }
        let row = &mut rows[v * k..(v + 1) * k];
        let mut kept = 0.0;
        for (x, r) in row.iter_mut().enumerate() {
            *r *= scale[x];
            kept += *r;
        }
        let removed = (1.0 - kept).max(0.0);
        for (x, r) in row.iter_mut().enumerate() {
            *r += removed * deficit[x] / total_deficit;
        }
    }
}

/// Mix rows toward the common marginal until the mutual information drops to
/// `bound`. Mixing `(1-t) row + t marginal` preserves the mixture marginal,
/// and mutual information is convex, non-negative and zero at `t = 1`, hence
/// non-increasing along the path: bisection on `t` is valid.
fn mix_rows_to_information_bound(
    weights: &[f64],
    rows: &mut [f64],
    k: usize,
    marginal: &[f64],
    bound: f64,
) {
    let info = |rows: &[f64]| -> f64 {
        let h_rows: f64 = weights
            .iter()
            .enumerate()
            .map(|(v, pv)| pv * entropy_slice(&rows[v * k..(v + 1) * k]))
            .sum();
        (entropy_slice(marginal) - h_rows).max(0.0)
    };
    if info(rows) <= bound + 1e-15 {
        return;
    }
    if bound <= 1e-12 {
        // Exact independence required; snap to the marginal.
        for v in 0..weights.len() {
            rows[v * k..(v + 1) * k].copy_from_slice(marginal);
        }
        return;
    }
    let base = rows.to_vec();
    let mix = |t: f64, out: &mut [f64]| {
        for (i, o) in out.iter_mut().enumerate() {
            *o = (1.0 - t) * base[i] + t * marginal[i % k];
        }
    };
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    let mut scratch = base.clone();
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        mix(mid, &mut scratch);
        if info(&scratch) <= bound + 1e-15 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    mix(hi, rows);
}

/// Move the conditional entropy of the row mixture into
/// `[lo_bound, hi_bound]` along marginal-preserving paths: flattening toward
/// the marginal raises it, sharpening away from the marginal lowers it.
fn adjust_conditional_entropy(
    weights: &[f64],
    rows: &mut [f64],
    k: usize,
    marginal: &[f64],
    lo_bound: f64,
    hi_bound: f64,
) {
    let h = |rows: &[f64]| -> f64 {
        weights
            .iter()
            .enumerate()
            .map(|(v, pv)| pv * entropy_slice(&rows[v * k..(v + 1) * k]))
            .sum()
    };
    let current = h(rows);
    if current >= lo_bound - 1e-15 && current <= hi_bound + 1e-15 {
        return;
    }
    if current < lo_bound {
        // Flatten: (1-t) rows + t marginal. At t = 1 the conditional entropy
        // is the marginal entropy, which is >= lo_bound whenever the rate
        // point is feasible.
        let base = rows.to_vec();
        let mix = |t: f64, out: &mut [f64]| {
            for (i, o) in out.iter_mut().enumerate() {
                *o = (1.0 - t) * base[i] + t * marginal[i % k];
            }
        };
        let mut scratch = base.clone();
        // Entropy need not be monotone along the path; scan, then refine.
        let mut t_ok = 1.0;
        for i in 1..=256 {
            let t = i as f64 / 256.0;
            mix(t, &mut scratch);
            if h(&scratch) >= lo_bound - 1e-15 {
                t_ok = t;
                break;
            }
        }
        let (mut lo, mut hi) = ((t_ok - 1.0 / 256.0).max(0.0), t_ok);
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            mix(mid, &mut scratch);
            if h(&scratch) >= lo_bound - 1e-15 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        mix(hi, rows);
        return;
    }
    // Sharpen: rows + t (rows - marginal), iterating as entries hit zero.
    for _ in 0..=k {
        let current = h(rows);
        if current <= hi_bound + 1e-15 {
            return;
        }
        let base = rows.to_vec();
        let mut t_max = f64::INFINITY;
        for v in 0..weights.len() {
            if weights[v] == 0.0 {
                continue;
            }
            for x in 0..k {
                let bvx = base[v * k + x];
                let m = marginal[x];
                if bvx < m {
                    t_max = t_max.min(bvx / (m - bvx));
                }
            }
        }
        if !t_max.is_finite() || t_max <= 0.0 {
            return; // nothing left to sharpen
        }
        let mix = |t: f64, out: &mut [f64]| {
            for (i, o) in out.iter_mut().enumerate() {
                *o = (base[i] + t * (base[i] - marginal[i % k])).max(0.0);
            }
        };
        let mut scratch = base.clone();
        mix(t_max, &mut scratch);
        if h(&scratch) > hi_bound + 1e-15 {
            rows.copy_from_slice(&scratch);
            continue; // exhaust this direction, retry on the reduced support
        }
        let (mut lo, mut hi) = (0.0f64, t_max);
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            mix(mid, &mut scratch);
            if h(&scratch) <= hi_bound + 1e-15 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        mix(hi, rows);
        return;
    }
}

/// Exact repair: marginals first, then information and entropy-band fixes.
fn repair(blocks: &mut Blocks, problem: &RegionProblem, cons: &Constraints) {
    let k = blocks.k;
    let src = problem.source.probs();
    repair_marginal(&blocks.p_v, &mut blocks.a, k, src);
    repair_marginal(&blocks.p_v, &mut blocks.b, k, src);
    mix_rows_to_information_bound(&blocks.p_v, &mut blocks.a, k, src, cons.r);
    let h_x = problem.source.entropy();
    let (lo, hi) = cons.entropy_band(h_x);
    adjust_conditional_entropy(&blocks.p_v, &mut blocks.b, k, src, lo, hi.min(h_x));
}

// ---------------------------------------------------------------------------
// Restart initialization
// ---------------------------------------------------------------------------

/// Exact-feasible start: `X` independent of `V`, `Y | V` interpolated between
/// a copy of `V` and independence so `H(Y|V)` lands inside the entropy band.
fn band_witness_start(problem: &RegionProblem, cons: &Constraints) -> Blocks {
    let k = problem.source.len();
    let cap = problem.v_card_cap;
    let src = problem.source.probs();
    let h_x = problem.source.entropy();
    let (lo, hi) = cons.entropy_band(h_x);
    let target_h = 0.5 * (lo + hi.min(h_x));

    let mut p_v = vec![0.0; cap];
    p_v[..k].copy_from_slice(src);
    let mut a = vec![0.0; cap * k];
    for v in 0..cap {
        a[v * k..(v + 1) * k].copy_from_slice(src);
    }
    let h_at = |t: f64| -> f64 {
        (0..k)
            .map(|v| {
                let row: Vec<f64> = (0..k)
                    .map(|y| (1.0 - t) * if v == y { 1.0 } else { 0.0 } + t * src[y])
                    .collect();
                src[v] * entropy_slice(&row)
            })
            .sum()
    };
    // Scan for the t whose entropy is closest to the band target.
    let mut best_t = 1.0;
    let mut best_gap = f64::INFINITY;
    for i in 0..=512 {
        let t = i as f64 / 512.0;
        let gap = (h_at(t) - target_h).abs();
        if gap < best_gap {
            best_gap = gap;
            best_t = t;
        }
    }
    let mut b = vec![0.0; cap * k];
    for v in 0..cap {
        for y in 0..k {
            let copy = if v == y { 1.0 } else { 0.0 };
            b[v * k + y] = if v < k { (1.0 - best_t) * copy + best_t * src[y] } else { src[y] };
        }
    }
    Blocks { cap, k, p_v, a, b }
}

/// Zero-decoder-randomness corner: `Y` a deterministic function of `V`,
/// `X` independent of `V`. Exactly feasible whenever the entropy band
/// contains 0 (`R + R_c >= H(X)` or a dropped `I(Y;V)` bound).
fn deterministic_y_start(problem: &RegionProblem) -> Blocks {
    let k = problem.source.len();
    let cap = problem.v_card_cap;
    let src = problem.source.probs();
    let mut p_v = vec![0.0; cap];
    p_v[..k].copy_from_slice(src);
    let mut a = vec![0.0; cap * k];
    let mut b = vec![0.0; cap * k];
    for v in 0..cap {
        for x in 0..k {
            a[v * k + x] = src[x];
            b[v * k + x] = if v < k {
                if v == x {
                    1.0
                } else {
                    0.0
                }
            } else {
                src[x]
            };
        }
    }
    Blocks { cap, k, p_v, a, b }
}

/// Low-distortion corner: `V = X = Y` (infeasible for `R < H(X)`, but a
/// useful basin for the penalty phase).
fn identity_start(problem: &RegionProblem) -> Blocks {
    let k = problem.source.len();
    let cap = problem.v_card_cap;
    let src = problem.source.probs();
    let mut p_v = vec![0.0; cap];
    p_v[..k].copy_from_slice(src);
    let mut a = vec![0.0; cap * k];
    let mut b = vec![0.0; cap * k];
    for v in 0..cap {
        for x in 0..k {
            let e = if v < k {
                if v == x {
                    1.0
                } else {
                    0.0
                }
            } else {
                src[x]
            };
            a[v * k + x] = e;
            b[v * k + x] = e;
        }
    }
    Blocks { cap, k, p_v, a, b }
}

fn random_start(problem: &RegionProblem, seed: u64, index: u64) -> Blocks {
    use rand::Rng;
    let k = problem.source.len();
    let cap = problem.v_card_cap;
    let mut rng = seeding::task_rng(seed, "region-restart", index);
    let mut draw_simplex = |n: usize| -> Vec<f64> {
        let mut v: Vec<f64> = (0..n).map(|_| -(rng.random::<f64>().max(1e-12)).ln()).collect();
        let s: f64 = v.iter().sum();
        v.iter_mut().for_each(|x| *x /= s);
        v
    };
    let p_v = draw_simplex(cap);
    let mut a = Vec::with_capacity(cap * k);
    let mut b = Vec::with_capacity(cap * k);
    for _ in 0..cap {
        a.extend(draw_simplex(k));
        b.extend(draw_simplex(k));
    }
    Blocks { cap, k, p_v, a, b }
}

// ---------------------------------------------------------------------------
// min_distortion
// ---------------------------------------------------------------------------

/// Minimal distortion at a rate point, with an exactly feasible witness.
pub fn min_distortion(
    problem: &RegionProblem,
    r: f64,
    r_c: f64,
    r_d: f64,
    opts: &SolverOptions,
) -> Result<RegionSolution> {
    let cons = Constraints::build(problem, r, r_c, r_d, true)?;
    let k = problem.source.len();
    if problem.v_card_cap < k {
        return Err(Error::Domain(format!(
            "v_card_cap = {} below the source alphabet size {k}; the solver's \
             feasibility analysis requires |V| >= |X|",
            problem.v_card_cap
        )));
    }
    let h_x = problem.source.entropy();
    if !cons.feasible(h_x) {
        return Ok(RegionSolution {
            delta_star: f64::INFINITY,
            achieving_joint: None,
            diagnostics: SolverDiagnostics {
                restarts_used: 0,
                objective_trace: vec![],
                agreement: 0,
                converged: true,
                slacks: None,
                feasible: false,
            },
        });
    }

    let structured = |idx: usize| -> Blocks {
        match idx {
            0 => band_witness_start(problem, &cons),
            1 => identity_start(problem),
            2 => deterministic_y_start(problem),
            _ => random_start(problem, opts.seed, idx as u64),
        }
    };

    let run_restart = |idx: usize| -> (f64, Quantities, Blocks) {
        let mut blocks = structured(idx);
        let mut w = opts.penalty_init;
        for _ in 0..opts.outer_rounds {
            descend(&mut blocks, problem, &cons, w, opts.inner_iters);
            w *= opts.penalty_growth;
        }
        repair(&mut blocks, problem, &cons);
        let q = blocks.quantities(problem);
        (q.e_d, q, blocks)
    };

    let mut results: Vec<(f64, Quantities, Blocks)> =
        (0..opts.restarts).into_par_iter().map(run_restart).collect();

    // Repair-only anchors: the structured starts are feasible corners (the
    // band witness by construction), so a feasible candidate always exists
    // and corner values like the forced-independence point are exact.
    for idx in 0..3 {
        let mut blocks = structured(idx);
        repair(&mut blocks, problem, &cons);
        let q = blocks.quantities(problem);
        results.push((q.e_d, q, blocks));
    }

    let feas_ok = |q: &Quantities| -> bool {
        let tol = opts.feas_tol;
        let mut ok = cons.r - q.i_xv >= -tol;
        if let Some(bound) = cons.r_plus_rc {
            ok &= bound - q.i_yv >= -tol;
        }
        if let Some(bound) = cons.r_d {
            ok &= bound - q.h_ygv >= -tol;
        }
        ok && q.marg_x_tvd <= tol && q.marg_y_tvd <= tol
    };

    let mut trace = Vec::with_capacity(results.len());
    let mut best: Option<(f64, f64, usize)> = None; // (objective, i_yv, index)
    for (idx, (obj, q, _)) in results.iter().enumerate() {
        if feas_ok(q) {
            trace.push(*obj);
            let better = match best {
                None => true,
                Some((bo, biy, _)) => {
                    *obj < bo - 1e-9 || ((*obj - bo).abs() <= 1e-9 && q.i_yv < biy - 1e-12)
                }
            };
            if better {
                best = Some((*obj, q.i_yv, idx));
            }
        } else {
            trace.push(f64::NAN);
        }
    }

    let (best_obj, _, best_idx) = best.ok_or_else(|| {
        Error::Numeric("no restart produced a feasible witness at a feasible rate point".into())
    })?;
    let agreement =
        trace.iter().filter(|o| o.is_finite() && (**o - best_obj).abs() <= 1e-3).count();
    let (_, q, blocks) = &results[best_idx];
    let slacks = WitnessSlacks {
        r: cons.r - q.i_xv,
        r_c: cons.r_plus_rc.map(|b| b - q.i_yv).unwrap_or(f64::INFINITY),
        r_d: cons.r_d.map(|b| b - q.h_ygv).unwrap_or(f64::INFINITY),
        marginal_x_tvd: q.marg_x_tvd,
        marginal_y_tvd: q.marg_y_tvd,
    };
    Ok(RegionSolution {
        delta_star: best_obj,
        achieving_joint: Some(blocks.to_markov_joint(problem)?),
        diagnostics: SolverDiagnostics {
            restarts_used: results.len(),
            objective_trace: trace,
            agreement,
            converged: agreement >= 2 || opts.restarts == 1,
            slacks: Some(slacks),
            feasible: true,
        },
    })
}

// ---------------------------------------------------------------------------
// Grid oracle
// ---------------------------------------------------------------------------

fn simplex_grid(dim: usize, steps: usize) -> Vec<Vec<f64>> {
    fn rec(steps: usize, slot: usize, left: usize, point: &mut [usize], out: &mut Vec<Vec<f64>>) {
        let dim = point.len();
        if slot + 1 == dim {
            point[slot] = left;
            out.push(point.iter().map(|&c| c as f64 / steps as f64).collect());
            return;
        }
        for c in 0..=left {
            point[slot] = c;
            rec(steps, slot + 1, left - c, point, out);
        }
    }
    let mut out = Vec::new();
    let mut point = vec![0usize; dim];
    rec(steps, 0, steps, &mut point, &mut out);
    out
}

/// Exhaustive upper-bound oracle over a simplex grid.
///
/// Every grid point whose marginals fall within `2 * resolution` of the
/// source (in TVD) is projected onto the exact marginals; rate constraints
/// are then checked on the projected point, so the returned value is a
/// minimum over exactly feasible joints. Returns `+inf` when no grid point
/// survives (an infeasible rate point).
pub fn grid_oracle(
    problem: &RegionProblem,
    r: f64,
    r_c: f64,
    r_d: f64,
    resolution: f64,
) -> Result<f64> {
    let k = problem.source.len();
    let cap = problem.v_card_cap;
    if k > 3 || cap > 3 || resolution < 0.01 {
        return Err(Error::Budget(format!(
            "grid oracle complexity guard: need |X| <= 3, v_card_cap <= 3, \
             resolution >= 0.01 (got |X| = {k}, cap = {cap}, resolution = {resolution})"
        )));
    }
    let cons = Constraints::build(problem, r, r_c, r_d, false)?;
    let steps = (1.0 / resolution).round() as usize;
    let rows = simplex_grid(k, steps);
    let pv_grid = simplex_grid(cap, steps);
    let combos = rows.len().pow(cap as u32);
    let total = pv_grid.len().saturating_mul(combos);
    if total > 500_000_000 {
        return Err(Error::Budget(format!(
            "grid oracle complexity guard: {total} (p_V, encoder-kernel) combinations"
        )));
    }

    let src = problem.source.probs().to_vec();
    let h_x = problem.source.entropy();
    let tol = 2.0 * resolution;
    let d = &problem.distortion;
    let (band_lo, band_hi) = cons.entropy_band(h_x);
    let row_entropy: Vec<f64> = rows.iter().map(|r| entropy_slice(r)).collect();

    let best = pv_grid
        .par_iter()
        .map(|p_v| {
            let mut best = f64::INFINITY;
            let mut a_combo = vec![0usize; cap];
            let mut a_rows = vec![0.0; cap * k];
            let mut b_rows = vec![0.0; cap * k];
            let mut c = vec![0.0; cap * k]; // c[v*k+y] = sum_x a'_v(x) d(x, y)
            let mut qx = vec![0.0; k];
            let mut qy = vec![0.0; k];
            'a_loop: loop {
                qx.iter_mut().for_each(|q| *q = 0.0);
                for v in 0..cap {
                    let row = &rows[a_combo[v]];
                    for x in 0..k {
                        qx[x] += p_v[v] * row[x];
                    }
                }
                if tvd_slices(&qx, &src) <= tol {
                    for v in 0..cap {
                        a_rows[v * k..(v + 1) * k].copy_from_slice(&rows[a_combo[v]]);
                    }
                    repair_marginal(p_v, &mut a_rows, k, &src);
                    let h_x_given_v: f64 = (0..cap)
                        .map(|v| p_v[v] * entropy_slice(&a_rows[v * k..(v + 1) * k]))
                        .sum();
                    let i_xv = (h_x - h_x_given_v).max(0.0);
                    if i_xv <= cons.r + 1e-9 {
                        for v in 0..cap {
                            for y in 0..k {
                                c[v * k + y] =
                                    (0..k).map(|x| a_rows[v * k + x] * d[x][y]).sum();
                            }
                        }
                        // Inner scan over decoder kernels.
                        let mut b_combo = vec![0usize; cap];
                        'b_loop: loop {
                            qy.iter_mut().for_each(|q| *q = 0.0);
                            for v in 0..cap {
                                let row = &rows[b_combo[v]];
                                for y in 0..k {
                                    qy[y] += p_v[v] * row[y];
                                }
                            }
                            if tvd_slices(&qy, &src) <= tol {
                                // Cheap screen on the raw grid point before
                                // paying for the projection.
                                let h_raw: f64 =
                                    (0..cap).map(|v| p_v[v] * row_entropy[b_combo[v]]).sum();
                                if h_raw >= band_lo - 0.5 && h_raw <= band_hi + 0.5 {
                                    for v in 0..cap {
                                        b_rows[v * k..(v + 1) * k]
                                            .copy_from_slice(&rows[b_combo[v]]);
                                    }
                                    repair_marginal(p_v, &mut b_rows, k, &src);
                                    let h_ygv: f64 = (0..cap)
                                        .map(|v| {
                                            p_v[v] * entropy_slice(&b_rows[v * k..(v + 1) * k])
                                        })
                                        .sum();
                                    if h_ygv >= band_lo - 1e-9 && h_ygv <= band_hi + 1e-9 {
                                        let e_d: f64 = (0..cap)
                                            .map(|v| {
                                                p_v[v]
                                                    * (0..k)
                                                        .map(|y| c[v * k + y] * b_rows[v * k + y])
                                                        .sum::<f64>()
                                            })
                                            .sum();
                                        if e_d < best {
                                            best = e_d;
                                        }
                                    }
                                }
                            }
                            for slot in 0..cap {
                                b_combo[slot] += 1;
                                if b_combo[slot] < rows.len() {
                                    continue 'b_loop;
                                }
                                b_combo[slot] = 0;
                            }
                            break;
                        }
                    }
                }
                for slot in 0..cap {
                    a_combo[slot] += 1;
                    if a_combo[slot] < rows.len() {
                        continue 'a_loop;
                    }
                    a_combo[slot] = 0;
                }
                break;
            }
            best
        })
        .reduce(|| f64::INFINITY, f64::min);
    Ok(best)
}

// ---------------------------------------------------------------------------
// Membership, boundary tracing, converse slack
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Membership {
    Inside,
    Outside,
    Boundary,
}

/// Classify a rate-distortion tuple against the region.
pub fn membership(
    problem: &RegionProblem,
    t: &RateTuple,
    tol: f64,
    opts: &SolverOptions,
) -> Result<Membership> {
    let sol = min_distortion(problem, t.r, t.r_c, t.r_d, opts)?;
    if (sol.delta_star - t.delta).abs() <= tol {
        Ok(Membership::Boundary)
    } else if sol.delta_star <= t.delta {
        Ok(Membership::Inside)
    } else {
        Ok(Membership::Outside)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoundaryRow {
    pub r: f64,
    pub r_c: f64,
    pub r_d: f64,
    pub delta_star: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoundaryTrace {
    pub rows: Vec<BoundaryRow>,
    /// Set when some pair of componentwise-ordered grid points has the
    /// larger-rate point worse beyond tolerance.
    pub monotonicity_violated: bool,
}

/// Evaluate [`min_distortion`] over a list of rate points.
pub fn trace_boundary(
    problem: &RegionProblem,
    grid: &[(f64, f64, f64)],
    opts: &SolverOptions,
) -> Result<BoundaryTrace> {
    let mut rows = Vec::with_capacity(grid.len());
    for &(r, r_c, r_d) in grid {
        let sol = min_distortion(problem, r, r_c, r_d, opts)?;
        rows.push(BoundaryRow { r, r_c, r_d, delta_star: sol.delta_star });
    }
    let mut violated = false;
    for a in &rows {
        for b in &rows {
            // More resources can only reduce distortion.
            if a.r <= b.r && a.r_c <= b.r_c && a.r_d <= b.r_d && b.delta_star > a.delta_star + 1e-6
            {
                violated = true;
            }
        }
    }
    Ok(BoundaryTrace { rows, monotonicity_violated: violated })
}

/// Converse slack `g(eps) = 4 eps (log2 |W| + log2(1 / eps))` for
/// `eps` in `(0, 1/4)`.
pub fn converse_slack(eps: f64, alphabet_size: usize) -> Result<f64> {
    if eps <= 0.0 || eps >= 0.25 {
        return Err(Error::Domain(format!("eps = {eps} outside (0, 1/4)")));
    }
    if alphabet_size < 1 {
        return Err(Error::Domain("alphabet size must be >= 1".into()));
    }
    Ok(4.0 * eps * ((alphabet_size as f64).log2() + (1.0 / eps).log2()))
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------
