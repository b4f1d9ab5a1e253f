//! Generalized integers: enumeration, counting and density estimation.
//!
//! Products of generators are enumerated in increasing order with a binary
//! heap over exponent vectors, working with sums of logarithms. Each vector
//! is reached exactly once through three moves on its last generator `i`
//! with exponent `e`:
//!
//! - raise `e` by one;
//! - freeze `i^e` into the prefix and start generator `i+1` at exponent 1;
//! - when `e = 1`, replace `i` by `i+1`.
//!
//! Generators are sorted, so every move is nondecreasing in log.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::io::Write;

use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::counting::{fmt17, StepFunction};
use crate::error::{domain, Error, Result};
use crate::primes::GenPrimeSystem;
use crate::quad::ls_slope;

/// Values whose logs differ by less than this are merged.
pub const MERGE_TOL: f64 = 1e-9;

/// Log gap below which two products of jittered generators are treated as
/// a genuine multiplicative relation. Sits well above rounding in summed
/// logs and well below the spacing produced by relative jitter.
pub const COINCIDENCE_TOL: f64 = 1e-12;

/// Maximum number of enumerated exponent vectors.
pub const BUDGET: usize = 200_000_000;

/// Relative spread below which a ratio series counts as converged.
pub const SPREAD_TOL: f64 = 0.02;

/// Log-log slope threshold separating divergence and vanishing from noise.
pub const SLOPE_TOL: f64 = 0.02;

/// Grid points per decade in density estimates.
pub const POINTS_PER_DECADE: usize = 50;

#[derive(Clone, Copy, Debug)]
struct Node {
    log: f64,
    prefix_log: f64,
    gen: usize,
    exp: u32,
    prefix_coeff: f64,
    binom: f64,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Node {}
impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Node {
    // min-heap on log; ties broken by generator index for determinism
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .log
            .total_cmp(&self.log)
            .then_with(|| other.gen.cmp(&self.gen))
            .then_with(|| other.exp.cmp(&self.exp))
    }
}

/// Visits `(log value, coefficient)` of every product with `log ≤ log_x`,
/// in nondecreasing order of log, starting with the empty product `(0, 1)`.
///
/// `gens` holds `(log, weight)` sorted by log with positive logs. A generator
/// of weight `w` contributes the factor `binom(w + e − 1, e)` at exponent `e`.
pub(crate) fn enumerate_raw(
    gens: &[(f64, f64)],
    log_x: f64,
    budget: usize,
    mut visit: impl FnMut(f64, f64),
) -> Result<()> {
    visit(0.0, 1.0);
    if gens.is_empty() || gens[0].0 > log_x {
        return Ok(());
    }
    let mut heap = BinaryHeap::new();
    heap.push(Node {
        log: gens[0].0,
        prefix_log: 0.0,
        gen: 0,
        exp: 1,
        prefix_coeff: 1.0,
        binom: gens[0].1,
    });
    let mut popped = 0usize;
    while let Some(n) = heap.pop() {
        popped += 1;
        if popped > budget {
            return Err(Error::Capacity {
                what: format!("enumeration budget of {budget} products"),
                reached: n.log.exp(),
            });
        }
        visit(n.log, n.prefix_coeff * n.binom);
        let (g, w) = gens[n.gen];
        let up = n.log + g;
        if up <= log_x {
            let e = n.exp as f64;
            heap.push(Node { log: up, exp: n.exp + 1, binom: n.binom * (w + e) / (e + 1.0), ..n });
        }
        if let Some(&(g1, w1)) = gens.get(n.gen + 1) {
            let extend = n.log + g1;
            if extend <= log_x {
                heap.push(Node {
                    log: extend,
                    prefix_log: n.log,
                    gen: n.gen + 1,
                    exp: 1,
                    prefix_coeff: n.prefix_coeff * n.binom,
                    binom: w1,
                });
            }
            if n.exp == 1 {
                let sib = n.prefix_log + g1;
                if sib <= log_x {
                    heap.push(Node { log: sib, gen: n.gen + 1, binom: w1, ..n });
                }
            }
        }
    }
    Ok(())
}

fn sorted_log_generators(atoms: impl Iterator<Item = (f64, f64)>) -> Result<Vec<(f64, f64)>> {
    let mut gens = Vec::new();
    for (loc, w) in atoms {
        if !(loc > 1.0) {
            return domain(format!("generator {loc} must exceed 1"));
        }
        gens.push((loc.ln(), w));
    }
    gens.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(gens)
}

/// Products enumerated with merging: logs and (signed, real) coefficients.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightedMultiset {
    pub logs: Vec<f64>,
    pub coeffs: Vec<f64>,
    pub log_horizon: f64,
}

/// Enumerates products of `(log, weight)` generators up to `log_x`, merging
/// entries closer than `merge_tol` in log.
pub fn generate_weighted(
    gens_log: &[(f64, f64)],
    log_x: f64,
    merge_tol: f64,
    budget: usize,
) -> Result<WeightedMultiset> {
    let mut gens = gens_log.to_vec();
    if gens.iter().any(|g| !(g.0 > 0.0)) {
        return domain("generator logs must be positive");
    }
    gens.sort_by(|a, b| a.0.total_cmp(&b.0));
    let snap = log_x + 0.5 * merge_tol;
    let mut logs: Vec<f64> = Vec::new();
    let mut coeffs: Vec<f64> = Vec::new();
    enumerate_raw(&gens, snap, budget, |lg, c| match logs.last() {
        Some(&last) if lg - last < merge_tol => *coeffs.last_mut().unwrap() += c,
        _ => {
            logs.push(lg);
            coeffs.push(c);
        }
    })?;
    Ok(WeightedMultiset { logs, coeffs, log_horizon: log_x })
}

/// The multiset of generalized integers `≤ X`, with multiplicities.
#[derive(Clone, Debug, PartialEq)]
pub struct IntegerMultiset {
    logs: Vec<f64>,
    mult: Vec<f64>,
    cum: Vec<f64>,
    horizon: f64,
}

impl IntegerMultiset {
    fn from_weighted(w: WeightedMultiset, horizon: f64) -> Self {
        let mut acc = 0.0;
        let cum = w
            .coeffs
            .iter()
            .map(|c| {
                acc += c;
                acc
            })
            .collect();
        Self { logs: w.logs, mult: w.coeffs, cum, horizon }
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn len(&self) -> usize {
        self.logs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.logs.is_empty()
    }

    pub fn logs(&self) -> &[f64] {
        &self.logs
    }

    pub fn value(&self, i: usize) -> f64 {
        self.logs[i].exp()
    }

    pub fn multiplicity(&self, i: usize) -> f64 {
        self.mult[i]
    }

    pub fn entries(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.logs.iter().zip(&self.mult).map(|(l, m)| (l.exp(), *m))
    }

    /// N(e^u) without the horizon check.
    pub fn count_log(&self, u: f64) -> f64 {
        let k = self.logs.partition_point(|&l| l <= u + 0.5 * MERGE_TOL);
        if k == 0 {
            0.0
        } else {
            self.cum[k - 1]
        }
    }

    /// The induced counting function as a step function with base N(1) = 1.
    pub fn to_step_function(&self) -> StepFunction {
        let locs = self.logs[1..].iter().map(|l| l.exp()).collect();
        let cum = self.cum[1..].iter().map(|c| c - self.cum[0]).collect();
        StepFunction::from_parts_unchecked(self.cum[0], locs, cum, self.horizon)
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "value,multiplicity")?;
        for (v, m) in self.entries() {
            writeln!(out, "{},{}", fmt17(v), m)?;
        }
        Ok(())
    }
}

/// Enumerates the generalized integers of an atomic system up to `X`.
pub fn generate(p: &GenPrimeSystem, x: f64) -> Result<IntegerMultiset> {
    generate_with(p, x, MERGE_TOL, BUDGET)
}

pub fn generate_with(p: &GenPrimeSystem, x: f64, merge_tol: f64, budget: usize) -> Result<IntegerMultiset> {
    if !p.is_atomic() {
        return Err(Error::Unsupported(
            "enumeration of a system with a continuous prime part".into(),
        ));
    }
    if !(x >= 1.0) {
        return domain(format!("horizon X = {x} must be >= 1"));
    }
    let gens = sorted_log_generators(p.counting.atoms())?;
    let w = generate_weighted(&gens, x.ln(), merge_tol, budget)?;
    Ok(IntegerMultiset::from_weighted(w, x))
}

/// `N(x)`: total multiplicity of values `≤ x`.
pub fn count(n: &IntegerMultiset, x: f64) -> Result<f64> {
    if !(x >= 1.0) {
        return domain(format!("count needs x >= 1, got {x}"));
    }
    if x > n.horizon * (1.0 + 0.5 * MERGE_TOL) {
        return domain(format!("x = {x} beyond horizon {}", n.horizon));
    }
    Ok(n.count_log(x.ln()))
}

/// Returns a value near which two distinct exponent vectors of unit-weight
/// generators give products within `tol` in log, if any, up to `x`.
pub fn find_coincidence(gens: &[f64], x: f64, tol: f64) -> Result<Option<f64>> {
    let g = sorted_log_generators(gens.iter().map(|&l| (l, 1.0)))?;
    let mut prev = f64::NEG_INFINITY;
    let mut hit = None;
    enumerate_raw(&g, x.ln(), BUDGET, |lg, _| {
        if hit.is_none() && lg - prev < tol {
            hit = Some(lg.exp());
        }
        prev = lg;
    })?;
    Ok(hit)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Trend {
    Convergent,
    Divergent,
    Vanishing,
    Oscillating,
    Undecided,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct DensityReport {
    pub estimate: f64,
    pub window: [f64; 2],
    pub trend: Trend,
    /// Per-decade means of the ratio, keyed by the decade's lower end.
    pub residuals: Vec<[f64; 2]>,
    pub diagnostics: Map<String, Value>,
}

/// Classifies a ratio series `r(x)` sampled at increasing `log x`.
///
/// Decades have width `ln 10` in `log x`. The estimate is the mean over
/// the last decade. The series is CONVERGENT when its relative spread over
/// the last two decades is below [`SPREAD_TOL`]; otherwise OSCILLATING if
/// decade means (after the first) both rise and fall by more than
/// `SPREAD_TOL` relative; otherwise the log-log slope over the last two
/// decades decides DIVERGENT, VANISHING or UNDECIDED.
pub fn classify_ratio_series(log_x: &[f64], ratio: &[f64]) -> DensityReport {
    let ln10 = std::f64::consts::LN_10;
    let mut diagnostics = Map::new();
    let n = log_x.len();
    if n < 2 || ratio.len() != n {
        return DensityReport {
            estimate: 0.0,
            window: [1.0, 1.0],
            trend: Trend::Undecided,
            residuals: vec![],
            diagnostics,
        };
    }
    let (lo, hi) = (log_x[0], log_x[n - 1]);
    let decades = ((hi - lo) / ln10 + 1e-9).floor() as usize;
    let mut residuals = Vec::new();
    for d in 0..decades.max(1) {
        let a = lo + d as f64 * ln10;
        let b = if d + 1 == decades.max(1) { hi } else { a + ln10 };
        let vals: Vec<f64> = log_x
            .iter()
            .zip(ratio)
            .filter(|(l, _)| **l >= a && **l <= b)
            .map(|(_, r)| *r)
            .collect();
        if !vals.is_empty() {
            residuals.push([a.exp(), vals.iter().sum::<f64>() / vals.len() as f64]);
        }
    }
    let last: Vec<f64> = log_x
        .iter()
        .zip(ratio)
        .filter(|(l, _)| **l >= hi - ln10)
        .map(|(_, r)| *r)
        .collect();
    let estimate = last.iter().sum::<f64>() / last.len() as f64;
    let window = [(hi - ln10).max(lo).exp(), hi.exp()];
    diagnostics.insert("decades".into(), json!((hi - lo) / ln10));
    if decades < 3 {
        diagnostics.insert("reason".into(), json!("fewer than 3 decades"));
        return DensityReport { estimate, window, trend: Trend::Undecided, residuals, diagnostics };
    }
    let tail: Vec<(f64, f64)> = log_x
        .iter()
        .zip(ratio)
        .filter(|(l, _)| **l >= hi - 2.0 * ln10)
        .map(|(l, r)| (*l, *r))
        .collect();
    let tmax = tail.iter().map(|t| t.1).fold(f64::NEG_INFINITY, f64::max);
    let tmin = tail.iter().map(|t| t.1).fold(f64::INFINITY, f64::min);
    let tmean = tail.iter().map(|t| t.1).sum::<f64>() / tail.len() as f64;
    let spread = if tmean > 0.0 { (tmax - tmin) / tmean } else { f64::INFINITY };
    diagnostics.insert("spread".into(), json!(spread));
    let means: Vec<f64> = residuals.iter().skip(1).map(|r| r[1]).collect();
    let scale = means.iter().map(|m| m.abs()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let rise = means.windows(2).any(|w| w[1] - w[0] > SPREAD_TOL * scale);
    let fall = means.windows(2).any(|w| w[0] - w[1] > SPREAD_TOL * scale);
    let positive: Vec<(f64, f64)> = tail.iter().filter(|t| t.1 > 0.0).copied().collect();
    let slope = ls_slope(
        &positive.iter().map(|t| t.0).collect::<Vec<_>>(),
        &positive.iter().map(|t| t.1.ln()).collect::<Vec<_>>(),
    );
    diagnostics.insert("slope".into(), json!(slope));
    diagnostics.insert("liminf_estimate".into(), json!(means.iter().copied().fold(f64::INFINITY, f64::min)));
    diagnostics.insert("limsup_estimate".into(), json!(means.iter().copied().fold(f64::NEG_INFINITY, f64::max)));
    let trend = if spread < SPREAD_TOL {
        Trend::Convergent
    } else if rise && fall {
        Trend::Oscillating
    } else {
        match slope {
            Some(s) if s > SLOPE_TOL => Trend::Divergent,
            Some(s) if s < -SLOPE_TOL => Trend::Vanishing,
            None if positive.is_empty() => Trend::Vanishing,
            _ => Trend::Undecided,
        }
    };
    DensityReport { estimate, window, trend, residuals, diagnostics }
}

/// Geometric grid of `log x` from `lo` to `hi`, `POINTS_PER_DECADE` per decade.
pub fn log_grid(lo: f64, hi: f64) -> Vec<f64> {
    let step = std::f64::consts::LN_10 / POINTS_PER_DECADE as f64;
    let n = ((hi - lo) / step).floor() as usize;
    let mut g: Vec<f64> = (0..=n).map(|k| lo + k as f64 * step).collect();
    if g.last().is_some_and(|&l| hi - l > 1e-12) {
        g.push(hi);
    }
    g
}

/// Empirical density of an enumerated multiset from `N(x)/x` on `[1, X]`.
pub fn density_estimate(n: &IntegerMultiset) -> DensityReport {
    let grid = log_grid(0.0, n.horizon.ln());
    let ratio: Vec<f64> = grid.iter().map(|&u| n.count_log(u) * (-u).exp()).collect();
    classify_ratio_series(&grid, &ratio)
}

/// `∏_removed (1 − 1/p) · ∏_added (1 − 1/p)^{-1}`.
pub fn euler_density(removed: &[f64], added: &[f64]) -> Result<f64> {
    let mut d = 1.0;
    for &p in removed {
        if !(p > 1.0) {
            return domain(format!("entry {p} must exceed 1"));
        }
        d *= 1.0 - 1.0 / p;
    }
    for &p in added {
        if !(p > 1.0) {
            return domain(format!("entry {p} must exceed 1"));
        }
        d /= 1.0 - 1.0 / p;
    }
    Ok(d)
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq)]
pub struct PartialProduct {
    pub y: f64,
    pub value: f64,
    /// `Σ_{p⁺ ≤ Y} 1/p⁺ − Σ_{p ≤ Y} 1/p`, with multiplicity.
    pub reciprocal_sum: f64,
}

/// `∏_{p⁺ ≤ Y} (1 − 1/p⁺)^{-1} ∏_{p ≤ Y} (1 − 1/p)` along `y_grid`.
pub fn partial_density_product(
    pplus: &GenPrimeSystem,
    p1: &GenPrimeSystem,
    y_grid: &[f64],
) -> Result<Vec<PartialProduct>> {
    if !pplus.is_atomic() || !p1.is_atomic() {
        return Err(Error::Unsupported("partial products of non-atomic systems".into()));
    }
    let ymax = y_grid.iter().copied().fold(1.0, f64::max);
    for s in [pplus, p1] {
        if ymax > s.truncation {
            return Err(Error::Horizon { have: s.truncation, need: ymax });
        }
    }
    let mut order: Vec<usize> = (0..y_grid.len()).collect();
    order.sort_by(|&a, &b| y_grid[a].total_cmp(&y_grid[b]));
    let mut out = vec![PartialProduct { y: 0.0, value: 0.0, reciprocal_sum: 0.0 }; y_grid.len()];
    let plus: Vec<(f64, f64)> = pplus.counting.atoms().collect();
    let base: Vec<(f64, f64)> = p1.counting.atoms().collect();
    let (mut i, mut j) = (0, 0);
    let mut log_value = crate::quad::Kahan::new();
    let mut recip = crate::quad::Kahan::new();
    for k in order {
        let y = y_grid[k];
        while i < plus.len() && plus[i].0 <= y {
            let (p, w) = plus[i];
            log_value.add(-w * (-1.0 / p).ln_1p());
            recip.add(w / p);
            i += 1;
        }
        while j < base.len() && base[j].0 <= y {
            let (p, w) = base[j];
            log_value.add(w * (-1.0 / p).ln_1p());
            recip.add(-w / p);
            j += 1;
        }
        out[k] = PartialProduct { y, value: log_value.value().exp(), reciprocal_sum: recip.value() };
    }
    Ok(out)
}
