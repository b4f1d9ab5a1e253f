//! Gaussian-smoothed counting functions.
//!
//! The convolution side works with counting functions written in the
//! logarithmic variable as sums of pieces
//!
//! ```text
//! N(e^u) = Σ_{u0 ≤ u} coeff · e^{rate·(u − u0)},   rate ∈ {0, 1},
//! ```
//!
//! which covers step functions (rate 0), the reference `N₀(x) = x` and its
//! multiplicative convolutions (rate 1), and piecewise-linear functions.
//! Against the tilted kernel `e^{σv} ĝ_ε(v)` every piece integrates in closed
//! form through the error function.
//!
//! The Fourier side integrates `x^{σ+it} Z(σ+it)/(σ+it) γ_ε(t)` along the
//! line with composite Gauss–Legendre panels, sampling `Z` once per node.

use std::io::Write;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytic::{z_reference, C_of};
use crate::counting::{fmt17, SmoothPart, StepFunction};
use crate::error::{domain, Error, Result};
use crate::lattice::{classify_ratio_series, generate_weighted, log_grid, IntegerMultiset, Trend, BUDGET, MERGE_TOL, SPREAD_TOL};
use crate::primes::{Perturbation, Reference};
use crate::quad::{normal_mass, GaussLegendre, Kahan};

/// Kernel truncation in standard deviations.
pub const KERNEL_SDS: f64 = 8.0;

/// Relative size of the Gaussian factor at which line integrals stop.
pub const FOURIER_FLOOR: f64 = 1e-16;

/// Step of the central differences used in cross-checks.
pub const FD_STEP: f64 = 1e-4;

const PANEL_WIDTH: f64 = 0.25;

fn check_eps(eps: f64) -> Result<()> {
    if !(eps > 0.0 && eps.is_finite()) {
        return domain(format!("eps must be positive, got {eps}"));
    }
    Ok(())
}

/// `γ_ε(t) = exp(−ε² t² / 2)`.
pub fn gamma(eps: f64, t: f64) -> Result<f64> {
    check_eps(eps)?;
    Ok((-0.5 * eps * eps * t * t).exp())
}

/// `ĝ_ε(v) = exp(−v² / 2ε²) / (√(2π) ε)`.
pub fn gauss_kernel(eps: f64, v: f64) -> Result<f64> {
    check_eps(eps)?;
    let z = v / eps;
    Ok((-0.5 * z * z).exp() / ((2.0 * std::f64::consts::PI).sqrt() * eps))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Side {
    Fourier,
    Convolution,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SmoothedCounting {
    pub epsilon: f64,
    pub u_grid: Vec<f64>,
    pub values: Vec<f64>,
    pub side: Side,
    pub tilt_sigma: f64,
}

impl SmoothedCounting {
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "u,value,side,eps,tilt")?;
        let side = match self.side {
            Side::Fourier => "FOURIER",
            Side::Convolution => "CONVOLUTION",
        };
        for (u, v) in self.u_grid.iter().zip(&self.values) {
            writeln!(out, "{},{},{},{},{}", fmt17(*u), fmt17(*v), side, fmt17(self.epsilon), fmt17(self.tilt_sigma))?;
        }
        Ok(())
    }
}

/// A counting function in the logarithmic variable, as a sum of pieces.
#[derive(Clone, Debug, PartialEq)]
pub struct LogCounting {
    u0: Vec<f64>,
    coeff: Vec<f64>,
    rate: Vec<u8>,
    prefix0: Vec<f64>,
    prefix1: Vec<f64>,
    log_horizon: f64,
}

impl LogCounting {
    /// Builds from `(u0, coeff, rate)` pieces with `u0 ≥ 0`.
    pub fn from_pieces(mut pieces: Vec<(f64, f64, u8)>, log_horizon: f64) -> Result<Self> {
        for &(u0, c, r) in &pieces {
            if !(u0 >= 0.0 && u0.is_finite() && c.is_finite()) || r > 1 {
                return domain(format!("invalid piece ({u0}, {c}, {r})"));
            }
        }
        pieces.retain(|p| p.0 <= log_horizon);
        pieces.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.2.cmp(&b.2)));
        let mut k0 = Kahan::new();
        let mut k1 = Kahan::new();
        let mut out = Self {
            u0: Vec::with_capacity(pieces.len()),
            coeff: Vec::with_capacity(pieces.len()),
            rate: Vec::with_capacity(pieces.len()),
            prefix0: Vec::with_capacity(pieces.len()),
            prefix1: Vec::with_capacity(pieces.len()),
            log_horizon,
        };
        for (u0, c, r) in pieces {
            if r == 0 {
                k0.add(c);
            } else {
                k1.add(c * (-u0).exp());
            }
            out.u0.push(u0);
            out.coeff.push(c);
            out.rate.push(r);
            out.prefix0.push(k0.value());
            out.prefix1.push(k1.value());
        }
        Ok(out)
    }

    /// From a step function whose smooth part, if any, is made of ramps.
    pub fn from_step(f: &StepFunction) -> Result<Self> {
        let mut pieces = vec![(0.0, f.base(), 0u8)];
        pieces.extend(f.atoms().map(|(l, w)| (l.ln(), w, 0u8)));
        match f.smooth() {
            None => {}
            Some(SmoothPart::Ramps(r)) => {
                for &(loc, c) in r {
                    pieces.push((loc.ln(), c, 1));
                    pieces.push((loc.ln(), -c, 0));
                }
            }
            Some(SmoothPart::Tau { .. }) => {
                return Err(Error::Unsupported("tau part in the logarithmic representation".into()))
            }
        }
        Self::from_pieces(pieces, f.horizon().ln())
    }

    pub fn from_multiset(n: &IntegerMultiset) -> Result<Self> {
        let pieces = n.logs().iter().enumerate().map(|(i, &l)| (l.max(0.0), n.multiplicity(i), 0u8)).collect();
        Self::from_pieces(pieces, n.horizon().ln())
    }

    /// The counting function associated with a perturbation up to `e^{log_horizon}`:
    /// `N₀ ⋆ M` for τ and naturals `⋆ M` for π, where `M` enumerates products
    /// of the atoms with generalized binomial multiplicities.
    pub fn of_perturbation(a: &Perturbation, log_horizon: f64) -> Result<Self> {
        if !a.is_atomic() {
            return Err(Error::Unsupported("associated counting function of a non-atomic perturbation".into()));
        }
        let gens: Vec<(f64, f64)> = a.measure.atoms().iter().map(|x| (x.log_loc, x.weight)).collect();
        let m = generate_weighted(&gens, log_horizon, MERGE_TOL, BUDGET)?;
        let pieces = match a.reference {
            Reference::Tau => m.logs.iter().zip(&m.coeffs).map(|(&l, &c)| (l, c, 1u8)).collect(),
            Reference::Pi => {
                let mut p = Vec::new();
                for (&l, &c) in m.logs.iter().zip(&m.coeffs) {
                    let top = (log_horizon - l).exp().floor() as u64;
                    for n in 1..=top {
                        let u = l + (n as f64).ln();
                        if u <= log_horizon {
                            p.push((u, c, 0u8));
                        }
                    }
                }
                p
            }
        };
        Self::from_pieces(pieces, log_horizon)
    }

    /// A continuous piecewise-linear function of `x` plus jumps.
    ///
    /// `slopes` lists `(u, slope)` changes (the first at `u = 0`), `jumps`
    /// lists `(u, weight)`, and `M(1) = start`.
    pub fn piecewise_linear(start: f64, slopes: &[(f64, f64)], jumps: &[(f64, f64)], log_horizon: f64) -> Result<Self> {
        let mut pieces = vec![(0.0, start, 0u8)];
        let mut prev = 0.0;
        for &(u, s) in slopes {
            let d = s - prev;
            pieces.push((u, d * u.exp(), 1));
            pieces.push((u, -d * u.exp(), 0));
            prev = s;
        }
        pieces.extend(jumps.iter().map(|&(u, w)| (u, w, 0u8)));
        Self::from_pieces(pieces, log_horizon)
    }

    pub fn log_horizon(&self) -> f64 {
        self.log_horizon
    }

    pub fn len(&self) -> usize {
        self.u0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.u0.is_empty()
    }

    /// Prefix sums over pieces with `u0 ≤ u`.
    fn prefix(&self, u: f64) -> (f64, f64) {
        let k = self.u0.partition_point(|&x| x <= u);
        if k == 0 {
            (0.0, 0.0)
        } else {
            (self.prefix0[k - 1], self.prefix1[k - 1])
        }
    }

    /// `N(e^u)`.
    pub fn value(&self, u: f64) -> f64 {
        let (p0, p1) = self.prefix(u);
        p0 + u.exp() * p1
    }

    /// `N_ε(e^u) = ∫ N(e^{u−v}) e^{σv} ĝ_ε(v) dv` over `|v| ≤ 8ε`.
    pub fn smoothed(&self, eps: f64, u: f64, tilt: f64) -> f64 {
        let l = KERNEL_SDS * eps;
        let e2 = eps * eps;
        // ∫_{−L}^{z} e^{κv} ĝ_ε(v) dv
        let tilted = |kappa: f64, z: f64| {
            let shift = kappa * e2;
            (0.5 * kappa * kappa * e2).exp() * normal_mass((-l - shift) / eps, (z - shift) / eps)
        };
        let (p0, p1) = self.prefix(u - l);
        let mut acc = Kahan::new();
        acc.add(p0 * tilted(tilt, l));
        acc.add(u.exp() * p1 * tilted(tilt - 1.0, l));
        let lo = self.u0.partition_point(|&x| x <= u - l);
        let hi = self.u0.partition_point(|&x| x <= u + l);
        for k in lo..hi {
            let (u0, c, r) = (self.u0[k], self.coeff[k], self.rate[k]);
            let z = (u - u0).min(l);
            let growth = if r == 1 { (u - u0).exp() } else { 1.0 };
            acc.add(c * growth * tilted(tilt - r as f64, z));
        }
        acc.value()
    }
}

/// Tilted Gaussian smoothing of a counting function on a grid of `u = log x`.
pub fn smooth_counting(n: &LogCounting, eps: f64, u_grid: &[f64], tilt: f64) -> Result<SmoothedCounting> {
    check_eps(eps)?;
    let top = u_grid.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let need = top + KERNEL_SDS * eps;
    if need > n.log_horizon + 1e-12 {
        return Err(Error::Horizon { have: n.log_horizon.exp(), need: need.exp() });
    }
    let values = u_grid.par_iter().map(|&u| n.smoothed(eps, u, tilt)).collect();
    Ok(SmoothedCounting { epsilon: eps, u_grid: u_grid.to_vec(), values, side: Side::Convolution, tilt_sigma: tilt })
}

/// Nodes and weights of the composite rule on `[0, t_max]`.
fn line_nodes(t_max: f64, width: f64) -> (Vec<f64>, Vec<f64>) {
    let panels = (t_max / width).ceil().max(1.0) as usize;
    GaussLegendre::g20().composite_nodes(0.0, t_max, panels)
}

/// `(1/π) Σ_j w_j Re[e^{iut_j} F_j]`, the real form of `(1/2π)∫_ℝ e^{iut} F(t) dt`
/// for conjugate-symmetric `F`.
fn real_line_sum(u: f64, ts: &[f64], ws: &[f64], f: &[Complex64]) -> f64 {
    let mut acc = Kahan::new();
    for ((t, w), fv) in ts.iter().zip(ws).zip(f) {
        acc.add(w * (Complex64::from_polar(1.0, u * t) * fv).re);
    }
    acc.value() / std::f64::consts::PI
}

fn panel_width(u_list: &[f64]) -> f64 {
    let umax = u_list.iter().map(|u| u.abs()).fold(0.0, f64::max);
    PANEL_WIDTH.min(3.0 / (1.0 + umax))
}

/// The Fourier-side integral with an arbitrary window in place of `γ_ε`.
pub fn fourier_counting_window(
    a: &Perturbation,
    sigma: f64,
    u_list: &[f64],
    window: &(dyn Fn(f64) -> f64 + Sync),
    t_max: f64,
) -> Result<Vec<f64>> {
    if !(sigma > 1.0) {
        return domain(format!("the Fourier side needs sigma > 1, got {sigma}"));
    }
    let (ts, ws) = line_nodes(t_max, panel_width(u_list));
    let f = ts
        .par_iter()
        .map(|&t| {
            let s = Complex64::new(sigma, t);
            let z = z_reference(a.reference, s)? * C_of(a, s)?;
            Ok(z / s * window(t))
        })
        .collect::<Result<Vec<Complex64>>>()?;
    Ok(u_list
        .par_iter()
        .map(|&u| (sigma * u).exp() * real_line_sum(u, &ts, &ws, &f))
        .collect())
}

/// Gaussian cut-off `t` where `γ_ε(t)·scale` falls to [`FOURIER_FLOOR`].
fn gaussian_cutoff(eps: f64, scale: f64) -> f64 {
    (2.0 * (scale.max(1.0) / FOURIER_FLOOR).ln()).sqrt() / eps
}

/// `N_ε(e^u)` from the line integral `(1/2π)∫ x^{σ+it} Z(σ+it)/(σ+it) γ_ε(t) dt`.
pub fn fourier_counting(a: &Perturbation, sigma: f64, eps: f64, u_list: &[f64]) -> Result<SmoothedCounting> {
    check_eps(eps)?;
    if !(sigma > 1.0) {
        return domain(format!("the Fourier side needs sigma > 1, got {sigma}"));
    }
    let s = Complex64::new(sigma, 0.0);
    let scale = (z_reference(a.reference, s)? * C_of(a, s)?).norm() / sigma;
    let t_max = gaussian_cutoff(eps, scale);
    let values = fourier_counting_window(a, sigma, u_list, &|t| (-0.5 * eps * eps * t * t).exp(), t_max)?;
    Ok(SmoothedCounting { epsilon: eps, u_grid: u_list.to_vec(), values, side: Side::Fourier, tilt_sigma: sigma })
}

/// `it·Z₀(1+it)/(1+it)`, which is 1 for τ and tends to 1 at `t = 0` for π.
fn derivative_factor(reference: Reference, t: f64) -> Result<Complex64> {
    match reference {
        Reference::Tau => Ok(Complex64::new(1.0, 0.0)),
        Reference::Pi => {
            if t == 0.0 {
                return Ok(Complex64::new(1.0, 0.0));
            }
            let s = Complex64::new(1.0, t);
            Ok(Complex64::new(0.0, t) * z_reference(reference, s)? / s)
        }
    }
}

fn derivative_samples(a: &Perturbation, eps: f64, u_list: &[f64]) -> Result<(Vec<f64>, Vec<f64>, Vec<Complex64>)> {
    let t_max = gaussian_cutoff(eps, 1.0);
    let (ts, ws) = line_nodes(t_max, panel_width(u_list));
    let f = ts
        .par_iter()
        .map(|&t| {
            let c = C_of(a, Complex64::new(1.0, t))?;
            Ok(derivative_factor(a.reference, t)? * c * (-0.5 * eps * eps * t * t).exp())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((ts, ws, f))
}

/// `d/du (e^{−u} N_ε(e^u))` from `(1/2π)∫ e^{iut} C(1+it) γ_ε(t) dt`
/// (with the factor `it ζ(1+it)/(1+it)` for the π reference).
pub fn fourier_derivative(a: &Perturbation, eps: f64, u_list: &[f64]) -> Result<Vec<f64>> {
    check_eps(eps)?;
    let (ts, ws, f) = derivative_samples(a, eps, u_list)?;
    Ok(u_list.par_iter().map(|&u| real_line_sum(u, &ts, &ws, &f)).collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MassReport {
    pub mass: f64,
    pub c1: f64,
    pub error: f64,
    pub u_range: [f64; 2],
    pub step: f64,
}

/// `∫ fourier_derivative du` by the trapezoid rule on `[u_lo, u_hi]`, compared with `C(1)`.
pub fn derivative_mass(a: &Perturbation, eps: f64, u_lo: f64, u_hi: f64, step: f64) -> Result<MassReport> {
    check_eps(eps)?;
    if !(u_hi > u_lo && step > 0.0) {
        return domain("need u_lo < u_hi and step > 0");
    }
    let n = ((u_hi - u_lo) / step).ceil() as usize;
    let h = (u_hi - u_lo) / n as f64;
    let us: Vec<f64> = (0..=n).map(|k| u_lo + h * k as f64).collect();
    let d = fourier_derivative(a, eps, &us)?;
    let mut acc = Kahan::new();
    for (k, v) in d.iter().enumerate() {
        acc.add(if k == 0 || k == n { 0.5 * v } else { *v });
    }
    let mass = acc.value() * h;
    let c1 = C_of(a, Complex64::new(1.0, 0.0))?.re;
    Ok(MassReport { mass, c1, error: (mass - c1).abs(), u_range: [u_lo, u_hi], step: h })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityGap {
    pub estimate: f64,
    pub reference_c1: f64,
    pub gap: f64,
}

/// Compares `e^{−u} N_ε(e^u)` (tilt 1, from the associated counting
/// function) with the chain's `C(1)` at `u_probe`.
pub fn density_via_c1(a: &Perturbation, eps: f64, u_probe: f64) -> Result<DensityGap> {
    check_eps(eps)?;
    let need = u_probe + KERNEL_SDS * eps;
    let n = LogCounting::of_perturbation(a, need)?;
    let estimate = n.smoothed(eps, u_probe, 1.0) * (-u_probe).exp();
    let reference_c1 = C_of(a, Complex64::new(1.0, 0.0))?.re;
    Ok(DensityGap { estimate, reference_c1, gap: (estimate - reference_c1).abs() })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    pub u: Vec<f64>,
    pub residuals: Vec<f64>,
    pub damping: f64,
    pub c1: f64,
    /// Relative growth of `∫|integrand|` from `T/2` to `T` (undamped).
    pub abs_growth: f64,
    pub warning: Option<String>,
}

/// Default Gaussian damping of the residual integral.
pub const RESIDUAL_DAMPING: f64 = 0.05;

/// `e^{−u}(N(e^u) − C(1) N₀(e^u)) = (1/2π)∫ e^{iut} (C(1+it) − C(1))/(it) dt`,
/// summed with the Gaussian factor `γ_η(t)`.
///
/// The integral is only conditionally convergent in general, so it is
/// evaluated as the limit of Gaussian means; `η` sets the smoothing scale.
pub fn line_residual(a: &Perturbation, u_list: &[f64], damping: f64) -> Result<ResidualReport> {
    check_eps(damping)?;
    if a.reference != Reference::Tau {
        return Err(Error::Unsupported("the residual formula is stated relative to N₀(x) = x".into()));
    }
    let c1 = C_of(a, Complex64::new(1.0, 0.0))?;
    let t_max = gaussian_cutoff(damping, 1.0);
    let (ts, ws) = line_nodes(t_max, panel_width(u_list));
    let g = ts
        .par_iter()
        .map(|&t| Ok((C_of(a, Complex64::new(1.0, t))? - c1) / Complex64::new(0.0, t)))
        .collect::<Result<Vec<Complex64>>>()?;
    let damped: Vec<Complex64> = ts
        .iter()
        .zip(&g)
        .map(|(&t, v)| v * (-0.5 * damping * damping * t * t).exp())
        .collect();
    let residuals = u_list.par_iter().map(|&u| real_line_sum(u, &ts, &ws, &damped)).collect();

    let mut half = Kahan::new();
    let mut full = Kahan::new();
    for ((t, w), v) in ts.iter().zip(&ws).zip(&g) {
        let x = w * v.norm();
        full.add(x);
        if *t <= 0.5 * t_max {
            half.add(x);
        }
    }
    let abs_growth = if half.value() > 0.0 { full.value() / half.value() - 1.0 } else { 0.0 };
    let warning = (abs_growth > 0.05).then(|| {
        format!(
            "integrand not absolutely integrable within t <= {t_max:.1}: ∫|.| grew by {:.1}% over the second half",
            100.0 * abs_growth
        )
    });
    Ok(ResidualReport { u: u_list.to_vec(), residuals, damping, c1: c1.re, abs_growth, warning })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LemmaEntry {
    pub eps: f64,
    pub trend: Trend,
    pub estimate: f64,
    pub matches: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LemmaReport {
    pub trend: Trend,
    pub estimate: f64,
    pub per_eps: Vec<LemmaEntry>,
    pub threshold: f64,
    /// All entries with `eps ≤ threshold` match the unsmoothed classification.
    pub consistent: bool,
}

/// Classifies `M(x)/x` and `e^{−u} M_ε(e^u)` (tilt 1) on a common grid of
/// `u = log x` up to `log horizon − 8·max ε` and compares the trends.
///
/// For convergent inputs the smoothed estimate must also agree with the
/// unsmoothed one within the spread tolerance.
pub fn lemma_check(m: &LogCounting, eps_list: &[f64], threshold: f64) -> Result<LemmaReport> {
    let emax = eps_list.iter().copied().fold(0.0, f64::max);
    for &e in eps_list {
        check_eps(e)?;
    }
    let top = m.log_horizon - KERNEL_SDS * emax;
    if top <= 0.0 {
        return Err(Error::Horizon { have: m.log_horizon.exp(), need: (KERNEL_SDS * emax).exp() });
    }
    let grid = log_grid(0.0, top);
    let ratio: Vec<f64> = grid.iter().map(|&u| m.value(u) * (-u).exp()).collect();
    let base = classify_ratio_series(&grid, &ratio);
    let mut per_eps = Vec::with_capacity(eps_list.len());
    for &eps in eps_list {
        let sm = smooth_counting(m, eps, &grid, 1.0)?;
        let r: Vec<f64> = sm.values.iter().zip(&grid).map(|(v, u)| v * (-u).exp()).collect();
        let rep = classify_ratio_series(&grid, &r);
        let mut matches = rep.trend == base.trend;
        if matches && base.trend == Trend::Convergent {
            matches = (rep.estimate - base.estimate).abs() <= SPREAD_TOL * base.estimate.abs();
        }
        per_eps.push(LemmaEntry { eps, trend: rep.trend, estimate: rep.estimate, matches });
    }
    let consistent = per_eps.iter().filter(|e| e.eps <= threshold).all(|e| e.matches);
    Ok(LemmaReport { trend: base.trend, estimate: base.estimate, per_eps, threshold, consistent })
}

/// Explicit block constructions used to exercise [`lemma_check`].
pub mod corpus {
    use super::LogCounting;
    use crate::error::Result;

    /// Horizon `log` of the corpus functions.
    pub const LOG_HORIZON: f64 = 24.0;

    fn dyadic_blocks(slopes: (f64, f64)) -> Vec<(f64, f64)> {
        let mut out = vec![(0.0, 1.0)];
        let mut k = 0u32;
        loop {
            let u = 2f64.powi(k as i32);
            if u >= LOG_HORIZON {
                break;
            }
            out.push((u, if k % 2 == 0 { slopes.0 } else { slopes.1 }));
            k += 1;
        }
        out
    }

    /// Functions with a density: `x`, `x/2`, `x + ⌊log x⌋`, `x ⋆ Σ_k δ_{e^k}`
    /// and slope `1 + 2^{−k}` on `[e^k, e^{k+1})`.
    pub fn convergent() -> Result<Vec<(&'static str, LogCounting)>> {
        let h = LOG_HORIZON;
        let n = h as usize;
        Ok(vec![
            ("identity", LogCounting::piecewise_linear(1.0, &[(0.0, 1.0)], &[], h)?),
            ("half", LogCounting::piecewise_linear(0.5, &[(0.0, 0.5)], &[], h)?),
            (
                "identity_plus_log",
                LogCounting::piecewise_linear(1.0, &[(0.0, 1.0)], &(1..=n).map(|k| (k as f64, 1.0)).collect::<Vec<_>>(), h)?,
            ),
            (
                "lattice_convolution",
                LogCounting::from_pieces((0..=n).map(|k| (k as f64, 1.0, 1u8)).collect(), h)?,
            ),
            (
                "decaying_excess_slope",
                LogCounting::piecewise_linear(
                    1.0,
                    &(0..n).map(|k| (k as f64, 1.0 + 0.5f64.powi(k as i32))).collect::<Vec<_>>(),
                    &[],
                    h,
                )?,
            ),
        ])
    }

    /// Functions without a density: slopes alternating on `[e^{2^k}, e^{2^{k+1}})`,
    /// slopes 1/4 and 2 alternating on `[e^{3k}, e^{3k+3})`, and slope 1/2 with
    /// jumps of `x_k/2` at `x_k = e^{4k+3}`.
    pub fn oscillating() -> Result<Vec<(&'static str, LogCounting)>> {
        let h = LOG_HORIZON;
        let jumps: Vec<(f64, f64)> = (0..)
            .map(|k| (4 * k + 3) as f64)
            .take_while(|&u| u < h)
            .map(|u| (u, 0.5 * u.exp()))
            .collect();
        let periodic: Vec<(f64, f64)> = (0..)
            .map(|k| (3 * k) as f64)
            .take_while(|&u| u < h)
            .map(|u| (u, if (u as u32 / 3) % 2 == 0 { 0.25 } else { 2.0 }))
            .collect();
        Ok(vec![
            ("dyadic_blocks", LogCounting::piecewise_linear(1.0, &dyadic_blocks((0.5, 1.5)), &[], h)?),
            ("periodic_slopes", LogCounting::piecewise_linear(1.0, &periodic, &[], h)?),
            ("half_slope_periodic_jumps", LogCounting::piecewise_linear(0.5, &[(0.0, 0.5)], &jumps, h)?),
        ])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::normal_cdf;
    use std::f64::consts::E;

    fn reference_n0() -> LogCounting {
        LogCounting::from_pieces(vec![(0.0, 1.0, 1)], 40.0).unwrap()
    }

    #[test]
    fn gamma_and_kernel_values() {
        assert_eq!(gamma(0.3, 0.0).unwrap(), 1.0);
        assert!((gamma(1.0, 1.0).unwrap() - 0.6065306597126334).abs() < 1e-15);
        assert!(gamma(0.0, 1.0).is_err());
        assert!(gauss_kernel(-1.0, 0.0).is_err());
        let mass: f64 = crate::quad::adaptive_simpson(|v| gauss_kernel(0.1, v).unwrap(), -2.0, 2.0, 1e-14).unwrap();
        assert!((mass - 1.0).abs() < 1e-12);
    }

    #[test]
    fn reference_smoothing_is_normal_cdf() {
        let n = reference_n0();
        let eps = 0.1;
        for &u in &[0.0, 0.1, 0.3, 0.5, 2.0] {
            let v = n.smoothed(eps, u, 1.0) * (-u).exp();
            let expect = normal_cdf(u / eps).min(normal_mass(-8.0, 8.0));
            assert!((v - expect).abs() < 1e-14, "u={u}: {v} vs {expect}");
        }
        assert!((n.smoothed(eps, 5.0 * eps, 1.0) * (-5.0 * eps).exp() - 1.0).abs() < 3e-7);
    }

    #[test]
    fn smoothing_approaches_step_away_from_jumps() {
        let f = StepFunction::from_unit_atoms(vec![2.0, 3.0, 5.0, 7.0], 100.0).unwrap();
        let n = LogCounting::from_step(&f).unwrap();
        let u = 4f64.ln();
        let target = n.value(u);
        let mut prev = f64::INFINITY;
        for eps in [0.1, 0.05, 0.025] {
            let err = (n.smoothed(eps, u, 1.0) - target).abs();
            assert!(err <= prev);
            prev = err;
        }
        assert!(prev < 1e-3);
    }

    #[test]
    fn horizon_checked() {
        let n = reference_n0();
        assert!(matches!(smooth_counting(&n, 0.5, &[39.0], 1.0), Err(Error::Horizon { .. })));
    }

    #[test]
    fn smoothing_is_monotone_for_nonnegative_tilt() {
        let f = StepFunction::from_unit_atoms(vec![2.0, 3.0, 5.0, 7.0, 11.0], 1e4).unwrap();
        let n = LogCounting::from_step(&f).unwrap();
        let grid: Vec<f64> = (0..600).map(|k| k as f64 * 0.005).collect();
        for tilt in [0.0, 1.0, 1.5] {
            let s = smooth_counting(&n, 0.1, &grid, tilt).unwrap();
            assert!(s.values.windows(2).all(|w| w[1] >= w[0] - 1e-15));
            assert!(s.values.iter().all(|v| *v >= 0.0));
        }
    }

    #[test]
    fn fourier_reference_at_origin_closed_form() {
        // a = 0, σ = 1.5, u = 0: ∫_{−L}^{0} e^{0.5v} ĝ(v) dv
        let a = Perturbation::zero(Reference::Tau);
        let eps = 0.1;
        let v = fourier_counting(&a, 1.5, eps, &[0.0]).unwrap().values[0];
        let k = 0.5;
        let closed = (0.5 * k * k * eps * eps).exp() * normal_mass(-8.0 - k * eps, -k * eps);
        assert!((v - closed).abs() < 1e-9, "{v} vs {closed}");
        assert!(fourier_counting(&a, 1.0, eps, &[0.0]).is_err());
    }

    #[test]
    fn fourier_linear_in_window() {
        let a = Perturbation::atomic(vec![(E, 1.0)]).unwrap();
        let w1 = |t: f64| (-0.5 * 0.01 * t * t).exp();
        let w2 = |t: f64| 2.0 * (-0.5 * 0.01 * t * t).exp();
        let u = [1.0, 3.0];
        let v1 = fourier_counting_window(&a, 1.5, &u, &w1, 90.0).unwrap();
        let v2 = fourier_counting_window(&a, 1.5, &u, &w2, 90.0).unwrap();
        for (x, y) in v1.iter().zip(&v2) {
            assert!((2.0 * x - y).abs() < 1e-12 * y.abs());
        }
    }

    #[test]
    fn derivative_of_reference_is_gaussian() {
        let a = Perturbation::zero(Reference::Tau);
        let eps = 0.1;
        let us = [-0.2, 0.0, 0.05, 0.3];
        let d = fourier_derivative(&a, eps, &us).unwrap();
        for (u, v) in us.iter().zip(&d) {
            assert!((v - gauss_kernel(eps, *u).unwrap()).abs() < 1e-10);
        }
    }

    #[test]
    fn residual_vanishes_for_reference() {
        let a = Perturbation::zero(Reference::Tau);
        let r = line_residual(&a, &[5.0, 10.0], 0.1).unwrap();
        assert!(r.residuals.iter().all(|v| v.abs() < 1e-15));
        assert!(r.warning.is_none());
    }

    #[test]
    fn associated_counting_of_single_atom() {
        // N = N₀ ⋆ Σ δ_{e^k}: e^{−u} N(e^u) = Σ_{k ≤ u} e^{−k}
        let a = Perturbation::atomic(vec![(E, 1.0)]).unwrap();
        let n = LogCounting::of_perturbation(&a, 10.0).unwrap();
        let u = 7.5;
        let expect: f64 = (0..=7).map(|k| (-(k as f64)).exp()).sum();
        assert!((n.value(u) * (-u).exp() - expect).abs() < 1e-13);
    }

    #[test]
    fn corpus_trends() {
        for (name, m) in corpus::convergent().unwrap() {
            let r = lemma_check(&m, &[0.05, 0.2], 0.2).unwrap();
            assert_eq!(r.trend, Trend::Convergent, "{name}");
            assert!(r.consistent, "{name}: {r:?}");
        }
        for (name, m) in corpus::oscillating().unwrap() {
            let r = lemma_check(&m, &[0.05, 0.2], 0.2).unwrap();
            assert_eq!(r.trend, Trend::Oscillating, "{name}");
            assert!(r.consistent, "{name}: {r:?}");
        }
    }
}
