//! Samples on vertical lines, Hölder moduli and the `C`-modulus bound.

use std::io::Write;

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::chain::{atomic_a, A_of, B_of, C_of, Z_of, TOL_B};
use crate::counting::fmt17;
use crate::error::{domain, Error, Result};
use crate::primes::Perturbation;
use crate::quad::{ls_slope, KahanComplex};
use crate::rng::{stream, Stream};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Which {
    A,
    B,
    C,
    Z,
}

/// Values on the grid `t_k = (k − K)·dt`, `k = 0..=2K`.
#[derive(Clone, Debug, PartialEq)]
pub struct LineSamples {
    pub sigma: f64,
    pub dt: f64,
    pub half: usize,
    pub values: Vec<Complex64>,
    pub which: Which,
}

impl LineSamples {
    pub fn t(&self, k: usize) -> f64 {
        (k as f64 - self.half as f64) * self.dt
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Largest `|v(t) − conj v(−t)|` over the grid.
    pub fn conjugate_asymmetry(&self) -> f64 {
        let n = self.values.len();
        (0..n)
            .map(|k| (self.values[k] - self.values[n - 1 - k].conj()).norm())
            .fold(0.0, f64::max)
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "t,re,im")?;
        for (k, v) in self.values.iter().enumerate() {
            writeln!(out, "{},{},{}", fmt17(self.t(k)), fmt17(v.re), fmt17(v.im))?;
        }
        Ok(())
    }
}

const ANCHOR_EVERY: usize = 256;

/// Atomic `A(σ + it)` on the grid by per-atom phasor recurrences, re-anchored
/// by a direct exponential every `ANCHOR_EVERY` points.
fn sample_atomic_a(a: &Perturbation, sigma: f64, dt: f64, half: usize) -> Vec<Complex64> {
    let atoms = a.measure.atoms();
    let amp: Vec<f64> = atoms
        .iter()
        .map(|x| x.weight.signum() * (x.weight.abs().ln() - sigma * x.log_loc).exp())
        .collect();
    let step: Vec<Complex64> = atoms
        .iter()
        .map(|x| Complex64::from_polar(1.0, -dt * x.log_loc))
        .collect();
    let n = 2 * half + 1;
    let chunks: Vec<Vec<Complex64>> = (0..n.div_ceil(ANCHOR_EVERY))
        .into_par_iter()
        .map(|c| {
            let start = c * ANCHOR_EVERY;
            let end = (start + ANCHOR_EVERY).min(n);
            let t0 = (start as f64 - half as f64) * dt;
            let mut phase: Vec<Complex64> = atoms
                .iter()
                .map(|x| Complex64::from_polar(1.0, -t0 * x.log_loc))
                .collect();
            let mut out = Vec::with_capacity(end - start);
            for _ in start..end {
                let mut acc = KahanComplex::new();
                for (p, w) in phase.iter().zip(&amp) {
                    acc.add(p * *w);
                }
                out.push(acc.value());
                for (p, s) in phase.iter_mut().zip(&step) {
                    *p *= s;
                }
            }
            out
        })
        .collect();
    chunks.into_iter().flatten().collect()
}

/// Samples `A`, `B`, `C` or `Z` on `σ + it`, `t ∈ [−T, T]` with step `dt`.
pub fn sample_line(a: &Perturbation, which: Which, sigma: f64, t_max: f64, dt: f64) -> Result<LineSamples> {
    if !(sigma >= 1.0) {
        return domain(format!("sigma = {sigma} < 1"));
    }
    if !(dt > 0.0 && t_max >= 0.0) {
        return domain("need dt > 0 and T >= 0");
    }
    let half = (t_max / dt + 1e-9).floor() as usize;
    let values = if which == Which::A && a.is_atomic() {
        sample_atomic_a(a, sigma, dt, half)
    } else {
        let pts: Vec<f64> = (0..=2 * half).map(|k| (k as f64 - half as f64) * dt).collect();
        pts.par_iter()
            .map(|&t| {
                let s = Complex64::new(sigma, t);
                match which {
                    Which::A => A_of(a, s).map(|v| v.value),
                    Which::B => B_of(a, s, TOL_B),
                    Which::C => C_of(a, s),
                    Which::Z => Z_of(a, s),
                }
            })
            .collect::<Result<Vec<_>>>()?
    };
    Ok(LineSamples { sigma, dt, half, values, which })
}

/// Direct atomic `A(σ + it)` at one point; exposed for cross-checks.
pub fn a_direct(a: &Perturbation, sigma: f64, t: f64) -> Complex64 {
    atomic_a(a, Complex64::new(sigma, t))
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct ModulusEstimate {
    /// Decreasing gaps.
    pub deltas: Vec<f64>,
    pub omega: Vec<f64>,
    pub beta_hat: Option<f64>,
    pub omega_integral_partial: f64,
    pub dt: f64,
}

impl ModulusEstimate {
    /// ω at the smallest listed gap `≥ gap`, if `gap` lies within the listed range.
    pub fn omega_at(&self, gap: f64) -> Option<f64> {
        let mut best: Option<(f64, f64)> = None;
        for (&d, &w) in self.deltas.iter().zip(&self.omega) {
            if d >= gap * (1.0 - 1e-12) && best.map_or(true, |b| d < b.0) {
                best = Some((d, w));
            }
        }
        best.map(|b| b.1)
    }

    pub fn delta_min(&self) -> f64 {
        self.deltas.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn delta_max(&self) -> f64 {
        self.deltas.iter().copied().fold(0.0, f64::max)
    }
}

/// Lags at which the oscillation is measured: every lag up to 64, a
/// geometric ladder of ratio 1.01 beyond, and each `k_δ` exactly.
fn lag_set(k_deltas: &[usize]) -> Vec<usize> {
    let top = k_deltas.iter().copied().max().unwrap_or(0);
    let mut lags: Vec<usize> = (1..=top.min(64)).collect();
    let mut x = 64.0f64;
    while (x as usize) < top {
        x *= 1.01;
        lags.push((x.floor() as usize).min(top));
    }
    lags.extend_from_slice(k_deltas);
    lags.retain(|&k| k >= 1);
    lags.sort_unstable();
    lags.dedup();
    lags
}

/// `ω(δ) = max |L(t) − L(t′)|` over grid pairs with `|t − t′| ≤ δ`.
pub fn holder_modulus(l: &LineSamples, deltas: &[f64]) -> Result<ModulusEstimate> {
    if deltas.is_empty() || deltas.iter().any(|&d| !(d > 0.0)) {
        return domain("deltas must be positive and nonempty");
    }
    let mut ds = deltas.to_vec();
    ds.sort_by(|a, b| b.total_cmp(a));
    ds.dedup();
    let dmin = *ds.last().unwrap();
    if l.dt > dmin / 4.0 {
        return Err(Error::Resolution(format!(
            "grid step {} exceeds min(delta)/4 = {}",
            l.dt,
            dmin / 4.0
        )));
    }
    let n = l.values.len();
    let k_deltas: Vec<usize> = ds
        .iter()
        .map(|d| ((d / l.dt) * (1.0 + 1e-12)).floor() as usize)
        .map(|k| k.min(n.saturating_sub(1)))
        .collect();
    let lags = lag_set(&k_deltas);
    let v = &l.values;
    let per_lag: Vec<f64> = lags
        .par_iter()
        .map(|&k| {
            (0..n.saturating_sub(k))
                .map(|i| (v[i + k] - v[i]).norm_sqr())
                .fold(0.0, f64::max)
                .sqrt()
        })
        .collect();
    let mut cummax = Vec::with_capacity(lags.len());
    let mut m = 0.0f64;
    for &x in &per_lag {
        m = m.max(x);
        cummax.push(m);
    }
    let omega: Vec<f64> = k_deltas
        .iter()
        .map(|&k| {
            let idx = lags.partition_point(|&g| g <= k);
            if idx == 0 {
                0.0
            } else {
                cummax[idx - 1]
            }
        })
        .collect();
    let (lx, ly): (Vec<f64>, Vec<f64>) = ds
        .iter()
        .zip(&omega)
        .filter(|(_, w)| **w > 0.0)
        .map(|(d, w)| (d.ln(), w.ln()))
        .unzip();
    let beta_hat = ls_slope(&lx, &ly);
    let mut integral = 0.0;
    let pts: Vec<(f64, f64)> = ds
        .iter()
        .zip(&omega)
        .filter(|(d, _)| **d <= 1.0 + 1e-12)
        .map(|(d, w)| (d.ln(), *w))
        .collect();
    for w in pts.windows(2) {
        integral += 0.5 * (w[0].1 + w[1].1) * (w[0].0 - w[1].0);
    }
    Ok(ModulusEstimate { deltas: ds, omega, beta_hat, omega_integral_partial: integral, dt: l.dt })
}

/// `n` geometric gaps from `lo` to `hi`, decreasing.
pub fn geometric_deltas(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n < 2 {
        return vec![hi];
    }
    let r = (hi / lo).ln() / (n - 1) as f64;
    (0..n).map(|k| hi * (-(k as f64) * r).exp()).collect()
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct CBoundReport {
    pub k_hat: f64,
    /// `[fraction of pairs, K̂ on that prefix]`.
    pub by_fraction: Vec<[f64; 2]>,
    pub stable: bool,
    pub evaluated: usize,
    pub skipped: usize,
}

/// Empirical `K̂ = max |C(σ+it′) − C(σ+it)| / ω(|t′ − t|)`.
///
/// Pairs whose gap lies outside the range of `modulus` or where `ω = 0`
/// are skipped. Stability compares `K̂` on the first half of the pairs with
/// `K̂` on all of them (within 10%).
pub fn c_modulus_bound_check(
    a: &Perturbation,
    sigmas: &[f64],
    t_pairs: &[(f64, f64)],
    modulus: &ModulusEstimate,
) -> Result<CBoundReport> {
    let (dmin, dmax) = (modulus.delta_min(), modulus.delta_max());
    let ratios: Vec<Option<f64>> = t_pairs
        .par_iter()
        .map(|&(t, t2)| -> Result<Option<f64>> {
            let gap = (t2 - t).abs();
            if gap < dmin * (1.0 - 1e-12) || gap > dmax {
                return Ok(None);
            }
            let Some(w) = modulus.omega_at(gap).filter(|w| *w > 0.0) else { return Ok(None) };
            let mut best = 0.0f64;
            for &sigma in sigmas {
                let c1 = C_of(a, Complex64::new(sigma, t))?;
                let c2 = C_of(a, Complex64::new(sigma, t2))?;
                best = best.max((c2 - c1).norm() / w);
            }
            Ok(Some(best))
        })
        .collect::<Result<Vec<_>>>()?;
    let n = ratios.len();
    let prefix_max = |m: usize| ratios[..m].iter().flatten().copied().fold(0.0, f64::max);
    let by_fraction: Vec<[f64; 2]> = [0.25, 0.5, 1.0]
        .iter()
        .map(|&f| [f, prefix_max(((n as f64) * f).round() as usize)])
        .collect();
    let k_hat = by_fraction[2][1];
    let half = by_fraction[1][1];
    let stable = k_hat == 0.0 || (k_hat - half).abs() <= 0.1 * k_hat;
    let evaluated = ratios.iter().filter(|r| r.is_some()).count();
    Ok(CBoundReport { k_hat, by_fraction, stable, evaluated, skipped: n - evaluated })
}

/// Seeded pairs `(t, t + g)` with `t` uniform in `[−T, T]` and `g` log-uniform in `[dmin, dmax]`.
pub fn random_t_pairs(seed: u64, n: usize, t_max: f64, dmin: f64, dmax: f64) -> Vec<(f64, f64)> {
    let mut r = stream(seed, Stream::Sampling);
    (0..n)
        .map(|_| {
            let t = r.gen_range(-t_max..=t_max);
            let g = (r.gen_range(dmin.ln()..=dmax.ln())).exp();
            (t, t + g)
        })
        .collect()
}
