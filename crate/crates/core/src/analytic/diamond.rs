//! The Diamond integral `I(Y) = ∫_e^Y |a(y)| y^{−2} dy` and its growth trend.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::primes::Perturbation;
use crate::counting::StepFunction;
use crate::quad::{adaptive_simpson, ls_slope, Kahan, TOL_QUAD};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum DiamondTrend {
    Bounded,
    LogDivergent,
    PowerDivergent,
}

/// Slope of `log Δ_n` against `log n` below which increments are summable.
pub const BOUNDED_SLOPE: f64 = -1.5;
/// Slope above which `I(e^n)` grows like a power of `n`.
pub const POWER_SLOPE: f64 = -0.8;

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct DiamondReport {
    /// `(Y, I(Y))` for the requested grid.
    pub points: Vec<[f64; 2]>,
    /// `(n, I(e^n))` on the block grid used for the trend.
    pub blocks: Vec<[f64; 2]>,
    pub slope: Option<f64>,
    pub trend: DiamondTrend,
}

/// Integrates `|a|/y²` over `(lo, hi]`, where `a` has no breakpoint inside.
fn piece(a: &Perturbation, lo: f64, hi: f64) -> Result<f64> {
    if hi <= lo {
        return Ok(0.0);
    }
    if a.is_atomic() {
        let v = a.a(lo).abs();
        return Ok(v * (1.0 / lo - 1.0 / hi));
    }
    // in v = log y the integrand is |a(e^v)| e^{−v}
    adaptive_simpson(|v: f64| a.a(v.exp()).abs() * (-v).exp(), lo.ln(), hi.ln(), TOL_QUAD)
}

/// `I` at every point of a sorted grid above `e`, exact between breakpoints.
fn partial_integrals(a: &Perturbation, grid: &[f64]) -> Result<Vec<f64>> {
    let e = std::f64::consts::E;
    let bps = a.measure.breakpoints();
    let mut k = bps.partition_point(|&b| b <= e);
    let mut pos = e;
    let mut acc = 0.0;
    let mut out = Vec::with_capacity(grid.len());
    for &y in grid {
        while k < bps.len() && bps[k] <= y {
            acc += piece(a, pos, bps[k])?;
            pos = bps[k];
            k += 1;
        }
        if y > pos {
            acc += piece(a, pos, y)?;
            pos = y;
        }
        out.push(acc);
    }
    Ok(out)
}

/// Regresses `log Δ_n` on `log n` for `Δ_n = I(e^{n+1}) − I(e^n)`.
fn classify_blocks(block_vals: &[f64]) -> (Option<f64>, DiamondTrend) {
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut all_zero = true;
    for w in block_vals.windows(2).enumerate() {
        let (i, pair) = w;
        let inc = pair[1] - pair[0];
        if inc > 0.0 {
            all_zero = false;
            xs.push(((i + 1) as f64).ln());
            ys.push(inc.ln());
        }
    }
    let slope = ls_slope(&xs, &ys);
    let trend = match slope {
        _ if all_zero => DiamondTrend::Bounded,
        Some(s) if s < BOUNDED_SLOPE => DiamondTrend::Bounded,
        Some(s) if s <= POWER_SLOPE => DiamondTrend::LogDivergent,
        Some(_) => DiamondTrend::PowerDivergent,
        None => DiamondTrend::Bounded,
    };
    (slope, trend)
}

/// Partial Diamond integrals on `y_grid` plus the growth classification.
///
/// The trend regresses `log Δ_n` on `log n`, where `Δ_n = I(e^{n+1}) − I(e^n)`:
/// bounded increments decay faster than `1/n^{1.5}`, logarithmic growth
/// shows `Δ_n ≍ 1/n`, power growth slower decay.
pub fn diamond_integral(a: &Perturbation, y_grid: &[f64]) -> Result<DiamondReport> {
    let e = std::f64::consts::E;
    let ymax = y_grid.iter().copied().fold(e, f64::max);
    if ymax > a.horizon * (1.0 + 1e-12) {
        return Err(Error::Horizon { have: a.horizon, need: ymax });
    }
    let mut order: Vec<usize> = (0..y_grid.len()).collect();
    order.sort_by(|&i, &j| y_grid[i].total_cmp(&y_grid[j]));
    let sorted: Vec<f64> = order.iter().map(|&i| y_grid[i].max(e)).collect();
    let vals = partial_integrals(a, &sorted)?;
    let mut points = vec![[0.0, 0.0]; y_grid.len()];
    for (slot, &i) in order.iter().enumerate() {
        points[i] = [y_grid[i], vals[slot]];
    }

    let n_top = (ymax.ln() * (1.0 + 1e-12)).floor() as usize;
    let block_grid: Vec<f64> = (1..=n_top).map(|n| (n as f64).exp().min(ymax)).collect();
    let block_vals = partial_integrals(a, &block_grid)?;
    let blocks: Vec<[f64; 2]> = (1..=n_top).zip(&block_vals).map(|(n, v)| [n as f64, *v]).collect();

    let (slope, trend) = classify_blocks(&block_vals);
    Ok(DiamondReport { points, blocks, slope, trend })
}

/// `∫_e^Y |F(y) − G(y)| y^{−2} dy` for two atomic counting functions, exact
/// between their merged breakpoints, with the same trend classification.
pub fn diamond_integral_between(f: &StepFunction, g: &StepFunction, y_grid: &[f64]) -> Result<DiamondReport> {
    if !f.is_atomic() || !g.is_atomic() {
        return Err(Error::Unsupported("difference integral of functions with a smooth part".into()));
    }
    let e = std::f64::consts::E;
    let ymax = y_grid.iter().copied().fold(e, f64::max);
    let have = f.horizon().min(g.horizon());
    if ymax > have * (1.0 + 1e-12) {
        return Err(Error::Horizon { have, need: ymax });
    }
    let n_top = (ymax.ln() * (1.0 + 1e-12)).floor() as usize;
    let mut order: Vec<usize> = (0..y_grid.len()).collect();
    order.sort_by(|&i, &j| y_grid[i].total_cmp(&y_grid[j]));
    // requested points and block ends share one sweep
    let mut targets: Vec<(f64, Option<usize>)> = order.iter().map(|&i| (y_grid[i].max(e), Some(i))).collect();
    targets.extend((1..=n_top).map(|n| ((n as f64).exp().min(ymax), None)));
    targets.sort_by(|a, b| a.0.total_cmp(&b.0));

    let (fl, gl) = (f.locations(), g.locations());
    let (mut i, mut j) = (fl.partition_point(|&x| x <= e), gl.partition_point(|&x| x <= e));
    let mut pos = e;
    let mut diff = (f.value(e) - g.value(e)).abs();
    let mut acc = Kahan::new();
    let mut points = vec![[0.0, 0.0]; y_grid.len()];
    let mut block_vals = Vec::with_capacity(n_top);
    for (y, slot) in targets {
        loop {
            let next = match (fl.get(i), gl.get(j)) {
                (Some(&a), Some(&b)) => a.min(b),
                (Some(&a), None) => a,
                (None, Some(&b)) => b,
                (None, None) => f64::INFINITY,
            };
            if next > y {
                break;
            }
            acc.add(diff * (1.0 / pos - 1.0 / next));
            pos = next;
            while i < fl.len() && fl[i] == next {
                i += 1;
            }
            while j < gl.len() && gl[j] == next {
                j += 1;
            }
            diff = (f.value(next) - g.value(next)).abs();
        }
        let v = acc.value() + diff * (1.0 / pos - 1.0 / y);
        match slot {
            Some(k) => points[k] = [y_grid[k], v],
            None => block_vals.push(v),
        }
    }
    let blocks = block_vals.iter().enumerate().map(|(n, v)| [(n + 1) as f64, *v]).collect();
    let (slope, trend) = classify_blocks(&block_vals);
    Ok(DiamondReport { points, blocks, slope, trend })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::counting::{SignedMeasure, SmoothPart};
    use crate::primes::Reference;

    #[test]
    fn zero_perturbation_is_bounded() {
        let a = Perturbation::zero(Reference::Tau);
        let r = diamond_integral(&a, &[10.0, 100.0, 1e4]).unwrap();
        assert!(r.points.iter().all(|p| p[1] == 0.0));
        assert_eq!(r.trend, DiamondTrend::Bounded);
    }

    #[test]
    fn unit_constant_closed_form() {
        // a ≡ 1 on [e, ∞): a unit atom at e
        let e = std::f64::consts::E;
        let mut a = Perturbation::atomic(vec![(e, 1.0)]).unwrap();
        a.horizon = 40f64.exp();
        let ys = [10.0, 1e3, 1e9, 30f64.exp()];
        let r = diamond_integral(&a, &ys).unwrap();
        for p in &r.points {
            assert!((p[1] - (1.0 / e - 1.0 / p[0])).abs() < 1e-15);
        }
        assert_eq!(r.trend, DiamondTrend::Bounded);
    }

    #[test]
    fn smooth_part_matches_quadrature() {
        // a(y) = 0.5·(y/2 − 1) for y ≥ 2
        let m = SignedMeasure::from_atoms(vec![], Some(SmoothPart::ramps(vec![(2.0, 0.5)]).unwrap())).unwrap();
        let a = Perturbation::new(m, Reference::Tau, 100.0);
        let r = diamond_integral(&a, &[50.0]).unwrap();
        // ∫_e^50 (y/4 − 1/2)/y² dy = (1/4) log(50/e) + (1/2)(1/50 − 1/e)
        let e = std::f64::consts::E;
        let exact = 0.25 * (50.0 / e).ln() + 0.5 * (1.0 / 50.0 - 1.0 / e);
        assert!((r.points[0][1] - exact).abs() < 1e-9);
    }

    #[test]
    fn difference_of_steps_matches_perturbation_route() {
        let f = StepFunction::new(0.0, vec![(2.0, 2.0), (5.0, 2.0), (13.0, 2.0), (40.0, 2.0)], None, 60.0).unwrap();
        let g = StepFunction::from_unit_atoms(vec![2.0, 3.0, 5.0, 7.0, 11.0, 13.0, 17.0, 19.0, 23.0, 29.0, 31.0, 37.0, 41.0, 43.0, 47.0, 53.0, 59.0], 60.0).unwrap();
        let mut atoms: Vec<(f64, f64)> = f.atoms().collect();
        atoms.extend(g.atoms().map(|(l, w)| (l, -w)));
        let a = Perturbation::new(SignedMeasure::from_atoms(atoms, None).unwrap(), Reference::Pi, 60.0);
        let ys = [3.0, 10.0, 41.0, 60.0];
        let x = diamond_integral(&a, &ys).unwrap();
        let y = diamond_integral_between(&f, &g, &ys).unwrap();
        for (p, q) in x.points.iter().zip(&y.points) {
            assert!((p[1] - q[1]).abs() < 1e-15, "{p:?} {q:?}");
        }
        for (p, q) in x.blocks.iter().zip(&y.blocks) {
            assert!((p[1] - q[1]).abs() < 1e-15);
        }
    }

    #[test]
    fn horizon_enforced() {
        let a = Perturbation::atomic(vec![(3.0, 1.0)]).unwrap();
        assert!(matches!(diamond_integral(&a, &[10.0]), Err(Error::Horizon { .. })));
    }
}
