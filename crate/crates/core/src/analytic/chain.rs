//! The transfer chain `a → A → B → C → Z`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::zeta::zeta;
use crate::counting::stieltjes;
use crate::error::{domain, Error, Result};
use crate::primes::{Perturbation, Reference};
use crate::quad::{GaussLegendre, KahanComplex, TOL_QUAD};

/// Smallest admissible gap between the first atom and 1 in the B-series.
pub const EPS_LOC: f64 = 1e-3;

/// Default tolerance of the B-series tail.
pub const TOL_B: f64 = 1e-13;

/// `A(s)` together with the size of the omitted continuation beyond the horizon.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AValue {
    pub value: Complex64,
    /// `|a(Y)|·Y^{−Re s}` at the horizon `Y`.
    pub tail_bound: f64,
}

fn check_half_plane(s: Complex64) -> Result<()> {
    if !(s.re >= 1.0) {
        return domain(format!("Re s = {} < 1 is outside the half-plane used here", s.re));
    }
    Ok(())
}

/// Atomic part of `A(s) = Σ w y^{−s}`, computed as `sign·exp(log|w| − s log y)`.
pub(crate) fn atomic_a(a: &Perturbation, s: Complex64) -> Complex64 {
    let mut acc = KahanComplex::new();
    for at in a.measure.atoms() {
        let mag = at.weight.abs().ln();
        let z = (Complex64::new(mag, 0.0) - s * at.log_loc).exp();
        acc.add(if at.weight < 0.0 { -z } else { z });
    }
    acc.value()
}

/// `A(s) = ∫ y^{−s} da(y)` for `Re s ≥ 1`: exact atomic sum plus quadrature
/// of the smooth part up to the horizon.
#[allow(non_snake_case)]
pub fn A_of(a: &Perturbation, s: Complex64) -> Result<AValue> {
    check_half_plane(s)?;
    let mut value = atomic_a(a, s);
    if a.measure.smooth().is_some() {
        if !a.horizon.is_finite() {
            return Err(Error::Unsupported("smooth part without a finite horizon".into()));
        }
        let smooth_only = crate::counting::SignedMeasure::from_atoms(vec![], a.measure.smooth().cloned())?;
        value += stieltjes(|y: f64| (-s * y.ln()).exp(), &smooth_only, 1.0, a.horizon, TOL_QUAD)?;
    }
    let tail_bound = if a.horizon.is_finite() {
        a.a(a.horizon).abs() * (-s.re * a.horizon.ln()).exp()
    } else {
        0.0
    };
    Ok(AValue { value, tail_bound })
}

/// `A(s)` by parts: `a(Y) Y^{−s} + s ∫_1^Y y^{−s−1} a(y) dy`, the integral
/// taken by composite Gauss–Legendre quadrature in `v = log y` between the
/// breakpoints of `a`.
#[allow(non_snake_case)]
pub fn A_by_parts(a: &Perturbation, s: Complex64) -> Result<Complex64> {
    check_half_plane(s)?;
    let y_top = if a.horizon.is_finite() {
        a.horizon
    } else {
        a.measure.breakpoints().last().copied().unwrap_or(1.0)
    };
    let v_top = y_top.ln();
    let mut cuts = vec![0.0];
    cuts.extend(a.measure.atoms().iter().map(|x| x.log_loc).filter(|&v| v < v_top));
    if let Some(sm) = a.measure.smooth() {
        cuts.extend(sm.breakpoints().into_iter().map(f64::ln).filter(|&v| v > 0.0 && v < v_top));
        cuts.sort_by(f64::total_cmp);
        cuts.dedup();
    }
    cuts.push(v_top);
    let gl = GaussLegendre::g20();
    let width = (0.5f64).min(1.0 / (1.0 + s.im.abs()));
    let mut acc = KahanComplex::new();
    for w in cuts.windows(2) {
        let (v0, v1) = (w[0], w[1]);
        if v1 <= v0 {
            continue;
        }
        let panels = ((v1 - v0) / width).ceil().max(1.0) as usize;
        let h = (v1 - v0) / panels as f64;
        // a is right-continuous, so evaluate just inside the piece
        let a_left = a.a((0.5 * (v0 + v1)).exp());
        let smooth = a.measure.smooth().is_some();
        for p in 0..panels {
            let lo = v0 + h * p as f64;
            acc.add(gl.integrate(
                |v: f64| {
                    let av = if smooth { a.a(v.exp()) } else { a_left };
                    (-s * v).exp() * av
                },
                lo,
                lo + h,
            ));
        }
    }
    let boundary = (-s * v_top).exp() * a.a(y_top);
    Ok(boundary + s * acc.value())
}

/// Smallest atom location and `Σ |w| y^{−σ}`, after checking the B-series applies.
fn series_setup(a: &Perturbation, sigma: f64) -> Result<Option<(f64, f64)>> {
    if !a.is_atomic() {
        return Err(Error::Conditioning(
            "the B-series needs an atomic perturbation (a smooth part reaches y = 1)".into(),
        ));
    }
    let atoms = a.measure.atoms();
    let Some(first) = atoms.first() else { return Ok(None) };
    if first.loc <= 1.0 + EPS_LOC {
        return Err(Error::Conditioning(format!(
            "smallest atom {} is within {EPS_LOC} of 1",
            first.loc
        )));
    }
    let v: f64 = atoms
        .iter()
        .map(|x| (x.weight.abs().ln() - sigma * x.log_loc).exp())
        .sum();
    Ok(Some((first.log_loc, v)))
}

/// Number of series terms so that the geometric tail is below `tol`.
///
/// `|A(ks)| ≤ V r^{k−1}` with `V = Σ|w| y^{−σ}` and `r = y_min^{−σ}`, so the
/// tail after `K` terms is at most `V r^K / (1 − r)`.
pub fn b_terms(log_ymin: f64, sigma: f64, v: f64, tol: f64) -> usize {
    let ln_r = -sigma * log_ymin;
    let r = ln_r.exp();
    let target = (tol * (1.0 - r) / v).ln();
    if target >= 0.0 {
        return 1;
    }
    (target / ln_r).ceil().max(1.0) as usize
}

/// `B(s) = Σ_k A(ks)/k`, truncated once the geometric tail is below `tol`.
#[allow(non_snake_case)]
pub fn B_of(a: &Perturbation, s: Complex64, tol: f64) -> Result<Complex64> {
    check_half_plane(s)?;
    let Some((log_min, v)) = series_setup(a, s.re)? else {
        return Ok(Complex64::new(0.0, 0.0));
    };
    let k_max = b_terms(log_min, s.re, v, tol);
    let atoms = a.measure.atoms();
    let z: Vec<Complex64> = atoms.iter().map(|x| (-s * x.log_loc).exp()).collect();
    let mut q: Vec<Complex64> = atoms
        .iter()
        .map(|x| {
            let t = (Complex64::new(x.weight.abs().ln(), 0.0) - s * x.log_loc).exp();
            if x.weight < 0.0 {
                -t
            } else {
                t
            }
        })
        .collect();
    let mut total = KahanComplex::new();
    for k in 1..=k_max {
        let mut ak = KahanComplex::new();
        for qj in &q {
            ak.add(*qj);
        }
        total.add(ak.value() / k as f64);
        for (qj, zj) in q.iter_mut().zip(&z) {
            *qj *= zj;
        }
    }
    Ok(total.value())
}

/// `C(s) = exp B(s)`.
#[allow(non_snake_case)]
pub fn C_of(a: &Perturbation, s: Complex64) -> Result<Complex64> {
    Ok(B_of(a, s, TOL_B)?.exp())
}

/// The reference zeta function: `s/(s−1)` for τ, `ζ(s)` for π.
pub fn z_reference(reference: Reference, s: Complex64) -> Result<Complex64> {
    if s == Complex64::new(1.0, 0.0) {
        return Err(Error::Pole);
    }
    match reference {
        Reference::Tau => Ok(s / (s - 1.0)),
        Reference::Pi => zeta(s),
    }
}

/// `Z(s) = Z₀(s) C(s)`.
#[allow(non_snake_case)]
pub fn Z_of(a: &Perturbation, s: Complex64) -> Result<Complex64> {
    let z0 = z_reference(a.reference, s)?;
    Ok(z0 * C_of(a, s)?)
}

/// The density predicted by the chain, `C(1)`.
pub fn density_c1(a: &Perturbation) -> Result<f64> {
    Ok(C_of(a, Complex64::new(1.0, 0.0))?.re)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::counting::{SignedMeasure, SmoothPart};
    use std::f64::consts::{E, PI};

    fn delta_e() -> Perturbation {
        Perturbation::atomic(vec![(E, 1.0)]).unwrap()
    }

    #[test]
    fn a_single_atom() {
        let a = delta_e();
        let v = A_of(&a, Complex64::new(1.0, 0.0)).unwrap().value;
        assert!((v.re - (-1f64).exp()).abs() < 1e-16);
        let w = A_of(&a, Complex64::new(1.0, PI)).unwrap().value;
        assert!((w - Complex64::new(-(-1f64).exp(), 0.0)).norm() < 1e-15);
    }

    #[test]
    fn a_rejects_left_half_plane() {
        assert!(A_of(&delta_e(), Complex64::new(0.5, 0.0)).is_err());
    }

    #[test]
    fn a_by_parts_matches_atomic_sum() {
        let a = Perturbation::atomic(vec![(2.0, 1.5), (3.5, -0.75), (9.0, 2.0)]).unwrap();
        for s in [Complex64::new(1.0, 0.0), Complex64::new(1.3, 4.0), Complex64::new(2.0, -7.5)] {
            let d = A_of(&a, s).unwrap().value;
            let p = A_by_parts(&a, s).unwrap();
            assert!((d - p).norm() < 1e-12, "{s}: {d} vs {p}");
        }
    }

    #[test]
    fn b_zero_and_closed_forms() {
        let zero = Perturbation::zero(Reference::Tau);
        assert_eq!(B_of(&zero, Complex64::new(2.0, 0.0), 1e-12).unwrap(), Complex64::new(0.0, 0.0));
        let a = delta_e();
        let b2 = B_of(&a, Complex64::new(2.0, 0.0), 1e-12).unwrap();
        assert!((b2.re - 0.1454134578688171).abs() < 1e-10);
        let b1 = B_of(&a, Complex64::new(1.0, 0.0), 1e-12).unwrap();
        assert!((b1.re - 0.45867514538708193).abs() < 1e-10);
    }

    #[test]
    fn b_conditioning_errors() {
        let near = Perturbation::atomic(vec![(1.0005, 1.0)]).unwrap();
        assert!(matches!(B_of(&near, Complex64::new(1.0, 0.0), 1e-10), Err(Error::Conditioning(_))));
        let smooth = Perturbation::new(
            SignedMeasure::from_atoms(vec![(2.0, 1.0)], Some(SmoothPart::Tau { scale: -1.0 })).unwrap(),
            Reference::Tau,
            100.0,
        );
        assert!(matches!(B_of(&smooth, Complex64::new(2.0, 0.0), 1e-10), Err(Error::Conditioning(_))));
    }

    #[test]
    fn c_and_z_instances() {
        let zero = Perturbation::zero(Reference::Tau);
        assert_eq!(C_of(&zero, Complex64::new(1.7, 3.0)).unwrap(), Complex64::new(1.0, 0.0));
        assert!((Z_of(&zero, Complex64::new(2.0, 0.0)).unwrap() - 2.0).norm() < 1e-15);
        let c = C_of(&delta_e(), Complex64::new(2.0, 0.0)).unwrap();
        assert!((c.re - 1.1565176427496657).abs() < 1e-12);
        assert!(matches!(Z_of(&zero, Complex64::new(1.0, 0.0)), Err(Error::Pole)));
    }

    #[test]
    fn term_count_covers_tail() {
        let k = b_terms(1.0, 1.0, 1.0, 1e-12);
        let r = (-1f64).exp();
        assert!(r.powi(k as i32) / (1.0 - r) <= 1e-12);
        assert!(r.powi(k as i32 - 1) / (1.0 - r) > 1e-12);
    }
}
