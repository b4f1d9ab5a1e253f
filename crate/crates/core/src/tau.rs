//! The reference prime-counting function τ(y) = ∫₁^y (1 − 1/ξ) / log ξ dξ.
//!
//! τ is evaluated inside integrands millions of times, so values are memoized
//! on a geometric grid `y_k = e^{k/32}` and refined locally with a 20-point
//! Gauss–Legendre panel.

use std::sync::OnceLock;

use crate::error::{domain, Result};
use crate::quad::GaussLegendre;

const STEPS_PER_UNIT: usize = 32;
const TABLE_LOG_MAX: usize = 64;

struct TauTable {
    values: Vec<f64>,
}

fn table() -> &'static TauTable {
    static TABLE: OnceLock<TauTable> = OnceLock::new();
    TABLE.get_or_init(|| {
        let n = STEPS_PER_UNIT * TABLE_LOG_MAX;
        let gl = GaussLegendre::g20();
        let mut values = Vec::with_capacity(n + 1);
        let mut acc = 0.0;
        values.push(0.0);
        for k in 0..n {
            let lo = node(k);
            let hi = node(k + 1);
            acc += gl.integrate(tau_density, lo, hi);
            values.push(acc);
        }
        TauTable { values }
    })
}

fn node(k: usize) -> f64 {
    (k as f64 / STEPS_PER_UNIT as f64).exp()
}

/// The integrand (1 − 1/ξ)/log ξ, extended by continuity with value 1 at ξ = 1.
pub fn tau_density(xi: f64) -> f64 {
    if xi <= 1.0 {
        return if xi == 1.0 { 1.0 } else { 0.0 };
    }
    let d = xi - 1.0;
    (d / xi) / d.ln_1p()
}

/// τ(y) for `y ≥ 1`.
pub fn tau(y: f64) -> Result<f64> {
    if !(y >= 1.0) {
        return domain(format!("tau requires y >= 1, got {y}"));
    }
    Ok(tau_unchecked(y))
}

/// τ(y), returning 0 for `y < 1`.
pub fn tau_unchecked(y: f64) -> f64 {
    if y <= 1.0 {
        return 0.0;
    }
    let t = table();
    let gl = GaussLegendre::g20();
    let k = (y.ln() * STEPS_PER_UNIT as f64).floor() as usize;
    let last = t.values.len() - 1;
    if k < last {
        // node(k) may round above y by an ulp; the panel then has negative width, which is fine.
        t.values[k] + gl.integrate(tau_density, node(k), y)
    } else {
        let mut acc = t.values[last];
        let mut j = last;
        while node(j + 1) < y {
            acc += gl.integrate(tau_density, node(j), node(j + 1));
            j += 1;
        }
        acc + gl.integrate(tau_density, node(j), y)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::adaptive_simpson;

    // Ein(z) = Σ z^k / (k·k!), and τ(y) = Ein(log y).
    fn ein(z: f64) -> f64 {
        let mut term = 1.0;
        let mut sum = 0.0;
        for k in 1..200 {
            term *= z / k as f64;
            sum += term / k as f64;
            if term / (k as f64) < 1e-18 * sum.abs() {
                break;
            }
        }
        sum
    }

    #[test]
    fn tau_at_one_is_zero() {
        assert_eq!(tau(1.0).unwrap(), 0.0);
    }

    #[test]
    fn tau_below_one_is_domain_error() {
        assert!(tau(0.5).is_err());
    }

    #[test]
    fn tau_at_e_two_rules_agree() {
        let e = std::f64::consts::E;
        let simpson: f64 = adaptive_simpson(tau_density, 1.0, e, 1e-12).unwrap();
        let table = tau(e).unwrap();
        assert!((simpson - table).abs() < 1e-8, "{simpson} vs {table}");
        assert!((table - ein(1.0)).abs() < 1e-13);
    }

    #[test]
    fn tau_matches_series_across_scales() {
        for &z in &[0.01, 0.5, 3.0, 10.0, 30.0, 63.9, 70.0] {
            let y = f64::exp(z);
            let rel = (tau(y).unwrap() - ein(z)).abs() / ein(z);
            assert!(rel < 1e-12, "z={z} rel={rel}");
        }
    }

    #[test]
    fn tau_is_increasing() {
        assert!(tau(10.0).unwrap() > tau(5.0).unwrap());
        let mut prev = 0.0;
        for i in 1..500 {
            let v = tau(1.0 + i as f64 * 0.37).unwrap();
            assert!(v > prev);
            prev = v;
        }
    }
}
