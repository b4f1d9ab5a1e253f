//! Riemann zeta by Euler–Maclaurin summation, for the π reference `Z₀ = ζ`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::quad::KahanComplex;

// B_{2k} / (2k)! for k = 1..12
const BERNOULLI_OVER_FACTORIAL: [f64; 12] = [
    1.0 / 6.0 / 2.0,
    -1.0 / 30.0 / 24.0,
    1.0 / 42.0 / 720.0,
    -1.0 / 30.0 / 40320.0,
    5.0 / 66.0 / 3628800.0,
    -691.0 / 2730.0 / 479001600.0,
    7.0 / 6.0 / 87178291200.0,
    -3617.0 / 510.0 / 20922789888000.0,
    43867.0 / 798.0 / 6402373705728000.0,
    -174611.0 / 330.0 / 2432902008176640000.0,
    854513.0 / 138.0 / 1.1240007277776077e21,
    -236364091.0 / 2730.0 / 6.204484017332394e23,
];

/// ζ(s) for `Re s > 0`, `s ≠ 1`.
pub fn zeta(s: Complex64) -> Result<Complex64> {
    if s == Complex64::new(1.0, 0.0) {
        return Err(Error::Pole);
    }
    let n = (20.0 + s.im.abs()).ceil() as u32;
    let mut acc = KahanComplex::new();
    for k in 1..n {
        acc.add((-s * (k as f64).ln()).exp());
    }
    let nf = n as f64;
    let ln_n = nf.ln();
    let n_pow = (-s * ln_n).exp();
    acc.add(n_pow * nf / (s - 1.0));
    acc.add(n_pow * 0.5);
    // (s)_{2k-1} N^{-s-2k+1}
    let mut rising = s;
    let mut power = n_pow / nf;
    for (k, c) in BERNOULLI_OVER_FACTORIAL.iter().enumerate() {
        acc.add(rising * power * *c);
        let j = 2 * k as u32 + 1;
        rising = rising * (s + j as f64) * (s + (j + 1) as f64);
        power /= nf * nf;
    }
    Ok(acc.value())
}
