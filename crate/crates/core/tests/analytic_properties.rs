use beurling_core::analytic::{
    a_direct, diamond_integral, holder_modulus, sample_line, z_reference, B_of, C_of, Which, Z_of,
};
use beurling_core::primes::{random_sign_system, Perturbation};
use num_complex::Complex64;
use proptest::prelude::*;

fn atoms(max_len: usize) -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((1.5f64..60.0, -2.0f64..2.0), 1..max_len)
        .prop_map(|v| v.into_iter().filter(|a| a.1.abs() > 1e-3).collect())
}

proptest! {
    #[test]
    fn single_atom_series_matches_closed_form(p in 1.5f64..1e3, re in 1.0f64..4.0, im in -50.0f64..50.0) {
        let a = Perturbation::atomic(vec![(p, 1.0)]).unwrap();
        let s = Complex64::new(re, im);
        let b = B_of(&a, s, 1e-12).unwrap();
        let closed = -(1.0 - (-s * p.ln()).exp()).ln();
        prop_assert!((b - closed).norm() < 1e-10, "{} vs {}", b, closed);
    }

    #[test]
    fn chain_identities(at in atoms(8), re in 1.0f64..3.0, im in -30.0f64..30.0) {
        let a = Perturbation::atomic(at).unwrap();
        let s = Complex64::new(re, im);
        prop_assume!((s - 1.0).norm() > 1e-6);
        let b = B_of(&a, s, 1e-14).unwrap();
        let c = C_of(&a, s).unwrap();
        let z = Z_of(&a, s).unwrap();
        prop_assert!((b.exp() - c).norm() < 1e-10 * c.norm().max(1.0));
        prop_assert!(((s - 1.0) / s * z - c).norm() < 1e-10 * c.norm().max(1.0));
        prop_assert!((z / z_reference(a.reference, s).unwrap() - c).norm() < 1e-10 * c.norm().max(1.0));
    }

    #[test]
    fn line_samples_are_conjugate_symmetric(at in atoms(6), sigma in 1.0f64..2.0) {
        let a = Perturbation::atomic(at).unwrap();
        for which in [Which::A, Which::B, Which::C, Which::Z] {
            let t_max = if which == Which::A { 40.0 } else { 5.0 };
            if which == Which::Z && sigma == 1.0 {
                continue;
            }
            let l = sample_line(&a, which, sigma, t_max, 0.05).unwrap();
            let scale = l.values.iter().map(|v| v.norm()).fold(1.0, f64::max);
            prop_assert!(l.conjugate_asymmetry() < 1e-12 * scale, "{:?}", which);
        }
    }

    #[test]
    fn diamond_partial_integrals_nondecreasing(at in atoms(12), ys in prop::collection::vec(3.0f64..60.0, 10)) {
        let mut a = Perturbation::atomic(at).unwrap();
        a.horizon = 60.0;
        let r = diamond_integral(&a, &ys).unwrap();
        let mut pts = r.points.clone();
        pts.sort_by(|p, q| p[0].total_cmp(&q[0]));
        prop_assert!(pts.windows(2).all(|w| w[1][1] >= w[0][1]));
    }
}

#[test]
fn random_sign_block_lower_bound() {
    for alpha in [0.6, 0.8, 1.0] {
        // n₀: from here on a_n exceeds (10/9)·Σ_{m<n} a_m whatever the signs
        let w = |m: u32| (m as f64 - alpha * (m as f64).ln()).exp();
        let mut n0 = 200;
        for n in (2..200u32).rev() {
            let rest: f64 = (1..n).map(w).sum();
            if 0.9 * w(n) <= rest {
                break;
            }
            n0 = n;
        }
        assert!(n0 <= 10, "alpha={alpha}: n0={n0}");
        for seed in 0..10 {
            let a = random_sign_system(alpha, 200, seed).unwrap();
            for n in n0..200u32 {
                let y = (n as f64 + 0.5).exp();
                let bound = 0.1 * (n as f64 - alpha * (n as f64).ln()).exp();
                assert!(a.a(y).abs() > bound, "alpha={alpha} seed={seed} n={n}");
            }
        }
    }
}

#[test]
fn lacunary_samples_match_direct_sum() {
    for seed in [1, 2, 3] {
        let a = random_sign_system(1.0, 200, seed).unwrap();
        let l = sample_line(&a, Which::A, 1.0, 50.0, 0.01).unwrap();
        for k in (0..l.len()).step_by(97) {
            let t = l.t(k);
            // Σ ± n^{-1} e^{-int}, summed in reverse order
            let direct: Complex64 = a
                .measure
                .atoms()
                .iter()
                .rev()
                .map(|x| Complex64::from_polar(x.weight * (-x.log_loc).exp(), -t * x.log_loc))
                .sum();
            assert!((l.values[k] - direct).norm() < 1e-12);
            assert!((l.values[k] - a_direct(&a, 1.0, t)).norm() < 1e-12);
        }
    }
}

#[test]
fn modulus_is_nondecreasing_and_lipschitz_for_one_atom() {
    let a = Perturbation::atomic(vec![(std::f64::consts::E, 1.0)]).unwrap();
    let l = sample_line(&a, Which::A, 1.0, 20.0, 1e-3).unwrap();
    let deltas = beurling_core::analytic::geometric_deltas(1e-2, 1.0, 12);
    let m = holder_modulus(&l, &deltas).unwrap();
    // deltas decrease, so omega must too
    assert!(m.omega.windows(2).all(|w| w[1] <= w[0]));
    for (d, w) in m.deltas.iter().zip(&m.omega) {
        assert!(*w <= (-1f64).exp() * d + 1e-15);
    }
    assert!((m.beta_hat.unwrap() - 1.0).abs() < 0.05);
}
