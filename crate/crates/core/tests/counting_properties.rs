use beurling_core::counting::{combine_max, combine_min, eval_step, stieltjes, SignedMeasure, SmoothPart, StepFunction};
use beurling_core::primes::{Perturbation, Reference};
use beurling_core::analytic::{A_by_parts, A_of};
use beurling_core::quad::TOL_QUAD;
use num_complex::Complex64;
use proptest::prelude::*;

fn atoms(max_len: usize) -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((1.01f64..500.0, 0.01f64..5.0), 0..max_len)
}

fn signed_atoms(max_len: usize) -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((1.5f64..200.0, -3.0f64..3.0), 1..max_len)
        .prop_map(|v| v.into_iter().filter(|a| a.1.abs() > 1e-3).collect())
}

proptest! {
    #[test]
    fn eval_is_nondecreasing(a in atoms(30), x in 1.0f64..600.0, dx in 0.0f64..100.0) {
        let f = StepFunction::new(1.0, a, None, 1e3).unwrap();
        prop_assert!(eval_step(&f, x).unwrap() <= eval_step(&f, x + dx).unwrap());
    }

    #[test]
    fn eval_with_ramps_is_nondecreasing(a in atoms(10), r in prop::collection::vec((1.0f64..50.0, 0.0f64..2.0), 0..4), x in 1.0f64..100.0, dx in 0.0f64..50.0) {
        let f = StepFunction::new(0.0, a, Some(SmoothPart::ramps(r).unwrap()), 1e3).unwrap();
        prop_assert!(eval_step(&f, x).unwrap() <= eval_step(&f, x + dx).unwrap() + 1e-12);
    }

    #[test]
    fn stieltjes_linear_in_integrand_and_measure(
        a in signed_atoms(20), b in signed_atoms(20),
        alpha in -2.0f64..2.0, beta in -2.0f64..2.0, p in 0.5f64..2.5,
    ) {
        let ma = SignedMeasure::from_atoms(a, None).unwrap();
        let mb = SignedMeasure::from_atoms(b, None).unwrap();
        let f = |y: f64| y.powf(-p);
        let g = |y: f64| (y.ln()).sin();
        let lhs: f64 = stieltjes(|y| alpha * f(y) + beta * g(y), &ma, 1.0, 300.0, TOL_QUAD).unwrap();
        let rhs = alpha * stieltjes::<f64, _>(f, &ma, 1.0, 300.0, TOL_QUAD).unwrap()
            + beta * stieltjes::<f64, _>(g, &ma, 1.0, 300.0, TOL_QUAD).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs().max(rhs.abs())));

        let mc = ma.add_scaled(&mb, alpha).unwrap();
        let lhs: f64 = stieltjes(f, &mc, 1.0, 300.0, TOL_QUAD).unwrap();
        let rhs = stieltjes::<f64, _>(f, &ma, 1.0, 300.0, TOL_QUAD).unwrap()
            + alpha * stieltjes::<f64, _>(f, &mb, 1.0, 300.0, TOL_QUAD).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs().max(rhs.abs())));
    }

    #[test]
    fn integration_by_parts_agrees(a in signed_atoms(12), re in 1.0f64..3.0, im in -20.0f64..20.0) {
        let p = Perturbation::atomic(a).unwrap();
        let s = Complex64::new(re, im);
        let d = A_of(&p, s).unwrap().value;
        let q = A_by_parts(&p, s).unwrap();
        prop_assert!((d - q).norm() < 1e-8, "{} vs {}", d, q);
    }

    #[test]
    fn combine_brackets_inputs(a in atoms(15), b in atoms(15), ys in prop::collection::vec(1.0f64..600.0, 40)) {
        let f = StepFunction::new(0.0, a, None, 600.0).unwrap();
        let g = StepFunction::new(0.0, b, None, 600.0).unwrap();
        let hi = combine_max(&f, &g).unwrap();
        let lo = combine_min(&f, &g).unwrap();
        for y in ys {
            let (fv, gv) = (f.value(y), g.value(y));
            prop_assert!(lo.value(y) <= fv.min(gv) + 1e-12 && lo.value(y) >= fv.min(gv) - 1e-12);
            prop_assert!((hi.value(y) - fv.max(gv)).abs() <= 1e-12);
        }
    }

    #[test]
    fn json_round_trip_is_bit_exact(a in atoms(25), base in 0.0f64..3.0) {
        let f = StepFunction::new(base, a, None, 1e3).unwrap();
        let back = StepFunction::from_json(&f.to_json()).unwrap();
        prop_assert_eq!(f, back);
    }
}

#[test]
fn smooth_ramp_part_by_parts_agrees() {
    let m = SignedMeasure::from_atoms(
        vec![(2.0, 1.0), (7.5, -0.5)],
        Some(SmoothPart::ramps(vec![(3.0, 0.25), (20.0, 0.5)]).unwrap()),
    )
    .unwrap();
    let p = Perturbation::new(m, Reference::Tau, 80.0);
    for s in [Complex64::new(1.0, 0.0), Complex64::new(1.5, 6.0)] {
        let d = A_of(&p, s).unwrap().value;
        let q = A_by_parts(&p, s).unwrap();
        assert!((d - q).norm() < 1e-8, "{s}: {d} vs {q}");
    }
}
