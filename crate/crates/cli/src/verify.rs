//! Module invariant suites on small seeded instances; stops at the first
//! violated property.

use std::f64::consts::E;

use beurling_core::analytic::{diamond_integral, sample_line, A_by_parts, A_of, B_of, C_of, Which, Z_of};
use beurling_core::counting::{combine_max, combine_min, stieltjes, SignedMeasure, StepFunction};
use beurling_core::lattice::{
    count, density_estimate, euler_density, generate, generate_with, BUDGET, MERGE_TOL, SPREAD_TOL,
};
use beurling_core::primes::{
    block_coinflip_system, minus_system, plus_system, remove_locations, usual_primes, GenPrimeSystem, Perturbation,
    Reference,
};
use beurling_core::quad::TOL_QUAD;
use beurling_core::rng::{symmetric_uniforms, Stream};
use beurling_core::smoothing::{corpus, derivative_mass, fourier_counting, lemma_check, smooth_counting, LogCounting};
use num_complex::Complex64;
use serde_json::json;

use crate::config::ExperimentConfig;
use crate::experiments::Outcome;
use crate::output::OutputDir;
use crate::CliError;

type Check = (&'static str, fn(&mut Uniforms) -> Result<(), String>);

/// Uniforms in `[0, 1)` drawn from the sampling stream.
struct Uniforms {
    buf: Vec<f64>,
    pos: usize,
}

impl Uniforms {
    fn new(seed: u64) -> Self {
        let buf = symmetric_uniforms(seed, Stream::Sampling, 1 << 16).iter().map(|u| 0.5 * (u + 1.0)).collect();
        Self { buf, pos: 0 }
    }

    fn next(&mut self) -> f64 {
        let v = self.buf[self.pos % self.buf.len()];
        self.pos += 1;
        v
    }

    fn range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next()
    }

    fn atoms(&mut self, n: usize, lo: f64, hi: f64, wlo: f64, whi: f64) -> Vec<(f64, f64)> {
        (0..n).map(|_| (self.range(lo, hi), self.range(wlo, whi))).collect()
    }
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn e<T>(r: beurling_core::Result<T>) -> Result<T, String> {
    r.map_err(|x| x.to_string())
}

fn eval_monotone(u: &mut Uniforms) -> Result<(), String> {
    for _ in 0..50 {
        let f = e(StepFunction::new(0.0, u.atoms(20, 1.01, 500.0, 0.1, 3.0), None, 500.0))?;
        let x = u.range(1.0, 500.0);
        let y = u.range(x, 500.0);
        ensure(f.value(x) <= f.value(y), || format!("F({x}) > F({y})"))?;
    }
    Ok(())
}

fn stieltjes_linear(u: &mut Uniforms) -> Result<(), String> {
    for _ in 0..20 {
        let m = e(SignedMeasure::from_atoms(u.atoms(10, 1.5, 100.0, -2.0, 2.0), None))?;
        let (a, b) = (u.range(-2.0, 2.0), u.range(-2.0, 2.0));
        let f = |y: f64| 1.0 / y;
        let g = |y: f64| y.ln().cos();
        let lhs: f64 = e(stieltjes(|y| a * f(y) + b * g(y), &m, 1.0, 100.0, TOL_QUAD))?;
        let rhs = a * e(stieltjes::<f64, _>(f, &m, 1.0, 100.0, TOL_QUAD))?
            + b * e(stieltjes::<f64, _>(g, &m, 1.0, 100.0, TOL_QUAD))?;
        ensure((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs()), || format!("{lhs} vs {rhs}"))?;
    }
    Ok(())
}

fn by_parts(u: &mut Uniforms) -> Result<(), String> {
    for _ in 0..10 {
        let a = e(Perturbation::atomic(u.atoms(8, 1.5, 60.0, -2.0, 2.0)))?;
        let s = Complex64::new(u.range(1.0, 3.0), u.range(-20.0, 20.0));
        let d = e(A_of(&a, s))?.value;
        let p = e(A_by_parts(&a, s))?;
        ensure((d - p).norm() < 1e-8, || format!("A({s}): {d} vs {p}"))?;
    }
    Ok(())
}

fn combine_brackets(u: &mut Uniforms) -> Result<(), String> {
    for _ in 0..20 {
        let f = e(StepFunction::new(0.0, u.atoms(10, 1.01, 100.0, 0.1, 2.0), None, 100.0))?;
        let g = e(StepFunction::new(0.0, u.atoms(10, 1.01, 100.0, 0.1, 2.0), None, 100.0))?;
        let hi = e(combine_max(&f, &g))?;
        let lo = e(combine_min(&f, &g))?;
        for _ in 0..20 {
            let y = u.range(1.0, 100.0);
            ensure(lo.value(y) <= f.value(y) + 1e-12 && f.value(y) <= hi.value(y) + 1e-12, || format!("at {y}"))?;
        }
    }
    Ok(())
}

fn plus_minus(u: &mut Uniforms) -> Result<(), String> {
    let y = 7f64.exp();
    let p = e(block_coinflip_system(y, (u.next() * 1e9) as u64))?;
    let p1 = e(usual_primes(y))?;
    let plus = e(plus_system(&p, &p1))?;
    let minus = e(minus_system(&p, &p1))?;
    for k in 0..500 {
        let x = 1.0 + (y - 1.0) * k as f64 / 499.0;
        let d = p.counting.value(x) - p1.counting.value(x);
        ensure(plus.counting.value(x) - p1.counting.value(x) == d.max(0.0), || format!("P+ at {x}"))?;
        ensure(p1.counting.value(x) - minus.counting.value(x) == (-d).max(0.0), || format!("P- at {x}"))?;
    }
    Ok(())
}

fn system(gens: &[f64]) -> Result<GenPrimeSystem, String> {
    let atoms = gens.iter().map(|&g| (g, 1.0)).collect();
    let top = gens.iter().copied().fold(2.0, f64::max);
    Ok(GenPrimeSystem::new(e(StepFunction::new(0.0, atoms, None, top))?, Reference::Pi, false))
}

fn recurrence(u: &mut Uniforms) -> Result<(), String> {
    for _ in 0..20 {
        let k = (u.next() * 4.0) as usize;
        let base: Vec<f64> = (0..k).map(|_| (2.0 + u.next() * 28.0).floor()).collect();
        let q = (2.0 + u.next() * 28.0).floor();
        let mut ext = base.clone();
        ext.push(q);
        let np = e(generate(&system(&base)?, 1e4))?;
        let ne = e(generate(&system(&ext)?, 1e4))?;
        let x = u.range(1.0, 1e4);
        let mut sum = 0.0;
        let mut y = x;
        while y >= 1.0 {
            sum += e(count(&np, y))?;
            y /= q;
        }
        ensure(e(count(&ne, x))? == sum, || format!("{base:?} + {q} at {x}"))?;
    }
    Ok(())
}

fn naturals(_: &mut Uniforms) -> Result<(), String> {
    let n = e(generate(&e(usual_primes(1e4))?, 1e4))?;
    for (i, (v, m)) in n.entries().enumerate() {
        ensure(m == 1.0 && (v - (i + 1) as f64).abs() < 1e-9 * v, || format!("entry {i}: ({v}, {m})"))?;
    }
    Ok(())
}

fn merge_safety(_: &mut Uniforms) -> Result<(), String> {
    for gens in [vec![2.0, 4.0], vec![2.0, 3.0, 5.0], vec![1.5, E, 3.7]] {
        let p = system(&gens)?;
        let a = e(generate_with(&p, 1e5, MERGE_TOL, BUDGET))?;
        let b = e(generate_with(&p, 1e5, 0.5 * MERGE_TOL, BUDGET))?;
        ensure(e(count(&a, 1e5))? == e(count(&b, 1e5))?, || format!("{gens:?}"))?;
    }
    Ok(())
}

fn euler_inverse(u: &mut Uniforms) -> Result<(), String> {
    let s: Vec<f64> = (0..20).map(|_| u.range(1.01, 1e4)).collect();
    let d = e(euler_density(&s, &[]))? * e(euler_density(&[], &s))?;
    ensure((d - 1.0).abs() < 1e-14, || format!("product {d}"))
}

fn removed_density(_: &mut Uniforms) -> Result<(), String> {
    let p = e(remove_locations(&e(usual_primes(1e5))?, &[2.0, 3.0]))?;
    let rep = density_estimate(&e(generate(&p, 1e5))?);
    let d = e(euler_density(&[2.0, 3.0], &[]))?;
    ensure((rep.estimate - d).abs() < SPREAD_TOL * d, || format!("{} vs {d}", rep.estimate))
}

fn single_atom_series(u: &mut Uniforms) -> Result<(), String> {
    for _ in 0..20 {
        let p = u.range(1.5, 100.0);
        let a = e(Perturbation::atomic(vec![(p, 1.0)]))?;
        let s = Complex64::new(u.range(1.0, 3.0), u.range(-30.0, 30.0));
        let b = e(B_of(&a, s, 1e-12))?;
        let closed = -(1.0 - (-s * p.ln()).exp()).ln();
        ensure((b - closed).norm() < 1e-10, || format!("p={p}, s={s}"))?;
    }
    Ok(())
}

fn chain(u: &mut Uniforms) -> Result<(), String> {
    for _ in 0..20 {
        let a = e(Perturbation::atomic(u.atoms(5, 1.5, 50.0, -1.5, 1.5)))?;
        let s = Complex64::new(u.range(1.0, 3.0), u.range(-20.0, 20.0));
        let c = e(C_of(&a, s))?;
        let b = e(B_of(&a, s, 1e-14))?;
        let z = e(Z_of(&a, s))?;
        ensure((b.exp() - c).norm() < 1e-10 * c.norm().max(1.0), || format!("exp B at {s}"))?;
        ensure(((s - 1.0) / s * z - c).norm() < 1e-10 * c.norm().max(1.0), || format!("Z at {s}"))?;
    }
    Ok(())
}

fn conjugate_symmetry(u: &mut Uniforms) -> Result<(), String> {
    let a = e(Perturbation::atomic(u.atoms(5, 1.5, 50.0, -1.5, 1.5)))?;
    for which in [Which::A, Which::C] {
        let l = e(sample_line(&a, which, 1.0, 5.0, 0.05))?;
        ensure(l.conjugate_asymmetry() < 1e-12, || format!("{which:?}"))?;
    }
    Ok(())
}

fn diamond_monotone(u: &mut Uniforms) -> Result<(), String> {
    let mut a = e(Perturbation::atomic(u.atoms(10, 1.5, 60.0, -2.0, 2.0)))?;
    a.horizon = 60.0;
    let grid: Vec<f64> = (0..40).map(|k| 3.0 + 1.4 * k as f64).collect();
    let r = e(diamond_integral(&a, &grid))?;
    ensure(r.points.windows(2).all(|w| w[1][1] >= w[0][1]), || "I(Y) decreased".into())
}

fn side_agreement(_: &mut Uniforms) -> Result<(), String> {
    let a = e(Perturbation::atomic(vec![(E, 1.0)]))?;
    let us = [2.0, 4.0, 6.0, 8.0, 10.0];
    let n = e(LogCounting::of_perturbation(&a, 11.0))?;
    let f = e(fourier_counting(&a, 1.5, 0.1, &us))?;
    let c = e(smooth_counting(&n, 0.1, &us, 1.5))?;
    for ((u, x), y) in us.iter().zip(&f.values).zip(&c.values) {
        ensure((x - y).abs() <= 1e-6 * y.abs(), || format!("u={u}: {x} vs {y}"))?;
    }
    Ok(())
}

fn mass_identity(_: &mut Uniforms) -> Result<(), String> {
    let r = e(derivative_mass(&Perturbation::zero(Reference::Tau), 0.1, -1.5, 1.5, 0.01))?;
    ensure(r.error < 1e-8, || format!("error {}", r.error))
}

fn monotone_smoothing(u: &mut Uniforms) -> Result<(), String> {
    let f = e(StepFunction::new(1.0, u.atoms(30, 1.01, 1e3, 0.1, 3.0), None, 1e4))?;
    let n = e(LogCounting::from_step(&f))?;
    let grid: Vec<f64> = (0..300).map(|k| k as f64 * 0.02).collect();
    let s = e(smooth_counting(&n, 0.1, &grid, 1.0))?;
    ensure(s.values.windows(2).all(|w| w[1] >= w[0]), || "smoothed counting decreased".into())
}

fn lemma_direction(_: &mut Uniforms) -> Result<(), String> {
    for (name, m) in e(corpus::convergent())? {
        let r = e(lemma_check(&m, &[0.05, 0.2], 0.2))?;
        ensure(r.consistent, || format!("{name}"))?;
    }
    Ok(())
}

const CHECKS: &[Check] = &[
    ("eval_step_nondecreasing", eval_monotone),
    ("stieltjes_linear", stieltjes_linear),
    ("integration_by_parts", by_parts),
    ("combine_brackets_inputs", combine_brackets),
    ("plus_minus_positive_parts", plus_minus),
    ("enumeration_recurrence", recurrence),
    ("usual_primes_give_naturals", naturals),
    ("merge_safety", merge_safety),
    ("euler_density_inverse", euler_inverse),
    ("removed_primes_density", removed_density),
    ("single_atom_series_closed_form", single_atom_series),
    ("chain_identities", chain),
    ("line_conjugate_symmetry", conjugate_symmetry),
    ("diamond_nondecreasing", diamond_monotone),
    ("side_agreement", side_agreement),
    ("mass_identity", mass_identity),
    ("smoothing_monotone", monotone_smoothing),
    ("lemma_convergent_direction", lemma_direction),
];

pub fn run(cfg: &ExperimentConfig, out: &mut OutputDir) -> Result<Outcome, CliError> {
    let seed = cfg.require_seed("VERIFY")?;
    let mut u = Uniforms::new(seed);
    let mut passed = Vec::new();
    let mut failures = Vec::new();
    for (name, check) in CHECKS {
        match check(&mut u) {
            Ok(()) => passed.push(*name),
            Err(msg) => {
                failures.push(format!("{name}: {msg}"));
                break;
            }
        }
    }
    let summary = json!({ "seed": seed, "passed": passed, "failed": failures.first() });
    out.write_json("verify.json", &summary)?;
    Ok(Outcome { summary, failures })
}
