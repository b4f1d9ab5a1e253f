//! Acceptance criteria, one PASS/FAIL line each. Exits nonzero if any fail.

use std::f64::consts::E;
use std::time::Instant;

use beurling_cli::config::{Experiment, ExperimentConfig};
use beurling_cli::run_experiment;
use beurling_core::analytic::{B_of, C_of, Z_of};
use beurling_core::lattice::{count, density_estimate, euler_density, generate, Trend};
use beurling_core::primes::{remove_locations, usual_primes, GenPrimeSystem, Perturbation, Reference};
use beurling_core::rng::{symmetric_uniforms, Stream};
use beurling_core::smoothing::{corpus, density_via_c1, derivative_mass, fourier_counting, lemma_check, smooth_counting, LogCounting};
use beurling_core::counting::StepFunction;
use num_complex::Complex64;
use serde_json::Value;

const SEEDS: u64 = 20;

struct Report {
    failed: usize,
}

impl Report {
    fn line(&mut self, id: &str, ok: bool, detail: String) {
        if !ok {
            self.failed += 1;
        }
        println!("{} {id} {detail}", if ok { "PASS" } else { "FAIL" });
    }
}

fn config(text: &str) -> ExperimentConfig {
    ExperimentConfig::from_json(text).expect("acceptance config")
}

fn run(exp: Experiment, cfg: &ExperimentConfig) -> Result<(String, Value), String> {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    run_experiment(exp, cfg, dir.path())
        .map(|(hash, outcome)| (hash, outcome.summary))
        .map_err(|e| e.to_string())
}

fn c1_reference_density(r: &mut Report) {
    let start = Instant::now();
    let res = run(Experiment::Density, &ExperimentConfig::default());
    let secs = start.elapsed().as_secs_f64();
    match res {
        Ok((_, s)) => {
            let est = s["estimate"].as_f64().unwrap_or(f64::NAN);
            let trend = s["trend"].as_str().unwrap_or("");
            let ok = (est - 1.0).abs() <= 0.002 && trend == "CONVERGENT" && secs < 10.0;
            r.line("C1", ok, format!("reference density D={est:.6} (1 ± 0.002), trend {trend}, {secs:.2}s (< 10s)"));
        }
        Err(e) => r.line("C1", false, format!("reference density: {e}")),
    }
}

fn c2_removed_primes(r: &mut Report) {
    let res = (|| {
        let p = remove_locations(&usual_primes(1e6)?, &[2.0, 3.0])?;
        let rep = density_estimate(&generate(&p, 1e6)?);
        let d = euler_density(&[2.0, 3.0], &[])?;
        Ok::<_, beurling_core::Error>((rep.estimate, d))
    })();
    match res {
        Ok((est, d)) => {
            let closed = (1.0 - 0.5) * (1.0 - 1.0 / 3.0);
            let ok = (est - 1.0 / 3.0).abs() <= 0.003 && (d - closed).abs() <= 1e-14;
            r.line(
                "C2",
                ok,
                format!("removing {{2,3}}: enumerated {est:.6} (1/3 ± 0.003), product {d:.17} vs {closed:.17} (1e-14)"),
            );
        }
        Err(e) => r.line("C2", false, format!("removing {{2,3}}: {e}")),
    }
}

fn c3_chain(r: &mut Report) {
    let res = (|| {
        let a = Perturbation::atomic(vec![(E, 1.0)])?;
        let b2 = B_of(&a, Complex64::new(2.0, 0.0), 1e-14)?;
        let b_err = (b2 - Complex64::new(-(1.0 - (-2f64).exp()).ln(), 0.0)).norm();
        let u = symmetric_uniforms(3, Stream::Sampling, 40);
        let mut chain_err: f64 = 0.0;
        for k in 0..20 {
            let s = Complex64::new(2.0 + u[2 * k], 30.0 * u[2 * k + 1]);
            let b = B_of(&a, s, 1e-14)?;
            let c = C_of(&a, s)?;
            let z = Z_of(&a, s)?;
            let closed = 1.0 / (1.0 - (-s).exp());
            chain_err = chain_err
                .max((b.exp() - c).norm() / c.norm())
                .max((z - s / (s - 1.0) * c).norm() / z.norm())
                .max((c - closed).norm() / closed.norm());
        }
        Ok::<_, beurling_core::Error>((b_err, chain_err))
    })();
    match res {
        Ok((b_err, chain_err)) => r.line(
            "C3",
            b_err <= 1e-10 && chain_err <= 1e-10,
            format!("transfer chain: |B(2) + log(1 - e^-2)| = {b_err:.2e}, chain identities {chain_err:.2e} (1e-10)"),
        ),
        Err(e) => r.line("C3", false, format!("transfer chain: {e}")),
    }
}

fn c4_side_agreement(r: &mut Report) {
    let start = Instant::now();
    let us: Vec<f64> = (0..=80).map(|k| 2.0 + 0.1 * k as f64).collect();
    let res = (|| {
        let mut worst: f64 = 0.0;
        for a in [Perturbation::zero(Reference::Pi), Perturbation::atomic(vec![(E, 1.0)])?] {
            let n = LogCounting::of_perturbation(&a, 11.0)?;
            let f = fourier_counting(&a, 1.5, 0.1, &us)?;
            let c = smooth_counting(&n, 0.1, &us, 1.5)?;
            for (x, y) in f.values.iter().zip(&c.values) {
                worst = worst.max((x - y).abs() / y.abs());
            }
        }
        Ok::<_, beurling_core::Error>(worst)
    })();
    let secs = start.elapsed().as_secs_f64();
    match res {
        Ok(worst) => r.line(
            "C4",
            worst <= 1e-6 && secs < 30.0,
            format!("side agreement at sigma=1.5: max relative difference {worst:.2e} (1e-6), {secs:.2}s (< 30s)"),
        ),
        Err(e) => r.line("C4", false, format!("side agreement: {e}")),
    }
}

fn c5_reference_limit(r: &mut Report) {
    let a = Perturbation::zero(Reference::Tau);
    let res = (|| Ok::<_, beurling_core::Error>((density_via_c1(&a, 0.1, 10.0)?, derivative_mass(&a, 0.1, -1.5, 40.0, 0.01)?)))();
    match res {
        Ok((g, m)) => {
            let dev = (g.estimate - 1.0).abs();
            r.line(
                "C5",
                dev <= 1e-6 && m.error <= 1e-8,
                format!("reference limit: |e^-u N_eps(e^u) - 1| = {dev:.2e} (1e-6), mass error {:.2e} (1e-8)", m.error),
            );
        }
        Err(e) => r.line("C5", false, format!("reference limit: {e}")),
    }
}

fn c6_c7_random_family(r: &mut Report) {
    let seeds: Vec<String> = (1..=SEEDS).map(|s| s.to_string()).collect();
    let cfg = config(&format!(r#"{{"alpha": 1.0, "n_max": 50, "seeds": [{}]}}"#, seeds.join(",")));
    let summary = match run(Experiment::RandomExample, &cfg) {
        Ok((_, s)) => s,
        Err(e) => {
            r.line("C6", false, format!("random family: {e}"));
            r.line("C7", false, format!("random family: {e}"));
            return;
        }
    };
    let per_seed = summary["per_seed"].as_array().cloned().unwrap_or_default();
    let n = per_seed.len() as f64;
    let count = |pred: &dyn Fn(&Value) -> bool| per_seed.iter().filter(|s| pred(s)).count() as f64;
    let log_div = count(&|s| s["diamond_trend"] == "LOG_DIVERGENT" && s["diamond_growth"].as_f64().unwrap_or(0.0) >= 0.5);
    let gap = count(&|s| s["gap_rel"].as_f64().unwrap_or(f64::INFINITY) < 0.05);
    let max_growth = per_seed.iter().filter_map(|s| s["diamond_growth"].as_f64()).fold(f64::NEG_INFINITY, f64::max);
    r.line(
        "C6",
        log_div == n && gap / n >= 0.9,
        format!(
            "separation over {n} seeds: log-divergent with growth >= 0.5 in {log_div}/{n} (all; max growth {max_growth:.3}), gap < 5% in {:.0}% (>= 90%)",
            100.0 * gap / n
        ),
    );
    let beta = count(&|s| s["beta_hat"].as_f64().is_some_and(|b| b > 0.05 && b < 0.5));
    let omega = count(&|s| s["omega_at_min_delta"].as_f64().is_some_and(|w| w < 0.05));
    let both = count(&|s| {
        s["beta_hat"].as_f64().is_some_and(|b| b > 0.05 && b < 0.5)
            && s["omega_at_min_delta"].as_f64().is_some_and(|w| w < 0.05)
    });
    let betas: Vec<f64> = per_seed.iter().filter_map(|s| s["beta_hat"].as_f64()).collect();
    let mean_beta = betas.iter().sum::<f64>() / betas.len().max(1) as f64;
    r.line(
        "C7",
        both / n >= 0.9,
        format!(
            "Holder regime: beta_hat in (0.05, 0.5) for {beta}/{n} (mean {mean_beta:.3}), omega(1e-3) < 0.05 for {omega}/{n}; both in {:.0}% (>= 90%)",
            100.0 * both / n
        ),
    );
}

fn c8_counterexample(r: &mut Report) {
    let cfg = config(r#"{"seed": 7, "log_Y": 20}"#);
    match run(Experiment::Counterexample, &cfg) {
        Ok((_, s)) => {
            let inc = s["plus_sums_strictly_increasing"].as_bool().unwrap_or(false);
            let rise = s["plus_sum_increase_mid_to_final"].as_f64().unwrap_or(f64::NAN);
            let ratio = s["minus_product_ratio"].as_f64().unwrap_or(f64::NAN);
            r.line(
                "C8",
                inc && rise >= 1.0 && ratio < 0.5,
                format!(
                    "P+ sums strictly increasing: {inc}; increase e^10 -> e^20 = {rise:.4} (>= 1.0); P- product ratio {ratio:.4} (< 0.5)"
                ),
            );
        }
        Err(e) => r.line("C8", false, format!("counterexample: {e}")),
    }
}

fn c9_lemma(r: &mut Report) {
    let res = (|| {
        let mut bad = Vec::new();
        let mut total = 0;
        for (expected, entries) in [(Trend::Convergent, corpus::convergent()?), (Trend::Oscillating, corpus::oscillating()?)] {
            for (name, m) in entries {
                total += 1;
                let rep = lemma_check(&m, &[0.025, 0.05, 0.1, 0.2], 0.2)?;
                if rep.trend != expected || !rep.consistent {
                    bad.push(name.to_string());
                }
            }
        }
        Ok::<_, beurling_core::Error>((total, bad))
    })();
    match res {
        Ok((total, bad)) => r.line(
            "C9",
            total == 8 && bad.is_empty(),
            format!("lemma suite: {} of {total} step functions keep their trend for eps <= 0.2 {bad:?}", total - bad.len()),
        ),
        Err(e) => r.line("C9", false, format!("lemma suite: {e}")),
    }
}

fn c10_recurrence(r: &mut Report) {
    let u: Vec<f64> = symmetric_uniforms(10, Stream::Sampling, 2000).iter().map(|v| 0.5 * (v + 1.0)).collect();
    let mut it = u.into_iter();
    let mut next = move || it.next().unwrap_or(0.5);
    let system = |gens: &[f64]| -> beurling_core::Result<GenPrimeSystem> {
        let top = gens.iter().copied().fold(2.0, f64::max);
        let atoms = gens.iter().map(|&g| (g, 1.0)).collect();
        Ok(GenPrimeSystem::new(StepFunction::new(0.0, atoms, None, top)?, Reference::Pi, false))
    };
    let mut failures = 0;
    let mut errors = Vec::new();
    for _ in 0..50 {
        let k = (next() * 4.0) as usize;
        let base: Vec<f64> = (0..k).map(|_| (2.0 + next() * 48.0).floor()).collect();
        let q = (2.0 + next() * 48.0).floor();
        let x = 1.0 + next() * (1e4 - 1.0);
        let mut ext = base.clone();
        ext.push(q);
        let res = (|| {
            let np = generate(&system(&base)?, 1e4)?;
            let ne = generate(&system(&ext)?, 1e4)?;
            let mut sum = 0.0;
            let mut y = x;
            while y >= 1.0 {
                sum += count(&np, y)?;
                y /= q;
            }
            Ok::<_, beurling_core::Error>(count(&ne, x)? == sum)
        })();
        match res {
            Ok(true) => {}
            Ok(false) => failures += 1,
            Err(e) => errors.push(e.to_string()),
        }
    }
    r.line(
        "C10",
        failures == 0 && errors.is_empty(),
        format!("recurrence oracle: {failures} mismatches and {} errors in 50 systems", errors.len()),
    );
}

fn c11_determinism(r: &mut Report) {
    let cases = [
        (Experiment::Density, r#"{"X": 100000}"#),
        (Experiment::Diamond, r#"{"system": {"kind": "random_sign", "params": {"alpha": 1.0, "n_max": 30}, "seed": 5}}"#),
        (Experiment::RandomExample, r#"{"seeds": [1, 2], "n_max": 30}"#),
        (Experiment::Counterexample, r#"{"seed": 7, "log_Y": 12}"#),
        (Experiment::Smooth, r#"{}"#),
        (Experiment::Verify, r#"{"seed": 7}"#),
        (Experiment::Oscillate, r#"{"seed": 7, "X": 1000000}"#),
    ];
    let mut bad = Vec::new();
    for (exp, text) in cases {
        let cfg = config(text);
        match (run(exp, &cfg), run(exp, &cfg)) {
            (Ok((h1, _)), Ok((h2, _))) if h1 == h2 => {}
            (Ok(_), Ok(_)) => bad.push(format!("{} hash differs", exp.name())),
            (Err(e), _) | (_, Err(e)) => bad.push(format!("{}: {e}", exp.name())),
        }
    }
    r.line("C11", bad.is_empty(), format!("determinism over {} experiments {bad:?}", cases.len()));
}

fn main() {
    let mut r = Report { failed: 0 };
    c1_reference_density(&mut r);
    c2_removed_primes(&mut r);
    c3_chain(&mut r);
    c4_side_agreement(&mut r);
    c5_reference_limit(&mut r);
    c6_c7_random_family(&mut r);
    c8_counterexample(&mut r);
    c9_lemma(&mut r);
    c10_recurrence(&mut r);
    c11_determinism(&mut r);
    if r.failed > 0 {
        println!("{} criteria failed", r.failed);
        std::process::exit(1);
    }
}
