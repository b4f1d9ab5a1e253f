//! One function per experiment. Each writes its files and returns a summary
//! plus the list of failed expectations.

use beurling_core::analytic::{
    diamond_integral, diamond_integral_between, geometric_deltas, holder_modulus, sample_line, DiamondReport,
    DiamondTrend, Which,
};
use beurling_core::lattice::{density_estimate, generate, log_grid, partial_density_product, IntegerMultiset, PartialProduct, Trend};
use beurling_core::primes::{
    alternate_by_swing, alternate_system, block_coinflip_system, minus_system, plus_system, random_sign_system, usual_primes, Built,
    GenPrimeSystem, Perturbation, Reference,
};
use beurling_core::smoothing::{
    density_via_c1, derivative_mass, fourier_counting, smooth_counting, line_residual, LogCounting, KERNEL_SDS,
    RESIDUAL_DAMPING,
};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{Expect, Experiment, ExperimentConfig};
use crate::output::OutputDir;
use crate::{verify, CliError};

pub struct Outcome {
    pub summary: Value,
    pub failures: Vec<String>,
}

pub fn run(exp: Experiment, cfg: &ExperimentConfig, out: &mut OutputDir) -> Result<Outcome, CliError> {
    match exp {
        Experiment::Density => density(cfg, out),
        Experiment::Diamond => diamond(cfg, out),
        Experiment::RandomExample => random_example(cfg, out),
        Experiment::Counterexample => counterexample(cfg, out),
        Experiment::Smooth => smooth(cfg, out),
        Experiment::Verify => verify::run(cfg, out),
        Experiment::Oscillate => oscillate(cfg, out),
    }
}

fn build(cfg: &ExperimentConfig) -> Result<Option<Built>, CliError> {
    cfg.system.as_ref().map(|d| d.build().map_err(CliError::from)).transpose()
}

fn atomic_system(built: Built) -> Result<GenPrimeSystem, CliError> {
    match built {
        Built::System(s) => Ok(s),
        Built::Perturbation(_) => Err(CliError::Config("at 'system': this experiment needs a prime system".into())),
    }
}

fn perturbation_of(built: Built) -> Result<Perturbation, CliError> {
    match built {
        Built::System(s) => Ok(Perturbation::of_system(&s)?),
        Built::Perturbation(p) => Ok(p),
    }
}

fn check_expect(expect: Option<&Expect>, trend: Trend, estimate: f64, failures: &mut Vec<String>) {
    let Some(e) = expect else { return };
    if let Some(t) = &e.trend {
        let got = serde_json::to_value(trend).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default();
        if &got != t {
            failures.push(format!("expected trend {t}, got {got}"));
        }
    }
    if let Some(v) = e.estimate {
        let tol = e.estimate_tol.unwrap_or(0.0);
        if (estimate - v).abs() > tol {
            failures.push(format!("expected estimate {v} ± {tol}, got {estimate}"));
        }
    }
}

/// `N(x)/x` on the classification grid.
fn ratio_rows(n: &IntegerMultiset) -> Vec<Vec<f64>> {
    log_grid(0.0, n.horizon().ln())
        .into_iter()
        .map(|u| vec![u, n.count_log(u) * (-u).exp()])
        .collect()
}

fn density(cfg: &ExperimentConfig, out: &mut OutputDir) -> Result<Outcome, CliError> {
    let x = cfg.x.unwrap_or(1e6);
    let p = match build(cfg)? {
        Some(b) => atomic_system(b)?,
        None => usual_primes(x)?,
    };
    let n = generate(&p, x)?;
    let rep = density_estimate(&n);
    out.write_csv("density.csv", &["logx", "ratio"], &ratio_rows(&n))?;
    if cfg.write_integers.unwrap_or(false) {
        out.write_with("integers.csv", |w| n.write_csv(w))?;
    }
    out.write_json("density_report.json", &rep)?;
    let mut failures = Vec::new();
    check_expect(cfg.expect.as_ref(), rep.trend, rep.estimate, &mut failures);
    Ok(Outcome {
        summary: json!({
            "X": x,
            "N(X)": n.count_log(x.ln()),
            "distinct_values": n.len(),
            "estimate": rep.estimate,
            "trend": rep.trend,
            "window": rep.window,
            "warnings": p.warnings(),
        }),
        failures,
    })
}

/// `e^n` for `n = 1..⌊log top⌋`, then `top` itself.
fn block_grid(top: f64) -> Vec<f64> {
    let mut g: Vec<f64> = (1..=(top.ln() * (1.0 + 1e-12)).floor() as u32).map(|n| (n as f64).exp()).collect();
    if g.last().map_or(true, |&l| top > l * (1.0 + 1e-12)) {
        g.push(top);
    }
    g
}

fn diamond_rows(r: &DiamondReport) -> Vec<Vec<f64>> {
    r.points.iter().map(|p| vec![p[0].ln(), p[1]]).collect()
}

fn diamond(cfg: &ExperimentConfig, out: &mut OutputDir) -> Result<Outcome, CliError> {
    let built = build(cfg)?.ok_or_else(|| CliError::Config("at 'system': DIAMOND needs a system".into()))?;
    let a = perturbation_of(built)?;
    let top = match cfg.horizon_y() {
        Some(y) => y.min(a.horizon),
        None if a.horizon.is_finite() => a.horizon,
        None => return Err(CliError::Config("at 'Y': the system has no finite horizon".into())),
    };
    let grid = cfg.y_grid.clone().unwrap_or_else(|| block_grid(top));
    let r = diamond_integral(&a, &grid)?;
    out.write_csv("diamond.csv", &["logY", "partial_integral"], &diamond_rows(&r))?;
    out.write_json("diamond_report.json", &r)?;
    Ok(Outcome {
        summary: json!({ "trend": r.trend, "slope": r.slope, "final": r.points.last().map(|p| p[1]) }),
        failures: vec![],
    })
}

#[derive(Serialize)]
struct SeedResult {
    seed: u64,
    diamond_trend: DiamondTrend,
    diamond_slope: Option<f64>,
    /// `(I(e^{n_max}) − I(e^{n_max/2})) / I(e^{n_max/2})`.
    diamond_growth: f64,
    density_estimate: f64,
    c1: f64,
    gap_rel: f64,
    beta_hat: Option<f64>,
    omega_at_min_delta: f64,
    omega_integral_partial: f64,
    residuals: Vec<f64>,
    residual_warning: Option<String>,
}

struct SeedFiles {
    diamond: Vec<Vec<f64>>,
    omega: Vec<Vec<f64>>,
    residual: Vec<Vec<f64>>,
}

fn random_seed(cfg: &ExperimentConfig, seed: u64) -> Result<(SeedResult, SeedFiles), CliError> {
    let alpha = cfg.alpha.unwrap_or(1.0);
    let n_max = cfg.n_max.unwrap_or(50);
    let eps = cfg.eps_list.as_ref().and_then(|v| v.first().copied()).unwrap_or(0.1);
    let u_probe = cfg.u_probe.unwrap_or(12.0);
    let t_max = cfg.t.unwrap_or(50.0);
    let deltas = cfg.deltas.clone().unwrap_or_else(|| geometric_deltas(1e-3, 1.0, 13));
    let d_min = deltas.iter().copied().fold(f64::INFINITY, f64::min);
    let dt = cfg.dt.unwrap_or(d_min / 4.0);
    let u_list = cfg.u_grid.clone().unwrap_or_else(|| vec![5.0, 10.0, 15.0, 20.0]);

    let a = random_sign_system(alpha, n_max, seed)?;
    let half = (n_max as f64 / 2.0).floor();
    let mut grid = block_grid(a.horizon);
    grid.push(half.exp());
    let dia = diamond_integral(&a, &grid)?;
    let i_half = dia.points.last().map_or(0.0, |p| p[1]);
    let i_top = dia.points[grid.len() - 2][1];
    let gap = density_via_c1(&a, eps, u_probe)?;
    let line = sample_line(&a, Which::A, 1.0, t_max, dt)?;
    let m = holder_modulus(&line, &deltas)?;
    let res = line_residual(&a, &u_list, RESIDUAL_DAMPING)?;

    let files = SeedFiles {
        diamond: dia.points[..grid.len() - 1].iter().map(|p| vec![p[0].ln(), p[1]]).collect(),
        omega: m.deltas.iter().zip(&m.omega).map(|(d, w)| vec![d.ln(), w.max(f64::MIN_POSITIVE).ln()]).collect(),
        residual: res.u.iter().zip(&res.residuals).map(|(u, r)| vec![*u, *r]).collect(),
    };
    let result = SeedResult {
        seed,
        diamond_trend: dia.trend,
        diamond_slope: dia.slope,
        diamond_growth: if i_half > 0.0 { (i_top - i_half) / i_half } else { f64::INFINITY },
        density_estimate: gap.estimate,
        c1: gap.reference_c1,
        gap_rel: gap.gap / gap.reference_c1.abs(),
        beta_hat: m.beta_hat,
        omega_at_min_delta: m.omega_at(d_min).unwrap_or(f64::NAN),
        omega_integral_partial: m.omega_integral_partial,
        residuals: res.residuals,
        residual_warning: res.warning,
    };
    Ok((result, files))
}

fn random_example(cfg: &ExperimentConfig, out: &mut OutputDir) -> Result<Outcome, CliError> {
    let seeds = cfg.seed_list("RANDOM_EXAMPLE")?;
    // cells run in parallel; results are merged in seed order
    let cells: Vec<Result<(SeedResult, SeedFiles), CliError>> = seeds.par_iter().map(|&s| random_seed(cfg, s)).collect();
    let mut results = Vec::with_capacity(cells.len());
    for cell in cells {
        let (r, f) = cell?;
        let tag = r.seed;
        out.write_csv(&format!("diamond_seed{tag}.csv"), &["logY", "partial_integral"], &f.diamond)?;
        out.write_csv(&format!("omega_seed{tag}.csv"), &["log_delta", "log_omega"], &f.omega)?;
        out.write_csv(&format!("residual_seed{tag}.csv"), &["u", "residual"], &f.residual)?;
        results.push(r);
    }
    let gap_tol = cfg.tolerances.density_gap_rel;
    let n = results.len() as f64;
    let frac = |pred: &dyn Fn(&SeedResult) -> bool| results.iter().filter(|r| pred(r)).count() as f64 / n;
    let summary = json!({
        "alpha": cfg.alpha.unwrap_or(1.0),
        "n_max": cfg.n_max.unwrap_or(50),
        "seeds": results.len(),
        "fraction_log_divergent": frac(&|r| r.diamond_trend == DiamondTrend::LogDivergent),
        "fraction_growth_at_least_half": frac(&|r| r.diamond_growth >= 0.5),
        "fraction_gap_below_tol": frac(&|r| r.gap_rel < gap_tol),
        "fraction_beta_in_range": frac(&|r| r.beta_hat.is_some_and(|b| b > 0.05 && b < 0.5)),
        "fraction_omega_small": frac(&|r| r.omega_at_min_delta < 0.05),
        "per_seed": results,
    });
    out.write_json("random_example.json", &summary)?;
    Ok(Outcome { summary, failures: vec![] })
}

fn counterexample(cfg: &ExperimentConfig, out: &mut OutputDir) -> Result<Outcome, CliError> {
    let y = cfg.horizon_y().unwrap_or(20f64.exp());
    let p = match build(cfg)? {
        Some(b) => atomic_system(b)?,
        None => block_coinflip_system(y, cfg.require_seed("COUNTEREXAMPLE")?)?,
    };
    let y = p.truncation;
    let p1 = usual_primes(y)?;
    let plus = plus_system(&p, &p1)?;
    let minus = minus_system(&p, &p1)?;
    drop(p);

    let n_top = (y.ln() * (1.0 + 1e-12)).floor() as usize;
    let blocks: Vec<f64> = (1..=n_top).map(|n| (n as f64).exp()).collect();
    let fine: Vec<f64> = log_grid(0.5, y.ln()).into_iter().map(f64::exp).collect();
    let plus_blocks = partial_density_product(&plus, &p1, &blocks)?;
    let minus_blocks = partial_density_product(&minus, &p1, &blocks)?;
    let plus_fine = partial_density_product(&plus, &p1, &fine)?;
    let minus_fine = partial_density_product(&minus, &p1, &fine)?;
    let dia_plus = diamond_integral_between(&plus.counting, &p1.counting, &blocks)?;
    let dia_minus = diamond_integral_between(&minus.counting, &p1.counting, &blocks)?;

    let rows = |v: &[PartialProduct]| -> Vec<Vec<f64>> {
        v.iter().map(|q| vec![q.y.ln(), q.value, q.reciprocal_sum]).collect()
    };
    out.write_csv("plus_product.csv", &["logY", "value", "reciprocal_sum"], &rows(&plus_fine))?;
    out.write_csv("minus_product.csv", &["logY", "value", "reciprocal_sum"], &rows(&minus_fine))?;
    out.write_csv("plus_blocks.csv", &["logY", "value", "reciprocal_sum"], &rows(&plus_blocks))?;
    out.write_csv("minus_blocks.csv", &["logY", "value", "reciprocal_sum"], &rows(&minus_blocks))?;
    out.write_csv("diamond_plus.csv", &["logY", "partial_integral"], &diamond_rows(&dia_plus))?;
    out.write_csv("diamond_minus.csv", &["logY", "partial_integral"], &diamond_rows(&dia_minus))?;

    let sums: Vec<f64> = plus_blocks.iter().map(|q| q.reciprocal_sum).collect();
    let at = |v: &[PartialProduct], n: usize| v.get(n.wrapping_sub(1)).map(|q| q.reciprocal_sum);
    let mid = n_top / 2;
    let minus_first = minus_blocks.first().map_or(1.0, |q| q.value);
    let minus_last = minus_blocks.last().map_or(1.0, |q| q.value);
    let summary = json!({
        "Y": y,
        "log_Y": y.ln(),
        "plus_sums_strictly_increasing": sums.windows(2).all(|w| w[1] > w[0]),
        "plus_sum_mid": at(&plus_blocks, mid),
        "plus_sum_final": at(&plus_blocks, n_top),
        "plus_sum_increase_mid_to_final": match (at(&plus_blocks, mid), at(&plus_blocks, n_top)) {
            (Some(a), Some(b)) => Some(b - a),
            _ => None,
        },
        "plus_product_final": plus_blocks.last().map(|q| q.value),
        "minus_product_initial": minus_first,
        "minus_product_final": minus_last,
        "minus_product_ratio": minus_last / minus_first,
        "diamond_plus_trend": dia_plus.trend,
        "diamond_minus_trend": dia_minus.trend,
        "coins": plus.metadata.get("provenance").cloned(),
    });
    out.write_json("counterexample.json", &summary)?;
    Ok(Outcome { summary, failures: vec![] })
}

fn smooth(cfg: &ExperimentConfig, out: &mut OutputDir) -> Result<Outcome, CliError> {
    let a = match build(cfg)? {
        Some(b) => perturbation_of(b)?,
        None => Perturbation::zero(Reference::Tau),
    };
    let eps_list = cfg.eps_list.clone().unwrap_or_else(|| vec![0.1]);
    let sigmas = cfg.sigma_list.clone().unwrap_or_else(|| vec![1.5]);
    let u_grid = cfg.u_grid.clone().unwrap_or_else(|| (0..=16).map(|k| 2.0 + 0.5 * k as f64).collect());
    let u_top = u_grid.iter().copied().fold(0.0, f64::max);
    let e_top = eps_list.iter().copied().fold(0.0, f64::max);
    let n = LogCounting::of_perturbation(&a, u_top + KERNEL_SDS * e_top)?;
    let u_probe = cfg.u_probe.unwrap_or(u_top);
    let tol = &cfg.tolerances;

    let mut rows = Vec::new();
    let mut per_eps = Vec::new();
    let mut failures = Vec::new();
    for &eps in &eps_list {
        let conv = smooth_counting(&n, eps, &u_grid, 1.0)?;
        rows.extend(conv.u_grid.iter().zip(&conv.values).map(|(u, v)| vec![*u, *v, eps]));
        out.write_with(&format!("smooth_convolution_eps{eps}.csv"), |w| conv.write_csv(w))?;
        let mut agreement = Vec::new();
        for &sigma in &sigmas {
            let f = fourier_counting(&a, sigma, eps, &u_grid)?;
            let c = smooth_counting(&n, eps, &u_grid, sigma)?;
            let rel = f
                .values
                .iter()
                .zip(&c.values)
                .map(|(x, y)| (x - y).abs() / y.abs().max(f64::MIN_POSITIVE))
                .fold(0.0, f64::max);
            if rel > tol.side_rel {
                failures.push(format!("side agreement at eps={eps}, sigma={sigma}: {rel:e} > {:e}", tol.side_rel));
            }
            out.write_with(&format!("smooth_fourier_eps{eps}_sigma{sigma}.csv"), |w| f.write_csv(w))?;
            agreement.push(json!({ "sigma": sigma, "max_rel_diff": rel }));
        }
        let mass = derivative_mass(&a, eps, -1.5, u_top.max(40.0), 0.01)?;
        if mass.error > tol.mass {
            failures.push(format!("mass identity at eps={eps}: error {:e} > {:e}", mass.error, tol.mass));
        }
        let gap = density_via_c1(&a, eps, u_probe)?;
        per_eps.push(json!({ "eps": eps, "side_agreement": agreement, "mass": mass, "density": gap }));
    }
    out.write_csv("smooth.csv", &["u", "value", "eps"], &rows)?;
    let summary = json!({ "u_probe": u_probe, "per_eps": per_eps });
    out.write_json("smooth_report.json", &summary)?;
    Ok(Outcome { summary, failures })
}

/// Log-density swing between switches of the adaptive alternation.
const DEFAULT_SWING: f64 = 0.1;

fn oscillate(cfg: &ExperimentConfig, out: &mut OutputDir) -> Result<Outcome, CliError> {
    let x = cfg.x.unwrap_or(1e7);
    let p = match build(cfg)? {
        Some(b) => atomic_system(b)?,
        None => block_coinflip_system(x, cfg.require_seed("OSCILLATE")?)?,
    };
    let p1 = usual_primes(p.truncation)?;
    let (plus, minus) = (plus_system(&p, &p1)?, minus_system(&p, &p1)?);
    let (alt, rule) = match cfg.block_log_len {
        Some(block) => (alternate_system(&plus, &minus, block)?, json!({ "block_log_len": block })),
        None => {
            let swing = cfg.swing.unwrap_or(DEFAULT_SWING);
            let alt = alternate_by_swing(&plus, &minus, &p1, swing)?;
            let switches = alt.metadata.get("switches").cloned().unwrap_or(Value::Null);
            (alt, json!({ "swing": swing, "switches": switches }))
        }
    };
    let n = generate(&alt, x)?;
    let rep = density_estimate(&n);
    let means: Vec<f64> = rep.residuals.iter().skip(1).map(|r| r[1]).collect();
    let liminf = means.iter().copied().fold(f64::INFINITY, f64::min);
    let limsup = means.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    out.write_csv("density.csv", &["logx", "ratio"], &ratio_rows(&n))?;
    let decade_rows: Vec<Vec<f64>> = rep.residuals.iter().map(|r| vec![r[0].ln(), r[1]]).collect();
    out.write_csv("decade_means.csv", &["logx", "mean_ratio"], &decade_rows)?;
    out.write_json("density_report.json", &rep)?;
    let mut failures = Vec::new();
    check_expect(cfg.expect.as_ref(), rep.trend, rep.estimate, &mut failures);
    Ok(Outcome {
        summary: json!({
            "X": x,
            "alternation": rule,
            "trend": rep.trend,
            "liminf_estimate": liminf,
            "limsup_estimate": limsup,
            "estimate": rep.estimate,
            "N(X)": n.count_log(x.ln()),
        }),
        failures,
    })
}
