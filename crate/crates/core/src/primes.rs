//! Prime systems: usual primes, random-sign perturbations, block coin-flips,
//! P⁺/P⁻ constructions and bounded modifications.

use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::counting::{combine_max, combine_min, CountingDoc, SignedMeasure, SmoothPart, StepFunction};
use crate::error::{domain, Error, Result};
use crate::rng::{bits, symmetric_uniforms, Stream};
use crate::sieve::{for_each_prime, SIEVE_MAX};

/// Default bound for the finite-horizon surrogate of `P(y) = o(y)`.
pub const O_RATIO_BOUND: f64 = 0.5;

/// Largest `n` for which `e^n` is a finite double with room to spare.
pub const MAX_LOG_LOCATION: u32 = 700;

/// The reference prime counting function `P₀`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Reference {
    /// `τ(y)`, with `N₀(x) = x` and `Z₀(s) = s/(s−1)`.
    Tau,
    /// `π(y)`, with the natural numbers and `ζ(s)`.
    Pi,
}

/// A prime counting function with its horizon and bookkeeping.
#[derive(Clone, Debug)]
pub struct GenPrimeSystem {
    pub counting: StepFunction,
    pub truncation: f64,
    pub free: bool,
    pub reference: Reference,
    pub metadata: Map<String, Value>,
}

impl GenPrimeSystem {
    pub fn new(counting: StepFunction, reference: Reference, free: bool) -> Self {
        let truncation = counting.horizon();
        let mut sys = Self { counting, truncation, free, reference, metadata: Map::new() };
        sys.check_o_ratio(O_RATIO_BOUND);
        sys
    }

    fn check_o_ratio(&mut self, bound: f64) {
        if !self.truncation.is_finite() {
            return;
        }
        let ratio = self.counting.value(self.truncation) / self.truncation;
        self.metadata.insert("o_ratio".into(), json!(ratio));
        if ratio > bound {
            self.warn(format!("P(Y)/Y = {ratio:.4} exceeds {bound}"));
        }
    }

    pub fn warn(&mut self, msg: String) {
        let w = self
            .metadata
            .entry("warnings")
            .or_insert_with(|| Value::Array(Vec::new()));
        if let Value::Array(v) = w {
            v.push(Value::String(msg));
        }
    }

    pub fn warnings(&self) -> Vec<String> {
        match self.metadata.get("warnings") {
            Some(Value::Array(v)) => v.iter().filter_map(|x| x.as_str().map(String::from)).collect(),
            _ => Vec::new(),
        }
    }

    pub fn is_atomic(&self) -> bool {
        self.counting.is_atomic()
    }

    /// Generators as (location, weight) pairs.
    pub fn generators(&self) -> Vec<(f64, f64)> {
        self.counting.atoms().collect()
    }
}

/// `a(y) = P(y) − P₀(y)` as a signed measure relative to a declared reference.
#[derive(Clone, Debug)]
pub struct Perturbation {
    pub measure: SignedMeasure,
    pub reference: Reference,
    pub horizon: f64,
    pub metadata: Map<String, Value>,
}

impl Perturbation {
    pub fn new(measure: SignedMeasure, reference: Reference, horizon: f64) -> Self {
        Self { measure, reference, horizon, metadata: Map::new() }
    }

    pub fn zero(reference: Reference) -> Self {
        Self::new(SignedMeasure::zero(), reference, f64::INFINITY)
    }

    /// Atomic perturbation relative to τ.
    pub fn atomic(atoms: Vec<(f64, f64)>) -> Result<Self> {
        let horizon = atoms.iter().map(|a| a.0).fold(1.0, f64::max);
        Ok(Self::new(SignedMeasure::from_atoms(atoms, None)?, Reference::Tau, horizon))
    }

    /// The induced function `a(y)`.
    pub fn a(&self, y: f64) -> f64 {
        self.measure.cumulative(y)
    }

    pub fn is_atomic(&self) -> bool {
        self.measure.is_atomic()
    }

    /// `da = dP − dP₀` for a system, up to its truncation.
    pub fn of_system(p: &GenPrimeSystem) -> Result<Self> {
        let y = p.truncation;
        let mut atoms: Vec<(f64, f64)> = p.counting.atoms().collect();
        let mut smooth = p.counting.smooth().cloned();
        match p.reference {
            Reference::Pi => {
                if !y.is_finite() {
                    return domain("a PI-relative perturbation needs a finite horizon");
                }
                for_each_prime(y.floor() as u64, |q| atoms.push((q as f64, -1.0)))?;
            }
            Reference::Tau => {
                smooth = Some(match smooth {
                    None => SmoothPart::Tau { scale: -1.0 },
                    Some(SmoothPart::Tau { scale }) => SmoothPart::Tau { scale: scale - 1.0 },
                    Some(SmoothPart::Ramps(_)) => {
                        return Err(Error::Unsupported("ramp prime part relative to tau".into()))
                    }
                });
                if let Some(SmoothPart::Tau { scale }) = smooth {
                    if scale == 0.0 {
                        smooth = None;
                    }
                }
            }
        }
        let mut out = Self::new(SignedMeasure::from_atoms(atoms, smooth)?, p.reference, y);
        out.metadata.insert("source".into(), json!("of_system"));
        Ok(out)
    }
}

/// The rational primes up to `Y`.
pub fn usual_primes(y: f64) -> Result<GenPrimeSystem> {
    if !(y >= 2.0) {
        return domain(format!("usual_primes needs Y >= 2, got {y}"));
    }
    if y > SIEVE_MAX as f64 {
        return Err(Error::Capacity {
            what: format!("usual_primes Y = {y} beyond sieve bound"),
            reached: SIEVE_MAX as f64,
        });
    }
    let mut locs = Vec::new();
    for_each_prime(y.floor() as u64, |p| locs.push(p as f64))?;
    let mut sys = GenPrimeSystem::new(StepFunction::from_unit_atoms(locs, y)?, Reference::Pi, true);
    sys.metadata.insert("kind".into(), json!("usual"));
    Ok(sys)
}

/// `da = Σ_{n ≤ n_max} ± e^n n^{−α} δ_{e^n}` with seeded fair signs, relative to τ.
pub fn random_sign_system(alpha: f64, n_max: u32, seed: u64) -> Result<Perturbation> {
    if n_max < 1 {
        return domain("random_sign_system needs n_max >= 1");
    }
    if n_max > MAX_LOG_LOCATION {
        return Err(Error::Capacity {
            what: format!("atom e^{n_max} overflows double precision"),
            reached: (MAX_LOG_LOCATION as f64).exp(),
        });
    }
    if !alpha.is_finite() {
        return domain("alpha must be finite");
    }
    let signs = bits(seed, Stream::Signs, n_max as usize);
    let atoms = (1..=n_max)
        .map(|n| {
            let nf = n as f64;
            let w = (nf - alpha * nf.ln()).exp();
            (nf, if signs[n as usize - 1] { w } else { -w })
        })
        .collect();
    let mut p = Perturbation::new(
        SignedMeasure::from_log_atoms(atoms)?,
        Reference::Tau,
        (n_max as f64).exp(),
    );
    p.metadata.insert("kind".into(), json!("random_sign"));
    p.metadata.insert("alpha".into(), json!(alpha));
    p.metadata.insert("n_max".into(), json!(n_max));
    p.metadata.insert("seed".into(), json!(seed));
    if !(alpha > 0.5 && alpha <= 1.0) {
        p.metadata.insert(
            "warnings".into(),
            json!([format!("alpha = {alpha} outside (1/2, 1]")]),
        );
    }
    Ok(p)
}

/// Coin for block `n`: `true` doubles the block, `false` suppresses it.
pub fn block_coins(seed: u64, blocks: usize) -> Vec<bool> {
    bits(seed, Stream::Coins, blocks)
}

/// Usual primes where each block `[e^n, e^{n+1}) ∩ [2, Y]` is either doubled
/// or suppressed by a seeded coin. Reference π.
pub fn block_coinflip_system(y: f64, seed: u64) -> Result<GenPrimeSystem> {
    let blocks = block_count(y)?;
    let coins = block_coins(seed, blocks);
    let mut sys = block_coinflip_with_coins(y, &coins)?;
    sys.metadata.insert("seed".into(), json!(seed));
    Ok(sys)
}

fn block_count(y: f64) -> Result<usize> {
    if !(y >= std::f64::consts::E) {
        return domain(format!("block_coinflip_system needs Y >= e, got {y}"));
    }
    Ok(y.ln().floor() as usize + 1)
}

/// As [`block_coinflip_system`] with explicit coins (one per block, from n = 0).
pub fn block_coinflip_with_coins(y: f64, coins: &[bool]) -> Result<GenPrimeSystem> {
    let blocks = block_count(y)?;
    if coins.len() < blocks {
        return domain(format!("need {blocks} coins, got {}", coins.len()));
    }
    if y > SIEVE_MAX as f64 {
        return Err(Error::Capacity { what: "block_coinflip beyond sieve bound".into(), reached: SIEVE_MAX as f64 });
    }
    let mut locs = Vec::new();
    let mut cum = Vec::new();
    let mut acc = 0.0;
    for_each_prime(y.floor() as u64, |p| {
        let n = (p as f64).ln().floor() as usize;
        if coins[n] {
            acc += 2.0;
            locs.push(p as f64);
            cum.push(acc);
        }
    })?;
    let counting = StepFunction::from_parts_unchecked(0.0, locs, cum, y);
    let mut sys = GenPrimeSystem::new(counting, Reference::Pi, false);
    sys.metadata.insert("kind".into(), json!("block_coinflip"));
    sys.metadata.insert("coins".into(), json!(coins[..blocks].iter().map(|&c| u8::from(c)).collect::<Vec<_>>()));
    let last = blocks - 1;
    if y < ((last + 1) as f64).exp() {
        sys.metadata.insert(
            "final_block_truncated".into(),
            json!({ "block": last, "covered_to": y }),
        );
    }
    Ok(sys)
}

fn check_common_horizon(p: &GenPrimeSystem, p1: &GenPrimeSystem) -> Result<()> {
    if p.truncation != p1.truncation {
        return domain(format!(
            "mismatched horizons {} and {}",
            p.truncation, p1.truncation
        ));
    }
    Ok(())
}

/// `P⁺ = max(P, P₁)`, so that `P⁺ − P₁ = (P − P₁)⁺`.
pub fn plus_system(p: &GenPrimeSystem, p1: &GenPrimeSystem) -> Result<GenPrimeSystem> {
    check_common_horizon(p, p1)?;
    let mut sys = GenPrimeSystem::new(combine_max(&p.counting, &p1.counting)?, Reference::Pi, false);
    sys.metadata.insert("kind".into(), json!("plus"));
    sys.metadata.insert("provenance".into(), provenance(p, p1));
    Ok(sys)
}

/// `P⁻ = min(P, P₁)`, so that `P₁ − P⁻ = (P − P₁)⁻`.
pub fn minus_system(p: &GenPrimeSystem, p1: &GenPrimeSystem) -> Result<GenPrimeSystem> {
    check_common_horizon(p, p1)?;
    let mut sys = GenPrimeSystem::new(combine_min(&p.counting, &p1.counting)?, Reference::Pi, false);
    sys.metadata.insert("kind".into(), json!("minus"));
    sys.metadata.insert("provenance".into(), provenance(p, p1));
    Ok(sys)
}

fn provenance(p: &GenPrimeSystem, p1: &GenPrimeSystem) -> Value {
    json!({
        "P": p.metadata.get("kind").cloned().unwrap_or(Value::Null),
        "P1": p1.metadata.get("kind").cloned().unwrap_or(Value::Null),
        "horizon": p.truncation,
    })
}

/// The set agreeing with `P⁺` on `log y ∈ [2kL, (2k+1)L)` and with `P⁻` on
/// the complementary intervals, built atom by atom so it stays a counting
/// function.
pub fn alternate_system(plus: &GenPrimeSystem, minus: &GenPrimeSystem, block_log_len: f64) -> Result<GenPrimeSystem> {
    check_common_horizon(plus, minus)?;
    if !(block_log_len > 0.0 && block_log_len.is_finite()) {
        return domain(format!("block length {block_log_len} must be positive"));
    }
    if !plus.is_atomic() || !minus.is_atomic() {
        return Err(Error::Unsupported("alternation of systems with a smooth part".into()));
    }
    let on_plus = |loc: f64| ((loc.ln() / block_log_len).floor() as i64) % 2 == 0;
    let mut atoms: Vec<(f64, f64)> = plus.counting.atoms().filter(|a| on_plus(a.0)).collect();
    atoms.extend(minus.counting.atoms().filter(|a| !on_plus(a.0)));
    let counting = StepFunction::new(0.0, atoms, None, plus.truncation)?;
    let mut sys = GenPrimeSystem::new(counting, plus.reference, false);
    sys.metadata.insert("kind".into(), json!("alternate"));
    sys.metadata.insert("block_log_len".into(), json!(block_log_len));
    sys.metadata.insert("provenance".into(), provenance(plus, minus));
    Ok(sys)
}

/// Alternation on adaptively chosen intervals: follows `P⁺` until the log of
/// the partial density product relative to `P₁` has risen by `swing` since
/// the last switch, then `P⁻` until it has fallen by `swing`, and so on. Switch locations are
/// recorded in the metadata under `"switches"`.
pub fn alternate_by_swing(
    plus: &GenPrimeSystem,
    minus: &GenPrimeSystem,
    p1: &GenPrimeSystem,
    swing: f64,
) -> Result<GenPrimeSystem> {
    check_common_horizon(plus, minus)?;
    check_common_horizon(plus, p1)?;
    if !(swing > 0.0 && swing.is_finite()) {
        return domain(format!("swing {swing} must be positive"));
    }
    if !plus.is_atomic() || !minus.is_atomic() || !p1.is_atomic() {
        return Err(Error::Unsupported("alternation of systems with a smooth part".into()));
    }
    // (location, source, weight); source 0 = P⁺, 1 = P⁻, 2 = P₁
    let mut events: Vec<(f64, u8, f64)> = Vec::new();
    events.extend(plus.counting.atoms().map(|(l, w)| (l, 0, w)));
    events.extend(minus.counting.atoms().map(|(l, w)| (l, 1, w)));
    events.extend(p1.counting.atoms().map(|(l, w)| (l, 2, w)));
    events.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let mut on_plus = true;
    let mut level = 0.0;
    let mut anchor = 0.0;
    let mut atoms = Vec::new();
    let mut switches = Vec::new();
    let mut i = 0;
    while i < events.len() {
        let loc = events[i].0;
        let term = -(-1.0 / loc).ln_1p();
        while i < events.len() && events[i].0 == loc {
            let (_, src, w) = events[i];
            match (src, on_plus) {
                (0, true) | (1, false) => {
                    atoms.push((loc, w));
                    level += w * term;
                }
                (2, _) => level -= w * term,
                _ => {}
            }
            i += 1;
        }
        if (on_plus && level >= anchor + swing) || (!on_plus && level <= anchor - swing) {
            on_plus = !on_plus;
            anchor = level;
            switches.push(loc);
        }
    }
    let counting = StepFunction::new(0.0, atoms, None, plus.truncation)?;
    let mut sys = GenPrimeSystem::new(counting, plus.reference, false);
    sys.metadata.insert("kind".into(), json!("alternate_by_swing"));
    sys.metadata.insert("swing".into(), json!(swing));
    sys.metadata.insert("switches".into(), json!(switches));
    sys.metadata.insert("provenance".into(), provenance(plus, minus));
    Ok(sys)
}

/// `P + g` where `g(y) = offset + jumps((1, y])` is bounded.
///
/// Merged atom weights must stay nonnegative; the first negative one is reported.
pub fn perturb_bounded(p: &GenPrimeSystem, offset: f64, jumps: &SignedMeasure) -> Result<GenPrimeSystem> {
    if !jumps.is_atomic() {
        return Err(Error::Unsupported("bounded modification with a smooth part".into()));
    }
    if !offset.is_finite() {
        return domain("offset must be finite");
    }
    let mut merged: Vec<(f64, f64)> = p.counting.atoms().collect();
    merged.extend(jumps.atoms().iter().map(|a| (a.loc, a.weight)));
    merged.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut atoms: Vec<(f64, f64)> = Vec::with_capacity(merged.len());
    for (loc, w) in merged {
        match atoms.last_mut() {
            Some(last) if last.0 == loc => last.1 += w,
            _ => atoms.push((loc, w)),
        }
    }
    let scale = atoms.iter().map(|a| a.1.abs()).fold(1.0, f64::max);
    let mut kept = Vec::with_capacity(atoms.len());
    for (loc, w) in atoms {
        if w < -1e-12 * scale {
            return domain(format!("P + g decreases at breakpoint {loc} (jump {w})"));
        }
        if w > 1e-12 * scale {
            kept.push((loc, w));
        }
    }
    let mut sup = offset.abs();
    let mut acc = offset;
    for a in jumps.atoms() {
        acc += a.weight;
        sup = sup.max(acc.abs());
    }
    let counting = StepFunction::new(
        p.counting.base() + offset,
        kept,
        p.counting.smooth().cloned(),
        p.truncation,
    )?;
    let mut sys = GenPrimeSystem::new(counting, p.reference, false);
    sys.metadata = p.metadata.clone();
    sys.metadata.insert("sup_g".into(), json!(sup));
    Ok(sys)
}

/// Removes the atoms at the given locations.
pub fn remove_locations(p: &GenPrimeSystem, remove: &[f64]) -> Result<GenPrimeSystem> {
    let mut atoms: Vec<(f64, f64)> = p.counting.atoms().collect();
    for &r in remove {
        let before = atoms.len();
        atoms.retain(|a| a.0 != r);
        if atoms.len() == before {
            return domain(format!("no atom at {r}"));
        }
    }
    let counting = StepFunction::new(p.counting.base(), atoms, p.counting.smooth().cloned(), p.truncation)?;
    let mut sys = GenPrimeSystem::new(counting, p.reference, p.free);
    sys.metadata = p.metadata.clone();
    sys.metadata.insert("removed".into(), json!(remove));
    Ok(sys)
}

/// Adds unit atoms at the given locations.
pub fn add_locations(p: &GenPrimeSystem, add: &[f64]) -> Result<GenPrimeSystem> {
    let mut atoms: Vec<(f64, f64)> = p.counting.atoms().collect();
    atoms.extend(add.iter().map(|&l| (l, 1.0)));
    let horizon = add.iter().copied().fold(p.truncation, f64::max);
    let counting = StepFunction::new(p.counting.base(), atoms, p.counting.smooth().cloned(), horizon)?;
    let mut sys = GenPrimeSystem::new(counting, p.reference, false);
    sys.metadata = p.metadata.clone();
    sys.metadata.insert("added".into(), json!(add));
    Ok(sys)
}

/// Relative jitter bound used by [`make_free`].
pub const JITTER: f64 = 1e-7;

/// Moves every unit of generator mass to its own location `p·(1 + JITTER·u)`
/// and checks for multiplicative coincidences among products `≤ check_x`
/// (together with `other`, if given).
///
/// Integer weights are required, since each unit becomes one generator.
pub fn make_free(
    p: &GenPrimeSystem,
    other: Option<&GenPrimeSystem>,
    seed: u64,
    check_x: f64,
) -> Result<GenPrimeSystem> {
    if !p.is_atomic() {
        return Err(Error::Unsupported("make_free on a non-atomic system".into()));
    }
    let mut units = Vec::new();
    for (loc, w) in p.counting.atoms() {
        if w.fract() != 0.0 {
            return domain(format!("non-integer weight {w} at {loc}"));
        }
        for _ in 0..w as usize {
            units.push(loc);
        }
    }
    let jitter = symmetric_uniforms(seed, Stream::Jitter, units.len());
    let mut locs: Vec<f64> = units
        .iter()
        .zip(&jitter)
        .map(|(&l, &u)| l * (1.0 + JITTER * u))
        .collect();
    locs.sort_by(f64::total_cmp);
    if locs.windows(2).any(|w| w[0] == w[1]) {
        return domain("jitter produced coincident locations; try another seed");
    }
    let horizon = p.truncation * (1.0 + JITTER);
    let counting = StepFunction::from_unit_atoms(locs, horizon)?;
    let mut gens: Vec<f64> = counting.locations().to_vec();
    if let Some(o) = other {
        gens.extend(o.counting.locations());
    }
    if let Some(v) = crate::lattice::find_coincidence(&gens, check_x, crate::lattice::COINCIDENCE_TOL)? {
        return domain(format!("multiplicative coincidence near {v}"));
    }
    let mut sys = GenPrimeSystem::new(counting, p.reference, true);
    sys.metadata = p.metadata.clone();
    sys.metadata.insert("jitter".into(), json!({ "seed": seed, "relative": JITTER, "checked_to": check_x }));
    Ok(sys)
}

/// What a system description builds.
#[derive(Clone, Debug)]
pub enum Built {
    System(GenPrimeSystem),
    Perturbation(Perturbation),
}

/// A system description: `{"kind", "params", "seed"}`.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SystemDescription {
    pub kind: SystemKind,
    #[serde(default)]
    pub params: Value,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum SystemKind {
    Usual,
    RandomSign,
    BlockCoinflip,
    Plus,
    Minus,
    Custom,
}

fn param_f64(params: &Value, key: &str) -> Result<f64> {
    params
        .get(key)
        .and_then(Value::as_f64)
        .ok_or_else(|| Error::Format(format!("params.{key} must be a number")))
}

fn param_y(params: &Value) -> Result<f64> {
    if let Some(v) = params.get("log_Y").and_then(Value::as_f64) {
        return Ok(v.exp());
    }
    param_f64(params, "Y")
}

impl SystemDescription {
    fn seed(&self) -> Result<u64> {
        self.seed
            .ok_or_else(|| Error::Format("a seed is mandatory for stochastic systems".into()))
    }

    pub fn build(&self) -> Result<Built> {
        let p = &self.params;
        match self.kind {
            SystemKind::Usual => Ok(Built::System(usual_primes(param_y(p)?)?)),
            SystemKind::RandomSign => {
                let alpha = param_f64(p, "alpha")?;
                let n_max = param_f64(p, "n_max")?;
                if n_max.fract() != 0.0 || n_max < 1.0 {
                    return Err(Error::Format("params.n_max must be a positive integer".into()));
                }
                Ok(Built::Perturbation(random_sign_system(alpha, n_max.min(u32::MAX as f64) as u32, self.seed()?)?))
            }
            SystemKind::BlockCoinflip => Ok(Built::System(block_coinflip_system(param_y(p)?, self.seed()?)?)),
            SystemKind::Plus | SystemKind::Minus => {
                let inner: SystemDescription = serde_json::from_value(
                    p.get("system")
                        .cloned()
                        .ok_or_else(|| Error::Format("params.system is required".into()))?,
                )?;
                let base = match inner.build()? {
                    Built::System(s) => s,
                    Built::Perturbation(_) => {
                        return Err(Error::Format("plus/minus need an atomic prime system".into()))
                    }
                };
                let p1 = usual_primes(base.truncation)?;
                let out = if self.kind == SystemKind::Plus {
                    plus_system(&base, &p1)?
                } else {
                    minus_system(&base, &p1)?
                };
                Ok(Built::System(out))
            }
            SystemKind::Custom => {
                let reference: Reference = match p.get("reference") {
                    Some(r) => serde_json::from_value(r.clone())?,
                    None => Reference::Pi,
                };
                if let Some(m) = p.get("perturbation") {
                    let doc: CountingDoc = serde_json::from_value(m.clone())?;
                    let measure = SignedMeasure::from_doc(&doc)?;
                    let horizon = doc.horizon.unwrap_or_else(|| {
                        measure.atoms().last().map_or(f64::INFINITY, |a| a.loc)
                    });
                    return Ok(Built::Perturbation(Perturbation::new(measure, reference, horizon)));
                }
                let doc: CountingDoc = serde_json::from_value(
                    p.get("counting")
                        .cloned()
                        .ok_or_else(|| Error::Format("params.counting or params.perturbation is required".into()))?,
                )?;
                let free = p.get("free").and_then(Value::as_bool).unwrap_or(false);
                let mut sys = GenPrimeSystem::new(StepFunction::from_doc(&doc)?, reference, free);
                sys.metadata.insert("kind".into(), json!("custom"));
                Ok(Built::System(sys))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn alternate_switches_between_sources() {
        let y = 6f64.exp();
        let p = block_coinflip_with_coins(y, &[true, false, true, false, true, false, true]).unwrap();
        let p1 = usual_primes(y).unwrap();
        let alt = alternate_system(&plus_system(&p, &p1).unwrap(), &minus_system(&p, &p1).unwrap(), 2.0).unwrap();
        // log y in [0,2): plus side; [2,4): minus side
        assert_eq!(alt.counting.value(2.0), 2.0);
        let minus = minus_system(&p, &p1).unwrap();
        let jump = |f: &StepFunction, a: f64, b: f64| f.value(b) - f.value(a);
        assert_eq!(jump(&alt.counting, 2f64.exp(), 4f64.exp()), jump(&minus.counting, 2f64.exp(), 4f64.exp()));
        assert!(alternate_system(&p, &p1, 0.0).is_err());
    }

    #[test]
    fn swing_alternation_moves_both_ways() {
        let y = 12f64.exp();
        // runs of three doubled and three removed blocks
        let coins: Vec<bool> = (0..13).map(|k| (k / 3) % 2 == 0).collect();
        let p = block_coinflip_with_coins(y, &coins).unwrap();
        let p1 = usual_primes(y).unwrap();
        let (plus, minus) = (plus_system(&p, &p1).unwrap(), minus_system(&p, &p1).unwrap());
        let alt = alternate_by_swing(&plus, &minus, &p1, 0.05).unwrap();
        let switches: Vec<f64> = serde_json::from_value(alt.metadata["switches"].clone()).unwrap();
        assert!(switches.len() >= 2, "{switches:?}");
        // before the first switch the set agrees with P⁺
        let first = switches[0];
        assert_eq!(alt.counting.value(first), plus.counting.value(first));
        assert!(alternate_by_swing(&plus, &minus, &p1, 0.0).is_err());
    }

    #[test]
    fn usual_primes_small() {
        let p = usual_primes(10.0).unwrap();
        assert_eq!(p.counting.locations(), &[2.0, 3.0, 5.0, 7.0]);
        assert_eq!(usual_primes(2.0).unwrap().counting.len(), 1);
        assert_eq!(usual_primes(100.0).unwrap().counting.len(), 25);
        assert!(p.free);
    }

    #[test]
    fn usual_primes_bounds() {
        assert!(usual_primes(1.5).is_err());
        assert!(matches!(usual_primes(2e9), Err(Error::Capacity { .. })));
    }

    #[test]
    fn random_weight_instance() {
        let a = random_sign_system(1.0, 5, 3).unwrap();
        let w = a.measure.atoms()[1].weight.abs();
        assert!((w - 3.694528049465325).abs() < 1e-12);
        assert_eq!(a.measure.atoms()[1].log_loc, 2.0);
    }

    #[test]
    fn random_alpha_warning() {
        let a = random_sign_system(0.3, 5, 3).unwrap();
        assert!(a.metadata.contains_key("warnings"));
        assert!(!random_sign_system(1.0, 5, 3).unwrap().metadata.contains_key("warnings"));
        assert!(matches!(random_sign_system(1.0, 701, 1), Err(Error::Capacity { .. })));
    }

    #[test]
    fn coinflip_degenerate_coins() {
        let y = 6f64.exp();
        let heads = block_coinflip_with_coins(y, &[true; 7]).unwrap();
        let tails = block_coinflip_with_coins(y, &[false; 7]).unwrap();
        let pi = usual_primes(y).unwrap();
        for k in 2..400 {
            let x = k as f64;
            assert_eq!(heads.counting.value(x), 2.0 * pi.counting.value(x));
            assert_eq!(tails.counting.value(x), 0.0);
        }
        assert!(heads.metadata.contains_key("final_block_truncated"));
    }

    #[test]
    fn plus_minus_identities() {
        let p1 = usual_primes(100.0).unwrap();
        let plus = plus_system(&p1, &p1).unwrap();
        let minus = minus_system(&p1, &p1).unwrap();
        assert_eq!(plus.counting, p1.counting);
        assert_eq!(minus.counting, p1.counting);
    }

    #[test]
    fn perturb_bounded_shift() {
        let p = usual_primes(30.0).unwrap();
        let q = perturb_bounded(&p, 1.0, &SignedMeasure::zero()).unwrap();
        for k in 1..30 {
            assert_eq!(q.counting.value(k as f64), p.counting.value(k as f64) + 1.0);
        }
        let same = perturb_bounded(&p, 0.0, &SignedMeasure::zero()).unwrap();
        assert_eq!(same.counting, p.counting);
        let bad = SignedMeasure::from_atoms(vec![(3.0, -2.0)], None).unwrap();
        let err = perturb_bounded(&p, 0.0, &bad).unwrap_err();
        assert!(err.to_string().contains('3'));
    }

    #[test]
    fn of_system_pi_relative_is_zero_for_usual() {
        let p = usual_primes(1000.0).unwrap();
        let a = Perturbation::of_system(&p).unwrap();
        assert!(a.measure.is_zero());
    }

    #[test]
    fn description_round_trip() {
        let d: SystemDescription = serde_json::from_str(
            r#"{"kind":"random_sign","params":{"alpha":1.0,"n_max":10},"seed":4}"#,
        )
        .unwrap();
        match d.build().unwrap() {
            Built::Perturbation(a) => assert_eq!(a.measure.atoms().len(), 10),
            _ => panic!(),
        }
        let missing: SystemDescription =
            serde_json::from_str(r#"{"kind":"block_coinflip","params":{"Y":100}}"#).unwrap();
        assert!(missing.build().is_err());
    }

    #[test]
    fn make_free_jitters_and_splits() {
        let y = 3f64.exp();
        let p = block_coinflip_with_coins(y, &[true, false, true, true]).unwrap();
        let f = make_free(&p, Some(&usual_primes(y).unwrap()), 11, 1e4).unwrap();
        assert_eq!(f.counting.len() as f64, p.counting.value(y));
        for (a, b) in f.counting.locations().iter().zip(p.counting.atoms().flat_map(|(l, w)| std::iter::repeat(l).take(w as usize))) {
            assert!(((a - b) / b).abs() < 1e-6);
        }
    }
}
