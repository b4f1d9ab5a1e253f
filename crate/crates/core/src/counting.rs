//! Nondecreasing step functions, signed atomic measures and Stieltjes integration.
//!
//! Counting functions are right-continuous: `F(x)` counts atoms at locations
//! `≤ x`. Atoms at equal locations are merged at construction.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{domain, Error, Result};
use crate::quad::{adaptive_simpson, QuadValue, TOL_QUAD};
use crate::tau::{tau_density, tau_unchecked};

/// Formats a real with 17 significant digits; parsing it back is bit-exact.
pub fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

/// Continuous part of a counting function or of a signed measure.
#[derive(Clone, Debug, PartialEq)]
pub enum SmoothPart {
    /// `scale · τ(y)`.
    Tau { scale: f64 },
    /// `Σ_{loc ≤ x} coeff · (x/loc − 1)`, sorted by location.
    Ramps(Vec<(f64, f64)>),
}

impl SmoothPart {
    pub fn ramps(mut ramps: Vec<(f64, f64)>) -> Result<Self> {
        for &(loc, c) in &ramps {
            if !(loc >= 1.0 && loc.is_finite() && c.is_finite()) {
                return domain(format!("invalid ramp ({loc}, {c})"));
            }
        }
        ramps.sort_by(|a, b| a.0.total_cmp(&b.0));
        Ok(SmoothPart::Ramps(ramps))
    }

    pub fn value(&self, x: f64) -> f64 {
        match self {
            SmoothPart::Tau { scale } => scale * tau_unchecked(x),
            SmoothPart::Ramps(r) => r
                .iter()
                .take_while(|(loc, _)| *loc <= x)
                .map(|(loc, c)| c * (x / loc - 1.0))
                .sum(),
        }
    }

    /// Derivative with respect to `x` (right derivative at ramp starts).
    pub fn density(&self, x: f64) -> f64 {
        match self {
            SmoothPart::Tau { scale } => {
                if x < 1.0 {
                    0.0
                } else {
                    scale * tau_density(x)
                }
            }
            SmoothPart::Ramps(r) => r
                .iter()
                .take_while(|(loc, _)| *loc <= x)
                .map(|(loc, c)| c / loc)
                .sum(),
        }
    }

    pub fn breakpoints(&self) -> Vec<f64> {
        match self {
            SmoothPart::Tau { .. } => Vec::new(),
            SmoothPart::Ramps(r) => r.iter().map(|(l, _)| *l).collect(),
        }
    }

    pub fn negated(&self) -> Self {
        match self {
            SmoothPart::Tau { scale } => SmoothPart::Tau { scale: -scale },
            SmoothPart::Ramps(r) => SmoothPart::Ramps(r.iter().map(|&(l, c)| (l, -c)).collect()),
        }
    }

    fn is_nondecreasing(&self) -> bool {
        match self {
            SmoothPart::Tau { scale } => *scale >= 0.0,
            SmoothPart::Ramps(r) => {
                let mut slope = 0.0;
                for (loc, c) in r {
                    slope += c / loc;
                    if slope < -1e-12 * (c / loc).abs().max(1.0) {
                        return false;
                    }
                }
                true
            }
        }
    }

    fn to_doc(&self) -> SmoothDoc {
        match self {
            SmoothPart::Tau { scale } => SmoothDoc {
                kind: "tau".into(),
                params: json!({ "scale": scale }),
            },
            SmoothPart::Ramps(r) => SmoothDoc {
                kind: "ramps".into(),
                params: json!({
                    "ramps": r.iter().map(|(l, c)| json!([fmt17(*l), c])).collect::<Vec<_>>()
                }),
            },
        }
    }

    fn from_doc(doc: &SmoothDoc) -> Result<Self> {
        match doc.kind.as_str() {
            "tau" => {
                let scale = doc.params.get("scale").and_then(Value::as_f64).unwrap_or(1.0);
                Ok(SmoothPart::Tau { scale })
            }
            "ramps" => {
                let arr = doc
                    .params
                    .get("ramps")
                    .and_then(Value::as_array)
                    .ok_or_else(|| Error::Format("ramps.params.ramps must be an array".into()))?;
                let mut ramps = Vec::with_capacity(arr.len());
                for item in arr {
                    let pair = item
                        .as_array()
                        .filter(|p| p.len() == 2)
                        .ok_or_else(|| Error::Format("ramp entries are [loc, coeff]".into()))?;
                    ramps.push((parse_loc(&pair[0])?, parse_num(&pair[1])?));
                }
                SmoothPart::ramps(ramps)
            }
            other => Err(Error::Format(format!("unknown smooth kind '{other}'"))),
        }
    }
}

fn parse_loc(v: &Value) -> Result<f64> {
    match v {
        Value::String(s) => s
            .trim()
            .parse::<f64>()
            .map_err(|e| Error::Format(format!("bad location '{s}': {e}"))),
        Value::Number(n) => n
            .as_f64()
            .ok_or_else(|| Error::Format("bad location".into())),
        _ => Err(Error::Format("location must be a decimal string".into())),
    }
}

fn parse_num(v: &Value) -> Result<f64> {
    match v {
        Value::Number(n) => n.as_f64().ok_or_else(|| Error::Format("bad number".into())),
        Value::String(s) => s
            .trim()
            .parse::<f64>()
            .map_err(|e| Error::Format(format!("bad number '{s}': {e}"))),
        _ => Err(Error::Format("expected a number".into())),
    }
}

/// Serialized form shared by step functions and signed measures.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct CountingDoc {
    #[serde(default)]
    pub base: f64,
    #[serde(default)]
    pub atoms: Vec<(Value, Value)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub smooth: Option<SmoothDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct SmoothDoc {
    pub kind: String,
    #[serde(default)]
    pub params: Value,
}

fn merge_sorted(mut atoms: Vec<(f64, f64)>) -> Vec<(f64, f64)> {
    atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut out: Vec<(f64, f64)> = Vec::with_capacity(atoms.len());
    for (loc, w) in atoms {
        match out.last_mut() {
            Some(last) if last.0 == loc => last.1 += w,
            _ => out.push((loc, w)),
        }
    }
    out
}

/// A right-continuous nondecreasing function on `[1, ∞)`: base value plus
/// positive atoms plus an optional smooth nondecreasing part.
#[derive(Clone, Debug, PartialEq)]
pub struct StepFunction {
    base: f64,
    locs: Vec<f64>,
    cum: Vec<f64>,
    smooth: Option<SmoothPart>,
    horizon: f64,
}

impl StepFunction {
    pub fn new(
        base: f64,
        atoms: Vec<(f64, f64)>,
        smooth: Option<SmoothPart>,
        horizon: f64,
    ) -> Result<Self> {
        if !base.is_finite() {
            return domain("base value must be finite");
        }
        for &(loc, w) in &atoms {
            if !(loc > 1.0 && loc.is_finite()) {
                return domain(format!("atom location {loc} must be finite and > 1"));
            }
            if !(w > 0.0 && w.is_finite()) {
                return domain(format!("atom weight {w} at {loc} must be positive"));
            }
        }
        if let Some(s) = &smooth {
            if !s.is_nondecreasing() {
                return domain("smooth part is not nondecreasing");
            }
        }
        let merged = merge_sorted(atoms);
        if let Some(&(last, _)) = merged.last() {
            if last > horizon {
                return domain(format!("atom at {last} lies beyond horizon {horizon}"));
            }
        }
        let mut locs = Vec::with_capacity(merged.len());
        let mut cum = Vec::with_capacity(merged.len());
        let mut acc = 0.0;
        for (loc, w) in merged {
            acc += w;
            locs.push(loc);
            cum.push(acc);
        }
        Ok(Self { base, locs, cum, smooth, horizon })
    }

    /// Purely atomic function with unit weights at strictly increasing locations.
    pub fn from_unit_atoms(locs: Vec<f64>, horizon: f64) -> Result<Self> {
        if locs.windows(2).any(|w| !(w[0] < w[1])) || locs.first().is_some_and(|&l| !(l > 1.0)) {
            return domain("unit atoms must be strictly increasing and > 1");
        }
        if locs.last().is_some_and(|&l| l > horizon) {
            return domain("atom beyond horizon");
        }
        let cum = (1..=locs.len()).map(|i| i as f64).collect();
        Ok(Self { base: 0.0, locs, cum, smooth: None, horizon })
    }

    /// The zero function on `[1, horizon]`.
    pub fn zero(horizon: f64) -> Self {
        Self { base: 0.0, locs: Vec::new(), cum: Vec::new(), smooth: None, horizon }
    }

    pub(crate) fn from_parts_unchecked(
        base: f64,
        locs: Vec<f64>,
        cum: Vec<f64>,
        horizon: f64,
    ) -> Self {
        Self { base, locs, cum, smooth: None, horizon }
    }

    pub fn base(&self) -> f64 {
        self.base
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn smooth(&self) -> Option<&SmoothPart> {
        self.smooth.as_ref()
    }

    pub fn is_atomic(&self) -> bool {
        self.smooth.is_none()
    }

    pub fn len(&self) -> usize {
        self.locs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.locs.is_empty()
    }

    pub fn locations(&self) -> &[f64] {
        &self.locs
    }

    /// Cumulative atomic mass after each atom (base excluded).
    pub fn cumulative(&self) -> &[f64] {
        &self.cum
    }

    pub fn weight(&self, i: usize) -> f64 {
        if i == 0 {
            self.cum[0]
        } else {
            self.cum[i] - self.cum[i - 1]
        }
    }

    pub fn atoms(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        (0..self.locs.len()).map(move |i| (self.locs[i], self.weight(i)))
    }

    pub fn with_horizon(mut self, horizon: f64) -> Result<Self> {
        if self.locs.last().is_some_and(|&l| l > horizon) {
            return domain("atom beyond requested horizon");
        }
        self.horizon = horizon;
        Ok(self)
    }

    /// Atomic mass at locations `≤ x`.
    pub fn atomic_mass_to(&self, x: f64) -> f64 {
        let k = self.locs.partition_point(|&l| l <= x);
        if k == 0 {
            0.0
        } else {
            self.cum[k - 1]
        }
    }

    /// F(x) for `x ≥ 1` without the domain check.
    pub fn value(&self, x: f64) -> f64 {
        let s = self.smooth.as_ref().map_or(0.0, |s| s.value(x));
        self.base + self.atomic_mass_to(x) + s
    }

    pub fn eval(&self, x: f64) -> Result<f64> {
        eval_step(self, x)
    }

    pub fn to_doc(&self) -> CountingDoc {
        CountingDoc {
            base: self.base,
            atoms: self
                .atoms()
                .map(|(l, w)| (Value::String(fmt17(l)), json!(w)))
                .collect(),
            smooth: self.smooth.as_ref().map(SmoothPart::to_doc),
            horizon: self.horizon.is_finite().then_some(self.horizon),
        }
    }

    pub fn from_doc(doc: &CountingDoc) -> Result<Self> {
        let atoms = doc
            .atoms
            .iter()
            .map(|(l, w)| Ok((parse_loc(l)?, parse_num(w)?)))
            .collect::<Result<Vec<_>>>()?;
        let smooth = doc.smooth.as_ref().map(SmoothPart::from_doc).transpose()?;
        let horizon = doc
            .horizon
            .unwrap_or_else(|| if smooth.is_some() { f64::INFINITY } else { atoms.iter().map(|a| a.0).fold(1.0, f64::max) });
        Self::new(doc.base, atoms, smooth, horizon)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.to_doc()).expect("counting document serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Self::from_doc(&serde_json::from_str(s)?)
    }
}

/// Evaluates a counting function at `x ≥ 1`.
pub fn eval_step(f: &StepFunction, x: f64) -> Result<f64> {
    if !(x >= 1.0) {
        return domain(format!("counting functions are defined on [1, inf), got x = {x}"));
    }
    Ok(f.value(x))
}

/// An atom of a signed measure. `log_loc` is kept alongside the location so
/// that lattice-valued constructions (atoms at `e^n`) stay exact in log space.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SignedAtom {
    pub loc: f64,
    pub log_loc: f64,
    pub weight: f64,
}

/// Signed measure on `(1, ∞)`: signed atoms plus an optional smooth density.
#[derive(Clone, Debug, PartialEq)]
pub struct SignedMeasure {
    atoms: Vec<SignedAtom>,
    cum: Vec<f64>,
    smooth: Option<SmoothPart>,
}

impl SignedMeasure {
    pub fn zero() -> Self {
        Self { atoms: Vec::new(), cum: Vec::new(), smooth: None }
    }

    pub fn from_atoms(atoms: Vec<(f64, f64)>, smooth: Option<SmoothPart>) -> Result<Self> {
        let with_logs = atoms.into_iter().map(|(l, w)| (l, l.ln(), w)).collect();
        Self::build(with_logs, smooth)
    }

    /// Atoms given by `(log location, weight)`; locations are `exp(log)`.
    pub fn from_log_atoms(atoms: Vec<(f64, f64)>) -> Result<Self> {
        let with_locs = atoms.into_iter().map(|(g, w)| (g.exp(), g, w)).collect();
        Self::build(with_locs, None)
    }

    fn build(mut atoms: Vec<(f64, f64, f64)>, smooth: Option<SmoothPart>) -> Result<Self> {
        for &(loc, lg, w) in &atoms {
            if !(loc > 1.0 && loc.is_finite() && lg > 0.0) {
                return domain(format!("signed atom location {loc} must be finite and > 1"));
            }
            if !w.is_finite() {
                return domain(format!("signed atom weight at {loc} is not finite"));
            }
        }
        atoms.sort_by(|a, b| a.1.total_cmp(&b.1));
        let mut merged: Vec<SignedAtom> = Vec::with_capacity(atoms.len());
        for (loc, lg, w) in atoms {
            match merged.last_mut() {
                Some(last) if last.loc == loc => last.weight += w,
                _ => merged.push(SignedAtom { loc, log_loc: lg, weight: w }),
            }
        }
        merged.retain(|a| a.weight != 0.0);
        let mut acc = 0.0;
        let cum = merged
            .iter()
            .map(|a| {
                acc += a.weight;
                acc
            })
            .collect();
        Ok(Self { atoms: merged, cum, smooth })
    }

    pub fn atoms(&self) -> &[SignedAtom] {
        &self.atoms
    }

    pub fn smooth(&self) -> Option<&SmoothPart> {
        self.smooth.as_ref()
    }

    pub fn is_atomic(&self) -> bool {
        self.smooth.is_none()
    }

    pub fn is_zero(&self) -> bool {
        self.atoms.is_empty() && self.smooth.is_none()
    }

    /// The induced function `a(y) = m((1, y])`.
    pub fn cumulative(&self, y: f64) -> f64 {
        let k = self.atoms.partition_point(|a| a.loc <= y);
        let atomic = if k == 0 { 0.0 } else { self.cum[k - 1] };
        atomic + self.smooth.as_ref().map_or(0.0, |s| s.value(y))
    }

    /// Total variation on `(y0, y1]`.
    pub fn total_variation(&self, y0: f64, y1: f64) -> Result<f64> {
        let atomic: f64 = self
            .atoms
            .iter()
            .filter(|a| a.loc > y0 && a.loc <= y1)
            .map(|a| a.weight.abs())
            .sum();
        let smooth = match &self.smooth {
            None => 0.0,
            Some(s) => smooth_integral(s, |_| 1.0f64, y0.max(1.0), y1, TOL_QUAD, true)?,
        };
        Ok(atomic + smooth)
    }

    /// Breakpoints of the induced function (atom and ramp locations), sorted.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut b: Vec<f64> = self.atoms.iter().map(|a| a.loc).collect();
        if let Some(s) = &self.smooth {
            b.extend(s.breakpoints());
            b.sort_by(f64::total_cmp);
            b.dedup();
        }
        b
    }

    /// `self + factor · other`.
    pub fn add_scaled(&self, other: &SignedMeasure, factor: f64) -> Result<Self> {
        if self.smooth.is_some() && other.smooth.is_some() {
            return Err(Error::Unsupported("sum of two smooth densities".into()));
        }
        let mut atoms: Vec<(f64, f64, f64)> =
            self.atoms.iter().map(|a| (a.loc, a.log_loc, a.weight)).collect();
        atoms.extend(other.atoms.iter().map(|a| (a.loc, a.log_loc, factor * a.weight)));
        let smooth = match (&self.smooth, &other.smooth) {
            (Some(s), None) => Some(s.clone()),
            (None, Some(s)) => Some(match s {
                SmoothPart::Tau { scale } => SmoothPart::Tau { scale: factor * scale },
                SmoothPart::Ramps(r) => {
                    SmoothPart::Ramps(r.iter().map(|&(l, c)| (l, factor * c)).collect())
                }
            }),
            _ => None,
        };
        Self::build(atoms, smooth)
    }

    pub fn to_doc(&self) -> CountingDoc {
        CountingDoc {
            base: 0.0,
            atoms: self
                .atoms
                .iter()
                .map(|a| (Value::String(fmt17(a.loc)), json!(a.weight)))
                .collect(),
            smooth: self.smooth.as_ref().map(SmoothPart::to_doc),
            horizon: None,
        }
    }

    pub fn from_doc(doc: &CountingDoc) -> Result<Self> {
        let atoms = doc
            .atoms
            .iter()
            .map(|(l, w)| Ok((parse_loc(l)?, parse_num(w)?)))
            .collect::<Result<Vec<_>>>()?;
        let smooth = doc.smooth.as_ref().map(SmoothPart::from_doc).transpose()?;
        Self::from_atoms(atoms, smooth)
    }
}

/// `∫ f(y) d(smooth)(y)` over `[y0, y1]`, integrating in `v = log y` and
/// splitting at ramp breakpoints. With `absolute`, integrates `|density|`.
fn smooth_integral<T: QuadValue, F: Fn(f64) -> T>(
    s: &SmoothPart,
    f: F,
    y0: f64,
    y1: f64,
    tol: f64,
    absolute: bool,
) -> Result<T> {
    if !(y1 > y0) {
        return Ok(T::zero());
    }
    let mut cuts = vec![y0];
    cuts.extend(s.breakpoints().into_iter().filter(|&b| b > y0 && b < y1));
    cuts.push(y1);
    let pieces = (cuts.len() - 1) as f64;
    let mut acc = T::zero();
    for w in cuts.windows(2) {
        let (v0, v1) = (w[0].ln(), w[1].ln());
        let mid = 0.5 * (w[0] + w[1]);
        // ramp densities are piecewise constant; evaluate the active piece once
        let piece_density = match s {
            SmoothPart::Ramps(_) => Some(s.density(mid)),
            SmoothPart::Tau { .. } => None,
        };
        let g = |v: f64| {
            let y = v.exp();
            let mut d = piece_density.unwrap_or_else(|| s.density(y));
            if absolute {
                d = d.abs();
            }
            f(y) * (d * y)
        };
        acc = acc + adaptive_simpson(g, v0, v1, tol / pieces)?;
    }
    Ok(acc)
}

/// Stieltjes integral `∫_{(y0, y1]} f(y) dm(y)`: exact sum over atoms plus
/// adaptive quadrature against the smooth density.
pub fn stieltjes<T, F>(f: F, m: &SignedMeasure, y0: f64, y1: f64, tol: f64) -> Result<T>
where
    T: QuadValue,
    F: Fn(f64) -> T,
{
    if !(y1 >= y0) {
        return domain(format!("empty interval [{y0}, {y1}]"));
    }
    let mut acc = T::zero();
    for a in m.atoms.iter().filter(|a| a.loc > y0 && a.loc <= y1) {
        let v = f(a.loc);
        if !v.finite() {
            return Err(Error::Evaluation(format!("integrand not finite at atom {}", a.loc)));
        }
        acc = acc + v * a.weight;
    }
    if let Some(s) = &m.smooth {
        acc = acc + smooth_integral(s, &f, y0.max(1.0), y1, tol, false)?;
    }
    Ok(acc)
}

/// Convenience for complex integrands, e.g. `y ↦ y^{-s}`.
pub fn stieltjes_complex<F: Fn(f64) -> Complex64>(
    f: F,
    m: &SignedMeasure,
    y0: f64,
    y1: f64,
) -> Result<Complex64> {
    stieltjes(f, m, y0, y1, TOL_QUAD)
}

fn combine(f: &StepFunction, g: &StepFunction, pick: fn(f64, f64) -> f64) -> Result<StepFunction> {
    if f.horizon != g.horizon {
        return domain(format!(
            "mismatched truncation horizons {} and {}",
            f.horizon, g.horizon
        ));
    }
    if !f.is_atomic() || !g.is_atomic() {
        return Err(Error::Unsupported("combine of functions with a smooth part".into()));
    }
    let base = pick(f.base, g.base);
    let mut prev = base;
    let (mut i, mut j) = (0usize, 0usize);
    let (mut fv, mut gv) = (f.base, g.base);
    let mut locs = Vec::with_capacity(f.len().max(g.len()));
    let mut cum = Vec::with_capacity(f.len().max(g.len()));
    while i < f.len() || j < g.len() {
        let next = match (f.locs.get(i), g.locs.get(j)) {
            (Some(&a), Some(&b)) => a.min(b),
            (Some(&a), None) => a,
            (None, Some(&b)) => b,
            (None, None) => unreachable!(),
        };
        while i < f.len() && f.locs[i] == next {
            fv = f.base + f.cum[i];
            i += 1;
        }
        while j < g.len() && g.locs[j] == next {
            gv = g.base + g.cum[j];
            j += 1;
        }
        let v = pick(fv, gv);
        if v > prev {
            locs.push(next);
            cum.push(v - base);
            prev = v;
        }
    }
    Ok(StepFunction::from_parts_unchecked(base, locs, cum, f.horizon))
}

/// Pointwise maximum of two atomic counting functions with a common horizon.
pub fn combine_max(f: &StepFunction, g: &StepFunction) -> Result<StepFunction> {
    combine(f, g, f64::max)
}

/// Pointwise minimum of two atomic counting functions with a common horizon.
pub fn combine_min(f: &StepFunction, g: &StepFunction) -> Result<StepFunction> {
    combine(f, g, f64::min)
}
