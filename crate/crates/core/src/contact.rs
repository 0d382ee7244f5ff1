//! Reeb orbit systems and their mean Euler characteristics.
//!
//! Two independent routes are provided: the closed-form resonance sum
//! `Σ± σ(xᵢ)/|Δ(xᵢ)| + ½ Σ± σ(yᵢ)/|Δ(yᵢ)|` and direct enumeration of the
//! truncated chain complex `C⁽ᴺ⁾` generated by good iterates `xᵢᵏ` and odd
//! iterates `yᵢᵏ` of bad orbits whose degree `|xᵏ| = μ_CZ(xᵏ) + n − 3` falls
//! in the window `[2n − 4, N]` (positive) or `[−N, −2]` (negative).

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_traits::{Signed, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exactnum::{rat, rational_to_f64, ExactScalar, NumError, Rational};
use crate::models::{EllipsoidWeights, LinearizedReturnMap, ModelError};
use crate::serde_util;

/// Iterates checked for parity coherence when an orbit is constructed.
pub const PARITY_CHECK_ITERATES: u64 = 32;

/// Drift spread below which a table law counts as exactly linear.
const DRIFT_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum ContactError {
    #[error("invalid orbit system: {0}")]
    Invalid(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error(
        "orbit `{0}` has mean index 0: the resonance sum divides by Δ and the chain groups \
         near degree 0 would be infinite-dimensional"
    )]
    MeanIndexZero(String),
    #[error("Conley–Zehnder law of orbit `{orbit}` is undefined at k = {k}: {reason}")]
    LawUndefined { orbit: String, k: u64, reason: String },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Num(#[from] NumError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OrbitClass {
    Good,
    Bad,
}

impl OrbitClass {
    /// `1` for good orbits, `½` for bad ones.
    pub fn weight(self) -> Rational {
        match self {
            OrbitClass::Good => rat(1, 1),
            OrbitClass::Bad => rat(1, 2),
        }
    }

    /// Whether the `k`-th iterate is a generator.
    pub fn admits(self, k: u64) -> bool {
        self == OrbitClass::Good || k % 2 == 1
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Positive,
    Negative,
}

impl Direction {
    pub fn includes(self, delta: f64) -> bool {
        match self {
            Direction::Positive => delta > 0.0,
            Direction::Negative => delta < 0.0,
        }
    }

    /// Degree window `[low, high]` for truncation level `N`.
    pub fn window(self, n: u32, big_n: u64) -> (i64, i64) {
        let big_n = big_n as i64;
        match self {
            Direction::Positive => (2 * i64::from(n) - 4, big_n),
            Direction::Negative => (-big_n, -2),
        }
    }
}

impl FromStr for Direction {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "positive" | "+" => Ok(Direction::Positive),
            "negative" | "-" => Ok(Direction::Negative),
            _ => Err(format!("unknown direction `{s}` (expected positive or negative)")),
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Direction::Positive => "positive",
            Direction::Negative => "negative",
        })
    }
}

/// Mean index of a Reeb orbit: exact rational or a float.
#[derive(Clone, Debug, PartialEq)]
pub enum MeanIndex {
    Exact(Rational),
    Numeric(f64),
}

impl MeanIndex {
    pub fn to_f64(&self) -> f64 {
        match self {
            MeanIndex::Exact(r) => rational_to_f64(r),
            MeanIndex::Numeric(x) => *x,
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            MeanIndex::Exact(r) => r.is_zero(),
            MeanIndex::Numeric(x) => *x == 0.0,
        }
    }

    pub fn exact(&self) -> Option<&Rational> {
        match self {
            MeanIndex::Exact(r) => Some(r),
            MeanIndex::Numeric(_) => None,
        }
    }
}

impl Serialize for MeanIndex {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            MeanIndex::Exact(r) => s.collect_str(r),
            MeanIndex::Numeric(x) => s.serialize_f64(*x),
        }
    }
}

impl<'de> Deserialize<'de> for MeanIndex {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Number(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Number(x) if x.is_finite() => Ok(MeanIndex::Numeric(x)),
            Raw::Number(x) => Err(serde::de::Error::custom(format!("mean index must be finite, got {x}"))),
            Raw::Text(t) => {
                let v: ExactScalar = t.parse().map_err(serde::de::Error::custom)?;
                v.as_rational()
                    .cloned()
                    .map(MeanIndex::Exact)
                    .ok_or_else(|| serde::de::Error::custom(format!("mean index `{t}` must be rational or a float")))
            }
        }
    }
}

/// `k ↦ μ_CZ(xᵏ)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum CzLaw {
    /// Block normal form of the linearized return map.
    Blocks(LinearizedReturnMap),
    /// Orbit `j` of an ellipsoid with the given weights.
    Ellipsoid { weights: EllipsoidWeights, j: usize },
    /// Explicit values `μ(x¹), μ(x²), …`, optionally extrapolated.
    Table {
        values: Vec<i64>,
        #[serde(default)]
        extrapolate: bool,
    },
}

impl CzLaw {
    fn mu(&self, k: u64, n: u32, class: OrbitClass, delta: f64) -> Result<i64, String> {
        match self {
            CzLaw::Blocks(map) => map.mu(k).map_err(|e| e.to_string()),
            CzLaw::Ellipsoid { weights, j } => weights.mu(*j, k).map_err(|e| e.to_string()),
            CzLaw::Table { values, extrapolate } => {
                if let Some(&v) = values.get(k as usize - 1) {
                    return Ok(v);
                }
                if !extrapolate {
                    return Err(format!("table has {} entries and extrapolation is off", values.len()));
                }
                extrapolate_table(values, k, n, class, delta)
            }
        }
    }

    /// Parity of `μ_CZ(xᵏ)`, computed without floors where possible.
    fn mu_parity(&self, k: u64, n: u32, class: OrbitClass, delta: f64) -> Result<i64, String> {
        match self {
            CzLaw::Blocks(map) => {
                let elliptic = map.elliptic_count();
                Ok((elliptic as i64 + map.negative_hyperbolic_count() as i64 * k as i64).rem_euclid(2))
            }
            CzLaw::Ellipsoid { weights, .. } => Ok((weights.len() as i64 - 1).rem_euclid(2)),
            CzLaw::Table { .. } => self.mu(k, n, class, delta).map(|m| m.rem_euclid(2)),
        }
    }
}

/// Extends a table law beyond its last entry when the value is forced.
///
/// An exactly linear table `μ(k) = kΔ + c` continues linearly. For `n = 2`
/// the index bound leaves at most two integers in `(kΔ − 1, kΔ + 1)`, and the
/// parity rule picks one. Anything else is refused.
fn extrapolate_table(values: &[i64], k: u64, n: u32, class: OrbitClass, delta: f64) -> Result<i64, String> {
    if values.is_empty() {
        return Err("empty table".into());
    }
    let drifts: Vec<f64> = values.iter().enumerate().map(|(i, &v)| v as f64 - (i + 1) as f64 * delta).collect();
    let lo = drifts.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = drifts.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let target = k as f64 * delta;
    if hi - lo < DRIFT_TOL {
        let v = target + drifts[0];
        if (v - v.round()).abs() < DRIFT_TOL {
            return Ok(v.round() as i64);
        }
    }
    if n == 2 {
        let parity = (values[0] + if class == OrbitClass::Bad { k as i64 - 1 } else { 0 }).rem_euclid(2);
        let candidates: Vec<i64> = ((target - 1.0).floor() as i64..=(target + 1.0).ceil() as i64)
            .filter(|&m| (m as f64 - target).abs() < 1.0 && m.rem_euclid(2) == parity)
            .collect();
        if let [m] = candidates[..] {
            return Ok(m);
        }
        return Err(format!("{} candidates of the right parity near kΔ = {target}", candidates.len()));
    }
    Err("extrapolation is not certified: the table is not exactly linear and n > 2".into())
}

/// A simple closed Reeb orbit together with its index data.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReebOrbit {
    pub name: String,
    pub class: OrbitClass,
    #[serde(rename = "delta")]
    pub mean_index: MeanIndex,
    pub sigma: i8,
    pub cz_law: CzLaw,
}

impl ReebOrbit {
    /// Validates the record; `sigma`, when given, must equal `(−1)^{|x|}`.
    pub fn new(
        name: String,
        class: OrbitClass,
        mean_index: MeanIndex,
        cz_law: CzLaw,
        sigma: Option<i8>,
        n: u32,
    ) -> Result<Self, ContactError> {
        let mut orbit = ReebOrbit { name, class, mean_index, sigma: 1, cz_law };
        orbit.sigma = orbit.sigma_at(1, n)?;
        if let Some(s) = sigma {
            if s != orbit.sigma {
                return Err(ContactError::Invalid(format!(
                    "orbit `{}`: declared σ = {s} but (−1)^|x| = {}",
                    orbit.name, orbit.sigma
                )));
            }
        }
        orbit.validate(n)?;
        Ok(orbit)
    }

    fn validate(&self, n: u32) -> Result<(), ContactError> {
        let invalid = |msg: String| Err(ContactError::Invalid(format!("orbit `{}`: {msg}", self.name)));
        if !self.mean_index.to_f64().is_finite() {
            return invalid("mean index must be finite".into());
        }
        if self.sigma != 1 && self.sigma != -1 {
            return invalid(format!("σ must be ±1, got {}", self.sigma));
        }
        let law_delta = match &self.cz_law {
            CzLaw::Blocks(map) => {
                map.validate()?;
                if map.blocks.len() + 1 != n as usize {
                    return invalid(format!("{} blocks for n = {n} (expected n − 1)", map.blocks.len()));
                }
                if map.class() != self.class {
                    return invalid(format!("declared {:?} but the blocks give {:?}", self.class, map.class()));
                }
                Some(map.mean_index())
            }
            CzLaw::Ellipsoid { weights, j } => {
                weights.validate()?;
                if weights.len() != n as usize || *j >= weights.len() {
                    return invalid(format!("ellipsoid with {} weights, orbit {j}, n = {n}", weights.len()));
                }
                if self.class != OrbitClass::Good {
                    return invalid("ellipsoid orbits are good".into());
                }
                Some(weights.mean_index(*j))
            }
            CzLaw::Table { values, .. } => {
                if values.is_empty() {
                    return invalid("empty Conley–Zehnder table".into());
                }
                None
            }
        };
        if let Some(d) = law_delta {
            let agree = match (&d, &self.mean_index) {
                (MeanIndex::Exact(a), MeanIndex::Exact(b)) => a == b,
                (a, b) => (a.to_f64() - b.to_f64()).abs() <= 1e-9 * (1.0 + a.to_f64().abs()),
            };
            if !agree {
                return invalid(format!("Δ = {} but the law gives {}", self.mean_index.to_f64(), d.to_f64()));
            }
        }
        let limit = match &self.cz_law {
            CzLaw::Table { values, .. } => (values.len() as u64).min(PARITY_CHECK_ITERATES),
            _ => PARITY_CHECK_ITERATES,
        };
        let p1 = self.parity(1, n)?;
        for k in 2..=limit {
            let expected = match self.class {
                OrbitClass::Good => p1,
                OrbitClass::Bad => (p1 + k as i64 - 1).rem_euclid(2),
            };
            if self.parity(k, n)? != expected {
                return invalid(format!("parity of μ_CZ(x^{k}) breaks the {:?} parity law", self.class));
            }
        }
        Ok(())
    }

    fn parity(&self, k: u64, n: u32) -> Result<i64, ContactError> {
        self.cz_law
            .mu_parity(k, n, self.class, self.mean_index.to_f64())
            .map_err(|reason| ContactError::LawUndefined { orbit: self.name.clone(), k, reason })
    }

    /// `(−1)^{|xᵏ|}`.
    pub fn sigma_at(&self, k: u64, n: u32) -> Result<i8, ContactError> {
        let p = (self.parity(k, n)? + i64::from(n) - 3).rem_euclid(2);
        Ok(if p == 0 { 1 } else { -1 })
    }

    /// `μ_CZ(xᵏ)`.
    pub fn mu(&self, k: u64, n: u32) -> Result<i64, ContactError> {
        if k == 0 {
            return Err(ContactError::Domain("iterate k must be at least 1".into()));
        }
        self.cz_law
            .mu(k, n, self.class, self.mean_index.to_f64())
            .map_err(|reason| ContactError::LawUndefined { orbit: self.name.clone(), k, reason })
    }
}

/// `|xᵏ| = μ_CZ(xᵏ) + n − 3`.
pub fn grade(orbit: &ReebOrbit, k: u64, n: u32) -> Result<i64, ContactError> {
    Ok(orbit.mu(k, n)? + i64::from(n) - 3)
}

/// A finite catalogue of simple Reeb orbits on a `(2n − 1)`-manifold.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "OrbitSystemFile")]
pub struct ReebOrbitSystem {
    pub n: u32,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub homotopy_note: Option<String>,
    pub cf2_enforced: bool,
    pub orbits: Vec<ReebOrbit>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct OrbitSystemFile {
    n: u32,
    #[serde(default)]
    homotopy_note: Option<String>,
    #[serde(default)]
    cf2_enforced: bool,
    orbits: Vec<OrbitFile>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct OrbitFile {
    name: String,
    class: OrbitClass,
    delta: MeanIndex,
    #[serde(default)]
    sigma: Option<i8>,
    cz_law: CzLaw,
}

impl TryFrom<OrbitSystemFile> for ReebOrbitSystem {
    type Error = ContactError;
    fn try_from(f: OrbitSystemFile) -> Result<Self, Self::Error> {
        let orbits = f
            .orbits
            .into_iter()
            .map(|o| ReebOrbit::new(o.name, o.class, o.delta, o.cz_law, o.sigma, f.n))
            .collect::<Result<Vec<_>, _>>()?;
        ReebOrbitSystem::new(f.n, orbits, f.homotopy_note, f.cf2_enforced)
    }
}

/// An iterate of low degree forbidden by the CF2 condition.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Cf2Violation {
    pub orbit: String,
    pub k: u64,
    pub degree: i64,
}

impl ReebOrbitSystem {
    pub fn new(
        n: u32,
        orbits: Vec<ReebOrbit>,
        homotopy_note: Option<String>,
        cf2_enforced: bool,
    ) -> Result<Self, ContactError> {
        if n < 2 {
            return Err(ContactError::Invalid(format!("n must be at least 2, got {n}")));
        }
        let mut names = std::collections::BTreeSet::new();
        for o in &orbits {
            if !names.insert(o.name.as_str()) {
                return Err(ContactError::Invalid(format!("duplicate orbit name `{}`", o.name)));
            }
            o.validate(n)?;
        }
        Ok(ReebOrbitSystem { n, homotopy_note, cf2_enforced, orbits })
    }

    pub fn empty(n: u32) -> Result<Self, ContactError> {
        ReebOrbitSystem::new(n, Vec::new(), None, false)
    }

    /// Iterates with `|xᵏ| ∈ {−1, 0, 1}` (only meaningful when CF2 is enforced).
    pub fn cf2_violations(&self) -> Vec<Cf2Violation> {
        let mut out = Vec::new();
        for o in &self.orbits {
            let d = o.mean_index.to_f64().abs();
            let k_hi = if d > 0.0 { ((2.0 * f64::from(self.n) + 2.0) / d).ceil() as u64 + 1 } else { PARITY_CHECK_ITERATES };
            for k in (1..=k_hi).filter(|&k| o.class.admits(k)) {
                if let Ok(degree) = grade(o, k, self.n) {
                    if (-1..=1).contains(&degree) {
                        out.push(Cf2Violation { orbit: o.name.clone(), k, degree });
                    }
                }
            }
        }
        out
    }

    /// Warnings attached to reports: CF2 violations when enforced.
    pub fn warnings(&self) -> Vec<String> {
        if !self.cf2_enforced {
            return Vec::new();
        }
        self.cf2_violations()
            .into_iter()
            .map(|v| format!("CF2: orbit `{}` iterate {} has degree {}", v.orbit, v.k, v.degree))
            .collect()
    }

    fn nonzero_deltas(&self) -> Result<(), ContactError> {
        match self.orbits.iter().find(|o| o.mean_index.is_zero()) {
            Some(o) => Err(ContactError::MeanIndexZero(o.name.clone())),
            None => Ok(()),
        }
    }

    /// `#orbits · ⌈(2n − 2)/min|Δ|⌉`, an upper bound for every `dim C_l`.
    pub fn window_dimension_bound(&self) -> Result<u64, ContactError> {
        self.nonzero_deltas()?;
        let min = self.orbits.iter().map(|o| o.mean_index.to_f64().abs()).fold(f64::INFINITY, f64::min);
        if self.orbits.is_empty() {
            return Ok(0);
        }
        Ok(self.orbits.len() as u64 * ((2.0 * f64::from(self.n) - 2.0) / min).ceil() as u64)
    }
}

/// An exact rational or a float.
#[derive(Clone, Debug, PartialEq)]
pub enum ChiValue {
    Exact(Rational),
    Float(f64),
}

impl ChiValue {
    pub fn to_f64(&self) -> f64 {
        match self {
            ChiValue::Exact(r) => rational_to_f64(r),
            ChiValue::Float(x) => *x,
        }
    }

    pub fn exact(&self) -> Option<&Rational> {
        match self {
            ChiValue::Exact(r) => Some(r),
            ChiValue::Float(_) => None,
        }
    }

    fn add(&self, other: &ChiValue) -> ChiValue {
        match (self, other) {
            (ChiValue::Exact(a), ChiValue::Exact(b)) => ChiValue::Exact(a + b),
            (a, b) => ChiValue::Float(a.to_f64() + b.to_f64()),
        }
    }

    fn half(&self) -> ChiValue {
        match self {
            ChiValue::Exact(a) => ChiValue::Exact(a * rat(1, 2)),
            ChiValue::Float(x) => ChiValue::Float(x / 2.0),
        }
    }
}

impl fmt::Display for ChiValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ChiValue::Exact(r) => write!(f, "{r}"),
            ChiValue::Float(x) => write!(f, "{}", serde_util::sig12(*x)),
        }
    }
}

impl Serialize for ChiValue {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = s.serialize_struct("ChiValue", 2)?;
        st.serialize_field("exact", &self.exact().map(ToString::to_string))?;
        st.serialize_field("value", &serde_util::sig12(self.to_f64()))?;
        st.end()
    }
}

/// Contribution of one orbit to the resonance sum.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OrbitContribution {
    pub orbit: String,
    pub class: OrbitClass,
    pub sigma: i8,
    #[serde(serialize_with = "serde_util::f64_12")]
    pub delta: f64,
    pub direction: Direction,
    pub contribution: ChiValue,
}

fn contribution(o: &ReebOrbit, signed: bool) -> ChiValue {
    let sigma = if signed { i64::from(o.sigma) } else { 1 };
    match &o.mean_index {
        MeanIndex::Exact(d) => ChiValue::Exact(o.class.weight() * rat(sigma, 1) / d.abs()),
        MeanIndex::Numeric(d) => ChiValue::Float(rational_to_f64(&o.class.weight()) * sigma as f64 / d.abs()),
    }
}

fn resonance_sum(system: &ReebOrbitSystem, direction: Direction, signed: bool) -> Result<ChiValue, ContactError> {
    system.nonzero_deltas()?;
    Ok(system
        .orbits
        .iter()
        .filter(|o| direction.includes(o.mean_index.to_f64()))
        .fold(ChiValue::Exact(Rational::zero()), |acc, o| acc.add(&contribution(o, signed))))
}

/// `χ±` from the resonance sum, exact when every contributing `Δ` is rational.
pub fn chi_closed_form(system: &ReebOrbitSystem, direction: Direction) -> Result<ChiValue, ContactError> {
    resonance_sum(system, direction, true)
}

/// `χ⁺`, `χ⁻`, their mean and the per-orbit table.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EulerReport {
    pub chi_plus: ChiValue,
    pub chi_minus: ChiValue,
    pub chi_mean: ChiValue,
    pub per_orbit: Vec<OrbitContribution>,
}

pub fn euler_report(system: &ReebOrbitSystem) -> Result<EulerReport, ContactError> {
    let chi_plus = chi_closed_form(system, Direction::Positive)?;
    let chi_minus = chi_closed_form(system, Direction::Negative)?;
    let chi_mean = chi_plus.add(&chi_minus).half();
    let per_orbit = system
        .orbits
        .iter()
        .map(|o| {
            let delta = o.mean_index.to_f64();
            OrbitContribution {
                orbit: o.name.clone(),
                class: o.class,
                sigma: o.sigma,
                delta,
                direction: if delta > 0.0 { Direction::Positive } else { Direction::Negative },
                contribution: contribution(o, true),
            }
        })
        .collect();
    Ok(EulerReport { chi_plus, chi_minus, chi_mean, per_orbit })
}

/// One generator `xᵏ` of the truncated complex.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct GeneratorRecord {
    pub orbit: String,
    pub k: u64,
    pub degree: i64,
}

/// Generator counts of `C⁽ᴺ⁾` by degree.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TruncatedComplex {
    pub direction: Direction,
    pub n: u32,
    #[serde(rename = "N")]
    pub big_n: u64,
    pub window: (i64, i64),
    pub dims: BTreeMap<i64, u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub generator_log: Option<Vec<GeneratorRecord>>,
    /// Generators breaking `−2 < |xᵏ| − kΔ < 2n − 4`.
    pub index_bound_violations: Vec<GeneratorRecord>,
}

impl TruncatedComplex {
    pub fn total_generators(&self) -> u64 {
        self.dims.values().sum()
    }

    pub fn max_dim(&self) -> u64 {
        self.dims.values().copied().max().unwrap_or(0)
    }
}

struct OrbitCounts {
    dims: BTreeMap<i64, u64>,
    log: Vec<GeneratorRecord>,
    violations: Vec<GeneratorRecord>,
}

/// Iterates of `orbit` with degree in `[low, high]`.
fn enumerate_orbit(
    orbit: &ReebOrbit,
    n: u32,
    low: i64,
    high: i64,
    log: bool,
) -> Result<OrbitCounts, ContactError> {
    let delta = orbit.mean_index.to_f64();
    let reach = low.unsigned_abs().max(high.unsigned_abs()) as f64;
    let k_hi = ((reach + 2.0 * f64::from(n)) / delta.abs()).ceil() as u64 + 1;
    let mut out = OrbitCounts { dims: BTreeMap::new(), log: Vec::new(), violations: Vec::new() };
    let slack_hi = 2.0 * f64::from(n) - 4.0;
    for k in (1..=k_hi).filter(|&k| orbit.class.admits(k)) {
        let degree = grade(orbit, k, n)?;
        if degree < low || degree > high {
            continue;
        }
        *out.dims.entry(degree).or_default() += 1;
        let gap = degree as f64 - k as f64 * delta;
        let record = || GeneratorRecord { orbit: orbit.name.clone(), k, degree };
        if !(gap > -2.0 && gap < slack_hi) {
            out.violations.push(record());
        }
        if log {
            out.log.push(record());
        }
    }
    Ok(out)
}

/// Enumerates `C⁽ᴺ⁾` for one direction. Orbits are processed in parallel and
/// merged in catalogue order.
pub fn build_truncated_complex(
    system: &ReebOrbitSystem,
    big_n: u64,
    direction: Direction,
    log: bool,
) -> Result<TruncatedComplex, ContactError> {
    system.nonzero_deltas()?;
    let (low, high) = direction.window(system.n, big_n);
    if high <= low {
        return Err(ContactError::Domain(format!(
            "N = {big_n} leaves an empty {direction} window (need N > {})",
            low.abs().max(2)
        )));
    }
    let parts = system
        .orbits
        .par_iter()
        .filter(|o| direction.includes(o.mean_index.to_f64()))
        .map(|o| enumerate_orbit(o, system.n, low, high, log))
        .collect::<Result<Vec<_>, _>>()?;
    let mut dims = BTreeMap::new();
    let mut generator_log = Vec::new();
    let mut index_bound_violations = Vec::new();
    for p in parts {
        for (d, c) in p.dims {
            *dims.entry(d).or_default() += c;
        }
        generator_log.extend(p.log);
        index_bound_violations.extend(p.violations);
    }
    Ok(TruncatedComplex {
        direction,
        n: system.n,
        big_n,
        window: (low, high),
        dims,
        generator_log: log.then_some(generator_log),
        index_bound_violations,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ChiTruncated {
    pub chi_value: i64,
    #[serde(serialize_with = "serde_util::f64_12")]
    pub normalized: f64,
}

/// `χ(C⁽ᴺ⁾) = Σ (−1)ˡ dim C_l` and `χ/N`.
pub fn chi_truncated(complex: &TruncatedComplex) -> ChiTruncated {
    let chi_value: i64 =
        complex.dims.iter().map(|(&l, &c)| if l.rem_euclid(2) == 0 { c as i64 } else { -(c as i64) }).sum();
    ChiTruncated { chi_value, normalized: chi_value as f64 / complex.big_n as f64 }
}

/// All-degree mean Euler characteristic at level `N`: `Σ_{|l| ≤ N} (−1)ˡ dim C_l / (2N + 1)`.
pub fn chi_all_degrees(system: &ReebOrbitSystem, big_n: u64) -> Result<f64, ContactError> {
    system.nonzero_deltas()?;
    let b = big_n as i64;
    let parts = system
        .orbits
        .par_iter()
        .map(|o| enumerate_orbit(o, system.n, -b, b, false))
        .collect::<Result<Vec<_>, _>>()?;
    let chi: i64 = parts
        .iter()
        .flat_map(|p| p.dims.iter())
        .map(|(&l, &c)| if l.rem_euclid(2) == 0 { c as i64 } else { -(c as i64) })
        .sum();
    Ok(chi as f64 / (2 * big_n + 1) as f64)
}

/// A-priori bound on `|χ(C⁽ᴺ⁾) − N·χ±|`, valid for every `N` when the index
/// bounds hold: `Σ_good (4n/|Δ| + 1) + Σ_bad (2n/|Δ| + 1)`.
pub fn boundary_constant(system: &ReebOrbitSystem, direction: Direction) -> f64 {
    let n = f64::from(system.n);
    system
        .orbits
        .iter()
        .filter(|o| direction.includes(o.mean_index.to_f64()))
        .map(|o| {
            let d = o.mean_index.to_f64().abs();
            match o.class {
                OrbitClass::Good => 4.0 * n / d + 1.0,
                OrbitClass::Bad => 2.0 * n / d + 1.0,
            }
        })
        .sum()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LimitRow {
    #[serde(rename = "N")]
    pub big_n: u64,
    pub chi: i64,
    #[serde(serialize_with = "serde_util::f64_12")]
    pub normalized: f64,
    #[serde(serialize_with = "serde_util::f64_12")]
    pub difference: f64,
    /// `N · |χ/N − χ±|`.
    #[serde(serialize_with = "serde_util::f64_12")]
    pub scaled_difference: f64,
}

/// Comparison of `χ(C⁽ᴺ⁾)/N` with the closed form along `N_list`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LimitComparison {
    pub direction: Direction,
    pub closed_form: ChiValue,
    pub rows: Vec<LimitRow>,
    /// Largest `N·|diff|` over the two largest `N`.
    #[serde(serialize_with = "serde_util::f64_12")]
    pub c_fit: f64,
    #[serde(serialize_with = "serde_util::f64_12")]
    pub c_theory: f64,
    /// `N·|diff| ≤ c_theory` at every `N`.
    pub within_envelope: bool,
    pub diagnostics: Vec<String>,
}

pub fn chi_limit_compare(
    system: &ReebOrbitSystem,
    direction: Direction,
    n_list: &[u64],
) -> Result<LimitComparison, ContactError> {
    if n_list.is_empty() {
        return Err(ContactError::Domain("N list is empty".into()));
    }
    let closed_form = chi_closed_form(system, direction)?;
    let target = closed_form.to_f64();
    let mut ns = n_list.to_vec();
    ns.sort_unstable();
    ns.dedup();
    let rows = ns
        .iter()
        .map(|&big_n| {
            let t = chi_truncated(&build_truncated_complex(system, big_n, direction, false)?);
            let difference = (t.normalized - target).abs();
            Ok(LimitRow {
                big_n,
                chi: t.chi_value,
                normalized: t.normalized,
                difference,
                scaled_difference: difference * big_n as f64,
            })
        })
        .collect::<Result<Vec<_>, ContactError>>()?;
    let c_fit = rows.iter().rev().take(2).map(|r| r.scaled_difference).fold(0.0, f64::max);
    let c_theory = boundary_constant(system, direction);
    let mut diagnostics = Vec::new();
    for r in &rows {
        if r.scaled_difference > c_theory + 1e-9 * r.big_n as f64 {
            diagnostics.push(format!(
                "N = {}: N·|χ/N − χ| = {} exceeds the boundary constant {}",
                r.big_n,
                serde_util::sig12(r.scaled_difference),
                serde_util::sig12(c_theory)
            ));
        }
    }
    Ok(LimitComparison { direction, closed_form, rows, c_fit, c_theory, within_envelope: diagnostics.is_empty(), diagnostics })
}

/// CSV rows `direction,N,chi,normalized,closed_form,difference` (no header).
pub fn limit_series_csv_rows(cmp: &LimitComparison) -> String {
    let mut out = String::new();
    for r in &cmp.rows {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            cmp.direction,
            r.big_n,
            r.chi,
            serde_util::sig12(r.normalized),
            serde_util::sig12(cmp.closed_form.to_f64()),
            serde_util::sig12(r.difference)
        ));
    }
    out
}

pub const LIMIT_CSV_HEADER: &str = "direction,N,chi,normalized,closed_form,difference\n";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum IndexBound {
    /// `|μ_CZ(xᵏ) − kΔ| < n − 1`
    #[serde(rename = "cz")]
    ConleyZehnder,
    /// `−2 < |xᵏ| − kΔ < 2n − 4`
    #[serde(rename = "degree")]
    Degree,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IndexViolation {
    pub orbit: String,
    pub k: u64,
    pub bound: IndexBound,
    /// Signed distance to the violated endpoint (negative or zero).
    #[serde(serialize_with = "serde_util::f64_12")]
    pub margin: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IndexBoundsReport {
    pub k_max: u64,
    pub violations: Vec<IndexViolation>,
    /// Orbits whose law stopped before `k_max`, with the reason.
    pub truncated: Vec<String>,
}

impl IndexBoundsReport {
    pub fn clean(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks both index inequalities for every orbit and `k ≤ k_max`.
pub fn validate_index_bounds(system: &ReebOrbitSystem, k_max: u64) -> Result<IndexBoundsReport, ContactError> {
    if k_max == 0 {
        return Err(ContactError::Domain("k_max must be at least 1".into()));
    }
    let n = system.n;
    let nf = f64::from(n);
    let per_orbit: Vec<(Vec<IndexViolation>, Option<String>)> = system
        .orbits
        .par_iter()
        .map(|o| {
            let delta = o.mean_index.to_f64();
            let mut violations = Vec::new();
            for k in 1..=k_max {
                let mu = match o.mu(k, n) {
                    Ok(mu) => mu,
                    Err(e) => return (violations, Some(format!("{}: stopped at k = {k}: {e}", o.name))),
                };
                let gap = mu as f64 - k as f64 * delta;
                let m1 = (nf - 1.0) - gap.abs();
                if m1 <= 0.0 {
                    violations.push(IndexViolation { orbit: o.name.clone(), k, bound: IndexBound::ConleyZehnder, margin: m1 });
                }
                let g2 = gap + nf - 3.0;
                let m2 = (g2 + 2.0).min(2.0 * nf - 4.0 - g2);
                if m2 <= 0.0 {
                    violations.push(IndexViolation { orbit: o.name.clone(), k, bound: IndexBound::Degree, margin: m2 });
                }
            }
            (violations, None)
        })
        .collect();
    let mut violations = Vec::new();
    let mut truncated = Vec::new();
    for (v, t) in per_orbit {
        violations.extend(v);
        truncated.extend(t);
    }
    Ok(IndexBoundsReport { k_max, violations, truncated })
}

/// Unsigned resonance sum against the generator density of `C⁽ᴺ⁾`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MorseReport {
    pub direction: Direction,
    pub lhs: ChiValue,
    /// `(N, total generators / N)`.
    pub empirical_rhs: Vec<(u64, f64)>,
    #[serde(serialize_with = "serde_util::f64_12")]
    pub tolerance: f64,
    /// `lhs ≥ density(N_max) − tolerance`.
    pub satisfied: bool,
}

pub const MORSE_TOLERANCE: f64 = 0.005;

pub fn asymptotic_morse(
    system: &ReebOrbitSystem,
    direction: Direction,
    n_list: &[u64],
) -> Result<MorseReport, ContactError> {
    if n_list.is_empty() {
        return Err(ContactError::Domain("N list is empty".into()));
    }
    let lhs = resonance_sum(system, direction, false)?;
    let mut ns = n_list.to_vec();
    ns.sort_unstable();
    ns.dedup();
    let empirical_rhs = ns
        .iter()
        .map(|&big_n| {
            let c = build_truncated_complex(system, big_n, direction, false)?;
            Ok((big_n, serde_util::sig12(c.total_generators() as f64 / big_n as f64)))
        })
        .collect::<Result<Vec<_>, ContactError>>()?;
    let last = empirical_rhs.last().map_or(0.0, |r| r.1);
    let satisfied = lhs.to_f64() >= last - MORSE_TOLERANCE;
    Ok(MorseReport { direction, lhs, empirical_rhs, tolerance: MORSE_TOLERANCE, satisfied })
}

/// `(χ⁺ + χ⁻)/2` from the closed form.
pub fn chi_mean_closed_form(system: &ReebOrbitSystem) -> Result<ChiValue, ContactError> {
    Ok(chi_closed_form(system, Direction::Positive)?.add(&chi_closed_form(system, Direction::Negative)?).half())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{ellipsoid_system, engine_orbit, Block, EllipsoidSpec};

    fn golden() -> f64 {
        (1.0 + 5f64.sqrt()) / 2.0
    }

    fn bad_orbit(delta_winding: u32) -> ReebOrbit {
        let map = LinearizedReturnMap::new(
            vec![Block::NegativeHyperbolic { eigenvalue: -2.0, winding: delta_winding }],
            0,
        )
        .unwrap();
        engine_orbit("y", map, 2).unwrap()
    }

    fn table_orbit(name: &str, class: OrbitClass, delta: MeanIndex, values: Vec<i64>, extrapolate: bool, n: u32) -> ReebOrbit {
        ReebOrbit::new(name.into(), class, delta, CzLaw::Table { values, extrapolate }, None, n).unwrap()
    }

    #[test]
    fn grading() {
        let o = table_orbit("x", OrbitClass::Good, MeanIndex::Exact(rat(3, 1)), vec![3], false, 2);
        assert_eq!(grade(&o, 1, 2).unwrap(), 2);
        assert_eq!(o.sigma, 1);
        let o = table_orbit("x", OrbitClass::Good, MeanIndex::Exact(rat(1, 1)), vec![0], false, 3);
        assert_eq!(grade(&o, 1, 3).unwrap(), 0);
        assert!(matches!(grade(&o, 0, 3), Err(ContactError::Domain(_))));
        assert!(matches!(grade(&o, 2, 3), Err(ContactError::LawUndefined { .. })));

        let sys = ellipsoid_system(&EllipsoidSpec::numeric(vec![1.0, golden()]).unwrap()).unwrap();
        assert_eq!(grade(&sys.orbits[0], 2, 2).unwrap(), 6);
    }

    #[test]
    fn sigma_must_match() {
        let r = ReebOrbit::new(
            "x".into(),
            OrbitClass::Good,
            MeanIndex::Exact(rat(3, 1)),
            CzLaw::Table { values: vec![3], extrapolate: false },
            Some(-1),
            2,
        );
        assert!(matches!(r, Err(ContactError::Invalid(_))));
    }

    #[test]
    fn parity_law_is_enforced() {
        let r = ReebOrbit::new(
            "x".into(),
            OrbitClass::Good,
            MeanIndex::Exact(rat(2, 1)),
            CzLaw::Table { values: vec![1, 4], extrapolate: false },
            None,
            2,
        );
        assert!(r.is_err());
        let y = bad_orbit(1);
        assert_eq!(y.class, OrbitClass::Bad);
        assert_eq!((1..=4).map(|k| y.mu(k, 2).unwrap()).collect::<Vec<_>>(), vec![3, 6, 9, 12]);
    }

    #[test]
    fn closed_form_examples() {
        let w = EllipsoidSpec::rational(vec![rat(1, 1), rat(2, 1), rat(3, 1)]).unwrap();
        let sys = ellipsoid_system(&w).unwrap();
        assert_eq!(chi_closed_form(&sys, Direction::Positive).unwrap(), ChiValue::Exact(rat(1, 2)));
        assert_eq!(chi_closed_form(&sys, Direction::Negative).unwrap(), ChiValue::Exact(rat(0, 1)));

        let sys = ReebOrbitSystem::new(2, vec![bad_orbit(1)], None, false).unwrap();
        assert_eq!(chi_closed_form(&sys, Direction::Positive).unwrap(), ChiValue::Exact(rat(1, 6)));

        let zero = table_orbit("z", OrbitClass::Good, MeanIndex::Exact(rat(0, 1)), vec![1], false, 2);
        let sys = ReebOrbitSystem::new(2, vec![zero], None, false).unwrap();
        assert!(matches!(chi_closed_form(&sys, Direction::Positive), Err(ContactError::MeanIndexZero(_))));
        assert!(matches!(build_truncated_complex(&sys, 10, Direction::Positive, false), Err(ContactError::MeanIndexZero(_))));
    }

    #[test]
    fn bad_orbit_complex() {
        let sys = ReebOrbitSystem::new(2, vec![bad_orbit(1)], None, false).unwrap();
        let c = build_truncated_complex(&sys, 30, Direction::Positive, true).unwrap();
        assert_eq!(c.dims.keys().copied().collect::<Vec<_>>(), vec![2, 8, 14, 20, 26]);
        assert!(c.index_bound_violations.is_empty());
        let log = c.generator_log.as_ref().unwrap();
        assert_eq!(log.iter().map(|g| g.k).collect::<Vec<_>>(), vec![1, 3, 5, 7, 9]);
        let cmp = chi_limit_compare(&sys, Direction::Positive, &[100, 1000, 10_000]).unwrap();
        assert!(cmp.within_envelope);
        for r in &cmp.rows {
            assert!(r.difference <= 1.0 / r.big_n as f64 + 1e-15, "{r:?}");
        }
    }

    #[test]
    fn truncated_chi_examples() {
        let mk = |dims: &[(i64, u64)], big_n| TruncatedComplex {
            direction: Direction::Positive,
            n: 2,
            big_n,
            window: (0, big_n as i64),
            dims: dims.iter().copied().collect(),
            generator_log: None,
            index_bound_violations: Vec::new(),
        };
        let t = chi_truncated(&mk(&[(2, 1), (4, 1), (6, 1)], 6));
        assert_eq!((t.chi_value, t.normalized), (3, 0.5));
        assert_eq!(chi_truncated(&mk(&[(2, 1), (3, 1)], 3)).chi_value, 0);
        let empty = ReebOrbitSystem::empty(3).unwrap();
        let c = build_truncated_complex(&empty, 100, Direction::Positive, false).unwrap();
        assert!(c.dims.is_empty());
        let cmp = chi_limit_compare(&empty, Direction::Negative, &[100, 1000]).unwrap();
        assert!(cmp.rows.iter().all(|r| r.chi == 0 && r.difference == 0.0));
        assert!(asymptotic_morse(&empty, Direction::Positive, &[100]).unwrap().satisfied);
    }

    #[test]
    fn golden_ellipsoid_converges() {
        let sys = ellipsoid_system(&EllipsoidSpec::numeric(vec![1.0, golden()]).unwrap()).unwrap();
        let c = build_truncated_complex(&sys, 10_000, Direction::Positive, false).unwrap();
        assert!(c.dims.keys().all(|d| d % 2 == 0));
        assert!(c.max_dim() <= sys.window_dimension_bound().unwrap());
        let cmp = chi_limit_compare(&sys, Direction::Positive, &[100, 1000, 10_000]).unwrap();
        assert!(cmp.within_envelope, "{cmp:?}");
        assert!(cmp.rows[2].difference <= 0.005);
        let morse = asymptotic_morse(&sys, Direction::Positive, &[100, 1000, 10_000]).unwrap();
        assert!(morse.satisfied);
        assert!((morse.empirical_rhs[2].1 - 0.5).abs() <= 0.005);
        assert!(validate_index_bounds(&sys, 1000).unwrap().clean());
    }

    #[test]
    fn negative_direction_mirrors_positive() {
        // Δ = −3 via twist −2 on a winding-0 negative hyperbolic block: μ = k − 4k = −3k.
        let map = LinearizedReturnMap::new(vec![Block::NegativeHyperbolic { eigenvalue: -2.0, winding: 0 }], -2).unwrap();
        let y = engine_orbit("y", map, 2).unwrap();
        assert_eq!(y.mean_index, MeanIndex::Exact(rat(-3, 1)));
        let sys = ReebOrbitSystem::new(2, vec![y], None, false).unwrap();
        assert_eq!(chi_closed_form(&sys, Direction::Positive).unwrap(), ChiValue::Exact(rat(0, 1)));
        let chi_minus = chi_closed_form(&sys, Direction::Negative).unwrap();
        // degrees −3k − 1 for odd k: −4, −10, … all even
        assert_eq!(chi_minus, ChiValue::Exact(rat(1, 6)));
        let cmp = chi_limit_compare(&sys, Direction::Negative, &[100, 1000, 10_000]).unwrap();
        assert!(cmp.within_envelope && cmp.rows[2].difference < 1e-3, "{cmp:?}");
        let all = chi_all_degrees(&sys, 10_000).unwrap();
        let mean = chi_mean_closed_form(&sys).unwrap().to_f64();
        assert!((all - mean).abs() < 1e-3);
    }

    #[test]
    fn index_bound_validation() {
        // μ(xᵏ) = kΔ + n breaks the CZ bound at k = 1.
        let planted = table_orbit("p", OrbitClass::Good, MeanIndex::Exact(rat(2, 1)), vec![4, 6, 8], false, 2);
        let sys = ReebOrbitSystem::new(2, vec![planted], None, false).unwrap();
        let rep = validate_index_bounds(&sys, 3).unwrap();
        assert_eq!(rep.violations[0].k, 1);
        assert_eq!(rep.violations[0].bound, IndexBound::ConleyZehnder);

        let hyp = LinearizedReturnMap::new(vec![Block::NegativeHyperbolic { eigenvalue: -2.0, winding: 1 }, Block::NegativeHyperbolic { eigenvalue: -2.0, winding: 0 }], 0).unwrap();
        let sys = ReebOrbitSystem::new(3, vec![engine_orbit("h", hyp, 3).unwrap()], None, false).unwrap();
        assert!(validate_index_bounds(&sys, 1000).unwrap().clean());

        let w = EllipsoidSpec::rational(vec![rat(1, 1), rat(3, 2)]).unwrap();
        let sys = ellipsoid_system(&w).unwrap();
        let rep = validate_index_bounds(&sys, 10).unwrap();
        assert!(rep.clean());
        assert_eq!(rep.truncated.len(), 2);
    }

    #[test]
    fn table_extrapolation() {
        // exactly linear
        let o = table_orbit("h", OrbitClass::Good, MeanIndex::Exact(rat(2, 1)), vec![2, 4], true, 3);
        assert_eq!(o.mu(10, 3).unwrap(), 20);
        // n = 2 parity rule on the golden ellipsoid orbit
        let g = EllipsoidWeights::Numeric(vec![1.0, golden()]);
        let values: Vec<i64> = (1..=5).map(|k| g.mu(0, k).unwrap()).collect();
        let delta = g.mean_index(0);
        let o = table_orbit("g", OrbitClass::Good, delta, values, true, 2);
        for k in 6..=200 {
            assert_eq!(o.mu(k, 2).unwrap(), g.mu(0, k).unwrap());
        }
        // n = 3, non-linear: refused
        let g3 = EllipsoidWeights::Numeric(vec![1.0, golden(), 2f64.sqrt()]);
        let values: Vec<i64> = (1..=5).map(|k| g3.mu(0, k).unwrap()).collect();
        let o = table_orbit("g", OrbitClass::Good, g3.mean_index(0), values, true, 3);
        assert!(matches!(o.mu(6, 3), Err(ContactError::LawUndefined { .. })));
    }

    #[test]
    fn cf2_is_reported() {
        let low = table_orbit("x", OrbitClass::Good, MeanIndex::Exact(rat(2, 1)), vec![2, 4, 6], true, 2);
        let sys = ReebOrbitSystem::new(2, vec![low], None, true).unwrap();
        let v = sys.cf2_violations();
        assert_eq!(v, vec![Cf2Violation { orbit: "x".into(), k: 1, degree: 1 }]);
        assert_eq!(sys.warnings().len(), 1);
    }

    #[test]
    fn system_file_round_trip() {
        let sys = ellipsoid_system(&EllipsoidSpec::numeric(vec![1.0, golden()]).unwrap()).unwrap();
        let text = serde_json::to_string(&sys).unwrap();
        let back: ReebOrbitSystem = serde_json::from_str(&text).unwrap();
        assert_eq!(back, sys);

        let w = ellipsoid_system(&EllipsoidSpec::rational(vec![rat(1, 1), rat(5, 3)]).unwrap()).unwrap();
        let back: ReebOrbitSystem = serde_json::from_str(&serde_json::to_string(&w).unwrap()).unwrap();
        assert_eq!(back, w);

        let text = r#"{"n": 2, "orbits": [{"name": "y", "class": "bad", "delta": "3",
            "cz_law": {"type": "blocks", "blocks": [{"kind": "negative-hyperbolic", "eigenvalue": -2.0, "winding": 1}]}}]}"#;
        let s: ReebOrbitSystem = serde_json::from_str(text).unwrap();
        assert_eq!(s.orbits[0].sigma, 1);
        let wrong = text.replace("\"bad\"", "\"good\"");
        assert!(serde_json::from_str::<ReebOrbitSystem>(&wrong).is_err());
    }
}
