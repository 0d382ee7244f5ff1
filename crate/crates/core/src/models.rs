//! Model generators: a rotation-block index engine for linearized return maps,
//! irrational and rational ellipsoids, quadratic flows on ℂPⁿ and the
//! Brieskorn-sphere mean Euler characteristic formula.

use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::contact::{ContactError, CzLaw, MeanIndex, OrbitClass, ReebOrbit, ReebOrbitSystem};
use crate::exactnum::{rat, ExactScalar, Int, Rational, SymbolTable};
use crate::resonance::{ChernNumber, MeanIndexProblem, ResonanceError};

/// Distance from an integer below which `kθ` counts as degenerate.
pub const DEGENERACY_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("invalid model: {0}")]
    Invalid(String),
    #[error("degenerate iterate k = {k}: {detail}")]
    DegenerateIterate { k: u64, detail: String },
    #[error("degenerate spectrum: {0}")]
    DegenerateSpectrum(String),
    #[error(transparent)]
    Resonance(#[from] ResonanceError),
    #[error(transparent)]
    System(Box<ContactError>),
}

impl From<ContactError> for ModelError {
    fn from(e: ContactError) -> Self {
        ModelError::System(Box::new(e))
    }
}

/// One invariant block of a linearized return map.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Block {
    /// Rotation by `2πθ` per period.
    Elliptic { theta: f64 },
    PositiveHyperbolic { eigenvalue: f64 },
    NegativeHyperbolic {
        eigenvalue: f64,
        #[serde(default)]
        winding: u32,
    },
}

/// Normal form of the linearized return map of a Reeb orbit.
///
/// `twist` adds a full-turn rotation in the Reeb-normal plane per period
/// (`2·twist·k` to `μ_CZ(xᵏ)` and `2·twist` to `Δ`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinearizedReturnMap {
    pub blocks: Vec<Block>,
    #[serde(default)]
    pub twist: i64,
}

impl LinearizedReturnMap {
    pub fn new(blocks: Vec<Block>, twist: i64) -> Result<Self, ModelError> {
        let map = LinearizedReturnMap { blocks, twist };
        map.validate()?;
        Ok(map)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        for (i, b) in self.blocks.iter().enumerate() {
            let ok = match *b {
                Block::Elliptic { theta } => theta.is_finite() && theta > 0.0,
                Block::PositiveHyperbolic { eigenvalue } => eigenvalue.is_finite() && eigenvalue > 1.0,
                Block::NegativeHyperbolic { eigenvalue, .. } => eigenvalue.is_finite() && eigenvalue < -1.0,
            };
            if !ok {
                return Err(ModelError::Invalid(format!("block {i} out of range: {b:?}")));
            }
        }
        Ok(())
    }

    pub fn negative_hyperbolic_count(&self) -> usize {
        self.blocks.iter().filter(|b| matches!(b, Block::NegativeHyperbolic { .. })).count()
    }

    /// Bad iff an odd number of eigenvalues lie below −1.
    pub fn class(&self) -> OrbitClass {
        if self.negative_hyperbolic_count() % 2 == 1 {
            OrbitClass::Bad
        } else {
            OrbitClass::Good
        }
    }

    /// `Δ = lim μ_CZ(xᵏ)/k`; exact unless an elliptic block is present.
    pub fn mean_index(&self) -> MeanIndex {
        let mut exact = 2 * self.twist;
        let mut float = 0.0;
        let mut elliptic = false;
        for b in &self.blocks {
            match *b {
                Block::Elliptic { theta } => {
                    elliptic = true;
                    float += 2.0 * theta;
                }
                Block::PositiveHyperbolic { .. } => {}
                Block::NegativeHyperbolic { winding, .. } => exact += 2 * i64::from(winding) + 1,
            }
        }
        if elliptic {
            MeanIndex::Numeric(exact as f64 + float)
        } else {
            MeanIndex::Exact(Rational::from_integer(Int::from(exact)))
        }
    }

    /// `μ_CZ(xᵏ)`.
    pub fn elliptic_count(&self) -> usize {
        self.blocks.iter().filter(|b| matches!(b, Block::Elliptic { .. })).count()
    }

    pub fn mu(&self, k: u64) -> Result<i64, ModelError> {
        if k == 0 {
            return Err(ModelError::Invalid("iterate k must be positive".into()));
        }
        let kf = k as f64;
        let ki = k as i64;
        let mut mu = 2 * self.twist * ki;
        for b in &self.blocks {
            match *b {
                Block::Elliptic { theta } => {
                    let x = kf * theta;
                    if (x - x.round()).abs() < DEGENERACY_TOL {
                        return Err(ModelError::DegenerateIterate {
                            k,
                            detail: format!("k·θ = {x} is an integer for θ = {theta}"),
                        });
                    }
                    mu += 2 * x.floor() as i64 + 1;
                }
                Block::PositiveHyperbolic { .. } => {}
                Block::NegativeHyperbolic { winding, .. } => mu += (2 * i64::from(winding) + 1) * ki,
            }
        }
        Ok(mu)
    }
}

/// `μ_CZ(xᵏ)`, mean index and class from the block engine.
#[derive(Clone, Debug, PartialEq)]
pub struct IndexData {
    pub mu: i64,
    pub mean_index: MeanIndex,
    pub class: OrbitClass,
}

pub fn index_engine(map: &LinearizedReturnMap, k: u64) -> Result<IndexData, ModelError> {
    map.validate()?;
    Ok(IndexData { mu: map.mu(k)?, mean_index: map.mean_index(), class: map.class() })
}

/// Ellipsoid weights `a₁ … aₙ`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", content = "values", rename_all = "kebab-case")]
pub enum EllipsoidWeights {
    #[serde(with = "crate::serde_util::rational_vec")]
    FormalRational(Vec<Rational>),
    Numeric(Vec<f64>),
}

impl EllipsoidWeights {
    pub fn len(&self) -> usize {
        match self {
            EllipsoidWeights::FormalRational(w) => w.len(),
            EllipsoidWeights::Numeric(w) => w.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let ok = match self {
            EllipsoidWeights::FormalRational(w) => w.iter().all(Signed::is_positive),
            EllipsoidWeights::Numeric(w) => w.iter().all(|a| a.is_finite() && *a > 0.0),
        };
        if !ok {
            return Err(ModelError::Invalid("ellipsoid weights must be positive".into()));
        }
        if self.len() < 2 {
            return Err(ModelError::Invalid("an ellipsoid needs at least two weights".into()));
        }
        Ok(())
    }

    pub fn as_f64(&self) -> Vec<f64> {
        match self {
            EllipsoidWeights::FormalRational(w) => w.iter().map(crate::exactnum::rational_to_f64).collect(),
            EllipsoidWeights::Numeric(w) => w.clone(),
        }
    }

    /// `Δⱼ = 2 Σᵢ aⱼ/aᵢ`.
    pub fn mean_index(&self, j: usize) -> MeanIndex {
        match self {
            EllipsoidWeights::FormalRational(w) => {
                MeanIndex::Exact(w.iter().map(|ai| &w[j] / ai).sum::<Rational>() * Rational::from_integer(Int::from(2)))
            }
            EllipsoidWeights::Numeric(w) => MeanIndex::Numeric(2.0 * w.iter().map(|ai| w[j] / ai).sum::<f64>()),
        }
    }

    /// Smallest `k` with `k·aⱼ/aᵢ ∈ ℤ` for some `i ≠ j` (formal mode only).
    pub fn first_resonant_iterate(&self, j: usize) -> Option<u64> {
        let EllipsoidWeights::FormalRational(w) = self else { return None };
        w.iter()
            .enumerate()
            .filter(|&(i, _)| i != j)
            .filter_map(|(_, ai)| (&w[j] / ai).denom().to_u64())
            .min()
    }

    /// `μ_CZ(γⱼᵏ) = n − 1 + 2 Σᵢ ⌊k aⱼ/aᵢ⌋`.
    pub fn mu(&self, j: usize, k: u64) -> Result<i64, ModelError> {
        if k == 0 {
            return Err(ModelError::Invalid("iterate k must be positive".into()));
        }
        let n = self.len() as i64;
        match self {
            EllipsoidWeights::FormalRational(w) => {
                if let Some(kr) = self.first_resonant_iterate(j).filter(|&kr| k >= kr) {
                    return Err(ModelError::DegenerateIterate {
                        k,
                        detail: format!("formal rational weights resonate from k = {kr} on orbit {j}"),
                    });
                }
                let kk = Int::from(k);
                let mut sum = Int::zero();
                for ai in w {
                    let r = &w[j] / ai;
                    sum += (&kk * r.numer()).div_floor(r.denom());
                }
                Ok(n - 1 + 2 * sum.to_i64().ok_or_else(|| ModelError::Invalid("index overflow".into()))?)
            }
            EllipsoidWeights::Numeric(w) => {
                let kf = k as f64;
                let mut sum = 0i64;
                for (i, ai) in w.iter().enumerate() {
                    if i == j {
                        sum += k as i64;
                        continue;
                    }
                    let x = kf * (w[j] / ai);
                    if (x - x.round()).abs() < DEGENERACY_TOL {
                        return Err(ModelError::DegenerateIterate {
                            k,
                            detail: format!("k·a{j}/a{i} = {x} is within {DEGENERACY_TOL} of an integer"),
                        });
                    }
                    sum += x.floor() as i64;
                }
                Ok(n - 1 + 2 * sum)
            }
        }
    }

    /// The same orbit as a block map: elliptic `θᵢ = aⱼ/aᵢ` for `i ≠ j` plus one twist.
    pub fn as_return_map(&self, j: usize) -> LinearizedReturnMap {
        let w = self.as_f64();
        let blocks = w
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != j)
            .map(|(_, ai)| Block::Elliptic { theta: w[j] / ai })
            .collect();
        LinearizedReturnMap { blocks, twist: 1 }
    }
}

/// Near-integer `k aⱼ/aᵢ` found while screening a numeric ellipsoid.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Degeneracy {
    pub orbit: usize,
    pub against: usize,
    pub k: u64,
    #[serde(serialize_with = "crate::serde_util::f64_12")]
    pub distance: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EllipsoidSpec {
    pub weights: EllipsoidWeights,
}

impl EllipsoidSpec {
    pub fn rational(weights: Vec<Rational>) -> Result<Self, ModelError> {
        let spec = EllipsoidSpec { weights: EllipsoidWeights::FormalRational(weights) };
        spec.weights.validate()?;
        Ok(spec)
    }

    pub fn numeric(weights: Vec<f64>) -> Result<Self, ModelError> {
        let spec = EllipsoidSpec { weights: EllipsoidWeights::Numeric(weights) };
        spec.weights.validate()?;
        Ok(spec)
    }

    pub fn n(&self) -> usize {
        self.weights.len()
    }

    /// Every `(j, i, k)` with `|k aⱼ/aᵢ − round| < DEGENERACY_TOL`, `i ≠ j`, `k ≤ k_max`.
    pub fn degeneracies(&self, k_max: u64) -> Vec<Degeneracy> {
        let w = self.weights.as_f64();
        let mut out = Vec::new();
        for j in 0..w.len() {
            for i in (0..w.len()).filter(|&i| i != j) {
                let r = w[j] / w[i];
                for k in 1..=k_max {
                    let x = k as f64 * r;
                    let distance = (x - x.round()).abs();
                    if distance < DEGENERACY_TOL {
                        out.push(Degeneracy { orbit: j, against: i, k, distance });
                    }
                }
            }
        }
        out
    }
}

/// `n` good simple orbits `γ₁ … γₙ` on the boundary of the ellipsoid.
pub fn ellipsoid_system(spec: &EllipsoidSpec) -> Result<ReebOrbitSystem, ModelError> {
    spec.weights.validate()?;
    let n = spec.n();
    let orbits = (0..n)
        .map(|j| {
            ReebOrbit::new(
                format!("gamma{}", j + 1),
                OrbitClass::Good,
                spec.weights.mean_index(j),
                CzLaw::Ellipsoid { weights: spec.weights.clone(), j },
                None,
                n as u32,
            )
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(ReebOrbitSystem::new(n as u32, orbits, Some("contractible".into()), false)?)
}

/// A single orbit driven by the block engine.
pub fn engine_orbit(name: impl Into<String>, map: LinearizedReturnMap, n: u32) -> Result<ReebOrbit, ModelError> {
    map.validate()?;
    let class = map.class();
    let delta = map.mean_index();
    Ok(ReebOrbit::new(name.into(), class, delta, CzLaw::Blocks(map), None, n)?)
}

/// `Δᵢ = Σⱼ λⱼ − (n+1)λᵢ` (before reduction), scaled by `t`.
pub fn cpn_raw_deltas(lambdas: &[ExactScalar], t: &Rational) -> Result<Vec<ExactScalar>, ModelError> {
    if lambdas.len() < 2 {
        return Err(ModelError::Invalid("ℂPⁿ needs n + 1 ≥ 2 eigenvalues".into()));
    }
    for i in 0..lambdas.len() {
        for j in i + 1..lambdas.len() {
            if lambdas[i] == lambdas[j] {
                return Err(ModelError::DegenerateSpectrum(format!("λ{i} = λ{j} = {}", lambdas[i])));
            }
        }
    }
    let total: ExactScalar = lambdas.iter().cloned().sum();
    let weight = rat(lambdas.len() as i64, 1);
    let deltas: Vec<ExactScalar> = lambdas.iter().map(|l| (&total - &l.scale(&weight)).scale(t)).collect();
    if !deltas.iter().cloned().sum::<ExactScalar>().is_zero() {
        return Err(ResonanceError::InternalConsistency("Σ Δᵢ ≠ 0 for the ℂPⁿ model".into()).into());
    }
    Ok(deltas)
}

/// Mean indices of the quadratic Hamiltonian `Σ λᵢ|zᵢ|²` on ℂPⁿ (`N = n + 1`).
pub fn cpn_mean_indices(lambdas: &[ExactScalar], symbols: SymbolTable) -> Result<MeanIndexProblem, ModelError> {
    let deltas = cpn_raw_deltas(lambdas, &Rational::one())?;
    let n = (lambdas.len() - 1) as u32;
    let labels = (0..lambdas.len()).map(|i| format!("x{i}")).collect();
    Ok(MeanIndexProblem::new(n, ChernNumber::Finite(u64::from(n) + 1), deltas, Some(labels), symbols)?)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct UstilovskySpec {
    pub n: u32,
    pub p: u64,
}

impl UstilovskySpec {
    pub fn new(n: u32, p: u64) -> Result<Self, ModelError> {
        if n < 3 || n % 2 == 0 {
            return Err(ModelError::Invalid(format!("n must be odd and at least 3, got {n}")));
        }
        if p == 0 || !matches!(p % 8, 1 | 7) {
            return Err(ModelError::Invalid(format!("p must be positive with p ≡ ±1 (mod 8), got {p}")));
        }
        Ok(UstilovskySpec { n, p })
    }
}

/// The first `count` admissible `p` (`p ≡ ±1 mod 8`).
pub fn admissible_p(count: usize) -> Vec<u64> {
    (1u64..).filter(|p| matches!(p % 8, 1 | 7)).take(count).collect()
}

/// `(χ⁺, χ⁻)` for the Brieskorn contact structure `ξ_p` on `S^{2n−1}`.
pub fn ustilovsky_chi(spec: UstilovskySpec) -> Result<(Rational, Rational), ModelError> {
    let spec = UstilovskySpec::new(spec.n, spec.p)?;
    let n = Int::from(spec.n);
    let p = Int::from(spec.p);
    let num = &p * (&n - 1) + 1;
    let den = &p * (&n - 2) + 2;
    Ok((Rational::new(num, den * 2), Rational::zero()))
}
