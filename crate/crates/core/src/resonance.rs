//! Resonance relations between mean indices of a perfect Hamiltonian
//! diffeomorphism, and the closed subgroup of the torus they cut out.
//!
//! For mean indices `Δ₁ … Δₘ ∈ ℝ/2Nℤ` the resonance lattice is
//! `ℛ = {a ∈ ℤᵐ : Σ aᵢΔᵢ ≡ 0 (mod 2N)}`. With `Δ̄ = Δ/2N ∈ 𝕋ᵐ` and
//! `Γ` the closure of `{kΔ̄ : k ∈ ℕ}`, `ℛ` is the annihilator of `Γ`,
//! `codim Γ = rk ℛ`, and `Γ/Γ₀ ≅ ℛ₀/ℛ` is finite cyclic where `ℛ₀` is the
//! saturation of `ℛ` (the annihilator of the identity component `Γ₀`).

use std::collections::BTreeSet;

use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exactnum::{
    rational_to_f64, CircleValue, ExactScalar, Int, NumError, Rational, Symbol, SymbolTable,
};
use crate::lattice::{
    elementary_divisors, integer_relation, lattice_index, modular_kernel, saturation,
    smith_normal_form, IntegerLattice, LatticeError, LatticeIndex, RelationCandidate,
};
use crate::serde_util;

/// Float tolerance at the closed endpoints of the arc `[0, n/N]`.
pub const ARC_BOUNDARY_TOL: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum ResonanceError {
    #[error(
        "minimal Chern number N = ∞ (c₁ vanishes on π₂): mean indices have no finite period 2N \
         and perfect Hamiltonian diffeomorphisms are not expected to exist, so no resonance \
         lattice is computed"
    )]
    InfiniteChern,
    #[error("invalid problem: {0}")]
    Invalid(String),
    #[error("internal consistency check failed: {0}")]
    InternalConsistency(String),
    #[error(transparent)]
    Num(#[from] NumError),
    #[error(transparent)]
    Lattice(#[from] LatticeError),
}

/// Minimal Chern number of the ambient symplectic manifold.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ChernNumber {
    Finite(u64),
    Infinite,
}

impl ChernNumber {
    pub fn finite(self) -> Option<u64> {
        match self {
            ChernNumber::Finite(n) => Some(n),
            ChernNumber::Infinite => None,
        }
    }
}

/// `(n, N, Δ₁ … Δₘ)` for a perfect Hamiltonian diffeomorphism of a `2n`-manifold.
#[derive(Clone, Debug, PartialEq)]
pub struct MeanIndexProblem {
    n: u32,
    chern: ChernNumber,
    deltas: Vec<ExactScalar>,
    labels: Vec<String>,
    symbols: SymbolTable,
}

impl MeanIndexProblem {
    /// Builds a problem; with finite `N` every Δᵢ is reduced modulo `2N`.
    /// Symbols used by the deltas but absent from `symbols` are declared without witnesses.
    pub fn new(
        n: u32,
        chern: ChernNumber,
        deltas: Vec<ExactScalar>,
        labels: Option<Vec<String>>,
        mut symbols: SymbolTable,
    ) -> Result<Self, ResonanceError> {
        if n == 0 {
            return Err(ResonanceError::Invalid("n must be positive".into()));
        }
        if chern == ChernNumber::Finite(0) {
            return Err(ResonanceError::Invalid("N must be positive".into()));
        }
        if deltas.is_empty() {
            return Err(ResonanceError::Invalid("at least one mean index is required".into()));
        }
        let labels = match labels {
            Some(l) if l.len() != deltas.len() => {
                return Err(ResonanceError::Invalid(format!(
                    "{} labels for {} mean indices",
                    l.len(),
                    deltas.len()
                )))
            }
            Some(l) => l,
            None => (0..deltas.len()).map(|i| format!("x{i}")).collect(),
        };
        symbols.validate()?;
        for d in &deltas {
            for s in d.symbols() {
                if !symbols.contains(s) {
                    symbols.declare(s.clone(), None)?;
                }
            }
        }
        let deltas = match chern {
            ChernNumber::Finite(big_n) => {
                let modulus = Rational::from_integer(Int::from(2 * big_n));
                deltas
                    .into_iter()
                    .map(|d| Ok(CircleValue::new(d, modulus.clone())?.representative().clone()))
                    .collect::<Result<_, NumError>>()?
            }
            ChernNumber::Infinite => deltas,
        };
        Ok(MeanIndexProblem { n, chern, deltas, labels, symbols })
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn chern(&self) -> ChernNumber {
        self.chern
    }

    pub fn m(&self) -> usize {
        self.deltas.len()
    }

    /// Canonical representatives (rational part in `[0, 2N)` when `N` is finite).
    pub fn deltas(&self) -> &[ExactScalar] {
        &self.deltas
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn symbols(&self) -> &SymbolTable {
        &self.symbols
    }

    /// `2N`, refusing `N = ∞`.
    pub fn modulus(&self) -> Result<Rational, ResonanceError> {
        match self.chern {
            ChernNumber::Finite(n) => Ok(Rational::from_integer(Int::from(2 * n))),
            ChernNumber::Infinite => Err(ResonanceError::InfiniteChern),
        }
    }

    pub fn circle_values(&self) -> Result<Vec<CircleValue>, ResonanceError> {
        let m = self.modulus()?;
        Ok(self.deltas.iter().map(|d| CircleValue::new(d.clone(), m.clone())).collect::<Result<_, _>>()?)
    }

    /// Symbols appearing in at least one Δᵢ, in symbol order.
    pub fn used_symbols(&self) -> Vec<Symbol> {
        let set: BTreeSet<&Symbol> = self.deltas.iter().flat_map(|d| d.symbols()).collect();
        set.into_iter().cloned().collect()
    }

    /// Δᵢ as floats (requires witnesses for every used symbol).
    pub fn float_deltas(&self) -> Result<Vec<f64>, ResonanceError> {
        Ok(self.deltas.iter().map(|d| d.evaluate_float(&self.symbols)).collect::<Result<_, _>>()?)
    }

    /// Whether the theorem hypothesis `n + 1 ≤ N < ∞` holds.
    pub fn hypothesis_holds(&self) -> bool {
        self.chern.finite().is_some_and(|big_n| big_n > u64::from(self.n))
    }

    /// The sub-problem made of the indices in `keep`.
    pub fn restrict(&self, keep: &[usize]) -> Result<Self, ResonanceError> {
        MeanIndexProblem::new(
            self.n,
            self.chern,
            keep.iter().map(|&i| self.deltas[i].clone()).collect(),
            Some(keep.iter().map(|&i| self.labels[i].clone()).collect()),
            self.symbols.clone(),
        )
    }

    /// The symbol coefficient matrix, one row per used symbol.
    fn symbol_rows(&self) -> Vec<Vec<Rational>> {
        self.used_symbols()
            .iter()
            .map(|s| self.deltas.iter().map(|d| d.coeff(s)).collect())
            .collect()
    }
}

/// `ℛ = {a : a·Δ ≡ 0 (mod 2N)}` in canonical HNF.
///
/// Splitting `Δᵢ = rᵢ + Σₖ qᵢₖβₖ`, a resonance must kill every symbol exactly
/// (`Σᵢ aᵢqᵢₖ = 0`) and satisfy the congruence `Σᵢ aᵢrᵢ ≡ 0 (mod 2N)`.
pub fn resonance_lattice_exact(problem: &MeanIndexProblem) -> Result<IntegerLattice, ResonanceError> {
    let modulus = problem.modulus()?;
    let rational_parts: Vec<Rational> = problem.deltas.iter().map(|d| d.rational_part().clone()).collect();
    Ok(modular_kernel(&problem.symbol_rows(), &[(rational_parts, modulus)], problem.m())?)
}

/// Float relation search for `a·Δ ≡ 0 (mod 2N)`; every candidate is re-verified.
pub fn resonance_lattice_numeric(
    deltas: &[f64],
    modulus: f64,
    coeff_bound: u32,
    tol: f64,
) -> Result<Vec<RelationCandidate>, ResonanceError> {
    Ok(integer_relation(deltas, modulus, coeff_bound, tol)?)
}

/// Structure of `Γ` and its annihilator.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GammaStructure {
    #[serde(serialize_with = "serialize_lattice")]
    pub resonance_lattice: IntegerLattice,
    #[serde(serialize_with = "serialize_lattice")]
    pub saturation: IntegerLattice,
    pub m: usize,
    pub rank_r: usize,
    pub codim_gamma: usize,
    pub dim_gamma0: usize,
    /// `|Γ/Γ₀|`.
    #[serde(serialize_with = "serde_util::int")]
    pub torsion_order: Int,
}

pub(crate) fn serialize_lattice<S: serde::Serializer>(l: &IntegerLattice, s: S) -> Result<S::Ok, S::Error> {
    serde_util::int_matrix(l.basis(), s)
}

/// Computes `ℛ`, `ℛ₀` and the shape of `Γ`, cross-checking the duality.
///
/// `dim Γ₀` comes from the ℚ-rank of the symbol coefficients and `|Γ/Γ₀|` from
/// the smallest `k` with `kΔ̄ ∈ Γ₀`; both are compared against the lattice side
/// (`rk ℛ`, `|ℛ₀/ℛ|`), which must also be cyclic.
pub fn gamma_structure(problem: &MeanIndexProblem) -> Result<GammaStructure, ResonanceError> {
    let m = problem.m();
    let r = resonance_lattice_exact(problem)?;
    let r0 = saturation(&r);

    // Torus side.
    let symbol_rows = problem.symbol_rows();
    let dim_gamma0 = if symbol_rows.is_empty() {
        0
    } else {
        let int_rows: Vec<Vec<Int>> = symbol_rows
            .iter()
            .map(|row| {
                let d = crate::exactnum::common_denominator(row);
                row.iter().map(|x| (x * Rational::from_integer(d.clone())).to_integer()).collect()
            })
            .collect();
        smith_normal_form(&int_rows).rank()
    };
    let torsion_order = gamma_component_order(problem, &r0)?;

    // Lattice side.
    let codim_gamma = m - dim_gamma0;
    if codim_gamma != r.rank() {
        return Err(ResonanceError::InternalConsistency(format!(
            "codim Γ = {codim_gamma} but rk ℛ = {}",
            r.rank()
        )));
    }
    let index = lattice_index(&r, &r0)?;
    match &index {
        LatticeIndex::Finite { index, .. } if *index == torsion_order => {}
        other => {
            return Err(ResonanceError::InternalConsistency(format!(
                "|Γ/Γ₀| = {torsion_order} but |ℛ₀/ℛ| = {other:?}"
            )))
        }
    }
    if torsion_from_elementary_divisors(&r) != torsion_order {
        return Err(ResonanceError::InternalConsistency(format!(
            "elementary divisors of ℛ disagree with |Γ/Γ₀| = {torsion_order}"
        )));
    }
    if !index.is_cyclic() {
        return Err(ResonanceError::InternalConsistency(format!("ℛ₀/ℛ is not cyclic: {index:?}")));
    }
    Ok(GammaStructure { m, rank_r: r.rank(), codim_gamma, dim_gamma0, torsion_order, resonance_lattice: r, saturation: r0 })
}

/// Order of `Δ̄` in `Γ/Γ₀`: the lcm of the denominators of `a·Δ̄` over a basis of
/// `ℛ₀` (each `a·Δ̄` is rational because `ℛ₀` kills every symbol).
fn gamma_component_order(problem: &MeanIndexProblem, r0: &IntegerLattice) -> Result<Int, ResonanceError> {
    let modulus = problem.modulus()?;
    let mut order = Int::one();
    for a in r0.basis() {
        let pairing: ExactScalar = a
            .iter()
            .zip(&problem.deltas)
            .map(|(c, d)| d.scale(&Rational::from_integer(c.clone())))
            .sum();
        let Some(q) = pairing.as_rational() else {
            return Err(ResonanceError::InternalConsistency(format!(
                "saturated resonance {a:?} pairs to an irrational value"
            )));
        };
        order = order.lcm((q / &modulus).denom());
    }
    Ok(order)
}

/// `|ℛ₀/ℛ|` from the elementary divisors of the basis matrix of `ℛ`.
pub fn torsion_from_elementary_divisors(r: &IntegerLattice) -> Int {
    elementary_divisors(r).iter().product()
}

/// Which mean indices to discard before the analysis.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum IndexFilter {
    #[default]
    None,
    /// Drop Δᵢ ≡ 0 (mod 2N).
    DropZero,
    /// Drop every rational Δᵢ.
    DropRational,
}

impl std::str::FromStr for IndexFilter {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "none" => Ok(IndexFilter::None),
            "drop-zero" => Ok(IndexFilter::DropZero),
            "drop-rational" => Ok(IndexFilter::DropRational),
            _ => Err(format!("unknown filter `{s}` (expected none, drop-zero, drop-rational)")),
        }
    }
}

/// Position of the diagonal point `t = 1/Σaᵢ` relative to the prohibited arc.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DiagonalCheck {
    #[serde(serialize_with = "serde_util::display")]
    pub t_value: Rational,
    /// `1 − n/N`.
    #[serde(serialize_with = "serde_util::display")]
    pub threshold: Rational,
    pub inside_prohibited: bool,
}

/// The diagonal subgroup meets `Γ` at `t = −1/Σaᵢ`; consistency requires
/// `|t| ≥ 1 − n/N` (closed comparison).
pub fn diagonal_bound_check(generator: &[Int], n: u32, chern: u64) -> Result<DiagonalCheck, ResonanceError> {
    if generator.iter().any(Signed::is_negative) {
        return Err(ResonanceError::Invalid("diagonal check needs a nonnegative generator".into()));
    }
    let sum: Int = generator.iter().sum();
    if sum.is_zero() {
        return Err(ResonanceError::Invalid("diagonal check needs a nonzero generator".into()));
    }
    if chern == 0 {
        return Err(ResonanceError::Invalid("N must be positive".into()));
    }
    let t_value = Rational::new(Int::one(), sum);
    let threshold = Rational::one() - Rational::new(Int::from(n), Int::from(chern));
    let inside_prohibited = t_value < threshold;
    Ok(DiagonalCheck { t_value, threshold, inside_prohibited })
}

/// Verdicts of the resonance theorem for one (possibly filtered) index set.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TheoremOneReport {
    pub filter: IndexFilter,
    /// Positions (in the original problem) of the analysed indices.
    pub kept: Vec<usize>,
    pub labels: Vec<String>,
    pub m: usize,
    /// `n + 1 ≤ N < ∞`; when false the verdicts are informational only.
    pub hypothesis_holds: bool,
    /// Whether the rank-one assertions apply to this index set (not for drop-rational).
    pub asserts_rank_one_checks: bool,
    pub vacuous: bool,
    #[serde(serialize_with = "serialize_lattice")]
    pub resonance_basis: IntegerLattice,
    pub rank: usize,
    pub nontrivial: bool,
    pub rank_one: bool,
    #[serde(serialize_with = "serde_util::int_vec_opt")]
    pub generator: Option<Vec<Int>>,
    pub generator_nonnegative: Option<bool>,
    #[serde(serialize_with = "serde_util::int_opt")]
    pub sum_value: Option<Int>,
    #[serde(serialize_with = "serde_util::display_opt")]
    pub bound_value: Option<Rational>,
    pub sum_bound_satisfied: Option<bool>,
    pub diagonal: Option<DiagonalCheck>,
    pub warnings: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub filtered_variant: Option<Box<TheoremOneReport>>,
}

impl TheoremOneReport {
    /// All applicable verdicts pass (here and in the filtered variant).
    pub fn consistent(&self) -> bool {
        let own = !self.hypothesis_holds
            || self.vacuous
            || (self.nontrivial
                && (!self.asserts_rank_one_checks
                    || (self.generator_nonnegative != Some(false)
                        && self.sum_bound_satisfied != Some(false)
                        && self.diagonal.as_ref().is_none_or(|d| !d.inside_prohibited))));
        own && self.filtered_variant.as_ref().is_none_or(|f| f.consistent())
    }
}

/// Flips `v` so that its first nonzero entry is positive.
pub fn sign_normalize(mut v: Vec<Int>) -> Vec<Int> {
    if v.iter().find(|x| !x.is_zero()).is_some_and(Signed::is_negative) {
        v.iter_mut().for_each(|x| *x = -&*x);
    }
    v
}

fn verdicts(problem: &MeanIndexProblem, kept: Vec<usize>, filter: IndexFilter) -> Result<TheoremOneReport, ResonanceError> {
    let big_n = problem.chern.finite().ok_or(ResonanceError::InfiniteChern)?;
    let hypothesis_holds = problem.hypothesis_holds();
    let mut warnings = Vec::new();
    if !hypothesis_holds {
        warnings.push(format!(
            "hypothesis n + 1 ≤ N fails (n = {}, N = {big_n}); verdicts are informational",
            problem.n
        ));
    }
    let asserts_rank_one_checks = filter != IndexFilter::DropRational;
    let labels: Vec<String> = kept.iter().map(|&i| problem.labels[i].clone()).collect();
    if kept.is_empty() {
        return Ok(TheoremOneReport {
            filter,
            kept,
            labels,
            m: 0,
            hypothesis_holds,
            asserts_rank_one_checks,
            vacuous: true,
            resonance_basis: IntegerLattice::zero(0),
            rank: 0,
            nontrivial: false,
            rank_one: false,
            generator: None,
            generator_nonnegative: None,
            sum_value: None,
            bound_value: None,
            sum_bound_satisfied: None,
            diagonal: None,
            warnings: {
                warnings.push("no mean indices left after filtering; the statement is vacuous".into());
                warnings
            },
            filtered_variant: None,
        });
    }
    let sub = problem.restrict(&kept)?;
    let lattice = resonance_lattice_exact(&sub)?;
    let rank = lattice.rank();
    let rank_one = rank == 1;
    if rank > 1 {
        warnings.push(format!("rk ℛ = {rank} > 1: no rank-one generator checks apply"));
    }
    let generator = rank_one.then(|| sign_normalize(lattice.basis()[0].clone()));
    let generator_nonnegative = generator.as_ref().map(|g| g.iter().all(|x| !x.is_negative()));
    let sum_value = generator.as_ref().map(|g| g.iter().sum::<Int>());
    let bound_value = (big_n > u64::from(problem.n))
        .then(|| Rational::new(Int::from(big_n), Int::from(big_n - u64::from(problem.n))));
    let sum_bound_satisfied = match (&sum_value, &bound_value) {
        (Some(s), Some(b)) => Some(Rational::from_integer(s.clone()) <= *b),
        _ => None,
    };
    let diagonal = match (&generator, generator_nonnegative) {
        (Some(g), Some(true)) => Some(diagonal_bound_check(g, problem.n, big_n)?),
        _ => None,
    };
    Ok(TheoremOneReport {
        filter,
        m: kept.len(),
        kept,
        labels,
        hypothesis_holds,
        asserts_rank_one_checks,
        vacuous: false,
        resonance_basis: lattice,
        rank,
        nontrivial: rank >= 1,
        rank_one,
        generator,
        generator_nonnegative,
        sum_value,
        bound_value,
        sum_bound_satisfied,
        diagonal,
        warnings,
        filtered_variant: None,
    })
}

/// Theorem verdicts on the full index set, plus a sub-report on the filtered set
/// when `filter` is not [`IndexFilter::None`].
pub fn theorem_one_report(problem: &MeanIndexProblem, filter: IndexFilter) -> Result<TheoremOneReport, ResonanceError> {
    let mut report = verdicts(problem, (0..problem.m()).collect(), IndexFilter::None)?;
    if filter != IndexFilter::None {
        let kept: Vec<usize> = (0..problem.m())
            .filter(|&i| {
                let d = &problem.deltas[i];
                match filter {
                    IndexFilter::None => true,
                    IndexFilter::DropZero => !d.is_zero(),
                    IndexFilter::DropRational => !d.is_rational(),
                }
            })
            .collect();
        report.filtered_variant = Some(Box::new(verdicts(problem, kept, filter)?));
    }
    Ok(report)
}

/// First point of the orbit `{kΔ̄}` found inside the prohibited cube.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScanViolation {
    pub k: u64,
    #[serde(serialize_with = "serde_util::f64_12_vec")]
    pub point: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScanReport {
    pub k_max: u64,
    /// `n/N`.
    #[serde(serialize_with = "serde_util::f64_12")]
    pub arc_end: f64,
    pub first_violation: Option<ScanViolation>,
    pub violation_count: u64,
    /// `min_k (n/N − min_i θᵢ(k))`; negative means a violation.
    #[serde(serialize_with = "serde_util::f64_12")]
    pub min_margin: f64,
    pub min_margin_k: u64,
    /// Counts of nonnegative margins in ten equal bins over `[0, n/N]`.
    pub margin_histogram: Vec<u64>,
}

impl ScanReport {
    pub fn clean(&self) -> bool {
        self.first_violation.is_none()
    }
}

const HISTOGRAM_BINS: usize = 10;

struct ScanAcc {
    first: Option<(u64, Vec<f64>)>,
    count: u64,
    min_margin: f64,
    min_k: u64,
    hist: [u64; HISTOGRAM_BINS],
}

impl ScanAcc {
    fn empty() -> Self {
        ScanAcc { first: None, count: 0, min_margin: f64::INFINITY, min_k: 0, hist: [0; HISTOGRAM_BINS] }
    }

    fn merge(mut self, other: ScanAcc) -> ScanAcc {
        self.first = match (self.first, other.first) {
            (Some(a), Some(b)) => Some(if a.0 <= b.0 { a } else { b }),
            (a, b) => a.or(b),
        };
        self.count += other.count;
        if other.min_margin < self.min_margin || (other.min_margin == self.min_margin && other.min_k < self.min_k) {
            self.min_margin = other.min_margin;
            self.min_k = other.min_k;
        }
        for (a, b) in self.hist.iter_mut().zip(other.hist) {
            *a += b;
        }
        self
    }
}

/// Checks, for `k = 1 … k_max`, that some component of `kΔ̄ mod 1` lies in the
/// closed arc `[0, n/N]`.
///
/// The rational part of `kΔ̄` is reduced exactly; only the irrational part is
/// evaluated in floats from the witnesses in `witnesses` (falling back to the
/// problem's own symbol table).
pub fn prohibited_region_scan(
    problem: &MeanIndexProblem,
    k_max: u64,
    witnesses: Option<&SymbolTable>,
) -> Result<ScanReport, ResonanceError> {
    let big_n = problem.chern.finite().ok_or(ResonanceError::InfiniteChern)?;
    if k_max == 0 {
        return Err(ResonanceError::Invalid("k_max must be at least 1".into()));
    }
    let table = witnesses.unwrap_or(&problem.symbols);
    let modulus = problem.modulus()?;
    let modulus_f = rational_to_f64(&modulus);
    // Per component: Δ̄ᵢ = pᵢ/qᵢ + sᵢ with exact pᵢ/qᵢ and float sᵢ.
    let mut exact: Vec<(Int, Int)> = Vec::new();
    let mut irrational: Vec<f64> = Vec::new();
    for d in &problem.deltas {
        let q = d.rational_part() / &modulus;
        exact.push((q.numer().clone(), q.denom().clone()));
        let mut s = 0.0;
        for (sym, c) in d.irrational_coeffs() {
            let w = table.witness(sym).ok_or_else(|| NumError::UnresolvedSymbol(sym.to_string()))?;
            s += rational_to_f64(c) * w;
        }
        irrational.push(s / modulus_f);
    }
    let small: Option<Vec<(i128, i128)>> =
        exact.iter().map(|(p, q)| Some((p.to_i128()?, q.to_i128()?))).collect();
    let arc_end = f64::from(problem.n) / big_n as f64;

    let component = |k: u64, i: usize| -> f64 {
        let rat = match &small {
            Some(v) if v[i].1 < (1 << 60) => {
                let (p, q) = v[i];
                ((i128::from(k) * p).rem_euclid(q)) as f64 / q as f64
            }
            _ => {
                let (p, q) = &exact[i];
                rational_to_f64(&Rational::new((Int::from(k) * p).mod_floor(q), q.clone()))
            }
        };
        let frac = (rat + (k as f64 * irrational[i]).rem_euclid(1.0)).rem_euclid(1.0);
        if frac >= 1.0 - ARC_BOUNDARY_TOL { 0.0 } else { frac }
    };

    const CHUNK: u64 = 4096;
    let chunks = k_max.div_ceil(CHUNK);
    let acc = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut acc = ScanAcc::empty();
            let lo = c * CHUNK + 1;
            let hi = ((c + 1) * CHUNK).min(k_max);
            for k in lo..=hi {
                let point: Vec<f64> = (0..problem.m()).map(|i| component(k, i)).collect();
                let lowest = point.iter().copied().fold(f64::INFINITY, f64::min);
                let margin = arc_end - lowest;
                if margin < acc.min_margin {
                    acc.min_margin = margin;
                    acc.min_k = k;
                }
                if margin < -ARC_BOUNDARY_TOL {
                    acc.count += 1;
                    if acc.first.is_none() {
                        acc.first = Some((k, point));
                    }
                } else {
                    let bin = ((margin.max(0.0) / arc_end) * HISTOGRAM_BINS as f64) as usize;
                    acc.hist[bin.min(HISTOGRAM_BINS - 1)] += 1;
                }
            }
            acc
        })
        .reduce(ScanAcc::empty, ScanAcc::merge);

    Ok(ScanReport {
        k_max,
        arc_end,
        first_violation: acc.first.map(|(k, point)| ScanViolation { k, point }),
        violation_count: acc.count,
        min_margin: acc.min_margin,
        min_margin_k: acc.min_k,
        margin_histogram: acc.hist.to_vec(),
    })
}

/// On-disk form of a [`MeanIndexProblem`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub n: u32,
    #[serde(rename = "N")]
    pub chern: ChernSpec,
    #[serde(default)]
    pub symbols: SymbolTable,
    pub deltas: Vec<ExactScalar>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<String>>,
}

/// `N` as written in a problem file: an integer or the string `"infinity"`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ChernSpec {
    Finite(u64),
    Text(String),
}

impl ChernSpec {
    pub fn to_chern(&self) -> Result<ChernNumber, ResonanceError> {
        match self {
            ChernSpec::Finite(n) => Ok(ChernNumber::Finite(*n)),
            ChernSpec::Text(t) if matches!(t.as_str(), "infinity" | "inf" | "∞") => Ok(ChernNumber::Infinite),
            ChernSpec::Text(t) => Err(ResonanceError::Invalid(format!("field `N`: expected integer or \"infinity\", got {t:?}"))),
        }
    }
}

impl ProblemFile {
    pub fn into_problem(self) -> Result<MeanIndexProblem, ResonanceError> {
        MeanIndexProblem::new(self.n, self.chern.to_chern()?, self.deltas, self.labels, self.symbols)
    }

    pub fn from_problem(p: &MeanIndexProblem) -> Self {
        ProblemFile {
            n: p.n,
            chern: match p.chern {
                ChernNumber::Finite(n) => ChernSpec::Finite(n),
                ChernNumber::Infinite => ChernSpec::Text("infinity".into()),
            },
            symbols: p.symbols.clone(),
            deltas: p.deltas.clone(),
            labels: Some(p.labels.clone()),
        }
    }
}

/// Reads a problem from JSON text, reporting the offending field on failure.
pub fn parse_problem_json(text: &str) -> Result<MeanIndexProblem, ResonanceError> {
    let file: ProblemFile = serde_json::from_str(text)
        .map_err(|e| ResonanceError::Invalid(format!("line {}, column {}: {e}", e.line(), e.column())))?;
    file.into_problem()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactnum::rat;
    use crate::lattice::to_int_vec;

    fn sym(s: &str) -> ExactScalar {
        ExactScalar::symbol(Symbol::new(s).unwrap())
    }

    fn q(n: i64) -> ExactScalar {
        ExactScalar::from_int(n)
    }

    fn problem(n: u32, big_n: u64, deltas: Vec<ExactScalar>) -> MeanIndexProblem {
        MeanIndexProblem::new(n, ChernNumber::Finite(big_n), deltas, None, SymbolTable::new()).unwrap()
    }

    /// Δᵢ = Σλⱼ − (n+1)λᵢ for symbolic λ.
    fn cpn(n: usize) -> MeanIndexProblem {
        let lambdas: Vec<ExactScalar> = (0..=n).map(|i| sym(&format!("l{i}"))).collect();
        let total: ExactScalar = lambdas.iter().cloned().sum();
        let deltas = lambdas.iter().map(|l| &total - &l.scale(&rat(n as i64 + 1, 1))).collect();
        problem(n as u32, n as u64 + 1, deltas)
    }

    #[test]
    fn cpn_has_only_the_diagonal_resonance() {
        for n in 2..=4 {
            let r = resonance_lattice_exact(&cpn(n)).unwrap();
            assert_eq!(r.basis(), &[vec![Int::one(); n + 1]]);
        }
    }

    #[test]
    fn rational_indices_resonate_with_finite_index() {
        let p = problem(1, 2, vec![q(1), q(3)]);
        let r = resonance_lattice_exact(&p).unwrap();
        assert_eq!(r, IntegerLattice::from_i64_rows(2, &[vec![1, 1], vec![0, 4]]).unwrap());
        assert_eq!(r.index_in_ambient(), Some(Int::from(4)));
        // enumerate a mod 4
        for a in 0..4 {
            for b in 0..4 {
                assert_eq!((a + 3 * b) % 4 == 0, r.contains(&to_int_vec(&[a, b])));
            }
        }
    }

    #[test]
    fn opposite_symbols() {
        for big_n in [1, 3, 7] {
            let p = problem(1, big_n, vec![sym("b"), -&sym("b")]);
            let r = resonance_lattice_exact(&p).unwrap();
            assert_eq!(r.basis(), &[to_int_vec(&[1, 1])]);
        }
    }

    #[test]
    fn infinite_chern_is_refused() {
        let p = MeanIndexProblem::new(1, ChernNumber::Infinite, vec![q(1)], None, SymbolTable::new()).unwrap();
        assert!(matches!(resonance_lattice_exact(&p), Err(ResonanceError::InfiniteChern)));
        assert!(matches!(theorem_one_report(&p, IndexFilter::None), Err(ResonanceError::InfiniteChern)));
    }

    #[test]
    fn gamma_examples() {
        // m = 1, Δ = N: Γ = {0, 1/2}
        let g = gamma_structure(&problem(2, 3, vec![q(3)])).unwrap();
        assert_eq!((g.rank_r, g.dim_gamma0, g.torsion_order.clone()), (1, 0, Int::from(2)));
        assert_eq!(g.saturation, IntegerLattice::full(1));

        let g = gamma_structure(&cpn(3)).unwrap();
        assert_eq!((g.rank_r, g.dim_gamma0, g.codim_gamma), (1, 3, 1));
        assert_eq!(g.torsion_order, Int::one());

        let g = gamma_structure(&problem(2, 3, vec![q(0), q(0), q(0)])).unwrap();
        assert_eq!(g.resonance_lattice, IntegerLattice::full(3));
        assert_eq!((g.dim_gamma0, g.torsion_order), (0, Int::one()));
    }

    #[test]
    fn torsion_mixing_rational_and_symbolic() {
        // Δ = (1/2 + β, β) mod 2: ℛ = span{(2,-2), …}: (1,-1)·Δ = 1/2, so (2,-2) ∈ ℛ.
        let p = problem(1, 1, vec![ExactScalar::from_ratio(1, 2) + sym("b"), sym("b")]);
        let g = gamma_structure(&p).unwrap();
        assert_eq!(g.resonance_lattice.basis(), &[to_int_vec(&[4, -4])]);
        assert_eq!(g.torsion_order, Int::from(4));
        assert_eq!(torsion_from_elementary_divisors(&g.resonance_lattice), Int::from(4));
    }

    #[test]
    fn theorem_on_cpn() {
        let rep = theorem_one_report(&cpn(2), IndexFilter::None).unwrap();
        assert!(rep.nontrivial && rep.rank_one);
        assert_eq!(rep.generator, Some(to_int_vec(&[1, 1, 1])));
        assert_eq!(rep.generator_nonnegative, Some(true));
        assert_eq!(rep.sum_value, Some(Int::from(3)));
        assert_eq!(rep.bound_value, Some(rat(3, 1)));
        assert_eq!(rep.sum_bound_satisfied, Some(true));
        let diag = rep.diagonal.as_ref().unwrap();
        assert_eq!(diag.t_value, rat(1, 3));
        assert!(!diag.inside_prohibited);
        assert!(rep.consistent());
    }

    #[test]
    fn planted_generator_breaks_the_bound() {
        // Δ = (β, β′, 6 − β − 2β′): the only resonance is (1, 2, 1).
        let b1 = sym("b1");
        let b2 = sym("b2");
        let third = &(&q(6) - &b1) - &b2.scale(&rat(2, 1));
        let p = problem(2, 3, vec![b1, b2, third]);
        let rep = theorem_one_report(&p, IndexFilter::None).unwrap();
        assert_eq!(rep.generator, Some(to_int_vec(&[1, 2, 1])));
        assert_eq!(rep.sum_value, Some(Int::from(4)));
        assert_eq!(rep.sum_bound_satisfied, Some(false));
        assert!(rep.diagonal.as_ref().unwrap().inside_prohibited);
        assert!(!rep.consistent());
    }

    #[test]
    fn drop_zero_filter() {
        let b = sym("b");
        let p = problem(2, 3, vec![q(0), b.clone(), &q(6) - &b]);
        let rep = theorem_one_report(&p, IndexFilter::DropZero).unwrap();
        let f = rep.filtered_variant.as_ref().unwrap();
        assert_eq!(f.m, 2);
        assert_eq!(f.kept, vec![1, 2]);
        assert_eq!(f.resonance_basis.basis(), &[to_int_vec(&[1, 1])]);
        // unfiltered: (1,0,0) and (0,1,1) both resonate
        assert_eq!(rep.rank, 2);
        assert!(!rep.rank_one);
    }

    #[test]
    fn filtering_everything_is_vacuous() {
        let p = problem(2, 3, vec![q(0), q(2)]);
        let rep = theorem_one_report(&p, IndexFilter::DropRational).unwrap();
        let f = rep.filtered_variant.unwrap();
        assert!(f.vacuous && f.m == 0);
        assert!(f.consistent());
    }

    #[test]
    fn sign_normalization_and_mixed_signs() {
        assert_eq!(sign_normalize(to_int_vec(&[0, -1, 2])), to_int_vec(&[0, 1, -2]));
        // Δ = (β, β): the resonance (1, -1) has mixed signs.
        let p = problem(2, 3, vec![sym("b"), sym("b")]);
        let rep = theorem_one_report(&p, IndexFilter::None).unwrap();
        assert_eq!(rep.generator, Some(to_int_vec(&[1, -1])));
        assert_eq!(rep.generator_nonnegative, Some(false));
        assert!(rep.diagonal.is_none());
        assert!(!rep.consistent());
    }

    #[test]
    fn diagonal_examples() {
        let d = diagonal_bound_check(&to_int_vec(&[1, 1, 1]), 2, 3).unwrap();
        assert_eq!(d.t_value, rat(1, 3));
        assert_eq!(d.threshold, rat(1, 3));
        assert!(!d.inside_prohibited);
        let d = diagonal_bound_check(&to_int_vec(&[1, 2, 1]), 2, 3).unwrap();
        assert_eq!(d.t_value, rat(1, 4));
        assert!(d.inside_prohibited);
        for (n, big_n) in [(1, 2), (2, 5), (4, 5)] {
            assert!(!diagonal_bound_check(&to_int_vec(&[1]), n, big_n).unwrap().inside_prohibited);
        }
        assert!(diagonal_bound_check(&to_int_vec(&[0, 0]), 2, 3).is_err());
    }

    #[test]
    fn scan_examples() {
        let table = SymbolTable::new().with("s2", 2f64.sqrt()).with("s3", 3f64.sqrt());
        // λ = (0, √2, √3)
        let l = [q(0), sym("s2"), sym("s3")];
        let total: ExactScalar = l.iter().cloned().sum();
        let deltas = l.iter().map(|x| &total - &x.scale(&rat(3, 1))).collect();
        let p = MeanIndexProblem::new(2, ChernNumber::Finite(3), deltas, None, table).unwrap();
        let rep = prohibited_region_scan(&p, 1000, None).unwrap();
        assert!(rep.clean());
        assert_eq!(rep.margin_histogram.iter().sum::<u64>(), 1000);

        // Δ̄ = 0.9 (Δ = 5.4 mod 6) lies in (2/3, 1) at k = 1.
        let p = problem(2, 3, vec![ExactScalar::from_ratio(27, 5)]);
        let rep = prohibited_region_scan(&p, 5, None).unwrap();
        let v = rep.first_violation.unwrap();
        assert_eq!(v.k, 1);
        assert!((v.point[0] - 0.9).abs() < 1e-12);

        // Δ̄ = 5/6: k = 1 violates, k = 2 sits exactly on the arc end.
        let p = problem(2, 3, vec![q(5)]);
        let rep = prohibited_region_scan(&p, 6, None).unwrap();
        assert_eq!(rep.violation_count, 1);
        assert!(rep.min_margin < 0.0 && rep.min_margin_k == 1);
    }

    #[test]
    fn scan_needs_witnesses() {
        let p = problem(2, 3, vec![sym("b")]);
        assert!(matches!(prohibited_region_scan(&p, 3, None), Err(ResonanceError::Num(NumError::UnresolvedSymbol(_)))));
        let t = SymbolTable::new().with("b", 0.1);
        assert!(prohibited_region_scan(&p, 3, Some(&t)).is_ok());
    }

    #[test]
    fn problem_file_round_trip() {
        let text = r#"{"n": 2, "N": 3, "symbols": [{"name": "s2", "witness": 1.4142135623730951}],
                       "deltas": ["s2", "6 - s2", "0"], "labels": ["a", "b", "c"]}"#;
        let p = parse_problem_json(text).unwrap();
        assert_eq!(p.deltas()[1].to_string(), "-s2");
        let back = serde_json::to_string(&ProblemFile::from_problem(&p)).unwrap();
        assert_eq!(parse_problem_json(&back).unwrap(), p);

        let inf = parse_problem_json(r#"{"n": 1, "N": "infinity", "deltas": ["1"]}"#).unwrap();
        assert_eq!(inf.chern(), ChernNumber::Infinite);
        let err = parse_problem_json(r#"{"n": 1, "N": 2, "deltas": ["1 +"]}"#).unwrap_err();
        assert!(err.to_string().contains("line"));
        assert!(parse_problem_json(r#"{"n": 1, "N": 2, "deltas": ["1"], "extra": 1}"#).is_err());
    }

    fn random_problem(big_n: u64, rationals: &[(i64, i64)], coeffs: &[i64]) -> MeanIndexProblem {
        let deltas = rationals
            .iter()
            .enumerate()
            .map(|(i, &(p, d))| {
                ExactScalar::from_ratio(p, d)
                    + ExactScalar::term(rat(coeffs[2 * i], 1), Symbol::new("b0").unwrap())
                    + ExactScalar::term(rat(coeffs[2 * i + 1], 1), Symbol::new("b1").unwrap())
            })
            .collect();
        problem(1, big_n, deltas)
    }

    proptest::proptest! {
        #[test]
        fn membership_matches_brute_force(
            big_n in 1u64..5,
            rationals in proptest::collection::vec((-6i64..=6, 1i64..=4), 3),
            coeffs in proptest::collection::vec(-1i64..=1, 6),
        ) {
            let p = random_problem(big_n, &rationals, &coeffs);
            let r = resonance_lattice_exact(&p).unwrap();
            let modulus = p.modulus().unwrap();
            for a0 in -4i64..=4 {
                for a1 in -4i64..=4 {
                    for a2 in -4i64..=4 {
                        let a = [a0, a1, a2];
                        let pairing: ExactScalar = p.deltas().iter().zip(a).map(|(d, c)| d.scale(&rat(c, 1))).sum();
                        let expect = pairing.as_rational().is_some_and(|x| (x / &modulus).is_integer());
                        proptest::prop_assert_eq!(r.contains(&to_int_vec(&a)), expect, "a = {:?}", a);
                    }
                }
            }
        }

        #[test]
        fn duality_holds(
            big_n in 1u64..5,
            rationals in proptest::collection::vec((-6i64..=6, 1i64..=6), 3),
            coeffs in proptest::collection::vec(-2i64..=2, 6),
        ) {
            let p = random_problem(big_n, &rationals, &coeffs);
            let g = gamma_structure(&p).unwrap();
            proptest::prop_assert_eq!(g.codim_gamma + g.dim_gamma0, 3);
            proptest::prop_assert!(g.saturation.contains_lattice(&g.resonance_lattice));
        }
    }
}
