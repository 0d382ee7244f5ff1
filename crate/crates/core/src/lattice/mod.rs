//! Exact integer lattices in ℤᵐ.
//!
//! Every [`IntegerLattice`] stores its basis in row Hermite normal form:
//! rows in echelon order (pivot columns strictly increasing), positive pivots,
//! and every entry above a pivot reduced into `[0, pivot)`. The form is unique
//! per lattice, so lattice equality is basis equality.
//!
//! Text format (one row per line, space-separated integers, `#` comments):
//!
//! ```text
//! # lattice m=3 rank=2
//! 1 1 1
//! 0 3 0
//! ```

mod relation;
mod snf;

use std::fmt::Write as _;

use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::exactnum::{common_denominator, Int, Rational};

pub use relation::{integer_relation, lll_reduce, RelationCandidate, RelationSearch};
pub use snf::{smith_normal_form, SmithDecomposition};

pub type IntVec = Vec<Int>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LatticeError {
    #[error("malformed input: {0}")]
    Malformed(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("lattice is not contained in the target lattice (row {row} is not a member)")]
    NotContained { row: usize },
    #[error("ambient dimensions differ ({0} vs {1})")]
    DimensionMismatch(usize, usize),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct IntegerLattice {
    ambient_dim: usize,
    basis: Vec<IntVec>,
}

/// Result of comparing `L ⊆ L0`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LatticeIndex {
    /// `|L0/L|` with the invariant factors of the quotient (all > 1).
    Finite { index: Int, invariant_factors: Vec<Int> },
    /// Ranks differ, so the quotient is infinite.
    Infinite { rank_deficit: usize },
}

impl LatticeIndex {
    pub fn finite(&self) -> Option<&Int> {
        match self {
            LatticeIndex::Finite { index, .. } => Some(index),
            LatticeIndex::Infinite { .. } => None,
        }
    }

    /// Finite with at most one nontrivial invariant factor.
    pub fn is_cyclic(&self) -> bool {
        matches!(self, LatticeIndex::Finite { invariant_factors, .. } if invariant_factors.len() <= 1)
    }
}

impl IntegerLattice {
    /// The rank-0 lattice of ℤᵐ.
    pub fn zero(ambient_dim: usize) -> Self {
        IntegerLattice { ambient_dim, basis: Vec::new() }
    }

    /// ℤᵐ itself.
    pub fn full(ambient_dim: usize) -> Self {
        IntegerLattice { ambient_dim, basis: identity(ambient_dim) }
    }

    /// Lattice spanned by `generators` (possibly empty) in ℤ^`ambient_dim`.
    pub fn from_generators(ambient_dim: usize, generators: Vec<IntVec>) -> Result<Self, LatticeError> {
        if let Some((i, row)) = generators.iter().enumerate().find(|(_, r)| r.len() != ambient_dim) {
            return Err(LatticeError::Malformed(format!(
                "row {i} has length {} but the ambient dimension is {ambient_dim}",
                row.len()
            )));
        }
        Ok(IntegerLattice { ambient_dim, basis: hnf_rows(generators) })
    }

    pub fn from_i64_rows(ambient_dim: usize, rows: &[Vec<i64>]) -> Result<Self, LatticeError> {
        Self::from_generators(ambient_dim, rows.iter().map(|r| to_int_vec(r)).collect())
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn rank(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[IntVec] {
        &self.basis
    }

    pub fn is_full_rank(&self) -> bool {
        self.rank() == self.ambient_dim
    }

    /// Coordinates of `v` in the HNF basis, or `None` when `v` is not in the lattice.
    pub fn coordinates(&self, v: &[Int]) -> Option<IntVec> {
        if v.len() != self.ambient_dim {
            return None;
        }
        let mut rest: IntVec = v.to_vec();
        let mut coords = Vec::with_capacity(self.rank());
        for row in &self.basis {
            let p = pivot_col(row).expect("HNF rows are nonzero");
            let (q, r) = rest[p].div_rem(&row[p]);
            if !r.is_zero() {
                return None;
            }
            if !q.is_zero() {
                for (x, b) in rest.iter_mut().zip(row) {
                    *x -= &q * b;
                }
            }
            coords.push(q);
        }
        rest.iter().all(Zero::is_zero).then_some(coords)
    }

    pub fn contains(&self, v: &[Int]) -> bool {
        self.coordinates(v).is_some()
    }

    pub fn contains_lattice(&self, other: &IntegerLattice) -> bool {
        self.ambient_dim == other.ambient_dim && other.basis.iter().all(|r| self.contains(r))
    }

    /// `|ℤᵐ/L|` for a full-rank lattice (product of the HNF pivots).
    pub fn index_in_ambient(&self) -> Option<Int> {
        if !self.is_full_rank() {
            return None;
        }
        Some(self.basis.iter().enumerate().map(|(i, r)| r[i].clone()).product())
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("# lattice m={} rank={}\n", self.ambient_dim, self.rank());
        out.push_str(&matrix_to_text(&self.basis));
        out
    }

    pub fn from_text(text: &str) -> Result<Self, LatticeError> {
        let rows = parse_int_matrix(text)?;
        let header_m = text.lines().find_map(|l| {
            let l = l.trim().strip_prefix('#')?;
            l.split_whitespace().find_map(|tok| tok.strip_prefix("m=")?.parse::<usize>().ok())
        });
        let m = match (header_m, rows.first()) {
            (Some(m), _) => m,
            (None, Some(r)) => r.len(),
            (None, None) => {
                return Err(LatticeError::Malformed("empty lattice text without `m=` header".into()))
            }
        };
        Self::from_generators(m, rows)
    }
}

pub fn identity(m: usize) -> Vec<IntVec> {
    (0..m)
        .map(|i| (0..m).map(|j| if i == j { Int::one() } else { Int::zero() }).collect())
        .collect()
}

pub fn to_int_vec(v: &[i64]) -> IntVec {
    v.iter().map(|&x| Int::from(x)).collect()
}

fn pivot_col(row: &[Int]) -> Option<usize> {
    row.iter().position(|x| !x.is_zero())
}

fn sub_multiple(target: &mut [Int], src: &[Int], q: &Int) {
    for (t, s) in target.iter_mut().zip(src) {
        *t -= q * s;
    }
}

/// Unimodular row reduction to echelon form, with pivots searched only in
/// `pivot_cols` columns (the leading ones). Returns the transformed rows and the
/// number of pivot rows; the remaining rows are zero on the pivot columns.
fn echelonize(mut rows: Vec<IntVec>, pivot_cols: usize) -> (Vec<IntVec>, usize) {
    let mut r = 0;
    for col in 0..pivot_cols {
        if r == rows.len() {
            break;
        }
        loop {
            let best = (r..rows.len())
                .filter(|&i| !rows[i][col].is_zero())
                .min_by(|&a, &b| rows[a][col].abs().cmp(&rows[b][col].abs()));
            let Some(best) = best else { break };
            rows.swap(r, best);
            let mut clean = true;
            let (head, tail) = rows.split_at_mut(r + 1);
            let pivot_row = &head[r];
            for row in tail.iter_mut() {
                if row[col].is_zero() {
                    continue;
                }
                let q = row[col].div_floor(&pivot_row[col]);
                sub_multiple(row, pivot_row, &q);
                if !row[col].is_zero() {
                    clean = false;
                }
            }
            if clean {
                if rows[r][col].is_negative() {
                    rows[r].iter_mut().for_each(|x| *x = -&*x);
                }
                r += 1;
                break;
            }
        }
    }
    (rows, r)
}

/// Canonical row HNF of the lattice spanned by `rows` (zero rows dropped).
fn hnf_rows(rows: Vec<IntVec>) -> Vec<IntVec> {
    let ncols = rows.first().map_or(0, Vec::len);
    let (mut rows, rank) = echelonize(rows, ncols);
    rows.truncate(rank);
    for p in 0..rows.len() {
        let c = pivot_col(&rows[p]).expect("pivot rows are nonzero");
        let (above, below) = rows.split_at_mut(p);
        let prow = &below[0];
        for row in above.iter_mut() {
            let q = row[c].div_floor(&prow[c]);
            if !q.is_zero() {
                sub_multiple(row, prow, &q);
            }
        }
    }
    rows
}

/// Canonical HNF basis of the lattice spanned by `rows`.
pub fn hermite_normal_form(rows: &[IntVec]) -> Result<IntegerLattice, LatticeError> {
    let Some(first) = rows.first() else {
        return Err(LatticeError::Malformed("no rows given".into()));
    };
    IntegerLattice::from_generators(first.len(), rows.to_vec())
}

fn clear_row_denominators(row: &[Rational]) -> IntVec {
    let d = common_denominator(row);
    row.iter().map(|x| (x * Rational::from_integer(d.clone())).to_integer()).collect()
}

/// All `a ∈ ℤᵐ` with `M·a = 0`; `constraints` are the rows of `M`, each of length `m`.
/// The result is saturated.
pub fn integer_kernel(constraints: &[Vec<Rational>], m: usize) -> Result<IntegerLattice, LatticeError> {
    if let Some(row) = constraints.iter().find(|r| r.len() != m) {
        return Err(LatticeError::Malformed(format!(
            "constraint row of length {} in a system with {m} unknowns",
            row.len()
        )));
    }
    let int_rows: Vec<IntVec> = constraints.iter().map(|r| clear_row_denominators(r)).collect();
    Ok(IntegerLattice { ambient_dim: m, basis: hnf_rows(int_kernel_rows(&int_rows, m)) })
}

/// Kernel basis of an integer matrix via echelonizing `[Mᵀ | I]`.
fn int_kernel_rows(rows: &[IntVec], m: usize) -> Vec<IntVec> {
    let k = rows.len();
    let augmented: Vec<IntVec> = (0..m)
        .map(|i| {
            let mut v: IntVec = rows.iter().map(|r| r[i].clone()).collect();
            v.extend((0..m).map(|j| if i == j { Int::one() } else { Int::zero() }));
            v
        })
        .collect();
    let (reduced, rank) = echelonize(augmented, k);
    reduced.into_iter().skip(rank).map(|r| r[k..].to_vec()).collect()
}

/// Integer solutions of a mixed system: exact linear equations
/// `Σ aᵢ·rowᵢ = 0` plus congruences `Σ aᵢ·cᵢ ≡ 0 (mod M)`.
///
/// Each congruence gets a slack unknown `s` and becomes the exact equation
/// `Σ aᵢ·cᵢ − s·M = 0`; the joint kernel is then projected onto the first `m`
/// coordinates.
pub fn modular_kernel(
    exact: &[Vec<Rational>],
    congruences: &[(Vec<Rational>, Rational)],
    m: usize,
) -> Result<IntegerLattice, LatticeError> {
    let slack = congruences.len();
    let width = m + slack;
    let mut rows = Vec::with_capacity(exact.len() + slack);
    for r in exact {
        if r.len() != m {
            return Err(LatticeError::Malformed(format!("exact row of length {} (expected {m})", r.len())));
        }
        let mut row = r.clone();
        row.resize(width, Rational::zero());
        rows.push(row);
    }
    for (j, (c, modulus)) in congruences.iter().enumerate() {
        if c.len() != m {
            return Err(LatticeError::Malformed(format!("congruence of length {} (expected {m})", c.len())));
        }
        if !modulus.is_positive() {
            return Err(LatticeError::Domain(format!("congruence modulus must be positive, got {modulus}")));
        }
        let mut row = c.clone();
        row.resize(width, Rational::zero());
        row[m + j] = -modulus.clone();
        rows.push(row);
    }
    let int_rows: Vec<IntVec> = rows.iter().map(|r| clear_row_denominators(r)).collect();
    let projected: Vec<IntVec> =
        int_kernel_rows(&int_rows, width).into_iter().map(|mut v| {
            v.truncate(m);
            v
        }).collect();
    IntegerLattice::from_generators(m, projected)
}

/// `{a ∈ ℤᵐ : a·v ≡ 0 (mod modulus)}`.
pub fn congruence_kernel(v: &[Int], modulus: &Int) -> Result<IntegerLattice, LatticeError> {
    if !modulus.is_positive() {
        return Err(LatticeError::Domain(format!("modulus must be ≥ 1, got {modulus}")));
    }
    let row: Vec<Rational> = v.iter().map(|x| Rational::from_integer(x.clone())).collect();
    modular_kernel(&[], &[(row, Rational::from_integer(modulus.clone()))], v.len())
}

/// `(L ⊗ ℚ) ∩ ℤᵐ`: the smallest lattice of the same rank containing `L` with
/// torsion-free quotient.
pub fn saturation(lattice: &IntegerLattice) -> IntegerLattice {
    let m = lattice.ambient_dim;
    if lattice.rank() == 0 {
        return lattice.clone();
    }
    let orthogonal = int_kernel_rows(&lattice.basis, m);
    IntegerLattice { ambient_dim: m, basis: hnf_rows(int_kernel_rows(&orthogonal, m)) }
}

/// `|L0/L|` together with the invariant factors of the quotient.
pub fn lattice_index(sub: &IntegerLattice, sup: &IntegerLattice) -> Result<LatticeIndex, LatticeError> {
    if sub.ambient_dim != sup.ambient_dim {
        return Err(LatticeError::DimensionMismatch(sub.ambient_dim, sup.ambient_dim));
    }
    let mut coords = Vec::with_capacity(sub.rank());
    for (row, v) in sub.basis.iter().enumerate() {
        coords.push(sup.coordinates(v).ok_or(LatticeError::NotContained { row })?);
    }
    if sub.rank() != sup.rank() {
        return Ok(LatticeIndex::Infinite { rank_deficit: sup.rank() - sub.rank() });
    }
    if coords.is_empty() {
        return Ok(LatticeIndex::Finite { index: Int::one(), invariant_factors: Vec::new() });
    }
    let snf = smith_normal_form(&coords);
    let index = snf.diagonal.iter().product();
    let invariant_factors = snf.diagonal.into_iter().filter(|d| !d.is_one()).collect();
    Ok(LatticeIndex::Finite { index, invariant_factors })
}

/// Nonzero elementary divisors of the basis matrix of `L`. Their product is
/// `|saturation(L)/L|`.
pub fn elementary_divisors(lattice: &IntegerLattice) -> Vec<Int> {
    if lattice.rank() == 0 {
        return Vec::new();
    }
    smith_normal_form(&lattice.basis).diagonal.into_iter().filter(|d| !d.is_zero()).collect()
}

pub fn matrix_to_text(rows: &[IntVec]) -> String {
    let mut out = String::new();
    for row in rows {
        let line: Vec<String> = row.iter().map(ToString::to_string).collect();
        let _ = writeln!(out, "{}", line.join(" "));
    }
    out
}

/// Parses row-per-line integer text; blank lines and `#` comments are skipped.
pub fn parse_int_matrix(text: &str) -> Result<Vec<IntVec>, LatticeError> {
    let mut rows: Vec<IntVec> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let row = line
            .split_whitespace()
            .map(|tok| {
                tok.parse::<Int>().map_err(|_| {
                    LatticeError::Malformed(format!("line {}: `{tok}` is not an integer", lineno + 1))
                })
            })
            .collect::<Result<IntVec, _>>()?;
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(LatticeError::Malformed(format!(
                    "line {}: expected {} entries, found {}",
                    lineno + 1,
                    first.len(),
                    row.len()
                )));
            }
        }
        rows.push(row);
    }
    Ok(rows)
}
