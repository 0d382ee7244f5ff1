//! Integer relation detection modulo a real period.
//!
//! For `x ∈ ℝᵐ`, a period `M` and a tolerance `tol`, the relation lattice has
//! basis rows `(eᵢ, ⌊γ·xᵢ⌉)` for `i < m` and `(0, …, 0, ⌊γ·M⌉)`, `γ = 1/tol`.
//! A relation `a·x ≡ 0 (mod M)` shows up as a lattice vector `(a, t)` with small
//! last coordinate. The basis is LLL-reduced exactly (integral LLL, δ = 3/4),
//! then a Fincke–Pohst enumeration over the reduced basis collects every lattice
//! vector inside the ellipsoid that contains all admissible `(a, t)`. Each
//! candidate is re-verified against the float residual before it is reported.

use std::collections::BTreeSet;

use num_integer::Integer;
use num_traits::{FromPrimitive, Signed, ToPrimitive, Zero};
use serde::Serialize;

use super::{IntVec, LatticeError};
use crate::exactnum::Int;

/// Work cap for the enumeration phase; beyond it only the reduced basis is reported.
const NODE_BUDGET: usize = 1 << 20;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RelationCandidate {
    pub vector: Vec<i64>,
    /// `|a·x mod M|` folded into `[0, M/2]`.
    pub residual: f64,
    /// `1 − residual/tol`, clamped to `[0, 1]`.
    pub confidence: f64,
}

/// Parameters of a relation search.
#[derive(Clone, Debug)]
pub struct RelationSearch {
    pub modulus: f64,
    pub coeff_bound: u32,
    pub tol: f64,
}

impl RelationSearch {
    pub fn run(&self, x: &[f64]) -> Result<Vec<RelationCandidate>, LatticeError> {
        integer_relation(x, self.modulus, self.coeff_bound, self.tol)
    }
}

/// Residual of `a·x` modulo `modulus`, folded into `[0, modulus/2]`.
pub fn folded_residual(a: &[i64], x: &[f64], modulus: f64) -> f64 {
    let dot: f64 = a.iter().zip(x).map(|(&c, &v)| c as f64 * v).sum();
    let r = dot.rem_euclid(modulus);
    r.min(modulus - r)
}

pub fn integer_relation(
    x: &[f64],
    modulus: f64,
    coeff_bound: u32,
    tol: f64,
) -> Result<Vec<RelationCandidate>, LatticeError> {
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(LatticeError::Domain(format!("tolerance must be positive, got {tol}")));
    }
    if !(modulus > 0.0 && modulus.is_finite()) {
        return Err(LatticeError::Domain(format!("modulus must be positive, got {modulus}")));
    }
    if coeff_bound == 0 {
        return Err(LatticeError::Domain("coefficient bound must be at least 1".into()));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(LatticeError::Domain("relation input contains a non-finite value".into()));
    }
    let m = x.len();
    if m == 0 {
        return Ok(Vec::new());
    }
    let gamma = 1.0 / tol;
    let scaled = |v: f64| -> Result<Int, LatticeError> {
        Int::from_f64((gamma * v).round())
            .ok_or_else(|| LatticeError::Domain(format!("cannot scale {v} by {gamma}")))
    };
    let mut basis: Vec<IntVec> = Vec::with_capacity(m + 1);
    for (i, &xi) in x.iter().enumerate() {
        let mut row = vec![Int::zero(); m + 1];
        row[i] = Int::from(1);
        row[m] = scaled(xi)?;
        basis.push(row);
    }
    let mut last = vec![Int::zero(); m + 1];
    last[m] = scaled(modulus)?;
    basis.push(last);

    let reduced = lll_reduce(basis);

    // Admissible vectors satisfy |a|² ≤ m·B² and |t| ≤ t_bound, where t_bound
    // covers γ·tol plus the rounding of every scaled entry that a relation touches.
    let b = f64::from(coeff_bound);
    let sum_abs: f64 = x.iter().map(|v| v.abs()).sum();
    let s_max = (b * sum_abs + tol) / modulus + 1.0;
    let t_bound = 1.0 + 0.5 * (m as f64 * b + s_max) + 1.0;
    let mut weights = vec![1.0 / (b * (m as f64).sqrt()); m];
    weights.push(1.0 / t_bound);

    let mut found: BTreeSet<Vec<i64>> = BTreeSet::new();
    let mut consider = |v: &[Int]| {
        let coeffs: Option<Vec<i64>> = v[..m].iter().map(ToPrimitive::to_i64).collect();
        let Some(mut coeffs) = coeffs else { return };
        if coeffs.iter().all(|&c| c == 0) || coeffs.iter().any(|&c| c.unsigned_abs() > u64::from(coeff_bound)) {
            return;
        }
        if coeffs.iter().find(|&&c| c != 0).is_some_and(|&c| c < 0) {
            coeffs.iter_mut().for_each(|c| *c = -*c);
        }
        found.insert(coeffs);
    };
    for row in &reduced {
        consider(row);
    }
    enumerate_ellipsoid(&reduced, &weights, 2.0, NODE_BUDGET, &mut consider);

    let mut out: Vec<RelationCandidate> = found
        .into_iter()
        .filter_map(|vector| {
            let residual = folded_residual(&vector, x, modulus);
            (residual <= tol).then(|| RelationCandidate {
                confidence: (1.0 - residual / tol).clamp(0.0, 1.0),
                residual,
                vector,
            })
        })
        .collect();
    out.sort_by(|a, b| {
        a.residual
            .total_cmp(&b.residual)
            .then_with(|| norm2(&a.vector).cmp(&norm2(&b.vector)))
            .then_with(|| a.vector.cmp(&b.vector))
    });
    Ok(out)
}

fn norm2(v: &[i64]) -> i128 {
    v.iter().map(|&c| i128::from(c) * i128::from(c)).sum()
}

fn dot(a: &[Int], b: &[Int]) -> Int {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Nearest integer to `num/den` for `den > 0` (ties toward +∞).
fn round_div(num: &Int, den: &Int) -> Int {
    let two = Int::from(2);
    (num * &two + den).div_floor(&(den * &two))
}

/// Integral LLL with δ = 3/4 on linearly independent integer rows.
///
/// Works entirely in integers: `d[i]` is the Gram determinant of the first `i`
/// rows and `lambda[k][j] = d[j+1]·μ[k][j]`.
pub fn lll_reduce(mut b: Vec<IntVec>) -> Vec<IntVec> {
    let n = b.len();
    if n <= 1 {
        return b;
    }
    // 1-based Gram data: d[0] = 1, d[i] for i = 1..n.
    let mut d: Vec<Int> = vec![Int::zero(); n + 1];
    let mut lambda: Vec<Vec<Int>> = vec![vec![Int::zero(); n + 1]; n + 1];
    d[0] = Int::from(1);
    d[1] = dot(&b[0], &b[0]);
    let mut k = 2usize;
    let mut k_max = 1usize;

    let red = |b: &mut Vec<IntVec>, lambda: &mut Vec<Vec<Int>>, d: &[Int], k: usize, l: usize| {
        if (&lambda[k][l] * Int::from(2)).abs() > d[l] {
            let q = round_div(&lambda[k][l], &d[l]);
            let src = b[l - 1].clone();
            for (x, y) in b[k - 1].iter_mut().zip(&src) {
                *x -= &q * y;
            }
            let dl = d[l].clone();
            lambda[k][l] -= &q * dl;
            for i in 1..l {
                let t = &q * &lambda[l][i];
                lambda[k][i] -= t;
            }
        }
    };

    while k <= n {
        if k > k_max {
            k_max = k;
            for j in 1..=k {
                let mut u = dot(&b[k - 1], &b[j - 1]);
                for i in 1..j {
                    u = (&d[i] * &u - &lambda[k][i] * &lambda[j][i]) / &d[i - 1];
                }
                if j < k {
                    lambda[k][j] = u;
                } else {
                    assert!(!u.is_zero(), "lll_reduce: rows are linearly dependent");
                    d[k] = u;
                }
            }
        }
        loop {
            red(&mut b, &mut lambda, &d, k, k - 1);
            let lhs = &d[k] * &d[k - 2] * Int::from(4);
            let rhs = &d[k - 1] * &d[k - 1] * Int::from(3) - &lambda[k][k - 1] * &lambda[k][k - 1] * Int::from(4);
            if lhs < rhs {
                // swap k and k-1
                b.swap(k - 1, k - 2);
                for j in 1..k - 1 {
                    let t = lambda[k][j].clone();
                    lambda[k][j] = std::mem::replace(&mut lambda[k - 1][j], t);
                }
                let lam = lambda[k][k - 1].clone();
                let big_b = (&d[k - 2] * &d[k] + &lam * &lam) / &d[k - 1];
                for i in k + 1..=k_max {
                    let t = lambda[i][k].clone();
                    lambda[i][k] = (&d[k] * &lambda[i][k - 1] - &lam * &t) / &d[k - 1];
                    lambda[i][k - 1] = (&big_b * &t + &lam * &lambda[i][k]) / &d[k];
                }
                d[k - 1] = big_b;
                if k > 2 {
                    k -= 1;
                }
            } else {
                for l in (1..k - 1).rev() {
                    red(&mut b, &mut lambda, &d, k, l);
                }
                k += 1;
                break;
            }
        }
    }
    b
}

/// Visits every integer combination `v = Σ zᵢ·bᵢ` with `Σ (wⱼ·vⱼ)² ≤ radius2`.
fn enumerate_ellipsoid(
    basis: &[IntVec],
    weights: &[f64],
    radius2: f64,
    budget: usize,
    visit: &mut impl FnMut(&[Int]),
) -> bool {
    let n = basis.len();
    let dim = weights.len();
    let fb: Vec<Vec<f64>> = basis
        .iter()
        .map(|r| r.iter().zip(weights).map(|(x, w)| x.to_f64().unwrap_or(f64::INFINITY) * w).collect())
        .collect();
    // Gram–Schmidt in the weighted metric.
    let mut bstar: Vec<Vec<f64>> = Vec::with_capacity(n);
    let mut norms = vec![0.0; n];
    let mut mu = vec![vec![0.0; n]; n];
    for i in 0..n {
        let mut v = fb[i].clone();
        for j in 0..i {
            let m: f64 = fb[i].iter().zip(&bstar[j]).map(|(a, b)| a * b).sum::<f64>() / norms[j];
            mu[i][j] = m;
            for t in 0..dim {
                v[t] -= m * bstar[j][t];
            }
        }
        norms[i] = v.iter().map(|a| a * a).sum();
        bstar.push(v);
    }
    if norms.iter().any(|&x| !(x > 0.0) || !x.is_finite()) {
        return false;
    }

    struct Ctx<'a, F: FnMut(&[Int])> {
        basis: &'a [IntVec],
        mu: &'a [Vec<f64>],
        norms: &'a [f64],
        radius2: f64,
        z: Vec<i64>,
        nodes: usize,
        budget: usize,
        visit: &'a mut F,
    }

    fn recurse<F: FnMut(&[Int])>(ctx: &mut Ctx<'_, F>, level: usize, partial: f64) -> bool {
        let n = ctx.basis.len();
        let center: f64 = -(level + 1..n).map(|i| ctx.z[i] as f64 * ctx.mu[i][level]).sum::<f64>();
        let slack = (ctx.radius2 - partial).max(0.0);
        let half = (slack / ctx.norms[level]).sqrt();
        let lo = (center - half - 1e-9).ceil() as i64;
        let hi = (center + half + 1e-9).floor() as i64;
        for zi in lo..=hi {
            ctx.nodes += 1;
            if ctx.nodes > ctx.budget {
                return false;
            }
            let dz = zi as f64 - center;
            let p = partial + dz * dz * ctx.norms[level];
            if p > ctx.radius2 * (1.0 + 1e-9) {
                continue;
            }
            ctx.z[level] = zi;
            if level == 0 {
                if ctx.z.iter().any(|&c| c != 0) {
                    let dim = ctx.basis[0].len();
                    let mut v = vec![Int::zero(); dim];
                    for (row, &c) in ctx.basis.iter().zip(&ctx.z) {
                        if c != 0 {
                            let c = Int::from(c);
                            for (acc, x) in v.iter_mut().zip(row) {
                                *acc += &c * x;
                            }
                        }
                    }
                    (ctx.visit)(&v);
                }
            } else if !recurse(ctx, level - 1, p) {
                return false;
            }
        }
        ctx.z[level] = 0;
        true
    }

    let mut ctx = Ctx { basis, mu: &mu, norms: &norms, radius2, z: vec![0; n], nodes: 0, budget, visit };
    recurse(&mut ctx, n - 1, 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactnum::{ExactScalar, Symbol, SymbolTable};
    use crate::lattice::to_int_vec;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn has(c: &[RelationCandidate], v: &[i64]) -> bool {
        c.iter().any(|r| r.vector == v)
    }

    #[test]
    fn finds_linear_and_modular_relations() {
        let s2 = 2f64.sqrt();
        let x = [s2, 2.0 * s2, 1.0];
        let c = integer_relation(&x, 2.0, 5, 1e-9).unwrap();
        assert!(has(&c, &[2, -1, 0]));
        assert!(has(&c, &[0, 0, 2]));
        // exact confirmation of both relations
        let b = ExactScalar::symbol(Symbol::new("b").unwrap());
        let xs = [b.clone(), b.scale(&crate::exactnum::rat(2, 1)), ExactScalar::from_int(1)];
        let table = SymbolTable::new().with("b", s2);
        let pair = |a: [i64; 3]| -> ExactScalar {
            xs.iter().zip(a).map(|(x, c)| x.scale(&crate::exactnum::rat(c, 1))).sum()
        };
        assert!(pair([2, -1, 0]).is_zero());
        assert_eq!(pair([0, 0, 2]).reduce_mod(&crate::exactnum::rat(2, 1)).unwrap().representative(), &ExactScalar::zero());
        assert!(pair([0, 0, 2]).evaluate_float(&table).is_ok());
        // sorted by residual, all verified
        assert!(c.windows(2).all(|w| w[0].residual <= w[1].residual));
        assert!(c.iter().all(|r| r.residual <= 1e-9 && r.vector.iter().all(|a| a.abs() <= 5)));
    }

    #[test]
    fn one_dimensional() {
        let c = integer_relation(&[0.5], 1.0, 3, 1e-9).unwrap();
        assert!(has(&c, &[2]));
        assert!(!has(&c, &[1]) && !has(&c, &[3]));
        let c = integer_relation(&[0.75], 1.5, 3, 1e-9).unwrap();
        assert_eq!(c[0].vector, vec![2]);
    }

    #[test]
    fn generic_input_has_no_relation() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut hits = 0;
        for _ in 0..50 {
            let m = rng.gen_range(1..=5);
            let x: Vec<f64> = (0..m).map(|_| rng.gen::<f64>()).collect();
            hits += usize::from(!integer_relation(&x, 1.0, 3, 1e-12).unwrap().is_empty());
        }
        assert_eq!(hits, 0);
    }

    #[test]
    fn bad_parameters() {
        assert!(integer_relation(&[1.0], 1.0, 3, 0.0).is_err());
        assert!(integer_relation(&[1.0], 0.0, 3, 1e-9).is_err());
        assert!(integer_relation(&[1.0], 1.0, 0, 1e-9).is_err());
        assert!(integer_relation(&[f64::NAN], 1.0, 1, 1e-9).is_err());
        assert!(integer_relation(&[], 1.0, 1, 1e-9).unwrap().is_empty());
    }

    #[test]
    fn lll_preserves_lattice_and_reduces() {
        let basis = vec![to_int_vec(&[1, 1, 1]), to_int_vec(&[-1, 0, 2]), to_int_vec(&[3, 5, 6])];
        let red = lll_reduce(basis.clone());
        let a = crate::lattice::IntegerLattice::from_generators(3, basis).unwrap();
        let b = crate::lattice::IntegerLattice::from_generators(3, red.clone()).unwrap();
        assert_eq!(a, b);
        let n0: Int = dot(&red[0], &red[0]);
        assert!(n0 <= Int::from(3));
    }
}
