use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use super::{identity, IntVec};
use crate::exactnum::Int;

/// `left · M · right = diag(diagonal)` with unimodular `left`, `right`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SmithDecomposition {
    /// `min(rows, cols)` nonnegative entries, `d₁ | d₂ | …`, zeros last.
    pub diagonal: Vec<Int>,
    pub left: Vec<IntVec>,
    pub right: Vec<IntVec>,
}

impl SmithDecomposition {
    pub fn rank(&self) -> usize {
        self.diagonal.iter().filter(|d| !d.is_zero()).count()
    }
}

struct Work {
    a: Vec<IntVec>,
    u: Vec<IntVec>,
    v: Vec<IntVec>,
}

impl Work {
    fn swap_rows(&mut self, i: usize, j: usize) {
        self.a.swap(i, j);
        self.u.swap(i, j);
    }

    fn swap_cols(&mut self, i: usize, j: usize) {
        for row in self.a.iter_mut().chain(self.v.iter_mut()) {
            row.swap(i, j);
        }
    }

    /// row_i -= q·row_j
    fn row_op(&mut self, i: usize, j: usize, q: &Int) {
        for m in [&mut self.a, &mut self.u] {
            let src = m[j].clone();
            for (x, y) in m[i].iter_mut().zip(&src) {
                *x -= q * y;
            }
        }
    }

    /// col_i -= q·col_j
    fn col_op(&mut self, i: usize, j: usize, q: &Int) {
        for row in self.a.iter_mut().chain(self.v.iter_mut()) {
            let y = row[j].clone();
            row[i] -= q * y;
        }
    }

    fn negate_row(&mut self, i: usize) {
        for m in [&mut self.a, &mut self.u] {
            m[i].iter_mut().for_each(|x| *x = -&*x);
        }
    }
}

pub fn smith_normal_form(matrix: &[IntVec]) -> SmithDecomposition {
    let rows = matrix.len();
    let cols = matrix.first().map_or(0, Vec::len);
    let mut w = Work { a: matrix.to_vec(), u: identity(rows), v: identity(cols) };
    let diag_len = rows.min(cols);

    for t in 0..diag_len {
        let Some((pi, pj)) = min_nonzero(&w.a, t, |_, _| true) else { break };
        w.swap_rows(t, pi);
        w.swap_cols(t, pj);
        loop {
            for i in t + 1..rows {
                if !w.a[i][t].is_zero() {
                    let q = w.a[i][t].div_floor(&w.a[t][t]);
                    w.row_op(i, t, &q);
                }
            }
            for j in t + 1..cols {
                if !w.a[t][j].is_zero() {
                    let q = w.a[t][j].div_floor(&w.a[t][t]);
                    w.col_op(j, t, &q);
                }
            }
            // Remainders left in the pivot row/column: move the smallest to the pivot.
            if let Some((i, j)) = min_nonzero(&w.a, t, |i, j| (i == t) != (j == t)) {
                if w.a[i][j].abs() < w.a[t][t].abs() {
                    w.swap_rows(t, i);
                    w.swap_cols(t, j);
                }
                continue;
            }
            let pivot = w.a[t][t].clone();
            let bad = (t + 1..rows)
                .find(|&i| (t + 1..cols).any(|j| !w.a[i][j].is_multiple_of(&pivot)));
            match bad {
                Some(i) => w.row_op(t, i, &-Int::one()),
                None => break,
            }
        }
        if w.a[t][t].is_negative() {
            w.negate_row(t);
        }
    }
    let diagonal = (0..diag_len).map(|i| w.a[i][i].clone()).collect();
    SmithDecomposition { diagonal, left: w.u, right: w.v }
}

/// Position of the smallest nonzero entry in the trailing block `[t.., t..]`
/// restricted by `keep`.
fn min_nonzero(a: &[IntVec], t: usize, keep: impl Fn(usize, usize) -> bool) -> Option<(usize, usize)> {
    let mut best: Option<(usize, usize)> = None;
    for (i, row) in a.iter().enumerate().skip(t) {
        for (j, x) in row.iter().enumerate().skip(t) {
            if x.is_zero() || !keep(i, j) {
                continue;
            }
            if best.is_none_or(|(bi, bj)| x.abs() < a[bi][bj].abs()) {
                best = Some((i, j));
            }
        }
    }
    best
}
