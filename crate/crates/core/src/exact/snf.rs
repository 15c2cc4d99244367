//! Smith normal form over the integers with unimodular transform tracking.

use crate::exact::matrix::Mat;
use crate::Integer;
use num_traits::{One, Signed, Zero};

/// Decomposition `d = u * g * v` with `u`, `v` unimodular and `d` diagonal,
/// nonnegative, and `d[i] | d[i+1]`.
#[derive(Clone, Debug)]
pub struct SmithNormalForm {
    pub d: Mat<Integer>,
    pub u: Mat<Integer>,
    pub v: Mat<Integer>,
}

impl SmithNormalForm {
    /// The diagonal of `d`, length `min(rows, cols)`.
    pub fn diagonal(&self) -> Vec<Integer> {
        (0..self.d.rows().min(self.d.cols()))
            .map(|i| self.d[[i, i]].clone())
            .collect()
    }
}

/// Computes the Smith normal form of an integer matrix.
///
/// At every stage the pivot is the smallest nonzero entry in absolute value
/// of the remaining submatrix, ties broken by row-major position; this makes
/// the sequence of elementary operations, and hence `u` and `v`, fully
/// deterministic.
pub fn smith_normal_form(g: &Mat<Integer>) -> SmithNormalForm {
    let rows = g.rows();
    let cols = g.cols();
    let mut d = g.clone();
    let mut u = identity(rows);
    let mut v = identity(cols);

    for t in 0..rows.min(cols) {
        'stage: loop {
            let Some((pi, pj)) = find_pivot(&d, t) else {
                // Remaining submatrix is zero; the stage, and with it the
                // whole elimination, is done.
                break 'stage;
            };
            if pi != t {
                swap_rows(&mut d, t, pi);
                swap_rows(&mut u, t, pi);
            }
            if pj != t {
                swap_cols(&mut d, t, pj);
                swap_cols(&mut v, t, pj);
            }
            let mut clean = true;
            for i in t + 1..rows {
                if !d[[i, t]].is_zero() {
                    let q = &d[[i, t]] / &d[[t, t]];
                    if !q.is_zero() {
                        row_sub_mul(&mut d, i, t, &q);
                        row_sub_mul(&mut u, i, t, &q);
                    }
                    if !d[[i, t]].is_zero() {
                        clean = false;
                    }
                }
            }
            for j in t + 1..cols {
                if !d[[t, j]].is_zero() {
                    let q = &d[[t, j]] / &d[[t, t]];
                    if !q.is_zero() {
                        col_sub_mul(&mut d, j, t, &q);
                        col_sub_mul(&mut v, j, t, &q);
                    }
                    if !d[[t, j]].is_zero() {
                        clean = false;
                    }
                }
            }
            if !clean {
                // Some remainder survived; it is smaller than the pivot, so
                // the next round picks it up and the loop terminates.
                continue 'stage;
            }
            // Enforce the divisibility chain: the pivot must divide every
            // entry of the trailing submatrix.
            let mut offender = None;
            'scan: for i in t + 1..rows {
                for j in t + 1..cols {
                    if !(&d[[i, j]] % &d[[t, t]]).is_zero() {
                        offender = Some(i);
                        break 'scan;
                    }
                }
            }
            if let Some(i) = offender {
                // Fold the offending row into the pivot row; the next round
                // shrinks the pivot.
                row_add(&mut d, t, i);
                row_add(&mut u, t, i);
                continue 'stage;
            }
            if d[[t, t]].is_negative() {
                negate_row(&mut d, t);
                negate_row(&mut u, t);
            }
            break 'stage;
        }
    }
    SmithNormalForm { d, u, v }
}

fn identity(n: usize) -> Mat<Integer> {
    let mut m = Mat::filled(n, n, Integer::zero());
    for i in 0..n {
        m[[i, i]] = Integer::one();
    }
    m
}

/// Smallest nonzero entry by absolute value in the submatrix at `(t, t)`,
/// ties by row-major position.
fn find_pivot(d: &Mat<Integer>, t: usize) -> Option<(usize, usize)> {
    let mut best: Option<(Integer, usize, usize)> = None;
    for i in t..d.rows() {
        for j in t..d.cols() {
            if d[[i, j]].is_zero() {
                continue;
            }
            let a = d[[i, j]].abs();
            if best.as_ref().is_none_or(|(b, _, _)| a < *b) {
                best = Some((a, i, j));
            }
        }
    }
    best.map(|(_, i, j)| (i, j))
}

fn swap_rows(m: &mut Mat<Integer>, a: usize, b: usize) {
    for j in 0..m.cols() {
        let x = m[[a, j]].clone();
        m[[a, j]] = std::mem::replace(&mut m[[b, j]], x);
    }
}

fn swap_cols(m: &mut Mat<Integer>, a: usize, b: usize) {
    for i in 0..m.rows() {
        let x = m[[i, a]].clone();
        m[[i, a]] = std::mem::replace(&mut m[[i, b]], x);
    }
}

/// `row[i] -= q * row[t]`.
fn row_sub_mul(m: &mut Mat<Integer>, i: usize, t: usize, q: &Integer) {
    for j in 0..m.cols() {
        let sub = q * &m[[t, j]];
        m[[i, j]] -= sub;
    }
}

/// `col[j] -= q * col[t]`.
fn col_sub_mul(m: &mut Mat<Integer>, j: usize, t: usize, q: &Integer) {
    for i in 0..m.rows() {
        let sub = q * &m[[i, t]];
        m[[i, j]] -= sub;
    }
}

/// `row[t] += row[i]`.
fn row_add(m: &mut Mat<Integer>, t: usize, i: usize) {
    for j in 0..m.cols() {
        let add = m[[i, j]].clone();
        m[[t, j]] += add;
    }
}

fn negate_row(m: &mut Mat<Integer>, t: usize) {
    for j in 0..m.cols() {
        m[[t, j]] = -std::mem::take(&mut m[[t, j]]);
    }
}
