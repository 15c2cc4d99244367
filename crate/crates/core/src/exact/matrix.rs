//! Dense matrices over cyclotomic fields, exact Gaussian elimination, and
//! incremental row spaces for rank tracking.
//!
//! Two elimination styles are provided:
//!
//! * [`ExactMatrix`] / [`RowSpace`] work over `Q(zeta_m)` with row-reduced
//!   echelon form and unit pivots; [`RowSpace`] additionally tracks how each
//!   echelon row decomposes over the originally inserted rows, so dependent
//!   rows come back with their exact coordinates over the accepted basis.
//! * [`IntRowSpace`] works fraction-free over the integers, stripping the
//!   content of every intermediate row; it only answers rank questions but
//!   stays fast on long integer rows.

use crate::exact::cyclotomic::CyclotomicElement;
use crate::Integer;
use num_integer::Integer as _;
use num_traits::{Signed, Zero};
use std::ops::{Index, IndexMut};

/// A dense row-major matrix.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Mat<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Clone> Mat<T> {
    pub fn filled(rows: usize, cols: usize, fill: T) -> Self {
        Mat {
            rows,
            cols,
            data: vec![fill; rows * cols],
        }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Mat { rows, cols, data }
    }

    /// Builds a matrix from rows, which must all have equal length.
    ///
    /// # Panics
    /// Panics on ragged input or an empty row list.
    pub fn from_rows(rows: Vec<Vec<T>>) -> Self {
        assert!(!rows.is_empty(), "matrix needs at least one row");
        let cols = rows[0].len();
        let mut data = Vec::with_capacity(rows.len() * cols);
        let nrows = rows.len();
        for r in rows {
            assert_eq!(r.len(), cols, "ragged rows");
            data.extend(r);
        }
        Mat {
            rows: nrows,
            cols,
            data,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn transpose(&self) -> Self {
        let mut data = Vec::with_capacity(self.data.len());
        for j in 0..self.cols {
            for i in 0..self.rows {
                data.push(self[[i, j]].clone());
            }
        }
        Mat {
            rows: self.cols,
            cols: self.rows,
            data,
        }
    }
}

impl<T> Index<[usize; 2]> for Mat<T> {
    type Output = T;
    fn index(&self, [i, j]: [usize; 2]) -> &T {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl<T> IndexMut<[usize; 2]> for Mat<T> {
    fn index_mut(&mut self, [i, j]: [usize; 2]) -> &mut T {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

/// A matrix over a fixed cyclotomic field `Q(zeta_order)`.
#[derive(Clone)]
pub struct ExactMatrix {
    order: u32,
    mat: Mat<CyclotomicElement>,
}

impl ExactMatrix {
    /// Builds the matrix, lifting every entry into `Q(zeta_order)`.
    ///
    /// # Panics
    /// Panics if some entry's order does not divide `order`, or on ragged
    /// input.
    pub fn from_rows(order: u32, rows: Vec<Vec<CyclotomicElement>>) -> Self {
        let lifted = rows
            .into_iter()
            .map(|r| r.into_iter().map(|e| e.lift_to_order(order)).collect())
            .collect();
        ExactMatrix {
            order,
            mat: Mat::from_rows(lifted),
        }
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn rows(&self) -> usize {
        self.mat.rows()
    }

    pub fn cols(&self) -> usize {
        self.mat.cols()
    }

    pub fn entry(&self, i: usize, j: usize) -> &CyclotomicElement {
        &self.mat[[i, j]]
    }

    /// Exact rank via Gaussian elimination. In every column the candidate
    /// pivot with the smallest coefficient size is chosen, which keeps the
    /// intermediate entries short; the choice does not affect the result.
    pub fn rank(&self) -> usize {
        let mut work: Vec<Vec<CyclotomicElement>> =
            (0..self.rows()).map(|i| self.mat.row(i).to_vec()).collect();
        let mut next_row = 0;
        for col in 0..self.cols() {
            let Some(p) = pick_pivot(&work, next_row, col) else {
                continue;
            };
            work.swap(next_row, p);
            let inv = work[next_row][col].inv();
            for j in col..self.cols() {
                work[next_row][j] = &work[next_row][j] * &inv;
            }
            for i in next_row + 1..work.len() {
                if !work[i][col].is_zero() {
                    let c = work[i][col].clone();
                    for j in col..self.cols() {
                        let t = &c * &work[next_row][j];
                        work[i][j] -= &t;
                    }
                }
            }
            next_row += 1;
            if next_row == work.len() {
                break;
            }
        }
        next_row
    }

    /// Solves `x * self = b` for a row vector `x`, if a solution exists.
    /// Free coordinates are set to zero, making the answer deterministic.
    ///
    /// # Panics
    /// Panics if `b.len() != self.cols()`.
    pub fn solve_left(&self, b: &[CyclotomicElement]) -> Option<Vec<CyclotomicElement>> {
        assert_eq!(b.len(), self.cols(), "right-hand side length mismatch");
        let r = self.rows();
        let c = self.cols();
        // Augmented system A^T y = b^T: c rows, r + 1 columns.
        let mut aug: Vec<Vec<CyclotomicElement>> = (0..c)
            .map(|i| {
                let mut row: Vec<CyclotomicElement> =
                    (0..r).map(|j| self.mat[[j, i]].clone()).collect();
                row.push(b[i].lift_to_order(self.order));
                row
            })
            .collect();
        let mut pivots: Vec<(usize, usize)> = vec![];
        let mut next_row = 0;
        for col in 0..r {
            let Some(p) = pick_pivot(&aug, next_row, col) else {
                continue;
            };
            aug.swap(next_row, p);
            let inv = aug[next_row][col].inv();
            for j in col..=r {
                aug[next_row][j] = &aug[next_row][j] * &inv;
            }
            for i in 0..aug.len() {
                if i != next_row && !aug[i][col].is_zero() {
                    let f = aug[i][col].clone();
                    for j in col..=r {
                        let t = &f * &aug[next_row][j];
                        aug[i][j] -= &t;
                    }
                }
            }
            pivots.push((next_row, col));
            next_row += 1;
            if next_row == aug.len() {
                break;
            }
        }
        // Inconsistent when a zero row has a nonzero augmented entry.
        for row in aug.iter().skip(next_row) {
            if !row[r].is_zero() {
                return None;
            }
        }
        let mut x = vec![CyclotomicElement::zero(self.order); r];
        for &(row, col) in &pivots {
            x[col] = aug[row][r].clone();
        }
        Some(x)
    }
}

/// Exact rank of a matrix over its cyclotomic field.
pub fn matrix_rank(m: &ExactMatrix) -> usize {
    m.rank()
}

/// Picks, among `work[from..]`, the row whose entry in `col` is nonzero and
/// shortest; returns its index.
fn pick_pivot(
    work: &[Vec<CyclotomicElement>],
    from: usize,
    col: usize,
) -> Option<usize> {
    let mut best: Option<(u64, usize)> = None;
    for (i, row) in work.iter().enumerate().skip(from) {
        if !row[col].is_zero() {
            let s = row[col].size_estimate();
            if best.as_ref().is_none_or(|&(bs, _)| s < bs) {
                best = Some((s, i));
            }
        }
    }
    best.map(|(_, i)| i)
}

/// Outcome of offering a row to a [`RowSpace`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Reduction {
    /// The row enlarged the span and was kept.
    Independent,
    /// The row lies in the span; the payload holds its unique coordinates
    /// over the previously accepted rows, in acceptance order.
    Dependent(Vec<CyclotomicElement>),
}

/// An incrementally maintained row space over `Q(zeta_order)`.
///
/// Internally keeps a row-reduced echelon basis together with the exact
/// transformation expressing each echelon row over the accepted input rows.
pub struct RowSpace {
    order: u32,
    cols: usize,
    /// Echelon rows with unit pivots, mutually reduced.
    rows: Vec<Vec<CyclotomicElement>>,
    pivot_cols: Vec<usize>,
    /// `rows[i] = sum_j transform[i][j] * accepted[j]`.
    transform: Vec<Vec<CyclotomicElement>>,
    accepted: usize,
}

impl RowSpace {
    pub fn new(order: u32, cols: usize) -> Self {
        RowSpace {
            order,
            cols,
            rows: vec![],
            pivot_cols: vec![],
            transform: vec![],
            accepted: 0,
        }
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    /// Offers a row. Independent rows are accepted into the basis; dependent
    /// rows are returned with their coordinates over the accepted rows.
    ///
    /// # Panics
    /// Panics if the row length disagrees or an entry cannot be lifted into
    /// the space's field.
    pub fn insert(&mut self, row: &[CyclotomicElement]) -> Reduction {
        assert_eq!(row.len(), self.cols, "row length mismatch");
        let mut res: Vec<CyclotomicElement> =
            row.iter().map(|e| e.lift_to_order(self.order)).collect();
        let mut coef = vec![CyclotomicElement::zero(self.order); self.rows.len()];
        for i in 0..self.rows.len() {
            let p = self.pivot_cols[i];
            if res[p].is_zero() {
                continue;
            }
            let c = res[p].clone();
            for j in p..self.cols {
                if !self.rows[i][j].is_zero() {
                    let t = &c * &self.rows[i][j];
                    res[j] -= &t;
                }
            }
            coef[i] = c;
        }
        let Some(pivot) = res.iter().position(|e| !e.is_zero()) else {
            // row = sum_i coef[i] * rows[i]; push down to accepted rows.
            let mut x = vec![CyclotomicElement::zero(self.order); self.accepted];
            for (i, c) in coef.iter().enumerate() {
                if c.is_zero() {
                    continue;
                }
                for (j, t) in self.transform[i].iter().enumerate() {
                    if !t.is_zero() {
                        let add = c * t;
                        x[j] += &add;
                    }
                }
            }
            return Reduction::Dependent(x);
        };
        // Normalize the residual to a unit pivot and extend the transform:
        // res = (row - sum coef[i] rows[i]) / pv.
        let pv = res[pivot].clone();
        let inv = pv.inv();
        for e in res.iter_mut() {
            if !e.is_zero() {
                *e = &*e * &inv;
            }
        }
        let mut t_new = vec![CyclotomicElement::zero(self.order); self.accepted + 1];
        t_new[self.accepted] = inv.clone();
        for (i, c) in coef.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let f = c * &inv;
            for (j, t) in self.transform[i].iter().enumerate() {
                if !t.is_zero() {
                    let sub = &f * t;
                    t_new[j] -= &sub;
                }
            }
        }
        for t in self.transform.iter_mut() {
            t.resize(self.accepted + 1, CyclotomicElement::zero(self.order));
        }
        // Back-reduce the existing basis against the new pivot column.
        for i in 0..self.rows.len() {
            if self.rows[i][pivot].is_zero() {
                continue;
            }
            let c = self.rows[i][pivot].clone();
            for j in 0..self.cols {
                if !res[j].is_zero() {
                    let t = &c * &res[j];
                    self.rows[i][j] -= &t;
                }
            }
            for j in 0..=self.accepted {
                if !t_new[j].is_zero() {
                    let t = &c * &t_new[j];
                    self.transform[i][j] -= &t;
                }
            }
        }
        self.rows.push(res);
        self.pivot_cols.push(pivot);
        self.transform.push(t_new);
        self.accepted += 1;
        Reduction::Independent
    }
}

/// An incrementally maintained row space over the integers, fraction-free.
///
/// Rows are kept primitive (content 1, positive leading entry). Only rank
/// queries are supported.
pub struct IntRowSpace {
    cols: usize,
    /// `(pivot column, row)` sorted by pivot column; each row is zero left
    /// of its pivot.
    entries: Vec<(usize, Vec<Integer>)>,
}

impl IntRowSpace {
    pub fn new(cols: usize) -> Self {
        IntRowSpace {
            cols,
            entries: vec![],
        }
    }

    pub fn rank(&self) -> usize {
        self.entries.len()
    }

    /// Offers a row; returns true when it enlarged the span (and was kept).
    ///
    /// # Panics
    /// Panics if the row length disagrees.
    pub fn insert(&mut self, row: &[Integer]) -> bool {
        assert_eq!(row.len(), self.cols, "row length mismatch");
        let mut res = row.to_vec();
        for (p, stored) in &self.entries {
            if res[*p].is_zero() {
                continue;
            }
            // Cross-multiply the whole row so the pivot column cancels
            // exactly, then strip the content to keep entries short. The
            // stored row is zero left of its pivot, so columns before `p`
            // are only rescaled.
            let a = stored[*p].clone();
            let b = res[*p].clone();
            for j in 0..self.cols {
                let lhs = &res[j] * &a;
                res[j] = if stored[j].is_zero() {
                    lhs
                } else {
                    lhs - &stored[j] * &b
                };
            }
            debug_assert!(res[*p].is_zero());
            strip_content(&mut res);
        }
        let Some(pivot) = res.iter().position(|e| !e.is_zero()) else {
            return false;
        };
        strip_content(&mut res);
        if res[pivot].is_negative() {
            for e in res.iter_mut() {
                *e = -std::mem::take(e);
            }
        }
        let pos = self
            .entries
            .partition_point(|(p, _)| *p < pivot);
        self.entries.insert(pos, (pivot, res));
        true
    }
}

/// Divides the row by the gcd of its entries (no-op on the zero row).
fn strip_content(row: &mut [Integer]) {
    let mut g = Integer::zero();
    for e in row.iter() {
        if !e.is_zero() {
            g = g.gcd(e);
            if g.magnitude() == &num_bigint::BigUint::from(1u32) {
                return;
            }
        }
    }
    if g.is_zero() {
        return;
    }
    for e in row.iter_mut() {
        *e = &*e / &g;
    }
}
