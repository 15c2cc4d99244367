//! Multi-index combinatorics and the modified Taylor coefficient
//! polynomials `P_{k,p,M}`.
//!
//! A multi-index `p` carries the partial order `q <= p` componentwise
//! together with the parity condition `s(q) = s(p) mod 2`; downward
//! closures under this order drive the index bookkeeping of the search
//! modules. The polynomial `P_{k,p,M}` in the variables `X_0, ..., X_n`
//! packages the combinatorial factors of the differential operators that
//! extract modular forms from Jacobi forms. Two independent evaluation
//! routes are kept side by side: [`pkpm`] uses the fast single-sum formula
//! over `q` below `p`, while [`pkpm_definition`] expands the defining
//! triple sum over matrix pairs and exists as a cross-check oracle.
//!
//! All transcendental prefactors shared by every coefficient (powers of
//! `pi*i` and factorial constants) are dropped throughout the crate, so
//! the values stay in cyclotomic fields; linear relations are unaffected.

use crate::exact::Mat;
use crate::{Integer, Rational};
use num_traits::{One, Zero};
use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TaylorError {
    /// Weights k in {0, -1, -2, ...} are excluded.
    InvalidWeight { twice: i64 },
    /// A Gamma-ratio denominator contains a zero factor.
    GammaPole { twice_k: i64, j: i64 },
}

impl fmt::Display for TaylorError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TaylorError::InvalidWeight { twice } => {
                write!(f, "weight {}/2 is a nonpositive integer", twice)
            }
            TaylorError::GammaPole { twice_k, j } => {
                write!(f, "gamma ratio denominator has zero factor k + {j} at k = {}/2", twice_k)
            }
        }
    }
}

impl std::error::Error for TaylorError {}

/// A half integer, stored as twice its value. Weights `0, -1, -2, ...`
/// are rejected at construction.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct HalfInteger {
    twice: i64,
}

impl HalfInteger {
    pub fn new(twice: i64) -> Result<Self, TaylorError> {
        if twice <= 0 && twice % 2 == 0 {
            return Err(TaylorError::InvalidWeight { twice });
        }
        Ok(HalfInteger { twice })
    }

    pub fn twice(self) -> i64 {
        self.twice
    }

    pub fn as_rational(self) -> Rational {
        Rational::new(Integer::from(self.twice), Integer::from(2))
    }

    /// The rational value `k + j`.
    pub fn plus(self, j: i64) -> Rational {
        Rational::new(Integer::from(self.twice + 2 * j), Integer::from(2))
    }
}

impl fmt::Display for HalfInteger {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.twice % 2 == 0 {
            write!(f, "{}", self.twice / 2)
        } else {
            write!(f, "{}/2", self.twice)
        }
    }
}

/// A multi-index in `Z_{>=0}^n` with its component sum cached.
///
/// The order [`MultiIndex::cmp`] sorts by `(s, lexicographic)`; the
/// partial order [`MultiIndex::preceq`] is componentwise `<=` combined
/// with equal parity of the component sums.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct MultiIndex {
    parts: Vec<u32>,
    sum: u32,
}

impl MultiIndex {
    pub fn new(parts: Vec<u32>) -> Self {
        let sum = parts.iter().sum();
        MultiIndex { parts, sum }
    }

    pub fn zero(dim: usize) -> Self {
        MultiIndex {
            parts: vec![0; dim],
            sum: 0,
        }
    }

    pub fn dim(&self) -> usize {
        self.parts.len()
    }

    pub fn s(&self) -> u32 {
        self.sum
    }

    pub fn parts(&self) -> &[u32] {
        &self.parts
    }

    /// Whether `self` lies below `other`: componentwise `<=` and
    /// `s(self) = s(other) mod 2`.
    pub fn preceq(&self, other: &MultiIndex) -> bool {
        self.parts.len() == other.parts.len()
            && self.sum % 2 == other.sum % 2
            && self.parts.iter().zip(&other.parts).all(|(a, b)| a <= b)
    }
}

impl Ord for MultiIndex {
    fn cmp(&self, other: &Self) -> Ordering {
        self.sum
            .cmp(&other.sum)
            .then_with(|| self.parts.cmp(&other.parts))
    }
}

impl PartialOrd for MultiIndex {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, p) in self.parts.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{p}")?;
        }
        write!(f, ")")
    }
}

/// All multi-indices of the given dimension with component sum `s`, in
/// lexicographic order.
pub fn multi_indices_with_sum(dim: usize, s: u32) -> Vec<MultiIndex> {
    let mut out = vec![];
    let mut cur = vec![0u32; dim];
    fn rec(cur: &mut Vec<u32>, pos: usize, left: u32, out: &mut Vec<MultiIndex>) {
        if pos + 1 == cur.len() {
            cur[pos] = left;
            out.push(MultiIndex::new(cur.clone()));
            return;
        }
        for v in 0..=left {
            cur[pos] = v;
            rec(cur, pos + 1, left - v, out);
        }
    }
    if dim == 0 {
        if s == 0 {
            out.push(MultiIndex::new(vec![]));
        }
        return out;
    }
    rec(&mut cur, 0, s, &mut out);
    out
}

/// The downward closure of a set of multi-indices under [`preceq`],
/// sorted by `(s, lexicographic)`.
///
/// [`preceq`]: MultiIndex::preceq
pub fn hat_closure(set: &[MultiIndex]) -> Vec<MultiIndex> {
    let mut closed: std::collections::BTreeSet<MultiIndex> = Default::default();
    for p in set {
        let dim = p.dim();
        let mut q = vec![0u32; dim];
        loop {
            let cand = MultiIndex::new(q.clone());
            if cand.s() % 2 == p.s() % 2 {
                closed.insert(cand);
            }
            let mut i = dim;
            loop {
                if i == 0 {
                    break;
                }
                i -= 1;
                q[i] += 1;
                if q[i] <= p.parts()[i] {
                    break;
                }
                q[i] = 0;
            }
            if q.iter().all(|&x| x == 0) {
                break;
            }
        }
        if dim == 0 {
            closed.insert(p.clone());
        }
    }
    closed.into_iter().collect()
}

/// The exact ratio `Gamma(k+a) / Gamma(k+b)` as a telescoping product:
/// `prod_{j=b}^{a-1} (k+j)` for `a >= b`, and the reciprocal product for
/// `a < b`. The empty product is 1.
///
/// # Errors
/// A zero factor in a required denominator (`a < b` and `k + j = 0` for
/// some `j` in `[a, b)`) is a domain error.
pub fn gamma_ratio(k: HalfInteger, a: i64, b: i64) -> Result<Rational, TaylorError> {
    let mut acc = Rational::one();
    if a >= b {
        for j in b..a {
            acc *= k.plus(j);
        }
        Ok(acc)
    } else {
        for j in a..b {
            let f = k.plus(j);
            if f.is_zero() {
                return Err(TaylorError::GammaPole {
                    twice_k: k.twice(),
                    j,
                });
            }
            acc *= f;
        }
        Ok(Rational::one() / acc)
    }
}

/// A polynomial in `X_0, X_1, ..., X_n` with rational coefficients,
/// homogeneous for the weighting `deg X_0 = 2`, `deg X_i = 1`: every
/// monomial satisfies `2 e_0 + e_1 + ... + e_n = s(p)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PPolynomial {
    nvars: usize,
    weight: u32,
    terms: BTreeMap<Vec<u32>, Rational>,
}

impl PPolynomial {
    fn from_terms(nvars: usize, weight: u32, mut terms: BTreeMap<Vec<u32>, Rational>) -> Self {
        terms.retain(|_, c| !c.is_zero());
        debug_assert!(terms.keys().all(|e| {
            e.len() == nvars && 2 * e[0] + e[1..].iter().sum::<u32>() == weight
        }));
        PPolynomial {
            nvars,
            weight,
            terms,
        }
    }

    /// Number of variables, counting `X_0`.
    pub fn nvars(&self) -> usize {
        self.nvars
    }

    /// The common weighted degree `s(p)` of all monomials.
    pub fn weight(&self) -> u32 {
        self.weight
    }

    /// Exponent-to-coefficient map; exponent vectors list `X_0` first.
    pub fn terms(&self) -> &BTreeMap<Vec<u32>, Rational> {
        &self.terms
    }

    pub fn coefficient(&self, expo: &[u32]) -> Rational {
        self.terms.get(expo).cloned().unwrap_or_default()
    }

    /// Evaluates at the point `xs = (X_0, ..., X_n)`.
    pub fn evaluate(&self, xs: &[Rational]) -> Rational {
        assert_eq!(xs.len(), self.nvars, "evaluation point dimension mismatch");
        let mut max_e = vec![0u32; self.nvars];
        for e in self.terms.keys() {
            for i in 0..self.nvars {
                max_e[i] = max_e[i].max(e[i]);
            }
        }
        let pow: Vec<Vec<Rational>> = (0..self.nvars)
            .map(|i| {
                let mut col = Vec::with_capacity(max_e[i] as usize + 1);
                col.push(Rational::one());
                for e in 1..=max_e[i] as usize {
                    let next = &col[e - 1] * &xs[i];
                    col.push(next);
                }
                col
            })
            .collect();
        let mut acc = Rational::zero();
        for (e, c) in &self.terms {
            let mut term = c.clone();
            for i in 0..self.nvars {
                if e[i] > 0 {
                    term *= &pow[i][e[i] as usize];
                }
            }
            acc += term;
        }
        acc
    }
}

fn factorial(n: u32) -> Integer {
    let mut acc = Integer::one();
    for i in 2..=u64::from(n) {
        acc *= Integer::from(i);
    }
    acc
}

fn check_symmetric(m: &Mat<Rational>) {
    assert_eq!(m.rows(), m.cols(), "coefficient matrix must be square");
    for i in 0..m.rows() {
        for j in 0..i {
            assert_eq!(m[[i, j]], m[[j, i]], "coefficient matrix must be symmetric");
        }
    }
}

/// Sparse polynomials over `X_1..X_n` used internally while expanding.
type XPoly = BTreeMap<Vec<u32>, Rational>;

fn xp_one(n: usize) -> XPoly {
    let mut m = XPoly::new();
    m.insert(vec![0; n], Rational::one());
    m
}

fn xp_mul(a: &XPoly, b: &XPoly, n: usize) -> XPoly {
    let mut out = XPoly::new();
    for (ea, ca) in a {
        for (eb, cb) in b {
            let e: Vec<u32> = (0..n).map(|i| ea[i] + eb[i]).collect();
            let c = ca * cb;
            match out.entry(e) {
                std::collections::btree_map::Entry::Vacant(v) => {
                    v.insert(c);
                }
                std::collections::btree_map::Entry::Occupied(mut o) => {
                    *o.get_mut() += c;
                    if o.get().is_zero() {
                        o.remove();
                    }
                }
            }
        }
    }
    out
}

/// `P_{k,p,M}` by the fast formula: a single sum over multi-indices
/// `q` below `p`, with the inner matrix sum read off as a coefficient of
/// a power of the quadratic form `sum_{i,j} m_ij T_i T_j`.
pub fn pkpm(k: HalfInteger, p: &MultiIndex, m: &Mat<Rational>) -> PPolynomial {
    check_symmetric(m);
    let n = p.dim();
    assert_eq!(m.rows(), n, "matrix size must match the multi-index");
    let s = p.s();
    let lambda_p = (i64::from(s) - 1).div_euclid(2);
    // Powers of the quadratic form, as polynomials in T_1..T_n.
    let mut form = XPoly::new();
    for i in 0..n {
        for j in 0..n {
            if m[[i, j]].is_zero() {
                continue;
            }
            let mut e = vec![0u32; n];
            e[i] += 1;
            e[j] += 1;
            let entry = form.entry(e).or_insert_with(Rational::zero);
            *entry += &m[[i, j]];
        }
    }
    let hmax = (s / 2) as usize;
    let mut formpow: Vec<XPoly> = Vec::with_capacity(hmax + 1);
    formpow.push(xp_one(n));
    for h in 1..=hmax {
        let next = xp_mul(&formpow[h - 1], &form, n);
        formpow.push(next);
    }
    // Columns of M as linear forms (X . M)_j = sum_i X_i m_ij.
    let linear: Vec<XPoly> = (0..n)
        .map(|j| {
            let mut l = XPoly::new();
            for i in 0..n {
                if !m[[i, j]].is_zero() {
                    let mut e = vec![0u32; n];
                    e[i] = 1;
                    l.insert(e, m[[i, j]].clone());
                }
            }
            l
        })
        .collect();
    let two_pow_s = Rational::from_integer(Integer::from(2).pow(s));
    let mut terms: BTreeMap<Vec<u32>, Rational> = BTreeMap::new();
    // Iterate q with 0 <= q <= p componentwise; parity is filtered below.
    let mut q = vec![0u32; n];
    loop {
        let sq: u32 = q.iter().sum();
        if sq % 2 == s % 2 {
            let h = ((s - sq) / 2) as usize;
            let diff: Vec<u32> = (0..n).map(|i| p.parts()[i] - q[i]).collect();
            if let Some(c_raw) = formpow[h].get(&diff) {
                let c = c_raw / Rational::from_integer(factorial(h as u32));
                let q_fact: Integer = q.iter().map(|&x| factorial(x)).product();
                let a = i64::from(s + sq) / 2 - 1;
                let ratio = gamma_ratio(k, a, lambda_p)
                    .expect("valid weights never hit gamma poles");
                let mut scalar = &two_pow_s * &c * ratio
                    / Rational::from_integer(q_fact);
                let half = Rational::new(Integer::from(-1), Integer::from(2));
                for _ in 0..h {
                    scalar *= &half;
                }
                if !scalar.is_zero() {
                    // Expand prod_j (X . M)_j^{q_j} and attach X_0^h.
                    let mut body = xp_one(n);
                    for (j, &qj) in q.iter().enumerate() {
                        for _ in 0..qj {
                            body = xp_mul(&body, &linear[j], n);
                        }
                    }
                    for (e, coeff) in body {
                        let mut full = Vec::with_capacity(n + 1);
                        full.push(h as u32);
                        full.extend_from_slice(&e);
                        let entry = terms.entry(full).or_insert_with(Rational::zero);
                        *entry += coeff * &scalar;
                    }
                }
            }
        }
        // Odometer over the box 0..=p.
        let mut i = n;
        loop {
            if i == 0 {
                return PPolynomial::from_terms(n + 1, s, terms);
            }
            i -= 1;
            q[i] += 1;
            if q[i] <= p.parts()[i] {
                break;
            }
            q[i] = 0;
        }
    }
}

/// All n-by-n nonnegative integer matrices with the given total entry sum.
fn matrices_with_total(n: usize, total: u32) -> Vec<Mat<u32>> {
    let cells = n * n;
    let mut out = vec![];
    let mut cur = vec![0u32; cells];
    fn rec(cur: &mut Vec<u32>, pos: usize, left: u32, n: usize, out: &mut Vec<Mat<u32>>) {
        if pos + 1 == cur.len() {
            cur[pos] = left;
            let m = Mat::from_fn(n, n, |i, j| cur[i * n + j]);
            out.push(m);
            return;
        }
        for v in 0..=left {
            cur[pos] = v;
            rec(cur, pos + 1, left - v, n, out);
        }
    }
    if cells == 0 {
        return out;
    }
    rec(&mut cur, 0, total, n, &mut out);
    out
}

/// All n-by-n nonnegative integer matrices with prescribed row and column
/// sums (contingency tables), built row by row.
fn tables_with_margins(row_sums: &[u32], col_sums: &[u32]) -> Vec<Mat<u32>> {
    let n = row_sums.len();
    let mut out = vec![];
    let mut rows: Vec<Vec<u32>> = vec![];
    fn rec(
        rows: &mut Vec<Vec<u32>>,
        row_sums: &[u32],
        col_left: &mut Vec<u32>,
        out: &mut Vec<Mat<u32>>,
    ) {
        let i = rows.len();
        let n = row_sums.len();
        if i == n {
            if col_left.iter().all(|&c| c == 0) {
                let snapshot = rows.clone();
                out.push(Mat::from_fn(n, n, |r, c| snapshot[r][c]));
            }
            return;
        }
        // Compositions of row_sums[i] into n parts bounded by col_left.
        let mut row = vec![0u32; n];
        fn comp(
            row: &mut Vec<u32>,
            pos: usize,
            left: u32,
            col_left: &mut Vec<u32>,
            rows: &mut Vec<Vec<u32>>,
            row_sums: &[u32],
            out: &mut Vec<Mat<u32>>,
        ) {
            let n = row.len();
            if pos + 1 == n {
                if left <= col_left[pos] {
                    row[pos] = left;
                    col_left[pos] -= left;
                    rows.push(row.clone());
                    rec(rows, row_sums, col_left, out);
                    rows.pop();
                    col_left[pos] += left;
                }
                return;
            }
            let cap = left.min(col_left[pos]);
            for v in 0..=cap {
                row[pos] = v;
                col_left[pos] -= v;
                comp(row, pos + 1, left - v, col_left, rows, row_sums, out);
                col_left[pos] += v;
            }
        }
        comp(&mut row, 0, row_sums[i], col_left, rows, row_sums, out);
    }
    if n == 0 {
        return out;
    }
    let mut col_left = col_sums.to_vec();
    rec(&mut rows, row_sums, &mut col_left, &mut out);
    out
}

/// `P_{k,p,M}` by the defining triple sum over exponent tuples and matrix
/// pairs. Exponentially slower than [`pkpm`]; kept as an independent
/// oracle for cross-checking.
pub fn pkpm_definition(k: HalfInteger, p: &MultiIndex, m: &Mat<Rational>) -> PPolynomial {
    check_symmetric(m);
    let n = p.dim();
    assert_eq!(m.rows(), n, "matrix size must match the multi-index");
    let s = p.s();
    let lambda_p = (i64::from(s) - 1).div_euclid(2);
    let mut terms: BTreeMap<Vec<u32>, Rational> = BTreeMap::new();
    for mu0 in 0..=s / 2 {
        let rest = s - 2 * mu0;
        for mu in multi_indices_with_sum(n, rest) {
            let sign = if mu0 % 2 == 0 {
                Rational::one()
            } else {
                -Rational::one()
            };
            let two_pow = Rational::from_integer(Integer::from(2).pow(s - mu0));
            let ratio = gamma_ratio(k, i64::from(s) - 1 - i64::from(mu0), lambda_p)
                .expect("valid weights never hit gamma poles");
            let outer = sign * two_pow * ratio;
            let mut inner = Rational::zero();
            for lam in matrices_with_total(n, mu0) {
                // Column budget for Omega: p_j minus row and column sums
                // of Lambda at j.
                let mut ok = true;
                let mut col_sums = vec![0u32; n];
                for j in 0..n {
                    let pi: u32 = (0..n).map(|i| lam[[j, i]] + lam[[i, j]]).sum();
                    if pi > p.parts()[j] {
                        ok = false;
                        break;
                    }
                    col_sums[j] = p.parts()[j] - pi;
                }
                if !ok {
                    continue;
                }
                for om in tables_with_margins(mu.parts(), &col_sums) {
                    let mut val = Rational::one();
                    for i in 0..n {
                        for j in 0..n {
                            let e = lam[[i, j]] + om[[i, j]];
                            for _ in 0..e {
                                val *= &m[[i, j]];
                            }
                            val /= Rational::from_integer(
                                factorial(lam[[i, j]]) * factorial(om[[i, j]]),
                            );
                        }
                    }
                    inner += val;
                }
            }
            if !inner.is_zero() {
                let mut e = Vec::with_capacity(n + 1);
                e.push(mu0);
                e.extend_from_slice(mu.parts());
                let entry = terms.entry(e).or_insert_with(Rational::zero);
                *entry += outer * inner;
            }
        }
    }
    PPolynomial::from_terms(n + 1, s, terms)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rat(n: i64, d: i64) -> Rational {
        Rational::new(Integer::from(n), Integer::from(d))
    }

    fn mat_a2() -> Mat<Rational> {
        Mat::from_rows(vec![
            vec![rat(2, 1), rat(1, 1)],
            vec![rat(1, 1), rat(2, 1)],
        ])
    }

    fn k(twice: i64) -> HalfInteger {
        HalfInteger::new(twice).unwrap()
    }

    #[test]
    fn weight_construction() {
        assert!(HalfInteger::new(2).is_ok());
        assert!(HalfInteger::new(1).is_ok());
        assert!(HalfInteger::new(-1).is_ok());
        assert_eq!(
            HalfInteger::new(0).unwrap_err(),
            TaylorError::InvalidWeight { twice: 0 }
        );
        assert!(HalfInteger::new(-4).is_err());
        assert_eq!(k(5).to_string(), "5/2");
        assert_eq!(k(8).to_string(), "4");
    }

    #[test]
    fn gamma_ratio_pinned() {
        assert_eq!(gamma_ratio(k(1), 3, 3).unwrap(), rat(1, 1));
        // Gamma(k+2)/Gamma(k) at k = 1/2.
        assert_eq!(gamma_ratio(k(1), 2, 0).unwrap(), rat(3, 4));
        // Gamma(k+3)/Gamma(k+1) at k = 4.
        assert_eq!(gamma_ratio(k(8), 3, 1).unwrap(), rat(30, 1));
        // Reciprocal direction.
        assert_eq!(gamma_ratio(k(1), 0, 2).unwrap(), rat(4, 3));
        // A pole in a required denominator is an error.
        assert_eq!(
            gamma_ratio(k(2), -2, 0).unwrap_err(),
            TaylorError::GammaPole { twice_k: 2, j: -1 }
        );
    }

    #[test]
    fn preceq_and_order() {
        let p = MultiIndex::new(vec![0, 2]);
        assert!(MultiIndex::new(vec![0, 0]).preceq(&p));
        assert!(MultiIndex::new(vec![0, 2]).preceq(&p));
        // Componentwise below but wrong parity.
        assert!(!MultiIndex::new(vec![0, 1]).preceq(&p));
        assert!(!MultiIndex::new(vec![1, 2]).preceq(&p));
        // (s, lex) sorting.
        let mut v = vec![
            MultiIndex::new(vec![2, 0]),
            MultiIndex::new(vec![0, 1]),
            MultiIndex::new(vec![0, 2]),
            MultiIndex::new(vec![1, 0]),
        ];
        v.sort();
        assert_eq!(
            v,
            vec![
                MultiIndex::new(vec![0, 1]),
                MultiIndex::new(vec![1, 0]),
                MultiIndex::new(vec![0, 2]),
                MultiIndex::new(vec![2, 0]),
            ]
        );
    }

    #[test]
    fn hat_closure_pinned() {
        let got = hat_closure(&[MultiIndex::new(vec![0, 2])]);
        assert_eq!(
            got,
            vec![MultiIndex::new(vec![0, 0]), MultiIndex::new(vec![0, 2])]
        );
    }

    #[test]
    fn p_zero_is_one() {
        for n in 1..=3 {
            let m = Mat::from_fn(n, n, |i, j| {
                if i == j {
                    rat(2, 1)
                } else {
                    rat(1, 1)
                }
            });
            let p = MultiIndex::zero(n);
            let fast = pkpm(k(1), &p, &m);
            let slow = pkpm_definition(k(1), &p, &m);
            let one = vec![0u32; n + 1];
            assert_eq!(fast.coefficient(&one), rat(1, 1));
            assert_eq!(fast, slow);
            assert_eq!(fast.terms().len(), 1);
        }
    }

    #[test]
    fn printed_cubic_example() {
        // Weight-one instance over the hexagonal Gram matrix.
        let p = MultiIndex::new(vec![2, 1]);
        let got = pkpm(k(2), &p, &mat_a2());
        let mut want = BTreeMap::new();
        want.insert(vec![0u32, 3, 0], rat(32, 1));
        want.insert(vec![0u32, 2, 1], rat(96, 1));
        want.insert(vec![0u32, 1, 2], rat(72, 1));
        want.insert(vec![0u32, 0, 3], rat(16, 1));
        want.insert(vec![1u32, 1, 0], rat(-24, 1));
        want.insert(vec![1u32, 0, 1], rat(-24, 1));
        assert_eq!(got.terms(), &want);
        assert_eq!(pkpm_definition(k(2), &p, &mat_a2()), got);
    }

    #[test]
    fn printed_half_integral_example() {
        let p = MultiIndex::new(vec![2, 0]);
        let got = pkpm(k(1), &p, &mat_a2());
        let mut want = BTreeMap::new();
        want.insert(vec![1u32, 0, 0], rat(-4, 1));
        want.insert(vec![0u32, 2, 0], rat(4, 1));
        want.insert(vec![0u32, 1, 1], rat(4, 1));
        want.insert(vec![0u32, 0, 2], rat(1, 1));
        assert_eq!(got.terms(), &want);
        assert_eq!(pkpm_definition(k(1), &p, &mat_a2()), got);
    }

    #[test]
    fn last_coordinate_closed_forms() {
        for n in 2..=3usize {
            let m = Mat::from_fn(n, n, |i, j| rat((i + j) as i64 % 3 + 1, 1));
            for kk in [k(1), k(2), k(5)] {
                // p = (0,...,0,1): twice the last column contracted with X.
                let mut parts = vec![0u32; n];
                parts[n - 1] = 1;
                let p1 = pkpm(kk, &MultiIndex::new(parts.clone()), &m);
                for i in 0..n {
                    let mut e = vec![0u32; n + 1];
                    e[i + 1] = 1;
                    assert_eq!(p1.coefficient(&e), rat(2, 1) * &m[[i, n - 1]]);
                }
                assert_eq!(p1, pkpm_definition(kk, &MultiIndex::new(parts.clone()), &m));
                // p = (0,...,0,2): -2 m_nn X_0 + 2k (sum_i m_in X_i)^2.
                parts[n - 1] = 2;
                let p2 = pkpm(kk, &MultiIndex::new(parts.clone()), &m);
                let mut x0 = vec![0u32; n + 1];
                x0[0] = 1;
                assert_eq!(
                    p2.coefficient(&x0),
                    rat(-2, 1) * &m[[n - 1, n - 1]]
                );
                let two_k = kk.as_rational() * rat(2, 1);
                for i in 0..n {
                    let mut e = vec![0u32; n + 1];
                    e[i + 1] = 2;
                    assert_eq!(
                        p2.coefficient(&e),
                        &two_k * &m[[i, n - 1]] * &m[[i, n - 1]]
                    );
                }
                assert_eq!(p2, pkpm_definition(kk, &MultiIndex::new(parts), &m));
            }
        }
    }

    #[test]
    fn permutation_symmetry() {
        // Swapping components of p together with rows/columns of M and
        // the variables X_1..X_n leaves the polynomial unchanged.
        let m = Mat::from_rows(vec![
            vec![rat(2, 1), rat(1, 1), rat(0, 1)],
            vec![rat(1, 1), rat(4, 1), rat(-1, 1)],
            vec![rat(0, 1), rat(-1, 1), rat(6, 1)],
        ]);
        let perm = [2usize, 0, 1];
        let mp = Mat::from_fn(3, 3, |i, j| m[[perm[i], perm[j]]].clone());
        let p = MultiIndex::new(vec![2, 1, 0]);
        let pp = MultiIndex::new(vec![p.parts()[perm[0]], p.parts()[perm[1]], p.parts()[perm[2]]]);
        let lhs = pkpm(k(3), &p, &m);
        let rhs = pkpm(k(3), &pp, &mp);
        for (e, c) in lhs.terms() {
            let mut pe = vec![e[0]];
            for i in 0..3 {
                pe.push(e[1 + perm[i]]);
            }
            assert_eq!(&rhs.coefficient(&pe), c, "exponent {e:?}");
        }
        assert_eq!(lhs.terms().len(), rhs.terms().len());
    }

    #[test]
    fn evaluation_matches_expansion() {
        let p = MultiIndex::new(vec![2, 1]);
        let poly = pkpm(k(2), &p, &mat_a2());
        let x = [rat(3, 1), rat(1, 2), rat(-2, 3)];
        let direct: Rational = poly
            .terms()
            .iter()
            .map(|(e, c)| {
                let mut t = c.clone();
                for i in 0..3 {
                    for _ in 0..e[i] {
                        t *= &x[i];
                    }
                }
                t
            })
            .sum();
        assert_eq!(poly.evaluate(&x), direct);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn fast_formula_matches_definition(
            n in 2usize..=3,
            parts in proptest::collection::vec(0u32..=2, 3),
            twice_k in 1i64..=6,
            seed in 0u64..1000,
        ) {
            let mut parts = parts[..n].to_vec();
            while parts.iter().sum::<u32>() > 5 {
                let i = parts.iter().position(|&x| x > 0).unwrap();
                parts[i] -= 1;
            }
            let p = MultiIndex::new(parts);
            let m = Mat::from_fn(n, n, |i, j| {
                let v = ((seed >> ((i + j) % 5)) % 5) as i64 - 2;
                rat(v, 1 + ((seed >> (i * j % 7)) % 2) as i64)
            });
            let kk = HalfInteger::new(twice_k).unwrap();
            prop_assert_eq!(pkpm(kk, &p, &m), pkpm_definition(kk, &p, &m));
        }

        #[test]
        fn gamma_ratio_multiplicative(
            twice_k in (1i64..=9).prop_map(|t| 2 * t - 1),
            a in -3i64..=5,
            b in -3i64..=5,
            c in -3i64..=5,
        ) {
            // Half-odd k avoids poles entirely.
            let mut v = [a, b, c];
            v.sort();
            let kk = HalfInteger::new(twice_k).unwrap();
            let ab = gamma_ratio(kk, v[2], v[1]).unwrap();
            let bc = gamma_ratio(kk, v[1], v[0]).unwrap();
            let ac = gamma_ratio(kk, v[2], v[0]).unwrap();
            prop_assert_eq!(ab * bc, ac);
        }

        #[test]
        fn hat_closure_idempotent_and_monotone(
            raw in proptest::collection::vec(proptest::collection::vec(0u32..=3, 2), 1..4),
        ) {
            let set: Vec<MultiIndex> = raw.into_iter().map(MultiIndex::new).collect();
            let once = hat_closure(&set);
            for p in &set {
                prop_assert!(once.contains(p));
            }
            let twice = hat_closure(&once);
            prop_assert_eq!(&twice, &once);
            for w in once.windows(2) {
                prop_assert!(w[0] < w[1], "sorted and duplicate-free");
            }
        }

        #[test]
        fn homogeneity(
            parts in proptest::collection::vec(0u32..=2, 2),
            twice_k in 1i64..=5,
        ) {
            let p = MultiIndex::new(parts);
            let poly = pkpm(HalfInteger::new(twice_k).unwrap(), &p, &mat_a2());
            for e in poly.terms().keys() {
                prop_assert_eq!(2 * e[0] + e[1] + e[2], p.s());
            }
        }
    }
}
