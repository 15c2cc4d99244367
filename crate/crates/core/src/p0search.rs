//! Search for an index set `P0` that makes the theta-coefficient matrix of
//! a lattice nonsingular.
//!
//! For a lattice of determinant `d` with dual coset representatives
//! `t_1 = 0, t_2, ..., t_d`, the row attached to a multi-index `p` collects,
//! over each nonzero coset, the sum of the monomials `prod_l B(v, e_l)^{p_l}`
//! taken over the minimal vectors of that coset. A set `P0` containing `0`
//! and `d - 1` further indices whose rows are linearly independent certifies
//! that the determinant of partial-derivative theta series does not vanish
//! identically, which is the hypothesis the relation-finding theorem needs.
//!
//! [`find_p0`] runs a greedy scan over candidates ordered by (weight,
//! lexicographic), accepting exactly those whose row enlarges the row space.
//! [`flp0_qexp_check`] is the direct fallback: it expands the determinant of
//! truncated q-series and looks for a nonzero coefficient, which also works
//! when the row criterion is inconclusive.

use crate::enumeration::{effective_c_bound, min_vectors};
use crate::exact::{IntRowSpace, Mat};
#[cfg(test)]
use crate::exact::{Reduction, RowSpace};
use crate::lattice::{CosetRep, GramLattice};
use crate::qseries::theta_partial_qexp;
use crate::taylor::{multi_indices_with_sum, MultiIndex};
#[cfg(test)]
use crate::CyclotomicElement;
use crate::{Integer, Rational};
use num_traits::{One, Signed, Zero};
use std::collections::BTreeMap;
use std::fmt;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum P0SearchError {
    /// The greedy scan ran out of candidates before reaching full rank.
    InsufficientMaxSum {
        max_sum: u32,
        achieved_rank: usize,
        needed_rank: usize,
    },
}

impl fmt::Display for P0SearchError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            P0SearchError::InsufficientMaxSum {
                max_sum,
                achieved_rank,
                needed_rank,
            } => write!(
                f,
                "candidates of weight <= {max_sum} reach rank {achieved_rank} of {needed_rank}; raise max_sum"
            ),
        }
    }
}

impl std::error::Error for P0SearchError {}

/// Precomputed per-coset data and the accepted rows of the greedy search.
pub struct P0SearchState<'a> {
    lat: &'a GramLattice,
    reps: Vec<CosetRep>,
    /// For each nonzero coset t_j (j = 2..d): the vectors G*v for v in the
    /// minimal-vector set S_j. Entries are integral because minimal vectors
    /// lie in the dual lattice.
    min_bvecs: Vec<Vec<Vec<Integer>>>,
    /// Minimal form values m_j, aligned with `min_bvecs`.
    min_values: Vec<Rational>,
    accepted: Vec<MultiIndex>,
    rows: Vec<Vec<Integer>>,
    max_sum: u32,
}

impl<'a> P0SearchState<'a> {
    pub fn new(lat: &'a GramLattice, max_sum: u32) -> Self {
        let reps = lat.dual_coset_reps();
        debug_assert!(reps[0].is_integral());
        let mut min_bvecs = Vec::with_capacity(reps.len() - 1);
        let mut min_values = Vec::with_capacity(reps.len() - 1);
        for rep in &reps[1..] {
            let (m, vectors) = min_vectors(lat, rep);
            min_bvecs.push(vectors.iter().map(|v| gram_times(lat, v)).collect());
            min_values.push(m);
        }
        P0SearchState {
            lat,
            reps,
            min_bvecs,
            min_values,
            accepted: vec![],
            rows: vec![],
            max_sum,
        }
    }

    pub fn lattice(&self) -> &GramLattice {
        self.lat
    }

    /// Dual coset representatives, the zero coset first.
    pub fn reps(&self) -> &[CosetRep] {
        &self.reps
    }

    /// Minimal form values of the nonzero cosets, in rep order.
    pub fn min_values(&self) -> &[Rational] {
        &self.min_values
    }

    pub fn max_sum(&self) -> u32 {
        self.max_sum
    }

    /// Indices accepted so far, not counting the implicit zero index.
    pub fn accepted(&self) -> &[MultiIndex] {
        &self.accepted
    }

    /// The accepted criterion rows as an exact rational matrix.
    pub fn accepted_rows(&self) -> Mat<Rational> {
        Mat::from_fn(self.rows.len().max(1), self.reps.len() - 1, |i, j| {
            if self.rows.is_empty() {
                Rational::zero()
            } else {
                Rational::from_integer(self.rows[i][j].clone())
            }
        })
    }

    /// The criterion row of `p`: entry `j - 2` sums, over the minimal
    /// vectors `v` of the j-th coset, the monomial
    /// `prod_l B(v, e_l)^{p_l}` in the lattice's own bilinear form.
    pub fn bp_row(&self, p: &MultiIndex) -> Vec<Rational> {
        self.bp_row_int(p)
            .into_iter()
            .map(Rational::from_integer)
            .collect()
    }

    fn bp_row_int(&self, p: &MultiIndex) -> Vec<Integer> {
        assert!(!p.parts().iter().all(|&x| x == 0), "criterion rows require p != 0");
        assert_eq!(p.dim(), self.lat.dim());
        self.min_bvecs
            .iter()
            .map(|set| {
                let mut acc = Integer::zero();
                for bv in set {
                    let mut term = Integer::one();
                    for (l, &e) in p.parts().iter().enumerate() {
                        if e > 0 {
                            term *= bv[l].pow(e);
                        }
                    }
                    acc += term;
                }
                acc
            })
            .collect()
    }
}

/// The vector G*v of bilinear pairings B(v, e_l); integral for dual vectors.
fn gram_times(lat: &GramLattice, v: &[Rational]) -> Vec<Integer> {
    (0..lat.dim())
        .map(|l| {
            let mut acc = Rational::zero();
            for (c, x) in v.iter().enumerate() {
                acc += x * Rational::from_integer(Integer::from(lat.gram()[[l, c]]));
            }
            debug_assert!(acc.is_integer(), "dual vectors pair integrally");
            acc.to_integer()
        })
        .collect()
}

/// Greedy search for an index set of size `d = det`: scans candidates
/// `p != 0` with `s(p) <= max_sum` in (weight, lexicographic) order and
/// accepts those whose criterion row strictly increases the rank, stopping
/// at rank `d - 1`. The zero index is always prepended.
///
/// The result is deterministic: the candidate order is total, and both the
/// minimal-vector sets and the row values depend only on the cosets, not on
/// the representatives chosen.
///
/// # Errors
/// Fails with the achieved rank when the candidates are exhausted early.
pub fn find_p0(lat: &GramLattice, max_sum: u32) -> Result<Vec<MultiIndex>, P0SearchError> {
    let mut state = P0SearchState::new(lat, max_sum);
    let dim = lat.dim();
    let needed = state.reps.len() - 1;
    let mut space = IntRowSpace::new(needed);
    let mut out = vec![MultiIndex::zero(dim)];
    if needed == 0 {
        return Ok(out);
    }
    for s in 1..=max_sum {
        for p in multi_indices_with_sum(dim, s) {
            let row = state.bp_row_int(&p);
            if space.insert(&row) {
                state.rows.push(row);
                state.accepted.push(p);
                if space.rank() == needed {
                    out.extend(state.accepted.iter().cloned());
                    return Ok(out);
                }
            }
        }
    }
    Err(P0SearchError::InsufficientMaxSum {
        max_sum,
        achieved_rank: space.rank(),
        needed_rank: needed,
    })
}

/// Outcome of the truncated determinant check. A `true` answer is a proof;
/// a `false` answer only says nothing was found below the truncation and is
/// always inconclusive.
#[derive(Clone, Debug)]
pub struct Flp0Report {
    pub nonzero: bool,
    /// Leading (exponent, coefficient) of the determinant series when found.
    pub leading: Option<(Rational, Rational)>,
    pub note: String,
}

/// A q-series with rational exponents whose coefficients are known exactly
/// for all exponents `<= prec`.
#[derive(Clone, Debug)]
struct TruncSeries {
    terms: BTreeMap<Rational, Rational>,
    prec: Rational,
}

impl TruncSeries {
    fn zero(prec: Rational) -> Self {
        TruncSeries {
            terms: BTreeMap::new(),
            prec,
        }
    }

    fn normalize(&mut self) {
        let prec = self.prec.clone();
        self.terms.retain(|e, c| *e <= prec && !c.is_zero());
    }

    /// Smallest exponent with a nonzero known coefficient.
    fn val(&self) -> Option<&Rational> {
        self.terms.keys().next()
    }

    /// Valuation lower bound used in precision propagation: the actual
    /// valuation if a term is known, else the precision horizon.
    fn val_floor(&self) -> Rational {
        self.val().cloned().unwrap_or_else(|| self.prec.clone())
    }

    fn leading(&self) -> Option<(Rational, Rational)> {
        self.terms
            .iter()
            .next()
            .map(|(e, c)| (e.clone(), c.clone()))
    }

    fn mul(a: &TruncSeries, b: &TruncSeries) -> TruncSeries {
        let prec = (&a.prec + b.val_floor()).min(&b.prec + a.val_floor());
        let mut out = TruncSeries::zero(prec);
        for (ea, ca) in &a.terms {
            for (eb, cb) in &b.terms {
                let e = ea + eb;
                if e > out.prec {
                    continue;
                }
                let entry = out.terms.entry(e).or_insert_with(Rational::zero);
                *entry += ca * cb;
            }
        }
        out.normalize();
        out
    }

    fn sub(a: &TruncSeries, b: &TruncSeries) -> TruncSeries {
        let mut out = TruncSeries {
            terms: a.terms.clone(),
            prec: a.prec.clone().min(b.prec.clone()),
        };
        for (e, c) in &b.terms {
            let entry = out.terms.entry(e.clone()).or_insert_with(Rational::zero);
            *entry -= c;
        }
        out.normalize();
        out
    }

    /// Long division `a / b`; `b` must have a known nonzero leading term.
    fn div(a: &TruncSeries, b: &TruncSeries) -> TruncSeries {
        let (vb, cb) = b.leading().expect("division by a series with unknown leading term");
        // a/b is known for exponents <= min(Pa, Pb + va - vb) - vb.
        let prec = (a.prec.clone().min(&b.prec + (a.val_floor() - &vb))) - &vb;
        let mut quo = TruncSeries::zero(prec);
        let mut rem = a.clone();
        loop {
            let lead = match rem.leading() {
                Some(l) => l,
                None => break,
            };
            let e = &lead.0 - &vb;
            if e > quo.prec {
                break;
            }
            let c = &lead.1 / &cb;
            // rem -= c q^e * b
            for (eb, coeff) in &b.terms {
                let ee = &e + eb;
                if ee > rem.prec {
                    continue;
                }
                let entry = rem.terms.entry(ee).or_insert_with(Rational::zero);
                *entry -= &c * coeff;
            }
            rem.normalize();
            quo.terms.insert(e, c);
        }
        quo.normalize();
        quo
    }
}

/// Expands the determinant of the matrix whose `(i, j)` entry is the
/// truncated series `sum_{v in t_j + Z^n} prod_l B(v,e_l)^{p_{i,l}} q^{Q(v)}`
/// and reports the first nonzero coefficient found at exponents `<= trunc`.
///
/// Column `j` only needs exponents up to `trunc - sum_{j' != j} m_{j'}`
/// (every determinant term takes one factor per column, each contributing
/// at least the coset minimum `m_{j'}`), which keeps the expansion small.
///
/// # Panics
/// Panics unless `p0` and `reps` both have length `d = det` and the first
/// representative is the zero coset.
pub fn flp0_qexp_check(
    lat: &GramLattice,
    p0: &[MultiIndex],
    reps: &[CosetRep],
    trunc: &Rational,
) -> Flp0Report {
    let d = usize::try_from(&lat.det().clone()).expect("determinant fits usize");
    assert_eq!(p0.len(), d, "index set must have determinant-many elements");
    assert_eq!(reps.len(), d, "need one representative per coset");
    assert!(reps[0].is_integral(), "first representative must be the zero coset");
    let mins: Vec<Rational> = reps.iter().map(|t| min_vectors(lat, t).0).collect();
    let total_min: Rational = mins.iter().sum();
    // Assemble the matrix column by column from the expansion oracle. The
    // oracle's truncation is exclusive while the column precision is
    // inclusive; coset exponents live in `Q(t) + (1/m)Z`, so an exclusive
    // bound `prec + delta` with `delta` below the exponent spacing keeps
    // exactly the exponents `<= prec` without enumerating past them.
    let mut cols: Vec<Vec<TruncSeries>> = Vec::with_capacity(d);
    for (j, rep) in reps.iter().enumerate() {
        let prec = trunc - (&total_min - &mins[j]);
        let rep = rep.normalized();
        let mut spacing = lat.quad_value(rep.coords()).denom().clone();
        for l in 0..lat.dim() {
            let b: Rational = (0..lat.dim())
                .map(|i| {
                    &rep.coords()[i] * Rational::from_integer(Integer::from(lat.gram()[[i, l]]))
                })
                .sum();
            spacing = num_integer::lcm(spacing, b.denom().clone());
        }
        // Also keep `delta` below `1/c` for the enumeration box constant, so
        // the extra exclusive headroom never widens the search box by a full
        // integer layer (decisive when `prec` is zero).
        let c_ceil = effective_c_bound(lat).ceil().to_integer().max(Integer::one());
        let delta = Rational::new(
            Integer::one(),
            spacing * prec.denom() * c_ceil * Integer::from(2),
        );
        let bound = &prec + delta;
        let mut col: Vec<TruncSeries> = Vec::with_capacity(d);
        for p in p0 {
            let mut s = TruncSeries::zero(prec.clone());
            if !prec.is_negative() {
                let oracle = theta_partial_qexp(lat, &rep, p, &bound);
                s.terms = oracle
                    .terms
                    .into_iter()
                    .filter(|(e, _)| e <= &prec)
                    .collect();
                s.normalize();
            }
            col.push(s);
        }
        cols.push(col);
    }
    let mut m: Vec<Vec<TruncSeries>> = (0..d)
        .map(|i| (0..d).map(|j| cols[j][i].clone()).collect())
        .collect();
    // Fraction elimination with valuation pivoting; the determinant is the
    // signed product of the pivots, with precision tracked throughout.
    let mut sign_flip = false;
    let mut det = TruncSeries {
        terms: [(Rational::zero(), Rational::one())].into_iter().collect(),
        prec: trunc.clone(),
    };
    for col in 0..d {
        let mut pivot: Option<(usize, Rational)> = None;
        for (r, row) in m.iter().enumerate().skip(col) {
            if let Some(v) = row[col].val() {
                match &pivot {
                    Some((_, best)) if best <= v => {}
                    _ => pivot = Some((r, v.clone())),
                }
            }
        }
        let (pr, _) = match pivot {
            Some(p) => p,
            None => {
                // Every remaining entry of this column is zero up to its
                // precision: the determinant cannot be resolved.
                let horizon = m
                    .iter()
                    .skip(col)
                    .map(|row| row[col].prec.clone())
                    .fold(trunc.clone(), |a, b| a.min(b));
                return Flp0Report {
                    nonzero: false,
                    leading: None,
                    note: format!(
                        "inconclusive: column {col} vanishes up to its precision (q^{horizon}); the determinant may still be nonzero beyond the truncation"
                    ),
                };
            }
        };
        if pr != col {
            m.swap(pr, col);
            sign_flip = !sign_flip;
        }
        for r in col + 1..d {
            let factor = TruncSeries::div(&m[r][col], &m[col][col]);
            for c in col..d {
                let prod = TruncSeries::mul(&factor, &m[col][c]);
                m[r][c] = TruncSeries::sub(&m[r][c], &prod);
            }
        }
        det = TruncSeries::mul(&det, &m[col][col]);
    }
    if sign_flip {
        for c in det.terms.values_mut() {
            *c = -c.clone();
        }
    }
    match det.leading() {
        Some((e, c)) if e <= *trunc => Flp0Report {
            nonzero: true,
            note: format!("nonzero coefficient {c} at exponent {e} (series exact through q^{})", det.prec),
            leading: Some((e, c)),
        },
        _ => Flp0Report {
            nonzero: false,
            leading: None,
            note: format!(
                "inconclusive: determinant vanishes up to q^{}; it may be nonzero beyond the truncation",
                det.prec.min(trunc.clone())
            ),
        },
    }
}

/// Greedy acceptance driven by caller-supplied rational rows; used to check
/// that uniform row rescalings cannot change the outcome.
#[cfg(test)]
fn greedy_accepted_with(
    dim: usize,
    needed: usize,
    max_sum: u32,
    mut row_fn: impl FnMut(&MultiIndex) -> Vec<Rational>,
) -> Vec<MultiIndex> {
    let mut space = RowSpace::new(1, needed);
    let mut accepted = vec![];
    for s in 1..=max_sum {
        for p in multi_indices_with_sum(dim, s) {
            let row: Vec<CyclotomicElement> = row_fn(&p)
                .into_iter()
                .map(|x| CyclotomicElement::from_rational(1, x))
                .collect();
            if matches!(space.insert(&row), Reduction::Independent) {
                accepted.push(p);
                if space.rank() == needed {
                    return accepted;
                }
            }
        }
    }
    accepted
}
