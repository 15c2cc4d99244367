//! Bounded enumeration of lattice vectors in cosets, minimal vectors of
//! cosets, and ordered tuples with prescribed quadratic-form sums.
//!
//! The kernel enumerates the box `sum_i (v_i + alpha_i)^2 <= c * bound`
//! (where `c` certifies `|x|^2 <= c * Q(x)` for the positive definite form)
//! by depth-first recursion over the coordinates, trying integers in the
//! order `0, 1, -1, 2, -2, ...`, and filters the box output by the exact
//! inequality `Q(alpha + v) <= bound`. All comparisons are exact: offsets
//! are scaled by their common denominator so every intermediate quantity is
//! an integer.

use crate::lattice::{CosetRep, GramLattice};
use crate::{Integer, Rational};
use num_traits::{Signed, Zero};
use std::fmt;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum EnumerationError {
    /// Tuple streams require their candidate list sorted by increasing Q.
    UnsortedCandidates { position: usize },
}

impl fmt::Display for EnumerationError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EnumerationError::UnsortedCandidates { position } => {
                write!(f, "candidate list is not sorted by Q at index {position}")
            }
        }
    }
}

impl std::error::Error for EnumerationError {}

/// A coset vector produced by enumeration: the integral part `v` together
/// with the exact value `q = Q(alpha + v)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CosetVector {
    pub v: Vec<i64>,
    pub q: Rational,
}

/// The certified box constant `c = 2 trace(G^{-1})`.
///
/// For positive definite `G` every eigenvalue of `G^{-1}` is positive, so
/// `lambda_max(G^{-1}) <= trace(G^{-1})` and hence
/// `|x|^2 <= 2 trace(G^{-1}) Q(x)` for all real `x`. Tighter constants
/// shrink the search box but any valid `c` yields identical output.
pub fn safe_c_bound(lat: &GramLattice) -> Rational {
    let mut tr = Rational::zero();
    for i in 0..lat.dim() {
        tr += &lat.gram_inverse()[[i, i]];
    }
    tr * Rational::from_integer(Integer::from(2))
}

/// The box constant actually used for enumeration: the lattice's certified
/// override when one is installed, otherwise [`safe_c_bound`].
pub fn effective_c_bound(lat: &GramLattice) -> Rational {
    lat.enumeration_constant()
        .cloned()
        .unwrap_or_else(|| safe_c_bound(lat))
}

/// A bounded coset enumeration query: all `v` in `Z^n` with
/// `Q(alpha + v) <= bound`.
pub struct BoundedCosetQuery<'a> {
    lattice: &'a GramLattice,
    offset: CosetRep,
    bound: Rational,
    c: Rational,
}

impl<'a> BoundedCosetQuery<'a> {
    /// Builds a query with the certified constant from [`effective_c_bound`].
    ///
    /// # Panics
    /// Panics if the offset has the wrong dimension or coordinates outside
    /// `[0, 1)`; normalize with [`CosetRep::normalized`] first.
    pub fn new(lattice: &'a GramLattice, offset: &CosetRep, bound: Rational) -> Self {
        Self::with_c(lattice, offset, bound, effective_c_bound(lattice))
    }

    /// Builds a query with a caller-supplied box constant. The caller
    /// asserts that `|x|^2 <= c * Q(x)` holds; a constant that is too small
    /// silently loses vectors, which is why the default path goes through
    /// the certified bound.
    pub fn with_c(
        lattice: &'a GramLattice,
        offset: &CosetRep,
        bound: Rational,
        c: Rational,
    ) -> Self {
        assert_eq!(offset.dim(), lattice.dim(), "offset dimension mismatch");
        let one = Rational::from_integer(Integer::from(1));
        assert!(
            offset
                .coords()
                .iter()
                .all(|x| !x.is_negative() && *x < one),
            "offset coordinates must lie in [0, 1)"
        );
        assert!(c.is_positive(), "box constant must be positive");
        BoundedCosetQuery {
            lattice,
            offset: offset.clone(),
            bound,
            c,
        }
    }

    pub fn bound(&self) -> &Rational {
        &self.bound
    }

    pub fn c(&self) -> &Rational {
        &self.c
    }

    /// Starts a fresh deterministic stream over the query's solutions; the
    /// stream can be recreated at will and always yields the same sequence.
    pub fn vectors(&self) -> VectorStream<'a> {
        VectorStream::start(
            self.lattice,
            &self.offset,
            &self.bound,
            &self.c,
        )
    }
}

/// All `v` with `Q(alpha + v) <= bound` for the query, in the normative
/// depth-first order.
pub fn vectors_in_coset_bounded<'a>(query: &BoundedCosetQuery<'a>) -> VectorStream<'a> {
    query.vectors()
}

struct Level {
    /// Position in the trial sequence 0, 1, -1, 2, -2, ...
    t: u64,
    /// Set once a nonnegative trial overflowed the budget; only negative
    /// trials can still fit afterwards.
    neg_only: bool,
    /// Scaled square sum of the coordinates chosen before this level.
    prefix: i128,
}

/// Deterministic stream of coset vectors within a bound; see
/// [`BoundedCosetQuery`].
pub struct VectorStream<'a> {
    dim: usize,
    scale: i64,
    off: Vec<i64>,
    gram: &'a crate::exact::Mat<i64>,
    /// Box test: accept prefix `s` iff `s * box_den <= box_num`.
    box_num: i128,
    box_den: i128,
    /// Exact test: accept iff `(X G X^T) * q_den <= q_num` for the scaled
    /// vector `X = scale * (alpha + v)`.
    q_num: i128,
    q_den: i128,
    levels: Vec<Level>,
    choices: Vec<i64>,
    depth: usize,
    exhausted: bool,
}

impl<'a> VectorStream<'a> {
    fn start(
        lattice: &'a GramLattice,
        offset: &CosetRep,
        bound: &Rational,
        c: &Rational,
    ) -> Self {
        let dim = lattice.dim();
        let mut scale = Integer::from(1);
        for x in offset.coords() {
            scale = num_integer::lcm(scale, x.denom().clone());
        }
        let scale_i = i64::try_from(&scale).expect("offset denominator fits i64");
        let off: Vec<i64> = offset
            .coords()
            .iter()
            .map(|x| {
                let s = x * Rational::from_integer(scale.clone());
                i64::try_from(&s.to_integer()).expect("scaled offset fits i64")
            })
            .collect();
        let d2 = Rational::from_integer(&scale * &scale);
        let boxb = c * bound * &d2;
        let exact = bound * &d2 * Rational::from_integer(Integer::from(2));
        let to_i128 = |x: &Integer| i128::try_from(x).expect("enumeration bound fits i128");
        let exhausted = bound.is_negative();
        let (box_num, box_den, q_num, q_den) = if exhausted {
            (0, 1, 0, 1)
        } else {
            (
                to_i128(boxb.numer()),
                to_i128(boxb.denom()),
                to_i128(exact.numer()),
                to_i128(exact.denom()),
            )
        };
        VectorStream {
            dim,
            scale: scale_i,
            off,
            gram: lattice.gram(),
            box_num,
            box_den,
            q_num,
            q_den,
            levels: vec![Level {
                t: 0,
                neg_only: false,
                prefix: 0,
            }],
            choices: vec![0; dim],
            depth: 0,
            exhausted,
        }
    }

    /// Maps the trial counter to the integer sequence 0, 1, -1, 2, -2, ...
    fn trial_value(t: u64) -> i64 {
        if t == 0 {
            0
        } else if t % 2 == 1 {
            ((t + 1) / 2) as i64
        } else {
            -((t / 2) as i64)
        }
    }

    fn scaled_q(&self) -> i128 {
        let x: Vec<i128> = (0..self.dim)
            .map(|i| i128::from(self.off[i]) + i128::from(self.scale) * i128::from(self.choices[i]))
            .collect();
        let mut acc: i128 = 0;
        for i in 0..self.dim {
            if x[i] == 0 {
                continue;
            }
            let mut row: i128 = 0;
            for j in 0..self.dim {
                row += i128::from(self.gram[[i, j]]) * x[j];
            }
            acc += x[i] * row;
        }
        acc
    }
}

impl Iterator for VectorStream<'_> {
    type Item = CosetVector;

    fn next(&mut self) -> Option<CosetVector> {
        if self.exhausted {
            return None;
        }
        loop {
            if self.depth == self.dim {
                // A full box vector; filter by the exact form value, then
                // resume the search at the innermost level.
                let q2 = self.scaled_q();
                self.depth -= 1;
                if q2 * self.q_den <= self.q_num {
                    let q = Rational::new(
                        Integer::from(q2),
                        Integer::from(2) * Integer::from(self.scale) * Integer::from(self.scale),
                    );
                    return Some(CosetVector {
                        v: self.choices.clone(),
                        q,
                    });
                }
                continue;
            }
            let level = self.depth;
            let state = &mut self.levels[level];
            let t = state.t;
            state.t += 1;
            let v = Self::trial_value(t);
            if state.neg_only && v >= 0 {
                continue;
            }
            let x = i128::from(self.off[level]) + i128::from(self.scale) * i128::from(v);
            let sq = state.prefix + x * x;
            if sq * self.box_den > self.box_num {
                if v >= 0 {
                    // Larger nonnegative trials only grow, but a negative
                    // trial -k has |x| = k - alpha and may still fit.
                    state.neg_only = true;
                    continue;
                }
                // The negative side is exhausted too (its magnitudes grow
                // monotonically), so this level is done.
                if level == 0 {
                    self.exhausted = true;
                    return None;
                }
                self.depth -= 1;
                continue;
            }
            self.choices[level] = v;
            self.depth += 1;
            if self.levels.len() == self.depth {
                self.levels.push(Level {
                    t: 0,
                    neg_only: false,
                    prefix: sq,
                });
            } else {
                self.levels[self.depth] = Level {
                    t: 0,
                    neg_only: false,
                    prefix: sq,
                };
            }
        }
    }
}

/// The minimum of `Q` over the coset `alpha + Z^n` and all vectors
/// attaining it, returned as full rational vectors `alpha + v`.
///
/// For integral `alpha` the answer is `(0, {0})` directly; otherwise the
/// minimizers lie within `Q <= Q(alpha)` since `v = 0` belongs to the coset.
///
/// # Panics
/// Panics if the offset coordinates are outside `[0, 1)`.
pub fn min_vectors(lat: &GramLattice, alpha: &CosetRep) -> (Rational, Vec<Vec<Rational>>) {
    if alpha.is_integral() {
        return (
            Rational::zero(),
            vec![vec![Rational::zero(); lat.dim()]],
        );
    }
    let q_alpha = lat.quad_value(alpha.coords());
    let query = BoundedCosetQuery::new(lat, alpha, q_alpha);
    let mut best: Option<Rational> = None;
    let mut hits: Vec<Vec<i64>> = vec![];
    for cv in query.vectors() {
        match &best {
            Some(b) if cv.q > *b => {}
            Some(b) if cv.q == *b => hits.push(cv.v),
            _ => {
                best = Some(cv.q);
                hits.clear();
                // Re-push below through the common path.
                hits.push(cv.v);
            }
        }
    }
    let q_min = best.expect("coset contains alpha itself");
    let vectors = hits
        .into_iter()
        .map(|v| {
            alpha
                .coords()
                .iter()
                .zip(&v)
                .map(|(a, &vi)| a + Rational::from_integer(Integer::from(vi)))
                .collect()
        })
        .collect();
    (q_min, vectors)
}

/// How a tuple stream constrains the total `sum_i Q(alpha + v_i)`.
#[derive(Clone, Debug)]
pub enum SumConstraint {
    Exactly(Rational),
    AtMost(Rational),
}

/// An ordered tuple drawn from a candidate list, by indices, with its exact
/// quadratic-form sum.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TupleItem {
    pub indices: Vec<usize>,
    pub sum: Rational,
}

/// Streams ordered `tuple_len`-tuples over a Q-sorted candidate list whose
/// form values add up as constrained. Pruning relies on the sortedness: at
/// every slot, once a candidate overshoots, all later ones do too.
pub struct TupleStream<'a> {
    cands: &'a [CosetVector],
    tuple_len: usize,
    limit: Rational,
    exact: Option<Rational>,
    q_min: Rational,
    /// Next candidate index to try at each slot.
    cursor: Vec<usize>,
    chosen: Vec<usize>,
    sums: Vec<Rational>,
    depth: usize,
    exhausted: bool,
}

impl<'a> TupleStream<'a> {
    /// # Errors
    /// Fails when the candidate list is not sorted by increasing `q`.
    pub fn new(
        cands: &'a [CosetVector],
        tuple_len: usize,
        constraint: SumConstraint,
    ) -> Result<Self, EnumerationError> {
        assert!(tuple_len >= 1, "tuples must have at least one slot");
        for i in 1..cands.len() {
            if cands[i].q < cands[i - 1].q {
                return Err(EnumerationError::UnsortedCandidates { position: i });
            }
        }
        let (limit, exact) = match constraint {
            SumConstraint::Exactly(n) => (n.clone(), Some(n)),
            SumConstraint::AtMost(m) => (m, None),
        };
        let q_min = cands.first().map(|c| c.q.clone()).unwrap_or_default();
        let exhausted = cands.is_empty() || limit.is_negative();
        Ok(TupleStream {
            cands,
            tuple_len,
            limit,
            exact,
            q_min,
            cursor: vec![0; tuple_len],
            chosen: vec![0; tuple_len],
            sums: vec![Rational::zero(); tuple_len + 1],
            depth: 0,
            exhausted,
        })
    }
}

impl Iterator for TupleStream<'_> {
    type Item = TupleItem;

    fn next(&mut self) -> Option<TupleItem> {
        if self.exhausted {
            return None;
        }
        loop {
            if self.depth == self.tuple_len {
                let total = self.sums[self.depth].clone();
                self.depth -= 1;
                let keep = match &self.exact {
                    Some(n) => total == *n,
                    None => true,
                };
                if keep {
                    return Some(TupleItem {
                        indices: self.chosen.clone(),
                        sum: total,
                    });
                }
                continue;
            }
            let slot = self.depth;
            let i = self.cursor[slot];
            if i >= self.cands.len() {
                if slot == 0 {
                    self.exhausted = true;
                    return None;
                }
                self.depth -= 1;
                continue;
            }
            self.cursor[slot] += 1;
            let partial = &self.sums[slot] + &self.cands[i].q;
            // Even filling the remaining slots with the cheapest candidate
            // must not overshoot; candidates are sorted, so overshooting
            // here exhausts the slot.
            let remaining = (self.tuple_len - slot - 1) as i64;
            let floor_rest =
                &partial + &(&self.q_min * Rational::from_integer(Integer::from(remaining)));
            if floor_rest > self.limit {
                if slot == 0 {
                    self.exhausted = true;
                    return None;
                }
                self.depth -= 1;
                // Invalidate the slot so re-entry restarts it.
                self.cursor[slot] = self.cands.len();
                continue;
            }
            self.chosen[slot] = i;
            self.sums[slot + 1] = partial;
            self.depth += 1;
            if self.depth < self.tuple_len {
                self.cursor[self.depth] = 0;
            }
        }
    }
}

/// Candidate list for tuple streams: all coset vectors with `Q <= bound`,
/// stably sorted by increasing `Q`.
pub fn sorted_candidates(
    lat: &GramLattice,
    alpha: &CosetRep,
    bound: &Rational,
) -> Vec<CosetVector> {
    let query = BoundedCosetQuery::new(lat, alpha, bound.clone());
    let mut cands: Vec<CosetVector> = query.vectors().collect();
    cands.sort_by(|a, b| a.q.cmp(&b.q));
    cands
}

/// All ordered `nprime`-tuples `(v_1, ..., v_nprime)` with
/// `sum_i Q(alpha + v_i) = n`, materialized as integer-vector tuples.
pub fn tuples_with_q_sum(
    lat: &GramLattice,
    alpha: &CosetRep,
    nprime: u32,
    n: &Rational,
) -> impl Iterator<Item = Vec<Vec<i64>>> {
    let cands = sorted_candidates(lat, alpha, n);
    TuplesOwned {
        cands,
        nprime: nprime as usize,
        constraint: SumConstraint::Exactly(n.clone()),
    }
    .into_iter()
}

/// All ordered `nprime`-tuples with form sum at most `n_max`, tagged by
/// their exact sum (the grouped companion of [`tuples_with_q_sum`]).
pub fn tuples_with_q_sum_up_to(
    lat: &GramLattice,
    alpha: &CosetRep,
    nprime: u32,
    n_max: &Rational,
) -> impl Iterator<Item = (Rational, Vec<Vec<i64>>)> {
    let cands = sorted_candidates(lat, alpha, n_max);
    TuplesOwnedTagged {
        cands,
        nprime: nprime as usize,
        constraint: SumConstraint::AtMost(n_max.clone()),
    }
    .into_iter()
}

/// Owning adapter so the public tuple iterators need no lifetime plumbing.
struct TuplesOwned {
    cands: Vec<CosetVector>,
    nprime: usize,
    constraint: SumConstraint,
}

impl IntoIterator for TuplesOwned {
    type Item = Vec<Vec<i64>>;
    type IntoIter = std::vec::IntoIter<Vec<Vec<i64>>>;
    fn into_iter(self) -> Self::IntoIter {
        let stream = TupleStream::new(&self.cands, self.nprime, self.constraint.clone())
            .expect("internally built candidates are sorted");
        let out: Vec<Vec<Vec<i64>>> = stream
            .map(|item| {
                item.indices
                    .iter()
                    .map(|&i| self.cands[i].v.clone())
                    .collect()
            })
            .collect();
        out.into_iter()
    }
}

struct TuplesOwnedTagged {
    cands: Vec<CosetVector>,
    nprime: usize,
    constraint: SumConstraint,
}

impl IntoIterator for TuplesOwnedTagged {
    type Item = (Rational, Vec<Vec<i64>>);
    type IntoIter = std::vec::IntoIter<(Rational, Vec<Vec<i64>>)>;
    fn into_iter(self) -> Self::IntoIter {
        let stream = TupleStream::new(&self.cands, self.nprime, self.constraint.clone())
            .expect("internally built candidates are sorted");
        let out: Vec<(Rational, Vec<Vec<i64>>)> = stream
            .map(|item| {
                let tuple = item
                    .indices
                    .iter()
                    .map(|&i| self.cands[i].v.clone())
                    .collect();
                (item.sum, tuple)
            })
            .collect();
        out.into_iter()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::collections::BTreeSet;

    fn rat(n: i64, d: i64) -> Rational {
        Rational::new(Integer::from(n), Integer::from(d))
    }

    fn d4() -> GramLattice {
        GramLattice::new(vec![
            vec![2, -1, 0, 0],
            vec![-1, 2, -1, -1],
            vec![0, -1, 2, 0],
            vec![0, -1, 0, 2],
        ])
        .unwrap()
    }

    fn a2() -> GramLattice {
        GramLattice::new(vec![vec![2, -1], vec![-1, 2]]).unwrap()
    }

    fn half_coset_d4() -> CosetRep {
        CosetRep::new(vec![rat(0, 1), rat(0, 1), rat(1, 2), rat(1, 2)])
    }

    #[test]
    fn certified_constants() {
        let diag = GramLattice::new(vec![vec![2, 0], vec![0, 2]]).unwrap();
        assert_eq!(safe_c_bound(&diag), rat(2, 1));
        assert_eq!(safe_c_bound(&a2()), rat(8, 3));
        // The D4 bound must dominate the sharp eigenvalue value ~7.4641.
        assert!(safe_c_bound(&d4()) >= rat(7_464_102, 1_000_000));
    }

    /// Brute-force oracle: scan the cube |v_i + alpha_i| <= R + 1 with
    /// R = ceil(sqrt(c * bound)) and keep the exact solutions.
    fn oracle(lat: &GramLattice, alpha: &CosetRep, bound: &Rational) -> BTreeSet<Vec<i64>> {
        let mut out = BTreeSet::new();
        if bound.is_negative() {
            return out;
        }
        let cb = safe_c_bound(lat) * bound;
        let mut r = 0i64;
        while Rational::from_integer(Integer::from(r * r)) < cb {
            r += 1;
        }
        let r = r + 1;
        let dim = lat.dim();
        let mut v = vec![-r; dim];
        'scan: loop {
            let full: Vec<Rational> = alpha
                .coords()
                .iter()
                .zip(&v)
                .map(|(a, &vi)| a + Rational::from_integer(Integer::from(vi)))
                .collect();
            if lat.quad_value(&full) <= *bound {
                out.insert(v.clone());
            }
            let mut k = dim;
            loop {
                if k == 0 {
                    break 'scan;
                }
                k -= 1;
                v[k] += 1;
                if v[k] <= r {
                    break;
                }
                v[k] = -r;
            }
        }
        out
    }

    #[test]
    fn certified_override_changes_nothing() {
        // c = 8 beats the trace bound but still dominates the sharp value,
        // so the smaller box must produce the same vector set.
        let tight = d4().with_enumeration_constant(rat(8, 1)).unwrap();
        assert!(effective_c_bound(&tight) < safe_c_bound(&tight));
        let offset = half_coset_d4();
        let collect = |lat: &GramLattice| {
            let mut all: Vec<CosetVector> = BoundedCosetQuery::new(lat, &offset, rat(3, 1))
                .vectors()
                .collect();
            all.sort_by(|a, b| a.v.cmp(&b.v));
            all
        };
        assert_eq!(collect(&d4()), collect(&tight));
    }

    #[test]
    fn pinned_coset_scans() {
        let l = d4();
        let zero = CosetRep::zero(4);
        let at = |b: Rational| {
            BoundedCosetQuery::new(&l, &zero, b)
                .vectors()
                .collect::<Vec<_>>()
        };
        let only_zero = at(rat(0, 1));
        assert_eq!(only_zero.len(), 1);
        assert!(only_zero[0].v.iter().all(|&x| x == 0));
        assert_eq!(only_zero[0].q, rat(0, 1));
        // Zero plus the 24 roots of D4.
        assert_eq!(at(rat(1, 1)).len(), 25);
        // The shifted coset has minimal form value 1/2.
        let shifted = BoundedCosetQuery::new(&l, &half_coset_d4(), rat(1, 4));
        assert_eq!(shifted.vectors().count(), 0);
        // Negative bounds yield empty streams, not errors.
        let neg = BoundedCosetQuery::new(&l, &zero, rat(-1, 1));
        assert_eq!(neg.vectors().count(), 0);
    }

    #[test]
    fn yielded_values_satisfy_predicate() {
        let l = d4();
        let alpha = half_coset_d4();
        let q = BoundedCosetQuery::new(&l, &alpha, rat(5, 2));
        let mut n = 0;
        for cv in q.vectors() {
            let full: Vec<Rational> = alpha
                .coords()
                .iter()
                .zip(&cv.v)
                .map(|(a, &vi)| a + Rational::from_integer(Integer::from(vi)))
                .collect();
            assert_eq!(l.quad_value(&full), cv.q);
            assert!(cv.q <= rat(5, 2));
            n += 1;
        }
        assert!(n > 0);
    }

    #[test]
    fn stream_is_restartable_and_deterministic() {
        let l = a2();
        let alpha = CosetRep::new(vec![rat(2, 3), rat(1, 3)]);
        let q = BoundedCosetQuery::new(&l, &alpha, rat(3, 1));
        let first: Vec<_> = q.vectors().collect();
        let second: Vec<_> = q.vectors().collect();
        assert_eq!(first, second);
        assert!(!first.is_empty());
    }

    #[test]
    fn min_vectors_pinned() {
        let l = d4();
        let (q0, v0) = min_vectors(&l, &CosetRep::zero(4));
        assert_eq!(q0, rat(0, 1));
        assert_eq!(v0, vec![vec![Rational::zero(); 4]]);
        let (qm, vs) = min_vectors(&l, &half_coset_d4());
        assert_eq!(qm, rat(1, 2));
        assert!(!vs.is_empty());
        for x in &vs {
            assert_eq!(l.quad_value(x), rat(1, 2));
        }
        // No strictly smaller vector exists in the coset (oracle box scan).
        let all = oracle(&l, &half_coset_d4(), &rat(1, 2));
        assert_eq!(all.len(), vs.len());
    }

    #[test]
    fn min_vectors_commute_with_rescaling() {
        let l = d4();
        let r = l.rescale(2);
        for alpha in [half_coset_d4(), CosetRep::zero(4)] {
            let (q1, v1) = min_vectors(&l, &alpha);
            let (q2, v2) = min_vectors(&r, &alpha);
            assert_eq!(q2, q1 * rat(2, 1), "rescaled minimum doubles");
            assert_eq!(v1, v2, "minimizers coincide");
        }
    }

    #[test]
    fn tuple_streams_pinned() {
        let l = d4();
        let zero = CosetRep::zero(4);
        let only: Vec<_> = tuples_with_q_sum(&l, &zero, 2, &rat(0, 1)).collect();
        assert_eq!(only.len(), 1);
        assert!(only[0].iter().all(|v| v.iter().all(|&x| x == 0)));
        // One slot zero, the other one of the 24 roots, in either slot.
        assert_eq!(tuples_with_q_sum(&l, &zero, 2, &rat(1, 1)).count(), 48);
        // Each slot of the shifted coset contributes at least 1/2.
        assert_eq!(
            tuples_with_q_sum(&l, &half_coset_d4(), 2, &rat(1, 2)).count(),
            0
        );
    }

    #[test]
    fn grouped_tuples_partition_the_at_most_stream() {
        let l = a2();
        let alpha = CosetRep::new(vec![rat(2, 3), rat(1, 3)]);
        let nmax = rat(2, 1);
        let grouped: Vec<_> = tuples_with_q_sum_up_to(&l, &alpha, 3, &nmax).collect();
        // Brute-force count over the candidate triple loop.
        let cands = sorted_candidates(&l, &alpha, &nmax);
        let mut expect = 0usize;
        let mut per_sum: std::collections::BTreeMap<Rational, usize> = Default::default();
        for a in &cands {
            for b in &cands {
                for c in &cands {
                    let s = &a.q + &b.q + &c.q;
                    if s <= nmax {
                        expect += 1;
                        *per_sum.entry(s).or_default() += 1;
                    }
                }
            }
        }
        assert_eq!(grouped.len(), expect);
        // Every tagged sum is correct and the per-sum counts match the
        // exact-sum streams.
        for (n, count) in &per_sum {
            let got = grouped.iter().filter(|(s, _)| s == n).count();
            assert_eq!(got, *count);
            assert_eq!(
                tuples_with_q_sum(&l, &alpha, 3, n).count(),
                *count,
                "exact stream at {n}"
            );
        }
    }

    #[test]
    fn unsorted_candidates_rejected() {
        let cands = vec![
            CosetVector {
                v: vec![0],
                q: rat(1, 1),
            },
            CosetVector {
                v: vec![1],
                q: rat(0, 1),
            },
        ];
        assert_eq!(
            TupleStream::new(&cands, 2, SumConstraint::AtMost(rat(2, 1)))
                .err()
                .unwrap(),
            EnumerationError::UnsortedCandidates { position: 1 }
        );
    }

    fn random_even_gram() -> impl Strategy<Value = Vec<Vec<i64>>> {
        (2usize..=3).prop_flat_map(|n| {
            proptest::collection::vec(-1i64..=1, n * n).prop_map(move |e| {
                let mut l = vec![vec![0i64; n]; n];
                for i in 0..n {
                    for j in 0..=i {
                        l[i][j] = if i == j && e[i * n + j] == 0 {
                            1
                        } else {
                            e[i * n + j]
                        };
                    }
                }
                let mut g = vec![vec![0i64; n]; n];
                for i in 0..n {
                    for j in 0..n {
                        g[i][j] = 2 * (0..n).map(|k| l[i][k] * l[j][k]).sum::<i64>();
                    }
                }
                g
            })
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn enumeration_matches_box_oracle(
            g in random_even_gram(),
            num in proptest::collection::vec(0i64..=2, 3),
            den in 1i64..=3,
            bn in 0i64..=9,
        ) {
            let lat = GramLattice::new(g).unwrap();
            let alpha = CosetRep::new(
                (0..lat.dim()).map(|i| rat(num[i].min(den - 1).max(0), den)).collect(),
            );
            let bound = rat(bn, 3);
            let got: BTreeSet<Vec<i64>> =
                BoundedCosetQuery::new(&lat, &alpha, bound.clone())
                    .vectors()
                    .map(|cv| cv.v)
                    .collect();
            let want = oracle(&lat, &alpha, &bound);
            prop_assert_eq!(got, want);
        }
    }
}
