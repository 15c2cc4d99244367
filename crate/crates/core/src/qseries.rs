//! Truncated formal Jacobi q-expansions, used as an independent verification
//! oracle for the relation engine.
//!
//! A [`JacobiQSeries`] is a finite map from rational q-exponents to
//! multivariate Laurent polynomials in the elliptic variables. The expansion
//! of one theta series keeps every lattice vector with `Q(alpha + v) < trunc`;
//! products truncate at the minimum of the operand truncations, so a relation
//! evaluated at truncation `T` checks all Fourier coefficients below `T`
//! exactly. This route goes through honest series multiplication and shares
//! nothing with the tuple sweeps of [`crate::relations`], which is what makes
//! the cross-checks here meaningful.
//!
//! The module also expands the single-variable series behind the coefficient
//! vectors: [`theta_partial_qexp`] gives the normalized `z`-derivatives of one
//! theta series at `z = 0`, and [`dkp_of_combination`] applies the normalized
//! coefficient extraction to a linear combination of theta powers.

use std::collections::BTreeMap;
use std::fmt;

use num_integer::lcm;
use num_traits::{Signed, ToPrimitive, Zero};

use crate::enumeration::{tuples_with_q_sum_up_to, BoundedCosetQuery};
use crate::exact::{CyclotomicElement, Mat};
use crate::lattice::{CosetRep, GramLattice};
use crate::relations::NORMALIZATION_NOTE;
use crate::taylor::{pkpm, HalfInteger, MultiIndex};
use crate::{Integer, Rational};

/// A Laurent polynomial in the elliptic variables: a finite map from integer
/// exponent vectors to cyclotomic coefficients, with no explicit zeros.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LaurentPoly {
    n_vars: usize,
    terms: BTreeMap<Vec<i64>, CyclotomicElement>,
}

impl LaurentPoly {
    pub fn zero(n_vars: usize) -> Self {
        LaurentPoly {
            n_vars,
            terms: BTreeMap::new(),
        }
    }

    pub fn monomial(exponents: Vec<i64>, coefficient: CyclotomicElement) -> Self {
        let mut poly = LaurentPoly::zero(exponents.len());
        poly.add_term(exponents, &coefficient);
        poly
    }

    pub fn n_vars(&self) -> usize {
        self.n_vars
    }

    pub fn terms(&self) -> &BTreeMap<Vec<i64>, CyclotomicElement> {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Adds `coefficient * z^exponents`, dropping the entry if it cancels.
    pub fn add_term(&mut self, exponents: Vec<i64>, coefficient: &CyclotomicElement) {
        assert_eq!(exponents.len(), self.n_vars, "exponent vector length");
        if coefficient.is_zero() {
            return;
        }
        match self.terms.entry(exponents) {
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(coefficient.clone());
            }
            std::collections::btree_map::Entry::Occupied(mut e) => {
                let sum = add_lifted(e.get(), coefficient);
                if sum.is_zero() {
                    e.remove();
                } else {
                    *e.get_mut() = sum;
                }
            }
        }
    }

    fn add_scaled(&mut self, other: &LaurentPoly, factor: &CyclotomicElement) {
        assert_eq!(self.n_vars, other.n_vars, "variable counts must match");
        for (exps, coeff) in &other.terms {
            self.add_term(exps.clone(), &mul_lifted(coeff, factor));
        }
    }

    pub fn scale(&self, factor: &CyclotomicElement) -> LaurentPoly {
        let mut out = LaurentPoly::zero(self.n_vars);
        out.add_scaled(self, factor);
        out
    }

    pub fn mul(&self, other: &LaurentPoly) -> LaurentPoly {
        assert_eq!(self.n_vars, other.n_vars, "variable counts must match");
        let mut out = LaurentPoly::zero(self.n_vars);
        for (ea, ca) in &self.terms {
            for (eb, cb) in &other.terms {
                let exps: Vec<i64> = ea.iter().zip(eb).map(|(x, y)| x + y).collect();
                out.add_term(exps, &mul_lifted(ca, cb));
            }
        }
        out
    }

    /// The value at `z = 0`, i.e. the sum of all coefficients.
    pub fn eval_at_one(&self) -> CyclotomicElement {
        let mut sum = CyclotomicElement::zero(1);
        for coeff in self.terms.values() {
            sum = add_lifted(&sum, coeff);
        }
        sum
    }
}

fn mul_lifted(a: &CyclotomicElement, b: &CyclotomicElement) -> CyclotomicElement {
    if a.order() == b.order() {
        return a.clone() * b.clone();
    }
    let order = lcm(a.order(), b.order());
    a.lift_to_order(order) * b.lift_to_order(order)
}

fn add_lifted(a: &CyclotomicElement, b: &CyclotomicElement) -> CyclotomicElement {
    if a.order() == b.order() {
        return a.clone() + b.clone();
    }
    let order = lcm(a.order(), b.order());
    a.lift_to_order(order) + b.lift_to_order(order)
}

/// A truncated Jacobi q-expansion: a finite map from rational q-exponents to
/// Laurent-polynomial coefficients, exact for all exponents below `trunc`.
///
/// The elliptic exponent vectors are the integer vectors
/// `zden * G (alpha + v)`; the fixed denominator `zden` (the lattice level)
/// is carried on the series so monomial exponents stay integral.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct JacobiQSeries {
    n_vars: usize,
    zden: u32,
    trunc: Rational,
    terms: BTreeMap<Rational, LaurentPoly>,
}

impl JacobiQSeries {
    /// The zero series: exact below `trunc`, no terms.
    pub fn new(n_vars: usize, zden: u32, trunc: Rational) -> Self {
        JacobiQSeries {
            n_vars,
            zden,
            trunc,
            terms: BTreeMap::new(),
        }
    }

    /// The constant series `1` (a single `q^0` term).
    pub fn one(n_vars: usize, zden: u32, trunc: Rational) -> Self {
        let mut s = JacobiQSeries::new(n_vars, zden, trunc);
        if s.trunc.is_positive() {
            s.terms.insert(
                Rational::zero(),
                LaurentPoly::monomial(vec![0; n_vars], CyclotomicElement::one(1)),
            );
        }
        s
    }

    /// Builds a series from explicit terms, dropping zero coefficients.
    ///
    /// # Panics
    /// Panics if a term exponent is not below `trunc` or a coefficient has
    /// the wrong variable count.
    pub fn from_terms(
        n_vars: usize,
        zden: u32,
        trunc: Rational,
        terms: impl IntoIterator<Item = (Rational, LaurentPoly)>,
    ) -> Self {
        let mut s = JacobiQSeries::new(n_vars, zden, trunc);
        for (exp, poly) in terms {
            assert!(exp < s.trunc, "term exponent {exp} not below the truncation");
            assert_eq!(poly.n_vars(), n_vars, "coefficient variable count");
            if !poly.is_zero() {
                s.terms.insert(exp, poly);
            }
        }
        s
    }

    pub fn n_vars(&self) -> usize {
        self.n_vars
    }

    pub fn zden(&self) -> u32 {
        self.zden
    }

    pub fn trunc(&self) -> &Rational {
        &self.trunc
    }

    pub fn terms(&self) -> &BTreeMap<Rational, LaurentPoly> {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn leading(&self) -> Option<(&Rational, &LaurentPoly)> {
        self.terms.first_key_value()
    }

    /// Multiplies every coefficient by a fixed cyclotomic unit.
    pub fn scale(&self, factor: &CyclotomicElement) -> JacobiQSeries {
        let mut out = JacobiQSeries::new(self.n_vars, self.zden, self.trunc.clone());
        for (exp, poly) in &self.terms {
            let scaled = poly.scale(factor);
            if !scaled.is_zero() {
                out.terms.insert(exp.clone(), scaled);
            }
        }
        out
    }
}

/// Plain-text dump: one line per q-exponent in increasing order, monomials in
/// lexicographic exponent order, for golden-file comparisons.
impl fmt::Display for JacobiQSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "truncation {} (exclusive), zden {}", self.trunc, self.zden)?;
        for (exp, poly) in &self.terms {
            write!(f, "q^{exp}:")?;
            for (exps, coeff) in poly.terms() {
                write!(f, " z{exps:?} ({coeff})")?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

/// Expands one Jacobi theta series: the sum over lattice vectors `v` with
/// `Q(alpha + v) < trunc` of the root of unity attached to `B(beta, v)` times
/// `q^{Q(alpha + v)} z^{zden * G (alpha + v)}`.
///
/// # Panics
/// Panics unless `alpha` lies in the dual lattice and the phases `B(beta, v)`
/// have denominators dividing the level.
pub fn theta_qexp(
    lat: &GramLattice,
    alpha: &CosetRep,
    beta: &CosetRep,
    trunc: &Rational,
) -> JacobiQSeries {
    let dim = lat.dim();
    assert_eq!(alpha.dim(), dim, "alpha dimension");
    assert_eq!(beta.dim(), dim, "beta dimension");
    assert!(
        lat.is_dual_vector(alpha.coords()),
        "alpha must lie in the dual lattice"
    );
    let level = lat.level();
    let level_rat = Rational::from_integer(Integer::from(level));
    // G beta, fixed across terms; phases are B(beta, v) = (G beta) . v.
    let g_beta: Vec<Rational> = (0..dim)
        .map(|l| {
            (0..dim)
                .map(|i| {
                    &beta.coords()[i] * Rational::from_integer(Integer::from(lat.gram()[[i, l]]))
                })
                .sum()
        })
        .collect();
    for x in &g_beta {
        assert!(
            (x * &level_rat).is_integer(),
            "beta phase denominators must divide the level"
        );
    }
    // Enumeration needs representatives in [0, 1); the summation index `v`
    // is relative to the alpha that was passed, so the integer shift between
    // the two contributes a fixed phase to every coefficient.
    let alpha0 = alpha.normalized();
    let mut shift_phase = Rational::zero();
    for ((a, a0), gb) in alpha.coords().iter().zip(alpha0.coords()).zip(&g_beta) {
        let w = a - a0;
        debug_assert!(w.is_integer());
        shift_phase -= gb * w;
    }
    // G alpha0 is integral because alpha is dual.
    let g_alpha0: Vec<Integer> = (0..dim)
        .map(|l| {
            let x: Rational = (0..dim)
                .map(|i| {
                    &alpha0.coords()[i]
                        * Rational::from_integer(Integer::from(lat.gram()[[i, l]]))
                })
                .sum();
            x.to_integer()
        })
        .collect();

    let mut series = JacobiQSeries::new(dim, level, trunc.clone());
    if !trunc.is_positive() {
        return series;
    }
    let query = BoundedCosetQuery::new(lat, &alpha0, trunc.clone());
    for cv in query.vectors() {
        if &cv.q >= trunc {
            continue;
        }
        let mut exps = Vec::with_capacity(dim);
        let mut phase = shift_phase.clone();
        for l in 0..dim {
            let gv: i64 = (0..dim).map(|i| lat.gram()[[i, l]] * cv.v[i]).sum();
            let e = (&g_alpha0[l] + Integer::from(gv)) * Integer::from(level);
            exps.push(e.to_i64().expect("monomial exponent fits i64"));
            phase += &g_beta[l] * Rational::from_integer(Integer::from(cv.v[l]));
        }
        let scaled_phase = phase * &level_rat;
        debug_assert!(scaled_phase.is_integer());
        let exp = scaled_phase
            .to_integer()
            .to_i64()
            .expect("phase exponent fits i64");
        let coeff = CyclotomicElement::root_of_unity(level, exp);
        series
            .terms
            .entry(cv.q)
            .or_insert_with(|| LaurentPoly::zero(dim))
            .add_term(exps, &coeff);
    }
    series.terms.retain(|_, poly| !poly.is_zero());
    series
}

/// Exact Cauchy product, truncated at the minimum of the operand truncations.
pub fn series_mul(a: &JacobiQSeries, b: &JacobiQSeries) -> JacobiQSeries {
    assert_eq!(a.n_vars, b.n_vars, "operands must share a variable count");
    assert_eq!(a.zden, b.zden, "operands must share the exponent denominator");
    let trunc = a.trunc.clone().min(b.trunc.clone());
    let mut out = JacobiQSeries::new(a.n_vars, a.zden, trunc);
    for (ea, pa) in &a.terms {
        for (eb, pb) in &b.terms {
            let e = ea + eb;
            if e >= out.trunc {
                // Exponents ascend within b, so later terms overshoot too.
                break;
            }
            let prod = pa.mul(pb);
            match out.terms.entry(e) {
                std::collections::btree_map::Entry::Vacant(entry) => {
                    if !prod.is_zero() {
                        entry.insert(prod);
                    }
                }
                std::collections::btree_map::Entry::Occupied(mut entry) => {
                    entry
                        .get_mut()
                        .add_scaled(&prod, &CyclotomicElement::one(1));
                    if entry.get().is_zero() {
                        entry.remove();
                    }
                }
            }
        }
    }
    out
}

/// `a` multiplied by itself `e` times (`e >= 1`).
pub fn series_pow(a: &JacobiQSeries, e: u32) -> JacobiQSeries {
    assert!(e >= 1, "powers must be positive");
    let mut out = a.clone();
    for _ in 1..e {
        out = series_mul(&out, a);
    }
    out
}

/// The residual `sum_i coeffs[i] * series[i]`, paired by position. An empty
/// residual verifies the relation for every exponent below the shared
/// truncation.
///
/// # Panics
/// Panics unless all series share `n_vars`, `zden`, and `trunc`.
pub fn evaluate_relation(
    coeffs: &[CyclotomicElement],
    series: &[JacobiQSeries],
) -> JacobiQSeries {
    assert_eq!(coeffs.len(), series.len(), "one coefficient per series");
    assert!(!series.is_empty(), "a relation needs at least one term");
    let first = &series[0];
    for s in series {
        assert_eq!(s.n_vars, first.n_vars, "series must share a variable count");
        assert_eq!(s.zden, first.zden, "series must share the exponent denominator");
        assert_eq!(s.trunc, first.trunc, "series must share the truncation");
    }
    let mut out = JacobiQSeries::new(first.n_vars, first.zden, first.trunc.clone());
    for (coeff, s) in coeffs.iter().zip(series) {
        if coeff.is_zero() {
            continue;
        }
        for (exp, poly) in &s.terms {
            out.terms
                .entry(exp.clone())
                .or_insert_with(|| LaurentPoly::zero(first.n_vars))
                .add_scaled(poly, coeff);
        }
    }
    out.terms.retain(|_, poly| !poly.is_zero());
    out
}

/// A truncated one-variable q-expansion with rational coefficients.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RationalQSeries {
    /// Exclusive exponent bound: every exponent below it is exact.
    pub trunc: Rational,
    pub terms: BTreeMap<Rational, Rational>,
    /// Which constant prefactor the stored coefficients omit.
    pub normalization: &'static str,
}

/// A truncated one-variable q-expansion with cyclotomic coefficients.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CyclotomicQSeries {
    /// Exclusive exponent bound: every exponent below it is exact.
    pub trunc: Rational,
    pub terms: BTreeMap<Rational, CyclotomicElement>,
    /// Which constant prefactor the stored coefficients omit.
    pub normalization: &'static str,
}

pub const PARTIAL_NORMALIZATION_NOTE: &str =
    "coefficients omit the prefactor (2 pi i)^s(p) of the raw z-derivatives";

/// The normalized `p`-th `z`-derivative of the one-coset theta series at
/// `z = 0`: the sum over `v` in `t + L` with `Q(v) < trunc` of
/// `prod_l B(v, e_l)^{p_l} q^{Q(v)}`.
///
/// # Panics
/// Panics unless `t` has coordinates in `[0, 1)` and matches the lattice
/// dimension.
pub fn theta_partial_qexp(
    lat: &GramLattice,
    t: &CosetRep,
    p: &MultiIndex,
    trunc: &Rational,
) -> RationalQSeries {
    let dim = lat.dim();
    assert_eq!(t.dim(), dim, "representative dimension");
    assert_eq!(p.dim(), dim, "multi-index dimension");
    assert!(
        t.coords()
            .iter()
            .all(|x| !x.is_negative() && x < &Rational::from_integer(Integer::from(1))),
        "representative coordinates must lie in [0, 1)"
    );
    let mut series = RationalQSeries {
        trunc: trunc.clone(),
        terms: BTreeMap::new(),
        normalization: PARTIAL_NORMALIZATION_NOTE,
    };
    if !trunc.is_positive() {
        return series;
    }
    let query = BoundedCosetQuery::new(lat, t, trunc.clone());
    for cv in query.vectors() {
        if &cv.q >= trunc {
            continue;
        }
        let mut value = Rational::from_integer(Integer::from(1));
        for (l, &e) in p.parts().iter().enumerate() {
            if e == 0 {
                continue;
            }
            let b: Rational = (0..dim)
                .map(|i| {
                    (&t.coords()[i] + Rational::from_integer(Integer::from(cv.v[i])))
                        * Rational::from_integer(Integer::from(lat.gram()[[i, l]]))
                })
                .sum();
            if b.is_zero() {
                value = Rational::zero();
                break;
            }
            value *= b.pow(e as i32);
        }
        if !value.is_zero() {
            *series.terms.entry(cv.q).or_insert_with(Rational::zero) += value;
        }
    }
    series.terms.retain(|_, c| !c.is_zero());
    series
}

/// The normalized coefficient-extraction image of a linear combination of
/// theta `nprime`-th powers at one multi-index `p`: the q-coefficient at `n`
/// is the combination's `(p, n)` coefficient-vector entry, for every integer
/// `n` below `trunc`.
///
/// Computed directly from tuple enumeration, one label at a time, without
/// building the multivariate product series.
///
/// # Panics
/// Panics unless every `alpha` is admissible for the power and every phase
/// exponent `nprime * B(beta, u)` is integral.
pub fn dkp_of_combination(
    lat: &GramLattice,
    nprime: u32,
    coeffs: &[CyclotomicElement],
    labels: &[(CosetRep, CosetRep)],
    p: &MultiIndex,
    trunc: &Rational,
) -> CyclotomicQSeries {
    assert_eq!(coeffs.len(), labels.len(), "one coefficient per label");
    assert!(nprime >= 1, "the power must be positive");
    let dim = lat.dim();
    assert_eq!(p.dim(), dim, "multi-index dimension");
    let mut series = CyclotomicQSeries {
        trunc: trunc.clone(),
        terms: BTreeMap::new(),
        normalization: NORMALIZATION_NOTE,
    };
    let n_last = match last_integer_below(trunc) {
        Some(n) => n,
        None => return series,
    };
    let k = HalfInteger::new(nprime as i64 * dim as i64).expect("positive weight");
    let scaled = Mat::from_fn(dim, dim, |i, j| {
        Rational::from_integer(Integer::from(nprime as i64 * lat.gram()[[i, j]]))
    });
    let poly = pkpm(k, p, &scaled);
    let np_rat = Rational::from_integer(Integer::from(nprime));
    let bound = Rational::from_integer(Integer::from(n_last));
    for (coeff, (alpha, beta)) in coeffs.iter().zip(labels) {
        if coeff.is_zero() {
            continue;
        }
        assert!(
            lat.validate_alpha(alpha, nprime)
                .expect("alpha must lie in the dual lattice"),
            "alpha = {alpha} is not admissible for power {nprime}"
        );
        // The coefficients are representative-invariant; enumerate from the
        // normalized representative.
        let alpha = alpha.normalized();
        let g_beta: Vec<Rational> = (0..dim)
            .map(|l| {
                (0..dim)
                    .map(|i| {
                        &beta.coords()[i]
                            * Rational::from_integer(Integer::from(lat.gram()[[i, l]]))
                    })
                    .sum()
            })
            .collect();
        // The summand depends on a tuple only through (n, v_1 + ... + v_N').
        let mut groups: BTreeMap<(u32, Vec<i64>), u64> = BTreeMap::new();
        for (sum, tuple) in tuples_with_q_sum_up_to(lat, &alpha, nprime, &bound) {
            if !sum.is_integer() {
                continue;
            }
            let n = sum.to_integer().to_u32().expect("sum bounded by n_last");
            let mut total = vec![0i64; dim];
            for v in &tuple {
                for (t, &c) in total.iter_mut().zip(v) {
                    *t += c;
                }
            }
            *groups.entry((n, total)).or_insert(0) += 1;
        }
        for ((n, total), count) in &groups {
            let phase: Rational = g_beta
                .iter()
                .zip(total)
                .map(|(b, &t)| b * Rational::from_integer(Integer::from(t)))
                .sum();
            let scaled_phase = phase * &np_rat;
            assert!(
                scaled_phase.is_integer(),
                "beta = {beta} is not admissible for power {nprime}"
            );
            let zeta = CyclotomicElement::root_of_unity(
                nprime,
                scaled_phase
                    .to_integer()
                    .to_i64()
                    .expect("phase exponent fits i64"),
            );
            let mut point = Vec::with_capacity(dim + 1);
            point.push(Rational::from_integer(Integer::from(*n)));
            for (a, &t) in alpha.coords().iter().zip(total) {
                point.push(a + Rational::new(Integer::from(t), Integer::from(nprime)));
            }
            let value = poly.evaluate(&point)
                * Rational::from_integer(Integer::from(*count));
            if value.is_zero() {
                continue;
            }
            let contribution = mul_lifted(coeff, &zeta.scale(&value));
            let key = Rational::from_integer(Integer::from(*n));
            match series.terms.entry(key) {
                std::collections::btree_map::Entry::Vacant(e) => {
                    e.insert(contribution);
                }
                std::collections::btree_map::Entry::Occupied(mut e) => {
                    *e.get_mut() = add_lifted(e.get(), &contribution);
                }
            }
        }
    }
    series.terms.retain(|_, c| !c.is_zero());
    series
}

/// The largest nonnegative integer strictly below `x`, if any.
fn last_integer_below(x: &Rational) -> Option<u32> {
    if !x.is_positive() {
        return None;
    }
    let mut n = x.floor().to_integer();
    if &Rational::from_integer(n.clone()) == x {
        n -= 1;
    }
    if n.is_negative() {
        None
    } else {
        Some(n.to_u32().expect("coefficient index fits u32"))
    }
}
