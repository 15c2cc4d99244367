//! Exact coefficient vectors attached to `N'`-th powers of theta series, and
//! the discovery of all linear relations among those powers.
//!
//! Every admissible pair `(alpha, beta)` (meaning `N' Q(alpha)` is integral
//! and `beta` lies in the group generated by the dual lattice and `L/N'`) is
//! mapped to a vector over `Q(zeta_{N'})` indexed by the pairs `(p, n)` of
//! [`index_set`]. The `(p, n)` entry is the finite tuple sum
//!
//! ```text
//! sum over ordered N'-tuples (v_1, ..., v_{N'}) in L
//!          with Q(alpha + v_1) + ... + Q(alpha + v_{N'}) = n
//! of   zeta_{N'}^{N' B(beta, v_1 + ... + v_{N'})}
//!    * P(n, coordinates of alpha + (v_1 + ... + v_{N'}) / N')
//! ```
//!
//! where `P` is the polynomial of [`crate::taylor::pkpm`] with weight
//! `N' dim / 2` and matrix `N' G`. When the multi-index set underlying the
//! index pairs separates the cosets of the rescaled lattice (the job of
//! [`crate::p0search`]), a linear combination of the series
//! `theta_{alpha,beta}^{N'}` vanishes identically if and only if the same
//! combination of these vectors vanishes, so finding all relations reduces
//! to exact row reduction over a cyclotomic field.

use std::collections::BTreeMap;
use std::fmt;

use num_integer::Integer as _;
use num_traits::{ToPrimitive, Zero};
use sha2::{Digest, Sha256};

use crate::enumeration::tuples_with_q_sum_up_to;
use crate::exact::{CyclotomicElement, Mat, Reduction, RowSpace};
use crate::lattice::{CosetRep, GramLattice, LatticeError};
use crate::taylor::{pkpm, HalfInteger, MultiIndex, PPolynomial};
use crate::{Integer, Rational};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RelationsError {
    Lattice(LatticeError),
    /// `N' Q(alpha)` is not an integer, so `theta^{N'}` has no integral
    /// q-expansion and the vector is undefined.
    AlphaNotAdmissible { alpha: CosetRep, nprime: u32 },
    /// `beta` does not lie in the group generated by the dual lattice and
    /// `L/N'`, so the character weights are not `N'`-th roots of unity.
    BetaNotAdmissible { beta: CosetRep, nprime: u32 },
}

impl fmt::Display for RelationsError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RelationsError::Lattice(e) => e.fmt(f),
            RelationsError::AlphaNotAdmissible { alpha, nprime } => {
                write!(f, "alpha = {alpha} has non-integral {nprime} Q(alpha)")
            }
            RelationsError::BetaNotAdmissible { beta, nprime } => {
                write!(f, "beta = {beta} is not admissible for power {nprime}")
            }
        }
    }
}

impl std::error::Error for RelationsError {}

impl From<LatticeError> for RelationsError {
    fn from(e: LatticeError) -> Self {
        RelationsError::Lattice(e)
    }
}

/// Largest coefficient index that must be inspected for the multi-index `p`:
/// `floor(delta_N N^2/24 (N' dim/2 + s(p)) prod_{prime q | N} (1 - 1/q^2))`,
/// with `delta_N = 2` for `N <= 2` and `1` otherwise. Exact throughout.
pub fn n_bound(p: &MultiIndex, level: u32, nprime: u32, dim: usize) -> u32 {
    assert!(nprime >= 1 && level % nprime == 0, "power must divide the level");
    let delta: i64 = if level <= 2 { 2 } else { 1 };
    let nn = level as i64;
    // delta N^2 / 24 * (N' dim + 2 s) / 2, then the product over primes.
    let mut val = Rational::new(
        Integer::from(delta * nn * nn * (nprime as i64 * dim as i64 + 2 * p.s() as i64)),
        Integer::from(48),
    );
    let mut rest = level;
    let mut q: u32 = 2;
    while q * q <= rest {
        if rest % q == 0 {
            let qq = (q as i64) * (q as i64);
            val *= Rational::new(Integer::from(qq - 1), Integer::from(qq));
            while rest % q == 0 {
                rest /= q;
            }
        }
        q += 1;
    }
    if rest > 1 {
        let qq = (rest as i64) * (rest as i64);
        val *= Rational::new(Integer::from(qq - 1), Integer::from(qq));
    }
    val.floor()
        .to_integer()
        .to_u32()
        .expect("coefficient bound fits in u32")
}

/// One coordinate of the index set: a multi-index `p` and a coefficient
/// index `0 <= n <= n_bound(p)`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct IndexPair {
    pub p: MultiIndex,
    pub n: u32,
}

impl fmt::Display for IndexPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.p, self.n)
    }
}

/// The full index set: `p` major in `(s, lex)` order over `p0hat`, `n` minor
/// over `0..=n_bound(p)`. This order is normative; vectors and reports use
/// it as-is.
pub fn index_set(p0hat: &[MultiIndex], level: u32, nprime: u32, dim: usize) -> Vec<IndexPair> {
    let mut ps: Vec<MultiIndex> = p0hat.to_vec();
    ps.sort();
    let mut out = Vec::new();
    for p in ps {
        let bound = n_bound(&p, level, nprime, dim);
        for n in 0..=bound {
            out.push(IndexPair { p: p.clone(), n });
        }
    }
    out
}

/// The coefficient vector of one pair `(alpha, beta)`, in index-set order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ThetaVector {
    pub alpha: CosetRep,
    pub beta: CosetRep,
    /// Entries lie in `Q(zeta_{N'})`; scaled by `4^lambda lambda!` (the
    /// rational part of the prefactor omitted by the normalization, with
    /// `lambda = floor(s(p)/2)`) they have integer coordinates.
    pub values: Vec<CyclotomicElement>,
}

impl ThetaVector {
    pub fn label(&self) -> (&CosetRep, &CosetRep) {
        (&self.alpha, &self.beta)
    }
}

/// The dual-coset representatives admissible for the given power: those
/// `alpha` with `N' Q(alpha)` integral, in canonical rep order (zero first).
pub fn admissible_alphas(
    lat: &GramLattice,
    nprime: u32,
) -> Result<Vec<CosetRep>, RelationsError> {
    let mut out = Vec::new();
    for rep in lat.dual_coset_reps() {
        if lat.validate_alpha(&rep, nprime)? {
            out.push(rep);
        }
    }
    Ok(out)
}

/// Whether `beta` differs from a dual vector by an element of `L / N'`.
pub fn beta_admissible(lat: &GramLattice, beta: &CosetRep, nprime: u32) -> bool {
    if beta.dim() != lat.dim() {
        return false;
    }
    let dim = lat.dim();
    let np = Integer::from(nprime);
    let mut shift = vec![0u32; dim];
    loop {
        let moved: Vec<Rational> = beta
            .coords()
            .iter()
            .zip(&shift)
            .map(|(c, &s)| c - Rational::new(Integer::from(s), np.clone()))
            .collect();
        if lat.is_dual_vector(&moved) {
            return true;
        }
        let mut k = dim;
        loop {
            if k == 0 {
                return false;
            }
            k -= 1;
            shift[k] += 1;
            if shift[k] < nprime {
                break;
            }
            shift[k] = 0;
        }
    }
}

/// Shared per-run data for the tuple sweeps: deduplicated polynomials, the
/// positions of the index set grouped by `n`, and joint power-table sizes.
struct SweepContext<'a> {
    lat: &'a GramLattice,
    nprime: u32,
    index: &'a [IndexPair],
    /// Deduplicated polynomials for the distinct `p` in the index set.
    polys: Vec<PPolynomial>,
    /// For each index position, the offset of its polynomial in `polys`.
    poly_of_pos: Vec<usize>,
    /// Index positions grouped by coefficient index `n`.
    pos_by_n: BTreeMap<u32, Vec<usize>>,
    /// Componentwise maximum exponent over all polynomial terms, for the
    /// shared power tables (`X_0` first).
    max_exp: Vec<u32>,
    /// Normalized beta coordinates.
    betas: Vec<Vec<Rational>>,
    n_max: u32,
}

impl<'a> SweepContext<'a> {
    fn new(
        lat: &'a GramLattice,
        betas: &[CosetRep],
        nprime: u32,
        index: &'a [IndexPair],
    ) -> Self {
        let dim = lat.dim();
        let k = HalfInteger::new(nprime as i64 * dim as i64).expect("positive weight");
        let scaled = Mat::from_fn(dim, dim, |i, j| {
            Rational::from_integer(Integer::from(nprime as i64 * lat.gram()[[i, j]]))
        });
        let mut offsets: BTreeMap<MultiIndex, usize> = BTreeMap::new();
        let mut polys = Vec::new();
        let mut poly_of_pos = Vec::with_capacity(index.len());
        let mut pos_by_n: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
        for (pos, pair) in index.iter().enumerate() {
            assert_eq!(pair.p.dim(), dim, "index multi-index dimension mismatch");
            let off = *offsets.entry(pair.p.clone()).or_insert_with(|| {
                polys.push(pkpm(k, &pair.p, &scaled));
                polys.len() - 1
            });
            poly_of_pos.push(off);
            pos_by_n.entry(pair.n).or_default().push(pos);
        }
        let mut max_exp = vec![0u32; dim + 1];
        for poly in &polys {
            for expo in poly.terms().keys() {
                for (m, &e) in max_exp.iter_mut().zip(expo) {
                    *m = (*m).max(e);
                }
            }
        }
        let n_max = index.iter().map(|pair| pair.n).max().unwrap_or(0);
        SweepContext {
            lat,
            nprime,
            index,
            polys,
            poly_of_pos,
            pos_by_n,
            max_exp,
            betas: betas.iter().map(|b| b.normalized().coords().to_vec()).collect(),
            n_max,
        }
    }

    /// All vectors for one `alpha`, one per beta, each in index-set order.
    fn sweep(&self, alpha: &CosetRep) -> Vec<Vec<CyclotomicElement>> {
        let dim = self.lat.dim();
        let nprime = self.nprime;
        if self.index.is_empty() {
            return vec![Vec::new(); self.betas.len()];
        }
        let alpha = alpha.normalized();
        // Multiplicity of each (n, v_1 + ... + v_{N'}); the summand depends
        // on the tuple only through its coefficient index and vector sum.
        let mut counts: BTreeMap<(u32, Vec<i64>), u64> = BTreeMap::new();
        let n_max_rat = Rational::from_integer(Integer::from(self.n_max));
        for (sum, tuple) in tuples_with_q_sum_up_to(self.lat, &alpha, nprime, &n_max_rat) {
            if !sum.is_integer() {
                continue;
            }
            let n = sum.to_integer().to_u32().expect("sum bounded by n_max");
            if !self.pos_by_n.contains_key(&n) {
                continue;
            }
            let mut total = vec![0i64; dim];
            for v in &tuple {
                for (t, &c) in total.iter_mut().zip(v) {
                    *t += c;
                }
            }
            *counts.entry((n, total)).or_insert(0) += 1;
        }

        // Per character class (one residue per beta), the rational part of
        // the partial sums at every index position.
        let mut by_class: BTreeMap<Vec<u8>, Vec<Rational>> = BTreeMap::new();
        let np_rat = Rational::from_integer(Integer::from(nprime));
        for ((n, total), count) in &counts {
            let gram_total: Vec<i64> = (0..dim)
                .map(|i| (0..dim).map(|j| self.lat.gram()[[i, j]] * total[j]).sum())
                .collect();
            let class: Vec<u8> = self
                .betas
                .iter()
                .map(|beta| character_class(beta, &gram_total, &np_rat, nprime))
                .collect();
            let mut point = Vec::with_capacity(dim + 1);
            point.push(Rational::from_integer(Integer::from(*n)));
            for (a, &t) in alpha.coords().iter().zip(total.iter()) {
                point.push(a + Rational::new(Integer::from(t), Integer::from(nprime)));
            }
            let pow = power_tables(&point, &self.max_exp);
            let count_rat = Rational::from_integer(Integer::from(*count));
            let row = by_class
                .entry(class)
                .or_insert_with(|| vec![Rational::zero(); self.index.len()]);
            for &pos in &self.pos_by_n[n] {
                let val = eval_with_tables(&self.polys[self.poly_of_pos[pos]], &pow);
                if !val.is_zero() {
                    row[pos] += val * &count_rat;
                }
            }
        }

        let zetas: Vec<CyclotomicElement> = (0..nprime)
            .map(|c| CyclotomicElement::root_of_unity(nprime, c as i64))
            .collect();
        let mut out =
            vec![vec![CyclotomicElement::zero(nprime); self.index.len()]; self.betas.len()];
        for (class, row) in &by_class {
            for (values, &c) in out.iter_mut().zip(class.iter()) {
                let zeta = &zetas[c as usize];
                for (value, r) in values.iter_mut().zip(row.iter()) {
                    if !r.is_zero() {
                        *value += &zeta.scale(r);
                    }
                }
            }
        }
        out
    }
}

/// `N' B(beta, u) mod N'` for an integral `G u`, as a residue in `0..N'`.
fn character_class(beta: &[Rational], gram_total: &[i64], np_rat: &Rational, nprime: u32) -> u8 {
    let mut acc = Rational::zero();
    for (c, &g) in beta.iter().zip(gram_total) {
        if g != 0 && !c.is_zero() {
            acc += c * Rational::from_integer(Integer::from(g));
        }
    }
    acc *= np_rat;
    debug_assert!(acc.is_integer(), "character exponent must be integral");
    let residue = acc.to_integer().mod_floor(&Integer::from(nprime));
    residue.to_u8().expect("residue below N'")
}

/// Powers `point[i]^e` for `e <= max_exp[i]`, shared by all polynomials.
fn power_tables(point: &[Rational], max_exp: &[u32]) -> Vec<Vec<Rational>> {
    point
        .iter()
        .zip(max_exp)
        .map(|(x, &m)| {
            let mut col = Vec::with_capacity(m as usize + 1);
            col.push(Rational::from_integer(Integer::from(1)));
            for e in 1..=m as usize {
                let next = &col[e - 1] * x;
                col.push(next);
            }
            col
        })
        .collect()
}

fn eval_with_tables(poly: &PPolynomial, pow: &[Vec<Rational>]) -> Rational {
    let mut acc = Rational::zero();
    for (expo, coeff) in poly.terms() {
        let mut term = coeff.clone();
        for (i, &e) in expo.iter().enumerate() {
            if e > 0 {
                term *= &pow[i][e as usize];
            }
        }
        acc += term;
    }
    acc
}

/// The vector of one pair, over the given index pairs.
pub fn theta_vector(
    lat: &GramLattice,
    alpha: &CosetRep,
    beta: &CosetRep,
    nprime: u32,
    index: &[IndexPair],
) -> Result<ThetaVector, RelationsError> {
    let vectors = theta_vectors(
        lat,
        std::slice::from_ref(alpha),
        std::slice::from_ref(beta),
        nprime,
        index,
    )?;
    Ok(vectors.into_iter().next().expect("one pair requested"))
}

/// All vectors for the given labels, alpha major and beta minor. Tuples are
/// enumerated once per alpha and shared across every `(p, n, beta)` entry.
pub fn theta_vectors(
    lat: &GramLattice,
    alphas: &[CosetRep],
    betas: &[CosetRep],
    nprime: u32,
    index: &[IndexPair],
) -> Result<Vec<ThetaVector>, RelationsError> {
    validate_labels(lat, alphas, betas, nprime)?;
    let ctx = SweepContext::new(lat, betas, nprime, index);
    let mut out = Vec::with_capacity(alphas.len() * betas.len());
    for alpha in alphas {
        let per_beta = ctx.sweep(alpha);
        collect_vectors(&mut out, alpha, betas, per_beta);
    }
    Ok(out)
}

/// As [`theta_vectors`], with the sweeps for distinct alphas distributed
/// over at most `threads` worker threads. The output is identical.
pub fn theta_vectors_threaded(
    lat: &GramLattice,
    alphas: &[CosetRep],
    betas: &[CosetRep],
    nprime: u32,
    index: &[IndexPair],
    threads: usize,
) -> Result<Vec<ThetaVector>, RelationsError> {
    let workers = threads.min(alphas.len()).max(1);
    if workers <= 1 {
        return theta_vectors(lat, alphas, betas, nprime, index);
    }
    validate_labels(lat, alphas, betas, nprime)?;
    let ctx = SweepContext::new(lat, betas, nprime, index);
    let mut per_alpha: Vec<Option<Vec<Vec<CyclotomicElement>>>> = vec![None; alphas.len()];
    std::thread::scope(|scope| {
        let ctx = &ctx;
        let handles: Vec<_> = (0..workers)
            .map(|w| {
                scope.spawn(move || {
                    let mut done = Vec::new();
                    let mut i = w;
                    while i < alphas.len() {
                        done.push((i, ctx.sweep(&alphas[i])));
                        i += workers;
                    }
                    done
                })
            })
            .collect();
        for handle in handles {
            for (i, swept) in handle.join().expect("sweep worker panicked") {
                per_alpha[i] = Some(swept);
            }
        }
    });
    let mut out = Vec::with_capacity(alphas.len() * betas.len());
    for (alpha, swept) in alphas.iter().zip(per_alpha) {
        collect_vectors(&mut out, alpha, betas, swept.expect("all alphas swept"));
    }
    Ok(out)
}

fn validate_labels(
    lat: &GramLattice,
    alphas: &[CosetRep],
    betas: &[CosetRep],
    nprime: u32,
) -> Result<(), RelationsError> {
    for alpha in alphas {
        if !lat.validate_alpha(alpha, nprime)? {
            return Err(RelationsError::AlphaNotAdmissible {
                alpha: alpha.clone(),
                nprime,
            });
        }
    }
    for beta in betas {
        if !beta_admissible(lat, beta, nprime) {
            return Err(RelationsError::BetaNotAdmissible {
                beta: beta.clone(),
                nprime,
            });
        }
    }
    Ok(())
}

fn collect_vectors(
    out: &mut Vec<ThetaVector>,
    alpha: &CosetRep,
    betas: &[CosetRep],
    per_beta: Vec<Vec<CyclotomicElement>>,
) {
    for (beta, values) in betas.iter().zip(per_beta) {
        out.push(ThetaVector {
            alpha: alpha.clone(),
            beta: beta.clone(),
            values,
        });
    }
}

/// The fixed normalization of all reported coefficient data: the common
/// nonzero prefactor `4^lambda lambda! (pi i)^{s(p)}` of the raw Taylor
/// coefficients is omitted, which rescales each coordinate of every vector
/// uniformly and so changes no relation.
pub const NORMALIZATION_NOTE: &str =
    "entries omit the common prefactor 4^lambda * lambda! * (pi*i)^s(p) of the raw Taylor coefficients";

/// SHA-256 of the Gram matrix in row-major order, as lowercase hex.
pub fn lattice_hash(lat: &GramLattice) -> String {
    let mut hasher = Sha256::new();
    hasher.update(lat.dim().to_string());
    for i in 0..lat.dim() {
        for j in 0..lat.dim() {
            hasher.update(":");
            hasher.update(lat.gram()[[i, j]].to_string());
        }
    }
    hasher
        .finalize()
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

/// Provenance recorded alongside a relation report.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ReportMetadata {
    pub lattice_hash: String,
    pub nprime: u32,
    pub p0: Vec<MultiIndex>,
    pub normalization: String,
}

impl ReportMetadata {
    pub fn new(lat: &GramLattice, nprime: u32, p0: Vec<MultiIndex>) -> Self {
        ReportMetadata {
            lattice_hash: lattice_hash(lat),
            nprime,
            p0,
            normalization: NORMALIZATION_NOTE.to_string(),
        }
    }
}

/// One discovered relation: the dependent series equals the stated
/// combination of previously accepted independent series.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Relation {
    pub dependent: (CosetRep, CosetRep),
    /// Nonzero coefficients over independent labels, in acceptance order.
    pub coefficients: Vec<((CosetRep, CosetRep), CyclotomicElement)>,
}

/// The complete outcome of a relation search.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RelationReport {
    /// Labels whose vectors were accepted as independent, in input order.
    pub independent: Vec<(CosetRep, CosetRep)>,
    pub relations: Vec<Relation>,
    pub rank: usize,
    pub metadata: ReportMetadata,
}

/// Processes the vectors in input order: each row either enlarges the rank
/// or is expressed uniquely over the previously accepted rows. The report is
/// deterministic, and `rank + relations.len()` equals the number of inputs.
pub fn find_relations(vectors: &[ThetaVector], metadata: ReportMetadata) -> RelationReport {
    let cols = vectors.first().map_or(0, |v| v.values.len());
    let order = vectors
        .first()
        .and_then(|v| v.values.first())
        .map_or(metadata.nprime.max(1), |e| e.order());
    let mut space = RowSpace::new(order, cols);
    let mut independent: Vec<(CosetRep, CosetRep)> = Vec::new();
    let mut relations = Vec::new();
    for vector in vectors {
        assert_eq!(vector.values.len(), cols, "vectors must share one index set");
        match space.insert(&vector.values) {
            Reduction::Independent => {
                independent.push((vector.alpha.clone(), vector.beta.clone()));
            }
            Reduction::Dependent(coeffs) => {
                let coefficients = independent
                    .iter()
                    .cloned()
                    .zip(coeffs)
                    .filter(|(_, c)| !c.is_zero())
                    .collect();
                relations.push(Relation {
                    dependent: (vector.alpha.clone(), vector.beta.clone()),
                    coefficients,
                });
            }
        }
    }
    RelationReport {
        independent,
        relations,
        rank: space.rank(),
        metadata,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::tests::{a2, a2a2, a3, d4, disc15, rat, rvec};
    use crate::p0search::find_p0;
    use crate::taylor::{hat_closure, multi_indices_with_sum};

    fn ball(dim: usize, max_s: u32) -> Vec<MultiIndex> {
        (0..=max_s)
            .flat_map(|s| multi_indices_with_sum(dim, s))
            .collect()
    }

    fn cyc_int(order: u32, n: i64) -> CyclotomicElement {
        CyclotomicElement::from_rational(order, rat(n, 1))
    }

    /// `4^lambda * lambda!` with `lambda = floor(s / 2)`, the rational part of
    /// the prefactor omitted by the normalization.
    fn prefactor_rational_part(s: u32) -> Rational {
        let lambda = s / 2;
        let mut f = Integer::from(1);
        for i in 1..=i64::from(lambda) {
            f *= Integer::from(4 * i);
        }
        Rational::from_integer(f)
    }

    fn full_index(lat: &GramLattice, nprime: u32, max_sum: u32) -> (Vec<MultiIndex>, Vec<IndexPair>) {
        let rescaled = lat.rescale(nprime);
        let p0 = find_p0(&rescaled, max_sum).unwrap();
        let hat = hat_closure(&p0);
        let index = index_set(&hat, lat.level(), nprime, lat.dim());
        (p0, index)
    }

    fn labels(lat: &GramLattice, nprime: u32) -> (Vec<CosetRep>, Vec<CosetRep>) {
        let alphas = admissible_alphas(lat, nprime).unwrap();
        let betas = lat.beta_reps(nprime).unwrap();
        (alphas, betas)
    }

    #[test]
    fn coefficient_bounds_match_closed_forms() {
        for s in 0..=16u32 {
            let p2 = MultiIndex::new(vec![s, 0]);
            let p3 = MultiIndex::new(vec![s, 0, 0]);
            let p4 = MultiIndex::new(vec![s, 0, 0, 0]);
            assert_eq!(n_bound(&p4, 2, 2, 4), 1 + s / 4, "d4 at s = {s}");
            assert_eq!(n_bound(&p2, 3, 3, 2), (3 + s) / 3, "a2 at s = {s}");
            assert_eq!(n_bound(&p3, 8, 2, 3), 6 + 2 * s, "a3 at s = {s}");
            assert_eq!(n_bound(&p4, 3, 3, 4), (6 + s) / 3, "two a2 blocks at s = {s}");
            assert_eq!(n_bound(&p2, 15, 3, 2), 8 * (3 + s), "disc 15 cubes at s = {s}");
            assert_eq!(n_bound(&p2, 15, 5, 2), 8 * (5 + s), "disc 15 fifth at s = {s}");
        }
        assert_eq!(n_bound(&MultiIndex::zero(4), 2, 2, 4), 1);
        assert_eq!(n_bound(&MultiIndex::new(vec![4, 2, 1, 1]), 2, 2, 4), 3);
    }

    #[test]
    fn index_set_cardinalities_and_order() {
        let cases: Vec<(GramLattice, u32, usize)> =
            vec![(d4(), 2, 258), (a2(), 3, 99), (a3(), 2, 635)];
        for (lat, nprime, want) in cases {
            let (_, index) = full_index(&lat, nprime, 10);
            assert_eq!(index.len(), want, "cardinality for level {}", lat.level());
            // p major in (s, lex), n minor and contiguous from zero.
            for w in index.windows(2) {
                if w[0].p == w[1].p {
                    assert_eq!(w[1].n, w[0].n + 1);
                } else {
                    assert!(w[0].p < w[1].p);
                    assert_eq!(w[1].n, 0);
                }
            }
            assert_eq!(index[0], IndexPair { p: MultiIndex::zero(lat.dim()), n: 0 });
        }
    }

    #[test]
    fn index_set_of_singleton_zero() {
        let index = index_set(&[MultiIndex::zero(4)], 2, 2, 4);
        assert_eq!(
            index,
            vec![
                IndexPair { p: MultiIndex::zero(4), n: 0 },
                IndexPair { p: MultiIndex::zero(4), n: 1 },
            ]
        );
    }

    #[test]
    fn pinned_entries() {
        // Zero pair at (p, n) = (0, 0): only the all-zero tuple, weight one.
        let lat = a2();
        let zero2 = CosetRep::zero(2);
        let index = vec![IndexPair { p: MultiIndex::zero(2), n: 0 }];
        let v = theta_vector(&lat, &zero2, &zero2, 3, &index).unwrap();
        assert_eq!(v.values, vec![CyclotomicElement::one(3)]);

        // A half-integral coset has no tuples below its per-slot minimum.
        let lat = d4();
        let half = CosetRep::new(rvec(&[(0, 1), (0, 1), (1, 2), (1, 2)]));
        let beta = &lat.beta_reps(2).unwrap()[2];
        let index = vec![IndexPair { p: MultiIndex::zero(4), n: 0 }];
        let v = theta_vector(&lat, &half, beta, 2, &index).unwrap();
        assert_eq!(v.values, vec![CyclotomicElement::zero(2)]);

        // 48 ordered pairs of lattice vectors have form sum 1 (24 roots,
        // either slot), each weighted by P = 1.
        let zero4 = CosetRep::zero(4);
        let index = vec![IndexPair { p: MultiIndex::zero(4), n: 1 }];
        let v = theta_vector(&lat, &zero4, &zero4, 2, &index).unwrap();
        assert_eq!(v.values, vec![cyc_int(2, 48)]);
    }

    /// Coefficient maps of the identities `theta_{a,b}^{N'} = theta_{a,0}^{N'}
    /// + theta_{0,b}^{N'} - theta_{0,0}^{N'}` for all nonzero (a, b).
    fn assert_product_identities(
        report: &RelationReport,
        alphas: &[CosetRep],
        betas: &[CosetRep],
        order: u32,
    ) {
        let expected_rank = alphas.len() + betas.len() - 1;
        assert_eq!(report.rank, expected_rank);
        assert_eq!(
            report.relations.len(),
            (alphas.len() - 1) * (betas.len() - 1)
        );
        let mut want_independent = Vec::new();
        for beta in betas {
            want_independent.push((alphas[0].clone(), beta.clone()));
        }
        for alpha in &alphas[1..] {
            want_independent.push((alpha.clone(), betas[0].clone()));
        }
        assert_eq!(report.independent, want_independent);
        let mut iter = report.relations.iter();
        for alpha in &alphas[1..] {
            for beta in &betas[1..] {
                let relation = iter.next().unwrap();
                assert_eq!(relation.dependent, (alpha.clone(), beta.clone()));
                assert_eq!(
                    relation.coefficients,
                    vec![
                        ((alphas[0].clone(), betas[0].clone()), cyc_int(order, -1)),
                        ((alphas[0].clone(), beta.clone()), cyc_int(order, 1)),
                        ((alpha.clone(), betas[0].clone()), cyc_int(order, 1)),
                    ]
                );
            }
        }
    }

    #[test]
    fn d4_squares_have_rank_seven_and_nine_identities() {
        let lat = d4();
        let (p0, index) = full_index(&lat, 2, 10);
        let (alphas, betas) = labels(&lat, 2);
        assert_eq!((alphas.len(), betas.len()), (4, 4));
        let vectors = theta_vectors(&lat, &alphas, &betas, 2, &index).unwrap();
        assert_eq!(vectors.len(), 16);
        // Entries of square vectors are rational, and integral up to the
        // rational part of the dropped prefactor: 4^lambda lambda! times
        // each entry is a plain integer (lambda = floor(s(p)/2)).
        for v in &vectors {
            for (pos, e) in v.values.iter().enumerate() {
                let r = e.to_rational().expect("order-2 entries are rational");
                let scaled = &r * prefactor_rational_part(index[pos].p.s());
                assert!(scaled.is_integer(), "entry {r} at {} not integral", index[pos]);
            }
        }
        let report = find_relations(&vectors, ReportMetadata::new(&lat, 2, p0));
        assert_product_identities(&report, &alphas, &betas, 2);
        assert_eq!(report.rank + report.relations.len(), vectors.len());
        assert_eq!(report.metadata.lattice_hash, lattice_hash(&lat));
    }

    #[test]
    fn a2_cubes_have_rank_five_and_four_identities() {
        let lat = a2();
        let (p0, index) = full_index(&lat, 3, 10);
        let (alphas, betas) = labels(&lat, 3);
        assert_eq!((alphas.len(), betas.len()), (3, 3));
        let vectors = theta_vectors(&lat, &alphas, &betas, 3, &index).unwrap();
        let report = find_relations(&vectors, ReportMetadata::new(&lat, 3, p0));
        assert_product_identities(&report, &alphas, &betas, 3);
    }

    #[test]
    fn a3_squares_have_rank_five_and_three_identities() {
        let lat = a3();
        let (p0, index) = full_index(&lat, 2, 10);
        let (alphas, betas) = labels(&lat, 2);
        assert_eq!((alphas.len(), betas.len()), (2, 4));
        let vectors = theta_vectors(&lat, &alphas, &betas, 2, &index).unwrap();
        let report = find_relations(&vectors, ReportMetadata::new(&lat, 2, p0));
        assert_product_identities(&report, &alphas, &betas, 2);
    }

    #[test]
    fn disc15_cubes_are_independent_on_a_small_slice() {
        // Independence needs no separating multi-index set: full rank on any
        // coordinate slice certifies it. Low coefficient indices suffice.
        let lat = disc15();
        let ps = ball(2, 6);
        let mut index = Vec::new();
        for p in &ps {
            for n in 0..=2u32 {
                index.push(IndexPair { p: p.clone(), n });
            }
        }
        let (alphas, betas) = labels(&lat, 3);
        assert_eq!((alphas.len(), betas.len()), (3, 3));
        let vectors = theta_vectors(&lat, &alphas, &betas, 3, &index).unwrap();
        let report = find_relations(&vectors, ReportMetadata::new(&lat, 3, vec![]));
        assert_eq!(report.rank, 9);
        assert!(report.relations.is_empty());
    }

    #[test]
    fn relations_reconstruct_dependent_vectors_exactly() {
        let lat = a2();
        let (p0, index) = full_index(&lat, 3, 10);
        let (alphas, betas) = labels(&lat, 3);
        let vectors = theta_vectors(&lat, &alphas, &betas, 3, &index).unwrap();
        let report = find_relations(&vectors, ReportMetadata::new(&lat, 3, p0));
        let lookup = |label: &(CosetRep, CosetRep)| {
            vectors
                .iter()
                .find(|v| (v.alpha.clone(), v.beta.clone()) == *label)
                .unwrap()
        };
        for relation in &report.relations {
            let dependent = lookup(&relation.dependent);
            let mut combo = vec![CyclotomicElement::zero(3); index.len()];
            for (label, coeff) in &relation.coefficients {
                for (acc, value) in combo.iter_mut().zip(&lookup(label).values) {
                    *acc += &(coeff * value);
                }
            }
            assert_eq!(combo, dependent.values);
        }
    }

    #[test]
    fn rank_is_invariant_under_input_order() {
        let lat = d4();
        let (p0, index) = full_index(&lat, 2, 10);
        let (alphas, betas) = labels(&lat, 2);
        let mut vectors = theta_vectors(&lat, &alphas, &betas, 2, &index).unwrap();
        vectors.reverse();
        let report = find_relations(&vectors, ReportMetadata::new(&lat, 2, p0));
        assert_eq!(report.rank, 7);
        assert_eq!(report.relations.len(), 9);
    }

    #[test]
    fn representatives_do_not_matter() {
        let lat = d4();
        let ps = hat_closure(&ball(4, 2));
        let index = index_set(&ps, 2, 2, 4);
        let alpha = CosetRep::new(rvec(&[(0, 1), (0, 1), (1, 2), (1, 2)]));
        let beta = CosetRep::new(rvec(&[(1, 2), (0, 1), (0, 1), (0, 1)]));
        let base = theta_vector(&lat, &alpha, &beta, 2, &index).unwrap();
        // Integral shift of alpha.
        let shifted = CosetRep::new(rvec(&[(3, 1), (-2, 1), (1, 2), (5, 2)]));
        let v = theta_vector(&lat, &shifted, &beta, 2, &index).unwrap();
        assert_eq!(v.values, base.values);
        // beta + (1, 0, 0, 0) + (0, 0, 1/2, 1/2), both dual vectors.
        let beta_shift = CosetRep::new(rvec(&[(3, 2), (0, 1), (1, 2), (1, 2)]));
        let v = theta_vector(&lat, &alpha, &beta_shift, 2, &index).unwrap();
        assert_eq!(v.values, base.values);

        let lat = a2();
        let ps = hat_closure(&ball(2, 3));
        let index = index_set(&ps, 3, 3, 2);
        let alpha = CosetRep::new(rvec(&[(2, 3), (1, 3)]));
        let beta = CosetRep::new(rvec(&[(1, 3), (1, 3)]));
        let base = theta_vector(&lat, &alpha, &beta, 3, &index).unwrap();
        let shifted = CosetRep::new(rvec(&[(-1, 3), (4, 3)]));
        let v = theta_vector(&lat, &shifted, &beta, 3, &index).unwrap();
        assert_eq!(v.values, base.values);
        // beta + (2/3, 1/3), a dual vector of a2.
        let beta_shift = CosetRep::new(rvec(&[(1, 1), (2, 3)]));
        let v = theta_vector(&lat, &alpha, &beta_shift, 3, &index).unwrap();
        assert_eq!(v.values, base.values);
    }

    #[test]
    fn threaded_assembly_matches_sequential() {
        let lat = d4();
        let ps = hat_closure(&ball(4, 2));
        let index = index_set(&ps, 2, 2, 4);
        let (alphas, betas) = labels(&lat, 2);
        let sequential = theta_vectors(&lat, &alphas, &betas, 2, &index).unwrap();
        for threads in [2, 3, 8] {
            let threaded =
                theta_vectors_threaded(&lat, &alphas, &betas, 2, &index, threads).unwrap();
            assert_eq!(threaded, sequential);
        }
    }

    #[test]
    fn inadmissible_labels_are_rejected() {
        let lat = a3();
        let index = vec![IndexPair { p: MultiIndex::zero(3), n: 0 }];
        // Some dual coset of a3 has 2 Q not integral.
        let bad_alpha = lat
            .dual_coset_reps()
            .into_iter()
            .find(|r| !lat.validate_alpha(r, 2).unwrap())
            .unwrap();
        let zero = CosetRep::zero(3);
        assert!(matches!(
            theta_vector(&lat, &bad_alpha, &zero, 2, &index),
            Err(RelationsError::AlphaNotAdmissible { .. })
        ));
        let outside = CosetRep::new(rvec(&[(1, 5), (0, 1), (0, 1)]));
        assert!(matches!(
            theta_vector(&lat, &outside, &zero, 2, &index),
            Err(RelationsError::Lattice(LatticeError::NotInDual))
        ));
        let lat = d4();
        let index = vec![IndexPair { p: MultiIndex::zero(4), n: 0 }];
        let zero = CosetRep::zero(4);
        let bad_beta = CosetRep::new(rvec(&[(0, 1), (0, 1), (0, 1), (1, 4)]));
        assert!(matches!(
            theta_vector(&lat, &zero, &bad_beta, 2, &index),
            Err(RelationsError::BetaNotAdmissible { .. })
        ));
    }

    #[test]
    fn admissible_alpha_counts() {
        assert_eq!(admissible_alphas(&d4(), 2).unwrap().len(), 4);
        assert_eq!(admissible_alphas(&a2(), 3).unwrap().len(), 3);
        assert_eq!(admissible_alphas(&a3(), 2).unwrap().len(), 2);
        assert_eq!(admissible_alphas(&a2a2(), 3).unwrap().len(), 9);
        assert_eq!(admissible_alphas(&disc15(), 3).unwrap().len(), 3);
        assert_eq!(admissible_alphas(&disc15(), 5).unwrap().len(), 5);
    }

    #[test]
    fn hash_distinguishes_lattices() {
        assert_eq!(lattice_hash(&d4()).len(), 64);
        assert_eq!(lattice_hash(&d4()), lattice_hash(&d4()));
        assert_ne!(lattice_hash(&d4()), lattice_hash(&a2a2()));
    }
}
