//! Positive definite even integral lattices given by a Gram matrix.
//!
//! The lattice is `L = Z^n` with bilinear form `B(v, w) = v G w^T` and
//! quadratic form `Q(v) = B(v, v)/2`; the dual is `L# = G^{-1} Z^n`. All
//! invariants (determinant, level, inverse Gram, Smith normal form) are
//! computed exactly at construction, after which the value is immutable and
//! freely shareable across threads.
//!
//! Coset representatives of the discriminant group `L#/L` and of the groups
//! `(L# + (1/N')L)/L#` are generated deterministically from the Smith normal
//! form, with every coordinate normalized into `[0, 1)`.

use crate::exact::snf::{smith_normal_form, SmithNormalForm};
use crate::exact::Mat;
use crate::{Integer, Rational};
use num_integer::Integer as _;
use num_traits::{One, Signed, Zero};
use std::fmt;

/// Errors from lattice construction and representative validation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LatticeError {
    /// The Gram matrix is not square, or a row has the wrong length.
    NotSquare,
    NotSymmetric {
        row: usize,
        col: usize,
    },
    /// Diagonal entry at `index` is odd, so the lattice is not even.
    OddDiagonal {
        index: usize,
    },
    /// The leading principal minor of the given order is not positive.
    NotPositiveDefinite {
        minor: usize,
    },
    /// A vector that must lie in the dual lattice does not.
    NotInDual,
    /// `N'` must divide the level for beta representatives to exist.
    PowerDoesNotDivideLevel {
        nprime: u32,
        level: u32,
    },
    /// A user-supplied box constant `c` fails the certificate
    /// `c G - 2 I` positive definite, so `|x|^2 <= c Q(x)` is not proven.
    ConstantNotCertified,
}

impl fmt::Display for LatticeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LatticeError::NotSquare => write!(f, "gram matrix must be square"),
            LatticeError::NotSymmetric { row, col } => {
                write!(f, "gram matrix not symmetric at ({row}, {col})")
            }
            LatticeError::OddDiagonal { index } => {
                write!(f, "gram diagonal entry {index} is odd; lattice must be even")
            }
            LatticeError::NotPositiveDefinite { minor } => {
                write!(f, "leading principal minor {minor} is not positive")
            }
            LatticeError::NotInDual => write!(f, "vector is not in the dual lattice"),
            LatticeError::PowerDoesNotDivideLevel { nprime, level } => {
                write!(f, "power {nprime} does not divide the lattice level {level}")
            }
            LatticeError::ConstantNotCertified => {
                write!(f, "box constant is not certified: c*G - 2*I is not positive definite")
            }
        }
    }
}

impl std::error::Error for LatticeError {}

/// A coset representative, as rational coordinates in the standard basis.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct CosetRep {
    coords: Vec<Rational>,
}

impl CosetRep {
    pub fn new(coords: Vec<Rational>) -> Self {
        CosetRep { coords }
    }

    pub fn zero(dim: usize) -> Self {
        CosetRep {
            coords: vec![Rational::zero(); dim],
        }
    }

    pub fn coords(&self) -> &[Rational] {
        &self.coords
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn is_integral(&self) -> bool {
        self.coords.iter().all(|c| c.is_integer())
    }

    /// The representative with every coordinate reduced into `[0, 1)`.
    pub fn normalized(&self) -> CosetRep {
        CosetRep {
            coords: self.coords.iter().map(|c| c - c.floor()).collect(),
        }
    }

    /// Whether the two representatives agree modulo `Z^n`.
    pub fn same_coset(&self, other: &CosetRep) -> bool {
        self.dim() == other.dim()
            && self
                .coords
                .iter()
                .zip(&other.coords)
                .all(|(a, b)| (a - b).is_integer())
    }
}

impl fmt::Display for CosetRep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.coords.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

/// A positive definite even integral lattice with cached invariants.
#[derive(Debug)]
pub struct GramLattice {
    dim: usize,
    gram: Mat<i64>,
    det: Integer,
    level: u32,
    inv: Mat<Rational>,
    snf: SmithNormalForm,
    /// A certified override for the enumeration box constant, see
    /// [`GramLattice::with_enumeration_constant`].
    c_hint: Option<Rational>,
}

impl GramLattice {
    /// Validates and constructs a lattice from Gram matrix rows.
    ///
    /// Checks: squareness, symmetry, even diagonal, positive definiteness
    /// (every leading principal minor positive, computed exactly).
    pub fn new(rows: Vec<Vec<i64>>) -> Result<Self, LatticeError> {
        let dim = rows.len();
        if dim == 0 || rows.iter().any(|r| r.len() != dim) {
            return Err(LatticeError::NotSquare);
        }
        for i in 0..dim {
            for j in 0..i {
                if rows[i][j] != rows[j][i] {
                    return Err(LatticeError::NotSymmetric { row: i, col: j });
                }
            }
            if rows[i][i].rem_euclid(2) != 0 {
                return Err(LatticeError::OddDiagonal { index: i });
            }
        }
        let gram = Mat::from_rows(rows);
        let minors = leading_principal_minors(&gram);
        for (k, m) in minors.iter().enumerate() {
            if !m.is_positive() {
                return Err(LatticeError::NotPositiveDefinite { minor: k + 1 });
            }
        }
        let det = minors.last().expect("dim >= 1").clone();
        let big = Mat::from_rows(
            (0..dim)
                .map(|i| (0..dim).map(|j| Integer::from(gram[[i, j]])).collect())
                .collect(),
        );
        let snf = smith_normal_form(&big);
        debug_assert_eq!(
            snf.diagonal().iter().product::<Integer>(),
            det,
            "SNF invariant factors must multiply to the determinant"
        );
        let inv = invert_symmetric(&gram, dim);
        let level = level_from_inverse(&inv, dim);
        Ok(GramLattice {
            dim,
            gram,
            det,
            level,
            inv,
            snf,
            c_hint: None,
        })
    }

    /// Installs a user-supplied enumeration box constant after certifying
    /// it: `|x|^2 <= c Q(x)` holds for all real `x` if and only if
    /// `c G - 2 I` is positive semidefinite, checked here in the strict form
    /// via exact leading principal minors. A certified tighter constant
    /// shrinks every enumeration box; the output never changes.
    pub fn with_enumeration_constant(mut self, c: Rational) -> Result<Self, LatticeError> {
        let two = Rational::from_integer(Integer::from(2));
        let mut m = Mat::from_fn(self.dim, self.dim, |i, j| {
            let entry = &c * Rational::from_integer(Integer::from(self.gram[[i, j]]));
            if i == j {
                entry - &two
            } else {
                entry
            }
        });
        // Gaussian elimination without pivoting: strict positive
        // definiteness is equivalent to every pivot being positive.
        for k in 0..self.dim {
            if !m[[k, k]].is_positive() {
                return Err(LatticeError::ConstantNotCertified);
            }
            for i in (k + 1)..self.dim {
                let factor = &m[[i, k]] / &m[[k, k]];
                for j in k..self.dim {
                    let sub = &factor * &m[[k, j]];
                    m[[i, j]] -= sub;
                }
            }
        }
        self.c_hint = Some(c);
        Ok(self)
    }

    /// The certified override installed by
    /// [`GramLattice::with_enumeration_constant`], if any.
    pub fn enumeration_constant(&self) -> Option<&Rational> {
        self.c_hint.as_ref()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn gram(&self) -> &Mat<i64> {
        &self.gram
    }

    pub fn det(&self) -> &Integer {
        &self.det
    }

    /// The level: the smallest `N >= 1` with `N * Q(v)` integral for every
    /// dual vector `v`; equivalently the smallest `N` making `N G^{-1}`
    /// integral with even diagonal.
    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn gram_inverse(&self) -> &Mat<Rational> {
        &self.inv
    }

    pub fn snf(&self) -> &SmithNormalForm {
        &self.snf
    }

    /// `Q(v) = v G v^T / 2`.
    ///
    /// # Panics
    /// Panics on a dimension mismatch.
    pub fn quad_value(&self, v: &[Rational]) -> Rational {
        let b = self.bilinear_value(v, v);
        b / Rational::from_integer(Integer::from(2))
    }

    /// `B(v, w) = v G w^T`.
    ///
    /// # Panics
    /// Panics on a dimension mismatch.
    pub fn bilinear_value(&self, v: &[Rational], w: &[Rational]) -> Rational {
        assert_eq!(v.len(), self.dim, "vector length mismatch");
        assert_eq!(w.len(), self.dim, "vector length mismatch");
        let mut acc = Rational::zero();
        for i in 0..self.dim {
            if v[i].is_zero() {
                continue;
            }
            let mut row = Rational::zero();
            for j in 0..self.dim {
                if !w[j].is_zero() {
                    row += Rational::from_integer(Integer::from(self.gram[[i, j]])) * &w[j];
                }
            }
            acc += &v[i] * row;
        }
        acc
    }

    /// Whether `v` lies in the dual lattice, i.e. `G v` is integral.
    pub fn is_dual_vector(&self, v: &[Rational]) -> bool {
        assert_eq!(v.len(), self.dim, "vector length mismatch");
        (0..self.dim).all(|i| {
            let mut acc = Rational::zero();
            for j in 0..self.dim {
                if !v[j].is_zero() {
                    acc += Rational::from_integer(Integer::from(self.gram[[i, j]])) * &v[j];
                }
            }
            acc.is_integer()
        })
    }

    /// The lattice with Gram matrix `N' G` on the same underlying `Z^n`.
    /// An installed box constant rescales to `c / N'`, which certifies for
    /// the rescaled form exactly when `c` certifies for the original.
    pub fn rescale(&self, nprime: u32) -> GramLattice {
        assert!(nprime >= 1);
        let rows = (0..self.dim)
            .map(|i| {
                (0..self.dim)
                    .map(|j| {
                        self.gram[[i, j]]
                            .checked_mul(i64::from(nprime))
                            .expect("rescaled gram entry overflows i64")
                    })
                    .collect()
            })
            .collect();
        let mut out = GramLattice::new(rows).expect("rescaling preserves validity");
        out.c_hint = self
            .c_hint
            .as_ref()
            .map(|c| c / Rational::from_integer(Integer::from(nprime)));
        out
    }

    /// Deterministic representatives of `L#/L`, `det(G)` of them, the zero
    /// coset first, every coordinate in `[0, 1)`.
    ///
    /// With the Smith normal form `D = U G V`, the classes are exactly
    /// `V D^{-1} c` for `c` ranging over the box `0 <= c_i < d_i`.
    pub fn dual_coset_reps(&self) -> Vec<CosetRep> {
        let d = self.snf.diagonal();
        let radices: Vec<u64> = d
            .iter()
            .map(|x| u64::try_from(x).expect("positive invariant factor"))
            .collect();
        let mut reps = Vec::new();
        let mut c = vec![0u64; self.dim];
        loop {
            let coords: Vec<Rational> = (0..self.dim)
                .map(|i| {
                    let mut acc = Rational::zero();
                    for k in 0..self.dim {
                        if c[k] != 0 {
                            let num = &self.snf.v[[i, k]] * Integer::from(c[k]);
                            acc += Rational::new(num, d[k].clone());
                        }
                    }
                    &acc - acc.floor()
                })
                .collect();
            reps.push(CosetRep::new(coords));
            // Odometer increment, last index fastest.
            let mut k = self.dim;
            loop {
                if k == 0 {
                    return reps;
                }
                k -= 1;
                c[k] += 1;
                if c[k] < radices[k] {
                    break;
                }
                c[k] = 0;
            }
        }
    }

    /// Deterministic representatives of `(L# + (1/N')L)/L#`, each of the
    /// form `w/N'` with `w` integral, zero first, coordinates in `[0, 1)`.
    ///
    /// Writing `D = U G V`, the quotient is parametrized by `V y / N'` with
    /// `0 <= y_i < N'/gcd(d_i, N')`.
    pub fn beta_reps(&self, nprime: u32) -> Result<Vec<CosetRep>, LatticeError> {
        if nprime == 0 || self.level % nprime != 0 {
            return Err(LatticeError::PowerDoesNotDivideLevel {
                nprime,
                level: self.level,
            });
        }
        let np = Integer::from(nprime);
        let d = self.snf.diagonal();
        let radices: Vec<u64> = d
            .iter()
            .map(|di| {
                let g = di.gcd(&np);
                u64::try_from(&np / g).expect("positive radix")
            })
            .collect();
        let mut reps = Vec::new();
        let mut y = vec![0u64; self.dim];
        loop {
            let coords: Vec<Rational> = (0..self.dim)
                .map(|i| {
                    let mut acc = Integer::zero();
                    for k in 0..self.dim {
                        if y[k] != 0 {
                            acc += &self.snf.v[[i, k]] * Integer::from(y[k]);
                        }
                    }
                    let r = Rational::new(acc, np.clone());
                    &r - r.floor()
                })
                .collect();
            reps.push(CosetRep::new(coords));
            let mut k = self.dim;
            loop {
                if k == 0 {
                    return Ok(reps);
                }
                k -= 1;
                y[k] += 1;
                if y[k] < radices[k] {
                    break;
                }
                y[k] = 0;
            }
        }
    }

    /// Whether `N' Q(alpha)` is integral; `alpha` must lie in the dual.
    pub fn validate_alpha(&self, alpha: &CosetRep, nprime: u32) -> Result<bool, LatticeError> {
        if alpha.dim() != self.dim || !self.is_dual_vector(alpha.coords()) {
            return Err(LatticeError::NotInDual);
        }
        let q = self.quad_value(alpha.coords());
        Ok((q * Rational::from_integer(Integer::from(nprime))).is_integer())
    }
}

/// All leading principal minors, exactly, by fraction-free elimination
/// without pivoting: after step `k` the `(k, k)` entry equals the k-th
/// minor. A zero pivot means some minor vanishes, reported as minor 0 at
/// that index.
fn leading_principal_minors(gram: &Mat<i64>) -> Vec<Integer> {
    let n = gram.rows();
    let mut m = Mat::filled(n, n, Integer::zero());
    for i in 0..n {
        for j in 0..n {
            m[[i, j]] = Integer::from(gram[[i, j]]);
        }
    }
    let mut minors = Vec::with_capacity(n);
    let mut prev = Integer::one();
    for k in 0..n {
        if m[[k, k]].is_zero() {
            // The k-th minor is zero; elimination cannot continue, and the
            // matrix is certainly not positive definite.
            minors.push(Integer::zero());
            return minors;
        }
        minors.push(m[[k, k]].clone());
        for i in k + 1..n {
            for j in k + 1..n {
                let num = &m[[i, j]] * &m[[k, k]] - &m[[i, k]] * &m[[k, j]];
                m[[i, j]] = num / &prev;
            }
        }
        prev = m[[k, k]].clone();
    }
    minors
}

/// Exact inverse of a nonsingular symmetric integer matrix by Gauss-Jordan
/// over the rationals.
fn invert_symmetric(gram: &Mat<i64>, n: usize) -> Mat<Rational> {
    let mut a = Mat::filled(n, 2 * n, Rational::zero());
    for i in 0..n {
        for j in 0..n {
            a[[i, j]] = Rational::from_integer(Integer::from(gram[[i, j]]));
        }
        a[[i, n + i]] = Rational::one();
    }
    for col in 0..n {
        let pivot = (col..n)
            .find(|&i| !a[[i, col]].is_zero())
            .expect("matrix is nonsingular");
        if pivot != col {
            for j in 0..2 * n {
                let x = a[[col, j]].clone();
                a[[col, j]] = std::mem::replace(&mut a[[pivot, j]], x);
            }
        }
        let inv = a[[col, col]].recip();
        for j in col..2 * n {
            a[[col, j]] = &a[[col, j]] * &inv;
        }
        for i in 0..n {
            if i != col && !a[[i, col]].is_zero() {
                let f = a[[i, col]].clone();
                for j in col..2 * n {
                    let t = &f * &a[[col, j]];
                    a[[i, j]] -= t;
                }
            }
        }
    }
    let mut out = Mat::filled(n, n, Rational::zero());
    for i in 0..n {
        for j in 0..n {
            out[[i, j]] = a[[i, n + j]].clone();
        }
    }
    out
}

/// Smallest `N` with `N G^{-1}` integral and even on the diagonal: the lcm
/// `N0` of all entry denominators, doubled when some diagonal entry of
/// `N0 G^{-1}` stays odd (odd multiples of `N0` can never fix parity).
fn level_from_inverse(inv: &Mat<Rational>, n: usize) -> u32 {
    let mut n0 = Integer::one();
    for i in 0..n {
        for j in 0..n {
            n0 = n0.lcm(inv[[i, j]].denom());
        }
    }
    let mut needs_double = false;
    for i in 0..n {
        let scaled = &inv[[i, i]] * Rational::from_integer(n0.clone());
        debug_assert!(scaled.is_integer());
        if scaled.to_integer().is_odd() {
            needs_double = true;
            break;
        }
    }
    let level = if needs_double { n0 * Integer::from(2) } else { n0 };
    u32::try_from(&level).expect("level exceeds u32")
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use proptest::prelude::*;

    pub(crate) fn rat(n: i64, d: i64) -> Rational {
        Rational::new(Integer::from(n), Integer::from(d))
    }

    pub(crate) fn rvec(entries: &[(i64, i64)]) -> Vec<Rational> {
        entries.iter().map(|&(n, d)| rat(n, d)).collect()
    }

    pub(crate) fn d4() -> GramLattice {
        GramLattice::new(vec![
            vec![2, -1, 0, 0],
            vec![-1, 2, -1, -1],
            vec![0, -1, 2, 0],
            vec![0, -1, 0, 2],
        ])
        .unwrap()
    }

    pub(crate) fn a2() -> GramLattice {
        GramLattice::new(vec![vec![2, -1], vec![-1, 2]]).unwrap()
    }

    pub(crate) fn a3() -> GramLattice {
        GramLattice::new(vec![vec![2, -1, 0], vec![-1, 2, -1], vec![0, -1, 2]]).unwrap()
    }

    pub(crate) fn a2a2() -> GramLattice {
        GramLattice::new(vec![
            vec![2, -1, 0, 0],
            vec![-1, 2, 0, 0],
            vec![0, 0, 2, -1],
            vec![0, 0, -1, 2],
        ])
        .unwrap()
    }

    pub(crate) fn disc15() -> GramLattice {
        GramLattice::new(vec![vec![2, 1], vec![1, 8]]).unwrap()
    }

    #[test]
    fn construction_rejects_bad_input() {
        assert_eq!(
            GramLattice::new(vec![vec![2, 0], vec![0]]).unwrap_err(),
            LatticeError::NotSquare
        );
        assert_eq!(
            GramLattice::new(vec![vec![2, 1], vec![0, 2]]).unwrap_err(),
            LatticeError::NotSymmetric { row: 1, col: 0 }
        );
        assert_eq!(
            GramLattice::new(vec![vec![2, 0], vec![0, 3]]).unwrap_err(),
            LatticeError::OddDiagonal { index: 1 }
        );
        assert_eq!(
            GramLattice::new(vec![vec![2, 3], vec![3, 2]]).unwrap_err(),
            LatticeError::NotPositiveDefinite { minor: 2 }
        );
        assert_eq!(
            GramLattice::new(vec![vec![0, 0], vec![0, 2]]).unwrap_err(),
            LatticeError::NotPositiveDefinite { minor: 1 }
        );
    }

    #[test]
    fn enumeration_constant_is_certified_exactly() {
        assert!(d4().enumeration_constant().is_none());
        // The sharp constant for this basis is 2/(2 - sqrt(3)) ~ 7.4641.
        let lat = d4().with_enumeration_constant(rat(8, 1)).unwrap();
        assert_eq!(lat.enumeration_constant(), Some(&rat(8, 1)));
        assert_eq!(
            d4().with_enumeration_constant(rat(7, 1)).unwrap_err(),
            LatticeError::ConstantNotCertified
        );
        assert_eq!(
            a2().with_enumeration_constant(rat(0, 1)).unwrap_err(),
            LatticeError::ConstantNotCertified
        );
        // Rescaling divides the certified constant along with the form.
        let rescaled = lat.rescale(2);
        assert_eq!(rescaled.enumeration_constant(), Some(&rat(4, 1)));
        assert!(d4().rescale(2).enumeration_constant().is_none());
    }

    #[test]
    fn determinants() {
        assert_eq!(d4().det(), &Integer::from(4));
        assert_eq!(a2().det(), &Integer::from(3));
        assert_eq!(a3().det(), &Integer::from(4));
        assert_eq!(a2a2().det(), &Integer::from(9));
        assert_eq!(disc15().det(), &Integer::from(15));
    }

    #[test]
    fn quad_and_bilinear_values() {
        let l = d4();
        assert_eq!(
            l.quad_value(&rvec(&[(1, 1), (0, 1), (0, 1), (0, 1)])),
            rat(1, 1)
        );
        assert_eq!(
            l.quad_value(&rvec(&[(0, 1), (0, 1), (1, 2), (1, 2)])),
            rat(1, 2)
        );
        assert_eq!(l.quad_value(&vec![Rational::zero(); 4]), rat(0, 1));
        assert_eq!(
            l.bilinear_value(
                &rvec(&[(1, 1), (0, 1), (0, 1), (0, 1)]),
                &rvec(&[(0, 1), (1, 1), (0, 1), (0, 1)])
            ),
            rat(-1, 1)
        );
    }

    #[test]
    fn levels() {
        assert_eq!(d4().level(), 2);
        assert_eq!(a2().level(), 3);
        assert_eq!(a3().level(), 8);
        assert_eq!(a2a2().level(), 3);
        assert_eq!(disc15().level(), 15);
        for m in 1..=6 {
            let l = GramLattice::new(vec![vec![2 * m]]).unwrap();
            assert_eq!(i64::from(l.level()), 4 * m, "rank-1 with Q = {m} x^2");
        }
    }

    /// Brute-force level oracle: try every candidate up to 2 det(G).
    fn level_oracle(l: &GramLattice) -> u32 {
        let bound = 2 * u32::try_from(l.det()).unwrap();
        'outer: for n in 1..=bound {
            let nr = Rational::from_integer(Integer::from(n));
            for i in 0..l.dim() {
                for j in 0..l.dim() {
                    let e = &nr * &l.gram_inverse()[[i, j]];
                    if !e.is_integer() {
                        continue 'outer;
                    }
                    if i == j && e.to_integer().is_odd() {
                        continue 'outer;
                    }
                }
            }
            return n;
        }
        panic!("level not found below 2 det");
    }

    #[test]
    fn level_matches_brute_force() {
        for l in [d4(), a2(), a3(), a2a2(), disc15()] {
            assert_eq!(l.level(), level_oracle(&l));
        }
        for l in [d4().rescale(2), a2().rescale(3), disc15().rescale(3)] {
            assert_eq!(l.level(), level_oracle(&l));
        }
    }

    #[test]
    fn rescaling() {
        assert_eq!(d4().rescale(2).det(), &Integer::from(64));
        assert_eq!(a2().rescale(3).det(), &Integer::from(27));
        let same = a3().rescale(1);
        assert_eq!(same.gram(), a3().gram());
        // level(rescale(N')) divides N' * level.
        for (l, np) in [(d4(), 2u32), (a2(), 3), (a3(), 2), (a3(), 4), (a3(), 8)] {
            let r = l.rescale(np);
            assert_eq!(np * l.level() % r.level(), 0, "rescaled level divides");
        }
    }

    #[test]
    fn dual_reps_match_handpicked_d4_and_a2() {
        let reps = d4().dual_coset_reps();
        assert_eq!(reps.len(), 4);
        let handpicked = [
            rvec(&[(0, 1), (0, 1), (0, 1), (0, 1)]),
            rvec(&[(0, 1), (0, 1), (1, 2), (1, 2)]),
            rvec(&[(1, 2), (0, 1), (0, 1), (1, 2)]),
            rvec(&[(1, 2), (0, 1), (1, 2), (0, 1)]),
        ];
        for h in &handpicked {
            let hrep = CosetRep::new(h.clone());
            assert_eq!(
                reps.iter().filter(|r| r.same_coset(&hrep)).count(),
                1,
                "exactly one generated rep matches {hrep}"
            );
        }
        let reps = a2().dual_coset_reps();
        assert_eq!(reps.len(), 3);
        for h in [
            rvec(&[(0, 1), (0, 1)]),
            rvec(&[(2, 3), (1, 3)]),
            rvec(&[(1, 3), (2, 3)]),
        ] {
            let hrep = CosetRep::new(h);
            assert_eq!(reps.iter().filter(|r| r.same_coset(&hrep)).count(), 1);
        }
    }

    #[test]
    fn dual_reps_are_well_formed() {
        for l in [d4(), a2(), a3(), a2a2(), disc15()] {
            let reps = l.dual_coset_reps();
            assert_eq!(Integer::from(reps.len()), *l.det());
            assert!(reps[0].coords().iter().all(Rational::is_zero), "zero first");
            for r in &reps {
                assert!(l.is_dual_vector(r.coords()), "rep in dual");
                assert!(
                    r.coords().iter().all(|c| !c.is_negative() && c < &rat(1, 1)),
                    "coords in [0,1)"
                );
            }
            for i in 0..reps.len() {
                for j in 0..i {
                    assert!(!reps[i].same_coset(&reps[j]), "reps pairwise distinct");
                }
            }
        }
    }

    #[test]
    fn beta_reps_counts_and_shape() {
        let cases: Vec<(GramLattice, u32, usize)> = vec![
            (d4(), 2, 4),
            (a2(), 3, 3),
            (a3(), 2, 4),
            (disc15(), 3, 3),
            (disc15(), 5, 5),
            (d4(), 1, 1),
        ];
        for (l, np, want) in cases {
            let reps = l.beta_reps(np).unwrap();
            assert_eq!(reps.len(), want, "count for N' = {np}");
            assert!(reps[0].coords().iter().all(Rational::is_zero));
            let npr = Rational::from_integer(Integer::from(np));
            for r in &reps {
                for c in r.coords() {
                    assert!((c * &npr).is_integer(), "coords have denominator N'");
                }
            }
            // Pairwise inequivalent modulo the dual lattice.
            for i in 0..reps.len() {
                for j in 0..i {
                    let diff: Vec<Rational> = reps[i]
                        .coords()
                        .iter()
                        .zip(reps[j].coords())
                        .map(|(a, b)| a - b)
                        .collect();
                    assert!(!l.is_dual_vector(&diff), "distinct mod dual");
                }
            }
        }
        assert!(matches!(
            d4().beta_reps(3),
            Err(LatticeError::PowerDoesNotDivideLevel { .. })
        ));
    }

    #[test]
    fn beta_reps_match_handpicked_d4() {
        let l = d4();
        let reps = l.beta_reps(2).unwrap();
        let handpicked = [
            rvec(&[(0, 1), (0, 1), (0, 1), (0, 1)]),
            rvec(&[(1, 2), (1, 2), (1, 2), (1, 2)]),
            rvec(&[(1, 2), (0, 1), (0, 1), (0, 1)]),
            rvec(&[(0, 1), (1, 2), (0, 1), (0, 1)]),
        ];
        for h in &handpicked {
            let matched = reps
                .iter()
                .filter(|r| {
                    let diff: Vec<Rational> = r
                        .coords()
                        .iter()
                        .zip(h)
                        .map(|(a, b)| a - b)
                        .collect();
                    l.is_dual_vector(&diff)
                })
                .count();
            assert_eq!(matched, 1, "one rep equivalent mod L# to the list entry");
        }
    }

    #[test]
    fn total_theta_count_identity() {
        // |L#/L| * |(1/N)L/L#| = N^n at full level for D4 and A2.
        let l = d4();
        assert_eq!(
            l.dual_coset_reps().len() * l.beta_reps(2).unwrap().len(),
            2usize.pow(4)
        );
        let l = a2();
        assert_eq!(
            l.dual_coset_reps().len() * l.beta_reps(3).unwrap().len(),
            3usize.pow(2)
        );
    }

    #[test]
    fn alpha_validation() {
        let l = d4();
        assert_eq!(l.validate_alpha(&CosetRep::zero(4), 2), Ok(true));
        let a = CosetRep::new(rvec(&[(1, 2), (0, 1), (0, 1), (1, 2)]));
        assert_eq!(l.validate_alpha(&a, 2), Ok(true));
        let l = a3();
        let a = CosetRep::new(rvec(&[(3, 4), (1, 2), (1, 4)]));
        assert_eq!(l.validate_alpha(&a, 2), Ok(false));
        let not_dual = CosetRep::new(rvec(&[(1, 5), (0, 1), (0, 1)]));
        assert_eq!(l.validate_alpha(&not_dual, 2), Err(LatticeError::NotInDual));
    }

    #[test]
    fn a3_filtered_alpha_list() {
        // Of the four dual classes of A3 only two admit 2 Q(alpha) integral.
        let l = a3();
        let good: Vec<CosetRep> = l
            .dual_coset_reps()
            .into_iter()
            .filter(|r| l.validate_alpha(r, 2).unwrap())
            .collect();
        assert_eq!(good.len(), 2);
        let expect = CosetRep::new(rvec(&[(1, 2), (0, 1), (1, 2)]));
        assert!(good.iter().any(|r| r.same_coset(&expect)));
    }

    fn random_even_gram() -> impl Strategy<Value = Vec<Vec<i64>>> {
        // 2 L L^T for a lower-triangular L with unit-bounded entries and
        // nonzero diagonal: always even and positive definite.
        (2usize..=3).prop_flat_map(|n| {
            proptest::collection::vec(-1i64..=1, n * n).prop_map(move |e| {
                let mut l = vec![vec![0i64; n]; n];
                for i in 0..n {
                    for j in 0..=i {
                        l[i][j] = if i == j {
                            if e[i * n + j] == 0 {
                                1
                            } else {
                                e[i * n + j]
                            }
                        } else {
                            e[i * n + j]
                        };
                    }
                }
                let mut g = vec![vec![0i64; n]; n];
                for i in 0..n {
                    for j in 0..n {
                        let mut s = 0;
                        for k in 0..n {
                            s += l[i][k] * l[j][k];
                        }
                        g[i][j] = 2 * s;
                    }
                }
                g
            })
        })
    }

    proptest! {
        #[test]
        fn polarization_identity(g in random_even_gram(), seeds in proptest::collection::vec((-4i64..=4, 1i64..=3), 6)) {
            let l = GramLattice::new(g).unwrap();
            let n = l.dim();
            prop_assume!(seeds.len() >= 2 * n);
            let v: Vec<Rational> = seeds[..n].iter().map(|&(a, b)| rat(a, b)).collect();
            let w: Vec<Rational> = seeds[n..2 * n].iter().map(|&(a, b)| rat(a, b)).collect();
            let sum: Vec<Rational> = v.iter().zip(&w).map(|(a, b)| a + b).collect();
            let lhs = l.quad_value(&sum) - l.quad_value(&v) - l.quad_value(&w);
            prop_assert_eq!(lhs, l.bilinear_value(&v, &w));
        }

        #[test]
        fn dual_reps_well_formed_random(g in random_even_gram()) {
            let l = GramLattice::new(g).unwrap();
            let reps = l.dual_coset_reps();
            prop_assert_eq!(Integer::from(reps.len()), l.det().clone());
            for r in &reps {
                prop_assert!(l.is_dual_vector(r.coords()));
            }
            for i in 0..reps.len() {
                for j in 0..i {
                    prop_assert!(!reps[i].same_coset(&reps[j]));
                }
            }
        }

        #[test]
        fn dual_rep_level_clears_denominators(g in random_even_gram()) {
            let l = GramLattice::new(g).unwrap();
            let nr = Rational::from_integer(Integer::from(l.level()));
            for r in l.dual_coset_reps() {
                prop_assert!((l.quad_value(r.coords()) * &nr).is_integer());
            }
        }
    }
}
