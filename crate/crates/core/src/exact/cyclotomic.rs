//! Exact arithmetic in cyclotomic fields `Q(zeta_m)`.
//!
//! An element is stored by its coordinate vector in the power basis
//! `1, zeta, ..., zeta^{phi(m)-1}`, reduced modulo the m-th cyclotomic
//! polynomial `Phi_m`. Since `Phi_m` is irreducible over `Q`, every nonzero
//! element is invertible and the representation of a field element in a
//! fixed order is unique, so equality is coefficient-wise.
//!
//! Elements of different orders interoperate by lifting both operands into
//! `Q(zeta_lcm)` via `zeta_m -> zeta_lcm^{lcm/m}`.

use crate::{Integer, Rational};
use num_traits::{One, Signed, Zero};
use std::collections::BTreeMap;
use std::fmt;
use std::sync::{Arc, Mutex};

/// Euler totient of `m`; the degree of `Q(zeta_m)` over `Q`.
///
/// # Panics
/// Panics if `m == 0`.
pub fn euler_phi(m: u32) -> u32 {
    assert!(m > 0, "euler_phi(0) is undefined");
    let mut n = m;
    let mut result = m;
    let mut p = 2;
    while p * p <= n {
        if n % p == 0 {
            result -= result / p;
            while n % p == 0 {
                n /= p;
            }
        }
        p += 1;
    }
    if n > 1 {
        result -= result / n;
    }
    result
}

/// Coefficients of the m-th cyclotomic polynomial, ascending degree, monic.
///
/// Computed as `(x^m - 1) / prod_{d | m, d < m} Phi_d(x)`; results are cached
/// process-wide. All coefficients are integers.
///
/// # Panics
/// Panics if `m == 0`.
pub fn cyclotomic_polynomial(m: u32) -> Vec<Integer> {
    context(m).phi_int.clone()
}

struct Context {
    degree: usize,
    /// `Phi_m`, ascending, monic, length `degree + 1`.
    phi_int: Vec<Integer>,
    /// `Phi_m` with the leading coefficient dropped, as rationals, for the
    /// synthetic-division reduction step.
    phi_tail: Vec<Rational>,
}

static CONTEXTS: Mutex<BTreeMap<u32, Arc<Context>>> = Mutex::new(BTreeMap::new());

fn context(m: u32) -> Arc<Context> {
    assert!(m > 0, "cyclotomic order must be positive");
    if let Some(ctx) = CONTEXTS.lock().unwrap().get(&m) {
        return ctx.clone();
    }
    // Make sure every proper divisor is cached before taking the lock again;
    // the recursion must not happen while the lock is held.
    for d in 1..m {
        if m % d == 0 {
            context(d);
        }
    }
    let mut num: Vec<Integer> = vec![Integer::zero(); m as usize + 1];
    num[0] = -Integer::one();
    num[m as usize] = Integer::one();
    let mut lock = CONTEXTS.lock().unwrap();
    if let Some(ctx) = lock.get(&m) {
        return ctx.clone();
    }
    let mut phi = num;
    for d in 1..m {
        if m % d == 0 {
            let div = lock.get(&d).expect("divisor context cached").phi_int.clone();
            phi = poly_div_exact(&phi, &div);
        }
    }
    let degree = phi.len() - 1;
    debug_assert_eq!(degree as u32, euler_phi(m));
    debug_assert!(phi[degree].is_one());
    let phi_tail = phi[..degree]
        .iter()
        .map(|c| Rational::from_integer(c.clone()))
        .collect();
    let ctx = Arc::new(Context {
        degree,
        phi_int: phi,
        phi_tail,
    });
    lock.insert(m, ctx.clone());
    ctx
}

/// Exact division of integer polynomials; `den` must be monic and divide
/// `num` exactly. Ascending coefficient order.
fn poly_div_exact(num: &[Integer], den: &[Integer]) -> Vec<Integer> {
    let dn = num.len() - 1;
    let dd = den.len() - 1;
    assert!(den[dd].is_one(), "divisor must be monic");
    assert!(dn >= dd);
    let mut rem = num.to_vec();
    let mut quot = vec![Integer::zero(); dn - dd + 1];
    for i in (0..=dn - dd).rev() {
        let c = rem[i + dd].clone();
        if !c.is_zero() {
            for (j, d) in den.iter().enumerate() {
                let t = &c * d;
                rem[i + j] -= t;
            }
        }
        quot[i] = c;
    }
    assert!(rem.iter().all(Integer::is_zero), "division must be exact");
    quot
}

/// An element of the cyclotomic field `Q(zeta_order)`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct CyclotomicElement {
    order: u32,
    /// Coordinates in the basis `1, zeta, ..., zeta^{phi(order)-1}`.
    coeffs: Vec<Rational>,
}

impl CyclotomicElement {
    /// The zero of `Q(zeta_order)`.
    pub fn zero(order: u32) -> Self {
        let deg = context(order).degree;
        CyclotomicElement {
            order,
            coeffs: vec![Rational::zero(); deg.max(1)],
        }
    }

    /// The unit of `Q(zeta_order)`.
    pub fn one(order: u32) -> Self {
        Self::from_rational(order, Rational::one())
    }

    /// Embeds a rational number into `Q(zeta_order)`.
    pub fn from_rational(order: u32, value: Rational) -> Self {
        let mut out = Self::zero(order);
        out.coeffs[0] = value;
        out
    }

    /// Builds an element from raw power-basis coordinates of any length;
    /// entries of index `j` stand for `zeta^j` and are reduced mod `Phi`.
    pub fn from_coeffs(order: u32, coeffs: Vec<Rational>) -> Self {
        let ctx = context(order);
        let mut work = coeffs;
        reduce_in_place(&ctx, &mut work);
        work.resize(ctx.degree.max(1), Rational::zero());
        CyclotomicElement {
            order,
            coeffs: work,
        }
    }

    /// `zeta_order^exp`, for any (possibly negative) exponent.
    pub fn root_of_unity(order: u32, exp: i64) -> Self {
        let m = i64::from(order);
        let e = exp.rem_euclid(m) as usize;
        let mut raw = vec![Rational::zero(); e + 1];
        raw[e] = Rational::one();
        Self::from_coeffs(order, raw)
    }

    /// The order `m` of the ambient field `Q(zeta_m)`.
    pub fn order(&self) -> u32 {
        self.order
    }

    /// Power-basis coordinates, length `max(phi(order), 1)`.
    pub fn coeffs(&self) -> &[Rational] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(Rational::is_zero)
    }

    /// True when the element lies in the prime field `Q`.
    pub fn is_rational(&self) -> bool {
        self.coeffs[1..].iter().all(Rational::is_zero)
    }

    /// The element as a rational number, when it is one.
    pub fn to_rational(&self) -> Option<Rational> {
        if self.is_rational() {
            Some(self.coeffs[0].clone())
        } else {
            None
        }
    }

    /// Reinterprets the element in `Q(zeta_target)`; `order` must divide
    /// `target`.
    ///
    /// # Panics
    /// Panics if `target % order != 0`.
    pub fn lift_to_order(&self, target: u32) -> Self {
        assert!(
            target % self.order == 0,
            "cannot lift order {} into order {}",
            self.order,
            target
        );
        if target == self.order {
            return self.clone();
        }
        let step = (target / self.order) as usize;
        let mut raw = vec![Rational::zero(); (self.coeffs.len() - 1) * step + 1];
        for (j, c) in self.coeffs.iter().enumerate() {
            raw[j * step] = c.clone();
        }
        Self::from_coeffs(target, raw)
    }

    /// Multiplies by a rational scalar.
    pub fn scale(&self, s: &Rational) -> Self {
        CyclotomicElement {
            order: self.order,
            coeffs: self.coeffs.iter().map(|c| c * s).collect(),
        }
    }

    /// Multiplicative inverse.
    ///
    /// # Panics
    /// Panics when the element is zero.
    pub fn inv(&self) -> Self {
        assert!(!self.is_zero(), "inverse of zero cyclotomic element");
        let ctx = context(self.order);
        if ctx.degree <= 1 {
            // The field is Q itself.
            return Self::from_rational(self.order, self.coeffs[0].recip());
        }
        let phi: Vec<Rational> = ctx
            .phi_int
            .iter()
            .map(|c| Rational::from_integer(c.clone()))
            .collect();
        // Extended Euclid for f and Phi: track u with r = u*f (mod Phi).
        // Phi is irreducible, so the gcd is a nonzero constant.
        let mut r0 = phi;
        let mut r1 = trim(self.coeffs.clone());
        let mut u0: Vec<Rational> = vec![];
        let mut u1: Vec<Rational> = vec![Rational::one()];
        while !r1.is_empty() {
            let (q, r2) = poly_divmod(&r0, &r1);
            let u2 = poly_sub(&u0, &poly_mul(&q, &u1));
            r0 = r1;
            r1 = r2;
            u0 = u1;
            u1 = u2;
        }
        assert_eq!(r0.len(), 1, "gcd with irreducible Phi must be constant");
        let c = r0[0].recip();
        let inv: Vec<Rational> = u0.iter().map(|x| x * &c).collect();
        Self::from_coeffs(self.order, inv)
    }

    /// A crude but monotone size measure (total bit length of all numerators
    /// and denominators), used for pivot selection in eliminations.
    pub fn size_estimate(&self) -> u64 {
        self.coeffs
            .iter()
            .map(|c| c.numer().bits() + c.denom().bits())
            .sum()
    }

    fn binop(
        &self,
        rhs: &Self,
        f: impl Fn(&CyclotomicElement, &CyclotomicElement) -> CyclotomicElement,
    ) -> CyclotomicElement {
        if self.order == rhs.order {
            f(self, rhs)
        } else {
            let target = lcm_u32(self.order, rhs.order);
            f(&self.lift_to_order(target), &rhs.lift_to_order(target))
        }
    }
}

fn lcm_u32(a: u32, b: u32) -> u32 {
    num_integer::lcm(a, b)
}

/// Reduces a raw coefficient vector modulo `Phi` in place; afterwards only
/// indices below `ctx.degree` (or index 0 when the degree is 0) are nonzero.
fn reduce_in_place(ctx: &Context, work: &mut Vec<Rational>) {
    let deg = ctx.degree;
    if deg == 0 {
        // Q(zeta_1) with Phi_1 = x - 1: every power of zeta is 1.
        let total = work.drain(..).fold(Rational::zero(), |a, b| a + b);
        work.push(total);
        return;
    }
    let mut i = work.len();
    while i > deg {
        i -= 1;
        if work[i].is_zero() {
            continue;
        }
        let c = std::mem::replace(&mut work[i], Rational::zero());
        for (j, p) in ctx.phi_tail.iter().enumerate() {
            if !p.is_zero() {
                let t = &c * p;
                work[i - deg + j] -= t;
            }
        }
    }
    work.truncate(deg.max(1));
    work.resize(deg.max(1), Rational::zero());
}

/// Drops trailing zero coefficients; the empty vector is the zero polynomial.
fn trim(mut v: Vec<Rational>) -> Vec<Rational> {
    while v.last().is_some_and(Rational::is_zero) {
        v.pop();
    }
    v
}

fn poly_mul(a: &[Rational], b: &[Rational]) -> Vec<Rational> {
    if a.is_empty() || b.is_empty() {
        return vec![];
    }
    let mut out = vec![Rational::zero(); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        if x.is_zero() {
            continue;
        }
        for (j, y) in b.iter().enumerate() {
            if !y.is_zero() {
                out[i + j] += x * y;
            }
        }
    }
    trim(out)
}

fn poly_sub(a: &[Rational], b: &[Rational]) -> Vec<Rational> {
    let mut out = vec![Rational::zero(); a.len().max(b.len())];
    for (i, x) in a.iter().enumerate() {
        out[i] += x;
    }
    for (i, y) in b.iter().enumerate() {
        out[i] -= y;
    }
    trim(out)
}

/// Division with remainder over `Q[x]`, ascending coefficients, `b != 0`.
fn poly_divmod(a: &[Rational], b: &[Rational]) -> (Vec<Rational>, Vec<Rational>) {
    assert!(!b.is_empty());
    if a.len() < b.len() {
        return (vec![], a.to_vec());
    }
    let mut rem = a.to_vec();
    let db = b.len() - 1;
    let lead = b[db].recip();
    let mut quot = vec![Rational::zero(); a.len() - b.len() + 1];
    for i in (0..quot.len()).rev() {
        let c = &rem[i + db] * &lead;
        if !c.is_zero() {
            for (j, y) in b.iter().enumerate() {
                let t = &c * y;
                rem[i + j] -= t;
            }
        }
        quot[i] = c;
    }
    (trim(quot), trim(rem))
}

impl std::ops::Add for &CyclotomicElement {
    type Output = CyclotomicElement;
    fn add(self, rhs: &CyclotomicElement) -> CyclotomicElement {
        self.binop(rhs, |a, b| {
            let coeffs = a
                .coeffs
                .iter()
                .zip(&b.coeffs)
                .map(|(x, y)| x + y)
                .collect();
            CyclotomicElement {
                order: a.order,
                coeffs,
            }
        })
    }
}

impl std::ops::Sub for &CyclotomicElement {
    type Output = CyclotomicElement;
    fn sub(self, rhs: &CyclotomicElement) -> CyclotomicElement {
        self.binop(rhs, |a, b| {
            let coeffs = a
                .coeffs
                .iter()
                .zip(&b.coeffs)
                .map(|(x, y)| x - y)
                .collect();
            CyclotomicElement {
                order: a.order,
                coeffs,
            }
        })
    }
}

impl std::ops::Mul for &CyclotomicElement {
    type Output = CyclotomicElement;
    fn mul(self, rhs: &CyclotomicElement) -> CyclotomicElement {
        self.binop(rhs, |a, b| {
            let raw = poly_mul(&a.coeffs, &b.coeffs);
            CyclotomicElement::from_coeffs(a.order, raw)
        })
    }
}

impl std::ops::Neg for &CyclotomicElement {
    type Output = CyclotomicElement;
    fn neg(self) -> CyclotomicElement {
        CyclotomicElement {
            order: self.order,
            coeffs: self.coeffs.iter().map(|c| -c).collect(),
        }
    }
}

impl std::ops::Add for CyclotomicElement {
    type Output = CyclotomicElement;
    fn add(self, rhs: CyclotomicElement) -> CyclotomicElement {
        &self + &rhs
    }
}

impl std::ops::Sub for CyclotomicElement {
    type Output = CyclotomicElement;
    fn sub(self, rhs: CyclotomicElement) -> CyclotomicElement {
        &self - &rhs
    }
}

impl std::ops::Mul for CyclotomicElement {
    type Output = CyclotomicElement;
    fn mul(self, rhs: CyclotomicElement) -> CyclotomicElement {
        &self * &rhs
    }
}

impl std::ops::Neg for CyclotomicElement {
    type Output = CyclotomicElement;
    fn neg(self) -> CyclotomicElement {
        -&self
    }
}

impl std::ops::AddAssign<&CyclotomicElement> for CyclotomicElement {
    fn add_assign(&mut self, rhs: &CyclotomicElement) {
        if self.order == rhs.order {
            for (x, y) in self.coeffs.iter_mut().zip(&rhs.coeffs) {
                *x += y;
            }
        } else {
            *self = &*self + rhs;
        }
    }
}

impl std::ops::SubAssign<&CyclotomicElement> for CyclotomicElement {
    fn sub_assign(&mut self, rhs: &CyclotomicElement) {
        if self.order == rhs.order {
            for (x, y) in self.coeffs.iter_mut().zip(&rhs.coeffs) {
                *x -= y;
            }
        } else {
            *self = &*self - rhs;
        }
    }
}

impl fmt::Display for CyclotomicElement {
    /// Renders as a polynomial in `z` = `zeta_order`, e.g. `1/2 - z^2`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (j, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let mag = c.abs();
            if first {
                if c.is_negative() {
                    write!(f, "-")?;
                }
                first = false;
            } else if c.is_negative() {
                write!(f, " - ")?;
            } else {
                write!(f, " + ")?;
            }
            let unit_coeff = mag.is_one() && j > 0;
            if !unit_coeff {
                write!(f, "{}", mag)?;
            }
            if j > 0 {
                if !unit_coeff {
                    write!(f, "*")?;
                }
                if j == 1 {
                    write!(f, "z")?;
                } else {
                    write!(f, "z^{}", j)?;
                }
            }
        }
        Ok(())
    }
}

impl fmt::Debug for CyclotomicElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Cyc[{}]({})", self.order, self)
    }
}
