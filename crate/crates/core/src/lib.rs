//! Exact discovery and certification of linear relations among the `power`-th
//! powers of Jacobi theta series attached to a positive definite even lattice.
//!
//! Given a Gram matrix `G` of a positive definite even integral lattice `L`
//! and an exponent `N'` dividing the level of `L`, the pipeline is:
//!
//! 1. enumerate the discriminant-group data indexing the theta series
//!    `theta_{alpha,beta}` (module [`lattice`]),
//! 2. search a set of multi-indices `P0` whose associated coefficient rows
//!    separate the cosets of the rescaled lattice (module [`p0search`]),
//! 3. compute, for every admissible pair `(alpha, beta)`, the exact vector of
//!    Taylor-coefficient data of `theta_{alpha,beta}^{N'}` (modules [`taylor`]
//!    and [`relations`]),
//! 4. read off the linear relation space of those vectors over a cyclotomic
//!    field (module [`relations`]),
//! 5. cross-check every claimed relation against independently computed
//!    multivariate q-expansions (module [`qseries`]).
//!
//! All arithmetic is exact: arbitrary-precision rationals and cyclotomic
//! field elements. No floating point is used anywhere, so results are
//! reproducible bit for bit across runs and thread counts.

pub mod enumeration;
pub mod exact;
pub mod lattice;
pub mod p0search;
pub mod qseries;
pub mod relations;
pub mod taylor;

/// Arbitrary-precision rational scalar used throughout the crate.
///
/// Values are always in lowest terms with a positive denominator; both
/// invariants are maintained by the underlying representation.
pub type Rational = num_rational::BigRational;

/// Arbitrary-precision integer scalar used throughout the crate.
pub type Integer = num_bigint::BigInt;

pub use exact::cyclotomic::CyclotomicElement;
pub use exact::matrix::{ExactMatrix, Mat};
pub use lattice::GramLattice;
pub use taylor::{HalfInteger, MultiIndex, PPolynomial};

