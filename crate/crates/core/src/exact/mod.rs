//! Exact scalar and matrix arithmetic: cyclotomic fields, dense matrices
//! over them, incremental row spaces, and the Smith normal form over the
//! integers.

pub mod cyclotomic;
pub mod matrix;
pub mod snf;

pub use cyclotomic::{cyclotomic_polynomial, euler_phi, CyclotomicElement};
pub use matrix::{matrix_rank, ExactMatrix, IntRowSpace, Mat, Reduction, RowSpace};
pub use snf::{smith_normal_form, SmithNormalForm};
