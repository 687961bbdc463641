//! Exact rational polynomials and matrices, plus the float linear algebra used
//! for eigenvalues and final distortion scalars.

pub mod eigen;
pub mod matrix;
pub mod poly;
pub mod rational;

pub use eigen::{gen_eigenvalues, symmetric_eigenvalues};
pub use matrix::{mat_rank_exact, ExactMatrix, FloatMatrix};
pub use poly::{poly_parse, Polynomial};
pub use rational::{approx_eq, format_rational, parse_rational, rat, ratio, rel_diff, to_f64, Rational};

/// Default relative tolerance for float comparisons.
pub const DEFAULT_REL_TOL: f64 = 1e-9;
