//! Exact algebra for sums of products of linear forms and for the linear
//! subspaces of the hypersurfaces `sum_i prod_j x_ij = 0`.

pub mod census;
pub mod exec;
pub mod field;
pub mod identity;
pub mod linalg;
pub mod multipoly;
pub mod plane;
pub mod prodrank;
pub mod search;

pub use exec::Exec;
pub use field::{FieldCtx, FieldElement, FieldError};
pub use linalg::{LinalgError, Matrix};
pub use multipoly::{
    factor_product, Exponent, Factorization, LinearForm, Monomial, MultiPoly, NotSplit, PolyError,
    ProductOfLinear,
};
