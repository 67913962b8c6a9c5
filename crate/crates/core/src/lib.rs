//! Parafermion algebras, their matrix representations, braid symmetry and
//! exchangeable states.

pub mod algebra;
pub mod braid;
pub mod cli;
pub mod definetti;
pub mod error;
pub mod expr;
pub mod matrix_rep;
pub mod state;

pub use algebra::{AlgebraElement, AlgebraParams, Charge, Degree, Monomial, MonomialKey, Phase};
pub use error::{PfError, Result};
