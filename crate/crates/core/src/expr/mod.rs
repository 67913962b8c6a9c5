//! A small text language for parafermion and braid expressions.
//!
//! ```text
//! expr   := ["-"] term (("+" | "-") term)*
//! term   := factor+
//! factor := atom ("^" int)?
//! atom   := "c" int | "b" int | "(" expr ")"
//!         | "alpha" ("^" int)? "(" expr ")"
//!         | "Ad(" braidword ")(" expr ")"
//!         | "star(" expr ")"
//!         | scalar
//! scalar := decimal ([+-] decimal)? "i"? | "q" | "zeta" | "omega" | "i"
//! ```
//!
//! A term whose first factor is an unparenthesized scalar followed by more
//! factors is a scaled term. Braid words are letters `bN`, with `bN'` for
//! the inverse.

mod eval;
mod parser;
mod print;

use num_complex::Complex64;
use thiserror::Error;

use crate::braid::BraidWord;

pub use eval::{eval, syntactic_degree, EvalContext, SyntacticDegree};
pub use parser::{parse, parse_bytes, MAX_DEPTH};

#[derive(Debug, Error, Clone, PartialEq)]
#[error("parse error at byte {offset}: {message}")]
pub struct ParseError {
    pub offset: usize,
    pub message: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sign {
    Plus,
    Minus,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NamedScalar {
    Q,
    Zeta,
    Omega,
    I,
}

impl NamedScalar {
    pub fn name(self) -> &'static str {
        match self {
            NamedScalar::Q => "q",
            NamedScalar::Zeta => "zeta",
            NamedScalar::Omega => "omega",
            NamedScalar::I => "i",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Scalar {
    Named(NamedScalar),
    Literal(Complex64),
}

#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    /// Signed terms; a single term only appears here with a minus sign.
    Sum(Vec<(Sign, Expr)>),
    Scaled(Scalar, Box<Expr>),
    /// At least two factors, multiplied left to right.
    Product(Vec<Expr>),
    Gen { strand: u32, exp: i64 },
    Braid { index: u32, exp: i64 },
    /// Power of a parenthesized or compound factor.
    Power(Box<Expr>, i64),
    Alpha { power: u32, inner: Box<Expr> },
    Ad { word: BraidWord, inner: Box<Expr> },
    Star(Box<Expr>),
    Named(NamedScalar),
    Literal(Complex64),
}

impl Expr {
    pub fn gen(strand: u32) -> Expr {
        Expr::Gen { strand, exp: 1 }
    }

    pub fn is_scalar(&self) -> bool {
        matches!(self, Expr::Named(_) | Expr::Literal(_))
    }

    /// Nesting depth of the tree.
    pub fn depth(&self) -> usize {
        1 + match self {
            Expr::Sum(t) => t.iter().map(|(_, e)| e.depth()).max().unwrap_or(0),
            Expr::Product(f) => f.iter().map(Expr::depth).max().unwrap_or(0),
            Expr::Scaled(_, e)
            | Expr::Power(e, _)
            | Expr::Alpha { inner: e, .. }
            | Expr::Ad { inner: e, .. }
            | Expr::Star(e) => e.depth(),
            _ => 0,
        }
    }
}
