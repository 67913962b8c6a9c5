use num_complex::Complex64;
use serde::Serialize;

use super::{Expr, NamedScalar, Scalar, Sign};
use crate::algebra::{AlgebraElement, AlgebraParams};
use crate::braid::{adjoint_action, four_string_element, BraidUnitary, Crossing};
use crate::error::{PfError, Result};
use crate::matrix_rep::gauss_phase;

/// Algebra and truncation an expression is evaluated in.
#[derive(Clone, Copy, Debug)]
pub struct EvalContext {
    pub params: AlgebraParams,
    pub blocks: usize,
}

impl EvalContext {
    pub fn new(d: u32, blocks: usize) -> Result<Self> {
        Ok(EvalContext {
            params: AlgebraParams::new(d)?,
            blocks,
        })
    }

    /// Smallest truncation holding every strand and braid the expression
    /// mentions.
    pub fn fitting(d: u32, e: &Expr) -> Result<Self> {
        Self::new(d, required_blocks(e).max(1))
    }

    fn named(&self, n: NamedScalar) -> Complex64 {
        match n {
            NamedScalar::Q => self.params.q(),
            NamedScalar::Zeta => self.params.zeta(),
            NamedScalar::Omega => gauss_phase(&self.params).omega,
            NamedScalar::I => Complex64::new(0.0, 1.0),
        }
    }

    fn scalar(&self, s: &Scalar) -> Complex64 {
        match s {
            Scalar::Named(n) => self.named(*n),
            Scalar::Literal(z) => *z,
        }
    }
}

/// Blocks needed to evaluate `e` without leaving the truncation.
pub fn required_blocks(e: &Expr) -> usize {
    match e {
        Expr::Sum(t) => t.iter().map(|(_, x)| required_blocks(x)).max().unwrap_or(0),
        Expr::Product(f) => f.iter().map(required_blocks).max().unwrap_or(0),
        Expr::Scaled(_, x) | Expr::Power(x, _) | Expr::Star(x) => required_blocks(x),
        Expr::Gen { strand, .. } => (*strand as usize).div_ceil(2),
        Expr::Braid { index, .. } => *index as usize + 1,
        Expr::Alpha { power, inner } => {
            let inner = required_blocks(inner);
            if inner == 0 {
                0
            } else {
                inner + *power as usize
            }
        }
        Expr::Ad { word, inner } => word.blocks_required().max(required_blocks(inner)),
        Expr::Named(_) | Expr::Literal(_) => 0,
    }
}

fn pow_u64(x: &AlgebraElement, mut n: u64) -> AlgebraElement {
    let mut acc = AlgebraElement::identity(*x.params());
    let mut base = x.clone();
    while n > 0 {
        if n & 1 == 1 {
            acc = &acc * &base;
        }
        n >>= 1;
        if n > 0 {
            base = &base * &base;
        }
    }
    acc
}

/// Integer power; negative powers are allowed for scaled monomials and
/// for unitaries (`unitary = true`), where the inverse is the adjoint.
fn pow_signed(x: &AlgebraElement, e: i64, unitary: bool) -> Result<AlgebraElement> {
    if e >= 0 {
        return Ok(pow_u64(x, e as u64));
    }
    let inv = if unitary {
        x.adjoint()
    } else if x.len() == 1 {
        let c = *x.terms().values().next().expect("one term");
        x.adjoint().scale(Complex64::new(1.0 / c.norm_sqr(), 0.0))
    } else {
        return Err(PfError::Eval(
            "negative powers need a single monomial or a braid".into(),
        ));
    };
    Ok(pow_u64(&inv, e.unsigned_abs()))
}

/// Evaluates an expression to a normal-form algebra element.
pub fn eval(e: &Expr, ctx: &EvalContext) -> Result<AlgebraElement> {
    let params = ctx.params;
    Ok(match e {
        Expr::Sum(terms) => {
            let mut acc = AlgebraElement::zero(params);
            for (s, t) in terms {
                let v = eval(t, ctx)?;
                acc = match s {
                    Sign::Plus => &acc + &v,
                    Sign::Minus => &acc - &v,
                };
            }
            acc
        }
        Expr::Scaled(s, inner) => eval(inner, ctx)?.scale(ctx.scalar(s)),
        Expr::Product(fs) => {
            let mut acc = AlgebraElement::identity(params);
            for f in fs {
                acc = acc.multiply(&eval(f, ctx)?)?;
            }
            acc
        }
        Expr::Gen { strand, exp } => {
            if *strand as usize > 2 * ctx.blocks {
                return Err(PfError::StrandOutOfRange {
                    strand: *strand,
                    blocks: ctx.blocks,
                    required: (*strand as usize).div_ceil(2),
                });
            }
            AlgebraElement::from_word(params, &[(*strand, *exp)], Complex64::new(1.0, 0.0))
        }
        Expr::Braid { index, exp } => {
            if *index as usize + 1 > ctx.blocks {
                return Err(PfError::BraidOutOfRange {
                    index: *index,
                    blocks: ctx.blocks,
                    required: *index as usize + 1,
                });
            }
            let b = four_string_element(&params, *index, Crossing::Exchange);
            pow_signed(&b, *exp, true)?
        }
        Expr::Power(inner, n) => pow_signed(&eval(inner, ctx)?, *n, false)?,
        Expr::Alpha { power, inner } => {
            let x = eval(inner, ctx)?;
            let top = x.max_strand() as u64;
            if top > 0 && top + 2 * *power as u64 > 2 * ctx.blocks as u64 {
                return Err(PfError::StrandOutOfRange {
                    strand: (top + 2 * *power as u64).min(u32::MAX as u64) as u32,
                    blocks: ctx.blocks,
                    required: x.blocks() + *power as usize,
                });
            }
            x.shift(*power)
        }
        Expr::Ad { word, inner } => {
            let x = eval(inner, ctx)?;
            let b = BraidUnitary::realize(&params, word, ctx.blocks)?;
            adjoint_action(&b, &x)?
        }
        Expr::Star(inner) => eval(inner, ctx)?.adjoint(),
        Expr::Named(n) => AlgebraElement::scalar(params, ctx.named(*n)),
        Expr::Literal(z) => AlgebraElement::scalar(params, *z),
    })
}

/// Z-grading read off the syntax tree, before reducing mod d.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum SyntacticDegree {
    Homogeneous(i64),
    Mixed,
}

fn overflow() -> PfError {
    PfError::Eval("degree overflows 64 bits".into())
}

pub fn syntactic_degree(e: &Expr) -> Result<SyntacticDegree> {
    use SyntacticDegree::*;
    Ok(match e {
        Expr::Sum(terms) => {
            let mut common = None;
            for (_, t) in terms {
                match (syntactic_degree(t)?, common) {
                    (Mixed, _) => return Ok(Mixed),
                    (Homogeneous(v), None) => common = Some(v),
                    (Homogeneous(v), Some(c)) if v != c => return Ok(Mixed),
                    _ => {}
                }
            }
            Homogeneous(common.unwrap_or(0))
        }
        Expr::Product(fs) => {
            let mut total: i64 = 0;
            for f in fs {
                match syntactic_degree(f)? {
                    Mixed => return Ok(Mixed),
                    Homogeneous(v) => total = total.checked_add(v).ok_or_else(overflow)?,
                }
            }
            Homogeneous(total)
        }
        Expr::Scaled(_, x) | Expr::Alpha { inner: x, .. } | Expr::Ad { inner: x, .. } => {
            syntactic_degree(x)?
        }
        Expr::Power(x, n) => match syntactic_degree(x)? {
            Mixed => Mixed,
            Homogeneous(v) => Homogeneous(v.checked_mul(*n).ok_or_else(overflow)?),
        },
        Expr::Star(x) => match syntactic_degree(x)? {
            Mixed => Mixed,
            Homogeneous(v) => Homogeneous(v.checked_neg().ok_or_else(overflow)?),
        },
        Expr::Gen { exp, .. } => Homogeneous(*exp),
        Expr::Braid { .. } | Expr::Named(_) | Expr::Literal(_) => Homogeneous(0),
    })
}

#[cfg(test)]
mod tests {
    use super::super::parse;
    use super::*;

    fn ev(s: &str, d: u32, m: usize) -> AlgebraElement {
        eval(&parse(s).unwrap(), &EvalContext::new(d, m).unwrap()).unwrap()
    }

    #[test]
    fn cpr_cancels() {
        assert!(ev("c1 c2 - q c2 c1", 3, 2).is_zero());
        assert!(ev("q c2 c1", 3, 2).distance(&ev("c1 c2", 3, 2)) < 1e-15);
    }

    #[test]
    fn pair_exchange() {
        assert!(ev("Ad(b1)(c1)", 3, 2).distance(&ev("c3", 3, 2)) < 1e-9);
        assert!(ev("Ad(b1 b1')(c1 c4)", 3, 2).distance(&ev("c1 c4", 3, 2)) < 1e-9);
    }

    #[test]
    fn braid_atoms_are_unitary() {
        let u = ev("b1 b1^-1", 3, 2);
        assert!(u.distance(&AlgebraElement::identity(AlgebraParams::new(3).unwrap())) < 1e-12);
    }

    #[test]
    fn powers_and_inverses() {
        assert!(ev("c1^3", 3, 1).distance(&ev("1", 3, 1)) < 1e-15);
        assert!(ev("(2 c1)^-1 (2 c1)", 3, 1).distance(&ev("1", 3, 1)) < 1e-15);
        let bad = eval(&parse("(c1 + c2)^-1").unwrap(), &EvalContext::new(3, 1).unwrap());
        assert!(matches!(bad, Err(PfError::Eval(_))));
    }

    #[test]
    fn out_of_range() {
        let ctx = EvalContext::new(3, 1).unwrap();
        assert!(matches!(eval(&parse("c3").unwrap(), &ctx), Err(PfError::StrandOutOfRange { .. })));
        assert!(matches!(eval(&parse("alpha(c1)").unwrap(), &ctx), Err(PfError::StrandOutOfRange { .. })));
        assert!(matches!(eval(&parse("b1").unwrap(), &ctx), Err(PfError::BraidOutOfRange { .. })));
        assert!(eval(&parse("alpha^5(2)").unwrap(), &ctx).is_ok());
    }

    #[test]
    fn required_blocks_and_degrees() {
        let e = parse("Ad(b2)(alpha(c1 c2^2))").unwrap();
        assert_eq!(required_blocks(&e), 3);
        assert_eq!(syntactic_degree(&e).unwrap(), SyntacticDegree::Homogeneous(3));
        assert_eq!(syntactic_degree(&parse("c1 + c2^2").unwrap()).unwrap(), SyntacticDegree::Mixed);
        assert_eq!(syntactic_degree(&parse("star(c1 c2)").unwrap()).unwrap(), SyntacticDegree::Homogeneous(-2));
        assert_eq!(syntactic_degree(&parse("(c1)^4 q").unwrap()).unwrap(), SyntacticDegree::Homogeneous(4));
    }
}
