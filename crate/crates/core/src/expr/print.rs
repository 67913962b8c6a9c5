use std::fmt::{self, Display, Formatter, Write};

use num_complex::Complex64;

use super::{Expr, Scalar, Sign};

fn literal(z: Complex64, f: &mut Formatter<'_>) -> fmt::Result {
    // Signed zeros print as plain zero.
    let re = if z.re == 0.0 { 0.0 } else { z.re };
    let im = if z.im == 0.0 { 0.0 } else { z.im };
    if re < 0.0 {
        // Not expressible as a literal; fall back to a negated term.
        f.write_str("(-")?;
        literal(Complex64::new(-re, -im), f)?;
        return f.write_char(')');
    }
    if im == 0.0 {
        write!(f, "{re}")
    } else if re == 0.0 && im > 0.0 {
        write!(f, "{im}i")
    } else if im < 0.0 {
        write!(f, "{re}-{}i", -im)
    } else {
        write!(f, "{re}+{im}i")
    }
}

impl Display for Scalar {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        match self {
            Scalar::Named(n) => f.write_str(n.name()),
            Scalar::Literal(z) => literal(*z, f),
        }
    }
}

fn paren(e: &Expr, f: &mut Formatter<'_>) -> fmt::Result {
    write!(f, "({e})")
}

fn factor(e: &Expr, f: &mut Formatter<'_>) -> fmt::Result {
    match e {
        Expr::Sum(_) | Expr::Scaled(..) | Expr::Product(_) => paren(e, f),
        _ => write!(f, "{e}"),
    }
}

fn factors(fs: &[Expr], guard_scalar: bool, f: &mut Formatter<'_>) -> fmt::Result {
    for (i, x) in fs.iter().enumerate() {
        if i > 0 {
            f.write_char(' ')?;
        }
        if i == 0 && guard_scalar && x.is_scalar() {
            paren(x, f)?;
        } else {
            factor(x, f)?;
        }
    }
    Ok(())
}

impl Display for Expr {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Sum(terms) => {
                for (i, (s, t)) in terms.iter().enumerate() {
                    match (i, s) {
                        (0, Sign::Plus) => {}
                        (0, Sign::Minus) => f.write_char('-')?,
                        (_, Sign::Plus) => f.write_str(" + ")?,
                        (_, Sign::Minus) => f.write_str(" - ")?,
                    }
                    if matches!(t, Expr::Sum(_)) {
                        paren(t, f)?;
                    } else {
                        write!(f, "{t}")?;
                    }
                }
                Ok(())
            }
            Expr::Scaled(s, inner) => {
                write!(f, "{s} ")?;
                match inner.as_ref() {
                    Expr::Product(fs) => factors(fs, false, f),
                    other => factor(other, f),
                }
            }
            Expr::Product(fs) => factors(fs, true, f),
            Expr::Gen { strand, exp: 1 } => write!(f, "c{strand}"),
            Expr::Gen { strand, exp } => write!(f, "c{strand}^{exp}"),
            Expr::Braid { index, exp: 1 } => write!(f, "b{index}"),
            Expr::Braid { index, exp } => write!(f, "b{index}^{exp}"),
            Expr::Power(inner, e) => write!(f, "({inner})^{e}"),
            Expr::Alpha { power: 1, inner } => write!(f, "alpha({inner})"),
            Expr::Alpha { power, inner } => write!(f, "alpha^{power}({inner})"),
            Expr::Ad { word, inner } => write!(f, "Ad({word})({inner})"),
            Expr::Star(inner) => write!(f, "star({inner})"),
            Expr::Named(n) => f.write_str(n.name()),
            Expr::Literal(z) => literal(*z, f),
        }
    }
}
