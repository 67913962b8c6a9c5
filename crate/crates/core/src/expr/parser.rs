use num_complex::Complex64;

use super::{Expr, NamedScalar, ParseError, Scalar, Sign};
use crate::braid::BraidWord;

/// Deepest allowed nesting of parentheses and wrappers.
pub const MAX_DEPTH: usize = 200;

/// Largest strand, braid index or shift power accepted.
const MAX_INDEX: u64 = 1_000_000;

pub fn parse(text: &str) -> Result<Expr, ParseError> {
    let mut p = Parser {
        src: text.as_bytes(),
        pos: 0,
        depth: 0,
    };
    p.skip_ws();
    if p.at_end() {
        return Err(p.error("empty expression"));
    }
    let e = p.expr()?;
    p.skip_ws();
    if !p.at_end() {
        return Err(p.error(format!("unexpected `{}`", p.peek_char())));
    }
    Ok(e)
}

/// Like [`parse`] but accepts raw bytes, rejecting invalid UTF-8.
pub fn parse_bytes(bytes: &[u8]) -> Result<Expr, ParseError> {
    let text = std::str::from_utf8(bytes).map_err(|e| ParseError {
        offset: e.valid_up_to(),
        message: "invalid UTF-8".into(),
    })?;
    parse(text)
}

#[derive(PartialEq)]
enum Kind {
    /// `cN` or `bN` with no parentheses.
    BareIndexed,
    BareScalar,
    Other,
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    depth: usize,
}

impl Parser<'_> {
    fn error_at(&self, offset: usize, message: impl Into<String>) -> ParseError {
        ParseError {
            offset,
            message: message.into(),
        }
    }

    fn error(&self, message: impl Into<String>) -> ParseError {
        self.error_at(self.pos, message)
    }

    fn at_end(&self) -> bool {
        self.pos >= self.src.len()
    }

    fn peek(&self) -> Option<u8> {
        self.src.get(self.pos).copied()
    }

    fn peek_at(&self, k: usize) -> Option<u8> {
        self.src.get(self.pos + k).copied()
    }

    fn peek_char(&self) -> char {
        std::str::from_utf8(&self.src[self.pos..])
            .ok()
            .and_then(|s| s.chars().next())
            .unwrap_or(char::REPLACEMENT_CHARACTER)
    }

    fn skip_ws(&mut self) {
        while self.peek().is_some_and(|b| b.is_ascii_whitespace()) {
            self.pos += 1;
        }
    }

    fn expect(&mut self, b: u8) -> Result<(), ParseError> {
        self.skip_ws();
        if self.peek() == Some(b) {
            self.pos += 1;
            Ok(())
        } else if self.at_end() {
            Err(self.error(format!("expected `{}`, found end of input", b as char)))
        } else {
            Err(self.error(format!("expected `{}`, found `{}`", b as char, self.peek_char())))
        }
    }

    fn enter(&mut self) -> Result<(), ParseError> {
        self.depth += 1;
        if self.depth > MAX_DEPTH {
            return Err(self.error(format!("nesting deeper than {MAX_DEPTH}")));
        }
        Ok(())
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        self.enter()?;
        self.skip_ws();
        let first = match self.peek() {
            Some(b'-') => {
                self.pos += 1;
                Sign::Minus
            }
            Some(b'+') => {
                self.pos += 1;
                Sign::Plus
            }
            _ => Sign::Plus,
        };
        let mut terms = vec![(first, self.term()?)];
        loop {
            self.skip_ws();
            let sign = match self.peek() {
                Some(b'+') => Sign::Plus,
                Some(b'-') => Sign::Minus,
                _ => break,
            };
            self.pos += 1;
            terms.push((sign, self.term()?));
        }
        self.depth -= 1;
        if terms.len() == 1 && terms[0].0 == Sign::Plus {
            return Ok(terms.pop().expect("one term").1);
        }
        Ok(Expr::Sum(terms))
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut factors: Vec<(Expr, bool)> = Vec::new();
        loop {
            self.skip_ws();
            match self.peek() {
                Some(b) if b.is_ascii_alphanumeric() || b == b'(' || b == b'.' => {
                    factors.push(self.factor()?);
                }
                _ => break,
            }
        }
        if factors.is_empty() {
            return Err(if self.at_end() {
                self.error("expected a term, found end of input")
            } else {
                self.error(format!("expected a term, found `{}`", self.peek_char()))
            });
        }
        if factors.len() == 1 {
            return Ok(factors.pop().expect("one factor").0);
        }
        if factors[0].1 {
            let mut it = factors.into_iter().map(|(e, _)| e);
            let scalar = match it.next() {
                Some(Expr::Named(n)) => Scalar::Named(n),
                Some(Expr::Literal(z)) => Scalar::Literal(z),
                _ => unreachable!("flagged as a bare scalar"),
            };
            let mut rest: Vec<Expr> = it.collect();
            let inner = if rest.len() == 1 {
                rest.pop().expect("one factor")
            } else {
                Expr::Product(rest)
            };
            return Ok(Expr::Scaled(scalar, Box::new(inner)));
        }
        Ok(Expr::Product(factors.into_iter().map(|(e, _)| e).collect()))
    }

    /// Returns the factor and whether it is a bare scalar.
    fn factor(&mut self) -> Result<(Expr, bool), ParseError> {
        let (atom, kind) = self.atom()?;
        self.skip_ws();
        if self.peek() != Some(b'^') {
            return Ok((atom, kind == Kind::BareScalar));
        }
        self.pos += 1;
        let e = self.signed_int()?;
        let out = match (atom, kind) {
            (Expr::Gen { strand, .. }, Kind::BareIndexed) => Expr::Gen { strand, exp: e },
            (Expr::Braid { index, .. }, Kind::BareIndexed) => Expr::Braid { index, exp: e },
            (other, _) => Expr::Power(Box::new(other), e),
        };
        Ok((out, false))
    }

    fn atom(&mut self) -> Result<(Expr, Kind), ParseError> {
        self.skip_ws();
        let start = self.pos;
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(b')')?;
                Ok((e, Kind::Other))
            }
            Some(b) if b.is_ascii_digit() || b == b'.' => Ok((self.number()?, Kind::BareScalar)),
            Some(b) if b.is_ascii_alphabetic() => {
                while self.peek().is_some_and(|b| b.is_ascii_alphabetic()) {
                    self.pos += 1;
                }
                let ident = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii");
                match ident {
                    "c" => {
                        let strand = self.index("strand")?;
                        Ok((Expr::Gen { strand, exp: 1 }, Kind::BareIndexed))
                    }
                    "b" => {
                        let index = self.index("braid index")?;
                        Ok((Expr::Braid { index, exp: 1 }, Kind::BareIndexed))
                    }
                    "alpha" => {
                        self.skip_ws();
                        let mut power = 1;
                        if self.peek() == Some(b'^') {
                            self.pos += 1;
                            self.skip_ws();
                            power = self.uint(MAX_INDEX, "shift power")? as u32;
                        }
                        let inner = self.call_arg()?;
                        Ok((
                            Expr::Alpha {
                                power,
                                inner: Box::new(inner),
                            },
                            Kind::Other,
                        ))
                    }
                    "Ad" => {
                        self.expect(b'(')?;
                        let word = self.braid_word()?;
                        self.expect(b')')?;
                        let inner = self.call_arg()?;
                        Ok((
                            Expr::Ad {
                                word,
                                inner: Box::new(inner),
                            },
                            Kind::Other,
                        ))
                    }
                    "star" => {
                        let inner = self.call_arg()?;
                        Ok((Expr::Star(Box::new(inner)), Kind::Other))
                    }
                    "q" => Ok((Expr::Named(NamedScalar::Q), Kind::BareScalar)),
                    "zeta" => Ok((Expr::Named(NamedScalar::Zeta), Kind::BareScalar)),
                    "omega" => Ok((Expr::Named(NamedScalar::Omega), Kind::BareScalar)),
                    "i" => Ok((Expr::Named(NamedScalar::I), Kind::BareScalar)),
                    _ => Err(self.error_at(start, format!("unknown symbol `{ident}`"))),
                }
            }
            None => Err(self.error("unexpected end of input")),
            Some(_) => Err(self.error(format!("unexpected `{}`", self.peek_char()))),
        }
    }

    fn call_arg(&mut self) -> Result<Expr, ParseError> {
        self.expect(b'(')?;
        let e = self.expr()?;
        self.expect(b')')?;
        Ok(e)
    }

    fn braid_word(&mut self) -> Result<BraidWord, ParseError> {
        let start = self.pos;
        let mut letters = Vec::new();
        loop {
            self.skip_ws();
            if self.peek() != Some(b'b') {
                break;
            }
            self.pos += 1;
            let j = self.index("braid index")?;
            let sign = if self.peek() == Some(b'\'') {
                self.pos += 1;
                -1
            } else {
                1
            };
            letters.push((j, sign));
        }
        if letters.is_empty() {
            return Err(self.error_at(start, "expected a braid word like `b1 b2'`"));
        }
        BraidWord::new(letters).map_err(|e| self.error_at(start, e.to_string()))
    }

    fn digits(&mut self) -> &str {
        let start = self.pos;
        while self.peek().is_some_and(|b| b.is_ascii_digit()) {
            self.pos += 1;
        }
        std::str::from_utf8(&self.src[start..self.pos]).expect("ascii digits")
    }

    fn uint(&mut self, max: u64, what: &str) -> Result<u64, ParseError> {
        let start = self.pos;
        let s = self.digits();
        if s.is_empty() {
            return Err(self.error_at(start, format!("expected {what}")));
        }
        match s.parse::<u64>() {
            Ok(v) if v <= max => Ok(v),
            _ => Err(self.error_at(start, format!("{what} exceeds {max}"))),
        }
    }

    fn index(&mut self, what: &str) -> Result<u32, ParseError> {
        let start = self.pos;
        let v = self.uint(MAX_INDEX, what)?;
        if v == 0 {
            return Err(self.error_at(start, format!("{what} must be at least 1")));
        }
        Ok(v as u32)
    }

    fn signed_int(&mut self) -> Result<i64, ParseError> {
        self.skip_ws();
        let start = self.pos;
        let neg = match self.peek() {
            Some(b'-') => {
                self.pos += 1;
                true
            }
            Some(b'+') => {
                self.pos += 1;
                false
            }
            _ => false,
        };
        let digits_at = self.pos;
        let s = self.digits();
        if s.is_empty() {
            return Err(self.error_at(digits_at, "expected an integer exponent"));
        }
        let text = if neg { format!("-{s}") } else { s.to_string() };
        text.parse::<i64>()
            .map_err(|_| self.error_at(start, "exponent out of range"))
    }

    fn decimal(&mut self) -> Result<f64, ParseError> {
        let start = self.pos;
        self.digits();
        if self.peek() == Some(b'.') {
            self.pos += 1;
            self.digits();
        }
        let s = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii");
        match s.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(v),
            _ => Err(self.error_at(start, format!("malformed number `{s}`"))),
        }
    }

    /// `i` suffix not glued to a following identifier.
    fn imaginary_suffix(&self) -> bool {
        self.peek() == Some(b'i') && !self.peek_at(1).is_some_and(|b| b.is_ascii_alphabetic())
    }

    fn number(&mut self) -> Result<Expr, ParseError> {
        let re = self.decimal()?;
        let after_re = self.pos;
        if let (Some(s @ (b'+' | b'-')), Some(b)) = (self.peek(), self.peek_at(1)) {
            if b.is_ascii_digit() {
                self.pos += 1;
                let im = self.decimal()?;
                if self.imaginary_suffix() {
                    self.pos += 1;
                    let im = if s == b'-' { -im } else { im };
                    return Ok(Expr::Literal(Complex64::new(re, im)));
                }
                self.pos = after_re;
            }
        }
        if self.imaginary_suffix() {
            self.pos += 1;
            return Ok(Expr::Literal(Complex64::new(0.0, re)));
        }
        Ok(Expr::Literal(Complex64::new(re, 0.0)))
    }
}
