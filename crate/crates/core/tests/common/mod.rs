//! Independent oracles shared by the integration tests.
//!
//! Nothing here calls the library's normal ordering, representation or
//! braid code: generators are built from clock and shift matrices with
//! plain floating-point phases.
#![allow(dead_code)]

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;

use parafermion::expr::{Expr, NamedScalar, Scalar, Sign};

pub type M = DMatrix<Complex64>;

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn q(d: u32) -> Complex64 {
    Complex64::from_polar(1.0, 2.0 * PI / d as f64)
}

pub fn zeta(d: u32) -> Complex64 {
    Complex64::from_polar(1.0, PI * (d as f64 + 1.0) / d as f64)
}

/// `(1/√d) Σ_j ζ^{j²}`.
pub fn omega(d: u32, zeta: Complex64) -> Complex64 {
    let s: Complex64 = (0..d as i64).map(|j| zeta.powi((j * j) as i32)).sum();
    s / (d as f64).sqrt()
}

pub fn kron_all(ms: &[M]) -> M {
    let mut out = M::from_element(1, 1, c(1.0, 0.0));
    for m in ms {
        out = out.kronecker(m);
    }
    out
}

pub fn clock(d: u32) -> M {
    let q = q(d);
    M::from_fn(d as usize, d as usize, |i, j| if i == j { q.powi(i as i32) } else { c(0.0, 0.0) })
}

pub fn shift(d: u32) -> M {
    let n = d as usize;
    M::from_fn(n, n, |i, j| if i == (j + 1) % n { c(1.0, 0.0) } else { c(0.0, 0.0) })
}

/// Generator matrices `c_1 .. c_{2m}`, with the given `ζ`.
///
/// `c_{2j-1} = Z†⊗…⊗Z† ⊗ X ⊗ 1…`, `c_{2j} = Z†⊗…⊗Z† ⊗ ζ^{d-1} X Z† ⊗ 1…`.
pub fn generators_with(d: u32, blocks: usize, zeta: Complex64) -> Vec<M> {
    let n = d as usize;
    let z_dag = clock(d).adjoint();
    let x = shift(d);
    let id = M::identity(n, n);
    let odd = x.clone();
    let even = &x * &z_dag * zeta.powi(d as i32 - 1);
    let mut out = Vec::with_capacity(2 * blocks);
    for site in 0..blocks {
        for local in [&odd, &even] {
            let factors: Vec<M> = (0..blocks)
                .map(|s| {
                    if s < site {
                        z_dag.clone()
                    } else if s == site {
                        (*local).clone()
                    } else {
                        id.clone()
                    }
                })
                .collect();
            out.push(kron_all(&factors));
        }
    }
    out
}

pub fn generators(d: u32, blocks: usize) -> Vec<M> {
    generators_with(d, blocks, zeta(d))
}

/// Integer power of a unitary; negative powers use the adjoint.
pub fn upow(u: &M, e: i64) -> M {
    let base = if e < 0 { u.adjoint() } else { u.clone() };
    let mut out = M::identity(u.nrows(), u.ncols());
    for _ in 0..e.unsigned_abs() {
        out = &out * &base;
    }
    out
}

/// Two-string braid on strands `k, k+1` from dense generators.
pub fn two_string(gens: &[M], d: u32, zeta: Complex64, k: usize) -> M {
    let pref = omega(d, zeta).sqrt() / (d as f64).sqrt();
    let n = gens[0].nrows();
    let mut out = M::zeros(n, n);
    for i in 0..d as i64 {
        out += upow(&gens[k - 1], i) * upow(&gens[k], -i);
    }
    out * pref
}

/// Four-string braid `b_j` exchanging blocks `j` and `j+1`.
pub fn four_string(gens: &[M], d: u32, zeta: Complex64, j: usize) -> M {
    let t = |k: usize| two_string(gens, d, zeta, k);
    (t(2 * j) * t(2 * j - 1) * t(2 * j + 1) * t(2 * j)).adjoint()
}

pub fn spectral(m: &M) -> f64 {
    m.clone().singular_values().max()
}

pub fn brute_p0(d: u32) -> u32 {
    (1..=d).find(|p| (p * p) % d == 0).expect("d itself works")
}

pub fn trial_square_free(d: u32) -> bool {
    (2..=d).all(|p| !d.is_multiple_of(p * p))
}

/// Normal form of a word by random adjacent swaps, using
/// `c_j^a c_k^b = q^{ab} c_k^b c_j^a` for `j < k` and `c^d = 1`.
/// Returns `(strand, exponent)` pairs with exponents in `1..d` and the phase.
pub fn rewrite_word<R: Rng>(d: u32, word: &[(u32, i64)], rng: &mut R) -> (Vec<(u32, u32)>, Complex64) {
    let q = q(d);
    let di = d as i64;
    let mut w: Vec<(u32, i64)> = word.iter().map(|&(s, e)| (s, e.rem_euclid(di))).filter(|&(_, e)| e != 0).collect();
    let mut phase = c(1.0, 0.0);
    loop {
        let merges: Vec<usize> = (0..w.len().saturating_sub(1)).filter(|&i| w[i].0 == w[i + 1].0).collect();
        let swaps: Vec<usize> = (0..w.len().saturating_sub(1)).filter(|&i| w[i].0 > w[i + 1].0).collect();
        if merges.is_empty() && swaps.is_empty() {
            break;
        }
        let pick_merge = !merges.is_empty() && (swaps.is_empty() || rng.random_bool(0.5));
        if pick_merge {
            let i = merges[rng.random_range(0..merges.len())];
            let e = (w[i].1 + w[i + 1].1).rem_euclid(di);
            w.remove(i + 1);
            if e == 0 {
                w.remove(i);
            } else {
                w[i].1 = e;
            }
        } else {
            let i = swaps[rng.random_range(0..swaps.len())];
            // c_j^a c_k^b with j > k becomes q^{-ab} c_k^b c_j^a.
            let (a, b) = (w[i].1, w[i + 1].1);
            phase *= q.powi(-((a * b).rem_euclid(di)) as i32);
            w.swap(i, i + 1);
        }
    }
    (w.into_iter().map(|(s, e)| (s, e as u32)).collect(), phase)
}

// Random expressions.

pub fn random_literal<R: Rng>(rng: &mut R) -> Complex64 {
    let pick = |rng: &mut R| (rng.random_range(0..=8) as f64) * 0.25;
    match rng.random_range(0..3) {
        0 => c(pick(rng).max(0.25), 0.0),
        1 => c(0.0, pick(rng).max(0.25)),
        _ => {
            let im = pick(rng) - 1.0;
            c(pick(rng), if im == 0.0 { 0.5 } else { im })
        }
    }
}

pub fn random_named<R: Rng>(rng: &mut R) -> NamedScalar {
    [NamedScalar::Q, NamedScalar::Zeta, NamedScalar::Omega, NamedScalar::I][rng.random_range(0..4)]
}

pub fn random_scalar<R: Rng>(rng: &mut R) -> Scalar {
    if rng.random_bool(0.5) {
        Scalar::Named(random_named(rng))
    } else {
        Scalar::Literal(random_literal(rng))
    }
}

fn scalar_expr(s: Scalar) -> Expr {
    match s {
        Scalar::Named(n) => Expr::Named(n),
        Scalar::Literal(z) => Expr::Literal(z),
    }
}

fn random_word<R: Rng>(rng: &mut R, blocks: usize) -> Option<parafermion::braid::BraidWord> {
    if blocks < 2 {
        return None;
    }
    let len = rng.random_range(1..=2);
    let letters = (0..len)
        .map(|_| (rng.random_range(1..blocks as u32), if rng.random_bool(0.5) { 1 } else { -1 }))
        .collect();
    parafermion::braid::BraidWord::new(letters).ok()
}

/// Random expression that parses back to itself and evaluates on
/// `blocks` blocks. Negative powers only touch generators and braids.
pub fn random_expr<R: Rng>(rng: &mut R, depth: u32, blocks: usize) -> Expr {
    let leaf = depth == 0 || rng.random_bool(0.3);
    if leaf {
        return random_atom(rng, blocks);
    }
    match rng.random_range(0..8) {
        0 => {
            let n = rng.random_range(2..=3);
            let mut terms = Vec::new();
            for i in 0..n {
                let mut t = random_expr(rng, depth - 1, blocks);
                if matches!(t, Expr::Sum(_)) {
                    t = Expr::Power(Box::new(t), 1);
                }
                let s = if i > 0 && rng.random_bool(0.5) { Sign::Minus } else { Sign::Plus };
                terms.push((s, t));
            }
            Expr::Sum(terms)
        }
        1 => {
            let inner = loop {
                let e = random_expr(rng, depth - 1, blocks);
                match &e {
                    Expr::Product(fs) if fs[0].is_scalar() => continue,
                    Expr::Named(_) | Expr::Literal(_) | Expr::Scaled(..) | Expr::Sum(_) => continue,
                    _ => break e,
                }
            };
            Expr::Scaled(random_scalar(rng), Box::new(inner))
        }
        2 | 3 => {
            let n = rng.random_range(2..=3);
            Expr::Product((0..n).map(|_| random_expr(rng, depth - 1, blocks)).collect())
        }
        4 => {
            let inner = random_expr(rng, depth - 1, blocks);
            Expr::Power(Box::new(inner), rng.random_range(0..=2))
        }
        5 if blocks >= 2 => {
            let power = rng.random_range(1..blocks) as u32;
            Expr::Alpha {
                power,
                inner: Box::new(random_expr(rng, depth - 1, blocks - power as usize)),
            }
        }
        6 => match random_word(rng, blocks) {
            Some(word) => Expr::Ad {
                word,
                inner: Box::new(random_expr(rng, depth - 1, blocks)),
            },
            None => random_atom(rng, blocks),
        },
        _ => Expr::Star(Box::new(random_expr(rng, depth - 1, blocks))),
    }
}

fn random_atom<R: Rng>(rng: &mut R, blocks: usize) -> Expr {
    match rng.random_range(0..10) {
        0..=5 => Expr::Gen {
            strand: rng.random_range(1..=2 * blocks as u32),
            exp: rng.random_range(-2..=3),
        },
        6 if blocks >= 2 => Expr::Braid {
            index: rng.random_range(1..blocks as u32),
            exp: [1, -1, 2][rng.random_range(0..3)],
        },
        7 => Expr::Named(random_named(rng)),
        _ => scalar_expr(Scalar::Literal(random_literal(rng))),
    }
}

/// Dense matrix of an expression, computed without normal ordering.
pub struct MatrixOracle {
    pub d: u32,
    pub blocks: usize,
    pub zeta: Complex64,
    pub gens: Vec<M>,
}

impl MatrixOracle {
    pub fn new(d: u32, blocks: usize) -> Self {
        let zeta = zeta(d);
        MatrixOracle { d, blocks, zeta, gens: generators_with(d, blocks, zeta) }
    }

    fn dim(&self) -> usize {
        (self.d as usize).pow(self.blocks as u32)
    }

    fn scalar(&self, s: &Scalar) -> Complex64 {
        match s {
            Scalar::Named(NamedScalar::Q) => q(self.d),
            Scalar::Named(NamedScalar::Zeta) => self.zeta,
            Scalar::Named(NamedScalar::Omega) => omega(self.d, self.zeta),
            Scalar::Named(NamedScalar::I) => c(0.0, 1.0),
            Scalar::Literal(z) => *z,
        }
    }

    fn braid(&self, j: usize) -> M {
        four_string(&self.gens, self.d, self.zeta, j)
    }

    /// `offset` counts blocks added by enclosing `alpha`s.
    pub fn eval(&self, e: &Expr, offset: usize) -> M {
        let n = self.dim();
        match e {
            Expr::Sum(terms) => {
                let mut acc = M::zeros(n, n);
                for (s, t) in terms {
                    let v = self.eval(t, offset);
                    match s {
                        Sign::Plus => acc += v,
                        Sign::Minus => acc -= v,
                    }
                }
                acc
            }
            Expr::Scaled(s, inner) => self.eval(inner, offset) * self.scalar(s),
            Expr::Product(fs) => fs.iter().fold(M::identity(n, n), |acc, f| acc * self.eval(f, offset)),
            Expr::Gen { strand, exp } => upow(&self.gens[*strand as usize - 1 + 2 * offset], *exp),
            Expr::Braid { index, exp } => upow(&self.braid(*index as usize + offset), *exp),
            Expr::Power(inner, k) => {
                let m = self.eval(inner, offset);
                let base = if *k < 0 { m.try_inverse().expect("invertible") } else { m };
                let mut out = M::identity(n, n);
                for _ in 0..k.unsigned_abs() {
                    out = &out * &base;
                }
                out
            }
            Expr::Alpha { power, inner } => self.eval(inner, offset + *power as usize),
            Expr::Ad { word, inner } => {
                let mut b = M::identity(n, n);
                for &(j, s) in word.letters() {
                    b *= upow(&self.braid(j as usize + offset), s as i64);
                }
                &b * self.eval(inner, offset) * b.adjoint()
            }
            Expr::Star(inner) => self.eval(inner, offset).adjoint(),
            Expr::Named(nm) => M::identity(n, n) * self.scalar(&Scalar::Named(*nm)),
            Expr::Literal(z) => M::identity(n, n) * *z,
        }
    }
}

/// Random one-block density keeping only the charge components divisible
/// by `p0(d)`. Dropping the others is an average over grading conjugations,
/// so the result stays positive.
pub fn admissible_density<R: Rng>(d: u32, rng: &mut R) -> parafermion::state::DensityState {
    use parafermion::matrix_rep::{expand, represent};
    use parafermion::state::DensityState;
    let p = parafermion::AlgebraParams::new(d).unwrap();
    let p0 = brute_p0(d);
    let rho = DensityState::random(p, 1, d as usize, rng).unwrap();
    let x = expand(rho.rho(), 0.0).unwrap();
    let kept = x
        .charge_components()
        .into_iter()
        .filter(|(ch, _)| ch.value() % p0 == 0)
        .fold(parafermion::AlgebraElement::zero(p), |acc, (_, part)| &acc + &part);
    DensityState::new(represent(&kept, 1).unwrap()).unwrap()
}

/// Trace norm of a Hermitian difference.
pub fn trace_norm(m: &M) -> f64 {
    m.clone().singular_values().iter().sum()
}
