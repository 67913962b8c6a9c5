//! Symbolic arithmetic in the Z_d-graded parafermion algebra.
//!
//! Elements are finite linear combinations of normal-form monomials
//! `c_1^{e_1} c_2^{e_2} ... c_n^{e_n}` (ascending strand order, exponents in
//! `1..d`). Products are rewritten with `c_j c_k = q c_k c_j` for `j < k` and
//! `c_j^d = I`. All phases picked up during rewriting are tracked as exact
//! integer exponents of the primitive `2d²`-th root of unity and are only
//! turned into floating point once per product term.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{PfError, Result};

/// Relative size below which a sum of coefficients is treated as an exact
/// cancellation (the result is within rounding error of zero).
const CANCELLATION_EPS: f64 = 1e-13;

/// Exact root of unity `exp(2πi · turns / denom)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Phase {
    turns: u64,
    denom: u64,
}

impl Phase {
    pub fn one(denom: u64) -> Self {
        Phase { turns: 0, denom }
    }

    pub fn new(turns: i64, denom: u64) -> Self {
        Phase {
            turns: turns.rem_euclid(denom as i64) as u64,
            denom,
        }
    }

    pub fn turns(&self) -> u64 {
        self.turns
    }

    pub fn denom(&self) -> u64 {
        self.denom
    }

    pub fn is_one(&self) -> bool {
        self.turns == 0
    }

    pub fn inverse(self) -> Self {
        Phase::new(-(self.turns as i64), self.denom)
    }

    pub fn pow(self, k: i64) -> Self {
        let t = (self.turns as i128 * k as i128).rem_euclid(self.denom as i128);
        Phase {
            turns: t as u64,
            denom: self.denom,
        }
    }

    pub fn to_complex(self) -> Complex64 {
        if self.turns == 0 {
            return Complex64::new(1.0, 0.0);
        }
        // Exact values on the axes avoid spurious 1e-17 components.
        let (t, n) = (self.turns, self.denom);
        if 4 * t == n {
            return Complex64::new(0.0, 1.0);
        }
        if 2 * t == n {
            return Complex64::new(-1.0, 0.0);
        }
        if 4 * t == 3 * n {
            return Complex64::new(0.0, -1.0);
        }
        Complex64::from_polar(1.0, 2.0 * PI * t as f64 / n as f64)
    }
}

impl Mul for Phase {
    type Output = Phase;

    fn mul(self, rhs: Phase) -> Phase {
        assert_eq!(self.denom, rhs.denom, "phases over different denominators");
        Phase {
            turns: (self.turns + rhs.turns) % self.denom,
            denom: self.denom,
        }
    }
}

/// Order `d` of the algebra together with the chosen square root `zeta` of `q`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct AlgebraParams {
    d: u32,
    /// `zeta = exp(2πi · zeta_turns / 2d²)`.
    zeta_turns: u64,
}

impl AlgebraParams {
    /// Parameters with `zeta = exp(iπ(d+1)/d)`.
    pub fn new(d: u32) -> Result<Self> {
        if d < 2 {
            return Err(PfError::InvalidOrder(d));
        }
        let d64 = d as u64;
        Ok(AlgebraParams {
            d,
            zeta_turns: (d64 * (d64 + 1)) % (2 * d64 * d64),
        })
    }

    /// The other admissible root `-zeta`; only valid for even `d`, where
    /// `(-zeta)^{d²} = 1` still holds.
    pub fn with_alternate_zeta(self) -> Result<Self> {
        if !self.d.is_multiple_of(2) {
            return Err(PfError::Format(format!(
                "-zeta is not a d²-th root of unity for odd d = {}",
                self.d
            )));
        }
        let d64 = self.d as u64;
        Ok(AlgebraParams {
            d: self.d,
            zeta_turns: (self.zeta_turns + d64 * d64) % (2 * d64 * d64),
        })
    }

    pub fn d(&self) -> u32 {
        self.d
    }

    /// Common denominator `2d²` of every phase exponent.
    pub fn phase_denom(&self) -> u64 {
        2 * (self.d as u64) * (self.d as u64)
    }

    pub fn q_phase(&self) -> Phase {
        Phase::new(2 * self.d as i64, self.phase_denom())
    }

    pub fn zeta_phase(&self) -> Phase {
        Phase::new(self.zeta_turns as i64, self.phase_denom())
    }

    pub fn q_pow(&self, k: i64) -> Phase {
        self.q_phase().pow(k)
    }

    pub fn zeta_pow(&self, k: i64) -> Phase {
        self.zeta_phase().pow(k)
    }

    pub fn q(&self) -> Complex64 {
        self.q_phase().to_complex()
    }

    pub fn zeta(&self) -> Complex64 {
        self.zeta_phase().to_complex()
    }

    pub fn charge(&self, value: i64) -> Charge {
        Charge::new(value, self.d)
    }

    pub fn reduce(&self, e: i64) -> u32 {
        e.rem_euclid(self.d as i64) as u32
    }

    fn check_same(&self, other: &AlgebraParams) -> Result<()> {
        if self != other {
            return Err(PfError::IncompatibleAlgebras {
                left: self.d,
                right: other.d,
            });
        }
        Ok(())
    }

    /// Rewrite an arbitrary word of generator powers into normal form.
    ///
    /// Moving `c_k^b` to the left of `c_j^a` (`j > k`) costs `q^{-ab}`.
    pub fn normalize_word(&self, word: &[(u32, i64)]) -> (MonomialKey, Phase) {
        let mut acc: BTreeMap<u32, u32> = BTreeMap::new();
        let mut q_exp: i64 = 0;
        for &(strand, e) in word {
            let e = self.reduce(e);
            if e == 0 {
                continue;
            }
            let passed: i64 = acc
                .range(strand + 1..)
                .map(|(_, &a)| a as i64)
                .sum();
            q_exp -= passed * e as i64;
            let slot = acc.entry(strand).or_insert(0);
            *slot = (*slot + e) % self.d;
            q_exp = q_exp.rem_euclid(self.d as i64);
        }
        acc.retain(|_, e| *e != 0);
        (MonomialKey(acc.into_iter().collect()), self.q_pow(q_exp))
    }

    /// Product of two normal-form monomials.
    pub fn mul_keys(&self, a: &MonomialKey, b: &MonomialKey) -> (MonomialKey, Phase) {
        let mut q_exp: i64 = 0;
        // Every exponent of `a` on a strand above `k` is passed by `c_k^{b_k}`.
        let mut suffix: i64 = a.0.iter().map(|&(_, e)| e as i64).sum();
        let mut ia = 0;
        for &(sk, bk) in &b.0 {
            while ia < a.0.len() && a.0[ia].0 <= sk {
                suffix -= a.0[ia].1 as i64;
                ia += 1;
            }
            q_exp -= suffix * bk as i64;
        }
        let mut merged: Vec<(u32, u32)> = Vec::with_capacity(a.0.len() + b.0.len());
        let (mut i, mut j) = (0, 0);
        while i < a.0.len() || j < b.0.len() {
            match (a.0.get(i), b.0.get(j)) {
                (Some(&(sa, ea)), Some(&(sb, eb))) if sa == sb => {
                    let e = (ea + eb) % self.d;
                    if e != 0 {
                        merged.push((sa, e));
                    }
                    i += 1;
                    j += 1;
                }
                (Some(&(sa, ea)), Some(&(sb, _))) if sa < sb => {
                    merged.push((sa, ea));
                    i += 1;
                }
                (Some(&p), None) => {
                    merged.push(p);
                    i += 1;
                }
                (_, Some(&p)) => {
                    merged.push(p);
                    j += 1;
                }
                (None, None) => unreachable!(),
            }
        }
        (MonomialKey(merged), self.q_pow(q_exp))
    }
}

/// Residue mod `d`: the Z_d grading.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Charge {
    value: u32,
    modulus: u32,
}

impl Charge {
    pub fn new(value: i64, d: u32) -> Self {
        Charge {
            value: value.rem_euclid(d as i64) as u32,
            modulus: d,
        }
    }

    pub fn value(&self) -> u32 {
        self.value
    }

    pub fn modulus(&self) -> u32 {
        self.modulus
    }

    pub fn is_neutral(&self) -> bool {
        self.value == 0
    }
}

impl Add for Charge {
    type Output = Charge;

    fn add(self, rhs: Charge) -> Charge {
        debug_assert_eq!(self.modulus, rhs.modulus);
        Charge::new(self.value as i64 + rhs.value as i64, self.modulus)
    }
}

impl Neg for Charge {
    type Output = Charge;

    fn neg(self) -> Charge {
        Charge::new(-(self.value as i64), self.modulus)
    }
}

impl fmt::Display for Charge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} mod {}", self.value, self.modulus)
    }
}

/// Degree of an element: a common charge or a mixture of charges.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Degree {
    Homogeneous(Charge),
    Mixed,
}

/// Normal-form exponent vector: `(strand, exponent)` pairs with strictly
/// increasing strands and exponents in `1..d`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MonomialKey(Vec<(u32, u32)>);

impl MonomialKey {
    pub fn identity() -> Self {
        MonomialKey(Vec::new())
    }

    /// Builds a key from pairs that must already be in normal form.
    pub fn from_pairs(pairs: Vec<(u32, u32)>, d: u32) -> Result<Self> {
        for w in pairs.windows(2) {
            if w[0].0 >= w[1].0 {
                return Err(PfError::Format(format!(
                    "strands must be strictly increasing, got {} then {}",
                    w[0].0, w[1].0
                )));
            }
        }
        for &(s, e) in &pairs {
            if s == 0 {
                return Err(PfError::Format("strands are numbered from 1".into()));
            }
            if e == 0 || e >= d {
                return Err(PfError::Format(format!(
                    "exponent {e} on strand {s} outside 1..{d}"
                )));
            }
        }
        Ok(MonomialKey(pairs))
    }

    pub fn pairs(&self) -> &[(u32, u32)] {
        &self.0
    }

    pub fn is_identity(&self) -> bool {
        self.0.is_empty()
    }

    pub fn exponent(&self, strand: u32) -> u32 {
        self.0
            .iter()
            .find(|(s, _)| *s == strand)
            .map(|&(_, e)| e)
            .unwrap_or(0)
    }

    pub fn degree(&self, d: u32) -> Charge {
        Charge::new(self.0.iter().map(|&(_, e)| e as i64).sum(), d)
    }

    pub fn max_strand(&self) -> u32 {
        self.0.last().map(|&(s, _)| s).unwrap_or(0)
    }

    pub fn min_strand(&self) -> Option<u32> {
        self.0.first().map(|&(s, _)| s)
    }

    /// Number of qudit blocks (pairs of strands) needed to hold the monomial.
    pub fn blocks(&self) -> usize {
        (self.max_strand() as usize).div_ceil(2)
    }

    /// Re-indexes every strand `j -> j + offset`.
    pub fn shifted(&self, offset: u32) -> MonomialKey {
        MonomialKey(self.0.iter().map(|&(s, e)| (s + offset, e)).collect())
    }

    /// Exponents `(m, n)` of the block factor `c_{2k-1}^m c_{2k}^n` (k ≥ 1).
    pub fn block_exponents(&self, block: usize) -> (u32, u32) {
        let s = 2 * block as u32;
        (self.exponent(s - 1), self.exponent(s))
    }

    /// Splits into ordered per-block factors `C_1^{m_1 n_1} ... C_b^{m_b n_b}`.
    pub fn block_factors(&self, blocks: usize) -> Vec<(u32, u32)> {
        (1..=blocks).map(|k| self.block_exponents(k)).collect()
    }

    pub fn from_block_factors(factors: &[(u32, u32)]) -> MonomialKey {
        let mut pairs = Vec::new();
        for (k, &(m, n)) in factors.iter().enumerate() {
            let s = 2 * k as u32 + 1;
            if m != 0 {
                pairs.push((s, m));
            }
            if n != 0 {
                pairs.push((s + 1, n));
            }
        }
        MonomialKey(pairs)
    }
}

impl fmt::Display for MonomialKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "1");
        }
        for (i, &(s, e)) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, " ")?;
            }
            if e == 1 {
                write!(f, "c{s}")?;
            } else {
                write!(f, "c{s}^{e}")?;
            }
        }
        Ok(())
    }
}

/// A normal-form monomial with its coefficient.
#[derive(Clone, Debug, PartialEq)]
pub struct Monomial {
    pub key: MonomialKey,
    pub coeff: Complex64,
}

/// Rewrites `coeff · c_{s_1}^{e_1} ... c_{s_n}^{e_n}` into normal form.
pub fn normalize(params: &AlgebraParams, word: &[(u32, i64)], coeff: Complex64) -> Monomial {
    let (key, phase) = params.normalize_word(word);
    Monomial {
        key,
        coeff: coeff * phase.to_complex(),
    }
}

/// Adds `delta` into `slot`, snapping cancellations to exact zero.
fn accumulate(
    terms: &mut BTreeMap<MonomialKey, Complex64>,
    key: MonomialKey,
    delta: Complex64,
) {
    use std::collections::btree_map::Entry;
    match terms.entry(key) {
        Entry::Vacant(v) => {
            if delta != Complex64::new(0.0, 0.0) {
                v.insert(delta);
            }
        }
        Entry::Occupied(mut o) => {
            let old = *o.get();
            let new = old + delta;
            let scale = old.norm() + delta.norm();
            if new.norm() <= CANCELLATION_EPS * scale || new == Complex64::new(0.0, 0.0) {
                o.remove();
            } else {
                *o.get_mut() = new;
            }
        }
    }
}

/// Finite linear combination of normal-form monomials.
#[derive(Clone, Debug, PartialEq)]
pub struct AlgebraElement {
    params: AlgebraParams,
    terms: BTreeMap<MonomialKey, Complex64>,
}

impl AlgebraElement {
    pub fn zero(params: AlgebraParams) -> Self {
        AlgebraElement {
            params,
            terms: BTreeMap::new(),
        }
    }

    pub fn identity(params: AlgebraParams) -> Self {
        Self::scalar(params, Complex64::new(1.0, 0.0))
    }

    pub fn scalar(params: AlgebraParams, value: Complex64) -> Self {
        Self::from_key(params, MonomialKey::identity(), value)
    }

    /// The generator `c_strand`.
    pub fn generator(params: AlgebraParams, strand: u32) -> Self {
        Self::from_word(params, &[(strand, 1)], Complex64::new(1.0, 0.0))
    }

    pub fn from_word(params: AlgebraParams, word: &[(u32, i64)], coeff: Complex64) -> Self {
        let m = normalize(&params, word, coeff);
        Self::from_key(params, m.key, m.coeff)
    }

    pub fn from_key(params: AlgebraParams, key: MonomialKey, coeff: Complex64) -> Self {
        let mut terms = BTreeMap::new();
        if coeff != Complex64::new(0.0, 0.0) {
            terms.insert(key, coeff);
        }
        AlgebraElement { params, terms }
    }

    pub fn from_terms(
        params: AlgebraParams,
        terms: impl IntoIterator<Item = (MonomialKey, Complex64)>,
    ) -> Self {
        let mut out = Self::zero(params);
        for (k, c) in terms {
            accumulate(&mut out.terms, k, c);
        }
        out
    }

    pub fn params(&self) -> &AlgebraParams {
        &self.params
    }

    pub fn terms(&self) -> &BTreeMap<MonomialKey, Complex64> {
        &self.terms
    }

    pub fn coefficient(&self, key: &MonomialKey) -> Complex64 {
        self.terms.get(key).copied().unwrap_or_default()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Drops every term whose coefficient has magnitude at most `threshold`.
    pub fn pruned(mut self, threshold: f64) -> Self {
        self.terms.retain(|_, c| c.norm() > threshold);
        self
    }

    pub fn max_strand(&self) -> u32 {
        self.terms.keys().map(|k| k.max_strand()).max().unwrap_or(0)
    }

    pub fn min_strand(&self) -> Option<u32> {
        self.terms.keys().filter_map(|k| k.min_strand()).min()
    }

    /// Blocks needed to hold every term.
    pub fn blocks(&self) -> usize {
        (self.max_strand() as usize).div_ceil(2)
    }

    pub fn add(&self, other: &AlgebraElement) -> Result<AlgebraElement> {
        self.params.check_same(&other.params)?;
        let mut out = self.clone();
        for (k, &c) in &other.terms {
            accumulate(&mut out.terms, k.clone(), c);
        }
        Ok(out)
    }

    pub fn scale(&self, s: Complex64) -> AlgebraElement {
        if s == Complex64::new(0.0, 0.0) {
            return Self::zero(self.params);
        }
        AlgebraElement {
            params: self.params,
            terms: self.terms.iter().map(|(k, &c)| (k.clone(), c * s)).collect(),
        }
    }

    /// Bilinear extension of normal-ordering.
    pub fn multiply(&self, other: &AlgebraElement) -> Result<AlgebraElement> {
        self.params.check_same(&other.params)?;
        let mut out = Self::zero(self.params);
        for (ka, &ca) in &self.terms {
            for (kb, &cb) in &other.terms {
                let (k, phase) = self.params.mul_keys(ka, kb);
                accumulate(&mut out.terms, k, ca * cb * phase.to_complex());
            }
        }
        Ok(out)
    }

    pub fn pow(&self, n: u32) -> AlgebraElement {
        let mut acc = Self::identity(self.params);
        let mut base = self.clone();
        let mut n = n;
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

    /// The star operation: antilinear, antimultiplicative, `c_j* = c_j^{d-1}`.
    pub fn adjoint(&self) -> AlgebraElement {
        let mut out = Self::zero(self.params);
        for (k, &c) in &self.terms {
            let word: Vec<(u32, i64)> =
                k.0.iter().rev().map(|&(s, e)| (s, -(e as i64))).collect();
            let (key, phase) = self.params.normalize_word(&word);
            accumulate(&mut out.terms, key, c.conj() * phase.to_complex());
        }
        out
    }

    /// Common charge of all terms; the zero element counts as neutral.
    pub fn degree(&self) -> Degree {
        let mut charges = self.terms.keys().map(|k| k.degree(self.params.d));
        let Some(first) = charges.next() else {
            return Degree::Homogeneous(self.params.charge(0));
        };
        if charges.all(|c| c == first) {
            Degree::Homogeneous(first)
        } else {
            Degree::Mixed
        }
    }

    /// Splits into homogeneous components; only nonzero components are present.
    pub fn charge_components(&self) -> BTreeMap<Charge, AlgebraElement> {
        let mut out: BTreeMap<Charge, AlgebraElement> = BTreeMap::new();
        for (k, &c) in &self.terms {
            out.entry(k.degree(self.params.d))
                .or_insert_with(|| Self::zero(self.params))
                .terms
                .insert(k.clone(), c);
        }
        out
    }

    /// Charge-`ell` component via `(1/d) Σ_k q^{k ell} c_1^{-k} y c_1^k`.
    ///
    /// Only meaningful when `y` avoids strand 1, where `c_1` detects charge.
    pub fn charge_projection_by_conjugation(&self, ell: u32) -> Result<AlgebraElement> {
        if self.min_strand() == Some(1) {
            return Err(PfError::Eval(
                "conjugation by c_1 cannot detect charge on strand 1".into(),
            ));
        }
        let d = self.params.d;
        let mut out = Self::zero(self.params);
        for k in 0..d as i64 {
            let left = Self::from_word(self.params, &[(1, -k)], Complex64::new(1.0, 0.0));
            let right = Self::from_word(self.params, &[(1, k)], Complex64::new(1.0, 0.0));
            let conj = &(&left * self) * &right;
            let w = self.params.q_pow(k * ell as i64).to_complex() / d as f64;
            out = &out + &conj.scale(w);
        }
        Ok(out)
    }

    /// `zeta^{mn} · a b` for homogeneous `a` (degree m) and `b` (degree n).
    pub fn twisted_product(&self, other: &AlgebraElement) -> Result<AlgebraElement> {
        self.params.check_same(&other.params)?;
        let (Degree::Homogeneous(m), Degree::Homogeneous(n)) = (self.degree(), other.degree())
        else {
            return Err(PfError::NotHomogeneous);
        };
        let phase = self
            .params
            .zeta_pow(m.value() as i64 * n.value() as i64)
            .to_complex();
        Ok(self.multiply(other)?.scale(phase))
    }

    /// The double shift `alpha^k`: every strand `j -> j + 2k`.
    pub fn shift(&self, k: u32) -> AlgebraElement {
        AlgebraElement {
            params: self.params,
            terms: self
                .terms
                .iter()
                .map(|(key, &c)| (key.shifted(2 * k), c))
                .collect(),
        }
    }

    /// Largest coefficient difference.
    pub fn distance(&self, other: &AlgebraElement) -> f64 {
        let mut worst: f64 = 0.0;
        for (k, &c) in &self.terms {
            worst = worst.max((c - other.coefficient(k)).norm());
        }
        for (k, &c) in &other.terms {
            if !self.terms.contains_key(k) {
                worst = worst.max(c.norm());
            }
        }
        worst
    }

    /// Euclidean norm of the coefficient vector, which equals the
    /// normalized Hilbert-Schmidt norm of the represented operator.
    pub fn coefficient_norm(&self) -> f64 {
        self.terms.values().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }
}

fn fmt_coeff(c: Complex64) -> String {
    if c.im == 0.0 {
        format!("{}", c.re)
    } else if c.re == 0.0 {
        format!("{}i", c.im)
    } else if c.im < 0.0 {
        format!("({}-{}i)", c.re, -c.im)
    } else {
        format!("({}+{}i)", c.re, c.im)
    }
}

impl fmt::Display for AlgebraElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, (k, &c)) in self.terms.iter().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            if c == Complex64::new(1.0, 0.0) {
                write!(f, "{k}")?;
            } else if k.is_identity() {
                write!(f, "{}", fmt_coeff(c))?;
            } else {
                write!(f, "{} {k}", fmt_coeff(c))?;
            }
        }
        Ok(())
    }
}

impl Add for &AlgebraElement {
    type Output = AlgebraElement;

    /// Panics when the orders differ; use [`AlgebraElement::add`] to get an error.
    fn add(self, rhs: &AlgebraElement) -> AlgebraElement {
        AlgebraElement::add(self, rhs).expect("adding elements of different algebras")
    }
}

impl Sub for &AlgebraElement {
    type Output = AlgebraElement;

    fn sub(self, rhs: &AlgebraElement) -> AlgebraElement {
        self + &rhs.scale(Complex64::new(-1.0, 0.0))
    }
}

impl Neg for &AlgebraElement {
    type Output = AlgebraElement;

    fn neg(self) -> AlgebraElement {
        self.scale(Complex64::new(-1.0, 0.0))
    }
}

impl Mul for &AlgebraElement {
    type Output = AlgebraElement;

    /// Panics when the orders differ; use [`AlgebraElement::multiply`] to get an error.
    fn mul(self, rhs: &AlgebraElement) -> AlgebraElement {
        self.multiply(rhs)
            .expect("multiplying elements of different algebras")
    }
}

impl Mul<Complex64> for &AlgebraElement {
    type Output = AlgebraElement;

    fn mul(self, rhs: Complex64) -> AlgebraElement {
        self.scale(rhs)
    }
}
