//! Finite-truncation versions of the de Finetti machinery: shift averages,
//! tail probes, independence and factorization tests, the braid commutant,
//! charge bookkeeping, the Dirac check and character-twisted states.

use std::collections::BTreeSet;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::algebra::{AlgebraElement, AlgebraParams, Degree, MonomialKey};
use crate::braid::{four_string_braid, shift_alpha};
use crate::error::{PfError, Result};
use crate::matrix_rep::{expand, hermitian_eigen, monomial_basis, represent, spectral_norm, Operator};
use crate::state::{self, density_braid_residual, Check, DensityState, StateFunctional};

/// Largest superoperator size (`d^{2m}`) handled by [`fixed_point_algebra`].
pub const FIXED_POINT_CAP: usize = 1024;

const NULLSPACE_TOL: f64 = 1e-8;
const CHARGE_TOL: f64 = 1e-8;

/// `{test, d, m, params, residuals, bound, pass}`.
pub fn report_json(
    test: &str,
    d: u32,
    m: usize,
    params: Value,
    residuals: Value,
    bound: Option<f64>,
    pass: bool,
) -> Value {
    json!({
        "test": test,
        "d": d,
        "m": m,
        "params": params,
        "residuals": residuals,
        "bound": bound,
        "pass": pass,
    })
}

/// `(α + α² + ... + α^k)(x) / k`.
pub fn shift_average(x: &AlgebraElement, k: u32) -> Result<AlgebraElement> {
    if k == 0 {
        return Err(PfError::Format("averaging depth k must be at least 1".into()));
    }
    let mut acc = AlgebraElement::zero(*x.params());
    for n in 1..=k {
        acc = &acc + &shift_alpha(x, n);
    }
    Ok(acc.scale(Complex64::new(1.0 / k as f64, 0.0)))
}

fn homogeneous_degree(x: &AlgebraElement) -> Result<u32> {
    match x.degree() {
        Degree::Homogeneous(c) => Ok(c.value()),
        Degree::Mixed => Err(PfError::NotHomogeneous),
    }
}

fn operator_norm(x: &AlgebraElement) -> Result<f64> {
    Ok(represent(x, x.blocks().max(1))?.norm())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AveragingReport {
    pub k: u32,
    pub m: usize,
    pub bound: f64,
    /// `‖(𝔖_k(x)A − q^r A 𝔖_k(x))Ω‖` in the GNS space of the state.
    pub observed: f64,
    /// `|φ(𝔖_k(x)A) − q^r φ(A 𝔖_k(x))|`.
    pub scalar_deviation: f64,
    /// `|φ(𝔖_k(x)A) − φ(x)φ(A)|`, only for neutral `x`.
    pub gap: Option<f64>,
    pub pass: bool,
}

/// Measures the commutation defect of `𝔖_k(x)` against `A` in a product
/// state and compares it with `(2m/k)‖A‖‖x‖`.
///
/// `m` defaults to the larger support (in blocks) of `x` and `A`.
pub fn tail_expectation_probe(
    x: &AlgebraElement,
    a: &AlgebraElement,
    phi: &StateFunctional,
    k: u32,
    m: Option<usize>,
) -> Result<AveragingReport> {
    let rho = phi
        .product_factor()
        .ok_or_else(|| PfError::Format("the tail probe needs a product state".into()))?;
    let adm = admissibility_check(rho)?;
    if !adm.admissible {
        return Err(PfError::Inadmissible {
            offending: adm.offending,
        });
    }
    let params = *phi.params();
    let dx = homogeneous_degree(x)?;
    let da = homogeneous_degree(a)?;
    let r = -(dx as i64) * (da as i64);
    let s = shift_average(x, k)?;
    let blocks = s.blocks().max(a.blocks()).max(x.blocks()).max(1);
    let state = state::product_state(rho, blocks)?;

    let qr = params.q_pow(r).to_complex();
    let sa = s.multiply(a)?;
    let as_ = a.multiply(&s)?;
    let v = &sa - &as_.scale(qr);
    let observed = state.evaluate(&v.adjoint().multiply(&v)?)?.re.max(0.0).sqrt();
    let scalar_deviation = (state.evaluate(&sa)? - qr * state.evaluate(&as_)?).norm();
    let gap = if dx == 0 {
        Some((state.evaluate(&sa)? - state.evaluate(x)? * state.evaluate(a)?).norm())
    } else {
        None
    };
    let m = m.unwrap_or_else(|| x.blocks().max(a.blocks()).max(1));
    let bound = 2.0 * m as f64 / k as f64 * operator_norm(a)? * operator_norm(x)?;
    Ok(AveragingReport {
        k,
        m,
        bound,
        observed,
        scalar_deviation,
        gap,
        pass: observed <= bound + 1e-10,
    })
}

fn block_span(x: &AlgebraElement) -> Option<(usize, usize)> {
    let lo = x.min_strand()?;
    Some(((lo as usize).div_ceil(2), x.blocks()))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IndependenceReport {
    pub residual: f64,
    /// Pass/fail is only asserted for product states.
    pub pass: Option<bool>,
}

/// `|φ(xy) − φ(x)φ(y)|` for `x` supported on blocks strictly before `y`.
pub fn t_independence_test(
    phi: &StateFunctional,
    x: &AlgebraElement,
    y: &AlgebraElement,
    tol: f64,
) -> Result<IndependenceReport> {
    if let (Some((_, x_hi)), Some((y_lo, _))) = (block_span(x), block_span(y)) {
        if x_hi >= y_lo {
            return Err(PfError::OverlappingSupports(format!(
                "x reaches block {x_hi}, y starts at block {y_lo}"
            )));
        }
    }
    let xy = x.multiply(y)?;
    let residual = (phi.evaluate(&xy)? - phi.evaluate(x)? * phi.evaluate(y)?).norm();
    let pass = phi.product_factor().map(|_| residual <= tol);
    Ok(IndependenceReport { residual, pass })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChargeStructure {
    pub d: u32,
    pub p0: u32,
    pub square_free: bool,
    /// `{0, p0, 2p0, ...}` mod d.
    pub admissible: Vec<u32>,
    pub m0_estimate: Option<u32>,
}

/// Smallest `k ≥ 1` with `d | k²`.
pub fn p0(d: u32) -> u32 {
    (1..=d)
        .find(|&k| (k as u64 * k as u64).is_multiple_of(d as u64))
        .expect("k = d always works")
}

pub fn charge_structure(d: u32) -> Result<ChargeStructure> {
    if d < 2 {
        return Err(PfError::InvalidOrder(d));
    }
    let p = p0(d);
    Ok(ChargeStructure {
        d,
        p0: p,
        square_free: p == d,
        admissible: (0..d).step_by(p as usize).collect(),
        m0_estimate: None,
    })
}

fn gcd(a: u32, b: u32) -> u32 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Admissibility {
    pub admissible: bool,
    pub p0: u32,
    /// Charges of density components outside `p0 Z`.
    pub offending: Vec<u32>,
}

/// Charges carried by the density of a one-block state.
pub fn density_charges(rho: &StateFunctional) -> BTreeSet<u32> {
    let d = rho.d();
    rho.tabulate()
        .into_iter()
        .filter(|(_, v)| v.norm() > CHARGE_TOL)
        // The density is d^{-m} Σ φ(M) M†, and M† has charge −deg M.
        .map(|(k, _)| (d - k.degree(d).value()) % d)
        .collect()
}

pub fn admissibility_check(rho: &StateFunctional) -> Result<Admissibility> {
    if rho.blocks() != 1 {
        return Err(PfError::DimensionMismatch {
            expected: 1,
            found: rho.blocks(),
        });
    }
    let p = p0(rho.d());
    let offending: Vec<u32> = density_charges(rho).into_iter().filter(|c| c % p != 0).collect();
    Ok(Admissibility {
        admissible: offending.is_empty(),
        p0: p,
        offending,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CommutationReport {
    pub residual: f64,
    /// `q^{deg x · deg y} = 1`.
    pub expected_commuting: bool,
}

/// `‖[α^j(x), α^k(y)]‖` for homogeneous one-block `x`, `y`.
pub fn cross_block_commutation(
    x: &AlgebraElement,
    y: &AlgebraElement,
    j: u32,
    k: u32,
) -> Result<CommutationReport> {
    if j == k {
        return Err(PfError::OverlappingSupports("shifts must differ".into()));
    }
    for e in [x, y] {
        if e.blocks() > 1 {
            return Err(PfError::StrandOutOfRange {
                strand: e.max_strand(),
                blocks: 1,
                required: e.blocks(),
            });
        }
    }
    let d = x.params().d();
    let dx = homogeneous_degree(x)?;
    let dy = homogeneous_degree(y)?;
    let blocks = j.max(k) as usize + 1;
    let a = represent(&shift_alpha(x, j), blocks)?;
    let b = represent(&shift_alpha(y, k), blocks)?;
    Ok(CommutationReport {
        residual: a.commutator(&b).norm(),
        expected_commuting: (dx as u64 * dy as u64).is_multiple_of(d as u64),
    })
}

/// Hermitian pinching `X ↦ Σ_λ Π_λ X Π_λ` along the eigenspaces of `h`.
fn pinch(x: &DMatrix<Complex64>, h: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let (vals, vecs) = hermitian_eigen(h);
    let scale = vals.iter().fold(1.0_f64, |a, v| a.max(v.abs()));
    let n = vals.len();
    let mut out = DMatrix::zeros(x.nrows(), x.ncols());
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && vals[end] - vals[end - 1] <= 1e-8 * scale {
            end += 1;
        }
        let v = vecs.columns(start, end - start);
        let proj = v * v.adjoint();
        out += &proj * x * &proj;
        start = end;
    }
    out
}

/// Projection onto the commutant of `{b_j}`, renormalized to trace 1.
///
/// Uses the exact commutant basis when it is small enough and otherwise
/// alternates pinchings along each `b_j`, which are trace preserving and
/// positive, until the result commutes.
pub fn invariant_project(state: &DensityState) -> Result<DensityState> {
    let params = *state.params();
    let blocks = state.blocks();
    let dim = state.rho().dim();
    if blocks < 2 {
        return Ok(state.clone());
    }
    if dim * dim <= FIXED_POINT_CAP {
        let basis = fixed_point_algebra(&params, blocks)?;
        let mut out = DMatrix::zeros(dim, dim);
        for e in &basis.basis {
            let c = (e.matrix().adjoint() * state.matrix()).trace();
            out += e.matrix() * c;
        }
        let op = Operator::from_matrix(params, blocks, out)?;
        if op.trace().norm() < 1e-12 {
            return Err(PfError::ZeroProjection);
        }
        if let Ok(d) = DensityState::normalized(op) {
            return Ok(d);
        }
    }
    twirl_project(state)
}

/// Alternating pinchings along each `b_j` until the density commutes with
/// all of them. Each pinching is trace preserving and positive, and the
/// iteration converges to the orthogonal projection onto the commutant.
pub fn twirl_project(state: &DensityState) -> Result<DensityState> {
    let params = *state.params();
    let blocks = state.blocks();
    let braids = (1..blocks as u32)
        .map(|j| four_string_braid(&params, j, blocks))
        .collect::<Result<Vec<_>>>()?;
    let hermitian: Vec<(DMatrix<Complex64>, DMatrix<Complex64>)> = braids
        .iter()
        .map(|b| {
            let u = b.op.matrix();
            let i = Complex64::new(0.0, 1.0);
            (u + u.adjoint(), (u - u.adjoint()) * i)
        })
        .collect();
    let mut x = state.matrix().clone();
    for _ in 0..10_000 {
        for (h1, h2) in &hermitian {
            x = pinch(&pinch(&x, h1), h2);
        }
        let op = Operator::from_matrix(params, blocks, x.clone())?;
        if density_braid_residual(&op, 1e-11)?.pass {
            break;
        }
    }
    let op = Operator::from_matrix(params, blocks, x)?;
    if op.trace().norm() < 1e-12 {
        return Err(PfError::ZeroProjection);
    }
    DensityState::normalized(op)
}

#[derive(Clone, Debug)]
pub struct FixedAlgebraBasis {
    pub m: usize,
    /// Hilbert-Schmidt orthonormal.
    pub basis: Vec<Operator>,
    pub dim: usize,
    pub charge_support: BTreeSet<u32>,
    pub m0_estimate: u32,
}

impl FixedAlgebraBasis {
    pub fn to_json(&self) -> Value {
        json!({
            "m": self.m,
            "dim": self.dim,
            "charge_support": self.charge_support,
            "m0_estimate": self.m0_estimate,
        })
    }
}

/// Joint commutant of the braids `b_1 .. b_{m-1}` on `m` blocks.
pub fn fixed_point_algebra(params: &AlgebraParams, blocks: usize) -> Result<FixedAlgebraBasis> {
    let id = Operator::identity(*params, blocks)?;
    let dim = id.dim();
    let n = dim * dim;
    if n > FIXED_POINT_CAP {
        return Err(PfError::DimensionCap {
            dim: n,
            cap: FIXED_POINT_CAP,
        });
    }
    let mut k = DMatrix::<Complex64>::zeros(n, n);
    let eye = DMatrix::<Complex64>::identity(dim, dim);
    for j in 1..blocks as u32 {
        let b = four_string_braid(params, j, blocks)?.op.into_matrix();
        // vec(BX − XB) = (I ⊗ B − Bᵀ ⊗ I) vec(X) with column-major vec.
        let l = eye.kronecker(&b) - b.transpose().kronecker(&eye);
        k += l.adjoint() * &l;
    }
    let (vals, vecs) = hermitian_eigen(&k);
    let mut basis = Vec::new();
    for (i, &v) in vals.iter().enumerate() {
        if v > NULLSPACE_TOL {
            break;
        }
        let col = vecs.column(i);
        let m = DMatrix::from_column_slice(dim, dim, col.as_slice());
        basis.push(Operator::from_matrix(*params, blocks, m)?);
    }
    let d = params.d();
    let mut support = BTreeSet::new();
    for e in &basis {
        for key in expand(e, CHARGE_TOL)?.terms().keys() {
            support.insert(key.degree(d).value());
        }
    }
    let m0 = support.iter().fold(d, |g, &c| gcd(g, c));
    Ok(FixedAlgebraBasis {
        m: blocks,
        dim: basis.len(),
        basis,
        charge_support: support,
        m0_estimate: m0,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiracReport {
    pub residual: f64,
    pub covariance: f64,
    pub is_dirac: bool,
    /// Rank of the averaged density.
    pub rank: usize,
}

/// Tests whether the mixture `Σ λ_i δ_{D_i}` is a point mass, via the
/// two-copy residual `‖Σλ_i D_i⊗D_i − D̄⊗D̄‖` and the covariance of
/// `C_i = D̄^{-1/2} D_i D̄^{-1/2}` on the range of `D̄`.
pub fn dirac_check(
    parts: &[(f64, DensityState)],
    residual_tol: f64,
    covariance_tol: f64,
) -> Result<DiracReport> {
    let Some((_, first)) = parts.first() else {
        return Err(PfError::InvalidWeights("empty mixture".into()));
    };
    let n = first.rho().dim();
    let mut total = 0.0;
    for (w, dst) in parts {
        if !w.is_finite() || *w < -1e-12 {
            return Err(PfError::InvalidWeights(format!("negative weight {w}")));
        }
        if dst.rho().dim() != n {
            return Err(PfError::DimensionMismatch {
                expected: n,
                found: dst.rho().dim(),
            });
        }
        total += w;
    }
    if (total - 1.0).abs() > 1e-10 {
        return Err(PfError::InvalidWeights(format!("weights sum to {total}")));
    }
    let mut mean = DMatrix::<Complex64>::zeros(n, n);
    for (w, dst) in parts {
        mean += dst.matrix() * Complex64::new(*w, 0.0);
    }
    let mut two = mean.kronecker(&mean) * Complex64::new(-1.0, 0.0);
    for (w, dst) in parts {
        two += dst.matrix().kronecker(dst.matrix()) * Complex64::new(*w, 0.0);
    }
    let residual = hermitian_eigen(&two).0.iter().fold(0.0_f64, |a, v| a.max(v.abs()));

    let (vals, vecs) = hermitian_eigen(&mean);
    let top = vals.max();
    let kept: Vec<usize> = (0..n).filter(|&i| vals[i] > 1e-10 * top).collect();
    let r = kept.len();
    let w = DMatrix::from_fn(n, r, |row, c| vecs[(row, kept[c])] / vals[kept[c]].sqrt());
    let mut covariance = 0.0;
    for (lam, dst) in parts {
        let c = w.adjoint() * dst.matrix() * &w;
        let tr = c.trace().re / r as f64;
        let tr2 = (&c * &c).trace().re / r as f64;
        covariance += lam * (tr2 - tr * tr);
    }
    Ok(DiracReport {
        residual,
        covariance,
        is_dirac: residual <= residual_tol && covariance <= covariance_tol,
        rank: r,
    })
}

/// `φ(M) = (Σ_j λ_j χ_j(deg M)) (∏ρ)(M)` on `blocks` blocks.
pub fn character_twisted_state(
    weights: &[f64],
    m0: u32,
    rho: &StateFunctional,
    blocks: usize,
) -> Result<StateFunctional> {
    let adm = admissibility_check(rho)?;
    if !adm.admissible {
        return Err(PfError::Inadmissible {
            offending: adm.offending,
        });
    }
    if m0 == 0 || !rho.d().is_multiple_of(m0) {
        return Err(PfError::Format(format!("m0 = {m0} does not divide d = {}", rho.d())));
    }
    let outside: Vec<u32> = density_charges(rho).into_iter().filter(|c| c % m0 != 0).collect();
    if !outside.is_empty() {
        return Err(PfError::Inadmissible { offending: outside });
    }
    state::character_twisted(weights, m0, rho, blocks)
}

/// `φ` evaluated on the one-block monomial `c_1^a c_2^b` moved to `block`.
fn block_value(phi: &StateFunctional, a: u32, b: u32, block: usize) -> Complex64 {
    let key = MonomialKey::from_block_factors(&[(a, b)]).shifted(2 * (block as u32 - 1));
    phi.value(&key)
}

/// `max |φ(∏_k C_k) − ∏_k φ(C_k)|` over all tuples of per-block monomials.
pub fn factorization_test(phi: &StateFunctional, blocks: usize) -> Result<f64> {
    if blocks > phi.blocks() {
        return Err(PfError::DimensionMismatch {
            expected: phi.blocks(),
            found: blocks,
        });
    }
    let mut worst: f64 = 0.0;
    for key in monomial_basis(phi.d(), blocks) {
        let mut prod = Complex64::new(1.0, 0.0);
        for (i, (a, b)) in key.block_factors(blocks).into_iter().enumerate() {
            if a != 0 || b != 0 {
                prod *= block_value(phi, a, b, i + 1);
            }
        }
        worst = worst.max((phi.value(&key) - prod).norm());
    }
    Ok(worst)
}

/// Braid-invariance and positivity summary used by the solvers.
pub fn invariance_residual(state: &DensityState) -> Result<Check> {
    density_braid_residual(state.rho(), 1e-9)
}

/// Operator norm of a commutator residual, exposed for reports.
pub fn commutator_norm(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> f64 {
    spectral_norm(&(a * b - b * a))
}
