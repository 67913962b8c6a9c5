//! States on the truncated algebra `PF_{2m}`.
//!
//! A state is kept as a functional on the monomial basis. Densities are a
//! derived view: `φ(M) = tr(D · M)` and, by orthogonality of the monomials
//! under the normalized trace, `D = d^{-m} Σ_M φ(M) M†`.

use std::collections::BTreeMap;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::algebra::{AlgebraElement, AlgebraParams, MonomialKey};
use crate::braid::four_string_braid;
use crate::error::{PfError, Result};
use crate::matrix_rep::{
    checked_dim, hermitian_eigen, monomial_action, monomial_basis, represent, Operator, DIM_CAP,
};

/// Floor for Gram / density eigenvalues.
pub const POSITIVITY_TOL: f64 = 1e-9;

/// Relative eigenvalue cutoff for the GNS rank.
pub const GNS_RANK_TOL: f64 = 1e-9;

/// Values below this are not stored when tabulating.
const TABLE_CUTOFF: f64 = 1e-15;

#[derive(Clone, Debug)]
enum Repr {
    Table(BTreeMap<MonomialKey, Complex64>),
    /// Same one-block state on every block.
    Product(Arc<StateFunctional>),
    Mixture(Vec<(f64, StateFunctional)>),
    Twisted {
        weights: Vec<f64>,
        m0: u32,
        base: Arc<StateFunctional>,
    },
}

/// Linear functional on `PF_{2m}` given by its values on normal-form
/// monomials.
#[derive(Clone, Debug)]
pub struct StateFunctional {
    params: AlgebraParams,
    blocks: usize,
    repr: Repr,
}

fn check_key(key: &MonomialKey, blocks: usize) -> Result<()> {
    if key.blocks() > blocks {
        return Err(PfError::StrandOutOfRange {
            strand: key.max_strand(),
            blocks,
            required: key.blocks(),
        });
    }
    Ok(())
}

fn block_key(a: u32, b: u32) -> MonomialKey {
    MonomialKey::from_block_factors(&[(a, b)])
}

impl StateFunctional {
    /// Functional with the given basis values; unlisted monomials map to 0.
    pub fn from_values(
        params: AlgebraParams,
        blocks: usize,
        values: impl IntoIterator<Item = (MonomialKey, Complex64)>,
    ) -> Result<Self> {
        let mut table = BTreeMap::new();
        for (k, v) in values {
            check_key(&k, blocks)?;
            if !v.re.is_finite() || !v.im.is_finite() {
                return Err(PfError::NotAState(format!("non-finite value at {k}")));
            }
            if v.norm() > TABLE_CUTOFF {
                table.insert(k, v);
            }
        }
        let unit = table.get(&MonomialKey::identity()).copied().unwrap_or_default();
        if (unit - 1.0).norm() > 1e-10 {
            return Err(PfError::NotAState(format!("φ(I) = {unit}, expected 1")));
        }
        Ok(StateFunctional {
            params,
            blocks,
            repr: Repr::Table(table),
        })
    }

    /// The normalized trace.
    pub fn tracial(params: AlgebraParams, blocks: usize) -> Self {
        let mut table = BTreeMap::new();
        table.insert(MonomialKey::identity(), Complex64::new(1.0, 0.0));
        StateFunctional {
            params,
            blocks,
            repr: Repr::Table(table),
        }
    }

    pub fn params(&self) -> &AlgebraParams {
        &self.params
    }

    pub fn d(&self) -> u32 {
        self.params.d()
    }

    pub fn blocks(&self) -> usize {
        self.blocks
    }

    /// The one-block factor when this is a product state.
    pub fn product_factor(&self) -> Option<&StateFunctional> {
        match &self.repr {
            Repr::Product(f) => Some(f),
            _ => None,
        }
    }

    /// Mixture components, if built by [`mixture`].
    pub fn components(&self) -> Option<&[(f64, StateFunctional)]> {
        match &self.repr {
            Repr::Mixture(c) => Some(c),
            _ => None,
        }
    }

    /// Same functional viewed on a different number of blocks. Values on
    /// monomials beyond the original support are only meaningful for
    /// product-type states.
    pub fn with_blocks(&self, blocks: usize) -> Result<Self> {
        match &self.repr {
            Repr::Table(t) => {
                if blocks < self.blocks {
                    let kept = t.iter().filter(|(k, _)| k.blocks() <= blocks).map(|(k, v)| (k.clone(), *v));
                    return Self::from_values(self.params, blocks, kept);
                }
                if blocks > self.blocks {
                    return Err(PfError::DimensionMismatch {
                        expected: self.blocks,
                        found: blocks,
                    });
                }
                Ok(self.clone())
            }
            Repr::Product(f) => product_state(f, blocks),
            Repr::Mixture(parts) => {
                let parts = parts
                    .iter()
                    .map(|(w, s)| Ok((*w, s.with_blocks(blocks)?)))
                    .collect::<Result<Vec<_>>>()?;
                mixture(&parts)
            }
            Repr::Twisted { weights, m0, base } => {
                let f = base.product_factor().expect("twisted states wrap product states");
                character_twisted(weights, *m0, f, blocks)
            }
        }
    }

    /// `φ(M)` for a basis monomial inside the truncation.
    pub fn value(&self, key: &MonomialKey) -> Complex64 {
        match &self.repr {
            Repr::Table(t) => t.get(key).copied().unwrap_or_default(),
            Repr::Product(f) => {
                let mut acc = Complex64::new(1.0, 0.0);
                for (a, b) in key.block_factors(key.blocks()) {
                    if a == 0 && b == 0 {
                        continue;
                    }
                    acc *= f.value(&block_key(a, b));
                    if acc == Complex64::new(0.0, 0.0) {
                        break;
                    }
                }
                acc
            }
            Repr::Mixture(parts) => parts.iter().map(|(w, s)| s.value(key) * *w).sum(),
            Repr::Twisted { weights, m0, base } => {
                let d = self.params.d();
                let deg = key.degree(d).value();
                if !deg.is_multiple_of(*m0) {
                    return Complex64::new(0.0, 0.0);
                }
                let chi: Complex64 = weights
                    .iter()
                    .enumerate()
                    .map(|(j, &w)| {
                        w * self.params.q_pow(j as i64 * deg as i64).to_complex()
                    })
                    .sum();
                chi * base.value(key)
            }
        }
    }

    /// Linear extension to algebra elements.
    pub fn evaluate(&self, a: &AlgebraElement) -> Result<Complex64> {
        if a.params().d() != self.d() {
            return Err(PfError::IncompatibleAlgebras {
                left: self.d(),
                right: a.params().d(),
            });
        }
        let mut acc = Complex64::new(0.0, 0.0);
        for (k, &c) in a.terms() {
            check_key(k, self.blocks)?;
            acc += c * self.value(k);
        }
        Ok(acc)
    }

    /// Every nonzero basis value.
    pub fn tabulate(&self) -> BTreeMap<MonomialKey, Complex64> {
        if let Repr::Table(t) = &self.repr {
            return t.clone();
        }
        monomial_basis(self.d(), self.blocks)
            .filter_map(|k| {
                let v = self.value(&k);
                (v.norm() > TABLE_CUTOFF).then_some((k, v))
            })
            .collect()
    }

    /// Flattened copy backed by an explicit table.
    pub fn to_table(&self) -> StateFunctional {
        StateFunctional {
            params: self.params,
            blocks: self.blocks,
            repr: Repr::Table(self.tabulate()),
        }
    }

    /// Largest difference of basis values.
    pub fn distance(&self, other: &StateFunctional) -> f64 {
        let blocks = self.blocks.max(other.blocks);
        monomial_basis(self.d(), blocks)
            .map(|k| (self.value(&k) - other.value(&k)).norm())
            .fold(0.0, f64::max)
    }
}

/// Positive semidefinite trace-one operator.
#[derive(Clone, Debug)]
pub struct DensityState {
    rho: Operator,
}

impl DensityState {
    /// Validates Hermiticity, positivity (eigenvalues ≥ −1e−10) and unit
    /// trace (within 1e−12).
    pub fn new(rho: Operator) -> Result<Self> {
        let m = rho.matrix();
        let herm = crate::matrix_rep::spectral_norm(&(m - m.adjoint()));
        if herm > 1e-10 {
            return Err(PfError::NotAState(format!("density is not Hermitian ({herm:e})")));
        }
        let tr = rho.trace();
        if (tr - 1.0).norm() > 1e-12 {
            return Err(PfError::NotAState(format!("density has trace {tr}")));
        }
        let min = hermitian_eigen(m).0.min();
        if min < -1e-10 {
            return Err(PfError::NotAState(format!("density has eigenvalue {min:e}")));
        }
        Ok(Self::hermitized(rho))
    }

    /// Divides by the trace first.
    pub fn normalized(rho: Operator) -> Result<Self> {
        let tr = rho.trace();
        if tr.norm() < 1e-300 {
            return Err(PfError::ZeroProjection);
        }
        Self::new(rho.scale(Complex64::new(1.0, 0.0) / tr.re))
    }

    fn hermitized(rho: Operator) -> Self {
        let m = rho.matrix();
        let h = (m + m.adjoint()) * Complex64::new(0.5, 0.0);
        let rho = Operator::from_matrix(*rho.params(), rho.blocks(), h).expect("same shape");
        DensityState { rho }
    }

    pub fn maximally_mixed(params: AlgebraParams, blocks: usize) -> Result<Self> {
        let id = Operator::identity(params, blocks)?;
        let dim = id.dim() as f64;
        Ok(DensityState {
            rho: id.scale(Complex64::new(1.0 / dim, 0.0)),
        })
    }

    /// `|ψ><ψ| / <ψ|ψ>`.
    pub fn pure(params: AlgebraParams, blocks: usize, psi: &DVector<Complex64>) -> Result<Self> {
        let dim = checked_dim(params.d(), blocks)?;
        if psi.len() != dim {
            return Err(PfError::DimensionMismatch {
                expected: dim,
                found: psi.len(),
            });
        }
        let n2 = psi.norm_squared();
        if n2 == 0.0 {
            return Err(PfError::NotAState("zero vector".into()));
        }
        let m = psi * psi.adjoint() / Complex64::new(n2, 0.0);
        Self::new(Operator::from_matrix(params, blocks, m)?)
    }

    /// `G G† / tr` for a `dim × rank` matrix `G` with uniform entries.
    pub fn random<R: Rng + ?Sized>(
        params: AlgebraParams,
        blocks: usize,
        rank: usize,
        rng: &mut R,
    ) -> Result<Self> {
        let dim = checked_dim(params.d(), blocks)?;
        let rank = rank.clamp(1, dim);
        let g = DMatrix::from_fn(dim, rank, |_, _| {
            Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        });
        let m = &g * g.adjoint();
        Self::normalized(Operator::from_matrix(params, blocks, m)?)
    }

    /// Diagonal density with the given (nonnegative) weights.
    pub fn diagonal(params: AlgebraParams, blocks: usize, weights: &[f64]) -> Result<Self> {
        let dim = checked_dim(params.d(), blocks)?;
        if weights.len() != dim {
            return Err(PfError::DimensionMismatch {
                expected: dim,
                found: weights.len(),
            });
        }
        let m = DMatrix::from_diagonal(&DVector::from_iterator(
            dim,
            weights.iter().map(|&w| Complex64::new(w, 0.0)),
        ));
        Self::normalized(Operator::from_matrix(params, blocks, m)?)
    }

    pub fn rho(&self) -> &Operator {
        &self.rho
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        self.rho.matrix()
    }

    pub fn params(&self) -> &AlgebraParams {
        self.rho.params()
    }

    pub fn blocks(&self) -> usize {
        self.rho.blocks()
    }

    pub fn eigenvalues(&self) -> DVector<f64> {
        hermitian_eigen(self.matrix()).0
    }

    /// `½ ‖ρ − σ‖_1`.
    pub fn trace_distance(&self, other: &DensityState) -> Result<f64> {
        if self.rho.dim() != other.rho.dim() {
            return Err(PfError::DimensionMismatch {
                expected: self.rho.dim(),
                found: other.rho.dim(),
            });
        }
        let diff = self.matrix() - other.matrix();
        Ok(0.5 * hermitian_eigen(&diff).0.iter().map(|e| e.abs()).sum::<f64>())
    }
}

pub fn density_to_functional(state: &DensityState) -> StateFunctional {
    let params = *state.params();
    let blocks = state.blocks();
    let table = monomial_basis(params.d(), blocks)
        .filter_map(|k| {
            let perm = monomial_action(&params, &k, blocks).expect("basis fits the truncation");
            let v = perm.trace_after(state.matrix());
            (v.norm() > TABLE_CUTOFF).then_some((k, v))
        })
        .collect();
    StateFunctional {
        params,
        blocks,
        repr: Repr::Table(table),
    }
}

/// `d^{-m} Σ_M φ(M) M†` with no positivity check.
pub fn density_matrix(phi: &StateFunctional) -> Result<Operator> {
    let params = *phi.params();
    let blocks = phi.blocks();
    let mut out = Operator::zeros(params, blocks)?;
    let mut m = out.matrix().clone();
    let scale = 1.0 / out.dim() as f64;
    for (k, v) in phi.tabulate() {
        monomial_action(&params, &k, blocks)?.add_scaled_adjoint_into(&mut m, v * scale);
    }
    out = Operator::from_matrix(params, blocks, m)?;
    Ok(out)
}

pub fn functional_to_density(phi: &StateFunctional) -> Result<DensityState> {
    let d = density_matrix(phi)?;
    let m = d.matrix();
    let herm = crate::matrix_rep::spectral_norm(&(m - m.adjoint()));
    if herm > POSITIVITY_TOL {
        return Err(PfError::NotAState(format!("functional is not Hermitian ({herm:e})")));
    }
    let tr = d.trace();
    if (tr - 1.0).norm() > 1e-10 {
        return Err(PfError::NotAState(format!("φ(I) = {tr}")));
    }
    let min = hermitian_eigen(m).0.min();
    if min < -POSITIVITY_TOL {
        return Err(PfError::InconsistentFunctional { min_eigenvalue: min });
    }
    Ok(DensityState::hermitized(d))
}

/// Outcome of a tolerance check.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub pass: bool,
    pub residual: f64,
}

/// State axioms measured on a functional.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AxiomReport {
    pub unit_residual: f64,
    pub hermiticity_residual: f64,
    pub min_gram_eigenvalue: f64,
    pub pass: bool,
}

/// `φ(I) = 1`, `φ(M*) = conj φ(M)` and the Gram matrix `φ(M*N)` PSD.
///
/// The Gram spectrum is read off the reconstructed density: its smallest
/// eigenvalue is `d^m` times the smallest density eigenvalue.
pub fn check_axioms(phi: &StateFunctional) -> Result<AxiomReport> {
    let params = *phi.params();
    let unit_residual = (phi.value(&MonomialKey::identity()) - 1.0).norm();
    let mut herm: f64 = 0.0;
    for k in monomial_basis(params.d(), phi.blocks()) {
        let v = phi.value(&k);
        let star = AlgebraElement::from_key(params, k, Complex64::new(1.0, 0.0)).adjoint();
        herm = herm.max((phi.evaluate(&star)? - v.conj()).norm());
    }
    let d = density_matrix(phi)?;
    let min = hermitian_eigen(d.matrix()).0.min() * d.dim() as f64;
    Ok(AxiomReport {
        unit_residual,
        hermiticity_residual: herm,
        min_gram_eigenvalue: min,
        pass: unit_residual <= 1e-10 && herm <= 1e-10 && min >= -POSITIVITY_TOL,
    })
}

/// Explicit Gram matrix `G_{MN} = φ(M* N)` in basis enumeration order.
pub fn gram_matrix(phi: &StateFunctional) -> Result<DMatrix<Complex64>> {
    let params = *phi.params();
    let keys: Vec<MonomialKey> = monomial_basis(params.d(), phi.blocks()).collect();
    if keys.len() > DIM_CAP {
        return Err(PfError::DimensionCap {
            dim: keys.len(),
            cap: DIM_CAP,
        });
    }
    let stars: Vec<(MonomialKey, Complex64)> = keys
        .iter()
        .map(|k| {
            let s = AlgebraElement::from_key(params, k.clone(), Complex64::new(1.0, 0.0)).adjoint();
            s.terms().iter().next().map(|(k, c)| (k.clone(), *c)).expect("monomials are nonzero")
        })
        .collect();
    let n = keys.len();
    let mut g = DMatrix::zeros(n, n);
    for (i, (sk, sc)) in stars.iter().enumerate() {
        for (j, k) in keys.iter().enumerate() {
            let (prod, phase) = params.mul_keys(sk, k);
            g[(i, j)] = sc * phase.to_complex() * phi.value(&prod);
        }
    }
    Ok(g)
}

/// `∏ρ`: the one-block state `rho` on every block.
pub fn product_state(rho: &StateFunctional, blocks: usize) -> Result<StateFunctional> {
    let factor = match &rho.repr {
        Repr::Product(f) => f.clone(),
        _ if rho.blocks() == 1 => Arc::new(rho.clone()),
        _ => {
            return Err(PfError::DimensionMismatch {
                expected: 1,
                found: rho.blocks(),
            })
        }
    };
    if blocks == 0 {
        return Err(PfError::Format("a product state needs at least one block".into()));
    }
    Ok(StateFunctional {
        params: rho.params,
        blocks,
        repr: Repr::Product(factor),
    })
}

/// Convex combination of states on the same truncation.
pub fn mixture(parts: &[(f64, StateFunctional)]) -> Result<StateFunctional> {
    let Some((_, first)) = parts.first() else {
        return Err(PfError::InvalidWeights("empty mixture".into()));
    };
    let mut total = 0.0;
    for (w, s) in parts {
        if !w.is_finite() || *w < -1e-12 {
            return Err(PfError::InvalidWeights(format!("negative weight {w}")));
        }
        if s.d() != first.d() {
            return Err(PfError::IncompatibleAlgebras {
                left: first.d(),
                right: s.d(),
            });
        }
        if s.blocks() != first.blocks() {
            return Err(PfError::DimensionMismatch {
                expected: first.blocks(),
                found: s.blocks(),
            });
        }
        total += w;
    }
    if (total - 1.0).abs() > 1e-10 {
        return Err(PfError::InvalidWeights(format!("weights sum to {total}")));
    }
    Ok(StateFunctional {
        params: first.params,
        blocks: first.blocks,
        repr: Repr::Mixture(parts.iter().map(|(w, s)| (w.max(0.0), s.clone())).collect()),
    })
}

/// `φ(M) = (Σ_j λ_j χ_j(deg M)) · (∏ρ)(M)` with `χ_j(ℓ) = q^{jℓ}`, and
/// `φ(M) = 0` unless `m0 | deg M`.
pub(crate) fn character_twisted(
    weights: &[f64],
    m0: u32,
    rho: &StateFunctional,
    blocks: usize,
) -> Result<StateFunctional> {
    let d = rho.d();
    if m0 == 0 || !d.is_multiple_of(m0) {
        return Err(PfError::Format(format!("m0 = {m0} does not divide d = {d}")));
    }
    let n = (d / m0) as usize;
    if weights.len() != n {
        return Err(PfError::InvalidWeights(format!(
            "expected {n} character weights, got {}",
            weights.len()
        )));
    }
    if weights.iter().any(|w| !w.is_finite() || *w < -1e-12) {
        return Err(PfError::InvalidWeights("weights must be nonnegative".into()));
    }
    let total: f64 = weights.iter().sum();
    if (total - 1.0).abs() > 1e-10 {
        return Err(PfError::InvalidWeights(format!("weights sum to {total}")));
    }
    let base = product_state(rho, blocks)?;
    Ok(StateFunctional {
        params: rho.params,
        blocks,
        repr: Repr::Twisted {
            weights: weights.to_vec(),
            m0,
            base: Arc::new(base),
        },
    })
}

/// Largest `|φ(M)|` over charged monomials.
pub fn is_neutral(phi: &StateFunctional, tol: f64) -> Check {
    let d = phi.d();
    let residual = monomial_basis(d, phi.blocks())
        .filter(|k| !k.degree(d).is_neutral())
        .map(|k| phi.value(&k).norm())
        .fold(0.0, f64::max);
    Check {
        pass: residual <= tol,
        residual,
    }
}

/// `max_j ‖b_j D b_j† − D‖` over the braids inside the truncation.
pub fn is_braid_invariant(phi: &StateFunctional, tol: f64) -> Result<Check> {
    let d = density_matrix(phi)?;
    density_braid_residual(&d, tol)
}

pub fn density_braid_residual(d: &Operator, tol: f64) -> Result<Check> {
    let mut residual: f64 = 0.0;
    for j in 1..d.blocks() as u32 {
        let b = four_string_braid(d.params(), j, d.blocks())?;
        residual = residual.max((&b.op.conjugate(d) - d).norm());
    }
    Ok(Check {
        pass: residual <= tol,
        residual,
    })
}

/// Output of the GNS construction on the monomial basis.
#[derive(Clone, Debug)]
pub struct GnsData {
    params: AlgebraParams,
    pub dim: usize,
    /// `rep[s - 1]` represents `c_s`.
    pub rep: Vec<DMatrix<Complex64>>,
    pub cyclic_vector: DVector<Complex64>,
}

pub fn gns(phi: &StateFunctional) -> Result<GnsData> {
    let params = *phi.params();
    let blocks = phi.blocks();
    let g = gram_matrix(phi)?;
    let herm = crate::matrix_rep::spectral_norm(&(&g - g.adjoint()));
    if herm > POSITIVITY_TOL * g.norm().max(1.0) {
        return Err(PfError::NotAState(format!("Gram matrix is not Hermitian ({herm:e})")));
    }
    let (vals, vecs) = hermitian_eigen(&g);
    let top = vals.max();
    if vals.min() < -POSITIVITY_TOL * top.max(1.0) {
        return Err(PfError::InconsistentFunctional {
            min_eigenvalue: vals.min(),
        });
    }
    let kept: Vec<usize> = (0..vals.len()).filter(|&i| vals[i] > GNS_RANK_TOL * top).collect();
    let r = kept.len();
    let v = DMatrix::from_fn(g.nrows(), r, |row, c| vecs[(row, kept[c])]);
    let lam: Vec<f64> = kept.iter().map(|&i| vals[i]).collect();

    let keys: Vec<MonomialKey> = monomial_basis(params.d(), blocks).collect();
    let index: BTreeMap<&MonomialKey, usize> = keys.iter().enumerate().map(|(i, k)| (k, i)).collect();

    let mut rep = Vec::with_capacity(2 * blocks);
    for s in 1..=2 * blocks as u32 {
        let gen = MonomialKey::from_pairs(vec![(s, 1)], params.d())?;
        // (L V)[K, b] where c_s N = phase · K.
        let mut lv = DMatrix::<Complex64>::zeros(keys.len(), r);
        for (n, key) in keys.iter().enumerate() {
            let (prod, phase) = params.mul_keys(&gen, key);
            let row = index[&prod];
            let ph = phase.to_complex();
            for b in 0..r {
                lv[(row, b)] += ph * v[(n, b)];
            }
        }
        let mut m = v.adjoint() * lv;
        for a in 0..r {
            for b in 0..r {
                m[(a, b)] *= (lam[a] / lam[b]).sqrt();
            }
        }
        rep.push(m);
    }
    let id = index[&MonomialKey::identity()];
    let omega = DVector::from_fn(r, |a, _| v[(id, a)].conj() * lam[a].sqrt());
    Ok(GnsData {
        params,
        dim: r,
        rep,
        cyclic_vector: omega,
    })
}

impl GnsData {
    pub fn represent(&self, a: &AlgebraElement) -> Result<DMatrix<Complex64>> {
        let mut out = DMatrix::zeros(self.dim, self.dim);
        for (k, &c) in a.terms() {
            let mut m = DMatrix::identity(self.dim, self.dim);
            for &(s, e) in k.pairs() {
                let g = self.rep.get(s as usize - 1).ok_or(PfError::StrandOutOfRange {
                    strand: s,
                    blocks: self.rep.len() / 2,
                    required: (s as usize).div_ceil(2),
                })?;
                for _ in 0..e {
                    m = &m * g;
                }
            }
            out += m * c;
        }
        Ok(out)
    }

    /// `<Ω, π(a) Ω>`.
    pub fn expectation(&self, a: &AlgebraElement) -> Result<Complex64> {
        let m = self.represent(a)?;
        Ok(self.cyclic_vector.dotc(&(m * &self.cyclic_vector)))
    }

    /// Worst violation of the CPRs by the represented generators.
    pub fn cpr_residual(&self) -> f64 {
        let n = self.dim;
        let id = DMatrix::<Complex64>::identity(n, n);
        let q = self.params.q();
        let mut worst: f64 = 0.0;
        for (j, cj) in self.rep.iter().enumerate() {
            let mut p = id.clone();
            for _ in 0..self.params.d() {
                p = &p * cj;
            }
            worst = worst.max((&p - &id).norm());
            worst = worst.max((cj.adjoint() * cj - &id).norm());
            for ck in &self.rep[j + 1..] {
                worst = worst.max((cj * ck - ck * cj * q).norm());
            }
        }
        worst
    }
}

#[derive(Serialize, Deserialize)]
struct TermEntry {
    monomial: Vec<(u32, u32)>,
    value: (f64, f64),
}

#[derive(Serialize, Deserialize)]
struct FunctionalFile {
    d: u32,
    m: usize,
    terms: Vec<TermEntry>,
}

pub fn functional_to_json(phi: &StateFunctional) -> Value {
    let terms = phi
        .tabulate()
        .into_iter()
        .map(|(k, v)| TermEntry {
            monomial: k.pairs().to_vec(),
            value: (v.re, v.im),
        })
        .collect();
    serde_json::to_value(FunctionalFile {
        d: phi.d(),
        m: phi.blocks(),
        terms,
    })
    .expect("plain data serializes")
}

pub fn functional_from_json(v: &Value) -> Result<StateFunctional> {
    let f: FunctionalFile =
        serde_json::from_value(v.clone()).map_err(|e| PfError::Format(e.to_string()))?;
    let params = AlgebraParams::new(f.d)?;
    let mut values = Vec::with_capacity(f.terms.len());
    for t in f.terms {
        let key = MonomialKey::from_pairs(t.monomial, f.d)?;
        values.push((key, Complex64::new(t.value.0, t.value.1)));
    }
    StateFunctional::from_values(params, f.m, values)
}

pub fn density_to_json(state: &DensityState) -> Value {
    let m = state.matrix();
    let mut flat = Vec::with_capacity(m.len());
    for r in 0..m.nrows() {
        for c in 0..m.ncols() {
            flat.push(json!([m[(r, c)].re, m[(r, c)].im]));
        }
    }
    json!({"d": state.params().d(), "m": state.blocks(), "matrix": flat})
}

fn parse_complex(v: &Value) -> Result<Complex64> {
    match v {
        Value::Array(p) if p.len() == 2 => {
            let re = p[0].as_f64();
            let im = p[1].as_f64();
            match (re, im) {
                (Some(re), Some(im)) => Ok(Complex64::new(re, im)),
                _ => Err(PfError::Format("complex entries are [re, im] numbers".into())),
            }
        }
        Value::Number(n) => Ok(Complex64::new(n.as_f64().unwrap_or(f64::NAN), 0.0)),
        _ => Err(PfError::Format("complex entries are [re, im] pairs".into())),
    }
}

/// Reads `{d, m, matrix}` with `matrix` either flat row-major or nested rows.
pub fn density_from_json(v: &Value) -> Result<DensityState> {
    let d = v.get("d").and_then(Value::as_u64).ok_or(PfError::Format("missing d".into()))? as u32;
    let m = v.get("m").and_then(Value::as_u64).ok_or(PfError::Format("missing m".into()))? as usize;
    let params = AlgebraParams::new(d)?;
    let dim = checked_dim(d, m)?;
    let rows = v
        .get("matrix")
        .and_then(Value::as_array)
        .ok_or(PfError::Format("missing matrix".into()))?;
    let mut entries = Vec::with_capacity(dim * dim);
    // Flat entries are [re, im] number pairs; nested rows are lists of those.
    let nested = rows
        .iter()
        .all(|r| r.as_array().is_some_and(|a| !a.is_empty() && a.iter().all(Value::is_array)));
    if nested {
        for r in rows {
            for e in r.as_array().expect("checked") {
                entries.push(parse_complex(e)?);
            }
        }
    } else {
        for e in rows {
            entries.push(parse_complex(e)?);
        }
    }
    if entries.len() != dim * dim {
        return Err(PfError::DimensionMismatch {
            expected: dim * dim,
            found: entries.len(),
        });
    }
    let mat = DMatrix::from_row_slice(dim, dim, &entries);
    DensityState::new(Operator::from_matrix(params, m, mat)?)
}

/// Accepts either file schema and returns the functional.
pub fn state_from_json(v: &Value) -> Result<StateFunctional> {
    if v.get("terms").is_some() {
        functional_from_json(v)
    } else if v.get("matrix").is_some() {
        Ok(density_to_functional(&density_from_json(v)?))
    } else {
        Err(PfError::Format("state files need either `terms` or `matrix`".into()))
    }
}

/// Represents `a` against a density: `tr(D a)`.
pub fn expectation(state: &DensityState, a: &AlgebraElement) -> Result<Complex64> {
    let op = represent(a, state.blocks())?;
    Ok((state.matrix() * op.matrix()).trace())
}
