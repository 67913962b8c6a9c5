//! Jordan-Wigner representation of `PF_{2m}` on `(C^d)^{⊗m}`.
//!
//! With the clock `Z = diag(1, q, ..., q^{d-1})` and shift `X|k> = |k+1>`,
//! block `j` (1-based) carries
//!
//! ```text
//! c_{2j-1} = (⊗_{i<j} Z_i^{-1}) X_j
//! c_{2j}   = zeta^{d-1} (⊗_{i<j} Z_i^{-1}) X_j Z_j^{-1}
//! ```
//!
//! Every normal-form monomial maps to a unitary with exactly one nonzero
//! entry per column, so monomials are built as phased permutations with
//! exact phases and only densified at the end.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::algebra::{AlgebraElement, AlgebraParams, MonomialKey, Phase};
use crate::error::{PfError, Result};

/// Largest supported operator dimension `d^m`.
pub const DIM_CAP: usize = 4096;

/// Coefficients below this are dropped when expanding a matrix in the
/// monomial basis.
pub const EXPANSION_CUTOFF: f64 = 1e-12;

pub fn checked_dim(d: u32, blocks: usize) -> Result<usize> {
    let mut dim: usize = 1;
    for _ in 0..blocks {
        dim = dim.saturating_mul(d as usize);
        if dim > DIM_CAP {
            return Err(PfError::DimensionCap { dim, cap: DIM_CAP });
        }
    }
    Ok(dim)
}

/// Dense complex operator on `blocks` qudits of dimension `d`.
#[derive(Clone, Debug, PartialEq)]
pub struct Operator {
    params: AlgebraParams,
    blocks: usize,
    mat: DMatrix<Complex64>,
}

impl Operator {
    pub fn identity(params: AlgebraParams, blocks: usize) -> Result<Self> {
        let dim = checked_dim(params.d(), blocks)?;
        Ok(Operator {
            params,
            blocks,
            mat: DMatrix::identity(dim, dim),
        })
    }

    pub fn zeros(params: AlgebraParams, blocks: usize) -> Result<Self> {
        let dim = checked_dim(params.d(), blocks)?;
        Ok(Operator {
            params,
            blocks,
            mat: DMatrix::zeros(dim, dim),
        })
    }

    pub fn from_matrix(params: AlgebraParams, blocks: usize, mat: DMatrix<Complex64>) -> Result<Self> {
        let dim = checked_dim(params.d(), blocks)?;
        if mat.nrows() != dim || mat.ncols() != dim {
            return Err(PfError::DimensionMismatch {
                expected: dim,
                found: mat.nrows().max(mat.ncols()),
            });
        }
        if mat.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(PfError::Format("operator has non-finite entries".into()));
        }
        Ok(Operator { params, blocks, mat })
    }

    pub fn params(&self) -> &AlgebraParams {
        &self.params
    }

    pub fn blocks(&self) -> usize {
        self.blocks
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.mat
    }

    pub fn into_matrix(self) -> DMatrix<Complex64> {
        self.mat
    }

    fn with_matrix(&self, mat: DMatrix<Complex64>) -> Operator {
        Operator {
            params: self.params,
            blocks: self.blocks,
            mat,
        }
    }

    pub fn adjoint(&self) -> Operator {
        self.with_matrix(self.mat.adjoint())
    }

    pub fn scale(&self, s: Complex64) -> Operator {
        self.with_matrix(&self.mat * s)
    }

    pub fn trace(&self) -> Complex64 {
        self.mat.trace()
    }

    pub fn normalized_trace(&self) -> Complex64 {
        self.trace() / self.dim() as f64
    }

    /// Integer power; negative powers use the adjoint, so they are only
    /// inverses for unitaries.
    pub fn unitary_pow(&self, k: i64) -> Operator {
        let base = if k < 0 { self.adjoint() } else { self.clone() };
        let mut acc = DMatrix::identity(self.dim(), self.dim());
        for _ in 0..k.unsigned_abs() {
            acc = &acc * &base.mat;
        }
        self.with_matrix(acc)
    }

    /// Spectral norm.
    pub fn norm(&self) -> f64 {
        spectral_norm(&self.mat)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.mat.norm()
    }

    /// `‖U†U − I‖`.
    pub fn unitarity_residual(&self) -> f64 {
        let prod = self.mat.adjoint() * &self.mat;
        spectral_norm(&(prod - DMatrix::identity(self.dim(), self.dim())))
    }

    /// `U x U†`.
    pub fn conjugate(&self, x: &Operator) -> Operator {
        self.with_matrix(&self.mat * &x.mat * self.mat.adjoint())
    }

    pub fn commutator(&self, other: &Operator) -> Operator {
        self.with_matrix(&self.mat * &other.mat - &other.mat * &self.mat)
    }
}

impl std::ops::Mul for &Operator {
    type Output = Operator;

    fn mul(self, rhs: &Operator) -> Operator {
        assert_eq!(self.dim(), rhs.dim(), "operator dimensions differ");
        self.with_matrix(&self.mat * &rhs.mat)
    }
}

impl std::ops::Add for &Operator {
    type Output = Operator;

    fn add(self, rhs: &Operator) -> Operator {
        assert_eq!(self.dim(), rhs.dim(), "operator dimensions differ");
        self.with_matrix(&self.mat + &rhs.mat)
    }
}

impl std::ops::Sub for &Operator {
    type Output = Operator;

    fn sub(self, rhs: &Operator) -> Operator {
        assert_eq!(self.dim(), rhs.dim(), "operator dimensions differ");
        self.with_matrix(&self.mat - &rhs.mat)
    }
}

pub fn spectral_norm(m: &DMatrix<Complex64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    let fro = m.norm();
    if fro == 0.0 {
        return 0.0;
    }
    // Rescaling keeps the SVD well conditioned for tiny residual matrices.
    let scaled = m / Complex64::new(fro, 0.0);
    scaled
        .singular_values()
        .iter()
        .fold(0.0_f64, |a, &s| a.max(s))
        * fro
}

/// Eigenvalues (ascending) and eigenvectors of the Hermitian part of `m`.
pub fn hermitian_eigen(m: &DMatrix<Complex64>) -> (DVector<f64>, DMatrix<Complex64>) {
    let h = (m + m.adjoint()) * Complex64::new(0.5, 0.0);
    let e = h.symmetric_eigen();
    let mut order: Vec<usize> = (0..e.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| e.eigenvalues[a].total_cmp(&e.eigenvalues[b]));
    let values = DVector::from_iterator(order.len(), order.iter().map(|&i| e.eigenvalues[i]));
    let vectors = DMatrix::from_fn(m.nrows(), order.len(), |r, c| e.eigenvectors[(r, order[c])]);
    (values, vectors)
}

/// Unitary with one nonzero entry per column: column `c` maps to row
/// `rows[c]` with phase `phases[c]`.
#[derive(Clone, Debug)]
pub struct PhasedPermutation {
    rows: Vec<usize>,
    phases: Vec<Phase>,
}

impl PhasedPermutation {
    pub fn dim(&self) -> usize {
        self.rows.len()
    }

    pub fn entry(&self, col: usize) -> (usize, Phase) {
        (self.rows[col], self.phases[col])
    }

    pub fn to_matrix(&self) -> DMatrix<Complex64> {
        let n = self.dim();
        let mut m = DMatrix::zeros(n, n);
        self.add_scaled_into(&mut m, Complex64::new(1.0, 0.0));
        m
    }

    pub fn add_scaled_into(&self, m: &mut DMatrix<Complex64>, s: Complex64) {
        for (c, (&r, &ph)) in self.rows.iter().zip(&self.phases).enumerate() {
            m[(r, c)] += s * ph.to_complex();
        }
    }

    /// Adds `s · P†` into `m`.
    pub fn add_scaled_adjoint_into(&self, m: &mut DMatrix<Complex64>, s: Complex64) {
        for (c, (&r, &ph)) in self.rows.iter().zip(&self.phases).enumerate() {
            m[(c, r)] += s * ph.inverse().to_complex();
        }
    }

    /// `tr(P† A)`.
    pub fn inner_with(&self, a: &DMatrix<Complex64>) -> Complex64 {
        self.rows
            .iter()
            .zip(&self.phases)
            .enumerate()
            .map(|(c, (&r, &ph))| ph.inverse().to_complex() * a[(r, c)])
            .sum()
    }

    /// `tr(A P)`.
    pub fn trace_after(&self, a: &DMatrix<Complex64>) -> Complex64 {
        self.rows
            .iter()
            .zip(&self.phases)
            .enumerate()
            .map(|(c, (&r, &ph))| ph.to_complex() * a[(c, r)])
            .sum()
    }
}

fn check_strands(key: &MonomialKey, blocks: usize) -> Result<()> {
    let s = key.max_strand();
    if s as usize > 2 * blocks {
        return Err(PfError::StrandOutOfRange {
            strand: s,
            blocks,
            required: (s as usize).div_ceil(2),
        });
    }
    Ok(())
}

/// Phase data shared by every column of a monomial action.
struct ActionConsts {
    d: usize,
    q_turns: i64,
    odd_prefactor: i64,
}

impl ActionConsts {
    fn new(params: &AlgebraParams) -> Self {
        ActionConsts {
            d: params.d() as usize,
            q_turns: params.q_phase().turns() as i64,
            odd_prefactor: params.zeta_pow(params.d() as i64 - 1).turns() as i64,
        }
    }
}

/// Applies a monomial to the basis state `digits` in place and returns the
/// phase in turns of `2d²`.
fn apply_monomial(c: &ActionConsts, key: &MonomialKey, digits: &mut [usize]) -> i64 {
    let mut turns: i64 = 0;
    // Rightmost factor acts first.
    for &(strand, e) in key.pairs().iter().rev() {
        let site = ((strand - 1) / 2) as usize;
        for _ in 0..e {
            let prefix: usize = digits[..site].iter().sum();
            if strand % 2 == 0 {
                turns += c.odd_prefactor - c.q_turns * digits[site] as i64;
            }
            digits[site] = (digits[site] + 1) % c.d;
            turns -= c.q_turns * prefix as i64;
        }
    }
    turns
}

/// Phased permutation realizing a normal-form monomial on `blocks` qudits.
pub fn monomial_action(
    params: &AlgebraParams,
    key: &MonomialKey,
    blocks: usize,
) -> Result<PhasedPermutation> {
    check_strands(key, blocks)?;
    let d = params.d() as usize;
    let dim = checked_dim(params.d(), blocks)?;
    let denom = params.phase_denom();
    let consts = ActionConsts::new(params);

    let mut rows = Vec::with_capacity(dim);
    let mut phases = Vec::with_capacity(dim);
    let mut digits = vec![0usize; blocks];
    for col in 0..dim {
        let mut rem = col;
        for b in (0..blocks).rev() {
            digits[b] = rem % d;
            rem /= d;
        }
        let turns = apply_monomial(&consts, key, &mut digits);
        let row = digits.iter().fold(0usize, |acc, &k| acc * d + k);
        rows.push(row);
        phases.push(Phase::new(turns, denom));
    }
    Ok(PhasedPermutation { rows, phases })
}

/// Standard qudit clock `Z` and shift `X` on one site.
pub fn clock_shift(params: &AlgebraParams) -> (Operator, Operator) {
    let d = params.d() as usize;
    let mut z = DMatrix::zeros(d, d);
    let mut x = DMatrix::zeros(d, d);
    for k in 0..d {
        z[(k, k)] = params.q_pow(k as i64).to_complex();
        x[((k + 1) % d, k)] = Complex64::new(1.0, 0.0);
    }
    let op = |m| Operator {
        params: *params,
        blocks: 1,
        mat: m,
    };
    (op(z), op(x))
}

pub fn represent_generator(params: &AlgebraParams, strand: u32, blocks: usize) -> Result<Operator> {
    if strand == 0 {
        return Err(PfError::Format("strands are numbered from 1".into()));
    }
    let key = MonomialKey::from_pairs(vec![(strand, 1)], params.d())
        .expect("single generator is in normal form");
    represent_monomial(params, &key, blocks)
}

pub fn represent_monomial(params: &AlgebraParams, key: &MonomialKey, blocks: usize) -> Result<Operator> {
    let perm = monomial_action(params, key, blocks)?;
    Ok(Operator {
        params: *params,
        blocks,
        mat: perm.to_matrix(),
    })
}

/// Linear extension of the generator representation.
pub fn represent(a: &AlgebraElement, blocks: usize) -> Result<Operator> {
    let params = *a.params();
    let mut out = Operator::zeros(params, blocks)?;
    for (key, &c) in a.terms() {
        monomial_action(&params, key, blocks)?.add_scaled_into(&mut out.mat, c);
    }
    Ok(out)
}

/// All `d^{2m}` normal-form monomials supported on the first `blocks` blocks.
pub fn monomial_basis(d: u32, blocks: usize) -> impl Iterator<Item = MonomialKey> {
    let strands = 2 * blocks;
    let total = (d as u64).checked_pow(strands as u32).unwrap_or(u64::MAX);
    (0..total).map(move |mut idx| {
        let mut exps = vec![0u32; strands];
        for slot in exps.iter_mut().rev() {
            *slot = (idx % d as u64) as u32;
            idx /= d as u64;
        }
        let pairs = exps
            .into_iter()
            .enumerate()
            .filter(|(_, e)| *e != 0)
            .map(|(i, e)| (i as u32 + 1, e))
            .collect();
        MonomialKey::from_pairs(pairs, d).expect("enumerated keys are normal")
    })
}

/// Expands an operator in the monomial basis using the normalized trace
/// inner product `tr(M† A) / d^m`.
///
/// Every monomial is a phase times `⊗ X^{u_s} Z^{v_s}`, so all coefficients
/// come from one clock/shift transform of `A`.
pub fn expand(op: &Operator, cutoff: f64) -> Result<AlgebraElement> {
    let params = *op.params();
    let d = params.d() as usize;
    let m = op.blocks();
    let n = op.dim();
    let a = op.matrix();
    let consts = ActionConsts::new(&params);
    let denom = params.phase_denom();

    let to_digits = |mut x: usize| {
        let mut v = vec![0usize; m];
        for s in (0..m).rev() {
            v[s] = x % d;
            x /= d;
        }
        v
    };
    let from_digits = |v: &[usize]| v.iter().fold(0usize, |acc, &k| acc * d + k);
    let digits: Vec<Vec<usize>> = (0..n).map(to_digits).collect();
    let q_inv: Vec<Complex64> = (0..d).map(|k| params.q_pow(-(k as i64)).to_complex()).collect();

    // weyl[u * n + v] = Σ_k q^{-v·k} A[k + u, k]
    let mut weyl = vec![Complex64::new(0.0, 0.0); n * n];
    let mut scratch = vec![Complex64::new(0.0, 0.0); d];
    for u in 0..n {
        let row = &mut weyl[u * n..(u + 1) * n];
        for (k, dk) in digits.iter().enumerate() {
            let shifted: Vec<usize> = dk.iter().zip(&digits[u]).map(|(x, y)| (x + y) % d).collect();
            row[k] = a[(from_digits(&shifted), k)];
        }
        let mut stride = 1;
        for _ in 0..m {
            for base in 0..n {
                if (base / stride) % d != 0 {
                    continue;
                }
                for (v, out) in scratch.iter_mut().enumerate() {
                    *out = (0..d).map(|k| q_inv[(v * k) % d] * row[base + k * stride]).sum();
                }
                for (v, val) in scratch.iter().enumerate() {
                    row[base + v * stride] = *val;
                }
            }
            stride *= d;
        }
    }

    let mut terms = Vec::new();
    let mut work = vec![0usize; m];
    for key in monomial_basis(params.d(), m) {
        check_strands(&key, m)?;
        work.iter_mut().for_each(|x| *x = 0);
        let t0 = apply_monomial(&consts, &key, &mut work);
        let u = from_digits(&work);
        let mut v = vec![0usize; m];
        for (s, vs) in v.iter_mut().enumerate() {
            work.iter_mut().for_each(|x| *x = 0);
            work[s] = 1;
            let ts = apply_monomial(&consts, &key, &mut work);
            let step = (ts - t0).rem_euclid(denom as i64);
            debug_assert_eq!(step % consts.q_turns, 0);
            *vs = (step / consts.q_turns) as usize % d;
        }
        let phase = Phase::new(t0, denom).to_complex();
        let c = phase.conj() * weyl[u * n + from_digits(&v)] / n as f64;
        if c.norm() > cutoff {
            terms.push((key, c));
        }
    }
    Ok(AlgebraElement::from_terms(params, terms))
}

/// Normalized quadratic Gauss sum `omega` and its principal square root.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GaussPhase {
    pub omega: Complex64,
    pub omega_sqrt: Complex64,
}

pub fn gauss_phase(params: &AlgebraParams) -> GaussPhase {
    let d = params.d() as i64;
    let sum: Complex64 = (0..d).map(|j| params.zeta_pow(j * j).to_complex()).sum();
    let omega = sum / (d as f64).sqrt();
    GaussPhase {
        omega,
        omega_sqrt: omega.sqrt(),
    }
}

/// Column vector helper used by state code.
pub fn basis_vector(dim: usize, index: usize) -> DVector<Complex64> {
    let mut v = DVector::zeros(dim);
    v[index] = Complex64::new(1.0, 0.0);
    v
}
