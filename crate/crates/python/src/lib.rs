//! Python bindings.

use num_complex::Complex64;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use parafermion::braid::{adjoint_action, BraidUnitary, BraidWord};
use parafermion::definetti;
use parafermion::expr::{eval, parse, EvalContext};
use parafermion::matrix_rep::{gauss_phase as gauss, represent};
use parafermion::state::{self, DensityState};
use parafermion::{AlgebraElement, AlgebraParams, Degree, PfError};

fn err(e: PfError) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// An element of the parafermion algebra in normal form.
#[pyclass(name = "Element", module = "parafermion_py")]
pub struct Element {
    inner: AlgebraElement,
}

fn wrap(inner: AlgebraElement) -> Element {
    Element { inner }
}

#[pymethods]
impl Element {
    /// Parse and evaluate an expression at order `d` on `pairs` blocks.
    #[staticmethod]
    fn parse(d: u32, pairs: usize, text: &str) -> PyResult<Element> {
        let e = parse(text).map_err(|e| err(e.into()))?;
        let ctx = EvalContext::new(d, pairs).map_err(err)?;
        eval(&e, &ctx).map(wrap).map_err(err)
    }

    #[staticmethod]
    #[pyo3(signature = (d, strand, exp = 1))]
    fn generator(d: u32, strand: u32, exp: i64) -> PyResult<Element> {
        let p = AlgebraParams::new(d).map_err(err)?;
        Ok(wrap(AlgebraElement::from_word(p, &[(strand, exp)], Complex64::new(1.0, 0.0))))
    }

    #[staticmethod]
    fn identity(d: u32) -> PyResult<Element> {
        Ok(wrap(AlgebraElement::identity(AlgebraParams::new(d).map_err(err)?)))
    }

    #[getter]
    fn d(&self) -> u32 {
        self.inner.params().d()
    }

    fn terms(&self) -> Vec<(Vec<(u32, u32)>, Complex64)> {
        self.inner
            .terms()
            .iter()
            .map(|(k, c)| (k.pairs().to_vec(), *c))
            .collect()
    }

    fn adjoint(&self) -> Element {
        wrap(self.inner.adjoint())
    }

    /// Translation by `k` blocks.
    #[pyo3(signature = (k = 1))]
    fn shift(&self, k: u32) -> Element {
        wrap(self.inner.shift(k))
    }

    /// Charge mod d, or None when the element mixes charges.
    fn degree(&self) -> Option<u32> {
        match self.inner.degree() {
            Degree::Homogeneous(c) => Some(c.value()),
            Degree::Mixed => None,
        }
    }

    fn is_zero(&self) -> bool {
        self.inner.is_zero()
    }

    fn distance(&self, other: PyRef<'_, Element>) -> f64 {
        self.inner.distance(&other.inner)
    }

    /// Matrix on `pairs` blocks as nested lists of complex numbers.
    fn matrix(&self, pairs: usize) -> PyResult<Vec<Vec<Complex64>>> {
        let op = represent(&self.inner, pairs).map_err(err)?;
        Ok(to_rows(op.matrix()))
    }

    fn __add__(&self, other: PyRef<'_, Element>) -> PyResult<Element> {
        same_d(&self.inner, &other.inner)?;
        Ok(wrap(&self.inner + &other.inner))
    }

    fn __sub__(&self, other: PyRef<'_, Element>) -> PyResult<Element> {
        same_d(&self.inner, &other.inner)?;
        Ok(wrap(&self.inner - &other.inner))
    }

    fn __mul__(&self, other: &Bound<'_, PyAny>) -> PyResult<Element> {
        if let Ok(e) = other.cast::<Element>() {
            return self.inner.multiply(&e.borrow().inner).map(wrap).map_err(err);
        }
        let z: Complex64 = other.extract()?;
        Ok(wrap(self.inner.scale(z)))
    }

    fn __rmul__(&self, other: Complex64) -> Element {
        wrap(self.inner.scale(other))
    }

    fn __neg__(&self) -> Element {
        wrap(-&self.inner)
    }

    fn __pow__(&self, n: u32, _modulo: Option<u32>) -> Element {
        wrap(self.inner.pow(n))
    }

    fn __str__(&self) -> String {
        self.inner.to_string()
    }

    fn __repr__(&self) -> String {
        format!("Element(d={}, {})", self.inner.params().d(), self.inner)
    }
}

fn same_d(a: &AlgebraElement, b: &AlgebraElement) -> PyResult<()> {
    if a.params().d() != b.params().d() {
        return Err(err(PfError::IncompatibleAlgebras {
            left: a.params().d(),
            right: b.params().d(),
        }));
    }
    Ok(())
}

fn to_rows(m: &nalgebra::DMatrix<Complex64>) -> Vec<Vec<Complex64>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}

/// Unitary of a braid word such as "b1 b2'".
#[pyclass(name = "Braid", module = "parafermion_py")]
pub struct Braid {
    inner: BraidUnitary,
}

#[pymethods]
impl Braid {
    #[new]
    fn new(d: u32, word: &str, pairs: usize) -> PyResult<Braid> {
        let p = AlgebraParams::new(d).map_err(err)?;
        let w: BraidWord = word.parse().map_err(err)?;
        BraidUnitary::realize(&p, &w, pairs)
            .map(|inner| Braid { inner })
            .map_err(err)
    }

    /// B x B†.
    fn conjugate(&self, x: PyRef<'_, Element>) -> PyResult<Element> {
        adjoint_action(&self.inner, &x.inner).map(wrap).map_err(err)
    }

    fn unitarity_residual(&self) -> f64 {
        self.inner.unitarity_residual()
    }

    fn matrix(&self) -> Vec<Vec<Complex64>> {
        to_rows(self.inner.op.matrix())
    }

    fn __repr__(&self) -> String {
        format!("Braid({})", self.inner.word)
    }
}

/// Density matrix on a block truncation.
#[pyclass(name = "Density", module = "parafermion_py")]
pub struct Density {
    inner: DensityState,
}

#[pymethods]
impl Density {
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Density> {
        let v: serde_json::Value =
            serde_json::from_str(text).map_err(|e| PyValueError::new_err(e.to_string()))?;
        state::density_from_json(&v)
            .map(|inner| Density { inner })
            .map_err(err)
    }

    #[staticmethod]
    fn maximally_mixed(d: u32, pairs: usize) -> PyResult<Density> {
        let p = AlgebraParams::new(d).map_err(err)?;
        DensityState::maximally_mixed(p, pairs)
            .map(|inner| Density { inner })
            .map_err(err)
    }

    #[staticmethod]
    fn diagonal(d: u32, pairs: usize, weights: Vec<f64>) -> PyResult<Density> {
        let p = AlgebraParams::new(d).map_err(err)?;
        DensityState::diagonal(p, pairs, &weights)
            .map(|inner| Density { inner })
            .map_err(err)
    }

    #[staticmethod]
    #[pyo3(signature = (d, pairs, rank, seed = 0))]
    fn random(d: u32, pairs: usize, rank: usize, seed: u64) -> PyResult<Density> {
        use rand::SeedableRng;
        let p = AlgebraParams::new(d).map_err(err)?;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        DensityState::random(p, pairs, rank, &mut rng)
            .map(|inner| Density { inner })
            .map_err(err)
    }

    fn to_json(&self) -> String {
        state::density_to_json(&self.inner).to_string()
    }

    fn expectation(&self, x: PyRef<'_, Element>) -> PyResult<Complex64> {
        state::expectation(&self.inner, &x.inner).map_err(err)
    }

    fn eigenvalues(&self) -> Vec<f64> {
        self.inner.eigenvalues().iter().copied().collect()
    }

    /// Projection onto the braid-invariant densities.
    fn invariant_projection(&self) -> PyResult<Density> {
        definetti::invariant_project(&self.inner)
            .map(|inner| Density { inner })
            .map_err(err)
    }

    fn invariance_residual(&self) -> PyResult<f64> {
        definetti::invariance_residual(&self.inner)
            .map(|c| c.residual)
            .map_err(err)
    }

    /// Admissibility report as a dict.
    fn admissibility<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let phi = state::density_to_functional(&self.inner);
        let a = definetti::admissibility_check(&phi).map_err(err)?;
        let out = PyDict::new(py);
        out.set_item("admissible", a.admissible)?;
        out.set_item("p0", a.p0)?;
        out.set_item("offending", a.offending)?;
        Ok(out)
    }
}

#[pyfunction]
fn p0(d: u32) -> u32 {
    definetti::p0(d)
}

/// `{"p0", "square_free", "admissible", ...}` for order `d`.
#[pyfunction]
fn charge_structure(d: u32) -> PyResult<String> {
    let s = definetti::charge_structure(d).map_err(err)?;
    Ok(serde_json::to_string(&s).expect("plain data"))
}

/// Returns (ω, √ω) for order `d`.
#[pyfunction]
fn gauss_phase(d: u32) -> PyResult<(Complex64, Complex64)> {
    let g = gauss(&AlgebraParams::new(d).map_err(err)?);
    Ok((g.omega, g.omega_sqrt))
}

/// Dirac test on a weighted list of densities; returns the report as JSON.
#[pyfunction]
#[pyo3(signature = (components, tol = 1e-8))]
fn dirac_check(components: Vec<(f64, PyRef<'_, Density>)>, tol: f64) -> PyResult<String> {
    let parts: Vec<(f64, DensityState)> =
        components.iter().map(|(w, d)| (*w, d.inner.clone())).collect();
    let r = definetti::dirac_check(&parts, tol, tol).map_err(err)?;
    Ok(serde_json::to_string(&r).expect("plain data"))
}

/// Runs the command-line tool in-process; returns (exit code, JSON text).
#[pyfunction]
fn run_cli(args: Vec<String>) -> (i32, String) {
    let o = parafermion::cli::run(std::iter::once("parafermion".to_string()).chain(args));
    (o.code, o.report.to_string())
}

#[pymodule]
fn parafermion_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Element>()?;
    m.add_class::<Braid>()?;
    m.add_class::<Density>()?;
    m.add_function(wrap_pyfunction!(p0, m)?)?;
    m.add_function(wrap_pyfunction!(charge_structure, m)?)?;
    m.add_function(wrap_pyfunction!(gauss_phase, m)?)?;
    m.add_function(wrap_pyfunction!(dirac_check, m)?)?;
    m.add_function(wrap_pyfunction!(run_cli, m)?)?;
    Ok(())
}
