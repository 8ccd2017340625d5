//! Python bindings. Fields are plain lists; heavy work releases the GIL.

use std::path::PathBuf;
use std::sync::OnceLock;

use percodetect::mctest::{self, Calibrator};
use percodetect::newman_ziff::SweepOptions;
use percodetect::{bounds, clusters, Color, Error, PgmImage};
use pyo3::create_exception;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

create_exception!(percodetect, PercodetectError, PyValueError);

fn to_py(e: Error) -> PyErr {
    PercodetectError::new_err(e.to_string())
}

fn parse_color(color: &str) -> PyResult<Color> {
    match color {
        "black" => Ok(Color::Black),
        "white" => Ok(Color::White),
        other => Err(PyValueError::new_err(format!("color must be 'black' or 'white', got {other:?}"))),
    }
}

#[pyclass(frozen, name = "TriangularLattice")]
struct PyLattice(percodetect::TriangularLattice);

#[pymethods]
impl PyLattice {
    #[new]
    fn new(side: usize) -> PyResult<Self> {
        percodetect::TriangularLattice::new(side).map(Self).map_err(to_py)
    }

    #[getter]
    fn side(&self) -> usize {
        self.0.side()
    }

    #[getter]
    fn site_count(&self) -> usize {
        self.0.site_count()
    }

    #[getter]
    fn bond_count(&self) -> usize {
        self.0.bond_count()
    }

    fn index(&self, row: usize, col: usize) -> PyResult<usize> {
        self.0.site(row, col).map(|s| s.index()).map_err(to_py)
    }

    /// Neighbour indices of site `index`.
    fn neighbors(&self, index: usize) -> PyResult<Vec<usize>> {
        let ids = self.0.neighbors(percodetect::SiteId(index)).map_err(to_py)?;
        Ok(ids.into_iter().map(|s| s.index()).collect())
    }

    fn position(&self, index: usize) -> PyResult<(f64, f64)> {
        self.0.site_position(percodetect::SiteId(index)).map_err(to_py)
    }

    /// Site indices of the `rho x rho` square centred on the lattice.
    fn centered_square(&self, rho: usize) -> PyResult<Vec<usize>> {
        Ok(self.0.centered_square(rho).map_err(to_py)?.iter().collect())
    }

    fn __repr__(&self) -> String {
        format!("TriangularLattice(side={})", self.0.side())
    }
}

#[pyclass(frozen, name = "NoiseModel")]
struct PyNoise(percodetect::NoiseModel);

#[pymethods]
impl PyNoise {
    /// A family name ("gaussian", "laplace", ...) or a JSON descriptor.
    #[new]
    fn new(spec: &str) -> PyResult<Self> {
        percodetect::NoiseModel::parse(spec).map(Self).map_err(to_py)
    }

    #[getter]
    fn family(&self) -> &'static str {
        self.0.family()
    }

    fn cdf(&self, x: f64) -> f64 {
        self.0.cdf(x)
    }

    fn survival(&self, x: f64) -> f64 {
        self.0.survival(x)
    }

    fn quantile(&self, u: f64) -> f64 {
        self.0.quantile(u)
    }

    fn mean(&self) -> f64 {
        self.0.mean()
    }

    fn variance(&self) -> f64 {
        self.0.variance()
    }

    fn __repr__(&self) -> String {
        format!("NoiseModel({:?})", self.0.family())
    }
}

#[pyclass(frozen, name = "GrayField")]
struct PyGray(percodetect::GrayField);

#[pymethods]
impl PyGray {
    #[new]
    fn new(side: usize, values: Vec<f64>) -> PyResult<Self> {
        percodetect::GrayField::new(side, values).map(Self).map_err(to_py)
    }

    /// Reads a PGM file (P2 or P5), row-major with the lattice rows.
    #[staticmethod]
    fn read_pgm(path: PathBuf) -> PyResult<Self> {
        let img = PgmImage::read(&path).map_err(to_py)?;
        img.to_field().map(Self).map_err(to_py)
    }

    #[getter]
    fn side(&self) -> usize {
        self.0.side()
    }

    #[getter]
    fn values(&self) -> Vec<f64> {
        self.0.values().to_vec()
    }

    /// Black where the value is strictly above `tau`.
    fn threshold(&self, tau: f64) -> PyBinary {
        PyBinary(self.0.threshold(tau))
    }
}

#[pyclass(frozen, name = "BinaryField")]
struct PyBinary(percodetect::BinaryField);

#[pymethods]
impl PyBinary {
    #[new]
    fn new(side: usize, bits: Vec<bool>) -> PyResult<Self> {
        percodetect::BinaryField::new(side, bits).map(Self).map_err(to_py)
    }

    /// Independent sites, black with probability `p`.
    #[staticmethod]
    fn bernoulli(side: usize, p: f64, seed: u64) -> PyResult<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(PyValueError::new_err(format!("p must lie in [0, 1], got {p}")));
        }
        Ok(Self(percodetect::BinaryField::bernoulli(side, p, seed)))
    }

    #[getter]
    fn side(&self) -> usize {
        self.0.side()
    }

    #[getter]
    fn bits(&self) -> Vec<bool> {
        self.0.bits().to_vec()
    }

    fn black_count(&self) -> usize {
        self.0.black_count()
    }
}

/// `a * 1_support + sigma * eps` on `lattice`; `support` lists site indices.
#[pyfunction]
#[pyo3(signature = (lattice, noise, seed, support = None, amplitude = 0.0, sigma = 1.0))]
fn synthesize(
    py: Python<'_>,
    lattice: &PyLattice,
    noise: &PyNoise,
    seed: u64,
    support: Option<Vec<usize>>,
    amplitude: f64,
    sigma: f64,
) -> PyResult<PyGray> {
    let side = lattice.0.side();
    let mut spec = percodetect::SignalSpec::null(side, sigma);
    if let Some(sites) = support {
        for i in sites {
            if i >= lattice.0.site_count() {
                return Err(to_py(Error::SiteOutOfRange { index: i, sites: lattice.0.site_count() }));
            }
            spec.support.insert(i);
        }
        spec.amplitude = amplitude;
    } else if amplitude != 0.0 {
        return Err(PyValueError::new_err("amplitude needs a support"));
    }
    py.detach(|| percodetect::synthesize(&spec, &noise.0, &lattice.0, seed)).map(PyGray).map_err(to_py)
}

/// `(labels, sizes)`: label 0 is the other colour, label k has size `sizes[k-1]`.
#[pyfunction]
#[pyo3(signature = (field, lattice, color = "black"))]
fn label_clusters(field: &PyBinary, lattice: &PyLattice, color: &str) -> PyResult<(Vec<u32>, Vec<usize>)> {
    let l = clusters::label_clusters(&field.0, &lattice.0, parse_color(color)?).map_err(to_py)?;
    Ok((l.labels().to_vec(), l.sizes().to_vec()))
}

#[pyfunction]
fn max_cluster_size(field: &PyBinary, lattice: &PyLattice) -> PyResult<usize> {
    clusters::max_cluster_size(&field.0, &lattice.0).map_err(to_py)
}

#[pyfunction]
fn has_left_right_crossing(field: &PyBinary, lattice: &PyLattice) -> PyResult<bool> {
    clusters::has_left_right_crossing(&field.0, &lattice.0).map_err(to_py)
}

#[pyclass(frozen, get_all, name = "DetectionReport")]
struct PyReport {
    decision: &'static str,
    rejected: bool,
    /// Largest black cluster; a lower bound when `early_stopped`.
    statistic: usize,
    c0: usize,
    tau: f64,
    side: usize,
    early_stopped: bool,
}

#[pymethods]
impl PyReport {
    fn __repr__(&self) -> String {
        format!(
            "DetectionReport(decision={:?}, statistic={}, c0={}, tau={})",
            self.decision, self.statistic, self.c0, self.tau
        )
    }
}

/// Thresholds at `tau` and rejects when a black cluster of size `c0` exists.
#[pyfunction]
fn run_test(field: &PyGray, tau: f64, c0: usize, lattice: &PyLattice) -> PyResult<PyReport> {
    let r = mctest::run_test(&field.0, tau, c0, &lattice.0).map_err(to_py)?;
    Ok(PyReport {
        decision: r.decision.as_str(),
        rejected: r.decision.is_reject(),
        statistic: r.statistic,
        c0: r.c0,
        tau: r.tau,
        side: r.side,
        early_stopped: r.early_stopped,
    })
}

fn calibrator() -> &'static Calibrator {
    static CAL: OnceLock<Calibrator> = OnceLock::new();
    CAL.get_or_init(|| Calibrator::from_env(SweepOptions::default()))
}

/// `(c0, saturated)` for the null with black probability `p_e`. Sweeps are
/// cached per `(side, trials, seed)` for the life of the process.
#[pyfunction]
#[pyo3(signature = (side, p_e, alpha, trials = 200_000, seed = 7))]
fn calibrate(py: Python<'_>, side: usize, p_e: f64, alpha: f64, trials: u64, seed: u64) -> PyResult<(u32, bool)> {
    let c = py.detach(|| calibrator().calibrate(side, p_e, alpha, trials, seed)).map_err(to_py)?;
    Ok((c.c0, c.saturated))
}

/// Null survival `[(t, P(T >= t))]` at black probability `p`.
#[pyfunction]
#[pyo3(signature = (side, p, trials = 200_000, seed = 7))]
fn survival(py: Python<'_>, side: usize, p: f64, trials: u64, seed: u64) -> PyResult<Vec<(u32, f64)>> {
    let d = py.detach(|| calibrator().distribution(side, p, trials, seed)).map_err(to_py)?;
    Ok(d.points().collect())
}

/// `(p_E, p_B)` under standard normal noise of scale `sigma`.
#[pyfunction]
#[pyo3(signature = (tau, a, sigma = 1.0))]
fn gaussian_rates(tau: f64, a: f64, sigma: f64) -> PyResult<(f64, f64)> {
    let r = mctest::gaussian_rates(tau, sigma, a).map_err(to_py)?;
    Ok((r.p_e, r.p_b))
}

/// `(lhs, rhs)` of the second-order binomial remainder estimate.
#[pyfunction]
fn binomial_remainder_bound(x: f64, n: u32) -> PyResult<(f64, f64)> {
    bounds::binomial_remainder_bound(x, n).map_err(to_py)
}

/// `(exact, leading, ratio, remainder)` for `1 - (1 - N^(-2 C lambda))^(N²)`.
#[pyfunction]
fn false_alarm_asymptotics(n: f64, c: f64, lam: f64) -> PyResult<(f64, f64, f64, f64)> {
    let r = bounds::false_alarm_exact_vs_leading(n, c, lam).map_err(to_py)?;
    Ok((r.exact, r.leading, r.ratio, r.remainder))
}

#[pymodule]
#[pyo3(name = "percodetect")]
fn percodetect_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("PercodetectError", m.py().get_type::<PercodetectError>())?;
    m.add_class::<PyLattice>()?;
    m.add_class::<PyNoise>()?;
    m.add_class::<PyGray>()?;
    m.add_class::<PyBinary>()?;
    m.add_class::<PyReport>()?;
    m.add_function(wrap_pyfunction!(synthesize, m)?)?;
    m.add_function(wrap_pyfunction!(label_clusters, m)?)?;
    m.add_function(wrap_pyfunction!(max_cluster_size, m)?)?;
    m.add_function(wrap_pyfunction!(has_left_right_crossing, m)?)?;
    m.add_function(wrap_pyfunction!(run_test, m)?)?;
    m.add_function(wrap_pyfunction!(calibrate, m)?)?;
    m.add_function(wrap_pyfunction!(survival, m)?)?;
    m.add_function(wrap_pyfunction!(gaussian_rates, m)?)?;
    m.add_function(wrap_pyfunction!(binomial_remainder_bound, m)?)?;
    m.add_function(wrap_pyfunction!(false_alarm_asymptotics, m)?)?;
    Ok(())
}
