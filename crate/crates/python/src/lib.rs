//! Python module `pygmis`: proposal sets, the six MIS schemes, the lab
//! experiments and the progressive renderer.

use std::path::Path;

use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use gmis::imageio::Image;
use gmis::lab::{run_ordering_experiment, run_uniformity_test, LabConfig};
use gmis::math::vec3;
use gmis::mis::{self, Domain, MisScheme, Point, SchemeTag, SelectionStrategy, Target, Univariate};
use gmis::pathspace::{PdfChain, Technique};
use gmis::renderer::{render_progressive, IntegratorConfig, IntegratorKind, StopCondition};
use gmis::rng::Stream;
use gmis::scene::{fixtures, parse_scene};

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn parse<T: std::str::FromStr>(s: &str) -> PyResult<T>
where
    T::Err: std::fmt::Display,
{
    s.parse().map_err(value_err)
}

/// A 1-D proposal density: `Proposal.normal(mean, std)` or
/// `Proposal.uniform(lo, hi)`.
#[pyclass(frozen, from_py_object, module = "pygmis")]
#[derive(Clone)]
struct Proposal {
    inner: mis::Proposal,
}

#[pymethods]
impl Proposal {
    #[staticmethod]
    fn normal(mean: f64, std: f64) -> PyResult<Self> {
        let u = Univariate::normal(mean, std).map_err(value_err)?;
        Ok(Self {
            inner: mis::Proposal::Line(u),
        })
    }

    #[staticmethod]
    fn uniform(lo: f64, hi: f64) -> PyResult<Self> {
        let u = Univariate::uniform(lo, hi).map_err(value_err)?;
        Ok(Self {
            inner: mis::Proposal::Line(u),
        })
    }

    fn pdf(&self, x: f64) -> f64 {
        self.inner.pdf(&Point::line(x))
    }

    fn __repr__(&self) -> String {
        format!("Proposal({:?})", self.inner)
    }
}

/// Ordered proposals on an interval. Without `domain` the interval covers
/// every member's support.
#[pyclass(frozen, module = "pygmis")]
struct ProposalSet {
    inner: mis::ProposalSet,
}

#[pymethods]
impl ProposalSet {
    #[new]
    #[pyo3(signature = (proposals, domain=None))]
    fn new(proposals: Vec<Proposal>, domain: Option<(f64, f64)>) -> PyResult<Self> {
        let members = proposals.into_iter().map(|p| p.inner).collect();
        let inner = match domain {
            Some((lo, hi)) => mis::ProposalSet::new(members, Domain::Interval { lo, hi }),
            None => mis::ProposalSet::covering(members),
        }
        .map_err(value_err)?;
        Ok(Self { inner })
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn pdf(&self, k: usize, x: f64) -> PyResult<f64> {
        if k >= self.inner.len() {
            return Err(value_err(format!("no proposal {k}")));
        }
        Ok(self.inner.pdf(k, &Point::line(x)))
    }

    fn mixture_pdf(&self, x: f64) -> PyResult<f64> {
        self.inner.mixture_pdf(&Point::line(x)).map_err(value_err)
    }
}

fn target(components: Vec<(f64, Proposal)>) -> Target {
    Target::new(components.into_iter().map(|(w, p)| (w, p.inner)).collect())
}

/// Proposal indices (0-based) drawn by `strategy` ("S1", "S2", "S3").
#[pyfunction]
fn select_indices(strategy: &str, n: usize, m: usize, seed: u64) -> PyResult<Vec<usize>> {
    let s: SelectionStrategy = parse(strategy)?;
    mis::select_indices(s, n, m, &mut Stream::new(seed)).map_err(value_err)
}

/// Exact variance of one M = N estimate of `sum_i w_i p_i` under `scheme`.
#[pyfunction]
fn analytic_variance(
    scheme: &str,
    target_components: Vec<(f64, Proposal)>,
    proposals: &ProposalSet,
) -> PyResult<f64> {
    let tag: SchemeTag = parse(scheme)?;
    mis::analytic_variance(tag, &target(target_components), &proposals.inner).map_err(value_err)
}

/// `trials` independent estimates with `m` samples each; returns a dict
/// with `mean`, `variance`, `stderr` and the raw `estimates`.
#[pyfunction]
fn run_trials<'py>(
    py: Python<'py>,
    scheme: &str,
    target_components: Vec<(f64, Proposal)>,
    proposals: &ProposalSet,
    m: usize,
    trials: usize,
    seed: u64,
) -> PyResult<Bound<'py, PyDict>> {
    let tag: SchemeTag = parse(scheme)?;
    let (rep, estimates) = mis::run_trials(
        &MisScheme::canonical(tag),
        &target(target_components),
        &proposals.inner,
        m,
        trials,
        &Stream::new(seed),
    )
    .map_err(value_err)?;
    let d = PyDict::new(py);
    d.set_item("mean", rep.sample_mean)?;
    d.set_item("variance", rep.sample_variance)?;
    d.set_item("stderr", rep.standard_error)?;
    d.set_item("estimates", estimates)?;
    Ok(d)
}

/// Runs the ordering experiment on a lab config text. Returns
/// `(csv, ordering_a_pass, ordering_b_pass)`.
#[pyfunction]
fn run_lab(config: &str) -> PyResult<(String, bool, bool)> {
    let c = LabConfig::parse(config).map_err(value_err)?;
    let r = run_ordering_experiment(&c).map_err(value_err)?;
    Ok((r.to_csv(), r.ordering_a.pass(), r.ordering_b.pass()))
}

/// Selection frequencies: `(frequencies, chi_square, p_value)`.
#[pyfunction]
fn uniformity(strategy: &str, n: usize, cycles: usize, seed: u64) -> PyResult<(Vec<f64>, f64, f64)> {
    let t = run_uniformity_test(parse(strategy)?, n, cycles, seed).map_err(value_err)?;
    Ok((t.frequencies, t.chi_square, t.p_value))
}

/// Balance-heuristic weights of every technique for one path, given its
/// area densities from the light side (`forward`) and the eye side
/// (`reverse`). The last vertex is a pinhole camera, so its forward
/// density is 0. Names are `connect:s` and `merge:m`.
#[pyfunction]
#[pyo3(signature = (forward, reverse, eta=0.0))]
fn technique_weights(forward: Vec<f64>, reverse: Vec<f64>, eta: f64) -> PyResult<Vec<(String, f64)>> {
    let chain = PdfChain {
        forward,
        reverse,
        eta,
    };
    let weights = chain.weights().map_err(value_err)?;
    Ok(weights
        .into_iter()
        .map(|(t, w)| {
            let name = match t {
                Technique::Connect { s } => format!("connect:{s}"),
                Technique::Merge { m } => format!("merge:{m}"),
            };
            (name, w)
        })
        .collect())
}

fn flatten(img: &Image) -> Vec<f64> {
    img.pixels.iter().flat_map(|p| [p.x, p.y, p.z]).collect()
}

fn unflatten(width: usize, height: usize, data: &[f64]) -> PyResult<Image> {
    if data.len() != width * height * 3 {
        return Err(value_err(format!(
            "expected {} values for {width}x{height} RGB, got {}",
            width * height * 3,
            data.len()
        )));
    }
    let pixels = data.chunks_exact(3).map(|c| vec3(c[0], c[1], c[2])).collect();
    Ok(Image::from_pixels(width, height, pixels))
}

/// Renders a scene given as text. Returns a dict with `width`, `height`,
/// `pixels` (flat RGB, row 0 at the top), `iterations`, `rejected` and
/// `average_branch_factor`.
#[pyfunction]
#[pyo3(signature = (scene, integrator, width, height, iterations, seed=0, max_samples=20, branch=4))]
#[allow(clippy::too_many_arguments)]
fn render<'py>(
    py: Python<'py>,
    scene: &str,
    integrator: &str,
    width: usize,
    height: usize,
    iterations: u64,
    seed: u64,
    max_samples: usize,
    branch: usize,
) -> PyResult<Bound<'py, PyDict>> {
    let scene = parse_scene(scene).map_err(value_err)?;
    let kind: IntegratorKind = parse(integrator)?;
    let config = IntegratorConfig {
        max_samples,
        branch,
        ..IntegratorConfig::new(kind).with_seed(seed)
    };
    let out = py
        .detach(|| {
            render_progressive(
                &scene,
                width,
                height,
                config,
                StopCondition::Iterations(iterations),
                None,
            )
        })
        .map_err(value_err)?;
    let d = PyDict::new(py);
    d.set_item("width", width)?;
    d.set_item("height", height)?;
    d.set_item("pixels", flatten(&out.film.to_image()))?;
    d.set_item("iterations", out.stats.iterations)?;
    d.set_item("rejected", out.stats.rejected_samples())?;
    d.set_item("average_branch_factor", out.stats.average_branch_factor())?;
    Ok(d)
}

/// Root mean squared difference of two flat RGB buffers.
#[pyfunction]
fn rmse(a: Vec<f64>, b: Vec<f64>) -> PyResult<f64> {
    if a.len() != b.len() || a.len() % 3 != 0 {
        return Err(value_err(format!("buffer sizes {} and {} differ", a.len(), b.len())));
    }
    let n = a.len() / 3;
    Ok(gmis::imageio::rmse(&unflatten(n, 1, &a)?.pixels, &unflatten(n, 1, &b)?.pixels))
}

/// `(width, height, pixels)` of a PFM file.
#[pyfunction]
fn read_pfm(path: &str) -> PyResult<(usize, usize, Vec<f64>)> {
    let img = Image::read_pfm(Path::new(path)).map_err(|e| PyIOError::new_err(e.to_string()))?;
    Ok((img.width, img.height, flatten(&img)))
}

#[pyfunction]
fn write_pfm(path: &str, width: usize, height: usize, pixels: Vec<f64>) -> PyResult<()> {
    unflatten(width, height, &pixels)?
        .write_pfm(Path::new(path))
        .map_err(|e| PyIOError::new_err(e.to_string()))
}

/// Text of a bundled scene.
#[pyfunction]
fn fixture(name: &str) -> PyResult<&'static str> {
    fixtures::source(name).ok_or_else(|| value_err(format!("no fixture named '{name}'")))
}

#[pyfunction]
fn fixture_names() -> Vec<&'static str> {
    fixtures::FIXTURES.iter().map(|(n, _)| *n).collect()
}

#[pymodule]
fn pygmis(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Proposal>()?;
    m.add_class::<ProposalSet>()?;
    m.add_function(wrap_pyfunction!(select_indices, m)?)?;
    m.add_function(wrap_pyfunction!(analytic_variance, m)?)?;
    m.add_function(wrap_pyfunction!(run_trials, m)?)?;
    m.add_function(wrap_pyfunction!(run_lab, m)?)?;
    m.add_function(wrap_pyfunction!(uniformity, m)?)?;
    m.add_function(wrap_pyfunction!(technique_weights, m)?)?;
    m.add_function(wrap_pyfunction!(render, m)?)?;
    m.add_function(wrap_pyfunction!(rmse, m)?)?;
    m.add_function(wrap_pyfunction!(read_pfm, m)?)?;
    m.add_function(wrap_pyfunction!(write_pfm, m)?)?;
    m.add_function(wrap_pyfunction!(fixture, m)?)?;
    m.add_function(wrap_pyfunction!(fixture_names, m)?)?;
    Ok(())
}
