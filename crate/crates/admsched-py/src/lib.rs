//! Python bindings for the admissible-set scheduling toolkit: circle
//! geometry, interference models, exact counting and uniform sampling,
//! the slot dynamics, and the Lyapunov diagnostics.
//!
//! Configurations cross the boundary as plain lists of locations in
//! `[0, 1)`; occupancy vectors as lists of non-negative integers.  Exact
//! counts come back as arbitrary-precision Python integers.

use admsched::admissibility::{self, Configuration, Model as CoreModel};
use admsched::config::RunConfig;
use admsched::diagnostics as diag;
use admsched::dynamics::Dynamics as CoreDynamics;
use admsched::geometry::{self, Partition as CorePartition};
use admsched::oracle::run_battery;
use admsched::rng::{stream_rng, Stream};
use admsched::sampler;
use admsched::traffic::ArrivalSpec;
use num_bigint::BigUint;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use rand_chacha::ChaCha8Rng;

fn val_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn configuration(locs: &[f64]) -> PyResult<Configuration> {
    for &x in locs {
        if !(0.0..1.0).contains(&x) {
            return Err(val_err(format!("location {x} outside [0, 1)")));
        }
    }
    Ok(Configuration::from_locations(locs))
}

/// Shortest arc distance between two points of the unit circle.
#[pyfunction]
fn circ_distance(x: f64, w: f64) -> f64 {
    geometry::circ_distance(x, w)
}

/// Largest admissible set size for conflict radius `r`.
#[pyfunction]
fn mu_for_radius(r: f64) -> PyResult<usize> {
    geometry::mu_for_radius(r).map_err(val_err)
}

/// Interference model: pairwise distance on the circle or an abstract
/// region conflict graph.
#[pyclass(frozen)]
struct Model {
    inner: CoreModel,
}

#[pymethods]
impl Model {
    #[staticmethod]
    fn pairwise(r: f64) -> PyResult<Model> {
        Ok(Model { inner: CoreModel::pairwise(r).map_err(val_err)? })
    }

    #[staticmethod]
    fn region_graph(k: usize, edges: Vec<(usize, usize)>) -> PyResult<Model> {
        Ok(Model { inner: CoreModel::region_graph(k, &edges).map_err(val_err)? })
    }

    fn mu(&self) -> usize {
        self.inner.max_admissible_size()
    }

    fn forbidden_size(&self) -> Option<usize> {
        self.inner.forbidden_size()
    }

    fn is_admissible(&self, locs: Vec<f64>) -> PyResult<bool> {
        let y = configuration(&locs)?;
        Ok(self.inner.is_admissible(y.particles()))
    }

    #[pyo3(signature = (k = None))]
    fn default_partition(&self, k: Option<usize>) -> PyResult<Partition> {
        Ok(Partition { inner: self.inner.default_partition(k).map_err(val_err)? })
    }

    fn __repr__(&self) -> String {
        match &self.inner {
            CoreModel::PairwiseDistance { r, .. } => format!("Model.pairwise({r})"),
            CoreModel::RegionGraph(g) => format!("Model.region_graph(k={})", g.k()),
        }
    }
}

/// Equal-measure partition of the circle into `K` regions grouped into
/// guaranteed blocks of `mu`.
#[pyclass(frozen)]
struct Partition {
    inner: CorePartition,
}

#[pymethods]
impl Partition {
    #[staticmethod]
    #[pyo3(signature = (r, k = None))]
    fn build(r: f64, k: Option<usize>) -> PyResult<Partition> {
        Ok(Partition { inner: geometry::build_partition(r, k).map_err(val_err)? })
    }

    #[staticmethod]
    fn uniform(k: usize, mu: usize) -> PyResult<Partition> {
        Ok(Partition { inner: CorePartition::uniform(k, mu).map_err(val_err)? })
    }

    fn k(&self) -> usize {
        self.inner.k()
    }

    fn mu(&self) -> usize {
        self.inner.mu()
    }

    fn region_of(&self, x: f64) -> PyResult<usize> {
        if !(0.0..1.0).contains(&x) {
            return Err(val_err(format!("location {x} outside [0, 1)")));
        }
        Ok(self.inner.region_of(x))
    }

    fn region_interval(&self, i: usize) -> PyResult<(f64, f64)> {
        if i >= self.inner.k() {
            return Err(val_err(format!("region {i} out of range")));
        }
        Ok(self.inner.region_interval(i))
    }

    /// Structural checks against a model; returns `(passed, report)`.
    fn validate(&self, model: &Model) -> (bool, String) {
        let report = admissibility::validate_partition(&self.inner, &model.inner);
        (report.passed(), report.to_string())
    }

    fn __repr__(&self) -> String {
        format!("Partition(k={}, mu={})", self.inner.k(), self.inner.mu())
    }
}

/// Exact subset counts: `(total, by_size)` as Python integers.
#[pyfunction]
fn count_admissible_subsets(model: &Model, locs: Vec<f64>) -> PyResult<(BigUint, Vec<BigUint>)> {
    let y = configuration(&locs)?;
    let counts = sampler::count_admissible_subsets(&model.inner, &y);
    Ok((counts.total, counts.by_size))
}

/// Per-particle service probabilities under the uniform rule.
#[pyfunction]
fn removal_marginals(model: &Model, locs: Vec<f64>) -> PyResult<Vec<f64>> {
    let y = configuration(&locs)?;
    Ok(sampler::removal_marginals(&model.inner, &y).per_particle)
}

/// Exact uniform sampler over the admissible subsets of one configuration.
#[pyclass]
struct Sampler {
    sampler: sampler::SubsetSampler,
    rng: ChaCha8Rng,
}

#[pymethods]
impl Sampler {
    #[new]
    fn new(model: &Model, locs: Vec<f64>, seed: u64) -> PyResult<Sampler> {
        let y = configuration(&locs)?;
        Ok(Sampler {
            sampler: sampler::SubsetSampler::new(&model.inner, &y),
            rng: stream_rng(seed, Stream::Scheduler),
        })
    }

    fn total(&self) -> BigUint {
        self.sampler.total()
    }

    fn by_size(&self) -> Vec<BigUint> {
        self.sampler.counts().by_size
    }

    /// Draw one admissible subset, uniformly; returns ascending indices.
    fn sample(&mut self) -> Vec<usize> {
        self.sampler.sample(&mut self.rng)
    }

    /// Exact number of admissible subsets containing each particle.
    fn containing_counts(&self) -> Vec<BigUint> {
        self.sampler.containing_counts()
    }
}

/// The slot chain built from a JSON run description (same schema as the
/// CLI); steps are arrivals followed by one admissible-subset departure.
#[pyclass]
struct Simulation {
    dynamics: CoreDynamics,
}

#[pymethods]
impl Simulation {
    #[new]
    fn new(config_json: &str) -> PyResult<Simulation> {
        let cfg: RunConfig = serde_json::from_str(config_json).map_err(val_err)?;
        let parts = cfg.build().map_err(val_err)?;
        let dynamics = CoreDynamics::new(parts.model, parts.arrivals, parts.scheduler, cfg.seed)
            .map_err(val_err)?;
        Ok(Simulation { dynamics })
    }

    /// Advance one slot; returns `(t, total, arrived, removed, is_empty)`.
    fn step(&mut self) -> (u64, usize, usize, usize, bool) {
        let r = self.dynamics.step();
        (r.t, r.total, r.arrived, r.removed, r.is_empty)
    }

    /// Run `slots` slots keeping every `thin`-th record (plus empty and
    /// final slots); returns `(t, total, arrived, removed)` rows.
    #[pyo3(signature = (slots, thin = 1))]
    fn run(&mut self, slots: u64, thin: u64) -> PyResult<Vec<(u64, usize, usize, usize)>> {
        if thin == 0 {
            return Err(val_err("thin must be positive"));
        }
        let result = self.dynamics.run(slots, thin);
        Ok(result.trace.iter().map(|r| (r.t, r.total, r.arrived, r.removed)).collect())
    }

    fn t(&self) -> u64 {
        self.dynamics.t()
    }

    fn total(&self) -> usize {
        self.dynamics.config().len()
    }

    fn empty_visits(&self) -> u64 {
        self.dynamics.empty_visits()
    }

    fn locations(&self) -> Vec<f64> {
        self.dynamics.config().locations()
    }
}

/// Occupancy of each region of a partition.
#[pyfunction]
fn region_counts(partition: &Partition, locs: Vec<f64>) -> PyResult<Vec<u64>> {
    let y = configuration(&locs)?;
    Ok(diag::region_counts(&y, &partition.inner))
}

/// The entropy-like functional `sum x_k ln x_k` over occupied regions.
#[pyfunction]
fn lyapunov_v(counts: Vec<u64>) -> f64 {
    diag::lyapunov_v(&counts)
}

/// The log-sum functional `sum ln x_k` over occupied regions.
#[pyfunction]
fn j_value(counts: Vec<u64>) -> f64 {
    diag::j_value(&counts)
}

/// Best guaranteed log-weight of an occupancy vector: `(ln_w, regions)`.
#[pyfunction]
fn max_guaranteed_ln_weight(
    counts: Vec<u64>,
    partition: &Partition,
    model: &Model,
) -> PyResult<(f64, Vec<usize>)> {
    if counts.len() != partition.inner.k() {
        return Err(val_err("one occupancy entry per region"));
    }
    let w = diag::max_guaranteed_ln_weight(&counts, &partition.inner, &model.inner);
    Ok((w.ln_w, w.regions))
}

/// Heavy-set threshold on the log-weight scale.
#[pyfunction]
fn heavy_threshold(k: usize, eps: f64) -> PyResult<f64> {
    if !(0.0..1.0).contains(&eps) || eps == 0.0 {
        return Err(val_err("eps must lie in (0, 1)"));
    }
    Ok(diag::heavy_threshold(k, eps))
}

/// Splitting constant and threshold for a subcritical load:
/// `(eps, ln_w_threshold)`.
#[pyfunction]
fn drift_constants(offered_load: f64, mu: usize, k: usize) -> PyResult<(f64, f64)> {
    if !(offered_load > 0.0 && offered_load < mu as f64) {
        return Err(val_err("load must be subcritical"));
    }
    let dc = diag::drift_constants(offered_load, mu, k);
    Ok((dc.eps, dc.ln_w_threshold))
}

fn graph_of(model: &Model) -> PyResult<&admissibility::RegionGraph> {
    match &model.inner {
        CoreModel::RegionGraph(g) => Ok(g),
        CoreModel::PairwiseDistance { .. } => {
            Err(val_err("occupancy-level checks need a region-graph model"))
        }
    }
}

/// Capture inequality on one occupancy state of a region graph:
/// `(in_heavy_set, holds, captured, required)`.
#[pyfunction]
fn capture_check(model: &Model, counts: Vec<u64>, eps: f64) -> PyResult<(bool, bool, f64, f64)> {
    let g = graph_of(model)?;
    if counts.len() != g.k() {
        return Err(val_err("one occupancy entry per region"));
    }
    let c = diag::weight_capture_check_graph(g, &counts, eps);
    Ok((c.in_heavy_set, c.holds, c.captured, c.required))
}

/// Drift bound on one occupancy state of a region graph:
/// `(in_heavy_set, holds, g, bound)`.
#[pyfunction]
fn drift_check(
    model: &Model,
    counts: Vec<u64>,
    offered_load: f64,
    eps: f64,
) -> PyResult<(bool, bool, f64, f64)> {
    let g = graph_of(model)?;
    if counts.len() != g.k() {
        return Err(val_err("one occupancy entry per region"));
    }
    let c = diag::drift_bound_check_graph(g, &counts, offered_load, eps);
    Ok((c.in_heavy_set, c.holds, c.g, c.bound))
}

/// Exact one-step drift of the entropy functional on a region graph, for
/// finite-support arrivals given as a JSON arrival description.
#[pyfunction]
fn exact_v_drift(model: &Model, counts: Vec<u64>, arrivals_json: &str) -> PyResult<f64> {
    let g = graph_of(model)?;
    if counts.len() != g.k() {
        return Err(val_err("one occupancy entry per region"));
    }
    let arrivals: ArrivalSpec = serde_json::from_str(arrivals_json).map_err(val_err)?;
    arrivals.validate().map_err(val_err)?;
    diag::exact_v_drift_graph(g, &counts, &arrivals).map_err(val_err)
}

/// Run the oracle battery; returns `(name, passed, detail)` rows.
#[pyfunction]
fn oracle_battery(n_max: usize, trials: usize, seed: u64) -> Vec<(String, bool, String)> {
    run_battery(n_max, trials, seed)
        .into_iter()
        .map(|o| (o.name.to_string(), o.passed, o.detail))
        .collect()
}

#[pymodule]
fn admsched_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Model>()?;
    m.add_class::<Partition>()?;
    m.add_class::<Sampler>()?;
    m.add_class::<Simulation>()?;
    m.add_function(wrap_pyfunction!(circ_distance, m)?)?;
    m.add_function(wrap_pyfunction!(mu_for_radius, m)?)?;
    m.add_function(wrap_pyfunction!(count_admissible_subsets, m)?)?;
    m.add_function(wrap_pyfunction!(removal_marginals, m)?)?;
    m.add_function(wrap_pyfunction!(region_counts, m)?)?;
    m.add_function(wrap_pyfunction!(lyapunov_v, m)?)?;
    m.add_function(wrap_pyfunction!(j_value, m)?)?;
    m.add_function(wrap_pyfunction!(max_guaranteed_ln_weight, m)?)?;
    m.add_function(wrap_pyfunction!(heavy_threshold, m)?)?;
    m.add_function(wrap_pyfunction!(drift_constants, m)?)?;
    m.add_function(wrap_pyfunction!(capture_check, m)?)?;
    m.add_function(wrap_pyfunction!(drift_check, m)?)?;
    m.add_function(wrap_pyfunction!(exact_v_drift, m)?)?;
    m.add_function(wrap_pyfunction!(oracle_battery, m)?)?;
    Ok(())
}
