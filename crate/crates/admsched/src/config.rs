//! JSON descriptions of runs and sweeps.
//!
//! A run config pins one model, scheduler, arrival law, seed and horizon; a
//! sweep config repeats a base run over a grid of batch rates and seeds.
//! Everything deserializes with `deny_unknown_fields` so typos fail loudly.

use crate::admissibility::{Model, ModelError};
use crate::geometry::{GeometryError, Partition};
use crate::scheduling::SchedulerSpec;
use crate::traffic::{ArrivalSpec, BatchCountDist, TrafficError};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot parse {path}: {source}")]
    Parse {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Traffic(#[from] TrafficError),
    #[error("{0}")]
    BadValue(String),
}

/// Interference model selector.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelSpec {
    /// Particles on the circle, conflicts below distance `r`.
    Pairwise { r: f64 },
    /// Abstract conflict graph on `k` regions.
    RegionGraph { k: usize, edges: Vec<(usize, usize)> },
}

impl ModelSpec {
    pub fn build(&self) -> Result<Model, ConfigError> {
        match self {
            ModelSpec::Pairwise { r } => Ok(Model::pairwise(*r).map_err(ModelError::from)?),
            ModelSpec::RegionGraph { k, edges } => Ok(Model::region_graph(*k, edges)?),
        }
    }
}

fn default_thin() -> u64 {
    1
}

/// One simulation run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelSpec,
    /// Region count for diagnostics; defaults to the model's natural layout.
    #[serde(default)]
    pub partition_k: Option<usize>,
    pub scheduler: SchedulerSpec,
    pub arrivals: ArrivalSpec,
    pub slots: u64,
    pub seed: u64,
    /// Keep every nth trace record (empty slots and the last are always kept).
    #[serde(default = "default_thin")]
    pub thin: u64,
    /// Emit a diagnostics row every nth slot; 0 disables the diagnostics file.
    #[serde(default)]
    pub diagnostics_every: u64,
    /// File stem for the output CSVs.
    #[serde(default)]
    pub output_stem: Option<String>,
}

/// Validated building blocks of a run.
pub struct RunParts {
    pub model: Model,
    pub partition: Partition,
    pub scheduler: SchedulerSpec,
    pub arrivals: ArrivalSpec,
}

impl RunConfig {
    pub fn build(&self) -> Result<RunParts, ConfigError> {
        if self.slots == 0 {
            return Err(ConfigError::BadValue("slots must be positive".into()));
        }
        if self.thin == 0 {
            return Err(ConfigError::BadValue("thin must be positive".into()));
        }
        let model = self.model.build()?;
        let partition = model.default_partition(self.partition_k)?;
        self.arrivals.validate()?;
        if let SchedulerSpec::PriorityGreedy { zeta } = self.scheduler {
            if !(0.0..1.0).contains(&zeta) {
                return Err(ConfigError::BadValue(format!(
                    "priority marker must lie in [0, 1), got {zeta}"
                )));
            }
        }
        Ok(RunParts {
            model,
            partition,
            scheduler: self.scheduler.clone(),
            arrivals: self.arrivals.clone(),
        })
    }

    /// The same run with the batch rate replaced; only mean-parameterized
    /// batch-count laws can be swept.
    pub fn with_batch_rate(&self, lambda: f64) -> Result<RunConfig, ConfigError> {
        let batches = match &self.arrivals.batches {
            BatchCountDist::Poisson { .. } => BatchCountDist::Poisson { mean: lambda },
            BatchCountDist::Geometric { .. } => BatchCountDist::Geometric { mean: lambda },
            other => {
                return Err(ConfigError::BadValue(format!(
                    "sweep needs a mean-parameterized batch-count law, got {other:?}"
                )))
            }
        };
        let mut out = self.clone();
        out.arrivals = ArrivalSpec { batches, batch_size: self.arrivals.batch_size.clone() };
        Ok(out)
    }
}

/// A grid of runs over batch rates and seeds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub base: RunConfig,
    /// Batch rates to substitute into the base arrival law.
    pub lambdas: Vec<f64>,
    pub seeds: Vec<u64>,
    /// Run grid points on a thread pool; results are sorted either way.
    #[serde(default)]
    pub parallel: bool,
    /// Fraction of the horizon ignored before tail statistics start.
    #[serde(default = "default_tail_start")]
    pub tail_start: f64,
}

fn default_tail_start() -> f64 {
    0.5
}

impl SweepConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.lambdas.is_empty() || self.seeds.is_empty() {
            return Err(ConfigError::BadValue("sweep needs lambdas and seeds".into()));
        }
        if !(0.0..1.0).contains(&self.tail_start) {
            return Err(ConfigError::BadValue(format!(
                "tail_start must lie in [0, 1), got {}",
                self.tail_start
            )));
        }
        for &l in &self.lambdas {
            self.base.with_batch_rate(l)?.build()?;
        }
        Ok(())
    }
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|source| ConfigError::Io { path: path.to_owned(), source })?;
    serde_json::from_str(&text).map_err(|source| ConfigError::Parse { path: path.to_owned(), source })
}

pub fn load_run_config(path: &Path) -> Result<RunConfig, ConfigError> {
    let cfg: RunConfig = read_json(path)?;
    cfg.build()?;
    Ok(cfg)
}

pub fn load_sweep_config(path: &Path) -> Result<SweepConfig, ConfigError> {
    let cfg: SweepConfig = read_json(path)?;
    cfg.validate()?;
    Ok(cfg)
}

/// Where output files land: `ADMSCHED_OUTPUT_DIR`, unless a directory is
/// passed explicitly.
pub fn output_dir(explicit: Option<&Path>) -> PathBuf {
    if let Some(d) = explicit {
        return d.to_owned();
    }
    match std::env::var_os("ADMSCHED_OUTPUT_DIR") {
        Some(d) => PathBuf::from(d),
        None => PathBuf::from("."),
    }
}
