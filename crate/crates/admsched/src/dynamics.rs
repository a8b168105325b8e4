//! The discrete-time loop: each slot adds a batch of arrivals at uniform
//! locations, then the scheduler serves one admissible subset of the
//! post-arrival configuration and those particles leave.
//!
//! Arrival randomness and scheduling randomness live on separate seeded
//! streams, so swapping the scheduler never perturbs the traffic.

use crate::admissibility::{Configuration, Model};
use crate::rng::{stream_rng, Stream};
use crate::scheduling::SchedulerSpec;
use crate::stats::linear_fit;
use crate::traffic::{ArrivalSpec, TrafficError};
use rand_chacha::ChaCha8Rng;

/// State of the chain after one slot.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TraceRecord {
    /// Slot index, starting at 1.
    pub t: u64,
    /// Particles present after the slot.
    pub total: usize,
    /// Arrivals during the slot.
    pub arrived: usize,
    /// Departures during the slot.
    pub removed: usize,
    /// Whether the configuration emptied out.
    pub is_empty: bool,
}

/// A finished run: the thinned trace plus the closing state.
#[derive(Clone, Debug)]
pub struct RunResult {
    pub trace: Vec<TraceRecord>,
    pub final_config: Configuration,
    pub slots: u64,
    pub seed: u64,
    /// Slots after which the configuration was empty.
    pub empty_visits: u64,
}

/// The running chain.
pub struct Dynamics {
    model: Model,
    arrivals: ArrivalSpec,
    scheduler: SchedulerSpec,
    seed: u64,
    arrival_rng: ChaCha8Rng,
    scheduler_rng: ChaCha8Rng,
    config: Configuration,
    next_id: u64,
    t: u64,
    empty_visits: u64,
}

impl Dynamics {
    pub fn new(
        model: Model,
        arrivals: ArrivalSpec,
        scheduler: SchedulerSpec,
        seed: u64,
    ) -> Result<Dynamics, TrafficError> {
        Dynamics::from_initial(model, arrivals, scheduler, seed, Configuration::new())
    }

    pub fn from_initial(
        model: Model,
        arrivals: ArrivalSpec,
        scheduler: SchedulerSpec,
        seed: u64,
        initial: Configuration,
    ) -> Result<Dynamics, TrafficError> {
        arrivals.validate()?;
        let next_id = initial.particles().iter().map(|p| p.id + 1).max().unwrap_or(0);
        Ok(Dynamics {
            model,
            arrivals,
            scheduler,
            seed,
            arrival_rng: stream_rng(seed, Stream::Arrivals),
            scheduler_rng: stream_rng(seed, Stream::Scheduler),
            config: initial,
            next_id,
            t: 0,
            empty_visits: 0,
        })
    }

    pub fn config(&self) -> &Configuration {
        &self.config
    }

    pub fn model(&self) -> &Model {
        &self.model
    }

    pub fn t(&self) -> u64 {
        self.t
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn empty_visits(&self) -> u64 {
        self.empty_visits
    }

    pub fn next_id(&self) -> u64 {
        self.next_id
    }

    /// Advance one slot: arrivals land, one admissible subset leaves.
    pub fn step(&mut self) -> TraceRecord {
        let before = self.config.len();
        let arrivals = self.arrivals.sample_arrivals(&mut self.arrival_rng, &mut self.next_id);
        let arrived = arrivals.len();
        self.config.insert_many(&arrivals);
        let chosen = self.scheduler.choose(&self.model, &self.config, &mut self.scheduler_rng);
        let removed = chosen.len();
        self.config.remove_sorted_indices(&chosen);
        debug_assert_eq!(self.config.len(), before + arrived - removed);
        self.t += 1;
        let is_empty = self.config.is_empty();
        if is_empty {
            self.empty_visits += 1;
        }
        TraceRecord { t: self.t, total: self.config.len(), arrived, removed, is_empty }
    }

    /// Run `slots` slots, keeping every `thin`-th record plus every slot that
    /// ends empty and the final slot.
    pub fn run(&mut self, slots: u64, thin: u64) -> RunResult {
        assert!(thin >= 1, "thinning keeps every thin-th record");
        let mut trace = Vec::new();
        for _ in 0..slots {
            let rec = self.step();
            if rec.t % thin == 0 || rec.is_empty || rec.t == slots {
                trace.push(rec);
            }
        }
        RunResult {
            trace,
            final_config: self.config.clone(),
            slots,
            seed: self.seed,
            empty_visits: self.empty_visits,
        }
    }
}

/// Summary of the tail of a trace: least-squares slope and fit quality of
/// total versus slot, plus the mean level, over records with `t` past the
/// given fraction of the run.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TailMetrics {
    pub slope: f64,
    pub r_squared: f64,
    pub mean: f64,
    pub records: usize,
}

pub fn tail_metrics(trace: &[TraceRecord], slots: u64, start_fraction: f64) -> TailMetrics {
    let cut = (slots as f64 * start_fraction) as u64;
    let pts: Vec<(f64, f64)> =
        trace.iter().filter(|r| r.t > cut).map(|r| (r.t as f64, r.total as f64)).collect();
    let (slope, r_squared) = linear_fit(&pts);
    let mean = if pts.is_empty() {
        0.0
    } else {
        pts.iter().map(|p| p.1).sum::<f64>() / pts.len() as f64
    };
    TailMetrics { slope, r_squared, mean, records: pts.len() }
}
