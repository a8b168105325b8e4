//! Simulator and analysis toolkit for admissible-set scheduling of particles
//! on the unit circle.
//!
//! Particles queue at points of the circle `[0, 1)`. Each time slot a batch of
//! new particles arrives, and a scheduler removes one admissible subset of the
//! particles present: a set whose members are pairwise at circular distance at
//! least `r` (or, in the abstract variant, occupy pairwise non-conflicting
//! regions). The crate provides
//!
//! * exact counting and exact uniform sampling of admissible subsets,
//! * a random scheduler and a deterministic priority-greedy scheduler,
//! * the slotted queueing dynamics with reproducible seeded traffic,
//! * drift diagnostics (entropy-style potential, guaranteed-set weights,
//!   drift bounds) and stability detectors for long traces,
//! * a CLI for single runs, load sweeps, and a self-check oracle battery.

pub mod admissibility;
pub mod cli;
pub mod config;
pub mod diagnostics;
pub mod dynamics;
pub mod geometry;
pub mod oracle;
pub mod rng;
pub mod sampler;
pub mod scheduling;
pub mod stats;
pub mod traffic;
