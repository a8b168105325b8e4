//! Slot scheduling disciplines: the uniform-random rule the model analyses,
//! and a deterministic priority-greedy rule to compare it against.

use crate::admissibility::{Configuration, Model, Particle};
use crate::geometry::circ_distance;
use crate::sampler::SubsetSampler;
use rand::Rng;
use serde::{Deserialize, Serialize};

/// Which rule picks the served subset each slot.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SchedulerSpec {
    /// Draw uniformly among all admissible subsets of the configuration.
    RandomAdmissible,
    /// Greedy maximal packing in priority order: particles at or after the
    /// marker `zeta` go first, wrapping around the circle.
    PriorityGreedy { zeta: f64 },
}

impl SchedulerSpec {
    /// Serve one slot; returns ascending particle indices into `y`.
    pub fn choose<R: Rng>(&self, model: &Model, y: &Configuration, rng: &mut R) -> Vec<usize> {
        match self {
            SchedulerSpec::RandomAdmissible => random_admissible_step(model, y, rng),
            SchedulerSpec::PriorityGreedy { zeta } => priority_greedy_step(model, y, *zeta),
        }
    }
}

/// One uniform draw over all admissible subsets.
pub fn random_admissible_step<R: Rng>(
    model: &Model,
    y: &Configuration,
    rng: &mut R,
) -> Vec<usize> {
    SubsetSampler::new(model, y).sample(rng)
}

/// Greedy maximal admissible set in priority order.  Priority rotates the
/// location-sorted configuration to start at the first particle at or past
/// `zeta`; each particle is kept when it stays compatible with everything
/// already kept.  Fully deterministic.
pub fn priority_greedy_step(model: &Model, y: &Configuration, zeta: f64) -> Vec<usize> {
    assert!((0.0..1.0).contains(&zeta), "priority marker must lie on the circle");
    let ps = y.particles();
    let n = ps.len();
    let start = ps.partition_point(|p| p.loc < zeta);
    let mut chosen: Vec<usize> = Vec::new();
    let mu = model.max_admissible_size();
    for step in 0..n {
        if chosen.len() == mu {
            break;
        }
        let i = (start + step) % n;
        if compatible(model, ps, &chosen, i) {
            chosen.push(i);
        }
    }
    chosen.sort_unstable();
    chosen
}

/// Whether adding `ps[i]` keeps the chosen set admissible.  Incremental:
/// the chosen set is admissible already, so only cross terms and the
/// forbidden size need checking.
fn compatible(model: &Model, ps: &[Particle], chosen: &[usize], i: usize) -> bool {
    if let Some(f) = model.forbidden_size() {
        if chosen.len() + 1 == f {
            return false;
        }
    }
    match model {
        Model::PairwiseDistance { r, .. } => {
            chosen.iter().all(|&j| circ_distance(ps[j].loc, ps[i].loc) >= *r)
        }
        Model::RegionGraph(g) => {
            let reg = g.region_of(ps[i].loc);
            chosen.iter().all(|&j| {
                let other = g.region_of(ps[j].loc);
                other != reg && !g.adjacent(other, reg)
            })
        }
    }
}
