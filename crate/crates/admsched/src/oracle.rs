//! Self-check battery: exact counts against explicit enumeration, draw
//! uniformity, marginal identities and partition structure.  The `oracle`
//! subcommand runs it; tests reuse pieces of it.

use crate::admissibility::{validate_partition, Configuration, Model};
use crate::rng::{stream_rng, Stream};
use crate::sampler::{brute_force_enumerate, count_admissible_subsets, removal_marginals, SubsetSampler};
use crate::stats::{chi_square_critical, chi_square_stat};
use num_bigint::BigUint;
use num_traits::Zero;
use rand::Rng;
use std::collections::HashMap;

#[derive(Clone, Debug)]
pub struct OracleOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

const RADII: [f64; 5] = [0.11, 0.2, 0.33, 0.49, 0.5];

fn graph_models() -> Vec<Model> {
    vec![
        Model::region_graph(2, &[]).unwrap(),
        Model::region_graph(4, &[(0, 2), (1, 3)]).unwrap(),
        Model::region_graph(4, &[(0, 2), (1, 2), (1, 3)]).unwrap(),
        Model::region_graph(6, &[(0, 3), (1, 4), (2, 5)]).unwrap(),
    ]
}

fn random_config<R: Rng>(n: usize, rng: &mut R) -> Configuration {
    let locs: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
    Configuration::from_locations(&locs)
}

/// Counts from the dynamic-programming tables against explicit enumeration,
/// per subset size, over random instances of every model family.
fn check_counts(n_max: usize, seed: u64) -> OracleOutcome {
    let mut rng = stream_rng(seed, Stream::Aux);
    let mut instances = 0usize;
    let mut models: Vec<Model> = RADII.iter().map(|&r| Model::pairwise(r).unwrap()).collect();
    models.extend(graph_models());
    for model in &models {
        for n in 0..=n_max {
            for _ in 0..4 {
                let y = random_config(n, &mut rng);
                let subsets = match brute_force_enumerate(model, &y, n_max) {
                    Ok(s) => s,
                    Err(_) => continue,
                };
                let counts = count_admissible_subsets(model, &y);
                let mut by_size = vec![0u64; counts.by_size.len()];
                for s in &subsets {
                    by_size[s.len()] += 1;
                }
                for (size, want) in by_size.iter().enumerate() {
                    if counts.by_size[size] != BigUint::from(*want) {
                        return OracleOutcome {
                            name: "counts-match-enumeration",
                            passed: false,
                            detail: format!(
                                "{model:?}, n = {n}: size {size} counted {} vs {want}",
                                counts.by_size[size]
                            ),
                        };
                    }
                }
                instances += 1;
            }
        }
    }
    OracleOutcome {
        name: "counts-match-enumeration",
        passed: true,
        detail: format!("{instances} instances agree"),
    }
}

/// Per-particle membership counts must sum to the size-weighted subset count.
fn check_marginal_identity(n_max: usize, seed: u64) -> OracleOutcome {
    let mut rng = stream_rng(seed ^ 0x5a5a, Stream::Aux);
    let mut instances = 0usize;
    let mut models: Vec<Model> = RADII.iter().map(|&r| Model::pairwise(r).unwrap()).collect();
    models.extend(graph_models());
    for model in &models {
        for n in [1, n_max / 2 + 1, n_max] {
            let y = random_config(n, &mut rng);
            let m = removal_marginals(model, &y);
            let lhs: BigUint = m.containing.iter().sum();
            let counts = count_admissible_subsets(model, &y);
            let mut rhs = BigUint::zero();
            for (size, c) in counts.by_size.iter().enumerate() {
                rhs += c * size;
            }
            if lhs != rhs {
                return OracleOutcome {
                    name: "marginal-identity",
                    passed: false,
                    detail: format!("{model:?}, n = {n}: sum {lhs} vs {rhs}"),
                };
            }
            instances += 1;
        }
    }
    OracleOutcome {
        name: "marginal-identity",
        passed: true,
        detail: format!("{instances} instances satisfy the size identity"),
    }
}

/// Chi-square test of draw uniformity over all admissible subsets.
fn check_uniformity(trials: usize, seed: u64) -> OracleOutcome {
    let model = Model::pairwise(0.3).unwrap();
    let mut rng = stream_rng(seed ^ 0xface, Stream::Aux);
    let y = random_config(8, &mut rng);
    let subsets = brute_force_enumerate(&model, &y, 8).unwrap();
    let cells = subsets.len();
    let sampler = SubsetSampler::new(&model, &y);
    let mut hits: HashMap<Vec<usize>, u64> = HashMap::new();
    for _ in 0..trials {
        *hits.entry(sampler.sample(&mut rng)).or_insert(0) += 1;
    }
    if hits.len() > cells {
        return OracleOutcome {
            name: "draw-uniformity",
            passed: false,
            detail: format!("drew {} distinct subsets, enumeration has {cells}", hits.len()),
        };
    }
    let expected = vec![trials as f64 / cells as f64; cells];
    let observed: Vec<u64> = subsets.iter().map(|s| *hits.get(s).unwrap_or(&0)).collect();
    let stat = chi_square_stat(&observed, &expected);
    let crit = chi_square_critical(cells - 1, 1e-3);
    OracleOutcome {
        name: "draw-uniformity",
        passed: stat <= crit,
        detail: format!(
            "chi-square {stat:.2} vs critical {crit:.2} ({cells} subsets, {trials} draws)"
        ),
    }
}

/// Structural checks of the interleaved partition for a few radii.
fn check_partitions() -> OracleOutcome {
    for r in [0.3, 0.49, 0.5] {
        let model = Model::pairwise(r).unwrap();
        let p = match model.default_partition(None) {
            Ok(p) => p,
            Err(e) => {
                return OracleOutcome {
                    name: "partition-structure",
                    passed: false,
                    detail: format!("r = {r}: {e}"),
                }
            }
        };
        let report = validate_partition(&p, &model);
        if !report.passed() {
            return OracleOutcome {
                name: "partition-structure",
                passed: false,
                detail: format!("r = {r}:\n{report}"),
            };
        }
    }
    OracleOutcome {
        name: "partition-structure",
        passed: true,
        detail: "interleaved layouts validate for r in {0.3, 0.49, 0.5}".into(),
    }
}

/// The whole battery; deterministic for a given seed.
pub fn run_battery(n_max: usize, trials: usize, seed: u64) -> Vec<OracleOutcome> {
    vec![
        check_counts(n_max, seed),
        check_marginal_identity(n_max, seed),
        check_uniformity(trials, seed),
        check_partitions(),
    ]
}
