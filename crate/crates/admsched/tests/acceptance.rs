//! Acceptance battery: ten end-to-end checks covering exact counting and
//! sampling, desk-scale trajectory reproduction, the stability boundary,
//! the capture and drift inequalities on heavy states, exact one-step drift
//! bookkeeping, partition validation, and the settling detector.
//!
//! Each check prints one `criterion NN PASS/FAIL` line (visible with
//! `--nocapture`; shown automatically on failure).  Slope and residual bands
//! marked as calibrated were frozen from pilot runs at the seeds used here;
//! the direction of every check is fixed independently of the pilots.

use std::collections::{BTreeMap, HashMap};
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use admsched::admissibility::{is_guaranteed, validate_partition, Configuration, Model, RegionGraph};
use admsched::cli::sweep_rows;
use admsched::config::{ModelSpec, RunConfig, SweepConfig};
use admsched::diagnostics::{
    drift_bound_check_graph, drift_constants, drift_g, exact_v_drift_circle, exact_v_drift_graph,
    j_value, lyapunov_v, region_counts, running_average, settling_spread,
    weight_capture_check_graph,
};
use admsched::dynamics::{tail_metrics, Dynamics, TailMetrics};
use admsched::geometry::{build_partition, circ_distance, radius_profile};
use admsched::rng::{stream_rng, Stream};
use admsched::sampler::{
    brute_force_enumerate, count_admissible_subsets, per_region_marginals,
    region_graph_region_marginals, region_set_weights, removal_marginals, SubsetSampler,
};
use admsched::scheduling::SchedulerSpec;
use admsched::stats::{chi_square_critical, chi_square_stat, ks_distance_uniform};
use admsched::traffic::{ArrivalSpec, BatchCountDist, BatchSizeDist, CatEntry};
use num_bigint::BigUint;
use rand::Rng;

fn report(criterion: u32, ok: bool, detail: &str) {
    println!("criterion {criterion:02} {} - {detail}", if ok { "PASS" } else { "FAIL" });
    assert!(ok, "criterion {criterion:02} failed: {detail}");
}

const FIGURE_SLOTS: u64 = 200_000;
const FIGURE_SEEDS: [u64; 5] = [1, 2, 3, 4, 5];
const FIGURE_RATE: f64 = 1.95;
const RADIUS: f64 = 0.49;
const ZETA: f64 = 0.5;
const TRACE_THIN: u64 = 100;
const J_SAMPLE_EVERY: u64 = 50;

// Calibrated trajectory bands.  Pilot values at these seeds: random-scheduler
// seed-mean tail slope +0.0007 (per-seed extremes within +-0.0036) with tail
// means near 2 * 10^3; priority-scheduler mean slope 0.019 with fit quality
// at least 0.96; sweep slopes at rates 2.2 and 2.4 exceed 0.2 with fit
// quality above 0.99.
const STABLE_SLOPE_CAP: f64 = 0.002;
const UNSTABLE_SLOPE_FLOOR: f64 = 0.005;
const FIT_QUALITY_FLOOR: f64 = 0.9;
const BOUNDED_TAIL_MEAN: f64 = 5_000.0;

struct FigureRun {
    seed: u64,
    tail: TailMetrics,
    empty_visits: u64,
    final_locs: Vec<f64>,
    /// Running average of the log-sum functional, sampled every
    /// `J_SAMPLE_EVERY` slots.
    j_running: Vec<f64>,
}

fn figure_run(scheduler: SchedulerSpec, seed: u64) -> FigureRun {
    let model = Model::pairwise(RADIUS).unwrap();
    let partition = model.default_partition(None).unwrap();
    let mut dynamics =
        Dynamics::new(model, ArrivalSpec::poisson_singletons(FIGURE_RATE), scheduler, seed)
            .unwrap();
    let mut trace = Vec::new();
    let mut j_samples = Vec::new();
    for _ in 0..FIGURE_SLOTS {
        let rec = dynamics.step();
        if rec.t % TRACE_THIN == 0 || rec.is_empty || rec.t == FIGURE_SLOTS {
            trace.push(rec);
        }
        if rec.t % J_SAMPLE_EVERY == 0 {
            j_samples.push(j_value(&region_counts(dynamics.config(), &partition)));
        }
    }
    FigureRun {
        seed,
        tail: tail_metrics(&trace, FIGURE_SLOTS, 0.5),
        empty_visits: dynamics.empty_visits(),
        final_locs: dynamics.config().locations(),
        j_running: running_average(&j_samples),
    }
}

/// The ten trajectory runs shared by criteria 3, 4 and 10.
fn figure_runs() -> &'static (Vec<FigureRun>, Vec<FigureRun>) {
    static RUNS: OnceLock<(Vec<FigureRun>, Vec<FigureRun>)> = OnceLock::new();
    RUNS.get_or_init(|| {
        let random = FIGURE_SEEDS
            .iter()
            .map(|&s| figure_run(SchedulerSpec::RandomAdmissible, s))
            .collect();
        let priority = FIGURE_SEEDS
            .iter()
            .map(|&s| figure_run(SchedulerSpec::PriorityGreedy { zeta: ZETA }, s))
            .collect();
        (random, priority)
    })
}

#[test]
fn c01_counts_and_marginals_match_enumeration_exactly() {
    let start = Instant::now();
    let radii = [0.2, 0.33, 0.49, 0.5];
    let mut rng = stream_rng(101, Stream::Aux);
    let mut instances = 0u32;
    for n in 1..=14usize {
        for &r in &radii {
            for _ in 0..4 {
                let locs: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
                let y = Configuration::from_locations(&locs);
                let model = Model::pairwise(r).unwrap();
                let subsets = brute_force_enumerate(&model, &y, 14).unwrap();
                let counts = count_admissible_subsets(&model, &y);
                assert_eq!(
                    counts.total,
                    BigUint::from(subsets.len()),
                    "total mismatch at n = {n}, r = {r}"
                );
                let mut enum_by_size = vec![0u64; counts.by_size.len()];
                for s in &subsets {
                    enum_by_size[s.len()] += 1;
                }
                for (size, (have, want)) in counts.by_size.iter().zip(&enum_by_size).enumerate() {
                    assert_eq!(*have, BigUint::from(*want), "size-{size} count at n = {n}, r = {r}");
                }
                let marginals = removal_marginals(&model, &y);
                let mut membership = vec![0u64; n];
                for s in &subsets {
                    for &i in s {
                        membership[i] += 1;
                    }
                }
                for i in 0..n {
                    assert_eq!(
                        marginals.containing[i],
                        BigUint::from(membership[i]),
                        "marginal of particle {i} at n = {n}, r = {r}"
                    );
                }
                instances += 1;
            }
        }
    }
    let elapsed = start.elapsed();
    let ok = instances >= 200 && elapsed < Duration::from_secs(60);
    report(
        1,
        ok,
        &format!("totals and per-particle marginals exact on {instances} instances ({elapsed:.1?})"),
    );
}

#[test]
fn c02_sampler_is_uniform_on_a_fixed_instance() {
    let start = Instant::now();
    let locs = [0.03, 0.12, 0.25, 0.38, 0.51, 0.63, 0.77, 0.9];
    let model = Model::pairwise(0.3).unwrap();
    let y = Configuration::from_locations(&locs);
    let subsets = brute_force_enumerate(&model, &y, 8).unwrap();
    let cells = subsets.len();
    let index: HashMap<Vec<usize>, usize> =
        subsets.iter().enumerate().map(|(i, s)| (s.clone(), i)).collect();

    let sampler = SubsetSampler::new(&model, &y);
    assert_eq!(sampler.total(), BigUint::from(cells));
    let mut rng = stream_rng(7, Stream::Scheduler);
    const DRAWS: usize = 1_000_000;
    let mut observed = vec![0u64; cells];
    for _ in 0..DRAWS {
        let mut s = sampler.sample(&mut rng);
        s.sort_unstable();
        observed[*index.get(&s).expect("drawn subset must be admissible")] += 1;
    }

    let expected = vec![DRAWS as f64 / cells as f64; cells];
    let statistic = chi_square_stat(&observed, &expected);
    let critical = chi_square_critical(cells - 1, 1e-3);
    let elapsed = start.elapsed();
    let ok = statistic < critical && elapsed < Duration::from_secs(120);
    report(
        2,
        ok,
        &format!(
            "chi-square {statistic:.1} < {critical:.1} over {cells} subsets, 10^6 draws ({elapsed:.1?})"
        ),
    );
}

#[test]
fn c03_schedulers_split_into_settling_and_linear_growth() {
    let start = Instant::now();
    let (random, priority) = figure_runs();

    let mean_random_slope =
        random.iter().map(|r| r.tail.slope).sum::<f64>() / random.len() as f64;
    let all_bounded = random
        .iter()
        .all(|r| r.empty_visits >= 1 || r.tail.mean <= BOUNDED_TAIL_MEAN);
    let random_ok = mean_random_slope.abs() <= STABLE_SLOPE_CAP && all_bounded;

    let mean_priority_slope =
        priority.iter().map(|r| r.tail.slope).sum::<f64>() / priority.len() as f64;
    let min_fit = priority.iter().map(|r| r.tail.r_squared).fold(f64::INFINITY, f64::min);
    let priority_ok = mean_priority_slope >= UNSTABLE_SLOPE_FLOOR && min_fit >= FIT_QUALITY_FLOOR;

    let elapsed = start.elapsed();
    let ok = random_ok && priority_ok && elapsed < Duration::from_secs(600);
    report(
        3,
        ok,
        &format!(
            "random mean slope {mean_random_slope:+.5} (cap {STABLE_SLOPE_CAP}), tails bounded: {all_bounded}; \
             priority mean slope {mean_priority_slope:+.4} (floor {UNSTABLE_SLOPE_FLOOR}), min fit {min_fit:.3} ({elapsed:.1?})"
        ),
    );
}

#[test]
fn c04_terminal_layouts_are_uniform_versus_clustered() {
    let (random, priority) = figure_runs();

    let ks: Vec<f64> = random.iter().map(|r| ks_distance_uniform(&r.final_locs)).collect();
    let mean_ks = ks.iter().sum::<f64>() / ks.len() as f64;
    let random_ok = mean_ks <= 0.1;

    let (in_window, total) = priority.iter().fold((0usize, 0usize), |(w, t), run| {
        let w2 = run.final_locs.iter().filter(|&&x| (0.45..0.52).contains(&x)).count();
        (w + w2, t + run.final_locs.len())
    });
    let fraction = in_window as f64 / total as f64;
    let priority_ok = fraction >= 0.5;

    let ok = random_ok && priority_ok;
    report(
        4,
        ok,
        &format!(
            "random mean KS distance {mean_ks:.4} (cap 0.1); priority fraction in [0.45, 0.52) = {fraction:.3} of {total} (floor 0.5)"
        ),
    );
}

#[test]
fn c05_sweep_splits_the_stability_boundary_at_rate_two() {
    let start = Instant::now();
    let base = RunConfig {
        model: ModelSpec::Pairwise { r: RADIUS },
        partition_k: None,
        scheduler: SchedulerSpec::RandomAdmissible,
        arrivals: ArrivalSpec::poisson_singletons(1.0),
        slots: 100_000,
        seed: 0,
        thin: TRACE_THIN,
        diagnostics_every: 0,
        output_stem: None,
    };
    let cfg = SweepConfig {
        base,
        lambdas: vec![1.6, 1.8, 2.2, 2.4],
        seeds: vec![1, 2, 3],
        parallel: false,
        tail_start: 0.5,
    };
    cfg.validate().unwrap();
    let rows = sweep_rows(&cfg).unwrap();
    assert_eq!(rows.len(), 12);

    let mut detail = String::new();
    let mut ok = true;
    for &lambda in &cfg.lambdas {
        let group: Vec<_> = rows.iter().filter(|row| row.lambda == lambda).collect();
        assert_eq!(group.len(), 3);
        let mean_slope = group.iter().map(|row| row.tail_slope).sum::<f64>() / group.len() as f64;
        let passed = if lambda < 2.0 {
            mean_slope.abs() <= STABLE_SLOPE_CAP
                && group
                    .iter()
                    .all(|row| row.empty_visits >= 1 || row.tail_mean <= BOUNDED_TAIL_MEAN)
        } else {
            mean_slope >= UNSTABLE_SLOPE_FLOOR
                && group.iter().all(|row| row.r_squared >= FIT_QUALITY_FLOOR)
        };
        ok &= passed;
        detail.push_str(&format!("rate {lambda}: mean slope {mean_slope:+.4} {}; ", if passed { "ok" } else { "BAD" }));
    }
    let elapsed = start.elapsed();
    ok &= elapsed < Duration::from_secs(900);
    detail.push_str(&format!("({elapsed:.1?})"));
    report(5, ok, &detail);
}

fn heavy_graphs() -> Vec<RegionGraph> {
    vec![
        RegionGraph::new(2, &[]).unwrap(),
        RegionGraph::new(4, &[(0, 2), (1, 3)]).unwrap(),
        RegionGraph::new(4, &[(0, 2), (1, 2), (1, 3)]).unwrap(),
        RegionGraph::new(6, &[(0, 3), (1, 4), (2, 5)]).unwrap(),
    ]
}

/// 100 random occupancy states far beyond simulation scale, all inside the
/// heavy set at the light load used by criteria 6 and 7.
fn heavy_states() -> Vec<(RegionGraph, Vec<u64>)> {
    let mut rng = stream_rng(606, Stream::Aux);
    let mut out = Vec::new();
    for g in heavy_graphs() {
        for _ in 0..25 {
            let counts: Vec<u64> =
                (0..g.k()).map(|_| rng.random_range(100_000..=1_000_000_000u64)).collect();
            out.push((g.clone(), counts));
        }
    }
    out
}

const HEAVY_LOAD_FACTOR: f64 = 0.2;

#[test]
fn c06_capture_inequality_and_exact_region_set_identities() {
    // the capture inequality on heavy states, with closed-form set weights
    let states = heavy_states();
    assert_eq!(states.len(), 100);
    let mut worst_margin = f64::INFINITY;
    for (g, counts) in &states {
        let dc = drift_constants(HEAVY_LOAD_FACTOR * g.mu() as f64, g.mu(), g.k());
        let check = weight_capture_check_graph(g, counts, dc.eps);
        assert!(check.in_heavy_set, "state escaped the heavy set: {counts:?}");
        assert!(
            check.holds,
            "capture failed on {counts:?}: {} < {}",
            check.captured, check.required
        );
        worst_margin = worst_margin.min(check.captured - check.required);
    }

    // exact set identities on enumerable circle instances, verified against
    // an enumeration built from nothing but pairwise distances
    let radii = [0.49, 0.33, 0.2];
    let mut rng = stream_rng(616, Stream::Aux);
    let mut sets_checked = 0u32;
    let mut equalities = 0u32;
    for instance in 0..24 {
        let r = radii[instance % radii.len()];
        let model = Model::pairwise(r).unwrap();
        let p = model.default_partition(None).unwrap();
        let n = rng.random_range(3..=10usize);
        let mut locs: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
        if instance % 3 == 0 {
            // cram three particles into one region so some counts exceed one
            let (lo, hi) = p.region_interval(p.region_of(locs[0]));
            locs[1] = lo + 0.25 * (hi - lo);
            locs[2] = lo + 0.75 * (hi - lo);
        }
        let y = Configuration::from_locations(&locs);
        let counts = region_counts(&y, &p);
        let weights = region_set_weights(&model, &y, &p, 10).unwrap();

        let profile = radius_profile(r).unwrap();
        let ps = y.particles();
        let mut buckets: BTreeMap<Vec<usize>, u64> = BTreeMap::new();
        let mut total = 0u64;
        for mask in 0u32..(1u32 << n) {
            let idx: Vec<usize> = (0..n).filter(|i| mask >> i & 1 == 1).collect();
            let pairwise_ok = idx.iter().enumerate().all(|(a, &i)| {
                idx[a + 1..].iter().all(|&j| circ_distance(ps[i].loc, ps[j].loc) >= r)
            });
            if !pairwise_ok || Some(idx.len()) == profile.forbidden_size {
                continue;
            }
            let mut regions: Vec<usize> = idx.iter().map(|&i| p.region_of(ps[i].loc)).collect();
            regions.sort_unstable();
            debug_assert!(regions.windows(2).all(|w| w[0] != w[1]), "one particle per region");
            *buckets.entry(regions).or_insert(0) += 1;
            total += 1;
        }

        assert_eq!(weights.total, BigUint::from(total), "subset totals at r = {r}");
        assert_eq!(weights.entries.len(), buckets.len(), "occupied set families at r = {r}");
        for (s, v) in &buckets {
            let v_s = BigUint::from(*v);
            assert_eq!(weights.weight(s), v_s, "v_S mismatch on {s:?} at r = {r}");
            let w_s: BigUint = s.iter().map(|&k| BigUint::from(counts[k])).product();
            assert!(v_s <= w_s, "v_S exceeds the count product on {s:?}");
            if is_guaranteed(s, &p, &model) {
                assert_eq!(v_s, w_s, "guaranteed occupied set {s:?} must fill its product");
                equalities += 1;
            }
            sets_checked += 1;
        }
    }

    let ok = worst_margin >= 0.0 && sets_checked > 0 && equalities > 0;
    report(
        6,
        ok,
        &format!(
            "capture holds on 100 heavy states (worst margin {worst_margin:.2} nats); \
             {sets_checked} region sets exact, {equalities} guaranteed equalities"
        ),
    );
}

#[test]
fn c07_drift_is_dominated_by_the_log_sum_on_heavy_states() {
    let states = heavy_states();
    let mut worst_margin = f64::INFINITY;
    for (g, counts) in &states {
        let load = HEAVY_LOAD_FACTOR * g.mu() as f64;
        let dc = drift_constants(load, g.mu(), g.k());
        let check = drift_bound_check_graph(g, counts, load, dc.eps);
        assert!(check.in_heavy_set, "state escaped the heavy set: {counts:?}");
        assert!(check.holds, "drift bound failed on {counts:?}: {} > {}", check.g, check.bound);
        worst_margin = worst_margin.min(check.bound - check.g);
    }
    report(
        7,
        worst_margin >= 0.0,
        &format!("G below the log-sum bound on 100 heavy states (worst margin {worst_margin:.2} nats)"),
    );
}

// Calibrated residual band for criterion 8; the observed band is reported.
const RESIDUAL_CAP: f64 = 10.0;

#[test]
fn c08_exact_drift_decomposes_into_g_plus_a_bounded_residual() {
    let arrivals = ArrivalSpec {
        batches: BatchCountDist::Categorical {
            entries: vec![
                CatEntry { value: 0, weight: 0.3 },
                CatEntry { value: 1, weight: 0.4 },
                CatEntry { value: 2, weight: 0.3 },
            ],
        },
        batch_size: BatchSizeDist::Categorical {
            entries: vec![CatEntry { value: 1, weight: 0.6 }, CatEntry { value: 2, weight: 0.4 }],
        },
    };
    let mut residuals: Vec<f64> = Vec::new();

    // twenty tiny circle instances under full enumeration
    let mut rng = stream_rng(808, Stream::Aux);
    for instance in 0..20 {
        let (r, k, mu) = if instance % 2 == 0 { (0.49, 4, 2) } else { (0.33, 6, 3) };
        let model = Model::pairwise(r).unwrap();
        let p = admsched::geometry::Partition::uniform(k, mu).unwrap();
        let n = rng.random_range(2..=8usize);
        let locs: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
        let y = Configuration::from_locations(&locs);
        let counts = region_counts(&y, &p);
        let dv = exact_v_drift_circle(&model, &y, &p, &arrivals, 10).unwrap();
        let served = per_region_marginals(&removal_marginals(&model, &y), &y, &p);
        let means = vec![arrivals.expected_per_region(k); k];
        residuals.push(dv - drift_g(&counts, &means, &served));
    }

    // the same bookkeeping as occupancy scales up by powers of ten
    let g4 = RegionGraph::new(4, &[(0, 2), (1, 3)]).unwrap();
    let mut scaled: Vec<f64> = Vec::new();
    let mut v_prev = f64::NEG_INFINITY;
    for s in 0..=5u32 {
        let factor = 10u64.pow(s);
        let counts: Vec<u64> = [3u64, 5, 2, 4].iter().map(|c| c * factor).collect();
        let v = lyapunov_v(&counts);
        assert!(v > v_prev, "scaling must increase V");
        v_prev = v;
        let dv = exact_v_drift_graph(&g4, &counts, &arrivals).unwrap();
        let served = region_graph_region_marginals(&g4, &counts);
        let means = vec![arrivals.expected_per_region(4); 4];
        scaled.push(dv - drift_g(&counts, &means, &served));
    }

    let all: Vec<f64> = residuals.iter().chain(&scaled).copied().collect();
    let lo = all.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = all.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let ok = all.iter().all(|v| v.abs() <= RESIDUAL_CAP);
    report(
        8,
        ok,
        &format!(
            "residual band [{lo:+.3}, {hi:+.3}] within +-{RESIDUAL_CAP} over 20 instances \
             and a 10^5-fold occupancy scale-up (scaled tail {:+.3})",
            scaled[scaled.len() - 1]
        ),
    );
}

#[test]
fn c09_partitions_validate_and_integer_reciprocal_radii_forbid_full_packings() {
    let mut detail = String::new();
    let mut ok = true;
    for r in [0.3, 0.49, 0.5] {
        let model = Model::pairwise(r).unwrap();
        let p = build_partition(r, None).unwrap();
        let rep = validate_partition(&p, &model);
        ok &= rep.passed();
        detail.push_str(&format!("r = {r}: K = {} {}; ", p.k(), if rep.passed() { "ok" } else { "BAD" }));
        if !rep.passed() {
            println!("{rep}");
        }
    }

    // an exact reciprocal loses the full packing size outright
    let profile = radius_profile(0.5).unwrap();
    ok &= profile.mu == 1 && profile.forbidden_size == Some(2);
    let half = Model::pairwise(0.5).unwrap();
    ok &= half.max_admissible_size() == 1 && half.forbidden_size() == Some(2);
    let pair = Configuration::from_locations(&[0.0, 0.5]);
    let ps = pair.particles().to_vec();
    ok &= half.is_admissible(&[ps[0]]);
    ok &= !half.is_admissible(&ps);
    // while a nearby non-reciprocal radius keeps it
    let near = Model::pairwise(0.49).unwrap();
    ok &= near.max_admissible_size() == 2 && near.forbidden_size().is_none();
    ok &= near.is_admissible(&ps);
    // and the quarter circle forbids exactly the equal 4-spacing
    let quarter = Model::pairwise(0.25).unwrap();
    let four = Configuration::from_locations(&[0.0, 0.25, 0.5, 0.75]);
    ok &= quarter.max_admissible_size() == 3 && quarter.forbidden_size() == Some(4);
    ok &= !quarter.is_admissible(four.particles());
    ok &= quarter.is_admissible(&four.particles()[..3]);
    detail.push_str("reciprocal radii 1/2 and 1/4 forbid sizes 2 and 4");
    report(9, ok, &detail);
}

#[test]
fn c10_running_average_of_the_log_sum_settles_on_stable_runs() {
    let (random, _) = figure_runs();
    let mut worst_ratio: f64 = 0.0;
    let mut detail = String::new();
    for run in random {
        let (spread, level) = settling_spread(&run.j_running, 0.25);
        let ratio = spread / level.abs().max(f64::MIN_POSITIVE);
        worst_ratio = worst_ratio.max(ratio);
        detail.push_str(&format!("seed {}: {:.1}%; ", run.seed, 100.0 * ratio));
    }
    let ok = worst_ratio <= 0.10;
    detail.push_str("(cap 10% of level)");
    report(10, ok, &detail);
}
