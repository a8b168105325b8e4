//! Drift diagnostics over region occupancies.
//!
//! The stability argument tracks an entropy-like functional of the occupancy
//! vector and bounds its one-step drift.  This module computes the pieces:
//! the functional `V`, its logarithmic companion `J`, the first-order drift
//! surrogate `G`, the best guaranteed region-set weight `w`, and two
//! finite-state checks (`weight_capture_check`, `drift_bound_check`) that the
//! scheduler must satisfy on heavy states.  Exact and Monte-Carlo one-step
//! drifts close the loop against the surrogate.
//!
//! All weights live on log scale: the states of interest make `w` itself
//! overflow any fixed-width float long before the argument applies.

use crate::admissibility::{is_guaranteed, Configuration, Model, RegionGraph};
use crate::geometry::Partition;
use crate::sampler::{
    brute_force_enumerate, per_region_marginals, region_graph_region_marginals,
    region_graph_set_weights, region_set_weights, removal_marginals, RegionSetWeights,
    SamplerError, SubsetSampler,
};
use crate::stats::big_ratio_f64;
use crate::traffic::ArrivalSpec;
use rand::Rng;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum DiagnosticsError {
    #[error(transparent)]
    Sampler(#[from] SamplerError),
    #[error("exact drift needs finite-support batch and size laws")]
    InfiniteSupport,
}

fn ln_pos(x: u64) -> f64 {
    if x >= 1 {
        (x as f64).ln()
    } else {
        0.0
    }
}

/// Occupancy of each region.
pub fn region_counts(y: &Configuration, p: &Partition) -> Vec<u64> {
    let mut counts = vec![0u64; p.k()];
    for particle in y.particles() {
        counts[p.region_of(particle.loc)] += 1;
    }
    counts
}

/// `V(x) = sum over occupied regions of x_k ln x_k`.
pub fn lyapunov_v(counts: &[u64]) -> f64 {
    counts
        .iter()
        .map(|&x| if x >= 1 { x as f64 * (x as f64).ln() } else { 0.0 })
        .sum()
}

/// `J(x) = sum over occupied regions of ln x_k`.
pub fn j_value(counts: &[u64]) -> f64 {
    counts.iter().map(|&x| ln_pos(x)).sum()
}

/// `ln` of the occupancy product of one region set (empty regions count 1).
pub fn ln_set_weight(counts: &[u64], s: &[usize]) -> f64 {
    s.iter().map(|&k| ln_pos(counts[k])).sum()
}

/// First-order drift surrogate
/// `G(x) = sum over occupied regions of ln x_k (E[A_k] - p_k)`,
/// with per-region arrival means and service probabilities supplied by the
/// caller.
pub fn drift_g(counts: &[u64], arrival_means: &[f64], served: &[f64]) -> f64 {
    assert_eq!(counts.len(), arrival_means.len());
    assert_eq!(counts.len(), served.len());
    let mut g = 0.0;
    for ((&x, a), s) in counts.iter().zip(arrival_means).zip(served) {
        if x >= 1 {
            g += (x as f64).ln() * (a - s);
        }
    }
    g
}

/// Heaviest guaranteed region set of a state.
#[derive(Clone, Debug, PartialEq)]
pub struct GuaranteedWeight {
    /// Natural log of the best weight; 0 for the empty set.
    pub ln_w: f64,
    /// A maximizing set, trimmed to regions holding at least two particles.
    pub regions: Vec<usize>,
}

/// `ln w(x)`: the maximum of `ln_set_weight` over region sets that are
/// schedulable for every placement of their occupants.
pub fn max_guaranteed_ln_weight(counts: &[u64], p: &Partition, model: &Model) -> GuaranteedWeight {
    assert_eq!(counts.len(), p.k(), "one occupancy per region");
    let best = match model {
        Model::PairwiseDistance { r, .. } => {
            circle_max_weight(counts, p, model.max_admissible_size(), *r)
        }
        Model::RegionGraph(g) => graph_max_weight(counts, g),
    };
    debug_assert!(best.regions.is_empty() || is_guaranteed(&best.regions, p, model));
    best
}

/// Chain maximization around the circle.  Regions pairwise at distance >= r
/// are exactly those whose arc positions keep >= `gap` whole cells between
/// consecutive picks, so anchoring the first pick reduces the search to a
/// linear chain.  Only regions with positive log-value can help, which keeps
/// the candidate lists short.
fn circle_max_weight(counts: &[u64], p: &Partition, mu: usize, r: f64) -> GuaranteedWeight {
    let k = p.k();
    let mut val = vec![0.0f64; k];
    for i in 0..k {
        val[p.cell_of_region(i)] = ln_pos(counts[i]);
    }
    // fewest whole cells between two picks, in the same arithmetic as
    // min_region_distance
    let gap = (0..k).find(|&g| g as f64 / k as f64 >= r).unwrap_or(k);

    let positive: Vec<usize> = (0..k).filter(|&c| val[c] > 0.0).collect();
    let mut best = GuaranteedWeight { ln_w: 0.0, regions: Vec::new() };
    for &a in &positive {
        // followers sit at circular offsets d from the anchor with
        // gap <= d - 1 and gap <= (k - d) - 1
        let cand: Vec<(usize, usize)> = positive
            .iter()
            .filter(|&&c| c != a)
            .map(|&c| ((c + k - a) % k, c))
            .filter(|&(d, _)| d >= gap + 1 && d + gap + 1 <= k)
            .collect();
        let mut cand = cand;
        cand.sort_unstable();

        let m = cand.len();
        let layers = mu.saturating_sub(1).min(m);
        // f[s][j]: best chain of s+1 followers starting at cand[j]
        let mut f: Vec<Vec<f64>> = Vec::with_capacity(layers);
        let mut parent: Vec<Vec<usize>> = Vec::with_capacity(layers);
        for s in 0..layers {
            let mut row = vec![f64::NEG_INFINITY; m];
            let mut par = vec![usize::MAX; m];
            if s == 0 {
                for j in 0..m {
                    row[j] = val[cand[j].1];
                }
            } else {
                let prev = &f[s - 1];
                let mut suf = vec![(f64::NEG_INFINITY, usize::MAX); m + 1];
                for j in (0..m).rev() {
                    suf[j] = if prev[j] >= suf[j + 1].0 { (prev[j], j) } else { suf[j + 1] };
                }
                for j in 0..m {
                    let need = cand[j].0 + gap + 1;
                    let j2 = cand.partition_point(|c| c.0 < need);
                    if j2 < m && suf[j2].0 > f64::NEG_INFINITY {
                        row[j] = val[cand[j].1] + suf[j2].0;
                        par[j] = suf[j2].1;
                    }
                }
            }
            f.push(row);
            parent.push(par);
        }

        let mut chain_v = 0.0;
        let mut chain_at: Option<(usize, usize)> = None;
        for s in 0..layers {
            for j in 0..m {
                if f[s][j] > chain_v {
                    chain_v = f[s][j];
                    chain_at = Some((s, j));
                }
            }
        }
        let total = val[a] + chain_v;
        if total > best.ln_w {
            let mut cells = vec![a];
            if let Some((mut s, mut j)) = chain_at {
                loop {
                    cells.push(cand[j].1);
                    if s == 0 {
                        break;
                    }
                    j = parent[s][j];
                    s -= 1;
                }
            }
            let mut regions: Vec<usize> = cells.into_iter().map(|c| p.region_in_cell(c)).collect();
            regions.sort_unstable();
            best = GuaranteedWeight { ln_w: total, regions };
        }
    }
    best
}

fn graph_max_weight(counts: &[u64], g: &RegionGraph) -> GuaranteedWeight {
    let vals: Vec<f64> = counts.iter().map(|&x| ln_pos(x)).collect();
    let mut best = (0.0f64, 0u32);
    g.for_each_independent_set(&mut |mask| {
        let mut v = 0.0;
        let mut m = mask;
        while m != 0 {
            let k = m.trailing_zeros() as usize;
            m &= m - 1;
            v += vals[k];
        }
        if v > best.0 {
            best = (v, mask);
        }
    });
    let regions: Vec<usize> =
        (0..g.k()).filter(|&k| best.1 & (1 << k) != 0 && vals[k] > 0.0).collect();
    GuaranteedWeight { ln_w: best.0, regions }
}

/// `ln` of the weight level above which a state counts as heavy:
/// `(2 / eps) ln(2 * 2^k / eps)` for `k` regions.
pub fn heavy_threshold(k: usize, eps: f64) -> f64 {
    assert!(eps > 0.0 && eps < 1.0);
    (2.0 / eps) * ((k as f64 + 1.0) * std::f64::consts::LN_2 - eps.ln())
}

/// Splitting constant and heavy-state threshold for one load point.
#[derive(Clone, Copy, Debug)]
pub struct DriftConstants {
    /// `(1 - load / mu) / 2`; positive exactly when the load is subcritical.
    pub eps: f64,
    pub mu: usize,
    pub k: usize,
    /// `heavy_threshold(k, eps)`.
    pub ln_w_threshold: f64,
    /// The threshold weight itself exceeds f64 range; all comparisons must
    /// stay on log scale.
    pub w_overflows_f64: bool,
}

pub fn drift_constants(offered_load: f64, mu: usize, k: usize) -> DriftConstants {
    assert!(
        offered_load > 0.0 && offered_load < mu as f64,
        "drift constants need a subcritical load, got {offered_load} vs mu = {mu}"
    );
    let eps = 0.5 * (1.0 - offered_load / mu as f64);
    let ln_w_threshold = heavy_threshold(k, eps);
    DriftConstants {
        eps,
        mu,
        k,
        ln_w_threshold,
        w_overflows_f64: ln_w_threshold > f64::MAX.ln(),
    }
}

/// One evaluation of the capture inequality: on a heavy state, the scheduled
/// region set retains at least a `(1 - eps)` share of the best guaranteed
/// log-weight in expectation.
#[derive(Clone, Debug)]
pub struct WeightCaptureCheck {
    pub ln_w: f64,
    pub ln_threshold: f64,
    pub in_heavy_set: bool,
    /// `sum over schedulable sets S of q_S ln w_S`.
    pub captured: f64,
    /// `(1 - eps) ln w`.
    pub required: f64,
    /// Vacuously true outside the heavy set.
    pub holds: bool,
}

pub fn weight_capture_check(
    counts: &[u64],
    weights: &RegionSetWeights,
    ln_w: f64,
    k: usize,
    eps: f64,
) -> WeightCaptureCheck {
    let ln_threshold = heavy_threshold(k, eps);
    let in_heavy_set = ln_w >= ln_threshold;
    let mut captured = 0.0;
    for (s, w) in &weights.entries {
        let q = big_ratio_f64(w, &weights.total);
        if q > 0.0 {
            captured += q * ln_set_weight(counts, s);
        }
    }
    let required = (1.0 - eps) * ln_w;
    WeightCaptureCheck {
        ln_w,
        ln_threshold,
        in_heavy_set,
        captured,
        required,
        holds: !in_heavy_set || captured + 1e-9 >= required,
    }
}

pub fn weight_capture_check_graph(
    g: &RegionGraph,
    counts: &[u64],
    eps: f64,
) -> WeightCaptureCheck {
    let weights = region_graph_set_weights(g, counts);
    let w = graph_max_weight(counts, g);
    weight_capture_check(counts, &weights, w.ln_w, g.k(), eps)
}

pub fn weight_capture_check_circle(
    model: &Model,
    y: &Configuration,
    p: &Partition,
    eps: f64,
    limit: usize,
) -> Result<WeightCaptureCheck, DiagnosticsError> {
    let weights = region_set_weights(model, y, p, limit)?;
    let counts = region_counts(y, p);
    let w = max_guaranteed_ln_weight(&counts, p, model);
    Ok(weight_capture_check(&counts, &weights, w.ln_w, p.k(), eps))
}

/// One evaluation of the negative-drift bound: on a heavy state the surrogate
/// `G` sits below `-(eps mu / k) J`.
#[derive(Clone, Debug)]
pub struct DriftBoundCheck {
    pub g: f64,
    pub bound: f64,
    pub in_heavy_set: bool,
    /// Vacuously true outside the heavy set.
    pub holds: bool,
}

pub fn drift_bound_check(
    counts: &[u64],
    arrival_means: &[f64],
    served: &[f64],
    ln_w: f64,
    k: usize,
    mu: usize,
    eps: f64,
) -> DriftBoundCheck {
    let g = drift_g(counts, arrival_means, served);
    let bound = -(eps * mu as f64 / k as f64) * j_value(counts);
    let in_heavy_set = ln_w >= heavy_threshold(k, eps);
    DriftBoundCheck { g, bound, in_heavy_set, holds: !in_heavy_set || g <= bound + 1e-9 }
}

pub fn drift_bound_check_graph(
    g: &RegionGraph,
    counts: &[u64],
    offered_load: f64,
    eps: f64,
) -> DriftBoundCheck {
    let served = region_graph_region_marginals(g, counts);
    let means = vec![offered_load / g.k() as f64; g.k()];
    let w = graph_max_weight(counts, g);
    drift_bound_check(counts, &means, &served, w.ln_w, g.k(), g.mu(), eps)
}

pub fn drift_bound_check_circle(
    model: &Model,
    y: &Configuration,
    p: &Partition,
    offered_load: f64,
    eps: f64,
) -> DriftBoundCheck {
    let counts = region_counts(y, p);
    let served = per_region_marginals(&removal_marginals(model, y), y, p);
    let means = vec![offered_load / p.k() as f64; p.k()];
    let w = max_guaranteed_ln_weight(&counts, p, model);
    drift_bound_check(&counts, &means, &served, w.ln_w, p.k(), model.max_admissible_size(), eps)
}

fn binom(n: u64, k: u64) -> f64 {
    let k = k.min(n - k.min(n));
    let mut v = 1.0;
    for i in 0..k {
        v = v * (n - i) as f64 / (i + 1) as f64;
    }
    v
}

/// Average of `V` after `a` arrivals spread uniformly over the regions,
/// enumerated over the full multinomial profile.
fn multinomial_average_v(counts: &mut Vec<u64>, a: u64, k_total: usize) -> f64 {
    fn rec(counts: &mut Vec<u64>, idx: usize, left: u64, coeff: f64, out: &mut f64) {
        if idx + 1 == counts.len() {
            counts[idx] += left;
            *out += coeff * lyapunov_v(counts);
            counts[idx] -= left;
            return;
        }
        for c in 0..=left {
            counts[idx] += c;
            rec(counts, idx + 1, left - c, coeff * binom(left, c), out);
            counts[idx] -= c;
        }
    }
    let mut out = 0.0;
    let base = (1.0 / k_total as f64).powi(a as i32);
    rec(counts, 0, a, base, &mut out);
    out
}

fn expected_v_after_arrivals(counts: &mut Vec<u64>, totals: &[(u64, f64)]) -> f64 {
    let k = counts.len();
    totals.iter().map(|&(a, pa)| pa * multinomial_average_v(counts, a, k)).sum()
}

/// Exact one-step drift `E[V(next)] - V(now)` for the chain observed just
/// before service: the scheduler fires on the current configuration, then a
/// fresh slot of arrivals lands.  Needs finite-support arrival laws; cost
/// grows with the number of admissible subsets and arrival profiles, so this
/// is a tool for small instances and coarse partitions.
pub fn exact_v_drift_circle(
    model: &Model,
    y: &Configuration,
    p: &Partition,
    arrivals: &ArrivalSpec,
    limit: usize,
) -> Result<f64, DiagnosticsError> {
    let totals =
        arrivals.total_arrival_distribution().ok_or(DiagnosticsError::InfiniteSupport)?;
    let subsets = brute_force_enumerate(model, y, limit)?;
    let base = region_counts(y, p);
    let v0 = lyapunov_v(&base);
    let ps = y.particles();
    let q = 1.0 / subsets.len() as f64;
    let mut expected = 0.0;
    for sub in &subsets {
        let mut after = base.clone();
        for &i in sub {
            after[p.region_of(ps[i].loc)] -= 1;
        }
        expected += q * expected_v_after_arrivals(&mut after, &totals);
    }
    Ok(expected - v0)
}

/// Same drift from occupancy alone via the closed-form region-set weights;
/// exact at any occupancy level, but still enumerates arrival profiles.
pub fn exact_v_drift_graph(
    g: &RegionGraph,
    counts: &[u64],
    arrivals: &ArrivalSpec,
) -> Result<f64, DiagnosticsError> {
    let totals =
        arrivals.total_arrival_distribution().ok_or(DiagnosticsError::InfiniteSupport)?;
    let weights = region_graph_set_weights(g, counts);
    let v0 = lyapunov_v(counts);
    let mut expected = 0.0;
    for (s, w) in &weights.entries {
        let q = big_ratio_f64(w, &weights.total);
        if q == 0.0 {
            continue;
        }
        let mut after = counts.to_vec();
        for &k in s {
            after[k] -= 1;
        }
        expected += q * expected_v_after_arrivals(&mut after, &totals);
    }
    Ok(expected - v0)
}

#[derive(Clone, Copy, Debug)]
pub struct DriftEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub samples: usize,
}

/// Monte-Carlo estimate of the same one-step drift.
pub fn empirical_v_drift<R: Rng>(
    model: &Model,
    y: &Configuration,
    p: &Partition,
    arrivals: &ArrivalSpec,
    samples: usize,
    rng: &mut R,
) -> DriftEstimate {
    assert!(samples >= 2);
    let sampler = SubsetSampler::new(model, y);
    let base = region_counts(y, p);
    let v0 = lyapunov_v(&base);
    let ps = y.particles();
    let mut next_id = 0u64;
    let mut sum = 0.0;
    let mut sumsq = 0.0;
    for _ in 0..samples {
        let mut after = base.clone();
        for i in sampler.sample(rng) {
            after[p.region_of(ps[i].loc)] -= 1;
        }
        for arrival in arrivals.sample_arrivals(rng, &mut next_id) {
            after[p.region_of(arrival.loc)] += 1;
        }
        let d = lyapunov_v(&after) - v0;
        sum += d;
        sumsq += d * d;
    }
    let n = samples as f64;
    let mean = sum / n;
    let var = ((sumsq - sum * sum / n) / (n - 1.0)).max(0.0);
    DriftEstimate { mean, std_error: (var / n).sqrt(), samples }
}

/// One sampled diagnostics row along a trajectory.
#[derive(Clone, Copy, Debug)]
pub struct DiagnosticsRow {
    pub t: u64,
    pub total: usize,
    pub v: f64,
    pub j: f64,
    pub ln_w: f64,
}

pub fn diagnostics_row(
    t: u64,
    y: &Configuration,
    p: &Partition,
    model: &Model,
) -> DiagnosticsRow {
    let counts = region_counts(y, p);
    DiagnosticsRow {
        t,
        total: y.len(),
        v: lyapunov_v(&counts),
        j: j_value(&counts),
        ln_w: max_guaranteed_ln_weight(&counts, p, model).ln_w,
    }
}

/// Cumulative running averages of a series.
pub fn running_average(series: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(series.len());
    let mut acc = 0.0;
    for (i, v) in series.iter().enumerate() {
        acc += v;
        out.push(acc / (i + 1) as f64);
    }
    out
}

/// Spread of the trailing `tail_fraction` of a series together with its final
/// value.  A stabilized run keeps the spread of the running average small
/// relative to its level.
pub fn settling_spread(series: &[f64], tail_fraction: f64) -> (f64, f64) {
    assert!(!series.is_empty());
    assert!((0.0..=1.0).contains(&tail_fraction));
    let start = (series.len() as f64 * (1.0 - tail_fraction)) as usize;
    let tail = &series[start.min(series.len() - 1)..];
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &v in tail {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    (hi - lo, series[series.len() - 1])
}
