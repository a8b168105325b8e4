//! Exact counting and exact uniform sampling of admissible subsets, plus the
//! removal statistics built on both.
//!
//! For the pairwise-distance model the counter uses the fact that a subset is
//! admissible exactly when every consecutive arc between chosen locations,
//! walking once around the circle, is at least `r` long.  Each subset is
//! therefore anchored at its smallest location and extended left to right
//! with forward gaps of at least `r`.  The wrap-around arc from the largest
//! location back to the anchor is one extra constraint: when it cannot bind,
//! the anchor shares one suffix-sum table with every other such anchor; when
//! it can, the extension is confined to an explicit window with its own small
//! table.  All window edges are monotone comparisons evaluated with the same
//! floating-point expressions as [`Model::is_admissible`], so the two agree
//! bit for bit on every pair involving the anchor or consecutive elements;
//! distances between non-consecutive interior elements exceed `r` by whole
//! gaps and could only disagree on adversarially exact boundary inputs.
//!
//! Counts are exact integers.  Instances whose totals provably fit in `u128`
//! run on machine words; anything larger switches to big integers.  The
//! `mu <= 2` regime, where the long simulations spend their time, has a
//! dedicated linear-time path.

use std::collections::BTreeMap;

use crate::admissibility::{Configuration, Model, Particle, RegionGraph};
use crate::geometry::Partition;
use crate::stats::big_ratio_f64;
use num_bigint::BigUint;
use num_traits::{One, Zero};
use rand::{Rng, RngCore};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum SamplerError {
    #[error("{n} particles exceed the enumeration limit of {limit}")]
    TooLarge { n: usize, limit: usize },
}

/// Exact subset counts for one configuration.
#[derive(Clone, Debug, PartialEq)]
pub struct SubsetCount {
    /// Number of admissible subsets of each size, indexed `0..=mu`.
    pub by_size: Vec<BigUint>,
    /// Sum over all sizes.
    pub total: BigUint,
}

/// Every admissible subset by explicit enumeration, as ascending index lists
/// in ascending bitmask order.  This is the reference the fast paths are
/// checked against, so it must stay a direct transcription of the definition.
pub fn brute_force_enumerate(
    model: &Model,
    y: &Configuration,
    limit: usize,
) -> Result<Vec<Vec<usize>>, SamplerError> {
    let n = y.len();
    if n > limit || n >= 64 {
        return Err(SamplerError::TooLarge { n, limit: limit.min(63) });
    }
    let ps = y.particles();
    let mut out = Vec::new();
    for mask in 0u64..(1u64 << n) {
        let idx: Vec<usize> = (0..n).filter(|i| mask & (1 << i) != 0).collect();
        let subset: Vec<Particle> = idx.iter().map(|&i| ps[i]).collect();
        if model.is_admissible(&subset) {
            out.push(idx);
        }
    }
    Ok(out)
}

/// Integer arithmetic the tables are built in.
trait Count: Clone + Ord + std::fmt::Debug + From<u8> {
    fn add_ref(&mut self, other: &Self);
    fn sub_ref(&mut self, other: &Self);
    fn to_big(&self) -> BigUint;
    fn sample_below(total: &Self, rng: &mut dyn RngCore) -> Self;
}

impl Count for u128 {
    fn add_ref(&mut self, other: &Self) {
        *self += *other;
    }

    fn sub_ref(&mut self, other: &Self) {
        *self -= *other;
    }

    fn to_big(&self) -> BigUint {
        BigUint::from(*self)
    }

    fn sample_below(total: &Self, rng: &mut dyn RngCore) -> Self {
        rng.random_range(0..*total)
    }
}

impl Count for BigUint {
    fn add_ref(&mut self, other: &Self) {
        *self += other;
    }

    fn sub_ref(&mut self, other: &Self) {
        *self -= other;
    }

    fn to_big(&self) -> BigUint {
        self.clone()
    }

    fn sample_below(total: &Self, rng: &mut dyn RngCore) -> Self {
        // rejection on the exact bit length keeps the draw uniform
        let bits = total.bits();
        debug_assert!(bits > 0, "sampling below zero");
        let words = bits.div_ceil(32) as usize;
        let top_mask: u32 =
            if bits % 32 == 0 { u32::MAX } else { (1u32 << (bits % 32)) - 1 };
        loop {
            let mut digits = vec![0u32; words];
            for d in digits.iter_mut() {
                *d = rng.next_u32();
            }
            digits[words - 1] &= top_mask;
            let candidate = BigUint::new(digits);
            if candidate < *total {
                return candidate;
            }
        }
    }
}

/// Whether every count for `n` particles and sets up to size `mu` provably
/// fits in `u128`: each table entry is at most `(n + 1)^mu`.
fn u128_is_safe(mu: usize, n: usize) -> bool {
    (mu as f64) * ((n + 1) as f64).log2() <= 120.0
}

/// Suffix tables over the sorted locations.  `f[s][i]` counts forward chains
/// of size `s` starting at index `i` whose consecutive gaps are all at least
/// `r`, ignoring the wrap-around arc; `fsum` holds suffix sums of each row.
struct ChainDp<T> {
    xs: Vec<f64>,
    r: f64,
    mu: usize,
    cap: usize,
    lo: Vec<usize>,
    hi: Vec<usize>,
    f: Vec<Vec<T>>,
    anchors: Vec<Vec<T>>,
    by_size: Vec<T>,
    total: T,
}

/// Chain tables restricted to one anchor's follower window, for anchors whose
/// wrap-around arc can fall below `r`.
struct WindowTables<T> {
    base: usize,
    len: usize,
    g: Vec<Vec<T>>,
    gsum: Vec<Vec<T>>,
}

impl<T: Count> WindowTables<T> {
    fn build(lo: &[usize], base: usize, end: usize, max_size: usize) -> WindowTables<T> {
        let len = end - base;
        let mut g: Vec<Vec<T>> = vec![Vec::new()];
        let mut gsum: Vec<Vec<T>> = vec![vec![T::from(0); len + 1]];
        for s in 1..=max_size {
            let mut row = vec![T::from(0); len];
            for t in 0..len {
                row[t] = if s == 1 {
                    T::from(1)
                } else {
                    // lo is global, so shift into the window and clamp
                    let nxt = (lo[base + t] - base).min(len);
                    gsum[s - 1][nxt].clone()
                };
            }
            let mut sums = vec![T::from(0); len + 1];
            for t in (0..len).rev() {
                let mut v = row[t].clone();
                v.add_ref(&sums[t + 1]);
                sums[t] = v;
            }
            g.push(row);
            gsum.push(sums);
        }
        WindowTables { base, len, g, gsum }
    }
}

impl<T: Count> ChainDp<T> {
    fn build(xs: Vec<f64>, r: f64, mu: usize) -> ChainDp<T> {
        debug_assert!(xs.windows(2).all(|w| w[0] <= w[1]), "locations must be sorted");
        let n = xs.len();
        let cap = mu.min(n);
        let mut lo = vec![0usize; n];
        let mut hi = vec![0usize; n];
        for i in 0..n {
            // both predicates are monotone along the sorted suffix and use
            // the exact expressions of the admissibility check
            lo[i] = i + 1 + xs[i + 1..].partition_point(|&x| x - xs[i] < r);
            let h = i + 1 + xs[i + 1..].partition_point(|&x| 1.0 - (x - xs[i]) >= r);
            hi[i] = h.max(lo[i]);
        }

        let mut f: Vec<Vec<T>> = vec![Vec::new()];
        let mut fsum: Vec<Vec<T>> = vec![vec![T::from(0); n + 1]];
        for s in 1..=cap {
            let mut row = vec![T::from(0); n];
            for (i, slot) in row.iter_mut().enumerate() {
                *slot = if s == 1 { T::from(1) } else { fsum[s - 1][lo[i]].clone() };
            }
            let mut sums = vec![T::from(0); n + 1];
            for i in (0..n).rev() {
                let mut v = row[i].clone();
                v.add_ref(&sums[i + 1]);
                sums[i] = v;
            }
            f.push(row);
            fsum.push(sums);
        }

        let mut anchors: Vec<Vec<T>> = Vec::with_capacity(n);
        let mut by_size = vec![T::from(0); cap + 1];
        by_size[0] = T::from(1);
        for a in 0..n {
            let mut row = vec![T::from(0); cap + 1];
            if cap >= 1 {
                row[1] = T::from(1);
            }
            if cap >= 2 {
                if hi[a] == n {
                    // the wrap-around arc cannot bind: share the suffix tables
                    for (s, slot) in row.iter_mut().enumerate().skip(2) {
                        *slot = f[s][a].clone();
                    }
                } else {
                    let w = WindowTables::<T>::build(&lo, lo[a], hi[a], cap - 1);
                    for (s, slot) in row.iter_mut().enumerate().skip(2) {
                        *slot = w.gsum[s - 1][0].clone();
                    }
                }
            }
            for s in 1..=cap {
                by_size[s].add_ref(&row[s]);
            }
            anchors.push(row);
        }
        let mut total = T::from(0);
        for v in &by_size {
            total.add_ref(v);
        }
        ChainDp { xs, r, mu, cap, lo, hi, f, anchors, by_size, total }
    }

    fn counts(&self) -> SubsetCount {
        let mut by_size = vec![BigUint::zero(); self.mu + 1];
        for s in 0..=self.cap {
            by_size[s] = self.by_size[s].to_big();
        }
        SubsetCount { by_size, total: self.total.to_big() }
    }

    fn sample(&self, rng: &mut dyn RngCore) -> Vec<usize> {
        let n = self.xs.len();
        let mut u = T::sample_below(&self.total, rng);
        let mut size = usize::MAX;
        for s in 0..=self.cap {
            if u < self.by_size[s] {
                size = s;
                break;
            }
            u.sub_ref(&self.by_size[s]);
        }
        assert_ne!(size, usize::MAX, "roulette overran the size histogram");
        if size == 0 {
            return Vec::new();
        }
        let mut anchor = usize::MAX;
        for a in 0..n {
            if u < self.anchors[a][size] {
                anchor = a;
                break;
            }
            u.sub_ref(&self.anchors[a][size]);
        }
        assert_ne!(anchor, usize::MAX, "roulette overran the anchor weights");
        let mut chosen = vec![anchor];
        let mut rem = size - 1;
        if rem == 0 {
            return chosen;
        }
        if self.hi[anchor] == n {
            let mut j = self.lo[anchor];
            while rem > 0 {
                // invariant: u < fsum[rem][j], so the walk stops in range
                while u >= self.f[rem][j] {
                    u.sub_ref(&self.f[rem][j]);
                    j += 1;
                    debug_assert!(j < n);
                }
                chosen.push(j);
                rem -= 1;
                if rem > 0 {
                    j = self.lo[j];
                }
            }
        } else {
            let w = WindowTables::<T>::build(&self.lo, self.lo[anchor], self.hi[anchor], self.cap - 1);
            let mut t = 0usize;
            while rem > 0 {
                while u >= w.g[rem][t] {
                    u.sub_ref(&w.g[rem][t]);
                    t += 1;
                    debug_assert!(t < w.len);
                }
                chosen.push(w.base + t);
                rem -= 1;
                if rem > 0 {
                    t = (self.lo[w.base + t] - w.base).min(w.len);
                }
            }
        }
        chosen
    }
}

/// Linear-time tables for `mu <= 2`, the regime long runs live in: counting
/// is a two-pointer sweep and a draw costs two binary searches.
struct PairTables {
    xs: Vec<f64>,
    r: f64,
    mu: usize,
    lo: Vec<usize>,
    hi: Vec<usize>,
    pair_prefix: Vec<u64>,
    pairs: u64,
    total: u128,
}

impl PairTables {
    fn build(xs: Vec<f64>, r: f64, mu: usize) -> PairTables {
        debug_assert!(mu <= 2);
        debug_assert!(xs.windows(2).all(|w| w[0] <= w[1]), "locations must be sorted");
        let n = xs.len();
        assert!(n < u32::MAX as usize, "configuration too large for pair counting");
        let mut lo = vec![0usize; n];
        let mut hi = vec![0usize; n];
        let mut pair_prefix = vec![0u64; n + 1];
        if mu == 2 {
            // both window edges are nondecreasing in the anchor, so two
            // pointers sweep the whole configuration in one pass
            let (mut p_lo, mut p_hi) = (0usize, 0usize);
            for i in 0..n {
                if p_lo < i + 1 {
                    p_lo = i + 1;
                }
                while p_lo < n && xs[p_lo] - xs[i] < r {
                    p_lo += 1;
                }
                if p_hi < p_lo {
                    p_hi = p_lo;
                }
                while p_hi < n && 1.0 - (xs[p_hi] - xs[i]) >= r {
                    p_hi += 1;
                }
                lo[i] = p_lo;
                hi[i] = p_hi;
                pair_prefix[i + 1] = pair_prefix[i] + (p_hi - p_lo) as u64;
            }
        }
        let pairs = pair_prefix[n];
        let total = 1 + n as u128 + pairs as u128;
        PairTables { xs, r, mu, lo, hi, pair_prefix, pairs, total }
    }

    fn counts(&self) -> SubsetCount {
        let mut by_size = vec![BigUint::zero(); self.mu + 1];
        by_size[0] = BigUint::one();
        if self.mu >= 1 {
            by_size[1] = BigUint::from(self.xs.len());
        }
        if self.mu >= 2 {
            by_size[2] = BigUint::from(self.pairs);
        }
        SubsetCount { by_size, total: BigUint::from(self.total) }
    }

    fn sample(&self, rng: &mut dyn RngCore) -> Vec<usize> {
        let u = rng.random_range(0..self.total);
        if u == 0 {
            return Vec::new();
        }
        let v = u - 1;
        let n = self.xs.len() as u128;
        if v < n {
            return vec![v as usize];
        }
        let mut w = (v - n) as u64;
        // the anchor owns the pairs in [pair_prefix[a], pair_prefix[a + 1])
        let a = self.pair_prefix.partition_point(|&c| c <= w) - 1;
        w -= self.pair_prefix[a];
        vec![a, self.lo[a] + w as usize]
    }

    fn containing_counts(&self) -> Vec<BigUint> {
        let n = self.xs.len();
        (0..n)
            .map(|i| {
                let mut c = 1u64;
                if self.mu >= 2 {
                    c += (self.hi[i] - self.lo[i]) as u64;
                    // partners below i: the same two window predicates read
                    // from the other side
                    let t1 = self.xs[..i].partition_point(|&w| self.xs[i] - w >= self.r);
                    let t0 = self.xs[..i].partition_point(|&w| 1.0 - (self.xs[i] - w) < self.r);
                    c += t1.saturating_sub(t0) as u64;
                }
                BigUint::from(c)
            })
            .collect()
    }
}

/// Closed-form tables for the region-graph model: independent region sets,
/// each weighted by the product of its occupancies.
struct RegionTables {
    g: RegionGraph,
    n: usize,
    counts: Vec<u64>,
    members: Vec<Vec<usize>>,
    masks: Vec<u32>,
    weights: Vec<BigUint>,
    by_size: Vec<BigUint>,
    total: BigUint,
}

fn region_mask_weights(
    g: &RegionGraph,
    counts: &[u64],
) -> (Vec<u32>, Vec<BigUint>, Vec<BigUint>, BigUint) {
    let mut masks = Vec::new();
    let mut weights = Vec::new();
    let mut by_size = vec![BigUint::zero(); g.mu() + 1];
    g.for_each_independent_set(&mut |mask| {
        let mut w = BigUint::one();
        let mut m = mask;
        while m != 0 {
            let k = m.trailing_zeros() as usize;
            m &= m - 1;
            w *= counts[k];
        }
        if !w.is_zero() {
            by_size[mask.count_ones() as usize] += &w;
            masks.push(mask);
            weights.push(w);
        }
    });
    let mut total = BigUint::zero();
    for v in &by_size {
        total += v;
    }
    (masks, weights, by_size, total)
}

fn mask_to_regions(mut m: u32) -> Vec<usize> {
    let mut out = Vec::new();
    while m != 0 {
        out.push(m.trailing_zeros() as usize);
        m &= m - 1;
    }
    out
}

impl RegionTables {
    fn build(g: &RegionGraph, y: &Configuration) -> RegionTables {
        let mut counts = vec![0u64; g.k()];
        let mut members = vec![Vec::new(); g.k()];
        for (i, p) in y.particles().iter().enumerate() {
            let reg = g.region_of(p.loc);
            counts[reg] += 1;
            members[reg].push(i);
        }
        let (masks, weights, by_size, total) = region_mask_weights(g, &counts);
        RegionTables { g: g.clone(), n: y.len(), counts, members, masks, weights, by_size, total }
    }

    fn counts(&self) -> SubsetCount {
        SubsetCount { by_size: self.by_size.clone(), total: self.total.clone() }
    }

    fn sample(&self, rng: &mut dyn RngCore) -> Vec<usize> {
        let mut u = <BigUint as Count>::sample_below(&self.total, rng);
        let mut idx = 0usize;
        while u >= self.weights[idx] {
            u -= &self.weights[idx];
            idx += 1;
            debug_assert!(idx < self.weights.len());
        }
        // one uniform representative per chosen region keeps the subset law
        // uniform: weight / product of picks = 1
        let mut chosen = Vec::new();
        let mut m = self.masks[idx];
        while m != 0 {
            let k = m.trailing_zeros() as usize;
            m &= m - 1;
            let pick = rng.random_range(0..self.members[k].len());
            chosen.push(self.members[k][pick]);
        }
        chosen.sort_unstable();
        chosen
    }

    fn containing_counts(&self) -> Vec<BigUint> {
        let mut per_region = vec![BigUint::zero(); self.g.k()];
        for (mask, w) in self.masks.iter().zip(&self.weights) {
            let mut m = *mask;
            while m != 0 {
                let k = m.trailing_zeros() as usize;
                m &= m - 1;
                // counts[k] divides w, so the division is exact
                per_region[k] += w / self.counts[k];
            }
        }
        let mut out = vec![BigUint::zero(); self.n];
        for (k, mem) in self.members.iter().enumerate() {
            for &i in mem {
                out[i] = per_region[k].clone();
            }
        }
        out
    }
}

enum Inner {
    Pair(PairTables),
    Chain(ChainDp<u128>),
    ChainBig(ChainDp<BigUint>),
    Regions(RegionTables),
}

/// Reusable per-configuration sampler: build once, then count, draw, or take
/// marginals any number of times.
pub struct SubsetSampler {
    inner: Inner,
}

impl SubsetSampler {
    pub fn new(model: &Model, y: &Configuration) -> SubsetSampler {
        let inner = match model {
            Model::PairwiseDistance { r, profile } => {
                let xs = y.locations();
                if profile.mu <= 2 {
                    Inner::Pair(PairTables::build(xs, *r, profile.mu))
                } else if u128_is_safe(profile.mu, xs.len()) {
                    Inner::Chain(ChainDp::build(xs, *r, profile.mu))
                } else {
                    Inner::ChainBig(ChainDp::build(xs, *r, profile.mu))
                }
            }
            Model::RegionGraph(g) => Inner::Regions(RegionTables::build(g, y)),
        };
        SubsetSampler { inner }
    }

    pub fn counts(&self) -> SubsetCount {
        match &self.inner {
            Inner::Pair(t) => t.counts(),
            Inner::Chain(t) => t.counts(),
            Inner::ChainBig(t) => t.counts(),
            Inner::Regions(t) => t.counts(),
        }
    }

    pub fn total(&self) -> BigUint {
        match &self.inner {
            Inner::Pair(t) => BigUint::from(t.total),
            Inner::Chain(t) => t.total.to_big(),
            Inner::ChainBig(t) => t.total.clone(),
            Inner::Regions(t) => t.total.clone(),
        }
    }

    /// One admissible subset drawn uniformly, as ascending particle indices.
    pub fn sample<R: Rng>(&self, rng: &mut R) -> Vec<usize> {
        let rng: &mut dyn RngCore = rng;
        match &self.inner {
            Inner::Pair(t) => t.sample(rng),
            Inner::Chain(t) => t.sample(rng),
            Inner::ChainBig(t) => t.sample(rng),
            Inner::Regions(t) => t.sample(rng),
        }
    }

    /// For each particle, the number of admissible subsets containing it.
    pub fn containing_counts(&self) -> Vec<BigUint> {
        match &self.inner {
            Inner::Pair(t) => t.containing_counts(),
            Inner::Chain(t) => chain_containing(&t.xs, t.r, t.mu, &t.total.to_big()),
            Inner::ChainBig(t) => chain_containing(&t.xs, t.r, t.mu, &t.total),
            Inner::Regions(t) => t.containing_counts(),
        }
    }
}

fn chain_containing(xs: &[f64], r: f64, mu: usize, total: &BigUint) -> Vec<BigUint> {
    // leave-one-out difference: subsets containing i = total - total without i
    (0..xs.len())
        .map(|i| {
            let mut sub = xs.to_vec();
            sub.remove(i);
            let without = if u128_is_safe(mu, sub.len()) {
                ChainDp::<u128>::build(sub, r, mu).total.to_big()
            } else {
                ChainDp::<BigUint>::build(sub, r, mu).total
            };
            total - without
        })
        .collect()
}

/// Exact subset counts by size.
pub fn count_admissible_subsets(model: &Model, y: &Configuration) -> SubsetCount {
    SubsetSampler::new(model, y).counts()
}

/// One admissible subset drawn uniformly from all of them, as ascending
/// particle indices into `y`.
pub fn sample_admissible_subset<R: Rng>(
    model: &Model,
    y: &Configuration,
    rng: &mut R,
) -> Vec<usize> {
    SubsetSampler::new(model, y).sample(rng)
}

/// Per-particle removal statistics under the uniform law on admissible
/// subsets.
#[derive(Clone, Debug)]
pub struct RemovalMarginals {
    /// Admissible subsets containing each particle, in configuration order.
    pub containing: Vec<BigUint>,
    /// All admissible subsets.
    pub total: BigUint,
    /// `containing / total` per particle.
    pub per_particle: Vec<f64>,
}

pub fn removal_marginals(model: &Model, y: &Configuration) -> RemovalMarginals {
    let s = SubsetSampler::new(model, y);
    let total = s.total();
    let containing = s.containing_counts();
    let per_particle = containing.iter().map(|c| big_ratio_f64(c, &total)).collect();
    RemovalMarginals { containing, total, per_particle }
}

/// Expected number of particles scheduled from each region in one slot.  When
/// at most one particle per region is ever schedulable this is also the
/// probability that the region is served.
pub fn per_region_marginals(m: &RemovalMarginals, y: &Configuration, p: &Partition) -> Vec<f64> {
    let mut out = vec![0.0; p.k()];
    for (particle, prob) in y.particles().iter().zip(&m.per_particle) {
        out[p.region_of(particle.loc)] += prob;
    }
    out
}

/// Exact weight of every schedulable region set: how many admissible subsets
/// occupy exactly that set of regions.
#[derive(Clone, Debug, PartialEq)]
pub struct RegionSetWeights {
    /// `(regions, weight)`, sorted by size then lexicographically.
    pub entries: Vec<(Vec<usize>, BigUint)>,
    pub total: BigUint,
}

impl RegionSetWeights {
    pub fn weight(&self, s: &[usize]) -> BigUint {
        let mut key = s.to_vec();
        key.sort_unstable();
        self.entries
            .iter()
            .find(|(k, _)| *k == key)
            .map(|(_, w)| w.clone())
            .unwrap_or_default()
    }

    /// Probability that a uniform admissible subset occupies exactly `s`.
    pub fn probability(&self, s: &[usize]) -> f64 {
        big_ratio_f64(&self.weight(s), &self.total)
    }
}

fn finish_weights(map: BTreeMap<Vec<usize>, BigUint>) -> RegionSetWeights {
    let mut total = BigUint::zero();
    for w in map.values() {
        total += w;
    }
    let mut entries: Vec<(Vec<usize>, BigUint)> = map.into_iter().collect();
    entries.sort_by(|a, b| (a.0.len(), &a.0).cmp(&(b.0.len(), &b.0)));
    RegionSetWeights { entries, total }
}

/// Region-set weights of one configuration.  The distance model goes through
/// explicit enumeration (and inherits its size limit); the graph model uses
/// the closed form and has no limit.
pub fn region_set_weights(
    model: &Model,
    y: &Configuration,
    p: &Partition,
    limit: usize,
) -> Result<RegionSetWeights, SamplerError> {
    match model {
        Model::PairwiseDistance { .. } => {
            let subsets = brute_force_enumerate(model, y, limit)?;
            let ps = y.particles();
            let mut map: BTreeMap<Vec<usize>, BigUint> = BTreeMap::new();
            for sub in subsets {
                let mut regions: Vec<usize> =
                    sub.iter().map(|&i| p.region_of(ps[i].loc)).collect();
                regions.sort_unstable();
                regions.dedup();
                *map.entry(regions).or_default() += 1u32;
            }
            Ok(finish_weights(map))
        }
        Model::RegionGraph(g) => {
            let mut counts = vec![0u64; g.k()];
            for particle in y.particles() {
                counts[g.region_of(particle.loc)] += 1;
            }
            Ok(region_graph_set_weights(g, &counts))
        }
    }
}

/// Closed-form region-set weights from occupancy alone, usable for states far
/// beyond enumeration.
pub fn region_graph_set_weights(g: &RegionGraph, counts: &[u64]) -> RegionSetWeights {
    assert_eq!(counts.len(), g.k(), "one occupancy per region");
    let (masks, weights, _by_size, total) = region_mask_weights(g, counts);
    let mut entries: Vec<(Vec<usize>, BigUint)> =
        masks.into_iter().map(mask_to_regions).zip(weights).collect();
    entries.sort_by(|a, b| (a.0.len(), &a.0).cmp(&(b.0.len(), &b.0)));
    RegionSetWeights { entries, total }
}

/// Closed-form subset counts from occupancy alone.
pub fn region_graph_subset_count(g: &RegionGraph, counts: &[u64]) -> SubsetCount {
    assert_eq!(counts.len(), g.k(), "one occupancy per region");
    let (_masks, _weights, by_size, total) = region_mask_weights(g, counts);
    SubsetCount { by_size, total }
}

/// Probability that each region is served in one slot, from occupancy alone.
pub fn region_graph_region_marginals(g: &RegionGraph, counts: &[u64]) -> Vec<f64> {
    assert_eq!(counts.len(), g.k(), "one occupancy per region");
    let (masks, weights, _by_size, total) = region_mask_weights(g, counts);
    let mut served = vec![BigUint::zero(); g.k()];
    for (mask, w) in masks.iter().zip(&weights) {
        let mut m = *mask;
        while m != 0 {
            let k = m.trailing_zeros() as usize;
            m &= m - 1;
            served[k] += w;
        }
    }
    served.iter().map(|v| big_ratio_f64(v, &total)).collect()
}
