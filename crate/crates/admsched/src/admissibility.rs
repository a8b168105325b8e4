//! Interference models and particle configurations.
//!
//! A configuration is the multiset of particles present in the system. A
//! subset of it is admissible when every pair can be active simultaneously:
//! pairwise circular distance at least `r` for the distance model, pairwise
//! non-conflicting regions (and at most one particle per region) for the
//! abstract region-graph model. The empty set is always admissible.

use crate::geometry::{circ_distance, normalize, radius_profile, GeometryError, Partition, RadiusProfile};
use thiserror::Error;

pub type ParticleId = u64;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Particle {
    pub id: ParticleId,
    pub loc: f64,
}

impl Particle {
    pub fn new(id: ParticleId, loc: f64) -> Particle {
        Particle { id, loc: normalize(loc) }
    }
}

fn particle_order(a: &Particle, b: &Particle) -> std::cmp::Ordering {
    a.loc.partial_cmp(&b.loc).unwrap().then(a.id.cmp(&b.id))
}

/// Particles present in the system, kept sorted by (location, id).
///
/// The sorted order is load-bearing: the subset-counting recursion anchors on
/// the first particle of a set in this order, and the priority scheduler
/// reads priority order as a rotation of it.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Configuration {
    particles: Vec<Particle>,
}

impl Configuration {
    pub fn new() -> Configuration {
        Configuration::default()
    }

    /// Build from bare locations; ids are assigned 0..n in input order.
    pub fn from_locations(locs: &[f64]) -> Configuration {
        let mut particles: Vec<Particle> = locs
            .iter()
            .enumerate()
            .map(|(i, &x)| Particle::new(i as ParticleId, x))
            .collect();
        particles.sort_by(particle_order);
        Configuration { particles }
    }

    pub fn len(&self) -> usize {
        self.particles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.particles.is_empty()
    }

    pub fn particles(&self) -> &[Particle] {
        &self.particles
    }

    pub fn insert(&mut self, p: Particle) {
        let p = Particle::new(p.id, p.loc);
        let pos = self.particles.partition_point(|q| particle_order(q, &p).is_lt());
        self.particles.insert(pos, p);
    }

    /// Insert a batch in one pass.
    pub fn insert_many(&mut self, news: &[Particle]) {
        let mut news: Vec<Particle> = news.iter().map(|p| Particle::new(p.id, p.loc)).collect();
        news.sort_by(particle_order);
        let old = std::mem::take(&mut self.particles);
        self.particles.reserve(old.len() + news.len());
        let mut it_old = old.into_iter().peekable();
        let mut it_new = news.into_iter().peekable();
        loop {
            match (it_old.peek(), it_new.peek()) {
                (Some(a), Some(b)) => {
                    if particle_order(a, b).is_le() {
                        self.particles.push(it_old.next().unwrap());
                    } else {
                        self.particles.push(it_new.next().unwrap());
                    }
                }
                (Some(_), None) => self.particles.push(it_old.next().unwrap()),
                (None, Some(_)) => self.particles.push(it_new.next().unwrap()),
                (None, None) => break,
            }
        }
    }

    /// Remove particles at the given sorted positions.
    pub fn remove_sorted_indices(&mut self, idx: &[usize]) {
        debug_assert!(idx.windows(2).all(|w| w[0] < w[1]));
        if idx.is_empty() {
            return;
        }
        let mut cursor = 0;
        let mut kept = 0;
        for i in 0..self.particles.len() {
            if cursor < idx.len() && idx[cursor] == i {
                cursor += 1;
            } else {
                self.particles[kept] = self.particles[i];
                kept += 1;
            }
        }
        assert_eq!(cursor, idx.len(), "removal index out of range");
        self.particles.truncate(kept);
    }

    pub fn locations(&self) -> Vec<f64> {
        self.particles.iter().map(|p| p.loc).collect()
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("region count must be in 1..={max}, got {k}")]
    BadRegionCount { k: usize, max: usize },
    #[error("edge ({a}, {b}) out of range or a self-loop")]
    BadEdge { a: usize, b: usize },
    #[error("independence number {alpha} does not divide region count {k}")]
    AlphaNotDividing { alpha: usize, k: usize },
    #[error("consecutive block {m} is not mutually non-adjacent")]
    BlockNotIndependent { m: usize },
}

/// Abstract conflict structure on `k` regions. Region of a particle at
/// location `x` is `floor(x * k)`. Kept small (k <= 20) because exact
/// counting and the guaranteed-set machinery enumerate independent sets.
#[derive(Clone, Debug, PartialEq)]
pub struct RegionGraph {
    k: usize,
    mu: usize,
    adj: Vec<u32>,
}

pub const REGION_GRAPH_MAX_K: usize = 20;

impl RegionGraph {
    /// Validates that the independence number divides `k` and that every
    /// block of `mu` consecutive regions is mutually non-adjacent, so the
    /// canonical blocks are guaranteed sets.
    pub fn new(k: usize, edges: &[(usize, usize)]) -> Result<RegionGraph, ModelError> {
        if k == 0 || k > REGION_GRAPH_MAX_K {
            return Err(ModelError::BadRegionCount { k, max: REGION_GRAPH_MAX_K });
        }
        let mut adj = vec![0u32; k];
        for &(a, b) in edges {
            if a >= k || b >= k || a == b {
                return Err(ModelError::BadEdge { a, b });
            }
            adj[a] |= 1 << b;
            adj[b] |= 1 << a;
        }
        let mu = independence_number(&adj);
        if k % mu != 0 {
            return Err(ModelError::AlphaNotDividing { alpha: mu, k });
        }
        for m in 0..k / mu {
            let block: Vec<usize> = (m * mu..(m + 1) * mu).collect();
            if !set_independent(&adj, &block) {
                return Err(ModelError::BlockNotIndependent { m });
            }
        }
        Ok(RegionGraph { k, mu, adj })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn mu(&self) -> usize {
        self.mu
    }

    pub fn region_of(&self, loc: f64) -> usize {
        assert!((0.0..1.0).contains(&loc));
        ((loc * self.k as f64).floor() as usize).min(self.k - 1)
    }

    pub fn adjacent(&self, a: usize, b: usize) -> bool {
        self.adj[a] & (1 << b) != 0
    }

    pub fn set_independent(&self, regions: &[usize]) -> bool {
        set_independent(&self.adj, regions)
    }

    /// Visit every independent set of regions as a bitmask (the empty set
    /// included).
    pub fn for_each_independent_set(&self, f: &mut impl FnMut(u32)) {
        fn rec(adj: &[u32], i: usize, cur: u32, f: &mut impl FnMut(u32)) {
            if i == adj.len() {
                f(cur);
                return;
            }
            rec(adj, i + 1, cur, f);
            if adj[i] & cur == 0 {
                rec(adj, i + 1, cur | (1 << i), f);
            }
        }
        rec(&self.adj, 0, 0, f);
    }
}

fn set_independent(adj: &[u32], regions: &[usize]) -> bool {
    for (n, &a) in regions.iter().enumerate() {
        for &b in &regions[n + 1..] {
            if a == b || adj[a] & (1 << b) != 0 {
                return false;
            }
        }
    }
    true
}

fn independence_number(adj: &[u32]) -> usize {
    fn rec(adj: &[u32], i: usize, cur: u32, best: &mut usize) {
        if i == adj.len() {
            *best = (*best).max(cur.count_ones() as usize);
            return;
        }
        if cur.count_ones() as usize + (adj.len() - i) <= *best {
            return;
        }
        if adj[i] & cur == 0 {
            rec(adj, i + 1, cur | (1 << i), best);
        }
        rec(adj, i + 1, cur, best);
    }
    let mut best = 0;
    rec(adj, 0, 0, &mut best);
    best
}

/// Interference model: who may be scheduled together.
#[derive(Clone, Debug, PartialEq)]
pub enum Model {
    PairwiseDistance { r: f64, profile: RadiusProfile },
    RegionGraph(RegionGraph),
}

impl Model {
    pub fn pairwise(r: f64) -> Result<Model, GeometryError> {
        Ok(Model::PairwiseDistance { r, profile: radius_profile(r)? })
    }

    pub fn region_graph(k: usize, edges: &[(usize, usize)]) -> Result<Model, ModelError> {
        Ok(Model::RegionGraph(RegionGraph::new(k, edges)?))
    }

    /// Largest admissible set size.
    pub fn max_admissible_size(&self) -> usize {
        match self {
            Model::PairwiseDistance { profile, .. } => profile.mu,
            Model::RegionGraph(g) => g.mu,
        }
    }

    /// Set size excluded outright (integer `1/r` only).
    pub fn forbidden_size(&self) -> Option<usize> {
        match self {
            Model::PairwiseDistance { profile, .. } => profile.forbidden_size,
            Model::RegionGraph(_) => None,
        }
    }

    pub fn is_admissible(&self, subset: &[Particle]) -> bool {
        if let Some(f) = self.forbidden_size() {
            if subset.len() == f {
                return false;
            }
        }
        match self {
            Model::PairwiseDistance { r, .. } => {
                for (n, a) in subset.iter().enumerate() {
                    for b in &subset[n + 1..] {
                        if circ_distance(a.loc, b.loc) < *r {
                            return false;
                        }
                    }
                }
                true
            }
            Model::RegionGraph(g) => {
                let regions: Vec<usize> = subset.iter().map(|p| g.region_of(p.loc)).collect();
                set_independent(&g.adj, &regions)
            }
        }
    }

    /// Natural partition for diagnostics: the interleaved circle layout for
    /// the distance model, the identity layout for a region graph.
    pub fn default_partition(&self, k: Option<usize>) -> Result<Partition, GeometryError> {
        match self {
            Model::PairwiseDistance { r, .. } => Partition::interleaved(*r, k),
            Model::RegionGraph(g) => {
                assert!(k.is_none() || k == Some(g.k), "region-graph partition size is fixed");
                Partition::uniform(g.k, g.mu)
            }
        }
    }
}

/// Whether every selection of one particle per region of `s` is admissible,
/// for any placement of the particles inside their regions.
pub fn is_guaranteed(s: &[usize], p: &Partition, model: &Model) -> bool {
    debug_assert!({
        let mut t = s.to_vec();
        t.sort_unstable();
        t.windows(2).all(|w| w[0] != w[1])
    });
    if s.len() > model.max_admissible_size() {
        return false;
    }
    match model {
        Model::PairwiseDistance { r, .. } => {
            for (n, &a) in s.iter().enumerate() {
                for &b in &s[n + 1..] {
                    if p.min_region_distance(a, b) < *r {
                        return false;
                    }
                }
            }
            true
        }
        Model::RegionGraph(g) => g.set_independent(s),
    }
}

#[derive(Debug)]
pub struct ValidationCheck {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug)]
pub struct ValidationReport {
    pub checks: Vec<ValidationCheck>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

impl std::fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for c in &self.checks {
            writeln!(f, "[{}] {}: {}", if c.passed { "ok" } else { "FAIL" }, c.name, c.detail)?;
        }
        Ok(())
    }
}

/// Structural checks tying a partition to a model: equal-measure cover,
/// block divisibility, every canonical block guaranteed, and same-region
/// exclusivity (two particles in one region always conflict, so at most one
/// particle per region can be removed in a slot).
pub fn validate_partition(p: &Partition, model: &Model) -> ValidationReport {
    let mut checks = Vec::new();
    let k = p.k();
    let mu = p.mu();

    let mut starts: Vec<f64> = (0..k).map(|i| p.region_interval(i).0).collect();
    starts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let cover = starts
        .iter()
        .enumerate()
        .all(|(c, &lo)| lo == c as f64 / k as f64);
    checks.push(ValidationCheck {
        name: "equal-measure-cover",
        passed: cover,
        detail: format!("{k} half-open intervals of length 1/{k} tile the circle"),
    });

    let mu_ok = mu == model.max_admissible_size() && k % mu == 0;
    checks.push(ValidationCheck {
        name: "block-divisibility",
        passed: mu_ok,
        detail: format!("mu = {mu}, K = {k}"),
    });

    let bad_block = p
        .distinct_blocks()
        .find(|b| !is_guaranteed(&b.clone().collect::<Vec<_>>(), p, model));
    checks.push(ValidationCheck {
        name: "blocks-guaranteed",
        passed: bad_block.is_none(),
        detail: match bad_block {
            None => format!("all {} blocks guaranteed", k / mu.max(1)),
            Some(b) => format!("block {:?} is not guaranteed", b),
        },
    });

    let exclusive = match model {
        Model::PairwiseDistance { r, .. } => 1.0 / k as f64 <= *r,
        Model::RegionGraph(_) => true,
    };
    checks.push(ValidationCheck {
        name: "single-region-exclusivity",
        passed: exclusive,
        detail: "same-region particles always conflict".to_string(),
    });

    ValidationReport { checks }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::build_partition;
    use rand::Rng;
    use rand::SeedableRng;

    fn parts(locs: &[f64]) -> Vec<Particle> {
        locs.iter()
            .enumerate()
            .map(|(i, &x)| Particle::new(i as u64, x))
            .collect()
    }

    #[test]
    fn pairwise_admissibility_examples() {
        let m = Model::pairwise(0.49).unwrap();
        assert!(m.is_admissible(&[]));
        assert!(m.is_admissible(&parts(&[0.0, 0.5])));
        assert!(!m.is_admissible(&parts(&[0.0, 0.3])));
        assert!(!m.is_admissible(&parts(&[0.2, 0.2])));
        assert!(m.is_admissible(&parts(&[0.55, 0.06])));
        assert_eq!(m.max_admissible_size(), 2);
    }

    #[test]
    fn integer_reciprocal_forbids_exact_spacings() {
        let m = Model::pairwise(0.5).unwrap();
        assert_eq!(m.max_admissible_size(), 1);
        assert!(m.is_admissible(&parts(&[0.0])));
        // antipodal pair meets the distance constraint but has the excluded size
        assert!(!m.is_admissible(&parts(&[0.0, 0.5])));
        let m3 = Model::pairwise(1.0 / 4.0).unwrap();
        assert_eq!(m3.max_admissible_size(), 3);
        assert!(m3.is_admissible(&parts(&[0.0, 0.25, 0.5])));
        assert!(!m3.is_admissible(&parts(&[0.0, 0.25, 0.5, 0.75])));
    }

    #[test]
    fn subsets_of_admissible_sets_are_admissible() {
        // Monotonicity can only break through the forbidden-size rule, which
        // applies to no subset of an admissible set (sizes only shrink and the
        // forbidden size exceeds the largest admissible size).
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for _ in 0..2000 {
            let r = [0.2, 0.33, 0.49, 0.5][rng.random_range(0..4)];
            let m = Model::pairwise(r).unwrap();
            let n = rng.random_range(1..=6);
            let set = parts(&(0..n).map(|_| rng.random::<f64>()).collect::<Vec<_>>());
            if !m.is_admissible(&set) {
                continue;
            }
            for mask in 0u32..(1 << n) {
                let sub: Vec<Particle> = (0..n)
                    .filter(|i| mask & (1 << i) != 0)
                    .map(|i| set[i])
                    .collect();
                assert!(m.is_admissible(&sub));
            }
        }
    }

    #[test]
    fn no_admissible_set_exceeds_mu() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(6);
        for _ in 0..100_000 {
            let r = [0.2, 0.3, 0.49, 0.5][rng.random_range(0..4)];
            let m = Model::pairwise(r).unwrap();
            let n = m.max_admissible_size() + 1;
            let set = parts(&(0..n).map(|_| rng.random::<f64>()).collect::<Vec<_>>());
            assert!(!m.is_admissible(&set));
        }
    }

    #[test]
    fn region_graph_admissibility() {
        // two regions, no conflict: both halves can be served together
        let m = Model::region_graph(2, &[]).unwrap();
        assert_eq!(m.max_admissible_size(), 2);
        assert!(m.is_admissible(&parts(&[0.1, 0.9])));
        assert!(!m.is_admissible(&parts(&[0.1, 0.2])), "same region");

        // path 0-2-1-3 relabeled so consecutive blocks {0,1}, {2,3} stay independent
        let m = Model::region_graph(4, &[(0, 2), (1, 2), (1, 3)]).unwrap();
        assert_eq!(m.max_admissible_size(), 2);
        assert!(m.is_admissible(&parts(&[0.1, 0.3])), "regions 0 and 1");
        assert!(!m.is_admissible(&parts(&[0.1, 0.6])), "regions 0 and 2 conflict");
    }

    #[test]
    fn region_graph_constructor_validates_blocks() {
        // triangle: independence number 1, divides 3, blocks are singletons
        assert!(Model::region_graph(3, &[(0, 1), (1, 2), (0, 2)]).is_ok());
        // path on 3: independence number 2 does not divide 3
        assert!(matches!(
            Model::region_graph(3, &[(0, 1), (1, 2)]),
            Err(ModelError::AlphaNotDividing { alpha: 2, k: 3 })
        ));
        // edge inside the first block
        assert!(matches!(
            Model::region_graph(4, &[(0, 1), (0, 2), (1, 3), (0, 3), (1, 2)]),
            Err(ModelError::BlockNotIndependent { m: 0 })
        ));
        assert!(Model::region_graph(0, &[]).is_err());
        assert!(Model::region_graph(2, &[(0, 0)]).is_err());
    }

    #[test]
    fn guaranteed_sets_on_the_interleaved_partition() {
        let m = Model::pairwise(0.49).unwrap();
        let p = build_partition(0.49, None).unwrap();
        assert!(is_guaranteed(&[], &p, &m));
        assert!(is_guaranteed(&[0], &p, &m));
        assert!(is_guaranteed(&[0, 1], &p, &m), "canonical block");
        assert!(!is_guaranteed(&[0, 2], &p, &m), "adjacent cells");
        assert!(!is_guaranteed(&[0, 1, 2], &p, &m), "exceeds mu");
    }

    #[test]
    fn validate_partition_passes_for_canonical_layouts() {
        for r in [0.3, 0.49, 0.5] {
            let m = Model::pairwise(r).unwrap();
            let p = build_partition(r, None).unwrap();
            let report = validate_partition(&p, &m);
            assert!(report.passed(), "r={r}:\n{report}");
        }
        let m = Model::region_graph(4, &[(0, 2), (1, 2), (1, 3)]).unwrap();
        let p = m.default_partition(None).unwrap();
        assert!(validate_partition(&p, &m).passed());
    }

    #[test]
    fn validate_partition_flags_mismatched_mu() {
        let m = Model::pairwise(0.49).unwrap();
        // a legal partition for a different radius: mu = 3 instead of 2
        let p = build_partition(0.3, None).unwrap();
        let report = validate_partition(&p, &m);
        assert!(!report.passed());
    }

    #[test]
    fn configuration_keeps_sorted_order() {
        let mut y = Configuration::from_locations(&[0.7, 0.1, 0.4]);
        assert_eq!(y.locations(), vec![0.1, 0.4, 0.7]);
        y.insert(Particle::new(10, 0.05));
        y.insert_many(&[Particle::new(11, 0.9), Particle::new(12, 0.2)]);
        assert_eq!(y.locations(), vec![0.05, 0.1, 0.2, 0.4, 0.7, 0.9]);
        y.remove_sorted_indices(&[0, 3]);
        assert_eq!(y.locations(), vec![0.1, 0.2, 0.7, 0.9]);
        y.remove_sorted_indices(&[]);
        assert_eq!(y.len(), 4);
    }

    #[test]
    fn equal_locations_order_by_id() {
        let mut y = Configuration::new();
        y.insert(Particle::new(5, 0.3));
        y.insert(Particle::new(2, 0.3));
        y.insert(Particle::new(9, 0.3));
        let ids: Vec<u64> = y.particles().iter().map(|p| p.id).collect();
        assert_eq!(ids, vec![2, 5, 9]);
    }
}
