//! Geometry of the unit circle: the circular metric, the size structure
//! implied by an interference radius, and the interleaved equal-measure
//! partition whose consecutive index blocks are guaranteed region sets.

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum GeometryError {
    #[error("interference radius must be a finite number in (0, 1), got {0}")]
    InvalidRadius(f64),
    #[error("region count must be positive")]
    EmptyPartition,
    #[error("region count {k} is not a multiple of mu = {mu}")]
    KNotMultiple { k: usize, mu: usize },
    #[error("region count {k} violates the feasibility bound 2*mu/(1-mu*r) = {bound} for r = {r}")]
    KTooSmall { k: usize, r: f64, bound: f64 },
}

/// Map an arbitrary finite coordinate to its representative in [0, 1).
pub fn normalize(x: f64) -> f64 {
    assert!(x.is_finite(), "location must be finite");
    let y = x.rem_euclid(1.0);
    if y >= 1.0 {
        0.0
    } else {
        y
    }
}

/// Circular distance on [0, 1): length of the shorter arc between two points.
pub fn circ_distance(x: f64, w: f64) -> f64 {
    debug_assert!((0.0..1.0).contains(&x) && (0.0..1.0).contains(&w));
    let d = (x - w).abs();
    d.min(1.0 - d)
}

/// Size structure implied by the interference radius.
///
/// `mu` is the largest attainable admissible set size. When `1/r` is an
/// integer `m`, sets of size `m` exist only as exact equal spacings of the
/// circle; they are excluded outright and `mu = m - 1`. Otherwise
/// `mu = floor(1/r)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RadiusProfile {
    pub mu: usize,
    pub forbidden_size: Option<usize>,
}

pub fn radius_profile(r: f64) -> Result<RadiusProfile, GeometryError> {
    if !r.is_finite() || r <= 0.0 || r >= 1.0 {
        return Err(GeometryError::InvalidRadius(r));
    }
    let inv = 1.0 / r;
    if inv.fract() == 0.0 {
        let m = inv as usize;
        Ok(RadiusProfile {
            mu: m - 1,
            forbidden_size: Some(m),
        })
    } else {
        Ok(RadiusProfile {
            mu: inv.floor() as usize,
            forbidden_size: None,
        })
    }
}

/// Largest admissible set size for radius `r`.
pub fn mu_for_radius(r: f64) -> Result<usize, GeometryError> {
    radius_profile(r).map(|p| p.mu)
}

/// A partition of the circle into `K` half-open arcs of equal length `1/K`,
/// with region indices laid out so that every block of `mu` consecutive
/// indices is spread around the circle at pairwise arc distance about
/// `1/mu`. All endpoints are integer multiples of `1/K`, so interval
/// relations are decided in exact integer arithmetic.
#[derive(Clone, Debug, PartialEq)]
pub struct Partition {
    k: usize,
    mu: usize,
    /// cells[i] = index c of the arc [c/K, (c+1)/K) that region i occupies.
    cells: Vec<usize>,
    /// Inverse of `cells`.
    region_at_cell: Vec<usize>,
}

impl Partition {
    /// The interleaved layout: region i (0-based) occupies cell
    /// `floor(i/mu) + (K/mu) * (i mod mu)`.
    ///
    /// When `k` is omitted, picks the smallest multiple of `mu` satisfying
    /// the guarantee bound `K * (1 - mu*r) >= 2*mu`.
    pub fn interleaved(r: f64, k: Option<usize>) -> Result<Partition, GeometryError> {
        let profile = radius_profile(r)?;
        let mu = profile.mu;
        let slack = 1.0 - mu as f64 * r;
        if slack <= 0.0 {
            return Err(GeometryError::InvalidRadius(r));
        }
        let bound = 2.0 * mu as f64 / slack;
        let feasible = |k: usize| k as f64 * slack >= 2.0 * mu as f64;
        let k = match k {
            Some(k) => {
                if k == 0 {
                    return Err(GeometryError::EmptyPartition);
                }
                if k % mu != 0 {
                    return Err(GeometryError::KNotMultiple { k, mu });
                }
                if !feasible(k) {
                    return Err(GeometryError::KTooSmall { k, r, bound });
                }
                k
            }
            None => {
                let mut k = mu * ((bound / mu as f64).floor().max(1.0) as usize);
                while !feasible(k) {
                    k += mu;
                }
                k
            }
        };
        let stride = k / mu;
        let cells: Vec<usize> = (0..k).map(|i| i / mu + stride * (i % mu)).collect();
        Ok(Self::from_cells(mu, cells))
    }

    /// Identity layout: region i occupies cell i. Used for abstract
    /// region-conflict models where indices carry no circle geometry.
    pub fn uniform(k: usize, mu: usize) -> Result<Partition, GeometryError> {
        if k == 0 || mu == 0 {
            return Err(GeometryError::EmptyPartition);
        }
        if k % mu != 0 {
            return Err(GeometryError::KNotMultiple { k, mu });
        }
        Ok(Self::from_cells(mu, (0..k).collect()))
    }

    fn from_cells(mu: usize, cells: Vec<usize>) -> Partition {
        let k = cells.len();
        let mut region_at_cell = vec![usize::MAX; k];
        for (i, &c) in cells.iter().enumerate() {
            assert!(c < k && region_at_cell[c] == usize::MAX, "cells must be a permutation");
            region_at_cell[c] = i;
        }
        Partition { k, mu, cells, region_at_cell }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn mu(&self) -> usize {
        self.mu
    }

    /// Half-open interval [lo, hi) of region `i`.
    pub fn region_interval(&self, i: usize) -> (f64, f64) {
        let c = self.cells[i];
        (c as f64 / self.k as f64, (c + 1) as f64 / self.k as f64)
    }

    /// Arc index occupied by region `i`.
    pub fn cell_of_region(&self, i: usize) -> usize {
        self.cells[i]
    }

    /// Region occupying arc `c`.
    pub fn region_in_cell(&self, c: usize) -> usize {
        self.region_at_cell[c]
    }

    /// Region containing location `x`.
    pub fn region_of(&self, x: f64) -> usize {
        assert!((0.0..1.0).contains(&x), "location out of range: {x}");
        let kf = self.k as f64;
        let mut c = ((x * kf).floor() as usize).min(self.k - 1);
        // Re-check the half-open bracket in the same arithmetic the interval
        // accessor uses, so membership and lookup can never disagree.
        if x < c as f64 / kf {
            c -= 1;
        } else if x >= (c + 1) as f64 / kf {
            c += 1;
        }
        self.region_at_cell[c]
    }

    /// Smallest circular distance between the closures of two distinct
    /// regions, computed exactly from whole-cell gaps.
    pub fn min_region_distance(&self, i: usize, j: usize) -> f64 {
        assert!(i != j, "min_region_distance needs two distinct regions");
        let k = self.k as i64;
        let ci = self.cells[i] as i64;
        let cj = self.cells[j] as i64;
        let fwd = (cj - ci - 1).rem_euclid(k);
        let bwd = (ci - cj - 1).rem_euclid(k);
        fwd.min(bwd) as f64 / self.k as f64
    }

    /// Indices of the block of `mu` consecutive regions containing `region`.
    pub fn block_of(&self, region: usize) -> std::ops::Range<usize> {
        assert!(region < self.k);
        let m = region / self.mu;
        m * self.mu..(m + 1) * self.mu
    }

    /// The `K/mu` distinct consecutive-index blocks.
    pub fn distinct_blocks(&self) -> impl Iterator<Item = std::ops::Range<usize>> + '_ {
        (0..self.k / self.mu).map(|m| m * self.mu..(m + 1) * self.mu)
    }

    /// One block per region index, as index sets (entry i is the block
    /// containing region i, so consecutive entries repeat).
    pub fn canonical_blocks(&self) -> Vec<Vec<usize>> {
        (0..self.k).map(|i| self.block_of(i).collect()).collect()
    }
}

/// Convenience alias for the interleaved constructor.
pub fn build_partition(r: f64, k: Option<usize>) -> Result<Partition, GeometryError> {
    Partition::interleaved(r, k)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;

    #[test]
    fn circ_distance_basics() {
        assert!((circ_distance(0.1, 0.7) - 0.4).abs() < 1e-15);
        assert_eq!(circ_distance(0.3, 0.3), 0.0);
        assert!((circ_distance(0.0, 0.5) - 0.5).abs() < 1e-15);
        // symmetry and the triangle inequality on a seeded sample
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..10_000 {
            let (x, y, z): (f64, f64, f64) = (rng.random(), rng.random(), rng.random());
            let dxy = circ_distance(x, y);
            assert_eq!(dxy, circ_distance(y, x));
            assert!(dxy <= 0.5 + 1e-15);
            assert!(dxy <= circ_distance(x, z) + circ_distance(z, y) + 1e-12);
        }
    }

    #[test]
    fn normalize_reduces_mod_one() {
        assert_eq!(normalize(1.25), 0.25);
        assert_eq!(normalize(-0.25), 0.75);
        assert_eq!(normalize(0.0), 0.0);
        assert!(normalize(1.0 - 1e-17) < 1.0);
    }

    #[test]
    fn mu_for_radius_examples() {
        assert_eq!(mu_for_radius(0.49).unwrap(), 2);
        assert_eq!(mu_for_radius(0.5).unwrap(), 1);
        assert_eq!(mu_for_radius(0.3).unwrap(), 3);
        assert_eq!(mu_for_radius(0.33).unwrap(), 3);
        assert!(mu_for_radius(0.0).is_err());
        assert!(mu_for_radius(1.0).is_err());
        assert!(mu_for_radius(-0.2).is_err());
        assert!(mu_for_radius(f64::NAN).is_err());
    }

    #[test]
    fn integer_reciprocal_has_forbidden_size() {
        assert_eq!(
            radius_profile(0.5).unwrap(),
            RadiusProfile { mu: 1, forbidden_size: Some(2) }
        );
        assert_eq!(
            radius_profile(0.25).unwrap(),
            RadiusProfile { mu: 3, forbidden_size: Some(4) }
        );
        assert_eq!(
            radius_profile(0.49).unwrap(),
            RadiusProfile { mu: 2, forbidden_size: None }
        );
    }

    #[test]
    fn interleaved_partition_for_r049() {
        let p = build_partition(0.49, None).unwrap();
        assert_eq!(p.k(), 200);
        assert_eq!(p.mu(), 2);
        let (lo, hi) = p.region_interval(0);
        assert_eq!((lo, hi), (0.0, 1.0 / 200.0));
        let (lo, hi) = p.region_interval(1);
        assert_eq!((lo, hi), (100.0 / 200.0, 101.0 / 200.0));
        assert_eq!(p.region_of(0.0), 0);
        assert_eq!(p.region_of(0.5), 1);
        assert_eq!(p.region_of(0.006), 2);
    }

    #[test]
    fn auto_k_is_the_smallest_feasible_multiple_of_mu() {
        // Independent evaluation of the bound for a grid of radii.
        for r in [0.3, 0.49, 0.45, 0.21, 0.11, 0.5, 0.77] {
            let profile = radius_profile(r).unwrap();
            let mu = profile.mu;
            let p = build_partition(r, None).unwrap();
            let k = p.k();
            let slack = 1.0 - mu as f64 * r;
            assert_eq!(k % mu, 0, "r={r}");
            assert!(k as f64 * slack >= 2.0 * mu as f64, "r={r}, k={k}");
            assert!(
                k == mu || ((k - mu) as f64) * slack < 2.0 * mu as f64,
                "r={r}: k={k} is not minimal"
            );
        }
        // Spot values derived by hand from the bound.
        assert_eq!(build_partition(0.3, None).unwrap().k(), 60);
        assert_eq!(build_partition(0.5, None).unwrap().k(), 4);
    }

    #[test]
    fn explicit_k_is_validated() {
        assert_eq!(build_partition(0.49, Some(300)).unwrap().k(), 300);
        assert!(matches!(
            build_partition(0.49, Some(201)),
            Err(GeometryError::KNotMultiple { .. })
        ));
        assert!(matches!(
            build_partition(0.49, Some(100)),
            Err(GeometryError::KTooSmall { .. })
        ));
    }

    #[test]
    fn region_of_agrees_with_interval_membership() {
        let p = build_partition(0.49, None).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100_000 {
            let x: f64 = rng.random();
            let i = p.region_of(x);
            let (lo, hi) = p.region_interval(i);
            assert!(lo <= x && x < hi, "x={x} not in [{lo},{hi})");
        }
        // boundary points land in the right half-open interval
        for c in 0..p.k() {
            let x = c as f64 / p.k() as f64;
            let i = p.region_of(x);
            let (lo, hi) = p.region_interval(i);
            assert!(lo <= x && x < hi);
            assert_eq!(lo, x);
        }
    }

    #[test]
    fn intervals_tile_the_circle_exactly() {
        for (r, k) in [(0.49, None), (0.3, None), (0.5, Some(8))] {
            let p = build_partition(r, k).unwrap();
            let mut starts: Vec<f64> = (0..p.k()).map(|i| p.region_interval(i).0).collect();
            starts.sort_by(|a, b| a.partial_cmp(b).unwrap());
            for (c, lo) in starts.iter().enumerate() {
                assert_eq!(*lo, c as f64 / p.k() as f64);
            }
        }
    }

    #[test]
    fn min_region_distance_examples() {
        let p = build_partition(0.49, None).unwrap();
        assert_eq!(p.min_region_distance(0, 1), 99.0 / 200.0);
        assert_eq!(p.min_region_distance(1, 0), 99.0 / 200.0);
        // regions 0 and 2 sit in adjacent cells
        assert_eq!(p.min_region_distance(0, 2), 0.0);
    }

    #[test]
    #[should_panic(expected = "distinct regions")]
    fn min_region_distance_rejects_equal_indices() {
        let p = build_partition(0.49, None).unwrap();
        let _ = p.min_region_distance(3, 3);
    }

    #[test]
    fn blocks_group_consecutive_indices() {
        let p = build_partition(0.49, None).unwrap();
        assert_eq!(p.block_of(0), 0..2);
        assert_eq!(p.block_of(1), 0..2);
        assert_eq!(p.block_of(2), 2..4);
        assert_eq!(p.distinct_blocks().count(), 100);
        let blocks = p.canonical_blocks();
        assert_eq!(blocks.len(), 200);
        assert_eq!(blocks[0], vec![0, 1]);
        assert_eq!(blocks[1], vec![0, 1]);
        assert_eq!(blocks[199], vec![198, 199]);
    }

    #[test]
    fn uniform_layout_is_identity() {
        let p = Partition::uniform(6, 3).unwrap();
        assert_eq!(p.region_of(0.51), 3);
        assert_eq!(p.region_interval(2), (2.0 / 6.0, 3.0 / 6.0));
        assert!(Partition::uniform(7, 3).is_err());
    }
}
