//! Deterministic generators for initial seed positions and target volumes.
//!
//! Positions and targets are pure functions of a spec plus a 64-bit RNG
//! seed, using a fixed portable generator (ChaCha8), so fixtures reproduce
//! across platforms and thread counts.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal};
use thiserror::Error;

use crate::diagram::Domain;
use crate::vec;

#[derive(Debug, Error)]
pub enum SeedingError {
    #[error("spec provides {got} positions but {expected} targets were given")]
    CountMismatch { expected: usize, got: usize },
    #[error("position {index} lies outside the domain")]
    OutOfDomain { index: usize },
    #[error("positions {i} and {j} are closer than the minimum separation")]
    TooClose { i: usize, j: usize },
    #[error("axis {axis} out of range for dimension {dim}")]
    BadAxis { axis: usize, dim: usize },
    #[error("class {class} has no sampling regions (only {classes} region lists)")]
    MissingClass { class: usize, classes: usize },
    #[error("invalid spec: {0}")]
    BadSpec(&'static str),
    #[error("could not place point {index} after {attempts} attempts")]
    InfeasibleSpec { index: usize, attempts: usize },
}

/// A sampling region in absolute domain coordinates.
#[derive(Clone, Copy, Debug)]
pub enum Region<const D: usize> {
    Box { lower: [f64; D], upper: [f64; D] },
    Ball { center: [f64; D], radius: f64 },
}

impl<const D: usize> Region<D> {
    fn validate(&self) -> Result<(), SeedingError> {
        match self {
            Region::Box { lower, upper } => {
                if (0..D).any(|k| !(lower[k] < upper[k]) || !lower[k].is_finite()) {
                    return Err(SeedingError::BadSpec("box region needs lower < upper"));
                }
            }
            Region::Ball { center, radius } => {
                if !(*radius > 0.0) || center.iter().any(|c| !c.is_finite()) {
                    return Err(SeedingError::BadSpec("ball region needs radius > 0"));
                }
            }
        }
        Ok(())
    }

    fn measure(&self) -> f64 {
        match self {
            Region::Box { lower, upper } => (0..D).map(|k| upper[k] - lower[k]).product(),
            Region::Ball { radius, .. } => match D {
                2 => std::f64::consts::PI * radius * radius,
                3 => 4.0 / 3.0 * std::f64::consts::PI * radius.powi(3),
                _ => unreachable!("diagrams are 2D or 3D"),
            },
        }
    }

    /// Uniform draw from the region (rejection from the bounding box for
    /// balls); the caller rejects points outside the domain.
    fn sample(&self, rng: &mut ChaCha8Rng) -> [f64; D] {
        match self {
            Region::Box { lower, upper } => {
                let mut p = [0.0; D];
                for k in 0..D {
                    p[k] = rng.random_range(lower[k]..upper[k]);
                }
                p
            }
            Region::Ball { center, radius } => loop {
                let mut p = [0.0; D];
                for k in 0..D {
                    p[k] = rng.random_range(center[k] - radius..center[k] + radius);
                }
                if vec::dist_sq(p, *center) <= radius * radius {
                    return p;
                }
            },
        }
    }
}

/// Where the seeds go. Banded, clustered and mixed layouts all lower to
/// `Classes`: seeds are split into size classes by target-volume
/// thresholds, and each class samples uniformly from its own region union.
#[derive(Clone, Debug)]
pub enum SpatialSpec<const D: usize> {
    /// Uniform over the whole domain.
    Uniform,
    /// Caller-provided positions, validated for count, containment and
    /// separation.
    Explicit(Vec<[f64; D]>),
    /// Coordinate along `axis` increases strictly with target volume; the
    /// remaining coordinates are uniform.
    Gradient { axis: usize },
    /// `class(m) = #{t in thresholds : m > t}` selects the region list to
    /// sample from. Region unions are assumed disjoint.
    Classes {
        thresholds: Vec<f64>,
        regions: Vec<Vec<Region<D>>>,
    },
}

impl<const D: usize> SpatialSpec<D> {
    /// Banded layout: per-class interval lists (fractions of the axis
    /// extent), each lowered to a full-width box slab.
    pub fn banded(
        domain: &Domain<D>,
        axis: usize,
        thresholds: Vec<f64>,
        class_bands: &[Vec<[f64; 2]>],
    ) -> Result<Self, SeedingError> {
        if axis >= D {
            return Err(SeedingError::BadAxis { axis, dim: D });
        }
        let lower = domain.lower();
        let upper = domain.upper();
        let extent = upper[axis] - lower[axis];
        let mut regions = Vec::with_capacity(class_bands.len());
        for bands in class_bands {
            if bands.is_empty() {
                return Err(SeedingError::BadSpec("class without bands"));
            }
            let mut list = Vec::with_capacity(bands.len());
            for &[lo, hi] in bands {
                if !(0.0 <= lo && lo < hi && hi <= 1.0) {
                    return Err(SeedingError::BadSpec(
                        "band fractions need 0 <= lo < hi <= 1",
                    ));
                }
                let mut blo = lower;
                let mut bhi = upper;
                blo[axis] = lower[axis] + lo * extent;
                bhi[axis] = lower[axis] + hi * extent;
                list.push(Region::Box {
                    lower: blo,
                    upper: bhi,
                });
            }
            regions.push(list);
        }
        Ok(SpatialSpec::Classes {
            thresholds,
            regions,
        })
    }

    /// General per-class regions (clusters, mixed layouts).
    pub fn classes(
        thresholds: Vec<f64>,
        regions: Vec<Vec<Region<D>>>,
    ) -> Result<Self, SeedingError> {
        if regions.is_empty() || regions.iter().any(|r| r.is_empty()) {
            return Err(SeedingError::BadSpec("every class needs regions"));
        }
        for list in &regions {
            for r in list {
                r.validate()?;
            }
        }
        if thresholds.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(SeedingError::BadSpec("thresholds must increase strictly"));
        }
        Ok(SpatialSpec::Classes {
            thresholds,
            regions,
        })
    }
}

/// What the target volumes look like. Generated targets are always
/// normalised so they sum exactly to the domain volume.
#[derive(Clone, Debug)]
pub enum VolumeSpec {
    /// Caller-provided volumes, rescaled proportionally.
    Explicit(Vec<f64>),
    /// `small` grains of volume x and `large` grains of volume `ratio * x`.
    Bimodal {
        small: usize,
        large: usize,
        ratio: f64,
    },
    /// Volumes proportional to r^D with radii log-normal of the given mean
    /// and standard deviation.
    Lognormal { count: usize, mean: f64, sd: f64 },
    /// Volumes uniform in [1, max_ratio] before normalisation, bounding the
    /// largest-to-smallest ratio.
    UniformRatio { count: usize, max_ratio: f64 },
}

/// Generates target volumes summing exactly to the domain volume.
pub fn make_targets<const D: usize>(
    spec: &VolumeSpec,
    domain: &Domain<D>,
    rng_seed: u64,
) -> Result<Vec<f64>, SeedingError> {
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut raw = match spec {
        VolumeSpec::Explicit(values) => {
            if values.is_empty() {
                return Err(SeedingError::BadSpec("no target volumes"));
            }
            if values.iter().any(|&v| !(v.is_finite() && v > 0.0)) {
                return Err(SeedingError::BadSpec("targets must be positive and finite"));
            }
            values.clone()
        }
        VolumeSpec::Bimodal {
            small,
            large,
            ratio,
        } => {
            if small + large == 0 {
                return Err(SeedingError::BadSpec("bimodal spec with zero grains"));
            }
            if !(ratio.is_finite() && *ratio > 0.0) {
                return Err(SeedingError::BadSpec("bimodal ratio must be positive"));
            }
            let mut v = vec![1.0; *small];
            v.extend(std::iter::repeat_n(*ratio, *large));
            v
        }
        VolumeSpec::Lognormal { count, mean, sd } => {
            if *count == 0 {
                return Err(SeedingError::BadSpec("lognormal spec with zero grains"));
            }
            if !(mean.is_finite() && *mean > 0.0 && sd.is_finite() && *sd >= 0.0) {
                return Err(SeedingError::BadSpec("lognormal needs mean > 0 and sd >= 0"));
            }
            if *sd == 0.0 {
                vec![1.0; *count]
            } else {
                // Radii log-normal with the requested mean and sd:
                // sigma^2 = log(1 + (sd/mean)^2), mu = log(mean) - sigma^2/2.
                let sigma2 = (1.0 + (sd / mean).powi(2)).ln();
                let mu = mean.ln() - 0.5 * sigma2;
                let dist = LogNormal::new(mu, sigma2.sqrt())
                    .map_err(|_| SeedingError::BadSpec("degenerate lognormal"))?;
                (0..*count)
                    .map(|_| dist.sample(&mut rng).powi(D as i32))
                    .collect()
            }
        }
        VolumeSpec::UniformRatio { count, max_ratio } => {
            if *count == 0 {
                return Err(SeedingError::BadSpec("uniform-ratio spec with zero grains"));
            }
            if !(max_ratio.is_finite() && *max_ratio >= 1.0) {
                return Err(SeedingError::BadSpec("max_ratio must be >= 1"));
            }
            (0..*count)
                .map(|_| rng.random_range(1.0..=*max_ratio))
                .collect()
        }
    };
    // Two passes push the sum to within a few ulps of the domain volume.
    for _ in 0..2 {
        let sum: f64 = raw.iter().sum();
        let scale = domain.volume() / sum;
        raw.iter_mut().for_each(|v| *v *= scale);
    }
    Ok(raw)
}

/// Samples one position per target, deterministic in `rng_seed`. Points
/// keep a minimum pairwise separation of `1e-6 * diam` (reject and
/// resample); class membership is exact by construction.
pub fn sample_positions<const D: usize>(
    spec: &SpatialSpec<D>,
    domain: &Domain<D>,
    targets: &[f64],
    rng_seed: u64,
) -> Result<Vec<[f64; D]>, SeedingError> {
    let n = targets.len();
    if n == 0 {
        return Err(SeedingError::BadSpec("no targets, no positions"));
    }
    let min_sep = 1e-6 * domain.diameter();
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    match spec {
        SpatialSpec::Explicit(points) => {
            if points.len() != n {
                return Err(SeedingError::CountMismatch {
                    expected: n,
                    got: points.len(),
                });
            }
            for (i, p) in points.iter().enumerate() {
                if !domain.contains(*p) {
                    return Err(SeedingError::OutOfDomain { index: i });
                }
                for (j, q) in points[..i].iter().enumerate() {
                    if domain.dist_sq(*p, *q).sqrt() < min_sep {
                        return Err(SeedingError::TooClose { i: j, j: i });
                    }
                }
            }
            Ok(points.clone())
        }
        SpatialSpec::Uniform => {
            let lower = domain.lower();
            let upper = domain.upper();
            draw_separated(n, min_sep, domain, &mut rng, |rng, _| {
                let mut p = [0.0; D];
                for k in 0..D {
                    p[k] = rng.random_range(lower[k]..upper[k]);
                }
                Some(p)
            })
        }
        SpatialSpec::Gradient { axis } => {
            let axis = *axis;
            if axis >= D {
                return Err(SeedingError::BadAxis { axis, dim: D });
            }
            let lower = domain.lower();
            let upper = domain.upper();
            // Rank seeds by target volume; the i-th smallest gets the i-th
            // slot along the axis, making coordinate order match volume
            // order exactly.
            let mut order: Vec<usize> = (0..n).collect();
            order.sort_by(|&a, &b| targets[a].total_cmp(&targets[b]).then(a.cmp(&b)));
            let slot = (upper[axis] - lower[axis]) / n as f64;
            let mut rank = vec![0usize; n];
            for (r, &i) in order.iter().enumerate() {
                rank[i] = r;
            }
            draw_separated(n, min_sep, domain, &mut rng, |rng, i| {
                let mut p = [0.0; D];
                for k in 0..D {
                    p[k] = rng.random_range(lower[k]..upper[k]);
                }
                p[axis] = lower[axis] + (rank[i] as f64 + rng.random_range(0.0..1.0)) * slot;
                Some(p)
            })
        }
        SpatialSpec::Classes {
            thresholds,
            regions,
        } => {
            let class_of = |m: f64| thresholds.iter().filter(|&&t| m > t).count();
            // Cumulative region measures per class, for area-proportional
            // region choice.
            let mut cum: Vec<Vec<f64>> = Vec::with_capacity(regions.len());
            for list in regions {
                let mut acc = 0.0;
                cum.push(
                    list.iter()
                        .map(|r| {
                            acc += r.measure();
                            acc
                        })
                        .collect(),
                );
            }
            for &m in targets {
                let c = class_of(m);
                if c >= regions.len() {
                    return Err(SeedingError::MissingClass {
                        class: c,
                        classes: regions.len(),
                    });
                }
            }
            draw_separated(n, min_sep, domain, &mut rng, |rng, i| {
                let c = class_of(targets[i]);
                let weights = &cum[c];
                let total = *weights.last().unwrap();
                let pick = rng.random_range(0.0..total);
                let r = weights.partition_point(|&w| w <= pick);
                let p = regions[c][r.min(weights.len() - 1)].sample(rng);
                domain.contains(p).then_some(p)
            })
        }
    }
}

/// Draws `n` points through `gen`, enforcing the minimum pairwise
/// separation (periodic metric on periodic domains) by rejection.
fn draw_separated<const D: usize>(
    n: usize,
    min_sep: f64,
    domain: &Domain<D>,
    rng: &mut ChaCha8Rng,
    mut gen: impl FnMut(&mut ChaCha8Rng, usize) -> Option<[f64; D]>,
) -> Result<Vec<[f64; D]>, SeedingError> {
    const ATTEMPTS: usize = 1000;
    let sep_sq = min_sep * min_sep;
    let mut points: Vec<[f64; D]> = Vec::with_capacity(n);
    for i in 0..n {
        let mut placed = false;
        for _ in 0..ATTEMPTS {
            let Some(p) = gen(rng, i) else {
                continue;
            };
            if points.iter().all(|&q| domain.dist_sq(p, q) >= sep_sq) {
                points.push(p);
                placed = true;
                break;
            }
        }
        if !placed {
            return Err(SeedingError::InfeasibleSpec {
                index: i,
                attempts: ATTEMPTS,
            });
        }
    }
    Ok(points)
}
