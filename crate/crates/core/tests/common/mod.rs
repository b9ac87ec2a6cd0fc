//! Shared fixtures for the integration suites: deterministic scatter of
//! seed positions, bounded random weights, and target helpers.
#![allow(dead_code)]

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use laguerre::{Domain, WeightedSeed};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `n` positions uniform in the box with a crude minimum separation, so
/// fixtures never trip the coincident-seed guard.
pub fn scatter<const D: usize>(
    domain: &Domain<D>,
    n: usize,
    rng: &mut ChaCha8Rng,
) -> Vec<[f64; D]> {
    let lower = domain.lower();
    let upper = domain.upper();
    let min_sep = 1e-5 * domain.diameter();
    let mut points: Vec<[f64; D]> = Vec::with_capacity(n);
    'next: while points.len() < n {
        let mut p = [0.0; D];
        for k in 0..D {
            p[k] = rng.random_range(lower[k]..upper[k]);
        }
        for &q in &points {
            if domain.dist_sq(p, q) < min_sep * min_sep {
                continue 'next;
            }
        }
        points.push(p);
    }
    points
}

/// Random weights with spread on the order of the squared mean seed
/// spacing: large enough to move facets and empty the odd cell, small
/// enough that diagrams stay well conditioned.
pub fn random_weights<const D: usize>(
    domain: &Domain<D>,
    n: usize,
    rng: &mut ChaCha8Rng,
) -> Vec<f64> {
    let spacing_sq = (domain.volume() / n as f64).powf(2.0 / D as f64);
    (0..n)
        .map(|_| rng.random_range(-0.3..0.3) * spacing_sq)
        .collect()
}

pub fn weighted<const D: usize>(
    positions: &[[f64; D]],
    weights: &[f64],
) -> Vec<WeightedSeed<D>> {
    positions
        .iter()
        .zip(weights)
        .map(|(&p, &w)| WeightedSeed::new(p, w))
        .collect()
}

pub fn equal_targets<const D: usize>(domain: &Domain<D>, n: usize) -> Vec<f64> {
    vec![domain.volume() / n as f64; n]
}
