//! Brute-force voxel reference: label every voxel centre with its
//! power-nearest seed and accumulate per-seed volumes and centroids.
//!
//! Intended for cross-checking the exact geometry, not production use. Row
//! labelling runs in parallel; accumulation is a sequential pass over rows
//! in index order, so results are identical for any thread count.

use thiserror::Error;

use crate::diagram::{Domain, WeightedSeed};
use crate::par;
use crate::vec;

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("resolution along axis {axis} is {got}, need at least 8")]
    BadResolution { axis: usize, got: usize },
    #[error("no seeds")]
    NoSeeds,
    #[error("cell {0} owns no voxels: centroid undefined")]
    EmptyCell(usize),
}

pub struct VoxelGrid<const D: usize> {
    resolution: [usize; D],
    spacing: [f64; D],
    labels: Vec<u32>,
    counts: Vec<u64>,
    /// Per-seed sums of member voxel centres.
    centre_sums: Vec<[f64; D]>,
}

impl<const D: usize> VoxelGrid<D> {
    /// Voxel labels, axis 0 fastest-varying.
    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn resolution(&self) -> [usize; D] {
        self.resolution
    }

    pub fn spacing(&self) -> [f64; D] {
        self.spacing
    }

    pub fn voxel_volume(&self) -> f64 {
        self.spacing.iter().product()
    }
}

/// Labels every voxel centre with the seed of smallest power distance
/// `|x - x_i|^2 - w_i` (periodic metric on periodic domains), ties to the
/// lowest seed index.
pub fn voxel_assign<const D: usize>(
    domain: &Domain<D>,
    seeds: &[WeightedSeed<D>],
    resolution: [usize; D],
) -> Result<VoxelGrid<D>, OracleError> {
    if seeds.is_empty() {
        return Err(OracleError::NoSeeds);
    }
    for (axis, &r) in resolution.iter().enumerate() {
        if r < 8 {
            return Err(OracleError::BadResolution { axis, got: r });
        }
    }
    let lower = domain.lower();
    let extents = domain.extents();
    let mut spacing = [0.0; D];
    for k in 0..D {
        spacing[k] = extents[k] / resolution[k] as f64;
    }
    let row_len = resolution[0];
    let row_count: usize = resolution[1..].iter().product();
    let rows: Vec<Vec<u32>> = par::map_indexed(row_count, |r| {
        // Decode the fixed coordinates (axes 1..D) of this row.
        let mut centre = [0.0; D];
        let mut rest = r;
        for k in 1..D {
            let c = rest % resolution[k];
            rest /= resolution[k];
            centre[k] = lower[k] + (c as f64 + 0.5) * spacing[k];
        }
        let mut labels = Vec::with_capacity(row_len);
        for i0 in 0..row_len {
            centre[0] = lower[0] + (i0 as f64 + 0.5) * spacing[0];
            let mut best = 0u32;
            let mut best_power = f64::INFINITY;
            for (j, s) in seeds.iter().enumerate() {
                let power = domain.dist_sq(centre, s.position) - s.weight;
                if power < best_power {
                    best_power = power;
                    best = j as u32;
                }
            }
            labels.push(best);
        }
        labels
    });
    let mut labels = Vec::with_capacity(row_len * row_count);
    let mut counts = vec![0u64; seeds.len()];
    let mut centre_sums = vec![[0.0; D]; seeds.len()];
    for (r, row) in rows.into_iter().enumerate() {
        let mut centre = [0.0; D];
        let mut rest = r;
        for k in 1..D {
            let c = rest % resolution[k];
            rest /= resolution[k];
            centre[k] = lower[k] + (c as f64 + 0.5) * spacing[k];
        }
        for (i0, &label) in row.iter().enumerate() {
            centre[0] = lower[0] + (i0 as f64 + 0.5) * spacing[0];
            counts[label as usize] += 1;
            centre_sums[label as usize] = vec::add(centre_sums[label as usize], centre);
        }
        labels.extend_from_slice(&row);
    }
    Ok(VoxelGrid {
        resolution,
        spacing,
        labels,
        counts,
        centre_sums,
    })
}

/// Per-seed voxel volume: `count * h^d`.
pub fn voxel_volumes<const D: usize>(grid: &VoxelGrid<D>) -> Vec<f64> {
    let vv = grid.voxel_volume();
    grid.counts.iter().map(|&c| c as f64 * vv).collect()
}

/// Per-seed mean of member voxel centres.
pub fn voxel_centroids<const D: usize>(
    grid: &VoxelGrid<D>,
) -> Result<Vec<[f64; D]>, OracleError> {
    grid.counts
        .iter()
        .zip(&grid.centre_sums)
        .enumerate()
        .map(|(i, (&c, &s))| {
            if c == 0 {
                Err(OracleError::EmptyCell(i))
            } else {
                Ok(vec::scale(s, 1.0 / c as f64))
            }
        })
        .collect()
}
