//! Laguerre (power) diagrams with prescribed cell volumes.
//!
//! A Laguerre diagram partitions a box into convex cells, one per weighted
//! seed; the cell of seed `i` collects the points where
//! `|x - x_i|^2 - w_i` is minimal. For fixed seed positions the weights can
//! always be chosen so every cell has a prescribed volume: those weights
//! maximise a concave dual objective whose gradient is the vector of volume
//! mismatches. This crate builds the diagrams (bounded or fully periodic, in
//! 2D and 3D), solves for the weights, and optionally interleaves Lloyd
//! regularisation steps to make cells rounder while keeping the volumes.
//!
//! ```
//! use laguerre::{diagram::Domain, seeding, transport};
//!
//! let domain = Domain::new([0.0, 0.0], [1.0, 1.0], false).unwrap();
//! let targets = seeding::make_targets(
//!     &seeding::VolumeSpec::Bimodal { small: 35, large: 15, ratio: 10.0 },
//!     &domain, 7,
//! ).unwrap();
//! let positions = seeding::sample_positions(
//!     &seeding::SpatialSpec::Uniform, &domain, &targets, 7,
//! ).unwrap();
//! let (diagram, report) = transport::fit_weights(&domain, &positions, &targets, 0.01).unwrap();
//! assert!(report.max_rel_volume_error() < 0.01);
//! assert_eq!(diagram.len(), 50);
//! ```
//!
//! With the default `parallel` feature, cell construction and voxel sweeps
//! run on rayon; without it the same entry points use a sequential fallback
//! and produce identical results.

// `!(x > 0.0)` rejects NaN along with the out-of-range values; the
// suggested `x <= 0.0` would wave NaN through.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod diagram;
pub mod geometry;
pub mod lloyd;
pub mod oracle;
pub mod par;
pub mod seeding;
pub mod stats;
pub mod transport;
pub mod vec;

pub use diagram::{Domain, LaguerreDiagram, WeightedSeed};
pub use geometry::{CellMeasures, ConvexPolytope, FaceTag, HalfSpace};
pub use transport::{SolveReport, TargetSpec};
