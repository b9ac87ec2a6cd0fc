//! Convex polytopes bounded by half-spaces, with exact cell measures.
//!
//! Every cell of a power diagram is the intersection of finitely many
//! half-spaces with an axis-aligned box, so the geometric kernel only needs
//! two operations: clipping a convex polytope by a half-space, and exact
//! volume / centroid / second-moment integrals over the result. Both are
//! provided in 2D and 3D behind a single const-generic type.
//!
//! All tolerance decisions (vertex merging, on-plane classification,
//! degenerate face culling) use a single absolute length `tol`, set by the
//! caller to `1e-9` times the domain diameter.

mod clip;
mod measures;
mod polytope;

pub use measures::CellMeasures;
pub use polytope::{ConvexPolytope, Face};

use crate::vec;

/// Closed half-space `{ x : normal . x <= offset }`, stored with unit normal
/// so that signed distances are in length units.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HalfSpace<const D: usize> {
    pub normal: [f64; D],
    pub offset: f64,
}

impl<const D: usize> HalfSpace<D> {
    /// Builds a half-space from any non-zero normal; the representation is
    /// normalised so `signed_distance` returns geometric distances.
    ///
    /// Panics if `normal` is zero or non-finite.
    pub fn new(normal: [f64; D], offset: f64) -> Self {
        let len = vec::norm(normal);
        assert!(
            len.is_finite() && len > 0.0,
            "half-space normal must be non-zero and finite"
        );
        Self {
            normal: vec::scale(normal, 1.0 / len),
            offset: offset / len,
        }
    }

    /// Signed distance from `x` to the boundary plane; negative strictly
    /// inside the half-space.
    #[inline]
    pub fn signed_distance(&self, x: [f64; D]) -> f64 {
        vec::dot(self.normal, x) - self.offset
    }

    /// Whether `x` lies in the half-space, inflated by `tol`.
    #[inline]
    pub fn contains(&self, x: [f64; D], tol: f64) -> bool {
        self.signed_distance(x) <= tol
    }

    /// The complementary half-space (shared boundary, opposite side).
    pub fn complement(&self) -> Self {
        Self {
            normal: vec::scale(self.normal, -1.0),
            offset: -self.offset,
        }
    }
}

/// Provenance label of a polytope face.
///
/// Wall indices are `2 * axis + side` with side 0 for the lower and 1 for
/// the upper box wall. For bisector faces `image` selects the periodic
/// translate of the neighbouring seed that induced the face (0 is always the
/// untranslated seed); non-periodic constructions only ever use image 0.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum FaceTag {
    Wall(u32),
    Neighbor { seed: u32, image: u32 },
}

/// Result of clipping a polytope by one half-space.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ClipOutcome {
    /// The polytope already lay inside the half-space (within tolerance).
    Unchanged,
    /// Some geometry was cut away; a section face was added if the cut has
    /// positive area.
    Clipped,
    /// Nothing of the polytope remains (touching contact counts as empty).
    Empty,
}
