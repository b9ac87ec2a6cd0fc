//! Laguerre (power) diagrams over a box, bounded or fully periodic.
//!
//! The cell of seed `i` is `{ x : |x - x_i|^2 - w_i <= |x - x_j|^2 - w_j }`
//! for all `j`, intersected with the box for bounded domains. Cells are
//! convex, tile the box, and may be empty under extreme weights (an empty
//! cell is flagged, never dropped, so indices always line up with seeds).
//! Periodic diagrams measure distance through the nearest image; each cell
//! is stored as a single unwrapped convex polytope around its (wrapped)
//! seed, which is valid whenever cells satisfy the minimal-image bound.
//!
//! Construction clips the box (or, periodically, the seed-centred box slab)
//! by bisector half-spaces in nearest-first order, stopping once no farther
//! candidate can cut the remaining cell. Cell construction is independent
//! per cell and runs data-parallel under the `parallel` feature.

mod build;
mod grid;

pub use grid::{Candidate, SeedGrid};

use thiserror::Error;

use crate::geometry::{CellMeasures, ConvexPolytope, FaceTag, HalfSpace};
use crate::vec;

/// Axis-aligned box domain, optionally periodic in all axes.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Domain<const D: usize> {
    lower: [f64; D],
    upper: [f64; D],
    periodic: bool,
}

impl<const D: usize> Domain<D> {
    pub fn new(lower: [f64; D], upper: [f64; D], periodic: bool) -> Result<Self, DiagramError> {
        for k in 0..D {
            if !(upper[k] - lower[k] > 0.0) || !lower[k].is_finite() || !upper[k].is_finite() {
                return Err(DiagramError::DegenerateDomain);
            }
        }
        Ok(Self {
            lower,
            upper,
            periodic,
        })
    }

    /// Unit box `[0,1]^D`, non-periodic.
    pub fn unit() -> Self {
        Self {
            lower: [0.0; D],
            upper: [1.0; D],
            periodic: false,
        }
    }

    pub fn lower(&self) -> [f64; D] {
        self.lower
    }

    pub fn upper(&self) -> [f64; D] {
        self.upper
    }

    pub fn periodic(&self) -> bool {
        self.periodic
    }

    pub fn extents(&self) -> [f64; D] {
        vec::sub(self.upper, self.lower)
    }

    pub fn volume(&self) -> f64 {
        self.extents().iter().product()
    }

    pub fn diameter(&self) -> f64 {
        vec::norm(self.extents())
    }

    /// Geometric tolerance used throughout: 1e-9 times the box diameter.
    pub fn geom_tol(&self) -> f64 {
        1e-9 * self.diameter()
    }

    pub fn contains(&self, x: [f64; D]) -> bool {
        (0..D).all(|k| x[k] >= self.lower[k] && x[k] <= self.upper[k])
    }

    /// Wraps `x` into `[lower, upper)` componentwise (identity for
    /// non-periodic domains).
    pub fn wrap(&self, x: [f64; D]) -> [f64; D] {
        if !self.periodic {
            return x;
        }
        let mut r = x;
        for k in 0..D {
            let l = self.upper[k] - self.lower[k];
            r[k] = (x[k] - self.lower[k]).rem_euclid(l) + self.lower[k];
            if r[k] >= self.upper[k] {
                // rem_euclid can land on the upper bound through rounding
                r[k] = self.lower[k];
            }
        }
        r
    }

    /// Squared distance through the nearest periodic image (plain squared
    /// distance for non-periodic domains). Box periodicity separates per
    /// axis.
    pub fn dist_sq(&self, a: [f64; D], b: [f64; D]) -> f64 {
        if !self.periodic {
            return vec::dist_sq(a, b);
        }
        let mut s = 0.0;
        for k in 0..D {
            let l = self.upper[k] - self.lower[k];
            let mut d = (a[k] - b[k]).abs() % l;
            if d > 0.5 * l {
                d = l - d;
            }
            s += d * d;
        }
        s
    }
}

/// Seed position plus additive power weight.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WeightedSeed<const D: usize> {
    pub position: [f64; D],
    pub weight: f64,
}

impl<const D: usize> WeightedSeed<D> {
    pub fn new(position: [f64; D], weight: f64) -> Self {
        Self { position, weight }
    }

    /// Zero-weight seeds at the given positions (a Voronoi configuration).
    pub fn unweighted(positions: &[[f64; D]]) -> Vec<Self> {
        positions.iter().map(|&p| Self::new(p, 0.0)).collect()
    }
}

/// Power bisector between two seeds: the half-space of points whose power
/// distance to `a` is at most the power distance to `b`,
/// `2 (x_b - x_a) . x <= |x_b|^2 - |x_a|^2 + w_a - w_b`.
///
/// The offset is evaluated in the factored form
/// `(x_b - x_a) . (x_b + x_a) + w_a - w_b`, which stays accurate far from
/// the origin. Equal weights give the perpendicular bisector; shifting both
/// weights by a constant leaves the plane unchanged.
///
/// Panics if the positions coincide (zero normal).
pub fn bisector<const D: usize>(a: &WeightedSeed<D>, b: &WeightedSeed<D>) -> HalfSpace<D> {
    let n = vec::scale(vec::sub(b.position, a.position), 2.0);
    let offset = vec::dot(
        vec::sub(b.position, a.position),
        vec::add(b.position, a.position),
    ) + (a.weight - b.weight);
    HalfSpace::new(n, offset)
}

/// One cell: its polytope (empty polytope for a vanished cell) and the
/// derived measures. For periodic diagrams the polytope is unwrapped: it
/// contains the wrapped seed and may extend past the box by up to half a
/// period.
#[derive(Clone, Debug)]
pub struct Cell<const D: usize> {
    pub(crate) polytope: ConvexPolytope<D>,
    pub(crate) measures: CellMeasures<D>,
}

impl<const D: usize> Cell<D> {
    pub fn polytope(&self) -> &ConvexPolytope<D> {
        &self.polytope
    }

    pub fn measures(&self) -> &CellMeasures<D> {
        &self.measures
    }

    pub fn is_empty(&self) -> bool {
        self.polytope.is_empty()
    }
}

/// One adjacency record of a cell: a shared face with seed `id` (possibly
/// through a periodic image; one record per image, so a pair of cells
/// sharing faces through several images appears with that multiplicity).
#[derive(Clone, Copy, Debug)]
pub struct Neighbor {
    pub id: usize,
    /// Area of this shared face alone (length in 2D).
    pub area: f64,
    /// Distance from the cell's seed to the neighbour image that induced
    /// the face.
    pub distance: f64,
    /// Index into [`LaguerreDiagram::images`].
    pub image: usize,
}

/// Face contacts of one cell, split into seed neighbours and domain walls.
/// Faces with area below `geom_tol^(D-1)` are culled here (they still bound
/// the polytope, but carry no reliable adjacency information).
#[derive(Clone, Debug, Default)]
pub struct CellAdjacency {
    pub neighbors: Vec<Neighbor>,
    /// `(wall index, contact area)`, wall index as in [`FaceTag::Wall`].
    pub walls: Vec<(u32, f64)>,
}

/// A computed Laguerre diagram: cells, adjacency and the generators that
/// produced it.
#[derive(Clone, Debug)]
pub struct LaguerreDiagram<const D: usize> {
    domain: Domain<D>,
    generators: Vec<WeightedSeed<D>>,
    cells: Vec<Cell<D>>,
    adjacency: Vec<CellAdjacency>,
    images: Vec<[f64; D]>,
}

impl<const D: usize> LaguerreDiagram<D> {
    /// Builds the diagram, dispatching on the domain's periodicity.
    pub fn compute(
        domain: &Domain<D>,
        seeds: &[WeightedSeed<D>],
    ) -> Result<Self, DiagramError> {
        if domain.periodic {
            build::compute_periodic(domain, seeds)
        } else {
            build::compute_bounded(domain, seeds)
        }
    }

    pub fn domain(&self) -> &Domain<D> {
        &self.domain
    }

    pub fn generators(&self) -> &[WeightedSeed<D>] {
        &self.generators
    }

    pub fn cells(&self) -> &[Cell<D>] {
        &self.cells
    }

    pub fn cell(&self, i: usize) -> &Cell<D> {
        &self.cells[i]
    }

    pub fn adjacency(&self) -> &[CellAdjacency] {
        &self.adjacency
    }

    /// Periodic image shifts referenced by face tags and adjacency records;
    /// entry 0 is always the zero shift.
    pub fn images(&self) -> &[[f64; D]] {
        &self.images
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn volumes(&self) -> Vec<f64> {
        self.cells.iter().map(|c| c.measures.volume).collect()
    }

    pub fn total_volume(&self) -> f64 {
        self.cells.iter().map(|c| c.measures.volume).sum()
    }

    pub fn empty_cells(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.cells[i].is_empty()).collect()
    }

    /// Splits cell `i` into convex fragments lying inside the box, shifting
    /// overhanging periodic parts back by whole periods. Presentation
    /// helper for exporters; bounded cells come back as a single fragment.
    pub fn wrap_cell_into_domain(&self, i: usize) -> Vec<ConvexPolytope<D>> {
        let cell = &self.cells[i];
        if cell.is_empty() {
            return Vec::new();
        }
        if !self.domain.periodic {
            return vec![cell.polytope.clone()];
        }
        let ext = self.domain.extents();
        let tol = self.domain.geom_tol();
        let mut fragments = Vec::new();
        let (shifts, _) = grid::image_table::<D>(ext, 1);
        for shift in shifts {
            // Intersect with the box translated by `shift`, then move the
            // piece back into the fundamental box.
            let mut piece = cell.polytope.clone();
            let mut any = true;
            for k in 0..D {
                let mut nlo = [0.0; D];
                nlo[k] = -1.0;
                let mut nhi = [0.0; D];
                nhi[k] = 1.0;
                let lo = self.domain.lower[k] + shift[k];
                let hi = self.domain.upper[k] + shift[k];
                let a = piece.clip_halfspace(
                    &HalfSpace::new(nlo, -lo),
                    FaceTag::Wall(2 * k as u32),
                );
                let b = piece.clip_halfspace(
                    &HalfSpace::new(nhi, hi),
                    FaceTag::Wall(2 * k as u32 + 1),
                );
                use crate::geometry::ClipOutcome::Empty;
                if a == Empty || b == Empty {
                    any = false;
                    break;
                }
            }
            if any && !piece.is_empty() && piece.measures().volume > tol.powi(D as i32) {
                piece.translate(vec::scale(shift, -1.0));
                fragments.push(piece);
            }
        }
        fragments
    }
}

/// Bounded-domain construction (grid-accelerated). The domain must not be
/// periodic.
pub fn compute_diagram<const D: usize>(
    domain: &Domain<D>,
    seeds: &[WeightedSeed<D>],
) -> Result<LaguerreDiagram<D>, DiagramError> {
    if domain.periodic {
        return Err(DiagramError::DomainMismatch);
    }
    build::compute_bounded(domain, seeds)
}

/// Periodic construction (grid-accelerated). The domain must be periodic.
///
/// Seeds are wrapped into the box; cells are clipped against seed images in
/// the 3^D shift shell, enlarged once to 5^D if some cell violates the
/// minimal-image bound, after which violations are an error.
pub fn compute_periodic_diagram<const D: usize>(
    domain: &Domain<D>,
    seeds: &[WeightedSeed<D>],
) -> Result<LaguerreDiagram<D>, DiagramError> {
    if !domain.periodic {
        return Err(DiagramError::DomainMismatch);
    }
    build::compute_periodic(domain, seeds)
}

/// Reference construction: clips every cell against every other seed (and
/// every image in the periodic shell) with no acceleration and no skip
/// bound. Quadratic; for tests and cross-checks.
pub fn compute_diagram_naive<const D: usize>(
    domain: &Domain<D>,
    seeds: &[WeightedSeed<D>],
) -> Result<LaguerreDiagram<D>, DiagramError> {
    build::compute_naive(domain, seeds)
}

/// All potential neighbours of seed `query`, ordered by distance (periodic
/// images enumerated within the standard shell), ties broken by seed then
/// image index. This is the order in which construction clips; the
/// accelerated path additionally stops early once no remaining candidate
/// can cut the cell.
pub fn neighbor_candidates<const D: usize>(
    domain: &Domain<D>,
    seeds: &[WeightedSeed<D>],
    query: usize,
) -> Result<Vec<Candidate>, DiagramError> {
    build::candidates_sorted(domain, seeds, query)
}

#[derive(Debug, Error)]
pub enum DiagramError {
    #[error("domain extents must be positive and finite")]
    DegenerateDomain,
    #[error("seed list is empty")]
    NoSeeds,
    #[error("seed {0} has a non-finite position or weight")]
    NonFiniteSeed(usize),
    #[error("seeds {0} and {1} coincide within tolerance")]
    CoincidentSeeds(usize, usize),
    #[error("construction does not match the domain periodicity")]
    DomainMismatch,
    #[error(
        "cell {0} exceeds the minimal-image bound even with the enlarged image shell; \
         weights are too extreme for this box"
    )]
    CellExceedsMinimalImage(usize),
}
