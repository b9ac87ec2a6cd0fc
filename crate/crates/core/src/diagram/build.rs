//! Construction drivers: grid-accelerated and naive, bounded and periodic.

use super::grid::{image_index, image_table, Candidate, CandidateStream, SeedGrid};
use super::{
    bisector, Cell, CellAdjacency, DiagramError, Domain, LaguerreDiagram, Neighbor, WeightedSeed,
};
use crate::geometry::{CellMeasures, ClipOutcome, ConvexPolytope, FaceTag};
use crate::par;
use crate::vec;

/// Distance beyond which a seed of weight `wj` cannot cut a cell contained
/// in the ball of squared radius `r2` about its own seed (weight `wi`):
/// every cell point x has `|x - y| >= d - R`, hence power distance to the
/// candidate at least `(d - R)^2 - wj`, while the power distance to the own
/// seed is at most `R^2 - wi`. `d >= R + sqrt(R^2 + wj - wi)` therefore
/// guarantees no cell point prefers the candidate.
#[inline]
fn stop_distance(r2: f64, wi: f64, wj: f64) -> f64 {
    r2.sqrt() + (r2 + wj - wi).max(0.0).sqrt()
}

pub(super) fn compute_bounded<const D: usize>(
    domain: &Domain<D>,
    seeds: &[WeightedSeed<D>],
) -> Result<LaguerreDiagram<D>, DiagramError> {
    construct(domain, seeds, false)
}

pub(super) fn compute_periodic<const D: usize>(
    domain: &Domain<D>,
    seeds: &[WeightedSeed<D>],
) -> Result<LaguerreDiagram<D>, DiagramError> {
    construct(domain, seeds, false)
}

pub(super) fn compute_naive<const D: usize>(
    domain: &Domain<D>,
    seeds: &[WeightedSeed<D>],
) -> Result<LaguerreDiagram<D>, DiagramError> {
    construct(domain, seeds, true)
}

fn construct<const D: usize>(
    domain: &Domain<D>,
    seeds: &[WeightedSeed<D>],
    naive: bool,
) -> Result<LaguerreDiagram<D>, DiagramError> {
    if seeds.is_empty() {
        return Err(DiagramError::NoSeeds);
    }
    for (i, s) in seeds.iter().enumerate() {
        if !s.weight.is_finite() || s.position.iter().any(|c| !c.is_finite()) {
            return Err(DiagramError::NonFiniteSeed(i));
        }
    }
    // Periodic positions are canonicalised by wrapping into the box.
    let generators: Vec<WeightedSeed<D>> = seeds
        .iter()
        .map(|s| WeightedSeed::new(domain.wrap(s.position), s.weight))
        .collect();
    let positions: Vec<[f64; D]> = generators.iter().map(|s| s.position).collect();
    let grid = SeedGrid::build(domain, &positions);
    if let Some((i, j)) = grid.find_coincident(domain, &positions, domain.geom_tol()) {
        return Err(DiagramError::CoincidentSeeds(i, j));
    }
    let wmax = generators
        .iter()
        .map(|s| s.weight)
        .fold(f64::NEG_INFINITY, f64::max);

    let shells: &[i64] = if domain.periodic() { &[1, 2] } else { &[0] };
    let min_ext = domain
        .extents()
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);

    let mut last_bad = 0usize;
    for &shell in shells {
        let (images, lookup) = image_table::<D>(domain.extents(), shell);
        let built: Vec<(ConvexPolytope<D>, CellMeasures<D>)> =
            par::map_indexed(seeds.len(), |i| {
                let poly = if naive {
                    build_cell_naive(domain, &generators, &positions, shell, &images, &lookup, i)
                } else {
                    build_cell(
                        domain,
                        &generators,
                        &positions,
                        &grid,
                        shell,
                        &images,
                        &lookup,
                        wmax,
                        i,
                    )
                };
                let m = poly.measures();
                (poly, m)
            });

        if domain.periodic() {
            // Minimal-image audit: no image outside the shell may be able
            // to cut any cell. Unconsidered images are at least
            // shell * min extent away.
            let bad = (0..seeds.len()).find(|&i| {
                let (poly, _) = &built[i];
                if poly.is_empty() {
                    return false;
                }
                let r2 = poly.circumradius_sq_about(positions[i]);
                stop_distance(r2, generators[i].weight, wmax) > shell as f64 * min_ext
            });
            if let Some(i) = bad {
                last_bad = i;
                continue;
            }
        }
        return Ok(assemble(domain, generators, built, images));
    }
    Err(DiagramError::CellExceedsMinimalImage(last_bad))
}

#[allow(clippy::too_many_arguments)]
fn build_cell<const D: usize>(
    domain: &Domain<D>,
    seeds: &[WeightedSeed<D>],
    positions: &[[f64; D]],
    grid: &SeedGrid<D>,
    shell: i64,
    images: &[[f64; D]],
    lookup: &[u32],
    wmax: f64,
    i: usize,
) -> ConvexPolytope<D> {
    let xi = positions[i];
    let wi = seeds[i].weight;
    let mut poly = initial_cell(domain, xi, shell, lookup, i);
    let mut r2 = poly.circumradius_sq_about(xi);
    let mut stream = CandidateStream::new(grid, positions, i, shell, lookup);
    loop {
        let stop = stop_distance(r2, wi, wmax);
        let Some(c) = stream.next_within(stop) else {
            break;
        };
        if c.distance >= stop_distance(r2, wi, seeds[c.seed].weight) {
            continue;
        }
        let other = WeightedSeed::new(
            vec::add(positions[c.seed], images[c.image]),
            seeds[c.seed].weight,
        );
        let h = bisector(&seeds[i], &other);
        let tag = FaceTag::Neighbor {
            seed: c.seed as u32,
            image: c.image as u32,
        };
        match poly.clip_halfspace(&h, tag) {
            ClipOutcome::Clipped => r2 = poly.circumradius_sq_about(xi),
            ClipOutcome::Empty => break,
            ClipOutcome::Unchanged => {}
        }
    }
    poly
}

fn build_cell_naive<const D: usize>(
    domain: &Domain<D>,
    seeds: &[WeightedSeed<D>],
    positions: &[[f64; D]],
    shell: i64,
    images: &[[f64; D]],
    lookup: &[u32],
    i: usize,
) -> ConvexPolytope<D> {
    let mut poly = initial_cell(domain, positions[i], shell, lookup, i);
    for c in all_candidates(positions, images, i) {
        let other = WeightedSeed::new(
            vec::add(positions[c.seed], images[c.image]),
            seeds[c.seed].weight,
        );
        let h = bisector(&seeds[i], &other);
        let tag = FaceTag::Neighbor {
            seed: c.seed as u32,
            image: c.image as u32,
        };
        if poly.clip_halfspace(&h, tag) == ClipOutcome::Empty {
            break;
        }
    }
    poly
}

/// Bounded cells start from the domain box; periodic cells start from the
/// box slab centred on the seed, whose walls are exactly the bisectors
/// against the seed's own axis-aligned images (diagonal own images are
/// tangent to the slab corners and never cut).
fn initial_cell<const D: usize>(
    domain: &Domain<D>,
    xi: [f64; D],
    shell: i64,
    lookup: &[u32],
    i: usize,
) -> ConvexPolytope<D> {
    if !domain.periodic() {
        return ConvexPolytope::axis_box(domain.lower(), domain.upper());
    }
    let half = vec::scale(domain.extents(), 0.5);
    let mut poly = ConvexPolytope::axis_box(vec::sub(xi, half), vec::add(xi, half));
    for f in &mut poly.faces {
        let FaceTag::Wall(w) = f.tag else {
            unreachable!("axis_box tags every face as a wall")
        };
        let axis = (w / 2) as usize;
        let mut t = [0i64; D];
        t[axis] = if w % 2 == 0 { -1 } else { 1 };
        f.tag = FaceTag::Neighbor {
            seed: i as u32,
            image: image_index::<D>(t, shell, lookup),
        };
    }
    poly
}

fn all_candidates<const D: usize>(
    positions: &[[f64; D]],
    images: &[[f64; D]],
    query: usize,
) -> Vec<Candidate> {
    let q = positions[query];
    let mut v = Vec::with_capacity(positions.len() * images.len());
    for (j, &pos) in positions.iter().enumerate() {
        for (im, &shift) in images.iter().enumerate() {
            if j == query && im == 0 {
                continue;
            }
            let p = vec::add(pos, shift);
            v.push(Candidate {
                seed: j,
                image: im,
                distance: vec::dist(q, p),
            });
        }
    }
    v.sort_by(|a, b| {
        a.distance
            .total_cmp(&b.distance)
            .then(a.seed.cmp(&b.seed))
            .then(a.image.cmp(&b.image))
    });
    v
}

pub(super) fn candidates_sorted<const D: usize>(
    domain: &Domain<D>,
    seeds: &[WeightedSeed<D>],
    query: usize,
) -> Result<Vec<Candidate>, DiagramError> {
    if seeds.is_empty() {
        return Err(DiagramError::NoSeeds);
    }
    let positions: Vec<[f64; D]> = seeds.iter().map(|s| domain.wrap(s.position)).collect();
    let shell = if domain.periodic() { 1 } else { 0 };
    let (images, _) = image_table::<D>(domain.extents(), shell);
    Ok(all_candidates(&positions, &images, query))
}

fn assemble<const D: usize>(
    domain: &Domain<D>,
    generators: Vec<WeightedSeed<D>>,
    built: Vec<(ConvexPolytope<D>, CellMeasures<D>)>,
    images: Vec<[f64; D]>,
) -> LaguerreDiagram<D> {
    let area_floor = domain.geom_tol().powi(D as i32 - 1);
    let positions: Vec<[f64; D]> = generators.iter().map(|s| s.position).collect();
    let mut cells = Vec::with_capacity(built.len());
    let mut adjacency = Vec::with_capacity(built.len());
    for (i, (polytope, measures)) in built.into_iter().enumerate() {
        let mut adj = CellAdjacency::default();
        for &(tag, area) in &measures.face_areas {
            if area < area_floor {
                continue;
            }
            match tag {
                FaceTag::Wall(w) => adj.walls.push((w, area)),
                FaceTag::Neighbor { seed, image } => {
                    let p = vec::add(positions[seed as usize], images[image as usize]);
                    adj.neighbors.push(Neighbor {
                        id: seed as usize,
                        area,
                        distance: vec::dist(positions[i], p),
                        image: image as usize,
                    });
                }
            }
        }
        adjacency.push(adj);
        cells.push(Cell { polytope, measures });
    }
    LaguerreDiagram {
        domain: *domain,
        generators,
        cells,
        adjacency,
        images,
    }
}
