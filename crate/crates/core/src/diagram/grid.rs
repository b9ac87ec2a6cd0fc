//! Uniform-grid acceleration for nearest-candidate enumeration.
//!
//! Seeds are binned into a grid with about one seed per cell. Candidates for
//! a query seed are produced in nondecreasing distance by ingesting grid
//! shells of growing Chebyshev radius into a min-heap: after shell `r` every
//! unvisited seed (or periodic image) is at least `r * min_cell_side` away,
//! so the heap head can be released once it is closer than that bound.
//! Ties are broken by seed index, then image index, keeping the order
//! deterministic.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::Domain;

/// One enumerated neighbour candidate: seed `seed` translated by image
/// `image` (index into the diagram's shift table; 0 is the untranslated
/// copy), at `distance` from the query position.
#[derive(Clone, Copy, Debug)]
pub struct Candidate {
    pub seed: usize,
    pub image: usize,
    pub distance: f64,
}

/// Periodic image shifts for shell `s`: all componentwise multiples of the
/// box extents in `{-s..s}^D`, zero shift first, then lexicographic order.
/// Returns the shift table and a lookup from offset coordinates to table
/// index (`lookup[linear(t + s)]`).
pub(crate) fn image_table<const D: usize>(
    extents: [f64; D],
    shell: i64,
) -> (Vec<[f64; D]>, Vec<u32>) {
    let side = (2 * shell + 1) as usize;
    let count = side.pow(D as u32);
    let mut images = Vec::with_capacity(count);
    let mut lookup = vec![u32::MAX; count];
    images.push([0.0; D]);
    lookup[linear_index::<D>([0; D], shell, side)] = 0;
    let mut t = [-shell; D];
    loop {
        if t != [0; D] {
            let mut shiftv = [0.0; D];
            for k in 0..D {
                shiftv[k] = t[k] as f64 * extents[k];
            }
            lookup[linear_index::<D>(t, shell, side)] = images.len() as u32;
            images.push(shiftv);
        }
        // advance odometer
        let mut k = 0;
        loop {
            t[k] += 1;
            if t[k] <= shell {
                break;
            }
            t[k] = -shell;
            k += 1;
            if k == D {
                return (images, lookup);
            }
        }
    }
}

#[inline]
fn linear_index<const D: usize>(t: [i64; D], shell: i64, side: usize) -> usize {
    let mut idx = 0usize;
    for k in (0..D).rev() {
        idx = idx * side + (t[k] + shell) as usize;
    }
    idx
}

/// Table index of the image with offset coordinates `t` in a lookup built
/// for `shell` (all |t_k| must be within the shell).
#[inline]
pub(crate) fn image_index<const D: usize>(t: [i64; D], shell: i64, lookup: &[u32]) -> u32 {
    lookup[linear_index::<D>(t, shell, (2 * shell + 1) as usize)]
}

/// Seed bins over the domain box (CSR layout).
pub struct SeedGrid<const D: usize> {
    dims: [usize; D],
    cell: [f64; D],
    min_side: f64,
    lower: [f64; D],
    extents: [f64; D],
    offsets: Vec<u32>,
    items: Vec<u32>,
    /// Bounded domains only: seeds outside the box, enumerated eagerly since
    /// the shell distance bound assumes seeds sit in their home cell.
    outliers: Vec<u32>,
    periodic: bool,
}

impl<const D: usize> SeedGrid<D> {
    /// Bins `positions`; periodic grids expect positions already wrapped
    /// into the box.
    pub fn build(domain: &Domain<D>, positions: &[[f64; D]]) -> Self {
        let n = positions.len().max(1);
        let density = (n as f64 / domain.volume()).powf(1.0 / D as f64);
        let mut dims = [1usize; D];
        let mut cell = [0.0; D];
        let extents = domain.extents();
        for k in 0..D {
            dims[k] = ((extents[k] * density).round() as usize).clamp(1, 1024);
            cell[k] = extents[k] / dims[k] as f64;
        }
        let min_side = cell.iter().copied().fold(f64::INFINITY, f64::min);
        let ncells: usize = dims.iter().product();

        let lower = domain.lower();
        let periodic = domain.periodic();
        let mut outliers = Vec::new();
        let mut counts = vec![0u32; ncells];
        let mut home = Vec::with_capacity(positions.len());
        for (i, &p) in positions.iter().enumerate() {
            if !periodic && (0..D).any(|k| p[k] < lower[k] || p[k] > lower[k] + extents[k]) {
                outliers.push(i as u32);
                home.push(usize::MAX);
                continue;
            }
            let mut idx = 0usize;
            for k in (0..D).rev() {
                let c = (((p[k] - lower[k]) / cell[k]) as usize).min(dims[k] - 1);
                idx = idx * dims[k] + c;
            }
            counts[idx] += 1;
            home.push(idx);
        }
        let mut offsets = vec![0u32; ncells + 1];
        for c in 0..ncells {
            offsets[c + 1] = offsets[c] + counts[c];
        }
        let mut items = vec![0u32; (offsets[ncells]) as usize];
        let mut cursor = offsets.clone();
        for (i, &h) in home.iter().enumerate() {
            if h != usize::MAX {
                items[cursor[h] as usize] = i as u32;
                cursor[h] += 1;
            }
        }
        Self {
            dims,
            cell,
            min_side,
            lower,
            extents,
            offsets,
            items,
            outliers,
            periodic,
        }
    }

    #[inline]
    fn bin_of(&self, p: [f64; D]) -> [i64; D] {
        let mut c = [0i64; D];
        for k in 0..D {
            c[k] = (((p[k] - self.lower[k]) / self.cell[k]) as i64).clamp(0, self.dims[k] as i64 - 1);
        }
        c
    }

    #[inline]
    fn bin_slice(&self, idx: usize) -> &[u32] {
        &self.items[self.offsets[idx] as usize..self.offsets[idx + 1] as usize]
    }

    /// Finds a pair of distinct seeds closer than `tol` (periodic-aware), if
    /// any. Requires `tol` below one grid cell side, which holds for
    /// geometric tolerances: coincident seeds then land in the same or an
    /// adjacent bin.
    pub fn find_coincident(
        &self,
        domain: &Domain<D>,
        positions: &[[f64; D]],
        tol: f64,
    ) -> Option<(usize, usize)> {
        let tol2 = tol * tol;
        for &a in &self.outliers {
            for j in 0..positions.len() {
                if j != a as usize
                    && domain.dist_sq(positions[a as usize], positions[j]) <= tol2
                {
                    return Some(((a as usize).min(j), (a as usize).max(j)));
                }
            }
        }
        'seeds: for (i, &p) in positions.iter().enumerate() {
            if self.outliers.contains(&(i as u32)) {
                continue;
            }
            let home = self.bin_of(p);
            let mut o = [-1i64; D];
            loop {
                'cell: {
                    let mut idx = 0usize;
                    for k in (0..D).rev() {
                        let c = home[k] + o[k];
                        let dim = self.dims[k] as i64;
                        let w = if self.periodic {
                            c.rem_euclid(dim)
                        } else if c < 0 || c >= dim {
                            break 'cell;
                        } else {
                            c
                        };
                        idx = idx * self.dims[k] + w as usize;
                    }
                    for &j in self.bin_slice(idx) {
                        if (j as usize) > i && domain.dist_sq(p, positions[j as usize]) <= tol2 {
                            return Some((i, j as usize));
                        }
                    }
                }
                let mut k = 0;
                loop {
                    o[k] += 1;
                    if o[k] <= 1 {
                        break;
                    }
                    o[k] = -1;
                    k += 1;
                    if k == D {
                        continue 'seeds;
                    }
                }
            }
        }
        None
    }
}

#[derive(Copy, Clone, Debug)]
struct HeapEntry {
    d2: f64,
    seed: u32,
    image: u32,
}

impl PartialEq for HeapEntry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for HeapEntry {}
impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for HeapEntry {
    // Reversed: BinaryHeap is a max-heap, we want the nearest candidate on
    // top, with (seed, image) tie-breaks.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .d2
            .total_cmp(&self.d2)
            .then_with(|| other.seed.cmp(&self.seed))
            .then_with(|| other.image.cmp(&self.image))
    }
}

/// Lazy distance-ordered candidate stream around one query seed.
pub(crate) struct CandidateStream<'a, const D: usize> {
    grid: &'a SeedGrid<D>,
    positions: &'a [[f64; D]],
    query: [f64; D],
    query_id: u32,
    home: [i64; D],
    heap: BinaryHeap<HeapEntry>,
    next_shell: i64,
    /// Candidates at or below this distance are all in the heap already.
    safe: f64,
    /// Periodic image shell bound (images with any |t_k| > this are out of
    /// range); 0 for bounded domains.
    image_shell: i64,
    image_lookup: &'a [u32],
    exhausted: bool,
}

impl<'a, const D: usize> CandidateStream<'a, D> {
    pub fn new(
        grid: &'a SeedGrid<D>,
        positions: &'a [[f64; D]],
        query_id: usize,
        image_shell: i64,
        image_lookup: &'a [u32],
    ) -> Self {
        let query = positions[query_id];
        let mut s = Self {
            grid,
            positions,
            query,
            query_id: query_id as u32,
            home: grid.bin_of(query),
            heap: BinaryHeap::with_capacity(64),
            next_shell: 0,
            safe: 0.0,
            image_shell,
            image_lookup,
            exhausted: false,
        };
        // Outliers (and an out-of-box query itself) bypass the shell bound.
        for &j in &grid.outliers {
            if j != s.query_id {
                let d2 = crate::vec::dist_sq(s.query, positions[j as usize]);
                s.heap.push(HeapEntry { d2, seed: j, image: 0 });
            }
        }
        if !grid.periodic && grid.outliers.contains(&(query_id as u32)) {
            // Conservative fallback: ingest everything up front.
            while s.ingest_next_shell() {}
        }
        s
    }

    /// Next candidate with distance strictly below `limit`, or `None` once
    /// no remaining candidate can be that close.
    pub fn next_within(&mut self, limit: f64) -> Option<Candidate> {
        loop {
            if let Some(top) = self.heap.peek() {
                let d = top.d2.sqrt();
                if d <= self.safe || self.exhausted {
                    if d < limit {
                        let e = self.heap.pop().unwrap();
                        return Some(Candidate {
                            seed: e.seed as usize,
                            image: e.image as usize,
                            distance: d,
                        });
                    }
                    return None;
                }
            } else if self.exhausted {
                return None;
            }
            if self.safe >= limit {
                return None;
            }
            if !self.ingest_next_shell() {
                self.exhausted = true;
            }
        }
    }

    /// Ingests the next Chebyshev shell of grid cells; returns false when no
    /// shells remain.
    fn ingest_next_shell(&mut self) -> bool {
        let r = self.next_shell;
        let grid = self.grid;
        let max_shell = if grid.periodic {
            let mut m = 0i64;
            for k in 0..D {
                m = m.max((self.image_shell + 1) * grid.dims[k] as i64);
            }
            m
        } else {
            let mut m = 0i64;
            for k in 0..D {
                m = m.max(grid.dims[k] as i64);
            }
            m
        };
        if r > max_shell {
            return false;
        }
        self.next_shell += 1;
        // After ingesting shell r, everything beyond is at least r cells
        // away along some axis.
        self.safe = r as f64 * grid.min_side;

        let mut o = [-r; D];
        loop {
            if o.iter().any(|&c| c.abs() == r) {
                self.ingest_cell(o);
            }
            let mut k = 0;
            loop {
                o[k] += 1;
                if o[k] <= r {
                    break;
                }
                o[k] = -r;
                k += 1;
                if k == D {
                    return true;
                }
            }
        }
    }

    fn ingest_cell(&mut self, offset: [i64; D]) {
        let grid = self.grid;
        let mut idx = 0usize;
        let mut shift = [0i64; D];
        for k in (0..D).rev() {
            let c = self.home[k] + offset[k];
            let dim = grid.dims[k] as i64;
            let (wrapped, s) = if grid.periodic {
                (c.rem_euclid(dim), c.div_euclid(dim))
            } else {
                if c < 0 || c >= dim {
                    return;
                }
                (c, 0)
            };
            if s.abs() > self.image_shell {
                return;
            }
            shift[k] = s;
            idx = idx * grid.dims[k] + wrapped as usize;
        }
        let image = if grid.periodic {
            image_index::<D>(shift, self.image_shell, self.image_lookup)
        } else {
            0
        };
        let mut delta = [0.0; D];
        for k in 0..D {
            delta[k] = shift[k] as f64 * grid.extents[k];
        }
        for &j in grid.bin_slice(idx) {
            if j == self.query_id && image == 0 {
                continue;
            }
            let p = crate::vec::add(self.positions[j as usize], delta);
            let d2 = crate::vec::dist_sq(self.query, p);
            self.heap.push(HeapEntry { d2, seed: j, image });
        }
    }
}
