//! Boundary representation of a convex polytope.

use smallvec::SmallVec;

use super::FaceTag;
use crate::vec;

/// One facet: a list of vertex indices plus a provenance tag.
///
/// In 3D the indices are cyclically ordered around the face; in 2D a face is
/// an edge and holds exactly two indices.
#[derive(Clone, Debug)]
pub struct Face {
    pub verts: SmallVec<[u32; 8]>,
    pub tag: FaceTag,
}

impl Face {
    pub fn new(verts: impl IntoIterator<Item = u32>, tag: FaceTag) -> Self {
        Self {
            verts: verts.into_iter().collect(),
            tag,
        }
    }
}

/// Convex polytope in dimension 2 or 3.
///
/// Invariants (maintained by the constructors and by clipping):
/// vertices are pairwise distinct beyond `tol`, every face has at least `D`
/// vertices, and in 3D every edge is shared by exactly two faces. The empty
/// polytope is represented by empty vertex and face lists.
#[derive(Clone, Debug)]
pub struct ConvexPolytope<const D: usize> {
    pub(crate) verts: Vec<[f64; D]>,
    pub(crate) faces: Vec<Face>,
    pub(crate) tol: f64,
}

impl<const D: usize> ConvexPolytope<D> {
    /// Axis-aligned box `[lower, upper]` with walls tagged
    /// `FaceTag::Wall(2 * axis + side)`. The tolerance is set to
    /// `1e-9` times the box diameter.
    ///
    /// Panics unless `lower < upper` componentwise; domain validation with a
    /// proper error happens at the diagram layer.
    pub fn axis_box(lower: [f64; D], upper: [f64; D]) -> Self {
        assert!(D == 2 || D == 3, "only dimensions 2 and 3 are supported");
        for k in 0..D {
            assert!(
                upper[k] - lower[k] > 0.0 && upper[k].is_finite() && lower[k].is_finite(),
                "box extents must be positive and finite"
            );
        }
        let tol = 1e-9 * vec::dist(lower, upper);
        let wall = |axis: usize, side: usize| FaceTag::Wall((2 * axis + side) as u32);
        if D == 2 {
            let verts = vec![
                corner(lower, upper, 0b00),
                corner(lower, upper, 0b01),
                corner(lower, upper, 0b11),
                corner(lower, upper, 0b10),
            ];
            let faces = vec![
                Face::new([0, 1], wall(1, 0)),
                Face::new([1, 2], wall(0, 1)),
                Face::new([2, 3], wall(1, 1)),
                Face::new([3, 0], wall(0, 0)),
            ];
            Self { verts, faces, tol }
        } else {
            let verts = (0..8).map(|bits| corner(lower, upper, bits)).collect();
            // Quads wound counter-clockwise seen from outside.
            let faces = vec![
                Face::new([0, 4, 6, 2], wall(0, 0)),
                Face::new([1, 3, 7, 5], wall(0, 1)),
                Face::new([0, 1, 5, 4], wall(1, 0)),
                Face::new([2, 6, 7, 3], wall(1, 1)),
                Face::new([0, 2, 3, 1], wall(2, 0)),
                Face::new([4, 5, 7, 6], wall(2, 1)),
            ];
            Self { verts, faces, tol }
        }
    }

    /// Assembles a polytope from raw parts; intended for tests and import.
    pub fn from_parts(verts: Vec<[f64; D]>, faces: Vec<Face>, tol: f64) -> Self {
        Self { verts, faces, tol }
    }

    pub fn is_empty(&self) -> bool {
        self.verts.is_empty()
    }

    pub fn vertices(&self) -> &[[f64; D]] {
        &self.verts
    }

    pub fn faces(&self) -> &[Face] {
        &self.faces
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    pub(crate) fn make_empty(&mut self) {
        self.verts.clear();
        self.faces.clear();
    }

    pub fn translate(&mut self, t: [f64; D]) {
        for v in &mut self.verts {
            *v = vec::add(*v, t);
        }
    }

    /// Largest squared vertex distance from `p` (0 for the empty polytope).
    pub fn circumradius_sq_about(&self, p: [f64; D]) -> f64 {
        self.verts
            .iter()
            .map(|&v| vec::dist_sq(v, p))
            .fold(0.0, f64::max)
    }

    /// Distance from an interior point `p` to the polytope boundary:
    /// the smallest distance to any face plane. Returns 0 for the empty
    /// polytope.
    pub fn boundary_distance(&self, p: [f64; D]) -> f64 {
        if self.is_empty() {
            return 0.0;
        }
        let mut min = f64::INFINITY;
        for f in &self.faces {
            if let Some((n, off)) = self.face_plane(f) {
                min = min.min((off - vec::dot(n, p)).abs());
            }
        }
        min
    }

    /// Outward unit normal and offset of a face plane via the Newell rule
    /// (2D: edge normal). `None` for degenerate faces.
    pub(crate) fn face_plane(&self, f: &Face) -> Option<([f64; D], f64)> {
        let fv = &f.verts;
        if fv.len() < D {
            return None;
        }
        let mut n = [0.0; D];
        if D == 2 {
            let a = self.verts[fv[0] as usize];
            let b = self.verts[fv[1] as usize];
            let e = vec::sub(b, a);
            n[0] = e[1];
            n[1] = -e[0];
        } else {
            // Newell accumulation is robust to slight non-planarity.
            for i in 0..fv.len() {
                let a = self.verts[fv[i] as usize];
                let b = self.verts[fv[(i + 1) % fv.len()] as usize];
                n[0] += (a[1] - b[1]) * (a[2] + b[2]);
                n[1] += (a[2] - b[2]) * (a[0] + b[0]);
                n[2] += (a[0] - b[0]) * (a[1] + b[1]);
            }
        }
        let len = vec::norm(n);
        if !(len > 0.0) {
            return None;
        }
        let n = vec::scale(n, 1.0 / len);
        let mut off = 0.0;
        for &i in fv.iter() {
            off += vec::dot(n, self.verts[i as usize]);
        }
        Some((n, off / fv.len() as f64))
    }

    /// Structural diagnostic used by tests and debug builds: face arity,
    /// index bounds, planarity, convexity, and in 3D the Euler relation and
    /// edge pairing. Not needed for correctness of the numeric pipeline.
    pub fn validate(&self) -> Result<(), String> {
        if self.is_empty() {
            if !self.faces.is_empty() {
                return Err("empty polytope with faces".into());
            }
            return Ok(());
        }
        let nv = self.verts.len();
        if self.faces.len() < D + 1 {
            return Err(format!("only {} faces", self.faces.len()));
        }
        for (fi, f) in self.faces.iter().enumerate() {
            if f.verts.len() < D {
                return Err(format!("face {fi} has {} vertices", f.verts.len()));
            }
            for &v in &f.verts {
                if v as usize >= nv {
                    return Err(format!("face {fi} references vertex {v} out of {nv}"));
                }
            }
        }
        // Convexity and planarity: every vertex within tolerance of the
        // inner side of every face plane; face vertices near the plane.
        let slack = 16.0 * self.tol;
        for (fi, f) in self.faces.iter().enumerate() {
            let Some((n, off)) = self.face_plane(f) else {
                return Err(format!("face {fi} is degenerate"));
            };
            for &i in &f.verts {
                let d = vec::dot(n, self.verts[i as usize]) - off;
                if d.abs() > slack {
                    return Err(format!("face {fi} vertex {i} off plane by {d:.3e}"));
                }
            }
            for (vi, &v) in self.verts.iter().enumerate() {
                let d = vec::dot(n, v) - off;
                if d > slack {
                    return Err(format!("vertex {vi} outside face {fi} by {d:.3e}"));
                }
            }
        }
        if D == 3 {
            let mut edges = std::collections::HashMap::new();
            for f in &self.faces {
                for i in 0..f.verts.len() {
                    let a = f.verts[i];
                    let b = f.verts[(i + 1) % f.verts.len()];
                    if a == b {
                        return Err("zero-length edge".into());
                    }
                    *edges.entry((a.min(b), a.max(b))).or_insert(0u32) += 1;
                }
            }
            for (e, count) in &edges {
                if *count != 2 {
                    return Err(format!("edge {e:?} shared by {count} faces"));
                }
            }
            let v = nv as i64;
            let e = edges.len() as i64;
            let f = self.faces.len() as i64;
            if v - e + f != 2 {
                return Err(format!("Euler relation violated: V={v} E={e} F={f}"));
            }
        } else {
            // 2D: every vertex must appear in exactly two edges.
            let mut deg = vec![0u32; nv];
            for f in &self.faces {
                deg[f.verts[0] as usize] += 1;
                deg[f.verts[1] as usize] += 1;
            }
            if deg.iter().any(|&d| d != 2) {
                return Err("2D boundary is not a single cycle".into());
            }
        }
        Ok(())
    }
}

#[inline]
fn corner<const D: usize>(lower: [f64; D], upper: [f64; D], bits: usize) -> [f64; D] {
    let mut c = lower;
    for k in 0..D {
        if bits >> k & 1 == 1 {
            c[k] = upper[k];
        }
    }
    c
}
