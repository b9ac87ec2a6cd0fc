//! Half-space clipping, mutating the boundary representation in place.
//!
//! Each face is walked once. Edges crossing the plane get intersection
//! vertices computed once per original edge (in a canonical vertex order, so
//! faces sharing the edge reference the bit-identical point), and the
//! section polygon is closed with one new face carrying the caller's tag:
//! in 3D by sorting the on-plane vertices angularly about their mean, which
//! is the correct cyclic order because sections of convex polytopes are
//! convex; in 2D by taking the two extreme on-plane points.

use smallvec::SmallVec;

use super::polytope::{ConvexPolytope, Face};
use super::{ClipOutcome, FaceTag, HalfSpace};
use crate::vec;

type CutCache = SmallVec<[(u32, u32, u32); 16]>;

impl<const D: usize> ConvexPolytope<D> {
    /// Intersects the polytope with `h`; the section face (if present) is
    /// tagged `tag`.
    ///
    /// Touching contact, where no interior survives, clears the polytope and
    /// reports `Empty`; vanishing cells are expected under extreme weights
    /// and are not an error.
    pub fn clip_halfspace(&mut self, h: &HalfSpace<D>, tag: FaceTag) -> ClipOutcome {
        if self.is_empty() {
            return ClipOutcome::Empty;
        }
        let eps = self.tol;
        let s: SmallVec<[f64; 64]> = self.verts.iter().map(|&v| h.signed_distance(v)).collect();
        let max_s = s.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if max_s <= eps {
            return ClipOutcome::Unchanged;
        }
        let min_s = s.iter().copied().fold(f64::INFINITY, f64::min);
        if min_s >= -eps {
            self.make_empty();
            return ClipOutcome::Empty;
        }

        let class = |i: u32| -> i8 {
            let si = s[i as usize];
            if si > eps {
                1
            } else if si < -eps {
                -1
            } else {
                0
            }
        };

        let mut cuts: CutCache = SmallVec::new();
        // On-plane vertices: fresh cuts plus kept on-plane originals.
        let mut cap: SmallVec<[u32; 24]> = SmallVec::new();
        let mut new_faces: Vec<Face> = Vec::with_capacity(self.faces.len() + 1);
        let old_faces = std::mem::take(&mut self.faces);

        if D == 2 {
            for f in old_faces {
                let (a, b) = (f.verts[0], f.verts[1]);
                let (ca, cb) = (class(a), class(b));
                if ca == 0 {
                    cap.push(a);
                }
                if cb == 0 {
                    cap.push(b);
                }
                match (ca, cb) {
                    _ if ca <= 0 && cb <= 0 => new_faces.push(f),
                    (-1, 1) => {
                        let x = cut_point(&mut self.verts, &s, &mut cuts, a, b);
                        cap.push(x);
                        new_faces.push(Face::new([a, x], f.tag));
                    }
                    (1, -1) => {
                        let x = cut_point(&mut self.verts, &s, &mut cuts, a, b);
                        cap.push(x);
                        new_faces.push(Face::new([x, b], f.tag));
                    }
                    // (0,1), (1,0): the kept part is a single point; (1,1):
                    // fully outside. Either way the edge is gone.
                    _ => {}
                }
            }
        } else {
            for f in old_faces {
                let m = f.verts.len();
                let mut out: SmallVec<[u32; 8]> = SmallVec::new();
                for i in 0..m {
                    let a = f.verts[i];
                    let b = f.verts[(i + 1) % m];
                    let ca = class(a);
                    if ca <= 0 {
                        out.push(a);
                        if ca == 0 {
                            cap.push(a);
                        }
                    }
                    let cb = class(b);
                    if (ca < 0 && cb > 0) || (ca > 0 && cb < 0) {
                        let x = cut_point(&mut self.verts, &s, &mut cuts, a, b);
                        out.push(x);
                        cap.push(x);
                    }
                }
                dedupe_cycle(&mut out);
                if out.len() >= 3 {
                    new_faces.push(Face { verts: out, tag: f.tag });
                }
            }
        }

        // Merge on-plane vertices that coincide within tolerance (a cut
        // passing through an existing vertex produces such pairs). Interior
        // vertices cannot coincide with on-plane ones: they sit more than
        // eps away from the plane.
        let mut processed: SmallVec<[u32; 24]> = SmallVec::new();
        let mut uniq: SmallVec<[u32; 16]> = SmallVec::new();
        let mut remap: SmallVec<[(u32, u32); 8]> = SmallVec::new();
        for &i in &cap {
            if processed.contains(&i) {
                continue;
            }
            processed.push(i);
            let p = self.verts[i as usize];
            match uniq
                .iter()
                .find(|&&j| vec::dist_sq(p, self.verts[j as usize]) <= eps * eps)
            {
                Some(&j) => remap.push((i, j)),
                None => uniq.push(i),
            }
        }
        if !remap.is_empty() {
            new_faces.retain_mut(|f| {
                for v in &mut f.verts {
                    if let Some(&(_, j)) = remap.iter().find(|&&(dup, _)| dup == *v) {
                        *v = j;
                    }
                }
                dedupe_cycle(&mut f.verts);
                f.verts.len() >= D
            });
        }

        // Close the section.
        if D == 2 {
            if uniq.len() >= 2 {
                let mut t = [0.0; D];
                t[0] = -h.normal[1];
                t[1] = h.normal[0];
                let proj = |i: u32| vec::dot(t, self.verts[i as usize]);
                let lo = *uniq
                    .iter()
                    .min_by(|&&i, &&j| proj(i).total_cmp(&proj(j)))
                    .unwrap();
                let hi = *uniq
                    .iter()
                    .max_by(|&&i, &&j| proj(i).total_cmp(&proj(j)))
                    .unwrap();
                if lo != hi {
                    new_faces.push(Face::new([lo, hi], tag));
                }
            }
        } else if uniq.len() >= 3 {
            let mut c = [0.0; D];
            for &i in &uniq {
                c = vec::add(c, self.verts[i as usize]);
            }
            c = vec::scale(c, 1.0 / uniq.len() as f64);
            let (e1, e2) = plane_basis(h.normal);
            let mut order: SmallVec<[(f64, u32); 16]> = uniq
                .iter()
                .map(|&i| {
                    let r = vec::sub(self.verts[i as usize], c);
                    (f64::atan2(vec::dot(r, e2), vec::dot(r, e1)), i)
                })
                .collect();
            order.sort_by(|x, y| x.0.total_cmp(&y.0));
            new_faces.push(Face::new(order.iter().map(|&(_, i)| i), tag));
        }

        self.faces = new_faces;
        self.gc_vertices();
        let min_faces = if D == 2 { 3 } else { 4 };
        if self.faces.len() < min_faces || self.verts.len() < D + 1 {
            self.make_empty();
            return ClipOutcome::Empty;
        }
        ClipOutcome::Clipped
    }

    fn gc_vertices(&mut self) {
        let mut slot: SmallVec<[u32; 64]> = SmallVec::new();
        slot.resize(self.verts.len(), u32::MAX);
        for f in &self.faces {
            for &v in &f.verts {
                slot[v as usize] = 0;
            }
        }
        let mut count = 0u32;
        for s in slot.iter_mut() {
            if *s == 0 {
                *s = count;
                count += 1;
            }
        }
        if count as usize == self.verts.len() {
            return;
        }
        let mut verts = Vec::with_capacity(count as usize);
        for (i, &v) in self.verts.iter().enumerate() {
            if slot[i] != u32::MAX {
                verts.push(v);
            }
        }
        self.verts = verts;
        for f in &mut self.faces {
            for v in &mut f.verts {
                *v = slot[*v as usize];
            }
        }
    }
}

/// Shared intersection vertex for the original edge `{a, b}`, computed in
/// canonical index order so both incident faces get the identical point.
fn cut_point<const D: usize>(
    verts: &mut Vec<[f64; D]>,
    s: &[f64],
    cuts: &mut CutCache,
    a: u32,
    b: u32,
) -> u32 {
    let (lo, hi) = (a.min(b), a.max(b));
    if let Some(&(_, _, idx)) = cuts.iter().find(|&&(x, y, _)| x == lo && y == hi) {
        return idx;
    }
    let (sl, sh) = (s[lo as usize], s[hi as usize]);
    debug_assert!(sl * sh < 0.0, "cut requested for a non-crossing edge");
    let t = sl / (sl - sh);
    let p = vec::lerp(verts[lo as usize], verts[hi as usize], t);
    let idx = verts.len() as u32;
    verts.push(p);
    cuts.push((lo, hi, idx));
    idx
}

fn dedupe_cycle<A: smallvec::Array<Item = u32>>(v: &mut SmallVec<A>) {
    let mut i = 0;
    while v.len() > 1 && i < v.len() {
        if v[i] == v[(i + 1) % v.len()] {
            if i == v.len() - 1 {
                v.pop();
            } else {
                v.remove(i + 1);
            }
        } else {
            i += 1;
        }
    }
}

/// Orthonormal basis of the plane orthogonal to `n` (3D only).
fn plane_basis<const D: usize>(n: [f64; D]) -> ([f64; D], [f64; D]) {
    debug_assert!(D == 3);
    let mut axis = [0.0; D];
    let k = (0..3).min_by(|&i, &j| n[i].abs().total_cmp(&n[j].abs())).unwrap();
    axis[k] = 1.0;
    let mut e1 = [0.0; D];
    e1[0] = n[1] * axis[2] - n[2] * axis[1];
    e1[1] = n[2] * axis[0] - n[0] * axis[2];
    e1[2] = n[0] * axis[1] - n[1] * axis[0];
    let e1 = vec::scale(e1, 1.0 / vec::norm(e1));
    let mut e2 = [0.0; D];
    e2[0] = n[1] * e1[2] - n[2] * e1[1];
    e2[1] = n[2] * e1[0] - n[0] * e1[2];
    e2[2] = n[0] * e1[1] - n[1] * e1[0];
    (e1, e2)
}
