//! Exact volume, centroid and second-moment integrals.
//!
//! Every face is fanned into simplices from the vertex mean, which is
//! interior for a convex polytope, so per-simplex absolute volumes sum to
//! the exact polytope volume regardless of face orientation. Simplex
//! moments use the closed form
//! `int_S |x - p|^2 dx = V / ((d+1)(d+2)) * (sum |u_i|^2 + |sum u_i|^2)`
//! with `u_i` the simplex vertices relative to `p`.

use super::polytope::ConvexPolytope;
use super::FaceTag;
use crate::vec;

/// Integral quantities of one cell, plus per-face boundary areas.
///
/// `second_moment_about` recovers the moment about any point through the
/// parallel-axis identity, so only the moment about the centroid is stored.
/// An empty cell has all measures zero and centroid at the origin.
#[derive(Clone, Debug, PartialEq)]
pub struct CellMeasures<const D: usize> {
    pub volume: f64,
    pub centroid: [f64; D],
    /// `int |x - centroid|^2 dx`
    pub moment_centroid: f64,
    pub surface_area: f64,
    /// Area (2D: length) per face, in face storage order.
    pub face_areas: Vec<(FaceTag, f64)>,
}

impl<const D: usize> Default for CellMeasures<D> {
    fn default() -> Self {
        Self {
            volume: 0.0,
            centroid: [0.0; D],
            moment_centroid: 0.0,
            surface_area: 0.0,
            face_areas: Vec::new(),
        }
    }
}

impl<const D: usize> CellMeasures<D> {
    /// `int |x - p|^2 dx` over the cell.
    #[inline]
    pub fn second_moment_about(&self, p: [f64; D]) -> f64 {
        self.moment_centroid + self.volume * vec::dist_sq(p, self.centroid)
    }

    /// Boundary measure of the volume-equivalent ball divided by the actual
    /// boundary measure: 1 for a ball, smaller for anything else.
    pub fn sphericity(&self) -> f64 {
        use std::f64::consts::PI;
        if !(self.volume > 0.0) || !(self.surface_area > 0.0) {
            return 0.0;
        }
        match D {
            2 => 2.0 * (PI * self.volume).sqrt() / self.surface_area,
            3 => PI.powf(1.0 / 3.0) * (6.0 * self.volume).powf(2.0 / 3.0) / self.surface_area,
            _ => unreachable!(),
        }
    }
}

impl<const D: usize> ConvexPolytope<D> {
    /// Computes all measures in one pass over the faces.
    pub fn measures(&self) -> CellMeasures<D> {
        if self.is_empty() || self.verts.len() < D + 1 {
            return CellMeasures::default();
        }
        let mut origin = [0.0; D];
        for &v in &self.verts {
            origin = vec::add(origin, v);
        }
        let origin = vec::scale(origin, 1.0 / self.verts.len() as f64);

        let mut volume = 0.0;
        let mut cvol = [0.0; D]; // volume-weighted centroid accumulator
        let mut moment_o = 0.0; // second moment about `origin`
        let mut face_areas = Vec::with_capacity(self.faces.len());
        let mut surface = 0.0;

        for f in &self.faces {
            let mut area = 0.0;
            if D == 2 {
                let a = self.verts[f.verts[0] as usize];
                let b = self.verts[f.verts[1] as usize];
                area = vec::dist(a, b);
                let ua = vec::sub(a, origin);
                let ub = vec::sub(b, origin);
                let v = tri_area2(ua, ub) / 2.0;
                volume += v;
                cvol = vec::add(cvol, vec::scale(vec::add(vec::add(a, b), origin), v / 3.0));
                moment_o +=
                    v / 12.0 * (vec::norm_sq(ua) + vec::norm_sq(ub) + vec::norm_sq(vec::add(ua, ub)));
            } else {
                let m = f.verts.len();
                let mut fc = [0.0; D];
                for &i in &f.verts {
                    fc = vec::add(fc, self.verts[i as usize]);
                }
                let fc = vec::scale(fc, 1.0 / m as f64);
                let um = vec::sub(fc, origin);
                for i in 0..m {
                    let a = self.verts[f.verts[i] as usize];
                    let b = self.verts[f.verts[(i + 1) % m] as usize];
                    area += tri_area3(vec::sub(a, fc), vec::sub(b, fc)) / 2.0;
                    let ua = vec::sub(a, origin);
                    let ub = vec::sub(b, origin);
                    let v = triple(um, ua, ub).abs() / 6.0;
                    volume += v;
                    let csum = vec::add(vec::add(fc, a), vec::add(b, origin));
                    cvol = vec::add(cvol, vec::scale(csum, v / 4.0));
                    let usum = vec::add(vec::add(um, ua), ub);
                    moment_o += v / 20.0
                        * (vec::norm_sq(um)
                            + vec::norm_sq(ua)
                            + vec::norm_sq(ub)
                            + vec::norm_sq(usum));
                }
            }
            face_areas.push((f.tag, area));
            surface += area;
        }

        if !(volume > 0.0) {
            return CellMeasures {
                face_areas,
                surface_area: surface,
                ..CellMeasures::default()
            };
        }
        let centroid = vec::scale(cvol, 1.0 / volume);
        // Parallel axis back to the centroid; clamp tiny negatives from
        // cancellation.
        let moment_centroid = (moment_o - volume * vec::dist_sq(centroid, origin)).max(0.0);
        CellMeasures {
            volume,
            centroid,
            moment_centroid,
            surface_area: surface,
            face_areas,
        }
    }

    /// Area (2D: length) of one face by index.
    pub fn face_area(&self, face: usize) -> f64 {
        let f = &self.faces[face];
        if D == 2 {
            vec::dist(
                self.verts[f.verts[0] as usize],
                self.verts[f.verts[1] as usize],
            )
        } else {
            let m = f.verts.len();
            let mut fc = [0.0; D];
            for &i in &f.verts {
                fc = vec::add(fc, self.verts[i as usize]);
            }
            let fc = vec::scale(fc, 1.0 / m as f64);
            let mut area = 0.0;
            for i in 0..m {
                let a = self.verts[f.verts[i] as usize];
                let b = self.verts[f.verts[(i + 1) % m] as usize];
                area += tri_area3(vec::sub(a, fc), vec::sub(b, fc)) / 2.0;
            }
            area
        }
    }
}

/// |u x v| for 2D vectors (twice the triangle area).
#[inline]
fn tri_area2<const D: usize>(u: [f64; D], v: [f64; D]) -> f64 {
    (u[0] * v[1] - u[1] * v[0]).abs()
}

/// |u x v| for 3D vectors (twice the triangle area).
#[inline]
fn tri_area3<const D: usize>(u: [f64; D], v: [f64; D]) -> f64 {
    let x = u[1] * v[2] - u[2] * v[1];
    let y = u[2] * v[0] - u[0] * v[2];
    let z = u[0] * v[1] - u[1] * v[0];
    (x * x + y * y + z * z).sqrt()
}

/// Scalar triple product u . (v x w) for 3D vectors.
#[inline]
fn triple<const D: usize>(u: [f64; D], v: [f64; D], w: [f64; D]) -> f64 {
    u[0] * (v[1] * w[2] - v[2] * w[1]) + u[1] * (v[2] * w[0] - v[0] * w[2])
        + u[2] * (v[0] * w[1] - v[1] * w[0])
}

#[cfg(test)]
mod tests {
    use super::super::{FaceTag, HalfSpace};
    use super::*;

    #[test]
    fn unit_square_measures() {
        let p = ConvexPolytope::<2>::axis_box([0.0, 0.0], [1.0, 1.0]);
        let m = p.measures();
        assert!((m.volume - 1.0).abs() < 1e-14);
        assert!(vec::dist(m.centroid, [0.5, 0.5]) < 1e-14);
        // int |x - c|^2 over the unit square = 1/6.
        assert!((m.moment_centroid - 1.0 / 6.0).abs() < 1e-14);
        // About a corner: 1/6 + |c|^2 = 2/3.
        assert!((m.second_moment_about([0.0, 0.0]) - 2.0 / 3.0).abs() < 1e-14);
        assert!((m.surface_area - 4.0).abs() < 1e-14);
        // Square sphericity analogue: 2 sqrt(pi) / 4.
        assert!((m.sphericity() - std::f64::consts::PI.sqrt() / 2.0).abs() < 1e-12);
    }

    #[test]
    fn unit_cube_measures() {
        let p = ConvexPolytope::<3>::axis_box([0.0; 3], [1.0; 3]);
        let m = p.measures();
        assert!((m.volume - 1.0).abs() < 1e-14);
        assert!(vec::dist(m.centroid, [0.5; 3]) < 1e-14);
        // int |x - c|^2 over the unit cube = 3/12 = 1/4.
        assert!((m.moment_centroid - 0.25).abs() < 1e-14);
        assert!((m.surface_area - 6.0).abs() < 1e-14);
        // Cube sphericity: pi^(1/3) 6^(2/3) / 6 = 0.8060 to four digits.
        assert!((m.sphericity() - 0.805_995_977_008_936).abs() < 1e-12);
        for (_, a) in &m.face_areas {
            assert!((a - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn elongated_box_is_less_spherical_than_cube() {
        let long = ConvexPolytope::<3>::axis_box([0.0; 3], [4.0, 1.0, 1.0]).measures();
        let cube = ConvexPolytope::<3>::axis_box([0.0; 3], [1.0; 3]).measures();
        assert!(long.sphericity() < cube.sphericity());
        assert!((long.surface_area - 18.0).abs() < 1e-12);
    }

    #[test]
    fn moment_scales_with_size() {
        // Side-2 cube about its centre: V * (3 s^2 / 12) = 8 * 1 = 8 * 3*4/12.
        let p = ConvexPolytope::<3>::axis_box([0.0; 3], [2.0; 3]);
        let m = p.measures();
        assert!((m.moment_centroid - 8.0).abs() < 1e-12);
    }

    #[test]
    fn clipped_tetrahedron_volume() {
        // Corner simplex x+y+z <= 1 of the unit cube: volume 1/6, centroid
        // at (1/4, 1/4, 1/4).
        let mut p = ConvexPolytope::<3>::axis_box([0.0; 3], [1.0; 3]);
        p.clip_halfspace(
            &HalfSpace::new([1.0, 1.0, 1.0], 1.0),
            FaceTag::Neighbor { seed: 0, image: 0 },
        );
        p.validate().unwrap();
        let m = p.measures();
        assert!((m.volume - 1.0 / 6.0).abs() < 1e-12);
        assert!(vec::dist(m.centroid, [0.25; 3]) < 1e-12);
    }
}
