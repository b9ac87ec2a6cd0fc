//! Small fixed-dimension vector helpers on `[f64; D]`.
//!
//! Everything in this crate works in dimension 2 or 3, chosen at compile
//! time. Plain arrays keep the geometry code free of linear-algebra
//! dependencies and trivially `Send`.

#[inline]
pub fn dot<const D: usize>(a: [f64; D], b: [f64; D]) -> f64 {
    let mut s = 0.0;
    for k in 0..D {
        s += a[k] * b[k];
    }
    s
}

#[inline]
pub fn add<const D: usize>(a: [f64; D], b: [f64; D]) -> [f64; D] {
    let mut r = a;
    for k in 0..D {
        r[k] += b[k];
    }
    r
}

#[inline]
pub fn sub<const D: usize>(a: [f64; D], b: [f64; D]) -> [f64; D] {
    let mut r = a;
    for k in 0..D {
        r[k] -= b[k];
    }
    r
}

#[inline]
pub fn scale<const D: usize>(a: [f64; D], s: f64) -> [f64; D] {
    let mut r = a;
    for c in &mut r {
        *c *= s;
    }
    r
}

/// a + t * (b - a)
#[inline]
pub fn lerp<const D: usize>(a: [f64; D], b: [f64; D], t: f64) -> [f64; D] {
    let mut r = a;
    for k in 0..D {
        r[k] += t * (b[k] - a[k]);
    }
    r
}

#[inline]
pub fn norm_sq<const D: usize>(a: [f64; D]) -> f64 {
    dot(a, a)
}

#[inline]
pub fn norm<const D: usize>(a: [f64; D]) -> f64 {
    norm_sq(a).sqrt()
}

#[inline]
pub fn dist_sq<const D: usize>(a: [f64; D], b: [f64; D]) -> f64 {
    norm_sq(sub(a, b))
}

#[inline]
pub fn dist<const D: usize>(a: [f64; D], b: [f64; D]) -> f64 {
    dist_sq(a, b).sqrt()
}

/// Cross product, 3D only.
#[inline]
pub fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

/// Magnitude of the 2D cross product (signed parallelogram area).
#[inline]
pub fn cross2(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}
