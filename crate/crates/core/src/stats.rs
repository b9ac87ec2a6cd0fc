//! Small statistics helpers for error reporting: complementary cumulative
//! distributions, quantiles, and the centroid error metric.

use crate::diagram::Domain;

/// Radius of the ball with volume `v` (disc area in 2D).
pub fn equivalent_radius<const D: usize>(v: f64) -> f64 {
    match D {
        2 => (v / std::f64::consts::PI).sqrt(),
        3 => (3.0 * v / (4.0 * std::f64::consts::PI)).cbrt(),
        _ => unreachable!("diagrams are 2D or 3D"),
    }
}

/// Per-cell `|x_i - c_i| / r_i` with `r_i` the volume-equivalent radius;
/// distances use the periodic metric on periodic domains.
pub fn centroid_relative_errors<const D: usize>(
    domain: &Domain<D>,
    positions: &[[f64; D]],
    centroids: &[[f64; D]],
    volumes: &[f64],
) -> Vec<f64> {
    positions
        .iter()
        .zip(centroids)
        .zip(volumes)
        .map(|((&x, &c), &v)| domain.dist_sq(x, c).sqrt() / equivalent_radius::<D>(v))
        .collect()
}

/// Complementary cumulative distribution tabulated at the distinct sample
/// values: `fractions[k]` is the fraction of samples strictly greater than
/// `xs[k]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Ccdf {
    pub xs: Vec<f64>,
    pub fractions: Vec<f64>,
}

pub fn ccdf(values: &[f64]) -> Ccdf {
    let n = values.len();
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut xs = Vec::new();
    let mut fractions = Vec::new();
    let mut k = 0;
    while k < n {
        let x = sorted[k];
        while k < n && sorted[k] == x {
            k += 1;
        }
        xs.push(x);
        fractions.push((n - k) as f64 / n as f64);
    }
    Ccdf { xs, fractions }
}

impl Ccdf {
    /// Fraction of samples strictly greater than `x`.
    pub fn fraction_above(&self, x: f64) -> f64 {
        match self.xs.partition_point(|&v| v <= x) {
            0 => 1.0,
            k => self.fractions[k - 1],
        }
    }
}

/// Linear-interpolation quantile (the common "type 7" definition) of
/// already positive-length data; `q` clamped to [0, 1].
pub fn quantile(values: &[f64], q: f64) -> f64 {
    assert!(!values.is_empty(), "quantile of empty data");
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] * (1.0 - frac) + sorted[hi] * frac
}

/// Sample coefficient of variation: (n-1)-normalised standard deviation
/// over the mean.
pub fn coefficient_of_variation(values: &[f64]) -> f64 {
    let n = values.len();
    assert!(n > 1, "cv needs at least two samples");
    let mean = values.iter().sum::<f64>() / n as f64;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    var.sqrt() / mean
}
