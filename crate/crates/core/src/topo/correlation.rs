//! Pairwise linear correlation distance.
//!
//! Both inputs are viewed as `m` spatial locations, each carrying a feature
//! vector. The strict upper triangles of the two `m x m` Euclidean distance
//! matrices are compared with Pearson's correlation; the distance is one
//! minus that correlation.

use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Splits `t` into per-location feature vectors. With no feature axis,
/// every element is a location with a scalar feature.
fn locations(t: &Tensor, feature_axis: Option<usize>) -> Result<Vec<Vec<f64>>> {
    let Some(axis) = feature_axis else {
        return Ok(t.data().iter().map(|&v| vec![v]).collect());
    };
    let layout = t.axis_layout(axis)?;
    let mut out = Vec::with_capacity(layout.outer * layout.inner);
    for o in 0..layout.outer {
        for i in 0..layout.inner {
            let base = o * layout.extent * layout.inner + i;
            out.push(
                (0..layout.extent)
                    .map(|k| t.data()[base + k * layout.inner])
                    .collect(),
            );
        }
    }
    Ok(out)
}

fn upper_distances(locs: &[Vec<f64>]) -> Vec<f64> {
    let m = locs.len();
    let mut out = Vec::with_capacity(m * (m - 1) / 2);
    for i in 0..m {
        for j in i + 1..m {
            let sq: f64 = locs[i]
                .iter()
                .zip(&locs[j])
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            out.push(sq.sqrt());
        }
    }
    out
}

pub(crate) fn pearson(a: &[f64], b: &[f64]) -> Result<f64> {
    let n = a.len() as f64;
    let mean_a = a.iter().sum::<f64>() / n;
    let mean_b = b.iter().sum::<f64>() / n;
    let (mut cov, mut var_a, mut var_b) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - mean_a, y - mean_b);
        cov += dx * dy;
        var_a += dx * dx;
        var_b += dy * dy;
    }
    if var_a <= 0.0 || var_b <= 0.0 {
        return Err(Error::UndefinedCorrelation);
    }
    Ok((cov / (var_a.sqrt() * var_b.sqrt())).clamp(-1.0, 1.0))
}

/// `1 - pearson(dist(X), dist(Y))`, in `[0, 2]`.
pub fn pairwise_correlation_distance(
    x: &Tensor,
    y: &Tensor,
    feature_axis: Option<usize>,
) -> Result<f64> {
    if x.shape() != y.shape() {
        return Err(Error::Shape(format!(
            "operands differ in shape: {:?} vs {:?}",
            x.shape(),
            y.shape()
        )));
    }
    x.ensure_finite()?;
    y.ensure_finite()?;
    let lx = locations(x, feature_axis)?;
    if lx.len() < 3 {
        return Err(Error::TooFewLocations(lx.len()));
    }
    let ly = locations(y, feature_axis)?;
    let r = pearson(&upper_distances(&lx), &upper_distances(&ly))?;
    Ok(1.0 - r)
}
