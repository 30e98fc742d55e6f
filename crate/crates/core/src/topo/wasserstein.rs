//! p-Wasserstein distance between persistence diagrams.
//!
//! Each diagram is augmented with the diagonal projections of the other's
//! points; a point may then match a point of the other diagram or the
//! diagonal, and diagonal-to-diagonal matches are free. Since diagonal slots
//! are interchangeable, the assignment is solved in reduced form: rows are
//! the points of the smaller diagram, columns are the other diagram's points
//! plus one diagonal slot per row.

use crate::error::{Error, Result};

use super::assignment::solve_rectangular;
use super::diagram::{InfiniteDeathPolicy, PersistenceDiagram, PersistencePoint};

/// Euclidean distance from a point to its diagonal projection.
fn diagonal_distance(p: &PersistencePoint) -> f64 {
    (p.death - p.birth).abs() / std::f64::consts::SQRT_2
}

fn point_distance(a: &PersistencePoint, b: &PersistencePoint) -> f64 {
    (a.birth - b.birth).hypot(a.death - b.death)
}

/// `p`-th power of the optimal matching cost between two finite diagrams.
pub(crate) fn matching_cost_pow(a: &[PersistencePoint], b: &[PersistencePoint], p: f64) -> f64 {
    let (rows, cols) = if a.len() <= b.len() { (a, b) } else { (b, a) };
    let pw = |d: f64| d.powf(p);
    let row_diag: Vec<f64> = rows.iter().map(|x| pw(diagonal_distance(x))).collect();
    let col_diag: Vec<f64> = cols.iter().map(|y| pw(diagonal_distance(y))).collect();
    // Matching row i to real column j saves col_diag[j] that would otherwise
    // be paid to send that column to the diagonal.
    let n = rows.len();
    let assignment = solve_rectangular(n, cols.len() + n, |i, j| {
        if j < cols.len() {
            pw(point_distance(&rows[i], &cols[j])) - col_diag[j]
        } else {
            row_diag[i]
        }
    });
    // Sum the matched costs directly rather than through the savings form,
    // so identical diagrams give exactly zero.
    let mut matched = vec![false; cols.len()];
    let mut total = 0.0;
    for (i, &j) in assignment.iter().enumerate() {
        if j < cols.len() {
            matched[j] = true;
            total += pw(point_distance(&rows[i], &cols[j]));
        } else {
            total += row_diag[i];
        }
    }
    total
        + col_diag
            .iter()
            .zip(&matched)
            .filter(|(_, &m)| !m)
            .map(|(c, _)| c)
            .sum::<f64>()
}

/// `(sum over the optimal matching of |x - y|^p)^(1/p)`.
pub fn wasserstein_distance(
    d1: &PersistenceDiagram,
    d2: &PersistenceDiagram,
    p: f64,
    policy: InfiniteDeathPolicy,
) -> Result<f64> {
    if !(p >= 1.0 && p.is_finite()) {
        return Err(Error::Order(p));
    }
    let a = d1.resolve_infinite(policy)?;
    let b = d2.resolve_infinite(policy)?;
    Ok(matching_cost_pow(&a, &b, p).powf(1.0 / p))
}
