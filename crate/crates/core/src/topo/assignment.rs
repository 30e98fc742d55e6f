//! Minimum-cost perfect assignment (Hungarian method with potentials).

use crate::error::{Error, Result};

/// A perfect matching between rows and columns of a square cost matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Matching {
    /// `(row, column)` pairs, sorted by row.
    pub pairs: Vec<(usize, usize)>,
    pub total_cost: f64,
}

/// Optimal assignment of `rows` rows into distinct columns out of `cols >=
/// rows`, minimizing the summed `cost(row, col)`. Costs may be negative but
/// must be finite. Returns the column chosen for each row.
///
/// O(rows^2 * cols).
pub(crate) fn solve_rectangular(
    rows: usize,
    cols: usize,
    cost: impl Fn(usize, usize) -> f64,
) -> Vec<usize> {
    assert!(rows <= cols, "more rows than columns");
    if rows == 0 {
        return Vec::new();
    }
    // 1-based arrays; index 0 is the virtual start column.
    let mut u = vec![0.0f64; rows + 1];
    let mut v = vec![0.0f64; cols + 1];
    let mut owner = vec![0usize; cols + 1];
    let mut way = vec![0usize; cols + 1];
    let mut min_reduced = vec![0.0f64; cols + 1];
    let mut used = vec![false; cols + 1];

    for i in 1..=rows {
        owner[0] = i;
        let mut j0 = 0usize;
        min_reduced.fill(f64::INFINITY);
        used.fill(false);
        loop {
            used[j0] = true;
            let i0 = owner[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0usize;
            for j in 1..=cols {
                if used[j] {
                    continue;
                }
                let reduced = cost(i0 - 1, j - 1) - u[i0] - v[j];
                if reduced < min_reduced[j] {
                    min_reduced[j] = reduced;
                    way[j] = j0;
                }
                if min_reduced[j] < delta {
                    delta = min_reduced[j];
                    j1 = j;
                }
            }
            for j in 0..=cols {
                if used[j] {
                    u[owner[j]] += delta;
                    v[j] -= delta;
                } else {
                    min_reduced[j] -= delta;
                }
            }
            j0 = j1;
            if owner[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            owner[j0] = owner[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    let mut assignment = vec![usize::MAX; rows];
    for j in 1..=cols {
        if owner[j] > 0 {
            assignment[owner[j] - 1] = j - 1;
        }
    }
    assignment
}

/// Minimum-cost perfect matching for a square matrix of finite, non-negative
/// costs.
pub fn min_cost_assignment(cost: &[Vec<f64>]) -> Result<Matching> {
    let n = cost.len();
    if let Some(row) = cost.iter().position(|r| r.len() != n) {
        return Err(Error::Shape(format!(
            "cost matrix is not square: row {row} has {} entries, expected {n}",
            cost[row].len()
        )));
    }
    for (i, row) in cost.iter().enumerate() {
        for (j, &c) in row.iter().enumerate() {
            if !c.is_finite() || c < 0.0 {
                return Err(Error::Domain(format!(
                    "cost[{i}][{j}] = {c} is not finite and non-negative"
                )));
            }
        }
    }
    let assignment = solve_rectangular(n, n, |i, j| cost[i][j]);
    let pairs: Vec<(usize, usize)> = assignment.into_iter().enumerate().collect();
    let total_cost = pairs.iter().map(|&(i, j)| cost[i][j]).sum();
    Ok(Matching { pairs, total_cost })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn brute_force(cost: &[Vec<f64>]) -> f64 {
        fn go(cost: &[Vec<f64>], row: usize, used: &mut Vec<bool>, acc: f64, best: &mut f64) {
            if row == cost.len() {
                *best = best.min(acc);
                return;
            }
            for j in 0..cost.len() {
                if !used[j] {
                    used[j] = true;
                    go(cost, row + 1, used, acc + cost[row][j], best);
                    used[j] = false;
                }
            }
        }
        let mut best = f64::INFINITY;
        go(cost, 0, &mut vec![false; cost.len()], 0.0, &mut best);
        best
    }

    #[test]
    fn small_examples() {
        let m = min_cost_assignment(&[vec![0.0, 9.0], vec![9.0, 0.0]]).unwrap();
        assert_eq!(m.pairs, vec![(0, 0), (1, 1)]);
        assert_eq!(m.total_cost, 0.0);

        let m = min_cost_assignment(&[vec![7.0]]).unwrap();
        assert_eq!(m.pairs, vec![(0, 0)]);
        assert_eq!(m.total_cost, 7.0);

        let m = min_cost_assignment(&[vec![1.0, 2.0], vec![3.0, 1.0]]).unwrap();
        assert_eq!(m.pairs, vec![(0, 0), (1, 1)]);
        assert_eq!(m.total_cost, 2.0);

        let m = min_cost_assignment(&[]).unwrap();
        assert!(m.pairs.is_empty());
    }

    #[test]
    fn validation() {
        assert!(matches!(
            min_cost_assignment(&[vec![1.0, 2.0]]),
            Err(Error::Shape(_))
        ));
        assert!(matches!(
            min_cost_assignment(&[vec![-1.0]]),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            min_cost_assignment(&[vec![f64::NAN]]),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn rectangular_with_negative_costs() {
        let cost = [[-1.0, 4.0, 0.5], [2.0, -3.0, 1.0]];
        let a = solve_rectangular(2, 3, |i, j| cost[i][j]);
        assert_eq!(a, vec![0, 1]);
    }

    proptest! {
        #[test]
        fn matches_brute_force(n in 1usize..=6, seed in prop::collection::vec(0u32..1000, 36)) {
            let cost: Vec<Vec<f64>> = (0..n)
                .map(|i| (0..n).map(|j| f64::from(seed[i * 6 + j]) / 7.0).collect())
                .collect();
            let m = min_cost_assignment(&cost).unwrap();
            let mut cols: Vec<usize> = m.pairs.iter().map(|p| p.1).collect();
            cols.sort_unstable();
            prop_assert_eq!(cols, (0..n).collect::<Vec<_>>());
            prop_assert!((m.total_cost - brute_force(&cost)).abs() < 1e-9);
        }
    }
}
