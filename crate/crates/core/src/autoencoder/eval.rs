use crate::dsl::exact_sign;
use crate::error::{Error, Result};
use crate::tensor::Tensor;
use crate::topo::{pairwise_correlation_distance, persistence_wasserstein, InfiniteDeathPolicy};

/// Running sum of the signs of successive differences, starting at 0.
pub fn cumulative_signs(x: &Tensor) -> Result<Tensor> {
    if x.rank() != 1 {
        return Err(Error::Shape(format!("expected rank 1, got {:?}", x.shape())));
    }
    if x.len() < 2 {
        return Err(Error::DegenerateAxis {
            axis: 0,
            extent: x.len(),
        });
    }
    let mut out = Vec::with_capacity(x.len());
    let mut level = 0.0;
    out.push(level);
    for w in x.data().windows(2) {
        level += exact_sign(w[1] - w[0]);
        out.push(level);
    }
    Ok(Tensor::vector(&out))
}

/// Fraction of finite-difference positions, over every axis, where both
/// tensors have exactly the same sign.
pub fn directional_agreement(x: &Tensor, y: &Tensor) -> Result<f64> {
    if x.shape() != y.shape() {
        return Err(Error::Shape(format!(
            "operands differ in shape: {:?} vs {:?}",
            x.shape(),
            y.shape()
        )));
    }
    let mut agree = 0usize;
    let mut total = 0usize;
    for axis in 0..x.rank() {
        let dx = x.finite_difference(axis)?;
        let dy = y.finite_difference(axis)?;
        total += dx.len();
        agree += dx
            .data()
            .iter()
            .zip(dy.data())
            .filter(|(a, b)| exact_sign(**a) == exact_sign(**b))
            .count();
    }
    Ok(agree as f64 / total as f64)
}

/// Per-example comparison of an original and its reconstruction.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExampleEvaluation {
    pub example: usize,
    pub directional_agreement: f64,
    /// Order-2 Wasserstein distance between order-0 diagrams, essential
    /// points capped at each filtration's maximum.
    pub persistence_wasserstein: f64,
    /// NaN when undefined (e.g. a constant reconstruction).
    pub correlation_distance: f64,
}

/// Evaluates matching rows of two `(rows, features)` tensors.
pub fn evaluate_rows(original: &Tensor, reconstruction: &Tensor) -> Result<Vec<ExampleEvaluation>> {
    if original.shape() != reconstruction.shape() || original.rank() != 2 {
        return Err(Error::Shape(format!(
            "expected matching (rows, features) tensors, got {:?} and {:?}",
            original.shape(),
            reconstruction.shape()
        )));
    }
    (0..original.shape()[0])
        .map(|r| {
            let x = original.slice_leading(r)?;
            let y = reconstruction.slice_leading(r)?;
            let correlation_distance = match pairwise_correlation_distance(&x, &y, None) {
                Ok(d) => d,
                Err(Error::UndefinedCorrelation) => f64::NAN,
                Err(e) => return Err(e),
            };
            Ok(ExampleEvaluation {
                example: r,
                directional_agreement: directional_agreement(&x, &y)?,
                persistence_wasserstein: persistence_wasserstein(
                    &x,
                    &y,
                    2.0,
                    InfiniteDeathPolicy::CapAtGlobalMax,
                )?,
                correlation_distance,
            })
        })
        .collect()
}

/// CSV with header
/// `example,directional_agreement,persistence_wasserstein,correlation_distance`.
pub fn evaluations_csv(rows: &[ExampleEvaluation]) -> String {
    let mut out =
        String::from("example,directional_agreement,persistence_wasserstein,correlation_distance\n");
    for r in rows {
        out.push_str(&format!(
            "{},{:e},{:e},{:e}\n",
            r.example, r.directional_agreement, r.persistence_wasserstein, r.correlation_distance
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::exact_sign_mismatch_count;

    #[test]
    fn cumulative_examples() {
        let c = cumulative_signs(&Tensor::vector(&[0.0, 1.0, 0.0])).unwrap();
        assert_eq!(c.data(), &[0.0, 1.0, 0.0]);
        let inc: Vec<f64> = (0..6).map(|i| f64::from(i) * 0.3).collect();
        let c = cumulative_signs(&Tensor::vector(&inc)).unwrap();
        assert_eq!(c.data(), &[0.0, 1.0, 2.0, 3.0, 4.0, 5.0]);
        let c = cumulative_signs(&Tensor::vector(&[2.0; 4])).unwrap();
        assert_eq!(c.data(), &[0.0; 4]);
        assert!(cumulative_signs(&Tensor::vector(&[1.0])).is_err());
    }

    #[test]
    fn agreement_examples() {
        let x = Tensor::vector(&[0.0, 1.0, 0.0]);
        assert_eq!(directional_agreement(&x, &x).unwrap(), 1.0);
        let y = Tensor::vector(&[0.0, 1.0, 2.0]);
        assert_eq!(directional_agreement(&x, &y).unwrap(), 0.5);
        let inc = Tensor::vector(&[1.0, 2.0, 4.0, 8.0]);
        assert_eq!(directional_agreement(&inc, &inc.map(|v| -v)).unwrap(), 0.0);
    }

    #[test]
    fn agreement_complements_mismatch_count() {
        let x = Tensor::new(vec![3, 3], vec![0.3, 1.2, -0.5, 2.0, 0.1, 0.7, -1.0, 0.4, 0.9]).unwrap();
        let y = Tensor::new(vec![3, 3], vec![1.0, 0.2, 0.5, -2.0, 0.8, 0.6, 1.5, 0.3, -0.9]).unwrap();
        let n = 12.0;
        let a = directional_agreement(&x, &y).unwrap();
        let c = exact_sign_mismatch_count(&x, &y, None, false).unwrap();
        assert!((a - (1.0 - c / n)).abs() < 1e-15);
    }

    #[test]
    fn evaluate_identity_rows() {
        let x = Tensor::new(vec![2, 4], vec![0.0, 1.0, 0.5, 2.0, 3.0, 1.0, 2.0, 0.0]).unwrap();
        let rows = evaluate_rows(&x, &x).unwrap();
        assert_eq!(rows.len(), 2);
        for r in &rows {
            assert_eq!(r.directional_agreement, 1.0);
            assert_eq!(r.persistence_wasserstein, 0.0);
            assert!(r.correlation_distance.abs() < 1e-12);
        }
        let flat = Tensor::zeros(&[2, 4]).unwrap();
        assert!(evaluate_rows(&x, &flat).unwrap()[0].correlation_distance.is_nan());
        assert!(evaluations_csv(&rows).starts_with("example,directional_agreement"));
    }
}
