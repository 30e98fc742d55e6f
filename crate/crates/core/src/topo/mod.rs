//! Topological and geometric dissimilarity measures used as references for
//! the directional sign loss.

mod assignment;
mod correlation;
mod diagram;
mod persistence;
mod wasserstein;

pub use assignment::{min_cost_assignment, Matching};
pub use correlation::pairwise_correlation_distance;
pub use diagram::{InfiniteDeathPolicy, PersistenceDiagram, PersistencePoint};
pub use persistence::{count_local_minima, sublevel_persistence_0d};
pub use wasserstein::wasserstein_distance;

use crate::error::Result;
use crate::tensor::Tensor;

/// Order-`p` Wasserstein distance between the order-0 sublevel diagrams of
/// two tensors.
pub fn persistence_wasserstein(
    x: &Tensor,
    y: &Tensor,
    p: f64,
    policy: InfiniteDeathPolicy,
) -> Result<f64> {
    let dx = sublevel_persistence_0d(x)?;
    let dy = sublevel_persistence_0d(y)?;
    wasserstein_distance(&dx, &dy, p, policy)
}
