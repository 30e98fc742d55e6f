//! Directional sign loss (DSL): a differentiable count of finite-difference
//! sign mismatches between two arrays, with the topological measures it
//! stands in for.
//!
//! * [`dsl`]: the loss, its gradient and the exact count it approximates.
//! * [`topo`]: 0-D sublevel persistence, diagram Wasserstein distance and
//!   pairwise correlation distance.
//! * [`calibration`]: picks a sharpness that makes DSL track a reference loss.
//! * [`autoencoder`]: a small MLP autoencoder harness for loss comparisons.
//! * [`bench`]: wall-time scaling benchmark.
//!
//! ```
//! use signloss::{dsl_loss, DslConfig, Tensor};
//!
//! let x = Tensor::vector(&[0.0, 1.0, 0.0]);
//! let y = Tensor::vector(&[0.0, 1.0, 2.0]);
//! let loss = dsl_loss(&x, &y, &DslConfig::new(1e6)).unwrap();
//! assert!((loss - 1.0).abs() < 1e-9);
//! ```

pub mod autoencoder;
pub mod bench;
pub mod calibration;
pub mod dsl;
pub mod error;
pub mod format;
pub mod tensor;
pub mod topo;

pub use calibration::{find_sharpness, CalibrationConfig, ReferenceLoss};
pub use dsl::{
    dsl_forward, dsl_gradient, dsl_loss, exact_sign_mismatch_count, DslConfig, DslGradient,
    LossValue, Reduction, Scaling, SignKind,
};
pub use error::{Error, Result};
pub use format::{read_tensor, write_tensor};
pub use tensor::Tensor;
