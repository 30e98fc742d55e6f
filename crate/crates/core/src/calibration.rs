//! Learning the sharpness so that the loss tracks a reference loss on
//! random pairs of examples.
//!
//! Each step samples a batch, pairs its two halves positionally, and takes a
//! gradient step on `(dsl(s) - reference)^2` with respect to `log s`.

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::dsl::{dsl_gradient, dsl_loss, DslConfig, SignKind};
use crate::error::{Error, Result};
use crate::tensor::Tensor;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum ReferenceLoss {
    #[default]
    Mse,
    Mae,
}

impl ReferenceLoss {
    pub fn eval(self, a: &Tensor, b: &Tensor) -> Result<f64> {
        if a.shape() != b.shape() {
            return Err(Error::Shape(format!(
                "operands differ in shape: {:?} vs {:?}",
                a.shape(),
                b.shape()
            )));
        }
        let n = a.len() as f64;
        let pairs = a.data().iter().zip(b.data());
        Ok(match self {
            ReferenceLoss::Mse => pairs.map(|(x, y)| (x - y) * (x - y)).sum::<f64>() / n,
            ReferenceLoss::Mae => pairs.map(|(x, y)| (x - y).abs()).sum::<f64>() / n,
        })
    }
}

impl std::str::FromStr for ReferenceLoss {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "mse" => Ok(Self::Mse),
            "mae" => Ok(Self::Mae),
            other => Err(Error::Config(format!("unknown reference loss {other:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CalibrationConfig {
    pub max_steps: usize,
    /// Stop once the optimization loss falls below this.
    pub threshold: f64,
    pub step_size: f64,
    pub batch_size: usize,
    pub reference_loss: ReferenceLoss,
    pub initial_sharpness: f64,
    pub sign_kind: SignKind,
    pub seed: u64,
}

impl Default for CalibrationConfig {
    fn default() -> Self {
        Self {
            max_steps: 5000,
            threshold: 1e-8,
            step_size: 1.0,
            batch_size: 64,
            reference_loss: ReferenceLoss::Mse,
            initial_sharpness: 1.0,
            sign_kind: SignKind::Tanh,
            seed: 0,
        }
    }
}

impl CalibrationConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::Config(msg.to_string()));
        if self.max_steps == 0 {
            return bad("max_steps must be at least 1");
        }
        if !(self.threshold > 0.0) {
            return bad("threshold must be positive");
        }
        if !(self.step_size > 0.0 && self.step_size.is_finite()) {
            return bad("step_size must be positive");
        }
        if self.batch_size < 2 {
            return bad("batch_size must be at least 2");
        }
        if !(self.initial_sharpness > 0.0 && self.initial_sharpness.is_finite()) {
            return bad("initial_sharpness must be positive");
        }
        if self.sign_kind == SignKind::ExactSign {
            return Err(Error::NonDifferentiable);
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CalibrationStep {
    pub step: usize,
    /// Sharpness at which the step's losses were evaluated.
    pub sharpness: f64,
    pub opt_loss: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Calibration {
    pub sharpness: f64,
    pub final_opt_loss: f64,
    pub steps_taken: usize,
    pub log: Vec<CalibrationStep>,
}

impl Calibration {
    /// Step log as CSV with header `step,s,opt_loss`.
    pub fn log_csv(&self) -> String {
        let mut out = String::from("step,s,opt_loss\n");
        for r in &self.log {
            out.push_str(&format!("{},{:e},{:e}\n", r.step, r.sharpness, r.opt_loss));
        }
        out
    }
}

/// Loss configuration used while calibrating.
pub fn calibration_dsl_config(sharpness: f64, kind: SignKind) -> DslConfig {
    DslConfig::training(sharpness).with_kind(kind)
}

/// Calibrates against one of the built-in reference losses.
pub fn find_sharpness(dataset: &[Tensor], cfg: &CalibrationConfig) -> Result<Calibration> {
    let reference = cfg.reference_loss;
    find_sharpness_with(dataset, cfg, |a, b| reference.eval(a, b))
}

/// Calibrates against an arbitrary reference loss over the paired halves.
pub fn find_sharpness_with(
    dataset: &[Tensor],
    cfg: &CalibrationConfig,
    mut reference: impl FnMut(&Tensor, &Tensor) -> Result<f64>,
) -> Result<Calibration> {
    cfg.validate()?;
    let first = dataset
        .first()
        .ok_or_else(|| Error::DegenerateInput("empty dataset".into()))?;
    if let Some(bad) = dataset.iter().find(|t| t.shape() != first.shape()) {
        return Err(Error::Shape(format!(
            "dataset mixes shapes {:?} and {:?}",
            first.shape(),
            bad.shape()
        )));
    }
    if cfg.batch_size > dataset.len() {
        return Err(Error::Sampling {
            batch: cfg.batch_size,
            available: dataset.len(),
        });
    }
    let half = cfg.batch_size / 2;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut s = cfg.initial_sharpness;
    let mut log_s = s.ln();
    let mut log = Vec::new();
    let mut final_opt_loss = f64::NAN;

    for step in 1..=cfg.max_steps {
        let picks = sample(&mut rng, dataset.len(), cfg.batch_size).into_vec();
        let b1: Vec<&Tensor> = picks[..half].iter().map(|&i| &dataset[i]).collect();
        let b2: Vec<&Tensor> = picks[half..2 * half].iter().map(|&i| &dataset[i]).collect();
        let b1 = Tensor::stack(&b1)?;
        let b2 = Tensor::stack(&b2)?;

        let ref_loss = reference(&b1, &b2)?;
        if ref_loss == 0.0 {
            return Err(Error::DegenerateBatch(format!(
                "reference loss is zero at step {step}"
            )));
        }
        let dsl_cfg = calibration_dsl_config(s, cfg.sign_kind);
        let dsl = dsl_loss(&b1, &b2, &dsl_cfg)?;
        let gap = dsl - ref_loss;
        let opt_loss = gap * gap;
        final_opt_loss = opt_loss;
        log.push(CalibrationStep {
            step,
            sharpness: s,
            opt_loss,
        });
        if opt_loss < cfg.threshold {
            return Ok(Calibration {
                sharpness: s,
                final_opt_loss,
                steps_taken: step,
                log,
            });
        }
        let d_s = dsl_gradient(&b1, &b2, &dsl_cfg)?.d_sharpness;
        // d/d(log s) = s * d/ds
        log_s -= cfg.step_size * 2.0 * gap * d_s * s;
        s = log_s.exp();
        if !(s.is_finite() && s > 0.0) {
            return Err(Error::Diverged { batch: step });
        }
    }
    Ok(Calibration {
        sharpness: s,
        final_opt_loss,
        steps_taken: cfg.max_steps,
        log,
    })
}
