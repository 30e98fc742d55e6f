use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::dsl::{DslConfig, SquashedTargets};
use crate::error::{Error, Result};
use crate::tensor::Tensor;

use super::model::{
    to_scalar_array, Adam, AdamConfig, AutoencoderModel, ModelSpec, Scalar,
};

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub mse_weight: f64,
    pub dsl_weight: f64,
    /// Should skip the batch axis; per-comparison scaling keeps it
    /// commensurate with the mean squared error.
    pub dsl: DslConfig,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub total_batches: usize,
    pub seed: u64,
}

impl TrainConfig {
    /// Sine-wave demo: lr 1e-3, batch 1024, 20000 batches, sharpness 32.
    pub fn wave_demo(mse_weight: f64, dsl_weight: f64, seed: u64) -> Self {
        Self {
            mse_weight,
            dsl_weight,
            dsl: DslConfig::training(32.0),
            learning_rate: 1e-3,
            batch_size: 1024,
            total_batches: 20_000,
            seed,
        }
    }

    /// Random-walk experiment: lr 1e-4, batch 64, 64000 batches, sharpness 16.
    pub fn walk_demo(mse_weight: f64, dsl_weight: f64, seed: u64) -> Self {
        Self {
            mse_weight,
            dsl_weight,
            dsl: DslConfig::training(16.0),
            learning_rate: 1e-4,
            batch_size: 64,
            total_batches: 64_000,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mse_weight >= 0.0 && self.dsl_weight >= 0.0) {
            return Err(Error::Config("loss weights must be non-negative".into()));
        }
        if !(self.mse_weight + self.dsl_weight > 0.0) {
            return Err(Error::Config("at least one loss weight must be positive".into()));
        }
        if !(self.learning_rate > 0.0) || self.batch_size == 0 || self.total_batches == 0 {
            return Err(Error::Config(
                "learning rate, batch size and batch count must be positive".into(),
            ));
        }
        if self.dsl_weight > 0.0 && !self.dsl.skip_batch_axis {
            return Err(Error::Config("training loss must skip the batch axis".into()));
        }
        self.dsl.validate()
    }
}

/// Weighted loss components of one batch.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrainRecord {
    pub batch: usize,
    /// `mse_weight * mse`.
    pub mse_term: f64,
    /// `dsl_weight * dsl`; zero without evaluating the loss when the weight is zero.
    pub dsl_term: f64,
    pub total: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrainLog {
    pub records: Vec<TrainRecord>,
}

impl TrainLog {
    /// CSV with header `batch,mse_term,dsl_term,total`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("batch,mse_term,dsl_term,total\n");
        for r in &self.records {
            out.push_str(&format!(
                "{},{:e},{:e},{:e}\n",
                r.batch, r.mse_term, r.dsl_term, r.total
            ));
        }
        out
    }
}

/// Mini-batch training on rows of `data`, minimizing
/// `mse_weight * mse + dsl_weight * dsl(original, reconstruction)`.
///
/// Rows are reshuffled every epoch; an epoch's incomplete tail batch is
/// skipped. When `data` has fewer rows than `batch_size`, every batch is the
/// whole dataset.
pub fn train_autoencoder(
    data: &Tensor,
    spec: ModelSpec,
    cfg: &TrainConfig,
) -> Result<(AutoencoderModel, TrainLog)> {
    cfg.validate()?;
    if data.rank() != 2 || data.shape()[1] != spec.input_dim {
        return Err(Error::Shape(format!(
            "training data must be (rows, {}), got {:?}",
            spec.input_dim,
            data.shape()
        )));
    }
    data.ensure_finite()?;
    let (rows, features) = (data.shape()[0], data.shape()[1]);
    let batch = cfg.batch_size.min(rows);
    let all = to_scalar_array(rows, features, data.data());

    let mut model = AutoencoderModel::new(spec, cfg.seed)?;
    let mut adam = Adam::new(AdamConfig::new(cfg.learning_rate), &model);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..rows).collect();
    let mut cursor = rows;
    let mut log = TrainLog::default();
    let mut x = Array2::<Scalar>::zeros((batch, features));
    let scale = 1.0 / (batch * features) as f64;
    let mut targets = if cfg.dsl_weight > 0.0 {
        Some(SquashedTargets::new(data, &cfg.dsl)?)
    } else {
        None
    };
    let mut d_dsl = vec![0.0; batch * features];

    for b in 0..cfg.total_batches {
        if cursor + batch > rows {
            order.shuffle(&mut rng);
            cursor = 0;
        }
        let picked = &order[cursor..cursor + batch];
        for (dst, &src) in x.rows_mut().into_iter().zip(picked) {
            dst.into_slice()
                .expect("row-major")
                .copy_from_slice(all.row(src).as_slice().expect("row-major"));
        }
        cursor += batch;

        let pass = model.forward_pass(x.view());
        let out = pass.output();
        let mut d_out = out - &x;
        let mse = d_out.iter().map(|&v| f64::from(v) * f64::from(v)).sum::<f64>() * scale;
        let mse_coeff = (2.0 * cfg.mse_weight * scale) as Scalar;
        d_out.mapv_inplace(|v| mse_coeff * v);

        let mut dsl_term = 0.0;
        if let Some(targets) = targets.as_mut() {
            let recon = out.as_slice().expect("standard layout");
            let loss = targets.loss_and_gradient(picked, recon, &mut d_dsl)?;
            dsl_term = cfg.dsl_weight * loss;
            d_out
                .as_slice_mut()
                .expect("standard layout")
                .iter_mut()
                .zip(&d_dsl)
                .for_each(|(d, g)| *d += (cfg.dsl_weight * g) as Scalar);
        }
        let mse_term = cfg.mse_weight * mse;
        let total = mse_term + dsl_term;
        if !total.is_finite() {
            return Err(Error::Diverged { batch: b });
        }
        log.records.push(TrainRecord {
            batch: b,
            mse_term,
            dsl_term,
            total,
        });
        let grads = model.backward(&pass, d_out);
        adam.update(&mut model, &grads);
    }
    Ok((model, log))
}
