//! Synthetic datasets: enveloped sine waves and normalized random walks.

use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::tensor::Tensor;

pub const WAVE_LENGTH: usize = 2048;
pub const WALK_LENGTH: usize = 64;

/// `n` evenly spaced points from `start` to `end`, both included.
fn linspace(start: f64, end: f64, n: usize) -> impl Iterator<Item = f64> {
    let step = if n > 1 { (end - start) / (n - 1) as f64 } else { 0.0 };
    (0..n).map(move |i| start + step * i as f64)
}

/// One cycle of a sine at a random phase, times an exponential envelope
/// running from `e^-1` to `e^1` or the reverse with equal probability.
///
/// Returns `(count, 2048)`.
pub fn generate_wave_dataset(count: usize, seed: u64) -> Result<Tensor> {
    generate_waves(count, WAVE_LENGTH, seed).map(|(t, _)| t)
}

/// Like [`generate_wave_dataset`] with a configurable length; also returns
/// whether each row's envelope increases.
pub fn generate_waves(count: usize, length: usize, seed: u64) -> Result<(Tensor, Vec<bool>)> {
    if count == 0 || length < 2 {
        return Err(Error::Shape(format!(
            "need count >= 1 and length >= 2, got {count} x {length}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let angles: Vec<f64> = linspace(0.0, TAU, length).collect();
    let ramp: Vec<f64> = linspace(-1.0, 1.0, length).collect();
    let mut data = Vec::with_capacity(count * length);
    let mut increasing = Vec::with_capacity(count);
    for _ in 0..count {
        let phase = rng.random_range(0.0..TAU);
        let up = rng.random_bool(0.5);
        let direction = if up { 1.0 } else { -1.0 };
        increasing.push(up);
        data.extend(
            angles
                .iter()
                .zip(&ramp)
                .map(|(a, r)| (a + phase).sin() * (r * direction).exp()),
        );
    }
    Ok((Tensor::new(vec![count, length], data)?, increasing))
}

/// Gaussian random walks, each shifted to start at exactly 0, then all
/// divided by the dataset-wide (population) standard deviation.
///
/// Returns `(count, length)`.
pub fn generate_walk_dataset(count: usize, length: usize, seed: u64) -> Result<Tensor> {
    if count == 0 || length < 2 {
        return Err(Error::Shape(format!(
            "need count >= 1 and length >= 2, got {count} x {length}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut data = Vec::with_capacity(count * length);
    for _ in 0..count {
        let mut level = 0.0;
        let mut first = None;
        for _ in 0..length {
            let step: f64 = rng.sample(StandardNormal);
            level += step;
            let start = *first.get_or_insert(level);
            data.push(level - start);
        }
    }
    let n = data.len() as f64;
    let mean = data.iter().sum::<f64>() / n;
    let var = data.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    let sd = var.sqrt();
    if !(sd > 0.0) {
        return Err(Error::DegenerateInput("walk dataset has zero variance".into()));
    }
    data.iter_mut().for_each(|v| *v /= sd);
    Tensor::new(vec![count, length], data)
}

/// Splits rows into `(train, held_out)`, holding out the last 10%
/// (at least one row when there are two or more).
pub fn holdout_split(data: &Tensor) -> Result<(Tensor, Tensor)> {
    let rows = data.shape()[0];
    if rows < 2 {
        return Err(Error::DegenerateInput("need at least 2 rows to split".into()));
    }
    let held = (rows / 10).max(1);
    let train_rows = rows - held;
    let row_len = data.len() / rows;
    let (a, b) = data.data().split_at(train_rows * row_len);
    let mut shape = data.shape().to_vec();
    shape[0] = train_rows;
    let train = Tensor::new(shape.clone(), a.to_vec())?;
    shape[0] = held;
    let test = Tensor::new(shape, b.to_vec())?;
    Ok((train, test))
}
