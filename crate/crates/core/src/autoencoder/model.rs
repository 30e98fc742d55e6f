//! Fully connected autoencoder with rectifier activations, trained by
//! hand-written backpropagation and Adam.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::format::{read_tensor, write_tensor};
use crate::tensor::Tensor;

/// Layer widths of an autoencoder.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ModelSpec {
    pub input_dim: usize,
    /// Hidden widths of the encoder, input side first.
    pub encoder_hidden: Vec<usize>,
    pub latent_dim: usize,
    /// Hidden widths of the decoder, latent side first.
    pub decoder_hidden: Vec<usize>,
}

impl ModelSpec {
    /// Two layers each side, 32 hidden units, 2 latent features.
    pub fn wave_demo() -> Self {
        Self {
            input_dim: 2048,
            encoder_hidden: vec![32],
            latent_dim: 2,
            decoder_hidden: vec![32],
        }
    }

    /// Four layers each side for 64-step sequences, 16 latent features.
    pub fn walk_demo() -> Self {
        Self {
            input_dim: 64,
            encoder_hidden: vec![2048, 256, 32],
            latent_dim: 16,
            decoder_hidden: vec![32, 256, 2048],
        }
    }

    /// `(fan_in, fan_out)` for every layer, encoder then decoder.
    pub fn layer_dims(&self) -> Vec<(usize, usize)> {
        let widths: Vec<usize> = std::iter::once(self.input_dim)
            .chain(self.encoder_hidden.iter().copied())
            .chain(std::iter::once(self.latent_dim))
            .chain(self.decoder_hidden.iter().copied())
            .chain(std::iter::once(self.input_dim))
            .collect();
        widths.windows(2).map(|w| (w[0], w[1])).collect()
    }

    pub fn encoder_layers(&self) -> usize {
        self.encoder_hidden.len() + 1
    }

    fn validate(&self) -> Result<()> {
        let all = std::iter::once(self.input_dim)
            .chain(self.encoder_hidden.iter().copied())
            .chain(std::iter::once(self.latent_dim))
            .chain(self.decoder_hidden.iter().copied());
        if all.into_iter().any(|w| w == 0) {
            return Err(Error::Config("layer widths must be positive".into()));
        }
        Ok(())
    }
}

/// Parameter and activation precision. Single precision halves the cost
/// of the dense products; losses are still accumulated in `f64`.
pub type Scalar = f32;

#[derive(Clone, Debug, PartialEq)]
pub struct Layer {
    /// `fan_in x fan_out`.
    pub weight: Array2<Scalar>,
    pub bias: Array1<Scalar>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AutoencoderModel {
    pub spec: ModelSpec,
    /// Encoder layers followed by decoder layers.
    pub layers: Vec<Layer>,
}

/// Cached pre-activations and activations of a forward pass.
pub(crate) struct ForwardPass {
    /// `inputs[k]` feeds layer `k`; the last entry is the reconstruction.
    pub inputs: Vec<Array2<Scalar>>,
}

impl ForwardPass {
    pub fn output(&self) -> &Array2<Scalar> {
        self.inputs.last().expect("at least one layer")
    }
}

impl AutoencoderModel {
    /// He-normal weights (`sd = sqrt(2 / fan_in)`), zero biases. Layer `k`
    /// draws from its own stream of the seeded generator.
    pub fn new(spec: ModelSpec, seed: u64) -> Result<Self> {
        spec.validate()?;
        let layers = spec
            .layer_dims()
            .into_iter()
            .enumerate()
            .map(|(k, (fan_in, fan_out))| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(k as u64 + 1);
                let normal = Normal::new(0.0, (2.0 / fan_in as f64).sqrt())
                    .expect("positive standard deviation");
                Layer {
                    weight: Array2::from_shape_simple_fn((fan_in, fan_out), || {
                        normal.sample(&mut rng) as Scalar
                    }),
                    bias: Array1::zeros(fan_out),
                }
            })
            .collect();
        Ok(Self { spec, layers })
    }

    fn activates(&self, k: usize) -> bool {
        k + 1 != self.spec.encoder_layers() && k + 1 != self.layers.len()
    }

    pub fn parameter_count(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weight.len() + l.bias.len())
            .sum()
    }

    pub(crate) fn forward_pass(&self, x: ArrayView2<Scalar>) -> ForwardPass {
        let mut inputs = Vec::with_capacity(self.layers.len() + 1);
        inputs.push(x.to_owned());
        for (k, layer) in self.layers.iter().enumerate() {
            let mut z = inputs[k].dot(&layer.weight);
            z += &layer.bias;
            if self.activates(k) {
                z.mapv_inplace(|v| v.max(0.0));
            }
            inputs.push(z);
        }
        ForwardPass { inputs }
    }

    /// Gradients of a loss with respect to every layer, given the loss
    /// gradient at the output.
    pub(crate) fn backward(&self, pass: &ForwardPass, d_out: Array2<Scalar>) -> Vec<Layer> {
        let mut grads = Vec::with_capacity(self.layers.len());
        let mut delta = d_out;
        for k in (0..self.layers.len()).rev() {
            let input = &pass.inputs[k];
            let d_weight = input.t().dot(&delta);
            let d_bias = delta.sum_axis(Axis(0));
            if k > 0 {
                let mut upstream = delta.dot(&self.layers[k].weight.t());
                if self.activates(k - 1) {
                    // `input` is the rectified output of layer k - 1.
                    upstream.zip_mut_with(input, |g, &a| {
                        if a <= 0.0 {
                            *g = 0.0;
                        }
                    });
                }
                delta = upstream;
            }
            grads.push(Layer {
                weight: d_weight,
                bias: d_bias,
            });
        }
        grads.reverse();
        grads
    }

    pub fn encode(&self, x: &Tensor) -> Result<Tensor> {
        let mut h = self.as_batch(x)?;
        for k in 0..self.spec.encoder_layers() {
            let layer = &self.layers[k];
            h = h.dot(&layer.weight) + &layer.bias;
            if self.activates(k) {
                h.mapv_inplace(|v| v.max(0.0));
            }
        }
        array_to_tensor(&h)
    }

    /// Reconstruction of a `(rows, input_dim)` batch.
    pub fn reconstruct(&self, x: &Tensor) -> Result<Tensor> {
        let batch = self.as_batch(x)?;
        let pass = self.forward_pass(batch.view());
        array_to_tensor(pass.output())
    }

    fn as_batch(&self, x: &Tensor) -> Result<Array2<Scalar>> {
        if x.rank() != 2 || x.shape()[1] != self.spec.input_dim {
            return Err(Error::Shape(format!(
                "expected (rows, {}), got {:?}",
                self.spec.input_dim,
                x.shape()
            )));
        }
        Ok(to_scalar_array(x.shape()[0], x.shape()[1], x.data()))
    }

    /// Writes `layerK_weight.dst`, `layerK_bias.dst` and `manifest.txt`.
    pub fn save(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir)?;
        let mut manifest = String::new();
        let s = &self.spec;
        let _ = writeln!(manifest, "input {}", s.input_dim);
        let _ = writeln!(manifest, "encoder_hidden {}", join(&s.encoder_hidden));
        let _ = writeln!(manifest, "latent {}", s.latent_dim);
        let _ = writeln!(manifest, "decoder_hidden {}", join(&s.decoder_hidden));
        for (k, layer) in self.layers.iter().enumerate() {
            let (fan_in, fan_out) = layer.weight.dim();
            let _ = writeln!(manifest, "layer {k} {fan_in} {fan_out}");
            write_tensor(&array_to_tensor(&layer.weight)?, dir.join(format!("layer{k}_weight.dst")))?;
            let bias: Vec<f64> = layer.bias.iter().map(|&b| f64::from(b)).collect();
            write_tensor(
                &Tensor::vector(&bias),
                dir.join(format!("layer{k}_bias.dst")),
            )?;
        }
        fs::write(dir.join("manifest.txt"), manifest)?;
        Ok(())
    }

    pub fn load(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        let manifest = fs::read_to_string(dir.join("manifest.txt"))?;
        let mut spec = ModelSpec {
            input_dim: 0,
            encoder_hidden: Vec::new(),
            latent_dim: 0,
            decoder_hidden: Vec::new(),
        };
        let parse = |v: &str| -> Result<Vec<usize>> {
            v.split(',')
                .filter(|s| !s.is_empty())
                .map(|s| {
                    s.trim()
                        .parse()
                        .map_err(|_| Error::Format(format!("bad width {s:?} in manifest")))
                })
                .collect()
        };
        for line in manifest.lines() {
            let (key, value) = line.split_once(' ').unwrap_or((line, ""));
            match key {
                "input" => spec.input_dim = parse(value)?.first().copied().unwrap_or(0),
                "latent" => spec.latent_dim = parse(value)?.first().copied().unwrap_or(0),
                "encoder_hidden" => spec.encoder_hidden = parse(value)?,
                "decoder_hidden" => spec.decoder_hidden = parse(value)?,
                _ => {}
            }
        }
        spec.validate().map_err(|_| Error::Format("incomplete manifest".into()))?;
        let mut layers = Vec::new();
        for (k, (fan_in, fan_out)) in spec.layer_dims().into_iter().enumerate() {
            let w = read_tensor(dir.join(format!("layer{k}_weight.dst")))?;
            let b = read_tensor(dir.join(format!("layer{k}_bias.dst")))?;
            if w.shape() != [fan_in, fan_out] || b.shape() != [fan_out] {
                return Err(Error::Format(format!("layer {k} does not match manifest")));
            }
            layers.push(Layer {
                weight: to_scalar_array(fan_in, fan_out, w.data()),
                bias: b.data().iter().map(|&v| v as Scalar).collect(),
            });
        }
        Ok(Self { spec, layers })
    }
}

fn join(widths: &[usize]) -> String {
    widths
        .iter()
        .map(usize::to_string)
        .collect::<Vec<_>>()
        .join(",")
}

pub(crate) fn array_to_tensor(a: &Array2<Scalar>) -> Result<Tensor> {
    let (r, c) = a.dim();
    Tensor::new(vec![r, c], a.iter().map(|&v| f64::from(v)).collect())
}

/// Row-major `rows x cols` slice rounded to parameter precision.
pub(crate) fn to_scalar_array(rows: usize, cols: usize, data: &[f64]) -> Array2<Scalar> {
    Array2::from_shape_vec((rows, cols), data.iter().map(|&v| v as Scalar).collect())
        .expect("length matches shape")
}

/// Adam with bias correction.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl AdamConfig {
    pub fn new(learning_rate: f64) -> Self {
        Self {
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

pub(crate) struct Adam {
    cfg: AdamConfig,
    step: i32,
    first: Vec<Layer>,
    second: Vec<Layer>,
}

impl Adam {
    pub fn new(cfg: AdamConfig, model: &AutoencoderModel) -> Self {
        let zeros = || {
            model
                .layers
                .iter()
                .map(|l| Layer {
                    weight: Array2::zeros(l.weight.dim()),
                    bias: Array1::zeros(l.bias.len()),
                })
                .collect::<Vec<_>>()
        };
        Self {
            cfg,
            step: 0,
            first: zeros(),
            second: zeros(),
        }
    }

    pub fn update(&mut self, model: &mut AutoencoderModel, grads: &[Layer]) {
        self.step += 1;
        let AdamConfig {
            learning_rate,
            beta1,
            beta2,
            epsilon,
        } = self.cfg;
        let c1 = 1.0 - beta1.powi(self.step);
        let c2 = 1.0 - beta2.powi(self.step);
        let (learning_rate, beta1, beta2, epsilon, c1, c2) = (
            learning_rate as Scalar,
            beta1 as Scalar,
            beta2 as Scalar,
            epsilon as Scalar,
            c1 as Scalar,
            c2 as Scalar,
        );
        let apply = |p: &mut Scalar, m: &mut Scalar, v: &mut Scalar, g: Scalar| {
            *m = beta1 * *m + (1.0 - beta1) * g;
            *v = beta2 * *v + (1.0 - beta2) * g * g;
            *p -= learning_rate * (*m / c1) / ((*v / c2).sqrt() + epsilon);
        };
        for (k, layer) in model.layers.iter_mut().enumerate() {
            let (m, v, g) = (&mut self.first[k], &mut self.second[k], &grads[k]);
            ndarray::Zip::from(&mut layer.weight)
                .and(&mut m.weight)
                .and(&mut v.weight)
                .and(&g.weight)
                .for_each(|p, m, v, &g| apply(p, m, v, g));
            ndarray::Zip::from(&mut layer.bias)
                .and(&mut m.bias)
                .and(&mut v.bias)
                .and(&g.bias)
                .for_each(|p, m, v, &g| apply(p, m, v, g));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn tiny() -> AutoencoderModel {
        AutoencoderModel::new(
            ModelSpec {
                input_dim: 4,
                encoder_hidden: vec![3],
                latent_dim: 2,
                decoder_hidden: vec![3],
            },
            7,
        )
        .unwrap()
    }

    #[test]
    fn layer_dims_chain() {
        assert_eq!(
            ModelSpec::wave_demo().layer_dims(),
            vec![(2048, 32), (32, 2), (2, 32), (32, 2048)]
        );
        let walk = ModelSpec::walk_demo().layer_dims();
        assert_eq!(walk.len(), 8);
        assert_eq!(walk[3], (32, 16));
        assert_eq!(walk[7], (2048, 64));
    }

    #[test]
    fn he_init_scale() {
        let m = AutoencoderModel::new(ModelSpec::wave_demo(), 1).unwrap();
        let w = &m.layers[0].weight;
        let var = w.iter().map(|&v| f64::from(v * v)).sum::<f64>() / w.len() as f64;
        assert!((var - 2.0 / 2048.0).abs() < 0.1 * 2.0 / 2048.0);
        assert!(m.layers.iter().all(|l| l.bias.iter().all(|&b| b == 0.0)));
        assert_eq!(m, AutoencoderModel::new(ModelSpec::wave_demo(), 1).unwrap());
    }

    /// Backpropagation against central differences of `0.5 * |out|^2`.
    /// With a fixed rectifier pattern the loss is quadratic in any single
    /// parameter, so a wide step is exact up to single-precision rounding.
    #[test]
    fn backward_matches_finite_differences() {
        let model = tiny();
        let x = array![[0.3, -1.2, 0.8, 0.1], [1.0, 0.4, -0.5, 2.0]];
        let loss = |m: &AutoencoderModel| {
            let out = m.forward_pass(x.view());
            0.5 * out.output().iter().map(|&v| f64::from(v) * f64::from(v)).sum::<f64>()
        };
        let pass = model.forward_pass(x.view());
        let grads = model.backward(&pass, pass.output().clone());
        let h: Scalar = 1.0 / 64.0;
        let step = 2.0 * f64::from(h);
        for k in 0..model.layers.len() {
            for idx in [(0, 0), (1, 1)] {
                let mut plus = model.clone();
                plus.layers[k].weight[idx] += h;
                let mut minus = model.clone();
                minus.layers[k].weight[idx] -= h;
                let numeric = (loss(&plus) - loss(&minus)) / step;
                let analytic = f64::from(grads[k].weight[idx]);
                assert!(
                    (numeric - analytic).abs() <= 1e-4 * (1.0 + analytic.abs()),
                    "layer {k} {idx:?}: {numeric} vs {analytic}"
                );
            }
            let mut plus = model.clone();
            plus.layers[k].bias[0] += h;
            let mut minus = model.clone();
            minus.layers[k].bias[0] -= h;
            let numeric = (loss(&plus) - loss(&minus)) / step;
            let analytic = f64::from(grads[k].bias[0]);
            assert!((numeric - analytic).abs() <= 1e-4 * (1.0 + numeric.abs()));
        }
    }

    #[test]
    fn checkpoint_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let m = tiny();
        m.save(dir.path()).unwrap();
        assert_eq!(AutoencoderModel::load(dir.path()).unwrap(), m);
        let manifest = fs::read_to_string(dir.path().join("manifest.txt")).unwrap();
        assert!(manifest.contains("layer 0 4 3"));
    }

    #[test]
    fn shape_checks() {
        let m = tiny();
        assert!(m.reconstruct(&Tensor::zeros(&[2, 5]).unwrap()).is_err());
        assert_eq!(m.encode(&Tensor::zeros(&[3, 4]).unwrap()).unwrap().shape(), &[3, 2]);
    }
}
