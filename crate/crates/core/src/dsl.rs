//! Directional sign loss.
//!
//! For every compared axis the loss takes adjacent differences of both
//! tensors, squashes them with a sign-like function at sharpness `s`, and
//! accumulates the absolute disagreement, optionally weighted per axis:
//!
//! ```text
//! loss = sum_i w_i * sum |f(s * dX_i) - f(s * dY_i)| * unit
//! ```
//!
//! With the exact sign function and `unit = 1/2` the value is the number of
//! sign mismatches between the two tensors' finite differences.

use crate::error::{Error, Result};
use crate::tensor::{AxisLayout, Tensor};

/// The sign-like squashing function.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum SignKind {
    /// `{-1, 0, 1}`; not differentiable.
    ExactSign,
    /// `tanh(s x)`.
    #[default]
    Tanh,
    /// `s x / (1 + |s x|)`.
    Softsign,
}

impl SignKind {
    /// Evaluates the function at the already scaled argument `z = s x`.
    #[inline]
    fn apply(self, z: f64) -> f64 {
        match self {
            SignKind::ExactSign => exact_sign(z),
            SignKind::Tanh => {
                // Several times cheaper than libm tanh; odd, exact at 0 and
                // saturates to exactly +-1.
                let e = (-2.0 * z.abs()).exp();
                ((1.0 - e) / (1.0 + e)).copysign(z)
            }
            SignKind::Softsign => z / (1.0 + z.abs()),
        }
    }

    /// Derivative with respect to the scaled argument, expressed through
    /// the function value `f = apply(z)`.
    #[inline]
    fn derivative_from_value(self, f: f64) -> f64 {
        match self {
            SignKind::ExactSign => 0.0,
            SignKind::Tanh => 1.0 - f * f,
            SignKind::Softsign => {
                let r = 1.0 - f.abs();
                r * r
            }
        }
    }
}

impl std::str::FromStr for SignKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "exact" | "sign" => Ok(SignKind::ExactSign),
            "tanh" => Ok(SignKind::Tanh),
            "softsign" => Ok(SignKind::Softsign),
            other => Err(Error::Config(format!("unknown sign function {other:?}"))),
        }
    }
}

/// `sign` with `sign(0) = 0`.
#[inline]
pub fn exact_sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Sign-like value of `x` at sharpness `s`. `ExactSign` ignores `s`.
pub fn sign_like(x: f64, kind: SignKind, s: f64) -> f64 {
    kind.apply(s * x)
}

/// How the accumulated mismatch is normalized.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Scaling {
    /// Plain sum of absolute disagreements.
    Raw,
    /// Halve every disagreement so the sharp limit counts mismatches.
    #[default]
    ExactUnits,
    /// Divide by the number of comparisons, giving a per-comparison mean.
    PerComparison,
}

impl Scaling {
    fn factor(self, comparisons: usize) -> f64 {
        match self {
            Scaling::Raw => 1.0,
            Scaling::ExactUnits => 0.5,
            Scaling::PerComparison => 1.0 / comparisons as f64,
        }
    }
}

/// Aggregation over the batch axis.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Reduction {
    Sum,
    #[default]
    Mean,
    /// One value per example.
    None,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DslConfig {
    pub sharpness: f64,
    /// Per compared axis, in order, excluding a skipped batch axis.
    pub weights: Option<Vec<f64>>,
    pub sign_kind: SignKind,
    pub scaling: Scaling,
    /// Treat axis 0 as the batch axis: no differences are taken along it.
    pub skip_batch_axis: bool,
    pub reduction: Reduction,
}

pub const DEFAULT_SHARPNESS: f64 = 32.0;

impl Default for DslConfig {
    fn default() -> Self {
        Self {
            sharpness: DEFAULT_SHARPNESS,
            weights: None,
            sign_kind: SignKind::Tanh,
            scaling: Scaling::ExactUnits,
            skip_batch_axis: false,
            reduction: Reduction::Mean,
        }
    }
}

impl DslConfig {
    pub fn new(sharpness: f64) -> Self {
        Self {
            sharpness,
            ..Self::default()
        }
    }

    /// Batched, per-comparison scaled loss with mean reduction, the form
    /// used when mixing with mean-squared error during training.
    pub fn training(sharpness: f64) -> Self {
        Self {
            sharpness,
            scaling: Scaling::PerComparison,
            skip_batch_axis: true,
            reduction: Reduction::Mean,
            ..Self::default()
        }
    }

    pub fn with_kind(mut self, kind: SignKind) -> Self {
        self.sign_kind = kind;
        self
    }

    pub fn with_scaling(mut self, scaling: Scaling) -> Self {
        self.scaling = scaling;
        self
    }

    pub fn with_weights(mut self, weights: Vec<f64>) -> Self {
        self.weights = Some(weights);
        self
    }

    pub fn with_batch_axis(mut self, skip: bool) -> Self {
        self.skip_batch_axis = skip;
        self
    }

    pub fn with_reduction(mut self, reduction: Reduction) -> Self {
        self.reduction = reduction;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sharpness.is_finite() && self.sharpness > 0.0) {
            return Err(Error::Config(format!(
                "sharpness must be positive and finite, got {}",
                self.sharpness
            )));
        }
        if let Some(w) = &self.weights {
            if w.iter().any(|v| !v.is_finite()) {
                return Err(Error::Config("weights must be finite".into()));
            }
        }
        Ok(())
    }
}

/// Result of [`dsl_forward`].
#[derive(Clone, Debug, PartialEq)]
pub enum LossValue {
    Scalar(f64),
    /// Rank-1 tensor, one loss per example.
    PerExample(Tensor),
}

impl LossValue {
    pub fn scalar(&self) -> Option<f64> {
        match self {
            LossValue::Scalar(v) => Some(*v),
            LossValue::PerExample(_) => None,
        }
    }

    /// Sum over examples for `PerExample`, the value itself otherwise.
    pub fn total(&self) -> f64 {
        match self {
            LossValue::Scalar(v) => *v,
            LossValue::PerExample(t) => t.data().iter().sum(),
        }
    }
}

/// Gradients of the reduced loss. With [`Reduction::None`] these are the
/// gradients of the sum of per-example losses.
#[derive(Clone, Debug, PartialEq)]
pub struct DslGradient {
    /// The reduced loss the gradients belong to (summed for `None`).
    pub loss: f64,
    pub d_y: Tensor,
    pub d_x: Tensor,
    pub d_sharpness: f64,
}

struct CompareAxis {
    layout: AxisLayout,
    weight: f64,
}

/// Precomputed iteration structure shared by forward and backward passes.
struct Plan {
    examples: usize,
    example_len: usize,
    axes: Vec<CompareAxis>,
    comparisons: usize,
}

fn plan(
    x: &Tensor,
    y: &Tensor,
    weights: Option<&[f64]>,
    skip_batch_axis: bool,
) -> Result<Plan> {
    if x.shape() != y.shape() {
        return Err(Error::Shape(format!(
            "operands differ in shape: {:?} vs {:?}",
            x.shape(),
            y.shape()
        )));
    }
    x.ensure_finite()?;
    y.ensure_finite()?;
    let first_axis = usize::from(skip_batch_axis);
    if x.rank() <= first_axis {
        return Err(Error::DegenerateInput(
            "no axes left to compare after skipping the batch axis".into(),
        ));
    }
    let (examples, example_shape) = if skip_batch_axis {
        (x.shape()[0], &x.shape()[1..])
    } else {
        (1, x.shape())
    };
    let compared = example_shape.len();
    if let Some(w) = weights {
        if w.len() != compared {
            return Err(Error::Config(format!(
                "{} weights given for {compared} compared axes",
                w.len()
            )));
        }
    }
    let example = Tensor::zeros(example_shape)?;
    let mut axes = Vec::with_capacity(compared);
    for axis in 0..compared {
        let layout = example.axis_layout(axis)?;
        if layout.extent < 2 {
            return Err(Error::DegenerateAxis {
                axis: axis + first_axis,
                extent: layout.extent,
            });
        }
        axes.push(CompareAxis {
            layout,
            weight: weights.map_or(1.0, |w| w[axis]),
        });
    }
    let comparisons = axes.iter().map(|a| a.layout.differences()).sum();
    Ok(Plan {
        examples,
        example_len: example.len(),
        axes,
        comparisons,
    })
}

/// Visits every adjacent pair `(lo, hi)` of flat offsets along one axis.
#[inline(always)]
fn for_each_pair(layout: AxisLayout, mut f: impl FnMut(usize, usize)) {
    let AxisLayout {
        outer,
        extent,
        inner,
    } = layout;
    if inner == 1 {
        for o in 0..outer {
            let base = o * extent;
            for lo in base..base + extent - 1 {
                f(lo, lo + 1);
            }
        }
        return;
    }
    for o in 0..outer {
        let base = o * extent * inner;
        for k in 0..extent - 1 {
            let lo = base + k * inner;
            for i in lo..lo + inner {
                f(i, i + inner);
            }
        }
    }
}

fn example_loss(plan: &Plan, x: &[f64], y: &[f64], kind: SignKind, s: f64) -> f64 {
    plan.axes
        .iter()
        .map(|axis| {
            let mut acc = 0.0;
            for_each_pair(axis.layout, |lo, hi| {
                let fx = kind.apply(s * (x[hi] - x[lo]));
                let fy = kind.apply(s * (y[hi] - y[lo]));
                acc += (fx - fy).abs();
            });
            axis.weight * acc
        })
        .sum()
}

/// Forward value of the loss.
pub fn dsl_forward(x: &Tensor, y: &Tensor, cfg: &DslConfig) -> Result<LossValue> {
    cfg.validate()?;
    let plan = plan(x, y, cfg.weights.as_deref(), cfg.skip_batch_axis)?;
    let unit = cfg.scaling.factor(plan.comparisons);
    let per_example: Vec<f64> = (0..plan.examples)
        .map(|e| {
            let range = e * plan.example_len..(e + 1) * plan.example_len;
            unit * example_loss(
                &plan,
                &x.data()[range.clone()],
                &y.data()[range],
                cfg.sign_kind,
                cfg.sharpness,
            )
        })
        .collect();
    Ok(match cfg.reduction {
        Reduction::Sum => LossValue::Scalar(per_example.iter().sum()),
        Reduction::Mean => {
            LossValue::Scalar(per_example.iter().sum::<f64>() / plan.examples as f64)
        }
        Reduction::None => LossValue::PerExample(Tensor::vector(&per_example)),
    })
}

/// Scalar loss; [`Reduction::None`] is summed over examples.
pub fn dsl_loss(x: &Tensor, y: &Tensor, cfg: &DslConfig) -> Result<f64> {
    dsl_forward(x, y, cfg).map(|v| v.total())
}

/// Analytic gradient with respect to both operands and the sharpness.
///
/// The absolute value is given subgradient 0 where both squashed
/// differences coincide.
pub fn dsl_gradient(x: &Tensor, y: &Tensor, cfg: &DslConfig) -> Result<DslGradient> {
    cfg.validate()?;
    let kind = cfg.sign_kind;
    if kind == SignKind::ExactSign {
        return Err(Error::NonDifferentiable);
    }
    let plan = plan(x, y, cfg.weights.as_deref(), cfg.skip_batch_axis)?;
    let mut coeff = cfg.scaling.factor(plan.comparisons);
    if cfg.reduction == Reduction::Mean {
        coeff /= plan.examples as f64;
    }
    let s = cfg.sharpness;
    let mut gx = vec![0.0; x.len()];
    let mut gy = vec![0.0; y.len()];
    let mut gs = 0.0;
    let mut loss = 0.0;
    for e in 0..plan.examples {
        let range = e * plan.example_len..(e + 1) * plan.example_len;
        let xd = &x.data()[range.clone()];
        let yd = &y.data()[range.clone()];
        let gy = &mut gy[range.clone()];
        let gx = &mut gx[range];
        for axis in &plan.axes {
            let c = axis.weight * coeff;
            if c == 0.0 {
                continue;
            }
            let mut acc = 0.0;
            for_each_pair(axis.layout, |lo, hi| {
                let dx = xd[hi] - xd[lo];
                let dy = yd[hi] - yd[lo];
                let fx = kind.apply(s * dx);
                let fy = kind.apply(s * dy);
                let gap = fy - fx;
                if gap == 0.0 {
                    return;
                }
                acc += gap.abs();
                let dir = c * 1f64.copysign(gap);
                let py = kind.derivative_from_value(fy);
                let g_y = dir * s * py;
                gy[hi] += g_y;
                gy[lo] -= g_y;
                let px = kind.derivative_from_value(fx);
                let g_x = dir * s * px;
                gx[hi] -= g_x;
                gx[lo] += g_x;
                gs += dir * (dy * py - dx * px);
            });
            loss += c * acc;
        }
    }
    Ok(DslGradient {
        loss,
        d_y: Tensor::new(y.shape().to_vec(), gy)?,
        d_x: Tensor::new(x.shape().to_vec(), gx)?,
        d_sharpness: gs,
    })
}

/// Squashed differences of a fixed set of target examples, so that a
/// training loop pays for the target side once instead of every batch.
///
/// Examples are the slices along axis 0 of the tensor given to
/// [`SquashedTargets::new`]; the configuration must skip that axis.
pub(crate) struct SquashedTargets {
    plan: Plan,
    cfg: DslConfig,
    values: Vec<f64>,
    pair_grad: Vec<f64>,
}

impl SquashedTargets {
    pub(crate) fn new(targets: &Tensor, cfg: &DslConfig) -> Result<Self> {
        cfg.validate()?;
        if cfg.sign_kind == SignKind::ExactSign {
            return Err(Error::NonDifferentiable);
        }
        if !cfg.skip_batch_axis {
            return Err(Error::Config("cached targets need a skipped batch axis".into()));
        }
        let plan = plan(targets, targets, cfg.weights.as_deref(), true)?;
        let (kind, s) = (cfg.sign_kind, cfg.sharpness);
        let mut values = Vec::with_capacity(plan.examples * plan.comparisons);
        for e in 0..plan.examples {
            let x = &targets.data()[e * plan.example_len..(e + 1) * plan.example_len];
            for axis in &plan.axes {
                for_each_pair(axis.layout, |lo, hi| values.push(kind.apply(s * (x[hi] - x[lo]))));
            }
        }
        let pair_grad = vec![0.0; plan.comparisons];
        Ok(Self {
            plan,
            cfg: cfg.clone(),
            values,
            pair_grad,
        })
    }

    /// Loss between the targets `rows` and the batch `y` (one example per
    /// row, in the same order), with its gradient with respect to `y`
    /// written to `grad`.
    pub(crate) fn loss_and_gradient<T: Copy + Into<f64>>(
        &mut self,
        rows: &[usize],
        y: &[T],
        grad: &mut [f64],
    ) -> Result<f64> {
        let plan = &self.plan;
        let len = plan.example_len;
        if y.len() != rows.len() * len || grad.len() != y.len() {
            return Err(Error::Length {
                expected: rows.len() * len,
                actual: y.len(),
            });
        }
        if let Some(&bad) = rows.iter().find(|&&r| r >= plan.examples) {
            return Err(Error::Length {
                expected: plan.examples,
                actual: bad + 1,
            });
        }
        let mut coeff = self.cfg.scaling.factor(plan.comparisons);
        if self.cfg.reduction == Reduction::Mean {
            coeff /= rows.len() as f64;
        }
        let (kind, s) = (self.cfg.sign_kind, self.cfg.sharpness);
        let mut loss = 0.0;
        for (e, &row) in rows.iter().enumerate() {
            let fx_all = &self.values[row * plan.comparisons..(row + 1) * plan.comparisons];
            let yd = &y[e * len..(e + 1) * len];
            let gy = &mut grad[e * len..(e + 1) * len];
            gy.fill(0.0);
            let mut offset = 0;
            for axis in &plan.axes {
                let n = axis.layout.differences();
                let c = axis.weight * coeff;
                let fx = &fx_all[offset..offset + n];
                let pg = &mut self.pair_grad[..n];
                // Per-pair terms first; scattering them separately keeps
                // this loop free of read-after-write chains.
                let mut acc = 0.0;
                let mut k = 0;
                for_each_pair(axis.layout, |lo, hi| {
                    let fy = kind.apply(s * (yd[hi].into() - yd[lo].into()));
                    let gap = fy - fx[k];
                    acc += gap.abs();
                    pg[k] = if gap == 0.0 {
                        0.0
                    } else {
                        c * s * 1f64.copysign(gap) * kind.derivative_from_value(fy)
                    };
                    k += 1;
                });
                loss += c * acc;
                let mut k = 0;
                for_each_pair(axis.layout, |lo, hi| {
                    gy[hi] += pg[k];
                    gy[lo] -= pg[k];
                    k += 1;
                });
                offset += n;
            }
        }
        Ok(loss)
    }
}

/// Exact mismatch count `sum_i w_i * sum |sign(dX_i) - sign(dY_i)| / 2`,
/// summed over examples when a batch axis is skipped.
///
/// Computed from materialized difference tensors, independently of the
/// fused loop used by [`dsl_forward`].
pub fn exact_sign_mismatch_count(
    x: &Tensor,
    y: &Tensor,
    weights: Option<&[f64]>,
    skip_batch_axis: bool,
) -> Result<f64> {
    let plan = plan(x, y, weights, skip_batch_axis)?;
    let first = usize::from(skip_batch_axis);
    let mut total = 0.0;
    for (i, axis) in plan.axes.iter().enumerate() {
        let dx = x.finite_difference(i + first)?;
        let dy = y.finite_difference(i + first)?;
        // Each term is 0, 1 or 2 before halving.
        let doubled: u64 = dx
            .data()
            .iter()
            .zip(dy.data())
            .map(|(&a, &b)| (exact_sign(a) - exact_sign(b)).abs() as u64)
            .sum();
        total += axis.weight * doubled as f64 / 2.0;
    }
    Ok(total)
}

/// Total number of adjacent comparisons the loss makes for one example.
pub fn comparison_count(shape: &[usize], skip_batch_axis: bool) -> Result<usize> {
    let t = Tensor::zeros(shape)?;
    plan(&t, &t, None, skip_batch_axis).map(|p| p.comparisons)
}
