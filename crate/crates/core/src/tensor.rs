//! Dense row-major tensors of `f64`.
//!
//! A [`Tensor`] owns its data and is immutable once built. Every operation
//! returns a fresh tensor.

use crate::error::{Error, Result};

/// Largest supported rank.
pub const MAX_RANK: usize = 8;

/// Dense d-dimensional array, last axis fastest.
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

/// How a single axis sits inside the flat buffer: `outer` blocks of `extent`
/// slabs, each slab holding `inner` contiguous values.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) struct AxisLayout {
    pub outer: usize,
    pub extent: usize,
    pub inner: usize,
}

impl AxisLayout {
    /// Number of adjacent differences along the axis.
    pub fn differences(&self) -> usize {
        self.outer * (self.extent - 1) * self.inner
    }
}

pub(crate) fn validate_shape(shape: &[usize]) -> Result<usize> {
    if shape.is_empty() || shape.len() > MAX_RANK {
        return Err(Error::Shape(format!(
            "rank must be in 1..={MAX_RANK}, got {}",
            shape.len()
        )));
    }
    if let Some(axis) = shape.iter().position(|&n| n == 0) {
        return Err(Error::Shape(format!("extent of axis {axis} is zero")));
    }
    shape
        .iter()
        .try_fold(1usize, |acc, &n| acc.checked_mul(n))
        .ok_or_else(|| Error::Shape(format!("element count of {shape:?} overflows")))
}

impl Tensor {
    /// Builds a tensor from a shape and row-major data.
    pub fn new(shape: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        let expected = validate_shape(&shape)?;
        if expected != data.len() {
            return Err(Error::Dimension {
                shape,
                expected,
                actual: data.len(),
            });
        }
        Ok(Self { shape, data })
    }

    /// Copying constructor over borrowed inputs.
    pub fn from_slice(shape: &[usize], data: &[f64]) -> Result<Self> {
        Self::new(shape.to_vec(), data.to_vec())
    }

    pub fn zeros(shape: &[usize]) -> Result<Self> {
        Self::full(shape, 0.0)
    }

    pub fn full(shape: &[usize], value: f64) -> Result<Self> {
        let len = validate_shape(shape)?;
        Ok(Self {
            shape: shape.to_vec(),
            data: vec![value; len],
        })
    }

    /// Rank-1 tensor over `values`. Panics on an empty slice.
    pub fn vector(values: &[f64]) -> Self {
        Self::from_slice(&[values.len()], values).expect("vector must be non-empty")
    }

    /// Stacks equally shaped tensors along a new leading axis.
    pub fn stack(items: &[&Tensor]) -> Result<Self> {
        let first = items
            .first()
            .ok_or_else(|| Error::Shape("cannot stack zero tensors".into()))?;
        let mut shape = Vec::with_capacity(first.rank() + 1);
        shape.push(items.len());
        shape.extend_from_slice(&first.shape);
        let mut data = Vec::with_capacity(first.len() * items.len());
        for item in items {
            if item.shape != first.shape {
                return Err(Error::Shape(format!(
                    "cannot stack {:?} with {:?}",
                    item.shape, first.shape
                )));
            }
            data.extend_from_slice(&item.data);
        }
        Self::new(shape, data)
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn rank(&self) -> usize {
        self.shape.len()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    /// Always false for a valid tensor; present for API symmetry with `len`.
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    /// Row-major strides in elements.
    pub fn strides(&self) -> Vec<usize> {
        let mut strides = vec![1; self.rank()];
        for axis in (0..self.rank().saturating_sub(1)).rev() {
            strides[axis] = strides[axis + 1] * self.shape[axis + 1];
        }
        strides
    }

    pub fn flat_index(&self, index: &[usize]) -> Option<usize> {
        if index.len() != self.rank() {
            return None;
        }
        let mut flat = 0;
        for (&i, &n) in index.iter().zip(&self.shape) {
            if i >= n {
                return None;
            }
            flat = flat * n + i;
        }
        Some(flat)
    }

    pub fn get(&self, index: &[usize]) -> Option<f64> {
        self.flat_index(index).map(|i| self.data[i])
    }

    /// Element-wise map, keeping the shape.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            shape: self.shape.clone(),
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Sub-tensor at position `index` of axis 0. The result has the
    /// remaining axes, or shape `[1]` when `self` is rank 1.
    pub fn slice_leading(&self, index: usize) -> Result<Self> {
        let rows = self.shape[0];
        if index >= rows {
            return Err(Error::Shape(format!("row {index} out of range for {rows} rows")));
        }
        let row_len = self.len() / rows;
        let shape = if self.rank() == 1 {
            vec![1]
        } else {
            self.shape[1..].to_vec()
        };
        Ok(Self {
            shape,
            data: self.data[index * row_len..(index + 1) * row_len].to_vec(),
        })
    }

    /// Fails on the first NaN or infinity.
    pub fn ensure_finite(&self) -> Result<()> {
        match self.data.iter().position(|v| !v.is_finite()) {
            Some(index) => Err(Error::NonFinite { index }),
            None => Ok(()),
        }
    }

    pub(crate) fn axis_layout(&self, axis: usize) -> Result<AxisLayout> {
        if axis >= self.rank() {
            return Err(Error::Axis {
                axis,
                rank: self.rank(),
            });
        }
        Ok(AxisLayout {
            outer: self.shape[..axis].iter().product(),
            extent: self.shape[axis],
            inner: self.shape[axis + 1..].iter().product(),
        })
    }

    /// Adjacent differences along `axis`: `t[.., k+1, ..] - t[.., k, ..]`.
    pub fn finite_difference(&self, axis: usize) -> Result<Self> {
        let layout = self.axis_layout(axis)?;
        if layout.extent < 2 {
            return Err(Error::DegenerateAxis {
                axis,
                extent: layout.extent,
            });
        }
        let AxisLayout {
            outer,
            extent,
            inner,
        } = layout;
        let mut data = Vec::with_capacity(layout.differences());
        for o in 0..outer {
            let block = &self.data[o * extent * inner..(o + 1) * extent * inner];
            for k in 0..extent - 1 {
                let lo = &block[k * inner..(k + 1) * inner];
                let hi = &block[(k + 1) * inner..(k + 2) * inner];
                data.extend(hi.iter().zip(lo).map(|(h, l)| h - l));
            }
        }
        let mut shape = self.shape.clone();
        shape[axis] -= 1;
        Ok(Self { shape, data })
    }
}
