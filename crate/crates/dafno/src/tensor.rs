//! Dense row-major tensors, real or complex.
//!
//! Complex tensors store interleaved (re, im) pairs so that every value,
//! real or complex, is a flat `Vec<f64>`. Gradients of complex parameters
//! follow the convention `d loss / d Re(w) + i * d loss / d Im(w)`, which
//! makes componentwise finite differences directly applicable.

use num_complex::Complex64;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dtype {
    Real64,
    Complex128,
}

impl Dtype {
    pub fn name(self) -> &'static str {
        match self {
            Dtype::Real64 => "real64",
            Dtype::Complex128 => "complex128",
        }
    }

    /// f64 slots per element.
    pub fn stride(self) -> usize {
        match self {
            Dtype::Real64 => 1,
            Dtype::Complex128 => 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    shape: Vec<usize>,
    dtype: Dtype,
    data: Vec<f64>,
    pub requires_grad: bool,
}

impl Tensor {
    pub fn zeros(shape: &[usize]) -> Self {
        let n: usize = shape.iter().product();
        Tensor {
            shape: shape.to_vec(),
            dtype: Dtype::Real64,
            data: vec![0.0; n],
            requires_grad: false,
        }
    }

    pub fn zeros_complex(shape: &[usize]) -> Self {
        let n: usize = shape.iter().product();
        Tensor {
            shape: shape.to_vec(),
            dtype: Dtype::Complex128,
            data: vec![0.0; 2 * n],
            requires_grad: false,
        }
    }

    pub fn from_vec(shape: &[usize], data: Vec<f64>) -> Self {
        let n: usize = shape.iter().product();
        assert_eq!(n, data.len(), "shape {:?} does not match data length {}", shape, data.len());
        Tensor {
            shape: shape.to_vec(),
            dtype: Dtype::Real64,
            data,
            requires_grad: false,
        }
    }

    pub fn from_complex(shape: &[usize], values: &[Complex64]) -> Self {
        let n: usize = shape.iter().product();
        assert_eq!(n, values.len(), "shape {:?} does not match {} complex values", shape, values.len());
        let mut data = Vec::with_capacity(2 * n);
        for v in values {
            data.push(v.re);
            data.push(v.im);
        }
        Tensor {
            shape: shape.to_vec(),
            dtype: Dtype::Complex128,
            data,
            requires_grad: false,
        }
    }

    /// Interleaved storage interpreted as complex; shape is the logical shape.
    pub fn from_interleaved(shape: &[usize], data: Vec<f64>) -> Self {
        let n: usize = shape.iter().product();
        assert_eq!(2 * n, data.len(), "interleaved storage must hold 2 f64 per element");
        Tensor {
            shape: shape.to_vec(),
            dtype: Dtype::Complex128,
            data,
            requires_grad: false,
        }
    }

    pub fn scalar(v: f64) -> Self {
        Tensor {
            shape: vec![],
            dtype: Dtype::Real64,
            data: vec![v],
            requires_grad: false,
        }
    }

    pub fn full(shape: &[usize], v: f64) -> Self {
        let n: usize = shape.iter().product();
        Tensor {
            shape: shape.to_vec(),
            dtype: Dtype::Real64,
            data: vec![v; n],
            requires_grad: false,
        }
    }

    pub fn with_grad(mut self) -> Self {
        self.requires_grad = true;
        self
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn dtype(&self) -> Dtype {
        self.dtype
    }

    pub fn is_complex(&self) -> bool {
        self.dtype == Dtype::Complex128
    }

    pub fn numel(&self) -> usize {
        self.shape.iter().product()
    }

    /// Flat f64 storage (interleaved for complex).
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn item(&self) -> f64 {
        assert_eq!(self.numel(), 1, "item() on non-scalar tensor of shape {:?}", self.shape);
        assert_eq!(self.dtype, Dtype::Real64);
        self.data[0]
    }

    pub fn c_get(&self, idx: usize) -> Complex64 {
        debug_assert_eq!(self.dtype, Dtype::Complex128);
        Complex64::new(self.data[2 * idx], self.data[2 * idx + 1])
    }

    pub fn c_set(&mut self, idx: usize, v: Complex64) {
        debug_assert_eq!(self.dtype, Dtype::Complex128);
        self.data[2 * idx] = v.re;
        self.data[2 * idx + 1] = v.im;
    }

    pub fn complex_values(&self) -> Vec<Complex64> {
        assert_eq!(self.dtype, Dtype::Complex128);
        (0..self.numel()).map(|i| self.c_get(i)).collect()
    }

    pub fn expect_real(&self, context: &'static str) -> Result<()> {
        if self.dtype != Dtype::Real64 {
            return Err(Error::DtypeMismatch {
                expected: "real64",
                got: self.dtype.name(),
                context,
            });
        }
        Ok(())
    }

    /// Maximum |x| over the flat storage.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |m, &v| m.max(v.abs()))
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

/// Concatenate grid fields along the channel (last) axis. Rank-2 fields
/// count as one channel.
pub fn concat_channels(parts: &[&Tensor]) -> Result<Tensor> {
    assert!(!parts.is_empty());
    let grid_of = |t: &Tensor| -> Result<(usize, usize, usize)> {
        match t.shape() {
            [n1, n2] => Ok((*n1, *n2, 1)),
            [n1, n2, d] => Ok((*n1, *n2, *d)),
            other => Err(Error::ShapeMismatch {
                left: other.to_vec(),
                right: vec![0, 0, 0],
                context: "concat_channels expects grid fields",
            }),
        }
    };
    let (n1, n2, _) = grid_of(parts[0])?;
    let mut channels = Vec::with_capacity(parts.len());
    for t in parts {
        t.expect_real("concat_channels")?;
        let (a, b, c) = grid_of(t)?;
        if (a, b) != (n1, n2) {
            return Err(Error::ShapeMismatch {
                left: t.shape().to_vec(),
                right: parts[0].shape().to_vec(),
                context: "concat_channels grid extents",
            });
        }
        channels.push(c);
    }
    let d_total: usize = channels.iter().sum();
    let mut out = vec![0.0f64; n1 * n2 * d_total];
    for p in 0..n1 * n2 {
        let mut off = 0;
        for (t, &c) in parts.iter().zip(&channels) {
            out[p * d_total + off..p * d_total + off + c]
                .copy_from_slice(&t.data()[p * c..(p + 1) * c]);
            off += c;
        }
    }
    Ok(Tensor::from_vec(&[n1, n2, d_total], out))
}

/// Broadcast shape under trailing-dimension alignment. Axes are never
/// reordered: the result shape is a pure function of the input shapes.
pub fn broadcast_shape(a: &[usize], b: &[usize], context: &'static str) -> Result<Vec<usize>> {
    let rank = a.len().max(b.len());
    let mut out = vec![0usize; rank];
    for i in 0..rank {
        let da = if i < rank - a.len() { 1 } else { a[i - (rank - a.len())] };
        let db = if i < rank - b.len() { 1 } else { b[i - (rank - b.len())] };
        if da != db && da != 1 && db != 1 {
            return Err(Error::ShapeMismatch {
                left: a.to_vec(),
                right: b.to_vec(),
                context,
            });
        }
        out[i] = da.max(db);
    }
    Ok(out)
}

/// Row-major strides for a shape, with stride 0 on broadcast (size-1) axes
/// after right-aligning `shape` against `out_rank`.
pub fn broadcast_strides(shape: &[usize], out_rank: usize) -> Vec<usize> {
    let mut strides = vec![0usize; out_rank];
    let offset = out_rank - shape.len();
    let mut acc = 1usize;
    for i in (0..shape.len()).rev() {
        strides[offset + i] = if shape[i] == 1 { 0 } else { acc };
        acc *= shape[i];
    }
    strides
}

/// Iterate the flat indices of `src` (with broadcast strides) for every
/// element of the output shape, calling `f(out_index, src_index)`.
pub fn for_each_broadcast(out_shape: &[usize], src_shape: &[usize], mut f: impl FnMut(usize, usize)) {
    let rank = out_shape.len();
    let strides = broadcast_strides(src_shape, rank);
    let total: usize = out_shape.iter().product();
    let mut idx = vec![0usize; rank];
    let mut src = 0usize;
    for out in 0..total {
        f(out, src);
        // odometer increment
        for ax in (0..rank).rev() {
            idx[ax] += 1;
            src += strides[ax];
            if idx[ax] < out_shape[ax] {
                break;
            }
            src -= strides[ax] * out_shape[ax];
            idx[ax] = 0;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn broadcast_trailing_alignment() {
        assert_eq!(broadcast_shape(&[4, 3], &[3], "t").unwrap(), vec![4, 3]);
        assert_eq!(broadcast_shape(&[4, 3, 2], &[3, 1], "t").unwrap(), vec![4, 3, 2]);
        assert_eq!(broadcast_shape(&[5], &[], "t").unwrap(), vec![5]);
        assert!(broadcast_shape(&[4, 3], &[2], "t").is_err());
    }

    #[test]
    fn broadcast_error_names_both_shapes() {
        let err = broadcast_shape(&[4, 3], &[5, 3, 2], "t").unwrap_err();
        let msg = format!("{err}");
        assert!(msg.contains("[4, 3]") && msg.contains("[5, 3, 2]"), "{msg}");
    }

    #[test]
    fn complex_interleave_roundtrip() {
        let vals = vec![Complex64::new(1.0, -2.0), Complex64::new(0.5, 3.0)];
        let t = Tensor::from_complex(&[2], &vals);
        assert_eq!(t.c_get(0), vals[0]);
        assert_eq!(t.c_get(1), vals[1]);
        assert_eq!(t.data().len(), 4);
    }

    #[test]
    fn scalar_has_empty_shape() {
        let s = Tensor::scalar(2.5);
        assert_eq!(s.numel(), 1);
        assert_eq!(s.item(), 2.5);
        assert!(s.shape().is_empty());
    }

    #[test]
    fn for_each_broadcast_walks_strides() {
        // out [2,3], src [3] -> src index cycles 0,1,2,0,1,2
        let mut pairs = Vec::new();
        for_each_broadcast(&[2, 3], &[3], |o, s| pairs.push((o, s)));
        assert_eq!(pairs, vec![(0, 0), (1, 1), (2, 2), (3, 0), (4, 1), (5, 2)]);
    }
}
