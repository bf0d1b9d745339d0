//! 2D discrete Fourier transforms on the periodic box and the truncated-mode
//! spectral convolution used by the Fourier layers.
//!
//! Conventions, stated once and used by every oracle:
//! - forward transform is unnormalized, inverse carries `1/(n1*n2)`;
//! - real fields are held as Hermitian-reduced spectra `[n1, n2/2+1, d]`;
//! - a kernel retains the `m1` lowest frequencies in each signed row
//!   direction (two corner blocks, stacked into a `[2*m1, m2, d, d]`
//!   coefficient tensor) and the `m2` lowest nonnegative column frequencies.

use std::cell::RefCell;

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::tensor::Tensor;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

/// In-place 2D complex transform of a row-major `[n1, n2]` buffer.
pub(crate) fn fft2_inplace(buf: &mut [Complex64], n1: usize, n2: usize, inverse: bool) {
    assert_eq!(buf.len(), n1 * n2);
    PLANNER.with(|p| {
        let mut planner = p.borrow_mut();
        let row_fft = if inverse {
            planner.plan_fft_inverse(n2)
        } else {
            planner.plan_fft_forward(n2)
        };
        let col_fft = if inverse {
            planner.plan_fft_inverse(n1)
        } else {
            planner.plan_fft_forward(n1)
        };
        drop(planner);

        row_fft.process(buf);
        // columns via transpose, so the column transforms see contiguous data
        let mut t = vec![Complex64::default(); n1 * n2];
        for i in 0..n1 {
            for j in 0..n2 {
                t[j * n1 + i] = buf[i * n2 + j];
            }
        }
        col_fft.process(&mut t);
        for i in 0..n1 {
            for j in 0..n2 {
                buf[i * n2 + j] = t[j * n1 + i];
            }
        }
    });
}

/// Hermitian-reduced spectrum of a real field on an `n1 x n2` grid.
#[derive(Debug, Clone)]
pub struct SpectrumField {
    pub n1: usize,
    pub n2: usize,
    pub channels: usize,
    /// `[n1, n2/2+1, channels]` row-major.
    pub data: Vec<Complex64>,
}

impl SpectrumField {
    pub fn n2h(&self) -> usize {
        self.n2 / 2 + 1
    }

    pub fn at(&self, k1: usize, k2: usize, c: usize) -> Complex64 {
        self.data[(k1 * self.n2h() + k2) * self.channels + c]
    }
}

fn field_dims(t: &Tensor, context: &'static str) -> Result<(usize, usize, usize)> {
    match t.shape() {
        [n1, n2] => Ok((*n1, *n2, 1)),
        [n1, n2, d] => Ok((*n1, *n2, *d)),
        other => Err(Error::ShapeMismatch {
            left: other.to_vec(),
            right: vec![0, 0, 0],
            context,
        }),
    }
}

/// Unnormalized forward transform of a real field, channel-wise.
pub fn fft2(field: &Tensor) -> Result<SpectrumField> {
    field.expect_real("fft2 input")?;
    let (n1, n2, d) = field_dims(field, "fft2 expects a [n1, n2, d] grid field")?;
    if n1 < 2 || n2 < 2 {
        return Err(Error::GridMismatch(format!("fft2 needs n1, n2 >= 2, got {n1}x{n2}")));
    }
    Ok(SpectrumField {
        n1,
        n2,
        channels: d,
        data: reduce_fft(field.data(), n1, n2, d),
    })
}

/// Inverse transform with `1/(n1*n2)` normalization, optionally zero-padding
/// the spectrum to a finer grid (trigonometric interpolation of the source).
pub fn ifft2(spec: &SpectrumField, out_shape: (usize, usize)) -> Result<Tensor> {
    let (o1, o2) = out_shape;
    if o1 < spec.n1 || o2 < spec.n2 {
        return Err(Error::ShapeMismatch {
            left: vec![spec.n1, spec.n2],
            right: vec![o1, o2],
            context: "ifft2 output must be at least the source grid",
        });
    }
    let d = spec.channels;
    let full = complete_full(&spec.data, spec.n1, spec.n2, d);
    let norm = 1.0 / (spec.n1 * spec.n2) as f64;
    let mut out = vec![0.0f64; o1 * o2 * d];
    let mut buf = vec![Complex64::default(); o1 * o2];
    for c in 0..d {
        if (o1, o2) == (spec.n1, spec.n2) {
            for i in 0..o1 * o2 {
                buf[i] = full[i * d + c];
            }
        } else {
            buf.iter_mut().for_each(|v| *v = Complex64::default());
            pad_spectrum(&full, spec.n1, spec.n2, d, c, &mut buf, o1, o2);
        }
        fft2_inplace(&mut buf, o1, o2, true);
        for i in 0..o1 * o2 {
            out[i * d + c] = buf[i].re * norm;
        }
    }
    let shape = if d == 1 { vec![o1, o2] } else { vec![o1, o2, d] };
    Ok(Tensor::from_vec(&shape, out))
}

/// Forward 2D transform of each channel, keeping columns `0..n2/2+1`.
pub fn reduce_fft(field: &[f64], n1: usize, n2: usize, d: usize) -> Vec<Complex64> {
    let n2h = n2 / 2 + 1;
    let mut out = vec![Complex64::default(); n1 * n2h * d];
    let mut buf = vec![Complex64::default(); n1 * n2];
    for c in 0..d {
        for i in 0..n1 * n2 {
            buf[i] = Complex64::new(field[i * d + c], 0.0);
        }
        fft2_inplace(&mut buf, n1, n2, false);
        for k1 in 0..n1 {
            for k2 in 0..n2h {
                out[(k1 * n2h + k2) * d + c] = buf[k1 * n2 + k2];
            }
        }
    }
    out
}

/// Adjoint of [`reduce_fft`] as a real-linear map: zero-pad the dropped
/// columns, apply the unnormalized inverse transform, take real parts.
pub(crate) fn reduce_fft_adjoint(spec_bar: &[Complex64], n1: usize, n2: usize, d: usize) -> Vec<f64> {
    let n2h = n2 / 2 + 1;
    let mut out = vec![0.0f64; n1 * n2 * d];
    let mut buf = vec![Complex64::default(); n1 * n2];
    for c in 0..d {
        buf.iter_mut().for_each(|v| *v = Complex64::default());
        for k1 in 0..n1 {
            for k2 in 0..n2h {
                buf[k1 * n2 + k2] = spec_bar[(k1 * n2h + k2) * d + c];
            }
        }
        fft2_inplace(&mut buf, n1, n2, true);
        for i in 0..n1 * n2 {
            out[i * d + c] = buf[i].re;
        }
    }
    out
}

/// Hermitian-complete a reduced spectrum to the full `[n1, n2]` layout.
/// Self-conjugate columns (DC and, for even `n2`, Nyquist) pass through.
pub(crate) fn complete_full(reduced: &[Complex64], n1: usize, n2: usize, d: usize) -> Vec<Complex64> {
    let n2h = n2 / 2 + 1;
    let mut full = vec![Complex64::default(); n1 * n2 * d];
    for k1 in 0..n1 {
        for k2 in 0..n2h {
            for c in 0..d {
                full[(k1 * n2 + k2) * d + c] = reduced[(k1 * n2h + k2) * d + c];
            }
        }
        for k2 in n2h..n2 {
            let s1 = (n1 - k1) % n1;
            let s2 = n2 - k2;
            for c in 0..d {
                full[(k1 * n2 + k2) * d + c] = reduced[(s1 * n2h + s2) * d + c].conj();
            }
        }
    }
    full
}

/// Inverse transform of a reduced spectrum: Hermitian-complete, invert,
/// take real parts, scale by `1/(n1*n2)`. Returns `[n1, n2, d]` reals.
pub(crate) fn complete_invert(reduced: &[Complex64], n1: usize, n2: usize, d: usize) -> Vec<f64> {
    let full = complete_full(reduced, n1, n2, d);
    let norm = 1.0 / (n1 * n2) as f64;
    let mut out = vec![0.0f64; n1 * n2 * d];
    let mut buf = vec![Complex64::default(); n1 * n2];
    for c in 0..d {
        for i in 0..n1 * n2 {
            buf[i] = full[i * d + c];
        }
        fft2_inplace(&mut buf, n1, n2, true);
        for i in 0..n1 * n2 {
            out[i * d + c] = buf[i].re * norm;
        }
    }
    out
}

/// Adjoint of [`complete_invert`]: forward-transform `w/(n1*n2)` and fold the
/// conjugated contributions of the completed columns back into the reduced
/// layout.
pub(crate) fn complete_invert_adjoint(w: &[f64], n1: usize, n2: usize, d: usize) -> Vec<Complex64> {
    let n2h = n2 / 2 + 1;
    let norm = 1.0 / (n1 * n2) as f64;
    let mut buf = vec![Complex64::default(); n1 * n2];
    let mut full_bar = vec![Complex64::default(); n1 * n2 * d];
    for c in 0..d {
        for i in 0..n1 * n2 {
            buf[i] = Complex64::new(w[i * d + c] * norm, 0.0);
        }
        fft2_inplace(&mut buf, n1, n2, false);
        for i in 0..n1 * n2 {
            full_bar[i * d + c] = buf[i];
        }
    }
    let mut reduced = vec![Complex64::default(); n1 * n2h * d];
    for k1 in 0..n1 {
        for k2 in 0..n2h {
            for c in 0..d {
                reduced[(k1 * n2h + k2) * d + c] += full_bar[(k1 * n2 + k2) * d + c];
            }
        }
        for k2 in n2h..n2 {
            let s1 = (n1 - k1) % n1;
            let s2 = n2 - k2;
            for c in 0..d {
                reduced[(s1 * n2h + s2) * d + c] += full_bar[(k1 * n2 + k2) * d + c].conj();
            }
        }
    }
    reduced
}

/// Zero-pad one channel of a full spectrum into a larger full spectrum,
/// splitting Nyquist bins so the result interpolates the real source field.
fn pad_spectrum(
    full: &[Complex64],
    n1: usize,
    n2: usize,
    d: usize,
    c: usize,
    out: &mut [Complex64],
    o1: usize,
    o2: usize,
) {
    let weight_count = |k: usize, n: usize, o: usize| -> Vec<(usize, f64)> {
        // map source bin k (of n) to destination bins (of o) with weights
        let half = n / 2;
        if n % 2 == 0 && k == half && o > n {
            vec![(half, 0.5), (o - half, 0.5)]
        } else if k <= half {
            vec![(k, 1.0)]
        } else {
            vec![(o - (n - k), 1.0)]
        }
    };
    for k1 in 0..n1 {
        for k2 in 0..n2 {
            let v = full[(k1 * n2 + k2) * d + c];
            for (d1, w1) in weight_count(k1, n1, o1) {
                for (d2, w2) in weight_count(k2, n2, o2) {
                    out[d1 * o2 + d2] += v * (w1 * w2);
                }
            }
        }
    }
}

/// Learnable spectrum of a translation-invariant kernel. The coefficient
/// tensor stacks the two signed row blocks: coefficient row `f` (for
/// `f < m1`) holds the nonnegative row frequency `f`, coefficient row
/// `m1 + f` holds the negative frequency `-f`. The retained set is mirror
/// closed, which keeps truncation an exact projection on the
/// self-conjugate spectrum columns.
#[derive(Debug, Clone)]
pub struct SpectralKernel {
    pub m1: usize,
    pub m2: usize,
    pub d: usize,
    /// Complex tensor `[2*m1, m2, d, d]`.
    pub coeffs: Tensor,
}

impl SpectralKernel {
    pub fn new(m1: usize, m2: usize, d: usize, coeffs: Tensor) -> Result<Self> {
        let expect = [2 * m1, m2, d, d];
        if coeffs.shape() != expect || !coeffs.is_complex() {
            return Err(Error::ShapeMismatch {
                left: coeffs.shape().to_vec(),
                right: expect.to_vec(),
                context: "spectral kernel coefficients",
            });
        }
        Ok(SpectralKernel { m1, m2, d, coeffs })
    }

    pub fn zeros(m1: usize, m2: usize, d: usize) -> Self {
        SpectralKernel {
            m1,
            m2,
            d,
            coeffs: Tensor::zeros_complex(&[2 * m1, m2, d, d]),
        }
    }

    /// Identity matrix on every retained mode (an all-pass filter when the
    /// modes cover the whole spectrum).
    pub fn identity(m1: usize, m2: usize, d: usize) -> Self {
        let mut k = Self::zeros(m1, m2, d);
        let numel = 2 * m1 * m2;
        for b in 0..numel {
            for i in 0..d {
                k.coeffs.c_set((b * d + i) * d + i, Complex64::new(1.0, 0.0));
            }
        }
        k
    }

    pub fn check_grid(&self, n1: usize, n2: usize) -> Result<()> {
        if self.m1 > n1 / 2 + 1 || self.m2 > n2 / 2 + 1 {
            return Err(Error::ModesExceedGrid {
                m1: self.m1,
                m2: self.m2,
                n1,
                n2,
            });
        }
        Ok(())
    }

    /// Smallest mode counts that keep every frequency of an `n1 x n2` grid.
    pub fn full_modes(n1: usize, n2: usize) -> (usize, usize) {
        (n1 / 2 + 1, n2 / 2 + 1)
    }
}

/// Retained grid rows as `(grid_row, coeff_row)` pairs: signed frequencies
/// `f` with `|f| < m1`. Frequency `f >= 0` lives at coefficient row `f`,
/// frequency `-f` at row `m1 + f`; the set is mirror closed (the Nyquist
/// row, when reached, counts once).
pub fn retained_rows(m1: usize, n1: usize) -> Vec<(usize, usize)> {
    let half = n1 / 2;
    let mut rows = Vec::with_capacity(2 * m1);
    let mut seen = vec![false; n1];
    for f in 0..m1.min(half + 1) {
        if !seen[f] {
            seen[f] = true;
            rows.push((f, f));
        }
    }
    for f in 1..m1.min(n1) {
        let k = n1 - f;
        if !seen[k] {
            seen[k] = true;
            rows.push((k, m1 + f));
        }
    }
    rows
}

/// Apply kernel coefficients to a reduced spectrum, zeroing every
/// non-retained mode: `out[k, o] = sum_i spec[k, i] * R[k, i, o]`.
pub(crate) fn apply_kernel(
    spec: &[Complex64],
    n1: usize,
    n2h: usize,
    d: usize,
    kernel: &SpectralKernel,
) -> Vec<Complex64> {
    let d_out = kernel.d;
    let m2 = kernel.m2;
    let mut out = vec![Complex64::default(); n1 * n2h * d_out];
    for &(k1, r) in &retained_rows(kernel.m1, n1) {
        for k2 in 0..m2.min(n2h) {
            let src = (k1 * n2h + k2) * d;
            let dst = (k1 * n2h + k2) * d_out;
            for o in 0..d_out {
                let mut acc = Complex64::default();
                for i in 0..d {
                    acc += spec[src + i] * kernel.coeffs.c_get(((r * m2 + k2) * d + i) * d_out + o);
                }
                out[dst + o] = acc;
            }
        }
    }
    out
}

/// Spectral convolution `ifft2( R . fft2(h) )` with all non-retained modes
/// zeroed. Pure forward evaluation; the tape has its own differentiable node.
pub fn spectral_conv(h: &Tensor, kernel: &SpectralKernel) -> Result<Tensor> {
    h.expect_real("spectral_conv input")?;
    let (n1, n2, d) = field_dims(h, "spectral_conv expects [n1, n2, d]")?;
    if d != kernel.d {
        return Err(Error::ShapeMismatch {
            left: vec![d],
            right: vec![kernel.d],
            context: "spectral_conv channel count",
        });
    }
    kernel.check_grid(n1, n2)?;
    let spec = reduce_fft(h.data(), n1, n2, d);
    let filtered = apply_kernel(&spec, n1, n2 / 2 + 1, d, kernel);
    let out = complete_invert(&filtered, n1, n2, d);
    Ok(Tensor::from_vec(h.shape(), out))
}
