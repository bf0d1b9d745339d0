//! Reverse-mode differentiation over dense tensors.
//!
//! A `Tape` records the forward pass as a flat list of nodes; `backward`
//! replays adjoints in reverse order. The op set covers exactly what the
//! operator layers need: broadcasted elementwise arithmetic, pointwise
//! channel maps, activations, reductions, the truncated spectral
//! convolution, and the kernel-times-characteristic matrix term of the
//! masked nonlocal layers.
//!
//! Tapes are single-use: one forward pass, one backward sweep. Gradients of
//! complex leaves follow the `d/dRe + i d/dIm` convention.

use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math;
use crate::spectral::{
    apply_kernel, complete_invert, complete_invert_adjoint, reduce_fft, reduce_fft_adjoint,
    retained_rows, SpectralKernel,
};
use crate::tensor::{broadcast_shape, broadcast_strides, Tensor};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Var(usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinaryKind {
    Add,
    Sub,
    Mul,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActKind {
    Relu,
    Gelu,
}

impl ActKind {
    pub fn apply(self, x: f64) -> f64 {
        match self {
            ActKind::Relu => x.max(0.0),
            ActKind::Gelu => math::gelu(x),
        }
    }

    pub fn deriv(self, x: f64) -> f64 {
        match self {
            ActKind::Relu => {
                if x > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            ActKind::Gelu => math::gelu_deriv(x),
        }
    }
}

struct SpectralSaved {
    m1: usize,
    m2: usize,
    n1: usize,
    n2: usize,
    d: usize,
    /// reduced forward spectrum of the input field
    spec_h: Vec<Complex64>,
}

struct NonlocalSaved {
    m1: usize,
    m2: usize,
    n1: usize,
    n2: usize,
    d: usize,
    chi_hat: Arc<Vec<Complex64>>,
    /// matrix field `[n1*n2, d*d]`, entry `(i, o)` at `i*d + o`
    mfield: Arc<Vec<f64>>,
}

enum Node {
    Leaf,
    Binary {
        kind: BinaryKind,
        a: Var,
        b: Var,
    },
    Scale {
        a: Var,
        s: f64,
    },
    ChannelLinear {
        h: Var,
        w: Var,
        bias: Option<Var>,
    },
    Activation {
        kind: ActKind,
        x: Var,
    },
    Sum {
        x: Var,
    },
    Sqrt {
        x: Var,
    },
    SpectralConv {
        h: Var,
        kernel: Var,
        saved: SpectralSaved,
    },
    /// `out(x) = M(x) h(x)` with `M = ifft2[ R . fft2(chi) ]` matrix-valued.
    NonlocalChi {
        h: Var,
        kernel: Var,
        saved: NonlocalSaved,
    },
}

pub struct Tape {
    nodes: Vec<Node>,
    vals: Vec<Tensor>,
    tracked: Vec<bool>,
}

/// Per-variable gradients produced by one backward sweep.
pub struct Gradients {
    grads: Vec<Option<Tensor>>,
}

impl Gradients {
    pub fn get(&self, v: Var) -> Option<&Tensor> {
        self.grads[v.0].as_ref()
    }

    pub fn take(&mut self, v: Var) -> Option<Tensor> {
        self.grads[v.0].take()
    }
}

impl Default for Tape {
    fn default() -> Self {
        Self::new()
    }
}

impl Tape {
    pub fn new() -> Self {
        Tape {
            nodes: Vec::new(),
            vals: Vec::new(),
            tracked: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.vals[v.0]
    }

    /// Record a leaf. Gradient tracking follows `t.requires_grad`.
    pub fn leaf(&mut self, t: Tensor) -> Var {
        let tracked = t.requires_grad;
        self.push(Node::Leaf, t, tracked)
    }

    /// Record an untracked input leaf regardless of the tensor's flag.
    pub fn input(&mut self, t: Tensor) -> Var {
        self.push(Node::Leaf, t, false)
    }

    fn push(&mut self, node: Node, val: Tensor, tracked: bool) -> Var {
        self.nodes.push(node);
        self.vals.push(val);
        self.tracked.push(tracked);
        Var(self.nodes.len() - 1)
    }

    fn track_of(&self, vars: &[Var]) -> bool {
        vars.iter().any(|v| self.tracked[v.0])
    }

    pub fn binary(&mut self, kind: BinaryKind, a: Var, b: Var) -> Result<Var> {
        let (ta, tb) = (&self.vals[a.0], &self.vals[b.0]);
        ta.expect_real("elementwise lhs")?;
        tb.expect_real("elementwise rhs")?;
        let out_shape = broadcast_shape(ta.shape(), tb.shape(), "elementwise broadcast")?;
        let mut out = Tensor::zeros(&out_shape);
        {
            let sa = broadcast_strides(ta.shape(), out_shape.len());
            let sb = broadcast_strides(tb.shape(), out_shape.len());
            let (da, db) = (ta.data(), tb.data());
            let dst = out.data_mut();
            walk2(&out_shape, &sa, &sb, |o, ia, ib| {
                dst[o] = match kind {
                    BinaryKind::Add => da[ia] + db[ib],
                    BinaryKind::Sub => da[ia] - db[ib],
                    BinaryKind::Mul => da[ia] * db[ib],
                };
            });
        }
        let tracked = self.track_of(&[a, b]);
        Ok(self.push(Node::Binary { kind, a, b }, out, tracked))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        self.binary(BinaryKind::Add, a, b)
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        self.binary(BinaryKind::Sub, a, b)
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        self.binary(BinaryKind::Mul, a, b)
    }

    pub fn scale(&mut self, a: Var, s: f64) -> Var {
        let ta = &self.vals[a.0];
        let data: Vec<f64> = ta.data().iter().map(|v| v * s).collect();
        let out = if ta.is_complex() {
            Tensor::from_interleaved(ta.shape(), data)
        } else {
            Tensor::from_vec(ta.shape(), data)
        };
        let tracked = self.tracked[a.0];
        self.push(Node::Scale { a, s }, out, tracked)
    }

    /// Pointwise affine map over the channel (last) axis:
    /// `out[p, :] = h[p, :] W + bias`.
    pub fn channel_linear(&mut self, h: Var, w: Var, bias: Option<Var>) -> Result<Var> {
        let (th, tw) = (&self.vals[h.0], &self.vals[w.0]);
        th.expect_real("channel_linear input")?;
        tw.expect_real("channel_linear weight")?;
        let d_in = *th.shape().last().ok_or(Error::ShapeMismatch {
            left: vec![],
            right: vec![0, 0],
            context: "channel_linear input must have a channel axis",
        })?;
        let (wd_in, d_out) = match tw.shape() {
            [i, o] => (*i, *o),
            other => {
                return Err(Error::ShapeMismatch {
                    left: other.to_vec(),
                    right: vec![d_in, 0],
                    context: "channel_linear weight must be [d_in, d_out]",
                })
            }
        };
        if wd_in != d_in {
            return Err(Error::ShapeMismatch {
                left: th.shape().to_vec(),
                right: tw.shape().to_vec(),
                context: "channel_linear dimension mismatch",
            });
        }
        if let Some(b) = bias {
            let tb = &self.vals[b.0];
            if tb.shape() != [d_out] {
                return Err(Error::ShapeMismatch {
                    left: tb.shape().to_vec(),
                    right: vec![d_out],
                    context: "channel_linear bias",
                });
            }
        }
        let points = th.numel() / d_in;
        let mut shape = th.shape().to_vec();
        *shape.last_mut().unwrap() = d_out;
        let mut out = vec![0.0f64; points * d_out];
        {
            let hd = th.data();
            let wd = tw.data();
            for p in 0..points {
                let hrow = &hd[p * d_in..(p + 1) * d_in];
                let orow = &mut out[p * d_out..(p + 1) * d_out];
                for (i, &hv) in hrow.iter().enumerate() {
                    let wrow = &wd[i * d_out..(i + 1) * d_out];
                    for o in 0..d_out {
                        orow[o] += hv * wrow[o];
                    }
                }
            }
            if let Some(b) = bias {
                let bd = self.vals[b.0].data();
                for p in 0..points {
                    for o in 0..d_out {
                        out[p * d_out + o] += bd[o];
                    }
                }
            }
        }
        let mut vars = vec![h, w];
        if let Some(b) = bias {
            vars.push(b);
        }
        let tracked = self.track_of(&vars);
        Ok(self.push(
            Node::ChannelLinear { h, w, bias },
            Tensor::from_vec(&shape, out),
            tracked,
        ))
    }

    pub fn activation(&mut self, kind: ActKind, x: Var) -> Result<Var> {
        let tx = &self.vals[x.0];
        tx.expect_real("activation input")?;
        let data: Vec<f64> = tx.data().iter().map(|&v| kind.apply(v)).collect();
        let out = Tensor::from_vec(tx.shape(), data);
        let tracked = self.tracked[x.0];
        Ok(self.push(Node::Activation { kind, x }, out, tracked))
    }

    /// Full reduction to a scalar.
    pub fn sum(&mut self, x: Var) -> Var {
        let s: f64 = self.vals[x.0].data().iter().sum();
        let tracked = self.tracked[x.0];
        self.push(Node::Sum { x }, Tensor::scalar(s), tracked)
    }

    /// Elementwise square root (subgradient 0 at exactly 0).
    pub fn sqrt(&mut self, x: Var) -> Var {
        let tx = &self.vals[x.0];
        let data: Vec<f64> = tx.data().iter().map(|v| v.sqrt()).collect();
        let out = Tensor::from_vec(tx.shape(), data);
        let tracked = self.tracked[x.0];
        self.push(Node::Sqrt { x }, out, tracked)
    }

    /// Truncated-mode spectral convolution of `h` `[n1, n2, d]` with the
    /// kernel coefficient tensor held by `kernel` (`[2*m1, m2, d, d]`
    /// complex), differentiable in both.
    pub fn spectral_conv(&mut self, h: Var, kernel: Var, m1: usize, m2: usize) -> Result<Var> {
        let th = &self.vals[h.0];
        th.expect_real("spectral_conv input")?;
        let (n1, n2, d) = match th.shape() {
            [n1, n2, d] => (*n1, *n2, *d),
            other => {
                return Err(Error::ShapeMismatch {
                    left: other.to_vec(),
                    right: vec![0, 0, 0],
                    context: "spectral_conv expects [n1, n2, d]",
                })
            }
        };
        let kern = SpectralKernel::new(m1, m2, d, self.vals[kernel.0].clone())?;
        kern.check_grid(n1, n2)?;
        let spec_h = reduce_fft(th.data(), n1, n2, d);
        let filtered = apply_kernel(&spec_h, n1, n2 / 2 + 1, d, &kern);
        let out = complete_invert(&filtered, n1, n2, d);
        let tracked = self.track_of(&[h, kernel]);
        Ok(self.push(
            Node::SpectralConv {
                h,
                kernel,
                saved: SpectralSaved {
                    m1,
                    m2,
                    n1,
                    n2,
                    d,
                    spec_h,
                },
            },
            Tensor::from_vec(&[n1, n2, d], out),
            tracked,
        ))
    }

    /// The `I(chi)(x) h(x)` term of the masked nonlocal layer, where
    /// `I(chi)` is the matrix field `ifft2[ F[kappa] . F[chi] ]`. `chi_hat`
    /// is the reduced spectrum of the (gradient-free) characteristic field.
    /// Pass a previously returned `mfield` to reuse the matrix field when
    /// the kernel and chi are unchanged (shared-parameter layers).
    pub fn nonlocal_chi(
        &mut self,
        h: Var,
        kernel: Var,
        m1: usize,
        m2: usize,
        chi_hat: Arc<Vec<Complex64>>,
        cached_mfield: Option<Arc<Vec<f64>>>,
    ) -> Result<(Var, Arc<Vec<f64>>)> {
        let th = &self.vals[h.0];
        th.expect_real("nonlocal_chi input")?;
        let (n1, n2, d) = match th.shape() {
            [n1, n2, d] => (*n1, *n2, *d),
            other => {
                return Err(Error::ShapeMismatch {
                    left: other.to_vec(),
                    right: vec![0, 0, 0],
                    context: "nonlocal_chi expects [n1, n2, d]",
                })
            }
        };
        let n2h = n2 / 2 + 1;
        if chi_hat.len() != n1 * n2h {
            return Err(Error::GridMismatch(format!(
                "chi spectrum has {} entries, grid {}x{} needs {}",
                chi_hat.len(),
                n1,
                n2,
                n1 * n2h
            )));
        }
        let kern = SpectralKernel::new(m1, m2, d, self.vals[kernel.0].clone())?;
        kern.check_grid(n1, n2)?;

        let mfield = match cached_mfield {
            Some(m) => m,
            None => {
                // S[k, i, o] = R[k, i, o] * chi_hat[k] on retained modes
                let dd = d * d;
                let mut spec = vec![Complex64::default(); n1 * n2h * dd];
                for &(k1, r) in &retained_rows(m1, n1) {
                    for k2 in 0..m2.min(n2h) {
                        let cv = chi_hat[k1 * n2h + k2];
                        let dst = (k1 * n2h + k2) * dd;
                        for i in 0..d {
                            for o in 0..d {
                                spec[dst + i * d + o] =
                                    kern.coeffs.c_get(((r * m2 + k2) * d + i) * d + o) * cv;
                            }
                        }
                    }
                }
                Arc::new(complete_invert(&spec, n1, n2, dd))
            }
        };

        let mut out = vec![0.0f64; n1 * n2 * d];
        {
            let hd = th.data();
            for p in 0..n1 * n2 {
                let hrow = &hd[p * d..(p + 1) * d];
                let mrow = &mfield[p * d * d..(p + 1) * d * d];
                let orow = &mut out[p * d..(p + 1) * d];
                for i in 0..d {
                    let hv = hrow[i];
                    for o in 0..d {
                        orow[o] += mrow[i * d + o] * hv;
                    }
                }
            }
        }
        let tracked = self.track_of(&[h, kernel]);
        let var = self.push(
            Node::NonlocalChi {
                h,
                kernel,
                saved: NonlocalSaved {
                    m1,
                    m2,
                    n1,
                    n2,
                    d,
                    chi_hat,
                    mfield: Arc::clone(&mfield),
                },
            },
            Tensor::from_vec(&[n1, n2, d], out),
            tracked,
        );
        Ok((var, mfield))
    }

    /// Reverse sweep from a real scalar loss. Returns per-variable
    /// gradients; accumulation into parameters is the caller's step, so
    /// repeated accumulation without a reset doubles parameter grads.
    pub fn backward(&mut self, loss: Var) -> Result<Gradients> {
        let tl = &self.vals[loss.0];
        if tl.numel() != 1 || tl.is_complex() {
            return Err(Error::NonScalarLoss {
                shape: tl.shape().to_vec(),
            });
        }
        let n = self.nodes.len();
        let mut adj: Vec<Option<Vec<f64>>> = (0..n).map(|_| None).collect();
        adj[loss.0] = Some(vec![1.0]);

        for id in (0..n).rev() {
            if !self.tracked[id] {
                adj[id] = None;
                continue;
            }
            let w = match adj[id].take() {
                Some(w) => w,
                None => continue,
            };
            match &self.nodes[id] {
                Node::Leaf => {
                    adj[id] = Some(w);
                }
                Node::Binary { kind, a, b } => {
                    let (a, b, kind) = (*a, *b, *kind);
                    let out_shape = self.vals[id].shape().to_vec();
                    let sa = broadcast_strides(self.vals[a.0].shape(), out_shape.len());
                    let sb = broadcast_strides(self.vals[b.0].shape(), out_shape.len());
                    if self.tracked[a.0] {
                        let mut ga = vec![0.0; self.vals[a.0].numel()];
                        let db = self.vals[b.0].data();
                        walk2(&out_shape, &sa, &sb, |o, ia, ib| match kind {
                            BinaryKind::Add | BinaryKind::Sub => ga[ia] += w[o],
                            BinaryKind::Mul => ga[ia] += w[o] * db[ib],
                        });
                        self.accumulate(&mut adj, a, ga);
                    }
                    if self.tracked[b.0] {
                        let mut gb = vec![0.0; self.vals[b.0].numel()];
                        let da = self.vals[a.0].data();
                        walk2(&out_shape, &sa, &sb, |o, ia, ib| match kind {
                            BinaryKind::Add => gb[ib] += w[o],
                            BinaryKind::Sub => gb[ib] -= w[o],
                            BinaryKind::Mul => gb[ib] += w[o] * da[ia],
                        });
                        self.accumulate(&mut adj, b, gb);
                    }
                }
                Node::Scale { a, s } => {
                    let (a, s) = (*a, *s);
                    if self.tracked[a.0] {
                        let ga: Vec<f64> = w.iter().map(|v| v * s).collect();
                        self.accumulate(&mut adj, a, ga);
                    }
                }
                Node::ChannelLinear { h, w: wv, bias } => {
                    let (h, wv, bias) = (*h, *wv, *bias);
                    let d_in = *self.vals[h.0].shape().last().unwrap();
                    let d_out = self.vals[wv.0].shape()[1];
                    let points = self.vals[h.0].numel() / d_in;
                    if self.tracked[h.0] {
                        let mut gh = vec![0.0; points * d_in];
                        let wd = self.vals[wv.0].data();
                        for p in 0..points {
                            let wrow = &w[p * d_out..(p + 1) * d_out];
                            let grow = &mut gh[p * d_in..(p + 1) * d_in];
                            for i in 0..d_in {
                                let wslice = &wd[i * d_out..(i + 1) * d_out];
                                let mut acc = 0.0;
                                for o in 0..d_out {
                                    acc += wslice[o] * wrow[o];
                                }
                                grow[i] += acc;
                            }
                        }
                        self.accumulate(&mut adj, h, gh);
                    }
                    if self.tracked[wv.0] {
                        let mut gw = vec![0.0; d_in * d_out];
                        let hd = self.vals[h.0].data();
                        for p in 0..points {
                            let hrow = &hd[p * d_in..(p + 1) * d_in];
                            let wrow = &w[p * d_out..(p + 1) * d_out];
                            for i in 0..d_in {
                                let hv = hrow[i];
                                let gslice = &mut gw[i * d_out..(i + 1) * d_out];
                                for o in 0..d_out {
                                    gslice[o] += hv * wrow[o];
                                }
                            }
                        }
                        self.accumulate(&mut adj, wv, gw);
                    }
                    if let Some(b) = bias {
                        if self.tracked[b.0] {
                            let mut gb = vec![0.0; d_out];
                            for p in 0..points {
                                for o in 0..d_out {
                                    gb[o] += w[p * d_out + o];
                                }
                            }
                            self.accumulate(&mut adj, b, gb);
                        }
                    }
                }
                Node::Activation { kind, x } => {
                    let (kind, x) = (*kind, *x);
                    if self.tracked[x.0] {
                        let gx: Vec<f64> = self.vals[x.0]
                            .data()
                            .iter()
                            .zip(&w)
                            .map(|(&v, &wo)| kind.deriv(v) * wo)
                            .collect();
                        self.accumulate(&mut adj, x, gx);
                    }
                }
                Node::Sum { x } => {
                    let x = *x;
                    if self.tracked[x.0] {
                        let gx = vec![w[0]; self.vals[x.0].numel()];
                        self.accumulate(&mut adj, x, gx);
                    }
                }
                Node::Sqrt { x } => {
                    let x = *x;
                    if self.tracked[x.0] {
                        let out = self.vals[id].data();
                        let gx: Vec<f64> = out
                            .iter()
                            .zip(&w)
                            .map(|(&y, &wo)| if y > 0.0 { 0.5 / y * wo } else { 0.0 })
                            .collect();
                        self.accumulate(&mut adj, x, gx);
                    }
                }
                Node::SpectralConv { h, kernel, saved } => {
                    let (h, kernel) = (*h, *kernel);
                    let (n1, n2, d) = (saved.n1, saved.n2, saved.d);
                    let n2h = n2 / 2 + 1;
                    let wbar = complete_invert_adjoint(&w, n1, n2, d);
                    let kcoeffs = &self.vals[kernel.0];
                    let rows = retained_rows(saved.m1, n1);
                    if self.tracked[h.0] {
                        let mut ghspec = vec![Complex64::default(); n1 * n2h * d];
                        for &(k1, r) in &rows {
                            for k2 in 0..saved.m2.min(n2h) {
                                let src = (k1 * n2h + k2) * d;
                                for i in 0..d {
                                    let mut acc = Complex64::default();
                                    for o in 0..d {
                                        acc += kcoeffs
                                            .c_get(((r * saved.m2 + k2) * d + i) * d + o)
                                            .conj()
                                            * wbar[src + o];
                                    }
                                    ghspec[src + i] = acc;
                                }
                            }
                        }
                        let gh = reduce_fft_adjoint(&ghspec, n1, n2, d);
                        self.accumulate(&mut adj, h, gh);
                    }
                    if self.tracked[kernel.0] {
                        let mut gk = vec![0.0; 2 * saved.m1 * saved.m2 * d * d * 2];
                        for &(k1, r) in &rows {
                            for k2 in 0..saved.m2.min(n2h) {
                                let src = (k1 * n2h + k2) * d;
                                for i in 0..d {
                                    let hconj = saved.spec_h[src + i].conj();
                                    for o in 0..d {
                                        let g = wbar[src + o] * hconj;
                                        let idx = ((r * saved.m2 + k2) * d + i) * d + o;
                                        gk[2 * idx] += g.re;
                                        gk[2 * idx + 1] += g.im;
                                    }
                                }
                            }
                        }
                        self.accumulate(&mut adj, kernel, gk);
                    }
                }
                Node::NonlocalChi { h, kernel, saved } => {
                    let (h, kernel) = (*h, *kernel);
                    let (n1, n2, d) = (saved.n1, saved.n2, saved.d);
                    let n2h = n2 / 2 + 1;
                    let dd = d * d;
                    if self.tracked[h.0] {
                        let mut gh = vec![0.0; n1 * n2 * d];
                        for p in 0..n1 * n2 {
                            let mrow = &saved.mfield[p * dd..(p + 1) * dd];
                            let wrow = &w[p * d..(p + 1) * d];
                            let grow = &mut gh[p * d..(p + 1) * d];
                            for i in 0..d {
                                let mut acc = 0.0;
                                for o in 0..d {
                                    acc += mrow[i * d + o] * wrow[o];
                                }
                                grow[i] += acc;
                            }
                        }
                        self.accumulate(&mut adj, h, gh);
                    }
                    if self.tracked[kernel.0] {
                        let hd = self.vals[h.0].data();
                        let mut mbar = vec![0.0; n1 * n2 * dd];
                        for p in 0..n1 * n2 {
                            let hrow = &hd[p * d..(p + 1) * d];
                            let wrow = &w[p * d..(p + 1) * d];
                            let mrow = &mut mbar[p * dd..(p + 1) * dd];
                            for i in 0..d {
                                let hv = hrow[i];
                                for o in 0..d {
                                    mrow[i * d + o] = hv * wrow[o];
                                }
                            }
                        }
                        let sbar = complete_invert_adjoint(&mbar, n1, n2, dd);
                        let mut gk = vec![0.0; 2 * saved.m1 * saved.m2 * dd * 2];
                        for &(k1, r) in &retained_rows(saved.m1, n1) {
                            for k2 in 0..saved.m2.min(n2h) {
                                let cconj = saved.chi_hat[k1 * n2h + k2].conj();
                                let src = (k1 * n2h + k2) * dd;
                                for i in 0..d {
                                    for o in 0..d {
                                        let g = sbar[src + i * d + o] * cconj;
                                        let idx = ((r * saved.m2 + k2) * d + i) * d + o;
                                        gk[2 * idx] += g.re;
                                        gk[2 * idx + 1] += g.im;
                                    }
                                }
                            }
                        }
                        self.accumulate(&mut adj, kernel, gk);
                    }
                }
            }
        }

        let mut grads: Vec<Option<Tensor>> = (0..n).map(|_| None).collect();
        for id in 0..n {
            if let (Node::Leaf, Some(g)) = (&self.nodes[id], adj[id].take()) {
                let t = &self.vals[id];
                grads[id] = Some(if t.is_complex() {
                    Tensor::from_interleaved(t.shape(), g)
                } else {
                    Tensor::from_vec(t.shape(), g)
                });
            }
        }
        Ok(Gradients { grads })
    }

    fn accumulate(&self, adj: &mut [Option<Vec<f64>>], v: Var, g: Vec<f64>) {
        match &mut adj[v.0] {
            Some(existing) => {
                for (e, gv) in existing.iter_mut().zip(&g) {
                    *e += gv;
                }
            }
            slot => *slot = Some(g),
        }
    }
}

/// Walk an output shape with two broadcast-strided sources.
fn walk2(out_shape: &[usize], sa: &[usize], sb: &[usize], mut f: impl FnMut(usize, usize, usize)) {
    let rank = out_shape.len();
    let total: usize = out_shape.iter().product();
    if rank == 0 {
        if total == 1 {
            f(0, 0, 0);
        }
        return;
    }
    let mut idx = vec![0usize; rank];
    let (mut ia, mut ib) = (0usize, 0usize);
    for o in 0..total {
        f(o, ia, ib);
        for ax in (0..rank).rev() {
            idx[ax] += 1;
            ia += sa[ax];
            ib += sb[ax];
            if idx[ax] < out_shape[ax] {
                break;
            }
            ia -= sa[ax] * out_shape[ax];
            ib -= sb[ax] * out_shape[ax];
            idx[ax] = 0;
        }
    }
}
