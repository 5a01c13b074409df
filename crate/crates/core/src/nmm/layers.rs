//! Dense building blocks with hand-written backward passes.
//!
//! Token features are handled as `M x D` matrices (`M = B * L`). Every
//! `backward` accumulates into a gradient struct of the same shape as the
//! layer and returns the gradient with respect to the layer input.

use ndarray::{s, Array1, Array2, Array3, ArrayView2, ArrayView3, Axis};
use rand::Rng;

/// Epsilon added to the variance in layer normalization.
pub const LN_EPS: f64 = 1e-5;

/// Uniform Xavier/Glorot initialization in `[-a, a]`, `a = sqrt(6 / (fan_in + fan_out))`.
pub fn xavier<R: Rng + ?Sized>(shape: (usize, usize), fan_in: usize, fan_out: usize, rng: &mut R) -> Array2<f64> {
    let a = (6.0 / (fan_in + fan_out) as f64).sqrt();
    Array2::from_shape_simple_fn(shape, || rng.random_range(-a..=a))
}

/// Affine map `y = x W^T + b` with `W: out x in`.
#[derive(Debug, Clone, PartialEq)]
pub struct Linear {
    pub w: Array2<f64>,
    pub b: Array1<f64>,
}

impl Linear {
    pub fn zeros(out: usize, inp: usize) -> Self {
        Self {
            w: Array2::zeros((out, inp)),
            b: Array1::zeros(out),
        }
    }

    pub fn xavier<R: Rng + ?Sized>(out: usize, inp: usize, rng: &mut R) -> Self {
        Self {
            w: xavier((out, inp), inp, out, rng),
            b: Array1::zeros(out),
        }
    }

    pub fn forward(&self, x: &ArrayView2<f64>) -> Array2<f64> {
        let mut y = x.dot(&self.w.t());
        y += &self.b;
        y
    }

    pub fn backward(&self, x: &ArrayView2<f64>, dy: &Array2<f64>, grad: &mut Linear) -> Array2<f64> {
        grad.w += &dy.t().dot(x);
        grad.b += &dy.sum_axis(Axis(0));
        dy.dot(&self.w)
    }
}

/// Per-row standardization followed by a learned gain and bias.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerNorm {
    pub gain: Array1<f64>,
    pub bias: Array1<f64>,
}

pub struct LnCache {
    xhat: Array2<f64>,
    inv_std: Array1<f64>,
}

impl LayerNorm {
    pub fn identity(d: usize) -> Self {
        Self {
            gain: Array1::ones(d),
            bias: Array1::zeros(d),
        }
    }

    pub fn zeros(d: usize) -> Self {
        Self {
            gain: Array1::zeros(d),
            bias: Array1::zeros(d),
        }
    }

    pub fn forward(&self, x: &ArrayView2<f64>) -> (Array2<f64>, LnCache) {
        let d = x.ncols() as f64;
        let mut xhat = x.to_owned();
        let mut inv_std = Array1::zeros(x.nrows());
        for (mut row, s) in xhat.rows_mut().into_iter().zip(inv_std.iter_mut()) {
            let mean = row.sum() / d;
            row -= mean;
            let var = row.iter().map(|v| v * v).sum::<f64>() / d;
            *s = 1.0 / (var + LN_EPS).sqrt();
            row *= *s;
        }
        let mut y = &xhat * &self.gain;
        y += &self.bias;
        (y, LnCache { xhat, inv_std })
    }

    pub fn backward(&self, cache: &LnCache, dy: &Array2<f64>, grad: &mut LayerNorm) -> Array2<f64> {
        grad.gain += &(dy * &cache.xhat).sum_axis(Axis(0));
        grad.bias += &dy.sum_axis(Axis(0));
        let d = dy.ncols() as f64;
        let dxhat = dy * &self.gain;
        let mut dx = Array2::zeros(dy.raw_dim());
        for (((mut out, g), xh), &s) in dx
            .rows_mut()
            .into_iter()
            .zip(dxhat.rows())
            .zip(cache.xhat.rows())
            .zip(cache.inv_std.iter())
        {
            let sum_g = g.sum();
            let sum_gx = g.dot(&xh);
            for ((o, &gi), &xi) in out.iter_mut().zip(g.iter()).zip(xh.iter()) {
                *o = s / d * (d * gi - sum_g - xi * sum_gx);
            }
        }
        dx
    }
}

/// Layer normalization of a `B x L x D` tensor over its last axis.
pub fn layer_norm(x: &Array3<f64>, gain: &Array1<f64>, bias: &Array1<f64>) -> Array3<f64> {
    let ln = LayerNorm {
        gain: gain.clone(),
        bias: bias.clone(),
    };
    let (y, _) = ln.forward(&flat(x));
    unflat(y, x.dim().0, x.dim().1)
}

/// Position-wise `D -> 4D -> D` network with ReLU.
#[derive(Debug, Clone, PartialEq)]
pub struct FeedForward {
    pub up: Linear,
    pub down: Linear,
}

pub struct FfnCache {
    pre: Array2<f64>,
    hidden: Array2<f64>,
}

impl FfnCache {
    /// Which hidden units were active (positive pre-activation).
    pub fn active(&self) -> impl Iterator<Item = bool> + '_ {
        self.pre.iter().map(|&p| p > 0.0)
    }
}

impl FeedForward {
    pub fn xavier<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Self {
        Self {
            up: Linear::xavier(4 * d, d, rng),
            down: Linear::xavier(d, 4 * d, rng),
        }
    }

    pub fn zeros(d: usize) -> Self {
        Self {
            up: Linear::zeros(4 * d, d),
            down: Linear::zeros(d, 4 * d),
        }
    }

    pub fn forward(&self, x: &ArrayView2<f64>) -> (Array2<f64>, FfnCache) {
        let pre = self.up.forward(x);
        let hidden = pre.mapv(|v| v.max(0.0));
        let y = self.down.forward(&hidden.view());
        (y, FfnCache { pre, hidden })
    }

    pub fn backward(
        &self,
        x: &ArrayView2<f64>,
        cache: &FfnCache,
        dy: &Array2<f64>,
        grad: &mut FeedForward,
    ) -> Array2<f64> {
        let mut dh = self.down.backward(&cache.hidden.view(), dy, &mut grad.down);
        dh.zip_mut_with(&cache.pre, |g, &p| {
            if p <= 0.0 {
                *g = 0.0;
            }
        });
        self.up.backward(x, &dh, &mut grad.up)
    }
}

/// Same-padded 1D convolution along the sequence axis of a `B x L x D`
/// tensor. Kernel `w` is `out x in x k` with odd `k`; out-of-range taps
/// read zeros.
#[derive(Debug, Clone, PartialEq)]
pub struct Conv1d {
    pub w: Array3<f64>,
    pub b: Array1<f64>,
}

/// Row ranges `(dst, src)` for tap `j` of a kernel of width `k` over length `len`.
fn tap_rows(j: usize, k: usize, len: usize) -> Option<(std::ops::Range<usize>, std::ops::Range<usize>)> {
    let shift = j as isize - (k / 2) as isize;
    let lo = (-shift).max(0) as usize;
    let hi = (len as isize - shift).min(len as isize);
    if hi <= lo as isize {
        return None;
    }
    let hi = hi as usize;
    let src_lo = (lo as isize + shift) as usize;
    Some((lo..hi, src_lo..src_lo + (hi - lo)))
}

impl Conv1d {
    pub fn xavier<R: Rng + ?Sized>(out: usize, inp: usize, k: usize, rng: &mut R) -> Self {
        let a = (6.0 / ((inp + out) * k) as f64).sqrt();
        Self {
            w: Array3::from_shape_simple_fn((out, inp, k), || rng.random_range(-a..=a)),
            b: Array1::zeros(out),
        }
    }

    pub fn zeros(out: usize, inp: usize, k: usize) -> Self {
        Self {
            w: Array3::zeros((out, inp, k)),
            b: Array1::zeros(out),
        }
    }

    pub fn kernel(&self) -> usize {
        self.w.dim().2
    }

    pub fn forward(&self, x: &ArrayView3<f64>) -> Array3<f64> {
        let (bsz, len, _) = x.dim();
        let out = self.w.dim().0;
        let k = self.kernel();
        let mut y = Array3::zeros((bsz, len, out));
        for b in 0..bsz {
            let xb = x.slice(s![b, .., ..]);
            let mut yb = y.slice_mut(s![b, .., ..]);
            yb += &self.b;
            for j in 0..k {
                if let Some((dst, src)) = tap_rows(j, k, len) {
                    let wj = self.w.slice(s![.., .., j]);
                    let contrib = xb.slice(s![src, ..]).dot(&wj.t());
                    let mut rows = yb.slice_mut(s![dst, ..]);
                    rows += &contrib;
                }
            }
        }
        y
    }

    pub fn backward(&self, x: &ArrayView3<f64>, dy: &ArrayView3<f64>, grad: &mut Conv1d) -> Array3<f64> {
        let (bsz, len, _) = x.dim();
        let k = self.kernel();
        let mut dx = Array3::zeros(x.raw_dim());
        for b in 0..bsz {
            let xb = x.slice(s![b, .., ..]);
            let dyb = dy.slice(s![b, .., ..]);
            grad.b += &dyb.sum_axis(Axis(0));
            for j in 0..k {
                if let Some((dst, src)) = tap_rows(j, k, len) {
                    let g = dyb.slice(s![dst, ..]);
                    let mut gw = grad.w.slice_mut(s![.., .., j]);
                    gw += &g.t().dot(&xb.slice(s![src.clone(), ..]));
                    let wj = self.w.slice(s![.., .., j]);
                    let mut rows = dx.slice_mut(s![b, src, ..]);
                    rows += &g.dot(&wj);
                }
            }
        }
        dx
    }
}

/// Views a standard-layout `B x L x D` tensor as `(B*L) x D`.
pub fn flat(x: &Array3<f64>) -> ArrayView2<'_, f64> {
    let (b, l, d) = x.dim();
    x.view()
        .into_shape_with_order((b * l, d))
        .expect("feature tensors are kept in standard layout")
}

/// Inverse of [`flat`].
pub fn unflat(x: Array2<f64>, b: usize, l: usize) -> Array3<f64> {
    let d = x.ncols();
    x.as_standard_layout()
        .into_owned()
        .into_shape_with_order((b, l, d))
        .expect("row count is b * l")
}
