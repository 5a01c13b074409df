//! Multi-head scaled dot-product self-attention over the sequence axis.

use ndarray::{s, Array2, Array3, Array4, ArrayView2, Axis};
use rand::Rng;

use super::layers::{flat, unflat, Linear};

#[derive(Debug, Clone, PartialEq)]
pub struct Mhsa {
    pub query: Linear,
    pub key: Linear,
    pub value: Linear,
    pub output: Linear,
}

pub struct MhsaCache {
    x: Array2<f64>,
    q: Array2<f64>,
    k: Array2<f64>,
    v: Array2<f64>,
    ctx: Array2<f64>,
    /// Attention weights, `B x heads x L x L`; rows sum to one.
    pub weights: Array4<f64>,
}

fn softmax_rows(scores: &mut Array2<f64>) {
    for mut row in scores.rows_mut() {
        let max = row.fold(f64::NEG_INFINITY, |a, &b| a.max(b));
        row.mapv_inplace(|v| (v - max).exp());
        let sum = row.sum();
        row /= sum;
    }
}

impl Mhsa {
    pub fn xavier<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Self {
        Self {
            query: Linear::xavier(d, d, rng),
            key: Linear::xavier(d, d, rng),
            value: Linear::xavier(d, d, rng),
            output: Linear::xavier(d, d, rng),
        }
    }

    pub fn zeros(d: usize) -> Self {
        Self {
            query: Linear::zeros(d, d),
            key: Linear::zeros(d, d),
            value: Linear::zeros(d, d),
            output: Linear::zeros(d, d),
        }
    }

    /// Attention of `x` (`B x L x D`) with `heads` heads; `D % heads == 0`.
    pub fn forward(&self, x: &Array3<f64>, heads: usize) -> (Array3<f64>, MhsaCache) {
        let (bsz, len, d) = x.dim();
        let dh = d / heads;
        let scale = 1.0 / (dh as f64).sqrt();
        let xf = flat(x).to_owned();
        let q = self.query.forward(&xf.view());
        let k = self.key.forward(&xf.view());
        let v = self.value.forward(&xf.view());
        let mut ctx = Array2::zeros((bsz * len, d));
        let mut weights = Array4::zeros((bsz, heads, len, len));
        for b in 0..bsz {
            let rows = b * len..(b + 1) * len;
            for h in 0..heads {
                let cols = h * dh..(h + 1) * dh;
                let qh = q.slice(s![rows.clone(), cols.clone()]);
                let kh = k.slice(s![rows.clone(), cols.clone()]);
                let vh = v.slice(s![rows.clone(), cols.clone()]);
                let mut a = qh.dot(&kh.t()) * scale;
                softmax_rows(&mut a);
                ctx.slice_mut(s![rows.clone(), cols]).assign(&a.dot(&vh));
                weights.slice_mut(s![b, h, .., ..]).assign(&a);
            }
        }
        let y = self.output.forward(&ctx.view());
        (
            unflat(y, bsz, len),
            MhsaCache {
                x: xf,
                q,
                k,
                v,
                ctx,
                weights,
            },
        )
    }

    /// Gradient with respect to the input; parameter gradients go to `grad`.
    pub fn backward(&self, cache: &MhsaCache, dy: &ArrayView2<f64>, grad: &mut Mhsa) -> Array2<f64> {
        let (bsz, heads, len, _) = cache.weights.dim();
        let d = cache.q.ncols();
        let dh = d / heads;
        let scale = 1.0 / (dh as f64).sqrt();
        let dctx = self
            .output
            .backward(&cache.ctx.view(), &dy.to_owned(), &mut grad.output);
        let mut dq = Array2::zeros(cache.q.raw_dim());
        let mut dk = Array2::zeros(cache.k.raw_dim());
        let mut dv = Array2::zeros(cache.v.raw_dim());
        for b in 0..bsz {
            let rows = b * len..(b + 1) * len;
            for h in 0..heads {
                let cols = h * dh..(h + 1) * dh;
                let a = cache.weights.slice(s![b, h, .., ..]);
                let qh = cache.q.slice(s![rows.clone(), cols.clone()]);
                let kh = cache.k.slice(s![rows.clone(), cols.clone()]);
                let vh = cache.v.slice(s![rows.clone(), cols.clone()]);
                let g = dctx.slice(s![rows.clone(), cols.clone()]);
                let da = g.dot(&vh.t());
                dv.slice_mut(s![rows.clone(), cols.clone()]).assign(&a.t().dot(&g));
                let row_dot = (&da * &a).sum_axis(Axis(1)).insert_axis(Axis(1));
                let ds = &a * &(&da - &row_dot) * scale;
                dq.slice_mut(s![rows.clone(), cols.clone()]).assign(&ds.dot(&kh));
                dk.slice_mut(s![rows.clone(), cols]).assign(&ds.t().dot(&qh));
            }
        }
        let x = cache.x.view();
        let mut dx = self.query.backward(&x, &dq, &mut grad.query);
        dx += &self.key.backward(&x, &dk, &mut grad.key);
        dx += &self.value.backward(&x, &dv, &mut grad.value);
        dx
    }
}
