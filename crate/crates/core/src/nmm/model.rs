//! The dual-path module: attention clean path, multi-scale convolutional
//! noisy path, and a linear merge of the two.

use ndarray::{concatenate, s, Array2, Array3, ArrayViewD, ArrayViewMutD, Axis};
use rand::Rng;

use crate::error::{Error, Result};

use super::attention::{Mhsa, MhsaCache};
use super::layers::{flat, unflat, xavier, Conv1d, FeedForward, FfnCache, LayerNorm, Linear, LnCache};

/// Variants used in ablation studies. The default has everything enabled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Ablation {
    /// Noisy path disabled; `f_noisy` is zero.
    pub clean_only: bool,
    /// Clean path disabled; `f_clean = f_i - f_noisy`.
    pub noisy_only: bool,
    /// Attention block skipped: `f_clean = LN(f_i + FFN(f_i))`.
    pub no_attention: bool,
    /// Only the width-3 convolution in the noisy path.
    pub single_scale: bool,
}

impl Ablation {
    pub fn parse(name: &str) -> Result<Self> {
        let mut a = Self::default();
        match name.replace('_', "-").as_str() {
            "none" => {}
            "clean-only" => a.clean_only = true,
            "noisy-only" => a.noisy_only = true,
            "no-attention" => a.no_attention = true,
            "single-scale" => a.single_scale = true,
            other => return Err(Error::invalid(format!("unknown ablation {other:?}"))),
        }
        Ok(a)
    }
}

/// Shape and hyperparameters of the module.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NmmConfig {
    pub batch: usize,
    pub length: usize,
    pub dim: usize,
    pub heads: usize,
    pub temperature: f64,
    pub ablation: Ablation,
}

impl Default for NmmConfig {
    fn default() -> Self {
        Self {
            batch: 4,
            length: 16,
            dim: 64,
            heads: 8,
            temperature: 1.0,
            ablation: Ablation::default(),
        }
    }
}

impl NmmConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch == 0 || self.length == 0 || self.dim == 0 || self.heads == 0 {
            return Err(Error::invalid("batch, length, dim and heads must be positive"));
        }
        if !self.dim.is_multiple_of(self.heads) {
            return Err(Error::invalid(format!(
                "dim {} is not divisible by {} heads",
                self.dim, self.heads
            )));
        }
        if !self.temperature.is_finite() || self.temperature <= 0.0 {
            return Err(Error::invalid(format!(
                "temperature must be positive, got {}",
                self.temperature
            )));
        }
        if self.ablation.clean_only && self.ablation.noisy_only {
            return Err(Error::invalid("clean-only and noisy-only together disable both paths"));
        }
        Ok(())
    }

    /// Kernel widths of the noisy path.
    pub fn kernels(&self) -> &'static [usize] {
        if self.ablation.single_scale {
            &[3]
        } else {
            &[1, 3, 5]
        }
    }

    fn check_input(&self, x: &Array3<f64>) -> Result<()> {
        if x.dim() != (self.batch, self.length, self.dim) {
            return Err(Error::invalid(format!(
                "expected features of shape {:?}, got {:?}",
                (self.batch, self.length, self.dim),
                x.dim()
            )));
        }
        if !x.iter().all(|v| v.is_finite()) {
            return Err(Error::invalid("features contain non-finite values"));
        }
        Ok(())
    }
}

/// Learnable tensors of the module.
#[derive(Debug, Clone, PartialEq)]
pub struct NmmParams {
    pub attn: Mhsa,
    pub ln1: LayerNorm,
    pub ffn: FeedForward,
    pub ln2: LayerNorm,
    /// One convolution per kernel width, `D -> D` channels each.
    pub convs: Vec<Conv1d>,
    /// Merge of the concatenated convolution outputs, `D x (kernels * D)`.
    pub w_m: Array2<f64>,
    /// Projection of `[f_clean | f_noisy]` back to `D`.
    pub merge: Linear,
}

impl NmmParams {
    /// Xavier-uniform weights, zero biases, identity layer norms.
    pub fn init<R: Rng + ?Sized>(cfg: &NmmConfig, rng: &mut R) -> Self {
        let d = cfg.dim;
        let kernels = cfg.kernels();
        Self {
            attn: Mhsa::xavier(d, rng),
            ln1: LayerNorm::identity(d),
            ffn: FeedForward::xavier(d, rng),
            ln2: LayerNorm::identity(d),
            convs: kernels.iter().map(|&k| Conv1d::xavier(d, d, k, rng)).collect(),
            w_m: xavier((d, kernels.len() * d), kernels.len() * d, d, rng),
            merge: Linear::xavier(d, 2 * d, rng),
        }
    }

    /// All-zero tensors of the right shapes, used for gradients.
    pub fn zeros_like(&self) -> Self {
        let d = self.ln1.gain.len();
        Self {
            attn: Mhsa::zeros(d),
            ln1: LayerNorm::zeros(d),
            ffn: FeedForward::zeros(d),
            ln2: LayerNorm::zeros(d),
            convs: self.convs.iter().map(|c| Conv1d::zeros(d, d, c.kernel())).collect(),
            w_m: Array2::zeros(self.w_m.raw_dim()),
            merge: Linear::zeros(d, 2 * d),
        }
    }

    /// Named views of every tensor, in a fixed order.
    pub fn tensors(&self) -> Vec<(String, ArrayViewD<'_, f64>)> {
        let mut v: Vec<(String, ArrayViewD<'_, f64>)> = Vec::new();
        fn lin<'a>(name: &str, l: &'a Linear, v: &mut Vec<(String, ArrayViewD<'a, f64>)>) {
            v.push((format!("{name}.w"), l.w.view().into_dyn()));
            v.push((format!("{name}.b"), l.b.view().into_dyn()));
        }
        lin("attn.query", &self.attn.query, &mut v);
        lin("attn.key", &self.attn.key, &mut v);
        lin("attn.value", &self.attn.value, &mut v);
        lin("attn.output", &self.attn.output, &mut v);
        v.push(("ln1.gain".into(), self.ln1.gain.view().into_dyn()));
        v.push(("ln1.bias".into(), self.ln1.bias.view().into_dyn()));
        lin("ffn.up", &self.ffn.up, &mut v);
        lin("ffn.down", &self.ffn.down, &mut v);
        v.push(("ln2.gain".into(), self.ln2.gain.view().into_dyn()));
        v.push(("ln2.bias".into(), self.ln2.bias.view().into_dyn()));
        for c in &self.convs {
            v.push((format!("conv{}.w", c.kernel()), c.w.view().into_dyn()));
            v.push((format!("conv{}.b", c.kernel()), c.b.view().into_dyn()));
        }
        v.push(("w_m".into(), self.w_m.view().into_dyn()));
        lin("merge", &self.merge, &mut v);
        v
    }

    /// Mutable counterpart of [`tensors`](Self::tensors), same order.
    pub fn tensors_mut(&mut self) -> Vec<(String, ArrayViewMutD<'_, f64>)> {
        let mut v: Vec<(String, ArrayViewMutD<'_, f64>)> = Vec::new();
        fn lin<'a>(name: &str, l: &'a mut Linear, v: &mut Vec<(String, ArrayViewMutD<'a, f64>)>) {
            v.push((format!("{name}.w"), l.w.view_mut().into_dyn()));
            v.push((format!("{name}.b"), l.b.view_mut().into_dyn()));
        }
        lin("attn.query", &mut self.attn.query, &mut v);
        lin("attn.key", &mut self.attn.key, &mut v);
        lin("attn.value", &mut self.attn.value, &mut v);
        lin("attn.output", &mut self.attn.output, &mut v);
        v.push(("ln1.gain".into(), self.ln1.gain.view_mut().into_dyn()));
        v.push(("ln1.bias".into(), self.ln1.bias.view_mut().into_dyn()));
        lin("ffn.up", &mut self.ffn.up, &mut v);
        lin("ffn.down", &mut self.ffn.down, &mut v);
        v.push(("ln2.gain".into(), self.ln2.gain.view_mut().into_dyn()));
        v.push(("ln2.bias".into(), self.ln2.bias.view_mut().into_dyn()));
        for c in &mut self.convs {
            let k = c.kernel();
            v.push((format!("conv{k}.w"), c.w.view_mut().into_dyn()));
            v.push((format!("conv{k}.b"), c.b.view_mut().into_dyn()));
        }
        v.push(("w_m".into(), self.w_m.view_mut().into_dyn()));
        lin("merge", &mut self.merge, &mut v);
        v
    }

    /// `self -= lr * grad`.
    pub fn descend(&mut self, grad: &NmmParams, lr: f64) {
        for ((_, mut p), (_, g)) in self.tensors_mut().into_iter().zip(grad.tensors()) {
            p.scaled_add(-lr, &g);
        }
    }
}

struct CleanCache {
    attn: Option<(MhsaCache, LnCache)>,
    mid: Array2<f64>,
    ffn: FfnCache,
    ln2: LnCache,
}

struct NoisyCache {
    concat: Array3<f64>,
}

/// Outputs of one forward pass, plus what the backward pass needs.
pub struct Forward {
    pub f_clean: Array3<f64>,
    pub f_noisy: Array3<f64>,
    pub f_merged: Array3<f64>,
    input: Array3<f64>,
    clean: Option<CleanCache>,
    noisy: Option<NoisyCache>,
    merged_in: Array2<f64>,
}

fn clean_path(params: &NmmParams, x: &Array3<f64>, cfg: &NmmConfig) -> (Array3<f64>, CleanCache) {
    let (b, l, _) = x.dim();
    let (mid, attn) = if cfg.ablation.no_attention {
        (flat(x).to_owned(), None)
    } else {
        let (a, mc) = params.attn.forward(x, cfg.heads);
        let h1 = &flat(x) + &flat(&a);
        let (m, lc) = params.ln1.forward(&h1.view());
        (m, Some((mc, lc)))
    };
    let (f, ffn) = params.ffn.forward(&mid.view());
    let h2 = &mid + &f;
    let (c, ln2) = params.ln2.forward(&h2.view());
    (unflat(c, b, l), CleanCache { attn, mid, ffn, ln2 })
}

fn clean_backward(params: &NmmParams, cache: &CleanCache, dc: &Array3<f64>, grad: &mut NmmParams) {
    let dh2 = params.ln2.backward(&cache.ln2, &flat(dc).to_owned(), &mut grad.ln2);
    let mut dmid = params.ffn.backward(&cache.mid.view(), &cache.ffn, &dh2, &mut grad.ffn);
    dmid += &dh2;
    if let Some((mc, lc)) = &cache.attn {
        let dh1 = params.ln1.backward(lc, &dmid, &mut grad.ln1);
        params.attn.backward(mc, &dh1.view(), &mut grad.attn);
    }
}

fn noisy_path(params: &NmmParams, x: &Array3<f64>) -> (Array3<f64>, NoisyCache) {
    let (b, l, _) = x.dim();
    let outs: Vec<Array3<f64>> = params.convs.iter().map(|c| c.forward(&x.view())).collect();
    let views: Vec<_> = outs.iter().map(|o| o.view()).collect();
    let concat = concatenate(Axis(2), &views).expect("conv outputs share B x L");
    let concat = concat.as_standard_layout().into_owned();
    let y = flat(&concat).dot(&params.w_m.t());
    (unflat(y, b, l), NoisyCache { concat })
}

fn noisy_backward(params: &NmmParams, x: &Array3<f64>, cache: &NoisyCache, dn: &Array3<f64>, grad: &mut NmmParams) {
    let (b, l, d) = dn.dim();
    let dnf = flat(dn);
    grad.w_m += &dnf.t().dot(&flat(&cache.concat));
    let dcat = unflat(dnf.dot(&params.w_m), b, l);
    for (i, (conv, g)) in params.convs.iter().zip(grad.convs.iter_mut()).enumerate() {
        let part = dcat.slice(s![.., .., i * d..(i + 1) * d]);
        conv.backward(&x.view(), &part, g);
    }
}

/// Runs the enabled paths and the merge projection.
pub fn forward(params: &NmmParams, f_i: &Array3<f64>, cfg: &NmmConfig) -> Result<Forward> {
    cfg.validate()?;
    cfg.check_input(f_i)?;
    if params.convs.len() != cfg.kernels().len() {
        return Err(Error::invalid("parameters were built for a different kernel set"));
    }
    let ab = cfg.ablation;
    let (f_noisy, noisy) = if ab.clean_only {
        (Array3::zeros(f_i.raw_dim()), None)
    } else {
        let (n, c) = noisy_path(params, f_i);
        (n, Some(c))
    };
    let (f_clean, clean) = if ab.noisy_only {
        (f_i - &f_noisy, None)
    } else {
        let (c, cache) = clean_path(params, f_i, cfg);
        (c, Some(cache))
    };
    let merged_in = concatenate(Axis(1), &[flat(&f_clean), flat(&f_noisy)])
        .expect("paths share M x D")
        .as_standard_layout()
        .into_owned();
    let f_merged = unflat(params.merge.forward(&merged_in.view()), cfg.batch, cfg.length);
    Ok(Forward {
        f_clean,
        f_noisy,
        f_merged,
        input: f_i.clone(),
        clean,
        noisy,
        merged_in,
    })
}

impl Forward {
    /// ReLU activation pattern of the clean path; empty when it is disabled.
    pub fn relu_pattern(&self) -> Vec<bool> {
        self.clean
            .as_ref()
            .map(|c| c.ffn.active().collect())
            .unwrap_or_default()
    }
}

/// Parameter gradients given upstream gradients on the three outputs.
pub fn backward(
    params: &NmmParams,
    fwd: &Forward,
    d_clean: &Array3<f64>,
    d_noisy: &Array3<f64>,
    d_merged: &Array3<f64>,
) -> NmmParams {
    let mut grad = params.zeros_like();
    let (b, l, d) = d_clean.dim();
    let dm = flat(d_merged).to_owned();
    let dcat = params.merge.backward(&fwd.merged_in.view(), &dm, &mut grad.merge);
    let mut dc = d_clean + &unflat(dcat.slice(s![.., ..d]).to_owned(), b, l);
    let mut dn = d_noisy + &unflat(dcat.slice(s![.., d..]).to_owned(), b, l);
    match &fwd.clean {
        Some(cache) => clean_backward(params, cache, &dc, &mut grad),
        None => {
            // f_clean = f_i - f_noisy
            dn -= &dc;
            dc.fill(0.0);
        }
    }
    if let Some(cache) = &fwd.noisy {
        noisy_backward(params, &fwd.input, cache, &dn, &mut grad);
    }
    grad
}

/// Clean path alone.
pub fn clean_only_path(params: &NmmParams, f_i: &Array3<f64>, cfg: &NmmConfig) -> Array3<f64> {
    clean_path(params, f_i, cfg).0
}

/// Noisy path alone.
pub fn noisy_only_path(params: &NmmParams, f_i: &Array3<f64>) -> Array3<f64> {
    noisy_path(params, f_i).0
}
