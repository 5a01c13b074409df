//! Synthetic end-to-end objective, gradient verification and a toy trainer.
//!
//! The toy setup stands in for a completion backbone: `f_cpgt` lies in a
//! random low-rank subspace, `f_i` adds structured noise from a second
//! subspace, and a linear decoder maps normalized `f_merged` to 3D points that are
//! scored with Chamfer-L1 against a fixed projection of the normalized
//! `f_gt`.

use std::fmt::Write as _;

use ndarray::{Array2, Array3, ArrayViewMutD};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::geom::RngStream;

use super::layers::{flat, unflat, Linear};
use super::loss::{mean_cosine, negative_loss_grad, normalize, normalize_backward, positive_loss_grad, LossBreakdown};
use super::model::{backward, forward, NmmConfig, NmmParams};

/// Rank of the clean and noise feature subspaces.
const RANK: usize = 4;
/// Scale of the structured noise relative to the clean signal.
const NOISE_SCALE: f64 = 0.6;
/// Isotropic noise on top of the structured part.
const ISO_NOISE: f64 = 0.05;
/// Extra detail present in the complete features but not the partial ones.
const GT_DETAIL: f64 = 0.1;

/// Fixed inputs of the toy objective.
#[derive(Debug, Clone, PartialEq)]
pub struct ToyData {
    pub f_i: Array3<f64>,
    pub f_cpgt: Array3<f64>,
    pub f_gt: Array3<f64>,
    /// Maps normalized `f_gt` vectors to target points, `3 x D`.
    pub projection: Array2<f64>,
}

fn gaussian<R: Rng + ?Sized>(shape: (usize, usize), rng: &mut R) -> Array2<f64> {
    Array2::from_shape_simple_fn(shape, || rng.sample(StandardNormal))
}

impl ToyData {
    pub fn generate<R: Rng + ?Sized>(cfg: &NmmConfig, rng: &mut R) -> Self {
        let (b, l, d) = (cfg.batch, cfg.length, cfg.dim);
        let m = b * l;
        let r = RANK.min(d);
        let scale = 1.0 / (r as f64).sqrt();
        let clean_basis = gaussian((r, d), rng);
        let noise_basis = gaussian((r, d), rng);
        let cpgt = gaussian((m, r), rng).dot(&clean_basis) * scale;
        let noise = gaussian((m, r), rng).dot(&noise_basis) * (scale * NOISE_SCALE) + gaussian((m, d), rng) * ISO_NOISE;
        let f_gt = &cpgt + &(gaussian((m, d), rng) * GT_DETAIL);
        let f_i = &cpgt + &noise;
        let projection = gaussian((3, d), rng);
        Self {
            f_i: unflat(f_i, b, l),
            f_cpgt: unflat(cpgt, b, l),
            f_gt: unflat(f_gt, b, l),
            projection,
        }
    }

    /// Target points per token, `M x 3`.
    pub fn targets(&self) -> Array2<f64> {
        flat(&normalize(&self.f_gt)).dot(&self.projection.t())
    }
}

/// Module parameters plus the linear toy decoder.
#[derive(Debug, Clone, PartialEq)]
pub struct ToyModel {
    pub nmm: NmmParams,
    /// `D -> 3` per token.
    pub decoder: Linear,
}

impl ToyModel {
    pub fn init<R: Rng + ?Sized>(cfg: &NmmConfig, rng: &mut R) -> Self {
        Self {
            nmm: NmmParams::init(cfg, rng),
            decoder: Linear::xavier(3, cfg.dim, rng),
        }
    }

    pub fn tensors_mut(&mut self) -> Vec<(String, ArrayViewMutD<'_, f64>)> {
        let mut v = self.nmm.tensors_mut();
        v.push(("decoder.w".into(), self.decoder.w.view_mut().into_dyn()));
        v.push(("decoder.b".into(), self.decoder.b.view_mut().into_dyn()));
        v
    }
}

#[inline]
fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

fn nearest(p: ndarray::ArrayView1<f64>, set: &ndarray::ArrayView2<f64>) -> usize {
    let mut best = (f64::INFINITY, 0);
    for (j, q) in set.rows().into_iter().enumerate() {
        let d: f64 = p.iter().zip(q.iter()).map(|(a, b)| (a - b) * (a - b)).sum();
        if d < best.0 {
            best = (d, j);
        }
    }
    best.1
}

/// Mean over batches of Chamfer-L1 between decoded and target point sets,
/// with its gradient with respect to the decoded points. Also pushes the
/// nearest-neighbor choices and difference signs onto `pattern`.
fn completion_loss(
    pred: &Array2<f64>,
    target: &Array2<f64>,
    batch: usize,
    len: usize,
    pattern: &mut Vec<i64>,
) -> (f64, Array2<f64>) {
    let mut grad = Array2::zeros(pred.raw_dim());
    let mut total = 0.0;
    let w = 1.0 / (len as f64 * batch as f64);
    for b in 0..batch {
        let rows = b * len..(b + 1) * len;
        let p = pred.slice(ndarray::s![rows.clone(), ..]);
        let t = target.slice(ndarray::s![rows.clone(), ..]);
        let mut sum = 0.0;
        for i in 0..len {
            let j = nearest(p.row(i), &t);
            pattern.push(j as i64);
            for a in 0..3 {
                let diff = p[[i, a]] - t[[j, a]];
                pattern.push(sign(diff) as i64);
                sum += diff.abs();
                grad[[b * len + i, a]] += sign(diff) * w;
            }
        }
        for j in 0..len {
            let i = nearest(t.row(j), &p);
            pattern.push(i as i64);
            for a in 0..3 {
                let diff = p[[i, a]] - t[[j, a]];
                pattern.push(sign(diff) as i64);
                sum += diff.abs();
                grad[[b * len + i, a]] += sign(diff) * w;
            }
        }
        total += sum / len as f64;
    }
    (total / batch as f64, grad)
}

/// Losses and similarities of one evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation {
    pub losses: LossBreakdown,
    /// Mean cosine similarity of corresponding `f_clean` and `f_cpgt` vectors.
    pub sim_clean_gt: f64,
    /// Mean cosine similarity of corresponding `f_clean` and `f_noisy` vectors.
    pub sim_clean_noisy: f64,
    /// `max |f_i - (f_clean + f_noisy)|`.
    pub decomposition_residual: f64,
}

/// Gradients of both objectives.
pub struct Gradients {
    /// Of `l_nmm`.
    pub nmm: ToyModel,
    /// Of `l_total`.
    pub total: ToyModel,
}

/// Which branch every non-smooth operation took: ReLU activity for
/// `l_nmm`, plus nearest-neighbor choices and `|.|` signs for `l_total`.
/// Finite differences are only meaningful when these stay fixed.
#[derive(Debug, Clone, PartialEq, Eq)]
struct Pattern {
    nmm: Vec<bool>,
    completion: Vec<i64>,
}

/// Evaluates the toy objective, optionally with gradients.
pub fn evaluate(
    model: &ToyModel,
    data: &ToyData,
    cfg: &NmmConfig,
    with_grad: bool,
) -> Result<(Evaluation, Option<Gradients>)> {
    evaluate_with_pattern(model, data, cfg, with_grad).map(|(e, g, _)| (e, g))
}

fn evaluate_with_pattern(
    model: &ToyModel,
    data: &ToyData,
    cfg: &NmmConfig,
    with_grad: bool,
) -> Result<(Evaluation, Option<Gradients>, Pattern)> {
    let fwd = forward(&model.nmm, &data.f_i, cfg)?;
    let (b, l) = (cfg.batch, cfg.length);
    let cn = normalize(&fwd.f_clean);
    let pn = normalize(&data.f_cpgt);
    let nn = normalize(&fwd.f_noisy);
    let (l_pos, dc_pos) = positive_loss_grad(&cn, &pn)?;
    let (l_neg, dc_neg, dn_neg) = negative_loss_grad(&cn, &nn, cfg.temperature)?;

    let merged_n = normalize(&fwd.f_merged);
    let merged = flat(&merged_n).to_owned();
    let pred = model.decoder.forward(&merged.view());
    let mut completion = Vec::new();
    let (l_completion, dpred) = completion_loss(&pred, &data.targets(), b, l, &mut completion);
    let pattern = Pattern {
        nmm: fwd.relu_pattern(),
        completion,
    };

    let losses = LossBreakdown::new(l_pos, l_neg, l_completion);
    let residual = (&data.f_i - &(&fwd.f_clean + &fwd.f_noisy))
        .iter()
        .fold(0.0f64, |a, v| a.max(v.abs()));
    let eval = Evaluation {
        losses,
        sim_clean_gt: mean_cosine(&fwd.f_clean, &data.f_cpgt)?,
        sim_clean_noisy: mean_cosine(&fwd.f_clean, &fwd.f_noisy)?,
        decomposition_residual: residual,
    };
    if !with_grad {
        return Ok((eval, None, pattern));
    }

    let d_clean = normalize_backward(&fwd.f_clean, &cn, &(&dc_pos + &dc_neg));
    let d_noisy = normalize_backward(&fwd.f_noisy, &nn, &dn_neg);
    let zero = Array3::zeros(fwd.f_merged.raw_dim());
    let nmm_only = ToyModel {
        nmm: backward(&model.nmm, &fwd, &d_clean, &d_noisy, &zero),
        decoder: Linear::zeros(3, cfg.dim),
    };
    let mut dec = Linear::zeros(3, cfg.dim);
    let d_merged_n = unflat(model.decoder.backward(&merged.view(), &dpred, &mut dec), b, l);
    let d_merged = normalize_backward(&fwd.f_merged, &merged_n, &d_merged_n);
    let total = ToyModel {
        nmm: backward(&model.nmm, &fwd, &d_clean, &d_noisy, &d_merged),
        decoder: dec,
    };
    Ok((eval, Some(Gradients { nmm: nmm_only, total }), pattern))
}

/// Worst gradient mismatch for one tensor and objective.
#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckEntry {
    /// `"l_nmm"` or `"l_total"`.
    pub objective: &'static str,
    pub tensor: String,
    pub len: usize,
    /// Entries whose difference stencil crossed a non-smooth point and were
    /// not compared.
    pub skipped: usize,
    pub max_abs_err: f64,
    pub max_rel_err: f64,
}

/// Per-tensor comparison of analytic and finite-difference gradients.
#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub entries: Vec<GradCheckEntry>,
}

/// Central-difference step.
pub const FD_STEP: f64 = 1e-5;
/// Gradient magnitudes below this are compared in absolute terms; it sits
/// above the roundoff level of a central difference at `FD_STEP`.
pub const REL_ERR_FLOOR: f64 = 1e-5;
/// Pass threshold on the relative error.
pub const GRAD_TOLERANCE: f64 = 1e-4;

/// `|a - b| / max(|a|, |b|, floor)`.
pub fn relative_error(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(REL_ERR_FLOOR)
}

impl GradCheckReport {
    pub fn max_rel_err(&self) -> f64 {
        self.entries.iter().fold(0.0, |a, e| a.max(e.max_rel_err))
    }

    pub fn skipped(&self) -> usize {
        self.entries.iter().map(|e| e.skipped).sum()
    }

    pub fn compared(&self) -> usize {
        self.entries.iter().map(|e| e.len - e.skipped).sum()
    }

    pub fn passed(&self) -> bool {
        self.entries.iter().all(|e| e.max_rel_err < GRAD_TOLERANCE)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let w = self.entries.iter().map(|e| e.tensor.len()).max().unwrap_or(6);
        let _ = writeln!(
            s,
            "{:<8} {:<w$} {:>6} {:>7} {:>12} {:>12}",
            "loss", "tensor", "n", "skipped", "max_abs", "max_rel"
        );
        for e in &self.entries {
            let _ = writeln!(
                s,
                "{:<8} {:<w$} {:>6} {:>7} {:>12.3e} {:>12.3e}",
                e.objective, e.tensor, e.len, e.skipped, e.max_abs_err, e.max_rel_err
            );
        }
        s
    }
}

#[derive(Clone, Copy, Default)]
struct Tally {
    skipped: usize,
    abs: f64,
    rel: f64,
}

/// Checks every parameter tensor of `model` against central differences
/// of both `l_nmm` and `l_total`.
///
/// An entry is skipped for an objective when perturbing it by `FD_STEP`
/// flips a ReLU, a nearest-neighbor choice or an absolute-value sign that
/// the objective depends on: the difference quotient then straddles a
/// kink and says nothing about the derivative.
pub fn grad_check_model(model: &ToyModel, data: &ToyData, cfg: &NmmConfig) -> Result<GradCheckReport> {
    let (_, grads, base) = evaluate_with_pattern(model, data, cfg, true)?;
    let mut grads = grads.expect("requested gradients");
    let mut probe = model.clone();
    let analytic: Vec<(String, Vec<f64>, Vec<f64>)> = {
        let nmm = grads.nmm.tensors_mut();
        let tot = grads.total.tensors_mut();
        nmm.into_iter()
            .zip(tot)
            .map(|((name, a), (_, b))| (name, a.iter().copied().collect(), b.iter().copied().collect()))
            .collect()
    };
    let mut entries = Vec::new();
    for (t, (name, g_nmm, g_total)) in analytic.into_iter().enumerate() {
        let len = g_nmm.len();
        let mut tally = [Tally::default(); 2];
        for k in 0..len {
            let original = get_entry(&mut probe, t, k);
            set_entry(&mut probe, t, k, original + FD_STEP);
            let (plus, _, p_plus) = evaluate_with_pattern(&probe, data, cfg, false)?;
            set_entry(&mut probe, t, k, original - FD_STEP);
            let (minus, _, p_minus) = evaluate_with_pattern(&probe, data, cfg, false)?;
            set_entry(&mut probe, t, k, original);

            let nmm_smooth = p_plus.nmm == base.nmm && p_minus.nmm == base.nmm;
            let total_smooth =
                nmm_smooth && p_plus.completion == base.completion && p_minus.completion == base.completion;
            let checks = [
                (nmm_smooth, g_nmm[k], plus.losses.l_nmm, minus.losses.l_nmm),
                (total_smooth, g_total[k], plus.losses.l_total, minus.losses.l_total),
            ];
            for (tally, (smooth, an, lp, lm)) in tally.iter_mut().zip(checks) {
                if !smooth {
                    tally.skipped += 1;
                    continue;
                }
                let fd = (lp - lm) / (2.0 * FD_STEP);
                tally.abs = tally.abs.max((an - fd).abs());
                tally.rel = tally.rel.max(relative_error(an, fd));
            }
        }
        for (tally, objective) in tally.iter().zip(["l_nmm", "l_total"]) {
            entries.push(GradCheckEntry {
                objective,
                tensor: name.clone(),
                len,
                skipped: tally.skipped,
                max_abs_err: tally.abs,
                max_rel_err: tally.rel,
            });
        }
    }
    entries.sort_by(|a, b| a.objective.cmp(b.objective));
    Ok(GradCheckReport { entries })
}

fn get_entry(model: &mut ToyModel, tensor: usize, k: usize) -> f64 {
    let mut ts = model.tensors_mut();
    *ts[tensor].1.iter_mut().nth(k).expect("index in range")
}

fn set_entry(model: &mut ToyModel, tensor: usize, k: usize, value: f64) {
    let mut ts = model.tensors_mut();
    *ts[tensor].1.iter_mut().nth(k).expect("index in range") = value;
}

/// Seeded gradient check on a fresh model and toy data.
pub fn grad_check(cfg: &NmmConfig, seed: u64) -> Result<GradCheckReport> {
    cfg.validate()?;
    let (model, data) = toy_setup(cfg, seed);
    grad_check_model(&model, &data, cfg)
}

/// Model and data for a given seed.
pub fn toy_setup(cfg: &NmmConfig, seed: u64) -> (ToyModel, ToyData) {
    let root = RngStream::from_parts(seed, "nmm-toy", "root");
    let data = ToyData::generate(cfg, &mut root.child("data"));
    let model = ToyModel::init(cfg, &mut root.child("init"));
    (model, data)
}

/// Settings of [`train_toy`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub nmm: NmmConfig,
    pub steps: usize,
    pub lr: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            nmm: NmmConfig::default(),
            steps: 300,
            lr: 1e-2,
            seed: 0,
        }
    }
}

/// One training step, evaluated before the update.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepRecord {
    pub step: usize,
    pub eval: Evaluation,
}

/// Per-step losses plus the state after the final update.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainHistory {
    pub records: Vec<StepRecord>,
    pub final_eval: Evaluation,
}

pub const HISTORY_HEADER: &str = "step,l_pos,l_neg,l_nmm,l_completion,l_total,sim_clean_gt,sim_clean_noisy,residual";

impl TrainHistory {
    /// `sim(f_clean, f_cpgt) - sim(f_clean, f_noisy)` after training.
    pub fn separation(&self) -> f64 {
        self.final_eval.sim_clean_gt - self.final_eval.sim_clean_noisy
    }

    /// Largest decomposition residual seen at any step.
    pub fn max_residual(&self) -> f64 {
        self.records
            .iter()
            .map(|r| r.eval.decomposition_residual)
            .fold(self.final_eval.decomposition_residual, f64::max)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        s.push_str(HISTORY_HEADER);
        s.push('\n');
        for r in &self.records {
            let (e, l) = (&r.eval, &r.eval.losses);
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{},{},{}",
                r.step,
                l.l_pos,
                l.l_neg,
                l.l_nmm,
                l.l_completion,
                l.l_total,
                e.sim_clean_gt,
                e.sim_clean_noisy,
                e.decomposition_residual
            );
        }
        s
    }
}

/// Plain gradient descent on `l_total` over fixed toy data.
pub fn train_toy(cfg: &TrainConfig) -> Result<TrainHistory> {
    cfg.nmm.validate()?;
    if cfg.steps == 0 {
        return Err(Error::invalid("steps must be at least 1"));
    }
    if !cfg.lr.is_finite() || cfg.lr <= 0.0 {
        return Err(Error::invalid(format!(
            "learning rate must be positive, got {}",
            cfg.lr
        )));
    }
    let (mut model, data) = toy_setup(&cfg.nmm, cfg.seed);
    let mut records = Vec::with_capacity(cfg.steps);
    for step in 0..cfg.steps {
        let (eval, grads) = evaluate(&model, &data, &cfg.nmm, true)?;
        if !eval.losses.is_finite() {
            return Err(Error::Diverged { step });
        }
        records.push(StepRecord { step, eval });
        let g = grads.expect("requested gradients").total;
        model.nmm.descend(&g.nmm, cfg.lr);
        model.decoder.w.scaled_add(-cfg.lr, &g.decoder.w);
        model.decoder.b.scaled_add(-cfg.lr, &g.decoder.b);
    }
    let (final_eval, _) = evaluate(&model, &data, &cfg.nmm, false)?;
    if !final_eval.losses.is_finite() {
        return Err(Error::Diverged { step: cfg.steps });
    }
    Ok(TrainHistory { records, final_eval })
}
