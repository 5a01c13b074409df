//! Dual-path feature denoising module.
//!
//! Encoder features `f_i` (`B x L x D`) go through two branches:
//!
//! - clean path: `f_mhsa = LN(f_i + MHSA(f_i))`, `f_clean = LN(f_mhsa + FFN(f_mhsa))`
//! - noisy path: same-padded 1D convolutions of widths 1, 3, 5 along `L`,
//!   concatenated and merged back to `D` by `W_m`
//!
//! and are merged by a linear projection of `[f_clean | f_noisy]`. Training
//! pulls normalized `f_clean` toward clean ground-truth features (positive
//! loss) and pushes it away from all off-diagonal `f_noisy` vectors through
//! a temperature-scaled log-sum-exp (negative loss).
//!
//! Everything is plain `f64` with hand-written backward passes, verified
//! against central finite differences by [`grad_check`].

mod attention;
mod layers;
mod loss;
mod model;
mod train;

pub use attention::{Mhsa, MhsaCache};
pub use layers::{flat, layer_norm, unflat, Conv1d, FeedForward, LayerNorm, Linear, LN_EPS};
pub use loss::{
    mean_cosine, negative_loss, negative_loss_grad, nmm_loss, normalize, normalize_backward, positive_loss,
    positive_loss_grad, total_loss, LossBreakdown, NORM_FLOOR,
};
pub use model::{backward, clean_only_path, forward, noisy_only_path, Ablation, Forward, NmmConfig, NmmParams};
pub use train::{
    evaluate, grad_check, grad_check_model, relative_error, toy_setup, train_toy, Evaluation, GradCheckEntry,
    GradCheckReport, Gradients, StepRecord, ToyData, ToyModel, TrainConfig, TrainHistory, FD_STEP, GRAD_TOLERANCE,
    HISTORY_HEADER, REL_ERR_FLOOR,
};

/// Feature tensor of shape `B x L x D`.
pub type FeatureTensor = ndarray::Array3<f64>;
