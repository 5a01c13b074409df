//! Trains the module on toy features and compares the ablations by how well
//! the clean path separates from the noise path.

use pcrobust::nmm::{train_toy, Ablation, NmmConfig, TrainConfig};

fn main() -> pcrobust::Result<()> {
    for name in ["none", "clean-only", "noisy-only", "no-attention", "single-scale"] {
        let cfg = TrainConfig {
            nmm: NmmConfig {
                ablation: Ablation::parse(name)?,
                ..Default::default()
            },
            steps: 150,
            ..Default::default()
        };
        let history = train_toy(&cfg)?;
        let first = &history.records[0].eval;
        let last = &history.final_eval;
        println!(
            "{name:<13} l_total {:.4} -> {:.4}, cos(clean, gt) {:.3}, cos(clean, noisy) {:.3}, separation {:.3}, residual {:.1e}",
            first.losses.l_total,
            last.losses.l_total,
            last.sim_clean_gt,
            last.sim_clean_noisy,
            history.separation(),
            history.max_residual(),
        );
    }
    Ok(())
}
