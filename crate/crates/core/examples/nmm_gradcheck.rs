//! Finite-difference check of every hand-written gradient in the module.

use pcrobust::nmm::{grad_check, Ablation, NmmConfig};

fn main() -> pcrobust::Result<()> {
    for ablation in ["none", "noisy-only", "no-attention", "single-scale"] {
        let cfg = NmmConfig {
            batch: 2,
            length: 4,
            dim: 16,
            heads: 8,
            temperature: 1.0,
            ablation: Ablation::parse(ablation)?,
        };
        let report = grad_check(&cfg, 0)?;
        println!(
            "{ablation:<13} max rel err {:.2e} over {} entries ({} skipped at kinks): {}",
            report.max_rel_err(),
            report.compared(),
            report.skipped(),
            if report.passed() { "ok" } else { "FAILED" }
        );
    }
    let report = grad_check(
        &NmmConfig {
            batch: 2,
            length: 4,
            dim: 16,
            ..Default::default()
        },
        1,
    )?;
    print!("{}", report.to_text());
    Ok(())
}
