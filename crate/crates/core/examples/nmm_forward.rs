//! One forward pass of the noise-aware feature module and its losses,
//! including how the negative loss responds to the temperature.

use pcrobust::geom::RngStream;
use pcrobust::nmm::{forward, mean_cosine, negative_loss, positive_loss, NmmConfig, NmmParams, ToyData};

fn main() -> pcrobust::Result<()> {
    let cfg = NmmConfig::default();
    cfg.validate()?;
    let mut rng = RngStream::from_parts(0, "nmm-example", "forward");
    let data = ToyData::generate(&cfg, &mut rng);
    let params = NmmParams::init(&cfg, &mut rng);
    let fwd = forward(&params, &data.f_i, &cfg)?;
    println!(
        "shapes: clean {:?}, noisy {:?}, merged {:?}",
        fwd.f_clean.dim(),
        fwd.f_noisy.dim(),
        fwd.f_merged.dim()
    );

    let l_pos = positive_loss(&fwd.f_clean, &data.f_cpgt)?;
    println!("l_pos = {l_pos:.4}");
    println!("cos(clean, cpgt) = {:.4}", mean_cosine(&fwd.f_clean, &data.f_cpgt)?);
    println!("cos(clean, noisy) = {:.4}", mean_cosine(&fwd.f_clean, &fwd.f_noisy)?);
    for t in [1e-7, 0.1, 1.0, 10.0] {
        println!(
            "l_neg(t = {t:e}) = {:.4}",
            negative_loss(&fwd.f_clean, &fwd.f_noisy, t)?
        );
    }
    Ok(())
}
