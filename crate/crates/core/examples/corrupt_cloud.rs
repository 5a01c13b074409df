//! Applies each corruption kind to one object and reports what changed.

use pcrobust::corrupt::{apply, sample_params_with, CorruptionKind, Recipe};
use pcrobust::geom::{Label, RngStream, StreamKey};
use pcrobust::synth::toy_object;

fn main() -> pcrobust::Result<()> {
    let obj = toy_object("chair_01", 3, 2048)?;
    println!("object: {} with {} points", obj.kind.name(), obj.complete.len());

    let mut recipe = Recipe::default();
    recipe.knobs.floor_reference = Some((obj.complete.aabb()?.min.y, obj.complete.aabb()?.max.y));
    for kind in CorruptionKind::ALL {
        let mut rng = RngStream::new(StreamKey::new(3, "chair_01", kind.tag()));
        let spec = sample_params_with(kind, &recipe, &mut rng)?;
        let out = apply(&obj.complete, &spec, &recipe.knobs, &mut rng)?;
        println!(
            "{:<6} {:>5} points (object {:>4}, added {:>4}, removed {:>4}, displaced {:>4})  {}",
            kind.tag(),
            out.cloud.len(),
            out.cloud.count_label(Label::Object),
            out.stats.added,
            out.stats.removed,
            out.stats.displaced,
            spec.params.to_kv(),
        );
    }

    // Pinned parameters: a zero rotation leaves the cloud unchanged.
    let pinned = Recipe::parse("tr.theta = 0, 0, 0")?;
    let mut rng = RngStream::from_parts(3, "chair_01", CorruptionKind::Tr.tag());
    let spec = sample_params_with(CorruptionKind::Tr, &pinned, &mut rng)?;
    let out = apply(&obj.complete, &spec, &pinned.knobs, &mut rng)?;
    println!("pinned T_R identity: {}", out.cloud.points() == obj.complete.points());
    Ok(())
}
