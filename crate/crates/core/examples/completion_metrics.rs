//! Chamfer distance, F-score and fidelity on a completion-like pair, and a
//! per-category report.

use pcrobust::corrupt::CorruptionKind;
use pcrobust::geom::{Point3, PointCloud, RngStream};
use pcrobust::metrics::{
    aggregate, chamfer, chamfer_with, evaluate, fidelity, fscore_detail, Category, Norm, PerCloud, Selection,
};
use pcrobust::synth::toy_object;
use rand::Rng;

fn main() -> pcrobust::Result<()> {
    let obj = toy_object("car_07", 5, 2048)?;
    let mut rng = RngStream::from_parts(5, "car_07", "prediction");
    // A fake prediction: the complete shape with small noise.
    let pred = obj.complete.map_points(|p| {
        p + Point3::new(
            rng.random_range(-0.01..0.01),
            rng.random_range(-0.01..0.01),
            rng.random_range(-0.01..0.01),
        )
    });

    println!("CD-L1        {:.6}", chamfer(&pred, &obj.complete, Norm::L1)?);
    println!("CD-L2        {:.6}", chamfer(&pred, &obj.complete, Norm::L2)?);
    println!(
        "CD-L1 (L1 matching) {:.6}",
        chamfer_with(&pred, &obj.complete, Norm::L1, Selection::Matching)?
    );
    for delta in [0.005, 0.01, 0.02] {
        let f = fscore_detail(&pred, &obj.complete, delta)?;
        println!("F@{delta}: P {:.3} R {:.3} F {:.3}", f.precision, f.recall, f.fscore);
    }
    println!("fidelity     {:.6}", fidelity(&obj.partial, &pred)?);

    let single = PointCloud::from_arrays(&[[0.0, 0.0, 0.0]])?;
    let moved = PointCloud::from_arrays(&[[1.0, 0.0, 0.0]])?;
    println!(
        "unit offset: CD-L1 {} (scaled by 1000 in reports)",
        chamfer(&single, &moved, Norm::L1)?
    );

    let mut clouds = Vec::new();
    for (i, category) in [Category::Clean, Category::Corrupted(CorruptionKind::Eoi)]
        .into_iter()
        .enumerate()
    {
        for j in 0..3 {
            let shift = 0.002 * (i + j) as f64;
            let p = pred.map_points(|q| q + Point3::new(shift, 0.0, 0.0));
            clouds.push(PerCloud {
                run: "demo".into(),
                category,
                value: evaluate(&p, &obj.complete, Some(&obj.partial), 0.01)?,
            });
        }
    }
    let report = aggregate(&clouds)?;
    print!("{}", report.to_table());
    print!("{}", report.to_csv());
    Ok(())
}
