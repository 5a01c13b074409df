//! Point clouds, exact nearest-neighbor search, farthest point sampling,
//! rigid transforms and PLY/XYZ round trips.

use pcrobust::geom::io::{read_cloud, write_cloud};
use pcrobust::geom::{
    farthest_point_sample, mean_nn_distance, rotate, sample_primitive, scale, Metric, NnIndex, Point3, PrimitiveKind,
    RngStream,
};

fn main() -> pcrobust::Result<()> {
    let mut rng = RngStream::from_parts(7, "demo", "geometry");
    let sphere = sample_primitive(PrimitiveKind::Sphere, 4096, &mut rng)?;
    let aabb = sphere.aabb()?;
    println!(
        "sphere: {} points, extents {:?}",
        sphere.len(),
        aabb.extents().to_array()
    );

    let index = NnIndex::new(sphere.points())?;
    let q = Point3::new(0.6, 0.0, 0.0);
    let nn = index.nearest(q);
    println!("nearest to {:?}: #{} at {:.4}", q.to_array(), nn.index, nn.dist);
    let l1 = NnIndex::with_metric(sphere.points(), Metric::L1)?.nearest(q);
    println!("nearest under L1: #{} at {:.4}", l1.index, l1.dist);
    println!("mean NN spacing: {:.5}", mean_nn_distance(sphere.points())?);

    let fps = farthest_point_sample(&sphere, 2048, &mut rng)?;
    println!(
        "FPS kept {} points, spacing {:.5}",
        fps.len(),
        mean_nn_distance(fps.points())?
    );

    let turned = scale(&rotate(&fps, 10.0, 0.0, 5.0)?, 0.5)?;
    println!("rotated and halved: extents {:?}", turned.aabb()?.extents().to_array());

    let dir = std::env::temp_dir().join("pcrobust-geometry-basics");
    for name in ["cloud.ply", "cloud.xyz"] {
        let path = dir.join(name);
        write_cloud(&path, &turned)?;
        let back = read_cloud(&path)?;
        let err = back
            .points()
            .iter()
            .zip(turned.points())
            .map(|(a, b)| a.dist(*b))
            .fold(0.0, f64::max);
        println!("{name}: {} points back, max round-trip error {err:.2e}", back.len());
    }
    std::fs::remove_dir_all(&dir).ok();
    Ok(())
}
