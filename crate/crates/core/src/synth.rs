//! Small synthetic objects for demos and tests: a complete cloud sampled
//! from a solid basic shape and a single-view partial scan of it.

use std::path::Path;

use rand::Rng;

use crate::corrupt::Split;
use crate::error::{Error, Result};
use crate::geom::io::write_cloud;
use crate::geom::{sample_primitive, unit_vector, PointCloud, PrimitiveKind, RngStream};

/// One synthetic object.
#[derive(Debug, Clone, PartialEq)]
pub struct ToyObject {
    pub kind: PrimitiveKind,
    pub complete: PointCloud,
    pub partial: PointCloud,
}

/// Samples `points` points of a random non-planar shape inside
/// `[-0.5, 0.5]^3`, and keeps the part facing a random viewpoint as the
/// partial cloud.
pub fn toy_object(id: &str, seed: u64, points: usize) -> Result<ToyObject> {
    if points < 8 {
        return Err(Error::invalid("toy objects need at least 8 points"));
    }
    let mut rng = RngStream::from_parts(seed, id, "toy-object");
    let solids: Vec<PrimitiveKind> = PrimitiveKind::ALL.into_iter().filter(|k| !k.is_planar()).collect();
    let kind = solids[rng.random_range(0..solids.len())];
    let complete = sample_primitive(kind, points, &mut rng)?;
    let view = unit_vector(&mut rng);
    let centroid = complete.centroid()?;
    let partial = complete
        .retain_indices(|i| (complete.points()[i] - centroid).dot(view) >= -0.1)
        .unlabeled();
    if partial.len() < 4 {
        return Err(Error::invalid(format!("partial view of {id} is nearly empty")));
    }
    Ok(ToyObject {
        kind,
        complete: complete.unlabeled(),
        partial,
    })
}

/// Writes `counts[s]` objects per split as
/// `<root>/<split>/{partial,complete}/<shape>/obj_NNN.ply` and returns the
/// object ids in order.
pub fn write_toy_corpus(root: &Path, counts: [usize; 3], seed: u64, points: usize) -> Result<Vec<String>> {
    let mut ids = Vec::new();
    let mut n = 0;
    for (split, &count) in Split::ALL.iter().zip(counts.iter()) {
        for _ in 0..count {
            let name = format!("obj_{n:03}");
            let obj = toy_object(&name, seed, points)?;
            let id = format!("{}/{name}", obj.kind.name());
            let dir = root.join(split.name());
            write_cloud(&dir.join("partial").join(format!("{id}.ply")), &obj.partial)?;
            write_cloud(&dir.join("complete").join(format!("{id}.ply")), &obj.complete)?;
            ids.push(id);
            n += 1;
        }
    }
    Ok(ids)
}
