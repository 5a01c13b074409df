//! Corruptions that act on the object's own points: occlusion, jitter,
//! rotation, scaling.

use rand::seq::index;
use rand::Rng;

use crate::error::{Error, Result};
use crate::geom::{rotate, scale, unit_vector, Label, NnIndex, Point3, PointCloud, RngStream};

use super::external::split_evenly;
use super::placement::{random_shape, Placer};
use super::recipe::Knobs;
use super::spec::{CorruptionKind, CorruptionParams, CorruptionSpec};
use super::{CorruptionResult, CorruptionStats};

fn wrong_kind(spec: &CorruptionSpec, want: CorruptionKind) -> Error {
    Error::invalid(format!("expected a {want} spec, got {}", spec.kind()))
}

/// Occlusion by other objects: places `N_o` basic-shape occluders at
/// distance `N_d` and removes exactly `round(N_p * N_t)` object points, the
/// ones nearest to each occluder (quota split evenly across occluders).
pub fn apply_oboo(
    cloud: &PointCloud,
    spec: &CorruptionSpec,
    knobs: &Knobs,
    rng: &mut RngStream,
) -> Result<CorruptionResult> {
    let CorruptionParams::Oboo {
        objects,
        points,
        distance,
        ..
    } = spec.params
    else {
        return Err(wrong_kind(spec, CorruptionKind::Oboo));
    };
    // Object points with their positions in the full cloud.
    let members: Vec<(usize, Point3)> = cloud
        .iter_labeled()
        .enumerate()
        .filter(|(_, (_, l))| *l == Label::Object)
        .map(|(i, (p, _))| (i, p))
        .collect();
    if members.is_empty() {
        return Err(Error::EmptyCloud);
    }
    let n_t = members.len();
    let k = points.of_count(n_t);
    if k >= n_t {
        return Err(Error::invalid(format!("O_BOO would remove {k} of {n_t} points")));
    }
    let object: Vec<Point3> = members.iter().map(|m| m.1).collect();
    let placer = Placer::new(&object)?;
    let size = knobs.primitive_scale * placer.aabb.largest_extent();

    let mut removed = vec![false; n_t];
    for quota in split_evenly(k, objects as usize) {
        let (kind, shape) = random_shape(knobs.occluder_samples, size, rng)?;
        let occluder = placer
            .place(&shape, distance, rng)
            .ok_or_else(|| Error::invalid(format!("no admissible position for a {}", kind.name())))?;
        if quota == 0 {
            continue;
        }
        let occ_index = NnIndex::new(&occluder)?;
        let mut ranked: Vec<(f64, usize)> = object
            .iter()
            .enumerate()
            .filter(|(i, _)| !removed[*i])
            .map(|(i, &p)| (occ_index.nearest(p).dist, i))
            .collect();
        ranked.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        for &(_, i) in ranked.iter().take(quota) {
            removed[i] = true;
        }
    }

    let mut drop = vec![false; cloud.len()];
    for (m, &(i, _)) in members.iter().enumerate() {
        drop[i] = removed[m];
    }
    Ok(CorruptionResult {
        cloud: cloud.retain_indices(|i| !drop[i]),
        spec: spec.clone(),
        stats: CorruptionStats {
            removed: k,
            ..Default::default()
        },
    })
}

/// Dynamic jitter with trajectory: a fraction of the points get isotropic
/// jitter of magnitude at most `J_a`, then slide a uniform `[0, T_d]`
/// distance along one per-cloud random direction.
pub fn apply_djt(
    cloud: &PointCloud,
    spec: &CorruptionSpec,
    knobs: &Knobs,
    rng: &mut RngStream,
) -> Result<CorruptionResult> {
    let CorruptionParams::Djt { jitter, trail } = spec.params else {
        return Err(wrong_kind(spec, CorruptionKind::Djt));
    };
    cloud.ensure_nonempty()?;
    let n = cloud.len();
    let count = ((knobs.jitter_fraction * n as f64) + 0.5).floor() as usize;
    let count = count.min(n);
    let mut out = cloud.clone();
    if count > 0 {
        let direction = unit_vector(rng);
        let mut chosen = index::sample(rng, n, count).into_vec();
        chosen.sort_unstable();
        let pts = out.points_mut();
        for i in chosen {
            let magnitude = jitter * rng.random::<f64>().cbrt();
            let offset = unit_vector(rng) * magnitude + direction * rng.random_range(0.0..=trail);
            pts[i] += offset;
        }
    }
    Ok(CorruptionResult {
        cloud: out,
        spec: spec.clone(),
        stats: CorruptionStats {
            displaced: count,
            ..Default::default()
        },
    })
}

/// Triaxial rotation about the centroid.
pub fn apply_tr(cloud: &PointCloud, spec: &CorruptionSpec) -> Result<CorruptionResult> {
    let CorruptionParams::Tr { degrees } = spec.params else {
        return Err(wrong_kind(spec, CorruptionKind::Tr));
    };
    let out = rotate(cloud, degrees[0], degrees[1], degrees[2])?;
    let displaced = if degrees == [0.0; 3] { 0 } else { out.len() };
    Ok(CorruptionResult {
        cloud: out,
        spec: spec.clone(),
        stats: CorruptionStats {
            displaced,
            ..Default::default()
        },
    })
}

/// Isometric scaling about the centroid.
pub fn apply_is(cloud: &PointCloud, spec: &CorruptionSpec) -> Result<CorruptionResult> {
    let CorruptionParams::Is { scale: s } = spec.params else {
        return Err(wrong_kind(spec, CorruptionKind::Is));
    };
    let out = scale(cloud, s)?;
    let displaced = if s == 1.0 { 0 } else { out.len() };
    Ok(CorruptionResult {
        cloud: out,
        spec: spec.clone(),
        stats: CorruptionStats {
            displaced,
            ..Default::default()
        },
    })
}
