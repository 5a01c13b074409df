//! Corruptions that add points: other objects, a wall, a floor.

use rand::Rng;

use crate::error::{Error, Result};
use crate::geom::{mean_nn_distance, Aabb, NnIndex, Point3, PointCloud, RngStream};

use super::placement::{random_shape, Placer};
use super::recipe::Knobs;
use super::spec::{CorruptionKind, CorruptionParams, CorruptionSpec};
use super::{CorruptionResult, CorruptionStats};

fn wrong_kind(spec: &CorruptionSpec, want: CorruptionKind) -> Error {
    Error::invalid(format!("expected a {want} spec, got {}", spec.kind()))
}

/// Splits `total` into `parts` counts differing by at most one, larger first.
pub(crate) fn split_evenly(total: usize, parts: usize) -> Vec<usize> {
    let base = total / parts;
    let extra = total % parts;
    (0..parts).map(|i| base + usize::from(i < extra)).collect()
}

/// Occlusion radius for an object with the given points.
pub(crate) fn occlusion_radius(object: &[Point3], knobs: &Knobs) -> Result<f64> {
    match knobs.r_occ {
        Some(r) => Ok(r),
        None => Ok(knobs.r_occ_factor * mean_nn_distance(object)?),
    }
}

/// Spacing of background samples matching the object's point density.
fn background_spacing(object: &[Point3], aabb: &Aabb, knobs: &Knobs) -> Result<f64> {
    let mut h = mean_nn_distance(object)? / knobs.wall_density.sqrt();
    if h.is_nan() || h <= 0.0 {
        h = aabb.largest_extent() / 64.0;
    }
    if h.is_nan() || h <= 0.0 {
        h = 0.01;
    }
    Ok(h)
}

/// One uniformly jittered sample per cell of a grid over `[u0,u1] x [v0,v1]`.
fn jittered_grid<R: Rng + ?Sized>(
    (u0, u1): (f64, f64),
    (v0, v1): (f64, f64),
    spacing: f64,
    rng: &mut R,
) -> Vec<(f64, f64)> {
    const MAX_CELLS_PER_AXIS: usize = 2048;
    let cells = |len: f64| ((len / spacing).ceil() as usize).clamp(1, MAX_CELLS_PER_AXIS);
    let (nu, nv) = (cells(u1 - u0), cells(v1 - v0));
    let (du, dv) = ((u1 - u0) / nu as f64, (v1 - v0) / nv as f64);
    let mut out = Vec::with_capacity(nu * nv);
    for i in 0..nu {
        for j in 0..nv {
            let u = u0 + du * (i as f64 + rng.random::<f64>());
            let v = v0 + dv * (j as f64 + rng.random::<f64>());
            out.push((u, v));
        }
    }
    out
}

/// Drops background samples within `r_occ` of the object's projection onto
/// the plane `coord[axis] = level`.
fn remove_occluded(
    samples: Vec<Point3>,
    object: &[Point3],
    axis: usize,
    level: f64,
    r_occ: f64,
) -> Result<Vec<Point3>> {
    let shadow: Vec<Point3> = object.iter().map(|p| p.with_axis(axis, level)).collect();
    let index = NnIndex::new(&shadow)?;
    Ok(samples.into_iter().filter(|&s| !index.any_within(s, r_occ)).collect())
}

fn finish(mut cloud: PointCloud, added: Vec<Point3>, spec: &CorruptionSpec) -> Result<CorruptionResult> {
    let n = added.len();
    cloud.append_added(&added)?;
    Ok(CorruptionResult {
        cloud,
        spec: spec.clone(),
        stats: CorruptionStats {
            added: n,
            ..Default::default()
        },
    })
}

/// External object interference: adds `round(N_p * N_t)` points spread over
/// `N_o` basic shapes, each sized relative to the object and placed at
/// distance `N_d` from it, inside its `N_d`-dilated bounding box.
pub fn apply_eoi(
    cloud: &PointCloud,
    spec: &CorruptionSpec,
    knobs: &Knobs,
    rng: &mut RngStream,
) -> Result<CorruptionResult> {
    let CorruptionParams::Eoi {
        objects,
        points,
        distance,
        ..
    } = spec.params
    else {
        return Err(wrong_kind(spec, CorruptionKind::Eoi));
    };
    let object = cloud.object_points();
    if object.is_empty() {
        return Err(Error::EmptyCloud);
    }
    let placer = Placer::new(&object)?;
    let size = knobs.primitive_scale * placer.aabb.largest_extent();
    let total = points.of_count(object.len());

    let mut added = Vec::with_capacity(total);
    for n in split_evenly(total, objects as usize) {
        if n == 0 {
            continue;
        }
        let (kind, shape) = random_shape(n, size, rng)?;
        let placed = placer
            .place(&shape, distance, rng)
            .ok_or_else(|| Error::invalid(format!("no admissible position for a {}", kind.name())))?;
        added.extend(placed);
    }
    finish(cloud.clone(), added, spec)
}

/// Background wall: a planar patch parallel to the largest AABB face, `N_d`
/// behind it, spanning the object's footprint at the object's density, with
/// the object's silhouette (within `r_occ`) cut out.
pub fn apply_biw(
    cloud: &PointCloud,
    spec: &CorruptionSpec,
    knobs: &Knobs,
    rng: &mut RngStream,
) -> Result<CorruptionResult> {
    let CorruptionParams::Biw { distance } = spec.params else {
        return Err(wrong_kind(spec, CorruptionKind::Biw));
    };
    let object = cloud.object_points();
    if object.is_empty() {
        return Err(Error::EmptyCloud);
    }
    let aabb = Aabb::from_points(&object)?;
    let layout = wall_layout(&aabb, distance, rng.random::<bool>());
    let spacing = background_spacing(&object, &aabb, knobs)?;
    let r_occ = occlusion_radius(&object, knobs)?;

    let (u, v) = layout.span_axes;
    let grid = jittered_grid((aabb.min[u], aabb.max[u]), (aabb.min[v], aabb.max[v]), spacing, rng);
    let wall = grid
        .into_iter()
        .map(|(a, b)| {
            Point3::ORIGIN
                .with_axis(layout.axis, layout.level)
                .with_axis(u, a)
                .with_axis(v, b)
        })
        .collect();
    let wall = remove_occluded(wall, &object, layout.axis, layout.level, r_occ)?;
    finish(cloud.clone(), wall, spec)
}

/// Where a wall goes for a given bounding box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WallLayout {
    /// Axis normal to the wall.
    pub axis: usize,
    /// Wall coordinate along `axis`.
    pub level: f64,
    /// The two in-plane axes.
    pub span_axes: (usize, usize),
}

/// Wall normal to the axis whose AABB face has the largest area (lowest
/// axis on ties), on the max side when `far_side`, else the min side.
pub fn wall_layout(aabb: &Aabb, gap: f64, far_side: bool) -> WallLayout {
    let e = aabb.extents();
    let areas = [e.y * e.z, e.x * e.z, e.x * e.y];
    let mut axis = 0;
    for a in 1..3 {
        if areas[a] > areas[axis] {
            axis = a;
        }
    }
    let level = if far_side {
        aabb.max[axis] + gap
    } else {
        aabb.min[axis] - gap
    };
    let span_axes = match axis {
        0 => (1, 2),
        1 => (0, 2),
        _ => (0, 1),
    };
    WallLayout { axis, level, span_axes }
}

/// Vertical range whose bottom quarter triggers a floor.
pub fn floor_reference(knobs: &Knobs) -> (f64, f64) {
    knobs.floor_reference.unwrap_or((-0.5, 0.5))
}

/// Background floor: when some object point lies in the bottom quarter of
/// the reference vertical range, adds a horizontal patch at the object's
/// lowest `y`, spanning its x/z footprint plus a margin, with the region
/// under the object (within `r_occ`) cut out. Otherwise the cloud is
/// returned unchanged.
pub fn apply_bif(
    cloud: &PointCloud,
    spec: &CorruptionSpec,
    knobs: &Knobs,
    rng: &mut RngStream,
) -> Result<CorruptionResult> {
    if spec.kind() != CorruptionKind::Bif {
        return Err(wrong_kind(spec, CorruptionKind::Bif));
    }
    let object = cloud.object_points();
    if object.is_empty() {
        return Err(Error::EmptyCloud);
    }
    let (ref_lo, ref_hi) = floor_reference(knobs);
    let threshold = ref_lo + 0.25 * (ref_hi - ref_lo);
    if !object.iter().any(|p| p.y <= threshold) {
        return finish(cloud.clone(), Vec::new(), spec);
    }

    let aabb = Aabb::from_points(&object)?;
    let spacing = background_spacing(&object, &aabb, knobs)?;
    let r_occ = occlusion_radius(&object, knobs)?;
    let e = aabb.extents();
    let (mx, mz) = (knobs.floor_margin * e.x, knobs.floor_margin * e.z);
    let level = aabb.min.y;
    let grid = jittered_grid(
        (aabb.min.x - mx, aabb.max.x + mx),
        (aabb.min.z - mz, aabb.max.z + mz),
        spacing,
        rng,
    );
    let floor = grid.into_iter().map(|(x, z)| Point3::new(x, level, z)).collect();
    let floor = remove_occluded(floor, &object, 1, level, r_occ)?;
    finish(cloud.clone(), floor, spec)
}
