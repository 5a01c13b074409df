//! Positioning of primitive shapes at an exact distance from an object.

use rand::Rng;

use crate::geom::{unit_vector, Aabb, NnIndex, Point3, PrimitiveKind, Rotation};

const ATTEMPTS: usize = 64;
const BISECTION_STEPS: usize = 80;
/// Successive size reductions tried when a shape does not fit.
const SHRINK: [f64; 7] = [1.0, 0.7, 0.5, 0.35, 0.25, 0.1, 0.0];

/// Object geometry shared by the placement attempts.
pub(crate) struct Placer<'a> {
    pub object: &'a [Point3],
    pub index: NnIndex,
    pub aabb: Aabb,
}

impl<'a> Placer<'a> {
    pub fn new(object: &'a [Point3]) -> crate::Result<Self> {
        Ok(Self {
            object,
            index: NnIndex::new(object)?,
            aabb: Aabb::from_points(object)?,
        })
    }

    /// True when every point of `shape` shifted by `offset` is at least
    /// `d` from the object.
    fn clear_of_object(&self, shape: &[Point3], offset: Point3, d: f64) -> bool {
        shape.iter().all(|&s| self.index.nearest(s + offset).dist >= d)
    }

    /// Minimum distance from the shifted shape to the object.
    #[cfg(test)]
    pub fn gap(&self, shape: &[Point3], offset: Point3) -> f64 {
        shape
            .iter()
            .map(|&s| self.index.nearest(s + offset).dist)
            .fold(f64::INFINITY, f64::min)
    }

    /// Places `shape` (centered near the origin) so that its nearest point
    /// to the object is at distance `d` (up to bisection tolerance, never
    /// below) and all of its points lie inside the object AABB dilated by
    /// `d`. Shrinks the shape when no admissible position is found.
    pub fn place<R: Rng + ?Sized>(&self, shape: &[Point3], d: f64, rng: &mut R) -> Option<Vec<Point3>> {
        for factor in SHRINK {
            let scaled: Vec<Point3> = shape.iter().map(|&s| s * factor).collect();
            if let Some(offset) = self.find_offset(&scaled, d, rng) {
                return Some(scaled.into_iter().map(|s| s + offset).collect());
            }
        }
        None
    }

    fn find_offset<R: Rng + ?Sized>(&self, shape: &[Point3], d: f64, rng: &mut R) -> Option<Point3> {
        let bounds = self.aabb.dilated(d);
        let smin = shape
            .iter()
            .fold(Point3::new(f64::INFINITY, f64::INFINITY, f64::INFINITY), |a, &b| {
                a.min(b)
            });
        let smax = shape
            .iter()
            .fold(-Point3::new(f64::INFINITY, f64::INFINITY, f64::INFINITY), |a, &b| {
                a.max(b)
            });
        for _ in 0..ATTEMPTS {
            // Aim from the object point nearest to a random spot in the box.
            let target = Point3::new(
                rng.random_range(bounds.min.x..=bounds.max.x),
                rng.random_range(bounds.min.y..=bounds.max.y),
                rng.random_range(bounds.min.z..=bounds.max.z),
            );
            let base = self.object[self.index.nearest(target).index];
            let mut dir = target - base;
            if dir.norm() == 0.0 {
                dir = unit_vector(rng);
            }
            let dir = dir * (1.0 / dir.norm());

            // Ray parameters keeping the whole shape inside the box.
            let (mut lo, mut hi) = (0.0f64, f64::INFINITY);
            for a in 0..3 {
                let min_c = bounds.min[a] - smin[a] - base[a];
                let max_c = bounds.max[a] - smax[a] - base[a];
                if dir[a] == 0.0 {
                    if min_c > 0.0 || max_c < 0.0 {
                        hi = -1.0;
                    }
                } else {
                    let (t0, t1) = (min_c / dir[a], max_c / dir[a]);
                    lo = lo.max(t0.min(t1));
                    hi = hi.min(t0.max(t1));
                }
            }
            if !hi.is_finite() || hi < lo {
                continue;
            }
            if !self.clear_of_object(shape, base + dir * hi, d) {
                continue;
            }
            if self.clear_of_object(shape, base + dir * lo, d) {
                continue;
            }
            // Invariant: gap(lo) < d <= gap(hi). The gap is 1-Lipschitz in
            // the ray parameter, so gap(hi) - d <= hi - lo on exit.
            for _ in 0..BISECTION_STEPS {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                if self.clear_of_object(shape, base + dir * mid, d) {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            let offset = base + dir * hi;
            if shape.iter().all(|&s| bounds.contains(s + offset, 1e-9)) {
                return Some(offset);
            }
        }
        None
    }
}

/// A random proper rotation.
pub(crate) fn random_orientation<R: Rng + ?Sized>(rng: &mut R) -> Rotation {
    let spin = rng.random_range(0.0..360.0);
    Rotation::z_to(unit_vector(rng)).mul(&Rotation::from_euler_deg(0.0, 0.0, spin))
}

/// Samples `n` points of a random basic shape, randomly oriented and scaled
/// to `size` (largest canonical dimension).
pub(crate) fn random_shape<R: Rng + ?Sized>(
    n: usize,
    size: f64,
    rng: &mut R,
) -> crate::Result<(PrimitiveKind, Vec<Point3>)> {
    let kind = PrimitiveKind::pick(rng);
    let canon = crate::geom::sample_primitive(kind, n, rng)?;
    let rot = random_orientation(rng);
    Ok((kind, canon.points().iter().map(|&p| rot.apply(p) * size).collect()))
}
