use crate::error::{Error, Result};

use super::cloud::PointCloud;
use super::point::Point3;

/// Row-major 3x3 rotation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rotation([[f64; 3]; 3]);

impl Rotation {
    pub const IDENTITY: Self = Self([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]);

    /// `R_z(z) * R_y(y) * R_x(x)`, angles in degrees.
    pub fn from_euler_deg(x: f64, y: f64, z: f64) -> Self {
        let (sx, cx) = x.to_radians().sin_cos();
        let (sy, cy) = y.to_radians().sin_cos();
        let (sz, cz) = z.to_radians().sin_cos();
        let rx = Self([[1.0, 0.0, 0.0], [0.0, cx, -sx], [0.0, sx, cx]]);
        let ry = Self([[cy, 0.0, sy], [0.0, 1.0, 0.0], [-sy, 0.0, cy]]);
        let rz = Self([[cz, -sz, 0.0], [sz, cz, 0.0], [0.0, 0.0, 1.0]]);
        rz.mul(&ry).mul(&rx)
    }

    /// Rotation taking the +z axis onto `dir` (which need not be unit length).
    pub fn z_to(dir: Point3) -> Self {
        let d = dir * (1.0 / dir.norm());
        let helper = if d.x.abs() < 0.9 {
            Point3::new(1.0, 0.0, 0.0)
        } else {
            Point3::new(0.0, 1.0, 0.0)
        };
        let u = helper.cross(d);
        let u = u * (1.0 / u.norm());
        let v = d.cross(u);
        // Columns are the images of the x, y, z axes.
        Self([[u.x, v.x, d.x], [u.y, v.y, d.y], [u.z, v.z, d.z]])
    }

    pub fn mul(&self, o: &Self) -> Self {
        let mut m = [[0.0; 3]; 3];
        for (i, row) in m.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate() {
                *cell = (0..3).map(|k| self.0[i][k] * o.0[k][j]).sum();
            }
        }
        Self(m)
    }

    #[inline]
    pub fn apply(&self, p: Point3) -> Point3 {
        let m = &self.0;
        Point3::new(
            m[0][0] * p.x + m[0][1] * p.y + m[0][2] * p.z,
            m[1][0] * p.x + m[1][1] * p.y + m[1][2] * p.z,
            m[2][0] * p.x + m[2][1] * p.y + m[2][2] * p.z,
        )
    }
}

/// Rotates about the centroid by `R_z * R_y * R_x` (degrees). Zero angles
/// return the input unchanged, bit for bit.
pub fn rotate(cloud: &PointCloud, x_deg: f64, y_deg: f64, z_deg: f64) -> Result<PointCloud> {
    cloud.ensure_nonempty()?;
    if x_deg == 0.0 && y_deg == 0.0 && z_deg == 0.0 {
        return Ok(cloud.clone());
    }
    let c = cloud.centroid()?;
    let r = Rotation::from_euler_deg(x_deg, y_deg, z_deg);
    Ok(cloud.map_points(|p| c + r.apply(p - c)))
}

/// Scales about the centroid: `p -> c + s (p - c)`.
pub fn scale(cloud: &PointCloud, s: f64) -> Result<PointCloud> {
    if !s.is_finite() || s <= 0.0 {
        return Err(Error::invalid(format!("scale factor must be positive, got {s}")));
    }
    cloud.ensure_nonempty()?;
    if s == 1.0 {
        return Ok(cloud.clone());
    }
    let c = cloud.centroid()?;
    Ok(cloud.map_points(|p| c + (p - c) * s))
}

/// Plane `{p : normal . p = offset}` with a unit normal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Plane {
    normal: Point3,
    offset: f64,
}

impl Plane {
    /// Normalizes `normal`; `offset` is rescaled so the plane is unchanged.
    pub fn new(normal: Point3, offset: f64) -> Result<Self> {
        let n = normal.norm();
        if !n.is_finite() || n <= 0.0 || !offset.is_finite() {
            return Err(Error::invalid("plane normal must be nonzero and finite"));
        }
        Ok(Self {
            normal: normal * (1.0 / n),
            offset: offset / n,
        })
    }

    /// Axis-aligned plane `coord[axis] = value`.
    pub fn axis_aligned(axis: usize, value: f64) -> Self {
        Self {
            normal: Point3::ORIGIN.with_axis(axis, 1.0),
            offset: value,
        }
    }

    pub fn normal(&self) -> Point3 {
        self.normal
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn signed_distance(&self, p: Point3) -> f64 {
        self.normal.dot(p) - self.offset
    }

    pub fn project(&self, p: Point3) -> Point3 {
        let d = self.signed_distance(p);
        if d == 0.0 {
            return p;
        }
        let q = p - self.normal * d;
        // For axis-aligned planes pin the coordinate exactly.
        for a in 0..3 {
            if self.normal[a].abs() == 1.0 {
                return q.with_axis(a, self.offset * self.normal[a]);
            }
        }
        q
    }
}

/// Orthogonal projection of every point onto `plane`, labels preserved.
pub fn project_to_plane(cloud: &PointCloud, plane: &Plane) -> PointCloud {
    cloud.map_points(|p| plane.project(p))
}
