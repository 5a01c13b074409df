//! Uniform surface sampling of the twelve basic shapes used as clutter and
//! occluders.
//!
//! Every shape sits in a canonical pose: centered at the origin (bounding-box
//! center), largest dimension 1. Planar shapes lie in `z = 0` and are sampled
//! as filled regions; solids are sampled on their boundary surface.

use std::f64::consts::PI;

use rand::Rng;

use crate::error::{Error, Result};

use super::cloud::PointCloud;
use super::point::Point3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PrimitiveKind {
    Circle,
    Square,
    Rectangle,
    Triangle,
    Ellipse,
    Hexagon,
    Diamond,
    Parallelogram,
    Cylinder,
    Sphere,
    Cube,
    Pyramid,
}

impl PrimitiveKind {
    pub const ALL: [PrimitiveKind; 12] = [
        PrimitiveKind::Circle,
        PrimitiveKind::Square,
        PrimitiveKind::Rectangle,
        PrimitiveKind::Triangle,
        PrimitiveKind::Ellipse,
        PrimitiveKind::Hexagon,
        PrimitiveKind::Diamond,
        PrimitiveKind::Parallelogram,
        PrimitiveKind::Cylinder,
        PrimitiveKind::Sphere,
        PrimitiveKind::Cube,
        PrimitiveKind::Pyramid,
    ];

    pub fn is_planar(self) -> bool {
        !matches!(
            self,
            PrimitiveKind::Cylinder | PrimitiveKind::Sphere | PrimitiveKind::Cube | PrimitiveKind::Pyramid
        )
    }

    pub fn name(self) -> &'static str {
        match self {
            PrimitiveKind::Circle => "circle",
            PrimitiveKind::Square => "square",
            PrimitiveKind::Rectangle => "rectangle",
            PrimitiveKind::Triangle => "triangle",
            PrimitiveKind::Ellipse => "ellipse",
            PrimitiveKind::Hexagon => "hexagon",
            PrimitiveKind::Diamond => "diamond",
            PrimitiveKind::Parallelogram => "parallelogram",
            PrimitiveKind::Cylinder => "cylinder",
            PrimitiveKind::Sphere => "sphere",
            PrimitiveKind::Cube => "cube",
            PrimitiveKind::Pyramid => "pyramid",
        }
    }

    /// Uniformly random shape.
    pub fn pick<R: Rng + ?Sized>(rng: &mut R) -> Self {
        Self::ALL[rng.random_range(0..Self::ALL.len())]
    }
}

/// `n` points sampled uniformly on the canonical shape.
pub fn sample_primitive<R: Rng + ?Sized>(kind: PrimitiveKind, n: usize, rng: &mut R) -> Result<PointCloud> {
    if n < 1 {
        return Err(Error::invalid("primitive sample count must be at least 1"));
    }
    let points = (0..n).map(|_| sample_one(kind, rng)).collect();
    PointCloud::new(points)
}

fn sample_one<R: Rng + ?Sized>(kind: PrimitiveKind, rng: &mut R) -> Point3 {
    let u = |rng: &mut R| rng.random_range(-0.5..=0.5);
    match kind {
        PrimitiveKind::Circle => disk(rng, 0.5, 0.5),
        PrimitiveKind::Ellipse => disk(rng, 0.5, 0.25),
        PrimitiveKind::Square => Point3::new(u(rng), u(rng), 0.0),
        PrimitiveKind::Rectangle => Point3::new(u(rng), 0.5 * u(rng), 0.0),
        PrimitiveKind::Triangle => {
            // Equilateral, side 1, bounding box centered.
            let h = 3f64.sqrt() / 2.0;
            let a = Point3::new(-0.5, -h / 2.0, 0.0);
            let b = Point3::new(0.5, -h / 2.0, 0.0);
            let c = Point3::new(0.0, h / 2.0, 0.0);
            triangle(rng, a, b, c)
        }
        PrimitiveKind::Hexagon => loop {
            // Regular, circumradius 0.5 with vertices on the x axis.
            let h = 3f64.sqrt() / 4.0;
            let p = Point3::new(u(rng), 2.0 * h * u(rng), 0.0);
            if p.y.abs() <= h && 3f64.sqrt() * p.x.abs() + p.y.abs() <= 2.0 * h {
                break p;
            }
        },
        PrimitiveKind::Diamond => loop {
            // Rhombus with diagonals 1 (x) and 0.6 (y).
            let p = Point3::new(u(rng), 0.6 * u(rng), 0.0);
            if p.x.abs() / 0.5 + p.y.abs() / 0.3 <= 1.0 {
                break p;
            }
        },
        PrimitiveKind::Parallelogram => {
            let (s, t): (f64, f64) = (rng.random(), rng.random());
            Point3::new(0.7 * s + 0.3 * t - 0.5, 0.5 * t - 0.25, 0.0)
        }
        PrimitiveKind::Sphere => unit_vector(rng) * 0.5,
        PrimitiveKind::Cube => {
            let face = rng.random_range(0..6);
            let axis = face / 2;
            let sign = if face % 2 == 0 { -0.5 } else { 0.5 };
            Point3::new(u(rng), u(rng), u(rng)).with_axis(axis, sign)
        }
        PrimitiveKind::Cylinder => {
            // Radius 0.5, height 1 along z. Side area pi, caps pi/4 each.
            let pick = rng.random_range(0.0..1.5 * PI);
            if pick < PI {
                let th = rng.random_range(0.0..2.0 * PI);
                Point3::new(0.5 * th.cos(), 0.5 * th.sin(), u(rng))
            } else {
                let cap = if pick < 1.25 * PI { -0.5 } else { 0.5 };
                disk(rng, 0.5, 0.5).with_axis(2, cap)
            }
        }
        PrimitiveKind::Pyramid => {
            // Square base side 1 at z = -0.5, apex at z = 0.5.
            let apex = Point3::new(0.0, 0.0, 0.5);
            let side = 0.5 * 1.25f64.sqrt();
            let pick = rng.random_range(0.0..1.0 + 4.0 * side);
            if pick < 1.0 {
                Point3::new(u(rng), u(rng), -0.5)
            } else {
                let corners = [
                    Point3::new(-0.5, -0.5, -0.5),
                    Point3::new(0.5, -0.5, -0.5),
                    Point3::new(0.5, 0.5, -0.5),
                    Point3::new(-0.5, 0.5, -0.5),
                ];
                let f = (((pick - 1.0) / side) as usize).min(3);
                triangle(rng, corners[f], corners[(f + 1) % 4], apex)
            }
        }
    }
}

fn disk<R: Rng + ?Sized>(rng: &mut R, rx: f64, ry: f64) -> Point3 {
    let r = rng.random::<f64>().sqrt();
    let th = rng.random_range(0.0..2.0 * PI);
    Point3::new(rx * r * th.cos(), ry * r * th.sin(), 0.0)
}

fn triangle<R: Rng + ?Sized>(rng: &mut R, a: Point3, b: Point3, c: Point3) -> Point3 {
    let (mut s, mut t): (f64, f64) = (rng.random(), rng.random());
    if s + t > 1.0 {
        s = 1.0 - s;
        t = 1.0 - t;
    }
    a + (b - a) * s + (c - a) * t
}

/// Uniform direction on the unit sphere.
pub fn unit_vector<R: Rng + ?Sized>(rng: &mut R) -> Point3 {
    let z: f64 = rng.random_range(-1.0..=1.0);
    let th = rng.random_range(0.0..2.0 * PI);
    let r = (1.0 - z * z).max(0.0).sqrt();
    Point3::new(r * th.cos(), r * th.sin(), z)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::rng::RngStream;

    fn stream() -> RngStream {
        RngStream::from_parts(0, "primitive-tests", "shape")
    }

    #[test]
    fn sphere_radius() {
        let c = sample_primitive(PrimitiveKind::Sphere, 2000, &mut stream()).unwrap();
        for p in c.points() {
            assert!((p.norm() - 0.5).abs() < 1e-9);
        }
    }

    #[test]
    fn square_in_plane() {
        let c = sample_primitive(PrimitiveKind::Square, 500, &mut stream()).unwrap();
        for p in c.points() {
            assert_eq!(p.z, 0.0);
            assert!(p.x.abs() <= 0.5 && p.y.abs() <= 0.5);
        }
    }

    #[test]
    fn cube_faces_uniform() {
        let n = 6000;
        let c = sample_primitive(PrimitiveKind::Cube, n, &mut stream()).unwrap();
        let mut counts = [0usize; 6];
        for p in c.points() {
            let face = (0..3)
                .flat_map(|a| [(a, -0.5), (a, 0.5)])
                .position(|(a, s)| p[a] == s)
                .expect("point on a face");
            counts[face] += 1;
        }
        let mean = n as f64 / 6.0;
        let sigma = (n as f64 * (1.0 / 6.0) * (5.0 / 6.0)).sqrt();
        for c in counts {
            assert!((c as f64 - mean).abs() <= 3.0 * sigma, "{counts:?}");
        }
    }

    #[test]
    fn canonical_pose_unit_extent() {
        for kind in PrimitiveKind::ALL {
            let c = sample_primitive(kind, 4000, &mut stream()).unwrap();
            let b = c.aabb().unwrap();
            let ext = b.largest_extent();
            assert!(ext <= 1.0 + 1e-12 && ext > 0.9, "{kind:?} extent {ext}");
            let ctr = b.center();
            assert!(ctr.norm() < 0.05, "{kind:?} center {ctr:?}");
            if kind.is_planar() {
                assert!(c.points().iter().all(|p| p.z == 0.0));
            }
        }
    }

    #[test]
    fn deterministic_under_key() {
        for kind in PrimitiveKind::ALL {
            let a = sample_primitive(kind, 64, &mut stream()).unwrap();
            let b = sample_primitive(kind, 64, &mut stream()).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn zero_count_rejected() {
        assert!(sample_primitive(PrimitiveKind::Cube, 0, &mut stream()).is_err());
    }
}
