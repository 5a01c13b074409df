//! Point-cloud types and the geometric kernel shared by every other module.

mod cloud;
mod index;
pub mod io;
mod point;
mod primitive;
mod rng;
mod sample;
mod transform;

pub use cloud::{Aabb, Label, PointCloud};
pub use index::{mean_nn_distance, Metric, Neighbor, NnIndex};
pub use point::Point3;
pub use primitive::{sample_primitive, unit_vector, PrimitiveKind};
pub use rng::{RngStream, StreamKey};
pub use sample::farthest_point_sample;
pub use transform::{project_to_plane, rotate, scale, Plane, Rotation};
