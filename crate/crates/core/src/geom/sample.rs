use rand::Rng;

use crate::error::{Error, Result};

use super::cloud::PointCloud;

/// Greedy farthest point sampling.
///
/// The first point is drawn from `rng`; each later pick maximizes the
/// distance to the already chosen set (ties go to the lowest index). Output
/// is in selection order and keeps labels.
pub fn farthest_point_sample<R: Rng + ?Sized>(cloud: &PointCloud, k: usize, rng: &mut R) -> Result<PointCloud> {
    let n = cloud.len();
    if k < 1 || k > n {
        return Err(Error::invalid(format!("FPS needs 1 <= k <= {n}, got {k}")));
    }
    let pts = cloud.points();
    let first = rng.random_range(0..n);
    let mut chosen = Vec::with_capacity(k);
    chosen.push(first);
    let mut min_d: Vec<f64> = pts.iter().map(|&p| p.dist_sq(pts[first])).collect();
    while chosen.len() < k {
        let mut best = 0;
        for i in 1..n {
            if min_d[i] > min_d[best] {
                best = i;
            }
        }
        chosen.push(best);
        let b = pts[best];
        for (d, &p) in min_d.iter_mut().zip(pts) {
            *d = d.min(p.dist_sq(b));
        }
    }

    let points = chosen.iter().map(|&i| pts[i]).collect();
    match cloud.labels() {
        Some(labels) => PointCloud::with_labels(points, chosen.iter().map(|&i| labels[i]).collect()),
        None => PointCloud::new(points),
    }
}
