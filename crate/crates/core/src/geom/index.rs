//! Exact nearest-neighbor search over a fixed point set.
//!
//! A median-split kd-tree with small leaf buckets. Answers are identical to
//! an exhaustive linear scan, including tie-breaking: among equidistant
//! points the lowest index wins. Pruning only discards a subtree when its
//! lower bound is strictly greater than the current best, so equal-distance
//! candidates in other subtrees are still visited.

use crate::error::{Error, Result};

use super::point::Point3;

const LEAF_SIZE: usize = 8;

/// Distance used to select neighbors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Metric {
    #[default]
    Euclidean,
    /// Manhattan distance, sum of absolute coordinate differences.
    L1,
}

impl Metric {
    /// Comparison key: squared distance for Euclidean, plain distance for L1.
    #[inline]
    fn key(self, a: Point3, b: Point3) -> f64 {
        match self {
            Metric::Euclidean => (a - b).norm_sq(),
            Metric::L1 => (a - b).norm_l1(),
        }
    }

    #[inline]
    fn axis_bound(self, diff: f64) -> f64 {
        match self {
            Metric::Euclidean => diff * diff,
            Metric::L1 => diff.abs(),
        }
    }

    #[inline]
    fn key_to_dist(self, key: f64) -> f64 {
        match self {
            Metric::Euclidean => key.sqrt(),
            Metric::L1 => key,
        }
    }
}

/// Result of a nearest-neighbor query.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Neighbor {
    pub index: usize,
    pub dist: f64,
}

#[derive(Debug, Clone)]
enum Node {
    Leaf {
        start: usize,
        end: usize,
    },
    Split {
        axis: usize,
        value: f64,
        left: usize,
        right: usize,
    },
}

/// Immutable spatial index; see the module docs for the exactness guarantee.
#[derive(Debug, Clone)]
pub struct NnIndex {
    points: Vec<Point3>,
    order: Vec<usize>,
    nodes: Vec<Node>,
    metric: Metric,
}

#[derive(Clone, Copy)]
struct Best {
    index: usize,
    key: f64,
}

impl Best {
    #[inline]
    fn offer(&mut self, index: usize, key: f64) {
        if key < self.key || (key == self.key && index < self.index) {
            self.key = key;
            self.index = index;
        }
    }
}

impl NnIndex {
    pub fn new(points: &[Point3]) -> Result<Self> {
        Self::with_metric(points, Metric::Euclidean)
    }

    pub fn with_metric(points: &[Point3], metric: Metric) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::EmptyCloud);
        }
        let mut index = Self {
            points: points.to_vec(),
            order: (0..points.len()).collect(),
            nodes: Vec::new(),
            metric,
        };
        index.build(0, points.len());
        Ok(index)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn metric(&self) -> Metric {
        self.metric
    }

    pub fn points(&self) -> &[Point3] {
        &self.points
    }

    fn build(&mut self, start: usize, end: usize) -> usize {
        let id = self.nodes.len();
        if end - start <= LEAF_SIZE {
            self.nodes.push(Node::Leaf { start, end });
            return id;
        }
        let slice = &self.order[start..end];
        let mut lo = self.points[slice[0]];
        let mut hi = lo;
        for &i in slice {
            lo = lo.min(self.points[i]);
            hi = hi.max(self.points[i]);
        }
        let spread = hi - lo;
        let axis = if spread.x >= spread.y && spread.x >= spread.z {
            0
        } else if spread.y >= spread.z {
            1
        } else {
            2
        };
        let mid = (end - start) / 2;
        let points = &self.points;
        self.order[start..end].select_nth_unstable_by(mid, |&a, &b| points[a][axis].total_cmp(&points[b][axis]));
        let value = self.points[self.order[start + mid]][axis];
        // Placeholder, patched once the children exist.
        self.nodes.push(Node::Leaf { start, end });
        let left = self.build(start, start + mid);
        let right = self.build(start + mid, end);
        self.nodes[id] = Node::Split {
            axis,
            value,
            left,
            right,
        };
        id
    }

    /// Nearest indexed point to `q`; ties resolve to the lowest index.
    pub fn nearest(&self, q: Point3) -> Neighbor {
        self.nearest_filtered(q, usize::MAX)
    }

    /// Nearest indexed point other than `skip`. Returns `None` when the index
    /// holds a single point and it is skipped.
    pub fn nearest_excluding(&self, q: Point3, skip: usize) -> Option<Neighbor> {
        if self.points.len() == 1 && skip == 0 {
            return None;
        }
        Some(self.nearest_filtered(q, skip))
    }

    fn nearest_filtered(&self, q: Point3, skip: usize) -> Neighbor {
        let mut best = Best {
            index: usize::MAX,
            key: f64::INFINITY,
        };
        self.search(0, q, skip, &mut best);
        Neighbor {
            index: best.index,
            dist: self.metric.key_to_dist(best.key),
        }
    }

    fn search(&self, node: usize, q: Point3, skip: usize, best: &mut Best) {
        match self.nodes[node] {
            Node::Leaf { start, end } => {
                for &i in &self.order[start..end] {
                    if i != skip {
                        best.offer(i, self.metric.key(q, self.points[i]));
                    }
                }
            }
            Node::Split {
                axis,
                value,
                left,
                right,
            } => {
                let diff = q[axis] - value;
                let (near, far) = if diff <= 0.0 { (left, right) } else { (right, left) };
                self.search(near, q, skip, best);
                if self.metric.axis_bound(diff) <= best.key {
                    self.search(far, q, skip, best);
                }
            }
        }
    }

    /// True when some indexed point lies within distance `r` (inclusive) of `q`.
    pub fn any_within(&self, q: Point3, r: f64) -> bool {
        self.nearest(q).dist <= r
    }
}

/// Mean distance from each point to its nearest other point. Zero for a
/// single point.
pub fn mean_nn_distance(points: &[Point3]) -> Result<f64> {
    let index = NnIndex::new(points)?;
    if points.len() == 1 {
        return Ok(0.0);
    }
    let total: f64 = points
        .iter()
        .enumerate()
        .map(|(i, &p)| index.nearest_excluding(p, i).map_or(0.0, |n| n.dist))
        .sum();
    Ok(total / points.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn scan(points: &[Point3], q: Point3, metric: Metric) -> (usize, f64) {
        let mut best = (usize::MAX, f64::INFINITY);
        for (i, &p) in points.iter().enumerate() {
            let k = metric.key(q, p);
            if k < best.1 {
                best = (i, k);
            }
        }
        (best.0, metric.key_to_dist(best.1))
    }

    fn random_points(rng: &mut ChaCha8Rng, n: usize) -> Vec<Point3> {
        (0..n)
            .map(|_| Point3::new(rng.random(), rng.random(), rng.random()))
            .collect()
    }

    #[test]
    fn single_point() {
        let idx = NnIndex::new(&[Point3::ORIGIN]).unwrap();
        let n = idx.nearest(Point3::new(1.0, 0.0, 0.0));
        assert_eq!((n.index, n.dist), (0, 1.0));
    }

    #[test]
    fn query_on_indexed_point() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let pts = random_points(&mut rng, 100);
        let idx = NnIndex::new(&pts).unwrap();
        let n = idx.nearest(pts[42]);
        assert_eq!((n.index, n.dist), (42, 0.0));
    }

    #[test]
    fn empty_is_error() {
        assert!(matches!(NnIndex::new(&[]), Err(Error::EmptyCloud)));
    }

    #[test]
    fn matches_scan_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let pts = random_points(&mut rng, 512);
        for metric in [Metric::Euclidean, Metric::L1] {
            let idx = NnIndex::with_metric(&pts, metric).unwrap();
            for _ in 0..512 {
                let q = Point3::new(rng.random(), rng.random(), rng.random());
                let n = idx.nearest(q);
                assert_eq!((n.index, n.dist), scan(&pts, q, metric));
            }
        }
    }

    #[test]
    fn ties_pick_lowest_index() {
        // Lattice with many duplicates and equidistant candidates.
        let mut pts = Vec::new();
        for _ in 0..3 {
            for x in 0..4 {
                for y in 0..4 {
                    for z in 0..4 {
                        pts.push(Point3::new(x as f64, y as f64, z as f64));
                    }
                }
            }
        }
        let idx = NnIndex::new(&pts).unwrap();
        for x in 0..7 {
            for y in 0..7 {
                let q = Point3::new(x as f64 * 0.5, y as f64 * 0.5, 1.5);
                let n = idx.nearest(q);
                assert_eq!((n.index, n.dist), scan(&pts, q, Metric::Euclidean));
            }
        }
    }

    #[test]
    fn excluding_skips_self() {
        let pts = vec![Point3::ORIGIN, Point3::new(2.0, 0.0, 0.0), Point3::new(5.0, 0.0, 0.0)];
        let idx = NnIndex::new(&pts).unwrap();
        let n = idx.nearest_excluding(pts[0], 0).unwrap();
        assert_eq!((n.index, n.dist), (1, 2.0));
        assert!(NnIndex::new(&pts[..1]).unwrap().nearest_excluding(pts[0], 0).is_none());
        assert!((mean_nn_distance(&pts).unwrap() - 7.0 / 3.0).abs() < 1e-12);
    }
}
