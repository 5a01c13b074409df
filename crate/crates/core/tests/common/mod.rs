//! Brute-force reference implementations and shared fixtures.
#![allow(dead_code)]

use ndarray::Array3;
use pcrobust::geom::{Point3, PointCloud, RngStream};
use rand::Rng;

/// Exhaustive nearest neighbor; ties go to the lowest index. Euclidean
/// candidates are compared by squared distance.
pub fn brute_nn(points: &[Point3], q: Point3, l1: bool) -> (usize, f64) {
    let mut best = (usize::MAX, f64::INFINITY);
    for (i, &p) in points.iter().enumerate() {
        let key = if l1 { (q - p).norm_l1() } else { (q - p).norm_sq() };
        if key < best.1 {
            best = (i, key);
        }
    }
    if l1 {
        best
    } else {
        (best.0, best.1.sqrt())
    }
}

fn brute_directed(from: &[Point3], to: &[Point3], squared: bool, l1_selection: bool) -> f64 {
    let mut sum = 0.0;
    for &p in from {
        let (j, _) = brute_nn(to, p, l1_selection);
        let diff = p - to[j];
        sum += if squared { diff.norm_sq() } else { diff.norm_l1() };
    }
    sum / from.len() as f64
}

/// Chamfer distance: Euclidean nearest neighbor, L1 or squared-L2 cost.
pub fn brute_chamfer(pred: &[Point3], gt: &[Point3], squared: bool) -> f64 {
    brute_directed(pred, gt, squared, false) + brute_directed(gt, pred, squared, false)
}

/// Chamfer-L1 with the neighbor chosen under the L1 distance.
pub fn brute_chamfer_l1_matching(pred: &[Point3], gt: &[Point3]) -> f64 {
    brute_directed(pred, gt, false, true) + brute_directed(gt, pred, false, true)
}

fn brute_fraction(from: &[Point3], to: &[Point3], delta: f64) -> f64 {
    let hits = from
        .iter()
        .filter(|&&p| to.iter().map(|&q| p.dist(q)).fold(f64::INFINITY, f64::min) < delta)
        .count();
    hits as f64 / from.len() as f64
}

pub fn brute_fscore(pred: &[Point3], gt: &[Point3], delta: f64) -> f64 {
    let p = brute_fraction(pred, gt, delta);
    let r = brute_fraction(gt, pred, delta);
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

pub fn brute_fidelity(input: &[Point3], output: &[Point3]) -> f64 {
    let sum: f64 = input
        .iter()
        .map(|&p| output.iter().map(|&q| p.dist(q)).fold(f64::INFINITY, f64::min))
        .sum();
    sum / input.len() as f64
}

/// `t * log sum_{i != j} exp(<c_i, n_j> / t)` by an explicit double loop.
pub fn brute_negative_loss(clean: &Array3<f64>, noisy: &Array3<f64>, t: f64) -> f64 {
    let (b, l, d) = clean.dim();
    let vec = |x: &Array3<f64>, m: usize| -> Vec<f64> { (0..d).map(|k| x[[m / l, m % l, k]]).collect() };
    let m = b * l;
    let mut sims = Vec::new();
    for i in 0..m {
        for j in 0..m {
            if i != j {
                let (ci, nj) = (vec(clean, i), vec(noisy, j));
                sims.push(ci.iter().zip(&nj).map(|(a, b)| a * b).sum::<f64>() / t);
            }
        }
    }
    let max = sims.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    t * (max + sims.iter().map(|s| (s - max).exp()).sum::<f64>().ln())
}

/// Relative difference with an absolute floor for values near zero.
pub fn rel_diff(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-12)
}

/// Uniform random cloud of `n` points in `[-0.5, 0.5]^3`.
pub fn random_cloud(rng: &mut RngStream, n: usize) -> PointCloud {
    let pts = (0..n)
        .map(|_| {
            Point3::new(
                rng.random_range(-0.5..0.5),
                rng.random_range(-0.5..0.5),
                rng.random_range(-0.5..0.5),
            )
        })
        .collect();
    PointCloud::new(pts).unwrap()
}

/// Random cloud on a coarse lattice, so exact distance ties are common.
pub fn lattice_cloud(rng: &mut RngStream, n: usize) -> PointCloud {
    let pts = (0..n)
        .map(|_| {
            Point3::new(
                rng.random_range(-3..=3) as f64 * 0.125,
                rng.random_range(-3..=3) as f64 * 0.125,
                rng.random_range(-3..=3) as f64 * 0.125,
            )
        })
        .collect();
    PointCloud::new(pts).unwrap()
}

/// Every file under `root` with its bytes, keyed by relative path.
pub fn tree_bytes(root: &std::path::Path) -> std::collections::BTreeMap<String, Vec<u8>> {
    walkdir::WalkDir::new(root)
        .into_iter()
        .map(|e| e.unwrap())
        .filter(|e| e.file_type().is_file())
        .map(|e| {
            let rel = e.path().strip_prefix(root).unwrap().to_string_lossy().into_owned();
            (rel, std::fs::read(e.path()).unwrap())
        })
        .collect()
}
