//! Indexed and vectorized code against brute-force references.

mod common;

use common::*;
use ndarray::Array3;
use pcrobust::geom::io::{parse_ply, parse_xyz, write_ply_string, write_xyz_string};
use pcrobust::geom::{farthest_point_sample, Metric, NnIndex, Point3, PointCloud, RngStream};
use pcrobust::metrics::{chamfer, chamfer_with, fidelity, fscore, Norm, Selection};
use pcrobust::nmm::{negative_loss, normalize};
use proptest::prelude::*;
use rand::Rng;

fn arb_points(max: usize) -> impl Strategy<Value = Vec<Point3>> {
    prop::collection::vec((-4i32..=4, -4i32..=4, -4i32..=4, any::<bool>(), -1.0f64..1.0), 1..max).prop_map(|v| {
        v.into_iter()
            .map(|(x, y, z, snap, jitter)| {
                // Lattice points give exact ties; jittered ones exercise the general case.
                let j = if snap { 0.0 } else { jitter * 0.1 };
                Point3::new(x as f64 * 0.25 + j, y as f64 * 0.25 - j, z as f64 * 0.25)
            })
            .collect()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn kd_tree_matches_brute_force(points in arb_points(200), queries in arb_points(30)) {
        for (metric, l1) in [(Metric::Euclidean, false), (Metric::L1, true)] {
            let index = NnIndex::with_metric(&points, metric).unwrap();
            for &q in &queries {
                let got = index.nearest(q);
                let (i, d) = brute_nn(&points, q, l1);
                prop_assert_eq!(got.index, i);
                prop_assert!((got.dist - d).abs() <= 1e-12 * d.max(1.0));
            }
        }
    }

    #[test]
    fn metrics_match_brute_force(a in arb_points(120), b in arb_points(120), delta in 0.01f64..0.6) {
        let (pa, pb) = (PointCloud::new(a.clone()).unwrap(), PointCloud::new(b.clone()).unwrap());
        let l1 = chamfer(&pa, &pb, Norm::L1).unwrap();
        prop_assert!(rel_diff(l1, brute_chamfer(&a, &b, false)) <= 1e-9);
        let l2 = chamfer(&pa, &pb, Norm::L2).unwrap();
        prop_assert!(rel_diff(l2, brute_chamfer(&a, &b, true)) <= 1e-9);
        let lm = chamfer_with(&pa, &pb, Norm::L1, Selection::Matching).unwrap();
        prop_assert!(rel_diff(lm, brute_chamfer_l1_matching(&a, &b)) <= 1e-9);
        prop_assert_eq!(fscore(&pa, &pb, delta).unwrap(), brute_fscore(&a, &b, delta));
        prop_assert!(rel_diff(fidelity(&pa, &pb).unwrap(), brute_fidelity(&a, &b)) <= 1e-9);
    }

    #[test]
    fn ply_and_xyz_round_trip(points in arb_points(60)) {
        let cloud = PointCloud::new(points.clone()).unwrap();
        let xyz = parse_xyz(&write_xyz_string(&cloud)).unwrap();
        prop_assert_eq!(&xyz, &points);
        let ply = parse_ply(&write_ply_string(&cloud)).unwrap();
        for (p, q) in ply.iter().zip(&points) {
            prop_assert!(p.dist(*q) < 1e-6);
        }
    }
}

/// Greedy FPS from a given first index, by recomputing all distances each round.
fn brute_fps(points: &[Point3], first: usize, k: usize) -> Vec<Point3> {
    let mut chosen = vec![first];
    while chosen.len() < k {
        let mut best = (0, -1.0);
        for (i, &p) in points.iter().enumerate() {
            let d = chosen
                .iter()
                .map(|&c| p.dist_sq(points[c]))
                .fold(f64::INFINITY, f64::min);
            if d > best.1 {
                best = (i, d);
            }
        }
        chosen.push(best.0);
    }
    chosen.into_iter().map(|i| points[i]).collect()
}

#[test]
fn farthest_point_sampling_matches_brute_force() {
    let mut rng = RngStream::from_parts(1, "fps", "oracle");
    for n in [1, 2, 17, 300] {
        let cloud = lattice_cloud(&mut rng, n);
        let k = n.min(64);
        let mut pick = RngStream::from_parts(2, "fps", &n.to_string());
        let got = farthest_point_sample(&cloud, k, &mut pick).unwrap();
        let first = cloud.points().iter().position(|&p| p == got.points()[0]).unwrap();
        assert_eq!(got.points(), brute_fps(cloud.points(), first, k).as_slice(), "n = {n}");
    }
}

#[test]
fn negative_loss_matches_double_loop() {
    let mut rng = RngStream::from_parts(4, "lneg", "oracle");
    for (b, l, d) in [(1, 2, 3), (2, 4, 16), (3, 5, 8)] {
        let c = normalize(&Array3::from_shape_simple_fn((b, l, d), || rng.random_range(-1.0..1.0)));
        let n = normalize(&Array3::from_shape_simple_fn((b, l, d), || rng.random_range(-1.0..1.0)));
        for t in [0.05, 1.0, 7.0] {
            let got = negative_loss(&c, &n, t).unwrap();
            assert!(
                rel_diff(got, brute_negative_loss(&c, &n, t)) < 1e-12,
                "{b}x{l}x{d} t={t}"
            );
        }
    }
}
