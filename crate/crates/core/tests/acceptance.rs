//! Acceptance suite: one pass/fail line per criterion.

mod common;

use std::time::{Duration, Instant};

use common::*;
use ndarray::Array3;
use pcrobust::corrupt::{
    apply, build_dataset, domain, sample_params, BuildOptions, CorruptionKind, CorruptionParams, DatasetManifest,
    Knobs, Recipe,
};
use pcrobust::geom::{mean_nn_distance, Label, Point3, PointCloud, RngStream, StreamKey};
use pcrobust::metrics::{chamfer, fidelity, fscore, Norm};
use pcrobust::nmm::{
    grad_check, negative_loss, positive_loss, train_toy, Ablation, LossBreakdown, NmmConfig, TrainConfig,
    HISTORY_HEADER,
};
use pcrobust::synth::{toy_object, write_toy_corpus};
use rand::Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        let ok: bool = $cond;
        if !ok {
            return Err(format!($($fmt)+));
        }
    };
}

fn within_time(start: Instant, limit: Duration, what: &str) -> Result<(), String> {
    let took = start.elapsed();
    ensure!(took < limit, "{what} took {took:.1?}, limit {limit:?}");
    Ok(())
}

fn metric_oracle_equivalence() -> Outcome {
    let start = Instant::now();
    let mut rng = RngStream::from_parts(1, "acceptance", "metric-oracle");
    let pairs = 320;
    let mut worst = 0.0f64;
    for i in 0..pairs {
        let (n, m) = (rng.random_range(1..=512), rng.random_range(1..=512));
        let (a, b) = if i % 4 == 0 {
            (lattice_cloud(&mut rng, n), lattice_cloud(&mut rng, m))
        } else {
            (random_cloud(&mut rng, n), random_cloud(&mut rng, m))
        };
        let delta = rng.random_range(0.01..0.3);
        let (pa, pb) = (a.points(), b.points());
        let checks = [
            ("CD-L1", chamfer(&a, &b, Norm::L1), brute_chamfer(pa, pb, false)),
            ("CD-L2", chamfer(&a, &b, Norm::L2), brute_chamfer(pa, pb, true)),
            ("F-score", fscore(&a, &b, delta), brute_fscore(pa, pb, delta)),
            ("fidelity", fidelity(&a, &b), brute_fidelity(pa, pb)),
        ];
        for (name, got, want) in checks {
            let got = got.map_err(|e| e.to_string())?;
            let d = rel_diff(got, want);
            ensure!(d <= 1e-9, "pair {i} ({n}x{m}) {name}: {got} vs brute force {want}");
            worst = worst.max(d);
        }
    }
    within_time(start, Duration::from_secs(30), "oracle comparison")?;
    Ok(format!(
        "{pairs} pairs, worst relative difference {worst:.1e}, {:.1?}",
        start.elapsed()
    ))
}

fn metric_analytic_suite() -> Outcome {
    let e = |r: pcrobust::Result<f64>| r.map_err(|e| e.to_string());
    let mut rng = RngStream::from_parts(2, "acceptance", "metric-analytic");
    for _ in 0..20 {
        let n = rng.random_range(1..200);
        let a = random_cloud(&mut rng, n);
        let n = rng.random_range(1..200);
        let b = random_cloud(&mut rng, n);
        for norm in [Norm::L1, Norm::L2] {
            ensure!(e(chamfer(&a, &a, norm))? == 0.0, "CD(A, A) != 0");
            ensure!(
                e(chamfer(&a, &b, norm))? == e(chamfer(&b, &a, norm))?,
                "CD not symmetric"
            );
        }
        ensure!(e(fscore(&a, &a, 1e-6))? == 1.0, "fscore(A, A) != 1");
        let mut union = a.points().to_vec();
        union.extend_from_slice(b.points());
        let union = PointCloud::new(union).unwrap();
        ensure!(e(fidelity(&a, &union))? == 0.0, "fidelity(A, A u B) != 0");
    }
    let p = PointCloud::from_arrays(&[[0.0, 0.0, 0.0]]).unwrap();
    let q = PointCloud::from_arrays(&[[1.0, 0.0, 0.0]]).unwrap();
    ensure!(e(chamfer(&p, &q, Norm::L1))? == 2.0, "single-point CD-L1 != 2");
    ensure!(e(chamfer(&p, &q, Norm::L2))? == 2.0, "single-point CD-L2 != 2");
    let deltas = [0.005, 0.01, 0.02, 0.05, 0.1, 0.2, 0.5, 1.0, 2.0];
    for i in 0..100 {
        let n = rng.random_range(1..120);
        let a = random_cloud(&mut rng, n);
        let n = rng.random_range(1..120);
        let b = random_cloud(&mut rng, n);
        let mut last = 0.0;
        for d in deltas {
            let f = e(fscore(&a, &b, d))?;
            ensure!(f >= last, "pair {i}: fscore decreased from {last} to {f} at delta {d}");
            last = f;
        }
    }
    Ok("identity, symmetry, single-point value 2.0, fscore 1 and monotone, fidelity 0".into())
}

fn in_set<T: PartialEq>(v: &T, set: &[T]) -> bool {
    set.contains(v)
}

fn in_interval(v: f64, (lo, hi): (f64, f64)) -> bool {
    (lo..=hi).contains(&v)
}

fn check_domain(p: &CorruptionParams) -> Result<(), String> {
    let ok = match p {
        CorruptionParams::Eoi {
            objects,
            points,
            shapes,
            distance,
        } => {
            in_set(objects, &[1, 2, 3])
                && [(1, 16), (1, 12), (1, 8), (1, 4)].contains(&(points.num, points.den))
                && *shapes == 12
                && in_interval(*distance, (0.05, 0.2))
        }
        CorruptionParams::Oboo {
            objects,
            points,
            shapes,
            distance,
        } => {
            in_set(objects, &[1, 2, 3, 4])
                && [(1, 8), (1, 7), (1, 6), (1, 5), (1, 4), (1, 3)].contains(&(points.num, points.den))
                && *shapes == 12
                && in_interval(*distance, (0.05, 0.2))
        }
        CorruptionParams::Biw { distance } => in_interval(*distance, (0.01, 0.05)),
        CorruptionParams::Bif => true,
        CorruptionParams::Djt { jitter, trail } => {
            in_interval(*jitter, (0.01, 0.05)) && in_interval(*trail, (0.02, 0.04))
        }
        CorruptionParams::Tr { degrees } => degrees.iter().all(|&d| in_interval(d, (0.0, 10.0))),
        CorruptionParams::Is { scale } => in_interval(*scale, (0.25, 2.0)),
        CorruptionParams::Rcc { members } => {
            let mut kinds: Vec<CorruptionKind> = members.iter().map(|m| m.kind()).collect();
            let n = kinds.len();
            kinds.sort();
            kinds.dedup();
            if !(2..=7).contains(&n) || kinds.len() != n || kinds.contains(&CorruptionKind::Rcc) {
                return Err(format!("bad R_CC subset {kinds:?}"));
            }
            for m in members {
                check_domain(m)?;
            }
            true
        }
    };
    ensure!(ok, "out of domain: {p:?}");
    Ok(())
}

fn corruption_domain_conformance() -> Outcome {
    let per_kind = 10_000;
    let mut sizes = [0usize; 8];
    for kind in CorruptionKind::ALL {
        for i in 0..per_kind {
            let mut rng = RngStream::new(StreamKey::new(3, format!("obj{i}"), kind.tag()));
            let spec = sample_params(kind, &mut rng);
            ensure!(spec.kind() == kind, "sampled {} for {kind}", spec.kind());
            check_domain(&spec.params)?;
            if let CorruptionParams::Rcc { members } = &spec.params {
                sizes[members.len()] += 1;
            }
        }
    }
    let (lo, hi) = domain::COMBINATION_SIZE;
    ensure!((lo, hi) == (2, 7), "combination size bounds are {lo}..={hi}");
    ensure!(
        sizes[2..=7].iter().all(|&c| c > 0),
        "not every R_CC size occurred: {sizes:?}"
    );
    Ok(format!(
        "{per_kind} specs per kind in domain; R_CC sizes 2..7 seen {:?} times",
        &sizes[2..]
    ))
}

fn object_subsequence(cloud: &PointCloud) -> Vec<Point3> {
    cloud
        .iter_labeled()
        .filter(|(_, l)| *l == Label::Object)
        .map(|(p, _)| p)
        .collect()
}

fn is_subsequence(sub: &[Point3], of: &[Point3]) -> bool {
    let mut it = of.iter();
    sub.iter().all(|p| it.any(|q| q == p))
}

/// Smallest distance from each background point to the object projected
/// onto the background plane (the axis on which all background points agree).
fn background_clearance(object: &[Point3], background: &[Point3]) -> Result<f64, String> {
    let Some(&first) = background.first() else {
        return Ok(f64::INFINITY);
    };
    let axis = (0..3)
        .find(|&a| background.iter().all(|p| (p.axis(a) - first.axis(a)).abs() < 1e-12))
        .ok_or("background points are not planar")?;
    let shadow: Vec<Point3> = object.iter().map(|p| p.with_axis(axis, first.axis(axis))).collect();
    Ok(background
        .iter()
        .map(|&b| shadow.iter().map(|&s| s.dist(b)).fold(f64::INFINITY, f64::min))
        .fold(f64::INFINITY, f64::min))
}

fn pairwise_ratio_error(a: &[Point3], b: &[Point3], s: f64) -> f64 {
    let mut worst = 0.0f64;
    for i in (0..a.len()).step_by(7) {
        for j in (i + 1..a.len()).step_by(13) {
            worst = worst.max((b[i].dist(b[j]) - s * a[i].dist(a[j])).abs());
        }
    }
    worst
}

fn corruption_structural_invariants() -> Outcome {
    let mut runs = 0;
    let mut background = 0;
    for obj_i in 0..6 {
        let id = format!("inv{obj_i}");
        let obj = toy_object(&id, 4, 600).map_err(|e| e.to_string())?;
        let input = obj.partial.clone();
        let aabb = obj.complete.aabb().unwrap();
        let knobs = Knobs {
            floor_reference: Some((aabb.min.y, aabb.max.y)),
            ..Knobs::default()
        };
        let r_occ = knobs.r_occ_factor * mean_nn_distance(input.points()).unwrap();
        for seed in 0..4u64 {
            for kind in CorruptionKind::ALL {
                let mut rng = RngStream::new(StreamKey::new(seed, id.as_str(), kind.tag()));
                let spec = sample_params(kind, &mut rng);
                let out = apply(&input, &spec, &knobs, &mut rng).map_err(|e| e.to_string())?;
                let (src, dst) = (input.points(), out.cloud.points());
                let ctx = format!("{id} seed {seed} {kind}");
                match &spec.params {
                    CorruptionParams::Eoi { .. } | CorruptionParams::Biw { .. } | CorruptionParams::Bif => {
                        ensure!(object_subsequence(&out.cloud) == src, "{ctx}: object points changed");
                        ensure!(dst[..src.len()] == *src, "{ctx}: object points not kept in front");
                        if !matches!(spec.params, CorruptionParams::Eoi { .. }) {
                            let added = &dst[src.len()..];
                            let clearance = background_clearance(src, added)?;
                            ensure!(clearance > r_occ, "{ctx}: background {clearance} within r_occ {r_occ}");
                            background += added.len();
                        }
                    }
                    CorruptionParams::Oboo { points, .. } => {
                        let n = src.len();
                        let want = (n as f64 * points.num as f64 / points.den as f64 + 0.5).floor() as usize;
                        ensure!(n - dst.len() == want, "{ctx}: removed {} not {want}", n - dst.len());
                        ensure!(is_subsequence(dst, src), "{ctx}: output not a subset of the input");
                    }
                    CorruptionParams::Tr { .. } => {
                        ensure!(dst.len() == src.len(), "{ctx}: count changed");
                        let err = pairwise_ratio_error(src, dst, 1.0);
                        ensure!(err <= 1e-9, "{ctx}: pairwise distance changed by {err}");
                    }
                    CorruptionParams::Is { scale } => {
                        ensure!(dst.len() == src.len(), "{ctx}: count changed");
                        let err = pairwise_ratio_error(src, dst, *scale);
                        ensure!(err <= 1e-9, "{ctx}: scaled distance off by {err}");
                    }
                    CorruptionParams::Djt { jitter, trail } => {
                        ensure!(dst.len() == src.len(), "{ctx}: count changed");
                        let bound = jitter + trail + 1e-12;
                        let max = src.iter().zip(dst).map(|(a, b)| a.dist(*b)).fold(0.0, f64::max);
                        ensure!(max <= bound, "{ctx}: displacement {max} > {bound}");
                    }
                    CorruptionParams::Rcc { .. } => {
                        ensure!(!dst.is_empty(), "{ctx}: empty result");
                    }
                }
                runs += 1;
            }
        }
    }
    ensure!(background > 0, "no wall or floor points were generated at all");
    Ok(format!(
        "{runs} corruptions checked, {background} wall/floor points clear of the footprint"
    ))
}

fn dataset_determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let raw = dir.path().join("raw");
    write_toy_corpus(&raw, [6, 2, 2], 5, 512).map_err(|e| e.to_string())?;
    let mut trees = Vec::new();
    for threads in [1, 4] {
        let out = dir.path().join(format!("out{threads}"));
        let opts = BuildOptions {
            threads: Some(threads),
            recipe: Recipe::default(),
        };
        build_dataset(&raw, &out, 99, &opts).map_err(|e| e.to_string())?;
        trees.push(tree_bytes(&out));
    }
    ensure!(trees[0] == trees[1], "single- and multi-threaded builds differ");
    let text = String::from_utf8(trees[0]["manifest.txt"].clone()).map_err(|e| e.to_string())?;
    let manifest = DatasetManifest::parse(&text).map_err(|e| e.to_string())?;
    ensure!(manifest.objects() == 10, "{} objects", manifest.objects());
    ensure!(manifest.total() == 10 * 8, "{} clouds", manifest.total());
    ensure!(
        manifest.per_kind().values().all(|&n| n == 10),
        "per-kind counts {:?}",
        manifest.per_kind()
    );
    Ok(format!(
        "{} files byte-identical across 1 and 4 threads; 10 objects x 8 = {} clouds",
        trees[0].len(),
        manifest.total()
    ))
}

fn nmm_gradient_verification() -> Outcome {
    let start = Instant::now();
    let cfg = NmmConfig {
        batch: 2,
        length: 4,
        dim: 16,
        ..Default::default()
    };
    let r0 = grad_check(&cfg, 0).map_err(|e| e.to_string())?;
    ensure!(r0.passed(), "seed 0 failed:\n{}", r0.to_text());
    ensure!(r0.max_rel_err() < 1e-4, "max relative error {}", r0.max_rel_err());
    let tensors: Vec<&str> = r0
        .entries
        .iter()
        .filter(|e| e.objective == "l_nmm")
        .map(|e| e.tensor.as_str())
        .collect();
    for name in [
        "attn.query.w",
        "ln1.gain",
        "ffn.up.w",
        "conv1.w",
        "conv3.w",
        "conv5.w",
        "w_m",
        "merge.w",
    ] {
        ensure!(tensors.contains(&name), "{name} not checked");
    }
    let r1 = grad_check(&cfg, 1).map_err(|e| e.to_string())?;
    ensure!(
        r1.passed() && r1.skipped() == 0,
        "seed 1: {:e}, {} skipped",
        r1.max_rel_err(),
        r1.skipped()
    );
    within_time(start, Duration::from_secs(60), "gradient check")?;
    Ok(format!(
        "max relative error {:.1e} (seed 0), {:.1e} (seed 1, no kinks skipped), {:.1?}",
        r0.max_rel_err(),
        r1.max_rel_err(),
        start.elapsed()
    ))
}

fn unit_rows(rows: &[usize], d: usize, sign: f64) -> Array3<f64> {
    let mut x = Array3::zeros((1, rows.len(), d));
    for (m, &axis) in rows.iter().enumerate() {
        x[[0, m, axis]] = sign;
    }
    x
}

fn nmm_analytic_losses() -> Outcome {
    let e = |r: pcrobust::Result<f64>| r.map_err(|e| e.to_string());
    let clean = unit_rows(&[0, 1, 2, 3], 8, 1.0);
    ensure!(e(positive_loss(&clean, &clean))? == -1.0, "aligned l_pos != -1");
    ensure!(
        e(positive_loss(&clean, &unit_rows(&[4, 5, 6, 7], 8, 1.0)))? == 0.0,
        "orthogonal l_pos != 0"
    );
    ensure!(
        e(positive_loss(&clean, &unit_rows(&[0, 1, 2, 3], 8, -1.0)))? == 1.0,
        "anti-aligned l_pos != 1"
    );
    let noisy = unit_rows(&[4, 5, 6, 7], 8, 1.0);
    let l_neg = e(negative_loss(&clean, &noisy, 1.0))?;
    ensure!((l_neg - 12f64.ln()).abs() < 1e-12, "orthogonal l_neg {l_neg} != log 12");
    let b = LossBreakdown::new(-0.75, l_neg, 3.25);
    ensure!(b.l_nmm == b.l_pos + b.l_neg, "l_nmm != l_pos + l_neg");
    ensure!(b.l_total == b.l_completion + b.l_nmm, "l_total != l_completion + l_nmm");
    Ok(format!(
        "l_pos = -1/0/+1, l_neg = {l_neg:.12} = log 12, sum identities exact"
    ))
}

fn toy_separation() -> Outcome {
    let start = Instant::now();
    let cfg = TrainConfig::default();
    ensure!(
        cfg.seed == 0 && cfg.steps <= 500,
        "default config is not seed 0 / <= 500 steps"
    );
    let history = train_toy(&cfg).map_err(|e| e.to_string())?;
    within_time(start, Duration::from_secs(120), "toy training")?;
    let sep = history.separation();
    ensure!(sep >= 0.2, "separation {sep} < 0.2");
    let l: Vec<f64> = history.records.iter().map(|r| r.eval.losses.l_total).collect();
    let mut worst = 0.0f64;
    for i in 0..l.len() {
        for j in i + 1..l.len().min(i + 51) {
            worst = worst.max((l[j] - l[i]) / l[i].abs());
        }
    }
    ensure!(
        worst <= 0.10,
        "l_total rose {:.1}% within a 50-step window",
        worst * 100.0
    );
    Ok(format!(
        "separation {sep:.3} after {} steps, worst 50-step rise {:.2}%, {:.1?}",
        cfg.steps,
        worst * 100.0,
        start.elapsed()
    ))
}

fn ablation_identities() -> Outcome {
    let mut notes = Vec::new();
    for name in ["none", "clean-only", "noisy-only", "no-attention", "single-scale"] {
        let cfg = TrainConfig {
            nmm: NmmConfig {
                ablation: Ablation::parse(name).map_err(|e| e.to_string())?,
                ..Default::default()
            },
            steps: 40,
            ..Default::default()
        };
        let history = train_toy(&cfg).map_err(|e| format!("{name}: {e}"))?;
        let csv = history.to_csv();
        let mut lines = csv.lines();
        ensure!(lines.next() == Some(HISTORY_HEADER), "{name}: unexpected CSV header");
        let fields = HISTORY_HEADER.split(',').count();
        ensure!(
            lines.clone().count() == 40 && lines.all(|l| l.split(',').count() == fields),
            "{name}: malformed CSV rows"
        );
        if name == "noisy-only" {
            let r = history.max_residual();
            ensure!(r <= 1e-12, "noisy-only residual {r:e}");
            notes.push(format!("noisy-only residual {r:.1e}"));
        }
    }
    notes.push("5 variants share one CSV schema".into());
    Ok(notes.join("; "))
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("metric oracle equivalence", metric_oracle_equivalence),
        ("metric analytic suite", metric_analytic_suite),
        ("corruption domain conformance", corruption_domain_conformance),
        ("corruption structural invariants", corruption_structural_invariants),
        ("dataset determinism", dataset_determinism),
        ("NMM gradient verification", nmm_gradient_verification),
        ("NMM analytic loss values", nmm_analytic_losses),
        ("toy separation", toy_separation),
        ("ablation identities", ablation_identities),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        match check() {
            Ok(detail) => println!("[PASS] {}. {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("[FAIL] {}. {name}: {why}", i + 1);
            }
        }
    }
    println!(
        "acceptance: {} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
