//! End-to-end runs of the `pcrobust` binary.

mod common;

use std::path::Path;
use std::process::{Command, Output};

use common::*;
use pcrobust::corrupt::DatasetManifest;
use pcrobust::geom::io::{read_cloud, write_cloud};
use pcrobust::geom::{PointCloud, RngStream};
use pcrobust::metrics::{aggregate, evaluate, Category, PerCloud};
use pcrobust::synth::{toy_object, write_toy_corpus};
use tempfile::tempdir;

fn pcrobust(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pcrobust"))
        .args(args)
        .env_remove("PCROBUST_THREADS")
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn write_object(path: &Path, id: &str, seed: u64) {
    write_cloud(path, &toy_object(id, seed, 512).unwrap().complete).unwrap();
}

#[test]
fn usage_errors_exit_2() {
    let dir = tempdir().unwrap();
    let cloud = dir.path().join("a.ply");
    write_object(&cloud, "a", 0);
    let out = dir.path().join("out");
    assert_eq!(code(&pcrobust(&[])), 2);
    assert_eq!(
        code(&pcrobust(&[
            "corrupt",
            "--input",
            s(&cloud),
            "--kind",
            "nope",
            "--out",
            s(&out)
        ])),
        2
    );
    let missing = dir.path().join("missing.ply");
    let r = pcrobust(&["corrupt", "--input", s(&missing), "--kind", "is", "--out", s(&out)]);
    assert_eq!(code(&r), 2);
    assert!(String::from_utf8_lossy(&r.stderr).contains("missing.ply"));
    assert_eq!(code(&pcrobust(&["--help"])), 0);
}

#[test]
fn corrupt_is_deterministic_and_covers_all_kinds() {
    let dir = tempdir().unwrap();
    let cloud = dir.path().join("chair.xyz");
    write_object(&cloud, "chair", 3);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        let r = pcrobust(&[
            "corrupt",
            "--input",
            s(&cloud),
            "--kind",
            "is",
            "--seed",
            "0",
            "--out",
            s(out),
        ]);
        assert_eq!(code(&r), 0, "{}", String::from_utf8_lossy(&r.stderr));
    }
    assert_eq!(tree_bytes(&a), tree_bytes(&b));
    assert!(a.join("is/chair.xyz").is_file());

    let all = dir.path().join("all");
    assert_eq!(
        code(&pcrobust(&[
            "corrupt",
            "--input",
            s(&cloud),
            "--kind",
            "all",
            "--out",
            s(&all)
        ])),
        0
    );
    let clouds: Vec<String> = tree_bytes(&all).into_keys().filter(|k| k.ends_with(".xyz")).collect();
    assert_eq!(clouds.len(), 8, "{clouds:?}");
    let sidecar = std::fs::read_to_string(all.join("params.txt")).unwrap();
    assert_eq!(sidecar.lines().count(), 8);
    assert!(sidecar.lines().all(|l| l.starts_with("source_id=chair\tkind=")));
}

#[test]
fn pinned_zero_rotation_is_identity() {
    let dir = tempdir().unwrap();
    let cloud = dir.path().join("obj.xyz");
    write_object(&cloud, "obj", 9);
    let recipe = dir.path().join("recipe.txt");
    std::fs::write(&recipe, "# identity rotation\ntr.theta = 0, 0, 0\n").unwrap();
    let out = dir.path().join("out");
    let r = pcrobust(&[
        "corrupt",
        "--input",
        s(&cloud),
        "--kind",
        "tr",
        "--seed",
        "5",
        "--out",
        s(&out),
        "--recipe",
        s(&recipe),
    ]);
    assert_eq!(code(&r), 0, "{}", String::from_utf8_lossy(&r.stderr));
    let before = read_cloud(&cloud).unwrap();
    let after = read_cloud(&out.join("tr/obj.xyz")).unwrap();
    assert_eq!(before.points(), after.points());

    std::fs::write(&recipe, "tr.theta = 0, 0, 45\n").unwrap();
    let r = pcrobust(&[
        "corrupt",
        "--input",
        s(&cloud),
        "--kind",
        "tr",
        "--out",
        s(&out),
        "--recipe",
        s(&recipe),
    ]);
    assert_eq!(code(&r), 2);
}

#[test]
fn dataset_build_counts_and_idempotence() {
    let dir = tempdir().unwrap();
    let raw = dir.path().join("raw");
    write_toy_corpus(&raw, [3, 1, 1], 1, 256).unwrap();
    let out = dir.path().join("out");
    let build = |threads: &str| {
        let r = pcrobust(&[
            "dataset-build",
            "--input",
            s(&raw),
            "--out",
            s(&out),
            "--seed",
            "7",
            "--threads",
            threads,
        ]);
        assert_eq!(code(&r), 0, "{}", String::from_utf8_lossy(&r.stderr));
        tree_bytes(&out)
    };
    let first = build("1");
    let second = build("3");
    assert_eq!(first, second);

    let manifest = DatasetManifest::parse(&String::from_utf8(first["manifest.txt"].clone()).unwrap()).unwrap();
    let totals: Vec<usize> = manifest.per_split().into_values().collect();
    assert_eq!(totals, vec![24, 8, 8]);
    assert_eq!(manifest.total(), 40);
    assert_eq!(manifest.objects(), 5);
    for e in &manifest.entries {
        assert!(first.contains_key(&e.path), "{}", e.path);
    }

    std::fs::remove_dir_all(raw.join("val")).unwrap();
    let r = pcrobust(&["dataset-build", "--input", s(&raw), "--out", s(&dir.path().join("o2"))]);
    assert_eq!(code(&r), 2);
}

#[test]
fn dataset_build_reads_thread_count_from_environment() {
    let dir = tempdir().unwrap();
    let raw = dir.path().join("raw");
    write_toy_corpus(&raw, [1, 1, 1], 2, 128).unwrap();
    let r = Command::new(env!("CARGO_BIN_EXE_pcrobust"))
        .args(["dataset-build", "--input", s(&raw), "--out", s(&dir.path().join("o"))])
        .env("PCROBUST_THREADS", "0")
        .output()
        .unwrap();
    assert_eq!(code(&r), 2, "zero threads from the environment is rejected");
}

#[test]
fn eval_identity_single_point_and_orphans() {
    let dir = tempdir().unwrap();
    let gt = dir.path().join("gt");
    for (i, name) in ["a", "b"].iter().enumerate() {
        write_object(&gt.join(format!("{name}.ply")), name, i as u64);
        write_object(&gt.join(format!("tr/{name}.ply")), name, 10 + i as u64);
    }
    let report = dir.path().join("r/same.csv");
    let r = pcrobust(&[
        "eval",
        "--pred",
        s(&gt),
        "--gt",
        s(&gt),
        "--report",
        s(&report),
        "--delta",
        "0.01",
    ]);
    assert_eq!(code(&r), 0, "{}", String::from_utf8_lossy(&r.stderr));
    let csv = std::fs::read_to_string(&report).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next(),
        Some("run,category,count,cd_l1,cd_l2,fscore,fidelity,delta")
    );
    assert_eq!(lines.next(), Some("run,clean,2,0,0,1,,0.01"));
    assert_eq!(lines.next(), Some("run,T_R,2,0,0,1,,0.01"));
    assert!(report.with_extension("txt").is_file());

    let (p, g) = (dir.path().join("p1"), dir.path().join("g1"));
    write_cloud(&p.join("x.xyz"), &PointCloud::from_arrays(&[[0.0, 0.0, 0.0]]).unwrap()).unwrap();
    write_cloud(&g.join("x.xyz"), &PointCloud::from_arrays(&[[1.0, 0.0, 0.0]]).unwrap()).unwrap();
    let report = dir.path().join("single.csv");
    assert_eq!(
        code(&pcrobust(&[
            "eval",
            "--pred",
            s(&p),
            "--gt",
            s(&g),
            "--report",
            s(&report)
        ])),
        0
    );
    let csv = std::fs::read_to_string(&report).unwrap();
    let row: Vec<&str> = csv.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(row[3], "2000");
    assert_eq!(row[4], "2000");

    write_cloud(&p.join("y.xyz"), &PointCloud::from_arrays(&[[0.0, 0.0, 0.0]]).unwrap()).unwrap();
    let r = pcrobust(&["eval", "--pred", s(&p), "--gt", s(&g), "--report", s(&report)]);
    assert_eq!(code(&r), 3);
    assert!(String::from_utf8_lossy(&r.stderr).contains("y (only in"));

    let r = pcrobust(&[
        "eval",
        "--pred",
        s(&g),
        "--gt",
        s(&g),
        "--report",
        s(&report),
        "--fidelity",
    ]);
    assert_eq!(code(&r), 2);
    let r = pcrobust(&[
        "eval",
        "--pred",
        s(&g),
        "--gt",
        s(&g),
        "--report",
        s(&report),
        "--delta",
        "-1",
    ]);
    assert_eq!(code(&r), 2);
}

#[test]
fn eval_report_matches_oracle_values() {
    let dir = tempdir().unwrap();
    let (pd, gd, id) = (dir.path().join("pred"), dir.path().join("gt"), dir.path().join("in"));
    let mut rng = RngStream::from_parts(12, "eval", "oracle");
    let mut expected = Vec::new();
    for (i, rel) in ["clean_0", "clean_1", "eoi/x", "eoi/y", "eoi/z", "rcc/w"]
        .iter()
        .enumerate()
    {
        let (pred, gt, inp) = (
            random_cloud(&mut rng, 20 + i * 7),
            random_cloud(&mut rng, 40),
            random_cloud(&mut rng, 10),
        );
        for (d, c) in [(&pd, &pred), (&gd, &gt), (&id, &inp)] {
            write_cloud(&d.join(format!("{rel}.xyz")), c).unwrap();
        }
        let (p, g, n) = (pred.points(), gt.points(), inp.points());
        let mut value = evaluate(&pred, &gt, Some(&inp), 0.2).unwrap();
        value.cd_l1 = brute_chamfer(p, g, false);
        value.cd_l2 = brute_chamfer(p, g, true);
        value.fscore = brute_fscore(p, g, 0.2);
        value.fidelity = Some(brute_fidelity(n, p));
        let category = rel.split('/').next().unwrap().parse().unwrap_or(Category::Clean);
        expected.push(PerCloud {
            run: "oracle".into(),
            category,
            value,
        });
    }
    let want = aggregate(&expected).unwrap();
    let report = dir.path().join("oracle.csv");
    let r = pcrobust(&[
        "eval",
        "--pred",
        s(&pd),
        "--gt",
        s(&gd),
        "--input",
        s(&id),
        "--fidelity",
        "--delta",
        "0.2",
        "--report",
        s(&report),
        "--run",
        "oracle",
        "--threads",
        "3",
    ]);
    assert_eq!(code(&r), 0, "{}", String::from_utf8_lossy(&r.stderr));
    let got = std::fs::read_to_string(&report).unwrap();
    let want_csv = want.to_csv();
    assert_eq!(got.lines().count(), want_csv.lines().count());
    for (g, w) in got.lines().zip(want_csv.lines()).skip(1) {
        let (g, w): (Vec<&str>, Vec<&str>) = (g.split(',').collect(), w.split(',').collect());
        assert_eq!(g[..3], w[..3]);
        for k in 3..8 {
            let (a, b): (f64, f64) = (g[k].parse().unwrap(), w[k].parse().unwrap());
            assert!(rel_diff(a, b) < 1e-9, "column {k}: {a} vs {b}");
        }
    }
}

#[test]
fn nmm_demo_runs_and_reports_failures() {
    let dir = tempdir().unwrap();
    let csv = dir.path().join("h.csv");
    let run = |extra: &[&str]| {
        let mut args = vec!["nmm-demo", "--steps", "12", "--out", s(&csv)];
        args.extend_from_slice(extra);
        pcrobust(&args)
    };
    let r = run(&[]);
    assert_eq!(code(&r), 0, "{}", String::from_utf8_lossy(&r.stderr));
    let first = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(first.lines().count(), 13);
    assert_eq!(code(&run(&["--t", "1", "--seed", "0"])), 0);
    assert_eq!(std::fs::read_to_string(&csv).unwrap(), first);

    assert_eq!(code(&run(&["--d", "60", "--heads", "8"])), 2);
    assert_eq!(code(&run(&["--ablation", "bogus"])), 2);
    assert_eq!(code(&run(&["--t", "0"])), 2);
    assert_eq!(code(&run(&["--lr", "1e300"])), 4);

    assert_eq!(code(&run(&["--ablation", "noisy-only"])), 0);
    let text = std::fs::read_to_string(&csv).unwrap();
    let header: Vec<&str> = text.lines().next().unwrap().split(',').collect();
    let col = header.iter().position(|h| *h == "residual").unwrap();
    for line in text.lines().skip(1) {
        let residual: f64 = line.split(',').nth(col).unwrap().parse().unwrap();
        assert!(residual <= 1e-12);
    }
}
