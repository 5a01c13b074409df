//! Drives the command-line front end in-process: corrupt a directory,
//! evaluate the corrupted clouds against the originals, run the NMM demo.

use clap::Parser;
use pcrobust::cli::{run, Cli};
use pcrobust::synth::toy_object;

fn call(args: &[&str]) {
    let cli = Cli::parse_from(std::iter::once("pcrobust").chain(args.iter().copied()));
    if let Err(e) = run(cli) {
        eprintln!("exit {}: {}", e.code, e.message);
        std::process::exit(e.code);
    }
}

fn main() -> pcrobust::Result<()> {
    let root = std::env::temp_dir().join("pcrobust-cli-pipeline");
    std::fs::remove_dir_all(&root).ok();
    let clean = root.join("clean");
    for (i, name) in ["a", "b", "c"].iter().enumerate() {
        let obj = toy_object(name, i as u64, 1024)?;
        pcrobust::geom::io::write_cloud(&clean.join(format!("{name}.ply")), &obj.complete)?;
    }
    let s = |p: &std::path::Path| p.to_string_lossy().into_owned();

    call(&[
        "corrupt",
        "--input",
        &s(&clean),
        "--kind",
        "all",
        "--seed",
        "1",
        "--out",
        &s(&root.join("pred")),
    ]);
    // Ground truth laid out like the predictions: one copy per category.
    for kind in ["eoi", "biw", "bif", "oboo", "djt", "tr", "is", "rcc"] {
        for name in ["a", "b", "c"] {
            let dst = root.join("gt").join(kind).join(format!("{name}.ply"));
            std::fs::create_dir_all(dst.parent().unwrap()).ok();
            std::fs::copy(clean.join(format!("{name}.ply")), dst).ok();
        }
    }
    std::fs::remove_file(root.join("pred/params.txt")).ok();
    call(&[
        "eval",
        "--pred",
        &s(&root.join("pred")),
        "--gt",
        &s(&root.join("gt")),
        "--report",
        &s(&root.join("report.csv")),
        "--run",
        "identity",
    ]);
    call(&["nmm-demo", "--steps", "40", "--out", &s(&root.join("history.csv"))]);
    std::fs::remove_dir_all(&root).ok();
    Ok(())
}
