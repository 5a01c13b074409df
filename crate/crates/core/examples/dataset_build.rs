//! Builds a corrupted dataset from a small synthetic corpus and checks that
//! the build is independent of the thread count.

use std::fs;

use pcrobust::corrupt::{build_dataset, BuildOptions, DatasetManifest};
use pcrobust::synth::write_toy_corpus;

fn main() -> pcrobust::Result<()> {
    let root = std::env::temp_dir().join("pcrobust-dataset-build");
    fs::remove_dir_all(&root).ok();
    let ids = write_toy_corpus(&root.join("raw"), [4, 1, 1], 11, 1024)?;
    println!("corpus: {} objects, e.g. {}", ids.len(), ids[0]);

    let mut manifests = Vec::new();
    for threads in [1, 4] {
        let out = root.join(format!("out{threads}"));
        let opts = BuildOptions {
            threads: Some(threads),
            ..Default::default()
        };
        let manifest = build_dataset(&root.join("raw"), &out, 2024, &opts)?;
        println!(
            "{threads} thread(s): {} objects, {} corrupted clouds",
            manifest.objects(),
            manifest.total()
        );
        manifests.push(
            fs::read_to_string(out.join("manifest.txt")).map_err(|e| pcrobust::Error::Io {
                path: out.join("manifest.txt"),
                source: e,
            })?,
        );
    }
    println!("manifests identical: {}", manifests[0] == manifests[1]);

    let manifest = DatasetManifest::parse(&manifests[0])?;
    for (split, n) in manifest.per_split() {
        println!("  {split}: {n}");
    }
    for (kind, n) in manifest.per_kind() {
        println!("  {kind}: {n}");
    }
    if let Some(e) = manifest.entries.first() {
        println!("first entry: {} {} {} -> {}", e.source_id, e.kind, e.params, e.path);
    }
    fs::remove_dir_all(&root).ok();
    Ok(())
}
