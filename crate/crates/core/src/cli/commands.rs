use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use walkdir::WalkDir;

use crate::corrupt::{self, build_dataset, sample_params_with, BuildOptions, CorruptionKind, Recipe};
use crate::error::Error;
use crate::geom::io::{read_cloud, write_cloud, CloudFormat};
use crate::geom::StreamKey;
use crate::metrics::{aggregate, evaluate, Category, PerCloud};
use crate::nmm::{grad_check, train_toy, Ablation, NmmConfig, TrainConfig};

use super::{CliError, CliResult, CorruptArgs, DatasetArgs, EvalArgs, NmmDemoArgs, EXIT_NUMERICAL, EXIT_PAIRING};

fn load_recipe(path: Option<&Path>) -> Result<Recipe, CliError> {
    match path {
        Some(p) => Ok(Recipe::load(p)?),
        None => Ok(Recipe::default()),
    }
}

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    Error::io(path, e).into()
}

/// Relative `/`-separated path without extension.
fn stem_key(root: &Path, path: &Path) -> String {
    let rel = path.strip_prefix(root).unwrap_or(path);
    rel.with_extension("").to_string_lossy().replace('\\', "/")
}

/// Cloud files under `dir`, keyed by relative stem.
fn scan_clouds(dir: &Path) -> Result<BTreeMap<String, PathBuf>, CliError> {
    if !dir.is_dir() {
        return Err(CliError::usage(format!("{}: not a directory", dir.display())));
    }
    let mut out = BTreeMap::new();
    for entry in WalkDir::new(dir).sort_by_file_name() {
        let entry = entry.map_err(|e| {
            let p = e.path().unwrap_or(dir).to_path_buf();
            io_err(&p, e.into())
        })?;
        if !entry.file_type().is_file() || CloudFormat::from_path(entry.path()).is_none() {
            continue;
        }
        let key = stem_key(dir, entry.path());
        if let Some(prev) = out.insert(key.clone(), entry.path().to_path_buf()) {
            return Err(CliError::usage(format!(
                "ambiguous cloud name {key:?}: {} and {}",
                prev.display(),
                entry.path().display()
            )));
        }
    }
    Ok(out)
}

fn thread_pool(threads: Option<usize>) -> Result<rayon::ThreadPool, CliError> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        if n == 0 {
            return Err(CliError::usage("thread count must be positive"));
        }
        b = b.num_threads(n);
    }
    b.build().map_err(|e| CliError::usage(format!("thread pool: {e}")))
}

pub fn cmd_corrupt(args: &CorruptArgs) -> CliResult {
    let kinds: Vec<CorruptionKind> = if args.kind.eq_ignore_ascii_case("all") {
        CorruptionKind::ALL.to_vec()
    } else {
        vec![args.kind.parse().map_err(|e: Error| CliError::usage(e.to_string()))?]
    };
    let recipe = load_recipe(args.recipe.as_deref())?;
    let inputs: Vec<(String, PathBuf)> = if args.input.is_file() {
        if CloudFormat::from_path(&args.input).is_none() {
            return Err(CliError::usage(format!(
                "{}: expected a .ply, .xyz or .txt file",
                args.input.display()
            )));
        }
        let id = args
            .input
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        vec![(id, args.input.clone())]
    } else if args.input.is_dir() {
        scan_clouds(&args.input)?.into_iter().collect()
    } else {
        return Err(CliError::usage(format!(
            "{}: no such file or directory",
            args.input.display()
        )));
    };

    let mut sidecar = String::new();
    for (id, path) in &inputs {
        let cloud = read_cloud(path)?;
        let ext = CloudFormat::from_path(path).map_or("ply", |f| f.extension());
        for &kind in &kinds {
            let key = StreamKey::new(args.seed, id.as_str(), kind.tag());
            let mut rng = key.stream();
            let spec = sample_params_with(kind, &recipe, &mut rng)?;
            let result = corrupt::apply(&cloud, &spec, &recipe.knobs, &mut rng)?;
            let rel = format!("{}/{id}.{ext}", kind.short());
            write_cloud(&args.out.join(&rel), &result.cloud)?;
            let st = result.stats;
            let _ = writeln!(
                sidecar,
                "source_id={id}\tkind={kind}\tparams={}\tseed={}\tpath={rel}\tadded={}\tremoved={}\tdisplaced={}",
                spec.params.to_kv(),
                key.seed_u64(),
                st.added,
                st.removed,
                st.displaced
            );
        }
    }
    let side = args.out.join("params.txt");
    fs::write(&side, sidecar).map_err(|e| io_err(&side, e))?;
    println!(
        "wrote {} corrupted clouds to {}",
        inputs.len() * kinds.len(),
        args.out.display()
    );
    Ok(())
}

pub fn cmd_dataset_build(args: &DatasetArgs) -> CliResult {
    let options = BuildOptions {
        threads: args.threads,
        recipe: load_recipe(args.recipe.as_deref())?,
    };
    if options.threads == Some(0) {
        return Err(CliError::usage("thread count must be positive"));
    }
    let manifest = build_dataset(&args.input, &args.out, args.seed, &options)?;
    let splits: Vec<String> = manifest
        .per_split()
        .into_iter()
        .map(|(s, n)| format!("{s}={n}"))
        .collect();
    println!(
        "{} objects -> {} clouds ({})",
        manifest.objects(),
        manifest.total(),
        splits.join(", ")
    );
    Ok(())
}

/// Files matched by relative stem across directories.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Pairing {
    /// `(key, path in each directory)` for keys present everywhere.
    pub pairs: Vec<(String, Vec<PathBuf>)>,
    /// Keys missing from at least one directory, with the directory they
    /// were found in.
    pub orphans: Vec<(String, PathBuf)>,
}

/// Matches cloud files across `dirs` by relative path stem.
pub fn pair_files(dirs: &[&Path]) -> Result<Pairing, CliError> {
    let scans: Vec<BTreeMap<String, PathBuf>> = dirs.iter().map(|d| scan_clouds(d)).collect::<Result<_, _>>()?;
    let mut all: BTreeMap<&str, ()> = BTreeMap::new();
    for s in &scans {
        for k in s.keys() {
            all.insert(k.as_str(), ());
        }
    }
    let mut pairing = Pairing::default();
    for key in all.keys() {
        let found: Vec<Option<&PathBuf>> = scans.iter().map(|s| s.get(*key)).collect();
        if found.iter().all(|f| f.is_some()) {
            pairing
                .pairs
                .push((key.to_string(), found.into_iter().flatten().cloned().collect()));
        } else {
            for (dir, f) in dirs.iter().zip(&found) {
                if f.is_some() {
                    pairing.orphans.push((key.to_string(), dir.to_path_buf()));
                }
            }
        }
    }
    Ok(pairing)
}

/// Report column for a relative key: the first directory component naming
/// a category, otherwise `clean`.
fn category_of(key: &str) -> Category {
    let mut parts: Vec<&str> = key.split('/').collect();
    parts.pop();
    parts
        .into_iter()
        .find_map(|p| p.parse().ok())
        .unwrap_or(Category::Clean)
}

pub fn cmd_eval(args: &EvalArgs) -> CliResult {
    if args.fidelity && args.input.is_none() {
        return Err(CliError::usage("--fidelity requires --input"));
    }
    if !args.delta.is_finite() || args.delta <= 0.0 {
        return Err(CliError::usage(format!("--delta must be positive, got {}", args.delta)));
    }
    let mut dirs: Vec<&Path> = vec![&args.pred, &args.gt];
    if args.fidelity {
        dirs.extend(args.input.as_deref());
    }
    let pairing = pair_files(&dirs)?;
    if !pairing.orphans.is_empty() {
        let mut msg = String::from("unpaired files:");
        for (key, dir) in &pairing.orphans {
            let _ = write!(msg, "\n  {key} (only in {})", dir.display());
        }
        return Err(CliError {
            code: EXIT_PAIRING,
            message: msg,
        });
    }
    if pairing.pairs.is_empty() {
        return Err(CliError::usage("no cloud files to evaluate"));
    }

    let pool = thread_pool(args.threads)?;
    let per_cloud: Vec<PerCloud> = pool.install(|| {
        pairing
            .pairs
            .par_iter()
            .map(|(key, paths)| -> Result<PerCloud, Error> {
                let pred = read_cloud(&paths[0])?;
                let gt = read_cloud(&paths[1])?;
                let input = paths.get(2).map(|p| read_cloud(p)).transpose()?;
                Ok(PerCloud {
                    run: args.run.clone(),
                    category: category_of(key),
                    value: evaluate(&pred, &gt, input.as_ref(), args.delta)?,
                })
            })
            .collect::<Result<_, _>>()
    })?;
    let report = aggregate(&per_cloud)?;

    if let Some(dir) = args.report.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    }
    fs::write(&args.report, report.to_csv()).map_err(|e| io_err(&args.report, e))?;
    let table_path = table_path(&args.report);
    let table = report.to_table();
    fs::write(&table_path, &table).map_err(|e| io_err(&table_path, e))?;
    print!("{table}");
    Ok(())
}

fn table_path(report: &Path) -> PathBuf {
    if report.extension().is_some_and(|e| e == "txt") {
        report.with_extension("table.txt")
    } else {
        report.with_extension("txt")
    }
}

pub fn cmd_nmm_demo(args: &NmmDemoArgs) -> CliResult {
    let ablation = Ablation::parse(&args.ablation).map_err(|e| CliError::usage(e.to_string()))?;
    let nmm = NmmConfig {
        batch: args.b,
        length: args.l,
        dim: args.d,
        heads: args.heads,
        temperature: args.t,
        ablation,
    };
    nmm.validate().map_err(|e| CliError::usage(e.to_string()))?;
    if args.b * args.l < 2 {
        return Err(CliError::usage("--b * --l must be at least 2"));
    }
    let train = TrainConfig {
        nmm,
        steps: args.steps,
        lr: args.lr,
        seed: args.seed,
    };
    if args.steps == 0 || !args.lr.is_finite() || args.lr <= 0.0 {
        return Err(CliError::usage("--steps must be at least 1 and --lr positive"));
    }

    let check_cfg = NmmConfig {
        batch: 2,
        length: 4,
        dim: 16,
        heads: 8,
        ..nmm
    };
    let report = grad_check(&check_cfg, args.seed)?;
    println!(
        "gradient check (B=2, L=4, D=16): max relative error {:.3e} over {} entries, {} skipped at kinks",
        report.max_rel_err(),
        report.compared(),
        report.skipped()
    );
    if !report.passed() {
        return Err(CliError {
            code: EXIT_NUMERICAL,
            message: format!("gradient check failed\n{}", report.to_text()),
        });
    }

    let history = train_toy(&train)?;
    if let Some(dir) = args.out.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    }
    fs::write(&args.out, history.to_csv()).map_err(|e| io_err(&args.out, e))?;
    let last = &history.final_eval;
    println!(
        "trained {} steps: l_total {:.6} -> {:.6}; sim(clean, gt) {:.4}, sim(clean, noisy) {:.4}, separation {:.4}",
        args.steps,
        history.records[0].eval.losses.l_total,
        last.losses.l_total,
        last.sim_clean_gt,
        last.sim_clean_noisy,
        history.separation()
    );
    if ablation.noisy_only {
        println!("max |f_i - (f_clean + f_noisy)| = {:e}", history.max_residual());
    }
    println!("history written to {}", args.out.display());
    Ok(())
}
