//! Seeded construction of a corrupted dataset from a split directory tree.
//!
//! Input layout:
//!
//! ```text
//! <in>/{train,val,test}/partial/<id>.{ply,xyz}
//! <in>/{train,val,test}/complete/<id>.{ply,xyz}
//! ```
//!
//! `<id>` may contain subdirectories (e.g. a category). Output layout:
//!
//! ```text
//! <out>/<split>/<kind>/<id>.<ext>    one per corruption kind
//! <out>/<split>/clean/<id>.<ext>     the clean partial
//! <out>/<split>/complete/<id>.<ext>  the complete ground truth
//! <out>/manifest.txt
//! ```
//!
//! Every item draws from its own stream keyed by `(master_seed, id, kind)`,
//! so the output is independent of thread count and scheduling.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::{self, Write as _};
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use walkdir::WalkDir;

use crate::error::{Error, Result};
use crate::geom::io::{read_cloud, write_cloud, CloudFormat};
use crate::geom::StreamKey;

use super::recipe::Recipe;
use super::spec::{sample_params_with, CorruptionKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Split {
    Train,
    Val,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Val, Split::Test];

    pub fn name(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Split {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Split::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| Error::Manifest(format!("unknown split {s:?}")))
    }
}

/// One generated cloud.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestEntry {
    pub source_id: String,
    pub split: Split,
    pub kind: CorruptionKind,
    /// Resolved parameters as `key=value` pairs joined by `;`.
    pub params: String,
    pub seed: u64,
    /// Output path relative to the output root, `/`-separated.
    pub path: String,
}

/// Record of a dataset build.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DatasetManifest {
    pub entries: Vec<ManifestEntry>,
}

const HEADER: &str = "# pcrobust dataset manifest v1";

impl DatasetManifest {
    /// Number of distinct source objects.
    pub fn objects(&self) -> usize {
        self.entries
            .iter()
            .map(|e| (e.split, e.source_id.as_str()))
            .collect::<BTreeSet<_>>()
            .len()
    }

    pub fn total(&self) -> usize {
        self.entries.len()
    }

    pub fn per_split(&self) -> BTreeMap<Split, usize> {
        let mut m: BTreeMap<Split, usize> = Split::ALL.into_iter().map(|s| (s, 0)).collect();
        for e in &self.entries {
            *m.entry(e.split).or_default() += 1;
        }
        m
    }

    pub fn per_kind(&self) -> BTreeMap<CorruptionKind, usize> {
        let mut m: BTreeMap<CorruptionKind, usize> = CorruptionKind::ALL.into_iter().map(|k| (k, 0)).collect();
        for e in &self.entries {
            *m.entry(e.kind).or_default() += 1;
        }
        m
    }

    /// Tab-separated `field=value` records followed by a totals footer.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        s.push_str(HEADER);
        s.push('\n');
        for e in &self.entries {
            let _ = writeln!(
                s,
                "source_id={}\tsplit={}\tkind={}\tparams={}\tseed={}\tpath={}",
                e.source_id, e.split, e.kind, e.params, e.seed, e.path
            );
        }
        s.push_str("# totals\n");
        let _ = writeln!(s, "total\tobjects={}\tclouds={}", self.objects(), self.total());
        let splits: Vec<String> = self.per_split().into_iter().map(|(k, v)| format!("{k}={v}")).collect();
        let _ = writeln!(s, "split\t{}", splits.join("\t"));
        let kinds: Vec<String> = self.per_kind().into_iter().map(|(k, v)| format!("{k}={v}")).collect();
        let _ = writeln!(s, "kind\t{}", kinds.join("\t"));
        s
    }

    /// Parses [`to_text`](Self::to_text) output and checks the footer
    /// against the records.
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = Vec::new();
        let mut footer: Vec<&str> = Vec::new();
        let mut in_footer = false;
        for line in text.lines() {
            if line.starts_with("# totals") {
                in_footer = true;
                continue;
            }
            if line.starts_with('#') || line.trim().is_empty() {
                continue;
            }
            if in_footer {
                footer.push(line);
                continue;
            }
            let mut fields = BTreeMap::new();
            for f in line.split('\t') {
                let (k, v) = f
                    .split_once('=')
                    .ok_or_else(|| Error::Manifest(format!("malformed field {f:?}")))?;
                fields.insert(k, v);
            }
            let get = |k: &str| {
                fields
                    .get(k)
                    .copied()
                    .ok_or_else(|| Error::Manifest(format!("record lacks {k}: {line:?}")))
            };
            entries.push(ManifestEntry {
                source_id: get("source_id")?.to_string(),
                split: get("split")?.parse()?,
                kind: get("kind")?
                    .parse()
                    .map_err(|e: Error| Error::Manifest(e.to_string()))?,
                params: get("params")?.to_string(),
                seed: get("seed")?
                    .parse()
                    .map_err(|_| Error::Manifest(format!("bad seed in {line:?}")))?,
                path: get("path")?.to_string(),
            });
        }
        let manifest = Self { entries };
        let expected = manifest.to_text();
        let expected_footer: Vec<&str> = expected
            .lines()
            .skip_while(|l| !l.starts_with("# totals"))
            .skip(1)
            .collect();
        if footer != expected_footer {
            return Err(Error::Manifest("totals footer does not match records".into()));
        }
        Ok(manifest)
    }
}

/// Options for [`build_dataset`].
#[derive(Debug, Clone, Default)]
pub struct BuildOptions {
    /// Worker threads; `None` uses rayon's default.
    pub threads: Option<usize>,
    pub recipe: Recipe,
}

struct Item {
    split: Split,
    id: String,
    partial: PathBuf,
    complete: PathBuf,
    format: CloudFormat,
}

fn strip_ext(rel: &Path) -> String {
    let mut s = rel.with_extension("").to_string_lossy().replace('\\', "/");
    if s.starts_with("./") {
        s.drain(..2);
    }
    s
}

fn find_cloud(dir: &Path, id: &str) -> Option<PathBuf> {
    ["ply", "xyz"]
        .iter()
        .map(|ext| dir.join(format!("{id}.{ext}")))
        .find(|p| p.is_file())
}

fn discover(input_root: &Path) -> Result<Vec<Item>> {
    let mut items = Vec::new();
    let mut seen: BTreeMap<String, PathBuf> = BTreeMap::new();
    for split in Split::ALL {
        let split_dir = input_root.join(split.name());
        let partial_dir = split_dir.join("partial");
        let complete_dir = split_dir.join("complete");
        for dir in [&split_dir, &partial_dir, &complete_dir] {
            if !dir.is_dir() {
                return Err(Error::io(
                    dir.as_path(),
                    std::io::Error::new(std::io::ErrorKind::NotFound, "missing directory"),
                ));
            }
        }
        let mut found = Vec::new();
        for entry in WalkDir::new(&partial_dir).sort_by_file_name() {
            let entry = entry.map_err(|e| {
                let path = e.path().unwrap_or(&partial_dir).to_path_buf();
                Error::io(path, e.into())
            })?;
            if !entry.file_type().is_file() {
                continue;
            }
            let Some(format) = CloudFormat::from_path(entry.path()) else {
                continue;
            };
            let rel = entry
                .path()
                .strip_prefix(&partial_dir)
                .expect("walkdir yields children of its root");
            found.push((strip_ext(rel), entry.path().to_path_buf(), format));
        }
        for (id, partial, format) in found {
            if let Some(prev) = seen.insert(id.clone(), partial.clone()) {
                return Err(Error::Manifest(format!(
                    "duplicate object id {id:?}: {} and {}",
                    prev.display(),
                    partial.display()
                )));
            }
            let complete = find_cloud(&complete_dir, &id).ok_or_else(|| {
                Error::io(
                    complete_dir.join(format!("{id}.{}", format.extension())),
                    std::io::Error::new(std::io::ErrorKind::NotFound, "missing complete ground truth"),
                )
            })?;
            items.push(Item {
                split,
                id,
                partial,
                complete,
                format,
            });
        }
    }
    Ok(items)
}

fn process(item: &Item, out_root: &Path, master_seed: u64, recipe: &Recipe) -> Result<Vec<ManifestEntry>> {
    let partial = read_cloud(&item.partial)?;
    let complete = read_cloud(&item.complete)?;
    let ext = item.format.extension();
    let split_dir = out_root.join(item.split.name());

    write_cloud(&split_dir.join("clean").join(format!("{}.{ext}", item.id)), &partial)?;
    let complete_out = split_dir.join("complete").join(format!(
        "{}.{}",
        item.id,
        item.complete.extension().and_then(|e| e.to_str()).unwrap_or(ext)
    ));
    if let Some(dir) = complete_out.parent() {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::copy(&item.complete, &complete_out).map_err(|e| Error::io(&complete_out, e))?;

    let mut knobs = recipe.knobs.clone();
    if knobs.floor_reference.is_none() && !complete.is_empty() {
        let b = complete.aabb()?;
        if b.max.y > b.min.y {
            knobs.floor_reference = Some((b.min.y, b.max.y));
        }
    }

    let mut entries = Vec::with_capacity(CorruptionKind::ALL.len());
    for kind in CorruptionKind::ALL {
        let key = StreamKey::new(master_seed, item.id.as_str(), kind.tag());
        let mut rng = key.stream();
        let spec = sample_params_with(kind, recipe, &mut rng)?;
        let result = super::apply(&partial, &spec, &knobs, &mut rng)?;
        let rel = format!("{}/{}/{}.{ext}", item.split.name(), kind.short(), item.id);
        write_cloud(&out_root.join(&rel), &result.cloud)?;
        entries.push(ManifestEntry {
            source_id: item.id.clone(),
            split: item.split,
            kind,
            params: spec.params.to_kv(),
            seed: key.seed_u64(),
            path: rel,
        });
    }
    Ok(entries)
}

/// Corrupts every partial under `input_root` with all eight kinds and
/// writes clouds plus `manifest.txt` under `out_root`.
pub fn build_dataset(
    input_root: &Path,
    out_root: &Path,
    master_seed: u64,
    options: &BuildOptions,
) -> Result<DatasetManifest> {
    let items = discover(input_root)?;
    fs::create_dir_all(out_root).map_err(|e| Error::io(out_root, e))?;

    let run = || -> Result<Vec<Vec<ManifestEntry>>> {
        items
            .par_iter()
            .map(|item| process(item, out_root, master_seed, &options.recipe))
            .collect()
    };
    let per_item = match options.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|e| Error::invalid(format!("thread pool: {e}")))?
            .install(run)?,
        None => run()?,
    };

    let manifest = DatasetManifest {
        entries: per_item.into_iter().flatten().collect(),
    };
    let path = out_root.join("manifest.txt");
    fs::write(&path, manifest.to_text()).map_err(|e| Error::io(&path, e))?;
    Ok(manifest)
}
