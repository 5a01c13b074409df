//! Averaging per-cloud metrics into `(run, category)` cells.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::str::FromStr;

use crate::corrupt::CorruptionKind;
use crate::error::{Error, Result};

use super::MetricValue;

/// Reads one metric out of a value.
type Column = fn(&MetricValue) -> Option<f64>;

/// Report column: clean inputs or one corruption kind.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Category {
    Clean,
    Corrupted(CorruptionKind),
}

impl Category {
    /// Column order of the result tables.
    pub fn all() -> Vec<Category> {
        std::iter::once(Category::Clean)
            .chain(CorruptionKind::ALL.into_iter().map(Category::Corrupted))
            .collect()
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Category::Clean => f.write_str("clean"),
            Category::Corrupted(k) => write!(f, "{k}"),
        }
    }
}

impl FromStr for Category {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        if s.eq_ignore_ascii_case("clean") {
            return Ok(Category::Clean);
        }
        s.parse().map(Category::Corrupted)
    }
}

/// One evaluated cloud.
#[derive(Debug, Clone, PartialEq)]
pub struct PerCloud {
    pub run: String,
    pub category: Category,
    pub value: MetricValue,
}

/// One averaged cell, already in report scale.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub run: String,
    pub category: Category,
    pub count: usize,
    /// `cd_l1`, `cd_l2` and `fidelity` are multiplied by 1000.
    pub value: MetricValue,
}

/// Averaged metrics, sorted by run then category column order.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricReport {
    pub rows: Vec<ReportRow>,
}

pub const CSV_HEADER: &str = "run,category,count,cd_l1,cd_l2,fscore,fidelity,delta";

/// Mean of `values` summed in sorted order, so the result does not depend on
/// the order the values arrived in.
fn order_free_mean(mut values: Vec<f64>) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len() as f64;
    values.into_iter().sum::<f64>() / n
}

/// Averages per-cloud values into cells and applies the `x1000` scaling to
/// Chamfer distances and fidelity.
pub fn aggregate(per_cloud: &[PerCloud]) -> Result<MetricReport> {
    if per_cloud.is_empty() {
        return Err(Error::invalid("nothing to aggregate"));
    }
    let mut cells: BTreeMap<(&str, Category), Vec<&MetricValue>> = BTreeMap::new();
    for c in per_cloud {
        cells.entry((c.run.as_str(), c.category)).or_default().push(&c.value);
    }
    let mut rows = Vec::with_capacity(cells.len());
    for ((run, category), values) in cells {
        let delta = values[0].delta;
        if values.iter().any(|v| v.delta != delta) {
            return Err(Error::invalid(format!(
                "cell {run}/{category} mixes F-score thresholds"
            )));
        }
        let has_fidelity = values[0].fidelity.is_some();
        if values.iter().any(|v| v.fidelity.is_some() != has_fidelity) {
            return Err(Error::invalid(format!(
                "cell {run}/{category} has fidelity for only some clouds"
            )));
        }
        let mean = |f: fn(&MetricValue) -> f64| order_free_mean(values.iter().map(|v| f(v)).collect());
        rows.push(ReportRow {
            run: run.to_string(),
            category,
            count: values.len(),
            value: MetricValue {
                cd_l1: 1000.0 * mean(|v| v.cd_l1),
                cd_l2: 1000.0 * mean(|v| v.cd_l2),
                fscore: mean(|v| v.fscore),
                fidelity: has_fidelity.then(|| 1000.0 * mean(|v| v.fidelity.unwrap_or(0.0))),
                delta,
            },
        });
    }
    Ok(MetricReport { rows })
}

impl MetricReport {
    pub fn get(&self, run: &str, category: Category) -> Option<&ReportRow> {
        self.rows.iter().find(|r| r.run == run && r.category == category)
    }

    /// CSV with one line per cell; a missing fidelity is an empty field.
    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        s.push_str(CSV_HEADER);
        s.push('\n');
        for r in &self.rows {
            let v = &r.value;
            let fid = v.fidelity.map(|f| f.to_string()).unwrap_or_default();
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{},{}",
                r.run, r.category, r.count, v.cd_l1, v.cd_l2, v.fscore, fid, v.delta
            );
        }
        s
    }

    /// One block per metric: runs as rows, categories as columns.
    pub fn to_table(&self) -> String {
        let mut runs: Vec<&str> = self.rows.iter().map(|r| r.run.as_str()).collect();
        runs.dedup();
        let cols = Category::all();
        let run_w = runs.iter().map(|r| r.len()).max().unwrap_or(0).max(3);
        let col_w = 10;

        let blocks: [(&str, Column); 4] = [
            ("CD-L1 (x1000)", |v| Some(v.cd_l1)),
            ("CD-L2 (x1000)", |v| Some(v.cd_l2)),
            ("F-score", |v| Some(v.fscore)),
            ("Fidelity (x1000)", |v| v.fidelity),
        ];
        let mut s = String::new();
        for (title, get) in blocks {
            if !self.rows.iter().any(|r| get(&r.value).is_some()) {
                continue;
            }
            if !s.is_empty() {
                s.push('\n');
            }
            let _ = writeln!(s, "{title}");
            let _ = write!(s, "{:<run_w$}", "run");
            for c in &cols {
                let _ = write!(s, " {:>col_w$}", c.to_string());
            }
            s.push('\n');
            for run in &runs {
                let _ = write!(s, "{run:<run_w$}");
                for &c in &cols {
                    let cell = self
                        .get(run, c)
                        .and_then(|r| get(&r.value))
                        .map(|x| format!("{x:.3}"))
                        .unwrap_or_else(|| "-".into());
                    let _ = write!(s, " {cell:>col_w$}");
                }
                s.push('\n');
            }
        }
        s
    }
}
