//! Completion metrics: Chamfer distance (L1 and L2 accumulation), F-score
//! and fidelity, plus per-category aggregation into report tables.
//!
//! Library values are in the clouds' own units. The `x1000` scaling seen in
//! result tables is applied only by [`aggregate`].

mod report;

pub use report::{aggregate, Category, MetricReport, PerCloud, ReportRow};

use crate::error::{Error, Result};
use crate::geom::{Metric, NnIndex, Point3, PointCloud};

/// Per-pair accumulation used by Chamfer distance.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Norm {
    /// Sum of absolute coordinate differences.
    L1,
    /// Squared Euclidean distance.
    L2,
}

/// How the nearest neighbor of each point is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Selection {
    /// Euclidean nearest neighbor for both norms.
    #[default]
    Euclidean,
    /// Nearest neighbor under the accumulated norm itself (L1 distance for
    /// [`Norm::L1`]; identical to `Euclidean` for [`Norm::L2`]).
    Matching,
}

fn nonempty(c: &PointCloud) -> Result<&[Point3]> {
    if c.is_empty() {
        Err(Error::EmptyCloud)
    } else {
        Ok(c.points())
    }
}

#[inline]
fn pair_cost(norm: Norm, a: Point3, b: Point3) -> f64 {
    match norm {
        Norm::L1 => (a - b).norm_l1(),
        Norm::L2 => (a - b).norm_sq(),
    }
}

/// Mean over `from` of the cost to its selected neighbor in `index`.
fn directed(from: &[Point3], index: &NnIndex, norm: Norm) -> f64 {
    let to = index.points();
    let sum: f64 = from
        .iter()
        .map(|&p| pair_cost(norm, p, to[index.nearest(p).index]))
        .sum();
    sum / from.len() as f64
}

/// Chamfer distance with Euclidean neighbor selection.
pub fn chamfer(pred: &PointCloud, gt: &PointCloud, norm: Norm) -> Result<f64> {
    chamfer_with(pred, gt, norm, Selection::Euclidean)
}

/// Chamfer distance with an explicit neighbor-selection rule.
pub fn chamfer_with(pred: &PointCloud, gt: &PointCloud, norm: Norm, selection: Selection) -> Result<f64> {
    let (p, g) = (nonempty(pred)?, nonempty(gt)?);
    let metric = match (norm, selection) {
        (Norm::L1, Selection::Matching) => Metric::L1,
        _ => Metric::Euclidean,
    };
    let to_gt = NnIndex::with_metric(g, metric)?;
    let to_pred = NnIndex::with_metric(p, metric)?;
    Ok(directed(p, &to_gt, norm) + directed(g, &to_pred, norm))
}

/// Both Chamfer variants with Euclidean selection, sharing one pair of
/// indexes.
pub fn chamfer_both(pred: &PointCloud, gt: &PointCloud) -> Result<(f64, f64)> {
    let (p, g) = (nonempty(pred)?, nonempty(gt)?);
    let to_gt = NnIndex::new(g)?;
    let to_pred = NnIndex::new(p)?;
    let l1 = directed(p, &to_gt, Norm::L1) + directed(g, &to_pred, Norm::L1);
    let l2 = directed(p, &to_gt, Norm::L2) + directed(g, &to_pred, Norm::L2);
    Ok((l1, l2))
}

/// Precision, recall and their harmonic mean at one threshold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FScore {
    pub delta: f64,
    /// Fraction of predicted points closer than `delta` to the ground truth.
    pub precision: f64,
    /// Fraction of ground-truth points closer than `delta` to the prediction.
    pub recall: f64,
    pub fscore: f64,
}

fn fraction_within(from: &[Point3], index: &NnIndex, delta: f64) -> f64 {
    let hits = from.iter().filter(|&&p| index.nearest(p).dist < delta).count();
    hits as f64 / from.len() as f64
}

/// F-score at threshold `delta` with its precision and recall.
pub fn fscore_detail(pred: &PointCloud, gt: &PointCloud, delta: f64) -> Result<FScore> {
    let (p, g) = (nonempty(pred)?, nonempty(gt)?);
    if !delta.is_finite() || delta <= 0.0 {
        return Err(Error::invalid(format!(
            "F-score threshold must be positive, got {delta}"
        )));
    }
    let precision = fraction_within(p, &NnIndex::new(g)?, delta);
    let recall = fraction_within(g, &NnIndex::new(p)?, delta);
    let fscore = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    Ok(FScore {
        delta,
        precision,
        recall,
        fscore,
    })
}

/// F-score at threshold `delta` (strict `<`), zero when nothing matches.
pub fn fscore(pred: &PointCloud, gt: &PointCloud, delta: f64) -> Result<f64> {
    Ok(fscore_detail(pred, gt, delta)?.fscore)
}

/// Mean Euclidean distance from each input point to the nearest output point.
pub fn fidelity(input: &PointCloud, output: &PointCloud) -> Result<f64> {
    let (i, o) = (nonempty(input)?, nonempty(output)?);
    let index = NnIndex::new(o)?;
    let sum: f64 = i.iter().map(|&p| index.nearest(p).dist).sum();
    Ok(sum / i.len() as f64)
}

/// Per-cloud metric values, in raw units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricValue {
    pub cd_l1: f64,
    pub cd_l2: f64,
    pub fscore: f64,
    /// Present when an input cloud was supplied.
    pub fidelity: Option<f64>,
    pub delta: f64,
}

/// Evaluates all metrics for one prediction.
pub fn evaluate(pred: &PointCloud, gt: &PointCloud, input: Option<&PointCloud>, delta: f64) -> Result<MetricValue> {
    let (cd_l1, cd_l2) = chamfer_both(pred, gt)?;
    let fscore = fscore(pred, gt, delta)?;
    let fidelity = input.map(|i| fidelity(i, pred)).transpose()?;
    Ok(MetricValue {
        cd_l1,
        cd_l2,
        fscore,
        fidelity,
        delta,
    })
}
