use crate::error::{Error, Result};

use super::point::Point3;

/// Provenance of a point: part of the scanned object, or introduced by a corruption.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Label {
    Object,
    Added,
}

/// An ordered set of finite 3D points with optional per-point labels.
///
/// Unlabeled clouds behave as if every point were [`Label::Object`].
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PointCloud {
    points: Vec<Point3>,
    labels: Option<Vec<Label>>,
}

impl PointCloud {
    pub fn new(points: Vec<Point3>) -> Result<Self> {
        if let Some(i) = points.iter().position(|p| !p.is_finite()) {
            return Err(Error::invalid(format!("point {i} has a non-finite coordinate")));
        }
        Ok(Self { points, labels: None })
    }

    pub fn with_labels(points: Vec<Point3>, labels: Vec<Label>) -> Result<Self> {
        if labels.len() != points.len() {
            return Err(Error::invalid(format!(
                "{} labels for {} points",
                labels.len(),
                points.len()
            )));
        }
        let mut cloud = Self::new(points)?;
        cloud.labels = Some(labels);
        Ok(cloud)
    }

    pub fn from_arrays(points: &[[f64; 3]]) -> Result<Self> {
        Self::new(points.iter().copied().map(Point3::from_array).collect())
    }

    /// Number of points (N_t for the object-level corruptions).
    #[inline]
    pub fn len(&self) -> usize {
        self.points.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    #[inline]
    pub fn points(&self) -> &[Point3] {
        &self.points
    }

    pub fn labels(&self) -> Option<&[Label]> {
        self.labels.as_deref()
    }

    #[inline]
    pub fn label(&self, i: usize) -> Label {
        self.labels.as_ref().map_or(Label::Object, |l| l[i])
    }

    /// The cloud with every point labeled explicitly.
    pub fn labeled(mut self) -> Self {
        if self.labels.is_none() {
            self.labels = Some(vec![Label::Object; self.points.len()]);
        }
        self
    }

    /// Drops provenance labels.
    pub fn unlabeled(mut self) -> Self {
        self.labels = None;
        self
    }

    pub(crate) fn ensure_nonempty(&self) -> Result<()> {
        if self.is_empty() {
            Err(Error::EmptyCloud)
        } else {
            Ok(())
        }
    }

    /// Points labeled [`Label::Object`], in order.
    pub fn object_points(&self) -> Vec<Point3> {
        self.iter_labeled()
            .filter(|(_, l)| *l == Label::Object)
            .map(|(p, _)| p)
            .collect()
    }

    pub fn count_label(&self, label: Label) -> usize {
        match &self.labels {
            Some(ls) => ls.iter().filter(|&&l| l == label).count(),
            None if label == Label::Object => self.points.len(),
            None => 0,
        }
    }

    pub fn iter_labeled(&self) -> impl Iterator<Item = (Point3, Label)> + '_ {
        self.points.iter().enumerate().map(|(i, &p)| (p, self.label(i)))
    }

    /// Appends points labeled [`Label::Added`].
    pub fn append_added(&mut self, extra: &[Point3]) -> Result<()> {
        if let Some(i) = extra.iter().position(|p| !p.is_finite()) {
            return Err(Error::invalid(format!("added point {i} is non-finite")));
        }
        let n = self.points.len();
        let labels = self.labels.get_or_insert_with(|| vec![Label::Object; n]);
        labels.extend(std::iter::repeat_n(Label::Added, extra.len()));
        self.points.extend_from_slice(extra);
        Ok(())
    }

    /// Applies `f` to every point, keeping labels.
    pub fn map_points(&self, mut f: impl FnMut(Point3) -> Point3) -> Self {
        Self {
            points: self.points.iter().map(|&p| f(p)).collect(),
            labels: self.labels.clone(),
        }
    }

    /// Keeps the points whose index satisfies `keep`, preserving order and labels.
    pub fn retain_indices(&self, mut keep: impl FnMut(usize) -> bool) -> Self {
        let mut points = Vec::with_capacity(self.points.len());
        let mut labels = self.labels.as_ref().map(|_| Vec::with_capacity(self.points.len()));
        for i in 0..self.points.len() {
            if keep(i) {
                points.push(self.points[i]);
                if let (Some(out), Some(src)) = (labels.as_mut(), self.labels.as_ref()) {
                    out.push(src[i]);
                }
            }
        }
        Self { points, labels }
    }

    pub(crate) fn points_mut(&mut self) -> &mut [Point3] {
        &mut self.points
    }

    /// Arithmetic mean of all points.
    pub fn centroid(&self) -> Result<Point3> {
        self.ensure_nonempty()?;
        Ok(centroid_of(&self.points))
    }

    /// Tight axis-aligned bounding box.
    pub fn aabb(&self) -> Result<Aabb> {
        Aabb::from_points(&self.points)
    }
}

pub(crate) fn centroid_of(points: &[Point3]) -> Point3 {
    let mut acc = Point3::ORIGIN;
    for &p in points {
        acc += p;
    }
    acc * (1.0 / points.len() as f64)
}

/// Axis-aligned bounding box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aabb {
    pub min: Point3,
    pub max: Point3,
}

impl Aabb {
    pub fn from_points(points: &[Point3]) -> Result<Self> {
        let (first, rest) = points.split_first().ok_or(Error::EmptyCloud)?;
        let (min, max) = rest
            .iter()
            .fold((*first, *first), |(lo, hi), &p| (lo.min(p), hi.max(p)));
        Ok(Self { min, max })
    }

    pub fn extents(&self) -> Point3 {
        self.max - self.min
    }

    pub fn center(&self) -> Point3 {
        (self.min + self.max) * 0.5
    }

    pub fn largest_extent(&self) -> f64 {
        let e = self.extents();
        e.x.max(e.y).max(e.z)
    }

    /// The box grown by `d` on every side.
    pub fn dilated(&self, d: f64) -> Self {
        let v = Point3::new(d, d, d);
        Self {
            min: self.min - v,
            max: self.max + v,
        }
    }

    /// Containment with an absolute slack `tol`.
    pub fn contains(&self, p: Point3, tol: f64) -> bool {
        (0..3).all(|a| p[a] >= self.min[a] - tol && p[a] <= self.max[a] + tol)
    }
}
