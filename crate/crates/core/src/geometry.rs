//! Points, boxes, datasets and repositories.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Number of leading coordinates used by distances unless configured otherwise.
pub const DEFAULT_METRIC_DIMS: usize = 2;

/// A d-dimensional point. `coords[0]` and `coords[1]` are the spatial axes,
/// anything after them is an auxiliary attribute.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Point<T> {
    coords: Vec<T>,
}

impl<T: Scalar> Point<T> {
    pub fn new(coords: Vec<T>) -> Result<Self> {
        if coords.len() < 2 {
            return Err(Error::TooFewDimensions(coords.len()));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite { index: 0 });
        }
        Ok(Self { coords })
    }

    pub fn coords(&self) -> &[T] {
        &self.coords
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn into_coords(self) -> Vec<T> {
        self.coords
    }
}

impl<T: Scalar> From<&[T]> for Point<T> {
    fn from(s: &[T]) -> Self {
        Self { coords: s.to_vec() }
    }
}

/// Squared distance over the first `dims` coordinates.
#[inline]
pub(crate) fn dist_sq<T: Scalar>(a: &[T], b: &[T], dims: usize) -> T {
    let mut acc = T::zero();
    for i in 0..dims {
        let d = a[i] - b[i];
        acc = acc + d * d;
    }
    acc
}

#[inline]
pub(crate) fn dist<T: Scalar>(a: &[T], b: &[T], dims: usize) -> T {
    dist_sq(a, b, dims).sqrt()
}

/// Euclidean distance between two points measured on the first
/// `metric_dims` coordinates.
pub fn euclidean<T: Scalar>(p: &Point<T>, q: &Point<T>, metric_dims: usize) -> Result<T> {
    if p.dim() != q.dim() {
        return Err(Error::DimensionMismatch {
            expected: p.dim(),
            found: q.dim(),
        });
    }
    if metric_dims == 0 || metric_dims > p.dim() {
        return Err(Error::InvalidParameter(format!(
            "metric_dims {metric_dims} outside 1..={}",
            p.dim()
        )));
    }
    Ok(dist(&p.coords, &q.coords, metric_dims))
}

/// Axis-aligned bounding box `[lo, hi]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mbr<T> {
    lo: Vec<T>,
    hi: Vec<T>,
}

impl<T: Scalar> Mbr<T> {
    pub fn new(lo: Vec<T>, hi: Vec<T>) -> Result<Self> {
        if lo.len() != hi.len() {
            return Err(Error::DimensionMismatch {
                expected: lo.len(),
                found: hi.len(),
            });
        }
        if lo.iter().chain(hi.iter()).any(|c| !c.is_finite()) {
            return Err(Error::NonFinite { index: 0 });
        }
        if lo.iter().zip(&hi).any(|(l, h)| l > h) {
            return Err(Error::InvalidParameter("box corner lo exceeds hi".into()));
        }
        Ok(Self { lo, hi })
    }

    pub fn of_point(p: &[T]) -> Self {
        Self {
            lo: p.to_vec(),
            hi: p.to_vec(),
        }
    }

    pub fn lo(&self) -> &[T] {
        &self.lo
    }

    pub fn hi(&self) -> &[T] {
        &self.hi
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn width(&self, axis: usize) -> T {
        self.hi[axis] - self.lo[axis]
    }

    pub fn expand(&mut self, p: &[T]) {
        for (i, &c) in p.iter().enumerate().take(self.lo.len()) {
            if c < self.lo[i] {
                self.lo[i] = c;
            }
            if c > self.hi[i] {
                self.hi[i] = c;
            }
        }
    }

    pub fn union_with(&mut self, other: &Mbr<T>) {
        self.expand(&other.lo);
        self.expand(&other.hi);
    }

    /// Closed containment test over every axis.
    pub fn contains(&self, p: &[T]) -> bool {
        self.lo
            .iter()
            .zip(&self.hi)
            .zip(p)
            .all(|((&l, &h), &c)| l <= c && c <= h)
    }

    /// Closed overlap test on the two spatial axes.
    pub fn intersects_2d(&self, other: &Mbr<T>) -> bool {
        (0..2).all(|i| self.lo[i] <= other.hi[i] && other.lo[i] <= self.hi[i])
    }

    /// Whether `other` lies inside `self` on the two spatial axes.
    pub fn covers_2d(&self, other: &Mbr<T>) -> bool {
        (0..2).all(|i| self.lo[i] <= other.lo[i] && other.hi[i] <= self.hi[i])
    }

    pub fn contains_2d(&self, p: &[T]) -> bool {
        (0..2).all(|i| self.lo[i] <= p[i] && p[i] <= self.hi[i])
    }

    /// Area of the box on the two spatial axes.
    pub fn area_2d(&self) -> T {
        self.width(0) * self.width(1)
    }

    /// Lower bound on the distance between any point of `self` and any
    /// point of `other`, measured over the first `dims` axes.
    pub fn min_dist(&self, other: &Mbr<T>, dims: usize) -> T {
        let mut acc = T::zero();
        for i in 0..dims {
            let gap = if other.lo[i] > self.hi[i] {
                other.lo[i] - self.hi[i]
            } else if self.lo[i] > other.hi[i] {
                self.lo[i] - other.hi[i]
            } else {
                T::zero()
            };
            acc = acc + gap * gap;
        }
        acc.sqrt()
    }
}

/// Componentwise min/max box of a non-empty point list.
pub fn mbr_of<T: Scalar>(points: &[Point<T>]) -> Result<Mbr<T>> {
    let first = points.first().ok_or(Error::Empty("point list"))?;
    let mut mbr = Mbr::of_point(first.coords());
    for p in &points[1..] {
        if p.dim() != first.dim() {
            return Err(Error::DimensionMismatch {
                expected: first.dim(),
                found: p.dim(),
            });
        }
        mbr.expand(p.coords());
    }
    Ok(mbr)
}

/// Row-major flat storage of points sharing one dimensionality.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointSet<T> {
    dim: usize,
    coords: Vec<T>,
}

impl<T: Scalar> PointSet<T> {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            coords: Vec::new(),
        }
    }

    pub fn with_capacity(dim: usize, n: usize) -> Self {
        Self {
            dim,
            coords: Vec::with_capacity(dim * n),
        }
    }

    /// Builds a set from flat row-major coordinates.
    pub fn from_flat(dim: usize, coords: Vec<T>) -> Result<Self> {
        if dim < 2 {
            return Err(Error::TooFewDimensions(dim));
        }
        if !coords.len().is_multiple_of(dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: coords.len() % dim,
            });
        }
        if let Some(pos) = coords.iter().position(|c| !c.is_finite()) {
            return Err(Error::NonFinite { index: pos / dim });
        }
        Ok(Self { dim, coords })
    }

    pub fn from_points(points: &[Point<T>]) -> Result<Self> {
        let first = points.first().ok_or(Error::Empty("point list"))?;
        let mut set = Self::with_capacity(first.dim(), points.len());
        for p in points {
            set.try_push(p.coords())?;
        }
        Ok(set)
    }

    pub fn from_rows<R: AsRef<[T]>>(rows: &[R]) -> Result<Self> {
        let first = rows.first().ok_or(Error::Empty("point list"))?;
        let mut set = Self::with_capacity(first.as_ref().len(), rows.len());
        if set.dim < 2 {
            return Err(Error::TooFewDimensions(set.dim));
        }
        for r in rows {
            set.try_push(r.as_ref())?;
        }
        Ok(set)
    }

    pub fn try_push(&mut self, p: &[T]) -> Result<()> {
        if p.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: p.len(),
            });
        }
        if p.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite { index: self.len() });
        }
        self.coords.extend_from_slice(p);
        Ok(())
    }

    pub(crate) fn push_unchecked(&mut self, p: &[T]) {
        self.coords.extend_from_slice(p);
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.coords.len().checked_div(self.dim).unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    #[inline]
    pub fn point(&self, i: usize) -> &[T] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = &[T]> + '_ {
        self.coords.chunks_exact(self.dim)
    }

    pub fn flat(&self) -> &[T] {
        &self.coords
    }

    pub fn to_points(&self) -> Vec<Point<T>> {
        self.iter().map(Point::from).collect()
    }

    /// Bounding box, `None` for an empty set.
    pub fn mbr(&self) -> Option<Mbr<T>> {
        let mut it = self.iter();
        let mut mbr = Mbr::of_point(it.next()?);
        for p in it {
            mbr.expand(p);
        }
        Some(mbr)
    }
}

/// A named point set with a repository-unique id.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dataset<T> {
    pub id: u64,
    pub name: String,
    points: PointSet<T>,
}

impl<T: Scalar> Dataset<T> {
    pub fn new(id: u64, name: impl Into<String>, points: PointSet<T>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::Empty("dataset"));
        }
        if points.dim() < 2 {
            return Err(Error::TooFewDimensions(points.dim()));
        }
        Ok(Self {
            id,
            name: name.into(),
            points,
        })
    }

    /// Convenience constructor from coordinate rows.
    pub fn from_rows<R: AsRef<[T]>>(id: u64, name: impl Into<String>, rows: &[R]) -> Result<Self> {
        Self::new(id, name, PointSet::from_rows(rows)?)
    }

    pub fn points(&self) -> &PointSet<T> {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.points.dim()
    }

    pub fn mbr(&self) -> Mbr<T> {
        self.points.mbr().expect("dataset is non-empty")
    }
}

/// A collection of datasets sharing one dimensionality.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Repository<T> {
    datasets: Vec<Dataset<T>>,
    global_mbr: Mbr<T>,
    /// Grid resolution: `2^theta` cells per spatial axis.
    pub theta: u32,
    /// Leading coordinates that distances are measured on.
    pub metric_dims: usize,
}

impl<T: Scalar> Repository<T> {
    pub fn new(datasets: Vec<Dataset<T>>, theta: u32, metric_dims: usize) -> Result<Self> {
        let first = datasets.first().ok_or(Error::Empty("repository"))?;
        let dim = first.dim();
        if !(1..=16).contains(&theta) {
            return Err(Error::InvalidParameter(format!("theta {theta} outside 1..=16")));
        }
        if metric_dims == 0 || metric_dims > dim {
            return Err(Error::InvalidParameter(format!(
                "metric_dims {metric_dims} outside 1..={dim}"
            )));
        }
        let mut seen = std::collections::HashSet::new();
        let mut global_mbr = first.mbr();
        for d in &datasets {
            if d.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: d.dim(),
                });
            }
            if !seen.insert(d.id) {
                return Err(Error::DuplicateId(d.id));
            }
            global_mbr.union_with(&d.mbr());
        }
        Ok(Self {
            datasets,
            global_mbr,
            theta,
            metric_dims,
        })
    }

    pub fn datasets(&self) -> &[Dataset<T>] {
        &self.datasets
    }

    pub fn global_mbr(&self) -> &Mbr<T> {
        &self.global_mbr
    }

    pub fn dim(&self) -> usize {
        self.datasets[0].dim()
    }

    pub fn get(&self, id: u64) -> Option<&Dataset<T>> {
        self.datasets.iter().find(|d| d.id == id)
    }
}

/// Dataset similarity measure used by exemplar search.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricKind {
    /// Intersecting MBR area; larger is better.
    Ia,
    /// Shared occupied grid cells; larger is better.
    Gbo,
    /// Exact directed Hausdorff distance; smaller is better.
    HausExact,
    /// Hausdorff distance within `2 * epsilon`; smaller is better.
    HausApprox,
}

impl MetricKind {
    pub const ALL: [MetricKind; 4] = [Self::Ia, Self::Gbo, Self::HausExact, Self::HausApprox];

    pub fn is_similarity(self) -> bool {
        matches!(self, Self::Ia | Self::Gbo)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Ia => "ia",
            Self::Gbo => "gbo",
            Self::HausExact => "haus_exact",
            Self::HausApprox => "haus_approx",
        }
    }
}

impl fmt::Display for MetricKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MetricKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "ia" => Ok(Self::Ia),
            "gbo" => Ok(Self::Gbo),
            "haus_exact" | "haus" => Ok(Self::HausExact),
            "haus_approx" => Ok(Self::HausApprox),
            other => Err(Error::InvalidParameter(format!("unknown metric {other:?}"))),
        }
    }
}
