//! Indexing and search over repositories of spatial point datasets.
//!
//! Each dataset gets a ball/box tree with leaf-level outlier removal; an
//! upper tree over the dataset roots answers range and exemplar dataset
//! searches (intersecting area, grid overlap, Hausdorff), and the per-dataset
//! trees answer range and nearest-neighbor point searches.

pub mod baselines;
pub mod error;
pub mod geometry;
pub mod grid;
pub mod index;
pub mod io;
pub mod metrics;
mod scalar;
pub mod search;

pub use error::{Error, Result};
pub use geometry::{euclidean, mbr_of, Dataset, Mbr, MetricKind, Point, PointSet, Repository};
pub use grid::{Grid, ZSignature};
pub use index::{IndexParams, UnifiedIndex};
pub use metrics::{EpsilonPolicy, HausBounds};
pub use scalar::Scalar;

pub type Point64 = Point<f64>;
pub type Mbr64 = Mbr<f64>;
pub type Dataset64 = Dataset<f64>;
pub type Repository64 = Repository<f64>;
pub type Index64 = UnifiedIndex<f64>;
pub type Index32 = UnifiedIndex<f32>;
