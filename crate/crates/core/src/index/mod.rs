//! The unified two-level index: one ball/box tree per dataset (with
//! knee-based outlier removal) and an upper-level tree over dataset roots.

mod audit;
mod knee;
mod repo;
mod split;
mod tree;

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

pub use audit::{audit, AuditReport, Violation};
pub use knee::{knee_of_descending, knee_threshold, RadiusLedger};
pub use repo::{RepoChildren, RepoNode, RepoTree, RootSummary};
pub use split::SplitRule;
pub use tree::{DatasetTree, SplitStats, TreeNode};

use crate::error::{Error, Result};
use crate::geometry::{Mbr, Repository, DEFAULT_METRIC_DIMS};
use crate::grid::{Grid, ZSignature, DEFAULT_THETA};
use crate::scalar::Scalar;

/// Default leaf capacity for both index levels.
pub const DEFAULT_LEAF_CAPACITY: usize = 10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndexParams {
    pub leaf_capacity: usize,
    pub theta: u32,
    pub metric_dims: usize,
    pub outlier_removal: bool,
}

impl Default for IndexParams {
    fn default() -> Self {
        Self {
            leaf_capacity: DEFAULT_LEAF_CAPACITY,
            theta: DEFAULT_THETA,
            metric_dims: DEFAULT_METRIC_DIMS,
            outlier_removal: true,
        }
    }
}

/// A dataset root: the dataset's tree plus its identity and signature.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetEntry<T> {
    pub id: u64,
    pub name: String,
    /// Point count before outlier removal.
    pub original_len: usize,
    /// Source indices of the points removed as outliers, ascending.
    pub removed: Vec<u32>,
    pub tree: DatasetTree<T>,
    pub signature: ZSignature,
}

impl<T: Scalar> DatasetEntry<T> {
    pub fn mbr(&self) -> &Mbr<T> {
        self.tree.mbr()
    }

    pub fn center(&self) -> &[T] {
        &self.tree.root().center
    }

    pub fn radius(&self) -> T {
        self.tree.root().radius
    }

    pub fn len(&self) -> usize {
        self.tree.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tree.is_empty()
    }
}

/// Numbers reported by [`UnifiedIndex::build`].
#[derive(Clone, Debug, PartialEq)]
pub struct BuildReport<T> {
    pub elapsed: Duration,
    /// Outlier radius threshold, `None` when removal is disabled.
    pub r_prime: Option<T>,
    pub leaf_count: usize,
    pub removed_points: usize,
    pub split_stats: SplitStats,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UnifiedIndex<T> {
    params: IndexParams,
    dim: usize,
    global_mbr: Mbr<T>,
    grid: Grid<T>,
    r_prime: Option<T>,
    entries: Vec<DatasetEntry<T>>,
    slots: BTreeMap<u64, u32>,
    repo: RepoTree<T>,
}

impl<T: Scalar> UnifiedIndex<T> {
    /// Builds the index with the repository's resolution and metric
    /// dimensions and the given leaf capacity.
    pub fn build(repo: &Repository<T>, leaf_capacity: usize) -> Result<Self> {
        let params = IndexParams {
            leaf_capacity,
            theta: repo.theta,
            metric_dims: repo.metric_dims,
            outlier_removal: true,
        };
        Self::build_with(repo, params).map(|(idx, _)| idx)
    }

    pub fn build_with(repo: &Repository<T>, params: IndexParams) -> Result<(Self, BuildReport<T>)> {
        let started = Instant::now();
        if repo.datasets().is_empty() {
            return Err(Error::Empty("repository"));
        }
        if params.metric_dims == 0 || params.metric_dims > repo.dim() {
            return Err(Error::InvalidParameter(format!(
                "metric_dims {} outside 1..={}",
                params.metric_dims,
                repo.dim()
            )));
        }
        let grid = Grid::from_mbr(repo.global_mbr(), params.theta)?;

        let mut ledger = RadiusLedger::new();
        let mut split_stats = SplitStats::default();
        let mut trees = Vec::with_capacity(repo.datasets().len());
        for ds in repo.datasets() {
            let (tree, stats) = DatasetTree::build_with_stats(
                ds.points(),
                params.leaf_capacity,
                params.metric_dims,
                Some(&mut ledger),
            )?;
            split_stats.median_fallbacks += stats.median_fallbacks;
            split_stats.forced_leaves += stats.forced_leaves;
            trees.push(tree);
        }

        let r_prime = params.outlier_removal.then(|| knee_threshold(&ledger));
        let mut entries = Vec::with_capacity(trees.len());
        let mut removed_points = 0;
        for (ds, mut tree) in repo.datasets().iter().zip(trees) {
            let removed = match r_prime {
                Some(r) => tree.refine_bottom_up(r),
                None => Vec::new(),
            };
            removed_points += removed.len();
            let signature = grid.signature_of(tree.points())?;
            entries.push(DatasetEntry {
                id: ds.id,
                name: ds.name.clone(),
                original_len: ds.len(),
                removed,
                tree,
                signature,
            });
        }

        let summaries: Vec<RootSummary<'_, T>> = entries
            .iter()
            .map(|e| RootSummary {
                id: e.id,
                center: e.center(),
                radius: e.radius(),
                mbr: e.mbr(),
                signature: &e.signature,
            })
            .collect();
        let repo_tree = RepoTree::build(&summaries, params.leaf_capacity, params.metric_dims)?;
        let slots = entries
            .iter()
            .enumerate()
            .map(|(i, e)| (e.id, i as u32))
            .collect();
        let leaf_count = entries.iter().map(|e| e.tree.leaves().count()).sum();

        let index = Self {
            params,
            dim: repo.dim(),
            global_mbr: repo.global_mbr().clone(),
            grid,
            r_prime,
            entries,
            slots,
            repo: repo_tree,
        };
        let report = BuildReport {
            elapsed: started.elapsed(),
            r_prime,
            leaf_count,
            removed_points,
            split_stats,
        };
        Ok((index, report))
    }

    pub fn params(&self) -> &IndexParams {
        &self.params
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn metric_dims(&self) -> usize {
        self.params.metric_dims
    }

    pub fn global_mbr(&self) -> &Mbr<T> {
        &self.global_mbr
    }

    pub fn grid(&self) -> &Grid<T> {
        &self.grid
    }

    pub fn r_prime(&self) -> Option<T> {
        self.r_prime
    }

    pub fn entries(&self) -> &[DatasetEntry<T>] {
        &self.entries
    }

    pub fn entry(&self, slot: u32) -> &DatasetEntry<T> {
        &self.entries[slot as usize]
    }

    pub fn dataset(&self, id: u64) -> Result<&DatasetEntry<T>> {
        self.slots
            .get(&id)
            .map(|&s| &self.entries[s as usize])
            .ok_or(Error::UnknownDataset(id))
    }

    pub fn dataset_ids(&self) -> impl Iterator<Item = u64> + '_ {
        self.slots.keys().copied()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn repo_tree(&self) -> &RepoTree<T> {
        &self.repo
    }

    pub fn removed_points(&self) -> usize {
        self.entries.iter().map(|e| e.removed.len()).sum()
    }

    /// Approximation threshold: one grid cell width on axis 0.
    pub fn default_epsilon(&self) -> T {
        self.global_mbr.width(0) / T::of_usize(1usize << self.params.theta)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Dataset;

    #[test]
    fn single_small_dataset() {
        let ds = Dataset::from_rows(7, "a", &[[0.0f64, 0.0], [1.0, 1.0], [2.0, 0.5]]).unwrap();
        let repo = Repository::new(vec![ds], 5, 2).unwrap();
        let idx = UnifiedIndex::build(&repo, 10).unwrap();
        assert!(idx.repo_tree().root().is_leaf());
        let e = idx.dataset(7).unwrap();
        assert_eq!(e.tree.nodes().len(), 1);
        assert!(matches!(idx.dataset(8), Err(Error::UnknownDataset(8))));
        assert_eq!(idx.default_epsilon(), 2.0 / 32.0);
    }

    #[test]
    fn removal_can_be_disabled() {
        let mut rows: Vec<[f64; 2]> = (0..100).map(|i| [(i % 10) as f64, (i / 10) as f64]).collect();
        rows.push([1e4, 1e4]);
        rows.push([1e4, 1.1e4]);
        let ds = Dataset::from_rows(0, "a", &rows).unwrap();
        let repo = Repository::new(vec![ds], 5, 2).unwrap();
        let params = IndexParams {
            outlier_removal: false,
            ..IndexParams::default()
        };
        let (idx, report) = UnifiedIndex::build_with(&repo, params).unwrap();
        assert_eq!(report.removed_points, 0);
        assert_eq!(report.r_prime, None);
        assert_eq!(idx.dataset(0).unwrap().len(), 102);
    }
}
