//! Range and exemplar dataset search over the upper tree, and range and
//! nearest-neighbor point search inside one dataset.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{dist, Mbr, MetricKind, PointSet};
use crate::grid::ZSignature;
use crate::index::{DatasetEntry, DatasetTree, RepoChildren, UnifiedIndex};
use crate::metrics::{gbo, ia, EpsilonPolicy, HausOutcome, HausdorffTraversal};
use crate::scalar::{cmp_scalar, Scalar};

/// Closed query rectangle on the two spatial axes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RangeQuery<T> {
    bounds: Mbr<T>,
}

impl<T: Scalar> RangeQuery<T> {
    pub fn new(lo: [T; 2], hi: [T; 2]) -> Result<Self> {
        if lo.iter().chain(&hi).any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("range corners must be finite".into()));
        }
        if lo[0] > hi[0] || lo[1] > hi[1] {
            return Err(Error::InvalidParameter("range lo must not exceed hi".into()));
        }
        Ok(Self {
            bounds: Mbr::new(lo.to_vec(), hi.to_vec())?,
        })
    }

    pub fn lo(&self) -> [T; 2] {
        [self.bounds.lo()[0], self.bounds.lo()[1]]
    }

    pub fn hi(&self) -> [T; 2] {
        [self.bounds.hi()[0], self.bounds.hi()[1]]
    }

    pub fn intersects(&self, mbr: &Mbr<T>) -> bool {
        self.bounds.intersects_2d(mbr)
    }

    pub fn covers(&self, mbr: &Mbr<T>) -> bool {
        self.bounds.covers_2d(mbr)
    }

    pub fn contains(&self, p: &[T]) -> bool {
        self.bounds.contains_2d(p)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetHit<T> {
    pub dataset_id: u64,
    pub score: T,
    /// 1-based position in the result list.
    pub rank: usize,
}

/// Ids of the datasets whose boxes meet `range`, ascending.
pub fn range_dataset_search<T: Scalar>(index: &UnifiedIndex<T>, range: &RangeQuery<T>) -> Vec<u64> {
    let repo = index.repo_tree();
    let mut out = Vec::new();
    let mut stack = vec![0u32];
    while let Some(i) = stack.pop() {
        let node = repo.node(i);
        if !range.intersects(&node.mbr) {
            continue;
        }
        match &node.children {
            RepoChildren::Internal { left, right } => stack.extend([*right, *left]),
            RepoChildren::Leaf { slots } => out.extend(
                slots
                    .iter()
                    .map(|&s| index.entry(s))
                    .filter(|e| range.intersects(e.mbr()))
                    .map(|e| e.id),
            ),
        }
    }
    out.sort_unstable();
    out
}

/// Pruning and scoring counters of one exemplar search.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SearchStats {
    /// Upper-tree nodes skipped together with their subtrees.
    pub pruned_nodes: Vec<u32>,
    /// Dataset slots skipped inside visited leaves.
    pub pruned_datasets: Vec<u32>,
    /// Datasets whose exact score was computed.
    pub scored: usize,
    /// Hausdorff runs stopped early because they could not enter the top k.
    pub aborted: usize,
}

/// A query dataset prepared once for a search.
struct Prepared<T> {
    tree: DatasetTree<T>,
    mbr: Mbr<T>,
    signature: ZSignature,
}

/// Best-first list of at most `k` hits.
struct TopK<T> {
    k: usize,
    similarity: bool,
    hits: Vec<(T, u64)>,
}

impl<T: Scalar> TopK<T> {
    fn order(&self, a: (T, u64), b: (T, u64)) -> Ordering {
        let by_score = if self.similarity {
            cmp_scalar(b.0, a.0)
        } else {
            cmp_scalar(a.0, b.0)
        };
        by_score.then(a.1.cmp(&b.1))
    }

    fn full(&self) -> bool {
        self.hits.len() == self.k
    }

    /// Whether something scoring at best `bound` with id at least `min_id`
    /// could still enter.
    fn admits(&self, bound: T, min_id: u64) -> bool {
        match self.hits.last() {
            Some(&kth) if self.full() => self.order((bound, min_id), kth) == Ordering::Less,
            _ => true,
        }
    }

    fn kth_score(&self) -> Option<T> {
        self.full().then(|| self.hits[self.k - 1].0)
    }

    fn offer(&mut self, score: T, id: u64) {
        if !self.admits(score, id) {
            return;
        }
        let pos = self
            .hits
            .partition_point(|&h| self.order(h, (score, id)) == Ordering::Less);
        self.hits.insert(pos, (score, id));
        self.hits.truncate(self.k);
    }
}

struct Exemplar<'a, T> {
    index: &'a UnifiedIndex<T>,
    query: Prepared<T>,
    metric: MetricKind,
    epsilon: Option<EpsilonPolicy<T>>,
    top: TopK<T>,
    stats: SearchStats,
}

impl<T: Scalar> Exemplar<'_, T> {
    /// Best score any dataset inside the ball/box/signature could reach.
    fn bound(&self, center: &[T], radius: T, mbr: &Mbr<T>, signature: &ZSignature) -> T {
        match self.metric {
            MetricKind::Ia => ia(&self.query.mbr, mbr),
            MetricKind::Gbo => T::of_usize(gbo(&self.query.signature, signature)),
            MetricKind::HausExact | MetricKind::HausApprox => {
                let q = self.query.tree.root();
                let d = dist(&q.center, center, self.index.metric_dims());
                let lb = (d - radius).max(T::zero());
                lb - lb * T::slack()
            }
        }
    }

    fn score(&mut self, e: &DatasetEntry<T>) -> Option<T> {
        self.stats.scored += 1;
        match self.metric {
            MetricKind::Ia => Some(ia(&self.query.mbr, e.mbr())),
            MetricKind::Gbo => Some(T::of_usize(gbo(&self.query.signature, &e.signature))),
            MetricKind::HausExact | MetricKind::HausApprox => {
                let mut t = HausdorffTraversal::new(&self.query.tree, &e.tree).ok()?;
                let outcome = match self.metric {
                    MetricKind::HausApprox => t.hausdorff(self.epsilon.as_ref(), None),
                    _ => t.hausdorff(None, self.top.kth_score()),
                };
                match outcome {
                    HausOutcome::Distance(d) => Some(d),
                    HausOutcome::Exceeds => {
                        self.stats.aborted += 1;
                        None
                    }
                }
            }
        }
    }

    fn visit(&mut self, i: u32) {
        let repo = self.index.repo_tree();
        match &repo.node(i).children {
            RepoChildren::Internal { left, right } => {
                let mut kids: Vec<(T, u32)> = [*left, *right]
                    .into_iter()
                    .map(|c| {
                        let n = repo.node(c);
                        (self.bound(&n.center, n.radius, &n.mbr, &n.signature), c)
                    })
                    .collect();
                if self.top.order((kids[1].0, 0), (kids[0].0, 0)) == Ordering::Less {
                    kids.swap(0, 1);
                }
                for (bound, c) in kids {
                    if self.top.admits(bound, repo.node(c).min_id) {
                        self.visit(c);
                    } else {
                        self.stats.pruned_nodes.push(c);
                    }
                }
            }
            RepoChildren::Leaf { slots } => {
                let mut cands: Vec<(T, u32)> = slots
                    .iter()
                    .map(|&s| {
                        let e = self.index.entry(s);
                        (self.bound(e.center(), e.radius(), e.mbr(), &e.signature), s)
                    })
                    .collect();
                cands.sort_by(|a, b| {
                    self.top
                        .order((a.0, self.index.entry(a.1).id), (b.0, self.index.entry(b.1).id))
                });
                for (bound, s) in cands {
                    let e = self.index.entry(s);
                    if !self.top.admits(bound, e.id) {
                        self.stats.pruned_datasets.push(s);
                        continue;
                    }
                    if let Some(score) = self.score(e) {
                        self.top.offer(score, e.id);
                    }
                }
            }
        }
    }
}

fn check_query<T: Scalar>(index: &UnifiedIndex<T>, query: &PointSet<T>) -> Result<()> {
    if query.is_empty() {
        return Err(Error::Empty("query"));
    }
    if query.dim() < index.metric_dims().max(2) {
        return Err(Error::DimensionMismatch {
            expected: index.dim(),
            found: query.dim(),
        });
    }
    Ok(())
}

/// Top-k datasets most similar to `query` under `metric`, best first, ties
/// by ascending id. `epsilon` only affects approximate Hausdorff and
/// defaults to one grid cell.
pub fn exemplar_search<T: Scalar>(
    index: &UnifiedIndex<T>,
    query: &PointSet<T>,
    metric: MetricKind,
    k: usize,
    epsilon: Option<EpsilonPolicy<T>>,
) -> Result<Vec<DatasetHit<T>>> {
    exemplar_search_with_stats(index, query, metric, k, epsilon).map(|(hits, _)| hits)
}

pub fn exemplar_search_with_stats<T: Scalar>(
    index: &UnifiedIndex<T>,
    query: &PointSet<T>,
    metric: MetricKind,
    k: usize,
    epsilon: Option<EpsilonPolicy<T>>,
) -> Result<(Vec<DatasetHit<T>>, SearchStats)> {
    if k == 0 {
        return Err(Error::InvalidParameter("k must be at least 1".into()));
    }
    check_query(index, query)?;
    let epsilon = match (metric, epsilon) {
        (MetricKind::HausApprox, None) => Some(EpsilonPolicy::new(index.default_epsilon())?),
        (_, e) => e,
    };
    let params = index.params();
    let prepared = Prepared {
        tree: DatasetTree::build(query, params.leaf_capacity, params.metric_dims, None)?,
        mbr: query.mbr().expect("non-empty query"),
        signature: index.grid().signature_clipped(query),
    };
    let mut run = Exemplar {
        index,
        query: prepared,
        metric,
        epsilon,
        top: TopK {
            k: k.min(index.len()),
            similarity: metric.is_similarity(),
            hits: Vec::with_capacity(k.min(index.len()) + 1),
        },
        stats: SearchStats::default(),
    };
    let root = index.repo_tree().root();
    let bound = run.bound(&root.center, root.radius, &root.mbr, &root.signature);
    if run.top.admits(bound, root.min_id) {
        run.visit(0);
    }
    let hits = run
        .top
        .hits
        .iter()
        .enumerate()
        .map(|(i, &(score, dataset_id))| DatasetHit {
            dataset_id,
            score,
            rank: i + 1,
        })
        .collect();
    Ok((hits, run.stats))
}

/// Retained points of dataset `id` inside `range`, in source order, with
/// their source indices.
pub fn range_point_search<T: Scalar>(
    index: &UnifiedIndex<T>,
    id: u64,
    range: &RangeQuery<T>,
) -> Result<(Vec<u32>, PointSet<T>)> {
    let tree = &index.dataset(id)?.tree;
    let mut slots = Vec::new();
    let mut stack = vec![0u32];
    while let Some(i) = stack.pop() {
        let node = tree.node(i);
        if !range.intersects(&node.mbr) {
            continue;
        }
        if range.covers(&node.mbr) {
            slots.extend(node.range());
            continue;
        }
        match node.children {
            Some([l, r]) => stack.extend([r, l]),
            None => slots.extend(node.range().filter(|&s| range.contains(tree.point(s)))),
        }
    }
    slots.sort_unstable_by_key(|&s| tree.point_id(s));
    let mut points = PointSet::with_capacity(tree.dim(), slots.len());
    for &s in &slots {
        points.push_unchecked(tree.point(s));
    }
    Ok((slots.iter().map(|&s| tree.point_id(s)).collect(), points))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NnPair<T> {
    /// Position of the query point in the query set.
    pub query_index: usize,
    /// Source index of the nearest point in the dataset.
    pub nn_index: u32,
    pub nn: Vec<T>,
    pub distance: T,
}

/// Nearest retained point of dataset `id` for every query point, in query
/// order. With `warm_start`, a directed Hausdorff run precedes and its queues
/// are carried on; the answer is the same either way.
pub fn nn_point_search<T: Scalar>(
    index: &UnifiedIndex<T>,
    query: &PointSet<T>,
    id: u64,
    warm_start: bool,
) -> Result<Vec<NnPair<T>>> {
    let target = &index.dataset(id)?.tree;
    check_query(index, query)?;
    let params = index.params();
    let qtree = DatasetTree::build(query, params.leaf_capacity, params.metric_dims, None)?;
    let mut traversal = HausdorffTraversal::new(&qtree, target)?;
    if warm_start {
        traversal.hausdorff(None, None);
    }
    let mut pairs: Vec<NnPair<T>> = traversal
        .finish_nearest()
        .into_iter()
        .map(|m| NnPair {
            query_index: qtree.point_id(m.query_slot as usize) as usize,
            nn_index: target.point_id(m.target_slot as usize),
            nn: target.point(m.target_slot as usize).to_vec(),
            distance: m.distance,
        })
        .collect();
    pairs.sort_by_key(|p| p.query_index);
    Ok(pairs)
}
