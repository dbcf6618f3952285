//! Bottom-level ball/box tree over the points of one dataset.

use serde::{Deserialize, Serialize};

use super::knee::RadiusLedger;
use super::split::{partition, widest_axis, SplitRule};
use crate::error::{Error, Result};
use crate::geometry::{dist, dist_sq, Mbr, PointSet};
use crate::scalar::Scalar;

/// A node of a dataset tree. Points under a node occupy the contiguous range
/// `start..end` of the tree's point storage.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TreeNode<T> {
    /// Mean of the contained points.
    pub center: Vec<T>,
    /// Largest distance from `center` to a contained point.
    pub radius: T,
    pub mbr: Mbr<T>,
    /// `[left, right]` for internal nodes.
    pub children: Option<[u32; 2]>,
    pub start: u32,
    pub end: u32,
}

impl<T> TreeNode<T> {
    pub fn is_leaf(&self) -> bool {
        self.children.is_none()
    }

    pub fn len(&self) -> usize {
        (self.end - self.start) as usize
    }

    pub fn is_empty(&self) -> bool {
        self.end == self.start
    }

    pub fn range(&self) -> std::ops::Range<usize> {
        self.start as usize..self.end as usize
    }
}

/// Counters collected while splitting.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SplitStats {
    pub median_fallbacks: usize,
    pub forced_leaves: usize,
}

/// Ball/box tree of one point set. Node 0 is the root; nodes are stored in
/// preorder and leaves keep their points contiguous.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetTree<T> {
    metric_dims: usize,
    points: PointSet<T>,
    /// Index of each stored point in the source point set.
    point_ids: Vec<u32>,
    nodes: Vec<TreeNode<T>>,
    /// Per node on the metric axes: center, radius, box lo, box hi. A flat
    /// copy of the node geometry for the distance traversal.
    packed: Vec<T>,
}

/// Center (mean over all coordinates), radius (over `metric_dims`) and box of
/// the selected points.
fn summarize<T: Scalar>(
    src: &PointSet<T>,
    ids: &[u32],
    metric_dims: usize,
) -> (Vec<T>, T, Mbr<T>) {
    let dim = src.dim();
    let mut sum = vec![T::zero(); dim];
    let mut lo = src.point(ids[0] as usize).to_vec();
    let mut hi = lo.clone();
    for &i in ids {
        let p = src.point(i as usize);
        for (((s, l), h), &c) in sum.iter_mut().zip(&mut lo).zip(&mut hi).zip(p) {
            *s = *s + c;
            *l = l.min(c);
            *h = h.max(c);
        }
    }
    let mbr = Mbr::new(lo, hi).expect("finite points give a valid box");
    let n = T::of_usize(ids.len());
    let mut center: Vec<T> = sum.into_iter().map(|s| s / n).collect();
    // keep the mean inside the box when rounding drifts
    for (i, c) in center.iter_mut().enumerate() {
        *c = c.max(mbr.lo()[i]).min(mbr.hi()[i]);
    }
    let radius = ids
        .iter()
        .map(|&i| dist_sq(&center, src.point(i as usize), metric_dims))
        .fold(T::zero(), T::max)
        .sqrt();
    (center, radius, mbr)
}

impl<T: Scalar> DatasetTree<T> {
    /// Recursively splits `src` on the widest dimension until every leaf
    /// holds at most `capacity` points. Each leaf radius is appended to
    /// `ledger` when one is given.
    pub fn build(
        src: &PointSet<T>,
        capacity: usize,
        metric_dims: usize,
        ledger: Option<&mut RadiusLedger<T>>,
    ) -> Result<Self> {
        Self::build_with_stats(src, capacity, metric_dims, ledger).map(|(t, _)| t)
    }

    pub fn build_with_stats(
        src: &PointSet<T>,
        capacity: usize,
        metric_dims: usize,
        mut ledger: Option<&mut RadiusLedger<T>>,
    ) -> Result<(Self, SplitStats)> {
        if src.is_empty() {
            return Err(Error::Empty("point set"));
        }
        if capacity == 0 {
            return Err(Error::InvalidParameter("leaf capacity must be positive".into()));
        }
        if metric_dims == 0 || metric_dims > src.dim() {
            return Err(Error::InvalidParameter(format!(
                "metric_dims {metric_dims} outside 1..={}",
                src.dim()
            )));
        }
        if src.len() > u32::MAX as usize {
            return Err(Error::InvalidParameter("point set too large".into()));
        }
        let mut tree = DatasetTree {
            metric_dims,
            points: PointSet::with_capacity(src.dim(), src.len()),
            point_ids: Vec::with_capacity(src.len()),
            nodes: Vec::new(),
            packed: Vec::new(),
        };
        let mut stats = SplitStats::default();

        // (ids, parent, is_right)
        let mut stack: Vec<(Vec<u32>, Option<(u32, usize)>)> =
            vec![((0..src.len() as u32).collect(), None)];
        while let Some((ids, parent)) = stack.pop() {
            let idx = tree.nodes.len() as u32;
            if let Some((p, side)) = parent {
                let node = &mut tree.nodes[p as usize];
                let ch = node.children.get_or_insert([u32::MAX; 2]);
                ch[side] = idx;
            }
            let (center, radius, mbr) = summarize(src, &ids, metric_dims);
            let start = tree.point_ids.len() as u32;
            let end = start + ids.len() as u32;
            let (axis, width) = widest_axis(&mbr);
            let forced = ids.len() > capacity && width <= T::zero();
            if ids.len() <= capacity || forced {
                if forced {
                    stats.forced_leaves += 1;
                }
                if let Some(l) = ledger.as_deref_mut() {
                    l.push(radius);
                }
                for &i in &ids {
                    tree.points.push_unchecked(src.point(i as usize));
                    tree.point_ids.push(i);
                }
                tree.nodes.push(TreeNode {
                    center,
                    radius,
                    mbr,
                    children: None,
                    start,
                    end,
                });
                continue;
            }
            let lo = mbr.lo()[axis];
            tree.nodes.push(TreeNode {
                center,
                radius,
                mbr,
                children: None,
                start,
                end,
            });
            let (left, right, rule) =
                partition(ids, |i| src.point(i as usize)[axis], lo, width);
            if rule == SplitRule::Median {
                stats.median_fallbacks += 1;
            }
            // left is processed first so its points come first
            stack.push((right, Some((idx, 1))));
            stack.push((left, Some((idx, 0))));
        }
        tree.pack();
        Ok((tree, stats))
    }

    pub fn metric_dims(&self) -> usize {
        self.metric_dims
    }

    pub fn dim(&self) -> usize {
        self.points.dim()
    }

    pub fn root(&self) -> &TreeNode<T> {
        &self.nodes[0]
    }

    pub fn node(&self, i: u32) -> &TreeNode<T> {
        &self.nodes[i as usize]
    }

    pub fn nodes(&self) -> &[TreeNode<T>] {
        &self.nodes
    }

    /// Stored points in tree order.
    pub fn points(&self) -> &PointSet<T> {
        &self.points
    }

    pub fn point(&self, slot: usize) -> &[T] {
        self.points.point(slot)
    }

    /// Source index of the point stored at `slot`.
    pub fn point_id(&self, slot: usize) -> u32 {
        self.point_ids[slot]
    }

    pub fn point_ids(&self) -> &[u32] {
        &self.point_ids
    }

    pub fn len(&self) -> usize {
        self.point_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.point_ids.is_empty()
    }

    pub fn leaves(&self) -> impl Iterator<Item = (u32, &TreeNode<T>)> + '_ {
        self.nodes
            .iter()
            .enumerate()
            .filter(|(_, n)| n.is_leaf())
            .map(|(i, n)| (i as u32, n))
    }

    pub fn mbr(&self) -> &Mbr<T> {
        &self.root().mbr
    }

    /// Points stored in ascending source order, i.e. the retained points of
    /// the original dataset.
    pub fn points_in_source_order(&self) -> PointSet<T> {
        let mut order: Vec<usize> = (0..self.len()).collect();
        order.sort_by_key(|&s| self.point_ids[s]);
        let mut out = PointSet::with_capacity(self.dim(), self.len());
        for s in order {
            out.push_unchecked(self.point(s));
        }
        out
    }

    /// Drops, from every leaf whose radius exceeds `threshold`, the points
    /// farther than `threshold` from that leaf's center, then recomputes the
    /// bounds of each remaining node bottom-up. Emptied leaves are deleted and
    /// their parents collapse into the surviving sibling. Returns the source
    /// ids of removed points; if every point would go, nothing is removed.
    pub fn refine_bottom_up(&mut self, threshold: T) -> Vec<u32> {
        let mut keep = vec![true; self.len()];
        let mut removed = Vec::new();
        for node in self.nodes.iter().filter(|n| n.is_leaf()) {
            if node.radius <= threshold {
                continue;
            }
            for slot in node.range() {
                if dist(&node.center, self.points.point(slot), self.metric_dims) > threshold {
                    keep[slot] = false;
                    removed.push(self.point_ids[slot]);
                }
            }
        }
        if removed.is_empty() {
            return removed;
        }
        if removed.len() == self.len() {
            log::warn!("outlier refinement would empty a dataset; keeping all its points");
            return Vec::new();
        }
        removed.sort_unstable();
        self.rebuild_without(&keep);
        removed
    }

    fn rebuild_without(&mut self, keep: &[bool]) {
        let old_nodes = std::mem::take(&mut self.nodes);
        let dim = self.dim();
        let old_points = std::mem::replace(&mut self.points, PointSet::new(dim));
        let old_ids = std::mem::take(&mut self.point_ids);
        let kept_under = |n: &TreeNode<T>| n.range().filter(|&s| keep[s]).count();

        // Copy surviving structure in preorder, collapsing single-child
        // internals into their child.
        let mut stack: Vec<(u32, Option<(u32, usize)>)> = vec![(0, None)];
        while let Some((mut old, parent)) = stack.pop() {
            while let Some([l, r]) = old_nodes[old as usize].children {
                let (kl, kr) = (
                    kept_under(&old_nodes[l as usize]),
                    kept_under(&old_nodes[r as usize]),
                );
                if kl == 0 {
                    old = r;
                } else if kr == 0 {
                    old = l;
                } else {
                    break;
                }
            }
            let idx = self.nodes.len() as u32;
            if let Some((p, side)) = parent {
                self.nodes[p as usize].children.get_or_insert([u32::MAX; 2])[side] = idx;
            }
            let node = &old_nodes[old as usize];
            let start = self.point_ids.len() as u32;
            let end = start + kept_under(node) as u32;
            match node.children {
                None => {
                    for s in node.range().filter(|&s| keep[s]) {
                        self.points.push_unchecked(old_points.point(s));
                        self.point_ids.push(old_ids[s]);
                    }
                    self.nodes.push(TreeNode {
                        center: Vec::new(),
                        radius: T::zero(),
                        mbr: node.mbr.clone(),
                        children: None,
                        start,
                        end,
                    });
                }
                Some([l, r]) => {
                    self.nodes.push(TreeNode {
                        center: Vec::new(),
                        radius: T::zero(),
                        mbr: node.mbr.clone(),
                        children: None,
                        start,
                        end,
                    });
                    stack.push((r, Some((idx, 1))));
                    stack.push((l, Some((idx, 0))));
                }
            }
        }
        self.recompute_bounds();
    }

    /// Recomputes center, radius and box of every node from its points.
    fn recompute_bounds(&mut self) {
        let ids: Vec<u32> = (0..self.len() as u32).collect();
        for node in &mut self.nodes {
            let (c, r, m) = summarize(&self.points, &ids[node.range()], self.metric_dims);
            node.center = c;
            node.radius = r;
            node.mbr = m;
        }
        self.pack();
    }

    fn pack(&mut self) {
        let md = self.metric_dims;
        self.packed.clear();
        self.packed.reserve(self.nodes.len() * (3 * md + 1));
        for n in &self.nodes {
            self.packed.extend_from_slice(&n.center[..md]);
            self.packed.push(n.radius);
            self.packed.extend_from_slice(&n.mbr.lo()[..md]);
            self.packed.extend_from_slice(&n.mbr.hi()[..md]);
        }
    }

    /// Center, radius, box lo and box hi of node `i` on the metric axes.
    #[inline]
    pub(crate) fn packed_node(&self, i: u32) -> (&[T], T, &[T], &[T]) {
        let md = self.metric_dims;
        let stride = 3 * md + 1;
        let g = &self.packed[i as usize * stride..(i as usize + 1) * stride];
        (&g[..md], g[md], &g[md + 1..2 * md + 1], &g[2 * md + 1..])
    }
}
