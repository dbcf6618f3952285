//! Directed Hausdorff distance over two dataset trees with a descending
//! queue of query entities, each carrying an ascending queue of candidate
//! target entities. The same traversal, run to exhaustion, yields every
//! query point's nearest neighbor.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::bounds::{bounds_from_distance, EpsilonPolicy};
use crate::error::{Error, Result};
use crate::geometry::dist;
use crate::index::DatasetTree;
use crate::scalar::{cmp_scalar, Scalar};

/// A node of a tree or one of its stored points.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Entity {
    Node(u32),
    Point(u32),
}

impl Entity {
    fn is_point(self) -> bool {
        matches!(self, Entity::Point(_))
    }
}

/// Target entity in a query entity's candidate queue.
#[derive(Clone, Copy, Debug)]
struct Candidate<T> {
    /// Lower bound used for ordering; exact distance for point pairs.
    lb: T,
    entity: Entity,
    /// Node creation order, or source point id, for deterministic ties.
    tie: u64,
}

impl<T: Scalar> Candidate<T> {
    fn sort_key(&self) -> (T, bool, u64) {
        (self.lb, self.entity.is_point(), self.tie)
    }
}

impl<T: Scalar> PartialEq for Candidate<T> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl<T: Scalar> Eq for Candidate<T> {}

impl<T: Scalar> PartialOrd for Candidate<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<T: Scalar> Ord for Candidate<T> {
    // reversed: BinaryHeap pops the smallest bound; nodes before points on
    // equal bounds, then lower tie value
    fn cmp(&self, other: &Self) -> Ordering {
        let (a, b) = (self.sort_key(), other.sort_key());
        cmp_scalar(b.0, a.0)
            .then(b.1.cmp(&a.1))
            .then(b.2.cmp(&a.2))
    }
}

/// Query entity with an upper bound on the nearest-neighbor distance of
/// every point it contains.
struct Entry<T> {
    key: T,
    seq: u64,
    entity: Entity,
    cands: BinaryHeap<Candidate<T>>,
}

impl<T: Scalar> PartialEq for Entry<T> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl<T: Scalar> Eq for Entry<T> {}

impl<T: Scalar> PartialOrd for Entry<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<T: Scalar> Ord for Entry<T> {
    // largest key first, older entries first on ties
    fn cmp(&self, other: &Self) -> Ordering {
        cmp_scalar(self.key, other.key).then(other.seq.cmp(&self.seq))
    }
}

/// How a Hausdorff run ended.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum HausOutcome<T> {
    /// The distance (exact, or within `2 * epsilon` in approximate mode).
    Distance(T),
    /// The distance is known to exceed the supplied threshold.
    Exceeds,
}

impl<T> HausOutcome<T> {
    pub fn distance(self) -> Option<T> {
        match self {
            HausOutcome::Distance(d) => Some(d),
            HausOutcome::Exceeds => None,
        }
    }
}

/// Nearest neighbor of one query point, as stored slots of the two trees.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SlotMatch<T> {
    pub query_slot: u32,
    pub target_slot: u32,
    pub distance: T,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct TraversalStats {
    /// Entity pairs whose bounds were evaluated.
    pub pairs: usize,
    pub pops: usize,
}

/// Resumable dual-queue traversal of a query tree against a target tree.
pub struct HausdorffTraversal<'a, T> {
    query: &'a DatasetTree<T>,
    target: &'a DatasetTree<T>,
    dims: usize,
    heap: BinaryHeap<Entry<T>>,
    seq: u64,
    matches: Vec<SlotMatch<T>>,
    best: Option<T>,
    stats: TraversalStats,
    /// Largest number of children a target entity can have.
    target_fanout: usize,
    /// Emptied candidate buffers for reuse.
    pool: Vec<Vec<Candidate<T>>>,
    evaluated: Vec<(Entity, u64, T, T)>,
    fresh: Vec<(Entity, T, T)>,
}

impl<'a, T: Scalar> HausdorffTraversal<'a, T> {
    pub fn new(query: &'a DatasetTree<T>, target: &'a DatasetTree<T>) -> Result<Self> {
        if query.metric_dims() != target.metric_dims() {
            return Err(Error::DimensionMismatch {
                expected: target.metric_dims(),
                found: query.metric_dims(),
            });
        }
        if query.is_empty() || target.is_empty() {
            return Err(Error::Empty("dataset"));
        }
        let mut t = Self {
            query,
            target,
            dims: target.metric_dims(),
            heap: BinaryHeap::new(),
            seq: 0,
            matches: Vec::new(),
            best: None,
            stats: TraversalStats::default(),
            target_fanout: target.leaves().map(|(_, n)| n.len()).max().unwrap_or(2).max(2),
            pool: Vec::new(),
            evaluated: Vec::new(),
            fresh: Vec::new(),
        };
        let root = Entity::Node(0);
        let (_, lb, ub, _) = t.pair(root, root);
        let mut cands = BinaryHeap::new();
        cands.push(Candidate {
            lb: t.deflate(lb, root),
            entity: root,
            tie: 0,
        });
        let seq = t.next_seq();
        t.heap.push(Entry {
            key: t.inflate(ub),
            seq,
            entity: root,
            cands,
        });
        Ok(t)
    }

    pub fn stats(&self) -> TraversalStats {
        self.stats
    }

    fn next_seq(&mut self) -> u64 {
        self.seq += 1;
        self.seq
    }

    fn query_ball(&self, e: Entity) -> (&'a [T], T) {
        match e {
            Entity::Node(i) => {
                let (c, r, _, _) = self.query.packed_node(i);
                (c, r)
            }
            Entity::Point(s) => (self.query.point(s as usize), T::zero()),
        }
    }

    fn target_ball(&self, e: Entity) -> (&'a [T], T) {
        match e {
            Entity::Node(i) => {
                let (c, r, _, _) = self.target.packed_node(i);
                (c, r)
            }
            Entity::Point(s) => (self.target.point(s as usize), T::zero()),
        }
    }

    fn children(tree: &DatasetTree<T>, e: Entity, out: &mut Vec<Entity>) {
        out.clear();
        if let Entity::Node(i) = e {
            let n = tree.node(i);
            match n.children {
                Some([l, r]) => out.extend([Entity::Node(l), Entity::Node(r)]),
                None => out.extend(n.range().map(|s| Entity::Point(s as u32))),
            }
        }
    }

    /// (center distance, lower bound, upper bound, min-distance lower bound)
    #[inline]
    fn pair(&mut self, q: Entity, t: Entity) -> (T, T, T, T) {
        self.stats.pairs += 1;
        let (oq, rq) = self.query_ball(q);
        let (ot, rt) = self.target_ball(t);
        let d = dist(oq, ot, self.dims);
        match (q, t) {
            (Entity::Point(_), Entity::Point(_)) => (d, d, d, d),
            (Entity::Point(_), Entity::Node(_)) => {
                // a single query point is bounded by its distance to the
                // target box too
                let lb = self.at_least(d - rt, q, t);
                (d, lb, (d * d + rt * rt).sqrt(), lb)
            }
            (Entity::Node(_), Entity::Point(_)) => (d, d, d + rq, self.at_least(d - rq, q, t)),
            (Entity::Node(_), Entity::Node(_)) => {
                let b = bounds_from_distance(d, rq, rt);
                (d, b.lb, b.ub, self.at_least(d - rq - rt, q, t))
            }
        }
    }

    fn corners(tree: &'a DatasetTree<T>, e: Entity) -> (&'a [T], &'a [T]) {
        match e {
            Entity::Node(i) => {
                let (_, _, lo, hi) = tree.packed_node(i);
                (lo, hi)
            }
            Entity::Point(s) => {
                let p = tree.point(s as usize);
                (p, p)
            }
        }
    }

    /// `max(ball_gap, box_gap, 0)` where `box_gap` is the smallest distance
    /// between the two entities' boxes.
    #[inline]
    fn at_least(&self, ball_gap: T, q: Entity, t: Entity) -> T {
        let (qlo, qhi) = Self::corners(self.query, q);
        let (tlo, thi) = Self::corners(self.target, t);
        let mut s = T::zero();
        for i in 0..self.dims {
            let g = (tlo[i] - qhi[i]).max(qlo[i] - thi[i]).max(T::zero());
            s = s + g * g;
        }
        let ball_gap = ball_gap.max(T::zero());
        if s <= ball_gap * ball_gap {
            ball_gap
        } else {
            s.sqrt().max(ball_gap)
        }
    }

    fn inflate(&self, ub: T) -> T {
        ub + ub * T::slack()
    }

    fn deflate(&self, lb: T, e: Entity) -> T {
        if e.is_point() {
            lb
        } else {
            lb - lb * T::slack()
        }
    }

    fn tie(&self, e: Entity) -> u64 {
        match e {
            Entity::Point(s) => self.target.point_id(s as usize) as u64,
            Entity::Node(i) => i as u64,
        }
    }

    fn prunable(&self, min_d: T, key: T) -> bool {
        min_d - min_d * T::slack() > key
    }

    /// Replaces the head candidate of `e` by its children.
    fn refine_target(&mut self, mut e: Entry<T>, scratch: &mut Vec<Entity>) -> Entry<T> {
        let head = e.cands.pop().expect("candidate queue is never empty");
        Self::children(self.target, head.entity, scratch);
        let mut fresh = std::mem::take(&mut self.fresh);
        fresh.clear();
        for &c in scratch.iter() {
            let (_, lb, ub, min_d) = self.pair(e.entity, c);
            e.key = e.key.min(self.inflate(ub));
            fresh.push((c, lb, min_d));
        }
        for &(c, lb, min_d) in &fresh {
            if !self.prunable(min_d, e.key) {
                e.cands.push(Candidate {
                    lb: self.deflate(lb, c),
                    entity: c,
                    tie: self.tie(c),
                });
            }
        }
        self.fresh = fresh;
        e
    }

    fn recycle(&mut self, cands: BinaryHeap<Candidate<T>>) {
        let mut v = cands.into_vec();
        v.clear();
        self.pool.push(v);
    }

    /// Replaces `e` by its children, each inheriting the candidates.
    fn refine_query(&mut self, e: Entry<T>, scratch: &mut Vec<Entity>) {
        Self::children(self.query, e.entity, scratch);
        let kids = std::mem::take(scratch);
        let mut evaluated = std::mem::take(&mut self.evaluated);
        for &qc in &kids {
            evaluated.clear();
            let mut key = e.key;
            for c in e.cands.iter() {
                let (_, lb, ub, min_d) = self.pair(qc, c.entity);
                key = key.min(self.inflate(ub));
                evaluated.push((c.entity, c.tie, lb, min_d));
            }
            let mut kept = self
                .pool
                .pop()
                .unwrap_or_else(|| Vec::with_capacity(evaluated.len() + 2 * self.target_fanout));
            kept.extend(
                evaluated
                    .iter()
                    .filter(|(_, _, _, min_d)| !self.prunable(*min_d, key))
                    .map(|&(entity, tie, lb, _)| Candidate {
                        lb: self.deflate(lb, entity),
                        entity,
                        tie,
                    }),
            );
            let cands = BinaryHeap::from(kept);
            let seq = self.next_seq();
            self.heap.push(Entry {
                key,
                seq,
                entity: qc,
                cands,
            });
        }
        *scratch = kids;
        self.evaluated = evaluated;
        self.recycle(e.cands);
    }

    fn record(&mut self, e: &Entry<T>, head: &Candidate<T>) -> T {
        let (Entity::Point(q), Entity::Point(t)) = (e.entity, head.entity) else {
            unreachable!("only point pairs resolve");
        };
        let d = head.lb;
        self.matches.push(SlotMatch {
            query_slot: q,
            target_slot: t,
            distance: d,
        });
        d
    }

    /// Runs until the directed Hausdorff distance is known.
    ///
    /// With `epsilon`, a popped pair whose radii are both below it resolves
    /// to its center distance. With `abort_above`, the run stops as soon as
    /// the distance is proven to exceed that value.
    pub fn hausdorff(&mut self, epsilon: Option<&EpsilonPolicy<T>>, abort_above: Option<T>) -> HausOutcome<T> {
        let mut scratch = Vec::new();
        // an entry that would be popped next anyway skips the round trip
        let mut held: Option<Entry<T>> = None;
        loop {
            let e = match held.take() {
                Some(e) => e,
                None => match self.heap.pop() {
                    Some(e) => {
                        self.stats.pops += 1;
                        e
                    }
                    None => return HausOutcome::Distance(self.best.expect("a non-empty query resolves")),
                },
            };
            if self.best.is_some_and(|best| e.key <= best) {
                self.heap.push(e);
                return HausOutcome::Distance(self.best.expect("checked"));
            }
            let head = *e.cands.peek().expect("candidate queue is never empty");
            if let Some(eps) = epsilon {
                let (oq, rq) = self.query_ball(e.entity);
                let (ot, rt) = self.target_ball(head.entity);
                if rq < eps.value() && rt < eps.value() {
                    let d = dist(oq, ot, self.dims);
                    self.heap.push(e);
                    return HausOutcome::Distance(d);
                }
            }
            if e.entity.is_point() && head.entity.is_point() {
                let d = self.record(&e, &head);
                self.best = Some(self.best.map_or(d, |b| b.max(d)));
                self.recycle(e.cands);
                continue;
            }
            if let Some(limit) = abort_above {
                if e.entity.is_point() && head.lb > limit {
                    self.heap.push(e);
                    return HausOutcome::Exceeds;
                }
            }
            if let Some(e) = self.step(e, head, &mut scratch) {
                if self.heap.peek().is_some_and(|top| *top > e) {
                    self.heap.push(e);
                } else {
                    held = Some(e);
                }
            }
        }
    }

    /// Refines the head target (returning the entry) or the query entity
    /// (queueing its children).
    fn step(&mut self, e: Entry<T>, head: Candidate<T>, scratch: &mut Vec<Entity>) -> Option<Entry<T>> {
        let (_, rq) = self.query_ball(e.entity);
        let (_, rt) = self.target_ball(head.entity);
        if !head.entity.is_point() && (rt > rq || e.entity.is_point()) {
            Some(self.refine_target(e, scratch))
        } else {
            self.refine_query(e, scratch);
            None
        }
    }

    /// Continues the traversal until every query point has its nearest
    /// target point. Ties go to the lowest source point id.
    pub fn finish_nearest(self) -> Vec<SlotMatch<T>> {
        self.finish_nearest_with_stats().0
    }

    pub fn finish_nearest_with_stats(mut self) -> (Vec<SlotMatch<T>>, TraversalStats) {
        let mut scratch = Vec::new();
        // order no longer matters: each entity runs until it resolves or splits
        while let Some(mut e) = self.heap.pop() {
            self.stats.pops += 1;
            loop {
                let head = *e.cands.peek().expect("candidate queue is never empty");
                if e.entity.is_point() && head.entity.is_point() {
                    self.record(&e, &head);
                    self.recycle(e.cands);
                    break;
                }
                match self.step(e, head, &mut scratch) {
                    Some(next) => e = next,
                    None => break,
                }
            }
        }
        self.matches.sort_by_key(|m| m.query_slot);
        (self.matches, self.stats)
    }
}

/// Exact directed Hausdorff distance from the query tree's points to the
/// target tree's points.
pub fn haus_exact<T: Scalar>(query: &DatasetTree<T>, target: &DatasetTree<T>) -> Result<T> {
    let mut t = HausdorffTraversal::new(query, target)?;
    Ok(t.hausdorff(None, None).distance().expect("no abort threshold"))
}

/// Directed Hausdorff distance within `2 * epsilon` of the exact value.
pub fn haus_approx<T: Scalar>(
    query: &DatasetTree<T>,
    target: &DatasetTree<T>,
    epsilon: &EpsilonPolicy<T>,
) -> Result<T> {
    let mut t = HausdorffTraversal::new(query, target)?;
    Ok(t.hausdorff(Some(epsilon), None).distance().expect("no abort threshold"))
}

/// `max(H(a -> b), H(b -> a))`.
pub fn haus_symmetric<T: Scalar>(a: &DatasetTree<T>, b: &DatasetTree<T>) -> Result<T> {
    Ok(haus_exact(a, b)?.max(haus_exact(b, a)?))
}

/// Nearest target point of every query point, keyed by stored slots.
pub fn nearest_slots<T: Scalar>(query: &DatasetTree<T>, target: &DatasetTree<T>) -> Result<Vec<SlotMatch<T>>> {
    Ok(HausdorffTraversal::new(query, target)?.finish_nearest())
}
