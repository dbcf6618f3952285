//! Exhaustive structural checks of a built index.

use std::fmt;

use super::{RepoChildren, UnifiedIndex};
use crate::geometry::{dist, Repository};
use crate::grid::ZSignature;
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Violation {
    BallContainment { dataset: Option<u64>, node: u32 },
    BoxContainment { dataset: Option<u64>, node: u32 },
    RadiusNotTight { dataset: u64, node: u32 },
    Partition { dataset: u64, node: u32 },
    PointSet { dataset: u64 },
    Signature { dataset: u64 },
    SignatureUnion { node: u32 },
    Reachability { dataset: u64, times: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct AuditReport {
    pub nodes_checked: usize,
    pub point_checks: usize,
}

fn within<T: Scalar>(d: T, r: T) -> bool {
    d <= r + r * T::of(1e-9)
}

/// Checks ball and box containment, exact radii, leaf partitioning, point
/// accounting against `source` (when given), dataset signatures, upper-level
/// signature unions and that every dataset is reachable exactly once.
pub fn audit<T: Scalar>(
    index: &UnifiedIndex<T>,
    source: Option<&Repository<T>>,
) -> Result<AuditReport, Vec<Violation>> {
    let mut bad = Vec::new();
    let mut report = AuditReport::default();
    let md = index.metric_dims();

    for e in index.entries() {
        let tree = &e.tree;
        let mut covered = vec![0u8; tree.len()];
        for (i, node) in tree.nodes().iter().enumerate() {
            let i = i as u32;
            report.nodes_checked += 1;
            let mut max_d = T::zero();
            for s in node.range() {
                let p = tree.point(s);
                let d = dist(&node.center, p, md);
                max_d = max_d.max(d);
                if !within(d, node.radius) {
                    bad.push(Violation::BallContainment { dataset: Some(e.id), node: i });
                }
                if !node.mbr.contains(p) {
                    bad.push(Violation::BoxContainment { dataset: Some(e.id), node: i });
                }
                report.point_checks += 1;
            }
            if max_d != node.radius {
                bad.push(Violation::RadiusNotTight { dataset: e.id, node: i });
            }
            match node.children {
                Some([l, r]) => {
                    let (l, r) = (tree.node(l), tree.node(r));
                    if l.is_empty() || r.is_empty() || l.start != node.start || l.end != r.start || r.end != node.end {
                        bad.push(Violation::Partition { dataset: e.id, node: i });
                    }
                }
                None => node.range().for_each(|s| covered[s] += 1),
            }
        }
        if covered.iter().any(|&c| c != 1) || tree.root().range() != (0..tree.len()) {
            bad.push(Violation::Partition { dataset: e.id, node: 0 });
        }

        // retained + removed must be exactly the source dataset
        let mut ids: Vec<u32> = tree.point_ids().to_vec();
        ids.extend_from_slice(&e.removed);
        ids.sort_unstable();
        let complete = ids.len() == e.original_len && ids.iter().enumerate().all(|(k, &v)| k as u32 == v);
        let coords_match = source.and_then(|r| r.get(e.id)).is_none_or(|ds| {
            ds.len() == e.original_len
                && (0..tree.len()).all(|s| tree.point(s) == ds.points().point(tree.point_id(s) as usize))
        });
        if !complete || !coords_match {
            bad.push(Violation::PointSet { dataset: e.id });
        }

        match index.grid().signature_of(tree.points()) {
            Ok(sig) if sig == e.signature => {}
            _ => bad.push(Violation::Signature { dataset: e.id }),
        }
    }

    let repo = index.repo_tree();
    let mut reach = vec![0usize; index.len()];
    for (i, node) in repo.nodes().iter().enumerate() {
        let i = i as u32;
        report.nodes_checked += 1;
        let expected = match &node.children {
            RepoChildren::Leaf { slots } => {
                slots.iter().for_each(|&s| reach[s as usize] += 1);
                slots
                    .iter()
                    .fold(ZSignature::default(), |acc, &s| acc.union(&index.entry(s).signature))
            }
            RepoChildren::Internal { left, right } => repo
                .node(*left)
                .signature
                .union(&repo.node(*right).signature),
        };
        if expected != node.signature {
            bad.push(Violation::SignatureUnion { node: i });
        }
        for s in repo.slots_under(i) {
            let tree = &index.entry(s).tree;
            if !node.mbr.covers_2d(tree.mbr()) || !(0..tree.dim()).all(|a| {
                node.mbr.lo()[a] <= tree.mbr().lo()[a] && tree.mbr().hi()[a] <= node.mbr.hi()[a]
            }) {
                bad.push(Violation::BoxContainment { dataset: None, node: i });
            }
            for p in tree.points().iter() {
                report.point_checks += 1;
                if !within(dist(&node.center, p, md), node.radius) {
                    bad.push(Violation::BallContainment { dataset: None, node: i });
                    break;
                }
            }
        }
    }
    for (slot, &times) in reach.iter().enumerate() {
        if times != 1 {
            bad.push(Violation::Reachability {
                dataset: index.entry(slot as u32).id,
                times,
            });
        }
    }

    if bad.is_empty() {
        Ok(report)
    } else {
        Err(bad)
    }
}
