//! Upper-level tree over dataset root nodes.

use serde::{Deserialize, Serialize};

use super::split::{partition, widest_axis};
use crate::error::{Error, Result};
use crate::geometry::{dist, Mbr};
use crate::grid::ZSignature;
use crate::scalar::Scalar;

/// What the upper level needs to know about one dataset root.
#[derive(Clone, Debug)]
pub struct RootSummary<'a, T> {
    pub id: u64,
    pub center: &'a [T],
    pub radius: T,
    pub mbr: &'a Mbr<T>,
    pub signature: &'a ZSignature,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum RepoChildren {
    Internal { left: u32, right: u32 },
    /// Slots of the dataset roots held by this leaf.
    Leaf { slots: Vec<u32> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RepoNode<T> {
    /// Mean of the contained dataset-root centers.
    pub center: Vec<T>,
    /// Covers every point of every contained dataset.
    pub radius: T,
    pub mbr: Mbr<T>,
    /// Union of the contained datasets' signatures.
    pub signature: ZSignature,
    /// Smallest dataset id below this node; used for tie-aware pruning.
    pub min_id: u64,
    pub children: RepoChildren,
}

impl<T> RepoNode<T> {
    pub fn is_leaf(&self) -> bool {
        matches!(self.children, RepoChildren::Leaf { .. })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RepoTree<T> {
    nodes: Vec<RepoNode<T>>,
}

impl<T: Scalar> RepoTree<T> {
    /// Splits the dataset roots like the bottom level, using each root's
    /// center as its position, until a node holds at most `capacity` roots.
    pub fn build(roots: &[RootSummary<'_, T>], capacity: usize, metric_dims: usize) -> Result<Self> {
        if roots.is_empty() {
            return Err(Error::Empty("repository"));
        }
        if capacity == 0 {
            return Err(Error::InvalidParameter("leaf capacity must be positive".into()));
        }
        let mut nodes: Vec<RepoNode<T>> = Vec::new();
        let mut stack: Vec<(Vec<u32>, Option<(u32, bool)>)> =
            vec![((0..roots.len() as u32).collect(), None)];
        // internal nodes get their signature after both children exist
        let mut internal: Vec<u32> = Vec::new();
        while let Some((slots, parent)) = stack.pop() {
            let idx = nodes.len() as u32;
            if let Some((p, right)) = parent {
                if let RepoChildren::Internal { left, right: r } = &mut nodes[p as usize].children {
                    if right {
                        *r = idx;
                    } else {
                        *left = idx;
                    }
                }
            }
            let mut mbr = roots[slots[0] as usize].mbr.clone();
            for &s in &slots[1..] {
                mbr.union_with(roots[s as usize].mbr);
            }
            let dim = roots[slots[0] as usize].center.len();
            let n = T::of_usize(slots.len());
            let center: Vec<T> = (0..dim)
                .map(|i| slots.iter().map(|&s| roots[s as usize].center[i]).sum::<T>() / n)
                .collect();
            let radius = slots
                .iter()
                .map(|&s| {
                    let r = &roots[s as usize];
                    dist(&center, r.center, metric_dims) + r.radius
                })
                .fold(T::zero(), T::max);
            let min_id = slots.iter().map(|&s| roots[s as usize].id).min().unwrap_or(0);

            if slots.len() <= capacity {
                let signature = slots
                    .iter()
                    .fold(ZSignature::default(), |acc, &s| acc.union(roots[s as usize].signature));
                nodes.push(RepoNode {
                    center,
                    radius,
                    mbr,
                    signature,
                    min_id,
                    children: RepoChildren::Leaf { slots },
                });
                continue;
            }
            let (axis, width) = widest_axis(&mbr);
            let lo = mbr.lo()[axis];
            nodes.push(RepoNode {
                center,
                radius,
                mbr,
                signature: ZSignature::default(),
                min_id,
                children: RepoChildren::Internal {
                    left: u32::MAX,
                    right: u32::MAX,
                },
            });
            internal.push(idx);
            let (left, right, _) = partition(slots, |s| roots[s as usize].center[axis], lo, width);
            stack.push((right, Some((idx, true))));
            stack.push((left, Some((idx, false))));
        }
        // children always follow their parent in preorder
        for &i in internal.iter().rev() {
            if let RepoChildren::Internal { left, right } = nodes[i as usize].children {
                let sig = nodes[left as usize]
                    .signature
                    .union(&nodes[right as usize].signature);
                nodes[i as usize].signature = sig;
            }
        }
        Ok(Self { nodes })
    }

    pub fn root(&self) -> &RepoNode<T> {
        &self.nodes[0]
    }

    pub fn node(&self, i: u32) -> &RepoNode<T> {
        &self.nodes[i as usize]
    }

    pub fn nodes(&self) -> &[RepoNode<T>] {
        &self.nodes
    }

    /// Dataset slots under node `i`.
    pub fn slots_under(&self, i: u32) -> Vec<u32> {
        let mut out = Vec::new();
        let mut stack = vec![i];
        while let Some(n) = stack.pop() {
            match &self.nodes[n as usize].children {
                RepoChildren::Leaf { slots } => out.extend_from_slice(slots),
                RepoChildren::Internal { left, right } => {
                    stack.push(*right);
                    stack.push(*left);
                }
            }
        }
        out
    }
}
