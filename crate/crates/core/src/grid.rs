//! Uniform `2^theta x 2^theta` grid over the repository and z-order
//! signatures of datasets.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Mbr, PointSet};
use crate::scalar::Scalar;

/// Default grid resolution.
pub const DEFAULT_THETA: u32 = 5;

/// Largest supported resolution; cell ids then fit in 32 bits.
pub const MAX_THETA: u32 = 16;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid<T> {
    origin: [T; 2],
    extent: [T; 2],
    /// Upper corner, kept exact rather than recomputed as origin + extent.
    hi: [T; 2],
    theta: u32,
}

impl<T: Scalar> Grid<T> {
    pub fn new(origin: [T; 2], extent: [T; 2], theta: u32) -> Result<Self> {
        if !(1..=MAX_THETA).contains(&theta) {
            return Err(Error::InvalidParameter(format!(
                "theta {theta} outside 1..={MAX_THETA}"
            )));
        }
        if extent.iter().any(|e| !e.is_finite() || *e < T::zero())
            || origin.iter().any(|o| !o.is_finite())
        {
            return Err(Error::InvalidParameter(
                "grid extent must be finite and non-negative".into(),
            ));
        }
        Ok(Self {
            origin,
            extent,
            hi: [origin[0] + extent[0], origin[1] + extent[1]],
            theta,
        })
    }

    /// Grid spanning the spatial axes of `mbr`.
    pub fn from_mbr(mbr: &Mbr<T>, theta: u32) -> Result<Self> {
        let mut g = Self::new(
            [mbr.lo()[0], mbr.lo()[1]],
            [mbr.width(0), mbr.width(1)],
            theta,
        )?;
        g.hi = [mbr.hi()[0], mbr.hi()[1]];
        Ok(g)
    }

    pub fn theta(&self) -> u32 {
        self.theta
    }

    pub fn origin(&self) -> [T; 2] {
        self.origin
    }

    pub fn extent(&self) -> [T; 2] {
        self.extent
    }

    pub fn cells_per_axis(&self) -> u64 {
        1u64 << self.theta
    }

    pub fn cell_width(&self, axis: usize) -> T {
        self.extent[axis] / T::of_usize(self.cells_per_axis() as usize)
    }

    fn axis_cell(&self, axis: usize, v: T) -> Option<u64> {
        let lo = self.origin[axis];
        if !(v >= lo && v <= self.hi[axis]) {
            return None;
        }
        let last = self.cells_per_axis() - 1;
        let width = self.cell_width(axis);
        if width <= T::zero() {
            return Some(0);
        }
        let c = ((v - lo) / width).floor();
        Some(c.to_u64().unwrap_or(last).min(last))
    }

    /// Cell coordinates of a point; points on the max boundary fall in the
    /// last cell.
    pub fn cell_of(&self, p: &[T]) -> Result<(u64, u64)> {
        self.try_cell_of(p).ok_or(Error::OutsideGrid)
    }

    /// Like [`Grid::cell_of`] but `None` for points outside the grid.
    pub fn try_cell_of(&self, p: &[T]) -> Option<(u64, u64)> {
        Some((self.axis_cell(0, p[0])?, self.axis_cell(1, p[1])?))
    }

    /// Signature of a point set that must lie entirely inside the grid.
    pub fn signature_of(&self, points: &PointSet<T>) -> Result<ZSignature> {
        let mut ids = Vec::with_capacity(points.len());
        for p in points.iter() {
            let (cx, cy) = self.cell_of(p)?;
            ids.push(morton_encode(cx, cy, self.theta)?);
        }
        Ok(ZSignature::from_unsorted(ids))
    }

    /// Signature of a foreign point set; points outside the grid occupy no
    /// cell.
    pub fn signature_clipped(&self, points: &PointSet<T>) -> ZSignature {
        let ids = points
            .iter()
            .filter_map(|p| self.try_cell_of(p))
            .map(|(cx, cy)| interleave(cx) | (interleave(cy) << 1))
            .collect();
        ZSignature::from_unsorted(ids)
    }
}

/// Spreads the low 32 bits of `v` onto the even bit positions.
#[inline]
fn interleave(v: u64) -> u64 {
    let mut x = v & 0xFFFF_FFFF;
    x = (x | (x << 16)) & 0x0000_FFFF_0000_FFFF;
    x = (x | (x << 8)) & 0x00FF_00FF_00FF_00FF;
    x = (x | (x << 4)) & 0x0F0F_0F0F_0F0F_0F0F;
    x = (x | (x << 2)) & 0x3333_3333_3333_3333;
    x = (x | (x << 1)) & 0x5555_5555_5555_5555;
    x
}

#[inline]
fn compact(v: u64) -> u64 {
    let mut x = v & 0x5555_5555_5555_5555;
    x = (x | (x >> 1)) & 0x3333_3333_3333_3333;
    x = (x | (x >> 2)) & 0x0F0F_0F0F_0F0F_0F0F;
    x = (x | (x >> 4)) & 0x00FF_00FF_00FF_00FF;
    x = (x | (x >> 8)) & 0x0000_FFFF_0000_FFFF;
    x = (x | (x >> 16)) & 0x0000_0000_FFFF_FFFF;
    x
}

/// Morton id of a cell. `cx` fills the even bits, `cy` the odd bits.
pub fn morton_encode(cx: u64, cy: u64, theta: u32) -> Result<u64> {
    if theta > MAX_THETA {
        return Err(Error::InvalidParameter(format!(
            "theta {theta} above {MAX_THETA}"
        )));
    }
    let n = 1u64 << theta;
    for v in [cx, cy] {
        if v >= n {
            return Err(Error::CellOutOfRange { value: v, theta });
        }
    }
    Ok(interleave(cx) | (interleave(cy) << 1))
}

pub fn morton_decode(id: u64, theta: u32) -> Result<(u64, u64)> {
    if theta > MAX_THETA {
        return Err(Error::InvalidParameter(format!(
            "theta {theta} above {MAX_THETA}"
        )));
    }
    if id >= 1u64 << (2 * theta) {
        return Err(Error::CellOutOfRange { value: id, theta });
    }
    Ok((compact(id), compact(id >> 1)))
}

/// Sorted, duplicate-free set of occupied cell ids.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ZSignature(Vec<u64>);

impl ZSignature {
    pub fn from_unsorted(mut ids: Vec<u64>) -> Self {
        ids.sort_unstable();
        ids.dedup();
        Self(ids)
    }

    pub fn ids(&self) -> &[u64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn intersection_size(&self, other: &ZSignature) -> usize {
        signature_intersection_size(self, other)
    }

    pub fn union(&self, other: &ZSignature) -> ZSignature {
        use std::cmp::Ordering::*;
        let (a, b) = (&self.0, &other.0);
        let mut out = Vec::with_capacity(a.len().max(b.len()));
        let (mut i, mut j) = (0, 0);
        while i < a.len() && j < b.len() {
            match a[i].cmp(&b[j]) {
                Less => {
                    out.push(a[i]);
                    i += 1;
                }
                Greater => {
                    out.push(b[j]);
                    j += 1;
                }
                Equal => {
                    out.push(a[i]);
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&a[i..]);
        out.extend_from_slice(&b[j..]);
        ZSignature(out)
    }
}

/// `|a ∩ b|` by a linear merge of the two sorted id lists.
pub fn signature_intersection_size(a: &ZSignature, b: &ZSignature) -> usize {
    use std::cmp::Ordering::*;
    let (a, b) = (&a.0, &b.0);
    let (mut i, mut j, mut n) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            Less => i += 1,
            Greater => j += 1,
            Equal => {
                n += 1;
                i += 1;
                j += 1;
            }
        }
    }
    n
}
