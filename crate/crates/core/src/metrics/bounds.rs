use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{dist, Mbr};
use crate::grid::{signature_intersection_size, ZSignature};
use crate::scalar::Scalar;

/// Intersecting area of two boxes on the spatial axes; zero when disjoint.
pub fn ia<T: Scalar>(a: &Mbr<T>, b: &Mbr<T>) -> T {
    (0..2)
        .map(|i| {
            let lo = a.lo()[i].max(b.lo()[i]);
            let hi = a.hi()[i].min(b.hi()[i]);
            (hi - lo).max(T::zero())
        })
        .fold(T::one(), |acc, l| acc * l)
}

/// Number of grid cells occupied by both datasets.
pub fn gbo(query: &ZSignature, target: &ZSignature) -> usize {
    signature_intersection_size(query, target)
}

/// Range bounding a directed Hausdorff distance.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HausBounds<T> {
    pub lb: T,
    pub ub: T,
}

/// Bounds on `H(Q -> D)` from the two bounding balls, with a single
/// center-to-center distance.
///
/// The lower bound needs `o1` to be the centroid of `Q` and the upper bound
/// needs `o2` to be the centroid of `D`; index nodes satisfy both.
pub fn haus_bounds<T: Scalar>(o1: &[T], r1: T, o2: &[T], r2: T, dims: usize) -> HausBounds<T> {
    let d = dist(o1, o2, dims);
    bounds_from_distance(d, r1, r2)
}

#[inline]
pub(crate) fn bounds_from_distance<T: Scalar>(d: T, r1: T, r2: T) -> HausBounds<T> {
    let lb = (d - r2).max(T::zero());
    let ub = if r2 == T::zero() {
        d + r1
    } else {
        (d * d + r2 * r2).sqrt() + r1
    };
    HausBounds { lb, ub }
}

/// Early-termination radius for approximate Hausdorff.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpsilonPolicy<T> {
    epsilon: T,
}

impl<T: Scalar> EpsilonPolicy<T> {
    pub fn new(epsilon: T) -> Result<Self> {
        if epsilon.partial_cmp(&T::zero()) != Some(std::cmp::Ordering::Greater) || !epsilon.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "epsilon must be positive and finite, got {epsilon}"
            )));
        }
        Ok(Self { epsilon })
    }

    /// One grid cell on axis 0: `(hi[0] - lo[0]) / 2^theta`.
    pub fn from_mbr(mbr: &Mbr<T>, theta: u32) -> Result<Self> {
        Self::new(mbr.width(0) / T::of_usize(1usize << theta))
    }

    pub fn value(&self) -> T {
        self.epsilon
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bx(lo: [f64; 2], hi: [f64; 2]) -> Mbr<f64> {
        Mbr::new(lo.to_vec(), hi.to_vec()).unwrap()
    }

    #[test]
    fn ia_examples() {
        assert_eq!(ia(&bx([0.0, 0.0], [2.0, 2.0]), &bx([1.0, 1.0], [3.0, 3.0])), 1.0);
        assert_eq!(ia(&bx([0.0, 0.0], [1.0, 1.0]), &bx([5.0, 5.0], [6.0, 6.0])), 0.0);
        let a = bx([-1.0, 2.0], [3.0, 4.5]);
        assert_eq!(ia(&a, &a), a.area_2d());
        // edge touching has zero area
        assert_eq!(ia(&bx([0.0, 0.0], [1.0, 1.0]), &bx([1.0, 0.0], [2.0, 1.0])), 0.0);
    }

    #[test]
    fn gbo_examples() {
        let a = ZSignature::from_unsorted(vec![3, 9, 12]);
        let b = ZSignature::from_unsorted(vec![4, 8]);
        assert_eq!(gbo(&a, &a), 3);
        assert_eq!(gbo(&a, &b), 0);
    }

    #[test]
    fn bounds_examples() {
        let b = haus_bounds(&[0.0, 0.0], 1.0, &[10.0, 0.0], 2.0, 2);
        assert_eq!(b.lb, 8.0);
        assert!((b.ub - (104f64.sqrt() + 1.0)).abs() < 1e-12);
        assert!((b.ub - 11.19804).abs() < 1e-5);
        let b = haus_bounds(&[1.0, 1.0], 0.5, &[1.0, 1.0], 3.0, 2);
        assert_eq!(b.lb, 0.0);
        assert_eq!(b.ub, 3.5);
    }

    #[test]
    fn epsilon_policy() {
        let m = bx([0.0, 0.0], [64.0, 10.0]);
        assert_eq!(EpsilonPolicy::from_mbr(&m, 5).unwrap().value(), 2.0);
        assert!(EpsilonPolicy::new(0.0f64).is_err());
        assert!(EpsilonPolicy::new(f64::NAN).is_err());
    }
}
