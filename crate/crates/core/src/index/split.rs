//! Widest-dimension midpoint partitioning shared by both index levels.

use crate::geometry::Mbr;
use crate::scalar::{cmp_scalar, Scalar};

/// How a node's objects were divided between its two children.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SplitRule {
    /// Objects beyond the midpoint of the widest axis went left.
    Midpoint,
    /// The midpoint left one side empty; objects were split by rank instead.
    Median,
}

/// Axis with the strictly largest width (first one wins ties) and that width.
pub(crate) fn widest_axis<T: Scalar>(mbr: &Mbr<T>) -> (usize, T) {
    let mut axis = 0;
    let mut best = T::neg_infinity();
    for i in 0..mbr.dim() {
        let w = mbr.width(i);
        if w > best {
            best = w;
            axis = i;
        }
    }
    (axis, best)
}

/// Splits `items` into (left, right): objects whose key exceeds
/// `lo + width / 2` go left, the rest right, both in input order. When one
/// side would be empty the items are split by rank on the key instead, the
/// larger half going left.
pub(crate) fn partition<T: Scalar>(
    items: Vec<u32>,
    key: impl Fn(u32) -> T,
    lo: T,
    width: T,
) -> (Vec<u32>, Vec<u32>, SplitRule) {
    let mid = lo + width / T::of(2.0);
    let (left, right): (Vec<u32>, Vec<u32>) = items.iter().partition(|&&i| key(i) > mid);
    if !left.is_empty() && !right.is_empty() {
        return (left, right, SplitRule::Midpoint);
    }
    let mut ranked: Vec<(usize, u32)> = items.into_iter().enumerate().collect();
    ranked.sort_by(|a, b| cmp_scalar(key(a.1), key(b.1)).then(a.0.cmp(&b.0)));
    let half = ranked.len() / 2;
    let mut right: Vec<(usize, u32)> = ranked[..half].to_vec();
    let mut left: Vec<(usize, u32)> = ranked[half..].to_vec();
    left.sort_by_key(|x| x.0);
    right.sort_by_key(|x| x.0);
    (
        left.into_iter().map(|x| x.1).collect(),
        right.into_iter().map(|x| x.1).collect(),
        SplitRule::Median,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn widest_axis_prefers_first_on_ties() {
        let m = Mbr::new(vec![0.0, 0.0, 0.0], vec![2.0, 5.0, 5.0]).unwrap();
        assert_eq!(widest_axis(&m), (1, 5.0));
    }

    #[test]
    fn midpoint_sends_greater_left() {
        let keys = [0.0, 10.0, 4.0, 6.0];
        let (l, r, rule) = partition(vec![0, 1, 2, 3], |i| keys[i as usize], 0.0, 10.0);
        assert_eq!(rule, SplitRule::Midpoint);
        assert_eq!(l, vec![1, 3]);
        assert_eq!(r, vec![0, 2]);
    }

    #[test]
    fn exact_midpoint_goes_right() {
        let keys = [5.0, 10.0];
        let (l, r, _) = partition(vec![0, 1], |i| keys[i as usize], 0.0, 10.0);
        assert_eq!((l, r), (vec![1], vec![0]));
    }

    #[test]
    fn degenerate_falls_back_to_median() {
        // all keys left of the box midpoint
        let keys = [1.0, 0.0, 2.0, 1.0, 0.5];
        let (l, r, rule) = partition(vec![0, 1, 2, 3, 4], |i| keys[i as usize], 0.0, 100.0);
        assert_eq!(rule, SplitRule::Median);
        assert_eq!(l.len() + r.len(), 5);
        assert_eq!(r.len(), 2);
        let max_right = r.iter().map(|&i| keys[i as usize]).fold(f64::MIN, f64::max);
        let min_left = l.iter().map(|&i| keys[i as usize]).fold(f64::MAX, f64::min);
        assert!(max_right <= min_left);
    }

    #[test]
    fn identical_keys_still_progress() {
        let (l, r, rule) = partition(vec![3, 1, 2], |_| 7.0, 7.0, 0.0);
        assert_eq!(rule, SplitRule::Median);
        assert_eq!((l.len(), r.len()), (2, 1));
    }
}
