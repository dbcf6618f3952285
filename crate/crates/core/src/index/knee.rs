//! Leaf radius ledger and the knee-based outlier radius threshold.

use serde::{Deserialize, Serialize};

use crate::scalar::{cmp_scalar, Scalar};

/// Radii of every point leaf created while building the bottom level.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RadiusLedger<T> {
    radii: Vec<T>,
}

impl<T: Scalar> RadiusLedger<T> {
    pub fn new() -> Self {
        Self { radii: Vec::new() }
    }

    pub fn push(&mut self, r: T) {
        self.radii.push(r);
    }

    pub fn extend(&mut self, other: RadiusLedger<T>) {
        self.radii.extend(other.radii);
    }

    pub fn len(&self) -> usize {
        self.radii.len()
    }

    pub fn is_empty(&self) -> bool {
        self.radii.is_empty()
    }

    pub fn radii(&self) -> &[T] {
        &self.radii
    }

    /// Radii sorted largest first.
    pub fn sorted_descending(&self) -> Vec<T> {
        let mut v = self.radii.clone();
        v.sort_by(|a, b| cmp_scalar(*b, *a));
        v
    }
}

impl<T: Scalar> FromIterator<T> for RadiusLedger<T> {
    fn from_iter<I: IntoIterator<Item = T>>(iter: I) -> Self {
        Self {
            radii: iter.into_iter().collect(),
        }
    }
}

/// Outlier radius threshold of a ledger; `+inf` when the ledger is empty.
pub fn knee_threshold<T: Scalar>(ledger: &RadiusLedger<T>) -> T {
    knee_of_descending(&ledger.sorted_descending())
}

/// Knee of a descending radius curve: the radius with the largest gap below
/// the chord from the first to the last entry. A curve with no positive gap
/// yields its first (largest) radius.
pub fn knee_of_descending<T: Scalar>(phi: &[T]) -> T {
    let Some(&first) = phi.first() else {
        return T::infinity();
    };
    let n = phi.len();
    let last = phi[n - 1];
    let step = (first - last) / T::of_usize(n);
    let mut best_gap = T::zero();
    let mut knee = first;
    for (i, &r) in phi.iter().enumerate().skip(1) {
        let gap = first - T::of_usize(i) * step - r;
        if gap > best_gap {
            best_gap = gap;
            knee = r;
        }
    }
    knee
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_evaluated_gaps() {
        // gaps g1..g4 = [0, 4, 3, 2]
        assert_eq!(knee_of_descending(&[10.0, 8.0, 2.0, 1.0, 0.0]), 2.0);
    }

    #[test]
    fn flat_curve_has_no_knee() {
        assert_eq!(knee_of_descending(&[3.5; 12]), 3.5);
    }

    #[test]
    fn degenerate_lengths() {
        assert_eq!(knee_of_descending(&[1.0]), 1.0);
        assert_eq!(knee_of_descending::<f64>(&[]), f64::INFINITY);
        assert_eq!(knee_threshold(&RadiusLedger::<f32>::new()), f32::INFINITY);
    }

    #[test]
    fn ledger_is_sorted_before_detection() {
        let ledger: RadiusLedger<f64> = [1.0, 0.0, 10.0, 2.0, 8.0].into_iter().collect();
        assert_eq!(ledger.sorted_descending(), vec![10.0, 8.0, 2.0, 1.0, 0.0]);
        assert_eq!(knee_threshold(&ledger), 2.0);
    }

    #[test]
    fn planted_two_regime_curve() {
        // a few large radii followed by a long tail of small ones
        let mut radii: Vec<f64> = (0..8).map(|i| 50.0 - i as f64).collect();
        radii.extend((0..500).map(|i| 2.0 - i as f64 * 0.002));
        let ledger: RadiusLedger<f64> = radii.into_iter().collect();
        let knee = knee_threshold(&ledger);
        assert!(knee > 1.0 && knee < 43.0, "knee {knee}");
        assert!(knee <= 2.0);
    }
}
