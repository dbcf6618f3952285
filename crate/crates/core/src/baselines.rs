//! Straightforward scans used as correctness oracles and benchmark
//! baselines. Nothing here touches the index's pruning code.

use crate::error::{Error, Result};
use crate::geometry::{Dataset, Mbr, PointSet, Repository};
use crate::grid::{Grid, ZSignature};
use crate::scalar::Scalar;

fn distance<T: Scalar>(a: &[T], b: &[T], dims: usize) -> T {
    let mut s = T::zero();
    for i in 0..dims {
        let d = a[i] - b[i];
        s = s + d * d;
    }
    s.sqrt()
}

fn check_dims<T: Scalar>(q: &PointSet<T>, d: &PointSet<T>, dims: usize) -> Result<()> {
    if q.is_empty() || d.is_empty() {
        return Err(Error::Empty("point set"));
    }
    if q.dim() < dims || d.dim() < dims {
        return Err(Error::DimensionMismatch {
            expected: dims,
            found: q.dim().min(d.dim()),
        });
    }
    Ok(())
}

/// Directed Hausdorff distance by double loop.
pub fn brute_hausdorff<T: Scalar>(q: &PointSet<T>, d: &PointSet<T>, dims: usize) -> Result<T> {
    check_dims(q, d, dims)?;
    let mut worst = T::zero();
    for a in q.iter() {
        let mut best = T::infinity();
        for b in d.iter() {
            best = best.min(distance(a, b, dims));
        }
        worst = worst.max(best);
    }
    Ok(worst)
}

/// A scan result: dataset id and score.
pub type ScanHit<T> = (u64, T);

fn rank<T: Scalar>(mut hits: Vec<ScanHit<T>>, similarity: bool, k: usize) -> Vec<ScanHit<T>> {
    hits.sort_by(|a, b| {
        let s = if similarity {
            b.1.partial_cmp(&a.1)
        } else {
            a.1.partial_cmp(&b.1)
        };
        s.expect("finite scores").then(a.0.cmp(&b.0))
    });
    hits.truncate(k);
    hits
}

/// Intersecting-area top-k by scanning every dataset box.
pub fn scan_ia_topk<T: Scalar>(datasets: &[(u64, Mbr<T>)], q: &PointSet<T>, k: usize) -> Vec<ScanHit<T>> {
    let Some(qm) = q.mbr() else { return Vec::new() };
    let hits = datasets
        .iter()
        .map(|(id, m)| {
            let w = (qm.hi()[0].min(m.hi()[0]) - qm.lo()[0].max(m.lo()[0])).max(T::zero());
            let h = (qm.hi()[1].min(m.hi()[1]) - qm.lo()[1].max(m.lo()[1])).max(T::zero());
            (*id, w * h)
        })
        .collect();
    rank(hits, true, k)
}

/// Grid-overlap top-k by scanning every dataset signature with hash sets.
pub fn scan_gbo_topk<T: Scalar>(
    signatures: &[(u64, ZSignature)],
    grid: &Grid<T>,
    q: &PointSet<T>,
    k: usize,
) -> Vec<ScanHit<T>> {
    let cells: std::collections::HashSet<u64> = grid.signature_clipped(q).ids().iter().copied().collect();
    let hits = signatures
        .iter()
        .map(|(id, z)| (*id, T::of_usize(z.ids().iter().filter(|c| cells.contains(c)).count())))
        .collect();
    rank(hits, true, k)
}

/// Smallest distance between two boxes on the first `dims` axes.
fn box_gap<T: Scalar>(a_lo: &[T], a_hi: &[T], b: &Mbr<T>, dims: usize) -> T {
    let mut s = T::zero();
    for i in 0..dims {
        let g = (b.lo()[i] - a_hi[i]).max(a_lo[i] - b.hi()[i]).max(T::zero());
        s = s + g * g;
    }
    s.sqrt()
}

/// Lower bound on `H(Q -> D)` from the two boxes: `Q`'s box has a point on
/// each face, and that point is at least the face-to-box gap away from `D`.
pub fn mbr_hausdorff_lower_bound<T: Scalar>(q: &Mbr<T>, d: &Mbr<T>, dims: usize) -> T {
    let mut best = T::zero();
    for axis in 0..dims {
        for side in [q.lo()[axis], q.hi()[axis]] {
            let mut lo = q.lo()[..dims].to_vec();
            let mut hi = q.hi()[..dims].to_vec();
            lo[axis] = side;
            hi[axis] = side;
            best = best.max(box_gap(&lo, &hi, d, dims));
        }
    }
    best
}

/// Hausdorff top-k: every dataset's box bound is checked against the current
/// kth distance and the survivors are scored by double loop.
pub fn scan_haus_topk<T: Scalar>(datasets: &[Dataset<T>], q: &PointSet<T>, k: usize, dims: usize) -> Result<Vec<ScanHit<T>>> {
    let qm = q.mbr().ok_or(Error::Empty("query"))?;
    let mut top: Vec<ScanHit<T>> = Vec::new();
    for ds in datasets {
        let lb = mbr_hausdorff_lower_bound(&qm, &ds.mbr(), dims);
        if top.len() == k && lb > top[k - 1].1 {
            continue;
        }
        let h = brute_hausdorff(q, ds.points(), dims)?;
        top.push((ds.id, h));
        top = rank(top, false, k);
    }
    Ok(top)
}

/// Exact Hausdorff ranking of every dataset.
pub fn brute_haus_topk<T: Scalar>(datasets: &[Dataset<T>], q: &PointSet<T>, k: usize, dims: usize) -> Result<Vec<ScanHit<T>>> {
    let hits = datasets
        .iter()
        .map(|ds| Ok((ds.id, brute_hausdorff(q, ds.points(), dims)?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(rank(hits, false, k))
}

/// For each query point: index of the nearest point in `d` (lowest index on
/// ties) and its distance.
pub fn brute_nn<T: Scalar>(q: &PointSet<T>, d: &PointSet<T>, dims: usize) -> Result<Vec<(usize, T)>> {
    check_dims(q, d, dims)?;
    Ok(q.iter()
        .map(|a| {
            let mut best = (0, T::infinity());
            for (j, b) in d.iter().enumerate() {
                let x = distance(a, b, dims);
                if x < best.1 {
                    best = (j, x);
                }
            }
            best
        })
        .collect())
}

/// Ids of datasets whose box meets the closed rectangle `[lo, hi]`.
pub fn brute_range_datasets<T: Scalar>(datasets: &[(u64, Mbr<T>)], lo: [T; 2], hi: [T; 2]) -> Vec<u64> {
    let mut ids: Vec<u64> = datasets
        .iter()
        .filter(|(_, m)| (0..2).all(|i| m.lo()[i] <= hi[i] && lo[i] <= m.hi()[i]))
        .map(|(id, _)| *id)
        .collect();
    ids.sort_unstable();
    ids
}

/// Indices of the points inside the closed rectangle `[lo, hi]`.
pub fn brute_range_points<T: Scalar>(points: &PointSet<T>, lo: [T; 2], hi: [T; 2]) -> Vec<usize> {
    points
        .iter()
        .enumerate()
        .filter(|(_, p)| (0..2).all(|i| lo[i] <= p[i] && p[i] <= hi[i]))
        .map(|(i, _)| i)
        .collect()
}

/// Indices of points with fewer than `min_neighbors` other points within
/// `radius`.
pub fn distance_outlier_oracle<T: Scalar>(points: &PointSet<T>, radius: T, min_neighbors: usize, dims: usize) -> Vec<usize> {
    (0..points.len())
        .filter(|&i| {
            let p = points.point(i);
            let close = points
                .iter()
                .enumerate()
                .filter(|&(j, q)| j != i && distance(p, q, dims) <= radius)
                .take(min_neighbors)
                .count();
            close < min_neighbors
        })
        .collect()
}

/// Dataset boxes of a repository, for the box-based scans.
pub fn dataset_boxes<T: Scalar>(repo: &Repository<T>) -> Vec<(u64, Mbr<T>)> {
    repo.datasets().iter().map(|d| (d.id, d.mbr())).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ps(rows: &[[f64; 2]]) -> PointSet<f64> {
        PointSet::from_rows(rows).unwrap()
    }

    #[test]
    fn hausdorff_examples() {
        assert_eq!(brute_hausdorff(&ps(&[[0.0, 0.0]]), &ps(&[[3.0, 4.0]]), 2).unwrap(), 5.0);
        let q = ps(&[[0.0, 0.0], [1.0, 0.0]]);
        let d = ps(&[[0.0, 0.0]]);
        assert_eq!(brute_hausdorff(&q, &d, 2).unwrap(), 1.0);
        assert_eq!(brute_hausdorff(&d, &q, 2).unwrap(), 0.0);
        assert!(brute_hausdorff(&PointSet::new(2), &d, 2).is_err());
    }

    #[test]
    fn box_bound_is_a_lower_bound() {
        let q = ps(&[[0.0, 0.0], [4.0, 0.0], [2.0, 3.0]]);
        let d = ps(&[[10.0, 0.0], [12.0, 1.0]]);
        let lb = mbr_hausdorff_lower_bound(&q.mbr().unwrap(), &d.mbr().unwrap(), 2);
        assert_eq!(lb, 10.0);
        assert!(lb <= brute_hausdorff(&q, &d, 2).unwrap());
    }

    #[test]
    fn nn_ties_take_lowest_index() {
        let q = ps(&[[0.0, 0.0]]);
        let d = ps(&[[1.0, 0.0], [0.0, 1.0], [3.0, 4.0]]);
        assert_eq!(brute_nn(&q, &d, 2).unwrap(), vec![(0, 1.0)]);
    }

    #[test]
    fn outlier_oracle() {
        let mut rows: Vec<[f64; 2]> = (0..100).map(|i| [(i % 10) as f64 * 0.1, (i / 10) as f64 * 0.1]).collect();
        rows.push([50.0, 50.0]);
        let flagged = distance_outlier_oracle(&ps(&rows), 0.5, 3, 2);
        assert_eq!(flagged, vec![100]);
    }

    #[test]
    fn scans_rank_by_polarity() {
        let boxes = vec![
            (3, Mbr::new(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap()),
            (1, Mbr::new(vec![0.0, 0.0], vec![2.0, 2.0]).unwrap()),
            (2, Mbr::new(vec![5.0, 5.0], vec![6.0, 6.0]).unwrap()),
        ];
        let q = ps(&[[0.0, 0.0], [2.0, 2.0]]);
        let hits = scan_ia_topk(&boxes, &q, 3);
        assert_eq!(hits, vec![(1, 4.0), (3, 1.0), (2, 0.0)]);
        assert_eq!(brute_range_datasets(&boxes, [1.0, 1.0], [5.0, 5.0]), vec![1, 2, 3]);
    }
}
