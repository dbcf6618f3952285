//! Seeded synthetic repositories with labelled outliers.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::manifest::{DatasetSpec, Manifest};
use crate::error::{Error, Result};
use crate::geometry::{Dataset, PointSet, Repository, DEFAULT_METRIC_DIMS};
use crate::grid::DEFAULT_THETA;
use crate::index::DEFAULT_LEAF_CAPACITY;
use crate::scalar::Scalar;

/// Side of the square every dataset is placed in.
const WORLD: f64 = 1000.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Distribution {
    /// Points uniform in one box per dataset.
    Uniform,
    /// Points uniform in a few small disks per dataset.
    Clustered,
}

impl FromStr for Distribution {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform" => Ok(Self::Uniform),
            "clustered" => Ok(Self::Clustered),
            _ => Err(Error::InvalidParameter(format!("unknown distribution {s:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub datasets: usize,
    /// Points per dataset, outliers included.
    pub points: usize,
    pub dim: usize,
    pub distribution: Distribution,
    /// Fraction of each dataset's points planted as outliers, rounded to the
    /// nearest count.
    pub outlier_rate: f64,
    pub seed: u64,
    pub theta: u32,
    pub metric_dims: usize,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            datasets: 10,
            points: 1000,
            dim: 2,
            distribution: Distribution::Clustered,
            outlier_rate: 0.0,
            seed: 0,
            theta: DEFAULT_THETA,
            metric_dims: DEFAULT_METRIC_DIMS,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Synthetic<T> {
    pub repository: Repository<T>,
    /// `labels[i][j]` is true when point `j` of dataset `i` is a planted outlier.
    pub labels: Vec<Vec<bool>>,
}

/// A disk of inliers: its centroid and the largest inlier distance to it.
struct Cluster {
    center: [f64; 2],
    radius: f64,
}

fn disk_point(rng: &mut ChaCha8Rng, c: [f64; 2], r: f64) -> [f64; 2] {
    let a = rng.random_range(0.0..std::f64::consts::TAU);
    let d = r * rng.random::<f64>().sqrt();
    [c[0] + d * a.cos(), c[1] + d * a.sin()]
}

fn measure(points: &[[f64; 2]]) -> Cluster {
    let n = points.len() as f64;
    let center = [
        points.iter().map(|p| p[0]).sum::<f64>() / n,
        points.iter().map(|p| p[1]).sum::<f64>() / n,
    ];
    let radius = points
        .iter()
        .map(|p| (p[0] - center[0]).hypot(p[1] - center[1]))
        .fold(0.0, f64::max);
    Cluster { center, radius }
}

fn gen_dataset(spec: &SyntheticSpec, rng: &mut ChaCha8Rng) -> (Vec<[f64; 2]>, Vec<bool>) {
    let n = spec.points;
    let outliers = ((spec.outlier_rate * n as f64).round() as usize).min(n.saturating_sub(1));
    let inliers = n - outliers;
    let origin = [rng.random_range(0.0..WORLD * 0.9), rng.random_range(0.0..WORLD * 0.9)];
    let extent = rng.random_range(10.0..WORLD * 0.1);

    let mut groups: Vec<Vec<[f64; 2]>> = Vec::new();
    match spec.distribution {
        Distribution::Uniform => groups.push(
            (0..inliers)
                .map(|_| {
                    [
                        origin[0] + rng.random_range(0.0..extent),
                        origin[1] + rng.random_range(0.0..extent),
                    ]
                })
                .collect(),
        ),
        Distribution::Clustered => {
            let k = rng.random_range(1..=4usize).min(inliers.max(1));
            let centers: Vec<([f64; 2], f64)> = (0..k)
                .map(|_| {
                    let c = [
                        origin[0] + rng.random_range(0.0..extent),
                        origin[1] + rng.random_range(0.0..extent),
                    ];
                    (c, extent * rng.random_range(0.02..0.08))
                })
                .collect();
            groups = vec![Vec::new(); k];
            for i in 0..inliers {
                let (c, r) = centers[i % k];
                groups[i % k].push(disk_point(rng, c, r));
            }
        }
    }
    groups.retain(|g| !g.is_empty());
    let clusters: Vec<Cluster> = groups.iter().map(|g| measure(g)).collect();

    let mut labelled: Vec<([f64; 2], bool)> = groups.into_iter().flatten().map(|p| (p, false)).collect();
    let mut placed = 0;
    while placed < outliers {
        let home = &clusters[rng.random_range(0..clusters.len())];
        let base = home.radius.max(extent * 0.01);
        let a = rng.random_range(0.0..std::f64::consts::TAU);
        let d = base * rng.random_range(10.0..20.0);
        let p = [home.center[0] + d * a.cos(), home.center[1] + d * a.sin()];
        let far = clusters
            .iter()
            .all(|c| (p[0] - c.center[0]).hypot(p[1] - c.center[1]) >= 10.0 * c.radius.max(extent * 0.01));
        if far {
            labelled.push((p, true));
            placed += 1;
        }
    }
    labelled.shuffle(rng);
    labelled.into_iter().unzip()
}

/// Builds a repository following `spec`; the same spec always yields the
/// same coordinates.
pub fn generate_synthetic<T: Scalar>(spec: &SyntheticSpec) -> Result<Synthetic<T>> {
    if spec.datasets == 0 || spec.points == 0 {
        return Err(Error::InvalidParameter("datasets and points must be positive".into()));
    }
    if !(0.0..1.0).contains(&spec.outlier_rate) {
        return Err(Error::InvalidParameter(format!(
            "outlier rate {} outside [0, 1)",
            spec.outlier_rate
        )));
    }
    if spec.dim < 2 {
        return Err(Error::TooFewDimensions(spec.dim));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut datasets = Vec::with_capacity(spec.datasets);
    let mut labels = Vec::with_capacity(spec.datasets);
    for i in 0..spec.datasets {
        let (xy, lab) = gen_dataset(spec, &mut rng);
        let mut points = PointSet::with_capacity(spec.dim, xy.len());
        let mut row = vec![T::zero(); spec.dim];
        for p in &xy {
            row[0] = T::of(p[0]);
            row[1] = T::of(p[1]);
            for v in &mut row[2..] {
                *v = T::of(rng.random::<f64>());
            }
            points.try_push(&row)?;
        }
        datasets.push(Dataset::new(i as u64, format!("syn-{i}"), points)?);
        labels.push(lab);
    }
    Ok(Synthetic {
        repository: Repository::new(datasets, spec.theta, spec.metric_dims)?,
        labels,
    })
}

impl<T: Scalar> Synthetic<T> {
    /// Writes one CSV per dataset and a manifest into `dir`; returns the
    /// manifest path.
    pub fn write_to(&self, dir: &Path, name: &str) -> Result<PathBuf> {
        std::fs::create_dir_all(dir)?;
        let repo = &self.repository;
        let mut specs = Vec::new();
        for ds in repo.datasets() {
            let file = format!("{}.csv", ds.name);
            let mut text = String::new();
            for p in ds.points().iter() {
                let row: Vec<String> = p.iter().map(|v| v.to_string()).collect();
                writeln!(text, "{}", row.join(",")).expect("string write");
            }
            std::fs::write(dir.join(&file), text)?;
            specs.push(DatasetSpec {
                id: ds.id,
                name: ds.name.clone(),
                path: PathBuf::from(file),
                dim: repo.dim(),
            });
        }
        let manifest = Manifest::new(name, repo.theta, repo.metric_dims, DEFAULT_LEAF_CAPACITY, specs);
        let path = dir.join("manifest.toml");
        std::fs::write(&path, manifest.to_toml())?;
        Ok(path)
    }
}
