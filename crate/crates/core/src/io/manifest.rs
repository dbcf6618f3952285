use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::loader::{load_dataset, RejectedRow};
use crate::error::{Error, Result};
use crate::geometry::{Repository, DEFAULT_METRIC_DIMS};
use crate::grid::DEFAULT_THETA;
use crate::index::{IndexParams, DEFAULT_LEAF_CAPACITY};
use crate::scalar::Scalar;

/// One point file of a repository.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetSpec {
    pub id: u64,
    pub name: String,
    /// Relative paths resolve against the manifest's directory.
    pub path: PathBuf,
    #[serde(default = "default_dim")]
    pub dim: usize,
}

fn default_dim() -> usize {
    2
}

fn default_theta() -> u32 {
    DEFAULT_THETA
}

fn default_metric_dims() -> usize {
    DEFAULT_METRIC_DIMS
}

fn default_capacity() -> usize {
    DEFAULT_LEAF_CAPACITY
}

/// Repository description in TOML.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub name: String,
    #[serde(default = "default_theta")]
    pub theta: u32,
    #[serde(default = "default_metric_dims")]
    pub metric_dims: usize,
    #[serde(default = "default_capacity")]
    pub leaf_capacity: usize,
    #[serde(default)]
    pub datasets: Vec<DatasetSpec>,
    #[serde(skip)]
    base_dir: PathBuf,
}

#[derive(Clone, Debug)]
pub struct LoadedRepository<T> {
    pub repository: Repository<T>,
    /// Rejected rows per dataset id, only for files that had any.
    pub rejected: Vec<(u64, Vec<RejectedRow>)>,
}

impl Manifest {
    pub fn new(name: impl Into<String>, theta: u32, metric_dims: usize, leaf_capacity: usize, datasets: Vec<DatasetSpec>) -> Self {
        Self {
            name: name.into(),
            theta,
            metric_dims,
            leaf_capacity,
            datasets,
            base_dir: PathBuf::new(),
        }
    }

    pub fn parse(text: &str, base_dir: impl Into<PathBuf>) -> Result<Self> {
        let mut m: Manifest = toml::from_str(text).map_err(|e| Error::Parse {
            path: "manifest".into(),
            message: e.to_string(),
        })?;
        m.base_dir = base_dir.into();
        let mut ids: Vec<u64> = m.datasets.iter().map(|d| d.id).collect();
        ids.sort_unstable();
        if let Some(w) = ids.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::DuplicateId(w[0]));
        }
        Ok(m)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::parse(&text, base).map_err(|e| match e {
            Error::Parse { message, .. } => Error::Parse {
                path: path.display().to_string(),
                message,
            },
            other => other,
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("manifest serializes")
    }

    pub fn resolve(&self, spec: &DatasetSpec) -> PathBuf {
        if spec.path.is_absolute() {
            spec.path.clone()
        } else {
            self.base_dir.join(&spec.path)
        }
    }

    pub fn index_params(&self) -> IndexParams {
        IndexParams {
            leaf_capacity: self.leaf_capacity,
            theta: self.theta,
            metric_dims: self.metric_dims,
            outlier_removal: true,
        }
    }

    /// Loads every listed file.
    pub fn load<T: Scalar>(&self) -> Result<LoadedRepository<T>> {
        if self.datasets.is_empty() {
            return Err(Error::Empty("manifest datasets"));
        }
        let mut datasets = Vec::with_capacity(self.datasets.len());
        let mut rejected = Vec::new();
        for spec in &self.datasets {
            let (ds, bad) = load_dataset(spec.id, spec.name.clone(), &self.resolve(spec), spec.dim)?;
            if !bad.is_empty() {
                rejected.push((spec.id, bad));
            }
            datasets.push(ds);
        }
        Ok(LoadedRepository {
            repository: Repository::new(datasets, self.theta, self.metric_dims)?,
            rejected,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_with_defaults() {
        let m = Manifest::parse(
            r#"
name = "demo"
[[datasets]]
id = 3
name = "parks"
path = "parks.csv"
"#,
            "/data",
        )
        .unwrap();
        assert_eq!(m.theta, 5);
        assert_eq!(m.leaf_capacity, 10);
        assert_eq!(m.metric_dims, 2);
        assert_eq!(m.datasets[0].dim, 2);
        assert_eq!(m.resolve(&m.datasets[0]), PathBuf::from("/data/parks.csv"));
    }

    #[test]
    fn duplicate_ids_rejected() {
        let text = r#"
name = "x"
[[datasets]]
id = 1
name = "a"
path = "a.csv"
[[datasets]]
id = 1
name = "b"
path = "b.csv"
"#;
        assert!(matches!(Manifest::parse(text, "."), Err(Error::DuplicateId(1))));
        assert!(matches!(Manifest::parse("name = 3", "."), Err(Error::Parse { .. })));
    }

    #[test]
    fn loads_files() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("a.csv"), "x,y\n0,0\n1,1\n").unwrap();
        std::fs::write(dir.path().join("b.csv"), "2\t2\n3\t3\nbad\t1\n").unwrap();
        let text = "name = \"t\"\ntheta = 4\n[[datasets]]\nid = 0\nname = \"a\"\npath = \"a.csv\"\n[[datasets]]\nid = 1\nname = \"b\"\npath = \"b.csv\"\n";
        let path = dir.path().join("repo.toml");
        std::fs::write(&path, text).unwrap();
        let m = Manifest::from_path(&path).unwrap();
        let loaded = m.load::<f64>().unwrap();
        assert_eq!(loaded.repository.datasets().len(), 2);
        assert_eq!(loaded.repository.theta, 4);
        assert_eq!(loaded.rejected.len(), 1);
        assert_eq!(loaded.rejected[0].1[0].line, 3);
    }
}
