//! Point files, repository manifests, synthetic repositories and index
//! snapshots.

mod loader;
mod manifest;
mod snapshot;
mod synthetic;

pub use loader::{load_dataset, load_points, Delimiter, LoadedPoints, RejectedRow};
pub use manifest::{DatasetSpec, LoadedRepository, Manifest};
pub use snapshot::{load_index, read_index, save_index, write_index, FORMAT_VERSION};
pub use synthetic::{generate_synthetic, Distribution, Synthetic, SyntheticSpec};
