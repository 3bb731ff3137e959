//! Target-specific offensive-language training-set expansion.
//!
//! A seed classifier tags replies addressed to a target account, users whose
//! replies are most often tagged offensive are selected, all of their replies
//! to that target are relabelled offensive, and the enlarged training set is
//! used to retrain. The crate provides every stage of that pipeline plus the
//! evaluation protocols used to measure it.
//!
//! Numeric code is generic over [`Scalar`] (`f32` or `f64`); the aliases at
//! the crate root fix it to `f64`, which is what the CLI uses.

pub mod classifiers;
pub mod corpus;
pub mod error;
pub mod eval;
pub mod expansion;
pub mod scalar;
pub mod textpipe;

use std::fs;
use std::io::Write;
use std::path::Path;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub use corpus::{Label, LabeledExample, Provenance, Tweet};
pub use expansion::{ExpansionConfig, ExpansionStrategy, UserTargetStats};
pub use textpipe::{FeaturizerConfig, Weighting};

pub type SparseVector = textpipe::SparseVector<f64>;
pub type ClassifierModel = classifiers::ClassifierModel<f64>;
pub type LinearMarginModel = classifiers::LinearMarginModel<f64>;
pub type EmbedBagModel = classifiers::EmbedBagModel<f64>;
pub type Prediction = classifiers::Prediction<f64>;
pub type Metrics = eval::Metrics<f64>;
pub type ExperimentReport = eval::ExperimentReport<f64>;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Writes `bytes` to a sibling temp file, then renames it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    let name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| "out".into());
    let tmp = dir.join(format!(".{name}.tmp{}", std::process::id()));
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    result.map_err(|e| Error::io(path, e))
}
