//! EEG hemispheric-asymmetry features and empathy-score prediction.
//!
//! The crate covers the whole offline pipeline: loading and band-pass
//! filtering raw recordings ([`signal`]), Welch band powers and log-power
//! asymmetry features ([`spectral`]), a five-way feature-ranking ensemble
//! ([`featsel`]), regression and classification models ([`models`]),
//! cross-validated evaluation ([`eval`]) and a synthetic cohort generator
//! with a planted effect ([`synth`]) that serves as an end-to-end oracle.
//!
//! Data-parallel loops go through [`exec::Execution`]; build without the
//! default `parallel` feature for a purely sequential crate.

pub mod error;
pub mod eval;
pub mod exec;
pub mod extract;
pub mod featsel;
pub mod linalg;
pub mod models;
pub mod rng;
pub mod signal;
pub mod spectral;
pub mod statmath;
pub mod synth;
pub mod table;

pub use error::{Error, Result};
pub use exec::Execution;

/// Write via a sibling temporary file and rename, so readers never see a
/// partially written file.
pub fn write_atomic(path: &std::path::Path, contents: &str) -> Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = std::path::PathBuf::from(tmp);
    std::fs::write(&tmp, contents).map_err(|e| Error::io(&tmp, e))?;
    std::fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}
