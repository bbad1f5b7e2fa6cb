//! Serialization: netpbm images, FOGB checkpoints, JSON/CSV reports.

pub mod checkpoint;
pub mod ppm;
pub mod report;

pub use checkpoint::{load_model, save_model};
pub use ppm::{read_p5, read_p6, write_p5, write_p6};
pub use report::{write_csv, write_json};

use std::path::Path;

use crate::error::Result;

/// Writes via a sibling temp file plus rename so failures never leave a
/// partial artifact behind.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension(format!(
        "{}.tmp",
        path.extension().and_then(|e| e.to_str()).unwrap_or("out")
    ));
    std::fs::write(&tmp, bytes)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}
