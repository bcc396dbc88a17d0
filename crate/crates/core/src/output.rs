//! Atomic file output.

use std::io::Write;
use std::path::Path;

use crate::error::{Result, VolumaError};

/// Write `contents` to a temporary file next to `path`, then rename it into
/// place so readers never observe a partial file.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir).map_err(|e| VolumaError::io(dir, e))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| VolumaError::io(dir, e))?;
    tmp.write_all(contents)
        .and_then(|_| tmp.flush())
        .map_err(|e| VolumaError::io(path, e))?;
    tmp.persist(path)
        .map_err(|e| VolumaError::io(path, e.error))?;
    Ok(())
}

/// Shortest round-tripping decimal, switching to exponent notation for very
/// small or very large magnitudes so table cells stay readable.
pub fn num(x: f64) -> String {
    let a = x.abs();
    if a != 0.0 && a.is_finite() && !(1e-4..1e15).contains(&a) {
        format!("{x:e}")
    } else {
        x.to_string()
    }
}

/// `num`, or `NA` for a missing value.
pub fn opt_num(x: Option<f64>) -> String {
    x.map_or_else(|| "NA".to_string(), num)
}
