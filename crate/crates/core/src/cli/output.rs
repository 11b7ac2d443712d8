use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::ComplexField;
use crate::identities::IdentityReport;

/// Writes through a temporary file in the target directory, then renames.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(value).map_err(|e| Error::Io(std::io::Error::other(e)))?;
    bytes.push(b'\n');
    write_atomic(path, &bytes)
}

/// Identity time series as tidy CSV.
pub fn emit_plotdata(report: &IdentityReport, path: &Path) -> Result<()> {
    let mut buf = Vec::new();
    report.write_csv(&mut buf)?;
    write_atomic(path, &buf)
}

/// `x, re, im` per node.
pub fn emit_field(u: &ComplexField, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let err = |e: csv::Error| Error::Io(std::io::Error::other(e));
    w.write_record(["x", "re", "im"]).map_err(err)?;
    for (j, z) in u.values().iter().enumerate() {
        w.write_record([
            format!("{:.16e}", u.grid().x(j)),
            format!("{:.16e}", z.re),
            format!("{:.16e}", z.im),
        ])
        .map_err(err)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(std::io::Error::other(e.to_string())))?;
    write_atomic(path, &bytes)
}
