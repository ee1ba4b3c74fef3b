//! Deterministic file emission: fixed-format CSV, JSON, gnuplot scripts.

use crate::CliError;
use std::path::{Path, PathBuf};

/// 17 significant digits: round-trips every f64 and keeps identical runs
/// byte-identical.
pub fn fmt(x: f64) -> String {
    format!("{x:.16e}")
}

/// Writes one file, creating the directory first; all commands compute
/// everything up front and call this once per file at the end.
pub fn write_file(dir: &Path, name: &str, content: &str) -> Result<PathBuf, CliError> {
    std::fs::create_dir_all(dir)
        .map_err(|e| CliError::Io(format!("cannot create directory {}: {e}", dir.display())))?;
    let path = dir.join(name);
    std::fs::write(&path, content)
        .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))?;
    Ok(path)
}

/// Comma-separated, '.' decimals, Unix newlines, UTF-8, mandatory header.
pub struct Csv {
    buf: String,
}

impl Csv {
    pub fn new(header: &str) -> Self {
        Csv {
            buf: format!("{header}\n"),
        }
    }

    pub fn row<I: IntoIterator<Item = String>>(&mut self, fields: I) {
        let mut first = true;
        for field in fields {
            if !first {
                self.buf.push(',');
            }
            self.buf.push_str(&field);
            first = false;
        }
        self.buf.push('\n');
    }

    pub fn finish(self) -> String {
        self.buf
    }
}
