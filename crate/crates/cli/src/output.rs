//! Artifact emission: CSV files with a reproduction comment and mandatory
//! header, plus a JSON sidecar per artifact carrying the resolved
//! configuration and seed.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde_json::Value;

use crate::error::CliError;

pub struct OutputDir {
    dir: PathBuf,
    repro: String,
}

impl OutputDir {
    /// Prepare the output directory and remember the invocation line that
    /// reproduces this run.
    pub fn new(dir: &Path, repro: String) -> Result<Self, CliError> {
        fs::create_dir_all(dir)
            .map_err(|e| CliError::io(format!("cannot create {}: {e}", dir.display())))?;
        Ok(OutputDir { dir: dir.to_path_buf(), repro })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    /// Write a CSV artifact: `# repro:` line, header, then rows.
    pub fn write_csv<I, R>(&self, name: &str, header: &str, rows: I) -> Result<PathBuf, CliError>
    where
        I: IntoIterator<Item = R>,
        R: AsRef<str>,
    {
        let path = self.path(name);
        let file = fs::File::create(&path)
            .map_err(|e| CliError::io(format!("cannot create {}: {e}", path.display())))?;
        let mut w = BufWriter::new(file);
        writeln!(w, "# repro: {}", self.repro)?;
        writeln!(w, "{header}")?;
        for row in rows {
            writeln!(w, "{}", row.as_ref())?;
        }
        w.flush()?;
        Ok(path)
    }

    /// Write the JSON sidecar describing a run (configuration, seed, files).
    pub fn write_sidecar(&self, name: &str, payload: &Value) -> Result<PathBuf, CliError> {
        let path = self.path(name);
        let text = serde_json::to_string_pretty(payload)
            .map_err(|e| CliError::io(format!("sidecar serialisation: {e}")))?;
        fs::write(&path, text)
            .map_err(|e| CliError::io(format!("cannot write {}: {e}", path.display())))?;
        Ok(path)
    }

    pub fn repro(&self) -> &str {
        &self.repro
    }
}

/// Compact float formatting for CSV cells.
pub fn fmt_f64(v: f64) -> String {
    if v == v.trunc() && v.abs() < 1e15 {
        format!("{v:.1}")
    } else {
        format!("{v:.12e}")
    }
}
