use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::{CliError, Format};

/// Where tables go: files in an output directory, or standard output.
pub struct Output {
    pub format: Format,
    dir: Option<PathBuf>,
}

impl Output {
    pub fn new(format: Format, dir: Option<PathBuf>) -> Result<Self, CliError> {
        if let Some(d) = &dir {
            fs::create_dir_all(d)?;
        }
        Ok(Output { format, dir })
    }

    pub fn dir(&self) -> Option<&Path> {
        self.dir.as_deref()
    }

    /// Writes a table as `{name}.csv` or `{name}.json`, or prints it.
    pub fn table(&self, name: &str, csv: &str, json: &serde_json::Value) -> Result<(), CliError> {
        let (body, ext) = match self.format {
            Format::Csv => (csv.to_string(), "csv"),
            Format::Json => (pretty(json)?, "json"),
        };
        match &self.dir {
            Some(d) => {
                let path = d.join(format!("{name}.{ext}"));
                fs::write(&path, body)?;
                eprintln!("wrote {}", path.display());
            }
            None => {
                let mut stdout = std::io::stdout().lock();
                stdout.write_all(body.as_bytes())?;
                if !body.ends_with('\n') {
                    writeln!(stdout)?;
                }
            }
        }
        Ok(())
    }

    /// Writes an auxiliary file. Skipped without an output directory.
    pub fn artifact(&self, file_name: &str, body: &[u8]) -> Result<Option<PathBuf>, CliError> {
        let Some(d) = &self.dir else {
            return Ok(None);
        };
        let path = d.join(file_name);
        fs::write(&path, body)?;
        eprintln!("wrote {}", path.display());
        Ok(Some(path))
    }
}

pub fn pretty(value: &serde_json::Value) -> Result<String, CliError> {
    serde_json::to_string_pretty(value).map_err(|e| CliError::Failure(e.to_string()))
}

pub fn to_json<T: serde::Serialize>(value: &T) -> Result<serde_json::Value, CliError> {
    serde_json::to_value(value).map_err(|e| CliError::Failure(e.to_string()))
}

/// 17 significant digits, the CSV number format.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}
