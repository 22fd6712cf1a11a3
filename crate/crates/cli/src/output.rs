//! CSV and JSON artifacts. Each file carries the config hash: CSV files in a
//! leading `#` comment line, JSON files in a `config_hash` field.

use std::fs;
use std::path::{Path, PathBuf};

use serde_json::Value;

use crate::error::CliError;

#[derive(Debug, Clone, Copy)]
pub enum Cell {
    Int(u64),
    Num(f64),
    Bool(bool),
    Empty,
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as u64)
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Int(v)
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Bool(v)
    }
}

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Cell::Empty, Cell::Num)
    }
}

/// Output directory plus the provenance written into every file.
pub struct Artifacts {
    dir: PathBuf,
    hash: String,
    seed: Option<u64>,
}

impl Artifacts {
    pub fn create(dir: &Path, hash: String, seed: Option<u64>) -> Result<Self, CliError> {
        fs::create_dir_all(dir).map_err(|source| CliError::Io {
            path: dir.to_path_buf(),
            source,
        })?;
        Ok(Artifacts {
            dir: dir.to_path_buf(),
            hash,
            seed,
        })
    }

    pub fn hash(&self) -> &str {
        &self.hash
    }

    fn stamp(&self) -> String {
        match self.seed {
            Some(s) => format!("# config_hash={} seed={s}", self.hash),
            None => format!("# config_hash={}", self.hash),
        }
    }

    fn write(&self, name: &str, text: &str) -> Result<PathBuf, CliError> {
        let path = self.dir.join(name);
        fs::write(&path, text).map_err(|source| CliError::Io { path: path.clone(), source })?;
        Ok(path)
    }

    /// Writes a CSV file, failing on any non-finite number.
    pub fn write_csv<I>(&self, file: &'static str, header: &[&str], rows: I) -> Result<PathBuf, CliError>
    where
        I: IntoIterator<Item = Vec<Cell>>,
    {
        let path = self.dir.join(file);
        let out_err = |e: csv::Error| CliError::Output {
            path: path.clone(),
            message: e.to_string(),
        };
        let mut buf = self.stamp().into_bytes();
        buf.push(b'\n');
        {
            let mut w = csv::Writer::from_writer(&mut buf);
            w.write_record(header).map_err(out_err)?;
            for (row, cells) in rows.into_iter().enumerate() {
                let mut record = Vec::with_capacity(cells.len());
                for (k, cell) in cells.into_iter().enumerate() {
                    record.push(match cell {
                        Cell::Int(v) => v.to_string(),
                        Cell::Num(v) if v.is_finite() => v.to_string(),
                        Cell::Num(_) => {
                            return Err(CliError::NonFiniteOutput {
                                file,
                                column: header.get(k).unwrap_or(&"?").to_string(),
                                row,
                            })
                        }
                        Cell::Bool(b) => b.to_string(),
                        Cell::Empty => String::new(),
                    });
                }
                w.write_record(&record).map_err(out_err)?;
            }
            w.flush().map_err(|e| CliError::Io {
                path: path.clone(),
                source: e,
            })?;
        }
        let text = String::from_utf8(buf).expect("csv output is utf-8");
        self.write(file, &text)
    }

    /// Writes pretty-printed JSON with `config_hash` (and `seed`) added.
    pub fn write_json(&self, file: &'static str, mut value: Value) -> Result<PathBuf, CliError> {
        if let Value::Object(map) = &mut value {
            map.insert("config_hash".into(), Value::String(self.hash.clone()));
            if let Some(s) = self.seed {
                map.insert("seed".into(), Value::from(s));
            }
        }
        let mut text = serde_json::to_string_pretty(&value).expect("json value serializes");
        text.push('\n');
        self.write(file, &text)
    }

    /// Writes the effective problem spec next to the outputs.
    pub fn write_spec(&self, echo: &str) -> Result<PathBuf, CliError> {
        self.write("spec.toml", &format!("{}\n{echo}", self.stamp()))
    }
}

/// Fails unless every value is finite; JSON would silently turn NaN into null.
pub fn ensure_finite(file: &'static str, column: &str, values: &[f64]) -> Result<(), CliError> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(row) => Err(CliError::NonFiniteOutput {
            file,
            column: column.to_string(),
            row,
        }),
        None => Ok(()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_has_stamp_and_rejects_nan() {
        let dir = tempfile::tempdir().unwrap();
        let a = Artifacts::create(dir.path(), "abc".into(), Some(7)).unwrap();
        let p = a
            .write_csv("t.csv", &["i", "x"], vec![vec![Cell::from(0usize), Cell::from(0.5)]])
            .unwrap();
        let text = fs::read_to_string(p).unwrap();
        assert_eq!(text, "# config_hash=abc seed=7\ni,x\n0,0.5\n");
        let err = a
            .write_csv("t.csv", &["i", "x"], vec![vec![Cell::from(0usize), Cell::from(f64::NAN)]])
            .unwrap_err();
        assert!(matches!(err, CliError::NonFiniteOutput { row: 0, .. }));
        assert_eq!(err.exit_code(), 5);
    }
}
