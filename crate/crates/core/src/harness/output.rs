//! CSV records, run metadata and per-row checkpoints.

use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const SCHEMA: &str = "ancilla-records";
pub const SCHEMA_VERSION: u32 = 1;

/// A table of string cells with a fixed column layout.
#[derive(Debug, Clone, PartialEq)]
pub struct Records {
    pub kind: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Records {
    pub fn new(kind: &str, columns: &[&str]) -> Self {
        Self { kind: kind.to_string(), columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        assert_eq!(row.len(), self.columns.len(), "row width does not match the schema");
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    /// Cells of a column, in row order.
    pub fn get(&self, name: &str) -> Option<Vec<&str>> {
        let k = self.column(name)?;
        Some(self.rows.iter().map(|r| r[k].as_str()).collect())
    }

    pub fn header_line(&self) -> String {
        format!("# {SCHEMA} v{SCHEMA_VERSION} kind={}", self.kind)
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut buf = Vec::new();
        writeln!(buf, "{}", self.header_line())?;
        {
            let mut w = csv::Writer::from_writer(&mut buf);
            w.write_record(&self.columns).map_err(csv_err)?;
            for r in &self.rows {
                w.write_record(r).map_err(csv_err)?;
            }
            w.flush()?;
        }
        Ok(String::from_utf8(buf).expect("csv output is utf-8"))
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.splitn(2, '\n');
        let header = lines.next().unwrap_or_default();
        let kind = header
            .strip_prefix(&format!("# {SCHEMA} v{SCHEMA_VERSION} kind="))
            .ok_or_else(|| Error::Numerical(format!("unrecognized record header {header:?}")))?
            .trim()
            .to_string();
        let mut rdr = csv::Reader::from_reader(lines.next().unwrap_or_default().as_bytes());
        let columns = rdr.headers().map_err(csv_err)?.iter().map(String::from).collect();
        let rows = rdr
            .records()
            .map(|r| r.map(|r| r.iter().map(String::from).collect()).map_err(csv_err))
            .collect::<Result<Vec<Vec<String>>>>()?;
        Ok(Self { kind, columns, rows })
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e.to_string()))
}

/// Canonical text form of a float: shortest round-trip representation.
pub fn num(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:?}")
    }
}

pub fn opt_num(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

pub fn opt_int(x: Option<u64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

/// Everything about a run that is not part of the byte-stable CSV.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunMeta {
    pub schema: String,
    pub version: u32,
    pub kind: String,
    pub name: String,
    pub columns: Vec<String>,
    pub rows: usize,
    pub config: serde_json::Value,
    pub summary: serde_json::Value,
    pub passed: bool,
    pub wall_clock_seconds: f64,
    pub row_seconds: Vec<f64>,
    pub threads: usize,
    pub crate_version: String,
}

pub fn csv_path(dir: &Path, name: &str) -> PathBuf {
    dir.join(format!("{name}.csv"))
}

pub fn meta_path(dir: &Path, name: &str) -> PathBuf {
    dir.join(format!("{name}.meta.json"))
}

pub fn checkpoint_path(dir: &Path, name: &str) -> PathBuf {
    dir.join(format!("{name}.checkpoint.jsonl"))
}

#[derive(Serialize, Deserialize)]
struct CheckpointHeader {
    config: String,
    columns: Vec<String>,
}

#[derive(Serialize, Deserialize)]
struct CheckpointRow {
    index: usize,
    cells: Vec<String>,
    seconds: f64,
}

/// Append-only log of finished rows. A log written for a different config
/// is discarded.
pub struct Checkpoint {
    path: PathBuf,
    done: Vec<Option<(Vec<String>, f64)>>,
}

impl Checkpoint {
    pub fn open(path: PathBuf, config_json: &str, columns: &[String], rows: usize) -> Result<Self> {
        let mut done = vec![None; rows];
        let mut valid = false;
        if let Ok(f) = fs::File::open(&path) {
            let mut lines = BufReader::new(f).lines();
            if let Some(Ok(first)) = lines.next() {
                if let Ok(h) = serde_json::from_str::<CheckpointHeader>(&first) {
                    valid = h.config == config_json && h.columns == columns;
                }
            }
            if valid {
                // a torn final line from an interrupted write is ignored
                for line in lines.map_while(|l| l.ok()) {
                    if let Ok(r) = serde_json::from_str::<CheckpointRow>(&line) {
                        if r.index < rows && r.cells.len() == columns.len() {
                            done[r.index] = Some((r.cells, r.seconds));
                        }
                    }
                }
            }
        }
        if !valid {
            if let Some(dir) = path.parent() {
                fs::create_dir_all(dir)?;
            }
            let header = CheckpointHeader { config: config_json.to_string(), columns: columns.to_vec() };
            fs::write(&path, format!("{}\n", serde_json::to_string(&header)?))?;
        }
        Ok(Self { path, done })
    }

    pub fn get(&self, index: usize) -> Option<&(Vec<String>, f64)> {
        self.done.get(index).and_then(|d| d.as_ref())
    }

    pub fn completed(&self) -> usize {
        self.done.iter().filter(|d| d.is_some()).count()
    }

    pub fn record(&mut self, index: usize, cells: &[String], seconds: f64) -> Result<()> {
        let line = serde_json::to_string(&CheckpointRow { index, cells: cells.to_vec(), seconds })?;
        let mut f = fs::OpenOptions::new().append(true).open(&self.path)?;
        writeln!(f, "{line}")?;
        f.sync_data()?;
        self.done[index] = Some((cells.to_vec(), seconds));
        Ok(())
    }

    pub fn finish(self) -> Result<()> {
        match fs::remove_file(&self.path) {
            Err(e) if e.kind() != std::io::ErrorKind::NotFound => Err(e.into()),
            _ => Ok(()),
        }
    }
}
