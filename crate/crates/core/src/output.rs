//! CSV tables and the JSON run manifest.

use std::fs::File;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::RunConfig;
use crate::error::{Error, Result};

/// One CSV field.
#[derive(Debug, Clone, PartialEq)]
pub enum Field {
    Float(f64),
    Int(i64),
    Text(String),
    Empty,
}

impl From<f64> for Field {
    fn from(x: f64) -> Self {
        Field::Float(x)
    }
}
impl From<usize> for Field {
    fn from(x: usize) -> Self {
        Field::Int(x as i64)
    }
}
impl From<i32> for Field {
    fn from(x: i32) -> Self {
        Field::Int(x as i64)
    }
}
impl From<u64> for Field {
    fn from(x: u64) -> Self {
        Field::Int(x as i64)
    }
}
impl From<bool> for Field {
    fn from(x: bool) -> Self {
        Field::Int(x as i64)
    }
}
impl From<&str> for Field {
    fn from(x: &str) -> Self {
        Field::Text(x.to_string())
    }
}
impl From<String> for Field {
    fn from(x: String) -> Self {
        Field::Text(x)
    }
}
impl<T: Into<Field>> From<Option<T>> for Field {
    fn from(x: Option<T>) -> Self {
        x.map_or(Field::Empty, Into::into)
    }
}

/// 17 significant digits: enough to round-trip any `f64`.
pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

impl Field {
    fn render(&self) -> String {
        match self {
            Field::Float(x) => format_float(*x),
            Field::Int(i) => i.to_string(),
            Field::Text(s) => s.clone(),
            Field::Empty => String::new(),
        }
    }
}

/// Header-checked CSV table, written in one go.
#[derive(Debug, Clone)]
pub struct Table {
    header: Vec<&'static str>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&'static str]) -> Self {
        Table { header: header.to_vec(), rows: Vec::new() }
    }

    pub fn header(&self) -> &[&'static str] {
        &self.header
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Panics if the row width differs from the header; that is a bug in
    /// the caller, not bad input.
    pub fn push(&mut self, row: Vec<Field>) {
        assert_eq!(row.len(), self.header.len(), "row width must match header {:?}", self.header);
        self.rows.push(row.iter().map(Field::render).collect());
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_writer(File::create(path)?);
        let io = |e: csv::Error| Error::Io(format!("{}: {e}", path.display()));
        w.write_record(&self.header).map_err(io)?;
        for r in &self.rows {
            w.write_record(r).map_err(io)?;
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub config_hash: String,
    pub started: String,
    pub finished: String,
    /// File names relative to the output directory.
    pub outputs: Vec<String>,
    pub warnings: Vec<String>,
    pub config: RunConfig,
    pub version: String,
}

pub fn timestamp() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
}

/// Collects the files of one run and writes its manifest last.
#[derive(Debug)]
pub struct RunOutput {
    dir: PathBuf,
    command: String,
    config: RunConfig,
    started: String,
    outputs: Vec<String>,
    warnings: Vec<String>,
}

pub const MANIFEST_NAME: &str = "manifest.json";

impl RunOutput {
    /// Creates `dir` if needed.
    pub fn create(dir: &Path, command: &str, config: &RunConfig) -> Result<Self> {
        std::fs::create_dir_all(dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))?;
        Ok(RunOutput {
            dir: dir.to_path_buf(),
            command: command.to_string(),
            config: config.clone(),
            started: timestamp(),
            outputs: Vec::new(),
            warnings: Vec::new(),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn table(&mut self, name: &str, table: &Table) -> Result<()> {
        table.write(&self.dir.join(name))?;
        self.outputs.push(name.to_string());
        Ok(())
    }

    pub fn warn(&mut self, msg: impl Into<String>) {
        self.warnings.push(msg.into());
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    pub fn finish(self) -> Result<RunManifest> {
        let m = RunManifest {
            command: self.command,
            config_hash: self.config.hash(),
            started: self.started,
            finished: timestamp(),
            outputs: self.outputs,
            warnings: self.warnings,
            config: self.config,
            version: env!("CARGO_PKG_VERSION").to_string(),
        };
        let json = serde_json::to_string_pretty(&m).expect("manifest serializes");
        std::fs::write(self.dir.join(MANIFEST_NAME), json + "\n")?;
        Ok(m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip() {
        for x in [0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, f64::MIN_POSITIVE] {
            let s = format_float(x);
            assert_eq!(s.parse::<f64>().unwrap(), x, "{s}");
        }
        assert_eq!(format_float(0.5), "5.0000000000000000e-1");
    }

    #[test]
    fn table_and_manifest_on_disk() {
        let dir = tempfile::tempdir().unwrap();
        let mut out = RunOutput::create(&dir.path().join("run"), "test", &RunConfig::default()).unwrap();
        let mut t = Table::new(&["a", "b", "c"]);
        t.push(vec![1.5.into(), 2usize.into(), Field::from(None::<i32>)]);
        out.table("t.csv", &t).unwrap();
        out.warn("careful");
        let m = out.finish().unwrap();
        let text = std::fs::read_to_string(dir.path().join("run/t.csv")).unwrap();
        assert_eq!(text, "a,b,c\n1.5000000000000000e0,2,\n");
        assert_eq!(m.outputs, vec!["t.csv"]);
        for f in &m.outputs {
            assert!(dir.path().join("run").join(f).exists());
        }
        let j: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(dir.path().join("run/manifest.json")).unwrap()).unwrap();
        assert_eq!(j["config_hash"], RunConfig::default().hash());
        assert_eq!(j["warnings"][0], "careful");
    }

    #[test]
    #[should_panic]
    fn ragged_row_is_a_bug() {
        Table::new(&["a"]).push(vec![1.0.into(), 2.0.into()]);
    }
}
