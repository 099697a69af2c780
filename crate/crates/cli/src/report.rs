//! Output files: CSV tables and the JSON summary, each written to a
//! temporary file in the output directory and renamed into place.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

#[derive(Debug, thiserror::Error)]
pub enum ReportError {
    #[error("cannot write {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("cannot encode {path}: {message}")]
    Encode { path: PathBuf, message: String },
}

pub struct OutputDir {
    root: PathBuf,
    written: Vec<String>,
}

impl OutputDir {
    pub fn create(root: &Path) -> Result<Self, ReportError> {
        std::fs::create_dir_all(root).map_err(|source| ReportError::Io { path: root.into(), source })?;
        Ok(OutputDir { root: root.into(), written: Vec::new() })
    }

    pub fn path(&self) -> &Path {
        &self.root
    }

    /// File names written so far, in order.
    pub fn written(&self) -> &[String] {
        &self.written
    }

    fn write_atomic(&mut self, name: &str, bytes: &[u8]) -> Result<(), ReportError> {
        let target = self.root.join(name);
        let io = |source| ReportError::Io { path: target.clone(), source };
        let mut tmp = tempfile::NamedTempFile::new_in(&self.root).map_err(io)?;
        tmp.write_all(bytes).map_err(io)?;
        tmp.as_file().sync_all().map_err(io)?;
        tmp.persist(&target).map_err(|e| io(e.error))?;
        if !self.written.iter().any(|w| w == name) {
            self.written.push(name.to_string());
        }
        Ok(())
    }

    /// A CSV table with a header row.
    pub fn csv<R: Serialize>(&mut self, name: &str, rows: &[R]) -> Result<(), ReportError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let encode = |e: csv::Error| ReportError::Encode { path: self.root.join(name), message: e.to_string() };
        for r in rows {
            w.serialize(r).map_err(encode)?;
        }
        let bytes =
            w.into_inner().map_err(|e| ReportError::Encode { path: self.root.join(name), message: e.to_string() })?;
        self.write_atomic(name, &bytes)
    }

    /// A CSV table whose columns are only known at run time.
    pub fn csv_records(&mut self, name: &str, header: &[String], rows: &[Vec<String>]) -> Result<(), ReportError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let encode = |e: csv::Error| ReportError::Encode { path: self.root.join(name), message: e.to_string() };
        w.write_record(header).map_err(encode)?;
        for r in rows {
            w.write_record(r).map_err(encode)?;
        }
        let bytes =
            w.into_inner().map_err(|e| ReportError::Encode { path: self.root.join(name), message: e.to_string() })?;
        self.write_atomic(name, &bytes)
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), ReportError> {
        let mut bytes = serde_json::to_vec_pretty(value)
            .map_err(|e| ReportError::Encode { path: self.root.join(name), message: e.to_string() })?;
        bytes.push(b'\n');
        self.write_atomic(name, &bytes)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Serialize)]
    struct Row {
        n: usize,
        value: f64,
    }

    #[test]
    fn writes_csv_with_header_and_replaces_files() {
        let dir = tempfile::tempdir().unwrap();
        let mut out = OutputDir::create(dir.path()).unwrap();
        out.csv("t.csv", &[Row { n: 0, value: 0.5 }, Row { n: 1, value: 1e-20 }]).unwrap();
        let text = std::fs::read_to_string(dir.path().join("t.csv")).unwrap();
        assert_eq!(text, "n,value\n0,0.5\n1,1e-20\n");
        out.csv("t.csv", &[Row { n: 7, value: 2.0 }]).unwrap();
        let text = std::fs::read_to_string(dir.path().join("t.csv")).unwrap();
        assert_eq!(text, "n,value\n7,2.0\n");
        assert_eq!(out.written(), ["t.csv"]);
        let leftovers = std::fs::read_dir(dir.path()).unwrap().count();
        assert_eq!(leftovers, 1);
    }
}
