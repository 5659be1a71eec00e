//! CSV and JSON-lines writers. Nothing here depends on time or the
//! environment, so equal inputs give equal bytes.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::Failure;

pub const REPORT_SCHEMA_VERSION: u32 = 1;

/// 17 significant digits.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn io_failure(path: &Path, e: std::io::Error) -> Failure {
    Failure::usage(format!("{}: {e}", path.display()))
}

pub fn create_dir(dir: &Path) -> Result<(), Failure> {
    std::fs::create_dir_all(dir).map_err(|e| io_failure(dir, e))
}

pub fn write_file(path: &Path, contents: &[u8]) -> Result<(), Failure> {
    std::fs::write(path, contents).map_err(|e| io_failure(path, e))
}

/// Comma-separated table with a fixed header line.
pub struct CsvWriter {
    path: PathBuf,
    out: BufWriter<File>,
    columns: usize,
}

impl CsvWriter {
    pub fn create(path: &Path, header: &[String]) -> Result<Self, Failure> {
        let file = File::create(path).map_err(|e| io_failure(path, e))?;
        let mut w = Self {
            path: path.to_path_buf(),
            out: BufWriter::new(file),
            columns: header.len(),
        };
        w.line(header)?;
        Ok(w)
    }

    fn line(&mut self, cells: &[String]) -> Result<(), Failure> {
        writeln!(self.out, "{}", cells.join(",")).map_err(|e| io_failure(&self.path, e))
    }

    pub fn row(&mut self, cells: &[String]) -> Result<(), Failure> {
        debug_assert_eq!(
            cells.len(),
            self.columns,
            "row width differs from the header"
        );
        self.line(cells)
    }

    pub fn finish(mut self) -> Result<(), Failure> {
        self.out.flush().map_err(|e| io_failure(&self.path, e))
    }
}

/// `report.json`: one JSON object per line. The first line is a header with
/// the schema version; after a failure the last line is a failure record.
pub struct Report {
    path: PathBuf,
    out: BufWriter<File>,
}

impl Report {
    pub fn create(dir: &Path, command: &str, config: &impl Serialize) -> Result<Self, Failure> {
        let path = dir.join("report.json");
        let file = File::create(&path).map_err(|e| io_failure(&path, e))?;
        let mut report = Self {
            path,
            out: BufWriter::new(file),
        };
        let config = serde_json::to_value(config).map_err(|e| Failure::usage(e.to_string()))?;
        report.record(
            "header",
            json!({
                "schema_version": REPORT_SCHEMA_VERSION,
                "command": command,
                "version": env!("CARGO_PKG_VERSION"),
                "config": config,
            }),
        )?;
        Ok(report)
    }

    /// Writes `{"record": kind, ...body}`.
    pub fn record(&mut self, kind: &str, body: Value) -> Result<(), Failure> {
        let mut map = Map::new();
        map.insert("record".into(), Value::String(kind.into()));
        match body {
            Value::Object(fields) => map.extend(fields),
            Value::Null => {}
            other => {
                map.insert("value".into(), other);
            }
        }
        let line = serde_json::to_string(&Value::Object(map))
            .map_err(|e| Failure::usage(e.to_string()))?;
        writeln!(self.out, "{line}").map_err(|e| io_failure(&self.path, e))?;
        self.out.flush().map_err(|e| io_failure(&self.path, e))
    }

    /// Appends the failure record for a nonzero result and passes the result on.
    pub fn close(mut self, result: Result<(), Failure>) -> Result<(), Failure> {
        if let Err(f) = &result {
            let written = self.record(
                "failure",
                json!({ "exit_code": f.code, "error": f.message }),
            );
            if let Err(io) = written {
                eprintln!("capflow: {}", io.message);
            }
        }
        result
    }
}
