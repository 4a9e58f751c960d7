use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use serde_json::{json, Map, Value};

use crate::CliError;

/// Shortest decimal that parses back to the same `f64`. Plain notation in
/// `[1e-5, 1e16)`, exponent notation outside it. Negative zero prints as `0`.
pub fn fmt_f64(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 {
        "0".into()
    } else if !x.is_finite() || (1e-5..1e16).contains(&a) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

pub fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

/// A table held in memory until every computation of a run has succeeded.
#[derive(Debug, Clone)]
pub struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Table {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn to_csv(&self) -> Result<Vec<u8>, CliError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.write_record(row)?;
        }
        w.into_inner().map_err(|e| CliError::Io(e.into_error()))
    }
}

/// One CSV file and the metadata that goes into its sidecar.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub name: String,
    pub table: Table,
    pub metadata: Value,
}

impl Dataset {
    pub fn new(name: impl Into<String>, table: Table, metadata: Value) -> Self {
        Dataset {
            name: name.into(),
            table,
            metadata,
        }
    }
}

/// Everything a command produced, plus the resolved configuration shared by
/// all its sidecars.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub command: &'static str,
    pub config: Value,
    pub datasets: Vec<Dataset>,
}

fn sidecar(run: &RunOutput, data: &Dataset, wall: Duration, workers: usize) -> Value {
    let timestamp = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let mut m = Map::new();
    m.insert("command".into(), json!(run.command));
    m.insert("file".into(), json!(format!("{}.csv", data.name)));
    m.insert("rows".into(), json!(data.table.len()));
    m.insert("config".into(), run.config.clone());
    m.insert("results".into(), data.metadata.clone());
    m.insert("workers".into(), json!(workers));
    m.insert("wall_time_s".into(), json!(wall.as_secs_f64()));
    m.insert("timestamp_unix".into(), json!(timestamp));
    m.insert("version".into(), json!(env!("CARGO_PKG_VERSION")));
    Value::Object(m)
}

/// Serializes all files first, then writes them, so a failure leaves nothing behind
/// except what the filesystem itself refuses.
pub fn write_run(run: &RunOutput, dir: &Path, wall: Duration, workers: usize) -> Result<Vec<PathBuf>, CliError> {
    let mut files = Vec::new();
    for data in &run.datasets {
        let csv = data.table.to_csv()?;
        let meta = serde_json::to_vec_pretty(&sidecar(run, data, wall, workers))?;
        files.push((dir.join(format!("{}.csv", data.name)), csv));
        files.push((dir.join(format!("{}.json", data.name)), meta));
    }
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    for (path, bytes) in files {
        fs::write(&path, bytes)?;
        written.push(path);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip() {
        for x in [0.0, -60.0, 0.1, 1.0 / 3.0, 1e-12, -2.5e20, 123456.789, f64::MIN_POSITIVE] {
            let s = fmt_f64(x);
            assert_eq!(s.parse::<f64>().unwrap(), x, "{s}");
        }
        assert_eq!(fmt_f64(-60.0), "-60");
        assert_eq!(fmt_f64(1e-12), "1e-12");
    }

    #[test]
    fn csv_layout() {
        let mut t = Table::new(&["a", "b"]);
        t.push(vec!["1".into(), String::new()]);
        assert_eq!(String::from_utf8(t.to_csv().unwrap()).unwrap(), "a,b\n1,\n");
    }
}
