//! Result records, CSV tables and atomic file emission.

use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

pub const TOOL_VERSION: &str = concat!(env!("CARGO_PKG_NAME"), " ", env!("CARGO_PKG_VERSION"));

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Ok,
    Error,
}

/// One JSON-lines record per command run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub command: String,
    pub scenario_digest: String,
    pub tool_version: String,
    /// Seconds since the Unix epoch; absent unless requested.
    pub timestamp: Option<u64>,
    pub status: Status,
    pub error: Option<String>,
    pub outputs: BTreeMap<String, Value>,
    /// Tolerance each output is judged against, keyed like `outputs`.
    pub tolerances: BTreeMap<String, f64>,
}

impl ResultRecord {
    pub fn new(command: &str, digest: &str, timestamp: Option<u64>) -> Self {
        Self {
            command: command.to_string(),
            scenario_digest: digest.to_string(),
            tool_version: TOOL_VERSION.to_string(),
            timestamp,
            status: Status::Ok,
            error: None,
            outputs: BTreeMap::new(),
            tolerances: BTreeMap::new(),
        }
    }

    pub fn put(&mut self, key: &str, value: impl Serialize) {
        let v = serde_json::to_value(value).expect("output serializes");
        self.outputs.insert(key.to_string(), v);
    }

    pub fn put_checked(&mut self, key: &str, value: impl Serialize, tolerance: f64) {
        self.put(key, value);
        self.tolerances.insert(key.to_string(), tolerance);
    }

    /// Single line of JSON, newline terminated. Floats use the shortest
    /// round-trip representation.
    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("record serializes") + "\n"
    }
}

/// Shortest round-trip decimal for finite values; `NaN`, `inf`, `-inf`
/// otherwise.
pub fn format_float(x: f64) -> String {
    if x.is_finite() {
        ryu::Buffer::new().format_finite(x).to_string()
    } else if x.is_nan() {
        "NaN".into()
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Text(String),
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Self::Num(x)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Self::Text(s.to_string())
    }
}

impl From<String> for Cell {
    fn from(s: String) -> Self {
        Self::Text(s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(name: &str, header: &[&str]) -> Self {
        Self {
            name: name.to_string(),
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row
                .iter()
                .map(|c| match c {
                    Cell::Num(x) => format_float(*x),
                    Cell::Text(s) if s.contains([',', '"', '\n']) => {
                        format!("\"{}\"", s.replace('"', "\"\""))
                    }
                    Cell::Text(s) => s.clone(),
                })
                .collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }
}

/// Writes `contents` to a sibling temporary file and renames it into place.
pub fn write_atomic(path: &Path, contents: &[u8]) -> io::Result<()> {
    let dir = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    fs::create_dir_all(dir)?;
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("out");
    let tmp = dir.join(format!(".{name}.tmp-{}", std::process::id()));
    fs::write(&tmp, contents)?;
    fs::rename(&tmp, path)
}

/// Appends one line to a JSON-lines file, atomically.
pub fn append_line(path: &Path, line: &str) -> io::Result<()> {
    let mut contents = match fs::read(path) {
        Ok(c) => c,
        Err(e) if e.kind() == io::ErrorKind::NotFound => Vec::new(),
        Err(e) => return Err(e),
    };
    contents.extend_from_slice(line.as_bytes());
    write_atomic(path, &contents)
}

/// Writes the record (appended to `records.jsonl`) and every table as
/// `<name>.csv` under `dir`. Returns the written paths.
pub fn emit(dir: &Path, record: &ResultRecord, tables: &[Table]) -> io::Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    let records = dir.join("records.jsonl");
    append_line(&records, &record.to_json_line())?;
    written.push(records);
    for t in tables {
        let path = dir.join(format!("{}.csv", t.name));
        write_atomic(&path, t.to_csv().as_bytes())?;
        written.push(path);
    }
    Ok(written)
}

/// `SOURCE_DATE_EPOCH` if set, else the clock when `requested`.
pub fn record_timestamp(requested: bool) -> Option<u64> {
    if let Some(s) = std::env::var_os("SOURCE_DATE_EPOCH") {
        if let Some(v) = s.to_str().and_then(|s| s.parse().ok()) {
            return Some(v);
        }
    }
    requested.then(|| {
        std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map_or(0, |d| d.as_secs())
    })
}
