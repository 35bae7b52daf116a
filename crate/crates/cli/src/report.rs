//! Reports: metadata plus named sections of rows, written as one CSV file per
//! section or as a single JSON document. Floats carry 17 significant digits.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::config::Format;
use crate::error::CliError;

#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Int(i64),
    Float(f64),
    Bool(bool),
    Text(String),
    Empty,
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Self::Int(v) => v.to_string(),
            Self::Float(v) => format_float(*v),
            Self::Bool(b) => b.to_string(),
            Self::Text(s) => s.clone(),
            Self::Empty => String::new(),
        }
    }

    fn json(&self) -> String {
        match self {
            Self::Int(v) => v.to_string(),
            Self::Float(v) if v.is_finite() => format_float(*v),
            Self::Float(_) | Self::Empty => "null".into(),
            Self::Bool(b) => b.to_string(),
            Self::Text(s) => serde_json::to_string(s).expect("string serializes"),
        }
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Self::Float(v) => Some(*v),
            Self::Int(v) => Some(*v as f64),
            _ => None,
        }
    }

    pub fn as_bool(&self) -> Option<bool> {
        match self {
            Self::Bool(b) => Some(*b),
            _ => None,
        }
    }

    pub fn as_str(&self) -> Option<&str> {
        match self {
            Self::Text(s) => Some(s),
            _ => None,
        }
    }
}

pub fn format_float(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        v.to_string()
    }
}

macro_rules! cell_from {
    ($($t:ty => $arm:expr),* $(,)?) => {
        $(impl From<$t> for Cell {
            fn from(v: $t) -> Self {
                $arm(v)
            }
        })*
    };
}

cell_from! {
    f64 => Cell::Float,
    bool => Cell::Bool,
    String => Cell::Text,
    i64 => Cell::Int,
    i32 => |v: i32| Cell::Int(v.into()),
    u32 => |v: u32| Cell::Int(v.into()),
    u64 => |v: u64| Cell::Int(v as i64),
    usize => |v: usize| Cell::Int(v as i64),
    &str => |v: &str| Cell::Text(v.to_string()),
}

impl<T: Into<Cell>> From<Option<T>> for Cell {
    fn from(v: Option<T>) -> Self {
        v.map_or(Cell::Empty, Into::into)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Section {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Section {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Self { name: name.into(), columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row width for section {}", self.name);
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    /// Cell of `column` in row `row`.
    pub fn get(&self, row: usize, column: &str) -> Option<&Cell> {
        self.rows.get(row)?.get(self.column(column)?)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Report {
    pub metadata: Vec<(String, String)>,
    pub sections: Vec<Section>,
    /// Set when a statistical or exact acceptance check failed.
    pub failed: bool,
}

impl Report {
    pub fn new(command: &str, config_bytes: &[u8], seed: u64) -> Self {
        let metadata = vec![
            ("command".into(), command.into()),
            ("config_sha256".into(), hex::encode(Sha256::digest(config_bytes))),
            ("seed".into(), seed.to_string()),
            ("version".into(), env!("CARGO_PKG_VERSION").into()),
        ];
        Self { metadata, sections: Vec::new(), failed: false }
    }

    pub fn meta(&mut self, key: &str, value: impl ToString) {
        self.metadata.push((key.into(), value.to_string()));
    }

    pub fn add(&mut self, section: Section) {
        self.sections.push(section);
    }

    pub fn section(&self, name: &str) -> Option<&Section> {
        self.sections.iter().find(|s| s.name == name)
    }

    pub fn to_json(&self) -> String {
        let mut out = String::from("{\n  \"metadata\": {");
        for (k, (key, value)) in self.metadata.iter().enumerate() {
            let sep = if k == 0 { "" } else { "," };
            write!(out, "{sep}\n    {}: {}", Cell::Text(key.clone()).json(), Cell::Text(value.clone()).json()).unwrap();
        }
        out.push_str("\n  },\n  \"sections\": [");
        for (k, s) in self.sections.iter().enumerate() {
            let sep = if k == 0 { "" } else { "," };
            let cols: Vec<String> = s.columns.iter().map(|c| Cell::Text(c.clone()).json()).collect();
            write!(out, "{sep}\n    {{\n      \"name\": {},\n      \"columns\": [{}],\n      \"rows\": [", Cell::Text(s.name.clone()).json(), cols.join(", "))
                .unwrap();
            for (r, row) in s.rows.iter().enumerate() {
                let sep = if r == 0 { "" } else { "," };
                let cells: Vec<String> = row.iter().map(Cell::json).collect();
                write!(out, "{sep}\n        [{}]", cells.join(", ")).unwrap();
            }
            out.push_str(if s.rows.is_empty() { "]\n    }" } else { "\n      ]\n    }" });
        }
        out.push_str("\n  ]\n}\n");
        out
    }

    fn csv_bytes(header: &[String], rows: impl Iterator<Item = Vec<String>>) -> Result<Vec<u8>, CliError> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        let io = |e: csv::Error| CliError::config(format!("output: {e}"));
        w.write_record(header).map_err(io)?;
        for row in rows {
            w.write_record(&row).map_err(io)?;
        }
        w.into_inner().map_err(|e| CliError::config(format!("output: {e}")))
    }

    /// File name and contents of every output file.
    pub fn render(&self, format: Format) -> Result<Vec<(String, Vec<u8>)>, CliError> {
        match format {
            Format::Json => Ok(vec![("report.json".into(), self.to_json().into_bytes())]),
            Format::Csv => {
                let mut files = vec![(
                    "metadata.csv".to_string(),
                    Self::csv_bytes(&["key".into(), "value".into()], self.metadata.iter().map(|(k, v)| vec![k.clone(), v.clone()]))?,
                )];
                for s in &self.sections {
                    let bytes = Self::csv_bytes(&s.columns, s.rows.iter().map(|r| r.iter().map(Cell::csv).collect()))?;
                    files.push((format!("{}.csv", s.name), bytes));
                }
                Ok(files)
            }
        }
    }

    pub fn write(&self, dir: &Path, format: Format) -> Result<Vec<PathBuf>, CliError> {
        let io = |e: std::io::Error| CliError::config(format!("output directory {}: {e}", dir.display()));
        fs::create_dir_all(dir).map_err(io)?;
        let mut written = Vec::new();
        for (name, bytes) in self.render(format)? {
            let path = dir.join(name);
            fs::write(&path, bytes).map_err(io)?;
            written.push(path);
        }
        Ok(written)
    }
}
