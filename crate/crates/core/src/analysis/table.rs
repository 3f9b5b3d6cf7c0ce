use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;

use serde::Serialize;
use serde_json::Value;

/// One value in an exported table.
#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Int(i64),
    Float(f64),
    Text(String),
    Na,
}

impl Cell {
    pub fn as_f64(&self) -> Option<f64> {
        match *self {
            Cell::Int(v) => Some(v as f64),
            Cell::Float(v) => Some(v),
            _ => None,
        }
    }

    pub fn as_i64(&self) -> Option<i64> {
        match *self {
            Cell::Int(v) => Some(v),
            _ => None,
        }
    }

    pub fn as_str(&self) -> Option<&str> {
        match self {
            Cell::Text(s) => Some(s),
            _ => None,
        }
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cell::Int(v) => write!(f, "{v}"),
            Cell::Float(v) => write!(f, "{v}"),
            Cell::Text(s) => f.write_str(s),
            Cell::Na => f.write_str("NA"),
        }
    }
}

impl From<i64> for Cell {
    fn from(v: i64) -> Self {
        Cell::Int(v)
    }
}

impl From<u32> for Cell {
    fn from(v: u32) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<i32> for Cell {
    fn from(v: i32) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        if v.is_finite() {
            Cell::Float(v)
        } else {
            Cell::Na
        }
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Text(v.to_string())
    }
}

impl<T: Into<Cell>> From<Option<T>> for Cell {
    fn from(v: Option<T>) -> Self {
        v.map_or(Cell::Na, Into::into)
    }
}

/// Where a table came from.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Provenance {
    pub tool_version: String,
    pub config_hash: String,
    pub corpus_id: String,
    pub snapshot_years: Option<(i32, i32)>,
}

/// Named columns plus metadata; the unit every analysis exports.
#[derive(Clone, Debug, PartialEq)]
pub struct AnalysisTable {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
    pub provenance: Provenance,
    /// Free-form notes: reference values, counts of excluded rows.
    pub metadata: BTreeMap<String, Value>,
}

impl AnalysisTable {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        AnalysisTable {
            name: name.to_string(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
            provenance: Provenance::default(),
            metadata: BTreeMap::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row width for {}", self.name);
        self.rows.push(row);
    }

    pub fn note(&mut self, key: &str, value: impl Serialize) {
        let v = serde_json::to_value(value).expect("metadata serializes");
        self.metadata.insert(key.to_string(), v);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    /// Values of one column; panics on an unknown name.
    pub fn values(&self, name: &str) -> Vec<&Cell> {
        let c = self.column(name).unwrap_or_else(|| panic!("{}: no column {name}", self.name));
        self.rows.iter().map(|r| &r[c]).collect()
    }

    pub fn write_tsv(&self, mut w: impl Write) -> std::io::Result<()> {
        writeln!(w, "{}", self.columns.join("\t"))?;
        for row in &self.rows {
            let line: Vec<String> = row.iter().map(ToString::to_string).collect();
            writeln!(w, "{}", line.join("\t"))?;
        }
        Ok(())
    }

    pub fn sidecar(&self) -> Value {
        serde_json::json!({
            "name": self.name,
            "columns": self.columns,
            "rows": self.rows.len(),
            "provenance": self.provenance,
            "metadata": self.metadata,
        })
    }
}

/// The tables one analysis produces.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct AnalysisReport {
    pub tables: Vec<AnalysisTable>,
}

impl AnalysisReport {
    pub fn table(&self, name: &str) -> &AnalysisTable {
        self.tables
            .iter()
            .find(|t| t.name == name)
            .unwrap_or_else(|| panic!("no table {name}"))
    }

    pub fn set_provenance(&mut self, p: &Provenance) {
        for t in &mut self.tables {
            t.provenance = p.clone();
        }
    }
}

impl From<Vec<AnalysisTable>> for AnalysisReport {
    fn from(tables: Vec<AnalysisTable>) -> Self {
        AnalysisReport { tables }
    }
}
