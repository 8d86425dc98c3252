//! Output files: a `#` header with version, config and seed, then CSV rows;
//! or one JSON object whose `header` member carries the same fields.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde_json::{json, Map, Value};

use crate::args::Format;
use crate::Failure;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Clone, Debug)]
pub enum Cell {
    Int(u64),
    Float(f64),
    /// Written with 17 significant digits in CSV.
    Exact(f64),
    Text(String),
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            Cell::Float(v) => v.to_string(),
            Cell::Exact(v) => format!("{v:.16e}"),
            Cell::Text(s) => s.clone(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Int(v) => json!(v),
            Cell::Float(v) | Cell::Exact(v) => json!(v),
            Cell::Text(s) => json!(s),
        }
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Cell {
        Cell::Int(v)
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Cell {
        Cell::Float(v)
    }
}

pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
    /// Scalars reported alongside the rows (header comments in CSV).
    pub summary: Map<String, Value>,
}

impl Table {
    pub fn new(columns: &[&'static str]) -> Table {
        Table {
            columns: columns.to_vec(),
            rows: Vec::new(),
            summary: Map::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn note(mut self, key: &str, value: impl serde::Serialize) -> Table {
        self.summary.insert(key.to_string(), json!(value));
        self
    }
}

/// Everything needed to stamp outputs of one run.
pub struct Emitter {
    pub config: Value,
    pub seed: u64,
    pub format: Option<Format>,
}

impl Emitter {
    fn header(&self) -> Value {
        json!({
            "tool": "continuant-lab",
            "version": VERSION,
            "config": self.config,
            "seed": self.seed,
        })
    }

    fn csv_header(&self) -> String {
        format!(
            "# continuant-lab {VERSION}\n# config: {}\n# seed: {}\n",
            self.config, self.seed
        )
    }

    /// A scalar result; only JSON is offered.
    pub fn json(&self, dest: Option<&Path>, body: Value) -> Result<(), Failure> {
        if self.format == Some(Format::Csv) {
            return Err(Failure::Usage("this command emits JSON only".into()));
        }
        let mut obj = Map::new();
        obj.insert("header".into(), self.header());
        match body {
            Value::Object(m) => obj.extend(m),
            other => {
                obj.insert("result".into(), other);
            }
        }
        let mut text = serde_json::to_string_pretty(&Value::Object(obj)).expect("json");
        text.push('\n');
        write(dest, &text)
    }

    /// A table; CSV unless JSON is asked for.
    pub fn table(&self, dest: Option<&Path>, table: &Table) -> Result<(), Failure> {
        let text = match self.format.unwrap_or(Format::Csv) {
            Format::Csv => self.render_csv(table),
            Format::Json => {
                let mut obj = Map::new();
                obj.insert("header".into(), self.header());
                obj.extend(table.summary.clone());
                let rows: Vec<Value> = table
                    .rows
                    .iter()
                    .map(|r| {
                        Value::Object(
                            table
                                .columns
                                .iter()
                                .zip(r)
                                .map(|(c, v)| (c.to_string(), v.json()))
                                .collect(),
                        )
                    })
                    .collect();
                obj.insert("rows".into(), Value::Array(rows));
                let mut s = serde_json::to_string_pretty(&Value::Object(obj)).expect("json");
                s.push('\n');
                s
            }
        };
        write(dest, &text)
    }

    /// A table that is always CSV (figure data).
    pub fn csv_file(&self, dest: &Path, table: &Table) -> Result<(), Failure> {
        write(Some(dest), &self.render_csv(table))
    }

    fn render_csv(&self, table: &Table) -> String {
        let mut s = self.csv_header();
        for (k, v) in &table.summary {
            let _ = writeln!(s, "# {k}: {v}");
        }
        s.push_str(&table.columns.join(","));
        s.push('\n');
        for row in &table.rows {
            let cells: Vec<String> = row.iter().map(Cell::csv).collect();
            s.push_str(&cells.join(","));
            s.push('\n');
        }
        s
    }
}

fn write(dest: Option<&Path>, text: &str) -> Result<(), Failure> {
    match dest {
        Some(p) => {
            std::fs::write(p, text).map_err(|e| Failure::Other(format!("cannot write {}: {e}", p.display())))
        }
        None => {
            use std::io::Write;
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())
                .and_then(|_| out.flush())
                .map_err(|e| Failure::Other(format!("stdout: {e}")))
        }
    }
}

/// JSON memo of expensive scalars, one file per kind under the directory
/// named by `CONTINUANT_LAB_CACHE`. Unreadable caches are ignored.
pub struct Cache {
    path: Option<PathBuf>,
    entries: Map<String, Value>,
}

impl Cache {
    pub const ENV: &'static str = "CONTINUANT_LAB_CACHE";

    pub fn open(kind: &str) -> Cache {
        let path = std::env::var_os(Self::ENV)
            .filter(|v| !v.is_empty())
            .map(|dir| PathBuf::from(dir).join(format!("{kind}.json")));
        let entries = path
            .as_ref()
            .and_then(|p| std::fs::read_to_string(p).ok())
            .and_then(|t| serde_json::from_str::<Value>(&t).ok())
            .and_then(|v| match v {
                Value::Object(m) => Some(m),
                _ => None,
            })
            .unwrap_or_default();
        Cache { path, entries }
    }

    pub fn get(&self, key: &str) -> Option<&Value> {
        self.entries.get(key)
    }

    /// Stores and persists; failures to persist are reported on stderr only.
    pub fn put(&mut self, key: String, value: Value) {
        let Some(path) = &self.path else { return };
        self.entries.insert(key, value);
        let text = serde_json::to_string_pretty(&self.entries).expect("json");
        let tmp = path.with_extension("json.tmp");
        let res = path
            .parent()
            .map_or(Ok(()), std::fs::create_dir_all)
            .and_then(|_| std::fs::write(&tmp, text))
            .and_then(|_| std::fs::rename(&tmp, path));
        if let Err(e) = res {
            eprintln!("warning: cache {} not written: {e}", path.display());
        }
    }
}
