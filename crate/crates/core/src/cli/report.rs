//! Command reports: a JSON document and a fixed-width text rendering.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Serialize;
use serde_json::Value;

use crate::tolerance::Tolerances;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Ok,
    Negative,
}

impl Status {
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Ok => 0,
            Status::Negative => 1,
        }
    }
}

/// A titled table for the text format.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub title: String,
    pub headers: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(title: impl Into<String>, headers: &[&str]) -> Self {
        Self {
            title: title.into(),
            headers: headers.iter().map(|h| h.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn row(&mut self, cells: Vec<String>) -> &mut Self {
        self.rows.push(cells);
        self
    }

    fn render(&self, out: &mut String) {
        let cols = self.headers.len();
        let mut width: Vec<usize> = self.headers.iter().map(|h| h.len()).collect();
        for r in &self.rows {
            for (c, cell) in r.iter().enumerate().take(cols) {
                width[c] = width[c].max(cell.chars().count());
            }
        }
        let _ = writeln!(out, "{}", self.title);
        let line = |cells: &[String]| -> String {
            cells
                .iter()
                .enumerate()
                .map(|(c, s)| format!("{:<w$}", s, w = width[c]))
                .collect::<Vec<_>>()
                .join("  ")
                .trim_end()
                .to_string()
        };
        let _ = writeln!(out, "  {}", line(&self.headers));
        let _ = writeln!(
            out,
            "  {}",
            width.iter().map(|w| "-".repeat(*w)).collect::<Vec<_>>().join("  ")
        );
        for r in &self.rows {
            let _ = writeln!(out, "  {}", line(r));
        }
    }
}

/// Key-value table helper.
pub fn kv_table(title: &str, pairs: &[(&str, String)]) -> Table {
    let mut t = Table::new(title, &["item", "value"]);
    for (k, v) in pairs {
        t.row(vec![k.to_string(), v.clone()]);
    }
    t
}

pub fn fmt_f(v: f64) -> String {
    if v == 0.0 || (1e-4..1e6).contains(&v.abs()) {
        format!("{v:.10}").trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        format!("{v:.6e}")
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub scenario: Option<String>,
    pub tolerances: Tolerances,
    pub nmax: u32,
    pub status: Status,
    pub summary: String,
    /// Numeric evidence behind the summary.
    pub residuals: BTreeMap<String, f64>,
    #[serde(flatten)]
    pub sections: BTreeMap<String, Value>,
    #[serde(skip)]
    pub tables: Vec<Table>,
}

impl Report {
    pub fn new(command: &str, scenario: Option<&str>, tolerances: Tolerances, nmax: u32) -> Self {
        Self {
            tool: "wco",
            version: VERSION,
            command: command.to_string(),
            scenario: scenario.map(str::to_string),
            tolerances,
            nmax,
            status: Status::Ok,
            summary: String::new(),
            residuals: BTreeMap::new(),
            sections: BTreeMap::new(),
            tables: Vec::new(),
        }
    }

    pub fn section<T: Serialize>(&mut self, name: &str, value: &T) -> &mut Self {
        let v = serde_json::to_value(value).expect("report sections serialize");
        self.sections.insert(name.to_string(), v);
        self
    }

    pub fn residual(&mut self, name: &str, value: f64) -> &mut Self {
        self.residuals.insert(name.to_string(), value);
        self
    }

    pub fn table(&mut self, table: Table) -> &mut Self {
        self.tables.push(table);
        self
    }

    pub fn negative(&mut self, summary: impl Into<String>) -> &mut Self {
        self.status = Status::Negative;
        self.summary = summary.into();
        self
    }

    pub fn ok(&mut self, summary: impl Into<String>) -> &mut Self {
        self.status = Status::Ok;
        self.summary = summary.into();
        self
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "wco {}  command: {}", self.version, self.command);
        if let Some(s) = &self.scenario {
            let _ = writeln!(out, "scenario: {s}");
        }
        let _ = writeln!(
            out,
            "status: {}  ({})",
            match self.status {
                Status::Ok => "ok",
                Status::Negative => "negative",
            },
            self.summary
        );
        let _ = writeln!(
            out,
            "tolerances: abs={:e} rel={:e} oracle={:e} psd={:e} solver={:e} moments={:e}  nmax={}",
            self.tolerances.abs,
            self.tolerances.rel,
            self.tolerances.oracle,
            self.tolerances.psd,
            self.tolerances.solver,
            self.tolerances.moments,
            self.nmax
        );
        for t in &self.tables {
            out.push('\n');
            t.render(&mut out);
        }
        if !self.residuals.is_empty() {
            out.push('\n');
            let mut t = Table::new("residuals", &["check", "value"]);
            for (k, v) in &self.residuals {
                t.row(vec![k.clone(), format!("{v:.3e}")]);
            }
            t.render(&mut out);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_table_is_aligned() {
        let mut t = Table::new("h", &["atom", "h"]);
        t.row(vec!["a".into(), "9".into()]).row(vec!["long".into(), "0".into()]);
        let mut s = String::new();
        t.render(&mut s);
        assert_eq!(s, "h\n  atom  h\n  ----  -\n  a     9\n  long  0\n");
    }

    #[test]
    fn json_embeds_version_and_tolerances() {
        let mut r = Report::new("analyze", Some("x"), Tolerances::default(), 6);
        r.section("h", &vec![1.0, 2.0]).ok("done");
        let v: Value = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(v["version"], VERSION);
        assert_eq!(v["tolerances"]["abs"], 1e-10);
        assert_eq!(v["h"][1], 2.0);
        assert_eq!(v["status"], "ok");
    }

    #[test]
    fn number_format() {
        assert_eq!(fmt_f(9.0), "9");
        assert_eq!(fmt_f(0.25), "0.25");
        assert_eq!(fmt_f(1e-12), "1.000000e-12");
    }
}
