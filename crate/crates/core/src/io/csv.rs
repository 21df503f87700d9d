//! Comma-separated numeric tables.
//!
//! One header line (`corner,<column labels>`) and one line per row
//! (`<row key>,<values>`). Values are written as `{:.16e}`, which keeps 17
//! significant digits and therefore round-trips every finite `f64`.

use std::fmt::Write as _;
use std::path::Path;

use crate::analysis::{DecompositionResult, Matrix, Timeline};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub corner: String,
    pub columns: Vec<String>,
    pub rows: Vec<(String, Vec<f64>)>,
}

fn check_label(s: &str) -> Result<()> {
    if s.contains([',', '\n', '\r', '"']) {
        return Err(Error::invalid(format!(
            "CSV label {s:?} contains a reserved character"
        )));
    }
    Ok(())
}

pub fn fmt_value(v: f64) -> String {
    format!("{v:.16e}")
}

impl Table {
    pub fn encode(&self) -> Result<String> {
        check_label(&self.corner)?;
        let mut out = self.corner.clone();
        for c in &self.columns {
            check_label(c)?;
            out.push(',');
            out.push_str(c);
        }
        out.push('\n');
        for (key, vals) in &self.rows {
            check_label(key)?;
            if vals.len() != self.columns.len() {
                return Err(Error::invalid(format!(
                    "row {key} has {} values for {} columns",
                    vals.len(),
                    self.columns.len()
                )));
            }
            out.push_str(key);
            for v in vals {
                let _ = write!(out, ",{}", fmt_value(*v));
            }
            out.push('\n');
        }
        Ok(out)
    }

    pub fn decode(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::format("CSV", "missing header"))?;
        let mut cells = header.split(',');
        let corner = cells.next().unwrap_or_default().to_string();
        let columns: Vec<String> = cells.map(str::to_string).collect();
        let mut rows = Vec::new();
        for (n, line) in lines.enumerate() {
            let mut cells = line.split(',');
            let key = cells.next().unwrap_or_default().to_string();
            let vals = cells
                .map(|c| {
                    c.parse::<f64>().map_err(|_| {
                        Error::format("CSV", format!("row {}: {c:?} is not a number", n + 1))
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            if vals.len() != columns.len() {
                return Err(Error::format(
                    "CSV",
                    format!(
                        "row {} has {} values, header has {}",
                        n + 1,
                        vals.len(),
                        columns.len()
                    ),
                ));
            }
            rows.push((key, vals));
        }
        Ok(Self {
            corner,
            columns,
            rows,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        super::write_all(path, self.encode()?.as_bytes())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = super::read_all(path)?;
        let text = String::from_utf8(bytes).map_err(|_| Error::format("CSV", "not UTF-8"))?;
        Self::decode(&text)
    }
}

impl From<&Matrix> for Table {
    fn from(m: &Matrix) -> Self {
        Table {
            corner: "mode".into(),
            columns: m.col_labels.clone(),
            rows: m
                .row_labels
                .iter()
                .cloned()
                .zip(m.values.iter().cloned())
                .collect(),
        }
    }
}

impl From<&Table> for Matrix {
    fn from(t: &Table) -> Self {
        Matrix {
            row_labels: t.rows.iter().map(|r| r.0.clone()).collect(),
            col_labels: t.columns.clone(),
            values: t.rows.iter().map(|r| r.1.clone()).collect(),
        }
    }
}

impl From<&Timeline> for Table {
    fn from(t: &Timeline) -> Self {
        Table {
            corner: "time_s".into(),
            columns: t.channel_labels.clone(),
            rows: t
                .samples
                .iter()
                .map(|s| (fmt_value(s.time), s.channel_power.clone()))
                .collect(),
        }
    }
}

/// Modal powers `|c_k|²` of one decomposed field plus the residual.
pub fn decomposition_table(name: &str, d: &DecompositionResult) -> Table {
    let mut columns = d.labels.clone();
    columns.push("residual".into());
    let mut vals = d.powers();
    vals.push(d.residual_power);
    Table {
        corner: "field".into(),
        columns,
        rows: vec![(name.to_string(), vals)],
    }
}
