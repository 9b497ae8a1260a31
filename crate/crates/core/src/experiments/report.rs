//! Uniform result container: an experiment emits one report holding one
//! cell per sweep point, each cell a bag of named metrics with sample
//! counts. The JSON body is free of timestamps, so identical runs produce
//! identical bytes; only the output filename carries a timestamp.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Metric {
    pub value: f64,
    /// How many observations produced `value`.
    pub samples: u64,
}

/// One sweep point: its coordinates in `params`, its measurements in
/// `metrics`. BTreeMaps keep the serialized order stable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReportCell {
    pub label: String,
    pub params: BTreeMap<String, serde_json::Value>,
    pub metrics: BTreeMap<String, Metric>,
}

impl ReportCell {
    pub fn new(label: impl Into<String>) -> Self {
        ReportCell { label: label.into(), params: BTreeMap::new(), metrics: BTreeMap::new() }
    }

    pub fn set_param(&mut self, key: &str, value: impl Serialize) {
        let value = serde_json::to_value(value).expect("parameter must serialize");
        self.params.insert(key.to_string(), value);
    }

    pub fn add_metric(&mut self, name: &str, value: f64, samples: u64) {
        self.metrics.insert(name.to_string(), Metric { value, samples });
    }

    pub fn metric(&self, name: &str) -> Option<f64> {
        self.metrics.get(name).map(|m| m.value)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentReport {
    pub name: String,
    pub parameters: BTreeMap<String, serde_json::Value>,
    pub cells: Vec<ReportCell>,
}

impl ExperimentReport {
    pub fn new(name: impl Into<String>) -> Self {
        ExperimentReport { name: name.into(), parameters: BTreeMap::new(), cells: Vec::new() }
    }

    pub fn set_param(&mut self, key: &str, value: impl Serialize) {
        let value = serde_json::to_value(value).expect("parameter must serialize");
        self.parameters.insert(key.to_string(), value);
    }

    pub fn push(&mut self, cell: ReportCell) {
        self.cells.push(cell);
    }

    pub fn cell(&self, label: &str) -> Option<&ReportCell> {
        self.cells.iter().find(|c| c.label == label)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    /// Renders an aligned-column table: one row per cell, one column per
    /// metric name appearing anywhere in the report; absent metrics show
    /// as `-`.
    pub fn to_table(&self) -> String {
        let mut columns: Vec<String> = Vec::new();
        for cell in &self.cells {
            for name in cell.metrics.keys() {
                if !columns.contains(name) {
                    columns.push(name.clone());
                }
            }
        }
        let mut rows: Vec<Vec<String>> = Vec::with_capacity(self.cells.len() + 1);
        let mut header = vec!["cell".to_string()];
        header.extend(columns.iter().cloned());
        rows.push(header);
        for cell in &self.cells {
            let mut row = vec![cell.label.clone()];
            for name in &columns {
                row.push(match cell.metrics.get(name) {
                    Some(m) => format_value(m.value),
                    None => "-".to_string(),
                });
            }
            rows.push(row);
        }
        let widths: Vec<usize> = (0..rows[0].len())
            .map(|c| rows.iter().map(|r| r[c].len()).max().unwrap_or(0))
            .collect();

        let mut out = String::new();
        out.push_str(&format!("# {}\n", self.name));
        for (key, value) in &self.parameters {
            out.push_str(&format!("# {key} = {value}\n"));
        }
        for (i, row) in rows.iter().enumerate() {
            let line: Vec<String> =
                row.iter().zip(&widths).map(|(v, w)| format!("{v:<w$}")).collect();
            out.push_str(line.join("  ").trim_end());
            out.push('\n');
            if i == 0 {
                let rule: Vec<String> = widths.iter().map(|w| "-".repeat(*w)).collect();
                out.push_str(&rule.join("  "));
                out.push('\n');
            }
        }
        out
    }

    /// Writes `<name>-<unix-seconds>.json` and the matching `.txt` table,
    /// returning the JSON path. An existing file gets a `-<i>` suffix
    /// instead of being clobbered.
    pub fn write_to_dir(&self, dir: &Path) -> std::io::Result<PathBuf> {
        std::fs::create_dir_all(dir)?;
        let stamp = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
        let mut base = format!("{}-{stamp}", self.name);
        let mut suffix = 0u32;
        while dir.join(format!("{base}.json")).exists() {
            suffix += 1;
            base = format!("{}-{stamp}-{suffix}", self.name);
        }
        let json_path = dir.join(format!("{base}.json"));
        std::fs::write(&json_path, self.to_json())?;
        std::fs::write(dir.join(format!("{base}.txt")), self.to_table())?;
        Ok(json_path)
    }
}

fn format_value(v: f64) -> String {
    if v == 0.0 {
        "0".to_string()
    } else if (1e-4..1e7).contains(&v.abs()) {
        format!("{v:.6}")
    } else {
        format!("{v:.4e}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_report() -> ExperimentReport {
        let mut report = ExperimentReport::new("demo");
        report.set_param("seed", 7u64);
        report.set_param("theta", 1.5);
        let mut a = ReportCell::new("k=2");
        a.set_param("k", 2u64);
        a.add_metric("mean_error", 3.25e-16, 100);
        a.add_metric("max_error", 9.5e-15, 100);
        report.push(a);
        let mut b = ReportCell::new("k=4");
        b.set_param("k", 4u64);
        b.add_metric("mean_error", -0.0, 100);
        report.push(b);
        report
    }

    #[test]
    fn json_round_trips_exactly() {
        let report = sample_report();
        let parsed = ExperimentReport::from_json(&report.to_json()).unwrap();
        assert_eq!(parsed, report);
        // Serialized form is stable too.
        assert_eq!(parsed.to_json(), report.to_json());
    }

    #[test]
    fn table_includes_every_metric_column_and_dashes_gaps() {
        let table = sample_report().to_table();
        assert!(table.contains("mean_error"));
        assert!(table.contains("max_error"));
        assert!(table.contains("k=2"));
        let k4_row = table.lines().find(|l| l.starts_with("k=4")).unwrap();
        assert!(
            k4_row.split_whitespace().any(|field| field == "-"),
            "missing metric must render as a dash: {k4_row}"
        );
    }

    #[test]
    fn table_columns_are_aligned() {
        let table = sample_report().to_table();
        let rows: Vec<&str> = table.lines().filter(|l| !l.starts_with('#')).collect();
        let starts: Vec<usize> =
            rows.iter().map(|r| r.find("mean_error").unwrap_or_else(|| r.len())).collect();
        // The header defines the column; every row is padded to it.
        assert!(rows[0].starts_with("cell"));
        assert!(starts[0] > 0);
    }

    #[test]
    fn write_to_dir_emits_json_and_txt_without_clobbering() {
        let dir = tempfile::tempdir().unwrap();
        let report = sample_report();
        let first = report.write_to_dir(dir.path()).unwrap();
        let second = report.write_to_dir(dir.path()).unwrap();
        assert_ne!(first, second, "second write must pick a fresh name");
        let body = std::fs::read_to_string(&first).unwrap();
        assert_eq!(ExperimentReport::from_json(&body).unwrap(), report);
        assert!(first.with_extension("txt").exists());
    }
}
