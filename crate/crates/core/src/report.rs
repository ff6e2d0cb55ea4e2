//! Machine-readable reports. Numbers are written with 17 significant digits
//! so every double round-trips; wall-clock times go to a separate file so the
//! main report is reproducible byte for byte.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::ser::Error as _;
use serde::{Serialize, Serializer};
use serde_json::value::RawValue;

use crate::config::{Emit, RunConfig};
use crate::error::{QsocError, Result};

pub const ARTIFACT_VERSION: &str = env!("CARGO_PKG_VERSION");

pub const JSON_FILE: &str = "report.json";
pub const CSV_FILE: &str = "report.csv";
pub const TIMINGS_FILE: &str = "timings.json";
pub const PLOT_DIR: &str = "plot";

/// `{:.16e}` for finite values, `NaN`, `inf` or `-inf` otherwise.
pub fn format_num(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else if x.is_nan() {
        "NaN".to_owned()
    } else if x > 0.0 {
        "inf".to_owned()
    } else {
        "-inf".to_owned()
    }
}

/// Inverse of [`format_num`].
pub fn parse_num(s: &str) -> Option<f64> {
    match s {
        "NaN" => Some(f64::NAN),
        "inf" => Some(f64::INFINITY),
        "-inf" => Some(f64::NEG_INFINITY),
        _ => s.parse().ok(),
    }
}

/// A report number: a JSON number when finite, a string otherwise.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Num(pub f64);

impl Serialize for Num {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        if self.0.is_finite() {
            RawValue::from_string(format_num(self.0))
                .map_err(S::Error::custom)?
                .serialize(s)
        } else {
            s.serialize_str(&format_num(self.0))
        }
    }
}

impl From<f64> for Num {
    fn from(x: f64) -> Self {
        Num(x)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
}

impl Status {
    pub fn from_bool(ok: bool) -> Self {
        if ok {
            Status::Pass
        } else {
            Status::Fail
        }
    }

    pub fn passed(self) -> bool {
        self == Status::Pass
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Num>>,
}

impl Table {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Self {
            name: name.to_owned(),
            columns: columns.iter().map(|c| (*c).to_owned()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: &[f64]) {
        assert_eq!(row.len(), self.columns.len(), "row width of table {}", self.name);
        self.rows.push(row.iter().copied().map(Num).collect());
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SuiteRecord {
    pub name: String,
    pub status: Status,
    pub metrics: BTreeMap<String, Num>,
    pub tables: Vec<Table>,
}

impl SuiteRecord {
    pub fn new(name: &str) -> Self {
        Self {
            name: name.to_owned(),
            status: Status::Fail,
            metrics: BTreeMap::new(),
            tables: Vec::new(),
        }
    }

    pub fn metric(&mut self, name: &str, value: f64) -> &mut Self {
        self.metrics.insert(name.to_owned(), Num(value));
        self
    }

    pub fn flag(&mut self, name: &str, value: bool) -> &mut Self {
        self.metric(name, if value { 1.0 } else { 0.0 })
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.metrics.get(name).map(|n| n.0)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub artifact_version: &'static str,
    pub config: RunConfig,
    pub suites: Vec<SuiteRecord>,
    pub verdict: Status,
}

impl Report {
    pub fn new(config: RunConfig, suites: Vec<SuiteRecord>) -> Self {
        let verdict = Status::from_bool(suites.iter().all(|s| s.status.passed()));
        Self {
            artifact_version: ARTIFACT_VERSION,
            config,
            suites,
            verdict,
        }
    }

    pub fn suite(&self, name: &str) -> Option<&SuiteRecord> {
        self.suites.iter().find(|s| s.name == name)
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self).map_err(|e| QsocError::Contract(e.to_string()))?;
        s.push('\n');
        Ok(s)
    }

    /// Long format `suite,table,row,column,value`; metrics use table `metrics`, row 0.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let csv_err = |e: csv::Error| QsocError::Contract(e.to_string());
        w.write_record(["suite", "table", "row", "column", "value"])
            .map_err(csv_err)?;
        for s in &self.suites {
            for (name, v) in &s.metrics {
                w.write_record([s.name.as_str(), "metrics", "0", name.as_str(), &format_num(v.0)])
                    .map_err(csv_err)?;
            }
            for t in &s.tables {
                for (i, row) in t.rows.iter().enumerate() {
                    for (col, v) in t.columns.iter().zip(row) {
                        w.write_record([
                            s.name.as_str(),
                            t.name.as_str(),
                            &i.to_string(),
                            col.as_str(),
                            &format_num(v.0),
                        ])
                        .map_err(csv_err)?;
                    }
                }
            }
        }
        let bytes = w.into_inner().map_err(|e| QsocError::Contract(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| QsocError::Contract(e.to_string()))
    }

    /// One file per table column after the first: `x y` lines with the first column as `x`.
    pub fn plot_files(&self) -> Vec<(String, String)> {
        let mut out = Vec::new();
        for s in &self.suites {
            for t in &s.tables {
                for (j, col) in t.columns.iter().enumerate().skip(1) {
                    let body: String = t
                        .rows
                        .iter()
                        .map(|r| format!("{} {}\n", format_num(r[0].0), format_num(r[j].0)))
                        .collect();
                    out.push((format!("{}_{}_{}.dat", s.name, t.name, col), body));
                }
            }
        }
        out
    }

    /// Writes the requested formats into `dir`; returns the files written.
    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        fs::create_dir_all(dir)?;
        let mut written = Vec::new();
        let emit = &self.config.emit;
        if emit.contains(&Emit::Json) {
            let path = dir.join(JSON_FILE);
            fs::write(&path, self.to_json()?)?;
            written.push(path);
        }
        if emit.contains(&Emit::Csv) {
            let path = dir.join(CSV_FILE);
            fs::write(&path, self.to_csv()?)?;
            written.push(path);
        }
        if emit.contains(&Emit::Plotdata) {
            let plot = dir.join(PLOT_DIR);
            fs::create_dir_all(&plot)?;
            for (name, body) in self.plot_files() {
                let path = plot.join(name);
                fs::write(&path, body)?;
                written.push(path);
            }
        }
        Ok(written)
    }
}

/// Wall-clock seconds per suite.
#[derive(Clone, Debug, Default, Serialize)]
pub struct Timings {
    pub threads: usize,
    pub suites: BTreeMap<String, f64>,
    pub total: f64,
}

impl Timings {
    pub fn write(&self, dir: &Path) -> Result<PathBuf> {
        fs::create_dir_all(dir)?;
        let path = dir.join(TIMINGS_FILE);
        let text = serde_json::to_string_pretty(self).map_err(|e| QsocError::Contract(e.to_string()))?;
        fs::write(&path, text + "\n")?;
        Ok(path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_round_trip() {
        for x in [0.1, -1.0 / 3.0, 1e-300, 6.02214076e23, 0.0, -0.0, f64::MIN_POSITIVE] {
            let s = format_num(x);
            assert_eq!(parse_num(&s).unwrap().to_bits(), x.to_bits(), "{s}");
        }
        assert!(parse_num(&format_num(f64::NAN)).unwrap().is_nan());
        assert_eq!(format_num(f64::NEG_INFINITY), "-inf");
    }

    #[test]
    fn num_serializes_raw() {
        let v = serde_json::to_string(&vec![Num(0.5), Num(f64::INFINITY)]).unwrap();
        assert_eq!(v, "[5.0000000000000000e-1,\"inf\"]");
        let back: Vec<serde_json::Value> = serde_json::from_str(&v).unwrap();
        assert_eq!(back[0].as_f64(), Some(0.5));
    }

    #[test]
    fn plot_files_pair_first_column() {
        let mut r = SuiteRecord::new("orders");
        let mut t = Table::new("errors", &["eps", "first", "second"]);
        t.push(&[0.5, 1.0, 2.0]);
        r.tables.push(t);
        let cfg = crate::config::RunConfig::from_json(
            r#"{"problem": {"name": "free", "m": 1}, "grid": {"T": 1.0, "N": 2}, "suites": ["orders"]}"#,
        )
        .unwrap();
        let rep = Report::new(cfg, vec![r]);
        let files = rep.plot_files();
        assert_eq!(files.len(), 2);
        assert_eq!(files[1].0, "orders_errors_second.dat");
        assert_eq!(files[1].1, "5.0000000000000000e-1 2.0000000000000000e0\n");
        assert_eq!(rep.verdict, Status::Fail);
    }
}
