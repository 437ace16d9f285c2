//! Test records, the report, and their serializations.

use std::io::Write;

use serde::{Deserialize, Serialize};

use super::scenario::Scenario;

/// Outcome of one test at one `(t, u)` point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestRecord {
    pub test: String,
    pub t: Option<f64>,
    pub u: Option<f64>,
    /// Second grid point for pairwise tests.
    pub u2: Option<f64>,
    /// Moment order, when applicable.
    pub k: Option<u32>,
    pub statistic: f64,
    pub reference: Option<f64>,
    pub p_value: Option<f64>,
    pub z_score: Option<f64>,
    pub pass: bool,
    pub note: String,
}

impl TestRecord {
    pub fn new(test: &str) -> Self {
        Self {
            test: test.to_string(),
            t: None,
            u: None,
            u2: None,
            k: None,
            statistic: f64::NAN,
            reference: None,
            p_value: None,
            z_score: None,
            pass: false,
            note: String::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestReport {
    pub scenario: Scenario,
    pub seed: u64,
    pub records: Vec<TestRecord>,
    /// True when every record passes.
    pub verdict: bool,
    /// The limit theorems carry no rates; tolerances are calibration choices.
    pub tolerance_note: String,
}

impl TestReport {
    pub fn failures(&self) -> impl Iterator<Item = &TestRecord> {
        self.records.iter().filter(|r| !r.pass)
    }

    pub fn to_json(&self) -> serde_json::Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    /// One test per row.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), csv::Error> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
        for r in &self.records {
            w.serialize(r)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Sorted-sample quantiles of the statistic and its reference at one `(t, u)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PlotData {
    pub t: f64,
    pub u: f64,
    pub levels: Vec<f64>,
    pub statistic: Vec<f64>,
    pub reference: Vec<f64>,
}

impl PlotData {
    pub fn file_name(&self) -> String {
        format!("quantiles_t{}_u{}.csv", self.t, self.u)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), csv::Error> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
        w.write_record(["p", "statistic", "reference"])?;
        for i in 0..self.levels.len() {
            w.write_record([self.levels[i].to_string(), self.statistic[i].to_string(), self.reference[i].to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Report plus plot data of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub report: TestReport,
    pub plots: Vec<PlotData>,
}
