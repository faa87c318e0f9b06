//! Result bundles and their emission.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::Format;
use crate::error::Result;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metric {
    pub name: String,
    pub value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Comparison {
    AtMost,
    AtLeast,
    Below,
    Above,
    Holds,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub comparison: Comparison,
    pub threshold: f64,
    pub passed: bool,
}

impl Check {
    pub fn at_most(name: impl Into<String>, value: f64, threshold: f64) -> Self {
        Check { name: name.into(), value, comparison: Comparison::AtMost, threshold, passed: value <= threshold }
    }

    pub fn at_least(name: impl Into<String>, value: f64, threshold: f64) -> Self {
        Check { name: name.into(), value, comparison: Comparison::AtLeast, threshold, passed: value >= threshold }
    }

    pub fn below(name: impl Into<String>, value: f64, threshold: f64) -> Self {
        Check { name: name.into(), value, comparison: Comparison::Below, threshold, passed: value < threshold }
    }

    pub fn above(name: impl Into<String>, value: f64, threshold: f64) -> Self {
        Check { name: name.into(), value, comparison: Comparison::Above, threshold, passed: value > threshold }
    }

    /// A boolean property; `value` is 1 or 0.
    pub fn holds(name: impl Into<String>, ok: bool) -> Self {
        Check {
            name: name.into(),
            value: if ok { 1.0 } else { 0.0 },
            comparison: Comparison::Holds,
            threshold: 1.0,
            passed: ok,
        }
    }
}

/// A file produced alongside a bundle.
#[derive(Debug, Clone, PartialEq)]
pub struct Artifact {
    pub file_name: String,
    pub contents: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultBundle {
    pub experiment: String,
    /// The property the experiment exercises.
    pub claim: String,
    pub config_hash: String,
    pub seed: u64,
    pub metrics: Vec<Metric>,
    pub checks: Vec<Check>,
    /// Reported values with no pass/fail.
    pub observations: Vec<Metric>,
    pub runtime_secs: f64,
    pub passed: bool,
    #[serde(skip)]
    pub artifacts: Vec<Artifact>,
}

impl ResultBundle {
    pub fn new(experiment: &str, claim: &str, config_hash: String, seed: u64) -> Self {
        ResultBundle {
            experiment: experiment.to_string(),
            claim: claim.to_string(),
            config_hash,
            seed,
            metrics: Vec::new(),
            checks: Vec::new(),
            observations: Vec::new(),
            runtime_secs: 0.0,
            passed: true,
            artifacts: Vec::new(),
        }
    }

    pub fn metric(&mut self, name: impl Into<String>, value: f64) {
        self.metrics.push(Metric { name: name.into(), value });
    }

    pub fn observe(&mut self, name: impl Into<String>, value: f64) {
        self.observations.push(Metric { name: name.into(), value });
    }

    pub fn check(&mut self, c: Check) {
        self.passed &= c.passed;
        self.checks.push(c);
    }

    pub fn artifact(&mut self, file_name: impl Into<String>, contents: String) {
        self.artifacts.push(Artifact { file_name: file_name.into(), contents });
    }

    pub fn find_check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn find_metric(&self, name: &str) -> Option<f64> {
        self.metrics.iter().chain(&self.observations).find(|m| m.name == name).map(|m| m.value)
    }

    /// Every number except the runtime as `name=bits` lines, plus the config hash.
    pub fn fingerprint(&self) -> Vec<String> {
        let mut v = vec![format!("config_hash={}", self.config_hash)];
        let rows = self.metrics.iter().chain(&self.observations).map(|m| (&m.name, m.value));
        v.extend(rows.chain(self.checks.iter().map(|c| (&c.name, c.value))).map(|(n, x)| format!("{n}={:016x}", x.to_bits())));
        v
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("bundles serialize")
    }

    /// `section,name,value,comparison,threshold,passed` rows.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("section,name,value,comparison,threshold,passed\n");
        for m in &self.metrics {
            s += &format!("metric,{},{:?},,,\n", m.name, m.value);
        }
        for m in &self.observations {
            s += &format!("observation,{},{:?},,,\n", m.name, m.value);
        }
        for c in &self.checks {
            let cmp = serde_json::to_value(c.comparison).unwrap();
            s += &format!("check,{},{:?},{},{:?},{}\n", c.name, c.value, cmp.as_str().unwrap(), c.threshold, c.passed);
        }
        s += &format!("summary,passed,{},,,{}\n", self.passed as u8, self.passed);
        s += &format!("summary,runtime_secs,{:?},,,\n", self.runtime_secs);
        s
    }

    /// Writes `<experiment>.json` or `<experiment>.csv` plus the artifacts into `dir`.
    pub fn emit(&self, dir: &Path, format: Format) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        let (name, body) = match format {
            Format::Json => (format!("{}.json", self.experiment), self.to_json()),
            Format::Csv => (format!("{}.csv", self.experiment), self.to_csv()),
        };
        std::fs::File::create(dir.join(name))?.write_all(body.as_bytes())?;
        for a in &self.artifacts {
            std::fs::File::create(dir.join(&a.file_name))?.write_all(a.contents.as_bytes())?;
        }
        Ok(())
    }
}
