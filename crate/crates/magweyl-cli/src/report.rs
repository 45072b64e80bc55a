use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Threshold {
    AtMost(f64),
    AtLeast(f64),
    Within(f64, f64),
    /// informational: always passes when finite
    Report,
}

impl Threshold {
    pub fn admits(self, v: f64) -> bool {
        match self {
            Threshold::AtMost(t) => v <= t,
            Threshold::AtLeast(t) => v >= t,
            Threshold::Within(lo, hi) => (lo..=hi).contains(&v),
            Threshold::Report => v.is_finite(),
        }
    }
}

impl fmt::Display for Threshold {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Threshold::AtMost(t) => write!(f, "<= {t:e}"),
            Threshold::AtLeast(t) => write!(f, ">= {t}"),
            Threshold::Within(lo, hi) => write!(f, "in [{lo}, {hi}]"),
            Threshold::Report => f.write_str("reported"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub threshold: Threshold,
    pub passed: bool,
}

impl Check {
    pub fn new(name: impl Into<String>, value: f64, threshold: Threshold) -> Self {
        Check { name: name.into(), value, passed: threshold.admits(value), threshold }
    }

    pub fn at_most(name: impl Into<String>, value: f64, t: f64) -> Self {
        Self::new(name, value, Threshold::AtMost(t))
    }

    pub fn flag(name: impl Into<String>, ok: bool) -> Self {
        Self::new(name, if ok { 1.0 } else { 0.0 }, Threshold::AtLeast(1.0))
    }

    pub fn report(name: impl Into<String>, value: f64) -> Self {
        Self::new(name, value, Threshold::Report)
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = if self.passed { "pass" } else { "FAIL" };
        write!(f, "{tag} {} = {:e} ({})", self.name, self.value, self.threshold)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Environment {
    pub threads: usize,
    pub version: String,
    pub os: String,
    pub arch: String,
}

impl Environment {
    pub fn current() -> Self {
        Environment {
            threads: rayon::current_num_threads(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            os: std::env::consts::OS.to_string(),
            arch: std::env::consts::ARCH.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub scenario: String,
    pub passed: bool,
    pub checks: Vec<Check>,
    /// set when the scenario stopped early; the checks gathered so far are kept
    pub error: Option<String>,
    pub outputs: Vec<PathBuf>,
    pub wall_time_s: f64,
    pub environment: Environment,
}

impl RunReport {
    pub fn new(scenario: impl Into<String>) -> Self {
        RunReport {
            scenario: scenario.into(),
            passed: true,
            checks: Vec::new(),
            error: None,
            outputs: Vec::new(),
            wall_time_s: 0.0,
            environment: Environment::current(),
        }
    }

    pub fn push(&mut self, c: Check) {
        self.checks.push(c);
        self.refresh();
    }

    pub fn extend(&mut self, cs: impl IntoIterator<Item = Check>) {
        self.checks.extend(cs);
        self.refresh();
    }

    pub fn fail_with(&mut self, msg: impl Into<String>) {
        self.error = Some(msg.into());
        self.refresh();
    }

    fn refresh(&mut self) {
        self.passed = self.error.is_none() && self.checks.iter().all(|c| c.passed);
    }

    pub fn write(&self, dir: &Path) -> Result<PathBuf, CliError> {
        let path = dir.join("report.json");
        std::fs::write(&path, serde_json::to_string_pretty(self)?)?;
        Ok(path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn thresholds() {
        assert!(Threshold::AtMost(1.0).admits(1.0));
        assert!(!Threshold::AtMost(1.0).admits(f64::NAN));
        assert!(!Threshold::AtLeast(3.0).admits(2.0));
        assert!(Threshold::Within(3.5, 4.5).admits(4.0));
        assert!(!Threshold::Report.admits(f64::INFINITY));
    }

    #[test]
    fn overall_pass_is_conjunction() {
        let mut r = RunReport::new("validate");
        r.push(Check::at_most("a", 0.5, 1.0));
        assert!(r.passed);
        r.push(Check::at_most("b", 2.0, 1.0));
        assert!(!r.passed);
        let mut e = RunReport::new("x");
        e.fail_with("boom");
        assert!(!e.passed);
    }
}
