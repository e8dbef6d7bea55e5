use std::io::Write;
use std::path::Path;

use serde::Serialize;
use serde_json::Value;

use ambiguity_core::{CheckReport, Verdict, Witness};

/// Machine-readable run report. Timing is kept out so identical inputs give
/// byte-identical files.
#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub command: String,
    pub library_version: String,
    pub seed: Option<u64>,
    pub tolerance: f64,
    pub status: Verdict,
    pub checks: Vec<CheckSummary>,
    pub results: Value,
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckSummary {
    pub name: String,
    pub verdict: Verdict,
    pub samples_run: usize,
    pub violations: usize,
    pub tolerance: f64,
    pub witnesses: Vec<Witness>,
}

impl CheckSummary {
    pub fn from_report(name: impl Into<String>, r: &CheckReport) -> Self {
        Self {
            name: name.into(),
            verdict: r.verdict,
            samples_run: r.samples_run,
            violations: r.violations,
            tolerance: r.tolerance,
            witnesses: r.witnesses.clone(),
        }
    }

    /// A single yes/no check with no sampling behind it.
    pub fn single(name: impl Into<String>, ok: bool, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            verdict: if ok {
                Verdict::Consistent
            } else {
                Verdict::Violated
            },
            samples_run: 1,
            violations: usize::from(!ok),
            tolerance,
            witnesses: Vec::new(),
        }
    }
}

impl Report {
    pub fn new(
        command: &str,
        seed: Option<u64>,
        tolerance: f64,
        checks: Vec<CheckSummary>,
        results: Value,
    ) -> Self {
        let status = if checks.iter().all(|c| c.verdict.is_consistent()) {
            Verdict::Consistent
        } else {
            Verdict::Violated
        };
        Self {
            command: command.to_owned(),
            library_version: env!("CARGO_PKG_VERSION").to_owned(),
            seed,
            tolerance,
            status,
            checks,
            results,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn write(&self, dir: &Path) -> std::io::Result<()> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("report.json"), self.to_json())
    }

    /// One line per check, then the status.
    pub fn summarize<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for c in &self.checks {
            let tag = if c.verdict.is_consistent() {
                "ok"
            } else {
                "VIOLATED"
            };
            writeln!(
                out,
                "{:<40} {:<9} {} samples, {} violations",
                c.name, tag, c.samples_run, c.violations
            )?;
        }
        let status = if self.status.is_consistent() {
            "consistent"
        } else {
            "violated"
        };
        writeln!(out, "{}: {status}", self.command)
    }
}
