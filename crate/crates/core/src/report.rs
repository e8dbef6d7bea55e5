//! Verdicts and witnesses shared by every sampling checker.

use std::collections::BTreeMap;

use serde::Serialize;

/// Witnesses kept per report; the total count is still reported.
pub const MAX_WITNESSES: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    /// No sampled input refuted the property. This is evidence, not proof.
    Consistent,
    Violated,
}

impl Verdict {
    pub fn is_consistent(self) -> bool {
        self == Verdict::Consistent
    }
}

/// One sampled input at which an inequality `lhs >= rhs` failed.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Witness {
    pub inputs: BTreeMap<String, Vec<f64>>,
    pub lhs: f64,
    pub rhs: f64,
    /// `rhs - lhs`; positive when the inequality fails.
    pub gap: f64,
}

impl Witness {
    pub fn new(lhs: f64, rhs: f64) -> Self {
        Self {
            inputs: BTreeMap::new(),
            lhs,
            rhs,
            gap: rhs - lhs,
        }
    }

    pub fn with(mut self, name: &str, values: &[f64]) -> Self {
        self.inputs.insert(name.to_owned(), values.to_vec());
        self
    }

    pub fn with_scalar(self, name: &str, value: f64) -> Self {
        self.with(name, &[value])
    }

    pub fn input(&self, name: &str) -> Option<&[f64]> {
        self.inputs.get(name).map(Vec::as_slice)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckReport {
    pub check: String,
    pub verdict: Verdict,
    pub samples_run: usize,
    pub violations: usize,
    pub tolerance: f64,
    pub witnesses: Vec<Witness>,
}

impl CheckReport {
    pub fn new(check: impl Into<String>, tolerance: f64) -> Self {
        Self {
            check: check.into(),
            verdict: Verdict::Consistent,
            samples_run: 0,
            violations: 0,
            tolerance,
            witnesses: Vec::new(),
        }
    }

    /// Records a sample; `witness` is `Some` when the sample violated.
    pub fn record(&mut self, witness: Option<Witness>) {
        self.samples_run += 1;
        if let Some(w) = witness {
            self.violations += 1;
            self.verdict = Verdict::Violated;
            self.witnesses.push(w);
        }
    }

    /// Keeps the largest-gap witnesses, ties in encounter order.
    pub fn finish(mut self) -> Self {
        trim_witnesses(&mut self.witnesses);
        self
    }
}

pub(crate) fn trim_witnesses(witnesses: &mut Vec<Witness>) {
    witnesses.sort_by(|a, b| b.gap.total_cmp(&a.gap));
    witnesses.truncate(MAX_WITNESSES);
}
