use serde::{Deserialize, Serialize};
use std::fmt;

/// Verdict for a single clause of a multi-clause checker.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Pass,
    Fail,
    /// Clause not checked at this scale; the reason says why.
    Skipped(String),
    /// Clause holds but only vacuously (empty range of quantification etc.).
    Degenerate(String),
}

impl Verdict {
    pub fn ok(&self) -> bool {
        !matches!(self, Verdict::Fail)
    }
}

/// One named clause with its verdict and a human-readable detail line
/// (witness location for failures, derivation note for auto-passes).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClauseEntry {
    pub id: String,
    pub verdict: Verdict,
    pub detail: String,
}

/// Ordered collection of clause verdicts produced by validators.
/// `all_ok` is true when no clause failed (skipped and degenerate count as ok).
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClauseReport {
    pub entries: Vec<ClauseEntry>,
}

impl ClauseReport {
    pub fn new() -> Self {
        ClauseReport { entries: vec![] }
    }

    pub fn push(&mut self, id: impl Into<String>, verdict: Verdict, detail: impl Into<String>) {
        self.entries.push(ClauseEntry {
            id: id.into(),
            verdict,
            detail: detail.into(),
        });
    }

    pub fn pass(&mut self, id: impl Into<String>, detail: impl Into<String>) {
        self.push(id, Verdict::Pass, detail);
    }

    pub fn fail(&mut self, id: impl Into<String>, detail: impl Into<String>) {
        self.push(id, Verdict::Fail, detail);
    }

    pub fn all_ok(&self) -> bool {
        self.entries.iter().all(|e| e.verdict.ok())
    }

    pub fn get(&self, id: &str) -> Option<&ClauseEntry> {
        self.entries.iter().find(|e| e.id == id)
    }

    pub fn merged(mut self, other: ClauseReport) -> ClauseReport {
        self.entries.extend(other.entries);
        self
    }
}

impl fmt::Display for ClauseReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for e in &self.entries {
            let tag = match &e.verdict {
                Verdict::Pass => "pass".to_string(),
                Verdict::Fail => "FAIL".to_string(),
                Verdict::Skipped(r) => format!("skip ({r})"),
                Verdict::Degenerate(r) => format!("pass, degenerate ({r})"),
            };
            writeln!(f, "{:12} {}  {}", e.id, tag, e.detail)?;
        }
        Ok(())
    }
}
