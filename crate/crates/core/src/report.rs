//! Structured verification reports, one JSON record per check.

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::mmspace::WeightedGrid;

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

impl Verdict {
    /// PASS iff `gap ≥ −tolerance`.
    pub fn from_gap(gap: f64, tolerance: f64) -> Self {
        if gap >= -tolerance {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }

    /// FAIL dominates INCONCLUSIVE, which dominates PASS.
    pub fn combine(self, other: Verdict) -> Verdict {
        use Verdict::*;
        match (self, other) {
            (Fail, _) | (_, Fail) => Fail,
            (Inconclusive, _) | (_, Inconclusive) => Inconclusive,
            _ => Pass,
        }
    }
}

/// A secondary inequality recorded alongside the main one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubCheck {
    pub name: String,
    pub verdict: Verdict,
    pub gap: f64,
    pub tolerance: f64,
    /// Reported only; never enters a composite gap.
    #[serde(default)]
    pub informative: bool,
}

impl SubCheck {
    pub fn new(name: impl Into<String>, gap: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            verdict: Verdict::from_gap(gap, tolerance),
            gap,
            tolerance,
            informative: false,
        }
    }

    pub fn info(name: impl Into<String>, gap: f64, tolerance: f64) -> Self {
        Self {
            informative: true,
            ..Self::new(name, gap, tolerance)
        }
    }

    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub tool_version: String,
    pub check: String,
    pub space: String,
    pub inputs: IndexMap<String, Value>,
    pub computed: IndexMap<String, Value>,
    pub verdict: Verdict,
    pub gap: f64,
    pub tolerance: f64,
    pub sub_checks: Vec<SubCheck>,
    pub notes: String,
}

impl VerificationReport {
    /// Empty report; the verdict stays INCONCLUSIVE until [`Self::conclude`].
    pub fn new(check: impl Into<String>, space: impl Into<String>) -> Self {
        Self {
            tool_version: TOOL_VERSION.to_string(),
            check: check.into(),
            space: space.into(),
            inputs: IndexMap::new(),
            computed: IndexMap::new(),
            verdict: Verdict::Inconclusive,
            gap: f64::NAN,
            tolerance: f64::NAN,
            sub_checks: Vec::new(),
            notes: String::new(),
        }
    }

    pub fn for_grid(check: impl Into<String>, grid: &WeightedGrid) -> Self {
        Self::new(check, grid.label())
    }

    pub fn input(&mut self, key: &str, value: impl Into<Value>) -> &mut Self {
        self.inputs.insert(key.to_string(), value.into());
        self
    }

    pub fn record(&mut self, key: &str, value: impl Into<Value>) -> &mut Self {
        self.computed.insert(key.to_string(), value.into());
        self
    }

    pub fn sub_check(&mut self, sub: SubCheck) -> &mut Self {
        self.sub_checks.push(sub);
        self
    }

    pub fn note(&mut self, text: impl AsRef<str>) -> &mut Self {
        if !self.notes.is_empty() {
            self.notes.push_str("; ");
        }
        self.notes.push_str(text.as_ref());
        self
    }

    /// Sets the main gap and derives the verdict from it.
    pub fn conclude(&mut self, gap: f64, tolerance: f64) -> &mut Self {
        self.gap = gap;
        self.tolerance = tolerance;
        self.verdict = if gap.is_nan() {
            Verdict::Inconclusive
        } else {
            Verdict::from_gap(gap, tolerance)
        };
        self
    }

    fn binding(&self) -> impl Iterator<Item = &SubCheck> {
        self.sub_checks.iter().filter(|s| !s.informative)
    }

    /// Composite verdict: gap `min (gap_k + tol_k)` over the binding
    /// sub-checks, tolerance 0, so PASS iff every one of them passes.
    pub fn conclude_all(&mut self) -> &mut Self {
        let gap = self.binding().map(|s| s.gap + s.tolerance).fold(f64::INFINITY, f64::min);
        self.conclude(gap, 0.0)
    }

    /// Composite verdict on the normalized scale: gap `min gap_k / tol_k`,
    /// tolerance 1. Every binding sub-check needs a positive tolerance.
    pub fn conclude_normalized(&mut self) -> &mut Self {
        let gap = self.binding().map(|s| s.gap / s.tolerance).fold(f64::INFINITY, f64::min);
        self.conclude(gap, 1.0)
    }

    /// Downgrades a PASS to INCONCLUSIVE; a FAIL stays a FAIL.
    pub fn mark_inconclusive(&mut self, reason: impl AsRef<str>) -> &mut Self {
        if self.verdict == Verdict::Pass {
            self.verdict = Verdict::Inconclusive;
        }
        self.note(reason)
    }

    pub fn sub(&self, name: &str) -> Option<&SubCheck> {
        self.sub_checks.iter().find(|s| s.name == name)
    }

    /// Numeric entry of `computed`, if present.
    pub fn value(&self, key: &str) -> Option<f64> {
        self.computed.get(key).and_then(Value::as_f64)
    }

    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("report serializes")
    }
}

/// Worst verdict across reports; PASS for an empty list.
pub fn overall_verdict(reports: &[VerificationReport]) -> Verdict {
    reports.iter().fold(Verdict::Pass, |acc, r| acc.combine(r.verdict))
}
