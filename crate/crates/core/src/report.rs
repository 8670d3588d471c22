//! Outcome records for the verification checks.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::diffpoly::DiffPoly;

pub const SCHEMA: &str = "ilw-lax/1";

pub(crate) fn schema_string() -> String {
    SCHEMA.to_string()
}

/// Result of one check. A failing report always carries a witness: the
/// first nonzero difference that made the check fail.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerificationReport {
    #[serde(default = "schema_string")]
    pub schema: String,
    pub check: String,
    pub params: Vec<i64>,
    pub pass: bool,
    pub witness: Option<DiffPoly>,
    pub millis: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

impl VerificationReport {
    pub fn passed(check: &str, params: Vec<i64>, started: Instant) -> Self {
        Self::new(check, params, None, None, started)
    }

    pub fn failed(check: &str, params: Vec<i64>, witness: DiffPoly, detail: impl Into<String>, started: Instant) -> Self {
        Self::new(check, params, Some(witness), Some(detail.into()), started)
    }

    fn new(check: &str, params: Vec<i64>, witness: Option<DiffPoly>, detail: Option<String>, started: Instant) -> Self {
        VerificationReport {
            schema: schema_string(),
            check: check.to_string(),
            params,
            pass: witness.is_none(),
            witness,
            millis: started.elapsed().as_millis() as u64,
            detail,
        }
    }

    /// Builds a report from the first nonzero difference, if any.
    pub fn from_difference(
        check: &str,
        params: Vec<i64>,
        difference: Option<(DiffPoly, String)>,
        started: Instant,
    ) -> Self {
        match difference {
            None => Self::passed(check, params, started),
            Some((w, detail)) => Self::failed(check, params, w, detail, started),
        }
    }

    /// One line for terminal output.
    pub fn summary(&self) -> String {
        let params = self.params.iter().map(|p| p.to_string()).collect::<Vec<_>>().join(",");
        let status = if self.pass { "PASS" } else { "FAIL" };
        let mut line = format!("{status} {}({params}) [{} ms]", self.check, self.millis);
        if let Some(d) = &self.detail {
            line.push_str(": ");
            line.push_str(d);
        }
        if let Some(w) = &self.witness {
            line.push_str(&format!("; witness = {w}"));
        }
        line
    }
}
