//! Report document assembly and canonical serialization.
//!
//! JSON is the canonical report format. Serialization goes through
//! `serde_json::Value`, whose object maps are ordered, so identical runs
//! produce byte-identical output; the only wall-clock dependent block is
//! `run`, which the `--no-timestamp` flag suppresses. CSV output exists only
//! for profile tables.

use std::collections::BTreeMap;

use kale_core::einstein::RegimeReport;
use serde::Serialize;

/// Version tag of the report layout, documented in `docs/report-schema.json`.
pub const SCHEMA_VERSION: &str = "1";

/// Echo of the fully resolved invocation.
#[derive(Clone, Debug, Serialize)]
pub struct RunConfig {
    pub command: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub suite: Option<String>,
    pub beta: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r_range: Option<[f64; 2]>,
    /// Sample counts by grid name.
    pub grid: BTreeMap<String, u64>,
    /// Tolerance by check name; mirrors the `checks` array.
    pub tolerances: BTreeMap<String, f64>,
    pub format: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
}

/// One verification check: named, measured, and judged against its
/// tolerance. `pass` is true exactly when the measured defect is finite and
/// at most the tolerance.
#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    /// Largest measured defect; absent when the check aborted with an error.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_defect: Option<f64>,
    pub tolerance: f64,
    pub pass: bool,
    pub detail: String,
}

impl Check {
    pub fn measured(
        name: impl Into<String>,
        defect: f64,
        tolerance: f64,
        detail: impl Into<String>,
    ) -> Check {
        let mut detail = detail.into();
        if !defect.is_finite() {
            detail = format!("non-finite defect; {detail}");
        }
        Check {
            name: name.into(),
            // JSON has no non-finite numbers; a non-finite defect is
            // reported through `detail` and fails the check.
            max_defect: defect.is_finite().then_some(defect),
            tolerance,
            pass: defect.is_finite() && defect <= tolerance,
            detail,
        }
    }

    pub fn aborted(
        name: impl Into<String>,
        tolerance: f64,
        diagnostic: impl Into<String>,
    ) -> Check {
        Check {
            name: name.into(),
            max_defect: None,
            tolerance,
            pass: false,
            detail: diagnostic.into(),
        }
    }
}

/// One row of a radial profile table.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct ProfileRow {
    pub r: f64,
    pub v: f64,
    pub r_hat: f64,
    pub u: f64,
}

/// Wall-clock block; omitted under `--no-timestamp`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct RunInfo {
    /// Seconds since the Unix epoch at invocation.
    pub timestamp: u64,
    pub duration_ms: u64,
}

#[derive(Serialize)]
pub struct ReportDocument {
    pub schema_version: &'static str,
    pub config: RunConfig,
    pub checks: Vec<Check>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub profile: Option<Vec<ProfileRow>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub regimes: Option<Vec<RegimeReport>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub run: Option<RunInfo>,
}

impl ReportDocument {
    pub fn new(config: RunConfig) -> ReportDocument {
        ReportDocument {
            schema_version: SCHEMA_VERSION,
            config,
            checks: Vec::new(),
            profile: None,
            regimes: None,
            run: None,
        }
    }

    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    /// Copies each check's tolerance into the config echo, keyed by name.
    pub fn sync_tolerances(&mut self) {
        for check in &self.checks {
            self.config.tolerances.insert(check.name.clone(), check.tolerance);
        }
    }

    /// Canonical JSON: object keys sorted, two-space indentation, trailing
    /// newline.
    pub fn to_canonical_json(&self) -> String {
        let value = serde_json::to_value(self).expect("report serializes");
        let mut text = serde_json::to_string_pretty(&value).expect("report prints");
        text.push('\n');
        text
    }

    /// Profile table as CSV (header `r,V,R_hat,u`).
    pub fn profile_csv(&self) -> Option<String> {
        let rows = self.profile.as_ref()?;
        let mut out = String::from("r,V,R_hat,u\n");
        for row in rows {
            out.push_str(&format!("{},{},{},{}\n", row.r, row.v, row.r_hat, row.u));
        }
        Some(out)
    }
}
