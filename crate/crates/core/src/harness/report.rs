//! Report records and their on-disk form.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::{CampaignConfig, CheckName};
use crate::cohomology::{FormCertificate, Theorem2Rhs, UnstableDimension};
use crate::entropy::EntropyEstimate;
use crate::growth::{BoundaryRatio, GrowthEstimate};
use crate::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    Skipped,
    Indeterminate,
    Error,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Pass => "pass",
            Status::Fail => "fail",
            Status::Skipped => "skipped",
            Status::Indeterminate => "indeterminate",
            Status::Error => "error",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Quantity {
    pub value: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub residual: Option<f64>,
    pub converged: bool,
}

impl Quantity {
    pub fn exact(value: f64) -> Self {
        Quantity { value, residual: None, converged: true }
    }

    pub fn fitted(value: f64, residual: f64, converged: bool) -> Self {
        Quantity { value, residual: Some(residual), converged }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorInfo {
    pub code: String,
    pub message: String,
}

/// One inequality of the ordering chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub lhs: String,
    pub rhs: String,
    pub lhs_value: f64,
    pub rhs_value: f64,
    /// `rhs + allowance − lhs`; negative means violated.
    pub margin: f64,
    pub holds: bool,
    /// Monitored comparisons are reported but never decide the status.
    pub asserted: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub name: CheckName,
    pub status: Status,
    #[serde(default)]
    pub inputs: BTreeMap<String, serde_json::Value>,
    #[serde(default)]
    pub quantities: BTreeMap<String, Quantity>,
    #[serde(default)]
    pub verdicts: BTreeMap<String, bool>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub comparisons: Vec<Comparison>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slack: Option<f64>,
    #[serde(default)]
    pub caveats: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<ErrorInfo>,
}

impl CheckRecord {
    pub fn new(name: CheckName) -> Self {
        CheckRecord {
            name,
            status: Status::Skipped,
            inputs: BTreeMap::new(),
            quantities: BTreeMap::new(),
            verdicts: BTreeMap::new(),
            comparisons: Vec::new(),
            slack: None,
            caveats: Vec::new(),
            reason: None,
            error: None,
        }
    }

    pub fn input(&mut self, key: &str, value: impl Serialize) {
        self.inputs.insert(key.to_string(), serde_json::to_value(value).unwrap_or(serde_json::Value::Null));
    }

    pub fn quantity(&mut self, key: &str, q: Quantity) {
        self.quantities.insert(key.to_string(), q);
    }

    /// True when every recorded quantity converged.
    pub fn all_converged(&self) -> bool {
        self.quantities.values().all(|q| q.converged)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemSummary {
    pub kind: String,
    pub dimension: usize,
    pub c1_bound: f64,
    /// Rank of `E^u` used by every check.
    pub unstable_dimension: usize,
    /// Eigenvalue data of the linear part.
    pub linear_part: UnstableDimension,
}

/// Centre-stable top exponent averaged over an orbit sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExponentAverage {
    pub mean: f64,
    pub min: f64,
    pub max: f64,
    pub samples: usize,
    pub steps: usize,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct Estimates {
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub growth: Vec<GrowthEstimate>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inverse_integrated: Option<GrowthEstimate>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub entropy: Option<EntropyEstimate>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cs_top_exponent: Option<ExponentAverage>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub boundary_ratio: Option<BoundaryRatio>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cohomology: Option<Theorem2Rhs>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub certificate: Option<FormCertificate>,
}

/// Wall-clock data; the only non-reproducible part of a report.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub started_unix_seconds: f64,
    pub total_seconds: f64,
    pub checks: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VerificationReport {
    pub toolkit_version: String,
    pub schema_version: u32,
    pub config: CampaignConfig,
    pub system: SystemSummary,
    pub checks: Vec<CheckRecord>,
    pub estimates: Estimates,
    pub timing: Timing,
}

impl VerificationReport {
    /// 0 if every check passed or was skipped, 2 if any errored or was
    /// indeterminate, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        if self.checks.iter().any(|c| matches!(c.status, Status::Error | Status::Indeterminate)) {
            2
        } else if self.checks.iter().any(|c| c.status == Status::Fail) {
            1
        } else {
            0
        }
    }

    pub fn check(&self, name: CheckName) -> Option<&CheckRecord> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// JSON with the timing field removed.
    pub fn reproducible_json(&self) -> Result<String> {
        let mut v = serde_json::to_value(self)?;
        if let Some(obj) = v.as_object_mut() {
            obj.remove("timing");
        }
        Ok(serde_json::to_string_pretty(&v)?)
    }

    /// `(file name, contents)` for every exported series.
    pub fn series_csv(&self) -> Vec<(String, String)> {
        let mut out = Vec::new();
        for g in &self.estimates.growth {
            out.push((format!("{}.csv", g.estimator.tag()), g.to_csv()));
        }
        if let Some(g) = &self.estimates.inverse_integrated {
            let body = g.to_csv().replace("\nv_bar_u,", "\ninverse_v_bar_u,");
            out.push(("inverse_v_bar_u.csv".to_string(), body));
        }
        if let Some(e) = &self.estimates.entropy {
            out.push(("entropy.csv".to_string(), e.to_csv()));
        }
        if let Some(b) = &self.estimates.boundary_ratio {
            let mut s = String::from("estimator,n,ratio\n");
            for (n, r) in &b.series {
                let _ = writeln!(s, "boundary_ratio,{n},{r:.17e}");
            }
            out.push(("boundary_ratio.csv".to_string(), s));
        }
        out
    }

    /// Writes `report.json` and `series/*.csv` under `dir`.
    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir.join("series"))?;
        let mut written = Vec::new();
        let report = dir.join("report.json");
        std::fs::write(&report, self.to_json()? + "\n")?;
        written.push(report);
        for (name, body) in self.series_csv() {
            let p = dir.join("series").join(name);
            std::fs::write(&p, body)?;
            written.push(p);
        }
        Ok(written)
    }

    pub fn read(path: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }

    /// Human-readable summary.
    pub fn render(&self) -> String {
        let mut s = String::new();
        let label = self.config.label.as_deref().unwrap_or("campaign");
        let _ = writeln!(
            s,
            "{label}: d = {}, u = {}, {} map, seed {}",
            self.system.dimension, self.system.unstable_dimension, self.system.kind, self.config.seed
        );
        for c in &self.checks {
            let _ = write!(s, "  {:<11} {:<13}", c.name.as_str(), c.status.as_str());
            if let Some(sl) = c.slack {
                let _ = write!(s, " slack {sl:+.4}");
            }
            if let Some(r) = &c.reason {
                let _ = write!(s, " ({r})");
            }
            if let Some(e) = &c.error {
                let _ = write!(s, " [{}] {}", e.code, e.message);
            }
            s.push('\n');
            for (k, q) in &c.quantities {
                let _ = write!(s, "      {k:<22} {:>12.6}", q.value);
                if let Some(r) = q.residual {
                    let _ = write!(s, "  residual {r:.4}");
                }
                if !q.converged {
                    s.push_str("  UNCONVERGED");
                }
                s.push('\n');
            }
        }
        let _ = writeln!(s, "exit code {}", self.exit_code());
        s
    }
}
