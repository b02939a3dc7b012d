//! Campaign configuration.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::bundles::DEFAULT_SETTLE;
use crate::entropy::{SamplerKind, DEFAULT_SATURATION, MIN_SAMPLES};
use crate::growth::{FamilyParams, DEFAULT_WINDOW};
use crate::system::SystemConfig;
use crate::{Error, Result};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckName {
    Theorem1,
    Theorem2,
    Ordering,
    Corollary1,
    LemmaD,
}

impl CheckName {
    pub const ALL: [CheckName; 5] =
        [CheckName::Theorem1, CheckName::Theorem2, CheckName::Ordering, CheckName::Corollary1, CheckName::LemmaD];

    pub fn as_str(self) -> &'static str {
        match self {
            CheckName::Theorem1 => "theorem1",
            CheckName::Theorem2 => "theorem2",
            CheckName::Ordering => "ordering",
            CheckName::Corollary1 => "corollary1",
            CheckName::LemmaD => "lemma_d",
        }
    }

    pub fn parse(s: &str) -> Option<CheckName> {
        CheckName::ALL.into_iter().find(|c| c.as_str() == s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IntegratedParams {
    pub samples: usize,
    pub window: (usize, usize),
}

impl Default for IntegratedParams {
    fn default() -> Self {
        IntegratedParams { samples: 2000, window: DEFAULT_WINDOW }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EntropyParams {
    pub sampler: SamplerKind,
    pub burn_in: usize,
    pub samples: usize,
    pub ladder: Vec<f64>,
    pub n_range: (usize, usize),
    pub saturation: f64,
}

impl Default for EntropyParams {
    fn default() -> Self {
        EntropyParams {
            sampler: SamplerKind::Lebesgue,
            burn_in: 0,
            samples: 4000,
            ladder: vec![0.2, 0.1, 0.05],
            n_range: (1, 14),
            saturation: DEFAULT_SATURATION,
        }
    }
}

/// Orbit sample for the centre-stable top exponent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExponentParams {
    pub samples: usize,
    pub steps: usize,
}

impl Default for ExponentParams {
    fn default() -> Self {
        ExponentParams { samples: 32, steps: 200 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EstimatorParams {
    pub n_settle: usize,
    pub integrated: IntegratedParams,
    pub families: FamilyParams,
    pub entropy: EntropyParams,
    pub exponent: ExponentParams,
}

impl Default for EstimatorParams {
    fn default() -> Self {
        EstimatorParams {
            n_settle: DEFAULT_SETTLE,
            integrated: IntegratedParams::default(),
            families: FamilyParams::default(),
            entropy: EntropyParams::default(),
            exponent: ExponentParams::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Theorem1Criterion {
    /// `h ≤ v̄ + d_cs·λ⁺ + tol`.
    Literal,
    /// `h ≤ v̄ + d_cs·max(λ⁺, 0) + tol`.
    Clamped,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Theorem1Params {
    pub criterion: Theorem1Criterion,
    pub tol_entropy: f64,
    pub tol_growth: f64,
    pub tol_exponent: f64,
}

impl Default for Theorem1Params {
    fn default() -> Self {
        Theorem1Params { criterion: Theorem1Criterion::Literal, tol_entropy: 0.08, tol_growth: 0.01, tol_exponent: 0.01 }
    }
}

impl Theorem1Params {
    pub fn tol_total(&self) -> f64 {
        self.tol_entropy + self.tol_growth + self.tol_exponent
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Theorem2Params {
    pub tol: f64,
    pub max_residual: f64,
}

impl Default for Theorem2Params {
    fn default() -> Self {
        Theorem2Params { tol: 0.03, max_residual: 0.05 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OrderingParams {
    pub slack: f64,
}

impl Default for OrderingParams {
    fn default() -> Self {
        OrderingParams { slack: 0.02 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Corollary1Params {
    pub tol: f64,
}

impl Default for Corollary1Params {
    fn default() -> Self {
        Corollary1Params { tol: 0.1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LemmaDParams {
    pub window: (usize, usize),
    /// Allowed relative error of the decay exponent.
    pub rel_tol: f64,
    pub refine_tol: f64,
    pub radius: f64,
    pub pre_iterates: usize,
}

impl Default for LemmaDParams {
    fn default() -> Self {
        LemmaDParams { window: (5, 20), rel_tol: 0.1, refine_tol: 1e-3, radius: 1.0, pre_iterates: 20 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CampaignConfig {
    pub schema_version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    pub system: SystemConfig,
    pub seed: u64,
    /// Rank of `E^u`; defaults to the number of expanding eigenvalues of the
    /// linear part.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unstable_dimension: Option<usize>,
    #[serde(default)]
    pub checks: Vec<CheckName>,
    #[serde(default)]
    pub estimators: EstimatorParams,
    #[serde(default)]
    pub theorem1: Theorem1Params,
    #[serde(default)]
    pub theorem2: Theorem2Params,
    #[serde(default)]
    pub ordering: OrderingParams,
    #[serde(default)]
    pub corollary1: Corollary1Params,
    #[serde(default)]
    pub lemma_d: LemmaDParams,
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::Config(format!("{name} must be positive and finite, got {v}")))
    }
}

fn window(name: &str, w: (usize, usize)) -> Result<()> {
    if w.1 < w.0 + 2 {
        return Err(Error::Config(format!("{name} window {w:?} must span at least 3 values")));
    }
    Ok(())
}

impl CampaignConfig {
    pub fn new(system: SystemConfig, seed: u64, checks: Vec<CheckName>) -> Self {
        CampaignConfig {
            schema_version: SCHEMA_VERSION,
            label: None,
            system,
            seed,
            unstable_dimension: None,
            checks,
            estimators: EstimatorParams::default(),
            theorem1: Theorem1Params::default(),
            theorem2: Theorem2Params::default(),
            ordering: OrderingParams::default(),
            corollary1: Corollary1Params::default(),
            lemma_d: LemmaDParams::default(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: CampaignConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::Config(format!(
                "schema_version {} is not supported (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        for (i, c) in self.checks.iter().enumerate() {
            if self.checks[..i].contains(c) {
                return Err(Error::Config(format!("check {} listed twice", c.as_str())));
            }
        }
        let e = &self.estimators;
        if e.n_settle == 0 {
            return Err(Error::Config("n_settle must be at least 1".into()));
        }
        if e.integrated.samples == 0 {
            return Err(Error::Config("integrated.samples must be at least 1".into()));
        }
        window("integrated", e.integrated.window)?;
        if e.families.disks == 0 {
            return Err(Error::Config("families.disks must be at least 1".into()));
        }
        window("families", e.families.window)?;
        positive("families.leaf_radius", e.families.leaf_radius)?;
        positive("families.min_radius", e.families.min_radius)?;
        positive("families.tol", e.families.tol)?;
        if let Some(c) = e.families.cone {
            positive("families.cone", c)?;
        }
        if e.entropy.samples < MIN_SAMPLES {
            return Err(Error::Config(format!("entropy.samples must be at least {MIN_SAMPLES}")));
        }
        if e.entropy.ladder.is_empty() {
            return Err(Error::Config("entropy.ladder is empty".into()));
        }
        for d in &e.entropy.ladder {
            positive("entropy.ladder entry", *d)?;
        }
        if e.entropy.ladder.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::Config("entropy.ladder must be strictly decreasing".into()));
        }
        positive("entropy.saturation", e.entropy.saturation)?;
        if e.exponent.samples == 0 || e.exponent.steps == 0 {
            return Err(Error::Config("exponent.samples and exponent.steps must be positive".into()));
        }
        positive("theorem1.tol_entropy", self.theorem1.tol_entropy)?;
        positive("theorem1.tol_growth", self.theorem1.tol_growth)?;
        positive("theorem1.tol_exponent", self.theorem1.tol_exponent)?;
        positive("theorem2.tol", self.theorem2.tol)?;
        positive("theorem2.max_residual", self.theorem2.max_residual)?;
        positive("ordering.slack", self.ordering.slack)?;
        positive("corollary1.tol", self.corollary1.tol)?;
        positive("lemma_d.rel_tol", self.lemma_d.rel_tol)?;
        positive("lemma_d.refine_tol", self.lemma_d.refine_tol)?;
        positive("lemma_d.radius", self.lemma_d.radius)?;
        window("lemma_d", self.lemma_d.window)?;
        Ok(())
    }
}
