//! Verification campaigns: run the requested checks against one system and
//! collect a reproducible report.

mod checks;
pub mod config;
pub mod report;

pub use checks::{ordering_comparisons, ordering_record, THEOREM1_CAVEAT};
pub use config::{CampaignConfig, CheckName, Theorem1Criterion, SCHEMA_VERSION};
pub use report::{
    CheckRecord, Comparison, ErrorInfo, Estimates, ExponentAverage, Quantity, Status, SystemSummary, Timing,
    VerificationReport,
};

use std::cell::OnceCell;
use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::bundles::{cs_top_exponent, lyapunov_spectrum, LyapunovSpectrum};
use crate::cohomology::{unstable_dimension, UnstableDimension};
use crate::entropy::{katok_entropy, EntropyEstimate, MeasureSampler};
use crate::growth::{
    integrated_growth, sample_disk_family, uniform_sample, DiskFamily, DiskSample, Estimator, FamilyMode,
    GrowthEstimate,
};
use crate::system::{MapKind, TorusDiffeo, TorusMap};
use crate::{par, rng, Error, Result};

/// Why an upstream estimate is missing.
#[derive(Debug, Clone)]
pub(crate) struct Failure {
    status: Status,
    info: ErrorInfo,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match e {
            Error::Unconverged { .. } | Error::TooManyUnconverged { .. } => Status::Indeterminate,
            Error::Precondition(_) | Error::NoInverse => Status::Skipped,
            _ => Status::Error,
        };
        Failure { status, info: ErrorInfo { code: e.code().to_string(), message: e.to_string() } }
    }
}

type Outcome<T> = std::result::Result<T, Failure>;

/// Lazily computed estimates shared by the checks of one campaign.
pub(crate) struct Context<'a> {
    cfg: &'a CampaignConfig,
    f: TorusMap,
    u: usize,
    linear: UnstableDimension,
    integrated: OnceCell<Outcome<GrowthEstimate>>,
    leaf: OnceCell<Outcome<DiskSample>>,
    transverse: OnceCell<Outcome<DiskSample>>,
    entropy: OnceCell<Outcome<EntropyEstimate>>,
    exponent: OnceCell<Outcome<ExponentAverage>>,
    inverse_integrated: OnceCell<Outcome<GrowthEstimate>>,
    boundary: OnceCell<Outcome<crate::growth::BoundaryRatio>>,
}

impl<'a> Context<'a> {
    fn new(cfg: &'a CampaignConfig) -> Result<Self> {
        let f = cfg.system.build()?;
        let linear = unstable_dimension(f.matrix());
        let u = cfg.unstable_dimension.unwrap_or(linear.unstable);
        if u >= f.dim() {
            return Err(Error::Config(format!("unstable dimension {u} must be below d = {}", f.dim())));
        }
        Ok(Context {
            cfg,
            f,
            u,
            linear,
            integrated: OnceCell::new(),
            leaf: OnceCell::new(),
            transverse: OnceCell::new(),
            entropy: OnceCell::new(),
            exponent: OnceCell::new(),
            inverse_integrated: OnceCell::new(),
            boundary: OnceCell::new(),
        })
    }

    fn seed(&self, label: &str) -> u64 {
        rng::derive(self.cfg.seed, label)
    }

    fn integrated(&self) -> Outcome<&GrowthEstimate> {
        self.integrated
            .get_or_init(|| {
                let p = &self.cfg.estimators;
                if self.u == 0 {
                    return Ok(trivial_growth(p.integrated.window));
                }
                Ok(integrated_growth(
                    &self.f,
                    self.u,
                    p.integrated.samples,
                    p.integrated.window,
                    p.n_settle,
                    self.seed("integrated"),
                )?)
            })
            .as_ref()
            .map_err(Clone::clone)
    }

    fn family(&self, family: DiskFamily) -> Outcome<&DiskSample> {
        let cell = match family {
            DiskFamily::Leaf => &self.leaf,
            DiskFamily::Transverse => &self.transverse,
        };
        cell.get_or_init(|| {
            let label = match family {
                DiskFamily::Leaf => "leaf",
                DiskFamily::Transverse => "transverse",
            };
            let mut params = self.cfg.estimators.families.clone();
            params.n_settle = self.cfg.estimators.n_settle;
            Ok(sample_disk_family(&self.f, self.u, family, &params, self.seed(label))?)
        })
        .as_ref()
        .map_err(Clone::clone)
    }

    /// The five growth estimates in [`Estimator::ALL`] order.
    fn five(&self) -> Outcome<Vec<GrowthEstimate>> {
        if self.u == 0 {
            return Err(Error::Precondition("no unstable bundle (u = 0)".into()).into());
        }
        let mut out = vec![self.integrated()?.clone()];
        for family in [DiskFamily::Leaf, DiskFamily::Transverse] {
            let s = self.family(family)?;
            for mode in [FamilyMode::PerDisk, FamilyMode::PerNSup] {
                out.push(s.estimate(mode)?);
            }
        }
        Ok(out)
    }

    fn entropy(&self) -> Outcome<&EntropyEstimate> {
        self.entropy
            .get_or_init(|| {
                let p = &self.cfg.estimators.entropy;
                let sampler = MeasureSampler {
                    kind: p.sampler,
                    burn_in: p.burn_in,
                    samples: p.samples,
                    seed: self.seed("entropy"),
                };
                Ok(katok_entropy(&self.f, &sampler, &p.ladder, p.n_range, p.saturation)?)
            })
            .as_ref()
            .map_err(Clone::clone)
    }

    /// `λ⁺` of `E^cs` averaged over an orbit sample; for `u = 0` the whole
    /// tangent bundle is centre-stable and the top Lyapunov exponent is used.
    fn exponent(&self) -> Outcome<&ExponentAverage> {
        self.exponent
            .get_or_init(|| {
                let p = &self.cfg.estimators.exponent;
                let seed = self.seed("exponent");
                let pts = uniform_sample(self.f.dim(), p.samples, seed);
                let (f, u, n_settle) = (&self.f, self.u, self.cfg.estimators.n_settle);
                let vals = par::map_indexed(p.samples, |i| -> Result<f64> {
                    if u == 0 {
                        let s = lyapunov_spectrum(f, &pts[i], p.steps)?;
                        return Ok(*s.exponents.last().expect("nonempty spectrum"));
                    }
                    cs_top_exponent(f, &pts[i], p.steps, u, n_settle, rng::for_index(seed, i))
                        .map_err(|e| match e {
                            Error::Unconverged { residual, .. } => Error::Unconverged { index: i, residual },
                            e => e,
                        })
                });
                let vals: Vec<f64> = vals.into_iter().collect::<Result<_>>()?;
                let mean = vals.iter().sum::<f64>() / vals.len() as f64;
                Ok(ExponentAverage {
                    mean,
                    min: vals.iter().copied().fold(f64::INFINITY, f64::min),
                    max: vals.iter().copied().fold(f64::NEG_INFINITY, f64::max),
                    samples: vals.len(),
                    steps: p.steps,
                })
            })
            .as_ref()
            .map_err(Clone::clone)
    }

    /// Integrated growth of the unstable bundle of `f⁻¹`, whose rank is the
    /// number of contracting eigenvalues of the linear part.
    fn inverse_integrated(&self) -> Outcome<&GrowthEstimate> {
        self.inverse_integrated
            .get_or_init(|| {
                let p = &self.cfg.estimators;
                let s = self.linear.stable;
                if s == 0 {
                    return Ok(trivial_growth(p.integrated.window));
                }
                let inv = self.f.inverse_map()?;
                Ok(integrated_growth(
                    &inv,
                    s,
                    p.integrated.samples,
                    p.integrated.window,
                    p.n_settle,
                    self.seed("inverse_integrated"),
                )?)
            })
            .as_ref()
            .map_err(Clone::clone)
    }

    fn summary(&self) -> SystemSummary {
        SystemSummary {
            kind: match self.f.kind() {
                MapKind::Linear => "linear".into(),
                MapKind::PerturbedLinear => "perturbed_linear".into(),
            },
            dimension: self.f.dim(),
            c1_bound: self.f.c1_bound(),
            unstable_dimension: self.u,
            linear_part: self.linear.clone(),
        }
    }

    fn estimates(&self) -> Estimates {
        let mut e = Estimates::default();
        if let Some(Ok(g)) = self.integrated.get() {
            e.growth.push(g.clone());
        }
        for (cell, modes) in [(&self.leaf, [FamilyMode::PerDisk, FamilyMode::PerNSup]), (&self.transverse, [FamilyMode::PerDisk, FamilyMode::PerNSup])] {
            if let Some(Ok(s)) = cell.get() {
                for m in modes {
                    if let Ok(g) = s.estimate(m) {
                        e.growth.push(g);
                    }
                }
            }
        }
        e.inverse_integrated = self.inverse_integrated.get().and_then(|r| r.as_ref().ok().cloned());
        e.entropy = self.entropy.get().and_then(|r| r.as_ref().ok().cloned());
        e.cs_top_exponent = self.exponent.get().and_then(|r| r.as_ref().ok().cloned());
        e.boundary_ratio = self.boundary.get().and_then(|r| r.as_ref().ok().cloned());
        if self.u > 0 {
            e.cohomology = crate::cohomology::theorem2_rhs(self.f.matrix(), self.u).ok();
            e.certificate = crate::cohomology::form_certificate(self.f.matrix(), self.u).ok();
        }
        e
    }
}

fn trivial_growth(window: (usize, usize)) -> GrowthEstimate {
    GrowthEstimate {
        estimator: Estimator::VBarU,
        series: (0..=window.1).map(|n| (n, 0.0)).collect(),
        rate: 0.0,
        residual: 0.0,
        window,
        sample_size: 0,
        unconverged: 0,
        converged: true,
        notes: vec!["no expanding bundle: the volume factor of a 0-plane is 1".into()],
    }
}

fn panic_message(p: Box<dyn std::any::Any + Send>) -> String {
    if let Some(s) = p.downcast_ref::<&str>() {
        (*s).to_string()
    } else if let Some(s) = p.downcast_ref::<String>() {
        s.clone()
    } else {
        "panic with non-string payload".into()
    }
}

/// Runs the configured checks in order. A failing or panicking check is
/// recorded and the remaining checks still run.
pub fn run_campaign(cfg: &CampaignConfig) -> Result<VerificationReport> {
    cfg.validate()?;
    let started = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(0.0);
    let t0 = Instant::now();
    let ctx = Context::new(cfg)?;
    let mut timing = Timing { started_unix_seconds: started, ..Timing::default() };
    let mut records = Vec::with_capacity(cfg.checks.len());
    for &name in &cfg.checks {
        let t = Instant::now();
        let record = match catch_unwind(AssertUnwindSafe(|| checks::run(&ctx, name))) {
            Ok(r) => r,
            Err(p) => {
                let mut r = CheckRecord::new(name);
                r.status = Status::Error;
                r.error = Some(ErrorInfo { code: "panic".into(), message: panic_message(p) });
                r
            }
        };
        timing.checks.insert(name.as_str().to_string(), t.elapsed().as_secs_f64());
        records.push(record);
    }
    let system = ctx.summary();
    let estimates = ctx.estimates();
    timing.total_seconds = t0.elapsed().as_secs_f64();
    Ok(VerificationReport {
        toolkit_version: env!("CARGO_PKG_VERSION").to_string(),
        schema_version: SCHEMA_VERSION,
        config: cfg.clone(),
        system,
        checks: records,
        estimates,
        timing,
    })
}

/// Estimators available to one-off runs outside a campaign.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Invariant {
    /// Full spectrum along one orbit from a seeded point.
    Lyapunov,
    /// The five growth estimates.
    Growth,
    Entropy,
    /// Top exponent of `E^cs`, averaged over an orbit sample.
    Exponent,
    /// Exact right-hand side and form certificate.
    Cohomology,
}

impl Invariant {
    pub const ALL: [Invariant; 5] =
        [Invariant::Lyapunov, Invariant::Growth, Invariant::Entropy, Invariant::Exponent, Invariant::Cohomology];

    pub fn as_str(self) -> &'static str {
        match self {
            Invariant::Lyapunov => "lyapunov",
            Invariant::Growth => "growth",
            Invariant::Entropy => "entropy",
            Invariant::Exponent => "exponent",
            Invariant::Cohomology => "cohomology",
        }
    }

    pub fn parse(s: &str) -> Option<Invariant> {
        Invariant::ALL.into_iter().find(|i| i.as_str() == s)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InvariantReport {
    pub toolkit_version: String,
    pub seed: u64,
    pub system: SystemSummary,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lyapunov: Option<LyapunovSpectrum>,
    pub estimates: Estimates,
    /// Requested estimators that failed, keyed by name.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub errors: BTreeMap<String, ErrorInfo>,
}

/// Runs the requested estimators with the parameters of `cfg`; the check
/// list of `cfg` is ignored. An estimator that fails is recorded in
/// `errors` and the others still run.
pub fn estimate_invariants(cfg: &CampaignConfig, which: &[Invariant], lyapunov_steps: usize) -> Result<InvariantReport> {
    cfg.validate()?;
    let ctx = Context::new(cfg)?;
    let mut lyapunov = None;
    let mut errors = BTreeMap::new();
    for &inv in which {
        let outcome: Outcome<()> = match inv {
            Invariant::Lyapunov => {
                let x = uniform_sample(ctx.f.dim(), 1, ctx.seed("lyapunov")).swap_remove(0);
                lyapunov_spectrum(&ctx.f, &x, lyapunov_steps).map(|s| lyapunov = Some(s)).map_err(Failure::from)
            }
            Invariant::Growth => ctx.five().map(drop),
            Invariant::Entropy => ctx.entropy().map(drop),
            Invariant::Exponent => ctx.exponent().map(drop),
            Invariant::Cohomology => Ok(()),
        };
        if let Err(f) = outcome {
            errors.insert(inv.as_str().to_string(), f.info);
        }
    }
    let mut estimates = ctx.estimates();
    if !which.contains(&Invariant::Cohomology) {
        estimates.cohomology = None;
        estimates.certificate = None;
    }
    Ok(InvariantReport {
        toolkit_version: env!("CARGO_PKG_VERSION").to_string(),
        seed: cfg.seed,
        system: ctx.summary(),
        lyapunov,
        estimates,
        errors,
    })
}
