//! Volume growth of the unstable bundle and of disk families.
//!
//! Five rates are estimated:
//!
//! | tag           | quantity                                                    |
//! |---------------|-------------------------------------------------------------|
//! | `v_bar_u`     | `(1/n) log ∫ ‖ΛᵘDf^n|E^u‖ dLeb`                             |
//! | `v_u`         | sup over leaf disks of the growth rate of `vol f^n(D)`      |
//! | `v_u_a`       | growth rate of the sup over leaf disks of `vol f^n(D)`      |
//! | `v_tilde_u`   | as `v_u`, over disks transverse to `E^cs`                   |
//! | `v_tilde_u_a` | as `v_u_a`, over disks transverse to `E^cs`                 |
//!
//! Limits superior are replaced by least-squares slopes over a finite window
//! and suprema by maxima over a finite random family, so the family rates
//! are lower bounds for the quantities they name.

mod disk;
mod family;

pub use disk::{
    boundary_ratio, cone_angle, disk_volume, make_leaf_disk, make_transverse_disk, BoundaryRatio,
    DiskFamily, DiskSpec, ParamDisk, RefineReport, DEFAULT_REFINE_TOL, REFINEMENT_CAP,
};
pub use family::{growth_rate_family, sample_disk_family, DiskSample, FamilyMode, FamilyParams};

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::bundles::{check_domination, estimate_unstable, DEFAULT_SETTLE};
use crate::linalg::{push_with_log_volume, Subspace};
use crate::system::TorusDiffeo;
use crate::{par, rng, Error, Result};

/// Default fit window `[n_min, n_max]`.
pub const DEFAULT_WINDOW: (usize, usize) = (5, 25);

/// Sample points used for the domination precondition.
pub const DOMINATION_SAMPLE: usize = 32;

/// Largest tolerated fraction of unconverged bundle estimates.
pub const MAX_UNCONVERGED_FRACTION: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Estimator {
    VBarU,
    VU,
    VUA,
    VTildeU,
    VTildeUA,
}

impl Estimator {
    pub const ALL: [Estimator; 5] =
        [Estimator::VBarU, Estimator::VU, Estimator::VUA, Estimator::VTildeU, Estimator::VTildeUA];

    pub fn tag(self) -> &'static str {
        match self {
            Estimator::VBarU => "v_bar_u",
            Estimator::VU => "v_u",
            Estimator::VUA => "v_u_a",
            Estimator::VTildeU => "v_tilde_u",
            Estimator::VTildeUA => "v_tilde_u_a",
        }
    }
}

/// Least-squares line through `(n, value)` over a window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub rate: f64,
    pub intercept: f64,
    /// Max absolute deviation of the line from the data on the window.
    pub residual: f64,
    pub points: usize,
}

pub fn fit_rate(series: &[(usize, f64)], window: (usize, usize)) -> Result<RateFit> {
    let pts: Vec<(f64, f64)> = series
        .iter()
        .filter(|(n, _)| *n >= window.0 && *n <= window.1)
        .map(|&(n, v)| (n as f64, v))
        .collect();
    if pts.len() < 3 {
        return Err(Error::FitWindow(pts.len()));
    }
    if pts.iter().any(|(_, v)| !v.is_finite()) {
        return Err(Error::Degenerate("non-finite value in fit window".into()));
    }
    let m = pts.len() as f64;
    let xm = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let ym = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = pts.iter().map(|p| (p.0 - xm).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - xm) * (p.1 - ym)).sum();
    let rate = sxy / sxx;
    let intercept = ym - rate * xm;
    let residual = pts.iter().map(|p| (intercept + rate * p.0 - p.1).abs()).fold(0.0, f64::max);
    Ok(RateFit { rate, intercept, residual, points: pts.len() })
}

/// A `u`-frame carried along an orbit with its accumulated log volume.
#[derive(Debug, Clone)]
pub struct CocycleState {
    pub point: Vec<f64>,
    pub frame: Subspace,
    pub log_volume: f64,
    pub steps: usize,
}

impl CocycleState {
    pub fn new(point: Vec<f64>, frame: Subspace) -> Self {
        CocycleState { point, frame, log_volume: 0.0, steps: 0 }
    }

    pub fn advance<M: TorusDiffeo + ?Sized>(&mut self, f: &M, steps: usize) -> Result<()> {
        for _ in 0..steps {
            let (frame, lv) = push_with_log_volume(&f.jacobian(&self.point), &self.frame)?;
            self.frame = frame;
            self.log_volume += lv;
            self.point = f.step(&self.point);
            self.steps += 1;
        }
        Ok(())
    }
}

/// `log ‖ΛᵘDf^n(x)|F‖`, accumulated one step at a time.
pub fn log_cocycle_volume<M: TorusDiffeo + ?Sized>(
    f: &M,
    x: &[f64],
    frame: &Subspace,
    n: usize,
) -> Result<f64> {
    let mut s = CocycleState::new(x.to_vec(), frame.clone());
    s.advance(f, n)?;
    Ok(s.log_volume)
}

/// `[log ‖ΛᵘDf^k(x)|F‖ for k in 0..=n]`.
pub fn log_cocycle_volume_series<M: TorusDiffeo + ?Sized>(
    f: &M,
    x: &[f64],
    frame: &Subspace,
    n: usize,
) -> Result<Vec<f64>> {
    let mut s = CocycleState::new(x.to_vec(), frame.clone());
    let mut out = Vec::with_capacity(n + 1);
    out.push(0.0);
    for _ in 0..n {
        s.advance(f, 1)?;
        out.push(s.log_volume);
    }
    Ok(out)
}

pub(crate) fn log_sum_exp(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let max = values.clone().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    max + values.map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// A fitted growth rate with the data behind it.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GrowthEstimate {
    pub estimator: Estimator,
    /// `(n, log value)`.
    pub series: Vec<(usize, f64)>,
    pub rate: f64,
    pub residual: f64,
    pub window: (usize, usize),
    /// Number of samples or disks behind the estimate.
    pub sample_size: usize,
    pub unconverged: usize,
    pub converged: bool,
    pub notes: Vec<String>,
}

impl GrowthEstimate {
    /// Rows `estimator,n,log_value`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("estimator,n,log_value\n");
        for (n, v) in &self.series {
            let _ = writeln!(s, "{},{},{:.17e}", self.estimator.tag(), n, v);
        }
        s
    }
}

fn check_window(window: (usize, usize)) -> Result<()> {
    if window.1 < window.0 + 2 {
        return Err(Error::FitWindow(window.1.saturating_sub(window.0) + 1));
    }
    Ok(())
}

/// Uniform sample points on `T^d`, one seeded stream per index.
pub fn uniform_sample(d: usize, count: usize, seed: u64) -> Vec<Vec<f64>> {
    (0..count).map(|i| rng::uniform_point(&mut rng::stream(rng::for_index(seed, i), 2), d)).collect()
}

/// Fails unless the splitting is dominated on a small uniform sample.
///
/// A negative verdict built on unconverged frames is retried with doubled
/// settling lengths, up to `4·max(n_settle, DEFAULT_SETTLE)`, before it is
/// accepted.
pub fn require_domination<M: TorusDiffeo + ?Sized>(
    f: &M,
    u: usize,
    n_settle: usize,
    seed: u64,
) -> Result<()> {
    let sample = uniform_sample(f.dim(), DOMINATION_SAMPLE, rng::derive(seed, "domination"));
    let mut dom = check_domination(f, &sample, u, n_settle, seed)?;
    let (mut settle, limit) = (n_settle, 4 * n_settle.max(DEFAULT_SETTLE));
    while !dom.dominated && !dom.unconverged.is_empty() && settle < limit {
        settle = (2 * settle).min(limit);
        dom = check_domination(f, &sample, u, settle, seed)?;
    }
    if !dom.dominated {
        return Err(Error::Precondition(format!(
            "splitting with u = {u} is not dominated (margin {:.6})",
            dom.margin
        )));
    }
    Ok(())
}

/// Monte-Carlo estimate of the integrated volume growth of `E^u`.
///
/// For every `n ≤ window.1` the integral is the log-sum-exp of the per-sample
/// log volumes minus `log N`.
pub fn integrated_growth<M: TorusDiffeo + ?Sized>(
    f: &M,
    u: usize,
    n_samples: usize,
    window: (usize, usize),
    n_settle: usize,
    seed: u64,
) -> Result<GrowthEstimate> {
    check_window(window)?;
    if n_samples == 0 {
        return Err(Error::Precondition("integrated growth needs at least one sample".into()));
    }
    require_domination(f, u, n_settle, seed)?;
    let points = uniform_sample(f.dim(), n_samples, rng::derive(seed, "integrated"));
    let n_max = window.1;
    let per_sample = par::map_indexed(n_samples, |i| -> Result<(Vec<f64>, bool)> {
        let e = estimate_unstable(f, &points[i], u, n_settle, rng::for_index(seed, i))?;
        let series = log_cocycle_volume_series(f, &e.base, &e.subspace, n_max)?;
        Ok((series, e.converged))
    });
    let mut rows = Vec::with_capacity(n_samples);
    let mut unconverged = 0;
    for r in per_sample {
        let (series, converged) = r?;
        if !converged {
            unconverged += 1;
        }
        rows.push(series);
    }
    if unconverged as f64 > MAX_UNCONVERGED_FRACTION * n_samples as f64 {
        return Err(Error::TooManyUnconverged { unconverged, total: n_samples });
    }
    let log_n = (n_samples as f64).ln();
    let series: Vec<(usize, f64)> =
        (0..=n_max).map(|n| (n, log_sum_exp(rows.iter().map(|r| r[n])) - log_n)).collect();
    let fit = fit_rate(&series, window)?;
    let mut notes = Vec::new();
    if !f.has_inverse() {
        notes.push(
            "no inverse: each sample is replaced by its forward image after settling".to_string(),
        );
    }
    Ok(GrowthEstimate {
        estimator: Estimator::VBarU,
        series,
        rate: fit.rate,
        residual: fit.residual,
        window,
        sample_size: n_samples,
        unconverged,
        converged: unconverged == 0,
        notes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::system::make_linear_toral;

    const LOG_GOLDEN_SQ: f64 = 0.962_423_650_119_206_9;

    #[test]
    fn fit_examples() {
        let line: Vec<_> = (0..30).map(|n| (n, 0.9624 * n as f64)).collect();
        let f = fit_rate(&line, (5, 25)).unwrap();
        assert!((f.rate - 0.9624).abs() < 1e-12 && f.residual < 1e-12);
        let flat: Vec<_> = (0..30).map(|n| (n, 3.0)).collect();
        let f = fit_rate(&flat, (5, 25)).unwrap();
        assert!(f.rate.abs() < 1e-14 && f.residual < 1e-12);
        let wavy: Vec<_> = (0..30).map(|n| (n, 0.9 * n as f64 + (n as f64).sin())).collect();
        let f = fit_rate(&wavy, (5, 25)).unwrap();
        // Least squares leaves a max deviation of 1.0388 on this window.
        assert!((f.rate - 0.9).abs() < 0.02);
        assert!((f.residual - 1.0388).abs() < 1e-3, "{}", f.residual);
        assert!(matches!(fit_rate(&line, (5, 6)), Err(Error::FitWindow(2))));
    }

    #[test]
    fn cocycle_volume_examples() {
        let cat = make_linear_toral(vec![vec![2, 1], vec![1, 1]]).unwrap();
        let eu = estimate_unstable(&cat, &[0.2, 0.7], 1, 60, 1).unwrap();
        let v = log_cocycle_volume(&cat, &eu.base, &eu.subspace, 10).unwrap();
        assert!((v - 10.0 * LOG_GOLDEN_SQ).abs() < 1e-9);
        let id = make_linear_toral(vec![vec![1, 0], vec![0, 1]]).unwrap();
        let e1 = Subspace::coordinate(2, &[0]);
        assert_eq!(log_cocycle_volume(&id, &[0.1, 0.2], &e1, 40).unwrap(), 0.0);
    }

    #[test]
    fn integrated_on_cat_map() {
        let cat = make_linear_toral(vec![vec![2, 1], vec![1, 1]]).unwrap();
        let g = integrated_growth(&cat, 1, 200, (5, 25), 60, 3).unwrap();
        assert!((g.rate - LOG_GOLDEN_SQ).abs() < 0.005, "{}", g.rate);
        assert!(g.residual < 0.01);
        assert!(g.converged);
    }

    #[test]
    fn integrated_rejects_rotation() {
        let rot = make_linear_toral(vec![vec![0, -1], vec![1, 0]]).unwrap();
        assert!(matches!(integrated_growth(&rot, 1, 50, (5, 25), 60, 3), Err(Error::Precondition(_))));
    }
}
