//! Growth rates over finite random disk families.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::disk::{cone_angle, make_leaf_disk, make_transverse_disk, DiskFamily};
use super::{fit_rate, require_domination, uniform_sample, Estimator, GrowthEstimate, RateFit};
use crate::bundles::DEFAULT_SETTLE;
use crate::system::TorusDiffeo;
use crate::{par, rng, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FamilyMode {
    /// Fit each disk, then take the largest rate.
    PerDisk,
    /// Take the largest log volume at each `n`, then fit.
    PerNSup,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FamilyParams {
    pub disks: usize,
    pub window: (usize, usize),
    pub leaf_radius: f64,
    pub pre_iterates: usize,
    /// Transverse radii are uniform in `[min_radius, 1]`.
    pub min_radius: f64,
    pub tol: f64,
    pub n_settle: usize,
    /// Cone half-angle for transverse tilts; estimated when absent.
    pub cone: Option<f64>,
    pub cone_sample: usize,
}

impl Default for FamilyParams {
    fn default() -> Self {
        FamilyParams {
            disks: 50,
            window: super::DEFAULT_WINDOW,
            leaf_radius: 1.0,
            pre_iterates: 20,
            min_radius: 0.25,
            tol: super::DEFAULT_REFINE_TOL,
            n_settle: DEFAULT_SETTLE,
            cone: None,
            cone_sample: 1000,
        }
    }
}

/// Log volume series of every disk in one sampled family.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DiskSample {
    pub family: DiskFamily,
    pub window: (usize, usize),
    /// `series[k][n] = log vol f^n(D_k)`.
    pub series: Vec<Vec<f64>>,
    pub tilts: Vec<f64>,
    pub radii: Vec<f64>,
    pub cone: Option<f64>,
    /// Leaf disks dropped because their tilt exceeded the tangency bound.
    pub demoted: usize,
    /// Parameter samples used across all disks.
    pub quadrature_points: usize,
}

impl DiskSample {
    pub fn fits(&self) -> Result<Vec<RateFit>> {
        self.series.iter().map(|s| fit_rate(&indexed(s), self.window)).collect()
    }

    pub fn estimate(&self, mode: FamilyMode) -> Result<GrowthEstimate> {
        let estimator = match (self.family, mode) {
            (DiskFamily::Leaf, FamilyMode::PerDisk) => Estimator::VU,
            (DiskFamily::Leaf, FamilyMode::PerNSup) => Estimator::VUA,
            (DiskFamily::Transverse, FamilyMode::PerDisk) => Estimator::VTildeU,
            (DiskFamily::Transverse, FamilyMode::PerNSup) => Estimator::VTildeUA,
        };
        let (series, fit) = match mode {
            FamilyMode::PerDisk => {
                let fits = self.fits()?;
                let best = (0..fits.len())
                    .max_by(|&a, &b| fits[a].rate.total_cmp(&fits[b].rate).then(b.cmp(&a)))
                    .ok_or_else(|| Error::Precondition("empty disk family".into()))?;
                (indexed(&self.series[best]), fits[best])
            }
            FamilyMode::PerNSup => {
                let len = self.series.iter().map(Vec::len).min().unwrap_or(0);
                let sup: Vec<f64> = (0..len)
                    .map(|n| self.series.iter().map(|s| s[n]).fold(f64::NEG_INFINITY, f64::max))
                    .collect();
                let fit = fit_rate(&indexed(&sup), self.window)?;
                (indexed(&sup), fit)
            }
        };
        let mut notes = vec![format!(
            "maximum over {} sampled disks; a lower bound for the supremum over the family",
            self.series.len()
        )];
        if self.demoted > 0 {
            notes.push(format!("{} leaf disks exceeded the tangency bound and were dropped", self.demoted));
        }
        Ok(GrowthEstimate {
            estimator,
            series,
            rate: fit.rate,
            residual: fit.residual,
            window: self.window,
            sample_size: self.series.len(),
            unconverged: 0,
            converged: true,
            notes,
        })
    }
}

fn indexed(values: &[f64]) -> Vec<(usize, f64)> {
    values.iter().copied().enumerate().collect()
}

/// Builds `params.disks` disks of one family at uniform centres and computes
/// their log volume series up to `params.window.1`.
pub fn sample_disk_family<M: TorusDiffeo + ?Sized>(
    f: &M,
    u: usize,
    family: DiskFamily,
    params: &FamilyParams,
    seed: u64,
) -> Result<DiskSample> {
    if params.disks == 0 {
        return Err(Error::Precondition("disk family needs at least one disk".into()));
    }
    if !(params.min_radius > 0.0 && params.min_radius <= 1.0) {
        return Err(Error::Precondition("min_radius must lie in (0, 1]".into()));
    }
    require_domination(f, u, params.n_settle, seed)?;
    let n_max = params.window.1;
    let centers = uniform_sample(f.dim(), params.disks, rng::derive(seed, "disks"));
    let cone = match family {
        DiskFamily::Leaf => None,
        DiskFamily::Transverse => Some(match params.cone {
            Some(c) => c,
            None => cone_angle(f, u, params.cone_sample, params.n_settle, rng::derive(seed, "cone"))?,
        }),
    };
    let shape_seed = rng::derive(seed, "shape");
    let per_disk = par::map_indexed(params.disks, |k| -> Result<(Vec<f64>, f64, f64, bool, usize)> {
        let disk_seed = rng::for_index(seed, k);
        let mut disk = match family {
            DiskFamily::Leaf => make_leaf_disk(
                f,
                &centers[k],
                u,
                params.leaf_radius,
                params.pre_iterates,
                params.n_settle,
                disk_seed,
            )?,
            DiskFamily::Transverse => {
                let cone = cone.expect("transverse family has a cone");
                let mut r = rng::stream(rng::for_index(shape_seed, k), 0);
                let tilt = r.random::<f64>() * cone;
                let radius = params.min_radius + (1.0 - params.min_radius) * r.random::<f64>();
                make_transverse_disk(f, &centers[k], u, radius, tilt, cone, params.n_settle, disk_seed)?
            }
        };
        disk.refine(f, n_max, params.tol)?;
        let series = disk.log_volume_series(f, n_max)?;
        Ok((series, disk.spec.tilt, disk.spec.radius, disk.spec.demoted, disk.sample_count()))
    });
    let mut out = DiskSample {
        family,
        window: params.window,
        series: Vec::new(),
        tilts: Vec::new(),
        radii: Vec::new(),
        cone,
        demoted: 0,
        quadrature_points: 0,
    };
    for r in per_disk {
        let (series, tilt, radius, demoted, points) = r?;
        out.quadrature_points += points;
        if demoted {
            out.demoted += 1;
            continue;
        }
        out.series.push(series);
        out.tilts.push(tilt);
        out.radii.push(radius);
    }
    if out.series.is_empty() {
        return Err(Error::Precondition("every leaf disk exceeded the tangency bound".into()));
    }
    Ok(out)
}

pub fn growth_rate_family<M: TorusDiffeo + ?Sized>(
    f: &M,
    u: usize,
    family: DiskFamily,
    mode: FamilyMode,
    params: &FamilyParams,
    seed: u64,
) -> Result<GrowthEstimate> {
    sample_disk_family(f, u, family, params, seed)?.estimate(mode)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::system::make_linear_toral;

    #[test]
    fn cat_map_families() {
        let cat = make_linear_toral(vec![vec![2, 1], vec![1, 1]]).unwrap();
        let params = FamilyParams { disks: 6, cone_sample: 64, ..FamilyParams::default() };
        for family in [DiskFamily::Leaf, DiskFamily::Transverse] {
            let s = sample_disk_family(&cat, 1, family, &params, 11).unwrap();
            for mode in [FamilyMode::PerDisk, FamilyMode::PerNSup] {
                let g = s.estimate(mode).unwrap();
                assert!((g.rate - 0.962_423_650_119_206_9).abs() < 0.01, "{family:?} {mode:?} {}", g.rate);
            }
        }
        let zero = FamilyParams { disks: 0, ..params };
        assert!(growth_rate_family(&cat, 1, DiskFamily::Leaf, FamilyMode::PerDisk, &zero, 1).is_err());
    }
}
