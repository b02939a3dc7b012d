//! Iterated disks and their volumes.
//!
//! A disk is stored as a flat seed `y + ρ·Q·B^u` together with a number of
//! pre-iterates `m`; the disk itself is `f^m` of the seed. The volume of
//! `f^n(D)` is the integral of `‖ΛᵘDf^{m+n}|T‖` over the seed, evaluated by
//! a midpoint rule on an adaptively refined cell set in parameter space.
//! Every parameter point carries its own cocycle state, so deeper iterates
//! extend the cache and refinement only adds points.

use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};

use super::{fit_rate, log_cocycle_volume, log_sum_exp, CocycleState};
use crate::bundles::{backward_orbit, estimate_splitting, estimate_unstable, SplittingFrame};
use crate::linalg::{minimal_angle, subspace_angle, Mat, Subspace};
use crate::system::{reduce, TorusDiffeo};
use crate::{par, rng, Error, Result};

/// Relative change in the total below which refinement stops.
pub const DEFAULT_REFINE_TOL: f64 = 1e-2;

/// Hard limit on parameter samples per disk.
pub const REFINEMENT_CAP: usize = 1_000_000;

/// Leaf disks whose tangent planes deviate from `E^u` by more than this are
/// demoted to the transverse family.
pub const LEAF_TILT_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiskFamily {
    Leaf,
    Transverse,
}

/// Flat disk whose `pre_iterates`-th image is the disk of interest.
#[derive(Debug, Clone)]
pub struct SeedDisk {
    pub point: Vec<f64>,
    pub frame: Subspace,
    pub radius: f64,
    pub pre_iterates: usize,
}

#[derive(Debug, Clone)]
pub struct DiskSpec {
    pub center: Vec<f64>,
    pub tangent: Subspace,
    /// Radius in induced length (`u = 1`) or area-equivalent radius (`u = 2`).
    pub radius: f64,
    pub family: DiskFamily,
    /// Largest angle between the disk's tangent planes and `E^u`, measured
    /// at the centre and at boundary points.
    pub tilt: f64,
    /// A leaf disk was requested but the tilt exceeded [`LEAF_TILT_TOL`].
    pub demoted: bool,
    pub seed: SeedDisk,
}

impl DiskSpec {
    pub fn rank(&self) -> usize {
        self.tangent.rank()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Domain {
    /// `t ∈ [−1, 1]`.
    Segment,
    /// `(s, θ) ∈ [0, 1] × [0, 2π)` with `p = √s·(cos θ, sin θ)`; area
    /// element `½ ds dθ`.
    Disk,
    /// `θ ∈ [0, 2π)` on the unit circle.
    Circle,
}

impl Domain {
    fn splits(self) -> usize {
        match self {
            Domain::Disk => 9,
            _ => 3,
        }
    }

    fn initial_cells(self) -> Vec<([f64; 2], [f64; 2])> {
        let line = |n: usize, a: f64, b: f64| {
            (0..n)
                .map(|i| {
                    let h = (b - a) / n as f64;
                    ([a + i as f64 * h, 0.0], [a + (i + 1) as f64 * h, 0.0])
                })
                .collect::<Vec<_>>()
        };
        match self {
            Domain::Segment => line(24, -1.0, 1.0),
            Domain::Circle => line(48, 0.0, TAU),
            Domain::Disk => {
                let (ns, nt) = (4, 12);
                let mut out = Vec::with_capacity(ns * nt);
                for i in 0..ns {
                    for j in 0..nt {
                        let (s0, s1) = (i as f64 / ns as f64, (i + 1) as f64 / ns as f64);
                        let (t0, t1) = (TAU * j as f64 / nt as f64, TAU * (j + 1) as f64 / nt as f64);
                        out.push(([s0, t0], [s1, t1]));
                    }
                }
                out
            }
        }
    }

    fn measure(self, lo: [f64; 2], hi: [f64; 2]) -> f64 {
        match self {
            Domain::Disk => 0.5 * (hi[0] - lo[0]) * (hi[1] - lo[1]),
            _ => hi[0] - lo[0],
        }
    }

    /// Power of the seed radius scaling the measure.
    fn radius_power(self) -> i32 {
        match self {
            Domain::Disk => 2,
            _ => 1,
        }
    }

    fn children(self, lo: [f64; 2], hi: [f64; 2]) -> Vec<([f64; 2], [f64; 2])> {
        let third = |a: f64, b: f64, i: usize| {
            let h = (b - a) / 3.0;
            (a + i as f64 * h, a + (i + 1) as f64 * h)
        };
        match self {
            Domain::Disk => {
                let mut out = Vec::with_capacity(9);
                for i in 0..3 {
                    for j in 0..3 {
                        let (s0, s1) = third(lo[0], hi[0], i);
                        let (t0, t1) = third(lo[1], hi[1], j);
                        out.push(([s0, t0], [s1, t1]));
                    }
                }
                out
            }
            _ => (0..3)
                .map(|i| {
                    let (a, b) = third(lo[0], hi[0], i);
                    ([a, 0.0], [b, 0.0])
                })
                .collect(),
        }
    }

    /// Index among [`Domain::children`] of the child sharing the parent's
    /// midpoint.
    fn center_child(self) -> usize {
        match self {
            Domain::Disk => 4,
            _ => 1,
        }
    }
}

#[derive(Debug, Clone)]
struct Cell {
    lo: [f64; 2],
    hi: [f64; 2],
    sample: usize,
    /// Change attributed to this cell by its last split; infinite if never
    /// checked.
    err: f64,
}

#[derive(Debug, Clone)]
struct Sample {
    state: CocycleState,
    /// `logs[n]` is the log volume factor after `pre_iterates + n` steps.
    logs: Vec<f64>,
}

impl Sample {
    fn extend<M: TorusDiffeo + ?Sized>(&mut self, f: &M, pre: usize, depth: usize) -> Result<()> {
        if self.logs.is_empty() {
            self.state.advance(f, pre)?;
            self.logs.push(self.state.log_volume);
        }
        while self.logs.len() <= depth {
            self.state.advance(f, 1)?;
            self.logs.push(self.state.log_volume);
        }
        Ok(())
    }
}

/// Outcome of an adaptive refinement pass.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RefineReport {
    pub sweeps: usize,
    pub samples: usize,
    /// Relative change of the total in the last sweep.
    pub achieved_tol: f64,
    pub log_value: f64,
}

#[derive(Debug, Clone)]
struct Quadrature {
    domain: Domain,
    seed: SeedDisk,
    cells: Vec<Cell>,
    samples: Vec<Sample>,
    depth: usize,
    verified: Option<(usize, f64)>,
}

impl Quadrature {
    fn new(domain: Domain, seed: SeedDisk) -> Self {
        let cells: Vec<Cell> = domain
            .initial_cells()
            .into_iter()
            .enumerate()
            .map(|(i, (lo, hi))| Cell { lo, hi, sample: i, err: f64::INFINITY })
            .collect();
        let samples = cells.iter().map(|c| Self::make_sample(domain, &seed, c.lo, c.hi)).collect();
        Quadrature { domain, seed, cells, samples, depth: 0, verified: None }
    }

    fn make_sample(domain: Domain, seed: &SeedDisk, lo: [f64; 2], hi: [f64; 2]) -> Sample {
        let q = seed.frame.frame();
        let col = |j: usize| q.column(j).into_owned();
        let mid = [(lo[0] + hi[0]) / 2.0, (lo[1] + hi[1]) / 2.0];
        let (offset, frame) = match domain {
            Domain::Segment => (col(0) * mid[0], seed.frame.clone()),
            Domain::Disk => {
                let r = mid[0].sqrt();
                (col(0) * (r * mid[1].cos()) + col(1) * (r * mid[1].sin()), seed.frame.clone())
            }
            Domain::Circle => {
                let (s, c) = mid[0].sin_cos();
                let tangent = col(0) * (-s) + col(1) * c;
                let frame = Subspace::from_orthonormal(Mat::from_column_slice(
                    tangent.len(),
                    1,
                    tangent.as_slice(),
                ));
                (col(0) * c + col(1) * s, frame)
            }
        };
        let point = seed.point.iter().zip(offset.iter()).map(|(y, o)| reduce(y + seed.radius * o)).collect();
        Sample { state: CocycleState::new(point, frame), logs: Vec::new() }
    }

    fn log_weight(&self, c: &Cell) -> f64 {
        (self.domain.measure(c.lo, c.hi) * self.seed.radius.powi(self.domain.radius_power())).ln()
    }

    fn total_weight(&self) -> f64 {
        self.cells.iter().map(|c| self.log_weight(c).exp()).sum()
    }

    fn ensure_depth<M: TorusDiffeo + ?Sized>(&mut self, f: &M, depth: usize) -> Result<()> {
        if depth > self.depth || self.samples.iter().any(|s| s.logs.is_empty()) {
            let pre = self.seed.pre_iterates;
            let target = depth.max(self.depth);
            par::try_for_each_mut(&mut self.samples, |s| s.extend(f, pre, target))?;
            self.depth = target;
        }
        Ok(())
    }

    fn log_integral(&self, n: usize) -> f64 {
        log_sum_exp(self.cells.iter().map(|c| self.log_weight(c) + self.samples[c.sample].logs[n]))
    }

    fn refine<M: TorusDiffeo + ?Sized>(&mut self, f: &M, n: usize, tol: f64) -> Result<RefineReport> {
        if tol.is_nan() || tol <= 0.0 {
            return Err(Error::Precondition("refinement tolerance must be positive".into()));
        }
        self.ensure_depth(f, n)?;
        let mut current = self.log_integral(n);
        if let Some((vn, vtol)) = self.verified {
            if vn == n && vtol <= tol {
                return Ok(RefineReport { sweeps: 0, samples: self.samples.len(), achieved_tol: vtol, log_value: current });
            }
        }
        let mut achieved = f64::INFINITY;
        let mut sweeps = 0;
        if self.verified.is_some_and(|(vn, _)| vn != n) {
            for c in &mut self.cells {
                c.err = f64::INFINITY;
            }
        }
        loop {
            let fresh: Vec<usize> =
                (0..self.cells.len()).filter(|&i| self.cells[i].err.is_infinite()).collect();
            let selected = if !fresh.is_empty() {
                fresh
            } else if achieved <= tol {
                break;
            } else {
                let mut order: Vec<usize> = (0..self.cells.len()).collect();
                order.sort_by(|&a, &b| self.cells[b].err.total_cmp(&self.cells[a].err).then(a.cmp(&b)));
                order.truncate(self.cells.len().div_ceil(2));
                order.sort_unstable();
                order
            };
            let added = selected.len() * (self.domain.splits() - 1);
            if self.samples.len() + added > REFINEMENT_CAP {
                return Err(Error::RefinementCap {
                    cap: REFINEMENT_CAP,
                    partial_log_volume: current,
                    achieved_tol: achieved,
                });
            }
            let first_new = self.samples.len();
            let mut new_samples = Vec::with_capacity(added);
            let mut replacement: Vec<(usize, Vec<Cell>)> = Vec::with_capacity(selected.len());
            for &ci in &selected {
                let parent = self.cells[ci].clone();
                let mut kids = Vec::with_capacity(self.domain.splits());
                for (k, (lo, hi)) in self.domain.children(parent.lo, parent.hi).into_iter().enumerate() {
                    let sample = if k == self.domain.center_child() {
                        parent.sample
                    } else {
                        new_samples.push(Self::make_sample(self.domain, &self.seed, lo, hi));
                        first_new + new_samples.len() - 1
                    };
                    kids.push(Cell { lo, hi, sample, err: 0.0 });
                }
                replacement.push((ci, kids));
            }
            let pre = self.seed.pre_iterates;
            let depth = self.depth;
            par::try_for_each_mut(&mut new_samples, |s| s.extend(f, pre, depth))?;
            self.samples.extend(new_samples);
            let mut next_cells = Vec::with_capacity(self.cells.len() + replacement.len() * self.domain.splits());
            let mut it = replacement.into_iter().peekable();
            for (i, cell) in self.cells.iter().enumerate() {
                match it.peek() {
                    Some((ci, _)) if *ci == i => {
                        let (_, mut kids) = it.next().expect("peeked");
                        let before = (self.log_weight(cell) + self.samples[cell.sample].logs[n] - current).exp();
                        let after: f64 = kids
                            .iter()
                            .map(|k| (self.log_weight(k) + self.samples[k.sample].logs[n] - current).exp())
                            .sum();
                        let share = (after - before).abs() / kids.len() as f64;
                        for k in &mut kids {
                            k.err = share;
                        }
                        next_cells.extend(kids);
                    }
                    _ => next_cells.push(cell.clone()),
                }
            }
            self.cells = next_cells;
            sweeps += 1;
            let next = self.log_integral(n);
            achieved = (next - current).exp_m1().abs();
            current = next;
        }
        self.verified = Some((n, tol));
        Ok(RefineReport { sweeps, samples: self.samples.len(), achieved_tol: achieved, log_value: current })
    }
}

/// A disk with its adaptive parameter quadrature.
#[derive(Debug, Clone)]
pub struct ParamDisk {
    pub spec: DiskSpec,
    quad: Quadrature,
}

impl ParamDisk {
    fn new(spec: DiskSpec) -> Result<Self> {
        let domain = match spec.rank() {
            1 => Domain::Segment,
            2 => Domain::Disk,
            u => return Err(Error::Precondition(format!("disk quadrature supports rank 1 or 2, not {u}"))),
        };
        let quad = Quadrature::new(domain, spec.seed.clone());
        Ok(ParamDisk { spec, quad })
    }

    pub fn sample_count(&self) -> usize {
        self.quad.samples.len()
    }

    /// Sum of the quadrature weights: the volume of the flat seed disk.
    pub fn total_weight(&self) -> f64 {
        self.quad.total_weight()
    }

    /// Refines until the volume of `f^n(D)` is stable to `tol`.
    pub fn refine<M: TorusDiffeo + ?Sized>(&mut self, f: &M, n: usize, tol: f64) -> Result<RefineReport> {
        self.quad.refine(f, n, tol)
    }

    /// `log vol f^k(D)` for `k = 0..=n_max` on the current cells; call
    /// [`ParamDisk::refine`] first.
    pub fn log_volume_series<M: TorusDiffeo + ?Sized>(&mut self, f: &M, n_max: usize) -> Result<Vec<f64>> {
        self.quad.ensure_depth(f, n_max)?;
        Ok((0..=n_max).map(|n| self.quad.log_integral(n)).collect())
    }
}

/// `vol f^n(D)` to relative tolerance `tol`.
pub fn disk_volume<M: TorusDiffeo + ?Sized>(f: &M, disk: &mut ParamDisk, n: usize, tol: f64) -> Result<f64> {
    Ok(disk.refine(f, n, tol)?.log_value.exp())
}

pub(crate) fn flat_volume(u: usize, r: f64) -> f64 {
    match u {
        1 => 2.0 * r,
        _ => PI * r * r,
    }
}

fn check_disk_args<M: TorusDiffeo + ?Sized>(f: &M, u: usize, r: f64) -> Result<()> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::Precondition(format!("disk radius must be positive, got {r}")));
    }
    if u == 0 || u > 2 || u >= f.dim() {
        return Err(Error::Precondition(format!(
            "disks of rank {u} in dimension {} are not supported (need 1 ≤ u ≤ 2, u < d)",
            f.dim()
        )));
    }
    Ok(())
}

fn converged(e: SplittingFrame) -> Result<SplittingFrame> {
    if !e.converged {
        return Err(Error::Unconverged { index: 0, residual: e.residual });
    }
    Ok(e)
}

/// Largest angle between the disk's tangent planes and `E^u` at the centre
/// and a few boundary points of the seed, after `pre_iterates` steps.
fn measure_tilt<M: TorusDiffeo + ?Sized>(
    f: &M,
    seed: &SeedDisk,
    u: usize,
    n_settle: usize,
    rseed: u64,
) -> Result<(f64, Subspace)> {
    let q = seed.frame.frame();
    let mut offsets: Vec<Vec<f64>> = vec![vec![0.0; f.dim()]];
    for j in 0..u {
        for s in [-1.0, 1.0] {
            offsets.push(q.column(j).iter().map(|v| s * v).collect());
        }
    }
    let mut tilt: f64 = 0.0;
    let mut center_tangent = seed.frame.clone();
    for (i, off) in offsets.iter().enumerate() {
        let p: Vec<f64> = seed.point.iter().zip(off).map(|(y, o)| reduce(y + seed.radius * o)).collect();
        let mut s = CocycleState::new(p, seed.frame.clone());
        s.advance(f, seed.pre_iterates)?;
        let e = converged(estimate_unstable(f, &s.point, u, n_settle, rng::for_index(rseed, i))?)?;
        tilt = tilt.max(subspace_angle(&s.frame, &e.subspace)?);
        if i == 0 {
            center_tangent = s.frame;
        }
    }
    Ok((tilt, center_tangent))
}

/// Approximate `W^u`-disk of induced radius `r` centred at `x`: a flat disk
/// tangent to `E^u` at `f^{-m}(x)`, shrunk by the expected expansion, pushed
/// forward `m` times and rescaled once so its volume is that of the flat
/// `r`-disk.
pub fn make_leaf_disk<M: TorusDiffeo + ?Sized>(
    f: &M,
    x: &[f64],
    u: usize,
    r: f64,
    m: usize,
    n_settle: usize,
    seed: u64,
) -> Result<ParamDisk> {
    check_disk_args(f, u, r)?;
    if !f.has_inverse() {
        return Err(Error::NoInverse);
    }
    let y = backward_orbit(f, x, m)?.swap_remove(0);
    let e = converged(estimate_unstable(f, &y, u, n_settle, seed)?)?;
    let log_j = log_cocycle_volume(f, &y, &e.subspace, m)?;
    let mut seed_disk = SeedDisk { point: y, frame: e.subspace, radius: r * (-log_j / u as f64).exp(), pre_iterates: m };
    if m > 0 {
        let probe = SeedDisk { radius: seed_disk.radius, ..seed_disk.clone() };
        let domain = if u == 1 { Domain::Segment } else { Domain::Disk };
        let mut q = Quadrature::new(domain, probe);
        let v0 = q.refine(f, 0, 1e-6)?.log_value;
        seed_disk.radius *= ((flat_volume(u, r).ln() - v0) / u as f64).exp();
    }
    let (tilt, tangent) = measure_tilt(f, &seed_disk, u, n_settle, rng::derive(seed, "tilt"))?;
    let demoted = tilt >= LEAF_TILT_TOL;
    ParamDisk::new(DiskSpec {
        center: x.to_vec(),
        tangent,
        radius: r,
        family: if demoted { DiskFamily::Transverse } else { DiskFamily::Leaf },
        tilt,
        demoted,
        seed: seed_disk,
    })
}

/// Flat disk of radius `r` at `x` whose tangent plane is `E^u(x)` with its
/// first axis rotated by `tilt` towards a random direction orthogonal to
/// `E^u(x)`. Requires `tilt < cone`.
#[allow(clippy::too_many_arguments)]
pub fn make_transverse_disk<M: TorusDiffeo + ?Sized>(
    f: &M,
    x: &[f64],
    u: usize,
    r: f64,
    tilt: f64,
    cone: f64,
    n_settle: usize,
    seed: u64,
) -> Result<ParamDisk> {
    check_disk_args(f, u, r)?;
    if !(tilt >= 0.0 && tilt < cone) {
        return Err(Error::Precondition(format!("tilt {tilt} outside [0, {cone})")));
    }
    let e = converged(estimate_unstable(f, x, u, n_settle, seed)?)?;
    let w = rng::random_orthogonal_unit(&mut rng::stream(rng::derive(seed, "tilt"), 0), &e.subspace)?;
    let mut frame = e.subspace.frame().clone();
    for (i, wi) in w.iter().enumerate() {
        frame[(i, 0)] = tilt.cos() * frame[(i, 0)] + tilt.sin() * wi;
    }
    let tangent = Subspace::from_frame(frame)?;
    let seed_disk = SeedDisk { point: e.base.clone(), frame: tangent.clone(), radius: r, pre_iterates: 0 };
    ParamDisk::new(DiskSpec {
        center: e.base,
        tangent,
        radius: r,
        family: DiskFamily::Transverse,
        tilt,
        demoted: false,
        seed: seed_disk,
    })
}

/// Half the smallest angle between `E^u` and `E^cs` over a uniform sample.
pub fn cone_angle<M: TorusDiffeo + ?Sized>(
    f: &M,
    u: usize,
    sample_size: usize,
    n_settle: usize,
    seed: u64,
) -> Result<f64> {
    if sample_size == 0 {
        return Err(Error::Precondition("cone angle needs a nonempty sample".into()));
    }
    let points = super::uniform_sample(f.dim(), sample_size, rng::derive(seed, "cone"));
    let angles = par::map_indexed(sample_size, |i| -> Result<f64> {
        let s = estimate_splitting(f, &points[i], u, n_settle, rng::for_index(seed, i))?;
        if !s.converged {
            return Err(Error::Unconverged { index: i, residual: s.residual });
        }
        Ok(minimal_angle(&s.unstable, &s.center_stable))
    });
    let mut min = f64::INFINITY;
    for a in angles {
        min = min.min(a?);
    }
    Ok(0.5 * min)
}

/// Boundary-to-volume ratio of iterated 2-disks.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoundaryRatio {
    /// `(n, vol f^n(∂D) / vol f^n(D))`.
    pub series: Vec<(usize, f64)>,
    /// Fitted `−(1/n) log ratio`.
    pub decay_exponent: f64,
    pub residual: f64,
    pub window: (usize, usize),
}

pub fn boundary_ratio<M: TorusDiffeo + ?Sized>(
    f: &M,
    disk: &ParamDisk,
    window: (usize, usize),
    tol: f64,
) -> Result<BoundaryRatio> {
    if disk.spec.rank() < 2 {
        return Err(Error::Precondition(
            "boundary ratio needs u ≥ 2: the boundary of a 1-disk is two points, so the ratio is \
             just 2/length"
                .into(),
        ));
    }
    let n_max = window.1;
    let mut area = disk.clone();
    area.refine(f, n_max, tol)?;
    let mut edge = Quadrature::new(Domain::Circle, disk.spec.seed.clone());
    edge.refine(f, n_max, tol)?;
    let log_area = area.log_volume_series(f, n_max)?;
    let log_ratio: Vec<(usize, f64)> = (0..=n_max).map(|n| (n, edge.log_integral(n) - log_area[n])).collect();
    let neg: Vec<(usize, f64)> = log_ratio.iter().map(|&(n, v)| (n, -v)).collect();
    let fit = fit_rate(&neg, window)?;
    Ok(BoundaryRatio {
        series: log_ratio.into_iter().map(|(n, v)| (n, v.exp())).collect(),
        decay_exponent: fit.rate,
        residual: fit.residual,
        window,
    })
}
