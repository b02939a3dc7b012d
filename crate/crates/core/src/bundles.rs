//! Invariant splitting `E^cs ⊕ E^u` along orbits and Lyapunov exponents.
//!
//! `E^u(x)` is the limit of `Df^n` applied to a generic `u`-frame sitting at
//! `f^{-n}(x)`; `E^cs(x)` is the limit of `Df^{-n}` applied to a generic
//! `(d−u)`-frame sitting at `f^n(x)`. Both are computed by renormalised
//! cocycle iteration. Convergence is judged by comparing the frame obtained
//! with `n` settling steps against the one obtained with `n − 1`.

use serde::{Deserialize, Serialize};

use crate::linalg::{
    push_subspace, qr, restricted_conorm, restricted_expansion, singular_values, subspace_angle,
    Mat, Subspace,
};
use crate::rng;
use crate::system::TorusDiffeo;
use crate::{par, Error, Result};

/// Frames whose last settling step rotated them by more than this many
/// radians are reported as unconverged.
pub const CONVERGENCE_THRESHOLD: f64 = 1e-6;

/// Default number of settling steps.
pub const DEFAULT_SETTLE: usize = 60;

/// Settling steps applied to the frame before Lyapunov accumulation starts.
const LYAPUNOV_SETTLE: usize = 64;

/// A bundle estimate at one base point.
#[derive(Debug, Clone)]
pub struct SplittingFrame {
    /// Point the frame is attached to. Equal to the query point unless the
    /// unstable bundle had to be pushed forward for lack of an inverse.
    pub base: Vec<f64>,
    pub subspace: Subspace,
    /// Angle between the `n`-step and `(n−1)`-step estimates.
    pub residual: f64,
    pub converged: bool,
}

/// Both bundles at one base point.
#[derive(Debug, Clone)]
pub struct SplittingEstimate {
    pub base: Vec<f64>,
    pub unstable: Subspace,
    pub center_stable: Subspace,
    pub settle_steps: usize,
    pub residual: f64,
    pub converged: bool,
}

fn check_rank(d: usize, u: usize) -> Result<()> {
    if u == 0 || u >= d {
        return Err(Error::Precondition(format!(
            "unstable rank {u} must satisfy 0 < u < d = {d}"
        )));
    }
    Ok(())
}

pub(crate) fn forward_orbit<M: TorusDiffeo + ?Sized>(f: &M, x: &[f64], n: usize) -> Vec<Vec<f64>> {
    let mut orbit = Vec::with_capacity(n + 1);
    orbit.push(x.to_vec());
    for i in 0..n {
        let next = f.step(&orbit[i]);
        orbit.push(next);
    }
    orbit
}

/// `[f^{-n}x, …, f^{-1}x, x]`.
pub(crate) fn backward_orbit<M: TorusDiffeo + ?Sized>(
    f: &M,
    x: &[f64],
    n: usize,
) -> Result<Vec<Vec<f64>>> {
    let mut orbit = Vec::with_capacity(n + 1);
    orbit.push(x.to_vec());
    for i in 0..n {
        let prev = f.step_back(&orbit[i]).ok_or(Error::NoInverse)??;
        orbit.push(prev);
    }
    orbit.reverse();
    Ok(orbit)
}

fn push_along<M: TorusDiffeo + ?Sized>(f: &M, orbit: &[Vec<f64>], frame: &Subspace) -> Result<Subspace> {
    let mut frame = frame.clone();
    for z in &orbit[..orbit.len() - 1] {
        frame = push_subspace(&f.jacobian(z), &frame)?;
    }
    Ok(frame)
}

fn pull_along<M: TorusDiffeo + ?Sized>(f: &M, orbit: &[Vec<f64>], frame: &Subspace) -> Result<Subspace> {
    let mut frame = frame.clone();
    for z in orbit[..orbit.len() - 1].iter().rev() {
        frame = push_subspace(&f.jacobian_inverse(z)?, &frame)?;
    }
    Ok(frame)
}

fn settled(subspace: Subspace, shorter: &Subspace, base: Vec<f64>) -> Result<SplittingFrame> {
    let residual = subspace_angle(&subspace, shorter)?;
    Ok(SplittingFrame { base, subspace, residual, converged: residual <= CONVERGENCE_THRESHOLD })
}

/// Fastest-expanding `u`-plane at `x`.
///
/// With an inverse available, a seeded random frame at `f^{-n}(x)` is
/// pushed forward to `x`. Without one, the frame is pushed forward from `x`
/// and the result is attached to `f^n(x)` (see [`SplittingFrame::base`]).
pub fn estimate_unstable<M: TorusDiffeo + ?Sized>(
    f: &M,
    x: &[f64],
    u: usize,
    n_settle: usize,
    seed: u64,
) -> Result<SplittingFrame> {
    check_rank(f.dim(), u)?;
    if n_settle == 0 {
        return Err(Error::Precondition("n_settle must be at least 1".into()));
    }
    let start = rng::random_frame(&mut rng::stream(seed, 0), f.dim(), u)?;
    let orbit = if f.has_inverse() {
        backward_orbit(f, x, n_settle)?
    } else {
        forward_orbit(f, x, n_settle)
    };
    let full = push_along(f, &orbit, &start)?;
    let shorter = push_along(f, &orbit[1..], &start)?;
    settled(full, &shorter, orbit[n_settle].clone())
}

/// Slow `(d−u)`-plane at `x`: a seeded random frame at `f^n(x)` pulled back
/// to `x` by the inverse Jacobian cocycle. Needs only the forward orbit.
pub fn estimate_cs<M: TorusDiffeo + ?Sized>(
    f: &M,
    x: &[f64],
    u: usize,
    n_settle: usize,
    seed: u64,
) -> Result<SplittingFrame> {
    check_rank(f.dim(), u)?;
    if n_settle == 0 {
        return Err(Error::Precondition("n_settle must be at least 1".into()));
    }
    let start = rng::random_frame(&mut rng::stream(seed, 1), f.dim(), f.dim() - u)?;
    let orbit = forward_orbit(f, x, n_settle);
    let full = pull_along(f, &orbit, &start)?;
    let shorter = pull_along(f, &orbit[..n_settle], &start)?;
    settled(full, &shorter, x.to_vec())
}

/// Both bundles at `x` (at the unstable estimate's base point).
pub fn estimate_splitting<M: TorusDiffeo + ?Sized>(
    f: &M,
    x: &[f64],
    u: usize,
    n_settle: usize,
    seed: u64,
) -> Result<SplittingEstimate> {
    let eu = estimate_unstable(f, x, u, n_settle, seed)?;
    let ecs = estimate_cs(f, &eu.base, u, n_settle, seed)?;
    Ok(SplittingEstimate {
        base: eu.base,
        residual: eu.residual.max(ecs.residual),
        converged: eu.converged && ecs.converged,
        unstable: eu.subspace,
        center_stable: ecs.subspace,
        settle_steps: n_settle,
    })
}

/// `E^cs` frames at every point of the orbit segment `x, f(x), …, f^n(x)`,
/// from a single backward sweep that starts `n_settle` steps past the end.
pub fn cs_frames_along_orbit<M: TorusDiffeo + ?Sized>(
    f: &M,
    x: &[f64],
    n: usize,
    u: usize,
    n_settle: usize,
    seed: u64,
) -> Result<(Vec<Vec<f64>>, Vec<Subspace>, f64)> {
    check_rank(f.dim(), u)?;
    let start = rng::random_frame(&mut rng::stream(seed, 1), f.dim(), f.dim() - u)?;
    let total = n + n_settle.max(1);
    let orbit = forward_orbit(f, x, total);
    let mut frames = Vec::with_capacity(n + 1);
    let mut frame = start.clone();
    for i in (0..total).rev() {
        frame = push_subspace(&f.jacobian_inverse(&orbit[i])?, &frame)?;
        if i <= n {
            frames.push(frame.clone());
        }
    }
    frames.reverse();
    let shorter = pull_along(f, &orbit[..total], &start)?;
    let residual = subspace_angle(&frames[0], &shorter)?;
    let mut orbit = orbit;
    orbit.truncate(n + 1);
    Ok((orbit, frames, residual))
}

/// Outcome of the pointwise domination test.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Domination {
    /// `margin > 1`.
    pub dominated: bool,
    /// `min_x m(Df|E^u(x)) / ‖Df|E^cs(x)‖`: weakest expansion on the
    /// dominating bundle over strongest expansion on the dominated one.
    pub margin: f64,
    /// Index of the sample point attaining the margin.
    pub weakest_index: usize,
    /// `min_x ‖Df|E^u(x)‖ / m(Df|E^cs(x))`, the weaker comparison of
    /// maximal expansion on `E^u` with minimal expansion on `E^cs`.
    pub weak_form_margin: f64,
    pub max_residual: f64,
    /// Sample indices whose splitting estimate did not converge.
    pub unconverged: Vec<usize>,
}

/// Checks the pointwise gap `m(Df|E^u) > ‖Df|E^cs‖` over a sample.
///
/// If some splitting estimate fails to converge the test cannot certify
/// domination: the call errors unless the margin is already `≤ 1`, in which
/// case it reports "not dominated".
pub fn check_domination<M: TorusDiffeo + ?Sized>(
    f: &M,
    sample: &[Vec<f64>],
    u: usize,
    n_settle: usize,
    seed: u64,
) -> Result<Domination> {
    check_rank(f.dim(), u)?;
    if sample.is_empty() {
        return Err(Error::Precondition("domination check needs a nonempty sample".into()));
    }
    let per_point = par::map_indexed(sample.len(), |i| -> Result<(f64, f64, f64, bool)> {
        let s = estimate_splitting(f, &sample[i], u, n_settle, rng::for_index(seed, i))?;
        let j = f.jacobian(&s.base);
        let ratio = restricted_conorm(&j, &s.unstable) / restricted_expansion(&j, &s.center_stable);
        let weak = restricted_expansion(&j, &s.unstable) / restricted_conorm(&j, &s.center_stable);
        Ok((ratio, weak, s.residual, s.converged))
    });
    let mut out = Domination {
        dominated: false,
        margin: f64::INFINITY,
        weakest_index: 0,
        weak_form_margin: f64::INFINITY,
        max_residual: 0.0,
        unconverged: Vec::new(),
    };
    for (i, r) in per_point.into_iter().enumerate() {
        let (ratio, weak, residual, converged) = r?;
        if ratio < out.margin {
            out.margin = ratio;
            out.weakest_index = i;
        }
        out.weak_form_margin = out.weak_form_margin.min(weak);
        out.max_residual = out.max_residual.max(residual);
        if !converged {
            out.unconverged.push(i);
        }
    }
    out.dominated = out.margin > 1.0;
    if out.dominated {
        if let Some(&index) = out.unconverged.first() {
            return Err(Error::Unconverged { index, residual: out.max_residual });
        }
    }
    Ok(out)
}

/// Lyapunov exponents along one orbit, ascending, with multiplicity.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LyapunovSpectrum {
    pub exponents: Vec<f64>,
    pub steps: usize,
    pub base: Vec<f64>,
    /// `(1/n)·Σ log|det Df(x_i)|` over the same steps.
    pub mean_log_det: f64,
}

impl LyapunovSpectrum {
    pub fn sum(&self) -> f64 {
        self.exponents.iter().sum()
    }
}

/// QR method: a full frame is carried along the orbit (after a short
/// settling prefix) and `(1/n)·Σ log R_ii` is accumulated per column.
pub fn lyapunov_spectrum<M: TorusDiffeo + ?Sized>(
    f: &M,
    x: &[f64],
    n: usize,
) -> Result<LyapunovSpectrum> {
    if n == 0 {
        return Err(Error::Precondition("orbit length must be at least 1".into()));
    }
    let d = f.dim();
    let mut q = Mat::identity(d, d);
    let mut z = x.to_vec();
    let mut sums = vec![0.0; d];
    let mut log_det = 0.0;
    for step in 0..LYAPUNOV_SETTLE + n {
        let j = f.jacobian(&z);
        let (q_next, r) = qr(&(&j * &q))?;
        if step >= LYAPUNOV_SETTLE {
            for (i, s) in sums.iter_mut().enumerate() {
                *s += r[(i, i)].ln();
            }
            log_det += j.determinant().abs().ln();
        }
        q = q_next;
        z = f.step(&z);
    }
    let mut exponents: Vec<f64> = sums.into_iter().map(|s| s / n as f64).collect();
    exponents.sort_by(f64::total_cmp);
    Ok(LyapunovSpectrum { exponents, steps: n, base: x.to_vec(), mean_log_det: log_det / n as f64 })
}

/// `(1/n)·log‖Df^n|E^cs(x)‖`, the top exponent of the centre-stable bundle
/// over a finite orbit segment.
///
/// The bundle is tracked along the orbit by one backward sweep and the
/// restricted cocycle is accumulated in the moving frames with
/// log-scale renormalisation. Domination is assumed, not checked.
pub fn cs_top_exponent<M: TorusDiffeo + ?Sized>(
    f: &M,
    x: &[f64],
    n: usize,
    u: usize,
    n_settle: usize,
    seed: u64,
) -> Result<f64> {
    if n == 0 {
        return Err(Error::Precondition("orbit length must be at least 1".into()));
    }
    let (orbit, frames, residual) = cs_frames_along_orbit(f, x, n, u, n_settle, seed)?;
    if residual > CONVERGENCE_THRESHOLD {
        return Err(Error::Unconverged { index: 0, residual });
    }
    let k = f.dim() - u;
    let mut product = Mat::identity(k, k);
    let mut log_scale = 0.0;
    for i in 0..n {
        let step = frames[i + 1].frame().transpose() * f.jacobian(&orbit[i]) * frames[i].frame();
        product = step * product;
        let s = product.norm();
        if s == 0.0 {
            return Err(Error::Degenerate("centre-stable cocycle collapsed".into()));
        }
        log_scale += s.ln();
        product /= s;
    }
    Ok((log_scale + singular_values(&product)[0].ln()) / n as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Subspace;
    use crate::system::make_linear_toral;

    const LOG_GOLDEN_SQ: f64 = 0.962_423_650_119_206_9; // log((3+√5)/2)

    fn cat() -> crate::TorusMap {
        make_linear_toral(vec![vec![2, 1], vec![1, 1]]).unwrap()
    }

    fn ph3() -> crate::TorusMap {
        make_linear_toral(vec![vec![2, 1, 0], vec![1, 1, 0], vec![0, 0, 1]]).unwrap()
    }

    fn golden_sq() -> f64 {
        (3.0 + 5f64.sqrt()) / 2.0
    }

    #[test]
    fn unstable_of_cat_map() {
        let e = estimate_unstable(&cat(), &[0.3, 0.1], 1, 60, 7).unwrap();
        let truth = Subspace::span(&[vec![golden_sq() - 1.0, 1.0]]).unwrap();
        assert!(subspace_angle(&e.subspace, &truth).unwrap() < 1e-10);
        assert!(e.converged);
    }

    #[test]
    fn unstable_of_diagonal_is_axis() {
        // diag(3,1) is not unimodular; use the cocycle directly via a
        // stand-in map with that Jacobian.
        struct Diag;
        impl TorusDiffeo for Diag {
            fn dim(&self) -> usize {
                2
            }
            fn step(&self, x: &[f64]) -> Vec<f64> {
                x.to_vec()
            }
            fn jacobian(&self, _: &[f64]) -> Mat {
                Mat::from_row_slice(2, 2, &[3.0, 0.0, 0.0, 1.0])
            }
            fn step_back(&self, x: &[f64]) -> Option<Result<Vec<f64>>> {
                Some(Ok(x.to_vec()))
            }
            fn has_inverse(&self) -> bool {
                true
            }
            fn linear_part(&self) -> &crate::IntMatrix {
                unimplemented!()
            }
        }
        let e1 = Subspace::coordinate(2, &[0]);
        let e2 = Subspace::coordinate(2, &[1]);
        let mut prev = f64::INFINITY;
        for n in [1, 5, 10, 40] {
            let e = estimate_unstable(&Diag, &[0.0, 0.0], 1, n, 3).unwrap();
            let ang = subspace_angle(&e.subspace, &e1).unwrap();
            assert!(ang < prev || ang < 1e-15);
            prev = ang;
        }
        assert!(prev < 1e-14);
        let cs = estimate_cs(&Diag, &[0.0, 0.0], 1, 40, 3).unwrap();
        assert!(subspace_angle(&cs.subspace, &e2).unwrap() < 1e-14);
    }

    #[test]
    fn full_rank_unstable_rejected() {
        assert!(matches!(estimate_unstable(&cat(), &[0.1, 0.2], 2, 10, 0), Err(Error::Precondition(_))));
        assert!(matches!(estimate_cs(&cat(), &[0.1, 0.2], 0, 10, 0), Err(Error::Precondition(_))));
    }

    #[test]
    fn cs_bundles() {
        let e = estimate_cs(&cat(), &[0.3, 0.1], 1, 60, 7).unwrap();
        let truth = Subspace::span(&[vec![1.0, -(golden_sq() - 1.0)]]).unwrap();
        assert!(subspace_angle(&e.subspace, &truth).unwrap() < 1e-10);

        let e = estimate_cs(&ph3(), &[0.3, 0.1, 0.8], 1, 60, 7).unwrap();
        let truth = Subspace::span(&[vec![1.0, -(golden_sq() - 1.0), 0.0], vec![0.0, 0.0, 1.0]]).unwrap();
        assert!(subspace_angle(&e.subspace, &truth).unwrap() < 1e-10);
    }

    #[test]
    fn domination_examples() {
        let sample = vec![vec![0.1, 0.2], vec![0.7, 0.4], vec![0.5, 0.9]];
        let d = check_domination(&cat(), &sample, 1, 60, 1).unwrap();
        assert!(d.dominated);
        assert!((d.margin - golden_sq().powi(2)).abs() < 1e-6);

        let sample3 = vec![vec![0.1, 0.2, 0.3], vec![0.6, 0.5, 0.4]];
        let d = check_domination(&ph3(), &sample3, 1, 60, 1).unwrap();
        assert!((d.margin - golden_sq()).abs() < 1e-6);

        let rot = make_linear_toral(vec![vec![0, -1], vec![1, 0]]).unwrap();
        let d = check_domination(&rot, &sample, 1, 60, 1).unwrap();
        assert!(!d.dominated);
        assert!((d.margin - 1.0).abs() < 1e-12);
    }

    #[test]
    fn lyapunov_examples() {
        let s = lyapunov_spectrum(&cat(), &[0.2, 0.3], 1000).unwrap();
        assert!((s.exponents[0] + LOG_GOLDEN_SQ).abs() < 1e-6);
        assert!((s.exponents[1] - LOG_GOLDEN_SQ).abs() < 1e-6);
        let id = make_linear_toral(vec![vec![1, 0], vec![0, 1]]).unwrap();
        let s = lyapunov_spectrum(&id, &[0.2, 0.3], 10).unwrap();
        assert_eq!(s.exponents, vec![0.0, 0.0]);
    }

    #[test]
    fn cs_top_exponent_examples() {
        let l = cs_top_exponent(&ph3(), &[0.1, 0.2, 0.3], 200, 1, 60, 5).unwrap();
        assert!(l.abs() < 1e-10);
        let l = cs_top_exponent(&cat(), &[0.1, 0.2], 200, 1, 60, 5).unwrap();
        assert!((l + LOG_GOLDEN_SQ).abs() < 1e-10);
    }
}
