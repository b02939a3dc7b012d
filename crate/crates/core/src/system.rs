//! Phase space `T^d = R^d / Z^d` and the maps studied on it.
//!
//! A [`TorusMap`] is `x ↦ A·x + Σ aᵢ·sin(2π⟨kᵢ, x⟩ + φᵢ)·e_{tᵢ} (mod 1)` for an
//! integer matrix `A` with `|det A| = 1` and a finite list of trigonometric
//! modes. With no modes it is the linear automorphism induced by `A`.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{IntMatrix, Mat};
use crate::{Error, Result};

/// Default C¹-size budget for perturbations.
pub const DEFAULT_BUDGET: f64 = 0.5;

const NEWTON_TOL: f64 = 1e-12;
const NEWTON_MAX_STEPS: usize = 50;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SystemError {
    #[error("matrix is not square: {0}")]
    NotSquare(String),
    #[error("declared dimension {declared} does not match matrix size {actual}")]
    DimensionMismatch { declared: usize, actual: usize },
    #[error("|det A| = {det}, a torus diffeomorphism needs |det A| = 1")]
    Determinant { det: i128 },
    #[error("perturbation C¹ bound {bound:.6} is not below the budget {budget}")]
    Budget { bound: f64, budget: f64 },
    #[error("mode {index}: target coordinate {target} out of range for dimension {dim}")]
    ModeTarget { index: usize, target: usize, dim: usize },
    #[error("mode {index}: frequency vector has length {len}, expected {dim}")]
    ModeFrequency { index: usize, len: usize, dim: usize },
    #[error("mode {index}: amplitude and phase must be finite")]
    ModeValue { index: usize },
    #[error("budget must be positive and finite")]
    InvalidBudget,
}

impl SystemError {
    pub fn code(&self) -> &'static str {
        match self {
            SystemError::NotSquare(_) => "E_NOT_SQUARE",
            SystemError::DimensionMismatch { .. } => "E_DIMENSION",
            SystemError::Determinant { .. } => "E_DETERMINANT",
            SystemError::Budget { .. } => "E_BUDGET",
            SystemError::ModeTarget { .. } => "E_MODE_TARGET",
            SystemError::ModeFrequency { .. } => "E_MODE_FREQUENCY",
            SystemError::ModeValue { .. } => "E_MODE_VALUE",
            SystemError::InvalidBudget => "E_BUDGET_VALUE",
        }
    }
}

/// One trigonometric perturbation term `amplitude·sin(2π⟨k, x⟩ + phase)`
/// added to coordinate `target`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mode {
    pub amplitude: f64,
    pub target: usize,
    pub k: Vec<i64>,
    #[serde(default)]
    pub phase: f64,
}

impl Mode {
    /// Bound on the C¹ size of this mode: `|a|·2π·‖k‖₂`.
    pub fn c1_bound(&self) -> f64 {
        let knorm = self.k.iter().map(|&k| (k * k) as f64).sum::<f64>().sqrt();
        self.amplitude.abs() * TAU * knorm
    }

    fn angle(&self, x: &[f64]) -> f64 {
        let dot: f64 = self.k.iter().zip(x).map(|(&k, &xi)| k as f64 * xi).sum();
        TAU * dot + self.phase
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MapKind {
    Linear,
    PerturbedLinear,
}

/// A point of `T^d`.
///
/// `coords` is always the canonical representative in `[0,1)^d`. A point may
/// also carry a lift in `R^d`; the lift reduces to `coords` mod 1.
#[derive(Debug, Clone, PartialEq)]
pub struct Point {
    coords: Vec<f64>,
    lift: Option<Vec<f64>>,
}

impl Point {
    pub fn new(coords: Vec<f64>) -> Self {
        Point { coords: coords.into_iter().map(reduce).collect(), lift: None }
    }

    pub fn from_lift(lift: Vec<f64>) -> Self {
        Point { coords: lift.iter().copied().map(reduce).collect(), lift: Some(lift) }
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn lift(&self) -> Option<&[f64]> {
        self.lift.as_deref()
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }
}

/// Canonical representative of a real number mod 1, in `[0, 1)`.
pub fn reduce(x: f64) -> f64 {
    let r = x.rem_euclid(1.0);
    if r >= 1.0 {
        0.0
    } else {
        r
    }
}

/// Representative of `x` mod 1 in `[−0.5, 0.5]`.
pub fn wrap(x: f64) -> f64 {
    x - x.round()
}

/// Euclidean length of the coordinatewise minimal representative of `x − y`.
pub fn torus_distance(x: &[f64], y: &[f64]) -> f64 {
    debug_assert_eq!(x.len(), y.len());
    x.iter().zip(y).map(|(a, b)| wrap(a - b).powi(2)).sum::<f64>().sqrt()
}

/// The interface every estimator consumes: a diffeomorphism of `T^d` given
/// on canonical coordinates, with its exact Jacobian.
pub trait TorusDiffeo: Sync {
    fn dim(&self) -> usize;

    /// Image of a canonical point, reduced mod 1.
    fn step(&self, x: &[f64]) -> Vec<f64>;

    fn jacobian(&self, x: &[f64]) -> Mat;

    /// Preimage of a canonical point, or `None` when no inverse is
    /// available.
    fn step_back(&self, x: &[f64]) -> Option<Result<Vec<f64>>>;

    fn has_inverse(&self) -> bool;

    /// Integer matrix of the induced action on `H_1(T^d)`.
    fn linear_part(&self) -> &IntMatrix;

    /// Inverse of the Jacobian at `x`, i.e. `Df^{-1}` at `f(x)`.
    fn jacobian_inverse(&self, x: &[f64]) -> Result<Mat> {
        self.jacobian(x)
            .try_inverse()
            .ok_or_else(|| Error::Degenerate("singular Jacobian".into()))
    }
}

#[derive(Debug, Clone)]
pub struct TorusMap {
    matrix: IntMatrix,
    matrix_f: Mat,
    inverse: IntMatrix,
    inverse_f: Mat,
    modes: Vec<Mode>,
    c1_bound: f64,
    newton_inverse: bool,
}

/// `A` must be square with `|det A| = 1`.
pub fn make_linear_toral(rows: Vec<Vec<i64>>) -> std::result::Result<TorusMap, SystemError> {
    make_perturbed_toral(rows, Vec::new(), DEFAULT_BUDGET)
}

/// Linear map plus trigonometric modes, rejected unless the total C¹ bound
/// `Σ|a|·2π·‖k‖₂` is strictly below `budget`.
pub fn make_perturbed_toral(
    rows: Vec<Vec<i64>>,
    modes: Vec<Mode>,
    budget: f64,
) -> std::result::Result<TorusMap, SystemError> {
    let matrix = IntMatrix::from_rows(rows).map_err(SystemError::NotSquare)?;
    let d = matrix.dim();
    let det = matrix.det();
    let inverse = matrix.inverse_unimodular().ok_or(SystemError::Determinant { det })?;
    if !(budget.is_finite() && budget > 0.0) {
        return Err(SystemError::InvalidBudget);
    }
    for (index, m) in modes.iter().enumerate() {
        if m.target >= d {
            return Err(SystemError::ModeTarget { index, target: m.target, dim: d });
        }
        if m.k.len() != d {
            return Err(SystemError::ModeFrequency { index, len: m.k.len(), dim: d });
        }
        if !(m.amplitude.is_finite() && m.phase.is_finite()) {
            return Err(SystemError::ModeValue { index });
        }
    }
    let c1_bound: f64 = modes.iter().map(Mode::c1_bound).sum();
    if !modes.is_empty() && c1_bound >= budget {
        return Err(SystemError::Budget { bound: c1_bound, budget });
    }
    Ok(TorusMap {
        matrix_f: matrix.to_mat(),
        inverse_f: inverse.to_mat(),
        matrix,
        inverse,
        modes,
        c1_bound,
        newton_inverse: true,
    })
}

impl TorusMap {
    pub fn kind(&self) -> MapKind {
        if self.modes.is_empty() {
            MapKind::Linear
        } else {
            MapKind::PerturbedLinear
        }
    }

    pub fn matrix(&self) -> &IntMatrix {
        &self.matrix
    }

    pub fn modes(&self) -> &[Mode] {
        &self.modes
    }

    /// `Σ|a|·2π·‖k‖₂`, an upper bound on the C¹ distance to the linear part.
    pub fn c1_bound(&self) -> f64 {
        self.c1_bound
    }

    /// Enables or disables the Newton inverse for perturbed maps.
    pub fn with_newton_inverse(mut self, enabled: bool) -> Self {
        self.newton_inverse = enabled;
        self
    }

    /// The unperturbed linear automorphism `A`.
    pub fn linear_base(&self) -> TorusMap {
        TorusMap { modes: Vec::new(), c1_bound: 0.0, ..self.clone() }
    }

    /// `f^{-1}` as a map in its own right.
    pub fn inverse_map(&self) -> Result<InverseMap<'_>> {
        if !self.has_inverse() {
            return Err(Error::NoInverse);
        }
        Ok(InverseMap { map: self })
    }

    /// Image of `x`. When `x` carries a lift the result carries the
    /// unreduced image of that lift.
    pub fn evaluate(&self, x: &Point) -> Point {
        match x.lift() {
            Some(l) => Point::from_lift(self.lift_image(l)),
            None => Point::new(self.lift_image(x.coords())),
        }
    }

    pub fn jacobian_at(&self, x: &Point) -> Mat {
        self.jacobian(x.coords())
    }

    /// Unreduced image of a lift: `A·x + perturbation(x)`.
    pub fn lift_image(&self, x: &[f64]) -> Vec<f64> {
        let d = self.matrix.dim();
        let mut y: Vec<f64> = (0..d)
            .map(|i| (0..d).map(|j| self.matrix.get(i, j) as f64 * x[j]).sum())
            .collect();
        for m in &self.modes {
            y[m.target] += m.amplitude * m.angle(x).sin();
        }
        y
    }

    /// Damped Newton solve of `f(x) = y` started from the linear inverse.
    fn newton_inverse(&self, y: &[f64]) -> Result<Vec<f64>> {
        let d = self.matrix.dim();
        let mut x: Vec<f64> = (0..d)
            .map(|i| (0..d).map(|j| self.inverse.get(i, j) as f64 * y[j]).sum())
            .collect();
        let residual = |x: &[f64]| -> Vec<f64> {
            self.lift_image(x).iter().zip(y).map(|(a, b)| wrap(a - b)).collect()
        };
        let norm = |v: &[f64]| v.iter().map(|a| a * a).sum::<f64>().sqrt();
        let mut r = residual(&x);
        let mut rn = norm(&r);
        for _ in 0..NEWTON_MAX_STEPS {
            if rn <= NEWTON_TOL {
                return Ok(x.into_iter().map(reduce).collect());
            }
            let j = self.jacobian(&x);
            let step = j
                .lu()
                .solve(&nalgebra::DVector::from_column_slice(&r))
                .ok_or_else(|| Error::Degenerate("singular Jacobian in Newton inverse".into()))?;
            let mut t = 1.0;
            loop {
                let trial: Vec<f64> = x.iter().zip(step.iter()).map(|(a, s)| a - t * s).collect();
                let tr = residual(&trial);
                let tn = norm(&tr);
                if tn < rn || t < 1.0 / 64.0 {
                    x = trial;
                    r = tr;
                    rn = tn;
                    break;
                }
                t *= 0.5;
            }
        }
        if rn <= NEWTON_TOL {
            Ok(x.into_iter().map(reduce).collect())
        } else {
            Err(Error::NewtonInverse { residual: rn })
        }
    }
}

impl TorusDiffeo for TorusMap {
    fn dim(&self) -> usize {
        self.matrix.dim()
    }

    fn step(&self, x: &[f64]) -> Vec<f64> {
        self.lift_image(x).into_iter().map(reduce).collect()
    }

    fn jacobian(&self, x: &[f64]) -> Mat {
        let mut j = self.matrix_f.clone();
        for m in &self.modes {
            let c = TAU * m.amplitude * m.angle(x).cos();
            for (col, &k) in m.k.iter().enumerate() {
                j[(m.target, col)] += c * k as f64;
            }
        }
        j
    }

    fn step_back(&self, x: &[f64]) -> Option<Result<Vec<f64>>> {
        if self.modes.is_empty() {
            let d = self.matrix.dim();
            let y = (0..d)
                .map(|i| reduce((0..d).map(|j| self.inverse.get(i, j) as f64 * x[j]).sum()))
                .collect();
            Some(Ok(y))
        } else if self.newton_inverse {
            Some(self.newton_inverse(x))
        } else {
            None
        }
    }

    fn has_inverse(&self) -> bool {
        self.modes.is_empty() || self.newton_inverse
    }

    fn linear_part(&self) -> &IntMatrix {
        &self.matrix
    }

    fn jacobian_inverse(&self, x: &[f64]) -> Result<Mat> {
        if self.modes.is_empty() {
            Ok(self.inverse_f.clone())
        } else {
            self.jacobian(x)
                .try_inverse()
                .ok_or_else(|| Error::Degenerate("singular Jacobian".into()))
        }
    }
}

/// `f^{-1}` for a map whose inverse is available.
#[derive(Debug, Clone, Copy)]
pub struct InverseMap<'a> {
    map: &'a TorusMap,
}

impl InverseMap<'_> {
    fn preimage(&self, y: &[f64]) -> Vec<f64> {
        match self.map.step_back(y) {
            Some(Ok(x)) => x,
            // A failed Newton solve leaves the linear preimage; step_back
            // on this map reports the failure instead.
            _ => {
                let d = self.map.dim();
                (0..d)
                    .map(|i| reduce((0..d).map(|j| self.map.inverse.get(i, j) as f64 * y[j]).sum()))
                    .collect()
            }
        }
    }
}

impl TorusDiffeo for InverseMap<'_> {
    fn dim(&self) -> usize {
        self.map.dim()
    }

    fn step(&self, x: &[f64]) -> Vec<f64> {
        self.preimage(x)
    }

    fn jacobian(&self, x: &[f64]) -> Mat {
        if self.map.modes.is_empty() {
            return self.map.inverse_f.clone();
        }
        let pre = self.preimage(x);
        self.map.jacobian(&pre).try_inverse().unwrap_or_else(|| self.map.inverse_f.clone())
    }

    fn step_back(&self, x: &[f64]) -> Option<Result<Vec<f64>>> {
        Some(Ok(self.map.step(x)))
    }

    fn has_inverse(&self) -> bool {
        true
    }

    fn linear_part(&self) -> &IntMatrix {
        &self.map.inverse
    }

    fn jacobian_inverse(&self, x: &[f64]) -> Result<Mat> {
        Ok(self.map.jacobian(&self.preimage(x)))
    }
}

/// JSON form of a system:
///
/// ```json
/// {"dimension": 2, "matrix": [[2,1],[1,1]],
///  "modes": [{"amplitude": 0.05, "target": 0, "k": [1,0], "phase": 0.0}],
///  "budget": 0.5, "newton_inverse": true}
/// ```
///
/// `modes`, `budget` and `newton_inverse` are optional.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    pub dimension: usize,
    pub matrix: Vec<Vec<i64>>,
    #[serde(default)]
    pub modes: Vec<Mode>,
    #[serde(default = "default_budget")]
    pub budget: f64,
    #[serde(default = "default_true")]
    pub newton_inverse: bool,
}

fn default_budget() -> f64 {
    DEFAULT_BUDGET
}

fn default_true() -> bool {
    true
}

impl SystemConfig {
    pub fn linear(matrix: Vec<Vec<i64>>) -> Self {
        SystemConfig {
            dimension: matrix.len(),
            matrix,
            modes: Vec::new(),
            budget: DEFAULT_BUDGET,
            newton_inverse: true,
        }
    }

    pub fn build(&self) -> std::result::Result<TorusMap, SystemError> {
        if self.matrix.len() != self.dimension {
            return Err(SystemError::DimensionMismatch {
                declared: self.dimension,
                actual: self.matrix.len(),
            });
        }
        Ok(make_perturbed_toral(self.matrix.clone(), self.modes.clone(), self.budget)?
            .with_newton_inverse(self.newton_inverse))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn cat() -> TorusMap {
        make_linear_toral(vec![vec![2, 1], vec![1, 1]]).unwrap()
    }

    fn mode(a: f64, t: usize, k: Vec<i64>) -> Mode {
        Mode { amplitude: a, target: t, k, phase: 0.0 }
    }

    #[test]
    fn linear_constructor_examples() {
        assert_eq!(cat().kind(), MapKind::Linear);
        let ph = make_linear_toral(vec![vec![2, 1, 0], vec![1, 1, 0], vec![0, 0, 1]]).unwrap();
        assert_eq!(ph.dim(), 3);
        assert_eq!(
            make_linear_toral(vec![vec![2, 1], vec![1, 2]]).unwrap_err(),
            SystemError::Determinant { det: 3 }
        );
        assert_eq!(
            make_linear_toral(vec![vec![2, 1]]).unwrap_err().code(),
            "E_NOT_SQUARE"
        );
    }

    #[test]
    fn perturbed_constructor_examples() {
        let f = make_perturbed_toral(vec![vec![2, 1], vec![1, 1]], vec![mode(0.05, 0, vec![1, 0])], 0.5)
            .unwrap();
        assert!((f.c1_bound() - 0.05 * TAU).abs() < 1e-15);
        assert_eq!(f.kind(), MapKind::PerturbedLinear);

        let err = make_perturbed_toral(vec![vec![2, 1], vec![1, 1]], vec![mode(0.2, 0, vec![3, 0])], 0.5)
            .unwrap_err();
        match err {
            SystemError::Budget { bound, .. } => assert!((bound - 0.2 * TAU * 3.0).abs() < 1e-12),
            e => panic!("unexpected {e:?}"),
        }

        let empty = make_perturbed_toral(vec![vec![2, 1], vec![1, 1]], vec![], 0.5).unwrap();
        assert_eq!(empty.kind(), MapKind::Linear);
        let x = [0.3, 0.7];
        assert_eq!(empty.step(&x), cat().step(&x));
        assert_eq!(empty.jacobian(&x), cat().jacobian(&x));

        let bad_target = make_perturbed_toral(vec![vec![2, 1], vec![1, 1]], vec![mode(0.01, 2, vec![1, 0])], 0.5);
        assert_eq!(bad_target.unwrap_err().code(), "E_MODE_TARGET");
        let bad_k = make_perturbed_toral(vec![vec![2, 1], vec![1, 1]], vec![mode(0.01, 0, vec![1])], 0.5);
        assert_eq!(bad_k.unwrap_err().code(), "E_MODE_FREQUENCY");
    }

    #[test]
    fn evaluate_examples() {
        let f = cat();
        assert_eq!(f.evaluate(&Point::new(vec![0.0, 0.0])).coords(), &[0.0, 0.0]);
        assert_eq!(f.evaluate(&Point::new(vec![0.5, 0.5])).coords(), &[0.5, 0.0]);
        let id = make_linear_toral(vec![vec![1, 0], vec![0, 1]]).unwrap();
        let x = Point::new(vec![0.123, 0.987]);
        assert_eq!(id.evaluate(&x), x);
        let lifted = f.evaluate(&Point::from_lift(vec![0.5, 0.5]));
        assert_eq!(lifted.lift().unwrap(), &[1.5, 1.0]);
        assert_eq!(lifted.coords(), &[0.5, 0.0]);
    }

    #[test]
    fn jacobian_examples() {
        let a = Mat::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 1.0]);
        assert_eq!(cat().jacobian(&[0.4, 0.1]), a);
        let f = make_perturbed_toral(vec![vec![2, 1], vec![1, 1]], vec![mode(0.05, 0, vec![1, 0])], 0.5)
            .unwrap();
        assert!((f.jacobian(&[0.25, 0.6]) - &a).norm() < 1e-15);
        let mut expect = a.clone();
        expect[(0, 0)] += 0.1 * PI;
        assert!((f.jacobian(&[0.0, 0.6]) - expect).norm() < 1e-15);
    }

    #[test]
    fn distance_examples() {
        assert!((torus_distance(&[0.1, 0.9], &[0.9, 0.1]) - 0.08f64.sqrt()).abs() < 1e-15);
        assert_eq!(torus_distance(&[0.3, 0.3], &[0.3, 0.3]), 0.0);
        assert!((torus_distance(&[0.0, 0.0], &[0.5, 0.0]) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn newton_inverse_roundtrip() {
        let f = make_perturbed_toral(vec![vec![2, 1], vec![1, 1]], vec![mode(0.05, 0, vec![1, 0])], 0.5)
            .unwrap();
        let x = [0.731, 0.019];
        let y = f.step(&x);
        let back = f.step_back(&y).unwrap().unwrap();
        assert!(torus_distance(&back, &x) < 1e-12);
        let no_inv = f.clone().with_newton_inverse(false);
        assert!(no_inv.step_back(&y).is_none());
        assert!(matches!(no_inv.inverse_map(), Err(Error::NoInverse)));
    }

    #[test]
    fn config_schema() {
        let cfg: SystemConfig = serde_json::from_str(
            r#"{"dimension":2,"matrix":[[2,1],[1,1]],"modes":[{"amplitude":0.05,"target":0,"k":[1,0],"phase":0.0}],"budget":0.5}"#,
        )
        .unwrap();
        assert_eq!(cfg.build().unwrap().kind(), MapKind::PerturbedLinear);
        let bad: SystemConfig = serde_json::from_str(r#"{"dimension":3,"matrix":[[2,1],[1,1]]}"#).unwrap();
        assert_eq!(bad.build().unwrap_err().code(), "E_DIMENSION");
        assert!(serde_json::from_str::<SystemConfig>(r#"{"dimension":2,"matrix":[[2,1],[1,1]],"bogus":1}"#).is_err());
    }
}
