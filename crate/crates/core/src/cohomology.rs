//! Action of a toral automorphism on real cohomology.
//!
//! `H^u(T^d; R)` is `Λ^u(R^d)^*`; an integer matrix `A` acts on it by the
//! matrix of `u×u` minors of `Aᵀ`. Transposition does not change the
//! spectrum, so `log spec(f^*_u)` is the log spectral radius of `Λ^u A`.

use nalgebra::Complex;
use serde::{Deserialize, Serialize};

use crate::linalg::{exterior_power_int, spectral_radius, IntMatrix};
use crate::{Error, Result};

/// Moduli within this distance of 1 count as centre directions.
pub const CENTER_TOL: f64 = 1e-9;


#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CohomologyAction {
    pub base: IntMatrix,
    pub degree: usize,
    /// `Λ^u(Aᵀ)` in the lexicographic basis of `u`-subsets.
    pub action: IntMatrix,
    pub log_spec: f64,
}

fn check_unimodular(a: &IntMatrix) -> Result<()> {
    let det = a.det();
    if det.abs() != 1 {
        return Err(crate::system::SystemError::Determinant { det }.into());
    }
    Ok(())
}

pub fn induced_action(a: &IntMatrix, u: usize) -> Result<CohomologyAction> {
    check_unimodular(a)?;
    let action = exterior_power_int(&a.transpose(), u)?;
    let rho = spectral_radius(&action.to_mat())?;
    Ok(CohomologyAction { base: a.clone(), degree: u, action, log_spec: rho.ln() })
}

/// Eigenvalues of `A` as `(value, group size)` pairs, one per eigenvalue.
///
/// A defective eigenvalue of multiplicity `m` comes back from the QR
/// algorithm as a ring of `m` values at distance about `(ε‖A‖)^{1/m}`, but
/// their mean is accurate to `O(ε)`. Eigenvalues closer than
/// `100·(ε‖A‖)^{1/d}` are therefore grouped and replaced by the group mean.
fn grouped_eigenvalues(a: &IntMatrix) -> Vec<(Complex<f64>, usize)> {
    let m = a.to_mat();
    let ev: Vec<Complex<f64>> = m.complex_eigenvalues().iter().copied().collect();
    let d = ev.len();
    let radius = 100.0 * (f64::EPSILON * m.norm().max(1.0)).powf(1.0 / d as f64);
    let mut group: Vec<usize> = (0..d).collect();
    for i in 0..d {
        for j in 0..i {
            if (ev[i] - ev[j]).norm() < radius {
                let (gi, gj) = (group[i], group[j]);
                group.iter_mut().filter(|g| **g == gi).for_each(|g| *g = gj);
            }
        }
    }
    (0..d)
        .map(|i| {
            let members: Vec<Complex<f64>> = (0..d).filter(|&k| group[k] == group[i]).map(|k| ev[k]).collect();
            (members.iter().sum::<Complex<f64>>() / members.len() as f64, members.len())
        })
        .collect()
}

/// Eigenvalue moduli of `A`, largest first, with repeated eigenvalues
/// resolved as in [`grouped_eigenvalues`].
pub fn eigen_moduli(a: &IntMatrix) -> Vec<f64> {
    let mut moduli: Vec<f64> = grouped_eigenvalues(a).iter().map(|(z, _)| z.norm()).collect();
    moduli.sort_by(|x, y| y.total_cmp(x));
    moduli
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnstableDimension {
    pub unstable: usize,
    pub center: usize,
    pub stable: usize,
    /// Eigenvalue moduli, largest first.
    pub moduli: Vec<f64>,
}

pub fn unstable_dimension(a: &IntMatrix) -> UnstableDimension {
    let moduli = eigen_moduli(a);
    let unstable = moduli.iter().filter(|&&m| m > 1.0 + CENTER_TOL).count();
    let center = moduli.iter().filter(|&&m| (m - 1.0).abs() <= CENTER_TOL).count();
    UnstableDimension { unstable, center, stable: moduli.len() - unstable - center, moduli }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Theorem2Rhs {
    pub degree: usize,
    /// `log spec(f^*_u)`.
    pub value: f64,
    /// Log spectral radius of the action matrix.
    pub log_spectral_radius: f64,
    /// Sum of the `u` largest log eigenvalue moduli of `A`.
    pub eigen_log_sum: f64,
    /// `A` has a repeated eigenvalue. `value` is then `eigen_log_sum` and
    /// the two computations are not required to agree.
    pub repeated_eigenvalue: bool,
    /// `false` when `u` differs from the number of expanding eigenvalues.
    pub degree_is_unstable_dimension: bool,
}

/// `log spec(f^*_u)`, cross-checked against the eigenvalues of `A`.
///
/// Both routes agree to `1e-8` on simple spectra. A Jordan block of size
/// `m` in the action matrix limits the spectral radius iteration to about
/// `ε^{1/m}`, whereas grouped eigenvalue means stay accurate, so for a
/// repeated eigenvalue the eigenvalue route is reported.
pub fn theorem2_rhs(a: &IntMatrix, u: usize) -> Result<Theorem2Rhs> {
    let action = induced_action(a, u)?;
    let dims = unstable_dimension(a);
    let eigen_log_sum: f64 = dims.moduli.iter().take(u).map(|m| m.ln()).sum();
    let repeated = grouped_eigenvalues(a).iter().any(|&(_, k)| k > 1);
    if !repeated && (eigen_log_sum - action.log_spec).abs() > 1e-8 * (1.0 + action.log_spec.abs()) {
        return Err(Error::CrossCheck(format!(
            "log spectral radius of Λ^{u} is {} but eigenvalue sum is {eigen_log_sum}",
            action.log_spec
        )));
    }
    Ok(Theorem2Rhs {
        degree: u,
        value: if repeated { eigen_log_sum } else { action.log_spec },
        log_spectral_radius: action.log_spec,
        eigen_log_sum,
        repeated_eigenvalue: repeated,
        degree_is_unstable_dimension: dims.unstable == u,
    })
}

/// Numerical certificate that a constant `u`-form is non-degenerate on the
/// unstable plane of a linear map: the product of the `u` largest moduli
/// strictly dominates every other `u`-fold product.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FormCertificate {
    pub holds: bool,
    pub top_product: f64,
    /// Largest competing `u`-fold product (zero when `u = d`).
    pub next_product: f64,
}

pub fn form_certificate(a: &IntMatrix, u: usize) -> Result<FormCertificate> {
    check_unimodular(a)?;
    let d = a.dim();
    if u == 0 || u > d {
        return Err(Error::Precondition(format!("degree {u} outside 1..={d}")));
    }
    let moduli = eigen_moduli(a);
    let top_product: f64 = moduli[..u].iter().product();
    let next_product = if u < d {
        moduli[..u - 1].iter().product::<f64>() * moduli[u]
    } else {
        0.0
    };
    Ok(FormCertificate { holds: top_product > next_product * (1.0 + 1e-9), top_product, next_product })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn im(rows: Vec<Vec<i64>>) -> IntMatrix {
        IntMatrix::from_rows(rows).unwrap()
    }

    const LOG_GOLDEN_SQ: f64 = 0.962_423_650_119_206_9;

    #[test]
    fn induced_action_examples() {
        let cat = im(vec![vec![2, 1], vec![1, 1]]);
        let a1 = induced_action(&cat, 1).unwrap();
        assert_eq!(a1.action, cat.transpose());
        assert!((a1.log_spec - LOG_GOLDEN_SQ).abs() < 1e-12);
        let a2 = induced_action(&cat, 2).unwrap();
        assert_eq!(a2.action, im(vec![vec![1]]));
        assert!(a2.log_spec.abs() < 1e-15);
        let ph = im(vec![vec![2, 1, 0], vec![1, 1, 0], vec![0, 0, 1]]);
        assert!((induced_action(&ph, 1).unwrap().log_spec - LOG_GOLDEN_SQ).abs() < 1e-12);
        assert!(induced_action(&im(vec![vec![2, 1], vec![1, 2]]), 1).is_err());
        assert!(induced_action(&cat, 3).is_err());
    }

    #[test]
    fn unstable_dimension_examples() {
        let d = unstable_dimension(&im(vec![vec![2, 1], vec![1, 1]]));
        assert_eq!((d.unstable, d.center, d.stable), (1, 0, 1));
        let d = unstable_dimension(&im(vec![vec![2, 1, 0], vec![1, 1, 0], vec![0, 0, 1]]));
        assert_eq!((d.unstable, d.center, d.stable), (1, 1, 1));
        let d = unstable_dimension(&IntMatrix::identity(3));
        assert_eq!((d.unstable, d.center), (0, 3));
    }

    #[test]
    fn rhs_examples() {
        let cat = im(vec![vec![2, 1], vec![1, 1]]);
        let r = theorem2_rhs(&cat, 1).unwrap();
        assert!((r.value - LOG_GOLDEN_SQ).abs() < 1e-12);
        assert!(r.degree_is_unstable_dimension);
        // Inverse of the companion matrix of x³ − x² − 1.
        let c = im(vec![vec![0, 0, 1], vec![1, 0, 0], vec![0, 1, 1]]);
        let inv = c.inverse_unimodular().unwrap();
        let r = theorem2_rhs(&inv, 2).unwrap();
        assert!((r.value - 0.382_245_085_840_035_8).abs() < 1e-9, "{}", r.value);
        assert!(r.degree_is_unstable_dimension);
    }

    #[test]
    fn certificate() {
        let cat = im(vec![vec![2, 1], vec![1, 1]]);
        assert!(form_certificate(&cat, 1).unwrap().holds);
        assert!(!form_certificate(&IntMatrix::identity(2), 1).unwrap().holds);
    }
}
