//! Independent oracles shared by the integration tests.

#![allow(dead_code)]

pub mod suites;

use nalgebra::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const CAT: [[i64; 2]; 2] = [[2, 1], [1, 1]];

pub fn rows<const N: usize>(m: [[i64; N]; N]) -> Vec<Vec<i64>> {
    m.iter().map(|r| r.to_vec()).collect()
}

pub fn cat() -> Vec<Vec<i64>> {
    rows(CAT)
}

/// `[[2,1,0],[1,1,0],[0,0,1]]`: cat map times the identity circle.
pub fn t3() -> Vec<Vec<i64>> {
    rows([[2, 1, 0], [1, 1, 0], [0, 0, 1]])
}

/// Inverse of the companion matrix of `x³ − x² − 1`; two expanding
/// eigenvalues of modulus `1/√ρ` and one contracting one.
pub fn u2() -> Vec<Vec<i64>> {
    rows([[0, 1, 0], [-1, 0, 1], [1, 0, 0]])
}

/// Linear systems with integer entries and `|det| = 1`.
pub fn linear_systems() -> Vec<(&'static str, Vec<Vec<i64>>)> {
    vec![
        ("cat", cat()),
        ("cat_squared", rows([[5, 3], [3, 2]])),
        ("golden_flip", rows([[1, 1], [1, 0]])),
        ("trace_four", rows([[3, 1], [2, 1]])),
        ("identity", rows([[1, 0], [0, 1]])),
        ("t3", t3()),
        ("u2", u2()),
        ("symmetric_3", rows([[1, 1, 0], [1, 2, 1], [0, 1, 2]])),
        ("cat_plus_cat", rows([[2, 1, 0, 0], [1, 1, 0, 0], [0, 0, 3, 1], [0, 0, 2, 1]])),
        ("symmetric_4", rows([[2, 1, 0, 0], [1, 2, 1, 0], [0, 1, 2, 1], [0, 0, 1, 1]])),
    ]
}

fn matmul(a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = a.len();
    (0..n).map(|i| (0..n).map(|j| (0..n).map(|k| a[i][k] * b[k][j]).sum()).collect()).collect()
}

/// Characteristic polynomial `det(xI − A)` by Faddeev–LeVerrier, as
/// coefficients from `x^d` down to the constant term.
pub fn char_poly(a: &[Vec<i64>]) -> Vec<f64> {
    let n = a.len();
    let af: Vec<Vec<f64>> = a.iter().map(|r| r.iter().map(|&v| v as f64).collect()).collect();
    let mut coeffs = vec![1.0];
    let mut m = vec![vec![0.0; n]; n];
    let mut c = 1.0;
    for k in 1..=n {
        for (i, row) in m.iter_mut().enumerate() {
            row[i] += c;
        }
        let am = matmul(&af, &m);
        c = -(0..n).map(|i| am[i][i]).sum::<f64>() / k as f64;
        coeffs.push(c);
        m = am;
    }
    coeffs
}

/// All complex roots of a monic polynomial by Durand–Kerner iteration.
pub fn durand_kerner(coeffs: &[f64]) -> Vec<Complex<f64>> {
    let d = coeffs.len() - 1;
    let eval = |z: Complex<f64>| coeffs.iter().fold(Complex::new(0.0, 0.0), |acc, &c| acc * z + c);
    let seed = Complex::new(0.4, 0.9);
    let bound = 1.0 + coeffs[1..].iter().fold(0.0f64, |m, c| m.max(c.abs()));
    let mut roots: Vec<Complex<f64>> = (0..d).map(|k| seed.powu(k as u32) * bound).collect();
    for _ in 0..2000 {
        let mut delta: f64 = 0.0;
        for i in 0..d {
            let mut denom = Complex::new(1.0, 0.0);
            for j in 0..d {
                if i != j {
                    denom *= roots[i] - roots[j];
                }
            }
            let step = eval(roots[i]) / denom;
            roots[i] -= step;
            delta = delta.max(step.norm());
        }
        if delta < 1e-15 {
            break;
        }
    }
    // Newton polish on the original polynomial.
    let deriv: Vec<f64> = coeffs[..d].iter().enumerate().map(|(k, &c)| c * (d - k) as f64).collect();
    let eval_d = |z: Complex<f64>| deriv.iter().fold(Complex::new(0.0, 0.0), |acc, &c| acc * z + c);
    for r in &mut roots {
        for _ in 0..3 {
            let dv = eval_d(*r);
            if dv.norm() > 1e-300 {
                *r -= eval(*r) / dv;
            }
        }
    }
    roots
}

/// Eigenvalue moduli in descending order.
pub fn moduli(a: &[Vec<i64>]) -> Vec<f64> {
    let mut m: Vec<f64> = durand_kerner(&char_poly(a)).iter().map(|z| z.norm()).collect();
    m.sort_by(|x, y| y.total_cmp(x));
    m
}

/// Sum of the `u` largest log moduli.
pub fn top_log_sum(a: &[Vec<i64>], u: usize) -> f64 {
    moduli(a).iter().take(u).map(|m| m.ln()).sum()
}

/// Random integer matrix with `|det| = 1`, built as a product of
/// elementary row operations and a sign flip.
pub fn random_unimodular(rng: &mut ChaCha8Rng, d: usize) -> Vec<Vec<i64>> {
    let mut m: Vec<Vec<i64>> = (0..d).map(|i| (0..d).map(|j| i64::from(i == j)).collect()).collect();
    for _ in 0..(3 * d) {
        let i = rng.random_range(0..d);
        let mut j = rng.random_range(0..d);
        while j == i {
            j = rng.random_range(0..d);
        }
        let k: i64 = if rng.random_bool(0.5) { 1 } else { -1 };
        let src = m[j].clone();
        for (v, s) in m[i].iter_mut().zip(src) {
            *v += k * s;
        }
    }
    if rng.random_bool(0.5) {
        m[0].iter_mut().for_each(|v| *v = -*v);
    }
    m
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
