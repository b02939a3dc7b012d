//! Small dense linear algebra shared by every estimator.
//!
//! Subspaces are always carried as orthonormal frames. Cocycles are
//! renormalised with a QR factorisation whose triangular factor has a
//! positive diagonal, so the logarithms of that diagonal are the one-step
//! growth rates.

use std::fmt;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub type Mat = DMatrix<f64>;

/// Columns whose residual norm falls below this fraction of the largest
/// input column are treated as linearly dependent.
const RANK_TOL: f64 = 1e-13;

/// Orthonormal `k`-frame in `R^d`.
#[derive(Clone, Debug, PartialEq)]
pub struct Subspace {
    frame: Mat,
}

impl Subspace {
    /// Orthonormalises the columns of `m`; their span must have full rank.
    pub fn from_frame(m: Mat) -> Result<Self> {
        let (q, _) = qr(&m)?;
        Ok(Subspace { frame: q })
    }

    /// Span of the given vectors (each of length `d`).
    pub fn span(vectors: &[Vec<f64>]) -> Result<Self> {
        let d = vectors.first().map(Vec::len).unwrap_or(0);
        if d == 0 || vectors.iter().any(|v| v.len() != d) {
            return Err(Error::Precondition("span needs equal-length nonempty vectors".into()));
        }
        Self::from_frame(Mat::from_fn(d, vectors.len(), |i, j| vectors[j][i]))
    }

    /// Span of the standard basis vectors with the given indices.
    pub fn coordinate(dim: usize, axes: &[usize]) -> Self {
        let mut m = Mat::zeros(dim, axes.len());
        for (j, &a) in axes.iter().enumerate() {
            m[(a, j)] = 1.0;
        }
        Subspace { frame: m }
    }

    pub(crate) fn from_orthonormal(frame: Mat) -> Self {
        Subspace { frame }
    }

    pub fn frame(&self) -> &Mat {
        &self.frame
    }

    pub fn ambient_dim(&self) -> usize {
        self.frame.nrows()
    }

    pub fn rank(&self) -> usize {
        self.frame.ncols()
    }

    /// Largest deviation of `QᵀQ` from the identity.
    pub fn orthonormality_defect(&self) -> f64 {
        let g = self.frame.transpose() * &self.frame;
        let k = self.rank();
        let mut worst = 0.0f64;
        for i in 0..k {
            for j in 0..k {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((g[(i, j)] - target).abs());
            }
        }
        worst
    }

    /// Orthogonal projection of `v` onto the subspace.
    pub fn project(&self, v: &[f64]) -> Vec<f64> {
        let coeffs = self.frame.transpose() * nalgebra::DVector::from_column_slice(v);
        (&self.frame * coeffs).iter().copied().collect()
    }
}

/// `Mat = Q·R` with `Q` orthonormal (`d×k`) and `R` upper triangular with a
/// strictly positive diagonal.
///
/// Classical Gram–Schmidt with one reorthogonalisation pass.
pub fn qr(m: &Mat) -> Result<(Mat, Mat)> {
    let (d, k) = m.shape();
    if k == 0 || d == 0 {
        return Err(Error::Degenerate("empty matrix".into()));
    }
    if k > d {
        return Err(Error::Degenerate(format!("{k} columns in R^{d}")));
    }
    let scale = (0..k).map(|j| m.column(j).norm()).fold(0.0, f64::max);
    if scale == 0.0 || !scale.is_finite() {
        return Err(Error::Degenerate("zero or non-finite matrix".into()));
    }
    let mut q = Mat::zeros(d, k);
    let mut r = Mat::zeros(k, k);
    for j in 0..k {
        let mut v = m.column(j).clone_owned();
        for _pass in 0..2 {
            for i in 0..j {
                let c = q.column(i).dot(&v);
                r[(i, j)] += c;
                v.axpy(-c, &q.column(i), 1.0);
            }
        }
        let norm = v.norm();
        if norm.is_nan() || norm <= RANK_TOL * scale {
            return Err(Error::Degenerate(format!(
                "column {j} is dependent (residual {norm:.3e}, scale {scale:.3e})"
            )));
        }
        r[(j, j)] = norm;
        q.set_column(j, &(v / norm));
    }
    Ok((q, r))
}

pub fn singular_values(m: &Mat) -> Vec<f64> {
    let mut s: Vec<f64> = m.clone().singular_values().iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Operator norm of `A` restricted to `F`.
pub fn restricted_expansion(a: &Mat, f: &Subspace) -> f64 {
    singular_values(&(a * f.frame()))[0]
}

/// Minimal expansion (co-norm) of `A` restricted to `F`.
pub fn restricted_conorm(a: &Mat, f: &Subspace) -> f64 {
    *singular_values(&(a * f.frame())).last().unwrap()
}

/// `u`-volume expansion factor of `A` on `F`: `√det((AQ)ᵀ(AQ))`.
pub fn volume_expansion(a: &Mat, f: &Subspace) -> Result<f64> {
    push_with_log_volume(a, f).map(|(_, lv)| lv.exp())
}

/// Image of `F` under `A`, re-orthonormalised.
pub fn push_subspace(a: &Mat, f: &Subspace) -> Result<Subspace> {
    push_with_log_volume(a, f).map(|(s, _)| s)
}

/// One cocycle step: the image subspace together with the log of the volume
/// expansion, both read off a single QR factorisation.
pub fn push_with_log_volume(a: &Mat, f: &Subspace) -> Result<(Subspace, f64)> {
    let (q, r) = qr(&(a * f.frame()))?;
    let log_vol = (0..r.nrows()).map(|i| r[(i, i)].ln()).sum();
    Ok((Subspace { frame: q }, log_vol))
}

/// Largest principal angle between two subspaces of equal rank, in
/// `[0, π/2]`.
///
/// Computed as `atan2(sin, cos)` so that both tiny and near-orthogonal
/// angles keep full relative accuracy.
pub fn subspace_angle(f: &Subspace, g: &Subspace) -> Result<f64> {
    if f.rank() != g.rank() || f.ambient_dim() != g.ambient_dim() {
        return Err(Error::Precondition(format!(
            "angle needs equal ranks, got {} and {}",
            f.rank(),
            g.rank()
        )));
    }
    let cross = f.frame().transpose() * g.frame();
    let cos = singular_values(&cross).last().copied().unwrap_or(0.0).min(1.0);
    let residual = g.frame() - f.frame() * &cross;
    let sin = singular_values(&residual)[0].min(1.0);
    Ok(sin.atan2(cos))
}

/// Smallest principal angle between two subspaces of arbitrary ranks.
pub fn minimal_angle(f: &Subspace, g: &Subspace) -> f64 {
    let cross = f.frame().transpose() * g.frame();
    let cos = singular_values(&cross)[0].min(1.0);
    cos.acos()
}

/// Lexicographically ordered `k`-subsets of `{0, …, d−1}`.
pub fn k_subsets(d: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, d: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..d {
            if d - i < k - cur.len() {
                break;
            }
            cur.push(i);
            rec(i + 1, d, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if k <= d {
        rec(0, d, k, &mut Vec::with_capacity(k), &mut out);
    }
    out
}

/// Matrix of `k×k` minors of a square base matrix.
#[derive(Clone, Debug)]
pub struct ExteriorMatrix {
    pub source_dim: usize,
    pub degree: usize,
    /// Row/column labels, lexicographic.
    pub subsets: Vec<Vec<usize>>,
    pub matrix: Mat,
}

pub fn exterior_power(a: &Mat, k: usize) -> Result<ExteriorMatrix> {
    let d = a.nrows();
    if a.ncols() != d {
        return Err(Error::Precondition("exterior power needs a square matrix".into()));
    }
    if k == 0 || k > d {
        return Err(Error::Precondition(format!("degree {k} outside 1..={d}")));
    }
    let subsets = k_subsets(d, k);
    let n = subsets.len();
    let mut matrix = Mat::zeros(n, n);
    for (i, rows) in subsets.iter().enumerate() {
        for (j, cols) in subsets.iter().enumerate() {
            let sub = Mat::from_fn(k, k, |r, c| a[(rows[r], cols[c])]);
            matrix[(i, j)] = sub.determinant();
        }
    }
    Ok(ExteriorMatrix { source_dim: d, degree: k, subsets, matrix })
}

/// Spectral radius of a square matrix.
///
/// Tries, in order: vector power iteration with a Rayleigh-quotient
/// residual test; two-dimensional subspace iteration (dominant complex
/// conjugate or `±λ` pairs); and finally the Gelfand limit
/// `‖A^{2^k}‖^{2^{-k}}` by repeated normalised squaring, which also covers
/// ties of three or more moduli and Jordan blocks.
pub fn spectral_radius(a: &Mat) -> Result<f64> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::Precondition("spectral radius needs a square matrix".into()));
    }
    if n == 0 {
        return Ok(0.0);
    }
    let scale = a.norm();
    if scale == 0.0 {
        return Ok(0.0);
    }
    if n == 1 {
        return Ok(a[(0, 0)].abs());
    }
    let b = a / scale;
    if let Some(r) = power_iteration(&b) {
        return Ok(r * scale);
    }
    if let Some(r) = pair_iteration(&b) {
        return Ok(r * scale);
    }
    gelfand(&b).map(|r| r * scale).map_err(|e| match e {
        Error::SpectralRadius { bound } => Error::SpectralRadius { bound: bound * scale },
        e => e,
    })
}

const POWER_MAX_ITERS: usize = 3000;

fn start_vector(n: usize, cols: usize) -> Mat {
    // Deterministic, generic start (golden-ratio sequence).
    Mat::from_fn(n, cols, |i, j| {
        let t = ((i * cols + j + 1) as f64 * 0.618_033_988_749_894_9).fract();
        0.5 + t
    })
}

fn power_iteration(b: &Mat) -> Option<f64> {
    let n = b.nrows();
    let mut v = start_vector(n, 1);
    v /= v.norm();
    for _ in 0..POWER_MAX_ITERS {
        let w = b * &v;
        let theta = v.dot(&w);
        let wn = w.norm();
        if wn == 0.0 {
            return None;
        }
        let residual = (&w - &v * theta).norm();
        // Safeguard: the Rayleigh quotient must also match the growth of w.
        if residual <= 1e-14 * wn.max(1e-300) && (theta.abs() - wn).abs() <= 1e-12 * wn {
            return Some(theta.abs());
        }
        v = w / wn;
    }
    None
}

fn pair_iteration(b: &Mat) -> Option<f64> {
    let n = b.nrows();
    let (mut q, _) = qr(&start_vector(n, 2)).ok()?;
    for _ in 0..POWER_MAX_ITERS {
        let z = b * &q;
        let h = q.transpose() * &z;
        let zn = z.norm();
        if zn == 0.0 {
            return None;
        }
        let residual = (&z - &q * &h).norm();
        if residual <= 1e-13 * zn {
            let tr = h[(0, 0)] + h[(1, 1)];
            let det = h[(0, 0)] * h[(1, 1)] - h[(0, 1)] * h[(1, 0)];
            let disc = tr * tr - 4.0 * det;
            // Near-double roots are ill-conditioned here (error ~ √ε);
            // leave them to the Gelfand limit.
            if disc.abs() <= 1e-10 * h.norm_squared() {
                return None;
            }
            let r = if disc < 0.0 {
                det.abs().sqrt()
            } else {
                let s = disc.sqrt();
                ((tr + s) / 2.0).abs().max(((tr - s) / 2.0).abs())
            };
            return Some(r);
        }
        q = qr(&z).ok()?.0;
    }
    None
}

fn gelfand(b: &Mat) -> Result<f64> {
    let mut m = b.clone();
    // Invariant: b^(2^k) = exp(log_scale) * m with ‖m‖ = 1.
    let mut log_scale = 0.0f64;
    let mut pow = 1.0f64;
    let mut prev = f64::NAN;
    let mut est = 1.0;
    for _ in 0..64 {
        m = &m * &m;
        pow *= 2.0;
        let s = m.norm();
        if s == 0.0 || !s.is_finite() {
            return if s == 0.0 { Ok(0.0) } else { Err(Error::SpectralRadius { bound: est }) };
        }
        log_scale = 2.0 * log_scale + s.ln();
        m /= s;
        est = (log_scale / pow).exp();
        if (est - prev).abs() <= 1e-13 * est {
            return Ok(est);
        }
        prev = est;
    }
    if (est - prev).abs() <= 1e-9 * est {
        Ok(est)
    } else {
        Err(Error::SpectralRadius { bound: est })
    }
}

/// Square integer matrix, row-major.
#[derive(Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<i64>>", into = "Vec<Vec<i64>>")]
pub struct IntMatrix {
    n: usize,
    data: Vec<i64>,
}

impl IntMatrix {
    pub fn from_rows(rows: Vec<Vec<i64>>) -> std::result::Result<Self, String> {
        let n = rows.len();
        if n == 0 {
            return Err("matrix is empty".into());
        }
        if rows.iter().any(|r| r.len() != n) {
            return Err(format!("matrix is not square ({n} rows)"));
        }
        Ok(IntMatrix { n, data: rows.into_iter().flatten().collect() })
    }

    pub fn identity(n: usize) -> Self {
        let mut data = vec![0; n * n];
        for i in 0..n {
            data[i * n + i] = 1;
        }
        IntMatrix { n, data }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> i64 {
        self.data[i * self.n + j]
    }

    pub fn rows(&self) -> Vec<Vec<i64>> {
        self.data.chunks(self.n).map(<[i64]>::to_vec).collect()
    }

    pub fn to_mat(&self) -> Mat {
        Mat::from_fn(self.n, self.n, |i, j| self.get(i, j) as f64)
    }

    pub fn transpose(&self) -> Self {
        let n = self.n;
        let mut data = vec![0; n * n];
        for i in 0..n {
            for j in 0..n {
                data[j * n + i] = self.get(i, j);
            }
        }
        IntMatrix { n, data }
    }

    pub fn mul(&self, other: &IntMatrix) -> Self {
        let n = self.n;
        assert_eq!(n, other.n, "dimension mismatch");
        let mut data = vec![0i64; n * n];
        for i in 0..n {
            for k in 0..n {
                let a = self.get(i, k);
                if a == 0 {
                    continue;
                }
                for j in 0..n {
                    data[i * n + j] += a * other.get(k, j);
                }
            }
        }
        IntMatrix { n, data }
    }

    /// Exact determinant (fraction-free Bareiss elimination).
    pub fn det(&self) -> i128 {
        let idx: Vec<usize> = (0..self.n).collect();
        self.minor(&idx, &idx)
    }

    /// Exact determinant of the submatrix with the given rows and columns.
    pub fn minor(&self, rows: &[usize], cols: &[usize]) -> i128 {
        let k = rows.len();
        debug_assert_eq!(k, cols.len());
        if k == 0 {
            return 1;
        }
        let mut m: Vec<Vec<i128>> = rows
            .iter()
            .map(|&r| cols.iter().map(|&c| self.get(r, c) as i128).collect())
            .collect();
        let mut sign = 1i128;
        let mut prev = 1i128;
        for p in 0..k - 1 {
            if m[p][p] == 0 {
                match (p + 1..k).find(|&r| m[r][p] != 0) {
                    Some(r) => {
                        m.swap(p, r);
                        sign = -sign;
                    }
                    None => return 0,
                }
            }
            for i in p + 1..k {
                for j in p + 1..k {
                    m[i][j] = (m[i][j] * m[p][p] - m[i][p] * m[p][j]) / prev;
                }
            }
            prev = m[p][p];
        }
        sign * m[k - 1][k - 1]
    }

    /// Integer inverse, available exactly when `|det| = 1`.
    pub fn inverse_unimodular(&self) -> Option<IntMatrix> {
        let det = self.det();
        if det.abs() != 1 {
            return None;
        }
        let n = self.n;
        if n == 1 {
            return Some(IntMatrix { n, data: vec![det as i64] });
        }
        let mut data = vec![0i64; n * n];
        for i in 0..n {
            for j in 0..n {
                let rows: Vec<usize> = (0..n).filter(|&r| r != j).collect();
                let cols: Vec<usize> = (0..n).filter(|&c| c != i).collect();
                let cof = self.minor(&rows, &cols) * if (i + j) % 2 == 0 { 1 } else { -1 };
                data[i * n + j] = i64::try_from(cof * det).ok()?;
            }
        }
        Some(IntMatrix { n, data })
    }

    pub fn pow(&self, e: u32) -> IntMatrix {
        let mut out = IntMatrix::identity(self.n);
        for _ in 0..e {
            out = out.mul(self);
        }
        out
    }
}

impl TryFrom<Vec<Vec<i64>>> for IntMatrix {
    type Error = String;
    fn try_from(rows: Vec<Vec<i64>>) -> std::result::Result<Self, String> {
        IntMatrix::from_rows(rows)
    }
}

impl From<IntMatrix> for Vec<Vec<i64>> {
    fn from(m: IntMatrix) -> Self {
        m.rows()
    }
}

impl fmt::Debug for IntMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.rows())
    }
}

/// Exact matrix of `k×k` minors of an integer matrix.
pub fn exterior_power_int(a: &IntMatrix, k: usize) -> Result<IntMatrix> {
    let d = a.dim();
    if k == 0 || k > d {
        return Err(Error::Precondition(format!("degree {k} outside 1..={d}")));
    }
    let subsets = k_subsets(d, k);
    let n = subsets.len();
    let mut data = Vec::with_capacity(n * n);
    for rows in &subsets {
        for cols in &subsets {
            let m = a.minor(rows, cols);
            data.push(i64::try_from(m).map_err(|_| {
                Error::Precondition("minor overflows 64-bit integers".into())
            })?);
        }
    }
    Ok(IntMatrix { n, data })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, SQRT_2};

    fn m(rows: &[&[f64]]) -> Mat {
        Mat::from_fn(rows.len(), rows[0].len(), |i, j| rows[i][j])
    }

    const GOLDEN_SQ: f64 = 2.618_033_988_749_895; // (3+√5)/2

    #[test]
    fn qr_examples() {
        let id = Mat::identity(3, 2);
        let (q, r) = qr(&id).unwrap();
        assert!((q - id).norm() < 1e-15);
        assert!((r - Mat::identity(2, 2)).norm() < 1e-15);

        let (q, r) = qr(&m(&[&[2.0, 0.0], &[0.0, 3.0]])).unwrap();
        assert!((q - Mat::identity(2, 2)).norm() < 1e-15);
        assert!((r - m(&[&[2.0, 0.0], &[0.0, 3.0]])).norm() < 1e-15);

        let (q, r) = qr(&m(&[&[1.0], &[1.0]])).unwrap();
        assert!((q[(0, 0)] - 1.0 / SQRT_2).abs() < 1e-15);
        assert!((q[(1, 0)] - 1.0 / SQRT_2).abs() < 1e-15);
        assert!((r[(0, 0)] - SQRT_2).abs() < 1e-15);
    }

    #[test]
    fn qr_positive_diagonal_and_rank_error() {
        let a = m(&[&[-1.0, 2.0], &[0.5, -3.0], &[4.0, 1.0]]);
        let (q, r) = qr(&a).unwrap();
        assert!(r[(0, 0)] > 0.0 && r[(1, 1)] > 0.0);
        assert!((&q * &r - &a).norm() < 1e-14 * a.norm());
        let dep = m(&[&[1.0, 2.0], &[2.0, 4.0]]);
        assert!(matches!(qr(&dep), Err(Error::Degenerate(_))));
    }

    #[test]
    fn exterior_power_examples() {
        let cat = m(&[&[2.0, 1.0], &[1.0, 1.0]]);
        assert!((exterior_power(&cat, 1).unwrap().matrix - &cat).norm() < 1e-15);
        let e2 = exterior_power(&cat, 2).unwrap();
        assert_eq!(e2.matrix.shape(), (1, 1));
        assert!((e2.matrix[(0, 0)] - 1.0).abs() < 1e-14);

        let d = Mat::from_diagonal(&nalgebra::DVector::from_vec(vec![3.0, 2.0, 1.0]));
        let e = exterior_power(&d, 2).unwrap();
        assert_eq!(e.subsets, vec![vec![0, 1], vec![0, 2], vec![1, 2]]);
        let expect = Mat::from_diagonal(&nalgebra::DVector::from_vec(vec![6.0, 3.0, 2.0]));
        assert!((e.matrix - expect).norm() < 1e-14);
        assert!(exterior_power(&d, 0).is_err());
        assert!(exterior_power(&d, 4).is_err());
    }

    #[test]
    fn restricted_expansion_examples() {
        let a = m(&[&[3.0, 0.0], &[0.0, 1.0]]);
        assert!((restricted_expansion(&a, &Subspace::coordinate(2, &[0])) - 3.0).abs() < 1e-14);
        let diag = Subspace::span(&[vec![1.0, 1.0]]).unwrap();
        assert!((restricted_expansion(&a, &diag) - 5f64.sqrt()).abs() < 1e-14);
        assert!((restricted_expansion(&Mat::identity(2, 2), &diag) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn volume_expansion_examples() {
        let d = Mat::from_diagonal(&nalgebra::DVector::from_vec(vec![3.0, 2.0, 1.0]));
        let f = Subspace::coordinate(3, &[0, 1]);
        assert!((volume_expansion(&d, &f).unwrap() - 6.0).abs() < 1e-13);

        let (s, c) = (0.3f64.sin(), 0.3f64.cos());
        let rot = m(&[&[c, -s, 0.0], &[s, c, 0.0], &[0.0, 0.0, 1.0]]);
        let g = Subspace::span(&[vec![1.0, 2.0, 3.0], vec![0.0, 1.0, -1.0]]).unwrap();
        assert!((volume_expansion(&rot, &g).unwrap() - 1.0).abs() < 1e-14);

        let cat = m(&[&[2.0, 1.0], &[1.0, 1.0]]);
        let eu = Subspace::span(&[vec![GOLDEN_SQ - 1.0, 1.0]]).unwrap();
        assert!((volume_expansion(&cat, &eu).unwrap() - GOLDEN_SQ).abs() < 1e-13);
    }

    #[test]
    fn push_subspace_examples() {
        let e1 = Subspace::coordinate(2, &[0]);
        let a = m(&[&[2.0, 0.0], &[0.0, 1.0]]);
        let pushed = push_subspace(&Mat::identity(2, 2), &e1).unwrap();
        assert!(subspace_angle(&pushed, &e1).unwrap() < 1e-15);
        assert!(subspace_angle(&push_subspace(&a, &e1).unwrap(), &e1).unwrap() < 1e-15);
        let diag = Subspace::span(&[vec![1.0, 1.0]]).unwrap();
        let img = push_subspace(&a, &diag).unwrap();
        let expect = Subspace::span(&[vec![2.0, 1.0]]).unwrap();
        assert!(subspace_angle(&img, &expect).unwrap() < 1e-15);
    }

    #[test]
    fn angle_examples() {
        let e1 = Subspace::coordinate(2, &[0]);
        let e2 = Subspace::coordinate(2, &[1]);
        let diag = Subspace::span(&[vec![1.0, 1.0]]).unwrap();
        assert_eq!(subspace_angle(&e1, &e1).unwrap(), 0.0);
        assert!((subspace_angle(&e1, &e2).unwrap() - FRAC_PI_2).abs() < 1e-15);
        assert!((subspace_angle(&e1, &diag).unwrap() - FRAC_PI_4).abs() < 1e-15);
        let plane = Subspace::coordinate(3, &[0, 1]);
        assert!(subspace_angle(&e1, &plane).is_err());
        // Tiny angles keep relative accuracy.
        let tilted = Subspace::span(&[vec![1.0, 1e-12]]).unwrap();
        let ang = subspace_angle(&e1, &tilted).unwrap();
        assert!((ang - 1e-12).abs() < 1e-24);
    }

    #[test]
    fn spectral_radius_examples() {
        let cat = m(&[&[2.0, 1.0], &[1.0, 1.0]]);
        assert!((spectral_radius(&cat).unwrap() - GOLDEN_SQ).abs() < 1e-12);
        assert!((spectral_radius(&Mat::identity(4, 4)).unwrap() - 1.0).abs() < 1e-12);
        let d = Mat::from_diagonal(&nalgebra::DVector::from_vec(vec![6.0, 3.0, 2.0]));
        assert!((spectral_radius(&d).unwrap() - 6.0).abs() < 1e-12);
    }

    #[test]
    fn spectral_radius_hard_cases() {
        // Rotation: complex pair on the unit circle.
        let rot = m(&[&[0.0, -1.0], &[1.0, 0.0]]);
        assert!((spectral_radius(&rot).unwrap() - 1.0).abs() < 1e-12);
        // ±2 tie.
        let flip = m(&[&[0.0, 2.0], &[2.0, 0.0]]);
        assert!((spectral_radius(&flip).unwrap() - 2.0).abs() < 1e-12);
        // Jordan block.
        let jordan = m(&[&[1.0, 1.0], &[0.0, 1.0]]);
        assert!((spectral_radius(&jordan).unwrap() - 1.0).abs() < 1e-9);
        // Three-way tie: permutation scaled by 3.
        let perm = m(&[&[0.0, 3.0, 0.0], &[0.0, 0.0, 3.0], &[3.0, 0.0, 0.0]]);
        assert!((spectral_radius(&perm).unwrap() - 3.0).abs() < 1e-9);
        // Nilpotent.
        let nil = m(&[&[0.0, 1.0], &[0.0, 0.0]]);
        assert_eq!(spectral_radius(&nil).unwrap(), 0.0);
    }

    #[test]
    fn integer_matrix_algebra() {
        let a = IntMatrix::from_rows(vec![vec![2, 1, 0], vec![1, 1, 0], vec![0, 0, 1]]).unwrap();
        assert_eq!(a.det(), 1);
        let inv = a.inverse_unimodular().unwrap();
        assert_eq!(a.mul(&inv), IntMatrix::identity(3));
        let b = IntMatrix::from_rows(vec![vec![2, 1], vec![1, 2]]).unwrap();
        assert_eq!(b.det(), 3);
        assert!(b.inverse_unimodular().is_none());
        assert!(IntMatrix::from_rows(vec![vec![1, 2]]).is_err());
        let e = exterior_power_int(&a, 2).unwrap();
        let f = exterior_power(&a.to_mat(), 2).unwrap();
        assert!((e.to_mat() - f.matrix).norm() < 1e-12);
    }

    #[test]
    fn k_subsets_are_lexicographic() {
        assert_eq!(
            k_subsets(4, 2),
            vec![vec![0, 1], vec![0, 2], vec![0, 3], vec![1, 2], vec![1, 3], vec![2, 3]]
        );
        assert_eq!(k_subsets(3, 3), vec![vec![0, 1, 2]]);
    }
}
