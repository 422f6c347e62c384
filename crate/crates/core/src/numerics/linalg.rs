//! Small dense symmetric linear algebra.
//!
//! Everything here works on [`SymMatrix`], a full row-major `d × d` store whose
//! symmetry is enforced on construction. Dimensions in this crate stay small
//! (a kernel menu rarely exceeds a dozen entries) so the algorithms favour
//! determinism and accuracy over asymptotic speed: eigendecompositions use
//! cyclic Jacobi rotations with a fixed sweep order.

use crate::error::{Error, Result};

/// Condition number above which a covariance is treated as singular.
pub const DEFAULT_COND_THRESHOLD: f64 = 1e10;

/// Largest dimension accepted by [`sym_eigen`].
pub const MAX_JACOBI_DIM: usize = 64;

const MAX_SWEEPS: usize = 100;

/// A real symmetric matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    dim: usize,
    data: Vec<f64>,
}

impl SymMatrix {
    pub fn zeros(dim: usize) -> Self {
        assert!(dim >= 1, "SymMatrix requires dim >= 1");
        SymMatrix {
            dim,
            data: vec![0.0; dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.data[i * dim + i] = 1.0;
        }
        m
    }

    pub fn from_diag(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &v) in diag.iter().enumerate() {
            m.data[i * diag.len() + i] = v;
        }
        m
    }

    /// Builds a matrix from rows, symmetrizing as `(A + Aᵀ)/2`.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.len();
        if dim == 0 {
            return Err(Error::domain("matrix must have at least one row"));
        }
        for r in rows {
            if r.len() != dim {
                return Err(Error::DimensionMismatch(r.len(), dim));
            }
        }
        Ok(Self::from_fn(dim, |i, j| 0.5 * (rows[i][j] + rows[j][i])))
    }

    /// Builds a matrix from `f(i, j)` evaluated on the upper triangle.
    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            for j in i..dim {
                let v = f(i, j);
                m.data[i * dim + j] = v;
                m.data[j * dim + i] = v;
            }
        }
        m
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.dim + j]
    }

    /// Sets both `(i, j)` and `(j, i)`.
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.dim + j] = v;
        self.data[j * self.dim + i] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.dim).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn diag(&self) -> Vec<f64> {
        (0..self.dim).map(|i| self.get(i, i)).collect()
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        debug_assert_eq!(v.len(), self.dim);
        (0..self.dim).map(|i| dot(self.row(i), v)).collect()
    }

    /// `vᵀ M v`.
    pub fn quad_form(&self, v: &[f64]) -> f64 {
        dot(v, &self.mul_vec(v))
    }

    /// Plain matrix product; the result is symmetrized.
    pub fn mul(&self, other: &SymMatrix) -> SymMatrix {
        let d = self.dim;
        let mut full = vec![0.0; d * d];
        for i in 0..d {
            for k in 0..d {
                let a = self.get(i, k);
                if a == 0.0 {
                    continue;
                }
                for j in 0..d {
                    full[i * d + j] += a * other.get(k, j);
                }
            }
        }
        SymMatrix::from_fn(d, |i, j| 0.5 * (full[i * d + j] + full[j * d + i]))
    }

    /// Unsymmetrized product, for residual checks.
    pub fn mul_full(&self, other: &SymMatrix) -> Vec<Vec<f64>> {
        let d = self.dim;
        (0..d)
            .map(|i| {
                (0..d)
                    .map(|j| (0..d).map(|k| self.get(i, k) * other.get(k, j)).sum())
                    .collect()
            })
            .collect()
    }

    pub fn add_ridge(&self, lambda: f64) -> SymMatrix {
        let mut m = self.clone();
        for i in 0..self.dim {
            m.data[i * self.dim + i] += lambda;
        }
        m
    }

    pub fn scale(&self, c: f64) -> SymMatrix {
        SymMatrix {
            dim: self.dim,
            data: self.data.iter().map(|v| v * c).collect(),
        }
    }

    /// Principal submatrix on `idx`.
    pub fn submatrix(&self, idx: &[usize]) -> SymMatrix {
        SymMatrix::from_fn(idx.len(), |a, b| self.get(idx[a], idx[b]))
    }

    /// `Π M Π` where `Π` keeps the coordinates in `idx` and zeroes the rest.
    pub fn project(&self, idx: &[usize]) -> SymMatrix {
        let mut keep = vec![false; self.dim];
        for &i in idx {
            keep[i] = true;
        }
        SymMatrix::from_fn(self.dim, |i, j| {
            if keep[i] && keep[j] {
                self.get(i, j)
            } else {
                0.0
            }
        })
    }

    /// Cholesky factor, or `None` when a pivot is not strictly positive.
    pub fn cholesky(&self) -> Option<Cholesky> {
        let d = self.dim;
        let mut l = vec![0.0; d * d];
        for j in 0..d {
            let mut s = self.get(j, j);
            for k in 0..j {
                s -= l[j * d + k] * l[j * d + k];
            }
            if !(s > 0.0) || !s.is_finite() {
                return None;
            }
            let ljj = s.sqrt();
            l[j * d + j] = ljj;
            for i in (j + 1)..d {
                let mut s = self.get(i, j);
                for k in 0..j {
                    s -= l[i * d + k] * l[j * d + k];
                }
                l[i * d + j] = s / ljj;
            }
        }
        Some(Cholesky { dim: d, lower: l })
    }
}

/// Lower-triangular factor `L` with `M = L Lᵀ`.
#[derive(Debug, Clone)]
pub struct Cholesky {
    dim: usize,
    lower: Vec<f64>,
}

impl Cholesky {
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let d = self.dim;
        let mut y = b.to_vec();
        for i in 0..d {
            let mut s = y[i];
            for k in 0..i {
                s -= self.lower[i * d + k] * y[k];
            }
            y[i] = s / self.lower[i * d + i];
        }
        for i in (0..d).rev() {
            let mut s = y[i];
            for k in (i + 1)..d {
                s -= self.lower[k * d + i] * y[k];
            }
            y[i] = s / self.lower[i * d + i];
        }
        y
    }

    /// `L z`, used to colour standard-normal draws.
    pub fn mul_lower(&self, z: &[f64]) -> Vec<f64> {
        let d = self.dim;
        (0..d)
            .map(|i| (0..=i).map(|k| self.lower[i * d + k] * z[k]).sum())
            .collect()
    }
}

/// Eigenvalues in ascending order with matching orthonormal eigenvectors.
#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    pub eigenvalues: Vec<f64>,
    /// Column-major: eigenvector `k` occupies `vectors[k*d..(k+1)*d]`.
    vectors: Vec<f64>,
}

impl EigenDecomposition {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn vector(&self, k: usize) -> &[f64] {
        let d = self.dim();
        &self.vectors[k * d..(k + 1) * d]
    }

    /// `Σ_k f(λ_k) v_k v_kᵀ`.
    pub fn reconstruct_with(&self, f: impl Fn(f64) -> f64) -> SymMatrix {
        let d = self.dim();
        let weights: Vec<f64> = self.eigenvalues.iter().map(|&l| f(l)).collect();
        SymMatrix::from_fn(d, |i, j| {
            (0..d)
                .filter(|&k| weights[k] != 0.0)
                .map(|k| weights[k] * self.vector(k)[i] * self.vector(k)[j])
                .sum()
        })
    }

    pub fn reconstruct(&self) -> SymMatrix {
        self.reconstruct_with(|l| l)
    }

    pub fn max_eigenvalue(&self) -> f64 {
        *self.eigenvalues.last().expect("non-empty decomposition")
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues[0]
    }

    /// `λ_max / λ_min`; infinite when `λ_min ≤ 0`.
    pub fn condition_number(&self) -> f64 {
        let lo = self.min_eigenvalue();
        let hi = self.max_eigenvalue();
        if lo <= 0.0 || hi <= 0.0 {
            f64::INFINITY
        } else {
            hi / lo
        }
    }
}

/// Cyclic Jacobi eigendecomposition.
pub fn sym_eigen(m: &SymMatrix) -> Result<EigenDecomposition> {
    let d = m.dim();
    if d > MAX_JACOBI_DIM {
        return Err(Error::Capacity(format!(
            "Jacobi eigendecomposition supports d <= {MAX_JACOBI_DIM}, got {d}"
        )));
    }
    if !m.is_finite() {
        return Err(Error::domain("matrix has non-finite entries"));
    }
    let mut a = m.data.clone();
    let mut v = vec![0.0; d * d];
    for i in 0..d {
        v[i * d + i] = 1.0;
    }

    let total_sq: f64 = a.iter().map(|x| x * x).sum();
    let mut converged = d == 1 || total_sq == 0.0;
    let mut sweep = 0;
    while !converged {
        if sweep == MAX_SWEEPS {
            return Err(Error::NumericalFailure(format!(
                "Jacobi eigendecomposition did not converge in {MAX_SWEEPS} sweeps"
            )));
        }
        sweep += 1;
        for p in 0..d - 1 {
            for q in (p + 1)..d {
                let apq = a[p * d + q];
                if apq == 0.0 {
                    continue;
                }
                let app = a[p * d + p];
                let aqq = a[q * d + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = if theta.is_finite() {
                    theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
                } else {
                    0.0
                };
                if t == 0.0 {
                    a[p * d + q] = 0.0;
                    a[q * d + p] = 0.0;
                    continue;
                }
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..d {
                    let akp = a[k * d + p];
                    let akq = a[k * d + q];
                    a[k * d + p] = c * akp - s * akq;
                    a[k * d + q] = s * akp + c * akq;
                }
                for k in 0..d {
                    let apk = a[p * d + k];
                    let aqk = a[q * d + k];
                    a[p * d + k] = c * apk - s * aqk;
                    a[q * d + k] = s * apk + c * aqk;
                }
                a[p * d + q] = 0.0;
                a[q * d + p] = 0.0;
                for k in 0..d {
                    let vkp = v[k * d + p];
                    let vkq = v[k * d + q];
                    v[k * d + p] = c * vkp - s * vkq;
                    v[k * d + q] = s * vkp + c * vkq;
                }
            }
        }
        let off: f64 = (0..d)
            .flat_map(|i| (0..d).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i * d + j] * a[i * d + j])
            .sum();
        converged = off <= 1e-30 * total_sq;
    }

    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&i, &j| a[i * d + i].total_cmp(&a[j * d + j]));
    let eigenvalues = order.iter().map(|&i| a[i * d + i]).collect();
    let mut vectors = Vec::with_capacity(d * d);
    for &col in &order {
        vectors.extend((0..d).map(|row| v[row * d + col]));
    }
    Ok(EigenDecomposition {
        eigenvalues,
        vectors,
    })
}

pub fn sym_inverse(m: &SymMatrix) -> Result<SymMatrix> {
    sym_inverse_with(m, DEFAULT_COND_THRESHOLD)
}

/// Inverse through the eigendecomposition; refuses matrices whose condition
/// number exceeds `cond_threshold`.
pub fn sym_inverse_with(m: &SymMatrix, cond_threshold: f64) -> Result<SymMatrix> {
    let eig = sym_eigen(m)?;
    let cond = eig.condition_number();
    if !(cond <= cond_threshold) {
        return Err(Error::Singular { cond });
    }
    Ok(eig.reconstruct_with(|l| 1.0 / l))
}

/// Moore–Penrose pseudoinverse. Eigenvalues at or below `rank_tol · λ_max`
/// are treated as zero; returns the numerical rank alongside.
pub fn sym_pseudoinverse(m: &SymMatrix, rank_tol: f64) -> Result<(SymMatrix, usize)> {
    let eig = sym_eigen(m)?;
    Ok(pseudoinverse_from(&eig, rank_tol))
}

pub(crate) fn pseudoinverse_from(eig: &EigenDecomposition, rank_tol: f64) -> (SymMatrix, usize) {
    let cutoff = rank_tol * eig.max_eigenvalue().max(0.0);
    let rank = eig
        .eigenvalues
        .iter()
        .filter(|&&l| l > cutoff && l > 0.0)
        .count();
    let pinv = eig.reconstruct_with(|l| if l > cutoff && l > 0.0 { 1.0 / l } else { 0.0 });
    (pinv, rank)
}

/// Numerical rank of a positive semidefinite matrix.
pub fn sym_rank(m: &SymMatrix, rank_tol: f64) -> Result<usize> {
    let eig = sym_eigen(m)?;
    let cutoff = rank_tol * eig.max_eigenvalue().max(0.0);
    Ok(eig
        .eigenvalues
        .iter()
        .filter(|&&l| l > cutoff && l > 0.0)
        .count())
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn max_abs_diff(a: &SymMatrix, b: &SymMatrix) -> f64 {
        (0..a.dim())
            .flat_map(|i| (0..a.dim()).map(move |j| (i, j)))
            .map(|(i, j)| (a.get(i, j) - b.get(i, j)).abs())
            .fold(0.0, f64::max)
    }

    fn lcg_matrix(d: usize, seed: u64) -> SymMatrix {
        let mut s = seed;
        let mut next = move || {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((s >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
        };
        let rows: Vec<Vec<f64>> = (0..d).map(|_| (0..d).map(|_| next()).collect()).collect();
        SymMatrix::from_rows(&rows).unwrap()
    }

    #[test]
    fn identity_eigenvalues() {
        let e = sym_eigen(&SymMatrix::identity(2)).unwrap();
        assert_eq!(e.eigenvalues, vec![1.0, 1.0]);
    }

    #[test]
    fn diagonal_eigen_sorted_ascending() {
        let e = sym_eigen(&SymMatrix::from_diag(&[4.0, 1.0])).unwrap();
        assert_eq!(e.eigenvalues, vec![1.0, 4.0]);
        assert!((e.vector(0)[1].abs() - 1.0).abs() < 1e-15);
        assert!((e.vector(1)[0].abs() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn random_reconstruction_and_orthonormality() {
        for seed in 0..20 {
            let m = lcg_matrix(5, seed);
            let e = sym_eigen(&m).unwrap();
            let err = max_abs_diff(&e.reconstruct(), &m);
            assert!(err < 1e-10 * (1.0 + m.max_abs()), "reconstruction {err}");
            for i in 0..5 {
                for j in 0..5 {
                    let g = dot(e.vector(i), e.vector(j));
                    let want = if i == j { 1.0 } else { 0.0 };
                    assert!((g - want).abs() < 1e-10);
                }
            }
            assert!(e.eigenvalues.windows(2).all(|w| w[0] <= w[1]));
        }
    }

    #[test]
    fn inverse_cases() {
        let inv = sym_inverse(&SymMatrix::identity(3)).unwrap();
        assert!(max_abs_diff(&inv, &SymMatrix::identity(3)) < 1e-15);
        let inv = sym_inverse(&SymMatrix::from_diag(&[2.0, 4.0])).unwrap();
        assert!(max_abs_diff(&inv, &SymMatrix::from_diag(&[0.5, 0.25])) < 1e-15);
    }

    #[test]
    fn inverse_of_random_spd_multiplies_back() {
        for seed in 0..10 {
            let a = lcg_matrix(4, seed + 100);
            let spd = a.mul(&a).add_ridge(0.5);
            let inv = sym_inverse(&spd).unwrap();
            let prod = spd.mul_full(&inv);
            for (i, row) in prod.iter().enumerate() {
                for (j, v) in row.iter().enumerate() {
                    let want = if i == j { 1.0 } else { 0.0 };
                    assert!((v - want).abs() < 1e-8);
                }
            }
        }
    }

    #[test]
    fn singular_inverse_reports_condition_number() {
        match sym_inverse(&SymMatrix::from_diag(&[1.0, 1e-14])) {
            Err(Error::Singular { cond }) => assert!(cond > 1e13),
            other => panic!("expected singular error, got {other:?}"),
        }
        assert!(matches!(
            sym_inverse(&SymMatrix::from_diag(&[1.0, 0.0])),
            Err(Error::Singular { .. })
        ));
    }

    #[test]
    fn pseudoinverse_cases() {
        let (p, r) = sym_pseudoinverse(&SymMatrix::from_diag(&[1.0, 0.0]), 1e-12).unwrap();
        assert_eq!(r, 1);
        assert!(max_abs_diff(&p, &SymMatrix::from_diag(&[1.0, 0.0])) < 1e-15);
        let (p, r) = sym_pseudoinverse(&SymMatrix::identity(3), 1e-12).unwrap();
        assert_eq!(r, 3);
        assert!(max_abs_diff(&p, &SymMatrix::identity(3)) < 1e-15);
        // Π Σ Π with Σ = I and active set {1, 3} (0-based {0, 2}).
        let proj = SymMatrix::identity(3).project(&[0, 2]);
        let (p, r) = sym_pseudoinverse(&proj, 1e-12).unwrap();
        assert_eq!(r, 2);
        assert!(max_abs_diff(&p, &proj) < 1e-15);
    }

    #[test]
    fn pseudoinverse_moore_penrose_property() {
        for seed in 0..10 {
            let a = lcg_matrix(4, seed + 7);
            // rank-2 PSD matrix
            let b: Vec<Vec<f64>> = (0..4).map(|i| vec![a.get(i, 0), a.get(i, 1)]).collect();
            let m = SymMatrix::from_fn(4, |i, j| b[i][0] * b[j][0] + b[i][1] * b[j][1]);
            let (p, r) = sym_pseudoinverse(&m, 1e-10).unwrap();
            assert_eq!(r, 2);
            let pmp = p.mul(&m).mul(&p);
            assert!(max_abs_diff(&pmp, &p) < 1e-8 * (1.0 + p.max_abs()));
        }
    }

    #[test]
    fn cholesky_solves() {
        let a = lcg_matrix(5, 3);
        let spd = a.mul(&a).add_ridge(1.0);
        let b = vec![1.0, -2.0, 0.5, 3.0, 0.0];
        let x = spd.cholesky().unwrap().solve(&b);
        let back = spd.mul_vec(&x);
        for (u, v) in back.iter().zip(&b) {
            assert!((u - v).abs() < 1e-12);
        }
        assert!(SymMatrix::from_diag(&[1.0, -1.0]).cholesky().is_none());
    }
}
