//! Dense linear algebra for the small symmetric systems the estimators keep.
//!
//! Vectors are plain `[f64]` slices; the only matrix type is [`SymMatrix`],
//! a row-major `d x d` buffer that is re-symmetrized after every update.

use alloc::vec;
use alloc::vec::Vec;

use crate::math::{abs, sqrt};
use crate::{Error, Result};

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    sqrt(dot(a, a))
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// `y += alpha * x`
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Symmetric `d x d` matrix stored densely in row-major order.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    dim: usize,
    data: Vec<f64>,
}

impl SymMatrix {
    pub fn zeros(dim: usize) -> Self {
        SymMatrix {
            dim,
            data: vec![0.0; dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self::scaled_identity(dim, 1.0)
    }

    pub fn scaled_identity(dim: usize, scale: f64) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.data[i * dim + i] = scale;
        }
        m
    }

    pub fn diagonal(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, v) in diag.iter().enumerate() {
            m.data[i * diag.len() + i] = *v;
        }
        m
    }

    /// Builds a matrix from row-major entries, symmetrizing the input.
    ///
    /// Entries must be finite and symmetric to within `1e-9` (relative to the
    /// largest entry); anything else is reported as a corrupted buffer.
    pub fn from_row_major(dim: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != dim * dim {
            return Err(Error::LengthMismatch {
                left: data.len(),
                right: dim * dim,
            });
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        let mut m = SymMatrix { dim, data };
        let scale = m.data.iter().fold(1.0_f64, |acc, v| acc.max(abs(*v)));
        if m.max_asymmetry() > 1e-9 * scale {
            return Err(Error::DegenerateInput("matrix is not symmetric"));
        }
        m.symmetrize();
        Ok(m)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.dim + j]
    }

    /// Row-major view of the entries.
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.dim);
        self.data.chunks_exact(self.dim).map(|row| dot(row, x)).collect()
    }

    /// `xᵀ A x`
    pub fn quad_form(&self, x: &[f64]) -> f64 {
        dot(x, &self.mul_vec(x))
    }

    pub fn scale(&mut self, s: f64) {
        self.data.iter_mut().for_each(|v| *v *= s);
    }

    /// `A += weight * x xᵀ`
    pub fn add_outer(&mut self, x: &[f64], weight: f64) {
        let d = self.dim;
        for i in 0..d {
            for j in 0..d {
                self.data[i * d + j] += weight * x[i] * x[j];
            }
        }
    }

    /// `A += weight * B`
    pub fn add_scaled(&mut self, other: &SymMatrix, weight: f64) {
        debug_assert_eq!(self.dim, other.dim);
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += weight * b;
        }
    }

    pub fn symmetrize(&mut self) {
        let d = self.dim;
        for i in 0..d {
            for j in (i + 1)..d {
                let avg = 0.5 * (self.data[i * d + j] + self.data[j * d + i]);
                self.data[i * d + j] = avg;
                self.data[j * d + i] = avg;
            }
        }
    }

    pub fn max_asymmetry(&self) -> f64 {
        let d = self.dim;
        let mut worst = 0.0_f64;
        for i in 0..d {
            for j in (i + 1)..d {
                worst = worst.max(abs(self.data[i * d + j] - self.data[j * d + i]));
            }
        }
        worst
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Computes `inv_scale * [A - numer * (A x)(A x)ᵀ / (offset + weight * xᵀ A x)]`.
    ///
    /// All three recursions in the crate are instances of this step.
    pub(crate) fn rank1_correction(
        &self,
        x: &[f64],
        inv_scale: f64,
        numer: f64,
        offset: f64,
        weight: f64,
    ) -> Result<SymMatrix> {
        let d = self.dim;
        let px = self.mul_vec(x);
        let denom = offset + weight * dot(x, &px);
        let coef = numer / denom;
        let mut out = SymMatrix::zeros(d);
        for i in 0..d {
            for j in 0..d {
                out.data[i * d + j] = inv_scale * (self.data[i * d + j] - coef * px[i] * px[j]);
            }
        }
        out.symmetrize();
        if out.is_finite() {
            Ok(out)
        } else {
            Err(Error::NonFinite)
        }
    }

    pub fn cholesky(&self) -> Result<Cholesky> {
        let d = self.dim;
        let mut l = vec![0.0; d * d];
        for j in 0..d {
            let mut diag = self.data[j * d + j];
            for k in 0..j {
                diag -= l[j * d + k] * l[j * d + k];
            }
            if !(diag > 0.0) || !diag.is_finite() {
                return Err(Error::SingularMatrix { pivot: j });
            }
            let ljj = sqrt(diag);
            l[j * d + j] = ljj;
            for i in (j + 1)..d {
                let mut v = self.data[i * d + j];
                for k in 0..j {
                    v -= l[i * d + k] * l[j * d + k];
                }
                l[i * d + j] = v / ljj;
            }
        }
        Ok(Cholesky { dim: d, lower: l })
    }

    /// Inverse of a symmetric positive definite matrix.
    pub fn inverse_spd(&self) -> Result<SymMatrix> {
        let chol = self.cholesky()?;
        let d = self.dim;
        let mut inv = SymMatrix::zeros(d);
        let mut e = vec![0.0; d];
        for j in 0..d {
            e.iter_mut().for_each(|v| *v = 0.0);
            e[j] = 1.0;
            let col = chol.solve(&e);
            for (i, v) in col.into_iter().enumerate() {
                inv.data[i * d + j] = v;
            }
        }
        inv.symmetrize();
        Ok(inv)
    }

    /// All eigenvalues (unordered) by cyclic Jacobi rotations.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let d = self.dim;
        let mut a = self.data.clone();
        let total: f64 = a.iter().map(|v| v * v).sum();
        for _sweep in 0..100 {
            let mut off = 0.0;
            for i in 0..d {
                for j in (i + 1)..d {
                    off += a[i * d + j] * a[i * d + j];
                }
            }
            if off <= 1e-30 * total || off == 0.0 {
                break;
            }
            for p in 0..d {
                for q in (p + 1)..d {
                    let apq = a[p * d + q];
                    if apq == 0.0 {
                        continue;
                    }
                    let app = a[p * d + p];
                    let aqq = a[q * d + q];
                    let theta = (aqq - app) / (2.0 * apq);
                    let sign = if theta >= 0.0 { 1.0 } else { -1.0 };
                    let t = sign / (abs(theta) + sqrt(theta * theta + 1.0));
                    let c = 1.0 / sqrt(t * t + 1.0);
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
                }
            }
        }
        (0..d).map(|i| a[i * d + i]).collect()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues().into_iter().fold(f64::INFINITY, f64::min)
    }
}

/// Lower-triangular Cholesky factor `A = L Lᵀ`.
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
            for k in 0..i {
                y[i] -= self.lower[i * d + k] * y[k];
            }
            y[i] /= self.lower[i * d + i];
        }
        for i in (0..d).rev() {
            for k in (i + 1)..d {
                y[i] -= self.lower[k * d + i] * y[k];
            }
            y[i] /= self.lower[i * d + i];
        }
        y
    }
}

/// Inverse of `alpha * P⁻¹ + beta * x xᵀ`, computed from `P` by the
/// Sherman-Morrison identity:
/// `(1/alpha) [P - beta P x xᵀ P / (alpha + beta xᵀ P x)]`.
pub fn outer_rank1_downdate(p: &SymMatrix, x: &[f64], alpha: f64, beta: f64) -> Result<SymMatrix> {
    if !(alpha > 0.0) {
        return Err(Error::param("alpha", "must be > 0"));
    }
    if !(beta >= 0.0) {
        return Err(Error::param("beta", "must be >= 0"));
    }
    if x.len() != p.dim() {
        return Err(Error::DimensionMismatch {
            expected: p.dim(),
            found: x.len(),
        });
    }
    p.rank1_correction(x, 1.0 / alpha, beta, alpha, beta)
}

/// Solves `A x = b` for symmetric positive definite `A`.
pub fn solve_spd(a: &SymMatrix, b: &[f64]) -> Result<Vec<f64>> {
    if b.len() != a.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            found: b.len(),
        });
    }
    Ok(a.cholesky()?.solve(b))
}

/// Largest absolute eigenvalue of a symmetric matrix.
pub fn spectral_norm(a: &SymMatrix) -> f64 {
    a.eigenvalues().into_iter().fold(0.0, |m, v| m.max(abs(v)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        abs(a - b) <= tol
    }

    #[test]
    fn zero_vector_only_rescales() {
        let p = SymMatrix::identity(2);
        let out = outer_rank1_downdate(&p, &[0.0, 0.0], 0.5, 0.5).unwrap();
        assert_eq!(out, SymMatrix::scaled_identity(2, 2.0));
    }

    #[test]
    fn scalar_downdate() {
        let p = SymMatrix::identity(1);
        let out = outer_rank1_downdate(&p, &[1.0], 1.0, 1.0).unwrap();
        assert!(close(out.get(0, 0), 0.5, 1e-15));
    }

    #[test]
    fn downdate_rejects_bad_params() {
        let p = SymMatrix::identity(1);
        assert!(matches!(
            outer_rank1_downdate(&p, &[1.0], 0.0, 1.0),
            Err(Error::InvalidParameter { name: "alpha", .. })
        ));
        assert!(matches!(
            outer_rank1_downdate(&p, &[1.0], 1.0, -1.0),
            Err(Error::InvalidParameter { name: "beta", .. })
        ));
    }

    #[test]
    fn downdate_overflow_is_non_finite() {
        let p = SymMatrix::scaled_identity(2, 1e308);
        assert_eq!(
            outer_rank1_downdate(&p, &[0.0, 0.0], 1e-10, 0.0),
            Err(Error::NonFinite)
        );
    }

    #[test]
    fn solve_identity_and_diagonal() {
        let b = [3.0, -1.5, 2.0];
        assert_eq!(solve_spd(&SymMatrix::identity(3), &b).unwrap(), b.to_vec());
        let x = solve_spd(&SymMatrix::diagonal(&[2.0, 4.0]), &[2.0, 8.0]).unwrap();
        assert!(close(x[0], 1.0, 1e-15) && close(x[1], 2.0, 1e-15));
    }

    #[test]
    fn solve_reports_pivot() {
        let a = SymMatrix::diagonal(&[1.0, 0.0, 2.0]);
        assert_eq!(
            solve_spd(&a, &[1.0, 1.0, 1.0]),
            Err(Error::SingularMatrix { pivot: 1 })
        );
    }

    #[test]
    fn spectral_norm_simple() {
        assert!(close(spectral_norm(&SymMatrix::identity(3)), 1.0, 1e-15));
        assert!(close(spectral_norm(&SymMatrix::diagonal(&[3.0, -5.0])), 5.0, 1e-15));
    }

    #[test]
    fn from_row_major_rejects_asymmetric() {
        assert!(SymMatrix::from_row_major(2, vec![1.0, 2.0, 0.0, 1.0]).is_err());
        assert!(SymMatrix::from_row_major(2, vec![1.0, 2.0, 2.0]).is_err());
        assert!(SymMatrix::from_row_major(1, vec![f64::NAN]).is_err());
        let m = SymMatrix::from_row_major(2, vec![1.0, 2.0, 2.0, 5.0]).unwrap();
        assert_eq!(m.max_asymmetry(), 0.0);
    }

    #[test]
    fn inverse_of_diagonal() {
        let inv = SymMatrix::diagonal(&[2.0, 4.0]).inverse_spd().unwrap();
        assert!(close(inv.get(0, 0), 0.5, 1e-15));
        assert!(close(inv.get(1, 1), 0.25, 1e-15));
        assert_eq!(inv.get(0, 1), 0.0);
    }
}
