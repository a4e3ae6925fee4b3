//! Small dense complex matrices and the Hermitian eigensolver.

use crate::error::{CapaError, Result};
use num_complex::Complex64;

/// Square complex matrix stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct CMatrix {
    n: usize,
    data: Vec<Complex64>,
}

impl CMatrix {
    pub fn zeros(n: usize) -> Self {
        CMatrix { n, data: vec![Complex64::new(0.0, 0.0); n * n] }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, |i, j| if i == j { Complex64::new(1.0, 0.0) } else { Complex64::new(0.0, 0.0) })
    }

    pub fn from_fn<F: FnMut(usize, usize) -> Complex64>(n: usize, mut f: F) -> Self {
        let mut data = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                data.push(f(i, j));
            }
        }
        CMatrix { n, data }
    }

    /// Builds from rows; fails unless the rows form a square matrix.
    pub fn from_rows(rows: &[Vec<Complex64>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(CapaError::domain("matrix rows must form a square matrix"));
        }
        Ok(CMatrix { n, data: rows.concat() })
    }

    /// Real diagonal matrix.
    pub fn diag(values: &[f64]) -> Self {
        Self::from_fn(values.len(), |i, j| if i == j { Complex64::new(values[i], 0.0) } else { Complex64::new(0.0, 0.0) })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.data[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: Complex64) {
        self.data[i * self.n + j] = v;
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.n, |i, j| self.get(j, i).conj())
    }

    pub fn mul(&self, other: &CMatrix) -> Self {
        assert_eq!(self.n, other.n, "dimension mismatch");
        Self::from_fn(self.n, |i, j| (0..self.n).map(|k| self.get(i, k) * other.get(k, j)).sum())
    }

    pub fn mul_vec(&self, v: &[Complex64]) -> Vec<Complex64> {
        (0..self.n).map(|i| (0..self.n).map(|k| self.get(i, k) * v[k]).sum()).collect()
    }

    pub fn sub(&self, other: &CMatrix) -> Self {
        Self::from_fn(self.n, |i, j| self.get(i, j) - other.get(i, j))
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Principal submatrix on the given indices.
    pub fn principal(&self, idx: &[usize]) -> Self {
        Self::from_fn(idx.len(), |i, j| self.get(idx[i], idx[j]))
    }

    fn off_diagonal_norm(&self) -> f64 {
        let mut s = 0.0;
        for i in 0..self.n {
            for j in 0..self.n {
                if i != j {
                    s += self.get(i, j).norm_sqr();
                }
            }
        }
        s.sqrt()
    }
}

/// Eigenvalues in descending order with the matching orthonormal eigenvectors
/// as columns of `vectors`.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    pub vectors: CMatrix,
}

const HERMITIAN_TOL: f64 = 1e-10;
const OFF_DIAGONAL_TOL: f64 = 1e-13;
const MAX_SWEEPS: usize = 100;

/// Cyclic complex Jacobi eigensolver for a Hermitian matrix.
///
/// Each rotation combines a phase that makes the `(p, q)` entry real with a
/// real Jacobi rotation that annihilates it. Sweeps stop once the
/// off-diagonal Frobenius norm falls below `1e-13·‖M‖_F`.
pub fn hermitian_eig(m: &CMatrix) -> Result<HermitianEigen> {
    let n = m.dim();
    let norm = m.frobenius_norm();
    if m.sub(&m.adjoint()).frobenius_norm() > HERMITIAN_TOL * norm {
        return Err(CapaError::domain("matrix is not Hermitian"));
    }
    let mut a = m.clone();
    for i in 0..n {
        a.set(i, i, Complex64::new(a.get(i, i).re, 0.0));
    }
    let mut v = CMatrix::identity(n);
    let target = OFF_DIAGONAL_TOL * norm;

    let mut sweeps = 0;
    while a.off_diagonal_norm() > target {
        if sweeps == MAX_SWEEPS {
            return Err(CapaError::Model(format!("Jacobi eigensolver did not converge in {MAX_SWEEPS} sweeps")));
        }
        sweeps += 1;
        for p in 0..n {
            for q in p + 1..n {
                let c = a.get(p, q);
                let c_abs = c.norm();
                if c_abs == 0.0 {
                    continue;
                }
                let phase = c / c_abs;
                let (app, aqq) = (a.get(p, p).re, a.get(q, q).re);
                let theta = (aqq - app) / (2.0 * c_abs);
                let t = if theta >= 0.0 { 1.0 } else { -1.0 } / (theta.abs() + (theta * theta + 1.0).sqrt());
                let cs = 1.0 / (1.0 + t * t).sqrt();
                let sn = t * cs;
                // J = [[cs, sn], [-sn·e^{-iφ}, cs·e^{-iφ}]] on the (p, q) plane.
                let jpp = Complex64::new(cs, 0.0);
                let jpq = Complex64::new(sn, 0.0);
                let jqp = -phase.conj() * sn;
                let jqq = phase.conj() * cs;
                for k in 0..n {
                    let (akp, akq) = (a.get(k, p), a.get(k, q));
                    a.set(k, p, akp * jpp + akq * jqp);
                    a.set(k, q, akp * jpq + akq * jqq);
                }
                for k in 0..n {
                    let (apk, aqk) = (a.get(p, k), a.get(q, k));
                    a.set(p, k, jpp.conj() * apk + jqp.conj() * aqk);
                    a.set(q, k, jpq.conj() * apk + jqq.conj() * aqk);
                }
                a.set(p, q, Complex64::new(0.0, 0.0));
                a.set(q, p, Complex64::new(0.0, 0.0));
                a.set(p, p, Complex64::new(a.get(p, p).re, 0.0));
                a.set(q, q, Complex64::new(a.get(q, q).re, 0.0));
                for k in 0..n {
                    let (vkp, vkq) = (v.get(k, p), v.get(k, q));
                    v.set(k, p, vkp * jpp + vkq * jqp);
                    v.set(k, q, vkp * jpq + vkq * jqq);
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a.get(j, j).re.total_cmp(&a.get(i, i).re).then(i.cmp(&j)));
    let values = order.iter().map(|&i| a.get(i, i).re).collect();
    let vectors = CMatrix::from_fn(n, |row, col| v.get(row, order[col]));
    Ok(HermitianEigen { values, vectors })
}

/// Numerical rank and pseudo-determinant of a spectrum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RankDet {
    pub rank: usize,
    /// Product of the retained eigenvalues; 1 when nothing is retained.
    pub det: f64,
    /// Set when every eigenvalue vanished.
    pub all_zero: bool,
}

/// Counts eigenvalues above `rel_tol·λ_max` and multiplies them.
/// Expects a descending, non-negative spectrum.
pub fn pseudo_rank_det(values: &[f64], rel_tol: f64) -> RankDet {
    let max = values.iter().copied().fold(0.0, f64::max);
    if !(max > 0.0) {
        return RankDet { rank: 0, det: 1.0, all_zero: true };
    }
    let kept: Vec<f64> = values.iter().copied().filter(|&l| l > rel_tol * max).collect();
    RankDet { rank: kept.len(), det: kept.iter().product(), all_zero: false }
}
