//! Spatial correlation of the NLoS field and its segment-level correlation matrix.
//!
//! With `α_n ~ CN(0, σ_n²)` the normalized field `h̃ = (√(4π)/(k₀η))·h`
//! has covariance
//! `R(r₁, r₂) = Σ_n σ_n² |g(s_n, s_u)|² u_n(r₁) u_n*(r₂)` with
//! `u_n(r) = e^{−j k₀ d_n}/(√(4π) d_n) · √(y_n/d_n)`.
//! The matrix entry for segments `k, k'` is the double surface integral of the
//! kernel, which factorizes through `U_{nk} = ∫_{S_k} u_n`.

use super::matrix::{hermitian_eig, pseudo_rank_det, CMatrix, HermitianEigen, RankDet};
use crate::error::{CapaError, Result};
use crate::geometry::{Point3, RectAperture, UserGeometry};
use crate::los::ChannelParams;
use crate::nlos::{nlos_response, scatterer_to_user, NlosQuadrature, ScattererSet};
use crate::quadrature::{quad2d_adaptive, DEFAULT_ADAPTIVE_TOL};
use num_complex::Complex64;
use rayon::prelude::*;
use std::f64::consts::PI;

/// Eigenvalues below `RANK_TOL·λ_max` do not count towards the rank.
pub const RANK_TOL: f64 = 1e-10;
/// Eigenvalues below `−NEGATIVE_TOL·λ_max` mean the matrix is not PSD.
pub const NEGATIVE_TOL: f64 = 1e-10;

/// Hermitian PSD matrix with its spectrum, rank, pseudo-determinant and square root.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationMatrix {
    matrix: CMatrix,
    eig: HermitianEigen,
    rank_det: RankDet,
    sqrt: CMatrix,
}

impl CorrelationMatrix {
    /// Validates and decomposes `m`. Small negative eigenvalues from
    /// quadrature noise are clamped to zero; larger ones are a model error.
    pub fn from_hermitian(m: CMatrix) -> Result<Self> {
        let mut eig = hermitian_eig(&m)?;
        let max = eig.values.iter().copied().fold(0.0, f64::max);
        for l in eig.values.iter_mut() {
            if *l < -NEGATIVE_TOL * max {
                return Err(CapaError::Model(format!("correlation matrix has eigenvalue {l:e} (largest {max:e})")));
            }
            *l = l.max(0.0);
        }
        let rank_det = pseudo_rank_det(&eig.values, RANK_TOL);
        // Directions below the rank tolerance are treated as exactly null so
        // samples of a rank-deficient matrix stay in its range.
        let roots: Vec<f64> = eig.values.iter().enumerate().map(|(i, l)| if i < rank_det.rank { l.sqrt() } else { 0.0 }).collect();
        let sqrt = eig.vectors.mul(&CMatrix::diag(&roots)).mul(&eig.vectors.adjoint());
        Ok(CorrelationMatrix { matrix: m, eig, rank_det, sqrt })
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    /// Clamped eigenvalues, descending.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eig.values
    }

    pub fn eigenvectors(&self) -> &CMatrix {
        &self.eig.vectors
    }

    pub fn rank(&self) -> usize {
        self.rank_det.rank
    }

    /// Product of the eigenvalues counted in the rank (1 for the zero matrix).
    pub fn pseudo_det(&self) -> f64 {
        self.rank_det.det
    }

    pub fn is_zero(&self) -> bool {
        self.rank_det.all_zero
    }

    /// Principal square root `U Λ^{1/2} Uᴴ`.
    pub fn sqrt(&self) -> &CMatrix {
        &self.sqrt
    }

    /// Correlation matrix of the segments listed in `idx`.
    pub fn principal(&self, idx: &[usize]) -> Result<Self> {
        Self::from_hermitian(self.matrix.principal(idx))
    }
}

/// `u_n(p)` for a source at `s`.
pub fn unit_profile(p: &Point3, s: &Point3, k0: f64) -> Result<Complex64> {
    let d = p.distance(s);
    if d == 0.0 {
        return Err(CapaError::Singular(format!("scatterer coincides with array point ({}, {})", p.x, p.z)));
    }
    Ok(Complex64::from_polar((s.y / d).sqrt() / ((4.0 * PI).sqrt() * d), -k0 * d))
}

/// Per-scatterer weights `σ_n² |g(s_n, s_u)|²`.
pub fn correlation_weights(sc: &ScattererSet, g: &UserGeometry, params: &ChannelParams) -> Result<Vec<f64>> {
    let to_user = scatterer_to_user(sc, g, params)?;
    Ok(sc.scatterers().iter().zip(&to_user).map(|(s, gu)| s.variance * gu.norm_sqr()).collect())
}

/// Field correlation `E{h̃(r₁) h̃*(r₂)}` between two array points.
pub fn correlation_kernel(r1: &Point3, r2: &Point3, sc: &ScattererSet, g: &UserGeometry, params: &ChannelParams) -> Result<Complex64> {
    let w = correlation_weights(sc, g, params)?;
    let mut acc = Complex64::new(0.0, 0.0);
    for (s, c) in sc.scatterers().iter().zip(&w) {
        acc += unit_profile(r1, &s.position, params.k0)? * unit_profile(r2, &s.position, params.k0)?.conj() * *c;
    }
    Ok(acc)
}

/// `U[n][k] = ∫_{S_k} u_n` by tensor Gauss–Legendre of the given order on
/// phase-resolved panels.
pub fn segment_projections(rects: &[RectAperture], sc: &ScattererSet, params: &ChannelParams, order: usize) -> Result<Vec<Vec<Complex64>>> {
    let positions = sc.positions();
    let per_segment: Vec<Result<Vec<Complex64>>> = rects
        .par_iter()
        .map(|rect| {
            let quad = NlosQuadrature::resolved(order, params, rect, &positions)?;
            let nodes = quad.nodes(rect);
            positions
                .iter()
                .map(|s| {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for &(x, z, w) in &nodes {
                        acc += unit_profile(&Point3::on_array(x, z), s, params.k0)? * w;
                    }
                    Ok(acc)
                })
                .collect()
        })
        .collect();
    let per_segment = per_segment.into_iter().collect::<Result<Vec<_>>>()?;
    Ok((0..positions.len()).map(|n| per_segment.iter().map(|seg| seg[n]).collect()).collect())
}

/// Segment correlation matrix `R_{kk'} = ∫_{S_k}∫_{S_{k'}} R(r₁, r₂)`.
pub fn correlation_matrix(rects: &[RectAperture], sc: &ScattererSet, g: &UserGeometry, params: &ChannelParams, order: usize) -> Result<CorrelationMatrix> {
    if rects.is_empty() {
        return Err(CapaError::domain("correlation matrix needs at least one segment"));
    }
    let weights = correlation_weights(sc, g, params)?;
    let u = segment_projections(rects, sc, params, order)?;
    let k = rects.len();
    let mut m = CMatrix::zeros(k);
    for i in 0..k {
        for j in i..k {
            let mut acc = Complex64::new(0.0, 0.0);
            for (n, c) in weights.iter().enumerate() {
                acc += u[n][i] * u[n][j].conj() * *c;
            }
            if i == j {
                m.set(i, i, Complex64::new(acc.re, 0.0));
            } else {
                m.set(i, j, acc);
                m.set(j, i, acc.conj());
            }
        }
    }
    CorrelationMatrix::from_hermitian(m)
}

/// One matrix entry as a literal four-dimensional tensor sum of the kernel
/// over both segments' nodes. Quadratic in the node count; meant for checks.
pub fn correlation_entry_tensor(
    (rect_a, quad_a): (&RectAperture, &NlosQuadrature),
    (rect_b, quad_b): (&RectAperture, &NlosQuadrature),
    sc: &ScattererSet,
    g: &UserGeometry,
    params: &ChannelParams,
) -> Result<Complex64> {
    let na = quad_a.nodes(rect_a);
    let nb = quad_b.nodes(rect_b);
    let mut acc = Complex64::new(0.0, 0.0);
    for &(x1, z1, w1) in &na {
        let p1 = Point3::on_array(x1, z1);
        for &(x2, z2, w2) in &nb {
            acc += correlation_kernel(&p1, &Point3::on_array(x2, z2), sc, g, params)? * (w1 * w2);
        }
    }
    Ok(acc)
}

/// Segment-integrated normalized field per unit reflection coefficient,
/// `I[n][k] = (√(4π)/(k₀η)) ∫_{S_k} h_n` where `h_n` is the NLoS response with
/// only scatterer `n` present and `α_n = 1`. Computed by adaptive quadrature of
/// the response itself, independently of the kernel factorization.
#[derive(Debug, Clone, PartialEq)]
pub struct SegmentFieldOracle {
    integrals: Vec<Vec<Complex64>>,
}

impl SegmentFieldOracle {
    pub fn build(rects: &[RectAperture], sc: &ScattererSet, g: &UserGeometry, params: &ChannelParams, tol: f64) -> Result<Self> {
        let scale = (4.0 * PI).sqrt() / (params.k0 * params.eta);
        let n = sc.len();
        let jobs: Vec<(usize, usize)> = (0..n).flat_map(|i| (0..rects.len()).map(move |k| (i, k))).collect();
        let values: Vec<Result<Complex64>> = jobs
            .par_iter()
            .map(|&(i, k)| {
                let single = ScattererSet::new(vec![sc.scatterers()[i]])?.with_realization(vec![Complex64::new(1.0, 0.0)])?;
                let est = quad2d_adaptive(
                    |x, z| nlos_response(&Point3::on_array(x, z), g, &single, params).unwrap_or(Complex64::new(f64::NAN, 0.0)),
                    &rects[k],
                    tol,
                )?;
                Ok(est.value * scale)
            })
            .collect();
        let values = values.into_iter().collect::<Result<Vec<_>>>()?;
        let integrals = values.chunks(rects.len().max(1)).map(|c| c.to_vec()).collect();
        Ok(SegmentFieldOracle { integrals })
    }

    /// Default-tolerance build.
    pub fn build_default(rects: &[RectAperture], sc: &ScattererSet, g: &UserGeometry, params: &ChannelParams) -> Result<Self> {
        Self::build(rects, sc, g, params, DEFAULT_ADAPTIVE_TOL)
    }

    /// Segment gains `h_k = Σ_n α_n I[n][k]` for one realization.
    pub fn gains(&self, alpha: &[Complex64]) -> Vec<Complex64> {
        let k = self.integrals.first().map_or(0, |v| v.len());
        (0..k).map(|j| alpha.iter().zip(&self.integrals).map(|(a, row)| a * row[j]).sum()).collect()
    }
}
