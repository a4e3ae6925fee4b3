//! Non-line-of-sight channel through point scatterers.
//!
//! The response at array point `p` is `Σ α_n g_LoS(p, s_n) g(s_n, s_u)`. Its
//! captured power splits into per-scatterer terms, available in closed form,
//! and cross terms `ρ_{n,n'}` evaluated with tensor Gauss–Legendre rules.

use crate::error::{CapaError, Result};
use crate::geometry::{Point3, RectAperture, UserGeometry};
use crate::los::{free_space_green, projected_green, rect_solid_angle, ChannelParams};
use crate::quadrature::{self, gauss_legendre_rule, QuadratureRule};
use crate::rng::complex_normal;
use num_complex::Complex64;
use rand::Rng;
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scatterer {
    pub position: Point3,
    /// Mean reflection strength `σ_n² = E|α_n|²`.
    pub variance: f64,
}

/// Scatterers in front of the array, optionally with one draw of their
/// reflection coefficients attached.
#[derive(Debug, Clone, PartialEq)]
pub struct ScattererSet {
    scatterers: Vec<Scatterer>,
    realization: Option<Vec<Complex64>>,
}

impl ScattererSet {
    pub fn new(scatterers: Vec<Scatterer>) -> Result<Self> {
        for (n, s) in scatterers.iter().enumerate() {
            if !(s.position.y > 0.0) {
                return Err(CapaError::domain(format!("scatterer {n} must have y > 0, got {}", s.position.y)));
            }
            if !(s.variance >= 0.0 && s.variance.is_finite()) {
                return Err(CapaError::domain(format!("scatterer {n} has invalid variance {}", s.variance)));
            }
        }
        Ok(ScattererSet { scatterers, realization: None })
    }

    /// Attaches reflection coefficients, one per scatterer.
    pub fn with_realization(mut self, alpha: Vec<Complex64>) -> Result<Self> {
        if alpha.len() != self.scatterers.len() {
            return Err(CapaError::domain(format!(
                "realization has {} coefficients for {} scatterers",
                alpha.len(),
                self.scatterers.len()
            )));
        }
        self.realization = Some(alpha);
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.scatterers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scatterers.is_empty()
    }

    pub fn scatterers(&self) -> &[Scatterer] {
        &self.scatterers
    }

    pub fn positions(&self) -> Vec<Point3> {
        self.scatterers.iter().map(|s| s.position).collect()
    }

    pub fn realization(&self) -> Option<&[Complex64]> {
        self.realization.as_deref()
    }

    fn require_realization(&self) -> Result<&[Complex64]> {
        self.realization().ok_or_else(|| CapaError::domain("scatterer set has no attached realization"))
    }

    /// Draws `α_n ~ CN(0, σ_n²)` independently.
    pub fn sample_realization<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<Complex64> {
        self.scatterers.iter().map(|s| complex_normal(rng) * s.variance.sqrt()).collect()
    }
}

/// Reflection variance `4π/(k₀²η²)`, which makes `E|α_n g|²` independent of
/// the carrier.
pub fn reference_variance(params: &ChannelParams) -> f64 {
    4.0 * PI / (params.k0 * params.k0 * params.eta * params.eta)
}

/// Axis-aligned box from which scatterer positions are drawn uniformly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScatterBox {
    pub x: (f64, f64),
    pub y: (f64, f64),
    pub z: (f64, f64),
}

impl Default for ScatterBox {
    fn default() -> Self {
        ScatterBox { x: (-5.0, 5.0), y: (1.0, 10.0), z: (-5.0, 5.0) }
    }
}

impl ScatterBox {
    pub fn validate(&self) -> Result<()> {
        let ok = |(a, b): (f64, f64)| a.is_finite() && b.is_finite() && a <= b;
        if !(ok(self.x) && ok(self.y) && ok(self.z) && self.y.0 > 0.0) {
            return Err(CapaError::domain(format!("invalid scatterer box {self:?}")));
        }
        Ok(())
    }

    pub fn sample<R: Rng + ?Sized>(&self, count: usize, variance: f64, rng: &mut R) -> Result<ScattererSet> {
        self.validate()?;
        let mut uniform = |(a, b): (f64, f64)| a + (b - a) * rng.gen::<f64>();
        let scatterers = (0..count)
            .map(|_| {
                let x = uniform(self.x);
                let y = uniform(self.y);
                let z = uniform(self.z);
                Scatterer { position: Point3::new(x, y, z), variance }
            })
            .collect();
        ScattererSet::new(scatterers)
    }
}

/// Scatterer-to-user factors `g(s_n, s_u)`.
pub fn scatterer_to_user(sc: &ScattererSet, g: &UserGeometry, params: &ChannelParams) -> Result<Vec<Complex64>> {
    let user = g.position();
    sc.scatterers()
        .iter()
        .enumerate()
        .map(|(n, s)| {
            let d = s.position.distance(&user);
            if d == 0.0 {
                return Err(CapaError::Singular(format!("scatterer {n} coincides with the user")));
            }
            Ok(free_space_green(d, params))
        })
        .collect()
}

/// NLoS response at array point `p` for the attached realization.
pub fn nlos_response(p: &Point3, g: &UserGeometry, sc: &ScattererSet, params: &ChannelParams) -> Result<Complex64> {
    let alpha = sc.require_realization()?;
    let to_user = scatterer_to_user(sc, g, params)?;
    let mut acc = Complex64::new(0.0, 0.0);
    for ((s, a), gu) in sc.scatterers().iter().zip(alpha).zip(&to_user) {
        acc += a * projected_green(p, &s.position, params)? * gu;
    }
    Ok(acc)
}

/// `(1/4π) ∫_rect y_n dx dz / ((x − x_n)² + y_n² + (z − z_n)²)^{3/2}` in closed form.
pub fn a_los_scatterer(rect: &RectAperture, s: &Point3) -> Result<f64> {
    if !(s.y > 0.0) {
        return Err(CapaError::domain(format!("scatterer must have y > 0, got {}", s.y)));
    }
    Ok(rect_solid_angle(rect, s.x, s.y, s.z) / (4.0 * PI))
}

/// Tensor Gauss–Legendre layout for cross-term integrals: a rule of the
/// given order applied on `panels_x × panels_z` equal panels.
///
/// A single panel is the plain tensor rule. Phase terms `k₀(d_{n'} − d_n)`
/// change by hundreds of radians across a meter-sized aperture, far beyond
/// what one moderate-order rule resolves, so [`NlosQuadrature::resolved`]
/// sizes panels from a bound on the phase rate.
#[derive(Debug, Clone, PartialEq)]
pub struct NlosQuadrature {
    rule: QuadratureRule,
    pub panels_x: usize,
    pub panels_z: usize,
}

/// Phase radians allowed per node across one panel.
const PHASE_PER_NODE: f64 = 0.6;

/// Upper bound on `|∇_{x,z} d(p, s)|` for `p` on `rect`.
fn distance_gradient_bound(rect: &RectAperture, s: &Point3) -> f64 {
    let (x0, x1) = rect.x_range();
    let (z0, z1) = rect.z_range();
    let rho = (s.x - x0).abs().max((s.x - x1).abs()).hypot((s.z - z0).abs().max((s.z - z1).abs()));
    rho / rho.hypot(s.y)
}

/// Number of panels along one axis of width `width` for phase rate `rate`
/// (rad/m) and rule order `order`.
pub fn panels_for_rate(rate: f64, width: f64, order: usize) -> usize {
    ((rate * width / (2.0 * PHASE_PER_NODE * order as f64)).ceil() as usize).max(1)
}

impl NlosQuadrature {
    /// One tensor rule over the whole rectangle.
    pub fn single(order: usize) -> Result<Self> {
        Ok(NlosQuadrature { rule: gauss_legendre_rule(order)?, panels_x: 1, panels_z: 1 })
    }

    /// Panels sized so every pairwise phase `k₀(d_{n'} − d_n)` over `rect`
    /// advances at most about `0.6·order` radians across a panel (in the
    /// `[-1, 1]` frame of the rule), which `order`-point Gauss–Legendre
    /// integrates to near machine precision.
    pub fn resolved(order: usize, params: &ChannelParams, rect: &RectAperture, sources: &[Point3]) -> Result<Self> {
        let rule = gauss_legendre_rule(order)?;
        let grad = sources.iter().map(|s| distance_gradient_bound(rect, s)).fold(0.0, f64::max);
        let rate = 2.0 * params.k0 * grad;
        Ok(NlosQuadrature {
            panels_x: panels_for_rate(rate, rect.ax, order),
            panels_z: panels_for_rate(rate, rect.az, order),
            rule,
        })
    }

    pub fn order(&self) -> usize {
        self.rule.order()
    }

    pub fn rule(&self) -> &QuadratureRule {
        &self.rule
    }

    /// `(x, z, weight)` triples over `rect`, Jacobian included.
    pub fn nodes(&self, rect: &RectAperture) -> Vec<(f64, f64, f64)> {
        self.rule.tensor_nodes(rect, self.panels_x, self.panels_z)
    }
}

/// `e^{−j k₀ d_n}/d_n^{3/2}` at every node for every source.
fn phase_profiles(nodes: &[(f64, f64, f64)], sources: &[Point3], params: &ChannelParams) -> Result<Vec<Vec<Complex64>>> {
    sources
        .iter()
        .map(|s| {
            nodes
                .iter()
                .map(|&(x, z, _)| {
                    let d = Point3::on_array(x, z).distance(s);
                    let v = Complex64::from_polar(1.0 / (d * d.sqrt()), -params.k0 * d);
                    if v.re.is_finite() && v.im.is_finite() {
                        Ok(v)
                    } else {
                        Err(CapaError::NonFinite { x, z })
                    }
                })
                .collect()
        })
        .collect()
}

/// Cross term `ρ_{n,n'} = (1/4π) ∫_rect e^{j k₀ (d_{n'} − d_n)} / (d_n d_{n'})^{3/2}`.
pub fn rho_cross(rect: &RectAperture, s_n: &Point3, s_m: &Point3, params: &ChannelParams, quad: &NlosQuadrature) -> Result<Complex64> {
    if !(s_n.y > 0.0 && s_m.y > 0.0) {
        return Err(CapaError::domain("scatterers must have y > 0"));
    }
    let nodes = quad.nodes(rect);
    let v = phase_profiles(&nodes, &[*s_n, *s_m], params)?;
    let sum: Complex64 = nodes.iter().enumerate().map(|(p, &(_, _, w))| v[0][p] * v[1][p].conj() * w).sum();
    Ok(sum / (4.0 * PI))
}

/// Off-diagonal entries `√(y_n y_{n'}) ρ_{n,n'}` of the captured-power matrix
/// over `rect`, row-major with a zero diagonal. Additive over disjoint rectangles.
pub fn cross_terms(rect: &RectAperture, sources: &[Point3], params: &ChannelParams, quad: &NlosQuadrature) -> Result<Vec<Complex64>> {
    let n = sources.len();
    let mut entries = vec![Complex64::new(0.0, 0.0); n * n];
    if n > 1 {
        let nodes = quad.nodes(rect);
        let v = phase_profiles(&nodes, sources, params)?;
        for i in 0..n {
            for j in i + 1..n {
                let sum: Complex64 = nodes.iter().enumerate().map(|(p, &(_, _, w))| v[i][p] * v[j][p].conj() * w).sum();
                let m = sum / (4.0 * PI) * (sources[i].y * sources[j].y).sqrt();
                entries[i * n + j] = m;
                entries[j * n + i] = m.conj();
            }
        }
    }
    Ok(entries)
}

/// Captured-power matrix `M` of a rectangle for a scatterer set:
/// `M_{nn} = a_LoS^{(n)}` in closed form and `M_{nn'} = √(y_n y_{n'}) ρ_{n,n'}`.
/// The NLoS SNR of a realization is `γ̄ Σ_{n,n'} β_n M_{nn'} β*_{n'}` with
/// `β_n = α_n g(s_n, s_u)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GainMatrix {
    n: usize,
    entries: Vec<Complex64>,
}

impl GainMatrix {
    pub fn build(rect: &RectAperture, sources: &[Point3], params: &ChannelParams, quad: &NlosQuadrature) -> Result<Self> {
        Self::from_cross_terms(rect, sources, cross_terms(rect, sources, params, quad)?)
    }

    /// Assembles `M` from precomputed off-diagonal entries (row-major,
    /// diagonal ignored), filling the diagonal in closed form. Lets callers
    /// integrate the cross terms over sub-rectangles and add them up.
    pub fn from_cross_terms(rect: &RectAperture, sources: &[Point3], mut entries: Vec<Complex64>) -> Result<Self> {
        let n = sources.len();
        if entries.len() != n * n {
            return Err(CapaError::domain(format!("expected {} cross terms, got {}", n * n, entries.len())));
        }
        for (i, s) in sources.iter().enumerate() {
            entries[i * n + i] = Complex64::new(a_los_scatterer(rect, s)?, 0.0);
        }
        Ok(GainMatrix { n, entries })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.entries[i * self.n + j]
    }

    /// `(Σ_n |β_n|² M_nn, Σ_{n≠n'} β_n M_{nn'} β*_{n'})`.
    pub fn split_form(&self, beta: &[Complex64]) -> (f64, Complex64) {
        let mut diag = 0.0;
        let mut cross = Complex64::new(0.0, 0.0);
        for i in 0..self.n {
            diag += beta[i].norm_sqr() * self.entries[i * self.n + i].re;
            for j in 0..self.n {
                if i != j {
                    cross += beta[i] * self.entries[i * self.n + j] * beta[j].conj();
                }
            }
        }
        (diag, cross)
    }

    /// `Re Σ_{n,n'} β_n M_{nn'} β*_{n'}`.
    pub fn quadratic_form(&self, beta: &[Complex64]) -> f64 {
        let (d, c) = self.split_form(beta);
        d + c.re
    }
}

/// Terms of the structured NLoS SNR, without the `γ̄` prefactor except in `total`.
#[derive(Debug, Clone, PartialEq)]
pub struct NlosSnrTerms {
    /// `|α_n|² |g(s_n, s_u)|² a_LoS^{(n)}` per scatterer.
    pub diagonal: Vec<f64>,
    /// `Σ_{n≠n'} α_n α*_{n'} g(s_n, s_u) g*(s_{n'}, s_u) √(y_n y_{n'}) ρ_{n,n'}`.
    pub cross: Complex64,
    /// Linear SNR `γ̄ · (Σ diagonal + Re cross)`.
    pub total: f64,
}

/// Relative imaginary residue above which a quadratic form is reported as broken.
const IMAG_RESIDUE_TOL: f64 = 1e-9;

/// Structured NLoS SNR of the attached realization.
pub fn nlos_snr(rect: &RectAperture, g: &UserGeometry, sc: &ScattererSet, params: &ChannelParams, quad: &NlosQuadrature) -> Result<NlosSnrTerms> {
    let alpha = sc.require_realization()?;
    let to_user = scatterer_to_user(sc, g, params)?;
    let beta: Vec<Complex64> = alpha.iter().zip(&to_user).map(|(a, gu)| a * gu).collect();
    let m = GainMatrix::build(rect, &sc.positions(), params, quad)?;
    let diagonal: Vec<f64> = (0..beta.len()).map(|i| beta[i].norm_sqr() * m.get(i, i).re).collect();
    let (diag_sum, cross) = m.split_form(&beta);
    // Pairwise sums of a Hermitian form cancel their imaginary parts up to rounding.
    let scale = diag_sum + cross.norm();
    if cross.im.abs() > IMAG_RESIDUE_TOL * scale.max(f64::MIN_POSITIVE) {
        return Err(CapaError::Model(format!("cross terms are not conjugate-symmetric (imaginary residue {:e})", cross.im)));
    }
    Ok(NlosSnrTerms { diagonal, cross, total: params.gamma_bar * (diag_sum + cross.re) })
}

/// NLoS SNR by adaptive quadrature of `|h|²`, scaled by `γ̄·4π/(k₀²η²)`.
pub fn nlos_snr_numeric(rect: &RectAperture, g: &UserGeometry, sc: &ScattererSet, params: &ChannelParams, tol: f64) -> Result<f64> {
    let alpha = sc.require_realization()?;
    if alpha.is_empty() {
        return Ok(0.0);
    }
    let to_user = scatterer_to_user(sc, g, params)?;
    let beta: Vec<Complex64> = alpha.iter().zip(&to_user).map(|(a, gu)| a * gu).collect();
    let positions = sc.positions();
    let est = quadrature::quad2d_adaptive(
        |x, z| {
            let p = Point3::on_array(x, z);
            let mut h = Complex64::new(0.0, 0.0);
            for (s, b) in positions.iter().zip(&beta) {
                let d = p.distance(s);
                h += b * free_space_green(d, params) * (s.y / d).sqrt();
            }
            Complex64::new(h.norm_sqr(), 0.0)
        },
        rect,
        tol,
    )?;
    Ok(params.gamma_bar * 4.0 * PI / (params.k0 * params.k0 * params.eta * params.eta) * est.value.re)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::quad2d_adaptive;

    fn params() -> ChannelParams {
        ChannelParams::from_gamma_bar(0.0107, 1e4).unwrap()
    }

    fn user() -> UserGeometry {
        UserGeometry::new(10.0, PI / 6.0, PI / 3.0).unwrap()
    }

    fn set(points: &[(f64, f64, f64)], p: &ChannelParams) -> ScattererSet {
        let v = reference_variance(p);
        ScattererSet::new(points.iter().map(|&(x, y, z)| Scatterer { position: Point3::new(x, y, z), variance: v }).collect()).unwrap()
    }

    #[test]
    fn construction_checks() {
        let p = params();
        assert!(ScattererSet::new(vec![Scatterer { position: Point3::new(0.0, 0.0, 0.0), variance: 1.0 }]).is_err());
        let s = set(&[(0.0, 1.0, 0.0)], &p);
        assert!(s.clone().with_realization(vec![]).is_err());
        assert!(nlos_response(&Point3::on_array(0.0, 0.0), &user(), &s, &p).is_err());
    }

    #[test]
    fn response_examples() {
        let p = params();
        let g = user();
        let pt = Point3::on_array(0.2, -0.1);
        let empty = ScattererSet::new(vec![]).unwrap().with_realization(vec![]).unwrap();
        assert_eq!(nlos_response(&pt, &g, &empty, &p).unwrap(), Complex64::new(0.0, 0.0));

        let s1 = Point3::new(1.0, 3.0, -2.0);
        let one = set(&[(1.0, 3.0, -2.0)], &p).with_realization(vec![Complex64::new(1.0, 0.0)]).unwrap();
        let expected = projected_green(&pt, &s1, &p).unwrap() * free_space_green(s1.distance(&g.position()), &p);
        assert_eq!(nlos_response(&pt, &g, &one, &p).unwrap(), expected);

        let base = set(&[(1.0, 3.0, -2.0), (-2.0, 5.0, 1.0)], &p);
        let a = vec![Complex64::new(0.3, -1.1), Complex64::new(-0.7, 0.2)];
        let h1 = nlos_response(&pt, &g, &base.clone().with_realization(a.clone()).unwrap(), &p).unwrap();
        let h2 = nlos_response(&pt, &g, &base.with_realization(a.iter().map(|x| x * 2.0).collect()).unwrap(), &p).unwrap();
        assert!((h2 - h1 * 2.0).norm() <= 1e-14 * h2.norm());
    }

    #[test]
    fn a_los_examples() {
        let s = Point3::new(0.3, 0.5, -0.2);
        let huge = RectAperture::new(0.0, 0.0, 1e7, 1e7).unwrap();
        assert!((a_los_scatterer(&huge, &s).unwrap() - 0.5).abs() < 1e-6);

        let rect = RectAperture::new(0.1, 0.4, 1.3, 0.8).unwrap();
        let oracle = quad2d_adaptive(
            |x, z| Complex64::new(s.y / ((x - s.x).powi(2) + s.y * s.y + (z - s.z).powi(2)).powf(1.5) / (4.0 * PI), 0.0),
            &rect,
            1e-11,
        )
        .unwrap()
        .value
        .re;
        assert!((a_los_scatterer(&rect, &s).unwrap() - oracle).abs() <= 1e-8 * oracle);

        let under = Point3::new(0.0, 0.5, 0.0);
        let square = RectAperture::new(0.0, 0.0, 1.0, 1.0).unwrap();
        let one_term = (0.25f64 / (0.5 * 0.75f64.sqrt())).atan();
        assert!((a_los_scatterer(&square, &under).unwrap() - one_term / PI).abs() < 1e-15);
        assert!(a_los_scatterer(&square, &Point3::new(0.0, -1.0, 0.0)).is_err());
    }

    #[test]
    fn cross_term_diagonal_identity_and_symmetry() {
        let p = params();
        let rect = RectAperture::new(0.2, -0.1, 0.6, 0.5).unwrap();
        let a = Point3::new(1.0, 2.0, 0.5);
        let b = Point3::new(-0.5, 3.0, -1.0);
        let quad = NlosQuadrature::resolved(40, &p, &rect, &[a, b]).unwrap();
        let rho_aa = rho_cross(&rect, &a, &a, &p, &quad).unwrap();
        let closed = a_los_scatterer(&rect, &a).unwrap();
        assert!((rho_aa.re * a.y - closed).abs() <= 1e-10 * closed);
        assert!(rho_aa.im.abs() < 1e-18);

        let ab = rho_cross(&rect, &a, &b, &p, &quad).unwrap();
        let ba = rho_cross(&rect, &b, &a, &p, &quad).unwrap();
        assert_eq!(ab, ba.conj());
    }

    #[test]
    fn cross_term_matches_adaptive_oracle() {
        let p = params();
        let rect = RectAperture::new(0.0, 0.0, 0.5, 0.5).unwrap();
        let a = Point3::new(1.0, 2.0, 0.5);
        let b = Point3::new(-0.5, 3.0, -1.0);
        let quad = NlosQuadrature::resolved(40, &p, &rect, &[a, b]).unwrap();
        let structured = rho_cross(&rect, &a, &b, &p, &quad).unwrap();
        let oracle = quad2d_adaptive(
            |x, z| {
                let q = Point3::on_array(x, z);
                let (da, db) = (q.distance(&a), q.distance(&b));
                Complex64::from_polar((da * db).powf(-1.5) / (4.0 * PI), p.k0 * (db - da))
            },
            &rect,
            1e-9,
        )
        .unwrap()
        .value;
        assert!((structured - oracle).norm() <= 1e-6 * oracle.norm(), "{structured} vs {oracle}");
    }

    #[test]
    fn single_scatterer_has_no_cross_terms() {
        let p = params();
        let g = user();
        let rect = RectAperture::new(0.0, 0.0, 1.0, 1.0).unwrap();
        let alpha = Complex64::new(0.4, 0.9) * reference_variance(&p).sqrt();
        let sc = set(&[(0.5, 2.0, 0.3)], &p).with_realization(vec![alpha]).unwrap();
        let quad = NlosQuadrature::single(10).unwrap();
        let terms = nlos_snr(&rect, &g, &sc, &p, &quad).unwrap();
        let gu = free_space_green(sc.positions()[0].distance(&g.position()), &p);
        let a_los = a_los_scatterer(&rect, &sc.positions()[0]).unwrap();
        let expected = p.gamma_bar * alpha.norm_sqr() * gu.norm_sqr() * a_los;
        assert_eq!(terms.cross, Complex64::new(0.0, 0.0));
        assert!((terms.total - expected).abs() <= 1e-14 * expected);
        let numeric = nlos_snr_numeric(&rect, &g, &sc, &p, 1e-9).unwrap();
        assert!((numeric - expected).abs() <= 1e-8 * expected);
    }

    #[test]
    fn structured_snr_matches_direct_integral() {
        let p = params();
        let g = user();
        let rect = RectAperture::new(0.25, -0.2, 0.5, 0.4).unwrap();
        let var = reference_variance(&p).sqrt();
        let sc = set(&[(0.5, 2.0, 0.3), (-1.0, 1.5, 1.0), (2.0, 4.0, -1.0)], &p)
            .with_realization(vec![Complex64::new(0.4, 0.9) * var, Complex64::new(-1.2, 0.1) * var, Complex64::new(0.3, -0.5) * var])
            .unwrap();
        let quad = NlosQuadrature::resolved(40, &p, &rect, &sc.positions()).unwrap();
        let terms = nlos_snr(&rect, &g, &sc, &p, &quad).unwrap();
        let numeric = nlos_snr_numeric(&rect, &g, &sc, &p, 1e-8).unwrap();
        assert!((terms.total - numeric).abs() <= 1e-6 * numeric, "{} vs {numeric}", terms.total);
        assert!(terms.total > 0.0);

        let zero = sc.clone().with_realization(vec![Complex64::new(0.0, 0.0); 3]).unwrap();
        assert_eq!(nlos_snr(&rect, &g, &zero, &p, &quad).unwrap().total, 0.0);
        let doubled = sc.clone().with_realization(sc.realization().unwrap().iter().map(|a| a * 2.0).collect()).unwrap();
        let n2 = nlos_snr_numeric(&rect, &g, &doubled, &p, 1e-8).unwrap();
        assert!((n2 - 4.0 * numeric).abs() <= 1e-7 * n2);
    }

    #[test]
    fn resolved_layout_grows_with_aperture() {
        let p = params();
        let s = [Point3::new(0.0, 1.0, 0.0)];
        let small = NlosQuadrature::resolved(30, &p, &RectAperture::new(0.0, 0.0, 0.05, 0.05).unwrap(), &s).unwrap();
        let large = NlosQuadrature::resolved(30, &p, &RectAperture::new(0.0, 0.0, 2.0, 2.0).unwrap(), &s).unwrap();
        assert_eq!((small.panels_x, small.panels_z), (1, 1));
        assert!(large.panels_x > 10);
    }

    #[test]
    fn box_sampling_is_inside() {
        let p = params();
        let mut rng = crate::rng::substream(5, 0);
        let b = ScatterBox::default();
        let sc = b.sample(50, reference_variance(&p), &mut rng).unwrap();
        for s in sc.scatterers() {
            assert!((-5.0..=5.0).contains(&s.position.x) && (1.0..=10.0).contains(&s.position.y));
        }
    }
}
