//! Line-of-sight channel: spatial response, closed-form SNR of rectangular,
//! circular and linear apertures, asymptotic regimes, and the aperture-size
//! solver for a target SNR fraction.

use crate::error::{CapaError, Result};
use crate::geometry::{feasible_center_bounds, ArrayFrame, IntervalAperture, Point3, RectAperture, UserGeometry};
use crate::quadrature;
use crate::to_db;
use num_complex::Complex64;
use std::f64::consts::PI;

/// Free-space impedance, ohms.
pub const ETA: f64 = 120.0 * PI;

/// Wavelength-derived constants and the composite SNR scale `γ̄`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelParams {
    pub lambda: f64,
    pub k0: f64,
    pub eta: f64,
    /// Transmit aperture `λ²/(4π)`, m².
    pub a_s: f64,
    pub sigma2: f64,
    pub j_mag: f64,
    pub gamma_bar: f64,
}

impl ChannelParams {
    pub fn new(lambda: f64, sigma2: f64, j_mag: f64) -> Result<Self> {
        if !(lambda > 0.0 && sigma2 > 0.0 && j_mag > 0.0) {
            return Err(CapaError::domain(format!(
                "lambda, sigma2 and |J| must be positive, got {lambda}, {sigma2}, {j_mag}"
            )));
        }
        let k0 = 2.0 * PI / lambda;
        let a_s = lambda * lambda / (4.0 * PI);
        let gamma_bar = j_mag * j_mag * a_s * a_s * k0 * k0 * ETA * ETA / (4.0 * PI * sigma2);
        Ok(ChannelParams { lambda, k0, eta: ETA, a_s, sigma2, j_mag, gamma_bar })
    }

    /// Parameters with `|J| = 1` and the noise level chosen so that `γ̄` takes the given value.
    pub fn from_gamma_bar(lambda: f64, gamma_bar: f64) -> Result<Self> {
        if !(lambda > 0.0 && gamma_bar > 0.0) {
            return Err(CapaError::domain(format!("lambda and gamma_bar must be positive, got {lambda}, {gamma_bar}")));
        }
        let k0 = 2.0 * PI / lambda;
        let a_s = lambda * lambda / (4.0 * PI);
        let sigma2 = a_s * a_s * k0 * k0 * ETA * ETA / (4.0 * PI * gamma_bar);
        let mut p = Self::new(lambda, sigma2, 1.0)?;
        // Keep the requested value exactly rather than its round trip.
        p.gamma_bar = gamma_bar;
        Ok(p)
    }

    /// Same physical constants with a different `γ̄` (noise level adjusted).
    pub fn with_gamma_bar(&self, gamma_bar: f64) -> Result<Self> {
        Self::from_gamma_bar(self.lambda, gamma_bar)
    }

    /// `k₀²η²/(4π)`, the factor between `γ̄·a_R` and the raw `|J|²|A_S|²a_R/σ²` SNR.
    pub fn kernel_scale(&self) -> f64 {
        self.k0 * self.k0 * self.eta * self.eta / (4.0 * PI)
    }
}

/// Captured channel gain together with the resulting SNR.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SnrBreakdown {
    /// `∫|h|²` over the activated aperture.
    pub a_r: f64,
    pub snr: f64,
    pub snr_db: f64,
}

impl SnrBreakdown {
    pub fn from_snr(snr: f64, params: &ChannelParams) -> Self {
        SnrBreakdown { a_r: snr * params.kernel_scale() / params.gamma_bar, snr, snr_db: to_db(snr) }
    }

    pub fn from_gain(a_r: f64, params: &ChannelParams) -> Self {
        let snr = params.gamma_bar * a_r / params.kernel_scale();
        SnrBreakdown { a_r, snr, snr_db: to_db(snr) }
    }
}

/// Free-space Green's function `j k₀ η e^{−j k₀ d}/(4π d)`.
pub fn free_space_green(d: f64, params: &ChannelParams) -> Complex64 {
    let phase = Complex64::from_polar(1.0, -params.k0 * d);
    Complex64::new(0.0, params.k0 * params.eta / (4.0 * PI * d)) * phase
}

/// Response at array point `p` to a source at `src` in front of the array,
/// including the projected-aperture factor `√(src.y/d)`.
pub fn projected_green(p: &Point3, src: &Point3, params: &ChannelParams) -> Result<Complex64> {
    let d = p.distance(src);
    if d == 0.0 {
        return Err(CapaError::Singular(format!("source coincides with array point ({}, {}, {})", p.x, p.y, p.z)));
    }
    Ok(free_space_green(d, params) * (src.y / d).sqrt())
}

/// LoS spatial response at array point `p`.
pub fn los_response(p: &Point3, g: &UserGeometry, params: &ChannelParams) -> Result<Complex64> {
    projected_green(p, &g.position(), params)
}

/// `Σ_{x∈xs} Σ_{z∈zs} arctan(x z / (h √(h² + x² + z²)))`.
///
/// This is the integral of `h/(x² + h² + z²)^{3/2}` over a rectangle whose
/// edges lie at signed distances `xs`, `zs` on either side of the foot of the
/// perpendicular; it is scale-invariant, so all four arguments can be in
/// meters or normalized by a common length.
pub fn arctan_sum(h: f64, xs: [f64; 2], zs: [f64; 2]) -> f64 {
    let mut acc = 0.0;
    for &x in &xs {
        for &z in &zs {
            acc += (x * z / (h * (h * h + x * x + z * z).sqrt())).atan();
        }
    }
    acc
}

/// Projected solid angle `∫_rect h dx dz / ((x − px)² + h² + (z − pz)²)^{3/2}`
/// of `rect` seen from the point `(px, h, pz)`.
pub fn rect_solid_angle(rect: &RectAperture, px: f64, h: f64, pz: f64) -> f64 {
    let dx = px - rect.rx;
    let dz = pz - rect.rz;
    arctan_sum(h, [rect.ax / 2.0 + dx, rect.ax / 2.0 - dx], [rect.az / 2.0 + dz, rect.az / 2.0 - dz])
}

/// Closed-form LoS SNR of a rectangular aperture.
pub fn snr_rect_closed_form(g: &UserGeometry, rect: &RectAperture, params: &ChannelParams) -> SnrBreakdown {
    let r = g.r();
    let ex = g.cos_x() - rect.rx / r;
    let ez = g.cos_z() - rect.rz / r;
    let hx = rect.ax / (2.0 * r);
    let hz = rect.az / (2.0 * r);
    let sum = arctan_sum(g.cos_y(), [hx + ex, hx - ex], [hz + ez, hz - ez]);
    SnrBreakdown::from_snr(params.gamma_bar / (4.0 * PI) * sum, params)
}

/// LoS SNR of a rectangle by adaptive quadrature of `|h|²`; the numerical
/// counterpart of [`snr_rect_closed_form`].
pub fn snr_rect_numeric(g: &UserGeometry, rect: &RectAperture, params: &ChannelParams, tol: f64) -> Result<SnrBreakdown> {
    let (px, pz) = (g.r() * g.cos_x(), g.r() * g.cos_z());
    let h = g.height();
    let c = params.k0 * params.k0 * params.eta * params.eta / (16.0 * PI * PI);
    let est = quadrature::quad2d_adaptive(
        |x, z| {
            let d2 = (x - px) * (x - px) + h * h + (z - pz) * (z - pz);
            Complex64::new(c * h / (d2 * d2.sqrt()), 0.0)
        },
        rect,
        tol,
    )?;
    Ok(SnrBreakdown::from_gain(est.value.re, params))
}

/// SNR of an `ax × az` rectangle centred on the user's projection: the
/// upper bound over all placements.
pub fn snr_upper_bound(g: &UserGeometry, ax: f64, az: f64, params: &ChannelParams) -> f64 {
    let h = g.height();
    params.gamma_bar / PI * (ax * az / (2.0 * h * (4.0 * h * h + ax * ax + az * az).sqrt())).atan()
}

/// Normalized activated area `τ = |S|/(4 r² Ψ²)`.
pub fn tau(area: f64, g: &UserGeometry) -> f64 {
    let h = g.height();
    area / (4.0 * h * h)
}

fn check_tau(tau: f64) -> Result<()> {
    if tau >= 0.0 && tau.is_finite() {
        Ok(())
    } else {
        Err(CapaError::domain(format!("tau must be non-negative, got {tau}")))
    }
}

/// SNR of an aligned square as a function of `τ`.
pub fn snr_aligned_square(tau: f64, params: &ChannelParams) -> Result<f64> {
    check_tau(tau)?;
    Ok(params.gamma_bar / PI * (tau / (1.0 + 2.0 * tau).sqrt()).atan())
}

/// SNR of an aligned `side × side` square at the user's range.
pub fn snr_aligned_square_side(side: f64, g: &UserGeometry, params: &ChannelParams) -> Result<f64> {
    snr_aligned_square(tau(side * side, g), params)
}

/// SNR of an aligned disc as a function of `τ`.
pub fn snr_aligned_circle(tau: f64, params: &ChannelParams) -> Result<f64> {
    check_tau(tau)?;
    Ok(params.gamma_bar / 2.0 * (1.0 - 1.0 / (1.0 + 4.0 * tau / PI).sqrt()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Shape {
    Square,
    Circle,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    Far,
    Near,
}

/// Leading-order SNR of an aligned square or disc for `τ → 0` (far) or `τ → ∞` (near).
pub fn snr_asymptotic(shape: Shape, regime: Regime, tau: f64, params: &ChannelParams) -> Result<f64> {
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(CapaError::domain(format!("tau must be positive, got {tau}")));
    }
    let gb = params.gamma_bar;
    Ok(match (regime, shape) {
        (Regime::Far, _) => gb / PI * tau,
        (Regime::Near, Shape::Circle) => gb / 2.0 * (1.0 - (PI.sqrt() / 2.0) / tau.sqrt()),
        (Regime::Near, Shape::Square) => gb / 2.0 * (1.0 - (2.0 * 2f64.sqrt() / PI) / tau.sqrt()),
    })
}

/// SNR of a linear array: a strip of length `ax` and height `az` centred at `rx`.
pub fn snr_linear_interval(g: &UserGeometry, interval: &IntervalAperture, params: &ChannelParams) -> Result<f64> {
    let r = g.r();
    let rho2 = r * r * (g.cos_y() * g.cos_y() + g.cos_z() * g.cos_z());
    if !(rho2 > 0.0) {
        return Err(CapaError::Singular("user lies on the array axis".into()));
    }
    let c = r * g.cos_x() - interval.rx;
    let f = |x: f64| (x - c) / (rho2 * ((x - c) * (x - c) + rho2).sqrt());
    let span = f(interval.ax / 2.0) - f(-interval.ax / 2.0);
    Ok(params.gamma_bar * interval.az / (4.0 * PI) * g.height() * span)
}

/// Gain of the best `√f·Lx × √f·Lz` rectangle, placed at the feasible
/// center nearest to the user's projection.
pub fn snr_best_scaled_rect(g: &UserGeometry, frame: &ArrayFrame, f: f64, params: &ChannelParams) -> Result<f64> {
    let s = f.sqrt();
    let (ax, az) = (frame.lx * s, frame.lz * s);
    let bounds = feasible_center_bounds(frame, ax, az)?;
    let (rx, rz) = bounds.nearest(g.r() * g.cos_x(), g.r() * g.cos_z());
    Ok(snr_rect_closed_form(g, &RectAperture::new(rx, rz, ax, az)?, params).snr)
}

/// Smallest fraction of the full array area whose optimally placed,
/// similarly shaped rectangle reaches `beta` times the full-array SNR.
///
/// When the user's projection stays inside the feasible set this is the
/// aligned-square relation in `τ`; otherwise the clamped placement is used.
pub fn aperture_fraction_for_target(
    g: &UserGeometry,
    frame: &ArrayFrame,
    params: &ChannelParams,
    beta: f64,
) -> Result<f64> {
    if !(beta > 0.0 && beta < 1.0) {
        return Err(CapaError::domain(format!("beta must lie in (0, 1), got {beta}")));
    }
    let target = beta * snr_best_scaled_rect(g, frame, 1.0, params)?;
    let mut lo = 1e-15;
    let mut hi = 1.0;
    while hi - lo > 1e-10 {
        let mid = 0.5 * (lo + hi);
        if snr_best_scaled_rect(g, frame, mid, params)? < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::quad1d_adaptive;

    fn params() -> ChannelParams {
        ChannelParams::from_gamma_bar(0.0107, 1e4).unwrap()
    }

    fn reference_user() -> UserGeometry {
        UserGeometry::new(10.0, PI / 6.0, PI / 3.0).unwrap()
    }

    #[test]
    fn gamma_bar_round_trip() {
        let p = ChannelParams::new(0.0107, 3.5e-9, 2.0).unwrap();
        let again = ChannelParams::new(p.lambda, p.sigma2, p.j_mag).unwrap();
        assert!((again.gamma_bar - p.gamma_bar).abs() <= 1e-12 * p.gamma_bar);
        let q = ChannelParams::from_gamma_bar(0.0107, 1e4).unwrap();
        let recomputed = ChannelParams::new(q.lambda, q.sigma2, q.j_mag).unwrap().gamma_bar;
        assert!((recomputed - 1e4).abs() <= 1e-12 * 1e4);
        assert!(ChannelParams::new(-1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn broadside_response_magnitude_and_phase() {
        let p = params();
        let g = UserGeometry::broadside(3.0).unwrap();
        let h = los_response(&Point3::on_array(0.0, 0.0), &g, &p).unwrap();
        assert!((h.norm() - p.k0 * p.eta / (4.0 * PI * 3.0)).abs() < 1e-12 * h.norm());

        let g = UserGeometry::broadside(p.lambda).unwrap();
        let h = los_response(&Point3::on_array(0.0, 0.0), &g, &p).unwrap();
        let arg = h.arg().rem_euclid(2.0 * PI);
        assert!((arg - PI / 2.0).abs() < 1e-9, "arg {arg}");
    }

    #[test]
    fn response_rejects_coincident_points() {
        let p = params();
        let src = Point3::new(0.0, 0.0, 0.0);
        assert!(matches!(projected_green(&src, &src, &p), Err(CapaError::Singular(_))));
    }

    #[test]
    fn closed_form_matches_squared_response_integral() {
        let p = params();
        let g = reference_user();
        let rect = RectAperture::new(0.0, 0.0, 1.0, 1.0).unwrap();
        let direct = quadrature::quad2d_adaptive(
            |x, z| Complex64::new(los_response(&Point3::on_array(x, z), &g, &p).unwrap().norm_sqr(), 0.0),
            &rect,
            1e-10,
        )
        .unwrap()
        .value
        .re;
        let closed = snr_rect_closed_form(&g, &rect, &p);
        assert!((closed.a_r - direct).abs() <= 1e-9 * direct);
        let numeric = snr_rect_numeric(&g, &rect, &p, 1e-10).unwrap();
        assert!((closed.snr - numeric.snr).abs() <= 1e-9 * closed.snr);
        assert!(closed.snr < p.gamma_bar / 2.0);
    }

    #[test]
    fn aligned_placement_reaches_upper_bound() {
        let p = params();
        let g = UserGeometry::new(2.0, 1.2, 1.4).unwrap();
        let (px, pz) = (g.r() * g.cos_x(), g.r() * g.cos_z());
        let rect = RectAperture::new(px, pz, 0.7, 0.4).unwrap();
        let eq9 = snr_rect_closed_form(&g, &rect, &p).snr;
        let eq12 = snr_upper_bound(&g, 0.7, 0.4, &p);
        assert!((eq9 - eq12).abs() <= 1e-12 * eq12);
    }

    #[test]
    fn vanishing_aperture_gives_vanishing_snr() {
        let p = params();
        let rect = RectAperture::new(0.0, 0.0, 1e-12, 1.0).unwrap();
        assert!(snr_rect_closed_form(&reference_user(), &rect, &p).snr < 1e-8);
    }

    #[test]
    fn off_beam_rectangle_is_weaker() {
        let p = params();
        let g = UserGeometry::broadside(2.0).unwrap();
        let aligned = snr_rect_closed_form(&g, &RectAperture::new(0.0, 0.0, 0.5, 0.5).unwrap(), &p).snr;
        let off = snr_rect_closed_form(&g, &RectAperture::new(3.0, 0.0, 0.5, 0.5).unwrap(), &p).snr;
        assert!(off < aligned);
    }

    #[test]
    fn square_formula_examples() {
        let p = params();
        let gb = p.gamma_bar;
        assert!((snr_aligned_square(1.0, &p).unwrap() - gb / 6.0).abs() < 1e-12 * gb);
        assert_eq!(snr_aligned_square(0.0, &p).unwrap(), 0.0);
        let big = snr_aligned_square(1e6, &p).unwrap();
        assert!((gb / 2.0 - big) / (gb / 2.0) < 2e-3);
        assert!(snr_aligned_square(-1.0, &p).is_err());
    }

    #[test]
    fn square_formula_is_the_aligned_rectangle() {
        let p = params();
        let g = UserGeometry::broadside(1.5).unwrap();
        for side in [0.1, 0.5, 2.0, 7.0] {
            let rect = RectAperture::new(0.0, 0.0, side, side).unwrap();
            let exact = snr_rect_closed_form(&g, &rect, &p).snr;
            let via_tau = snr_aligned_square_side(side, &g, &p).unwrap();
            assert!((exact - via_tau).abs() <= 1e-12 * exact);
        }
    }

    #[test]
    fn circle_formula_examples() {
        let p = params();
        let gb = p.gamma_bar;
        let v = snr_aligned_circle(PI / 4.0, &p).unwrap();
        assert!((v / gb - 0.5 * (1.0 - 1.0 / 2f64.sqrt())).abs() < 1e-15);
        assert!((v / gb - 0.146447).abs() < 1e-6);
        assert_eq!(snr_aligned_circle(0.0, &p).unwrap(), 0.0);
    }

    #[test]
    fn circle_formula_matches_polar_integral() {
        let p = params();
        let h = 1.3;
        for radius in [0.05, 0.8, 4.0, 30.0] {
            let (val, _) = quad1d_adaptive(|rho| 2.0 * PI * rho * h / (rho * rho + h * h).powf(1.5), 0.0, radius, 1e-13).unwrap();
            let oracle = p.gamma_bar / (4.0 * PI) * val;
            let t = PI * radius * radius / (4.0 * h * h);
            let closed = snr_aligned_circle(t, &p).unwrap();
            assert!((closed - oracle).abs() <= 1e-10 * oracle, "radius {radius}");
        }
    }

    #[test]
    fn asymptotic_examples() {
        let p = params();
        let gb = p.gamma_bar;
        let fs = snr_asymptotic(Shape::Square, Regime::Far, 1e-3, &p).unwrap();
        let fc = snr_asymptotic(Shape::Circle, Regime::Far, 1e-3, &p).unwrap();
        assert_eq!(fs, fc);
        assert!((fs - gb / PI * 1e-3).abs() < 1e-15 * gb);

        let ns = snr_asymptotic(Shape::Square, Regime::Near, 1e4, &p).unwrap();
        let nc = snr_asymptotic(Shape::Circle, Regime::Near, 1e4, &p).unwrap();
        let ratio = (gb / 2.0 - nc) / (gb / 2.0 - ns);
        let expected = (PI.sqrt() / 2.0) / (2.0 * 2f64.sqrt() / PI);
        assert!((ratio - expected).abs() < 1e-12 && (ratio - 0.98).abs() < 0.005, "ratio {ratio}");

        let exact = snr_aligned_square(1e4, &p).unwrap();
        assert!((ns - exact).abs() <= 1e-3 * exact);
        assert!(snr_asymptotic(Shape::Square, Regime::Near, 0.0, &p).is_err());
    }

    #[test]
    fn linear_interval_examples() {
        let p = params();
        let g = reference_user();
        let empty = IntervalAperture::new(0.0, 0.0, 0.01).unwrap();
        assert_eq!(snr_linear_interval(&g, &empty, &p).unwrap(), 0.0);

        let r = g.r();
        let rho2 = r * r * (g.cos_y().powi(2) + g.cos_z().powi(2));
        let aligned = IntervalAperture::new(r * g.cos_x(), 3.0, 0.01).unwrap();
        let zeta = snr_linear_interval(&g, &aligned, &p).unwrap();
        let (val, _) = quad1d_adaptive(|x| g.height() / (x * x + rho2).powf(1.5), -1.5, 1.5, 1e-13).unwrap();
        let oracle = p.gamma_bar * 0.01 / (4.0 * PI) * val;
        assert!((zeta - oracle).abs() <= 1e-9 * oracle);

        let c = r * g.cos_x();
        let left = snr_linear_interval(&g, &IntervalAperture::new(c - 0.4, 1.0, 0.01).unwrap(), &p).unwrap();
        let right = snr_linear_interval(&g, &IntervalAperture::new(c + 0.4, 1.0, 0.01).unwrap(), &p).unwrap();
        assert!((left - right).abs() <= 1e-12 * left);
    }

    #[test]
    fn fraction_solver_far_field_is_linear() {
        let p = params();
        let g = UserGeometry::broadside(100.0).unwrap();
        let frame = ArrayFrame::square(2.0).unwrap();
        assert!(tau(frame.area(), &g) <= 1e-3);
        for beta in [0.2, 0.5, 0.8] {
            let f = aperture_fraction_for_target(&g, &frame, &p, beta).unwrap();
            assert!(f <= beta && f >= beta - 0.01, "beta {beta}: {f}");
        }
    }

    #[test]
    fn fraction_solver_near_field() {
        let p = params();
        let g = UserGeometry::new(2.0, PI / 6.0, PI / 3.0).unwrap();
        let frame = ArrayFrame::square(2.0).unwrap();
        let f = aperture_fraction_for_target(&g, &frame, &p, 0.6).unwrap();
        assert!(f < 0.4, "fraction {f}");
        assert!(aperture_fraction_for_target(&g, &frame, &p, 1.0).is_err());
    }

    #[test]
    fn fraction_solver_matches_square_relation_when_aligned() {
        let p = params();
        let g = UserGeometry::broadside(1.0).unwrap();
        let frame = ArrayFrame::square(2.0).unwrap();
        let beta = 0.6;
        let f = aperture_fraction_for_target(&g, &frame, &p, beta).unwrap();
        let full = snr_aligned_square(tau(frame.area(), &g), &p).unwrap();
        let got = snr_aligned_square(tau(f * frame.area(), &g), &p).unwrap();
        assert!((got / full - beta).abs() < 1e-8);
    }
}
