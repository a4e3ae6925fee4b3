//! Coordinate conventions and aperture descriptors.
//!
//! The receive array occupies `[-Lx/2, Lx/2] × {0} × [-Lz/2, Lz/2]`. A user at
//! range `r` with azimuth `phi` and elevation `theta` sits at
//! `r · (Phi, Psi, Theta)` where the direction cosines are
//! `Phi = cos(phi) sin(theta)`, `Psi = sin(phi) sin(theta)`, `Theta = cos(theta)`.

use crate::error::{CapaError, Result};
use std::f64::consts::PI;

/// Point in 3-D space, meters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Point3 {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Point3 { x, y, z }
    }

    /// Point `(x, 0, z)` on the array plane.
    pub const fn on_array(x: f64, z: f64) -> Self {
        Point3 { x, y: 0.0, z }
    }

    pub fn distance(&self, other: &Point3) -> f64 {
        let (dx, dy, dz) = (self.x - other.x, self.y - other.y, self.z - other.z);
        (dx * dx + dy * dy + dz * dz).sqrt()
    }

    pub fn norm(&self) -> f64 {
        (self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }
}

/// Direction cosines `(Phi, Psi, Theta)` of the direction with azimuth `phi`
/// and elevation `theta`, both in `[0, π]`.
pub fn direction_cosines(phi: f64, theta: f64) -> Result<(f64, f64, f64)> {
    if !(0.0..=PI).contains(&phi) || !(0.0..=PI).contains(&theta) {
        return Err(CapaError::domain(format!(
            "angles must lie in [0, π], got phi = {phi}, theta = {theta}"
        )));
    }
    let (sp, cp) = phi.sin_cos();
    let (st, ct) = theta.sin_cos();
    Ok((cp * st, sp * st, ct))
}

/// User location in spherical coordinates with cached direction cosines.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UserGeometry {
    r: f64,
    phi: f64,
    theta: f64,
    cos_x: f64,
    cos_y: f64,
    cos_z: f64,
}

impl UserGeometry {
    /// Fails unless `r > 0` and the user is strictly in front of the array (`Psi > 0`).
    pub fn new(r: f64, phi: f64, theta: f64) -> Result<Self> {
        if !(r > 0.0 && r.is_finite()) {
            return Err(CapaError::domain(format!("range must be positive, got {r}")));
        }
        let (cos_x, cos_y, cos_z) = direction_cosines(phi, theta)?;
        if cos_y <= 0.0 {
            return Err(CapaError::domain(format!(
                "user must lie in front of the array (Psi > 0), got Psi = {cos_y:e}"
            )));
        }
        Ok(UserGeometry { r, phi, theta, cos_x, cos_y, cos_z })
    }

    /// Broadside user at range `r` (`Phi = Theta = 0`, `Psi = 1`).
    pub fn broadside(r: f64) -> Result<Self> {
        Self::new(r, PI / 2.0, PI / 2.0)
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    /// `Phi = cos(phi) sin(theta)`.
    pub fn cos_x(&self) -> f64 {
        self.cos_x
    }

    /// `Psi = sin(phi) sin(theta)`, always positive.
    pub fn cos_y(&self) -> f64 {
        self.cos_y
    }

    /// `Theta = cos(theta)`.
    pub fn cos_z(&self) -> f64 {
        self.cos_z
    }

    pub fn position(&self) -> Point3 {
        Point3::new(self.r * self.cos_x, self.r * self.cos_y, self.r * self.cos_z)
    }

    /// Distance from the user to the array plane, `r·Psi`.
    pub fn height(&self) -> f64 {
        self.r * self.cos_y
    }
}

/// Orthogonal projection `(r·Phi, r·Theta)` of the user onto the array plane.
pub fn projection_onto_array(g: &UserGeometry) -> (f64, f64) {
    (g.r * g.cos_x, g.r * g.cos_z)
}

/// Closest point of `[a, b]` to `c`.
pub fn clamp_to_interval(c: f64, a: f64, b: f64) -> Result<f64> {
    if a > b {
        return Err(CapaError::domain(format!("empty interval [{a}, {b}]")));
    }
    Ok(if c < a {
        a
    } else if c > b {
        b
    } else {
        c
    })
}

/// Full receive array of physical size `lx × lz`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArrayFrame {
    pub lx: f64,
    pub lz: f64,
}

impl ArrayFrame {
    pub fn new(lx: f64, lz: f64) -> Result<Self> {
        if !(lx > 0.0 && lz > 0.0 && lx.is_finite() && lz.is_finite()) {
            return Err(CapaError::domain(format!("array dimensions must be positive, got {lx} × {lz}")));
        }
        Ok(ArrayFrame { lx, lz })
    }

    pub fn square(side: f64) -> Result<Self> {
        Self::new(side, side)
    }

    pub fn area(&self) -> f64 {
        self.lx * self.lz
    }

    /// The whole array as an aperture centred at the origin.
    pub fn full_aperture(&self) -> RectAperture {
        RectAperture { rx: 0.0, rz: 0.0, ax: self.lx, az: self.lz }
    }
}

/// Closed interval of admissible center coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CenterBounds {
    pub x: (f64, f64),
    pub z: (f64, f64),
}

impl CenterBounds {
    pub fn contains(&self, rx: f64, rz: f64) -> bool {
        (self.x.0..=self.x.1).contains(&rx) && (self.z.0..=self.z.1).contains(&rz)
    }

    /// Euclidean projection of `(x, z)` onto the box.
    pub fn nearest(&self, x: f64, z: f64) -> (f64, f64) {
        (x.clamp(self.x.0, self.x.1), z.clamp(self.z.0, self.z.1))
    }
}

/// Feasible set of centers for an `ax × az` rectangle inside `frame`.
pub fn feasible_center_bounds(frame: &ArrayFrame, ax: f64, az: f64) -> Result<CenterBounds> {
    if !(ax > 0.0 && az > 0.0) {
        return Err(CapaError::domain(format!("aperture sides must be positive, got {ax} × {az}")));
    }
    if ax > frame.lx {
        return Err(CapaError::ApertureTooLarge { axis: 'x', side: ax, limit: frame.lx });
    }
    if az > frame.lz {
        return Err(CapaError::ApertureTooLarge { axis: 'z', side: az, limit: frame.lz });
    }
    let hx = (frame.lx - ax) / 2.0;
    let hz = (frame.lz - az) / 2.0;
    Ok(CenterBounds { x: (-hx, hx), z: (-hz, hz) })
}

/// Activated `ax × az` rectangle centred at `(rx, 0, rz)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RectAperture {
    pub rx: f64,
    pub rz: f64,
    pub ax: f64,
    pub az: f64,
}

impl RectAperture {
    pub fn new(rx: f64, rz: f64, ax: f64, az: f64) -> Result<Self> {
        if !(ax > 0.0 && az > 0.0) {
            return Err(CapaError::domain(format!("aperture sides must be positive, got {ax} × {az}")));
        }
        if !(rx.is_finite() && rz.is_finite() && ax.is_finite() && az.is_finite()) {
            return Err(CapaError::domain("aperture parameters must be finite"));
        }
        Ok(RectAperture { rx, rz, ax, az })
    }

    pub fn area(&self) -> f64 {
        self.ax * self.az
    }

    pub fn x_range(&self) -> (f64, f64) {
        (self.rx - self.ax / 2.0, self.rx + self.ax / 2.0)
    }

    pub fn z_range(&self) -> (f64, f64) {
        (self.rz - self.az / 2.0, self.rz + self.az / 2.0)
    }

    /// Checks containment in `frame` (with a relative slack of 1e-12 for rounding).
    pub fn validate_in(&self, frame: &ArrayFrame) -> Result<()> {
        let bounds = feasible_center_bounds(frame, self.ax, self.az)?;
        let slack = 1e-12 * frame.lx.max(frame.lz);
        if self.rx.abs() > bounds.x.1 + slack || self.rz.abs() > bounds.z.1 + slack {
            return Err(CapaError::domain(format!(
                "aperture centred at ({}, {}) with sides {} × {} leaves the {} × {} array",
                self.rx, self.rz, self.ax, self.az, frame.lx, frame.lz
            )));
        }
        Ok(())
    }

    /// Splits the rectangle into `nx × nz` equal panels in row-major order (z outer).
    pub fn panels(&self, nx: usize, nz: usize) -> Vec<RectAperture> {
        let (x0, _) = self.x_range();
        let (z0, _) = self.z_range();
        let wx = self.ax / nx as f64;
        let wz = self.az / nz as f64;
        let mut out = Vec::with_capacity(nx * nz);
        for i in 0..nz {
            for j in 0..nx {
                out.push(RectAperture {
                    rx: x0 + (j as f64 + 0.5) * wx,
                    rz: z0 + (i as f64 + 0.5) * wz,
                    ax: wx,
                    az: wz,
                });
            }
        }
        out
    }
}

/// Activated disc of radius `radius` centred at `(rx, 0, rz)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CircleAperture {
    pub rx: f64,
    pub rz: f64,
    pub radius: f64,
}

impl CircleAperture {
    pub fn new(rx: f64, rz: f64, radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(CapaError::domain(format!("radius must be positive, got {radius}")));
        }
        Ok(CircleAperture { rx, rz, radius })
    }

    pub fn area(&self) -> f64 {
        PI * self.radius * self.radius
    }
}

/// Interval `[rx - ax/2, rx + ax/2]` of a linear array made of a strip of height `az`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntervalAperture {
    pub rx: f64,
    pub ax: f64,
    pub az: f64,
}

impl IntervalAperture {
    /// `ax = 0` is accepted and describes an empty interval.
    pub fn new(rx: f64, ax: f64, az: f64) -> Result<Self> {
        if !(ax >= 0.0 && az > 0.0) {
            return Err(CapaError::domain(format!("interval needs ax ≥ 0 and az > 0, got {ax}, {az}")));
        }
        Ok(IntervalAperture { rx, ax, az })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn direction_cosines_match_reference_angles() {
        let (p, s, t) = direction_cosines(PI / 6.0, PI / 3.0).unwrap();
        assert!((p - 0.75).abs() < 1e-15);
        assert!((s - 0.4330127018922193).abs() < 1e-15);
        assert!((t - 0.5).abs() < 1e-15);

        let (p, s, t) = direction_cosines(PI / 2.0, PI / 2.0).unwrap();
        assert!(p.abs() < 1e-15 && (s - 1.0).abs() < 1e-15 && t.abs() < 1e-15);
    }

    #[test]
    fn in_plane_user_is_rejected() {
        let (p, s, t) = direction_cosines(0.0, PI / 2.0).unwrap();
        assert!((p - 1.0).abs() < 1e-15 && s == 0.0 && t.abs() < 1e-15);
        assert!(matches!(UserGeometry::new(1.0, 0.0, PI / 2.0), Err(CapaError::Domain(_))));
        // theta = 0 puts the user on the z-axis: Psi = 0.
        assert!(UserGeometry::new(1.0, PI / 2.0, 0.0).is_err());
    }

    #[test]
    fn out_of_range_angles_are_domain_errors() {
        assert!(direction_cosines(-0.1, 1.0).is_err());
        assert!(direction_cosines(1.0, 3.5).is_err());
        assert!(UserGeometry::new(-1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn projection_examples() {
        let g = UserGeometry::new(10.0, PI / 6.0, PI / 3.0).unwrap();
        let (x, z) = projection_onto_array(&g);
        assert!((x - 7.5).abs() < 1e-12 && (z - 5.0).abs() < 1e-12);

        let b = UserGeometry::broadside(5.0).unwrap();
        let (x, z) = projection_onto_array(&b);
        assert!(x.abs() < 1e-15 && z.abs() < 1e-15);
    }

    #[test]
    fn clamp_examples() {
        assert_eq!(clamp_to_interval(5.0, -1.0, 1.0).unwrap(), 1.0);
        assert_eq!(clamp_to_interval(0.0, -1.0, 1.0).unwrap(), 0.0);
        assert_eq!(clamp_to_interval(-3.0, -1.0, 1.0).unwrap(), -1.0);
        assert!(clamp_to_interval(0.0, 1.0, -1.0).is_err());
    }

    #[test]
    fn feasible_bounds_examples() {
        let frame = ArrayFrame::square(2.0).unwrap();
        let b = feasible_center_bounds(&frame, 1.0, 1.0).unwrap();
        assert_eq!(b.x, (-0.5, 0.5));
        assert_eq!(b.z, (-0.5, 0.5));

        let b = feasible_center_bounds(&frame, 2.0, 1.0).unwrap();
        assert_eq!(b.x.1 - b.x.0, 0.0);

        assert!(matches!(
            feasible_center_bounds(&frame, 3.0, 1.0),
            Err(CapaError::ApertureTooLarge { axis: 'x', .. })
        ));
    }

    #[test]
    fn containment_is_checked_lazily() {
        let rect = RectAperture::new(0.8, 0.0, 1.0, 1.0).unwrap();
        assert!(rect.validate_in(&ArrayFrame::square(2.0).unwrap()).is_err());
        assert!(rect.validate_in(&ArrayFrame::square(4.0).unwrap()).is_ok());
    }

    #[test]
    fn panels_tile_the_rectangle() {
        let rect = RectAperture::new(0.3, -0.2, 1.2, 0.6).unwrap();
        let panels = rect.panels(3, 2);
        let area: f64 = panels.iter().map(|p| p.area()).sum();
        assert!((area - rect.area()).abs() < 1e-15);
        assert!((panels[0].x_range().0 - rect.x_range().0).abs() < 1e-15);
        assert!((panels[5].z_range().1 - rect.z_range().1).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn direction_cosines_are_unit_norm(phi in 0.0..=PI, theta in 0.0..=PI) {
            let (p, s, t) = direction_cosines(phi, theta).unwrap();
            prop_assert!((p * p + s * s + t * t - 1.0).abs() < 1e-12);
        }

        #[test]
        fn clamp_is_idempotent_and_inside(c in -10.0..10.0f64, a in -5.0..5.0f64, w in 0.0..5.0f64) {
            let b = a + w;
            let once = clamp_to_interval(c, a, b).unwrap();
            prop_assert!(once >= a && once <= b);
            prop_assert_eq!(clamp_to_interval(once, a, b).unwrap(), once);
        }

        #[test]
        fn feasible_bounds_are_symmetric_and_shrink(lx in 0.1..5.0f64, f1 in 0.01..1.0f64, f2 in 0.01..1.0f64) {
            let frame = ArrayFrame::new(lx, lx).unwrap();
            let (small, large) = if f1 < f2 { (f1, f2) } else { (f2, f1) };
            let a = feasible_center_bounds(&frame, small * lx, small * lx).unwrap();
            let b = feasible_center_bounds(&frame, large * lx, large * lx).unwrap();
            prop_assert_eq!(a.x.0, -a.x.1);
            prop_assert_eq!(a.z.0, -a.z.1);
            prop_assert!(b.x.1 <= a.x.1 && b.z.1 <= a.z.1);
        }
    }
}
