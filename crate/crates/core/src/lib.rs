//! Aperture selection for continuous aperture arrays (CAPAs).
//!
//! The crate covers line-of-sight SNR in closed form together with the
//! nearest-neighbor placement rule, NLoS SNR through Gauss–Legendre cross
//! terms, and a segmentation-based outage and diversity analysis. Every closed
//! form has an independent numerical route (adaptive quadrature, exhaustive
//! grid search or Monte Carlo) so the two can be compared directly.
//!
//! Conventions: the array lies in the x–z plane centred at the origin with its
//! normal along +y. Lengths are in meters, angles in radians, SNRs linear.

pub mod config;
pub mod error;
pub mod experiments;
pub mod geometry;
pub mod los;
pub mod nlos;
pub mod quadrature;
pub mod rng;
pub mod selection;
pub mod stochastic;

pub use error::{CapaError, Result};
pub use geometry::{ArrayFrame, CircleAperture, IntervalAperture, Point3, RectAperture, UserGeometry};
pub use los::{ChannelParams, SnrBreakdown};
pub use num_complex::Complex64;

/// Linear power ratio to decibels.
pub fn to_db(linear: f64) -> f64 {
    10.0 * linear.log10()
}

/// Decibels to linear power ratio.
pub fn from_db(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}
