//! Monte-Carlo check of the matched-filter output statistics on a discretized aperture.
//!
//! The aperture is cut into `m × n` cells of area `ΔA`. White noise with
//! density `σ²` integrates over a cell to `N_c ~ CN(0, σ² ΔA)`. Combining the
//! cell observations with the conjugate channel gives the signal term
//! `s·J·|A_S|·Σ|h_c|²ΔA` and the noise term `Σ h_c* N_c`, whose variance should
//! approach `σ²·a_R`.

use crate::error::{CapaError, Result};
use crate::geometry::{Point3, RectAperture, UserGeometry};
use crate::los::{los_response, ChannelParams};
use crate::rng::{complex_normal, substream};
use num_complex::Complex64;
use rayon::prelude::*;

const CHUNK: u64 = 1 << 10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatchedFilterEstimate {
    /// Empirical `E|Σ h_c* N_c|²`.
    pub noise_variance: f64,
    /// `|J|²|A_S|²(Σ|h_c|²ΔA)² / noise_variance`.
    pub snr: f64,
    /// Discretized `a_R = Σ|h_c|²ΔA`.
    pub a_r: f64,
}

/// Simulates the combiner output for channel `h(x, z)` with source amplitude
/// `signal` (`|J|·|A_S|`) and noise density `sigma2`.
pub fn simulate_matched_filter<F>(
    rect: &RectAperture,
    channel: F,
    signal: f64,
    sigma2: f64,
    grid: (usize, usize),
    trials: u64,
    seed: u64,
) -> Result<MatchedFilterEstimate>
where
    F: Fn(f64, f64) -> Result<Complex64>,
{
    let (m, n) = grid;
    if m < 16 || n < 16 {
        return Err(CapaError::domain(format!("matched-filter grid must be at least 16 × 16, got {m} × {n}")));
    }
    if trials == 0 {
        return Err(CapaError::domain("Monte Carlo needs at least one trial"));
    }
    if !(sigma2 > 0.0) {
        return Err(CapaError::domain(format!("noise level must be positive, got {sigma2}")));
    }
    let cells = rect.panels(m, n);
    let da = rect.area() / (m * n) as f64;
    let h: Vec<Complex64> = cells.iter().map(|c| channel(c.rx, c.rz)).collect::<Result<_>>()?;
    let a_r: f64 = h.iter().map(|v| v.norm_sqr()).sum::<f64>() * da;
    let cell_std = (sigma2 * da).sqrt();

    let chunks = trials.div_ceil(CHUNK);
    let partial: Vec<f64> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut acc = 0.0;
            for t in c * CHUNK..((c + 1) * CHUNK).min(trials) {
                let mut rng = substream(seed, t);
                let mut out = Complex64::new(0.0, 0.0);
                for hc in &h {
                    out += hc.conj() * complex_normal(&mut rng) * cell_std;
                }
                acc += out.norm_sqr();
            }
            acc
        })
        .collect();
    let noise_variance = partial.iter().sum::<f64>() / trials as f64;
    let signal_term = signal * a_r;
    let snr = if signal_term == 0.0 { 0.0 } else { signal_term * signal_term / noise_variance };
    Ok(MatchedFilterEstimate { noise_variance, snr, a_r })
}

/// Matched-filter simulation for the LoS channel of user `g`.
pub fn simulate_matched_filter_mc(
    rect: &RectAperture,
    g: &UserGeometry,
    params: &ChannelParams,
    grid: (usize, usize),
    trials: u64,
    seed: u64,
) -> Result<MatchedFilterEstimate> {
    simulate_matched_filter(
        rect,
        |x, z| los_response(&Point3::on_array(x, z), g, params),
        params.j_mag * params.a_s,
        params.sigma2,
        grid,
        trials,
        seed,
    )
}
