//! Correlated Rayleigh sampling, Monte-Carlo outage probability of
//! best-segment selection, its high-SNR asymptote and diversity-order fits.

use super::correlation::CorrelationMatrix;
use crate::error::{CapaError, Result};
use crate::rng::{complex_normal, substream};
use num_complex::Complex64;
use rayon::prelude::*;

/// Trials per parallel work unit. Fixed so partial sums never depend on the
/// thread count.
const CHUNK: u64 = 1 << 14;

/// Two-sided 95% standard-normal quantile.
const Z95: f64 = 1.959_963_984_540_054;

/// Draws `h = R^{1/2} h̃` for `n` trials; trial `t` uses substream `t` of `seed`.
pub fn sample_correlated_gains(r: &CorrelationMatrix, n: usize, seed: u64) -> Vec<Vec<Complex64>> {
    (0..n as u64).into_par_iter().map(|t| draw(r, seed, t)).collect()
}

fn draw(r: &CorrelationMatrix, seed: u64, trial: u64) -> Vec<Complex64> {
    let mut rng = substream(seed, trial);
    let w: Vec<Complex64> = (0..r.dim()).map(|_| complex_normal(&mut rng)).collect();
    r.sqrt().mul_vec(&w)
}

/// Monte-Carlo outage estimate with its 95% Wilson half-width.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OutageEstimate {
    pub op: f64,
    pub half_width: f64,
    pub events: u64,
    pub trials: u64,
}

impl OutageEstimate {
    fn new(events: u64, trials: u64) -> Self {
        OutageEstimate { op: events as f64 / trials as f64, half_width: wilson_half_width(events, trials), events, trials }
    }
}

/// Half-width of the 95% Wilson score interval for `events` out of `trials`.
pub fn wilson_half_width(events: u64, trials: u64) -> f64 {
    if trials == 0 {
        return f64::NAN;
    }
    let n = trials as f64;
    let p = events as f64 / n;
    let z2 = Z95 * Z95;
    Z95 / (1.0 + z2 / n) * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt()
}

/// Counts, for every candidate subset and every threshold `x_j`, the trials in
/// which `max_{k∈subset} |h_k|² < x_j`. All subsets share the same draws of `h`,
/// so enlarging a subset can only lower its count.
pub fn selection_outage_counts(
    r: &CorrelationMatrix,
    subsets: &[Vec<usize>],
    thresholds: &[f64],
    trials: u64,
    seed: u64,
) -> Result<Vec<Vec<u64>>> {
    if trials == 0 {
        return Err(CapaError::domain("Monte Carlo needs at least one trial"));
    }
    for s in subsets {
        if s.is_empty() || s.iter().any(|&k| k >= r.dim()) {
            return Err(CapaError::domain(format!("invalid segment subset {s:?} for {} segments", r.dim())));
        }
    }
    // Ascending thresholds let each trial update a suffix of counters.
    let mut order: Vec<usize> = (0..thresholds.len()).collect();
    order.sort_by(|&a, &b| thresholds[a].total_cmp(&thresholds[b]));
    let sorted: Vec<f64> = order.iter().map(|&j| thresholds[j]).collect();

    let chunks = trials.div_ceil(CHUNK);
    let partial: Vec<Vec<Vec<u64>>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut diff = vec![vec![0u64; sorted.len() + 1]; subsets.len()];
            for t in c * CHUNK..((c + 1) * CHUNK).min(trials) {
                let h = draw(r, seed, t);
                for (s, subset) in subsets.iter().enumerate() {
                    let best = subset.iter().map(|&k| h[k].norm_sqr()).fold(0.0, f64::max);
                    // First threshold strictly above `best`; all later ones count too.
                    let first = sorted.partition_point(|&x| x <= best);
                    diff[s][first] += 1;
                }
            }
            diff
        })
        .collect();

    let mut counts = vec![vec![0u64; thresholds.len()]; subsets.len()];
    for (s, row) in counts.iter_mut().enumerate() {
        let mut running = 0u64;
        for (pos, &j) in order.iter().enumerate() {
            running += partial.iter().map(|d| d[s][pos]).sum::<u64>();
            row[j] = running;
        }
    }
    Ok(counts)
}

/// `Pr(γ̄ max_k |h_k|² < γ_th)` by Monte Carlo.
pub fn outage_probability_mc(r: &CorrelationMatrix, gamma_bar: f64, gamma_th: f64, trials: u64, seed: u64) -> Result<OutageEstimate> {
    if !(gamma_th > 0.0 && gamma_bar > 0.0) {
        return Err(CapaError::domain(format!("gamma_bar and gamma_th must be positive, got {gamma_bar}, {gamma_th}")));
    }
    let all: Vec<usize> = (0..r.dim()).collect();
    let counts = selection_outage_counts(r, &[all], &[gamma_th / gamma_bar], trials, seed)?;
    Ok(OutageEstimate::new(counts[0][0], trials))
}

/// High-SNR outage asymptote `γ̄^{−r} γ_th^{r} / det*(R)`.
pub fn outage_asymptote(r: &CorrelationMatrix, gamma_bar: f64, gamma_th: f64) -> Result<f64> {
    if r.rank() == 0 {
        return Err(CapaError::Model("outage asymptote is undefined for a zero correlation matrix".into()));
    }
    let rank = r.rank() as i32;
    Ok((gamma_th / gamma_bar).powi(rank) / r.pseudo_det())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OutagePoint {
    pub gamma_bar_db: f64,
    pub op: f64,
    pub half_width: f64,
    pub asymptote: f64,
    pub events: u64,
    pub trials: u64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct OutageCurve {
    pub points: Vec<OutagePoint>,
}

/// Outage curves over a `γ̄` grid for several candidate subsets, all from one
/// set of draws. Entry `s` of the result belongs to `subsets[s]`.
pub fn outage_curves(
    r: &CorrelationMatrix,
    subsets: &[Vec<usize>],
    gamma_bar_db: &[f64],
    gamma_th: f64,
    trials: u64,
    seed: u64,
) -> Result<Vec<OutageCurve>> {
    if !(gamma_th > 0.0) {
        return Err(CapaError::domain(format!("gamma_th must be positive, got {gamma_th}")));
    }
    let thresholds: Vec<f64> = gamma_bar_db.iter().map(|&db| gamma_th / crate::from_db(db)).collect();
    let counts = selection_outage_counts(r, subsets, &thresholds, trials, seed)?;
    subsets
        .iter()
        .zip(&counts)
        .map(|(subset, row)| {
            let sub = r.principal(subset)?;
            let points = gamma_bar_db
                .iter()
                .zip(row)
                .map(|(&db, &events)| {
                    let est = OutageEstimate::new(events, trials);
                    Ok(OutagePoint {
                        gamma_bar_db: db,
                        op: est.op,
                        half_width: est.half_width,
                        asymptote: outage_asymptote(&sub, crate::from_db(db), gamma_th)?,
                        events,
                        trials,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(OutageCurve { points })
        })
        .collect()
}

/// Negated least-squares slope of `log10(OP)` against `log10(γ̄)` over the
/// points with `γ̄` in `window` (dB, inclusive).
///
/// Monte-Carlo points with fewer than `min_events` outage events are dropped,
/// since their logarithm is dominated by counting noise; points built
/// without trials (`trials == 0`) are taken as exact.
pub fn fit_diversity_order(curve: &OutageCurve, window: (f64, f64), min_events: u64) -> Result<f64> {
    fit_log_slope(curve, window, min_events, |p| p.op)
}

/// Same fit applied to the asymptote column.
pub fn fit_asymptote_order(curve: &OutageCurve, window: (f64, f64)) -> Result<f64> {
    fit_log_slope(curve, window, 0, |p| p.asymptote)
}

fn fit_log_slope<F: Fn(&OutagePoint) -> f64>(curve: &OutageCurve, window: (f64, f64), min_events: u64, value: F) -> Result<f64> {
    let pts: Vec<(f64, f64)> = curve
        .points
        .iter()
        .filter(|p| p.gamma_bar_db >= window.0 && p.gamma_bar_db <= window.1)
        .filter(|p| value(p) > 0.0 && (p.trials == 0 || p.events >= min_events))
        .map(|p| (p.gamma_bar_db / 10.0, value(p).log10()))
        .collect();
    if pts.len() < 3 {
        return Err(CapaError::Model(format!(
            "diversity fit needs at least 3 usable points in [{}, {}] dB, found {}",
            window.0,
            window.1,
            pts.len()
        )));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    Ok(-sxy / sxx)
}
