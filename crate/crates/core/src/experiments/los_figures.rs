//! LoS experiments: placement gains, the area/SNR trade-off and shape effects.

use super::{logspace, scaled_frame, CsvTable};
use crate::config::ExperimentConfig;
use crate::error::Result;
use crate::geometry::{RectAperture, UserGeometry};
use crate::los::{snr_aligned_circle, snr_aligned_square, snr_asymptotic, snr_best_scaled_rect, snr_rect_closed_form, ChannelParams, Regime, Shape};
use crate::selection::{make_segments, optimal_center_rect, select_best_segment, SegmentScheme};
use crate::to_db;

/// SNR against array area for the optimally placed aperture, the best of the
/// five-point segments and a fixed central aperture. Apertures are `Lx/8 × Lz/8`.
pub fn fig2a(cfg: &ExperimentConfig) -> Result<CsvTable> {
    let g = cfg.user()?;
    let params = cfg.channel()?;
    let mut t = CsvTable::new(
        "fig2a.csv",
        vec!["aperture_area_m2", "snr_db_optimal", "snr_db_segmented_five_point", "snr_db_noselect"],
    );
    t.note("array area swept log-spaced over [area_min, area_max]; aperture sides Lx/8 x Lz/8 (config Ax, Az unused)");
    t.note("segmented: best of five candidates (center plus four corners clipped to fit); noselect: aperture centered at the origin");
    for area in logspace(cfg.area_min, cfg.area_max, cfg.sweep_points) {
        let frame = scaled_frame(cfg, area)?;
        let (ax, az) = (frame.lx / 8.0, frame.lz / 8.0);
        let gain = |rect: &RectAperture| Ok(snr_rect_closed_form(&g, rect, &params).snr);

        let (rx, rz) = optimal_center_rect(&g, &frame, ax, az)?;
        let optimal = gain(&RectAperture::new(rx, rz, ax, az)?)?;
        let segments = make_segments(&frame, SegmentScheme::FivePoint { ax, az })?;
        let (_, segmented) = select_best_segment(&segments.rects(), gain)?;
        let noselect = gain(&RectAperture::new(0.0, 0.0, ax, az)?)?;
        t.push_numbers(&[area, to_db(optimal), to_db(segmented), to_db(noselect)]);
    }
    Ok(t)
}

/// Fraction of the full-array SNR reached by an optimally placed rectangle
/// covering a given fraction of the array, for every range in `r_list`.
pub fn fig2b(cfg: &ExperimentConfig) -> Result<CsvTable> {
    let frame = cfg.frame()?;
    let params = cfg.channel()?;
    let mut t = CsvTable::new("fig2b.csv", vec!["area_fraction", "snr_ratio", "r_m"]);
    t.note("fractions evenly spaced on (0, 1]; the rectangle keeps the array's aspect ratio and sits at the feasible center nearest the user's projection");
    let n = cfg.sweep_points;
    for &r in &cfg.r_list {
        let g = UserGeometry::new(r, cfg.phi, cfg.theta)?;
        let full = snr_best_scaled_rect(&g, &frame, 1.0, &params)?;
        for i in 1..=n {
            let f = i as f64 / n as f64;
            let ratio = snr_best_scaled_rect(&g, &frame, f, &params)? / full;
            t.push_numbers(&[f, ratio, r]);
        }
    }
    Ok(t)
}

fn unit_params(cfg: &ExperimentConfig) -> Result<ChannelParams> {
    ChannelParams::from_gamma_bar(cfg.lambda, 1.0)
}

/// Aligned square and disc SNRs against `τ`, with both asymptotes, in units of `γ̄`.
pub fn fig3a(cfg: &ExperimentConfig) -> Result<CsvTable> {
    let p = unit_params(cfg)?;
    let mut t = CsvTable::new(
        "fig3a.csv",
        vec!["tau", "square_exact", "circle_exact", "square_far", "square_near", "circle_far", "circle_near"],
    );
    t.note("tau log-spaced over [tau_min, tau_max]; all SNRs divided by gamma_bar");
    for tau in logspace(cfg.tau_min, cfg.tau_max, cfg.sweep_points) {
        t.push_numbers(&[
            tau,
            snr_aligned_square(tau, &p)?,
            snr_aligned_circle(tau, &p)?,
            snr_asymptotic(Shape::Square, Regime::Far, tau, &p)?,
            snr_asymptotic(Shape::Square, Regime::Near, tau, &p)?,
            snr_asymptotic(Shape::Circle, Regime::Far, tau, &p)?,
            snr_asymptotic(Shape::Circle, Regime::Near, tau, &p)?,
        ]);
    }
    Ok(t)
}

/// Disc-to-square SNR ratio at equal area against `τ`.
pub fn fig3b(cfg: &ExperimentConfig) -> Result<CsvTable> {
    let p = unit_params(cfg)?;
    let mut t = CsvTable::new("fig3b.csv", vec!["tau", "snr_ratio_circle_over_square"]);
    t.note("tau log-spaced over [tau_min, tau_max]");
    for tau in logspace(cfg.tau_min, cfg.tau_max, cfg.sweep_points) {
        t.push_numbers(&[tau, snr_aligned_circle(tau, &p)? / snr_aligned_square(tau, &p)?]);
    }
    Ok(t)
}
