//! Cross-checks of every closed form against its independent oracle,
//! reported as one row per check.

use super::{fmt_f64, CsvTable, ExperimentOutput};
use crate::config::ExperimentConfig;
use crate::error::Result;
use crate::geometry::{feasible_center_bounds, ArrayFrame, RectAperture, UserGeometry};
use crate::los::{
    snr_aligned_circle, snr_aligned_square, snr_rect_closed_form, snr_rect_numeric, snr_upper_bound, ChannelParams,
};
use crate::nlos::{a_los_scatterer, nlos_snr, nlos_snr_numeric, reference_variance, rho_cross, NlosQuadrature, ScatterBox};
use crate::rng::{derived_seed, substream};
use crate::selection::{brute_force_center_search, optimal_center_rect};
use crate::stochastic::{outage_probability_mc, simulate_matched_filter_mc, CMatrix, CorrelationMatrix};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

struct Check {
    name: &'static str,
    cases: usize,
    max_error: f64,
    tolerance: f64,
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn random_user(rng: &mut ChaCha8Rng) -> UserGeometry {
    loop {
        let r = rng.gen_range(1.0..50.0);
        let g = UserGeometry::new(r, rng.gen_range(0.05..PI - 0.05), rng.gen_range(0.05..PI - 0.05));
        if let Ok(g) = g {
            if g.cos_y() >= 0.1 {
                return g;
            }
        }
    }
}

fn random_rect(rng: &mut ChaCha8Rng, frame: &ArrayFrame) -> Result<RectAperture> {
    let (ax, az) = (rng.gen_range(0.1..=frame.lx), rng.gen_range(0.1..=frame.lz));
    let b = feasible_center_bounds(frame, ax, az)?;
    let rx = if b.x.1 > b.x.0 { rng.gen_range(b.x.0..=b.x.1) } else { b.x.0 };
    let rz = if b.z.1 > b.z.0 { rng.gen_range(b.z.0..=b.z.1) } else { b.z.0 };
    RectAperture::new(rx, rz, ax, az)
}

fn los_closed_vs_adaptive(cfg: &ExperimentConfig, p: &ChannelParams, seed: u64) -> Result<Check> {
    let frame = ArrayFrame::square(2.0)?;
    let mut rng = substream(seed, 0);
    let mut worst: f64 = 0.0;
    let cases = 20;
    for _ in 0..cases {
        let g = random_user(&mut rng);
        let rect = random_rect(&mut rng, &frame)?;
        let closed = snr_rect_closed_form(&g, &rect, p).snr;
        let numeric = snr_rect_numeric(&g, &rect, p, cfg.adaptive_tol.min(1e-8))?.snr;
        worst = worst.max(rel(closed, numeric));
    }
    Ok(Check { name: "los_closed_form_vs_adaptive_quadrature", cases, max_error: worst, tolerance: 1e-6 })
}

fn aligned_reduction(p: &ChannelParams, seed: u64) -> Result<Check> {
    let mut rng = substream(seed, 0);
    let mut worst: f64 = 0.0;
    let cases = 100;
    for _ in 0..cases {
        let g = random_user(&mut rng);
        let (ax, az) = (rng.gen_range(0.05..2.0), rng.gen_range(0.05..2.0));
        let rect = RectAperture::new(g.r() * g.cos_x(), g.r() * g.cos_z(), ax, az)?;
        worst = worst.max(rel(snr_rect_closed_form(&g, &rect, p).snr, snr_upper_bound(&g, ax, az, p)));
    }
    Ok(Check { name: "aligned_placement_equals_upper_bound", cases, max_error: worst, tolerance: 1e-12 })
}

fn placement_vs_grid(p: &ChannelParams, seed: u64) -> Result<Check> {
    let frame = ArrayFrame::square(2.0)?;
    let mut rng = substream(seed, 0);
    let mut worst: f64 = 0.0;
    let cases = 10;
    for _ in 0..cases {
        let g = UserGeometry::new(rng.gen_range(0.5..5.0), rng.gen_range(0.3..PI - 0.3), rng.gen_range(0.3..PI - 0.3))?;
        let (ax, az) = (rng.gen_range(0.1..1.5), rng.gen_range(0.1..1.5));
        let (rx, rz) = optimal_center_rect(&g, &frame, ax, az)?;
        let best = snr_rect_closed_form(&g, &RectAperture::new(rx, rz, ax, az)?, p).snr;
        let grid = brute_force_center_search(&frame, ax, az, |r| Ok(snr_rect_closed_form(&g, r, p).snr), (51, 51))?;
        worst = worst.max((grid.value - best) / best);
    }
    Ok(Check { name: "nearest_neighbor_placement_vs_grid_search_excess", cases, max_error: worst.max(0.0), tolerance: 1e-12 })
}

fn shape_limits(p: &ChannelParams) -> Result<Check> {
    // The deficits agree with their leading terms up to O(1/√τ).
    let tau = 1e6;
    let gb = p.gamma_bar;
    let ratio = (gb / 2.0 - snr_aligned_circle(tau, p)?) / (gb / 2.0 - snr_aligned_square(tau, p)?);
    let exact = (PI.sqrt() / 2.0) / (2.0 * 2f64.sqrt() / PI);
    Ok(Check { name: "near_field_deficit_ratio_circle_over_square", cases: 1, max_error: rel(ratio, exact), tolerance: 1e-2 })
}

fn nlos_checks(cfg: &ExperimentConfig, p: &ChannelParams, seed: u64) -> Result<[Check; 2]> {
    let g = cfg.user()?;
    let var = reference_variance(p);
    let mut diag_worst: f64 = 0.0;
    let mut snr_worst: f64 = 0.0;
    let cases = 3;
    for c in 0..cases {
        let mut rng = substream(seed, c as u64);
        let sc = ScatterBox::default().sample(4, var, &mut rng)?;
        let alpha = sc.sample_realization(&mut rng);
        let sc = sc.with_realization(alpha)?;
        let rect = RectAperture::new(rng.gen_range(-0.3..0.3), rng.gen_range(-0.3..0.3), 0.4, 0.4)?;
        let pos = sc.positions();
        let quad = NlosQuadrature::resolved(cfg.quad_order, p, &rect, &pos)?;
        for s in &pos {
            let q1 = NlosQuadrature::resolved(cfg.quad_order, p, &rect, std::slice::from_ref(s))?;
            let rho = rho_cross(&rect, s, s, p, &q1)?.re * s.y;
            diag_worst = diag_worst.max(rel(rho, a_los_scatterer(&rect, s)?));
        }
        let structured = nlos_snr(&rect, &g, &sc, p, &quad)?.total;
        let direct = nlos_snr_numeric(&rect, &g, &sc, p, 1e-9)?;
        snr_worst = snr_worst.max(rel(structured, direct));
    }
    Ok([
        Check { name: "nlos_structured_vs_adaptive_quadrature", cases, max_error: snr_worst, tolerance: 1e-4 },
        Check { name: "nlos_diagonal_quadrature_vs_closed_form", cases: 4 * cases, max_error: diag_worst, tolerance: 1e-6 },
    ])
}

fn single_segment_outage(seed: u64) -> Result<Check> {
    // One segment: |h|² is exponential, so OP = 1 − exp(−γ_th/(γ̄ λ)).
    let lambda = 2.5;
    let r = CorrelationMatrix::from_hermitian(CMatrix::diag(&[lambda]))?;
    let (gamma_bar, gamma_th) = (10.0, 3.0);
    let trials = 100_000;
    let est = outage_probability_mc(&r, gamma_bar, gamma_th, trials, seed)?;
    let exact = 1.0 - (-gamma_th / (gamma_bar * lambda)).exp();
    Ok(Check { name: "single_segment_outage_vs_exponential", cases: 1, max_error: rel(est.op, exact), tolerance: 4.0 * est.half_width / exact })
}

fn matched_filter(cfg: &ExperimentConfig, p: &ChannelParams, seed: u64) -> Result<[Check; 2]> {
    let g = cfg.user()?;
    let rect = RectAperture::new(0.2, -0.1, 0.5, 0.5)?;
    let est = simulate_matched_filter_mc(&rect, &g, p, (16, 16), 20_000, seed)?;
    let closed = snr_rect_closed_form(&g, &rect, p).snr;
    Ok([
        Check { name: "matched_filter_noise_variance", cases: 1, max_error: rel(est.noise_variance, p.sigma2 * est.a_r), tolerance: 0.05 },
        Check { name: "matched_filter_snr", cases: 1, max_error: rel(est.snr, closed), tolerance: 0.05 },
    ])
}

/// Runs every check. A failed check is reported in the table and in
/// `failures`; the table is produced either way.
pub fn verify(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    let p = cfg.channel()?;
    let seed = |tag: u64| derived_seed(cfg.seed, 100 + tag);
    let mut checks = vec![
        los_closed_vs_adaptive(cfg, &p, seed(0))?,
        aligned_reduction(&p, seed(1))?,
        placement_vs_grid(&p, seed(2))?,
        shape_limits(&p)?,
    ];
    checks.extend(nlos_checks(cfg, &p, seed(3))?);
    checks.push(single_segment_outage(seed(4))?);
    checks.extend(matched_filter(cfg, &p, seed(5))?);

    let mut t = CsvTable::new("verify.csv", vec!["check", "cases", "max_rel_error", "tolerance", "pass"]);
    t.note("max_rel_error is the worst relative deviation between a closed form and its oracle over the cases");
    let mut failures = Vec::new();
    for c in &checks {
        let pass = c.max_error.is_finite() && c.max_error <= c.tolerance;
        if !pass {
            failures.push(format!("{}: max relative error {:e} exceeds {:e}", c.name, c.max_error, c.tolerance));
        }
        t.rows.push(vec![
            c.name.to_string(),
            c.cases.to_string(),
            fmt_f64(c.max_error),
            fmt_f64(c.tolerance),
            if pass { "pass" } else { "fail" }.to_string(),
        ]);
    }
    Ok(ExperimentOutput { tables: vec![t], failures })
}
