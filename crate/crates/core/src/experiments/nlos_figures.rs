//! NLoS experiments: aperture selection under scattering and outage of
//! best-segment selection.

use super::{linspace, logspace, scaled_frame, CsvTable};
use crate::config::ExperimentConfig;
use crate::error::{CapaError, Result};
use crate::geometry::{feasible_center_bounds, Point3, RectAperture};
use crate::los::ChannelParams;
use crate::nlos::{cross_terms, reference_variance, scatterer_to_user, GainMatrix, NlosQuadrature, ScattererSet};
use crate::rng::{derived_seed, substream};
use crate::selection::{grid_coordinate, make_segments, SegmentScheme};
use crate::stochastic::{correlation_matrix, outage_curves};
use crate::{from_db, to_db, Complex64};
use rayon::prelude::*;

const SCATTERER_TAG: u64 = 1;
const ALPHA_TAG: u64 = 2;
const OUTAGE_TAG: u64 = 3;

/// Scatterer positions shared by the NLoS experiments, drawn uniformly from
/// the configured box with the reference variance.
pub fn sample_scatterers(cfg: &ExperimentConfig, params: &ChannelParams) -> Result<ScattererSet> {
    let mut rng = substream(derived_seed(cfg.seed, SCATTERER_TAG), 0);
    cfg.scatter_box.sample(cfg.scatterer_count, reference_variance(params), &mut rng)
}

fn describe_scatterers(t: &mut CsvTable, sc: &ScattererSet) {
    for (i, s) in sc.scatterers().iter().enumerate() {
        t.note(format!(
            "scatterer {i}: position ({:e}, {:e}, {:e}) variance {:e}",
            s.position.x, s.position.y, s.position.z, s.variance
        ));
    }
}

/// Captured-power matrices for every center of an `m × m` search grid.
///
/// With apertures of half the array side, the grid step divides the array
/// into `2(m-1)` cells per axis and every candidate covers exactly
/// `(m-1) × (m-1)` of them. Cross terms are integrated once per cell and
/// summed per candidate; the diagonal is closed form.
fn grid_gain_matrices(
    lx: f64,
    lz: f64,
    m: usize,
    sources: &[Point3],
    params: &ChannelParams,
    order: usize,
) -> Result<Vec<GainMatrix>> {
    let nc = 2 * (m - 1);
    let (dx, dz) = (lx / nc as f64, lz / nc as f64);
    let edge = |i: usize, d: f64, l: f64| if i == nc { l / 2.0 } else { -l / 2.0 + i as f64 * d };
    let cells: Vec<Vec<Complex64>> = (0..nc * nc)
        .into_par_iter()
        .map(|c| {
            let (i, j) = (c % nc, c / nc);
            let (x0, x1) = (edge(i, dx, lx), edge(i + 1, dx, lx));
            let (z0, z1) = (edge(j, dz, lz), edge(j + 1, dz, lz));
            let cell = RectAperture::new(0.5 * (x0 + x1), 0.5 * (z0 + z1), x1 - x0, z1 - z0)?;
            let quad = NlosQuadrature::resolved(order, params, &cell, sources)?;
            cross_terms(&cell, sources, params, &quad)
        })
        .collect::<Result<_>>()?;

    let (ax, az) = (lx / 2.0, lz / 2.0);
    let bounds = feasible_center_bounds(&crate::geometry::ArrayFrame::new(lx, lz)?, ax, az)?;
    let n2 = sources.len() * sources.len();
    (0..m * m)
        .into_par_iter()
        .map(|idx| {
            let (a, b) = (idx % m, idx / m);
            let mut sum = vec![Complex64::new(0.0, 0.0); n2];
            for j in b..b + m - 1 {
                for i in a..a + m - 1 {
                    for (s, v) in sum.iter_mut().zip(&cells[j * nc + i]) {
                        *s += v;
                    }
                }
            }
            let rx = grid_coordinate(bounds.x.0, bounds.x.1, a, m);
            let rz = grid_coordinate(bounds.z.0, bounds.z.1, b, m);
            GainMatrix::from_cross_terms(&RectAperture::new(rx, rz, ax, az)?, sources, sum)
        })
        .collect()
}

/// Grid index of the center nearest `(x, z)`, which must be a grid point.
fn grid_index(x: f64, z: f64, lo: (f64, f64), hi: (f64, f64), m: usize) -> Result<usize> {
    let snap = |v: f64, lo: f64, hi: f64| {
        let i = ((v - lo) / (hi - lo) * (m - 1) as f64).round() as usize;
        let on_grid = (grid_coordinate(lo, hi, i, m) - v).abs() <= 1e-9 * (hi - lo);
        on_grid.then_some(i)
    };
    match (snap(x, lo.0, hi.0), snap(z, lo.1, hi.1)) {
        (Some(i), Some(j)) => Ok(j * m + i),
        _ => Err(CapaError::Model(format!("segment center ({x}, {z}) is not on the search grid"))),
    }
}

/// Reflection-averaged NLoS SNR against array area for exhaustive center
/// search, best five-point segment and a fixed central aperture, with
/// apertures of half the array side.
pub fn fig4a(cfg: &ExperimentConfig) -> Result<CsvTable> {
    let g = cfg.user()?;
    let params = cfg.channel()?;
    let sc = sample_scatterers(cfg, &params)?;
    let positions = sc.positions();
    let to_user = scatterer_to_user(&sc, &g, &params)?;
    let alpha_seed = derived_seed(cfg.seed, ALPHA_TAG);
    let betas: Vec<Vec<Complex64>> = (0..cfg.trials)
        .map(|t| {
            let alpha = sc.sample_realization(&mut substream(alpha_seed, t));
            alpha.iter().zip(&to_user).map(|(a, u)| a * u).collect()
        })
        .collect();

    let m = cfg.search_grid;
    let mut t = CsvTable::new("fig4a.csv", vec!["aperture_area_m2", "snr_db_bruteforce", "snr_db_segmented", "snr_db_noselect"]);
    t.note("array area swept log-spaced over [area_min, area_max]; aperture sides Lx/2 x Lz/2 (config Ax, Az unused)");
    t.note(format!(
        "each column is the mean over {} reflection realizations of the per-realization SNR; every realization selects its own best aperture",
        cfg.trials
    ));
    t.note(format!("bruteforce: {m} x {m} grid of centers over the feasible set; it contains the five segment centers and the origin"));
    t.note("segmented: best of five candidates (center plus four corners clipped to fit); noselect: aperture centered at the origin");
    describe_scatterers(&mut t, &sc);

    for area in logspace(cfg.area_min, cfg.area_max, cfg.sweep_points) {
        let frame = scaled_frame(cfg, area)?;
        let (ax, az) = (frame.lx / 2.0, frame.lz / 2.0);
        let bounds = feasible_center_bounds(&frame, ax, az)?;
        let (lo, hi) = ((bounds.x.0, bounds.z.0), (bounds.x.1, bounds.z.1));
        let segment_idx: Vec<usize> = make_segments(&frame, SegmentScheme::FivePoint { ax, az })?
            .rects()
            .iter()
            .map(|r| grid_index(r.rx, r.rz, lo, hi, m))
            .collect::<Result<_>>()?;
        let center_idx = grid_index(0.0, 0.0, lo, hi, m)?;
        let matrices = grid_gain_matrices(frame.lx, frame.lz, m, &positions, &params, cfg.quad_order)?;

        let (mut brute, mut segmented, mut noselect) = (0.0, 0.0, 0.0);
        let mut values = vec![0.0; matrices.len()];
        for beta in &betas {
            for (v, mat) in values.iter_mut().zip(&matrices) {
                *v = params.gamma_bar * mat.quadratic_form(beta);
            }
            brute += values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            segmented += segment_idx.iter().map(|&i| values[i]).fold(f64::NEG_INFINITY, f64::max);
            noselect += values[center_idx];
        }
        let n = betas.len() as f64;
        t.push_numbers(&[area, to_db(brute / n), to_db(segmented / n), to_db(noselect / n)]);
    }
    Ok(t)
}

/// Width of the automatic `γ̄` window in dB.
const AUTO_SPAN_DB: f64 = 50.0;

/// Monte-Carlo outage probability of best-segment selection with its 95%
/// interval and high-SNR asymptote, for the first `K` segments of the
/// configured segmentation and every `K` in `k_list`.
pub fn fig4b(cfg: &ExperimentConfig) -> Result<CsvTable> {
    let g = cfg.user()?;
    let params = cfg.channel()?;
    let sc = sample_scatterers(cfg, &params)?;
    let frame = cfg.frame()?;
    let segments = make_segments(&frame, cfg.segmentation.scheme(cfg.ax, cfg.az))?;
    let rects = segments.rects();
    if let Some(&k) = cfg.k_list.iter().find(|&&k| k > rects.len()) {
        return Err(CapaError::Config {
            line: 0,
            message: format!("k_list asks for {k} segments but the segmentation has {}", rects.len()),
        });
    }
    let r = correlation_matrix(&rects, &sc, &g, &params, cfg.quad_order)?;
    if r.is_zero() {
        return Err(CapaError::Model("segment correlation matrix is zero".into()));
    }
    let gamma_th = from_db(cfg.gamma_th_db);

    // Outage sets in once γ̄ λ_max reaches γ_th.
    let onset = cfg.gamma_th_db - to_db(r.eigenvalues()[0]);
    let (lo, hi) = match (cfg.gamma_bar_db_min, cfg.gamma_bar_db_max) {
        (Some(lo), Some(hi)) => (lo, hi),
        (Some(lo), None) => (lo, lo + AUTO_SPAN_DB),
        (None, Some(hi)) => (hi - AUTO_SPAN_DB, hi),
        (None, None) => {
            let lo = (onset - 5.0).floor();
            (lo, lo + AUTO_SPAN_DB)
        }
    };
    let grid = linspace(lo, hi, cfg.sweep_points);
    let subsets: Vec<Vec<usize>> = cfg.k_list.iter().map(|&k| (0..k).collect()).collect();
    let curves = outage_curves(&r, &subsets, &grid, gamma_th, cfg.op_trials, derived_seed(cfg.seed, OUTAGE_TAG))?;

    let mut t = CsvTable::new("fig4b.csv", vec!["gamma_bar_db", "op_mc", "op_ci_halfwidth", "op_asymptote", "K"]);
    t.note(format!("gamma_bar_db evenly spaced over [{lo}, {hi}] dB with {} trials shared by every K", cfg.op_trials));
    t.note("K selects the first K segments of the configured segmentation; op_ci_halfwidth is the 95% Wilson half-width");
    t.note(format!("segment correlation eigenvalues: {}", r.eigenvalues().iter().map(|v| format!("{v:e}")).collect::<Vec<_>>().join(" ")));
    for (k, subset) in cfg.k_list.iter().zip(&subsets) {
        let sub = r.principal(subset)?;
        t.note(format!("K = {k}: rank {} pseudo-determinant {:e}", sub.rank(), sub.pseudo_det()));
    }
    describe_scatterers(&mut t, &sc);
    for (&k, curve) in cfg.k_list.iter().zip(&curves) {
        for p in &curve.points {
            t.rows.push(vec![
                super::fmt_f64(p.gamma_bar_db),
                super::fmt_f64(p.op),
                super::fmt_f64(p.half_width),
                super::fmt_f64(p.asymptote),
                k.to_string(),
            ]);
        }
    }
    Ok(t)
}
