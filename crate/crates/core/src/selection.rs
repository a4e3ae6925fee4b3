//! Aperture placement: the nearest-neighbor rule, candidate segment sets,
//! segment selection and exhaustive grid search.

use crate::error::{CapaError, Result};
use crate::geometry::{feasible_center_bounds, ArrayFrame, RectAperture, UserGeometry};
use rayon::prelude::*;

/// Center maximizing the LoS SNR of an `ax × az` rectangle: the feasible
/// point nearest to the user's projection.
pub fn optimal_center_rect(g: &UserGeometry, frame: &ArrayFrame, ax: f64, az: f64) -> Result<(f64, f64)> {
    let bounds = feasible_center_bounds(frame, ax, az)?;
    Ok(bounds.nearest(g.r() * g.cos_x(), g.r() * g.cos_z()))
}

/// Center maximizing the SNR of a length-`ax` interval on a linear array of length `lx`.
pub fn optimal_center_linear(g: &UserGeometry, lx: f64, ax: f64) -> Result<f64> {
    if !(ax > 0.0 && lx > 0.0) {
        return Err(CapaError::domain(format!("lengths must be positive, got lx = {lx}, ax = {ax}")));
    }
    if ax > lx {
        return Err(CapaError::ApertureTooLarge { axis: 'x', side: ax, limit: lx });
    }
    let h = (lx - ax) / 2.0;
    Ok((g.r() * g.cos_x()).clamp(-h, h))
}

/// How the array is divided into candidate segments.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SegmentScheme {
    /// Four `Lx/2 × Lz/2` quadrants.
    Quadrants,
    /// An `ax × az` rectangle at the array center and one towards each corner.
    FivePoint { ax: f64, az: f64 },
    /// Uniform tiling with `m` columns along x and `n` rows along z.
    Grid { m: usize, n: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    pub aperture: RectAperture,
    /// Center before any inward clipping.
    pub nominal_center: (f64, f64),
    pub label: String,
}

/// Non-empty list of segments inside one frame.
#[derive(Debug, Clone, PartialEq)]
pub struct SegmentSet {
    frame: ArrayFrame,
    segments: Vec<Segment>,
}

impl SegmentSet {
    pub fn new(frame: ArrayFrame, segments: Vec<Segment>) -> Result<Self> {
        if segments.is_empty() {
            return Err(CapaError::domain("a segment set needs at least one segment"));
        }
        for s in &segments {
            s.aperture.validate_in(&frame)?;
        }
        Ok(SegmentSet { frame, segments })
    }

    pub fn frame(&self) -> &ArrayFrame {
        &self.frame
    }

    pub fn len(&self) -> usize {
        self.segments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn rects(&self) -> Vec<RectAperture> {
        self.segments.iter().map(|s| s.aperture).collect()
    }

    /// The first `k` segments.
    pub fn truncated(&self, k: usize) -> Result<Self> {
        Self::new(self.frame, self.segments.iter().take(k).cloned().collect())
    }
}

fn tiling(frame: &ArrayFrame, m: usize, n: usize) -> Vec<Segment> {
    frame
        .full_aperture()
        .panels(m, n)
        .into_iter()
        .enumerate()
        .map(|(i, p)| Segment { aperture: p, nominal_center: (p.rx, p.rz), label: format!("tile-{}-{}", i % m, i / m) })
        .collect()
}

/// Builds a candidate segment set.
///
/// For the five-point scheme the corner centers `(±Lx/2, ±Lz/2)` are clipped
/// inward to the nearest feasible center so every segment stays on the array.
pub fn make_segments(frame: &ArrayFrame, scheme: SegmentScheme) -> Result<SegmentSet> {
    let segments = match scheme {
        SegmentScheme::Quadrants => tiling(frame, 2, 2),
        SegmentScheme::Grid { m, n } => {
            if m == 0 || n == 0 {
                return Err(CapaError::domain(format!("grid segmentation needs m, n ≥ 1, got {m} × {n}")));
            }
            tiling(frame, m, n)
        }
        SegmentScheme::FivePoint { ax, az } => {
            let bounds = feasible_center_bounds(frame, ax, az)?;
            let (hx, hz) = (frame.lx / 2.0, frame.lz / 2.0);
            let nominal = [
                ("center", 0.0, 0.0),
                ("corner-x-z-", -hx, -hz),
                ("corner-x+z-", hx, -hz),
                ("corner-x-z+", -hx, hz),
                ("corner-x+z+", hx, hz),
            ];
            nominal
                .iter()
                .map(|&(label, x, z)| {
                    let (rx, rz) = bounds.nearest(x, z);
                    Ok(Segment { aperture: RectAperture::new(rx, rz, ax, az)?, nominal_center: (x, z), label: label.into() })
                })
                .collect::<Result<Vec<_>>>()?
        }
    };
    SegmentSet::new(*frame, segments)
}

/// Index and value of the candidate with the largest gain; ties go to the lowest index.
pub fn select_best_segment<F>(rects: &[RectAperture], gain: F) -> Result<(usize, f64)>
where
    F: Fn(&RectAperture) -> Result<f64>,
{
    let mut best: Option<(usize, f64)> = None;
    for (k, rect) in rects.iter().enumerate() {
        let v = gain(rect)?;
        if !v.is_finite() {
            return Err(CapaError::NonFinite { x: rect.rx, z: rect.rz });
        }
        if best.is_none_or(|(_, b)| v > b) {
            best = Some((k, v));
        }
    }
    best.ok_or_else(|| CapaError::domain("cannot select from an empty segment set"))
}

/// Best point of an exhaustive grid search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSearchResult {
    pub rx: f64,
    pub rz: f64,
    pub value: f64,
    /// Row-major index (z outer, x inner).
    pub index: usize,
}

/// `i`-th of `m` equally spaced points on `[lo, hi]`; both ends are hit exactly.
pub fn grid_coordinate(lo: f64, hi: f64, i: usize, m: usize) -> f64 {
    if m <= 1 {
        return 0.5 * (lo + hi);
    }
    if i + 1 == m {
        return hi;
    }
    lo + (hi - lo) * (i as f64 / (m - 1) as f64)
}

/// Evaluates `gain` at every center of an `m × n` grid over the feasible set
/// and returns the first maximizer in row-major order. Candidates are
/// evaluated in parallel; the reduction is sequential so the result does not
/// depend on scheduling.
pub fn brute_force_center_search<F>(frame: &ArrayFrame, ax: f64, az: f64, gain: F, grid: (usize, usize)) -> Result<GridSearchResult>
where
    F: Fn(&RectAperture) -> Result<f64> + Sync,
{
    let (m, n) = grid;
    if m < 2 || n < 2 {
        return Err(CapaError::domain(format!("grid search needs at least 2 × 2 points, got {m} × {n}")));
    }
    let bounds = feasible_center_bounds(frame, ax, az)?;
    let values: Vec<Result<f64>> = (0..m * n)
        .into_par_iter()
        .map(|idx| {
            let rx = grid_coordinate(bounds.x.0, bounds.x.1, idx % m, m);
            let rz = grid_coordinate(bounds.z.0, bounds.z.1, idx / m, n);
            let rect = RectAperture::new(rx, rz, ax, az)?;
            gain(&rect).map_err(|e| CapaError::Model(format!("gain evaluation failed at center ({rx}, {rz}): {e}")))
        })
        .collect();
    let mut best: Option<GridSearchResult> = None;
    for (idx, v) in values.into_iter().enumerate() {
        let v = v?;
        let rx = grid_coordinate(bounds.x.0, bounds.x.1, idx % m, m);
        let rz = grid_coordinate(bounds.z.0, bounds.z.1, idx / m, n);
        if !v.is_finite() {
            return Err(CapaError::NonFinite { x: rx, z: rz });
        }
        if best.is_none_or(|b| v > b.value) {
            best = Some(GridSearchResult { rx, rz, value: v, index: idx });
        }
    }
    Ok(best.expect("grid is non-empty"))
}

/// One-dimensional counterpart for a linear array: `m` candidate centers of a
/// length-`ax` interval on `[-lx/2, lx/2]`. Returns `(rx, value)`.
pub fn brute_force_linear_search<F>(lx: f64, ax: f64, gain: F, m: usize) -> Result<(f64, f64)>
where
    F: Fn(f64) -> Result<f64> + Sync,
{
    if m < 2 {
        return Err(CapaError::domain(format!("grid search needs at least 2 points, got {m}")));
    }
    if ax > lx {
        return Err(CapaError::ApertureTooLarge { axis: 'x', side: ax, limit: lx });
    }
    let h = (lx - ax) / 2.0;
    let values: Vec<Result<f64>> = (0..m).into_par_iter().map(|i| gain(grid_coordinate(-h, h, i, m))).collect();
    let mut best: Option<(f64, f64)> = None;
    for (i, v) in values.into_iter().enumerate() {
        let v = v?;
        if best.is_none_or(|(_, b)| v > b) {
            best = Some((grid_coordinate(-h, h, i, m), v));
        }
    }
    Ok(best.expect("grid is non-empty"))
}
