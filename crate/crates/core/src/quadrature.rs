//! Gauss–Legendre rules and an adaptive 2-D integrator.
//!
//! The fixed tensor rules evaluate the Gauss–Legendre cross terms of the NLoS
//! SNR. The adaptive integrator is deliberately built on a different rule
//! family (tensor Gauss–Kronrod 7/15 with global panel refinement) so it can
//! serve as an independent oracle for every closed form in the crate.

use crate::error::{CapaError, Result};
use crate::geometry::RectAperture;
use num_complex::Complex64;
use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::PI;

/// Production quadrature order for cross-term integrals.
pub const DEFAULT_ORDER: usize = 30;
/// Default relative tolerance of the adaptive oracle.
pub const DEFAULT_ADAPTIVE_TOL: f64 = 1e-8;
/// Maximum subdivision depth of an adaptive panel.
pub const DEFAULT_MAX_DEPTH: u32 = 20;

const NEWTON_TOL: f64 = 1e-15;
/// Error estimates below `ROUNDING_FLOOR·ε·∫|f|` are rounding noise and end refinement.
const ROUNDING_FLOOR: f64 = 200.0;

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

/// Evaluates `P_n(x)` and `P_n'(x)` by the three-term recurrence.
fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p_prev = 1.0;
    let mut p = x;
    for k in 2..=n {
        let kf = k as f64;
        let next = ((2.0 * kf - 1.0) * x * p - (kf - 1.0) * p_prev) / kf;
        p_prev = p;
        p = next;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let dp = n as f64 * (x * p - p_prev) / (x * x - 1.0);
    (p, dp)
}

/// Gauss–Legendre rule with `order` nodes, computed by Newton iteration on
/// the Legendre polynomial from the usual cosine initial guesses.
pub fn gauss_legendre_rule(order: usize) -> Result<QuadratureRule> {
    if order == 0 {
        return Err(CapaError::domain("quadrature order must be at least 1"));
    }
    let n = order;
    let half = n.div_ceil(2);
    let mut pos_nodes = Vec::with_capacity(half);
    let mut pos_weights = Vec::with_capacity(half);
    for i in 0..half {
        // Roots in descending order; the middle one is exactly 0 for odd n.
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        if n % 2 == 1 && i == half - 1 {
            x = 0.0;
        } else {
            for _ in 0..100 {
                let (p, dp) = legendre_with_derivative(n, x);
                let dx = p / dp;
                x -= dx;
                if dx.abs() <= NEWTON_TOL {
                    break;
                }
            }
        }
        let (_, dp) = legendre_with_derivative(n, x);
        pos_nodes.push(x);
        pos_weights.push(2.0 / ((1.0 - x * x) * dp * dp));
    }

    let mut nodes = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    for i in 0..n / 2 {
        nodes.push(-pos_nodes[i]);
        weights.push(pos_weights[i]);
    }
    if n % 2 == 1 {
        nodes.push(0.0);
        weights.push(pos_weights[half - 1]);
    }
    for i in (0..n / 2).rev() {
        nodes.push(pos_nodes[i]);
        weights.push(pos_weights[i]);
    }
    Ok(QuadratureRule { nodes, weights })
}

impl QuadratureRule {
    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `∫_a^b f(x) dx`.
    pub fn integrate<F: Fn(f64) -> f64>(&self, a: f64, b: f64, f: F) -> f64 {
        let half = (b - a) / 2.0;
        let mid = (a + b) / 2.0;
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(mid + half * x))
            .sum::<f64>()
            * half
    }

    /// Tensor-product estimate of `∫∫_rect f(x, z) dx dz`:
    /// `Σ_i Σ_j (w_i w_j ax az / 4) f(ax ξ_j / 2 + rx, az ξ_i / 2 + rz)`.
    pub fn integrate_rect<F>(&self, f: &F, rect: &RectAperture) -> Result<Complex64>
    where
        F: Fn(f64, f64) -> Complex64,
    {
        let jac = rect.ax * rect.az / 4.0;
        let mut acc = Complex64::new(0.0, 0.0);
        for (&xi_i, &w_i) in self.nodes.iter().zip(&self.weights) {
            let z = rect.az * xi_i / 2.0 + rect.rz;
            let mut row = Complex64::new(0.0, 0.0);
            for (&xi_j, &w_j) in self.nodes.iter().zip(&self.weights) {
                let x = rect.ax * xi_j / 2.0 + rect.rx;
                let v = f(x, z);
                if !(v.re.is_finite() && v.im.is_finite()) {
                    return Err(CapaError::NonFinite { x, z });
                }
                row += v * w_j;
            }
            acc += row * w_i;
        }
        Ok(acc * jac)
    }

    /// Composite tensor rule: the rectangle is split into `px × pz` equal
    /// panels and each is integrated with this rule. Panels are summed in
    /// row-major order.
    pub fn integrate_rect_composite<F>(&self, f: &F, rect: &RectAperture, px: usize, pz: usize) -> Result<Complex64>
    where
        F: Fn(f64, f64) -> Complex64,
    {
        if px == 0 || pz == 0 {
            return Err(CapaError::domain("panel counts must be positive"));
        }
        let mut acc = Complex64::new(0.0, 0.0);
        for panel in rect.panels(px, pz) {
            acc += self.integrate_rect(f, &panel)?;
        }
        Ok(acc)
    }

    /// Tensor nodes `(x, z, weight)` covering `rect` with `px × pz` panels.
    /// Weights already include the Jacobian.
    pub fn tensor_nodes(&self, rect: &RectAperture, px: usize, pz: usize) -> Vec<(f64, f64, f64)> {
        let mut out = Vec::with_capacity(px * pz * self.order() * self.order());
        for panel in rect.panels(px, pz) {
            let jac = panel.ax * panel.az / 4.0;
            for (&xi_i, &w_i) in self.nodes.iter().zip(&self.weights) {
                let z = panel.az * xi_i / 2.0 + panel.rz;
                for (&xi_j, &w_j) in self.nodes.iter().zip(&self.weights) {
                    out.push((panel.ax * xi_j / 2.0 + panel.rx, z, w_i * w_j * jac));
                }
            }
        }
        out
    }
}

/// Convenience wrapper: tensor Gauss–Legendre of the given order over `rect`.
pub fn quad2d_rect<F>(f: F, rect: &RectAperture, order: usize) -> Result<Complex64>
where
    F: Fn(f64, f64) -> Complex64,
{
    gauss_legendre_rule(order)?.integrate_rect(&f, rect)
}

// Gauss–Kronrod 7/15 abscissae and weights (QUADPACK qk15), positive half,
// outermost first. Odd indices carry the embedded 7-point Gauss nodes.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

struct Kronrod15 {
    nodes: [f64; 15],
    kronrod: [f64; 15],
    gauss: [f64; 15],
}

fn kronrod15() -> Kronrod15 {
    let mut nodes = [0.0; 15];
    let mut kronrod = [0.0; 15];
    let mut gauss = [0.0; 15];
    for i in 0..7 {
        nodes[i] = -XGK[i];
        nodes[14 - i] = XGK[i];
        kronrod[i] = WGK[i];
        kronrod[14 - i] = WGK[i];
        if i % 2 == 1 {
            gauss[i] = WG[i / 2];
            gauss[14 - i] = WG[i / 2];
        }
    }
    nodes[7] = 0.0;
    kronrod[7] = WGK[7];
    gauss[7] = WG[3];
    Kronrod15 { nodes, kronrod, gauss }
}

/// Tolerance and limits for [`quad2d_adaptive_with`].
#[derive(Debug, Clone, Copy)]
pub struct AdaptiveOptions {
    pub tol: f64,
    pub max_depth: u32,
    /// Hard cap on live panels; hitting it is reported as non-convergence.
    pub max_panels: usize,
}

impl Default for AdaptiveOptions {
    fn default() -> Self {
        AdaptiveOptions { tol: DEFAULT_ADAPTIVE_TOL, max_depth: DEFAULT_MAX_DEPTH, max_panels: 400_000 }
    }
}

/// Integral value with its accumulated error estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdaptiveEstimate {
    pub value: Complex64,
    pub error: f64,
}

#[derive(Clone, Copy)]
struct Panel {
    x0: f64,
    x1: f64,
    z0: f64,
    z1: f64,
    depth: u32,
    value: Complex64,
    error: f64,
    abs: f64,
}

struct HeapEntry {
    error: f64,
    index: usize,
}

impl PartialEq for HeapEntry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for HeapEntry {}
impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        // Largest error first; lower index wins ties.
        self.error.total_cmp(&other.error).then_with(|| other.index.cmp(&self.index))
    }
}

fn eval_panel<F>(f: &F, gk: &Kronrod15, x0: f64, x1: f64, z0: f64, z1: f64, depth: u32) -> Result<Panel>
where
    F: Fn(f64, f64) -> Complex64,
{
    let (hx, cx) = ((x1 - x0) / 2.0, (x1 + x0) / 2.0);
    let (hz, cz) = ((z1 - z0) / 2.0, (z1 + z0) / 2.0);
    let mut k = Complex64::new(0.0, 0.0);
    let mut g = Complex64::new(0.0, 0.0);
    let mut abs = 0.0;
    for i in 0..15 {
        let z = cz + hz * gk.nodes[i];
        for j in 0..15 {
            let x = cx + hx * gk.nodes[j];
            let v = f(x, z);
            if !(v.re.is_finite() && v.im.is_finite()) {
                return Err(CapaError::NonFinite { x, z });
            }
            let wk = gk.kronrod[i] * gk.kronrod[j];
            k += v * wk;
            abs += wk * v.norm();
            let wg = gk.gauss[i] * gk.gauss[j];
            if wg != 0.0 {
                g += v * wg;
            }
        }
    }
    let jac = hx * hz;
    Ok(Panel { x0, x1, z0, z1, depth, value: k * jac, error: ((k - g) * jac).norm(), abs: abs * jac })
}

/// Adaptive integral over `rect` with the default depth and panel limits.
pub fn quad2d_adaptive<F>(f: F, rect: &RectAperture, tol: f64) -> Result<AdaptiveEstimate>
where
    F: Fn(f64, f64) -> Complex64,
{
    quad2d_adaptive_with(f, rect, AdaptiveOptions { tol, ..AdaptiveOptions::default() })
}

/// Globally adaptive 2-D integration by 4-way panel subdivision.
///
/// Each panel carries a tensor Kronrod-15 value and the distance to its
/// embedded Gauss-7 value as error estimate. The worst panel is split until
/// the summed error drops below `tol·|value|` (or below a rounding floor
/// proportional to `∫|f|`, which lets integrals that vanish by symmetry
/// terminate). Panels at `max_depth` are frozen; if the frozen error alone
/// exceeds the target the call fails with [`CapaError::Convergence`].
pub fn quad2d_adaptive_with<F>(f: F, rect: &RectAperture, opts: AdaptiveOptions) -> Result<AdaptiveEstimate>
where
    F: Fn(f64, f64) -> Complex64,
{
    if !(opts.tol > 0.0) {
        return Err(CapaError::domain(format!("tolerance must be positive, got {}", opts.tol)));
    }
    let gk = kronrod15();
    let (x0, x1) = rect.x_range();
    let (z0, z1) = rect.z_range();
    let root = eval_panel(&f, &gk, x0, x1, z0, z1, 0)?;
    let mut panels = vec![root];
    let mut heap = BinaryHeap::new();
    heap.push(HeapEntry { error: root.error, index: 0 });
    let mut value = root.value;
    let mut error = root.error;
    let mut abs = root.abs;

    loop {
        let target = (opts.tol * value.norm()).max(ROUNDING_FLOOR * f64::EPSILON * abs);
        if error <= target {
            break;
        }
        let Some(HeapEntry { index, .. }) = heap.pop() else {
            return Err(CapaError::Convergence { value: sum_panels(&panels).0, error });
        };
        let p = panels[index];
        if p.depth >= opts.max_depth {
            // Frozen: stays in the sum, never refined again.
            continue;
        }
        if panels.len() + 3 > opts.max_panels {
            return Err(CapaError::Convergence { value: sum_panels(&panels).0, error });
        }
        let xm = (p.x0 + p.x1) / 2.0;
        let zm = (p.z0 + p.z1) / 2.0;
        let children = [
            eval_panel(&f, &gk, p.x0, xm, p.z0, zm, p.depth + 1)?,
            eval_panel(&f, &gk, xm, p.x1, p.z0, zm, p.depth + 1)?,
            eval_panel(&f, &gk, p.x0, xm, zm, p.z1, p.depth + 1)?,
            eval_panel(&f, &gk, xm, p.x1, zm, p.z1, p.depth + 1)?,
        ];
        value -= p.value;
        error -= p.error;
        abs -= p.abs;
        for (c, child) in children.iter().enumerate() {
            value += child.value;
            error += child.error;
            abs += child.abs;
            let idx = if c == 0 {
                panels[index] = *child;
                index
            } else {
                panels.push(*child);
                panels.len() - 1
            };
            heap.push(HeapEntry { error: child.error, index: idx });
        }
    }
    let (value, error) = sum_panels(&panels);
    Ok(AdaptiveEstimate { value, error })
}

fn sum_panels(panels: &[Panel]) -> (Complex64, f64) {
    panels
        .iter()
        .fold((Complex64::new(0.0, 0.0), 0.0), |(v, e), p| (v + p.value, e + p.error))
}

/// Adaptive 1-D Gauss–Kronrod 7/15 integration of a real function on `[a, b]`.
/// Returns `(value, error estimate)`.
pub fn quad1d_adaptive<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> Result<(f64, f64)> {
    if !(tol > 0.0) {
        return Err(CapaError::domain(format!("tolerance must be positive, got {tol}")));
    }
    let gk = kronrod15();
    let eval = |lo: f64, hi: f64| -> Result<(f64, f64, f64)> {
        let (h, c) = ((hi - lo) / 2.0, (hi + lo) / 2.0);
        let (mut k, mut g, mut abs) = (0.0, 0.0, 0.0);
        for i in 0..15 {
            let x = c + h * gk.nodes[i];
            let v = f(x);
            if !v.is_finite() {
                return Err(CapaError::NonFinite { x, z: 0.0 });
            }
            k += gk.kronrod[i] * v;
            g += gk.gauss[i] * v;
            abs += gk.kronrod[i] * v.abs();
        }
        Ok((k * h, ((k - g) * h).abs(), abs * h.abs()))
    };
    // (lo, hi, value, error, abs, depth)
    let (v, e, s) = eval(a, b)?;
    let mut segments = vec![(a, b, v, e, s, 0u32)];
    let mut total = v;
    let mut err = e;
    let mut abs = s;
    loop {
        if err <= (tol * total.abs()).max(ROUNDING_FLOOR * f64::EPSILON * abs) {
            break;
        }
        let (worst, _) = segments
            .iter()
            .enumerate()
            .filter(|(_, s)| s.5 < 50)
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .ok_or(CapaError::Convergence { value: Complex64::new(total, 0.0), error: err })?;
        let (lo, hi, v, e, s, depth) = segments[worst];
        let mid = (lo + hi) / 2.0;
        let (v1, e1, s1) = eval(lo, mid)?;
        let (v2, e2, s2) = eval(mid, hi)?;
        total += v1 + v2 - v;
        err += e1 + e2 - e;
        abs += s1 + s2 - s;
        segments[worst] = (lo, mid, v1, e1, s1, depth + 1);
        segments.push((mid, hi, v2, e2, s2, depth + 1));
        if segments.len() > 100_000 {
            return Err(CapaError::Convergence { value: Complex64::new(total, 0.0), error: err });
        }
    }
    let value = segments.iter().map(|s| s.2).sum();
    let error = segments.iter().map(|s| s.3).sum();
    Ok((value, error))
}
