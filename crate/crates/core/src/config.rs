//! Experiment configuration: `key = value` lines with `#` comments.
//!
//! Every key is optional; missing keys keep the reference scenario
//! (λ = 0.0107 m, r = 10 m, φ = π/6, θ = π/3, γ̄ = 40 dB, 2 m × 2 m array with
//! 1 m × 1 m apertures).

use crate::error::{CapaError, Result};
use crate::geometry::{ArrayFrame, UserGeometry};
use crate::los::ChannelParams;
use crate::nlos::ScatterBox;
use crate::selection::SegmentScheme;
use std::collections::HashMap;
use std::f64::consts::PI;

/// Segmentation choice as written in a config file.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Segmentation {
    FivePoint,
    Quadrants,
    Grid { m: usize, n: usize },
}

impl Segmentation {
    fn parse(s: &str) -> std::result::Result<Self, String> {
        match s {
            "five_point" => Ok(Segmentation::FivePoint),
            "quadrants" => Ok(Segmentation::Quadrants),
            _ => {
                let dims = s.strip_prefix("grid:").ok_or_else(|| format!("unknown segmentation '{s}'"))?;
                let (m, n) = dims.split_once('x').ok_or_else(|| format!("grid segmentation must look like grid:MxN, got '{s}'"))?;
                let m = m.trim().parse::<usize>().map_err(|e| format!("bad grid size '{m}': {e}"))?;
                let n = n.trim().parse::<usize>().map_err(|e| format!("bad grid size '{n}': {e}"))?;
                if m == 0 || n == 0 {
                    return Err("grid dimensions must be positive".into());
                }
                Ok(Segmentation::Grid { m, n })
            }
        }
    }

    fn render(&self) -> String {
        match self {
            Segmentation::FivePoint => "five_point".into(),
            Segmentation::Quadrants => "quadrants".into(),
            Segmentation::Grid { m, n } => format!("grid:{m}x{n}"),
        }
    }

    /// Scheme for segments of size `ax × az` (used by the five-point layout).
    pub fn scheme(&self, ax: f64, az: f64) -> SegmentScheme {
        match *self {
            Segmentation::FivePoint => SegmentScheme::FivePoint { ax, az },
            Segmentation::Quadrants => SegmentScheme::Quadrants,
            Segmentation::Grid { m, n } => SegmentScheme::Grid { m, n },
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub lambda: f64,
    pub r: f64,
    pub theta: f64,
    pub phi: f64,
    pub gamma_bar_db: f64,
    pub lx: f64,
    pub lz: f64,
    pub ax: f64,
    pub az: f64,
    pub quad_order: usize,
    /// Reflection-coefficient realizations averaged per point of the NLoS SNR sweep.
    pub trials: u64,
    /// Monte-Carlo trials for outage curves.
    pub op_trials: u64,
    pub seed: u64,
    pub scatterer_count: usize,
    pub scatter_box: ScatterBox,
    pub gamma_th_db: f64,
    pub segmentation: Segmentation,
    pub output: String,
    pub sweep_points: usize,
    pub area_min: f64,
    pub area_max: f64,
    pub tau_min: f64,
    pub tau_max: f64,
    pub r_list: Vec<f64>,
    pub k_list: Vec<usize>,
    /// `None` selects a range around the onset of outage.
    pub gamma_bar_db_min: Option<f64>,
    pub gamma_bar_db_max: Option<f64>,
    /// Points per axis of the exhaustive center search (odd).
    pub search_grid: usize,
    pub adaptive_tol: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let b = ScatterBox::default();
        ExperimentConfig {
            lambda: 0.0107,
            r: 10.0,
            theta: PI / 3.0,
            phi: PI / 6.0,
            gamma_bar_db: 40.0,
            lx: 2.0,
            lz: 2.0,
            ax: 1.0,
            az: 1.0,
            quad_order: 30,
            trials: 1000,
            op_trials: 1_000_000,
            seed: 1,
            scatterer_count: 4,
            scatter_box: b,
            gamma_th_db: -30.0,
            segmentation: Segmentation::FivePoint,
            output: ".".into(),
            sweep_points: 40,
            area_min: 0.04,
            area_max: 4.0,
            tau_min: 1e-3,
            tau_max: 1e4,
            r_list: vec![1.0, 2.0, 5.0, 10.0],
            k_list: vec![1, 2, 3, 4],
            gamma_bar_db_min: None,
            gamma_bar_db_max: None,
            search_grid: 11,
            adaptive_tol: 1e-8,
        }
    }
}

fn parse_f64(v: &str) -> std::result::Result<f64, String> {
    let x = v.parse::<f64>().map_err(|e| format!("expected a number, got '{v}': {e}"))?;
    if x.is_finite() {
        Ok(x)
    } else {
        Err(format!("expected a finite number, got '{v}'"))
    }
}

fn parse_u64(v: &str) -> std::result::Result<u64, String> {
    v.parse::<u64>().map_err(|e| format!("expected a non-negative integer, got '{v}': {e}"))
}

fn parse_usize(v: &str) -> std::result::Result<usize, String> {
    v.parse::<usize>().map_err(|e| format!("expected a non-negative integer, got '{v}': {e}"))
}

fn parse_list<T, F: Fn(&str) -> std::result::Result<T, String>>(v: &str, f: F) -> std::result::Result<Vec<T>, String> {
    let items: Vec<T> = v.split(',').map(|s| f(s.trim())).collect::<std::result::Result<_, _>>()?;
    if items.is_empty() {
        return Err("list must not be empty".into());
    }
    Ok(items)
}

fn parse_optional_db(v: &str) -> std::result::Result<Option<f64>, String> {
    if v == "auto" {
        Ok(None)
    } else {
        parse_f64(v).map(Some)
    }
}

fn render_list<T: std::fmt::Display>(v: &[T]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

fn render_optional(v: Option<f64>) -> String {
    v.map_or_else(|| "auto".into(), |x| x.to_string())
}

/// Config keys in the order they are echoed.
pub const KEYS: &[&str] = &[
    "lambda",
    "r",
    "theta",
    "phi",
    "gamma_bar_db",
    "Lx",
    "Lz",
    "Ax",
    "Az",
    "quad_order",
    "trials",
    "op_trials",
    "seed",
    "scatterer_count",
    "scatter_x_min",
    "scatter_x_max",
    "scatter_y_min",
    "scatter_y_max",
    "scatter_z_min",
    "scatter_z_max",
    "gamma_th_db",
    "segmentation",
    "output",
    "sweep_points",
    "area_min",
    "area_max",
    "tau_min",
    "tau_max",
    "r_list",
    "k_list",
    "gamma_bar_db_min",
    "gamma_bar_db_max",
    "search_grid",
    "adaptive_tol",
];

impl ExperimentConfig {
    fn set(&mut self, key: &str, v: &str) -> std::result::Result<(), String> {
        match key {
            "lambda" => self.lambda = parse_f64(v)?,
            "r" => self.r = parse_f64(v)?,
            "theta" => self.theta = parse_f64(v)?,
            "phi" => self.phi = parse_f64(v)?,
            "gamma_bar_db" => self.gamma_bar_db = parse_f64(v)?,
            "Lx" => self.lx = parse_f64(v)?,
            "Lz" => self.lz = parse_f64(v)?,
            "Ax" => self.ax = parse_f64(v)?,
            "Az" => self.az = parse_f64(v)?,
            "quad_order" => self.quad_order = parse_usize(v)?,
            "trials" => self.trials = parse_u64(v)?,
            "op_trials" => self.op_trials = parse_u64(v)?,
            "seed" => self.seed = parse_u64(v)?,
            "scatterer_count" => self.scatterer_count = parse_usize(v)?,
            "scatter_x_min" => self.scatter_box.x.0 = parse_f64(v)?,
            "scatter_x_max" => self.scatter_box.x.1 = parse_f64(v)?,
            "scatter_y_min" => self.scatter_box.y.0 = parse_f64(v)?,
            "scatter_y_max" => self.scatter_box.y.1 = parse_f64(v)?,
            "scatter_z_min" => self.scatter_box.z.0 = parse_f64(v)?,
            "scatter_z_max" => self.scatter_box.z.1 = parse_f64(v)?,
            "gamma_th_db" => self.gamma_th_db = parse_f64(v)?,
            "segmentation" => self.segmentation = Segmentation::parse(v)?,
            "output" => self.output = v.to_string(),
            "sweep_points" => self.sweep_points = parse_usize(v)?,
            "area_min" => self.area_min = parse_f64(v)?,
            "area_max" => self.area_max = parse_f64(v)?,
            "tau_min" => self.tau_min = parse_f64(v)?,
            "tau_max" => self.tau_max = parse_f64(v)?,
            "r_list" => self.r_list = parse_list(v, parse_f64)?,
            "k_list" => self.k_list = parse_list(v, parse_usize)?,
            "gamma_bar_db_min" => self.gamma_bar_db_min = parse_optional_db(v)?,
            "gamma_bar_db_max" => self.gamma_bar_db_max = parse_optional_db(v)?,
            "search_grid" => self.search_grid = parse_usize(v)?,
            "adaptive_tol" => self.adaptive_tol = parse_f64(v)?,
            _ => return Err(format!("unknown key '{key}'")),
        }
        Ok(())
    }

    fn get(&self, key: &str) -> String {
        match key {
            "lambda" => self.lambda.to_string(),
            "r" => self.r.to_string(),
            "theta" => self.theta.to_string(),
            "phi" => self.phi.to_string(),
            "gamma_bar_db" => self.gamma_bar_db.to_string(),
            "Lx" => self.lx.to_string(),
            "Lz" => self.lz.to_string(),
            "Ax" => self.ax.to_string(),
            "Az" => self.az.to_string(),
            "quad_order" => self.quad_order.to_string(),
            "trials" => self.trials.to_string(),
            "op_trials" => self.op_trials.to_string(),
            "seed" => self.seed.to_string(),
            "scatterer_count" => self.scatterer_count.to_string(),
            "scatter_x_min" => self.scatter_box.x.0.to_string(),
            "scatter_x_max" => self.scatter_box.x.1.to_string(),
            "scatter_y_min" => self.scatter_box.y.0.to_string(),
            "scatter_y_max" => self.scatter_box.y.1.to_string(),
            "scatter_z_min" => self.scatter_box.z.0.to_string(),
            "scatter_z_max" => self.scatter_box.z.1.to_string(),
            "gamma_th_db" => self.gamma_th_db.to_string(),
            "segmentation" => self.segmentation.render(),
            "output" => self.output.clone(),
            "sweep_points" => self.sweep_points.to_string(),
            "area_min" => self.area_min.to_string(),
            "area_max" => self.area_max.to_string(),
            "tau_min" => self.tau_min.to_string(),
            "tau_max" => self.tau_max.to_string(),
            "r_list" => render_list(&self.r_list),
            "k_list" => render_list(&self.k_list),
            "gamma_bar_db_min" => render_optional(self.gamma_bar_db_min),
            "gamma_bar_db_max" => render_optional(self.gamma_bar_db_max),
            "search_grid" => self.search_grid.to_string(),
            "adaptive_tol" => self.adaptive_tol.to_string(),
            _ => unreachable!("unknown key {key}"),
        }
    }

    /// `key = value` for every key, in [`KEYS`] order.
    pub fn echo_lines(&self) -> Vec<String> {
        KEYS.iter().map(|k| format!("{k} = {}", self.get(k))).collect()
    }

    /// Checks every value against its domain. Errors name the line the key
    /// was set on (0 when it kept its default).
    pub fn validate(&self, lines: &HashMap<&'static str, usize>) -> Result<()> {
        let fail = |key: &str, msg: String| CapaError::Config { line: lines.get(key).copied().unwrap_or(0), message: msg };
        let positive = |key: &'static str, v: f64| if v > 0.0 { Ok(()) } else { Err(fail(key, format!("{key} must be positive, got {v}"))) };
        positive("lambda", self.lambda)?;
        positive("r", self.r)?;
        positive("Lx", self.lx)?;
        positive("Lz", self.lz)?;
        positive("Ax", self.ax)?;
        positive("Az", self.az)?;
        positive("area_min", self.area_min)?;
        positive("tau_min", self.tau_min)?;
        positive("adaptive_tol", self.adaptive_tol)?;
        if self.ax > self.lx {
            return Err(fail("Ax", format!("Ax = {} exceeds Lx = {}", self.ax, self.lx)));
        }
        if self.az > self.lz {
            return Err(fail("Az", format!("Az = {} exceeds Lz = {}", self.az, self.lz)));
        }
        UserGeometry::new(self.r, self.phi, self.theta).map_err(|e| fail("theta", e.to_string()))?;
        if self.quad_order == 0 {
            return Err(fail("quad_order", "quad_order must be at least 1".into()));
        }
        if self.trials == 0 {
            return Err(fail("trials", "trials must be at least 1".into()));
        }
        if self.op_trials == 0 {
            return Err(fail("op_trials", "op_trials must be at least 1".into()));
        }
        if self.scatterer_count == 0 {
            return Err(fail("scatterer_count", "scatterer_count must be at least 1".into()));
        }
        self.scatter_box.validate().map_err(|e| fail("scatter_y_min", e.to_string()))?;
        if self.sweep_points < 2 {
            return Err(fail("sweep_points", "sweep_points must be at least 2".into()));
        }
        if self.area_max <= self.area_min {
            return Err(fail("area_max", "area_max must exceed area_min".into()));
        }
        if self.tau_max <= self.tau_min {
            return Err(fail("tau_max", "tau_max must exceed tau_min".into()));
        }
        if self.r_list.iter().any(|&r| !(r > 0.0)) {
            return Err(fail("r_list", "ranges in r_list must be positive".into()));
        }
        if self.k_list.contains(&0) {
            return Err(fail("k_list", "segment counts in k_list must be at least 1".into()));
        }
        if let (Some(lo), Some(hi)) = (self.gamma_bar_db_min, self.gamma_bar_db_max) {
            if hi <= lo {
                return Err(fail("gamma_bar_db_max", "gamma_bar_db_max must exceed gamma_bar_db_min".into()));
            }
        }
        if self.search_grid < 3 || self.search_grid % 2 == 0 {
            return Err(fail("search_grid", format!("search_grid must be odd and at least 3, got {}", self.search_grid)));
        }
        Ok(())
    }

    pub fn user(&self) -> Result<UserGeometry> {
        UserGeometry::new(self.r, self.phi, self.theta)
    }

    pub fn frame(&self) -> Result<ArrayFrame> {
        ArrayFrame::new(self.lx, self.lz)
    }

    pub fn channel(&self) -> Result<ChannelParams> {
        ChannelParams::from_gamma_bar(self.lambda, crate::from_db(self.gamma_bar_db))
    }
}

/// Parses a config file. Unknown keys, malformed lines and out-of-domain
/// values are errors carrying the 1-based line number.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::default();
    let mut lines: HashMap<&'static str, usize> = HashMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| CapaError::Config { line: line_no, message: format!("expected 'key = value', got '{line}'") })?;
        let (key, value) = (key.trim(), value.trim());
        if key.is_empty() || value.is_empty() {
            return Err(CapaError::Config { line: line_no, message: format!("expected 'key = value', got '{line}'") });
        }
        cfg.set(key, value).map_err(|message| CapaError::Config { line: line_no, message })?;
        if let Some(k) = KEYS.iter().find(|k| **k == key) {
            lines.insert(k, line_no);
        }
    }
    cfg.validate(&lines)?;
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        let cfg = parse_config("").unwrap();
        assert_eq!(cfg, ExperimentConfig::default());
        assert_eq!(cfg.gamma_bar_db, 40.0);
        assert_eq!(cfg.theta, PI / 3.0);
        assert_eq!(cfg.phi, PI / 6.0);
        assert_eq!(cfg.r, 10.0);
        assert_eq!(cfg.lambda, 0.0107);
        assert_eq!(cfg.ax, cfg.az);
        assert_eq!(cfg.lx, cfg.lz);
    }

    #[test]
    fn single_override() {
        let cfg = parse_config("# comment\n\nr = 2.0  # trailing\n").unwrap();
        assert_eq!(cfg.r, 2.0);
        assert_eq!(ExperimentConfig { r: 10.0, ..cfg }, ExperimentConfig::default());
    }

    #[test]
    fn unknown_key_names_line() {
        let err = parse_config("banana = 1").unwrap_err();
        assert!(matches!(err, CapaError::Config { line: 1, .. }), "{err}");
        assert!(err.to_string().contains("banana"));
    }

    #[test]
    fn malformed_and_out_of_domain() {
        assert!(matches!(parse_config("r = 1\nnonsense\n"), Err(CapaError::Config { line: 2, .. })));
        assert!(matches!(parse_config("r = abc"), Err(CapaError::Config { line: 1, .. })));
        assert!(matches!(parse_config("\n\nlambda = -1"), Err(CapaError::Config { line: 3, .. })));
        assert!(parse_config("Ax = 3").is_err());
        assert!(parse_config("search_grid = 10").is_err());
        assert!(parse_config("phi = 0").is_err());
    }

    #[test]
    fn lists_and_segmentation() {
        let cfg = parse_config("r_list = 1, 3\nk_list = 2\nsegmentation = grid:3x2\ngamma_bar_db_min = 45\n").unwrap();
        assert_eq!(cfg.r_list, vec![1.0, 3.0]);
        assert_eq!(cfg.k_list, vec![2]);
        assert_eq!(cfg.segmentation, Segmentation::Grid { m: 3, n: 2 });
        assert_eq!(cfg.gamma_bar_db_min, Some(45.0));
        assert!(parse_config("segmentation = hexagons").is_err());
    }

    #[test]
    fn echo_round_trips() {
        let cfg = parse_config("r = 2.5\nsegmentation = quadrants\nk_list = 1,2\n").unwrap();
        let text = cfg.echo_lines().join("\n");
        assert_eq!(parse_config(&text).unwrap(), cfg);
        assert_eq!(cfg.echo_lines().len(), KEYS.len());
    }
}
