//! Sweep configuration: a TOML file of `key = value` sections plus
//! command-line overrides.

use std::env;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::CliError;

pub const CACHE_DIR_ENV: &str = "MULTIWELL_CACHE_DIR";

/// Default grid spacing when a grid omits `steps`: 2.5 in tau, 5 in gamma,
/// coarse enough to be cheap but fine enough to isolate the quoted optima.
pub const TAU_STEP: f64 = 2.5;
pub const GAMMA_STEP: f64 = 5.0;

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub min: f64,
    pub max: f64,
    pub steps: Option<usize>,
}

impl GridSpec {
    pub fn values(&self, default_step: f64) -> Vec<f64> {
        let steps = self.steps.unwrap_or_else(|| {
            if self.max <= self.min {
                1
            } else {
                ((self.max - self.min) / default_step).round() as usize + 1
            }
        });
        if steps <= 1 {
            return vec![self.min];
        }
        (0..steps)
            .map(|i| self.min + (self.max - self.min) * i as f64 / (steps - 1) as f64)
            .collect()
    }

    fn validate(&self, name: &str) -> Result<(), CliError> {
        if !self.min.is_finite() || !self.max.is_finite() || self.max < self.min {
            return Err(CliError::Config(format!(
                "{name} grid needs finite min <= max, got [{}, {}]",
                self.min, self.max
            )));
        }
        if self.steps == Some(0) {
            return Err(CliError::Config(format!("{name} grid has zero steps")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WindowSpec {
    pub e_mid: f64,
    pub half_width: f64,
}

/// Time grid and smoothing width for survival-probability runs.
#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SurvivalSpec {
    pub log10_t_min: Option<f64>,
    pub log10_t_max: Option<f64>,
    pub points: Option<usize>,
    pub smooth_half_width: Option<f64>,
}

impl Default for SurvivalSpec {
    fn default() -> Self {
        SurvivalSpec {
            log10_t_min: None,
            log10_t_max: None,
            points: None,
            smooth_half_width: None,
        }
    }
}

impl SurvivalSpec {
    pub fn grid(&self) -> (f64, f64, usize) {
        let d = multiwell::dynamics::DEFAULT_GRID;
        (
            self.log10_t_min.unwrap_or(d.0),
            self.log10_t_max.unwrap_or(d.1),
            self.points.unwrap_or(d.2),
        )
    }

    pub fn smooth(&self) -> f64 {
        self.smooth_half_width.unwrap_or(0.02)
    }
}

/// Which diagnostics a run computes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DiagnosticsSet {
    pub brody: bool,
    pub kurtosis: bool,
    pub gamma: bool,
    pub survival: bool,
}

impl DiagnosticsSet {
    pub const ALL: DiagnosticsSet = DiagnosticsSet {
        brody: true,
        kurtosis: true,
        gamma: true,
        survival: true,
    };

    pub fn parse(names: &[String]) -> Result<Self, CliError> {
        let mut set = DiagnosticsSet {
            brody: false,
            kurtosis: false,
            gamma: false,
            survival: false,
        };
        for name in names {
            match name.trim() {
                "brody" => set.brody = true,
                "kurtosis" => set.kurtosis = true,
                "gamma" => set.gamma = true,
                "survival" => set.survival = true,
                other => {
                    return Err(CliError::Config(format!(
                        "unknown diagnostic '{other}' (expected brody, kurtosis, gamma, survival)"
                    )))
                }
            }
        }
        Ok(set)
    }

    pub fn wants_vectors(&self) -> bool {
        self.kurtosis || self.gamma || self.survival
    }

    pub fn any(&self) -> bool {
        self.brody || self.kurtosis || self.gamma || self.survival
    }
}

impl fmt::Display for DiagnosticsSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut names = Vec::new();
        if self.brody {
            names.push("brody");
        }
        if self.kurtosis {
            names.push("kurtosis");
        }
        if self.gamma {
            names.push("gamma");
        }
        if self.survival {
            names.push("survival");
        }
        write!(f, "{}", names.join(","))
    }
}

/// On-disk config file. Scalar keys first, then the grid/window sections.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    n: Vec<u32>,
    wells: Vec<u32>,
    e_cut: f64,
    refine_ratio: Option<f64>,
    rel_tol: Option<f64>,
    diagnostics: Option<Vec<String>>,
    output_dir: Option<PathBuf>,
    cache_dir: Option<PathBuf>,
    workers: Option<usize>,
    memory_budget_mb: Option<u64>,
    tau: GridSpec,
    gamma: GridSpec,
    window: WindowSpec,
    survival: Option<SurvivalSpec>,
}

/// Fully resolved sweep configuration.
#[derive(Debug, Clone)]
pub struct SweepConfig {
    pub n: Vec<u32>,
    pub wells: Vec<u32>,
    pub tau: GridSpec,
    pub gamma: GridSpec,
    pub e_cut: f64,
    pub window: WindowSpec,
    pub diagnostics: DiagnosticsSet,
    pub refine_ratio: f64,
    pub rel_tol: f64,
    pub output_dir: PathBuf,
    pub cache_dir: PathBuf,
    pub workers: usize,
    pub memory_budget_mb: u64,
    pub survival: SurvivalSpec,
}

/// Command-line overrides applied on top of the config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub n: Option<Vec<u32>>,
    pub wells: Option<Vec<u32>>,
    pub tau_grid: Option<GridSpec>,
    pub gamma_grid: Option<GridSpec>,
    pub e_cut: Option<f64>,
    pub e_mid: Option<f64>,
    pub half_width: Option<f64>,
    pub diagnostics: Option<Vec<String>>,
    pub refine_ratio: Option<f64>,
    pub rel_tol: Option<f64>,
    pub output_dir: Option<PathBuf>,
    pub cache_dir: Option<PathBuf>,
    pub workers: Option<usize>,
    pub memory_budget_mb: Option<u64>,
}

/// Parses `min:max:steps` (steps optional).
pub fn parse_grid_arg(s: &str) -> Result<GridSpec, String> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() < 2 || parts.len() > 3 {
        return Err(format!("expected min:max[:steps], got '{s}'"));
    }
    let min: f64 = parts[0].parse().map_err(|e| format!("bad min: {e}"))?;
    let max: f64 = parts[1].parse().map_err(|e| format!("bad max: {e}"))?;
    let steps = match parts.get(2) {
        Some(p) => Some(p.parse::<usize>().map_err(|e| format!("bad steps: {e}"))?),
        None => None,
    };
    Ok(GridSpec { min, max, steps })
}

impl SweepConfig {
    pub fn load(path: &Path, over: &Overrides) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| CliError::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
        let file: ConfigFile = toml::from_str(&text)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::resolve(Some(file), over)
    }

    /// Builds a config from overrides alone (no file).
    pub fn from_overrides(over: &Overrides) -> Result<Self, CliError> {
        Self::resolve(None, over)
    }

    fn resolve(file: Option<ConfigFile>, over: &Overrides) -> Result<Self, CliError> {
        let missing = |what: &str| {
            CliError::Config(format!("{what} is required (config file key or flag)"))
        };
        let f = file;
        let n = over
            .n
            .clone()
            .or_else(|| f.as_ref().map(|f| f.n.clone()))
            .ok_or_else(|| missing("n"))?;
        let wells = over
            .wells
            .clone()
            .or_else(|| f.as_ref().map(|f| f.wells.clone()))
            .ok_or_else(|| missing("wells"))?;
        let tau = over
            .tau_grid
            .or_else(|| f.as_ref().map(|f| f.tau))
            .ok_or_else(|| missing("tau grid"))?;
        let gamma = over
            .gamma_grid
            .or_else(|| f.as_ref().map(|f| f.gamma))
            .ok_or_else(|| missing("gamma grid"))?;
        let e_cut = over
            .e_cut
            .or_else(|| f.as_ref().map(|f| f.e_cut))
            .ok_or_else(|| missing("e_cut"))?;
        let window = {
            let base = f.as_ref().map(|f| f.window);
            let e_mid = over
                .e_mid
                .or(base.map(|w| w.e_mid))
                .ok_or_else(|| missing("window e_mid"))?;
            let half_width = over
                .half_width
                .or(base.map(|w| w.half_width))
                .ok_or_else(|| missing("window half_width"))?;
            WindowSpec { e_mid, half_width }
        };
        let diagnostics = match (&over.diagnostics, f.as_ref().and_then(|f| f.diagnostics.clone()))
        {
            (Some(names), _) => DiagnosticsSet::parse(names)?,
            (None, Some(names)) => DiagnosticsSet::parse(&names)?,
            (None, None) => DiagnosticsSet::ALL,
        };
        let cache_dir = over
            .cache_dir
            .clone()
            .or_else(|| f.as_ref().and_then(|f| f.cache_dir.clone()))
            .or_else(|| env::var_os(CACHE_DIR_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("multiwell-cache"));
        let cfg = SweepConfig {
            n,
            wells,
            tau,
            gamma,
            e_cut,
            window,
            diagnostics,
            refine_ratio: over
                .refine_ratio
                .or_else(|| f.as_ref().and_then(|f| f.refine_ratio))
                .unwrap_or(1.2),
            rel_tol: over
                .rel_tol
                .or_else(|| f.as_ref().and_then(|f| f.rel_tol))
                .unwrap_or(1e-3),
            output_dir: over
                .output_dir
                .clone()
                .or_else(|| f.as_ref().and_then(|f| f.output_dir.clone()))
                .unwrap_or_else(|| PathBuf::from("multiwell-out")),
            cache_dir,
            workers: over
                .workers
                .or_else(|| f.as_ref().and_then(|f| f.workers))
                .unwrap_or(1),
            memory_budget_mb: over
                .memory_budget_mb
                .or_else(|| f.as_ref().and_then(|f| f.memory_budget_mb))
                .unwrap_or(4096),
            survival: f.and_then(|f| f.survival).unwrap_or_default(),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), CliError> {
        if self.n.is_empty() {
            return Err(CliError::Config("n list is empty".into()));
        }
        if self.wells.is_empty() {
            return Err(CliError::Config("wells list is empty".into()));
        }
        self.tau.validate("tau")?;
        self.gamma.validate("gamma")?;
        if !(self.e_cut.is_finite() && self.e_cut > 0.0) {
            return Err(CliError::Config(format!("e_cut must be positive, got {}", self.e_cut)));
        }
        if !(self.window.half_width > 0.0 && self.window.e_mid.is_finite()) {
            return Err(CliError::Config(format!(
                "window must have finite e_mid and positive half_width, got {} +- {}",
                self.window.e_mid, self.window.half_width
            )));
        }
        if self.window.e_mid + self.window.half_width > self.e_cut {
            return Err(CliError::Config(format!(
                "window top {} exceeds e_cut {}",
                self.window.e_mid + self.window.half_width,
                self.e_cut
            )));
        }
        if self.refine_ratio < 1.2 {
            return Err(CliError::Config(format!(
                "refine_ratio must be at least 1.2, got {}",
                self.refine_ratio
            )));
        }
        if !(self.rel_tol > 0.0 && self.rel_tol < 1.0) {
            return Err(CliError::Config(format!(
                "rel_tol must lie in (0, 1), got {}",
                self.rel_tol
            )));
        }
        if self.workers == 0 {
            return Err(CliError::Config("workers must be at least 1".into()));
        }
        Ok(())
    }

    pub fn tau_values(&self) -> Vec<f64> {
        self.tau.values(TAU_STEP)
    }

    pub fn gamma_values(&self) -> Vec<f64> {
        self.gamma.values(GAMMA_STEP)
    }
}

/// Caps the worker count so concurrent diagonalizations stay inside the
/// memory budget. The refined run dominates: the dense matrix, the
/// eigensolver workspace, and (with vectors) the output block each scale
/// as `8 d^2` bytes.
pub fn admissible_workers(
    requested: usize,
    budget_mb: u64,
    max_dim: usize,
    want_vectors: bool,
) -> usize {
    let per_point = 8u64
        .saturating_mul(max_dim as u64)
        .saturating_mul(max_dim as u64)
        .saturating_mul(if want_vectors { 4 } else { 2 });
    let budget = budget_mb.saturating_mul(1024 * 1024);
    let fit = if per_point == 0 {
        requested
    } else {
        (budget / per_point).max(1) as usize
    };
    requested.min(fit).max(1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_defaults_follow_standard_steps() {
        let tau = GridSpec {
            min: 0.0,
            max: 25.0,
            steps: None,
        };
        assert_eq!(tau.values(TAU_STEP).len(), 11);
        let gamma = GridSpec {
            min: 0.0,
            max: 50.0,
            steps: None,
        };
        let g = gamma.values(GAMMA_STEP);
        assert_eq!(g.len(), 11);
        assert_eq!(g[1], 5.0);
    }

    #[test]
    fn degenerate_grid_is_single_point() {
        let g = GridSpec {
            min: 15.0,
            max: 15.0,
            steps: None,
        };
        assert_eq!(g.values(TAU_STEP), vec![15.0]);
    }

    #[test]
    fn parse_grid_arg_forms() {
        let g = parse_grid_arg("0:25:11").unwrap();
        assert_eq!(g.steps, Some(11));
        let g = parse_grid_arg("0:25").unwrap();
        assert_eq!(g.steps, None);
        assert!(parse_grid_arg("5").is_err());
    }

    #[test]
    fn toml_round_trip() {
        let text = r#"
n = [4]
wells = [2]
e_cut = 720.0
rel_tol = 0.01
diagnostics = ["brody", "kurtosis"]

[tau]
min = 0.0
max = 25.0

[gamma]
min = 0.0
max = 50.0
steps = 11

[window]
e_mid = 300.0
half_width = 60.0
"#;
        let file: ConfigFile = toml::from_str(text).unwrap();
        let cfg = SweepConfig::resolve(Some(file), &Overrides::default()).unwrap();
        assert_eq!(cfg.n, vec![4]);
        assert_eq!(cfg.tau_values().len(), 11);
        assert!(cfg.diagnostics.brody && cfg.diagnostics.kurtosis);
        assert!(!cfg.diagnostics.survival);
        assert_eq!(cfg.rel_tol, 0.01);
    }

    #[test]
    fn window_above_cutoff_rejected() {
        let over = Overrides {
            n: Some(vec![2]),
            wells: Some(vec![2]),
            tau_grid: Some(GridSpec {
                min: 0.0,
                max: 0.0,
                steps: Some(1),
            }),
            gamma_grid: Some(GridSpec {
                min: 0.0,
                max: 0.0,
                steps: Some(1),
            }),
            e_cut: Some(100.0),
            e_mid: Some(90.0),
            half_width: Some(20.0),
            ..Overrides::default()
        };
        assert!(SweepConfig::from_overrides(&over).is_err());
    }

    #[test]
    fn memory_admission_caps_workers() {
        // 4000^2 * 8 * 4 bytes = 512 MB per worker
        assert_eq!(admissible_workers(8, 1024, 4000, true), 2);
        assert_eq!(admissible_workers(8, 100, 4000, true), 1);
        assert_eq!(admissible_workers(2, 1 << 20, 100, false), 2);
    }

    #[test]
    fn unknown_diagnostic_rejected() {
        let err = DiagnosticsSet::parse(&["brady".to_string()]).unwrap_err();
        assert!(err.to_string().contains("brady"));
    }
}
