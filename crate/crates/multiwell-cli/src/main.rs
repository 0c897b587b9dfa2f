use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use multiwell_cli::config::{parse_grid_arg, DiagnosticsSet, GridSpec, Overrides, SweepConfig};
use multiwell_cli::run::{
    ensure_writable, gamma_csv, limits_csv, run_point, run_sweep, spacings_csv, survival_csv,
    wells_scan_csv, LimitsOutput,
};
use multiwell_cli::{render, CliError};

#[derive(Parser)]
#[command(
    name = "multiwell",
    version,
    about = "Few-boson multi-well spectra: diagonalization, level statistics, and figure outputs"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Command,
}

/// Config-file keys that can be overridden from the command line.
#[derive(Args, Debug, Default)]
struct CommonOpts {
    /// TOML config file (key = value sections)
    #[arg(long)]
    config: Option<PathBuf>,
    /// particle numbers, comma separated
    #[arg(long, value_delimiter = ',')]
    n: Option<Vec<u32>>,
    /// well counts, comma separated
    #[arg(long, value_delimiter = ',')]
    wells: Option<Vec<u32>>,
    /// barrier-strength grid as min:max[:steps]
    #[arg(long, value_parser = parse_grid_arg)]
    tau_grid: Option<GridSpec>,
    /// interaction-strength grid as min:max[:steps]
    #[arg(long, value_parser = parse_grid_arg)]
    gamma_grid: Option<GridSpec>,
    /// basis truncation energy
    #[arg(long)]
    e_cut: Option<f64>,
    /// analysis window center
    #[arg(long)]
    e_mid: Option<f64>,
    /// analysis window half width
    #[arg(long)]
    half_width: Option<f64>,
    /// diagnostics to run: brody,kurtosis,gamma,survival
    #[arg(long, value_delimiter = ',')]
    diagnostics: Option<Vec<String>>,
    /// convergence certification tolerance
    #[arg(long)]
    rel_tol: Option<f64>,
    /// refined-cutoff ratio for certification (>= 1.2)
    #[arg(long)]
    refine_ratio: Option<f64>,
    #[arg(long)]
    output_dir: Option<PathBuf>,
    /// spectrum cache directory (also via MULTIWELL_CACHE_DIR)
    #[arg(long)]
    cache_dir: Option<PathBuf>,
    #[arg(long)]
    workers: Option<usize>,
    /// memory budget for concurrent diagonalizations
    #[arg(long)]
    memory_budget_mb: Option<u64>,
}

impl CommonOpts {
    fn overrides(&self) -> Overrides {
        Overrides {
            n: self.n.clone(),
            wells: self.wells.clone(),
            tau_grid: self.tau_grid,
            gamma_grid: self.gamma_grid,
            e_cut: self.e_cut,
            e_mid: self.e_mid,
            half_width: self.half_width,
            diagnostics: self.diagnostics.clone(),
            refine_ratio: self.refine_ratio,
            rel_tol: self.rel_tol,
            output_dir: self.output_dir.clone(),
            cache_dir: self.cache_dir.clone(),
            workers: self.workers,
            memory_budget_mb: self.memory_budget_mb,
        }
    }

    fn resolve(&self) -> Result<SweepConfig, CliError> {
        let over = self.overrides();
        match &self.config {
            Some(path) => SweepConfig::load(path, &over),
            None => SweepConfig::from_overrides(&over),
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run one (N, W, tau, gamma) point and write its diagnostics record
    Point {
        #[command(flatten)]
        common: CommonOpts,
        #[arg(long)]
        tau: Option<f64>,
        #[arg(long)]
        gamma: Option<f64>,
        /// also write the unfolded spacing sample as CSV
        #[arg(long)]
        spacings_out: Option<PathBuf>,
        /// also write the binned moment ratio as CSV
        #[arg(long)]
        gamma_out: Option<PathBuf>,
        /// record JSON path (default: <output_dir>/point_....json)
        #[arg(long)]
        record_out: Option<PathBuf>,
    },
    /// Run the full (tau, gamma) grid for every (N, W)
    Sweep {
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Sweep over well counts and aggregate min-kurtosis / max-beta per W
    WellsScan {
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Compute a survival-probability curve at one point
    Survival {
        #[command(flatten)]
        common: CommonOpts,
        #[arg(long)]
        tau: Option<f64>,
        #[arg(long)]
        gamma: Option<f64>,
        /// log10 time grid as lo:hi:points
        #[arg(long, value_parser = parse_grid_arg)]
        time_grid: Option<GridSpec>,
        /// smoothing half width on the log10 axis
        #[arg(long)]
        smooth: Option<f64>,
        /// curve CSV path (default: <output_dir>/survival_....csv)
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print solvable-limit level lists (transfer matrix or corner models)
    Limits {
        /// well count
        #[arg(long)]
        wells: u32,
        /// barrier strength (transfer-matrix mode)
        #[arg(long)]
        tau: Option<f64>,
        /// corner model id 1-4 (enumeration mode)
        #[arg(long)]
        corner: Option<u8>,
        /// particle number (corner mode)
        #[arg(long)]
        n: Option<u32>,
        #[arg(long)]
        e_max: f64,
        /// output CSV path (default: stdout)
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Render CSV outputs as SVG figures
    Render {
        /// heatmap | spacing-hist | gamma-scatter | survival-curve
        #[arg(long)]
        kind: String,
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// sweep column for heatmaps (default: beta)
        #[arg(long)]
        value: Option<String>,
        /// heatmap group filters when the CSV holds several (n, wells)
        #[arg(long)]
        n: Option<u32>,
        #[arg(long)]
        wells: Option<u32>,
    },
}

fn slug(x: f64) -> String {
    format!("{x}").replace('.', "p").replace('-', "m")
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent).map_err(|e| CliError::Io {
                path: parent.to_path_buf(),
                source: e,
            })?;
        }
    }
    fs::write(path, text).map_err(|e| CliError::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

/// Resolves a single-point (tau, gamma): explicit flags win, otherwise the
/// config grids must be single-valued.
fn single_point(cfg: &SweepConfig, tau: Option<f64>, gamma: Option<f64>) -> Result<(f64, f64), CliError> {
    let tau = match tau {
        Some(t) => t,
        None => {
            let vals = cfg.tau_values();
            if vals.len() != 1 {
                return Err(CliError::Config(
                    "point runs need --tau or a single-valued tau grid".into(),
                ));
            }
            vals[0]
        }
    };
    let gamma = match gamma {
        Some(g) => g,
        None => {
            let vals = cfg.gamma_values();
            if vals.len() != 1 {
                return Err(CliError::Config(
                    "point runs need --gamma or a single-valued gamma grid".into(),
                ));
            }
            vals[0]
        }
    };
    Ok((tau, gamma))
}

fn single_nw(cfg: &SweepConfig) -> Result<(u32, u32), CliError> {
    if cfg.n.len() != 1 || cfg.wells.len() != 1 {
        return Err(CliError::Config(
            "point runs take exactly one n and one wells value".into(),
        ));
    }
    Ok((cfg.n[0], cfg.wells[0]))
}

fn cmd_point(
    common: &CommonOpts,
    tau: Option<f64>,
    gamma: Option<f64>,
    spacings_out: Option<&Path>,
    gamma_out: Option<&Path>,
    record_out: Option<&Path>,
) -> Result<bool, CliError> {
    let mut over = common.overrides();
    if let Some(t) = tau {
        over.tau_grid = Some(GridSpec { min: t, max: t, steps: Some(1) });
    }
    if let Some(g) = gamma {
        over.gamma_grid = Some(GridSpec { min: g, max: g, steps: Some(1) });
    }
    let cfg = match &common.config {
        Some(path) => SweepConfig::load(path, &over)?,
        None => SweepConfig::from_overrides(&over)?,
    };
    let (n, w) = single_nw(&cfg)?;
    let (t, g) = single_point(&cfg, None, None)?;
    ensure_writable(&cfg.output_dir)?;

    let out = run_point(&cfg, n, w, t, g)?;
    let record_path = record_out.map(Path::to_path_buf).unwrap_or_else(|| {
        cfg.output_dir
            .join(format!("point_n{n}_w{w}_tau{}_gamma{}.json", slug(t), slug(g)))
    });
    let json = serde_json::to_string_pretty(&out.record)
        .map_err(|e| CliError::Config(format!("record serialization: {e}")))?;
    write_text(&record_path, &(json.clone() + "\n"))?;

    if let Some(path) = spacings_out {
        match &out.spacing_values {
            Some(values) => write_text(path, &spacings_csv(&out.record, values))?,
            None => {
                return Err(CliError::Render(
                    "no spacing sample; run with the 'brody' diagnostic enabled".into(),
                ))
            }
        }
    }
    if let Some(path) = gamma_out {
        match &out.gamma_bins {
            Some(bins) => write_text(path, &gamma_csv(&out.record, bins))?,
            None => {
                return Err(CliError::Render(
                    "no moment-ratio bins; run with the 'gamma' diagnostic enabled".into(),
                ))
            }
        }
    }

    println!("{json}");
    println!("record: {}", record_path.display());
    Ok(out.record.flag.is_none())
}

fn cmd_sweep(common: &CommonOpts, wells_aggregate: bool) -> Result<bool, CliError> {
    let cfg = common.resolve()?;
    let (records, summary) = run_sweep(&cfg)?;
    if wells_aggregate {
        let path = cfg.output_dir.join("wells_scan.csv");
        write_text(&path, &wells_scan_csv(&records))?;
        println!("wells scan: {}", path.display());
    }
    println!(
        "{} points, {} flagged -> {}",
        summary.points,
        summary.flagged,
        cfg.output_dir.display()
    );
    if let Some(b) = &summary.argmax_beta {
        println!(
            "argmax beta = {:.4} at (n={}, w={}, tau={}, gamma={})",
            b.value, b.n, b.wells, b.tau, b.gamma
        );
    }
    if let Some(k) = &summary.argmin_kurtosis {
        println!(
            "argmin kurtosis = {:.4} at (n={}, w={}, tau={}, gamma={})",
            k.value, k.n, k.wells, k.tau, k.gamma
        );
    }
    Ok(summary.flagged == 0)
}

fn cmd_survival(
    common: &CommonOpts,
    tau: Option<f64>,
    gamma: Option<f64>,
    time_grid: Option<GridSpec>,
    smooth: Option<f64>,
    out_path: Option<&Path>,
) -> Result<bool, CliError> {
    let mut cfg = common.resolve()?;
    cfg.diagnostics = DiagnosticsSet {
        survival: true,
        ..cfg.diagnostics
    };
    if let Some(g) = time_grid {
        cfg.survival.log10_t_min = Some(g.min);
        cfg.survival.log10_t_max = Some(g.max);
        if let Some(s) = g.steps {
            cfg.survival.points = Some(s);
        }
    }
    if let Some(s) = smooth {
        cfg.survival.smooth_half_width = Some(s);
    }
    let (n, w) = single_nw(&cfg)?;
    let (t, g) = single_point(&cfg, tau, gamma)?;
    ensure_writable(&cfg.output_dir)?;

    let out = run_point(&cfg, n, w, t, g)?;
    match &out.curve {
        Some(_) => {
            let path = out_path.map(Path::to_path_buf).unwrap_or_else(|| {
                cfg.output_dir
                    .join(format!("survival_n{n}_w{w}_tau{}_gamma{}.csv", slug(t), slug(g)))
            });
            write_text(&path, &survival_csv(&cfg, n, w, t, g, &out))?;
            let s = out.record.survival.expect("summary present with curve");
            println!(
                "S_inf = {:.6e}, hole depth {:.6e} at t = {:.6e} -> {}",
                s.s_inf,
                s.hole_depth,
                s.hole_time,
                path.display()
            );
            Ok(out.record.flag.is_none())
        }
        None => {
            let flag = out.record.flag.as_deref().unwrap_or("no curve produced");
            println!("flagged: {flag}");
            Ok(false)
        }
    }
}

fn cmd_limits(
    wells: u32,
    tau: Option<f64>,
    corner: Option<u8>,
    n: Option<u32>,
    e_max: f64,
    out: Option<&Path>,
) -> Result<bool, CliError> {
    let req = match (corner, tau) {
        (Some(id), _) => LimitsOutput::Corner {
            id,
            n: n.ok_or_else(|| CliError::Config("corner mode needs --n".into()))?,
            wells,
            e_max,
        },
        (None, Some(tau)) => LimitsOutput::KroningPenney { wells, tau, e_max },
        (None, None) => {
            return Err(CliError::Config(
                "limits needs --tau (transfer matrix) or --corner (enumeration)".into(),
            ))
        }
    };
    let text = limits_csv(&req)?;
    match out {
        Some(path) => {
            write_text(path, &text)?;
            println!("{}", path.display());
        }
        None => print!("{text}"),
    }
    Ok(true)
}

fn cmd_render(
    kind: &str,
    input: &Path,
    out: &Path,
    value: Option<&str>,
    n: Option<u32>,
    wells: Option<u32>,
) -> Result<bool, CliError> {
    let text = fs::read_to_string(input).map_err(|e| CliError::Io {
        path: input.to_path_buf(),
        source: e,
    })?;
    let svg = match kind {
        "heatmap" => render::render_heatmap(&text, value.unwrap_or("beta"), n, wells)?,
        "spacing-hist" => render::render_spacing_hist(&text)?,
        "gamma-scatter" => render::render_gamma_scatter(&text)?,
        "survival-curve" => render::render_survival(&text)?,
        other => {
            return Err(CliError::Config(format!(
                "unknown render kind '{other}' (heatmap, spacing-hist, gamma-scatter, survival-curve)"
            )))
        }
    };
    write_text(out, &svg)?;
    println!("{}", out.display());
    Ok(true)
}

fn dispatch(cli: Cli) -> Result<bool, CliError> {
    match cli.cmd {
        Command::Point {
            common,
            tau,
            gamma,
            spacings_out,
            gamma_out,
            record_out,
        } => cmd_point(
            &common,
            tau,
            gamma,
            spacings_out.as_deref(),
            gamma_out.as_deref(),
            record_out.as_deref(),
        ),
        Command::Sweep { common } => cmd_sweep(&common, false),
        Command::WellsScan { common } => cmd_sweep(&common, true),
        Command::Survival {
            common,
            tau,
            gamma,
            time_grid,
            smooth,
            out,
        } => cmd_survival(&common, tau, gamma, time_grid, smooth, out.as_deref()),
        Command::Limits {
            wells,
            tau,
            corner,
            n,
            e_max,
            out,
        } => cmd_limits(wells, tau, corner, n, e_max, out.as_deref()),
        Command::Render {
            kind,
            input,
            out,
            value,
            n,
            wells,
        } => cmd_render(&kind, &input, &out, value.as_deref(), n, wells),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
