//! Point and sweep orchestration: cache-backed diagonalization, convergence
//! certification, windowed diagnostics, and output files.

use std::f64::consts::FRAC_PI_2;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use multiwell::dynamics::{
    self, analytic_survival, moving_log_average, survival_probability, window_state, SurvivalCurve,
};
use multiwell::eth::{
    gamma_ratio, kurtosis, observable_in_eigenbasis, offdiag_set, window_indices, EthError,
    GammaBin,
};
use multiwell::hilbert::{build_basis, HamiltonianParams, ParityFilter};
use multiwell::spectrum::{
    compute_spectrum, convergence_filter, load_spectrum, store_spectrum, SpectralResult,
    SpectrumError,
};
use multiwell::stats::{fit_brody, spacings};

use crate::config::SweepConfig;
use crate::record::{
    fmt_f64, summarize, sweep_csv, BetaRecord, DiagnosticsRecord, GammaDeviation, SurvivalSummary,
    SweepSummary,
};
use crate::CliError;

fn now_ms() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis() as u64)
        .unwrap_or(0)
}

/// Cache-through spectrum fetch that also reports whether it was a hit.
pub fn cached_spectrum(
    params: &HamiltonianParams,
    e_cut: f64,
    want_vectors: bool,
    dir: &Path,
) -> Result<(SpectralResult, bool), SpectrumError> {
    if let Some(hit) = load_spectrum(dir, params, e_cut, want_vectors)? {
        return Ok((hit, true));
    }
    let result = compute_spectrum(params, e_cut, want_vectors)?;
    store_spectrum(dir, &result)?;
    Ok((result, false))
}

/// Diagonalizes at `e_cut` and at `e_cut * ratio`, marks the certified
/// prefix of the base run, and counts cache hits (0..=2).
pub fn certified_spectrum(
    params: &HamiltonianParams,
    e_cut: f64,
    ratio: f64,
    rel_tol: f64,
    want_vectors: bool,
    dir: &Path,
) -> Result<(SpectralResult, u32), SpectrumError> {
    let (mut base, hit_base) = cached_spectrum(params, e_cut, want_vectors, dir)?;
    let (refined, hit_ref) = cached_spectrum(params, e_cut * ratio, false, dir)?;
    let mask = convergence_filter(&base, &refined, rel_tol)?;
    base.set_converged_mask(mask)?;
    Ok((base, u32::from(hit_base) + u32::from(hit_ref)))
}

/// Everything a single grid point produced. The raw per-diagnostic data
/// ride along so subcommands can write curve/histogram files without
/// recomputing.
pub struct PointOutput {
    pub record: DiagnosticsRecord,
    pub spacing_values: Option<Vec<f64>>,
    pub gamma_bins: Option<Vec<GammaBin>>,
    pub curve: Option<SurvivalCurve>,
    pub eta_energy_density: Option<f64>,
}

/// Runs one `(N, W, tau, gamma)` point: diagonalize (or load), certify
/// convergence, then compute the enabled diagnostics. A window that is not
/// fully certified flags the record and emits no numbers.
pub fn run_point(
    cfg: &SweepConfig,
    n: u32,
    wells: u32,
    tau: f64,
    gamma: f64,
) -> Result<PointOutput, CliError> {
    let started = now_ms();
    let mut record = DiagnosticsRecord::blank(
        n,
        wells,
        tau,
        gamma,
        cfg.e_cut,
        cfg.window.e_mid,
        cfg.window.half_width,
    );
    record.started_unix_ms = started;
    let mut out = PointOutput {
        record,
        spacing_values: None,
        gamma_bins: None,
        curve: None,
        eta_energy_density: None,
    };

    let params = HamiltonianParams::new(n, wells, tau, gamma)
        .map_err(|e| CliError::Config(e.to_string()))?;
    let (spectral, hits) = certified_spectrum(
        &params,
        cfg.e_cut,
        cfg.refine_ratio,
        cfg.rel_tol,
        cfg.diagnostics.wants_vectors(),
        &cfg.cache_dir,
    )?;
    out.record.cache_hits = hits;

    if tau == 0.0 && gamma == 0.0 {
        out.record
            .add_flag("degenerate picket-fence regime (tau = 0, gamma = 0)");
    }

    let window = match window_indices(&spectral, cfg.window.e_mid, cfg.window.half_width) {
        Ok(w) => w,
        Err(e @ (EthError::Unconverged { .. } | EthError::EmptyWindow { .. })) => {
            out.record.add_flag(e.to_string());
            out.record.finished_unix_ms = now_ms();
            return Ok(out);
        }
        Err(e) => return Err(CliError::Config(e.to_string())),
    };
    out.record.eta = Some(window.eta());
    out.eta_energy_density = Some(window.eta() as f64 / (2.0 * cfg.window.half_width));

    if cfg.diagnostics.brody {
        run_brody(cfg, &spectral, &mut out);
    }
    if cfg.diagnostics.kurtosis || cfg.diagnostics.gamma {
        run_offdiag(cfg, &spectral, &window, &mut out)?;
    }
    if cfg.diagnostics.survival {
        run_survival(cfg, &spectral, &mut out);
    }

    out.record.finished_unix_ms = now_ms();
    Ok(out)
}

fn run_brody(cfg: &SweepConfig, spectral: &SpectralResult, out: &mut PointOutput) {
    let lo = cfg.window.e_mid - cfg.window.half_width;
    let hi = cfg.window.e_mid + cfg.window.half_width;
    let unfolded = match multiwell::spectrum::unfold(
        spectral.converged_eigenvalues(),
        spectral.params().n_particles(),
        Some((lo, hi)),
    ) {
        Ok(u) => u,
        Err(e) => {
            out.record.add_flag(format!("brody: {e}"));
            return;
        }
    };
    let sample = match spacings(&unfolded) {
        Ok(s) => s,
        Err(e) => {
            out.record.add_flag(format!("brody: {e}"));
            return;
        }
    };
    match fit_brody(&sample) {
        Ok(fit) => {
            out.record.beta = Some(BetaRecord {
                value: fit.beta,
                fit_error: fit.fit_error,
            });
            out.spacing_values = Some(sample.values().to_vec());
        }
        Err(e) => out.record.add_flag(format!("brody: {e}")),
    }
}

fn run_offdiag(
    cfg: &SweepConfig,
    spectral: &SpectralResult,
    window: &multiwell::eth::EnergyWindow,
    out: &mut PointOutput,
) -> Result<(), CliError> {
    let basis = build_basis(
        spectral.params().n_particles(),
        spectral.e_cut(),
        ParityFilter::Plus,
    );
    let observable = basis.kinetic_diagonal();
    let o_eig = match observable_in_eigenbasis(spectral, &observable, window) {
        Ok(m) => m,
        Err(EthError::Linalg(e)) => return Err(CliError::Spectrum(SpectrumError::from(e))),
        Err(e) => {
            out.record.add_flag(format!("offdiag: {e}"));
            return Ok(());
        }
    };
    let window_energies: Vec<f64> = window
        .indices()
        .map(|i| spectral.eigenvalues()[i])
        .collect();
    let offdiag = match offdiag_set(&o_eig, &window_energies) {
        Ok(s) => s,
        Err(e) => {
            out.record.add_flag(format!("offdiag: {e}"));
            return Ok(());
        }
    };
    if cfg.diagnostics.kurtosis {
        match kurtosis(offdiag.values()) {
            Ok(k) => out.record.kurtosis = Some(k),
            Err(e) => out.record.add_flag(format!("kurtosis: {e}")),
        }
    }
    if cfg.diagnostics.gamma {
        let bins = gamma_ratio(&offdiag, 50, 2.0 * cfg.window.half_width);
        let devs: Vec<f64> = bins
            .iter()
            .filter_map(|b| b.gamma)
            .map(|g| g - FRAC_PI_2)
            .collect();
        if devs.is_empty() {
            out.record
                .add_flag("gamma: every frequency bin is below the pair threshold");
        } else {
            out.record.gamma_dev = Some(GammaDeviation {
                min: devs.iter().copied().fold(f64::INFINITY, f64::min),
                max: devs.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            });
            out.gamma_bins = Some(bins);
        }
    }
    Ok(())
}

fn run_survival(cfg: &SweepConfig, spectral: &SpectralResult, out: &mut PointOutput) {
    let state = match window_state(spectral, cfg.window.e_mid, cfg.window.half_width) {
        Ok(s) => s,
        Err(e) => {
            out.record.add_flag(format!("survival: {e}"));
            return;
        }
    };
    let (lo, hi, points) = cfg.survival.grid();
    let times = dynamics::log_time_grid(lo, hi, points);
    let mut curve = survival_probability(&state, spectral.eigenvalues(), &times);
    let smoothed = moving_log_average(curve.times(), curve.values(), cfg.survival.smooth());
    let eta = state.eta();
    let analytic: Vec<f64> = curve
        .times()
        .iter()
        .map(|&t| analytic_survival(t, eta, cfg.window.half_width, curve.s_inf()))
        .collect();

    let (mut min_v, mut min_t) = (f64::INFINITY, times[0]);
    for (&t, &v) in curve.times().iter().zip(&smoothed) {
        if v < min_v {
            min_v = v;
            min_t = t;
        }
    }
    out.record.survival = Some(SurvivalSummary {
        s_inf: curve.s_inf(),
        hole_depth: curve.s_inf() - min_v,
        hole_time: min_t,
    });
    curve.set_smoothed(smoothed);
    curve.set_analytic(analytic);
    out.curve = Some(curve);
}

/// Checks the output directory is writable before any compute starts.
pub fn ensure_writable(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::Io {
        path: dir.to_path_buf(),
        source: e,
    })?;
    let probe = dir.join(".write-probe");
    fs::write(&probe, b"ok").map_err(|e| CliError::Io {
        path: probe.clone(),
        source: e,
    })?;
    fs::remove_file(&probe).map_err(|e| CliError::Io {
        path: probe,
        source: e,
    })?;
    Ok(())
}

fn grid_comments(cfg: &SweepConfig) -> Vec<String> {
    vec![
        format!("n = {:?}", cfg.n),
        format!("wells = {:?}", cfg.wells),
        format!(
            "tau grid = [{}, {}] x {}",
            cfg.tau.min,
            cfg.tau.max,
            cfg.tau_values().len()
        ),
        format!(
            "gamma grid = [{}, {}] x {}",
            cfg.gamma.min,
            cfg.gamma.max,
            cfg.gamma_values().len()
        ),
        format!("e_cut = {}", cfg.e_cut),
        format!(
            "window = {} +- {}",
            cfg.window.e_mid, cfg.window.half_width
        ),
        format!("rel_tol = {}", cfg.rel_tol),
        format!("refine_ratio = {}", cfg.refine_ratio),
        format!("diagnostics = {}", cfg.diagnostics),
        "grid resolution is a default (tau step 2.5, gamma step 5) unless steps were given".into(),
    ]
}

/// Runs every grid point, never aborting on per-point failures, and writes
/// `sweep.csv`, `records.json`, and `summary.json` into the output
/// directory.
pub fn run_sweep(cfg: &SweepConfig) -> Result<(Vec<DiagnosticsRecord>, SweepSummary), CliError> {
    ensure_writable(&cfg.output_dir)?;
    fs::create_dir_all(&cfg.cache_dir).map_err(|e| CliError::Io {
        path: cfg.cache_dir.clone(),
        source: e,
    })?;

    let taus = cfg.tau_values();
    let gammas = cfg.gamma_values();
    let mut points = Vec::new();
    for &n in &cfg.n {
        for &w in &cfg.wells {
            for &g in &gammas {
                for &t in &taus {
                    points.push((n, w, t, g));
                }
            }
        }
    }

    let max_dim = cfg
        .n
        .iter()
        .map(|&n| build_basis(n, cfg.e_cut * cfg.refine_ratio, ParityFilter::Plus).len())
        .max()
        .unwrap_or(0);
    let workers = crate::config::admissible_workers(
        cfg.workers,
        cfg.memory_budget_mb,
        max_dim,
        cfg.diagnostics.wants_vectors(),
    );

    let run_one = |&(n, w, t, g): &(u32, u32, f64, f64)| -> DiagnosticsRecord {
        match run_point(cfg, n, w, t, g) {
            Ok(out) => out.record,
            Err(e) => {
                let mut r = DiagnosticsRecord::blank(
                    n,
                    w,
                    t,
                    g,
                    cfg.e_cut,
                    cfg.window.e_mid,
                    cfg.window.half_width,
                );
                r.add_flag(format!("error: {e}"));
                r
            }
        }
    };

    let records: Vec<DiagnosticsRecord> = if workers > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
        pool.install(|| {
            use rayon::prelude::*;
            points.par_iter().map(run_one).collect()
        })
    } else {
        points.iter().map(run_one).collect()
    };

    let summary = summarize(&records);
    write_outputs(cfg, &records, &summary)?;
    Ok((records, summary))
}

fn write_outputs(
    cfg: &SweepConfig,
    records: &[DiagnosticsRecord],
    summary: &SweepSummary,
) -> Result<(), CliError> {
    let io_err = |path: &Path, e: std::io::Error| CliError::Io {
        path: path.to_path_buf(),
        source: e,
    };
    let csv_path = cfg.output_dir.join("sweep.csv");
    fs::write(&csv_path, sweep_csv(records, &grid_comments(cfg))).map_err(|e| io_err(&csv_path, e))?;
    let json_path = cfg.output_dir.join("records.json");
    let json = serde_json::to_string_pretty(records)
        .map_err(|e| CliError::Config(format!("records serialization: {e}")))?;
    fs::write(&json_path, json + "\n").map_err(|e| io_err(&json_path, e))?;
    let summary_path = cfg.output_dir.join("summary.json");
    let json = serde_json::to_string_pretty(summary)
        .map_err(|e| CliError::Config(format!("summary serialization: {e}")))?;
    fs::write(&summary_path, json + "\n").map_err(|e| io_err(&summary_path, e))?;
    Ok(())
}

/// Per-well aggregation of a sweep: minimum kurtosis and maximum beta over
/// the `(tau, gamma)` grid for each `(N, W)`.
pub fn wells_scan_csv(records: &[DiagnosticsRecord]) -> String {
    let mut keys: Vec<(u32, u32)> = records.iter().map(|r| (r.n, r.wells)).collect();
    keys.sort_unstable();
    keys.dedup();
    let mut out = String::from("# multiwell wells-scan csv v1\n");
    out.push_str(
        "n,wells,k_min,k_min_tau,k_min_gamma,beta_max,beta_max_tau,beta_max_gamma,points,flagged\n",
    );
    for (n, w) in keys {
        let group: Vec<&DiagnosticsRecord> = records
            .iter()
            .filter(|r| r.n == n && r.wells == w)
            .collect();
        let mut k_min: Option<(f64, f64, f64)> = None;
        let mut b_max: Option<(f64, f64, f64)> = None;
        for r in &group {
            if let Some(k) = r.kurtosis {
                if k_min.map_or(true, |(v, _, _)| k < v) {
                    k_min = Some((k, r.tau, r.gamma));
                }
            }
            if let Some(b) = r.beta {
                if b_max.map_or(true, |(v, _, _)| b.value > v) {
                    b_max = Some((b.value, r.tau, r.gamma));
                }
            }
        }
        let fmt_triple = |t: Option<(f64, f64, f64)>| match t {
            Some((v, tau, gamma)) => format!("{},{},{}", fmt_f64(v), fmt_f64(tau), fmt_f64(gamma)),
            None => ",,".into(),
        };
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            n,
            w,
            fmt_triple(k_min),
            fmt_triple(b_max),
            group.len(),
            group.iter().filter(|r| r.flag.is_some()).count(),
        );
    }
    out
}

/// Survival curve CSV with the run parameters in header comments.
pub fn survival_csv(cfg: &SweepConfig, n: u32, wells: u32, tau: f64, gamma: f64, out: &PointOutput) -> String {
    let curve = out.curve.as_ref().expect("survival curve present");
    let mut text = String::from("# multiwell survival csv v1\n");
    let _ = writeln!(text, "# n = {n}");
    let _ = writeln!(text, "# wells = {wells}");
    let _ = writeln!(text, "# tau = {}", fmt_f64(tau));
    let _ = writeln!(text, "# gamma = {}", fmt_f64(gamma));
    let _ = writeln!(text, "# e_cut = {}", fmt_f64(cfg.e_cut));
    let _ = writeln!(text, "# e_mid = {}", fmt_f64(cfg.window.e_mid));
    let _ = writeln!(text, "# half_width = {}", fmt_f64(cfg.window.half_width));
    if let Some(eta) = out.record.eta {
        let _ = writeln!(text, "# eta = {eta}");
    }
    let _ = writeln!(text, "# s_inf = {}", fmt_f64(curve.s_inf()));
    let _ = writeln!(text, "# smooth_half_width = {}", fmt_f64(cfg.survival.smooth()));
    text.push_str("t,raw,smoothed,analytic\n");
    let smoothed = curve.smoothed().expect("smoothed curve present");
    let analytic = curve.analytic().expect("analytic curve present");
    for i in 0..curve.times().len() {
        let _ = writeln!(
            text,
            "{},{},{},{}",
            fmt_f64(curve.times()[i]),
            fmt_f64(curve.values()[i]),
            fmt_f64(smoothed[i]),
            fmt_f64(analytic[i]),
        );
    }
    text
}

/// Spacing sample CSV (one column) with the fitted Brody parameters in the
/// header so the histogram renderer can draw the fit curve.
pub fn spacings_csv(record: &DiagnosticsRecord, values: &[f64]) -> String {
    let mut text = String::from("# multiwell spacings csv v1\n");
    let _ = writeln!(text, "# n = {}", record.n);
    let _ = writeln!(text, "# wells = {}", record.wells);
    let _ = writeln!(text, "# tau = {}", fmt_f64(record.tau));
    let _ = writeln!(text, "# gamma = {}", fmt_f64(record.gamma));
    if let Some(b) = record.beta {
        let _ = writeln!(text, "# beta = {}", fmt_f64(b.value));
        let _ = writeln!(text, "# beta_err = {}", fmt_f64(b.fit_error));
    }
    text.push_str("s\n");
    for &s in values {
        let _ = writeln!(text, "{}", fmt_f64(s));
    }
    text
}

/// Binned moment-ratio CSV; bins below the pair threshold leave the ratio
/// column empty.
pub fn gamma_csv(record: &DiagnosticsRecord, bins: &[GammaBin]) -> String {
    let mut text = String::from("# multiwell gamma csv v1\n");
    let _ = writeln!(text, "# n = {}", record.n);
    let _ = writeln!(text, "# wells = {}", record.wells);
    let _ = writeln!(text, "# tau = {}", fmt_f64(record.tau));
    let _ = writeln!(text, "# gamma = {}", fmt_f64(record.gamma));
    text.push_str("omega,gamma,pairs\n");
    for b in bins {
        let _ = writeln!(
            text,
            "{},{},{}",
            fmt_f64(b.omega_center),
            b.gamma.map(fmt_f64).unwrap_or_default(),
            b.pairs,
        );
    }
    text
}

/// Solvable-limit level lists: transfer-matrix roots or corner-model
/// enumerations.
pub enum LimitsOutput {
    KroningPenney { wells: u32, tau: f64, e_max: f64 },
    Corner { id: u8, n: u32, wells: u32, e_max: f64 },
}

pub fn limits_csv(req: &LimitsOutput) -> Result<String, CliError> {
    match *req {
        LimitsOutput::KroningPenney { wells, tau, e_max } => {
            let kp = multiwell::limits::kp_levels(wells, tau, e_max)?;
            let mut text = String::from("# multiwell limits csv v1\n");
            let _ = writeln!(text, "# model = kronig-penney");
            let _ = writeln!(text, "# wells = {wells}");
            let _ = writeln!(text, "# tau = {}", fmt_f64(tau));
            text.push_str("energy,parity\n");
            for &(e, p) in kp.levels() {
                let _ = writeln!(text, "{},{}", fmt_f64(e), p.sign());
            }
            Ok(text)
        }
        LimitsOutput::Corner { id, n, wells, e_max } => {
            let corner = multiwell::limits::CornerModel::from_id(id)?;
            let spec = multiwell::limits::corner_spectrum(corner, n, wells, e_max);
            let mut text = String::from("# multiwell limits csv v1\n");
            let _ = writeln!(text, "# model = corner-{id}");
            let _ = writeln!(text, "# n = {n}");
            let _ = writeln!(text, "# wells = {wells}");
            text.push_str("energy,degeneracy\n");
            for &(e, g) in spec.levels() {
                let _ = writeln!(text, "{},{}", fmt_f64(e), g);
            }
            Ok(text)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{DiagnosticsSet, GridSpec, Overrides, WindowSpec};

    fn tiny_config(dir: &Path) -> SweepConfig {
        let over = Overrides {
            n: Some(vec![3]),
            wells: Some(vec![2]),
            tau_grid: Some(GridSpec {
                min: 5.0,
                max: 5.0,
                steps: Some(1),
            }),
            gamma_grid: Some(GridSpec {
                min: 3.0,
                max: 3.0,
                steps: Some(1),
            }),
            e_cut: Some(200.0),
            e_mid: Some(120.0),
            half_width: Some(60.0),
            rel_tol: Some(0.02),
            output_dir: Some(dir.join("out")),
            cache_dir: Some(dir.join("cache")),
            ..Overrides::default()
        };
        SweepConfig::from_overrides(&over).unwrap()
    }

    fn temp_dir(tag: &str) -> std::path::PathBuf {
        let dir = std::env::temp_dir().join(format!("multiwell-run-{tag}-{}", std::process::id()));
        let _ = fs::remove_dir_all(&dir);
        fs::create_dir_all(&dir).unwrap();
        dir
    }

    #[test]
    fn point_produces_all_requested_diagnostics() {
        let dir = temp_dir("point");
        let cfg = tiny_config(&dir);
        let out = run_point(&cfg, 3, 2, 5.0, 3.0).unwrap();
        let r = &out.record;
        assert!(r.flag.is_none(), "{:?}", r.flag);
        assert!(r.eta.unwrap() > 20);
        assert!(r.beta.is_some());
        assert!(r.kurtosis.is_some());
        assert!(r.survival.is_some());
        assert!(out.curve.is_some());
        assert!(r.finished_unix_ms >= r.started_unix_ms);
        let _ = fs::remove_dir_all(&dir);
    }

    #[test]
    fn warm_cache_repeat_matches_except_timing() {
        let dir = temp_dir("warm");
        let cfg = tiny_config(&dir);
        let cold = run_point(&cfg, 3, 2, 5.0, 3.0).unwrap().record;
        let warm = run_point(&cfg, 3, 2, 5.0, 3.0).unwrap().record;
        assert_eq!(cold.cache_hits, 0);
        assert_eq!(warm.cache_hits, 2);
        assert_eq!(warm.eta, cold.eta);
        assert_eq!(
            warm.beta.map(|b| (b.value, b.fit_error)),
            cold.beta.map(|b| (b.value, b.fit_error))
        );
        assert_eq!(warm.kurtosis, cold.kurtosis);
        assert_eq!(warm.flag, cold.flag);
        let _ = fs::remove_dir_all(&dir);
    }

    #[test]
    fn window_above_certified_energy_is_flagged_without_numbers() {
        let dir = temp_dir("unconv");
        let mut cfg = tiny_config(&dir);
        cfg.rel_tol = 1e-5;
        cfg.window = WindowSpec {
            e_mid: 180.0,
            half_width: 15.0,
        };
        let out = run_point(&cfg, 3, 2, 5.0, 3.0).unwrap();
        let r = &out.record;
        let flag = r.flag.as_deref().unwrap();
        assert!(flag.contains("certified"), "{flag}");
        assert!(r.eta.is_none());
        assert!(r.beta.is_none() && r.kurtosis.is_none() && r.survival.is_none());
        let _ = fs::remove_dir_all(&dir);
    }

    #[test]
    fn free_box_point_flags_degenerate_regime() {
        let dir = temp_dir("degen");
        let mut cfg = tiny_config(&dir);
        cfg.diagnostics = DiagnosticsSet {
            brody: true,
            kurtosis: false,
            gamma: false,
            survival: false,
        };
        let out = run_point(&cfg, 3, 2, 0.0, 0.0).unwrap();
        let flag = out.record.flag.as_deref().unwrap();
        assert!(flag.contains("degenerate"), "{flag}");
        // picket-fence spacings push the fit hard toward clustering
        let beta = out.record.beta.unwrap().value;
        assert!(beta < 0.0, "beta = {beta}");
        let _ = fs::remove_dir_all(&dir);
    }

    #[test]
    fn sweep_emits_one_record_and_row_per_grid_point() {
        let dir = temp_dir("sweep");
        let mut cfg = tiny_config(&dir);
        cfg.tau = GridSpec {
            min: 1.0,
            max: 5.0,
            steps: Some(3),
        };
        cfg.gamma = GridSpec {
            min: 1.0,
            max: 5.0,
            steps: Some(3),
        };
        cfg.diagnostics = DiagnosticsSet {
            brody: true,
            kurtosis: false,
            gamma: false,
            survival: false,
        };
        let (records, summary) = run_sweep(&cfg).unwrap();
        assert_eq!(records.len(), 9);
        assert_eq!(summary.points, 9);
        let csv = fs::read_to_string(cfg.output_dir.join("sweep.csv")).unwrap();
        let (_, rows) = crate::record::parse_csv(&csv).unwrap();
        assert_eq!(rows.len(), 9);
        assert!(cfg.output_dir.join("records.json").exists());
        assert!(cfg.output_dir.join("summary.json").exists());
        let _ = fs::remove_dir_all(&dir);
    }

    #[test]
    fn unwritable_output_dir_fails_before_compute() {
        let dir = temp_dir("ro");
        let mut cfg = tiny_config(&dir);
        cfg.output_dir = std::path::PathBuf::from("/proc/no-such-dir/out");
        let err = run_sweep(&cfg).unwrap_err();
        assert!(matches!(err, CliError::Io { .. }));
        let _ = fs::remove_dir_all(&dir);
    }

    #[test]
    fn limits_csv_kp_and_corner() {
        let kp = limits_csv(&LimitsOutput::KroningPenney {
            wells: 2,
            tau: 10.0,
            e_max: 100.0,
        })
        .unwrap();
        assert!(kp.starts_with("# multiwell limits csv v1"));
        let (header, rows) = crate::record::parse_csv(&kp).unwrap();
        assert_eq!(header, vec!["energy", "parity"]);
        assert!(rows.len() > 5);

        let corner = limits_csv(&LimitsOutput::Corner {
            id: 1,
            n: 2,
            wells: 2,
            e_max: 50.0,
        })
        .unwrap();
        let (header, rows) = crate::record::parse_csv(&corner).unwrap();
        assert_eq!(header, vec!["energy", "degeneracy"]);
        // free bosons: ground state (1,1) at E = 2 is unique
        assert_eq!(rows[0][0].parse::<f64>().unwrap(), 2.0);
        assert_eq!(rows[0][1], "1");
    }
}
