//! Survival probability of a uniform-window initial state and the analytic
//! correlation-hole benchmark: `S_P(t) = |Σ_n |C_n|² e^{−iE_n t}|²` for a
//! state spread evenly over the eigenstates of an energy window, its moving
//! logarithmic time average, and the closed-form curve built from the
//! two-level form factor `b2`.

use rayon::prelude::*;
use thiserror::Error;

use crate::eth::{window_indices, EnergyWindow, EthError};
use crate::spectrum::SpectralResult;

#[derive(Debug, Error)]
pub enum DynamicsError {
    #[error("window holds {eta} states, need at least 2")]
    WindowTooSmall { eta: usize },
    #[error(transparent)]
    Window(#[from] EthError),
}

/// Initial state with `|C_n|² = 1/η` on every eigenstate of the window and
/// zero phases. Only the probabilities enter the survival probability, so
/// the phase choice is inert.
#[derive(Debug, Clone)]
pub struct WindowState {
    window: EnergyWindow,
    probs: Vec<f64>,
}

impl WindowState {
    pub fn window(&self) -> &EnergyWindow {
        &self.window
    }

    pub fn eta(&self) -> usize {
        self.probs.len()
    }

    /// `|C_n|²` per window state.
    pub fn probabilities(&self) -> &[f64] {
        &self.probs
    }

    /// Real positive amplitudes `C_n`.
    pub fn amplitudes(&self) -> Vec<f64> {
        self.probs.iter().map(|p| p.sqrt()).collect()
    }
}

/// Builds the uniform window state on `[E_mid − ΔE, E_mid + ΔE]`. The window
/// must be converged (same rule as the ETH diagnostics).
pub fn window_state(
    spectral: &SpectralResult,
    e_mid: f64,
    half_width: f64,
) -> Result<WindowState, DynamicsError> {
    let window = window_indices(spectral, e_mid, half_width)?;
    let eta = window.eta();
    if eta < 2 {
        return Err(DynamicsError::WindowTooSmall { eta });
    }
    Ok(WindowState {
        window,
        probs: vec![1.0 / eta as f64; eta],
    })
}

/// A computed survival-probability curve on a log-spaced grid, with the
/// long-time plateau `S_∞` and optional smoothed/analytic companions.
#[derive(Debug, Clone)]
pub struct SurvivalCurve {
    times: Vec<f64>,
    values: Vec<f64>,
    s_inf: f64,
    smoothed: Option<Vec<f64>>,
    analytic: Option<Vec<f64>>,
}

impl SurvivalCurve {
    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Exact long-time average, degeneracy-aware.
    pub fn s_inf(&self) -> f64 {
        self.s_inf
    }

    pub fn smoothed(&self) -> Option<&[f64]> {
        self.smoothed.as_deref()
    }

    pub fn analytic(&self) -> Option<&[f64]> {
        self.analytic.as_deref()
    }

    pub fn set_smoothed(&mut self, smoothed: Vec<f64>) {
        assert_eq!(smoothed.len(), self.times.len());
        self.smoothed = Some(smoothed);
    }

    pub fn set_analytic(&mut self, analytic: Vec<f64>) {
        assert_eq!(analytic.len(), self.times.len());
        self.analytic = Some(analytic);
    }
}

/// Default time grid: 2000 log-spaced points over `log₁₀ t ∈ [−3, 2]`.
pub fn log_time_grid(log10_lo: f64, log10_hi: f64, n: usize) -> Vec<f64> {
    assert!(n >= 2);
    (0..n)
        .map(|i| 10f64.powf(log10_lo + (log10_hi - log10_lo) * i as f64 / (n - 1) as f64))
        .collect()
}

pub const DEFAULT_GRID: (f64, f64, usize) = (-3.0, 2.0, 2000);

/// Tolerance under which two window eigenvalues count as degenerate for the
/// long-time average.
pub const DEGENERACY_TOL: f64 = 1e-9;

fn long_time_average(probs: &[f64], energies: &[f64]) -> f64 {
    // group equal energies, then S_inf = Σ_groups (Σ_n p_n)²
    let mut s_inf = 0.0;
    let mut i = 0;
    while i < energies.len() {
        let mut group_p = probs[i];
        let mut j = i + 1;
        while j < energies.len() && energies[j] - energies[j - 1] <= DEGENERACY_TOL {
            group_p += probs[j];
            j += 1;
        }
        s_inf += group_p * group_p;
        i = j;
    }
    s_inf
}

/// Survival probability of `state` on `times`. `eigenvalues` is the full
/// sorted spectrum the state's window indexes into.
pub fn survival_probability(
    state: &WindowState,
    eigenvalues: &[f64],
    times: &[f64],
) -> SurvivalCurve {
    let energies: Vec<f64> = state
        .window
        .indices()
        .map(|i| eigenvalues[i])
        .collect();
    let probs = &state.probs;
    assert!(times.iter().all(|&t| t >= 0.0), "times must be non-negative");

    let norm: f64 = probs.iter().sum();
    let norm_sq = norm * norm;
    let values: Vec<f64> = times
        .par_iter()
        .map(|&t| {
            let (mut re, mut im) = (0.0f64, 0.0f64);
            for (&p, &e) in probs.iter().zip(&energies) {
                let (s, c) = (e * t).sin_cos();
                re += p * c;
                im -= p * s;
            }
            // at t = 0 the numerator is norm_sq exactly, so S_P(0) = 1.0
            ((re * re + im * im) / norm_sq).clamp(0.0, 1.0)
        })
        .collect();

    SurvivalCurve {
        times: times.to_vec(),
        values,
        s_inf: long_time_average(probs, &energies),
        smoothed: None,
        analytic: None,
    }
}

/// Moving average on the logarithmic axis: each point becomes the mean of
/// all samples with `|log₁₀ t_j − log₁₀ t_i| ≤ half_width`. The paper's
/// smoothing uses `half_width = 0.02`.
pub fn moving_log_average(times: &[f64], values: &[f64], half_width: f64) -> Vec<f64> {
    moving_log_average_with_se(times, values, half_width).0
}

/// Moving log average plus the standard error of each window mean.
pub fn moving_log_average_with_se(
    times: &[f64],
    values: &[f64],
    half_width: f64,
) -> (Vec<f64>, Vec<f64>) {
    assert_eq!(times.len(), values.len());
    let logs: Vec<f64> = times.iter().map(|&t| t.log10()).collect();
    let n = times.len();
    let mut means = Vec::with_capacity(n);
    let mut ses = Vec::with_capacity(n);
    let mut lo = 0usize;
    let mut hi = 0usize;
    for i in 0..n {
        while lo < n && logs[lo] < logs[i] - half_width {
            lo += 1;
        }
        if hi < lo {
            hi = lo;
        }
        while hi < n && logs[hi] <= logs[i] + half_width {
            hi += 1;
        }
        let m = (hi - lo) as f64;
        let mean = values[lo..hi].iter().sum::<f64>() / m;
        let var = values[lo..hi]
            .iter()
            .map(|&v| (v - mean) * (v - mean))
            .sum::<f64>()
            / m;
        means.push(mean);
        ses.push((var / m).sqrt());
    }
    (means, ses)
}

/// Two-level spectral form factor
/// `b2(t̄) = [1 − 2t̄ + t̄ ln(2t̄+1)]` for `t̄ ≤ 1` and
/// `[t̄ ln((2t̄+1)/(2t̄−1)) − 1]` beyond; continuous at `t̄ = 1` with value
/// `ln 3 − 1` and decaying as `1/(12 t̄²)`.
pub fn b2(t_bar: f64) -> f64 {
    assert!(t_bar >= 0.0);
    if t_bar <= 1.0 {
        1.0 - 2.0 * t_bar + t_bar * (2.0 * t_bar + 1.0).ln()
    } else {
        t_bar * ((2.0 / (2.0 * t_bar - 1.0)).ln_1p()) - 1.0
    }
}

/// Closed-form survival probability for a uniform window state in a
/// chaotic spectrum:
/// `S_P(t) = (1−S_∞)/(η−1) · [η sinc²(ΔE t) − b2(ΔE t/(π η))] + S_∞`.
pub fn analytic_survival(t: f64, eta: usize, half_width: f64, s_inf: f64) -> f64 {
    assert!(eta >= 2);
    assert!(half_width > 0.0);
    let x = half_width * t;
    if x == 0.0 {
        return 1.0;
    }
    let sinc_sq = {
        let s = x.sin() / x;
        s * s
    };
    let eta_f = eta as f64;
    (1.0 - s_inf) / (eta_f - 1.0)
        * (eta_f * sinc_sq - b2(x / (std::f64::consts::PI * eta_f)))
        + s_inf
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::HamiltonianParams;
    use crate::spectrum::{compute_spectrum, convergence_filter};
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn converged(n: u32, w: u32, tau: f64, gamma: f64, e_cut: f64) -> SpectralResult {
        let p = HamiltonianParams::new(n, w, tau, gamma).unwrap();
        let mut base = compute_spectrum(&p, e_cut, false).unwrap();
        let refined = compute_spectrum(&p, 1.5 * e_cut, false).unwrap();
        let mask = convergence_filter(&base, &refined, 1e-2).unwrap();
        base.set_converged_mask(mask).unwrap();
        base
    }

    #[test]
    fn window_state_is_uniform_and_normalized() {
        let r = converged(1, 2, 0.0, 0.0, 400.0);
        // even single-particle levels 1, 9, 25, 49: window [0, 50]
        let st = window_state(&r, 25.0, 25.0).unwrap();
        assert_eq!(st.eta(), 4);
        for &p in st.probabilities() {
            assert_abs_diff_eq!(p, 0.25, epsilon = 1e-15);
        }
        let total: f64 = st.probabilities().iter().sum();
        assert_abs_diff_eq!(total, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn survival_at_zero_is_exactly_one() {
        let r = converged(2, 2, 3.0, 2.0, 200.0);
        let st = window_state(&r, 40.0, 20.0).unwrap();
        let times = log_time_grid(-3.0, 2.0, 50);
        let mut with_zero = vec![0.0];
        with_zero.extend(times);
        let curve = survival_probability(&st, r.eigenvalues(), &with_zero);
        assert_eq!(curve.values()[0], 1.0);
        for &v in curve.values() {
            assert!((0.0..=1.0).contains(&v));
        }
    }

    #[test]
    fn two_level_state_oscillates_as_cosine_squared() {
        let r = converged(1, 2, 0.0, 0.0, 400.0);
        // levels 1 and 9: gap 8
        let st = window_state(&r, 5.0, 4.5).unwrap();
        assert_eq!(st.eta(), 2);
        let times: Vec<f64> = (0..200).map(|i| i as f64 * 0.01).collect();
        let curve = survival_probability(&st, r.eigenvalues(), &times);
        for (&t, &v) in times.iter().zip(curve.values()) {
            let expect = (4.0 * t).cos().powi(2);
            assert_abs_diff_eq!(v, expect, epsilon = 1e-12);
        }
    }

    #[test]
    fn long_time_average_hits_s_inf() {
        let r = converged(2, 2, 3.0, 2.0, 260.0);
        let st = window_state(&r, 40.0, 25.0).unwrap();
        let times = log_time_grid(3.0, 4.0, 4000);
        let curve = survival_probability(&st, r.eigenvalues(), &times);
        let avg: f64 = curve.values().iter().sum::<f64>() / curve.values().len() as f64;
        assert_relative_eq!(avg, curve.s_inf(), max_relative = 0.02);
        // non-degenerate window: S_inf equals the uniform-case 1/η
        assert_relative_eq!(curve.s_inf(), 1.0 / st.eta() as f64, epsilon = 1e-12);
    }

    #[test]
    fn degenerate_levels_raise_the_plateau() {
        // free bosons: plenty of exact degeneracies in the N=2 spectrum
        let r = {
            let p = HamiltonianParams::new(2, 2, 0.0, 0.0).unwrap();
            let mut base = compute_spectrum(&p, 300.0, false).unwrap();
            let n = base.dim();
            base.set_converged_mask(vec![true; n]).unwrap();
            base
        };
        let st = window_state(&r, 120.0, 60.0).unwrap();
        let curve = survival_probability(&st, r.eigenvalues(), &[0.0]);
        let naive: f64 = st.probabilities().iter().map(|p| p * p).sum();
        assert!(
            curve.s_inf() > 1.1 * naive,
            "plateau {} vs naive {naive}",
            curve.s_inf()
        );
        // cross-check by direct degeneracy counting in the window
        let energies = &r.eigenvalues()[st.window().indices()];
        let mut expect = 0.0;
        let mut i = 0;
        while i < energies.len() {
            let mut g = 0usize;
            let mut j = i;
            while j < energies.len() && (energies[j] - energies[i]).abs() <= DEGENERACY_TOL {
                g += 1;
                j += 1;
            }
            expect += (g as f64 / st.eta() as f64).powi(2);
            i = j;
        }
        assert_abs_diff_eq!(curve.s_inf(), expect, epsilon = 1e-12);
    }

    #[test]
    fn moving_average_leaves_constants_and_damps_oscillations() {
        let times = log_time_grid(-1.0, 3.0, 12_000);
        let constant = vec![0.42; times.len()];
        let sm = moving_log_average(&times, &constant, 0.02);
        for &v in &sm {
            assert_abs_diff_eq!(v, 0.42, epsilon = 1e-14);
        }
        // pure oscillation cos²(ωt/2) smooths toward 1/2 once many periods
        // fit inside the log window
        let omega = 50.0;
        let osc: Vec<f64> = times.iter().map(|&t| (omega * t / 2.0).cos().powi(2)).collect();
        let sm = moving_log_average(&times, &osc, 0.02);
        // interior points only: at the grid edge the window is one-sided
        // and holds too few periods to average out
        let tail: Vec<f64> = times
            .iter()
            .zip(&sm)
            .filter(|(&t, _)| t > 100.0 && t < 10f64.powf(3.0 - 0.04))
            .map(|(_, &v)| v)
            .collect();
        assert!(tail.len() > 100);
        for &v in &tail {
            assert!((0.3..=0.7).contains(&v), "smoothed oscillation {v}");
        }
    }

    #[test]
    fn single_point_window_returns_the_point() {
        let times = vec![1.0, 10.0, 100.0];
        let values = vec![0.1, 0.9, 0.4];
        let sm = moving_log_average(&times, &values, 0.02);
        assert_eq!(sm, values);
    }

    #[test]
    fn b2_endpoints_and_asymptotics() {
        assert_eq!(b2(0.0), 1.0);
        let ln3m1 = 3f64.ln() - 1.0;
        assert_abs_diff_eq!(b2(1.0), ln3m1, epsilon = 1e-14);
        // continuity across the branch point
        let eps = 1e-7;
        assert!((b2(1.0 - eps) - b2(1.0 + eps)).abs() < 1e-6);
        // large-argument decay 1/(12 t̄²)
        let t = 1e3;
        let asymptotic = 1.0 / (12.0 * t * t);
        assert!(b2(t) < 1e-6);
        assert_relative_eq!(b2(t), asymptotic, max_relative = 1e-4);
    }

    #[test]
    fn analytic_survival_limits_and_hole() {
        assert_eq!(analytic_survival(0.0, 100, 100.0, 0.01), 1.0);
        let late = analytic_survival(1e6, 100, 100.0, 0.01);
        assert_abs_diff_eq!(late, 0.01, epsilon = 1e-6);
        // correlation hole: some time where the curve dips below S_inf
        let times = log_time_grid(-3.0, 3.0, 4000);
        let min = times
            .iter()
            .map(|&t| analytic_survival(t, 100, 100.0, 0.01))
            .fold(f64::INFINITY, f64::min);
        assert!(min < 0.01, "no hole: min {min}");
    }

    #[test]
    fn short_time_decay_matches_the_sinc_term() {
        let r = converged(2, 2, 4.0, 3.0, 260.0);
        let de = 25.0;
        let st = window_state(&r, 45.0, de).unwrap();
        let curve = survival_probability(
            &st,
            r.eigenvalues(),
            &log_time_grid(-3.0, (0.1 / de).log10(), 200),
        );
        for (&t, &v) in curve.times().iter().zip(curve.values()) {
            let a = analytic_survival(t, st.eta(), de, curve.s_inf());
            assert!(
                (v - a).abs() <= 0.01 * a,
                "t={t}: numeric {v} vs analytic {a}"
            );
        }
    }
}
