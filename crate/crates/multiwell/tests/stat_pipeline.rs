//! End-to-end statistics pipeline checks: synthetic level sequences pushed
//! through unfolding, spacing extraction, and the Brody fit must recover
//! the generating parameter, and the fit must not depend on the energy
//! scale or origin of the input spectrum.

use multiwell::hilbert::HamiltonianParams;
use multiwell::spectrum::{compute_spectrum, convergence_filter, unfold};
use multiwell::stats::{fit_brody, fit_brody_with, sample_brody, spacings};

fn synthetic_levels(beta: f64, n: usize, seed: u64) -> Vec<f64> {
    let mut e = 0.0;
    sample_brody(beta, n, seed)
        .unwrap()
        .into_iter()
        .map(|s| {
            e += s;
            e
        })
        .collect()
}

#[test]
fn unfolding_pipeline_recovers_generating_beta() {
    for (beta, tol) in [(0.0, 0.05), (1.0, 0.05)] {
        let levels = synthetic_levels(beta, 20_000, 0x5EED + beta as u64);
        let unfolded = unfold(&levels, 2, None).unwrap();
        let sample = spacings(&unfolded).unwrap();
        let fit = fit_brody_with(&sample, 0, 0).unwrap();
        assert!(
            (fit.beta - beta).abs() < tol,
            "beta {beta}: pipeline returned {:.4}",
            fit.beta
        );
    }
}

fn window_beta(levels: &[f64], window: (f64, f64)) -> f64 {
    let unfolded = unfold(levels, 2, Some(window)).unwrap();
    let sample = spacings(&unfolded).unwrap();
    fit_brody(&sample).unwrap().beta
}

#[test]
fn brody_fit_ignores_energy_units_and_origin() {
    let params = HamiltonianParams::new(2, 2, 3.0, 5.0).unwrap();
    let mut base = compute_spectrum(&params, 1000.0, false).unwrap();
    let refined = compute_spectrum(&params, 1200.0, false).unwrap();
    let mask = convergence_filter(&base, &refined, 0.01).unwrap();
    base.set_converged_mask(mask).unwrap();
    let levels = base.converged_eigenvalues().to_vec();
    assert!(levels.len() > 150, "prefix too short: {}", levels.len());

    let beta = window_beta(&levels, (300.0, 700.0));

    // pure rescale: the staircase basis maps onto itself, the unfolded
    // spacings are identical up to round-off
    let scaled: Vec<f64> = levels.iter().map(|e| 3.7 * e).collect();
    let beta_scaled = window_beta(&scaled, (3.7 * 300.0, 3.7 * 700.0));
    assert!(
        (beta - beta_scaled).abs() < 1e-4,
        "rescale moved beta: {beta:.6} -> {beta_scaled:.6}"
    );

    // origin shift: the half-power staircase family is not closed under
    // shifts, so the fit only has to agree to statistical accuracy
    let shifted: Vec<f64> = levels.iter().map(|e| e + 11.0).collect();
    let beta_shifted = window_beta(&shifted, (311.0, 711.0));
    assert!(
        (beta - beta_shifted).abs() < 0.05,
        "shift moved beta: {beta:.4} -> {beta_shifted:.4}"
    );
}
