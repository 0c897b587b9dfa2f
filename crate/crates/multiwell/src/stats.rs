//! Level-spacing statistics: nearest-neighbor spacings of an unfolded
//! spectrum and maximum-likelihood fits of the Brody distribution
//! `P_β(s) = (β+1) b s^β exp(−b s^{β+1})`, which interpolates between
//! Poisson (β=0) and Wigner-Dyson (β=1).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::spectrum::UnfoldedSpectrum;

#[derive(Debug, Error)]
pub enum StatsError {
    #[error("{have} spacings where at least {need} are required")]
    TooFewSpacings { have: usize, need: usize },
    #[error("spacing {index} is negative ({value})")]
    NegativeSpacing { index: usize, value: f64 },
    #[error("sample has no spacings above the censoring floor")]
    DegenerateSample,
    #[error("beta = {0} is outside (-1, inf)")]
    BetaOutOfRange(f64),
    #[error("histogram fit needs {need} occupied bins, found {have}")]
    TooFewBins { have: usize, need: usize },
}

/// Nearest-neighbor spacings in unfolded units, with the energy window they
/// came from when known. Exact zeros from degeneracies are retained: the
/// spike at `s = 0` is part of the physics of the integrable corners.
#[derive(Debug, Clone)]
pub struct SpacingSample {
    spacings: Vec<f64>,
    window: Option<(f64, f64)>,
}

impl SpacingSample {
    /// Wraps raw spacings (synthetic samples, external data).
    pub fn from_raw(spacings: Vec<f64>) -> Result<Self, StatsError> {
        if spacings.len() < 2 {
            return Err(StatsError::TooFewSpacings {
                have: spacings.len(),
                need: 2,
            });
        }
        if let Some((index, &value)) = spacings
            .iter()
            .enumerate()
            .find(|(_, &s)| !(s >= 0.0) || !s.is_finite())
        {
            return Err(StatsError::NegativeSpacing { index, value });
        }
        Ok(SpacingSample {
            spacings,
            window: None,
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.spacings
    }

    pub fn len(&self) -> usize {
        self.spacings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spacings.is_empty()
    }

    pub fn mean(&self) -> f64 {
        self.spacings.iter().sum::<f64>() / self.spacings.len() as f64
    }

    /// Energy window (original units) of the source spectrum, when built
    /// from one.
    pub fn window(&self) -> Option<(f64, f64)> {
        self.window
    }
}

/// Consecutive differences of the unfolded levels.
pub fn spacings(unfolded: &UnfoldedSpectrum) -> Result<SpacingSample, StatsError> {
    let levels = unfolded.levels();
    if levels.len() < 2 {
        return Err(StatsError::TooFewSpacings {
            have: levels.len().saturating_sub(1),
            need: 1,
        });
    }
    let spacings = levels.windows(2).map(|p| p[1] - p[0]).collect();
    Ok(SpacingSample {
        spacings,
        window: Some(unfolded.window()),
    })
}

/// Lanczos approximation of Γ(x) for x > 0, good to ~1e-14 relative.
fn gamma_fn(x: f64) -> f64 {
    const G: f64 = 7.0;
    const COEF: [f64; 9] = [
        0.999_999_999_999_809_93,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_13,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_571_6e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        // reflection for completeness; fit arguments stay above 1
        std::f64::consts::PI / ((std::f64::consts::PI * x).sin() * gamma_fn(1.0 - x))
    } else {
        let x = x - 1.0;
        let mut a = COEF[0];
        let t = x + G + 0.5;
        for (i, &c) in COEF.iter().enumerate().skip(1) {
            a += c / (x + i as f64);
        }
        (2.0 * std::f64::consts::PI).sqrt() * t.powf(x + 0.5) * (-t).exp() * a
    }
}

/// Brody normalization `b = Γ((β+2)/(β+1))^{β+1}`; `b(0) = 1` (Poisson),
/// `b(1) = π/4` (Wigner-Dyson).
pub fn brody_b(beta: f64) -> Result<f64, StatsError> {
    if !(beta > -1.0) || !beta.is_finite() {
        return Err(StatsError::BetaOutOfRange(beta));
    }
    Ok(gamma_fn((beta + 2.0) / (beta + 1.0)).powf(beta + 1.0))
}

/// Brody probability density at spacing `s ≥ 0`.
pub fn brody_pdf(s: f64, beta: f64) -> Result<f64, StatsError> {
    let b = brody_b(beta)?;
    if s < 0.0 {
        return Ok(0.0);
    }
    if s == 0.0 {
        return Ok(match beta.partial_cmp(&0.0) {
            Some(std::cmp::Ordering::Greater) => 0.0,
            Some(std::cmp::Ordering::Equal) => b,
            _ => f64::INFINITY,
        });
    }
    Ok((beta + 1.0) * b * s.powf(beta) * (-b * s.powf(beta + 1.0)).exp())
}

/// Brody cumulative distribution `F(s) = 1 − exp(−b s^{β+1})`.
pub fn brody_cdf(s: f64, beta: f64) -> Result<f64, StatsError> {
    let b = brody_b(beta)?;
    if s <= 0.0 {
        return Ok(0.0);
    }
    Ok(1.0 - (-b * s.powf(beta + 1.0)).exp())
}

/// Draws `n` spacings from the Brody distribution by inverting the CDF:
/// `s = (−ln(1−u)/b)^{1/(β+1)}`.
pub fn sample_brody(beta: f64, n: usize, seed: u64) -> Result<Vec<f64>, StatsError> {
    let b = brody_b(beta)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..n)
        .map(|_| {
            let u: f64 = rng.gen_range(0.0..1.0);
            (-(1.0 - u).ln() / b).powf(1.0 / (beta + 1.0))
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FitMethod {
    /// Censored maximum likelihood over the closed-form Brody family.
    MaxLikelihood,
    /// Least squares against a binned empirical density.
    Histogram,
}

/// A fitted Brody parameter with its normalization and uncertainty.
#[derive(Debug, Clone)]
pub struct BrodyFit {
    pub beta: f64,
    pub b: f64,
    /// Bootstrap standard error for the MLE; RMS residual for the
    /// histogram fit.
    pub fit_error: f64,
    pub method: FitMethod,
}

/// Fit domain: the open-ended regular region below, Wigner-Dyson and a
/// margin above.
pub const BETA_MIN: f64 = -0.9;
pub const BETA_MAX: f64 = 1.5;

/// Spacings below this floor (unfolded units) are treated as censored and
/// enter the likelihood through the CDF mass of `[0, floor]`, keeping exact
/// degeneracies informative without a divergent log-density.
pub const CENSOR_FLOOR: f64 = 1e-8;

fn log_likelihood(lns: &[f64], n_censored: usize, beta: f64) -> f64 {
    let b = match brody_b(beta) {
        Ok(b) => b,
        Err(_) => return f64::NEG_INFINITY,
    };
    let bp1 = beta + 1.0;
    let mut ll = lns.len() as f64 * (bp1.ln() + b.ln());
    for &l in lns {
        ll += beta * l - b * (bp1 * l).exp();
    }
    if n_censored > 0 {
        let mass = 1.0 - (-b * CENSOR_FLOOR.powf(bp1)).exp();
        ll += n_censored as f64 * mass.max(f64::MIN_POSITIVE).ln();
    }
    ll
}

/// Coarse grid scan followed by golden-section refinement of a unimodal
/// bracket; returns the argmax.
fn maximize_beta(mut f: impl FnMut(f64) -> f64) -> f64 {
    let coarse = 49;
    let mut best = (BETA_MIN + 1e-6, f64::NEG_INFINITY);
    for i in 0..=coarse {
        let beta = BETA_MIN + 1e-6 + (BETA_MAX - BETA_MIN - 1e-6) * i as f64 / coarse as f64;
        let v = f(beta);
        if v > best.1 {
            best = (beta, v);
        }
    }
    let step = (BETA_MAX - BETA_MIN) / coarse as f64;
    let (mut lo, mut hi) = (
        (best.0 - step).max(BETA_MIN + 1e-6),
        (best.0 + step).min(BETA_MAX),
    );
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - phi * (hi - lo);
    let mut x2 = lo + phi * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..60 {
        if hi - lo < 1e-6 {
            break;
        }
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + phi * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - phi * (hi - lo);
            f1 = f(x1);
        }
    }
    0.5 * (lo + hi)
}

fn mle_beta(sample: &[f64]) -> Result<f64, StatsError> {
    let lns: Vec<f64> = sample
        .iter()
        .filter(|&&s| s >= CENSOR_FLOOR)
        .map(|&s| s.ln())
        .collect();
    let n_censored = sample.len() - lns.len();
    if lns.is_empty() {
        return Err(StatsError::DegenerateSample);
    }
    Ok(maximize_beta(|beta| log_likelihood(&lns, n_censored, beta)))
}

/// Maximum-likelihood Brody fit with the default 200 bootstrap resamples.
pub fn fit_brody(sample: &SpacingSample) -> Result<BrodyFit, StatsError> {
    fit_brody_with(sample, 200, 0xB20D1)
}

/// Maximum-likelihood Brody fit; `resamples` bootstrap refits (seeded, so
/// the reported error is deterministic) give the standard error.
pub fn fit_brody_with(
    sample: &SpacingSample,
    resamples: usize,
    seed: u64,
) -> Result<BrodyFit, StatsError> {
    let n = sample.len();
    if n < 4 {
        return Err(StatsError::TooFewSpacings { have: n, need: 4 });
    }
    let beta = mle_beta(sample.values())?;

    let fit_error = if resamples == 0 {
        f64::NAN
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut betas = Vec::with_capacity(resamples);
        let mut draw = vec![0.0f64; n];
        for _ in 0..resamples {
            for slot in draw.iter_mut() {
                *slot = sample.values()[rng.gen_range(0..n)];
            }
            if let Ok(b) = mle_beta(&draw) {
                betas.push(b);
            }
        }
        let m = betas.iter().sum::<f64>() / betas.len() as f64;
        (betas.iter().map(|b| (b - m) * (b - m)).sum::<f64>() / betas.len() as f64).sqrt()
    };

    Ok(BrodyFit {
        beta,
        b: brody_b(beta)?,
        fit_error,
        method: FitMethod::MaxLikelihood,
    })
}

/// Least-squares Brody fit on a binned density, as a cross-check on the MLE.
/// Bins of equal width cover `[0, max(4, 99.5th percentile)]`; `fit_error`
/// is the RMS density residual at the optimum.
pub fn fit_brody_histogram(sample: &SpacingSample, n_bins: usize) -> Result<BrodyFit, StatsError> {
    let n = sample.len();
    if n < 20 {
        return Err(StatsError::TooFewSpacings { have: n, need: 20 });
    }
    let mut sorted = sample.values().to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let hi = sorted[((n as f64 * 0.995) as usize).min(n - 1)].max(4.0);
    let width = hi / n_bins as f64;
    let mut counts = vec![0usize; n_bins];
    let mut used = 0usize;
    for &s in sample.values() {
        if s < hi {
            counts[((s / width) as usize).min(n_bins - 1)] += 1;
            used += 1;
        }
    }
    if used < 20 {
        return Err(StatsError::TooFewBins {
            have: used,
            need: 20,
        });
    }
    let density: Vec<(f64, f64)> = counts
        .iter()
        .enumerate()
        .map(|(i, &c)| {
            (
                (i as f64 + 0.5) * width,
                c as f64 / (used as f64 * width),
            )
        })
        .collect();
    let sse = |beta: f64| -> f64 {
        density
            .iter()
            .map(|&(s, d)| {
                let p = brody_pdf(s, beta).unwrap_or(f64::INFINITY);
                (p - d) * (p - d)
            })
            .sum()
    };
    let beta = maximize_beta(|b| -sse(b));
    let rms = (sse(beta) / density.len() as f64).sqrt();
    Ok(BrodyFit {
        beta,
        b: brody_b(beta)?,
        fit_error: rms,
        method: FitMethod::Histogram,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    #[test]
    fn brody_b_poisson_and_wigner() {
        assert_relative_eq!(brody_b(0.0).unwrap(), 1.0, epsilon = 1e-13);
        assert_relative_eq!(
            brody_b(1.0).unwrap(),
            std::f64::consts::PI / 4.0,
            epsilon = 1e-13
        );
    }

    #[test]
    fn brody_pdf_matches_poisson_and_wigner_pointwise() {
        let pi = std::f64::consts::PI;
        for i in 0..200 {
            let s = i as f64 * 0.025;
            let poisson = (-s).exp();
            assert_abs_diff_eq!(brody_pdf(s, 0.0).unwrap(), poisson, epsilon = 1e-14);
            let wd = pi / 2.0 * s * (-pi * s * s / 4.0).exp();
            assert_abs_diff_eq!(brody_pdf(s, 1.0).unwrap(), wd, epsilon = 1e-14);
        }
    }

    #[test]
    fn brody_pdf_normalized_with_unit_mean() {
        // Simpson quadrature of P and s P with s = x², which regularizes the
        // s→0 power singularity for beta < 0
        for &beta in &[-0.5, 0.3, 1.0] {
            let h = 2e-4;
            let steps = 70_000usize;
            let mut norm = 0.0;
            let mut mean = 0.0;
            for k in 0..=steps {
                let x = k as f64 * h;
                let w = if k == 0 || k == steps {
                    1.0
                } else if k % 2 == 1 {
                    4.0
                } else {
                    2.0
                };
                let g = if k == 0 {
                    // limit of 2 x P(x²): finite only at beta = -1/2
                    if beta == -0.5 {
                        brody_b(beta).unwrap()
                    } else {
                        0.0
                    }
                } else {
                    2.0 * x * brody_pdf(x * x, beta).unwrap()
                };
                norm += w * g;
                mean += w * x * x * g;
            }
            norm *= h / 3.0;
            mean *= h / 3.0;
            assert_abs_diff_eq!(norm, 1.0, epsilon = 1e-5);
            assert_abs_diff_eq!(mean, 1.0, epsilon = 1e-5);
        }
    }

    #[test]
    fn brody_pdf_rejects_bad_beta() {
        assert!(brody_pdf(1.0, -1.0).is_err());
        assert!(brody_pdf(1.0, -1.5).is_err());
    }

    #[test]
    fn spacing_sample_keeps_zeros_and_validates() {
        let s = SpacingSample::from_raw(vec![1.0, 0.0, 2.0]).unwrap();
        assert_eq!(s.values(), &[1.0, 0.0, 2.0]);
        assert!(SpacingSample::from_raw(vec![1.0, -0.5]).is_err());
    }

    #[test]
    fn mle_recovers_poisson_and_wigner() {
        for &(beta_true, tol) in &[(0.0, 0.02), (1.0, 0.02), (0.5, 0.02)] {
            let draws = sample_brody(beta_true, 40_000, 7 + beta_true.to_bits()).unwrap();
            let sample = SpacingSample::from_raw(draws).unwrap();
            let fit = fit_brody_with(&sample, 0, 0).unwrap();
            assert!(
                (fit.beta - beta_true).abs() < tol,
                "beta_true {beta_true}, fitted {}",
                fit.beta
            );
        }
    }

    #[test]
    fn mle_recovers_negative_beta() {
        let draws = sample_brody(-0.3, 40_000, 99).unwrap();
        let sample = SpacingSample::from_raw(draws).unwrap();
        let fit = fit_brody_with(&sample, 0, 0).unwrap();
        assert!((fit.beta + 0.3).abs() < 0.03, "fitted {}", fit.beta);
    }

    #[test]
    fn bootstrap_error_brackets_truth() {
        let draws = sample_brody(0.5, 5_000, 1234).unwrap();
        let sample = SpacingSample::from_raw(draws).unwrap();
        let fit = fit_brody_with(&sample, 60, 42).unwrap();
        assert!(fit.fit_error > 0.0 && fit.fit_error < 0.2);
        assert!(
            (fit.beta - 0.5).abs() < 3.0 * fit.fit_error + 0.02,
            "beta {} err {}",
            fit.beta,
            fit.fit_error
        );
        // stored normalization is consistent with the formula
        assert_relative_eq!(fit.b, brody_b(fit.beta).unwrap(), epsilon = 1e-12);
    }

    #[test]
    fn histogram_fit_agrees_with_mle() {
        let draws = sample_brody(0.8, 30_000, 5).unwrap();
        let sample = SpacingSample::from_raw(draws).unwrap();
        let mle = fit_brody_with(&sample, 40, 11).unwrap();
        let hist = fit_brody_histogram(&sample, 40).unwrap();
        assert!(
            (mle.beta - hist.beta).abs() < 3.0 * mle.fit_error.max(0.01) + 0.03,
            "mle {} vs hist {}",
            mle.beta,
            hist.beta
        );
    }

    #[test]
    fn degenerate_sample_is_an_error() {
        let zeros = SpacingSample::from_raw(vec![0.0; 50]).unwrap();
        assert!(matches!(
            fit_brody_with(&zeros, 0, 0),
            Err(StatsError::DegenerateSample)
        ));
    }

    #[test]
    fn zeros_pull_beta_negative() {
        // half exact degeneracies, half Poisson: fit should sit well below 0
        let mut draws = sample_brody(0.0, 2_000, 3).unwrap();
        draws.extend(std::iter::repeat(0.0).take(2_000));
        let sample = SpacingSample::from_raw(draws).unwrap();
        let fit = fit_brody_with(&sample, 0, 0).unwrap();
        assert!(fit.beta < -0.5, "beta {}", fit.beta);
    }
}
