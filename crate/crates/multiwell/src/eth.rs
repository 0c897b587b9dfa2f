//! Off-diagonal matrix-element statistics of the kinetic-energy observable
//! in the energy eigenbasis: the kurtosis of the pooled off-diagonal set and
//! the Gaussianity ratio Γ(ω) = ⟨|T_mn|²⟩/⟨|T_mn|⟩², which equals π/2 when
//! the elements are Gaussian-distributed at fixed ω.

use thiserror::Error;

use crate::linalg::{matmul, ColMatrix, LinalgError};
use crate::spectrum::SpectralResult;

#[derive(Debug, Error)]
pub enum EthError {
    #[error("spectral result carries no eigenvectors")]
    MissingVectors,
    #[error("observable has {have} entries, basis has {need}")]
    ObservableLength { have: usize, need: usize },
    #[error("no eigenstates inside window {e_mid} ± {half_width}")]
    EmptyWindow { e_mid: f64, half_width: f64 },
    #[error(
        "window reaches energy {window_top} but convergence is certified only to \
         {certified_top}; rerun with E_cut ≥ {required_e_cut:.0}"
    )]
    Unconverged {
        window_top: f64,
        certified_top: f64,
        required_e_cut: f64,
    },
    #[error("{have} values where at least {need} are required")]
    TooFewValues { have: usize, need: usize },
    #[error("sample variance is zero")]
    ZeroVariance,
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Contiguous run of eigenstates with `E_m ∈ [E_mid − ΔE, E_mid + ΔE]`, all
/// certified converged.
#[derive(Debug, Clone, Copy)]
pub struct EnergyWindow {
    e_mid: f64,
    half_width: f64,
    first: usize,
    count: usize,
}

impl EnergyWindow {
    pub fn e_mid(&self) -> f64 {
        self.e_mid
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn indices(&self) -> std::ops::Range<usize> {
        self.first..self.first + self.count
    }

    /// Number of eigenstates in the window, η.
    pub fn eta(&self) -> usize {
        self.count
    }
}

/// Locates the eigenstates inside `[e_mid − ΔE, e_mid + ΔE]` and checks they
/// all lie in the certified-converged prefix of the spectrum.
pub fn window_indices(
    spectral: &SpectralResult,
    e_mid: f64,
    half_width: f64,
) -> Result<EnergyWindow, EthError> {
    let evs = spectral.eigenvalues();
    let lo = e_mid - half_width;
    let hi = e_mid + half_width;
    let first = evs.partition_point(|&e| e < lo);
    let end = evs.partition_point(|&e| e <= hi);
    if end <= first {
        return Err(EthError::EmptyWindow { e_mid, half_width });
    }
    let n_conv = spectral.n_converged();
    if end > n_conv {
        let certified_top = if n_conv > 0 { evs[n_conv - 1] } else { 0.0 };
        // the certified prefix ends near a fixed fraction of the cutoff, so
        // scale the cutoff by the coverage shortfall
        let required_e_cut = spectral.e_cut() * (hi / certified_top.max(1.0)).max(1.0) * 1.1;
        return Err(EthError::Unconverged {
            window_top: hi,
            certified_top,
            required_e_cut,
        });
    }
    Ok(EnergyWindow {
        e_mid,
        half_width,
        first,
        count: end - first,
    })
}

/// Rotates a Fock-diagonal observable into the eigenbasis, restricted to the
/// window: `O = V_winᵀ · diag(o) · V_win`, an `η × η` matrix.
pub fn observable_in_eigenbasis(
    spectral: &SpectralResult,
    observable: &[f64],
    window: &EnergyWindow,
) -> Result<ColMatrix, EthError> {
    let vectors = spectral.eigenvectors().ok_or(EthError::MissingVectors)?;
    if observable.len() != vectors.rows() {
        return Err(EthError::ObservableLength {
            have: observable.len(),
            need: vectors.rows(),
        });
    }
    let cols: Vec<usize> = window.indices().collect();
    let v_win = vectors.select_columns(&cols);
    let mut scaled = v_win.clone();
    for c in 0..scaled.cols() {
        for (x, &o) in scaled.column_mut(c).iter_mut().zip(observable) {
            *x *= o;
        }
    }
    Ok(matmul(&v_win, true, &scaled, false)?)
}

/// The distinct off-diagonal elements `m < n` of a windowed observable,
/// each tagged with its transition frequency `ω = |E_m − E_n|`.
#[derive(Debug, Clone)]
pub struct OffDiagSet {
    values: Vec<f64>,
    omegas: Vec<f64>,
}

impl OffDiagSet {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn omegas(&self) -> &[f64] {
        &self.omegas
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Collects the upper triangle of a windowed observable together with the
/// energies of the window states (length must equal the matrix size).
pub fn offdiag_set(o_eig: &ColMatrix, energies: &[f64]) -> Result<OffDiagSet, EthError> {
    let eta = o_eig.rows();
    if energies.len() != eta {
        return Err(EthError::ObservableLength {
            have: energies.len(),
            need: eta,
        });
    }
    let mut values = Vec::with_capacity(eta * (eta.saturating_sub(1)) / 2);
    let mut omegas = Vec::with_capacity(values.capacity());
    for n in 1..eta {
        for m in 0..n {
            values.push(o_eig.get(m, n));
            omegas.push((energies[n] - energies[m]).abs());
        }
    }
    Ok(OffDiagSet { values, omegas })
}

/// Population kurtosis `⟨(x−⟨x⟩)⁴⟩ / σ⁴`; equals 3 for Gaussian samples and
/// is bounded below by 1.
pub fn kurtosis(values: &[f64]) -> Result<f64, EthError> {
    if values.len() < 4 {
        return Err(EthError::TooFewValues {
            have: values.len(),
            need: 4,
        });
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let (mut m2, mut m4) = (0.0, 0.0);
    for &x in values {
        let d = x - mean;
        let d2 = d * d;
        m2 += d2;
        m4 += d2 * d2;
    }
    m2 /= n;
    m4 /= n;
    if m2 == 0.0 {
        return Err(EthError::ZeroVariance);
    }
    let k = m4 / (m2 * m2);
    debug_assert!(k >= 1.0 - 1e-12);
    Ok(k)
}

/// One ω bin of the Gaussianity ratio table. `gamma` is `None` when the bin
/// holds fewer than [`GAMMA_MIN_PAIRS`] pairs (or only zeros) and is flagged
/// rather than reported.
#[derive(Debug, Clone, Copy)]
pub struct GammaBin {
    pub omega_center: f64,
    pub gamma: Option<f64>,
    pub pairs: usize,
}

pub const GAMMA_MIN_PAIRS: usize = 20;

/// Γ(ω) = ⟨|T_mn|²⟩/⟨|T_mn|⟩² in uniform ω bins over `[0, omega_max]`.
pub fn gamma_ratio(offdiag: &OffDiagSet, n_bins: usize, omega_max: f64) -> Vec<GammaBin> {
    let width = omega_max / n_bins as f64;
    let mut sum_abs = vec![0.0f64; n_bins];
    let mut sum_sq = vec![0.0f64; n_bins];
    let mut counts = vec![0usize; n_bins];
    for (&v, &w) in offdiag.values().iter().zip(offdiag.omegas()) {
        if w >= omega_max {
            continue;
        }
        let b = ((w / width) as usize).min(n_bins - 1);
        sum_abs[b] += v.abs();
        sum_sq[b] += v * v;
        counts[b] += 1;
    }
    (0..n_bins)
        .map(|b| {
            let pairs = counts[b];
            let gamma = if pairs >= GAMMA_MIN_PAIRS && sum_abs[b] > 0.0 {
                let mean_abs = sum_abs[b] / pairs as f64;
                let mean_sq = sum_sq[b] / pairs as f64;
                Some(mean_sq / (mean_abs * mean_abs))
            } else {
                None
            };
            GammaBin {
                omega_center: (b as f64 + 0.5) * width,
                gamma,
                pairs,
            }
        })
        .collect()
}

/// Γ pooled over the whole off-diagonal set, for coherence checks against
/// the kurtosis.
pub fn pooled_gamma(offdiag: &OffDiagSet) -> Result<f64, EthError> {
    if offdiag.len() < GAMMA_MIN_PAIRS {
        return Err(EthError::TooFewValues {
            have: offdiag.len(),
            need: GAMMA_MIN_PAIRS,
        });
    }
    let n = offdiag.len() as f64;
    let mean_abs = offdiag.values().iter().map(|v| v.abs()).sum::<f64>() / n;
    if mean_abs == 0.0 {
        return Err(EthError::ZeroVariance);
    }
    let mean_sq = offdiag.values().iter().map(|v| v * v).sum::<f64>() / n;
    Ok(mean_sq / (mean_abs * mean_abs))
}
