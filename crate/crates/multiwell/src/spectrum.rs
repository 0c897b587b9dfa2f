//! Dense spectra of the multi-well Hamiltonian and their post-processing:
//! diagonalization, convergence certification against a larger cutoff,
//! staircase unfolding, the smooth density-of-states model, and an exact
//! binary on-disk cache keyed by the run parameters.

use std::fs;
use std::io::{Read as IoRead, Write as IoWrite};
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::hilbert::{
    assemble_hamiltonian, build_basis, HamiltonianParams, HilbertError, ParityFilter, SymMatrix,
};
use crate::linalg::{symmetric_eigen, ColMatrix, LinalgError};

#[derive(Debug, Error)]
pub enum SpectrumError {
    #[error(transparent)]
    Hilbert(#[from] HilbertError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("spectral results have different parameters: {0:?} vs {1:?}")]
    ParamMismatch(HamiltonianParams, HamiltonianParams),
    #[error("refined cutoff {refined} is below 1.2 x base cutoff {base}")]
    CutoffRatio { base: f64, refined: f64 },
    #[error("{have} levels where at least {need} are required")]
    TooFewLevels { have: usize, need: usize },
    #[error("staircase fit is not monotone over the data: {0}")]
    NonMonotoneFit(String),
    #[error("level {index} is not finite or out of order")]
    BadLevel { index: usize },
    #[error("convergence mask length {mask} does not match spectrum size {dim}")]
    MaskLength { mask: usize, dim: usize },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("cache file {path}: {reason}")]
    CacheFormat { path: PathBuf, reason: String },
}

/// Eigenvalues of one `(params, E_cut)` run in the positive-parity sector,
/// optionally with eigenvectors, plus a per-level convergence mask. The mask
/// starts all-false; [`convergence_filter`] fills it from a second run at a
/// larger cutoff.
#[derive(Debug, Clone)]
pub struct SpectralResult {
    params: HamiltonianParams,
    e_cut: f64,
    eigenvalues: Vec<f64>,
    eigenvectors: Option<ColMatrix>,
    converged: Vec<bool>,
}

impl SpectralResult {
    pub fn params(&self) -> &HamiltonianParams {
        &self.params
    }

    pub fn e_cut(&self) -> f64 {
        self.e_cut
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn eigenvectors(&self) -> Option<&ColMatrix> {
        self.eigenvectors.as_ref()
    }

    pub fn converged_mask(&self) -> &[bool] {
        &self.converged
    }

    /// Number of leading levels marked converged.
    pub fn n_converged(&self) -> usize {
        self.converged.iter().take_while(|&&c| c).count()
    }

    /// The certified prefix of the spectrum.
    pub fn converged_eigenvalues(&self) -> &[f64] {
        &self.eigenvalues[..self.n_converged()]
    }

    pub fn set_converged_mask(&mut self, mask: Vec<bool>) -> Result<(), SpectrumError> {
        if mask.len() != self.eigenvalues.len() {
            return Err(SpectrumError::MaskLength {
                mask: mask.len(),
                dim: self.eigenvalues.len(),
            });
        }
        self.converged = mask;
        Ok(())
    }

    /// Drops the eigenvector block, e.g. before caching a large sweep point.
    pub fn without_vectors(mut self) -> Self {
        self.eigenvectors = None;
        self
    }
}

/// Full eigendecomposition of a symmetric matrix, ascending eigenvalues.
pub fn diagonalize(h: &SymMatrix) -> Result<(Vec<f64>, ColMatrix), SpectrumError> {
    let dim = h.dim();
    let (values, vectors) = symmetric_eigen(dim, h.as_slice().to_vec(), true)?;
    Ok((values, vectors.expect("requested vectors")))
}

/// Eigenvalues only; consumes the matrix so the buffer is reused as LAPACK
/// scratch instead of being copied.
pub fn diagonalize_values(h: SymMatrix) -> Result<Vec<f64>, SpectrumError> {
    let dim = h.dim();
    let (values, _) = symmetric_eigen(dim, h.into_data(), false)?;
    Ok(values)
}

/// Largest `‖H v − λ v‖_∞` over `sample` eigenpairs spread evenly across the
/// spectrum (all pairs when `sample ≥ dim`).
pub fn eigen_residual(
    h: &SymMatrix,
    values: &[f64],
    vectors: &ColMatrix,
    sample: usize,
) -> f64 {
    let dim = h.dim();
    assert_eq!(values.len(), dim);
    assert_eq!(vectors.rows(), dim);
    if dim == 0 {
        return 0.0;
    }
    let step = (dim / sample.max(1)).max(1);
    let mut worst: f64 = 0.0;
    for k in (0..dim).step_by(step) {
        let v = vectors.column(k);
        for i in 0..dim {
            let mut hv = 0.0;
            for (j, vj) in v.iter().enumerate() {
                hv += h.get(i, j) * vj;
            }
            worst = worst.max((hv - values[k] * v[i]).abs());
        }
    }
    worst
}

/// Builds the positive-parity bosonic basis at `e_cut`, assembles `H`, and
/// diagonalizes it.
pub fn compute_spectrum(
    params: &HamiltonianParams,
    e_cut: f64,
    want_vectors: bool,
) -> Result<SpectralResult, SpectrumError> {
    let basis = build_basis(params.n_particles(), e_cut, ParityFilter::Plus);
    let h = assemble_hamiltonian(&basis, params)?;
    let dim = h.dim();
    let (eigenvalues, eigenvectors) = symmetric_eigen(dim, h.into_data(), want_vectors)?;
    Ok(SpectralResult {
        params: *params,
        e_cut,
        converged: vec![false; eigenvalues.len()],
        eigenvalues,
        eigenvectors,
    })
}

/// Marks the leading levels of `base` that agree with `refined` to relative
/// tolerance `rel_tol` (absolute below energy 1). The mask is a prefix: it
/// ends at the first level that drifts, since everything above shifts with
/// the cutoff.
///
/// `refined` must describe the same physical point at a cutoff at least 1.2
/// times larger.
pub fn convergence_filter(
    base: &SpectralResult,
    refined: &SpectralResult,
    rel_tol: f64,
) -> Result<Vec<bool>, SpectrumError> {
    if base.params != refined.params {
        return Err(SpectrumError::ParamMismatch(base.params, refined.params));
    }
    if refined.e_cut < 1.2 * base.e_cut {
        return Err(SpectrumError::CutoffRatio {
            base: base.e_cut,
            refined: refined.e_cut,
        });
    }
    let mut mask = vec![false; base.eigenvalues.len()];
    for (k, slot) in mask.iter_mut().enumerate() {
        match refined.eigenvalues.get(k) {
            Some(&fine) => {
                let coarse = base.eigenvalues[k];
                if (coarse - fine).abs() <= rel_tol * coarse.abs().max(1.0) {
                    *slot = true;
                } else {
                    break;
                }
            }
            None => break,
        }
    }
    Ok(mask)
}

/// Certifies `base` in place against a fresh run at `ratio` times its cutoff.
/// Returns the refined result so callers can reuse or cache it.
pub fn certify_convergence(
    base: &mut SpectralResult,
    ratio: f64,
    rel_tol: f64,
) -> Result<SpectralResult, SpectrumError> {
    let refined = compute_spectrum(&base.params, base.e_cut * ratio, false)?;
    let mask = convergence_filter(base, &refined, rel_tol)?;
    base.set_converged_mask(mask)?;
    Ok(refined)
}

/// Unfolded spectrum: levels mapped through the smooth cumulative staircase
/// so the mean spacing in the analysis window is exactly one.
#[derive(Debug, Clone)]
pub struct UnfoldedSpectrum {
    levels: Vec<f64>,
    window: (f64, f64),
    coefficients: Vec<f64>,
}

impl UnfoldedSpectrum {
    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    /// Energy window (original units) the output levels were taken from.
    pub fn window(&self) -> (f64, f64) {
        self.window
    }

    /// Staircase fit coefficients `c_j` of `Σ_j c_j E^{j/2}`.
    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn mean_spacing(&self) -> f64 {
        if self.levels.len() < 2 {
            return f64::NAN;
        }
        (self.levels[self.levels.len() - 1] - self.levels[0]) / (self.levels.len() - 1) as f64
    }
}

pub const UNFOLD_MIN_LEVELS: usize = 50;

/// Unfolds `levels` (ascending, typically the certified prefix of a
/// spectrum). The cumulative staircase is fit with `Σ_{j=0..N} c_j E^{j/2}`,
/// the natural power family for `N` particles in a box, discarding the lowest
/// 5% of levels from the fit. Levels inside `window` (all levels when `None`)
/// are mapped through the fit and rescaled to unit mean spacing.
pub fn unfold(
    levels: &[f64],
    n_particles: u32,
    window: Option<(f64, f64)>,
) -> Result<UnfoldedSpectrum, SpectrumError> {
    for (i, pair) in levels.windows(2).enumerate() {
        if !pair[0].is_finite() || pair[1] < pair[0] {
            return Err(SpectrumError::BadLevel { index: i + 1 });
        }
    }
    if levels.last().is_some_and(|e| !e.is_finite()) {
        return Err(SpectrumError::BadLevel {
            index: levels.len() - 1,
        });
    }

    let skip = (levels.len() as f64 * 0.05).ceil() as usize;
    let fit_levels = &levels[skip..];
    if fit_levels.len() < UNFOLD_MIN_LEVELS {
        return Err(SpectrumError::TooFewLevels {
            have: fit_levels.len(),
            need: UNFOLD_MIN_LEVELS,
        });
    }

    let n_coef = n_particles as usize + 1;
    // staircase value at level i is its cumulative count in the full input
    let mut design = ColMatrix::zeros(fit_levels.len(), n_coef);
    let mut rhs = Vec::with_capacity(fit_levels.len());
    for (row, &e) in fit_levels.iter().enumerate() {
        let half = e.max(0.0).sqrt();
        for j in 0..n_coef {
            design.set(row, j, half.powi(j as i32));
        }
        rhs.push((skip + row) as f64 + 0.5);
    }
    // scale columns to comparable magnitude before the least-squares solve
    let scales: Vec<f64> = (0..n_coef)
        .map(|j| {
            let m = design
                .column(j)
                .iter()
                .fold(0.0f64, |acc, &x| acc.max(x.abs()));
            if m > 0.0 {
                m
            } else {
                1.0
            }
        })
        .collect();
    for j in 0..n_coef {
        let s = scales[j];
        for x in design.column_mut(j) {
            *x /= s;
        }
    }
    let mut coefficients = crate::linalg::least_squares(&design, &rhs)?;
    for (c, s) in coefficients.iter_mut().zip(&scales) {
        *c /= s;
    }
    if coefficients.iter().any(|c| !c.is_finite()) {
        return Err(SpectrumError::NonMonotoneFit(
            "fit produced non-finite coefficients".into(),
        ));
    }

    let staircase = |e: f64| -> f64 {
        let half = e.max(0.0).sqrt();
        coefficients
            .iter()
            .enumerate()
            .map(|(j, c)| c * half.powi(j as i32))
            .sum()
    };

    let window = window.unwrap_or((fit_levels[0], *fit_levels.last().unwrap()));
    let selected: Vec<f64> = levels
        .iter()
        .copied()
        .filter(|&e| e >= window.0 && e <= window.1)
        .collect();
    if selected.len() < UNFOLD_MIN_LEVELS {
        return Err(SpectrumError::TooFewLevels {
            have: selected.len(),
            need: UNFOLD_MIN_LEVELS,
        });
    }

    let mut unfolded: Vec<f64> = selected.iter().map(|&e| staircase(e)).collect();
    for (i, pair) in unfolded.windows(2).enumerate() {
        if pair[1] < pair[0] {
            return Err(SpectrumError::NonMonotoneFit(format!(
                "staircase decreases between levels {} and {} (E = {} .. {})",
                i,
                i + 1,
                selected[i],
                selected[i + 1],
            )));
        }
    }
    // rescale so the mean spacing inside the window is exactly one
    let span = unfolded[unfolded.len() - 1] - unfolded[0];
    if span <= 0.0 {
        return Err(SpectrumError::NonMonotoneFit(
            "staircase is flat across the window".into(),
        ));
    }
    let scale = (unfolded.len() - 1) as f64 / span;
    let base = unfolded[0];
    for u in &mut unfolded {
        *u = (*u - base) * scale;
    }

    Ok(UnfoldedSpectrum {
        levels: unfolded,
        window,
        coefficients,
    })
}

/// Smooth density-of-states models for `N` bosons in the box.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DosModel {
    /// Level density of the positive-parity bosonic sector,
    /// `E^(N/2−1) π^(N/2) / (2^(N+2) (N+1)! Γ(N/2+1))`.
    SectorDensity,
    /// Cumulative count of all `N`-tuple box levels,
    /// `(π E)^(N/2)·/ (2^N Γ(N/2+1))`.
    TotalCount,
}

/// Γ(n/2 + 1) for integer `n ≥ 0`.
fn gamma_half(n: u32) -> f64 {
    if n % 2 == 0 {
        factorial(n / 2)
    } else {
        // Γ(k + 1/2) with k = (n+1)/2, via Γ(k+1/2) = (2k)! √π / (4^k k!)
        let k = (n + 1) / 2;
        factorial(2 * k) * std::f64::consts::PI.sqrt() / (4f64.powi(k as i32) * factorial(k))
    }
}

fn factorial(n: u32) -> f64 {
    (1..=n).map(f64::from).product()
}

/// Evaluates the chosen density-of-states model at energy `e`.
pub fn dos_model(n_particles: u32, e: f64, model: DosModel) -> f64 {
    let n = n_particles;
    let half_n = f64::from(n) / 2.0;
    let pi = std::f64::consts::PI;
    match model {
        DosModel::SectorDensity => {
            e.powf(half_n - 1.0) * pi.powf(half_n)
                / (2f64.powi(n as i32 + 2) * factorial(n + 1) * gamma_half(n))
        }
        DosModel::TotalCount => pi.powf(half_n) * e.powf(half_n) / (2f64.powi(n as i32) * gamma_half(n)),
    }
}

/// Log-log slope of the empirical level density: histogram the levels in
/// `n_bins` equal-width bins (after dropping the lowest 5%) and fit
/// `ln ρ = a + s ln E`. Bins holding fewer than 10 levels are skipped.
/// Returns the slope `s`, or an error when fewer than 4 usable bins remain.
pub fn density_exponent(levels: &[f64], n_bins: usize) -> Result<f64, SpectrumError> {
    let skip = (levels.len() as f64 * 0.05).ceil() as usize;
    let kept = &levels[skip.min(levels.len())..];
    if kept.len() < UNFOLD_MIN_LEVELS {
        return Err(SpectrumError::TooFewLevels {
            have: kept.len(),
            need: UNFOLD_MIN_LEVELS,
        });
    }
    let lo = kept[0];
    let hi = kept[kept.len() - 1];
    let width = (hi - lo) / n_bins as f64;
    if width <= 0.0 {
        return Err(SpectrumError::NonMonotoneFit(
            "degenerate energy range for density fit".into(),
        ));
    }
    let mut counts = vec![0usize; n_bins];
    for &e in kept {
        let b = (((e - lo) / width) as usize).min(n_bins - 1);
        counts[b] += 1;
    }
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (b, &c) in counts.iter().enumerate() {
        if c < 10 {
            continue;
        }
        let center = lo + (b as f64 + 0.5) * width;
        xs.push(center.ln());
        ys.push((c as f64 / width).ln());
    }
    if xs.len() < 4 {
        return Err(SpectrumError::TooFewLevels {
            have: xs.len(),
            need: 4,
        });
    }
    let n = xs.len() as f64;
    let sx: f64 = xs.iter().sum();
    let sy: f64 = ys.iter().sum();
    let sxx: f64 = xs.iter().map(|x| x * x).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| x * y).sum();
    Ok((n * sxy - sx * sy) / (n * sxx - sx * sx))
}

// --- on-disk cache ---------------------------------------------------------

const CACHE_MAGIC: &[u8; 8] = b"MWSPEC01";
const FLAG_VECTORS: u32 = 1;

/// Cache file path for one `(params, E_cut)` key. The float parameters are
/// encoded bit-exactly, so distinct keys can never collide.
pub fn cache_path(dir: &Path, params: &HamiltonianParams, e_cut: f64) -> PathBuf {
    dir.join(format!(
        "spec_n{}_w{}_t{:016x}_g{:016x}_e{:016x}.bin",
        params.n_particles(),
        params.wells(),
        params.tau().to_bits(),
        params.gamma().to_bits(),
        e_cut.to_bits(),
    ))
}

/// Writes a spectral result to the cache, atomically: the payload lands in a
/// temporary file that is renamed into place, so a crash mid-write never
/// leaves a readable partial entry.
pub fn store_spectrum(dir: &Path, result: &SpectralResult) -> Result<PathBuf, SpectrumError> {
    fs::create_dir_all(dir)?;
    let path = cache_path(dir, &result.params, result.e_cut);
    let tmp = path.with_extension(format!("tmp{}", std::process::id()));
    {
        let mut f = std::io::BufWriter::new(fs::File::create(&tmp)?);
        f.write_all(CACHE_MAGIC)?;
        f.write_all(&result.params.n_particles().to_le_bytes())?;
        f.write_all(&result.params.wells().to_le_bytes())?;
        f.write_all(&result.params.tau().to_le_bytes())?;
        f.write_all(&result.params.gamma().to_le_bytes())?;
        f.write_all(&result.e_cut.to_le_bytes())?;
        f.write_all(&(result.eigenvalues.len() as u64).to_le_bytes())?;
        let flags: u32 = if result.eigenvectors.is_some() {
            FLAG_VECTORS
        } else {
            0
        };
        f.write_all(&flags.to_le_bytes())?;
        f.write_all(&0u32.to_le_bytes())?;
        for &v in &result.eigenvalues {
            f.write_all(&v.to_le_bytes())?;
        }
        for &c in &result.converged {
            f.write_all(&[u8::from(c)])?;
        }
        if let Some(vec) = &result.eigenvectors {
            for &x in vec.as_slice() {
                f.write_all(&x.to_le_bytes())?;
            }
        }
        f.flush()?;
    }
    fs::rename(&tmp, &path)?;
    Ok(path)
}

fn read_exact_or<const K: usize>(
    f: &mut impl IoRead,
    path: &Path,
    what: &str,
) -> Result<[u8; K], SpectrumError> {
    let mut buf = [0u8; K];
    f.read_exact(&mut buf)
        .map_err(|_| SpectrumError::CacheFormat {
            path: path.to_path_buf(),
            reason: format!("truncated while reading {what}"),
        })?;
    Ok(buf)
}

/// Loads a cached spectrum if present. Returns `Ok(None)` on a clean miss,
/// including the case where vectors are wanted but the entry holds only
/// eigenvalues. A file whose header disagrees with its own key is an error.
pub fn load_spectrum(
    dir: &Path,
    params: &HamiltonianParams,
    e_cut: f64,
    want_vectors: bool,
) -> Result<Option<SpectralResult>, SpectrumError> {
    let path = cache_path(dir, params, e_cut);
    let file = match fs::File::open(&path) {
        Ok(f) => f,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
        Err(e) => return Err(e.into()),
    };
    let mut f = std::io::BufReader::new(file);
    let bad = |reason: &str| SpectrumError::CacheFormat {
        path: path.clone(),
        reason: reason.to_string(),
    };

    let magic: [u8; 8] = read_exact_or(&mut f, &path, "magic")?;
    if &magic != CACHE_MAGIC {
        return Err(bad("bad magic"));
    }
    let n = u32::from_le_bytes(read_exact_or(&mut f, &path, "particle count")?);
    let w = u32::from_le_bytes(read_exact_or(&mut f, &path, "well count")?);
    let tau = f64::from_le_bytes(read_exact_or(&mut f, &path, "tau")?);
    let gamma = f64::from_le_bytes(read_exact_or(&mut f, &path, "gamma")?);
    let file_e_cut = f64::from_le_bytes(read_exact_or(&mut f, &path, "cutoff")?);
    let dim = u64::from_le_bytes(read_exact_or(&mut f, &path, "dimension")?) as usize;
    let flags = u32::from_le_bytes(read_exact_or(&mut f, &path, "flags")?);
    let _reserved = u32::from_le_bytes(read_exact_or(&mut f, &path, "reserved")?);

    if n != params.n_particles()
        || w != params.wells()
        || tau.to_bits() != params.tau().to_bits()
        || gamma.to_bits() != params.gamma().to_bits()
        || file_e_cut.to_bits() != e_cut.to_bits()
    {
        return Err(bad("header does not match the requested parameters"));
    }
    let has_vectors = flags & FLAG_VECTORS != 0;
    if want_vectors && !has_vectors {
        return Ok(None);
    }

    let mut eigenvalues = Vec::with_capacity(dim);
    for _ in 0..dim {
        eigenvalues.push(f64::from_le_bytes(read_exact_or(
            &mut f,
            &path,
            "eigenvalue",
        )?));
    }
    let mut converged = Vec::with_capacity(dim);
    for _ in 0..dim {
        let b: [u8; 1] = read_exact_or(&mut f, &path, "convergence mask")?;
        converged.push(b[0] != 0);
    }
    let eigenvectors = if has_vectors && want_vectors {
        let mut data = Vec::with_capacity(dim * dim);
        for _ in 0..dim * dim {
            data.push(f64::from_le_bytes(read_exact_or(
                &mut f,
                &path,
                "eigenvector",
            )?));
        }
        Some(ColMatrix::from_data(dim, dim, data))
    } else {
        None
    };

    Ok(Some(SpectralResult {
        params: *params,
        e_cut,
        eigenvalues,
        eigenvectors,
        converged,
    }))
}

/// Cache-through wrapper: load the `(params, E_cut)` entry when present,
/// otherwise compute and store it.
pub fn spectrum_with_cache(
    params: &HamiltonianParams,
    e_cut: f64,
    want_vectors: bool,
    dir: &Path,
) -> Result<SpectralResult, SpectrumError> {
    if let Some(hit) = load_spectrum(dir, params, e_cut, want_vectors)? {
        return Ok(hit);
    }
    let result = compute_spectrum(params, e_cut, want_vectors)?;
    store_spectrum(dir, &result)?;
    Ok(result)
}
