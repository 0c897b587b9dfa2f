//! Independently solvable reference spectra for the corners and edges of the
//! `(τ, γ)` parameter plane.
//!
//! The single-particle problem with `W−1` delta barriers is solved by a
//! parity-decomposed transfer matrix on the half box `[0, π/2]`, which keeps
//! the near-degenerate doublets of strong barriers cleanly separated. The
//! four corner models are enumerated combinatorially in the bosonic
//! positive-parity sector: free bosons, hard-core bosons (free-fermion level
//! sums), bosons in decoupled wells, and hard-core bosons in decoupled wells.

use std::collections::HashMap;

use thiserror::Error;

use crate::hilbert::{build_basis, Parity, ParityFilter};

#[derive(Debug, Error)]
pub enum LimitsError {
    #[error("root refinement failed near k = {k}: {reason}")]
    RootRefinement { k: f64, reason: String },
    #[error("single-particle levels reach only {have:.3} but composites up to {need:.3} are requested")]
    InsufficientLevels { have: f64, need: f64 },
    #[error("{0} is not a corner id (valid: 1..=4)")]
    UnknownCorner(u8),
}

/// Single-particle spectrum of a particle on `[0, π]` with `W−1` delta
/// barriers of strength `τ`, with spatial parity labels.
#[derive(Debug, Clone)]
pub struct KPLevels {
    wells: u32,
    tau: f64,
    e_max: f64,
    levels: Vec<(f64, Parity)>,
}

impl KPLevels {
    pub fn wells(&self) -> u32 {
        self.wells
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn e_max(&self) -> f64 {
        self.e_max
    }

    /// Ascending `(energy, parity)` pairs.
    pub fn levels(&self) -> &[(f64, Parity)] {
        &self.levels
    }

    pub fn energies(&self) -> Vec<f64> {
        self.levels.iter().map(|&(e, _)| e).collect()
    }

    pub fn energies_of_parity(&self, parity: Parity) -> Vec<f64> {
        self.levels
            .iter()
            .filter(|&&(_, p)| p == parity)
            .map(|&(e, _)| e)
            .collect()
    }
}

/// Wavefunction pair `(ψ, ψ′)` pushed from `x = 0` (Dirichlet) to `π/2⁻`
/// through the interior barriers on the half box.
fn propagate_half_box(k: f64, tau: f64, wells: u32) -> (f64, f64) {
    let half = std::f64::consts::FRAC_PI_2;
    let mut psi = 0.0_f64;
    let mut dpsi = 1.0_f64;
    let mut x = 0.0_f64;
    let advance = |psi: &mut f64, dpsi: &mut f64, len: f64| {
        let (s, c) = (k * len).sin_cos();
        let new_psi = c * *psi + s / k * *dpsi;
        let new_dpsi = -k * s * *psi + c * *dpsi;
        *psi = new_psi;
        *dpsi = new_dpsi;
    };
    // interior barriers strictly inside (0, π/2); a barrier at π/2 itself is
    // folded into the even-sector boundary condition instead
    let mut kk = 1;
    loop {
        let pos = std::f64::consts::PI * f64::from(kk) / f64::from(wells);
        if pos >= half - 1e-12 {
            break;
        }
        advance(&mut psi, &mut dpsi, pos - x);
        dpsi += tau * psi;
        x = pos;
        kk += 1;
    }
    advance(&mut psi, &mut dpsi, half - x);
    (psi, dpsi)
}

/// Boundary functional whose roots in `k` are the energy levels `E = k²`.
/// Even states obey `ψ′(π/2) = 0`, or the Robin form `ψ′ + (τ/2)ψ = 0` when
/// a barrier sits exactly at the box center (even `W`); odd states obey
/// `ψ(π/2) = 0`.
fn boundary_mismatch(k: f64, tau: f64, wells: u32, parity: Parity) -> f64 {
    let (psi, dpsi) = propagate_half_box(k, tau, wells);
    match parity {
        Parity::Plus => {
            if wells % 2 == 0 {
                dpsi + 0.5 * tau * psi
            } else {
                dpsi
            }
        }
        Parity::Minus => psi,
    }
}

/// All single-particle energies `≤ E_max` of the `W`-well box with barrier
/// strength `τ`, found by sign-scanning the boundary mismatch in `k = √E`
/// and bisecting each bracket.
///
/// Sign-scanning resolves roots of the same parity sector down to the scan
/// step `π/(8√E_max)`. For `W ≥ 3` and `τ` beyond roughly `10^5` the
/// near-degenerate pairs of a collapsing well multiplet can fall closer than
/// that and merge; at the barrier strengths of physical interest the sector
/// roots are well separated.
pub fn kp_levels(wells: u32, tau: f64, e_max: f64) -> Result<KPLevels, LimitsError> {
    assert!(wells >= 1, "well count must be ≥ 1");
    assert!(tau >= 0.0 && tau.is_finite(), "tau must be finite and ≥ 0");
    assert!(e_max > 0.0, "e_max must be positive");
    let k_max = e_max.sqrt();
    // quarter of the minimal free level spacing at the top of the range
    let step = std::f64::consts::PI / (8.0 * k_max);
    let mut levels: Vec<(f64, Parity)> = Vec::new();
    for parity in [Parity::Plus, Parity::Minus] {
        let f = |k: f64| boundary_mismatch(k, tau, wells, parity);
        let mut k_prev = step * 1e-3;
        let mut f_prev = f(k_prev);
        let mut k = step;
        while k_prev < k_max {
            let k_here = k.min(k_max + step * 0.5);
            let f_here = f(k_here);
            if !f_here.is_finite() {
                return Err(LimitsError::RootRefinement {
                    k: k_here,
                    reason: "non-finite boundary mismatch".into(),
                });
            }
            if f_prev == 0.0 {
                levels.push((k_prev * k_prev, parity));
            } else if f_prev * f_here < 0.0 {
                let root = bisect(&f, k_prev, k_here)?;
                levels.push((root * root, parity));
            }
            k_prev = k_here;
            f_prev = f_here;
            k += step;
        }
    }
    levels.retain(|&(e, _)| e <= e_max);
    levels.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(KPLevels {
        wells,
        tau,
        e_max,
        levels,
    })
}

fn bisect(f: &dyn Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> Result<f64, LimitsError> {
    let mut f_lo = f(lo);
    if f_lo == 0.0 {
        return Ok(lo);
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= 1e-13 * mid.max(1.0) {
            return Ok(mid);
        }
        let f_mid = f(mid);
        if f_mid == 0.0 {
            return Ok(mid);
        }
        if (f_lo > 0.0) == (f_mid > 0.0) {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    Err(LimitsError::RootRefinement {
        k: 0.5 * (lo + hi),
        reason: "bisection did not reach tolerance in 200 steps".into(),
    })
}

/// The four exactly solvable limits of the model.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CornerModel {
    /// `τ=0, γ=0`: free bosons in the plain box.
    FreeBosons,
    /// `τ=0, γ=∞`: hard-core bosons; energies are sums of distinct box modes.
    HardCoreBosons,
    /// `τ=∞, γ=0`: bosons in `W` decoupled wells of width `π/W`.
    DecoupledWells,
    /// `τ=∞, γ=∞`: hard-core bosons confined to decoupled wells.
    HardCoreWells,
}

impl CornerModel {
    pub fn id(self) -> u8 {
        match self {
            CornerModel::FreeBosons => 1,
            CornerModel::HardCoreBosons => 2,
            CornerModel::DecoupledWells => 3,
            CornerModel::HardCoreWells => 4,
        }
    }

    pub fn from_id(id: u8) -> Result<Self, LimitsError> {
        match id {
            1 => Ok(CornerModel::FreeBosons),
            2 => Ok(CornerModel::HardCoreBosons),
            3 => Ok(CornerModel::DecoupledWells),
            4 => Ok(CornerModel::HardCoreWells),
            other => Err(LimitsError::UnknownCorner(other)),
        }
    }
}

/// Exact level list of one corner model in the bosonic positive-parity
/// sector, as ascending `(energy, degeneracy)` pairs up to `E_cut`.
#[derive(Debug, Clone)]
pub struct CornerSpectrum {
    corner: CornerModel,
    n_particles: u32,
    wells: u32,
    levels: Vec<(f64, u32)>,
}

impl CornerSpectrum {
    pub fn corner(&self) -> CornerModel {
        self.corner
    }

    pub fn n_particles(&self) -> u32 {
        self.n_particles
    }

    pub fn wells(&self) -> u32 {
        self.wells
    }

    pub fn levels(&self) -> &[(f64, u32)] {
        &self.levels
    }

    /// Levels repeated by degeneracy, ascending.
    pub fn flat_levels(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for &(e, g) in &self.levels {
            for _ in 0..g {
                out.push(e);
            }
        }
        out
    }

    /// Number of sector states up to and including `e`.
    pub fn cumulative_count(&self, e: f64) -> u64 {
        self.levels
            .iter()
            .take_while(|&&(energy, _)| energy <= e)
            .map(|&(_, g)| u64::from(g))
            .sum()
    }
}

/// Enumerates the `[N]+` spectrum of a corner model up to `E_cut`.
pub fn corner_spectrum(
    corner: CornerModel,
    n_particles: u32,
    wells: u32,
    e_cut: f64,
) -> CornerSpectrum {
    assert!(n_particles >= 1, "particle count must be ≥ 1");
    assert!(wells >= 1, "well count must be ≥ 1");
    let levels = match corner {
        CornerModel::FreeBosons => free_boson_levels(n_particles, e_cut),
        CornerModel::HardCoreBosons => hard_core_levels(n_particles, e_cut),
        CornerModel::DecoupledWells => well_levels(n_particles, wells, e_cut),
        CornerModel::HardCoreWells => hard_core_well_levels(n_particles, wells, e_cut),
    };
    CornerSpectrum {
        corner,
        n_particles,
        wells,
        levels,
    }
}

fn group_integer_levels(mut energies: Vec<u64>) -> Vec<(f64, u32)> {
    energies.sort_unstable();
    let mut out: Vec<(u64, u32)> = Vec::new();
    for e in energies {
        match out.last_mut() {
            Some((prev, g)) if *prev == e => *g += 1,
            _ => out.push((e, 1)),
        }
    }
    out.into_iter().map(|(e, g)| (e as f64, g)).collect()
}

fn free_boson_levels(n: u32, e_cut: f64) -> Vec<(f64, u32)> {
    let basis = build_basis(n, e_cut, ParityFilter::Plus);
    group_integer_levels(basis.states().iter().map(|s| s.e0()).collect())
}

/// Hard-core spectrum: one state per strictly increasing mode tuple, with
/// parity `(−1)^(N(N−1)/2) · Π (−1)^(nᵢ+1)`; the prefactor is the sign the
/// ordering factor `Π sgn(xᵢ−xⱼ)` picks up under full spatial inversion.
fn hard_core_levels(n: u32, e_cut: f64) -> Vec<(f64, u32)> {
    let cap = e_cut.max(0.0).floor() as u64;
    let mut energies = Vec::new();
    let base_sign = if (n * (n - 1) / 2) % 2 == 0 { 1 } else { -1 };
    let mut tuple: Vec<u32> = Vec::with_capacity(n as usize);
    fn rec(left: u32, n_min: u32, e_left: u64, sign: i32, tuple: &mut Vec<u32>, out: &mut Vec<u64>, e_used: u64) {
        if left == 0 {
            if sign > 0 {
                out.push(e_used);
            }
            return;
        }
        // remaining modes are strictly increasing: n, n+1, … cost at least
        // n² + (n+1)² + …
        let mut m = n_min;
        loop {
            let mut min_cost = 0u64;
            for i in 0..left {
                let v = u64::from(m + i);
                min_cost += v * v;
            }
            if min_cost > e_left {
                break;
            }
            let c = u64::from(m) * u64::from(m);
            let s = if m % 2 == 0 { -sign } else { sign };
            tuple.push(m);
            rec(left - 1, m + 1, e_left - c, s, tuple, out, e_used + c);
            tuple.pop();
            m += 1;
        }
    }
    rec(n, 1, cap, base_sign, &mut tuple, &mut energies, 0);
    group_integer_levels(energies)
}

/// Decoupled wells: orbitals `(well j, mode m)` with energy `(W·m)²`; spatial
/// inversion conjugates `j → W+1−j` with per-particle sign `(−1)^(m+1)` from
/// the internal reversal of each well. Conjugate multiset pairs contribute
/// one positive-parity state each; self-conjugate multisets survive iff the
/// total sign is `+`.
fn well_levels(n: u32, wells: u32, e_cut: f64) -> Vec<(f64, u32)> {
    let cap = e_cut.max(0.0).floor() as u64;
    let w2 = u64::from(wells) * u64::from(wells);
    let m_max = ((cap as f64).sqrt() / f64::from(wells)).floor() as u32;
    // orbital order: (m, j) ascending; multisets as non-decreasing orbital ids
    let mut orbitals: Vec<(u32, u32)> = Vec::new();
    for m in 1..=m_max {
        for j in 1..=wells {
            orbitals.push((m, j));
        }
    }
    let mut energies = Vec::new();
    let mut chosen: Vec<usize> = Vec::with_capacity(n as usize);
    #[allow(clippy::too_many_arguments)]
    fn rec(
        left: u32,
        start: usize,
        e_left: u64,
        orbitals: &[(u32, u32)],
        w2: u64,
        wells: u32,
        chosen: &mut Vec<usize>,
        out: &mut Vec<u64>,
        e_used: u64,
    ) {
        if left == 0 {
            // conjugate: j → W+1−j, sign Π(−1)^(m+1)
            let state: Vec<(u32, u32)> = chosen.iter().map(|&i| orbitals[i]).collect();
            let mut conj: Vec<(u32, u32)> = state
                .iter()
                .map(|&(m, j)| (m, wells + 1 - j))
                .collect();
            conj.sort_unstable();
            let sign_pos = state.iter().filter(|&&(m, _)| m % 2 == 0).count() % 2 == 0;
            match state.cmp(&conj) {
                std::cmp::Ordering::Less => out.push(e_used),
                std::cmp::Ordering::Greater => {}
                std::cmp::Ordering::Equal => {
                    if sign_pos {
                        out.push(e_used);
                    }
                }
            }
            return;
        }
        for i in start..orbitals.len() {
            let (m, _) = orbitals[i];
            let cost = w2 * u64::from(m) * u64::from(m);
            // orbitals are sorted by m, so all later ones cost at least this
            if cost * u64::from(left) > e_left {
                break;
            }
            chosen.push(i);
            rec(
                left - 1,
                i,
                e_left - cost,
                orbitals,
                w2,
                wells,
                chosen,
                out,
                e_used + cost,
            );
            chosen.pop();
        }
    }
    rec(n, 0, cap, &orbitals, w2, wells, &mut chosen, &mut energies, 0);
    group_integer_levels(energies)
}

/// Hard-core bosons in decoupled wells: each well holds a set of distinct
/// modes. Inversion mirrors the well assignment and reverses each well
/// internally, contributing `(−1)^(m+1)` per particle and the ordering-factor
/// sign `(−1)^(k(k−1)/2)` per well holding `k` particles.
fn hard_core_well_levels(n: u32, wells: u32, e_cut: f64) -> Vec<(f64, u32)> {
    let cap = e_cut.max(0.0).floor() as u64;
    let w2 = u64::from(wells) * u64::from(wells);
    let mut energies = Vec::new();
    // per-well strictly increasing mode sets, wells processed left to right
    let mut contents: Vec<Vec<u32>> = vec![Vec::new(); wells as usize];
    fn set_sign(set: &[u32]) -> i32 {
        let k = set.len() as u32;
        let even_modes = set.iter().filter(|&&m| m % 2 == 0).count() as u32;
        let order_sign = (k * (k.saturating_sub(1)) / 2) % 2;
        if (even_modes + order_sign) % 2 == 0 {
            1
        } else {
            -1
        }
    }
    fn rec(
        well: usize,
        left: u32,
        e_left: u64,
        w2: u64,
        contents: &mut Vec<Vec<u32>>,
        out: &mut Vec<u64>,
        e_used: u64,
    ) {
        let wells = contents.len();
        if well == wells {
            if left != 0 {
                return;
            }
            let conj: Vec<Vec<u32>> = contents.iter().rev().cloned().collect();
            match contents[..].cmp(&conj[..]) {
                std::cmp::Ordering::Less => out.push(e_used),
                std::cmp::Ordering::Greater => {}
                std::cmp::Ordering::Equal => {
                    let sign: i32 = contents.iter().map(|s| set_sign(s)).product();
                    if sign > 0 {
                        out.push(e_used);
                    }
                }
            }
            return;
        }
        // enumerate the strictly increasing set for this well
        fn fill_set(
            well: usize,
            left: u32,
            e_left: u64,
            m_min: u32,
            w2: u64,
            contents: &mut Vec<Vec<u32>>,
            out: &mut Vec<u64>,
            e_used: u64,
        ) {
            // option: close this well and move on
            rec(well + 1, left, e_left, w2, contents, out, e_used);
            if left == 0 {
                return;
            }
            let mut m = m_min;
            loop {
                let cost = w2 * u64::from(m) * u64::from(m);
                if cost > e_left {
                    break;
                }
                contents[well].push(m);
                fill_set(
                    well,
                    left - 1,
                    e_left - cost,
                    m + 1,
                    w2,
                    contents,
                    out,
                    e_used + cost,
                );
                contents[well].pop();
                m += 1;
            }
        }
        fill_set(well, left, e_left, 1, w2, contents, out, e_used);
    }
    rec(0, n, cap, w2, &mut contents, &mut energies, 0);
    group_integer_levels(energies)
}

/// Composes `N`-particle hard-core spectra from single-particle levels at
/// finite barrier strength: energies are sums over strictly increasing level
/// index tuples, with parity the product of the constituent parities times
/// the inversion sign `(−1)^(N(N−1)/2)` of the ordering factor.
pub fn tg_compose(
    kp: &KPLevels,
    n_particles: u32,
    e_cut: f64,
) -> Result<Vec<(f64, Parity)>, LimitsError> {
    assert!(n_particles >= 1, "particle count must be ≥ 1");
    let levels = kp.levels();
    if (levels.len() as u32) < n_particles {
        return Err(LimitsError::InsufficientLevels {
            have: kp.e_max(),
            need: e_cut,
        });
    }
    // completeness: the largest constituent a composite ≤ E_cut can use is
    // E_cut minus the cheapest (N−1)-level sum
    let min_rest: f64 = levels
        .iter()
        .take(n_particles as usize - 1)
        .map(|&(e, _)| e)
        .sum();
    if kp.e_max() < e_cut - min_rest {
        return Err(LimitsError::InsufficientLevels {
            have: kp.e_max(),
            need: e_cut - min_rest,
        });
    }
    let base_sign = if (n_particles * (n_particles - 1) / 2) % 2 == 0 {
        Parity::Plus
    } else {
        Parity::Minus
    };
    let mut out: Vec<(f64, Parity)> = Vec::new();
    fn rec(
        levels: &[(f64, Parity)],
        left: u32,
        start: usize,
        e_left: f64,
        parity: Parity,
        out: &mut Vec<(f64, Parity)>,
        e_used: f64,
    ) {
        if left == 0 {
            out.push((e_used, parity));
            return;
        }
        for i in start..levels.len() {
            let (e, p) = levels[i];
            // remaining picks are strictly later levels, each at least e
            if e * f64::from(left) > e_left {
                break;
            }
            rec(
                levels,
                left - 1,
                i + 1,
                e_left - e,
                parity * p,
                out,
                e_used + e,
            );
        }
    }
    rec(levels, n_particles, 0, e_cut, base_sign, &mut out, 0.0);
    out.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(out)
}

/// Counts all `N`-particle product states (every exchange symmetry and
/// parity) of a corner model up to energy `E`, the quantity the leading-order
/// state-count formula describes.
pub fn all_symmetry_count(corner: CornerModel, n_particles: u32, wells: u32, e: f64) -> u64 {
    let cap = e.max(0.0).floor() as u64;
    match corner {
        CornerModel::FreeBosons => {
            // ordered mode tuples
            count_ordered_tuples(n_particles, cap)
        }
        CornerModel::HardCoreBosons => {
            // N! states per strictly increasing tuple
            count_increasing_tuples(n_particles, cap, 1) * factorial(n_particles)
        }
        CornerModel::DecoupledWells => {
            // ordered orbital tuples; W choices per mode value
            let w2 = u64::from(wells) * u64::from(wells);
            count_ordered_orbital_tuples(n_particles, cap, w2, wells)
        }
        CornerModel::HardCoreWells => {
            // ordered orbital tuples with distinct modes within each well
            let mut used: HashMap<(u32, u32), u32> = HashMap::new();
            count_well_distinct(n_particles, cap, wells, &mut used)
        }
    }
}

fn factorial(n: u32) -> u64 {
    (1..=u64::from(n)).product()
}

fn count_ordered_tuples(left: u32, e_left: u64) -> u64 {
    if left == 0 {
        return 1;
    }
    let mut total = 0;
    let mut n = 1u64;
    while n * n <= e_left {
        total += count_ordered_tuples(left - 1, e_left - n * n);
        n += 1;
    }
    total
}

fn count_increasing_tuples(left: u32, e_left: u64, n_min: u32) -> u64 {
    if left == 0 {
        return 1;
    }
    let mut total = 0;
    let mut m = u64::from(n_min);
    loop {
        let mut min_cost = 0u64;
        for i in 0..u64::from(left) {
            min_cost += (m + i) * (m + i);
        }
        if min_cost > e_left {
            break;
        }
        total += count_increasing_tuples(left - 1, e_left - m * m, m as u32 + 1);
        m += 1;
    }
    total
}

fn count_ordered_orbital_tuples(left: u32, e_left: u64, w2: u64, wells: u32) -> u64 {
    if left == 0 {
        return 1;
    }
    let mut total = 0;
    let mut m = 1u64;
    while w2 * m * m <= e_left {
        total +=
            u64::from(wells) * count_ordered_orbital_tuples(left - 1, e_left - w2 * m * m, w2, wells);
        m += 1;
    }
    total
}

fn count_well_distinct(
    left: u32,
    e_left: u64,
    wells: u32,
    used: &mut HashMap<(u32, u32), u32>,
) -> u64 {
    if left == 0 {
        return 1;
    }
    let w2 = u64::from(wells) * u64::from(wells);
    let mut total = 0;
    let mut m = 1u32;
    while w2 * u64::from(m) * u64::from(m) <= e_left {
        for j in 1..=wells {
            if used.contains_key(&(j, m)) {
                continue;
            }
            used.insert((j, m), 1);
            total += count_well_distinct(
                left - 1,
                e_left - w2 * u64::from(m) * u64::from(m),
                wells,
                used,
            );
            used.remove(&(j, m));
        }
        m += 1;
    }
    total
}
