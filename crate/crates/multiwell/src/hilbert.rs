//! Fock basis of box modes and dense Hamiltonian assembly.
//!
//! Single-particle modes are `sin(n x)` on `[0, π]` with energy `n²` and
//! spatial parity `(−1)^(n+1)` about the box center. Many-boson basis states
//! are occupation multisets truncated by total non-interacting energy
//! `e0 = Σ nᵢ² ≤ E_cut`. The Hamiltonian
//!
//! `H = diag(e0) + τ·V + γ·U`
//!
//! couples states through the one-body barrier operator `V` (delta spikes at
//! `x = πk/W`) and the two-body contact operator `U` (`δ(xᵢ−xⱼ)` summed over
//! pairs), both evaluated from closed-form matrix elements.

use std::collections::HashMap;
use std::fmt;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum HilbertError {
    #[error("mode index must be ≥ 1, got {0}")]
    InvalidMode(u32),
    #[error("particle count must be ≥ 1")]
    NoParticles,
    #[error("well count must be ≥ 1, got {0}")]
    InvalidWells(u32),
    #[error("coupling {name} must be finite and ≥ 0, got {value}")]
    InvalidCoupling { name: &'static str, value: f64 },
    #[error("basis holds {basis} particles but parameters expect {params}")]
    ParticleMismatch { basis: u32, params: u32 },
}

/// Quantum number of a single-particle box mode; the wavefunction is
/// `√(2/π)·sin(n x)` with energy `n²`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ModeIndex(u32);

impl ModeIndex {
    pub fn new(n: u32) -> Result<Self, HilbertError> {
        if n >= 1 {
            Ok(ModeIndex(n))
        } else {
            Err(HilbertError::InvalidMode(n))
        }
    }

    pub fn get(self) -> u32 {
        self.0
    }

    /// Mode energy `n²` in units of the lowest box level.
    pub fn energy(self) -> u64 {
        u64::from(self.0) * u64::from(self.0)
    }

    /// Sign under `x → π − x`: `sin(n(π−x)) = (−1)^(n+1) sin(nx)`.
    pub fn parity(self) -> Parity {
        if self.0 % 2 == 1 {
            Parity::Plus
        } else {
            Parity::Minus
        }
    }
}

impl fmt::Display for ModeIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Parity {
    Plus,
    Minus,
}

impl Parity {
    pub fn sign(self) -> i32 {
        match self {
            Parity::Plus => 1,
            Parity::Minus => -1,
        }
    }

    pub fn from_sign(s: i32) -> Parity {
        if s >= 0 {
            Parity::Plus
        } else {
            Parity::Minus
        }
    }
}

impl std::ops::Mul for Parity {
    type Output = Parity;
    fn mul(self, rhs: Parity) -> Parity {
        if self == rhs {
            Parity::Plus
        } else {
            Parity::Minus
        }
    }
}

impl fmt::Display for Parity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Parity::Plus => write!(f, "+"),
            Parity::Minus => write!(f, "-"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParityFilter {
    Plus,
    Minus,
    Both,
}

impl ParityFilter {
    fn admits(self, p: Parity) -> bool {
        match self {
            ParityFilter::Plus => p == Parity::Plus,
            ParityFilter::Minus => p == Parity::Minus,
            ParityFilter::Both => true,
        }
    }
}

/// Symmetrized occupation state of `N` bosons over box modes, stored as the
/// non-decreasing list of occupied mode numbers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FockState {
    modes: Vec<u32>,
    e0: u64,
    parity: Parity,
}

impl FockState {
    /// Builds from any list of mode numbers; sorts them internally.
    pub fn new(modes: &[ModeIndex]) -> Result<Self, HilbertError> {
        if modes.is_empty() {
            return Err(HilbertError::NoParticles);
        }
        let mut m: Vec<u32> = modes.iter().map(|n| n.get()).collect();
        m.sort_unstable();
        Ok(Self::from_sorted(m))
    }

    fn from_sorted(modes: Vec<u32>) -> Self {
        let e0 = modes.iter().map(|&n| u64::from(n) * u64::from(n)).sum();
        let even = modes.iter().filter(|&&n| n % 2 == 0).count();
        let parity = if even % 2 == 0 {
            Parity::Plus
        } else {
            Parity::Minus
        };
        FockState { modes, e0, parity }
    }

    pub fn n_particles(&self) -> u32 {
        self.modes.len() as u32
    }

    /// Non-decreasing occupied mode numbers, one entry per particle.
    pub fn modes(&self) -> &[u32] {
        &self.modes
    }

    /// Run-length view: (mode, occupation count) with distinct ascending modes.
    pub fn occupations(&self) -> Vec<(ModeIndex, u32)> {
        let mut out: Vec<(ModeIndex, u32)> = Vec::new();
        for &n in &self.modes {
            match out.last_mut() {
                Some((m, c)) if m.get() == n => *c += 1,
                _ => out.push((ModeIndex(n), 1)),
            }
        }
        out
    }

    /// Total non-interacting energy `Σ nᵢ²`.
    pub fn e0(&self) -> u64 {
        self.e0
    }

    pub fn parity(&self) -> Parity {
        self.parity
    }
}

impl fmt::Display for FockState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (k, n) in self.modes.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{n}")?;
        }
        write!(f, "}}")
    }
}

/// Spatial parity of a Fock state: product of per-particle mode parities,
/// i.e. `(−1)^(number of particles in even-n modes)`.
pub fn fock_parity(state: &FockState) -> Parity {
    let even: u32 = state
        .occupations()
        .iter()
        .filter(|(m, _)| m.parity() == Parity::Minus)
        .map(|&(_, c)| c)
        .sum();
    if even % 2 == 0 {
        Parity::Plus
    } else {
        Parity::Minus
    }
}

/// Energy-truncated bosonic basis of one parity sector (or both), ordered by
/// `(e0, lexicographic mode list)`.
#[derive(Debug, Clone)]
pub struct SectorBasis {
    n_particles: u32,
    e_cut: f64,
    filter: ParityFilter,
    states: Vec<FockState>,
    index: HashMap<Vec<u32>, usize>,
}

impl SectorBasis {
    pub fn n_particles(&self) -> u32 {
        self.n_particles
    }

    pub fn e_cut(&self) -> f64 {
        self.e_cut
    }

    pub fn parity_filter(&self) -> ParityFilter {
        self.filter
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn states(&self) -> &[FockState] {
        &self.states
    }

    pub fn state(&self, i: usize) -> &FockState {
        &self.states[i]
    }

    /// Index of the state with the given sorted mode list, if present.
    pub fn position(&self, sorted_modes: &[u32]) -> Option<usize> {
        self.index.get(sorted_modes).copied()
    }

    /// Vector of `e0` per basis state: the kinetic-energy observable in the
    /// Fock basis, where it is diagonal.
    pub fn kinetic_diagonal(&self) -> Vec<f64> {
        self.states.iter().map(|s| s.e0 as f64).collect()
    }
}

/// Enumerates every bosonic occupation state with `e0 ≤ E_cut` passing the
/// parity filter. An `E_cut` below the sector minimum yields an empty basis.
pub fn build_basis(n_particles: u32, e_cut: f64, filter: ParityFilter) -> SectorBasis {
    let mut states = Vec::new();
    if n_particles >= 1 && e_cut >= 0.0 {
        let cap = e_cut.floor().max(0.0) as u64;
        let mut modes = Vec::with_capacity(n_particles as usize);
        enumerate(n_particles, 1, cap, &mut modes, &mut states);
    }
    states.retain(|s: &FockState| filter.admits(s.parity));
    states.sort_by(|a, b| (a.e0, &a.modes).cmp(&(b.e0, &b.modes)));
    let index = states
        .iter()
        .enumerate()
        .map(|(i, s)| (s.modes.clone(), i))
        .collect();
    SectorBasis {
        n_particles,
        e_cut,
        filter,
        states,
        index,
    }
}

fn enumerate(left: u32, n_min: u32, e_left: u64, modes: &mut Vec<u32>, out: &mut Vec<FockState>) {
    if left == 0 {
        out.push(FockState::from_sorted(modes.clone()));
        return;
    }
    // remaining particles each cost at least n², so n² ≤ e_left / left
    let mut n = n_min;
    while u64::from(n) * u64::from(n) * u64::from(left) <= e_left {
        modes.push(n);
        enumerate(
            left - 1,
            n,
            e_left - u64::from(n) * u64::from(n),
            modes,
            out,
        );
        modes.pop();
        n += 1;
    }
}

/// Physical parameters of `H = T + τ·V + γ·U`: `N` bosons, `W` wells
/// (`W−1` equally spaced barriers), barrier strength `τ`, contact strength
/// `γ`, all unitless and non-negative.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HamiltonianParams {
    n_particles: u32,
    wells: u32,
    tau: f64,
    gamma: f64,
}

impl HamiltonianParams {
    pub fn new(n_particles: u32, wells: u32, tau: f64, gamma: f64) -> Result<Self, HilbertError> {
        if n_particles < 1 {
            return Err(HilbertError::NoParticles);
        }
        if wells < 1 {
            return Err(HilbertError::InvalidWells(wells));
        }
        if !tau.is_finite() || tau < 0.0 {
            return Err(HilbertError::InvalidCoupling {
                name: "tau",
                value: tau,
            });
        }
        if !gamma.is_finite() || gamma < 0.0 {
            return Err(HilbertError::InvalidCoupling {
                name: "gamma",
                value: gamma,
            });
        }
        Ok(HamiltonianParams {
            n_particles,
            wells,
            tau,
            gamma,
        })
    }

    pub fn n_particles(&self) -> u32 {
        self.n_particles
    }

    pub fn wells(&self) -> u32 {
        self.wells
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }
}

/// Dense real symmetric matrix; the `(i,j)` and `(j,i)` entries are written
/// from one computation, so symmetry is exact as stored.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    dim: usize,
    data: Vec<f64>,
}

impl SymMatrix {
    pub fn zeros(dim: usize) -> Self {
        SymMatrix {
            dim,
            data: vec![0.0; dim * dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.dim + j]
    }

    /// Sets `(i,j)` and `(j,i)` together.
    pub fn set_sym(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.dim + j] = v;
        self.data[j * self.dim + i] = v;
    }

    fn add_sym(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.dim + j] += v;
        if i != j {
            self.data[j * self.dim + i] = self.data[i * self.dim + j];
        }
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// Consumes the matrix, returning its dense storage. A symmetric matrix
    /// reads the same row-major and column-major, so the buffer feeds the
    /// column-major eigensolver directly.
    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    /// Largest `|H_ij − H_ji|`; zero for matrices built symmetrically.
    pub fn max_asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.dim {
            for j in (i + 1)..self.dim {
                worst = worst.max((self.get(i, j) - self.get(j, i)).abs());
            }
        }
        worst
    }
}

/// One-body barrier matrix element between normalized box modes `a` and `b`:
/// `v_ab = (2/π) Σ_{k=1}^{W−1} sin(aπk/W) sin(bπk/W)`, evaluated in closed
/// form. The sum collapses to a Bragg rule: zero unless `a ≡ ±b (mod 2W)`,
/// and exactly zero whenever `a+b` is odd, which makes parity superselection
/// exact in the assembled matrix.
pub fn barrier_element(a: ModeIndex, b: ModeIndex, wells: u32) -> f64 {
    barrier_kernel(a.get(), b.get(), wells)
}

fn barrier_kernel(a: u32, b: u32, wells: u32) -> f64 {
    if (a + b) % 2 == 1 {
        return 0.0;
    }
    // Σ_{k=1}^{W−1} cos(mπk/W) = W−1 if 2W | m, else −1 (m even)
    let cos_sum = |m: u32| -> f64 {
        if m % (2 * wells) == 0 {
            (wells - 1) as f64
        } else {
            -1.0
        }
    };
    let diff = a.abs_diff(b);
    let sum = a + b;
    (cos_sum(diff) - cos_sum(sum)) / std::f64::consts::PI
}

/// Contact matrix element `⟨ab|δ(x₁−x₂)|cd⟩ = (4/π²)∫₀^π Π sin` between
/// normalized mode pairs. The four-sine integral collapses to a signed sum of
/// Kronecker deltas on `±a±b±c±d = 0`; exactly zero when `a+b+c+d` is odd.
pub fn interaction_element(a: ModeIndex, b: ModeIndex, c: ModeIndex, d: ModeIndex) -> f64 {
    interaction_kernel(a.get(), b.get(), c.get(), d.get())
}

fn interaction_kernel(a: u32, b: u32, c: u32, d: u32) -> f64 {
    // ∫₀^π cos(px)cos(qx)dx for integer p,q ≥ 0
    let cc = |p: u32, q: u32| -> f64 {
        if p != q {
            0.0
        } else if p == 0 {
            std::f64::consts::PI
        } else {
            std::f64::consts::FRAC_PI_2
        }
    };
    let ab_d = a.abs_diff(b);
    let ab_s = a + b;
    let cd_d = c.abs_diff(d);
    let cd_s = c + d;
    let integral = 0.25 * (cc(ab_d, cd_d) - cc(ab_d, cd_s) - cc(ab_s, cd_d) + cc(ab_s, cd_s));
    4.0 / (std::f64::consts::PI * std::f64::consts::PI) * integral
}

/// Assembles the dense symmetric Hamiltonian `diag(e0) + τ·V + γ·U` over the
/// given basis. Bosonic ladder factors: annihilating from occupation `n`
/// carries `√n`, creating onto `n` carries `√(n+1)`; the two-body operator is
/// `½ Σ u_abcd a†_a a†_b a_d a_c` with unordered-pair multiplicities spelled
/// out below. Each matrix cell is computed once (from the higher-index
/// column) and mirrored, so the result is exactly symmetric.
pub fn assemble_hamiltonian(
    basis: &SectorBasis,
    params: &HamiltonianParams,
) -> Result<SymMatrix, HilbertError> {
    if basis.n_particles() != params.n_particles() {
        return Err(HilbertError::ParticleMismatch {
            basis: basis.n_particles(),
            params: params.n_particles(),
        });
    }
    let d = basis.len();
    let cap = basis.e_cut().floor().max(0.0) as u64;
    let mut h = SymMatrix::zeros(d);

    let columns: Vec<Vec<(usize, f64)>> = {
        use rayon::prelude::*;
        (0..d)
            .into_par_iter()
            .map(|j| column_contributions(basis, params, cap, j))
            .collect()
    };
    for (j, col) in columns.into_iter().enumerate() {
        for (i, v) in col {
            h.add_sym(i, j, v);
        }
    }
    Ok(h)
}

/// All couplings `⟨i|H|j⟩` with `i ≤ j` reachable from column `j`.
fn column_contributions(
    basis: &SectorBasis,
    params: &HamiltonianParams,
    cap: u64,
    j: usize,
) -> Vec<(usize, f64)> {
    let state = basis.state(j);
    let occ = state.occupations();
    let e0 = state.e0();
    let mut out: Vec<(usize, f64)> = Vec::new();
    let mut diag = e0 as f64;
    let mut scratch: Vec<u32> = Vec::with_capacity(state.modes().len());

    if params.tau() > 0.0 && params.wells() > 1 {
        let tau = params.tau();
        let wells = params.wells();
        for &(bm, nb) in &occ {
            let b = bm.get();
            // same-parity modes only; opposite parity vanishes exactly
            let slack = cap + u64::from(b) * u64::from(b) - e0;
            let a_max = (slack as f64).sqrt().floor() as u32;
            let mut a = if b % 2 == 1 { 1 } else { 2 };
            while a <= a_max {
                let v = barrier_kernel(a, b, wells);
                if v != 0.0 {
                    if a == b {
                        diag += tau * v * f64::from(nb);
                    } else {
                        let na = mode_count(&occ, a);
                        replace_modes(state.modes(), &[b], &[a], &mut scratch);
                        if let Some(i) = basis.position(&scratch) {
                            if i <= j {
                                let amp =
                                    tau * v * (f64::from(nb) * f64::from(na + 1)).sqrt();
                                out.push((i, amp));
                            }
                        }
                    }
                }
                a += 2;
            }
        }
    }

    if params.gamma() > 0.0 && state.modes().len() >= 2 {
        let gamma = params.gamma();
        for ci in 0..occ.len() {
            let (cm, nc) = occ[ci];
            let c = cm.get();
            for cj in ci..occ.len() {
                let (dm, nd) = occ[cj];
                let dmode = dm.get();
                let (rem, pair_mult) = if ci == cj {
                    if nc < 2 {
                        continue;
                    }
                    ((f64::from(nc) * f64::from(nc - 1)).sqrt(), 1.0)
                } else {
                    ((f64::from(nc) * f64::from(nd)).sqrt(), 2.0)
                };
                let csum = c + dmode;
                let cdif = dmode.abs_diff(c);
                let slack = cap + u64::from(c) * u64::from(c) + u64::from(dmode) * u64::from(dmode)
                    - e0;
                // b ≥ a, so 2a² ≤ slack
                let a_max = ((slack / 2) as f64).sqrt().floor() as u32 + 1;
                let mut cands: Vec<u32> = Vec::with_capacity(6);
                for a in 1..=a_max {
                    cands.clear();
                    for b in [
                        csum.checked_sub(a),
                        a.checked_sub(csum),
                        Some(a + csum),
                        cdif.checked_sub(a),
                        a.checked_sub(cdif),
                        Some(a + cdif),
                    ]
                    .into_iter()
                    .flatten()
                    {
                        if b >= a && !cands.contains(&b) {
                            cands.push(b);
                        }
                    }
                    for &b in &cands {
                        let e_new = e0 + u64::from(a) * u64::from(a) + u64::from(b) * u64::from(b)
                            - u64::from(c) * u64::from(c)
                            - u64::from(dmode) * u64::from(dmode);
                        if e_new > cap {
                            continue;
                        }
                        let u = interaction_kernel(a, b, c, dmode);
                        if u == 0.0 {
                            continue;
                        }
                        replace_modes(state.modes(), &[c, dmode], &[a, b], &mut scratch);
                        let (fa, fb) = creation_factors(&scratch, a, b);
                        let add = (f64::from(fa) * f64::from(fb)).sqrt();
                        let ord_mult = if a == b { 1.0 } else { 2.0 };
                        let amp = 0.5 * gamma * pair_mult * ord_mult * u * rem * add;
                        if a == c && b == dmode {
                            diag += amp;
                        } else if let Some(i) = basis.position(&scratch) {
                            if i <= j {
                                out.push((i, amp));
                            }
                        }
                    }
                }
            }
        }
    }

    out.push((j, diag));
    out
}

fn mode_count(occ: &[(ModeIndex, u32)], mode: u32) -> u32 {
    occ.iter()
        .find(|(m, _)| m.get() == mode)
        .map(|&(_, c)| c)
        .unwrap_or(0)
}

/// Creation factors for `a†_a a†_b` read off the target state's occupations
/// `m`: `√(m_a m_b)` for `a ≠ b`, `√(m_a(m_a−1))` for `a = b`, equal to the
/// usual `√((n+1)(n+2))` / `√((n_a+1)(n_b+1))` ladder products.
fn creation_factors(target_modes: &[u32], a: u32, b: u32) -> (u32, u32) {
    let ma = target_modes.iter().filter(|&&n| n == a).count() as u32;
    if a == b {
        (ma, ma.saturating_sub(1))
    } else {
        let mb = target_modes.iter().filter(|&&n| n == b).count() as u32;
        (ma, mb)
    }
}

/// Merge-rewrites a sorted mode list with `remove` taken out and `add` put in.
fn replace_modes(base: &[u32], remove: &[u32], add: &[u32], out: &mut Vec<u32>) {
    out.clear();
    out.extend_from_slice(base);
    for &r in remove {
        let pos = out.iter().position(|&n| n == r).expect("mode present");
        out.remove(pos);
    }
    for &a in add {
        let pos = out.partition_point(|&n| n < a);
        out.insert(pos, a);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(n: u32) -> ModeIndex {
        ModeIndex::new(n).unwrap()
    }

    #[test]
    fn basis_two_particles_cut_ten() {
        let basis = build_basis(2, 10.0, ParityFilter::Plus);
        let modes: Vec<&[u32]> = basis.states().iter().map(|s| s.modes()).collect();
        assert_eq!(modes, vec![&[1, 1][..], &[2, 2][..], &[1, 3][..]]);
    }

    #[test]
    fn basis_single_particle_both_parities() {
        let basis = build_basis(1, 10.0, ParityFilter::Both);
        let got: Vec<(u32, Parity)> = basis
            .states()
            .iter()
            .map(|s| (s.modes()[0], s.parity()))
            .collect();
        assert_eq!(
            got,
            vec![(1, Parity::Plus), (2, Parity::Minus), (3, Parity::Plus)]
        );
    }

    #[test]
    fn basis_below_minimum_energy_is_empty() {
        let basis = build_basis(2, 1.0, ParityFilter::Plus);
        assert!(basis.is_empty());
    }

    #[test]
    fn parity_examples() {
        let s11 = FockState::new(&[m(1), m(1)]).unwrap();
        let s12 = FockState::new(&[m(1), m(2)]).unwrap();
        let s22 = FockState::new(&[m(2), m(2)]).unwrap();
        assert_eq!(fock_parity(&s11), Parity::Plus);
        assert_eq!(fock_parity(&s12), Parity::Minus);
        assert_eq!(fock_parity(&s22), Parity::Plus);
    }

    #[test]
    fn barrier_element_closed_form_values() {
        let two_pi = 2.0 / std::f64::consts::PI;
        assert!((barrier_element(m(1), m(1), 2) - two_pi).abs() < 1e-15);
        // mode 2 has a node on the W=2 barrier
        for b in 1..=8 {
            assert_eq!(barrier_element(m(2), m(b), 2), 0.0);
        }
        assert!((barrier_element(m(1), m(1), 3) - 3.0 / std::f64::consts::PI).abs() < 1e-15);
        // odd a+b vanishes exactly for every W
        for w in 1..=7 {
            assert_eq!(barrier_element(m(2), m(5), w), 0.0);
            assert_eq!(barrier_element(m(1), m(4), w), 0.0);
        }
        // single well has no barrier at all
        for a in 1..=6 {
            for b in 1..=6 {
                assert_eq!(barrier_element(m(a), m(b), 1), 0.0);
            }
        }
    }

    #[test]
    fn barrier_element_matches_direct_sine_sum() {
        for w in [2u32, 3, 5, 10] {
            for a in 1..=14u32 {
                for b in 1..=14u32 {
                    let mut s = 0.0;
                    for k in 1..w {
                        let x = std::f64::consts::PI * f64::from(k) / f64::from(w);
                        s += (f64::from(a) * x).sin() * (f64::from(b) * x).sin();
                    }
                    let direct = 2.0 / std::f64::consts::PI * s;
                    let closed = barrier_element(m(a), m(b), w);
                    assert!(
                        (closed - direct).abs() < 1e-12,
                        "a={a} b={b} W={w}: {closed} vs {direct}"
                    );
                }
            }
        }
    }

    #[test]
    fn interaction_element_known_values() {
        let pi = std::f64::consts::PI;
        assert!((interaction_element(m(1), m(1), m(1), m(1)) - 1.5 / pi).abs() < 1e-15);
        assert_eq!(interaction_element(m(1), m(1), m(1), m(2)), 0.0);
        assert!((interaction_element(m(1), m(1), m(1), m(3)) + 0.5 / pi).abs() < 1e-15);
    }

    #[test]
    fn interaction_element_symmetries() {
        let cases = [(1, 2, 3, 4), (2, 2, 4, 6), (1, 5, 3, 3), (2, 7, 4, 5)];
        for (a, b, c, d) in cases {
            let base = interaction_element(m(a), m(b), m(c), m(d));
            assert_eq!(base, interaction_element(m(b), m(a), m(c), m(d)));
            assert_eq!(base, interaction_element(m(a), m(b), m(d), m(c)));
            assert_eq!(base, interaction_element(m(c), m(d), m(a), m(b)));
        }
    }

    #[test]
    fn assemble_free_case_is_diagonal_e0() {
        let basis = build_basis(3, 30.0, ParityFilter::Plus);
        let params = HamiltonianParams::new(3, 4, 0.0, 0.0).unwrap();
        let h = assemble_hamiltonian(&basis, &params).unwrap();
        for i in 0..basis.len() {
            for j in 0..basis.len() {
                let want = if i == j {
                    basis.state(i).e0() as f64
                } else {
                    0.0
                };
                assert_eq!(h.get(i, j), want);
            }
        }
    }

    #[test]
    fn assemble_exactly_symmetric() {
        let basis = build_basis(3, 60.0, ParityFilter::Plus);
        let params = HamiltonianParams::new(3, 3, 1.7, 2.9).unwrap();
        let h = assemble_hamiltonian(&basis, &params).unwrap();
        assert_eq!(h.max_asymmetry(), 0.0);
    }

    #[test]
    fn assemble_rejects_particle_mismatch() {
        let basis = build_basis(2, 20.0, ParityFilter::Plus);
        let params = HamiltonianParams::new(3, 2, 1.0, 1.0).unwrap();
        assert!(matches!(
            assemble_hamiltonian(&basis, &params),
            Err(HilbertError::ParticleMismatch { .. })
        ));
    }

    #[test]
    fn parity_superselection_exact() {
        // assemble over both parities: cross-parity blocks must be exactly zero
        let basis = build_basis(2, 40.0, ParityFilter::Both);
        let params = HamiltonianParams::new(2, 3, 2.3, 3.1).unwrap();
        let h = assemble_hamiltonian(&basis, &params).unwrap();
        for i in 0..basis.len() {
            for j in 0..basis.len() {
                if basis.state(i).parity() != basis.state(j).parity() {
                    assert_eq!(h.get(i, j), 0.0, "parity mixing at ({i},{j})");
                }
            }
        }
    }

    #[test]
    fn even_mode_states_decouple_from_w2_barrier() {
        // W=2: every even mode has a node on the barrier, so states built from
        // even modes only have vanishing barrier rows
        let basis = build_basis(2, 80.0, ParityFilter::Plus);
        let free = HamiltonianParams::new(2, 2, 0.0, 0.0).unwrap();
        let barred = HamiltonianParams::new(2, 2, 5.0, 0.0).unwrap();
        let h0 = assemble_hamiltonian(&basis, &free).unwrap();
        let h1 = assemble_hamiltonian(&basis, &barred).unwrap();
        for (j, s) in basis.states().iter().enumerate() {
            if s.modes().iter().all(|&n| n % 2 == 0) {
                for i in 0..basis.len() {
                    assert_eq!(
                        h1.get(i, j) - h0.get(i, j),
                        0.0,
                        "barrier leaks into even-mode state {s} at row {i}"
                    );
                }
            }
        }
    }

    #[test]
    fn basis_order_independence() {
        // permuting the basis and permuting H back gives the identical matrix
        let basis = build_basis(2, 50.0, ParityFilter::Plus);
        let params = HamiltonianParams::new(2, 3, 1.3, 0.7).unwrap();
        let h = assemble_hamiltonian(&basis, &params).unwrap();
        let d = basis.len();
        let perm: Vec<usize> = (0..d).map(|i| (i * 7 + 3) % d).collect();
        {
            // perm must be a bijection for this test; d coprime with 7 suffices
            let mut seen = vec![false; d];
            for &p in &perm {
                assert!(!seen[p]);
                seen[p] = true;
            }
        }
        // rebuild each entry through mode-list lookups of the permuted states
        for i in 0..d {
            for j in 0..d {
                let pi = basis.position(basis.state(perm[i]).modes()).unwrap();
                let pj = basis.position(basis.state(perm[j]).modes()).unwrap();
                assert_eq!(h.get(pi, pj), h.get(perm[i], perm[j]));
            }
        }
    }

    #[test]
    fn eigenvalues_monotone_in_couplings() {
        // V and U are positive semidefinite, so each sorted eigenvalue is
        // non-decreasing along tau and gamma
        let basis = build_basis(2, 60.0, ParityFilter::Plus);
        let grid: Vec<f64> = vec![0.0, 0.5, 1.5, 4.0, 10.0];
        let spectrum_at = |tau: f64, gamma: f64| -> Vec<f64> {
            let params = HamiltonianParams::new(2, 2, tau, gamma).unwrap();
            let h = assemble_hamiltonian(&basis, &params).unwrap();
            let dim = h.dim();
            let (vals, _) = crate::linalg::symmetric_eigen(dim, h.into_data(), false).unwrap();
            vals
        };
        for (fixed, vary_tau) in [(0.8, true), (2.5, false)] {
            let mut prev: Option<Vec<f64>> = None;
            for &g in &grid {
                let vals = if vary_tau {
                    spectrum_at(g, fixed)
                } else {
                    spectrum_at(fixed, g)
                };
                if let Some(p) = prev {
                    for (lo, hi) in p.iter().zip(&vals) {
                        assert!(hi - lo > -1e-9, "eigenvalue decreased: {lo} -> {hi}");
                    }
                }
                prev = Some(vals);
            }
        }
    }
}
