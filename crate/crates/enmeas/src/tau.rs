//! The battery quality τ for pure, mixed, coherent and continuous battery states.

use crate::linalg::{eig_hermitian, CMatrix, HermitianMatrix, LinalgError, C64};
use crate::quad::{integrate, Quad, QuadError};
use crate::spectrum::ChainDecomposition;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::sync::Arc;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TauError {
    #[error("state has {state} levels but the chain decomposition covers {chains}")]
    DimensionMismatch { state: usize, chains: usize },
    #[error("state is not normalized: norm² = {0}")]
    NotNormalized(f64),
    #[error("density matrix is not positive semidefinite (min eigenvalue {0:.3e})")]
    NotPositive(f64),
    #[error("energy density integrates to {mass}, not 1")]
    Unnormalized { mass: f64 },
    #[error("invalid parameter: {0}")]
    BadParameter(String),
    #[error(transparent)]
    Quadrature(#[from] QuadError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

const NORM_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub enum StateKind {
    Pure(Vec<C64>),
    Mixed(HermitianMatrix),
}

/// A battery state over the levels of a battery Hamiltonian, indexed like the level list.
#[derive(Debug, Clone, PartialEq)]
pub struct BatteryState {
    pub levels: Vec<f64>,
    pub kind: StateKind,
}

impl BatteryState {
    pub fn pure(levels: Vec<f64>, amplitudes: Vec<C64>) -> Result<Self, TauError> {
        if levels.len() != amplitudes.len() {
            return Err(TauError::DimensionMismatch { state: amplitudes.len(), chains: levels.len() });
        }
        let n2: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
        if (n2 - 1.0).abs() > NORM_TOL {
            return Err(TauError::NotNormalized(n2));
        }
        Ok(BatteryState { levels, kind: StateKind::Pure(amplitudes) })
    }

    pub fn mixed(levels: Vec<f64>, rho: HermitianMatrix) -> Result<Self, TauError> {
        if levels.len() != rho.dim() {
            return Err(TauError::DimensionMismatch { state: rho.dim(), chains: levels.len() });
        }
        let tr = rho.trace();
        if (tr - 1.0).abs() > NORM_TOL {
            return Err(TauError::NotNormalized(tr));
        }
        let lmin = eig_hermitian(&rho).eigenvalues.first().copied().unwrap_or(0.0);
        if lmin < -NORM_TOL {
            return Err(TauError::NotPositive(lmin));
        }
        Ok(BatteryState { levels, kind: StateKind::Mixed(rho) })
    }

    /// Pure state on the ladder 0, Δ, 2Δ, ... with real amplitudes.
    pub fn ladder_real(amplitudes: &[f64], delta: f64) -> Result<Self, TauError> {
        let levels = (0..amplitudes.len()).map(|k| k as f64 * delta).collect();
        Self::pure(levels, amplitudes.iter().map(|&a| C64::new(a, 0.0)).collect())
    }

    /// Energy eigenstate |k⟩.
    pub fn eigenstate(levels: Vec<f64>, k: usize) -> Self {
        let mut a = vec![C64::new(0.0, 0.0); levels.len()];
        a[k] = C64::new(1.0, 0.0);
        BatteryState { levels, kind: StateKind::Pure(a) }
    }

    pub fn dim(&self) -> usize {
        self.levels.len()
    }

    /// ⟨a|σ|b⟩
    pub fn element(&self, a: usize, b: usize) -> C64 {
        match &self.kind {
            StateKind::Pure(c) => c[a] * c[b].conj(),
            StateKind::Mixed(rho) => rho.get(a, b),
        }
    }

    pub fn density(&self) -> HermitianMatrix {
        match &self.kind {
            StateKind::Pure(c) => HermitianMatrix::projector(c),
            StateKind::Mixed(rho) => rho.clone(),
        }
    }

    pub fn populations(&self) -> Vec<f64> {
        (0..self.dim()).map(|k| self.element(k, k).re).collect()
    }

    pub fn mean_energy(&self) -> f64 {
        self.populations().iter().zip(&self.levels).map(|(p, e)| p * e).sum()
    }

    pub fn amplitudes(&self) -> Option<&[C64]> {
        match &self.kind {
            StateKind::Pure(c) => Some(c),
            StateKind::Mixed(_) => None,
        }
    }
}

#[derive(Serialize, Deserialize)]
struct BatteryStateJson {
    levels: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    amplitudes: Option<Vec<[f64; 2]>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    density: Option<CMatrix>,
}

impl Serialize for BatteryState {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let j = match &self.kind {
            StateKind::Pure(c) => BatteryStateJson {
                levels: self.levels.clone(),
                amplitudes: Some(c.iter().map(|x| [x.re, x.im]).collect()),
                density: None,
            },
            StateKind::Mixed(rho) => {
                BatteryStateJson { levels: self.levels.clone(), amplitudes: None, density: Some(rho.as_matrix().clone()) }
            }
        };
        j.serialize(s)
    }
}

impl<'de> Deserialize<'de> for BatteryState {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        use serde::de::Error;
        let j = BatteryStateJson::deserialize(d)?;
        match (j.amplitudes, j.density) {
            (Some(a), None) => {
                BatteryState::pure(j.levels, a.into_iter().map(|[re, im]| C64::new(re, im)).collect()).map_err(D::Error::custom)
            }
            (None, Some(m)) => {
                let rho = HermitianMatrix::new(m).map_err(D::Error::custom)?;
                BatteryState::mixed(j.levels, rho).map_err(D::Error::custom)
            }
            _ => Err(D::Error::custom("battery state needs exactly one of `amplitudes` or `density`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TauResult {
    pub tau: f64,
    pub epsilon: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub optimizer: Option<BatteryState>,
}

impl TauResult {
    pub fn new(tau: f64, optimizer: Option<BatteryState>) -> Self {
        TauResult { tau, epsilon: epsilon_from_tau(tau), optimizer }
    }
}

pub fn epsilon_from_tau(tau: f64) -> f64 {
    (1.0 - tau) / 2.0
}

/// Σ_j Σ_k |⟨j,k+1|σ|j,k⟩| for the given state.
pub fn tau_of_state(state: &BatteryState, chains: &ChainDecomposition) -> Result<TauResult, TauError> {
    if state.dim() != chains.num_levels {
        return Err(TauError::DimensionMismatch { state: state.dim(), chains: chains.num_levels });
    }
    let tau = chains
        .chains
        .iter()
        .flat_map(|ch| ch.level_ids.windows(2))
        .map(|w| state.element(w[1], w[0]).norm())
        .sum();
    Ok(TauResult::new(tau, None))
}

pub fn tau_finite(d: usize) -> f64 {
    assert!(d >= 1, "a battery needs at least one level");
    (PI / (d as f64 + 1.0)).cos()
}

/// The d×d tridiagonal matrix with 1/2 on both off-diagonals.
pub fn a_matrix(d: usize) -> HermitianMatrix {
    let mut m = CMatrix::zeros(d, d);
    for k in 0..d.saturating_sub(1) {
        m[(k, k + 1)] = C64::new(0.5, 0.0);
        m[(k + 1, k)] = C64::new(0.5, 0.0);
    }
    HermitianMatrix::new(m).expect("symmetric by construction")
}

/// Amplitudes √(2/(d+1))·sin((k+1)π/(d+1)) on the ladder 0..(d−1)Δ.
pub fn optimal_finite_state(d: usize, delta: f64) -> BatteryState {
    assert!(d >= 1);
    let norm = (2.0 / (d as f64 + 1.0)).sqrt();
    let amps: Vec<f64> = (0..d).map(|k| norm * ((k as f64 + 1.0) * PI / (d as f64 + 1.0)).sin()).collect();
    let levels = (0..d).map(|k| k as f64 * delta).collect();
    BatteryState { levels, kind: StateKind::Pure(amps.into_iter().map(|a| C64::new(a, 0.0)).collect()) }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CoherentTau {
    pub tau: f64,
    pub tail_bound: f64,
    pub terms: usize,
}

/// τ of the coherent state with mean photon number |α|²:
/// Σ_k e^{−|α|²} |α|^{2k+1} / √(k!(k+1)!).
pub fn tau_coherent(alpha_sq: f64, max_terms: usize) -> CoherentTau {
    assert!(alpha_sq >= 0.0);
    if alpha_sq == 0.0 {
        return CoherentTau { tau: 0.0, tail_bound: 0.0, terms: 1 };
    }
    let la = alpha_sq.ln();
    let mut ln_kfact = 0.0; // ln k!
    let mut sum = 0.0;
    let mut k = 0usize;
    let mut last = 0.0;
    while k < max_terms {
        let ln_k1fact = ln_kfact + ((k + 1) as f64).ln();
        let term = (-alpha_sq + (k as f64 + 0.5) * la - 0.5 * (ln_kfact + ln_k1fact)).exp();
        sum += term;
        last = term;
        k += 1;
        ln_kfact = ln_k1fact;
        if k as f64 > alpha_sq && term < 1e-16 * sum {
            break;
        }
    }
    // past the peak consecutive ratios |α|²/√((k+1)(k+2)) decrease, so the tail is geometric
    let r = alpha_sq / (((k + 1) * (k + 2)) as f64).sqrt();
    let tail_bound = if r < 1.0 { last * r / (1.0 - r) } else { f64::INFINITY };
    CoherentTau { tau: sum, tail_bound, terms: k }
}

/// A probability density over energies with a bounded support.
#[derive(Clone)]
pub struct EnergyDensity {
    f: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    pub support: (f64, f64),
    /// Smallest length scale of the density, used to seed the quadrature grid.
    pub scale: f64,
}

impl std::fmt::Debug for EnergyDensity {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("EnergyDensity").field("support", &self.support).field("scale", &self.scale).finish()
    }
}

impl EnergyDensity {
    pub fn custom(f: impl Fn(f64) -> f64 + Send + Sync + 'static, support: (f64, f64), scale: f64) -> Self {
        EnergyDensity { f: Arc::new(f), support, scale }
    }

    /// Normal density with the given variance.
    pub fn gaussian(mean: f64, variance: f64) -> Self {
        let sd = variance.sqrt();
        let norm = 1.0 / (2.0 * PI * variance).sqrt();
        Self::custom(move |e| norm * (-(e - mean).powi(2) / (2.0 * variance)).exp(), (mean - 40.0 * sd, mean + 40.0 * sd), sd)
    }

    /// (m/s)^{3/2} (2/√π) e^{−mE/s} E^{1/2} on E ≥ 0.
    pub fn maxwell(mass: f64, s: f64) -> Self {
        let a = mass / s;
        let norm = a.powf(1.5) * 2.0 / PI.sqrt();
        Self::custom(move |e| if e > 0.0 { norm * (-a * e).exp() * e.sqrt() } else { 0.0 }, (0.0, 80.0 / a), 0.05 / a)
    }

    /// Weighted sum of densities.
    pub fn mixture(parts: Vec<(f64, EnergyDensity)>) -> Self {
        let lo = parts.iter().map(|p| p.1.support.0).fold(f64::INFINITY, f64::min);
        let hi = parts.iter().map(|p| p.1.support.1).fold(f64::NEG_INFINITY, f64::max);
        let scale = parts.iter().map(|p| p.1.scale).fold(f64::INFINITY, f64::min);
        Self::custom(move |e| parts.iter().map(|(w, d)| w * d.eval(e)).sum(), (lo, hi), scale)
    }

    /// Piecewise-linear density through the given grid points.
    pub fn tabulated(energies: Vec<f64>, values: Vec<f64>) -> Result<Self, TauError> {
        if energies.len() != values.len() || energies.len() < 2 {
            return Err(TauError::BadParameter("tabulated density needs matching grids of length ≥ 2".into()));
        }
        if energies.windows(2).any(|w| w[1] <= w[0]) || values.iter().any(|v| *v < 0.0 || !v.is_finite()) {
            return Err(TauError::BadParameter("grid must increase and values must be nonnegative".into()));
        }
        let support = (energies[0], *energies.last().unwrap());
        let scale = energies.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
        Ok(Self::custom(
            move |e| {
                if e < energies[0] || e > *energies.last().unwrap() {
                    return 0.0;
                }
                let i = energies.partition_point(|&x| x <= e).clamp(1, energies.len() - 1);
                let t = (e - energies[i - 1]) / (energies[i] - energies[i - 1]);
                values[i - 1] + t * (values[i] - values[i - 1])
            },
            support,
            scale,
        ))
    }

    pub fn eval(&self, e: f64) -> f64 {
        if e < self.support.0 || e > self.support.1 {
            0.0
        } else {
            (self.f)(e)
        }
    }

    pub fn mass(&self, tol: f64) -> Result<Quad, TauError> {
        let (a, b) = self.support;
        Ok(integrate(&|e| self.eval(e), a, b, tol, panel_count(b - a, self.scale))?)
    }
}

fn panel_count(width: f64, scale: f64) -> usize {
    ((4.0 * width / scale).ceil() as usize).clamp(16, 200_000)
}

pub const QUAD_TOL: f64 = 1e-6;

/// ∫ f^{1/2}(E) f^{1/2}(E+Δ) dE.
pub fn tau_continuous(f: &EnergyDensity, delta: f64) -> Result<Quad, TauError> {
    let mass = f.mass(1e-10)?;
    if (mass.value - 1.0).abs() > QUAD_TOL {
        return Err(TauError::Unnormalized { mass: mass.value });
    }
    let (a, b) = f.support;
    let (lo, hi) = (a.max(a - delta), b.min(b - delta));
    let g = |e: f64| (f.eval(e) * f.eval(e + delta)).max(0.0).sqrt();
    Ok(integrate(&g, lo, hi, 1e-10, panel_count(hi - lo, f.scale))?)
}

/// Quality of a qubit battery c₀|0⟩ + c₁|1⟩ whose gap is detuned by ε from the target gap Δ,
/// with a clock of energy density σ.
pub fn tau_near_resonant(
    c0: C64,
    c1: C64,
    eps_detuning: f64,
    clock: &EnergyDensity,
    delta: f64,
) -> Result<Quad, TauError> {
    let (p0, p1) = (c0.norm_sqr(), c1.norm_sqr());
    if (p0 + p1 - 1.0).abs() > NORM_TOL {
        return Err(TauError::NotNormalized(p0 + p1));
    }
    let s = |e: f64| clock.eval(e);
    let g = |e: f64| {
        let x = s(e) * p0 + s(e - delta - eps_detuning) * p1;
        let y = s(e + delta) * p0 + s(e - eps_detuning) * p1;
        x.max(0.0).sqrt() * y.max(0.0).sqrt()
    };
    let (a, b) = clock.support;
    let pad = delta.abs() + eps_detuning.abs();
    let (lo, hi) = (a - pad, b + pad);
    Ok(integrate(&g, lo, hi, 1e-13, panel_count(hi - lo, clock.scale))?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::max_eigenvalue;
    use crate::spectrum::decompose_chains;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn uniform_ladder_state() {
        for d in 2..7 {
            let a = vec![1.0 / (d as f64).sqrt(); d];
            let s = BatteryState::ladder_real(&a, 1.0).unwrap();
            let t = tau_of_state(&s, &ChainDecomposition::ladder(d, 1.0)).unwrap();
            assert!((t.tau - (d as f64 - 1.0) / d as f64).abs() < 1e-14);
            assert_eq!(t.epsilon, (1.0 - t.tau) / 2.0);
        }
    }

    #[test]
    fn eigenstate_has_no_quality() {
        let s = BatteryState::eigenstate(vec![0.0, 1.0, 2.0], 1);
        assert_eq!(tau_of_state(&s, &ChainDecomposition::ladder(3, 1.0)).unwrap().tau, 0.0);
    }

    #[test]
    fn optimal_state_attains_cosine() {
        for d in 1..12 {
            let s = optimal_finite_state(d, 1.0);
            let t = tau_of_state(&s, &ChainDecomposition::ladder(d, 1.0)).unwrap().tau;
            assert!((t - tau_finite(d)).abs() < 1e-13, "d={d}");
            assert!((s.mean_energy() - (d as f64 - 1.0) / 2.0).abs() < 1e-12);
        }
        let two = optimal_finite_state(2, 1.0);
        for a in two.amplitudes().unwrap() {
            assert!((a.re - 0.5f64.sqrt()).abs() < 1e-15);
        }
    }

    #[test]
    fn tau_finite_values() {
        assert!(tau_finite(1).abs() < 1e-16);
        assert!((tau_finite(3) - 0.5f64.sqrt()).abs() < 1e-15);
        assert!((max_eigenvalue(&a_matrix(200)) - tau_finite(200)).abs() < 1e-10);
    }

    #[test]
    fn epsilon_values() {
        assert_eq!(epsilon_from_tau(1.0), 0.0);
        assert!((epsilon_from_tau(tau_finite(2)) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn coherent_matches_truncated_state() {
        let a2: f64 = 1.0;
        let mut amps = Vec::new();
        let mut c = (-a2 / 2.0).exp();
        for k in 0..60 {
            amps.push(c);
            c *= a2.sqrt() / ((k + 1) as f64).sqrt();
        }
        let n: f64 = amps.iter().map(|x| x * x).sum();
        let amps: Vec<f64> = amps.iter().map(|x| x / n.sqrt()).collect();
        let s = BatteryState::ladder_real(&amps, 1.0).unwrap();
        let direct = tau_of_state(&s, &ChainDecomposition::ladder(60, 1.0)).unwrap().tau;
        let series = tau_coherent(a2, 1000);
        assert!((direct - series.tau).abs() < 1e-13);
        assert!(series.tail_bound < 1e-15);
        assert_eq!(tau_coherent(0.0, 10).tau, 0.0);
    }

    #[test]
    fn coherent_large_amplitude() {
        let t = tau_coherent(100.0, 10_000);
        let scaled = (1.0 - t.tau) * 800.0;
        assert!((0.9..=1.1).contains(&scaled), "{scaled}");
    }

    #[test]
    fn gaussian_closed_form() {
        for (var, delta) in [(1.0, 1.0), (0.3, 1.0), (2.0, 0.5)] {
            let q = tau_continuous(&EnergyDensity::gaussian(0.0, var), delta).unwrap();
            assert!((q.value - (-delta * delta / (8.0 * var)).exp()).abs() < 1e-6);
        }
        let q = tau_continuous(&EnergyDensity::gaussian(0.0, 1.0), 0.0).unwrap();
        assert!((q.value - 1.0).abs() < 1e-9);
    }

    #[test]
    fn disjoint_support_gives_zero() {
        let box_density = EnergyDensity::custom(|_| 1.0, (0.0, 1.0), 0.1);
        let q = tau_continuous(&box_density, 2.0).unwrap();
        assert_eq!(q.value, 0.0);
    }

    #[test]
    fn unnormalized_rejected() {
        let d = EnergyDensity::custom(|_| 2.0, (0.0, 1.0), 0.1);
        assert!(matches!(tau_continuous(&d, 0.5), Err(TauError::Unnormalized { .. })));
    }

    #[test]
    fn narrow_gaussians_reproduce_discrete_tau() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let p: Vec<f64> = (0..4).map(|_| rng.gen_range(0.1..1.0)).collect();
        let tot: f64 = p.iter().sum();
        let p: Vec<f64> = p.iter().map(|x| x / tot).collect();
        let parts = p.iter().enumerate().map(|(k, &w)| (w, EnergyDensity::gaussian(k as f64, 1e-4))).collect();
        let cont = tau_continuous(&EnergyDensity::mixture(parts), 1.0).unwrap().value;
        let s = BatteryState::ladder_real(&p.iter().map(|x| x.sqrt()).collect::<Vec<_>>(), 1.0).unwrap();
        let disc = tau_of_state(&s, &ChainDecomposition::ladder(4, 1.0)).unwrap().tau;
        assert!((cont - disc).abs() < 1e-4, "{cont} vs {disc}");
    }

    #[test]
    fn near_resonant_limits() {
        let (c0, c1) = (C64::new(0.6, 0.0), C64::new(0.0, 0.8));
        let clock = EnergyDensity::gaussian(0.0, 1e-4);
        let exact = tau_near_resonant(c0, c1, 0.0, &clock, 1.0).unwrap().value;
        assert!((exact - 0.48).abs() < 1e-9);
        let close = tau_near_resonant(c0, c1, 1e-5, &clock, 1.0).unwrap().value;
        assert!((close - 0.48).abs() < 1e-5);
    }

    #[test]
    fn maxwell_lower_bound() {
        let (c0, c1) = (C64::new(0.8, 0.0), C64::new(0.6, 0.0));
        for (m, s, eps) in [(1.0, 1.0, 0.01), (2.0, 0.5, 0.05), (1.0, 3.0, 0.2)] {
            let clock = EnergyDensity::maxwell(m, s);
            let v = tau_near_resonant(c0, c1, eps, &clock, 1.0).unwrap().value;
            let bound = 0.48 * (-1.5 * m * eps / s).exp();
            assert!(v >= bound - 1e-9, "{v} < {bound}");
        }
    }

    #[test]
    fn mixed_state_uses_coherences() {
        let levels = vec![0.0, 1.0, 5.0, 6.0];
        let chains = decompose_chains(&levels, 1.0, 1e-9).unwrap();
        let mut m = CMatrix::zeros(4, 4);
        m[(0, 0)] = C64::new(0.25, 0.0);
        m[(1, 1)] = C64::new(0.25, 0.0);
        m[(2, 2)] = C64::new(0.25, 0.0);
        m[(3, 3)] = C64::new(0.25, 0.0);
        m[(1, 0)] = C64::new(0.0, 0.1);
        m[(0, 1)] = C64::new(0.0, -0.1);
        m[(3, 2)] = C64::new(-0.2, 0.0);
        m[(2, 3)] = C64::new(-0.2, 0.0);
        let s = BatteryState::mixed(levels, HermitianMatrix::new(m).unwrap()).unwrap();
        assert!((tau_of_state(&s, &chains).unwrap().tau - 0.3).abs() < 1e-15);
    }

    #[test]
    fn json_round_trip() {
        let s = optimal_finite_state(3, 1.0);
        let j = serde_json::to_string(&s).unwrap();
        let back: BatteryState = serde_json::from_str(&j).unwrap();
        assert_eq!(back, s);
    }
}
