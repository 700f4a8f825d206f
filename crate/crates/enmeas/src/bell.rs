//! CHSH with photon pairs under photon-number dephasing.
//!
//! Each party holds two modes truncated to occupations `{0, 1}`; the local basis is
//! `|n, n'⟩` with index `2n + n'`, and the joint space is `(AA') ⊗ (BB')`.

use crate::linalg::{eig_hermitian, partial_trace_first, partial_trace_second, CMatrix, HermitianMatrix, C64};
use crate::par::Exec;
use crate::povm::{degrade, Povm};
use crate::random;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Eigenvalue tolerance for dichotomic observables.
pub const DICHOTOMIC_TOL: f64 = 1e-10;
const STATE_TOL: f64 = 1e-10;
const SEESAW_MAX_ITER: usize = 1000;

#[derive(Debug, thiserror::Error)]
pub enum BellError {
    #[error("observable {name} has eigenvalue {eigenvalue} outside {{-1, +1}}")]
    NotDichotomic { name: &'static str, eigenvalue: f64 },
    #[error("state is not a density matrix: {0}")]
    State(String),
    #[error("dimension mismatch: state has dimension {state}, factors {da}x{db}")]
    Dimension { state: usize, da: usize, db: usize },
}

/// A bipartite state together with two dichotomic observables per party.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BellScenario {
    pub state: HermitianMatrix,
    pub dims: (usize, usize),
    pub alice: [HermitianMatrix; 2],
    pub bob: [HermitianMatrix; 2],
}

impl BellScenario {
    pub fn new(state: HermitianMatrix, dims: (usize, usize), alice: [HermitianMatrix; 2], bob: [HermitianMatrix; 2]) -> Result<Self, BellError> {
        let s = BellScenario { state, dims, alice, bob };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<(), BellError> {
        let (da, db) = self.dims;
        check_state(&self.state, da, db)?;
        let names = [("A1", &self.alice[0], da), ("A2", &self.alice[1], da), ("B1", &self.bob[0], db), ("B2", &self.bob[1], db)];
        for (name, o, d) in names {
            if o.dim() != d {
                return Err(BellError::Dimension { state: self.state.dim(), da, db });
            }
            check_dichotomic(name, o)?;
        }
        Ok(())
    }
}

fn check_state(rho: &HermitianMatrix, da: usize, db: usize) -> Result<(), BellError> {
    if rho.dim() != da * db {
        return Err(BellError::Dimension { state: rho.dim(), da, db });
    }
    if (rho.trace() - 1.0).abs() > STATE_TOL {
        return Err(BellError::State(format!("trace {}", rho.trace())));
    }
    let min = eig_hermitian(rho).eigenvalues[0];
    if min < -STATE_TOL {
        return Err(BellError::State(format!("minimum eigenvalue {min:e}")));
    }
    Ok(())
}

fn check_dichotomic(name: &'static str, o: &HermitianMatrix) -> Result<(), BellError> {
    for &l in &eig_hermitian(o).eigenvalues {
        if (l.abs() - 1.0).abs() > DICHOTOMIC_TOL {
            return Err(BellError::NotDichotomic { name, eigenvalue: l });
        }
    }
    Ok(())
}

fn ket(index: usize, dim: usize) -> Vec<C64> {
    let mut v = vec![C64::new(0.0, 0.0); dim];
    v[index] = C64::new(1.0, 0.0);
    v
}

/// Local index of `|n, n'⟩`.
pub fn mode_index(n: usize, n_prime: usize) -> usize {
    2 * n + n_prime
}

/// Total photon number of each local basis state.
pub fn local_photon_numbers() -> [usize; 4] {
    [0, 1, 1, 2]
}

/// `|0,1⟩⟨1,0| + |1,0⟩⟨0,1|` on one party.
pub fn sigma_x() -> HermitianMatrix {
    let mut m = CMatrix::zeros(4, 4);
    m[(mode_index(0, 1), mode_index(1, 0))] = C64::new(1.0, 0.0);
    m[(mode_index(1, 0), mode_index(0, 1))] = C64::new(1.0, 0.0);
    HermitianMatrix::from_product_unchecked(&m)
}

/// `|0,1⟩⟨0,1| − |1,0⟩⟨1,0|` on one party.
pub fn sigma_z() -> HermitianMatrix {
    let mut d = [0.0; 4];
    d[mode_index(0, 1)] = 1.0;
    d[mode_index(1, 0)] = -1.0;
    HermitianMatrix::from_real_diag(&d)
}

fn with_extremes(vacuum: f64, tilde: &HermitianMatrix) -> HermitianMatrix {
    let mut d = [0.0; 4];
    d[mode_index(0, 0)] = vacuum;
    d[mode_index(1, 1)] = -vacuum;
    HermitianMatrix::from_real_diag(&d).add(tilde)
}

/// Alice's `A_k = |0,0⟩⟨0,0| − |1,1⟩⟨1,1| + Ã_k` with `Ã_1 = σ_z`, `Ã_2 = σ_x`.
pub fn alice_observables() -> [HermitianMatrix; 2] {
    [with_extremes(1.0, &sigma_z()), with_extremes(1.0, &sigma_x())]
}

/// Bob's `B_k = |1,1⟩⟨1,1| − |0,0⟩⟨0,0| + B̃_k` with `B̃_1 = (σ_x − σ_z)/√2`,
/// `B̃_2 = −(σ_x + σ_z)/√2`.
pub fn bob_observables() -> [HermitianMatrix; 2] {
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let b1 = sigma_x().sub(&sigma_z()).scale(r);
    let b2 = sigma_x().add(&sigma_z()).scale(-r);
    [with_extremes(-1.0, &b1), with_extremes(-1.0, &b2)]
}

/// Removes coherences between different local photon numbers on each side.
pub fn local_dephase(rho: &HermitianMatrix, numbers_a: &[usize], numbers_b: &[usize]) -> HermitianMatrix {
    let db = numbers_b.len();
    let n = numbers_a.len() * db;
    assert_eq!(rho.dim(), n);
    let m = CMatrix::from_fn(n, n, |i, j| {
        if numbers_a[i / db] == numbers_a[j / db] && numbers_b[i % db] == numbers_b[j % db] {
            rho.get(i, j)
        } else {
            C64::new(0.0, 0.0)
        }
    });
    HermitianMatrix::from_product_unchecked(&m)
}

/// `(|0⟩_A|1⟩_B + |1⟩_A|0⟩_B)/√2 ⊗ |+⟩_{A'} ⊗ |+⟩_{B'}` on `(AA')⊗(BB')`.
pub fn undephased_state() -> Vec<C64> {
    let mut v = vec![C64::new(0.0, 0.0); 16];
    let amp = 0.5 * std::f64::consts::FRAC_1_SQRT_2;
    for (a, b) in [(0, 1), (1, 0)] {
        for ap in 0..2 {
            for bp in 0..2 {
                v[4 * mode_index(a, ap) + mode_index(b, bp)] += C64::new(amp, 0.0);
            }
        }
    }
    v
}

/// The entangled component `(|0,1⟩|1,0⟩ + |1,0⟩|0,1⟩)/√2`.
pub fn entangled_component() -> Vec<C64> {
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let mut v = vec![C64::new(0.0, 0.0); 16];
    v[4 * mode_index(0, 1) + mode_index(1, 0)] = C64::new(r, 0.0);
    v[4 * mode_index(1, 0) + mode_index(0, 1)] = C64::new(r, 0.0);
    v
}

/// Product components of the dephased state, each with weight 1/8.
pub fn product_components() -> [((usize, usize), (usize, usize)); 6] {
    [((0, 0), (1, 0)), ((0, 0), (1, 1)), ((0, 1), (1, 1)), ((1, 0), (0, 0)), ((1, 1), (0, 0)), ((1, 1), (0, 1))]
}

/// Weighted decomposition `Σ_k w_k ρ_k` of the dephased state.
pub fn dephased_decomposition() -> Vec<(f64, HermitianMatrix)> {
    let mut parts: Vec<(f64, HermitianMatrix)> = product_components()
        .iter()
        .map(|&((a, ap), (b, bp))| (0.125, HermitianMatrix::projector(&ket(4 * mode_index(a, ap) + mode_index(b, bp), 16))))
        .collect();
    parts.push((0.25, HermitianMatrix::projector(&entangled_component())));
    parts
}

/// The 16-dimensional state after both parties dephase in their local photon number.
pub fn build_dephased_state() -> HermitianMatrix {
    let n = local_photon_numbers();
    local_dephase(&HermitianMatrix::projector(&undephased_state()), &n, &n)
}

/// The dephased state with the fixed observables above.
pub fn dephased_scenario() -> BellScenario {
    BellScenario { state: build_dephased_state(), dims: (4, 4), alice: alice_observables(), bob: bob_observables() }
}

/// `A₁⊗B₁ + A₁⊗B₂ + A₂⊗B₁ − A₂⊗B₂`
pub fn chsh_operator(alice: &[HermitianMatrix; 2], bob: &[HermitianMatrix; 2]) -> HermitianMatrix {
    let plus = bob[0].add(&bob[1]);
    let minus = bob[0].sub(&bob[1]);
    alice[0].kron(&plus).add(&alice[1].kron(&minus))
}

pub fn chsh_value(s: &BellScenario) -> Result<f64, BellError> {
    s.validate()?;
    Ok(chsh_value_unchecked(&s.state, &s.alice, &s.bob))
}

fn chsh_value_unchecked(rho: &HermitianMatrix, alice: &[HermitianMatrix; 2], bob: &[HermitianMatrix; 2]) -> f64 {
    rho.inner(&chsh_operator(alice, bob))
}

/// `6/8·2 + 2/8·2√2`: separable weight at the local bound plus entangled weight at Tsirelson's.
pub fn chsh_mixture_bound() -> f64 {
    0.75 * 2.0 + 0.25 * 2.0 * std::f64::consts::SQRT_2
}

/// Outcome sign for Alice's detector counts `(N¹, N²)`; `None` for counts outside the table.
pub fn alice_sign(n1: usize, n2: usize) -> Option<i8> {
    match (n1, n2) {
        (0, 0) | (0, 1) => Some(1),
        (1, 0) => Some(-1),
        _ if n1 + n2 == 2 => Some(-1),
        _ => None,
    }
}

/// Outcome sign for Bob's detector counts `(N¹, N²)`.
pub fn bob_sign(n1: usize, n2: usize) -> Option<i8> {
    match (n1, n2) {
        (0, 0) | (1, 0) => Some(-1),
        (0, 1) => Some(1),
        _ if n1 + n2 == 2 => Some(1),
        _ => None,
    }
}

fn degrade_observable(o: &HermitianMatrix, tau: f64) -> HermitianMatrix {
    let id = HermitianMatrix::identity(o.dim());
    let povm = Povm::from_elements(vec![id.add(o).scale(0.5), id.sub(o).scale(0.5)]);
    let d = degrade(&povm, tau);
    d.elements[0].sub(&d.elements[1])
}

/// CHSH of `(|01⟩ + |10⟩)/√2` when every observable of the single-excitation settings is
/// measured through a battery of quality `tau`.
pub fn degraded_chsh(tau: f64) -> f64 {
    let (x, z) = (crate::linalg::sigma_x(), crate::linalg::sigma_z());
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let alice = [z.clone(), x.clone()].map(|o| degrade_observable(&o, tau));
    let bob = [x.sub(&z).scale(r), x.add(&z).scale(-r)].map(|o| degrade_observable(&o, tau));
    let psi = [C64::new(0.0, 0.0), C64::new(r, 0.0), C64::new(r, 0.0), C64::new(0.0, 0.0)];
    chsh_value_unchecked(&HermitianMatrix::projector(&psi), &alice, &bob)
}

/// Result of the alternating CHSH optimization.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChshSeesaw {
    pub value: f64,
    pub alice: [HermitianMatrix; 2],
    pub bob: [HermitianMatrix; 2],
    /// Value after each half-step of the best restart.
    pub history: Vec<f64>,
}

fn sign_of(h: &HermitianMatrix) -> (HermitianMatrix, f64) {
    let spec = eig_hermitian(h);
    let norm = spec.eigenvalues.iter().map(|l| l.abs()).sum();
    (spec.map(|l| if l >= 0.0 { 1.0 } else { -1.0 }), norm)
}

/// Best Alice pair for fixed Bob observables, and the CHSH value it reaches.
fn best_alice(rho: &HermitianMatrix, dims: (usize, usize), bob: &[HermitianMatrix; 2]) -> ([HermitianMatrix; 2], f64) {
    let (da, db) = dims;
    let cond = |b: HermitianMatrix| {
        let m = rho.as_matrix() * HermitianMatrix::identity(da).kron(&b).as_matrix();
        HermitianMatrix::from_product_unchecked(&partial_trace_second(&m, da, db))
    };
    let (a1, v1) = sign_of(&cond(bob[0].add(&bob[1])));
    let (a2, v2) = sign_of(&cond(bob[0].sub(&bob[1])));
    ([a1, a2], v1 + v2)
}

fn best_bob(rho: &HermitianMatrix, dims: (usize, usize), alice: &[HermitianMatrix; 2]) -> ([HermitianMatrix; 2], f64) {
    let (da, db) = dims;
    let cond = |a: HermitianMatrix| {
        let m = rho.as_matrix() * a.kron(&HermitianMatrix::identity(db)).as_matrix();
        HermitianMatrix::from_product_unchecked(&partial_trace_first(&m, da, db))
    };
    let (b1, v1) = sign_of(&cond(alice[0].add(&alice[1])));
    let (b2, v2) = sign_of(&cond(alice[0].sub(&alice[1])));
    ([b1, b2], v1 + v2)
}

/// Alternating optimization started from the given Bob observables.
pub fn chsh_seesaw_from(rho: &HermitianMatrix, dims: (usize, usize), bob: [HermitianMatrix; 2]) -> ChshSeesaw {
    let mut bob = bob;
    let mut history = Vec::new();
    let mut alice;
    let mut last = f64::NEG_INFINITY;
    loop {
        let (a, va) = best_alice(rho, dims, &bob);
        alice = a;
        history.push(va);
        let (b, vb) = best_bob(rho, dims, &alice);
        bob = b;
        history.push(vb);
        if vb <= last + 1e-13 || history.len() >= 2 * SEESAW_MAX_ITER {
            break;
        }
        last = vb;
    }
    let value = chsh_value_unchecked(rho, &alice, &bob);
    ChshSeesaw { value, alice, bob, history }
}

fn random_dichotomic(rng: &mut ChaCha8Rng, d: usize) -> HermitianMatrix {
    sign_of(&random::hermitian(rng, d)).0
}

/// Best of `restarts` random starts; a non-empty `seeds` list of Bob pairs is tried first.
pub fn optimize_chsh_seesaw(rho: &HermitianMatrix, dims: (usize, usize), restarts: usize, seed: u64) -> Result<ChshSeesaw, BellError> {
    optimize_chsh_seesaw_with(rho, dims, restarts, seed, &[], Exec::default())
}

pub fn optimize_chsh_seesaw_with(
    rho: &HermitianMatrix,
    dims: (usize, usize),
    restarts: usize,
    seed: u64,
    seeds: &[[HermitianMatrix; 2]],
    exec: Exec,
) -> Result<ChshSeesaw, BellError> {
    check_state(rho, dims.0, dims.1)?;
    for s in seeds {
        check_dichotomic("B1", &s[0])?;
        check_dichotomic("B2", &s[1])?;
    }
    let runs = exec.map(seeds.len() + restarts, |k| {
        let start = if k < seeds.len() {
            seeds[k].clone()
        } else {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(k as u64));
            [random_dichotomic(&mut rng, dims.1), random_dichotomic(&mut rng, dims.1)]
        };
        chsh_seesaw_from(rho, dims, start)
    });
    Ok(runs.into_iter().fold(None::<ChshSeesaw>, |best, r| match best {
        Some(b) if b.value >= r.value => Some(b),
        _ => Some(r),
    }).expect("at least one restart"))
}
