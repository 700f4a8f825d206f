//! Operational distances between POVMs.
//!
//! With `D_x = M⁰_x − M¹_x`, the classical distance is `½ max_ρ Σ_x |tr ρ D_x|` and the
//! quantum one is half the diamond norm of `ρ ↦ Σ_x tr(ρ D_x)|x⟩⟨x|`.

use crate::linalg::{eig_hermitian, CMatrix, HermitianMatrix, C64};
use crate::par::Exec;
use crate::povm::{Povm, PovmError};
use crate::sdp::{self, BlockSdp, MatrixExpr, ScalarExpr, SdpError, SdpOptions, SdpStatus};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::BinaryHeap;

/// Largest outcome count accepted by exhaustive sign enumeration.
pub const MAX_ENUMERATION_OUTCOMES: usize = 24;
/// Target width of the certified bracket for qubit branch and bound.
pub const BRANCH_BOUND_TOL: f64 = 1e-10;
const BRANCH_BOUND_MAX_CELLS: usize = 20_000_000;

#[derive(Debug, thiserror::Error)]
pub enum DistanceError {
    #[error(transparent)]
    Povm(#[from] PovmError),
    #[error("{n} outcomes exceed the enumeration limit of {max}")]
    TooManyOutcomes { n: usize, max: usize },
    #[error(transparent)]
    Sdp(#[from] SdpError),
    #[error("distance SDP did not converge; value lies in [{lower:.6e}, {upper:.6e}]")]
    NotConverged { lower: f64, upper: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DistanceMethod {
    Exact,
    Sdp,
    LowerBound,
}

/// Optimal input and, for the quantum distance, the guessing strategy.
///
/// For the quantum distance `state` lives on `D⊗Q` (index `i_D·d + j_Q`) and
/// `guesses[x]` is the element `N^x_0` on `Q` that votes for `M⁰`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceWitness {
    pub state: Vec<C64>,
    pub guesses: Option<Vec<HermitianMatrix>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceResult {
    pub value: f64,
    /// Certified upper bound when one is known (equal to `value` up to tolerance for exact methods).
    pub upper_bound: Option<f64>,
    pub method: DistanceMethod,
    pub labels: Vec<String>,
    pub witness: DistanceWitness,
}

/// `D_x = M⁰_x − M¹_x` over the union of outcome labels.
pub fn differences(m0: &Povm, m1: &Povm) -> Result<(Vec<HermitianMatrix>, Vec<String>), DistanceError> {
    let (a, b) = Povm::align(m0, m1)?;
    let d = a.elements.iter().zip(&b.elements).map(|(x, y)| x.sub(y)).collect();
    Ok((d, a.labels))
}

pub fn classical_distance(m0: &Povm, m1: &Povm) -> Result<DistanceResult, DistanceError> {
    classical_distance_with(m0, m1, Exec::default())
}

/// Exact classical distance. Sign vectors are enumerated for up to
/// [`MAX_ENUMERATION_OUTCOMES`] outcomes; larger qubit problems use a certified
/// branch and bound over the Bloch sphere.
pub fn classical_distance_with(m0: &Povm, m1: &Povm, exec: Exec) -> Result<DistanceResult, DistanceError> {
    let (d, labels) = differences(m0, m1)?;
    let n = d.len();
    let dim = m0.dim;
    if n <= MAX_ENUMERATION_OUTCOMES {
        let (value, state) = enumerate_signs(&d, dim, exec);
        return Ok(DistanceResult {
            value: value.clamp(0.0, 1.0),
            upper_bound: Some(value),
            method: DistanceMethod::Exact,
            labels,
            witness: DistanceWitness { state, guesses: None },
        });
    }
    if dim == 2 {
        if let Some((lo, hi, state)) = qubit_branch_bound(&d, BRANCH_BOUND_TOL) {
            return Ok(DistanceResult {
                value: lo.clamp(0.0, 1.0),
                upper_bound: Some(hi),
                method: DistanceMethod::Exact,
                labels,
                witness: DistanceWitness { state, guesses: None },
            });
        }
    }
    Err(DistanceError::TooManyOutcomes { n, max: MAX_ENUMERATION_OUTCOMES })
}

fn flat(m: &HermitianMatrix) -> Vec<C64> {
    m.as_matrix().data().to_vec()
}

fn from_flat(v: &[C64], dim: usize) -> HermitianMatrix {
    HermitianMatrix::from_product_unchecked(&CMatrix::from_fn(dim, dim, |i, j| v[i * dim + j]))
}

fn extreme_eigenvalues(v: &[C64], dim: usize) -> (f64, f64) {
    if dim == 1 {
        return (v[0].re, v[0].re);
    }
    if dim == 2 {
        let m = 0.5 * (v[0].re + v[3].re);
        let h = 0.5 * (v[0].re - v[3].re);
        let r = (h * h + v[1].norm_sqr()).sqrt();
        return (m - r, m + r);
    }
    let s = eig_hermitian(&from_flat(v, dim));
    (s.eigenvalues[0], s.eigenvalues[dim - 1])
}

/// max over S ⊆ outcomes of λ_max(±(2 Σ_{x∈S} D_x − T)); the last outcome is kept out of
/// S since the sign flip covers its complement.
fn enumerate_signs(d: &[HermitianMatrix], dim: usize, exec: Exec) -> (f64, Vec<C64>) {
    let n = d.len();
    let dd = dim * dim;
    if n == 0 {
        let mut e = vec![C64::new(0.0, 0.0); dim];
        e[0] = C64::new(1.0, 0.0);
        return (0.0, e);
    }
    let flats: Vec<Vec<C64>> = d.iter().map(flat).collect();
    let mut total = vec![C64::new(0.0, 0.0); dd];
    for f in &flats {
        for (t, v) in total.iter_mut().zip(f) {
            *t += v;
        }
    }
    let free = n - 1;
    let low = free.min(12);
    let high = free - low;
    let best = exec.map(1usize << high, |h| {
        let mut acc = vec![C64::new(0.0, 0.0); dd];
        for b in 0..high {
            if h >> b & 1 == 1 {
                for (a, v) in acc.iter_mut().zip(&flats[low + b]) {
                    *a += v;
                }
            }
        }
        let mut gray = 0usize;
        let mut best = (f64::NEG_INFINITY, 0usize, true);
        let mut buf = vec![C64::new(0.0, 0.0); dd];
        for g in 0..(1usize << low) {
            if g > 0 {
                let bit = g.trailing_zeros() as usize;
                gray ^= 1 << bit;
                let sign = if gray >> bit & 1 == 1 { 1.0 } else { -1.0 };
                for (a, v) in acc.iter_mut().zip(&flats[bit]) {
                    *a += v * sign;
                }
            }
            for ((o, a), t) in buf.iter_mut().zip(&acc).zip(&total) {
                *o = a * 2.0 - t;
            }
            let (lo, hi) = extreme_eigenvalues(&buf, dim);
            let mask = gray | (h << low);
            if hi > best.0 {
                best = (hi, mask, true);
            }
            if -lo > best.0 {
                best = (-lo, mask, false);
            }
        }
        best
    });
    let (val, mask, positive) = best.into_iter().fold((f64::NEG_INFINITY, 0, true), |a, b| if b.0 > a.0 { b } else { a });
    let s = HermitianMatrix::sum(
        dim,
        &d.iter().enumerate().map(|(x, m)| if mask >> x & 1 == 1 { m.clone() } else { m.scale(-1.0) }).collect::<Vec<_>>(),
    );
    let s = if positive { s } else { s.scale(-1.0) };
    let spec = eig_hermitian(&s);
    (0.5 * val, spec.vector(dim - 1))
}

/// Bloch form of a 2×2 Hermitian matrix: `a·1 + b·σ`.
fn bloch(m: &HermitianMatrix) -> (f64, [f64; 3]) {
    let a = 0.5 * (m[(0, 0)].re + m[(1, 1)].re);
    let o = m[(0, 1)];
    (a, [o.re, -o.im, 0.5 * (m[(0, 0)].re - m[(1, 1)].re)])
}

fn sphere(theta: f64, phi: f64) -> [f64; 3] {
    [theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos()]
}

struct Cell {
    upper: f64,
    t0: f64,
    t1: f64,
    p0: f64,
    p1: f64,
}

impl PartialEq for Cell {
    fn eq(&self, o: &Self) -> bool {
        self.upper == o.upper
    }
}
impl Eq for Cell {}
impl PartialOrd for Cell {
    fn partial_cmp(&self, o: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Cell {
    fn cmp(&self, o: &Self) -> std::cmp::Ordering {
        self.upper.total_cmp(&o.upper)
    }
}

/// Maximize `f(u) = Σ_x |a_x + b_x·u|` over unit vectors by branch and bound on (θ, φ)
/// cells. Each cell sits in a cap around its centre whose angular radius is bounded by
/// the arc length; terms of fixed sign on the cap are summed into one linear function and
/// maximized over the cap exactly, the rest are bounded by `|a + b·c| + |b| r`. Candidates
/// are polished by one sign step `u ← b_s/|b_s|`. Returns `(lower, upper, state)` for `½f`.
fn qubit_branch_bound(d: &[HermitianMatrix], tol: f64) -> Option<(f64, f64, Vec<C64>)> {
    use std::f64::consts::PI;
    let coeffs: Vec<(f64, [f64; 3], f64)> = d
        .iter()
        .map(|m| {
            let (a, b) = bloch(m);
            (a, b, (b[0] * b[0] + b[1] * b[1] + b[2] * b[2]).sqrt())
        })
        .collect();
    let dot = |b: &[f64; 3], u: &[f64; 3]| b[0] * u[0] + b[1] * u[1] + b[2] * u[2];
    let f = |u: &[f64; 3]| coeffs.iter().map(|(a, b, _)| (a + dot(b, u)).abs()).sum::<f64>();
    let polish = |u: &[f64; 3]| -> ([f64; 3], f64) {
        let mut a_s = 0.0;
        let mut b_s = [0.0; 3];
        for (a, b, _) in &coeffs {
            let s = if a + dot(b, u) >= 0.0 { 1.0 } else { -1.0 };
            a_s += s * a;
            for k in 0..3 {
                b_s[k] += s * b[k];
            }
        }
        let nb = dot(&b_s, &b_s).sqrt();
        if nb == 0.0 {
            return (*u, a_s);
        }
        let v = [b_s[0] / nb, b_s[1] / nb, b_s[2] / nb];
        (v, f(&v))
    };
    let cap_bound = |c: &[f64; 3], alpha: f64| -> f64 {
        let mut lin_a = 0.0;
        let mut lin_b = [0.0; 3];
        let mut rest = 0.0;
        for (a, b, nb) in &coeffs {
            let v = a + dot(b, c);
            if v.abs() > nb * alpha {
                let s = v.signum();
                lin_a += s * a;
                for k in 0..3 {
                    lin_b[k] += s * b[k];
                }
            } else {
                rest += v.abs() + nb * alpha;
            }
        }
        let nb = dot(&lin_b, &lin_b).sqrt();
        let lin_max = if nb == 0.0 {
            0.0
        } else {
            let beta = (dot(&lin_b, c) / nb).clamp(-1.0, 1.0).acos();
            if beta <= alpha {
                nb
            } else {
                nb * (beta - alpha).cos()
            }
        };
        lin_a + lin_max + rest
    };
    let mut best_u = [0.0, 0.0, 1.0];
    let mut best = f(&best_u);
    let mut heap = BinaryHeap::new();
    let push = |heap: &mut BinaryHeap<Cell>, best: &mut f64, best_u: &mut [f64; 3], t0: f64, t1: f64, p0: f64, p1: f64| {
        let (tc, pc) = (0.5 * (t0 + t1), 0.5 * (p0 + p1));
        let u = sphere(tc, pc);
        let (v, fv) = polish(&u);
        if fv > *best {
            *best = fv;
            *best_u = v;
        }
        let smax = if t0 <= PI / 2.0 && t1 >= PI / 2.0 { 1.0 } else { t0.sin().max(t1.sin()) };
        let alpha = (0.5 * (t1 - t0) + 0.5 * smax * (p1 - p0)).min(PI);
        heap.push(Cell { upper: cap_bound(&u, alpha), t0, t1, p0, p1 });
    };
    let (nt, np) = (8, 16);
    for i in 0..nt {
        for j in 0..np {
            let (t0, t1) = (PI * i as f64 / nt as f64, PI * (i + 1) as f64 / nt as f64);
            let (p0, p1) = (2.0 * PI * j as f64 / np as f64, 2.0 * PI * (j + 1) as f64 / np as f64);
            push(&mut heap, &mut best, &mut best_u, t0, t1, p0, p1);
        }
    }
    let mut cells = 0usize;
    let upper = loop {
        let Some(c) = heap.pop() else { break best };
        if c.upper <= best + tol {
            break c.upper.max(best);
        }
        cells += 1;
        if cells > BRANCH_BOUND_MAX_CELLS {
            return None;
        }
        let (tm, pm) = (0.5 * (c.t0 + c.t1), 0.5 * (c.p0 + c.p1));
        for (t0, t1) in [(c.t0, tm), (tm, c.t1)] {
            for (p0, p1) in [(c.p0, pm), (pm, c.p1)] {
                push(&mut heap, &mut best, &mut best_u, t0, t1, p0, p1);
            }
        }
    };
    let theta = best_u[2].clamp(-1.0, 1.0).acos();
    let phi = best_u[1].atan2(best_u[0]);
    let state = vec![C64::new((theta / 2.0).cos(), 0.0), C64::from_polar((theta / 2.0).sin(), phi)];
    Some((0.5 * best, 0.5 * upper, state))
}

pub fn quantum_distance(m0: &Povm, m1: &Povm) -> Result<DistanceResult, DistanceError> {
    quantum_distance_with(m0, m1, &SdpOptions::default())
}

/// Quantum distance from the classical-output reduction of the diamond-norm program:
/// maximize `Σ_x tr(D_x W_x)` subject to `0 ⪯ W_x ⪯ σ`, `tr σ = 1`.
pub fn quantum_distance_with(m0: &Povm, m1: &Povm, opts: &SdpOptions) -> Result<DistanceResult, DistanceError> {
    let (d, labels) = differences(m0, m1)?;
    let dim = m0.dim;
    let mut p = BlockSdp::new();
    let sigma = p.add_block(dim);
    p.eq_scalar(ScalarExpr::new().block(sigma, HermitianMatrix::identity(dim)), 1.0);
    let mut ws = Vec::with_capacity(d.len());
    for dx in &d {
        let w = p.add_block(dim);
        p.le_matrix(MatrixExpr::new(dim).block(w, 1.0).block(sigma, -1.0), HermitianMatrix::zeros(dim));
        p.objective = std::mem::take(&mut p.objective).block(w, dx.clone());
        ws.push(w);
    }
    let sol = solve_checked(&p, opts)?;
    let sig = &sol.blocks[sigma];
    let w: Vec<&HermitianMatrix> = ws.iter().map(|&b| &sol.blocks[b]).collect();
    Ok(DistanceResult {
        value: sol.primal_objective.clamp(0.0, 1.0),
        upper_bound: Some(sol.dual_objective),
        method: DistanceMethod::Sdp,
        labels,
        witness: quantum_witness(sig, &w),
    })
}

/// The same distance from the unreduced program on the Choi operator
/// `J = Σ_x |x⟩⟨x| ⊗ D_xᵀ`: maximize `tr(J W)` subject to `0 ⪯ W ⪯ 1 ⊗ σ`, `tr σ = 1`.
pub fn quantum_distance_choi(m0: &Povm, m1: &Povm, opts: &SdpOptions) -> Result<DistanceResult, DistanceError> {
    let (d, labels) = differences(m0, m1)?;
    let dim = m0.dim;
    let n = d.len();
    let big = n * dim;
    let choi = CMatrix::from_fn(big, big, |r, c| {
        let (x, i) = (r / dim, r % dim);
        let (y, j) = (c / dim, c % dim);
        if x == y {
            d[x][(j, i)]
        } else {
            C64::new(0.0, 0.0)
        }
    });
    let kraus: Vec<CMatrix> = (0..n)
        .map(|x| CMatrix::from_fn(big, dim, |r, c| if r == x * dim + c { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) }))
        .collect();
    let mut p = BlockSdp::new();
    let sigma = p.add_block(dim);
    let w = p.add_block(big);
    p.eq_scalar(ScalarExpr::new().block(sigma, HermitianMatrix::identity(dim)), 1.0);
    p.le_matrix(MatrixExpr::new(big).block(w, 1.0).mapped(sigma, -1.0, kraus), HermitianMatrix::zeros(big));
    p.objective = ScalarExpr::new().block(w, HermitianMatrix::from_product_unchecked(&choi));
    let sol = solve_checked(&p, opts)?;
    Ok(DistanceResult {
        value: sol.primal_objective.clamp(0.0, 1.0),
        upper_bound: Some(sol.dual_objective),
        method: DistanceMethod::Sdp,
        labels,
        witness: DistanceWitness { state: purification(&sol.blocks[sigma]), guesses: None },
    })
}

fn solve_checked(p: &BlockSdp, opts: &SdpOptions) -> Result<sdp::SdpSolution, DistanceError> {
    let sol = sdp::solve(p, opts)?;
    match sol.status {
        SdpStatus::Optimal => Ok(sol),
        _ => Err(DistanceError::NotConverged { lower: sol.primal_objective, upper: sol.dual_objective }),
    }
}

/// `Σ_i √σ|i⟩ ⊗ |i⟩`
fn purification(sigma: &HermitianMatrix) -> Vec<C64> {
    let dim = sigma.dim();
    let root = eig_hermitian(sigma).map(|l| l.max(0.0).sqrt());
    let mut v = vec![C64::new(0.0, 0.0); dim * dim];
    for i in 0..dim {
        for j in 0..dim {
            v[j * dim + i] = root[(j, i)];
        }
    }
    crate::linalg::normalize(&mut v);
    v
}

/// Guess elements `N_x = (σ^{-1/2} W_x σ^{-1/2})ᵀ` on the support of σ, paired with the
/// purification of σ.
fn quantum_witness(sigma: &HermitianMatrix, w: &[&HermitianMatrix]) -> DistanceWitness {
    let spec = eig_hermitian(sigma);
    let cut = 1e-9 * spec.eigenvalues.last().copied().unwrap_or(0.0).max(1e-300);
    let inv_root = spec.map(|l| if l > cut { 1.0 / l.sqrt() } else { 0.0 });
    let guesses = w
        .iter()
        .map(|wx| {
            let n = wx.conjugate_by(inv_root.as_matrix());
            let m = n.as_matrix();
            let dim = m.rows();
            HermitianMatrix::from_product_unchecked(&CMatrix::from_fn(dim, dim, |i, j| m[(j, i)]))
        })
        .collect();
    DistanceWitness { state: purification(sigma), guesses: Some(guesses) }
}

/// `tr_D[(D_x ⊗ 1)|ψ⟩⟨ψ|]` on `Q`.
fn conditional_operator(dx: &HermitianMatrix, psi: &[C64], dim: usize) -> HermitianMatrix {
    let mut phi = vec![C64::new(0.0, 0.0); psi.len()];
    for i in 0..dim {
        for k in 0..dim {
            let a = dx[(i, k)];
            if a == C64::new(0.0, 0.0) {
                continue;
            }
            for j in 0..dim {
                phi[i * dim + j] += a * psi[k * dim + j];
            }
        }
    }
    let m = CMatrix::from_fn(dim, dim, |j, k| (0..dim).map(|i| phi[i * dim + j] * psi[i * dim + k].conj()).sum());
    HermitianMatrix::from_product_unchecked(&m)
}

/// Value `½ Σ_x ‖ρ^x‖₁` reached from `psi` after one sign step, and the sign operators.
fn sign_step(d: &[HermitianMatrix], psi: &[C64], dim: usize) -> (f64, Vec<HermitianMatrix>) {
    let mut value = 0.0;
    let signs = d
        .iter()
        .map(|dx| {
            let spec = eig_hermitian(&conditional_operator(dx, psi, dim));
            value += spec.eigenvalues.iter().map(|l| l.abs()).sum::<f64>();
            spec.map(|l| if l >= 0.0 { 1.0 } else { -1.0 })
        })
        .collect();
    (0.5 * value, signs)
}

fn seesaw_run(d: &[HermitianMatrix], dim: usize, mut psi: Vec<C64>) -> (f64, Vec<C64>, Vec<HermitianMatrix>) {
    let mut last = f64::NEG_INFINITY;
    let mut best = (f64::NEG_INFINITY, psi.clone(), Vec::new());
    for _ in 0..500 {
        let (v, signs) = sign_step(d, &psi, dim);
        if v > best.0 {
            best = (v, psi.clone(), signs.clone());
        }
        if v <= last + 1e-14 {
            break;
        }
        last = v;
        let k = HermitianMatrix::sum(dim * dim, &d.iter().zip(&signs).map(|(dx, s)| dx.kron(s)).collect::<Vec<_>>());
        psi = eig_hermitian(&k).vector(dim * dim - 1);
    }
    best
}

/// Alternating maximization of `½ Σ_x tr[ρ (D_x ⊗ S^x)]` over pure `ρ` on `D⊗Q` and
/// `−1 ⪯ S^x ⪯ 1`. Restarts are seeded deterministically from `seed`.
pub fn seesaw_lower_bound(m0: &Povm, m1: &Povm, restarts: usize, seed: u64) -> Result<DistanceResult, DistanceError> {
    seesaw_lower_bound_with(m0, m1, restarts, seed, Exec::default())
}

pub fn seesaw_lower_bound_with(
    m0: &Povm,
    m1: &Povm,
    restarts: usize,
    seed: u64,
    exec: Exec,
) -> Result<DistanceResult, DistanceError> {
    let (d, labels) = differences(m0, m1)?;
    let dim = m0.dim;
    let runs = exec.map(restarts.max(1), |r| {
        let psi = if r == 0 {
            purification(&HermitianMatrix::identity(dim).scale(1.0 / dim as f64))
        } else {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(r as u64));
            crate::random::pure_state(&mut rng, dim * dim)
        };
        seesaw_run(&d, dim, psi)
    });
    let (value, state, signs) = runs.into_iter().fold((f64::NEG_INFINITY, Vec::new(), Vec::new()), |a, b| if b.0 > a.0 { b } else { a });
    let id = HermitianMatrix::identity(dim);
    let guesses = signs.iter().map(|s| id.add(s).scale(0.5)).collect();
    Ok(DistanceResult {
        value: value.clamp(0.0, 1.0),
        upper_bound: None,
        method: DistanceMethod::LowerBound,
        labels,
        witness: DistanceWitness { state, guesses: Some(guesses) },
    })
}

/// Worst-case distances `(ε_C, ε_Q)` to an ideal device for battery quality `τ`.
pub fn set_distance_epsilon(tau: f64) -> (f64, f64) {
    let e = 0.5 * (1.0 - tau);
    (e, e)
}

/// Rank-one qubit POVM `(2/n)|ψ_x⟩⟨ψ_x|` from `n/2` Fibonacci directions on a hemisphere
/// and their antipodes, a uniform discretization of the covariant measurement.
pub fn sphere_povm(n: usize) -> Povm {
    assert!(n >= 2 && n % 2 == 0, "sphere discretization needs an even outcome count");
    let half = n / 2;
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    let mut dirs = Vec::with_capacity(n);
    for k in 0..half {
        let z = 1.0 - (k as f64 + 0.5) / half as f64;
        let phi = golden * k as f64;
        dirs.push((z.acos(), phi));
    }
    let anti: Vec<(f64, f64)> = dirs.iter().map(|&(t, p)| (std::f64::consts::PI - t, p + std::f64::consts::PI)).collect();
    dirs.extend(anti);
    let elements = dirs
        .into_iter()
        .map(|(t, p)| {
            let v = [C64::new((t / 2.0).cos(), 0.0), C64::from_polar((t / 2.0).sin(), p)];
            HermitianMatrix::projector(&v).scale(2.0 / n as f64)
        })
        .collect();
    Povm::from_elements(elements)
}

/// `M_x = 1/n`, the trivial measurement with uniform outcomes.
pub fn uniform_povm(dim: usize, n: usize) -> Povm {
    Povm::from_elements(vec![HermitianMatrix::identity(dim).scale(1.0 / n as f64); n])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::operator_norm;
    use crate::povm::{degrade, validate};

    fn random_pair(seed: u64, outcomes: usize) -> (Povm, Povm) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (
            Povm::from_elements(crate::random::povm_elements(&mut rng, 2, outcomes, 1)),
            Povm::from_elements(crate::random::povm_elements(&mut rng, 2, outcomes, 2)),
        )
    }

    #[test]
    fn identical_povms_are_at_distance_zero() {
        let m = Povm::sigma_x();
        assert!(classical_distance(&m, &m).unwrap().value.abs() < 1e-12);
        assert!(quantum_distance(&m, &m).unwrap().value.abs() < 1e-7);
        assert!(seesaw_lower_bound(&m, &m, 3, 1).unwrap().value.abs() < 1e-12);
    }

    #[test]
    fn computational_versus_hadamard_basis() {
        let z = Povm::computational(2);
        let x = Povm::sigma_x();
        let oracle = operator_norm(&z.elements[0].sub(&x.elements[0]));
        assert!((oracle - 0.5f64.sqrt()).abs() < 1e-12);
        let c = classical_distance(&z, &x).unwrap();
        assert!((c.value - oracle).abs() < 1e-12);
        let q = quantum_distance(&z, &x).unwrap();
        assert!((q.value - oracle).abs() < 1e-6, "{}", q.value);
    }

    #[test]
    fn two_outcome_pairs_agree_with_operator_norm() {
        for seed in 0..6 {
            let (a, b) = random_pair(seed, 2);
            let oracle = operator_norm(&a.elements[0].sub(&b.elements[0]));
            let c = classical_distance(&a, &b).unwrap().value;
            let q = quantum_distance(&a, &b).unwrap().value;
            let s = seesaw_lower_bound(&a, &b, 4, seed).unwrap().value;
            assert!((c - oracle).abs() < 1e-10);
            assert!((q - oracle).abs() < 1e-6);
            assert!((s - oracle).abs() < 1e-6);
        }
    }

    #[test]
    fn reduced_and_choi_programs_agree() {
        for seed in 10..13 {
            let (a, b) = random_pair(seed, 3);
            let r = quantum_distance(&a, &b).unwrap().value;
            let f = quantum_distance_choi(&a, &b, &SdpOptions::default()).unwrap().value;
            assert!((r - f).abs() < 1e-6, "{r} vs {f}");
            let s = seesaw_lower_bound(&a, &b, 8, seed).unwrap().value;
            assert!(s <= r + 1e-6);
            assert!(classical_distance(&a, &b).unwrap().value <= r + 1e-6);
        }
    }

    #[test]
    fn quantum_witness_reproduces_value() {
        let (a, b) = random_pair(21, 3);
        let q = quantum_distance(&a, &b).unwrap();
        let (d, _) = differences(&a, &b).unwrap();
        let psi = &q.witness.state;
        let guesses = q.witness.guesses.as_ref().unwrap();
        let rho = HermitianMatrix::projector(psi);
        let id = HermitianMatrix::identity(2);
        let v: f64 = d.iter().zip(guesses).map(|(dx, n)| rho.inner(&dx.kron(&n.scale(2.0).sub(&id)))).sum::<f64>() * 0.5;
        assert!((v - q.value).abs() < 1e-5, "{v} vs {}", q.value);
    }

    #[test]
    fn enumeration_modes_agree() {
        let (a, b) = random_pair(3, 14);
        let s = classical_distance_with(&a, &b, Exec::Sequential).unwrap();
        let p = classical_distance_with(&a, &b, Exec::Parallel).unwrap();
        assert_eq!(s.value, p.value);
        let rho = HermitianMatrix::projector(&s.witness.state);
        let (d, _) = differences(&a, &b).unwrap();
        let v: f64 = 0.5 * d.iter().map(|m| rho.inner(m).abs()).sum::<f64>();
        assert!((v - s.value).abs() < 1e-10);
    }

    #[test]
    fn branch_bound_matches_enumeration() {
        for seed in 30..33 {
            let (a, b) = random_pair(seed, 10);
            let (d, _) = differences(&a, &b).unwrap();
            let (lo, hi, _) = qubit_branch_bound(&d, BRANCH_BOUND_TOL).unwrap();
            let exact = classical_distance(&a, &b).unwrap().value;
            assert!((lo - exact).abs() < 1e-9 && hi >= exact - 1e-12, "{lo} {hi} {exact}");
        }
    }

    #[test]
    fn sphere_discretization() {
        let m0 = sphere_povm(64);
        assert!(validate(&m0).is_valid());
        let m1 = uniform_povm(2, 64);
        let c = classical_distance(&m0, &m1).unwrap();
        assert!((c.value - 0.25).abs() < 0.01, "{}", c.value);
        assert!(c.upper_bound.unwrap() - c.value < 1e-9);
    }

    #[test]
    fn enumeration_guard_for_larger_systems() {
        let m = Povm::computational(3);
        let big: Vec<HermitianMatrix> = (0..30).map(|_| HermitianMatrix::identity(3).scale(1.0 / 30.0)).collect();
        let r = classical_distance(&m, &Povm::from_elements(big));
        assert!(matches!(r, Err(DistanceError::TooManyOutcomes { n: 30, .. })));
    }

    #[test]
    fn degradation_stays_within_epsilon() {
        let m = Povm::sigma_x();
        for &tau in &[0.0, 0.3, 0.8, 1.0] {
            let q = quantum_distance(&m, &degrade(&m, tau)).unwrap().value;
            assert!(q <= set_distance_epsilon(tau).1 + 1e-6);
        }
    }

    #[test]
    fn epsilon_values() {
        assert_eq!(set_distance_epsilon(1.0), (0.0, 0.0));
        let t = (std::f64::consts::PI / 4.0).cos();
        assert!((set_distance_epsilon(t).0 - 0.5 * (1.0 - t)).abs() < 1e-15);
    }
}
