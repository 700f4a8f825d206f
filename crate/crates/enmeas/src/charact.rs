//! Semidefinite characterizations of the effective measurements reachable with a battery.
//!
//! Every program here has the same shape. The joint energy eigenspaces ("sectors") of
//! target and battery carry PSD blocks `M̃^s_x` indexed by target levels, with
//! `Σ_x M̃^s_x = diag(populations)`, and the effective POVM is `M_x = Σ_s M̃^s_x` embedded on
//! the target. Rank-one sectors are plain nonnegative scalars.

use crate::linalg::{eig_hermitian, min_eigenvalue, operator_norm, CMatrix, HermitianMatrix, C64};
use crate::povm::{validate, Povm, PovmError};
use crate::random;
use crate::sdp::{self, BlockSdp, DualValue, MatrixExpr, ScalarExpr, SdpError, SdpOptions, SdpSolution, SdpStatus};
use crate::spectrum::{joint_eigenspaces, SpectrumError};
use crate::tau::BatteryState;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub const DEFAULT_MEMBER_TOL: f64 = 1e-7;

#[derive(Debug, thiserror::Error)]
pub enum CharactError {
    #[error(transparent)]
    Povm(#[from] PovmError),
    #[error(transparent)]
    Sdp(#[from] SdpError),
    #[error(transparent)]
    Spectrum(#[from] SpectrumError),
    #[error("solver stopped with status {status:?} (primal {primal:.6e}, dual {dual:.6e})")]
    NotConverged { status: SdpStatus, primal: f64, dual: f64 },
    #[error("slack {slack:.3e} exceeds tolerance but the separating functional does not verify (margin {margin:.3e})")]
    Unverified { slack: f64, margin: f64 },
    #[error("invalid input: {0}")]
    Input(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CharactOptions {
    pub sdp: SdpOptions,
    /// Largest completeness slack accepted as membership.
    pub member_tol: f64,
}

impl Default for CharactOptions {
    fn default() -> Self {
        Self { sdp: SdpOptions::default(), member_tol: DEFAULT_MEMBER_TOL }
    }
}

/// One joint eigenspace: entry `i` sits on target level `rows[i]` and its diagonal total is
/// `Σ_(j,c) c·p_j` over `pops[i]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SectorSpec {
    pub rows: Vec<usize>,
    pub pops: Vec<Vec<(usize, f64)>>,
}

impl SectorSpec {
    pub fn rank(&self) -> usize {
        self.rows.len()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SectorModel {
    pub target_dim: usize,
    pub num_pops: usize,
    pub sectors: Vec<SectorSpec>,
    /// `Σ_j w_j p_j ≤ cap`
    pub energy_cap: Option<(Vec<f64>, f64)>,
    /// Frozen populations; replaces the simplex and the energy cap.
    pub fixed: Option<Vec<f64>>,
}

impl SectorModel {
    /// Qubit target with gap Δ and a battery ladder `0, Δ, …, (d−1)Δ`.
    pub fn ladder(d: usize) -> Self {
        assert!(d >= 1, "ladder needs at least one level");
        let mut sectors = vec![SectorSpec { rows: vec![0], pops: vec![vec![(0, 1.0)]] }];
        for k in 1..d {
            sectors.push(SectorSpec { rows: vec![0, 1], pops: vec![vec![(k, 1.0)], vec![(k - 1, 1.0)]] });
        }
        sectors.push(SectorSpec { rows: vec![1], pops: vec![vec![(d - 1, 1.0)]] });
        SectorModel { target_dim: 2, num_pops: d, sectors, energy_cap: None, fixed: None }
    }

    /// Ladder with the mean-energy cap `Σ k p_k ≤ z`.
    pub fn ladder_inner(d: usize, z: f64) -> Self {
        let mut m = Self::ladder(d);
        m.energy_cap = Some(((0..d).map(|k| k as f64).collect(), z));
        m
    }

    /// Relaxation with the tail mass `P_d` of all levels `≥ d` lumped into one sector with
    /// totals `diag(P_d, P_d + p_{d−1})` and energy counted as `d·P_d`.
    pub fn ladder_outer(d: usize, z: f64) -> Self {
        let mut m = Self::ladder(d);
        let tail = d;
        m.num_pops = d + 1;
        *m.sectors.last_mut().unwrap() =
            SectorSpec { rows: vec![0, 1], pops: vec![vec![(tail, 1.0)], vec![(tail, 1.0), (d - 1, 1.0)]] };
        m.energy_cap = Some(((0..=d).map(|k| k as f64).collect(), z));
        m
    }

    /// Sectors of `H_S ⊗ 1 + 1 ⊗ H_B` for arbitrary nondegenerate spectra.
    pub fn multilevel(target_levels: &[f64], battery_levels: &[f64]) -> Result<Self, CharactError> {
        let scale = target_levels.iter().chain(battery_levels).fold(1.0f64, |a, &e| a.max(e.abs()));
        let js = joint_eigenspaces(target_levels, battery_levels, 1e-9 * scale)?;
        let sectors = js
            .sectors
            .iter()
            .map(|s| SectorSpec { rows: s.pairs.iter().map(|p| p.0).collect(), pops: s.pairs.iter().map(|p| vec![(p.1, 1.0)]).collect() })
            .collect();
        Ok(SectorModel { target_dim: js.target_dim, num_pops: js.battery_dim, sectors, energy_cap: None, fixed: None })
    }

    pub fn with_fixed_populations(mut self, p: Vec<f64>) -> Result<Self, CharactError> {
        if p.len() != self.num_pops {
            return Err(CharactError::Input(format!("{} populations for {} levels", p.len(), self.num_pops)));
        }
        if p.iter().any(|&x| x < -1e-12) || (p.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(CharactError::Input("populations must be a probability vector".into()));
        }
        self.fixed = Some(p);
        Ok(self)
    }

    fn kraus(&self, s: usize) -> CMatrix {
        let rows = &self.sectors[s].rows;
        CMatrix::from_fn(self.target_dim, rows.len(), |r, c| if rows[c] == r { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) })
    }

    fn unit(&self, r: usize) -> HermitianMatrix {
        let mut d = vec![0.0; self.target_dim];
        d[r] = 1.0;
        HermitianMatrix::from_real_diag(&d)
    }

    fn sector_total(&self, s: usize, pops: &[f64]) -> Vec<f64> {
        self.sectors[s].pops.iter().map(|terms| terms.iter().map(|&(j, c)| c * pops[j]).sum()).collect()
    }
}

#[derive(Debug, Clone, Copy)]
enum Var {
    Block(usize),
    Scalar(usize),
}

struct Built {
    p: BlockSdp,
    pops: Vec<usize>,
    vars: Vec<Vec<Var>>,
}

fn build(model: &SectorModel, outcomes: usize) -> Built {
    let mut p = BlockSdp::new();
    let pops: Vec<usize> = if model.fixed.is_some() { Vec::new() } else { (0..model.num_pops).map(|_| p.add_scalar()).collect() };
    let mut vars = Vec::with_capacity(model.sectors.len());
    for (s, sec) in model.sectors.iter().enumerate() {
        let r = sec.rank();
        let vs: Vec<Var> = (0..outcomes).map(|_| if r == 1 { Var::Scalar(p.add_scalar()) } else { Var::Block(p.add_block(r)) }).collect();
        match &model.fixed {
            Some(fixed) => {
                let total = model.sector_total(s, fixed);
                if r == 1 {
                    let e = vs.iter().fold(ScalarExpr::new(), |e, v| match v {
                        Var::Scalar(k) => e.scalar(*k, 1.0),
                        Var::Block(_) => unreachable!(),
                    });
                    p.eq_scalar(e, total[0]);
                } else {
                    let e = vs.iter().fold(MatrixExpr::new(r), |e, v| match v {
                        Var::Block(b) => e.block(*b, 1.0),
                        Var::Scalar(_) => unreachable!(),
                    });
                    p.eq_matrix(e, HermitianMatrix::from_real_diag(&total));
                }
            }
            None => {
                if r == 1 {
                    let mut e = vs.iter().fold(ScalarExpr::new(), |e, v| match v {
                        Var::Scalar(k) => e.scalar(*k, 1.0),
                        Var::Block(_) => unreachable!(),
                    });
                    for &(j, c) in &sec.pops[0] {
                        e = e.scalar(pops[j], -c);
                    }
                    p.eq_scalar(e, 0.0);
                } else {
                    let mut e = vs.iter().fold(MatrixExpr::new(r), |e, v| match v {
                        Var::Block(b) => e.block(*b, 1.0),
                        Var::Scalar(_) => unreachable!(),
                    });
                    for (i, terms) in sec.pops.iter().enumerate() {
                        for &(j, c) in terms {
                            let mut d = vec![0.0; r];
                            d[i] = -c;
                            e = e.scalar(pops[j], HermitianMatrix::from_real_diag(&d));
                        }
                    }
                    p.eq_matrix(e, HermitianMatrix::zeros(r));
                }
            }
        }
        vars.push(vs);
    }
    if model.fixed.is_none() {
        p.eq_scalar(pops.iter().fold(ScalarExpr::new(), |e, &j| e.scalar(j, 1.0)), 1.0);
        if let Some((w, cap)) = &model.energy_cap {
            p.le_scalar(pops.iter().zip(w).fold(ScalarExpr::new(), |e, (&j, &c)| e.scalar(j, c)), *cap);
        }
    }
    Built { p, pops, vars }
}

/// `coef · Σ_s embed(M̃^s_x)` added to `e`.
fn embedded(model: &SectorModel, b: &Built, x: usize, coef: f64, mut e: MatrixExpr) -> MatrixExpr {
    for (s, sec) in model.sectors.iter().enumerate() {
        e = match b.vars[s][x] {
            Var::Block(k) => e.mapped(k, coef, vec![model.kraus(s)]),
            Var::Scalar(k) => e.scalar(k, model.unit(sec.rows[0]).scale(coef)),
        };
    }
    e
}

/// `Σ_x tr(V_x M_x)` as a linear objective.
fn functional(model: &SectorModel, b: &Built, v: &[HermitianMatrix]) -> ScalarExpr {
    let mut e = ScalarExpr::new();
    for (x, vx) in v.iter().enumerate() {
        for (s, sec) in model.sectors.iter().enumerate() {
            e = match b.vars[s][x] {
                Var::Block(k) => {
                    let kr = model.kraus(s);
                    e.block(k, HermitianMatrix::from_product_unchecked(&(&(&kr.adjoint() * vx.as_matrix()) * &kr)))
                }
                Var::Scalar(k) => e.scalar(k, vx[(sec.rows[0], sec.rows[0])].re),
            };
        }
    }
    e
}

/// Residual level at which a stalled solve still counts, provided the caller's decision
/// does not depend on the remaining inaccuracy.
const STALLED_ACCEPT_TOL: f64 = 1e-6;

fn converged(p: &BlockSdp, opts: &SdpOptions) -> Result<SdpSolution, CharactError> {
    let sol = sdp::solve(p, opts)?;
    let scale = 1.0f64.max(sol.primal_objective.abs());
    let usable = sol.status == SdpStatus::Optimal
        || (matches!(sol.status, SdpStatus::Feasible | SdpStatus::MaxIter)
            && sol.primal_residual <= STALLED_ACCEPT_TOL
            && sol.dual_residual <= STALLED_ACCEPT_TOL
            && sol.gap.abs() <= STALLED_ACCEPT_TOL * scale);
    if usable {
        Ok(sol)
    } else {
        Err(CharactError::NotConverged { status: sol.status, primal: sol.primal_objective, dual: sol.dual_objective })
    }
}

/// Blocks of one sector, one per outcome (1×1 for rank-one sectors).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SectorBlocks {
    pub rows: Vec<usize>,
    pub blocks: Vec<HermitianMatrix>,
}

/// A feasible point of a characterization program.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Decomposition {
    pub populations: Vec<f64>,
    pub sectors: Vec<SectorBlocks>,
    /// `Σ_s M̃^s_x` embedded on the target.
    pub reconstructed: Vec<HermitianMatrix>,
    /// `max_x ‖Σ_s M̃^s_x − M_x‖_∞` against the POVM it was computed for (0 for optimizers).
    pub residual: f64,
}

impl Decomposition {
    fn from_solution(model: &SectorModel, b: &Built, sol: &SdpSolution, outcomes: usize) -> Self {
        let populations = match &model.fixed {
            Some(p) => p.clone(),
            None => b.pops.iter().map(|&j| sol.scalars[j]).collect(),
        };
        let sectors: Vec<SectorBlocks> = model
            .sectors
            .iter()
            .enumerate()
            .map(|(s, sec)| SectorBlocks {
                rows: sec.rows.clone(),
                blocks: (0..outcomes)
                    .map(|x| match b.vars[s][x] {
                        Var::Block(k) => sol.blocks[k].clone(),
                        Var::Scalar(k) => HermitianMatrix::from_real_diag(&[sol.scalars[k]]),
                    })
                    .collect(),
            })
            .collect();
        let reconstructed = reconstruct(model, &sectors, outcomes);
        Decomposition { populations, sectors, reconstructed, residual: 0.0 }
    }

    /// Re-check positivity, sector totals, the population constraints and the
    /// reconstruction of `m`, all within `tol`.
    pub fn verify(&self, model: &SectorModel, m: &Povm, tol: f64) -> Result<(), String> {
        if self.sectors.len() != model.sectors.len() {
            return Err("sector count mismatch".into());
        }
        if let Some(p) = self.populations.iter().find(|&&p| p < -tol) {
            return Err(format!("negative population {p:.3e}"));
        }
        if model.fixed.is_none() {
            let s: f64 = self.populations.iter().sum();
            if (s - 1.0).abs() > tol {
                return Err(format!("populations sum to {s}"));
            }
            if let Some((w, cap)) = &model.energy_cap {
                let e: f64 = self.populations.iter().zip(w).map(|(p, w)| p * w).sum();
                if e > cap + tol {
                    return Err(format!("mean energy {e} exceeds {cap}"));
                }
            }
        }
        for (s, sec) in self.sectors.iter().enumerate() {
            let total = model.sector_total(s, &self.populations);
            let sum = HermitianMatrix::sum(sec.rows.len(), &sec.blocks);
            if sum.max_abs_diff(&HermitianMatrix::from_real_diag(&total)) > tol {
                return Err(format!("sector {s} does not sum to its populations"));
            }
            for b in &sec.blocks {
                let l = min_eigenvalue(b);
                if l < -tol {
                    return Err(format!("sector {s} has eigenvalue {l:.3e}"));
                }
            }
        }
        let rec = reconstruct(model, &self.sectors, m.len());
        for (x, (r, mx)) in rec.iter().zip(&m.elements).enumerate() {
            let dev = operator_norm(&r.sub(mx));
            if dev > tol {
                return Err(format!("outcome {x} reconstructed with error {dev:.3e}"));
            }
        }
        Ok(())
    }
}

fn reconstruct(model: &SectorModel, sectors: &[SectorBlocks], outcomes: usize) -> Vec<HermitianMatrix> {
    (0..outcomes)
        .map(|x| {
            let mut acc = HermitianMatrix::zeros(model.target_dim);
            for (s, sec) in sectors.iter().enumerate() {
                acc = acc.add(&sec.blocks[x].conjugate_by(&model.kraus(s)));
            }
            acc
        })
        .collect()
}

/// A linear functional with `Σ_x tr(V_x M_x) > max_{N in set} Σ_x tr(V_x N_x)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Separation {
    pub functional: Vec<HermitianMatrix>,
    pub value_on_target: f64,
    /// Upper bound on the functional over the set (dual objective of an independent solve).
    pub support_bound: f64,
    pub margin: f64,
}

impl Separation {
    /// Recompute the support bound from scratch and require a positive margin.
    pub fn verify(&self, model: &SectorModel, m: &Povm, opts: &CharactOptions) -> Result<f64, CharactError> {
        let value: f64 = self.functional.iter().zip(&m.elements).map(|(v, mx)| v.inner(mx)).sum();
        let opt = optimize(model, &self.functional, opts)?;
        Ok(value - opt.upper)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Member,
    NonMember,
    Undecided,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Certificate {
    Decomposition(Decomposition),
    Separation(Separation),
    /// The inner program failed and the outer one succeeded.
    Undecided { inner: Separation, outer: Decomposition },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MembershipVerdict {
    pub verdict: Verdict,
    /// Minimal `t` with `−t·1 ⪯ Σ_s M̃^s_x − M_x ⪯ t·1` for all `x`.
    pub slack: f64,
    pub certificate: Certificate,
    pub gap_bound: Option<f64>,
}

/// Maximum of a linear functional over a characterized set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Optimum {
    pub value: f64,
    /// Dual objective; an upper bound up to solver tolerance.
    pub upper: f64,
    pub povm: Povm,
    pub decomposition: Decomposition,
}

fn check_povm(m: &Povm, target_dim: usize) -> Result<(), CharactError> {
    if m.dim != target_dim {
        return Err(PovmError::Dimension(format!("POVM on dimension {} for a {}-level target", m.dim, target_dim)).into());
    }
    let d = validate(m);
    if !d.is_valid() {
        return Err(PovmError::Invalid(d).into());
    }
    Ok(())
}

struct SlackOutcome {
    slack: f64,
    decomposition: Decomposition,
    separation: Option<Separation>,
}

fn slack_program(model: &SectorModel, m: &Povm, opts: &CharactOptions) -> Result<SlackOutcome, CharactError> {
    check_povm(m, model.target_dim)?;
    let n = m.len();
    let mut b = build(model, n);
    let t = b.p.add_scalar();
    let id = HermitianMatrix::identity(model.target_dim);
    let mut idx = Vec::with_capacity(n);
    for (x, mx) in m.elements.iter().enumerate() {
        let up = embedded(model, &b, x, 1.0, MatrixExpr::new(model.target_dim)).scalar(t, id.scale(-1.0));
        let lo = embedded(model, &b, x, -1.0, MatrixExpr::new(model.target_dim)).scalar(t, id.scale(-1.0));
        let i = b.p.inequalities.len();
        b.p.le_matrix(up, mx.clone());
        b.p.le_matrix(lo, mx.scale(-1.0));
        idx.push(i);
    }
    b.p.objective = ScalarExpr::new().scalar(t, -1.0);
    let sol = converged(&b.p, &opts.sdp)?;
    let slack = sol.scalars[t].max(0.0);
    // a stalled solve only decides when both bounds on the slack fall on the same side
    if sol.status != SdpStatus::Optimal && (slack > opts.member_tol) != (-sol.dual_objective > opts.member_tol) {
        return Err(CharactError::NotConverged { status: sol.status, primal: sol.primal_objective, dual: sol.dual_objective });
    }
    let mut decomposition = Decomposition::from_solution(model, &b, &sol, n);
    decomposition.residual =
        decomposition.reconstructed.iter().zip(&m.elements).map(|(r, mx)| operator_norm(&r.sub(mx))).fold(0.0, f64::max);
    let separation = if slack > opts.member_tol {
        let functional: Vec<HermitianMatrix> = idx
            .iter()
            .map(|&i| match (&sol.dual.inequalities[i], &sol.dual.inequalities[i + 1]) {
                (DualValue::Matrix(yp), DualValue::Matrix(ym)) => ym.sub(yp),
                _ => unreachable!("matrix constraints carry matrix multipliers"),
            })
            .collect();
        let value_on_target: f64 = functional.iter().zip(&m.elements).map(|(v, mx)| v.inner(mx)).sum();
        let support = optimize(model, &functional, opts)?;
        let margin = value_on_target - support.upper;
        if margin <= 0.0 {
            return Err(CharactError::Unverified { slack, margin });
        }
        Some(Separation { functional, value_on_target, support_bound: support.upper, margin })
    } else {
        None
    };
    Ok(SlackOutcome { slack, decomposition, separation })
}

/// Membership of `m` in the set described by `model`; never undecided.
pub fn membership(model: &SectorModel, m: &Povm, opts: &CharactOptions) -> Result<MembershipVerdict, CharactError> {
    let o = slack_program(model, m, opts)?;
    Ok(match o.separation {
        None => MembershipVerdict {
            verdict: Verdict::Member,
            slack: o.slack,
            certificate: Certificate::Decomposition(o.decomposition),
            gap_bound: None,
        },
        Some(s) => MembershipVerdict { verdict: Verdict::NonMember, slack: o.slack, certificate: Certificate::Separation(s), gap_bound: None },
    })
}

/// Maximize `Σ_x tr(V_x M_x)` over the set described by `model`.
pub fn optimize(model: &SectorModel, v: &[HermitianMatrix], opts: &CharactOptions) -> Result<Optimum, CharactError> {
    if v.is_empty() || v.iter().any(|m| m.dim() != model.target_dim) {
        return Err(CharactError::Input(format!("objective needs at least one {0}×{0} operator", model.target_dim)));
    }
    let mut b = build(model, v.len());
    b.p.objective = functional(model, &b, v);
    let sol = converged(&b.p, &opts.sdp)?;
    let decomposition = Decomposition::from_solution(model, &b, &sol, v.len());
    let povm = Povm::from_elements(decomposition.reconstructed.clone());
    Ok(Optimum { value: sol.primal_objective, upper: sol.dual_objective, povm, decomposition })
}

/// Membership in the set reachable with a `d`-level ladder battery.
pub fn membership_finite(m: &Povm, d: usize, opts: &CharactOptions) -> Result<MembershipVerdict, CharactError> {
    if d == 0 {
        return Err(CharactError::Input("d must be at least 1".into()));
    }
    membership(&SectorModel::ladder(d), m, opts)
}

pub fn optimize_finite(v: &[HermitianMatrix], d: usize, opts: &CharactOptions) -> Result<Optimum, CharactError> {
    if d == 0 {
        return Err(CharactError::Input("d must be at least 1".into()));
    }
    optimize(&SectorModel::ladder(d), v, opts)
}

fn energy_args(ebar: f64, delta: f64, d: usize) -> Result<f64, CharactError> {
    if !(ebar > 0.0 && delta > 0.0) || d < 2 {
        return Err(CharactError::Input("need ebar > 0, delta > 0 and d ≥ 2".into()));
    }
    Ok(ebar / delta)
}

/// `Ē/(Δ(d−1))`
pub fn energy_gap_bound(ebar: f64, delta: f64, d: usize) -> f64 {
    ebar / (delta * (d as f64 - 1.0))
}

/// Membership in the set reachable with mean battery energy at most `ebar`: member if the
/// truncated inner program accepts, non-member if the outer relaxation rejects.
pub fn membership_energy(m: &Povm, ebar: f64, delta: f64, d: usize, opts: &CharactOptions) -> Result<MembershipVerdict, CharactError> {
    let z = energy_args(ebar, delta, d)?;
    let gap_bound = Some(energy_gap_bound(ebar, delta, d));
    let inner = slack_program(&SectorModel::ladder_inner(d, z), m, opts)?;
    let Some(inner_sep) = inner.separation else {
        return Ok(MembershipVerdict {
            verdict: Verdict::Member,
            slack: inner.slack,
            certificate: Certificate::Decomposition(inner.decomposition),
            gap_bound,
        });
    };
    let outer = slack_program(&SectorModel::ladder_outer(d, z), m, opts)?;
    Ok(match outer.separation {
        Some(s) => MembershipVerdict { verdict: Verdict::NonMember, slack: outer.slack, certificate: Certificate::Separation(s), gap_bound },
        None => MembershipVerdict {
            verdict: Verdict::Undecided,
            slack: inner.slack,
            certificate: Certificate::Undecided { inner: inner_sep, outer: outer.decomposition },
            gap_bound,
        },
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyOptimum {
    /// Optimum over the outer relaxation.
    pub upper: f64,
    /// Optimum over the inner truncation, attained by `povm`.
    pub lower: f64,
    pub povm: Povm,
    pub gap: f64,
    pub gap_bound: f64,
    /// `Σ_x ‖V_x‖_∞`
    pub objective_norm: f64,
}

pub fn optimize_energy(v: &[HermitianMatrix], ebar: f64, delta: f64, d: usize, opts: &CharactOptions) -> Result<EnergyOptimum, CharactError> {
    let z = energy_args(ebar, delta, d)?;
    let outer = optimize(&SectorModel::ladder_outer(d, z), v, opts)?;
    let inner = optimize(&SectorModel::ladder_inner(d, z), v, opts)?;
    Ok(EnergyOptimum {
        upper: outer.value,
        lower: inner.value,
        povm: inner.povm,
        gap: outer.value - inner.value,
        gap_bound: energy_gap_bound(ebar, delta, d),
        objective_norm: v.iter().map(operator_norm).sum(),
    })
}

pub fn membership_multilevel(
    m: &Povm,
    target_levels: &[f64],
    battery_levels: &[f64],
    opts: &CharactOptions,
) -> Result<MembershipVerdict, CharactError> {
    membership(&SectorModel::multilevel(target_levels, battery_levels)?, m, opts)
}

/// A member of the `d`-level set that no battery with the given populations reaches.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Counterexample {
    pub povm: Povm,
    pub membership: Decomposition,
    pub separation: Separation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UniversalCheck {
    pub populations: Vec<f64>,
    pub trials_run: usize,
    pub counterexample: Option<Counterexample>,
}

/// Search for POVMs reachable with some `d`-level ladder battery but not with the
/// populations of `sigma`. Candidates maximize `Σ_x tr(N_x M_x)` over the `d`-level set for
/// random rank-one qubit POVMs `N` with 3 or 4 outcomes.
pub fn universal_state_check(
    sigma: &BatteryState,
    d: usize,
    trials: usize,
    seed: u64,
    opts: &CharactOptions,
) -> Result<UniversalCheck, CharactError> {
    if sigma.dim() != d {
        return Err(CharactError::Input(format!("state has {} levels, expected {d}", sigma.dim())));
    }
    let populations = sigma.populations();
    let free = SectorModel::ladder(d);
    let fixed = SectorModel::ladder(d).with_fixed_populations(populations.clone())?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for trial in 0..trials {
        if d == 1 {
            return Ok(UniversalCheck { populations, trials_run: trial, counterexample: None });
        }
        let outcomes = rng.gen_range(3..=4);
        let n = random::povm_elements(&mut rng, 2, outcomes, 1);
        let candidate = optimize(&free, &n, opts)?.povm;
        let candidate = symmetrize_completion(candidate);
        let fx = slack_program(&fixed, &candidate, opts)?;
        let Some(separation) = fx.separation else { continue };
        let mv = slack_program(&free, &candidate, opts)?;
        if mv.separation.is_some() {
            continue;
        }
        return Ok(UniversalCheck {
            populations,
            trials_run: trial + 1,
            counterexample: Some(Counterexample { povm: candidate, membership: mv.decomposition, separation }),
        });
    }
    Ok(UniversalCheck { populations, trials_run: trials, counterexample: None })
}

/// Push solver round-off out of a reconstructed POVM: clip tiny negative eigenvalues and fold
/// the completeness defect into the last element.
fn symmetrize_completion(p: Povm) -> Povm {
    let dim = p.dim;
    let mut el: Vec<HermitianMatrix> = p.elements.iter().map(|m| eig_hermitian(m).map(|l| l.max(0.0))).collect();
    let sum = HermitianMatrix::sum(dim, &el);
    let defect = HermitianMatrix::identity(dim).sub(&sum);
    let last = el.len() - 1;
    el[last] = el[last].add(&defect);
    Povm::with_labels(el, p.labels)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::povm::degrade;
    use crate::tau::tau_finite;

    fn opts() -> CharactOptions {
        CharactOptions::default()
    }

    #[test]
    fn diagonal_povms_need_no_battery() {
        let m = Povm::from_elements(vec![HermitianMatrix::from_real_diag(&[0.3, 0.9]), HermitianMatrix::from_real_diag(&[0.7, 0.1])]);
        let v = membership_finite(&m, 1, &opts()).unwrap();
        assert_eq!(v.verdict, Verdict::Member);
        let Certificate::Decomposition(dec) = &v.certificate else { panic!() };
        dec.verify(&SectorModel::ladder(1), &m, 1e-7).unwrap();
    }

    #[test]
    fn sigma_x_boundary() {
        for d in [2usize, 3, 5] {
            let t = tau_finite(d);
            let inside = membership_finite(&degrade(&Povm::sigma_x(), t), d, &opts()).unwrap();
            assert_eq!(inside.verdict, Verdict::Member, "d = {d}");
            let m = degrade(&Povm::sigma_x(), t + 1e-3);
            let outside = membership_finite(&m, d, &opts()).unwrap();
            assert_eq!(outside.verdict, Verdict::NonMember, "d = {d}");
            let Certificate::Separation(s) = &outside.certificate else { panic!() };
            assert!(s.verify(&SectorModel::ladder(d), &m, &opts()).unwrap() > 0.0);
        }
    }

    #[test]
    fn plus_minus_discrimination() {
        let plus = [C64::new(0.5f64.sqrt(), 0.0), C64::new(0.5f64.sqrt(), 0.0)];
        let minus = [C64::new(0.5f64.sqrt(), 0.0), C64::new(-(0.5f64.sqrt()), 0.0)];
        let v = vec![HermitianMatrix::projector(&plus).scale(0.5), HermitianMatrix::projector(&minus).scale(0.5)];
        // brute force over diagonal POVMs: every diagonal element gives ½ on |±⟩
        assert!((optimize_finite(&v, 1, &opts()).unwrap().value - 0.5).abs() < 1e-7);
        let three = optimize_finite(&v, 3, &opts()).unwrap();
        assert!((three.value - 0.5 * (1.0 + (std::f64::consts::PI / 4.0).cos())).abs() < 1e-7);
        assert!(three.upper >= three.value - 1e-7);
    }

    #[test]
    fn outer_contains_inner() {
        let plus = [C64::new(0.5f64.sqrt(), 0.0), C64::new(0.5f64.sqrt(), 0.0)];
        let minus = [C64::new(0.5f64.sqrt(), 0.0), C64::new(-(0.5f64.sqrt()), 0.0)];
        let v = vec![HermitianMatrix::projector(&plus).scale(0.5), HermitianMatrix::projector(&minus).scale(0.5)];
        let r = optimize_energy(&v, 2.0, 1.0, 8, &opts()).unwrap();
        assert!(r.gap >= -1e-7 && r.gap <= r.gap_bound * r.objective_norm);
        assert!(validate(&symmetrize_completion(r.povm.clone())).is_valid());
    }

    #[test]
    fn fixed_uniform_state_reaches_half() {
        let m = degrade(&Povm::sigma_x(), 0.5);
        let model = SectorModel::ladder(2).with_fixed_populations(vec![0.5, 0.5]).unwrap();
        let v = membership(&model, &m, &opts()).unwrap();
        assert_eq!(v.verdict, Verdict::Member);
    }

    #[test]
    fn multilevel_ladder_matches_finite() {
        let m = degrade(&Povm::sigma_x(), 0.6);
        let a = membership_finite(&m, 3, &opts()).unwrap().verdict;
        let b = membership_multilevel(&m, &[0.0, 1.0], &[0.0, 1.0, 2.0], &opts()).unwrap().verdict;
        assert_eq!(a, b);
        let model = SectorModel::multilevel(&[0.0, 1.0], &[0.0, 1.0, 2.0]).unwrap();
        assert_eq!(model.sectors, SectorModel::ladder(3).sectors);
    }

    #[test]
    fn incommensurate_battery_gives_only_diagonal() {
        let r = membership_multilevel(&degrade(&Povm::sigma_x(), 0.05), &[0.0, 1.0], &[0.0, 2f64.sqrt()], &opts()).unwrap();
        assert_eq!(r.verdict, Verdict::NonMember);
        let r = membership_multilevel(&degrade(&Povm::sigma_x(), 0.0), &[0.0, 1.0], &[0.0, 2f64.sqrt()], &opts()).unwrap();
        assert_eq!(r.verdict, Verdict::Member);
    }

    #[test]
    fn outer_tail_sector_layout() {
        let m = SectorModel::ladder_outer(3, 1.0);
        assert_eq!(m.num_pops, 4);
        assert_eq!(m.sectors.len(), 4);
        assert_eq!(m.sectors[3].pops, vec![vec![(3, 1.0)], vec![(3, 1.0), (2, 1.0)]]);
    }
}
