//! Small block-diagonal semidefinite programs over complex Hermitian blocks.
//!
//! Problems are stated with Hermitian PSD block variables, nonnegative scalars, scalar and
//! matrix equalities, scalar inequalities and linear matrix inequalities, and a linear
//! objective to maximize. They are solved by a homogeneous self-dual interior point method
//! with Nesterov–Todd scaling and Mehrotra correction. Each complex n×n block is handled as
//! the real 2n×2n PSD cone of its realification; duals and certificates are mapped back to
//! complex Hermitian matrices.

use crate::linalg::{eig_hermitian, CMatrix, HermitianMatrix, C64};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

pub const DEFAULT_FEAS_TOL: f64 = 1e-8;
pub const DEFAULT_GAP_TOL: f64 = 1e-8;
pub const DEFAULT_MAX_ITER: usize = 200;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SdpError {
    #[error("inconsistent problem data: {0}")]
    Dimension(String),
    #[error("problem is unbounded (primal ray with objective slope {0:.3e})")]
    Unbounded(f64),
    #[error("numerical failure: {0}")]
    Numerical(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SdpOptions {
    pub feas_tol: f64,
    pub gap_tol: f64,
    pub max_iter: usize,
}

impl Default for SdpOptions {
    fn default() -> Self {
        SdpOptions { feas_tol: DEFAULT_FEAS_TOL, gap_tol: DEFAULT_GAP_TOL, max_iter: DEFAULT_MAX_ITER }
    }
}

/// Linear map applied to a block variable inside a matrix expression.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum BlockMap {
    Identity,
    /// X ↦ Σ_i K_i X K_i†
    Congruence(Vec<CMatrix>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatTerm {
    pub block: usize,
    pub coef: f64,
    pub map: BlockMap,
}

/// Σ coef·map(X_b) + Σ s·M, a Hermitian matrix of size `dim`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixExpr {
    pub dim: usize,
    pub blocks: Vec<MatTerm>,
    pub scalars: Vec<(usize, HermitianMatrix)>,
}

impl MatrixExpr {
    pub fn new(dim: usize) -> Self {
        MatrixExpr { dim, blocks: Vec::new(), scalars: Vec::new() }
    }

    pub fn block(mut self, block: usize, coef: f64) -> Self {
        self.blocks.push(MatTerm { block, coef, map: BlockMap::Identity });
        self
    }

    pub fn mapped(mut self, block: usize, coef: f64, kraus: Vec<CMatrix>) -> Self {
        self.blocks.push(MatTerm { block, coef, map: BlockMap::Congruence(kraus) });
        self
    }

    pub fn scalar(mut self, s: usize, m: HermitianMatrix) -> Self {
        self.scalars.push((s, m));
        self
    }
}

/// Σ Re tr(C_b X_b) + Σ a_s·s.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ScalarExpr {
    pub blocks: Vec<(usize, HermitianMatrix)>,
    pub scalars: Vec<(usize, f64)>,
}

impl ScalarExpr {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn block(mut self, block: usize, c: HermitianMatrix) -> Self {
        self.blocks.push((block, c));
        self
    }

    pub fn scalar(mut self, s: usize, a: f64) -> Self {
        self.scalars.push((s, a));
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Constraint {
    Scalar { expr: ScalarExpr, rhs: f64 },
    Matrix { expr: MatrixExpr, rhs: HermitianMatrix },
}

/// maximize objective s.t. equalities (expr = rhs), inequalities (expr ≤ rhs, or ⪯ for
/// matrices), blocks ⪰ 0, scalars ≥ 0.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct BlockSdp {
    pub blocks: Vec<usize>,
    pub num_scalars: usize,
    pub equalities: Vec<Constraint>,
    pub inequalities: Vec<Constraint>,
    pub objective: ScalarExpr,
}

impl BlockSdp {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_block(&mut self, dim: usize) -> usize {
        self.blocks.push(dim);
        self.blocks.len() - 1
    }

    pub fn add_scalar(&mut self) -> usize {
        self.num_scalars += 1;
        self.num_scalars - 1
    }

    pub fn eq_scalar(&mut self, expr: ScalarExpr, rhs: f64) {
        self.equalities.push(Constraint::Scalar { expr, rhs });
    }

    pub fn eq_matrix(&mut self, expr: MatrixExpr, rhs: HermitianMatrix) {
        self.equalities.push(Constraint::Matrix { expr, rhs });
    }

    pub fn le_scalar(&mut self, expr: ScalarExpr, rhs: f64) {
        self.inequalities.push(Constraint::Scalar { expr, rhs });
    }

    pub fn le_matrix(&mut self, expr: MatrixExpr, rhs: HermitianMatrix) {
        self.inequalities.push(Constraint::Matrix { expr, rhs });
    }

    pub fn evaluate_scalar(&self, e: &ScalarExpr, blocks: &[HermitianMatrix], scalars: &[f64]) -> f64 {
        e.blocks.iter().map(|(b, c)| c.inner(&blocks[*b])).sum::<f64>()
            + e.scalars.iter().map(|(s, a)| a * scalars[*s]).sum::<f64>()
    }

    pub fn evaluate_matrix(&self, e: &MatrixExpr, blocks: &[HermitianMatrix], scalars: &[f64]) -> HermitianMatrix {
        let mut acc = CMatrix::zeros(e.dim, e.dim);
        for t in &e.blocks {
            acc = &acc + &apply_map(&t.map, blocks[t.block].as_matrix()).scale_re(t.coef);
        }
        for (s, m) in &e.scalars {
            acc = &acc + &m.as_matrix().scale_re(scalars[*s]);
        }
        HermitianMatrix::from_product_unchecked(&acc)
    }
}

fn apply_map(map: &BlockMap, x: &CMatrix) -> CMatrix {
    match map {
        BlockMap::Identity => x.clone(),
        BlockMap::Congruence(ks) => {
            let mut acc: Option<CMatrix> = None;
            for k in ks {
                let t = &(k * x) * &k.adjoint();
                acc = Some(match acc {
                    None => t,
                    Some(a) => &a + &t,
                });
            }
            acc.expect("congruence map needs at least one operator")
        }
    }
}

fn apply_adjoint(map: &BlockMap, y: &CMatrix) -> CMatrix {
    match map {
        BlockMap::Identity => y.clone(),
        BlockMap::Congruence(ks) => {
            let mut acc: Option<CMatrix> = None;
            for k in ks {
                let t = &(&k.adjoint() * y) * k;
                acc = Some(match acc {
                    None => t,
                    Some(a) => &a + &t,
                });
            }
            acc.expect("congruence map needs at least one operator")
        }
    }
}

/// Multiplier attached to a constraint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum DualValue {
    Scalar(f64),
    Matrix(HermitianMatrix),
}

impl DualValue {
    fn pair_rhs(&self, c: &Constraint) -> f64 {
        match (self, c) {
            (DualValue::Scalar(y), Constraint::Scalar { rhs, .. }) => y * rhs,
            (DualValue::Matrix(y), Constraint::Matrix { rhs, .. }) => y.inner(rhs),
            _ => panic!("dual value kind does not match constraint"),
        }
    }

    fn norm(&self) -> f64 {
        match self {
            DualValue::Scalar(y) => y.abs(),
            DualValue::Matrix(y) => y.as_matrix().frobenius_norm(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualSolution {
    pub equalities: Vec<DualValue>,
    pub inequalities: Vec<DualValue>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SdpStatus {
    Optimal,
    Feasible,
    Infeasible,
    MaxIter,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SdpSolution {
    pub status: SdpStatus,
    pub primal_objective: f64,
    pub dual_objective: f64,
    pub gap: f64,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub iterations: usize,
    pub blocks: Vec<HermitianMatrix>,
    pub scalars: Vec<f64>,
    pub dual: DualSolution,
    /// Farkas multipliers when infeasible: they satisfy the dual cone conditions with
    /// Σ ⟨y, rhs⟩ = −1.
    pub certificate: Option<DualSolution>,
}

/// Result of re-checking dual multipliers against the problem data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DualCheck {
    /// Σ ⟨multiplier, rhs⟩.
    pub rhs_value: f64,
    /// Most negative eigenvalue among the block reduced costs and LMI multipliers, and the most
    /// negative scalar reduced cost (0 if none is negative).
    pub cone_violation: f64,
    /// Scale of the multipliers, for relative comparisons.
    pub scale: f64,
}

/// Evaluate Σ_i y_i·F_i − objective_weight·c on every variable and check the dual cone
/// conditions directly on the complex constraint data.
pub fn check_dual(p: &BlockSdp, d: &DualSolution, objective_weight: f64) -> Result<DualCheck, SdpError> {
    if d.equalities.len() != p.equalities.len() || d.inequalities.len() != p.inequalities.len() {
        return Err(SdpError::Dimension("multiplier count does not match constraints".into()));
    }
    let mut block_cost: Vec<CMatrix> = p.blocks.iter().map(|&n| CMatrix::zeros(n, n)).collect();
    let mut scalar_cost = vec![0.0; p.num_scalars];
    let mut add = |c: &Constraint, y: &DualValue, w: f64| match (c, y) {
        (Constraint::Scalar { expr, .. }, DualValue::Scalar(y)) => {
            for (b, m) in &expr.blocks {
                block_cost[*b] = &block_cost[*b] + &m.as_matrix().scale_re(w * y);
            }
            for (s, a) in &expr.scalars {
                scalar_cost[*s] += w * y * a;
            }
        }
        (Constraint::Matrix { expr, .. }, DualValue::Matrix(y)) => {
            for t in &expr.blocks {
                block_cost[t.block] = &block_cost[t.block] + &apply_adjoint(&t.map, y.as_matrix()).scale_re(w * t.coef);
            }
            for (s, m) in &expr.scalars {
                scalar_cost[*s] += w * y.inner(m);
            }
        }
        _ => panic!("dual value kind does not match constraint"),
    };
    for (c, y) in p.equalities.iter().zip(&d.equalities) {
        add(c, y, 1.0);
    }
    for (c, y) in p.inequalities.iter().zip(&d.inequalities) {
        add(c, y, 1.0);
    }
    for (b, m) in &p.objective.blocks {
        block_cost[*b] = &block_cost[*b] - &m.as_matrix().scale_re(objective_weight);
    }
    for (s, a) in &p.objective.scalars {
        scalar_cost[*s] -= objective_weight * a;
    }
    let mut violation = 0.0f64;
    for m in &block_cost {
        let h = HermitianMatrix::from_product_unchecked(m);
        violation = violation.min(eig_hermitian(&h).eigenvalues.first().copied().unwrap_or(0.0));
    }
    for s in &scalar_cost {
        violation = violation.min(*s);
    }
    for y in &d.inequalities {
        match y {
            DualValue::Scalar(v) => violation = violation.min(*v),
            DualValue::Matrix(m) => {
                violation = violation.min(eig_hermitian(m).eigenvalues.first().copied().unwrap_or(0.0))
            }
        }
    }
    let rhs_value = p.equalities.iter().zip(&d.equalities).map(|(c, y)| y.pair_rhs(c)).sum::<f64>()
        + p.inequalities.iter().zip(&d.inequalities).map(|(c, y)| y.pair_rhs(c)).sum::<f64>();
    let scale = d.equalities.iter().chain(&d.inequalities).map(DualValue::norm).fold(0.0, f64::max).max(1e-300);
    Ok(DualCheck { rhs_value, cone_violation: violation, scale })
}

/// A Farkas certificate proves infeasibility when the multipliers lie in the dual cones (up
/// to `tol`) while pairing negatively with the right-hand sides. Returns the margin
/// −Σ⟨y, rhs⟩ relative to the multiplier scale.
pub fn verify_infeasibility(p: &BlockSdp, cert: &DualSolution, tol: f64) -> Result<f64, String> {
    let chk = check_dual(p, cert, 0.0).map_err(|e| e.to_string())?;
    let margin = -chk.rhs_value / chk.scale;
    if chk.cone_violation < -tol * chk.scale {
        return Err(format!("multipliers leave the dual cone by {:.3e}", chk.cone_violation));
    }
    if margin <= tol {
        return Err(format!("certificate margin {margin:.3e} does not exceed {tol:.3e}"));
    }
    Ok(margin)
}

// ---------------------------------------------------------------------------------------
// real parametrization of Hermitian blocks

fn num_params(n: usize) -> usize {
    n * n
}

/// Hermitian basis element p: diagonal entries first, then (Re, Im) of each i<j.
fn basis(n: usize, p: usize) -> CMatrix {
    let mut m = CMatrix::zeros(n, n);
    if p < n {
        m[(p, p)] = C64::new(1.0, 0.0);
        return m;
    }
    let (i, j, im) = off_index(n, p);
    if im {
        m[(i, j)] = C64::new(0.0, 1.0);
        m[(j, i)] = C64::new(0.0, -1.0);
    } else {
        m[(i, j)] = C64::new(1.0, 0.0);
        m[(j, i)] = C64::new(1.0, 0.0);
    }
    m
}

fn off_index(n: usize, p: usize) -> (usize, usize, bool) {
    let q = (p - n) / 2;
    let im = (p - n) % 2 == 1;
    let mut k = 0;
    for i in 0..n {
        for j in i + 1..n {
            if k == q {
                return (i, j, im);
            }
            k += 1;
        }
    }
    unreachable!("parameter index out of range")
}

fn to_params(m: &CMatrix) -> Vec<f64> {
    let n = m.rows();
    let mut v = Vec::with_capacity(n * n);
    for i in 0..n {
        v.push(m[(i, i)].re);
    }
    for i in 0..n {
        for j in i + 1..n {
            v.push(m[(i, j)].re);
            v.push(m[(i, j)].im);
        }
    }
    v
}

fn from_params(n: usize, v: &[f64]) -> HermitianMatrix {
    let mut m = CMatrix::zeros(n, n);
    for i in 0..n {
        m[(i, i)] = C64::new(v[i], 0.0);
    }
    let mut k = n;
    for i in 0..n {
        for j in i + 1..n {
            m[(i, j)] = C64::new(v[k], v[k + 1]);
            m[(j, i)] = C64::new(v[k], -v[k + 1]);
            k += 2;
        }
    }
    HermitianMatrix::from_product_unchecked(&m)
}

/// Hermitian dual matrix Y with Re tr(Y H) = Σ_r y_r·param_r(H).
fn dual_from_params(n: usize, y: &[f64]) -> HermitianMatrix {
    let mut m = CMatrix::zeros(n, n);
    for i in 0..n {
        m[(i, i)] = C64::new(y[i], 0.0);
    }
    let mut k = n;
    for i in 0..n {
        for j in i + 1..n {
            m[(i, j)] = C64::new(0.5 * y[k], 0.5 * y[k + 1]);
            m[(j, i)] = C64::new(0.5 * y[k], -0.5 * y[k + 1]);
            k += 2;
        }
    }
    HermitianMatrix::from_product_unchecked(&m)
}

fn realify(m: &CMatrix) -> DMatrix<f64> {
    let n = m.rows();
    DMatrix::from_fn(2 * n, 2 * n, |i, j| {
        let (a, b) = (i % n, j % n);
        let x = m[(a, b)];
        match (i < n, j < n) {
            (true, true) | (false, false) => x.re,
            (true, false) => -x.im,
            (false, true) => x.im,
        }
    })
}

/// Complex Hermitian W with Re tr(W M) = tr(realify(M)·Z).
fn unrealify_dual(z: &DMatrix<f64>) -> HermitianMatrix {
    let n = z.nrows() / 2;
    let m = CMatrix::from_fn(n, n, |i, j| {
        let p = z[(i, j)] + z[(i + n, j + n)];
        let q = z[(i + n, j)] - z[(i, j + n)];
        C64::new(p, q)
    });
    HermitianMatrix::from_product_unchecked(&m)
}

const SQRT2: f64 = std::f64::consts::SQRT_2;

fn svec_len(n: usize) -> usize {
    n * (n + 1) / 2
}

fn svec(m: &DMatrix<f64>) -> Vec<f64> {
    let n = m.nrows();
    let mut v = Vec::with_capacity(svec_len(n));
    for j in 0..n {
        v.push(m[(j, j)]);
        for i in j + 1..n {
            v.push(SQRT2 * 0.5 * (m[(i, j)] + m[(j, i)]));
        }
    }
    v
}

fn smat(v: &[f64], n: usize) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(n, n);
    let mut k = 0;
    for j in 0..n {
        m[(j, j)] = v[k];
        k += 1;
        for i in j + 1..n {
            m[(i, j)] = v[k] / SQRT2;
            m[(j, i)] = v[k] / SQRT2;
            k += 1;
        }
    }
    m
}

// ---------------------------------------------------------------------------------------
// compiled real conic form: min cᵀx s.t. Ax = b, Gx + s = h, s ∈ K

#[derive(Debug, Clone, Copy, PartialEq)]
enum ConeKind {
    Lp,
    Psd(usize),
}

#[derive(Debug, Clone)]
struct Cone {
    kind: ConeKind,
    offset: usize,
    dim: usize,
    cols: Vec<usize>,
    /// dim × cols.len()
    g: DMatrix<f64>,
}

#[derive(Debug, Clone)]
struct Conic {
    n: usize,
    c: Vec<f64>,
    a: DMatrix<f64>,
    b: Vec<f64>,
    h: Vec<f64>,
    cones: Vec<Cone>,
    m: usize,
}

impl Conic {
    fn degree(&self) -> usize {
        self.cones.iter().map(|k| if let ConeKind::Psd(nn) = k.kind { nn } else { 1 }).sum()
    }

    fn gx(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.m];
        for k in &self.cones {
            for (jj, &j) in k.cols.iter().enumerate() {
                let xj = x[j];
                if xj == 0.0 {
                    continue;
                }
                for r in 0..k.dim {
                    out[k.offset + r] += k.g[(r, jj)] * xj;
                }
            }
        }
        out
    }

    fn gtz(&self, z: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        for k in &self.cones {
            for (jj, &j) in k.cols.iter().enumerate() {
                let mut acc = 0.0;
                for r in 0..k.dim {
                    acc += k.g[(r, jj)] * z[k.offset + r];
                }
                out[j] += acc;
            }
        }
        out
    }

    fn ax(&self, x: &[f64]) -> Vec<f64> {
        (&self.a * DVector::from_column_slice(x)).as_slice().to_vec()
    }

    fn aty(&self, y: &[f64]) -> Vec<f64> {
        (self.a.transpose() * DVector::from_column_slice(y)).as_slice().to_vec()
    }
}

struct Layout {
    block_off: Vec<usize>,
    scalar_off: usize,
    n: usize,
}

impl Layout {
    fn new(p: &BlockSdp) -> Self {
        let mut off = 0;
        let mut block_off = Vec::new();
        for &n in &p.blocks {
            block_off.push(off);
            off += num_params(n);
        }
        Layout { block_off, scalar_off: off, n: off + p.num_scalars }
    }
}

fn check_block(p: &BlockSdp, b: usize) -> Result<usize, SdpError> {
    p.blocks.get(b).copied().ok_or_else(|| SdpError::Dimension(format!("unknown block {b}")))
}

fn check_scalar(p: &BlockSdp, s: usize) -> Result<(), SdpError> {
    if s < p.num_scalars {
        Ok(())
    } else {
        Err(SdpError::Dimension(format!("unknown scalar {s}")))
    }
}

fn scalar_coeffs(p: &BlockSdp, l: &Layout, e: &ScalarExpr) -> Result<BTreeMap<usize, f64>, SdpError> {
    let mut out = BTreeMap::new();
    for (b, cm) in &e.blocks {
        let n = check_block(p, *b)?;
        if cm.dim() != n {
            return Err(SdpError::Dimension(format!("coefficient of block {b} has size {} not {n}", cm.dim())));
        }
        for q in 0..num_params(n) {
            *out.entry(l.block_off[*b] + q).or_insert(0.0) += cm.as_matrix().real_trace_product(&basis(n, q));
        }
    }
    for (s, a) in &e.scalars {
        check_scalar(p, *s)?;
        *out.entry(l.scalar_off + s).or_insert(0.0) += a;
    }
    Ok(out)
}

fn matrix_columns(p: &BlockSdp, l: &Layout, e: &MatrixExpr) -> Result<BTreeMap<usize, CMatrix>, SdpError> {
    let mut out: BTreeMap<usize, CMatrix> = BTreeMap::new();
    for t in &e.blocks {
        let n = check_block(p, t.block)?;
        match &t.map {
            BlockMap::Identity if n != e.dim => {
                return Err(SdpError::Dimension(format!("block {} has size {n}, expression size {}", t.block, e.dim)))
            }
            BlockMap::Congruence(ks) => {
                if ks.is_empty() || ks.iter().any(|k| k.rows() != e.dim || k.cols() != n) {
                    return Err(SdpError::Dimension(format!("map on block {} has wrong shape", t.block)));
                }
            }
            _ => {}
        }
        for q in 0..num_params(n) {
            let img = apply_map(&t.map, &basis(n, q)).scale_re(t.coef);
            let key = l.block_off[t.block] + q;
            let entry = out.entry(key).or_insert_with(|| CMatrix::zeros(e.dim, e.dim));
            *entry = &*entry + &img;
        }
    }
    for (s, m) in &e.scalars {
        check_scalar(p, *s)?;
        if m.dim() != e.dim {
            return Err(SdpError::Dimension("scalar coefficient matrix has wrong size".into()));
        }
        let entry = out.entry(l.scalar_off + s).or_insert_with(|| CMatrix::zeros(e.dim, e.dim));
        *entry = &*entry + m.as_matrix();
    }
    Ok(out)
}

/// Where each user constraint landed in the compiled problem.
enum Slot {
    EqRows(usize, usize),
    Cone(usize),
}

struct Compiled {
    conic: Conic,
    layout: Layout,
    eq_slots: Vec<Slot>,
    ineq_slots: Vec<Slot>,
}

fn compile(p: &BlockSdp) -> Result<Compiled, SdpError> {
    let l = Layout::new(p);
    let n = l.n;
    let mut a_rows: Vec<Vec<(usize, f64)>> = Vec::new();
    let mut b = Vec::new();
    let mut eq_slots = Vec::new();
    for c in &p.equalities {
        let start = a_rows.len();
        match c {
            Constraint::Scalar { expr, rhs } => {
                a_rows.push(scalar_coeffs(p, &l, expr)?.into_iter().collect());
                b.push(*rhs);
            }
            Constraint::Matrix { expr, rhs } => {
                if rhs.dim() != expr.dim {
                    return Err(SdpError::Dimension("equality right-hand side has wrong size".into()));
                }
                let cols = matrix_columns(p, &l, expr)?;
                let cols: Vec<(usize, Vec<f64>)> = cols.into_iter().map(|(k, m)| (k, to_params(&m))).collect();
                let rhs_p = to_params(rhs.as_matrix());
                for (r, rv) in rhs_p.iter().enumerate() {
                    a_rows.push(cols.iter().map(|(k, v)| (*k, v[r])).filter(|(_, v)| *v != 0.0).collect());
                    b.push(*rv);
                }
            }
        }
        eq_slots.push(Slot::EqRows(start, a_rows.len()));
    }
    let mut a = DMatrix::zeros(a_rows.len(), n);
    for (i, row) in a_rows.iter().enumerate() {
        for &(j, v) in row {
            a[(i, j)] += v;
        }
    }
    let mut cones = Vec::new();
    let mut h = Vec::new();
    let mut push_cone = |kind: ConeKind, cols: Vec<usize>, g: DMatrix<f64>, hv: Vec<f64>, cones: &mut Vec<Cone>| {
        let offset = h.len();
        h.extend(hv);
        cones.push(Cone { kind, offset, dim: g.nrows(), cols, g });
    };
    for (bi, &nb) in p.blocks.iter().enumerate() {
        let np = num_params(nb);
        let q = svec_len(2 * nb);
        let mut g = DMatrix::zeros(q, np);
        for pp in 0..np {
            let v = svec(&realify(&basis(nb, pp)));
            for r in 0..q {
                g[(r, pp)] = -v[r];
            }
        }
        push_cone(ConeKind::Psd(2 * nb), (l.block_off[bi]..l.block_off[bi] + np).collect(), g, vec![0.0; q], &mut cones);
    }
    for s in 0..p.num_scalars {
        push_cone(ConeKind::Lp, vec![l.scalar_off + s], DMatrix::from_element(1, 1, -1.0), vec![0.0], &mut cones);
    }
    let mut ineq_slots = Vec::new();
    for c in &p.inequalities {
        ineq_slots.push(Slot::Cone(cones.len()));
        match c {
            Constraint::Scalar { expr, rhs } => {
                let co = scalar_coeffs(p, &l, expr)?;
                let cols: Vec<usize> = co.keys().copied().collect();
                let g = DMatrix::from_row_slice(1, cols.len(), &co.values().copied().collect::<Vec<_>>());
                push_cone(ConeKind::Lp, cols, g, vec![*rhs], &mut cones);
            }
            Constraint::Matrix { expr, rhs } => {
                if rhs.dim() != expr.dim {
                    return Err(SdpError::Dimension("inequality right-hand side has wrong size".into()));
                }
                let co = matrix_columns(p, &l, expr)?;
                let q = svec_len(2 * expr.dim);
                let cols: Vec<usize> = co.keys().copied().collect();
                let mut g = DMatrix::zeros(q, cols.len());
                for (jj, m) in co.values().enumerate() {
                    let v = svec(&realify(m));
                    for r in 0..q {
                        g[(r, jj)] = v[r];
                    }
                }
                push_cone(ConeKind::Psd(2 * expr.dim), cols, g, svec(&realify(rhs.as_matrix())), &mut cones);
            }
        }
    }
    let mut c = vec![0.0; n];
    for (j, v) in scalar_coeffs(p, &l, &p.objective)? {
        c[j] = -v;
    }
    let m = h.len();
    Ok(Compiled { conic: Conic { n, c, a, b, h, cones, m }, layout: l, eq_slots, ineq_slots })
}

// ---------------------------------------------------------------------------------------
// presolve

enum Presolved {
    Ok { keep: Vec<usize> },
    /// y over original rows with Aᵀy = 0 and bᵀy = −1.
    Inconsistent(Vec<f64>),
}

/// Drop linearly dependent equality rows (modified Gram–Schmidt with tracked combinations).
fn presolve(a: &DMatrix<f64>, b: &[f64]) -> Presolved {
    let (p, n) = a.shape();
    let mut q: Vec<DVector<f64>> = Vec::new();
    // each orthonormal q_i as a combination of original rows
    let mut comb: Vec<Vec<(usize, f64)>> = Vec::new();
    let mut keep = Vec::new();
    let scale = a.iter().map(|v| v.abs()).fold(0.0, f64::max).max(1.0);
    for r in 0..p {
        let row = a.row(r).transpose();
        let rn = row.norm();
        let mut v = row.clone();
        let mut coef: BTreeMap<usize, f64> = BTreeMap::new();
        coef.insert(r, 1.0);
        for _pass in 0..2 {
            for (i, qi) in q.iter().enumerate() {
                let d = qi.dot(&v);
                if d != 0.0 {
                    v -= qi * d;
                    for &(k, w) in &comb[i] {
                        *coef.entry(k).or_insert(0.0) -= d * w;
                    }
                }
            }
        }
        let vn = v.norm();
        if vn > 1e-9 * rn.max(1e-12 * scale) && rn > 0.0 {
            q.push(v / vn);
            comb.push(coef.into_iter().map(|(k, w)| (k, w / vn)).collect());
            keep.push(r);
        } else {
            // row r ≈ combination of kept rows: its residual combination annihilates A
            let resid: f64 = coef.iter().map(|(k, w)| w * b[*k]).sum();
            let bscale = coef.iter().map(|(k, w)| (w * b[*k]).abs()).fold(0.0, f64::max).max(1.0);
            if resid.abs() > 1e-8 * bscale {
                let mut y = vec![0.0; p];
                for (k, w) in coef {
                    y[k] = -w / resid;
                }
                return Presolved::Inconsistent(y);
            }
        }
    }
    let _ = n;
    Presolved::Ok { keep }
}

// ---------------------------------------------------------------------------------------
// Nesterov–Todd scaling

enum Scale {
    Lp { w: f64 },
    Psd { r: DMatrix<f64>, rinv: DMatrix<f64> },
}

struct Scaling {
    parts: Vec<Scale>,
    /// scaled point λ, stored per cone as its eigen/diagonal values
    lambda: Vec<Vec<f64>>,
}

fn cholesky_lower(m: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    nalgebra::Cholesky::new(m.clone()).map(|c| c.l())
}

fn nt_scaling(con: &Conic, s: &[f64], z: &[f64]) -> Option<Scaling> {
    let mut parts = Vec::with_capacity(con.cones.len());
    let mut lambda = Vec::with_capacity(con.cones.len());
    for k in &con.cones {
        match k.kind {
            ConeKind::Lp => {
                let (sv, zv) = (s[k.offset], z[k.offset]);
                if !(sv > 0.0 && zv > 0.0) {
                    return None;
                }
                parts.push(Scale::Lp { w: (sv / zv).sqrt() });
                lambda.push(vec![(sv * zv).sqrt()]);
            }
            ConeKind::Psd(nn) => {
                let sm = smat(&s[k.offset..k.offset + k.dim], nn);
                let zm = smat(&z[k.offset..k.offset + k.dim], nn);
                let ls = cholesky_lower(&sm)?;
                let lz = cholesky_lower(&zm)?;
                let svd = (lz.transpose() * &ls).svd(true, true);
                let u = svd.u?;
                let vt = svd.v_t?;
                let lam = svd.singular_values;
                if lam.iter().any(|x| !(*x > 0.0)) {
                    return None;
                }
                let inv_sqrt = DMatrix::from_diagonal(&lam.map(|x| 1.0 / x.sqrt()));
                let r = &ls * vt.transpose() * &inv_sqrt;
                // R^{-1} = Λ^{-1/2} Uᵀ L_zᵀ
                let rinv = &inv_sqrt * u.transpose() * lz.transpose();
                parts.push(Scale::Psd { r, rinv });
                lambda.push(lam.iter().copied().collect());
            }
        }
    }
    Some(Scaling { parts, lambda })
}

impl Scaling {
    fn map(&self, con: &Conic, u: &[f64], f: impl Fn(&Scale, &[f64], usize) -> Vec<f64>) -> Vec<f64> {
        let mut out = vec![0.0; u.len()];
        for (k, sc) in con.cones.iter().zip(&self.parts) {
            let nn = if let ConeKind::Psd(nn) = k.kind { nn } else { 1 };
            let v = f(sc, &u[k.offset..k.offset + k.dim], nn);
            out[k.offset..k.offset + k.dim].copy_from_slice(&v);
        }
        out
    }

    /// W u = Rᵀ U R
    fn w(&self, con: &Conic, u: &[f64]) -> Vec<f64> {
        self.map(con, u, |sc, v, nn| match sc {
            Scale::Lp { w } => vec![v[0] * w],
            Scale::Psd { r, .. } => svec(&(r.transpose() * smat(v, nn) * r)),
        })
    }

    /// Wᵀ u = R U Rᵀ
    fn wt(&self, con: &Conic, u: &[f64]) -> Vec<f64> {
        self.map(con, u, |sc, v, nn| match sc {
            Scale::Lp { w } => vec![v[0] * w],
            Scale::Psd { r, .. } => svec(&(r * smat(v, nn) * r.transpose())),
        })
    }

    /// (WᵀW)^{-1} u = R^{-T}R^{-1} U R^{-T}R^{-1}
    fn wtw_inv(&self, con: &Conic, u: &[f64]) -> Vec<f64> {
        self.map(con, u, |sc, v, nn| match sc {
            Scale::Lp { w } => vec![v[0] / (w * w)],
            Scale::Psd { rinv, .. } => {
                let t = rinv.transpose() * rinv;
                svec(&(&t * smat(v, nn) * &t))
            }
        })
    }

    fn wtw(&self, con: &Conic, u: &[f64]) -> Vec<f64> {
        self.wt(con, &self.w(con, u))
    }

    fn lambda_vec(&self, con: &Conic) -> Vec<f64> {
        let mut out = vec![0.0; con.m];
        for (k, lam) in con.cones.iter().zip(&self.lambda) {
            match k.kind {
                ConeKind::Lp => out[k.offset] = lam[0],
                ConeKind::Psd(nn) => {
                    let v = svec(&DMatrix::from_diagonal(&DVector::from_column_slice(lam)));
                    out[k.offset..k.offset + svec_len(nn)].copy_from_slice(&v);
                }
            }
        }
        out
    }

    /// solve λ ∘ u = v
    fn lambda_div(&self, con: &Conic, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; con.m];
        for (k, lam) in con.cones.iter().zip(&self.lambda) {
            match k.kind {
                ConeKind::Lp => out[k.offset] = v[k.offset] / lam[0],
                ConeKind::Psd(nn) => {
                    let vm = smat(&v[k.offset..k.offset + k.dim], nn);
                    let um = DMatrix::from_fn(nn, nn, |i, j| 2.0 * vm[(i, j)] / (lam[i] + lam[j]));
                    out[k.offset..k.offset + k.dim].copy_from_slice(&svec(&um));
                }
            }
        }
        out
    }
}

/// u ∘ v: componentwise on LP cones, symmetrized product on PSD cones.
fn jordan(con: &Conic, u: &[f64], v: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; con.m];
    for k in &con.cones {
        match k.kind {
            ConeKind::Lp => out[k.offset] = u[k.offset] * v[k.offset],
            ConeKind::Psd(nn) => {
                let a = smat(&u[k.offset..k.offset + k.dim], nn);
                let b = smat(&v[k.offset..k.offset + k.dim], nn);
                let p = (&a * &b + &b * &a) * 0.5;
                out[k.offset..k.offset + k.dim].copy_from_slice(&svec(&p));
            }
        }
    }
    out
}

fn identity_vec(con: &Conic) -> Vec<f64> {
    let mut e = vec![0.0; con.m];
    for k in &con.cones {
        match k.kind {
            ConeKind::Lp => e[k.offset] = 1.0,
            ConeKind::Psd(nn) => {
                let v = svec(&DMatrix::identity(nn, nn));
                e[k.offset..k.offset + k.dim].copy_from_slice(&v);
            }
        }
    }
    e
}

fn min_cone_eig(con: &Conic, u: &[f64]) -> f64 {
    let mut worst = f64::INFINITY;
    for k in &con.cones {
        let v = match k.kind {
            ConeKind::Lp => u[k.offset],
            ConeKind::Psd(nn) => {
                let m = smat(&u[k.offset..k.offset + k.dim], nn);
                m.symmetric_eigenvalues().min()
            }
        };
        worst = worst.min(v);
    }
    worst
}

/// Largest α with λ + α·d in the cone (scaled space, λ diagonal per PSD cone).
fn max_step_scaled(con: &Conic, sc: &Scaling, d: &[f64]) -> f64 {
    let mut alpha = f64::INFINITY;
    for (k, lam) in con.cones.iter().zip(&sc.lambda) {
        match k.kind {
            ConeKind::Lp => {
                if d[k.offset] < 0.0 {
                    alpha = alpha.min(-lam[0] / d[k.offset]);
                }
            }
            ConeKind::Psd(nn) => {
                let dm = smat(&d[k.offset..k.offset + k.dim], nn);
                let m = DMatrix::from_fn(nn, nn, |i, j| dm[(i, j)] / (lam[i] * lam[j]).sqrt());
                let emin = m.symmetric_eigenvalues().min();
                if emin < 0.0 {
                    alpha = alpha.min(-1.0 / emin);
                }
            }
        }
    }
    alpha
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

fn scale(a: &[f64], s: f64) -> Vec<f64> {
    a.iter().map(|x| x * s).collect()
}

// ---------------------------------------------------------------------------------------
// KKT system [0 Aᵀ Gᵀ; A 0 0; G 0 −WᵀW]

struct Component {
    vars: Vec<usize>,
    chol: nalgebra::Cholesky<f64, nalgebra::Dyn>,
}

const MAX_REFINE: usize = 10;
const FULL_KKT_TRIGGER: f64 = 1e-9;

struct Kkt<'a> {
    con: &'a Conic,
    comps: Vec<Component>,
    /// H⁻¹Aᵀ (n × p)
    hinv_at: DMatrix<f64>,
    schur: Option<SchurFactor>,
    /// LU of the unreduced system, built on demand when the reduced solve is inaccurate.
    full: std::cell::OnceCell<nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>>,
}

enum SchurFactor {
    Chol(nalgebra::Cholesky<f64, nalgebra::Dyn>),
    Lu(nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>),
}

fn components(con: &Conic) -> (Vec<Vec<usize>>, Vec<usize>) {
    let n = con.n;
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for k in &con.cones {
        for w in k.cols.windows(2) {
            let (a, b) = (find(&mut parent, w[0]), find(&mut parent, w[1]));
            if a != b {
                parent[a] = b;
            }
        }
    }
    let mut index = vec![usize::MAX; n];
    let mut comps: Vec<Vec<usize>> = Vec::new();
    let mut root_comp: BTreeMap<usize, usize> = BTreeMap::new();
    for v in 0..n {
        let r = find(&mut parent, v);
        let ci = *root_comp.entry(r).or_insert_with(|| {
            comps.push(Vec::new());
            comps.len() - 1
        });
        index[v] = comps[ci].len();
        comps[ci].push(v);
    }
    let mut comp_of = vec![0; n];
    for (ci, c) in comps.iter().enumerate() {
        for &v in c {
            comp_of[v] = ci;
        }
    }
    let _ = index;
    (comps, comp_of)
}

impl<'a> Kkt<'a> {
    fn factor(con: &'a Conic, sc: Option<&Scaling>, comps_def: &(Vec<Vec<usize>>, Vec<usize>)) -> Result<Self, SdpError> {
        let (comp_vars, comp_of) = comps_def;
        let mut hs: Vec<DMatrix<f64>> = comp_vars.iter().map(|v| DMatrix::zeros(v.len(), v.len())).collect();
        let mut pos = vec![0usize; con.n];
        for vars in comp_vars {
            for (i, &v) in vars.iter().enumerate() {
                pos[v] = i;
            }
        }
        for (ki, k) in con.cones.iter().enumerate() {
            if k.cols.is_empty() {
                continue;
            }
            let ci = comp_of[k.cols[0]];
            // M = (WᵀW)^{-1} G_k
            let mcols: Vec<Vec<f64>> = (0..k.cols.len())
                .map(|jj| {
                    let col: Vec<f64> = k.g.column(jj).iter().copied().collect();
                    match sc {
                        None => col,
                        Some(sc) => {
                            let nn = if let ConeKind::Psd(nn) = k.kind { nn } else { 1 };
                            match &sc.parts[ki] {
                                Scale::Lp { w } => vec![col[0] / (w * w)],
                                Scale::Psd { rinv, .. } => {
                                    let t = rinv.transpose() * rinv;
                                    svec(&(&t * smat(&col, nn) * &t))
                                }
                            }
                        }
                    }
                })
                .collect();
            let h = &mut hs[ci];
            for (ii, &vi) in k.cols.iter().enumerate() {
                let gi = k.g.column(ii);
                for (jj, &vj) in k.cols.iter().enumerate().skip(ii) {
                    let val: f64 = gi.iter().zip(&mcols[jj]).map(|(a, b)| a * b).sum();
                    h[(pos[vi], pos[vj])] += val;
                    if ii != jj {
                        h[(pos[vj], pos[vi])] += val;
                    }
                }
            }
        }
        let mut comps = Vec::with_capacity(hs.len());
        for (vars, h) in comp_vars.iter().zip(hs) {
            let chol = match nalgebra::Cholesky::new(h.clone()) {
                Some(c) => c,
                None => {
                    let tr = h.diagonal().iter().map(|x| x.abs()).fold(0.0, f64::max).max(1e-300);
                    let reg = &h + DMatrix::identity(vars.len(), vars.len()) * (1e-13 * tr);
                    nalgebra::Cholesky::new(reg).ok_or_else(|| SdpError::Numerical("singular Hessian block".into()))?
                }
            };
            comps.push(Component { vars: vars.clone(), chol });
        }
        let p = con.a.nrows();
        let mut kkt = Kkt { con, comps, hinv_at: DMatrix::zeros(con.n, p), schur: None, full: std::cell::OnceCell::new() };
        if p > 0 {
            let at = con.a.transpose();
            let mut hinv_at = DMatrix::zeros(con.n, p);
            for comp in &kkt.comps {
                let sub = DMatrix::from_fn(comp.vars.len(), p, |i, j| at[(comp.vars[i], j)]);
                let solved = comp.chol.solve(&sub);
                for (i, &v) in comp.vars.iter().enumerate() {
                    for j in 0..p {
                        hinv_at[(v, j)] = solved[(i, j)];
                    }
                }
            }
            let s = &con.a * &hinv_at;
            let s = (&s + s.transpose()) * 0.5;
            let schur = match nalgebra::Cholesky::new(s.clone()) {
                Some(c) => SchurFactor::Chol(c),
                None => {
                    let tr = s.diagonal().iter().map(|x| x.abs()).fold(0.0, f64::max).max(1e-300);
                    let reg = &s + DMatrix::identity(p, p) * (1e-13 * tr);
                    match nalgebra::Cholesky::new(reg) {
                        Some(c) => SchurFactor::Chol(c),
                        None => SchurFactor::Lu(s.lu()),
                    }
                }
            };
            kkt.hinv_at = hinv_at;
            kkt.schur = Some(schur);
        }
        Ok(kkt)
    }

    fn hinv(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; v.len()];
        for comp in &self.comps {
            let sub = DVector::from_iterator(comp.vars.len(), comp.vars.iter().map(|&i| v[i]));
            let s = comp.chol.solve(&sub);
            for (i, &vi) in comp.vars.iter().enumerate() {
                out[vi] = s[i];
            }
        }
        out
    }

    fn solve_once(&self, sc: Option<&Scaling>, bx: &[f64], by: &[f64], bz: &[f64]) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let con = self.con;
        let wz = match sc {
            Some(sc) => sc.wtw_inv(con, bz),
            None => bz.to_vec(),
        };
        let r = add(bx, &con.gtz(&wz));
        let hr = self.hinv(&r);
        let uy: Vec<f64> = match &self.schur {
            None => Vec::new(),
            Some(f) => {
                let rhs = DVector::from_vec(sub(&con.ax(&hr), by));
                let sol = match f {
                    SchurFactor::Chol(c) => c.solve(&rhs),
                    SchurFactor::Lu(l) => l.solve(&rhs).unwrap_or_else(|| DVector::zeros(rhs.len())),
                };
                sol.as_slice().to_vec()
            }
        };
        let ux = if uy.is_empty() {
            hr
        } else {
            let corr = (&self.hinv_at * DVector::from_column_slice(&uy)).as_slice().to_vec();
            sub(&hr, &corr)
        };
        let gx = con.gx(&ux);
        let d = sub(&gx, bz);
        let uz = match sc {
            Some(sc) => sc.wtw_inv(con, &d),
            None => d,
        };
        (ux, uy, uz)
    }

    /// [0 Aᵀ Gᵀ; A 0 0; G 0 −WᵀW]
    fn full_lu(&self, sc: Option<&Scaling>) -> &nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn> {
        self.full.get_or_init(|| {
            let con = self.con;
            let (n, p, m) = (con.n, con.a.nrows(), con.m);
            let mut k = DMatrix::zeros(n + p + m, n + p + m);
            for i in 0..p {
                for j in 0..n {
                    let v = con.a[(i, j)];
                    k[(n + i, j)] = v;
                    k[(j, n + i)] = v;
                }
            }
            for cone in &con.cones {
                for (jj, &j) in cone.cols.iter().enumerate() {
                    for r in 0..cone.dim {
                        let v = cone.g[(r, jj)];
                        k[(n + p + cone.offset + r, j)] = v;
                        k[(j, n + p + cone.offset + r)] = v;
                    }
                }
                let mut e = vec![0.0; m];
                for r in 0..cone.dim {
                    e[cone.offset + r] = 1.0;
                    let col = match sc {
                        Some(sc) => sc.wtw(con, &e),
                        None => e.clone(),
                    };
                    e[cone.offset + r] = 0.0;
                    for q in 0..cone.dim {
                        k[(n + p + cone.offset + q, n + p + cone.offset + r)] = -col[cone.offset + q];
                    }
                }
            }
            k.lu()
        })
    }

    fn solve_full_once(&self, sc: Option<&Scaling>, bx: &[f64], by: &[f64], bz: &[f64]) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let (n, p) = (self.con.n, self.con.a.nrows());
        let rhs = DVector::from_iterator(n + p + self.con.m, bx.iter().chain(by).chain(bz).copied());
        let sol = self.full_lu(sc).solve(&rhs).unwrap_or_else(|| DVector::zeros(rhs.len()));
        let v = sol.as_slice();
        (v[..n].to_vec(), v[n..n + p].to_vec(), v[n + p..].to_vec())
    }

    fn residual(&self, sc: Option<&Scaling>, b: (&[f64], &[f64], &[f64]), u: (&[f64], &[f64], &[f64])) -> (Vec<f64>, Vec<f64>, Vec<f64>, f64) {
        let con = self.con;
        let r1 = sub(b.0, &add(&con.aty(u.1), &con.gtz(u.2)));
        let r2 = sub(b.1, &con.ax(u.0));
        let wwz = match sc {
            Some(sc) => sc.wtw(con, u.2),
            None => u.2.to_vec(),
        };
        let r3 = sub(b.2, &sub(&con.gx(u.0), &wwz));
        let nrm = (dot(&r1, &r1) + dot(&r2, &r2) + dot(&r3, &r3)).sqrt();
        (r1, r2, r3, nrm)
    }

    fn refine(
        &self,
        sc: Option<&Scaling>,
        b: (&[f64], &[f64], &[f64]),
        once: impl Fn(&[f64], &[f64], &[f64]) -> (Vec<f64>, Vec<f64>, Vec<f64>),
    ) -> ((Vec<f64>, Vec<f64>, Vec<f64>), f64) {
        let scale_b = (dot(b.0, b.0) + dot(b.1, b.1) + dot(b.2, b.2)).sqrt().max(1e-300);
        let (mut ux, mut uy, mut uz) = once(b.0, b.1, b.2);
        let (mut r1, mut r2, mut r3, mut nrm) = self.residual(sc, b, (&ux, &uy, &uz));
        for _ in 0..MAX_REFINE {
            if nrm <= 1e-15 * scale_b {
                break;
            }
            let (dx, dy, dz) = once(&r1, &r2, &r3);
            let (cx, cy, cz) = (add(&ux, &dx), add(&uy, &dy), add(&uz, &dz));
            let next = self.residual(sc, b, (&cx, &cy, &cz));
            if next.3 >= 0.5 * nrm {
                if next.3 < nrm {
                    (ux, uy, uz) = (cx, cy, cz);
                    nrm = next.3;
                }
                break;
            }
            (ux, uy, uz) = (cx, cy, cz);
            (r1, r2, r3, nrm) = next;
        }
        ((ux, uy, uz), nrm / scale_b)
    }

    /// Solve through the Schur complement with iterative refinement; fall back to the
    /// unreduced system when the reduced solve stays inaccurate.
    fn solve(&self, sc: Option<&Scaling>, bx: &[f64], by: &[f64], bz: &[f64]) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let (u, rel) = self.refine(sc, (bx, by, bz), |x, y, z| self.solve_once(sc, x, y, z));
        if rel <= FULL_KKT_TRIGGER {
            return u;
        }
        let (v, rel_full) = self.refine(sc, (bx, by, bz), |x, y, z| self.solve_full_once(sc, x, y, z));
        if rel_full < rel {
            v
        } else {
            u
        }
    }
}

// ---------------------------------------------------------------------------------------
// homogeneous self-dual interior point

#[derive(Clone)]
struct Iterate {
    x: Vec<f64>,
    y: Vec<f64>,
    z: Vec<f64>,
    s: Vec<f64>,
    tau: f64,
    kappa: f64,
}

enum Outcome {
    Optimal,
    PrimalInfeasible,
    DualInfeasible,
    MaxIter,
}

struct RawResult {
    it: Iterate,
    outcome: Outcome,
    pres: f64,
    dres: f64,
    iterations: usize,
}

fn shift_interior(con: &Conic, v: &mut [f64]) {
    let e = identity_vec(con);
    let t = -min_cone_eig(con, v);
    let nrm = norm(v).max(1.0);
    if t >= -1e-8 * nrm {
        axpy(1.0 + t, &e, v);
    }
}

fn hsde(con: &Conic, opts: &SdpOptions) -> Result<RawResult, SdpError> {
    let (n, p, m) = (con.n, con.a.nrows(), con.m);
    let comps = components(con);
    let degree = con.degree() as f64;
    let e = identity_vec(con);

    let kkt0 = Kkt::factor(con, None, &comps)?;
    let (x0, _, z0) = kkt0.solve(None, &vec![0.0; n], &con.b, &con.h);
    let mut s = scale(&z0, -1.0);
    let (_, y0, mut z) = kkt0.solve(None, &scale(&con.c, -1.0), &vec![0.0; p], &vec![0.0; m]);
    shift_interior(con, &mut s);
    shift_interior(con, &mut z);
    let mut it = Iterate { x: x0, y: y0, z, s, tau: 1.0, kappa: 1.0 };

    let resx0 = norm(&con.c).max(1.0);
    let resy0 = norm(&con.b).max(1.0);
    let resz0 = norm(&con.h).max(1.0);

    let mut last_pres = f64::INFINITY;
    let mut last_dres = f64::INFINITY;
    let mut iterations = 0;
    let mut best: Option<(f64, Iterate, f64, f64)> = None;
    for iter in 0..=opts.max_iter {
        iterations = iter;
        let ax = con.ax(&it.x);
        let aty = con.aty(&it.y);
        let gx = con.gx(&it.x);
        let gtz = con.gtz(&it.z);
        let cx = dot(&con.c, &it.x);
        let by = dot(&con.b, &it.y);
        let hz = dot(&con.h, &it.z);

        // R1 = Aᵀy + Gᵀz + cτ, R2 = −Ax + bτ, R3 = −Gx + hτ − s, R4 = −cᵀx − bᵀy − hᵀz − κ
        let r1: Vec<f64> = (0..n).map(|i| aty[i] + gtz[i] + con.c[i] * it.tau).collect();
        let r2: Vec<f64> = (0..p).map(|i| -ax[i] + con.b[i] * it.tau).collect();
        let r3: Vec<f64> = (0..m).map(|i| -gx[i] + con.h[i] * it.tau - it.s[i]).collect();
        let r4 = -cx - by - hz - it.kappa;

        let pres = (norm(&r2) / resy0).max(norm(&r3) / resz0) / it.tau;
        let dres = norm(&r1) / resx0 / it.tau;
        let pcost = cx / it.tau;
        let dcost = -(by + hz) / it.tau;
        let gap = dot(&it.s, &it.z) / (it.tau * it.tau);
        let relgap = if pcost < 0.0 {
            gap / -pcost
        } else if dcost > 0.0 {
            gap / dcost
        } else {
            f64::INFINITY
        };
        last_pres = pres;
        last_dres = dres;
        let merit = pres.max(dres).max(gap.min(relgap));
        if best.as_ref().map_or(true, |b| merit < b.0) {
            best = Some((merit, it.clone(), pres, dres));
        }
        if pres <= opts.feas_tol && dres <= opts.feas_tol && (gap <= opts.gap_tol || relgap <= opts.gap_tol) {
            return Ok(RawResult { it, outcome: Outcome::Optimal, pres, dres, iterations: iter });
        }
        if by + hz < 0.0 {
            let pinf = norm(&add(&aty, &gtz)) / resx0 / -(by + hz);
            if pinf <= opts.feas_tol {
                return Ok(RawResult { it, outcome: Outcome::PrimalInfeasible, pres, dres, iterations: iter });
            }
        }
        if cx < 0.0 {
            let gxs = add(&gx, &it.s);
            let dinf = (norm(&ax) / resy0).max(norm(&gxs) / resz0) / -cx;
            if dinf <= opts.feas_tol {
                return Ok(RawResult { it, outcome: Outcome::DualInfeasible, pres, dres, iterations: iter });
            }
        }
        if iter == opts.max_iter {
            break;
        }

        let sc = match nt_scaling(con, &it.s, &it.z) {
            Some(sc) => sc,
            None => break
        };
        let lam = sc.lambda_vec(con);
        let mu = (dot(&lam, &lam) + it.tau * it.kappa) / (degree + 1.0);
        let kkt = match Kkt::factor(con, Some(&sc), &comps) {
            Ok(k) => k,
            Err(_) => break,
        };
        let (x1, y1, z1) = kkt.solve(Some(&sc), &scale(&con.c, -1.0), &con.b, &con.h);
        let denom_base = it.kappa / it.tau - dot(&con.c, &x1) - dot(&con.b, &y1) - dot(&con.h, &z1);

        let lamsq = jordan(con, &lam, &lam);
        let mut sigma = 0.0;
        let mut aff: Option<(Vec<f64>, Vec<f64>, f64, f64)> = None;
        let mut step = None;
        for phase in 0..2 {
            let eta = if phase == 0 { 1.0 } else { 1.0 - sigma };
            // complementarity targets in the scaled space
            let mut rhs_c: Vec<f64> = lamsq.iter().map(|v| -v).collect();
            let mut rhs_t = -it.tau * it.kappa;
            if let Some((dsa, dza, dta, dka)) = &aff {
                axpy(sigma * mu, &e, &mut rhs_c);
                let corr = jordan(con, dsa, dza);
                axpy(-1.0, &corr, &mut rhs_c);
                rhs_t += sigma * mu - dta * dka;
            }
            let ld = sc.lambda_div(con, &rhs_c);
            let f1 = scale(&r1, -eta);
            let f2 = scale(&r2, -eta);
            let f3 = add(&scale(&r3, -eta), &sc.wt(con, &ld));
            let f4 = -eta * r4 + rhs_t / it.tau;
            let (x2, y2, z2) = kkt.solve(Some(&sc), &f1, &scale(&f2, -1.0), &scale(&f3, -1.0));
            let dtau = (f4 + dot(&con.c, &x2) + dot(&con.b, &y2) + dot(&con.h, &z2)) / denom_base;
            let dx = add(&x2, &scale(&x1, dtau));
            let dy = add(&y2, &scale(&y1, dtau));
            let dz = add(&z2, &scale(&z1, dtau));
            let wdz = sc.w(con, &dz);
            // scaled directions: ds̃ = λ⊘rhs_c − W dz, dz̃ = W dz
            let dst = sub(&ld, &wdz);
            let ds = sc.wt(con, &dst);
            let dkappa = (rhs_t - it.kappa * dtau) / it.tau;
            let mut alpha = max_step_scaled(con, &sc, &dst).min(max_step_scaled(con, &sc, &wdz));
            if dtau < 0.0 {
                alpha = alpha.min(-it.tau / dtau);
            }
            if dkappa < 0.0 {
                alpha = alpha.min(-it.kappa / dkappa);
            }
            if phase == 0 {
                let a = alpha.min(1.0);
                sigma = (1.0 - a).powi(3);
                aff = Some((dst, wdz, dtau, dkappa));
            } else {
                let a = (0.99 * alpha).min(1.0);
                step = Some((a, dx, dy, dz, ds, dtau, dkappa));
            }
        }
        let (a, dx, dy, dz, ds, dtau, dkappa) = step.expect("corrector step computed");
        if !(a > 1e-14) {
            break;
        }
        axpy(a, &dx, &mut it.x);
        axpy(a, &dy, &mut it.y);
        axpy(a, &dz, &mut it.z);
        axpy(a, &ds, &mut it.s);
        it.tau += a * dtau;
        it.kappa += a * dkappa;
        if !(it.tau > 0.0 && it.kappa >= 0.0) || it.x.iter().any(|v| !v.is_finite()) {
            return Err(SdpError::Numerical("iterate left the cone".into()));
        }
        // keep τ, κ bounded away from exact zero
        it.kappa = it.kappa.max(1e-300);
    }
    // stalled or out of iterations: hand back the most accurate iterate seen
    match best {
        Some((_, b, pres, dres)) => Ok(RawResult { it: b, outcome: Outcome::MaxIter, pres, dres, iterations }),
        None => Ok(RawResult { it, outcome: Outcome::MaxIter, pres: last_pres, dres: last_dres, iterations }),
    }
}

// ---------------------------------------------------------------------------------------

fn map_duals(p: &BlockSdp, comp: &Compiled, y: &[f64], z: &[f64]) -> DualSolution {
    let mut equalities = Vec::new();
    for (c, slot) in p.equalities.iter().zip(&comp.eq_slots) {
        let Slot::EqRows(a, b) = slot else { unreachable!() };
        equalities.push(match c {
            Constraint::Scalar { .. } => DualValue::Scalar(y[*a]),
            Constraint::Matrix { expr, .. } => DualValue::Matrix(dual_from_params(expr.dim, &y[*a..*b])),
        });
    }
    let mut inequalities = Vec::new();
    for (c, slot) in p.inequalities.iter().zip(&comp.ineq_slots) {
        let Slot::Cone(k) = slot else { unreachable!() };
        let cone = &comp.conic.cones[*k];
        let zk = &z[cone.offset..cone.offset + cone.dim];
        inequalities.push(match (c, cone.kind) {
            (Constraint::Scalar { .. }, _) => DualValue::Scalar(zk[0]),
            (Constraint::Matrix { .. }, ConeKind::Psd(nn)) => DualValue::Matrix(unrealify_dual(&smat(zk, nn))),
            _ => unreachable!(),
        });
    }
    DualSolution { equalities, inequalities }
}

fn blocks_from_x(p: &BlockSdp, l: &Layout, x: &[f64]) -> (Vec<HermitianMatrix>, Vec<f64>) {
    let blocks = p
        .blocks
        .iter()
        .zip(&l.block_off)
        .map(|(&n, &off)| from_params(n, &x[off..off + num_params(n)]))
        .collect();
    let scalars = x[l.scalar_off..].to_vec();
    (blocks, scalars)
}

static DUMP_DIR: std::sync::Mutex<Option<(std::path::PathBuf, usize)>> = std::sync::Mutex::new(None);

/// Write every subsequent problem and its solution as numbered JSON files into `dir`;
/// `None` switches dumping off.
pub fn set_dump_dir(dir: Option<std::path::PathBuf>) {
    *DUMP_DIR.lock().unwrap_or_else(|e| e.into_inner()) = dir.map(|d| (d, 0));
}

fn dump(p: &BlockSdp, sol: &Result<SdpSolution, SdpError>) {
    let mut guard = DUMP_DIR.lock().unwrap_or_else(|e| e.into_inner());
    let Some((dir, count)) = guard.as_mut() else { return };
    *count += 1;
    let write = |name: String, json: serde_json::Result<String>| {
        if let Ok(text) = json {
            // best effort: a failed debug dump must not change the solve
            let _ = std::fs::write(dir.join(name), text);
        }
    };
    write(format!("sdp-{count:04}-problem.json"), serde_json::to_string_pretty(p));
    match sol {
        Ok(s) => write(format!("sdp-{count:04}-solution.json"), serde_json::to_string_pretty(s)),
        Err(e) => write(format!("sdp-{count:04}-error.json"), serde_json::to_string(&e.to_string())),
    }
}

/// Solve `p`. Deterministic for identical inputs.
pub fn solve(p: &BlockSdp, opts: &SdpOptions) -> Result<SdpSolution, SdpError> {
    let sol = solve_impl(p, opts);
    dump(p, &sol);
    sol
}

fn solve_impl(p: &BlockSdp, opts: &SdpOptions) -> Result<SdpSolution, SdpError> {
    let comp = compile(p)?;
    let con = &comp.conic;
    let total_rows = con.a.nrows();
    let keep = match presolve(&con.a, &con.b) {
        Presolved::Ok { keep } => keep,
        Presolved::Inconsistent(y) => {
            let cert = map_duals(p, &comp, &y, &vec![0.0; con.m]);
            let (blocks, scalars) = blocks_from_x(p, &comp.layout, &vec![0.0; con.n]);
            return Ok(SdpSolution {
                status: SdpStatus::Infeasible,
                primal_objective: f64::NAN,
                dual_objective: f64::NAN,
                gap: f64::NAN,
                primal_residual: f64::NAN,
                dual_residual: f64::NAN,
                iterations: 0,
                blocks,
                scalars,
                dual: cert.clone(),
                certificate: Some(cert),
            });
        }
    };
    let reduced = Conic {
        a: DMatrix::from_fn(keep.len(), con.n, |i, j| con.a[(keep[i], j)]),
        b: keep.iter().map(|&i| con.b[i]).collect(),
        ..con.clone()
    };
    let raw = hsde(&reduced, opts)?;
    let mut y_full = vec![0.0; total_rows];
    for (i, &r) in keep.iter().enumerate() {
        y_full[r] = raw.it.y[i];
    }
    let it = &raw.it;
    match raw.outcome {
        Outcome::DualInfeasible => Err(SdpError::Unbounded(dot(&con.c, &it.x))),
        Outcome::PrimalInfeasible => {
            let k = -(dot(&reduced.b, &it.y) + dot(&con.h, &it.z));
            let y = scale(&y_full, 1.0 / k);
            let z = scale(&it.z, 1.0 / k);
            let cert = map_duals(p, &comp, &y, &z);
            let (blocks, scalars) = blocks_from_x(p, &comp.layout, &vec![0.0; con.n]);
            Ok(SdpSolution {
                status: SdpStatus::Infeasible,
                primal_objective: f64::NAN,
                dual_objective: f64::NAN,
                gap: f64::NAN,
                primal_residual: raw.pres,
                dual_residual: raw.dres,
                iterations: raw.iterations,
                blocks,
                scalars,
                dual: cert.clone(),
                certificate: Some(cert),
            })
        }
        Outcome::Optimal | Outcome::MaxIter => {
            let t = it.tau;
            let x = scale(&it.x, 1.0 / t);
            let y = scale(&y_full, 1.0 / t);
            let z = scale(&it.z, 1.0 / t);
            let (blocks, scalars) = blocks_from_x(p, &comp.layout, &x);
            let status = match raw.outcome {
                Outcome::Optimal => SdpStatus::Optimal,
                _ if raw.pres <= opts.feas_tol => SdpStatus::Feasible,
                _ => SdpStatus::MaxIter,
            };
            let primal_objective = -dot(&con.c, &x);
            let dual_objective = dot(&con.b, &y) + dot(&con.h, &z);
            Ok(SdpSolution {
                status,
                primal_objective,
                dual_objective,
                gap: dual_objective - primal_objective,
                primal_residual: raw.pres,
                dual_residual: raw.dres,
                iterations: raw.iterations,
                blocks,
                scalars,
                dual: map_duals(p, &comp, &y, &z),
                certificate: None,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{is_psd, sigma_x};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn param_round_trips() {
        let m = CMatrix::from_rows(&[
            vec![C64::new(1.0, 0.0), C64::new(0.5, -0.25), C64::new(0.0, 2.0)],
            vec![C64::new(0.5, 0.25), C64::new(-1.0, 0.0), C64::new(0.3, 0.0)],
            vec![C64::new(0.0, -2.0), C64::new(0.3, 0.0), C64::new(4.0, 0.0)],
        ])
        .unwrap();
        let h = HermitianMatrix::new(m).unwrap();
        let v = to_params(h.as_matrix());
        assert_eq!(from_params(3, &v), h);
        let recon = (0..9).fold(CMatrix::zeros(3, 3), |acc, p| &acc + &basis(3, p).scale_re(v[p]));
        assert!((&recon - h.as_matrix()).max_abs() < 1e-15);
        // dual pairing
        let y: Vec<f64> = (0..9).map(|i| i as f64 * 0.3 - 1.0).collect();
        let ym = dual_from_params(3, &y);
        assert!((ym.inner(&h) - dot(&y, &v)).abs() < 1e-12);
        // realified pairing
        let z = DMatrix::from_fn(6, 6, |i, j| ((i * 7 + j * 3) % 5) as f64 + ((j * 7 + i * 3) % 5) as f64);
        let w = unrealify_dual(&z);
        assert!((w.inner(&h) - (realify(h.as_matrix()) * &z).trace()).abs() < 1e-12);
        let sv = svec(&z);
        assert!((smat(&sv, 6) - &z).abs().max() < 1e-14);
    }

    #[test]
    fn trace_under_identity_bound() {
        let mut p = BlockSdp::new();
        let x = p.add_block(2);
        p.le_matrix(MatrixExpr::new(2).block(x, 1.0), HermitianMatrix::identity(2));
        p.objective = ScalarExpr::new().block(x, HermitianMatrix::identity(2));
        let s = solve(&p, &SdpOptions::default()).unwrap();
        assert_eq!(s.status, SdpStatus::Optimal);
        assert!((s.primal_objective - 2.0).abs() < 1e-7);
        assert!((s.dual_objective - 2.0).abs() < 1e-7);
        let chk = check_dual(&p, &s.dual, 1.0).unwrap();
        assert!(chk.cone_violation > -1e-7);
    }

    #[test]
    fn complex_block_max_eigenvalue() {
        // max Re tr(C X), tr X = 1, X ⪰ 0 → λ_max(C)
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n in [2usize, 3, 4] {
            let m = CMatrix::from_fn(n, n, |_, _| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
            let c = HermitianMatrix::from_product_unchecked(&(&m + &m.adjoint()));
            let mut p = BlockSdp::new();
            let x = p.add_block(n);
            p.eq_scalar(ScalarExpr::new().block(x, HermitianMatrix::identity(n)), 1.0);
            p.objective = ScalarExpr::new().block(x, c.clone());
            let s = solve(&p, &SdpOptions::default()).unwrap();
            let lmax = crate::linalg::max_eigenvalue(&c);
            assert_eq!(s.status, SdpStatus::Optimal);
            assert!((s.primal_objective - lmax).abs() < 1e-7, "{} vs {lmax}", s.primal_objective);
            assert!(is_psd(&s.blocks[0], 1e-9));
        }
    }

    #[test]
    fn diagonal_lp_embedding() {
        // max Σ c_i x_i s.t. Σ x_i = 1, x_i ≤ u_i, x ≥ 0: greedy solution
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..10 {
            let k = 5;
            let c: Vec<f64> = (0..k).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let u: Vec<f64> = (0..k).map(|_| rng.gen_range(0.1..0.6)).collect();
            let mut order: Vec<usize> = (0..k).collect();
            order.sort_by(|&a, &b| c[b].total_cmp(&c[a]));
            let (mut left, mut best) = (1.0f64, 0.0);
            for &i in &order {
                let t = left.min(u[i]);
                best += t * c[i];
                left -= t;
            }
            if left > 1e-12 {
                continue;
            }
            let mut p = BlockSdp::new();
            let x = p.add_block(k);
            let mut total = ScalarExpr::new();
            for i in 0..k {
                let mut e = vec![0.0; k];
                e[i] = 1.0;
                let ei = HermitianMatrix::from_real_diag(&e);
                p.le_scalar(ScalarExpr::new().block(x, ei.clone()), u[i]);
                total = total.block(x, ei);
            }
            p.eq_scalar(total, 1.0);
            p.objective = ScalarExpr::new().block(x, HermitianMatrix::from_real_diag(&c));
            let s = solve(&p, &SdpOptions::default()).unwrap();
            assert!((s.primal_objective - best).abs() < 1e-7, "{:?} {} vs {best} it {} pres {} dres {}", s.status, s.primal_objective, s.iterations, s.primal_residual, s.dual_residual);
        }
    }

    #[test]
    fn infeasible_with_verified_certificate() {
        // X ⪰ 0, tr X = 1, X ⪯ 0.4·I on a qubit
        let mut p = BlockSdp::new();
        let x = p.add_block(2);
        p.eq_scalar(ScalarExpr::new().block(x, HermitianMatrix::identity(2)), 1.0);
        p.le_matrix(MatrixExpr::new(2).block(x, 1.0), HermitianMatrix::identity(2).scale(0.4));
        let s = solve(&p, &SdpOptions::default()).unwrap();
        assert_eq!(s.status, SdpStatus::Infeasible);
        let margin = verify_infeasibility(&p, s.certificate.as_ref().unwrap(), 1e-8).unwrap();
        assert!(margin > 0.0);
    }

    #[test]
    fn inconsistent_equalities_detected_in_presolve() {
        let mut p = BlockSdp::new();
        let t = p.add_scalar();
        p.eq_scalar(ScalarExpr::new().scalar(t, 1.0), 1.0);
        p.eq_scalar(ScalarExpr::new().scalar(t, 2.0), 3.0);
        let s = solve(&p, &SdpOptions::default()).unwrap();
        assert_eq!(s.status, SdpStatus::Infeasible);
        verify_infeasibility(&p, s.certificate.as_ref().unwrap(), 1e-9).unwrap();
    }

    #[test]
    fn redundant_equalities_are_fine() {
        let mut p = BlockSdp::new();
        let x = p.add_block(2);
        p.eq_matrix(MatrixExpr::new(2).block(x, 1.0), sigma_x().scale(0.1).add(&HermitianMatrix::identity(2).scale(0.5)));
        p.eq_scalar(ScalarExpr::new().block(x, HermitianMatrix::identity(2)), 1.0);
        p.objective = ScalarExpr::new().block(x, HermitianMatrix::from_real_diag(&[1.0, 0.0]));
        let s = solve(&p, &SdpOptions::default()).unwrap();
        assert_eq!(s.status, SdpStatus::Optimal);
        assert!((s.primal_objective - 0.5).abs() < 1e-7);
    }

    #[test]
    fn unbounded_is_an_error() {
        let mut p = BlockSdp::new();
        let t = p.add_scalar();
        p.objective = ScalarExpr::new().scalar(t, 1.0);
        assert!(matches!(solve(&p, &SdpOptions::default()), Err(SdpError::Unbounded(_))));
    }

    #[test]
    fn partial_trace_map() {
        // max ⟨Φ|X|Φ⟩ over X ⪰ 0 on C²⊗C² with tr_2 X = I/2: value 1 for the maximally entangled Φ
        let mut p = BlockSdp::new();
        let x = p.add_block(4);
        let kraus: Vec<CMatrix> = (0..2)
            .map(|k| {
                let mut e = CMatrix::zeros(1, 2);
                e[(0, k)] = C64::new(1.0, 0.0);
                CMatrix::identity(2).kron(&e)
            })
            .collect();
        p.eq_matrix(MatrixExpr::new(2).mapped(x, 1.0, kraus), HermitianMatrix::identity(2).scale(0.5));
        let s2 = 0.5f64.sqrt();
        let phi = vec![C64::new(s2, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(s2, 0.0)];
        p.objective = ScalarExpr::new().block(x, HermitianMatrix::projector(&phi));
        let s = solve(&p, &SdpOptions::default()).unwrap();
        assert!((s.primal_objective - 1.0).abs() < 1e-7);
    }

    #[test]
    fn json_round_trip() {
        let mut p = BlockSdp::new();
        let x = p.add_block(2);
        p.le_matrix(MatrixExpr::new(2).block(x, 1.0), HermitianMatrix::identity(2));
        let j = serde_json::to_string(&p).unwrap();
        let back: BlockSdp = serde_json::from_str(&j).unwrap();
        assert_eq!(back, p);
    }
}
