//! POVMs on the target, physical POVMs on target⊗battery, and the maps between them.

use crate::linalg::{eig_hermitian, sqrt_psd, CMatrix, HermitianMatrix, LinalgError, C64};
use crate::spectrum::{joint_eigenspaces, ChainDecomposition, JointEigenstructure, SpectrumError};
use crate::tau::BatteryState;
use serde::{Deserialize, Serialize};

pub const DEFAULT_POVM_TOL: f64 = 1e-9;
pub const NULL_LABEL: &str = "null";

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PovmError {
    #[error("POVM is invalid: {0}")]
    Invalid(Diagnostics),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("outcome {label} does not commute with the energy operator (‖[M_x, H]‖ = {norm:.3e})")]
    NotCommuting { label: String, norm: f64 },
    #[error("sector {sector} is over-complete: Σ_x M_x exceeds the identity by {excess:.3e}")]
    OverComplete { sector: usize, excess: f64 },
    #[error(transparent)]
    Spectrum(#[from] SpectrumError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    Dimension { label: String, dim: usize },
    NotPsd { label: String, min_eigenvalue: f64 },
    Incomplete { deviation: f64 },
    Empty,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Diagnostics {
    pub violations: Vec<Violation>,
}

impl Diagnostics {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

impl std::fmt::Display for Diagnostics {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.violations.is_empty() {
            return write!(f, "valid");
        }
        let parts: Vec<String> = self
            .violations
            .iter()
            .map(|v| match v {
                Violation::Dimension { label, dim } => format!("element {label} has dimension {dim}"),
                Violation::NotPsd { label, min_eigenvalue } => {
                    format!("element {label} has eigenvalue {min_eigenvalue:.3e}")
                }
                Violation::Incomplete { deviation } => format!("Σ_x M_x deviates from 1 by {deviation:.3e}"),
                Violation::Empty => "no outcomes".to_string(),
            })
            .collect();
        write!(f, "{}", parts.join("; "))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Povm {
    pub dim: usize,
    pub elements: Vec<HermitianMatrix>,
    pub labels: Vec<String>,
    pub tol: f64,
}

impl Povm {
    /// Elements labelled "0", "1", ...; not validated.
    pub fn from_elements(elements: Vec<HermitianMatrix>) -> Self {
        let labels = (0..elements.len()).map(|i| i.to_string()).collect();
        Self::with_labels(elements, labels)
    }

    pub fn with_labels(elements: Vec<HermitianMatrix>, labels: Vec<String>) -> Self {
        assert_eq!(elements.len(), labels.len(), "one label per element");
        let dim = elements.first().map_or(0, HermitianMatrix::dim);
        Povm { dim, elements, labels, tol: DEFAULT_POVM_TOL }
    }

    /// Build and reject if any invariant fails.
    pub fn checked(elements: Vec<HermitianMatrix>, labels: Vec<String>) -> Result<Self, PovmError> {
        let p = Self::with_labels(elements, labels);
        let d = validate(&p);
        if d.is_valid() {
            Ok(p)
        } else {
            Err(PovmError::Invalid(d))
        }
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    /// {(1 + σ_x)/2, (1 − σ_x)/2}
    pub fn sigma_x() -> Self {
        let h = 0.5;
        Self::from_elements(vec![
            HermitianMatrix::from_real(2, &[h, h, h, h]).unwrap(),
            HermitianMatrix::from_real(2, &[h, -h, -h, h]).unwrap(),
        ])
    }

    /// Projective measurement in the computational basis.
    pub fn computational(n: usize) -> Self {
        Self::from_elements(
            (0..n)
                .map(|k| {
                    let mut d = vec![0.0; n];
                    d[k] = 1.0;
                    HermitianMatrix::from_real_diag(&d)
                })
                .collect(),
        )
    }

    /// Rank-one POVM (2/n)|ψ_x⟩⟨ψ_x| on a qubit for n equally spaced states on a great circle
    /// of the Bloch sphere through the poles.
    pub fn planar_qubit(n: usize) -> Self {
        Self::from_elements(
            (0..n)
                .map(|x| {
                    let th = 2.0 * std::f64::consts::PI * x as f64 / n as f64;
                    let v = [C64::new((th / 2.0).cos(), 0.0), C64::new((th / 2.0).sin(), 0.0)];
                    HermitianMatrix::projector(&v).scale(2.0 / n as f64)
                })
                .collect(),
        )
    }

    pub fn probabilities(&self, rho: &HermitianMatrix) -> Vec<f64> {
        self.elements.iter().map(|m| m.inner(rho)).collect()
    }

    pub fn position(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    /// Both POVMs over the union of their labels (first-seen order), missing outcomes as zero.
    pub fn align(a: &Povm, b: &Povm) -> Result<(Povm, Povm), PovmError> {
        if a.dim != b.dim {
            return Err(PovmError::Dimension(format!("POVMs act on dimensions {} and {}", a.dim, b.dim)));
        }
        let mut labels = a.labels.clone();
        for l in &b.labels {
            if !labels.contains(l) {
                labels.push(l.clone());
            }
        }
        let pick = |p: &Povm| -> Vec<HermitianMatrix> {
            labels
                .iter()
                .map(|l| p.position(l).map_or_else(|| HermitianMatrix::zeros(p.dim), |i| p.elements[i].clone()))
                .collect()
        };
        let (ea, eb) = (pick(a), pick(b));
        Ok((
            Povm { dim: a.dim, elements: ea, labels: labels.clone(), tol: a.tol },
            Povm { dim: b.dim, elements: eb, labels, tol: b.tol },
        ))
    }
}

pub fn validate(p: &Povm) -> Diagnostics {
    let mut violations = Vec::new();
    if p.elements.is_empty() {
        violations.push(Violation::Empty);
        return Diagnostics { violations };
    }
    for (m, l) in p.elements.iter().zip(&p.labels) {
        if m.dim() != p.dim {
            violations.push(Violation::Dimension { label: l.clone(), dim: m.dim() });
        }
    }
    if !violations.is_empty() {
        return Diagnostics { violations };
    }
    for (m, l) in p.elements.iter().zip(&p.labels) {
        let lmin = eig_hermitian(m).eigenvalues[0];
        if lmin < -p.tol {
            violations.push(Violation::NotPsd { label: l.clone(), min_eigenvalue: lmin });
        }
    }
    let total = HermitianMatrix::sum(p.dim, &p.elements);
    let dev = total.max_abs_diff(&HermitianMatrix::identity(p.dim));
    if dev > p.tol {
        violations.push(Violation::Incomplete { deviation: dev });
    }
    Diagnostics { violations }
}

// JSON: {"dim": n, "elements": {label: matrix, ...}} with labels kept in document order.

impl Serialize for Povm {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        struct Elements<'a>(&'a Povm);
        impl Serialize for Elements<'_> {
            fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
                use serde::ser::SerializeMap;
                let mut m = s.serialize_map(Some(self.0.len()))?;
                for (l, e) in self.0.labels.iter().zip(&self.0.elements) {
                    m.serialize_entry(l, e)?;
                }
                m.end()
            }
        }
        let mut st = s.serialize_struct("Povm", 2)?;
        st.serialize_field("dim", &self.dim)?;
        st.serialize_field("elements", &Elements(self))?;
        st.end()
    }
}

struct OrderedElements(Vec<(String, HermitianMatrix)>);

impl<'de> Deserialize<'de> for OrderedElements {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct V;
        impl<'de> serde::de::Visitor<'de> for V {
            type Value = OrderedElements;
            fn expecting(&self, f: &mut std::fmt::Formatter) -> std::fmt::Result {
                write!(f, "a map from outcome labels to matrices")
            }
            fn visit_map<A: serde::de::MapAccess<'de>>(self, mut a: A) -> Result<OrderedElements, A::Error> {
                let mut out = Vec::new();
                while let Some((k, v)) = a.next_entry::<String, HermitianMatrix>()? {
                    out.push((k, v));
                }
                Ok(OrderedElements(out))
            }
        }
        d.deserialize_map(V)
    }
}

impl<'de> Deserialize<'de> for Povm {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        use serde::de::Error;
        #[derive(Deserialize)]
        struct Raw {
            dim: usize,
            elements: OrderedElements,
        }
        let raw = Raw::deserialize(d)?;
        let (labels, elements): (Vec<String>, Vec<HermitianMatrix>) = raw.elements.0.into_iter().unzip();
        if let Some(m) = elements.iter().find(|m| m.dim() != raw.dim) {
            return Err(D::Error::custom(format!("element of dimension {} in a POVM declared with dim {}", m.dim(), raw.dim)));
        }
        Ok(Povm { dim: raw.dim, elements, labels, tol: DEFAULT_POVM_TOL })
    }
}

/// A POVM on target⊗battery that commutes with the total energy: one block per joint sector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhysicalPovm {
    pub structure: JointEigenstructure,
    /// elements[x][s] acts on sector s in the order of `structure.sectors[s].pairs`.
    pub elements: Vec<Vec<HermitianMatrix>>,
    pub labels: Vec<String>,
}

impl PhysicalPovm {
    pub fn new(structure: JointEigenstructure, elements: Vec<Vec<HermitianMatrix>>, labels: Vec<String>) -> Result<Self, PovmError> {
        if elements.len() != labels.len() {
            return Err(PovmError::Dimension("one label per outcome".into()));
        }
        for blocks in &elements {
            if blocks.len() != structure.sectors.len() {
                return Err(PovmError::Dimension(format!(
                    "{} blocks for {} sectors",
                    blocks.len(),
                    structure.sectors.len()
                )));
            }
            for (b, s) in blocks.iter().zip(&structure.sectors) {
                if b.dim() != s.rank() {
                    return Err(PovmError::Dimension(format!("block of size {} on a sector of rank {}", b.dim(), s.rank())));
                }
            }
        }
        Ok(PhysicalPovm { structure, elements, labels })
    }

    /// Two-level target with gap Δ: blocks[x][j][k] is the 2×2 block on
    /// span(|0⟩|j,k⟩, |1⟩|j,k−1⟩), k = 0..=L(j); entries that fall outside the chain are ignored.
    pub fn from_chain_blocks(
        battery_levels: &[f64],
        chains: &ChainDecomposition,
        blocks: Vec<Vec<Vec<HermitianMatrix>>>,
        labels: Vec<String>,
    ) -> Result<Self, PovmError> {
        let delta = chains.delta;
        let structure = joint_eigenspaces(&[0.0, delta], battery_levels, chains.grouping_tol)?;
        let pos = chains.positions();
        let mut elements = Vec::with_capacity(blocks.len());
        for per_chain in &blocks {
            if per_chain.len() != chains.chains.len() {
                return Err(PovmError::Dimension("one block list per chain".into()));
            }
            let mut out = Vec::with_capacity(structure.sectors.len());
            for s in &structure.sectors {
                // identify (j, k) of this sector from any of its pairs
                let (m, n) = s.pairs[0];
                let (j, kn) = pos[n];
                let k = kn + m;
                let blk = per_chain[j]
                    .get(k)
                    .ok_or_else(|| PovmError::Dimension(format!("chain {j} needs {} blocks", chains.chains[j].len() + 1)))?;
                if blk.dim() != 2 {
                    return Err(PovmError::Dimension("chain blocks are 2×2".into()));
                }
                let idx: Vec<usize> = s.pairs.iter().map(|&(m, _)| m).collect();
                out.push(HermitianMatrix::from_product_unchecked(&blk.as_matrix().sub_block(&idx, &idx)));
            }
            elements.push(out);
        }
        Self::new(structure, elements, labels)
    }

    pub fn num_outcomes(&self) -> usize {
        self.elements.len()
    }

    /// Per-sector diagnostics: most negative block eigenvalue and the completeness deviation.
    pub fn validate(&self, tol: f64) -> Diagnostics {
        let mut violations = Vec::new();
        for (x, blocks) in self.elements.iter().enumerate() {
            let lmin = blocks.iter().map(|b| eig_hermitian(b).eigenvalues[0]).fold(f64::INFINITY, f64::min);
            if lmin < -tol {
                violations.push(Violation::NotPsd { label: self.labels[x].clone(), min_eigenvalue: lmin });
            }
        }
        let mut dev = 0.0f64;
        for (si, s) in self.structure.sectors.iter().enumerate() {
            let total = HermitianMatrix::sum(s.rank(), self.elements.iter().map(|b| &b[si]));
            dev = dev.max(total.max_abs_diff(&HermitianMatrix::identity(s.rank())));
        }
        if dev > tol {
            violations.push(Violation::Incomplete { deviation: dev });
        }
        Diagnostics { violations }
    }

    /// Assign each sector's deficit 1 − Σ_x M^s_x to an extra "null" outcome.
    pub fn complete_with_null(mut self, tol: f64) -> Result<Self, PovmError> {
        let mut null = Vec::with_capacity(self.structure.sectors.len());
        for (si, s) in self.structure.sectors.iter().enumerate() {
            let total = HermitianMatrix::sum(s.rank(), self.elements.iter().map(|b| &b[si]));
            let deficit = HermitianMatrix::identity(s.rank()).sub(&total);
            let lmin = eig_hermitian(&deficit).eigenvalues[0];
            if lmin < -tol {
                return Err(PovmError::OverComplete { sector: si, excess: -lmin });
            }
            null.push(deficit);
        }
        self.elements.push(null);
        self.labels.push(NULL_LABEL.to_string());
        Ok(self)
    }

    /// The full operator for outcome x on C^{d_S} ⊗ C^{d_B}.
    pub fn full_element(&self, x: usize) -> HermitianMatrix {
        let db = self.structure.battery_dim;
        let n = self.structure.target_dim * db;
        let mut m = CMatrix::zeros(n, n);
        for (s, blk) in self.structure.sectors.iter().zip(&self.elements[x]) {
            for (i, &(mi, ni)) in s.pairs.iter().enumerate() {
                for (j, &(mj, nj)) in s.pairs.iter().enumerate() {
                    m[(mi * db + ni, mj * db + nj)] = blk.get(i, j);
                }
            }
        }
        HermitianMatrix::from_product_unchecked(&m)
    }
}

/// The POVM induced on the target: (M̃_x)_{m m'} = Σ_s Σ_{i,i'} ⟨n_{i'}|σ|n_i⟩ (M^s_x)_{i i'}
/// over sector pairs (m_i, n_i) = (m, ·), (m_{i'}, n_{i'}) = (m', ·).
pub fn effective_povm(phys: &PhysicalPovm, battery: &BatteryState) -> Result<Povm, PovmError> {
    let st = &phys.structure;
    if battery.dim() != st.battery_dim {
        return Err(PovmError::Dimension(format!(
            "battery state has {} levels, physical POVM expects {}",
            battery.dim(),
            st.battery_dim
        )));
    }
    let ds = st.target_dim;
    let elements = phys
        .elements
        .iter()
        .map(|blocks| {
            let mut m = CMatrix::zeros(ds, ds);
            for (s, blk) in st.sectors.iter().zip(blocks) {
                for (i, &(mi, ni)) in s.pairs.iter().enumerate() {
                    for (j, &(mj, nj)) in s.pairs.iter().enumerate() {
                        m[(mi, mj)] += battery.element(nj, ni) * blk.get(i, j);
                    }
                }
            }
            HermitianMatrix::from_product_unchecked(&m)
        })
        .collect();
    Ok(Povm::with_labels(elements, phys.labels.clone()))
}

/// Off-diagonals scaled by τ, diagonals kept.
pub fn degrade(m: &Povm, tau: f64) -> Povm {
    assert!((0.0..=1.0).contains(&tau), "τ must lie in [0, 1]");
    let elements = m
        .elements
        .iter()
        .map(|e| {
            let n = e.dim();
            let out = CMatrix::from_fn(n, n, |a, b| if a == b { e.get(a, b) } else { e.get(a, b) * tau });
            HermitianMatrix::from_product_unchecked(&out)
        })
        .collect();
    Povm { dim: m.dim, elements, labels: m.labels.clone(), tol: m.tol }
}

/// Physical blocks that realize `degrade(m, τ(σ))` with battery σ: in sector (j, k) the block is
/// m_x with its (1,0) entry rotated by the phase that makes ⟨j,k|σ|j,k−1⟩ real and nonnegative.
pub fn degradation_blocks(
    m: &Povm,
    battery: &BatteryState,
    chains: &ChainDecomposition,
) -> Result<PhysicalPovm, PovmError> {
    if m.dim != 2 {
        return Err(PovmError::Dimension("degradation acts on qubit POVMs".into()));
    }
    if battery.dim() != chains.num_levels {
        return Err(PovmError::Dimension("battery and chains disagree on the number of levels".into()));
    }
    let blocks: Vec<Vec<Vec<HermitianMatrix>>> = m
        .elements
        .iter()
        .map(|e| {
            chains
                .chains
                .iter()
                .map(|ch| {
                    (0..=ch.len())
                        .map(|k| {
                            let w = if k >= 1 && k < ch.len() {
                                let o = battery.element(ch.level_ids[k], ch.level_ids[k - 1]);
                                if o.norm() > 0.0 {
                                    o.conj() / o.norm()
                                } else {
                                    C64::new(1.0, 0.0)
                                }
                            } else {
                                C64::new(1.0, 0.0)
                            };
                            let mut b = e.as_matrix().clone();
                            b[(1, 0)] *= w;
                            b[(0, 1)] *= w.conj();
                            HermitianMatrix::from_product_unchecked(&b)
                        })
                        .collect()
                })
                .collect()
        })
        .collect();
    PhysicalPovm::from_chain_blocks(&battery.levels, chains, blocks, m.labels.clone())
}

/// p_x^{(m)}: the outcome distribution after an energy measurement returning m.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatterylessTable {
    pub labels: Vec<String>,
    /// table[m][x]
    pub table: Vec<Vec<f64>>,
}

fn energy_commutator_norm(m: &HermitianMatrix, levels: &[f64]) -> f64 {
    let n = m.dim();
    let c = CMatrix::from_fn(n, n, |a, b| m.get(a, b) * (levels[b] - levels[a]));
    c.spectral_norm()
}

pub fn batteryless_decomposition(m: &Povm, target_levels: &[f64]) -> Result<BatterylessTable, PovmError> {
    if target_levels.len() != m.dim {
        return Err(PovmError::Dimension(format!("{} levels for a POVM of dimension {}", target_levels.len(), m.dim)));
    }
    let scale = target_levels.iter().fold(0.0f64, |a, x| a.max(x.abs())).max(1.0);
    for (e, l) in m.elements.iter().zip(&m.labels) {
        let norm = energy_commutator_norm(e, target_levels);
        if norm > m.tol * scale {
            return Err(PovmError::NotCommuting { label: l.clone(), norm });
        }
    }
    let table = (0..m.dim).map(|k| m.elements.iter().map(|e| e.get(k, k).re.max(0.0)).collect()).collect();
    Ok(BatterylessTable { labels: m.labels.clone(), table })
}

#[derive(Debug, Clone, PartialEq)]
pub struct KrausSet {
    pub dim: usize,
    pub ops: Vec<CMatrix>,
}

impl KrausSet {
    pub fn new(ops: Vec<CMatrix>, tol: f64) -> Result<Self, PovmError> {
        let dim = ops.first().map_or(0, CMatrix::rows);
        if ops.iter().any(|a| a.rows() != dim || a.cols() != dim) {
            return Err(PovmError::Dimension("Kraus operators must be square of equal size".into()));
        }
        let k = KrausSet { dim, ops };
        let dev = k.completeness_deviation();
        if dev > tol {
            return Err(PovmError::Dimension(format!("Σ A†A deviates from 1 by {dev:.3e}")));
        }
        Ok(k)
    }

    pub fn completeness_deviation(&self) -> f64 {
        let mut acc = CMatrix::zeros(self.dim, self.dim);
        for a in &self.ops {
            acc = &acc + &(&a.adjoint() * a);
        }
        (&acc - &CMatrix::identity(self.dim)).max_abs()
    }

    pub fn apply(&self, rho: &HermitianMatrix) -> HermitianMatrix {
        let mut acc = CMatrix::zeros(self.dim, self.dim);
        for a in &self.ops {
            acc = &acc + &(&(a * rho.as_matrix()) * &a.adjoint());
        }
        HermitianMatrix::from_product_unchecked(&acc)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyCheck {
    pub conserving: bool,
    pub max_commutator: f64,
    pub completeness_deviation: f64,
}

pub fn check_energy_conserving(k: &KrausSet, h_levels: &[f64], tol: f64) -> Result<EnergyCheck, PovmError> {
    if h_levels.len() != k.dim {
        return Err(PovmError::Dimension(format!("{} energies for operators of size {}", h_levels.len(), k.dim)));
    }
    let mut worst = 0.0f64;
    for a in &k.ops {
        let c = CMatrix::from_fn(k.dim, k.dim, |i, j| a[(i, j)] * (h_levels[j] - h_levels[i]));
        worst = worst.max(c.spectral_norm());
    }
    let completeness_deviation = k.completeness_deviation();
    Ok(EnergyCheck { conserving: worst <= tol && completeness_deviation <= tol, max_commutator: worst, completeness_deviation })
}

/// A_x = √M_x ⊗ V^x on target⊗pointer, V|k⟩ = |k+1 mod n⟩ and n the number of outcomes.
pub fn measurement_channel(m: &Povm) -> KrausSet {
    let n = m.len();
    let shift = |x: usize| CMatrix::from_fn(n, n, |i, j| if i == (j + x) % n { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) });
    let ops = m.elements.iter().enumerate().map(|(x, e)| sqrt_psd(e).as_matrix().kron(&shift(x))).collect();
    KrausSet { dim: m.dim * n, ops }
}

/// Pointer readout: tr{Ω(ρ⊗|0⟩⟨0|)(1⊗|x⟩⟨x|)} for each x.
pub fn pointer_statistics(k: &KrausSet, rho: &HermitianMatrix, outcomes: usize) -> Vec<f64> {
    let mut p0 = vec![0.0; outcomes];
    p0[0] = 1.0;
    let input = rho.kron(&HermitianMatrix::from_real_diag(&p0));
    let out = k.apply(&input);
    let ds = rho.dim();
    (0..outcomes).map(|x| (0..ds).map(|i| out.get(i * outcomes + x, i * outcomes + x).re).sum()).collect()
}

pub fn energy_levels_with_pointer(levels: &[f64], outcomes: usize) -> Vec<f64> {
    levels.iter().flat_map(|&e| std::iter::repeat(e).take(outcomes)).collect()
}


#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::sigma_x;
    use crate::random;
    use crate::spectrum::decompose_chains;
    use crate::tau::tau_of_state;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn validate_examples() {
        let half = HermitianMatrix::identity(2).scale(0.5);
        assert!(validate(&Povm::from_elements(vec![half.clone(), half.clone()])).is_valid());
        let short = Povm::from_elements(vec![half.clone(), HermitianMatrix::identity(2).scale(0.4)]);
        let d = validate(&short);
        assert!(matches!(d.violations[..], [Violation::Incomplete { deviation }] if (deviation - 0.1).abs() < 1e-12));
        let mut p = Povm::from_elements(vec![
            HermitianMatrix::from_real_diag(&[1.0 + 1e-6, -1e-6]),
            HermitianMatrix::from_real_diag(&[-1e-6, 1.0 + 1e-6]),
        ]);
        p.tol = 1e-9;
        let d = validate(&p);
        assert!(d.violations.iter().any(|v| matches!(v, Violation::NotPsd { min_eigenvalue, .. } if (*min_eigenvalue + 1e-6).abs() < 1e-12)));
    }

    #[test]
    fn json_keeps_label_order() {
        let mut p = Povm::planar_qubit(12);
        p.labels = (0..12).map(|i| format!("{}", 11 - i)).collect();
        let s = serde_json::to_string(&p).unwrap();
        let back: Povm = serde_json::from_str(&s).unwrap();
        assert_eq!(back.labels, p.labels);
        assert!(back.elements.iter().zip(&p.elements).all(|(a, b)| a.max_abs_diff(b) < 1e-15));
        let bad = r#"{"dim": 3, "elements": {"a": [[1,0],[0,1]]}}"#;
        assert!(serde_json::from_str::<Povm>(bad).is_err());
    }

    #[test]
    fn uniform_battery_formula() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for d in [2usize, 3, 5] {
            let target = Povm::from_elements(random::povm_elements(&mut rng, 2, 3, 1));
            let chains = ChainDecomposition::ladder(d, 1.0);
            let a = 1.0 / (d as f64).sqrt();
            let battery = BatteryState::ladder_real(&vec![a; d], 1.0).unwrap();
            let blocks = target.elements.iter().map(|e| vec![vec![e.clone(); d + 1]]).collect();
            let phys = PhysicalPovm::from_chain_blocks(&battery.levels, &chains, blocks, target.labels.clone()).unwrap();
            let eff = effective_povm(&phys, &battery).unwrap();
            for (mt, me) in eff.elements.iter().zip(&target.elements) {
                for i in 0..2 {
                    for j in 0..2 {
                        let f = 1.0 + ((i == j) as u8 as f64 - 1.0) / d as f64;
                        assert!((mt.get(i, j) - me.get(i, j) * f).norm() < 1e-14);
                    }
                }
            }
            assert!(validate(&eff).is_valid());
        }
    }

    #[test]
    fn eigenstate_battery_gives_diagonal() {
        let chains = ChainDecomposition::ladder(3, 1.0);
        let battery = BatteryState::eigenstate(vec![0.0, 1.0, 2.0], 1);
        let m = Povm::sigma_x();
        let phys = degradation_blocks(&m, &battery, &chains).unwrap();
        let eff = effective_povm(&phys, &battery).unwrap();
        for e in &eff.elements {
            assert!(e.get(0, 1).norm() < 1e-15);
        }
    }

    #[test]
    fn joint_statistics_identity_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let levels = vec![0.0, 1.0, 2.0];
        let battery = BatteryState::mixed(levels.clone(), random::density(&mut rng, 3)).unwrap();
        let st = joint_eigenspaces(&[0.0, 1.0], &levels, 1e-9).unwrap();
        let per_sector: Vec<Vec<HermitianMatrix>> =
            st.sectors.iter().map(|s| random::complete_blocks(&mut rng, s.rank(), 3)).collect();
        let elements: Vec<Vec<HermitianMatrix>> = (0..3).map(|x| per_sector.iter().map(|b| b[x].clone()).collect()).collect();
        let phys = PhysicalPovm::new(st, elements, vec!["a".into(), "b".into(), "c".into()]).unwrap();
        assert!(phys.validate(1e-10).is_valid());
        let eff = effective_povm(&phys, &battery).unwrap();
        assert!(validate(&eff).is_valid());
        for _ in 0..20 {
            let rho = random::density(&mut rng, 2);
            let joint = rho.kron(&battery.density());
            for x in 0..3 {
                let lhs = eff.elements[x].inner(&rho);
                let rhs = phys.full_element(x).inner(&joint);
                assert!((lhs - rhs).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn degrade_examples() {
        let m = Povm::sigma_x();
        let same = degrade(&m, 1.0);
        assert!(same.elements[0].max_abs_diff(&m.elements[0]) < 1e-15);
        let flat = degrade(&m, 0.0);
        assert!(flat.elements[0].max_abs_diff(&HermitianMatrix::identity(2).scale(0.5)) < 1e-15);
        let t = std::f64::consts::FRAC_PI_4.cos();
        let d = degrade(&m, t);
        assert!((d.elements[0].get(1, 0).re - t / 2.0).abs() < 1e-15);
        assert!((d.elements[1].get(1, 0).re + t / 2.0).abs() < 1e-15);
        assert!(validate(&d).is_valid());
    }

    #[test]
    fn degradation_blocks_reproduce_degrade_with_phases() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        // two interleaved chains plus a lone level
        let levels = vec![0.0, 0.5, 1.0, 1.5, 2.0, 3.7];
        let chains = decompose_chains(&levels, 1.0, 1e-9).unwrap();
        for _ in 0..10 {
            let battery = BatteryState::pure(levels.clone(), random::pure_state(&mut rng, levels.len())).unwrap();
            let m = Povm::from_elements(random::povm_elements(&mut rng, 2, 4, 1));
            let tau = tau_of_state(&battery, &chains).unwrap().tau;
            let phys = degradation_blocks(&m, &battery, &chains).unwrap();
            assert!(phys.validate(1e-12).is_valid());
            let eff = effective_povm(&phys, &battery).unwrap();
            let want = degrade(&m, tau);
            for (a, b) in eff.elements.iter().zip(&want.elements) {
                assert!(a.max_abs_diff(b) < 1e-13);
            }
        }
    }

    #[test]
    fn null_outcome_completes_subnormalized_sectors() {
        let chains = ChainDecomposition::ladder(2, 1.0);
        let levels = vec![0.0, 1.0];
        let half = HermitianMatrix::identity(2).scale(0.5);
        let phys = PhysicalPovm::from_chain_blocks(&levels, &chains, vec![vec![vec![half.clone(); 3]]], vec!["x".into()])
            .unwrap()
            .complete_with_null(1e-12)
            .unwrap();
        assert!(phys.validate(1e-12).is_valid());
        assert_eq!(phys.labels.last().unwrap(), NULL_LABEL);
        let over = PhysicalPovm::from_chain_blocks(
            &levels,
            &chains,
            vec![vec![vec![HermitianMatrix::identity(2).scale(1.5); 3]]],
            vec!["x".into()],
        )
        .unwrap();
        assert!(matches!(over.complete_with_null(1e-12), Err(PovmError::OverComplete { .. })));
    }

    #[test]
    fn batteryless_examples() {
        let t = batteryless_decomposition(&Povm::computational(3), &[0.0, 1.0, 2.5]).unwrap();
        assert_eq!(t.table, vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]]);
        let half = HermitianMatrix::identity(2).scale(0.5);
        let t = batteryless_decomposition(&Povm::from_elements(vec![half.clone(), half]), &[0.0, 1.0]).unwrap();
        assert!(t.table.iter().flatten().all(|p| (*p - 0.5).abs() < 1e-15));
        match batteryless_decomposition(&Povm::sigma_x(), &[0.0, 1.0]) {
            // [(1 ± σ_x)/2, diag(0, 1)] = ±[σ_x, diag(0,1)]/2, whose norm is 1/2
            Err(PovmError::NotCommuting { norm, .. }) => assert!((norm - 0.5).abs() < 1e-12),
            other => panic!("expected rejection, got {other:?}"),
        }
        let c = sigma_x().as_matrix().commutator(HermitianMatrix::from_real_diag(&[0.0, 1.0]).as_matrix());
        assert!((c.spectral_norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn energy_conserving_examples() {
        let levels = [0.0, 1.0, 2.5];
        let u = CMatrix::diag(&levels.iter().map(|e| C64::new(0.0, -e).exp()).collect::<Vec<_>>());
        let k = KrausSet::new(vec![u], 1e-12).unwrap();
        assert!(check_energy_conserving(&k, &levels, 1e-10).unwrap().conserving);

        let m = Povm::computational(3);
        let ch = measurement_channel(&m);
        let chk = check_energy_conserving(&ch, &energy_levels_with_pointer(&levels, 3), 1e-10).unwrap();
        assert!(chk.conserving);

        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let u = random::unitary(&mut rng, 4);
        let k = KrausSet::new(vec![u], 1e-10).unwrap();
        let chk = check_energy_conserving(&k, &[0.0, 1.0, 1.0, 2.0], 1e-8).unwrap();
        assert!(!chk.conserving && chk.max_commutator > 1e-3);
    }

    #[test]
    fn measurement_channel_statistics() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let trine = Povm::planar_qubit(3);
        assert!(validate(&trine).is_valid());
        let ch = measurement_channel(&trine);
        assert_eq!(ch.ops.len(), 3);
        assert!(ch.completeness_deviation() < 1e-12);
        let proj = measurement_channel(&Povm::computational(2));
        assert_eq!((proj.ops.len(), proj.dim), (2, 4));
        for _ in 0..10 {
            let rho = random::density(&mut rng, 2);
            let want = trine.probabilities(&rho);
            let got = pointer_statistics(&ch, &rho, 3);
            for (a, b) in want.iter().zip(&got) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }
}
