//! Chain decomposition of battery spectra and the joint target⊗battery energy sectors.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SpectrumError {
    #[error("degenerate levels {first} and {second} (|gap| = {gap:.3e} within grouping tolerance)")]
    Degenerate { first: usize, second: usize, gap: f64 },
    #[error("gap must be positive and finite, got {0}")]
    BadDelta(f64),
    #[error("level {0} is not finite")]
    NonFinite(usize),
    #[error("empty spectrum")]
    Empty,
}

/// A maximal run of levels ν, ν+Δ, ν+2Δ, ...
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Chain {
    pub nu: f64,
    /// Original spectrum indices, in increasing energy.
    pub level_ids: Vec<usize>,
}

impl Chain {
    pub fn len(&self) -> usize {
        self.level_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.level_ids.is_empty()
    }
}

/// A pair of levels whose gap misses Δ by more than the grouping tolerance but by less
/// than ten times it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NearMiss {
    pub lower: usize,
    pub upper: usize,
    pub gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainDecomposition {
    pub delta: f64,
    pub chains: Vec<Chain>,
    pub grouping_tol: f64,
    pub num_levels: usize,
    pub near_misses: Vec<NearMiss>,
}

impl ChainDecomposition {
    /// A single ladder 0, Δ, ..., (d−1)Δ.
    pub fn ladder(d: usize, delta: f64) -> Self {
        let levels: Vec<f64> = (0..d).map(|k| k as f64 * delta).collect();
        decompose_chains(&levels, delta, default_grouping_tol(&levels, delta)).expect("ladder is well formed")
    }

    /// (chain index, position in chain) for each original level.
    pub fn positions(&self) -> Vec<(usize, usize)> {
        let mut pos = vec![(0, 0); self.num_levels];
        for (j, ch) in self.chains.iter().enumerate() {
            for (k, &id) in ch.level_ids.iter().enumerate() {
                pos[id] = (j, k);
            }
        }
        pos
    }
}

pub fn default_grouping_tol(levels: &[f64], delta: f64) -> f64 {
    let (lo, hi) = levels.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
    let spread = if levels.is_empty() { 0.0 } else { hi - lo };
    1e-9 * delta.abs().max(spread)
}

fn sorted_checked(levels: &[f64], tol: f64) -> Result<Vec<usize>, SpectrumError> {
    if levels.is_empty() {
        return Err(SpectrumError::Empty);
    }
    if let Some(i) = levels.iter().position(|x| !x.is_finite()) {
        return Err(SpectrumError::NonFinite(i));
    }
    let mut order: Vec<usize> = (0..levels.len()).collect();
    order.sort_by(|&a, &b| levels[a].total_cmp(&levels[b]));
    for w in order.windows(2) {
        let gap = levels[w[1]] - levels[w[0]];
        if gap <= tol {
            return Err(SpectrumError::Degenerate { first: w[0].min(w[1]), second: w[0].max(w[1]), gap });
        }
    }
    Ok(order)
}

pub fn decompose_chains(levels: &[f64], delta: f64, grouping_tol: f64) -> Result<ChainDecomposition, SpectrumError> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(SpectrumError::BadDelta(delta));
    }
    let order = sorted_checked(levels, grouping_tol)?;
    let sorted: Vec<f64> = order.iter().map(|&i| levels[i]).collect();
    let mut chain_of = vec![usize::MAX; levels.len()];
    let mut chains: Vec<Chain> = Vec::new();
    let mut near_misses = Vec::new();
    for (pos, &id) in order.iter().enumerate() {
        let target = sorted[pos] - delta;
        // candidates within 10·tol of E − Δ, among lower levels
        let start = sorted[..pos].partition_point(|&x| x < target - 10.0 * grouping_tol);
        let mut best: Option<(usize, f64)> = None;
        for (q, &val) in sorted.iter().enumerate().take(pos).skip(start) {
            let miss = (val - target).abs();
            if miss > 10.0 * grouping_tol {
                if val > target {
                    break;
                }
                continue;
            }
            if miss <= grouping_tol {
                if best.map_or(true, |(_, m)| miss < m) {
                    best = Some((order[q], miss));
                }
            } else {
                near_misses.push(NearMiss { lower: order[q], upper: id, gap: sorted[pos] - val });
            }
        }
        match best {
            Some((pred, _)) => {
                let j = chain_of[pred];
                chains[j].level_ids.push(id);
                chain_of[id] = j;
            }
            None => {
                chain_of[id] = chains.len();
                chains.push(Chain { nu: levels[id], level_ids: vec![id] });
            }
        }
    }
    // chains are created in increasing ν already
    Ok(ChainDecomposition { delta, chains, grouping_tol, num_levels: levels.len(), near_misses })
}

/// One eigenspace of H_S ⊗ 1 + 1 ⊗ H_B: all (m, n) with E_m + μ_n equal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sector {
    pub energy: f64,
    /// (target index m, battery index n), sorted by m.
    pub pairs: Vec<(usize, usize)>,
}

impl Sector {
    pub fn rank(&self) -> usize {
        self.pairs.len()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointEigenstructure {
    pub sectors: Vec<Sector>,
    pub target_dim: usize,
    pub battery_dim: usize,
    pub grouping_tol: f64,
}

impl JointEigenstructure {
    pub fn ranks(&self) -> Vec<usize> {
        self.sectors.iter().map(Sector::rank).collect()
    }
}

pub fn joint_eigenspaces(
    target_levels: &[f64],
    battery_levels: &[f64],
    grouping_tol: f64,
) -> Result<JointEigenstructure, SpectrumError> {
    sorted_checked(target_levels, grouping_tol)?;
    sorted_checked(battery_levels, grouping_tol)?;
    let mut all: Vec<(f64, usize, usize)> = Vec::with_capacity(target_levels.len() * battery_levels.len());
    for (m, &e) in target_levels.iter().enumerate() {
        for (n, &mu) in battery_levels.iter().enumerate() {
            all.push((e + mu, m, n));
        }
    }
    all.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let mut sectors: Vec<Sector> = Vec::new();
    let mut anchor = f64::NEG_INFINITY;
    for (e, m, n) in all {
        if sectors.is_empty() || e - anchor > grouping_tol {
            anchor = e;
            sectors.push(Sector { energy: e, pairs: vec![(m, n)] });
        } else {
            sectors.last_mut().unwrap().pairs.push((m, n));
        }
    }
    for s in &mut sectors {
        s.pairs.sort();
        s.energy = s.pairs.iter().map(|&(m, n)| target_levels[m] + battery_levels[n]).sum::<f64>() / s.rank() as f64;
    }
    Ok(JointEigenstructure {
        sectors,
        target_dim: target_levels.len(),
        battery_dim: battery_levels.len(),
        grouping_tol,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ids_by_chain(d: &ChainDecomposition) -> Vec<Vec<usize>> {
        d.chains.iter().map(|c| c.level_ids.clone()).collect()
    }

    #[test]
    fn ladder_is_one_chain() {
        let d = decompose_chains(&[0.0, 1.0, 2.0], 1.0, 1e-9).unwrap();
        assert_eq!(ids_by_chain(&d), vec![vec![0, 1, 2]]);
        assert_eq!(d.chains[0].nu, 0.0);
    }

    #[test]
    fn incommensurate_levels_split() {
        let d = decompose_chains(&[0.0, 2f64.sqrt()], 1.0, 1e-9).unwrap();
        assert_eq!(ids_by_chain(&d), vec![vec![0], vec![1]]);
    }

    #[test]
    fn interleaved_chains_match_pairwise_gap_oracle() {
        let levels = [0.0, 0.5, 1.0, 1.5, 3.0];
        let d = decompose_chains(&levels, 1.0, 1e-9).unwrap();
        assert_eq!(ids_by_chain(&d), vec![vec![0, 2], vec![1, 3], vec![4]]);
        // oracle: i -> j linked iff E_j − E_i = Δ; chains are the path components
        for ch in &d.chains {
            for w in ch.level_ids.windows(2) {
                assert!((levels[w[1]] - levels[w[0]] - 1.0).abs() < 1e-12);
            }
        }
        for a in &d.chains {
            for b in &d.chains {
                let (last, first) = (*a.level_ids.last().unwrap(), b.level_ids[0]);
                assert!((levels[first] - levels[last] - 1.0).abs() > 1e-9);
            }
        }
    }

    #[test]
    fn commensurate_gap_without_intermediate_is_not_a_chain() {
        let d = decompose_chains(&[0.0, 2.0], 1.0, 1e-9).unwrap();
        assert_eq!(d.chains.len(), 2);
    }

    #[test]
    fn degenerate_rejected() {
        assert!(matches!(decompose_chains(&[0.0, 1.0, 1.0], 1.0, 1e-9), Err(SpectrumError::Degenerate { .. })));
    }

    #[test]
    fn near_miss_reported() {
        let d = decompose_chains(&[0.0, 1.0 + 5e-9], 1.0, 1e-9).unwrap();
        assert_eq!(d.chains.len(), 2);
        assert_eq!(d.near_misses.len(), 1);
    }

    #[test]
    fn sector_ranks() {
        let j = joint_eigenspaces(&[0.0, 1.0], &[0.0, 1.0, 2.0], 1e-9).unwrap();
        assert_eq!(j.ranks(), vec![1, 2, 2, 1]);
        assert_eq!(j.sectors[1].pairs, vec![(0, 1), (1, 0)]);
        let j = joint_eigenspaces(&[0.0, 1.0], &[0.0, 2f64.sqrt()], 1e-9).unwrap();
        assert_eq!(j.ranks(), vec![1, 1, 1, 1]);
        let j = joint_eigenspaces(&[0.0, 1.0, 2.0], &[0.0, 1.0, 2.0], 1e-9).unwrap();
        let mid = j.sectors.iter().find(|s| (s.energy - 2.0).abs() < 1e-12).unwrap();
        assert_eq!(mid.rank(), 3);
    }
}
