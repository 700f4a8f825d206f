//! Random states, unitaries and POVMs for sampling-based checks and searches.

use crate::linalg::{eig_hermitian, CMatrix, HermitianMatrix, C64};
use rand::Rng;
use rand_distr::StandardNormal;

fn gaussian_matrix(rng: &mut impl Rng, rows: usize, cols: usize) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
}

/// Haar-random pure state.
pub fn pure_state(rng: &mut impl Rng, n: usize) -> Vec<C64> {
    let mut v: Vec<C64> = (0..n).map(|_| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))).collect();
    crate::linalg::normalize(&mut v);
    v
}

/// Hilbert–Schmidt random density matrix.
pub fn density(rng: &mut impl Rng, n: usize) -> HermitianMatrix {
    let g = gaussian_matrix(rng, n, n);
    let w = &g * &g.adjoint();
    let t = w.trace().re;
    HermitianMatrix::from_product_unchecked(&w.scale_re(1.0 / t))
}

/// Haar-random unitary (Gram–Schmidt on a Ginibre matrix).
pub fn unitary(rng: &mut impl Rng, n: usize) -> CMatrix {
    let g = gaussian_matrix(rng, n, n);
    let mut cols: Vec<Vec<C64>> = Vec::with_capacity(n);
    for j in 0..n {
        let mut v = g.column(j);
        for u in &cols {
            let p = crate::linalg::inner_product(u, &v);
            for (vi, ui) in v.iter_mut().zip(u) {
                *vi -= p * ui;
            }
        }
        crate::linalg::normalize(&mut v);
        cols.push(v);
    }
    CMatrix::from_fn(n, n, |i, j| cols[j][i])
}

pub fn hermitian(rng: &mut impl Rng, n: usize) -> HermitianMatrix {
    let g = gaussian_matrix(rng, n, n);
    HermitianMatrix::from_product_unchecked(&(&g + &g.adjoint()).scale_re(0.5))
}

/// Random POVM with `outcomes` elements of rank ≤ `rank`: M_x = S^{-1/2} G_x S^{-1/2}.
pub fn povm_elements(rng: &mut impl Rng, n: usize, outcomes: usize, rank: usize) -> Vec<HermitianMatrix> {
    let gs: Vec<HermitianMatrix> = (0..outcomes)
        .map(|_| {
            let a = gaussian_matrix(rng, n, rank);
            HermitianMatrix::from_product_unchecked(&(&a * &a.adjoint()))
        })
        .collect();
    let s = HermitianMatrix::sum(n, &gs);
    let inv_sqrt = eig_hermitian(&s).map(|x| 1.0 / x.sqrt());
    gs.iter().map(|g| g.conjugate_by(inv_sqrt.as_matrix())).collect()
}

/// Random element of a sector-complete family: each of `outcomes` PSD blocks summing to I.
pub fn complete_blocks(rng: &mut impl Rng, n: usize, outcomes: usize) -> Vec<HermitianMatrix> {
    povm_elements(rng, n, outcomes, n)
}

