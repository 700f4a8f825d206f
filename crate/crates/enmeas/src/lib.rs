//! Numerics for quantum measurements constrained by energy conservation.
//!
//! A target system with gap `Δ` can only be measured coherently with the help of a
//! battery whose spectrum contains `Δ`-chains. This crate computes the battery quality
//! `τ`, the sets of reachable measurements (through semidefinite programs), distances
//! between measurements, and the CHSH example built from dephased photon pairs.

pub mod bell;
pub mod bessel;
pub mod charact;
pub mod distances;
pub mod linalg;
pub mod par;
pub mod povm;
pub mod quad;
pub mod random;
pub mod sdp;
pub mod spectrum;
pub mod tau;

pub use linalg::{CMatrix, HermitianMatrix, Spectrum, C64};
pub use par::Exec;
