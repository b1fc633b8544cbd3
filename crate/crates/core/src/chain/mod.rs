//! Disordered harmonic chain with free ends: masses, dynamical matrix and normal modes.

mod basis;
mod cache;

mod masses;
mod tridiag;

pub use basis::{BasisCheck, EigenBasis, Tolerances};
pub use masses::{MassField, MassLaw};
pub use tridiag::SymTridiagonal;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ChainError {
    #[error("chain needs at least 2 sites, got {0}")]
    TooShort(usize),
    #[error("invalid mass law: {0}")]
    InvalidLaw(String),
    #[error("mass at site {site} is {mass}, masses must be finite and positive")]
    BadMass { site: usize, mass: f64 },
    #[error("eigen solver did not converge for eigenvalue {index}")]
    NoConvergence { index: usize },
    #[error("basis check `{check}` failed: worst deviation {worst:e} exceeds {tolerance:e}")]
    Verification {
        check: BasisCheck,
        worst: f64,
        tolerance: f64,
    },
    #[error("malformed basis cache: {0}")]
    Cache(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = ChainError> = std::result::Result<T, E>;

/// Builds the symmetric form `M^{-1/2} (-Δ) M^{-1/2}` of the free-end chain operator.
pub fn dynamical_matrix(masses: &MassField) -> SymTridiagonal {
    let m = masses.masses();
    let n = m.len();
    let diag = m
        .iter()
        .enumerate()
        .map(|(x, &mx)| if x == 0 || x == n - 1 { 1.0 / mx } else { 2.0 / mx })
        .collect();
    let off = m.windows(2).map(|w| -1.0 / (w[0] * w[1]).sqrt()).collect();
    SymTridiagonal::new(diag, off)
}
