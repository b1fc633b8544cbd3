//! Exact ensemble dynamics of disordered harmonic chains and the checks of their
//! hydrodynamic (Euler) limit.

pub mod chain;
pub mod clean_chain;
pub mod euler;
pub mod evolution;
pub mod fields;
pub mod gibbs;
pub mod localization;
pub mod numeric;
