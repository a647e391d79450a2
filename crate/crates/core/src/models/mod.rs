//! Energies and dissipation potentials with subdifferential descriptors,
//! conjugates and the built-in scenario catalogue.

mod builtin;
mod energy;
mod potential;

pub use builtin::*;
pub use energy::{EnergyFunctional, Wave};
pub use potential::DissipationPotential;

pub use crate::sets::SubdifferentialSet;

/// Fenchel gap `R(v) + R*(xi) - <xi, v>`; zero exactly when `xi` lies in `dR(v)`.
pub fn fenchel_gap(pot: &DissipationPotential, v: &[f64], xi: &[f64]) -> f64 {
    (pot.value(v) + pot.conjugate(xi) - crate::linalg::dot(xi, v)).max(0.0)
}
