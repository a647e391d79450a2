use super::{DissipationPotential, EnergyFunctional};
use crate::convex_kernel::ScalarDensity;

/// `v^2 / 2` for `|v| <= 1` continued by `2 v^2 - 3/2`: convex, not
/// radially differentiable at `|v| = 1`.
pub fn kinked_quadratic_potential() -> DissipationPotential {
    DissipationPotential::PiecewiseScalar {
        density: ScalarDensity::Kinked { threshold: 1.0, inner: 1.0, outer: 4.0 },
    }
}

/// `sum h |v_i|^p / p` on `nodes` interior nodes with `h = 1 / (nodes + 1)`.
pub fn discrete_power_potential(nodes: usize, exponent: f64) -> DissipationPotential {
    DissipationPotential::SeparableIntegral {
        dim: nodes,
        weight: 1.0 / (nodes as f64 + 1.0),
        density: ScalarDensity::Power { exponent, scale: 1.0 },
    }
}

/// Nonconvex energy whose minimizing-movement interpolant from `u = 2` with
/// quadratic dissipation jumps from `3/2` to `1/2` at `sigma = 1`.
pub fn double_well_energy() -> EnergyFunctional {
    EnergyFunctional::DoubleWell { left: -1.0, right: 1.0, offset: -2.0 }
}
