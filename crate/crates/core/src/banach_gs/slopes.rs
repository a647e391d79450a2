use serde::Serialize;

use super::step::BanachSystem;
use crate::error::{check_dim, Error, Result};
use crate::linalg::{neg, velocity};
use crate::models::fenchel_gap;
use crate::sets::SubdifferentialSet;
use crate::solver::constrained_dual_minimize;
use crate::tolerances::FENCHEL_CERTIFICATE;

/// Optimal element of the conditioned subdifferential.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConditionedSlope {
    /// Descriptor of `dE(u) ∩ -dR((u - u0) / sigma)`.
    pub feasible: SubdifferentialSet,
    /// The minimizer of `R*(-xi)` over the feasible set.
    pub xi: Vec<f64>,
    pub value: f64,
    /// False when the descriptors did not intersect exactly and the
    /// subgradient was instead certified by a small Fenchel gap.
    pub attained: bool,
    pub certificate: f64,
}

/// Largest of the two certificates for `xi ∈ dE(u)` and
/// `-xi ∈ dR((u - u0) / sigma)`: the distance of `xi` to the energy
/// descriptor and the Fenchel gap of the dissipation pair.
pub fn euler_lagrange_gap(sys: &BanachSystem, u0: &[f64], sigma: f64, u: &[f64], xi: &[f64]) -> Result<f64> {
    sys.check_start(u0, sigma)?;
    check_dim(sys.dim(), u.len())?;
    check_dim(sys.dim(), xi.len())?;
    let energy_part = sys.energy.subdifferential(u)?.distance(xi);
    let v = velocity(u, u0, sigma);
    Ok(energy_part.max(fenchel_gap(&sys.potential, &v, &neg(xi))))
}

/// `min { R*(-xi) : xi ∈ dE(u) }`
pub fn r_slope(sys: &BanachSystem, u: &[f64]) -> Result<f64> {
    check_dim(sys.dim(), u.len())?;
    let set = sys.energy.subdifferential(u)?;
    let f = |x: &[f64]| sys.potential.conjugate(&neg(x));
    Ok(constrained_dual_minimize(&f, &set, &sys.solve)?.1)
}

/// `min { R*(-xi) : xi ∈ dE(u), -xi ∈ dR((u - u0) / sigma) }` and its
/// minimizer.
pub fn conditioned_slope(sys: &BanachSystem, u0: &[f64], sigma: f64, u: &[f64]) -> Result<ConditionedSlope> {
    sys.check_start(u0, sigma)?;
    check_dim(sys.dim(), u.len())?;
    let energy_set = sys.energy.subdifferential(u)?;
    let v = velocity(u, u0, sigma);
    let dual = |x: &[f64]| sys.potential.conjugate(&neg(x));
    let feasible_set = sys.potential.subdifferential(&v).negate();
    if let Some(feasible) = energy_set.intersect(&feasible_set, sys.feasibility_tol) {
        let (xi, value) = constrained_dual_minimize(&dual, &feasible, &sys.solve)?;
        let certificate = fenchel_gap(&sys.potential, &v, &neg(&xi));
        return Ok(ConditionedSlope { feasible, xi, value, attained: true, certificate });
    }
    let penalty = |x: &[f64]| fenchel_gap(&sys.potential, &v, &neg(x));
    let (xi, certificate) = constrained_dual_minimize(&penalty, &energy_set, &sys.solve)?;
    if certificate > FENCHEL_CERTIFICATE {
        return Err(Error::Infeasible { certificate });
    }
    let value = dual(&xi);
    Ok(ConditionedSlope { feasible: SubdifferentialSet::singleton(xi.clone()), xi, value, attained: false, certificate })
}
