use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::step::{solve_step, BanachSystem};
use super::trace::InterpolantTrace;
use crate::convex_kernel::{is_radially_differentiable, radial_profile};
use crate::error::{Error, Result};
use crate::linalg::{dist, linspace, norm, scale, sub};
use crate::models::DissipationPotential;

/// Bracket for the one-sided derivatives of the marginal function.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MarginalBounds {
    pub sigma: f64,
    /// Largest left derivative of `s -> Phi_s(u0; u)` over the minimizers.
    pub delta_minus: f64,
    /// Smallest right derivative over the minimizers.
    pub delta_plus: f64,
    /// Central difference of the marginal function.
    pub fd_slope: f64,
}

impl MarginalBounds {
    pub fn brackets(&self, tol: f64) -> bool {
        self.delta_minus - tol <= self.fd_slope && self.fd_slope <= self.delta_plus + tol
    }
}

const MARGINAL_STEP: f64 = 1e-5;

pub fn marginal_derivative_bounds(sys: &BanachSystem, u0: &[f64], sigma: f64) -> Result<MarginalBounds> {
    let step = solve_step(sys, u0, sigma, false)?;
    let mut delta_minus = f64::NEG_INFINITY;
    let mut delta_plus = f64::INFINITY;
    for u in &step.minimizers {
        let p = radial_profile(&sys.potential, &sub(u, u0), sigma)?;
        delta_minus = delta_minus.max(p.left);
        delta_plus = delta_plus.min(p.right);
    }
    let h = MARGINAL_STEP * sigma.min(1.0);
    let ahead = solve_step(sys, u0, sigma + h, false)?.phi;
    let behind = solve_step(sys, u0, sigma - h, false)?.phi;
    Ok(MarginalBounds { sigma, delta_minus, delta_plus, fd_slope: (ahead - behind) / (2.0 * h) })
}

/// The conditioned slope at the node `rho` against minus the derivative of
/// `s -> s R((u_rho - u0) / s)` at `s = rho`. The two agree for radially
/// differentiable potentials.
pub fn identity_derivative_check(sys: &BanachSystem, trace: &InterpolantTrace, rho: f64) -> Result<(f64, f64)> {
    let p = &trace.points[trace.index_of(rho)?];
    let w = sub(p.u(), &trace.initial);
    if !is_radially_differentiable(&sys.potential, &scale(&w, 1.0 / rho), 1e-9)? {
        return Err(Error::NotRadiallyDifferentiable("identity_derivative_check"));
    }
    let profile = radial_profile(&sys.potential, &w, rho)?;
    Ok((p.conditioned_slope, -profile.right))
}

/// Outcome of the Lipschitz audit of the interpolant.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LipschitzAudit {
    /// Largest difference quotient `|u_s2 - u_s1| / (s2 - s1)` over the samples.
    pub empirical: f64,
    /// `C_M / (lambda sigma_floor)`
    pub bound: f64,
    pub lambda: f64,
    /// Ball radius containing the velocities `(u_s - u0) / rho`, `rho >= sigma_floor`.
    pub radius: f64,
    /// Estimated Lipschitz constant of `v -> R*(dR(v))` on that ball.
    pub lipschitz: f64,
}

/// Lipschitz constant of `v -> R*(xi)`, `xi ∈ dR(v)`, on the ball of radius
/// `radius`, estimated from central-difference gradients on a grid (1D) or
/// at seeded random points.
fn dual_lipschitz(pot: &DissipationPotential, radius: f64) -> f64 {
    let n = pot.dim();
    let f = |v: &[f64]| pot.conjugate(&pot.subdifferential(v).min_norm_element());
    let h = 1e-6 * radius.max(1e-3);
    let grad_norm = |v: &[f64]| {
        let g: Vec<f64> = (0..n)
            .map(|i| {
                let mut a = v.to_vec();
                let mut b = v.to_vec();
                a[i] += h;
                b[i] -= h;
                (f(&a) - f(&b)) / (2.0 * h)
            })
            .collect();
        norm(&g)
    };
    let points: Vec<Vec<f64>> = if n == 1 {
        linspace(-radius, radius, 4001).into_iter().map(|x| vec![x]).collect()
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(0x11b5);
        let mut pts = Vec::new();
        for i in 0..n {
            for s in [-radius, radius] {
                let mut e = vec![0.0; n];
                e[i] = s;
                pts.push(e);
            }
        }
        while pts.len() < 4000 {
            let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-radius..radius)).collect();
            if norm(&v) <= radius {
                pts.push(v);
            }
        }
        pts
    };
    points.iter().map(|v| grad_norm(v)).fold(0.0, f64::max)
}

/// Empirical Lipschitz constant of `sigma -> u_sigma` over increasing
/// `sigmas >= sigma_floor` against the bound from lambda-convexity.
pub fn lipschitz_interpolant_audit(
    sys: &BanachSystem,
    u0: &[f64],
    sigma_floor: f64,
    sigmas: &[f64],
) -> Result<LipschitzAudit> {
    let lambda = sys.energy.lambda().filter(|l| *l > 0.0).ok_or(Error::NotUniformlyConvex)?;
    if !(sigma_floor > 0.0) || sigmas.iter().any(|s| *s < sigma_floor) {
        return Err(Error::InvalidParameter("samples must lie above a positive floor".into()));
    }
    let states: Vec<Vec<f64>> = sigmas
        .iter()
        .map(|&s| solve_step(sys, u0, s, false).map(|r| r.representative().to_vec()))
        .collect::<Result<_>>()?;
    let mut empirical: f64 = 0.0;
    for i in 0..sigmas.len() {
        for j in i + 1..sigmas.len() {
            let ds = (sigmas[j] - sigmas[i]).abs();
            if ds > 0.0 {
                empirical = empirical.max(dist(&states[i], &states[j]) / ds);
            }
        }
    }
    let radius = states.iter().map(|u| dist(u, u0)).fold(0.0, f64::max) / sigma_floor;
    let lipschitz = dual_lipschitz(&sys.potential, radius);
    Ok(LipschitzAudit { empirical, bound: lipschitz / (lambda * sigma_floor), lambda, radius, lipschitz })
}
