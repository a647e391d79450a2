//! Moreau-Yosida regularization of dissipation potentials.

use serde::Serialize;

use crate::convex_kernel::{numeric_conjugate_1d, one_sided_derivatives, ScalarConvex, ScalarDensity};
use crate::error::{check_dim, Error, Result};
use crate::linalg::{dot, norm};
use crate::models::DissipationPotential;
use crate::solver::{bisect_root, local_descent, FnObjective, SolveConfig, Window};

/// `R_eta(v)`, its gradient `(v - W_eta(v)) / eta` and the proximal point.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct YosidaEval {
    pub value: f64,
    pub gradient: Vec<f64>,
    pub prox: Vec<f64>,
}

/// Wraps `base` into its Moreau-Yosida regularization.
pub fn yosida(base: DissipationPotential, eta: f64) -> Result<DissipationPotential> {
    let r = DissipationPotential::YosidaWrapped { base: Box::new(base), eta };
    r.validate()?;
    Ok(r)
}

fn check_eta(eta: f64) -> Result<()> {
    if eta.is_finite() && eta > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("Yosida parameter eta = {eta} must be positive")))
    }
}

/// Root of `(t - x) / eta + weight * f'(t)` between `0` and `x`, located by
/// bisection on the right derivative so kinks are hit exactly.
fn scalar_prox(f: &dyn ScalarConvex, weight: f64, x: f64, eta: f64) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    if let Some(t) = closed_scalar_prox(f, weight, x, eta) {
        return t;
    }
    let h = |t: f64| (t - x) / eta + weight * one_sided_derivatives(f, t).1;
    let (a, b) = if x > 0.0 { (0.0, x) } else { (x, 0.0) };
    if h(a) >= 0.0 {
        return a;
    }
    let mut lo = a;
    let mut hi = b;
    for _ in 0..200 {
        let m = 0.5 * (lo + hi);
        if m <= lo || m >= hi {
            break;
        }
        if h(m) >= 0.0 {
            hi = m;
        } else {
            lo = m;
        }
    }
    hi
}

/// Exact prox for piecewise quadratic densities, recognised through their
/// closed-form derivatives.
fn closed_scalar_prox(f: &dyn ScalarConvex, weight: f64, x: f64, eta: f64) -> Option<f64> {
    let kinks = f.breakpoints();
    let slope_at = |t: f64| f.closed_derivatives(t).map(|d| d.1);
    // Each smooth piece is `c t` on the side of x; try every piece.
    let sign = x.signum();
    let mut cuts: Vec<f64> = kinks.iter().map(|b| b.abs()).filter(|b| *b > 0.0).collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let mut lo = 0.0;
    for k in 0..=cuts.len() {
        let hi = cuts.get(k).copied().unwrap_or(f64::INFINITY);
        let probe = if hi.is_finite() { 0.5 * (lo + hi) } else { lo + 1.0 };
        let c = slope_at(sign * probe)? * sign / probe;
        // Linear derivative check: the density must be `c t^2 / 2 + const` here.
        let probe2 = if hi.is_finite() { lo + 0.25 * (hi - lo) } else { lo + 2.0 };
        let c2 = slope_at(sign * probe2)? * sign / probe2;
        if (c - c2).abs() > 1e-12 * c.abs().max(1.0) {
            return None;
        }
        let t = x.abs() / (1.0 + eta * weight * c);
        if t >= lo && t <= hi {
            return Some(sign * t);
        }
        if hi.is_finite() {
            // Stuck on the kink when the left piece overshoots and the right
            // piece undershoots it.
            let c_next = {
                let p = if let Some(h2) = cuts.get(k + 1) { 0.5 * (hi + h2) } else { hi + 1.0 };
                slope_at(sign * p)? * sign / p
            };
            let t_next = x.abs() / (1.0 + eta * weight * c_next);
            if t > hi && t_next < hi {
                return Some(sign * hi);
            }
        }
        lo = hi;
    }
    None
}

/// Proximal point `argmin_w |w - v|^2 / (2 eta) + R(w)`.
pub fn prox(pot: &DissipationPotential, v: &[f64], eta: f64) -> Result<Vec<f64>> {
    check_eta(eta)?;
    check_dim(pot.dim(), v.len())?;
    Ok(match pot {
        DissipationPotential::Quadratic { scale, .. } => v.iter().map(|x| x / (1.0 + eta * scale)).collect(),
        DissipationPotential::SeparableIntegral { weight, density, .. } => {
            v.iter().map(|x| scalar_prox(density, *weight, *x, eta)).collect()
        }
        DissipationPotential::PiecewiseScalar { density } => vec![scalar_prox(density, 1.0, v[0], eta)],
        DissipationPotential::PPower { exponent, scale, .. } => {
            let radial = ScalarDensity::Power { exponent: *exponent, scale: *scale };
            radial_prox(&radial, v, eta)
        }
        DissipationPotential::MetricLike { psi, .. } => radial_prox(psi, v, eta),
        _ if v.len() == 1 => {
            let x = v[0];
            if x == 0.0 {
                vec![0.0]
            } else {
                let upper = |t: f64| match pot.subdifferential(&[t]) {
                    crate::sets::SubdifferentialSet::Box { upper, .. } => upper[0],
                    s => s.min_norm_element()[0],
                };
                let (a, b) = if x > 0.0 { (0.0, x) } else { (x, 0.0) };
                vec![bisect_root(|t| (t - x) / eta + upper(t), a, b)]
            }
        }
        _ => {
            let obj = FnObjective::new(v.len(), |w: &[f64]| {
                let d: f64 = w.iter().zip(v).map(|(a, b)| (a - b).powi(2)).sum();
                d / (2.0 * eta) + pot.value(w)
            });
            let radius = norm(v) * 1.01 + 1e-12;
            let window = Window::cube(&vec![0.0; v.len()], radius)?;
            local_descent(&obj, &window, v, &SolveConfig::default()).0
        }
    })
}

fn radial_prox(psi: &ScalarDensity, v: &[f64], eta: f64) -> Vec<f64> {
    let n = norm(v);
    if n == 0.0 {
        return vec![0.0; v.len()];
    }
    let t = scalar_prox(psi, 1.0, n, eta);
    v.iter().map(|x| x * t / n).collect()
}

pub fn yosida_value_gradient(pot: &DissipationPotential, v: &[f64], eta: f64) -> Result<YosidaEval> {
    let w = prox(pot, v, eta)?;
    let d: Vec<f64> = v.iter().zip(&w).map(|(a, b)| a - b).collect();
    Ok(YosidaEval {
        value: dot(&d, &d) / (2.0 * eta) + pot.value(&w),
        gradient: d.iter().map(|x| x / eta).collect(),
        prox: w,
    })
}

/// One row of the conjugate identity check.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConjugateCheck {
    pub xi: Vec<f64>,
    /// `(R_eta)*(xi)` by direct numerical maximization.
    pub lhs: f64,
    /// `R*(xi) + eta |xi|^2 / 2`.
    pub rhs: f64,
}

impl ConjugateCheck {
    pub fn residual(&self) -> f64 {
        (self.lhs - self.rhs).abs()
    }
}

/// Compares the numerically computed conjugate of `R_eta` with
/// `R* + eta |.|^2 / 2` on the given points.
pub fn yosida_conjugate_check(
    pot: &DissipationPotential,
    eta: f64,
    xi_grid: &[Vec<f64>],
) -> Result<Vec<ConjugateCheck>> {
    check_eta(eta)?;
    let wrapped = yosida(pot.clone(), eta)?;
    xi_grid
        .iter()
        .map(|xi| {
            check_dim(pot.dim(), xi.len())?;
            let lhs = if xi.len() == 1 {
                numeric_conjugate_1d(|r| wrapped.value(&[r]), xi[0])?
            } else {
                wrapped.numeric_conjugate(xi)
            };
            let rhs = pot.conjugate(xi) + 0.5 * eta * dot(xi, xi);
            Ok(ConjugateCheck { xi: xi.clone(), lhs, rhs })
        })
        .collect()
}

/// Bound `C_S = C + S + sqrt(2 S)` on `|v|` over `{R_eta(v) <= S}`, valid for
/// every `eta` in `(0, 1]`; `C` is the superlinearity constant of `R`.
pub fn equi_coercivity_bound(pot: &DissipationPotential, level: f64) -> Result<f64> {
    if !(level >= 0.0) {
        return Err(Error::InvalidParameter(format!("sublevel {level} must be nonnegative")));
    }
    Ok(pot.superlinearity_constant() + level + (2.0 * level).sqrt())
}
