use rayon::prelude::*;
use serde::Serialize;

use super::slopes::{conditioned_slope, r_slope};
use super::step::{solve_step, BanachSystem};
use crate::error::{Error, Result};
use crate::linalg::neg;
use crate::quadrature::adaptive_trace;
use crate::report::{classify, GapEntry, GapReport, SystemKind};
use crate::step::StepResult;

/// How the subgradient integrated along the trace is chosen.
#[derive(Clone, Copy)]
pub enum Selection<'a> {
    /// The minimizer of `R*(-xi)` over the conditioned subdifferential.
    Optimal,
    /// A caller-supplied `xi(sigma, u)`; `None` falls back to the optimal one.
    Custom(&'a (dyn Fn(f64, &[f64]) -> Option<Vec<f64>> + Sync)),
}

/// One node of the variational interpolant.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TracePoint {
    pub step: StepResult,
    /// The selected subgradient.
    pub xi: Vec<f64>,
    /// Conditioned slope at the representative minimizer.
    pub conditioned_slope: f64,
    /// `R*(-xi)` for the selected subgradient; the integrand.
    pub selected_slope: f64,
    pub r_slope: f64,
}

impl TracePoint {
    pub fn sigma(&self) -> f64 {
        self.step.sigma
    }

    pub fn u(&self) -> &[f64] {
        self.step.representative()
    }
}

/// Interpolant nodes in increasing `sigma` with the running integral of the
/// selected slope. At `sigma = 0` the interpolant is `initial` with all
/// dissipation terms zero.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InterpolantTrace {
    pub initial: Vec<f64>,
    pub initial_energy: f64,
    pub points: Vec<TracePoint>,
    pub integral: Vec<f64>,
    pub errors: Vec<f64>,
    /// Bound on the error of the integral over `(0, rho_min]`.
    pub truncation_bound: f64,
}

impl InterpolantTrace {
    pub fn index_of(&self, sigma: f64) -> Result<usize> {
        self.points
            .iter()
            .position(|p| p.sigma() == sigma)
            .ok_or_else(|| Error::Trace(format!("sigma = {sigma} is not a trace node")))
    }
}

pub(crate) fn trace_point(sys: &BanachSystem, u0: &[f64], rho: f64, selection: Selection) -> Result<TracePoint> {
    let step = solve_step(sys, u0, rho, false)?;
    let u = step.representative().to_vec();
    let cs = conditioned_slope(sys, u0, rho, &u)?;
    let (xi, selected_slope) = match selection {
        Selection::Custom(f) => match f(rho, &u) {
            Some(xi) => {
                let s = sys.potential.conjugate(&neg(&xi));
                (xi, s)
            }
            None => (cs.xi, cs.value),
        },
        Selection::Optimal => (cs.xi, cs.value),
    };
    Ok(TracePoint { r_slope: r_slope(sys, &u)?, step, xi, conditioned_slope: cs.value, selected_slope })
}

/// Adaptive interpolant on `(0, sigma_max]`; every entry of `required`
/// becomes a node.
pub fn interpolant_trace(
    sys: &BanachSystem,
    u0: &[f64],
    sigma_max: f64,
    required: &[f64],
    selection: Selection,
) -> Result<InterpolantTrace> {
    sys.check_start(u0, sigma_max)?;
    let t = adaptive_trace(
        sigma_max,
        required,
        &sys.quadrature,
        |rho| trace_point(sys, u0, rho, selection),
        |p: &TracePoint| vec![p.selected_slope],
    )?;
    let e0 = sys.energy.value(u0);
    let truncation_bound = (t.states[0].step.phi - e0).abs();
    let mut integrals = t.integrals;
    let mut errors = t.errors;
    Ok(InterpolantTrace {
        initial: u0.to_vec(),
        initial_energy: e0,
        points: t.states,
        integral: integrals.swap_remove(0),
        errors: errors.swap_remove(0),
        truncation_bound,
    })
}

/// Interpolant at the given increasing `sigmas` with a trapezoidal running
/// integral (a rectangle on the first interval).
pub fn sampled_trace(sys: &BanachSystem, u0: &[f64], sigmas: &[f64], selection: Selection) -> Result<InterpolantTrace> {
    if sigmas.is_empty() || sigmas.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter("trace samples must be nonempty and increasing".into()));
    }
    sys.check_start(u0, sigmas[0])?;
    let points: Vec<TracePoint> = sigmas
        .par_iter()
        .map(|&s| trace_point(sys, u0, s, selection))
        .collect::<Result<_>>()?;
    let mut integral = Vec::with_capacity(points.len());
    let mut acc = points[0].selected_slope * points[0].sigma();
    integral.push(acc);
    for w in points.windows(2) {
        acc += 0.5 * (w[1].sigma() - w[0].sigma()) * (w[0].selected_slope + w[1].selected_slope);
        integral.push(acc);
    }
    let e0 = sys.energy.value(u0);
    Ok(InterpolantTrace {
        initial: u0.to_vec(),
        initial_energy: e0,
        truncation_bound: (points[0].step.phi - e0).abs(),
        errors: vec![0.0; points.len()],
        points,
        integral,
    })
}

/// De Giorgi gap rows at the requested `sigmas`, which must be trace nodes.
pub fn banach_gap_report(sys: &BanachSystem, trace: &InterpolantTrace, sigmas: &[f64]) -> Result<GapReport> {
    let entries = sigmas
        .iter()
        .map(|&s| {
            let i = trace.index_of(s)?;
            let p = &trace.points[i];
            let integral = trace.integral[i];
            let gap = trace.initial_energy - p.step.energy - p.step.dissipation - integral;
            let quad_error = trace.errors[i] + trace.truncation_bound;
            Ok(GapEntry {
                sigma: s,
                u: p.u().to_vec(),
                phi: p.step.phi,
                energy: p.step.energy,
                dissipation_term: p.step.dissipation,
                r_slope: p.r_slope,
                conditioned_slope: p.conditioned_slope,
                integral_term: integral,
                gap,
                classification: classify(gap, quad_error, sys.gap_tol),
                quad_error,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(GapReport {
        kind: SystemKind::Banach,
        initial: trace.initial.clone(),
        initial_energy: trace.initial_energy,
        gap_tol: sys.gap_tol,
        truncation_bound: trace.truncation_bound,
        trace_nodes: trace.points.len(),
        entries,
    })
}

/// `E(u0) - E(u_sigma) - sigma R((u_sigma - u0) / sigma) - int_0^sigma R*(-xi_rho)`
/// at each requested step size.
pub fn de_giorgi_banach_gap(sys: &BanachSystem, u0: &[f64], sigmas: &[f64], selection: Selection) -> Result<GapReport> {
    let sigma_max = sigmas.iter().copied().fold(0.0, f64::max);
    let trace = interpolant_trace(sys, u0, sigma_max, sigmas, selection)?;
    banach_gap_report(sys, &trace, sigmas)
}
