use serde::Serialize;

use super::slopes::{conditioned_slope, r_slope};
use super::step::{solve_step, BanachSystem};
use super::trace::{banach_gap_report, interpolant_trace, InterpolantTrace, Selection, TracePoint};
use crate::error::{Error, Result};
use crate::linalg::{dist, norm};
use crate::moreau::yosida;
use crate::quadrature::adaptive_trace;
use crate::report::GapReport;

/// Results for one regularization parameter.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EtaRun {
    pub eta: f64,
    pub report: GapReport,
    /// Largest `E(u) + |u|` over the trace nodes.
    pub bound: f64,
}

/// Limit candidate at one requested step size.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Accumulation {
    pub sigma: f64,
    /// Minimizer of the unregularized step closest to the last iterate.
    pub limit: Vec<f64>,
    /// Minimizer for the smallest `eta`.
    pub last_iterate: Vec<f64>,
    pub distance: f64,
    /// Conditioned slope of the unregularized system at `limit`.
    pub conditioned_slope: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PipelineReport {
    pub runs: Vec<EtaRun>,
    /// A single bound on `E(u) + |u|` valid for every `eta <= 1`.
    pub a_priori_bound: f64,
    pub accumulation: Vec<Accumulation>,
    /// De Giorgi gap with the unregularized conditioned slope, evaluated
    /// along the limit candidates.
    pub limit: GapReport,
}

impl PipelineReport {
    pub fn worst_run_gap(&self) -> f64 {
        self.runs.iter().map(|r| r.report.max_abs_gap()).fold(0.0, f64::max)
    }

    pub fn min_limit_gap(&self) -> f64 {
        self.limit.entries.iter().map(|e| e.gap).fold(f64::INFINITY, f64::min)
    }
}

/// `E(u0) + |u0| + s C + dE + sqrt(2 s dE)` with `s` the largest step size,
/// `dE = E(u0) - inf E` and `C` the superlinearity constant of `R`: the
/// bound on `E(u_s) + |u_s|` that follows from `s R_eta(v) <= dE` for every
/// `eta` in `(0, 1]`.
fn a_priori_bound(sys: &BanachSystem, u0: &[f64], sigma_max: f64) -> f64 {
    let e0 = sys.energy.value(u0);
    let de = e0 - sys.energy.lower_bound();
    let c = sys.potential.superlinearity_constant();
    e0 + norm(u0) + sigma_max * c + de + (2.0 * sigma_max * de).sqrt()
}

fn nearest(candidates: &[Vec<f64>], target: &[f64]) -> Vec<f64> {
    candidates
        .iter()
        .min_by(|a, b| dist(a, target).total_cmp(&dist(b, target)))
        .expect("nonempty minimizer set")
        .clone()
}

fn trace_bound(sys: &BanachSystem, trace: &InterpolantTrace) -> f64 {
    trace
        .points
        .iter()
        .flat_map(|p| p.step.minimizers.iter())
        .map(|u| sys.energy.value(u) + norm(u))
        .fold(0.0, f64::max)
}

/// Regularizes `R` by Moreau-Yosida for each `eta`, checks the De Giorgi
/// identity for each regularized system, and evaluates the estimate for the
/// original potential along the limit of the regularized interpolants.
pub fn yosida_pipeline(sys: &BanachSystem, u0: &[f64], sigmas: &[f64], etas: &[f64]) -> Result<PipelineReport> {
    if etas.is_empty() || etas.iter().any(|e| !(*e > 0.0 && *e <= 1.0)) {
        return Err(Error::InvalidParameter("Yosida schedule must be nonempty within (0, 1]".into()));
    }
    let sigma_max = sigmas.iter().copied().fold(0.0, f64::max);
    sys.check_start(u0, sigma_max)?;
    let bound = a_priori_bound(sys, u0, sigma_max);

    let mut runs = Vec::with_capacity(etas.len());
    for &eta in etas {
        let reg = sys.with_potential(yosida(sys.potential.clone(), eta)?)?;
        let trace = interpolant_trace(&reg, u0, sigma_max, sigmas, Selection::Optimal)?;
        let run_bound = trace_bound(&reg, &trace);
        if run_bound > bound {
            return Err(Error::Trace(format!(
                "a priori bound {bound} exceeded by {run_bound} at eta = {eta}"
            )));
        }
        runs.push(EtaRun { eta, report: banach_gap_report(&reg, &trace, sigmas)?, bound: run_bound });
    }

    let eta_min = etas.iter().copied().fold(f64::INFINITY, f64::min);
    let finest = sys.with_potential(yosida(sys.potential.clone(), eta_min)?)?;
    let limit_point = |rho: f64| -> Result<(TracePoint, Vec<f64>)> {
        let iterate = solve_step(&finest, u0, rho, false)?.representative().to_vec();
        let mut step = solve_step(sys, u0, rho, false)?;
        let u = nearest(&step.minimizers, &iterate);
        step.minimizers.retain(|m| *m != u);
        step.minimizers.insert(0, u.clone());
        step.energy = sys.energy.value(&u);
        step.dissipation = sys.dissipation(u0, &u, rho);
        let cs = conditioned_slope(sys, u0, rho, &u)?;
        let point = TracePoint {
            r_slope: r_slope(sys, &u)?,
            step,
            xi: cs.xi,
            conditioned_slope: cs.value,
            selected_slope: cs.value,
        };
        Ok((point, iterate))
    };
    let t = adaptive_trace(sigma_max, sigmas, &sys.quadrature, limit_point, |p: &(TracePoint, Vec<f64>)| {
        vec![p.0.selected_slope]
    })?;
    let e0 = sys.energy.value(u0);
    let truncation_bound = (t.states[0].0.step.phi - e0).abs();
    let (points, iterates): (Vec<TracePoint>, Vec<Vec<f64>>) = t.states.into_iter().unzip();
    let mut integrals = t.integrals;
    let mut errors = t.errors;
    let limit_trace = InterpolantTrace {
        initial: u0.to_vec(),
        initial_energy: e0,
        points,
        integral: integrals.swap_remove(0),
        errors: errors.swap_remove(0),
        truncation_bound,
    };
    let accumulation = sigmas
        .iter()
        .map(|&s| {
            let i = limit_trace.index_of(s)?;
            let p = &limit_trace.points[i];
            Ok(Accumulation {
                sigma: s,
                limit: p.u().to_vec(),
                last_iterate: iterates[i].clone(),
                distance: dist(p.u(), &iterates[i]),
                conditioned_slope: p.conditioned_slope,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let limit = banach_gap_report(sys, &limit_trace, sigmas)?;
    Ok(PipelineReport { runs, a_priori_bound: bound, accumulation, limit })
}
