//! Minimizing movement scheme on a uniform partition, its variational
//! interpolant and discrete energy-dissipation balance reports.

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::error::{Error, Result};
use crate::report::GapEntry;
use crate::step::StepResult;
use crate::system::GradientSystem;

/// Samples per cell of the interpolant.
pub const DEFAULT_CELL_SAMPLES: usize = 32;
/// The geometric cell samples start at `tau * 2^-CELL_OCTAVES`.
const CELL_OCTAVES: f64 = 10.0;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MmsCell {
    pub index: usize,
    pub step: StepResult,
    /// `D(u_{k-1}, u_k) / tau`
    pub speed: f64,
    /// De Giorgi gap of the cell at `sigma = tau`.
    pub gap: GapEntry,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MmsTrajectory {
    pub tau: f64,
    pub horizon: f64,
    pub nodes: Vec<Vec<f64>>,
    pub energies: Vec<f64>,
    pub cells: Vec<MmsCell>,
}

impl MmsTrajectory {
    fn empty(tau: f64, horizon: f64, u0: &[f64], e0: f64) -> Self {
        Self { tau, horizon, nodes: vec![u0.to_vec()], energies: vec![e0], cells: Vec::new() }
    }
}

/// A failed cell, with every node computed before it.
#[derive(Debug, Error)]
#[error("minimizing movement failed in cell {cell}: {source}")]
pub struct MmsFailure {
    pub cell: usize,
    pub partial: Box<MmsTrajectory>,
    #[source]
    pub source: Error,
}

fn cell_count(tau: f64, horizon: f64) -> Result<usize> {
    if !(tau > 0.0 && tau.is_finite() && horizon >= tau && horizon.is_finite()) {
        return Err(Error::InvalidParameter(format!("need 0 < tau <= horizon, got tau = {tau}, horizon = {horizon}")));
    }
    let k = (horizon / tau).round();
    if (k * tau - horizon).abs() > 1e-9 * horizon {
        return Err(Error::InvalidParameter(format!("horizon {horizon} is not a multiple of tau = {tau}")));
    }
    Ok(k as usize)
}

/// Runs the scheme `u_k ∈ J_tau(u_{k-1})` up to `horizon`.
pub fn run_mms(sys: &GradientSystem, u0: &[f64], tau: f64, horizon: f64) -> std::result::Result<MmsTrajectory, MmsFailure> {
    let fail = |cell, partial: &MmsTrajectory, source| MmsFailure { cell, partial: Box::new(partial.clone()), source };
    let e0 = sys.energy().value(u0);
    let mut traj = MmsTrajectory::empty(tau, horizon, u0, e0);
    let cells = cell_count(tau, horizon).map_err(|e| fail(0, &traj, e))?;
    for k in 1..=cells {
        let prev = traj.nodes[k - 1].clone();
        let outcome = sys.step(&prev, tau).and_then(|step| {
            let gap = sys.gap_report(&prev, &[tau])?.entries.remove(0);
            Ok((step, gap))
        });
        let (step, gap) = outcome.map_err(|e| fail(k, &traj, e))?;
        let next = step.representative().to_vec();
        traj.cells.push(MmsCell { index: k, speed: sys.distance(&prev, &next) / tau, step, gap });
        traj.energies.push(sys.energy().value(&next));
        traj.nodes.push(next);
    }
    Ok(traj)
}

/// Interpolant values at times `t_{k-1} + sigma`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MmsInterpolant {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    /// Largest distance between the interpolant at a cell end and the node.
    pub endpoint_mismatch: f64,
}

fn cell_samples(tau: f64, samples: usize) -> Vec<f64> {
    if samples <= 1 {
        return vec![tau];
    }
    (0..samples)
        .map(|j| {
            let e = CELL_OCTAVES * (samples - 1 - j) as f64 / (samples - 1) as f64;
            tau * 2f64.powf(-e)
        })
        .collect()
}

/// Evaluates the variational interpolant on each cell at geometric samples
/// accumulating near the left endpoint; the last sample of each cell is
/// `sigma = tau` and must reproduce the next node.
pub fn interpolant_trace(sys: &GradientSystem, traj: &MmsTrajectory, samples: usize) -> Result<MmsInterpolant> {
    let sigmas = cell_samples(traj.tau, samples);
    let mut times = vec![0.0];
    let mut states = vec![traj.nodes[0].clone()];
    let mut endpoint_mismatch: f64 = 0.0;
    for k in 1..traj.nodes.len() {
        let prev = &traj.nodes[k - 1];
        let cell: Vec<Vec<f64>> = sigmas
            .par_iter()
            .map(|&s| sys.step(prev, s).map(|r| r.representative().to_vec()))
            .collect::<Result<_>>()?;
        let t0 = (k - 1) as f64 * traj.tau;
        let end = cell.last().expect("at least one sample");
        endpoint_mismatch = endpoint_mismatch.max(sys.distance(end, &traj.nodes[k]));
        times.extend(sigmas.iter().map(|s| t0 + s));
        states.extend(cell);
    }
    let tol = sys.solve_config().arg_tol;
    if endpoint_mismatch > tol {
        return Err(Error::Trace(format!(
            "interpolant misses a node by {endpoint_mismatch:e} (tolerance {tol:e})"
        )));
    }
    Ok(MmsInterpolant { times, states, endpoint_mismatch })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RefinementRow {
    pub tau: f64,
    pub cells: usize,
    /// Sum of the cell gaps.
    pub total_residual: f64,
    pub error_bar: f64,
    pub max_cell_gap: f64,
    pub final_energy: f64,
}

fn refinement_row(traj: &MmsTrajectory) -> RefinementRow {
    RefinementRow {
        tau: traj.tau,
        cells: traj.cells.len(),
        total_residual: traj.cells.iter().map(|c| c.gap.gap).sum(),
        error_bar: traj.cells.iter().map(|c| c.gap.quad_error).sum(),
        max_cell_gap: traj.cells.iter().map(|c| c.gap.gap.abs()).fold(0.0, f64::max),
        final_energy: *traj.energies.last().expect("initial energy"),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EdbReport {
    pub cell_gaps: Vec<f64>,
    pub cell_errors: Vec<f64>,
    /// `E(u_0) - E(u_K) - sum_k (dissipation_k + slope integral_k)`
    pub total_residual: f64,
    pub total_error: f64,
    /// `tau, tau / 2, ...` with the given trajectory as the first row.
    pub refinement: Vec<RefinementRow>,
}

impl EdbReport {
    /// True when no refinement level increases the total residual by more
    /// than the two error bars.
    pub fn refinement_monotone(&self) -> bool {
        self.refinement.windows(2).all(|w| {
            w[1].total_residual.abs() <= w[0].total_residual.abs() + w[0].error_bar + w[1].error_bar
        })
    }
}

/// Cell gaps and total residual of `traj`, with a refinement table over
/// `levels` step sizes halving from `traj.tau`.
pub fn edb_report(sys: &GradientSystem, traj: &MmsTrajectory, levels: usize) -> Result<EdbReport> {
    let u0 = &traj.nodes[0];
    let mut refinement = vec![refinement_row(traj)];
    let mut tau = traj.tau;
    for _ in 1..levels {
        tau *= 0.5;
        let finer = run_mms(sys, u0, tau, traj.horizon).map_err(|f| f.source)?;
        refinement.push(refinement_row(&finer));
    }
    let e0 = traj.energies[0];
    let e_end = *traj.energies.last().expect("initial energy");
    let spent: f64 = traj.cells.iter().map(|c| c.gap.dissipation_term + c.gap.integral_term).sum();
    Ok(EdbReport {
        cell_gaps: traj.cells.iter().map(|c| c.gap.gap).collect(),
        cell_errors: traj.cells.iter().map(|c| c.gap.quad_error).collect(),
        total_residual: e0 - e_end - spent,
        total_error: traj.cells.iter().map(|c| c.gap.quad_error).sum(),
        refinement,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::banach_gs::BanachSystem;
    use crate::convex_kernel::ScalarDensity;
    use crate::metric_gs::{Distance, MetricSystem};
    use crate::models::{DissipationPotential, EnergyFunctional};

    fn quadratic() -> GradientSystem {
        let mut s = BanachSystem::new(EnergyFunctional::half_square(1), DissipationPotential::quadratic(1)).unwrap();
        s.quadrature = s.quadrature.with_uniform_nodes(128);
        GradientSystem::Banach(s)
    }

    fn positive_part() -> GradientSystem {
        let mut s = MetricSystem::new(
            EnergyFunctional::PositivePart { slope: 1.0 },
            Distance::Euclidean,
            ScalarDensity::Quadratic { scale: 1.0 },
        )
        .unwrap();
        s.quadrature = s.quadrature.with_uniform_nodes(128);
        GradientSystem::Metric(s)
    }

    #[test]
    fn backward_euler_nodes() {
        let traj = run_mms(&quadratic(), &[1.0], 0.5, 2.0).unwrap();
        for (k, u) in traj.nodes.iter().enumerate() {
            assert!((u[0] - (1.0f64 / 1.5).powi(k as i32)).abs() < 1e-8);
        }
        assert!(traj.energies.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn positive_part_nodes() {
        let traj = run_mms(&positive_part(), &[1.0], 0.25, 2.0).unwrap();
        for (k, u) in traj.nodes.iter().enumerate() {
            assert!((u[0] - (1.0 - 0.25 * k as f64).max(0.0)).abs() < 1e-8);
        }
    }

    #[test]
    fn interpolant_in_first_cell() {
        let sys = positive_part();
        let traj = run_mms(&sys, &[1.0], 0.25, 0.5).unwrap();
        let it = interpolant_trace(&sys, &traj, 8).unwrap();
        for (t, u) in it.times.iter().zip(&it.states).take(9) {
            assert!((u[0] - (1.0 - t)).abs() < 1e-8);
        }
        assert!(it.endpoint_mismatch <= 1e-7);
    }

    #[test]
    fn zero_energy_is_stationary() {
        let mut s = BanachSystem::new(EnergyFunctional::Zero { dim: 1 }, DissipationPotential::quadratic(1)).unwrap();
        s.quadrature = s.quadrature.with_uniform_nodes(32);
        let sys = GradientSystem::Banach(s);
        let traj = run_mms(&sys, &[0.4], 0.5, 1.0).unwrap();
        assert!(traj.nodes.iter().all(|u| u[0] == 0.4));
        let r = edb_report(&sys, &traj, 2).unwrap();
        assert_eq!(r.total_residual, 0.0);
    }

    #[test]
    fn horizon_must_be_a_multiple() {
        let e = run_mms(&quadratic(), &[1.0], 0.3, 1.0).unwrap_err();
        assert_eq!(e.cell, 0);
        assert!(matches!(e.source, Error::InvalidParameter(_)));
    }
}
