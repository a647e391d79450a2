//! Dispatch over the two kinds of gradient system.

use serde::{Deserialize, Serialize};

use crate::banach_gs::{banach_step, de_giorgi_banach_gap, BanachSystem, Selection};
use crate::error::Result;
use crate::linalg::dist;
use crate::metric_gs::{de_giorgi_metric_gap, metric_step, MetricSystem};
use crate::models::EnergyFunctional;
use crate::quadrature::QuadratureConfig;
use crate::report::GapReport;
use crate::solver::{global_minimize, grid_oracle, Objective, SolveConfig};
use crate::step::oracle_step;
use crate::step::StepResult;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum GradientSystem {
    Metric(MetricSystem),
    Banach(BanachSystem),
}

impl GradientSystem {
    pub fn validate(&self) -> Result<()> {
        match self {
            Self::Metric(s) => s.validate(),
            Self::Banach(s) => s.validate(),
        }
    }

    pub fn dim(&self) -> usize {
        self.energy().dim()
    }

    pub fn energy(&self) -> &EnergyFunctional {
        match self {
            Self::Metric(s) => &s.energy,
            Self::Banach(s) => &s.energy,
        }
    }

    pub fn solve_config(&self) -> &SolveConfig {
        match self {
            Self::Metric(s) => &s.solve,
            Self::Banach(s) => &s.solve,
        }
    }

    pub fn solve_config_mut(&mut self) -> &mut SolveConfig {
        match self {
            Self::Metric(s) => &mut s.solve,
            Self::Banach(s) => &mut s.solve,
        }
    }

    pub fn quadrature_mut(&mut self) -> &mut QuadratureConfig {
        match self {
            Self::Metric(s) => &mut s.quadrature,
            Self::Banach(s) => &mut s.quadrature,
        }
    }

    pub fn set_oracle_check(&mut self, on: bool) {
        match self {
            Self::Metric(s) => s.oracle_check = on,
            Self::Banach(s) => s.oracle_check = on,
        }
    }

    pub fn set_gap_tol(&mut self, tol: f64) {
        match self {
            Self::Metric(s) => s.gap_tol = tol,
            Self::Banach(s) => s.gap_tol = tol,
        }
    }

    pub fn step(&self, u0: &[f64], sigma: f64) -> Result<StepResult> {
        match self {
            Self::Metric(s) => metric_step(s, u0, sigma),
            Self::Banach(s) => banach_step(s, u0, sigma),
        }
    }

    /// De Giorgi gap at each of `sigmas`.
    pub fn gap_report(&self, u0: &[f64], sigmas: &[f64]) -> Result<GapReport> {
        match self {
            Self::Metric(s) => de_giorgi_metric_gap(s, u0, sigmas),
            Self::Banach(s) => de_giorgi_banach_gap(s, u0, sigmas, Selection::Optimal),
        }
    }

    /// Solves one step with both the multi-start solver and the grid oracle.
    pub fn oracle_comparison(&self, u0: &[f64], sigma: f64) -> Result<OracleComparison> {
        let cfg = self.solve_config();
        let (obj, window): (Box<dyn Objective + '_>, _) = match self {
            Self::Metric(s) => (Box::new(s.objective(u0, sigma)), s.window(u0, sigma)?),
            Self::Banach(s) => (Box::new(s.objective(u0, sigma)), s.window(u0, sigma)?),
        };
        let solver = global_minimize(obj.as_ref(), &window, Some(u0), cfg)?;
        let grid_step = oracle_step(&window, cfg);
        let oracle = grid_oracle(obj.as_ref(), &window, grid_step, cfg)?;
        Ok(OracleComparison {
            sigma,
            solver_value: solver.value,
            oracle_value: oracle.value,
            solver_minimizers: solver.minimizers,
            oracle_minimizers: oracle.minimizers,
            grid_step,
        })
    }

    /// Distance between consecutive states: `D` for metric systems and the
    /// norm for Banach systems.
    pub fn distance(&self, u: &[f64], w: &[f64]) -> f64 {
        match self {
            Self::Metric(s) => s.distance.eval(u, w),
            Self::Banach(_) => dist(u, w),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OracleComparison {
    pub sigma: f64,
    pub solver_value: f64,
    pub oracle_value: f64,
    pub solver_minimizers: Vec<Vec<f64>>,
    pub oracle_minimizers: Vec<Vec<f64>>,
    /// Coarse grid spacing before the oracle's local refinements.
    pub grid_step: f64,
}

impl OracleComparison {
    pub fn value_gap(&self) -> f64 {
        (self.solver_value - self.oracle_value).abs()
    }

    /// Largest distance from a solver minimizer to the nearest oracle one.
    pub fn argument_gap(&self) -> f64 {
        self.solver_minimizers
            .iter()
            .map(|u| {
                self.oracle_minimizers
                    .iter()
                    .map(|w| dist(u, w))
                    .fold(f64::INFINITY, f64::min)
            })
            .fold(0.0, f64::max)
    }
}
