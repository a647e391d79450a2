use serde::{Deserialize, Serialize};

use super::slopes::conditioned_slope;
use crate::error::{check_dim, Error, Result};
use crate::linalg::{dist, velocity};
use crate::models::{DissipationPotential, EnergyFunctional};
use crate::quadrature::QuadratureConfig;
use crate::solver::{global_minimize, Objective, SolveConfig, Window};
use crate::step::{coercive_radius, cross_check, search_window, StepResult};
use crate::tolerances::{FEASIBILITY_TOL, GAP_TOL};

/// `(X, E, R)` with `X = R^n` and the Euclidean norm.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BanachSystem {
    pub energy: EnergyFunctional,
    pub potential: DissipationPotential,
    pub solve: SolveConfig,
    pub quadrature: QuadratureConfig,
    /// Re-solve each step with the grid oracle and fail on disagreement.
    pub oracle_check: bool,
    /// Relative slack when intersecting subdifferential descriptors.
    pub feasibility_tol: f64,
    pub gap_tol: f64,
}

impl BanachSystem {
    pub fn new(energy: EnergyFunctional, potential: DissipationPotential) -> Result<Self> {
        let sys = Self {
            energy,
            potential,
            solve: SolveConfig::default(),
            quadrature: QuadratureConfig::default(),
            oracle_check: false,
            feasibility_tol: FEASIBILITY_TOL,
            gap_tol: GAP_TOL,
        };
        sys.validate()?;
        Ok(sys)
    }

    pub fn validate(&self) -> Result<()> {
        self.energy.validate()?;
        self.potential.validate()?;
        self.solve.validate()?;
        check_dim(self.energy.dim(), self.potential.dim())?;
        if !self.energy.lower_bound().is_finite() {
            return Err(Error::InvalidParameter("energy must be bounded below".into()));
        }
        if !(self.feasibility_tol > 0.0 && self.gap_tol > 0.0) {
            return Err(Error::InvalidParameter("tolerances must be positive".into()));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.energy.dim()
    }

    /// Same system with another dissipation potential.
    pub fn with_potential(&self, potential: DissipationPotential) -> Result<Self> {
        let sys = Self { potential, ..self.clone() };
        sys.validate()?;
        Ok(sys)
    }

    /// `sigma R((u - u0) / sigma)`
    pub fn dissipation(&self, u0: &[f64], u: &[f64], sigma: f64) -> f64 {
        sigma * self.potential.value(&velocity(u, u0, sigma))
    }

    /// `Phi_sigma(u0; u)`
    pub fn step_value(&self, u0: &[f64], u: &[f64], sigma: f64) -> f64 {
        self.dissipation(u0, u, sigma) + self.energy.value(u)
    }

    /// The step objective for `u0` and `sigma`.
    pub fn objective<'a>(&'a self, u0: &'a [f64], sigma: f64) -> BanachObjective<'a> {
        BanachObjective { sys: self, u0, sigma }
    }

    /// Box containing every minimizer of the step objective.
    pub fn window(&self, u0: &[f64], sigma: f64) -> Result<Window> {
        self.check_start(u0, sigma)?;
        step_window(self, u0, sigma)
    }

    pub(crate) fn check_start(&self, u0: &[f64], sigma: f64) -> Result<()> {
        check_dim(self.dim(), u0.len())?;
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::InvalidParameter(format!("step size {sigma} must be positive")));
        }
        if !self.energy.value(u0).is_finite() {
            return Err(Error::OutsideDomain(u0.to_vec()));
        }
        Ok(())
    }
}

/// `u -> sigma R((u - u0) / sigma) + E(u)`
pub struct BanachObjective<'a> {
    sys: &'a BanachSystem,
    u0: &'a [f64],
    sigma: f64,
}

impl Objective for BanachObjective<'_> {
    fn dim(&self) -> usize {
        self.u0.len()
    }

    fn value(&self, u: &[f64]) -> f64 {
        self.sys.step_value(self.u0, u, self.sigma)
    }

    fn gradient(&self, u: &[f64]) -> Option<Vec<f64>> {
        let mut g = self.sys.energy.gradient(u)?;
        let dr = self.sys.potential.gradient(&velocity(u, self.u0, self.sigma))?;
        for (a, b) in g.iter_mut().zip(dr) {
            *a += b;
        }
        Some(g)
    }

    fn breakpoints(&self, coord: usize) -> Vec<f64> {
        let mut b = self.sys.energy.breakpoints(coord);
        b.extend(
            self.sys
                .potential
                .breakpoints(coord)
                .into_iter()
                .map(|k| self.u0[coord] + self.sigma * k),
        );
        b
    }

    fn certified_convex(&self) -> bool {
        self.sys.energy.is_convex()
    }
}

fn step_window(sys: &BanachSystem, u0: &[f64], sigma: f64) -> Result<Window> {
    let e0 = sys.energy.value(u0);
    let level = e0 - sys.energy.lower_bound();
    let r_diss = coercive_radius(level, sigma, |r| sys.potential.sphere_lower_bound(r));
    search_window(u0, r_diss, sys.energy.sublevel_radius(e0))
}

/// Global minimizers of the step objective, each certified by a
/// subgradient in the conditioned subdifferential.
pub fn banach_step(sys: &BanachSystem, u0: &[f64], sigma: f64) -> Result<StepResult> {
    let step = solve_step(sys, u0, sigma, sys.oracle_check)?;
    for u in &step.minimizers {
        conditioned_slope(sys, u0, sigma, u)?;
    }
    Ok(step)
}

pub(crate) fn solve_step(sys: &BanachSystem, u0: &[f64], sigma: f64, oracle: bool) -> Result<StepResult> {
    sys.check_start(u0, sigma)?;
    let obj = sys.objective(u0, sigma);
    let window = sys.window(u0, sigma)?;
    let found = global_minimize(&obj, &window, Some(u0), &sys.solve)?;
    if oracle {
        cross_check(&obj, &window, &found, &sys.solve)?;
    }
    let dists: Vec<f64> = found.minimizers.iter().map(|u| dist(u0, u)).collect();
    let rep = found.representative();
    Ok(StepResult {
        sigma,
        phi: found.value,
        energy: sys.energy.value(rep),
        dissipation: sys.dissipation(u0, rep, sigma),
        d_minus: dists.iter().copied().fold(f64::INFINITY, f64::min),
        d_plus: dists.iter().copied().fold(0.0, f64::max),
        minimizers: found.minimizers,
    })
}
