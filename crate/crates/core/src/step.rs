//! Result of one minimizing-movement step and the search-window heuristics
//! shared by metric and Banach steps.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::solver::{grid_oracle, Minimum, Objective, SolveConfig, SolveError, Window};

/// Minimizers `J_sigma(u0)` with the marginal value and its two parts.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StepResult {
    pub sigma: f64,
    /// Clustered minimizers in lexicographic order.
    pub minimizers: Vec<Vec<f64>>,
    /// Marginal value `phi(sigma)`.
    pub phi: f64,
    /// Energy at the representative minimizer.
    pub energy: f64,
    /// Dissipation term at the representative minimizer.
    pub dissipation: f64,
    /// Smallest and largest distance from `u0` over the minimizers.
    pub d_minus: f64,
    pub d_plus: f64,
}

impl StepResult {
    pub fn representative(&self) -> &[f64] {
        &self.minimizers[0]
    }
}

/// First radius of the doubling sequence from `1e-3` at which
/// `sigma * lower(r / sigma)` exceeds `level`.
pub(crate) fn coercive_radius(level: f64, sigma: f64, lower: impl Fn(f64) -> f64) -> Option<f64> {
    let mut r = 1e-3;
    for _ in 0..80 {
        if sigma * lower(r / sigma) > level {
            return Some(r);
        }
        r *= 2.0;
    }
    None
}

/// Box around `center` from the dissipation bound, intersected with the box
/// around the origin from the energy sublevel bound.
pub(crate) fn search_window(center: &[f64], r_diss: Option<f64>, r_energy: Option<f64>) -> Result<Window> {
    let pad = |r: f64| 1.25 * r + 1e-3;
    let wd = r_diss.map(|r| Window::cube(center, pad(r))).transpose()?;
    let we = r_energy
        .map(|r| Window::cube(&vec![0.0; center.len()], pad(r)))
        .transpose()?;
    match (wd, we) {
        (Some(a), Some(b)) => Ok(a.intersect(&b).unwrap_or(a)),
        (Some(a), None) => Ok(a),
        (None, Some(b)) => Ok(b),
        (None, None) => Err(Error::NonCoercive),
    }
}

/// Coarse spacing for the grid oracle so that the total grid stays modest.
pub fn oracle_step(window: &Window, cfg: &SolveConfig) -> f64 {
    let widest = (0..window.dim())
        .map(|i| window.upper()[i] - window.lower()[i])
        .fold(0.0, f64::max);
    match window.dim() {
        1 => (100.0 * cfg.oracle_step).max(widest / 200_000.0),
        2 => widest / 600.0,
        _ => widest / 120.0,
    }
}

/// Re-solves with the grid oracle and fails if the optimal values disagree.
pub(crate) fn cross_check(obj: &dyn Objective, window: &Window, found: &Minimum, cfg: &SolveConfig) -> Result<()> {
    if obj.dim() > 3 {
        return Ok(());
    }
    let oracle = grid_oracle(obj, window, oracle_step(window, cfg), cfg)?;
    if (oracle.value - found.value).abs() > 1e-6 * found.value.abs().max(1.0) {
        return Err(SolveError::OracleMismatch {
            solver: found.minimizers.clone(),
            solver_value: found.value,
            oracle: oracle.minimizers,
            oracle_value: oracle.value,
        }
        .into());
    }
    Ok(())
}
