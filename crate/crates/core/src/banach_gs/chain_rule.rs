use serde::Serialize;

use super::step::{solve_step, BanachSystem};
use super::trace::InterpolantTrace;
use crate::error::{Error, Result};
use crate::linalg::{dist, dot, median};

/// Minimum number of nodes for a meaningful piecewise analysis.
pub const MIN_CHAIN_RULE_SAMPLES: usize = 512;
/// Chain-rule residual above which a piece is flagged for refinement.
pub const CHAIN_RULE_TOL: f64 = 1e-3;
const JUMP_FACTOR: f64 = 10.0;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Jump {
    pub tau: f64,
    pub left: Vec<f64>,
    pub right: Vec<f64>,
    /// `|Phi_tau(u0; left) - Phi_tau(u0; right)|`
    pub value_mismatch: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Piece {
    pub start: f64,
    pub end: f64,
    pub samples: usize,
    /// Largest `|dE(u)/ds - <xi, du/ds>|` by central differences.
    pub chain_rule_residual: f64,
    /// `phi(end) + int_start^end R*(-xi) - phi(start)`
    pub identity_residual: f64,
    pub needs_refinement: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ChainRuleReport {
    pub threshold: f64,
    pub jumps: Vec<Jump>,
    pub pieces: Vec<Piece>,
    /// `|E(u0) - phi(sigma_max) - int_0^sigma_max R*(-xi)|` from the pieces.
    pub reconstruction_residual: f64,
}

/// Narrows a jump between two nodes by bisection on the step size.
fn locate_jump(
    sys: &BanachSystem,
    u0: &[f64],
    (mut lo, mut left): (f64, Vec<f64>),
    (mut hi, mut right): (f64, Vec<f64>),
) -> Result<Jump> {
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi || hi - lo <= 1e-13 * hi {
            break;
        }
        let u = solve_step(sys, u0, mid, false)?.representative().to_vec();
        if dist(&u, &left) <= dist(&u, &right) {
            lo = mid;
            left = u;
        } else {
            hi = mid;
            right = u;
        }
    }
    let tau = 0.5 * (lo + hi);
    let value_mismatch = (sys.step_value(u0, &left, tau) - sys.step_value(u0, &right, tau)).abs();
    Ok(Jump { tau, left, right, value_mismatch })
}

/// Splits the trace at jumps of the interpolant, checks the chain rule on
/// each piece and rebuilds the energy identity by summing the pieces.
pub fn chain_rule_validation(sys: &BanachSystem, trace: &InterpolantTrace) -> Result<ChainRuleReport> {
    let pts = &trace.points;
    if pts.len() < MIN_CHAIN_RULE_SAMPLES {
        return Err(Error::InvalidParameter(format!(
            "chain-rule validation needs at least {MIN_CHAIN_RULE_SAMPLES} nodes, got {}",
            pts.len()
        )));
    }
    let u0 = &trace.initial;
    let disp: Vec<f64> = pts.windows(2).map(|w| dist(w[0].u(), w[1].u())).collect();
    let mut nonzero: Vec<f64> = disp.iter().copied().filter(|d| *d > 0.0).collect();
    let threshold = median(&mut nonzero).map_or(f64::INFINITY, |m| JUMP_FACTOR * m);
    let floor = 100.0 * sys.solve.arg_tol;

    let mut jumps = Vec::new();
    let mut cuts = Vec::new();
    for (i, d) in disp.iter().enumerate() {
        if *d > threshold && *d > floor {
            let j = locate_jump(
                sys,
                u0,
                (pts[i].sigma(), pts[i].u().to_vec()),
                (pts[i + 1].sigma(), pts[i + 1].u().to_vec()),
            )?;
            jumps.push(j);
            cuts.push(i + 1);
        }
    }

    // Node ranges of the pieces and the marginal value at their ends.
    let mut bounds = vec![0];
    bounds.extend(cuts.iter().copied());
    bounds.push(pts.len());
    let f = |k: usize| pts[k].selected_slope;
    let mut pieces = Vec::new();
    let mut total_integral = 0.0;
    for p in 0..bounds.len() - 1 {
        let (a, b) = (bounds[p], bounds[p + 1] - 1);
        let (start, phi_start) = if p == 0 {
            (0.0, trace.initial_energy)
        } else {
            let j = &jumps[p - 1];
            (j.tau, sys.step_value(u0, &j.left, j.tau))
        };
        let (end, phi_end) = if p + 1 == bounds.len() - 1 {
            (pts[b].sigma(), pts[b].step.phi)
        } else {
            let j = &jumps[p];
            (j.tau, sys.step_value(u0, &j.left, j.tau))
        };
        let mut integral = f(a) * (pts[a].sigma() - start) + f(b) * (end - pts[b].sigma());
        for k in a..b {
            integral += 0.5 * (pts[k + 1].sigma() - pts[k].sigma()) * (f(k) + f(k + 1));
        }
        total_integral += integral;

        let mut chain = 0.0f64;
        for k in a + 1..b {
            let ds = pts[k + 1].sigma() - pts[k - 1].sigma();
            let de = (pts[k + 1].step.energy - pts[k - 1].step.energy) / ds;
            let du: Vec<f64> = pts[k + 1].u().iter().zip(pts[k - 1].u()).map(|(x, y)| (x - y) / ds).collect();
            chain = chain.max((de - dot(&pts[k].xi, &du)).abs());
        }
        pieces.push(Piece {
            start,
            end,
            samples: b + 1 - a,
            chain_rule_residual: chain,
            identity_residual: phi_end + integral - phi_start,
            needs_refinement: chain > CHAIN_RULE_TOL,
        });
    }
    let last = pts.last().expect("nonempty trace");
    let reconstruction_residual = (trace.initial_energy - last.step.phi - total_integral).abs();
    Ok(ChainRuleReport { threshold, jumps, pieces, reconstruction_residual })
}
