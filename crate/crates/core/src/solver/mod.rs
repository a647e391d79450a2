//! Deterministic global minimization on a box, with a brute-force grid oracle.
//!
//! The fast path is multistart local descent: golden-section search in one
//! dimension, projected Barzilai-Borwein gradient steps plus coordinate line
//! searches otherwise. All randomness comes from a seeded ChaCha stream and
//! parallel work is collected in start order, so results are bit-identical
//! for a given configuration regardless of thread count.

mod descent;
mod dual;
mod line;
mod oracle;

pub use descent::local_descent;
pub use dual::constrained_dual_minimize;
pub use line::{bisect_root, golden_section};
pub use oracle::grid_oracle;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{dist, lex_cmp, linspace};
use crate::tolerances::{ARG_TOL, DERIVATIVE_TOL, MERGE_RADIUS, VALUE_TOL};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolveError {
    #[error("invalid solver configuration: {0}")]
    Config(String),

    #[error("objective is not finite anywhere in the search window")]
    NoFiniteValue,

    #[error("grid oracle minimum {point:?} sits on the window boundary; enlarge the window")]
    BoundaryActive { point: Vec<f64> },

    #[error("grid oracle supports at most 3 dimensions, got {0}")]
    OracleDimension(usize),

    #[error(
        "solver and oracle disagree: solver value {solver_value} at {solver:?}, \
         oracle value {oracle_value} at {oracle:?}"
    )]
    OracleMismatch {
        solver: Vec<Vec<f64>>,
        solver_value: f64,
        oracle: Vec<Vec<f64>>,
        oracle_value: f64,
    },

    #[error("constraint set is empty")]
    EmptyConstraint,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolveConfig {
    pub value_tol: f64,
    pub arg_tol: f64,
    pub derivative_tol: f64,
    pub merge_radius: f64,
    pub starts: usize,
    pub seed: u64,
    pub max_iterations: usize,
    /// Final resolution of the grid oracle after its two refinements.
    pub oracle_step: f64,
}

impl Default for SolveConfig {
    fn default() -> Self {
        Self {
            value_tol: VALUE_TOL,
            arg_tol: ARG_TOL,
            derivative_tol: DERIVATIVE_TOL,
            merge_radius: MERGE_RADIUS,
            starts: 16,
            seed: 0x5eed_2024,
            max_iterations: 5000,
            oracle_step: 1e-6,
        }
    }
}

impl SolveConfig {
    pub fn validate(&self) -> Result<(), SolveError> {
        let positive = [
            ("value_tol", self.value_tol),
            ("arg_tol", self.arg_tol),
            ("derivative_tol", self.derivative_tol),
            ("merge_radius", self.merge_radius),
            ("oracle_step", self.oracle_step),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(SolveError::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if self.starts == 0 {
            return Err(SolveError::Config("starts must be at least 1".into()));
        }
        if self.oracle_step > 10.0 * self.arg_tol {
            return Err(SolveError::Config(format!(
                "oracle_step {} exceeds ten times arg_tol {}",
                self.oracle_step, self.arg_tol
            )));
        }
        Ok(())
    }

    fn tie(&self, best: f64) -> f64 {
        self.value_tol * best.abs().max(1.0)
    }
}

/// A function on a box, possibly nonsmooth and nonconvex.
pub trait Objective: Sync {
    fn dim(&self) -> usize;

    /// `+inf` outside the effective domain.
    fn value(&self, x: &[f64]) -> f64;

    /// Gradient where the function is differentiable.
    fn gradient(&self, _x: &[f64]) -> Option<Vec<f64>> {
        None
    }

    /// Coordinate values where the function may have a kink.
    fn breakpoints(&self, _coord: usize) -> Vec<f64> {
        Vec::new()
    }

    /// True when the function is known to be convex on the window, so that a
    /// single local descent finds the global minimum.
    fn certified_convex(&self) -> bool {
        false
    }
}

/// Closure-backed objective without derivative information.
pub struct FnObjective<F> {
    dim: usize,
    f: F,
}

impl<F: Fn(&[f64]) -> f64 + Sync> FnObjective<F> {
    pub fn new(dim: usize, f: F) -> Self {
        Self { dim, f }
    }
}

impl<F: Fn(&[f64]) -> f64 + Sync> Objective for FnObjective<F> {
    fn dim(&self) -> usize {
        self.dim
    }
    fn value(&self, x: &[f64]) -> f64 {
        (self.f)(x)
    }
}

pub(crate) fn eval(obj: &dyn Objective, x: &[f64]) -> f64 {
    let v = obj.value(x);
    if v.is_nan() {
        f64::INFINITY
    } else {
        v
    }
}

/// Axis-aligned search box.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Window {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl Window {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self, SolveError> {
        if lower.len() != upper.len() || lower.is_empty() {
            return Err(SolveError::Config("window bounds must have equal positive length".into()));
        }
        for (lo, hi) in lower.iter().zip(&upper) {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(SolveError::Config(format!("bad window side [{lo}, {hi}]")));
            }
        }
        Ok(Self { lower, upper })
    }

    pub fn cube(center: &[f64], radius: f64) -> Result<Self, SolveError> {
        Self::new(
            center.iter().map(|c| c - radius).collect(),
            center.iter().map(|c| c + radius).collect(),
        )
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn center(&self) -> Vec<f64> {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(a, b)| 0.5 * (a + b))
            .collect()
    }

    pub fn clamp(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .map(|(v, (lo, hi))| v.clamp(*lo, *hi))
            .collect()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .all(|(v, (lo, hi))| *v >= *lo && *v <= *hi)
    }

    pub fn intersect(&self, other: &Window) -> Option<Window> {
        let lower: Vec<f64> = self.lower.iter().zip(&other.lower).map(|(a, b)| a.max(*b)).collect();
        let upper: Vec<f64> = self.upper.iter().zip(&other.upper).map(|(a, b)| a.min(*b)).collect();
        Window::new(lower, upper).ok()
    }

    /// True when some coordinate of `x` is within `tol` of a face.
    pub fn on_boundary(&self, x: &[f64], tol: f64) -> bool {
        x.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .any(|(v, (lo, hi))| v - lo <= tol || hi - v <= tol)
    }
}

/// Global minimum value with the clustered, lexicographically ordered set of
/// minimizers.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Minimum {
    pub value: f64,
    pub minimizers: Vec<Vec<f64>>,
}

impl Minimum {
    /// The lexicographically smallest minimizer.
    pub fn representative(&self) -> &[f64] {
        &self.minimizers[0]
    }
}

/// Global minimum of `obj` over `window`.
///
/// `start` seeds the first local descent (typically the previous state).
pub fn global_minimize(
    obj: &dyn Objective,
    window: &Window,
    start: Option<&[f64]>,
    cfg: &SolveConfig,
) -> Result<Minimum, SolveError> {
    cfg.validate()?;
    if obj.dim() != window.dim() {
        return Err(SolveError::Config(format!(
            "objective dimension {} does not match window dimension {}",
            obj.dim(),
            window.dim()
        )));
    }
    let candidates = if obj.dim() == 1 {
        candidates_1d(obj, window.lower[0], window.upper[0], cfg)?
    } else {
        candidates_nd(obj, window, start, cfg)
    };
    let candidates: Vec<(Vec<f64>, f64)> = candidates
        .into_iter()
        .map(|(x, _)| snap_to_breakpoints(obj, window, x))
        .collect();
    cluster(candidates, cfg)
}

fn candidates_1d(
    obj: &dyn Objective,
    lo: f64,
    hi: f64,
    cfg: &SolveConfig,
) -> Result<Vec<(Vec<f64>, f64)>, SolveError> {
    let f = |t: f64| eval(obj, &[t]);
    let n = if obj.certified_convex() { 64 } else { 64 * cfg.starts };
    let xs = linspace(lo, hi, n + 1);
    let vs: Vec<f64> = xs.iter().map(|&x| f(x)).collect();
    let best = (0..=n)
        .min_by(|&i, &j| vs[i].total_cmp(&vs[j]))
        .expect("non-empty scan");
    if !vs[best].is_finite() {
        return Err(SolveError::NoFiniteValue);
    }
    let mut seeds = vec![best];
    if !obj.certified_convex() {
        let mut locals: Vec<usize> = (0..=n)
            .filter(|&i| {
                vs[i].is_finite()
                    && (i == 0 || (vs[i] <= vs[i - 1] && vs[i] != vs[i - 1]))
                    && (i == n || vs[i] <= vs[i + 1])
            })
            .collect();
        locals.sort_by(|&i, &j| vs[i].total_cmp(&vs[j]).then(i.cmp(&j)));
        locals.truncate(4 * cfg.starts);
        for i in locals {
            if i != best {
                seeds.push(i);
            }
        }
    }
    let mut out = Vec::with_capacity(seeds.len() + 2);
    for i in seeds {
        let a = xs[i.saturating_sub(1)];
        let b = xs[(i + 1).min(n)];
        let (mut x, mut v) = golden_section(f, a, b);
        if vs[i] < v {
            x = xs[i];
            v = vs[i];
        }
        let (x, v) = polish_1d(obj, lo, hi, x, v);
        out.push((vec![x], v));
    }
    for b in obj.breakpoints(0) {
        if (lo..=hi).contains(&b) {
            out.push((vec![b], f(b)));
        }
    }
    Ok(out)
}

/// Refines a golden-section answer by bisecting the sign of the derivative.
fn polish_1d(obj: &dyn Objective, lo: f64, hi: f64, x: f64, v: f64) -> (f64, f64) {
    let grad = |t: f64| obj.gradient(&[t]).map(|g| g[0]);
    let delta = 1e-6 * (1.0 + x.abs());
    let a = (x - delta).max(lo);
    let b = (x + delta).min(hi);
    match (grad(a), grad(b)) {
        (Some(ga), Some(gb)) if ga < 0.0 && gb > 0.0 => {
            let root = bisect_root(|t| grad(t).unwrap_or(f64::NAN), a, b);
            let vr = eval(obj, &[root]);
            if vr <= v {
                (root, vr)
            } else {
                (x, v)
            }
        }
        _ => (x, v),
    }
}

fn candidates_nd(
    obj: &dyn Objective,
    window: &Window,
    start: Option<&[f64]>,
    cfg: &SolveConfig,
) -> Vec<(Vec<f64>, f64)> {
    let mut starts: Vec<Vec<f64>> = Vec::with_capacity(cfg.starts + 1);
    if let Some(s) = start {
        starts.push(window.clamp(s));
    }
    if !obj.certified_convex() || starts.is_empty() {
        starts.push(window.center());
    }
    if !obj.certified_convex() {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        while starts.len() < cfg.starts.max(2) {
            let p: Vec<f64> = window
                .lower
                .iter()
                .zip(&window.upper)
                .map(|(lo, hi)| rng.gen_range(*lo..=*hi))
                .collect();
            starts.push(p);
        }
    }
    starts
        .par_iter()
        .map(|s| local_descent(obj, window, s, cfg))
        .collect()
}

/// Moves each coordinate onto a nearby kink when that does not raise the value.
fn snap_to_breakpoints(obj: &dyn Objective, window: &Window, mut x: Vec<f64>) -> (Vec<f64>, f64) {
    let mut v = eval(obj, &x);
    for i in 0..x.len() {
        for b in obj.breakpoints(i) {
            if !(window.lower[i]..=window.upper[i]).contains(&b) {
                continue;
            }
            if (x[i] - b).abs() <= 1e-6 * (1.0 + b.abs()) && x[i] != b {
                let mut y = x.clone();
                y[i] = b;
                let vy = eval(obj, &y);
                if vy <= v + 1e-14 * (1.0 + v.abs()) {
                    x = y;
                    v = vy;
                }
            }
        }
    }
    (x, v)
}

/// Keeps candidates tying with the best value, merges nearby ones and orders
/// the survivors lexicographically.
pub(crate) fn cluster(
    mut candidates: Vec<(Vec<f64>, f64)>,
    cfg: &SolveConfig,
) -> Result<Minimum, SolveError> {
    candidates.retain(|(_, v)| v.is_finite());
    let best = candidates
        .iter()
        .map(|(_, v)| *v)
        .min_by(f64::total_cmp)
        .ok_or(SolveError::NoFiniteValue)?;
    let tie = cfg.tie(best);
    let mut kept: Vec<Vec<f64>> = candidates
        .into_iter()
        .filter(|(_, v)| *v <= best + tie)
        .map(|(x, _)| x)
        .collect();
    kept.sort_by(|a, b| lex_cmp(a, b));
    let radius = cfg.merge_radius.max(cfg.arg_tol);
    let mut reps: Vec<Vec<f64>> = Vec::new();
    for x in kept {
        if !reps.iter().any(|r| dist(r, &x) <= radius) {
            reps.push(x);
        }
    }
    Ok(Minimum { value: best, minimizers: reps })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_invariants() {
        let cfg = SolveConfig::default();
        assert!(cfg.validate().is_ok());
        let bad = SolveConfig { oracle_step: 1e-3, ..cfg.clone() };
        assert!(bad.validate().is_err());
        let bad = SolveConfig { starts: 0, ..cfg };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn quadratic_1d() {
        let obj = FnObjective::new(1, |x: &[f64]| (x[0] - 0.3).powi(2));
        let w = Window::new(vec![-2.0], vec![2.0]).unwrap();
        let m = global_minimize(&obj, &w, None, &SolveConfig::default()).unwrap();
        assert!((m.representative()[0] - 0.3).abs() < 1e-7);
        assert_eq!(m.minimizers.len(), 1);
    }

    #[test]
    fn double_well_ties_are_both_reported() {
        let obj = FnObjective::new(1, |x: &[f64]| (x[0] * x[0] - 1.0).powi(2));
        let w = Window::new(vec![-3.0], vec![3.0]).unwrap();
        let m = global_minimize(&obj, &w, None, &SolveConfig::default()).unwrap();
        assert_eq!(m.minimizers.len(), 2);
        assert!((m.minimizers[0][0] + 1.0).abs() < 1e-4);
        assert!((m.minimizers[1][0] - 1.0).abs() < 1e-4);
    }

    #[test]
    fn kink_minimum_is_exact_with_breakpoints() {
        struct Vee;
        impl Objective for Vee {
            fn dim(&self) -> usize {
                1
            }
            fn value(&self, x: &[f64]) -> f64 {
                (x[0] - 0.7).abs() + 0.1 * x[0] * x[0]
            }
            fn breakpoints(&self, _: usize) -> Vec<f64> {
                vec![0.7]
            }
        }
        let w = Window::new(vec![-2.0], vec![2.0]).unwrap();
        let m = global_minimize(&Vee, &w, None, &SolveConfig::default()).unwrap();
        assert_eq!(m.representative(), &[0.7]);
    }

    #[test]
    fn rosenbrock_like_2d() {
        let obj = FnObjective::new(2, |x: &[f64]| {
            (x[0] - 1.0).powi(2) + 10.0 * (x[1] - x[0] * x[0]).powi(2)
        });
        let w = Window::new(vec![-2.0, -2.0], vec![2.0, 3.0]).unwrap();
        let m = global_minimize(&obj, &w, None, &SolveConfig::default()).unwrap();
        assert!(dist(m.representative(), &[1.0, 1.0]) < 1e-4);
    }

    #[test]
    fn deterministic_repeat() {
        let obj = FnObjective::new(2, |x: &[f64]| {
            (x[0] * 3.0).sin() + (x[1] * 2.0).cos() + 0.1 * (x[0] * x[0] + x[1] * x[1])
        });
        let w = Window::new(vec![-4.0, -4.0], vec![4.0, 4.0]).unwrap();
        let cfg = SolveConfig::default();
        let a = global_minimize(&obj, &w, None, &cfg).unwrap();
        let b = global_minimize(&obj, &w, None, &cfg).unwrap();
        assert_eq!(a, b);
    }
}
