//! Generalized metric gradient systems on point sets in `R^n`.
//!
//! The step objective is `sigma psi(D(u0, u) / sigma) + E(u)`. Slopes of the
//! energy and of the distance come from the energy's subdifferential when it
//! determines them and otherwise from a sphere-sampling estimator.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::convex_kernel::{conjugate_1d, one_sided_derivatives, ScalarConvex, ScalarDensity};
use crate::error::{check_dim, Error, Result};
use crate::linalg::{dist, norm};
use crate::models::EnergyFunctional;
use crate::quadrature::{adaptive_trace, QuadratureConfig};
use crate::report::{classify, GapEntry, GapReport, SystemKind};
use crate::solver::{global_minimize, Objective, SolveConfig, Window};
use crate::step::{coercive_radius, cross_check, search_window, StepResult};
use crate::tolerances::GAP_TOL;

/// Distance on `R^n`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Distance {
    Euclidean,
    /// `min(|u - w|, radius)`: a metric that is not geodesic.
    Truncated { radius: f64 },
}

impl Distance {
    pub fn validate(&self) -> Result<()> {
        match self {
            Self::Truncated { radius } if !(*radius > 0.0 && radius.is_finite()) => Err(Error::InvalidParameter(
                format!("truncation radius {radius} must be positive"),
            )),
            _ => Ok(()),
        }
    }

    pub fn eval(&self, u: &[f64], w: &[f64]) -> f64 {
        let d = dist(u, w);
        match self {
            Self::Euclidean => d,
            Self::Truncated { radius } => d.min(*radius),
        }
    }

    pub fn is_geodesic(&self) -> bool {
        matches!(self, Self::Euclidean)
    }

    /// Constant-speed geodesic from `u` to `w` at parameter `theta`.
    pub fn geodesic(&self, u: &[f64], w: &[f64], theta: f64) -> Option<Vec<f64>> {
        self.is_geodesic()
            .then(|| u.iter().zip(w).map(|(a, b)| a + theta * (b - a)).collect())
    }

    /// Largest value the distance attains, if bounded.
    pub fn saturation(&self) -> Option<f64> {
        match self {
            Self::Euclidean => None,
            Self::Truncated { radius } => Some(*radius),
        }
    }
}

/// `(M, E, D, psi)` with `M = R^n`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricSystem {
    pub energy: EnergyFunctional,
    pub distance: Distance,
    pub psi: ScalarDensity,
    pub solve: SolveConfig,
    pub quadrature: QuadratureConfig,
    /// Re-solve each step with the grid oracle and fail on disagreement.
    pub oracle_check: bool,
    pub gap_tol: f64,
}

impl MetricSystem {
    pub fn new(energy: EnergyFunctional, distance: Distance, psi: ScalarDensity) -> Result<Self> {
        let sys = Self {
            energy,
            distance,
            psi,
            solve: SolveConfig::default(),
            quadrature: QuadratureConfig::default(),
            oracle_check: false,
            gap_tol: GAP_TOL,
        };
        sys.validate()?;
        Ok(sys)
    }

    pub fn validate(&self) -> Result<()> {
        self.energy.validate()?;
        self.distance.validate()?;
        self.psi.validate()?;
        self.solve.validate()?;
        if self.psi.value(0.0) != 0.0 {
            return Err(Error::InvalidParameter("psi(0) must vanish".into()));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.energy.dim()
    }

    fn psi_prime(&self, r: f64) -> f64 {
        one_sided_derivatives(&self.psi, r).1
    }

    fn psi_star(&self, s: f64) -> f64 {
        conjugate_1d(&self.psi, s).unwrap_or(f64::INFINITY)
    }

    /// The step objective for `u0` and `sigma`.
    pub fn objective<'a>(&'a self, u0: &'a [f64], sigma: f64) -> MetricObjective<'a> {
        MetricObjective { sys: self, u0, sigma }
    }

    /// Box containing every minimizer of the step objective.
    pub fn window(&self, u0: &[f64], sigma: f64) -> Result<Window> {
        check_start(self, u0, sigma)?;
        step_window(self, u0, sigma)
    }

    /// `sigma psi(D(u0, u) / sigma)`
    pub fn dissipation(&self, u0: &[f64], u: &[f64], sigma: f64) -> f64 {
        sigma * self.psi.value(self.distance.eval(u0, u) / sigma)
    }
}

/// `u -> sigma psi(D(u0, u) / sigma) + E(u)`
pub struct MetricObjective<'a> {
    sys: &'a MetricSystem,
    u0: &'a [f64],
    sigma: f64,
}

impl Objective for MetricObjective<'_> {
    fn dim(&self) -> usize {
        self.u0.len()
    }

    fn value(&self, u: &[f64]) -> f64 {
        self.sys.dissipation(self.u0, u, self.sigma) + self.sys.energy.value(u)
    }

    fn gradient(&self, u: &[f64]) -> Option<Vec<f64>> {
        let mut g = self.sys.energy.gradient(u)?;
        let r = dist(u, self.u0);
        if let Some(cap) = self.sys.distance.saturation() {
            if r >= cap {
                return (r > cap).then_some(g);
            }
        }
        if r == 0.0 {
            let (l, rr) = one_sided_derivatives(&self.sys.psi, 0.0);
            return (l == rr).then_some(g);
        }
        let (l, rr) = one_sided_derivatives(&self.sys.psi, r / self.sigma);
        if l != rr {
            return None;
        }
        for i in 0..g.len() {
            g[i] += rr * (u[i] - self.u0[i]) / r;
        }
        Some(g)
    }

    fn breakpoints(&self, coord: usize) -> Vec<f64> {
        let mut b = self.sys.energy.breakpoints(coord);
        if let Some(cap) = self.sys.distance.saturation() {
            b.push(self.u0[coord] - cap);
            b.push(self.u0[coord] + cap);
        }
        b
    }

    fn certified_convex(&self) -> bool {
        self.sys.distance.is_geodesic() && self.sys.energy.is_convex()
    }
}

fn step_window(sys: &MetricSystem, u0: &[f64], sigma: f64) -> Result<Window> {
    let e0 = sys.energy.value(u0);
    let level = e0 - sys.energy.lower_bound();
    let cap = sys.distance.saturation().unwrap_or(f64::INFINITY);
    let r_diss = coercive_radius(level, sigma, |r| sys.psi.value((r * sigma).min(cap) / sigma));
    search_window(u0, r_diss, sys.energy.sublevel_radius(e0))
}

fn check_start(sys: &MetricSystem, u0: &[f64], sigma: f64) -> Result<()> {
    check_dim(sys.dim(), u0.len())?;
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::InvalidParameter(format!("step size {sigma} must be positive")));
    }
    if !sys.energy.value(u0).is_finite() {
        return Err(Error::OutsideDomain(u0.to_vec()));
    }
    Ok(())
}

/// Global minimizers of the metric step objective.
pub fn metric_step(sys: &MetricSystem, u0: &[f64], sigma: f64) -> Result<StepResult> {
    step_impl(sys, u0, sigma, sys.oracle_check)
}

fn step_impl(sys: &MetricSystem, u0: &[f64], sigma: f64, oracle: bool) -> Result<StepResult> {
    check_start(sys, u0, sigma)?;
    let obj = sys.objective(u0, sigma);
    let window = step_window(sys, u0, sigma)?;
    let found = global_minimize(&obj, &window, Some(u0), &sys.solve)?;
    if oracle {
        cross_check(&obj, &window, &found, &sys.solve)?;
    }
    let dists: Vec<f64> = found.minimizers.iter().map(|u| sys.distance.eval(u0, u)).collect();
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

const SPHERE_DIRECTIONS: usize = 64;
const SPHERE_LEVELS: i32 = 12;
const SPHERE_RADIUS: f64 = 1e-2;

fn sphere_directions(n: usize) -> Vec<Vec<f64>> {
    match n {
        1 => vec![vec![-1.0], vec![1.0]],
        2 => (0..SPHERE_DIRECTIONS)
            .map(|k| {
                let a = std::f64::consts::TAU * k as f64 / SPHERE_DIRECTIONS as f64;
                vec![a.cos(), a.sin()]
            })
            .collect(),
        _ => {
            let mut rng = ChaCha8Rng::seed_from_u64(0x5105e);
            let mut dirs = Vec::with_capacity(SPHERE_DIRECTIONS + 2 * n);
            for i in 0..n {
                for s in [-1.0, 1.0] {
                    let mut e = vec![0.0; n];
                    e[i] = s;
                    dirs.push(e);
                }
            }
            while dirs.len() < SPHERE_DIRECTIONS + 2 * n {
                let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let r = norm(&v);
                if r > 1e-3 && r <= 1.0 {
                    dirs.push(v.iter().map(|x| x / r).collect());
                }
            }
            dirs
        }
    }
}

/// `limsup_{v -> u} (f(u) - f(v))^+ / D(u, v)` from the maxima over spheres
/// of radius `1e-2 * 2^-k`, `k = 0..=12`, with a Richardson step on the last
/// two levels.
pub fn sphere_slope(distance: &Distance, f: impl Fn(&[f64]) -> f64, u: &[f64]) -> f64 {
    let fu = f(u);
    let dirs = sphere_directions(u.len());
    let level = |k: i32| {
        let r = SPHERE_RADIUS * 2f64.powi(-k);
        dirs.iter()
            .map(|d| {
                let v: Vec<f64> = u.iter().zip(d).map(|(a, b)| a + r * b).collect();
                let dd = distance.eval(u, &v);
                if dd > 0.0 {
                    (fu - f(&v)).max(0.0) / dd
                } else {
                    0.0
                }
            })
            .fold(0.0, f64::max)
    };
    let coarse = level(SPHERE_LEVELS - 1);
    let fine = level(SPHERE_LEVELS);
    if (fine - coarse).abs() <= 1e-3 * fine.max(1e-12) {
        (2.0 * fine - coarse).max(0.0)
    } else {
        fine
    }
}

/// Metric slope `|dE|(u)`.
pub fn metric_slope(sys: &MetricSystem, u: &[f64]) -> Result<f64> {
    check_dim(sys.dim(), u.len())?;
    if !sys.energy.value(u).is_finite() {
        return Err(Error::OutsideDomain(u.to_vec()));
    }
    // The truncated distance agrees with the Euclidean one near `u`.
    if let Some(s) = sys.energy.euclidean_slope(u) {
        return Ok(s);
    }
    Ok(sphere_slope(&sys.distance, |v| sys.energy.value(v), u))
}

/// Slope of `-D(u0, .)` at `u`.
pub fn distance_slope(sys: &MetricSystem, u0: &[f64], u: &[f64]) -> Result<f64> {
    check_dim(sys.dim(), u0.len())?;
    check_dim(sys.dim(), u.len())?;
    Ok(sphere_slope(&sys.distance, |v| -sys.distance.eval(u0, v), u).min(1.0))
}

/// `psi'(D(u0, u) / sigma) - |dE|(u)`; nonnegative at minimizers.
pub fn slope_estimate_gap(sys: &MetricSystem, u0: &[f64], sigma: f64, u: &[f64]) -> Result<f64> {
    check_start(sys, u0, sigma)?;
    Ok(sys.psi_prime(sys.distance.eval(u0, u) / sigma) - metric_slope(sys, u)?)
}

/// One node of a metric interpolant.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MetricTracePoint {
    pub step: StepResult,
    pub slope: f64,
}

/// Interpolant with running integrals of `psi*(psi'(d-/rho))`,
/// `psi*(psi'(d+/rho))` and `psi*(|dE|(u_rho))`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MetricTrace {
    pub initial: Vec<f64>,
    pub initial_energy: f64,
    pub points: Vec<MetricTracePoint>,
    pub distance_minus_integral: Vec<f64>,
    pub distance_plus_integral: Vec<f64>,
    pub slope_integral: Vec<f64>,
    /// Accumulated quadrature error indicator, per integrand.
    pub errors: [Vec<f64>; 3],
    pub truncation_bound: f64,
}

impl MetricTrace {
    fn index(&self, sigma: f64) -> Result<usize> {
        self.points
            .iter()
            .position(|p| p.step.sigma == sigma)
            .ok_or_else(|| Error::Trace(format!("sigma = {sigma} is not a trace node")))
    }
}

/// Builds the interpolant on `(0, sigma_max]` with adaptive refinement;
/// every entry of `required` becomes a node.
pub fn metric_trace(sys: &MetricSystem, u0: &[f64], sigma_max: f64, required: &[f64]) -> Result<MetricTrace> {
    check_start(sys, u0, sigma_max)?;
    let t = adaptive_trace(
        sigma_max,
        required,
        &sys.quadrature,
        |rho| -> Result<MetricTracePoint> {
            let step = step_impl(sys, u0, rho, false)?;
            let slope = metric_slope(sys, step.representative())?;
            Ok(MetricTracePoint { step, slope })
        },
        |p: &MetricTracePoint| {
            let s = p.step.sigma;
            vec![
                sys.psi_star(sys.psi_prime(p.step.d_minus / s)),
                sys.psi_star(sys.psi_prime(p.step.d_plus / s)),
                sys.psi_star(p.slope),
            ]
        },
    )?;
    let e0 = sys.energy.value(u0);
    let truncation_bound = (t.states[0].step.phi - e0).abs();
    let [a, b, c]: [Vec<f64>; 3] = t.integrals.try_into().expect("three integrands");
    let errors: [Vec<f64>; 3] = t.errors.try_into().expect("three integrands");
    Ok(MetricTrace {
        initial: u0.to_vec(),
        initial_energy: e0,
        points: t.states,
        distance_minus_integral: a,
        distance_plus_integral: b,
        slope_integral: c,
        errors,
        truncation_bound,
    })
}

/// Residuals of the metric energy identity at one `sigma`, for both
/// distance selections.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IdentityResidual {
    pub sigma: f64,
    pub minus: f64,
    pub plus: f64,
    pub error_bar: f64,
}

impl IdentityResidual {
    pub fn worst(&self) -> f64 {
        self.minus.abs().max(self.plus.abs())
    }
}

pub fn identity_residuals(trace: &MetricTrace, sigmas: &[f64]) -> Result<Vec<IdentityResidual>> {
    sigmas
        .iter()
        .map(|&s| {
            let i = trace.index(s)?;
            let p = &trace.points[i].step;
            let base = trace.initial_energy - p.energy - p.dissipation;
            Ok(IdentityResidual {
                sigma: s,
                minus: base - trace.distance_minus_integral[i],
                plus: base - trace.distance_plus_integral[i],
                error_bar: trace.errors[0][i].max(trace.errors[1][i]) + trace.truncation_bound,
            })
        })
        .collect()
}

/// Residual of the metric energy identity at `sigma`.
pub fn energy_identity_residual(sys: &MetricSystem, u0: &[f64], sigma: f64) -> Result<IdentityResidual> {
    let trace = metric_trace(sys, u0, sigma, &[sigma])?;
    Ok(identity_residuals(&trace, &[sigma])?.remove(0))
}

/// De Giorgi gap rows for the requested `sigmas`, which must be trace nodes.
pub fn metric_gap_report(sys: &MetricSystem, trace: &MetricTrace, sigmas: &[f64]) -> Result<GapReport> {
    let entries = sigmas
        .iter()
        .map(|&s| {
            let i = trace.index(s)?;
            let tp = &trace.points[i];
            let p = &tp.step;
            let integral = trace.slope_integral[i];
            let gap = trace.initial_energy - p.energy - p.dissipation - integral;
            let quad_error = trace.errors[2][i] + trace.truncation_bound;
            Ok(GapEntry {
                sigma: s,
                u: p.representative().to_vec(),
                phi: p.phi,
                energy: p.energy,
                dissipation_term: p.dissipation,
                r_slope: sys.psi_star(tp.slope),
                conditioned_slope: sys.psi_star(sys.psi_prime(p.d_minus / s)),
                integral_term: integral,
                gap,
                classification: classify(gap, quad_error, sys.gap_tol),
                quad_error,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(GapReport {
        kind: SystemKind::Metric,
        initial: trace.initial.clone(),
        initial_energy: trace.initial_energy,
        gap_tol: sys.gap_tol,
        truncation_bound: trace.truncation_bound,
        trace_nodes: trace.points.len(),
        entries,
    })
}

/// De Giorgi gap at the given step sizes.
pub fn de_giorgi_metric_gap(sys: &MetricSystem, u0: &[f64], sigmas: &[f64]) -> Result<GapReport> {
    let sigma_max = sigmas.iter().copied().fold(0.0, f64::max);
    let trace = metric_trace(sys, u0, sigma_max, sigmas)?;
    metric_gap_report(sys, &trace, sigmas)
}

/// Largest value of `E(u) - |dE|(u) D(u, w) - omega(u, w) D(u, w) - E(w)`
/// over the sampled pairs; at most zero when the uniform slope estimate holds.
pub fn uniform_slope_probe(
    sys: &MetricSystem,
    omega: impl Fn(&[f64], &[f64]) -> f64,
    samples: &[(Vec<f64>, Vec<f64>)],
) -> Result<f64> {
    let mut worst = f64::NEG_INFINITY;
    for (u, w) in samples {
        let d = sys.distance.eval(u, w);
        let term = sys.energy.value(u) - metric_slope(sys, u)? * d - omega(u, w) * d - sys.energy.value(w);
        worst = worst.max(term);
    }
    Ok(if samples.is_empty() { 0.0 } else { worst })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quad_psi() -> ScalarDensity {
        ScalarDensity::Quadratic { scale: 1.0 }
    }

    fn ex_truncated() -> MetricSystem {
        MetricSystem::new(EnergyFunctional::half_square(1), Distance::Truncated { radius: 1.0 }, quad_psi()).unwrap()
    }

    fn ex_positive_part() -> MetricSystem {
        MetricSystem::new(EnergyFunctional::PositivePart { slope: 1.0 }, Distance::Euclidean, quad_psi()).unwrap()
    }

    #[test]
    fn truncated_step_branches() {
        let sys = ex_truncated();
        let s = metric_step(&sys, &[2.0], 0.25).unwrap();
        assert_eq!(s.minimizers.len(), 1);
        assert!((s.representative()[0] - 1.6).abs() < 1e-7);
        assert!((s.phi - 1.6).abs() < 1e-9);
        let s = metric_step(&sys, &[2.0], 2.0).unwrap();
        assert!(s.representative()[0].abs() < 1e-7);
        assert!((s.phi - 0.25).abs() < 1e-9);
    }

    #[test]
    fn positive_part_step() {
        let s = metric_step(&ex_positive_part(), &[1.0], 0.5).unwrap();
        assert!((s.representative()[0] - 0.5).abs() < 1e-7);
    }

    #[test]
    fn slopes() {
        let sys = ex_positive_part();
        assert_eq!(metric_slope(&sys, &[0.3]).unwrap(), 1.0);
        assert_eq!(metric_slope(&sys, &[0.0]).unwrap(), 0.0);
        let q = ex_truncated();
        assert_eq!(metric_slope(&q, &[2.0]).unwrap(), 2.0);
    }

    #[test]
    fn sphere_estimator_on_smooth_energy() {
        let f = |v: &[f64]| 0.5 * v[0] * v[0];
        assert!((sphere_slope(&Distance::Euclidean, f, &[2.0]) - 2.0).abs() < 1e-9);
        let g = |v: &[f64]| v[0].max(0.0);
        assert_eq!(sphere_slope(&Distance::Euclidean, g, &[0.0]), 0.0);
    }

    #[test]
    fn distance_slopes() {
        let q = ex_truncated();
        assert!((distance_slope(&q, &[0.0], &[0.5]).unwrap() - 1.0).abs() < 1e-3);
        assert_eq!(distance_slope(&q, &[2.0], &[0.0]).unwrap(), 0.0);
        let sys2 = MetricSystem::new(EnergyFunctional::half_square(2), Distance::Euclidean, quad_psi()).unwrap();
        assert!((distance_slope(&sys2, &[0.0, 0.0], &[1.0, 1.0]).unwrap() - 1.0).abs() < 1e-3);
    }

    #[test]
    fn slope_estimate_values() {
        let sys = ex_positive_part();
        assert!(slope_estimate_gap(&sys, &[1.0], 0.5, &[0.5]).unwrap().abs() < 1e-12);
        assert!((slope_estimate_gap(&sys, &[1.0], 2.0, &[0.0]).unwrap() - 0.5).abs() < 1e-12);
        assert!((slope_estimate_gap(&ex_truncated(), &[2.0], 2.0, &[0.0]).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn zero_energy_has_no_gap() {
        let mut sys = MetricSystem::new(EnergyFunctional::Zero { dim: 1 }, Distance::Euclidean, quad_psi()).unwrap();
        sys.quadrature = sys.quadrature.with_uniform_nodes(64);
        let r = energy_identity_residual(&sys, &[0.7], 1.0).unwrap();
        assert_eq!(r.worst(), 0.0);
    }

    #[test]
    fn uniform_probe_on_convex_energy() {
        let sys = ex_positive_part();
        let v = uniform_slope_probe(&sys, |_, _| 0.0, &[(vec![0.5], vec![-1.0])]).unwrap();
        assert_eq!(v, -1.0);
        let same = uniform_slope_probe(&sys, |_, _| 0.0, &[(vec![0.5], vec![0.5])]).unwrap();
        assert_eq!(same, 0.0);
    }

    #[test]
    fn positive_part_gaps_and_identity() {
        let mut sys = ex_positive_part();
        sys.quadrature = sys.quadrature.with_uniform_nodes(256);
        let sigmas = [0.5, 1.0, 2.0, 4.0];
        let trace = metric_trace(&sys, &[1.0], 4.0, &sigmas).unwrap();
        let report = metric_gap_report(&sys, &trace, &sigmas).unwrap();
        for e in &report.entries {
            let expected = if e.sigma <= 1.0 { 0.0 } else { 0.5 - 0.5 / e.sigma };
            assert!((e.gap - expected).abs() < 1e-4, "{e:?}");
        }
        for r in identity_residuals(&trace, &sigmas).unwrap() {
            assert!(r.worst() < 1e-4, "{r:?}");
        }
    }

    #[test]
    fn truncated_gap_is_strict_beyond_crossover() {
        let mut sys = ex_truncated();
        sys.quadrature = sys.quadrature.with_uniform_nodes(256);
        let sigmas = [0.2, 2.0];
        let trace = metric_trace(&sys, &[2.0], 2.0, &sigmas).unwrap();
        let report = metric_gap_report(&sys, &trace, &sigmas).unwrap();
        assert!(report.entries[0].gap.abs() < 1e-4, "{:?}", report.entries[0]);
        assert!(report.entries[1].gap > 1e-3);
        for r in identity_residuals(&trace, &sigmas).unwrap() {
            assert!(r.worst() < 1e-4, "{r:?}");
        }
    }
}
