//! Golden examples and randomized property checks with fixed seeds.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use maxslope_core::banach_gs::{conditioned_slope, de_giorgi_banach_gap, marginal_derivative_bounds, r_slope, BanachSystem, Selection};
use maxslope_core::convex_kernel::is_radially_differentiable;
use maxslope_core::metric_gs::{de_giorgi_metric_gap, metric_step, MetricSystem};
use maxslope_core::mms_driver::run_mms;
use maxslope_core::models::{fenchel_gap, kinked_quadratic_potential, DissipationPotential};
use maxslope_core::moreau::yosida_conjugate_check;
use maxslope_core::report::Classification;
use maxslope_core::system::GradientSystem;

use crate::commands::Outcome;
use crate::error::{CliError, Context};
use crate::output::write_json;
use crate::scenario::{builtin, BUILTIN_NAMES};

const SEED: u64 = 0x6d61_7873;
const SELFTEST_NODES: usize = 256;
const ARG_TOL: f64 = 1e-6;
const GAP_TOL: f64 = 1e-4;
const ORACLE_VALUE_TOL: f64 = 1e-6;
const ORACLE_PROBES: usize = 50;
/// The grid oracle refines twice, ending at a hundredth of its grid step.
const ORACLE_REFINEMENT: f64 = 100.0;

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct SelftestReport {
    pub passed: bool,
    pub checks: Vec<Check>,
}

type CheckResult = Result<(bool, String), CliError>;

fn banach(name: &str) -> Result<BanachSystem, CliError> {
    let sc = builtin(name).expect("registered scenario");
    let mut sys = sc.banach_system()?;
    sys.quadrature.uniform_nodes = SELFTEST_NODES;
    Ok(sys)
}

fn metric(name: &str) -> Result<MetricSystem, CliError> {
    let sc = builtin(name).expect("registered scenario");
    match sc.system()? {
        GradientSystem::Metric(mut m) => {
            m.quadrature.uniform_nodes = SELFTEST_NODES;
            Ok(m)
        }
        GradientSystem::Banach(_) => unreachable!("{name} is a metric scenario"),
    }
}

fn ex3_6_golden() -> CheckResult {
    let sys = banach("ex3_6")?;
    let sigmas = [0.25, 0.5, 1.0, 2.0, 4.0];
    let report = de_giorgi_banach_gap(&sys, &[1.0], &sigmas, Selection::Optimal).context("ex3_6 gap")?;
    let mut worst: f64 = 0.0;
    for (&s, e) in sigmas.iter().zip(&report.entries) {
        let u = (1.0 - s).max(0.0);
        let xi = if s < 1.0 { 1.0 } else { 1.0 / s };
        let c = conditioned_slope(&sys, &[1.0], s, &e.u).context("ex3_6 slope")?;
        worst = worst
            .max((e.u[0] - u).abs())
            .max((c.xi[0] - xi).abs())
            .max((c.value - 0.5 * xi * xi).abs());
    }
    let ok = worst <= ARG_TOL && report.all(Classification::Identity) && report.max_abs_gap() <= GAP_TOL;
    Ok((ok, format!("worst deviation {worst:.3e}, max |gap| {:.3e}", report.max_abs_gap())))
}

fn ex4_2_golden() -> CheckResult {
    let sys = banach("ex4_2")?;
    let mut worst: f64 = 0.0;
    for (s, u) in [(1.0, 4.8), (3.0, 3.0), (6.0, 6.0 / 7.0)] {
        let step = maxslope_core::banach_gs::banach_step(&sys, &[6.0], s).context("ex4_2 step")?;
        worst = worst.max((step.representative()[0] - u).abs());
    }
    let pot = kinked_quadratic_potential();
    let mut kinks_ok = true;
    for v in [-1.0, 1.0] {
        kinks_ok &= !is_radially_differentiable(&pot, &[v], 1e-9)?;
    }
    for v in [-2.0, -0.5, 0.5, 2.0] {
        kinks_ok &= is_radially_differentiable(&pot, &[v], 1e-9)?;
    }
    let sigmas: Vec<f64> = (1..=16).map(|k| 0.5 * k as f64).collect();
    let report = de_giorgi_banach_gap(&sys, &[6.0], &sigmas, Selection::Optimal).context("ex4_2 gap")?;
    let ok = worst <= ARG_TOL && kinks_ok && report.all(Classification::Identity);
    Ok((ok, format!("worst step deviation {worst:.3e}, kinks detected {kinks_ok}, max |gap| {:.3e}", report.max_abs_gap())))
}

fn ex2_13_metric() -> CheckResult {
    let sys = metric("ex2_13")?;
    let sigmas = [0.25, 0.5, 1.0, 2.0, 4.0];
    let report = de_giorgi_metric_gap(&sys, &[1.0], &sigmas).context("ex2_13 gap")?;
    let (mut arg_worst, mut worst): (f64, f64) = (0.0, 0.0);
    for (&s, e) in sigmas.iter().zip(&report.entries) {
        let expected_gap = if s <= 1.0 { 0.0 } else { 0.5 - 0.5 / s };
        let slope = if s < 1.0 { 1.0 } else { 0.0 };
        arg_worst = arg_worst.max((e.u[0] - (1.0 - s).max(0.0)).abs());
        // r_slope holds psi*(|dE|) = |dE|^2 / 2
        worst = worst.max((e.gap - expected_gap).abs()).max(((2.0 * e.r_slope).sqrt() - slope).abs());
    }
    let ok = arg_worst <= ARG_TOL && worst <= GAP_TOL;
    Ok((ok, format!("worst state deviation {arg_worst:.3e}, worst gap or slope deviation {worst:.3e}")))
}

fn ex2_12_metric() -> CheckResult {
    let sys = metric("ex2_12")?;
    let mut worst: f64 = 0.0;
    for s in [0.05, 0.1, 0.2] {
        let step = metric_step(&sys, &[2.0], s).context("ex2_12 step")?;
        worst = worst.max((step.representative()[0] - 2.0 / (1.0 + s)).abs());
    }
    let far = metric_step(&sys, &[2.0], 2.0).context("ex2_12 step")?;
    worst = worst.max(far.representative()[0].abs());
    let report = de_giorgi_metric_gap(&sys, &[2.0], &[0.2, 1.0, 2.0]).context("ex2_12 gap")?;
    let min_gap = report.entries.iter().map(|e| e.gap).fold(f64::INFINITY, f64::min);
    let gap2 = report.entries[2].gap;
    let ok = worst <= ARG_TOL && min_gap >= -GAP_TOL && gap2 > 1e-3;
    Ok((ok, format!("worst step deviation {worst:.3e}, min gap {min_gap:.3e}, gap at 2 {gap2:.6}")))
}

fn dual_identity() -> CheckResult {
    let grid: Vec<Vec<f64>> = (0..41).map(|k| vec![-5.0 + 0.25 * k as f64]).collect();
    let mut worst: f64 = 0.0;
    for pot in [DissipationPotential::quadratic(1), kinked_quadratic_potential()] {
        for eta in [1.0, 0.25, 1.0 / 64.0] {
            for row in yosida_conjugate_check(&pot, eta, &grid)? {
                worst = worst.max(row.residual());
            }
        }
    }
    Ok((worst <= 1e-5, format!("max residual {worst:.3e}")))
}

fn marginal_bracket(rng: &mut ChaCha8Rng) -> CheckResult {
    let mut worst: f64 = f64::NEG_INFINITY;
    for (name, u0) in [("ex3_6", 1.0), ("ex4_2", 6.0)] {
        let sys = banach(name)?;
        for _ in 0..8 {
            let s = rng.gen_range(0.1..8.0);
            let b = marginal_derivative_bounds(&sys, &[u0], s).context("marginal bounds")?;
            worst = worst.max(b.delta_minus - b.fd_slope).max(b.fd_slope - b.delta_plus);
        }
    }
    Ok((worst <= 1e-5, format!("worst bracket excess {worst:.3e}")))
}

fn oracle_agreement(sys: &GradientSystem, u0: &[f64], sigma: f64) -> Result<(f64, bool), CliError> {
    let cmp = sys.oracle_comparison(u0, sigma).context(format!("oracle comparison at sigma = {sigma}"))?;
    Ok((cmp.value_gap(), cmp.value_gap() <= ORACLE_VALUE_TOL && cmp.argument_gap() <= cmp.grid_step / ORACLE_REFINEMENT))
}

fn oracle_builtins() -> CheckResult {
    let mut worst: f64 = 0.0;
    let mut ok = true;
    let mut skipped = Vec::new();
    for name in BUILTIN_NAMES {
        let sc = builtin(name).expect("registered scenario");
        let sys = sc.system()?;
        if sys.dim() > 3 {
            skipped.push(name);
            continue;
        }
        for s in sc.sigmas().iter().step_by(8) {
            let (gap, agree) = oracle_agreement(&sys, &sc.initial, *s)?;
            worst = worst.max(gap);
            ok &= agree;
        }
    }
    Ok((ok, format!("max value gap {worst:.3e}; no grid oracle above 3 dimensions: {}", skipped.join(", "))))
}

fn oracle_probes(rng: &mut ChaCha8Rng) -> CheckResult {
    let systems: Vec<GradientSystem> = BUILTIN_NAMES
        .iter()
        .filter_map(|n| builtin(n).and_then(|s| s.system().ok()))
        .filter(|s| s.dim() <= 3)
        .collect();
    let mut worst: f64 = 0.0;
    let mut failures = 0;
    for k in 0..ORACLE_PROBES {
        let sys = &systems[k % systems.len()];
        let sigma = rng.gen_range(0.1..4.0);
        let u0: Vec<f64> = (0..sys.dim()).map(|_| rng.gen_range(-3.0..6.0)).collect();
        let (gap, agree) = oracle_agreement(sys, &u0, sigma)?;
        worst = worst.max(gap);
        failures += usize::from(!agree);
    }
    Ok((failures == 0, format!("{ORACLE_PROBES} probes, {failures} disagreements, max value gap {worst:.3e}")))
}

fn quadratic_mms() -> CheckResult {
    let mut sys = builtin("quadratic").expect("registered scenario").system()?;
    sys.quadrature_mut().uniform_nodes = SELFTEST_NODES;
    let traj = run_mms(&sys, &[1.0], 0.5, 2.0)?;
    let worst = traj
        .nodes
        .iter()
        .enumerate()
        .map(|(k, u)| (u[0] - (1.0f64 / 1.5).powi(k as i32)).abs())
        .fold(0.0, f64::max);
    let max_gap = traj.cells.iter().map(|c| c.gap.gap.abs()).fold(0.0, f64::max);
    Ok((worst <= ARG_TOL && max_gap <= GAP_TOL, format!("node deviation {worst:.3e}, max cell gap {max_gap:.3e}")))
}

fn slope_ordering(rng: &mut ChaCha8Rng) -> CheckResult {
    let mut worst: f64 = f64::NEG_INFINITY;
    for (name, lo, hi) in [("ex3_6", -2.0, 3.0), ("ex4_2", -2.0, 8.0), ("quadratic", -3.0, 3.0)] {
        let sys = banach(name)?;
        for _ in 0..10 {
            let u0 = [rng.gen_range(lo..hi)];
            let s = rng.gen_range(0.1..4.0);
            let step = maxslope_core::banach_gs::banach_step(&sys, &u0, s).context("slope ordering step")?;
            let u = step.representative();
            let c = conditioned_slope(&sys, &u0, s, u).context("conditioned slope")?;
            worst = worst.max(r_slope(&sys, u).context("r-slope")? - c.value);
        }
    }
    Ok((worst <= 1e-9, format!("largest excess of the r-slope {worst:.3e}")))
}

fn fenchel_nonnegative(rng: &mut ChaCha8Rng) -> CheckResult {
    let mut worst: f64 = f64::INFINITY;
    for pot in [DissipationPotential::quadratic(1), kinked_quadratic_potential()] {
        for _ in 0..50 {
            let v = [rng.gen_range(-4.0..4.0)];
            let xi = [rng.gen_range(-6.0..6.0)];
            worst = worst.min(fenchel_gap(&pot, &v, &xi));
        }
    }
    Ok((worst >= -1e-12, format!("smallest Fenchel gap {worst:.3e}")))
}

fn allen_cahn_step() -> CheckResult {
    let sc = builtin("allen_cahn_1d").expect("registered scenario");
    let sys = sc.system()?;
    let step = sys.step(&sc.initial, sc.sigma_window[0]).context("allen_cahn step")?;
    let e0 = sys.energy().value(&sc.initial);
    let ok = step.phi <= e0 && step.energy <= e0;
    Ok((ok, format!("E(u0) {e0:.9}, phi {:.9}", step.phi)))
}

/// Runs every check and writes `selftest.json` into `out`.
pub fn run_selftest(out: &Path) -> Result<Outcome, CliError> {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut checks = Vec::new();
    let mut push = |name: &'static str, r: CheckResult| {
        let (passed, detail) = match r {
            Ok(v) => v,
            Err(e) => (false, format!("error: {e}")),
        };
        checks.push(Check { name, passed, detail });
    };
    push("ex3_6 golden trace", ex3_6_golden());
    push("ex4_2 golden trace", ex4_2_golden());
    push("ex2_13 metric closed forms", ex2_13_metric());
    push("ex2_12 metric closed forms", ex2_12_metric());
    push("Yosida dual identity", dual_identity());
    push("marginal derivative bracket", marginal_bracket(&mut rng));
    push("oracle agreement on built-ins", oracle_builtins());
    push("oracle agreement on random probes", oracle_probes(&mut rng));
    push("quadratic minimizing movement", quadratic_mms());
    push("conditioned slope dominates r-slope", slope_ordering(&mut rng));
    push("Fenchel gap nonnegative", fenchel_nonnegative(&mut rng));
    push("allen_cahn_1d step", allen_cahn_step());

    let passed = checks.iter().all(|c| c.passed);
    let summary = checks
        .iter()
        .map(|c| format!("[{}] {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail))
        .collect();
    let report = SelftestReport { passed, checks };
    let files = vec![write_json(out, "selftest.json", &report)?];
    Ok(Outcome { passed, summary, files })
}
