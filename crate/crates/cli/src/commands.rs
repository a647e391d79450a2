//! Command dispatch and report emission.

use std::path::{Path, PathBuf};

use serde::Serialize;

use maxslope_core::banach_gs::{yosida_pipeline, PipelineReport};
use maxslope_core::mms_driver::{edb_report, interpolant_trace, run_mms, EdbReport, MmsInterpolant, MmsTrajectory};
use maxslope_core::report::{Classification, GapReport};
use maxslope_core::step::StepResult;
use maxslope_core::system::{GradientSystem, OracleComparison};

use crate::error::{CliError, Context};
use crate::output::{write_atomic, write_json};
use crate::scenario::{load_scenario, Scenario};
use crate::selftest::run_selftest;

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Command {
    Step,
    Sweep,
    Mms,
    Gap,
    Pipeline,
    Selftest,
}

/// Command-line overrides on top of the scenario.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub sigma: Option<f64>,
    pub sigma_samples: Option<usize>,
    pub tau: Option<f64>,
    pub horizon: Option<f64>,
    pub oracle: bool,
}

#[derive(Debug)]
pub struct Outcome {
    /// False when a contract or golden value failed.
    pub passed: bool,
    pub summary: Vec<String>,
    pub files: Vec<PathBuf>,
}

/// Tolerated energy increase between consecutive nodes.
const MONOTONE_SLACK: f64 = 1e-10;

pub fn run_command(
    command: Command,
    scenario: Option<&str>,
    overrides: &Overrides,
    out: &Path,
) -> Result<Outcome, CliError> {
    if command == Command::Selftest {
        return run_selftest(out);
    }
    let name = scenario.ok_or_else(|| CliError::Config("--scenario is required for this command".into()))?;
    let mut sc = load_scenario(name)?;
    apply_overrides(&mut sc, overrides)?;
    let out = sc.output.dir.clone().filter(|_| out.as_os_str().is_empty()).unwrap_or_else(|| out.to_path_buf());
    let mut sys = sc.system()?;
    sys.set_oracle_check(overrides.oracle);
    match command {
        Command::Step => step(&sc, &sys, overrides, &out),
        Command::Sweep => sweep(&sc, &sys, &out),
        Command::Gap => gap(&sc, &sys, overrides, &out),
        Command::Mms => mms(&sc, &sys, &out),
        Command::Pipeline => pipeline(&sc, &out),
        Command::Selftest => unreachable!("handled above"),
    }
}

fn apply_overrides(sc: &mut Scenario, o: &Overrides) -> Result<(), CliError> {
    if let Some(n) = o.sigma_samples {
        sc.sigma_samples = n;
    }
    if let Some(t) = o.tau {
        sc.mms.tau = t;
    }
    if let Some(t) = o.horizon {
        sc.mms.horizon = t;
    }
    if let Some(s) = o.sigma {
        if !(s.is_finite() && s > 0.0) {
            return Err(CliError::Config(format!("--sigma must be positive, got {s}")));
        }
    }
    sc.validate()
}

#[derive(Serialize)]
struct StepReport<'a> {
    scenario: &'a str,
    initial: &'a [f64],
    result: StepResult,
    oracle: Option<OracleComparison>,
}

fn step(sc: &Scenario, sys: &GradientSystem, o: &Overrides, out: &Path) -> Result<Outcome, CliError> {
    let sigma = o.sigma.unwrap_or(sc.sigma_window[1]);
    let ctx = || format!("step of {} at sigma = {sigma}", sc.name);
    let result = sys.step(&sc.initial, sigma).context(ctx())?;
    let mut passed = true;
    let mut summary = vec![format!(
        "sigma={sigma} phi={:.12e} minimizers={:?}",
        result.phi, result.minimizers
    )];
    let oracle = if o.oracle && sys.dim() <= 3 {
        let cmp = sys.oracle_comparison(&sc.initial, sigma).context(ctx())?;
        let ok = cmp.value_gap() <= 1e-6;
        passed &= ok;
        summary.push(format!("oracle value gap {:.3e} ({})", cmp.value_gap(), if ok { "agree" } else { "DISAGREE" }));
        Some(cmp)
    } else {
        None
    };
    let report = StepReport { scenario: &sc.name, initial: &sc.initial, result, oracle };
    let files = vec![write_json(out, "step.json", &report)?];
    Ok(Outcome { passed, summary, files })
}

fn no_violation(report: &GapReport) -> bool {
    report.entries.iter().all(|e| e.classification != Classification::Violation)
}

fn sweep(sc: &Scenario, sys: &GradientSystem, out: &Path) -> Result<Outcome, CliError> {
    let sigmas = sc.sigmas();
    let report = sys.gap_report(&sc.initial, &sigmas).context(format!("sweep of {}", sc.name))?;
    let mut counts = Vec::new();
    for c in [Classification::Identity, Classification::StrictEstimate, Classification::Inconclusive, Classification::Violation] {
        let n = report.entries.iter().filter(|e| e.classification == c).count();
        if n > 0 {
            counts.push(format!("{c}: {n}"));
        }
    }
    let summary = vec![
        format!("{} samples on [{}, {}]; {}", sigmas.len(), sc.sigma_window[0], sc.sigma_window[1], counts.join(", ")),
        format!("max |gap| {:.3e}, trace nodes {}", report.max_abs_gap(), report.trace_nodes),
    ];
    let files = vec![
        write_atomic(out, "sweep.csv", report.to_csv().as_bytes())?,
        write_json(out, "gap_report.json", &report)?,
    ];
    Ok(Outcome { passed: no_violation(&report), summary, files })
}

fn gap(sc: &Scenario, sys: &GradientSystem, o: &Overrides, out: &Path) -> Result<Outcome, CliError> {
    let sigmas = match o.sigma {
        Some(s) => vec![s],
        None => sc.sigmas(),
    };
    let report = sys.gap_report(&sc.initial, &sigmas).context(format!("gap of {}", sc.name))?;
    let summary = report
        .entries
        .iter()
        .map(|e| format!("sigma={} {}, gap {:.6}", e.sigma, e.classification, e.gap))
        .collect();
    let files = vec![write_json(out, "gap_report.json", &report)?];
    Ok(Outcome { passed: no_violation(&report), summary, files })
}

#[derive(Serialize)]
struct MmsReport {
    scenario: String,
    trajectory: MmsTrajectory,
    interpolant: MmsInterpolant,
    edb: EdbReport,
}

fn mms_csv(traj: &MmsTrajectory) -> String {
    let dim = traj.nodes[0].len();
    let mut s = String::from("k,t");
    for i in 0..dim {
        s.push_str(&format!(",u_{i}"));
    }
    s.push_str(",energy,speed,gap,classification\n");
    for (k, u) in traj.nodes.iter().enumerate() {
        s.push_str(&format!("{k},{}", k as f64 * traj.tau));
        for x in u {
            s.push_str(&format!(",{x}"));
        }
        s.push_str(&format!(",{}", traj.energies[k]));
        match k.checked_sub(1).and_then(|c| traj.cells.get(c)) {
            Some(cell) => s.push_str(&format!(",{},{},{}\n", cell.speed, cell.gap.gap, cell.gap.classification)),
            None => s.push_str(",,,\n"),
        }
    }
    s
}

fn mms(sc: &Scenario, sys: &GradientSystem, out: &Path) -> Result<Outcome, CliError> {
    let ctx = format!("mms of {}", sc.name);
    let traj = run_mms(sys, &sc.initial, sc.mms.tau, sc.mms.horizon)?;
    let interpolant = interpolant_trace(sys, &traj, sc.mms.cell_samples).context(ctx.clone())?;
    let edb = edb_report(sys, &traj, sc.mms.refinement_levels).context(ctx)?;
    let monotone = traj.energies.windows(2).all(|w| w[1] <= w[0] + MONOTONE_SLACK * w[0].abs().max(1.0));
    let cells_ok = traj.cells.iter().all(|c| c.gap.classification != Classification::Violation);
    let refinement_ok = edb.refinement_monotone();
    let mut summary = vec![format!(
        "tau={} horizon={} cells={} final energy {:.9}",
        traj.tau,
        traj.horizon,
        traj.cells.len(),
        traj.energies.last().copied().unwrap_or(f64::NAN)
    )];
    summary.push(format!(
        "energy monotone: {monotone}; cell gaps without violation: {cells_ok}; refinement monotone: {refinement_ok}"
    ));
    for row in &edb.refinement {
        summary.push(format!(
            "  tau={:<10} residual {:+.3e} (error bar {:.1e}), max cell gap {:.3e}",
            row.tau, row.total_residual, row.error_bar, row.max_cell_gap
        ));
    }
    let files = vec![
        write_atomic(out, "mms.csv", mms_csv(&traj).as_bytes())?,
        write_json(out, "mms.json", &MmsReport { scenario: sc.name.clone(), trajectory: traj, interpolant, edb })?,
    ];
    Ok(Outcome { passed: monotone && cells_ok && refinement_ok, summary, files })
}

fn pipeline(sc: &Scenario, out: &Path) -> Result<Outcome, CliError> {
    let sys = sc.banach_system()?;
    let sigmas = sc.sigmas();
    let report: PipelineReport =
        yosida_pipeline(&sys, &sc.initial, &sigmas, &sc.pipeline.etas).context(format!("pipeline of {}", sc.name))?;
    let per_eta_ok = report.runs.iter().all(|r| r.report.all(Classification::Identity));
    let limit_ok = report.min_limit_gap() >= -2.0 * sc.tolerances.gap;
    let mut summary: Vec<String> = report
        .runs
        .iter()
        .map(|r| {
            format!(
                "eta={} max |gap| {:.3e}, identity at all samples: {}, sup energy {:.6} <= {:.6}",
                r.eta,
                r.report.max_abs_gap(),
                r.report.all(Classification::Identity),
                r.bound,
                report.a_priori_bound
            )
        })
        .collect();
    summary.push(format!("limit estimate: min gap {:.3e}", report.min_limit_gap()));
    let files = vec![write_json(out, "pipeline.json", &report)?];
    Ok(Outcome { passed: per_eta_ok && limit_ok, summary, files })
}
