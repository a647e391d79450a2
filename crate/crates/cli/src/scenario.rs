//! Scenario documents and the registry of built-in examples.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use maxslope_core::banach_gs::BanachSystem;
use maxslope_core::convex_kernel::ScalarDensity;
use maxslope_core::metric_gs::{Distance, MetricSystem};
use maxslope_core::models::{discrete_power_potential, kinked_quadratic_potential, DissipationPotential, EnergyFunctional};
use maxslope_core::quadrature::QuadratureConfig;
use maxslope_core::solver::SolveConfig;
use maxslope_core::system::GradientSystem;
use maxslope_core::tolerances::{FEASIBILITY_TOL, GAP_TOL};

use crate::error::CliError;

pub const BUILTIN_NAMES: [&str; 6] = ["ex2_12", "ex2_13", "ex3_6", "ex4_2", "allen_cahn_1d", "quadratic"];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SystemKind {
    Metric,
    Banach,
}

/// Model specs: metric systems need `distance` and `psi`, Banach systems
/// need `potential`. A flat struct keeps field paths in schema errors.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSpec {
    pub kind: SystemKind,
    pub energy: EnergyFunctional,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub potential: Option<DissipationPotential>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub distance: Option<Distance>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub psi: Option<ScalarDensity>,
}

impl SystemSpec {
    pub fn metric(energy: EnergyFunctional, distance: Distance, psi: ScalarDensity) -> Self {
        Self { kind: SystemKind::Metric, energy, potential: None, distance: Some(distance), psi: Some(psi) }
    }

    pub fn banach(energy: EnergyFunctional, potential: DissipationPotential) -> Self {
        Self { kind: SystemKind::Banach, energy, potential: Some(potential), distance: None, psi: None }
    }
}

fn required<T: Clone>(field: &Option<T>, name: &str, kind: &str) -> Result<T, CliError> {
    field
        .clone()
        .ok_or_else(|| CliError::Config(format!("system.{name} is required for a {kind} system")))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Gaps below this in magnitude are identities.
    pub gap: f64,
    pub feasibility: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { gap: GAP_TOL, feasibility: FEASIBILITY_TOL }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MmsSpec {
    pub tau: f64,
    pub horizon: f64,
    pub cell_samples: usize,
    /// Rows of the refinement table, halving `tau` each time.
    pub refinement_levels: usize,
}

impl Default for MmsSpec {
    fn default() -> Self {
        Self { tau: 0.5, horizon: 2.0, cell_samples: 32, refinement_levels: 4 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineSpec {
    pub etas: Vec<f64>,
}

impl Default for PipelineSpec {
    fn default() -> Self {
        Self { etas: vec![1.0, 0.25, 1.0 / 64.0] }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSpec {
    /// Report directory, overridden by `--out`.
    pub dir: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    pub system: SystemSpec,
    pub initial: Vec<f64>,
    /// Closed interval `[lower, upper]` with `lower > 0`.
    pub sigma_window: [f64; 2],
    #[serde(default = "default_samples")]
    pub sigma_samples: usize,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub solver: SolveConfig,
    #[serde(default)]
    pub quadrature: QuadratureConfig,
    #[serde(default)]
    pub mms: MmsSpec,
    #[serde(default)]
    pub pipeline: PipelineSpec,
    #[serde(default)]
    pub output: OutputSpec,
}

fn default_samples() -> usize {
    64
}

fn positive(name: &str, v: f64) -> Result<(), CliError> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(CliError::Config(format!("{name} must be positive and finite, got {v}")))
    }
}

impl Scenario {
    pub fn validate(&self) -> Result<(), CliError> {
        let [lo, hi] = self.sigma_window;
        positive("sigma_window[0]", lo)?;
        positive("sigma_window[1]", hi)?;
        if lo > hi {
            return Err(CliError::Config(format!("sigma_window is reversed: [{lo}, {hi}]")));
        }
        if self.sigma_samples == 0 {
            return Err(CliError::Config("sigma_samples must be at least 1".into()));
        }
        positive("tolerances.gap", self.tolerances.gap)?;
        positive("tolerances.feasibility", self.tolerances.feasibility)?;
        positive("mms.tau", self.mms.tau)?;
        positive("mms.horizon", self.mms.horizon)?;
        if self.mms.cell_samples < 2 || self.mms.refinement_levels == 0 {
            return Err(CliError::Config("mms needs cell_samples >= 2 and refinement_levels >= 1".into()));
        }
        for &eta in &self.pipeline.etas {
            if !(eta > 0.0 && eta <= 1.0) {
                return Err(CliError::Config(format!("pipeline eta {eta} must lie in (0, 1]")));
            }
        }
        if self.initial.iter().any(|x| !x.is_finite()) {
            return Err(CliError::Config("initial state must be finite".into()));
        }
        self.solver.validate().map_err(|e| CliError::Config(e.to_string()))?;
        let sys = self.system()?;
        if sys.dim() != self.initial.len() {
            return Err(CliError::Config(format!(
                "initial state has {} entries, the system has dimension {}",
                self.initial.len(),
                sys.dim()
            )));
        }
        Ok(())
    }

    /// Sample grid `lower + (upper - lower) k / (n - 1)`.
    pub fn sigmas(&self) -> Vec<f64> {
        let [lo, hi] = self.sigma_window;
        let n = self.sigma_samples;
        if n == 1 {
            return vec![hi];
        }
        (0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect()
    }

    /// The configured gradient system.
    pub fn system(&self) -> Result<GradientSystem, CliError> {
        let spec = &self.system;
        let energy = spec.energy.clone();
        let mut sys = match spec.kind {
            SystemKind::Metric => {
                if spec.potential.is_some() {
                    return Err(CliError::Config("system.potential is not used by a metric system".into()));
                }
                let distance = required(&spec.distance, "distance", "metric")?;
                let psi = required(&spec.psi, "psi", "metric")?;
                GradientSystem::Metric(MetricSystem::new(energy, distance, psi)?)
            }
            SystemKind::Banach => {
                if spec.distance.is_some() || spec.psi.is_some() {
                    return Err(CliError::Config("system.distance and system.psi are not used by a Banach system".into()));
                }
                let mut b = BanachSystem::new(energy, required(&spec.potential, "potential", "Banach")?)?;
                b.feasibility_tol = self.tolerances.feasibility;
                GradientSystem::Banach(b)
            }
        };
        *sys.solve_config_mut() = self.solver.clone();
        *sys.quadrature_mut() = self.quadrature.clone();
        sys.set_gap_tol(self.tolerances.gap);
        sys.validate()?;
        Ok(sys)
    }

    pub fn banach_system(&self) -> Result<BanachSystem, CliError> {
        match self.system()? {
            GradientSystem::Banach(b) => Ok(b),
            GradientSystem::Metric(_) => Err(CliError::Config(format!("scenario {} is not a Banach system", self.name))),
        }
    }
}

fn scenario(name: &str, system: SystemSpec, initial: Vec<f64>, window: [f64; 2], samples: usize) -> Scenario {
    Scenario {
        name: name.into(),
        system,
        initial,
        sigma_window: window,
        sigma_samples: samples,
        tolerances: Tolerances::default(),
        solver: SolveConfig::default(),
        quadrature: QuadratureConfig::default(),
        mms: MmsSpec::default(),
        pipeline: PipelineSpec::default(),
        output: OutputSpec::default(),
    }
}

fn quadratic_psi() -> ScalarDensity {
    ScalarDensity::Quadratic { scale: 1.0 }
}

/// Built-in scenario by registered name.
pub fn builtin(name: &str) -> Option<Scenario> {
    let s = match name {
        "ex2_12" => scenario(
            name,
            SystemSpec::metric(EnergyFunctional::half_square(1), Distance::Truncated { radius: 1.0 }, quadratic_psi()),
            vec![2.0],
            [0.03125, 2.0],
            64,
        ),
        "ex2_13" => scenario(
            name,
            SystemSpec::metric(EnergyFunctional::PositivePart { slope: 1.0 }, Distance::Euclidean, quadratic_psi()),
            vec![1.0],
            [0.0625, 4.0],
            64,
        ),
        "ex3_6" => scenario(
            name,
            SystemSpec::banach(EnergyFunctional::PositivePart { slope: 1.0 }, DissipationPotential::quadratic(1)),
            vec![1.0],
            [0.0625, 4.0],
            64,
        ),
        "ex4_2" => {
            let mut s = scenario(
                name,
                SystemSpec::banach(EnergyFunctional::half_square(1), kinked_quadratic_potential()),
                vec![6.0],
                [0.125, 8.0],
                64,
            );
            s.mms = MmsSpec { tau: 1.0, horizon: 4.0, ..MmsSpec::default() };
            s
        }
        "allen_cahn_1d" => {
            let n = 64;
            let h = 1.0 / (n as f64 + 1.0);
            let initial = (1..=n).map(|i| 0.5 * (std::f64::consts::PI * i as f64 * h).sin()).collect();
            let mut s = scenario(
                name,
                SystemSpec::banach(EnergyFunctional::AllenCahn { nodes: n }, discrete_power_potential(n, 5.0)),
                initial,
                [0.0125, 0.1],
                8,
            );
            // 64 unknowns per step: keep the traces coarse.
            s.solver.starts = 4;
            s.quadrature = QuadratureConfig { uniform_nodes: 16, near_zero_ratio: 1e-2, local_tol: 1e-6, max_rounds: 4, max_nodes: 160 };
            s.mms = MmsSpec { tau: 0.05, horizon: 0.1, cell_samples: 8, refinement_levels: 1 };
            s
        }
        "quadratic" => {
            let mut s = scenario(
                name,
                SystemSpec::banach(EnergyFunctional::half_square(1), DissipationPotential::quadratic(1)),
                vec![1.0],
                [0.125, 8.0],
                64,
            );
            s.pipeline.etas = vec![1.0, 0.25];
            s
        }
        _ => return None,
    };
    Some(s)
}

/// Resolves a registered name first, then a JSON file path.
pub fn load_scenario(name_or_path: &str) -> Result<Scenario, CliError> {
    let s = match builtin(name_or_path) {
        Some(s) => s,
        None => {
            let path = Path::new(name_or_path);
            if !path.exists() {
                return Err(CliError::Config(format!(
                    "{name_or_path} is neither a built-in scenario ({}) nor an existing file",
                    BUILTIN_NAMES.join(", ")
                )));
            }
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
            parse_scenario(&text)?
        }
    };
    s.validate()?;
    Ok(s)
}

/// Parses a JSON scenario; schema errors carry the offending field path.
pub fn parse_scenario(text: &str) -> Result<Scenario, CliError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| CliError::Schema {
        path: e.path().to_string(),
        message: e.inner().to_string(),
    })
}
