//! Gap classification and report rows.

use std::fmt;

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Classification {
    /// `|gap| <= tol`: the energy-dissipation identity holds.
    Identity,
    /// The estimate holds with a positive deficit.
    StrictEstimate,
    /// The estimate fails.
    Violation,
    /// The quadrature error bar covers the gap.
    Inconclusive,
}

impl fmt::Display for Classification {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Identity => "identity",
            Self::StrictEstimate => "strict-estimate",
            Self::Violation => "violation",
            Self::Inconclusive => "inconclusive",
        })
    }
}

pub fn classify(gap: f64, quad_error: f64, tol: f64) -> Classification {
    if gap.abs() <= tol {
        Classification::Identity
    } else if gap.abs() <= quad_error {
        Classification::Inconclusive
    } else if gap > 0.0 {
        Classification::StrictEstimate
    } else {
        Classification::Violation
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SystemKind {
    Metric,
    Banach,
}

/// One sampled `sigma` of a gap computation.
///
/// For metric systems `r_slope` holds `psi*(|dE|(u))` and
/// `conditioned_slope` holds `psi*(psi'(d_minus / sigma))`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GapEntry {
    pub sigma: f64,
    pub u: Vec<f64>,
    pub phi: f64,
    pub energy: f64,
    pub dissipation_term: f64,
    pub r_slope: f64,
    pub conditioned_slope: f64,
    pub integral_term: f64,
    pub gap: f64,
    pub classification: Classification,
    pub quad_error: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GapReport {
    pub kind: SystemKind,
    pub initial: Vec<f64>,
    pub initial_energy: f64,
    pub gap_tol: f64,
    /// Bound on the integral over `(0, rho_min]` that was approximated.
    pub truncation_bound: f64,
    pub trace_nodes: usize,
    pub entries: Vec<GapEntry>,
}

impl GapReport {
    pub fn max_abs_gap(&self) -> f64 {
        self.entries.iter().map(|e| e.gap.abs()).fold(0.0, f64::max)
    }

    pub fn all(&self, c: Classification) -> bool {
        self.entries.iter().all(|e| e.classification == c)
    }

    pub fn entry(&self, sigma: f64) -> Option<&GapEntry> {
        self.entries
            .iter()
            .find(|e| (e.sigma - sigma).abs() <= 1e-12 * sigma.abs().max(1.0))
    }

    pub fn csv_header(dim: usize) -> String {
        let mut cols = vec!["sigma".to_string()];
        cols.extend((0..dim).map(|i| format!("u_{i}")));
        cols.extend(
            [
                "phi",
                "energy",
                "dissipation_term",
                "r_slope",
                "conditioned_slope",
                "integral_term",
                "gap",
                "classification",
                "quad_error",
            ]
            .map(String::from),
        );
        cols.join(",")
    }

    pub fn to_csv(&self) -> String {
        let mut out = Self::csv_header(self.initial.len());
        out.push('\n');
        for e in &self.entries {
            let mut cols = vec![e.sigma.to_string()];
            cols.extend(e.u.iter().map(f64::to_string));
            cols.extend([
                e.phi.to_string(),
                e.energy.to_string(),
                e.dissipation_term.to_string(),
                e.r_slope.to_string(),
                e.conditioned_slope.to_string(),
                e.integral_term.to_string(),
                e.gap.to_string(),
                e.classification.to_string(),
                e.quad_error.to_string(),
            ]);
            out.push_str(&cols.join(","));
            out.push('\n');
        }
        out
    }
}
