//! Generalized Banach gradient systems `(R^n, E, R)`.
//!
//! Steps minimize `sigma R((u - u0) / sigma) + E(u)`. Along the variational
//! interpolant the selected subgradient is always the one minimizing
//! `R*(-xi)` over the conditioned subdifferential `dE(u) ∩ -dR(v)`.

mod audit;
mod chain_rule;
mod pipeline;
mod slopes;
mod step;
mod trace;

pub use audit::{
    identity_derivative_check, lipschitz_interpolant_audit, marginal_derivative_bounds, LipschitzAudit, MarginalBounds,
};
pub use chain_rule::{chain_rule_validation, ChainRuleReport, Jump, Piece};
pub use pipeline::{yosida_pipeline, Accumulation, EtaRun, PipelineReport};
pub use slopes::{conditioned_slope, euler_lagrange_gap, r_slope, ConditionedSlope};
pub use step::{banach_step, BanachObjective, BanachSystem};
pub use trace::{
    banach_gap_report, de_giorgi_banach_gap, interpolant_trace, sampled_trace, InterpolantTrace, Selection,
    TracePoint,
};
