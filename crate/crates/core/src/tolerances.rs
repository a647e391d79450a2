//! Default numerical tolerances shared by the solvers and gap checks.

/// Two objective values closer than this (scaled by `max(1, |value|)`) tie.
pub const VALUE_TOL: f64 = 1e-9;
/// Minimizers closer than this are the same point.
pub const ARG_TOL: f64 = 1e-7;
/// One-sided derivative agreement.
pub const DERIVATIVE_TOL: f64 = 1e-6;
/// Radius inside which distinct minimizers are merged into one cluster.
pub const MERGE_RADIUS: f64 = 1e-6;
/// A De Giorgi gap below this in magnitude counts as an identity.
pub const GAP_TOL: f64 = 1e-4;
/// Fenchel-gap value certifying `xi` in a subdifferential.
pub const FENCHEL_CERTIFICATE: f64 = 1e-8;
/// Descriptor-level slack when intersecting subdifferentials.
pub const FEASIBILITY_TOL: f64 = 1e-6;
/// Relative distance at which a point counts as sitting on a kink.
pub const KINK_TOL: f64 = 1e-9;
