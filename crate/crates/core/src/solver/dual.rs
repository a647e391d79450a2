use super::line::golden_section;
use super::{SolveConfig, SolveError};
use crate::linalg::lex_cmp;
use crate::sets::SubdifferentialSet;

/// Minimizes a convex function over a subdifferential descriptor.
///
/// Intervals are handled exactly by comparing the endpoints, the clamp of the
/// origin and a golden-section interior point. Higher-dimensional boxes use
/// coordinate golden sweeps started from the min-norm element; samples are
/// enumerated. Ties go to the lexicographically smallest argument.
pub fn constrained_dual_minimize(
    f: &(dyn Fn(&[f64]) -> f64 + Sync),
    set: &SubdifferentialSet,
    cfg: &SolveConfig,
) -> Result<(Vec<f64>, f64), SolveError> {
    match set {
        SubdifferentialSet::Singleton { point } => Ok((point.clone(), f(point))),
        SubdifferentialSet::Sampled { points } => pick_best(points.iter().map(|p| (p.clone(), f(p)))),
        SubdifferentialSet::Box { lower, upper } if lower.len() == 1 => {
            let (lo, hi) = (lower[0], upper[0]);
            let line = |t: f64| f(&[t]);
            let (g, _) = golden_section(line, lo, hi);
            let pts = [lo, hi, 0f64.clamp(lo, hi), g];
            pick_best(pts.iter().map(|&t| (vec![t], line(t))))
        }
        SubdifferentialSet::Box { lower, upper } => {
            let mut x = set.min_norm_element();
            let mut fx = f(&x);
            for _ in 0..cfg.max_iterations.min(500) {
                let before = fx;
                for i in 0..x.len() {
                    let base = x.clone();
                    let line = |t: f64| {
                        let mut p = base.clone();
                        p[i] = t;
                        f(&p)
                    };
                    let (t, v) = golden_section(line, lower[i], upper[i]);
                    if v < fx {
                        x[i] = t;
                        fx = v;
                    }
                }
                if before - fx <= 1e-15 * (1.0 + fx.abs()) {
                    break;
                }
            }
            Ok((x, fx))
        }
    }
}

fn pick_best(
    candidates: impl Iterator<Item = (Vec<f64>, f64)>,
) -> Result<(Vec<f64>, f64), SolveError> {
    candidates
        .filter(|(_, v)| !v.is_nan())
        .min_by(|a, b| a.1.total_cmp(&b.1).then_with(|| lex_cmp(&a.0, &b.0)))
        .ok_or(SolveError::EmptyConstraint)
}
