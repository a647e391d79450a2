//! Scalar convex analysis and radial behaviour of dissipation potentials.
//!
//! Closed forms are used when a density provides them; otherwise one-sided
//! derivatives come from Richardson-corrected difference quotients and the
//! conjugate from a grid search on an auto-expanding window.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{dot, linspace};
use crate::sets::SubdifferentialSet;
use crate::solver::{constrained_dual_minimize, golden_section, SolveConfig};
use crate::tolerances::KINK_TOL;

/// A convex function of one real variable.
pub trait ScalarConvex: Sync {
    fn value(&self, r: f64) -> f64;

    /// Exact `(left, right)` derivatives, if known.
    fn closed_derivatives(&self, _r: f64) -> Option<(f64, f64)> {
        None
    }

    /// Exact Legendre-Fenchel conjugate, if known.
    fn closed_conjugate(&self, _s: f64) -> Option<f64> {
        None
    }

    /// Points where the function is not differentiable.
    fn breakpoints(&self) -> Vec<f64> {
        Vec::new()
    }
}

/// Wraps a closure as a scalar convex function with no closed forms.
pub struct FnScalar<F>(pub F);

impl<F: Fn(f64) -> f64 + Sync> ScalarConvex for FnScalar<F> {
    fn value(&self, r: f64) -> f64 {
        (self.0)(r)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PowerTerm {
    pub exponent: f64,
    pub scale: f64,
}

/// Even convex densities with closed forms where available.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ScalarDensity {
    /// `scale * r^2 / 2`
    Quadratic { scale: f64 },
    /// `scale * |r|^p / p`
    Power { exponent: f64, scale: f64 },
    /// `inner * r^2 / 2` for `|r| <= threshold`, continued by the steeper
    /// parabola `outer * r^2 / 2 - (outer - inner) * threshold^2 / 2`.
    Kinked { threshold: f64, inner: f64, outer: f64 },
    /// `sum scale_k * |r|^p_k / p_k`
    PowerSum { terms: Vec<PowerTerm> },
}

impl ScalarDensity {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        match self {
            Self::Quadratic { scale } if !(*scale > 0.0) => bad(format!("quadratic scale {scale} must be positive")),
            Self::Power { exponent, scale } if !(*exponent > 1.0 && *scale > 0.0) => {
                bad(format!("power density needs exponent > 1 and scale > 0, got ({exponent}, {scale})"))
            }
            Self::Kinked { threshold, inner, outer } if !(*threshold > 0.0 && *inner > 0.0 && *outer >= *inner) => bad(
                format!("kinked density needs threshold > 0 and 0 < inner <= outer, got ({threshold}, {inner}, {outer})"),
            ),
            Self::PowerSum { terms } if terms.is_empty() => bad("power sum needs at least one term".into()),
            Self::PowerSum { terms } => {
                for t in terms {
                    Self::Power { exponent: t.exponent, scale: t.scale }.validate()?;
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// Derivatives with points within the kink tolerance of a breakpoint
    /// treated as sitting on it.
    pub fn derivatives_near(&self, r: f64) -> (f64, f64) {
        let r = self
            .breakpoints()
            .into_iter()
            .find(|b| (r - b).abs() <= KINK_TOL * (1.0 + b.abs()))
            .unwrap_or(r);
        one_sided_derivatives(self, r)
    }
}

pub(crate) fn power_conjugate(s: f64, p: f64, scale: f64) -> f64 {
    let q = p / (p - 1.0);
    s.abs().powf(q) * scale.powf(1.0 - q) / q
}

impl ScalarConvex for ScalarDensity {
    fn value(&self, r: f64) -> f64 {
        match self {
            Self::Quadratic { scale } => 0.5 * scale * r * r,
            Self::Power { exponent, scale } => scale * r.abs().powf(*exponent) / exponent,
            Self::Kinked { threshold, inner, outer } => {
                if r.abs() <= *threshold {
                    0.5 * inner * r * r
                } else {
                    0.5 * outer * r * r - 0.5 * (outer - inner) * threshold * threshold
                }
            }
            Self::PowerSum { terms } => terms
                .iter()
                .map(|t| t.scale * r.abs().powf(t.exponent) / t.exponent)
                .sum(),
        }
    }

    fn closed_derivatives(&self, r: f64) -> Option<(f64, f64)> {
        let d = match self {
            Self::Quadratic { scale } => {
                let d = scale * r;
                (d, d)
            }
            Self::Power { exponent, scale } => {
                let d = scale * r.abs().powf(exponent - 1.0) * r.signum();
                let d = if r == 0.0 { 0.0 } else { d };
                (d, d)
            }
            Self::Kinked { threshold, inner, outer } => {
                let a = r.abs();
                if a < *threshold {
                    (inner * r, inner * r)
                } else if a > *threshold {
                    (outer * r, outer * r)
                } else if r > 0.0 {
                    (inner * threshold, outer * threshold)
                } else {
                    (-outer * threshold, -inner * threshold)
                }
            }
            Self::PowerSum { terms } => {
                let d: f64 = terms
                    .iter()
                    .map(|t| {
                        if r == 0.0 {
                            0.0
                        } else {
                            t.scale * r.abs().powf(t.exponent - 1.0) * r.signum()
                        }
                    })
                    .sum();
                (d, d)
            }
        };
        Some(d)
    }

    fn closed_conjugate(&self, s: f64) -> Option<f64> {
        match self {
            Self::Quadratic { scale } => Some(s * s / (2.0 * scale)),
            Self::Power { exponent, scale } => Some(power_conjugate(s, *exponent, *scale)),
            Self::Kinked { threshold, inner, outer } => {
                let a = s.abs();
                Some(if a <= inner * threshold {
                    s * s / (2.0 * inner)
                } else if a <= outer * threshold {
                    threshold * a - 0.5 * inner * threshold * threshold
                } else {
                    s * s / (2.0 * outer) + 0.5 * (outer - inner) * threshold * threshold
                })
            }
            Self::PowerSum { terms } if terms.len() == 1 => {
                Some(power_conjugate(s, terms[0].exponent, terms[0].scale))
            }
            Self::PowerSum { .. } => None,
        }
    }

    fn breakpoints(&self) -> Vec<f64> {
        match self {
            Self::Kinked { threshold, inner, outer } if outer > inner => vec![-threshold, *threshold],
            _ => Vec::new(),
        }
    }
}

const FD_BASE_STEP: f64 = 1e-2;
const FD_LEVELS: i32 = 20;
const FD_STABLE: f64 = 1e-8;

/// `(left, right)` derivatives of `f` at `r`.
pub fn one_sided_derivatives(f: &dyn ScalarConvex, r: f64) -> (f64, f64) {
    f.closed_derivatives(r)
        .unwrap_or_else(|| difference_quotients(|x| f.value(x), r))
}

/// One-sided difference quotients on steps `1e-2 * 2^-k`, stopped once two
/// consecutive quotients agree to `1e-8`, with a Richardson correction.
pub fn difference_quotients(f: impl Fn(f64) -> f64, r: f64) -> (f64, f64) {
    let f0 = f(r);
    let side = |dir: f64| {
        let mut prev: Option<f64> = None;
        let mut out = 0.0;
        for k in 0..=FD_LEVELS {
            let h = FD_BASE_STEP * 2f64.powi(-k);
            let q = dir * (f(r + dir * h) - f0) / h;
            if let Some(p) = prev {
                out = 2.0 * q - p;
                if (q - p).abs() < FD_STABLE {
                    return out;
                }
            } else {
                out = q;
            }
            prev = Some(q);
        }
        out
    };
    (side(-1.0), side(1.0))
}

/// Legendre-Fenchel conjugate `sup_r (s r - f(r))`.
pub fn conjugate_1d(f: &dyn ScalarConvex, s: f64) -> Result<f64> {
    match f.closed_conjugate(s) {
        Some(v) => Ok(v),
        None => numeric_conjugate_1d(|r| f.value(r), s),
    }
}

/// Grid conjugate: the window doubles (by four) until the maximizer is
/// interior, then two local grid refinements and a golden-section polish.
pub fn numeric_conjugate_1d(f: impl Fn(f64) -> f64, s: f64) -> Result<f64> {
    let g = |r: f64| {
        let v = s * r - f(r);
        if v.is_nan() {
            f64::NEG_INFINITY
        } else {
            v
        }
    };
    let argmax = |xs: &[f64]| {
        let mut best = 0;
        for (i, x) in xs.iter().enumerate() {
            if g(*x) > g(xs[best]) {
                best = i;
            }
        }
        best
    };
    const POINTS: usize = 201;
    let mut half = 1.0;
    let mut center = 0.0;
    let mut found = false;
    for _ in 0..40 {
        let xs = linspace(-half, half, POINTS);
        let k = argmax(&xs);
        if k != 0 && k != POINTS - 1 {
            center = xs[k];
            found = true;
            break;
        }
        half *= 4.0;
    }
    if !found {
        return Err(Error::InfiniteConjugate(s));
    }
    let mut h = 2.0 * half / (POINTS - 1) as f64;
    for _ in 0..2 {
        let xs = linspace(center - h, center + h, 41);
        center = xs[argmax(&xs)];
        h /= 20.0;
    }
    let (r, v) = golden_section(|r| -g(r), center - 2.0 * h, center + 2.0 * h);
    Ok((-v).max(g(center)).max(g(r)))
}

/// A convex potential on `R^n` exposing what the radial analysis needs.
pub trait ConvexPotential: Sync {
    fn dim(&self) -> usize;
    fn value(&self, v: &[f64]) -> f64;
    fn subdifferential(&self, v: &[f64]) -> SubdifferentialSet;
    fn conjugate(&self, xi: &[f64]) -> f64;

    /// Coordinate piece `c_i(s)` when the conjugate is `sum_i c_i(xi_i)`.
    fn separable_conjugate(&self, _coord: usize, _s: f64) -> Option<f64> {
        None
    }
}

/// `(min, max)` of the conjugate over a subdifferential descriptor.
pub fn conjugate_extremes(pot: &dyn ConvexPotential, set: &SubdifferentialSet) -> (f64, f64) {
    match set {
        SubdifferentialSet::Singleton { point } => {
            let v = pot.conjugate(point);
            (v, v)
        }
        SubdifferentialSet::Box { lower, upper } if pot.separable_conjugate(0, 0.0).is_some() => {
            let mut mn = 0.0;
            let mut mx = 0.0;
            for i in 0..lower.len() {
                let c = |t: f64| pot.separable_conjugate(i, t).unwrap_or(f64::NAN);
                let (lo, hi) = (lower[i], upper[i]);
                let (_, gv) = golden_section(c, lo, hi);
                mn += [c(lo), c(hi), c(0f64.clamp(lo, hi)), gv].into_iter().fold(f64::INFINITY, f64::min);
                mx += c(lo).max(c(hi));
            }
            (mn, mx)
        }
        _ => {
            let conj = |x: &[f64]| pot.conjugate(x);
            let mn = constrained_dual_minimize(&conj, set, &SolveConfig::default())
                .map(|(_, v)| v)
                .unwrap_or(f64::NAN);
            let mx = set
                .sample_points()
                .iter()
                .map(|p| pot.conjugate(p))
                .fold(f64::NEG_INFINITY, f64::max);
            (mn, mx)
        }
    }
}

/// Value and one-sided derivatives of `t -> t R(v / t)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RadialProfile {
    pub t: f64,
    pub value: f64,
    pub left: f64,
    pub right: f64,
}

/// Radial profile from the conjugate over the subdifferential: the left
/// derivative is `-max R*` and the right one `-min R*` over `dR(v / t)`.
pub fn radial_profile(pot: &dyn ConvexPotential, v: &[f64], t: f64) -> Result<RadialProfile> {
    if !(t.is_finite() && t > 0.0) {
        return Err(Error::InvalidParameter(format!("radial parameter t = {t} must be positive")));
    }
    crate::error::check_dim(pot.dim(), v.len())?;
    let w: Vec<f64> = v.iter().map(|x| x / t).collect();
    let (mn, mx) = conjugate_extremes(pot, &pot.subdifferential(&w));
    Ok(RadialProfile { t, value: t * pot.value(&w), left: -mx, right: -mn })
}

/// The same derivatives by difference quotients of `t R(v / t)`.
pub fn radial_profile_fd(pot: &dyn ConvexPotential, v: &[f64], t: f64) -> (f64, f64) {
    difference_quotients(
        |s| {
            let w: Vec<f64> = v.iter().map(|x| x / s).collect();
            s * pot.value(&w)
        },
        t,
    )
}

pub fn is_radially_differentiable(pot: &dyn ConvexPotential, v: &[f64], tol: f64) -> Result<bool> {
    let p = radial_profile(pot, v, 1.0)?;
    Ok((p.left - p.right).abs() <= tol)
}

/// `<xi, v>` for `xi` in `dR(v)`, which equals `R(v) + R*(xi)` and does not
/// depend on the choice of `xi` exactly when `R` is radially differentiable
/// at `v`.
pub fn p_mapping(pot: &dyn ConvexPotential, v: &[f64], tol: f64) -> Result<f64> {
    if !is_radially_differentiable(pot, v, tol)? {
        return Err(Error::NotRadiallyDifferentiable("p_mapping"));
    }
    let xi = pot.subdifferential(v).min_norm_element();
    Ok(dot(&xi, v))
}
