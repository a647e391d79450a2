use serde::{Deserialize, Serialize};

use crate::convex_kernel::{conjugate_1d, numeric_conjugate_1d, ConvexPotential, ScalarConvex, ScalarDensity};
use crate::error::{Error, Result};
use crate::linalg::{dot, norm};
use crate::moreau;
use crate::sets::SubdifferentialSet;
use crate::solver::{golden_section, local_descent, FnObjective, SolveConfig, Window};

/// Convex, superlinear dissipation potential with `R(0) = 0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DissipationPotential {
    /// `scale * |v|^2 / 2`
    Quadratic { dim: usize, scale: f64 },
    /// `scale * |v|^p / p`
    PPower { dim: usize, exponent: f64, scale: f64 },
    Sum { parts: Vec<DissipationPotential> },
    /// `weight * sum_i f(v_i)`, the discretization of an integral functional.
    SeparableIntegral { dim: usize, weight: f64, density: ScalarDensity },
    /// A scalar density on the real line.
    PiecewiseScalar { density: ScalarDensity },
    /// `psi(|v|)`
    MetricLike { dim: usize, psi: ScalarDensity },
    /// Moreau-Yosida regularization with parameter `eta`.
    YosidaWrapped { base: Box<DissipationPotential>, eta: f64 },
}

fn radial_conjugate(psi: &ScalarDensity, r: f64) -> f64 {
    conjugate_1d(psi, r).unwrap_or(f64::INFINITY)
}

impl DissipationPotential {
    pub fn quadratic(dim: usize) -> Self {
        Self::Quadratic { dim, scale: 1.0 }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        match self {
            Self::Quadratic { dim, scale } => {
                if *dim == 0 || !(*scale > 0.0) {
                    return bad(format!("quadratic potential needs dim >= 1 and scale > 0, got ({dim}, {scale})"));
                }
            }
            Self::PPower { dim, exponent, scale } => {
                if *dim == 0 || !(*exponent > 1.0) || !(*scale > 0.0) {
                    return bad(format!(
                        "p-power potential needs dim >= 1, exponent > 1, scale > 0, got ({dim}, {exponent}, {scale})"
                    ));
                }
            }
            Self::Sum { parts } => {
                let Some(first) = parts.first() else {
                    return bad("sum potential needs at least one part".into());
                };
                for p in parts {
                    p.validate()?;
                    if p.dim() != first.dim() {
                        return bad("sum parts must share a dimension".into());
                    }
                }
            }
            Self::SeparableIntegral { dim, weight, density } => {
                if *dim == 0 || !(*weight > 0.0) {
                    return bad(format!("separable potential needs dim >= 1 and weight > 0, got ({dim}, {weight})"));
                }
                density.validate()?;
            }
            Self::PiecewiseScalar { density } => density.validate()?,
            Self::MetricLike { dim, psi } => {
                if *dim == 0 {
                    return bad("metric-like potential needs dim >= 1".into());
                }
                psi.validate()?;
            }
            Self::YosidaWrapped { base, eta } => {
                if !(*eta > 0.0 && eta.is_finite()) {
                    return bad(format!("Yosida parameter eta = {eta} must be positive"));
                }
                base.validate()?;
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::Quadratic { dim, .. }
            | Self::PPower { dim, .. }
            | Self::SeparableIntegral { dim, .. }
            | Self::MetricLike { dim, .. } => *dim,
            Self::Sum { parts } => parts.first().map_or(0, Self::dim),
            Self::PiecewiseScalar { .. } => 1,
            Self::YosidaWrapped { base, .. } => base.dim(),
        }
    }

    pub fn value(&self, v: &[f64]) -> f64 {
        match self {
            Self::Quadratic { scale, .. } => 0.5 * scale * dot(v, v),
            Self::PPower { exponent, scale, .. } => scale * norm(v).powf(*exponent) / exponent,
            Self::Sum { parts } => parts.iter().map(|p| p.value(v)).sum(),
            Self::SeparableIntegral { weight, density, .. } => {
                weight * v.iter().map(|x| density.value(*x)).sum::<f64>()
            }
            Self::PiecewiseScalar { density } => density.value(v[0]),
            Self::MetricLike { psi, .. } => psi.value(norm(v)),
            Self::YosidaWrapped { base, eta } => moreau::yosida_value_gradient(base, v, *eta)
                .map(|e| e.value)
                .unwrap_or(f64::INFINITY),
        }
    }

    /// Gradient where the potential is differentiable.
    pub fn gradient(&self, v: &[f64]) -> Option<Vec<f64>> {
        match self.subdifferential(v) {
            SubdifferentialSet::Singleton { point } => Some(point),
            _ => None,
        }
    }

    /// Subdifferential descriptor; arguments within the kink tolerance of a
    /// breakpoint get the full interval.
    pub fn subdifferential(&self, v: &[f64]) -> SubdifferentialSet {
        match self {
            Self::Quadratic { scale, .. } => SubdifferentialSet::singleton(v.iter().map(|x| scale * x).collect()),
            Self::PPower { exponent, scale, .. } => {
                let n = norm(v);
                let c = if n == 0.0 { 0.0 } else { scale * n.powf(exponent - 2.0) };
                SubdifferentialSet::singleton(v.iter().map(|x| c * x).collect())
            }
            Self::Sum { parts } => {
                let mut it = parts.iter().map(|p| p.subdifferential(v));
                let first = it.next().expect("validated non-empty");
                it.fold(first, |acc, s| acc.minkowski_sum(&s))
            }
            Self::SeparableIntegral { weight, density, .. } => {
                let (lower, upper): (Vec<f64>, Vec<f64>) = v
                    .iter()
                    .map(|x| {
                        let (l, r) = density.derivatives_near(*x);
                        (weight * l, weight * r)
                    })
                    .unzip();
                SubdifferentialSet::interval_box(lower, upper)
            }
            Self::PiecewiseScalar { density } => {
                let (l, r) = density.derivatives_near(v[0]);
                SubdifferentialSet::interval_box(vec![l], vec![r])
            }
            Self::MetricLike { psi, .. } => {
                let n = norm(v);
                if n == 0.0 {
                    let (_, r) = psi.derivatives_near(0.0);
                    return if r == 0.0 || v.len() == 1 {
                        SubdifferentialSet::interval_box(vec![-r; v.len()], vec![r; v.len()])
                    } else {
                        sphere_samples(v.len(), r)
                    };
                }
                let (l, r) = psi.derivatives_near(n);
                let dir: Vec<f64> = v.iter().map(|x| x / n).collect();
                if l == r || v.len() == 1 {
                    let a: Vec<f64> = dir.iter().map(|d| l * d).collect();
                    let b: Vec<f64> = dir.iter().map(|d| r * d).collect();
                    let (lo, hi): (Vec<f64>, Vec<f64>) =
                        a.iter().zip(&b).map(|(x, y)| (x.min(*y), x.max(*y))).unzip();
                    SubdifferentialSet::interval_box(lo, hi)
                } else {
                    let points = (0..=16)
                        .map(|k| {
                            let s = l + (r - l) * k as f64 / 16.0;
                            dir.iter().map(|d| s * d).collect()
                        })
                        .collect();
                    SubdifferentialSet::Sampled { points }
                }
            }
            Self::YosidaWrapped { base, eta } => match moreau::yosida_value_gradient(base, v, *eta) {
                Ok(e) => SubdifferentialSet::singleton(e.gradient),
                Err(_) => SubdifferentialSet::singleton(vec![f64::NAN; v.len()]),
            },
        }
    }

    /// Legendre-Fenchel conjugate.
    pub fn conjugate(&self, xi: &[f64]) -> f64 {
        if let Some(total) = (0..xi.len())
            .map(|i| self.separable_piece(i, xi[i]))
            .collect::<Option<Vec<f64>>>()
        {
            return total.iter().sum();
        }
        match self {
            Self::PPower { exponent, scale, .. } => {
                crate::convex_kernel::power_conjugate(norm(xi), *exponent, *scale)
            }
            Self::MetricLike { psi, .. } => radial_conjugate(psi, norm(xi)),
            Self::YosidaWrapped { base, eta } => base.conjugate(xi) + 0.5 * eta * dot(xi, xi),
            _ => self.numeric_conjugate(xi),
        }
    }

    /// `sup_v <xi, v> - R(v)` computed by minimization, used where no closed
    /// form applies.
    pub fn numeric_conjugate(&self, xi: &[f64]) -> f64 {
        if xi.len() == 1 {
            return numeric_conjugate_1d(|r| self.value(&[r]), xi[0]).unwrap_or(f64::INFINITY);
        }
        let obj = FnObjective::new(xi.len(), |v: &[f64]| self.value(v) - dot(xi, v));
        let cfg = SolveConfig::default();
        let mut radius = 1.0;
        for _ in 0..40 {
            let w = Window::cube(&vec![0.0; xi.len()], radius).expect("positive radius");
            let (v, f) = local_descent(&obj, &w, &vec![0.0; xi.len()], &cfg);
            if !w.on_boundary(&v, 1e-9 * radius) {
                return -f;
            }
            radius *= 4.0;
        }
        f64::INFINITY
    }

    fn separable_piece(&self, coord: usize, s: f64) -> Option<f64> {
        match self {
            Self::Quadratic { scale, .. } => Some(s * s / (2.0 * scale)),
            Self::SeparableIntegral { weight, density, .. } => {
                Some(weight * conjugate_1d(density, s / weight).unwrap_or(f64::INFINITY))
            }
            Self::PiecewiseScalar { density } if coord == 0 => {
                Some(conjugate_1d(density, s).unwrap_or(f64::INFINITY))
            }
            Self::YosidaWrapped { base, eta } => base.separable_piece(coord, s).map(|c| c + 0.5 * eta * s * s),
            _ => None,
        }
    }

    pub fn is_separable(&self) -> bool {
        self.separable_piece(0, 0.0).is_some()
    }

    /// Kink locations of coordinate `coord` (in velocity space).
    pub fn breakpoints(&self, coord: usize) -> Vec<f64> {
        let _ = coord;
        match self {
            Self::SeparableIntegral { density, .. } | Self::PiecewiseScalar { density } => density.breakpoints(),
            Self::MetricLike { dim: 1, psi } => psi.breakpoints(),
            Self::Sum { parts } => parts.iter().flat_map(|p| p.breakpoints(coord)).collect(),
            _ => Vec::new(),
        }
    }

    /// A lower bound for `R` on the sphere of radius `r`.
    pub fn sphere_lower_bound(&self, r: f64) -> f64 {
        match self {
            Self::Quadratic { scale, .. } => 0.5 * scale * r * r,
            Self::PPower { exponent, scale, .. } => scale * r.powf(*exponent) / exponent,
            Self::Sum { parts } => parts.iter().map(|p| p.sphere_lower_bound(r)).sum(),
            Self::SeparableIntegral { dim, weight, density } => {
                let n = *dim as f64;
                weight * n * density.value(r / n).min(density.value(-r / n))
            }
            Self::PiecewiseScalar { density } => density.value(r).min(density.value(-r)),
            Self::MetricLike { psi, .. } => psi.value(r),
            Self::YosidaWrapped { base, eta } => {
                let (_, v) = golden_section(|s| (r - s).powi(2) / (2.0 * eta) + base.sphere_lower_bound(s), 0.0, r);
                v
            }
        }
    }

    /// Upper bound for `C` in `|w| <= C + R(w)`; exact in one dimension and
    /// for radial potentials. Equals the maximum of `R*` on the unit ball.
    pub fn superlinearity_constant(&self) -> f64 {
        let n = self.dim();
        match self {
            Self::Quadratic { .. } | Self::PPower { .. } | Self::MetricLike { .. } => {
                let mut e = vec![0.0; n];
                e[0] = 1.0;
                self.conjugate(&e)
            }
            _ if n == 1 => self.conjugate(&[1.0]).max(self.conjugate(&[-1.0])),
            Self::Sum { parts } => parts
                .iter()
                .map(Self::superlinearity_constant)
                .fold(f64::INFINITY, f64::min),
            Self::YosidaWrapped { base, eta } => base.superlinearity_constant() + 0.5 * eta,
            _ if self.is_separable() => (0..n)
                .map(|i| {
                    let a = self.separable_piece(i, 1.0).unwrap_or(f64::INFINITY);
                    let b = self.separable_piece(i, -1.0).unwrap_or(f64::INFINITY);
                    a.max(b)
                })
                .sum(),
            _ => f64::INFINITY,
        }
    }
}

fn sphere_samples(dim: usize, radius: f64) -> SubdifferentialSet {
    let mut points = Vec::new();
    for i in 0..dim {
        for s in [-1.0, 1.0] {
            let mut p = vec![0.0; dim];
            p[i] = s * radius;
            points.push(p);
        }
    }
    SubdifferentialSet::Sampled { points }
}

impl ConvexPotential for DissipationPotential {
    fn dim(&self) -> usize {
        DissipationPotential::dim(self)
    }
    fn value(&self, v: &[f64]) -> f64 {
        DissipationPotential::value(self, v)
    }
    fn subdifferential(&self, v: &[f64]) -> SubdifferentialSet {
        DissipationPotential::subdifferential(self, v)
    }
    fn conjugate(&self, xi: &[f64]) -> f64 {
        DissipationPotential::conjugate(self, xi)
    }
    fn separable_conjugate(&self, coord: usize, s: f64) -> Option<f64> {
        self.separable_piece(coord, s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::fenchel_gap;

    fn kinked() -> DissipationPotential {
        DissipationPotential::PiecewiseScalar {
            density: ScalarDensity::Kinked { threshold: 1.0, inner: 1.0, outer: 4.0 },
        }
    }

    #[test]
    fn kinked_subdifferential_at_threshold() {
        assert_eq!(
            kinked().subdifferential(&[-1.0]),
            SubdifferentialSet::interval_box(vec![-4.0], vec![-1.0])
        );
        assert!(kinked().subdifferential(&[0.5]).is_singleton());
    }

    #[test]
    fn kinked_conjugate_values() {
        assert_eq!(kinked().conjugate(&[-1.0]), 0.5);
        assert_eq!(kinked().conjugate(&[-4.0]), 3.5);
    }

    #[test]
    fn fenchel_gap_vanishes_on_graph() {
        assert!(fenchel_gap(&kinked(), &[-1.0], &[-2.5]).abs() < 1e-15);
        assert!(fenchel_gap(&kinked(), &[-1.0], &[-5.0]) > 0.1);
    }

    #[test]
    fn p_power_conjugate_matches_numeric() {
        let r = DissipationPotential::PPower { dim: 2, exponent: 3.0, scale: 0.7 };
        for xi in [[0.3, -0.4], [1.5, 2.0], [0.0, -1.0]] {
            let closed = r.conjugate(&xi);
            let numeric = r.numeric_conjugate(&xi);
            assert!((closed - numeric).abs() < 1e-7, "{closed} vs {numeric}");
        }
    }

    #[test]
    fn sum_conjugate_is_numeric_and_consistent() {
        let r = DissipationPotential::Sum {
            parts: vec![
                DissipationPotential::quadratic(1),
                DissipationPotential::PPower { dim: 1, exponent: 4.0, scale: 1.0 },
            ],
        };
        let v = [0.8];
        let xi = r.gradient(&v).unwrap();
        assert!(fenchel_gap(&r, &v, &xi) < 1e-9);
    }

    #[test]
    fn separable_conjugate_scales_with_weight() {
        let h = 0.25;
        let r = DissipationPotential::SeparableIntegral {
            dim: 2,
            weight: h,
            density: ScalarDensity::Power { exponent: 5.0, scale: 1.0 },
        };
        let v = [0.6, -1.1];
        let xi = r.gradient(&v).unwrap();
        assert!(fenchel_gap(&r, &v, &xi) < 1e-12);
        assert!((r.conjugate(&xi) - r.numeric_conjugate(&xi)).abs() < 1e-8);
    }

    #[test]
    fn superlinearity_constant_bounds_norm() {
        for r in [kinked(), DissipationPotential::quadratic(1)] {
            let c = r.superlinearity_constant();
            for k in -40..=40 {
                let w = k as f64 * 0.1;
                assert!(w.abs() <= c + r.value(&[w]) + 1e-12);
            }
        }
        assert_eq!(DissipationPotential::quadratic(1).superlinearity_constant(), 0.5);
    }

    #[test]
    fn sphere_lower_bound_is_a_lower_bound() {
        let r = DissipationPotential::SeparableIntegral {
            dim: 3,
            weight: 0.5,
            density: ScalarDensity::Kinked { threshold: 0.5, inner: 1.0, outer: 3.0 },
        };
        let rad = 2.0;
        let lb = r.sphere_lower_bound(rad);
        for k in 0..64 {
            let a = k as f64 * 0.1;
            let v = [rad * a.cos() * 0.6, rad * a.sin(), rad * a.cos() * 0.8];
            assert!(r.value(&v) >= lb - 1e-12);
        }
    }

    #[test]
    fn validation_rejects_bad_parameters() {
        assert!(DissipationPotential::Quadratic { dim: 0, scale: 1.0 }.validate().is_err());
        assert!(DissipationPotential::PPower { dim: 1, exponent: 1.0, scale: 1.0 }.validate().is_err());
        let y = DissipationPotential::YosidaWrapped { base: Box::new(kinked()), eta: 0.0 };
        assert!(y.validate().is_err());
    }
}
