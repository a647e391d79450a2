//! Finite descriptors of (convex) subdifferential sets.

use serde::Serialize;

use crate::linalg::{dist, norm};

/// A subdifferential is either a single vector, a product of intervals, or a
/// finite sample of its boundary.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SubdifferentialSet {
    Singleton { point: Vec<f64> },
    Box { lower: Vec<f64>, upper: Vec<f64> },
    Sampled { points: Vec<Vec<f64>> },
}

fn slack(tol: f64, x: f64) -> f64 {
    tol * (1.0 + x.abs())
}

impl SubdifferentialSet {
    pub fn singleton(point: Vec<f64>) -> Self {
        Self::Singleton { point }
    }

    /// Interval product; collapses to a singleton when every interval is a point.
    pub fn interval_box(lower: Vec<f64>, upper: Vec<f64>) -> Self {
        debug_assert_eq!(lower.len(), upper.len());
        if lower.iter().zip(&upper).all(|(a, b)| a == b) {
            Self::Singleton { point: lower }
        } else {
            Self::Box { lower, upper }
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::Singleton { point } => point.len(),
            Self::Box { lower, .. } => lower.len(),
            Self::Sampled { points } => points.first().map_or(0, Vec::len),
        }
    }

    pub fn is_singleton(&self) -> bool {
        matches!(self, Self::Singleton { .. })
    }

    pub fn negate(&self) -> Self {
        match self {
            Self::Singleton { point } => Self::singleton(point.iter().map(|x| -x).collect()),
            Self::Box { lower, upper } => Self::Box {
                lower: upper.iter().map(|x| -x).collect(),
                upper: lower.iter().map(|x| -x).collect(),
            },
            Self::Sampled { points } => Self::Sampled {
                points: points
                    .iter()
                    .map(|p| p.iter().map(|x| -x).collect())
                    .collect(),
            },
        }
    }

    pub fn scaled(&self, s: f64) -> Self {
        debug_assert!(s >= 0.0);
        match self {
            Self::Singleton { point } => Self::singleton(point.iter().map(|x| s * x).collect()),
            Self::Box { lower, upper } => Self::Box {
                lower: lower.iter().map(|x| s * x).collect(),
                upper: upper.iter().map(|x| s * x).collect(),
            },
            Self::Sampled { points } => Self::Sampled {
                points: points
                    .iter()
                    .map(|p| p.iter().map(|x| s * x).collect())
                    .collect(),
            },
        }
    }

    pub fn minkowski_sum(&self, other: &Self) -> Self {
        use SubdifferentialSet::*;
        match (self, other) {
            (Singleton { point: a }, Singleton { point: b }) => {
                Self::singleton(a.iter().zip(b).map(|(x, y)| x + y).collect())
            }
            (Singleton { point }, Box { lower, upper }) | (Box { lower, upper }, Singleton { point }) => {
                Self::interval_box(
                    lower.iter().zip(point).map(|(x, y)| x + y).collect(),
                    upper.iter().zip(point).map(|(x, y)| x + y).collect(),
                )
            }
            (Box { lower: l1, upper: u1 }, Box { lower: l2, upper: u2 }) => Self::interval_box(
                l1.iter().zip(l2).map(|(x, y)| x + y).collect(),
                u1.iter().zip(u2).map(|(x, y)| x + y).collect(),
            ),
            (a, b) => {
                let pa = a.sample_points();
                let pb = b.sample_points();
                let mut points = Vec::with_capacity(pa.len() * pb.len());
                for p in &pa {
                    for q in &pb {
                        points.push(p.iter().zip(q).map(|(x, y)| x + y).collect());
                    }
                }
                Self::Sampled { points }
            }
        }
    }

    /// Vertices for boxes, the point for singletons, the samples otherwise.
    pub fn sample_points(&self) -> Vec<Vec<f64>> {
        match self {
            Self::Singleton { point } => vec![point.clone()],
            Self::Box { lower, upper } => box_vertices(lower, upper),
            Self::Sampled { points } => points.clone(),
        }
    }

    /// Nearest element (for boxes, the coordinatewise clamp).
    pub fn project(&self, x: &[f64]) -> Vec<f64> {
        match self {
            Self::Singleton { point } => point.clone(),
            Self::Box { lower, upper } => x
                .iter()
                .zip(lower.iter().zip(upper))
                .map(|(v, (lo, hi))| v.clamp(*lo, *hi))
                .collect(),
            Self::Sampled { points } => points
                .iter()
                .min_by(|a, b| dist(a, x).total_cmp(&dist(b, x)))
                .cloned()
                .unwrap_or_default(),
        }
    }

    pub fn distance(&self, x: &[f64]) -> f64 {
        dist(&self.project(x), x)
    }

    pub fn min_norm_element(&self) -> Vec<f64> {
        self.project(&vec![0.0; self.dim()])
    }

    pub fn min_norm(&self) -> f64 {
        norm(&self.min_norm_element())
    }

    /// Membership up to a relative slack `tol`.
    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        match self {
            Self::Singleton { point } => dist(point, x) <= tol * (1.0 + norm(point)),
            Self::Box { lower, upper } => x
                .iter()
                .zip(lower.iter().zip(upper))
                .all(|(v, (lo, hi))| *v >= lo - slack(tol, *lo) && *v <= hi + slack(tol, *hi)),
            Self::Sampled { points } => points
                .iter()
                .any(|p| dist(p, x) <= tol * (1.0 + norm(p))),
        }
    }

    /// Intersection with `other`, with the result kept inside `self`.
    ///
    /// Interval products intersect exactly; near misses within `tol` are
    /// resolved to the closest element of `self`.
    pub fn intersect(&self, other: &Self, tol: f64) -> Option<Self> {
        use SubdifferentialSet::*;
        match (self, other) {
            (Singleton { point }, _) => other
                .contains(point, tol)
                .then(|| Self::singleton(point.clone())),
            (Box { .. }, Singleton { point }) => self
                .contains(point, tol)
                .then(|| Self::singleton(self.project(point))),
            (Box { lower: l1, upper: u1 }, Box { lower: l2, upper: u2 }) => {
                let mut lower = Vec::with_capacity(l1.len());
                let mut upper = Vec::with_capacity(l1.len());
                for i in 0..l1.len() {
                    let lo = l1[i].max(l2[i]);
                    let hi = u1[i].min(u2[i]);
                    if lo <= hi {
                        lower.push(lo);
                        upper.push(hi);
                    } else if lo - hi <= slack(tol, lo.abs().max(hi.abs())) {
                        let mid = (0.5 * (lo + hi)).clamp(l1[i], u1[i]);
                        lower.push(mid);
                        upper.push(mid);
                    } else {
                        return None;
                    }
                }
                Some(Self::interval_box(lower, upper))
            }
            (Sampled { points }, _) => {
                let kept: Vec<Vec<f64>> = points
                    .iter()
                    .filter(|p| other.contains(p, tol))
                    .cloned()
                    .collect();
                (!kept.is_empty()).then_some(Sampled { points: kept })
            }
            (Box { .. }, Sampled { points }) => {
                let kept: Vec<Vec<f64>> = points
                    .iter()
                    .filter(|p| self.contains(p, tol))
                    .map(|p| self.project(p))
                    .collect();
                (!kept.is_empty()).then_some(Sampled { points: kept })
            }
        }
    }
}

/// All `2^n` corners of a box (duplicates removed for degenerate sides).
pub fn box_vertices(lower: &[f64], upper: &[f64]) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = vec![Vec::with_capacity(lower.len())];
    for (lo, hi) in lower.iter().zip(upper) {
        let choices: &[f64] = if lo == hi { &[*lo][..] } else { &[*lo, *hi][..] };
        let choices = choices.to_vec();
        out = out
            .into_iter()
            .flat_map(|p| {
                choices.iter().map(move |c| {
                    let mut q = p.clone();
                    q.push(*c);
                    q
                })
            })
            .collect();
    }
    out
}
