use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::linalg::{dot, norm};
use crate::sets::SubdifferentialSet;
use crate::tolerances::KINK_TOL;

/// `amplitude * sin(<frequency, u> + phase)`
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Wave {
    pub amplitude: f64,
    pub frequency: Vec<f64>,
    #[serde(default)]
    pub phase: f64,
}

/// Lower semicontinuous energy, bounded below.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum EnergyFunctional {
    Zero { dim: usize },
    /// `(u - c)^T A (u - c) / 2` with `A` symmetric positive semidefinite.
    Quadratic { matrix: Vec<Vec<f64>>, center: Vec<f64> },
    /// A quadratic plus a sum of bounded sine waves.
    PerturbedQuadratic { matrix: Vec<Vec<f64>>, center: Vec<f64>, waves: Vec<Wave> },
    /// `slope * max(u, 0)` on the real line.
    PositivePart { slope: f64 },
    /// `min{(u - right)^2 / 2, (u - left)^2 / 2 + offset}` on the real line.
    DoubleWell { left: f64, right: f64, offset: f64 },
    /// Finite-difference Allen-Cahn energy on `(0, 1)` with `nodes` interior
    /// nodes and zero Dirichlet data: `sum h (|Du|^2 / 2 + (u^2 - 1)^2 / 4)`.
    AllenCahn { nodes: usize },
    /// `base` on a box, `+inf` outside.
    Restricted { base: Box<EnergyFunctional>, lower: Vec<f64>, upper: Vec<f64> },
}

fn mat_vec(a: &[Vec<f64>], x: &[f64]) -> Vec<f64> {
    a.iter().map(|row| dot(row, x)).collect()
}

fn min_eigenvalue(a: &[Vec<f64>]) -> f64 {
    let n = a.len();
    let m = DMatrix::from_fn(n, n, |i, j| a[i][j]);
    m.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min)
}

fn well_point(left: f64, right: f64, offset: f64) -> f64 {
    0.5 * (left + right) + offset / (left - right)
}

impl EnergyFunctional {
    /// `|u|^2 / 2` on `R^dim`.
    pub fn half_square(dim: usize) -> Self {
        let matrix = (0..dim)
            .map(|i| (0..dim).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .collect();
        Self::Quadratic { matrix, center: vec![0.0; dim] }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        match self {
            Self::Zero { dim } if *dim == 0 => bad("zero energy needs dim >= 1".into()),
            Self::Quadratic { matrix, center } | Self::PerturbedQuadratic { matrix, center, .. } => {
                let n = center.len();
                if n == 0 || matrix.len() != n || matrix.iter().any(|r| r.len() != n) {
                    return bad(format!("quadratic energy needs an {n}x{n} matrix"));
                }
                for i in 0..n {
                    for j in 0..n {
                        if (matrix[i][j] - matrix[j][i]).abs() > 1e-12 * (1.0 + matrix[i][j].abs()) {
                            return bad("quadratic energy matrix must be symmetric".into());
                        }
                    }
                }
                if min_eigenvalue(matrix) < -1e-12 {
                    return bad("quadratic energy matrix must be positive semidefinite".into());
                }
                if let Self::PerturbedQuadratic { waves, .. } = self {
                    if waves.iter().any(|w| w.frequency.len() != n) {
                        return bad("wave frequency length must match the dimension".into());
                    }
                }
                Ok(())
            }
            Self::PositivePart { slope } if !(*slope > 0.0) => bad(format!("slope {slope} must be positive")),
            Self::DoubleWell { left, right, .. } if left == right => bad("double well needs distinct wells".into()),
            Self::AllenCahn { nodes } if *nodes == 0 => bad("Allen-Cahn energy needs at least one node".into()),
            Self::Restricted { base, lower, upper } => {
                base.validate()?;
                if lower.len() != base.dim() || upper.len() != base.dim() {
                    return bad("restriction box must match the dimension".into());
                }
                if lower.iter().zip(upper).any(|(a, b)| !(a < b)) {
                    return bad("restriction box must have lower < upper".into());
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::Zero { dim } => *dim,
            Self::Quadratic { center, .. } | Self::PerturbedQuadratic { center, .. } => center.len(),
            Self::PositivePart { .. } | Self::DoubleWell { .. } => 1,
            Self::AllenCahn { nodes } => *nodes,
            Self::Restricted { base, .. } => base.dim(),
        }
    }

    pub fn value(&self, u: &[f64]) -> f64 {
        match self {
            Self::Zero { .. } => 0.0,
            Self::Quadratic { matrix, center } => {
                let d: Vec<f64> = u.iter().zip(center).map(|(a, b)| a - b).collect();
                0.5 * dot(&d, &mat_vec(matrix, &d))
            }
            Self::PerturbedQuadratic { matrix, center, waves } => {
                let d: Vec<f64> = u.iter().zip(center).map(|(a, b)| a - b).collect();
                0.5 * dot(&d, &mat_vec(matrix, &d))
                    + waves.iter().map(|w| w.amplitude * (dot(&w.frequency, u) + w.phase).sin()).sum::<f64>()
            }
            Self::PositivePart { slope } => slope * u[0].max(0.0),
            Self::DoubleWell { left, right, offset } => {
                let a = 0.5 * (u[0] - right).powi(2);
                let b = 0.5 * (u[0] - left).powi(2) + offset;
                a.min(b)
            }
            Self::AllenCahn { nodes } => {
                let h = 1.0 / (*nodes as f64 + 1.0);
                let mut e = 0.0;
                let mut prev = 0.0;
                for &x in u.iter().chain(std::iter::once(&0.0)) {
                    let du = (x - prev) / h;
                    e += 0.5 * h * du * du;
                    prev = x;
                }
                e + u.iter().map(|x| 0.25 * h * (x * x - 1.0).powi(2)).sum::<f64>()
            }
            Self::Restricted { base, lower, upper } => {
                let inside = u.iter().zip(lower.iter().zip(upper)).all(|(x, (a, b))| x >= a && x <= b);
                if inside {
                    base.value(u)
                } else {
                    f64::INFINITY
                }
            }
        }
    }

    /// Gradient where the energy is differentiable.
    pub fn gradient(&self, u: &[f64]) -> Option<Vec<f64>> {
        match self {
            Self::Zero { dim } => Some(vec![0.0; *dim]),
            Self::Quadratic { matrix, center } => {
                let d: Vec<f64> = u.iter().zip(center).map(|(a, b)| a - b).collect();
                Some(mat_vec(matrix, &d))
            }
            Self::PerturbedQuadratic { matrix, center, waves } => {
                let d: Vec<f64> = u.iter().zip(center).map(|(a, b)| a - b).collect();
                let mut g = mat_vec(matrix, &d);
                for w in waves {
                    let c = w.amplitude * (dot(&w.frequency, u) + w.phase).cos();
                    for (gi, fi) in g.iter_mut().zip(&w.frequency) {
                        *gi += c * fi;
                    }
                }
                Some(g)
            }
            Self::PositivePart { slope } => {
                if u[0] > KINK_TOL {
                    Some(vec![*slope])
                } else if u[0] < -KINK_TOL {
                    Some(vec![0.0])
                } else {
                    None
                }
            }
            Self::DoubleWell { left, right, offset } => {
                let k = well_point(*left, *right, *offset);
                if (u[0] - k).abs() <= KINK_TOL * (1.0 + k.abs()) {
                    return None;
                }
                let a = 0.5 * (u[0] - right).powi(2);
                let b = 0.5 * (u[0] - left).powi(2) + offset;
                Some(vec![if a <= b { u[0] - right } else { u[0] - left }])
            }
            Self::AllenCahn { nodes } => {
                let n = *nodes;
                let h = 1.0 / (n as f64 + 1.0);
                Some(
                    (0..n)
                        .map(|i| {
                            let l = if i == 0 { 0.0 } else { u[i - 1] };
                            let r = if i + 1 == n { 0.0 } else { u[i + 1] };
                            h * (u[i].powi(3) - u[i]) + (2.0 * u[i] - l - r) / h
                        })
                        .collect(),
                )
            }
            Self::Restricted { base, lower, upper } => {
                let interior = u.iter().zip(lower.iter().zip(upper)).all(|(x, (a, b))| x > a && x < b);
                if interior {
                    base.gradient(u)
                } else {
                    None
                }
            }
        }
    }

    /// Frechet subdifferential descriptor.
    pub fn subdifferential(&self, u: &[f64]) -> Result<SubdifferentialSet> {
        check_dim(self.dim(), u.len())?;
        if !self.value(u).is_finite() {
            return Err(Error::OutsideDomain(u.to_vec()));
        }
        if let Some(g) = self.gradient(u) {
            return Ok(SubdifferentialSet::singleton(g));
        }
        match self {
            Self::PositivePart { slope } => Ok(SubdifferentialSet::interval_box(vec![0.0], vec![*slope])),
            Self::Restricted { base, .. } => base.subdifferential(u),
            // The only nonsmooth point of the double well is a concave corner.
            _ => Err(Error::EmptySubdifferential(u.to_vec())),
        }
    }

    /// `inf E`, a finite lower bound.
    pub fn lower_bound(&self) -> f64 {
        match self {
            Self::PerturbedQuadratic { waves, .. } => -waves.iter().map(|w| w.amplitude.abs()).sum::<f64>(),
            Self::DoubleWell { offset, .. } => offset.min(0.0),
            Self::Restricted { base, .. } => base.lower_bound(),
            _ => 0.0,
        }
    }

    /// Modulus `lambda` of lambda-convexity, when known.
    pub fn lambda(&self) -> Option<f64> {
        match self {
            Self::Zero { .. } | Self::PositivePart { .. } => Some(0.0),
            Self::Quadratic { matrix, .. } => Some(min_eigenvalue(matrix)),
            Self::PerturbedQuadratic { matrix, waves, .. } => Some(
                min_eigenvalue(matrix)
                    - waves.iter().map(|w| w.amplitude.abs() * dot(&w.frequency, &w.frequency)).sum::<f64>(),
            ),
            Self::DoubleWell { .. } => None,
            Self::AllenCahn { nodes } => Some(-1.0 / (*nodes as f64 + 1.0)),
            Self::Restricted { base, .. } => base.lambda(),
        }
    }

    pub fn is_convex(&self) -> bool {
        self.lambda().is_some_and(|l| l >= 0.0)
    }

    /// Coordinate values where the energy has a kink.
    pub fn breakpoints(&self, coord: usize) -> Vec<f64> {
        match self {
            Self::PositivePart { .. } => vec![0.0],
            Self::DoubleWell { left, right, offset } => vec![well_point(*left, *right, *offset)],
            Self::Restricted { base, lower, upper } => {
                let mut b = base.breakpoints(coord);
                b.push(lower[coord]);
                b.push(upper[coord]);
                b
            }
            _ => Vec::new(),
        }
    }

    /// Radius of a ball about the origin containing `{E <= level}`, if bounded.
    pub fn sublevel_radius(&self, level: f64) -> Option<f64> {
        match self {
            Self::Quadratic { matrix, center } => {
                let l = min_eigenvalue(matrix);
                (l > 0.0).then(|| norm(center) + (2.0 * level.max(0.0) / l).sqrt())
            }
            Self::PerturbedQuadratic { matrix, center, .. } => {
                let l = min_eigenvalue(matrix);
                let lift = -self.lower_bound();
                (l > 0.0).then(|| norm(center) + (2.0 * (level + lift).max(0.0) / l).sqrt())
            }
            Self::DoubleWell { left, right, offset } => {
                let a = right.abs() + (2.0 * level.max(0.0)).sqrt();
                let b = left.abs() + (2.0 * (level - offset).max(0.0)).sqrt();
                Some(a.max(b))
            }
            Self::AllenCahn { nodes } => {
                let h = 1.0 / (*nodes as f64 + 1.0);
                let per = (1.0 + 2.0 * (level.max(0.0) / h).sqrt()).sqrt();
                Some((*nodes as f64).sqrt() * per)
            }
            Self::Restricted { base, lower, upper } => {
                let corner = lower
                    .iter()
                    .zip(upper)
                    .map(|(a, b)| a.abs().max(b.abs()).powi(2))
                    .sum::<f64>()
                    .sqrt();
                Some(base.sublevel_radius(level).map_or(corner, |r| r.min(corner)))
            }
            Self::Zero { .. } | Self::PositivePart { .. } => None,
        }
    }

    /// Local slope `|dE|(u)` for the Euclidean distance, when it follows from
    /// the subdifferential (smooth or lambda-convex energies).
    pub fn euclidean_slope(&self, u: &[f64]) -> Option<f64> {
        if let Some(g) = self.gradient(u) {
            return Some(norm(&g));
        }
        if self.lambda().is_some() {
            return self.subdifferential(u).ok().map(|s| s.min_norm());
        }
        None
    }
}
