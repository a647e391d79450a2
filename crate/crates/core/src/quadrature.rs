//! Adaptive trapezoidal integration along a trace of step solutions.
//!
//! Nodes start from a geometric sequence `sigma_max * 2^-j` down to
//! `near_zero_ratio * sigma_max`, a uniform fill, and any requested sample
//! points. Intervals whose local error indicator exceeds `local_tol` are
//! bisected until they are resolved, which localizes jumps of the integrand
//! to a tiny width. The piece `(0, rho_min]` is integrated by a rectangle.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuadratureConfig {
    pub uniform_nodes: usize,
    pub near_zero_ratio: f64,
    pub local_tol: f64,
    pub max_rounds: usize,
    pub max_nodes: usize,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            uniform_nodes: 1024,
            near_zero_ratio: 1e-4,
            local_tol: 1e-8,
            max_rounds: 48,
            max_nodes: 20_000,
        }
    }
}

impl QuadratureConfig {
    pub fn with_uniform_nodes(mut self, n: usize) -> Self {
        self.uniform_nodes = n;
        self
    }
}

/// Trace states with cumulative integrals of each integrand.
#[derive(Clone, Debug)]
pub struct AdaptiveTrace<S> {
    pub sigmas: Vec<f64>,
    pub states: Vec<S>,
    /// `integrals[k][i]`: integral of integrand `k` over `(0, sigmas[i]]`.
    pub integrals: Vec<Vec<f64>>,
    /// `errors[k][i]`: accumulated local error indicators up to `sigmas[i]`.
    pub errors: Vec<Vec<f64>>,
}

impl<S> AdaptiveTrace<S> {
    /// Index of the node at `sigma` (which must have been requested).
    pub fn index_of(&self, sigma: f64) -> Option<usize> {
        let i = self.sigmas.partition_point(|s| *s < sigma);
        (i < self.sigmas.len() && same_point(self.sigmas[i], sigma)).then_some(i)
    }
}

fn same_point(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-15 * a.abs().max(b.abs())
}

/// Initial node set on `(0, sigma_max]`.
pub fn initial_nodes(sigma_max: f64, required: &[f64], cfg: &QuadratureConfig) -> Vec<f64> {
    let rho_min = cfg.near_zero_ratio * sigma_max;
    let mut nodes = vec![rho_min];
    let mut g = sigma_max;
    while g > rho_min {
        nodes.push(g);
        g *= 0.5;
    }
    let n = cfg.uniform_nodes.max(1);
    nodes.extend((1..=n).map(|k| sigma_max * k as f64 / n as f64));
    nodes.extend(required.iter().copied().filter(|s| *s > 0.0 && *s <= sigma_max));
    nodes.sort_by(f64::total_cmp);
    nodes.dedup_by(|a, b| same_point(*a, *b));
    nodes
}

fn local_errors(xs: &[f64], fs: &[Vec<f64>]) -> Vec<f64> {
    let m = xs.len();
    let k = fs.first().map_or(0, Vec::len);
    let dev = |j: usize, c: usize| -> f64 {
        if j == 0 || j + 1 >= m {
            return 0.0;
        }
        let (x0, x1, x2) = (xs[j - 1], xs[j], xs[j + 1]);
        let lerp = (fs[j - 1][c] * (x2 - x1) + fs[j + 1][c] * (x1 - x0)) / (x2 - x0);
        (fs[j][c] - lerp).abs()
    };
    (0..m.saturating_sub(1))
        .map(|i| {
            let w = xs[i + 1] - xs[i];
            (0..k)
                .map(|c| {
                    let d = dev(i, c).max(dev(i + 1, c));
                    let jump = if m == 2 { (fs[1][c] - fs[0][c]).abs() } else { 0.0 };
                    w * d.max(jump)
                })
                .fold(0.0, f64::max)
        })
        .collect()
}

/// Evaluates `eval` on an adaptively refined grid and integrates each
/// component of `integrands` along it.
pub fn adaptive_trace<S, E, F, G>(
    sigma_max: f64,
    required: &[f64],
    cfg: &QuadratureConfig,
    eval: F,
    integrands: G,
) -> Result<AdaptiveTrace<S>, E>
where
    S: Send,
    E: Send,
    F: Fn(f64) -> Result<S, E> + Sync,
    G: Fn(&S) -> Vec<f64>,
{
    let mut xs = initial_nodes(sigma_max, required, cfg);
    let mut states: Vec<S> = xs.par_iter().map(|&s| eval(s)).collect::<Result<_, E>>()?;
    let mut fs: Vec<Vec<f64>> = states.iter().map(&integrands).collect();
    let min_width = 1e-12 * sigma_max;

    for _ in 0..cfg.max_rounds {
        let errs = local_errors(&xs, &fs);
        let split: Vec<usize> = (0..errs.len())
            .filter(|&i| errs[i] > cfg.local_tol && xs[i + 1] - xs[i] > min_width)
            .collect();
        if split.is_empty() || xs.len() + split.len() > cfg.max_nodes {
            break;
        }
        let mids: Vec<f64> = split.iter().map(|&i| 0.5 * (xs[i] + xs[i + 1])).collect();
        let new_states: Vec<S> = mids.par_iter().map(|&s| eval(s)).collect::<Result<_, E>>()?;
        let mut merged_x = Vec::with_capacity(xs.len() + mids.len());
        let mut merged_s = Vec::with_capacity(xs.len() + mids.len());
        let mut merged_f = Vec::with_capacity(xs.len() + mids.len());
        let mut incoming = split.iter().zip(mids.into_iter().zip(new_states)).peekable();
        for (i, (x, s)) in xs.into_iter().zip(states).enumerate() {
            merged_x.push(x);
            merged_f.push(fs[i].clone());
            merged_s.push(s);
            if let Some((&j, _)) = incoming.peek() {
                if j == i {
                    let (_, (mx, ms)) = incoming.next().expect("peeked");
                    merged_f.push(integrands(&ms));
                    merged_x.push(mx);
                    merged_s.push(ms);
                }
            }
        }
        xs = merged_x;
        states = merged_s;
        fs = merged_f;
    }

    let errs = local_errors(&xs, &fs);
    let k = fs.first().map_or(0, Vec::len);
    let mut integrals = vec![Vec::with_capacity(xs.len()); k];
    let mut errors = vec![Vec::with_capacity(xs.len()); k];
    for c in 0..k {
        let mut acc = fs[0][c] * xs[0];
        let mut err = 0.0;
        integrals[c].push(acc);
        errors[c].push(err);
        for i in 0..xs.len() - 1 {
            acc += 0.5 * (xs[i + 1] - xs[i]) * (fs[i][c] + fs[i + 1][c]);
            err += errs[i];
            integrals[c].push(acc);
            errors[c].push(err);
        }
    }
    Ok(AdaptiveTrace { sigmas: xs, states, integrals, errors })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(f: impl Fn(f64) -> f64 + Sync, sigma_max: f64) -> AdaptiveTrace<f64> {
        adaptive_trace::<f64, (), _, _>(
            sigma_max,
            &[],
            &QuadratureConfig::default(),
            |s| Ok(f(s)),
            |v| vec![*v],
        )
        .unwrap()
    }

    #[test]
    fn smooth_integrand() {
        let t = run(|s| s.cos(), 2.0);
        let last = *t.integrals[0].last().unwrap();
        assert!((last - 2f64.sin()).abs() < 1e-6);
    }

    #[test]
    fn jump_is_localized() {
        let t = run(|s| if s < 1.0 / 3.0 { 1.125 } else { 4.5 }, 2.0);
        let exact = 1.125 / 3.0 + 4.5 * (2.0 - 1.0 / 3.0);
        let last = *t.integrals[0].last().unwrap();
        assert!((last - exact).abs() < 1e-7, "{last} vs {exact}");
        assert!(*t.errors[0].last().unwrap() < 1e-5);
    }

    #[test]
    fn kink_and_decay() {
        let f = |s: f64| if s <= 1.0 { 0.5 } else { 0.5 / (s * s) };
        let t = run(f, 4.0);
        let exact = 0.5 + 0.5 * (1.0 - 0.25);
        assert!((t.integrals[0].last().unwrap() - exact).abs() < 1e-6);
    }

    #[test]
    fn requested_points_are_nodes() {
        let t = adaptive_trace::<f64, (), _, _>(
            4.0,
            &[0.3, 2.0 / 3.0],
            &QuadratureConfig::default(),
            |s| Ok(s),
            |v| vec![*v],
        )
        .unwrap();
        assert!(t.index_of(0.3).is_some());
        assert!(t.index_of(2.0 / 3.0).is_some());
        let i = t.index_of(2.0).unwrap();
        assert!((t.integrals[0][i] - 2.0).abs() < 1e-7);
    }

    #[test]
    fn nodes_are_sorted_and_start_near_zero() {
        let nodes = initial_nodes(8.0, &[5.5], &QuadratureConfig::default());
        assert!(nodes.windows(2).all(|w| w[0] < w[1]));
        assert!((nodes[0] - 8e-4).abs() < 1e-15);
        assert_eq!(*nodes.last().unwrap(), 8.0);
    }
}
