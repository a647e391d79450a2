use rayon::prelude::*;

use super::{cluster, eval, Minimum, Objective, SolveConfig, SolveError, Window};

const MAX_GRID_POINTS: usize = 8_000_000;
const CANDIDATES: usize = 8;

/// Brute-force minimization for `dim <= 3`: exhaustive evaluation with
/// spacing `step`, then two local refinements by a factor of ten around the
/// lowest grid-local minima. Final resolution is `step / 100`.
///
/// A minimizer on the window boundary means the window was too small and is
/// reported as an error instead of a result.
pub fn grid_oracle(
    obj: &dyn Objective,
    window: &Window,
    step: f64,
    cfg: &SolveConfig,
) -> Result<Minimum, SolveError> {
    let n = obj.dim();
    if n > 3 {
        return Err(SolveError::OracleDimension(n));
    }
    if !(step.is_finite() && step > 0.0) {
        return Err(SolveError::Config(format!("oracle step must be positive, got {step}")));
    }
    let lo = window.lower();
    let hi = window.upper();
    let counts: Vec<usize> = (0..n)
        .map(|i| ((hi[i] - lo[i]) / step).ceil() as usize + 1)
        .collect();
    let total: usize = counts.iter().product();
    if total > MAX_GRID_POINTS {
        return Err(SolveError::Config(format!(
            "oracle grid of {total} points exceeds the limit of {MAX_GRID_POINTS}"
        )));
    }
    let point = |idx: usize| -> Vec<f64> {
        let mut rem = idx;
        (0..n)
            .map(|i| {
                let k = rem % counts[i];
                rem /= counts[i];
                (lo[i] + k as f64 * step).min(hi[i])
            })
            .collect()
    };
    let values: Vec<f64> = (0..total)
        .into_par_iter()
        .map(|idx| eval(obj, &point(idx)))
        .collect();

    let mut strides = vec![1usize; n];
    for i in 1..n {
        strides[i] = strides[i - 1] * counts[i - 1];
    }
    let mut locals: Vec<usize> = (0..total)
        .filter(|&idx| {
            let v = values[idx];
            if !v.is_finite() {
                return false;
            }
            (0..n).all(|i| {
                let k = (idx / strides[i]) % counts[i];
                let left_ok = k == 0 || v <= values[idx - strides[i]];
                let right_ok = k + 1 == counts[i] || v <= values[idx + strides[i]];
                left_ok && right_ok
            })
        })
        .collect();
    if locals.is_empty() {
        return Err(SolveError::NoFiniteValue);
    }
    locals.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
    locals.truncate(CANDIDATES);

    let mut candidates: Vec<(Vec<f64>, f64)> = locals
        .iter()
        .map(|&idx| (point(idx), values[idx]))
        .collect();
    let mut h = step;
    for _ in 0..2 {
        h /= 10.0;
        candidates = candidates
            .into_iter()
            .map(|(c, v)| refine(obj, window, &c, v, h))
            .collect();
    }

    let local_cfg = SolveConfig {
        merge_radius: cfg.merge_radius.max(2.0 * h),
        ..cfg.clone()
    };
    let min = cluster(candidates, &local_cfg)?;
    let rep = min.representative();
    if window.on_boundary(rep, 0.5 * h) {
        return Err(SolveError::BoundaryActive { point: rep.to_vec() });
    }
    Ok(min)
}

/// Best point of the `21^n` grid with spacing `h` centred at `c`.
fn refine(obj: &dyn Objective, window: &Window, c: &[f64], vc: f64, h: f64) -> (Vec<f64>, f64) {
    let n = c.len();
    let side = 21usize;
    let total = side.pow(n as u32);
    let mut best = (c.to_vec(), vc);
    for idx in 0..total {
        let mut rem = idx;
        let p: Vec<f64> = (0..n)
            .map(|i| {
                let k = (rem % side) as f64 - 10.0;
                rem /= side;
                c[i] + k * h
            })
            .collect();
        let p = window.clamp(&p);
        let v = eval(obj, &p);
        if v < best.1 {
            best = (p, v);
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::FnObjective;

    #[test]
    fn finds_shifted_quadratic_in_2d() {
        let obj = FnObjective::new(2, |x: &[f64]| (x[0] - 0.123).powi(2) + (x[1] + 0.456).powi(2));
        let w = Window::new(vec![-1.0, -1.0], vec![1.0, 1.0]).unwrap();
        let m = grid_oracle(&obj, &w, 0.01, &SolveConfig::default()).unwrap();
        assert!((m.representative()[0] - 0.123).abs() <= 1e-4);
        assert!((m.representative()[1] + 0.456).abs() <= 1e-4);
    }

    #[test]
    fn boundary_minimum_is_rejected() {
        let obj = FnObjective::new(1, |x: &[f64]| x[0]);
        let w = Window::new(vec![0.0], vec![1.0]).unwrap();
        let err = grid_oracle(&obj, &w, 0.01, &SolveConfig::default()).unwrap_err();
        assert!(matches!(err, SolveError::BoundaryActive { .. }));
    }

    #[test]
    fn rejects_high_dimension() {
        let obj = FnObjective::new(4, |_: &[f64]| 0.0);
        let w = Window::new(vec![0.0; 4], vec![1.0; 4]).unwrap();
        assert_eq!(
            grid_oracle(&obj, &w, 0.1, &SolveConfig::default()).unwrap_err(),
            SolveError::OracleDimension(4)
        );
    }
}
