use super::line::golden_section;
use super::{eval, Objective, SolveConfig, Window};
use crate::linalg::{dot, inf_norm};

/// Local minimization from `x0`: projected Barzilai-Borwein gradient steps
/// where a gradient exists, then cyclic coordinate line searches, repeated
/// until neither makes progress.
pub fn local_descent(
    obj: &dyn Objective,
    window: &Window,
    x0: &[f64],
    cfg: &SolveConfig,
) -> (Vec<f64>, f64) {
    let mut x = window.clamp(x0);
    let mut f = eval(obj, &x);
    if !f.is_finite() {
        return (x, f);
    }
    for _ in 0..200 {
        let before = f;
        gradient_phase(obj, window, &mut x, &mut f, cfg);
        if let Some(g) = obj.gradient(&x) {
            if projected_norm(window, &x, &g) <= 1e-11 * (1.0 + f.abs()) {
                break;
            }
        }
        coordinate_phase(obj, window, &mut x, &mut f);
        if before - f <= 1e-15 * (1.0 + f.abs()) {
            break;
        }
    }
    (x, f)
}

fn projected_step(window: &Window, x: &[f64], g: &[f64]) -> Vec<f64> {
    x.iter()
        .zip(g)
        .enumerate()
        .map(|(i, (xi, gi))| {
            let at_lo = *xi <= window.lower()[i] && *gi > 0.0;
            let at_hi = *xi >= window.upper()[i] && *gi < 0.0;
            if at_lo || at_hi {
                0.0
            } else {
                *gi
            }
        })
        .collect()
}

fn projected_norm(window: &Window, x: &[f64], g: &[f64]) -> f64 {
    inf_norm(&projected_step(window, x, g))
}

fn gradient_phase(
    obj: &dyn Objective,
    window: &Window,
    x: &mut Vec<f64>,
    f: &mut f64,
    cfg: &SolveConfig,
) {
    let grad = |p: &[f64]| obj.gradient(p).or_else(|| fd_gradient(obj, window, p));
    let Some(mut g) = grad(x) else {
        return;
    };
    let gn = inf_norm(&g);
    if gn == 0.0 {
        return;
    }
    let mut step = 1e-2 / gn;
    for _ in 0..cfg.max_iterations {
        let pg = projected_step(window, x, &g);
        if inf_norm(&pg) <= 1e-12 * (1.0 + f.abs()) {
            return;
        }
        let mut accepted = None;
        let mut t = step;
        for _ in 0..60 {
            let trial: Vec<f64> = window.clamp(
                &x.iter().zip(&g).map(|(xi, gi)| xi - t * gi).collect::<Vec<_>>(),
            );
            let ft = eval(obj, &trial);
            let decrease: f64 = x.iter().zip(&trial).zip(&g).map(|((a, b), gi)| gi * (a - b)).sum();
            if ft.is_finite() && ft <= *f - 1e-4 * decrease && ft <= *f {
                accepted = Some((trial, ft));
                break;
            }
            t *= 0.5;
        }
        let Some((trial, ft)) = accepted else {
            return;
        };
        let Some(gt) = grad(&trial) else {
            *x = trial;
            *f = ft;
            return;
        };
        let s: Vec<f64> = trial.iter().zip(x.iter()).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = gt.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        let improvement = *f - ft;
        step = if sy > 0.0 { dot(&s, &s) / sy } else { 2.0 * t };
        *x = trial;
        *f = ft;
        g = gt;
        if improvement <= 1e-16 * (1.0 + f.abs()) && inf_norm(&s) <= 1e-15 * (1.0 + inf_norm(x)) {
            return;
        }
    }
}

/// Central differences, one-sided at the window faces.
fn fd_gradient(obj: &dyn Objective, window: &Window, x: &[f64]) -> Option<Vec<f64>> {
    let mut g = Vec::with_capacity(x.len());
    let mut p = x.to_vec();
    for i in 0..x.len() {
        let h = 1e-7 * (1.0 + x[i].abs());
        let a = (x[i] - h).max(window.lower()[i]);
        let b = (x[i] + h).min(window.upper()[i]);
        p[i] = a;
        let fa = eval(obj, &p);
        p[i] = b;
        let fb = eval(obj, &p);
        p[i] = x[i];
        let d = (fb - fa) / (b - a);
        if !d.is_finite() {
            return None;
        }
        g.push(d);
    }
    Some(g)
}

fn coordinate_phase(obj: &dyn Objective, window: &Window, x: &mut [f64], f: &mut f64) {
    for i in 0..x.len() {
        let base = x.to_vec();
        let line = |t: f64| {
            let mut p = base.clone();
            p[i] = t;
            eval(obj, &p)
        };
        let h0 = 1e-3 * (1.0 + x[i].abs());
        let right = expand(&line, x[i], *f, h0, window.upper()[i]);
        let left = expand(&line, x[i], *f, -h0, window.lower()[i]);
        let (t, v) = golden_section(&line, left, right);
        if v < *f {
            x[i] = t;
            *f = v;
        }
    }
}

/// Walks from `x` in steps `h, 2h, 4h, ...` until the value rises or the
/// bound is reached; returns the far end of the bracket.
fn expand(line: &impl Fn(f64) -> f64, x: f64, fx: f64, h: f64, bound: f64) -> f64 {
    let mut prev = fx;
    let mut step = h;
    loop {
        let t = if h > 0.0 { (x + step).min(bound) } else { (x + step).max(bound) };
        let ft = line(t);
        if ft > prev || t == bound {
            return t;
        }
        prev = ft;
        step *= 2.0;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::FnObjective;

    struct Bowl;
    impl Objective for Bowl {
        fn dim(&self) -> usize {
            3
        }
        fn value(&self, x: &[f64]) -> f64 {
            (x[0] - 1.0).powi(2) + 4.0 * (x[1] + 0.5).powi(2) + 0.5 * (x[2] - 0.25).powi(2)
        }
        fn gradient(&self, x: &[f64]) -> Option<Vec<f64>> {
            Some(vec![2.0 * (x[0] - 1.0), 8.0 * (x[1] + 0.5), x[2] - 0.25])
        }
    }

    #[test]
    fn smooth_bowl_converges_tightly() {
        let w = Window::new(vec![-3.0; 3], vec![3.0; 3]).unwrap();
        let (x, _) = local_descent(&Bowl, &w, &[0.0, 0.0, 0.0], &SolveConfig::default());
        assert!((x[0] - 1.0).abs() < 1e-9);
        assert!((x[1] + 0.5).abs() < 1e-9);
        assert!((x[2] - 0.25).abs() < 1e-9);
    }

    #[test]
    fn nonsmooth_separable_uses_coordinate_search() {
        let obj = FnObjective::new(2, |x: &[f64]| (x[0] - 0.5).abs() + (x[1] + 1.0).abs());
        let w = Window::new(vec![-3.0; 2], vec![3.0; 2]).unwrap();
        let (x, f) = local_descent(&obj, &w, &[2.0, 2.0], &SolveConfig::default());
        assert!(f < 1e-12, "{x:?}");
    }

    #[test]
    fn box_constraint_is_respected() {
        let obj = FnObjective::new(2, |x: &[f64]| (x[0] - 5.0).powi(2) + x[1] * x[1]);
        let w = Window::new(vec![-1.0; 2], vec![1.0; 2]).unwrap();
        let (x, _) = local_descent(&obj, &w, &[0.0, 0.5], &SolveConfig::default());
        assert!((x[0] - 1.0).abs() < 1e-12);
    }
}
