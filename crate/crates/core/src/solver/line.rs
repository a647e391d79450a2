const INV_PHI: f64 = 0.618_033_988_749_894_8;

/// Golden-section search on `[a, b]`; returns the best point seen, endpoints
/// included.
pub fn golden_section(f: impl Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let (a0, b0) = (a, b);
    let mut best = (a0, f(a0));
    let fb = f(b0);
    if fb < best.1 {
        best = (b0, fb);
    }
    if b0 <= a0 {
        return best;
    }
    let (mut a, mut b) = (a0, b0);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..300 {
        if b - a <= 2.0 * f64::EPSILON * (a.abs() + b.abs()) + f64::MIN_POSITIVE {
            break;
        }
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
        if c >= d {
            break;
        }
    }
    for (x, v) in [(c, fc), (d, fd)] {
        if v < best.1 || (v == best.1 && x < best.0) {
            best = (x, v);
        }
    }
    best
}

/// Root of a nondecreasing function on `[a, b]` with `g(a) <= 0 <= g(b)`,
/// bisected down to adjacent floats.
pub fn bisect_root(g: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        let gm = g(m);
        if gm.is_nan() {
            break;
        }
        if gm < 0.0 {
            a = m;
        } else if gm > 0.0 {
            b = m;
        } else {
            return m;
        }
    }
    0.5 * (a + b)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn golden_finds_interior_min() {
        let (x, v) = golden_section(|t| (t - 1.25).powi(2) + 3.0, 0.0, 4.0);
        assert!((x - 1.25).abs() < 1e-7);
        assert!((v - 3.0).abs() < 1e-14);
    }

    #[test]
    fn golden_finds_kink_to_machine_precision() {
        let (x, _) = golden_section(|t: f64| (t - 0.3).abs(), -1.0, 1.0);
        assert!((x - 0.3).abs() < 1e-14);
    }

    #[test]
    fn golden_respects_endpoints() {
        let (x, _) = golden_section(|t| t, 2.0, 5.0);
        assert_eq!(x, 2.0);
    }

    #[test]
    fn bisect_monotone_root() {
        let r = bisect_root(|t| t * t * t - 2.0, 0.0, 2.0);
        assert!((r - 2f64.cbrt()).abs() < 1e-15);
    }
}
