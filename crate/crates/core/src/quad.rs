//! Trapezoid quadrature.

/// Trapezoid integral of sampled values.
pub fn trapezoid(t: &[f64], y: &[f64]) -> f64 {
    assert_eq!(t.len(), y.len(), "sample count mismatch");
    t.windows(2)
        .zip(y.windows(2))
        .map(|(t, y)| 0.5 * (t[1] - t[0]) * (y[0] + y[1]))
        .sum()
}

/// Running trapezoid integral; the first entry is zero.
pub fn cumulative_trapezoid(t: &[f64], y: &[f64]) -> Vec<f64> {
    assert_eq!(t.len(), y.len(), "sample count mismatch");
    let mut out = Vec::with_capacity(t.len());
    let mut acc = 0.0;
    if !t.is_empty() {
        out.push(0.0);
    }
    for i in 1..t.len() {
        acc += 0.5 * (t[i] - t[i - 1]) * (y[i] + y[i - 1]);
        out.push(acc);
    }
    out
}

/// Trapezoid integral of `f` over `[a, b]`, doubling the panel count until
/// successive estimates agree to `rel_tol` (at most 2^22 panels).
pub fn integrate<F: Fn(f64) -> f64 + ?Sized>(f: &F, a: f64, b: f64, rel_tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let mut n: usize = 64;
    let h = (b - a) / n as f64;
    let mut sum = 0.5 * (f(a) + f(b)) + (1..n).map(|i| f(a + i as f64 * h)).sum::<f64>();
    let mut est = sum * h;
    while n < (1 << 22) {
        let h = (b - a) / (2 * n) as f64;
        sum += (0..n).map(|i| f(a + (2 * i + 1) as f64 * h)).sum::<f64>();
        n *= 2;
        let next = sum * h;
        let done = (next - est).abs() <= rel_tol * next.abs().max(f64::MIN_POSITIVE);
        est = next;
        if done {
            break;
        }
    }
    est
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trapezoid_is_exact_for_linear() {
        let t = [0.0, 0.5, 2.0];
        let y = [1.0, 2.0, 5.0];
        assert!((trapezoid(&t, &y) - 6.0).abs() < 1e-15);
        assert_eq!(cumulative_trapezoid(&t, &y), vec![0.0, 0.75, 6.0]);
    }

    #[test]
    fn integrate_periodic_over_full_periods() {
        let v = integrate(&|s: f64| 2.0 + (3.0 * s).sin(), 0.0, 2.0 * std::f64::consts::PI, 1e-14);
        assert!((v - 4.0 * std::f64::consts::PI).abs() < 1e-12);
    }

    #[test]
    fn integrate_smooth_converges() {
        let v = integrate(&|s: f64| s.exp(), 0.0, 1.0, 1e-13);
        assert!((v - (1f64.exp() - 1.0)).abs() < 1e-11);
    }
}
