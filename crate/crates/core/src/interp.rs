//! Cubic Hermite interpolation of sampled curves.

/// Value at `at` of the cubic Hermite interpolant through `(t_i, y_i)` with
/// slopes `dy_i`. `t` must be strictly increasing; points outside the range
/// are extrapolated from the nearest interval.
pub fn hermite(t: &[f64], y: &[f64], dy: &[f64], at: f64) -> f64 {
    assert!(t.len() >= 2 && t.len() == y.len() && t.len() == dy.len());
    let k = match t.partition_point(|ti| *ti <= at) {
        0 => 0,
        i if i >= t.len() => t.len() - 2,
        i => i - 1,
    };
    let h = t[k + 1] - t[k];
    let s = (at - t[k]) / h;
    let (s2, s3) = (s * s, s * s * s);
    let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
    let h10 = s3 - 2.0 * s2 + s;
    let h01 = -2.0 * s3 + 3.0 * s2;
    let h11 = s3 - s2;
    h00 * y[k] + h10 * h * dy[k] + h01 * y[k + 1] + h11 * h * dy[k + 1]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reproduces_cubics() {
        let t = [0.0, 0.5, 1.5, 2.0];
        let f = |x: f64| x * x * x - 2.0 * x + 1.0;
        let df = |x: f64| 3.0 * x * x - 2.0;
        let y: Vec<f64> = t.iter().map(|x| f(*x)).collect();
        let d: Vec<f64> = t.iter().map(|x| df(*x)).collect();
        for at in [0.1, 0.5, 0.9, 1.7, 2.0] {
            assert!((hermite(&t, &y, &d, at) - f(at)).abs() < 1e-12);
        }
    }
}
