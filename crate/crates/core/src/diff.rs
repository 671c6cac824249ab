//! Central finite differences.
//!
//! First derivatives use the step `cbrt(eps) * max(1, |x|)`; second
//! derivatives use a nested stencil with step `eps^(1/4) * max(1, |x|)`.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Step for a first-derivative central difference at `x`.
pub fn step(x: f64) -> f64 {
    f64::EPSILON.cbrt() * x.abs().max(1.0)
}

/// Step for a second-derivative stencil at `x`.
pub fn step2(x: f64) -> f64 {
    f64::EPSILON.sqrt().sqrt() * x.abs().max(1.0)
}

fn finite_or(value: f64, at: &[f64]) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::DerivativeFailure { at: at.to_vec() })
    }
}

/// Derivative of a scalar function of one variable.
pub fn derivative<F: Fn(f64) -> f64 + ?Sized>(f: &F, x: f64) -> Result<f64> {
    let h = step(x);
    let (xp, xm) = (x + h, x - h);
    finite_or((f(xp) - f(xm)) / (xp - xm), &[x])
}

/// Second derivative of a scalar function of one variable.
pub fn second_derivative<F: Fn(f64) -> f64 + ?Sized>(f: &F, x: f64) -> Result<f64> {
    let h = step2(x);
    finite_or((f(x + h) - 2.0 * f(x) + f(x - h)) / (h * h), &[x])
}

/// Partial derivative `df/dx_i`.
pub fn partial<F: Fn(&[f64]) -> f64 + ?Sized>(f: &F, x: &[f64], i: usize) -> Result<f64> {
    let h = step(x[i]);
    let mut xp = x.to_vec();
    let mut xm = x.to_vec();
    xp[i] += h;
    xm[i] -= h;
    let d = xp[i] - xm[i];
    finite_or((f(&xp) - f(&xm)) / d, x)
}

/// Gradient by central differences.
pub fn gradient<F: Fn(&[f64]) -> f64 + ?Sized>(f: &F, x: &[f64]) -> Result<Vec<f64>> {
    (0..x.len()).map(|i| partial(f, x, i)).collect()
}

/// Jacobian of a vector function; column `j` holds `df/dx_j`.
pub fn jacobian<F: Fn(&[f64]) -> Vec<f64> + ?Sized>(f: &F, x: &[f64]) -> Result<DMatrix<f64>> {
    let m = f(x).len();
    let mut jac = DMatrix::zeros(m, x.len());
    let mut xp = x.to_vec();
    let mut xm = x.to_vec();
    for j in 0..x.len() {
        let h = step(x[j]);
        xp[j] = x[j] + h;
        xm[j] = x[j] - h;
        let d = xp[j] - xm[j];
        let fp = f(&xp);
        let fm = f(&xm);
        for i in 0..m {
            jac[(i, j)] = finite_or((fp[i] - fm[i]) / d, x)?;
        }
        xp[j] = x[j];
        xm[j] = x[j];
    }
    Ok(jac)
}

/// Second partial `d2f/dx_i dx_j` by the nested central stencil.
pub fn second_partial<F: Fn(&[f64]) -> f64 + ?Sized>(
    f: &F,
    x: &[f64],
    i: usize,
    j: usize,
) -> Result<f64> {
    let hi = step2(x[i]);
    let mut y = x.to_vec();
    if i == j {
        y[i] = x[i] + hi;
        let fp = f(&y);
        y[i] = x[i] - hi;
        let fm = f(&y);
        return finite_or((fp - 2.0 * f(x) + fm) / (hi * hi), x);
    }
    let hj = step2(x[j]);
    let mut eval = |si: f64, sj: f64| {
        y[i] = x[i] + si * hi;
        y[j] = x[j] + sj * hj;
        f(&y)
    };
    let v = eval(1.0, 1.0) - eval(1.0, -1.0) - eval(-1.0, 1.0) + eval(-1.0, -1.0);
    finite_or(v / (4.0 * hi * hj), x)
}

/// Hessian of a scalar function by nested central differences.
pub fn hessian<F: Fn(&[f64]) -> f64 + ?Sized>(f: &F, x: &[f64]) -> Result<DMatrix<f64>> {
    let n = x.len();
    let mut h = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let v = second_partial(f, x, i, j)?;
            h[(i, j)] = v;
            h[(j, i)] = v;
        }
    }
    Ok(h)
}

fn is_uniform(t: &[f64]) -> bool {
    if t.len() < 3 {
        return true;
    }
    let h = (t[t.len() - 1] - t[0]) / (t.len() - 1) as f64;
    t.windows(2)
        .all(|w| ((w[1] - w[0]) - h).abs() <= 1e-9 * h.abs())
}

/// Derivative of sampled values with respect to the sample parameter.
///
/// Uniform grids with at least five samples use fourth-order stencils
/// (five-point one-sided formulas near the ends); other grids use the
/// three-point non-uniform formula.
pub fn along(t: &[f64], y: &[f64]) -> Vec<f64> {
    let n = t.len();
    assert_eq!(n, y.len(), "sample count mismatch");
    if n < 2 {
        return vec![0.0; n];
    }
    if n >= 5 && is_uniform(t) {
        let h = (t[n - 1] - t[0]) / (n - 1) as f64;
        let mut d = vec![0.0; n];
        for i in 2..n - 2 {
            d[i] = (y[i - 2] - 8.0 * y[i - 1] + 8.0 * y[i + 1] - y[i + 2]) / (12.0 * h);
        }
        d[0] = (-25.0 * y[0] + 48.0 * y[1] - 36.0 * y[2] + 16.0 * y[3] - 3.0 * y[4]) / (12.0 * h);
        d[1] = (-3.0 * y[0] - 10.0 * y[1] + 18.0 * y[2] - 6.0 * y[3] + y[4]) / (12.0 * h);
        let k = n - 1;
        d[k] = (25.0 * y[k] - 48.0 * y[k - 1] + 36.0 * y[k - 2] - 16.0 * y[k - 3] + 3.0 * y[k - 4])
            / (12.0 * h);
        d[k - 1] = (3.0 * y[k] + 10.0 * y[k - 1] - 18.0 * y[k - 2] + 6.0 * y[k - 3] - y[k - 4])
            / (12.0 * h);
        return d;
    }
    let mut d = vec![0.0; n];
    if n == 2 {
        let s = (y[1] - y[0]) / (t[1] - t[0]);
        return vec![s, s];
    }
    for i in 1..n - 1 {
        let h0 = t[i] - t[i - 1];
        let h1 = t[i + 1] - t[i];
        d[i] = (-h1 / (h0 * (h0 + h1))) * y[i - 1]
            + ((h1 - h0) / (h0 * h1)) * y[i]
            + (h0 / (h1 * (h0 + h1))) * y[i + 1];
    }
    let (h0, h1) = (t[1] - t[0], t[2] - t[1]);
    d[0] = -(2.0 * h0 + h1) / (h0 * (h0 + h1)) * y[0] + (h0 + h1) / (h0 * h1) * y[1]
        - h0 / (h1 * (h0 + h1)) * y[2];
    let k = n - 1;
    let (h0, h1) = (t[k - 1] - t[k - 2], t[k] - t[k - 1]);
    d[k] = h1 / (h0 * (h0 + h1)) * y[k - 2] - (h0 + h1) / (h0 * h1) * y[k - 1]
        + (2.0 * h1 + h0) / (h1 * (h0 + h1)) * y[k];
    d
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derivative_of_cubic() {
        let f = |x: f64| x * x * x;
        let d = derivative(&f, 2.0).unwrap();
        assert!((d - 12.0).abs() < 1e-8);
        let d2 = second_derivative(&f, 2.0).unwrap();
        assert!((d2 - 12.0).abs() < 1e-5);
    }

    #[test]
    fn gradient_and_hessian_of_quadratic_form() {
        // f = x0^2 + 3 x0 x1 - x1^2
        let f = |x: &[f64]| x[0] * x[0] + 3.0 * x[0] * x[1] - x[1] * x[1];
        let g = gradient(&f, &[1.0, 2.0]).unwrap();
        assert!((g[0] - 8.0).abs() < 1e-9);
        assert!((g[1] - -1.0).abs() < 1e-9);
        let h = hessian(&f, &[1.0, 2.0]).unwrap();
        assert!((h[(0, 0)] - 2.0).abs() < 1e-6);
        assert!((h[(0, 1)] - 3.0).abs() < 1e-6);
        assert!((h[(1, 1)] + 2.0).abs() < 1e-6);
    }

    #[test]
    fn jacobian_columns() {
        let f = |x: &[f64]| vec![x[0] * x[1], x[1].sin()];
        let j = jacobian(&f, &[2.0, 0.5]).unwrap();
        assert!((j[(0, 0)] - 0.5).abs() < 1e-9);
        assert!((j[(0, 1)] - 2.0).abs() < 1e-9);
        assert!((j[(1, 0)]).abs() < 1e-12);
        assert!((j[(1, 1)] - 0.5f64.cos()).abs() < 1e-9);
    }

    #[test]
    fn along_uniform_is_fourth_order() {
        let err = |n: usize| {
            let t: Vec<f64> = (0..n).map(|i| i as f64 / (n - 1) as f64).collect();
            let y: Vec<f64> = t.iter().map(|t| t.sin()).collect();
            let d = along(&t, &y);
            t.iter()
                .zip(&d)
                .map(|(t, d)| (d - t.cos()).abs())
                .fold(0.0, f64::max)
        };
        let ratio = err(51) / err(101);
        assert!(ratio > 12.0, "ratio {ratio}");
    }

    #[test]
    fn along_nonuniform_is_exact_for_quadratics() {
        let t = [0.0, 0.1, 0.3, 0.35, 0.7];
        let y: Vec<f64> = t.iter().map(|t| 2.0 * t * t - t + 1.0).collect();
        let d = along(&t, &y);
        for (t, d) in t.iter().zip(&d) {
            assert!((d - (4.0 * t - 1.0)).abs() < 1e-10);
        }
    }
}
