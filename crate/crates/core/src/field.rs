//! Scalar functions of one variable with optional exact derivatives.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use crate::diff;

pub type Fn1 = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A real function of one variable, e.g. `phi(t)`, `phi(q)`, `U(t)` or a
/// parametrization rate.
#[derive(Clone)]
pub struct ScalarField {
    value: Fn1,
    derivative: Option<Fn1>,
    label: String,
}

impl fmt::Debug for ScalarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ScalarField")
            .field("label", &self.label)
            .field("exact_derivative", &self.derivative.is_some())
            .finish()
    }
}

impl ScalarField {
    /// Field with derivatives taken by central differences.
    pub fn new(label: impl Into<String>, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            value: Arc::new(f),
            derivative: None,
            label: label.into(),
        }
    }

    /// Field with an exact derivative.
    pub fn with_derivative(
        label: impl Into<String>,
        f: impl Fn(f64) -> f64 + Send + Sync + 'static,
        df: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            value: Arc::new(f),
            derivative: Some(Arc::new(df)),
            label: label.into(),
        }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn has_exact_derivative(&self) -> bool {
        self.derivative.is_some()
    }

    pub fn value(&self, s: f64) -> f64 {
        (self.value)(s)
    }

    /// Derivative, exact when available and a central difference otherwise
    /// (NaN if the difference is not finite).
    pub fn derivative(&self, s: f64) -> f64 {
        match &self.derivative {
            Some(df) => df(s),
            None => diff::derivative(&*self.value, s).unwrap_or(f64::NAN),
        }
    }

    /// `d ln f / ds`.
    pub fn log_derivative(&self, s: f64) -> f64 {
        self.derivative(s) / self.value(s)
    }

    pub fn constant(c: f64) -> Self {
        Self::with_derivative(format!("constant({c})"), move |_| c, |_| 0.0)
    }

    /// `sum_k coeffs[k] s^k`.
    pub fn polynomial(coeffs: Vec<f64>) -> Self {
        let label = format!("polynomial({coeffs:?})");
        let c2 = coeffs.clone();
        Self::with_derivative(
            label,
            move |s| coeffs.iter().rev().fold(0.0, |acc, c| acc * s + c),
            move |s| {
                c2.iter()
                    .enumerate()
                    .skip(1)
                    .rev()
                    .fold(0.0, |acc, (k, c)| acc * s + k as f64 * c)
            },
        )
    }

    /// `offset + amplitude sin(omega s + phase)`.
    pub fn sinusoid(offset: f64, amplitude: f64, omega: f64, phase: f64) -> Self {
        Self::with_derivative(
            format!("sinusoid({offset}, {amplitude}, {omega}, {phase})"),
            move |s| offset + amplitude * (omega * s + phase).sin(),
            move |s| amplitude * omega * (omega * s + phase).cos(),
        )
    }

    /// `base + amplitude sin^2(pi s / width)` on `[0, width]`, `base` elsewhere.
    /// The fluctuation integrates to `amplitude * width / 2`.
    pub fn bump(base: f64, amplitude: f64, width: f64) -> Self {
        let inside = move |s: f64| (0.0..=width).contains(&s);
        Self::with_derivative(
            format!("bump({base}, {amplitude}, {width})"),
            move |s| {
                if inside(s) {
                    base + amplitude * (PI * s / width).sin().powi(2)
                } else {
                    base
                }
            },
            move |s| {
                if inside(s) {
                    amplitude * (PI / width) * (2.0 * PI * s / width).sin()
                } else {
                    0.0
                }
            },
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_value_and_derivative() {
        let p = ScalarField::polynomial(vec![1.0, 0.0, 1.0]);
        assert_eq!(p.value(2.0), 5.0);
        assert_eq!(p.derivative(2.0), 4.0);
        assert!((p.log_derivative(1.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn fallback_derivative_matches_exact() {
        let exact = ScalarField::sinusoid(2.0, 0.5, 3.0, 0.1);
        let fd = ScalarField::new("s", |s: f64| 2.0 + 0.5 * (3.0 * s + 0.1).sin());
        for s in [0.0, 0.3, 1.7] {
            assert!((exact.derivative(s) - fd.derivative(s)).abs() < 1e-9);
        }
    }

    #[test]
    fn bump_is_flat_outside() {
        let b = ScalarField::bump(2.0, 1.0, 1.5);
        assert_eq!(b.value(-0.1), 2.0);
        assert_eq!(b.value(3.0), 2.0);
        assert!((b.value(0.75) - 3.0).abs() < 1e-15);
        assert_eq!(b.derivative(2.0), 0.0);
    }
}
