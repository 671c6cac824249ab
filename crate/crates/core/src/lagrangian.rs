//! Lagrangians on the configuration-velocity space and their homogeneity
//! properties.

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;

use crate::diff;
use crate::error::{Error, Result};
use crate::extended_phase::{Metric, Trajectory, TrajectoryKind};
use crate::field::ScalarField;

pub type LagFn = Arc<dyn Fn(&[f64], &[f64]) -> f64 + Send + Sync>;
pub type LagGrad = Arc<dyn Fn(&[f64], &[f64]) -> Vec<f64> + Send + Sync>;
pub type VectorField = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;

/// `L(x, v)` with optional exact partial derivatives.
#[derive(Clone)]
pub struct LagrangianSpec {
    pub dim: usize,
    pub label: String,
    eval: LagFn,
    exact_dv: Option<LagGrad>,
    exact_dx: Option<LagGrad>,
    /// The Lagrangian depends explicitly on the time coordinate `x[0]`.
    pub time_dependent: bool,
}

impl fmt::Debug for LagrangianSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LagrangianSpec")
            .field("dim", &self.dim)
            .field("label", &self.label)
            .field("exact_dv", &self.exact_dv.is_some())
            .field("exact_dx", &self.exact_dx.is_some())
            .field("time_dependent", &self.time_dependent)
            .finish()
    }
}

impl LagrangianSpec {
    pub fn new(
        dim: usize,
        label: impl Into<String>,
        eval: impl Fn(&[f64], &[f64]) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            dim,
            label: label.into(),
            eval: Arc::new(eval),
            exact_dv: None,
            exact_dx: None,
            time_dependent: false,
        }
    }

    pub fn with_dv(mut self, dv: impl Fn(&[f64], &[f64]) -> Vec<f64> + Send + Sync + 'static) -> Self {
        self.exact_dv = Some(Arc::new(dv));
        self
    }

    pub fn with_dx(mut self, dx: impl Fn(&[f64], &[f64]) -> Vec<f64> + Send + Sync + 'static) -> Self {
        self.exact_dx = Some(Arc::new(dx));
        self
    }

    pub fn with_time_dependence(mut self, time_dependent: bool) -> Self {
        self.time_dependent = time_dependent;
        self
    }

    pub fn has_exact_dv(&self) -> bool {
        self.exact_dv.is_some()
    }

    pub fn value(&self, x: &[f64], v: &[f64]) -> f64 {
        (self.eval)(x, v)
    }

    /// `dL/dv`.
    pub fn dv(&self, x: &[f64], v: &[f64]) -> Result<Vec<f64>> {
        match &self.exact_dv {
            Some(g) => Ok(g(x, v)),
            None => diff::gradient(&|w: &[f64]| (self.eval)(x, w), v),
        }
    }

    /// `dL/dx`.
    pub fn dx(&self, x: &[f64], v: &[f64]) -> Result<Vec<f64>> {
        match &self.exact_dx {
            Some(g) => Ok(g(x, v)),
            None => diff::gradient(&|y: &[f64]| (self.eval)(y, v), x),
        }
    }

    /// Finite-difference `dL/dv` and `dL/dx`, ignoring exact derivatives.
    pub fn fd_derivatives(&self, x: &[f64], v: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        Ok((
            diff::gradient(&|w: &[f64]| (self.eval)(x, w), v)?,
            diff::gradient(&|y: &[f64]| (self.eval)(y, v), x)?,
        ))
    }

    /// `d2L/dv_a dv_b`.
    pub fn hess_vv(&self, x: &[f64], v: &[f64]) -> Result<DMatrix<f64>> {
        match &self.exact_dv {
            Some(g) => {
                let h = diff::jacobian(&|w: &[f64]| g(x, w), v)?;
                Ok(symmetrize(h))
            }
            None => diff::hessian(&|w: &[f64]| (self.eval)(x, w), v),
        }
    }

    /// `d2L/dv_a dx_b` (row `a`, column `b`).
    pub fn hess_vx(&self, x: &[f64], v: &[f64]) -> Result<DMatrix<f64>> {
        match &self.exact_dv {
            Some(g) => diff::jacobian(&|y: &[f64]| g(y, v), x),
            None => diff::jacobian(
                &|y: &[f64]| diff::gradient(&|w: &[f64]| (self.eval)(y, w), v).unwrap_or_default(),
                x,
            ),
        }
    }

    /// 1-D `L = phi(q) v`.
    pub fn phi_velocity(phi: ScalarField) -> Self {
        let (p1, p2, p3) = (phi.clone(), phi.clone(), phi);
        Self::new(1, format!("phi-velocity[{}]", p1.label()), move |x, v| p1.value(x[0]) * v[0])
            .with_dv(move |x, _| vec![p2.value(x[0])])
            .with_dx(move |x, v| vec![p3.derivative(x[0]) * v[0]])
    }

    /// Newtonian free particle `v.v / 2`.
    pub fn kinetic(dim: usize) -> Self {
        Self::new(dim, "kinetic", |_, v| 0.5 * v.iter().map(|a| a * a).sum::<f64>())
            .with_dv(|_, v| v.to_vec())
            .with_dx(|x, _| vec![0.0; x.len()])
    }

    /// First-order homogeneous `sqrt(s g(v,v))`, `s` the sign of the time
    /// axis at index 0, so time-like velocities give a real value.
    pub fn metric_length(metric: Metric) -> Self {
        Self::metric_length_with_potential(metric, None)
    }

    /// `sqrt(s g(v,v)) + A(x).v`.
    pub fn metric_length_with_potential(metric: Metric, potential: Option<VectorField>) -> Self {
        let dim = metric.dim();
        let s = metric.signature()[0] as f64;
        let (m1, m2) = (metric.clone(), metric);
        let (a1, a2) = (potential.clone(), potential);
        let label = if a1.is_some() { "metric-length+potential" } else { "metric-length" };
        Self::new(dim, label, move |x, v| {
            let base = (s * m1.norm_squared(x, v)).sqrt();
            match &a1 {
                Some(a) => base + a(x).iter().zip(v).map(|(a, v)| a * v).sum::<f64>(),
                None => base,
            }
        })
        .with_dv(move |x, v| {
            let len = (s * m2.norm_squared(x, v)).sqrt();
            let gv = m2.lower(x, v);
            let mut out: Vec<f64> = gv.iter().map(|g| s * g / len).collect();
            if let Some(a) = &a2 {
                for (o, a) in out.iter_mut().zip(a(x)) {
                    *o += a;
                }
            }
            out
        })
    }

    /// Second-order homogeneous `g(v, v)`.
    pub fn metric_quadratic(metric: Metric) -> Self {
        let dim = metric.dim();
        let (m1, m2) = (metric.clone(), metric);
        Self::new(dim, "metric-quadratic", move |x, v| m1.norm_squared(x, v))
            .with_dv(move |x, v| m2.lower(x, v).iter().map(|g| 2.0 * g).collect())
    }

    /// `L^n`.
    pub fn power(base: &LagrangianSpec, n: f64) -> Self {
        let f = ScalarField::with_derivative(
            format!("pow{n}"),
            move |l| l.powf(n),
            move |l| n * l.powf(n - 1.0),
        );
        Self::compose(base, f)
    }

    /// `f(L)`, derivatives by the chain rule.
    pub fn compose(base: &LagrangianSpec, f: ScalarField) -> Self {
        let (b1, b2, b3) = (base.clone(), base.clone(), base.clone());
        let (f1, f2, f3) = (f.clone(), f.clone(), f);
        let mut out = Self::new(base.dim, format!("{}({})", f1.label(), base.label), move |x, v| {
            f1.value(b1.value(x, v))
        })
        .with_time_dependence(base.time_dependent);
        if base.exact_dv.is_some() {
            out = out.with_dv(move |x, v| {
                let k = f2.derivative(b2.value(x, v));
                b2.dv(x, v).unwrap_or_default().iter().map(|g| k * g).collect()
            });
        }
        if base.exact_dx.is_some() {
            out = out.with_dx(move |x, v| {
                let k = f3.derivative(b3.value(x, v));
                b3.dx(x, v).unwrap_or_default().iter().map(|g| k * g).collect()
            });
        }
        out
    }
}

fn symmetrize(h: DMatrix<f64>) -> DMatrix<f64> {
    let t = h.transpose();
    (h + t) * 0.5
}

/// `p = dL/dv`.
pub fn canonical_momentum(l: &LagrangianSpec, x: &[f64], v: &[f64]) -> Result<Vec<f64>> {
    l.dv(x, v)
}

/// `(v . dL/dv) / L`; errors when `|L| < tol`.
pub fn homogeneity_degree(l: &LagrangianSpec, x: &[f64], v: &[f64], tol: f64) -> Result<f64> {
    let value = l.value(x, v);
    if value.abs() < tol {
        return Err(Error::DegenerateProbe { value, tol });
    }
    let p = l.dv(x, v)?;
    Ok(dot(&p, v) / value)
}

/// Legendre function `H = p.v - L`.
pub fn hamiltonian_function(l: &LagrangianSpec, x: &[f64], v: &[f64]) -> Result<f64> {
    let p = l.dv(x, v)?;
    Ok(dot(&p, v) - l.value(x, v))
}

/// `det(d2L/dv dv)`.
pub fn hessian_determinant(l: &LagrangianSpec, x: &[f64], v: &[f64]) -> Result<f64> {
    Ok(l.hess_vv(x, v)?.determinant())
}

/// Threshold on the row-normalized Hessian determinant.
pub const SINGULAR_HESSIAN_TOL: f64 = 1e-6;

/// Determinant of the velocity Hessian after each row is divided by its
/// largest entry. Rows that vanish against the natural scale
/// `(|p||v| + |L|) / |v|^2` give zero.
pub fn normalized_hessian_determinant(l: &LagrangianSpec, x: &[f64], v: &[f64]) -> Result<f64> {
    let mut h = l.hess_vv(x, v)?;
    let p = l.dv(x, v)?;
    let vn = dot(v, v).sqrt().max(f64::MIN_POSITIVE);
    let reference = (dot(&p, &p).sqrt() * vn + l.value(x, v).abs()) / (vn * vn);
    for i in 0..h.nrows() {
        let r = h.row(i).iter().fold(0.0f64, |m, e| m.max(e.abs()));
        if r <= 1e-8 * reference || r == 0.0 {
            return Ok(0.0);
        }
        h.row_mut(i).scale_mut(1.0 / r);
    }
    Ok(h.determinant())
}

/// True when the row-normalized Hessian determinant is below
/// [`SINGULAR_HESSIAN_TOL`].
pub fn hessian_is_singular(l: &LagrangianSpec, x: &[f64], v: &[f64]) -> Result<bool> {
    Ok(normalized_hessian_determinant(l, x, v)?.abs() < SINGULAR_HESSIAN_TOL)
}

/// Per-sample Euler-Lagrange residual `max_a |d/dlambda (dL/dv_a) - dL/dx_a|`
/// along a configuration trajectory.
pub fn el_residual(l: &LagrangianSpec, traj: &Trajectory) -> Result<Vec<f64>> {
    if traj.kind != TrajectoryKind::Configuration {
        return Err(Error::InvalidInput("EL residual needs a configuration trajectory".into()));
    }
    let lam = traj.lambdas();
    let n = l.dim;
    let mut p = vec![Vec::with_capacity(traj.len()); n];
    let mut force = vec![Vec::with_capacity(traj.len()); n];
    for s in &traj.samples {
        let pi = l.dv(&s.x, &s.aux)?;
        let fi = l.dx(&s.x, &s.aux)?;
        for a in 0..n {
            p[a].push(pi[a]);
            force[a].push(fi[a]);
        }
    }
    let mut out = vec![0.0f64; traj.len()];
    for a in 0..n {
        let dp = diff::along(&lam, &p[a]);
        for (i, o) in out.iter_mut().enumerate() {
            *o = o.max((dp[i] - force[a][i]).abs());
        }
    }
    Ok(out)
}

/// Outcome of substituting a trajectory into `EL(f(L))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EquivalenceReport {
    /// Largest `EL(f(L))` residual along the trajectory.
    pub max_residual: f64,
    /// Largest `EL(L)` residual along the trajectory.
    pub base_residual: f64,
    /// Largest `|dL/dlambda|` along the trajectory.
    pub max_dl_dlambda: f64,
}

/// Evaluates the `EL(f(L))` residual along `traj`. The substitution is only
/// meaningful in a gauge with `L` constant, so trajectories whose
/// `|dL/dlambda|` exceeds `drift_tol` are rejected.
pub fn check_fl_equivalence(
    l: &LagrangianSpec,
    f: &ScalarField,
    traj: &Trajectory,
    drift_tol: f64,
) -> Result<EquivalenceReport> {
    let lam = traj.lambdas();
    let values: Vec<f64> = traj.samples.iter().map(|s| l.value(&s.x, &s.aux)).collect();
    let drift = diff::along(&lam, &values)
        .iter()
        .fold(0.0f64, |m, d| m.max(d.abs()));
    if drift > drift_tol {
        return Err(Error::NotApplicable(format!(
            "|dL/dlambda| = {drift:e} exceeds {drift_tol:e}"
        )));
    }
    let composed = LagrangianSpec::compose(l, f.clone());
    let max = |v: Vec<f64>| v.into_iter().fold(0.0f64, f64::max);
    Ok(EquivalenceReport {
        max_residual: max(el_residual(&composed, traj)?),
        base_residual: max(el_residual(l, traj)?),
        max_dl_dlambda: drift,
    })
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(a, b)| a * b).sum()
}
