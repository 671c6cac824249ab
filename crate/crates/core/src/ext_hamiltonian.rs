//! Extended Hamiltonians on phase-space-time.
//!
//! The state is `(x^0..x^n, p_0..p_n)` with `x^0 = c t`. Evolution in the
//! parameter `lambda` is `df/dlambda = [[f, H]]` with the extended bracket
//!
//! ```text
//! [[f, g]] = sum_i (df/dq_i dg/dp_i - df/dp_i dg/dq_i)
//!          - (df/dx0 dg/dp0 - df/dp0 dg/dx0)
//! ```
//!
//! and the physical phase space is the constraint surface `H = 0`.

use std::fmt;
use std::sync::Arc;

use crate::diff;
use crate::error::{Error, Result};
use crate::extended_phase::{ExtendedState, Sample, Trajectory, TrajectoryKind};
use crate::field::ScalarField;
use crate::ode;

pub type StateFn = Arc<dyn Fn(&ExtendedState) -> f64 + Send + Sync>;
pub type StateGrad = Arc<dyn Fn(&ExtendedState) -> (Vec<f64>, Vec<f64>) + Send + Sync>;

/// Sign carried by the time pair in the bracket.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BracketConvention {
    /// `[[x^0, p_0]] = -1`, spatial pairs `+1`.
    #[default]
    TimeMinus,
    /// `[[x^mu, p_nu]] = delta^mu_nu` for every pair.
    AllPlus,
}

impl BracketConvention {
    fn sign(self, i: usize) -> f64 {
        match (self, i) {
            (Self::TimeMinus, 0) => -1.0,
            _ => 1.0,
        }
    }
}

/// A real function on the extended phase space.
#[derive(Clone)]
pub struct Observable {
    label: String,
    eval: StateFn,
    exact_grad: Option<StateGrad>,
}

impl fmt::Debug for Observable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Observable")
            .field("label", &self.label)
            .field("exact_grad", &self.exact_grad.is_some())
            .finish()
    }
}

impl Observable {
    pub fn new(label: impl Into<String>, f: impl Fn(&ExtendedState) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            label: label.into(),
            eval: Arc::new(f),
            exact_grad: None,
        }
    }

    /// Attaches `(df/dx, df/dp)`.
    pub fn with_grad(
        mut self,
        g: impl Fn(&ExtendedState) -> (Vec<f64>, Vec<f64>) + Send + Sync + 'static,
    ) -> Self {
        self.exact_grad = Some(Arc::new(g));
        self
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn has_exact_grad(&self) -> bool {
        self.exact_grad.is_some()
    }

    pub fn value(&self, s: &ExtendedState) -> f64 {
        (self.eval)(s)
    }

    /// `(df/dx, df/dp)`, exact when available.
    pub fn gradient(&self, s: &ExtendedState) -> Result<(Vec<f64>, Vec<f64>)> {
        if let Some(g) = &self.exact_grad {
            return Ok(g(s));
        }
        let lambda = s.lambda;
        let f = |y: &[f64]| (self.eval)(&ExtendedState::from_flat(y, lambda));
        let g = diff::gradient(&f, &s.flat())?;
        let n = s.dim();
        Ok((g[..n].to_vec(), g[n..].to_vec()))
    }

    /// `x[i]`.
    pub fn coordinate(i: usize) -> Self {
        Self::new(format!("x{i}"), move |s| s.x[i]).with_grad(move |s| {
            let mut dx = vec![0.0; s.dim()];
            dx[i] = 1.0;
            (dx, vec![0.0; s.dim()])
        })
    }

    /// `p[i]`.
    pub fn momentum(i: usize) -> Self {
        Self::new(format!("p{i}"), move |s| s.p[i]).with_grad(move |s| {
            let mut dp = vec![0.0; s.dim()];
            dp[i] = 1.0;
            (vec![0.0; s.dim()], dp)
        })
    }

    /// `sum_k c_k prod_j y_j^e_kj` over the flat state `y = [x.., p..]`.
    pub fn polynomial(terms: Vec<(f64, Vec<u32>)>) -> Self {
        let t1 = terms.clone();
        let eval = move |s: &ExtendedState| {
            let y = s.flat();
            t1.iter()
                .map(|(c, e)| c * y.iter().zip(e).map(|(y, e)| y.powi(*e as i32)).product::<f64>())
                .sum()
        };
        Self::new("polynomial", eval).with_grad(move |s| {
            let y = s.flat();
            let mut g = vec![0.0; y.len()];
            for (c, e) in &terms {
                for (j, gj) in g.iter_mut().enumerate() {
                    if e[j] == 0 {
                        continue;
                    }
                    let mut term = c * e[j] as f64 * y[j].powi(e[j] as i32 - 1);
                    for (k, (yk, ek)) in y.iter().zip(e).enumerate() {
                        if k != j {
                            term *= yk.powi(*ek as i32);
                        }
                    }
                    *gj += term;
                }
            }
            let n = s.dim();
            (g[..n].to_vec(), g[n..].to_vec())
        })
    }

    /// `-f`.
    pub fn negated(&self) -> Self {
        let (f, g) = (self.eval.clone(), self.exact_grad.clone());
        let mut out = Self::new(format!("-{}", self.label), move |s| -f(s));
        if let Some(g) = g {
            out = out.with_grad(move |s| {
                let (dx, dp) = g(s);
                (dx.iter().map(|v| -v).collect(), dp.iter().map(|v| -v).collect())
            });
        }
        out
    }
}

/// Extended bracket `[[f, g]]` at `s`.
pub fn ext_bracket(
    f: &Observable,
    g: &Observable,
    s: &ExtendedState,
    convention: BracketConvention,
) -> Result<f64> {
    let (fx, fp) = f.gradient(s)?;
    let (gx, gp) = g.gradient(s)?;
    Ok((0..s.dim())
        .map(|i| convention.sign(i) * (fx[i] * gp[i] - fp[i] * gx[i]))
        .sum())
}

/// Ordinary Poisson bracket over the spatial pairs only.
pub fn spatial_bracket(f: &Observable, g: &Observable, s: &ExtendedState) -> Result<f64> {
    let (fx, fp) = f.gradient(s)?;
    let (gx, gp) = g.gradient(s)?;
    Ok((1..s.dim()).map(|i| fx[i] * gp[i] - fp[i] * gx[i]).sum())
}

/// `[[f, g]]` as an observable; its own gradient is taken numerically.
pub fn bracket_observable(f: &Observable, g: &Observable, convention: BracketConvention) -> Observable {
    let (f, g) = (f.clone(), g.clone());
    let label = format!("[[{}, {}]]", f.label, g.label);
    Observable::new(label, move |s| ext_bracket(&f, &g, s, convention).unwrap_or(f64::NAN))
}

/// `[[f,[[g,h]]]] + [[g,[[h,f]]]] + [[h,[[f,g]]]]`.
pub fn jacobi_residual(
    f: &Observable,
    g: &Observable,
    h: &Observable,
    s: &ExtendedState,
    convention: BracketConvention,
) -> Result<f64> {
    let gh = bracket_observable(g, h, convention);
    let hf = bracket_observable(h, f, convention);
    let fg = bracket_observable(f, g, convention);
    Ok(ext_bracket(f, &gh, s, convention)?
        + ext_bracket(g, &hf, s, convention)?
        + ext_bracket(h, &fg, s, convention)?)
}

/// An extended Hamiltonian together with the bracket it evolves under.
#[derive(Clone, Debug)]
pub struct ExtHamiltonian {
    /// Smallest state dimension the Hamiltonian reads.
    pub dim: usize,
    pub label: String,
    pub convention: BracketConvention,
    obs: Observable,
}

impl ExtHamiltonian {
    pub fn new(dim: usize, label: impl Into<String>, obs: Observable) -> Self {
        Self {
            dim,
            label: label.into(),
            convention: BracketConvention::TimeMinus,
            obs,
        }
    }

    pub fn with_convention(mut self, convention: BracketConvention) -> Self {
        self.convention = convention;
        self
    }

    pub fn observable(&self) -> &Observable {
        &self.obs
    }

    pub fn value(&self, s: &ExtendedState) -> f64 {
        self.obs.value(s)
    }

    /// `-H`, which traverses the same curves backwards.
    pub fn negated(&self) -> Self {
        Self {
            dim: self.dim,
            label: format!("-({})", self.label),
            convention: self.convention,
            obs: self.obs.negated(),
        }
    }

    /// `(dx/dlambda, dp/dlambda)` at `s`.
    pub fn vector_field(&self, s: &ExtendedState) -> Result<(Vec<f64>, Vec<f64>)> {
        let (hx, hp) = self.obs.gradient(s)?;
        let n = s.dim();
        let sign = |i| self.convention.sign(i);
        Ok((
            (0..n).map(|i| sign(i) * hp[i]).collect(),
            (0..n).map(|i| -sign(i) * hx[i]).collect(),
        ))
    }
}

/// `|H(s)|`.
pub fn constraint_residual(h: &ExtHamiltonian, s: &ExtendedState) -> f64 {
    h.value(s).abs()
}

/// `dt/dlambda = [[x^0, H]] / c`.
pub fn parametrization_rate(h: &ExtHamiltonian, s: &ExtendedState, c: f64) -> Result<f64> {
    ext_bracket(&Observable::coordinate(0), h.observable(), s, h.convention).map(|r| r / c)
}

/// Constraint monitoring for [`evolve`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvolveOptions {
    /// Largest admissible `|H|` at the initial state.
    pub initial_tol: f64,
    /// Admissible growth of `|H|` per unit `lambda`.
    pub drift_per_lambda: f64,
    /// When false, residuals are recorded but never abort the run.
    pub enforce: bool,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        Self {
            initial_tol: 1e-8,
            drift_per_lambda: 1e-7,
            enforce: true,
        }
    }
}

impl EvolveOptions {
    /// Record residuals without enforcing the constraint.
    pub fn unconstrained() -> Self {
        Self {
            enforce: false,
            ..Self::default()
        }
    }
}

/// Integrates the flow of `h` from `s0` over `grid` (RK4), recording `|H|`
/// at each sample. Drift beyond the allowance aborts the run.
pub fn evolve(
    h: &ExtHamiltonian,
    s0: &ExtendedState,
    grid: &[f64],
    opts: EvolveOptions,
) -> Result<Trajectory> {
    let n = s0.dim();
    if n < h.dim {
        return Err(Error::InvalidDimension {
            dim: n,
            reason: format!("{} needs at least {} coordinates", h.label, h.dim),
        });
    }
    ode::validate_grid(grid)?;
    let lambda0 = grid[0];
    let start = ExtendedState {
        lambda: lambda0,
        ..s0.clone()
    };
    let h0 = constraint_residual(h, &start);
    if opts.enforce && h0 > opts.initial_tol {
        return Err(Error::ConstraintViolation {
            lambda: lambda0,
            residual: h0,
            tol: opts.initial_tol,
        });
    }
    let rhs = |lambda: f64, y: &[f64]| -> Result<Vec<f64>> {
        let s = ExtendedState::from_flat(y, lambda);
        let (dx, dp) = h
            .vector_field(&s)
            .map_err(|_| Error::IntegrationDiverged { lambda })?;
        Ok(dx.into_iter().chain(dp).collect())
    };
    let monitor = |lambda: f64, y: &[f64]| -> Result<()> {
        if !opts.enforce {
            return Ok(());
        }
        let r = constraint_residual(h, &ExtendedState::from_flat(y, lambda));
        let allowed = h0 + opts.drift_per_lambda * (lambda - lambda0).abs().max(1e-6);
        if r.is_nan() || r > allowed {
            return Err(Error::ConstraintViolation {
                lambda,
                residual: r,
                tol: allowed,
            });
        }
        Ok(())
    };
    let ys = ode::integrate(rhs, &start.flat(), grid, monitor)?;
    Ok(Trajectory {
        kind: TrajectoryKind::Phase,
        samples: grid
            .iter()
            .zip(ys)
            .map(|(lambda, y)| {
                let s = ExtendedState::from_flat(&y, *lambda);
                Sample {
                    lambda: *lambda,
                    residual: Some(constraint_residual(h, &s)),
                    x: s.x,
                    aux: s.p,
                }
            })
            .collect(),
    })
}

/// Largest pointwise distance between the flow of `-H` started at the end
/// of the `H` flow and the `H` flow read backwards.
pub fn reversal_mismatch(
    h: &ExtHamiltonian,
    s0: &ExtendedState,
    grid: &[f64],
    opts: EvolveOptions,
) -> Result<f64> {
    let fwd = evolve(h, s0, grid, opts)?;
    let end = fwd.last();
    let s1 = ExtendedState {
        x: end.x.clone(),
        p: end.aux.clone(),
        lambda: grid[0],
    };
    let back = evolve(&h.negated(), &s1, grid, opts)?;
    let mut worst = 0.0f64;
    for (b, f) in back.samples.iter().zip(fwd.samples.iter().rev()) {
        for (u, w) in b.x.iter().chain(&b.aux).zip(f.x.iter().chain(&f.aux)) {
            worst = worst.max((u - w).abs());
        }
    }
    Ok(worst)
}

/// Coordinate-time form `H = Hcl - c p_0`, with `Hcl` independent of `p_0`.
pub fn make_coordinate_time_h(hcl: Observable, dim: usize, c: f64) -> ExtHamiltonian {
    let (h1, h2) = (hcl.clone(), hcl.clone());
    let mut obs = Observable::new(format!("{} - c p0", hcl.label()), move |s| h1.value(s) - c * s.p[0]);
    if hcl.has_exact_grad() {
        obs = obs.with_grad(move |s| {
            let (dx, mut dp) = h2.gradient(s).expect("exact gradient");
            dp[0] -= c;
            (dx, dp)
        });
    }
    ExtHamiltonian::new(dim.max(1), "coordinate-time", obs)
}

/// Proper-time form `H = 1 - c p_0 / phi(t)`, giving `dt/dlambda = 1/phi`.
pub fn make_proper_time_h(phi: ScalarField, c: f64) -> ExtHamiltonian {
    let (f1, f2) = (phi.clone(), phi);
    let obs = Observable::new("1 - c p0 / phi(t)", move |s| 1.0 - c * s.p[0] / f1.value(s.x[0] / c))
        .with_grad(move |s| {
            let t = s.x[0] / c;
            let (f, df) = (f2.value(t), f2.derivative(t));
            let mut dx = vec![0.0; s.dim()];
            let mut dp = vec![0.0; s.dim()];
            dx[0] = s.p[0] * df / (f * f);
            dp[0] = -c / f;
            (dx, dp)
        });
    ExtHamiltonian::new(1, "proper-time", obs)
}

/// `H = c p_0 - E`: coordinate time with the flow reversed, `dt/dlambda = -1`.
pub fn make_time_reversal_h(energy: f64, c: f64) -> ExtHamiltonian {
    let obs = Observable::new("c p0 - E", move |s| c * s.p[0] - energy).with_grad(move |s| {
        let mut dp = vec![0.0; s.dim()];
        dp[0] = c;
        (vec![0.0; s.dim()], dp)
    });
    ExtHamiltonian::new(1, "time-reversal", obs)
}

/// Proper-length form `H = p_1 / phi(q_1) - 1`.
pub fn make_proper_length_h(phi: ScalarField) -> ExtHamiltonian {
    let (f1, f2) = (phi.clone(), phi);
    let obs = Observable::new("p1 / phi(q1) - 1", move |s| s.p[1] / f1.value(s.x[1]) - 1.0).with_grad(
        move |s| {
            let (f, df) = (f2.value(s.x[1]), f2.derivative(s.x[1]));
            let mut dx = vec![0.0; s.dim()];
            let mut dp = vec![0.0; s.dim()];
            dx[1] = -s.p[1] * df / (f * f);
            dp[1] = 1.0 / f;
            (dx, dp)
        },
    );
    ExtHamiltonian::new(2, "proper-length", obs)
}

/// Momentum form `H = p_1 - p_ref`, giving `dq_1/dlambda = 1`.
pub fn make_momentum_h(p_ref: f64) -> ExtHamiltonian {
    let obs = Observable::new("p1 - p_ref", move |s| s.p[1] - p_ref).with_grad(|s| {
        let mut dp = vec![0.0; s.dim()];
        dp[1] = 1.0;
        (vec![0.0; s.dim()], dp)
    });
    ExtHamiltonian::new(2, "momentum", obs)
}

/// Free particle moving at speed `v`:
/// `H = v (p_1 - p_ref) - (c p_0 - E)`.
pub fn make_moving_particle_h(v: f64, p_ref: f64, energy: f64, c: f64) -> ExtHamiltonian {
    let obs = Observable::new("v (p1 - p_ref) - (c p0 - E)", move |s| {
        v * (s.p[1] - p_ref) - (c * s.p[0] - energy)
    })
    .with_grad(move |s| {
        let mut dp = vec![0.0; s.dim()];
        dp[0] = -c;
        dp[1] = v;
        (vec![0.0; s.dim()], dp)
    });
    ExtHamiltonian::new(2, "moving-particle", obs)
}

/// Changes gauge: `H_xi = (H_lambda + I) / rate` where `rate = dxi/dlambda`
/// and `I` is an integral of the `H_lambda` flow vanishing on the physical
/// states. The integral conditions are checked at `probes`, which must lie
/// on `H_lambda = 0`.
pub fn gauge_relate_h(
    h_lambda: &ExtHamiltonian,
    rate: &Observable,
    integral: &Observable,
    probes: &[ExtendedState],
    tol: f64,
) -> Result<ExtHamiltonian> {
    for s in probes {
        let r = constraint_residual(h_lambda, s);
        if r > tol {
            return Err(Error::InvalidInput(format!(
                "probe at lambda {} is off the constraint (|H| = {r:e})",
                s.lambda
            )));
        }
        let b = ext_bracket(integral, h_lambda.observable(), s, h_lambda.convention)?;
        if b.abs() > tol {
            return Err(Error::NotAnIntegral(format!("[[I, H]] = {b:e} at a probe")));
        }
        let i = integral.value(s);
        if i.abs() > tol {
            return Err(Error::NotAnIntegral(format!("I = {i:e} at a physical probe")));
        }
        if rate.value(s) == 0.0 {
            return Err(Error::GaugeDegenerate { lambda: s.lambda });
        }
    }
    let (h, r, i) = (h_lambda.observable().clone(), rate.clone(), integral.clone());
    let (h2, r2, i2) = (h.clone(), r.clone(), i.clone());
    let mut obs = Observable::new(format!("({} + {}) / {}", h.label(), i.label(), r.label()), move |s| {
        (h.value(s) + i.value(s)) / r.value(s)
    });
    if h2.has_exact_grad() && r2.has_exact_grad() && i2.has_exact_grad() {
        obs = obs.with_grad(move |s| {
            let num = h2.value(s) + i2.value(s);
            let den = r2.value(s);
            let (hx, hp) = h2.gradient(s).expect("exact gradient");
            let (ix, ip) = i2.gradient(s).expect("exact gradient");
            let (rx, rp) = r2.gradient(s).expect("exact gradient");
            let q = |a: &[f64], b: &[f64], c: &[f64]| -> Vec<f64> {
                (0..a.len())
                    .map(|k| (a[k] + b[k]) / den - num * c[k] / (den * den))
                    .collect()
            };
            (q(&hx, &ix, &rx), q(&hp, &ip, &rp))
        });
    }
    Ok(ExtHamiltonian {
        dim: h_lambda.dim,
        label: format!("gauge-related({})", h_lambda.label),
        convention: h_lambda.convention,
        obs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ode::uniform_grid;

    fn st(x: Vec<f64>, p: Vec<f64>) -> ExtendedState {
        ExtendedState::new(x, p, 0.0).unwrap()
    }

    #[test]
    fn bracket_table() {
        let s = st(vec![0.3, 1.2, -0.4], vec![0.7, 0.1, 2.0]);
        let tm = BracketConvention::TimeMinus;
        let b = |f: &Observable, g: &Observable| ext_bracket(f, g, &s, tm).unwrap();
        assert_eq!(b(&Observable::coordinate(0), &Observable::momentum(0)), -1.0);
        assert_eq!(b(&Observable::coordinate(1), &Observable::momentum(1)), 1.0);
        assert_eq!(b(&Observable::coordinate(1), &Observable::momentum(2)), 0.0);
        let ap = ext_bracket(&Observable::coordinate(0), &Observable::momentum(0), &s, BracketConvention::AllPlus);
        assert_eq!(ap.unwrap(), 1.0);
    }

    #[test]
    fn coordinate_time_flow_and_rates() {
        let phi = ScalarField::sinusoid(2.0, 0.5, 1.0, 0.0);
        let f = phi.clone();
        let hcl = Observable::new("phi(t)", move |s| f.value(s.x[0]));
        let h = make_coordinate_time_h(hcl, 1, 1.0);
        let s0 = st(vec![0.4], vec![phi.value(0.4)]);
        assert!((parametrization_rate(&h, &s0, 1.0).unwrap() - 1.0).abs() < 1e-12);
        let t = evolve(&h, &s0, &uniform_grid(0.0, 1.0, 100), EvolveOptions::default()).unwrap();
        for smp in &t.samples {
            assert!((smp.x[0] - (0.4 + smp.lambda)).abs() < 1e-12);
        }
    }

    #[test]
    fn proper_time_rate() {
        let h = make_proper_time_h(ScalarField::constant(4.0), 1.0);
        let s = st(vec![0.0], vec![4.0]);
        assert!((parametrization_rate(&h, &s, 1.0).unwrap() - 0.25).abs() < 1e-15);
        let h2 = make_proper_time_h(ScalarField::constant(2.0), 1.0);
        let t = evolve(&h2, &st(vec![0.0], vec![2.0]), &uniform_grid(0.0, 2.0, 20), EvolveOptions::default()).unwrap();
        assert!((t.last().x[0] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn reversal_and_momentum_rates() {
        let h = make_time_reversal_h(3.0, 1.0);
        let s = st(vec![0.0, 0.0], vec![3.0, 0.5]);
        assert!((parametrization_rate(&h, &s, 1.0).unwrap() + 1.0).abs() < 1e-15);
        let m = make_momentum_h(0.5);
        assert_eq!(parametrization_rate(&m, &s, 1.0).unwrap(), 0.0);
        let (dx, _) = m.vector_field(&s).unwrap();
        assert_eq!(dx[1], 1.0);
    }

    #[test]
    fn off_shell_start_is_rejected() {
        let hcl = Observable::new("1", |_| 1.0);
        let h = make_coordinate_time_h(hcl, 1, 1.0);
        let s = st(vec![0.0], vec![0.0]);
        assert_eq!(constraint_residual(&h, &s), 1.0);
        assert!(matches!(
            evolve(&h, &s, &uniform_grid(0.0, 1.0, 4), EvolveOptions::default()),
            Err(Error::ConstraintViolation { .. })
        ));
    }

    #[test]
    fn proper_length_flow() {
        let phi = ScalarField::polynomial(vec![1.0, 0.0, 1.0]);
        let h = make_proper_length_h(phi.clone());
        let s = st(vec![0.0, 0.5], vec![0.0, phi.value(0.5)]);
        let (dx, dp) = h.vector_field(&s).unwrap();
        assert!((dx[1] - 1.0 / 1.25).abs() < 1e-15);
        assert!((dp[1] - 1.25 * 1.0 / (1.25 * 1.25)).abs() < 1e-15);
    }

    #[test]
    fn gauge_relation_moving_particle() {
        let (v, p1, e) = (0.6, 0.75, 1.25);
        let catalog = make_moving_particle_h(v, p1, e, 1.0);
        let hq = make_momentum_h(p1);
        let rate = Observable::new("1/v", move |_| 1.0 / v).with_grad(|s| (vec![0.0; s.dim()], vec![0.0; s.dim()]));
        let integral = Observable::new("-(p0 - E)/v", move |s| -(s.p[0] - e) / v).with_grad(move |s| {
            let mut dp = vec![0.0; s.dim()];
            dp[0] = -1.0 / v;
            (vec![0.0; s.dim()], dp)
        });
        let s0 = st(vec![0.0, 0.2], vec![e, p1]);
        let ht = gauge_relate_h(&hq, &rate, &integral, &[s0.clone()], 1e-12).unwrap();
        let grid = uniform_grid(0.0, 2.0, 50);
        let a = evolve(&catalog, &s0, &grid, EvolveOptions::default()).unwrap();
        let b = evolve(&ht, &s0, &grid, EvolveOptions::default()).unwrap();
        for (a, b) in a.samples.iter().zip(&b.samples) {
            for (u, w) in a.x.iter().zip(&b.x) {
                assert!((u - w).abs() < 1e-8);
            }
        }
        let off = st(vec![0.0, 0.2], vec![e + 0.5, p1]);
        assert!(matches!(
            gauge_relate_h(&hq, &rate, &integral, &[off], 1e-12),
            Err(Error::NotAnIntegral(_))
        ));
    }

    #[test]
    fn polynomial_gradient_is_exact() {
        // x1^2 p0 + 3 p1^3
        let f = Observable::polynomial(vec![(1.0, vec![0, 2, 1, 0]), (3.0, vec![0, 0, 0, 3])]);
        let s = st(vec![0.5, 2.0], vec![1.5, -1.0]);
        let (dx, dp) = f.gradient(&s).unwrap();
        assert_eq!(dx, vec![0.0, 6.0]);
        assert_eq!(dp, vec![4.0, 9.0]);
    }
}
