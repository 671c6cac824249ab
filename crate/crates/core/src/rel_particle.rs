//! Charged massive particle in a background metric and vector potential.
//!
//! Conventions: signature `(-, +, +, +)`, `x = (c t, x, y, z)`, potential
//! with lower index `A_mu`. Where formulas use "the" `g_00` it means
//! `|g_00|`, e.g. `|g_00| = 1 - 2U/c^2` in a weak static field. Lab
//! velocities are `v^mu = (c, v)`.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, Matrix3, Vector3};

use crate::diff;
use crate::error::{Error, Result};
use crate::extended_phase::{
    make_minkowski, make_weak_field, ExtendedState, Metric, Sample, SignatureConvention, Trajectory,
    TrajectoryKind,
};
use crate::ext_hamiltonian::{BracketConvention, ExtHamiltonian, Observable};
use crate::ode;

pub type PotentialFn = Arc<dyn Fn(&[f64]) -> [f64; 4] + Send + Sync>;
pub type ScalarFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// Background metric, vector potential and particle constants.
#[derive(Clone)]
pub struct BackgroundFields {
    pub metric: Metric,
    pub potential: PotentialFn,
    pub charge: f64,
    pub mass: f64,
    pub c: f64,
    /// Newtonian potential behind a weak-field metric, when there is one.
    pub weak_potential: Option<ScalarFn>,
}

impl fmt::Debug for BackgroundFields {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BackgroundFields")
            .field("metric", &self.metric)
            .field("charge", &self.charge)
            .field("mass", &self.mass)
            .field("c", &self.c)
            .field("weak_potential", &self.weak_potential.is_some())
            .finish()
    }
}

impl BackgroundFields {
    pub fn new(
        metric: Metric,
        potential: impl Fn(&[f64]) -> [f64; 4] + Send + Sync + 'static,
        charge: f64,
        mass: f64,
        c: f64,
    ) -> Result<Self> {
        if metric.dim() != 4 || metric.signature() != [-1, 1, 1, 1] {
            return Err(Error::InvalidInput(
                "particle fields need a 4-D metric with signature (-,+,+,+)".into(),
            ));
        }
        if !(mass > 0.0) || !(c > 0.0) {
            return Err(Error::InvalidInput("mass and c must be positive".into()));
        }
        Ok(Self {
            metric,
            potential: Arc::new(potential),
            charge,
            mass,
            c,
            weak_potential: None,
        })
    }

    /// Flat space with a vector potential.
    pub fn flat(
        potential: impl Fn(&[f64]) -> [f64; 4] + Send + Sync + 'static,
        charge: f64,
        mass: f64,
        c: f64,
    ) -> Result<Self> {
        let m = make_minkowski(4, SignatureConvention::MinusPlus)?;
        Self::new(m, potential, charge, mass, c)
    }

    /// Neutral particle in a weak gravitational field `|g_00| = 1 - 2U/c^2`.
    pub fn weak_gravity(
        potential_u: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
        mass: f64,
        c: f64,
    ) -> Result<Self> {
        let u: ScalarFn = Arc::new(potential_u);
        let u1 = u.clone();
        let m = make_weak_field(move |x| u1(x), c, SignatureConvention::MinusPlus);
        let mut f = Self::new(m, |_| [0.0; 4], 0.0, mass, c)?;
        f.weak_potential = Some(u);
        Ok(f)
    }

    pub fn a(&self, x: &[f64]) -> [f64; 4] {
        (self.potential)(x)
    }

    pub fn g(&self, x: &[f64]) -> DMatrix<f64> {
        self.metric.at(x)
    }

    /// `|g_00|`.
    pub fn g00(&self, x: &[f64]) -> f64 {
        -self.metric.at(x)[(0, 0)]
    }

    /// `da[rho][mu] = d_rho A_mu`.
    pub fn potential_derivatives(&self, x: &[f64]) -> Result<[[f64; 4]; 4]> {
        let jac = diff::jacobian(&|y: &[f64]| self.a(y).to_vec(), x)?;
        let mut out = [[0.0; 4]; 4];
        for (rho, row) in out.iter_mut().enumerate() {
            for (mu, v) in row.iter_mut().enumerate() {
                *v = jac[(mu, rho)];
            }
        }
        Ok(out)
    }

    /// `d_rho g(u, w)` at fixed `u`, `w`.
    pub fn metric_gradient_of(&self, x: &[f64], u: &[f64], w: &[f64]) -> Result<[f64; 4]> {
        let g = diff::gradient(&|y: &[f64]| self.metric.inner(y, u, w), x)?;
        Ok([g[0], g[1], g[2], g[3]])
    }

    fn is_time_orthogonal(&self, g: &DMatrix<f64>) -> bool {
        let scale = g.abs().max();
        (1..4).all(|i| g[(0, i)].abs() <= 1e-14 * scale)
    }

    fn spatial_block(g: &DMatrix<f64>) -> Matrix3<f64> {
        Matrix3::from_fn(|i, j| g[(i + 1, j + 1)])
    }
}

fn lab_velocity(c: f64, v: &[f64; 3]) -> [f64; 4] {
    [c, v[0], v[1], v[2]]
}

/// `gamma = c / sqrt(-g(v, v))` with `v^0 = c`; equals
/// `1/sqrt(|g_00| - v^2/c^2)` for time-orthogonal metrics.
pub fn gamma_factor(f: &BackgroundFields, x: &[f64], v: &[f64; 3]) -> Result<f64> {
    let u = lab_velocity(f.c, v);
    let radicand = -f.metric.norm_squared(x, &u) / (f.c * f.c);
    if !(radicand > 0.0) {
        return Err(Error::SuperluminalState { radicand });
    }
    Ok(1.0 / radicand.sqrt())
}

/// Kinematic momentum `p_i = m gamma g_{i nu} v^nu`.
pub fn kinematic_momentum(f: &BackgroundFields, x: &[f64], v: &[f64; 3]) -> Result<[f64; 3]> {
    let gamma = gamma_factor(f, x, v)?;
    let low = f.metric.lower(x, &lab_velocity(f.c, v));
    Ok([1, 2, 3].map(|i| f.mass * gamma * low[i]))
}

/// Canonical momentum `pi_i = q A_i + m gamma v_i`.
pub fn canonical_momentum(f: &BackgroundFields, x: &[f64], v: &[f64; 3]) -> Result<[f64; 3]> {
    let p = kinematic_momentum(f, x, v)?;
    let a = f.a(x);
    Ok([0, 1, 2].map(|i| p[i] + f.charge * a[i + 1]))
}

const INVERSION_MAX_ITER: usize = 50;
const INVERSION_TOL: f64 = 1e-12;

/// Inverts `p_i = m gamma g_{i nu} v^nu` for the lab velocity. Closed form
/// when `g_{0i} = 0`, fixed-point iteration otherwise. Returns `(v, gamma)`.
pub fn velocity_from_momentum(f: &BackgroundFields, x: &[f64], p: &[f64; 3]) -> Result<([f64; 3], f64)> {
    let g = f.g(x);
    let gs = BackgroundFields::spatial_block(&g);
    let gs_inv = gs
        .try_inverse()
        .ok_or_else(|| Error::InvalidMetric { at: x.to_vec() })?;
    let pv = Vector3::new(p[0], p[1], p[2]);
    let (m, c) = (f.mass, f.c);
    if f.is_time_orthogonal(&g) {
        let up = gs_inv * pv;
        let p2 = pv.dot(&up);
        let g00 = -g[(0, 0)];
        if !(g00 > 0.0) {
            return Err(Error::SuperluminalState { radicand: g00 });
        }
        let gamma = ((1.0 + p2 / (m * m * c * c)) / g00).sqrt();
        return Ok(([0, 1, 2].map(|i| up[i] / (m * gamma)), gamma));
    }
    let g0 = Vector3::new(g[(1, 0)], g[(2, 0)], g[(3, 0)]);
    let mut v = gs_inv * pv / m;
    for _ in 0..INVERSION_MAX_ITER {
        let gamma = gamma_factor(f, x, &[v[0], v[1], v[2]])?;
        let next = gs_inv * (pv / (m * gamma) - g0 * c);
        let done = (next - v).norm() <= INVERSION_TOL * next.norm().max(c);
        v = next;
        if done {
            let vv = [v[0], v[1], v[2]];
            return Ok((vv, gamma_factor(f, x, &vv)?));
        }
    }
    Err(Error::IntegrationDiverged { lambda: x[0] / c })
}

/// `dx/dt` and `dp/dt` for the kinematic momentum `p_i` at `x = (ct, x)`:
///
/// ```text
/// dp_i/dt = q c (d_i A_0 - d_0 A_i) + q (d_i A_j - d_j A_i) v^j + (m gamma / 2) d_i g(v, v)
/// ```
///
/// The last term is `m c^2 gamma^-2 d_i gamma` written through the metric.
pub fn coordinate_time_rhs(f: &BackgroundFields, x: &[f64], p: &[f64; 3]) -> Result<([f64; 3], [f64; 3])> {
    let (v, gamma) = velocity_from_momentum(f, x, p)?;
    let da = f.potential_derivatives(x)?;
    let u = lab_velocity(f.c, &v);
    let dg = f.metric_gradient_of(x, &u, &u)?;
    let (q, m, c) = (f.charge, f.mass, f.c);
    let mut dp = [0.0; 3];
    for i in 1..4 {
        let electric = q * c * (da[i][0] - da[0][i]);
        let magnetic: f64 = (1..4).map(|j| q * (da[i][j] - da[j][i]) * v[j - 1]).sum();
        dp[i - 1] = electric + magnetic + 0.5 * m * gamma * dg[i];
    }
    Ok((v, dp))
}

/// Integrates the coordinate-time equations over `t_grid`. Samples hold
/// `x = (ct, x)` and `aux = p^mu = m gamma v^mu`.
pub fn integrate_coordinate_time(
    f: &BackgroundFields,
    x0: &[f64; 3],
    v0: &[f64; 3],
    t_grid: &[f64],
) -> Result<Trajectory> {
    let c = f.c;
    let start = [c * t_grid[0], x0[0], x0[1], x0[2]];
    let p0 = kinematic_momentum(f, &start, v0)?;
    let y0: Vec<f64> = x0.iter().chain(&p0).copied().collect();
    let rhs = |t: f64, y: &[f64]| -> Result<Vec<f64>> {
        let x = [c * t, y[0], y[1], y[2]];
        let (v, dp) = coordinate_time_rhs(f, &x, &[y[3], y[4], y[5]])?;
        Ok(v.into_iter().chain(dp).collect())
    };
    let ys = ode::integrate(rhs, &y0, t_grid, |_, _| Ok(()))?;
    let mut samples = Vec::with_capacity(ys.len());
    for (t, y) in t_grid.iter().zip(ys) {
        let x = vec![c * t, y[0], y[1], y[2]];
        let (v, gamma) = velocity_from_momentum(f, &x, &[y[3], y[4], y[5]])?;
        let mg = f.mass * gamma;
        samples.push(Sample {
            lambda: *t,
            aux: vec![mg * c, mg * v[0], mg * v[1], mg * v[2]],
            x,
            residual: None,
        });
    }
    Ok(Trajectory {
        kind: TrajectoryKind::Phase,
        samples,
    })
}

/// Energy `h = pi.v - L = m gamma g_{i nu} v^i v^nu + m c^2 / gamma - q c A_0`;
/// for time-orthogonal metrics `h = m gamma c^2 |g_00| - q c A_0`.
pub fn energy_h(f: &BackgroundFields, x: &[f64], v: &[f64; 3]) -> Result<f64> {
    let gamma = gamma_factor(f, x, v)?;
    let low = f.metric.lower(x, &lab_velocity(f.c, v));
    let pv: f64 = (1..4).map(|i| low[i] * v[i - 1]).sum();
    let (m, c) = (f.mass, f.c);
    Ok(m * gamma * pv + m * c * c / gamma - f.charge * c * f.a(x)[0])
}

fn spatial_kinetic_sq(f: &BackgroundFields, x: &[f64], pi: &[f64; 3]) -> Result<f64> {
    let g = f.g(x);
    let a = f.a(x);
    let p = Vector3::new(pi[0] - f.charge * a[1], pi[1] - f.charge * a[2], pi[2] - f.charge * a[3]);
    let gs_inv = BackgroundFields::spatial_block(&g)
        .try_inverse()
        .ok_or_else(|| Error::InvalidMetric { at: x.to_vec() })?;
    Ok(p.dot(&(gs_inv * p)))
}

/// `h(x, pi) = (pi - qA)^2 / (m gamma) - q c A_0 + m c^2 / gamma`, with
/// `gamma = (|g_00| - p^2/(p^0)^2)^(-1/2)` taken from the momenta.
/// Time-orthogonal metrics only.
pub fn energy_h_momentum(f: &BackgroundFields, x: &[f64], pi: &[f64; 3], p0_upper: f64) -> Result<f64> {
    let p2 = spatial_kinetic_sq(f, x, pi)?;
    let radicand = f.g00(x) - p2 / (p0_upper * p0_upper);
    if !(radicand > 0.0) {
        return Err(Error::OffShellState { radicand });
    }
    let gamma = 1.0 / radicand.sqrt();
    let (m, c) = (f.mass, f.c);
    Ok(p2 / (m * gamma) - f.charge * c * f.a(x)[0] + m * c * c / gamma)
}

/// `h(x, pi)` with `gamma` eliminated through the mass shell:
/// `c sqrt(|g_00|) sqrt(m^2 c^2 + p^2) - q c A_0`. Time-orthogonal metrics only.
pub fn energy_h_phase(f: &BackgroundFields, x: &[f64], pi: &[f64; 3]) -> Result<f64> {
    let p2 = spatial_kinetic_sq(f, x, pi)?;
    let (m, c) = (f.mass, f.c);
    Ok(c * f.g00(x).sqrt() * (m * m * c * c + p2).sqrt() - f.charge * c * f.a(x)[0])
}

/// `|g(p, p) + m^2 c^2|` for a contravariant `p^mu`.
pub fn mass_shell_residual(f: &BackgroundFields, x: &[f64], p_upper: &[f64]) -> f64 {
    (f.metric.norm_squared(x, p_upper) + f.mass * f.mass * f.c * f.c).abs()
}

/// `p^0 / sqrt(-g(p, p))`, which equals `gamma` on the mass shell.
pub fn gamma_from_momenta(f: &BackgroundFields, x: &[f64], p_upper: &[f64]) -> Result<f64> {
    let radicand = -f.metric.norm_squared(x, p_upper);
    if !(radicand > 0.0) {
        return Err(Error::OffShellState { radicand });
    }
    Ok(p_upper[0] / radicand.sqrt())
}

fn kinetic_covector(f: &BackgroundFields, s: &ExtendedState) -> Vec<f64> {
    let a = f.a(&s.x);
    (0..4).map(|mu| s.p[mu] - f.charge * a[mu]).collect()
}

/// `h~ = g^{mu nu}(pi - qA)_mu (pi - qA)_nu / (2m) + m c^2 / 2`, which
/// vanishes on the mass shell.
pub fn h_tilde(f: &BackgroundFields, s: &ExtendedState) -> f64 {
    let k = kinetic_covector(f, s);
    match f.metric.raise(&s.x, &k) {
        Ok(up) => {
            let kk: f64 = up.iter().zip(&k).map(|(a, b)| a * b).sum();
            kk / (2.0 * f.mass) + 0.5 * f.mass * f.c * f.c
        }
        Err(_) => f64::NAN,
    }
}

/// Which proper-time Hamiltonian to build.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProperTimeForm {
    /// `h = (pi - qA)^2 / m + m c^2`; its flow runs at twice the proper rate.
    Unmodified,
    /// `h~ = h / 2`; `lambda` is proper time.
    Halved,
}

/// Proper-time Hamiltonian on `(x^mu, pi_mu)` with the all-plus bracket.
/// Derivatives are numerical.
pub fn make_proper_time_hamiltonian(f: &BackgroundFields, form: ProperTimeForm) -> ExtHamiltonian {
    let f1 = f.clone();
    let k = match form {
        ProperTimeForm::Unmodified => 2.0,
        ProperTimeForm::Halved => 1.0,
    };
    let label = match form {
        ProperTimeForm::Unmodified => "proper-time-unmodified",
        ProperTimeForm::Halved => "proper-time-halved",
    };
    let obs = Observable::new(label, move |s| k * h_tilde(&f1, s));
    ExtHamiltonian::new(4, label, obs).with_convention(BracketConvention::AllPlus)
}

/// Explicit proper-time equations of `h~`:
/// `dx^rho/dtau = u^rho = g^{rho nu}(pi - qA)_nu / m`,
/// `dpi_rho/dtau = q d_rho A_mu u^mu + (m/2) d_rho g(u, u)`.
pub fn proper_time_rhs_tilde(f: &BackgroundFields, s: &ExtendedState) -> Result<(Vec<f64>, Vec<f64>)> {
    let k = kinetic_covector(f, s);
    let u: Vec<f64> = f.metric.raise(&s.x, &k)?.iter().map(|v| v / f.mass).collect();
    let da = f.potential_derivatives(&s.x)?;
    let dg = f.metric_gradient_of(&s.x, &u, &u)?;
    let dpi = (0..4)
        .map(|rho| {
            let em: f64 = (0..4).map(|mu| da[rho][mu] * u[mu]).sum();
            f.charge * em + 0.5 * f.mass * dg[rho]
        })
        .collect();
    Ok((u, dpi))
}

/// Phase-space point for a particle at `x` with lab velocity `v`:
/// `pi_mu = q A_mu + m gamma g_{mu nu} v^nu`.
pub fn proper_initial_state(f: &BackgroundFields, x: &[f64], v: &[f64; 3], tau: f64) -> Result<ExtendedState> {
    let gamma = gamma_factor(f, x, v)?;
    let low = f.metric.lower(x, &lab_velocity(f.c, v));
    let a = f.a(x);
    let p = (0..4).map(|mu| f.charge * a[mu] + f.mass * gamma * low[mu]).collect();
    ExtendedState::new(x.to_vec(), p, tau)
}

/// Integrates the explicit `h~` equations over `tau_grid`. Samples hold
/// `x^mu`, `aux = pi_mu` and the mass-shell residual.
pub fn integrate_proper_time(f: &BackgroundFields, s0: &ExtendedState, tau_grid: &[f64]) -> Result<Trajectory> {
    let rhs = |tau: f64, y: &[f64]| -> Result<Vec<f64>> {
        let (dx, dp) = proper_time_rhs_tilde(f, &ExtendedState::from_flat(y, tau))?;
        Ok(dx.into_iter().chain(dp).collect())
    };
    let ys = ode::integrate(rhs, &s0.flat(), tau_grid, |_, _| Ok(()))?;
    let mut samples = Vec::with_capacity(ys.len());
    for (tau, y) in tau_grid.iter().zip(ys) {
        let s = ExtendedState::from_flat(&y, *tau);
        let up = f.metric.raise(&s.x, &kinetic_covector(f, &s))?;
        samples.push(Sample {
            lambda: *tau,
            residual: Some(mass_shell_residual(f, &s.x, &up)),
            x: s.x,
            aux: s.p,
        });
    }
    Ok(Trajectory {
        kind: TrajectoryKind::Phase,
        samples,
    })
}

/// Four-velocity `u^mu = g^{mu nu}(pi - qA)_nu / m` at a phase-space point.
pub fn four_velocity(f: &BackgroundFields, s: &ExtendedState) -> Result<Vec<f64>> {
    Ok(f.metric
        .raise(&s.x, &kinetic_covector(f, s))?
        .into_iter()
        .map(|v| v / f.mass)
        .collect())
}

/// Coordinate-time extended Hamiltonian `H = h(x, pi) - c p^0` on
/// `(x^mu, pi_mu)` with `p^0 = -pi_0` and the all-plus bracket, so that
/// `dx^0/dlambda = c`. `h` is the mass-shell form [`energy_h_phase`].
pub fn make_rel_coordinate_h(f: &BackgroundFields) -> ExtHamiltonian {
    let f1 = f.clone();
    let obs = Observable::new("h(x,pi) - c p^0", move |s| {
        energy_h_phase(&f1, &s.x, &[s.p[1], s.p[2], s.p[3]]).unwrap_or(f64::NAN) + f1.c * s.p[0]
    });
    ExtHamiltonian::new(4, "rel-coordinate-time", obs).with_convention(BracketConvention::AllPlus)
}

/// Proper-time extended Hamiltonian
/// `H = p_i p^i / (2m) + m c^2 + p_0 c gamma` with
/// `gamma = (|g_00| - p^2/(p^0)^2)^(-1/2)`, `p = pi - qA`, `p^0 = g^{00} p_0`,
/// and the all-plus bracket. Off-shell points evaluate to NaN.
pub fn make_rel_proper_h(f: &BackgroundFields) -> ExtHamiltonian {
    let f1 = f.clone();
    let obs = Observable::new("p^2/2m + mc^2 + p0 c gamma", move |s| {
        let k = kinetic_covector(&f1, s);
        let g = f1.g(&s.x);
        let p2 = match spatial_kinetic_sq(&f1, &s.x, &[s.p[1], s.p[2], s.p[3]]) {
            Ok(v) => v,
            Err(_) => return f64::NAN,
        };
        let p0_up = k[0] / g[(0, 0)];
        let radicand = f1.g00(&s.x) - p2 / (p0_up * p0_up);
        if !(radicand > 0.0) {
            return f64::NAN;
        }
        let (m, c) = (f1.mass, f1.c);
        p2 / (2.0 * m) + m * c * c + k[0] * c / radicand.sqrt()
    });
    ExtHamiltonian::new(4, "rel-proper-time", obs).with_convention(BracketConvention::AllPlus)
}

/// Rest state of [`make_rel_proper_h`] at `x`: zero spatial momentum and
/// `p_0 = -m c sqrt(|g_00|)`, i.e. `p^0 = m c / sqrt(|g_00|)`.
pub fn rel_proper_rest_state(f: &BackgroundFields, x: &[f64], lambda: f64) -> Result<ExtendedState> {
    let a = f.a(x);
    let p0 = -f.mass * f.c * f.g00(x).sqrt() + f.charge * a[0];
    let p = vec![p0, f.charge * a[1], f.charge * a[2], f.charge * a[3]];
    ExtendedState::new(x.to_vec(), p, lambda)
}

/// Residual of the co-moving consistency condition
/// `q d_0 A_rho - q d_rho A_0 - (m c / 2) d_rho |g_00|`. Diagnostic only.
pub fn comoving_consistency(f: &BackgroundFields, x: &[f64]) -> Result<[f64; 4]> {
    let da = f.potential_derivatives(x)?;
    let dg = diff::gradient(&|y: &[f64]| f.g00(y), x)?;
    let q = f.charge;
    Ok([0, 1, 2, 3].map(|rho| q * da[0][rho] - q * da[rho][0] - 0.5 * f.mass * f.c * dg[rho]))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn free(m: f64, c: f64) -> BackgroundFields {
        BackgroundFields::flat(|_| [0.0; 4], 0.0, m, c).unwrap()
    }

    #[test]
    fn gamma_examples() {
        let f = free(1.0, 2.0);
        let x = [0.0; 4];
        assert_eq!(gamma_factor(&f, &x, &[0.0; 3]).unwrap(), 1.0);
        assert!((gamma_factor(&f, &x, &[1.2, 0.0, 0.0]).unwrap() - 1.25).abs() < 1e-14);
        assert!(matches!(
            gamma_factor(&f, &x, &[2.5, 0.0, 0.0]),
            Err(Error::SuperluminalState { .. })
        ));
        let w = BackgroundFields::weak_gravity(|_| 0.1, 1.0, 1.0).unwrap();
        assert!((gamma_factor(&w, &x, &[0.0; 3]).unwrap() - 1.118034).abs() < 1e-6);
    }

    #[test]
    fn energy_examples() {
        let f = free(2.0, 3.0);
        assert!((energy_h(&f, &[0.0; 4], &[0.0; 3]).unwrap() - 18.0).abs() < 1e-12);
        let w = BackgroundFields::weak_gravity(|_| 0.1, 1.0, 1.0).unwrap();
        let h = energy_h(&w, &[0.0; 4], &[0.0; 3]).unwrap();
        assert!((h - 0.8 * 1.118034).abs() < 1e-6);
    }

    #[test]
    fn momentum_round_trip() {
        let f = BackgroundFields::flat(|x| [-0.2 * x[1], 0.1 * x[2], 0.3, 0.0], 0.7, 1.5, 1.0).unwrap();
        let x = [0.0, 0.4, -0.3, 0.2];
        let v = [0.3, -0.2, 0.5];
        let p = kinematic_momentum(&f, &x, &v).unwrap();
        let (back, gamma) = velocity_from_momentum(&f, &x, &p).unwrap();
        for i in 0..3 {
            assert!((back[i] - v[i]).abs() < 1e-14);
        }
        assert!((gamma - gamma_factor(&f, &x, &v).unwrap()).abs() < 1e-14);
        let pi = canonical_momentum(&f, &x, &v).unwrap();
        let a = f.a(&x);
        for i in 0..3 {
            assert!((pi[i] - (0.7 * a[i + 1] + 1.5 * gamma * v[i])).abs() < 1e-14);
        }
    }

    #[test]
    fn momentum_inversion_with_shift_iterates() {
        let m = Metric::constant(DMatrix::from_row_slice(
            4,
            4,
            &[-1.0, 0.1, 0.0, 0.0, 0.1, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0],
        ))
        .unwrap();
        let f = BackgroundFields::new(m, |_| [0.0; 4], 0.0, 1.0, 1.0).unwrap();
        let v = [0.3, 0.1, -0.2];
        let p = kinematic_momentum(&f, &[0.0; 4], &v).unwrap();
        let (back, _) = velocity_from_momentum(&f, &[0.0; 4], &p).unwrap();
        for i in 0..3 {
            assert!((back[i] - v[i]).abs() < 1e-10);
        }
    }

    #[test]
    fn both_energy_forms_agree_on_shell() {
        let f = BackgroundFields::flat(|x| [-0.1 * x[1], 0.0, 0.2 * x[1], 0.0], 1.0, 1.0, 1.0).unwrap();
        let x = [0.0, 0.5, 0.1, 0.0];
        let v = [0.4, 0.2, -0.1];
        let gamma = gamma_factor(&f, &x, &v).unwrap();
        let pi = canonical_momentum(&f, &x, &v).unwrap();
        let h = energy_h(&f, &x, &v).unwrap();
        let hm = energy_h_momentum(&f, &x, &pi, gamma * f.mass * f.c).unwrap();
        let hp = energy_h_phase(&f, &x, &pi).unwrap();
        assert!((h - hm).abs() < 1e-12);
        assert!((h - hp).abs() < 1e-12);
        assert!(matches!(
            energy_h_momentum(&f, &x, &pi, 0.1),
            Err(Error::OffShellState { .. })
        ));
    }

    #[test]
    fn mass_shell_examples() {
        let f = free(1.0, 1.0);
        assert_eq!(mass_shell_residual(&f, &[0.0; 4], &[1.0, 0.0, 0.0, 0.0]), 0.0);
        let (g, v) = (1.25, 0.6);
        assert!(mass_shell_residual(&f, &[0.0; 4], &[g, g * v, 0.0, 0.0]) < 1e-15);
        assert!((gamma_from_momenta(&f, &[0.0; 4], &[g, g * v, 0.0, 0.0]).unwrap() - g).abs() < 1e-14);
    }

    #[test]
    fn halved_flow_vanishes_on_shell_and_has_unit_rate() {
        let f = free(1.0, 1.0);
        let s = proper_initial_state(&f, &[0.0; 4], &[0.6, 0.0, 0.0], 0.0).unwrap();
        assert!(h_tilde(&f, &s).abs() < 1e-14);
        let (u, _) = proper_time_rhs_tilde(&f, &s).unwrap();
        assert!((u[0] - 1.25).abs() < 1e-14);
        assert!((u[1] - 0.75).abs() < 1e-14);
    }

    #[test]
    fn proper_rest_state_is_on_shell() {
        let f = free(2.0, 1.5);
        let s = rel_proper_rest_state(&f, &[0.0; 4], 0.0).unwrap();
        let h = make_rel_proper_h(&f);
        assert!(h.value(&s).abs() < 1e-12);
        // p^0 = -p_0 in flat space
        assert!((-s.p[0] - 2.0 * 1.5).abs() < 1e-14);
    }
}
