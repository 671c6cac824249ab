//! Euler-Lagrange flows, reparametrization and gauge checks.

use std::fmt;
use std::sync::Arc;

use nalgebra::DVector;

use crate::diff;
use crate::error::{Error, Result};
use crate::extended_phase::{Metric, Sample, Trajectory, TrajectoryKind};
use crate::field::ScalarField;
use crate::lagrangian::{dot, hessian_is_singular, LagrangianSpec};
use crate::ode;
use crate::quad;

pub type AccelFn = Arc<dyn Fn(f64, &[f64], &[f64]) -> Vec<f64> + Send + Sync>;

/// Extra equation that fixes the parametrization when the velocity Hessian
/// is singular.
#[derive(Clone)]
pub enum GaugeClosure {
    /// Keep `L` constant along the flow. Determines the acceleration only in
    /// one dimension, where `L = phi(q) v` gives `dv/dlambda = -v^2 dln(phi)/dq`.
    ConservedLagrangian,
    /// Integrate a non-degenerate Lagrangian whose solutions solve the
    /// singular one, e.g. `L^2` for `L = sqrt(g(v,v))`.
    Equivalent(LagrangianSpec),
    /// Supplied acceleration `a(lambda, x, v)`.
    Explicit(AccelFn),
}

impl fmt::Debug for GaugeClosure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::ConservedLagrangian => write!(f, "ConservedLagrangian"),
            Self::Equivalent(l) => write!(f, "Equivalent({})", l.label),
            Self::Explicit(_) => write!(f, "Explicit"),
        }
    }
}

/// Acceleration from the Euler-Lagrange equations of a non-degenerate `L`:
/// `H_vv a = dL/dx - H_vx v`.
pub fn el_acceleration(l: &LagrangianSpec, x: &[f64], v: &[f64]) -> Result<Vec<f64>> {
    let n = l.dim;
    let hvv = l.hess_vv(x, v)?;
    let hvx = l.hess_vx(x, v)?;
    let fx = l.dx(x, v)?;
    let rhs = DVector::from_iterator(n, (0..n).map(|a| fx[a] - (0..n).map(|b| hvx[(a, b)] * v[b]).sum::<f64>()));
    hvv.lu()
        .solve(&rhs)
        .map(|a| a.iter().copied().collect())
        .ok_or(Error::UnderdeterminedSystem { dim: n })
}

fn closure_acceleration(
    l: &LagrangianSpec,
    closure: &GaugeClosure,
    lambda: f64,
    x: &[f64],
    v: &[f64],
) -> Result<Vec<f64>> {
    match closure {
        GaugeClosure::ConservedLagrangian => {
            if l.dim != 1 {
                return Err(Error::UnderdeterminedSystem { dim: l.dim });
            }
            let p = l.dv(x, v)?[0];
            if p == 0.0 {
                return Err(Error::IntegrationDiverged { lambda });
            }
            let fx = l.dx(x, v)?[0];
            Ok(vec![-fx * v[0] / p])
        }
        GaugeClosure::Equivalent(eq) => el_acceleration(eq, x, v),
        GaugeClosure::Explicit(f) => Ok(f(lambda, x, v)),
    }
}

/// Integrates the Euler-Lagrange equations of `l` from `(x0, v0)` over
/// `grid` with RK4. A singular velocity Hessian at the start requires a
/// gauge closure.
pub fn integrate_el(
    l: &LagrangianSpec,
    x0: &[f64],
    v0: &[f64],
    grid: &[f64],
    closure: Option<&GaugeClosure>,
) -> Result<Trajectory> {
    let n = l.dim;
    if x0.len() != n || v0.len() != n {
        return Err(Error::InvalidDimension {
            dim: x0.len(),
            reason: format!("initial data must have {n} entries"),
        });
    }
    ode::validate_grid(grid)?;
    let singular = hessian_is_singular(l, x0, v0)?;
    let closure = match (singular, closure) {
        (false, _) => None,
        (true, Some(c)) => Some(c),
        (true, None) => return Err(Error::UnderdeterminedSystem { dim: n }),
    };
    let mut y0 = x0.to_vec();
    y0.extend_from_slice(v0);
    let rhs = |lambda: f64, y: &[f64]| -> Result<Vec<f64>> {
        let (x, v) = y.split_at(n);
        let a = match closure {
            None => el_acceleration(l, x, v),
            Some(c) => closure_acceleration(l, c, lambda, x, v),
        }
        .map_err(|e| match e {
            Error::DerivativeFailure { .. } => Error::IntegrationDiverged { lambda },
            other => other,
        })?;
        let mut out = v.to_vec();
        out.extend(a);
        Ok(out)
    };
    let ys = ode::integrate(rhs, &y0, grid, |_, _| Ok(()))?;
    Ok(Trajectory {
        kind: TrajectoryKind::Configuration,
        samples: grid
            .iter()
            .zip(ys)
            .map(|(lambda, y)| Sample {
                lambda: *lambda,
                x: y[..n].to_vec(),
                aux: y[n..].to_vec(),
                residual: None,
            })
            .collect(),
    })
}

/// Parametrization rate `dxi/dlambda` as a function of `(lambda, x, aux)`.
pub type RateFn<'a> = &'a dyn Fn(f64, &[f64], &[f64]) -> f64;

fn rates(traj: &Trajectory, rate: RateFn<'_>) -> Result<Vec<f64>> {
    let r: Vec<f64> = traj
        .samples
        .iter()
        .map(|s| rate(s.lambda, &s.x, &s.aux))
        .collect();
    let sign = r.first().copied().unwrap_or(1.0).signum();
    for (s, ri) in traj.samples.iter().zip(&r) {
        if !ri.is_finite() || *ri == 0.0 || ri.signum() != sign {
            return Err(Error::GaugeDegenerate { lambda: s.lambda });
        }
    }
    Ok(r)
}

/// Re-expresses a trajectory in the parameter `xi` with `dxi/dlambda = rate`.
/// `xi` starts at the first `lambda`; velocities are divided by the rate,
/// momenta are left unchanged.
pub fn reparametrize(traj: &Trajectory, rate: RateFn<'_>) -> Result<Trajectory> {
    let r = rates(traj, rate)?;
    let lam = traj.lambdas();
    let xi = quad::cumulative_trapezoid(&lam, &r);
    let start = lam.first().copied().unwrap_or(0.0);
    Ok(Trajectory {
        kind: traj.kind,
        samples: traj
            .samples
            .iter()
            .zip(xi.iter().zip(&r))
            .map(|(s, (xi, r))| Sample {
                lambda: start + xi,
                x: s.x.clone(),
                aux: match traj.kind {
                    TrajectoryKind::Configuration => s.aux.iter().map(|v| v / r).collect(),
                    TrajectoryKind::Phase => s.aux.clone(),
                },
                residual: s.residual,
            })
            .collect(),
    })
}

/// `integral L dlambda` along a configuration trajectory (trapezoid).
pub fn action(l: &LagrangianSpec, traj: &Trajectory) -> f64 {
    let lam = traj.lambdas();
    let vals: Vec<f64> = traj.samples.iter().map(|s| l.value(&s.x, &s.aux)).collect();
    quad::trapezoid(&lam, &vals)
}

fn interval_norms(traj: &Trajectory, metric: &Metric) -> Result<Vec<f64>> {
    if traj.kind != TrajectoryKind::Configuration {
        return Err(Error::InvalidInput("proper time needs velocities".into()));
    }
    let s = metric.signature()[0] as f64;
    traj.samples
        .iter()
        .map(|smp| {
            let n = s * metric.norm_squared(&smp.x, &smp.aux);
            let scale = metric.at(&smp.x).abs().max() * dot(&smp.aux, &smp.aux);
            if n < -1e-12 * scale.max(f64::MIN_POSITIVE) {
                Err(Error::SpaceLikeSegment {
                    lambda: smp.lambda,
                    norm: n,
                })
            } else {
                Ok(n.max(0.0))
            }
        })
        .collect()
}

/// Cumulative proper time `integral sqrt(g(v,v)) dlambda / c`. The time
/// axis is index 0; its sign in the signature fixes which sign of `g(v,v)`
/// counts as time-like.
pub fn proper_time_along(traj: &Trajectory, metric: &Metric, c: f64) -> Result<Vec<f64>> {
    let rates: Vec<f64> = interval_norms(traj, metric)?
        .into_iter()
        .map(|n| n.sqrt() / c)
        .collect();
    Ok(quad::cumulative_trapezoid(&traj.lambdas(), &rates))
}

/// `dt/dtau` per sample; the speed of light cancels between `dt/dlambda`
/// and `dtau/dlambda`.
pub fn time_dilation_along(traj: &Trajectory, metric: &Metric) -> Result<Vec<f64>> {
    let norms = interval_norms(traj, metric)?;
    Ok(traj
        .samples
        .iter()
        .zip(norms)
        .map(|(s, n)| s.aux[0] / n.sqrt())
        .collect())
}

/// Residuals of the gauge-invariant 1-D equation of motion in two gauges.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaugeReport {
    /// `max |d(1/v)/dlambda - dln(phi)/dq|`.
    pub residual_lambda: f64,
    /// `max |d(1/w)/dxi - dln(psi)/dq|` with `w = dq/dxi`, `psi = phi * rate`.
    pub residual_xi: f64,
    /// `max` over samples of the difference between the two residuals.
    pub mismatch: f64,
    /// Range of the new-gauge Lagrangian density `L / rate`.
    pub lagrangian_min: f64,
    pub lagrangian_max: f64,
}

/// Evaluates `d(1/v)/dlambda = dln(phi)/dq` along a 1-D trajectory of
/// `L = phi(q) v`, and its transform under `dxi = rate dlambda`, where
/// `phi = psi dlambda/dxi`.
pub fn gauge_invariance_check(
    phi: &ScalarField,
    traj: &Trajectory,
    rate: RateFn<'_>,
) -> Result<GaugeReport> {
    if traj.kind != TrajectoryKind::Configuration || traj.samples.iter().any(|s| s.x.len() != 1) {
        return Err(Error::InvalidInput("gauge check needs a 1-D configuration trajectory".into()));
    }
    let lam = traj.lambdas();
    let q = traj.coordinate(0);
    let v = traj.auxiliary(0);
    if let Some(i) = v.iter().position(|v| *v == 0.0 || !v.is_finite()) {
        return Err(Error::GaugeDegenerate { lambda: lam[i] });
    }
    let r = rates(traj, rate)?;
    let inv_v: Vec<f64> = v.iter().map(|v| 1.0 / v).collect();
    let d_inv_v = diff::along(&lam, &inv_v);
    let inv_w: Vec<f64> = r.iter().zip(&v).map(|(r, v)| r / v).collect();
    let d_inv_w = diff::along(&lam, &inv_w);
    let ln_r: Vec<f64> = r.iter().map(|r| r.abs().ln()).collect();
    let d_ln_r = diff::along(&lam, &ln_r);
    let mut rep = GaugeReport {
        residual_lambda: 0.0,
        residual_xi: 0.0,
        mismatch: 0.0,
        lagrangian_min: f64::INFINITY,
        lagrangian_max: f64::NEG_INFINITY,
    };
    for i in 0..lam.len() {
        let dlnphi = phi.log_derivative(q[i]);
        let res_l = d_inv_v[i] - dlnphi;
        let dlnpsi = dlnphi + d_ln_r[i] / v[i];
        let res_x = d_inv_w[i] / r[i] - dlnpsi;
        rep.residual_lambda = rep.residual_lambda.max(res_l.abs());
        rep.residual_xi = rep.residual_xi.max(res_x.abs());
        rep.mismatch = rep.mismatch.max((res_x - res_l).abs());
        let lnew = phi.value(q[i]) * v[i] / r[i];
        rep.lagrangian_min = rep.lagrangian_min.min(lnew);
        rep.lagrangian_max = rep.lagrangian_max.max(lnew);
    }
    Ok(rep)
}

/// Running proper length `integral phi(q) dq` along a 1-D trajectory.
pub fn proper_length_along(phi: &ScalarField, traj: &Trajectory) -> Vec<f64> {
    let lam = traj.lambdas();
    let dl: Vec<f64> = traj
        .samples
        .iter()
        .map(|s| phi.value(s.x[0]) * s.aux[0])
        .collect();
    quad::cumulative_trapezoid(&lam, &dl)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::extended_phase::{make_minkowski, make_weak_field, SignatureConvention};
    use crate::lagrangian::check_fl_equivalence;
    use crate::ode::uniform_grid;

    #[test]
    fn constant_phi_gives_uniform_motion() {
        let l = LagrangianSpec::phi_velocity(ScalarField::constant(2.0));
        let grid = uniform_grid(0.0, 3.0, 30);
        let t = integrate_el(&l, &[0.5], &[1.5], &grid, Some(&GaugeClosure::ConservedLagrangian)).unwrap();
        for s in &t.samples {
            assert!((s.x[0] - (0.5 + 1.5 * s.lambda)).abs() < 1e-12);
            assert!((s.aux[0] - 1.5).abs() < 1e-12);
        }
    }

    #[test]
    fn singular_without_closure_is_underdetermined() {
        let l = LagrangianSpec::phi_velocity(ScalarField::constant(2.0));
        let grid = uniform_grid(0.0, 1.0, 10);
        assert!(matches!(
            integrate_el(&l, &[0.0], &[1.0], &grid, None),
            Err(Error::UnderdeterminedSystem { dim: 1 })
        ));
        let m = make_minkowski(4, SignatureConvention::PlusMinus).unwrap();
        let l1 = LagrangianSpec::metric_length(m);
        assert!(matches!(
            integrate_el(&l1, &[0.0; 4], &[1.0, 0.1, 0.0, 0.0], &grid, Some(&GaugeClosure::ConservedLagrangian)),
            Err(Error::UnderdeterminedSystem { dim: 4 })
        ));
    }

    #[test]
    fn conserved_closure_matches_closed_form() {
        // phi = 1 + q^2: phi(q) v is constant, so q + q^3/3 = q0 + q0^3/3 + L0 lambda.
        let phi = ScalarField::polynomial(vec![1.0, 0.0, 1.0]);
        let l = LagrangianSpec::phi_velocity(phi);
        let grid = uniform_grid(0.0, 2.0, 2000);
        let t = integrate_el(&l, &[0.2], &[0.7], &grid, Some(&GaugeClosure::ConservedLagrangian)).unwrap();
        let l0 = (1.0 + 0.04) * 0.7;
        for s in &t.samples {
            let q = s.x[0];
            let lhs = q + q * q * q / 3.0;
            let rhs = 0.2 + 0.008 / 3.0 + l0 * s.lambda;
            assert!((lhs - rhs).abs() < 1e-10);
            assert!(((1.0 + q * q) * s.aux[0] - l0).abs() < 1e-10);
        }
    }

    #[test]
    fn newtonian_free_particle() {
        let l = LagrangianSpec::kinetic(1);
        let t = integrate_el(&l, &[0.0], &[2.0], &uniform_grid(0.0, 1.0, 10), None).unwrap();
        assert!((t.last().x[0] - 2.0).abs() < 1e-8);
    }

    #[test]
    fn reparametrize_rates() {
        let l = LagrangianSpec::kinetic(1);
        let t = integrate_el(&l, &[0.0], &[2.0], &uniform_grid(0.0, 1.0, 10), None).unwrap();
        let same = reparametrize(&t, &|_, _, _| 1.0).unwrap();
        assert_eq!(same, t);
        let twice = reparametrize(&t, &|_, _, _| 2.0).unwrap();
        assert!((twice.last().lambda - 2.0).abs() < 1e-15);
        assert!((twice.last().aux[0] - 1.0).abs() < 1e-15);
        assert!(matches!(
            reparametrize(&t, &|lam, _, _| lam - 0.5),
            Err(Error::GaugeDegenerate { .. })
        ));
    }

    #[test]
    fn proper_time_examples() {
        let m = make_minkowski(2, SignatureConvention::PlusMinus).unwrap();
        let line = |vx: f64| Trajectory {
            kind: TrajectoryKind::Configuration,
            samples: uniform_grid(0.0, 1.0, 10)
                .into_iter()
                .map(|t| Sample { lambda: t, x: vec![t, vx * t], aux: vec![1.0, vx], residual: None })
                .collect(),
        };
        let tau = proper_time_along(&line(0.0), &m, 1.0).unwrap();
        assert!((tau.last().unwrap() - 1.0).abs() < 1e-15);
        let tau = proper_time_along(&line(0.6), &m, 1.0).unwrap();
        assert!((tau.last().unwrap() - 0.8).abs() < 1e-15);
        let tau = proper_time_along(&line(1.0), &m, 1.0).unwrap();
        assert_eq!(*tau.last().unwrap(), 0.0);
        assert!(matches!(
            proper_time_along(&line(1.5), &m, 1.0),
            Err(Error::SpaceLikeSegment { .. })
        ));
        let mp = make_minkowski(2, SignatureConvention::MinusPlus).unwrap();
        let tau = proper_time_along(&line(0.6), &mp, 1.0).unwrap();
        assert!((tau.last().unwrap() - 0.8).abs() < 1e-15);
    }

    #[test]
    fn gauge_check_constant_phi_is_exact() {
        let phi = ScalarField::constant(3.0);
        let l = LagrangianSpec::phi_velocity(phi.clone());
        let t = integrate_el(&l, &[0.0], &[1.0], &uniform_grid(0.0, 1.0, 50), Some(&GaugeClosure::ConservedLagrangian)).unwrap();
        let rep = gauge_invariance_check(&phi, &t, &|_, _, _| 1.0).unwrap();
        assert!(rep.mismatch < 1e-14);
        assert!(rep.residual_lambda < 1e-14);
    }

    #[test]
    fn gauge_check_proper_length_rate() {
        let phi = ScalarField::polynomial(vec![1.0, 0.0, 1.0]);
        let l = LagrangianSpec::phi_velocity(phi.clone());
        let t = integrate_el(&l, &[0.1], &[0.9], &uniform_grid(0.0, 1.0, 1000), Some(&GaugeClosure::ConservedLagrangian)).unwrap();
        let p2 = phi.clone();
        let rep = gauge_invariance_check(&phi, &t, &move |_, x, v| p2.value(x[0]) * v[0]).unwrap();
        assert!((rep.lagrangian_min - 1.0).abs() < 1e-8);
        assert!((rep.lagrangian_max - 1.0).abs() < 1e-8);
        assert!(rep.mismatch < 1e-6);
    }

    #[test]
    fn squared_length_geodesic_solves_length_equation_in_weak_field() {
        let m = make_weak_field(|x| 0.05 * (x[1]).sin(), 1.0, SignatureConvention::PlusMinus);
        let l1 = LagrangianSpec::metric_length(m.clone());
        let l2 = LagrangianSpec::metric_quadratic(m.clone());
        let grid = uniform_grid(0.0, 2.0, 2000);
        let t = integrate_el(&l2, &[0.0, 0.3, 0.0, 0.0], &[1.0, 0.2, 0.1, 0.0], &grid, None).unwrap();
        let pow2 = ScalarField::with_derivative("sq", |l| l * l, |l| 2.0 * l);
        let rep = check_fl_equivalence(&l1, &pow2, &t, 1e-6).unwrap();
        assert!(rep.base_residual < 1e-7, "{rep:?}");
        assert!(rep.max_residual < 1e-7, "{rep:?}");
        let dil = time_dilation_along(&t, &m).unwrap();
        assert!(dil.iter().all(|d| *d > 0.0));
    }

    #[test]
    fn fl_check_rejects_drifting_gauge() {
        let m = make_minkowski(2, SignatureConvention::PlusMinus).unwrap();
        let l1 = LagrangianSpec::metric_length(m);
        let samples = uniform_grid(0.0, 1.0, 20)
            .into_iter()
            .map(|s| Sample { lambda: s, x: vec![s + s * s, 0.0], aux: vec![1.0 + 2.0 * s, 0.0], residual: None })
            .collect();
        let t = Trajectory { kind: TrajectoryKind::Configuration, samples };
        let f = ScalarField::with_derivative("sq", |l| l * l, |l| 2.0 * l);
        assert!(matches!(check_fl_equivalence(&l1, &f, &t, 1e-8), Err(Error::NotApplicable(_))));
    }
}
