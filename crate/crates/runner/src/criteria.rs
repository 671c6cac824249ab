//! The acceptance criteria as executable checks.
//!
//! Each criterion returns one or more [`Check`]s. Randomized probes draw
//! from a ChaCha stream seeded by the context, so runs are reproducible.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ri_mech::el::{gauge_invariance_check, integrate_el, GaugeClosure};
use ri_mech::ext_hamiltonian::{
    ext_bracket, evolve, jacobi_residual, make_coordinate_time_h, make_proper_time_h, make_time_reversal_h,
    parametrization_rate, reversal_mismatch, BracketConvention, EvolveOptions, Observable,
};
use ri_mech::extended_phase::{
    make_minkowski, make_weak_field, max_spatial_speed, ExtendedState, SignatureConvention, SpeedBound, Trajectory,
};
use ri_mech::field::ScalarField;
use ri_mech::interp::hermite;
use ri_mech::lagrangian::{check_fl_equivalence, hamiltonian_function, LagrangianSpec, VectorField};
use ri_mech::ode::uniform_grid;
use ri_mech::quantize::{
    apply_p0, energy_shift_weak_gravity, inner_product_windowed, max_resolved_step, plane_wave, pointwise_ratio,
    proper_time_norm, running_average, schrodinger_residual, synth_psi_coordinate, synth_psi_proper, synth_psi_rest,
    PhiField, UniformGrid, WaveFunction,
};
use ri_mech::rel_particle::{
    four_velocity, gamma_factor, gamma_from_momenta, integrate_coordinate_time, integrate_proper_time,
    make_proper_time_hamiltonian, proper_initial_state, BackgroundFields, ProperTimeForm,
};

use crate::error::RunError;
use crate::result::Check;

pub const COUNT: u32 = 11;

pub const TITLES: [&str; COUNT as usize] = [
    "homogeneity and Hamiltonian identities",
    "extended bracket table",
    "parametrization detection and reversal",
    "first- and second-order Lagrangian equivalence",
    "relativistic particle",
    "quantization norms",
    "operator eigenvalues",
    "Schrodinger residual",
    "weak-gravity energy shift",
    "running averages",
    "signature analysis",
];

/// Seed and threshold scale shared by all criteria.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Context {
    pub seed: u64,
    pub tol_scale: f64,
}

impl Default for Context {
    fn default() -> Self {
        Self { seed: 0, tol_scale: 1.0 }
    }
}

impl Context {
    fn rng(&self, stream: u64) -> ChaCha8Rng {
        let mut r = ChaCha8Rng::seed_from_u64(self.seed);
        r.set_stream(stream);
        r
    }
}

/// Outcome of one criterion.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub number: u32,
    pub title: &'static str,
    pub checks: Vec<Check>,
}

impl Outcome {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    /// Check with the largest `measured / threshold`.
    pub fn worst(&self) -> Option<&Check> {
        let ratio = |c: &Check| {
            if !c.measured.is_finite() {
                f64::INFINITY
            } else if c.threshold > 0.0 {
                c.measured / c.threshold
            } else if c.measured > 0.0 {
                f64::INFINITY
            } else {
                0.0
            }
        };
        self.checks.iter().max_by(|a, b| ratio(a).total_cmp(&ratio(b)))
    }

    /// One summary line, e.g. `criterion  3 PASS  parametrization ... (worst: ...)`.
    pub fn line(&self) -> String {
        let status = if self.passed() { "PASS" } else { "FAIL" };
        let worst = self
            .worst()
            .map(|c| format!("{}: {:.3e} <= {:.3e}", c.name, c.measured, c.threshold))
            .unwrap_or_default();
        format!("criterion {:>2} {status}  {} ({worst})", self.number, self.title)
    }
}

/// Runs criterion `n` (1-based).
pub fn evaluate(n: u32, ctx: &Context) -> Result<Outcome, RunError> {
    let checks = match n {
        1 => homogeneity(ctx)?,
        2 => bracket_table(ctx)?,
        3 => parametrization(ctx)?,
        4 => equivalence(ctx)?,
        5 => relativistic(ctx)?,
        6 => norms(ctx)?,
        7 => eigenvalues(ctx)?,
        8 => schrodinger(ctx)?,
        9 => weak_gravity(ctx)?,
        10 => averages(ctx)?,
        11 => signatures(ctx)?,
        _ => return Err(RunError::Parameter(format!("no criterion {n}; valid range 1..={COUNT}"))),
    };
    Ok(Outcome {
        number: n,
        title: TITLES[n as usize - 1],
        checks: checks.into_iter().map(|c| c.scaled(ctx.tol_scale)).collect(),
    })
}

fn check(n: u32, name: &str, measured: f64, threshold: f64) -> Check {
    Check::at_most(n.to_string(), name, measured, threshold)
}

fn timelike<R: Rng>(rng: &mut R) -> Vec<f64> {
    let t = rng.gen_range(0.5..3.0);
    let mut v = vec![t];
    v.extend((0..3).map(|_| t * rng.gen_range(-0.5..0.5)));
    v
}

fn homogeneity(ctx: &Context) -> Result<Vec<Check>, RunError> {
    let mut rng = ctx.rng(1);
    let phi = ScalarField::polynomial(vec![1.5, 0.3, 0.8]);
    let l_phi = LagrangianSpec::phi_velocity(phi);
    let mut worst_phi = 0.0f64;
    for _ in 0..100 {
        let x = [rng.gen_range(-2.0..2.0)];
        let v = [rng.gen_range(0.1..3.0) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 }];
        let p = l_phi.dv(&x, &v)?;
        let scale = (p[0] * v[0]).abs() + l_phi.value(&x, &v).abs();
        worst_phi = worst_phi.max(hamiltonian_function(&l_phi, &x, &v)?.abs() / scale);
    }

    let metric = make_weak_field(|x| 0.05 * x[1].sin() * (0.5 * x[2]).cos(), 1.0, SignatureConvention::PlusMinus);
    let potential: VectorField =
        std::sync::Arc::new(|x: &[f64]| vec![0.1 * x[1].sin(), 0.2 * x[0], -0.1 * x[3], 0.05]);
    let l1 = LagrangianSpec::metric_length_with_potential(metric.clone(), Some(potential));
    let l2 = LagrangianSpec::metric_quadratic(metric);
    let (mut worst_l1, mut worst_l2) = (0.0f64, 0.0f64);
    for _ in 0..100 {
        let x: Vec<f64> = (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let v = timelike(&mut rng);
        let p = l1.dv(&x, &v)?;
        let pv: f64 = p.iter().zip(&v).map(|(a, b)| a * b).sum();
        let scale = pv.abs() + l1.value(&x, &v).abs();
        worst_l1 = worst_l1.max(hamiltonian_function(&l1, &x, &v)?.abs() / scale);
        let h2 = hamiltonian_function(&l2, &x, &v)?;
        let lv = l2.value(&x, &v);
        worst_l2 = worst_l2.max((h2 - lv).abs() / lv.abs());
    }
    Ok(vec![
        check(1, "H = 0 for phi(q) v", worst_phi, 1e-10),
        check(1, "H = 0 for sqrt(g(v,v)) + A.v", worst_l1, 1e-10),
        check(1, "H = L for g(v,v)", worst_l2, 1e-8),
    ])
}

/// Random polynomial of total degree <= 3 over the flat state of a 4-D
/// extended state.
fn random_cubic<R: Rng>(rng: &mut R) -> Observable {
    let terms = (0..rng.gen_range(1..=4))
        .map(|_| {
            let mut e = vec![0u32; 8];
            for _ in 0..rng.gen_range(1..=3) {
                e[rng.gen_range(0..8)] += 1;
            }
            (rng.gen_range(-1.0..1.0), e)
        })
        .collect();
    Observable::polynomial(terms)
}

fn random_state<R: Rng>(rng: &mut R, dim: usize) -> ExtendedState {
    let mut draw = || (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect::<Vec<f64>>();
    let x = draw();
    let p = draw();
    ExtendedState::new(x, p, 0.0).expect("finite state")
}

fn bracket_table(ctx: &Context) -> Result<Vec<Check>, RunError> {
    let mut rng = ctx.rng(2);
    let mut table_dev = 0.0f64;
    for _ in 0..5 {
        let s = random_state(&mut rng, 4);
        for mu in 0..4 {
            for nu in 0..4 {
                let (q, p) = (Observable::coordinate(mu), Observable::momentum(nu));
                let expected = match (mu == nu, mu) {
                    (false, _) => 0.0,
                    (true, 0) => -1.0,
                    (true, _) => 1.0,
                };
                let tm = BracketConvention::TimeMinus;
                table_dev = table_dev
                    .max((ext_bracket(&q, &p, &s, tm)? - expected).abs())
                    .max((ext_bracket(&p, &q, &s, tm)? + expected).abs())
                    .max(ext_bracket(&q, &Observable::coordinate(nu), &s, tm)?.abs())
                    .max(ext_bracket(&p, &Observable::momentum(mu), &s, tm)?.abs());
            }
        }
    }
    let (mut anti, mut jacobi) = (0.0f64, 0.0f64);
    for i in 0..20 {
        let (f, g, h) = (random_cubic(&mut rng), random_cubic(&mut rng), random_cubic(&mut rng));
        let s = random_state(&mut rng, 4);
        for conv in [BracketConvention::TimeMinus, BracketConvention::AllPlus] {
            anti = anti.max((ext_bracket(&f, &g, &s, conv)? + ext_bracket(&g, &f, &s, conv)?).abs());
            if i < 10 {
                jacobi = jacobi.max(jacobi_residual(&f, &g, &h, &s, conv)?.abs());
            }
        }
    }
    Ok(vec![
        check(2, "bracket table diag(-1, 1, 1, 1)", table_dev, 1e-10),
        check(2, "antisymmetry", anti, 1e-10),
        check(2, "Jacobi residual", jacobi, 1e-6),
    ])
}

fn parametrization(_ctx: &Context) -> Result<Vec<Check>, RunError> {
    let c = 1.0;
    let states: Vec<ExtendedState> = [(0.0, 0.3), (0.7, -1.2), (2.5, 0.4), (4.0, 2.0)]
        .iter()
        .map(|(t, q)| ExtendedState::new(vec![c * t, *q], vec![1.3, 0.4], 0.0).expect("finite"))
        .collect();
    let hcl = Observable::polynomial(vec![(0.5, vec![0, 0, 0, 2]), (0.3, vec![0, 2, 0, 0])]);
    let h_t = make_coordinate_time_h(hcl, 2, c);
    let phi = ScalarField::sinusoid(2.0, 0.3, 1.1, 0.2);
    let h_tau = make_proper_time_h(phi.clone(), c);
    let h_rev = make_time_reversal_h(1.3, c);
    let (mut dev_t, mut dev_tau, mut dev_rev) = (0.0f64, 0.0f64, 0.0f64);
    for s in &states {
        dev_t = dev_t.max((parametrization_rate(&h_t, s, c)? - 1.0).abs());
        dev_tau = dev_tau.max((parametrization_rate(&h_tau, s, c)? - 1.0 / phi.value(s.x[0] / c)).abs());
        dev_rev = dev_rev.max((parametrization_rate(&h_rev, s, c)? + 1.0).abs());
    }
    let s0 = ExtendedState::new(vec![0.0, 0.3], vec![phi.value(0.0) / c, 0.0], 0.0)?;
    let grid = uniform_grid(0.0, 3.0, 600);
    let reversal = reversal_mismatch(&h_tau, &s0, &grid, EvolveOptions::default())?;
    Ok(vec![
        check(3, "rate of H_t = 1", dev_t, 1e-9),
        check(3, "rate of H_tau = 1/phi(t)", dev_tau, 1e-9),
        check(3, "rate of c p0 - E = -1", dev_rev, 1e-9),
        check(3, "-H reverses the flow", reversal, 1e-9),
    ])
}

fn equivalence(_ctx: &Context) -> Result<Vec<Check>, RunError> {
    let square = ScalarField::with_derivative("square", |l| l * l, |l| 2.0 * l);
    let mut worst = 0.0f64;
    let weak = make_weak_field(|x| 0.05 * x[1].sin(), 1.0, SignatureConvention::PlusMinus);
    let flat = make_minkowski(4, SignatureConvention::PlusMinus)?;
    for m in [flat, weak] {
        let l1 = LagrangianSpec::metric_length(m.clone());
        let l2 = LagrangianSpec::metric_quadratic(m);
        let grid = uniform_grid(0.0, 2.0, 2000);
        let t = integrate_el(&l2, &[0.0, 0.3, 0.0, 0.0], &[1.0, 0.2, 0.1, 0.0], &grid, None)?;
        let rep = check_fl_equivalence(&l1, &square, &t, 1e-6)?;
        worst = worst.max(rep.base_residual);
    }

    let phi = ScalarField::polynomial(vec![1.0, 0.0, 1.0]);
    let l = LagrangianSpec::phi_velocity(phi.clone());
    let grid = uniform_grid(0.0, 2.0, 2000);
    let t = integrate_el(&l, &[0.1], &[0.8], &grid, Some(&GaugeClosure::ConservedLagrangian))?;
    let rep = gauge_invariance_check(&phi, &t, &|lam, _, _| 1.0 + 0.5 * lam.sin())?;
    Ok(vec![
        check(4, "EL(L1) residual on L2 geodesics", worst, 1e-7),
        check(4, "gauge invariance mismatch", rep.mismatch, 1e-6),
    ])
}

fn lab_velocity(sample_aux: &[f64], c: f64) -> [f64; 3] {
    [1, 2, 3].map(|i| c * sample_aux[i] / sample_aux[0])
}

fn em_background(weak: bool) -> Result<BackgroundFields, RunError> {
    let a = |x: &[f64]| [0.05 * x[1], -0.5 * x[2], 0.5 * x[1], 0.0];
    let mut f = if weak {
        BackgroundFields::weak_gravity(|x: &[f64]| 0.01 * x[1].sin(), 1.0, 1.0)?
    } else {
        BackgroundFields::flat(|_| [0.0; 4], 0.0, 1.0, 1.0)?
    };
    f.potential = std::sync::Arc::new(a);
    f.charge = 1.0;
    Ok(f)
}

/// Cumulative Simpson integral at even sample indices.
pub fn simpson_even(h: f64, y: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0];
    let mut acc = 0.0;
    let mut k = 0;
    while k + 2 < y.len() {
        acc += h / 3.0 * (y[k] + 4.0 * y[k + 1] + y[k + 2]);
        out.push(acc);
        k += 2;
    }
    out
}

/// Coordinate-time positions at even samples paired with the proper-time
/// trajectory evaluated at the matching `tau`.
pub fn matched_positions(
    f: &BackgroundFields,
    coord: &Trajectory,
    proper: &Trajectory,
    tau_of_t: &[f64],
) -> Result<Vec<([f64; 4], [f64; 4])>, RunError> {
    let tau = proper.lambdas();
    let mut u = vec![Vec::new(); 4];
    let mut x = vec![Vec::new(); 4];
    for s in &proper.samples {
        let st = ExtendedState::new(s.x.clone(), s.aux.clone(), s.lambda)?;
        let w = four_velocity(f, &st)?;
        for mu in 0..4 {
            u[mu].push(w[mu]);
            x[mu].push(s.x[mu]);
        }
    }
    Ok(tau_of_t
        .iter()
        .enumerate()
        .map(|(k, tk)| {
            let s = &coord.samples[2 * k];
            let xc = [0, 1, 2, 3].map(|mu| s.x[mu]);
            let xp = [0, 1, 2, 3].map(|mu| hermite(&tau, &x[mu], &u[mu], *tk));
            (xc, xp)
        })
        .collect())
}

fn position_gap(f: &BackgroundFields, coord: &Trajectory, proper: &Trajectory, tau_of_t: &[f64]) -> Result<f64, RunError> {
    Ok(matched_positions(f, coord, proper, tau_of_t)?
        .iter()
        .flat_map(|(a, b)| (0..4).map(move |mu| (a[mu] - b[mu]).abs()))
        .fold(0.0f64, f64::max))
}

fn relativistic(_ctx: &Context) -> Result<Vec<Check>, RunError> {
    let f = em_background(true)?;
    let (m, c) = (f.mass, f.c);
    let x0 = [0.0, 0.2, -0.1, 0.0];
    let v0 = [0.5, 0.1, 0.0];

    // coordinate-time flow
    let t_grid = uniform_grid(0.0, 4.0, 4000);
    let coord = integrate_coordinate_time(&f, &[x0[1], x0[2], x0[3]], &v0, &t_grid)?;
    let mut gamma_dev = 0.0f64;
    for s in &coord.samples {
        let gv = gamma_factor(&f, &s.x, &lab_velocity(&s.aux, c))?;
        let gp = gamma_from_momenta(&f, &s.x, &s.aux)?;
        gamma_dev = gamma_dev.max((gv - gp).abs() / gp);
    }

    // proper-time flow of h~
    let s0 = proper_initial_state(&f, &x0, &v0, 0.0)?;
    let inv_gamma: Vec<f64> = coord.samples.iter().map(|s| m * c / s.aux[0]).collect();
    let tau_of_t = simpson_even(t_grid[1] - t_grid[0], &inv_gamma);
    let tau_end = *tau_of_t.last().expect("non-empty");
    let tau_grid = uniform_grid(0.0, tau_end * 1.01, 4000);
    let proper = integrate_proper_time(&f, &s0, &tau_grid)?;
    for s in &proper.samples {
        let st = ExtendedState::new(s.x.clone(), s.aux.clone(), s.lambda)?;
        let u = four_velocity(&f, &st)?;
        let pu: Vec<f64> = u.iter().map(|w| m * w).collect();
        let gu = u[0] / c;
        let gp = gamma_from_momenta(&f, &s.x, &pu)?;
        let gv = gamma_factor(&f, &s.x, &[1, 2, 3].map(|i| c * u[i] / u[0]))?;
        gamma_dev = gamma_dev.max((gu - gp).abs() / gp).max((gv - gp).abs() / gp);
    }
    let shell0 = proper.samples[0].residual.unwrap_or(0.0);
    let shell_drift = proper
        .samples
        .iter()
        .skip(1)
        .map(|s| (s.residual.unwrap_or(f64::NAN) - shell0).abs() / (s.lambda * (m * c).powi(2)))
        .fold(0.0f64, f64::max);
    let gap = position_gap(&f, &coord, &proper, &tau_of_t)?;

    // h versus h~: same states at lambda and 2 lambda, velocities in ratio 2
    let h = make_proper_time_hamiltonian(&f, ProperTimeForm::Unmodified);
    let ht = make_proper_time_hamiltonian(&f, ProperTimeForm::Halved);
    let opts = EvolveOptions::unconstrained();
    let th = evolve(&h, &s0, &uniform_grid(0.0, 1.0, 200), opts)?;
    let tt = evolve(&ht, &s0, &uniform_grid(0.0, 2.0, 200), opts)?;
    let mut ratio_dev = 0.0f64;
    for (a, b) in th.samples.iter().zip(&tt.samples) {
        let sa = ExtendedState::new(a.x.clone(), a.aux.clone(), a.lambda)?;
        let sb = ExtendedState::new(b.x.clone(), b.aux.clone(), b.lambda)?;
        let norm = |v: Vec<f64>| v.iter().map(|x| x * x).sum::<f64>().sqrt();
        let ratio = norm(h.vector_field(&sa)?.0) / norm(ht.vector_field(&sb)?.0);
        ratio_dev = ratio_dev.max((ratio - 2.0).abs());
    }

    // speed in a uniform magnetic field over 1e4 steps
    let fm = BackgroundFields::flat(|x: &[f64]| [0.0, -0.5 * x[2], 0.5 * x[1], 0.0], 1.0, 1.0, 1.0)?;
    let traj = integrate_coordinate_time(&fm, &[1.0, 0.0, 0.0], &[0.0, 0.5, 0.0], &uniform_grid(0.0, 100.0, 10_000))?;
    let speed = |aux: &[f64]| (aux[1] * aux[1] + aux[2] * aux[2] + aux[3] * aux[3]).sqrt();
    let p0 = speed(&traj.samples[0].aux);
    let drift = traj
        .samples
        .iter()
        .map(|s| (speed(&s.aux) - p0).abs() / p0)
        .fold(0.0f64, f64::max);

    Ok(vec![
        check(5, "gamma identity (relative)", gamma_dev, 1e-8),
        check(5, "mass-shell drift per unit tau / (mc)^2", shell_drift, 1e-8),
        check(5, "h vs h~ velocity ratio - 2", ratio_dev, 1e-9),
        check(5, "coordinate vs proper trajectory", gap, 1e-6),
        check(5, "magnetic speed drift (relative)", drift, 1e-7),
    ])
}

/// Proper-gauge windowed norm of a field tending to `p0`, over `[0, delta]`.
pub fn proper_norm(phi: &PhiField, max_phi: f64, delta: f64, hbar: f64) -> Result<f64, RunError> {
    let grid = UniformGrid::with_max_step(0.0, delta, max_resolved_step(max_phi, hbar))?;
    let psi = synth_psi_proper(phi, &grid, hbar, 1.0)?;
    Ok(inner_product_windowed(&psi, &psi, 0.0, delta)?.re)
}

fn norms(_ctx: &Context) -> Result<Vec<Check>, RunError> {
    let (p0, amp, width) = (2.0, 0.5, 1.0);
    let phi = PhiField::new(ScalarField::bump(p0, amp, width), width, p0);
    let mut checks = Vec::new();
    let mut scaled = Vec::new();
    for delta in [1e2, 1e3, 1e4] {
        let n = proper_norm(&phi, p0 + amp, delta, 1.0)?;
        let err = (n - p0).abs();
        checks.push(
            check(6, &format!("|norm - p0| at Delta = {delta:e}"), err, p0 / delta).with_detail(format!("norm = {n:.12}")),
        );
        scaled.push(err * delta);
    }
    let spread = scaled
        .windows(2)
        .map(|w| (w[0] / w[1] - 1.0).abs())
        .fold(0.0f64, f64::max);
    checks.push(
        check(6, "error * Delta constant (1/Delta scaling)", spread, 0.1)
            .with_detail(format!("error * Delta = {scaled:?}")),
    );

    let (m, c) = (2.0, 1.0);
    let fields = BackgroundFields::weak_gravity(|x: &[f64]| 0.01 * (0.5 * x[0]).sin(), m, c)?;
    let grid = UniformGrid::with_max_step(0.0, 40.0, max_resolved_step(1.1 * m * c, 1.0))?;
    let psi = synth_psi_rest(&fields, [0.0; 3], &grid, 1.0, (m * c).sqrt())?;
    let n = proper_time_norm(&psi, &fields, [0.0; 3], 3.0, 30.0)?;
    checks.push(check(6, "rest-frame proper-time norm - 1", (n - 1.0).abs(), 1e-6));
    Ok(checks)
}

fn eigen_error(p0: f64, steps: usize, conjugate: bool) -> Result<(f64, f64), RunError> {
    let grid = UniformGrid::new(0.0, 10.0, steps)?;
    let psi = plane_wave(p0, &grid, 1.0, 1.0, conjugate)?;
    let ratio = pointwise_ratio(&apply_p0(&psi)?, &psi)?;
    let target = if conjugate { -p0 } else { p0 };
    let err = ratio
        .iter()
        .skip(1)
        .take(ratio.len() - 2)
        .map(|r| (r - target).norm() / p0)
        .fold(0.0f64, f64::max);
    Ok((err, grid.step))
}

fn eigenvalues(_ctx: &Context) -> Result<Vec<Check>, RunError> {
    let p0 = 2.0;
    let mut checks = Vec::new();
    for (conj, label) in [(false, "+p0"), (true, "-p0")] {
        let (e1, h) = eigen_error(p0, 2000, conj)?;
        let (e2, _) = eigen_error(p0, 4000, conj)?;
        checks.push(check(7, &format!("relative error of eigenvalue {label}"), e1, (p0 * h).powi(2)));
        checks.push(
            check(7, &format!("halving ratio for {label} - 4"), (e1 / e2 - 4.0).abs(), 0.5)
                .with_detail(format!("ratio = {:.6}", e1 / e2)),
        );
    }
    Ok(checks)
}

fn combine(a: &WaveFunction, b: &WaveFunction, alpha: Complex64, beta: Complex64) -> WaveFunction {
    WaveFunction {
        values: a.values.iter().zip(&b.values).map(|(x, y)| alpha * x + beta * y).collect(),
        ..a.clone()
    }
}

fn schrodinger(_ctx: &Context) -> Result<Vec<Check>, RunError> {
    let phi = PhiField::new(ScalarField::sinusoid(2.0, 0.5, 1.3, 0.0), 0.0, 2.0);
    let (alpha, beta) = (Complex64::new(0.6, -0.8), Complex64::new(1.3, 0.4));
    let mut single = Vec::new();
    let mut mixed = Vec::new();
    let mut bound_excess = 0.0f64;
    for steps in [2000, 4000, 8000] {
        let grid = UniformGrid::new(0.0, 8.0, steps)?;
        let a = synth_psi_coordinate(&phi, &grid, 1.0, 1.0)?;
        let b = synth_psi_coordinate(&phi, &grid, 1.0, 2.5)?;
        let (ra, rb) = (schrodinger_residual(&a, &phi)?, schrodinger_residual(&b, &phi)?);
        let rm = schrodinger_residual(&combine(&a, &b, alpha, beta), &phi)?;
        bound_excess = bound_excess.max(rm - (alpha.norm() * ra + beta.norm() * rb));
        single.push(ra);
        mixed.push(rm);
    }
    let order = |r: &[f64]| r.windows(2).map(|w| (w[0] / w[1] - 4.0).abs()).fold(0.0f64, f64::max);
    Ok(vec![
        check(8, "refinement ratio - 4 (single solution)", order(&single), 0.5)
            .with_detail(format!("residuals = {single:?}")),
        check(8, "refinement ratio - 4 (superposition)", order(&mixed), 0.5)
            .with_detail(format!("residuals = {mixed:?}")),
        check(8, "superposition residual above linear bound", bound_excess.max(0.0), 1e-12),
    ])
}

/// Measured imaginary energy component along a rest-frame wave function in
/// `U(t) = u0 sin(omega t)`, with the comparison target `-(hbar/c^2) dU/dt`.
pub struct WeakGravityRun {
    pub t: Vec<f64>,
    pub real: Vec<f64>,
    pub imag: Vec<f64>,
    pub target: Vec<f64>,
}

impl WeakGravityRun {
    /// `sqrt(sum (imag - target)^2 / sum target^2)`.
    pub fn rms_relative_error(&self) -> f64 {
        let num: f64 = self.imag.iter().zip(&self.target).map(|(a, b)| (a - b).powi(2)).sum();
        let den: f64 = self.target.iter().map(|b| b * b).sum();
        (num / den).sqrt()
    }

    /// Least-squares slope of `imag` against `target`.
    pub fn slope(&self) -> f64 {
        let num: f64 = self.imag.iter().zip(&self.target).map(|(a, b)| a * b).sum();
        let den: f64 = self.target.iter().map(|b| b * b).sum();
        num / den
    }
}

pub fn weak_gravity_run(
    u0: f64,
    omega: f64,
    mass: f64,
    c: f64,
    hbar: f64,
    grid: &UniformGrid,
) -> Result<WeakGravityRun, RunError> {
    let fields = BackgroundFields::weak_gravity(move |x: &[f64]| u0 * (omega * x[0] / c).sin(), mass, c)?;
    let psi = synth_psi_rest(&fields, [0.0; 3], grid, hbar, 1.0)?;
    let ratio = energy_shift_weak_gravity(&fields, [0.0; 3], &psi)?;
    let mut run = WeakGravityRun {
        t: Vec::new(),
        real: Vec::new(),
        imag: Vec::new(),
        target: Vec::new(),
    };
    // one-sided end stencils excluded
    for (i, r) in ratio.iter().enumerate().skip(1).take(ratio.len() - 2) {
        let t = grid.at(i);
        run.t.push(t);
        run.real.push(r.re);
        run.imag.push(r.im);
        run.target.push(-(hbar / (c * c)) * u0 * omega * (omega * t).cos());
    }
    Ok(run)
}

fn weak_gravity(_ctx: &Context) -> Result<Vec<Check>, RunError> {
    let c = 1.0;
    let grid = UniformGrid::new(0.0, 6.0, 60_000)?;
    let run = weak_gravity_run(1e-4 * c * c, 2.0, 1.0, c, 1.0, &grid)?;
    Ok(vec![check(9, "RMS relative error of Im(c P0 psi / psi)", run.rms_relative_error(), 0.05)
        .with_detail(format!("fitted slope against -(hbar/c^2) dU/dt = {:.6}", run.slope()))])
}

fn averages(_ctx: &Context) -> Result<Vec<Check>, RunError> {
    let phi0 = 1.7;
    let constant = PhiField::constant(phi0);
    let mut dev_const = 0.0f64;
    for d in [0.5, 3.0, 40.0] {
        dev_const = dev_const.max((running_average(&constant, d)? - phi0).abs());
    }

    let omega = 1.3;
    let periodic = PhiField::new(ScalarField::sinusoid(phi0, 0.4, omega, 0.0), 0.0, phi0);
    let mut dev_periodic = 0.0f64;
    for k in [1.0, 2.0, 5.0] {
        let d = 2.0 * std::f64::consts::PI * k / omega;
        dev_periodic = dev_periodic.max((running_average(&periodic, d)? - phi0).abs());
    }

    let (base, amp, width) = (1.5, 0.8, 2.0);
    let bump = PhiField::new(ScalarField::bump(base, amp, width), width, base);
    let j = amp * width / 2.0;
    let mut dev_bump = 0.0f64;
    for d in [5.0, 10.0, 100.0, 1000.0] {
        dev_bump = dev_bump.max((running_average(&bump, d)? - (base + j / d)).abs());
    }

    // elapsed proper time over lab time, read off the H_tau flow
    let mut dev_flow = 0.0f64;
    for phi in [&constant, &periodic, &bump] {
        let h = make_proper_time_h(phi.field.clone(), 1.0);
        let s0 = ExtendedState::new(vec![0.0, 0.0], vec![phi.value(0.0), 0.0], 0.0)?;
        let tau_end = 12.0;
        let traj = evolve(&h, &s0, &uniform_grid(0.0, tau_end, 6000), EvolveOptions::default())?;
        let t_end = traj.last().x[0];
        dev_flow = dev_flow.max((tau_end / t_end - running_average(phi, t_end)?).abs());
    }

    Ok(vec![
        check(10, "constant phi", dev_const, 1e-12),
        check(10, "periodic phi over whole periods", dev_periodic, 1e-10),
        check(10, "localized bump vs phi0 + J/Delta", dev_bump, 1e-8),
        check(10, "average vs Delta tau / Delta t from the flow", dev_flow, 1e-8),
    ])
}

fn signatures(_ctx: &Context) -> Result<Vec<Check>, RunError> {
    let mut mismatches = 0usize;
    let mut bound_dev = 0.0f64;
    let mut cases = 0usize;
    for dim in 2..=6usize {
        for mask in 0u32..(1 << dim) {
            let sig: Vec<i8> = (0..dim).map(|i| if mask >> i & 1 == 1 { 1 } else { -1 }).collect();
            let times = sig.iter().filter(|s| **s > 0).count();
            let bound = max_spatial_speed(&sig)?;
            let unit = matches!(bound, SpeedBound::Bounded(b) if (b - 1.0).abs() <= 1e-6);
            if unit != (times == 1) {
                mismatches += 1;
            }
            if times == 1 {
                if let SpeedBound::Bounded(b) = bound {
                    bound_dev = bound_dev.max((b - 1.0).abs());
                } else {
                    bound_dev = f64::INFINITY;
                }
            }
            cases += 1;
        }
    }
    Ok(vec![
        check(11, "signatures misclassified", mismatches as f64, 0.0).with_detail(format!("{cases} signatures")),
        check(11, "single-time bound - 1", bound_dev, 1e-6),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simpson_integrates_cubics_exactly() {
        let h = 0.25;
        let y: Vec<f64> = (0..9).map(|i| (i as f64 * h).powi(3)).collect();
        let s = simpson_even(h, &y);
        assert_eq!(s.len(), 5);
        assert!((s[4] - 2.0f64.powi(4) / 4.0).abs() < 1e-12);
    }

    #[test]
    fn unknown_criterion() {
        assert!(evaluate(0, &Context::default()).is_err());
        assert!(evaluate(12, &Context::default()).is_err());
    }

    #[test]
    fn outcome_line_names_worst_check() {
        let o = Outcome {
            number: 3,
            title: "x",
            checks: vec![check(3, "a", 1e-12, 1e-9), check(3, "b", 2e-9, 1e-9)],
        };
        assert!(!o.passed());
        assert!(o.line().contains("FAIL") && o.line().contains("b:"));
    }
}
