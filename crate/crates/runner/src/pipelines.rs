//! Scenario execution: one pipeline per kind, each producing named tables
//! and checks.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::time::Instant;

use serde_json::{Map, Value};

use ri_mech::el::{
    gauge_invariance_check, integrate_el, reparametrize, time_dilation_along, GaugeClosure,
};
use ri_mech::ext_hamiltonian::{
    ext_bracket, evolve, make_coordinate_time_h, make_momentum_h, make_moving_particle_h, make_proper_length_h,
    make_proper_time_h, make_time_reversal_h, parametrization_rate, reversal_mismatch, BracketConvention,
    EvolveOptions, ExtHamiltonian, Observable,
};
use ri_mech::extended_phase::{ExtendedState, SignatureConvention};
use ri_mech::field::ScalarField;
use ri_mech::lagrangian::{el_residual, hamiltonian_function, LagrangianSpec};
use ri_mech::ode::uniform_grid;
use ri_mech::quad;
use ri_mech::quantize::{
    inner_product_windowed, max_resolved_step, plane_wave, running_average, schrodinger_residual,
    synth_psi_coordinate, synth_psi_proper, synth_psi_spatial, PhiField, SpatialGauge, UniformGrid,
};
use ri_mech::rel_particle::{
    energy_h, four_velocity, gamma_factor, gamma_from_momenta, integrate_coordinate_time, integrate_proper_time,
    make_proper_time_hamiltonian, proper_initial_state, BackgroundFields, ProperTimeForm,
};

use crate::config::{Kind, ScenarioConfig};
use crate::criteria::{self, Context};
use crate::error::RunError;
use crate::registry;
use crate::result::{Check, RunResult};
use crate::table::{Cell, Table};

/// Settings shared by every scenario of a run.
#[derive(Debug, Clone)]
pub struct RunOptions {
    pub out_dir: PathBuf,
    pub tol_scale: f64,
    /// Overrides the scenario's own `seed` parameter.
    pub seed: Option<u64>,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            out_dir: PathBuf::from("out"),
            tol_scale: 1.0,
            seed: None,
        }
    }
}

pub type Tables = BTreeMap<String, Table>;

/// Runs a scenario and writes its declared CSV outputs.
pub fn run_scenario(cfg: &ScenarioConfig, opts: &RunOptions) -> Result<RunResult, RunError> {
    let wrap = |e: RunError| RunError::Scenario {
        name: cfg.name.clone(),
        source: Box::new(e),
    };
    let (mut result, tables) = compute_scenario(cfg, opts).map_err(wrap)?;
    for out in &cfg.outputs {
        let table = tables
            .get(&out.table)
            .ok_or_else(|| {
                RunError::Output(format!(
                    "no table {:?}; available: {}",
                    out.table,
                    tables.keys().cloned().collect::<Vec<_>>().join(", ")
                ))
            })
            .map_err(wrap)?;
        let selected = table.select(&out.columns).map_err(wrap)?;
        selected.write_csv(&opts.out_dir.join(&out.path)).map_err(wrap)?;
        result.outputs.push(out.path.clone());
    }
    Ok(result)
}

/// Runs a scenario without writing anything.
pub fn compute_scenario(cfg: &ScenarioConfig, opts: &RunOptions) -> Result<(RunResult, Tables), RunError> {
    let start = Instant::now();
    let p = Params {
        map: &cfg.parameters,
        tol_scale: opts.tol_scale,
    };
    let seed = opts
        .seed
        .or_else(|| cfg.parameters.get("seed").and_then(Value::as_u64))
        .unwrap_or(0);
    let mut res = RunResult::new(cfg.name.clone(), cfg.kind, seed);
    let tables = match cfg.kind {
        Kind::ElFlow => el_flow(&p, &mut res)?,
        Kind::ExtFlow => ext_flow(&p, &mut res)?,
        Kind::RelParticle => rel_particle(&p, &mut res)?,
        Kind::Quantize => quantize(&p, &mut res)?,
        Kind::InvariantSuite => invariant_suite(&p, seed, &mut res)?,
    };
    res.wall_time_s = start.elapsed().as_secs_f64();
    Ok((res, tables))
}

struct Params<'a> {
    map: &'a Map<String, Value>,
    tol_scale: f64,
}

impl Params<'_> {
    fn get(&self, k: &str) -> Option<&Value> {
        self.map.get(k)
    }

    fn missing(k: &str) -> RunError {
        RunError::Parameter(format!("missing {k:?}"))
    }

    fn num(&self, k: &str) -> Result<f64, RunError> {
        self.get(k).and_then(Value::as_f64).ok_or_else(|| Self::missing(k))
    }

    fn num_or(&self, k: &str, default: f64) -> f64 {
        self.get(k).and_then(Value::as_f64).unwrap_or(default)
    }

    fn nums(&self, k: &str) -> Result<Vec<f64>, RunError> {
        let a = self.get(k).and_then(Value::as_array).ok_or_else(|| Self::missing(k))?;
        Ok(a.iter().filter_map(Value::as_f64).collect())
    }

    fn three(&self, k: &str) -> Result<[f64; 3], RunError> {
        let v = self.nums(k)?;
        v.try_into()
            .map_err(|_| RunError::Parameter(format!("{k:?} needs three entries")))
    }

    fn str_or<'b>(&'b self, k: &str, default: &'b str) -> &'b str {
        self.get(k).and_then(Value::as_str).unwrap_or(default)
    }

    fn bool_or(&self, k: &str, default: bool) -> bool {
        self.get(k).and_then(Value::as_bool).unwrap_or(default)
    }

    fn grid_spec(&self, k: &str) -> Result<(f64, f64, usize), RunError> {
        let g = self.get(k).ok_or_else(|| Self::missing(k))?;
        let f = |n: &str| g.get(n).and_then(Value::as_f64).ok_or_else(|| Self::missing(&format!("{k}.{n}")));
        let steps = g
            .get("steps")
            .and_then(Value::as_u64)
            .ok_or_else(|| Self::missing(&format!("{k}.steps")))?;
        Ok((f("start")?, f("end")?, steps as usize))
    }

    fn grid(&self, k: &str) -> Result<Vec<f64>, RunError> {
        let (a, b, n) = self.grid_spec(k)?;
        Ok(uniform_grid(a, b, n))
    }

    fn uniform(&self, k: &str) -> Result<UniformGrid, RunError> {
        let (a, b, n) = self.grid_spec(k)?;
        Ok(UniformGrid::new(a, b, n)?)
    }

    fn field(&self, k: &str) -> Result<ScalarField, RunError> {
        registry::build_field(self.get(k).ok_or_else(|| Self::missing(k))?)
    }

    fn phi(&self, k: &str) -> Result<PhiField, RunError> {
        registry::build_phi(self.get(k).ok_or_else(|| Self::missing(k))?)
    }

    fn c(&self) -> f64 {
        self.num_or("c", 1.0)
    }

    fn hbar(&self) -> f64 {
        self.num_or("hbar", 1.0)
    }

    /// Named tolerance from `tolerances`, else `default`; times the run scale.
    fn tol(&self, name: &str, default: f64) -> f64 {
        let t = self
            .get("tolerances")
            .and_then(|t| t.get(name))
            .and_then(Value::as_f64)
            .unwrap_or(default);
        t * self.tol_scale
    }
}

fn max_abs(v: impl IntoIterator<Item = f64>) -> f64 {
    v.into_iter().fold(0.0f64, |m, x| if x.is_nan() { f64::NAN } else { m.max(x.abs()) })
}

fn indexed(prefix: &str, n: usize) -> Vec<String> {
    (0..n).map(|i| format!("{prefix}{i}")).collect()
}

// ---------------------------------------------------------------- el-flow

fn el_flow(p: &Params, res: &mut RunResult) -> Result<Tables, RunError> {
    let x0 = p.nums("x0")?;
    let v0 = p.nums("v0")?;
    let dim = x0.len();
    let c = p.c();
    let kind = p.str_or("lagrangian", "");
    let metric = || registry::build_metric(p.get("metric"), dim, c, SignatureConvention::PlusMinus);
    let lag = match kind {
        "phi-velocity" => {
            if dim != 1 {
                return Err(RunError::Parameter("phi-velocity is one-dimensional".into()));
            }
            LagrangianSpec::phi_velocity(p.field("phi")?)
        }
        "metric-length" => LagrangianSpec::metric_length(metric()?),
        "metric-quadratic" => LagrangianSpec::metric_quadratic(metric()?),
        "kinetic" => LagrangianSpec::kinetic(dim),
        other => return Err(RunError::Parameter(format!("unknown lagrangian {other:?}"))),
    };
    let closure = match p.get("closure").and_then(Value::as_str) {
        None => None,
        Some("conserved-lagrangian") => Some(GaugeClosure::ConservedLagrangian),
        Some("equivalent-quadratic") => {
            if kind != "metric-length" {
                return Err(RunError::Parameter("equivalent-quadratic closes metric-length only".into()));
            }
            Some(GaugeClosure::Equivalent(LagrangianSpec::metric_quadratic(metric()?)))
        }
        Some(other) => return Err(RunError::Parameter(format!("unknown closure {other:?}"))),
    };
    let grid = p.grid("grid")?;
    let traj = integrate_el(&lag, &x0, &v0, &grid, closure.as_ref())?;

    let resid = el_residual(&lag, &traj)?;
    let mut cols = vec!["lambda".to_string()];
    cols.extend(indexed("x", dim));
    cols.extend(indexed("v", dim));
    cols.extend(["L", "H", "el_residual"].map(String::from));
    let dilation = match kind {
        "metric-length" | "metric-quadratic" => time_dilation_along(&traj, &metric()?).ok(),
        _ => None,
    };
    if dilation.is_some() {
        cols.push("dt_dtau".into());
    }
    let mut main = Table::new(cols);
    let mut lvals = Vec::new();
    for (i, s) in traj.samples.iter().enumerate() {
        let l = lag.value(&s.x, &s.aux);
        lvals.push(l);
        let mut row = vec![s.lambda];
        row.extend(&s.x);
        row.extend(&s.aux);
        row.extend([l, hamiltonian_function(&lag, &s.x, &s.aux)?, resid[i]]);
        if let Some(d) = &dilation {
            row.push(d[i]);
        }
        main.push_nums(row);
    }
    let max_resid = max_abs(resid.iter().copied());
    res.record("max_el_residual", max_resid);
    res.check(Check::at_most("el-flow", "EL residual", max_resid, p.tol("el_residual", 1e-7)));
    if closure.is_some() {
        let span = (grid[grid.len() - 1] - grid[0]).abs();
        let drift = max_abs(lvals.iter().map(|l| l - lvals[0])) / span;
        res.record("lagrangian_drift_per_lambda", drift);
        res.check(Check::at_most("el-flow", "L drift per unit lambda", drift, p.tol("lagrangian_drift", 1e-8)));
    }
    if let Some(d) = &dilation {
        let backwards = d.iter().filter(|x| !(**x > 0.0)).count();
        res.check(Check::at_most("el-flow", "samples with dt/dtau <= 0", backwards as f64, 0.0));
    }

    let mut tables = Tables::new();
    if let Some(rate_def) = p.get("gauge_rate") {
        if kind != "phi-velocity" {
            return Err(RunError::Parameter("gauge_rate applies to phi-velocity".into()));
        }
        let phi = p.field("phi")?;
        let phi2 = phi.clone();
        let rate: Box<dyn Fn(f64, &[f64], &[f64]) -> f64> = if rate_def.as_str() == Some("proper-length") {
            Box::new(move |_, x: &[f64], v: &[f64]| phi2.value(x[0]) * v[0])
        } else {
            let r = registry::build_field(rate_def)?;
            Box::new(move |lam, _: &[f64], _: &[f64]| r.value(lam))
        };
        let rep = gauge_invariance_check(&phi, &traj, &*rate)?;
        res.record("gauge_residual_lambda", rep.residual_lambda);
        res.record("gauge_residual_xi", rep.residual_xi);
        res.record("gauge_mismatch", rep.mismatch);
        res.record("new_gauge_lagrangian_min", rep.lagrangian_min);
        res.record("new_gauge_lagrangian_max", rep.lagrangian_max);
        res.check(Check::at_most("el-flow", "gauge invariance mismatch", rep.mismatch, p.tol("gauge_mismatch", 1e-6)));
        let moved = reparametrize(&traj, &*rate)?;
        let mut gauge = Table::new(["xi", "q", "w", "L_new"]);
        for s in &moved.samples {
            gauge.push_nums([s.lambda, s.x[0], s.aux[0], lag.value(&s.x, &s.aux)]);
        }
        tables.insert("gauge".into(), gauge);
    }
    tables.insert("main".into(), main);
    Ok(tables)
}

// ---------------------------------------------------------------- ext-flow

fn convention(p: &Params) -> BracketConvention {
    match p.str_or("convention", "time-minus") {
        "all-plus" => BracketConvention::AllPlus,
        _ => BracketConvention::TimeMinus,
    }
}

fn classical_hamiltonian(p: &Params, dim: usize) -> Observable {
    let hcl = p.get("hcl");
    let m = hcl.and_then(|h| h.get("mass")).and_then(Value::as_f64).unwrap_or(1.0);
    let k = hcl.and_then(|h| h.get("k")).and_then(Value::as_f64).unwrap_or(0.0);
    let mut terms = Vec::new();
    for i in 1..dim {
        let mut ep = vec![0u32; 2 * dim];
        ep[dim + i] = 2;
        terms.push((0.5 / m, ep));
        if k != 0.0 {
            let mut eq = vec![0u32; 2 * dim];
            eq[i] = 2;
            terms.push((0.5 * k, eq));
        }
    }
    Observable::polynomial(terms)
}

fn build_ext_h(p: &Params, dim: usize) -> Result<(ExtHamiltonian, usize), RunError> {
    let c = p.c();
    Ok(match p.str_or("hamiltonian", "") {
        "coordinate-time" => (make_coordinate_time_h(classical_hamiltonian(p, dim), dim, c), 0),
        "proper-time" => (make_proper_time_h(p.field("phi")?, c), 0),
        "time-reversal" => (make_time_reversal_h(p.num("energy")?, c), 0),
        "proper-length" => (make_proper_length_h(p.field("phi")?), 1),
        "momentum" => (make_momentum_h(p.num("p_ref")?), 1),
        "moving-particle" => (
            make_moving_particle_h(p.num("velocity")?, p.num("p_ref")?, p.num("energy")?, c),
            0,
        ),
        other => return Err(RunError::Parameter(format!("unknown hamiltonian {other:?}"))),
    })
}

/// Adjusts `p[k]` by Newton steps until `H = 0`.
fn put_on_shell(h: &ExtHamiltonian, s: &mut ExtendedState, k: usize) -> Result<(), RunError> {
    for _ in 0..50 {
        let r = h.value(s);
        if r.abs() < 1e-14 {
            return Ok(());
        }
        let (_, dp) = h.observable().gradient(s)?;
        if dp[k] == 0.0 || !dp[k].is_finite() {
            break;
        }
        s.p[k] -= r / dp[k];
    }
    if h.value(s).abs() < 1e-12 {
        Ok(())
    } else {
        Err(RunError::Parameter(format!(
            "could not place the initial state on H = 0 by adjusting p{k}"
        )))
    }
}

fn ext_flow(p: &Params, res: &mut RunResult) -> Result<Tables, RunError> {
    let mut tables = Tables::new();
    if p.str_or("mode", "flow") == "bracket-table" {
        let dim = p.num_or("dim", 4.0) as usize;
        let conv = convention(p);
        let s = ExtendedState::new(
            (0..dim).map(|i| 0.1 * (i as f64 + 1.0)).collect(),
            (0..dim).map(|i| -0.2 * (i as f64 + 1.0)).collect(),
            0.0,
        )?;
        let mut cols = vec!["observable".to_string()];
        cols.extend((0..dim).map(|nu| format!("p_{nu}")));
        let mut table = Table::new(cols);
        let mut dev = 0.0f64;
        for mu in 0..dim {
            let mut row = vec![Cell::Text(format!("x^{mu}"))];
            for nu in 0..dim {
                let b = ext_bracket(&Observable::coordinate(mu), &Observable::momentum(nu), &s, conv)?;
                let expected = match (mu == nu, mu, conv) {
                    (false, _, _) => 0.0,
                    (true, 0, BracketConvention::TimeMinus) => -1.0,
                    _ => 1.0,
                };
                dev = dev.max((b - expected).abs());
                row.push(Cell::Num(b));
            }
            table.push(row);
        }
        res.record("bracket_table_deviation", dev);
        res.check(Check::at_most("ext-flow", "bracket table deviation", dev, p.tol("bracket", 1e-10)));
        tables.insert("brackets".into(), table);
        return Ok(tables);
    }

    let x0 = p.nums("x0")?;
    let p0 = p.nums("p0")?;
    if x0.len() != p0.len() {
        return Err(RunError::Parameter("x0 and p0 must have the same length".into()));
    }
    let dim = x0.len();
    let (h, shell_index) = build_ext_h(p, dim)?;
    let h = h.with_convention(convention(p));
    let mut s0 = ExtendedState::new(x0, p0, 0.0)?;
    if p.bool_or("on_shell", false) {
        put_on_shell(&h, &mut s0, shell_index)?;
    }
    let grid = p.grid("grid")?;
    let opts = EvolveOptions {
        initial_tol: p.tol("constraint", 1e-8),
        drift_per_lambda: p.tol("constraint_drift", 1e-7),
        enforce: true,
    };
    let traj = evolve(&h, &s0, &grid, opts)?;
    let mut cols = vec!["lambda".to_string()];
    cols.extend(indexed("x", dim));
    cols.extend(indexed("p", dim));
    cols.extend(["H", "rate"].map(String::from));
    let mut main = Table::new(cols);
    for smp in &traj.samples {
        let st = ExtendedState::new(smp.x.clone(), smp.aux.clone(), smp.lambda)?;
        let mut row = vec![smp.lambda];
        row.extend(&smp.x);
        row.extend(&smp.aux);
        row.push(h.value(&st));
        row.push(parametrization_rate(&h, &st, p.c())?);
        main.push_nums(row);
    }
    let span = (grid[grid.len() - 1] - grid[0]).abs();
    let drift = traj.max_residual() / span;
    res.record("max_constraint_residual", traj.max_residual());
    res.check(Check::at_most(
        "ext-flow",
        "constraint drift per unit lambda",
        drift,
        p.tol("constraint_drift", 1e-7),
    ));
    if p.bool_or("reverse", false) {
        let m = reversal_mismatch(&h, &s0, &grid, opts)?;
        res.record("reversal_mismatch", m);
        res.check(Check::at_most("ext-flow", "-H reverses the flow", m, p.tol("reversal", 1e-9)));
    }
    tables.insert("main".into(), main);
    Ok(tables)
}

// ---------------------------------------------------------------- rel-particle

fn background(p: &Params) -> Result<BackgroundFields, RunError> {
    registry::build_background(
        p.get("metric"),
        p.get("potential"),
        p.num_or("charge", 0.0),
        p.num_or("mass", 1.0),
        p.c(),
    )
}

fn is_pure_magnetic(p: &Params) -> bool {
    let flat = match p.get("metric") {
        None => true,
        Some(m) => m.as_str() == Some("flat") || m.get("type").and_then(Value::as_str) == Some("minkowski"),
    };
    let no_e = p
        .get("potential")
        .and_then(|x| x.get("e"))
        .and_then(Value::as_array)
        .map_or(true, |e| e.iter().all(|v| v.as_f64() == Some(0.0)));
    flat && no_e
}

fn is_static(p: &Params) -> bool {
    match p.get("metric") {
        Some(m) if m.get("type").and_then(Value::as_str) == Some("weak-field") => {
            m.get("axis").and_then(Value::as_u64).unwrap_or(0) != 0
        }
        _ => true,
    }
}

fn rel_particle(p: &Params, res: &mut RunResult) -> Result<Tables, RunError> {
    let f = background(p)?;
    let (m, c) = (f.mass, f.c);
    let x0 = p.three("x0")?;
    let v0 = p.three("v0")?;
    let mut tables = Tables::new();
    match p.str_or("mode", "coordinate-time") {
        "coordinate-time" => {
            let grid = p.grid("grid")?;
            let traj = integrate_coordinate_time(&f, &x0, &v0, &grid)?;
            let mut t = Table::new(["t", "x1", "x2", "x3", "v1", "v2", "v3", "speed", "gamma", "gamma_momenta", "h", "p_mag"]);
            let (mut gamma_dev, mut h_vals, mut p_mag) = (0.0f64, Vec::new(), Vec::new());
            for s in &traj.samples {
                let v = [1, 2, 3].map(|i| c * s.aux[i] / s.aux[0]);
                let g = gamma_factor(&f, &s.x, &v)?;
                let gp = gamma_from_momenta(&f, &s.x, &s.aux)?;
                gamma_dev = gamma_dev.max((g - gp).abs() / gp);
                let h = energy_h(&f, &s.x, &v)?;
                let pm = (s.aux[1].powi(2) + s.aux[2].powi(2) + s.aux[3].powi(2)).sqrt();
                h_vals.push(h);
                p_mag.push(pm);
                let speed = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
                t.push_nums([s.lambda, s.x[1], s.x[2], s.x[3], v[0], v[1], v[2], speed, g, gp, h, pm]);
            }
            res.check(Check::at_most("rel-particle", "gamma identity", gamma_dev, p.tol("gamma_identity", 1e-8)));
            let span = (grid[grid.len() - 1] - grid[0]).abs();
            if is_static(p) {
                let drift = max_abs(h_vals.iter().map(|h| h - h_vals[0])) / (span * m * c * c);
                res.record("energy_drift_per_t", drift);
                res.check(Check::at_most("rel-particle", "h drift per unit t / mc^2", drift, p.tol("energy_drift", 1e-7)));
            }
            if is_pure_magnetic(p) && p_mag[0] > 0.0 {
                let drift = max_abs(p_mag.iter().map(|x| (x - p_mag[0]) / p_mag[0]));
                res.record("speed_drift", drift);
                res.check(Check::at_most("rel-particle", "magnetic speed drift", drift, p.tol("speed_drift", 1e-7)));
            }
            tables.insert("main".into(), t);
        }
        "proper-time" => {
            let grid = p.grid("grid")?;
            let s0 = proper_initial_state(&f, &[c * grid[0], x0[0], x0[1], x0[2]], &v0, grid[0])?;
            let traj = integrate_proper_time(&f, &s0, &grid)?;
            let mut t = Table::new(["tau", "x0", "x1", "x2", "x3", "u0", "u1", "u2", "u3", "mass_shell", "dt_dtau"]);
            let shell0 = traj.samples[0].residual.unwrap_or(0.0);
            let (mut drift, mut backwards) = (0.0f64, 0usize);
            for s in &traj.samples {
                let st = ExtendedState::new(s.x.clone(), s.aux.clone(), s.lambda)?;
                let u = four_velocity(&f, &st)?;
                let shell = s.residual.unwrap_or(f64::NAN);
                let elapsed = s.lambda - grid[0];
                if elapsed > 0.0 {
                    drift = drift.max((shell - shell0).abs() / (elapsed * (m * c).powi(2)));
                }
                if !(u[0] > 0.0) {
                    backwards += 1;
                }
                let mut row = vec![s.lambda];
                row.extend(&s.x);
                row.extend(&u);
                row.extend([shell, u[0] / c]);
                t.push_nums(row);
            }
            res.record("mass_shell_drift", drift);
            res.check(Check::at_most("rel-particle", "mass-shell drift per unit tau / (mc)^2", drift, p.tol("mass_shell", 1e-8)));
            res.check(Check::at_most("rel-particle", "samples with dt/dtau <= 0", backwards as f64, 0.0));
            tables.insert("main".into(), t);
        }
        "factor-of-two" => {
            let (a, b, n) = p.grid_spec("grid")?;
            let x = [c * a, x0[0], x0[1], x0[2]];
            let s0 = proper_initial_state(&f, &x, &v0, a)?;
            let h = make_proper_time_hamiltonian(&f, ProperTimeForm::Unmodified);
            let ht = make_proper_time_hamiltonian(&f, ProperTimeForm::Halved);
            let opts = EvolveOptions::unconstrained();
            let th = evolve(&h, &s0, &uniform_grid(a, b, n), opts)?;
            let tt = evolve(&ht, &s0, &uniform_grid(a, a + 2.0 * (b - a), n), opts)?;
            let cols: Vec<String> = ["lambda"]
                .into_iter()
                .map(String::from)
                .chain(indexed("x", 4))
                .chain(indexed("dx", 4))
                .chain(["velocity_ratio".to_string()])
                .collect();
            let (mut th_table, mut tt_table) = (Table::new(cols.clone()), Table::new(cols));
            let mut dev = 0.0f64;
            let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
            for (sa, sb) in th.samples.iter().zip(&tt.samples) {
                let ea = ExtendedState::new(sa.x.clone(), sa.aux.clone(), sa.lambda)?;
                let eb = ExtendedState::new(sb.x.clone(), sb.aux.clone(), sb.lambda)?;
                let (va, _) = h.vector_field(&ea)?;
                let (vb, _) = ht.vector_field(&eb)?;
                let ratio = norm(&va) / norm(&vb);
                dev = dev.max((ratio - 2.0).abs());
                for (tab, s, v) in [(&mut th_table, sa, &va), (&mut tt_table, sb, &vb)] {
                    let mut row = vec![s.lambda];
                    row.extend(&s.x);
                    row.extend(v);
                    row.push(ratio);
                    tab.push_nums(row);
                }
            }
            res.record("velocity_ratio_deviation", dev);
            res.check(Check::at_most("rel-particle", "h vs h~ velocity ratio - 2", dev, p.tol("velocity_ratio", 1e-9)));
            tables.insert("h".into(), th_table);
            tables.insert("h_tilde".into(), tt_table);
        }
        "compare" => {
            let (a, b, n) = p.grid_spec("grid")?;
            if n % 2 != 0 {
                return Err(RunError::Parameter("compare mode needs an even number of grid steps".into()));
            }
            let t_grid = uniform_grid(a, b, n);
            let coord = integrate_coordinate_time(&f, &x0, &v0, &t_grid)?;
            let inv_gamma: Vec<f64> = coord.samples.iter().map(|s| m * c / s.aux[0]).collect();
            let tau = criteria::simpson_even((b - a) / n as f64, &inv_gamma);
            let tau_end = *tau.last().expect("non-empty");
            let s0 = proper_initial_state(&f, &coord.samples[0].x, &v0, 0.0)?;
            let proper = integrate_proper_time(&f, &s0, &uniform_grid(0.0, tau_end * 1.01, n))?;
            let rows = criteria::matched_positions(&f, &coord, &proper, &tau)?;
            let mut t = Table::new(["tau", "t", "x1_coordinate", "x2_coordinate", "x3_coordinate", "x1_proper", "x2_proper", "x3_proper", "gap"]);
            let mut gap = 0.0f64;
            for (k, (xc, xp)) in rows.iter().enumerate() {
                let g = (0..4).map(|mu| (xc[mu] - xp[mu]).abs()).fold(0.0, f64::max);
                gap = gap.max(g);
                t.push_nums([tau[k], xc[0] / c, xc[1], xc[2], xc[3], xp[1], xp[2], xp[3], g]);
            }
            res.record("trajectory_gap", gap);
            res.check(Check::at_most("rel-particle", "coordinate vs proper trajectory", gap, p.tol("trajectory_match", 1e-6)));
            tables.insert("main".into(), t);
        }
        other => return Err(RunError::Parameter(format!("unknown mode {other:?}"))),
    }
    Ok(tables)
}

// ---------------------------------------------------------------- quantize

fn sampled_max(phi: &PhiField, a: f64, b: f64) -> f64 {
    (0..=10_000)
        .map(|i| phi.value(a + (b - a) * i as f64 / 10_000.0).abs())
        .fold(phi.asymptotic.abs(), f64::max)
}

fn quantize(p: &Params, res: &mut RunResult) -> Result<Tables, RunError> {
    let hbar = p.hbar();
    let mut tables = Tables::new();
    match p.str_or("mode", "") {
        "psi" => {
            let phi = p.phi("phi")?;
            let grid = p.uniform("grid")?;
            let norm = p.num_or("norm", 1.0);
            let psi = match p.str_or("gauge", "coordinate") {
                "coordinate" => synth_psi_coordinate(&phi, &grid, hbar, norm)?,
                "proper" => synth_psi_proper(&phi, &grid, hbar, norm)?,
                "momentum" => synth_psi_spatial(&phi, &grid, hbar, norm, SpatialGauge::Momentum)?,
                _ => synth_psi_spatial(&phi, &grid, hbar, norm, SpatialGauge::ProperLength)?,
            };
            let mut t = Table::new(["s", "re", "im", "abs"]);
            for (i, v) in psi.values.iter().enumerate() {
                t.push_nums([grid.at(i), v.re, v.im, v.norm()]);
            }
            let span = grid.end() - grid.start;
            res.record("windowed_norm", inner_product_windowed(&psi, &psi, grid.start, span)?.re);
            tables.insert("main".into(), t);
        }
        "norm-sweep" => {
            let phi = p.phi("phi")?;
            let deltas = p.nums("deltas")?;
            let dmax = deltas.iter().copied().fold(0.0, f64::max);
            let max_phi = sampled_max(&phi, 0.0, dmax.min(10.0 * phi.delta.max(1.0)));
            let proper = p.str_or("gauge", "proper") == "proper";
            let p0 = phi.asymptotic;
            let mut t = Table::new(["delta", "norm", "error", "error_times_delta"]);
            for d in deltas {
                let grid = UniformGrid::with_max_step(0.0, d, max_resolved_step(max_phi, hbar))?;
                let psi = if proper {
                    synth_psi_proper(&phi, &grid, hbar, 1.0)?
                } else {
                    synth_psi_coordinate(&phi, &grid, hbar, 1.0)?
                };
                let n = inner_product_windowed(&psi, &psi, 0.0, d)?.re;
                let target = if proper { p0 } else { 1.0 };
                let err = n - target;
                t.push_nums([d, n, err, err * d]);
                res.record(format!("norm_at_{d:e}"), n);
                if proper {
                    res.check(Check::at_most(
                        "quantize",
                        format!("|norm - p0| at Delta = {d:e}"),
                        err.abs(),
                        p.tol("norm", 1.0) * p0.abs() / d,
                    ));
                }
            }
            tables.insert("main".into(), t);
        }
        "eigenvalue" => {
            let p0 = p.num("p")?;
            let (a, b, n) = p.grid_spec("grid")?;
            let mut t = Table::new(["steps", "h", "error_plus", "error_minus"]);
            let mut errs = Vec::new();
            for steps in [n, 2 * n] {
                let grid = UniformGrid::new(a, b, steps)?;
                let mut row = vec![steps as f64, grid.step];
                for conj in [false, true] {
                    let psi = plane_wave(p0, &grid, hbar, 1.0, conj)?;
                    let d = ri_mech::quantize::apply_p0(&psi)?;
                    let ratio = ri_mech::quantize::pointwise_ratio(&d, &psi)?;
                    let target = if conj { -p0 } else { p0 };
                    let e = ratio[1..ratio.len() - 1]
                        .iter()
                        .map(|r| (r - target).norm() / p0.abs())
                        .fold(0.0, f64::max);
                    row.push(e);
                }
                errs.push((row[2], row[3]));
                t.push_nums(row);
            }
            for (i, label) in [(0, "+p"), (1, "-p")] {
                let pick = |e: (f64, f64)| if i == 0 { e.0 } else { e.1 };
                let ratio = pick(errs[0]) / pick(errs[1]);
                res.record(format!("halving_ratio_{label}"), ratio);
                res.check(Check::at_most("quantize", format!("halving ratio {label} - 4"), (ratio - 4.0).abs(), p.tol("order", 0.5)));
            }
            tables.insert("main".into(), t);
        }
        "schrodinger" => {
            let phi = p.phi("phi")?;
            let (a, b, n) = p.grid_spec("grid")?;
            let mut t = Table::new(["steps", "h", "residual"]);
            let mut r = Vec::new();
            for steps in [n, 2 * n, 4 * n] {
                let grid = UniformGrid::new(a, b, steps)?;
                let psi = synth_psi_coordinate(&phi, &grid, hbar, p.num_or("norm", 1.0))?;
                let res_i = schrodinger_residual(&psi, &phi)?;
                r.push(res_i);
                t.push_nums([steps as f64, grid.step, res_i]);
            }
            let worst = r.windows(2).map(|w| (w[0] / w[1] - 4.0).abs()).fold(0.0, f64::max);
            res.record("finest_residual", r[2]);
            res.check(Check::at_most("quantize", "refinement ratio - 4", worst, p.tol("order", 0.5)));
            tables.insert("main".into(), t);
        }
        "weak-gravity" => {
            let grid = p.uniform("grid")?;
            let run = criteria::weak_gravity_run(
                p.num("u0")?,
                p.num("omega")?,
                p.num_or("mass", 1.0),
                p.c(),
                hbar,
                &grid,
            )?;
            let mut t = Table::new(["t", "re", "im", "target_im"]);
            for i in 0..run.t.len() {
                t.push_nums([run.t[i], run.real[i], run.imag[i], run.target[i]]);
            }
            let rms = run.rms_relative_error();
            res.record("rms_relative_error", rms);
            res.record("fitted_slope", run.slope());
            res.check(
                Check::at_most("quantize", "weak-gravity RMS relative error", rms, p.tol("weak_gravity_rms", 0.05))
                    .with_detail(format!("fitted slope {:.6}", run.slope())),
            );
            tables.insert("main".into(), t);
        }
        "running-average" => {
            let phi = p.phi("phi")?;
            let deltas = p.nums("deltas")?;
            let j = if phi.delta > 0.0 {
                quad::integrate(&|s| phi.value(s) - phi.asymptotic, 0.0, phi.delta, 1e-14)
            } else {
                0.0
            };
            let mut t = Table::new(["delta", "average", "closed_form"]);
            let mut dev = 0.0f64;
            for d in deltas {
                let avg = running_average(&phi, d)?;
                let closed = phi.asymptotic + j / d;
                if d >= phi.delta {
                    dev = dev.max((avg - closed).abs());
                }
                t.push_nums([d, avg, closed]);
            }
            res.record("fluctuation_integral", j);
            if phi.delta > 0.0 {
                res.check(Check::at_most("quantize", "average vs phi0 + J/Delta", dev, p.tol("average", 1e-8)));
            }
            tables.insert("main".into(), t);
        }
        other => return Err(RunError::Parameter(format!("unknown mode {other:?}"))),
    }
    Ok(tables)
}

// ---------------------------------------------------------------- invariant-suite

fn invariant_suite(p: &Params, seed: u64, res: &mut RunResult) -> Result<Tables, RunError> {
    let selected: Vec<u32> = match p.get("criteria").and_then(Value::as_array) {
        Some(a) => a.iter().filter_map(Value::as_u64).map(|n| n as u32).collect(),
        None => (1..=criteria::COUNT).collect(),
    };
    let inject = p.get("inject").map(|i| {
        (
            i.get("criterion").and_then(Value::as_u64).unwrap_or(0) as u32,
            i.get("amount").and_then(Value::as_f64).unwrap_or(0.0),
        )
    });
    let ctx = Context {
        seed,
        tol_scale: p.tol_scale,
    };
    let mut t = Table::new(["criterion", "title", "check", "measured", "threshold", "pass"]);
    for n in selected {
        let mut outcome = criteria::evaluate(n, &ctx)?;
        if let Some((target, amount)) = inject {
            if target == n {
                for c in &mut outcome.checks {
                    c.measured += amount;
                    c.reevaluate();
                }
            }
        }
        for c in outcome.checks {
            t.push(vec![
                Cell::Num(n as f64),
                Cell::Text(outcome.title.into()),
                Cell::Text(c.name.clone()),
                Cell::Num(c.measured),
                Cell::Num(c.threshold),
                Cell::Text(if c.pass { "pass" } else { "fail" }.into()),
            ]);
            res.check(c);
        }
    }
    let mut tables = Tables::new();
    tables.insert("criteria".into(), t);
    Ok(tables)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{parse_scenario, preset};

    fn run(name: &str) -> (RunResult, Tables) {
        compute_scenario(&preset(name).unwrap(), &RunOptions::default()).unwrap()
    }

    #[test]
    fn bracket_table_preset() {
        let (r, t) = run("bracket-table");
        assert!(r.passed);
        let b = &t["brackets"];
        assert_eq!(b.columns, ["observable", "p_0", "p_1", "p_2", "p_3"]);
        assert_eq!(b.column("p_0").unwrap(), [-1.0, 0.0, 0.0, 0.0]);
        assert_eq!(b.column("p_2").unwrap(), [0.0, 0.0, 1.0, 0.0]);
    }

    #[test]
    fn factor_of_two_preset() {
        let (r, t) = run("factor-of-two");
        assert!(r.passed, "{:?}", r.checks);
        for name in ["h", "h_tilde"] {
            for v in t[name].column("velocity_ratio").unwrap() {
                assert!((v - 2.0).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn plane_wave_norm_converges() {
        let (r, t) = run("plane-wave-norm");
        assert!(r.passed, "{:?}", r.checks);
        let norms = t["main"].column("norm").unwrap();
        let errs: Vec<f64> = norms.iter().map(|n| (n - 2.0).abs()).collect();
        assert!(errs.windows(2).all(|w| w[1] < w[0]));
        // bump integral J = 0.25 sets error * Delta
        for e in t["main"].column("error_times_delta").unwrap() {
            assert!((e - 0.25).abs() < 1e-3);
        }
    }

    #[test]
    fn gauge_and_geodesic_presets_pass() {
        for name in ["gauge-invariance", "geodesic-equivalence", "time-reversal", "running-average"] {
            let (r, _) = run(name);
            assert!(r.passed, "{name}: {:?}", r.checks);
        }
    }

    #[test]
    fn proper_length_rate_gives_unit_lagrangian() {
        let text = r#"{
            "name": "pl", "kind": "el-flow",
            "parameters": {
                "lagrangian": "phi-velocity",
                "phi": { "name": "polynomial", "params": [1.0, 0.0, 1.0] },
                "closure": "conserved-lagrangian",
                "gauge_rate": "proper-length",
                "grid": { "start": 0, "end": 1, "steps": 1000 },
                "x0": [0.1], "v0": [0.9]
            }
        }"#;
        let (r, t) = compute_scenario(&parse_scenario(text).unwrap(), &RunOptions::default()).unwrap();
        assert!(r.passed);
        for l in t["gauge"].column("L_new").unwrap() {
            assert!((l - 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn on_shell_adjustment() {
        let text = r#"{
            "name": "mp", "kind": "ext-flow",
            "parameters": {
                "hamiltonian": "moving-particle", "velocity": 0.5, "p_ref": 1.0, "energy": 2.0,
                "grid": { "start": 0, "end": 1, "steps": 10 },
                "x0": [0.0, 0.0], "p0": [0.0, 1.0], "on_shell": true
            }
        }"#;
        let (r, t) = compute_scenario(&parse_scenario(text).unwrap(), &RunOptions::default()).unwrap();
        assert!(r.passed);
        assert_eq!(t["main"].column("p0").unwrap()[0], 2.0);
        let x1 = t["main"].column("x1").unwrap();
        assert!((x1[10] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn injected_drift_fails_the_named_criterion() {
        let text = r#"{
            "name": "inj", "kind": "invariant-suite",
            "parameters": { "criteria": [2, 3], "inject": { "criterion": 3, "amount": 1e-3 } }
        }"#;
        let (r, _) = compute_scenario(&parse_scenario(text).unwrap(), &RunOptions::default()).unwrap();
        assert!(!r.passed);
        assert!(r.checks.iter().filter(|c| !c.pass).all(|c| c.criterion == "3"));
        assert!(r.checks.iter().any(|c| c.criterion == "2" && c.pass));
    }
}
