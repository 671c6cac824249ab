//! Built-in field families and named scenario presets.

use std::sync::Arc;

use ri_mech::extended_phase::{make_minkowski, make_weak_field, Metric, SignatureConvention};
use ri_mech::field::ScalarField;
use ri_mech::quantize::PhiField;
use ri_mech::rel_particle::BackgroundFields;
use serde_json::{json, Value};

use crate::error::RunError;

/// Names accepted in `{"name": ..., "params": [...]}` field definitions.
pub const FIELD_FAMILIES: &[&str] = &["constant", "polynomial", "sinusoid", "bump", "weak-field-U"];

/// Checks the parameter count of a field family.
pub fn check_arity(name: &str, n: usize) -> Result<(), String> {
    let ok = match name {
        "constant" => n == 1,
        "polynomial" => n >= 1,
        "sinusoid" => n == 4,
        "bump" => n == 3,
        "weak-field-U" => n == 2,
        _ => return Err(format!("unknown field family {name:?}")),
    };
    if ok {
        Ok(())
    } else {
        Err(format!("wrong number of parameters for {name}: {}", arity_hint(name)))
    }
}

fn arity_hint(name: &str) -> &'static str {
    match name {
        "constant" => "[value]",
        "polynomial" => "[c0, c1, ...]",
        "sinusoid" => "[offset, amplitude, omega, phase]",
        "bump" => "[base, amplitude, width]",
        "weak-field-U" => "[u0, omega]",
        _ => "",
    }
}

fn nums(v: &Value) -> Vec<f64> {
    v.as_array()
        .map(|a| a.iter().filter_map(Value::as_f64).collect())
        .unwrap_or_default()
}

/// Builds a field from a validated definition.
pub fn build_field(def: &Value) -> Result<ScalarField, RunError> {
    let name = def.get("name").and_then(Value::as_str).unwrap_or_default();
    let p = nums(def.get("params").unwrap_or(&Value::Null));
    check_arity(name, p.len()).map_err(RunError::Parameter)?;
    Ok(match name {
        "constant" => ScalarField::constant(p[0]),
        "polynomial" => ScalarField::polynomial(p),
        "sinusoid" => ScalarField::sinusoid(p[0], p[1], p[2], p[3]),
        "bump" => ScalarField::bump(p[0], p[1], p[2]),
        // U(t) = u0 sin(omega t)
        "weak-field-U" => ScalarField::sinusoid(0.0, p[0], p[1], 0.0),
        _ => unreachable!("arity check rejects unknown names"),
    })
}

/// Builds a `PhiField` from `{"field", "delta", "asymptotic", "band"}`.
pub fn build_phi(def: &Value) -> Result<PhiField, RunError> {
    let field = build_field(def.get("field").unwrap_or(&Value::Null))?;
    let get = |k: &str| def.get(k).and_then(Value::as_f64);
    let mut phi = PhiField::new(field, get("delta").unwrap_or(0.0), get("asymptotic").unwrap_or(0.0));
    phi.band = get("band");
    Ok(phi)
}

fn convention(def: &Value) -> SignatureConvention {
    match def.get("convention").and_then(Value::as_str) {
        Some("minus-plus") => SignatureConvention::MinusPlus,
        _ => SignatureConvention::PlusMinus,
    }
}

/// Weak-field potential `U(x)` reading coordinate `axis`; axis 0 is read as
/// the time `x^0 / c`.
fn weak_potential(def: &Value, c: f64) -> Result<Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>, RunError> {
    let u = build_field(def.get("U").unwrap_or(&Value::Null))?;
    let axis = def.get("axis").and_then(Value::as_u64).unwrap_or(0) as usize;
    Ok(Arc::new(move |x: &[f64]| {
        let s = if axis == 0 { x[0] / c } else { x[axis] };
        u.value(s)
    }))
}

/// Metric from `"flat"` or `{"type": "minkowski" | "weak-field", ...}`.
/// `default_conv` applies when the definition names none.
pub fn build_metric(def: Option<&Value>, dim: usize, c: f64, default_conv: SignatureConvention) -> Result<Metric, RunError> {
    let flat = |conv| make_minkowski(dim, conv).map_err(RunError::from);
    let Some(def) = def else { return flat(default_conv) };
    if def.as_str() == Some("flat") {
        return flat(default_conv);
    }
    let conv = if def.get("convention").is_some() { convention(def) } else { default_conv };
    match def.get("type").and_then(Value::as_str) {
        Some("weak-field") => {
            if dim != 4 {
                return Err(RunError::Parameter("weak-field metrics are four-dimensional".into()));
            }
            let u = weak_potential(def, c)?;
            Ok(make_weak_field(move |x| u(x), c, conv))
        }
        _ => {
            let d = def.get("dim").and_then(Value::as_u64).map(|d| d as usize).unwrap_or(dim);
            if d != dim {
                return Err(RunError::Parameter(format!("metric dimension {d} does not match state dimension {dim}")));
            }
            flat(conv)
        }
    }
}

/// Particle background from `metric`, `potential`, `charge`, `mass`, `c`.
/// The potential definition `{"e": [..], "b": [..]}` describes uniform
/// fields with force `q (E + v x B)`: `A_0 = E.x / c`, `A = (B x x) / 2`.
pub fn build_background(
    metric: Option<&Value>,
    potential: Option<&Value>,
    charge: f64,
    mass: f64,
    c: f64,
) -> Result<BackgroundFields, RunError> {
    let e = potential.and_then(|p| p.get("e")).map(nums).unwrap_or_else(|| vec![0.0; 3]);
    let b = potential.and_then(|p| p.get("b")).map(nums).unwrap_or_else(|| vec![0.0; 3]);
    let a = move |x: &[f64]| -> [f64; 4] {
        let r = [x[1], x[2], x[3]];
        [
            (e[0] * r[0] + e[1] * r[1] + e[2] * r[2]) / c,
            0.5 * (b[1] * r[2] - b[2] * r[1]),
            0.5 * (b[2] * r[0] - b[0] * r[2]),
            0.5 * (b[0] * r[1] - b[1] * r[0]),
        ]
    };
    match metric {
        Some(def) if def.get("type").and_then(Value::as_str) == Some("weak-field") => {
            let u = weak_potential(def, c)?;
            let u2 = u.clone();
            let mut f = BackgroundFields::weak_gravity(move |x: &[f64]| u(x), mass, c)?;
            f.potential = Arc::new(a);
            f.charge = charge;
            f.weak_potential = Some(u2);
            Ok(f)
        }
        _ => Ok(BackgroundFields::flat(a, charge, mass, c)?),
    }
}

/// Names of the built-in presets.
pub const PRESETS: &[&str] = &[
    "acceptance",
    "appendix-weak-gravity",
    "bracket-table",
    "factor-of-two",
    "gauge-invariance",
    "geodesic-equivalence",
    "magnetic-drift",
    "plane-wave-norm",
    "running-average",
    "time-reversal",
];

/// Scenario document of a preset.
pub fn preset(name: &str) -> Option<Value> {
    let doc = match name {
        "acceptance" => json!({
            "name": "acceptance",
            "kind": "invariant-suite",
            "parameters": {},
            "outputs": [{ "path": "acceptance.csv", "table": "criteria" }]
        }),
        "appendix-weak-gravity" => json!({
            "name": "appendix-weak-gravity",
            "kind": "quantize",
            "parameters": {
                "mode": "weak-gravity",
                "u0": 1e-4,
                "omega": 2.0,
                "mass": 1.0,
                "c": 1.0,
                "hbar": 1.0,
                "grid": { "start": 0.0, "end": 6.0, "steps": 60000 },
                "tolerances": { "weak_gravity_rms": 0.05 }
            },
            "outputs": [{ "path": "weak_gravity.csv" }]
        }),
        "bracket-table" => json!({
            "name": "bracket-table",
            "kind": "ext-flow",
            "parameters": { "mode": "bracket-table", "dim": 4, "convention": "time-minus" },
            "outputs": [{ "path": "bracket_table.csv", "table": "brackets" }]
        }),
        "factor-of-two" => json!({
            "name": "factor-of-two",
            "kind": "rel-particle",
            "parameters": {
                "mode": "factor-of-two",
                "grid": { "start": 0.0, "end": 2.0, "steps": 400 },
                "x0": [0.0, 0.0, 0.0],
                "v0": [0.5, 0.1, 0.0],
                "charge": 1.0,
                "mass": 1.0,
                "potential": { "b": [0.0, 0.0, 1.0], "e": [0.05, 0.0, 0.0] }
            },
            "outputs": [
                { "path": "factor_of_two_h.csv", "table": "h" },
                { "path": "factor_of_two_h_tilde.csv", "table": "h_tilde" }
            ]
        }),
        "gauge-invariance" => json!({
            "name": "gauge-invariance",
            "kind": "el-flow",
            "parameters": {
                "lagrangian": "phi-velocity",
                "phi": { "name": "polynomial", "params": [1.0, 0.0, 1.0] },
                "closure": "conserved-lagrangian",
                "gauge_rate": { "name": "sinusoid", "params": [1.0, 0.5, 1.0, 0.0] },
                "grid": { "start": 0.0, "end": 2.0, "steps": 2000 },
                "x0": [0.1],
                "v0": [0.8]
            },
            "outputs": [{ "path": "gauge_lambda.csv" }, { "path": "gauge_xi.csv", "table": "gauge" }]
        }),
        "geodesic-equivalence" => json!({
            "name": "geodesic-equivalence",
            "kind": "el-flow",
            "parameters": {
                "lagrangian": "metric-length",
                "metric": {
                    "type": "weak-field",
                    "U": { "name": "sinusoid", "params": [0.0, 0.05, 1.0, 0.0] },
                    "axis": 1,
                    "convention": "plus-minus"
                },
                "closure": "equivalent-quadratic",
                "grid": { "start": 0.0, "end": 2.0, "steps": 2000 },
                "x0": [0.0, 0.3, 0.0, 0.0],
                "v0": [1.0, 0.2, 0.1, 0.0]
            },
            "outputs": [{ "path": "geodesic.csv" }]
        }),
        "magnetic-drift" => json!({
            "name": "magnetic-drift",
            "kind": "rel-particle",
            "parameters": {
                "mode": "coordinate-time",
                "grid": { "start": 0.0, "end": 100.0, "steps": 10000 },
                "x0": [1.0, 0.0, 0.0],
                "v0": [0.0, 0.5, 0.0],
                "charge": 1.0,
                "mass": 1.0,
                "potential": { "b": [0.0, 0.0, 1.0] },
                "tolerances": { "speed_drift": 1e-7 }
            },
            "outputs": [{ "path": "magnetic_drift.csv", "columns": ["t", "x1", "x2", "speed", "gamma"] }]
        }),
        "plane-wave-norm" => json!({
            "name": "plane-wave-norm",
            "kind": "quantize",
            "parameters": {
                "mode": "norm-sweep",
                "gauge": "proper",
                "phi": {
                    "field": { "name": "bump", "params": [2.0, 0.5, 1.0] },
                    "delta": 1.0,
                    "asymptotic": 2.0
                },
                "deltas": [10.0, 100.0, 1000.0, 10000.0]
            },
            "outputs": [{ "path": "plane_wave_norm.csv" }]
        }),
        "running-average" => json!({
            "name": "running-average",
            "kind": "quantize",
            "parameters": {
                "mode": "running-average",
                "phi": {
                    "field": { "name": "bump", "params": [1.5, 0.8, 2.0] },
                    "delta": 2.0,
                    "asymptotic": 1.5
                },
                "deltas": [1.0, 2.0, 5.0, 10.0, 100.0, 1000.0]
            },
            "outputs": [{ "path": "running_average.csv" }]
        }),
        "time-reversal" => json!({
            "name": "time-reversal",
            "kind": "ext-flow",
            "parameters": {
                "hamiltonian": "proper-time",
                "phi": { "name": "sinusoid", "params": [2.0, 0.3, 1.0, 0.0] },
                "grid": { "start": 0.0, "end": 3.0, "steps": 600 },
                "x0": [0.0, 0.0],
                "p0": [2.0, 0.0],
                "on_shell": true,
                "reverse": true
            },
            "outputs": [{ "path": "time_reversal.csv" }]
        }),
        _ => return None,
    };
    Some(doc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::from_value;

    #[test]
    fn every_preset_validates() {
        for name in PRESETS {
            let doc = preset(name).unwrap();
            from_value(&doc).unwrap_or_else(|e| panic!("{name}: {e}"));
        }
    }

    #[test]
    fn field_families() {
        let f = build_field(&json!({ "name": "weak-field-U", "params": [0.1, 2.0] })).unwrap();
        assert!((f.value(0.3) - 0.1 * (0.6f64).sin()).abs() < 1e-15);
        let b = build_field(&json!({ "name": "bump", "params": [1.0, 2.0, 4.0] })).unwrap();
        assert_eq!(b.value(2.0), 3.0);
        assert_eq!(b.value(5.0), 1.0);
        assert!(build_field(&json!({ "name": "bump", "params": [1.0] })).is_err());
    }

    #[test]
    fn uniform_electric_field_pushes_along_e() {
        let f = build_background(None, Some(&json!({ "e": [0.3, 0.0, 0.0] })), 2.0, 1.0, 1.0).unwrap();
        let (_, dp) = ri_mech::rel_particle::coordinate_time_rhs(&f, &[0.0; 4], &[0.0; 3]).unwrap();
        assert!((dp[0] - 0.6).abs() < 1e-8);
        assert!(dp[1].abs() < 1e-12);
    }
}
