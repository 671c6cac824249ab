//! Scenario documents: JSON parsing, preset expansion and schema validation.
//!
//! A scenario is a JSON object
//!
//! ```json
//! {
//!   "name": "gauge",
//!   "kind": "el-flow",
//!   "preset": "gauge-invariance",
//!   "parameters": { "grid": { "start": 0, "end": 1, "steps": 100 } },
//!   "outputs": [ { "path": "gauge.csv", "table": "main", "columns": ["lambda", "x0"] } ]
//! }
//! ```
//!
//! `preset` is optional; its parameters are overridden key by key by the
//! document's own. Validation reports every problem it finds, not only the
//! first.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::registry;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    ElFlow,
    ExtFlow,
    RelParticle,
    Quantize,
    InvariantSuite,
}

impl Kind {
    pub const ALL: [Kind; 5] = [
        Kind::ElFlow,
        Kind::ExtFlow,
        Kind::RelParticle,
        Kind::Quantize,
        Kind::InvariantSuite,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Kind::ElFlow => "el-flow",
            Kind::ExtFlow => "ext-flow",
            Kind::RelParticle => "rel-particle",
            Kind::Quantize => "quantize",
            Kind::InvariantSuite => "invariant-suite",
        }
    }

    pub fn parse(s: &str) -> Option<Kind> {
        Kind::ALL.into_iter().find(|k| k.as_str() == s)
    }
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One CSV file to write from a named result table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputSpec {
    pub path: String,
    #[serde(default = "default_table")]
    pub table: String,
    /// Columns to write, in order; empty means every column.
    #[serde(default)]
    pub columns: Vec<String>,
}

fn default_table() -> String {
    "main".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub name: String,
    pub kind: Kind,
    pub parameters: Map<String, Value>,
    pub outputs: Vec<OutputSpec>,
}

/// A single schema violation, located by a dotted path.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SchemaIssue {
    pub path: String,
    pub message: String,
}

impl fmt::Display for SchemaIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("invalid scenario:\n{}", .0.iter().map(|i| format!("  - {i}")).collect::<Vec<_>>().join("\n"))]
    Schema(Vec<SchemaIssue>),
}

impl ConfigError {
    /// Issues of a schema error; empty for other variants.
    pub fn issues(&self) -> &[SchemaIssue] {
        match self {
            ConfigError::Schema(v) => v,
            _ => &[],
        }
    }
}

/// Reads and validates a scenario file.
pub fn load_scenario(path: impl AsRef<Path>) -> Result<ScenarioConfig, ConfigError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_scenario(&text)
}

/// Parses and validates a scenario document.
pub fn parse_scenario(text: &str) -> Result<ScenarioConfig, ConfigError> {
    let doc: Value = serde_json::from_str(text).map_err(|e| ConfigError::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    from_value(&doc)
}

/// Expands the named preset into a validated config.
pub fn preset(name: &str) -> Result<ScenarioConfig, ConfigError> {
    match registry::preset(name) {
        Some(doc) => from_value(&doc),
        None => Err(ConfigError::Schema(vec![SchemaIssue {
            path: "preset".into(),
            message: format!("unknown preset {name:?}; known: {}", registry::PRESETS.join(", ")),
        }])),
    }
}

struct Issues(Vec<SchemaIssue>);

impl Issues {
    fn push(&mut self, path: impl Into<String>, message: impl Into<String>) {
        self.0.push(SchemaIssue {
            path: path.into(),
            message: message.into(),
        });
    }
}

/// Validates a parsed document.
pub fn from_value(doc: &Value) -> Result<ScenarioConfig, ConfigError> {
    let mut issues = Issues(Vec::new());
    let Some(root) = doc.as_object() else {
        return Err(ConfigError::Schema(vec![SchemaIssue {
            path: "".into(),
            message: "scenario must be a JSON object".into(),
        }]));
    };
    for key in root.keys() {
        if !["name", "kind", "preset", "parameters", "outputs"].contains(&key.as_str()) {
            issues.push(key.clone(), "unknown key");
        }
    }

    let base = match root.get("preset") {
        None => None,
        Some(Value::String(p)) => match registry::preset(p) {
            Some(d) => Some(d),
            None => {
                issues.push("preset", format!("unknown preset {p:?}"));
                None
            }
        },
        Some(_) => {
            issues.push("preset", "expected a string");
            None
        }
    };
    let pick = |key: &str| root.get(key).or_else(|| base.as_ref().and_then(|b| b.get(key)));

    let name = match pick("name") {
        Some(Value::String(s)) if !s.trim().is_empty() => s.clone(),
        Some(Value::String(_)) => {
            issues.push("name", "must not be empty");
            String::new()
        }
        Some(_) => {
            issues.push("name", "expected a string");
            String::new()
        }
        None => {
            issues.push("name", "missing required key");
            String::new()
        }
    };
    if name.contains(['/', '\\']) {
        issues.push("name", "must not contain path separators");
    }

    let kind = match pick("kind") {
        Some(Value::String(s)) => match Kind::parse(s) {
            Some(k) => Some(k),
            None => {
                let all: Vec<_> = Kind::ALL.iter().map(|k| k.as_str()).collect();
                issues.push("kind", format!("unknown kind {s:?}; expected one of {}", all.join(", ")));
                None
            }
        },
        Some(_) => {
            issues.push("kind", "expected a string");
            None
        }
        None => {
            issues.push("kind", "missing required key");
            None
        }
    };

    let mut parameters = Map::new();
    if let Some(b) = base.as_ref().and_then(|b| b.get("parameters")).and_then(Value::as_object) {
        parameters.extend(b.clone());
    }
    match root.get("parameters") {
        None => {}
        Some(Value::Object(p)) => parameters.extend(p.clone()),
        Some(_) => issues.push("parameters", "expected an object"),
    }

    let outputs = validate_outputs(pick("outputs"), &mut issues);

    if let Some(kind) = kind {
        validate_parameters(kind, &parameters, &mut issues);
    }

    if issues.0.is_empty() {
        Ok(ScenarioConfig {
            name,
            kind: kind.expect("validated"),
            parameters,
            outputs,
        })
    } else {
        Err(ConfigError::Schema(issues.0))
    }
}

fn validate_outputs(v: Option<&Value>, issues: &mut Issues) -> Vec<OutputSpec> {
    let Some(v) = v else { return Vec::new() };
    let Some(list) = v.as_array() else {
        issues.push("outputs", "expected an array");
        return Vec::new();
    };
    let mut out = Vec::new();
    for (i, item) in list.iter().enumerate() {
        let at = format!("outputs[{i}]");
        let Some(obj) = item.as_object() else {
            issues.push(at, "expected an object");
            continue;
        };
        for key in obj.keys() {
            if !["path", "table", "columns"].contains(&key.as_str()) {
                issues.push(format!("{at}.{key}"), "unknown key");
            }
        }
        let path = match obj.get("path") {
            Some(Value::String(s)) if !s.is_empty() => s.clone(),
            Some(_) => {
                issues.push(format!("{at}.path"), "expected a non-empty string");
                continue;
            }
            None => {
                issues.push(format!("{at}.path"), "missing required key");
                continue;
            }
        };
        if Path::new(&path).is_absolute() || path.split(['/', '\\']).any(|c| c == "..") {
            issues.push(format!("{at}.path"), "must be a relative path inside the output directory");
        }
        let table = match obj.get("table") {
            None => default_table(),
            Some(Value::String(s)) => s.clone(),
            Some(_) => {
                issues.push(format!("{at}.table"), "expected a string");
                continue;
            }
        };
        let columns = match obj.get("columns") {
            None => Vec::new(),
            Some(Value::Array(a)) if a.iter().all(Value::is_string) => {
                a.iter().map(|s| s.as_str().unwrap().to_string()).collect()
            }
            Some(_) => {
                issues.push(format!("{at}.columns"), "expected an array of strings");
                continue;
            }
        };
        out.push(OutputSpec { path, table, columns });
    }
    out
}

/// Value shapes accepted in `parameters`.
#[derive(Debug, Clone, Copy)]
enum Ty {
    Num,
    PosNum,
    NonNegNum,
    PosInt,
    Bool,
    Choice(&'static [&'static str]),
    NumArray(Option<usize>),
    PosNumArray,
    IntArray,
    Grid,
    Field,
    Phi,
    Metric,
    Potential,
    Tolerances,
    Hcl,
    Rate,
    Injection,
}

/// When a key must be present.
#[derive(Debug, Clone, Copy)]
enum Req {
    Always,
    Optional,
    /// Required when `key` has one of the listed string values.
    When(&'static str, &'static [&'static str]),
}

struct Key {
    name: &'static str,
    ty: Ty,
    req: Req,
}

const fn key(name: &'static str, ty: Ty, req: Req) -> Key {
    Key { name, ty, req }
}

const COMMON: &[Key] = &[
    key("c", Ty::PosNum, Req::Optional),
    key("hbar", Ty::PosNum, Req::Optional),
    key("tolerances", Ty::Tolerances, Req::Optional),
    key("seed", Ty::PosInt, Req::Optional),
];

const LAGRANGIANS: &[&str] = &["phi-velocity", "metric-length", "metric-quadratic", "kinetic"];
const EL_FLOW: &[Key] = &[
    key("lagrangian", Ty::Choice(LAGRANGIANS), Req::Always),
    key("grid", Ty::Grid, Req::Always),
    key("x0", Ty::NumArray(None), Req::Always),
    key("v0", Ty::NumArray(None), Req::Always),
    key("phi", Ty::Field, Req::When("lagrangian", &["phi-velocity"])),
    key("metric", Ty::Metric, Req::When("lagrangian", &["metric-length", "metric-quadratic"])),
    key("closure", Ty::Choice(&["conserved-lagrangian", "equivalent-quadratic"]), Req::Optional),
    key("gauge_rate", Ty::Rate, Req::Optional),
];

const HAMILTONIANS: &[&str] = &[
    "coordinate-time",
    "proper-time",
    "time-reversal",
    "proper-length",
    "momentum",
    "moving-particle",
];
const EXT_FLOW: &[Key] = &[
    key("mode", Ty::Choice(&["flow", "bracket-table"]), Req::Optional),
    key("hamiltonian", Ty::Choice(HAMILTONIANS), Req::When("mode", &["flow"])),
    key("grid", Ty::Grid, Req::When("mode", &["flow"])),
    key("x0", Ty::NumArray(None), Req::When("mode", &["flow"])),
    key("p0", Ty::NumArray(None), Req::When("mode", &["flow"])),
    key("on_shell", Ty::Bool, Req::Optional),
    key("phi", Ty::Field, Req::When("hamiltonian", &["proper-time", "proper-length"])),
    key("energy", Ty::Num, Req::When("hamiltonian", &["time-reversal", "moving-particle"])),
    key("p_ref", Ty::Num, Req::When("hamiltonian", &["momentum", "moving-particle"])),
    key("velocity", Ty::Num, Req::When("hamiltonian", &["moving-particle"])),
    key("hcl", Ty::Hcl, Req::Optional),
    key("reverse", Ty::Bool, Req::Optional),
    key("dim", Ty::PosInt, Req::Optional),
    key("convention", Ty::Choice(&["time-minus", "all-plus"]), Req::Optional),
];

const REL_PARTICLE: &[Key] = &[
    key(
        "mode",
        Ty::Choice(&["coordinate-time", "proper-time", "factor-of-two", "compare"]),
        Req::Optional,
    ),
    key("grid", Ty::Grid, Req::Always),
    key("x0", Ty::NumArray(Some(3)), Req::Always),
    key("v0", Ty::NumArray(Some(3)), Req::Always),
    key("mass", Ty::PosNum, Req::Optional),
    key("charge", Ty::Num, Req::Optional),
    key("metric", Ty::Metric, Req::Optional),
    key("potential", Ty::Potential, Req::Optional),
];

const QUANTIZE_MODES: &[&str] = &[
    "psi",
    "norm-sweep",
    "eigenvalue",
    "schrodinger",
    "weak-gravity",
    "running-average",
];
const QUANTIZE: &[Key] = &[
    key("mode", Ty::Choice(QUANTIZE_MODES), Req::Always),
    key(
        "phi",
        Ty::Phi,
        Req::When("mode", &["psi", "norm-sweep", "schrodinger", "running-average"]),
    ),
    key("grid", Ty::Grid, Req::When("mode", &["psi", "eigenvalue", "schrodinger", "weak-gravity"])),
    key("gauge", Ty::Choice(&["coordinate", "proper", "momentum", "proper-length"]), Req::Optional),
    key("norm", Ty::PosNum, Req::Optional),
    key("deltas", Ty::PosNumArray, Req::When("mode", &["norm-sweep", "running-average"])),
    key("p", Ty::Num, Req::When("mode", &["eigenvalue"])),
    key("u0", Ty::Num, Req::When("mode", &["weak-gravity"])),
    key("omega", Ty::Num, Req::When("mode", &["weak-gravity"])),
    key("mass", Ty::PosNum, Req::Optional),
];

const INVARIANT_SUITE: &[Key] = &[
    key("criteria", Ty::IntArray, Req::Optional),
    key("inject", Ty::Injection, Req::Optional),
];

fn keys_for(kind: Kind) -> &'static [Key] {
    match kind {
        Kind::ElFlow => EL_FLOW,
        Kind::ExtFlow => EXT_FLOW,
        Kind::RelParticle => REL_PARTICLE,
        Kind::Quantize => QUANTIZE,
        Kind::InvariantSuite => INVARIANT_SUITE,
    }
}

/// Default values of mode-like keys, so `When` conditions see them.
fn effective_str<'a>(kind: Kind, params: &'a Map<String, Value>, key: &str) -> Option<&'a str> {
    match params.get(key) {
        Some(v) => v.as_str(),
        None => match (kind, key) {
            (Kind::ExtFlow, "mode") => Some("flow"),
            (Kind::RelParticle, "mode") => Some("coordinate-time"),
            _ => None,
        },
    }
}

fn validate_parameters(kind: Kind, params: &Map<String, Value>, issues: &mut Issues) {
    let specific = keys_for(kind);
    for name in params.keys() {
        if !specific.iter().chain(COMMON).any(|k| k.name == name) {
            issues.push(format!("parameters.{name}"), format!("unknown key for kind {kind}"));
        }
    }
    for k in specific.iter().chain(COMMON) {
        let at = format!("parameters.{}", k.name);
        match params.get(k.name) {
            Some(v) => check_type(k.ty, v, &at, issues),
            None => {
                let required = match k.req {
                    Req::Always => true,
                    Req::Optional => false,
                    Req::When(other, values) => {
                        effective_str(kind, params, other).is_some_and(|s| values.contains(&s))
                    }
                };
                if required {
                    issues.push(at, "missing required key");
                }
            }
        }
    }
    if kind == Kind::ElFlow {
        if let (Some(x), Some(v)) = (
            params.get("x0").and_then(Value::as_array),
            params.get("v0").and_then(Value::as_array),
        ) {
            if x.len() != v.len() {
                issues.push("parameters.v0", "must have as many entries as x0");
            }
        }
    }
}

fn num(v: &Value) -> Option<f64> {
    v.as_f64().filter(|x| x.is_finite())
}

fn check_type(ty: Ty, v: &Value, at: &str, issues: &mut Issues) {
    match ty {
        Ty::Num => {
            if num(v).is_none() {
                issues.push(at, "expected a number");
            }
        }
        Ty::PosNum => match num(v) {
            Some(x) if x > 0.0 => {}
            _ => issues.push(at, "expected a positive number"),
        },
        Ty::NonNegNum => match num(v) {
            Some(x) if x >= 0.0 => {}
            _ => issues.push(at, "expected a non-negative number"),
        },
        Ty::PosInt => match v.as_u64() {
            Some(n) if n > 0 || at.ends_with("seed") => {}
            _ => issues.push(at, "expected a positive integer"),
        },
        Ty::Bool => {
            if !v.is_boolean() {
                issues.push(at, "expected true or false");
            }
        }
        Ty::Choice(options) => match v.as_str() {
            Some(s) if options.contains(&s) => {}
            _ => issues.push(at, format!("expected one of {}", options.join(", "))),
        },
        Ty::NumArray(len) => match v.as_array() {
            Some(a) if a.iter().all(|x| num(x).is_some()) && !a.is_empty() => {
                if let Some(n) = len {
                    if a.len() != n {
                        issues.push(at, format!("expected {n} numbers"));
                    }
                }
            }
            _ => issues.push(at, "expected a non-empty array of numbers"),
        },
        Ty::PosNumArray => match v.as_array() {
            Some(a) if !a.is_empty() && a.iter().all(|x| num(x).is_some_and(|x| x > 0.0)) => {}
            _ => issues.push(at, "expected a non-empty array of positive numbers"),
        },
        Ty::IntArray => match v.as_array() {
            Some(a) if a.iter().all(|x| x.as_u64().is_some()) => {}
            _ => issues.push(at, "expected an array of integers"),
        },
        Ty::Grid => check_object(
            v,
            at,
            issues,
            &[("start", Ty::Num, true), ("end", Ty::Num, true), ("steps", Ty::PosInt, true)],
            |obj, issues| {
                if let (Some(a), Some(b)) = (obj.get("start").and_then(num), obj.get("end").and_then(num)) {
                    if b <= a {
                        issues.push(format!("{at}.end"), "must exceed start");
                    }
                }
            },
        ),
        Ty::Field => check_field(v, at, issues),
        Ty::Phi => check_object(
            v,
            at,
            issues,
            &[
                ("field", Ty::Field, true),
                ("delta", Ty::NonNegNum, true),
                ("asymptotic", Ty::Num, true),
                ("band", Ty::PosNum, false),
            ],
            |_, _| {},
        ),
        Ty::Metric => {
            if v.as_str() == Some("flat") {
                return;
            }
            check_object(
                v,
                at,
                issues,
                &[
                    ("type", Ty::Choice(&["minkowski", "weak-field"]), true),
                    ("dim", Ty::PosInt, false),
                    ("convention", Ty::Choice(&["plus-minus", "minus-plus"]), false),
                    ("U", Ty::Field, false),
                    ("axis", Ty::NonNegNum, false),
                ],
                |obj, issues| {
                    if obj.get("type").and_then(Value::as_str) == Some("weak-field") && !obj.contains_key("U") {
                        issues.push(format!("{at}.U"), "missing required key");
                    }
                    if let Some(a) = obj.get("axis").and_then(num) {
                        if a.fract() != 0.0 || a > 3.0 {
                            issues.push(format!("{at}.axis"), "expected an integer axis 0..3");
                        }
                    }
                },
            )
        }
        Ty::Potential => check_object(
            v,
            at,
            issues,
            &[("e", Ty::NumArray(Some(3)), false), ("b", Ty::NumArray(Some(3)), false)],
            |_, _| {},
        ),
        Ty::Tolerances => match v.as_object() {
            Some(obj) => {
                for (k, t) in obj {
                    match num(t) {
                        Some(x) if x > 0.0 => {}
                        _ => issues.push(format!("{at}.{k}"), "tolerances must be positive numbers"),
                    }
                }
            }
            None => issues.push(at, "expected an object of named tolerances"),
        },
        Ty::Hcl => check_object(
            v,
            at,
            issues,
            &[("mass", Ty::PosNum, false), ("k", Ty::Num, false)],
            |_, _| {},
        ),
        Ty::Rate => {
            if v.as_str() != Some("proper-length") {
                check_field(v, at, issues);
            }
        }
        Ty::Injection => check_object(
            v,
            at,
            issues,
            &[("criterion", Ty::PosInt, true), ("amount", Ty::Num, true)],
            |_, _| {},
        ),
    }
}

fn check_object(
    v: &Value,
    at: &str,
    issues: &mut Issues,
    fields: &[(&str, Ty, bool)],
    extra: impl FnOnce(&Map<String, Value>, &mut Issues),
) {
    let Some(obj) = v.as_object() else {
        issues.push(at, "expected an object");
        return;
    };
    for k in obj.keys() {
        if !fields.iter().any(|(name, _, _)| name == k) {
            issues.push(format!("{at}.{k}"), "unknown key");
        }
    }
    for (name, ty, required) in fields {
        match obj.get(*name) {
            Some(x) => check_type(*ty, x, &format!("{at}.{name}"), issues),
            None if *required => issues.push(format!("{at}.{name}"), "missing required key"),
            None => {}
        }
    }
    extra(obj, issues);
}

fn check_field(v: &Value, at: &str, issues: &mut Issues) {
    check_object(
        v,
        at,
        issues,
        &[
            ("name", Ty::Choice(registry::FIELD_FAMILIES), true),
            ("params", Ty::NumArray(None), true),
        ],
        |obj, issues| {
            if let (Some(name), Some(params)) = (
                obj.get("name").and_then(Value::as_str),
                obj.get("params").and_then(Value::as_array),
            ) {
                if let Err(msg) = registry::check_arity(name, params.len()) {
                    issues.push(format!("{at}.params"), msg);
                }
            }
        },
    );
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "name": "free",
        "kind": "el-flow",
        "parameters": {
            "lagrangian": "kinetic",
            "grid": { "start": 0, "end": 1, "steps": 10 },
            "x0": [0.0],
            "v0": [1.0]
        }
    }"#;

    #[test]
    fn minimal_el_flow_is_valid() {
        let cfg = parse_scenario(MINIMAL).unwrap();
        assert_eq!(cfg.kind, Kind::ElFlow);
        assert_eq!(cfg.name, "free");
        assert!(cfg.outputs.is_empty());
    }

    #[test]
    fn missing_grid_is_named() {
        let text = MINIMAL.replace(r#""grid": { "start": 0, "end": 1, "steps": 10 },"#, "");
        let err = parse_scenario(&text).unwrap_err();
        let issues = err.issues();
        assert_eq!(issues.len(), 1);
        assert_eq!(issues[0].path, "parameters.grid");
        assert!(err.to_string().contains("grid"));
    }

    #[test]
    fn every_violation_is_reported() {
        let text = r#"{
            "kind": "el-flow",
            "colour": 3,
            "parameters": {
                "lagrangian": "phi-velocity",
                "grid": { "start": 1, "end": 0, "steps": 10 },
                "x0": [0.0],
                "v0": [1.0, 2.0],
                "tolerances": { "el_residual": -1 },
                "bogus": true
            },
            "outputs": [ { "table": "main" } ]
        }"#;
        let err = parse_scenario(text).unwrap_err();
        let paths: Vec<&str> = err.issues().iter().map(|i| i.path.as_str()).collect();
        for expected in [
            "colour",
            "name",
            "parameters.bogus",
            "parameters.grid.end",
            "parameters.phi",
            "parameters.v0",
            "parameters.tolerances.el_residual",
            "outputs[0].path",
        ] {
            assert!(paths.contains(&expected), "{expected} not in {paths:?}");
        }
    }

    #[test]
    fn parse_errors_carry_position() {
        let err = parse_scenario("{\n  \"name\": \"x\",\n  \"kind\": }").unwrap_err();
        match err {
            ConfigError::Parse { line, column, .. } => {
                assert_eq!(line, 3);
                assert!(column > 0);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn preset_fills_parameters_and_can_be_overridden() {
        let cfg = preset("appendix-weak-gravity").unwrap();
        assert_eq!(cfg.kind, Kind::Quantize);
        assert_eq!(cfg.parameters["mode"], "weak-gravity");
        assert!((cfg.parameters["u0"].as_f64().unwrap() - 1e-4).abs() < 1e-18);
        let text = r#"{ "preset": "appendix-weak-gravity", "name": "wg2", "parameters": { "omega": 3.0 } }"#;
        let cfg = parse_scenario(text).unwrap();
        assert_eq!(cfg.name, "wg2");
        assert_eq!(cfg.parameters["omega"], 3.0);
        assert_eq!(cfg.parameters["mode"], "weak-gravity");
    }

    #[test]
    fn unknown_preset_and_field_arity() {
        assert!(preset("nope").is_err());
        let text = r#"{
            "name": "x", "kind": "quantize",
            "parameters": {
                "mode": "running-average",
                "phi": { "field": { "name": "sinusoid", "params": [1, 2] }, "delta": 0, "asymptotic": 1 },
                "deltas": [1, 2]
            }
        }"#;
        let err = parse_scenario(text).unwrap_err();
        assert_eq!(err.issues()[0].path, "parameters.phi.field.params");
    }

    #[test]
    fn outputs_must_stay_inside_the_output_directory() {
        let text = MINIMAL.replace("\"parameters\"", r#""outputs": [{"path": "../x.csv"}], "parameters""#);
        let err = parse_scenario(&text).unwrap_err();
        assert_eq!(err.issues()[0].path, "outputs[0].path");
    }
}
