//! Instance files: JSON text, `format_version` 1.
//!
//! ```text
//! {
//!   "format_version": 1,
//!   "num_states": 2,
//!   "num_actions": 1,
//!   "discount": 0.9,
//!   "initial_dist": [0.5, 0.5],
//!   "transitions": [
//!     {"s": 0, "a": 0, "probs": [[0, 0.5], [1, 0.5]]},
//!     {"s": 1, "a": 0, "probs": [[1, 1.0]]}
//!   ],
//!   "rewards": [
//!     [0, 0, 1, 0.25]
//!   ],
//!   "ambiguity": {"kind": "l1", "kappa": 0.1, "sigma_default": 1.0, "sigma_overrides": [[0, 0, 1, 2.0]]}
//! }
//! ```
//!
//! `ambiguity` and its `sigma_overrides` are optional. Numbers are written
//! with the shortest decimal that reads back to the same double.

use std::fmt::Write as _;
use std::path::Path;

use rmdp_core::{AmbiguityKind, AmbiguitySpec, MdpInstance};
use serde_json::{json, Map, Value};

use crate::error::{BenchError, Result};

pub const FORMAT_VERSION: u64 = 1;

pub fn instance_to_string(inst: &MdpInstance, amb: Option<&AmbiguitySpec>) -> String {
    let (n, actions) = (inst.num_states(), inst.num_actions());
    let mut out = String::new();
    out.push_str("{\n");
    let _ = writeln!(out, "  \"format_version\": {FORMAT_VERSION},");
    let _ = writeln!(out, "  \"num_states\": {n},");
    let _ = writeln!(out, "  \"num_actions\": {actions},");
    let _ = writeln!(out, "  \"discount\": {},", json!(inst.discount()));
    let _ = writeln!(out, "  \"initial_dist\": {},", json!(inst.initial_dist()));
    let mut transitions = Vec::new();
    let mut rewards = Vec::new();
    for s in 0..n {
        for a in 0..actions {
            let probs: Vec<Value> = inst.transitions(s, a).iter().map(|&(next, p)| json!([next, p])).collect();
            transitions.push(format!("{{\"s\": {s}, \"a\": {a}, \"probs\": {}}}", Value::Array(probs)));
            for &(next, r) in inst.rewards(s, a) {
                rewards.push(json!([s, a, next, r]).to_string());
            }
        }
    }
    write_array(&mut out, "transitions", &transitions, true);
    write_array(&mut out, "rewards", &rewards, amb.is_some());
    if let Some(amb) = amb {
        let mut entry = Map::new();
        entry.insert("kind".into(), json!(amb.kind().name()));
        entry.insert("kappa".into(), json!(amb.kappa()));
        entry.insert("sigma_default".into(), json!(amb.sigma_default()));
        if !amb.sigma_overrides().is_empty() {
            let overrides: Vec<Value> =
                amb.sigma_overrides().iter().map(|(&(s, a, next), &w)| json!([s, a, next, w])).collect();
            entry.insert("sigma_overrides".into(), Value::Array(overrides));
        }
        let _ = writeln!(out, "  \"ambiguity\": {}", Value::Object(entry));
    }
    out.push_str("}\n");
    out
}

fn write_array(out: &mut String, key: &str, items: &[String], comma: bool) {
    let tail = if comma { "," } else { "" };
    if items.is_empty() {
        let _ = writeln!(out, "  \"{key}\": []{tail}");
        return;
    }
    let _ = writeln!(out, "  \"{key}\": [");
    for (i, item) in items.iter().enumerate() {
        let sep = if i + 1 < items.len() { "," } else { "" };
        let _ = writeln!(out, "    {item}{sep}");
    }
    let _ = writeln!(out, "  ]{tail}");
}

pub fn save_instance(inst: &MdpInstance, amb: Option<&AmbiguitySpec>, path: &Path) -> Result<()> {
    std::fs::write(path, instance_to_string(inst, amb))
        .map_err(|source| BenchError::Io { path: path.to_path_buf(), source })
}

pub fn load_instance(path: &Path) -> Result<(MdpInstance, Option<AmbiguitySpec>)> {
    let text =
        std::fs::read_to_string(path).map_err(|source| BenchError::Io { path: path.to_path_buf(), source })?;
    instance_from_str(&text)
}

fn field<'v>(obj: &'v Map<String, Value>, key: &str) -> Result<&'v Value> {
    obj.get(key).ok_or_else(|| BenchError::Schema(key.into()))
}

fn as_index(v: &Value, key: &str) -> Result<usize> {
    v.as_u64().map(|x| x as usize).ok_or_else(|| BenchError::Schema(key.into()))
}

fn as_real(v: &Value, key: &str) -> Result<f64> {
    v.as_f64().ok_or_else(|| BenchError::Schema(key.into()))
}

fn as_array<'v>(v: &'v Value, key: &str) -> Result<&'v Vec<Value>> {
    v.as_array().ok_or_else(|| BenchError::Schema(key.into()))
}

/// A fixed-length array of numbers, e.g. `[s, a, s', r]`.
fn tuple<'v>(v: &'v Value, len: usize, key: &str) -> Result<&'v [Value]> {
    match v.as_array() {
        Some(items) if items.len() == len => Ok(items),
        _ => Err(BenchError::Schema(key.into())),
    }
}

pub fn instance_from_str(text: &str) -> Result<(MdpInstance, Option<AmbiguitySpec>)> {
    let root: Value = serde_json::from_str(text).map_err(|e| BenchError::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    let obj = root.as_object().ok_or_else(|| BenchError::Schema("<root>".into()))?;
    let version = field(obj, "format_version")?.as_u64().ok_or_else(|| BenchError::Schema("format_version".into()))?;
    if version != FORMAT_VERSION {
        return Err(BenchError::Version(version));
    }
    let n = as_index(field(obj, "num_states")?, "num_states")?;
    let actions = as_index(field(obj, "num_actions")?, "num_actions")?;
    let discount = as_real(field(obj, "discount")?, "discount")?;
    let initial = as_array(field(obj, "initial_dist")?, "initial_dist")?
        .iter()
        .map(|v| as_real(v, "initial_dist"))
        .collect::<Result<Vec<f64>>>()?;
    let mut builder = MdpInstance::builder(n, actions, discount).initial_dist(initial);
    for entry in as_array(field(obj, "transitions")?, "transitions")? {
        let entry = entry.as_object().ok_or_else(|| BenchError::Schema("transitions".into()))?;
        let s = as_index(field(entry, "s")?, "s")?;
        let a = as_index(field(entry, "a")?, "a")?;
        for pair in as_array(field(entry, "probs")?, "probs")? {
            let pair = tuple(pair, 2, "probs")?;
            builder = builder.transition(s, a, as_index(&pair[0], "probs")?, as_real(&pair[1], "probs")?);
        }
    }
    for item in as_array(field(obj, "rewards")?, "rewards")? {
        let t = tuple(item, 4, "rewards")?;
        builder = builder.reward(
            as_index(&t[0], "rewards")?,
            as_index(&t[1], "rewards")?,
            as_index(&t[2], "rewards")?,
            as_real(&t[3], "rewards")?,
        );
    }
    let inst = builder.build()?;
    let amb = match obj.get("ambiguity") {
        None | Some(Value::Null) => None,
        Some(v) => Some(parse_ambiguity(v)?),
    };
    Ok((inst, amb))
}

fn parse_ambiguity(v: &Value) -> Result<AmbiguitySpec> {
    let obj = v.as_object().ok_or_else(|| BenchError::Schema("ambiguity".into()))?;
    let kind: AmbiguityKind = field(obj, "kind")?
        .as_str()
        .and_then(|k| k.parse().ok())
        .ok_or_else(|| BenchError::Schema("kind".into()))?;
    let kappa = as_real(field(obj, "kappa")?, "kappa")?;
    let mut amb = AmbiguitySpec::new(kind, kappa)?;
    if let Some(sigma) = obj.get("sigma_default") {
        amb = amb.with_sigma_default(as_real(sigma, "sigma_default")?)?;
    }
    if let Some(overrides) = obj.get("sigma_overrides") {
        for item in as_array(overrides, "sigma_overrides")? {
            let t = tuple(item, 4, "sigma_overrides")?;
            amb = amb.with_sigma(
                as_index(&t[0], "sigma_overrides")?,
                as_index(&t[1], "sigma_overrides")?,
                as_index(&t[2], "sigma_overrides")?,
                as_real(&t[3], "sigma_overrides")?,
            )?;
        }
    }
    Ok(amb)
}
