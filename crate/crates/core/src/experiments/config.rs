//! Experiment configuration files: TOML with the sections `[experiment]`,
//! `[model.<name>]`, `[diffeo.<name>]`, `[params]`, `[tolerances]` and
//! `[output]`. Validation reports every offending key at once.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use toml::{Table, Value};

use crate::diffeo::DiffeoSpec;
use crate::digits::{DigitModel, ModelKind};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSection {
    pub name: String,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub base: usize,
    #[serde(flatten)]
    pub kind: ModelKind,
}

impl ModelSpec {
    pub fn build(&self, label: &str) -> Result<DigitModel> {
        DigitModel::from_kind(self.base, self.kind.clone(), label)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct OutputSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dir: Option<String>,
    #[serde(default)]
    pub format: Format,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub experiment: ExperimentSection,
    #[serde(rename = "model", default)]
    pub models: BTreeMap<String, ModelSpec>,
    #[serde(rename = "diffeo", default)]
    pub diffeos: BTreeMap<String, DiffeoSpec>,
    #[serde(default)]
    pub params: BTreeMap<String, Value>,
    #[serde(default)]
    pub tolerances: BTreeMap<String, f64>,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Int,
    Float,
    FloatList,
    /// Name of a `[model.*]` section.
    Model,
    ModelList,
    /// Name of a `[diffeo.*]` section.
    Diffeo,
    DiffeoList,
}

#[derive(Debug, Clone, Copy)]
pub struct Key {
    pub name: &'static str,
    pub kind: Kind,
    pub required: bool,
}

const fn req(name: &'static str, kind: Kind) -> Key {
    Key { name, kind, required: true }
}

const fn opt(name: &'static str, kind: Kind) -> Key {
    Key { name, kind, required: false }
}

/// Accepted `[params]` and `[tolerances]` keys of one experiment.
#[derive(Debug, Clone, Copy)]
pub struct Schema {
    pub name: &'static str,
    pub params: &'static [Key],
    pub tolerances: &'static [&'static str],
}

use Kind::*;

pub const SCHEMAS: &[Schema] = &[
    Schema {
        name: "invariance",
        params: &[req("models", ModelList), opt("depth", Int)],
        tolerances: &["markov"],
    },
    Schema {
        name: "dimension",
        params: &[req("model", Model), opt("n_points", Int), opt("depth", Int), opt("min_depth", Int)],
        tolerances: &["dimension"],
    },
    Schema {
        name: "diffeo_shift",
        params: &[
            req("model", Model),
            req("affine", DiffeoList),
            req("nonaffine", DiffeoList),
            opt("n_points", Int),
            opt("t_max", Float),
            opt("frame_depth", Int),
            opt("window_samples", Int),
        ],
        tolerances: &["affine_cells", "final_distance"],
    },
    Schema {
        name: "equidistribution",
        params: &[req("model", Model), opt("n", Int), opt("n_points", Int), opt("frame_depth", Int)],
        tolerances: &["cauchy"],
    },
    Schema {
        name: "spectrum",
        params: &[
            req("model", Model),
            req("null_model", Model),
            opt("periodic_model", Model),
            opt("n_points", Int),
            opt("n_controls", Int),
            opt("t_levels", Float),
            opt("burn_in_levels", Float),
            opt("frame_depth", Int),
        ],
        tolerances: &["present_ratio", "absent_ratio"],
    },
    Schema {
        name: "prediction",
        params: &[
            req("model", Model),
            req("markov_model", Model),
            opt("depth", Int),
            opt("intertwine_paths", Int),
            opt("superposition_paths", Int),
            opt("superposition_depth", Int),
            opt("dimension_paths", Int),
            opt("dimension_depth", Int),
        ],
        tolerances: &["intertwine_cells", "superposition", "dimension"],
    },
    Schema {
        name: "phase_trichotomy",
        params: &[
            req("model", Model),
            req("periodic_model", Model),
            opt("n_points", Int),
            opt("null_samples", Int),
            opt("null_seeds", Int),
            opt("bins_log2", Int),
            opt("t_levels", Float),
        ],
        tolerances: &["atom_resultant", "mode_resultant", "null_resultant", "null_probability"],
    },
    Schema {
        name: "pushforward_phase",
        params: &[
            req("model", Model),
            req("affine", Diffeo),
            req("nonaffine", DiffeoList),
            opt("n_points", Int),
            opt("t_levels", Float),
        ],
        tolerances: &["rotation", "distance"],
    },
    Schema {
        name: "slope_detection",
        params: &[
            req("model", Model),
            req("slopes", FloatList),
            opt("n_points", Int),
            opt("scan_points", Int),
            opt("t_levels", Float),
        ],
        tolerances: &["slope"],
    },
    Schema {
        name: "cross_base",
        params: &[
            req("model", Model),
            req("other", Model),
            req("maps", DiffeoList),
            opt("related_model", Model),
            opt("min_depth", Int),
            opt("max_depth", Int),
        ],
        tolerances: &["control", "min_r2", "final_overlap"],
    },
    Schema {
        name: "mixture",
        params: &[req("model", Model), req("map", Diffeo), opt("n_points", Int), opt("t_levels", Float)],
        tolerances: &[],
    },
    Schema {
        name: "scenery",
        params: &[
            req("model", Model),
            opt("point_seed", Int),
            opt("t_max", Float),
            opt("dt", Float),
            opt("frame_depth", Int),
            opt("distortion", Diffeo),
        ],
        tolerances: &[],
    },
];

pub fn schema(name: &str) -> Option<&'static Schema> {
    SCHEMAS.iter().find(|s| s.name == name)
}

const SECTIONS: &[&str] = &["experiment", "model", "diffeo", "params", "tolerances", "output"];

fn type_name(v: &Value) -> &'static str {
    v.type_str()
}

fn check_kind(key: &str, v: &Value, kind: Kind, cfg: &Table, errors: &mut Vec<String>) {
    let names = |section: &str| -> Vec<String> {
        cfg.get(section)
            .and_then(|s| s.as_table())
            .map(|t| t.keys().cloned().collect())
            .unwrap_or_default()
    };
    let refers = |name: &str, section: &str, errors: &mut Vec<String>| {
        if !names(section).iter().any(|n| n == name) {
            errors.push(format!("params.{key}: `{name}` is not defined under [{section}.*]"));
        }
    };
    match kind {
        Int => match v.as_integer() {
            Some(i) if i >= 0 => {}
            Some(_) => errors.push(format!("params.{key}: must be nonnegative")),
            None => errors.push(format!("params.{key}: expected integer, found {}", type_name(v))),
        },
        Float => {
            if !(v.is_float() || v.is_integer()) {
                errors.push(format!("params.{key}: expected number, found {}", type_name(v)));
            }
        }
        FloatList => match v.as_array() {
            Some(a) if a.iter().all(|x| x.is_float() || x.is_integer()) => {}
            _ => errors.push(format!("params.{key}: expected array of numbers")),
        },
        Model | Diffeo => match v.as_str() {
            Some(s) => refers(s, if kind == Model { "model" } else { "diffeo" }, errors),
            None => errors.push(format!("params.{key}: expected a name, found {}", type_name(v))),
        },
        ModelList | DiffeoList => match v.as_array() {
            Some(a) => {
                if a.is_empty() {
                    errors.push(format!("params.{key}: list is empty"));
                }
                for x in a {
                    match x.as_str() {
                        Some(s) => refers(s, if kind == ModelList { "model" } else { "diffeo" }, errors),
                        None => errors.push(format!("params.{key}: expected names, found {}", type_name(x))),
                    }
                }
            }
            None => errors.push(format!("params.{key}: expected array of names, found {}", type_name(v))),
        },
    }
}

fn unknown_keys(section: &str, t: &Table, allowed: &[&str], errors: &mut Vec<String>) {
    for k in t.keys() {
        if !allowed.contains(&k.as_str()) {
            errors.push(format!("{section}.{k}: unknown key"));
        }
    }
}

fn validate(cfg: &Table) -> Vec<String> {
    let mut errors = Vec::new();
    for k in cfg.keys() {
        if !SECTIONS.contains(&k.as_str()) {
            errors.push(format!("{k}: unknown section"));
        }
    }
    let mut schema_found = None;
    match cfg.get("experiment").and_then(|v| v.as_table()) {
        None => errors.push("experiment: missing section".into()),
        Some(t) => {
            unknown_keys("experiment", t, &["name", "seed"], &mut errors);
            match t.get("name").map(|v| v.as_str()) {
                None => errors.push("experiment.name: missing".into()),
                Some(None) => errors.push("experiment.name: expected string".into()),
                Some(Some(n)) => match schema(n) {
                    Some(s) => schema_found = Some(s),
                    None => errors.push(format!("experiment.name: unknown experiment `{n}`")),
                },
            }
            match t.get("seed") {
                None => errors.push("experiment.seed: missing (seeds must be explicit)".into()),
                Some(v) => match v.as_integer() {
                    Some(i) if i >= 0 => {}
                    _ => errors.push("experiment.seed: expected nonnegative integer".into()),
                },
            }
        }
    }
    for (section, what) in [("model", "model"), ("diffeo", "diffeo")] {
        let Some(v) = cfg.get(section) else { continue };
        let Some(t) = v.as_table() else {
            errors.push(format!("{section}: expected a table of named {what}s"));
            continue;
        };
        for (name, body) in t {
            let key = format!("{section}.{name}");
            if !body.is_table() {
                errors.push(format!("{key}: expected a table"));
                continue;
            }
            if section == "model" {
                match body.clone().try_into::<ModelSpec>() {
                    Err(e) => errors.push(format!("{key}: {}", e.message().trim())),
                    Ok(spec) => {
                        let allowed: &[&str] = match spec.kind {
                            ModelKind::Bernoulli { .. } => &["base", "kind", "weights"],
                            ModelKind::Markov { .. } => &["base", "kind", "stationary", "transition"],
                            ModelKind::Lebesgue => &["base", "kind"],
                        };
                        unknown_keys(&key, body.as_table().unwrap(), allowed, &mut errors);
                        if let Err(e) = spec.build(name) {
                            errors.push(format!("{key}: {e}"));
                        }
                    }
                }
            } else {
                match body.clone().try_into::<DiffeoSpec>() {
                    Err(e) => errors.push(format!("{key}: {}", e.message().trim())),
                    Ok(f) => {
                        let allowed: &[&str] = match f {
                            DiffeoSpec::Affine { .. } => &["kind", "u", "v"],
                            DiffeoSpec::Polynomial { .. } => &["kind", "coefficients", "lo", "hi"],
                            DiffeoSpec::Composition { .. } => &["kind", "parts"],
                        };
                        unknown_keys(&key, body.as_table().unwrap(), allowed, &mut errors);
                        if let Err(e) = f.validate() {
                            errors.push(format!("{key}: {e}"));
                        }
                    }
                }
            }
        }
    }
    let params = cfg.get("params").and_then(|v| v.as_table());
    if cfg.get("params").is_some() && params.is_none() {
        errors.push("params: expected a table".into());
    }
    let tols = cfg.get("tolerances").and_then(|v| v.as_table());
    if cfg.get("tolerances").is_some() && tols.is_none() {
        errors.push("tolerances: expected a table".into());
    }
    if let Some(s) = schema_found {
        let empty = Table::new();
        let p = params.unwrap_or(&empty);
        for k in s.params {
            match p.get(k.name) {
                Some(v) => check_kind(k.name, v, k.kind, cfg, &mut errors),
                None if k.required => errors.push(format!("params.{}: missing", k.name)),
                None => {}
            }
        }
        let names: Vec<&str> = s.params.iter().map(|k| k.name).collect();
        unknown_keys("params", p, &names, &mut errors);
        let t = tols.unwrap_or(&empty);
        unknown_keys("tolerances", t, s.tolerances, &mut errors);
        for (k, v) in t {
            if !(v.is_float() || v.is_integer()) {
                errors.push(format!("tolerances.{k}: expected number, found {}", type_name(v)));
            }
        }
    }
    if let Some(v) = cfg.get("output") {
        match v.as_table() {
            None => errors.push("output: expected a table".into()),
            Some(t) => {
                unknown_keys("output", t, &["dir", "format"], &mut errors);
                if let Some(d) = t.get("dir") {
                    if !d.is_str() {
                        errors.push("output.dir: expected string".into());
                    }
                }
                if let Some(f) = t.get("format") {
                    if !matches!(f.as_str(), Some("json") | Some("csv")) {
                        errors.push("output.format: expected \"json\" or \"csv\"".into());
                    }
                }
            }
        }
    }
    errors
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut table: Table =
            text.parse().map_err(|e: toml::de::Error| Error::Config(vec![e.message().to_string()]))?;
        let errors = validate(&table);
        if !errors.is_empty() {
            return Err(Error::Config(errors));
        }
        if let Some(Value::Table(t)) = table.get_mut("tolerances") {
            for (_, v) in t.iter_mut() {
                if let Some(i) = v.as_integer() {
                    *v = Value::Float(i as f64);
                }
            }
        }
        Value::Table(table).try_into().map_err(|e: toml::de::Error| Error::Config(vec![e.to_string()]))
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text).map_err(|e| match e {
            Error::Config(v) => Error::Config(v.into_iter().map(|m| format!("{}: {m}", path.display())).collect()),
            other => other,
        })
    }

    /// Canonical text; `parse(emit(c)) == c`.
    pub fn emit(&self) -> String {
        toml::to_string(self).expect("configs always serialize")
    }

    /// SHA-256 of the canonical text, hex encoded.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.emit().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn schema(&self) -> &'static Schema {
        schema(&self.experiment.name).expect("validated at parse time")
    }

    pub fn model(&self, name: &str) -> Result<DigitModel> {
        let spec = self.models.get(name).ok_or_else(|| Error::Config(vec![format!("model `{name}` not defined")]))?;
        spec.build(name)
    }

    pub fn diffeo(&self, name: &str) -> Result<DiffeoSpec> {
        self.diffeos.get(name).cloned().ok_or_else(|| Error::Config(vec![format!("diffeo `{name}` not defined")]))
    }

    pub fn int(&self, key: &str, default: u64) -> u64 {
        self.params.get(key).and_then(|v| v.as_integer()).map(|i| i as u64).unwrap_or(default)
    }

    pub fn float(&self, key: &str, default: f64) -> f64 {
        match self.params.get(key) {
            Some(Value::Float(f)) => *f,
            Some(Value::Integer(i)) => *i as f64,
            _ => default,
        }
    }

    pub fn floats(&self, key: &str) -> Vec<f64> {
        self.params
            .get(key)
            .and_then(|v| v.as_array())
            .map(|a| a.iter().filter_map(|x| x.as_float().or(x.as_integer().map(|i| i as f64))).collect())
            .unwrap_or_default()
    }

    pub fn name_param(&self, key: &str) -> Option<String> {
        self.params.get(key).and_then(|v| v.as_str()).map(str::to_string)
    }

    pub fn names(&self, key: &str) -> Vec<String> {
        self.params
            .get(key)
            .and_then(|v| v.as_array())
            .map(|a| a.iter().filter_map(|x| x.as_str().map(str::to_string)).collect())
            .unwrap_or_default()
    }

    pub fn tolerance(&self, key: &str, default: f64) -> f64 {
        self.tolerances.get(key).copied().unwrap_or(default)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const GOOD: &str = r#"
[experiment]
name = "dimension"
seed = 7

[model.cantor]
base = 3
kind = "bernoulli"
weights = [0.5, 0.0, 0.5]

[params]
model = "cantor"
n_points = 20

[tolerances]
dimension = 0.02
"#;

    #[test]
    fn parses_and_round_trips() {
        let c = ExperimentConfig::parse(GOOD).unwrap();
        assert_eq!(c.int("n_points", 0), 20);
        let again = ExperimentConfig::parse(&c.emit()).unwrap();
        assert_eq!(c, again);
        assert_eq!(c.hash(), again.hash());
    }

    #[test]
    fn reports_every_bad_key() {
        let bad = GOOD
            .replace("n_points = 20", "n_points = \"many\"\nbogus = 1")
            .replace("seed = 7", "seed = 7\ncolour = 1")
            .replace("dimension = 0.02", "dimension = 0.02\nspeed = 3");
        let Err(Error::Config(errs)) = ExperimentConfig::parse(&bad) else { panic!() };
        for key in ["params.n_points", "params.bogus", "experiment.colour", "tolerances.speed"] {
            assert!(errs.iter().any(|e| e.starts_with(key)), "{key} not in {errs:?}");
        }
    }

    #[test]
    fn undefined_model_reference() {
        let bad = GOOD.replace("model = \"cantor\"", "model = \"dust\"");
        let Err(Error::Config(errs)) = ExperimentConfig::parse(&bad) else { panic!() };
        assert!(errs.iter().any(|e| e.contains("`dust`")));
    }

    #[test]
    fn invalid_model_weights() {
        let bad = GOOD.replace("[0.5, 0.0, 0.5]", "[0.5, 0.0, 0.6]");
        let Err(Error::Config(errs)) = ExperimentConfig::parse(&bad) else { panic!() };
        assert!(errs.iter().any(|e| e.starts_with("model.cantor")));
    }

    #[test]
    fn missing_seed_and_unknown_section() {
        let bad = GOOD.replace("seed = 7\n", "") + "\n[extras]\nx = 1\n";
        let Err(Error::Config(errs)) = ExperimentConfig::parse(&bad) else { panic!() };
        assert!(errs.iter().any(|e| e.starts_with("experiment.seed")));
        assert!(errs.iter().any(|e| e.starts_with("extras")));
    }
}
