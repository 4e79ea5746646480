//! TOML configuration for models and experiments.
//!
//! Model files describe one or more arm classes plus the instance shape:
//!
//! ```toml
//! n_arms = 100
//! budget = 20
//! d = 4
//! p0 = [["1/2", 0, 0, "1/2"], ["1/2", "1/2", 0, 0], ...]
//! p1 = [...]
//! r0 = [-1, 0, 0, 1]
//! r1 = [-1, 0, 0, 1]
//! ```
//!
//! Probabilities and rewards accept integers, floats, or strings holding a
//! fraction (`"9/10"`) or a decimal. Heterogeneous instances replace the
//! top-level arm fields with repeated `[[class]]` tables and give each arm
//! its class through `classes = [1, 1, 2, ...]` (1-based).
//!
//! Experiment files reference a model file and set the run shape:
//!
//! ```toml
//! model = "models/circulant.toml"   # relative to this file
//! horizon = 10000
//! seeds = [101, 102, 103]
//! cadence = 100
//! baselines = ["exact-index", "uniform-random"]
//!
//! [policy]
//! epsilon = 0.1
//! mode = "learned"                  # learned | exact | uniform
//!
//! [schedule]
//! kind = "decreasing"               # decreasing | constant
//! fast_gain = 1.0
//! slow_gain = 1.0
//! # constant kind instead takes: a = 0.02, b = 0.005
//! ```
//!
//! `--set key.path=value` overrides are applied to the parsed TOML tree
//! before typed validation, so they behave exactly like editing the file.

use crate::model::{ArmModel, BanditInstance, ModelError};
use crate::policy::PolicyMode;
use crate::schedule::StepSchedule;
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};
use thiserror::Error;
use toml::Value;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("TOML parse error: {0}")]
    Toml(#[from] toml::de::Error),

    #[error("missing field `{0}`")]
    Missing(String),

    #[error("field `{key}`: expected {expected}")]
    Type { key: String, expected: &'static str },

    #[error("field `{key}`: cannot parse number from {value:?}")]
    BadNumber { key: String, value: String },

    #[error("{0}")]
    Invalid(String),

    #[error(transparent)]
    Model(#[from] ModelError),

    #[error("override `{0}` is not of the form key.path=value")]
    BadOverride(String),
}

fn missing(key: &str) -> ConfigError {
    ConfigError::Missing(key.to_string())
}

/// Integer, float, or string (`"1/2"`, `"0.25"`) scalar to f64.
fn number(v: &Value, key: &str) -> Result<f64, ConfigError> {
    match v {
        Value::Integer(i) => Ok(*i as f64),
        Value::Float(f) => Ok(*f),
        Value::String(s) => {
            let t = s.trim();
            if let Some((num, den)) = t.split_once('/') {
                let n: f64 = num.trim().parse().map_err(|_| ConfigError::BadNumber {
                    key: key.to_string(),
                    value: s.clone(),
                })?;
                let d: f64 = den.trim().parse().map_err(|_| ConfigError::BadNumber {
                    key: key.to_string(),
                    value: s.clone(),
                })?;
                if d == 0.0 {
                    return Err(ConfigError::BadNumber {
                        key: key.to_string(),
                        value: s.clone(),
                    });
                }
                Ok(n / d)
            } else {
                t.parse().map_err(|_| ConfigError::BadNumber {
                    key: key.to_string(),
                    value: s.clone(),
                })
            }
        }
        _ => Err(ConfigError::Type {
            key: key.to_string(),
            expected: "a number or a fraction string",
        }),
    }
}

fn number_vec(v: &Value, key: &str) -> Result<Vec<f64>, ConfigError> {
    let arr = v.as_array().ok_or(ConfigError::Type {
        key: key.to_string(),
        expected: "an array of numbers",
    })?;
    arr.iter()
        .enumerate()
        .map(|(i, x)| number(x, &format!("{key}[{i}]")))
        .collect()
}

fn matrix(v: &Value, key: &str) -> Result<Vec<Vec<f64>>, ConfigError> {
    let arr = v.as_array().ok_or(ConfigError::Type {
        key: key.to_string(),
        expected: "an array of rows",
    })?;
    arr.iter()
        .enumerate()
        .map(|(i, row)| number_vec(row, &format!("{key}[{i}]")))
        .collect()
}

fn usize_field(v: &Value, key: &str) -> Result<usize, ConfigError> {
    match v.as_integer() {
        Some(i) if i >= 0 => Ok(i as usize),
        _ => Err(ConfigError::Type {
            key: key.to_string(),
            expected: "a non-negative integer",
        }),
    }
}

fn parse_class(table: &Value, prefix: &str) -> Result<ArmModel, ConfigError> {
    let get = |k: &str| {
        table
            .get(k)
            .ok_or_else(|| missing(&format!("{prefix}{k}")))
    };
    let d = usize_field(get("d")?, &format!("{prefix}d"))?;
    let p0 = matrix(get("p0")?, &format!("{prefix}p0"))?;
    let p1 = matrix(get("p1")?, &format!("{prefix}p1"))?;
    let r0 = number_vec(get("r0")?, &format!("{prefix}r0"))?;
    let r1 = number_vec(get("r1")?, &format!("{prefix}r1"))?;
    if p0.len() != d {
        return Err(ConfigError::Invalid(format!(
            "{prefix}p0 has {} rows but d = {d}",
            p0.len()
        )));
    }
    Ok(ArmModel::new(p0, p1, r0, r1)?)
}

/// Parsed model file: arm classes plus (optionally) the instance shape.
#[derive(Debug, Clone)]
pub struct ModelSpec {
    pub classes: Vec<ArmModel>,
    /// 0-based class per arm; defaults to all arms in class 0.
    pub arm_class: Option<Vec<usize>>,
    pub n_arms: Option<usize>,
    pub budget: Option<usize>,
}

impl ModelSpec {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let root: Value = toml::from_str(text)?;
        Self::from_value(&root)
    }

    pub fn from_value(root: &Value) -> Result<Self, ConfigError> {
        let classes = if let Some(list) = root.get("class") {
            let arr = list.as_array().ok_or(ConfigError::Type {
                key: "class".to_string(),
                expected: "an array of tables",
            })?;
            if arr.is_empty() {
                return Err(ConfigError::Invalid("class list is empty".into()));
            }
            arr.iter()
                .enumerate()
                .map(|(i, t)| parse_class(t, &format!("class[{i}].")))
                .collect::<Result<Vec<_>, _>>()?
        } else {
            vec![parse_class(root, "")?]
        };

        let arm_class = match root.get("classes") {
            None => None,
            Some(v) => {
                let ids = v.as_array().ok_or(ConfigError::Type {
                    key: "classes".to_string(),
                    expected: "an array of 1-based class ids",
                })?;
                let mut out = Vec::with_capacity(ids.len());
                for (i, id) in ids.iter().enumerate() {
                    let c = usize_field(id, &format!("classes[{i}]"))?;
                    if c == 0 || c > classes.len() {
                        return Err(ConfigError::Invalid(format!(
                            "classes[{i}] = {c} is outside 1..={}",
                            classes.len()
                        )));
                    }
                    out.push(c - 1);
                }
                Some(out)
            }
        };

        let n_arms = root
            .get("n_arms")
            .map(|v| usize_field(v, "n_arms"))
            .transpose()?;
        let budget = root
            .get("budget")
            .map(|v| usize_field(v, "budget"))
            .transpose()?;
        Ok(Self {
            classes,
            arm_class,
            n_arms,
            budget,
        })
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text)
    }

    /// First (or only) arm class.
    pub fn primary_class(&self) -> &ArmModel {
        &self.classes[0]
    }

    /// Builds the bandit instance; `n_arms`/`budget` arguments override the
    /// file's values.
    pub fn instance(
        &self,
        n_arms: Option<usize>,
        budget: Option<usize>,
    ) -> Result<BanditInstance, ConfigError> {
        let n = n_arms
            .or(self.n_arms)
            .ok_or_else(|| missing("n_arms"))?;
        let m = budget.or(self.budget).ok_or_else(|| missing("budget"))?;
        let arm_class = match &self.arm_class {
            Some(ids) => {
                if ids.len() != n {
                    return Err(ConfigError::Invalid(format!(
                        "classes lists {} arms but n_arms = {n}",
                        ids.len()
                    )));
                }
                ids.clone()
            }
            None => vec![0; n],
        };
        Ok(BanditInstance::new(self.classes.clone(), arm_class, m)?)
    }
}

/// Schedule section of an experiment file; the slow-update gate comes from
/// the instance's arm count at plan time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScheduleSpec {
    Decreasing { fast_gain: f64, slow_gain: f64 },
    Constant { a: f64, b: f64 },
}

impl ScheduleSpec {
    pub fn with_gate(self, gate: u64) -> StepSchedule {
        match self {
            ScheduleSpec::Decreasing {
                fast_gain,
                slow_gain,
            } => StepSchedule::Decreasing {
                fast_gain,
                slow_gain,
                gate,
            },
            ScheduleSpec::Constant { a, b } => StepSchedule::Constant { a, b },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BaselineKind {
    ExactIndex,
    UniformRandom,
}

impl BaselineKind {
    pub fn label(self) -> &'static str {
        match self {
            BaselineKind::ExactIndex => "exact-index",
            BaselineKind::UniformRandom => "uniform-random",
        }
    }
}

/// Parsed experiment file (model not yet loaded).
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    /// As written in the file; resolve against the config's directory.
    pub model: String,
    pub horizon: u64,
    pub seeds: Vec<u64>,
    pub cadence: u64,
    pub baselines: Vec<BaselineKind>,
    pub epsilon: f64,
    pub mode: PolicyMode,
    pub schedule: ScheduleSpec,
    pub n_arms: Option<usize>,
    pub budget: Option<usize>,
}

impl ExperimentConfig {
    pub fn from_value(root: &Value) -> Result<Self, ConfigError> {
        let model = root
            .get("model")
            .ok_or_else(|| missing("model"))?
            .as_str()
            .ok_or(ConfigError::Type {
                key: "model".into(),
                expected: "a path string",
            })?
            .to_string();

        let horizon = match root.get("horizon").ok_or_else(|| missing("horizon"))? {
            Value::Integer(i) if *i >= 1 => *i as u64,
            _ => {
                return Err(ConfigError::Type {
                    key: "horizon".into(),
                    expected: "an integer >= 1",
                })
            }
        };

        let seeds = match root.get("seeds").ok_or_else(|| missing("seeds"))? {
            Value::Array(a) if !a.is_empty() => a
                .iter()
                .enumerate()
                .map(|(i, v)| match v.as_integer() {
                    Some(s) if s >= 0 => Ok(s as u64),
                    _ => Err(ConfigError::Type {
                        key: format!("seeds[{i}]"),
                        expected: "a non-negative integer",
                    }),
                })
                .collect::<Result<Vec<_>, _>>()?,
            _ => {
                return Err(ConfigError::Invalid(
                    "seeds must be a non-empty array".into(),
                ))
            }
        };

        let cadence = match root.get("cadence") {
            None => 1,
            Some(Value::Integer(i)) if *i >= 1 => *i as u64,
            Some(_) => {
                return Err(ConfigError::Type {
                    key: "cadence".into(),
                    expected: "an integer >= 1",
                })
            }
        };

        let baselines = match root.get("baselines") {
            None => Vec::new(),
            Some(Value::Array(a)) => a
                .iter()
                .map(|v| match v.as_str() {
                    Some("exact-index") => Ok(BaselineKind::ExactIndex),
                    Some("uniform-random") => Ok(BaselineKind::UniformRandom),
                    _ => Err(ConfigError::Type {
                        key: "baselines".into(),
                        expected: "\"exact-index\" or \"uniform-random\"",
                    }),
                })
                .collect::<Result<Vec<_>, _>>()?,
            Some(_) => {
                return Err(ConfigError::Type {
                    key: "baselines".into(),
                    expected: "an array of policy names",
                })
            }
        };

        let policy = root.get("policy").ok_or_else(|| missing("policy"))?;
        let epsilon = number(
            policy.get("epsilon").ok_or_else(|| missing("policy.epsilon"))?,
            "policy.epsilon",
        )?;
        if !(0.0..1.0).contains(&epsilon) {
            return Err(ConfigError::Invalid(format!(
                "policy.epsilon = {epsilon} outside [0, 1)"
            )));
        }
        let mode = match policy.get("mode").and_then(|v| v.as_str()) {
            None | Some("learned") => PolicyMode::LearnedIndices,
            Some("exact") => PolicyMode::ExactIndices,
            Some("uniform") => PolicyMode::UniformRandom,
            Some(_) => {
                return Err(ConfigError::Type {
                    key: "policy.mode".into(),
                    expected: "\"learned\", \"exact\", or \"uniform\"",
                })
            }
        };

        let sched = root.get("schedule").ok_or_else(|| missing("schedule"))?;
        let schedule = match sched.get("kind").and_then(|v| v.as_str()) {
            Some("decreasing") | None => ScheduleSpec::Decreasing {
                fast_gain: sched
                    .get("fast_gain")
                    .map(|v| number(v, "schedule.fast_gain"))
                    .transpose()?
                    .unwrap_or(0.1),
                slow_gain: sched
                    .get("slow_gain")
                    .map(|v| number(v, "schedule.slow_gain"))
                    .transpose()?
                    .unwrap_or(0.05),
            },
            Some("constant") => ScheduleSpec::Constant {
                a: number(
                    sched.get("a").ok_or_else(|| missing("schedule.a"))?,
                    "schedule.a",
                )?,
                b: number(
                    sched.get("b").ok_or_else(|| missing("schedule.b"))?,
                    "schedule.b",
                )?,
            },
            Some(_) => {
                return Err(ConfigError::Type {
                    key: "schedule.kind".into(),
                    expected: "\"decreasing\" or \"constant\"",
                })
            }
        };
        // Fast steps blend old and new Q values, so they must stay in (0, 1];
        // the slow step only needs to be positive.
        let (fast, slow, fast_key, slow_key) = match schedule {
            ScheduleSpec::Decreasing {
                fast_gain,
                slow_gain,
            } => (fast_gain, slow_gain, "schedule.fast_gain", "schedule.slow_gain"),
            ScheduleSpec::Constant { a, b } => (a, b, "schedule.a", "schedule.b"),
        };
        if !(fast > 0.0 && fast <= 1.0) {
            return Err(ConfigError::Invalid(format!(
                "{fast_key} = {fast} outside (0, 1]"
            )));
        }
        if !(slow > 0.0) {
            return Err(ConfigError::Invalid(format!("{slow_key} = {slow} must be positive")));
        }

        let n_arms = root
            .get("n_arms")
            .map(|v| usize_field(v, "n_arms"))
            .transpose()?;
        let budget = root
            .get("budget")
            .map(|v| usize_field(v, "budget"))
            .transpose()?;

        Ok(Self {
            model,
            horizon,
            seeds,
            cadence,
            baselines,
            epsilon,
            mode,
            schedule,
            n_arms,
            budget,
        })
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        Self::from_value(&toml::from_str(text)?)
    }

    /// Model path resolved relative to the experiment file's directory.
    pub fn resolve_model_path(&self, config_path: &Path) -> PathBuf {
        let p = Path::new(&self.model);
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            config_path
                .parent()
                .unwrap_or_else(|| Path::new("."))
                .join(p)
        }
    }
}

/// Applies one `key.path=value` override to a parsed TOML tree, creating
/// intermediate tables as needed. The value is itself parsed as TOML (so
/// `seeds=[1,2]` and `policy.epsilon=0.2` both work); values that fail to
/// parse are taken as strings, which keeps fraction syntax (`p0.0.1=1/2`
/// would not parse) usable as `"1/2"`.
pub fn apply_override(root: &mut Value, spec: &str) -> Result<(), ConfigError> {
    let (key, raw) = spec
        .split_once('=')
        .ok_or_else(|| ConfigError::BadOverride(spec.to_string()))?;
    let key = key.trim();
    if key.is_empty() {
        return Err(ConfigError::BadOverride(spec.to_string()));
    }
    let value = parse_scalar(raw.trim());

    let mut cursor = root;
    let parts: Vec<&str> = key.split('.').collect();
    for part in &parts[..parts.len() - 1] {
        let table = cursor.as_table_mut().ok_or_else(|| {
            ConfigError::Invalid(format!("override `{key}`: `{part}` is not a table"))
        })?;
        cursor = table
            .entry(part.to_string())
            .or_insert_with(|| Value::Table(Default::default()));
    }
    let last = parts[parts.len() - 1];
    let table = cursor.as_table_mut().ok_or_else(|| {
        ConfigError::Invalid(format!("override `{key}`: parent is not a table"))
    })?;
    table.insert(last.to_string(), value);
    Ok(())
}

fn parse_scalar(raw: &str) -> Value {
    let doc = format!("v = {raw}");
    match doc.parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").unwrap_or(Value::String(raw.to_string())),
        Err(_) => Value::String(raw.to_string()),
    }
}

/// Canonical text form of a TOML tree: keys sorted, no insignificant
/// whitespace. Input to the config hash so key order in the file does not
/// change the hash.
pub fn canonical_string(v: &Value) -> String {
    let mut out = String::new();
    write_canonical(v, &mut out);
    out
}

fn write_canonical(v: &Value, out: &mut String) {
    match v {
        Value::String(s) => out.push_str(&format!("{s:?}")),
        Value::Integer(i) => out.push_str(&i.to_string()),
        Value::Float(f) => out.push_str(&format!("{:?}", f)),
        Value::Boolean(b) => out.push_str(&b.to_string()),
        Value::Datetime(d) => out.push_str(&d.to_string()),
        Value::Array(a) => {
            out.push('[');
            for (i, x) in a.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                write_canonical(x, out);
            }
            out.push(']');
        }
        Value::Table(t) => {
            let mut keys: Vec<&String> = t.keys().collect();
            keys.sort();
            out.push('{');
            for (i, k) in keys.into_iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                out.push_str(&format!("{k:?}:"));
                write_canonical(&t[k], out);
            }
            out.push('}');
        }
    }
}

/// Hash identifying an experiment: canonical experiment tree (after
/// overrides) plus the canonical model tree it references.
pub fn config_hash(experiment: &Value, model: &Value) -> String {
    let mut h = Sha256::new();
    h.update(canonical_string(experiment).as_bytes());
    h.update([0u8]);
    h.update(canonical_string(model).as_bytes());
    let digest = h.finalize();
    let mut s = String::with_capacity(64);
    for b in digest {
        s.push_str(&format!("{b:02x}"));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    const CIRCULANT_TOML: &str = r#"
n_arms = 100
budget = 20
d = 4
p0 = [["1/2", 0, 0, "1/2"], ["1/2", "1/2", 0, 0], [0, "1/2", "1/2", 0], [0, 0, "1/2", "1/2"]]
p1 = [["1/2", "1/2", 0, 0], [0, "1/2", "1/2", 0], [0, 0, "1/2", "1/2"], ["1/2", 0, 0, "1/2"]]
r0 = [-1, 0, 0, 1]
r1 = [-1, 0, 0, 1]
"#;

    #[test]
    fn parses_fractions_and_shape() {
        let spec = ModelSpec::parse(CIRCULANT_TOML).unwrap();
        assert_eq!(spec.classes.len(), 1);
        let m = spec.primary_class();
        assert_eq!(m.d(), 4);
        assert_eq!(m.transition_prob(false, 0, 3), 0.5);
        assert_eq!(m.transition_prob(true, 0, 1), 0.5);
        let inst = spec.instance(None, None).unwrap();
        assert_eq!(inst.n_arms(), 100);
        assert_eq!(inst.budget(), 20);
    }

    #[test]
    fn bad_row_sum_names_the_row() {
        let text = CIRCULANT_TOML.replace(r#"[0, "1/2", "1/2", 0], [0, 0,"#, r#"[0, "1/2", 0.4, 0], [0, 0,"#);
        let err = ModelSpec::parse(&text).unwrap_err();
        match err {
            ConfigError::Model(ModelError::RowSum { matrix, row, .. }) => {
                assert_eq!(matrix, "p0");
                assert_eq!(row, 3);
            }
            other => panic!("unexpected: {other}"),
        }
    }

    #[test]
    fn rejects_bad_fraction() {
        let text = CIRCULANT_TOML.replace(r#""1/2", 0, 0, "1/2""#, r#""1/x", 0, 0, "1/2""#);
        assert!(matches!(
            ModelSpec::parse(&text).unwrap_err(),
            ConfigError::BadNumber { .. }
        ));
    }

    #[test]
    fn multi_class_mapping() {
        let text = r#"
n_arms = 3
budget = 1
classes = [1, 2, 1]
[[class]]
d = 1
p0 = [[1]]
p1 = [[1]]
r0 = [0]
r1 = [1]
[[class]]
d = 2
p0 = [[1, 0], [0, 1]]
p1 = [["1/2", "1/2"], ["1/2", "1/2"]]
r0 = [0, 0]
r1 = [1, 2]
"#;
        let spec = ModelSpec::parse(text).unwrap();
        assert_eq!(spec.classes.len(), 2);
        let inst = spec.instance(None, None).unwrap();
        assert_eq!(inst.class_of(0), 0);
        assert_eq!(inst.class_of(1), 1);
        assert_eq!(inst.model_of(1).d(), 2);
    }

    const EXPERIMENT_TOML: &str = r#"
model = "models/circulant.toml"
horizon = 1000
seeds = [1, 2, 3]
cadence = 10
baselines = ["exact-index"]

[policy]
epsilon = 0.1

[schedule]
kind = "decreasing"
fast_gain = 1.0
slow_gain = 0.5
"#;

    #[test]
    fn parses_experiment() {
        let cfg = ExperimentConfig::parse(EXPERIMENT_TOML).unwrap();
        assert_eq!(cfg.horizon, 1000);
        assert_eq!(cfg.seeds, vec![1, 2, 3]);
        assert_eq!(cfg.cadence, 10);
        assert_eq!(cfg.baselines, vec![BaselineKind::ExactIndex]);
        assert_eq!(cfg.epsilon, 0.1);
        assert_eq!(cfg.mode, PolicyMode::LearnedIndices);
        assert_eq!(
            cfg.schedule,
            ScheduleSpec::Decreasing {
                fast_gain: 1.0,
                slow_gain: 0.5
            }
        );
    }

    #[test]
    fn rejects_epsilon_one() {
        let text = EXPERIMENT_TOML.replace("epsilon = 0.1", "epsilon = 1.0");
        assert!(matches!(
            ExperimentConfig::parse(&text).unwrap_err(),
            ConfigError::Invalid(_)
        ));
    }

    #[test]
    fn rejects_fast_gain_above_one() {
        let text = EXPERIMENT_TOML.replace("fast_gain = 1.0", "fast_gain = 2.0");
        match ExperimentConfig::parse(&text).unwrap_err() {
            ConfigError::Invalid(msg) => assert!(msg.contains("fast_gain")),
            other => panic!("unexpected: {other}"),
        }
    }

    #[test]
    fn rejects_empty_seeds() {
        let text = EXPERIMENT_TOML.replace("seeds = [1, 2, 3]", "seeds = []");
        assert!(ExperimentConfig::parse(&text).is_err());
    }

    #[test]
    fn override_sets_nested_value() {
        let mut root: Value = toml::from_str(EXPERIMENT_TOML).unwrap();
        apply_override(&mut root, "policy.epsilon=0.25").unwrap();
        apply_override(&mut root, "seeds=[7]").unwrap();
        let cfg = ExperimentConfig::from_value(&root).unwrap();
        assert_eq!(cfg.epsilon, 0.25);
        assert_eq!(cfg.seeds, vec![7]);
    }

    #[test]
    fn hash_ignores_key_order_but_not_values() {
        let a: Value = toml::from_str("x = 1\ny = 2").unwrap();
        let b: Value = toml::from_str("y = 2\nx = 1").unwrap();
        let c: Value = toml::from_str("x = 1\ny = 3").unwrap();
        let m: Value = toml::from_str("d = 1").unwrap();
        assert_eq!(config_hash(&a, &m), config_hash(&b, &m));
        assert_ne!(config_hash(&a, &m), config_hash(&c, &m));
    }
}
