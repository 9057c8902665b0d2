//! Configuration files: schema validation, deserialization and model
//! construction.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::OnceLock;

use indexmap::IndexMap;
use jsonschema::JSONSchema;
use serde::Deserialize;
use serde_json::Value;

use crate::affgebroid::{AffgebroidParts, AffgebroidStructure};
use crate::algebroid::AlgebroidStructure;
use crate::dynamics::{Lagrangian, DEFAULT_MAX_COND};
use crate::error::Error;
use crate::expr::{parse, Expression};
use crate::models::{self, InitialState, ModelSpec, Params};
use crate::ode::{Method, Span};
use crate::structure::Structure;

/// The published configuration schema.
pub const SCHEMA: &str = include_str!("../../schema/config.schema.json");

pub const SCHEMA_VERSION: u64 = 1;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read { path: String, source: std::io::Error },
    #[error("invalid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("schema violation at `{pointer}`: {message}")]
    Schema { pointer: String, message: String },
    #[error("{0}")]
    Model(#[from] Error),
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Deserialize)]
pub struct Config {
    pub schema: u64,
    pub model: ModelConfig,
    pub lagrangian: Option<String>,
    pub simulation: Option<SimulationConfig>,
    #[serde(default)]
    pub verify: VerifyConfig,
    #[serde(default)]
    pub output: OutputConfig,
    pub transform: Option<TransformConfig>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum ModelConfig {
    Builtin {
        builtin: String,
        #[serde(default)]
        params: Params,
    },
    Inline(InlineModel),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum InlineModel {
    Algebroid {
        name: Option<String>,
        n: usize,
        m: usize,
        #[serde(default)]
        parameters: BTreeMap<String, f64>,
        rho: Vec<Vec<String>>,
        sigma: Vec<Vec<String>>,
        c: Vec<Vec<Vec<String>>>,
    },
    Affgebroid {
        name: Option<String>,
        n: usize,
        m: usize,
        #[serde(default)]
        parameters: BTreeMap<String, f64>,
        rho0: Option<Vec<String>>,
        rho: Option<Vec<Vec<String>>>,
        cm0: Option<Vec<String>>,
        ck0: Option<Vec<Vec<String>>>,
        cm: Option<Vec<Vec<String>>>,
        ck: Option<Vec<Vec<Vec<String>>>>,
        sigma: Option<Vec<Vec<String>>>,
    },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum Initial {
    One(StateConfig),
    Many(Vec<StateConfig>),
}

#[derive(Debug, Clone, Default, Deserialize)]
pub struct StateConfig {
    pub x: Option<Vec<f64>>,
    pub y: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Deserialize)]
pub struct SimulationConfig {
    pub t0: f64,
    pub t1: f64,
    pub dt: f64,
    #[serde(default)]
    pub method: Method,
    pub max_cond: Option<f64>,
    pub initial: Option<Initial>,
}

#[derive(Debug, Clone, Deserialize)]
pub struct VerifyConfig {
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_pairs")]
    pub bracket_pairs: usize,
    #[serde(default = "default_equivalence_tol")]
    pub equivalence_tol: f64,
}

fn default_samples() -> usize {
    100
}

fn default_tol() -> f64 {
    1e-8
}

fn default_pairs() -> usize {
    10
}

fn default_equivalence_tol() -> f64 {
    1e-6
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            samples: default_samples(),
            seed: 0,
            tol: default_tol(),
            bracket_pairs: default_pairs(),
            equivalence_tol: default_equivalence_tol(),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, Default, Deserialize)]
pub struct OutputConfig {
    #[serde(default)]
    pub format: Format,
    pub path: Option<String>,
    pub monitors: Option<IndexMap<String, String>>,
}

#[derive(Debug, Clone, Deserialize)]
pub struct TransformConfig {
    pub x: Vec<f64>,
    pub from: Vec<f64>,
    pub to: Vec<f64>,
    #[serde(default = "default_points")]
    pub points: usize,
    pub y_guess: Option<Vec<f64>>,
}

fn default_points() -> usize {
    11
}

fn compiled_schema() -> &'static JSONSchema {
    static SCHEMA_CELL: OnceLock<JSONSchema> = OnceLock::new();
    SCHEMA_CELL.get_or_init(|| {
        let value: Value = serde_json::from_str(SCHEMA).expect("shipped schema is valid JSON");
        JSONSchema::compile(&value).expect("shipped schema compiles")
    })
}

/// Checks `value` against the configuration schema.
pub fn validate(value: &Value) -> Result<(), ConfigError> {
    if let Err(mut errors) = compiled_schema().validate(value) {
        let first = errors.next().expect("failed validation has an error");
        return Err(ConfigError::Schema {
            pointer: first.instance_path.to_string(),
            message: first.to_string(),
        });
    }
    Ok(())
}

impl Config {
    pub fn from_value(value: Value) -> Result<Self, ConfigError> {
        validate(&value)?;
        Ok(serde_json::from_value(value)?)
    }

    pub fn parse_str(text: &str) -> Result<Self, ConfigError> {
        Self::from_value(serde_json::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| ConfigError::Read { path: path.display().to_string(), source })?;
        Self::parse_str(&text)
    }

    pub fn span(&self) -> Option<Span> {
        self.simulation.as_ref().map(|s| Span::new(s.t0, s.t1, s.dt))
    }

    pub fn max_cond(&self) -> f64 {
        self.simulation.as_ref().and_then(|s| s.max_cond).unwrap_or(DEFAULT_MAX_COND)
    }
}

/// A configured model ready to run.
#[derive(Debug, Clone)]
pub struct Model {
    pub name: String,
    pub structure: Structure,
    pub lagrangian: Option<Lagrangian>,
    pub initial: Option<InitialState>,
    pub monitors: IndexMap<String, Expression>,
}

fn parse_all(what: &str, items: &[String], bind: &BTreeMap<String, f64>) -> Result<Vec<Expression>, ConfigError> {
    items
        .iter()
        .map(|s| parse(s).map(|e| e.bind(bind)).map_err(|e| ConfigError::Invalid(format!("{what}: `{s}`: {e}"))))
        .collect()
}

fn parse_matrix(what: &str, rows: &[Vec<String>], bind: &BTreeMap<String, f64>) -> Result<Vec<Vec<Expression>>, ConfigError> {
    rows.iter().map(|r| parse_all(what, r, bind)).collect()
}

fn parse_cube(what: &str, cube: &[Vec<Vec<String>>], bind: &BTreeMap<String, f64>) -> Result<Vec<Vec<Vec<Expression>>>, ConfigError> {
    cube.iter().map(|m| parse_matrix(what, m, bind)).collect()
}

fn inline_structure(model: &InlineModel) -> Result<(String, Structure), ConfigError> {
    match model {
        InlineModel::Algebroid { name, n, m, parameters, rho, sigma, c } => {
            let a = AlgebroidStructure::new(
                *n,
                *m,
                parse_matrix("rho", rho, parameters)?,
                parse_matrix("sigma", sigma, parameters)?,
                parse_cube("c", c, parameters)?,
            )?;
            Ok((name.clone().unwrap_or_else(|| "inline".into()), a.into()))
        }
        InlineModel::Affgebroid { name, n, m, parameters, rho0, rho, cm0, ck0, cm, ck, sigma } => {
            let mut parts = AffgebroidParts::zero(*n, *m);
            let p = parameters;
            if let Some(v) = rho0 {
                parts.rho0 = parse_all("rho0", v, p)?;
            }
            if let Some(v) = rho {
                parts.rho = parse_matrix("rho", v, p)?;
            }
            if let Some(v) = cm0 {
                parts.cm0 = parse_all("cm0", v, p)?;
            }
            if let Some(v) = ck0 {
                parts.ck0 = parse_matrix("ck0", v, p)?;
            }
            if let Some(v) = cm {
                parts.cm = parse_matrix("cm", v, p)?;
            }
            if let Some(v) = ck {
                parts.ck = parse_cube("ck", v, p)?;
            }
            if let Some(v) = sigma {
                parts.sigma = parse_matrix("sigma", v, p)?;
            }
            let s = AffgebroidStructure::new(parts)?;
            Ok((name.clone().unwrap_or_else(|| "inline".into()), s.into()))
        }
    }
}

fn inline_parameters(model: &InlineModel) -> &BTreeMap<String, f64> {
    match model {
        InlineModel::Algebroid { parameters, .. } | InlineModel::Affgebroid { parameters, .. } => parameters,
    }
}

/// Builds the model, the Lagrangian override and the monitors.
pub fn build_model(cfg: &Config) -> Result<Model, ConfigError> {
    if cfg.schema != SCHEMA_VERSION {
        return Err(ConfigError::Invalid(format!("unsupported schema version {}", cfg.schema)));
    }
    let (mut model, bind) = match &cfg.model {
        ModelConfig::Builtin { builtin, params } => {
            let ModelSpec { name, structure, lagrangian, initial, monitors } = models::builtin(builtin, params)?;
            let bind: BTreeMap<String, f64> = params
                .iter()
                .filter_map(|(k, v)| match v {
                    models::ParamValue::Number(x) => Some((k.clone(), *x)),
                    models::ParamValue::Expr(_) => None,
                })
                .collect();
            let m = Model { name, structure, lagrangian: Some(lagrangian), initial: Some(initial), monitors };
            (m, bind)
        }
        ModelConfig::Inline(inline) => {
            let (name, structure) = inline_structure(inline)?;
            let m = Model { name, structure, lagrangian: None, initial: None, monitors: IndexMap::new() };
            (m, inline_parameters(inline).clone())
        }
    };
    if let Some(text) = &cfg.lagrangian {
        let e = parse(text).map_err(|e| ConfigError::Invalid(format!("lagrangian: `{text}`: {e}")))?;
        model.lagrangian = Some(Lagrangian::for_structure(e.bind(&bind), &model.structure)?);
    }
    if let Some(monitors) = &cfg.output.monitors {
        model.monitors = monitors
            .iter()
            .map(|(k, v)| {
                let e = parse(v).map_err(|e| ConfigError::Invalid(format!("monitor `{k}`: `{v}`: {e}")))?;
                Ok((k.clone(), e.bind(&bind)))
            })
            .collect::<Result<_, ConfigError>>()?;
    }
    Ok(model)
}

/// Initial states from the simulation section, falling back to the model
/// defaults for missing parts.
pub fn initial_states(cfg: &Config, model: &Model) -> Result<Vec<InitialState>, ConfigError> {
    let (n, d) = (model.structure.n(), model.structure.fiber_dim());
    let fallback = model.initial.clone();
    let given: Vec<StateConfig> = match cfg.simulation.as_ref().and_then(|s| s.initial.clone()) {
        None => vec![StateConfig::default()],
        Some(Initial::One(s)) => vec![s],
        Some(Initial::Many(v)) => v,
    };
    given
        .into_iter()
        .map(|s| {
            let x = s.x.or_else(|| fallback.as_ref().map(|f| f.x.clone())).unwrap_or_else(|| vec![0.0; n]);
            let y = s.y.or_else(|| fallback.as_ref().map(|f| f.y.clone()));
            let y = y.ok_or_else(|| ConfigError::Invalid("simulation.initial.y is required".into()))?;
            if x.len() != n || y.len() != d {
                return Err(ConfigError::Invalid(format!(
                    "initial state has |x| = {}, |y| = {}; expected {n} and {d}",
                    x.len(),
                    y.len()
                )));
            }
            Ok(InitialState { x, y })
        })
        .collect()
}
