//! JSON instance files.
//!
//! ```json
//! {
//!   "schema_version": 1,
//!   "states": ["w0"],
//!   "signals": [["a", "b"], ["a", "b"]],
//!   "distributions": [[[[0.4, 0.1], [0.1, 0.4]]]],
//!   "reports": ["identity", "identity"],
//!   "task_count": 2
//! }
//! ```
//!
//! Each distribution is a nested array with axes `(ω, s_1, …, s_n)`. Reports
//! are `"identity"`, `"posterior"`, `{"linear": G}` or `{"table": values}`
//! where `values[d][s]` is a label or a vector. A single report entry
//! applies to every agent. A `generator` block may replace `distributions`.

use std::fs;
use std::path::Path;

use peerpred_core::model::{ConditionalIndependent, ReportFunction, ReportValue};
use peerpred_core::{Distribution, Instance, Mat};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::generators::{self, GeneratorSpec};
use crate::CliError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    pub schema_version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub states: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub signals: Option<Vec<Vec<String>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub distributions: Option<Vec<Value>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub factorizations: Option<Vec<Option<FactorizationSpec>>>,
    pub reports: ReportsField,
    pub task_count: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generator: Option<GeneratorSpec>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ReportsField {
    PerAgent(Vec<ReportSpec>),
    All(ReportSpec),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportSpec {
    Identity,
    Posterior,
    Linear(Vec<Vec<f64>>),
    Table(Vec<Vec<TableValue>>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TableValue {
    Label(String),
    Vector(Vec<f64>),
}

/// `likelihoods[i][s][ω] = μ(s_i = s | ω)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FactorizationSpec {
    pub prior: Vec<f64>,
    pub likelihoods: Vec<Vec<Vec<f64>>>,
}

impl FactorizationSpec {
    pub fn from_core(ci: &ConditionalIndependent<f64>) -> Self {
        Self { prior: ci.prior().to_vec(), likelihoods: ci.likelihoods().iter().map(Mat::to_rows).collect() }
    }

    pub fn to_core(&self) -> peerpred_core::Result<ConditionalIndependent<f64>> {
        let likelihoods = self.likelihoods.iter().map(|rows| Mat::from_rows(rows)).collect();
        ConditionalIndependent::new(self.prior.clone(), likelihoods)
    }
}

/// A parsed and validated instance with the report functions it was built from.
#[derive(Clone, Debug)]
pub struct Loaded {
    pub instance: Instance,
    pub functions: Vec<ReportFunction<f64>>,
    pub file: InstanceFile,
}

pub fn parse_instance(path: &Path) -> Result<Loaded, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    parse_instance_str(&text)
}

pub fn parse_instance_str(text: &str) -> Result<Loaded, CliError> {
    let file: InstanceFile = serde_json::from_str(text).map_err(|e| CliError::Parse(e.to_string()))?;
    build(file)
}

fn validation(e: impl std::fmt::Display) -> CliError {
    CliError::Validation(e.to_string())
}

fn build(file: InstanceFile) -> Result<Loaded, CliError> {
    if file.schema_version != SCHEMA_VERSION {
        return Err(CliError::Parse(format!(
            "unsupported schema_version {}, expected {SCHEMA_VERSION}",
            file.schema_version
        )));
    }
    let (distributions, factorizations) = match (&file.distributions, &file.generator) {
        (Some(values), None) => {
            let (states, signals) = labels(&file)?;
            let dists = values
                .iter()
                .enumerate()
                .map(|(d, v)| {
                    let mass = flatten(v, states.len(), &signals)
                        .map_err(|e| CliError::Parse(format!("distribution {d}: {e}")))?;
                    Distribution::new(states.clone(), signals.clone(), mass)
                        .map_err(|e| CliError::Validation(format!("distribution {d}: {e}")))
                })
                .collect::<Result<Vec<_>, _>>()?;
            let facts = match &file.factorizations {
                None => vec![None; dists.len()],
                Some(f) if f.len() != dists.len() => {
                    return Err(CliError::Parse("factorizations must have one entry per distribution".into()))
                }
                Some(f) => f
                    .iter()
                    .enumerate()
                    .map(|(d, spec)| {
                        spec.as_ref()
                            .map(|s| s.to_core().map_err(|e| CliError::Validation(format!("factorization {d}: {e}"))))
                            .transpose()
                    })
                    .collect::<Result<Vec<_>, _>>()?,
            };
            (dists, facts)
        }
        (None, Some(gen)) => {
            if file.factorizations.is_some() {
                return Err(CliError::Parse("factorizations cannot accompany a generator block".into()));
            }
            let generated = generators::expand(gen)?;
            let relabeled = generated
                .into_iter()
                .map(|(mu, ci)| relabel(&file, mu).map(|mu| (mu, ci)))
                .collect::<Result<Vec<_>, _>>()?;
            relabeled.into_iter().unzip()
        }
        (Some(_), Some(_)) => return Err(CliError::Parse("give either distributions or a generator, not both".into())),
        (None, None) => return Err(CliError::Parse("the file needs distributions or a generator".into())),
    };
    let n = distributions[0].agent_count();
    let specs: Vec<ReportSpec> = match &file.reports {
        ReportsField::All(spec) => vec![spec.clone(); n],
        ReportsField::PerAgent(v) => v.clone(),
    };
    if specs.len() != n {
        return Err(CliError::Parse(format!("{} report entries for {n} agents", specs.len())));
    }
    let functions: Vec<ReportFunction<f64>> = specs.iter().map(to_function).collect::<Result<_, _>>()?;
    let mut instance = Instance::new(distributions, functions.clone(), file.task_count).map_err(validation)?;
    if factorizations.iter().any(Option::is_some) {
        instance = instance.with_factorizations(factorizations).map_err(validation)?;
    }
    instance.name = file.name.clone();
    Ok(Loaded { instance, functions, file })
}

fn labels(file: &InstanceFile) -> Result<(Vec<String>, Vec<Vec<String>>), CliError> {
    match (&file.states, &file.signals) {
        (Some(s), Some(g)) => Ok((s.clone(), g.clone())),
        _ => Err(CliError::Parse("explicit distributions need states and signals".into())),
    }
}

fn relabel(file: &InstanceFile, mu: Distribution) -> Result<Distribution, CliError> {
    let states = file.states.clone().unwrap_or_else(|| mu.states().to_vec());
    let signals = file.signals.clone().unwrap_or_else(|| mu.signals().to_vec());
    Distribution::new(states, signals, mu.mass().to_vec())
        .map_err(|e| CliError::Validation(format!("labels do not fit the generated distributions: {e}")))
}

/// Row-major mass from a nested array with dimensions `(|Ω|, |S_1|, …)`.
fn flatten(value: &Value, states: usize, signals: &[Vec<String>]) -> Result<Vec<f64>, String> {
    let dims: Vec<usize> = std::iter::once(states).chain(signals.iter().map(Vec::len)).collect();
    let mut out = Vec::new();
    fn walk(v: &Value, dims: &[usize], depth: usize, out: &mut Vec<f64>) -> Result<(), String> {
        if depth == dims.len() {
            return v.as_f64().map(|x| out.push(x)).ok_or_else(|| format!("expected a number, found {v}"));
        }
        let arr = v.as_array().ok_or_else(|| format!("expected an array at depth {depth}"))?;
        if arr.len() != dims[depth] {
            return Err(format!("axis {depth} has length {}, expected {}", arr.len(), dims[depth]));
        }
        arr.iter().try_for_each(|x| walk(x, dims, depth + 1, out))
    }
    walk(value, &dims, 0, &mut out)?;
    Ok(out)
}

/// Nested-array form of a distribution's mass.
pub fn nest(mu: &Distribution) -> Value {
    let dims: Vec<usize> = std::iter::once(mu.state_count()).chain(mu.signal_counts()).collect();
    fn build(mass: &[f64], dims: &[usize]) -> Value {
        if dims.is_empty() {
            return Value::from(mass[0]);
        }
        let stride = mass.len() / dims[0];
        Value::Array((0..dims[0]).map(|k| build(&mass[k * stride..(k + 1) * stride], &dims[1..])).collect())
    }
    build(mu.mass(), &dims)
}

fn to_function(spec: &ReportSpec) -> Result<ReportFunction<f64>, CliError> {
    Ok(match spec {
        ReportSpec::Identity => ReportFunction::Identity,
        ReportSpec::Posterior => ReportFunction::Posterior,
        ReportSpec::Linear(rows) => {
            if rows.is_empty() || rows.iter().any(|r| r.len() != rows[0].len()) {
                return Err(CliError::Parse("linear report matrix must be rectangular and nonempty".into()));
            }
            ReportFunction::Linear(Mat::from_rows(rows))
        }
        ReportSpec::Table(values) => ReportFunction::Table(
            values
                .iter()
                .map(|row| {
                    row.iter()
                        .map(|v| match v {
                            TableValue::Label(s) => ReportValue::Symbol(s.clone()),
                            TableValue::Vector(x) => ReportValue::Vector(x.clone()),
                        })
                        .collect()
                })
                .collect(),
        ),
    })
}

pub fn report_spec(f: &ReportFunction<f64>) -> ReportSpec {
    match f {
        ReportFunction::Identity => ReportSpec::Identity,
        ReportFunction::Posterior => ReportSpec::Posterior,
        ReportFunction::Linear(g) => ReportSpec::Linear(g.to_rows()),
        ReportFunction::Table(values) => ReportSpec::Table(
            values
                .iter()
                .map(|row| {
                    row.iter()
                        .map(|v| match v {
                            ReportValue::Symbol(s) => TableValue::Label(s.clone()),
                            ReportValue::Vector(x) => TableValue::Vector(x.clone()),
                        })
                        .collect()
                })
                .collect(),
        ),
    }
}

/// An explicit-table file describing `instance`.
pub fn to_file(instance: &Instance, functions: &[ReportFunction<f64>]) -> InstanceFile {
    let first = instance.distribution(0);
    let facts = instance.factorizations();
    InstanceFile {
        schema_version: SCHEMA_VERSION,
        name: instance.name.clone(),
        states: Some(first.states().to_vec()),
        signals: Some(first.signals().to_vec()),
        distributions: Some(instance.distributions().iter().map(nest).collect()),
        factorizations: facts
            .iter()
            .any(Option::is_some)
            .then(|| facts.iter().map(|f| f.as_ref().map(FactorizationSpec::from_core)).collect()),
        reports: ReportsField::PerAgent(functions.iter().map(report_spec).collect()),
        task_count: instance.task_count(),
        generator: None,
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).map_err(|e| CliError::Io(e.to_string()))?;
    fs::write(path, text + "\n").map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}
