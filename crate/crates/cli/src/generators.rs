//! Seeded instance generators.

use peerpred_core::model::{
    conditional_independent_product, sign_pattern, two_agent_table, ConditionalIndependent, DeltaMatrix, SignMatrix,
};
use peerpred_core::{Distribution, Mat};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution as _, Gamma};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::CliError;

const MAX_ATTEMPTS: usize = 200_000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorSpec {
    pub kind: GeneratorKind,
    #[serde(default)]
    pub params: Value,
    pub seed: u64,
    pub count: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GeneratorKind {
    SignPattern,
    ConditionalIndependent,
    Dirichlet,
}

/// Two-agent, single-state tables with `Sign(Δ) = signs`.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SignPatternParams {
    pub signs: SignMatrix,
}

/// `μ(ω, s) = prior(ω) ∏ L_i(s_i | ω)` with random column-stochastic `L_i`.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConditionalParams {
    pub states: usize,
    pub signals: Vec<usize>,
    /// Fixed prior; drawn per distribution when absent.
    #[serde(default)]
    pub prior: Option<Vec<f64>>,
}

/// A joint tensor drawn from a symmetric Dirichlet.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DirichletParams {
    pub states: usize,
    pub signals: Vec<usize>,
    #[serde(default = "one")]
    pub alpha: f64,
}

fn one() -> f64 {
    1.0
}

pub type Generated = Vec<(Distribution, Option<ConditionalIndependent<f64>>)>;

fn params<T: for<'de> Deserialize<'de>>(spec: &GeneratorSpec) -> Result<T, CliError> {
    serde_json::from_value(spec.params.clone()).map_err(|e| CliError::Parse(format!("generator params: {e}")))
}

pub fn expand(spec: &GeneratorSpec) -> Result<Generated, CliError> {
    if spec.count == 0 {
        return Err(CliError::Validation("generator count must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    match spec.kind {
        GeneratorKind::SignPattern => {
            let p: SignPatternParams = params(spec)?;
            (0..spec.count).map(|_| sign_pattern_sample(&p.signs, &mut rng).map(|mu| (mu, None))).collect()
        }
        GeneratorKind::ConditionalIndependent => {
            let p: ConditionalParams = params(spec)?;
            (0..spec.count).map(|_| conditional_sample(&p, &mut rng).map(|(mu, ci)| (mu, Some(ci)))).collect()
        }
        GeneratorKind::Dirichlet => {
            let p: DirichletParams = params(spec)?;
            (0..spec.count).map(|_| dirichlet_sample(&p, &mut rng).map(|mu| (mu, None))).collect()
        }
    }
}

/// Rejection sampler that favours positive-sign cells and raises the bias
/// while candidates keep missing the pattern.
pub fn sign_pattern_sample(signs: &SignMatrix, rng: &mut impl Rng) -> Result<Distribution, CliError> {
    let rows = signs.len();
    let cols = signs.first().map_or(0, Vec::len);
    if rows == 0 || cols == 0 || signs.iter().any(|r| r.len() != cols) {
        return Err(CliError::Validation("sign pattern must be a nonempty rectangle".into()));
    }
    if signs.iter().flatten().any(|s| !matches!(s, 1 | -1)) {
        return Err(CliError::Validation("sign pattern entries must be +1 or -1".into()));
    }
    let mut bias = 3.0;
    for attempt in 0..MAX_ATTEMPTS {
        if attempt > 0 && attempt % 5000 == 0 {
            bias *= 2.0;
        }
        let weights: Vec<Vec<f64>> = signs
            .iter()
            .map(|r| r.iter().map(|s| rng.random_range(0.05..1.0) * if *s > 0 { bias } else { 1.0 }).collect())
            .collect();
        let total: f64 = weights.iter().flatten().sum();
        let table: Vec<Vec<f64>> = weights.iter().map(|r| r.iter().map(|w| w / total).collect()).collect();
        let mu = two_agent_table(&table).map_err(|e| CliError::Validation(e.to_string()))?;
        let delta = DeltaMatrix::from_joint(&mu.pair_joint(0, 1));
        if sign_pattern(&delta.values) == *signs {
            return Ok(mu);
        }
    }
    Err(CliError::Validation(format!("no distribution with sign pattern {signs:?} found in {MAX_ATTEMPTS} draws")))
}

fn simplex_point(k: usize, rng: &mut impl Rng) -> Vec<f64> {
    let raw: Vec<f64> = (0..k).map(|_| rng.random_range(0.05..1.0)).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|x| x / total).collect()
}

pub fn conditional_sample(
    p: &ConditionalParams,
    rng: &mut impl Rng,
) -> Result<(Distribution, ConditionalIndependent<f64>), CliError> {
    if p.states == 0 || p.signals.is_empty() || p.signals.contains(&0) {
        return Err(CliError::Validation("states and signal counts must be positive".into()));
    }
    let prior = match &p.prior {
        Some(prior) if prior.len() != p.states => {
            return Err(CliError::Validation(format!("prior has {} entries for {} states", prior.len(), p.states)))
        }
        Some(prior) => prior.clone(),
        None => simplex_point(p.states, rng),
    };
    let likelihoods = p
        .signals
        .iter()
        .map(|&n| {
            let columns: Vec<Vec<f64>> = (0..p.states).map(|_| simplex_point(n, rng)).collect();
            Mat::from_fn(n, p.states, |s, w| columns[w][s])
        })
        .collect();
    conditional_independent_product(prior, likelihoods).map_err(|e| CliError::Validation(e.to_string()))
}

pub fn dirichlet_sample(p: &DirichletParams, rng: &mut impl Rng) -> Result<Distribution, CliError> {
    if p.states == 0 || p.signals.is_empty() || p.signals.contains(&0) {
        return Err(CliError::Validation("states and signal counts must be positive".into()));
    }
    let gamma = Gamma::new(p.alpha, 1.0).map_err(|e| CliError::Validation(format!("alpha: {e}")))?;
    let cells = p.states * p.signals.iter().product::<usize>();
    let weights: Vec<f64> = (0..cells).map(|_| gamma.sample(rng)).collect();
    Distribution::from_weights_unlabeled(p.states, &p.signals, weights).map_err(|e| CliError::Validation(e.to_string()))
}
