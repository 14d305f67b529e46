//! Necessary-condition checks, counterexample generators and the robustness ball.

mod ball;
mod counterexample;
mod permutation;
mod rank;
mod relevance;

use serde::Serialize;

use crate::error::Result;
use crate::mechanisms::LinearProperty;
use crate::model::{ProblemInstance, ReportFunction};
use crate::scalar::Scalar;

pub use ball::{ball_epsilon, sample_ball, BallEpsilon};
pub use counterexample::{
    gen_linear_counterexample, gen_rank_counterexample, LinearCounterexample, RankCounterexample,
};
pub use permutation::{
    check_permutation, check_permutation_with_limit, PermutationWitness, DEFAULT_MAX_PERMUTED_REPORTS,
};
pub use rank::{check_linear_property_rank, check_rank_posterior};
pub use relevance::{check_convex_separation, check_marginal_relevance, check_stochastic_relevance};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum CheckKind {
    StochasticRelevance,
    MarginalRelevance,
    ConvexSeparation,
    Permutation,
    RankPosterior,
    LinearPropertyRank,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Outcome {
    Pass,
    Violated,
}

/// One posterior `μ(r_{-i} | s_i)` and where it came from.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PosteriorSource<S> {
    pub distribution: usize,
    pub signal: usize,
    pub report: usize,
    pub posterior: Vec<S>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum CheckWitness<S> {
    /// Two posteriors with different truthful reports that coincide.
    Collision {
        agent: usize,
        bucket: usize,
        first: PosteriorSource<S>,
        second: PosteriorSource<S>,
    },
    /// Mixtures of two posterior sets meeting at `point`.
    ConvexCombination {
        agent: usize,
        bucket: usize,
        reports: (usize, usize),
        first: Vec<(PosteriorSource<S>, S)>,
        second: Vec<(PosteriorSource<S>, S)>,
        point: Vec<S>,
    },
    Permutation(PermutationWitness<S>),
    /// `P^μ_i` has rank below `|Ω|`; `null_vector` is in its kernel.
    RankDeficient {
        distribution: usize,
        agent: usize,
        rank: usize,
        null_vector: Vec<S>,
    },
    /// `[G; 1ᵀ]` has rank below `|Ω|`.
    LinearRank {
        agent: Option<usize>,
        rank: usize,
        null_vector: Vec<S>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckReport<S> {
    pub check: CheckKind,
    pub outcome: Outcome,
    pub witness: Option<CheckWitness<S>>,
}

impl<S> CheckReport<S> {
    pub(crate) fn from_witness(check: CheckKind, witness: Option<CheckWitness<S>>) -> Self {
        let outcome = if witness.is_some() { Outcome::Violated } else { Outcome::Pass };
        Self { check, outcome, witness }
    }

    pub fn passed(&self) -> bool {
        self.outcome == Outcome::Pass
    }
}

/// Runs every check that applies to `instance`. Rank checks run only when
/// factorizations are attached, linear-rank checks only for linear reports.
pub fn run_all_checks<S: Scalar>(
    instance: &ProblemInstance<S>,
    linear: &[Option<LinearProperty<S>>],
) -> Result<Vec<CheckReport<S>>> {
    let stochastic = check_stochastic_relevance(instance);
    let marginal = check_marginal_relevance(instance);
    assert!(
        !stochastic.passed() || marginal.passed(),
        "marginal relevance must hold whenever stochastic relevance holds"
    );
    let mut out = vec![stochastic, marginal, check_convex_separation(instance)?, check_permutation(instance)?];
    if instance.factorizations().iter().all(Option::is_some) {
        out.push(check_rank_posterior(instance)?);
    }
    for (agent, g) in linear.iter().enumerate() {
        if let Some(g) = g {
            let mut report = check_linear_property_rank(g, instance.state_count())?;
            if let Some(CheckWitness::LinearRank { agent: a, .. }) = &mut report.witness {
                *a = Some(agent);
            }
            out.push(report);
        }
    }
    Ok(out)
}

/// Linear properties used by each agent's report function.
pub fn linear_properties<S: Scalar>(functions: &[ReportFunction<S>]) -> Result<Vec<Option<LinearProperty<S>>>> {
    functions
        .iter()
        .map(|f| match f {
            ReportFunction::Linear(g) => LinearProperty::new(g.clone()).map(Some),
            _ => Ok(None),
        })
        .collect()
}
