//! LP synthesis of strictly truthful scoring mechanisms.

mod statistic;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lp::{LinearProgram, LpOutcome, Relation};
use crate::mechanisms::ScoringMechanism;
use crate::model::{marginal_buckets, Grouping, ProblemInstance};
use crate::scalar::{max_abs_diff, tolerance, Scalar};
use crate::tensor::tensor_power;
use crate::verifier::{verify_strict, Status, VerificationMode, VerifyOptions};

pub use crate::mechanisms::{extract_deh, extract_power_diagram};
pub use statistic::Statistic;

/// Default cap on LP variables per agent.
pub const DEFAULT_MAX_VARIABLES: usize = 4096;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LpStats {
    pub agent: usize,
    pub variables: usize,
    pub constraints: usize,
    pub iterations: usize,
    /// Optimal margin for this agent, infinite when no constraints exist.
    pub margin: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum SynthesisStatus<S> {
    Feasible {
        mechanism: ScoringMechanism<S>,
        margin: S,
    },
    /// The best margin of the weakest agent did not clear the threshold.
    Infeasible {
        agent: usize,
        best_margin: S,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SynthesisResult<S> {
    pub status: SynthesisStatus<S>,
    pub statistic: String,
    pub lp_stats: Vec<LpStats>,
}

impl<S> SynthesisResult<S> {
    pub fn is_feasible(&self) -> bool {
        matches!(self.status, SynthesisStatus::Feasible { .. })
    }
}

/// Synthesis over the full other-task history.
pub fn synthesize_scoring<S: Scalar>(instance: &ProblemInstance<S>) -> Result<SynthesisResult<S>> {
    synthesize_with_statistic(instance, &Statistic::identity(instance))
}

/// Synthesis over task-uniform payments `p(r, a, Y(b))`.
pub fn synthesize_with_statistic<S: Scalar>(
    instance: &ProblemInstance<S>,
    stat: &Statistic,
) -> Result<SynthesisResult<S>> {
    synthesize_with_limit(instance, stat, DEFAULT_MAX_VARIABLES)
}

struct AgentSolution<S> {
    /// `values[(y * peer + a) * range + c]`.
    values: Vec<S>,
    margin: S,
    stats: LpStats,
}

pub fn synthesize_with_limit<S: Scalar>(
    instance: &ProblemInstance<S>,
    stat: &Statistic,
    max_variables: usize,
) -> Result<SynthesisResult<S>> {
    let n = instance.agent_count();
    if stat.tables.len() != n {
        return Err(Error::Shape(format!("statistic has {} tables for {n} agents", stat.tables.len())));
    }
    let hist = |i: usize| instance.peer_report_count(i).pow(instance.task_count() as u32 - 1);
    for i in 0..n {
        if stat.tables[i].len() != hist(i) {
            return Err(Error::Shape(format!("statistic table for agent {i} does not match the instance")));
        }
        let vars = instance.report_count(i) * instance.peer_report_count(i) * stat.ranges[i] + 1;
        if vars > max_variables {
            return Err(Error::ResourceLimit(format!(
                "agent {i} needs {vars} LP variables, the limit is {max_variables}"
            )));
        }
    }
    let solutions = (0..n).into_par_iter().map(|i| solve_agent(instance, stat, i)).collect::<Result<Vec<_>>>()?;
    let lp_stats: Vec<LpStats> = solutions.iter().map(|s| s.stats.clone()).collect();
    let (worst, margin) = solutions
        .iter()
        .enumerate()
        .map(|(i, s)| (i, s.margin))
        .fold((0, S::infinity()), |acc, x| if x.1 < acc.1 { x } else { acc });
    if margin <= S::lit(tolerance::LP_MARGIN) {
        return Ok(SynthesisResult {
            status: SynthesisStatus::Infeasible { agent: worst, best_margin: margin },
            statistic: stat.name.clone(),
            lp_stats,
        });
    }
    let own: Vec<usize> = (0..n).map(|i| instance.report_count(i)).collect();
    let peer: Vec<usize> = (0..n).map(|i| instance.peer_report_count(i)).collect();
    let mechanism = ScoringMechanism::uniform_from_fn(&own, &peer, instance.task_count(), |i, y, a, b| {
        let range = stat.ranges[i];
        solutions[i].values[(y * peer[i] + a) * range + stat.value(i, b)]
    })?;
    let verdicts = verify_strict(instance, &mechanism, VerificationMode::ScoringExact, &VerifyOptions::default())?;
    if let Some(v) = verdicts.iter().find(|v| v.status != Status::CertifiedStrict) {
        return Err(Error::Numerical(format!(
            "synthesized mechanism failed certification on distribution {}, agent {} (margin {})",
            v.distribution, v.agent, v.margin
        )));
    }
    Ok(SynthesisResult {
        status: SynthesisStatus::Feasible { mechanism, margin },
        statistic: stat.name.clone(),
        lp_stats,
    })
}

fn solve_agent<S: Scalar>(instance: &ProblemInstance<S>, stat: &Statistic, agent: usize) -> Result<AgentSolution<S>> {
    let own = instance.report_count(agent);
    let peer = instance.peer_report_count(agent);
    let range = stat.ranges[agent];
    let width = own * peer * range;
    let eps = width;
    let index = |y: usize, a: usize, c: usize| (y * peer + a) * range + c;
    let mut rows: Vec<Vec<S>> = Vec::new();
    if own > 1 {
        for bucket in marginal_buckets(instance, agent, Grouping::ByMarginal) {
            let u = bucket.key.as_ref().expect("grouped by marginal");
            let weights = tensor_power(u, instance.task_count() - 1);
            // P_u(Y = c)
            let mut py = vec![S::zero(); range];
            for (b, w) in weights.iter().enumerate() {
                py[stat.value(agent, b)] += *w;
            }
            for d in &bucket.distributions {
                for (rs, q) in instance.peer_posteriors(*d, agent) {
                    for y in (0..own).filter(|y| *y != rs.report) {
                        let mut row = vec![S::zero(); width + 1];
                        for (a, qa) in q.iter().enumerate() {
                            for (c, pc) in py.iter().enumerate() {
                                let w = *qa * *pc;
                                row[index(rs.report, a, c)] += w;
                                row[index(y, a, c)] -= w;
                            }
                        }
                        row[eps] = -S::one();
                        let tol = S::tol(tolerance::DEDUP);
                        if !rows.iter().any(|r| max_abs_diff(r, &row) < tol) {
                            rows.push(row);
                        }
                    }
                }
            }
        }
    }
    let stats = |iterations, margin: S| LpStats {
        agent,
        variables: width + 1,
        constraints: rows.len(),
        iterations,
        margin: margin.to_f64_lossy(),
    };
    if rows.is_empty() {
        return Ok(AgentSolution {
            values: vec![S::zero(); width],
            margin: S::infinity(),
            stats: stats(0, S::infinity()),
        });
    }
    let mut lp = LinearProgram::new(width + 1);
    for j in 0..width {
        lp.set_bounds(j, Some(-S::one()), Some(S::one()));
    }
    lp.set_bounds(eps, Some(S::lit(-2.0)), Some(S::lit(2.0)));
    lp.set_objective(eps, S::one());
    for row in &rows {
        lp.add_constraint(row.clone(), Relation::Ge, S::zero());
    }
    match lp.maximize()? {
        LpOutcome::Optimal { x, objective, iterations } => {
            Ok(AgentSolution { values: x[..width].to_vec(), margin: objective, stats: stats(iterations, objective) })
        }
        other => Err(Error::Numerical(format!("bounded synthesis LP reported {other:?}"))),
    }
}
