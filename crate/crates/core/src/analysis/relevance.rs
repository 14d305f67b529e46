use rayon::prelude::*;

use super::{CheckKind, CheckReport, CheckWitness, PosteriorSource};
use crate::error::Result;
use crate::lp::{LinearProgram, LpOutcome, Relation};
use crate::model::{posterior_sets, Grouping, PosteriorSet, ProblemInstance};
use crate::scalar::{max_abs_diff, tolerance, Scalar};

fn source<S: Scalar>(set: &PosteriorSet<S>, k: usize) -> PosteriorSource<S> {
    PosteriorSource {
        distribution: set.sources[k].0,
        signal: set.sources[k].1,
        report: set.report,
        posterior: set.members[k].clone(),
    }
}

/// First colliding pair with different reports, scanning sets in order.
fn find_collision<S: Scalar>(agent: usize, sets: &[PosteriorSet<S>]) -> Option<CheckWitness<S>> {
    let tol = S::tol(tolerance::COLLISION);
    for (x, a) in sets.iter().enumerate() {
        for b in sets[x + 1..].iter().filter(|b| b.bucket == a.bucket) {
            for (ka, pa) in a.members.iter().enumerate() {
                for (kb, pb) in b.members.iter().enumerate() {
                    if max_abs_diff(pa, pb) <= tol {
                        return Some(CheckWitness::Collision {
                            agent,
                            bucket: a.bucket,
                            first: source(a, ka),
                            second: source(b, kb),
                        });
                    }
                }
            }
        }
    }
    None
}

fn collision_check<S: Scalar>(instance: &ProblemInstance<S>, grouping: Grouping, kind: CheckKind) -> CheckReport<S> {
    let witness = (0..instance.agent_count())
        .into_par_iter()
        .map(|i| find_collision(i, &posterior_sets(instance, i, grouping)))
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .next();
    CheckReport::from_witness(kind, witness)
}

/// Violated iff two posteriors over peer reports with different truthful
/// reports coincide, across all distributions.
pub fn check_stochastic_relevance<S: Scalar>(instance: &ProblemInstance<S>) -> CheckReport<S> {
    collision_check(instance, Grouping::None, CheckKind::StochasticRelevance)
}

/// The same collision test restricted to distributions sharing a peer report marginal.
pub fn check_marginal_relevance<S: Scalar>(instance: &ProblemInstance<S>) -> CheckReport<S> {
    collision_check(instance, Grouping::ByMarginal, CheckKind::MarginalRelevance)
}

/// Mixture weights `(β, β')` with `Σ β a = Σ β' b`, if the hulls meet.
pub(crate) fn hull_intersection<S: Scalar>(first: &[Vec<S>], second: &[Vec<S>]) -> Result<Option<(Vec<S>, Vec<S>)>> {
    let (na, nb) = (first.len(), second.len());
    let dim = first[0].len();
    let mut lp = LinearProgram::new(na + nb);
    let ones_a: Vec<S> = (0..na + nb).map(|j| if j < na { S::one() } else { S::zero() }).collect();
    let ones_b: Vec<S> = (0..na + nb).map(|j| if j < na { S::zero() } else { S::one() }).collect();
    lp.add_constraint(ones_a, Relation::Eq, S::one());
    lp.add_constraint(ones_b, Relation::Eq, S::one());
    for c in 0..dim {
        let row = first.iter().map(|p| p[c]).chain(second.iter().map(|p| -p[c])).collect();
        lp.add_constraint(row, Relation::Eq, S::zero());
    }
    match lp.maximize()? {
        LpOutcome::Optimal { x, .. } => Ok(Some((x[..na].to_vec(), x[na..].to_vec()))),
        _ => Ok(None),
    }
}

/// For each marginal bucket and pair of reports, looks for a point in both
/// convex hulls of the posterior sets.
pub fn check_convex_separation<S: Scalar>(instance: &ProblemInstance<S>) -> Result<CheckReport<S>> {
    let per_agent = (0..instance.agent_count())
        .into_par_iter()
        .map(|i| -> Result<Option<CheckWitness<S>>> {
            let sets = posterior_sets(instance, i, Grouping::ByMarginal);
            for (x, a) in sets.iter().enumerate() {
                for b in sets[x + 1..].iter().filter(|b| b.bucket == a.bucket) {
                    if let Some((wa, wb)) = hull_intersection(&a.members, &b.members)? {
                        let point = (0..a.members[0].len())
                            .map(|c| a.members.iter().zip(&wa).map(|(p, w)| p[c] * *w).sum())
                            .collect();
                        let label = |set: &PosteriorSet<S>, w: &[S]| -> Vec<(PosteriorSource<S>, S)> {
                            w.iter().enumerate().map(|(k, wk)| (source(set, k), *wk)).collect()
                        };
                        return Ok(Some(CheckWitness::ConvexCombination {
                            agent: i,
                            bucket: a.bucket,
                            reports: (a.report, b.report),
                            first: label(a, &wa),
                            second: label(b, &wb),
                            point,
                        }));
                    }
                }
            }
            Ok(None)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CheckReport::from_witness(CheckKind::ConvexSeparation, per_agent.into_iter().flatten().next()))
}
