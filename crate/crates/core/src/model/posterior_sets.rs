use serde::Serialize;

use super::instance::ProblemInstance;
use crate::scalar::{max_abs_diff, tolerance, Scalar};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Grouping {
    /// One bucket holding every distribution.
    None,
    /// Distributions bucketed by the peer report marginal `μ(r_{-i})`.
    ByMarginal,
}

/// Distributions sharing one peer report marginal.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MarginalBucket<S> {
    /// Representative marginal, `None` for the unconstrained bucket.
    pub key: Option<Vec<S>>,
    pub distributions: Vec<usize>,
}

/// The posteriors `μ(r_{-i} | s_i)` for one truthful report within one bucket.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PosteriorSet<S> {
    pub agent: usize,
    pub report: usize,
    pub bucket: usize,
    pub marginal_key: Option<Vec<S>>,
    pub members: Vec<Vec<S>>,
    /// `(distribution, signal)` that produced each member.
    pub sources: Vec<(usize, usize)>,
}

/// Greedy first-match clustering of peer marginals, in distribution order.
pub fn marginal_buckets<S: Scalar>(
    instance: &ProblemInstance<S>,
    agent: usize,
    grouping: Grouping,
) -> Vec<MarginalBucket<S>> {
    let all = 0..instance.distribution_count();
    if grouping == Grouping::None {
        return vec![MarginalBucket { key: None, distributions: all.collect() }];
    }
    let tol = S::tol(tolerance::DEDUP);
    let mut buckets: Vec<MarginalBucket<S>> = Vec::new();
    for d in all {
        let m = instance.peer_marginal(d, agent);
        match buckets.iter_mut().find(|b| b.key.as_ref().is_some_and(|k| max_abs_diff(k, &m) < tol)) {
            Some(b) => b.distributions.push(d),
            None => buckets.push(MarginalBucket { key: Some(m), distributions: vec![d] }),
        }
    }
    buckets
}

/// Posterior sets per bucket and truthful report; empty sets are omitted.
pub fn posterior_sets<S: Scalar>(
    instance: &ProblemInstance<S>,
    agent: usize,
    grouping: Grouping,
) -> Vec<PosteriorSet<S>> {
    let mut out = Vec::new();
    for (b, bucket) in marginal_buckets(instance, agent, grouping).into_iter().enumerate() {
        let mut sets: Vec<PosteriorSet<S>> = (0..instance.report_count(agent))
            .map(|report| PosteriorSet {
                agent,
                report,
                bucket: b,
                marginal_key: bucket.key.clone(),
                members: Vec::new(),
                sources: Vec::new(),
            })
            .collect();
        for d in &bucket.distributions {
            for (rs, q) in instance.peer_posteriors(*d, agent) {
                let set = &mut sets[rs.report];
                set.members.push(q);
                set.sources.push((*d, rs.signal));
            }
        }
        out.extend(sets.into_iter().filter(|s| !s.members.is_empty()));
    }
    out
}
