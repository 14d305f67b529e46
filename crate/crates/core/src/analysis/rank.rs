use super::{CheckKind, CheckReport, CheckWitness};
use crate::error::{Error, Result};
use crate::mechanisms::LinearProperty;
use crate::model::ProblemInstance;
use crate::scalar::{tolerance, Scalar};

/// Violated when some peer likelihood matrix `P^μ_i` has rank below `|Ω|`.
pub fn check_rank_posterior<S: Scalar>(instance: &ProblemInstance<S>) -> Result<CheckReport<S>> {
    let omega = instance.state_count();
    for d in 0..instance.distribution_count() {
        let ci = instance.factorization(d)?;
        for i in 0..instance.agent_count() {
            let svd = ci.peer_likelihood(i).values.svd();
            let rank = svd.rank(S::lit(tolerance::RANK));
            if rank < omega {
                let null_vector = svd.null_space(S::lit(tolerance::RANK)).into_iter().next().unwrap_or_default();
                return Ok(CheckReport::from_witness(
                    CheckKind::RankPosterior,
                    Some(CheckWitness::RankDeficient { distribution: d, agent: i, rank, null_vector }),
                ));
            }
        }
    }
    Ok(CheckReport::from_witness(CheckKind::RankPosterior, None))
}

/// Passes iff `[G; 1ᵀ]` has rank `|Ω|`.
pub fn check_linear_property_rank<S: Scalar>(g: &LinearProperty<S>, state_count: usize) -> Result<CheckReport<S>> {
    if g.state_count() != state_count {
        return Err(Error::Shape(format!("property acts on {} states, instance has {state_count}", g.state_count())));
    }
    let svd = g.matrix().stack_row(&vec![S::one(); state_count]).svd();
    let rank = svd.rank(S::lit(tolerance::RANK));
    let witness = (rank < state_count).then(|| CheckWitness::LinearRank {
        agent: None,
        rank,
        null_vector: svd.null_space(S::lit(tolerance::RANK)).into_iter().next().unwrap_or_default(),
    });
    Ok(CheckReport::from_witness(CheckKind::LinearPropertyRank, witness))
}
