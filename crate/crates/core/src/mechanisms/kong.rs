use super::scoring::ScoringMechanism;
use crate::error::{Error, Result};
use crate::model::ProblemInstance;
use crate::scalar::{max_abs_diff, Scalar};

/// `log Σ_ω r_i(ω) g(ω) / μ(ω)` where `g(ω) ∝ ∏_{j≠i} r_j(ω) / μ(ω)^{n−2}` is the
/// state posterior given every peer's belief, normalized to sum one.
pub fn kong_payment<S: Scalar>(prior: &[S], my: &[S], others: &[&[S]]) -> Result<S> {
    let m = prior.len();
    if my.len() != m || others.iter().any(|r| r.len() != m) {
        return Err(Error::Shape("reports and prior differ in length".into()));
    }
    if prior.iter().any(|p| !(*p > S::zero())) {
        return Err(Error::Validation("the prior must be strictly positive".into()));
    }
    let exponent = others.len() as i32 - 1;
    let raw: Vec<S> = (0..m).map(|w| others.iter().map(|r| r[w]).product::<S>() / prior[w].powi(exponent)).collect();
    let a: S = raw.iter().copied().sum();
    if !(a > S::zero()) {
        return Err(Error::DegenerateBelief("peer reports share no state with positive probability".into()));
    }
    let arg: S = (0..m).map(|w| my[w] * raw[w] / a / prior[w]).sum();
    if !(arg > S::zero()) {
        return Err(Error::DegenerateBelief("own report has no mass where the peers' beliefs concentrate".into()));
    }
    Ok(arg.ln())
}

/// The shared state marginal of every distribution in the instance.
pub fn shared_prior<S: Scalar>(instance: &ProblemInstance<S>) -> Result<Vec<S>> {
    let prior = instance.distribution(0).state_marginal();
    for (d, mu) in instance.distributions().iter().enumerate().skip(1) {
        if max_abs_diff(&prior, &mu.state_marginal()) > S::tol(1e-9) {
            return Err(Error::NotApplicable(format!("distribution {d} has a different prior over states")));
        }
    }
    Ok(prior)
}

/// Kong's mechanism on posterior reports, paid on every task and summed.
pub fn kong_mechanism<S: Scalar>(instance: &ProblemInstance<S>) -> Result<ScoringMechanism<S>> {
    let prior = shared_prior(instance)?;
    let n = instance.agent_count();
    let mut vectors: Vec<Vec<&[S]>> = Vec::with_capacity(n);
    for i in 0..n {
        let vs = instance
            .reports(i)
            .iter()
            .map(|r| r.as_vector().filter(|v| v.len() == prior.len()))
            .collect::<Option<Vec<_>>>()
            .ok_or_else(|| Error::NotApplicable(format!("agent {i} does not report beliefs over states")))?;
        vectors.push(vs);
    }
    let own: Vec<usize> = (0..n).map(|i| instance.report_count(i)).collect();
    let peer: Vec<usize> = (0..n).map(|i| instance.peer_report_count(i)).collect();
    let mut table: Vec<Vec<Vec<S>>> = Vec::with_capacity(n);
    for i in 0..n {
        let radix = instance.peer_radix(i);
        let peers: Vec<usize> = (0..n).filter(|j| *j != i).collect();
        let mut rows = Vec::with_capacity(own[i]);
        for y in 0..own[i] {
            let mut row = Vec::with_capacity(peer[i]);
            for a in 0..peer[i] {
                let digits = radix.decode(a);
                let others: Vec<&[S]> = peers.iter().zip(&digits).map(|(j, r)| vectors[*j][*r]).collect();
                row.push(kong_payment(&prior, vectors[i][y], &others)?);
            }
            rows.push(row);
        }
        table.push(rows);
    }
    ScoringMechanism::uniform_from_fn(&own, &peer, instance.task_count(), |i, y, a, _| table[i][y][a])
}
