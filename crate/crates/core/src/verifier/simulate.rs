use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::expectation::check_rule;
use super::strategy::Strategy;
use crate::error::{Error, Result};
use crate::mechanisms::PaymentRule;
use crate::model::ProblemInstance;
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SimulationReport<S> {
    pub trials: usize,
    /// Mean total payment per agent.
    pub means: Vec<S>,
    /// Standard error of each mean.
    pub std_errors: Vec<S>,
}

fn weighted<S: Scalar>(weights: &[S]) -> Result<WeightedIndex<f64>> {
    WeightedIndex::new(weights.iter().map(|w| w.to_f64_lossy()))
        .map_err(|e| Error::Numerical(format!("cannot sample from weights: {e}")))
}

/// Monte Carlo estimate of every agent's total payment under `profile`.
pub fn simulate<S: Scalar, R: PaymentRule<S> + ?Sized>(
    instance: &ProblemInstance<S>,
    d: usize,
    rule: &R,
    profile: &[Strategy<S>],
    trials: usize,
    seed: u64,
) -> Result<SimulationReport<S>> {
    check_rule(instance, rule)?;
    if profile.len() != instance.agent_count() {
        return Err(Error::Arity { expected: instance.agent_count(), found: profile.len() });
    }
    if trials == 0 {
        return Err(Error::Validation("at least one trial is required".into()));
    }
    let (n, tasks) = (instance.agent_count(), instance.task_count());
    let mut cells = Vec::new();
    let mut masses = Vec::new();
    instance.distribution(d).for_each_cell(|_, s, p| {
        cells.push(s.to_vec());
        masses.push(p);
    });
    let cell_sampler = weighted(&masses)?;
    // samplers[j][t][s]
    let samplers: Vec<Vec<Vec<WeightedIndex<f64>>>> = profile
        .iter()
        .map(|st| {
            (0..tasks)
                .map(|t| {
                    let m = st.map_for_task(t);
                    (0..m.rows()).map(|s| weighted(m.row(s))).collect::<Result<Vec<_>>>()
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    let radices: Vec<_> = (0..n).map(|i| instance.peer_radix(i)).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut reports = vec![vec![0usize; tasks]; n];
    let mut own = vec![0usize; tasks];
    let mut peers = vec![0usize; tasks];
    let mut digits = Vec::with_capacity(n);
    let mut mean = vec![0.0f64; n];
    let mut m2 = vec![0.0f64; n];
    for trial in 0..trials {
        for t in 0..tasks {
            let cell = &cells[cell_sampler.sample(&mut rng)];
            for j in 0..n {
                reports[j][t] = samplers[j][t][cell[j]].sample(&mut rng);
            }
        }
        for i in 0..n {
            for t in 0..tasks {
                own[t] = reports[i][t];
                digits.clear();
                digits.extend((0..n).filter(|j| *j != i).map(|j| reports[j][t]));
                peers[t] = radices[i].encode(&digits);
            }
            let x = rule.total_payment(i, &own, &peers).to_f64_lossy();
            let delta = x - mean[i];
            mean[i] += delta / (trial + 1) as f64;
            m2[i] += delta * (x - mean[i]);
        }
    }
    let std_errors = m2
        .iter()
        .map(|v| if trials > 1 { S::lit((v / (trials - 1) as f64 / trials as f64).sqrt()) } else { S::zero() })
        .collect();
    Ok(SimulationReport { trials, means: mean.into_iter().map(S::lit).collect(), std_errors })
}
