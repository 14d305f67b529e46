use super::strategy::Strategy;
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::mechanisms::PaymentRule;
use crate::model::ProblemInstance;
use crate::scalar::Scalar;

/// Default cap on enumerated weighted terms per expectation.
pub const DEFAULT_TERM_BUDGET: u64 = 100_000_000;

fn check_profile<S: Scalar>(instance: &ProblemInstance<S>, profile: &[Strategy<S>]) -> Result<()> {
    if profile.len() != instance.agent_count() {
        return Err(Error::Arity { expected: instance.agent_count(), found: profile.len() });
    }
    for (j, st) in profile.iter().enumerate() {
        if st.signal_count() != instance.signal_count(j) || st.report_count() != instance.report_count(j) {
            return Err(Error::Shape(format!("strategy of agent {j} has the wrong shape")));
        }
        if !st.is_consistent() && st.maps().len() != instance.task_count() {
            return Err(Error::Shape(format!("strategy of agent {j} has {} task maps", st.maps().len())));
        }
    }
    Ok(())
}

/// `ν^{(t)}(y, a)`: the joint of `agent`'s report and the peer report tuple on
/// task `t` under distribution `d` and the given profile.
pub fn task_report_joint<S: Scalar>(
    instance: &ProblemInstance<S>,
    d: usize,
    agent: usize,
    profile: &[Strategy<S>],
    task: usize,
) -> Result<Matrix<S>> {
    check_profile(instance, profile)?;
    let peer_len = instance.peer_report_count(agent);
    let mut out = Matrix::zeros(instance.report_count(agent), peer_len);
    let mut peer = Vec::with_capacity(peer_len);
    instance.distribution(d).for_each_cell(|_, s, p| {
        peer.clear();
        peer.push(p);
        for (j, sj) in s.iter().enumerate() {
            if j == agent {
                continue;
            }
            let row = profile[j].map_for_task(task).row(*sj);
            peer = peer.iter().flat_map(|w| row.iter().map(move |x| *w * *x)).collect();
        }
        let own = profile[agent].map_for_task(task).row(s[agent]);
        for (y, oy) in own.iter().enumerate() {
            if *oy == S::zero() {
                continue;
            }
            for (a, pa) in peer.iter().enumerate() {
                out.set(y, a, out.get(y, a) + *oy * *pa);
            }
        }
    });
    Ok(out)
}

/// Per-task report joints for every task.
pub fn report_joints<S: Scalar>(
    instance: &ProblemInstance<S>,
    d: usize,
    agent: usize,
    profile: &[Strategy<S>],
) -> Result<Vec<Matrix<S>>> {
    (0..instance.task_count()).map(|t| task_report_joint(instance, d, agent, profile, t)).collect()
}

/// Exact expected total payment of `agent` under `profile`, with independent
/// tasks each drawn from distribution `d`.
pub fn expected_payment<S: Scalar, R: PaymentRule<S> + ?Sized>(
    instance: &ProblemInstance<S>,
    d: usize,
    rule: &R,
    agent: usize,
    profile: &[Strategy<S>],
    budget: u64,
) -> Result<S> {
    check_rule(instance, rule)?;
    let joints = report_joints(instance, d, agent, profile)?;
    if let Some(v) = rule.factored_expectation(agent, &joints) {
        return Ok(v);
    }
    enumerate_expectation(rule, agent, &joints, budget)
}

/// Same as [`expected_payment`] but always enumerates every task profile.
pub fn expected_payment_enumerated<S: Scalar, R: PaymentRule<S> + ?Sized>(
    instance: &ProblemInstance<S>,
    d: usize,
    rule: &R,
    agent: usize,
    profile: &[Strategy<S>],
    budget: u64,
) -> Result<S> {
    check_rule(instance, rule)?;
    let joints = report_joints(instance, d, agent, profile)?;
    enumerate_expectation(rule, agent, &joints, budget)
}

pub(crate) fn check_rule<S: Scalar, R: PaymentRule<S> + ?Sized>(instance: &ProblemInstance<S>, rule: &R) -> Result<()> {
    if rule.agent_count() != instance.agent_count() {
        return Err(Error::Arity { expected: instance.agent_count(), found: rule.agent_count() });
    }
    if rule.task_count() != instance.task_count() {
        return Err(Error::Shape(format!(
            "mechanism has {} tasks, instance has {}",
            rule.task_count(),
            instance.task_count()
        )));
    }
    for i in 0..instance.agent_count() {
        let expected = (instance.report_count(i), instance.peer_report_count(i));
        if let Some(found) = rule.report_shape(i) {
            if found != expected {
                return Err(Error::Shape(format!(
                    "agent {i}: mechanism expects {found:?} own/peer reports, instance has {expected:?}"
                )));
            }
        }
    }
    Ok(())
}

pub(crate) fn enumerate_expectation<S: Scalar, R: PaymentRule<S> + ?Sized>(
    rule: &R,
    agent: usize,
    joints: &[Matrix<S>],
    budget: u64,
) -> Result<S> {
    let supports: Vec<Vec<(usize, usize, S)>> = joints
        .iter()
        .map(|j| {
            let mut v = Vec::new();
            for y in 0..j.rows() {
                for a in 0..j.cols() {
                    let w = j.get(y, a);
                    if w > S::zero() {
                        v.push((y, a, w));
                    }
                }
            }
            v
        })
        .collect();
    let mut terms: u64 = 1;
    for s in &supports {
        if s.is_empty() {
            return Ok(S::zero());
        }
        terms = terms.saturating_mul(s.len() as u64);
    }
    if terms > budget {
        return Err(Error::ResourceLimit(format!("{terms} weighted terms exceed the budget of {budget}")));
    }
    let tasks = supports.len();
    let mut idx = vec![0usize; tasks];
    let mut own = vec![0usize; tasks];
    let mut peers = vec![0usize; tasks];
    let mut total = S::zero();
    loop {
        let mut w = S::one();
        for t in 0..tasks {
            let (y, a, p) = supports[t][idx[t]];
            own[t] = y;
            peers[t] = a;
            w *= p;
        }
        total += w * rule.total_payment(agent, &own, &peers);
        let mut t = tasks;
        loop {
            if t == 0 {
                return Ok(total);
            }
            t -= 1;
            idx[t] += 1;
            if idx[t] < supports[t].len() {
                break;
            }
            idx[t] = 0;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mechanisms::ScoringMechanism;
    use crate::model::two_agent_table;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn factored_expectation_matches_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for tasks in 1..=3 {
            for _ in 0..10 {
                let w: Vec<Vec<f64>> = (0..3).map(|_| (0..2).map(|_| rng.random::<f64>() + 0.05).collect()).collect();
                let total: f64 = w.iter().flatten().sum();
                let table: Vec<Vec<f64>> = w.iter().map(|r| r.iter().map(|x| x / total).collect()).collect();
                let inst = ProblemInstance::identity(vec![two_agent_table(&table).unwrap()], tasks).unwrap();
                let mech =
                    ScoringMechanism::from_fn(&[3, 2], &[2, 3], tasks, |_, _, _, _, _| rng.random::<f64>() - 0.5)
                        .unwrap();
                let profile: Vec<Strategy<f64>> = (0..2)
                    .map(|j| {
                        let maps = (0..tasks)
                            .map(|_| {
                                Strategy::random_mixed(inst.signal_count(j), inst.report_count(j), &mut rng).maps()[0]
                                    .clone()
                            })
                            .collect();
                        Strategy::new(maps).unwrap()
                    })
                    .collect();
                for agent in 0..2 {
                    let fast = expected_payment(&inst, 0, &mech, agent, &profile, DEFAULT_TERM_BUDGET).unwrap();
                    let slow =
                        expected_payment_enumerated(&inst, 0, &mech, agent, &profile, DEFAULT_TERM_BUDGET).unwrap();
                    assert!((fast - slow).abs() < 1e-12, "{fast} vs {slow}");
                }
            }
        }
    }

    #[test]
    fn budget_is_enforced() {
        let inst = ProblemInstance::identity(vec![two_agent_table(&[vec![0.25, 0.25], vec![0.25, 0.25]]).unwrap()], 3)
            .unwrap();
        let mech = ScoringMechanism::zeros_for(&inst).unwrap();
        let profile = Strategy::truthful_profile(&inst, 0);
        let err = expected_payment_enumerated(&inst, 0, &mech, 0, &profile, 10).unwrap_err();
        assert!(matches!(err, Error::ResourceLimit(_)));
    }
}
