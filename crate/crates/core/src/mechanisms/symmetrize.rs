use super::scoring::ScoringMechanism;
use super::PaymentRule;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Largest task count accepted by default (`T!` permutations are enumerated).
pub const DEFAULT_MAX_TASKS: usize = 5;

/// All permutations of `0..n` in lexicographic order.
pub fn permutations(n: usize) -> Vec<Vec<usize>> {
    let mut current: Vec<usize> = (0..n).collect();
    let mut out = vec![current.clone()];
    loop {
        let Some(i) = (1..n).rev().find(|i| current[i - 1] < current[*i]) else { return out };
        let j = (i..n).rev().find(|j| current[*j] > current[i - 1]).expect("successor exists");
        current.swap(i - 1, j);
        current[i..].reverse();
        out.push(current.clone());
    }
}

fn check_cap(task_count: usize, max_tasks: usize) -> Result<()> {
    if task_count > max_tasks {
        return Err(Error::ResourceLimit(format!(
            "symmetrizing over {task_count}! task orders (cap is T ≤ {max_tasks})"
        )));
    }
    Ok(())
}

/// The symmetrized mechanism as literal averages over task permutations.
///
/// `p̂_i(r) = (1/T!) Σ_{τ, π} p_i^{(τ)}(r_i^{π(1)}, r_{-i}^{π(1)}, r_{-i}^{π(2)}, …, r_{-i}^{π(T)})`.
pub struct Symmetrized<'a, S> {
    base: &'a ScoringMechanism<S>,
    perms: Vec<Vec<usize>>,
}

impl<'a, S: Scalar> Symmetrized<'a, S> {
    pub fn new(base: &'a ScoringMechanism<S>, max_tasks: usize) -> Result<Self> {
        check_cap(base.task_count(), max_tasks)?;
        Ok(Self { base, perms: permutations(base.task_count()) })
    }
}

impl<S: Scalar> PaymentRule<S> for Symmetrized<'_, S> {
    fn agent_count(&self) -> usize {
        self.base.agent_count()
    }

    fn task_count(&self) -> usize {
        self.base.task_count()
    }

    fn report_shape(&self, agent: usize) -> Option<(usize, usize)> {
        self.base.report_shape(agent)
    }

    fn total_payment(&self, agent: usize, own: &[usize], peers: &[usize]) -> S {
        let a = self.base.agent(agent);
        let t = self.base.task_count();
        let mut total = S::zero();
        for pi in &self.perms {
            let first = pi[0];
            let history = pi[1..].iter().fold(0, |acc, k| acc * a.peer_count() + peers[*k]);
            for tau in 0..t {
                total += a.payment(tau, own[first], peers[first], history);
            }
        }
        total / S::from_usize_lossy(self.perms.len())
    }
}

/// Table form of the symmetrized mechanism: a task-uniform scoring
/// mechanism with the same total payment on every report profile.
pub fn symmetrize<S: Scalar>(mech: &ScoringMechanism<S>, max_tasks: usize) -> Result<ScoringMechanism<S>> {
    let t = mech.task_count();
    check_cap(t, max_tasks)?;
    let orders = permutations(t - 1);
    let norm = S::from_usize_lossy(t * orders.len());
    let own: Vec<usize> = mech.agents().iter().map(|a| a.own_count()).collect();
    let peer: Vec<usize> = mech.agents().iter().map(|a| a.peer_count()).collect();
    let radix: Vec<_> = mech.agents().iter().map(|a| a.history_radix()).collect();
    let mut digits = vec![0; t.saturating_sub(1)];
    ScoringMechanism::uniform_from_fn(&own, &peer, t, |i, y, a, b| {
        let ag = mech.agent(i);
        radix[i].decode_into(b, &mut digits);
        let mut total = S::zero();
        for order in &orders {
            let reordered = order.iter().fold(0, |acc, k| acc * ag.peer_count() + digits[*k]);
            for tau in 0..t {
                total += ag.payment(tau, y, a, reordered);
            }
        }
        total / norm
    })
}
