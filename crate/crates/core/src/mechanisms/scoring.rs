use serde::Serialize;

use super::PaymentRule;
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::model::ProblemInstance;
use crate::scalar::Scalar;
use crate::tensor::MixedRadix;

/// One agent's per-task tables `p^{(t)}(r_i, r_{-i}^{(t)}, r_{-i}^{(-t)})`.
///
/// Entries are stored row-major over `(own, same-task peer, other-task tuple)`
/// where the tuple lists the other tasks' peer reports in increasing task order.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AgentScoring<S> {
    own: usize,
    peer: usize,
    tables: Vec<Vec<S>>,
}

impl<S: Scalar> AgentScoring<S> {
    pub fn new(own: usize, peer: usize, tables: Vec<Vec<S>>) -> Result<Self> {
        let tasks = tables.len();
        if tasks == 0 || own == 0 || peer == 0 {
            return Err(Error::Shape("payment tables need at least one task, report and peer report".into()));
        }
        let len = own * peer * peer.pow(tasks as u32 - 1);
        if tables.iter().any(|t| t.len() != len) {
            return Err(Error::Shape(format!("each task table needs {len} entries")));
        }
        if tables.iter().flatten().any(|x| !x.is_finite()) {
            return Err(Error::Validation("payment entries must be finite".into()));
        }
        Ok(Self { own, peer, tables })
    }

    pub fn own_count(&self) -> usize {
        self.own
    }

    pub fn peer_count(&self) -> usize {
        self.peer
    }

    pub fn task_count(&self) -> usize {
        self.tables.len()
    }

    /// Number of other-task tuples, `|R_{-i}|^{T-1}`.
    pub fn history_count(&self) -> usize {
        self.peer.pow(self.tables.len() as u32 - 1)
    }

    pub fn history_radix(&self) -> MixedRadix {
        MixedRadix::uniform(self.peer, self.tables.len() - 1)
    }

    pub fn tables(&self) -> &[Vec<S>] {
        &self.tables
    }

    pub fn index(&self, own: usize, same: usize, history: usize) -> usize {
        (own * self.peer + same) * self.history_count() + history
    }

    pub fn payment(&self, task: usize, own: usize, same: usize, history: usize) -> S {
        self.tables[task][self.index(own, same, history)]
    }

    pub fn is_task_uniform(&self) -> bool {
        self.tables.iter().all(|t| t == &self.tables[0])
    }
}

/// A scoring mechanism: agent `i` is paid `Σ_t p_i^{(t)}` over tasks.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScoringMechanism<S> {
    agents: Vec<AgentScoring<S>>,
    task_count: usize,
}

impl<S: Scalar> ScoringMechanism<S> {
    pub fn new(agents: Vec<AgentScoring<S>>) -> Result<Self> {
        let task_count =
            agents.first().map(AgentScoring::task_count).ok_or_else(|| Error::Shape("no agents".into()))?;
        if agents.iter().any(|a| a.task_count() != task_count) {
            return Err(Error::Shape("agents disagree on the task count".into()));
        }
        Ok(Self { agents, task_count })
    }

    /// Builds task-uniform tables from `f(agent, own, same, history)`, evaluated once per entry.
    pub fn uniform_from_fn(
        own_counts: &[usize],
        peer_counts: &[usize],
        task_count: usize,
        mut f: impl FnMut(usize, usize, usize, usize) -> S,
    ) -> Result<Self> {
        check_shape(own_counts, peer_counts, task_count)?;
        let mut agents = Vec::with_capacity(own_counts.len());
        for (i, (own, peer)) in own_counts.iter().zip(peer_counts).enumerate() {
            let table = build_table(*own, *peer, task_count, |y, a, b| f(i, y, a, b));
            agents.push(AgentScoring::new(*own, *peer, vec![table; task_count])?);
        }
        Self::new(agents)
    }

    /// Builds tables from `f(agent, task, own, same, history)`.
    pub fn from_fn(
        own_counts: &[usize],
        peer_counts: &[usize],
        task_count: usize,
        mut f: impl FnMut(usize, usize, usize, usize, usize) -> S,
    ) -> Result<Self> {
        check_shape(own_counts, peer_counts, task_count)?;
        let mut agents = Vec::with_capacity(own_counts.len());
        for (i, (own, peer)) in own_counts.iter().zip(peer_counts).enumerate() {
            let tables =
                (0..task_count).map(|t| build_table(*own, *peer, task_count, |y, a, b| f(i, t, y, a, b))).collect();
            agents.push(AgentScoring::new(*own, *peer, tables)?);
        }
        Self::new(agents)
    }

    pub fn zeros_for(instance: &ProblemInstance<S>) -> Result<Self> {
        let (own, peer) = shape_of(instance);
        Self::uniform_from_fn(&own, &peer, instance.task_count(), |_, _, _, _| S::zero())
    }

    pub fn agents(&self) -> &[AgentScoring<S>] {
        &self.agents
    }

    pub fn agent(&self, i: usize) -> &AgentScoring<S> {
        &self.agents[i]
    }

    /// Applies `f` to every entry.
    pub fn map(&self, mut f: impl FnMut(S) -> S) -> Self {
        let agents = self
            .agents
            .iter()
            .map(|a| AgentScoring {
                own: a.own,
                peer: a.peer,
                tables: a.tables.iter().map(|t| t.iter().map(|x| f(*x)).collect()).collect(),
            })
            .collect();
        Self { agents, task_count: self.task_count }
    }

    /// Checks that the table shapes match the instance's report sets and task count.
    pub fn check_compatible(&self, instance: &ProblemInstance<S>) -> Result<()> {
        let (own, peer) = shape_of(instance);
        if self.task_count != instance.task_count() || self.agents.len() != own.len() {
            return Err(Error::Shape(format!(
                "mechanism has {} agents over {} tasks, instance has {} over {}",
                self.agents.len(),
                self.task_count,
                own.len(),
                instance.task_count()
            )));
        }
        for (i, a) in self.agents.iter().enumerate() {
            if a.own != own[i] || a.peer != peer[i] {
                return Err(Error::Shape(format!(
                    "agent {i} tables are {}×{}, instance report sets are {}×{}",
                    a.own, a.peer, own[i], peer[i]
                )));
            }
        }
        Ok(())
    }

    /// The other-task tuple index for task `t` given every task's peer report.
    pub fn history_of(&self, agent: usize, peers: &[usize], t: usize) -> usize {
        let peer = self.agents[agent].peer;
        peers.iter().enumerate().filter(|(k, _)| *k != t).fold(0, |acc, (_, p)| acc * peer + p)
    }
}

fn check_shape(own_counts: &[usize], peer_counts: &[usize], task_count: usize) -> Result<()> {
    if own_counts.is_empty() || own_counts.len() != peer_counts.len() || task_count == 0 {
        return Err(Error::Shape("mechanism shape".into()));
    }
    Ok(())
}

fn build_table<S>(own: usize, peer: usize, task_count: usize, mut f: impl FnMut(usize, usize, usize) -> S) -> Vec<S> {
    let hist = peer.pow(task_count as u32 - 1);
    let mut table = Vec::with_capacity(own * peer * hist);
    for y in 0..own {
        for a in 0..peer {
            for b in 0..hist {
                table.push(f(y, a, b));
            }
        }
    }
    table
}

/// `(|R_i|, |R_{-i}|)` for every agent.
pub fn shape_of<S: Scalar>(instance: &ProblemInstance<S>) -> (Vec<usize>, Vec<usize>) {
    let n = instance.agent_count();
    ((0..n).map(|i| instance.report_count(i)).collect(), (0..n).map(|i| instance.peer_report_count(i)).collect())
}

impl<S: Scalar> PaymentRule<S> for ScoringMechanism<S> {
    fn agent_count(&self) -> usize {
        self.agents.len()
    }

    fn task_count(&self) -> usize {
        self.task_count
    }

    fn total_payment(&self, agent: usize, own: &[usize], peers: &[usize]) -> S {
        let a = &self.agents[agent];
        (0..self.task_count).map(|t| a.payment(t, own[t], peers[t], self.history_of(agent, peers, t))).sum()
    }

    fn report_shape(&self, agent: usize) -> Option<(usize, usize)> {
        self.agents.get(agent).map(|a| (a.own, a.peer))
    }

    fn factored_expectation(&self, agent: usize, joints: &[Matrix<S>]) -> Option<S> {
        let a = &self.agents[agent];
        if joints.len() != self.task_count {
            return None;
        }
        let marginals: Vec<Vec<S>> =
            joints.iter().map(|j| (0..j.cols()).map(|c| j.column(c).into_iter().sum()).collect()).collect();
        let mut total = S::zero();
        for (t, joint) in joints.iter().enumerate() {
            let others: Vec<&[S]> =
                marginals.iter().enumerate().filter(|(k, _)| *k != t).map(|(_, m)| m.as_slice()).collect();
            let weights = history_weights(&others);
            for y in 0..a.own {
                for p in 0..a.peer {
                    let w = joint.get(y, p);
                    if w == S::zero() {
                        continue;
                    }
                    let inner: S = weights.iter().enumerate().map(|(b, wb)| *wb * a.payment(t, y, p, b)).sum();
                    total += w * inner;
                }
            }
        }
        Some(total)
    }
}

/// Product weights over other-task tuples, first task slowest.
fn history_weights<S: Scalar>(marginals: &[&[S]]) -> Vec<S> {
    let mut out = vec![S::one()];
    for m in marginals {
        out = out.iter().flat_map(|w| m.iter().map(move |x| *w * *x)).collect();
    }
    out
}
