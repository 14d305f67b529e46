use serde::Serialize;

use super::delta::DeltaMatrix;
use super::distribution::JointDistribution;
use super::factorization::ConditionalIndependent;
use super::report::{ReportRegistry, ReportValue};
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::scalar::Scalar;
use crate::tensor::MixedRadix;

/// How an agent's signal is turned into a report under each distribution.
#[derive(Clone, Debug, PartialEq)]
pub enum ReportFunction<S> {
    /// The signal label itself.
    Identity,
    /// The posterior over states `μ(ω | s_i)`.
    Posterior,
    /// `G · μ(ω | s_i)` for an `L × |Ω|` matrix `G`.
    Linear(Matrix<S>),
    /// Explicit values indexed `[distribution][signal]`.
    Table(Vec<Vec<ReportValue<S>>>),
}

/// One agent's report set and its report maps.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AgentReports<S> {
    pub values: Vec<ReportValue<S>>,
    /// `map[d][s]` is the truthful report key, `None` when `s` has zero mass under `d`.
    pub map: Vec<Vec<Option<usize>>>,
}

/// A finite problem `⟨f, M⟩` with `T` tasks.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProblemInstance<S> {
    distributions: Vec<JointDistribution<S>>,
    reports: Vec<AgentReports<S>>,
    task_count: usize,
    #[serde(skip)]
    factorizations: Vec<Option<ConditionalIndependent<S>>>,
    pub name: Option<String>,
}

/// A positive-mass signal together with its truthful report.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RealizedSignal<S> {
    pub signal: usize,
    pub mass: S,
    pub report: usize,
}

impl<S: Scalar> ProblemInstance<S> {
    pub fn new(
        distributions: Vec<JointDistribution<S>>,
        functions: Vec<ReportFunction<S>>,
        task_count: usize,
    ) -> Result<Self> {
        let first = distributions.first().ok_or_else(|| Error::Validation("the distribution set is empty".into()))?;
        if functions.len() != first.agent_count() {
            return Err(Error::Shape(format!(
                "{} report functions for {} agents",
                functions.len(),
                first.agent_count()
            )));
        }
        let mut reports = Vec::with_capacity(functions.len());
        for (agent, f) in functions.iter().enumerate() {
            reports.push(build_reports(&distributions, agent, f)?);
        }
        Self::from_parts(distributions, reports, task_count)
    }

    /// Identity reports for every agent.
    pub fn identity(distributions: Vec<JointDistribution<S>>, task_count: usize) -> Result<Self> {
        let n = distributions.first().map_or(0, JointDistribution::agent_count);
        Self::new(distributions, vec![ReportFunction::Identity; n], task_count)
    }

    pub fn from_parts(
        distributions: Vec<JointDistribution<S>>,
        reports: Vec<AgentReports<S>>,
        task_count: usize,
    ) -> Result<Self> {
        if task_count == 0 {
            return Err(Error::Validation("task count must be positive".into()));
        }
        let first = distributions.first().ok_or_else(|| Error::Validation("the distribution set is empty".into()))?;
        if let Some(d) = distributions.iter().position(|d| !d.same_spaces(first)) {
            return Err(Error::Validation(format!("distribution {d} has different state or signal spaces")));
        }
        if reports.len() != first.agent_count() {
            return Err(Error::Shape("one report map per agent is required".into()));
        }
        for (agent, rep) in reports.iter().enumerate() {
            if rep.map.len() != distributions.len() {
                return Err(Error::Shape(format!("agent {agent} report map covers {} distributions", rep.map.len())));
            }
            for (d, mu) in distributions.iter().enumerate() {
                let row = &rep.map[d];
                if row.len() != mu.signal_count(agent) {
                    return Err(Error::Shape(format!(
                        "agent {agent} report map for distribution {d} has wrong length"
                    )));
                }
                let marg = mu.signal_marginal(agent);
                for (s, key) in row.iter().enumerate() {
                    match key {
                        Some(k) if *k >= rep.values.len() => {
                            return Err(Error::Index(format!("report key {k} of agent {agent}")));
                        }
                        None if marg[s] > S::zero() => {
                            return Err(Error::Validation(format!(
                                "agent {agent} signal {s} has positive mass under distribution {d} but no report"
                            )));
                        }
                        _ => {}
                    }
                }
            }
        }
        let factorizations = vec![None; distributions.len()];
        Ok(Self { distributions, reports, task_count, factorizations, name: None })
    }

    /// Attaches conditional-independence factorizations, checked against the joints.
    pub fn with_factorizations(mut self, factorizations: Vec<Option<ConditionalIndependent<S>>>) -> Result<Self> {
        if factorizations.len() != self.distributions.len() {
            return Err(Error::Shape("one factorization slot per distribution".into()));
        }
        for (d, f) in factorizations.iter().enumerate() {
            if let Some(ci) = f {
                let joint = ci.joint()?;
                let mu = &self.distributions[d];
                if joint.mass().len() != mu.mass().len()
                    || crate::scalar::max_abs_diff(joint.mass(), mu.mass()) > S::tol(1e-9)
                {
                    return Err(Error::Validation(format!("factorization {d} does not reproduce its distribution")));
                }
            }
        }
        self.factorizations = factorizations;
        Ok(self)
    }

    pub fn with_task_count(mut self, task_count: usize) -> Result<Self> {
        if task_count == 0 {
            return Err(Error::Validation("task count must be positive".into()));
        }
        self.task_count = task_count;
        Ok(self)
    }

    /// Keeps the listed distributions and the full report sets.
    pub fn subset(&self, indices: &[usize]) -> Self {
        let pick = |rep: &AgentReports<S>| AgentReports {
            values: rep.values.clone(),
            map: indices.iter().map(|d| rep.map[*d].clone()).collect(),
        };
        Self {
            distributions: indices.iter().map(|d| self.distributions[*d].clone()).collect(),
            reports: self.reports.iter().map(pick).collect(),
            task_count: self.task_count,
            factorizations: indices.iter().map(|d| self.factorizations[*d].clone()).collect(),
            name: self.name.clone(),
        }
    }

    pub fn distributions(&self) -> &[JointDistribution<S>] {
        &self.distributions
    }

    pub fn distribution(&self, d: usize) -> &JointDistribution<S> {
        &self.distributions[d]
    }

    pub fn distribution_count(&self) -> usize {
        self.distributions.len()
    }

    pub fn agent_count(&self) -> usize {
        self.distributions[0].agent_count()
    }

    pub fn state_count(&self) -> usize {
        self.distributions[0].state_count()
    }

    pub fn signal_count(&self, agent: usize) -> usize {
        self.distributions[0].signal_count(agent)
    }

    pub fn task_count(&self) -> usize {
        self.task_count
    }

    pub fn agent_reports(&self, agent: usize) -> &AgentReports<S> {
        &self.reports[agent]
    }

    pub fn reports(&self, agent: usize) -> &[ReportValue<S>] {
        &self.reports[agent].values
    }

    pub fn report_count(&self, agent: usize) -> usize {
        self.reports[agent].values.len()
    }

    pub fn report_counts(&self) -> Vec<usize> {
        self.reports.iter().map(|r| r.values.len()).collect()
    }

    pub fn report_of(&self, d: usize, agent: usize, signal: usize) -> Option<usize> {
        self.reports[agent].map[d][signal]
    }

    pub fn factorization(&self, d: usize) -> Result<&ConditionalIndependent<S>> {
        self.factorizations[d].as_ref().ok_or(Error::MissingFactorization(d))
    }

    pub fn factorizations(&self) -> &[Option<ConditionalIndependent<S>>] {
        &self.factorizations
    }

    /// Mixed radix over the other agents' report sets, in agent order.
    pub fn peer_radix(&self, agent: usize) -> MixedRadix {
        MixedRadix::new((0..self.agent_count()).filter(|j| *j != agent).map(|j| self.report_count(j)).collect())
    }

    pub fn peer_report_count(&self, agent: usize) -> usize {
        self.peer_radix(agent).len()
    }

    /// Positive-mass signals of `agent` under distribution `d`.
    pub fn realized_signals(&self, d: usize, agent: usize) -> Vec<RealizedSignal<S>> {
        self.distributions[d]
            .signal_marginal(agent)
            .into_iter()
            .enumerate()
            .filter(|(_, m)| *m > S::zero())
            .map(|(signal, mass)| RealizedSignal {
                signal,
                mass,
                report: self.reports[agent].map[d][signal].expect("validated at construction"),
            })
            .collect()
    }

    /// `μ(s_i, r_{-i})` as an `|S_i| × |R_{-i}|` matrix.
    pub fn signal_peer_joint(&self, d: usize, agent: usize) -> Matrix<S> {
        let radix = self.peer_radix(agent);
        let mut out = Matrix::zeros(self.signal_count(agent), radix.len());
        let mut peer = Vec::with_capacity(self.agent_count());
        self.distributions[d].for_each_cell(|_, s, p| {
            peer.clear();
            for (j, sj) in s.iter().enumerate() {
                if j != agent {
                    peer.push(self.reports[j].map[d][*sj].expect("validated at construction"));
                }
            }
            let col = radix.encode(&peer);
            out.set(s[agent], col, out.get(s[agent], col) + p);
        });
        out
    }

    /// The report joint `A_μ[r_i, r_{-i}] = μ(r_i, r_{-i})`.
    pub fn report_joint(&self, d: usize, agent: usize) -> Matrix<S> {
        let by_signal = self.signal_peer_joint(d, agent);
        let mut out = Matrix::zeros(self.report_count(agent), by_signal.cols());
        for (s, key) in self.reports[agent].map[d].iter().enumerate() {
            if let Some(r) = key {
                for c in 0..by_signal.cols() {
                    out.set(*r, c, out.get(*r, c) + by_signal.get(s, c));
                }
            }
        }
        out
    }

    /// `μ(r_{-i})`.
    pub fn peer_marginal(&self, d: usize, agent: usize) -> Vec<S> {
        let joint = self.signal_peer_joint(d, agent);
        (0..joint.cols()).map(|c| joint.column(c).into_iter().sum()).collect()
    }

    /// `μ(r_i)`.
    pub fn own_marginal(&self, d: usize, agent: usize) -> Vec<S> {
        let joint = self.report_joint(d, agent);
        (0..joint.rows()).map(|r| joint.row(r).iter().copied().sum()).collect()
    }

    /// `μ(r_{-i} | s_i)`.
    pub fn peer_posterior(&self, d: usize, agent: usize, signal: usize) -> Result<Vec<S>> {
        let joint = self.signal_peer_joint(d, agent);
        normalized_row(&joint, signal).ok_or(Error::ZeroMarginal { agent, signal })
    }

    /// `μ(r_{-i} | s_i)` for every positive-mass signal, alongside the signal data.
    pub fn peer_posteriors(&self, d: usize, agent: usize) -> Vec<(RealizedSignal<S>, Vec<S>)> {
        let joint = self.signal_peer_joint(d, agent);
        self.realized_signals(d, agent)
            .into_iter()
            .map(|rs| {
                let q = normalized_row(&joint, rs.signal).expect("positive mass");
                (rs, q)
            })
            .collect()
    }

    /// `μ(r_{-i} | r_i)`.
    pub fn report_posterior(&self, d: usize, agent: usize, report: usize) -> Result<Vec<S>> {
        let joint = self.report_joint(d, agent);
        if report >= joint.rows() {
            return Err(Error::Index(format!("report {report} of agent {agent}")));
        }
        normalized_row(&joint, report)
            .ok_or_else(|| Error::NotApplicable(format!("report {report} of agent {agent} is never realized")))
    }

    /// Delta matrix over the two agents' reports.
    pub fn report_delta(&self, d: usize) -> Result<DeltaMatrix<S>> {
        if self.agent_count() != 2 {
            return Err(Error::Arity { expected: 2, found: self.agent_count() });
        }
        Ok(DeltaMatrix::from_joint(&self.report_joint(d, 0)))
    }
}

fn normalized_row<S: Scalar>(m: &Matrix<S>, r: usize) -> Option<Vec<S>> {
    let row = m.row(r);
    let total: S = row.iter().copied().sum();
    (total > S::zero()).then(|| row.iter().map(|x| *x / total).collect())
}

fn build_reports<S: Scalar>(
    distributions: &[JointDistribution<S>],
    agent: usize,
    f: &ReportFunction<S>,
) -> Result<AgentReports<S>> {
    let mut registry = ReportRegistry::new();
    let mut map = Vec::with_capacity(distributions.len());
    match f {
        ReportFunction::Identity => {
            for label in &distributions[0].signals()[agent] {
                registry.intern(ReportValue::Symbol(label.clone()));
            }
            for mu in distributions {
                map.push((0..mu.signal_count(agent)).map(Some).collect());
            }
        }
        ReportFunction::Posterior | ReportFunction::Linear(_) => {
            if let ReportFunction::Linear(g) = f {
                if g.cols() != distributions[0].state_count() || g.rows() == 0 {
                    return Err(Error::Shape(format!(
                        "linear property has shape {}×{}, expected L×{}",
                        g.rows(),
                        g.cols(),
                        distributions[0].state_count()
                    )));
                }
            }
            for mu in distributions {
                let marg = mu.signal_marginal(agent);
                let mut row = Vec::with_capacity(marg.len());
                for (s, m) in marg.iter().enumerate() {
                    if *m > S::zero() {
                        let post = mu.posterior_state(agent, s)?;
                        let value = match f {
                            ReportFunction::Linear(g) => g.mul_vec(&post),
                            _ => post,
                        };
                        row.push(Some(registry.intern(ReportValue::Vector(value))));
                    } else {
                        row.push(None);
                    }
                }
                map.push(row);
            }
        }
        ReportFunction::Table(table) => {
            if table.len() != distributions.len() {
                return Err(Error::Shape(format!(
                    "report table for agent {agent} covers {} of {} distributions",
                    table.len(),
                    distributions.len()
                )));
            }
            for (mu, values) in distributions.iter().zip(table) {
                if values.len() != mu.signal_count(agent) {
                    return Err(Error::Shape(format!("report table for agent {agent} has wrong signal count")));
                }
                map.push(values.iter().map(|v| Some(registry.intern(v.clone()))).collect());
            }
        }
    }
    Ok(AgentReports { values: registry.into_values(), map })
}
