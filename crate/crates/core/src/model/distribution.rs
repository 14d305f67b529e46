use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::scalar::{tolerance, Scalar};
use crate::tensor::MixedRadix;

/// A probability tensor over `Ω × S_1 × … × S_n`, stored row-major with the
/// state axis first and agent `n` fastest.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct JointDistribution<S> {
    states: Vec<String>,
    signals: Vec<Vec<String>>,
    mass: Vec<S>,
    #[serde(skip)]
    radix: MixedRadix,
}

impl<S: Scalar> JointDistribution<S> {
    /// Validates nonnegativity, shape and unit total mass.
    pub fn new(states: Vec<String>, signals: Vec<Vec<String>>, mass: Vec<S>) -> Result<Self> {
        let radix = Self::radix_for(&states, &signals)?;
        if mass.len() != radix.len() {
            return Err(Error::Shape(format!(
                "mass has {} entries, expected {} ({:?})",
                mass.len(),
                radix.len(),
                radix.dims()
            )));
        }
        if let Some((k, x)) = mass.iter().enumerate().find(|(_, x)| !x.is_finite() || **x < S::zero()) {
            return Err(Error::Validation(format!("mass entry {k} is {x}, expected a finite nonnegative value")));
        }
        let total: S = mass.iter().copied().sum();
        if (total - S::one()).abs() > S::tol(tolerance::MASS) {
            return Err(Error::Validation(format!("total mass is {total}, expected 1")));
        }
        Ok(Self { states, signals, mass, radix })
    }

    /// Normalizes nonnegative `weights` before validating.
    pub fn from_weights(states: Vec<String>, signals: Vec<Vec<String>>, weights: Vec<S>) -> Result<Self> {
        let total: S = weights.iter().copied().sum();
        if !(total > S::zero()) {
            return Err(Error::Validation("weights sum to zero".into()));
        }
        Self::new(states, signals, weights.into_iter().map(|w| w / total).collect())
    }

    /// Default labels `w0, w1, …` and `s0, s1, …`.
    pub fn from_weights_unlabeled(state_count: usize, signal_counts: &[usize], weights: Vec<S>) -> Result<Self> {
        let (states, signals) = default_labels(state_count, signal_counts);
        Self::from_weights(states, signals, weights)
    }

    fn radix_for(states: &[String], signals: &[Vec<String>]) -> Result<MixedRadix> {
        if states.is_empty() {
            return Err(Error::Shape("state space is empty".into()));
        }
        if signals.is_empty() || signals.iter().any(Vec::is_empty) {
            return Err(Error::Shape("every agent needs at least one signal".into()));
        }
        let mut dims = vec![states.len()];
        dims.extend(signals.iter().map(Vec::len));
        Ok(MixedRadix::new(dims))
    }

    pub fn states(&self) -> &[String] {
        &self.states
    }

    pub fn signals(&self) -> &[Vec<String>] {
        &self.signals
    }

    pub fn mass(&self) -> &[S] {
        &self.mass
    }

    pub fn agent_count(&self) -> usize {
        self.signals.len()
    }

    pub fn state_count(&self) -> usize {
        self.states.len()
    }

    pub fn signal_count(&self, agent: usize) -> usize {
        self.signals[agent].len()
    }

    pub fn signal_counts(&self) -> Vec<usize> {
        self.signals.iter().map(Vec::len).collect()
    }

    /// Same label spaces.
    pub fn same_spaces(&self, other: &Self) -> bool {
        self.states == other.states && self.signals == other.signals
    }

    pub fn entry(&self, state: usize, signals: &[usize]) -> S {
        let mut digits = Vec::with_capacity(signals.len() + 1);
        digits.push(state);
        digits.extend_from_slice(signals);
        self.mass[self.radix.encode(&digits)]
    }

    /// Calls `f(state, signals, mass)` for every cell with positive mass.
    pub fn for_each_cell(&self, mut f: impl FnMut(usize, &[usize], S)) {
        let mut digits = vec![0; self.radix.dims().len()];
        for (k, p) in self.mass.iter().enumerate() {
            if *p > S::zero() {
                self.radix.decode_into(k, &mut digits);
                f(digits[0], &digits[1..], *p);
            }
        }
    }

    pub fn state_marginal(&self) -> Vec<S> {
        let mut out = vec![S::zero(); self.state_count()];
        self.for_each_cell(|w, _, p| out[w] += p);
        out
    }

    pub fn signal_marginal(&self, agent: usize) -> Vec<S> {
        let mut out = vec![S::zero(); self.signal_count(agent)];
        self.for_each_cell(|_, s, p| out[s[agent]] += p);
        out
    }

    /// `μ(s_i, s_j)` as an `|S_i| × |S_j|` matrix.
    pub fn pair_joint(&self, i: usize, j: usize) -> Matrix<S> {
        let mut out = Matrix::zeros(self.signal_count(i), self.signal_count(j));
        self.for_each_cell(|_, s, p| {
            let cur = out.get(s[i], s[j]);
            out.set(s[i], s[j], cur + p);
        });
        out
    }

    /// Radix over the other agents' signals, in agent order.
    pub fn peer_signal_radix(&self, agent: usize) -> MixedRadix {
        MixedRadix::new((0..self.agent_count()).filter(|j| *j != agent).map(|j| self.signal_count(j)).collect())
    }

    fn check_signal(&self, agent: usize, signal: usize) -> Result<S> {
        if agent >= self.agent_count() || signal >= self.signal_count(agent) {
            return Err(Error::Index(format!("agent {agent} signal {signal}")));
        }
        let m = self.signal_marginal(agent)[signal];
        if m > S::zero() {
            Ok(m)
        } else {
            Err(Error::ZeroMarginal { agent, signal })
        }
    }

    /// `μ(ω | s_i)`.
    pub fn posterior_state(&self, agent: usize, signal: usize) -> Result<Vec<S>> {
        let norm = self.check_signal(agent, signal)?;
        let mut out = vec![S::zero(); self.state_count()];
        self.for_each_cell(|w, s, p| {
            if s[agent] == signal {
                out[w] += p;
            }
        });
        out.iter_mut().for_each(|x| *x /= norm);
        Ok(out)
    }

    /// `μ(s_{-i} | s_i)` indexed by [`Self::peer_signal_radix`].
    pub fn posterior_peer_signals(&self, agent: usize, signal: usize) -> Result<Vec<S>> {
        let norm = self.check_signal(agent, signal)?;
        let radix = self.peer_signal_radix(agent);
        let mut out = vec![S::zero(); radix.len()];
        let mut peer = Vec::with_capacity(self.agent_count());
        self.for_each_cell(|_, s, p| {
            if s[agent] == signal {
                peer.clear();
                peer.extend(s.iter().enumerate().filter(|(j, _)| *j != agent).map(|(_, x)| *x));
                out[radix.encode(&peer)] += p;
            }
        });
        out.iter_mut().for_each(|x| *x /= norm);
        Ok(out)
    }

    /// `‖μ − λ‖₁` over the full tensor.
    pub fn l1_distance(&self, other: &Self) -> S {
        crate::scalar::l1_distance(&self.mass, &other.mass)
    }

    pub fn has_full_support(&self) -> bool {
        self.mass.iter().all(|p| *p > S::zero())
    }
}

pub(crate) fn default_labels(state_count: usize, signal_counts: &[usize]) -> (Vec<String>, Vec<Vec<String>>) {
    let states = (0..state_count).map(|k| format!("w{k}")).collect();
    let signals = signal_counts.iter().map(|n| (0..*n).map(|k| format!("s{k}")).collect()).collect();
    (states, signals)
}

/// A two-agent distribution with a single state, from an `|S_1| × |S_2|` table.
pub fn two_agent_table<S: Scalar>(table: &[Vec<S>]) -> Result<JointDistribution<S>> {
    let rows = table.len();
    let cols = table.first().map_or(0, Vec::len);
    if table.iter().any(|r| r.len() != cols) {
        return Err(Error::Shape("ragged signal table".into()));
    }
    let (states, signals) = default_labels(1, &[rows, cols]);
    JointDistribution::new(states, signals, table.iter().flatten().copied().collect())
}
