//! Payment rules: scoring tables, the factored `(D, e, h)` form, CA, Kong and symmetrization.

pub mod ca;
pub mod deh;
pub mod kong;
pub mod scoring;
pub mod symmetrize;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::scalar::Scalar;

pub use ca::{ca_applicable, ca_mechanism, ca_payment, Applicability};
pub use deh::{extract_deh, extract_power_diagram, scoring_from_deh, FactoredParams, ReportParams};
pub use kong::{kong_mechanism, kong_payment, shared_prior};
pub use scoring::{shape_of, AgentScoring, ScoringMechanism};
pub use symmetrize::{permutations, symmetrize, Symmetrized, DEFAULT_MAX_TASKS};

/// A multi-task payment rule over canonical report keys.
pub trait PaymentRule<S>: Sync {
    fn agent_count(&self) -> usize;

    fn task_count(&self) -> usize;

    /// Total payment to `agent` given its report on each task and the peer
    /// report tuple (as a peer-radix index) on each task.
    fn total_payment(&self, agent: usize, own: &[usize], peers: &[usize]) -> S;

    /// `(|R_i|, |R_{-i}|)` when the rule is defined on a fixed report alphabet.
    fn report_shape(&self, _agent: usize) -> Option<(usize, usize)> {
        None
    }

    /// Exact expected total payment when tasks are independent and task `t`
    /// draws `(own, peer)` from `joints[t]`. `None` means no shortcut exists
    /// and callers must enumerate.
    fn factored_expectation(&self, _agent: usize, _joints: &[Matrix<S>]) -> Option<S> {
        None
    }
}

/// A report linear in the posterior: `r = G · μ(ω | s)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LinearProperty<S> {
    g: Matrix<S>,
}

impl<S: Scalar> LinearProperty<S> {
    pub fn new(g: Matrix<S>) -> Result<Self> {
        if g.rows() == 0 || g.cols() == 0 {
            return Err(Error::Shape("a linear property needs at least one row and one state".into()));
        }
        Ok(Self { g })
    }

    pub fn matrix(&self) -> &Matrix<S> {
        &self.g
    }

    pub fn state_count(&self) -> usize {
        self.g.cols()
    }

    pub fn apply(&self, posterior: &[S]) -> Vec<S> {
        self.g.mul_vec(posterior)
    }
}
