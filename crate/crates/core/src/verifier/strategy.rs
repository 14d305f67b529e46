use rand::Rng;
use rand_distr::{Distribution, Exp1};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::model::ProblemInstance;
use crate::scalar::{tolerance, Scalar};

/// Per-task maps `σ^{(t)}: S_i → Δ(R_i)` as `|S_i| × |R_i|` row-stochastic
/// matrices. A single map is a consistent strategy used on every task.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Strategy<S> {
    maps: Vec<Matrix<S>>,
}

impl<S: Scalar> Strategy<S> {
    pub fn new(maps: Vec<Matrix<S>>) -> Result<Self> {
        let first = maps.first().ok_or_else(|| Error::Shape("a strategy needs at least one map".into()))?;
        let (rows, cols) = (first.rows(), first.cols());
        for (t, m) in maps.iter().enumerate() {
            if m.rows() != rows || m.cols() != cols {
                return Err(Error::Shape(format!("map for task {t} has a different shape")));
            }
            for s in 0..rows {
                let row = m.row(s);
                let total: S = row.iter().copied().sum();
                if row.iter().any(|x| !x.is_finite() || *x < S::zero())
                    || (total - S::one()).abs() > S::tol(tolerance::MASS)
                {
                    return Err(Error::Validation(format!("row {s} of the map for task {t} is not a distribution")));
                }
            }
        }
        Ok(Self { maps })
    }

    pub fn consistent(map: Matrix<S>) -> Result<Self> {
        Self::new(vec![map])
    }

    /// Deterministic map from `choice[s]`.
    pub fn deterministic_map(choice: &[usize], reports: usize) -> Matrix<S> {
        Matrix::from_fn(choice.len(), reports, |s, r| if choice[s] == r { S::one() } else { S::zero() })
    }

    /// The truthful consistent strategy of `agent` under distribution `d`.
    /// Zero-mass signals have no truthful report and are sent to report 0.
    pub fn truthful(instance: &ProblemInstance<S>, d: usize, agent: usize) -> Self {
        Self { maps: vec![Self::deterministic_map(&truthful_choice(instance, d, agent), instance.report_count(agent))] }
    }

    pub fn truthful_profile(instance: &ProblemInstance<S>, d: usize) -> Vec<Self> {
        (0..instance.agent_count()).map(|i| Self::truthful(instance, d, i)).collect()
    }

    /// A consistent strategy with rows drawn uniformly from the simplex.
    pub fn random_mixed(signals: usize, reports: usize, rng: &mut impl Rng) -> Self {
        let map = Matrix::from_fn(signals, reports, |_, _| {
            let x: f64 = Exp1.sample(rng);
            S::lit(x)
        });
        let rows: Vec<Vec<S>> = map
            .to_rows()
            .into_iter()
            .map(|row| {
                let total: S = row.iter().copied().sum();
                row.into_iter().map(|x| x / total).collect()
            })
            .collect();
        Self { maps: vec![Matrix::from_rows(&rows)] }
    }

    pub fn is_consistent(&self) -> bool {
        self.maps.len() == 1
    }

    pub fn maps(&self) -> &[Matrix<S>] {
        &self.maps
    }

    pub fn map_for_task(&self, t: usize) -> &Matrix<S> {
        if self.maps.len() == 1 {
            &self.maps[0]
        } else {
            &self.maps[t]
        }
    }

    /// Expands to one explicit map per task.
    pub fn per_task(&self, task_count: usize) -> Self {
        Self { maps: (0..task_count).map(|t| self.map_for_task(t).clone()).collect() }
    }

    /// Replaces the map of one task.
    pub fn with_task_map(&self, task_count: usize, t: usize, map: Matrix<S>) -> Self {
        let mut out = self.per_task(task_count);
        out.maps[t] = map;
        out
    }

    pub fn signal_count(&self) -> usize {
        self.maps[0].rows()
    }

    pub fn report_count(&self) -> usize {
        self.maps[0].cols()
    }
}

pub(crate) fn truthful_choice<S: Scalar>(instance: &ProblemInstance<S>, d: usize, agent: usize) -> Vec<usize> {
    (0..instance.signal_count(agent)).map(|s| instance.report_of(d, agent, s).unwrap_or(0)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn rows_must_be_distributions() {
        let bad = Matrix::from_rows(&[vec![0.5, 0.4]]);
        assert!(matches!(Strategy::<f64>::consistent(bad), Err(Error::Validation(_))));
        let ok = Matrix::from_rows(&[vec![0.5, 0.5], vec![1.0, 0.0]]);
        assert!(Strategy::<f64>::consistent(ok).unwrap().is_consistent());
    }

    #[test]
    fn random_mixed_rows_sum_to_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let s = Strategy::<f64>::random_mixed(4, 3, &mut rng);
        assert!(Strategy::new(s.maps().to_vec()).is_ok());
    }
}
