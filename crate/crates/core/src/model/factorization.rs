use serde::Serialize;

use super::distribution::{default_labels, JointDistribution};
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::scalar::{tolerance, Scalar};
use crate::tensor::MixedRadix;

/// Prior over `Ω` plus one `|S_i| × |Ω|` column-stochastic likelihood per agent.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConditionalIndependent<S> {
    prior: Vec<S>,
    likelihoods: Vec<Matrix<S>>,
}

/// `μ(s_{-i} | ω)` as an `|S_{-i}| × |Ω|` matrix, peers in agent order.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LikelihoodMatrix<S> {
    pub values: Matrix<S>,
}

impl<S: Scalar> ConditionalIndependent<S> {
    pub fn new(prior: Vec<S>, likelihoods: Vec<Matrix<S>>) -> Result<Self> {
        let omega = prior.len();
        if omega == 0 || likelihoods.is_empty() {
            return Err(Error::Shape("empty prior or no agents".into()));
        }
        let tol = S::tol(tolerance::MASS);
        if prior.iter().any(|p| !p.is_finite() || *p < S::zero())
            || (prior.iter().copied().sum::<S>() - S::one()).abs() > tol
        {
            return Err(Error::Validation("prior is not a probability vector".into()));
        }
        for (i, l) in likelihoods.iter().enumerate() {
            if l.cols() != omega {
                return Err(Error::Shape(format!(
                    "likelihood of agent {i} has {} columns, prior has {omega} states",
                    l.cols()
                )));
            }
            for w in 0..omega {
                let col = l.column(w);
                if col.iter().any(|x| !x.is_finite() || *x < S::zero())
                    || (col.iter().copied().sum::<S>() - S::one()).abs() > tol
                {
                    return Err(Error::Validation(format!("likelihood of agent {i}, state {w} is not a distribution")));
                }
            }
        }
        Ok(Self { prior, likelihoods })
    }

    pub fn prior(&self) -> &[S] {
        &self.prior
    }

    pub fn likelihoods(&self) -> &[Matrix<S>] {
        &self.likelihoods
    }

    pub fn likelihood(&self, agent: usize) -> &Matrix<S> {
        &self.likelihoods[agent]
    }

    pub fn signal_counts(&self) -> Vec<usize> {
        self.likelihoods.iter().map(Matrix::rows).collect()
    }

    /// The product-form joint `μ(ω) ∏ μ(s_i|ω)` with default labels.
    pub fn joint(&self) -> Result<JointDistribution<S>> {
        let (states, signals) = default_labels(self.prior.len(), &self.signal_counts());
        self.joint_labeled(states, signals)
    }

    pub fn joint_labeled(&self, states: Vec<String>, signals: Vec<Vec<String>>) -> Result<JointDistribution<S>> {
        if states.len() != self.prior.len() || signals.iter().map(Vec::len).ne(self.signal_counts()) {
            return Err(Error::Shape("labels do not match the factorization".into()));
        }
        let radix = MixedRadix::new(self.signal_counts());
        let mut mass = Vec::with_capacity(self.prior.len() * radix.len());
        let mut digits = vec![0; self.likelihoods.len()];
        for (w, pw) in self.prior.iter().enumerate() {
            for k in 0..radix.len() {
                radix.decode_into(k, &mut digits);
                let mut p = *pw;
                for (i, s) in digits.iter().enumerate() {
                    p *= self.likelihoods[i].get(*s, w);
                }
                mass.push(p);
            }
        }
        JointDistribution::new(states, signals, mass)
    }

    /// `P^μ_i`: row `s_{-i}` (mixed radix over the other agents), column `ω`.
    pub fn peer_likelihood(&self, agent: usize) -> LikelihoodMatrix<S> {
        let peers: Vec<usize> = (0..self.likelihoods.len()).filter(|j| *j != agent).collect();
        let radix = MixedRadix::new(peers.iter().map(|j| self.likelihoods[*j].rows()).collect());
        let mut digits = vec![0; peers.len()];
        let values = Matrix::from_fn(radix.len(), self.prior.len(), |row, w| {
            radix.decode_into(row, &mut digits);
            peers.iter().zip(&digits).map(|(j, s)| self.likelihoods[*j].get(*s, w)).product()
        });
        LikelihoodMatrix { values }
    }

    /// Replaces one agent's likelihood, keeping everything else.
    pub fn with_likelihood(&self, agent: usize, likelihood: Matrix<S>) -> Result<Self> {
        let mut likelihoods = self.likelihoods.clone();
        likelihoods[agent] = likelihood;
        Self::new(self.prior.clone(), likelihoods)
    }
}

/// Builds the conditionally independent joint and keeps its factorization.
pub fn conditional_independent_product<S: Scalar>(
    prior: Vec<S>,
    likelihoods: Vec<Matrix<S>>,
) -> Result<(JointDistribution<S>, ConditionalIndependent<S>)> {
    let ci = ConditionalIndependent::new(prior, likelihoods)?;
    Ok((ci.joint()?, ci))
}

/// Binary symmetric channel likelihood with the given flip probability.
pub fn binary_symmetric<S: Scalar>(flip: S) -> Matrix<S> {
    let stay = S::one() - flip;
    Matrix::from_rows(&[vec![stay, flip], vec![flip, stay]])
}
