use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::mechanisms::LinearProperty;
use crate::model::{ConditionalIndependent, ProblemInstance, ReportFunction};
use crate::scalar::{dot, max_abs_diff, tolerance, Scalar};

const MIN_DELTA: f64 = 1e-9;
const MIN_STATE_GAP: f64 = 1e-6;

/// Two conditionally independent distributions on which a linear property
/// violates marginal relevance at agent 0's signal `signal`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LinearCounterexample<S> {
    pub base: ConditionalIndependent<S>,
    pub modified: ConditionalIndependent<S>,
    pub property: Matrix<S>,
    pub signal: usize,
    pub delta: S,
    pub beta: Vec<S>,
    pub alpha: Vec<S>,
    /// `max |μ*(r_2) − μ'(r_2)|`.
    pub marginal_gap: S,
    /// `‖G μ'(ω|s*) − G μ*(ω|s*)‖∞`.
    pub report_gap: S,
    /// `max |μ*(r_2|s*) − μ'(r_2|s*)|`.
    pub posterior_gap: S,
}

impl<S: Scalar> LinearCounterexample<S> {
    /// `{μ*, μ'}` with both agents reporting `G · μ(ω | s_i)`.
    pub fn instance(&self, task_count: usize) -> Result<ProblemInstance<S>> {
        let dists = vec![self.base.joint()?, self.modified.joint()?];
        let g = ReportFunction::Linear(self.property.clone());
        ProblemInstance::new(dists, vec![g.clone(), g], task_count)?
            .with_factorizations(vec![Some(self.base.clone()), Some(self.modified.clone())])
    }
}

/// A distribution with one agent's state posterior shifted while its
/// posterior over peer signals is unchanged.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RankCounterexample<S> {
    pub base: ConditionalIndependent<S>,
    pub modified: ConditionalIndependent<S>,
    pub agent: usize,
    pub signal: usize,
    pub delta: S,
    pub null_vector: Vec<S>,
    /// `max |μ̃(s_{-i}|s_i) − μ(s_{-i}|s_i)|`.
    pub peer_posterior_gap: S,
    /// `max |μ̃(ω|s_i) − μ(ω|s_i)|`.
    pub state_posterior_gap: S,
}

impl<S: Scalar> RankCounterexample<S> {
    /// `{μ, μ̃}` with posterior reports for every agent.
    pub fn instance(&self, task_count: usize) -> Result<ProblemInstance<S>> {
        let dists = vec![self.base.joint()?, self.modified.joint()?];
        let n = dists[0].agent_count();
        ProblemInstance::new(dists, vec![ReportFunction::Posterior; n], task_count)?
            .with_factorizations(vec![Some(self.base.clone()), Some(self.modified.clone())])
    }
}

fn signal_mass<S: Scalar>(prior: &[S], likelihood: &Matrix<S>, signal: usize) -> S {
    prior.iter().enumerate().map(|(w, p)| *p * likelihood.get(signal, w)).sum()
}

fn state_posterior<S: Scalar>(prior: &[S], likelihood: &Matrix<S>, signal: usize) -> Option<Vec<S>> {
    let m = signal_mass(prior, likelihood, signal);
    (m > S::zero()).then(|| prior.iter().enumerate().map(|(w, p)| *p * likelihood.get(signal, w) / m).collect())
}

/// Likelihood giving posterior `μ(ω|s) + shift` at `signal` with the same
/// signal mass; other rows absorb the change proportionally.
fn shift_posterior<S: Scalar>(prior: &[S], likelihood: &Matrix<S>, signal: usize, shift: &[S]) -> Option<Matrix<S>> {
    let mass = signal_mass(prior, likelihood, signal);
    let mut out = likelihood.clone();
    for (w, p) in prior.iter().enumerate() {
        if shift[w] == S::zero() {
            continue;
        }
        if *p <= S::zero() {
            return None;
        }
        let old = likelihood.get(signal, w);
        let new = old + mass * shift[w] / *p;
        if !(S::zero()..=S::one()).contains(&new) {
            return None;
        }
        let rest = S::one() - old;
        if rest <= S::zero() {
            return None;
        }
        let scale = (S::one() - new) / rest;
        for s in 0..likelihood.rows() {
            out.set(s, w, if s == signal { new } else { likelihood.get(s, w) * scale });
        }
    }
    Some(out)
}

fn normalize_inf<S: Scalar>(v: Vec<S>) -> Vec<S> {
    let m = v.iter().fold(S::zero(), |a, x| a.max(x.abs()));
    v.into_iter().map(|x| x / m).collect()
}

/// Deterministic asymmetric blend used when no signal admits the construction.
fn perturb_likelihood<S: Scalar>(likelihood: &Matrix<S>, weight: S) -> Matrix<S> {
    let (rows, cols) = (likelihood.rows(), likelihood.cols());
    let mut out = likelihood.clone();
    for w in 0..cols {
        let raw: Vec<S> = (0..rows).map(|s| S::from_usize_lossy((s + 1) * (w + 2) % (rows + 1) + 1)).collect();
        let total: S = raw.iter().copied().sum();
        for s in 0..rows {
            out.set(s, w, (S::one() - weight) * likelihood.get(s, w) + weight * raw[s] / total);
        }
    }
    out
}

/// Builds `μ*` and `μ'` from a two-agent conditionally independent base where
/// `[G; 1ᵀ]` is rank deficient, so that agent 1's report marginal and agent
/// 0's posterior over it at one signal agree while agent 0's report differs.
pub fn gen_linear_counterexample<S: Scalar>(
    prior: &[S],
    base_likelihoods: &[Matrix<S>],
    property: &LinearProperty<S>,
    delta: S,
) -> Result<LinearCounterexample<S>> {
    if base_likelihoods.len() != 2 {
        return Err(Error::Arity { expected: 2, found: base_likelihoods.len() });
    }
    let omega = prior.len();
    if property.state_count() != omega {
        return Err(Error::Shape(format!("property acts on {} states, prior has {omega}", property.state_count())));
    }
    let base = ConditionalIndependent::new(prior.to_vec(), base_likelihoods.to_vec())?;
    let g = property.matrix();
    let rank_tol = S::lit(tolerance::RANK);
    let stacked = g.stack_row(&vec![S::one(); omega]);
    if stacked.rank() >= omega {
        return Err(Error::NotApplicable("[G; 1ᵀ] has full column rank, the property is posterior-equivalent".into()));
    }
    let beta = (1..omega)
        .map(|k| {
            (0..omega)
                .map(|w| {
                    if w == k {
                        S::one()
                    } else if w == 0 {
                        -S::one()
                    } else {
                        S::zero()
                    }
                })
                .collect::<Vec<S>>()
        })
        .map(|b| {
            let norm = g.mul_vec(&b).into_iter().fold(S::zero(), |a, x| a.max(x.abs()));
            (b, norm)
        })
        .fold(None, |best: Option<(Vec<S>, S)>, c| match best {
            Some(b) if b.1 >= c.1 => Some(b),
            _ => Some(c),
        })
        .filter(|(_, n)| *n > rank_tol)
        .map(|(b, _)| b)
        .ok_or_else(|| Error::NotApplicable("the property is constant in the posterior".into()))?;
    let alpha = stacked
        .scale_columns(prior)
        .svd()
        .null_space(rank_tol)
        .into_iter()
        .next()
        .map(normalize_inf)
        .ok_or_else(|| Error::Numerical("no null vector for a rank-deficient matrix".into()))?;

    for attempt in 0..4 {
        let l1 = if attempt == 0 {
            base.likelihood(0).clone()
        } else {
            perturb_likelihood(base.likelihood(0), S::lit(0.05 * attempt as f64))
        };
        let start = base.with_likelihood(0, l1.clone())?;
        let q_star = start.likelihood(1).clone();
        let mut order: Vec<usize> = (0..l1.rows()).filter(|s| signal_mass(prior, &l1, *s) > S::zero()).collect();
        order.sort_by(|a, b| signal_mass(prior, &l1, *b).partial_cmp(&signal_mass(prior, &l1, *a)).expect("finite"));
        for signal in order {
            let p_star = state_posterior(prior, &l1, signal).expect("positive mass");
            if dot(&alpha, &p_star).abs() <= rank_tol {
                continue;
            }
            let mut d = delta;
            while d >= S::lit(MIN_DELTA) {
                if let Some(found) = try_linear(&start, &q_star, &l1, property, &beta, &alpha, &p_star, signal, d)? {
                    return Ok(found);
                }
                d /= S::lit(2.0);
            }
        }
    }
    Err(Error::DegenerateConstruction("no valid perturbation size was found".into()))
}

#[allow(clippy::too_many_arguments)]
fn try_linear<S: Scalar>(
    start: &ConditionalIndependent<S>,
    q_star: &Matrix<S>,
    l1: &Matrix<S>,
    property: &LinearProperty<S>,
    beta: &[S],
    alpha: &[S],
    p_star: &[S],
    signal: usize,
    delta: S,
) -> Result<Option<LinearCounterexample<S>>> {
    let prior = start.prior();
    let shift: Vec<S> = beta.iter().map(|b| *b * delta).collect();
    let p_prime: Vec<S> = p_star.iter().zip(&shift).map(|(p, s)| *p + *s).collect();
    if p_prime.iter().any(|p| *p < S::zero()) {
        return Ok(None);
    }
    let Some(l1_prime) = shift_posterior(prior, l1, signal, &shift) else { return Ok(None) };
    let denom = dot(alpha, &p_prime);
    if denom.abs() <= S::tol(tolerance::RANK) {
        return Ok(None);
    }
    let qb = q_star.mul_vec(beta);
    let k: Vec<S> = qb.iter().map(|x| -delta * *x / denom).collect();
    let q_prime = Matrix::from_fn(q_star.rows(), q_star.cols(), |s, w| q_star.get(s, w) + k[s] * alpha[w]);
    if (0..q_prime.rows()).any(|s| q_prime.row(s).iter().any(|x| *x < S::zero())) {
        return Ok(None);
    }
    let Ok(modified) = ConditionalIndependent::new(prior.to_vec(), vec![l1_prime, q_prime]) else { return Ok(None) };
    let mut out = LinearCounterexample {
        base: start.clone(),
        modified,
        property: property.matrix().clone(),
        signal,
        delta,
        beta: beta.to_vec(),
        alpha: alpha.to_vec(),
        marginal_gap: S::zero(),
        report_gap: S::zero(),
        posterior_gap: S::zero(),
    };
    let inst = out.instance(1)?;
    out.marginal_gap = max_abs_diff(&inst.peer_marginal(0, 0), &inst.peer_marginal(1, 0));
    out.posterior_gap = max_abs_diff(&inst.peer_posterior(0, 0, signal)?, &inst.peer_posterior(1, 0, signal)?);
    out.report_gap = max_abs_diff(&property.apply(p_star), &property.apply(&p_prime));
    let tol = S::tol(tolerance::COLLISION);
    let distinct = inst.report_of(0, 0, signal) != inst.report_of(1, 0, signal);
    Ok((out.marginal_gap <= tol && out.posterior_gap <= tol && out.report_gap > tol && distinct).then_some(out))
}

/// Shifts agent `agent`'s state posterior at one signal along a null vector of
/// `P^μ_i`, keeping the prior and every other likelihood.
pub fn gen_rank_counterexample<S: Scalar>(
    base: &ConditionalIndependent<S>,
    agent: usize,
) -> Result<RankCounterexample<S>> {
    let n = base.likelihoods().len();
    if agent >= n {
        return Err(Error::Index(format!("agent {agent} of {n}")));
    }
    let omega = base.prior().len();
    let svd = base.peer_likelihood(agent).values.svd();
    let rank_tol = S::lit(tolerance::RANK);
    if svd.rank(rank_tol) >= omega {
        return Err(Error::NotApplicable(format!("P^μ_{agent} has full column rank")));
    }
    let a = svd
        .null_space(rank_tol)
        .into_iter()
        .next()
        .map(normalize_inf)
        .ok_or_else(|| Error::Numerical("no null vector for a rank-deficient matrix".into()))?;
    let prior = base.prior();
    let l = base.likelihood(agent);
    let joint = base.joint()?;
    let mut order: Vec<(usize, Vec<S>)> =
        (0..l.rows()).filter_map(|s| state_posterior(prior, l, s).map(|p| (s, p))).collect();
    let interior = |p: &[S]| p.iter().copied().fold(S::infinity(), S::min);
    order.sort_by(|x, y| interior(&y.1).partial_cmp(&interior(&x.1)).expect("finite"));
    for (signal, p) in order {
        let mut delta = S::lit(0.1);
        while delta >= S::lit(MIN_STATE_GAP) {
            let shift: Vec<S> = a.iter().map(|x| *x * delta).collect();
            let valid = p.iter().zip(&shift).all(|(x, s)| *x + *s >= S::zero());
            if let Some(l_prime) = valid.then(|| shift_posterior(prior, l, signal, &shift)).flatten() {
                let modified = base.with_likelihood(agent, l_prime)?;
                let tilde = modified.joint()?;
                let peer_gap = max_abs_diff(
                    &joint.posterior_peer_signals(agent, signal)?,
                    &tilde.posterior_peer_signals(agent, signal)?,
                );
                let state_gap = max_abs_diff(&p, &tilde.posterior_state(agent, signal)?);
                if peer_gap <= S::tol(tolerance::COLLISION) && state_gap >= S::lit(MIN_STATE_GAP) {
                    return Ok(RankCounterexample {
                        base: base.clone(),
                        modified,
                        agent,
                        signal,
                        delta,
                        null_vector: a,
                        peer_posterior_gap: peer_gap,
                        state_posterior_gap: state_gap,
                    });
                }
            }
            delta /= S::lit(2.0);
        }
    }
    Err(Error::DegenerateConstruction(format!("no valid shift for agent {agent}")))
}
