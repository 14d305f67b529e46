use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};
use serde::Serialize;

use super::relevance::check_stochastic_relevance;
use crate::error::{Error, Result};
use crate::geometry::{fit_power_diagram, FitOutcome, PowerDiagram};
use crate::linalg::Matrix;
use crate::mechanisms::{scoring_from_deh, FactoredParams, ReportParams, ScoringMechanism};
use crate::model::{JointDistribution, ProblemInstance};
use crate::scalar::Scalar;

/// Radius of an `ℓ₁` ball around `λ` on which the fitted diagram mechanism
/// stays strictly truthful.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BallEpsilon<S> {
    pub epsilon: S,
    /// Radius bounding the score change by `‖v^{r'} − v^r‖∞` for every pair.
    pub conservative_epsilon: S,
    pub epsilon0: S,
    /// Smallest separation of `λ`'s report posteriors under the fitted diagrams.
    pub min_gap: S,
    /// One diagram per agent, labels are report keys.
    pub diagrams: Vec<PowerDiagram<S>>,
    /// `λ(r_i)` per agent.
    pub report_masses: Vec<Vec<S>>,
}

impl<S: Scalar> BallEpsilon<S> {
    /// `p(r, a, b) = −v^r[a] + w^r` on every task.
    pub fn mechanism(&self, task_count: usize) -> Result<ScoringMechanism<S>> {
        let agents = self
            .diagrams
            .iter()
            .map(|diagram| {
                let peer = diagram.dimension();
                let hist = peer.pow(task_count as u32 - 1);
                (0..diagram.len())
                    .map(|r| {
                        let k = diagram.position(r).expect("labels are 0..|R_i|");
                        ReportParams {
                            d: Matrix::zeros(peer, hist),
                            e: diagram.sites()[k].clone(),
                            h: vec![diagram.weights()[k]; hist],
                        }
                    })
                    .collect()
            })
            .collect();
        scoring_from_deh(&FactoredParams { agents, task_count })
    }
}

fn inf_norm<S: Scalar>(v: &[S]) -> S {
    v.iter().fold(S::zero(), |a, x| a.max(x.abs()))
}

/// Robustness radius around a full-support, stochastically relevant `λ`
/// with identity reports.
pub fn ball_epsilon<S: Scalar>(lambda: &JointDistribution<S>) -> Result<BallEpsilon<S>> {
    if !lambda.has_full_support() {
        return Err(Error::NotApplicable("λ does not have full support".into()));
    }
    let instance = ProblemInstance::identity(vec![lambda.clone()], 1)?;
    if !check_stochastic_relevance(&instance).passed() {
        return Err(Error::NotApplicable("λ is not stochastically relevant".into()));
    }
    let mut diagrams = Vec::new();
    let mut report_masses = Vec::new();
    let mut min_gap = S::infinity();
    let mut agent_gaps = Vec::new();
    for i in 0..instance.agent_count() {
        let posteriors: Vec<Vec<S>> =
            (0..instance.report_count(i)).map(|r| instance.report_posterior(0, i, r)).collect::<Result<_>>()?;
        let labeled: Vec<(usize, Vec<Vec<S>>)> =
            posteriors.iter().enumerate().map(|(r, q)| (r, vec![q.clone()])).collect();
        let diagram = match fit_power_diagram(&labeled, S::zero())? {
            FitOutcome::Feasible { diagram, .. } => diagram,
            FitOutcome::Infeasible { best_margin } => {
                return Err(Error::Numerical(format!(
                    "distinct posteriors could not be separated (margin {best_margin})"
                )))
            }
        };
        let gap = posteriors
            .iter()
            .enumerate()
            .map(|(r, q)| diagram.margin_at(q, r))
            .collect::<Result<Vec<S>>>()?
            .into_iter()
            .fold(S::infinity(), S::min);
        min_gap = min_gap.min(gap);
        agent_gaps.push(gap);
        diagrams.push(diagram);
        report_masses.push(instance.own_marginal(0, i));
    }
    let epsilon0 = min_gap / S::lit(3.0);
    let two = S::lit(2.0);
    let half_mass = report_masses.iter().flatten().map(|m| *m / two).fold(S::infinity(), S::min);
    let mut epsilon = half_mass;
    let mut conservative = half_mass;
    for (i, diagram) in diagrams.iter().enumerate() {
        for (r, mass) in report_masses[i].iter().enumerate() {
            let k = diagram.position(r).expect("fitted labels");
            let v = &diagram.sites()[k];
            let norm = inf_norm(v);
            if norm > S::zero() {
                epsilon = epsilon.min(*mass * *mass * epsilon0 / norm);
            }
            let spread = diagram
                .sites()
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != k)
                .map(|(_, w)| inf_norm(&w.iter().zip(v).map(|(a, b)| *a - *b).collect::<Vec<_>>()))
                .fold(S::zero(), S::max);
            if spread > S::zero() {
                conservative = conservative.min(*mass * *mass * agent_gaps[i] / (S::lit(4.0) * spread));
            }
        }
    }
    Ok(BallEpsilon { epsilon, conservative_epsilon: conservative, epsilon0, min_gap, diagrams, report_masses })
}

/// `count` seeded distributions with `‖μ − λ‖₁ ≤ epsilon`, drawn by scaling a
/// random zero-sum direction to a uniform radius and rejecting negative cells.
pub fn sample_ball<S: Scalar>(
    lambda: &JointDistribution<S>,
    epsilon: S,
    count: usize,
    seed: u64,
) -> Result<Vec<JointDistribution<S>>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let radius = Uniform::new_inclusive(0.0, 1.0).map_err(|e| Error::Numerical(e.to_string()))?;
    let base: Vec<f64> = lambda.mass().iter().map(|x| x.to_f64_lossy()).collect();
    let eps = epsilon.to_f64_lossy();
    let mut out = Vec::with_capacity(count);
    let mut attempts = 0usize;
    while out.len() < count {
        attempts += 1;
        if attempts > 1000 * count.max(1) {
            return Err(Error::Numerical("ball sampling rejected too many candidates".into()));
        }
        let mut z: Vec<f64> = base.iter().map(|_| StandardNormal.sample(&mut rng)).collect();
        let mean = z.iter().sum::<f64>() / z.len() as f64;
        z.iter_mut().for_each(|x| *x -= mean);
        let l1: f64 = z.iter().map(|x| x.abs()).sum();
        if l1 == 0.0 {
            continue;
        }
        let scale = eps * radius.sample(&mut rng) / l1;
        let mass: Vec<S> = base.iter().zip(&z).map(|(b, x)| S::lit(b + scale * x)).collect();
        if mass.iter().any(|m| *m < S::zero()) {
            continue;
        }
        let mu = JointDistribution::new(lambda.states().to_vec(), lambda.signals().to_vec(), mass)?;
        if mu.l1_distance(lambda) <= epsilon {
            out.push(mu);
        }
    }
    Ok(out)
}
