use serde::Serialize;

use super::scoring::{AgentScoring, ScoringMechanism};
use crate::error::{Error, Result};
use crate::geometry::PowerDiagram;
use crate::linalg::Matrix;
use crate::scalar::{dot, Scalar};
use crate::tensor::tensor_power;

/// `(D_r, e_r, h_r)` for one report `r`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReportParams<S> {
    /// `|R_{-i}| × |R_{-i}|^{T-1}`.
    pub d: Matrix<S>,
    /// Length `|R_{-i}|`.
    pub e: Vec<S>,
    /// Length `|R_{-i}|^{T-1}`.
    pub h: Vec<S>,
}

/// Factored parameters, indexed `[agent][report]`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FactoredParams<S> {
    pub agents: Vec<Vec<ReportParams<S>>>,
    pub task_count: usize,
}

impl<S: Scalar> FactoredParams<S> {
    pub fn zeros(own_counts: &[usize], peer_counts: &[usize], task_count: usize) -> Self {
        let agents = own_counts
            .iter()
            .zip(peer_counts)
            .map(|(own, peer)| {
                let hist = peer.pow(task_count as u32 - 1);
                (0..*own)
                    .map(|_| ReportParams {
                        d: Matrix::zeros(*peer, hist),
                        e: vec![S::zero(); *peer],
                        h: vec![S::zero(); hist],
                    })
                    .collect()
            })
            .collect();
        Self { agents, task_count }
    }

    fn check(&self) -> Result<()> {
        if self.task_count == 0 || self.agents.is_empty() {
            return Err(Error::Shape("factored parameters need agents and tasks".into()));
        }
        for (i, reports) in self.agents.iter().enumerate() {
            let first = reports.first().ok_or_else(|| Error::Shape(format!("agent {i} has no reports")))?;
            let peer = first.e.len();
            let hist = peer.pow(self.task_count as u32 - 1);
            for (r, p) in reports.iter().enumerate() {
                if p.e.len() != peer || p.h.len() != hist || p.d.rows() != peer || p.d.cols() != hist {
                    return Err(Error::Shape(format!("parameters of agent {i}, report {r} have inconsistent shapes")));
                }
            }
        }
        Ok(())
    }
}

/// `p^{(t)}(r, a, b) = −D_r[a, b] − e_r[a] + h_r[b]`, identical on every task.
pub fn scoring_from_deh<S: Scalar>(params: &FactoredParams<S>) -> Result<ScoringMechanism<S>> {
    params.check()?;
    let own: Vec<usize> = params.agents.iter().map(Vec::len).collect();
    let peer: Vec<usize> = params.agents.iter().map(|r| r[0].e.len()).collect();
    ScoringMechanism::uniform_from_fn(&own, &peer, params.task_count, |i, y, a, b| {
        let p = &params.agents[i][y];
        -p.d.get(a, b) - p.e[a] + p.h[b]
    })
}

/// The canonical embedding `D_r[a, b] = −p(r, a, b)`, `e = 0`, `h = 0`.
///
/// Requires task-uniform tables, since the factored form has one set of
/// parameters for every task.
pub fn extract_deh<S: Scalar>(mech: &ScoringMechanism<S>) -> Result<FactoredParams<S>> {
    let agents = mech
        .agents()
        .iter()
        .enumerate()
        .map(|(i, a): (usize, &AgentScoring<S>)| {
            if !a.is_task_uniform() {
                return Err(Error::NotApplicable(format!("agent {i} tables differ across tasks")));
            }
            let hist = a.history_count();
            Ok((0..a.own_count())
                .map(|y| ReportParams {
                    d: Matrix::from_fn(a.peer_count(), hist, |s, b| -a.payment(0, y, s, b)),
                    e: vec![S::zero(); a.peer_count()],
                    h: vec![S::zero(); hist],
                })
                .collect())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(FactoredParams { agents, task_count: mech.agents()[0].task_count() })
}

/// Sites `v^r(u) = D_r u^{⊗(T−1)} + e_r` and weights `w^r(u) = h_rᵀ u^{⊗(T−1)}`.
pub fn extract_power_diagram<S: Scalar>(
    params: &FactoredParams<S>,
    marginal: &[S],
    agent: usize,
) -> Result<PowerDiagram<S>> {
    params.check()?;
    let reports = params.agents.get(agent).ok_or_else(|| Error::Index(format!("agent {agent}")))?;
    if marginal.len() != reports[0].e.len() {
        return Err(Error::Shape(format!(
            "marginal has {} entries, agent {agent} has {} peer reports",
            marginal.len(),
            reports[0].e.len()
        )));
    }
    let power = tensor_power(marginal, params.task_count - 1);
    let sites =
        reports.iter().map(|p| p.d.mul_vec(&power).into_iter().zip(&p.e).map(|(x, e)| x + *e).collect()).collect();
    let weights = reports.iter().map(|p| dot(&p.h, &power)).collect();
    PowerDiagram::new(sites, weights, (0..reports.len()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mechanisms::PaymentRule;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_mech(rng: &mut ChaCha8Rng) -> ScoringMechanism<f64> {
        let t = rng.random_range(1..=3);
        let own = [rng.random_range(1..=3), rng.random_range(1..=3)];
        let peer = [own[1], own[0]];
        ScoringMechanism::uniform_from_fn(&own, &peer, t, |_, _, _, _| rng.random_range(-1.0..1.0)).unwrap()
    }

    #[test]
    fn zero_params_give_zero_payments() {
        let m = scoring_from_deh(&FactoredParams::<f64>::zeros(&[2, 3], &[3, 2], 2)).unwrap();
        assert!(m.agents().iter().flat_map(|a| a.tables().iter().flatten()).all(|x| *x == 0.0));
        assert_eq!(extract_deh(&m).unwrap(), FactoredParams::zeros(&[2, 3], &[3, 2], 2));
    }

    #[test]
    fn one_hot_d() {
        let mut p = FactoredParams::<f64>::zeros(&[2, 2], &[2, 2], 2);
        p.agents[0][1].d.set(0, 1, 0.7);
        let m = scoring_from_deh(&p).unwrap();
        for y in 0..2 {
            for a in 0..2 {
                for b in 0..2 {
                    let want = if (y, a, b) == (1, 0, 1) { -0.7 } else { 0.0 };
                    assert_eq!(m.agent(0).payment(1, y, a, b), want);
                }
            }
        }
    }

    #[test]
    fn round_trip_is_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let m = random_mech(&mut rng);
            assert_eq!(scoring_from_deh(&extract_deh(&m).unwrap()).unwrap(), m);
        }
    }

    #[test]
    fn linear_in_parameters() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let draw = |rng: &mut ChaCha8Rng| {
            let mut p = FactoredParams::<f64>::zeros(&[2, 3], &[3, 2], 2);
            for reports in &mut p.agents {
                for r in reports.iter_mut() {
                    r.d = Matrix::from_fn(r.d.rows(), r.d.cols(), |_, _| rng.random_range(-1.0..1.0));
                    r.e.iter_mut().for_each(|x| *x = rng.random_range(-1.0..1.0));
                    r.h.iter_mut().for_each(|x| *x = rng.random_range(-1.0..1.0));
                }
            }
            p
        };
        let (a, b) = (draw(&mut rng), draw(&mut rng));
        let mut sum = a.clone();
        for (ra, rb) in sum.agents.iter_mut().flatten().zip(b.agents.iter().flatten()) {
            ra.d = Matrix::from_fn(ra.d.rows(), ra.d.cols(), |r, c| ra.d.get(r, c) + rb.d.get(r, c));
            ra.e.iter_mut().zip(&rb.e).for_each(|(x, y)| *x += y);
            ra.h.iter_mut().zip(&rb.h).for_each(|(x, y)| *x += y);
        }
        let (ma, mb, ms) =
            (scoring_from_deh(&a).unwrap(), scoring_from_deh(&b).unwrap(), scoring_from_deh(&sum).unwrap());
        let own = [1, 1];
        let peers = [1, 0];
        for i in 0..2 {
            let lhs = ms.total_payment(i, &own[..], &peers[..]);
            let rhs = ma.total_payment(i, &own[..], &peers[..]) + mb.total_payment(i, &own[..], &peers[..]);
            assert!((lhs - rhs).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_d_sites_are_e() {
        let mut p = FactoredParams::<f64>::zeros(&[2], &[3], 3);
        p.agents[0][1].e = vec![0.1, 0.2, 0.3];
        let d = extract_power_diagram(&p, &[0.2, 0.3, 0.5], 0).unwrap();
        assert_eq!(d.sites()[1], vec![0.1, 0.2, 0.3]);
        assert_eq!(d.sites()[0], vec![0.0; 3]);
    }
}
