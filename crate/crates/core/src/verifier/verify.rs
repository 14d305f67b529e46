use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::expectation::{check_rule, expected_payment, DEFAULT_TERM_BUDGET};
use super::strategy::{truthful_choice, Strategy};
use crate::error::{Error, Result};
use crate::mechanisms::{PaymentRule, ScoringMechanism};
use crate::model::ProblemInstance;
use crate::scalar::{dot, tolerance, Scalar};
use crate::tensor::tensor_power;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum VerificationMode {
    /// Exact per-task check of every single-report deviation of a scoring table.
    ScoringExact,
    /// Consistent deviations only, deterministic ones exhaustively plus random mixed ones.
    ConsistentGeneral,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Status {
    CertifiedStrict,
    Refuted,
    PassedChecks,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Witness<S> {
    pub strategy: Strategy<S>,
    /// Expected gain of the deviation over truthful reporting.
    pub gain: S,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Verdict<S> {
    pub distribution: usize,
    pub agent: usize,
    pub status: Status,
    pub witness: Option<Witness<S>>,
    /// Smallest truthful advantage over the checked deviations.
    pub margin: S,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct VerifyOptions {
    pub random_deviations: usize,
    pub seed: u64,
    pub term_budget: u64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self { random_deviations: 200, seed: 0, term_budget: DEFAULT_TERM_BUDGET }
    }
}

/// Verifies a scoring mechanism on every distribution and agent.
pub fn verify_strict<S: Scalar>(
    instance: &ProblemInstance<S>,
    mech: &ScoringMechanism<S>,
    mode: VerificationMode,
    options: &VerifyOptions,
) -> Result<Vec<Verdict<S>>> {
    mech.check_compatible(instance)?;
    match mode {
        VerificationMode::ScoringExact => for_each_pair(instance, |d, i| scoring_exact(instance, mech, d, i)),
        VerificationMode::ConsistentGeneral => verify_consistent(instance, mech, options),
    }
}

/// Consistent-deviation verification for an arbitrary payment rule.
pub fn verify_consistent<S: Scalar, R: PaymentRule<S> + ?Sized>(
    instance: &ProblemInstance<S>,
    rule: &R,
    options: &VerifyOptions,
) -> Result<Vec<Verdict<S>>> {
    check_rule(instance, rule)?;
    for_each_pair(instance, |d, i| consistent_general(instance, rule, d, i, options))
}

fn for_each_pair<S: Scalar>(
    instance: &ProblemInstance<S>,
    f: impl Fn(usize, usize) -> Result<Verdict<S>> + Sync,
) -> Result<Vec<Verdict<S>>> {
    let pairs: Vec<(usize, usize)> =
        (0..instance.distribution_count()).flat_map(|d| (0..instance.agent_count()).map(move |i| (d, i))).collect();
    pairs.par_iter().map(|&(d, i)| f(d, i)).collect()
}

/// `E_y` for every task, realized signal and report, peers truthful.
struct ExactTable<S> {
    /// `[task][signal index][report]`.
    values: Vec<Vec<Vec<S>>>,
    signals: Vec<(usize, S, usize)>,
}

fn exact_table<S: Scalar>(
    instance: &ProblemInstance<S>,
    mech: &ScoringMechanism<S>,
    d: usize,
    agent: usize,
) -> ExactTable<S> {
    let table = mech.agent(agent);
    let posts = instance.peer_posteriors(d, agent);
    let weights = tensor_power(&instance.peer_marginal(d, agent), instance.task_count() - 1);
    let (own, peer) = (table.own_count(), table.peer_count());
    let values = (0..instance.task_count())
        .map(|t| {
            let alpha: Vec<Vec<S>> = (0..own)
                .map(|y| {
                    (0..peer)
                        .map(|a| weights.iter().enumerate().map(|(b, w)| *w * table.payment(t, y, a, b)).sum())
                        .collect()
                })
                .collect();
            posts.iter().map(|(_, q)| alpha.iter().map(|al| dot(q, al)).collect()).collect()
        })
        .collect();
    ExactTable { values, signals: posts.iter().map(|(rs, _)| (rs.signal, rs.mass, rs.report)).collect() }
}

/// Smallest conditional gap and where it occurs: `(gap, task, signal index, best alternative)`.
fn worst_gap<S: Scalar>(table: &ExactTable<S>) -> Option<(S, usize, usize, usize)> {
    let mut worst: Option<(S, usize, usize, usize)> = None;
    for (t, per_signal) in table.values.iter().enumerate() {
        for (k, e) in per_signal.iter().enumerate() {
            let r = table.signals[k].2;
            let alt = (0..e.len()).filter(|y| *y != r).fold(None, |best: Option<usize>, y| match best {
                Some(b) if e[b] >= e[y] => Some(b),
                _ => Some(y),
            });
            if let Some(y) = alt {
                let gap = e[r] - e[y];
                if worst.is_none_or(|w| gap < w.0) {
                    worst = Some((gap, t, k, y));
                }
            }
        }
    }
    worst
}

fn single_switch<S: Scalar>(
    instance: &ProblemInstance<S>,
    d: usize,
    agent: usize,
    table: &ExactTable<S>,
    (gap, t, k, y): (S, usize, usize, usize),
) -> Witness<S> {
    let mut choice = truthful_choice(instance, d, agent);
    let (signal, mass, _) = table.signals[k];
    choice[signal] = y;
    let map = Strategy::deterministic_map(&choice, instance.report_count(agent));
    let strategy = Strategy::truthful(instance, d, agent).with_task_map(instance.task_count(), t, map);
    Witness { strategy, gain: -mass * gap }
}

fn scoring_exact<S: Scalar>(
    instance: &ProblemInstance<S>,
    mech: &ScoringMechanism<S>,
    d: usize,
    agent: usize,
) -> Result<Verdict<S>> {
    let table = exact_table(instance, mech, d, agent);
    let verdict = |status, witness, margin| Verdict { distribution: d, agent, status, witness, margin };
    match worst_gap(&table) {
        None => Ok(verdict(Status::CertifiedStrict, None, S::infinity())),
        Some(w) if w.0 > S::tol(tolerance::STRICT_GAP) => Ok(verdict(Status::CertifiedStrict, None, w.0)),
        Some(w) => {
            let witness = single_switch(instance, d, agent, &table, w);
            Ok(verdict(Status::Refuted, Some(witness), w.0))
        }
    }
}

fn consistent_general<S: Scalar, R: PaymentRule<S> + ?Sized>(
    instance: &ProblemInstance<S>,
    rule: &R,
    d: usize,
    agent: usize,
    options: &VerifyOptions,
) -> Result<Verdict<S>> {
    let (best, checked) = search_consistent(instance, rule, d, agent, options)?;
    let verdict = |status, witness, margin| Verdict { distribution: d, agent, status, witness, margin };
    match best {
        None => Ok(verdict(Status::PassedChecks, None, S::infinity())),
        Some(w) if w.gain >= S::lit(tolerance::REFUTE_GAIN) => {
            let margin = -w.gain;
            Ok(verdict(Status::Refuted, Some(w), margin))
        }
        Some(w) => {
            debug_assert!(checked > 0);
            Ok(verdict(Status::PassedChecks, None, -w.gain))
        }
    }
}

/// Best consistent deviation found and the number of deviations checked.
fn search_consistent<S: Scalar, R: PaymentRule<S> + ?Sized>(
    instance: &ProblemInstance<S>,
    rule: &R,
    d: usize,
    agent: usize,
    options: &VerifyOptions,
) -> Result<(Option<Witness<S>>, usize)> {
    let reports = instance.report_count(agent);
    let realized = instance.realized_signals(d, agent);
    if reports < 2 || realized.is_empty() {
        return Ok((None, 0));
    }
    let mut profile = Strategy::truthful_profile(instance, d);
    let truthful = expected_payment(instance, d, rule, agent, &profile, options.term_budget)?;
    let count =
        (reports as u64).checked_pow(realized.len() as u32).filter(|c| *c <= options.term_budget).ok_or_else(|| {
            Error::ResourceLimit(format!("{reports}^{} deterministic deviations exceed the budget", realized.len()))
        })?;
    let mut best: Option<Witness<S>> = None;
    let mut consider = |strategy: Strategy<S>, profile: &mut Vec<Strategy<S>>| -> Result<()> {
        profile[agent] = strategy;
        let gain = expected_payment(instance, d, rule, agent, profile, options.term_budget)? - truthful;
        if best.as_ref().is_none_or(|b| gain > b.gain) {
            best = Some(Witness { strategy: profile[agent].clone(), gain });
        }
        Ok(())
    };
    let base = truthful_choice(instance, d, agent);
    let mut checked = 0;
    for code in 0..count {
        let mut choice = base.clone();
        let mut rest = code;
        for rs in realized.iter().rev() {
            choice[rs.signal] = (rest % reports as u64) as usize;
            rest /= reports as u64;
        }
        if realized.iter().all(|rs| choice[rs.signal] == rs.report) {
            continue;
        }
        consider(Strategy::consistent(Strategy::deterministic_map(&choice, reports))?, &mut profile)?;
        checked += 1;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(pair_seed(options.seed, d, agent));
    for _ in 0..options.random_deviations {
        consider(Strategy::random_mixed(instance.signal_count(agent), reports, &mut rng), &mut profile)?;
        checked += 1;
    }
    Ok((best, checked))
}

fn pair_seed(seed: u64, d: usize, agent: usize) -> u64 {
    seed ^ (d as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ (agent as u64).wrapping_mul(0xC2B2_AE3D_27D4_EB4F)
}

/// The most profitable deviation the chosen mode can find. Under
/// `ScoringExact` it deviates at every task and signal with positive gain, or
/// takes the least costly single switch when none exists.
pub fn best_deviation<S: Scalar>(
    instance: &ProblemInstance<S>,
    d: usize,
    mech: &ScoringMechanism<S>,
    agent: usize,
    mode: VerificationMode,
    options: &VerifyOptions,
) -> Result<Option<Witness<S>>> {
    mech.check_compatible(instance)?;
    if d >= instance.distribution_count() || agent >= instance.agent_count() {
        return Err(Error::Index(format!("distribution {d}, agent {agent}")));
    }
    if mode == VerificationMode::ConsistentGeneral {
        return Ok(search_consistent(instance, mech, d, agent, options)?.0);
    }
    let table = exact_table(instance, mech, d, agent);
    let Some(worst) = worst_gap(&table) else { return Ok(None) };
    let reports = instance.report_count(agent);
    let base = truthful_choice(instance, d, agent);
    let mut gain = S::zero();
    let mut maps = Vec::with_capacity(instance.task_count());
    for per_signal in &table.values {
        let mut choice = base.clone();
        for (k, e) in per_signal.iter().enumerate() {
            let (signal, mass, r) = table.signals[k];
            let y = (0..reports).fold(r, |b, y| if e[y] > e[b] { y } else { b });
            if y != r {
                choice[signal] = y;
                gain += mass * (e[y] - e[r]);
            }
        }
        maps.push(Strategy::deterministic_map(&choice, reports));
    }
    if gain > S::zero() {
        return Ok(Some(Witness { strategy: Strategy::new(maps)?, gain }));
    }
    Ok(Some(single_switch(instance, d, agent, &table, worst)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mechanisms::ca_mechanism;
    use crate::model::two_agent_table;

    fn instance(table: &[Vec<f64>], tasks: usize) -> ProblemInstance<f64> {
        ProblemInstance::identity(vec![two_agent_table(table).unwrap()], tasks).unwrap()
    }

    #[test]
    fn ca_on_binary_example_has_known_gap() {
        let inst = instance(&[vec![0.4, 0.1], vec![0.1, 0.4]], 2);
        let mech = ca_mechanism(&vec![vec![1, -1], vec![-1, 1]], 2).unwrap();
        let verdicts = verify_strict(&inst, &mech, VerificationMode::ScoringExact, &VerifyOptions::default()).unwrap();
        for v in &verdicts {
            assert_eq!(v.status, Status::CertifiedStrict);
            // E_r - E_y = 2 * sum |Δ(s, ·)| / μ(s) = 2 * 0.3 / 0.5
            assert!((v.margin - 1.2).abs() < 1e-12, "{}", v.margin);
        }
    }

    #[test]
    fn duplicate_sign_rows_are_refuted_with_nonnegative_gain() {
        let table = vec![vec![0.2, 0.0, 0.0], vec![0.1, 0.05, 0.05], vec![0.05, 0.25, 0.3]];
        let inst = instance(&table, 2);
        let signs = vec![vec![1, -1, -1], vec![1, -1, -1], vec![-1, 1, 1]];
        let mech = ca_mechanism(&signs, 2).unwrap();
        let verdicts = verify_strict(&inst, &mech, VerificationMode::ScoringExact, &VerifyOptions::default()).unwrap();
        let v = &verdicts[0];
        assert_eq!(v.status, Status::Refuted);
        let w = v.witness.as_ref().unwrap();
        assert!(w.gain >= -1e-12);
        let general =
            verify_strict(&inst, &mech, VerificationMode::ConsistentGeneral, &VerifyOptions::default()).unwrap();
        assert_eq!(general[0].status, Status::Refuted);
        assert!(general[0].witness.as_ref().unwrap().gain >= -1e-12);
    }

    #[test]
    fn best_deviation_gain_matches_direct_expectation() {
        let inst = instance(&[vec![0.3, 0.2], vec![0.1, 0.4]], 2);
        // a mechanism that rewards always reporting 0
        let mech = ScoringMechanism::uniform_from_fn(&[2, 2], &[2, 2], 2, |_, y, _, _| if y == 0 { 1.0 } else { 0.0 })
            .unwrap();
        let w = best_deviation(&inst, 0, &mech, 0, VerificationMode::ScoringExact, &VerifyOptions::default())
            .unwrap()
            .unwrap();
        let mut profile = Strategy::truthful_profile(&inst, 0);
        let base = expected_payment(&inst, 0, &mech, 0, &profile, DEFAULT_TERM_BUDGET).unwrap();
        profile[0] = w.strategy.clone();
        let dev = expected_payment(&inst, 0, &mech, 0, &profile, DEFAULT_TERM_BUDGET).unwrap();
        // signal 1 has mass 0.5 and gains 1 per task
        assert!((w.gain - 1.0).abs() < 1e-12);
        assert!((dev - base - w.gain).abs() < 1e-12);
    }

    #[test]
    fn single_report_agents_are_vacuously_certified() {
        let inst = ProblemInstance::new(
            vec![two_agent_table(&[vec![0.5_f64], vec![0.5]]).unwrap()],
            vec![crate::model::ReportFunction::Identity, crate::model::ReportFunction::Identity],
            2,
        )
        .unwrap();
        let mech = ScoringMechanism::zeros_for(&inst).unwrap();
        let v = verify_strict(&inst, &mech, VerificationMode::ScoringExact, &VerifyOptions::default()).unwrap();
        assert_eq!(v[1].status, Status::CertifiedStrict);
        assert!(v[1].margin.is_infinite());
        assert_eq!(v[0].status, Status::Refuted);
    }
}
