mod common;

use common::*;
use peerpred_core::mechanisms::{
    ca_mechanism, extract_deh, kong_mechanism, kong_payment, scoring_from_deh, symmetrize, FactoredParams, PaymentRule,
    Symmetrized, DEFAULT_MAX_TASKS,
};
use peerpred_core::model::{conditional_independent_product, ReportFunction};
use peerpred_core::verifier::{expected_payment_enumerated, DEFAULT_TERM_BUDGET};
use peerpred_core::{verify_strict, Instance, Mat, Mechanism, Status, Strategy, VerificationMode, VerifyOptions};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn factored_form_recovers_ca() {
    let signs = example_signs();
    let mut params = FactoredParams::<f64>::zeros(&[3, 3], &[3, 3], 2);
    for (i, agent) in params.agents.iter_mut().enumerate() {
        for (r, p) in agent.iter_mut().enumerate() {
            let row: Vec<f64> = (0..3).map(|a| -f64::from(if i == 0 { signs[r][a] } else { signs[a][r] })).collect();
            p.e = row.clone();
            p.h = row;
        }
    }
    let from_params = scoring_from_deh(&params).unwrap();
    let ca: Mechanism = ca_mechanism(&signs, 2).unwrap();
    assert_eq!(from_params, ca);
}

#[test]
fn canonical_embedding_of_ca() {
    let signs = example_signs();
    let params = extract_deh(&ca_mechanism::<f64>(&signs, 2).unwrap()).unwrap();
    for r in 0..3 {
        for a in 0..3 {
            for b in 0..3 {
                let expected = -f64::from(signs[r][a] - signs[r][b]);
                assert_eq!(params.agents[0][r].d.get(a, b), expected);
            }
        }
    }
}

#[test]
fn kong_payment_is_zero_at_the_prior() {
    let prior = [0.5, 0.5];
    assert_eq!(kong_payment(&prior, &prior, &[&prior]).unwrap(), 0.0);
    let skewed = [0.3_f64, 0.7];
    let other = [0.9, 0.1];
    assert!(kong_payment(&skewed, &skewed, &[&other]).unwrap().abs() < 1e-15);
    assert!(kong_payment(&prior, &prior, &[&[1.0, 0.0], &[0.0, 1.0]]).is_err());
}

fn binary_ci_instance(rng: &mut ChaCha8Rng) -> Instance {
    loop {
        let prior = random_prior(2, rng);
        let l1 = random_stochastic_columns(2, 2, rng);
        let l2 = random_stochastic_columns(2, 2, rng);
        let (mu, ci) = conditional_independent_product(prior, vec![l1, l2]).unwrap();
        if ci.peer_likelihood(0).values.rank() < 2 || ci.peer_likelihood(1).values.rank() < 2 {
            continue;
        }
        let inst = Instance::new(vec![mu], vec![ReportFunction::Posterior, ReportFunction::Posterior], 1).unwrap();
        return inst.with_factorizations(vec![Some(ci)]).unwrap();
    }
}

#[test]
fn kong_is_strictly_truthful_on_full_rank_binary_instances() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for _ in 0..30 {
        let inst = binary_ci_instance(&mut rng);
        let mech = kong_mechanism(&inst).unwrap();
        for v in verify_strict(&inst, &mech, VerificationMode::ScoringExact, &VerifyOptions::default()).unwrap() {
            assert_eq!(v.status, Status::CertifiedStrict);
            assert!(v.margin > 1e-9);
        }
    }
}

fn random_consistent_profile(inst: &Instance, rng: &mut ChaCha8Rng) -> Vec<Strategy<f64>> {
    (0..inst.agent_count()).map(|j| Strategy::random_mixed(inst.signal_count(j), inst.report_count(j), rng)).collect()
}

#[test]
fn symmetrization_preserves_consistent_expectations() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    for case in 0..40 {
        let tasks = 1 + case % 3;
        let mu = random_table(2, 3, &mut rng);
        let inst = Instance::identity(vec![mu], tasks).unwrap();
        let mech = Mechanism::from_fn(&[2, 3], &[3, 2], tasks, |_, _, _, _, _| rng.random_range(-1.0..1.0)).unwrap();
        let literal = Symmetrized::new(&mech, DEFAULT_MAX_TASKS).unwrap();
        let table = symmetrize(&mech, DEFAULT_MAX_TASKS).unwrap();
        let profile = random_consistent_profile(&inst, &mut rng);
        for agent in 0..2 {
            let base = expected_payment_enumerated(&inst, 0, &mech, agent, &profile, DEFAULT_TERM_BUDGET).unwrap();
            let lit = expected_payment_enumerated(&inst, 0, &literal, agent, &profile, DEFAULT_TERM_BUDGET).unwrap();
            let tab = expected_payment_enumerated(&inst, 0, &table, agent, &profile, DEFAULT_TERM_BUDGET).unwrap();
            assert!((base - lit).abs() <= 1e-12, "{base} vs {lit}");
            assert!((base - tab).abs() <= 1e-12, "{base} vs {tab}");
        }
    }
}

#[test]
fn symmetrized_rule_is_task_symmetric() {
    let mut rng = ChaCha8Rng::seed_from_u64(29);
    let mech = Mechanism::from_fn(&[2, 2], &[2, 2], 3, |_, _, _, _, _| rng.random_range(-1.0..1.0)).unwrap();
    let lit = Symmetrized::new(&mech, DEFAULT_MAX_TASKS).unwrap();
    let own = [0, 1, 1];
    let peers = [1, 0, 1];
    let x = lit.total_payment(0, &own, &peers);
    let y = lit.total_payment(0, &[1, 0, 1], &[0, 1, 1]);
    assert!((x - y).abs() < 1e-12);
}

#[test]
fn verdicts_survive_positive_affine_maps() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for _ in 0..20 {
        let mu = random_table(3, 3, &mut rng);
        let inst = Instance::identity(vec![mu], 2).unwrap();
        let mech = Mechanism::uniform_from_fn(&[3, 3], &[3, 3], 2, |_, _, _, _| rng.random_range(-1.0..1.0)).unwrap();
        let (a, b) = (rng.random_range(0.1..10.0), rng.random_range(-5.0..5.0));
        let mapped = mech.map(|x| a * x + b);
        let opts = VerifyOptions::default();
        let v1 = verify_strict(&inst, &mech, VerificationMode::ScoringExact, &opts).unwrap();
        let v2 = verify_strict(&inst, &mapped, VerificationMode::ScoringExact, &opts).unwrap();
        for (x, y) in v1.iter().zip(&v2) {
            if x.margin.abs() > 1e-8 {
                assert_eq!(x.status, y.status);
            }
        }
        let scaled = mech.map(|x| a * x);
        let v3 = verify_strict(&inst, &scaled, VerificationMode::ScoringExact, &opts).unwrap();
        for (x, y) in v1.iter().zip(&v3) {
            if x.margin.abs() > 1e-8 {
                assert_eq!(x.status, y.status);
            }
        }
    }
}

#[test]
fn deh_is_linear() {
    let mut rng = ChaCha8Rng::seed_from_u64(37);
    let mut random = || {
        let mut p = FactoredParams::<f64>::zeros(&[2, 3], &[3, 2], 2);
        for agent in p.agents.iter_mut() {
            for r in agent.iter_mut() {
                let (rows, cols) = (r.d.rows(), r.d.cols());
                r.d = Mat::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0));
                r.e.iter_mut().for_each(|x| *x = rng.random_range(-1.0..1.0));
                r.h.iter_mut().for_each(|x| *x = rng.random_range(-1.0..1.0));
            }
        }
        p
    };
    let (p, q) = (random(), random());
    let mut sum = p.clone();
    for (sa, qa) in sum.agents.iter_mut().zip(&q.agents) {
        for (sr, qr) in sa.iter_mut().zip(qa) {
            sr.d = Mat::from_fn(sr.d.rows(), sr.d.cols(), |a, b| sr.d.get(a, b) + qr.d.get(a, b));
            sr.e.iter_mut().zip(&qr.e).for_each(|(x, y)| *x += y);
            sr.h.iter_mut().zip(&qr.h).for_each(|(x, y)| *x += y);
        }
    }
    let (mp, mq, ms) = (scoring_from_deh(&p).unwrap(), scoring_from_deh(&q).unwrap(), scoring_from_deh(&sum).unwrap());
    for i in 0..2 {
        for ((x, y), z) in mp.agent(i).tables()[0].iter().zip(&mq.agent(i).tables()[0]).zip(&ms.agent(i).tables()[0]) {
            assert!((x + y - z).abs() < 1e-12);
        }
    }
}
