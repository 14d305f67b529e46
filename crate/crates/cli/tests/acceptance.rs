//! End-to-end acceptance suite. Runs without the libtest harness so that
//! every criterion prints one line, pass or fail.

use std::time::{Duration, Instant};

use peerpred::generators::{dirichlet_sample, sign_pattern_sample, DirichletParams};
use peerpred::run_command_to;
use peerpred_core::analysis::{
    ball_epsilon, check_convex_separation, check_linear_property_rank, check_marginal_relevance, check_permutation,
    gen_linear_counterexample, gen_rank_counterexample, sample_ball, CheckWitness, Outcome, PosteriorSource,
};
use peerpred_core::geometry::PowerDiagram;
use peerpred_core::mechanisms::{
    ca_mechanism, extract_deh, extract_power_diagram, kong_mechanism, symmetrize, LinearProperty, DEFAULT_MAX_TASKS,
};
use peerpred_core::model::{
    conditional_independent_product, marginal_buckets, two_agent_table, ConditionalIndependent, DeltaMatrix, Grouping,
    ReportFunction, ReportValue, SignMatrix,
};
use peerpred_core::verifier::{expected_payment, DEFAULT_TERM_BUDGET};
use peerpred_core::{
    cell_boundaries_2simplex, synthesize_scoring, verify_strict, CellAssignment, Distribution, Instance, Mat,
    Mechanism, Status, Strategy, SynthesisResult, SynthesisStatus, VerificationMode, VerifyOptions,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome_ = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn example_signs() -> SignMatrix {
    vec![vec![1, -1, -1], vec![-1, 1, -1], vec![-1, -1, 1]]
}

fn duplicate_signs() -> SignMatrix {
    vec![vec![1, -1, -1], vec![1, -1, -1], vec![-1, 1, 1]]
}

/// Delta signs recomputed from the raw two-agent table.
fn table_signs(mu: &Distribution) -> SignMatrix {
    let (r, c) = (mu.signal_count(0), mu.signal_count(1));
    let m = mu.mass();
    let row: Vec<f64> = (0..r).map(|i| (0..c).map(|j| m[i * c + j]).sum()).collect();
    let col: Vec<f64> = (0..c).map(|j| (0..r).map(|i| m[i * c + j]).sum()).collect();
    (0..r)
        .map(|i| {
            (0..c)
                .map(|j| {
                    let d = m[i * c + j] - row[i] * col[j];
                    if d > 0.0 {
                        1
                    } else if d < 0.0 {
                        -1
                    } else {
                        0
                    }
                })
                .collect()
        })
        .collect()
}

fn cli(args: &[&str]) -> (i32, String) {
    let argv: Vec<String> = std::iter::once("peerpred").chain(args.iter().copied()).map(String::from).collect();
    let mut buf = Vec::new();
    let code = run_command_to(&argv, &mut buf);
    (code, String::from_utf8(buf).unwrap())
}

fn family_file(dir: &std::path::Path, signs: &SignMatrix, seed: u64, count: usize) -> std::path::PathBuf {
    let doc = serde_json::json!({
        "schema_version": 1,
        "reports": "identity",
        "task_count": 2,
        "generator": { "kind": "sign-pattern", "params": { "signs": signs }, "seed": seed, "count": count }
    });
    let path = dir.join(format!("family-{seed}.json"));
    std::fs::write(&path, doc.to_string()).unwrap();
    path
}

fn criterion_1() -> Outcome_ {
    let dir = tempfile::TempDir::new().unwrap();
    let signs = example_signs();
    let path = family_file(dir.path(), &signs, 2024, 100);
    let loaded = peerpred::schema::parse_instance(&path).map_err(|e| e.to_string())?;
    for (d, mu) in loaded.instance.distributions().iter().enumerate() {
        ensure(table_signs(mu) == signs, || format!("distribution {d} has signs {:?}", table_signs(mu)))?;
    }
    let (code, text) = cli(&["verify", path.to_str().unwrap(), "--mechanism", "ca", "--json"]);
    ensure(code == 0, || format!("exit code {code}"))?;
    let verdicts: Vec<serde_json::Value> = serde_json::from_str(&text).map_err(|e| e.to_string())?;
    ensure(verdicts.len() == 200, || format!("{} verdicts", verdicts.len()))?;
    let mut worst = f64::INFINITY;
    for v in &verdicts {
        let margin = v["margin"].as_f64().unwrap_or(f64::NAN);
        ensure(v["status"] == "CertifiedStrict" && margin > 0.0, || format!("verdict {v}"))?;
        worst = worst.min(margin);
    }
    Ok(format!("100 distributions certified, smallest margin {worst:.3e}"))
}

fn criterion_2() -> Outcome_ {
    let signs = duplicate_signs();
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let dists: Vec<Distribution> =
        (0..20).map(|_| sign_pattern_sample(&signs, &mut rng)).collect::<Result<_, _>>().map_err(|e| e.to_string())?;
    let mech: Mechanism = ca_mechanism(&signs, 2).map_err(|e| e.to_string())?;
    for (d, mu) in dists.iter().enumerate() {
        ensure(table_signs(mu) == signs, || format!("distribution {d} misses the pattern"))?;
        let inst = Instance::identity(vec![mu.clone()], 2).map_err(|e| e.to_string())?;
        let verdicts = verify_strict(&inst, &mech, VerificationMode::ScoringExact, &VerifyOptions::default())
            .map_err(|e| e.to_string())?;
        let v = &verdicts[0];
        ensure(v.status == Status::Refuted, || format!("distribution {d}: agent 0 not refuted"))?;
        let w = v.witness.as_ref().ok_or("refutation without witness")?;
        ensure(w.gain >= -1e-12, || format!("distribution {d}: gain {}", w.gain))?;
        // the deviation sends the two duplicated signals to one report on some task
        let merges = w.strategy.maps().iter().any(|m| m.row(0) == m.row(1));
        ensure(merges, || format!("distribution {d}: witness keeps signals 0 and 1 apart"))?;
        // recompute the gain of the witness from exact expectations
        let truthful = Strategy::truthful_profile(&inst, 0);
        let mut deviated = truthful.clone();
        deviated[0] = w.strategy.clone();
        let e_true = expected_payment(&inst, 0, &mech, 0, &truthful, DEFAULT_TERM_BUDGET).map_err(|e| e.to_string())?;
        let e_dev = expected_payment(&inst, 0, &mech, 0, &deviated, DEFAULT_TERM_BUDGET).map_err(|e| e.to_string())?;
        ensure(e_dev - e_true >= -1e-12, || format!("distribution {d}: recomputed gain {}", e_dev - e_true))?;
    }
    Ok("20 distributions refuted with merging witnesses".into())
}

fn random_columns(rows: usize, cols: usize, rng: &mut impl Rng) -> Mat {
    let raw: Vec<Vec<f64>> = (0..cols).map(|_| (0..rows).map(|_| rng.random_range(0.05..1.0)).collect()).collect();
    Mat::from_fn(rows, cols, |r, c| raw[c][r] / raw[c].iter().sum::<f64>())
}

fn random_prior(k: usize, rng: &mut impl Rng) -> Vec<f64> {
    let raw: Vec<f64> = (0..k).map(|_| rng.random_range(0.1..1.0)).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|x| x / total).collect()
}

fn state_posterior(ci: &ConditionalIndependent<f64>, agent: usize, s: usize) -> Vec<f64> {
    let l = ci.likelihood(agent);
    let raw: Vec<f64> = ci.prior().iter().enumerate().map(|(w, p)| p * l.get(s, w)).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|x| x / total).collect()
}

/// `μ(s_peer | s_agent)` for two agents.
fn peer_signal_posterior(ci: &ConditionalIndependent<f64>, agent: usize, s: usize) -> Vec<f64> {
    let q = state_posterior(ci, agent, s);
    let peer = ci.likelihood(1 - agent);
    (0..peer.rows()).map(|b| q.iter().enumerate().map(|(w, p)| p * peer.get(b, w)).sum()).collect()
}

/// Expected per-task score `E[log Σ_ω r(ω) q_peer(ω) / p(ω) | s]` computed from the factors.
fn kong_score(ci: &ConditionalIndependent<f64>, agent: usize, s: usize, report: &[f64]) -> f64 {
    let p = ci.prior();
    let peer = 1 - agent;
    peer_signal_posterior(ci, agent, s)
        .iter()
        .enumerate()
        .map(|(b, mass)| {
            let q = state_posterior(ci, peer, b);
            mass * (0..p.len()).map(|w| report[w] * q[w] / p[w]).sum::<f64>().ln()
        })
        .sum()
}

fn criterion_3() -> Outcome_ {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst = f64::INFINITY;
    let mut full = 0;
    while full < 50 {
        let likelihoods = vec![random_columns(2, 2, &mut rng), random_columns(2, 2, &mut rng)];
        if likelihoods.iter().any(|l| (l.get(0, 0) - l.get(0, 1)).abs() < 0.1) {
            continue;
        }
        let (mu, ci) =
            conditional_independent_product(random_prior(2, &mut rng), likelihoods).map_err(|e| e.to_string())?;
        let inst = Instance::new(vec![mu], vec![ReportFunction::Posterior; 2], 2)
            .and_then(|i| i.with_factorizations(vec![Some(ci.clone())]))
            .map_err(|e| e.to_string())?;
        let mech = kong_mechanism(&inst).map_err(|e| e.to_string())?;
        for v in verify_strict(&inst, &mech, VerificationMode::ScoringExact, &VerifyOptions::default())
            .map_err(|e| e.to_string())?
        {
            ensure(v.status == Status::CertifiedStrict && v.margin > 1e-9, || format!("instance {full}: {v:?}"))?;
        }
        for agent in 0..2 {
            let reports: Vec<Vec<f64>> = (0..2).map(|s| state_posterior(&ci, agent, s)).collect();
            for (s, truthful) in reports.iter().enumerate() {
                let own = kong_score(&ci, agent, s, truthful);
                for alt in reports.iter().filter(|r| *r != truthful) {
                    let gap = own - kong_score(&ci, agent, s, alt);
                    ensure(gap > 1e-9, || format!("instance {full}, agent {agent}, signal {s}: gap {gap}"))?;
                    worst = worst.min(gap);
                }
            }
        }
        full += 1;
    }
    let mut rank_cases = 0;
    for _ in 0..20 {
        let likelihoods = vec![random_columns(2, 3, &mut rng), random_columns(2, 3, &mut rng)];
        let ci = ConditionalIndependent::new(random_prior(3, &mut rng), likelihoods).map_err(|e| e.to_string())?;
        let cx = gen_rank_counterexample(&ci, 0).map_err(|e| e.to_string())?;
        let s = cx.signal;
        let (a, b) = (peer_signal_posterior(&cx.base, 0, s), peer_signal_posterior(&cx.modified, 0, s));
        let peer_gap = a.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        let (qa, qb) = (state_posterior(&cx.base, 0, s), state_posterior(&cx.modified, 0, s));
        let state_gap = qa.iter().zip(&qb).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        ensure(peer_gap <= 1e-9 && state_gap >= 1e-6, || format!("peer gap {peer_gap}, state gap {state_gap}"))?;
        rank_cases += 1;
    }
    Ok(format!("50 full-rank instances certified (smallest oracle gap {worst:.3e}), {rank_cases} rank witnesses"))
}

fn family(rng: &mut ChaCha8Rng) -> Result<Vec<Distribution>, String> {
    let count = rng.random_range(1..=4);
    let params = DirichletParams { states: 1, signals: vec![3, 3], alpha: 2.0 };
    (0..count)
        .map(|_| {
            if rng.random_bool(0.5) {
                sign_pattern_sample(&example_signs(), rng)
            } else {
                dirichlet_sample(&params, rng)
            }
            .map_err(|e| e.to_string())
        })
        .collect()
}

/// Row `i` becomes `t·row_{i+1} + (1−t)·row_{i+2}`. Agent 0's peer marginal is
/// unchanged, so both tables share a bucket, and with three signals each new
/// posterior sits across the triangle from the old one.
fn same_marginal_variant(mu: &Distribution, rng: &mut ChaCha8Rng) -> Result<Distribution, String> {
    let (r, c) = (mu.signal_count(0), mu.signal_count(1));
    let m = mu.mass();
    let t = rng.random_range(0.2..0.8);
    let rows: Vec<Vec<f64>> = (0..r)
        .map(|i| (0..c).map(|j| t * m[((i + 1) % r) * c + j] + (1.0 - t) * m[((i + 2) % r) * c + j]).collect())
        .collect();
    two_agent_table(&rows).map_err(|e| e.to_string())
}

fn diagrams_agree(inst: &Instance, result: &SynthesisResult<f64>) -> Result<usize, String> {
    let SynthesisStatus::Feasible { mechanism, .. } = &result.status else { return Err("not feasible".into()) };
    let params = extract_deh(mechanism).map_err(|e| e.to_string())?;
    let mut placed = 0;
    for i in 0..inst.agent_count() {
        for bucket in marginal_buckets(inst, i, Grouping::ByMarginal) {
            let u = bucket.key.unwrap();
            let diagram = extract_power_diagram(&params, &u, i).map_err(|e| e.to_string())?;
            for d in &bucket.distributions {
                for (rs, q) in inst.peer_posteriors(*d, i) {
                    let cell = diagram.cell_assign(&q).map_err(|e| e.to_string())?;
                    ensure(cell == CellAssignment::Winner(rs.report), || {
                        format!("agent {i}, distribution {d}: posterior {q:?} lands in {cell:?}")
                    })?;
                    placed += 1;
                }
            }
        }
    }
    Ok(placed)
}

fn criterion_4() -> Outcome_ {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (mut feasible, mut placed, mut attempts) = (0, 0, 0);
    while feasible < 50 {
        attempts += 1;
        ensure(attempts <= 2000, || format!("only {feasible} feasible instances in 2000 draws"))?;
        let inst = Instance::identity(family(&mut rng)?, 2).map_err(|e| e.to_string())?;
        let result = synthesize_scoring(&inst).map_err(|e| e.to_string())?;
        let SynthesisStatus::Feasible { mechanism, .. } = &result.status else { continue };
        let verdicts = verify_strict(&inst, mechanism, VerificationMode::ScoringExact, &VerifyOptions::default())
            .map_err(|e| e.to_string())?;
        ensure(verdicts.iter().all(|v| v.status == Status::CertifiedStrict), || {
            format!("feasible instance {feasible} not certified")
        })?;
        placed += diagrams_agree(&inst, &result)?;
        feasible += 1;
    }
    let (mut mixed_feasible, mut mixed_infeasible) = (0, 0);
    for k in 0..60 {
        let mut dists = family(&mut rng)?;
        if k % 2 == 0 {
            dists.push(same_marginal_variant(&dists[0], &mut rng)?);
        }
        let inst = Instance::identity(dists, 2).map_err(|e| e.to_string())?;
        let lp = synthesize_scoring(&inst).map_err(|e| e.to_string())?.is_feasible();
        let necessary = check_marginal_relevance(&inst).passed()
            && check_convex_separation(&inst).map_err(|e| e.to_string())?.passed()
            && check_permutation(&inst).map_err(|e| e.to_string())?.passed();
        ensure(!lp || necessary, || format!("mixed instance {k}: feasible LP but a necessary condition fails"))?;
        if lp {
            mixed_feasible += 1;
        } else {
            mixed_infeasible += 1;
        }
    }
    ensure(mixed_feasible > 0 && mixed_infeasible > 0, || {
        format!("{mixed_feasible} feasible, {mixed_infeasible} infeasible")
    })?;
    Ok(format!(
        "50 feasible syntheses certified with {placed} posteriors in truthful cells; 60 mixed instances ({mixed_feasible} feasible, {mixed_infeasible} infeasible) without contradiction"
    ))
}

fn criterion_5() -> Outcome_ {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst: f64 = 0.0;
    for k in 0..100 {
        let (r, c): (usize, usize) = (rng.random_range(2..=3), rng.random_range(2..=3));
        let tasks = rng.random_range(2..=3);
        let w: Vec<Vec<f64>> = (0..r).map(|_| (0..c).map(|_| rng.random_range(0.05..1.0)).collect()).collect();
        let total: f64 = w.iter().flatten().sum();
        let mu = two_agent_table(&w.iter().map(|row| row.iter().map(|x| x / total).collect()).collect::<Vec<_>>())
            .map_err(|e| e.to_string())?;
        let inst = Instance::identity(vec![mu], tasks).map_err(|e| e.to_string())?;
        // task-dependent tables so the symmetrization actually averages something
        let agents = [(r, c), (c, r)]
            .iter()
            .map(|&(own, peer)| {
                let size = own * peer * peer.pow(tasks as u32 - 1);
                let tables = (0..tasks).map(|_| (0..size).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
                peerpred_core::mechanisms::AgentScoring::new(own, peer, tables)
            })
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| e.to_string())?;
        let mech = Mechanism::new(agents).map_err(|e| e.to_string())?;
        let sym = symmetrize(&mech, DEFAULT_MAX_TASKS).map_err(|e| e.to_string())?;
        let profile = vec![Strategy::random_mixed(r, r, &mut rng), Strategy::random_mixed(c, c, &mut rng)];
        for agent in 0..2 {
            let a =
                expected_payment(&inst, 0, &mech, agent, &profile, DEFAULT_TERM_BUDGET).map_err(|e| e.to_string())?;
            let b =
                expected_payment(&inst, 0, &sym, agent, &profile, DEFAULT_TERM_BUDGET).map_err(|e| e.to_string())?;
            worst = worst.max((a - b).abs());
            ensure((a - b).abs() <= 1e-12, || format!("mechanism {k}, agent {agent}: {a} vs {b}"))?;
        }
    }
    let mut certified = 0;
    let opts = VerifyOptions { random_deviations: 100, seed: 5, ..VerifyOptions::default() };
    for k in 0..30 {
        let mu = sign_pattern_sample(&example_signs(), &mut rng).map_err(|e| e.to_string())?;
        let inst = Instance::identity(vec![mu], 2).map_err(|e| e.to_string())?;
        let mech = if k % 2 == 0 {
            ca_mechanism(&example_signs(), 2).map_err(|e| e.to_string())?
        } else {
            match synthesize_scoring(&inst).map_err(|e| e.to_string())?.status {
                SynthesisStatus::Feasible { mechanism, .. } => mechanism,
                SynthesisStatus::Infeasible { .. } => return Err(format!("sign sample {k} infeasible")),
            }
        };
        let exact = verify_strict(&inst, &mech, VerificationMode::ScoringExact, &opts).map_err(|e| e.to_string())?;
        if !exact.iter().all(|v| v.status == Status::CertifiedStrict) {
            continue;
        }
        certified += 1;
        let general =
            verify_strict(&inst, &mech, VerificationMode::ConsistentGeneral, &opts).map_err(|e| e.to_string())?;
        ensure(general.iter().all(|v| v.status != Status::Refuted), || format!("certified mechanism {k} refuted"))?;
    }
    ensure(certified >= 20, || format!("only {certified} certified mechanisms"))?;
    Ok(format!("100 symmetrizations within {worst:.1e}; {certified} certified mechanisms never refuted"))
}

fn sym(s: &str) -> ReportValue<f64> {
    ReportValue::Symbol(s.into())
}

fn criterion_6() -> Outcome_ {
    // both distributions have peer marginal (0.6, 0.4); report a collects (0.8,0.2) and (0.4,0.6), report b (0.6,0.4)
    let m1 = two_agent_table(&[vec![0.4, 0.1], vec![0.2, 0.3]]).map_err(|e| e.to_string())?;
    let m2 = two_agent_table(&[vec![0.3, 0.2], vec![0.3, 0.2]]).map_err(|e| e.to_string())?;
    let own = vec![vec![sym("a"), sym("a")], vec![sym("b"), sym("b")]];
    let peer = vec![vec![sym("u"), sym("v")]; 2];
    let inst = Instance::new(vec![m1, m2], vec![ReportFunction::Table(own), ReportFunction::Table(peer)], 2)
        .map_err(|e| e.to_string())?;
    let report = check_convex_separation(&inst).map_err(|e| e.to_string())?;
    ensure(report.outcome == Outcome::Violated, || "convex separation passed".into())?;
    let Some(CheckWitness::ConvexCombination { first, second, .. }) = report.witness else {
        return Err("no mixture witness".into());
    };
    let holds = |side: &[(PosteriorSource<f64>, f64)]| side.iter().any(|(s, _)| (s.posterior[0] - 0.8).abs() < 1e-12);
    let mixed = if holds(&first) { first } else { second };
    let mut beta: Vec<(f64, f64)> = mixed.iter().map(|(s, w)| (s.posterior[0], *w)).collect();
    beta.sort_by(|a, b| b.0.total_cmp(&a.0));
    let coeffs: Vec<f64> = beta.iter().map(|(_, w)| *w).collect();
    ensure(coeffs.len() == 2 && coeffs.iter().all(|w| (w - 0.5).abs() <= 1e-9), || format!("coefficients {beta:?}"))?;
    Ok(format!("beta = ({:.12}, {:.12})", coeffs[0], coeffs[1]))
}

fn criterion_7() -> Outcome_ {
    let start = Instant::now();
    let lambda = two_agent_table(&[vec![0.4, 0.1], vec![0.1, 0.4]]).map_err(|e| e.to_string())?;
    let ball = ball_epsilon(&lambda).map_err(|e| e.to_string())?;
    ensure(ball.epsilon > 0.0, || format!("epsilon {}", ball.epsilon))?;
    let samples = sample_ball(&lambda, ball.epsilon, 1000, 2024).map_err(|e| e.to_string())?;
    for (k, mu) in samples.iter().enumerate() {
        let l1: f64 = mu.mass().iter().zip(lambda.mass()).map(|(a, b): (&f64, &f64)| (a - b).abs()).sum();
        ensure(l1 <= ball.epsilon + 1e-15, || format!("sample {k} at distance {l1}"))?;
    }
    let inst = Instance::identity(samples, 2).map_err(|e| e.to_string())?;
    let mech = ball.mechanism(2).map_err(|e| e.to_string())?;
    let verdicts = verify_strict(&inst, &mech, VerificationMode::ScoringExact, &VerifyOptions::default())
        .map_err(|e| e.to_string())?;
    ensure(verdicts.iter().all(|v| v.status == Status::CertifiedStrict), || {
        "a sampled distribution is not certified".into()
    })?;
    let elapsed = start.elapsed();
    ensure(elapsed < Duration::from_secs(120), || format!("took {elapsed:?}"))?;
    Ok(format!("epsilon {:.6}, 1000 samples certified", ball.epsilon))
}

fn criterion_8() -> Outcome_ {
    let dir = tempfile::TempDir::new().unwrap();
    let path = family_file(dir.path(), &example_signs(), 41, 10);
    let mech: Mechanism = ca_mechanism(&example_signs(), 2).map_err(|e| e.to_string())?;
    let params = extract_deh(&mech).map_err(|e| e.to_string())?;
    let mut worst: f64 = 0.0;
    for (label, u) in [("1/3,1/3,1/3", vec![1.0 / 3.0; 3]), ("0.2,0.3,0.5", vec![0.2, 0.3, 0.5])] {
        for agent in 0..2 {
            let diagram: PowerDiagram<f64> = extract_power_diagram(&params, &u, agent).map_err(|e| e.to_string())?;
            // all three power distances coincide at u
            let dist = diagram.distances(&u).map_err(|e| e.to_string())?;
            let spread = dist.iter().fold(f64::NEG_INFINITY, |a, x| a.max(*x))
                - dist.iter().fold(f64::INFINITY, |a, x| a.min(*x));
            ensure(spread <= 1e-9, || format!("distances at {u:?} spread by {spread}"))?;
            let segments = cell_boundaries_2simplex(&diagram).map_err(|e| e.to_string())?;
            ensure(segments.len() == 3, || format!("{} boundary segments at {u:?}", segments.len()))?;
            for seg in &segments {
                let gap = |p: &[f64; 3]| p.iter().zip(&u).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                let meet = gap(&seg.start).min(gap(&seg.end));
                ensure(meet <= 1e-6, || format!("segment {:?} misses {u:?} by {meet}", seg.labels))?;
                worst = worst.max(meet);
            }
        }
        let svg = dir.path().join("plot.svg");
        let (code, _) = cli(&["plot", path.to_str().unwrap(), "--marginal", label, "--out", svg.to_str().unwrap()]);
        ensure(code == 0, || format!("plot exited {code}"))?;
        let text = std::fs::read_to_string(&svg).map_err(|e| e.to_string())?;
        ensure(text.matches("stroke-dasharray").count() == 3, || "plot lacks three boundaries".into())?;
    }
    Ok(format!("boundaries concurrent at both marginals within {worst:.1e}"))
}

fn criterion_9() -> Outcome_ {
    let g = LinearProperty::new(Mat::from_rows(&[vec![0.0, 1.0, 2.0]])).map_err(|e| e.to_string())?;
    ensure(!check_linear_property_rank(&g, 3).map_err(|e| e.to_string())?.passed(), || "rank check passed".into())?;
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let likelihoods = vec![random_columns(3, 3, &mut rng), random_columns(3, 3, &mut rng)];
    let cx = gen_linear_counterexample(&[1.0 / 3.0; 3], &likelihoods, &g, 0.1).map_err(|e| e.to_string())?;
    let s = cx.signal;
    let mean = |ci: &ConditionalIndependent<f64>, agent: usize, s: usize| -> f64 {
        state_posterior(ci, agent, s).iter().enumerate().map(|(w, p)| w as f64 * p).sum()
    };
    // distribution of agent 1's report values, unconditionally and given agent 0's signal s
    let masses = |ci: &ConditionalIndependent<f64>| -> (Vec<(f64, f64)>, Vec<(f64, f64)>) {
        let (l0, l1) = (ci.likelihood(0), ci.likelihood(1));
        let p = ci.prior();
        let given: f64 = (0..3).map(|w| p[w] * l0.get(s, w)).sum();
        let mut total = Vec::new();
        let mut cond = Vec::new();
        for b in 0..l1.rows() {
            let m: f64 = (0..3).map(|w| p[w] * l1.get(b, w)).sum();
            let j: f64 = (0..3).map(|w| p[w] * l0.get(s, w) * l1.get(b, w)).sum();
            total.push((mean(ci, 1, b), m));
            cond.push((mean(ci, 1, b), j / given));
        }
        (merge(total), merge(cond))
    };
    let (base_total, base_cond) = masses(&cx.base);
    let (mod_total, mod_cond) = masses(&cx.modified);
    ensure(same(&base_total, &mod_total), || format!("(a) {base_total:?} vs {mod_total:?}"))?;
    let report_gap = (mean(&cx.base, 0, s) - mean(&cx.modified, 0, s)).abs();
    ensure(report_gap > 1e-9, || format!("(b) report gap {report_gap}"))?;
    ensure(same(&base_cond, &mod_cond), || format!("(c) {base_cond:?} vs {mod_cond:?}"))?;
    let inst = cx.instance(2).map_err(|e| e.to_string())?;
    ensure(!check_marginal_relevance(&inst).passed(), || "marginal relevance holds on the witness pair".into())?;
    Ok(format!("witness pair found at signal {s}, report gap {report_gap:.3e}"))
}

fn merge(mut v: Vec<(f64, f64)>) -> Vec<(f64, f64)> {
    v.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut out: Vec<(f64, f64)> = Vec::new();
    for (k, m) in v {
        match out.last_mut() {
            Some(last) if (last.0 - k).abs() < 1e-9 => last.1 += m,
            _ => out.push((k, m)),
        }
    }
    out
}

fn same(a: &[(f64, f64)], b: &[(f64, f64)]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x.0 - y.0).abs() < 1e-9 && (x.1 - y.1).abs() <= 1e-9)
}

fn simplex_point(k: usize, rng: &mut impl Rng) -> Vec<f64> {
    let raw: Vec<f64> = (0..k).map(|_| rng.random_range(0.01..1.0)).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|x| x / total).collect()
}

fn argmin_label(values: &[f64]) -> Option<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|a, b| values[*a].total_cmp(&values[*b]));
    (values.len() == 1 || values[idx[1]] - values[idx[0]] > 1e-6).then_some(idx[0])
}

fn criterion_10() -> Outcome_ {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    for _ in 0..300 {
        let (r, c) = (rng.random_range(1..=4), rng.random_range(1..=4));
        let w: Vec<Vec<f64>> = (0..r).map(|_| (0..c).map(|_| rng.random_range(0.01..1.0)).collect()).collect();
        let total: f64 = w.iter().flatten().sum();
        let mu = two_agent_table(&w.iter().map(|row| row.iter().map(|x| x / total).collect()).collect::<Vec<_>>())
            .map_err(|e| e.to_string())?;
        let delta = DeltaMatrix::from_joint(&mu.pair_joint(0, 1)).values;
        for i in 0..r {
            let s: f64 = (0..c).map(|j| delta.get(i, j)).sum();
            ensure(s.abs() <= 1e-12, || format!("Delta row sum {s}"))?;
        }
        for j in 0..c {
            let s: f64 = (0..r).map(|i| delta.get(i, j)).sum();
            ensure(s.abs() <= 1e-12, || format!("Delta column sum {s}"))?;
        }
        let inst = Instance::identity(vec![mu], 1).map_err(|e| e.to_string())?;
        for agent in 0..2 {
            for (_, q) in inst.peer_posteriors(0, agent) {
                let s: f64 = q.iter().sum();
                ensure((s - 1.0).abs() <= 1e-12, || format!("posterior sums to {s}"))?;
            }
        }
    }
    for _ in 0..300 {
        let states = rng.random_range(1..=4);
        let (s1, s2) = (rng.random_range(1..=4), rng.random_range(1..=4));
        let likelihoods = vec![random_columns(s1, states, &mut rng), random_columns(s2, states, &mut rng)];
        let (mu, ci) =
            conditional_independent_product(random_prior(states, &mut rng), likelihoods).map_err(|e| e.to_string())?;
        for a in 0..s1 {
            let direct = mu.posterior_peer_signals(0, a).map_err(|e| e.to_string())?;
            let q = state_posterior(&ci, 0, a);
            for (b, x) in direct.iter().enumerate() {
                let via: f64 = (0..states).map(|w| ci.likelihood(1).get(b, w) * q[w]).sum();
                ensure((x - via).abs() <= 1e-12, || format!("conditional identity off by {}", (x - via).abs()))?;
            }
        }
    }
    for _ in 0..1000 {
        let m = rng.random_range(2..=4);
        let k = rng.random_range(1..=5);
        let sites: Vec<Vec<f64>> = (0..k).map(|_| (0..m).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
        let weights: Vec<f64> = (0..k).map(|_| rng.random_range(-1.0..1.0)).collect();
        let labels: Vec<usize> = (0..k).collect();
        let u = simplex_point(m, &mut rng);
        let squared: Vec<f64> = sites
            .iter()
            .zip(&weights)
            .map(|(v, w)| u.iter().zip(v).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() - w)
            .collect();
        let converted = PowerDiagram::from_squared_form(sites.clone(), weights.clone(), labels.clone())
            .map_err(|e| e.to_string())?;
        if let Some(best) = argmin_label(&squared) {
            let cell = converted.cell_assign(&u).map_err(|e| e.to_string())?;
            ensure(cell == CellAssignment::Winner(best), || format!("squared form picks {best}, converted {cell:?}"))?;
        }
        // scaling by a power of two and relabelling leave the winner unchanged
        let diagram = PowerDiagram::new(sites.clone(), weights.clone(), labels.clone()).map_err(|e| e.to_string())?;
        let base = diagram.cell_assign(&u).map_err(|e| e.to_string())?;
        let scaled = PowerDiagram::new(
            sites.iter().map(|v| v.iter().map(|x| 4.0 * x).collect()).collect(),
            weights.iter().map(|w| 4.0 * w).collect(),
            labels.clone(),
        )
        .map_err(|e| e.to_string())?;
        ensure(scaled.cell_assign(&u).map_err(|e| e.to_string())? == base, || "scaling moved a point".into())?;
        let reversed = PowerDiagram::new(
            sites.iter().rev().cloned().collect(),
            weights.iter().rev().copied().collect(),
            labels.iter().rev().copied().collect(),
        )
        .map_err(|e| e.to_string())?;
        let again = reversed.cell_assign(&u).map_err(|e| e.to_string())?;
        let same_cell = match (&base, &again) {
            (CellAssignment::Tie(a), CellAssignment::Tie(b)) => {
                let (mut a, mut b) = (a.clone(), b.clone());
                a.sort_unstable();
                b.sort_unstable();
                a == b
            }
            (a, b) => a == b,
        };
        ensure(same_cell, || "relabelling moved a point".into())?;
    }
    // convex separation against a mixture grid, binary peer reports
    for case in 0..60 {
        let (na, nb) = (rng.random_range(1..=3), rng.random_range(1..=3));
        let pts: Vec<f64> = (0..na + nb).map(|_| rng.random_range(0.05..0.95)).collect();
        let k = (na + nb) as f64;
        let rows: Vec<Vec<f64>> = pts.iter().map(|x| vec![x / k, (1.0 - x) / k]).collect();
        let mu = two_agent_table(&rows).map_err(|e| e.to_string())?;
        let own: Vec<ReportValue<f64>> = (0..na + nb).map(|s| sym(if s < na { "a" } else { "b" })).collect();
        let inst = Instance::new(vec![mu], vec![ReportFunction::Table(vec![own]), ReportFunction::Identity], 1)
            .map_err(|e| e.to_string())?;
        let report = check_convex_separation(&inst).map_err(|e| e.to_string())?;
        let lp = matches!(report.witness, Some(CheckWitness::ConvexCombination { agent: 0, .. }));
        let (a, b) = (&pts[..na], &pts[na..]);
        let (lo, hi) =
            (b.iter().copied().fold(f64::INFINITY, f64::min), b.iter().copied().fold(f64::NEG_INFINITY, f64::max));
        let mut grid = f64::INFINITY;
        let steps = if na == 1 { 0 } else { 100 };
        for i in 0..=steps {
            let t = if steps == 0 { 1.0 } else { i as f64 / steps as f64 };
            let amin = a.iter().copied().fold(f64::INFINITY, f64::min);
            let amax = a.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let x = t * amin + (1.0 - t) * amax;
            grid = grid.min(if x < lo {
                lo - x
            } else if x > hi {
                x - hi
            } else {
                0.0
            });
        }
        ensure(!(grid < 1e-12) || lp, || format!("case {case}: grid meets but LP separates"))?;
        ensure(!lp || grid <= 0.02, || format!("case {case}: LP meets but grid is {grid} away"))?;
    }
    let elapsed = start.elapsed();
    ensure(elapsed < Duration::from_secs(60), || format!("took {elapsed:?}"))?;
    Ok("Delta sums, conditional identity, normalization, diagram invariances, squared form, convex LP vs grid".into())
}

fn main() {
    let criteria: [(&str, fn() -> Outcome_); 10] = [
        ("CA sufficiency", criterion_1),
        ("CA duplicate rows refuted", criterion_2),
        ("Kong truthfulness and rank witnesses", criterion_3),
        ("synthesis round trip", criterion_4),
        ("consistency equivalence", criterion_5),
        ("convex combination coefficients", criterion_6),
        ("robustness ball", criterion_7),
        ("simplex plot concurrency", criterion_8),
        ("linear property counterexample", criterion_9),
        ("property suite", criterion_10),
    ];
    let mut failed = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = run();
        let secs = start.elapsed().as_secs_f64();
        let limit = match k + 1 {
            1 | 10 => Some(60.0),
            7 => Some(120.0),
            _ => None,
        };
        let result = match (result, limit) {
            (Ok(_), Some(l)) if secs >= l => Err(format!("exceeded {l} s")),
            (r, _) => r,
        };
        match result {
            Ok(detail) => println!("criterion {:>2} PASS  {name} ({secs:.2} s): {detail}", k + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name} ({secs:.2} s): {detail}", k + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
