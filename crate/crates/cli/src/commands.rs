//! Subcommands.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use peerpred_core::analysis::{
    ball_epsilon, gen_linear_counterexample, gen_rank_counterexample, linear_properties, run_all_checks, sample_ball,
    CheckKind, CheckWitness, Outcome,
};
use peerpred_core::mechanisms::{ca_mechanism, extract_deh, extract_power_diagram, kong_mechanism};
use peerpred_core::model::{sign_pattern, ReportFunction, SignMatrix};
use peerpred_core::synthesis::{synthesize_with_limit, DEFAULT_MAX_VARIABLES};
use peerpred_core::verifier::{expected_payment, simulate, DEFAULT_TERM_BUDGET};
use peerpred_core::{
    verify_strict, Error, Instance, Mechanism, Statistic, Status, Strategy, SynthesisStatus, Verdict, VerificationMode,
    VerifyOptions,
};
use serde::Serialize;
use serde_json::json;

use crate::mechanism_file::{read_mechanism, MechanismFile};
use crate::schema::{parse_instance, to_file, write_json, Loaded};
use crate::svg::render_simplex_svg;
use crate::{CliError, EXIT_FAIL, EXIT_PASS, MAX_VARIABLES_ENV, TERM_BUDGET_ENV};

#[derive(Debug, Parser)]
#[command(name = "peerpred", version, about = "Certify, refute and synthesize multi-task peer prediction mechanisms")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run every necessary-condition check.
    Check {
        instance: PathBuf,
        /// Print the JSON report instead of the summary.
        #[arg(long)]
        json: bool,
        /// Also write the JSON report to this file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Search for a strictly truthful scoring mechanism.
    Synthesize {
        instance: PathBuf,
        #[arg(long, value_enum, default_value_t = StatisticArg::Identity)]
        statistic: StatisticArg,
        /// Mechanism file to write; printed to stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        max_variables: Option<usize>,
    },
    /// Certify or refute a mechanism on every distribution and agent.
    Verify {
        instance: PathBuf,
        #[command(flatten)]
        mechanism: MechanismArgs,
        #[arg(long, value_enum, default_value_t = ModeArg::ScoringExact)]
        mode: ModeArg,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Random consistent deviations tried in consistent-general mode.
        #[arg(long, default_value_t = 200)]
        deviations: usize,
        #[arg(long)]
        json: bool,
    },
    /// Compare exact and Monte Carlo payments under truthful reporting.
    Simulate {
        instance: PathBuf,
        #[command(flatten)]
        mechanism: MechanismArgs,
        /// Only this distribution; every distribution when absent.
        #[arg(long)]
        distribution: Option<usize>,
        #[arg(long, default_value_t = 10_000)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Draw an agent's posteriors and diagram cells over the 2-simplex.
    Plot {
        instance: PathBuf,
        #[arg(long, default_value_t = 0)]
        agent: usize,
        /// Peer report marginal, e.g. `1/3,1/3,1/3`.
        #[arg(long)]
        marginal: String,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        mechanism: MechanismArgs,
    },
    /// Robustness radius around distribution 0 and a sampled-ball check.
    Ball {
        instance: PathBuf,
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 2)]
        tasks: usize,
    },
    /// Write a witness instance for a failed rank condition.
    Counterexample {
        instance: PathBuf,
        #[arg(long, value_enum)]
        kind: CounterexampleKind,
        #[arg(long, default_value_t = 0)]
        agent: usize,
        /// Perturbation size for the linear construction.
        #[arg(long, default_value_t = 0.1)]
        delta: f64,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, clap::Args)]
pub struct MechanismArgs {
    #[arg(long, value_enum, default_value_t = MechanismArg::Ca)]
    pub mechanism: MechanismArg,
    /// Mechanism file for `--mechanism file`.
    #[arg(long)]
    pub file: Option<PathBuf>,
    /// CA sign matrix as JSON, e.g. `[[1,-1],[-1,1]]`; defaults to the signs
    /// of distribution 0.
    #[arg(long)]
    pub signs: Option<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum MechanismArg {
    Ca,
    Kong,
    File,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    ScoringExact,
    ConsistentGeneral,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum StatisticArg {
    Identity,
    Constant,
    Histogram,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum CounterexampleKind {
    Linear,
    Rank,
}

type Out<'a> = &'a mut dyn Write;

fn io(e: std::io::Error) -> CliError {
    CliError::Io(e.to_string())
}

pub fn run(cli: Cli, out: Out) -> Result<i32, CliError> {
    match cli.command {
        Command::Check { instance, json, out: file } => check(&parse_instance(&instance)?, json, file.as_deref(), out),
        Command::Synthesize { instance, statistic, out: file, max_variables } => {
            synthesize(&parse_instance(&instance)?, statistic, file.as_deref(), max_variables, out)
        }
        Command::Verify { instance, mechanism, mode, seed, deviations, json } => {
            let loaded = parse_instance(&instance)?;
            let options = VerifyOptions { random_deviations: deviations, seed, term_budget: term_budget()? };
            verify(&loaded.instance, &mechanism, mode, &options, json, out)
        }
        Command::Simulate { instance, mechanism, distribution, trials, seed } => {
            simulate_cmd(&parse_instance(&instance)?.instance, &mechanism, distribution, trials, seed, out)
        }
        Command::Plot { instance, agent, marginal, out: file, mechanism } => {
            plot(&parse_instance(&instance)?.instance, agent, &marginal, &file, &mechanism, out)
        }
        Command::Ball { instance, samples, seed, tasks } => {
            ball(&parse_instance(&instance)?.instance, samples, seed, tasks, out)
        }
        Command::Counterexample { instance, kind, agent, delta, out: file } => {
            counterexample(&parse_instance(&instance)?, kind, agent, delta, &file, out)
        }
    }
}

fn env_number<T: std::str::FromStr>(name: &str) -> Result<Option<T>, CliError> {
    match std::env::var(name) {
        Ok(v) => {
            v.trim().parse().map(Some).map_err(|_| CliError::Validation(format!("{name} must be a positive integer")))
        }
        Err(_) => Ok(None),
    }
}

fn term_budget() -> Result<u64, CliError> {
    Ok(env_number(TERM_BUDGET_ENV)?.unwrap_or(DEFAULT_TERM_BUDGET))
}

fn check_name(kind: CheckKind) -> &'static str {
    match kind {
        CheckKind::StochasticRelevance => "check_stochastic_relevance",
        CheckKind::MarginalRelevance => "check_marginal_relevance",
        CheckKind::ConvexSeparation => "check_convex_separation",
        CheckKind::Permutation => "check_permutation",
        CheckKind::RankPosterior => "check_rank_posterior",
        CheckKind::LinearPropertyRank => "check_linear_property_rank",
    }
}

#[derive(Serialize)]
struct CheckEntry<'a> {
    name: &'static str,
    outcome: Outcome,
    witness: &'a Option<CheckWitness<f64>>,
}

#[derive(Serialize)]
struct CheckFile<'a> {
    schema_version: u32,
    instance: Option<&'a str>,
    passed: bool,
    checks: Vec<CheckEntry<'a>>,
}

fn check(loaded: &Loaded, json: bool, file: Option<&Path>, out: Out) -> Result<i32, CliError> {
    let linear = linear_properties(&loaded.functions)?;
    let reports = run_all_checks(&loaded.instance, &linear)?;
    let passed = reports.iter().all(|r| r.passed());
    let doc = CheckFile {
        schema_version: crate::schema::SCHEMA_VERSION,
        instance: loaded.instance.name.as_deref(),
        passed,
        checks: reports
            .iter()
            .map(|r| CheckEntry { name: check_name(r.check), outcome: r.outcome, witness: &r.witness })
            .collect(),
    };
    if let Some(path) = file {
        write_json(path, &doc)?;
    }
    if json {
        let text = serde_json::to_string_pretty(&doc).map_err(|e| CliError::Io(e.to_string()))?;
        writeln!(out, "{text}").map_err(io)?;
    } else {
        for entry in &doc.checks {
            let verdict = if entry.outcome == Outcome::Pass { "pass" } else { "VIOLATED" };
            writeln!(out, "{:<28} {verdict}", entry.name).map_err(io)?;
            if let Some(w) = entry.witness {
                writeln!(out, "  witness: {}", serde_json::to_string(w).map_err(|e| CliError::Io(e.to_string()))?)
                    .map_err(io)?;
            }
        }
        writeln!(out, "{}", if passed { "all checks passed" } else { "some checks violated" }).map_err(io)?;
    }
    Ok(if passed { EXIT_PASS } else { EXIT_FAIL })
}

fn synthesize(
    loaded: &Loaded,
    statistic: StatisticArg,
    file: Option<&Path>,
    max_variables: Option<usize>,
    out: Out,
) -> Result<i32, CliError> {
    let inst = &loaded.instance;
    let stat = match statistic {
        StatisticArg::Identity => Statistic::identity(inst),
        StatisticArg::Constant => Statistic::constant(inst),
        StatisticArg::Histogram => Statistic::histogram(inst),
    };
    let limit = match max_variables {
        Some(n) => n,
        None => env_number(MAX_VARIABLES_ENV)?.unwrap_or(DEFAULT_MAX_VARIABLES),
    };
    let result = synthesize_with_limit(inst, &stat, limit)?;
    for s in &result.lp_stats {
        writeln!(
            out,
            "agent {}: {} variables, {} constraints, {} pivots, margin {:.6e}",
            s.agent, s.variables, s.constraints, s.iterations, s.margin
        )
        .map_err(io)?;
    }
    match &result.status {
        SynthesisStatus::Feasible { mechanism, margin } => {
            let certificate = json!({ "margin": margin, "statistic": result.statistic, "lp_stats": result.lp_stats });
            let doc = MechanismFile::from_mechanism(mechanism, Some(certificate));
            match file {
                Some(path) => write_json(path, &doc)?,
                None => {
                    writeln!(out, "{}", serde_json::to_string_pretty(&doc).map_err(|e| CliError::Io(e.to_string()))?)
                        .map_err(io)?
                }
            }
            writeln!(out, "feasible: margin {margin:.6e} ({} statistic)", result.statistic).map_err(io)?;
            Ok(EXIT_PASS)
        }
        SynthesisStatus::Infeasible { agent, best_margin } => {
            writeln!(
                out,
                "infeasible: agent {agent} has best margin {best_margin:.6e} ({} statistic)",
                result.statistic
            )
            .map_err(io)?;
            Ok(EXIT_FAIL)
        }
    }
}

/// CA signs from distribution 0's report correlations unless given.
fn ca_signs(inst: &Instance, explicit: Option<&str>) -> Result<SignMatrix, CliError> {
    match explicit {
        Some(text) => serde_json::from_str(text).map_err(|e| CliError::Parse(format!("--signs: {e}"))),
        None => Ok(sign_pattern(&inst.report_delta(0)?.values)),
    }
}

pub fn build_mechanism(inst: &Instance, args: &MechanismArgs) -> Result<Mechanism, CliError> {
    Ok(match args.mechanism {
        MechanismArg::Ca => ca_mechanism(&ca_signs(inst, args.signs.as_deref())?, inst.task_count())?,
        MechanismArg::Kong => kong_mechanism(inst)?,
        MechanismArg::File => {
            let path =
                args.file.as_ref().ok_or_else(|| CliError::Validation("--mechanism file needs --file".into()))?;
            read_mechanism(path)?.to_mechanism()?
        }
    })
}

fn status_name(s: Status) -> &'static str {
    match s {
        Status::CertifiedStrict => "certified-strict",
        Status::Refuted => "refuted",
        Status::PassedChecks => "passed-checks",
    }
}

fn verify(
    inst: &Instance,
    args: &MechanismArgs,
    mode: ModeArg,
    options: &VerifyOptions,
    json: bool,
    out: Out,
) -> Result<i32, CliError> {
    let mech = build_mechanism(inst, args)?;
    let mode = match mode {
        ModeArg::ScoringExact => VerificationMode::ScoringExact,
        ModeArg::ConsistentGeneral => VerificationMode::ConsistentGeneral,
    };
    let verdicts: Vec<Verdict<f64>> = verify_strict(inst, &mech, mode, options)?;
    let refuted = verdicts.iter().any(|v| v.status == Status::Refuted);
    if json {
        let text = serde_json::to_string_pretty(&verdicts).map_err(|e| CliError::Io(e.to_string()))?;
        writeln!(out, "{text}").map_err(io)?;
    } else {
        writeln!(out, "{:>6} {:>6}  {:<16} {:>14} {:>14}", "dist", "agent", "status", "margin", "gain").map_err(io)?;
        for v in &verdicts {
            let gain = v.witness.as_ref().map_or("-".to_string(), |w| format!("{:.6e}", w.gain + 0.0));
            writeln!(
                out,
                "{:>6} {:>6}  {:<16} {:>14.6e} {:>14}",
                v.distribution,
                v.agent,
                status_name(v.status),
                v.margin,
                gain
            )
            .map_err(io)?;
            if let (Status::Refuted, Some(w)) = (v.status, &v.witness) {
                for (t, map) in w.strategy.maps().iter().enumerate() {
                    writeln!(out, "    deviation task {t}: {:?}", map.to_rows()).map_err(io)?;
                }
            }
        }
        let certified = verdicts.iter().filter(|v| v.status == Status::CertifiedStrict).count();
        writeln!(
            out,
            "{certified}/{} certified, {}",
            verdicts.len(),
            if refuted { "refuted" } else { "no refutation" }
        )
        .map_err(io)?;
    }
    Ok(if refuted { EXIT_FAIL } else { EXIT_PASS })
}

fn simulate_cmd(
    inst: &Instance,
    args: &MechanismArgs,
    distribution: Option<usize>,
    trials: usize,
    seed: u64,
    out: Out,
) -> Result<i32, CliError> {
    let mech = build_mechanism(inst, args)?;
    let dists: Vec<usize> = match distribution {
        Some(d) if d >= inst.distribution_count() => {
            return Err(CliError::Validation(format!("distribution {d} does not exist")))
        }
        Some(d) => vec![d],
        None => (0..inst.distribution_count()).collect(),
    };
    let budget = term_budget()?;
    writeln!(out, "{:>6} {:>6} {:>16} {:>16} {:>14}", "dist", "agent", "exact", "simulated", "std_error")
        .map_err(io)?;
    for d in dists {
        let profile = Strategy::truthful_profile(inst, d);
        let report = simulate(inst, d, &mech, &profile, trials, seed.wrapping_add(d as u64))?;
        for i in 0..inst.agent_count() {
            let exact = expected_payment(inst, d, &mech, i, &profile, budget)?;
            writeln!(out, "{d:>6} {i:>6} {exact:>16.8} {:>16.8} {:>14.8}", report.means[i], report.std_errors[i])
                .map_err(io)?;
        }
    }
    Ok(EXIT_PASS)
}

/// Parses `a,b,c` where each entry is a decimal or a fraction `p/q`.
pub fn parse_marginal(text: &str) -> Result<Vec<f64>, CliError> {
    let bad = || CliError::Parse(format!("cannot parse marginal {text:?}"));
    text.split(',')
        .map(|part| {
            let part = part.trim();
            match part.split_once('/') {
                Some((p, q)) => {
                    let (p, q): (f64, f64) =
                        (p.trim().parse().map_err(|_| bad())?, q.trim().parse().map_err(|_| bad())?);
                    Ok(p / q)
                }
                None => part.parse().map_err(|_| bad()),
            }
        })
        .collect()
}

fn plot(
    inst: &Instance,
    agent: usize,
    marginal: &str,
    file: &Path,
    args: &MechanismArgs,
    out: Out,
) -> Result<i32, CliError> {
    let u = parse_marginal(marginal)?;
    let total: f64 = u.iter().sum();
    if u.iter().any(|x| !x.is_finite() || *x < 0.0) || (total - 1.0).abs() > 1e-9 {
        return Err(CliError::Validation(format!("marginal {u:?} is not a probability vector")));
    }
    if agent >= inst.agent_count() {
        return Err(CliError::Validation(format!("agent {agent} does not exist")));
    }
    if inst.peer_report_count(agent) != 3 {
        return Err(CliError::Dimension(format!(
            "plots need three peer reports, agent {agent} has {}",
            inst.peer_report_count(agent)
        )));
    }
    let mech = build_mechanism(inst, args)?;
    let params = extract_deh(&mech)?;
    let diagram = extract_power_diagram(&params, &u, agent)?;
    let svg = render_simplex_svg(inst, agent, &u, &diagram)?;
    std::fs::write(file, svg).map_err(|e| CliError::Io(format!("{}: {e}", file.display())))?;
    writeln!(out, "wrote {}", file.display()).map_err(io)?;
    Ok(EXIT_PASS)
}

fn ball(inst: &Instance, samples: usize, seed: u64, tasks: usize, out: Out) -> Result<i32, CliError> {
    let lambda = inst.distribution(0);
    let eps = ball_epsilon(lambda)?;
    writeln!(out, "min_gap {:.12}", eps.min_gap).map_err(io)?;
    writeln!(out, "epsilon0 {:.12}", eps.epsilon0).map_err(io)?;
    writeln!(out, "epsilon {:.12}", eps.epsilon).map_err(io)?;
    writeln!(out, "conservative_epsilon {:.12}", eps.conservative_epsilon).map_err(io)?;
    if samples == 0 {
        return Ok(EXIT_PASS);
    }
    let members = sample_ball(lambda, eps.epsilon, samples, seed)?;
    let sampled = Instance::identity(members, tasks)?;
    let mech = eps.mechanism(tasks)?;
    let verdicts = verify_strict(&sampled, &mech, VerificationMode::ScoringExact, &VerifyOptions::default())?;
    let distributions = sampled.distribution_count();
    let certified = (0..distributions)
        .filter(|d| verdicts.iter().filter(|v| v.distribution == *d).all(|v| v.status == Status::CertifiedStrict))
        .count();
    let worst = verdicts.iter().map(|v| v.margin).fold(f64::INFINITY, f64::min);
    writeln!(out, "sampled {distributions}, certified {certified}, smallest margin {worst:.6e}").map_err(io)?;
    Ok(if certified == distributions { EXIT_PASS } else { EXIT_FAIL })
}

fn counterexample(
    loaded: &Loaded,
    kind: CounterexampleKind,
    agent: usize,
    delta: f64,
    file: &Path,
    out: Out,
) -> Result<i32, CliError> {
    let inst = &loaded.instance;
    let built = match kind {
        CounterexampleKind::Linear => {
            let property = linear_properties(&loaded.functions)?
                .into_iter()
                .flatten()
                .next()
                .ok_or_else(|| CliError::Validation("no agent reports a linear property".into()))?;
            let base = inst.factorization(0)?;
            gen_linear_counterexample(base.prior(), base.likelihoods(), &property, delta).and_then(|ce| {
                writeln!(
                    out,
                    "marginal gap {:.3e}, posterior gap {:.3e}, report gap {:.3e}",
                    ce.marginal_gap, ce.posterior_gap, ce.report_gap
                )
                .ok();
                let g = ReportFunction::Linear(ce.property.clone());
                Ok((ce.instance(inst.task_count())?, vec![g.clone(), g]))
            })
        }
        CounterexampleKind::Rank => gen_rank_counterexample(inst.factorization(0)?, agent).and_then(|ce| {
            writeln!(
                out,
                "peer posterior gap {:.3e}, state posterior gap {:.3e}",
                ce.peer_posterior_gap, ce.state_posterior_gap
            )
            .ok();
            let witness = ce.instance(inst.task_count())?;
            let n = witness.agent_count();
            Ok((witness, vec![ReportFunction::Posterior; n]))
        }),
    };
    match built {
        Ok((witness, functions)) => {
            write_json(file, &to_file(&witness, &functions))?;
            writeln!(out, "wrote witness instance {}", file.display()).map_err(io)?;
            Ok(EXIT_FAIL)
        }
        Err(Error::NotApplicable(msg)) => {
            writeln!(out, "no counterexample: {msg}").map_err(io)?;
            Ok(EXIT_PASS)
        }
        Err(e) => Err(e.into()),
    }
}
