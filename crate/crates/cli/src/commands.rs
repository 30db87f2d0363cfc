//! Subcommand implementations. Each returns the process exit code:
//! 0 success, 1 invalid input, 2 bound assertion failure, 3 scale cap
//! exceeded, 4 reduction failure.

use std::fs;
use std::path::Path;
use std::time::Instant;

use anyhow::{Context, Result};
use serde::Serialize;

use equilearn_core::dynamics::{
    empirical_distribution, external_regret_bound, per_type_swap_regret, run_dynamics_with_options,
    DynamicsOptions, DynamicsParams, DynamicsTrace, RewardMode,
};
use equilearn_core::eq_check::{
    behaviorization_demo, check_every_type_nfce, check_ex_ante_nfce, CheckError, EquilibriumReport,
    TypeScope, Witness, GAIN_SLACK,
};
use equilearn_core::gadget::{
    kibitzer_deviation_utility, reduction_extract_bne, PosteriorStrategy, ReductionStatus,
};
use equilearn_core::game::BayesianGame;
use equilearn_core::rng::SeedTree;

use crate::io;
use crate::{CheckEqArgs, CheckNotion, ReductionArgs, RunDynamicsArgs};

fn parse_reward_mode(text: &str) -> Result<RewardMode> {
    if text == "exact" {
        return Ok(RewardMode::Exact);
    }
    if let Some(rest) = text.strip_prefix("sampled:") {
        let sample_count: usize = rest
            .parse()
            .with_context(|| format!("bad sample count in reward mode '{text}'"))?;
        return Ok(RewardMode::Sampled { sample_count });
    }
    anyhow::bail!("reward mode must be 'exact' or 'sampled:N', got '{text}'");
}

fn reward_mode_label(mode: RewardMode) -> String {
    match mode {
        RewardMode::Exact => "exact".to_string(),
        RewardMode::Sampled { sample_count } => format!("sampled:{sample_count}"),
    }
}

#[derive(Serialize)]
struct TraceRow {
    day: usize,
    player: usize,
    thread: usize,
    #[serde(rename = "type")]
    type_index: usize,
    action: usize,
    probability: f64,
}

#[derive(Serialize)]
struct RegretRow {
    kind: &'static str,
    player: usize,
    thread: Option<usize>,
    restart: Option<usize>,
    #[serde(rename = "type")]
    type_index: usize,
    value: f64,
    bound: f64,
}

#[derive(Serialize)]
struct SummaryParams {
    epsilon: f64,
    rounds_per_block: usize,
    thread_count: usize,
    total_days: usize,
    reward_mode: String,
    seed: u64,
}

#[derive(Serialize)]
struct SwapSummary {
    player: usize,
    type_index: usize,
    total: f64,
    per_day: f64,
}

#[derive(Serialize)]
struct Summary {
    params: SummaryParams,
    max_external_regret_ratio: f64,
    external_bounds_ok: bool,
    swap_regret: Vec<SwapSummary>,
    swap_bound_per_day: f64,
    swap_bounds_ok: bool,
    equilibrium: EquilibriumReport,
}

fn write_trace_csv(path: &Path, trace: &DynamicsTrace) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)?;
    let params = trace.params();
    for t in 1..=params.total_days() {
        for player in 0..trace.num_players() {
            for thread in 1..=params.thread_count() {
                let strategy = trace.thread_strategy(t, player, thread);
                for (type_index, dist) in strategy.dists().iter().enumerate() {
                    for (action, &probability) in dist.probs().iter().enumerate() {
                        writer.serialize(TraceRow {
                            day: t,
                            player,
                            thread,
                            type_index,
                            action,
                            probability,
                        })?;
                    }
                }
            }
        }
    }
    writer.flush()?;
    Ok(())
}

pub fn cmd_run_dynamics(args: RunDynamicsArgs) -> Result<i32> {
    let game = match io::load_game(&args.game) {
        Ok(g) => g,
        Err(e) => {
            eprintln!("error: {e:#}");
            return Ok(1);
        }
    };
    let reward_mode = match parse_reward_mode(&args.reward_mode) {
        Ok(m) => m,
        Err(e) => {
            eprintln!("error: {e:#}");
            return Ok(1);
        }
    };
    let max_actions = game.action_counts().iter().copied().max().unwrap_or(2);
    let params = match (args.rounds_per_block, args.threads) {
        (Some(h), Some(l)) => DynamicsParams::with_schedule(args.eps, h, l, reward_mode),
        (None, None) => DynamicsParams::from_epsilon(args.eps, max_actions, reward_mode),
        _ => {
            eprintln!("error: --H and --L must be given together");
            return Ok(1);
        }
    };
    let params = match params {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return Ok(1);
        }
    };
    let options = DynamicsOptions {
        corrupt_learner: args.corrupt_mwu,
    };
    let trace = run_dynamics_with_options(&game, &params, args.seed, options)?;

    fs::create_dir_all(&args.out)
        .with_context(|| format!("cannot create {}", args.out.display()))?;
    write_trace_csv(&args.out.join("trace.csv"), &trace)?;

    // Regret accounting: per-restart external regret and per-type swap
    // regret, each against its pinned budget.
    let mut regret_writer = csv::Writer::from_path(args.out.join("regret.csv"))?;
    let mut max_ratio = 0.0f64;
    let mut external_ok = true;
    for player in 0..trace.num_players() {
        let n = trace.action_counts()[player];
        for thread in 1..=params.thread_count() {
            let bound = external_regret_bound(params.rounds_per_block(), n, thread);
            for restart in 1..=params.restart_count(thread) {
                for type_index in 0..trace.type_counts()[player] {
                    let value = equilearn_core::dynamics::thread_external_regret(
                        &trace, player, thread, restart, type_index,
                    )?;
                    max_ratio = max_ratio.max(value / bound);
                    if value > bound + GAIN_SLACK {
                        external_ok = false;
                    }
                    regret_writer.serialize(RegretRow {
                        kind: "external",
                        player,
                        thread: Some(thread),
                        restart: Some(restart),
                        type_index,
                        value,
                        bound,
                    })?;
                }
            }
        }
    }
    let total_days = params.total_days() as f64;
    let swap_bound_per_day = 3.0 * params.epsilon();
    let mut swaps = Vec::new();
    let mut worst_per_day = 0.0f64;
    let mut worst_witness: Option<Witness> = None;
    for player in 0..trace.num_players() {
        for type_index in 0..trace.type_counts()[player] {
            let total = per_type_swap_regret(&trace, player, type_index)?;
            let per_day = total / total_days;
            regret_writer.serialize(RegretRow {
                kind: "swap",
                player,
                thread: None,
                restart: None,
                type_index,
                value: total,
                bound: swap_bound_per_day * total_days,
            })?;
            if per_day > worst_per_day {
                worst_per_day = per_day;
                worst_witness = Some(Witness {
                    player,
                    scope: TypeScope::Type(type_index),
                    deviation: format!("best per-type swap gains {per_day:.6} per day"),
                });
            }
            swaps.push(SwapSummary {
                player,
                type_index,
                total,
                per_day,
            });
        }
    }
    regret_writer.flush()?;
    let swap_ok = worst_per_day <= swap_bound_per_day + GAIN_SLACK;

    // The per-day swap gain of the factored empirical play equals the
    // best swap gain of the expanded mixture, so this is the every-type
    // report at 3·eps without materializing the expansion.
    let equilibrium = EquilibriumReport {
        satisfied: swap_ok,
        epsilon: swap_bound_per_day,
        worst_gain: worst_per_day,
        witness: if swap_ok { None } else { worst_witness },
    };

    let summary = Summary {
        params: SummaryParams {
            epsilon: params.epsilon(),
            rounds_per_block: params.rounds_per_block(),
            thread_count: params.thread_count(),
            total_days: params.total_days(),
            reward_mode: reward_mode_label(params.reward_mode()),
            seed: args.seed,
        },
        max_external_regret_ratio: max_ratio,
        external_bounds_ok: external_ok,
        swap_regret: swaps,
        swap_bound_per_day,
        swap_bounds_ok: swap_ok,
        equilibrium,
    };
    fs::write(
        args.out.join("summary.json"),
        serde_json::to_string_pretty(&summary)?,
    )?;

    if args.assert_bounds && !(external_ok && swap_ok) {
        eprintln!("bound assertion failed: external_ok={external_ok} swap_ok={swap_ok}");
        return Ok(2);
    }
    Ok(0)
}

pub fn cmd_check_eq(args: CheckEqArgs) -> Result<i32> {
    let game = match io::load_game(&args.game) {
        Ok(g) => g,
        Err(e) => {
            eprintln!("error: {e:#}");
            return Ok(1);
        }
    };
    let mixture = match io::load_mixture(&args.mu, &game) {
        Ok(m) => m,
        Err(e) => {
            eprintln!("error: {e:#}");
            return Ok(1);
        }
    };
    let checked = match args.notion {
        CheckNotion::EveryType => check_every_type_nfce(&mixture, &game, args.eps),
        CheckNotion::ExAnte => check_ex_ante_nfce(&mixture, &game, args.eps),
    };
    let report = match checked {
        Ok(r) => r,
        Err(CheckError::ScaleCapExceeded { size, cap }) => {
            eprintln!("error: pure-strategy space of size {size} exceeds the cap {cap}");
            return Ok(3);
        }
        Err(e) => {
            eprintln!("error: {e}");
            return Ok(1);
        }
    };
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(if report.satisfied { 0 } else { 1 })
}

#[derive(Serialize)]
struct PosteriorOut {
    weights: Vec<f64>,
    // [component][type][action]
    components: Vec<Vec<Vec<f64>>>,
}

impl PosteriorOut {
    fn from_strategy(p: &PosteriorStrategy) -> Self {
        PosteriorOut {
            weights: p.weights.clone(),
            components: p
                .components
                .iter()
                .map(|b| b.dists().iter().map(|d| d.probs().to_vec()).collect())
                .collect(),
        }
    }
}

#[derive(Serialize)]
struct ReductionOut {
    status: &'static str,
    gadgets_visited: usize,
    best_gain: Option<f64>,
    report: Option<EquilibriumReport>,
    players: Option<Vec<PosteriorOut>>,
    kibitzer_deviation_mean: f64,
    kibitzer_deviation_stderr: f64,
}

pub fn cmd_reduction(args: ReductionArgs) -> Result<i32> {
    let game = match io::load_game(&args.game) {
        Ok(g) => g,
        Err(e) => {
            eprintln!("error: {e:#}");
            return Ok(1);
        }
    };
    let (mu, rank) = match io::load_cce(&args.mu, &game) {
        Ok(pair) => pair,
        Err(e) => {
            eprintln!("error: {e:#}");
            return Ok(1);
        }
    };
    if let Some(expected) = args.t_rank {
        if expected != rank {
            eprintln!("error: rank-T file has {rank} components, expected {expected}");
            return Ok(1);
        }
    }
    if args.budget == 0 {
        // Nothing can be visited; report the failure rather than erroring.
        fs::create_dir_all(&args.out)
            .with_context(|| format!("cannot create {}", args.out.display()))?;
        let out = serde_json::json!({
            "status": "exhausted",
            "gadgets_visited": 0,
            "best_gain": null,
            "report": null,
            "players": null,
        });
        fs::write(
            args.out.join("failure.json"),
            serde_json::to_string_pretty(&out)?,
        )?;
        println!("{out}");
        return Ok(4);
    }
    let outcome = reduction_extract_bne(
        &game,
        args.repetitions,
        &mu,
        args.eps,
        args.budget,
        args.seed,
    );
    let outcome = match outcome {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return Ok(1);
        }
    };
    if let Some(w) = &outcome.schedule_warning {
        eprintln!("warning: {w}");
    }
    let kibitzer = kibitzer_deviation_utility(
        &game,
        args.repetitions,
        &mu,
        args.eps,
        args.rollouts,
        args.seed.wrapping_add(1),
    )?;

    fs::create_dir_all(&args.out)
        .with_context(|| format!("cannot create {}", args.out.display()))?;
    let (exit, out) = match outcome.status {
        ReductionStatus::Found { profile, report } => (
            0,
            ReductionOut {
                status: "found",
                gadgets_visited: outcome.gadgets_visited,
                best_gain: Some(report.worst_gain),
                report: Some(report),
                players: Some(profile.iter().map(PosteriorOut::from_strategy).collect()),
                kibitzer_deviation_mean: kibitzer.utilities.mean[2],
                kibitzer_deviation_stderr: kibitzer.utilities.stderr[2],
            },
        ),
        ReductionStatus::Exhausted {
            best_profile,
            best_gain,
        } => (
            4,
            ReductionOut {
                status: "exhausted",
                gadgets_visited: outcome.gadgets_visited,
                best_gain: Some(best_gain),
                report: None,
                players: best_profile.map(|p| p.iter().map(PosteriorOut::from_strategy).collect()),
                kibitzer_deviation_mean: kibitzer.utilities.mean[2],
                kibitzer_deviation_stderr: kibitzer.utilities.stderr[2],
            },
        ),
    };
    let name = if exit == 0 {
        "bne.json"
    } else {
        "failure.json"
    };
    fs::write(args.out.join(name), serde_json::to_string_pretty(&out)?)?;
    println!(
        "{}",
        serde_json::json!({
            "status": out.status,
            "gadgets_visited": out.gadgets_visited,
            "kibitzer_deviation_mean": out.kibitzer_deviation_mean,
            "kibitzer_deviation_stderr": out.kibitzer_deviation_stderr,
        })
    );
    Ok(exit)
}

pub fn cmd_demo(n: usize) -> Result<i32> {
    let demo = match behaviorization_demo(n) {
        Ok(d) => d,
        Err(e) => {
            eprintln!("error: {e}");
            return Ok(1);
        }
    };
    println!(
        "{}",
        serde_json::json!({
            "n": n,
            "ce_gain": demo.ce_gain,
            "behaviorized_gain": demo.behaviorized_gain,
        })
    );
    Ok(0)
}

#[derive(Serialize)]
struct BenchReport {
    mwu_updates_per_sec: f64,
    dynamics_run_ms: f64,
    swap_regret_eval_ms: f64,
    equilibrium_check_ms: f64,
    demo_ms: f64,
}

pub fn cmd_bench() -> Result<i32> {
    use equilearn_core::regret::MwuState;

    let start = Instant::now();
    let mut mwu = MwuState::with_default_eta(8, 100_000, 1.0)?;
    let reward: Vec<f64> = (0..8).map(|i| (i as f64) / 8.0).collect();
    for _ in 0..100_000 {
        mwu.update(&reward)?;
    }
    let mwu_updates_per_sec = 100_000.0 / start.elapsed().as_secs_f64();

    let mut rng = SeedTree::new(1).rng();
    let game = BayesianGame::random(&[2, 2], &[2, 2], &mut rng);
    let params = DynamicsParams::from_epsilon(0.4, 2, RewardMode::Exact)?;
    let start = Instant::now();
    let trace = run_dynamics_with_options(&game, &params, 1, DynamicsOptions::default())?;
    let dynamics_run_ms = start.elapsed().as_secs_f64() * 1e3;

    let start = Instant::now();
    for player in 0..2 {
        for type_index in 0..2 {
            per_type_swap_regret(&trace, player, type_index)?;
        }
    }
    let swap_regret_eval_ms = start.elapsed().as_secs_f64() * 1e3;

    let start = Instant::now();
    let mu = empirical_distribution(&trace).expand(4096)?;
    check_every_type_nfce(&mu, &game, 3.0 * params.epsilon())?;
    let equilibrium_check_ms = start.elapsed().as_secs_f64() * 1e3;

    let start = Instant::now();
    behaviorization_demo(100)?;
    let demo_ms = start.elapsed().as_secs_f64() * 1e3;

    let report = BenchReport {
        mwu_updates_per_sec,
        dynamics_run_ms,
        swap_regret_eval_ms,
        equilibrium_check_ms,
        demo_ms,
    };
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(0)
}
