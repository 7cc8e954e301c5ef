use std::fs;
use std::path::{Path, PathBuf};

use carfollow_core::ddpg::{self, ActorPolicy};
use carfollow_core::eval::{self, PolicyFactory};
use carfollow_core::synthetic::{self, FleetConfig};
use carfollow_core::trajectory::{self, CfEvent};
use carfollow_core::{selftest, Error, Result, RunConfig, Simulator};

use crate::manifest::Manifest;
use crate::{Cli, Command, Common};

pub const EVENTS_FILE: &str = "events.csv";
pub const EXTRACT_SUMMARY_FILE: &str = "extract_summary.txt";
pub const HEADWAY_FIT_FILE: &str = "headway_fit.txt";
pub const TRAIN_EVENTS_FILE: &str = "train_events.csv";
pub const TEST_EVENTS_FILE: &str = "test_events.csv";
pub const CURVE_FILE: &str = "curve.csv";
pub const CHECKPOINT_DIR: &str = "checkpoint";
pub const TRAJECTORIES_FILE: &str = "trajectories.csv";
pub const SELFTEST_FILE: &str = "selftest.txt";

/// 1 for usage and configuration problems, 2 for bad or missing data,
/// 3 for numeric failures.
pub fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) => 1,
        Error::Schema(_)
        | Error::Data(_)
        | Error::Split(_)
        | Error::Fit(_)
        | Error::Io { .. }
        | Error::Report(_)
        | Error::Checkpoint(_) => 2,
        Error::Numeric(_) | Error::Training(_) | Error::Collision { .. } | Error::Lifecycle(_) | Error::Shape { .. } => 3,
    }
}

fn load_config(common: &Common) -> Result<RunConfig> {
    let mut cfg = match &common.config {
        Some(path) => RunConfig::from_file(path)?,
        None => RunConfig::default(),
    };
    for kv in &common.overrides {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("--set expects KEY=VALUE, got `{kv}`")))?;
        cfg.set(k.trim(), v.trim())?;
    }
    if let Some(seed) = common.seed {
        cfg.set("run.seed", &seed.to_string())?;
    }
    if let Some(out) = &common.out {
        cfg.out = out.clone();
    }
    if let Some(events) = &common.events {
        cfg.events = Some(events.clone());
    }
    cfg.validate()?;
    Ok(cfg)
}

fn existing(path: Option<&PathBuf>, key: &str) -> Result<PathBuf> {
    let path = path.ok_or_else(|| Error::Config(format!("no input given: set {key} or pass the matching flag")))?;
    if !path.is_file() {
        return Err(Error::io(
            path,
            std::io::Error::new(std::io::ErrorKind::NotFound, "input file does not exist"),
        ));
    }
    Ok(path.clone())
}

fn prepare_out(cfg: &RunConfig) -> Result<PathBuf> {
    fs::create_dir_all(&cfg.out).map_err(|e| Error::io(&cfg.out, e))?;
    Ok(cfg.out.clone())
}

fn write_file(path: &Path, body: &str) -> Result<()> {
    fs::write(path, body).map_err(|e| Error::io(path, e))
}

pub fn run(cli: Cli) -> Result<()> {
    if let Command::Selftest = cli.command {
        return selftest_cmd(&cli.common);
    }
    let cfg = load_config(&cli.common)?;
    let seed = cfg.require_seed()?;
    match cli.command {
        Command::Extract { trajectories } => extract(cfg, trajectories),
        Command::FitHeadway => fit_headway(cfg, seed),
        Command::Train => train(cfg, seed),
        Command::Evaluate { checkpoint } => evaluate(cfg, seed, &checkpoint),
        Command::Synth { pairs } => synth(cfg, seed, pairs),
        Command::Selftest => unreachable!("handled above"),
    }
}

fn duration_stats(events: &[CfEvent]) -> (f64, f64, f64) {
    let n = events.len().max(1) as f64;
    events.iter().fold((f64::INFINITY, 0.0, f64::NEG_INFINITY), |(lo, sum, hi), e| {
        (lo.min(e.duration), sum + e.duration / n, hi.max(e.duration))
    })
}

fn extract(mut cfg: RunConfig, trajectories: Option<PathBuf>) -> Result<()> {
    if trajectories.is_some() {
        cfg.trajectories = trajectories;
    }
    let input = existing(cfg.trajectories.as_ref(), "data.trajectories")?;
    let parsed = trajectory::parse_trajectory_file(&input, &cfg.columns)?;
    let events = trajectory::extract_cf_events(&parsed.vehicles, &cfg.extract);
    let out = prepare_out(&cfg)?;

    let events_path = out.join(EVENTS_FILE);
    trajectory::write_events(&events_path, &events)?;
    let (lo, mean, hi) = duration_stats(&events);
    let summary = if events.is_empty() {
        format!(
            "0 events\nrows_accepted: {}\nrows_rejected: {}\nvehicles: {}\n",
            parsed.accepted,
            parsed.rejected,
            parsed.vehicles.len()
        )
    } else {
        format!(
            "{} events\nrows_accepted: {}\nrows_rejected: {}\nvehicles: {}\nduration_min_s: {lo:.1}\nduration_mean_s: {mean:.2}\nduration_max_s: {hi:.1}\n",
            events.len(),
            parsed.accepted,
            parsed.rejected,
            parsed.vehicles.len()
        )
    };
    print!("{summary}");
    let summary_path = out.join(EXTRACT_SUMMARY_FILE);
    write_file(&summary_path, &summary)?;

    let mut m = Manifest::new("extract", cfg.seed);
    m.input(&input);
    m.output(&events_path);
    m.output(&summary_path);
    m.write(&out, &cfg)?;
    Ok(())
}

fn fit_headway(cfg: RunConfig, seed: u64) -> Result<()> {
    let input = existing(cfg.events.as_ref(), "data.events")?;
    let events = trajectory::read_events(&input)?;
    let fit = trajectory::fit_headway_lognormal(&events)?;
    let samples: usize = events.iter().map(|e| e.headways().count()).sum();
    let text = format!(
        "events: {}\nsamples: {samples}\nmu: {}\nsigma: {}\nmode_s: {}\n\n# paste into a run config to use this fit in the reward\nreward.headway_mu = {}\nreward.headway_sigma = {}\n",
        events.len(),
        fit.mu,
        fit.sigma,
        fit.mode(),
        fit.mu,
        fit.sigma
    );
    print!("{text}");
    let out = prepare_out(&cfg)?;
    let path = out.join(HEADWAY_FIT_FILE);
    write_file(&path, &text)?;
    let mut m = Manifest::new("fit-headway", Some(seed));
    m.input(&input);
    m.output(&path);
    m.write(&out, &cfg)?;
    Ok(())
}

fn train(cfg: RunConfig, seed: u64) -> Result<()> {
    let input = existing(cfg.events.as_ref(), "data.events")?;
    let events = trajectory::read_events(&input)?;
    let (train_set, test_set) = trajectory::split_events(events, cfg.train_fraction, seed)?;
    let out = prepare_out(&cfg)?;
    let train_path = out.join(TRAIN_EVENTS_FILE);
    let test_path = out.join(TEST_EVENTS_FILE);
    trajectory::write_events(&train_path, &train_set)?;
    trajectory::write_events(&test_path, &test_set)?;
    eprintln!(
        "training on {} events, evaluating on {} ({} episodes)",
        train_set.len(),
        test_set.len(),
        cfg.train.episodes
    );

    let outcome = ddpg::train_with_progress(&train_set, &cfg.train, &test_set, |r| {
        eprintln!(
            "episode {:>3}/{}  train {:+.4}  eval {:+.4}  collisions {}",
            r.episode, cfg.train.episodes, r.train_mean_reward, r.eval_mean_reward, r.collisions
        );
    })?;

    let curve_path = out.join(CURVE_FILE);
    write_file(&curve_path, &ddpg::curve_to_string(&outcome.curve))?;
    let ckpt_dir = out.join(CHECKPOINT_DIR);
    ddpg::write_checkpoint_dir(&ckpt_dir, &outcome.best, seed, &cfg.hash())?;
    println!(
        "best checkpoint: episode {} with eval mean step reward {:.4}",
        outcome.best.episode, outcome.best.eval_reward
    );

    let mut m = Manifest::new("train", Some(seed));
    m.input(&input);
    for p in [&train_path, &test_path, &curve_path, &ckpt_dir] {
        m.output(p);
    }
    m.write(&out, &cfg)?;
    Ok(())
}

fn evaluate(cfg: RunConfig, seed: u64, checkpoint: &Path) -> Result<()> {
    let input = existing(cfg.events.as_ref(), "data.events")?;
    if !checkpoint.is_dir() {
        return Err(Error::io(
            checkpoint,
            std::io::Error::new(std::io::ErrorKind::NotFound, "checkpoint directory does not exist"),
        ));
    }
    let events = trajectory::read_events(&input)?;
    if events.is_empty() {
        return Err(Error::Report(format!("{} holds no events", input.display())));
    }
    let ckpt = ddpg::read_checkpoint_dir(checkpoint)?;
    if ckpt.actor.arch != cfg.train.actor_arch() {
        return Err(Error::Config(format!(
            "checkpoint actor {:?} does not match configured {:?}",
            ckpt.actor.arch,
            cfg.train.actor_arch()
        )));
    }
    let sim = Simulator::new(cfg.train.reward);
    let scales = cfg.train.scales;
    let actor = &ckpt.actor;
    let factory: &PolicyFactory = &|_| Box::new(ActorPolicy::new(actor, scales));
    let recorded = eval::recorded_metrics_all(&events, &sim);
    let report = eval::build_report(factory, &events, &recorded, &sim, &cfg.report)?;

    let out = prepare_out(&cfg)?;
    let written = eval::write_report(&report, &out)?;
    let summary = fs::read_to_string(out.join(eval::SUMMARY_FILE)).map_err(|e| Error::io(&out, e))?;
    print!("{summary}");

    let mut m = Manifest::new("evaluate", Some(seed));
    m.input(&input);
    m.input(checkpoint);
    for p in &written {
        m.output(p);
    }
    m.write(&out, &cfg)?;
    Ok(())
}

fn synth(cfg: RunConfig, seed: u64, pairs: usize) -> Result<()> {
    if pairs == 0 {
        return Err(Error::Config("--pairs must be at least 1".into()));
    }
    let fleet = synthetic::synthetic_fleet(&FleetConfig {
        events: pairs,
        seed,
        ..FleetConfig::default()
    });
    let out = prepare_out(&cfg)?;
    let path = out.join(TRAJECTORIES_FILE);
    write_file(&path, &synthetic::fleet_trajectory_table(&fleet))?;
    println!("{} leader/follower pairs written to {}", fleet.len(), path.display());
    let mut m = Manifest::new("synth", Some(seed));
    m.output(&path);
    m.write(&out, &cfg)?;
    Ok(())
}

fn selftest_cmd(common: &Common) -> Result<()> {
    let seed = common.seed.unwrap_or(0);
    let results = selftest::run_all(seed);
    let mut text = String::new();
    for r in &results {
        text.push_str(&r.to_string());
        text.push('\n');
    }
    print!("{text}");
    if let Some(out) = &common.out {
        let cfg = load_config(common)?;
        fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
        let path = out.join(SELFTEST_FILE);
        write_file(&path, &text)?;
        let mut m = Manifest::new("selftest", Some(seed));
        m.output(&path);
        m.write(out, &cfg)?;
    }
    let failed = results.iter().filter(|r| !r.passed).count();
    if failed > 0 {
        return Err(Error::Numeric(format!("{failed} of {} oracles failed", results.len())));
    }
    Ok(())
}
