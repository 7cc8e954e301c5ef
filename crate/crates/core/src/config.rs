//! Run configuration: a plain-text file of `section.key = value` lines.
//!
//! Blank lines and `#` comments are ignored. Every key has a default except
//! `run.seed`, which commands require before doing anything. Relative paths
//! in a file are resolved against the file's directory.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use sha2::{Digest, Sha256};

use crate::ddpg::TrainConfig;
use crate::error::{Error, Result};
use crate::eval::ReportConfig;
use crate::trajectory::{ColumnMapping, Delimiter, ExtractConfig};

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub seed: Option<u64>,
    pub out: PathBuf,
    /// Raw trajectory table consumed by `extract`.
    pub trajectories: Option<PathBuf>,
    /// Events file produced by `extract` and consumed by the later commands.
    pub events: Option<PathBuf>,
    pub columns: ColumnMapping,
    pub extract: ExtractConfig,
    pub train_fraction: f64,
    pub train: TrainConfig,
    pub report: ReportConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: None,
            out: PathBuf::from("out"),
            trajectories: None,
            events: None,
            columns: ColumnMapping::default(),
            extract: ExtractConfig::default(),
            train_fraction: 0.7,
            train: TrainConfig::default(),
            report: ReportConfig::default(),
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("{key}: cannot parse `{value}`")))
}

fn delimiter_name(d: Delimiter) -> &'static str {
    match d {
        Delimiter::Auto => "auto",
        Delimiter::Comma => "comma",
        Delimiter::Tab => "tab",
        Delimiter::Whitespace => "whitespace",
    }
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::parse_str(&text)?;
        let base = path.parent().unwrap_or(Path::new(""));
        for p in [&mut cfg.trajectories, &mut cfg.events].into_iter().flatten() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        if cfg.out.is_relative() {
            cfg.out = base.join(&cfg.out);
        }
        Ok(cfg)
    }

    pub fn parse_str(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        let mut seen = std::collections::BTreeSet::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected `section.key = value`", i + 1)))?;
            let (key, value) = (key.trim(), value.trim());
            if !seen.insert(key.to_string()) {
                return Err(Error::Config(format!("line {}: duplicate key {key}", i + 1)));
            }
            cfg.set(key, value)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Sets one key, as from a file line or a command-line override.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let c = &mut self.columns;
        let t = &mut self.train;
        let r = &mut t.reward;
        let rep = &mut self.report;
        match key {
            "run.seed" => self.seed = Some(parse(key, value)?),
            "run.out" => self.out = PathBuf::from(value),
            "data.trajectories" => self.trajectories = Some(PathBuf::from(value)),
            "data.events" => self.events = Some(PathBuf::from(value)),
            "columns.vehicle_id" => c.vehicle_id = value.into(),
            "columns.time" => c.time = value.into(),
            "columns.position" => c.position = value.into(),
            "columns.speed" => c.speed = value.into(),
            "columns.acceleration" => c.acceleration = value.into(),
            "columns.lane_id" => c.lane_id = value.into(),
            "columns.leader_id" => c.leader_id = value.into(),
            "columns.vehicle_length" => c.vehicle_length = value.into(),
            "columns.time_scale" => c.time_scale = parse(key, value)?,
            "columns.length_scale" => c.length_scale = parse(key, value)?,
            "columns.max_abs_acceleration" => c.max_abs_acceleration = parse(key, value)?,
            "columns.delimiter" => {
                c.delimiter = match value {
                    "auto" => Delimiter::Auto,
                    "comma" => Delimiter::Comma,
                    "tab" => Delimiter::Tab,
                    "whitespace" => Delimiter::Whitespace,
                    _ => return Err(Error::Config(format!("{key}: expected auto, comma, tab or whitespace"))),
                }
            }
            "extract.min_duration" => self.extract.min_duration = parse(key, value)?,
            "extract.min_gap" => self.extract.min_gap = parse(key, value)?,
            "extract.train_fraction" => self.train_fraction = parse(key, value)?,
            "train.episodes" => t.episodes = parse(key, value)?,
            "train.minibatch" => t.minibatch = parse(key, value)?,
            "train.gamma" => t.gamma = parse(key, value)?,
            "train.tau" => t.tau = parse(key, value)?,
            "train.actor_lr" => t.actor_lr = parse(key, value)?,
            "train.critic_lr" => t.critic_lr = parse(key, value)?,
            "train.buffer_capacity" => t.buffer_capacity = parse(key, value)?,
            "train.hidden" => t.hidden = parse(key, value)?,
            "train.action_bound" => t.action_bound = parse(key, value)?,
            "train.ou_theta" => t.ou_theta = parse(key, value)?,
            "train.ou_sigma" => t.ou_sigma = parse(key, value)?,
            "reward.w_ttc" => r.weights.w_ttc = parse(key, value)?,
            "reward.w_headway" => r.weights.w_headway = parse(key, value)?,
            "reward.w_jerk" => r.weights.w_jerk = parse(key, value)?,
            "reward.safety_limit" => r.safety_limit = parse(key, value)?,
            "reward.ttc_floor" => r.ttc_floor = parse(key, value)?,
            "reward.headway_mu" => r.headway.mu = parse(key, value)?,
            "reward.headway_sigma" => r.headway.sigma = parse(key, value)?,
            "scales.speed" => t.scales.speed = parse(key, value)?,
            "scales.relative_speed" => t.scales.relative_speed = parse(key, value)?,
            "scales.gap" => t.scales.gap = parse(key, value)?,
            "report.headway_bin_width" => rep.headway_bins.width = parse(key, value)?,
            "report.headway_min" => rep.headway_bins.lo = parse(key, value)?,
            "report.headway_max" => rep.headway_bins.hi = parse(key, value)?,
            "report.jerk_bin_width" => rep.jerk_bins.width = parse(key, value)?,
            "report.jerk_min" => rep.jerk_bins.lo = parse(key, value)?,
            "report.jerk_max" => rep.jerk_bins.hi = parse(key, value)?,
            "report.ttc_danger" => rep.ttc_danger = parse(key, value)?,
            "report.example_events" => rep.example_events = parse(key, value)?,
            _ => return Err(Error::Config(format!("unknown key {key}"))),
        }
        if key == "run.seed" {
            self.train.seed = self.seed.unwrap_or_default();
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let mut probe = self.train;
        probe.seed = self.seed.unwrap_or_default();
        probe.validate()?;
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(Error::Config(format!(
                "extract.train_fraction must lie in (0, 1), got {}",
                self.train_fraction
            )));
        }
        if !(self.columns.time_scale > 0.0) || !(self.columns.length_scale > 0.0) {
            return Err(Error::Config("column scales must be positive".into()));
        }
        for (name, b) in [("headway", self.report.headway_bins), ("jerk", self.report.jerk_bins)] {
            if !(b.width > 0.0) || !(b.hi > b.lo) {
                return Err(Error::Config(format!("report {name} bins need width > 0 and max > min")));
            }
        }
        Ok(())
    }

    pub fn require_seed(&self) -> Result<u64> {
        self.seed
            .ok_or_else(|| Error::Config("run.seed is mandatory (set it in the config or pass --seed)".into()))
    }

    /// Every key with its effective value, one `key = value` per line in a
    /// fixed order. Parsing the echo reproduces the configuration.
    pub fn echo(&self) -> String {
        let c = &self.columns;
        let t = &self.train;
        let r = &t.reward;
        let rep = &self.report;
        let path = |p: &Option<PathBuf>| p.as_ref().map(|p| p.display().to_string());
        let entries: Vec<(&str, Option<String>)> = vec![
            ("run.seed", self.seed.map(|s| s.to_string())),
            ("run.out", Some(self.out.display().to_string())),
            ("data.trajectories", path(&self.trajectories)),
            ("data.events", path(&self.events)),
            ("columns.vehicle_id", Some(c.vehicle_id.clone())),
            ("columns.time", Some(c.time.clone())),
            ("columns.position", Some(c.position.clone())),
            ("columns.speed", Some(c.speed.clone())),
            ("columns.acceleration", Some(c.acceleration.clone())),
            ("columns.lane_id", Some(c.lane_id.clone())),
            ("columns.leader_id", Some(c.leader_id.clone())),
            ("columns.vehicle_length", Some(c.vehicle_length.clone())),
            ("columns.time_scale", Some(c.time_scale.to_string())),
            ("columns.length_scale", Some(c.length_scale.to_string())),
            ("columns.max_abs_acceleration", Some(c.max_abs_acceleration.to_string())),
            ("columns.delimiter", Some(delimiter_name(c.delimiter).into())),
            ("extract.min_duration", Some(self.extract.min_duration.to_string())),
            ("extract.min_gap", Some(self.extract.min_gap.to_string())),
            ("extract.train_fraction", Some(self.train_fraction.to_string())),
            ("train.episodes", Some(t.episodes.to_string())),
            ("train.minibatch", Some(t.minibatch.to_string())),
            ("train.gamma", Some(t.gamma.to_string())),
            ("train.tau", Some(t.tau.to_string())),
            ("train.actor_lr", Some(t.actor_lr.to_string())),
            ("train.critic_lr", Some(t.critic_lr.to_string())),
            ("train.buffer_capacity", Some(t.buffer_capacity.to_string())),
            ("train.hidden", Some(t.hidden.to_string())),
            ("train.action_bound", Some(t.action_bound.to_string())),
            ("train.ou_theta", Some(t.ou_theta.to_string())),
            ("train.ou_sigma", Some(t.ou_sigma.to_string())),
            ("reward.w_ttc", Some(r.weights.w_ttc.to_string())),
            ("reward.w_headway", Some(r.weights.w_headway.to_string())),
            ("reward.w_jerk", Some(r.weights.w_jerk.to_string())),
            ("reward.safety_limit", Some(r.safety_limit.to_string())),
            ("reward.ttc_floor", Some(r.ttc_floor.to_string())),
            ("reward.headway_mu", Some(r.headway.mu.to_string())),
            ("reward.headway_sigma", Some(r.headway.sigma.to_string())),
            ("scales.speed", Some(t.scales.speed.to_string())),
            ("scales.relative_speed", Some(t.scales.relative_speed.to_string())),
            ("scales.gap", Some(t.scales.gap.to_string())),
            ("report.headway_bin_width", Some(rep.headway_bins.width.to_string())),
            ("report.headway_min", Some(rep.headway_bins.lo.to_string())),
            ("report.headway_max", Some(rep.headway_bins.hi.to_string())),
            ("report.jerk_bin_width", Some(rep.jerk_bins.width.to_string())),
            ("report.jerk_min", Some(rep.jerk_bins.lo.to_string())),
            ("report.jerk_max", Some(rep.jerk_bins.hi.to_string())),
            ("report.ttc_danger", Some(rep.ttc_danger.to_string())),
            ("report.example_events", Some(rep.example_events.to_string())),
        ];
        let mut out = String::new();
        for (k, v) in entries {
            match v {
                Some(v) => writeln!(out, "{k} = {v}"),
                None => writeln!(out, "# {k} unset"),
            }
            .expect("writing to a string");
        }
        out
    }

    /// SHA-256 of [`RunConfig::echo`], hex encoded.
    pub fn hash(&self) -> String {
        sha256_hex(self.echo().as_bytes())
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn file_digest(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(sha256_hex(&bytes))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_sections_and_comments() {
        let cfg = RunConfig::parse_str(
            "# demo\nrun.seed = 7\n\ntrain.episodes = 3  # short\nreward.w_jerk = 0.5\ncolumns.delimiter = tab\n",
        )
        .unwrap();
        assert_eq!(cfg.seed, Some(7));
        assert_eq!(cfg.train.seed, 7);
        assert_eq!(cfg.train.episodes, 3);
        assert_eq!(cfg.train.reward.weights.w_jerk, 0.5);
        assert_eq!(cfg.columns.delimiter, Delimiter::Tab);
        assert_eq!(cfg.train.minibatch, 32);
    }

    #[test]
    fn echo_round_trips() {
        let mut cfg = RunConfig::default();
        cfg.set("run.seed", "42").unwrap();
        cfg.set("data.events", "ev.csv").unwrap();
        cfg.set("train.tau", "0.005").unwrap();
        cfg.set("scales.gap", "80").unwrap();
        let back = RunConfig::parse_str(&cfg.echo()).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.hash(), cfg.hash());
        cfg.set("train.gamma", "0.95").unwrap();
        assert_ne!(back.hash(), cfg.hash());
    }

    #[test]
    fn rejects_bad_input() {
        for text in [
            "nonsense",
            "train.bogus = 1",
            "train.episodes = many",
            "run.seed = 1\nrun.seed = 2",
            "train.gamma = 1.5",
            "extract.train_fraction = 1",
            "columns.delimiter = pipe",
        ] {
            assert!(matches!(RunConfig::parse_str(text), Err(Error::Config(_))), "{text}");
        }
        assert!(RunConfig::default().require_seed().is_err());
    }
}
