//! Policy rollouts over held-out events, safety/efficiency/comfort metrics and
//! plot-ready comparison tables against the recorded followers.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::env::{Policy, RolloutLog, Simulator};
use crate::error::{Error, Result};
use crate::reward::{self, time_headway, time_to_collision};
use crate::trajectory::CfEvent;

#[derive(Debug, Clone, PartialEq)]
pub struct EventMetrics {
    pub event_id: u64,
    /// Smallest defined TTC over the rollout; `None` if the follower never closed in.
    pub min_ttc: Option<f64>,
    /// One entry per rollout step (post-step state); infinite while stopped.
    pub headways: Vec<f64>,
    pub jerks: Vec<f64>,
    pub collided: bool,
    pub mean_step_reward: f64,
}

pub fn metrics_from_log(log: &RolloutLog) -> EventMetrics {
    let mut min_ttc: Option<f64> = None;
    let mut headways = Vec::with_capacity(log.steps.len());
    let mut jerks = Vec::with_capacity(log.steps.len());
    for s in &log.steps {
        if let Ok(Some(t)) = time_to_collision(s.gap, s.follower_speed, s.leader_speed) {
            min_ttc = Some(min_ttc.map_or(t, |m| m.min(t)));
        }
        headways.push(time_headway(s.gap, s.follower_speed));
        jerks.push(s.jerk);
    }
    let n = log.steps.len();
    EventMetrics {
        event_id: log.event_id,
        min_ttc,
        headways,
        jerks,
        collided: log.collided(),
        mean_step_reward: if n == 0 { 0.0 } else { log.total_reward() / n as f64 },
    }
}

/// Builds a fresh policy for one event.
pub type PolicyFactory<'a> = dyn Fn(&'a CfEvent) -> Box<dyn Policy + 'a> + Sync + 'a;

/// Runs a deterministic policy over every event in parallel; results keep event order.
pub fn rollout_metrics<'a>(make_policy: &PolicyFactory<'a>, events: &'a [CfEvent], sim: &Simulator) -> Result<Vec<EventMetrics>> {
    events
        .par_iter()
        .map(|e| {
            let mut policy = make_policy(e);
            sim.run_event(policy.as_mut(), e).map(|log| metrics_from_log(&log))
        })
        .collect()
}

/// Metrics of the recorded follower, computed straight from the event data
/// and aligned with rollout steps: entry `k` describes sample `k + 1`, with
/// jerk taken as the first difference of recorded accelerations (zero on the
/// first step).
pub fn recorded_metrics(event: &CfEvent, sim: &Simulator) -> EventMetrics {
    let n = event.len();
    let mut min_ttc: Option<f64> = None;
    let mut headways = Vec::with_capacity(n.saturating_sub(1));
    let mut jerks = Vec::with_capacity(n.saturating_sub(1));
    let mut total = 0.0;
    let mut collided = false;
    for k in 1..n {
        let gap = event.gap(k);
        let vf = event.follower[k].speed;
        let vl = event.leader[k].speed;
        let a_now = event.follower[k - 1].acceleration;
        let a_prev = event.follower[k.saturating_sub(2)].acceleration;
        let jerk = if k == 1 { 0.0 } else { (a_now - a_prev) / sim.dt };
        jerks.push(jerk);
        headways.push(time_headway(gap, vf));
        match reward::step_reward(gap, vf, vl, jerk, &sim.reward) {
            Ok(r) => total += r.total,
            Err(_) => {
                total += reward::collision_reward(jerk, &sim.reward).total;
                collided = true;
                break;
            }
        }
        if let Ok(Some(t)) = time_to_collision(gap, vf, vl) {
            min_ttc = Some(min_ttc.map_or(t, |m| m.min(t)));
        }
    }
    let steps = jerks.len();
    EventMetrics {
        event_id: event.event_id,
        min_ttc,
        headways,
        jerks,
        collided,
        mean_step_reward: if steps == 0 { 0.0 } else { total / steps as f64 },
    }
}

pub fn recorded_metrics_all(events: &[CfEvent], sim: &Simulator) -> Vec<EventMetrics> {
    events.par_iter().map(|e| recorded_metrics(e, sim)).collect()
}

/// Fraction of events whose minimum TTC is defined and strictly below each
/// threshold. Events that never closed in count in the denominator.
pub fn min_ttc_cdf(metrics: &[EventMetrics], thresholds: &[f64]) -> Vec<(f64, f64)> {
    let n = metrics.len().max(1) as f64;
    thresholds
        .iter()
        .map(|&t| {
            let below = metrics.iter().filter(|m| m.min_ttc.is_some_and(|x| x < t)).count();
            (t, below as f64 / n)
        })
        .collect()
}

/// Fixed-width histogram with left-closed bins and under/overflow counters.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub lo: f64,
    pub width: f64,
    pub counts: Vec<usize>,
    pub underflow: usize,
    /// Values at or above the upper edge, plus non-finite values.
    pub overflow: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HistogramRow {
    pub center: f64,
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
    pub fraction: f64,
}

impl Histogram {
    pub fn total(&self) -> usize {
        self.counts.iter().sum::<usize>() + self.underflow + self.overflow
    }

    pub fn hi(&self) -> f64 {
        self.lo + self.width * self.counts.len() as f64
    }

    /// Under/overflow rows first and last, with infinite outer edges.
    pub fn rows(&self) -> Vec<HistogramRow> {
        let total = self.total();
        let frac = |c: usize| if total == 0 { 0.0 } else { c as f64 / total as f64 };
        let mut rows = Vec::with_capacity(self.counts.len() + 2);
        rows.push(HistogramRow {
            center: f64::NEG_INFINITY,
            lo: f64::NEG_INFINITY,
            hi: self.lo,
            count: self.underflow,
            fraction: frac(self.underflow),
        });
        for (i, &c) in self.counts.iter().enumerate() {
            let lo = self.lo + self.width * i as f64;
            rows.push(HistogramRow {
                center: lo + 0.5 * self.width,
                lo,
                hi: lo + self.width,
                count: c,
                fraction: frac(c),
            });
        }
        rows.push(HistogramRow {
            center: f64::INFINITY,
            lo: self.hi(),
            hi: f64::INFINITY,
            count: self.overflow,
            fraction: frac(self.overflow),
        });
        rows
    }

    /// Share of all values that fell in bins fully inside `[lo, hi)`.
    pub fn share_between(&self, lo: f64, hi: f64) -> f64 {
        let total = self.total();
        if total == 0 {
            return 0.0;
        }
        let eps = 1e-9 * self.width;
        let inside: usize = self
            .rows()
            .iter()
            .filter(|r| r.lo >= lo - eps && r.hi <= hi + eps)
            .map(|r| r.count)
            .sum();
        inside as f64 / total as f64
    }
}

pub fn histogram(values: &[f64], bin_width: f64, range: (f64, f64)) -> Histogram {
    assert!(bin_width > 0.0, "bin width must be positive");
    let (lo, hi) = range;
    let bins = ((hi - lo) / bin_width - 1e-9).ceil().max(0.0) as usize;
    let mut h = Histogram {
        lo,
        width: bin_width,
        counts: vec![0; bins],
        underflow: 0,
        overflow: 0,
    };
    for &v in values {
        if v.is_nan() || v >= h.hi() {
            h.overflow += 1;
        } else if v < lo {
            h.underflow += 1;
        } else {
            let i = (((v - lo) / bin_width).floor() as usize).min(bins - 1);
            h.counts[i] += 1;
        }
    }
    h
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BinSpec {
    pub width: f64,
    pub lo: f64,
    pub hi: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportConfig {
    pub ttc_thresholds: Vec<f64>,
    pub headway_bins: BinSpec,
    pub jerk_bins: BinSpec,
    /// Min-TTC threshold summarized as the dangerous share, seconds.
    pub ttc_danger: f64,
    /// Number of events whose traces go into the example table.
    pub example_events: usize,
}

impl Default for ReportConfig {
    fn default() -> Self {
        Self {
            ttc_thresholds: (1..=40).map(|i| i as f64 * 0.5).collect(),
            headway_bins: BinSpec {
                width: 0.25,
                lo: 0.0,
                hi: 6.0,
            },
            jerk_bins: BinSpec {
                width: 0.5,
                lo: -10.0,
                hi: 10.0,
            },
            ttc_danger: 5.0,
            example_events: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub events: usize,
    pub collided_event_ids: Vec<u64>,
    pub simulated_min_ttc_below: f64,
    pub recorded_min_ttc_below: f64,
    pub simulated_headway_share_1_2: f64,
    pub recorded_headway_share_1_2: f64,
    pub simulated_jerk_range: (f64, f64),
    pub recorded_jerk_range: (f64, f64),
    pub simulated_mean_step_reward: f64,
    pub recorded_mean_step_reward: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub event_id: u64,
    pub step: usize,
    pub time: f64,
    pub leader_speed: f64,
    pub recorded_speed: f64,
    pub simulated_speed: f64,
    pub recorded_gap: f64,
    pub simulated_gap: f64,
    pub recorded_acceleration: f64,
    pub simulated_acceleration: f64,
    pub recorded_jerk: f64,
    pub simulated_jerk: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonReport {
    pub config: ReportConfig,
    pub simulated: Vec<EventMetrics>,
    pub recorded: Vec<EventMetrics>,
    /// `(threshold, simulated fraction, recorded fraction)`
    pub ttc_cdf: Vec<(f64, f64, f64)>,
    pub headway_simulated: Histogram,
    pub headway_recorded: Histogram,
    pub jerk_simulated: Histogram,
    pub jerk_recorded: Histogram,
    pub traces: Vec<TraceRow>,
    pub summary: Summary,
}

fn pooled<'a>(metrics: &'a [EventMetrics], keep: &'a [bool], pick: fn(&EventMetrics) -> &[f64]) -> Vec<f64> {
    metrics
        .iter()
        .zip(keep)
        .filter(|(_, k)| **k)
        .flat_map(|(m, _)| pick(m).iter().copied())
        .collect()
}

fn range_of(values: &[f64]) -> (f64, f64) {
    values
        .iter()
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(*v), hi.max(*v)))
}

fn mean_reward(metrics: &[EventMetrics]) -> f64 {
    let steps: usize = metrics.iter().map(|m| m.jerks.len()).sum();
    let total: f64 = metrics.iter().map(|m| m.mean_step_reward * m.jerks.len() as f64).sum();
    if steps == 0 {
        0.0
    } else {
        total / steps as f64
    }
}

/// Simulates `events` with the given policy and compares against the
/// recorded followers. `recorded` must come from [`recorded_metrics_all`] on
/// the same events. Collided events stay in the TTC table but leave both
/// headway and jerk histograms.
pub fn build_report<'a>(
    make_policy: &PolicyFactory<'a>,
    events: &'a [CfEvent],
    recorded: &[EventMetrics],
    sim: &Simulator,
    config: &ReportConfig,
) -> Result<ComparisonReport> {
    if events.is_empty() {
        return Err(Error::Report("no events to evaluate".into()));
    }
    if recorded.len() != events.len() || recorded.iter().zip(events).any(|(r, e)| r.event_id != e.event_id) {
        return Err(Error::Report("recorded metrics do not match the event set".into()));
    }
    let simulated = rollout_metrics(make_policy, events, sim)?;
    let keep: Vec<bool> = simulated.iter().map(|m| !m.collided).collect();

    let sim_cdf = min_ttc_cdf(&simulated, &config.ttc_thresholds);
    let rec_cdf = min_ttc_cdf(recorded, &config.ttc_thresholds);
    let ttc_cdf = sim_cdf.iter().zip(&rec_cdf).map(|(s, r)| (s.0, s.1, r.1)).collect();

    let hb = config.headway_bins;
    let jb = config.jerk_bins;
    let sim_h = pooled(&simulated, &keep, |m| &m.headways);
    let rec_h = pooled(recorded, &keep, |m| &m.headways);
    let sim_j = pooled(&simulated, &keep, |m| &m.jerks);
    let rec_j = pooled(recorded, &keep, |m| &m.jerks);
    let headway_simulated = histogram(&sim_h, hb.width, (hb.lo, hb.hi));
    let headway_recorded = histogram(&rec_h, hb.width, (hb.lo, hb.hi));

    let share = |v: &[f64]| {
        if v.is_empty() {
            0.0
        } else {
            v.iter().filter(|h| (1.0..2.0).contains(*h)).count() as f64 / v.len() as f64
        }
    };
    let danger = |m: &[EventMetrics]| min_ttc_cdf(m, &[config.ttc_danger])[0].1;
    let summary = Summary {
        events: events.len(),
        collided_event_ids: simulated.iter().filter(|m| m.collided).map(|m| m.event_id).collect(),
        simulated_min_ttc_below: danger(&simulated),
        recorded_min_ttc_below: danger(recorded),
        simulated_headway_share_1_2: share(&sim_h),
        recorded_headway_share_1_2: share(&rec_h),
        simulated_jerk_range: range_of(&sim_j),
        recorded_jerk_range: range_of(&rec_j),
        simulated_mean_step_reward: mean_reward(&simulated),
        recorded_mean_step_reward: mean_reward(recorded),
    };

    let mut traces = Vec::new();
    for e in events.iter().take(config.example_events) {
        let mut policy = make_policy(e);
        let log = sim.run_event(policy.as_mut(), e)?;
        let rec = recorded_metrics(e, sim);
        for (k, s) in log.steps.iter().enumerate() {
            traces.push(TraceRow {
                event_id: e.event_id,
                step: s.step,
                time: s.time,
                leader_speed: s.leader_speed,
                recorded_speed: e.follower[s.step].speed,
                simulated_speed: s.follower_speed,
                recorded_gap: e.gap(s.step),
                simulated_gap: s.gap,
                recorded_acceleration: e.follower[s.step - 1].acceleration,
                simulated_acceleration: s.action,
                recorded_jerk: rec.jerks.get(k).copied().unwrap_or(f64::NAN),
                simulated_jerk: s.jerk,
            });
        }
    }

    Ok(ComparisonReport {
        config: config.clone(),
        jerk_simulated: histogram(&sim_j, jb.width, (jb.lo, jb.hi)),
        jerk_recorded: histogram(&rec_j, jb.width, (jb.lo, jb.hi)),
        headway_simulated,
        headway_recorded,
        simulated,
        recorded: recorded.to_vec(),
        ttc_cdf,
        traces,
        summary,
    })
}

/// Share of post-warm-up timesteps with headway in `[lo, hi]`, pooled over
/// non-collided events. Entry `k` of a metrics row is at `(k + 1) * dt`.
pub fn headway_share_after(metrics: &[EventMetrics], warmup: f64, dt: f64, lo: f64, hi: f64) -> f64 {
    let skip = (warmup / dt).round() as usize;
    let (mut inside, mut total) = (0usize, 0usize);
    for m in metrics.iter().filter(|m| !m.collided) {
        for h in m.headways.iter().skip(skip) {
            total += 1;
            inside += (lo..=hi).contains(h) as usize;
        }
    }
    if total == 0 {
        0.0
    } else {
        inside as f64 / total as f64
    }
}

pub const TTC_CDF_FILE: &str = "min_ttc_cdf.csv";
pub const HEADWAY_SIM_FILE: &str = "headway_hist_simulated.csv";
pub const HEADWAY_REC_FILE: &str = "headway_hist_recorded.csv";
pub const JERK_SIM_FILE: &str = "jerk_hist_simulated.csv";
pub const JERK_REC_FILE: &str = "jerk_hist_recorded.csv";
pub const TRACES_FILE: &str = "example_traces.csv";
pub const SUMMARY_FILE: &str = "summary.txt";

fn histogram_table(h: &Histogram) -> String {
    let mut out = String::from("bin_center,bin_lo,bin_hi,count,fraction\n");
    for r in h.rows() {
        let _ = writeln!(out, "{},{},{},{},{}", r.center, r.lo, r.hi, r.count, r.fraction);
    }
    out
}

fn summary_text(s: &Summary, danger: f64) -> String {
    let ids: Vec<String> = s.collided_event_ids.iter().map(u64::to_string).collect();
    format!(
        "events: {}\n\
         simulated_collisions: {}\n\
         collided_event_ids: {}\n\
         simulated_min_ttc_below_{danger}s: {}\n\
         recorded_min_ttc_below_{danger}s: {}\n\
         simulated_headway_share_1_2s: {}\n\
         recorded_headway_share_1_2s: {}\n\
         simulated_jerk_min: {}\n\
         simulated_jerk_max: {}\n\
         recorded_jerk_min: {}\n\
         recorded_jerk_max: {}\n\
         simulated_mean_step_reward: {}\n\
         recorded_mean_step_reward: {}\n",
        s.events,
        s.collided_event_ids.len(),
        ids.join(" "),
        s.simulated_min_ttc_below,
        s.recorded_min_ttc_below,
        s.simulated_headway_share_1_2,
        s.recorded_headway_share_1_2,
        s.simulated_jerk_range.0,
        s.simulated_jerk_range.1,
        s.recorded_jerk_range.0,
        s.recorded_jerk_range.1,
        s.simulated_mean_step_reward,
        s.recorded_mean_step_reward,
    )
}

/// Writes six comma-separated tables and `summary.txt` into `out_dir`.
pub fn write_report(report: &ComparisonReport, out_dir: &Path) -> Result<Vec<PathBuf>> {
    if report.simulated.is_empty() {
        return Err(Error::Report("refusing to write a report over zero events".into()));
    }
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;

    let mut cdf = String::from("threshold,simulated_fraction,recorded_fraction\n");
    for (t, s, r) in &report.ttc_cdf {
        let _ = writeln!(cdf, "{t},{s},{r}");
    }
    let mut traces = String::from(
        "event_id,step,time,leader_speed,recorded_speed,simulated_speed,recorded_gap,simulated_gap,\
recorded_acceleration,simulated_acceleration,recorded_jerk,simulated_jerk\n",
    );
    for t in &report.traces {
        let _ = writeln!(
            traces,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            t.event_id,
            t.step,
            t.time,
            t.leader_speed,
            t.recorded_speed,
            t.simulated_speed,
            t.recorded_gap,
            t.simulated_gap,
            t.recorded_acceleration,
            t.simulated_acceleration,
            t.recorded_jerk,
            t.simulated_jerk
        );
    }
    let files = [
        (TTC_CDF_FILE, cdf),
        (HEADWAY_SIM_FILE, histogram_table(&report.headway_simulated)),
        (HEADWAY_REC_FILE, histogram_table(&report.headway_recorded)),
        (JERK_SIM_FILE, histogram_table(&report.jerk_simulated)),
        (JERK_REC_FILE, histogram_table(&report.jerk_recorded)),
        (TRACES_FILE, traces),
        (SUMMARY_FILE, summary_text(&report.summary, report.config.ttc_danger)),
    ];
    let mut written = Vec::with_capacity(files.len());
    for (name, body) in files {
        let path = out_dir.join(name);
        fs::write(&path, body).map_err(|e| Error::io(&path, e))?;
        written.push(path);
    }
    Ok(written)
}

/// Reads a comma-separated numeric table with one header row.
pub fn read_table(path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Data(format!("{} is empty", path.display())))?
        .split(',')
        .map(str::to_string)
        .collect();
    let rows = lines
        .map(|l| {
            l.split(',')
                .map(|c| c.parse::<f64>().map_err(|_| Error::Data(format!("{}: bad number `{c}`", path.display()))))
                .collect()
        })
        .collect::<Result<_>>()?;
    Ok((header, rows))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn with_min_ttc(v: Option<f64>) -> EventMetrics {
        EventMetrics {
            event_id: 0,
            min_ttc: v,
            headways: vec![],
            jerks: vec![],
            collided: false,
            mean_step_reward: 0.0,
        }
    }

    #[test]
    fn cdf_counts() {
        let none = vec![with_min_ttc(None); 3];
        assert!(min_ttc_cdf(&none, &[1.0, 5.0, 100.0]).iter().all(|(_, f)| *f == 0.0));
        let m: Vec<_> = [2.0, 4.0, 6.0, 8.0].iter().map(|v| with_min_ttc(Some(*v))).collect();
        assert_eq!(min_ttc_cdf(&m, &[5.0]), vec![(5.0, 0.5)]);
        let mut m2 = m.clone();
        m2.push(with_min_ttc(None));
        assert_eq!(min_ttc_cdf(&m2, &[5.0])[0].1, 0.4);
    }

    #[test]
    fn histogram_counts() {
        let empty = histogram(&[], 1.0, (0.0, 4.0));
        assert_eq!(empty.total(), 0);
        assert!(empty.rows().iter().all(|r| r.count == 0 && r.fraction == 0.0));

        let h = histogram(&[1.0, 1.1, 1.9], 1.0, (0.0, 4.0));
        assert_eq!(h.counts, vec![0, 3, 0, 0]);

        let h = histogram(&[-1.0, 0.0, 2.0, 3.99, 4.0, f64::INFINITY, f64::NAN], 1.0, (0.0, 4.0));
        assert_eq!(h.underflow, 1);
        assert_eq!(h.overflow, 3);
        assert_eq!(h.counts, vec![1, 0, 1, 1]);
        let sum: f64 = h.rows().iter().map(|r| r.fraction).sum();
        assert!((sum - 1.0).abs() < 1e-12);
    }

    #[test]
    fn share_between_uses_whole_bins() {
        let h = histogram(&[0.5, 1.0, 1.2, 1.99, 2.0, 3.0], 0.25, (0.0, 6.0));
        assert!((h.share_between(1.0, 2.0) - 0.5).abs() < 1e-12);
    }
}
