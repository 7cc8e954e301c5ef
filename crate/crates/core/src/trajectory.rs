//! Trajectory ingestion, car-following event extraction, train/test split
//! and the headway lognormal fit.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;

use crate::error::{Error, FitError, Result};
use crate::rng::{self, Stream};

/// Sampling interval of the trajectory data, seconds (10 Hz).
pub const SAMPLE_INTERVAL: f64 = 0.1;

/// Follower speeds below this are skipped when computing time headway.
pub const MIN_HEADWAY_SPEED: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectorySample {
    pub time: f64,
    pub position: f64,
    pub speed: f64,
    pub acceleration: f64,
    pub lane_id: i64,
    pub vehicle_id: i64,
    /// Preceding vehicle id, 0 when there is none.
    pub leader_id: i64,
    pub vehicle_length: f64,
}

impl TrajectorySample {
    /// Integer 10 Hz frame index of this sample.
    pub fn frame(&self) -> i64 {
        (self.time / SAMPLE_INTERVAL).round() as i64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Delimiter {
    /// Tab if the header contains one, else comma if it contains one, else whitespace.
    Auto,
    Comma,
    Tab,
    Whitespace,
}

impl Delimiter {
    fn resolve(self, header: &str) -> Delimiter {
        match self {
            Delimiter::Auto if header.contains('\t') => Delimiter::Tab,
            Delimiter::Auto if header.contains(',') => Delimiter::Comma,
            Delimiter::Auto => Delimiter::Whitespace,
            other => other,
        }
    }

    fn split(self, line: &str) -> Vec<&str> {
        match self {
            Delimiter::Comma => line.split(',').map(str::trim).collect(),
            Delimiter::Tab => line.split('\t').map(str::trim).collect(),
            Delimiter::Whitespace | Delimiter::Auto => line.split_whitespace().collect(),
        }
    }
}

/// Maps the columns of a trajectory table onto sample fields.
///
/// Defaults follow the NGSIM export naming. `time_scale` converts the time
/// column to seconds (0.1 for frame ids); `length_scale` converts positions,
/// speeds, accelerations and lengths to meters (0.3048 for feet).
#[derive(Debug, Clone, PartialEq)]
pub struct ColumnMapping {
    pub vehicle_id: String,
    pub time: String,
    pub position: String,
    pub speed: String,
    pub acceleration: String,
    pub lane_id: String,
    pub leader_id: String,
    pub vehicle_length: String,
    pub time_scale: f64,
    pub length_scale: f64,
    pub delimiter: Delimiter,
    /// Rows whose |acceleration| exceeds this (after scaling) are rejected.
    pub max_abs_acceleration: f64,
}

impl Default for ColumnMapping {
    fn default() -> Self {
        Self {
            vehicle_id: "Vehicle_ID".into(),
            time: "Frame_ID".into(),
            position: "Local_Y".into(),
            speed: "v_Vel".into(),
            acceleration: "v_Acc".into(),
            lane_id: "Lane_ID".into(),
            leader_id: "Preceding".into(),
            vehicle_length: "v_Length".into(),
            time_scale: 0.1,
            length_scale: 1.0,
            delimiter: Delimiter::Auto,
            max_abs_acceleration: 8.0,
        }
    }
}

/// Parsed samples grouped by vehicle id, each group in time order.
#[derive(Debug, Clone, Default)]
pub struct ParsedTrajectories {
    pub vehicles: BTreeMap<i64, Vec<TrajectorySample>>,
    pub accepted: usize,
    pub rejected: usize,
}

impl ParsedTrajectories {
    pub fn sample_count(&self) -> usize {
        self.vehicles.values().map(Vec::len).sum()
    }
}

pub fn parse_trajectory_file(path: &Path, mapping: &ColumnMapping) -> Result<ParsedTrajectories> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_trajectory_table(&text, mapping)
}

/// Parses a delimited trajectory table held in memory.
///
/// Rows that fail to parse or violate the sample sanity bounds are counted
/// as rejects. A vehicle whose rows go backwards (or repeat) in time is a
/// data error.
pub fn parse_trajectory_table(text: &str, mapping: &ColumnMapping) -> Result<ParsedTrajectories> {
    let mut lines = text
        .lines()
        .filter(|l| !l.trim().is_empty() && !l.trim_start().starts_with('#'));
    let header = lines
        .next()
        .ok_or_else(|| Error::Schema("empty trajectory table".into()))?;
    let delimiter = mapping.delimiter.resolve(header);
    let names = delimiter.split(header);
    let column = |name: &str| {
        names
            .iter()
            .position(|n| *n == name)
            .ok_or_else(|| Error::Schema(format!("missing required column `{name}`")))
    };
    let idx = [
        column(&mapping.vehicle_id)?,
        column(&mapping.time)?,
        column(&mapping.position)?,
        column(&mapping.speed)?,
        column(&mapping.acceleration)?,
        column(&mapping.lane_id)?,
        column(&mapping.leader_id)?,
        column(&mapping.vehicle_length)?,
    ];

    let mut out = ParsedTrajectories::default();
    for line in lines {
        let fields = delimiter.split(line);
        let Some(sample) = parse_row(&fields, &idx, mapping) else {
            out.rejected += 1;
            continue;
        };
        let group = out.vehicles.entry(sample.vehicle_id).or_default();
        if let Some(last) = group.last() {
            if sample.time <= last.time {
                return Err(Error::Data(format!(
                    "vehicle {}: time {} does not follow {}",
                    sample.vehicle_id, sample.time, last.time
                )));
            }
        }
        group.push(sample);
        out.accepted += 1;
    }
    Ok(out)
}

fn parse_row(fields: &[&str], idx: &[usize; 8], mapping: &ColumnMapping) -> Option<TrajectorySample> {
    let num = |i: usize| -> Option<f64> {
        let v: f64 = fields.get(idx[i])?.parse().ok()?;
        v.is_finite().then_some(v)
    };
    let int = |i: usize| -> Option<i64> {
        let raw = fields.get(idx[i])?;
        raw.parse::<i64>()
            .ok()
            .or_else(|| raw.parse::<f64>().ok().filter(|v| v.fract() == 0.0).map(|v| v as i64))
    };
    let ls = mapping.length_scale;
    let sample = TrajectorySample {
        vehicle_id: int(0)?,
        time: num(1)? * mapping.time_scale,
        position: num(2)? * ls,
        speed: num(3)? * ls,
        acceleration: num(4)? * ls,
        lane_id: int(5)?,
        leader_id: int(6)?,
        vehicle_length: num(7)? * ls,
    };
    let sane = sample.speed >= 0.0
        && sample.acceleration.abs() <= mapping.max_abs_acceleration
        && sample.vehicle_length >= 0.0;
    sane.then_some(sample)
}

/// A leader/follower trajectory pair that passed the car-following filter.
#[derive(Debug, Clone, PartialEq)]
pub struct CfEvent {
    pub event_id: u64,
    pub leader: Vec<TrajectorySample>,
    pub follower: Vec<TrajectorySample>,
    /// Number of aligned samples times the sample interval.
    pub duration: f64,
}

impl CfEvent {
    pub fn new(event_id: u64, leader: Vec<TrajectorySample>, follower: Vec<TrajectorySample>) -> Self {
        let duration = follower.len() as f64 * SAMPLE_INTERVAL;
        Self {
            event_id,
            leader,
            follower,
            duration,
        }
    }

    pub fn len(&self) -> usize {
        self.follower.len()
    }

    pub fn is_empty(&self) -> bool {
        self.follower.is_empty()
    }

    /// Bumper-to-bumper gap at sample `k`.
    pub fn gap(&self, k: usize) -> f64 {
        self.leader[k].position - self.follower[k].position - self.leader[k].vehicle_length
    }

    /// Leader speed minus follower speed at sample `k`.
    pub fn relative_speed(&self, k: usize) -> f64 {
        self.leader[k].speed - self.follower[k].speed
    }

    /// Per-sample time headways (gap / follower speed), skipping near-stopped samples.
    pub fn headways(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len()).filter_map(|k| {
            let v = self.follower[k].speed;
            (v >= MIN_HEADWAY_SPEED).then(|| self.gap(k) / v)
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExtractConfig {
    /// Events must last strictly longer than this, seconds.
    pub min_duration: f64,
    /// Gap must stay strictly above this, meters.
    pub min_gap: f64,
}

impl Default for ExtractConfig {
    fn default() -> Self {
        Self {
            min_duration: 15.0,
            min_gap: 0.0,
        }
    }
}

/// Extracts maximal car-following segments and keeps those long enough.
///
/// A segment is a run of consecutive follower frames with the same non-zero
/// leader, the leader present at the same frame, both in one unchanged lane,
/// and a gap above `min_gap`. Event ids are assigned from 1 in follower-id order.
pub fn extract_cf_events(vehicles: &BTreeMap<i64, Vec<TrajectorySample>>, config: &ExtractConfig) -> Vec<CfEvent> {
    let mut events = Vec::new();
    for (&follower_id, follower) in vehicles {
        let mut run: Vec<(TrajectorySample, TrajectorySample)> = Vec::new();
        for f in follower {
            let paired = vehicles
                .get(&f.leader_id)
                .filter(|_| f.leader_id != 0 && f.leader_id != follower_id)
                .and_then(|l| sample_at_frame(l, f.frame()))
                .filter(|l| l.lane_id == f.lane_id)
                .filter(|l| l.position - f.position - l.vehicle_length > config.min_gap);
            let continues = match (paired, run.last()) {
                (Some(_), Some((_, prev))) => {
                    f.frame() == prev.frame() + 1 && f.leader_id == prev.leader_id && f.lane_id == prev.lane_id
                }
                _ => false,
            };
            if !continues {
                flush_run(&mut run, config, &mut events);
            }
            if let Some(l) = paired {
                run.push((*l, *f));
            }
        }
        flush_run(&mut run, config, &mut events);
    }
    events
}

fn sample_at_frame(samples: &[TrajectorySample], frame: i64) -> Option<&TrajectorySample> {
    samples
        .binary_search_by_key(&frame, TrajectorySample::frame)
        .ok()
        .map(|i| &samples[i])
}

fn flush_run(run: &mut Vec<(TrajectorySample, TrajectorySample)>, config: &ExtractConfig, events: &mut Vec<CfEvent>) {
    let duration = run.len() as f64 * SAMPLE_INTERVAL;
    // Tolerance guards against 151 * 0.1 landing a hair under 15.1.
    if duration > config.min_duration + 1e-9 {
        let (leader, follower) = run.drain(..).unzip();
        events.push(CfEvent::new(events.len() as u64 + 1, leader, follower));
    }
    run.clear();
}

/// Re-checks every event invariant directly from the stored samples.
pub fn validate_event(event: &CfEvent, config: &ExtractConfig) -> Result<()> {
    let fail = |msg: String| Err(Error::Data(format!("event {}: {msg}", event.event_id)));
    let n = event.follower.len();
    if event.leader.len() != n {
        return fail(format!("{} leader vs {n} follower samples", event.leader.len()));
    }
    if n == 0 || (n as f64 * SAMPLE_INTERVAL) <= config.min_duration + 1e-9 {
        return fail(format!("{n} samples is not longer than {} s", config.min_duration));
    }
    let lane = event.follower[0].lane_id;
    let leader_id = event.leader[0].vehicle_id;
    for (k, (l, f)) in event.leader.iter().zip(&event.follower).enumerate() {
        if (l.time - f.time).abs() > 1e-6 {
            return fail(format!("sample {k} misaligned ({} vs {})", l.time, f.time));
        }
        if k > 0 && ((f.time - event.follower[k - 1].time) - SAMPLE_INTERVAL).abs() > 1e-6 {
            return fail(format!("sample {k} is not {SAMPLE_INTERVAL} s after its predecessor"));
        }
        if l.lane_id != lane || f.lane_id != lane {
            return fail(format!("lane changes at sample {k}"));
        }
        if f.leader_id != leader_id || l.vehicle_id != leader_id {
            return fail(format!("leader changes at sample {k}"));
        }
        let gap = l.position - f.position - l.vehicle_length;
        if gap <= config.min_gap {
            return fail(format!("gap {gap} at sample {k}"));
        }
    }
    Ok(())
}

/// Seeded shuffle into a training share of `floor(train_fraction * n)` and
/// a test remainder. Both sides keep the input order.
pub fn split_events(events: Vec<CfEvent>, train_fraction: f64, seed: u64) -> Result<(Vec<CfEvent>, Vec<CfEvent>)> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::Split(format!("train fraction {train_fraction} outside (0, 1)")));
    }
    let n = events.len();
    if n < 2 {
        return Err(Error::Split(format!("need at least 2 events, got {n}")));
    }
    let n_train = ((train_fraction * n as f64) + 1e-9).floor() as usize;
    let n_train = n_train.clamp(1, n - 1);

    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng::stream(seed, Stream::Split));
    let mut in_train = vec![false; n];
    for &i in &order[..n_train] {
        in_train[i] = true;
    }
    let (train, test): (Vec<_>, Vec<_>) = events.into_iter().zip(in_train).partition(|(_, t)| *t);
    Ok((
        train.into_iter().map(|(e, _)| e).collect(),
        test.into_iter().map(|(e, _)| e).collect(),
    ))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LognormalParams {
    pub mu: f64,
    pub sigma: f64,
}

impl LognormalParams {
    pub fn new(mu: f64, sigma: f64) -> Result<Self> {
        if !(sigma > 0.0) || !mu.is_finite() || !sigma.is_finite() {
            return Err(Error::Config(format!("invalid lognormal parameters mu={mu} sigma={sigma}")));
        }
        Ok(Self { mu, sigma })
    }

    /// Peak of the density, `exp(mu - sigma^2)`.
    pub fn mode(&self) -> f64 {
        (self.mu - self.sigma * self.sigma).exp()
    }
}

impl Default for LognormalParams {
    /// Headway fit on the reconstructed I-80 car-following events.
    fn default() -> Self {
        Self {
            mu: 0.4226,
            sigma: 0.4365,
        }
    }
}

/// Closed-form maximum-likelihood lognormal fit.
///
/// Log values are sorted before summation so the result does not depend on
/// input order.
pub fn fit_lognormal(values: impl IntoIterator<Item = f64>) -> Result<LognormalParams, FitError> {
    let mut logs: Vec<f64> = values
        .into_iter()
        .filter(|v| *v > 0.0 && v.is_finite())
        .map(f64::ln)
        .collect();
    if logs.is_empty() {
        return Err(FitError::NoSamples);
    }
    logs.sort_by(f64::total_cmp);
    let n = logs.len() as f64;
    let mu = logs.iter().sum::<f64>() / n;
    let var = logs.iter().map(|x| (x - mu) * (x - mu)).sum::<f64>() / n;
    let sigma = var.sqrt();
    if sigma <= 1e-12 * mu.abs().max(1.0) {
        return Err(FitError::ZeroSpread { mu });
    }
    Ok(LognormalParams { mu, sigma })
}

pub fn fit_headway_lognormal(events: &[CfEvent]) -> Result<LognormalParams, FitError> {
    fit_lognormal(events.iter().flat_map(CfEvent::headways))
}

const EVENTS_HEADER: &str = "event_id,step,time,lane_id,leader_id,follower_id,leader_length,follower_length,\
leader_position,leader_speed,leader_acceleration,follower_position,follower_speed,follower_acceleration,gap";

/// Serializes events to the comma-separated interchange table, one row per
/// aligned timestep. Floats use shortest round-trip formatting.
pub fn events_to_string(events: &[CfEvent]) -> String {
    let mut out = String::with_capacity(events.iter().map(|e| e.len() * 160).sum::<usize>() + 256);
    out.push_str(EVENTS_HEADER);
    out.push('\n');
    for e in events {
        for (k, (l, f)) in e.leader.iter().zip(&e.follower).enumerate() {
            let _ = writeln!(
                out,
                "{},{k},{},{},{},{},{},{},{},{},{},{},{},{},{}",
                e.event_id,
                f.time,
                f.lane_id,
                l.vehicle_id,
                f.vehicle_id,
                l.vehicle_length,
                f.vehicle_length,
                l.position,
                l.speed,
                l.acceleration,
                f.position,
                f.speed,
                f.acceleration,
                e.gap(k),
            );
        }
    }
    out
}

pub fn write_events(path: &Path, events: &[CfEvent]) -> Result<()> {
    fs::write(path, events_to_string(events)).map_err(|e| Error::io(path, e))
}

pub fn read_events(path: &Path) -> Result<Vec<CfEvent>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    events_from_str(&text)
}

pub fn events_from_str(text: &str) -> Result<Vec<CfEvent>> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    match lines.next() {
        Some(h) if h.trim() == EVENTS_HEADER => {}
        _ => return Err(Error::Schema("events file header does not match".into())),
    }
    let mut events: Vec<CfEvent> = Vec::new();
    for (lineno, line) in lines.enumerate() {
        let bad = || Error::Data(format!("events file row {}: malformed `{line}`", lineno + 2));
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 15 {
            return Err(bad());
        }
        let f = |i: usize| cols[i].trim().parse::<f64>().map_err(|_| bad());
        let i = |i: usize| cols[i].trim().parse::<i64>().map_err(|_| bad());
        let event_id = cols[0].trim().parse::<u64>().map_err(|_| bad())?;
        let time = f(2)?;
        let lane_id = i(3)?;
        let leader_id = i(4)?;
        let follower_id = i(5)?;
        let leader = TrajectorySample {
            time,
            position: f(8)?,
            speed: f(9)?,
            acceleration: f(10)?,
            lane_id,
            vehicle_id: leader_id,
            leader_id: 0,
            vehicle_length: f(6)?,
        };
        let follower = TrajectorySample {
            time,
            position: f(11)?,
            speed: f(12)?,
            acceleration: f(13)?,
            lane_id,
            vehicle_id: follower_id,
            leader_id,
            vehicle_length: f(7)?,
        };
        match events.last_mut() {
            Some(e) if e.event_id == event_id => {
                e.leader.push(leader);
                e.follower.push(follower);
            }
            _ => events.push(CfEvent::new(event_id, vec![leader], vec![follower])),
        }
    }
    for e in &mut events {
        e.duration = e.len() as f64 * SAMPLE_INTERVAL;
    }
    Ok(events)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn csv(rows: &[&str]) -> String {
        let mut s = String::from("Vehicle_ID,Frame_ID,Local_Y,v_Vel,v_Acc,Lane_ID,Preceding,v_Length\n");
        for r in rows {
            s.push_str(r);
            s.push('\n');
        }
        s
    }

    #[test]
    fn parses_well_formed_rows() {
        let text = csv(&["1,10,5.0,10.0,0.5,2,0,4.5", "1,11,6.0,10.05,0.5,2,0,4.5", "1,12,7.0,10.1,0.5,2,0,4.5"]);
        let parsed = parse_trajectory_table(&text, &ColumnMapping::default()).unwrap();
        assert_eq!(parsed.sample_count(), 3);
        assert_eq!(parsed.rejected, 0);
        assert!((parsed.vehicles[&1][0].time - 1.0).abs() < 1e-12);
    }

    #[test]
    fn negative_speed_row_is_rejected() {
        let text = csv(&["1,10,5.0,10.0,0.5,2,0,4.5", "1,11,6.0,-1.0,0.5,2,0,4.5", "1,12,7.0,10.1,0.5,2,0,4.5"]);
        let parsed = parse_trajectory_table(&text, &ColumnMapping::default()).unwrap();
        assert_eq!(parsed.rejected, 1);
        assert_eq!(parsed.sample_count(), 2);
    }

    #[test]
    fn unparseable_row_is_rejected() {
        let text = csv(&["1,10,5.0,10.0,0.5,2,0,4.5", "1,11,abc,10.0,0.5,2,0,4.5", "1,12,7.0,10.0"]);
        let parsed = parse_trajectory_table(&text, &ColumnMapping::default()).unwrap();
        assert_eq!(parsed.rejected, 2);
    }

    #[test]
    fn interleaved_vehicles_are_grouped_and_sorted() {
        // Hand-built 10-row fixture: vehicles 7 and 3 interleaved.
        let text = csv(&[
            "7,100,50.0,10,0,1,0,4",
            "3,100,20.0,9,0,1,7,5",
            "7,101,51.0,10,0,1,0,4",
            "3,101,20.9,9,0,1,7,5",
            "3,102,21.8,9,0,1,7,5",
            "7,102,52.0,10,0,1,0,4",
            "7,103,53.0,10,0,1,0,4",
            "3,103,22.7,9,0,1,7,5",
            "7,104,54.0,10,0,1,0,4",
            "3,104,23.6,9,0,1,7,5",
        ]);
        let parsed = parse_trajectory_table(&text, &ColumnMapping::default()).unwrap();
        let ids: Vec<i64> = parsed.vehicles.keys().copied().collect();
        assert_eq!(ids, vec![3, 7]);
        let frames = |v: i64| parsed.vehicles[&v].iter().map(|s| s.frame()).collect::<Vec<_>>();
        assert_eq!(frames(3), vec![100, 101, 102, 103, 104]);
        assert_eq!(frames(7), vec![100, 101, 102, 103, 104]);
        let pos3: Vec<f64> = parsed.vehicles[&3].iter().map(|s| s.position).collect();
        assert_eq!(pos3, vec![20.0, 20.9, 21.8, 22.7, 23.6]);
    }

    #[test]
    fn missing_column_is_schema_error() {
        let text = "Vehicle_ID,Frame_ID,Local_Y,v_Vel,v_Acc,Lane_ID,v_Length\n1,1,1,1,1,1,1\n";
        let err = parse_trajectory_table(text, &ColumnMapping::default()).unwrap_err();
        assert!(matches!(err, Error::Schema(ref m) if m.contains("Preceding")), "{err}");
    }

    #[test]
    fn time_going_backwards_names_vehicle() {
        let text = csv(&["4,10,5.0,10.0,0.5,2,0,4.5", "4,9,6.0,10.0,0.5,2,0,4.5"]);
        let err = parse_trajectory_table(&text, &ColumnMapping::default()).unwrap_err();
        assert!(matches!(err, Error::Data(ref m) if m.contains("vehicle 4")), "{err}");
    }

    #[test]
    fn whitespace_and_tab_delimiters() {
        let ws = "Vehicle_ID Frame_ID Local_Y v_Vel v_Acc Lane_ID Preceding v_Length\n1  10 5.0 10 0 2 0 4.5\n";
        let tab = ws.replace(' ', "\t").replace("\t\t", "\t");
        for text in [ws.to_string(), tab] {
            let parsed = parse_trajectory_table(&text, &ColumnMapping::default()).unwrap();
            assert_eq!(parsed.sample_count(), 1, "{text:?}");
        }
    }

    #[test]
    fn split_sizes_and_determinism() {
        let events: Vec<CfEvent> = (1..=10).map(|i| CfEvent::new(i, vec![], vec![])).collect();
        let (train, test) = split_events(events.clone(), 0.7, 1).unwrap();
        assert_eq!((train.len(), test.len()), (7, 3));
        let (train2, test2) = split_events(events.clone(), 0.7, 1).unwrap();
        assert_eq!(train, train2);
        assert_eq!(test, test2);
        let mut ids: Vec<u64> = train.iter().chain(&test).map(|e| e.event_id).collect();
        ids.sort();
        assert_eq!(ids, (1..=10).collect::<Vec<_>>());
    }

    #[test]
    fn split_of_full_event_count() {
        let events: Vec<CfEvent> = (1..=1341).map(|i| CfEvent::new(i, vec![], vec![])).collect();
        let (train, test) = split_events(events, 0.7, 42).unwrap();
        assert_eq!((train.len(), test.len()), (938, 403));
    }

    #[test]
    fn split_errors() {
        let one = vec![CfEvent::new(1, vec![], vec![])];
        assert!(matches!(split_events(one, 0.7, 0), Err(Error::Split(_))));
        let two: Vec<CfEvent> = (1..=2).map(|i| CfEvent::new(i, vec![], vec![])).collect();
        assert!(matches!(split_events(two, 1.0, 0), Err(Error::Split(_))));
    }

    #[test]
    fn degenerate_fit_reports_location() {
        let e = std::f64::consts::E;
        match fit_lognormal(vec![e; 50]) {
            Err(FitError::ZeroSpread { mu }) => assert!((mu - 1.0).abs() < 1e-12),
            other => panic!("unexpected {other:?}"),
        }
        assert_eq!(fit_lognormal(vec![0.0, -1.0]), Err(FitError::NoSamples));
    }

    #[test]
    fn lognormal_mode() {
        let mode = LognormalParams::default().mode();
        assert!((mode - 1.2612).abs() < 1e-3, "{mode}");
    }
}
