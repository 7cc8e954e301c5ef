//! Synthetic car-following fleet for training and checks without field data.
//!
//! Each event pairs a leader with a scripted speed profile (plateaus joined by
//! ramps, or a sinusoid) and a follower driven by a noisy linear controller.
//! Both vehicles are integrated with the same point-mass update the simulator
//! uses (speed by forward Euler, position by the trapezoid rule), so replaying
//! the recorded follower accelerations reproduces the recorded states.

use std::f64::consts::PI;
use std::fmt::Write as _;

use rand::Rng as _;
use rand_distr::{Distribution, LogNormal, StandardNormal};

use crate::rng::{self, Rng, Stream};
use crate::trajectory::{CfEvent, LognormalParams, TrajectorySample, SAMPLE_INTERVAL};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FleetConfig {
    pub events: usize,
    /// Duration range in seconds; the lower end is exclusive.
    pub min_duration: f64,
    pub max_duration: f64,
    /// Initial and desired headways are drawn from this lognormal...
    pub headway: LognormalParams,
    /// ...truncated to this range, seconds.
    pub headway_range: (f64, f64),
    pub seed: u64,
}

impl Default for FleetConfig {
    fn default() -> Self {
        Self {
            events: 100,
            min_duration: 15.0,
            max_duration: 40.0,
            headway: LognormalParams::default(),
            headway_range: (0.8, 2.5),
            seed: 2019,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LeaderProfile {
    Plateaus,
    Sinusoid,
}

pub fn synthetic_fleet(config: &FleetConfig) -> Vec<CfEvent> {
    let mut rng = rng::stream(config.seed, Stream::Synthetic);
    let mut events = Vec::with_capacity(config.events);
    while events.len() < config.events {
        let i = events.len();
        let profile = if i % 2 == 0 {
            LeaderProfile::Plateaus
        } else {
            LeaderProfile::Sinusoid
        };
        if let Some(e) = synthetic_event(i as u64 + 1, profile, config, &mut rng) {
            events.push(e);
        }
    }
    events
}

fn truncated_headway(config: &FleetConfig, rng: &mut Rng) -> f64 {
    let dist = LogNormal::new(config.headway.mu, config.headway.sigma).expect("valid lognormal");
    let (lo, hi) = config.headway_range;
    loop {
        let h: f64 = dist.sample(rng);
        if (lo..=hi).contains(&h) {
            return h;
        }
    }
}

fn leader_speeds(profile: LeaderProfile, n: usize, rng: &mut Rng) -> Vec<f64> {
    let dt = SAMPLE_INTERVAL;
    match profile {
        LeaderProfile::Plateaus => {
            let mut v: f64 = rng.random_range(8.0..25.0);
            let mut speeds = Vec::with_capacity(n);
            while speeds.len() < n {
                let hold = (rng.random_range(3.0..8.0) / dt) as usize;
                speeds.extend(std::iter::repeat_n(v, hold));
                let target = (v + rng.random_range(-5.0..5.0)).clamp(3.0, 30.0);
                let rate: f64 = rng.random_range(0.5..1.5);
                let steps = ((target - v).abs() / (rate * dt)).ceil().max(1.0) as usize;
                let dv = (target - v) / steps as f64;
                for _ in 0..steps {
                    v += dv;
                    speeds.push(v);
                }
            }
            speeds.truncate(n);
            speeds
        }
        LeaderProfile::Sinusoid => {
            let base: f64 = rng.random_range(10.0..25.0);
            let amp = rng.random_range(1.0..4.0f64.min(base - 2.0));
            let period = rng.random_range(10.0..30.0);
            let phase = rng.random_range(0.0..2.0 * PI);
            (0..n)
                .map(|k| base + amp * (2.0 * PI * k as f64 * dt / period + phase).sin())
                .collect()
        }
    }
}

/// One leader/follower pair, or `None` if the scripted follower got too close.
pub fn synthetic_event(event_id: u64, profile: LeaderProfile, config: &FleetConfig, rng: &mut Rng) -> Option<CfEvent> {
    let dt = SAMPLE_INTERVAL;
    let duration = rng.random_range(config.min_duration..config.max_duration);
    let n = ((duration / dt).floor() as usize + 1).max((config.min_duration / dt) as usize + 1);
    let vl = leader_speeds(profile, n, rng);

    // Follower: linear gap/speed-difference controller with correlated noise.
    let desired = truncated_headway(config, rng);
    let headway0 = truncated_headway(config, rng);
    let gain_gap: f64 = rng.random_range(0.05..0.15);
    let gain_dv: f64 = rng.random_range(0.3..0.7);
    let mut vf = vec![(vl[0] + rng.random_range(-1.0..1.0)).max(1.0)];
    let mut gap = vec![headway0 * vf[0]];
    let mut af = Vec::with_capacity(n);
    let mut noise = 0.0f64;
    for k in 0..n {
        let g: f64 = rng.sample(StandardNormal);
        noise += 0.1 * (0.0 - noise) + 0.08 * g;
        let command = gain_gap * (gap[k] - desired * vf[k]) + gain_dv * (vl[k] - vf[k]) + noise;
        // Never command the follower below standstill.
        let a = command.clamp(-3.0, 3.0).max(-vf[k] / dt);
        af.push(a);
        if k + 1 < n {
            let v_next = (vf[k] + a * dt).max(0.0);
            let dv0 = vl[k] - vf[k];
            let dv1 = vl[k + 1] - v_next;
            gap.push(gap[k] + 0.5 * (dv0 + dv1) * dt);
            vf.push(v_next);
        }
    }
    if gap.iter().any(|g| *g < 2.0) {
        return None;
    }

    let leader_length = rng.random_range(4.0..5.0);
    let follower_length = rng.random_range(4.0..5.0);
    let lane = rng.random_range(1..=6);
    let leader_vid = 10_000 + 2 * event_id as i64;
    let follower_vid = leader_vid + 1;

    let mut xf = 50.0;
    let mut xl = xf + gap[0] + leader_length;
    let mut leader = Vec::with_capacity(n);
    let mut follower = Vec::with_capacity(n);
    for k in 0..n {
        let time = (k + 10) as f64 * dt;
        let al = if k + 1 < n { (vl[k + 1] - vl[k]) / dt } else { 0.0 };
        leader.push(TrajectorySample {
            time,
            position: xl,
            speed: vl[k],
            acceleration: al,
            lane_id: lane,
            vehicle_id: leader_vid,
            leader_id: 0,
            vehicle_length: leader_length,
        });
        follower.push(TrajectorySample {
            time,
            position: xf,
            speed: vf[k],
            acceleration: af[k],
            lane_id: lane,
            vehicle_id: follower_vid,
            leader_id: leader_vid,
            vehicle_length: follower_length,
        });
        if k + 1 < n {
            xl += 0.5 * (vl[k] + vl[k + 1]) * dt;
            xf += 0.5 * (vf[k] + vf[k + 1]) * dt;
        }
    }
    Some(CfEvent::new(event_id, leader, follower))
}

/// Writes the fleet as a raw trajectory table using the default column names,
/// so it can be fed back through parsing and extraction.
pub fn fleet_trajectory_table(events: &[CfEvent]) -> String {
    let mut out = String::from("Vehicle_ID,Frame_ID,Local_Y,v_Vel,v_Acc,Lane_ID,Preceding,v_Length\n");
    for e in events {
        for s in e.leader.iter().chain(&e.follower) {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                s.vehicle_id,
                s.frame(),
                s.position,
                s.speed,
                s.acceleration,
                s.lane_id,
                s.leader_id,
                s.vehicle_length
            );
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trajectory::{validate_event, ExtractConfig};

    #[test]
    fn fleet_is_valid_and_deterministic() {
        let cfg = FleetConfig {
            events: 20,
            ..FleetConfig::default()
        };
        let fleet = synthetic_fleet(&cfg);
        assert_eq!(fleet.len(), 20);
        assert_eq!(fleet, synthetic_fleet(&cfg));
        for e in &fleet {
            validate_event(e, &ExtractConfig::default()).unwrap();
            assert!(e.duration > 15.0 && e.duration <= 40.1, "{}", e.duration);
            assert!(e.leader.iter().all(|s| s.speed > 0.0));
        }
    }

    #[test]
    fn initial_headways_respect_truncation() {
        let fleet = synthetic_fleet(&FleetConfig::default());
        for e in &fleet {
            let h = e.gap(0) / e.follower[0].speed;
            assert!((0.8..=2.5).contains(&h), "event {} starts at {h}", e.event_id);
        }
    }
}
