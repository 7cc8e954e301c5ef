//! Car-following simulation: a point-mass follower driven by an actor
//! against a recorded leader speed profile.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::reward::{self, RewardBreakdown, RewardConfig};
use crate::trajectory::{CfEvent, SAMPLE_INTERVAL};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CfState {
    pub follower_speed: f64,
    /// Leader speed minus follower speed.
    pub relative_speed: f64,
    pub gap: f64,
    pub prev_acceleration: f64,
    /// Index of the event sample this state corresponds to.
    pub step_index: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TerminalReason {
    EventEnd,
    Collision,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutcome {
    pub next_state: CfState,
    pub reward: RewardBreakdown,
    pub jerk: f64,
    pub terminal: Option<TerminalReason>,
}

impl StepOutcome {
    pub fn is_terminal(&self) -> bool {
        self.terminal.is_some()
    }
}

/// Anything that maps a state to a follower acceleration.
pub trait Policy {
    fn act(&mut self, state: &CfState) -> f64;
}

impl<F: FnMut(&CfState) -> f64> Policy for F {
    fn act(&mut self, state: &CfState) -> f64 {
        self(state)
    }
}

/// Replays the follower accelerations recorded in an event.
#[derive(Debug, Clone, Copy)]
pub struct RecordedPolicy<'a> {
    pub event: &'a CfEvent,
}

impl Policy for RecordedPolicy<'_> {
    fn act(&mut self, state: &CfState) -> f64 {
        self.event.follower[state.step_index].acceleration
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Simulator {
    pub reward: RewardConfig,
    pub dt: f64,
}

impl Default for Simulator {
    fn default() -> Self {
        Self {
            reward: RewardConfig::default(),
            dt: SAMPLE_INTERVAL,
        }
    }
}

impl Simulator {
    pub fn new(reward: RewardConfig) -> Self {
        Self {
            reward,
            dt: SAMPLE_INTERVAL,
        }
    }

    /// Initial state copied from the event's first sample.
    pub fn reset(&self, event: &CfEvent) -> CfState {
        CfState {
            follower_speed: event.follower[0].speed,
            relative_speed: event.relative_speed(0),
            gap: event.gap(0),
            prev_acceleration: event.follower[0].acceleration,
            step_index: 0,
        }
    }

    pub fn is_terminal(&self, state: &CfState, event: &CfEvent) -> bool {
        state.gap <= 0.0 || state.step_index + 1 >= event.len()
    }

    pub fn step(&self, state: &CfState, acceleration: f64, event: &CfEvent) -> Result<StepOutcome> {
        if self.is_terminal(state, event) {
            return Err(Error::Lifecycle(format!(
                "step on terminal state (event {}, step {}, gap {})",
                event.event_id, state.step_index, state.gap
            )));
        }
        if !acceleration.is_finite() {
            return Err(Error::Numeric(format!("non-finite acceleration {acceleration}")));
        }
        let dt = self.dt;
        let next_index = state.step_index + 1;
        let follower_speed = (state.follower_speed + acceleration * dt).max(0.0);
        let leader_speed = event.leader[next_index].speed;
        let relative_speed = leader_speed - follower_speed;
        let gap = state.gap + 0.5 * (state.relative_speed + relative_speed) * dt;
        // The controller has no previous command of its own on the first step.
        let jerk = if state.step_index == 0 {
            0.0
        } else {
            (acceleration - state.prev_acceleration) / dt
        };

        let next_state = CfState {
            follower_speed,
            relative_speed,
            gap,
            prev_acceleration: acceleration,
            step_index: next_index,
        };
        let (reward, terminal) = if gap <= 0.0 {
            (reward::collision_reward(jerk, &self.reward), Some(TerminalReason::Collision))
        } else {
            let r = reward::step_reward(gap, follower_speed, leader_speed, jerk, &self.reward)?;
            let end = (next_index + 1 >= event.len()).then_some(TerminalReason::EventEnd);
            (r, end)
        };
        Ok(StepOutcome {
            next_state,
            reward,
            jerk,
            terminal,
        })
    }

    /// Runs `policy` from reset until the event ends or the follower collides.
    pub fn run_event<P: Policy + ?Sized>(&self, policy: &mut P, event: &CfEvent) -> Result<RolloutLog> {
        let mut state = self.reset(event);
        let mut steps = Vec::with_capacity(event.len().saturating_sub(1));
        let mut terminal = None;
        while !self.is_terminal(&state, event) {
            let action = policy.act(&state);
            let out = self.step(&state, action, event)?;
            steps.push(StepRecord {
                step: out.next_state.step_index,
                time: event.follower[out.next_state.step_index].time,
                leader_speed: event.leader[out.next_state.step_index].speed,
                follower_speed: out.next_state.follower_speed,
                relative_speed: out.next_state.relative_speed,
                gap: out.next_state.gap,
                action,
                jerk: out.jerk,
                reward: out.reward,
            });
            state = out.next_state;
            terminal = out.terminal;
        }
        Ok(RolloutLog {
            event_id: event.event_id,
            initial: self.reset(event),
            steps,
            terminal,
        })
    }
}

/// Post-step quantities for one simulation step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepRecord {
    pub step: usize,
    pub time: f64,
    pub leader_speed: f64,
    pub follower_speed: f64,
    pub relative_speed: f64,
    pub gap: f64,
    pub action: f64,
    pub jerk: f64,
    pub reward: RewardBreakdown,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RolloutLog {
    pub event_id: u64,
    pub initial: CfState,
    pub steps: Vec<StepRecord>,
    pub terminal: Option<TerminalReason>,
}

impl RolloutLog {
    pub fn collided(&self) -> bool {
        self.terminal == Some(TerminalReason::Collision)
    }

    pub fn total_reward(&self) -> f64 {
        self.steps.iter().map(|s| s.reward.total).sum()
    }

    /// Tab-separated per-step table with a header row.
    pub fn to_table(&self) -> String {
        let mut out = String::from(
            "step\ttime\tleader_speed\tfollower_speed\tgap\taction\tjerk\tf_ttc\tf_headway\tf_jerk\treward\n",
        );
        for s in &self.steps {
            let _ = writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
                s.step,
                s.time,
                s.leader_speed,
                s.follower_speed,
                s.gap,
                s.action,
                s.jerk,
                s.reward.f_ttc,
                s.reward.f_headway,
                s.reward.f_jerk,
                s.reward.total
            );
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trajectory::TrajectorySample;

    /// Leader held at `leader_speed`; follower samples only seed the reset.
    fn event(n: usize, leader_speed: f64, follower_speed: f64, gap: f64) -> CfEvent {
        let sample = |id: i64, pos: f64, v: f64, k: usize| TrajectorySample {
            time: k as f64 * 0.1,
            position: pos,
            speed: v,
            acceleration: 0.0,
            lane_id: 1,
            vehicle_id: id,
            leader_id: if id == 2 { 1 } else { 0 },
            vehicle_length: 5.0,
        };
        let leader = (0..n)
            .map(|k| sample(1, gap + 5.0 + leader_speed * k as f64 * 0.1, leader_speed, k))
            .collect();
        let follower = (0..n).map(|k| sample(2, 0.0, follower_speed, k)).collect();
        CfEvent::new(1, leader, follower)
    }

    #[test]
    fn reset_copies_first_sample() {
        let ev = event(10, 11.0, 10.0, 20.0);
        let sim = Simulator::default();
        let s = sim.reset(&ev);
        assert_eq!(s.follower_speed, 10.0);
        assert_eq!(s.relative_speed, 1.0);
        assert!((s.gap - 20.0).abs() < 1e-12);
        assert_eq!(s.step_index, 0);
        assert_eq!(sim.reset(&ev), s);
    }

    #[test]
    fn speed_update() {
        let ev = event(10, 10.0, 10.0, 20.0);
        let sim = Simulator::default();
        let out = sim.step(&sim.reset(&ev), 1.0, &ev).unwrap();
        assert!((out.next_state.follower_speed - 10.1).abs() < 1e-12);
        assert_eq!(out.jerk, 0.0, "first step carries no jerk");
        let out = sim.step(&out.next_state, 0.5, &ev).unwrap();
        assert!((out.jerk + 5.0).abs() < 1e-12);
    }

    #[test]
    fn trapezoid_gap_update() {
        let ev = event(10, 15.0, 10.0, 20.0);
        let sim = Simulator::default();
        let s = CfState {
            follower_speed: 10.0,
            relative_speed: 5.0,
            gap: 20.0,
            prev_acceleration: 1.0,
            step_index: 0,
        };
        let out = sim.step(&s, 1.0, &ev).unwrap();
        assert!((out.next_state.relative_speed - 4.9).abs() < 1e-12);
        assert!((out.next_state.gap - 20.495).abs() < 1e-12);
        assert_eq!(out.jerk, 0.0);
    }

    #[test]
    fn collision_is_terminal() {
        let ev = event(10, 10.0, 15.0, 0.3);
        let sim = Simulator::default();
        let s = CfState {
            follower_speed: 15.0,
            relative_speed: -5.0,
            gap: 0.3,
            prev_acceleration: 0.0,
            step_index: 0,
        };
        let out = sim.step(&s, 0.0, &ev).unwrap();
        assert!(out.next_state.gap <= 0.0);
        assert_eq!(out.terminal, Some(TerminalReason::Collision));
        assert!((out.reward.f_ttc - (0.1f64 / 7.0).ln()).abs() < 1e-15);
        let err = sim.step(&out.next_state, 0.0, &ev).unwrap_err();
        assert!(matches!(err, Error::Lifecycle(_)));
    }

    #[test]
    fn event_end_and_absorption() {
        let ev = event(3, 10.0, 10.0, 20.0);
        let sim = Simulator::default();
        let a = sim.step(&sim.reset(&ev), 0.0, &ev).unwrap();
        assert!(!a.is_terminal());
        let b = sim.step(&a.next_state, 0.0, &ev).unwrap();
        assert_eq!(b.terminal, Some(TerminalReason::EventEnd));
        assert!(matches!(sim.step(&b.next_state, 0.0, &ev), Err(Error::Lifecycle(_))));
    }

    #[test]
    fn speed_floor_at_zero() {
        let ev = event(10, 0.0, 0.1, 20.0);
        let sim = Simulator::default();
        let out = sim.step(&sim.reset(&ev), -3.0, &ev).unwrap();
        assert_eq!(out.next_state.follower_speed, 0.0);
        assert_eq!(out.next_state.relative_speed, 0.0);
    }

    #[test]
    fn zero_policy_keeps_gap_constant() {
        let ev = event(200, 12.0, 12.0, 25.0);
        let sim = Simulator::default();
        let log = sim.run_event(&mut |_: &CfState| 0.0, &ev).unwrap();
        assert_eq!(log.steps.len(), 199);
        assert_eq!(log.terminal, Some(TerminalReason::EventEnd));
        for s in &log.steps {
            assert!((s.gap - 25.0).abs() < 1e-9);
        }
    }

    #[test]
    fn full_throttle_into_stopped_leader_collides() {
        // Gap 20 m, follower from 5 m/s at +3 m/s^2: the closed form
        // 20 - 5t - 1.5t^2 hits zero at t ~ 2.36 s, well inside 20 s.
        let ev = event(200, 0.0, 5.0, 20.0);
        let sim = Simulator::default();
        let log = sim.run_event(&mut |_: &CfState| 3.0, &ev).unwrap();
        assert!(log.collided());
        let t = log.steps.len() as f64 * 0.1;
        assert!((t - 2.4).abs() < 0.11, "collided after {t} s");
    }

    #[test]
    fn recorded_policy_replays_event() {
        let ev = event(20, 10.0, 10.0, 20.0);
        let sim = Simulator::default();
        let log = sim.run_event(&mut RecordedPolicy { event: &ev }, &ev).unwrap();
        assert!(log.steps.iter().all(|s| s.follower_speed == 10.0));
        assert!(log.to_table().lines().count() == 20);
    }
}
