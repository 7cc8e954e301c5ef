//! Shared fixtures for the benchmarks.

use carfollow_core::ddpg::{ReplayBuffer, StateScales, Transition};
use carfollow_core::rng::{self, Stream};
use carfollow_core::synthetic::{synthetic_fleet, FleetConfig};
use carfollow_core::{CfEvent, CfState, Simulator};

pub fn small_fleet(events: usize) -> Vec<CfEvent> {
    synthetic_fleet(&FleetConfig {
        events,
        ..FleetConfig::default()
    })
}

/// Replays recorded follower accelerations through the simulator to fill a buffer.
pub fn filled_buffer(events: &[CfEvent], capacity: usize) -> ReplayBuffer {
    let sim = Simulator::default();
    let scales = StateScales::default();
    let mut buffer = ReplayBuffer::new(capacity);
    for (i, e) in events.iter().enumerate() {
        let mut state = sim.reset(e);
        while !sim.is_terminal(&state, e) {
            let action = e.follower[state.step_index].acceleration.clamp(-3.0, 3.0);
            let out = sim.step(&state, action, e).expect("recorded replay stays valid");
            buffer.push(Transition {
                state,
                state_norm: scales.normalize(&state),
                action,
                reward: out.reward.total,
                next_state: out.next_state,
                next_norm: scales.normalize(&out.next_state),
                terminal: out.is_terminal(),
                event_index: i,
            });
            state = out.next_state;
        }
    }
    buffer
}

pub fn minibatch(buffer: &ReplayBuffer, n: usize) -> Vec<Transition> {
    let mut out = Vec::with_capacity(n);
    buffer
        .sample_copied(n, &mut rng::stream(0, Stream::Sampling), &mut out)
        .expect("buffer holds a minibatch");
    out
}

pub fn cruising_state() -> CfState {
    CfState {
        follower_speed: 15.0,
        relative_speed: 0.4,
        gap: 22.0,
        prev_acceleration: 0.1,
        step_index: 0,
    }
}
