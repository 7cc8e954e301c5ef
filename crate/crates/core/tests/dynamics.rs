use carfollow_core::env::RecordedPolicy;
use carfollow_core::selftest::constant_acceleration_event;
use carfollow_core::synthetic::{synthetic_fleet, FleetConfig};
use carfollow_core::{CfState, Error, Simulator, TerminalReason};
use proptest::prelude::*;

#[test]
fn recorded_replay_reproduces_synthetic_followers() {
    let fleet = synthetic_fleet(&FleetConfig {
        events: 20,
        ..FleetConfig::default()
    });
    let sim = Simulator::default();
    for e in &fleet {
        let log = sim.run_event(&mut RecordedPolicy { event: e }, e).unwrap();
        assert_eq!(log.steps.len(), e.len() - 1);
        assert_eq!(log.terminal, Some(TerminalReason::EventEnd));
        for s in &log.steps {
            assert!((s.follower_speed - e.follower[s.step].speed).abs() < 1e-6 * s.step as f64);
            assert!((s.gap - e.gap(s.step)).abs() < 1e-6 * s.step as f64, "event {} step {}", e.event_id, s.step);
        }
    }
}

proptest! {
    #[test]
    fn trapezoid_gap_matches_closed_form(
        vl in 5.0f64..30.0,
        dv in -1.0f64..1.0,
        al in -0.02f64..0.02,
        af in -0.02f64..0.02,
        gap0 in 600.0f64..800.0,
    ) {
        let vf = vl - dv;
        let steps = 1000;
        let event = constant_acceleration_event(steps, gap0, (vl, al), (vf, af));
        let sim = Simulator::default();
        let mut policy = |_: &CfState| af;
        let log = sim.run_event(&mut policy, &event).unwrap();
        prop_assert_eq!(log.steps.len(), steps);
        for s in &log.steps {
            let t = s.step as f64 * 0.1;
            let closed = gap0 + (vl - vf) * t + 0.5 * (al - af) * t * t;
            prop_assert!((s.gap - closed).abs() <= 1e-9 * s.step as f64, "step {}: {} vs {}", s.step, s.gap, closed);
        }
    }

    #[test]
    fn speed_never_negative(actions in proptest::collection::vec(-3.0f64..3.0, 1..300)) {
        let event = constant_acceleration_event(400, 150.0, (2.0, 0.0), (2.0, 0.0));
        let sim = Simulator::default();
        let mut state = sim.reset(&event);
        for a in actions {
            if sim.is_terminal(&state, &event) {
                break;
            }
            let out = sim.step(&state, a, &event).unwrap();
            prop_assert!(out.next_state.follower_speed >= 0.0);
            prop_assert_eq!(out, sim.step(&state, a, &event).unwrap());
            state = out.next_state;
        }
    }
}

#[test]
fn terminal_states_are_absorbing() {
    let event = constant_acceleration_event(30, 1.0, (0.0, 0.0), (10.0, 0.0));
    let sim = Simulator::default();
    let mut policy = |_: &CfState| 0.0;
    let log = sim.run_event(&mut policy, &event).unwrap();
    assert_eq!(log.terminal, Some(TerminalReason::Collision));
    let last = log.steps.last().unwrap();
    assert!(last.gap <= 0.0);
    let state = CfState {
        follower_speed: last.follower_speed,
        relative_speed: last.relative_speed,
        gap: last.gap,
        prev_acceleration: 0.0,
        step_index: last.step,
    };
    assert!(matches!(sim.step(&state, 0.0, &event), Err(Error::Lifecycle(_))));
    assert_eq!(sim.reset(&event).gap, 1.0);
}
