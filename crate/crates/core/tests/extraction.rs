use std::collections::BTreeMap;
use std::fmt::Write as _;

use carfollow_core::synthetic::{fleet_trajectory_table, synthetic_fleet, FleetConfig};
use carfollow_core::trajectory::{
    events_from_str, events_to_string, extract_cf_events, fit_lognormal, parse_trajectory_table, validate_event,
    ColumnMapping, ExtractConfig, TrajectorySample,
};
use carfollow_core::CfEvent;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_distr::{Distribution, LogNormal};

const HEADER: &str = "Vehicle_ID,Frame_ID,Local_Y,v_Vel,v_Acc,Lane_ID,Preceding,v_Length";

/// One row per frame for a vehicle, with lane and leader given per frame.
fn rows(out: &mut String, id: i64, frames: std::ops::Range<i64>, x0: f64, speed: f64, lane: impl Fn(i64) -> i64, leader: impl Fn(i64) -> i64) {
    for f in frames.clone() {
        let x = x0 + speed * (f - frames.start) as f64 * 0.1;
        writeln!(out, "{id},{f},{x},{speed},0,{},{},4.5", lane(f), leader(f)).unwrap();
    }
}

fn extract(table: &str) -> Vec<CfEvent> {
    let parsed = parse_trajectory_table(table, &ColumnMapping::default()).unwrap();
    extract_cf_events(&parsed.vehicles, &ExtractConfig::default())
}

#[test]
fn twenty_second_pair_is_one_event() {
    let mut t = format!("{HEADER}\n");
    rows(&mut t, 1, 0..200, 30.0, 12.0, |_| 1, |_| 0);
    rows(&mut t, 2, 0..200, 0.0, 12.0, |_| 1, |_| 1);
    let events = extract(&t);
    assert_eq!(events.len(), 1);
    assert_eq!(events[0].len(), 200);
    assert!((events[0].duration - 20.0).abs() < 1e-9);
    assert!((events[0].gap(0) - 25.5).abs() < 1e-9);
}

#[test]
fn lane_change_halfway_through_twenty_seconds_leaves_nothing() {
    let mut t = format!("{HEADER}\n");
    rows(&mut t, 1, 0..200, 30.0, 12.0, |_| 1, |_| 0);
    rows(&mut t, 2, 0..200, 0.0, 12.0, |f| if f < 100 { 1 } else { 2 }, |_| 1);
    assert!(extract(&t).is_empty());
}

#[test]
fn joint_lane_change_splits_forty_seconds_into_two_events() {
    let mut t = format!("{HEADER}\n");
    let lane = |f: i64| if f < 200 { 1 } else { 2 };
    rows(&mut t, 1, 0..400, 30.0, 12.0, lane, |_| 0);
    rows(&mut t, 2, 0..400, 0.0, 12.0, lane, |_| 1);
    let events = extract(&t);
    assert_eq!(events.len(), 2);
    assert!(events.iter().all(|e| e.len() == 200));
    assert_eq!(events[1].follower[0].frame(), 200);
}

#[test]
fn exactly_fifteen_seconds_is_not_enough() {
    let mut t = format!("{HEADER}\n");
    rows(&mut t, 1, 0..151, 30.0, 12.0, |_| 1, |_| 0);
    rows(&mut t, 2, 0..150, 0.0, 12.0, |_| 1, |_| 1);
    assert!(extract(&t).is_empty());
    let mut t = format!("{HEADER}\n");
    rows(&mut t, 1, 0..151, 30.0, 12.0, |_| 1, |_| 0);
    rows(&mut t, 2, 0..151, 0.0, 12.0, |_| 1, |_| 1);
    assert_eq!(extract(&t).len(), 1);
}

/// Independent oracle: mark each follower frame as paired or not, then
/// count maximal runs of consecutive paired frames with a constant leader
/// and lane that last longer than 15 s.
fn brute_force_count(vehicles: &BTreeMap<i64, Vec<TrajectorySample>>) -> usize {
    let mut count = 0;
    for (&id, samples) in vehicles {
        let key = |s: &TrajectorySample| -> Option<(i64, i64)> {
            if s.leader_id == 0 || s.leader_id == id {
                return None;
            }
            let leader = vehicles.get(&s.leader_id)?.iter().find(|l| l.frame() == s.frame())?;
            let gap = leader.position - s.position - leader.vehicle_length;
            (leader.lane_id == s.lane_id && gap > 0.0).then_some((s.leader_id, s.lane_id))
        };
        let mut len = 0usize;
        let mut prev: Option<(i64, i64, i64)> = None;
        for s in samples {
            let k = key(s);
            let continues = match (k, prev) {
                (Some((l, lane)), Some((pl, plane, pf))) => l == pl && lane == plane && s.frame() == pf + 1,
                _ => false,
            };
            if !continues {
                if len > 150 {
                    count += 1;
                }
                len = 0;
            }
            match k {
                Some((l, lane)) => {
                    len += 1;
                    prev = Some((l, lane, s.frame()));
                }
                None => prev = None,
            }
        }
        if len > 150 {
            count += 1;
        }
    }
    count
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn extraction_matches_brute_force(
        change_at in 0i64..400,
        leader_switch_at in 0i64..400,
        gap_hole in proptest::option::of(0i64..400),
        both_change in any::<bool>(),
    ) {
        let mut t = format!("{HEADER}\n");
        let leader_lane = move |f: i64| if both_change && f >= change_at { 2 } else { 1 };
        let follower_lane = move |f: i64| if f >= change_at { 2 } else { 1 };
        rows(&mut t, 1, 0..400, 30.0, 12.0, leader_lane, |_| 0);
        rows(&mut t, 3, 0..400, 60.0, 12.0, leader_lane, |_| 1);
        // The follower drops frame `gap_hole` and switches leaders once.
        let mut follower = String::new();
        rows(&mut follower, 2, 0..400, 0.0, 12.0, follower_lane, move |f| if f >= leader_switch_at { 3 } else { 1 });
        for line in follower.lines() {
            let frame: i64 = line.split(',').nth(1).unwrap().parse().unwrap();
            if Some(frame) != gap_hole {
                t.push_str(line);
                t.push('\n');
            }
        }
        let parsed = parse_trajectory_table(&t, &ColumnMapping::default()).unwrap();
        let events = extract_cf_events(&parsed.vehicles, &ExtractConfig::default());
        prop_assert_eq!(events.len(), brute_force_count(&parsed.vehicles));
        for e in &events {
            prop_assert!(validate_event(e, &ExtractConfig::default()).is_ok());
        }
    }
}

#[test]
fn synthetic_table_round_trips_through_extraction() {
    let fleet = synthetic_fleet(&FleetConfig {
        events: 12,
        ..FleetConfig::default()
    });
    let table = fleet_trajectory_table(&fleet);
    let events = extract(&table);
    assert_eq!(events.len(), fleet.len());
    for (got, want) in events.iter().zip(&fleet) {
        assert_eq!(got.leader, want.leader);
        assert_eq!(got.follower, want.follower);
    }
}

#[test]
fn fleet_events_survive_the_events_file() {
    let fleet = synthetic_fleet(&FleetConfig {
        events: 5,
        ..FleetConfig::default()
    });
    assert_eq!(events_from_str(&events_to_string(&fleet)).unwrap(), fleet);
}

fn arb_event() -> impl Strategy<Value = CfEvent> {
    (1u64..1000, 2usize..30, 1i64..7, 0.5f64..40.0, -2.0f64..2.0).prop_map(|(id, n, lane, speed, acc)| {
        let sample = |k: usize, vid: i64, lead: i64, x: f64| TrajectorySample {
            time: (k + 3) as f64 * 0.1,
            position: x + speed * k as f64 * 0.1,
            speed,
            acceleration: acc,
            lane_id: lane,
            vehicle_id: vid,
            leader_id: lead,
            vehicle_length: 4.25,
        };
        let leader = (0..n).map(|k| sample(k, 7, 0, 120.5)).collect();
        let follower = (0..n).map(|k| sample(k, 8, 7, 100.0)).collect();
        CfEvent::new(id, leader, follower)
    })
}

proptest! {
    #[test]
    fn events_file_round_trip(mut events in proptest::collection::vec(arb_event(), 0..4)) {
        // Rows are keyed by event id, so ids must be distinct.
        for (i, e) in events.iter_mut().enumerate() {
            e.event_id += 1000 * i as u64;
        }
        let back = events_from_str(&events_to_string(&events)).unwrap();
        prop_assert_eq!(back, events);
    }
}

#[test]
fn lognormal_fit_recovers_parameters() {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
    let dist = LogNormal::new(0.4226, 0.4365).unwrap();
    let draws: Vec<f64> = (0..100_000).map(|_| dist.sample(&mut rng)).collect();
    let fit = fit_lognormal(draws).unwrap();
    assert!((fit.mu - 0.4226).abs() < 0.02, "{fit:?}");
    assert!((fit.sigma - 0.4365).abs() < 0.02, "{fit:?}");
}
