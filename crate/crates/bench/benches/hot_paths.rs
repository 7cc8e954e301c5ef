use std::hint::black_box;

use carfollow_bench::{cruising_state, filled_buffer, minibatch, small_fleet};
use carfollow_core::ddpg::{ActorPolicy, Agent, TrainConfig};
use carfollow_core::env::RecordedPolicy;
use carfollow_core::mlp::{init_mlp, ForwardCache};
use carfollow_core::reward::{step_reward, RewardConfig};
use carfollow_core::rng::{self, Stream};
use carfollow_core::Simulator;
use criterion::{criterion_group, criterion_main, BatchSize, Criterion};

fn networks(c: &mut Criterion) {
    let cfg = TrainConfig::default();
    let mut rng = rng::stream(1, Stream::CriticInit);
    let critic = init_mlp(cfg.critic_arch(), &mut rng);
    let input = [0.5, 0.04, 0.22, 0.1];
    let mut cache = ForwardCache::default();

    c.bench_function("critic_forward", |b| {
        b.iter(|| critic.forward_into(black_box(&input), &mut cache).unwrap())
    });
    critic.forward_into(&input, &mut cache).unwrap();
    c.bench_function("critic_backward", |b| b.iter(|| critic.backward(black_box(&cache), &[1.0])));
}

fn updates(c: &mut Criterion) {
    let cfg = TrainConfig::default();
    let fleet = small_fleet(4);
    let buffer = filled_buffer(&fleet, 7000);
    let batch = minibatch(&buffer, cfg.minibatch);

    c.bench_function("critic_update_32", |b| {
        b.iter_batched_ref(
            || Agent::new(&cfg),
            |agent| agent.critic_update(black_box(&batch), cfg.gamma).unwrap(),
            BatchSize::SmallInput,
        )
    });
    c.bench_function("actor_update_32", |b| {
        b.iter_batched_ref(
            || Agent::new(&cfg),
            |agent| agent.actor_update(black_box(&batch)).unwrap(),
            BatchSize::SmallInput,
        )
    });
    c.bench_function("soft_update", |b| {
        b.iter_batched_ref(
            || Agent::new(&cfg),
            |agent| agent.soft_update_targets(cfg.tau),
            BatchSize::SmallInput,
        )
    });
}

fn environment(c: &mut Criterion) {
    let sim = Simulator::default();
    let fleet = small_fleet(2);
    let event = &fleet[0];
    let state = cruising_state();
    let reward = RewardConfig::default();

    c.bench_function("step_reward", |b| {
        b.iter(|| step_reward(black_box(22.0), black_box(15.0), 15.4, 1.0, &reward).unwrap())
    });
    c.bench_function("env_step", |b| b.iter(|| sim.step(black_box(&state), 0.3, event).unwrap()));
    c.bench_function("recorded_rollout", |b| {
        b.iter(|| sim.run_event(&mut RecordedPolicy { event }, event).unwrap())
    });

    let cfg = TrainConfig::default();
    let agent = Agent::new(&cfg);
    c.bench_function("actor_rollout", |b| {
        b.iter(|| {
            let mut policy = ActorPolicy::new(&agent.nets.actor, cfg.scales);
            sim.run_event(&mut policy, event).unwrap()
        })
    });
}

criterion_group!(benches, networks, updates, environment);
criterion_main!(benches);
