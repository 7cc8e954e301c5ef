//! Deep deterministic policy gradient for car-following velocity control.
//!
//! The agent owns an actor `mu(s)` (3-30-1, tanh scaled to the actuator
//! bound) and a critic `Q(s, a)` (4-30-1, linear), each with a slowly
//! tracking target copy. Training walks every training event in order once
//! per episode; every environment step pushes one transition and, once the
//! replay buffer holds a minibatch, runs one critic step, one actor step and
//! a soft update of both targets. The critic sees the normalized state and
//! the raw acceleration. Exploration noise restarts from zero at every event.

use std::collections::VecDeque;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::Rng as _;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::env::{CfState, Policy, Simulator};
use crate::error::{Error, Result};
use crate::mlp::{self, AdamState, Architecture, ForwardCache, Gradients, MlpParams, OutputActivation};
use crate::reward::RewardConfig;
use crate::rng::{self, Rng, Stream};
use crate::trajectory::CfEvent;

/// Fixed divisors applied to the raw state before it reaches either network.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateScales {
    pub speed: f64,
    pub relative_speed: f64,
    pub gap: f64,
}

impl Default for StateScales {
    fn default() -> Self {
        Self {
            speed: 30.0,
            relative_speed: 10.0,
            gap: 100.0,
        }
    }
}

impl StateScales {
    pub fn normalize(&self, s: &CfState) -> [f64; 3] {
        [
            s.follower_speed / self.speed,
            s.relative_speed / self.relative_speed,
            s.gap / self.gap,
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transition {
    pub state: CfState,
    pub state_norm: [f64; 3],
    pub action: f64,
    pub reward: f64,
    pub next_state: CfState,
    pub next_norm: [f64; 3],
    pub terminal: bool,
    /// Index of the training event the transition came from.
    pub event_index: usize,
}

/// Returned by [`ReplayBuffer::sample`] while the buffer is smaller than the batch.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NotReady {
    pub have: usize,
    pub need: usize,
}

/// Bounded FIFO of transitions; the oldest entry is evicted when full.
#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    items: VecDeque<Transition>,
    capacity: usize,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "replay buffer needs capacity");
        Self {
            items: VecDeque::with_capacity(capacity),
            capacity,
        }
    }

    pub fn push(&mut self, transition: Transition) {
        if self.items.len() == self.capacity {
            self.items.pop_front();
        }
        self.items.push_back(transition);
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn iter(&self) -> impl Iterator<Item = &Transition> {
        self.items.iter()
    }

    fn draw(&self, rng: &mut Rng) -> usize {
        rng.random_range(0..self.items.len())
    }

    fn check_ready(&self, n: usize) -> Result<(), NotReady> {
        let have = self.items.len();
        if have < n.max(1) {
            return Err(NotReady { have, need: n.max(1) });
        }
        Ok(())
    }

    /// `n` uniform draws with replacement.
    pub fn sample(&self, n: usize, rng: &mut Rng) -> Result<Vec<&Transition>, NotReady> {
        self.check_ready(n)?;
        Ok((0..n).map(|_| &self.items[self.draw(rng)]).collect())
    }

    /// Same draws as [`ReplayBuffer::sample`], copied into a reusable vector.
    pub fn sample_copied(&self, n: usize, rng: &mut Rng, out: &mut Vec<Transition>) -> Result<(), NotReady> {
        self.check_ready(n)?;
        out.clear();
        out.extend((0..n).map(|_| self.items[self.draw(rng)]));
        Ok(())
    }
}

/// Discrete Ornstein-Uhlenbeck process with unit time step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OuNoise {
    pub value: f64,
    pub theta: f64,
    pub sigma: f64,
    pub mu: f64,
}

impl OuNoise {
    pub fn new(theta: f64, sigma: f64) -> Self {
        Self {
            value: 0.0,
            theta,
            sigma,
            mu: 0.0,
        }
    }

    pub fn reset(&mut self) {
        self.value = self.mu;
    }

    /// `x <- x + theta (mu - x) + sigma g`, `g ~ N(0, 1)`.
    pub fn sample(&mut self, rng: &mut Rng) -> f64 {
        let g: f64 = rng.sample(StandardNormal);
        self.value += self.theta * (self.mu - self.value) + self.sigma * g;
        self.value
    }

    /// Long-run standard deviation `sigma / sqrt(theta (2 - theta))`.
    pub fn stationary_std(&self) -> f64 {
        self.sigma / (self.theta * (2.0 - self.theta)).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub episodes: usize,
    pub minibatch: usize,
    pub gamma: f64,
    pub tau: f64,
    pub actor_lr: f64,
    pub critic_lr: f64,
    pub buffer_capacity: usize,
    pub hidden: usize,
    pub action_bound: f64,
    pub ou_theta: f64,
    pub ou_sigma: f64,
    pub seed: u64,
    pub reward: RewardConfig,
    pub scales: StateScales,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            episodes: 60,
            minibatch: 32,
            gamma: 0.99,
            tau: 0.001,
            actor_lr: 0.001,
            critic_lr: 0.001,
            buffer_capacity: 7000,
            hidden: 30,
            action_bound: 3.0,
            ou_theta: 0.15,
            ou_sigma: 0.2,
            seed: 0,
            reward: RewardConfig::default(),
            scales: StateScales::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return bad(format!("gamma {} outside (0, 1]", self.gamma));
        }
        if !(self.tau > 0.0 && self.tau <= 1.0) {
            return bad(format!("tau {} outside (0, 1]", self.tau));
        }
        if self.minibatch == 0 || self.minibatch > self.buffer_capacity {
            return bad(format!(
                "minibatch {} must be in 1..={} (buffer capacity)",
                self.minibatch, self.buffer_capacity
            ));
        }
        if self.hidden == 0 || !(self.action_bound > 0.0) {
            return bad("hidden width and action bound must be positive".into());
        }
        if !(self.actor_lr >= 0.0 && self.critic_lr >= 0.0) {
            return bad("learning rates must be >= 0".into());
        }
        let s = &self.scales;
        if !(s.speed > 0.0 && s.relative_speed > 0.0 && s.gap > 0.0) {
            return bad("normalization scales must be positive".into());
        }
        self.reward.validate()
    }

    pub fn actor_arch(&self) -> Architecture {
        Architecture {
            input: 3,
            hidden: self.hidden,
            output: 1,
            activation: OutputActivation::TanhScaled(self.action_bound),
        }
    }

    pub fn critic_arch(&self) -> Architecture {
        Architecture {
            input: 4,
            hidden: self.hidden,
            output: 1,
            activation: OutputActivation::Linear,
        }
    }
}

/// Noise-free actor used for evaluation.
#[derive(Debug, Clone)]
pub struct ActorPolicy<'a> {
    pub actor: &'a MlpParams,
    pub scales: StateScales,
    cache: ForwardCache,
}

impl<'a> ActorPolicy<'a> {
    pub fn new(actor: &'a MlpParams, scales: StateScales) -> Self {
        Self {
            actor,
            scales,
            cache: ForwardCache::default(),
        }
    }
}

impl Policy for ActorPolicy<'_> {
    fn act(&mut self, state: &CfState) -> f64 {
        let x = self.scales.normalize(state);
        self.actor.forward_into(&x, &mut self.cache).expect("actor takes 3 inputs");
        self.cache.output[0]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Networks {
    pub actor: MlpParams,
    pub critic: MlpParams,
    pub actor_target: MlpParams,
    pub critic_target: MlpParams,
}

#[derive(Debug, Clone)]
struct Scratch {
    actor_cache: ForwardCache,
    critic_cache: ForwardCache,
    actor_grads: Gradients,
    critic_grads: Gradients,
    discard: Gradients,
    input_grad: Vec<f64>,
    critic_input: [f64; 4],
}

#[derive(Debug, Clone)]
pub struct Agent {
    pub nets: Networks,
    pub actor_adam: AdamState,
    pub critic_adam: AdamState,
    pub scales: StateScales,
    pub action_bound: f64,
    scratch: Scratch,
}

impl Agent {
    pub fn new(config: &TrainConfig) -> Self {
        let actor = mlp::init_mlp(config.actor_arch(), &mut rng::stream(config.seed, Stream::ActorInit));
        let critic = mlp::init_mlp(config.critic_arch(), &mut rng::stream(config.seed, Stream::CriticInit));
        Self::from_networks(
            Networks {
                actor_target: actor.clone(),
                critic_target: critic.clone(),
                actor,
                critic,
            },
            config,
        )
    }

    pub fn from_networks(nets: Networks, config: &TrainConfig) -> Self {
        let scratch = Scratch {
            actor_cache: ForwardCache::default(),
            critic_cache: ForwardCache::default(),
            actor_grads: Gradients::zeros(&nets.actor.arch),
            critic_grads: Gradients::zeros(&nets.critic.arch),
            discard: Gradients::zeros(&nets.critic.arch),
            input_grad: vec![0.0; nets.critic.arch.input],
            critic_input: [0.0; 4],
        };
        Self {
            actor_adam: AdamState::new(&nets.actor.arch, config.actor_lr),
            critic_adam: AdamState::new(&nets.critic.arch, config.critic_lr),
            nets,
            scales: config.scales,
            action_bound: config.action_bound,
            scratch,
        }
    }

    /// Deterministic actor output for a raw state.
    pub fn act(&mut self, state: &CfState) -> f64 {
        let x = self.scales.normalize(state);
        self.nets
            .actor
            .forward_into(&x, &mut self.scratch.actor_cache)
            .expect("actor takes 3 inputs");
        self.scratch.actor_cache.output[0]
    }

    fn critic_input(state_norm: &[f64; 3], action: f64) -> [f64; 4] {
        [state_norm[0], state_norm[1], state_norm[2], action]
    }

    /// Target-network value `Q'(s, mu'(s))`.
    pub fn target_value(&mut self, state_norm: &[f64; 3]) -> f64 {
        let sc = &mut self.scratch;
        self.nets.actor_target.forward_into(state_norm, &mut sc.actor_cache).expect("3 inputs");
        let a = sc.actor_cache.output[0];
        let x = Self::critic_input(state_norm, a);
        self.nets.critic_target.forward_into(&x, &mut sc.critic_cache).expect("4 inputs");
        sc.critic_cache.output[0]
    }

    /// One Adam step on the mean squared Bellman error; returns the loss
    /// before the step.
    pub fn critic_update(&mut self, batch: &[Transition], gamma: f64) -> Result<f64> {
        if batch.is_empty() {
            return Err(Error::Training("empty minibatch".into()));
        }
        let n = batch.len() as f64;
        self.scratch.critic_grads.clear();
        let mut loss = 0.0;
        for (i, t) in batch.iter().enumerate() {
            let y = if t.terminal {
                t.reward
            } else {
                t.reward + gamma * self.target_value(&t.next_norm)
            };
            if !y.is_finite() {
                return Err(Error::Numeric(format!(
                    "non-finite critic target for minibatch entry {i} (event index {}, step {})",
                    t.event_index, t.state.step_index
                )));
            }
            let x = Self::critic_input(&t.state_norm, t.action);
            let sc = &mut self.scratch;
            sc.critic_input = x;
            self.nets.critic.forward_into(&sc.critic_input, &mut sc.critic_cache)?;
            let diff = sc.critic_cache.output[0] - y;
            loss += diff * diff / n;
            self.nets.critic.backward_accumulate(
                &sc.critic_cache,
                &[2.0 * diff / n],
                &mut sc.critic_grads,
                &mut sc.input_grad,
            );
        }
        self.critic_adam.step(&mut self.nets.critic, &self.scratch.critic_grads)?;
        Ok(loss)
    }

    /// Gradient of `-mean Q(s, mu(s))` with respect to the actor parameters,
    /// chaining the critic's action gradient through the actor, plus the mean Q.
    pub fn policy_gradient(&mut self, batch: &[Transition]) -> Result<(&Gradients, f64)> {
        if batch.is_empty() {
            return Err(Error::Training("empty minibatch".into()));
        }
        let n = batch.len() as f64;
        let sc = &mut self.scratch;
        sc.actor_grads.clear();
        sc.discard.clear();
        let mut mean_q = 0.0;
        for t in batch {
            self.nets.actor.forward_into(&t.state_norm, &mut sc.actor_cache)?;
            let a = sc.actor_cache.output[0];
            sc.critic_input = [t.state_norm[0], t.state_norm[1], t.state_norm[2], a];
            self.nets.critic.forward_into(&sc.critic_input, &mut sc.critic_cache)?;
            mean_q += sc.critic_cache.output[0] / n;
            self.nets
                .critic
                .backward_accumulate(&sc.critic_cache, &[1.0], &mut sc.discard, &mut sc.input_grad);
            let dq_da = sc.input_grad[3];
            let mut unused = [0.0; 3];
            self.nets
                .actor
                .backward_accumulate(&sc.actor_cache, &[-dq_da / n], &mut sc.actor_grads, &mut unused);
        }
        Ok((&self.scratch.actor_grads, mean_q))
    }

    /// One Adam ascent step on the mean of `Q(s, mu(s))` over the batch;
    /// critic parameters are untouched. Returns the mean Q before the step.
    pub fn actor_update(&mut self, batch: &[Transition]) -> Result<f64> {
        let (_, mean_q) = self.policy_gradient(batch)?;
        self.actor_adam.step(&mut self.nets.actor, &self.scratch.actor_grads)?;
        Ok(mean_q)
    }

    pub fn soft_update_targets(&mut self, tau: f64) {
        self.nets.critic_target.soft_update(&self.nets.critic, tau);
        self.nets.actor_target.soft_update(&self.nets.actor, tau);
    }

    pub fn policy(&self) -> ActorPolicy<'_> {
        ActorPolicy::new(&self.nets.actor, self.scales)
    }
}

/// Networks selected by best evaluation reward.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub actor: MlpParams,
    pub critic: MlpParams,
    /// Episode (1-based) that produced it; 0 for the untrained networks.
    pub episode: usize,
    pub eval_reward: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpisodeRecord {
    pub episode: usize,
    pub train_mean_reward: f64,
    pub eval_mean_reward: f64,
    pub collisions: usize,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub best: Checkpoint,
    pub curve: Vec<EpisodeRecord>,
    pub agent: Agent,
    pub buffer: ReplayBuffer,
}

/// Mean step reward of a noise-free actor over `events`, and the number of
/// events that ended in collision. Events run in parallel; the reduction is
/// sequential so the result does not depend on thread scheduling.
pub fn evaluate_actor(actor: &MlpParams, scales: StateScales, sim: &Simulator, events: &[CfEvent]) -> Result<(f64, usize)> {
    let per_event: Vec<(f64, usize, bool)> = events
        .par_iter()
        .map(|e| {
            let log = sim.run_event(&mut ActorPolicy::new(actor, scales), e)?;
            Ok((log.total_reward(), log.steps.len(), log.collided()))
        })
        .collect::<Result<_>>()?;
    let (mut total, mut steps, mut collisions) = (0.0, 0usize, 0usize);
    for (r, n, c) in per_event {
        total += r;
        steps += n;
        collisions += c as usize;
    }
    Ok((if steps == 0 { 0.0 } else { total / steps as f64 }, collisions))
}

pub fn train(events: &[CfEvent], config: &TrainConfig, eval_events: &[CfEvent]) -> Result<TrainOutcome> {
    train_with_progress(events, config, eval_events, |_| {})
}

pub fn train_with_progress(
    events: &[CfEvent],
    config: &TrainConfig,
    eval_events: &[CfEvent],
    mut on_episode: impl FnMut(&EpisodeRecord),
) -> Result<TrainOutcome> {
    config.validate()?;
    if events.is_empty() || events.iter().all(|e| e.len() < 3) {
        return Err(Error::Training("no training event spans at least 2 steps".into()));
    }
    let eval_events = if eval_events.is_empty() { events } else { eval_events };
    let sim = Simulator::new(config.reward);
    let mut agent = Agent::new(config);
    let mut buffer = ReplayBuffer::new(config.buffer_capacity);
    let mut noise = OuNoise::new(config.ou_theta, config.ou_sigma);
    let mut noise_rng = rng::stream(config.seed, Stream::Noise);
    let mut sample_rng = rng::stream(config.seed, Stream::Sampling);
    let mut batch: Vec<Transition> = Vec::with_capacity(config.minibatch);

    let mut best = Checkpoint {
        actor: agent.nets.actor.clone(),
        critic: agent.nets.critic.clone(),
        episode: 0,
        eval_reward: f64::NEG_INFINITY,
    };
    let mut curve = Vec::with_capacity(config.episodes);

    for episode in 1..=config.episodes {
        let (mut reward_sum, mut steps) = (0.0, 0usize);
        for (event_index, event) in events.iter().enumerate() {
            if event.len() < 2 {
                continue;
            }
            let mut state = sim.reset(event);
            noise.reset();
            while !sim.is_terminal(&state, event) {
                let explore = agent.act(&state) + noise.sample(&mut noise_rng);
                let action = explore.clamp(-config.action_bound, config.action_bound);
                let out = sim.step(&state, action, event)?;
                reward_sum += out.reward.total;
                steps += 1;
                buffer.push(Transition {
                    state,
                    state_norm: config.scales.normalize(&state),
                    action,
                    reward: out.reward.total,
                    next_state: out.next_state,
                    next_norm: config.scales.normalize(&out.next_state),
                    terminal: out.is_terminal(),
                    event_index,
                });
                if buffer.sample_copied(config.minibatch, &mut sample_rng, &mut batch).is_ok() {
                    agent.critic_update(&batch, config.gamma)?;
                    agent.actor_update(&batch)?;
                    agent.soft_update_targets(config.tau);
                }
                state = out.next_state;
            }
        }
        if !agent.nets.actor.is_finite() || !agent.nets.critic.is_finite() {
            return Err(Error::Numeric(format!("network parameters diverged in episode {episode}")));
        }
        let (eval_mean_reward, collisions) = evaluate_actor(&agent.nets.actor, config.scales, &sim, eval_events)?;
        let record = EpisodeRecord {
            episode,
            train_mean_reward: if steps == 0 { 0.0 } else { reward_sum / steps as f64 },
            eval_mean_reward,
            collisions,
        };
        if eval_mean_reward > best.eval_reward {
            best = Checkpoint {
                actor: agent.nets.actor.clone(),
                critic: agent.nets.critic.clone(),
                episode,
                eval_reward: eval_mean_reward,
            };
        }
        on_episode(&record);
        curve.push(record);
    }
    if best.episode == 0 {
        best.eval_reward = evaluate_actor(&best.actor, config.scales, &sim, eval_events)?.0;
    }
    Ok(TrainOutcome {
        best,
        curve,
        agent,
        buffer,
    })
}

pub const CURVE_HEADER: &str = "episode,train_mean_step_reward,eval_mean_step_reward,eval_collisions";

pub fn curve_to_string(curve: &[EpisodeRecord]) -> String {
    let mut out = String::from(CURVE_HEADER);
    out.push('\n');
    for r in curve {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            r.episode, r.train_mean_reward, r.eval_mean_reward, r.collisions
        );
    }
    out
}

pub const ACTOR_FILE: &str = "actor.ckpt";
pub const CRITIC_FILE: &str = "critic.ckpt";
pub const META_FILE: &str = "checkpoint.meta";

/// Writes `actor.ckpt`, `critic.ckpt` and a `checkpoint.meta` sidecar of
/// `key: value` lines into `dir`.
pub fn write_checkpoint_dir(dir: &Path, ckpt: &Checkpoint, seed: u64, config_hash: &str) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    mlp::write_checkpoint(&dir.join(ACTOR_FILE), &ckpt.actor)?;
    mlp::write_checkpoint(&dir.join(CRITIC_FILE), &ckpt.critic)?;
    let meta = format!(
        "format: 1\nseed: {seed}\nconfig_hash: {config_hash}\nepisode: {}\neval_mean_step_reward: {}\n",
        ckpt.episode, ckpt.eval_reward
    );
    let path = dir.join(META_FILE);
    fs::write(&path, meta).map_err(|e| Error::io(&path, e))
}

pub fn read_checkpoint_dir(dir: &Path) -> Result<Checkpoint> {
    let actor = mlp::read_checkpoint(&dir.join(ACTOR_FILE))?;
    let critic = mlp::read_checkpoint(&dir.join(CRITIC_FILE))?;
    let meta_path = dir.join(META_FILE);
    let meta = fs::read_to_string(&meta_path).map_err(|e| Error::io(&meta_path, e))?;
    let field = |key: &str| {
        meta.lines()
            .find_map(|l| l.strip_prefix(key).and_then(|r| r.strip_prefix(':')))
            .map(str::trim)
            .ok_or_else(|| Error::Checkpoint(format!("{} lacks `{key}`", meta_path.display())))
    };
    let episode = field("episode")?
        .parse()
        .map_err(|_| Error::Checkpoint("bad episode in checkpoint metadata".into()))?;
    let eval_reward = field("eval_mean_step_reward")?
        .parse()
        .map_err(|_| Error::Checkpoint("bad reward in checkpoint metadata".into()))?;
    Ok(Checkpoint {
        actor,
        critic,
        episode,
        eval_reward,
    })
}
