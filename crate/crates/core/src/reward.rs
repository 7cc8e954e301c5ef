//! Safety, efficiency and comfort features and their linear combination.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::trajectory::LognormalParams;

/// Squared-jerk normalizer: ((3 - (-3)) / 0.1)^2.
pub const JERK_BASE: f64 = 3600.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RewardWeights {
    pub w_ttc: f64,
    pub w_headway: f64,
    pub w_jerk: f64,
}

impl Default for RewardWeights {
    fn default() -> Self {
        Self {
            w_ttc: 1.0,
            w_headway: 1.0,
            w_jerk: 1.0,
        }
    }
}

impl RewardWeights {
    pub fn validate(&self) -> Result<()> {
        let ok = [self.w_ttc, self.w_headway, self.w_jerk]
            .iter()
            .all(|w| w.is_finite() && *w >= 0.0);
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("reward weights must be finite and >= 0: {self:?}")))
        }
    }
}

/// Everything the per-step reward depends on besides the state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RewardConfig {
    pub weights: RewardWeights,
    /// TTC at or above this earns no safety penalty, seconds.
    pub safety_limit: f64,
    /// TTC is clamped up to this before the log, seconds.
    pub ttc_floor: f64,
    pub headway: LognormalParams,
}

impl Default for RewardConfig {
    fn default() -> Self {
        Self {
            weights: RewardWeights::default(),
            safety_limit: 7.0,
            ttc_floor: 0.1,
            headway: LognormalParams::default(),
        }
    }
}

impl RewardConfig {
    pub fn validate(&self) -> Result<()> {
        self.weights.validate()?;
        if !(self.safety_limit > 0.0) || !(self.ttc_floor > 0.0) || self.ttc_floor > self.safety_limit {
            return Err(Error::Config(format!(
                "need 0 < ttc_floor <= safety_limit, got {} and {}",
                self.ttc_floor, self.safety_limit
            )));
        }
        LognormalParams::new(self.headway.mu, self.headway.sigma).map(|_| ())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RewardBreakdown {
    pub f_ttc: f64,
    pub f_headway: f64,
    pub f_jerk: f64,
    pub total: f64,
}

impl RewardBreakdown {
    fn combine(f_ttc: f64, f_headway: f64, f_jerk: f64, w: &RewardWeights) -> Self {
        Self {
            f_ttc,
            f_headway,
            f_jerk,
            total: w.w_ttc * f_ttc + w.w_headway * f_headway - w.w_jerk * f_jerk,
        }
    }
}

/// Gap over closing speed. `None` unless the follower is faster than the leader.
pub fn time_to_collision(gap: f64, follower_speed: f64, leader_speed: f64) -> Result<Option<f64>> {
    if !(gap > 0.0) {
        return Err(Error::Collision { gap });
    }
    let closing = follower_speed - leader_speed;
    Ok((closing > 0.0).then(|| gap / closing))
}

pub fn ttc_feature(ttc: Option<f64>, safety_limit: f64, ttc_floor: f64) -> f64 {
    match ttc {
        Some(t) if (0.0..=safety_limit).contains(&t) => (t.max(ttc_floor) / safety_limit).ln(),
        _ => 0.0,
    }
}

pub fn lognormal_pdf(x: f64, params: &LognormalParams) -> f64 {
    if !(x > 0.0) || !x.is_finite() {
        return 0.0;
    }
    let z = (x.ln() - params.mu) / params.sigma;
    (-0.5 * z * z).exp() / (x * params.sigma * (2.0 * PI).sqrt())
}

pub fn headway_feature(headway: f64, params: &LognormalParams) -> f64 {
    lognormal_pdf(headway, params)
}

pub fn jerk_feature(jerk: f64) -> f64 {
    jerk * jerk / JERK_BASE
}

/// Time headway, infinite when the follower is stopped.
pub fn time_headway(gap: f64, follower_speed: f64) -> f64 {
    if follower_speed > 0.0 {
        gap / follower_speed
    } else {
        f64::INFINITY
    }
}

pub fn step_reward(
    gap: f64,
    follower_speed: f64,
    leader_speed: f64,
    jerk: f64,
    config: &RewardConfig,
) -> Result<RewardBreakdown> {
    let ttc = time_to_collision(gap, follower_speed, leader_speed)?;
    let f_ttc = ttc_feature(ttc, config.safety_limit, config.ttc_floor);
    let f_headway = headway_feature(time_headway(gap, follower_speed), &config.headway);
    Ok(RewardBreakdown::combine(f_ttc, f_headway, jerk_feature(jerk), &config.weights))
}

/// Reward for a step that ends in collision: the TTC feature sits at its
/// floor and there is no headway credit.
pub fn collision_reward(jerk: f64, config: &RewardConfig) -> RewardBreakdown {
    let f_ttc = ttc_feature(Some(0.0), config.safety_limit, config.ttc_floor);
    RewardBreakdown::combine(f_ttc, 0.0, jerk_feature(jerk), &config.weights)
}
