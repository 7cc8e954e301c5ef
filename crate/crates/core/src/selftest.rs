//! Embedded numeric oracles run by the `selftest` command and the acceptance suite.

use std::fmt;

use crate::ddpg::OuNoise;
use crate::env::Simulator;
use crate::gradcheck::{self, AnalyticGradient, GradCheckConfig};
use crate::mlp::{AdamState, Architecture, Gradients, MlpParams, OutputActivation};
use crate::rng::{self, Stream};
use crate::trajectory::{CfEvent, TrajectorySample, SAMPLE_INTERVAL};

#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl fmt::Display for OracleResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let verdict = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "{verdict} {}: {}", self.name, self.detail)
    }
}

pub fn actor_arch() -> Architecture {
    Architecture {
        input: 3,
        hidden: 30,
        output: 1,
        activation: OutputActivation::TanhScaled(3.0),
    }
}

pub fn critic_arch() -> Architecture {
    Architecture {
        input: 4,
        hidden: 30,
        output: 1,
        activation: OutputActivation::Linear,
    }
}

/// Checks `analytic` on `instances` random actors and as many random critics.
pub fn gradient_oracle(analytic: AnalyticGradient<'_>, instances: usize, seed: u64) -> OracleResult {
    let cfg = GradCheckConfig::default();
    let mut rng = rng::stream(seed, Stream::Selftest);
    let mut worst = 0.0f64;
    let mut checked = 0;
    for arch in [actor_arch(), critic_arch()] {
        for _ in 0..instances {
            let (params, input) = gradcheck::random_instance(arch, &mut rng, 1e-3);
            let report = gradcheck::check_gradients(&params, &input, &[1.0], analytic, &cfg);
            worst = worst.max(report.max_relative_error);
            checked += report.checked;
        }
    }
    OracleResult {
        name: "gradient",
        passed: worst < cfg.tolerance,
        detail: format!(
            "{} actor + {} critic instances, {checked} derivatives, max relative error {worst:.3e} (limit {:.0e})",
            instances, instances, cfg.tolerance
        ),
    }
}

/// First Adam step on a unit gradient moves each parameter by `-lr / (1 + eps)`,
/// and the second step on the same gradient by the same amount again.
pub fn adam_oracle() -> OracleResult {
    let arch = actor_arch();
    let lr = 0.001;
    let mut params = MlpParams::zeros(arch);
    let mut adam = AdamState::new(&arch, lr);
    let mut grads = Gradients::zeros(&arch);
    grads.values.fill(1.0);
    let expected = -lr / (1.0 + 1e-8);
    let mut worst = 0.0f64;
    for step in 1..=2 {
        if let Err(e) = adam.step(&mut params, &grads) {
            return OracleResult {
                name: "adam",
                passed: false,
                detail: e.to_string(),
            };
        }
        for p in &params.values {
            worst = worst.max((p - step as f64 * expected).abs());
        }
    }
    OracleResult {
        name: "adam",
        passed: worst < 1e-15,
        detail: format!("two unit-gradient steps, max deviation {worst:.3e}"),
    }
}

/// Event whose leader and follower both move under constant accelerations.
/// Follower samples carry `follower_acceleration`, so replaying them is exact.
pub fn constant_acceleration_event(
    steps: usize,
    gap0: f64,
    leader: (f64, f64),
    follower: (f64, f64),
) -> CfEvent {
    let dt = SAMPLE_INTERVAL;
    let length = 4.5;
    let sample = |k: usize, (v0, a): (f64, f64), x0: f64, id: i64, lead: i64| {
        let t = k as f64 * dt;
        TrajectorySample {
            time: t,
            position: x0 + v0 * t + 0.5 * a * t * t,
            speed: v0 + a * t,
            acceleration: a,
            lane_id: 1,
            vehicle_id: id,
            leader_id: lead,
            vehicle_length: length,
        }
    };
    let l = (0..=steps).map(|k| sample(k, leader, gap0 + length, 1, 0)).collect();
    let f = (0..=steps).map(|k| sample(k, follower, 0.0, 2, 1)).collect();
    CfEvent::new(1, l, f)
}

/// Simulated gaps under constant accelerations against the closed form
/// `gap0 + dv0 t + (al - af) t^2 / 2`, which trapezoidal integration of linear
/// speeds reproduces exactly.
pub fn kinematics_oracle() -> OracleResult {
    let steps = 1000;
    let (gap0, leader, follower) = (30.0, (20.0, 0.05), (15.0, 0.1));
    let event = constant_acceleration_event(steps, gap0, leader, follower);
    let sim = Simulator::default();
    let mut policy = |_: &crate::env::CfState| follower.1;
    let log = match sim.run_event(&mut policy, &event) {
        Ok(log) => log,
        Err(e) => {
            return OracleResult {
                name: "kinematics",
                passed: false,
                detail: e.to_string(),
            }
        }
    };
    let mut worst = 0.0f64;
    for s in &log.steps {
        let t = s.step as f64 * sim.dt;
        let closed = gap0 + (leader.0 - follower.0) * t + 0.5 * (leader.1 - follower.1) * t * t;
        worst = worst.max((s.gap - closed).abs() / s.step as f64);
    }
    OracleResult {
        name: "kinematics",
        passed: log.steps.len() == steps && worst < 1e-9,
        detail: format!("{} steps, max gap error per step {worst:.3e} m", log.steps.len()),
    }
}

/// Sample mean and standard deviation of an OU path against its stationary law.
pub fn ou_oracle(steps: usize, seed: u64) -> OracleResult {
    let mut noise = OuNoise::new(0.15, 0.2);
    let mut rng = rng::stream(seed, Stream::Selftest);
    let (mut sum, mut sum_sq) = (0.0, 0.0);
    for _ in 0..steps {
        let x = noise.sample(&mut rng);
        sum += x;
        sum_sq += x * x;
    }
    let n = steps as f64;
    let mean = sum / n;
    let std = (sum_sq / n - mean * mean).sqrt();
    let target = noise.stationary_std();
    let rel = (std - target).abs() / target;
    OracleResult {
        name: "ou-statistics",
        passed: mean.abs() <= 0.02 && rel <= 0.02,
        detail: format!("{steps} steps, mean {mean:.4}, std {std:.4} vs {target:.4} ({:.2}% off)", rel * 100.0),
    }
}

pub fn run_all(seed: u64) -> Vec<OracleResult> {
    vec![
        gradient_oracle(&gradcheck::backprop, 100, seed),
        adam_oracle(),
        kinematics_oracle(),
        ou_oracle(1_000_000, seed),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_oracles_pass() {
        for r in run_all(1) {
            assert!(r.passed, "{r}");
        }
    }

    #[test]
    fn perturbed_gradient_routine_fails() {
        let broken = |p: &MlpParams, x: &[f64], w: &[f64]| {
            let (g, mut dx) = gradcheck::backprop(p, x, w);
            dx[0] *= 1.0 + 1e-4;
            (g, dx)
        };
        assert!(!gradient_oracle(&broken, 5, 3).passed);
    }
}
