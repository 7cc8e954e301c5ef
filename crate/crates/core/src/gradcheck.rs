//! Central finite-difference check of network gradients.
//!
//! The check differentiates the scalar `weights . forward(params, input)`
//! numerically, perturbing one parameter (or input) at a time, and compares
//! against an analytic gradient routine supplied by the caller.

use crate::mlp::{Architecture, Gradients, MlpParams};
use crate::rng::Rng;
use rand::Rng as _;

/// Analytic gradient routine under test: `(params, input, output_weights) -> (param grads, input grads)`.
pub type AnalyticGradient<'a> = &'a dyn Fn(&MlpParams, &[f64], &[f64]) -> (Gradients, Vec<f64>);

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradCheckConfig {
    pub step: f64,
    pub tolerance: f64,
    /// Denominator floor for the relative error, so that two near-zero
    /// derivatives are compared on an absolute scale.
    pub floor: f64,
}

impl Default for GradCheckConfig {
    fn default() -> Self {
        Self {
            step: 1e-5,
            tolerance: 1e-6,
            floor: 1e-4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradCheckReport {
    pub max_relative_error: f64,
    pub checked: usize,
}

impl GradCheckReport {
    pub fn passed(&self, config: &GradCheckConfig) -> bool {
        self.max_relative_error < config.tolerance
    }
}

/// The production backward pass in the [`AnalyticGradient`] shape.
pub fn backprop(params: &MlpParams, input: &[f64], weights: &[f64]) -> (Gradients, Vec<f64>) {
    let (_, cache) = params.forward(input).expect("input matches architecture");
    params.backward(&cache, weights)
}

fn objective(params: &MlpParams, input: &[f64], weights: &[f64]) -> f64 {
    let (out, _) = params.forward(input).expect("input matches architecture");
    out.iter().zip(weights).map(|(o, w)| o * w).sum()
}

fn relative_error(a: f64, b: f64, floor: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(floor)
}

pub fn check_gradients(
    params: &MlpParams,
    input: &[f64],
    weights: &[f64],
    analytic: AnalyticGradient<'_>,
    config: &GradCheckConfig,
) -> GradCheckReport {
    let h = config.step;
    let (grads, input_grad) = analytic(params, input, weights);
    let mut worst = 0.0f64;
    let mut probe = params.clone();
    for i in 0..params.values.len() {
        let orig = probe.values[i];
        probe.values[i] = orig + h;
        let up = objective(&probe, input, weights);
        probe.values[i] = orig - h;
        let down = objective(&probe, input, weights);
        probe.values[i] = orig;
        let numeric = (up - down) / (2.0 * h);
        worst = worst.max(relative_error(grads.values[i], numeric, config.floor));
    }
    let mut x = input.to_vec();
    for i in 0..x.len() {
        let orig = x[i];
        x[i] = orig + h;
        let up = objective(params, &x, weights);
        x[i] = orig - h;
        let down = objective(params, &x, weights);
        x[i] = orig;
        let numeric = (up - down) / (2.0 * h);
        worst = worst.max(relative_error(input_grad[i], numeric, config.floor));
    }
    GradCheckReport {
        max_relative_error: worst,
        checked: params.values.len() + input.len(),
    }
}

/// Draws random parameters (including biases) and an input whose hidden
/// pre-activations all sit at least `margin` away from the ReLU kink, where
/// the network is not differentiable.
pub fn random_instance(arch: Architecture, rng: &mut Rng, margin: f64) -> (MlpParams, Vec<f64>) {
    let mut params = MlpParams::zeros(arch);
    for v in &mut params.values {
        *v = rng.random_range(-1.0..1.0);
    }
    loop {
        let input: Vec<f64> = (0..arch.input).map(|_| rng.random_range(-2.0..2.0)).collect();
        let clear = params
            .w1()
            .chunks_exact(arch.input)
            .zip(params.b1())
            .all(|(row, b)| (b + row.iter().zip(&input).map(|(w, x)| w * x).sum::<f64>()).abs() > margin);
        if clear {
            return (params, input);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mlp::OutputActivation;
    use crate::rng::{self, Stream};

    #[test]
    fn backprop_passes_and_perturbed_routine_fails() {
        let arch = Architecture {
            input: 4,
            hidden: 30,
            output: 1,
            activation: OutputActivation::Linear,
        };
        let mut rng = rng::stream(11, Stream::Selftest);
        let cfg = GradCheckConfig::default();
        let (p, x) = random_instance(arch, &mut rng, 1e-3);
        assert!(check_gradients(&p, &x, &[1.0], &backprop, &cfg).passed(&cfg));

        let broken = |p: &MlpParams, x: &[f64], w: &[f64]| {
            let (mut g, dx) = backprop(p, x, w);
            g.values[3] += 1e-3;
            (g, dx)
        };
        assert!(!check_gradients(&p, &x, &[1.0], &broken, &cfg).passed(&cfg));
    }
}
