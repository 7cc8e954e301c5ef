//! One-hidden-layer dense networks: forward pass, reverse-mode gradients,
//! Adam and soft target tracking.
//!
//! Parameters live in one flat vector laid out as
//! `w1 (hidden x input, row-major) | b1 (hidden) | w2 (output x hidden, row-major) | b2 (output)`.
//! Gradients, Adam moments and checkpoints share that layout.

use std::fs;
use std::io::Write as _;
use std::path::Path;

use rand::Rng as _;

use crate::error::{Error, Result};
use crate::rng::Rng;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OutputActivation {
    Linear,
    /// `bound * tanh(z)`
    TanhScaled(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Architecture {
    pub input: usize,
    pub hidden: usize,
    pub output: usize,
    pub activation: OutputActivation,
}

impl Architecture {
    pub fn param_count(&self) -> usize {
        self.hidden * self.input + self.hidden + self.output * self.hidden + self.output
    }

    fn b1_offset(&self) -> usize {
        self.hidden * self.input
    }

    fn w2_offset(&self) -> usize {
        self.b1_offset() + self.hidden
    }

    fn b2_offset(&self) -> usize {
        self.w2_offset() + self.output * self.hidden
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpParams {
    pub arch: Architecture,
    pub values: Vec<f64>,
}

/// Partial derivatives in the parameter layout.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub values: Vec<f64>,
}

impl Gradients {
    pub fn zeros(arch: &Architecture) -> Self {
        Self {
            values: vec![0.0; arch.param_count()],
        }
    }

    pub fn clear(&mut self) {
        self.values.iter_mut().for_each(|g| *g = 0.0);
    }

    pub fn scale(&mut self, k: f64) {
        self.values.iter_mut().for_each(|g| *g *= k);
    }
}

/// Intermediate activations kept for the backward pass.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ForwardCache {
    pub input: Vec<f64>,
    pub hidden: Vec<f64>,
    pub output_pre: Vec<f64>,
    pub output: Vec<f64>,
}

/// Fan-in scaled uniform weights in `[-1/sqrt(fan_in), 1/sqrt(fan_in)]`, zero biases.
pub fn init_mlp(arch: Architecture, rng: &mut Rng) -> MlpParams {
    assert!(arch.input >= 1 && arch.hidden >= 1 && arch.output >= 1, "empty layer in {arch:?}");
    let mut values = vec![0.0; arch.param_count()];
    let b1 = 1.0 / (arch.input as f64).sqrt();
    for w in &mut values[..arch.b1_offset()] {
        *w = rng.random_range(-b1..b1);
    }
    let b2 = 1.0 / (arch.hidden as f64).sqrt();
    for w in &mut values[arch.w2_offset()..arch.b2_offset()] {
        *w = rng.random_range(-b2..b2);
    }
    MlpParams { arch, values }
}

impl MlpParams {
    pub fn zeros(arch: Architecture) -> Self {
        Self {
            arch,
            values: vec![0.0; arch.param_count()],
        }
    }

    pub fn w1(&self) -> &[f64] {
        &self.values[..self.arch.b1_offset()]
    }

    pub fn b1(&self) -> &[f64] {
        &self.values[self.arch.b1_offset()..self.arch.w2_offset()]
    }

    pub fn w2(&self) -> &[f64] {
        &self.values[self.arch.w2_offset()..self.arch.b2_offset()]
    }

    pub fn b2(&self) -> &[f64] {
        &self.values[self.arch.b2_offset()..]
    }

    /// Hidden weights, one row of `input` values per hidden unit.
    pub fn w1_mut(&mut self) -> &mut [f64] {
        let end = self.arch.b1_offset();
        &mut self.values[..end]
    }

    pub fn b1_mut(&mut self) -> &mut [f64] {
        let (lo, hi) = (self.arch.b1_offset(), self.arch.w2_offset());
        &mut self.values[lo..hi]
    }

    /// Output weights, one row of `hidden` values per output.
    pub fn w2_mut(&mut self) -> &mut [f64] {
        let (lo, hi) = (self.arch.w2_offset(), self.arch.b2_offset());
        &mut self.values[lo..hi]
    }

    pub fn b2_mut(&mut self) -> &mut [f64] {
        let lo = self.arch.b2_offset();
        &mut self.values[lo..]
    }

    pub fn forward(&self, input: &[f64]) -> Result<(Vec<f64>, ForwardCache)> {
        let mut cache = ForwardCache::default();
        self.forward_into(input, &mut cache)?;
        Ok((cache.output.clone(), cache))
    }

    /// Forward pass reusing `cache` buffers; the result is `cache.output`.
    pub fn forward_into(&self, input: &[f64], cache: &mut ForwardCache) -> Result<()> {
        let a = &self.arch;
        if input.len() != a.input {
            return Err(Error::Shape {
                expected: a.input,
                got: input.len(),
            });
        }
        cache.input.clear();
        cache.input.extend_from_slice(input);
        cache.hidden.clear();
        let (w1, b1) = (self.w1(), self.b1());
        for (row, bias) in w1.chunks_exact(a.input).zip(b1) {
            let z = bias + row.iter().zip(input).map(|(w, x)| w * x).sum::<f64>();
            cache.hidden.push(z.max(0.0));
        }
        cache.output_pre.clear();
        cache.output.clear();
        for (row, bias) in self.w2().chunks_exact(a.hidden).zip(self.b2()) {
            let z = bias + row.iter().zip(&cache.hidden).map(|(w, h)| w * h).sum::<f64>();
            cache.output_pre.push(z);
            cache.output.push(match a.activation {
                OutputActivation::Linear => z,
                OutputActivation::TanhScaled(bound) => bound * z.tanh(),
            });
        }
        Ok(())
    }

    /// Reverse-mode derivatives of `output_gradient . output` with respect to
    /// the parameters and the input.
    pub fn backward(&self, cache: &ForwardCache, output_gradient: &[f64]) -> (Gradients, Vec<f64>) {
        let mut grads = Gradients::zeros(&self.arch);
        let mut input_grad = vec![0.0; self.arch.input];
        self.backward_accumulate(cache, output_gradient, &mut grads, &mut input_grad);
        (grads, input_grad)
    }

    /// Like [`MlpParams::backward`] but adds into `grads` and overwrites `input_grad`.
    pub fn backward_accumulate(
        &self,
        cache: &ForwardCache,
        output_gradient: &[f64],
        grads: &mut Gradients,
        input_grad: &mut [f64],
    ) {
        let a = &self.arch;
        let (b1_off, w2_off, b2_off) = (a.b1_offset(), a.w2_offset(), a.b2_offset());
        let w2 = self.w2();
        let mut hidden_grad = vec![0.0; a.hidden];

        for o in 0..a.output {
            let dz = match a.activation {
                OutputActivation::Linear => output_gradient[o],
                OutputActivation::TanhScaled(bound) => {
                    let t = cache.output_pre[o].tanh();
                    output_gradient[o] * bound * (1.0 - t * t)
                }
            };
            grads.values[b2_off + o] += dz;
            let row = o * a.hidden;
            for j in 0..a.hidden {
                grads.values[w2_off + row + j] += dz * cache.hidden[j];
                hidden_grad[j] += dz * w2[row + j];
            }
        }
        input_grad.iter_mut().for_each(|g| *g = 0.0);
        let w1 = self.w1();
        for j in 0..a.hidden {
            // ReLU derivative taken as 0 at the kink.
            if cache.hidden[j] <= 0.0 {
                continue;
            }
            let dz = hidden_grad[j];
            grads.values[b1_off + j] += dz;
            let row = j * a.input;
            for i in 0..a.input {
                grads.values[row + i] += dz * cache.input[i];
                input_grad[i] += dz * w1[row + i];
            }
        }
    }

    /// `self = tau * source + (1 - tau) * self`, elementwise.
    pub fn soft_update(&mut self, source: &MlpParams, tau: f64) {
        assert_eq!(self.arch, source.arch, "soft update across architectures");
        for (t, s) in self.values.iter_mut().zip(&source.values) {
            *t = tau * s + (1.0 - tau) * *t;
        }
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub t: u64,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    /// `beta1^t` and `beta2^t`, kept as running products so the bias
    /// correction is bitwise reproducible across builds.
    pub beta1_t: f64,
    pub beta2_t: f64,
}

impl AdamState {
    pub fn new(arch: &Architecture, learning_rate: f64) -> Self {
        let n = arch.param_count();
        Self {
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            beta1_t: 1.0,
            beta2_t: 1.0,
        }
    }

    /// One bias-corrected Adam descent step.
    pub fn step(&mut self, params: &mut MlpParams, grads: &Gradients) -> Result<()> {
        if grads.values.len() != params.values.len() {
            return Err(Error::Shape {
                expected: params.values.len(),
                got: grads.values.len(),
            });
        }
        if let Some(i) = grads.values.iter().position(|g| !g.is_finite()) {
            return Err(Error::Numeric(format!("non-finite gradient at parameter {i}")));
        }
        self.t += 1;
        self.beta1_t *= self.beta1;
        self.beta2_t *= self.beta2;
        let c1 = 1.0 - self.beta1_t;
        let c2 = 1.0 - self.beta2_t;
        for (((p, g), m), v) in params
            .values
            .iter_mut()
            .zip(&grads.values)
            .zip(&mut self.m)
            .zip(&mut self.v)
        {
            *m = self.beta1 * *m + (1.0 - self.beta1) * g;
            *v = self.beta2 * *v + (1.0 - self.beta2) * g * g;
            let m_hat = *m / c1;
            let v_hat = *v / c2;
            *p -= self.learning_rate * m_hat / (v_hat.sqrt() + self.epsilon);
        }
        Ok(())
    }
}

const CHECKPOINT_MAGIC: &[u8; 8] = b"CFMLPCK\0";
const CHECKPOINT_VERSION: u32 = 1;

/// Binary checkpoint: magic, version, architecture, then parameters in
/// layout order, all little-endian.
///
/// ```text
/// [0..8)   magic "CFMLPCK\0"
/// [8..12)  version u32 = 1
/// [12..16) input u32   [16..20) hidden u32   [20..24) output u32
/// [24..28) activation u32 (0 linear, 1 tanh-scaled)
/// [28..36) activation bound f64 (0 for linear)
/// [36..44) parameter count u64
/// [44..)   parameters f64
/// ```
pub fn checkpoint_bytes(params: &MlpParams) -> Vec<u8> {
    let a = &params.arch;
    let mut out = Vec::with_capacity(44 + 8 * params.values.len());
    out.extend_from_slice(CHECKPOINT_MAGIC);
    out.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
    for d in [a.input, a.hidden, a.output] {
        out.extend_from_slice(&(d as u32).to_le_bytes());
    }
    let (kind, bound) = match a.activation {
        OutputActivation::Linear => (0u32, 0.0),
        OutputActivation::TanhScaled(b) => (1u32, b),
    };
    out.extend_from_slice(&kind.to_le_bytes());
    out.extend_from_slice(&bound.to_le_bytes());
    out.extend_from_slice(&(params.values.len() as u64).to_le_bytes());
    for v in &params.values {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn params_from_bytes(bytes: &[u8]) -> Result<MlpParams> {
    let bad = |m: &str| Error::Checkpoint(m.to_string());
    if bytes.len() < 44 || &bytes[..8] != CHECKPOINT_MAGIC {
        return Err(bad("not a network checkpoint"));
    }
    let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap());
    let f64_at = |o: usize| f64::from_le_bytes(bytes[o..o + 8].try_into().unwrap());
    let version = u32_at(8);
    if version != CHECKPOINT_VERSION {
        return Err(Error::Checkpoint(format!("unsupported checkpoint version {version}")));
    }
    let activation = match (u32_at(24), f64_at(28)) {
        (0, _) => OutputActivation::Linear,
        (1, b) => OutputActivation::TanhScaled(b),
        (k, _) => return Err(Error::Checkpoint(format!("unknown activation {k}"))),
    };
    let arch = Architecture {
        input: u32_at(12) as usize,
        hidden: u32_at(16) as usize,
        output: u32_at(20) as usize,
        activation,
    };
    let n = u64::from_le_bytes(bytes[36..44].try_into().unwrap()) as usize;
    if n != arch.param_count() || bytes.len() != 44 + 8 * n {
        return Err(bad("parameter count does not match architecture"));
    }
    let values = bytes[44..].chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
    Ok(MlpParams { arch, values })
}

pub fn write_checkpoint(path: &Path, params: &MlpParams) -> Result<()> {
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(&checkpoint_bytes(params)).map_err(|e| Error::io(path, e))
}

pub fn read_checkpoint(path: &Path) -> Result<MlpParams> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    params_from_bytes(&bytes)
}
