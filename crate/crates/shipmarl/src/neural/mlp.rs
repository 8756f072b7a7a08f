//! Dense networks with hand-written forward/backward passes.
//!
//! Hidden layers are ReLU. The final linear layer feeds one or more output
//! heads: `Identity` (critics), `Bounded` (scaled tanh onto an action
//! range) or `GumbelBits` (two logits per transmitted bit, relaxed with
//! Gumbel-Softmax so gradients can flow through discrete messages).
//!
//! `backward` returns gradients for every parameter *and* for the input
//! vector; the input gradient is what lets a critic push its
//! action-gradient through an actor.

use ndarray::{Array1, Array2, Axis};
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::channels::gumbel;

#[derive(Debug, Error)]
pub enum NeuralError {
    #[error("shape mismatch: expected {expected}, got {got} ({context})")]
    ShapeMismatch {
        expected: usize,
        got: usize,
        context: &'static str,
    },
    #[error("cache does not match current parameters (revision {cache_rev} vs {param_rev})")]
    StaleCache { cache_rev: u64, param_rev: u64 },
    #[error("temperature must be > 0, got {0}")]
    BadTemperature(f64),
    #[error("head segments cover {covered} raw outputs but the final layer has {raw}")]
    HeadCoverage { covered: usize, raw: usize },
}

/// Weight matrix is `[input, output]`; also reused as the gradient holder.
#[derive(Clone, Debug)]
pub struct LayerParams {
    pub w: Array2<f64>,
    pub b: Array1<f64>,
}

impl LayerParams {
    pub fn zeros_like(other: &LayerParams) -> Self {
        Self {
            w: Array2::zeros(other.w.raw_dim()),
            b: Array1::zeros(other.b.raw_dim()),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.w.iter().all(|v| v.is_finite()) && self.b.iter().all(|v| v.is_finite())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum HeadKind {
    /// Raw linear output.
    Identity,
    /// `lo + (hi - lo) * (tanh(z) + 1) / 2`, exactly the action range.
    Bounded { lo: f64, hi: f64 },
    /// Two logits per output slot; the slot value is a Gumbel-Softmax bit.
    GumbelBits,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HeadSegment {
    pub kind: HeadKind,
    pub slots: usize,
}

impl HeadSegment {
    pub fn identity(slots: usize) -> Self {
        Self {
            kind: HeadKind::Identity,
            slots,
        }
    }

    pub fn bounded(lo: f64, hi: f64, slots: usize) -> Self {
        Self {
            kind: HeadKind::Bounded { lo, hi },
            slots,
        }
    }

    pub fn gumbel_bits(bits: usize) -> Self {
        Self {
            kind: HeadKind::GumbelBits,
            slots: bits,
        }
    }

    /// Width consumed from the final linear layer.
    pub fn raw_width(&self) -> usize {
        match self.kind {
            HeadKind::GumbelBits => 2 * self.slots,
            _ => self.slots,
        }
    }
}

/// How Gumbel heads behave during a forward pass.
///
/// `noise` rows must match the batch; columns cover two Gumbel draws per
/// bit, in head order. With `noise: None` the relaxation is evaluated at
/// zero noise, which makes the pass deterministic (greedy bits when
/// `hard`).
#[derive(Clone, Copy, Debug)]
pub struct GumbelCtx<'a> {
    pub temperature: f64,
    pub noise: Option<&'a Array2<f64>>,
    /// Straight-through: emit exact 0/1 in the forward value while the
    /// cached relaxed value drives the backward pass.
    pub hard: bool,
}

impl GumbelCtx<'static> {
    pub fn greedy() -> Self {
        Self {
            temperature: 1.0,
            noise: None,
            hard: true,
        }
    }
}

#[derive(Clone, Debug)]
enum HeadBack {
    Identity,
    Bounded { tanh: Array2<f64>, half: f64 },
    Gumbel { p1: Array2<f64>, temperature: f64 },
}

/// Everything `backward` needs from the matching `forward` call.
#[derive(Clone, Debug)]
pub struct BatchCache {
    revision: u64,
    x: Array2<f64>,
    hidden: Vec<Array2<f64>>,
    heads: Vec<HeadBack>,
}

impl BatchCache {
    pub fn batch_len(&self) -> usize {
        self.x.nrows()
    }
}

/// Gradients in the same layout as [`MlpParams::layers`].
#[derive(Clone, Debug)]
pub struct MlpGrads {
    pub layers: Vec<LayerParams>,
}

impl MlpGrads {
    pub fn zeros_like(params: &MlpParams) -> Self {
        Self {
            layers: params.layers.iter().map(LayerParams::zeros_like).collect(),
        }
    }

    pub fn scale(&mut self, factor: f64) {
        for layer in &mut self.layers {
            layer.w.mapv_inplace(|v| v * factor);
            layer.b.mapv_inplace(|v| v * factor);
        }
    }

    pub fn is_finite(&self) -> bool {
        self.layers.iter().all(LayerParams::is_finite)
    }
}

#[derive(Clone, Debug)]
pub struct MlpParams {
    pub layers: Vec<LayerParams>,
    pub heads: Vec<HeadSegment>,
    revision: u64,
}

impl MlpParams {
    /// Fan-in uniform init on every layer.
    pub fn new<R: Rng>(
        input: usize,
        hidden: &[usize],
        heads: Vec<HeadSegment>,
        rng: &mut R,
    ) -> Result<Self, NeuralError> {
        Self::with_final_scale(input, hidden, heads, 1.0, rng)
    }

    /// Fan-in init with the final layer shrunk by 1e-3: fresh policies
    /// start near the middle of their action ranges.
    pub fn new_policy<R: Rng>(
        input: usize,
        hidden: &[usize],
        heads: Vec<HeadSegment>,
        rng: &mut R,
    ) -> Result<Self, NeuralError> {
        Self::with_final_scale(input, hidden, heads, 1e-3, rng)
    }

    fn with_final_scale<R: Rng>(
        input: usize,
        hidden: &[usize],
        heads: Vec<HeadSegment>,
        final_scale: f64,
        rng: &mut R,
    ) -> Result<Self, NeuralError> {
        let raw: usize = heads.iter().map(HeadSegment::raw_width).sum();
        let mut dims = vec![input];
        dims.extend_from_slice(hidden);
        dims.push(raw);

        let n_layers = dims.len() - 1;
        let mut layers = Vec::with_capacity(n_layers);
        for l in 0..n_layers {
            let (fan_in, fan_out) = (dims[l], dims[l + 1]);
            let bound = 1.0 / (fan_in as f64).sqrt();
            let scale = if l == n_layers - 1 { final_scale } else { 1.0 };
            let w = Array2::from_shape_fn((fan_in, fan_out), |_| {
                scale * rng.random_range(-bound..bound)
            });
            let b = Array1::from_shape_fn(fan_out, |_| scale * rng.random_range(-bound..bound));
            layers.push(LayerParams { w, b });
        }
        let params = Self {
            layers,
            heads,
            revision: 0,
        };
        params.check_head_coverage()?;
        Ok(params)
    }

    /// Rebuilds a network from explicit layers, e.g. out of a checkpoint.
    pub fn from_parts(
        layers: Vec<LayerParams>,
        heads: Vec<HeadSegment>,
    ) -> Result<Self, NeuralError> {
        let params = Self {
            layers,
            heads,
            revision: 0,
        };
        params.check_head_coverage()?;
        Ok(params)
    }

    fn check_head_coverage(&self) -> Result<(), NeuralError> {
        let covered: usize = self.heads.iter().map(HeadSegment::raw_width).sum();
        let raw = self.layers.last().map(|l| l.b.len()).unwrap_or(0);
        if covered != raw {
            return Err(NeuralError::HeadCoverage { covered, raw });
        }
        Ok(())
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].w.nrows()
    }

    /// Number of values the head layer emits (bits count once).
    pub fn output_slots(&self) -> usize {
        self.heads.iter().map(|h| h.slots).sum()
    }

    /// Total Gumbel noise width required per sample (two draws per bit).
    pub fn gumbel_noise_width(&self) -> usize {
        self.heads
            .iter()
            .filter(|h| matches!(h.kind, HeadKind::GumbelBits))
            .map(|h| 2 * h.slots)
            .sum()
    }

    pub fn revision(&self) -> u64 {
        self.revision
    }

    pub(crate) fn bump_revision(&mut self) {
        self.revision = self.revision.wrapping_add(1);
    }

    pub fn parameter_count(&self) -> usize {
        self.layers.iter().map(|l| l.w.len() + l.b.len()).sum()
    }

    /// Deterministic forward pass on one input vector.
    pub fn forward(&self, input: &[f64]) -> Result<(Vec<f64>, BatchCache), NeuralError> {
        self.forward_with(input, &GumbelCtx::greedy())
    }

    pub fn forward_with(
        &self,
        input: &[f64],
        gumbel: &GumbelCtx,
    ) -> Result<(Vec<f64>, BatchCache), NeuralError> {
        let x = Array2::from_shape_vec((1, input.len()), input.to_vec())
            .expect("row vector shape");
        let (y, cache) = self.forward_batch_with(&x, gumbel)?;
        Ok((y.row(0).to_vec(), cache))
    }

    pub fn forward_batch(
        &self,
        x: &Array2<f64>,
    ) -> Result<(Array2<f64>, BatchCache), NeuralError> {
        self.forward_batch_with(x, &GumbelCtx::greedy())
    }

    pub fn forward_batch_with(
        &self,
        x: &Array2<f64>,
        gumbel: &GumbelCtx,
    ) -> Result<(Array2<f64>, BatchCache), NeuralError> {
        if x.ncols() != self.input_dim() {
            return Err(NeuralError::ShapeMismatch {
                expected: self.input_dim(),
                got: x.ncols(),
                context: "forward input",
            });
        }
        if gumbel.temperature <= 0.0 {
            return Err(NeuralError::BadTemperature(gumbel.temperature));
        }
        if let Some(noise) = gumbel.noise {
            let want = self.gumbel_noise_width();
            if noise.ncols() != want || noise.nrows() != x.nrows() {
                return Err(NeuralError::ShapeMismatch {
                    expected: want,
                    got: noise.ncols(),
                    context: "gumbel noise",
                });
            }
        }

        let n_layers = self.layers.len();
        let mut hidden = Vec::with_capacity(n_layers.saturating_sub(1));
        let mut act = x.clone();
        for (l, layer) in self.layers.iter().enumerate() {
            let mut z = act.dot(&layer.w) + &layer.b;
            if l + 1 < n_layers {
                z.mapv_inplace(|v| v.max(0.0));
                hidden.push(z.clone());
                act = z;
            } else {
                act = z;
            }
        }
        let raw = act;

        let batch = x.nrows();
        let mut out = Array2::zeros((batch, self.output_slots()));
        let mut heads = Vec::with_capacity(self.heads.len());
        let mut raw_off = 0;
        let mut slot_off = 0;
        let mut noise_off = 0;
        for seg in &self.heads {
            match seg.kind {
                HeadKind::Identity => {
                    out.slice_mut(ndarray::s![.., slot_off..slot_off + seg.slots])
                        .assign(&raw.slice(ndarray::s![.., raw_off..raw_off + seg.slots]));
                    heads.push(HeadBack::Identity);
                }
                HeadKind::Bounded { lo, hi } => {
                    let center = 0.5 * (lo + hi);
                    let half = 0.5 * (hi - lo);
                    let t = raw
                        .slice(ndarray::s![.., raw_off..raw_off + seg.slots])
                        .mapv(f64::tanh);
                    out.slice_mut(ndarray::s![.., slot_off..slot_off + seg.slots])
                        .assign(&t.mapv(|v| center + half * v));
                    heads.push(HeadBack::Bounded { tanh: t, half });
                }
                HeadKind::GumbelBits => {
                    let mut p1 = Array2::zeros((batch, seg.slots));
                    for row in 0..batch {
                        for bit in 0..seg.slots {
                            let z0 = raw[(row, raw_off + 2 * bit)];
                            let z1 = raw[(row, raw_off + 2 * bit + 1)];
                            let (g0, g1) = match gumbel.noise {
                                Some(noise) => (
                                    noise[(row, noise_off + 2 * bit)],
                                    noise[(row, noise_off + 2 * bit + 1)],
                                ),
                                None => (0.0, 0.0),
                            };
                            let p = gumbel::relaxed_bit(z0, z1, g0, g1, gumbel.temperature);
                            p1[(row, bit)] = p;
                            out[(row, slot_off + bit)] =
                                if gumbel.hard { f64::from(p > 0.5) } else { p };
                        }
                    }
                    noise_off += 2 * seg.slots;
                    heads.push(HeadBack::Gumbel {
                        p1,
                        temperature: gumbel.temperature,
                    });
                }
            }
            raw_off += seg.raw_width();
            slot_off += seg.slots;
        }

        let cache = BatchCache {
            revision: self.revision,
            x: x.clone(),
            hidden,
            heads,
        };
        Ok((out, cache))
    }

    pub fn backward(
        &self,
        cache: &BatchCache,
        d_out: &[f64],
    ) -> Result<(MlpGrads, Vec<f64>), NeuralError> {
        let d = Array2::from_shape_vec((1, d_out.len()), d_out.to_vec())
            .expect("row vector shape");
        let (grads, dx) = self.backward_batch(cache, &d)?;
        Ok((grads, dx.row(0).to_vec()))
    }

    /// Exact gradients for all parameters plus the input, given
    /// `d_out = dL/dy` per sample. Parameter gradients are summed over the
    /// batch; divide by the batch size upstream for a mean loss.
    pub fn backward_batch(
        &self,
        cache: &BatchCache,
        d_out: &Array2<f64>,
    ) -> Result<(MlpGrads, Array2<f64>), NeuralError> {
        if cache.revision != self.revision {
            return Err(NeuralError::StaleCache {
                cache_rev: cache.revision,
                param_rev: self.revision,
            });
        }
        if d_out.ncols() != self.output_slots() {
            return Err(NeuralError::ShapeMismatch {
                expected: self.output_slots(),
                got: d_out.ncols(),
                context: "backward output gradient",
            });
        }
        if d_out.nrows() != cache.x.nrows() {
            return Err(NeuralError::ShapeMismatch {
                expected: cache.x.nrows(),
                got: d_out.nrows(),
                context: "backward batch length",
            });
        }

        // Heads: slot gradients -> raw-layer gradients.
        let batch = cache.x.nrows();
        let raw_width: usize = self.heads.iter().map(HeadSegment::raw_width).sum();
        let mut d_raw = Array2::zeros((batch, raw_width));
        let mut raw_off = 0;
        let mut slot_off = 0;
        for (seg, back) in self.heads.iter().zip(&cache.heads) {
            let d_slot = d_out.slice(ndarray::s![.., slot_off..slot_off + seg.slots]);
            match back {
                HeadBack::Identity => {
                    d_raw
                        .slice_mut(ndarray::s![.., raw_off..raw_off + seg.slots])
                        .assign(&d_slot);
                }
                HeadBack::Bounded { tanh, half } => {
                    let d = &d_slot.to_owned() * &tanh.mapv(|t| half * (1.0 - t * t));
                    d_raw
                        .slice_mut(ndarray::s![.., raw_off..raw_off + seg.slots])
                        .assign(&d);
                }
                HeadBack::Gumbel { p1, temperature } => {
                    for row in 0..batch {
                        for bit in 0..seg.slots {
                            let p = p1[(row, bit)];
                            let g = d_slot[(row, bit)] * p * (1.0 - p) / temperature;
                            d_raw[(row, raw_off + 2 * bit)] = -g;
                            d_raw[(row, raw_off + 2 * bit + 1)] = g;
                        }
                    }
                }
            }
            raw_off += seg.raw_width();
            slot_off += seg.slots;
        }

        // Dense layers, last to first.
        let mut grads = MlpGrads::zeros_like(self);
        let mut delta = d_raw;
        for l in (0..self.layers.len()).rev() {
            let act_in = if l == 0 { &cache.x } else { &cache.hidden[l - 1] };
            grads.layers[l].w = act_in.t().dot(&delta);
            grads.layers[l].b = delta.sum_axis(Axis(0));
            let mut d_prev = delta.dot(&self.layers[l].w.t());
            if l > 0 {
                // ReLU mask: the stored activation is max(0, z).
                d_prev
                    .zip_mut_with(&cache.hidden[l - 1], |d, &a| *d *= f64::from(a > 0.0));
            }
            delta = d_prev;
        }
        Ok((grads, delta))
    }
}

/// Elementwise `target = tau * main + (1 - tau) * target`.
pub fn soft_update(main: &MlpParams, target: &mut MlpParams, tau: f64) {
    for (m, t) in main.layers.iter().zip(&mut target.layers) {
        t.w.zip_mut_with(&m.w, |t, &m| *t = tau * m + (1.0 - tau) * *t);
        t.b.zip_mut_with(&m.b, |t, &m| *t = tau * m + (1.0 - tau) * *t);
    }
    target.bump_revision();
}
