//! Bias-corrected Adam.

use super::mlp::{LayerParams, MlpGrads, MlpParams};

#[derive(Clone, Debug)]
pub struct AdamState {
    pub alpha: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub step: u64,
    pub m: Vec<LayerParams>,
    pub v: Vec<LayerParams>,
}

impl AdamState {
    pub fn new(params: &MlpParams, alpha: f64) -> Self {
        Self {
            alpha,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            step: 0,
            m: params.layers.iter().map(LayerParams::zeros_like).collect(),
            v: params.layers.iter().map(LayerParams::zeros_like).collect(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AdamOutcome {
    Applied,
    /// Gradients contained NaN/inf; nothing was touched.
    SkippedNonFinite,
}

/// One descent step. Callers minimizing a loss pass the loss gradient;
/// callers maximizing an objective pass its negation.
pub fn adam_step(
    params: &mut MlpParams,
    grads: &MlpGrads,
    state: &mut AdamState,
) -> AdamOutcome {
    if !grads.is_finite() {
        log::warn!("adam_step: non-finite gradient, update skipped");
        return AdamOutcome::SkippedNonFinite;
    }
    state.step += 1;
    let t = state.step as i32;
    let bc1 = 1.0 - state.beta1.powi(t);
    let bc2 = 1.0 - state.beta2.powi(t);
    let (b1, b2, eps, alpha) = (state.beta1, state.beta2, state.eps, state.alpha);

    for l in 0..params.layers.len() {
        let g = &grads.layers[l];
        let m = &mut state.m[l];
        let v = &mut state.v[l];
        m.w.zip_mut_with(&g.w, |m, &g| *m = b1 * *m + (1.0 - b1) * g);
        m.b.zip_mut_with(&g.b, |m, &g| *m = b1 * *m + (1.0 - b1) * g);
        v.w.zip_mut_with(&g.w, |v, &g| *v = b2 * *v + (1.0 - b2) * g * g);
        v.b.zip_mut_with(&g.b, |v, &g| *v = b2 * *v + (1.0 - b2) * g * g);

        let p = &mut params.layers[l];
        ndarray::Zip::from(&mut p.w)
            .and(&m.w)
            .and(&v.w)
            .for_each(|p, &m, &v| *p -= alpha * (m / bc1) / ((v / bc2).sqrt() + eps));
        ndarray::Zip::from(&mut p.b)
            .and(&m.b)
            .and(&v.b)
            .for_each(|p, &m, &v| *p -= alpha * (m / bc1) / ((v / bc2).sqrt() + eps));
    }
    params.bump_revision();
    AdamOutcome::Applied
}
