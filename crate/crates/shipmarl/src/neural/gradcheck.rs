//! Central finite-difference gradient checking.
//!
//! The checker never calls the network's own forward pass for its
//! reference values: it carries a naive scalar re-implementation, so both
//! the forward outputs and the analytic backward pass are compared
//! against an independent computation.

use ndarray::Array2;

use super::mlp::{GumbelCtx, HeadKind, MlpParams};
use crate::channels::gumbel;

/// Outcome of one gradient check.
#[derive(Clone, Copy, Debug, Default)]
pub struct GradCheckReport {
    pub max_param_rel_err: f64,
    pub max_input_rel_err: f64,
    pub forward_abs_err: f64,
    pub params_checked: usize,
    /// Smallest |pre-activation| seen on a hidden unit. Finite differences
    /// step across the ReLU kink when this is below the FD step size.
    pub min_hidden_preact: f64,
}

fn rel_err(a: f64, n: f64) -> f64 {
    (a - n).abs() / (a.abs() + n.abs()).max(1e-8)
}

/// Scalar forward pass, independent of the ndarray implementation.
/// Returns the output slots and the minimum |pre-activation| over hidden
/// units.
fn naive_forward(
    net: &MlpParams,
    input: &[f64],
    noise: Option<&[f64]>,
    temperature: f64,
) -> (Vec<f64>, f64) {
    let n_layers = net.layers.len();
    let mut act = input.to_vec();
    let mut min_pre = f64::INFINITY;
    for (l, layer) in net.layers.iter().enumerate() {
        let out_dim = layer.b.len();
        let mut z = vec![0.0; out_dim];
        for (j, zj) in z.iter_mut().enumerate() {
            let mut s = layer.b[j];
            for (i, &a) in act.iter().enumerate() {
                s += a * layer.w[(i, j)];
            }
            *zj = s;
        }
        if l + 1 < n_layers {
            for zj in &mut z {
                min_pre = min_pre.min(zj.abs());
                *zj = zj.max(0.0);
            }
        }
        act = z;
    }

    let mut out = Vec::with_capacity(net.output_slots());
    let mut raw_off = 0;
    let mut noise_off = 0;
    for seg in &net.heads {
        match seg.kind {
            HeadKind::Identity => {
                out.extend_from_slice(&act[raw_off..raw_off + seg.slots]);
            }
            HeadKind::Bounded { lo, hi } => {
                let c = 0.5 * (lo + hi);
                let h = 0.5 * (hi - lo);
                for s in 0..seg.slots {
                    out.push(c + h * act[raw_off + s].tanh());
                }
            }
            HeadKind::GumbelBits => {
                for bit in 0..seg.slots {
                    let (g0, g1) = match noise {
                        Some(n) => (n[noise_off + 2 * bit], n[noise_off + 2 * bit + 1]),
                        None => (0.0, 0.0),
                    };
                    out.push(gumbel::relaxed_bit(
                        act[raw_off + 2 * bit],
                        act[raw_off + 2 * bit + 1],
                        g0,
                        g1,
                        temperature,
                    ));
                }
                noise_off += 2 * seg.slots;
            }
        }
        raw_off += seg.raw_width();
    }
    (out, min_pre)
}

fn naive_loss(
    net: &MlpParams,
    input: &[f64],
    weights: &[f64],
    noise: Option<&[f64]>,
    temperature: f64,
) -> f64 {
    let (y, _) = naive_forward(net, input, noise, temperature);
    y.iter().zip(weights).map(|(a, b)| a * b).sum()
}

/// Checks every parameter gradient and every input gradient of `net`
/// against central finite differences of the scalar loss
/// `L = sum_i weights[i] * y_i`, step size `h`.
///
/// Gumbel heads are evaluated on their relaxed (differentiable) path with
/// the provided noise held fixed.
pub fn check_gradients(
    net: &MlpParams,
    input: &[f64],
    weights: &[f64],
    noise: Option<&[f64]>,
    temperature: f64,
    h: f64,
) -> GradCheckReport {
    let gumbel_noise = noise.map(|n| {
        Array2::from_shape_vec((1, n.len()), n.to_vec()).expect("noise row vector")
    });
    let ctx = GumbelCtx {
        temperature,
        noise: gumbel_noise.as_ref(),
        hard: false,
    };

    let (y, cache) = net.forward_with(input, &ctx).expect("forward");
    let (naive_y, min_pre) = naive_forward(net, input, noise, temperature);
    let forward_abs_err = y
        .iter()
        .zip(&naive_y)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let (grads, d_input) = net.backward(&cache, weights).expect("backward");

    let mut report = GradCheckReport {
        min_hidden_preact: min_pre,
        forward_abs_err,
        ..Default::default()
    };

    let mut probe = net.clone();
    for l in 0..net.layers.len() {
        for idx in 0..net.layers[l].w.len() {
            let (r, c) = (idx / net.layers[l].w.ncols(), idx % net.layers[l].w.ncols());
            let orig = probe.layers[l].w[(r, c)];
            probe.layers[l].w[(r, c)] = orig + h;
            let plus = naive_loss(&probe, input, weights, noise, temperature);
            probe.layers[l].w[(r, c)] = orig - h;
            let minus = naive_loss(&probe, input, weights, noise, temperature);
            probe.layers[l].w[(r, c)] = orig;
            let fd = (plus - minus) / (2.0 * h);
            report.max_param_rel_err = report
                .max_param_rel_err
                .max(rel_err(grads.layers[l].w[(r, c)], fd));
            report.params_checked += 1;
        }
        for j in 0..net.layers[l].b.len() {
            let orig = probe.layers[l].b[j];
            probe.layers[l].b[j] = orig + h;
            let plus = naive_loss(&probe, input, weights, noise, temperature);
            probe.layers[l].b[j] = orig - h;
            let minus = naive_loss(&probe, input, weights, noise, temperature);
            probe.layers[l].b[j] = orig;
            let fd = (plus - minus) / (2.0 * h);
            report.max_param_rel_err = report
                .max_param_rel_err
                .max(rel_err(grads.layers[l].b[j], fd));
            report.params_checked += 1;
        }
    }

    let mut x = input.to_vec();
    for i in 0..x.len() {
        let orig = x[i];
        x[i] = orig + h;
        let plus = naive_loss(net, &x, weights, noise, temperature);
        x[i] = orig - h;
        let minus = naive_loss(net, &x, weights, noise, temperature);
        x[i] = orig;
        let fd = (plus - minus) / (2.0 * h);
        report.max_input_rel_err = report.max_input_rel_err.max(rel_err(d_input[i], fd));
    }
    report
}

/// Like [`check_gradients`] but probes a random sample of parameter
/// coordinates instead of all of them; every input gradient is still
/// checked. Keeps wide networks affordable.
pub fn check_gradients_sampled<R: rand::Rng>(
    net: &MlpParams,
    input: &[f64],
    weights: &[f64],
    noise: Option<&[f64]>,
    temperature: f64,
    h: f64,
    samples: usize,
    rng: &mut R,
) -> GradCheckReport {
    let gumbel_noise = noise.map(|n| {
        Array2::from_shape_vec((1, n.len()), n.to_vec()).expect("noise row vector")
    });
    let ctx = GumbelCtx {
        temperature,
        noise: gumbel_noise.as_ref(),
        hard: false,
    };
    let (y, cache) = net.forward_with(input, &ctx).expect("forward");
    let (naive_y, min_pre) = naive_forward(net, input, noise, temperature);
    let forward_abs_err = y
        .iter()
        .zip(&naive_y)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let (grads, d_input) = net.backward(&cache, weights).expect("backward");

    let mut report = GradCheckReport {
        min_hidden_preact: min_pre,
        forward_abs_err,
        ..Default::default()
    };

    let mut probe = net.clone();
    for _ in 0..samples {
        let l = rng.random_range(0..net.layers.len());
        let w_len = net.layers[l].w.len();
        let b_len = net.layers[l].b.len();
        let coord = rng.random_range(0..w_len + b_len);
        let (analytic, fd) = if coord < w_len {
            let (r, c) = (coord / net.layers[l].w.ncols(), coord % net.layers[l].w.ncols());
            let orig = probe.layers[l].w[(r, c)];
            probe.layers[l].w[(r, c)] = orig + h;
            let plus = naive_loss(&probe, input, weights, noise, temperature);
            probe.layers[l].w[(r, c)] = orig - h;
            let minus = naive_loss(&probe, input, weights, noise, temperature);
            probe.layers[l].w[(r, c)] = orig;
            (grads.layers[l].w[(r, c)], (plus - minus) / (2.0 * h))
        } else {
            let j = coord - w_len;
            let orig = probe.layers[l].b[j];
            probe.layers[l].b[j] = orig + h;
            let plus = naive_loss(&probe, input, weights, noise, temperature);
            probe.layers[l].b[j] = orig - h;
            let minus = naive_loss(&probe, input, weights, noise, temperature);
            probe.layers[l].b[j] = orig;
            (grads.layers[l].b[j], (plus - minus) / (2.0 * h))
        };
        report.max_param_rel_err = report.max_param_rel_err.max(rel_err(analytic, fd));
        report.params_checked += 1;
    }

    let mut x = input.to_vec();
    for i in 0..x.len() {
        let orig = x[i];
        x[i] = orig + h;
        let plus = naive_loss(net, &x, weights, noise, temperature);
        x[i] = orig - h;
        let minus = naive_loss(net, &x, weights, noise, temperature);
        x[i] = orig;
        let fd = (plus - minus) / (2.0 * h);
        report.max_input_rel_err = report.max_input_rel_err.max(rel_err(d_input[i], fd));
    }
    report
}

/// Draws a (net, input) pair whose hidden pre-activations clear `margin`,
/// so finite differences cannot straddle the ReLU kink.
pub fn sample_well_conditioned_case<R: rand::Rng>(
    rng: &mut R,
    input_dim: usize,
    hidden: &[usize],
    heads: Vec<super::mlp::HeadSegment>,
    margin: f64,
) -> (MlpParams, Vec<f64>) {
    loop {
        let net = MlpParams::new(input_dim, hidden, heads.clone(), rng).expect("net shapes");
        let x: Vec<f64> = (0..input_dim).map(|_| rng.random_range(-1.5..1.5)).collect();
        let (_, min_pre) = naive_forward(&net, &x, None, 1.0);
        if min_pre > margin {
            return (net, x);
        }
    }
}
