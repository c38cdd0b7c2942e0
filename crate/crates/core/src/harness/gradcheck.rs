//! Finite-difference checks of the learning rule.
//!
//! The network's own forward pass is not trusted here: every numerical
//! derivative goes through [`reference_action`], a plain nested-loop
//! evaluator.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::config::Preset;
use crate::error::Result;
use crate::network::{Activation, LayeredNetwork, LearningSignal, Matrix, NetworkConfig};

pub const GRADIENT_TOLERANCE: f64 = 1e-6;
pub const UPDATE_TOLERANCE: f64 = 1e-5;
pub const PROPAGATION_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GradcheckReport {
    pub nets: usize,
    /// Worst relative error of the internal gradients.
    pub gradient_error: f64,
    /// Worst relative error of the weight update against the cost gradient.
    pub update_error: f64,
    /// Worst relative mismatch of the layer-to-layer error propagation.
    pub propagation_error: f64,
}

impl GradcheckReport {
    pub fn gradient_ok(&self) -> bool {
        self.gradient_error < GRADIENT_TOLERANCE
    }

    pub fn update_ok(&self) -> bool {
        self.update_error < UPDATE_TOLERANCE
    }

    pub fn propagation_ok(&self) -> bool {
        self.propagation_error <= PROPAGATION_TOLERANCE
    }

    pub fn passed(&self) -> bool {
        self.gradient_ok() && self.update_ok() && self.propagation_ok()
    }
}

/// Action of the network described by `weights`, optionally adding `bump`
/// to the activation of neuron `(layer, j)` before it feeds the next layer.
pub fn reference_action(
    weights: &[Matrix],
    gains: &[f64],
    activation: Activation,
    inputs: &[f64],
    bump: Option<(usize, usize, f64)>,
) -> f64 {
    let mut prev = inputs.to_vec();
    for (l, w) in weights.iter().enumerate() {
        let mut next = vec![0.0; w.cols()];
        for (j, out) in next.iter_mut().enumerate() {
            let mut net = 0.0;
            for (i, x) in prev.iter().enumerate() {
                net += w.get(i, j) * x;
            }
            *out = match activation {
                Activation::Linear => net,
                Activation::Tanh => net.tanh(),
            };
            if let Some((bl, bj, d)) = bump {
                if bl == l && bj == j {
                    *out += d;
                }
            }
        }
        prev = next;
    }
    prev.iter().zip(gains).map(|(a, c)| a * c).sum()
}

fn relative(err2: f64, ref2: f64) -> f64 {
    if ref2 > 0.0 {
        (err2 / ref2).sqrt()
    } else {
        err2.sqrt()
    }
}

fn random_network(
    n_inputs: usize,
    cfg: &NetworkConfig,
    rng: &mut ChaCha8Rng,
) -> Result<LayeredNetwork> {
    let mut fan_in = n_inputs;
    let mut weights = Vec::new();
    for &n in &cfg.layers {
        let scale = 1.5 / (fan_in as f64).sqrt();
        let mut w = Matrix::zeros(fan_in, n);
        for i in 0..fan_in {
            for j in 0..n {
                w.set(i, j, rng.random_range(-scale..scale));
            }
        }
        weights.push(w);
        fan_in = n;
    }
    LayeredNetwork::from_weights(weights, cfg.resolved_output_gains()?, cfg.activation)
}

/// Runs all three checks on `nets` random networks shaped like `cfg`.
pub fn check_network(
    n_inputs: usize,
    cfg: &NetworkConfig,
    seed: u64,
    nets: usize,
) -> Result<GradcheckReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = GradcheckReport {
        nets,
        gradient_error: 0.0,
        update_error: 0.0,
        propagation_error: 0.0,
    };
    for _ in 0..nets {
        let mut net = random_network(n_inputs, cfg, &mut rng)?;
        let u: Vec<f64> = (0..n_inputs).map(|_| rng.random_range(-1.0..1.0)).collect();
        let gains = net.output_gains().to_vec();
        let act = net.activation();
        let a_p = net.forward(&u)?;
        net.backward();
        let weights = net.weights().to_vec();

        // internal gradients against bumped activations
        for (l, g) in net.internal_gradients().iter().enumerate() {
            let (mut err2, mut ref2) = (0.0, 0.0);
            for (j, &gj) in g.iter().enumerate() {
                let h = 1e-5;
                let fd = (reference_action(&weights, &gains, act, &u, Some((l, j, h)))
                    - reference_action(&weights, &gains, act, &u, Some((l, j, -h))))
                    / (2.0 * h);
                err2 += (gj - fd).powi(2);
                ref2 += fd * fd;
            }
            report.gradient_error = report.gradient_error.max(relative(err2, ref2));
        }

        // update direction on a unity plant: E = a_d - A_P, cost E^2
        let a_d = a_p + rng.random_range(-1.0..1.0);
        let e = a_d - a_p;
        let sig = LearningSignal::with_gain(e, 1.0);
        net.internal_errors(&sig)?;
        let phi = net.internal_error_values().to_vec();

        for l in 0..weights.len().saturating_sub(1) {
            let w = &weights[l + 1];
            let act_above = &net.activations()[l + 1];
            let (mut err2, mut ref2) = (0.0, 0.0);
            for (i, &p) in phi[l].iter().enumerate() {
                let mut via_above = 0.0;
                for (k, &pk) in phi[l + 1].iter().enumerate() {
                    let slope = match act {
                        Activation::Linear => 1.0,
                        Activation::Tanh => 1.0 - act_above[k] * act_above[k],
                    };
                    via_above += w.get(i, k) * slope * pk;
                }
                err2 += (p - via_above).powi(2);
                ref2 += p * p;
            }
            report.propagation_error = report.propagation_error.max(relative(err2, ref2));
        }

        let deltas = net.update(1.0)?.to_vec();
        let cost = |ws: &[Matrix]| {
            let r = a_d - reference_action(ws, &gains, act, &u, None);
            r * r
        };
        for (l, d) in deltas.iter().enumerate() {
            let (mut err2, mut ref2) = (0.0, 0.0);
            for i in 0..d.rows() {
                for j in 0..d.cols() {
                    let h = 1e-5;
                    let mut plus = weights.clone();
                    plus[l].set(i, j, weights[l].get(i, j) + h);
                    let mut minus = weights.clone();
                    minus[l].set(i, j, weights[l].get(i, j) - h);
                    let descent = -(cost(&plus) - cost(&minus)) / (2.0 * h);
                    err2 += (d.get(i, j) - descent).powi(2);
                    ref2 += descent * descent;
                }
            }
            report.update_error = report.update_error.max(relative(err2, ref2));
        }
    }
    Ok(report)
}

/// The `gradcheck` suite for a preset's network shape.
pub fn gradcheck(preset: Preset, seed: u64) -> Result<GradcheckReport> {
    let cfg = preset.config();
    let n_inputs = cfg.plant.sensors.n_predictors() * cfg.filter.n_taps;
    check_network(n_inputs, &cfg.network, seed, 10)
}
