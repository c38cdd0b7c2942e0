//! The learning unit: a layered network trained online by the closed-loop
//! error.
//!
//! Forward pass: `act[l][j] = f(sum_i w[l][i][j] * act[l-1][i])`, with the
//! filtered predictors as `act[-1]`. The action is `A_P = sum_k c_k act[L][k]`.
//!
//! Backward pass computes the internal gradients `G[l][j] = dA_P/d act[l][j]`
//! seeded with `G[L][k] = c_k`. The internal error of a neuron is
//! `Phi[l][j] = 2 G[l][j] r`, where `r` is the closed-loop error after it has
//! passed through the reflex-loop transfer function, and each weight moves by
//! the lag-zero correlation `eta * Phi[l][j] * act[l-1][i]`.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::loop_algebra::TransferFunction;

/// Dense row-major matrix; rows index inputs, columns index neurons.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != cols) {
            return Err(Error::shape("matrix row", cols, bad.len()));
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            data: rows.concat(),
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn frobenius_distance(&self, other: &Matrix) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    #[default]
    Linear,
    Tanh,
}

impl Activation {
    #[inline]
    fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Linear => x,
            Activation::Tanh => x.tanh(),
        }
    }

    /// Derivative expressed through the activation value.
    #[inline]
    fn slope(self, y: f64) -> f64 {
        match self {
            Activation::Linear => 1.0,
            Activation::Tanh => 1.0 - y * y,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NetworkConfig {
    /// Neurons per layer, hidden layers first, output layer last.
    pub layers: Vec<usize>,
    /// Weights combining the output neurons into one action. Empty means
    /// the default for the output width.
    pub output_gains: Vec<f64>,
    pub activation: Activation,
    /// Initial weights are uniform in `[-init_range, init_range] / fan_in^init_fan_in_power`.
    pub init_range: f64,
    pub init_fan_in_power: f64,
    /// Per-layer factors on the initial range; missing entries are 1. A
    /// zero layer makes the initial action exactly zero.
    pub init_layer_scales: Vec<f64>,
}

impl Default for NetworkConfig {
    fn default() -> Self {
        Self {
            layers: vec![12, 6, 1],
            output_gains: Vec::new(),
            activation: Activation::Linear,
            init_range: 2.4,
            init_fan_in_power: 0.5,
            init_layer_scales: vec![0.0],
        }
    }
}

impl NetworkConfig {
    pub fn resolved_output_gains(&self) -> Result<Vec<f64>> {
        let outputs = *self
            .layers
            .last()
            .ok_or_else(|| Error::Config("network needs at least one layer".into()))?;
        if !self.output_gains.is_empty() {
            if self.output_gains.len() != outputs {
                return Err(Error::shape(
                    "output gains",
                    outputs,
                    self.output_gains.len(),
                ));
            }
            return Ok(self.output_gains.clone());
        }
        match outputs {
            1 => Ok(vec![1.0]),
            3 => Ok(vec![0.25, 0.5, 1.0]),
            n => Ok(vec![1.0 / n as f64; n]),
        }
    }
}

/// Error sample together with its image under the reflex-loop transfer
/// function, as consumed by [`LayeredNetwork::internal_errors`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LearningSignal {
    pub e_c: f64,
    pub t_r_output: f64,
}

impl LearningSignal {
    /// Signal for a static reflex-loop gain.
    pub fn with_gain(e_c: f64, gain: f64) -> Self {
        Self {
            e_c,
            t_r_output: gain * e_c,
        }
    }

    /// Drives `e_c` through `t_r` (advancing its state) and applies the
    /// error-path sign.
    pub fn through(e_c: f64, t_r: &mut TransferFunction, sign: f64) -> Self {
        Self {
            e_c,
            t_r_output: sign * t_r.step(e_c),
        }
    }
}

#[derive(Debug, Clone)]
pub struct LayeredNetwork {
    weights: Vec<Matrix>,
    init: Vec<Matrix>,
    output_gains: Vec<f64>,
    activation: Activation,
    inputs: Vec<f64>,
    activations: Vec<Vec<f64>>,
    gradients: Vec<Vec<f64>>,
    errors: Vec<Vec<f64>>,
    deltas: Vec<Matrix>,
}

impl LayeredNetwork {
    pub fn new(n_inputs: usize, cfg: &NetworkConfig, seed: u64) -> Result<Self> {
        if n_inputs == 0 || cfg.layers.contains(&0) {
            return Err(Error::Config("layer sizes must be positive".into()));
        }
        let gains = cfg.resolved_output_gains()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut fan_in = n_inputs;
        let mut weights = Vec::with_capacity(cfg.layers.len());
        for (l, &neurons) in cfg.layers.iter().enumerate() {
            let scale = cfg.init_range / (fan_in as f64).powf(cfg.init_fan_in_power)
                * cfg.init_layer_scales.get(l).copied().unwrap_or(1.0);
            let mut w = Matrix::zeros(fan_in, neurons);
            for v in &mut w.data {
                *v = if scale > 0.0 {
                    rng.random_range(-scale..=scale)
                } else {
                    0.0
                };
            }
            weights.push(w);
            fan_in = neurons;
        }
        Self::from_weights(weights, gains, cfg.activation)
    }

    pub fn from_weights(
        weights: Vec<Matrix>,
        output_gains: Vec<f64>,
        activation: Activation,
    ) -> Result<Self> {
        let first = weights
            .first()
            .ok_or_else(|| Error::Config("network needs at least one layer".into()))?;
        for pair in weights.windows(2) {
            if pair[0].cols != pair[1].rows {
                return Err(Error::shape("layer chain", pair[0].cols, pair[1].rows));
            }
        }
        let outputs = weights.last().map_or(0, Matrix::cols);
        if output_gains.len() != outputs {
            return Err(Error::shape("output gains", outputs, output_gains.len()));
        }
        let per_layer: Vec<Vec<f64>> = weights.iter().map(|w| vec![0.0; w.cols]).collect();
        Ok(Self {
            inputs: vec![0.0; first.rows],
            activations: per_layer.clone(),
            gradients: per_layer.clone(),
            errors: per_layer,
            deltas: weights
                .iter()
                .map(|w| Matrix::zeros(w.rows, w.cols))
                .collect(),
            init: weights.clone(),
            weights,
            output_gains,
            activation,
        })
    }

    pub fn n_inputs(&self) -> usize {
        self.weights[0].rows
    }

    pub fn n_layers(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &[Matrix] {
        &self.weights
    }

    pub fn weights_mut(&mut self, layer: usize) -> &mut Matrix {
        &mut self.weights[layer]
    }

    pub fn initial_weights(&self) -> &[Matrix] {
        &self.init
    }

    pub fn output_gains(&self) -> &[f64] {
        &self.output_gains
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn inputs(&self) -> &[f64] {
        &self.inputs
    }

    pub fn activations(&self) -> &[Vec<f64>] {
        &self.activations
    }

    pub fn internal_gradients(&self) -> &[Vec<f64>] {
        &self.gradients
    }

    pub fn internal_error_values(&self) -> &[Vec<f64>] {
        &self.errors
    }

    /// Propagates `u` through all layers and returns the predictive action.
    pub fn forward(&mut self, u: &[f64]) -> Result<f64> {
        if u.len() != self.n_inputs() {
            return Err(Error::shape("network input", self.n_inputs(), u.len()));
        }
        self.inputs.copy_from_slice(u);
        for l in 0..self.weights.len() {
            let (done, rest) = self.activations.split_at_mut(l);
            let prev: &[f64] = if l == 0 { &self.inputs } else { &done[l - 1] };
            let out = &mut rest[0];
            let w = &self.weights[l];
            out.iter_mut().for_each(|x| *x = 0.0);
            for (i, &x) in prev.iter().enumerate() {
                if x == 0.0 {
                    continue;
                }
                for (o, &wij) in out.iter_mut().zip(w.row(i)) {
                    *o += wij * x;
                }
            }
            if self.activation != Activation::Linear {
                out.iter_mut().for_each(|x| *x = self.activation.apply(*x));
            }
        }
        Ok(self.action())
    }

    /// Action from the stored output activations.
    pub fn action(&self) -> f64 {
        let last = self.activations.last().expect("at least one layer");
        last.iter()
            .zip(&self.output_gains)
            .map(|(a, c)| a * c)
            .sum()
    }

    /// Internal gradients `dA_P/d act[l][j]`, output layer seeded with the
    /// output gains.
    pub fn backward(&mut self) -> &[Vec<f64>] {
        let top = self.weights.len() - 1;
        self.gradients[top].copy_from_slice(&self.output_gains);
        for l in (0..top).rev() {
            let (lower, upper) = self.gradients.split_at_mut(l + 1);
            let above = &upper[0];
            let w = &self.weights[l + 1];
            let act_above = &self.activations[l + 1];
            for (j, g) in lower[l].iter_mut().enumerate() {
                *g = w
                    .row(j)
                    .iter()
                    .zip(above)
                    .zip(act_above)
                    .map(|((&wjk, &gk), &ak)| wjk * self.activation.slope(ak) * gk)
                    .sum();
            }
        }
        &self.gradients
    }

    /// `Phi[l][j] = 2 G[l][j] r` with `r` the error after the reflex-loop
    /// transfer function.
    pub fn internal_errors(&mut self, sig: &LearningSignal) -> Result<&[Vec<f64>]> {
        if !sig.e_c.is_finite() || !sig.t_r_output.is_finite() {
            return Err(Error::Signal {
                e_c: sig.e_c,
                t_r_output: sig.t_r_output,
            });
        }
        let drive = 2.0 * sig.t_r_output;
        for (phi, g) in self.errors.iter_mut().zip(&self.gradients) {
            for (p, &gj) in phi.iter_mut().zip(g) {
                *p = drive * gj;
            }
        }
        Ok(&self.errors)
    }

    /// Applies `w[l][i][j] += eta * Phi[l][j] * act[l-1][i]` and returns the
    /// applied deltas. Nothing is applied when any delta is non-finite.
    pub fn update(&mut self, eta: f64) -> Result<&[Matrix]> {
        for l in 0..self.weights.len() {
            let prev: &[f64] = if l == 0 {
                &self.inputs
            } else {
                &self.activations[l - 1]
            };
            let delta = &mut self.deltas[l];
            for (i, &x) in prev.iter().enumerate() {
                for j in 0..delta.cols {
                    let phi = self.errors[l][j] * self.activation.slope(self.activations[l][j]);
                    let d = eta * phi * x;
                    if !d.is_finite() {
                        return Err(Error::Numeric {
                            layer: l,
                            row: i,
                            col: j,
                            delta: d,
                            eta,
                            phi,
                            input: x,
                        });
                    }
                    delta.set(i, j, d);
                }
            }
        }
        for (w, d) in self.weights.iter_mut().zip(&self.deltas) {
            for (wv, dv) in w.data.iter_mut().zip(&d.data) {
                *wv += dv;
            }
        }
        if let Some((l, idx)) = self.weights.iter().enumerate().find_map(|(l, w)| {
            w.data
                .iter()
                .position(|v| !v.is_finite())
                .map(|idx| (l, idx))
        }) {
            let w = &self.weights[l];
            return Err(Error::Numeric {
                layer: l,
                row: idx / w.cols,
                col: idx % w.cols,
                delta: self.deltas[l].data[idx],
                eta,
                phi: f64::NAN,
                input: f64::NAN,
            });
        }
        Ok(&self.deltas)
    }

    /// One full learning step from an already computed forward pass.
    pub fn learn(&mut self, sig: &LearningSignal, eta: f64) -> Result<()> {
        self.backward();
        self.internal_errors(sig)?;
        self.update(eta)?;
        Ok(())
    }

    /// Euclidean distance of each layer's weights from their initial values.
    pub fn weight_distance(&self) -> Vec<f64> {
        self.weights
            .iter()
            .zip(&self.init)
            .map(|(w, w0)| w.frobenius_distance(w0))
            .collect()
    }

    /// `|w[0]|` divided by its maximum; rows follow the input order.
    pub fn first_layer_map(&self) -> Matrix {
        let w = &self.weights[0];
        let max = w.data.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        let mut out = Matrix::zeros(w.rows, w.cols);
        if max > 0.0 {
            for (o, v) in out.data.iter_mut().zip(&w.data) {
                *o = v.abs() / max;
            }
        }
        out
    }

    /// `{ "<layer>": [[row], ...] }`
    pub fn snapshot(&self) -> BTreeMap<String, Vec<Vec<f64>>> {
        self.weights
            .iter()
            .enumerate()
            .map(|(l, w)| (l.to_string(), w.to_rows()))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_by_one(w: f64) -> LayeredNetwork {
        LayeredNetwork::from_weights(
            vec![Matrix::from_rows(&[vec![w]]).unwrap()],
            vec![1.0],
            Activation::Linear,
        )
        .unwrap()
    }

    fn chain(w0: f64, w1: f64) -> LayeredNetwork {
        LayeredNetwork::from_weights(
            vec![
                Matrix::from_rows(&[vec![w0]]).unwrap(),
                Matrix::from_rows(&[vec![w1]]).unwrap(),
            ],
            vec![1.0],
            Activation::Linear,
        )
        .unwrap()
    }

    #[test]
    fn zero_network_outputs_zero() {
        let cfg = NetworkConfig {
            init_range: 0.0,
            ..NetworkConfig::default()
        };
        let mut net = LayeredNetwork::new(40, &cfg, 0).unwrap();
        let u: Vec<f64> = (0..40).map(|i| i as f64 - 3.0).collect();
        assert_eq!(net.forward(&u).unwrap(), 0.0);
    }

    #[test]
    fn scalar_network() {
        let mut net = one_by_one(1.5);
        assert_eq!(net.forward(&[2.0]).unwrap(), 3.0);
        assert!(net.forward(&[2.0, 1.0]).is_err());
    }

    #[test]
    fn seed_gradient_is_output_gain() {
        let mut net = one_by_one(0.3);
        net.forward(&[1.0]).unwrap();
        assert_eq!(net.backward()[0], vec![1.0]);
    }

    #[test]
    fn chain_rule_by_hand() {
        let mut net = chain(0.4, -0.7);
        net.forward(&[1.0]).unwrap();
        let g = net.backward().to_vec();
        assert_eq!(g[0][0], -0.7);
        assert_eq!(g[1][0], 1.0);
    }

    #[test]
    fn internal_error_substitution() {
        let mut net = chain(0.4, -0.7);
        net.forward(&[1.0]).unwrap();
        net.backward();
        let phi = net
            .internal_errors(&LearningSignal::with_gain(0.5, 1.0))
            .unwrap();
        assert_eq!(phi[0][0], -0.7);

        let phi0 = net
            .internal_errors(&LearningSignal::with_gain(0.0, 1.0))
            .unwrap();
        assert!(phi0.iter().flatten().all(|&p| p == 0.0));

        let a = net
            .internal_errors(&LearningSignal::with_gain(0.3, 1.0))
            .unwrap()
            .to_vec();
        let b = net
            .internal_errors(&LearningSignal::with_gain(0.6, 1.0))
            .unwrap()
            .to_vec();
        for (x, y) in a.iter().flatten().zip(b.iter().flatten()) {
            assert_eq!(2.0 * x, *y);
        }
    }

    #[test]
    fn non_finite_signal_is_rejected() {
        let mut net = one_by_one(1.0);
        net.forward(&[1.0]).unwrap();
        net.backward();
        assert!(matches!(
            net.internal_errors(&LearningSignal::with_gain(f64::NAN, 1.0)),
            Err(Error::Signal { .. })
        ));
    }

    #[test]
    fn update_arithmetic() {
        // input 2, Phi = 3, eta = 0.01  =>  delta = 0.06
        let mut net = one_by_one(0.0);
        net.forward(&[2.0]).unwrap();
        net.backward();
        net.internal_errors(&LearningSignal::with_gain(1.5, 1.0))
            .unwrap();
        let d = net.update(0.01).unwrap()[0].get(0, 0);
        assert!((d - 0.06).abs() < 1e-15);
        assert!((net.weights()[0].get(0, 0) - 0.06).abs() < 1e-15);
    }

    #[test]
    fn zero_error_freezes_weights() {
        let mut net = LayeredNetwork::new(10, &NetworkConfig::default(), 3).unwrap();
        let before = net.weights().to_vec();
        for k in 0..50 {
            let u: Vec<f64> = (0..10).map(|i| ((i + k) as f64).sin()).collect();
            net.forward(&u).unwrap();
            net.learn(&LearningSignal::with_gain(0.0, 1.0), 0.1)
                .unwrap();
        }
        assert_eq!(before, net.weights());
    }

    #[test]
    fn numeric_guard_leaves_weights_untouched() {
        let mut net = one_by_one(1.0);
        net.forward(&[1e300]).unwrap();
        net.backward();
        net.internal_errors(&LearningSignal::with_gain(1e300, 1.0))
            .unwrap();
        assert!(matches!(net.update(1.0), Err(Error::Numeric { .. })));
        assert_eq!(net.weights()[0].get(0, 0), 1.0);
    }

    #[test]
    fn distance_and_map() {
        let mut net = one_by_one(0.0);
        assert_eq!(net.weight_distance(), vec![0.0]);
        net.weights_mut(0).set(0, 0, 0.3);
        assert_eq!(net.weight_distance(), vec![0.3]);

        let net = LayeredNetwork::from_weights(
            vec![Matrix::from_rows(&[vec![1.0, -2.0], vec![3.0, 4.0]]).unwrap()],
            vec![1.0, 1.0],
            Activation::Linear,
        )
        .unwrap();
        assert_eq!(
            net.first_layer_map().to_rows(),
            vec![vec![0.25, 0.5], vec![0.75, 1.0]]
        );
        let flat = LayeredNetwork::from_weights(
            vec![Matrix::from_rows(&[vec![0.2, 0.2], vec![-0.2, 0.2]]).unwrap()],
            vec![1.0, 1.0],
            Activation::Linear,
        )
        .unwrap();
        assert!(flat.first_layer_map().as_slice().iter().all(|&v| v == 1.0));
        let zero = LayeredNetwork::from_weights(
            vec![Matrix::zeros(2, 2)],
            vec![1.0, 1.0],
            Activation::Linear,
        )
        .unwrap();
        assert!(zero.first_layer_map().as_slice().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn three_output_head_default_gains() {
        let cfg = NetworkConfig {
            layers: vec![4, 3],
            ..NetworkConfig::default()
        };
        let mut net = LayeredNetwork::new(5, &cfg, 0).unwrap();
        assert_eq!(net.output_gains(), &[0.25, 0.5, 1.0]);
        net.forward(&[1.0; 5]).unwrap();
        assert_eq!(net.backward()[1], vec![0.25, 0.5, 1.0]);
    }

    #[test]
    fn snapshot_is_layer_keyed() {
        let net = chain(0.5, 2.0);
        let json = serde_json::to_string(&net.snapshot()).unwrap();
        assert_eq!(json, r#"{"0":[[0.5]],"1":[[2.0]]}"#);
    }

    #[test]
    fn tanh_backward_matches_finite_difference() {
        let cfg = NetworkConfig {
            layers: vec![3, 2, 1],
            activation: Activation::Tanh,
            init_range: 1.0,
            init_fan_in_power: 0.0,
            ..NetworkConfig::default()
        };
        let mut net = LayeredNetwork::new(4, &cfg, 11).unwrap();
        let u = [0.3, -0.2, 0.5, 0.1];
        net.forward(&u).unwrap();
        net.backward();
        // gradient wrt weight [0][i][j] is G[0][j] * f'(act) * u[i]
        let g = net.internal_gradients()[0].clone();
        let act = net.activations()[0].clone();
        let h = 1e-6;
        for i in 0..4 {
            for j in 0..3 {
                let w = net.weights()[0].get(i, j);
                net.weights_mut(0).set(i, j, w + h);
                let up = net.forward(&u).unwrap();
                net.weights_mut(0).set(i, j, w - h);
                let down = net.forward(&u).unwrap();
                net.weights_mut(0).set(i, j, w);
                let fd = (up - down) / (2.0 * h);
                let analytic = g[j] * (1.0 - act[j] * act[j]) * u[i];
                assert!((fd - analytic).abs() < 1e-8, "{fd} vs {analytic}");
            }
        }
    }
}
