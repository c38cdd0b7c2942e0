//! Second-order low-pass filter bank that spreads each predictor over time.
//!
//! Every tap is a near-critically damped resonator obtained by impulse
//! invariance from `w^2 / (s^2 + (w/Q) s + w^2)` with unit sample time. The
//! natural frequency is chosen so that the continuous impulse response peaks
//! exactly on the requested sample, and the discrete filter is normalized to
//! unity DC gain.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::loop_algebra::TransferFunction;

pub const DEFAULT_DAMPING: f64 = 0.51;

#[derive(Debug, Clone, PartialEq)]
pub struct LowpassFilter {
    peak_step: usize,
    damping: f64,
    tf: TransferFunction,
}

impl LowpassFilter {
    pub fn new(peak_step: usize, damping: f64) -> Result<Self> {
        if peak_step < 2 {
            return Err(Error::Parameter(format!(
                "peak_step must be at least 2, got {peak_step}"
            )));
        }
        if !(damping > 0.5) || !damping.is_finite() {
            return Err(Error::Parameter(format!(
                "damping (Q) must be finite and above 0.5, got {damping}"
            )));
        }
        let zeta = 1.0 / (2.0 * damping);
        let root = (1.0 - zeta * zeta).sqrt();
        // continuous peak time t* = atan(root / zeta) / (w_n root)
        let w_n = (root / zeta).atan() / (root * peak_step as f64);
        let r = (-zeta * w_n).exp();
        let theta = w_n * root;
        let a1 = -2.0 * r * theta.cos();
        let a2 = r * r;
        let tf = TransferFunction::new(vec![0.0, 1.0 + a1 + a2], vec![1.0, a1, a2])?;
        Ok(Self {
            peak_step,
            damping,
            tf,
        })
    }

    pub fn peak_step(&self) -> usize {
        self.peak_step
    }

    pub fn damping(&self) -> f64 {
        self.damping
    }

    pub fn transfer_function(&self) -> &TransferFunction {
        &self.tf
    }

    #[inline]
    pub fn step(&mut self, x: f64) -> f64 {
        self.tf.step(x)
    }

    pub fn reset(&mut self) {
        self.tf.reset();
    }

    pub fn impulse_response(&self, len: usize) -> Vec<f64> {
        self.tf.impulse_response(len)
    }

    /// Upper bound on the peak output for inputs bounded by one: the l1 norm
    /// of the impulse response, accumulated until the tail is negligible.
    pub fn gain_bound(&self) -> f64 {
        let len = 200 * self.peak_step;
        self.impulse_response(len).iter().map(|h| h.abs()).sum()
    }
}

/// `n` integer peak steps spread evenly over `[lo, hi]`, strictly increasing.
pub fn tap_peaks(lo: usize, hi: usize, n: usize) -> Result<Vec<usize>> {
    if n == 0 {
        return Err(Error::Parameter("n_taps must be positive".into()));
    }
    if lo > hi {
        return Err(Error::Parameter(format!(
            "peak_min {lo} exceeds peak_max {hi}"
        )));
    }
    let mut peaks = Vec::with_capacity(n);
    for i in 0..n {
        let t = if n == 1 {
            0.0
        } else {
            i as f64 / (n - 1) as f64
        };
        let mut p = (lo as f64 + t * (hi - lo) as f64).round() as usize;
        if let Some(&prev) = peaks.last() {
            p = p.max(prev + 1);
        }
        peaks.push(p);
    }
    Ok(peaks)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FilterBankConfig {
    pub n_taps: usize,
    pub peak_min: usize,
    pub peak_max: usize,
    pub damping: f64,
}

impl Default for FilterBankConfig {
    fn default() -> Self {
        Self {
            n_taps: 5,
            peak_min: 3,
            peak_max: 10,
            damping: DEFAULT_DAMPING,
        }
    }
}

/// One independent low-pass per (predictor, tap) pair. Outputs are laid out
/// predictor-major: `index = predictor * n_taps + tap`.
#[derive(Debug, Clone)]
pub struct FilterBank {
    filters: Vec<LowpassFilter>,
    n_predictors: usize,
    n_taps: usize,
}

impl FilterBank {
    pub fn new(n_predictors: usize, cfg: &FilterBankConfig) -> Result<Self> {
        let peaks = tap_peaks(cfg.peak_min, cfg.peak_max, cfg.n_taps)?;
        let taps = peaks
            .iter()
            .map(|&p| LowpassFilter::new(p, cfg.damping))
            .collect::<Result<Vec<_>>>()?;
        let filters = (0..n_predictors)
            .flat_map(|_| taps.iter().cloned())
            .collect();
        Ok(Self {
            filters,
            n_predictors,
            n_taps: cfg.n_taps,
        })
    }

    pub fn n_predictors(&self) -> usize {
        self.n_predictors
    }

    pub fn n_taps(&self) -> usize {
        self.n_taps
    }

    pub fn output_len(&self) -> usize {
        self.n_predictors * self.n_taps
    }

    pub fn filter(&self, predictor: usize, tap: usize) -> &LowpassFilter {
        &self.filters[predictor * self.n_taps + tap]
    }

    pub fn step_into(&mut self, p: &[f64], out: &mut [f64]) -> Result<()> {
        if p.len() != self.n_predictors {
            return Err(Error::shape("predictor vector", self.n_predictors, p.len()));
        }
        if out.len() != self.output_len() {
            return Err(Error::shape(
                "filter bank output",
                self.output_len(),
                out.len(),
            ));
        }
        for (i, &x) in p.iter().enumerate() {
            let base = i * self.n_taps;
            for t in 0..self.n_taps {
                out[base + t] = self.filters[base + t].step(x);
            }
        }
        Ok(())
    }

    pub fn step(&mut self, p: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.output_len()];
        self.step_into(p, &mut out)?;
        Ok(out)
    }

    pub fn reset(&mut self) {
        self.filters.iter_mut().for_each(LowpassFilter::reset);
    }
}
