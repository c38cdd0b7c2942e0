//! Discrete-time transfer functions and the linear reflex loop.
//!
//! Coefficients are stored in ascending powers of `z^-1`:
//! `H(z) = (b0 + b1 z^-1 + ...) / (a0 + a1 z^-1 + ...)`.
//!
//! The loop simulated here is the inner reflex loop of the learning
//! platform: a delayed disturbance `D z^-T`, the reflex action `A_R` and the
//! predictive action `A_P` are summed into the environment `Q_R`, whose
//! output is the actual state `S_a`. The closed-loop error is
//! `E_c = S_d - S_a` and the reflex controller produces `A_R = H_R(E_c)`.

use nalgebra::{Complex, DMatrix};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Complex64 = Complex<f64>;

/// Rational filter realized in direct-form II transposed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TfCoefficients", into = "TfCoefficients")]
pub struct TransferFunction {
    num: Vec<f64>,
    den: Vec<f64>,
    // normalized by a0, padded to a common length
    b: Vec<f64>,
    a: Vec<f64>,
    state: Vec<f64>,
}

/// Serialized form: `{ "num": [...], "den": [...] }`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TfCoefficients {
    pub num: Vec<f64>,
    pub den: Vec<f64>,
}

impl TryFrom<TfCoefficients> for TransferFunction {
    type Error = Error;

    fn try_from(c: TfCoefficients) -> Result<Self> {
        TransferFunction::new(c.num, c.den)
    }
}

impl From<TransferFunction> for TfCoefficients {
    fn from(tf: TransferFunction) -> Self {
        TfCoefficients {
            num: tf.num,
            den: tf.den,
        }
    }
}

impl TransferFunction {
    pub fn new(num: Vec<f64>, den: Vec<f64>) -> Result<Self> {
        if num.is_empty() || den.is_empty() {
            return Err(Error::Parameter(
                "transfer function needs non-empty num and den".into(),
            ));
        }
        if den[0] == 0.0 {
            return Err(Error::Parameter(
                "leading denominator coefficient a0 must be non-zero".into(),
            ));
        }
        if num.iter().chain(&den).any(|c| !c.is_finite()) {
            return Err(Error::Parameter("non-finite coefficient".into()));
        }
        let n = num.len().max(den.len());
        let a0 = den[0];
        let mut b = vec![0.0; n];
        let mut a = vec![0.0; n];
        for (dst, src) in b.iter_mut().zip(&num) {
            *dst = src / a0;
        }
        for (dst, src) in a.iter_mut().zip(&den) {
            *dst = src / a0;
        }
        Ok(Self {
            num,
            den,
            b,
            a,
            state: vec![0.0; n - 1],
        })
    }

    pub fn gain(k: f64) -> Self {
        Self::new(vec![k], vec![1.0]).expect("finite gain")
    }

    pub fn identity() -> Self {
        Self::gain(1.0)
    }

    /// Pure delay `z^-steps`.
    pub fn delay(steps: usize) -> Self {
        let mut num = vec![0.0; steps + 1];
        num[steps] = 1.0;
        Self::new(num, vec![1.0]).expect("delay is realizable")
    }

    pub fn num(&self) -> &[f64] {
        &self.num
    }

    pub fn den(&self) -> &[f64] {
        &self.den
    }

    /// Direct feedthrough `b0 / a0`: the part of the output that depends on
    /// the current input sample.
    pub fn feedthrough(&self) -> f64 {
        self.b[0]
    }

    /// Output contribution already committed by past samples, i.e. the
    /// output that `step(0.0)` would produce.
    pub fn pending_output(&self) -> f64 {
        self.state.first().copied().unwrap_or(0.0)
    }

    /// True when the block is a constant gain with no memory.
    pub fn is_static(&self) -> bool {
        self.b[1..].iter().all(|&c| c == 0.0) && self.a[1..].iter().all(|&c| c == 0.0)
    }

    pub fn step(&mut self, x: f64) -> f64 {
        let n = self.b.len();
        let y = self.b[0] * x + self.pending_output();
        for i in 0..n - 1 {
            let next = if i + 1 < n - 1 {
                self.state[i + 1]
            } else {
                0.0
            };
            self.state[i] = self.b[i + 1] * x - self.a[i + 1] * y + next;
        }
        y
    }

    pub fn reset(&mut self) {
        self.state.iter_mut().for_each(|s| *s = 0.0);
    }

    /// Filters a whole sequence from the current state.
    pub fn filter(&mut self, xs: &[f64]) -> Vec<f64> {
        xs.iter().map(|&x| self.step(x)).collect()
    }

    /// First `len` samples of the impulse response, computed on a fresh copy.
    pub fn impulse_response(&self, len: usize) -> Vec<f64> {
        let mut tf = self.clone();
        tf.reset();
        (0..len)
            .map(|k| tf.step(if k == 0 { 1.0 } else { 0.0 }))
            .collect()
    }

    pub fn dc_gain(&self) -> f64 {
        self.num.iter().sum::<f64>() / self.den.iter().sum::<f64>()
    }

    /// Poles as roots of `a0 z^n + a1 z^(n-1) + ... + an`, via the
    /// eigenvalues of the companion matrix.
    pub fn poles(&self) -> Vec<Complex64> {
        polynomial_roots(&self.den)
    }

    /// Schur-Cohn step-down test: stable iff every reflection coefficient
    /// has magnitude strictly below one.
    pub fn is_stable(&self) -> bool {
        let mut a: Vec<f64> = trim_trailing(&self.den)
            .iter()
            .map(|c| c / self.den[0])
            .collect();
        while a.len() > 1 {
            let m = a.len() - 1;
            let k = a[m];
            if k.abs() >= 1.0 {
                return false;
            }
            let scale = 1.0 - k * k;
            a = (0..m).map(|i| (a[i] - k * a[m - i]) / scale).collect();
        }
        true
    }

    /// Series connection `self * other`.
    pub fn series(&self, other: &TransferFunction) -> Result<TransferFunction> {
        TransferFunction::new(
            poly_mul(&self.num, &other.num),
            poly_mul(&self.den, &other.den),
        )
    }

    /// Parallel connection `self + other`.
    pub fn parallel(&self, other: &TransferFunction) -> Result<TransferFunction> {
        let num = poly_add(
            &poly_mul(&self.num, &other.den),
            &poly_mul(&other.num, &self.den),
        );
        TransferFunction::new(num, poly_mul(&self.den, &other.den))
    }

    pub fn scaled(&self, k: f64) -> TransferFunction {
        TransferFunction::new(self.num.iter().map(|c| c * k).collect(), self.den.clone())
            .expect("scaling keeps realizability")
    }
}

fn trim_trailing(p: &[f64]) -> &[f64] {
    let end = p.iter().rposition(|&c| c != 0.0).map_or(1, |i| i + 1);
    &p[..end.max(1)]
}

pub fn poly_mul(p: &[f64], q: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; p.len() + q.len() - 1];
    for (i, &pi) in p.iter().enumerate() {
        for (j, &qj) in q.iter().enumerate() {
            out[i + j] += pi * qj;
        }
    }
    out
}

pub fn poly_add(p: &[f64], q: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; p.len().max(q.len())];
    for (i, c) in out.iter_mut().enumerate() {
        *c = p.get(i).copied().unwrap_or(0.0) + q.get(i).copied().unwrap_or(0.0);
    }
    out
}

/// Roots in `z` of `c0 z^n + c1 z^(n-1) + ... + cn` (coefficients in
/// ascending powers of `z^-1`).
pub fn polynomial_roots(coeffs: &[f64]) -> Vec<Complex64> {
    let lead = coeffs.iter().position(|&c| c != 0.0);
    let Some(lead) = lead else {
        return Vec::new();
    };
    let c = trim_trailing(&coeffs[lead..]);
    // trailing zeros are roots at the origin
    let zeros_at_origin = coeffs.len() - lead - c.len();
    let n = c.len() - 1;
    let mut roots = vec![Complex64::new(0.0, 0.0); zeros_at_origin];
    if n == 0 {
        return roots;
    }
    let mut companion = DMatrix::<f64>::zeros(n, n);
    for j in 0..n {
        companion[(0, j)] = -c[j + 1] / c[0];
    }
    for i in 1..n {
        companion[(i, i - 1)] = 1.0;
    }
    roots.extend(companion.complex_eigenvalues().iter().copied());
    roots
}

/// `T_R = -Q_R / (1 + H_R Q_R)`: maps the predictive action onto the
/// closed-loop error.
pub fn reflex_transfer(q_r: &TransferFunction, h_r: &TransferFunction) -> Result<TransferFunction> {
    let num: Vec<f64> = poly_mul(q_r.num(), h_r.den()).iter().map(|c| -c).collect();
    let char_poly = poly_add(
        &poly_mul(q_r.den(), h_r.den()),
        &poly_mul(q_r.num(), h_r.num()),
    );
    if char_poly.iter().all(|&c| c == 0.0) {
        return Err(Error::Composition("1 + H_R Q_R is identically zero".into()));
    }
    if let Some(r) = polynomial_roots(&char_poly)
        .into_iter()
        .find(|r| (r.norm() - 1.0).abs() < 1e-12)
    {
        return Err(Error::Composition(format!(
            "1 + H_R Q_R has a zero on the unit circle at {r}"
        )));
    }
    // leading zeros of the characteristic polynomial cancel against the
    // numerator (common z^-1 factors); strip them so a0 != 0
    let shift = char_poly.iter().position(|&c| c != 0.0).unwrap_or(0);
    if num[..shift.min(num.len())].iter().any(|&c| c != 0.0) {
        return Err(Error::Composition("composed loop is not causal".into()));
    }
    let num = if shift < num.len() {
        num[shift..].to_vec()
    } else {
        vec![0.0]
    };
    TransferFunction::new(num, char_poly[shift..].to_vec())
}

/// Linear reflex loop with its excitation sequences.
#[derive(Debug, Clone)]
pub struct LinearLoopConfig {
    pub q_r: TransferFunction,
    pub h_r: TransferFunction,
    pub delay: usize,
    pub s_d: Vec<f64>,
    pub d: Vec<f64>,
}

/// Per-step signals of a simulated loop.
#[derive(Debug, Clone, Default)]
pub struct LoopTrace {
    pub e_c: Vec<f64>,
    pub a_r: Vec<f64>,
    pub s_a: Vec<f64>,
}

impl LinearLoopConfig {
    pub fn new(
        q_r: TransferFunction,
        h_r: TransferFunction,
        delay: usize,
        s_d: Vec<f64>,
        d: Vec<f64>,
    ) -> Result<Self> {
        if s_d.len() != d.len() {
            return Err(Error::shape("disturbance length", s_d.len(), d.len()));
        }
        Ok(Self {
            q_r,
            h_r,
            delay,
            s_d,
            d,
        })
    }

    pub fn len(&self) -> usize {
        self.s_d.len()
    }

    pub fn is_empty(&self) -> bool {
        self.s_d.is_empty()
    }

    fn check_well_posed(&self) -> Result<()> {
        let q0 = self.q_r.feedthrough();
        let h0 = self.h_r.feedthrough();
        if q0 * h0 == 0.0 {
            return Ok(());
        }
        if !(self.q_r.is_static() && self.h_r.is_static()) {
            return Err(Error::WellPosedness(
                "algebraic loop through dynamic blocks (Q_R and H_R both have direct feedthrough)"
                    .into(),
            ));
        }
        if 1.0 + q0 * h0 == 0.0 {
            return Err(Error::WellPosedness("1 + H_R Q_R = 0".into()));
        }
        Ok(())
    }

    /// Time-steps the block diagram. The error is solved per step from the
    /// feedthrough terms, which is exact when at least one block is strictly
    /// proper or both are static gains.
    pub fn simulate(&self, a_p: &[f64]) -> Result<LoopTrace> {
        if a_p.len() != self.len() {
            return Err(Error::shape(
                "predictive action length",
                self.len(),
                a_p.len(),
            ));
        }
        self.check_well_posed()?;
        let mut q = self.q_r.clone();
        let mut h = self.h_r.clone();
        let mut delay = TransferFunction::delay(self.delay);
        q.reset();
        h.reset();
        let q0 = q.feedthrough();
        let h0 = h.feedthrough();
        let mut trace = LoopTrace::default();
        for k in 0..self.len() {
            let dd = delay.step(self.d[k]);
            let e = (self.s_d[k] - q0 * (dd + h.pending_output() + a_p[k]) - q.pending_output())
                / (1.0 + q0 * h0);
            let a_r = h.step(e);
            let s_a = q.step(dd + a_r + a_p[k]);
            trace.e_c.push(e);
            trace.a_r.push(a_r);
            trace.s_a.push(s_a);
        }
        Ok(trace)
    }
}

/// Closed-loop error `E_c[k]` obtained by time-stepping the loop.
pub fn closed_loop_error(cfg: &LinearLoopConfig, a_p: &[f64]) -> Result<Vec<f64>> {
    Ok(cfg.simulate(a_p)?.e_c)
}

/// Compares the closed-loop error between a desired and an actual action
/// stream against `Q_R` applied to the open-loop error `A_P^d - A_P`.
///
/// Both action streams see the same disturbance and the same reflex action
/// (the one produced by the actual loop), so the state difference isolates
/// the effect of the action. Returns the maximum absolute deviation.
pub fn open_loop_identity_check(
    cfg: &LinearLoopConfig,
    a_p: &[f64],
    a_p_desired: &[f64],
) -> Result<f64> {
    if a_p_desired.len() != a_p.len() {
        return Err(Error::shape(
            "desired action length",
            a_p.len(),
            a_p_desired.len(),
        ));
    }
    let actual = cfg.simulate(a_p)?;
    let mut q = cfg.q_r.clone();
    let mut delay = TransferFunction::delay(cfg.delay);
    q.reset();
    let mut q_open = cfg.q_r.clone();
    q_open.reset();
    let mut max_dev: f64 = 0.0;
    for k in 0..cfg.len() {
        let dd = delay.step(cfg.d[k]);
        let s_desired = q.step(dd + actual.a_r[k] + a_p_desired[k]);
        let e_c = s_desired - actual.s_a[k];
        let q_e_o = q_open.step(a_p_desired[k] - a_p[k]);
        max_dev = max_dev.max((e_c - q_e_o).abs());
    }
    Ok(max_dev)
}
