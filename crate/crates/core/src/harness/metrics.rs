//! Scalar reductions over error series.

use serde::{Deserialize, Serialize};

pub const SUCCESS_WINDOW: usize = 100;
pub const SUCCESS_FRACTION: f64 = 0.25;

/// Root mean square; `None` for an empty series.
pub fn rms(series: &[f64]) -> Option<f64> {
    if series.is_empty() {
        return None;
    }
    Some((series.iter().map(|e| e * e).sum::<f64>() / series.len() as f64).sqrt())
}

pub fn mean_abs(series: &[f64]) -> Option<f64> {
    if series.is_empty() {
        return None;
    }
    Some(series.iter().map(|e| e.abs()).sum::<f64>() / series.len() as f64)
}

/// Number of steps after which the trailing 100-step mean of `|e|` first
/// drops to a quarter of the reflex baseline. A full window is required, so
/// the earliest possible answer is 100.
pub fn success_step(series: &[f64], reflex_baseline_mean: f64) -> Option<usize> {
    if series.len() < SUCCESS_WINDOW || !(reflex_baseline_mean > 0.0) {
        return None;
    }
    let threshold = SUCCESS_FRACTION * reflex_baseline_mean * SUCCESS_WINDOW as f64;
    let mut sum: f64 = series[..SUCCESS_WINDOW].iter().map(|e| e.abs()).sum();
    if sum <= threshold {
        return Some(SUCCESS_WINDOW);
    }
    for k in SUCCESS_WINDOW..series.len() {
        sum += series[k].abs() - series[k - SUCCESS_WINDOW].abs();
        // the running sum drifts; confirm candidates exactly
        if sum <= threshold * (1.0 + 1e-9) {
            let exact: f64 = series[k + 1 - SUCCESS_WINDOW..=k]
                .iter()
                .map(|e| e.abs())
                .sum();
            sum = exact;
            if exact <= threshold {
                return Some(k + 1);
            }
        }
    }
    None
}

/// Median and quartiles by linear interpolation between order statistics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quartiles {
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
}

pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let t = pos - lo as f64;
    sorted[lo] + t * (sorted[hi] - sorted[lo])
}

pub fn quartiles(values: &[f64]) -> Option<Quartiles> {
    if values.is_empty() || values.iter().any(|v| v.is_nan()) {
        return None;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    Some(Quartiles {
        q1: quantile(&sorted, 0.25),
        median: quantile(&sorted, 0.5),
        q3: quantile(&sorted, 0.75),
    })
}

pub fn median(values: &[f64]) -> Option<f64> {
    quartiles(values).map(|q| q.median)
}

/// Divides a non-negative series by its maximum (all-zero stays zero).
pub fn normalize_by_max(series: &[f64]) -> Vec<f64> {
    let max = series.iter().fold(0.0_f64, |m, &v| m.max(v));
    if max > 0.0 {
        series.iter().map(|v| v / max).collect()
    } else {
        series.to_vec()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rms_values() {
        assert_eq!(rms(&[0.0, 0.0, 0.0]), Some(0.0));
        assert!((rms(&[3.0, 4.0]).unwrap() - 12.5_f64.sqrt()).abs() < 1e-15);
        assert_eq!(rms(&[]), None);
    }

    #[test]
    fn success_edges() {
        assert_eq!(success_step(&[0.0; 300], 0.1), Some(100));
        assert_eq!(success_step(&[0.1; 300], 0.1), None);
        assert_eq!(success_step(&[0.0; 99], 0.1), None);
        assert_eq!(success_step(&[0.0; 300], 0.0), None);
    }

    #[test]
    fn quartile_interpolation() {
        let q = quartiles(&[4.0, 1.0, 3.0, 2.0, 5.0]).unwrap();
        assert_eq!((q.q1, q.median, q.q3), (2.0, 3.0, 4.0));
        assert_eq!(median(&[1.0, 2.0, 3.0, 4.0]), Some(2.5));
        assert_eq!(median(&[]), None);
    }

    #[test]
    fn normalization() {
        assert_eq!(
            normalize_by_max(&[0.0, 1.0, 4.0, 2.0]),
            vec![0.0, 0.25, 1.0, 0.5]
        );
        assert_eq!(normalize_by_max(&[0.0, 0.0]), vec![0.0, 0.0]);
    }
}
