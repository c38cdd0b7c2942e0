use idl_core::filterbank::{
    tap_peaks, FilterBank, FilterBankConfig, LowpassFilter, DEFAULT_DAMPING,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Closed-form impulse response of `b z^-1 / (1 + a1 z^-1 + a2 z^-2)` with
/// complex poles `r e^{±i theta}`: `h[k] = b r^(k-1) sin(k theta) / sin(theta)`.
fn closed_form_impulse(filter: &LowpassFilter, len: usize) -> Vec<f64> {
    let tf = filter.transfer_function();
    let (a1, a2) = (tf.den()[1], tf.den()[2]);
    let b = tf.num()[1];
    let r = a2.sqrt();
    let theta = (-a1 / (2.0 * r)).acos();
    (0..len)
        .map(|k| {
            if k == 0 {
                0.0
            } else {
                b * r.powi(k as i32 - 1) * (k as f64 * theta).sin() / theta.sin()
            }
        })
        .collect()
}

fn argmax(v: &[f64]) -> usize {
    v.iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |(bi, bv), (i, &x)| {
            if x > bv {
                (i, x)
            } else {
                (bi, bv)
            }
        })
        .0
}

#[test]
fn taps_peak_where_requested() {
    for peak in 3..=10 {
        let f = LowpassFilter::new(peak, DEFAULT_DAMPING).unwrap();
        let h = f.impulse_response(200);
        let oracle = closed_form_impulse(&f, 200);
        for (x, y) in h.iter().zip(&oracle) {
            assert!((x - y).abs() < 1e-12);
        }
        let k = argmax(&oracle) as i64;
        assert!((k - peak as i64).abs() <= 1, "peak {peak}: argmax {k}");
    }
}

#[test]
fn taps_have_unit_dc_gain() {
    for peak in 3..=10 {
        let f = LowpassFilter::new(peak, DEFAULT_DAMPING).unwrap();
        let tf = f.transfer_function();
        let dc = tf.num().iter().sum::<f64>() / tf.den().iter().sum::<f64>();
        assert!((dc - 1.0).abs() <= 1e-6, "peak {peak}: dc {dc}");
        // a long step response settles on the same value
        let mut g = f.clone();
        let last = (0..5000).map(|_| g.step(1.0)).last().unwrap();
        assert!((last - 1.0).abs() <= 1e-6);
    }
}

#[test]
fn taps_stay_bounded_for_bounded_input() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for peak in 3..=10 {
        let mut f = LowpassFilter::new(peak, DEFAULT_DAMPING).unwrap();
        let l1: f64 = closed_form_impulse(&f, 20_000)
            .iter()
            .map(|h| h.abs())
            .sum();
        let mut worst: f64 = 0.0;
        for _ in 0..10_000 {
            let y = f.step(rng.random_range(-1.0..1.0));
            assert!(y.is_finite());
            worst = worst.max(y.abs());
        }
        assert!(worst <= l1 + 1e-12, "peak {peak}: {worst} > {l1}");
        assert!(f.transfer_function().is_stable());
    }
}

#[test]
fn tap_peaks_span_the_range() {
    let peaks = tap_peaks(3, 10, 5).unwrap();
    assert_eq!(peaks.first(), Some(&3));
    assert_eq!(peaks.last(), Some(&10));
    assert!(peaks.windows(2).all(|w| w[0] < w[1]));
    assert_eq!(tap_peaks(3, 10, 8).unwrap(), (3..=10).collect::<Vec<_>>());
}

#[test]
fn invalid_filters_rejected() {
    assert!(LowpassFilter::new(1, DEFAULT_DAMPING).is_err());
    assert!(LowpassFilter::new(5, 0.5).is_err());
    assert!(LowpassFilter::new(5, f64::NAN).is_err());
    assert!(tap_peaks(5, 3, 2).is_err());
    assert!(tap_peaks(3, 5, 0).is_err());
}

#[test]
fn bank_layout_is_predictor_major() {
    let cfg = FilterBankConfig::default();
    let mut bank = FilterBank::new(3, &cfg).unwrap();
    assert_eq!(bank.output_len(), 3 * cfg.n_taps);
    let mut single = LowpassFilter::new(bank.filter(1, 2).peak_step(), cfg.damping).unwrap();
    for k in 0..30 {
        let x = if k == 0 { 1.0 } else { 0.0 };
        let out = bank.step(&[0.0, x, 0.0]).unwrap();
        let expected = single.step(x);
        assert_eq!(out[cfg.n_taps + 2], expected);
        assert!(out[..cfg.n_taps].iter().all(|&v| v == 0.0));
        assert!(out[2 * cfg.n_taps..].iter().all(|&v| v == 0.0));
    }
    assert!(bank.step(&[0.0, 1.0]).is_err());
}

proptest! {
    #[test]
    fn filters_are_linear(
        peak in 3usize..=10,
        xs in prop::collection::vec(-1.0f64..1.0, 1..60),
        ys in prop::collection::vec(-1.0f64..1.0, 60),
        k in -2.0f64..2.0,
    ) {
        let f = LowpassFilter::new(peak, DEFAULT_DAMPING).unwrap();
        let (mut fx, mut fy, mut fm) = (f.clone(), f.clone(), f);
        for (x, y) in xs.iter().zip(&ys) {
            let expected = fx.step(*x) + k * fy.step(*y);
            let got = fm.step(x + k * y);
            prop_assert!((got - expected).abs() < 1e-12);
        }
    }
}
