//! Shared generators for the integration tests.

use idl_core::loop_algebra::{reflex_transfer, LinearLoopConfig, TransferFunction};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn random_tf(rng: &mut ChaCha8Rng, strictly_proper: bool) -> TransferFunction {
    let order = rng.random_range(0..=2);
    // poles inside radius 0.9
    let den = match order {
        0 => vec![1.0],
        1 => vec![1.0, -rng.random_range(-0.9..0.9)],
        _ => {
            let r: f64 = rng.random_range(0.0..0.9);
            let th: f64 = rng.random_range(0.0..std::f64::consts::PI);
            vec![1.0, -2.0 * r * th.cos(), r * r]
        }
    };
    let mut num: Vec<f64> = (0..=order).map(|_| rng.random_range(-0.8..0.8)).collect();
    if strictly_proper {
        num.insert(0, 0.0);
    }
    TransferFunction::new(num, den).unwrap()
}

/// Random loop whose reflex transfer function is stable.
pub fn random_stable_loop(rng: &mut ChaCha8Rng, n: usize) -> LinearLoopConfig {
    loop {
        let q_proper = rng.random_bool(0.5);
        let q = random_tf(rng, q_proper);
        let h = random_tf(rng, !q_proper);
        let Ok(t) = reflex_transfer(&q, &h) else {
            continue;
        };
        if !t.is_stable() {
            continue;
        }
        let delay = rng.random_range(0..5);
        let s_d = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let d = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        return LinearLoopConfig::new(q, h, delay, s_d, d).unwrap();
    }
}
