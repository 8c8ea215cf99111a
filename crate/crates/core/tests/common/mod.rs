#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use xorq::games::{validate, GameMatrix};
use xorq::linalg::{random_hermitian, trace_norm, CMat};

/// Random Hermitian game normalized to trace norm 1; real when `real` is set.
pub fn random_game(seed: u64, n: usize, real: bool) -> GameMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut h = random_hermitian(&mut rng, n * n);
    if real {
        h = h.map(|z| xorq::linalg::c64(z.re, 0.0));
    }
    let t = trace_norm(&h);
    validate(&h.unscale(t), n).expect("normalized")
}

pub fn random_game_any(seed: u64) -> GameMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9);
    let n = if rng.random_bool(0.5) { 2 } else { 3 };
    random_game(seed, n, rng.random_bool(0.3))
}

pub fn max_abs(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}
