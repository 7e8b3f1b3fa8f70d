//! Seeded random number generation shared by simulators, tests and suites.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub type SeededRng = ChaCha8Rng;

pub fn seeded(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn normal_vec(rng: &mut SeededRng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()
}

/// Circular complex Gaussian samples with `E|z|^2 = 1`.
pub fn complex_normal_vec(rng: &mut SeededRng, n: usize) -> Vec<Complex64> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    (0..n)
        .map(|_| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            Complex64::new(s * re, s * im)
        })
        .collect()
}

pub fn uniform_phase(rng: &mut SeededRng) -> Complex64 {
    let theta = rng.random_range(-std::f64::consts::PI..std::f64::consts::PI);
    Complex64::from_polar(1.0, theta)
}
