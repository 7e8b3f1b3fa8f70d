//! Derivative-free reference solver for `prox_{τH(|·|)}` on tiny inputs.
//!
//! Minimizes `H(|y|) + ‖y − z‖²/(2τ)` over complex `y` directly, as `2n`
//! real unknowns, with a multi-start adaptive pattern search. It never
//! calls `H`'s prox, so it is independent of [`super::magnitude_lift`].

use num_complex::Complex64;
use rand::Rng;

use super::ProxFunction;
use crate::error::{Error, Result};
use crate::image::ComplexImage;
use crate::rng;

pub const MAX_ORACLE_PIXELS: usize = 16;
const MAX_LINE_STEPS: usize = 40;

#[derive(Debug, Clone, Copy)]
pub struct OracleConfig {
    pub restarts: usize,
    /// Sweeps per restart.
    pub iters: usize,
    pub seed: u64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self {
            restarts: 8,
            iters: 2000,
            seed: 0x5eed,
        }
    }
}

/// Objective `H(|y|) + ‖y − z‖²/(2τ)` used by the oracle and by tests that
/// compare candidate solutions.
pub fn lift_objective<P: ProxFunction + ?Sized>(
    h: &P,
    y: &[Complex64],
    z: &[Complex64],
    step: f64,
) -> f64 {
    let mags: Vec<f64> = y.iter().map(|v| v.norm()).collect();
    let fit: f64 = y.iter().zip(z).map(|(a, b)| (a - b).norm_sqr()).sum();
    h.eval(&mags) + fit / (2.0 * step)
}

fn to_complex(v: &[f64]) -> Vec<Complex64> {
    v.chunks_exact(2).map(|c| Complex64::new(c[0], c[1])).collect()
}

pub fn brute_force_prox_oracle<P: ProxFunction + ?Sized>(
    h: &P,
    z: &ComplexImage,
    step: f64,
    cfg: &OracleConfig,
) -> Result<ComplexImage> {
    let n = z.len();
    if n > MAX_ORACLE_PIXELS {
        return Err(Error::invalid(format!(
            "oracle limited to {MAX_ORACLE_PIXELS} pixels, got {n}"
        )));
    }
    if !(step > 0.0) {
        return Err(Error::invalid("oracle step must be positive"));
    }
    let zc = z.data();
    let objective = |v: &[f64]| lift_objective(h, &to_complex(v), zc, step);
    let dim = 2 * n;
    let scale = zc.iter().map(|v| v.norm()).fold(1.0, f64::max);

    let mut g = rng::seeded(cfg.seed);
    let mut best: Vec<f64> = zc.iter().flat_map(|v| [v.re, v.im]).collect();
    let mut best_f = objective(&best);

    // fixed direction set: coordinates plus pairwise sums/differences
    let mut dirs: Vec<Vec<f64>> = Vec::new();
    for i in 0..dim {
        let mut d = vec![0.0; dim];
        d[i] = 1.0;
        dirs.push(d);
    }
    if dim <= 16 {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        for i in 0..dim {
            for j in i + 1..dim {
                for sign in [1.0, -1.0] {
                    let mut d = vec![0.0; dim];
                    d[i] = s;
                    d[j] = sign * s;
                    dirs.push(d);
                }
            }
        }
    }

    for restart in 0..cfg.restarts.max(1) {
        let mut x: Vec<f64> = match restart {
            0 => zc.iter().flat_map(|v| [v.re, v.im]).collect(),
            1 => vec![0.0; dim],
            _ => zc
                .iter()
                .flat_map(|v| {
                    let s = g.random_range(0.0..1.0);
                    let p = rng::uniform_phase(&mut g) * 0.1 * scale;
                    let w = v * s + p;
                    [w.re, w.im]
                })
                .collect(),
        };
        let mut fx = objective(&x);
        if !fx.is_finite() {
            // indicator domains: fall back to the best feasible point so far
            x = best.clone();
            fx = best_f;
        }
        let mut h_step = 0.5 * scale;
        let mut sweeps = 0;
        let mut misses = 0;
        while h_step > 1e-13 && sweeps < cfg.iters {
            sweeps += 1;
            let mut improved = false;
            let random: Vec<Vec<f64>> = (0..dim)
                .map(|_| {
                    let v = rng::normal_vec(&mut g, dim);
                    let nv = v.iter().map(|a| a * a).sum::<f64>().sqrt().max(1e-300);
                    v.into_iter().map(|a| a / nv).collect()
                })
                .collect();
            for d in dirs.iter().chain(random.iter()) {
                for sign in [1.0, -1.0] {
                    // keep stepping while it helps, doubling the stride
                    let mut stride = h_step;
                    for _ in 0..MAX_LINE_STEPS {
                        let trial: Vec<f64> = x.iter().zip(d).map(|(a, b)| a + sign * stride * b).collect();
                        let ft = objective(&trial);
                        if ft < fx {
                            x = trial;
                            fx = ft;
                            improved = true;
                            stride *= 2.0;
                        } else {
                            break;
                        }
                    }
                }
            }
            if improved {
                misses = 0;
            } else {
                // fresh random directions get a few tries before shrinking
                misses += 1;
                if misses >= 4 {
                    h_step *= 0.5;
                    misses = 0;
                }
            }
        }
        if fx < best_f {
            best_f = fx;
            best = x;
        }
    }
    ComplexImage::new(z.shape(), to_complex(&best))
}
