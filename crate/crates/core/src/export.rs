//! Image previews and quality metrics.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::image::ComplexImage;

/// Default display window in dB relative to the peak magnitude.
pub const DEFAULT_DB_WINDOW: (f64, f64) = (-31.0, -6.0);

/// Maps `20·log10(|z|/peak)` clipped to `[lo, hi]` onto `0..=255` by
/// `round(255·(v − lo)/(hi − lo))`. Zero samples map to 0.
pub fn mag_db_gray(z: &[Complex64], window: (f64, f64)) -> Result<Vec<u8>> {
    let (lo, hi) = window;
    if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::invalid(format!("bad dB window [{lo}, {hi}]")));
    }
    let peak = z.iter().map(|v| v.norm()).fold(0.0, f64::max);
    Ok(z.iter()
        .map(|v| {
            let m = v.norm();
            if peak == 0.0 || m == 0.0 {
                return 0;
            }
            let db = (20.0 * (m / peak).log10()).clamp(lo, hi);
            (255.0 * (db - lo) / (hi - lo)).round() as u8
        })
        .collect())
}

/// Cyclic hue map of the phase: `[−π, π)` goes once round the colour
/// wheel, starting and ending at red.
pub fn phase_rgb(z: &[Complex64]) -> Vec<[u8; 3]> {
    z.iter().map(|v| hue_rgb((v.arg() + PI) / (2.0 * PI))).collect()
}

fn hue_rgb(h: f64) -> [u8; 3] {
    let h6 = (h.rem_euclid(1.0)) * 6.0;
    let f = h6 - h6.floor();
    let (r, g, b) = match h6.floor() as u32 {
        0 => (1.0, f, 0.0),
        1 => (1.0 - f, 1.0, 0.0),
        2 => (0.0, 1.0, f),
        3 => (0.0, 1.0 - f, 1.0),
        4 => (f, 0.0, 1.0),
        _ => (1.0, 0.0, 1.0 - f),
    };
    let q = |c: f64| (255.0 * c).round() as u8;
    [q(r), q(g), q(b)]
}

/// `z₁·conj(z₂)`, whose argument is the phase difference.
pub fn phase_difference(a: &ComplexImage, b: &ComplexImage) -> Result<ComplexImage> {
    if a.shape() != b.shape() {
        return Err(Error::invalid(format!(
            "phase difference of shapes {} and {}",
            a.shape(),
            b.shape()
        )));
    }
    let d = a.data().iter().zip(b.data()).map(|(x, y)| x * y.conj()).collect();
    ComplexImage::new(a.shape(), d)
}

/// Binary PGM (P5) bytes.
pub fn encode_pgm(width: usize, height: usize, gray: &[u8]) -> Result<Vec<u8>> {
    if gray.len() != width * height {
        return Err(Error::invalid("pixel count does not match PGM size"));
    }
    let mut out = format!("P5\n{width} {height}\n255\n").into_bytes();
    out.extend_from_slice(gray);
    Ok(out)
}

/// `10·log10(peak²/MSE)` with `peak = max(truth)`.
pub fn psnr(estimate: &[f64], truth: &[f64]) -> f64 {
    let peak = truth.iter().copied().fold(0.0, f64::max);
    let mse = estimate
        .iter()
        .zip(truth)
        .map(|(a, b)| (a - b).powi(2))
        .sum::<f64>()
        / truth.len().max(1) as f64;
    10.0 * (peak * peak / mse).log10()
}

/// Least-squares gain `s` minimizing `‖s·estimate − truth‖`.
pub fn best_gain(estimate: &[f64], truth: &[f64]) -> f64 {
    let num: f64 = estimate.iter().zip(truth).map(|(a, b)| a * b).sum();
    let den: f64 = estimate.iter().map(|a| a * a).sum();
    if den > 0.0 {
        num / den
    } else {
        0.0
    }
}

/// PSNR after applying [`best_gain`], which removes the arbitrary overall
/// scale of estimates such as a backprojection.
pub fn psnr_gain_matched(estimate: &[f64], truth: &[f64]) -> f64 {
    let s = best_gain(estimate, truth);
    let scaled: Vec<f64> = estimate.iter().map(|a| a * s).collect();
    psnr(&scaled, truth)
}
