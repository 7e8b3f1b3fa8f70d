//! Fast approximate model: per pulse, scatterers are binned into an
//! upsampled delay profile by nearest-bin rounding and one FFT maps the
//! profile to the frequency samples.
//!
//! With `ω_k = ω_c + k′Δω`, `k′ = k − ⌊m/2⌋`, the exact sum factors as
//! `Σᵢ [vᵢ e^{iω_c tᵢ}] e^{i k′Δω tᵢ}`. The carrier term is kept exact per
//! pixel; only the baseband delay `tᵢ` is rounded to the grid
//! `2π/(LΔω)`, `L = upsample·m`, making the baseband sum a length-`L`
//! inverse DFT.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::geometry::{SarGeometry, SceneGrid};
use crate::error::{Error, Result};
use crate::operator::{operator_norm_estimate, CachedNorm, LinearOperator};
use crate::par;

#[derive(Clone)]
pub struct TimeOperator {
    geom: SarGeometry,
    grid: SceneGrid,
    upsample: usize,
    profile_len: usize,
    /// Delay bin per (pulse, pixel), pulse-major.
    bins: Vec<usize>,
    /// `exp(iω_c t)` per (pulse, pixel).
    carrier: Vec<Complex64>,
    amps: Vec<Complex64>,
    inverse: Arc<dyn Fft<f64>>,
    forward: Arc<dyn Fft<f64>>,
    norm: CachedNorm,
}

impl std::fmt::Debug for TimeOperator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("TimeOperator")
            .field("pulses", &self.geom.pulses())
            .field("frequencies", &self.geom.frequencies())
            .field("pixels", &self.grid.len())
            .field("upsample", &self.upsample)
            .finish()
    }
}

impl TimeOperator {
    pub fn new(geom: SarGeometry, grid: SceneGrid, upsample: usize) -> Result<Self> {
        geom.validate()?;
        if upsample == 0 || !upsample.is_power_of_two() {
            return Err(Error::invalid(format!(
                "upsample must be a power of two, got {upsample}"
            )));
        }
        let (w0, dw) = geom.uniform_spacing().ok_or_else(|| {
            Error::Unsupported("time-domain model needs uniformly spaced frequencies".into())
        })?;
        let m = geom.frequencies();
        let profile_len = upsample * m;
        let center = m / 2;
        let wc = w0 + center as f64 * dw;
        let bin_width = if dw == 0.0 {
            f64::INFINITY
        } else {
            2.0 * std::f64::consts::PI / (profile_len as f64 * dw)
        };
        let n = grid.len();
        let c = geom.wave_speed;
        let per: Vec<(usize, Complex64)> = par::map_range(geom.pulses() * n, |idx| {
            let (j, i) = (idx / n, idx % n);
            let t = geom.differential_range(j, &grid.position(i)) / c;
            let b = (t / bin_width).round() as i64;
            (
                b.rem_euclid(profile_len as i64) as usize,
                Complex64::from_polar(1.0, wc * t),
            )
        });
        let (bins, carrier) = per.into_iter().unzip();
        let mut planner = FftPlanner::new();
        let inverse = planner.plan_fft_inverse(profile_len);
        let forward = planner.plan_fft_forward(profile_len);
        let amps = geom.amplitudes();
        Ok(Self {
            geom,
            grid,
            upsample,
            profile_len,
            bins,
            carrier,
            amps,
            inverse,
            forward,
            norm: CachedNorm::default(),
        })
    }

    pub fn upsample(&self) -> usize {
        self.upsample
    }

    pub fn geometry(&self) -> &SarGeometry {
        &self.geom
    }

    pub fn grid(&self) -> &SceneGrid {
        &self.grid
    }

    /// Profile slot holding baseband frequency sample `k`.
    #[inline]
    fn slot(&self, k: usize) -> usize {
        let m = self.geom.frequencies();
        (k + self.profile_len - m / 2) % self.profile_len
    }
}

impl LinearOperator<Complex64> for TimeOperator {
    fn domain_len(&self) -> usize {
        self.grid.len()
    }

    fn range_len(&self) -> usize {
        self.geom.pulses() * self.geom.frequencies()
    }

    fn apply(&self, v: &[Complex64]) -> Vec<Complex64> {
        let (n, m) = (self.grid.len(), self.geom.frequencies());
        let mut out = vec![Complex64::new(0.0, 0.0); self.range_len()];
        par::for_each_chunk(&mut out, m, |j, row| {
            let mut profile = vec![Complex64::new(0.0, 0.0); self.profile_len];
            let bins = &self.bins[j * n..(j + 1) * n];
            let carrier = &self.carrier[j * n..(j + 1) * n];
            for ((vi, &b), cr) in v.iter().zip(bins).zip(carrier) {
                profile[b] += vi * cr;
            }
            self.inverse.process(&mut profile);
            for (k, o) in row.iter_mut().enumerate() {
                *o = self.amps[k] * profile[self.slot(k)];
            }
        });
        out
    }

    fn adjoint(&self, d: &[Complex64]) -> Vec<Complex64> {
        let (n, m, l) = (self.grid.len(), self.geom.frequencies(), self.profile_len);
        let mut spectra = vec![Complex64::new(0.0, 0.0); self.geom.pulses() * l];
        par::for_each_chunk(&mut spectra, l, |j, buf| {
            for k in 0..m {
                buf[self.slot(k)] = self.amps[k].conj() * d[j * m + k];
            }
            self.forward.process(buf);
        });
        par::map_range(n, |i| {
            let mut acc = Complex64::new(0.0, 0.0);
            for j in 0..self.geom.pulses() {
                let idx = j * n + i;
                acc += self.carrier[idx].conj() * spectra[j * l + self.bins[idx]];
            }
            acc
        })
    }

    fn norm_estimate(&self) -> f64 {
        self.norm
            .get_or_compute(|| 1.01 * operator_norm_estimate(self, 40, 0))
    }
}
