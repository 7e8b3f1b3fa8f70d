//! Exact frequency-domain point-scatterer model `d = Av`.

use num_complex::Complex64;

use super::geometry::{SarGeometry, SceneGrid};
use crate::error::{Error, Result};
use crate::operator::{operator_norm_estimate, CachedNorm, LinearOperator};
use crate::par;

/// `d(j, k) = a(ω_k) Σᵢ vᵢ exp(iω_k Δr(i, j)/c)` with `Δr` the
/// differential two-way range relative to the scene reference.
///
/// Output is pulse-major: entry `j·m + k`.
#[derive(Debug, Clone)]
pub struct FreqOperator {
    geom: SarGeometry,
    grid: SceneGrid,
    /// Differential delay `Δr/c` per (pulse, pixel), pulse-major.
    delays: Vec<f64>,
    amps: Vec<Complex64>,
    spacing: Option<(f64, f64)>,
    norm: CachedNorm,
}

impl FreqOperator {
    pub fn new(geom: SarGeometry, grid: SceneGrid) -> Result<Self> {
        geom.validate()?;
        let n = grid.len();
        let c = geom.wave_speed;
        let delays = par::map_range(geom.pulses() * n, |idx| {
            let (j, i) = (idx / n, idx % n);
            geom.differential_range(j, &grid.position(i)) / c
        });
        let amps = geom.amplitudes();
        let spacing = geom.uniform_spacing();
        Ok(Self {
            geom,
            grid,
            delays,
            amps,
            spacing,
            norm: CachedNorm::default(),
        })
    }

    pub fn geometry(&self) -> &SarGeometry {
        &self.geom
    }

    pub fn grid(&self) -> &SceneGrid {
        &self.grid
    }

    /// Writes `exp(iω_k t)` for every `k` into `out`.
    #[inline]
    fn phasors(&self, t: f64, out: &mut [Complex64]) {
        match self.spacing {
            Some((w0, dw)) => {
                let step = Complex64::from_polar(1.0, dw * t);
                let mut p = Complex64::from_polar(1.0, w0 * t);
                for o in out.iter_mut() {
                    *o = p;
                    p *= step;
                }
            }
            None => {
                for (o, w) in out.iter_mut().zip(&self.geom.omegas) {
                    *o = Complex64::from_polar(1.0, w * t);
                }
            }
        }
    }

    pub fn forward(&self, v: &[Complex64]) -> Result<Vec<Complex64>> {
        if v.len() != self.grid.len() {
            return Err(Error::invalid(format!(
                "scene has {} pixels, got {}",
                self.grid.len(),
                v.len()
            )));
        }
        Ok(self.apply(v))
    }

    pub fn backproject(&self, d: &[Complex64]) -> Result<Vec<Complex64>> {
        if d.len() != self.range_len() {
            return Err(Error::invalid(format!(
                "phase history has {} samples, expected {}",
                d.len(),
                self.range_len()
            )));
        }
        Ok(self.adjoint(d))
    }
}

impl LinearOperator<Complex64> for FreqOperator {
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
            let mut ph = vec![Complex64::new(0.0, 0.0); m];
            let delays = &self.delays[j * n..(j + 1) * n];
            for (vi, &t) in v.iter().zip(delays) {
                if vi.re == 0.0 && vi.im == 0.0 {
                    continue;
                }
                self.phasors(t, &mut ph);
                for (o, p) in row.iter_mut().zip(&ph) {
                    *o += vi * p;
                }
            }
            for (o, a) in row.iter_mut().zip(&self.amps) {
                *o *= a;
            }
        });
        out
    }

    fn adjoint(&self, d: &[Complex64]) -> Vec<Complex64> {
        let (n, m) = (self.grid.len(), self.geom.frequencies());
        let weighted: Vec<Complex64> = d
            .iter()
            .enumerate()
            .map(|(idx, v)| self.amps[idx % m].conj() * v)
            .collect();
        par::map_range(n, |i| {
            let mut ph = vec![Complex64::new(0.0, 0.0); m];
            let mut acc = Complex64::new(0.0, 0.0);
            for j in 0..self.geom.pulses() {
                self.phasors(self.delays[j * n + i], &mut ph);
                let row = &weighted[j * m..(j + 1) * m];
                for (p, w) in ph.iter().zip(row) {
                    acc += p.conj() * w;
                }
            }
            acc
        })
    }

    fn norm_estimate(&self) -> f64 {
        self.norm
            .get_or_compute(|| 1.01 * operator_norm_estimate(self, 40, 0))
    }
}
