//! Multi-bang penalty snapping values to a finite admissible set.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::prox::ProxFunction;

/// Strictly increasing admissible values `a₀ < a₁ < … < a_k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct MultiBangLevels {
    levels: Vec<f64>,
}

impl MultiBangLevels {
    pub fn new(levels: Vec<f64>) -> Result<Self> {
        if levels.len() < 2 {
            return Err(Error::invalid("multi-bang needs at least two levels"));
        }
        if levels.iter().any(|v| !v.is_finite()) || levels.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid("multi-bang levels must be finite and strictly increasing"));
        }
        Ok(Self { levels })
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    /// `m(x) = (a_{i+1} − x)(x − a_i)` on `[a_i, a_{i+1}]`, `+∞` outside `[a₀, a_k]`.
    pub fn penalty(&self, x: f64) -> f64 {
        let a = &self.levels;
        if !(x >= a[0] && x <= a[a.len() - 1]) {
            return f64::INFINITY;
        }
        let i = a.partition_point(|&v| v <= x).clamp(1, a.len() - 1) - 1;
        (a[i + 1] - x) * (x - a[i])
    }

    /// Prox of `γ·m` at a scalar.
    pub fn prox_scalar(&self, x: f64, gamma: f64) -> f64 {
        let a = &self.levels;
        let k = a.len() - 1;
        if x <= a[0] + gamma * (a[1] - a[0]) {
            return a[0];
        }
        if x >= a[k] - gamma * (a[k] - a[k - 1]) {
            return a[k];
        }
        for i in 0..k {
            let upper = a[i] + gamma * (a[i + 1] - a[i]);
            let lower_next = a[i + 1] - gamma * (a[i + 1] - a[i]);
            if x <= upper {
                return a[i];
            }
            if x < lower_next {
                return (x - gamma * (a[i] + a[i + 1])) / (1.0 - 2.0 * gamma);
            }
        }
        a[k]
    }
}

impl TryFrom<Vec<f64>> for MultiBangLevels {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<MultiBangLevels> for Vec<f64> {
    fn from(l: MultiBangLevels) -> Self {
        l.levels
    }
}

fn check_gamma(gamma: f64) -> Result<()> {
    if gamma > 0.0 && gamma < 0.5 {
        Ok(())
    } else {
        Err(Error::invalid(format!(
            "multi-bang step must lie in (0, 1/2), got {gamma}"
        )))
    }
}

/// Coordinatewise prox of `γ·Σ m(x_j)`: snap to `a_i` on
/// `[a_i − γ(a_i − a_{i−1}), a_i + γ(a_{i+1} − a_i)]`, interpolate linearly
/// with slope `1/(1 − 2γ)` between snap regions.
pub fn multibang_prox(x: &[f64], levels: &MultiBangLevels, gamma: f64) -> Result<Vec<f64>> {
    check_gamma(gamma)?;
    Ok(x.iter().map(|&v| levels.prox_scalar(v, gamma)).collect())
}

/// Nonconvex: the prox is exact per coordinate but the penalty is concave
/// between levels.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiBang {
    pub levels: MultiBangLevels,
}

impl ProxFunction for MultiBang {
    fn eval(&self, x: &[f64]) -> f64 {
        x.iter().map(|&v| self.levels.penalty(v)).sum()
    }
    fn prox(&self, x: &[f64], step: f64) -> Result<Vec<f64>> {
        multibang_prox(x, &self.levels, step)
    }
    fn domain_len(&self) -> Option<usize> {
        None
    }
    fn is_convex(&self) -> bool {
        false
    }
    fn name(&self) -> &str {
        "multibang"
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn grid_min(l: &MultiBangLevels, x: f64, gamma: f64, h: f64) -> f64 {
        let a = l.levels();
        let n = ((a[a.len() - 1] - a[0]) / h).round() as usize;
        (0..=n)
            .map(|i| a[0] + i as f64 * h)
            .map(|y| (y, gamma * l.penalty(y) + 0.5 * (y - x).powi(2)))
            .min_by(|p, q| p.1.total_cmp(&q.1))
            .unwrap()
            .0
    }

    #[test]
    fn hand_case_snaps_to_zero() {
        let l = MultiBangLevels::new(vec![0.0, 1.0]).unwrap();
        assert_eq!(multibang_prox(&[0.2], &l, 0.25).unwrap(), vec![0.0]);
        assert_eq!(grid_min(&l, 0.2, 0.25, 1e-4), 0.0);
    }

    #[test]
    fn levels_are_fixed_points() {
        let l = MultiBangLevels::new(vec![0.0, 0.5, 1.0, 3.0]).unwrap();
        let x = multibang_prox(l.levels(), &l, 0.3).unwrap();
        assert_eq!(x, l.levels());
    }

    #[test]
    fn rejects_bad_inputs() {
        let l = MultiBangLevels::new(vec![0.0, 1.0]).unwrap();
        assert!(multibang_prox(&[0.1], &l, 0.5).is_err());
        assert!(multibang_prox(&[0.1], &l, 0.0).is_err());
        assert!(MultiBangLevels::new(vec![1.0, 1.0]).is_err());
        assert!(MultiBangLevels::new(vec![1.0]).is_err());
        assert!(serde_json::from_str::<MultiBangLevels>("[2.0, 1.0]").is_err());
    }

    #[test]
    fn map_is_continuous_across_branches() {
        let l = MultiBangLevels::new(vec![0.0, 0.5, 1.0]).unwrap();
        let g = 0.25;
        let mut prev = l.prox_scalar(-1.0, g);
        let mut x = -1.0;
        while x < 2.0 {
            x += 1e-5;
            let y = l.prox_scalar(x, g);
            assert!(y >= prev && y - prev < 1e-4);
            prev = y;
        }
    }

    proptest! {
        #[test]
        fn agrees_with_grid_search(x in -0.5f64..1.5, gi in 0usize..3) {
            let gamma = [0.1, 0.25, 0.4][gi];
            let l = MultiBangLevels::new(vec![0.0, 0.5, 1.0]).unwrap();
            let y = l.prox_scalar(x, gamma);
            prop_assert!((y - grid_min(&l, x, gamma, 1e-4)).abs() <= 2e-4);
        }

        #[test]
        fn nonnegative_levels_keep_orthant(x in 0.0f64..10.0, gamma in 0.01f64..0.49) {
            let l = MultiBangLevels::new(vec![0.0, 0.3, 2.0]).unwrap();
            prop_assert!(l.prox_scalar(x, gamma) >= 0.0);
        }
    }
}
