//! Indicator of an elementwise box `[lo, hi]`.

use crate::error::{Error, Result};
use crate::prox::ProxFunction;

const MEMBERSHIP_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct BoxIndicator {
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl BoxIndicator {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.len() != hi.len() {
            return Err(Error::invalid("box bounds differ in length"));
        }
        if lo.iter().zip(&hi).any(|(l, h)| !(l <= h)) {
            return Err(Error::invalid("box needs lo <= hi elementwise"));
        }
        Ok(Self { lo, hi })
    }

    /// Same bounds at every one of `n` coordinates.
    pub fn uniform(n: usize, lo: f64, hi: f64) -> Result<Self> {
        Self::new(vec![lo; n], vec![hi; n])
    }

    /// Membership up to a relative slack of `1e-12`, so that magnitudes
    /// recomputed from complex values still count as inside.
    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.lo.len()
            && x.iter().zip(self.lo.iter().zip(&self.hi)).all(|(v, (l, h))| {
                *v >= l - MEMBERSHIP_SLACK * l.abs().max(1.0) && *v <= h + MEMBERSHIP_SLACK * h.abs().max(1.0)
            })
    }

    fn check(&self, n: usize) -> Result<()> {
        if n != self.lo.len() {
            return Err(Error::invalid(format!(
                "box has {} coordinates, got {n}",
                self.lo.len()
            )));
        }
        Ok(())
    }
}

impl ProxFunction for BoxIndicator {
    fn eval(&self, x: &[f64]) -> f64 {
        if self.contains(x) {
            0.0
        } else {
            f64::INFINITY
        }
    }
    fn prox(&self, x: &[f64], _step: f64) -> Result<Vec<f64>> {
        self.check(x.len())?;
        Ok(x.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .map(|(v, (l, h))| v.clamp(*l, *h))
            .collect())
    }
    fn domain_len(&self) -> Option<usize> {
        Some(self.lo.len())
    }
    fn name(&self) -> &str {
        "box"
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    #[test]
    fn clamps_and_is_idempotent() {
        let b = BoxIndicator::uniform(2, 0.0, 2.0).unwrap();
        assert_eq!(b.prox(&[-1.0, 5.0], 1.0).unwrap(), vec![0.0, 2.0]);
        assert_eq!(b.prox(&[0.5, 1.0], 1.0).unwrap(), vec![0.5, 1.0]);
        assert_eq!(b.eval(&[0.5, 1.0]), 0.0);
        assert_eq!(b.eval(&[0.5, 3.0]), f64::INFINITY);
        let mut g = rng::seeded(1);
        let b = BoxIndicator::uniform(50, 0.0, 0.7).unwrap();
        let x = rng::normal_vec(&mut g, 50);
        let once = b.prox(&x, 1.0).unwrap();
        assert_eq!(b.prox(&once, 1.0).unwrap(), once);
    }

    #[test]
    fn rejects_inverted_bounds() {
        assert!(BoxIndicator::new(vec![1.0], vec![0.0]).is_err());
        assert!(BoxIndicator::new(vec![0.0], vec![]).is_err());
    }
}
