use alloc::format;
use alloc::vec::Vec;

use crate::model::ReceptorModel;
use crate::numeric::{abs, sum};
use crate::{Error, Result};

const MASS_TOL: f64 = 1e-12;

/// IID input law on a finite alphabet of distinct, ascending input levels.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct InputDistribution {
    points: Vec<(f64, f64)>,
}

impl InputDistribution {
    /// Builds a distribution from `(x, p)` pairs. Levels must be finite,
    /// non-negative, distinct and ascending; masses non-negative and summing
    /// to one within 1e-12.
    pub fn new(points: Vec<(f64, f64)>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidDistribution("empty alphabet".into()));
        }
        for w in points.windows(2) {
            if w[0].0.partial_cmp(&w[1].0) != Some(core::cmp::Ordering::Less) {
                return Err(Error::InvalidDistribution(format!(
                    "levels must be distinct and ascending ({} then {})",
                    w[0].0, w[1].0
                )));
            }
        }
        for &(x, p) in &points {
            if !x.is_finite() || x < 0.0 {
                return Err(Error::InvalidDistribution(format!(
                    "level {x} must be finite and >= 0"
                )));
            }
            if !p.is_finite() || p < 0.0 {
                return Err(Error::InvalidDistribution(format!(
                    "mass {p} at level {x} is negative"
                )));
            }
        }
        let total = sum(points.iter().map(|p| p.1));
        if abs(total - 1.0) > MASS_TOL {
            return Err(Error::InvalidDistribution(format!(
                "masses sum to {total}, not 1"
            )));
        }
        Ok(Self { points })
    }

    /// Builds from parallel slices of levels and masses.
    pub fn from_parts(levels: &[f64], masses: &[f64]) -> Result<Self> {
        if levels.len() != masses.len() {
            return Err(Error::InvalidDistribution(
                "levels and masses differ in length".into(),
            ));
        }
        Self::new(levels.iter().copied().zip(masses.iter().copied()).collect())
    }

    /// Two-level input with mass `p_low` on `x_low`.
    pub fn binary(x_low: f64, x_high: f64, p_low: f64) -> Result<Self> {
        Self::new(alloc::vec![(x_low, p_low), (x_high, 1.0 - p_low)])
    }

    pub fn point_mass(x: f64) -> Result<Self> {
        Self::new(alloc::vec![(x, 1.0)])
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    pub fn levels(&self) -> impl Iterator<Item = f64> + '_ {
        self.points.iter().map(|p| p.0)
    }

    pub fn masses(&self) -> impl Iterator<Item = f64> + '_ {
        self.points.iter().map(|p| p.1)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Mean input `x̄ = Σ p(x)·x`.
    pub fn mean(&self) -> f64 {
        sum(self.points.iter().map(|(x, p)| x * p))
    }

    /// Lowest and highest alphabet levels.
    pub fn low(&self) -> f64 {
        self.points[0].0
    }

    pub fn high(&self) -> f64 {
        self.points[self.points.len() - 1].0
    }

    /// Whether every level lies in the model's input range.
    pub fn check_support(&self, model: &ReceptorModel) -> Result<()> {
        let (min, max) = model.input_range();
        for x in self.levels() {
            if !model.contains_input(x) {
                return Err(Error::InputOutOfRange { x, min, max });
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn rejects_bad_inputs() {
        assert!(InputDistribution::new(vec![]).is_err());
        assert!(InputDistribution::new(vec![(1.0, 0.5), (0.0, 0.5)]).is_err());
        assert!(InputDistribution::new(vec![(0.0, 0.5), (0.0, 0.5)]).is_err());
        assert!(InputDistribution::new(vec![(0.0, 0.6), (1.0, 0.5)]).is_err());
        assert!(InputDistribution::new(vec![(0.0, -0.1), (1.0, 1.1)]).is_err());
        assert!(InputDistribution::new(vec![(-1.0, 1.0)]).is_err());
    }

    #[test]
    fn mean_of_binary() {
        let d = InputDistribution::binary(0.0, 1.0, 0.99).unwrap();
        assert!((d.mean() - 0.01).abs() < 1e-16);
        assert_eq!(d.low(), 0.0);
        assert_eq!(d.high(), 1.0);
    }
}
