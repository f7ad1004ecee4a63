//! Scalar helpers shared by the information modules.

/// Natural logarithm.
#[inline]
pub fn ln(x: f64) -> f64 {
    libm::log(x)
}

#[inline]
pub fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

#[inline]
pub fn abs(x: f64) -> f64 {
    libm::fabs(x)
}

/// `p·ln p` with the `0·ln 0 = 0` convention. No domain check.
#[inline]
pub fn plogp(p: f64) -> f64 {
    if p == 0.0 {
        0.0
    } else {
        p * ln(p)
    }
}

/// `r·ln r − r + 1`, the gap between `φ` and its tangent at 1. Accurate
/// near `r = 1`, where the direct formula cancels.
pub fn xlogx_gap(r: f64) -> f64 {
    let u = r - 1.0;
    if abs(u) < 0.05 {
        // Σ_{n≥2} (−u)^n / (n(n−1)); 16 terms reach double precision.
        let mut term = u * u;
        let mut total = 0.0;
        for n in 2..18 {
            total += term / (n * (n - 1)) as f64;
            term *= -u;
        }
        total
    } else {
        plogp(r) - r + 1.0
    }
}

/// Neumaier compensated sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, value: f64) {
        let t = self.sum + value;
        if abs(self.sum) >= abs(value) {
            self.carry += (self.sum - t) + value;
        } else {
            self.carry += (value - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

impl core::iter::FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = CompensatedSum::new();
        for v in iter {
            acc.add(v);
        }
        acc
    }
}

/// Compensated sum of an iterator.
pub fn sum<I: IntoIterator<Item = f64>>(iter: I) -> f64 {
    iter.into_iter().collect::<CompensatedSum>().value()
}
