use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Normal};
use std::f64::consts::PI;

use crate::{Error, Result};

/// Dense-grid resolution for the density-ratio supremum.
pub const PROP1_GRID_POINTS: usize = 20_001;
/// Minimum mass each density must keep inside the truncation window.
pub const PROP1_MIN_MASS: f64 = 1.0 - 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Gaussian {
    pub mean: f64,
    pub variance: f64,
}

impl Gaussian {
    pub fn new(mean: f64, variance: f64) -> Result<Self> {
        if !(variance > 0.0) || !variance.is_finite() || !mean.is_finite() {
            return Err(Error::InvalidArgument(format!("invalid Gaussian N({mean}, {variance})")));
        }
        Ok(Self { mean, variance })
    }

    fn ln_pdf(&self, y: f64) -> f64 {
        -0.5 * (y - self.mean).powi(2) / self.variance - 0.5 * (2.0 * PI * self.variance).ln()
    }

    fn mass_within(&self, trunc: f64) -> f64 {
        let n = Normal::new(self.mean, self.variance.sqrt()).expect("validated");
        n.cdf(trunc) - n.cdf(-trunc)
    }
}

/// `E|Y|` for `Y ~ N(m, v)` (folded-normal mean).
pub fn expected_abs(g: &Gaussian) -> f64 {
    let s = g.variance.sqrt();
    let std = Normal::new(0.0, 1.0).expect("unit normal");
    s * (2.0 / PI).sqrt() * (-g.mean * g.mean / (2.0 * g.variance)).exp() + g.mean * (1.0 - 2.0 * std.cdf(-g.mean / s))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Prop1Report {
    /// `E_p|Y|`
    pub c: f64,
    /// `sup |π*/p − 1|` over the truncation window.
    pub epsilon: f64,
    /// Squared difference of the two means.
    pub bias_sq: f64,
    /// `ε² C²`
    pub bound: f64,
    pub holds: bool,
}

/// Checks `(E_π*[Y] − E_p[Y])² ≤ ε² (E_p|Y|)²` for two Gaussian predictive
/// densities.
///
/// The ratio of two Gaussians with unequal variances is unbounded on the real
/// line, so `ε` is the supremum over `[−trunc, trunc]` only. The check is
/// refused unless both densities keep at least [`PROP1_MIN_MASS`] of their
/// mass in that window.
pub fn prop1_check(pi_star: Gaussian, p: Gaussian, trunc: f64) -> Result<Prop1Report> {
    if !(trunc > 0.0) || !trunc.is_finite() {
        return Err(Error::InvalidArgument(format!("truncation must be positive, got {trunc}")));
    }
    let mass = pi_star.mass_within(trunc).min(p.mass_within(trunc));
    if mass < PROP1_MIN_MASS {
        return Err(Error::TruncationMass { trunc, mass });
    }
    let step = 2.0 * trunc / (PROP1_GRID_POINTS - 1) as f64;
    let epsilon = (0..PROP1_GRID_POINTS)
        .map(|i| {
            let y = if i + 1 == PROP1_GRID_POINTS { trunc } else { -trunc + i as f64 * step };
            (pi_star.ln_pdf(y) - p.ln_pdf(y)).exp_m1().abs()
        })
        .fold(0.0, f64::max);
    let c = expected_abs(&p);
    let bias_sq = (pi_star.mean - p.mean).powi(2);
    let bound = epsilon * epsilon * c * c;
    Ok(Prop1Report { c, epsilon, bias_sq, bound, holds: bias_sq <= bound })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::derive_rng;
    use approx::assert_relative_eq;
    use rand::Rng;

    #[test]
    fn identical_densities() {
        let g = Gaussian::new(0.3, 2.0).unwrap();
        let r = prop1_check(g, g, 12.0).unwrap();
        assert_eq!(r.epsilon, 0.0);
        assert_eq!(r.bias_sq, 0.0);
        assert!(r.holds);
    }

    #[test]
    fn shifted_unit_gaussians() {
        let r = prop1_check(Gaussian::new(0.1, 1.0).unwrap(), Gaussian::new(0.0, 1.0).unwrap(), 8.0).unwrap();
        // log ratio 0.1y − 0.005 peaks at y = 8.
        assert_relative_eq!(r.epsilon, 0.795f64.exp() - 1.0, max_relative = 1e-12);
        assert_relative_eq!(r.c, (2.0 / PI).sqrt(), max_relative = 1e-12);
        assert_relative_eq!(r.bias_sq, 0.01, max_relative = 1e-12);
        assert!(r.holds);
    }

    #[test]
    fn truncation_guard() {
        let err = prop1_check(Gaussian::new(0.0, 1.0).unwrap(), Gaussian::new(0.0, 4.0).unwrap(), 2.0);
        assert!(matches!(err, Err(Error::TruncationMass { .. })));
    }

    #[test]
    fn folded_normal_mean_matches_quadrature() {
        for (m, v) in [(0.0, 1.0), (1.3, 0.5), (-2.0, 3.0)] {
            let g = Gaussian::new(m, v).unwrap();
            let s: f64 = v.sqrt();
            let n = 200_000;
            let (lo, hi) = (m - 12.0 * s, m + 12.0 * s);
            let h = (hi - lo) / n as f64;
            let quad: f64 = (0..n).map(|i| {
                let y = lo + (i as f64 + 0.5) * h;
                y.abs() * g.ln_pdf(y).exp() * h
            }).sum();
            assert_relative_eq!(expected_abs(&g), quad, max_relative = 1e-8);
        }
    }

    #[test]
    fn bound_holds_on_random_pairs() {
        let mut rng = derive_rng(10, &[]);
        let mut checked = 0;
        while checked < 100 {
            let a = Gaussian::new(rng.random_range(-1.0..1.0), rng.random_range(0.3..2.0)).unwrap();
            let b = Gaussian::new(rng.random_range(-1.0..1.0), rng.random_range(0.3..2.0)).unwrap();
            if let Ok(r) = prop1_check(a, b, 12.0) {
                assert!(r.holds, "{a:?} {b:?} {r:?}");
                checked += 1;
            }
        }
    }
}
