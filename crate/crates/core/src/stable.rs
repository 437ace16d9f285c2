//! Totally skewed α-stable laws and the α-stable subordinator.
//!
//! The limit laws are given by their characteristic function
//! `exp{-|z|^α Γ(1-α)(cos(πα/2) ± i sin(πα/2) sign z)}`. Writing
//! `σ^α = Γ(1-α) cos(πα/2)` turns this into the standard form
//! `exp{-σ^α |z|^α (1 - i·skew·tan(πα/2)·sign z)}` with skew = ∓1, which is
//! what the Chambers–Mallows–Stuck sampler consumes. [`StableSpec::scale`]
//! and [`StableSpec::skewness`] are the only place that mapping lives.

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;
use rand::RngCore;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::open01;
use crate::special::gamma;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StableError {
    #[error("alpha = {0} is not supported (need 0 < alpha <= 2, alpha != 1)")]
    UnsupportedAlpha(f64),
    #[error("alpha = {0} must lie in (0, 1) for a subordinator")]
    SubordinatorAlpha(f64),
    #[error("the r-th absolute moment is infinite for r = {r} >= alpha = {alpha}")]
    InfiniteMoment { r: f64, alpha: f64 },
    #[error("moment order r = {0} must be positive")]
    NonPositiveOrder(f64),
    #[error("time step must be positive, got {0}")]
    BadStep(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Skew {
    /// `+ i sin(πα/2) sign z`: the limit of the centred counting process.
    SpectrallyNegative,
    /// `- i sin(πα/2) sign z`: the limit of normalized partial sums.
    SpectrallyPositive,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StableSpec {
    alpha: f64,
    skew: Skew,
}

impl StableSpec {
    pub fn new(alpha: f64, skew: Skew) -> Result<Self, StableError> {
        if !(alpha > 0.0 && alpha <= 2.0) || alpha == 1.0 {
            return Err(StableError::UnsupportedAlpha(alpha));
        }
        Ok(Self { alpha, skew })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn skew(&self) -> Skew {
        self.skew
    }

    /// Skewness parameter of the standard parametrization.
    pub fn skewness(&self) -> f64 {
        match self.skew {
            Skew::SpectrallyNegative => -1.0,
            Skew::SpectrallyPositive => 1.0,
        }
    }

    /// Scale σ with `σ^α = Γ(1-α) cos(πα/2)`; the α = 2 law is the standard
    /// normal, whose scale in the same parametrization is `1/√2`.
    pub fn scale(&self) -> f64 {
        if self.alpha == 2.0 {
            return std::f64::consts::FRAC_1_SQRT_2;
        }
        (gamma(1.0 - self.alpha) * (FRAC_PI_2 * self.alpha).cos()).powf(1.0 / self.alpha)
    }

    pub fn characteristic_function(&self, z: f64) -> Complex64 {
        if self.alpha == 2.0 {
            return Complex64::new((-0.5 * z * z).exp(), 0.0);
        }
        let a = self.alpha;
        let sa = self.scale().powf(a);
        let mag = sa * z.abs().powf(a);
        let phase = self.skewness() * (FRAC_PI_2 * a).tan() * z.signum();
        (Complex64::new(-mag, mag * phase)).exp()
    }
}

/// One draw from the stable law of `spec` (Chambers–Mallows–Stuck; α = 2
/// is a standard normal).
#[inline]
pub fn sample_stable<R: RngCore + ?Sized>(spec: &StableSpec, rng: &mut R) -> f64 {
    let a = spec.alpha;
    if a == 2.0 {
        return StandardNormal.sample(rng);
    }
    let beta = spec.skewness();
    let tan = (FRAC_PI_2 * a).tan();
    let b = (beta * tan).atan() / a;
    let s = (1.0 + beta * beta * tan * tan).powf(0.5 / a);
    let v = PI * (open01(rng) - 0.5);
    let w = -open01(rng).ln();
    let av = a * (v + b);
    let x = s * av.sin() / v.cos().powf(1.0 / a) * ((v - av).cos() / w).powf((1.0 - a) / a);
    spec.scale() * x
}

/// Positive stable variate with Laplace transform `exp(-s^α)`, 0 < α < 1
/// (Kanter's representation).
#[inline]
pub fn sample_positive_stable<R: RngCore + ?Sized>(alpha: f64, rng: &mut R) -> f64 {
    let u = PI * open01(rng);
    let w = -open01(rng).ln();
    let lead = (alpha * u).sin() / u.sin().powf(1.0 / alpha);
    lead * (((1.0 - alpha) * u).sin() / w).powf((1.0 - alpha) / alpha)
}

/// Increment `D_α(dt)` of the subordinator with
/// `-log E exp(-s D_α(1)) = Γ(1-α) s^α`.
pub fn sample_subordinator_increment<R: RngCore + ?Sized>(alpha: f64, dt: f64, rng: &mut R) -> Result<f64, StableError> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(StableError::SubordinatorAlpha(alpha));
    }
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(StableError::BadStep(dt));
    }
    Ok(subordinator_scale(alpha, dt) * sample_positive_stable(alpha, rng))
}

/// `(Γ(1-α) dt)^{1/α}`, the scale of a subordinator increment over `dt`.
pub fn subordinator_scale(alpha: f64, dt: f64) -> f64 {
    (gamma(1.0 - alpha) * dt).powf(1.0 / alpha)
}

/// `E|W|^r` for W with the spectrally negative limit law of index α.
///
/// Closed form
/// `2Γ(r+1)/(πr) sin(πr/2) Γ(1-r/α) |Γ(1-α)|^{r/α} cos(πr/2 - πr/α)`;
/// for α = 2 the standard normal value `2^{r/2} Γ((r+1)/2)/√π`.
pub fn abs_moment(alpha: f64, r: f64) -> Result<f64, StableError> {
    if !(alpha > 0.0 && alpha <= 2.0) || alpha == 1.0 {
        return Err(StableError::UnsupportedAlpha(alpha));
    }
    if !(r > 0.0) {
        return Err(StableError::NonPositiveOrder(r));
    }
    if r >= alpha {
        return Err(StableError::InfiniteMoment { r, alpha });
    }
    if alpha == 2.0 {
        return Ok(2f64.powf(0.5 * r) * gamma(0.5 * (r + 1.0)) / PI.sqrt());
    }
    let value = 2.0 * gamma(r + 1.0) / (PI * r)
        * (0.5 * PI * r).sin()
        * gamma(1.0 - r / alpha)
        * gamma(1.0 - alpha).abs().powf(r / alpha)
        * (0.5 * PI * r - PI * r / alpha).cos();
    Ok(value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Stream;

    #[test]
    fn scale_at_one_and_a_half() {
        let spec = StableSpec::new(1.5, Skew::SpectrallyNegative).unwrap();
        assert!((spec.scale() - (2.0 * PI).powf(1.0 / 3.0)).abs() < 1e-13);
        assert!((spec.scale() - 1.845_270_148_644_028).abs() < 1e-12);
    }

    #[test]
    fn characteristic_function_matches_defining_form() {
        for &a in &[0.3, 0.8, 1.2, 1.5, 1.9] {
            for skew in [Skew::SpectrallyNegative, Skew::SpectrallyPositive] {
                let spec = StableSpec::new(a, skew).unwrap();
                let sign_im = if skew == Skew::SpectrallyNegative { 1.0 } else { -1.0 };
                for i in -20..=20 {
                    let z = i as f64 * 0.25;
                    let g = gamma(1.0 - a);
                    let direct = Complex64::new(
                        -z.abs().powf(a) * g * (FRAC_PI_2 * a).cos(),
                        -z.abs().powf(a) * g * sign_im * (FRAC_PI_2 * a).sin() * z.signum(),
                    )
                    .exp();
                    let mapped = spec.characteristic_function(z);
                    assert!((direct - mapped).norm() < 1e-12, "a={a} z={z}");
                }
            }
        }
    }

    #[test]
    fn abs_moment_examples() {
        assert!((abs_moment(1.5, 1.0).unwrap() - 3.433_814_197_903_721).abs() < 1e-10);
        assert!((abs_moment(1.5, 0.5).unwrap() - 1.591_263_038_772_885).abs() < 1e-10);
        assert!((abs_moment(2.0, 1.0).unwrap() - (2.0 / PI).sqrt()).abs() < 1e-14);
        assert!((abs_moment(1.8, 1.0).unwrap() - 3.298_166_937_412_495).abs() < 1e-10);
    }

    #[test]
    fn abs_moment_rejects_infinite_orders() {
        assert_eq!(abs_moment(1.5, 1.5), Err(StableError::InfiniteMoment { r: 1.5, alpha: 1.5 }));
        assert!(abs_moment(1.0, 0.5).is_err());
        assert!(abs_moment(1.5, 0.0).is_err());
    }

    #[test]
    fn alpha_one_unsupported() {
        assert_eq!(StableSpec::new(1.0, Skew::SpectrallyNegative), Err(StableError::UnsupportedAlpha(1.0)));
    }

    #[test]
    fn subordinator_draws_positive() {
        let mut s = Stream::new(2, 0);
        for _ in 0..10_000 {
            assert!(sample_subordinator_increment(0.3, 0.01, &mut s).unwrap() > 0.0);
        }
        assert!(sample_subordinator_increment(1.2, 1.0, &mut s).is_err());
        assert!(sample_subordinator_increment(0.5, 0.0, &mut s).is_err());
    }

    #[test]
    fn empirical_characteristic_function() {
        let spec = StableSpec::new(1.5, Skew::SpectrallyNegative).unwrap();
        let mut s = Stream::new(4, 0);
        let n = 200_000;
        let xs: Vec<f64> = (0..n).map(|_| sample_stable(&spec, &mut s)).collect();
        for &z in &[-1.0, -0.3, 0.2, 0.7, 1.5] {
            let emp: Complex64 = xs.iter().map(|&x| Complex64::new(0.0, z * x).exp()).sum::<Complex64>() / n as f64;
            let exact = spec.characteristic_function(z);
            // |e^{izx}| = 1, so each component has standard error <= 1/sqrt(n).
            assert!((emp - exact).norm() < 5.0 / (n as f64).sqrt() * 2f64.sqrt(), "z={z} emp={emp} exact={exact}");
        }
    }
}
