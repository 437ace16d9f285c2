//! Shot noise functionals of a renewal path and the normalizations of the
//! scaling limit theorems.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::laws::{IncrementLaw, LawFamily, ResponseFamily, ResponseFunction, SlowVarying};
use crate::renewal::{RenewalError, RenewalPath};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ShotNoiseError {
    #[error(transparent)]
    Renewal(#[from] RenewalError),
    #[error("centering needs a finite mean; this law has mean = infinity")]
    InfiniteMean,
    #[error("regime {regime:?} is inadmissible: {reason}")]
    Inadmissible { regime: Regime, reason: String },
    #[error("regime {0:?} has no scaling function")]
    NoScaling(Regime),
    #[error("solve_c needs a Pareto law with tail index in (0, 2]")]
    NotPareto,
    #[error("t = {0} is too small: c^2 = t*l(c) has no root above the scale")]
    EmptyBracket(f64),
    #[error("t must be positive, got {0}")]
    NonPositiveTime(f64),
    #[error("u-grid must be positive and strictly increasing")]
    BadGrid,
}

/// Which limit theorem a scaled statistic targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Regime {
    /// d.R.i. response, no normalization: `X(ut) ⇒ X*`.
    NoscaleDri,
    /// Decreasing non-integrable response, centred: `X(ut) − μ⁻¹∫h ⇒ X*_∘`.
    NoscaleCentered,
    /// Finite variance, Gaussian limit.
    A1,
    /// Pareto index 2, Gaussian limit with logarithmic normalization.
    A2,
    /// Pareto index in (1, 2), stable limit.
    A3,
    /// Pareto index in (0, 1), infinite mean.
    D4,
}

impl Regime {
    pub fn is_scaling(self) -> bool {
        !matches!(self, Regime::NoscaleDri | Regime::NoscaleCentered)
    }
}

/// A regime together with the law and response it is applied to.
///
/// `alpha` is read off the law (2 when the variance is finite) and `beta`
/// off the response's regular variation index.
#[derive(Debug, Clone, PartialEq)]
pub struct LimitSpec {
    regime: Regime,
    alpha: f64,
    beta: f64,
    law: IncrementLaw,
    h: ResponseFunction,
}

fn inadmissible(regime: Regime, reason: impl Into<String>) -> ShotNoiseError {
    ShotNoiseError::Inadmissible {
        regime,
        reason: reason.into(),
    }
}

fn pareto_index(law: &IncrementLaw) -> Option<f64> {
    match law.family() {
        LawFamily::Pareto { tail_index, .. } => Some(tail_index),
        _ => None,
    }
}

impl LimitSpec {
    pub fn new(regime: Regime, law: IncrementLaw, h: ResponseFunction) -> Result<Self, ShotNoiseError> {
        let alpha = if law.variance().is_finite() {
            2.0
        } else {
            law.tail_index()
        };
        let beta = h.rv_index().unwrap_or(0.0);
        let bad = |why: String| Err(inadmissible(regime, why));

        if regime.is_scaling() {
            if matches!(h.family(), ResponseFamily::Window { .. }) {
                return bad("a Window response vanishes eventually; h(t) > 0 is needed to normalize".into());
            }
            if h.rv_index().is_none() {
                return bad("the response must be regularly varying (PowerDecay, Constant or ParetoTailMatch)".into());
            }
        }
        match regime {
            Regime::NoscaleDri => {
                if !law.has_finite_mean() {
                    return bad("needs a finite mean".into());
                }
                if !h.is_dri() {
                    return bad("the response must be directly Riemann integrable".into());
                }
            }
            Regime::NoscaleCentered => {
                if !law.has_finite_mean() {
                    return bad("needs a finite mean".into());
                }
                if h.is_integrable() {
                    return bad("the response is integrable; use NOSCALE_DRI".into());
                }
                if h.monotone_from() > 0.0 {
                    return bad("the response must be nonincreasing on [0, inf)".into());
                }
            }
            Regime::A1 => {
                if !law.variance().is_finite() {
                    return bad("needs a finite variance".into());
                }
                if !(0.0..0.5).contains(&beta) {
                    return bad(format!("beta = {beta} must lie in [0, 1/2)"));
                }
            }
            Regime::A2 => {
                if pareto_index(&law) != Some(2.0) {
                    return bad("needs a Pareto law with tail index 2".into());
                }
                if !(0.0..0.5).contains(&beta) {
                    return bad(format!("beta = {beta} must lie in [0, 1/2)"));
                }
            }
            Regime::A3 => match pareto_index(&law) {
                Some(a) if a > 1.0 && a < 2.0 => {
                    if !(beta >= 0.0 && beta < 1.0 / a) {
                        return bad(format!("beta = {beta} must lie in (0,1/α) = [0, {})", 1.0 / a));
                    }
                }
                _ => return bad("needs a Pareto law with tail index in (1, 2)".into()),
            },
            Regime::D4 => match pareto_index(&law) {
                Some(a) if a > 0.0 && a < 1.0 => {
                    if !(beta >= 0.0 && beta <= a) {
                        return bad(format!("beta = {beta} must lie in [0, α] = [0, {a}]"));
                    }
                }
                _ => return bad("needs a Pareto law with tail index in (0, 1), so that the mean is infinite".into()),
            },
        }
        Ok(Self {
            regime,
            alpha,
            beta,
            law,
            h,
        })
    }

    pub fn regime(&self) -> Regime {
        self.regime
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn law(&self) -> &IncrementLaw {
        &self.law
    }

    pub fn response(&self) -> &ResponseFunction {
        &self.h
    }
}

/// Compensated (Neumaier) accumulator.
#[derive(Debug, Default, Clone, Copy)]
pub struct NeumaierSum {
    sum: f64,
    comp: f64,
}

impl NeumaierSum {
    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// `X(t) = Σ_{S_k ≤ t} h(t − S_k)`, summed from the youngest shot to the oldest.
pub fn evaluate(path: &RenewalPath, h: &ResponseFunction, t: f64) -> Result<f64, ShotNoiseError> {
    let n = path.count(t)?;
    let mut acc = NeumaierSum::default();
    for &s in path.arrivals()[..n].iter().rev() {
        acc.add(h.eval(t - s));
    }
    Ok(acc.value())
}

/// `X(t) − μ⁻¹ ∫₀ᵗ h(y) dy`.
pub fn centered_statistic(
    path: &RenewalPath,
    h: &ResponseFunction,
    law: &IncrementLaw,
    t: f64,
) -> Result<f64, ShotNoiseError> {
    if !law.has_finite_mean() {
        return Err(ShotNoiseError::InfiniteMean);
    }
    Ok(evaluate(path, h, t)? - h.integral(t) / law.mean())
}

/// Normalizing function g(t) of the scaling regimes.
pub fn scaling_g(spec: &LimitSpec, t: f64) -> Result<f64, ShotNoiseError> {
    if !(t > 0.0) {
        return Err(ShotNoiseError::NonPositiveTime(t));
    }
    let law = &spec.law;
    let mu = law.mean();
    match spec.regime {
        Regime::A1 => Ok((law.variance() * mu.powi(-3) * t).sqrt()),
        Regime::A2 => Ok(mu.powf(-1.5) * solve_c(law, t)?),
        Regime::A3 => Ok(mu.powf(-1.0 - 1.0 / spec.alpha) * solve_c(law, t)?),
        Regime::D4 => Ok(1.0 / law.tail_prob(t)),
        r => Err(ShotNoiseError::NoScaling(r)),
    }
}

/// Domain-of-attraction normalizer c(t) with `t ℓ(c)/c^α = 1`.
///
/// Closed form for a constant ℓ; for α = 2 the larger root of
/// `c² = t ℓ(c)` by bisection.
pub fn solve_c(law: &IncrementLaw, t: f64) -> Result<f64, ShotNoiseError> {
    if !(t > 0.0) {
        return Err(ShotNoiseError::NonPositiveTime(t));
    }
    let a = match pareto_index(law) {
        Some(a) if a <= 2.0 => a,
        _ => return Err(ShotNoiseError::NotPareto),
    };
    match law.slow_varying() {
        SlowVarying::Constant { value } => Ok((value * t).powf(1.0 / a)),
        SlowVarying::Logarithmic { coefficient, scale } => {
            // f(c) = c² − t·k·ln(c/x_m) is convex with its minimum at c = x_m √(t k / 2).
            let f = |c: f64| c * c - t * coefficient * (c / scale).ln();
            let mut lo = (0.5 * t * coefficient).sqrt().max(scale);
            if f(lo) >= 0.0 {
                return Err(ShotNoiseError::EmptyBracket(t));
            }
            let mut hi = 2.0 * lo;
            while f(hi) < 0.0 {
                hi *= 2.0;
            }
            while hi - lo > 1e-12 * hi {
                let mid = 0.5 * (lo + hi);
                if f(mid) < 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            Ok(0.5 * (lo + hi))
        }
        SlowVarying::NotApplicable => Err(ShotNoiseError::NotPareto),
    }
}

/// Checks that a u-grid is positive and strictly increasing.
pub fn check_grid(u_grid: &[f64]) -> Result<(), ShotNoiseError> {
    let ok = !u_grid.is_empty() && u_grid[0] > 0.0 && u_grid.windows(2).all(|w| w[1] > w[0]) && u_grid.iter().all(|u| u.is_finite());
    if ok {
        Ok(())
    } else {
        Err(ShotNoiseError::BadGrid)
    }
}

/// The statistic whose law converges in `spec`'s theorem, at each `u t`
/// for `u` in the grid, all read off one path.
pub fn scaled_statistic(
    spec: &LimitSpec,
    path: &RenewalPath,
    u_grid: &[f64],
    t: f64,
) -> Result<Vec<f64>, ShotNoiseError> {
    check_grid(u_grid)?;
    if !(t > 0.0) {
        return Err(ShotNoiseError::NonPositiveTime(t));
    }
    let h = &spec.h;
    let law = &spec.law;
    match spec.regime {
        Regime::NoscaleDri => u_grid.iter().map(|&u| evaluate(path, h, u * t)).collect(),
        Regime::NoscaleCentered => u_grid.iter().map(|&u| centered_statistic(path, h, law, u * t)).collect(),
        Regime::A1 | Regime::A2 | Regime::A3 => {
            let g = scaling_g(spec, t)?;
            if let ResponseFamily::Constant { .. } = h.family() {
                // The constant cancels; work with the counting process so the
                // result does not depend on its value at all.
                let mu = law.mean();
                return u_grid
                    .iter()
                    .map(|&u| Ok((path.count(u * t)? as f64 - u * t / mu) / g))
                    .collect();
            }
            let norm = g * h.eval(t);
            u_grid
                .iter()
                .map(|&u| Ok(centered_statistic(path, h, law, u * t)? / norm))
                .collect()
        }
        Regime::D4 => {
            let pre = law.tail_prob(t) / h.eval(t);
            u_grid.iter().map(|&u| Ok(pre * evaluate(path, h, u * t)?)).collect()
        }
    }
}
