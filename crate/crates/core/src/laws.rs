//! Parametric increment laws and response functions.
//!
//! Both families are closed: every analytic quantity the limit theorems
//! depend on (mean, variance, tail index, slowly varying part, regular
//! variation index, integrability) is known in closed form.

use rand::RngCore;
use rand_distr::Distribution;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::open01;
use crate::special::gamma_q;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LawError {
    #[error("invalid parameter {name} = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },
    #[error("the stationary delay needs a finite mean; this law has mean = infinity")]
    InfiniteMean,
}

fn check(cond: bool, name: &'static str, value: f64, reason: &'static str) -> Result<(), LawError> {
    if cond && value.is_finite() {
        Ok(())
    } else {
        Err(LawError::InvalidParameter { name, value, reason })
    }
}

/// Family and parameters of the inter-arrival law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum LawFamily {
    Exponential { rate: f64 },
    Uniform { low: f64, high: f64 },
    Gamma { shape: f64, rate: f64 },
    Pareto { tail_index: f64, scale: f64 },
}

/// Slowly varying part ℓ of the increment law.
///
/// For Pareto tails with index α ≠ 2 this is the constant in
/// `P(ξ > t) = ℓ t^{-α}`; at α = 2 it is the truncated second moment
/// `E[ξ² 1{ξ ≤ t}] = coefficient · ln(t / scale)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SlowVarying {
    Constant { value: f64 },
    Logarithmic { coefficient: f64, scale: f64 },
    NotApplicable,
}

impl SlowVarying {
    pub fn eval(&self, t: f64) -> Option<f64> {
        match *self {
            SlowVarying::Constant { value } => Some(value),
            SlowVarying::Logarithmic { coefficient, scale } => Some(coefficient * (t / scale).ln()),
            SlowVarying::NotApplicable => None,
        }
    }
}

/// Law of the renewal increments ξ with cached analytic metadata.
#[derive(Debug, Clone)]
pub struct IncrementLaw {
    family: LawFamily,
    mean: f64,
    variance: f64,
    tail_index: f64,
    slow_varying: SlowVarying,
    gamma_sampler: Option<rand_distr::Gamma<f64>>,
}

impl PartialEq for IncrementLaw {
    fn eq(&self, other: &Self) -> bool {
        self.family == other.family
    }
}

impl IncrementLaw {
    pub fn new(family: LawFamily) -> Result<Self, LawError> {
        let inf = f64::INFINITY;
        let (mean, variance, tail_index, slow_varying, gamma_sampler) = match family {
            LawFamily::Exponential { rate } => {
                check(rate > 0.0, "rate", rate, "must be > 0")?;
                (1.0 / rate, 1.0 / (rate * rate), inf, SlowVarying::NotApplicable, None)
            }
            LawFamily::Uniform { low, high } => {
                check(low >= 0.0, "low", low, "must be >= 0")?;
                check(high > low, "high", high, "must exceed low")?;
                let w = high - low;
                (0.5 * (low + high), w * w / 12.0, inf, SlowVarying::NotApplicable, None)
            }
            LawFamily::Gamma { shape, rate } => {
                check(shape > 0.0, "shape", shape, "must be > 0")?;
                check(rate > 0.0, "rate", rate, "must be > 0")?;
                let sampler = rand_distr::Gamma::new(shape, 1.0 / rate).map_err(|_| LawError::InvalidParameter {
                    name: "shape",
                    value: shape,
                    reason: "rejected by the gamma sampler",
                })?;
                (shape / rate, shape / (rate * rate), inf, SlowVarying::NotApplicable, Some(sampler))
            }
            LawFamily::Pareto { tail_index: a, scale } => {
                check(a > 0.0, "tail_index", a, "must be > 0")?;
                check(scale > 0.0, "scale", scale, "must be > 0")?;
                let mean = if a > 1.0 { a * scale / (a - 1.0) } else { inf };
                let variance = if a > 2.0 {
                    scale * scale * a / ((a - 1.0) * (a - 1.0) * (a - 2.0))
                } else {
                    inf
                };
                let slow = if a == 2.0 {
                    SlowVarying::Logarithmic {
                        coefficient: 2.0 * scale * scale,
                        scale,
                    }
                } else {
                    SlowVarying::Constant { value: scale.powf(a) }
                };
                (mean, variance, a, slow, None)
            }
        };
        Ok(Self {
            family,
            mean,
            variance,
            tail_index,
            slow_varying,
            gamma_sampler,
        })
    }

    pub fn exponential(rate: f64) -> Result<Self, LawError> {
        Self::new(LawFamily::Exponential { rate })
    }

    pub fn uniform(low: f64, high: f64) -> Result<Self, LawError> {
        Self::new(LawFamily::Uniform { low, high })
    }

    pub fn gamma(shape: f64, rate: f64) -> Result<Self, LawError> {
        Self::new(LawFamily::Gamma { shape, rate })
    }

    pub fn pareto(tail_index: f64, scale: f64) -> Result<Self, LawError> {
        Self::new(LawFamily::Pareto { tail_index, scale })
    }

    pub fn family(&self) -> LawFamily {
        self.family
    }

    /// μ = E ξ, possibly infinite.
    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// σ² = Var ξ, possibly infinite.
    pub fn variance(&self) -> f64 {
        self.variance
    }

    /// Tail index α of `P(ξ > t)`; infinite for light-tailed families.
    pub fn tail_index(&self) -> f64 {
        self.tail_index
    }

    pub fn slow_varying(&self) -> SlowVarying {
        self.slow_varying
    }

    /// None of the supported families is lattice.
    pub fn is_lattice(&self) -> bool {
        false
    }

    pub fn has_finite_mean(&self) -> bool {
        self.mean.is_finite()
    }

    /// Exact survival probability `P(ξ > t)`.
    pub fn tail_prob(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 1.0;
        }
        match self.family {
            LawFamily::Exponential { rate } => (-rate * t).exp(),
            LawFamily::Uniform { low, high } => {
                if t < low {
                    1.0
                } else if t >= high {
                    0.0
                } else {
                    (high - t) / (high - low)
                }
            }
            LawFamily::Gamma { shape, rate } => gamma_q(shape, rate * t),
            LawFamily::Pareto { tail_index, scale } => {
                if t < scale {
                    1.0
                } else {
                    (scale / t).powf(tail_index)
                }
            }
        }
    }

    /// Inverse CDF at `u ∈ (0, 1)`, for the families that have one in
    /// closed form (all but Gamma).
    pub fn quantile(&self, u: f64) -> Option<f64> {
        match self.family {
            LawFamily::Exponential { rate } => Some(-(-u).ln_1p() / rate),
            LawFamily::Uniform { low, high } => Some(low + (high - low) * u),
            LawFamily::Gamma { .. } => None,
            LawFamily::Pareto { tail_index, scale } => Some(scale * (1.0 - u).powf(-1.0 / tail_index)),
        }
    }

    /// One increment. Inverse CDF for Exponential, Uniform and Pareto;
    /// Marsaglia–Tsang for Gamma.
    #[inline]
    pub fn sample_increment<R: RngCore + ?Sized>(&self, rng: &mut R) -> f64 {
        match self.family {
            LawFamily::Exponential { rate } => -open01(rng).ln() / rate,
            LawFamily::Uniform { low, high } => low + (high - low) * open01(rng),
            LawFamily::Pareto { tail_index, scale } => scale * open01(rng).powf(-1.0 / tail_index),
            LawFamily::Gamma { .. } => {
                let g = self.gamma_sampler.as_ref().expect("gamma sampler cached at construction");
                loop {
                    let x = g.sample(rng);
                    if x > 0.0 {
                        break x;
                    }
                }
            }
        }
    }

    /// CDF of the stationary delay, `F*(t) = E[min(ξ, t)] / μ`.
    pub fn stationary_delay_cdf(&self, t: f64) -> Result<f64, LawError> {
        if !self.has_finite_mean() {
            return Err(LawError::InfiniteMean);
        }
        if t <= 0.0 {
            return Ok(0.0);
        }
        let mu = self.mean;
        let truncated_mean = match self.family {
            LawFamily::Exponential { rate } => -(-rate * t).exp_m1() / rate,
            LawFamily::Uniform { low, high } => {
                if t <= low {
                    t
                } else if t >= high {
                    mu
                } else {
                    let w = high - low;
                    low + (w * w - (high - t) * (high - t)) / (2.0 * w)
                }
            }
            LawFamily::Gamma { shape, rate } => {
                let x = rate * t;
                t * gamma_q(shape, x) + shape / rate * (1.0 - gamma_q(shape + 1.0, x))
            }
            LawFamily::Pareto { tail_index: a, scale } => {
                if t <= scale {
                    t
                } else {
                    scale + scale / (a - 1.0) * (1.0 - (scale / t).powf(a - 1.0))
                }
            }
        };
        Ok((truncated_mean / mu).clamp(0.0, 1.0))
    }

    /// Inverse of the stationary delay CDF at `v ∈ [0, 1)`; `None` for Gamma.
    pub fn stationary_delay_quantile(&self, v: f64) -> Result<Option<f64>, LawError> {
        if !self.has_finite_mean() {
            return Err(LawError::InfiniteMean);
        }
        let mu = self.mean;
        let target = v * mu;
        Ok(match self.family {
            LawFamily::Exponential { rate } => Some(-(-v).ln_1p() / rate),
            LawFamily::Uniform { low, high } => {
                if target <= low {
                    Some(target)
                } else {
                    let w = high - low;
                    let rem = (w * w - 2.0 * w * (target - low)).max(0.0);
                    Some(high - rem.sqrt())
                }
            }
            LawFamily::Gamma { .. } => None,
            LawFamily::Pareto { tail_index: a, scale } => {
                if target <= scale {
                    Some(target)
                } else {
                    let base = 1.0 - (target - scale) * (a - 1.0) / scale;
                    Some(scale * base.powf(-1.0 / (a - 1.0)))
                }
            }
        })
    }

    /// Draw from the stationary delay law with density `P(ξ > x) / μ`.
    ///
    /// Closed-form inversion where available; for Gamma the delay is
    /// `U · ξ̂` with ξ̂ size-biased (shape + 1) and `U` uniform.
    pub fn stationary_delay_sample<R: RngCore + ?Sized>(&self, rng: &mut R) -> Result<f64, LawError> {
        if !self.has_finite_mean() {
            return Err(LawError::InfiniteMean);
        }
        match self.family {
            LawFamily::Gamma { shape, rate } => {
                let biased = rand_distr::Gamma::new(shape + 1.0, 1.0 / rate).expect("validated at construction");
                let size = biased.sample(rng);
                Ok(open01(rng) * size)
            }
            _ => {
                let v = open01(rng);
                Ok(self.stationary_delay_quantile(v)?.expect("closed form exists"))
            }
        }
    }
}

/// Family and parameters of the response function h.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum ResponseFamily {
    /// `h(t) = (t + offset)^{-beta}`
    PowerDecay { beta: f64, offset: f64 },
    /// `h(t) = exp(-rate t)`
    ExpDecay { rate: f64 },
    /// `h(t) = 1{start <= t < end}`
    Window { start: f64, end: f64 },
    Constant { value: f64 },
    /// `h(t) = multiplier * min(1, (scale / t)^tail_index)`
    ParetoTailMatch {
        tail_index: f64,
        scale: f64,
        multiplier: f64,
    },
}

/// Response function with regular-variation and integrability metadata.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResponseFunction {
    family: ResponseFamily,
    rv_index: Option<f64>,
    dri: bool,
    integrable: bool,
    square_integrable: bool,
    monotone_from: f64,
}

impl ResponseFunction {
    pub fn new(family: ResponseFamily) -> Result<Self, LawError> {
        let r = match family {
            ResponseFamily::PowerDecay { beta, offset } => {
                check(beta >= 0.0, "beta", beta, "must be >= 0")?;
                check(offset > 0.0, "offset", offset, "must be > 0")?;
                Self {
                    family,
                    rv_index: Some(beta),
                    dri: beta > 1.0,
                    integrable: beta > 1.0,
                    square_integrable: beta > 0.5,
                    monotone_from: 0.0,
                }
            }
            ResponseFamily::ExpDecay { rate } => {
                check(rate > 0.0, "rate", rate, "must be > 0")?;
                Self {
                    family,
                    rv_index: None,
                    dri: true,
                    integrable: true,
                    square_integrable: true,
                    monotone_from: 0.0,
                }
            }
            ResponseFamily::Window { start, end } => {
                check(start >= 0.0, "start", start, "must be >= 0")?;
                check(end > start, "end", end, "must exceed start")?;
                Self {
                    family,
                    rv_index: None,
                    dri: true,
                    integrable: true,
                    square_integrable: true,
                    monotone_from: start,
                }
            }
            ResponseFamily::Constant { value } => {
                check(value > 0.0, "value", value, "must be > 0")?;
                Self {
                    family,
                    rv_index: Some(0.0),
                    dri: false,
                    integrable: false,
                    square_integrable: false,
                    monotone_from: 0.0,
                }
            }
            ResponseFamily::ParetoTailMatch {
                tail_index,
                scale,
                multiplier,
            } => {
                check(tail_index > 0.0, "tail_index", tail_index, "must be > 0")?;
                check(scale > 0.0, "scale", scale, "must be > 0")?;
                check(multiplier > 0.0, "multiplier", multiplier, "must be > 0")?;
                Self {
                    family,
                    rv_index: Some(tail_index),
                    dri: tail_index > 1.0,
                    integrable: tail_index > 1.0,
                    square_integrable: tail_index > 0.5,
                    monotone_from: 0.0,
                }
            }
        };
        Ok(r)
    }

    pub fn power_decay(beta: f64, offset: f64) -> Result<Self, LawError> {
        Self::new(ResponseFamily::PowerDecay { beta, offset })
    }

    pub fn exp_decay(rate: f64) -> Result<Self, LawError> {
        Self::new(ResponseFamily::ExpDecay { rate })
    }

    pub fn window(start: f64, end: f64) -> Result<Self, LawError> {
        Self::new(ResponseFamily::Window { start, end })
    }

    pub fn constant(value: f64) -> Result<Self, LawError> {
        Self::new(ResponseFamily::Constant { value })
    }

    pub fn pareto_tail_match(tail_index: f64, scale: f64, multiplier: f64) -> Result<Self, LawError> {
        Self::new(ResponseFamily::ParetoTailMatch {
            tail_index,
            scale,
            multiplier,
        })
    }

    pub fn family(&self) -> ResponseFamily {
        self.family
    }

    /// Index β of regular variation `h(t) ~ t^{-β} ℓ_h(t)`; `None` for the
    /// rapidly decaying families (ExpDecay, Window).
    pub fn rv_index(&self) -> Option<f64> {
        self.rv_index
    }

    /// Directly Riemann integrable.
    pub fn is_dri(&self) -> bool {
        self.dri
    }

    pub fn is_integrable(&self) -> bool {
        self.integrable
    }

    pub fn is_square_integrable(&self) -> bool {
        self.square_integrable
    }

    /// h is nonincreasing on `[monotone_from, ∞)`.
    pub fn monotone_from(&self) -> f64 {
        self.monotone_from
    }

    /// `lim t^β h(t)`, the limit of the slowly varying part ℓ_h.
    pub fn slowly_varying_limit(&self) -> Option<f64> {
        match self.family {
            ResponseFamily::PowerDecay { .. } => Some(1.0),
            ResponseFamily::Constant { value } => Some(value),
            ResponseFamily::ParetoTailMatch {
                tail_index,
                scale,
                multiplier,
            } => Some(multiplier * scale.powf(tail_index)),
            ResponseFamily::ExpDecay { .. } | ResponseFamily::Window { .. } => None,
        }
    }

    /// `lim h(t) / P(ξ > t)` when h and the law's tail share the same
    /// index and the law has a constant slowly varying part.
    pub fn tail_ratio_limit(&self, law: &IncrementLaw) -> Option<f64> {
        let beta = self.rv_index?;
        if beta != law.tail_index() {
            return None;
        }
        match law.slow_varying() {
            SlowVarying::Constant { value } => Some(self.slowly_varying_limit()? / value),
            _ => None,
        }
    }

    #[inline]
    pub fn eval(&self, t: f64) -> f64 {
        match self.family {
            ResponseFamily::PowerDecay { beta, offset } => (t + offset).powf(-beta),
            ResponseFamily::ExpDecay { rate } => (-rate * t).exp(),
            ResponseFamily::Window { start, end } => {
                if t >= start && t < end {
                    1.0
                } else {
                    0.0
                }
            }
            ResponseFamily::Constant { value } => value,
            ResponseFamily::ParetoTailMatch {
                tail_index,
                scale,
                multiplier,
            } => {
                if t <= scale {
                    multiplier
                } else {
                    multiplier * (scale / t).powf(tail_index)
                }
            }
        }
    }

    /// `∫_0^T h(y) dy` from the antiderivative; `T` may be infinite.
    pub fn integral(&self, upper: f64) -> f64 {
        if upper <= 0.0 {
            return 0.0;
        }
        match self.family {
            ResponseFamily::PowerDecay { beta, offset } => {
                if upper.is_infinite() {
                    return if beta > 1.0 {
                        offset.powf(1.0 - beta) / (beta - 1.0)
                    } else {
                        f64::INFINITY
                    };
                }
                if beta == 1.0 {
                    (upper / offset).ln_1p()
                } else {
                    ((upper + offset).powf(1.0 - beta) - offset.powf(1.0 - beta)) / (1.0 - beta)
                }
            }
            ResponseFamily::ExpDecay { rate } => -(-rate * upper).exp_m1() / rate,
            ResponseFamily::Window { start, end } => upper.clamp(start, end) - start,
            ResponseFamily::Constant { value } => value * upper,
            ResponseFamily::ParetoTailMatch {
                tail_index: a,
                scale,
                multiplier,
            } => {
                if upper <= scale {
                    return multiplier * upper;
                }
                let tail = if upper.is_infinite() {
                    if a > 1.0 {
                        scale / (a - 1.0)
                    } else {
                        f64::INFINITY
                    }
                } else if a == 1.0 {
                    scale * (upper / scale).ln()
                } else {
                    scale * (1.0 - (scale / upper).powf(a - 1.0)) / (a - 1.0)
                };
                multiplier * (scale + tail)
            }
        }
    }
}
