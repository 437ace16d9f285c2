//! Zero-delayed and stationary renewal paths.

use std::io::Write;

use rand::RngCore;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::laws::{IncrementLaw, LawError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RenewalError {
    #[error("horizon must be positive and finite, got {0}")]
    BadHorizon(f64),
    #[error("time {t} lies outside the generated range [0, {horizon}]")]
    OutOfRange { t: f64, horizon: f64 },
    #[error("interval [{s}, {t}] is not ordered")]
    Unordered { s: f64, t: f64 },
    #[error("no arrival in [0, {0}]")]
    NoArrival(f64),
    #[error("increment source ran out before the horizon was passed")]
    IncrementsExhausted,
    #[error("increments must be positive, got {0}")]
    NonPositiveIncrement(f64),
    #[error(transparent)]
    Law(#[from] LawError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DelayKind {
    /// `S_0 = 0`.
    ZeroDelayed,
    /// `S_0` drawn from the stationary delay law.
    Stationary,
}

/// Streaming source of renewal epochs `S_0 < S_1 < … ≤ horizon`.
///
/// Stops at the first epoch beyond the horizon, which is discarded.
pub struct Arrivals<'a, R> {
    law: &'a IncrementLaw,
    rng: R,
    next: f64,
    horizon: f64,
    done: bool,
}

impl<'a, R: RngCore> Arrivals<'a, R> {
    pub fn new(law: &'a IncrementLaw, horizon: f64, delay: DelayKind, mut rng: R) -> Result<Self, RenewalError> {
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(RenewalError::BadHorizon(horizon));
        }
        let first = match delay {
            DelayKind::ZeroDelayed => 0.0,
            DelayKind::Stationary => law.stationary_delay_sample(&mut rng)?,
        };
        Ok(Self {
            law,
            rng,
            next: first,
            horizon,
            done: false,
        })
    }
}

impl<R: RngCore> Iterator for Arrivals<'_, R> {
    type Item = f64;

    #[inline]
    fn next(&mut self) -> Option<f64> {
        if self.done || self.next > self.horizon {
            self.done = true;
            return None;
        }
        let current = self.next;
        self.next = current + self.law.sample_increment(&mut self.rng);
        Some(current)
    }
}

/// Arrival epochs of one renewal path up to a horizon.
#[derive(Debug, Clone, PartialEq)]
pub struct RenewalPath {
    arrivals: Vec<f64>,
    horizon: f64,
    delay: DelayKind,
}

impl RenewalPath {
    /// Builds a path from an explicit first epoch and increment sequence.
    pub fn from_increments<I: IntoIterator<Item = f64>>(
        first: f64,
        increments: I,
        horizon: f64,
        delay: DelayKind,
    ) -> Result<Self, RenewalError> {
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(RenewalError::BadHorizon(horizon));
        }
        let mut arrivals = Vec::new();
        let mut current = first;
        let mut incs = increments.into_iter();
        while current <= horizon {
            arrivals.push(current);
            let inc = incs.next().ok_or(RenewalError::IncrementsExhausted)?;
            if !(inc > 0.0) {
                return Err(RenewalError::NonPositiveIncrement(inc));
            }
            current += inc;
        }
        Ok(Self {
            arrivals,
            horizon,
            delay,
        })
    }

    pub fn arrivals(&self) -> &[f64] {
        &self.arrivals
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn delay_kind(&self) -> DelayKind {
        self.delay
    }

    pub fn len(&self) -> usize {
        self.arrivals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.arrivals.is_empty()
    }

    fn check_time(&self, t: f64) -> Result<(), RenewalError> {
        if t >= 0.0 && t <= self.horizon {
            Ok(())
        } else {
            Err(RenewalError::OutOfRange { t, horizon: self.horizon })
        }
    }

    /// `N(t) = #{k : S_k ≤ t}`.
    pub fn count(&self, t: f64) -> Result<usize, RenewalError> {
        self.check_time(t)?;
        Ok(self.arrivals.partition_point(|&s| s <= t))
    }

    /// Undershoot `t − S_{N(t)−1}`, the age of the most recent arrival.
    pub fn undershoot(&self, t: f64) -> Result<f64, RenewalError> {
        let n = self.count(t)?;
        if n == 0 {
            return Err(RenewalError::NoArrival(t));
        }
        Ok(t - self.arrivals[n - 1])
    }

    /// Number of arrivals in the closed interval `[s, t]`.
    pub fn count_increment(&self, s: f64, t: f64) -> Result<usize, RenewalError> {
        if s > t {
            return Err(RenewalError::Unordered { s, t });
        }
        self.check_time(s)?;
        let upto_t = self.count(t)?;
        let before_s = self.arrivals.partition_point(|&x| x < s);
        Ok(upto_t - before_s)
    }

    /// CSV dump with header `k,S_k`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), csv::Error> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
        w.write_record(["k", "S_k"])?;
        for (k, s) in self.arrivals.iter().enumerate() {
            w.write_record([k.to_string(), s.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Samples a renewal path on `[0, horizon]`.
pub fn sample_path<R: RngCore + ?Sized>(
    law: &IncrementLaw,
    horizon: f64,
    delay: DelayKind,
    rng: &mut R,
) -> Result<RenewalPath, RenewalError> {
    let arrivals: Vec<f64> = Arrivals::new(law, horizon, delay, rng)?.collect();
    Ok(RenewalPath {
        arrivals,
        horizon,
        delay,
    })
}
