//! Adaptive Gauss–Kronrod (7/15) quadrature with power-law endpoint
//! substitutions.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use thiserror::Error;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QuadError {
    #[error("quadrature did not converge: value {value}, error estimate {error} > tolerance {tolerance}")]
    NonConvergence {
        value: f64,
        error: f64,
        tolerance: f64,
    },
    #[error("integrand is not finite at {at}")]
    NonFinite { at: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
    pub max_intervals: usize,
}

impl Tolerance {
    pub fn absolute(abs: f64) -> Self {
        Self {
            abs,
            rel: 0.0,
            max_intervals: 2000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral {
    pub value: f64,
    pub error: f64,
    pub intervals: usize,
}

#[derive(Debug, Clone, Copy)]
struct Piece {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Piece {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Piece {}
impl PartialOrd for Piece {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Piece {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn kronrod15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Result<Piece, QuadError> {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    if !fc.is_finite() {
        return Err(QuadError::NonFinite { at: c });
    }
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for (j, (&x, &w)) in XGK.iter().zip(WGK.iter()).take(7).enumerate() {
        let dx = h * x;
        let f1 = f(c - dx);
        let f2 = f(c + dx);
        if !f1.is_finite() {
            return Err(QuadError::NonFinite { at: c - dx });
        }
        if !f2.is_finite() {
            return Err(QuadError::NonFinite { at: c + dx });
        }
        kronrod += w * (f1 + f2);
        if j % 2 == 1 {
            gauss += WG[j / 2] * (f1 + f2);
        }
    }
    let value = kronrod * h;
    let error = ((kronrod - gauss) * h).abs();
    Ok(Piece { a, b, value, error })
}

/// Globally adaptive integration of `f` over the finite interval `[a, b]`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: Tolerance) -> Result<Integral, QuadError> {
    if a == b {
        return Ok(Integral {
            value: 0.0,
            error: 0.0,
            intervals: 0,
        });
    }
    let first = kronrod15(&f, a, b)?;
    let mut value = first.value;
    let mut error = first.error;
    let mut heap = BinaryHeap::new();
    heap.push(first);
    while error > tol.abs.max(tol.rel * value.abs()) {
        if heap.len() >= tol.max_intervals {
            return Err(QuadError::NonConvergence {
                value,
                error,
                tolerance: tol.abs.max(tol.rel * value.abs()),
            });
        }
        let worst = heap.pop().expect("heap is never empty here");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // Interval collapsed to floating resolution.
            return Err(QuadError::NonConvergence {
                value,
                error,
                tolerance: tol.abs.max(tol.rel * value.abs()),
            });
        }
        let left = kronrod15(&f, worst.a, mid)?;
        let right = kronrod15(&f, mid, worst.b)?;
        value += left.value + right.value - worst.value;
        error += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
    }
    // Re-sum to shed the drift accumulated by incremental updates.
    let value = heap.iter().map(|p| p.value).sum();
    let error = heap.iter().map(|p| p.error).sum();
    Ok(Integral {
        value,
        error,
        intervals: heap.len(),
    })
}

/// A point inside `[a, b]` together with its exact distances to both ends.
/// Integrands with endpoint singularities should use the distances rather
/// than recomputing `y - a` or `b - y`.
#[derive(Debug, Clone, Copy)]
pub struct Point {
    pub y: f64,
    pub from_left: f64,
    pub to_right: f64,
}

/// Integrates `f` over `[a, b]` where `f(y)` behaves like
/// `(y - a)^left_exp` near `a` and `(b - y)^right_exp` near `b`.
///
/// The interval is split at the midpoint; each half is mapped to `[0, 1]`
/// with `distance = half_width * x^p`, `p = 1 / (1 + exp)` for negative
/// exponents, which removes the algebraic singularity.
pub fn integrate_singular<F: Fn(Point) -> f64>(
    f: F,
    a: f64,
    b: f64,
    left_exp: f64,
    right_exp: f64,
    tol: Tolerance,
) -> Result<Integral, QuadError> {
    assert!(b >= a, "integration bounds must be ordered");
    let width = b - a;
    let half = 0.5 * width;
    let power = |e: f64| if e < 0.0 { 1.0 / (1.0 + e) } else { 1.0 };
    let pl = power(left_exp);
    let pr = power(right_exp);
    let half_tol = Tolerance {
        abs: 0.5 * tol.abs,
        ..tol
    };
    let left = integrate(
        |x: f64| {
            let d = half * x.powf(pl);
            let jac = half * pl * x.powf(pl - 1.0);
            f(Point {
                y: a + d,
                from_left: d,
                to_right: width - d,
            }) * jac
        },
        0.0,
        1.0,
        half_tol,
    )?;
    let right = integrate(
        |x: f64| {
            let d = half * x.powf(pr);
            let jac = half * pr * x.powf(pr - 1.0);
            f(Point {
                y: b - d,
                from_left: width - d,
                to_right: d,
            }) * jac
        },
        0.0,
        1.0,
        half_tol,
    )?;
    Ok(Integral {
        value: left.value + right.value,
        error: left.error + right.error,
        intervals: left.intervals + right.intervals,
    })
}
