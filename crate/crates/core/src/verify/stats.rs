//! Goodness-of-fit and moment tests used by the scenario runner.

use rand::RngCore;
use serde::{Deserialize, Serialize};

use super::VerifyError;
use crate::rng::open01;
use crate::special::{chi_square_sf, kolmogorov_sf, normal_cdf};

/// Kolmogorov–Smirnov distance with its asymptotic p-value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
}

fn sorted(x: &[f64]) -> Result<Vec<f64>, VerifyError> {
    if x.is_empty() {
        return Err(VerifyError::EmptySample);
    }
    if x.iter().any(|v| v.is_nan()) {
        return Err(VerifyError::NonFinite);
    }
    let mut v = x.to_vec();
    v.sort_by(f64::total_cmp);
    Ok(v)
}

/// Two-sample KS test; p from the Kolmogorov law at effective size `nm/(n+m)`.
pub fn ks_two_sample(x: &[f64], y: &[f64]) -> Result<KsResult, VerifyError> {
    let a = sorted(x)?;
    let b = sorted(y)?;
    let (n, m) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let v = a[i].min(b[j]);
        while i < a.len() && a[i] <= v {
            i += 1;
        }
        while j < b.len() && b[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / n - j as f64 / m).abs());
    }
    let ne = n * m / (n + m);
    Ok(KsResult {
        statistic: d,
        p_value: kolmogorov_sf(ks_lambda(d, ne)),
    })
}

fn ks_lambda(d: f64, ne: f64) -> f64 {
    ne.sqrt() * d
}

/// One-sample KS test against a continuous CDF.
pub fn ks_one_sample<F: Fn(f64) -> f64>(x: &[f64], cdf: F) -> Result<KsResult, VerifyError> {
    let a = sorted(x)?;
    let n = a.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &v) in a.iter().enumerate() {
        let f = cdf(v);
        d = d.max(f - i as f64 / n).max((i + 1) as f64 / n - f);
    }
    Ok(KsResult {
        statistic: d,
        p_value: kolmogorov_sf(ks_lambda(d, n)),
    })
}

pub fn ks_one_sample_normal(x: &[f64], mean: f64, variance: f64) -> Result<KsResult, VerifyError> {
    if !(variance > 0.0 && variance.is_finite()) {
        return Err(VerifyError::BadVariance(variance));
    }
    let sd = variance.sqrt();
    ks_one_sample(x, |v| normal_cdf((v - mean) / sd))
}

/// One-sample KS test against the exponential law with the given mean.
pub fn ks_one_sample_exp(x: &[f64], mean: f64) -> Result<KsResult, VerifyError> {
    if !(mean > 0.0 && mean.is_finite()) {
        return Err(VerifyError::BadVariance(mean));
    }
    ks_one_sample(x, |v| if v <= 0.0 { 0.0 } else { -(-v / mean).exp_m1() })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChiSquareResult {
    pub statistic: f64,
    pub df: f64,
    pub p_value: f64,
}

/// Pearson χ² goodness of fit; adjacent cells are pooled until every
/// expected count is at least 5.
pub fn chi_square_gof(observed: &[u64], probabilities: &[f64]) -> Result<ChiSquareResult, VerifyError> {
    if observed.len() != probabilities.len() || observed.is_empty() {
        return Err(VerifyError::EmptySample);
    }
    let n: u64 = observed.iter().sum();
    if n == 0 {
        return Err(VerifyError::EmptySample);
    }
    let mut cells: Vec<(f64, f64)> = Vec::new();
    let (mut o, mut e) = (0.0, 0.0);
    for (&obs, &p) in observed.iter().zip(probabilities) {
        o += obs as f64;
        e += p * n as f64;
        if e >= 5.0 {
            cells.push((o, e));
            o = 0.0;
            e = 0.0;
        }
    }
    if e > 0.0 || o > 0.0 {
        match cells.last_mut() {
            Some(last) => {
                last.0 += o;
                last.1 += e;
            }
            None => cells.push((o, e)),
        }
    }
    let stat: f64 = cells.iter().map(|&(o, e)| (o - e) * (o - e) / e).sum();
    let df = (cells.len() as f64 - 1.0).max(1.0);
    Ok(ChiSquareResult {
        statistic: stat,
        df,
        p_value: chi_square_sf(stat, df),
    })
}

/// χ² test that two samples of integer counts share one law.
pub fn chi_square_homogeneity(x: &[u64], y: &[u64]) -> Result<ChiSquareResult, VerifyError> {
    if x.is_empty() || y.is_empty() {
        return Err(VerifyError::EmptySample);
    }
    let max = *x.iter().chain(y).max().expect("nonempty");
    let mut cx = vec![0u64; max as usize + 1];
    let mut cy = vec![0u64; max as usize + 1];
    for &v in x {
        cx[v as usize] += 1;
    }
    for &v in y {
        cy[v as usize] += 1;
    }
    let (n, m) = (x.len() as f64, y.len() as f64);
    let share_x = n / (n + m);
    // Pool adjacent values until both expected counts reach 5.
    // Exact in integers so that swapping x and y pools the same cells.
    let (small, total) = (x.len().min(y.len()) as u64, (x.len() + y.len()) as u64);
    let mut cells: Vec<(f64, f64)> = Vec::new();
    let (mut a, mut b) = (0u64, 0u64);
    for (ox, oy) in cx.iter().zip(&cy) {
        a += ox;
        b += oy;
        if (a + b) * small >= 5 * total {
            cells.push((a as f64, b as f64));
            a = 0;
            b = 0;
        }
    }
    let (a, b) = (a as f64, b as f64);
    if a + b > 0.0 {
        match cells.last_mut() {
            Some(last) => {
                last.0 += a;
                last.1 += b;
            }
            None => cells.push((a, b)),
        }
    }
    let mut stat = 0.0;
    for &(a, b) in &cells {
        let tot = a + b;
        let (ea, eb) = (tot * share_x, tot * (1.0 - share_x));
        stat += (a - ea) * (a - ea) / ea + (b - eb) * (b - eb) / eb;
    }
    let df = (cells.len() as f64 - 1.0).max(1.0);
    Ok(ChiSquareResult {
        statistic: stat,
        df,
        p_value: if cells.len() < 2 { 1.0 } else { chi_square_sf(stat, df) },
    })
}

/// Moment estimate with a sectioning standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentTest {
    pub estimate: f64,
    pub std_error: f64,
    pub z: f64,
}

/// `(mean of x^k − reference) / s.e.`, the standard error taken from the
/// spread of `batches` contiguous batch means (robust to heavy tails).
pub fn moment_test(x: &[f64], k: u32, reference: f64, batches: usize) -> Result<MomentTest, VerifyError> {
    if k == 0 {
        return Err(VerifyError::InvalidScenario("moment order must be >= 1".into()));
    }
    let batches = batches.max(2);
    if x.len() < batches {
        return Err(VerifyError::EmptySample);
    }
    let pw = |v: f64| v.powi(k as i32);
    let size = x.len() / batches;
    let means: Vec<f64> = (0..batches)
        .map(|b| {
            let lo = b * size;
            let hi = if b + 1 == batches { x.len() } else { lo + size };
            x[lo..hi].iter().map(|&v| pw(v)).sum::<f64>() / (hi - lo) as f64
        })
        .collect();
    let estimate = x.iter().map(|&v| pw(v)).sum::<f64>() / x.len() as f64;
    if !estimate.is_finite() {
        return Err(VerifyError::NonFinite);
    }
    let bm = means.iter().sum::<f64>() / batches as f64;
    let var = means.iter().map(|m| (m - bm) * (m - bm)).sum::<f64>() / (batches - 1) as f64;
    let std_error = (var / batches as f64).sqrt();
    let diff = estimate - reference;
    let z = if std_error > 0.0 {
        diff / std_error
    } else if diff == 0.0 {
        0.0
    } else {
        diff.signum() * f64::INFINITY
    };
    Ok(MomentTest { estimate, std_error, z })
}

/// Median of `groups` contiguous group means.
pub fn median_of_means(x: &[f64], groups: usize) -> Result<f64, VerifyError> {
    let groups = groups.max(1);
    if x.len() < groups {
        return Err(VerifyError::EmptySample);
    }
    let size = x.len() / groups;
    let mut means: Vec<f64> = (0..groups)
        .map(|g| x[g * size..(g + 1) * size].iter().sum::<f64>() / size as f64)
        .collect();
    means.sort_by(f64::total_cmp);
    let mid = groups / 2;
    Ok(if groups % 2 == 1 {
        means[mid]
    } else {
        0.5 * (means[mid - 1] + means[mid])
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrelationTest {
    pub rho: f64,
    pub threshold: f64,
    pub pass: bool,
}

/// Pearson correlation against the `3/√n` band of independence.
pub fn correlation_test(x: &[f64], y: &[f64]) -> Result<CorrelationTest, VerifyError> {
    if x.len() != y.len() || x.len() < 3 {
        return Err(VerifyError::EmptySample);
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    let rho = if sxx > 0.0 && syy > 0.0 { sxy / (sxx * syy).sqrt() } else { 0.0 };
    let threshold = 3.0 / n.sqrt();
    Ok(CorrelationTest {
        rho,
        threshold,
        pass: rho.abs() < threshold,
    })
}

/// Sample covariance with a plug-in standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CovarianceEstimate {
    pub estimate: f64,
    pub std_error: f64,
}

pub fn covariance_estimate(x: &[f64], y: &[f64]) -> Result<CovarianceEstimate, VerifyError> {
    if x.len() != y.len() || x.len() < 3 {
        return Err(VerifyError::EmptySample);
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let prods: Vec<f64> = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).collect();
    let est = prods.iter().sum::<f64>() / (n - 1.0);
    let mp = prods.iter().sum::<f64>() / n;
    let var = prods.iter().map(|p| (p - mp) * (p - mp)).sum::<f64>() / (n - 1.0);
    Ok(CovarianceEstimate {
        estimate: est,
        std_error: (var / n).sqrt(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyResult {
    pub statistic: f64,
    pub p_value: f64,
    pub permutations: usize,
}

/// Sum of Euclidean distances over unordered pairs of one sample.
fn within_sum(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len();
    let mut total = 0.0;
    for i in 0..n {
        let (xi, yi) = (xs[i], ys[i]);
        let mut row = 0.0;
        for j in (i + 1)..n {
            let dx = xi - xs[j];
            let dy = yi - ys[j];
            row += (dx * dx + dy * dy).sqrt();
        }
        total += row;
    }
    total
}

fn cross_sum(ax: &[f64], ay: &[f64], bx: &[f64], by: &[f64]) -> f64 {
    let mut total = 0.0;
    for i in 0..ax.len() {
        let (xi, yi) = (ax[i], ay[i]);
        let mut row = 0.0;
        for j in 0..bx.len() {
            let dx = xi - bx[j];
            let dy = yi - by[j];
            row += (dx * dx + dy * dy).sqrt();
        }
        total += row;
    }
    total
}

/// Two-sample energy-distance test for bivariate samples, with a
/// permutation p-value.
///
/// The sum of all pooled pairwise distances is invariant under
/// relabelling, so each permutation only needs the two within-group sums.
pub fn energy_distance_test<R: RngCore + ?Sized>(
    x: &[[f64; 2]],
    y: &[[f64; 2]],
    permutations: usize,
    rng: &mut R,
) -> Result<EnergyResult, VerifyError> {
    if x.len() < 2 || y.len() < 2 {
        return Err(VerifyError::EmptySample);
    }
    let (n, m) = (x.len(), y.len());
    let (nf, mf) = (n as f64, m as f64);
    let mut px: Vec<f64> = x.iter().chain(y).map(|p| p[0]).collect();
    let mut py: Vec<f64> = x.iter().chain(y).map(|p| p[1]).collect();
    let stat_from = |s_aa: f64, s_bb: f64, s_ab: f64| {
        let e = 2.0 * s_ab / (nf * mf) - 2.0 * s_aa / (nf * nf) - 2.0 * s_bb / (mf * mf);
        e * nf * mf / (nf + mf)
    };
    let s_aa = within_sum(&px[..n], &py[..n]);
    let s_bb = within_sum(&px[n..], &py[n..]);
    let s_ab = cross_sum(&px[..n], &py[..n], &px[n..], &py[n..]);
    let total = s_aa + s_bb + s_ab;
    let observed = stat_from(s_aa, s_bb, s_ab);
    let mut exceed = 0usize;
    let len = n + m;
    for _ in 0..permutations {
        for i in (1..len).rev() {
            let j = ((open01(rng) * (i + 1) as f64) as usize).min(i);
            px.swap(i, j);
            py.swap(i, j);
        }
        let a = within_sum(&px[..n], &py[..n]);
        let b = within_sum(&px[n..], &py[n..]);
        if stat_from(a, b, total - a - b) >= observed {
            exceed += 1;
        }
    }
    Ok(EnergyResult {
        statistic: observed,
        p_value: (1 + exceed) as f64 / (1 + permutations) as f64,
        permutations,
    })
}

/// Empirical quantile by order statistic at level `p`.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let idx = ((p * sorted.len() as f64) as usize).min(sorted.len() - 1);
    sorted[idx]
}
