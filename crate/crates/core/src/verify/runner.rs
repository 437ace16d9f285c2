//! Scenario runner: simulates scaled statistics replicate-parallel and
//! tests them against their limits.

use std::f64::consts::PI;
use std::io::Write;

use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::report::{PlotData, RunOutput, TestRecord, TestReport};
use super::scenario::{Scenario, TestKind};
use super::stats::{
    chi_square_homogeneity, correlation_test, covariance_estimate, energy_distance_test, ks_one_sample_exp,
    ks_one_sample_normal, ks_two_sample, moment_test, quantile_sorted, KsResult,
};
use super::VerifyError;
use crate::laws::{IncrementLaw, SlowVarying};
use crate::limits::{
    marginal_sample_finite_mean, moments_inverse_case, sample_x_star, sample_x_star_centered,
    simulate_inverse_subordinator_path, simulate_levy_path, stationary_covariance, x_star_truncation, FracIntegrator,
};
use crate::renewal::{sample_path, DelayKind, RenewalPath};
use crate::rng::StreamFactory;
use crate::shotnoise::{scaled_statistic, scaling_g, solve_c, LimitSpec, Regime};
use crate::special::{gamma, normal_quantile};
use crate::stable::abs_moment;

const STATISTIC: u64 = 1;
const REFERENCE: u64 = 2;
const REVERSAL: u64 = 3;
const NULL: u64 = 4;
const PERMUTATION: u64 = 5;
const JOINT: u64 = 6;

/// Scaled statistics of all replicates at one horizon.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleMatrix {
    pub t: f64,
    pub u_grid: Vec<f64>,
    /// `rows[r][i]` is the statistic of replicate r at `u_grid[i]`.
    pub rows: Vec<Vec<f64>>,
    /// `N(t)` per replicate, when requested.
    pub counts: Option<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnSummary {
    pub u: f64,
    pub mean: f64,
    pub variance: f64,
    pub std_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleSummary {
    pub scenario: Scenario,
    pub seed: u64,
    pub t: f64,
    pub columns: Vec<ColumnSummary>,
}

impl SampleMatrix {
    pub fn column(&self, i: usize) -> Vec<f64> {
        self.rows.iter().map(|r| r[i]).collect()
    }

    /// CSV with header `replicate,u,value`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), csv::Error> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
        w.write_record(["replicate", "u", "value"])?;
        for (r, row) in self.rows.iter().enumerate() {
            for (u, v) in self.u_grid.iter().zip(row) {
                w.write_record([r.to_string(), u.to_string(), v.to_string()])?;
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn summary(&self, scenario: &Scenario) -> SampleSummary {
        let n = self.rows.len() as f64;
        let columns = (0..self.u_grid.len())
            .map(|i| {
                let c = self.column(i);
                let mean = c.iter().sum::<f64>() / n;
                let variance = c.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0).max(1.0);
                ColumnSummary {
                    u: self.u_grid[i],
                    mean,
                    variance,
                    std_error: (variance / n).sqrt(),
                }
            })
            .collect();
        SampleSummary {
            scenario: scenario.clone(),
            seed: scenario.run.seed,
            t: self.t,
            columns,
        }
    }
}

/// Marginal limit law at one u.
enum Marginal {
    Normal { mean: f64, variance: f64 },
    Sample(Vec<f64>),
}

struct Ctx<'a> {
    scenario: &'a Scenario,
    spec: LimitSpec,
    factory: StreamFactory,
}

fn needs_counts(s: &Scenario) -> bool {
    s.run.plan.contains(&TestKind::MeanAbsN)
}

fn u_max(s: &Scenario) -> f64 {
    *s.grid.u.last().expect("validated grid")
}

fn path_horizon(s: &Scenario, t: f64) -> f64 {
    if needs_counts(s) {
        u_max(s).max(1.0) * t
    } else {
        u_max(s) * t
    }
}

/// Expected number of arrivals on `[0, horizon]`, from the elementary
/// renewal theorem or its infinite-mean analogue.
fn expected_shots(law: &IncrementLaw, horizon: f64) -> f64 {
    if law.has_finite_mean() {
        return horizon / law.mean();
    }
    let a = law.tail_index();
    let l = match law.slow_varying() {
        SlowVarying::Constant { value } => value,
        _ => 1.0,
    };
    horizon.powf(a) / (l * gamma(1.0 - a) * gamma(1.0 + a))
}

/// Expected shot count of a whole run.
pub fn estimate_shots(s: &Scenario, spec: &LimitSpec) -> f64 {
    let law = spec.law();
    let n = s.run.replicates as f64;
    let m = s.reference_size() as f64;
    let mut total = 0.0;
    for &t in &s.grid.t {
        total += n * expected_shots(law, path_horizon(s, t));
        if s.run.plan.contains(&TestKind::TimeReversal) {
            total += n * [0.25, 0.5, 1.0].iter().map(|f| expected_shots(law, t) + expected_shots(law, f * t)).sum::<f64>();
        }
        if !spec.regime().is_scaling() {
            let draws_per_u = m * s.run.plan.len() as f64;
            for &u in &s.grid.u {
                let horizon = match spec.regime() {
                    Regime::NoscaleDri => x_star_truncation(law, spec.response(), s.run.x_star_tolerance).unwrap_or(0.0),
                    _ => u * t,
                };
                total += draws_per_u * expected_shots(law, horizon);
            }
        }
    }
    total
}

fn simulate_at(ctx: &Ctx, t_idx: usize, t: f64) -> Result<SampleMatrix, VerifyError> {
    let s = ctx.scenario;
    let horizon = path_horizon(s, t);
    let want_counts = needs_counts(s);
    let factory = ctx.factory.child(t_idx as u64);
    let results: Vec<(Vec<f64>, usize)> = (0..s.run.replicates as u64)
        .into_par_iter()
        .map(|r| {
            let mut rng = factory.stream(STATISTIC, r);
            let path = sample_path(ctx.spec.law(), horizon, s.regime.delay, &mut rng)?;
            let stats = scaled_statistic(&ctx.spec, &path, &s.grid.u, t)?;
            let count = if want_counts { path.count(t)? } else { 0 };
            Ok((stats, count))
        })
        .collect::<Result<_, VerifyError>>()?;
    let counts = want_counts.then(|| results.iter().map(|r| r.1).collect());
    Ok(SampleMatrix {
        t,
        u_grid: s.grid.u.clone(),
        rows: results.into_iter().map(|r| r.0).collect(),
        counts,
    })
}

/// Scaled statistics at the largest horizon of the ladder.
pub fn simulate(s: &Scenario, threads: usize) -> Result<SampleMatrix, VerifyError> {
    let spec = s.validate()?;
    let mut only_last = s.clone();
    only_last.grid.t = vec![*s.grid.t.last().expect("validated ladder")];
    let est = estimate_shots(&only_last, &spec) - reference_shots(&only_last, &spec);
    check_cap(est, s.run.max_shots)?;
    let ctx = Ctx {
        scenario: s,
        spec,
        factory: StreamFactory::new(s.run.seed),
    };
    let t_idx = s.grid.t.len() - 1;
    with_pool(threads, || simulate_at(&ctx, t_idx, s.grid.t[t_idx]))
}

/// Renewal path of replicate `r` at the largest horizon, drawn from the
/// same stream `simulate` uses.
pub fn replicate_path(s: &Scenario, r: u64) -> Result<RenewalPath, VerifyError> {
    let spec = s.validate()?;
    let t_idx = s.grid.t.len() - 1;
    let mut rng = StreamFactory::new(s.run.seed).child(t_idx as u64).stream(STATISTIC, r);
    Ok(sample_path(spec.law(), path_horizon(s, s.grid.t[t_idx]), s.regime.delay, &mut rng)?)
}

fn reference_shots(s: &Scenario, spec: &LimitSpec) -> f64 {
    let mut bare = s.clone();
    bare.run.plan.clear();
    estimate_shots(s, spec) - estimate_shots(&bare, spec)
}

fn check_cap(estimated: f64, cap: f64) -> Result<(), VerifyError> {
    if estimated > cap {
        Err(VerifyError::ResourceCap { estimated, cap })
    } else {
        Ok(())
    }
}

fn with_pool<T: Send>(threads: usize, f: impl FnOnce() -> Result<T, VerifyError> + Send) -> Result<T, VerifyError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| VerifyError::ThreadPool(e.to_string()))?;
    pool.install(f)
}

/// Runs every plan item at every horizon of the ladder.
///
/// Replicates and reference draws each own a stream addressed by their
/// index, and results are gathered in index order, so the report does not
/// depend on `threads`.
pub fn run_scenario(s: &Scenario, threads: usize) -> Result<RunOutput, VerifyError> {
    let spec = s.validate()?;
    check_cap(estimate_shots(s, &spec), s.run.max_shots)?;
    let ctx = Ctx {
        scenario: s,
        spec,
        factory: StreamFactory::new(s.run.seed),
    };
    with_pool(threads, || run_inner(&ctx))
}

fn run_inner(ctx: &Ctx) -> Result<RunOutput, VerifyError> {
    let s = ctx.scenario;
    let mut records = Vec::new();
    let mut plots = Vec::new();
    for (t_idx, &t) in s.grid.t.iter().enumerate() {
        let samples = simulate_at(ctx, t_idx, t)?;
        let mut joint: Option<Vec<Vec<f64>>> = None;
        for &kind in &s.run.plan {
            match kind {
                TestKind::KsMarginal => ks_marginal(ctx, t_idx, &samples, &mut records, &mut plots)?,
                TestKind::Moments { k_max } => moments(ctx, &samples, k_max, &mut records)?,
                TestKind::JointPairwiseIndependence => independence(&samples, &mut records)?,
                TestKind::JointPairwiseLimit => {
                    if joint.is_none() {
                        joint = Some(limit_joint_sample(ctx, t_idx, t)?);
                    }
                    joint_limit(ctx, t_idx, &samples, joint.as_ref().expect("just set"), &mut records)?
                }
                TestKind::TimeReversal => time_reversal(ctx, t_idx, t, &mut records)?,
                TestKind::SelfSimilarity => self_similarity(ctx, &samples, &mut records)?,
                TestKind::StationarityLogtime => logtime(ctx, &samples, &mut records)?,
                TestKind::MeanAbsN => mean_abs(ctx, &samples, &mut records)?,
                TestKind::ExponentialLimit => exponential_limit(ctx, &samples, &mut records)?,
                TestKind::NullCalibration => null_calibration(ctx, t_idx, t, &mut records)?,
            }
        }
    }
    let verdict = records.iter().all(|r| r.pass);
    let run = &s.run;
    let report = TestReport {
        scenario: s.clone(),
        seed: run.seed,
        records,
        verdict,
        tolerance_note: format!(
            "finite-t tolerances are calibration choices: p > {}, |z| < {}, mean-abs relative error < {}",
            run.significance, run.z_threshold, run.mean_abs_tolerance
        ),
    };
    Ok(RunOutput { report, plots })
}

fn base_record(kind: &str, t: f64, u: Option<f64>) -> TestRecord {
    let mut r = TestRecord::new(kind);
    r.t = Some(t);
    r.u = u;
    r
}

fn ks_record(kind: &str, t: f64, u: f64, ks: KsResult, sig: f64) -> TestRecord {
    let mut r = base_record(kind, t, Some(u));
    r.statistic = ks.statistic;
    r.p_value = Some(ks.p_value);
    r.pass = ks.p_value > sig;
    r
}

fn parallel_draws<F>(size: usize, factory: StreamFactory, purpose: u64, f: F) -> Result<Vec<f64>, VerifyError>
where
    F: Fn(&mut crate::rng::Stream) -> Result<f64, VerifyError> + Sync,
{
    (0..size as u64)
        .into_par_iter()
        .map(|i| f(&mut factory.stream(purpose, i)))
        .collect()
}

/// Variance of the Gaussian limit `Y_{2,β}(u)`.
fn gaussian_variance(beta: f64, u: f64) -> f64 {
    u.powf(1.0 - 2.0 * beta) / (1.0 - 2.0 * beta)
}

fn marginal_reference(ctx: &Ctx, factory: StreamFactory, t: f64, u_idx: usize, purpose: u64) -> Result<Marginal, VerifyError> {
    let s = ctx.scenario;
    let spec = &ctx.spec;
    let u = s.grid.u[u_idx];
    let shift = s.run.reference_shift;
    let size = s.reference_size();
    let factory = factory.child(u_idx as u64);
    let (a, b) = (spec.alpha(), spec.beta());
    match spec.regime() {
        Regime::A1 | Regime::A2 => Ok(Marginal::Normal {
            mean: shift,
            variance: gaussian_variance(b, u),
        }),
        Regime::A3 => Ok(Marginal::Sample(parallel_draws(size, factory, purpose, |rng| {
            Ok(marginal_sample_finite_mean(a, b, u, rng)? + shift)
        })?)),
        Regime::D4 => {
            let integ = FracIntegrator::new(b, s.run.subordinator_u_mesh, s.run.drop_cells)?;
            let draws: Vec<f64> = (0..size as u64)
                .into_par_iter()
                .map_init(
                    || integ.clone(),
                    |integ, i| {
                        let mut rng = factory.stream(purpose, i);
                        let path = simulate_inverse_subordinator_path(a, u, s.run.subordinator_step, s.run.subordinator_u_mesh, &mut rng)?;
                        Ok(integ.apply(&path, u)? + shift)
                    },
                )
                .collect::<Result<_, VerifyError>>()?;
            Ok(Marginal::Sample(draws))
        }
        Regime::NoscaleDri => {
            let trunc = x_star_truncation(spec.law(), spec.response(), s.run.x_star_tolerance)?;
            Ok(Marginal::Sample(parallel_draws(size, factory, purpose, |rng| {
                Ok(sample_x_star(spec.law(), spec.response(), trunc, rng)? + shift)
            })?))
        }
        Regime::NoscaleCentered => Ok(Marginal::Sample(parallel_draws(size, factory, purpose, |rng| {
            Ok(sample_x_star_centered(spec.law(), spec.response(), u * t, false, rng)? + shift)
        })?)),
    }
}

fn ks_marginal(
    ctx: &Ctx,
    t_idx: usize,
    samples: &SampleMatrix,
    records: &mut Vec<TestRecord>,
    plots: &mut Vec<PlotData>,
) -> Result<(), VerifyError> {
    let s = ctx.scenario;
    let factory = ctx.factory.child(t_idx as u64);
    for (i, &u) in s.grid.u.iter().enumerate() {
        let x = samples.column(i);
        let reference = marginal_reference(ctx, factory, samples.t, i, REFERENCE)?;
        let mut sorted_x = x.clone();
        sorted_x.sort_by(f64::total_cmp);
        let m = s.run.plot_quantiles.min(x.len()).max(1);
        let levels: Vec<f64> = (0..m).map(|j| (j as f64 + 0.5) / m as f64).collect();
        let stat_q = levels.iter().map(|&p| quantile_sorted(&sorted_x, p)).collect();
        let (ks, ref_q, note) = match reference {
            Marginal::Normal { mean, variance } => (
                ks_one_sample_normal(&x, mean, variance)?,
                levels.iter().map(|&p| mean + variance.sqrt() * normal_quantile(p)).collect(),
                format!("exact normal, variance {variance}"),
            ),
            Marginal::Sample(y) => {
                let mut sy = y.clone();
                sy.sort_by(f64::total_cmp);
                (
                    ks_two_sample(&x, &y)?,
                    levels.iter().map(|&p| quantile_sorted(&sy, p)).collect(),
                    format!("two-sample against {} limit draws", y.len()),
                )
            }
        };
        let mut r = ks_record("ks_marginal", samples.t, u, ks, s.run.significance);
        r.note = note;
        records.push(r);
        plots.push(PlotData {
            t: samples.t,
            u,
            levels,
            statistic: stat_q,
            reference: ref_q,
        });
    }
    Ok(())
}

/// Raw moments `m_0..=m_kmax` of the limit at u, where known.
fn limit_moments(ctx: &Ctx, u: f64, k_max: u32) -> Result<Vec<Option<f64>>, VerifyError> {
    let spec = &ctx.spec;
    let (a, b) = (spec.alpha(), spec.beta());
    let mut m = vec![Some(1.0)];
    for k in 1..=k_max {
        let v = match spec.regime() {
            Regime::A1 | Regime::A2 => {
                let var = gaussian_variance(b, u);
                if k % 2 == 1 {
                    Some(0.0)
                } else {
                    let double_fact: f64 = (1..k).step_by(2).map(|j| j as f64).product();
                    Some(var.powi(k as i32 / 2) * double_fact)
                }
            }
            Regime::A3 => (k == 1).then_some(0.0),
            Regime::D4 => Some(moments_inverse_case(a, b, u, k)?),
            Regime::NoscaleDri => (k == 1).then(|| spec.response().integral(f64::INFINITY) / spec.law().mean()),
            Regime::NoscaleCentered => (k == 1).then_some(0.0),
        };
        m.push(v);
    }
    Ok(m)
}

/// Moments of `Y + shift` from those of Y.
fn shifted(m: &[Option<f64>], shift: f64) -> Vec<Option<f64>> {
    (0..m.len())
        .map(|k| {
            let mut acc = 0.0;
            let mut binom = 1.0;
            for j in 0..=k {
                acc += binom * m[j]? * shift.powi((k - j) as i32);
                binom = binom * (k - j) as f64 / (j + 1) as f64;
            }
            Some(acc)
        })
        .collect()
}

fn moment_record(ctx: &Ctx, t: f64, u: f64, x: &[f64], k: u32, reference: f64) -> Result<TestRecord, VerifyError> {
    let run = &ctx.scenario.run;
    let mut r = base_record("moments", t, Some(u));
    r.k = Some(k);
    r.reference = Some(reference);
    match moment_test(x, k, reference, run.moment_batches) {
        Ok(mt) => {
            r.statistic = mt.estimate;
            r.z_score = Some(mt.z);
            r.pass = mt.z.abs() < run.z_threshold;
            r.note = format!("sectioned standard error {}", mt.std_error);
        }
        Err(VerifyError::NonFinite) => {
            r.statistic = f64::MAX;
            r.note = "empirical moment is not finite".into();
        }
        Err(e) => return Err(e),
    }
    Ok(r)
}

fn moments(ctx: &Ctx, samples: &SampleMatrix, k_max: u32, records: &mut Vec<TestRecord>) -> Result<(), VerifyError> {
    let shift = ctx.scenario.run.reference_shift;
    for (i, &u) in samples.u_grid.iter().enumerate() {
        let x = samples.column(i);
        let refs = shifted(&limit_moments(ctx, u, k_max)?, shift);
        for k in 1..=k_max {
            if let Some(reference) = refs[k as usize] {
                records.push(moment_record(ctx, samples.t, u, &x, k, reference)?);
            }
        }
    }
    Ok(())
}

fn pairs(n: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..n).flat_map(move |i| ((i + 1)..n).map(move |j| (i, j)))
}

fn independence(samples: &SampleMatrix, records: &mut Vec<TestRecord>) -> Result<(), VerifyError> {
    for (i, j) in pairs(samples.u_grid.len()) {
        let c = correlation_test(&samples.column(i), &samples.column(j))?;
        let mut r = base_record("joint_pairwise_independence", samples.t, Some(samples.u_grid[i]));
        r.u2 = Some(samples.u_grid[j]);
        r.statistic = c.rho;
        r.reference = Some(0.0);
        r.pass = c.pass;
        r.note = format!("|rho| < 3/sqrt(n) = {}", c.threshold);
        records.push(r);
    }
    Ok(())
}

/// Joint draws of the limit at every grid point, one row per draw.
fn limit_joint_sample(ctx: &Ctx, t_idx: usize, t: f64) -> Result<Vec<Vec<f64>>, VerifyError> {
    let s = ctx.scenario;
    let spec = &ctx.spec;
    let run = &s.run;
    let size = s.reference_size().min(run.energy_size);
    let factory = ctx.factory.child(t_idx as u64);
    let us = &s.grid.u;
    let top = u_max(s);
    let (a, b) = (spec.alpha(), spec.beta());
    let shift = run.reference_shift;
    let rows: Vec<Vec<f64>> = match spec.regime() {
        Regime::A1 | Regime::A2 | Regime::A3 => {
            let integ = FracIntegrator::new(b, run.levy_mesh, run.drop_cells)?;
            (0..size as u64)
                .into_par_iter()
                .map_init(
                    || integ.clone(),
                    |integ, i| {
                        let mut rng = factory.stream(JOINT, i);
                        let path = simulate_levy_path(a, top, run.levy_mesh, &mut rng)?;
                        us.iter().map(|&u| Ok(integ.apply(&path, u)? + shift)).collect()
                    },
                )
                .collect::<Result<_, VerifyError>>()?
        }
        Regime::D4 => {
            let integ = FracIntegrator::new(b, run.subordinator_u_mesh, run.drop_cells)?;
            (0..size as u64)
                .into_par_iter()
                .map_init(
                    || integ.clone(),
                    |integ, i| {
                        let mut rng = factory.stream(JOINT, i);
                        let path = simulate_inverse_subordinator_path(a, top, run.subordinator_step, run.subordinator_u_mesh, &mut rng)?;
                        us.iter().map(|&u| Ok(integ.apply(&path, u)? + shift)).collect()
                    },
                )
                .collect::<Result<_, VerifyError>>()?
        }
        Regime::NoscaleDri | Regime::NoscaleCentered => {
            // The no-scaling limits are i.i.d. copies across u.
            let trunc = x_star_truncation(spec.law(), spec.response(), run.x_star_tolerance).unwrap_or(0.0);
            (0..size as u64)
                .into_par_iter()
                .map(|i| {
                    let mut rng = factory.stream(JOINT, i);
                    us.iter()
                        .map(|&u| {
                            let v = if spec.regime() == Regime::NoscaleDri {
                                sample_x_star(spec.law(), spec.response(), trunc, &mut rng)?
                            } else {
                                sample_x_star_centered(spec.law(), spec.response(), u * t, false, &mut rng)?
                            };
                            Ok(v + shift)
                        })
                        .collect()
                })
                .collect::<Result<_, VerifyError>>()?
        }
    };
    Ok(rows)
}

fn joint_limit(
    ctx: &Ctx,
    t_idx: usize,
    samples: &SampleMatrix,
    joint: &[Vec<f64>],
    records: &mut Vec<TestRecord>,
) -> Result<(), VerifyError> {
    let run = &ctx.scenario.run;
    let size = samples.rows.len().min(run.energy_size);
    let factory = ctx.factory.child(t_idx as u64);
    for (p, (i, j)) in pairs(samples.u_grid.len()).enumerate() {
        let x: Vec<[f64; 2]> = samples.rows[..size].iter().map(|r| [r[i], r[j]]).collect();
        let y: Vec<[f64; 2]> = joint.iter().map(|r| [r[i], r[j]]).collect();
        let e = energy_distance_test(&x, &y, run.permutations, &mut factory.stream(PERMUTATION, p as u64))?;
        let mut r = base_record("joint_pairwise_limit", samples.t, Some(samples.u_grid[i]));
        r.u2 = Some(samples.u_grid[j]);
        r.statistic = e.statistic;
        r.p_value = Some(e.p_value);
        r.pass = e.p_value > run.significance;
        r.note = format!("energy distance, {} vs {} pairs, {} permutations", x.len(), y.len(), e.permutations);
        records.push(r);
    }
    Ok(())
}

fn time_reversal(ctx: &Ctx, t_idx: usize, t: f64, records: &mut Vec<TestRecord>) -> Result<(), VerifyError> {
    let s = ctx.scenario;
    let law = ctx.spec.law();
    let factory = ctx.factory.child(t_idx as u64);
    for (p, frac) in [0.25, 0.5, 1.0].into_iter().enumerate() {
        let len = frac * t;
        let draws: Vec<(u64, u64)> = (0..s.run.replicates as u64)
            .into_par_iter()
            .map(|r| {
                let mut rng = factory.child(p as u64).stream(REVERSAL, r);
                let a = sample_path(law, t, DelayKind::Stationary, &mut rng)?;
                let b = sample_path(law, len, DelayKind::Stationary, &mut rng)?;
                Ok((a.count_increment(t - len, t)? as u64, b.count(len)? as u64))
            })
            .collect::<Result<_, VerifyError>>()?;
        let back: Vec<u64> = draws.iter().map(|d| d.0).collect();
        let fwd: Vec<u64> = draws.iter().map(|d| d.1).collect();
        let c = chi_square_homogeneity(&back, &fwd)?;
        let mut r = base_record("time_reversal", t, Some(frac));
        r.statistic = c.statistic;
        r.p_value = Some(c.p_value);
        r.pass = c.p_value > s.run.significance;
        r.note = format!("N*(t)-N*((t-s)-) vs N*(s) with s = {len}, chi-square df {}", c.df);
        records.push(r);
    }
    Ok(())
}

/// Self-similarity exponent of the limit in u.
fn hurst(spec: &LimitSpec) -> f64 {
    match spec.regime() {
        Regime::A1 | Regime::A2 | Regime::A3 => 1.0 / spec.alpha() - spec.beta(),
        Regime::D4 => spec.alpha() - spec.beta(),
        Regime::NoscaleDri | Regime::NoscaleCentered => 0.0,
    }
}

fn self_similarity(ctx: &Ctx, samples: &SampleMatrix, records: &mut Vec<TestRecord>) -> Result<(), VerifyError> {
    let h = hurst(&ctx.spec);
    let u0 = samples.u_grid[0];
    // Disjoint halves keep the two samples independent.
    let base: Vec<f64> = samples.rows.iter().step_by(2).map(|r| r[0] / u0.powf(h)).collect();
    for (i, &u) in samples.u_grid.iter().enumerate().skip(1) {
        let other: Vec<f64> = samples.rows.iter().skip(1).step_by(2).map(|r| r[i] / u.powf(h)).collect();
        let ks = ks_two_sample(&base, &other)?;
        let mut r = ks_record("self_similarity", samples.t, u, ks, ctx.scenario.run.significance);
        r.u2 = Some(u0);
        r.reference = Some(h);
        r.note = format!("statistic(u)/u^H vs statistic(u0)/u0^H with H = {h}");
        records.push(r);
    }
    Ok(())
}

fn logtime(ctx: &Ctx, samples: &SampleMatrix, records: &mut Vec<TestRecord>) -> Result<(), VerifyError> {
    let alpha = ctx.spec.alpha();
    let z_thr = ctx.scenario.run.z_threshold;
    for (i, j) in pairs(samples.u_grid.len()) {
        let (ui, uj) = (samples.u_grid[i], samples.u_grid[j]);
        let lag = (uj / ui).ln();
        let reference = stationary_covariance(alpha, lag)?;
        let c = covariance_estimate(&samples.column(i), &samples.column(j))?;
        let z = (c.estimate - reference) / c.std_error;
        let mut r = base_record("stationarity_logtime", samples.t, Some(ui));
        r.u2 = Some(uj);
        r.statistic = c.estimate;
        r.reference = Some(reference);
        r.z_score = Some(z);
        r.pass = z.abs() < z_thr;
        r.note = format!("covariance at log-lag {lag}");
        records.push(r);
    }
    Ok(())
}

fn mean_abs(ctx: &Ctx, samples: &SampleMatrix, records: &mut Vec<TestRecord>) -> Result<(), VerifyError> {
    let spec = &ctx.spec;
    let law = spec.law();
    let t = samples.t;
    let mu = law.mean();
    let (scale, reference) = match spec.regime() {
        Regime::A1 => (t.sqrt(), (law.variance() * 2.0 / (PI * mu.powi(3))).sqrt()),
        Regime::A2 => (solve_c(law, t)?, (2.0 / (PI * mu.powi(3))).sqrt()),
        Regime::A3 => (solve_c(law, t)?, abs_moment(spec.alpha(), 1.0)? / mu.powf(1.0 + 1.0 / spec.alpha())),
        _ => unreachable!("validated plan"),
    };
    let counts = samples.counts.as_ref().expect("counts requested for mean_abs_n");
    let dev: Vec<f64> = counts.iter().map(|&c| (c as f64 - t / mu).abs() / scale).collect();
    let n = dev.len() as f64;
    let mean = dev.iter().sum::<f64>() / n;
    let var = dev.iter().map(|d| (d - mean) * (d - mean)).sum::<f64>() / (n - 1.0);
    let rel = (mean - reference) / reference;
    let mut r = base_record("mean_abs_n", t, None);
    r.statistic = mean;
    r.reference = Some(reference);
    r.z_score = Some((mean - reference) / (var / n).sqrt());
    r.pass = rel.abs() < ctx.scenario.run.mean_abs_tolerance;
    r.note = format!("relative error {rel}");
    records.push(r);
    Ok(())
}

fn exponential_limit(ctx: &Ctx, samples: &SampleMatrix, records: &mut Vec<TestRecord>) -> Result<(), VerifyError> {
    let spec = &ctx.spec;
    let run = &ctx.scenario.run;
    let c = spec.response().tail_ratio_limit(spec.law()).expect("validated plan");
    let t = samples.t;
    let pre = spec.law().tail_prob(t) / spec.response().eval(t);
    let mut fact = 1.0;
    let mut raw = vec![Some(1.0)];
    for k in 1..=4u32 {
        fact *= k as f64;
        raw.push(Some(c.powi(k as i32) * fact));
    }
    let refs = shifted(&raw, run.reference_shift);
    for (i, &u) in samples.u_grid.iter().enumerate() {
        let x: Vec<f64> = samples.column(i).iter().map(|v| v / pre).collect();
        let centred: Vec<f64> = x.iter().map(|v| v - run.reference_shift).collect();
        let mut r = ks_record("exponential_limit", t, u, ks_one_sample_exp(&centred, c)?, run.significance);
        r.reference = Some(c);
        r.note = format!("X(ut) against the exponential law with mean c = {c}");
        records.push(r);
        for k in 1..=4u32 {
            let mut m = moment_record(ctx, t, u, &x, k, refs[k as usize].expect("all known"))?;
            m.test = "exponential_limit_moment".into();
            records.push(m);
        }
    }
    Ok(())
}

fn null_calibration(ctx: &Ctx, t_idx: usize, t: f64, records: &mut Vec<TestRecord>) -> Result<(), VerifyError> {
    let s = ctx.scenario;
    let run = &s.run;
    let factory = ctx.factory.child(t_idx as u64);
    for (i, &u) in s.grid.u.iter().enumerate() {
        let (ks, note) = match marginal_reference(ctx, factory, t, i, NULL)? {
            Marginal::Normal { mean, variance } => {
                let x = parallel_draws(s.reference_size(), factory.child(i as u64), NULL, |rng| {
                    let z: f64 = StandardNormal.sample(rng);
                    Ok(mean + variance.sqrt() * z)
                })?;
                (ks_one_sample_normal(&x, mean, variance)?, "reference draws against the exact normal law")
            }
            Marginal::Sample(x) => {
                let Marginal::Sample(y) = marginal_reference(ctx, factory.child(1 << 20), t, i, NULL)? else {
                    unreachable!("same regime, same reference kind")
                };
                (ks_two_sample(&x, &y)?, "two independent reference samples")
            }
        };
        let mut r = ks_record("null_calibration", t, u, ks, run.significance);
        r.note = note.into();
        records.push(r);
    }
    Ok(())
}

/// Scaling g(t) of the scenario, for reporting.
pub fn scaling_of(s: &Scenario, t: f64) -> Result<f64, VerifyError> {
    Ok(scaling_g(&s.spec()?, t)?)
}
