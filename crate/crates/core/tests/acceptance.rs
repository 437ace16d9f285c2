//! End-to-end acceptance criteria at their stated scales and tolerances.
//! Each test writes one `criterion N: PASS|FAIL ...` line to stdout.

use std::f64::consts::PI;
use std::io::Write;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use renewalshot::laws::{LawFamily, ResponseFamily};
use renewalshot::limits::{
    covariance_inverse_case, increment_dependence_gap, moments_inverse_case, simulate_inverse_subordinator_path,
    stationary_covariance, FracIntegrator,
};
use renewalshot::renewal::DelayKind;
use renewalshot::rng::StreamFactory;
use renewalshot::shotnoise::Regime;
use statrs::function::gamma::gamma;
use renewalshot::stable::abs_moment;
use renewalshot::verify::stats::covariance_estimate;
use renewalshot::verify::{run_scenario, simulate, GridSection, RegimeSection, RunSection, Scenario, TestKind, TestRecord};

fn report(criterion: u32, pass: bool, detail: &str) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    let mut out = std::io::stdout().lock();
    writeln!(out, "criterion {criterion}: {verdict} {detail}").unwrap();
    out.flush().unwrap();
}

fn scenario(law: LawFamily, response: ResponseFamily, regime: Regime, u: &[f64], t: f64, run: RunSection) -> Scenario {
    Scenario {
        law,
        response,
        regime: RegimeSection {
            name: regime,
            delay: DelayKind::ZeroDelayed,
        },
        grid: GridSection { u: u.to_vec(), t: vec![t] },
        run,
    }
}

fn records(s: &Scenario) -> Vec<TestRecord> {
    run_scenario(s, 1).expect("scenario runs").report.records
}

fn describe(r: &TestRecord) -> String {
    let mut parts = vec![r.test.clone()];
    if let Some(u) = r.u {
        parts.push(format!("u={u}"));
    }
    if let Some(u2) = r.u2 {
        parts.push(format!("u2={u2}"));
    }
    if let Some(k) = r.k {
        parts.push(format!("k={k}"));
    }
    if let Some(p) = r.p_value {
        parts.push(format!("p={p:.4}"));
    }
    if let Some(z) = r.z_score {
        parts.push(format!("z={z:.2}"));
    }
    parts.push(format!("stat={:.5}", r.statistic));
    parts.join(" ")
}

fn summarize(rs: &[TestRecord]) -> String {
    rs.iter().map(describe).collect::<Vec<_>>().join("; ")
}

const EXP1: LawFamily = LawFamily::Exponential { rate: 1.0 };

#[test]
fn criterion_1_renewal_clt() {
    let run = RunSection {
        replicates: 10_000,
        seed: 101,
        ..RunSection::default()
    };
    let s = scenario(EXP1, ResponseFamily::Constant { value: 1.0 }, Regime::A1, &[1.0], 1e4, run);
    let start = Instant::now();
    let ks = records(&s);
    let secs = start.elapsed().as_secs_f64();

    let mut run = RunSection {
        replicates: 100_000,
        seed: 102,
        plan: vec![TestKind::MeanAbsN],
        max_shots: 2e9,
        ..RunSection::default()
    };
    run.mean_abs_tolerance = 0.05;
    let s = scenario(EXP1, ResponseFamily::Constant { value: 1.0 }, Regime::A1, &[1.0], 1e4, run);
    let mean_abs = records(&s);
    let m = mean_abs[0].statistic;

    let ks_ok = ks[0].p_value.unwrap() > 0.01;
    let band_ok = (0.758..=0.838).contains(&m);
    let pass = ks_ok && band_ok && secs < 60.0;
    report(
        1,
        pass,
        &format!("{}; runtime {secs:.1}s; E|N(t)-t|/sqrt(t) = {m:.4} in [0.758, 0.838]", summarize(&ks)),
    );
    assert!(pass);
}

#[test]
fn criterion_2_a1_with_decay() {
    let run = RunSection {
        replicates: 10_000,
        seed: 201,
        plan: vec![TestKind::KsMarginal, TestKind::JointPairwiseLimit],
        energy_size: 5_000,
        max_shots: 1e9,
        ..RunSection::default()
    };
    let s = scenario(
        EXP1,
        ResponseFamily::PowerDecay { beta: 0.25, offset: 1.0 },
        Regime::A1,
        &[0.5, 1.0, 2.0],
        1e4,
        run,
    );
    let rs = records(&s);
    assert_eq!(rs.len(), 3 + 3);
    let pass = rs.iter().all(|r| r.p_value.unwrap() > 0.01);
    report(2, pass, &summarize(&rs));
    assert!(pass);
}

#[test]
fn criterion_3_a3_stable_limit() {
    let run = RunSection {
        replicates: 10_000,
        seed: 301,
        ..RunSection::default()
    };
    let s = scenario(
        LawFamily::Pareto {
            tail_index: 1.5,
            scale: 1.0,
        },
        ResponseFamily::PowerDecay { beta: 0.25, offset: 1.0 },
        Regime::A3,
        &[1.0],
        1e4,
        run,
    );
    let rs = records(&s);
    let pass = rs[0].p_value.unwrap() > 0.01;
    report(3, pass, &summarize(&rs));
    assert!(pass);
}

#[test]
fn criterion_4_infinite_mean_moments() {
    let run = RunSection {
        replicates: 100_000,
        seed: 401,
        plan: vec![TestKind::Moments { k_max: 2 }],
        ..RunSection::default()
    };
    let s = scenario(
        LawFamily::Pareto {
            tail_index: 0.5,
            scale: 1.0,
        },
        ResponseFamily::PowerDecay { beta: 0.25, offset: 1.0 },
        Regime::D4,
        &[1.0],
        1e4,
        run,
    );
    let rs = records(&s);
    let refs_ok = (rs[0].reference.unwrap() - 0.76276).abs() < 1e-5 && (rs[1].reference.unwrap() - 0.97118).abs() < 1e-5;
    let pass = refs_ok && rs.iter().all(|r| r.z_score.unwrap().abs() < 3.0);
    report(4, pass, &summarize(&rs));
    assert!(pass);
}

#[test]
fn criterion_5_exponential_limit() {
    let run = RunSection {
        replicates: 100_000,
        seed: 501,
        plan: vec![TestKind::ExponentialLimit],
        ..RunSection::default()
    };
    let s = scenario(
        LawFamily::Pareto {
            tail_index: 0.5,
            scale: 1.0,
        },
        ResponseFamily::ParetoTailMatch {
            tail_index: 0.5,
            scale: 1.0,
            multiplier: 1.0,
        },
        Regime::D4,
        &[1.0],
        1e4,
        run,
    );
    let rs = records(&s);
    let refs: Vec<f64> = rs.iter().filter_map(|r| r.k.map(|_| r.reference.unwrap())).collect();
    let pass = refs == [1.0, 2.0, 6.0, 24.0]
        && rs.iter().all(|r| match (r.p_value, r.z_score) {
            (Some(p), _) => p > 0.01,
            (None, Some(z)) => z.abs() < 3.0,
            _ => false,
        });
    report(5, pass, &summarize(&rs));
    assert!(pass);
}

#[test]
fn criterion_6_no_scaling() {
    let run = RunSection {
        replicates: 10_000,
        seed: 601,
        plan: vec![TestKind::KsMarginal, TestKind::JointPairwiseIndependence],
        ..RunSection::default()
    };
    let s = scenario(EXP1, ResponseFamily::ExpDecay { rate: 1.0 }, Regime::NoscaleDri, &[1.0, 2.0], 1e3, run);
    let rs = records(&s);
    let pass = rs.len() == 3 && rs.iter().all(|r| r.pass) && rs.iter().filter(|r| r.p_value.is_some()).all(|r| r.p_value.unwrap() > 0.01);
    report(6, pass, &summarize(&rs));
    assert!(pass);
}

/// `E|W|` at α = 1.5 from the integral representation
/// `(2A/α) ∫₀^∞ (1 − e^{−Bu} cos(Cu)) u^{−1−r/α} du`.
/// Substituting `u = v³` leaves the smooth integrand
/// `3(1 − e^{−Bv³}cos(Cv³))/v³`; Simpson's rule covers `[0, V]` and the
/// tail is `∫_V^∞ 3v⁻³ dv = 1.5/V²`.
fn abs_moment_by_quadrature() -> f64 {
    let (alpha, r) = (1.5_f64, 1.0_f64);
    let g = gamma(1.0 - alpha);
    let b = g * (PI * alpha / 2.0).cos();
    let c = g * (PI * alpha / 2.0).sin();
    let a = gamma(r + 1.0) / PI * (r * PI / 2.0).sin();
    let f = |v: f64| {
        if v == 0.0 {
            return 3.0 * b;
        }
        let u = v * v * v;
        3.0 * (1.0 - (-b * u).exp() * (c * u).cos()) / u
    };
    let upper = 8.0;
    let n = 400_000;
    let h = upper / n as f64;
    let mut sum = f(0.0) + f(upper);
    for i in 1..n {
        sum += f(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    let integral = sum * h / 3.0 + 1.5 / (upper * upper);
    2.0 * a / alpha * integral
}

#[test]
fn criterion_7_formula_cross_checks() {
    let mut notes = Vec::new();
    let mut pass = true;
    for alpha in [0.3, 0.5, 0.7] {
        let r0 = stationary_covariance(alpha, 0.0).unwrap();
        pass &= (r0 - 1.0).abs() < 1e-10;
        notes.push(format!("R_{alpha}(0)-1={:.1e}", r0 - 1.0));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(701);
    let mut worst: f64 = 0.0;
    for _ in 0..5 {
        let alpha: f64 = rng.random_range(0.2..0.9);
        let beta: f64 = rng.random_range(0.0..alpha);
        let u: f64 = rng.random_range(0.5..3.0);
        let cov = covariance_inverse_case(alpha, beta, u, u).unwrap();
        let m2 = moments_inverse_case(alpha, beta, u, 2).unwrap();
        worst = worst.max((cov - m2).abs());
    }
    pass &= worst < 1e-6;
    notes.push(format!("max|cov(t,t)-m2|={worst:.1e}"));
    let closed = abs_moment(1.5, 1.0).unwrap();
    let quad = abs_moment_by_quadrature();
    pass &= (closed - 3.4343).abs() < 1e-3 && (closed - quad).abs() < 1e-3;
    notes.push(format!("abs_moment={closed:.6} quadrature={quad:.6}"));
    let gap = increment_dependence_gap(0.5, 0.25, 1.0, 2.0, 3.0).unwrap();
    pass &= gap.abs() > 1e-3;
    notes.push(format!("gap={gap:.6}"));
    report(7, pass, &notes.join(" "));
    assert!(pass);
}

/// `Y_{α,α}` is self-similar with index 0, so the lag-s pair can be taken
/// at `(e^{-s}, 1)`. The D-grid step dominates the discretization bias;
/// 1e-5 keeps it well inside the sampling error.
#[test]
fn criterion_8_log_time_stationarity() {
    let (alpha, n) = (0.5, 10_000u64);
    let (delta_d, u_mesh) = (1e-5, 1e-4);
    let factory = StreamFactory::new(801);
    let integ = FracIntegrator::new(alpha, u_mesh, 1).unwrap();
    let pairs: Vec<(f64, f64)> = (0..n)
        .into_par_iter()
        .map_init(
            || integ.clone(),
            |integ, i| {
                let mut rng = factory.stream(1, i);
                let path = simulate_inverse_subordinator_path(alpha, 1.0, delta_d, u_mesh, &mut rng).unwrap();
                (integ.apply(&path, 0.5).unwrap(), integ.apply(&path, 1.0).unwrap())
            },
        )
        .collect();
    let early: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let late: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let mut pass = true;
    let mut notes = Vec::new();
    for (s, a) in [(0.0, &late), (2f64.ln(), &early)] {
        let c = covariance_estimate(a, &late).unwrap();
        let r = stationary_covariance(alpha, s).unwrap();
        let z = (c.estimate - r) / c.std_error;
        pass &= z.abs() < 3.0;
        notes.push(format!("s={s:.4} cov={:.4} R={r:.4} z={z:.2}", c.estimate));
    }
    report(8, pass, &notes.join("; "));
    assert!(pass);
}

fn null_scenario(law: LawFamily, response: ResponseFamily, regime: Regime, seed: u64) -> Scenario {
    let run = RunSection {
        replicates: 200,
        reference_size: Some(1_000),
        seed,
        plan: vec![TestKind::NullCalibration],
        ..RunSection::default()
    };
    scenario(law, response, regime, &[1.0], 100.0, run)
}

#[test]
fn criterion_9_determinism_and_calibration() {
    let mut notes = Vec::new();
    let mut pass = true;

    let run = RunSection {
        replicates: 500,
        seed: 901,
        plan: vec![TestKind::KsMarginal, TestKind::Moments { k_max: 2 }, TestKind::JointPairwiseLimit],
        energy_size: 300,
        subordinator_step: 1e-3,
        ..RunSection::default()
    };
    let s = scenario(
        LawFamily::Pareto {
            tail_index: 0.6,
            scale: 1.0,
        },
        ResponseFamily::PowerDecay { beta: 0.3, offset: 1.0 },
        Regime::D4,
        &[0.5, 1.0],
        1e3,
        run,
    );
    let bytes = |threads: usize| {
        let out = run_scenario(&s, threads).unwrap();
        let mut csv = Vec::new();
        out.report.write_csv(&mut csv).unwrap();
        let mut sim = Vec::new();
        simulate(&s, threads).unwrap().write_csv(&mut sim).unwrap();
        (out.report.to_json().unwrap(), csv, sim)
    };
    let one = bytes(1);
    let identical = [2, 4].iter().all(|&k| bytes(k) == one);
    pass &= identical;
    notes.push(format!("identical across 1/2/4 threads: {identical}"));

    let families = [
        ("A1 one-sample", EXP1, ResponseFamily::Constant { value: 1.0 }, Regime::A1),
        (
            "A3 two-sample",
            LawFamily::Pareto {
                tail_index: 1.5,
                scale: 1.0,
            },
            ResponseFamily::PowerDecay { beta: 0.25, offset: 1.0 },
            Regime::A3,
        ),
    ];
    for (name, law, h, regime) in families {
        let rejected = (0..1000u64)
            .filter(|&seed| {
                let rs = records(&null_scenario(law, h, regime, 10_000 + seed));
                rs.iter().any(|r| !r.pass)
            })
            .count();
        let rate = rejected as f64 / 1000.0;
        pass &= (0.001..=0.03).contains(&rate);
        notes.push(format!("{name} null rejection rate {rate:.3}"));
    }
    report(9, pass, &notes.join("; "));
    assert!(pass);
}
