//! Monte Carlo invariants of the samplers, the renewal paths and the limit
//! processes, at their stated sample sizes.

use rayon::prelude::*;
use renewalshot::laws::{IncrementLaw, LawFamily, ResponseFamily};
use renewalshot::limits::{
    marginal_sample_finite_mean, moments_inverse_case, simulate_inverse_subordinator_path, simulate_levy_path,
    stationary_covariance, FracIntegrator, ProcessPath,
};
use renewalshot::renewal::{sample_path, DelayKind};
use renewalshot::rng::{Stream, StreamFactory};
use renewalshot::shotnoise::Regime;
use renewalshot::stable::{abs_moment, sample_stable, sample_subordinator_increment, Skew, StableSpec};
use renewalshot::verify::stats::{
    chi_square_gof, covariance_estimate, ks_one_sample, ks_two_sample, median_of_means, moment_test,
};
use renewalshot::verify::{run_scenario, GridSection, RegimeSection, RunSection, Scenario, TestKind};
use statrs::distribution::{Discrete, Poisson};
use statrs::function::gamma::gamma;

fn draws(n: usize, seed: u64, f: impl Fn(&mut Stream) -> f64 + Sync) -> Vec<f64> {
    let factory = StreamFactory::new(seed);
    (0..n as u64).into_par_iter().map(|i| f(&mut factory.stream(0, i))).collect()
}

fn mean_var(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let m = x.iter().sum::<f64>() / n;
    (m, x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (n - 1.0))
}

fn families() -> Vec<LawFamily> {
    vec![
        LawFamily::Exponential { rate: 2.0 },
        LawFamily::Uniform { low: 0.5, high: 1.5 },
        LawFamily::Gamma { shape: 2.5, rate: 1.5 },
        LawFamily::Gamma { shape: 0.6, rate: 1.0 },
        LawFamily::Pareto {
            tail_index: 1.5,
            scale: 1.0,
        },
        LawFamily::Pareto {
            tail_index: 0.5,
            scale: 2.0,
        },
        LawFamily::Pareto {
            tail_index: 5.0,
            scale: 1.0,
        },
    ]
}

#[test]
fn increment_samplers_match_tail() {
    for (i, family) in families().into_iter().enumerate() {
        let law = IncrementLaw::new(family).unwrap();
        let x = draws(100_000, 10 + i as u64, |r| law.sample_increment(r));
        let ks = ks_one_sample(&x, |t| 1.0 - law.tail_prob(t)).unwrap();
        assert!(ks.p_value > 0.01, "{family:?}: {ks:?}");
    }
}

#[test]
fn increment_mean_and_variance() {
    for (i, family) in families().into_iter().enumerate() {
        let law = IncrementLaw::new(family).unwrap();
        if !law.variance().is_finite() {
            continue;
        }
        let x = draws(1_000_000, 20 + i as u64, |r| law.sample_increment(r));
        let n = x.len() as f64;
        let (m, v) = mean_var(&x);
        let m4 = x.iter().map(|y| (y - m).powi(4)).sum::<f64>() / n;
        assert!((m - law.mean()).abs() < 4.0 * (v / n).sqrt(), "{family:?}: mean {m}");
        assert!((v - law.variance()).abs() < 4.0 * ((m4 - v * v) / n).sqrt(), "{family:?}: variance {v}");
    }
}

#[test]
fn stationary_delay_histogram() {
    for (i, family) in families().into_iter().enumerate() {
        let law = IncrementLaw::new(family).unwrap();
        if !law.variance().is_finite() {
            continue;
        }
        let x = draws(100_000, 30 + i as u64, |r| law.stationary_delay_sample(r).unwrap());
        let top = 4.0 * (law.mean() + law.variance() / law.mean());
        let edges: Vec<f64> = (0..=49).map(|j| top * j as f64 / 49.0).collect();
        let mut counts = vec![0u64; 50];
        for v in &x {
            let j = edges.partition_point(|e| e <= v).saturating_sub(1);
            counts[j.min(49)] += 1;
        }
        let cdf = |t: f64| law.stationary_delay_cdf(t).unwrap();
        let probs: Vec<f64> = (0..50)
            .map(|j| if j == 49 { 1.0 - cdf(edges[49]) } else { cdf(edges[j + 1]) - cdf(edges[j]) })
            .collect();
        let chi = chi_square_gof(&counts, &probs).unwrap();
        assert!(chi.p_value > 0.01, "{family:?}: {chi:?}");
    }
}

#[test]
fn stationary_counts_have_exact_mean() {
    for family in [LawFamily::Gamma { shape: 2.0, rate: 2.0 }, LawFamily::Uniform { low: 0.0, high: 2.0 }] {
        let law = IncrementLaw::new(family).unwrap();
        for t in [1.0, 5.0, 25.0] {
            let x = draws(100_000, 40, |r| sample_path(&law, t, DelayKind::Stationary, r).unwrap().count(t).unwrap() as f64);
            let (m, v) = mean_var(&x);
            let se = (v / x.len() as f64).sqrt();
            assert!((m - t / law.mean()).abs() < 4.0 * se, "{family:?} t={t}: {m}");
        }
    }
}

#[test]
fn exponential_counts_are_poisson() {
    let (rate, t) = (2.0, 3.0);
    let law = IncrementLaw::exponential(rate).unwrap();
    let x = draws(100_000, 50, |r| sample_path(&law, t, DelayKind::Stationary, r).unwrap().count(t).unwrap() as f64);
    let pois = Poisson::new(rate * t).unwrap();
    let cells = 20;
    let mut counts = vec![0u64; cells];
    for &v in &x {
        counts[(v as usize).min(cells - 1)] += 1;
    }
    let mut probs: Vec<f64> = (0..cells as u64).map(|k| pois.pmf(k)).collect();
    probs[cells - 1] = 1.0 - probs[..cells - 1].iter().sum::<f64>();
    let chi = chi_square_gof(&counts, &probs).unwrap();
    assert!(chi.p_value > 0.01, "{chi:?}");
}

#[test]
fn exact_match_first_moment() {
    let (alpha, beta) = (0.5, 0.5);
    let want = gamma(1.0 - beta) / (gamma(1.0 - alpha) * gamma(1.0 + alpha - beta));
    assert!((moments_inverse_case(alpha, beta, 1.0, 1).unwrap() - want).abs() < 1e-12);
    let s = Scenario {
        law: LawFamily::Pareto {
            tail_index: alpha,
            scale: 1.0,
        },
        response: ResponseFamily::ParetoTailMatch {
            tail_index: alpha,
            scale: 1.0,
            multiplier: 2.0,
        },
        regime: RegimeSection {
            name: Regime::D4,
            delay: DelayKind::ZeroDelayed,
        },
        grid: GridSection { u: vec![1.0], t: vec![1e4] },
        run: RunSection {
            replicates: 100_000,
            seed: 60,
            plan: vec![TestKind::Moments { k_max: 1 }],
            ..RunSection::default()
        },
    };
    let out = run_scenario(&s, 1).unwrap();
    let r = &out.report.records[0];
    assert!((r.reference.unwrap() - want).abs() < 1e-12);
    // z is relative to the sectioned standard error of the mean.
    assert!(r.z_score.unwrap().abs() < 3.0, "{r:?}");
}

#[test]
fn stable_negation_duality() {
    for alpha in [0.7, 1.5] {
        let neg = StableSpec::new(alpha, Skew::SpectrallyNegative).unwrap();
        let pos = StableSpec::new(alpha, Skew::SpectrallyPositive).unwrap();
        let x = draws(100_000, 70, |r| sample_stable(&neg, r));
        let y = draws(100_000, 71, |r| -sample_stable(&pos, r));
        let ks = ks_two_sample(&x, &y).unwrap();
        assert!(ks.p_value > 0.01, "alpha={alpha}: {ks:?}");
    }
}

#[test]
fn stable_convolution() {
    for alpha in [0.7, 1.5, 1.8] {
        let spec = StableSpec::new(alpha, Skew::SpectrallyNegative).unwrap();
        let scale = 2f64.powf(-1.0 / alpha);
        let x = draws(100_000, 80, |r| (sample_stable(&spec, r) + sample_stable(&spec, r)) * scale);
        let y = draws(100_000, 81, |r| sample_stable(&spec, r));
        let ks = ks_two_sample(&x, &y).unwrap();
        assert!(ks.p_value > 0.01, "alpha={alpha}: {ks:?}");
    }
}

/// Median-of-means estimate of E|W| at n = 10⁶, within 3 standard errors
/// of the closed form.
fn check_absolute_mean(alpha: f64) {
    let spec = StableSpec::new(alpha, Skew::SpectrallyNegative).unwrap();
    let x = draws(1_000_000, 90, |r| sample_stable(&spec, r).abs());
    // 8 ln(1/δ) groups for a 3σ-level δ.
    let groups = 47;
    let est = median_of_means(&x, groups).unwrap();
    let size = x.len() / groups;
    let means: Vec<f64> = x.chunks_exact(size).map(|c| c.iter().sum::<f64>() / size as f64).collect();
    // Asymptotic standard error of a median of normal group means.
    let se = 1.2533 * mean_var(&means).1.sqrt() / (groups as f64).sqrt();
    let want = abs_moment(alpha, 1.0).unwrap();
    assert!((est - want).abs() < 3.0 * se, "alpha={alpha}: {est} vs {want} (se {se})");
}

#[test]
fn stable_absolute_mean() {
    check_absolute_mean(1.5);
    check_absolute_mean(1.8);
}

// Group means of a tail-1.2 variable are skewed, so their median sits about
// 10% below the mean at this n whatever the number of groups.
#[test]
fn stable_absolute_mean_tail_1_2() {
    check_absolute_mean(1.2);
}

#[test]
fn subordinator_increments_add_up() {
    let alpha = 0.6;
    let x = draws(100_000, 100, |r| (0..10).map(|_| sample_subordinator_increment(alpha, 0.1, r).unwrap()).sum());
    let y = draws(100_000, 101, |r| sample_subordinator_increment(alpha, 1.0, r).unwrap());
    let ks = ks_two_sample(&x, &y).unwrap();
    assert!(ks.p_value > 0.01, "{ks:?}");
}

#[test]
fn subordinator_laplace_transform() {
    let x = draws(1_000_000, 102, |r| (-sample_subordinator_increment(0.5, 1.0, r).unwrap()).exp());
    let (m, v) = mean_var(&x);
    let want = (-std::f64::consts::PI.sqrt()).exp();
    assert!((m - want).abs() < 4.0 * (v / x.len() as f64).sqrt(), "{m} vs {want}");
}

/// Every other grid point of `path`.
fn coarsen(path: &ProcessPath) -> ProcessPath {
    let values = path.values().iter().step_by(2).copied().collect();
    ProcessPath::from_values(path.kind(), 2.0 * path.mesh(), values).unwrap()
}

#[test]
fn frac_integral_mesh_refinement_gaussian() {
    let (beta, mesh, n) = (0.25, 1e-4, 10_000u64);
    let factory = StreamFactory::new(110);
    let pairs: Vec<(f64, f64)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let path = simulate_levy_path(2.0, 1.0, mesh, &mut factory.stream(0, i)).unwrap();
            let fine = FracIntegrator::new(beta, mesh, 1).unwrap().apply(&path, 1.0).unwrap();
            let coarse = FracIntegrator::new(beta, 2.0 * mesh, 1).unwrap().apply(&coarsen(&path), 1.0).unwrap();
            (fine, coarse)
        })
        .collect();
    let fine: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let coarse: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let (mf, vf) = mean_var(&fine);
    let (mc, vc) = mean_var(&coarse);
    let nf = n as f64;
    assert!((mf - mc).abs() < (vf / nf).sqrt(), "means {mf} {mc}");
    assert!((vf - vc).abs() < vf * (2.0 / nf).sqrt(), "variances {vf} {vc}");
    let exact = 1.0 / (1.0 - 2.0 * beta);
    assert!((vf - exact).abs() < 3.0 * exact * (2.0 / nf).sqrt(), "variance {vf} vs {exact}");
}

#[test]
fn frac_integral_stable_marginal_and_self_similarity() {
    let (alpha, beta, mesh, n) = (1.5, 0.25, 1e-4, 10_000u64);
    let factory = StreamFactory::new(120);
    let integ = FracIntegrator::new(beta, mesh, 1).unwrap();
    let pairs: Vec<(f64, f64)> = (0..n)
        .into_par_iter()
        .map_init(
            || integ.clone(),
            |integ, i| {
                let path = simulate_levy_path(alpha, 1.0, mesh, &mut factory.stream(0, i)).unwrap();
                (integ.apply(&path, 0.5).unwrap(), integ.apply(&path, 1.0).unwrap())
            },
        )
        .collect();
    let at_one: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let exact = draws(n as usize, 121, |r| marginal_sample_finite_mean(alpha, beta, 1.0, r).unwrap());
    let ks = ks_two_sample(&at_one, &exact).unwrap();
    assert!(ks.p_value > 0.01, "marginal: {ks:?}");

    let h = 1.0 / alpha - beta;
    let scaled: Vec<f64> = pairs.iter().step_by(2).map(|p| p.0 * 2f64.powf(h)).collect();
    let direct: Vec<f64> = pairs.iter().skip(1).step_by(2).map(|p| p.1).collect();
    let ks = ks_two_sample(&scaled, &direct).unwrap();
    assert!(ks.p_value > 0.01, "self-similarity: {ks:?}");
}

/// Moments, log-time stationarity and self-similarity of the
/// inverse-subordinator integrals, from one batch of paths.
#[test]
fn inverse_subordinator_functionals() {
    let (alpha, n) = (0.5, 10_000u64);
    let (delta_d, u_mesh) = (1e-5, 1e-4);
    let betas = [0.0, 0.25, 0.5];
    let factory = StreamFactory::new(130);
    let integs: Vec<FracIntegrator> = betas.iter().map(|&b| FracIntegrator::new(b, u_mesh, 1).unwrap()).collect();
    // Per path: Y_0(1), Y_0.25(0.5), Y_0.25(1), Y_0.5(0.25), Y_0.5(0.5), Y_0.5(1).
    let rows: Vec<[f64; 6]> = (0..n)
        .into_par_iter()
        .map_init(
            || integs.clone(),
            |integs, i| {
                let path =
                    simulate_inverse_subordinator_path(alpha, 1.0, delta_d, u_mesh, &mut factory.stream(0, i)).unwrap();
                [
                    integs[0].apply(&path, 1.0).unwrap(),
                    integs[1].apply(&path, 0.5).unwrap(),
                    integs[1].apply(&path, 1.0).unwrap(),
                    integs[2].apply(&path, 0.25).unwrap(),
                    integs[2].apply(&path, 0.5).unwrap(),
                    integs[2].apply(&path, 1.0).unwrap(),
                ]
            },
        )
        .collect();
    let col = |j: usize| rows.iter().map(|r| r[j]).collect::<Vec<f64>>();

    for (j, beta) in [(0, 0.0), (2, 0.25)] {
        let y = col(j);
        for k in 1..=4 {
            let want = moments_inverse_case(alpha, beta, 1.0, k).unwrap();
            let t = moment_test(&y, k, want, 20).unwrap();
            assert!(t.z.abs() < 3.0, "beta={beta} k={k}: {t:?} vs {want}");
        }
    }

    // Lag ln 2 in log-time, at two different origins.
    let lag = stationary_covariance(alpha, 2f64.ln()).unwrap();
    let early = covariance_estimate(&col(3), &col(4)).unwrap();
    let late = covariance_estimate(&col(4), &col(5)).unwrap();
    let se = (early.std_error.powi(2) + late.std_error.powi(2)).sqrt();
    assert!((early.estimate - late.estimate).abs() < 3.0 * se, "{early:?} {late:?}");
    for c in [early, late] {
        assert!((c.estimate - lag).abs() < 3.0 * c.std_error, "{c:?} vs {lag}");
    }

    // Y_{α,β}(u) has Hurst index α − β.
    let h = alpha - 0.25;
    let scaled: Vec<f64> = rows.iter().step_by(2).map(|r| r[1] * 2f64.powf(h)).collect();
    let direct: Vec<f64> = rows.iter().skip(1).step_by(2).map(|r| r[2]).collect();
    let ks = ks_two_sample(&scaled, &direct).unwrap();
    assert!(ks.p_value > 0.01, "self-similarity: {ks:?}");
}

fn theorem_scenario(law: LawFamily, response: ResponseFamily, regime: Regime, ladder: [f64; 2], seed: u64) -> Scenario {
    Scenario {
        law,
        response,
        regime: RegimeSection {
            name: regime,
            delay: DelayKind::ZeroDelayed,
        },
        grid: GridSection {
            u: vec![1.0],
            t: ladder.to_vec(),
        },
        run: RunSection {
            replicates: 500,
            seed,
            subordinator_step: 1e-4,
            subordinator_u_mesh: 1e-3,
            ..RunSection::default()
        },
    }
}

#[test]
fn ks_distance_shrinks_along_the_ladder() {
    let exp = LawFamily::Exponential { rate: 1.0 };
    let decay = ResponseFamily::PowerDecay { beta: 0.25, offset: 1.0 };
    let cases = [
        ("A1", exp, decay, Regime::A1, [3.0, 3e3]),
        ("A2", LawFamily::Pareto { tail_index: 2.0, scale: 1.0 }, decay, Regime::A2, [10.0, 1e4]),
        ("A3", LawFamily::Pareto { tail_index: 1.5, scale: 1.0 }, decay, Regime::A3, [10.0, 1e4]),
        ("D4", LawFamily::Pareto { tail_index: 0.5, scale: 1.0 }, decay, Regime::D4, [10.0, 1e4]),
        ("NOSCALE_DRI", exp, ResponseFamily::ExpDecay { rate: 1.0 }, Regime::NoscaleDri, [0.5, 50.0]),
        (
            "NOSCALE_CENTERED",
            exp,
            ResponseFamily::PowerDecay { beta: 0.75, offset: 1.0 },
            Regime::NoscaleCentered,
            [0.5, 100.0],
        ),
    ];
    for (name, law, h, regime, ladder) in cases {
        let (mut first, mut last) = (0.0, 0.0);
        for seed in 0..20 {
            let out = run_scenario(&theorem_scenario(law, h, regime, ladder, 1000 + seed), 1).unwrap();
            first += out.report.records[0].statistic;
            last += out.report.records[1].statistic;
        }
        assert!(last <= first, "{name}: mean KS {} at t={} vs {} at t={}", first / 20.0, ladder[0], last / 20.0, ladder[1]);
    }
}

#[test]
fn stationary_counts_are_time_reversible() {
    let s = Scenario {
        law: LawFamily::Gamma { shape: 0.5, rate: 0.5 },
        response: ResponseFamily::ExpDecay { rate: 1.0 },
        regime: RegimeSection {
            name: Regime::NoscaleDri,
            delay: DelayKind::Stationary,
        },
        grid: GridSection { u: vec![1.0], t: vec![20.0] },
        run: RunSection {
            replicates: 20_000,
            seed: 140,
            plan: vec![TestKind::TimeReversal],
            ..RunSection::default()
        },
    };
    let out = run_scenario(&s, 1).unwrap();
    assert_eq!(out.report.records.len(), 3);
    assert!(out.report.verdict, "{:#?}", out.report.records);
}
