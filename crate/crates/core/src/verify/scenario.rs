//! Scenario definition. The struct mirrors the config file section by
//! section, so serializing a scenario reproduces its config.

use serde::{Deserialize, Serialize};

use super::VerifyError;
use crate::laws::{IncrementLaw, LawFamily, ResponseFamily, ResponseFunction};
use crate::renewal::DelayKind;
use crate::shotnoise::{check_grid, LimitSpec, Regime};

/// One item of a test plan.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum TestKind {
    /// KS test of each marginal against the limit law.
    KsMarginal,
    /// Sectioned z-tests of moments `1..=k_max` with known limits.
    Moments { k_max: u32 },
    /// Correlation of statistics at distinct u (no-scaling limits are i.i.d.).
    JointPairwiseIndependence,
    /// Energy-distance test of each pair of u against the joint limit law.
    JointPairwiseLimit,
    /// Stationary counting increments against their time reversal.
    TimeReversal,
    /// Statistic at u against the rescaled statistic at the first u.
    SelfSimilarity,
    /// Covariance of `Y_{α,α}(e^s)` pairs against `R(s)`.
    StationarityLogtime,
    /// `E|N(t) − t/μ|` over its normalizer against the limit constant.
    MeanAbsN,
    /// KS against the exponential law and moments `c^k k!`.
    ExponentialLimit,
    /// Reference sampler against itself; rejections measure test size.
    NullCalibration,
}

impl TestKind {
    pub fn name(&self) -> &'static str {
        match self {
            TestKind::KsMarginal => "ks_marginal",
            TestKind::Moments { .. } => "moments",
            TestKind::JointPairwiseIndependence => "joint_pairwise_independence",
            TestKind::JointPairwiseLimit => "joint_pairwise_limit",
            TestKind::TimeReversal => "time_reversal",
            TestKind::SelfSimilarity => "self_similarity",
            TestKind::StationarityLogtime => "stationarity_logtime",
            TestKind::MeanAbsN => "mean_abs_n",
            TestKind::ExponentialLimit => "exponential_limit",
            TestKind::NullCalibration => "null_calibration",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegimeSection {
    pub name: Regime,
    #[serde(default = "default_delay")]
    pub delay: DelayKind,
}

fn default_delay() -> DelayKind {
    DelayKind::ZeroDelayed
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    /// Time multipliers u.
    pub u: Vec<f64>,
    /// Horizons t, strictly increasing.
    #[serde(default = "default_ladder")]
    pub t: Vec<f64>,
}

fn default_ladder() -> Vec<f64> {
    vec![1e2, 1e3, 1e4]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunSection {
    pub replicates: usize,
    pub seed: u64,
    pub plan: Vec<TestKind>,
    /// Level of the p-value tests.
    pub significance: f64,
    /// Bound on |z| for moment and covariance tests.
    pub z_threshold: f64,
    /// Relative tolerance of the mean-absolute-deviation check.
    pub mean_abs_tolerance: f64,
    /// Size of simulated reference samples; defaults to `replicates`.
    pub reference_size: Option<usize>,
    /// Cap on the expected number of shots over the whole run.
    pub max_shots: f64,
    pub levy_mesh: f64,
    /// Step of the subordinator grid; the main source of bias in
    /// inverse-subordinator references.
    pub subordinator_step: f64,
    pub subordinator_u_mesh: f64,
    pub drop_cells: usize,
    /// Mean truncation error allowed when sampling X*.
    pub x_star_tolerance: f64,
    /// Per-sample size cap of the energy-distance test.
    pub energy_size: usize,
    pub permutations: usize,
    pub moment_batches: usize,
    /// Added to every reference draw; nonzero values make a designed failure.
    pub reference_shift: f64,
    pub plot_quantiles: usize,
}

impl Default for RunSection {
    fn default() -> Self {
        Self {
            replicates: 1000,
            seed: 1,
            plan: vec![TestKind::KsMarginal],
            significance: 0.01,
            z_threshold: 3.0,
            mean_abs_tolerance: 0.05,
            reference_size: None,
            max_shots: 1e8,
            levy_mesh: 1e-4,
            subordinator_step: 1e-5,
            subordinator_u_mesh: 1e-4,
            drop_cells: 1,
            x_star_tolerance: 1e-8,
            energy_size: 5000,
            permutations: 99,
            moment_batches: 20,
            reference_shift: 0.0,
            plot_quantiles: 200,
        }
    }
}

/// Everything a verification run depends on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub law: LawFamily,
    pub response: ResponseFamily,
    pub regime: RegimeSection,
    pub grid: GridSection,
    #[serde(default)]
    pub run: RunSection,
}

fn invalid(msg: impl Into<String>) -> VerifyError {
    VerifyError::InvalidScenario(msg.into())
}

fn inapplicable(kind: TestKind, regime: Regime, why: &str) -> VerifyError {
    VerifyError::Inapplicable {
        test: kind.name(),
        regime,
        reason: why.into(),
    }
}

impl Scenario {
    /// Builds and validates the limit specification.
    pub fn spec(&self) -> Result<LimitSpec, VerifyError> {
        let law = IncrementLaw::new(self.law)?;
        let h = ResponseFunction::new(self.response)?;
        Ok(LimitSpec::new(self.regime.name, law, h)?)
    }

    pub fn reference_size(&self) -> usize {
        self.run.reference_size.unwrap_or(self.run.replicates)
    }

    /// Range checks on the plumbing plus admissibility of the spec and of
    /// every plan item.
    pub fn validate(&self) -> Result<LimitSpec, VerifyError> {
        let run = &self.run;
        if run.replicates < 2 {
            return Err(invalid(format!("replicates = {} must be at least 2", run.replicates)));
        }
        let ladder = &self.grid.t;
        if ladder.is_empty() || !(ladder[0] > 0.0) || ladder.windows(2).any(|w| !(w[1] > w[0])) || ladder.iter().any(|t| !t.is_finite()) {
            return Err(invalid("t-ladder must be positive, finite and strictly increasing"));
        }
        check_grid(&self.grid.u).map_err(|_| invalid("u-grid must be positive, finite and strictly increasing"))?;
        if !(run.significance > 0.0 && run.significance < 1.0) {
            return Err(invalid("significance must lie in (0, 1)"));
        }
        if !(run.z_threshold > 0.0) || !(run.mean_abs_tolerance > 0.0) {
            return Err(invalid("z_threshold and mean_abs_tolerance must be positive"));
        }
        if !(run.max_shots > 0.0) {
            return Err(invalid("max_shots must be positive"));
        }
        for (name, v) in [
            ("levy_mesh", run.levy_mesh),
            ("subordinator_step", run.subordinator_step),
            ("subordinator_u_mesh", run.subordinator_u_mesh),
            ("x_star_tolerance", run.x_star_tolerance),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(invalid(format!("{name} must be positive and finite")));
            }
        }
        if !run.reference_shift.is_finite() {
            return Err(invalid("reference_shift must be finite"));
        }
        if self.reference_size() < 2 || run.moment_batches < 2 || run.energy_size < 2 {
            return Err(invalid("reference_size, moment_batches and energy_size must be at least 2"));
        }
        if run.plan.is_empty() {
            return Err(invalid("the test plan is empty"));
        }
        let spec = self.spec()?;
        let regime = spec.regime();
        for &kind in &run.plan {
            match kind {
                TestKind::Moments { k_max } if k_max == 0 => {
                    return Err(invalid("moments need k_max >= 1"));
                }
                TestKind::Moments { .. } | TestKind::ExponentialLimit if run.replicates < run.moment_batches => {
                    return Err(invalid("moment tests need at least moment_batches replicates"));
                }
                TestKind::JointPairwiseIndependence if regime.is_scaling() => {
                    return Err(inapplicable(kind, regime, "only the no-scaling limits are i.i.d. across u"));
                }
                TestKind::JointPairwiseIndependence | TestKind::JointPairwiseLimit | TestKind::SelfSimilarity
                    if self.grid.u.len() < 2 =>
                {
                    return Err(inapplicable(kind, regime, "needs at least two grid points"));
                }
                TestKind::TimeReversal if !spec.law().has_finite_mean() => {
                    return Err(inapplicable(kind, regime, "the stationary process needs a finite mean"));
                }
                TestKind::StationarityLogtime if !(regime == Regime::D4 && spec.beta() == spec.alpha()) => {
                    return Err(inapplicable(kind, regime, "needs regime D4 with beta = alpha"));
                }
                TestKind::StationarityLogtime if self.grid.u.len() < 2 => {
                    return Err(inapplicable(kind, regime, "needs at least two grid points"));
                }
                TestKind::MeanAbsN if !matches!(regime, Regime::A1 | Regime::A2 | Regime::A3) => {
                    return Err(inapplicable(kind, regime, "defined for regimes A1-A3"));
                }
                TestKind::ExponentialLimit
                    if !(regime == Regime::D4
                        && spec.beta() == spec.alpha()
                        && spec.response().tail_ratio_limit(spec.law()).is_some()) =>
                {
                    return Err(inapplicable(
                        kind,
                        regime,
                        "needs regime D4 with a response matched to the tail (beta = alpha, finite c)",
                    ));
                }
                _ => {}
            }
        }
        Ok(spec)
    }
}
