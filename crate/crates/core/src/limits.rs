//! Limit processes: stable Lévy motion, the inverse stable subordinator,
//! their fractional integrals `Y_{α,β}`, the closed-form moments and
//! covariances of `Y_{α,β}`, and the no-scaling limits `X*` and `X*_∘`.

use rand::RngCore;
use rand_distr::{Distribution, StandardNormal};
use thiserror::Error;

use crate::laws::{IncrementLaw, ResponseFunction};
use crate::quad::{integrate_singular, QuadError, Tolerance};
use crate::renewal::{Arrivals, DelayKind, RenewalError};
use crate::shotnoise::NeumaierSum;
use crate::special::{gamma, is_gamma_pole};
use crate::stable::{sample_positive_stable, sample_stable, subordinator_scale, Skew, StableError, StableSpec};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LimitsError {
    #[error(transparent)]
    Stable(#[from] StableError),
    #[error(transparent)]
    Quadrature(#[from] QuadError),
    #[error(transparent)]
    Renewal(#[from] RenewalError),
    #[error("mesh must be positive and finite, got {0}")]
    BadMesh(f64),
    #[error("range must be positive and finite, got {0}")]
    BadRange(f64),
    #[error("alpha = {alpha} outside {range}")]
    AlphaRange { alpha: f64, range: &'static str },
    #[error("beta = {beta} outside the admissible range {range}")]
    BetaRange { beta: f64, range: String },
    #[error("u = {u} outside the path range [0, {u_max}]")]
    OutOfRange { u: f64, u_max: f64 },
    #[error("gamma pole: {what} = {arg} is a nonpositive integer")]
    GammaPole { what: &'static str, arg: f64 },
    #[error("moment order must be at least 1")]
    ZeroOrder,
    #[error("times must satisfy {0}")]
    BadTimes(&'static str),
    #[error("X* needs a finite mean")]
    InfiniteMean,
    #[error("the response is not directly Riemann integrable; X* does not exist")]
    NotIntegrable,
    #[error("the response is integrable; use the uncentred X*")]
    Integrable,
    #[error("regime (C1) needs {0}; pass the unchecked-hypotheses flag to sample anyway")]
    UncheckedHypothesis(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ProcessKind {
    LevyMotion { alpha: f64 },
    InverseSubordinator { alpha: f64 },
}

impl ProcessKind {
    pub fn alpha(&self) -> f64 {
        match *self {
            ProcessKind::LevyMotion { alpha } | ProcessKind::InverseSubordinator { alpha } => alpha,
        }
    }
}

/// A process sampled on the uniform grid `y_k = k δ`, `k = 0..=n`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProcessPath {
    grid: Vec<f64>,
    values: Vec<f64>,
    kind: ProcessKind,
    mesh: f64,
}

impl ProcessPath {
    /// Wraps values `W(kδ)`; `values[0]` must be 0.
    pub fn from_values(kind: ProcessKind, mesh: f64, values: Vec<f64>) -> Result<Self, LimitsError> {
        if !(mesh > 0.0 && mesh.is_finite()) {
            return Err(LimitsError::BadMesh(mesh));
        }
        let grid = (0..values.len()).map(|k| k as f64 * mesh).collect();
        Ok(Self {
            grid,
            values,
            kind,
            mesh,
        })
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn kind(&self) -> ProcessKind {
        self.kind
    }

    pub fn mesh(&self) -> f64 {
        self.mesh
    }

    pub fn u_max(&self) -> f64 {
        self.grid.last().copied().unwrap_or(0.0)
    }

    /// Grid index of `u` if it is a grid point (to 1e-9 cells).
    fn grid_index(&self, u: f64) -> Option<usize> {
        let x = u / self.mesh;
        let r = x.round();
        ((x - r).abs() < 1e-9 && r >= 0.0 && (r as usize) < self.values.len()).then_some(r as usize)
    }

    /// Linear interpolation between grid values.
    pub fn value_at(&self, u: f64) -> Result<f64, LimitsError> {
        let u_max = self.u_max();
        if let Some(k) = self.grid_index(u) {
            return Ok(self.values[k]);
        }
        if !(u >= 0.0 && u <= u_max) {
            return Err(LimitsError::OutOfRange { u, u_max });
        }
        let x = u / self.mesh;
        let k = (x.floor() as usize).min(self.values.len() - 2);
        let w = x - k as f64;
        Ok((1.0 - w) * self.values[k] + w * self.values[k + 1])
    }
}

fn grid_len(u_max: f64, mesh: f64) -> Result<usize, LimitsError> {
    if !(mesh > 0.0 && mesh.is_finite()) {
        return Err(LimitsError::BadMesh(mesh));
    }
    if !(u_max > 0.0 && u_max.is_finite()) {
        return Err(LimitsError::BadRange(u_max));
    }
    Ok((u_max / mesh + 1e-9).floor() as usize)
}

/// Spectrally negative α-stable Lévy motion (Brownian motion at α = 2)
/// on a grid of step `mesh` up to `u_max`.
pub fn simulate_levy_path<R: RngCore + ?Sized>(
    alpha: f64,
    u_max: f64,
    mesh: f64,
    rng: &mut R,
) -> Result<ProcessPath, LimitsError> {
    if !(alpha > 1.0 && alpha <= 2.0) {
        return Err(LimitsError::AlphaRange { alpha, range: "(1, 2]" });
    }
    let n = grid_len(u_max, mesh)?;
    let spec = StableSpec::new(alpha, Skew::SpectrallyNegative)?;
    let step = mesh.powf(1.0 / alpha);
    let mut values = Vec::with_capacity(n + 1);
    let mut w = 0.0;
    values.push(w);
    for _ in 0..n {
        let z: f64 = if alpha == 2.0 {
            StandardNormal.sample(rng)
        } else {
            sample_stable(&spec, rng)
        };
        w += step * z;
        values.push(w);
    }
    ProcessPath::from_values(ProcessKind::LevyMotion { alpha }, mesh, values)
}

/// Inverse α-stable subordinator `W(u) = inf{t : D(t) > u}` on a u-grid
/// of step `u_mesh`, with D simulated on a time grid of step `delta_d`.
///
/// The first-passage index is taken on the D-grid, so `W` is biased up by
/// at most `delta_d`. `W(0) = 0`.
pub fn simulate_inverse_subordinator_path<R: RngCore + ?Sized>(
    alpha: f64,
    u_max: f64,
    delta_d: f64,
    u_mesh: f64,
    rng: &mut R,
) -> Result<ProcessPath, LimitsError> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(StableError::SubordinatorAlpha(alpha).into());
    }
    if !(delta_d > 0.0 && delta_d.is_finite()) {
        return Err(LimitsError::BadMesh(delta_d));
    }
    let n = grid_len(u_max, u_mesh)?;
    let scale = subordinator_scale(alpha, delta_d);
    let mut values = Vec::with_capacity(n + 1);
    values.push(0.0);
    let mut d = 0.0;
    let mut j: u64 = 0;
    for i in 1..=n {
        let u = i as f64 * u_mesh;
        while d <= u {
            d += scale * sample_positive_stable(alpha, rng);
            j += 1;
        }
        values.push(j as f64 * delta_d);
    }
    ProcessPath::from_values(ProcessKind::InverseSubordinator { alpha }, u_mesh, values)
}

fn check_frac_beta(kind: ProcessKind, beta: f64) -> Result<(), LimitsError> {
    match kind {
        ProcessKind::LevyMotion { alpha } => {
            if !(beta >= 0.0 && alpha * beta < 1.0) {
                return Err(LimitsError::BetaRange {
                    beta,
                    range: format!("[0, 1/α) = [0, {})", 1.0 / alpha),
                });
            }
        }
        ProcessKind::InverseSubordinator { alpha } => {
            if !(beta >= 0.0 && beta <= alpha) {
                return Err(LimitsError::BetaRange {
                    beta,
                    range: format!("[0, α] = [0, {alpha}]"),
                });
            }
        }
    }
    Ok(())
}

/// Reusable evaluator of `Y_{α,β}(u) = ∫₀ᵘ (u−y)^{-β} dW(y)` in its
/// summation-by-parts form.
///
/// Cells `[y_k, y_{k+1}]` with `y_{k+1} ≤ u − δ_drop` get the left-point
/// weight `(u − y_k)^{-β}`; the terminal sliver contributes
/// `(W(u) − W(u − δ_drop)) δ_drop^{-β}`. With β = 0 the sum telescopes to
/// `W(u)`. Weights for grid-aligned `u` are cached across paths.
#[derive(Debug, Clone)]
pub struct FracIntegrator {
    beta: f64,
    mesh: f64,
    drop_cells: usize,
    weights: Vec<f64>,
}

impl FracIntegrator {
    pub fn new(beta: f64, mesh: f64, drop_cells: usize) -> Result<Self, LimitsError> {
        if !(mesh > 0.0 && mesh.is_finite()) {
            return Err(LimitsError::BadMesh(mesh));
        }
        Ok(Self {
            beta,
            mesh,
            drop_cells: drop_cells.max(1),
            weights: vec![f64::NAN],
        })
    }

    fn weight(&mut self, j: usize) -> f64 {
        while self.weights.len() <= j {
            let i = self.weights.len();
            self.weights.push((i as f64 * self.mesh).powf(-self.beta));
        }
        self.weights[j]
    }

    pub fn apply(&mut self, path: &ProcessPath, u: f64) -> Result<f64, LimitsError> {
        check_frac_beta(path.kind, self.beta)?;
        if path.mesh != self.mesh {
            return Err(LimitsError::BadMesh(path.mesh));
        }
        let u_max = path.u_max();
        if !(u >= 0.0 && u <= u_max * (1.0 + 1e-12)) {
            return Err(LimitsError::OutOfRange { u, u_max });
        }
        let w = &path.values;
        if let Some(m) = path.grid_index(u) {
            let d = self.drop_cells.min(m);
            if d == 0 {
                return Ok(0.0);
            }
            self.weight(m);
            let mut acc = NeumaierSum::default();
            for k in 0..(m - d) {
                acc.add((w[k + 1] - w[k]) * self.weights[m - k]);
            }
            let edge = (w[m] - w[m - d]) * (d as f64 * self.mesh).powf(-self.beta);
            acc.add(edge);
            return Ok(acc.value());
        }
        // Off-grid u: direct weights and an interpolated terminal sliver.
        let drop = (self.drop_cells as f64 * self.mesh).min(u);
        if drop <= 0.0 {
            return Ok(0.0);
        }
        let cut = u - drop;
        let mut acc = NeumaierSum::default();
        let mut k = 0;
        while k + 1 < w.len() && path.grid[k + 1] <= cut {
            acc.add((w[k + 1] - w[k]) * (u - path.grid[k]).powf(-self.beta));
            k += 1;
        }
        let start = path.value_at(path.grid[k])?;
        acc.add((path.value_at(u)? - start) * (u - path.grid[k]).powf(-self.beta));
        Ok(acc.value())
    }
}

/// `Y_{α,β}(u)` of one path with the default one-cell terminal drop.
pub fn frac_integral(path: &ProcessPath, beta: f64, u: f64) -> Result<f64, LimitsError> {
    FracIntegrator::new(beta, path.mesh, 1)?.apply(path, u)
}

/// Exact draw of `Y_{α,β}(u) =ᵈ u^{1/α−β} (1−αβ)^{-1/α} W_α(1)` for the
/// Lévy-motion case.
pub fn marginal_sample_finite_mean<R: RngCore + ?Sized>(
    alpha: f64,
    beta: f64,
    u: f64,
    rng: &mut R,
) -> Result<f64, LimitsError> {
    if !(alpha > 1.0 && alpha <= 2.0) {
        return Err(LimitsError::AlphaRange { alpha, range: "(1, 2]" });
    }
    if !(beta >= 0.0 && alpha * beta < 1.0) {
        return Err(LimitsError::BetaRange {
            beta,
            range: format!("[0, 1/α) = [0, {})", 1.0 / alpha),
        });
    }
    if !(u >= 0.0 && u.is_finite()) {
        return Err(LimitsError::BadRange(u));
    }
    let spec = StableSpec::new(alpha, Skew::SpectrallyNegative)?;
    let factor = u.powf(1.0 / alpha - beta) / (1.0 - alpha * beta).powf(1.0 / alpha);
    Ok(factor * sample_stable(&spec, rng))
}

fn check_inverse_params(alpha: f64, beta: f64) -> Result<(), LimitsError> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(LimitsError::AlphaRange { alpha, range: "(0, 1)" });
    }
    if !(beta < 1.0 && beta.is_finite()) {
        return Err(LimitsError::BetaRange {
            beta,
            range: "(-inf, 1)".into(),
        });
    }
    Ok(())
}

fn checked_gamma(what: &'static str, arg: f64) -> Result<f64, LimitsError> {
    if is_gamma_pole(arg) {
        Err(LimitsError::GammaPole { what, arg })
    } else {
        Ok(gamma(arg))
    }
}

/// `E Y_{α,β}(u)^k` for the inverse-subordinator case:
/// `u^{k(α−β)} k!/Γ(1−α)^k ∏_{j=1}^k Γ(1−β+(j−1)(α−β)) / Γ(j(α−β)+1)`.
pub fn moments_inverse_case(alpha: f64, beta: f64, u: f64, k: u32) -> Result<f64, LimitsError> {
    check_inverse_params(alpha, beta)?;
    if k == 0 {
        return Err(LimitsError::ZeroOrder);
    }
    if !(u >= 0.0 && u.is_finite()) {
        return Err(LimitsError::BadRange(u));
    }
    let d = alpha - beta;
    let g1a = gamma(1.0 - alpha);
    let mut value = u.powf(k as f64 * d);
    for j in 1..=k {
        let jf = j as f64;
        let num = checked_gamma("1-beta+(j-1)(alpha-beta)", 1.0 - beta + (jf - 1.0) * d)?;
        let den = checked_gamma("j(alpha-beta)+1", jf * d + 1.0)?;
        value *= jf * num / (g1a * den);
    }
    Ok(value)
}

/// `E[Y_{α,β}(t1) Y_{α,β}(t2)]`, `t1 ≤ t2`, by adaptive quadrature with
/// power substitutions at both endpoint singularities.
pub fn covariance_inverse_case(alpha: f64, beta: f64, t1: f64, t2: f64) -> Result<f64, LimitsError> {
    check_inverse_params(alpha, beta)?;
    if !(t1 > 0.0 && t2 >= t1 && t2.is_finite()) {
        return Err(LimitsError::BadTimes("0 < t1 <= t2 < inf"));
    }
    let c = gamma(1.0 - beta) / (gamma(alpha) * gamma(1.0 - alpha).powi(2) * checked_gamma("1+alpha-beta", 1.0 + alpha - beta)?);
    let gap = t2 - t1;
    let right_exp = if gap == 0.0 { alpha - 2.0 * beta } else { -beta };
    let f = |p: crate::quad::Point| {
        let a = p.to_right;
        let b = gap + p.to_right;
        p.from_left.powf(alpha - 1.0) * a.powf(-beta) * b.powf(-beta) * (a.powf(alpha) + b.powf(alpha))
    };
    let tol = Tolerance::absolute(1e-8 / c.abs().max(1.0));
    let integral = integrate_singular(f, 0.0, t1, alpha - 1.0, right_exp.min(-beta).min(0.0), tol)?;
    Ok(c * integral.value)
}

/// Covariance `R(s)` of the stationary process `Y_{α,α}(e^u)`, computed as
/// `(Γ(α)Γ(1−α))⁻¹ ∫₀^{e^{-|s|}} x^{α−1}(1−x)^{-α} dx`.
pub fn stationary_covariance(alpha: f64, s: f64) -> Result<f64, LimitsError> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(LimitsError::AlphaRange { alpha, range: "(0, 1)" });
    }
    if s.is_nan() {
        return Err(LimitsError::BadRange(s));
    }
    if s.is_infinite() {
        return Ok(0.0);
    }
    let b = (-s.abs()).exp();
    let one_minus_b = -(-s.abs()).exp_m1();
    let f = |p: crate::quad::Point| p.from_left.powf(alpha - 1.0) * (one_minus_b + p.to_right).powf(-alpha);
    let integral = integrate_singular(f, 0.0, b, alpha - 1.0, -alpha, Tolerance::absolute(1e-12))?;
    Ok(integral.value / (gamma(alpha) * gamma(1.0 - alpha)))
}

/// Parts of the increment cross-moment decomposition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DependenceGap {
    /// `E[(Y(t2)−Y(t1))(Y(t3)−Y(t2))]`.
    pub cross_moment: f64,
    /// `E[Y(t2)−Y(t1)] · E[Y(t3)−Y(t2)]`.
    pub mean_product: f64,
}

impl DependenceGap {
    pub fn gap(&self) -> f64 {
        self.cross_moment - self.mean_product
    }
}

/// Detailed form of [`increment_dependence_gap`].
pub fn increment_dependence(alpha: f64, beta: f64, t1: f64, t2: f64, t3: f64) -> Result<DependenceGap, LimitsError> {
    if !(t1 > 0.0 && t1 < t2 && t2 < t3) {
        return Err(LimitsError::BadTimes("0 < t1 < t2 < t3"));
    }
    let m1 = |t| moments_inverse_case(alpha, beta, t, 1);
    let cov = |a, b| covariance_inverse_case(alpha, beta, a, b);
    let cross_moment = cov(t2, t3)? - moments_inverse_case(alpha, beta, t2, 2)? - cov(t1, t3)? + cov(t1, t2)?;
    let mean_product = (m1(t2)? - m1(t1)?) * (m1(t3)? - m1(t2)?);
    Ok(DependenceGap {
        cross_moment,
        mean_product,
    })
}

/// `E[ΔY ΔY'] − E[ΔY]E[ΔY']` over adjacent increments `[t1,t2]`, `[t2,t3]`;
/// nonzero means the increments are not independent.
pub fn increment_dependence_gap(alpha: f64, beta: f64, t1: f64, t2: f64, t3: f64) -> Result<f64, LimitsError> {
    Ok(increment_dependence(alpha, beta, t1, t2, t3)?.gap())
}

fn check_x_star_law(law: &IncrementLaw) -> Result<(), LimitsError> {
    if law.has_finite_mean() {
        Ok(())
    } else {
        Err(LimitsError::InfiniteMean)
    }
}

/// Bound `∫_T^∞ |h| / μ` on the mean truncation error of [`sample_x_star`].
pub fn x_star_tail_bound(law: &IncrementLaw, h: &ResponseFunction, truncation: f64) -> f64 {
    (h.integral(f64::INFINITY) - h.integral(truncation)).max(0.0) / law.mean()
}

/// Smallest power-of-two multiple of 1 with tail bound below `tol`.
pub fn x_star_truncation(law: &IncrementLaw, h: &ResponseFunction, tol: f64) -> Result<f64, LimitsError> {
    check_x_star_law(law)?;
    if !h.is_integrable() {
        return Err(LimitsError::NotIntegrable);
    }
    let mut t = 1.0;
    while x_star_tail_bound(law, h, t) > tol && t < 1e15 {
        t *= 2.0;
    }
    Ok(t)
}

/// `X* = Σ h(S_k*) 1{S_k* ≤ T}` over one stationary path.
pub fn sample_x_star<R: RngCore>(
    law: &IncrementLaw,
    h: &ResponseFunction,
    truncation: f64,
    rng: &mut R,
) -> Result<f64, LimitsError> {
    check_x_star_law(law)?;
    if !h.is_dri() {
        return Err(LimitsError::NotIntegrable);
    }
    let mut acc = NeumaierSum::default();
    for s in Arrivals::new(law, truncation, DelayKind::Stationary, rng)? {
        acc.add(h.eval(s));
    }
    Ok(acc.value())
}

/// `X*_∘` truncated at `T`: `Σ h(S_k*) 1{S_k* ≤ T} − μ⁻¹ ∫₀ᵀ h`.
///
/// Only regime (C1) (finite variance, `∫h² < ∞`, h nonincreasing) is
/// verified; other cases need `unchecked_hypotheses`.
pub fn sample_x_star_centered<R: RngCore>(
    law: &IncrementLaw,
    h: &ResponseFunction,
    truncation: f64,
    unchecked_hypotheses: bool,
    rng: &mut R,
) -> Result<f64, LimitsError> {
    check_x_star_law(law)?;
    if h.is_integrable() {
        return Err(LimitsError::Integrable);
    }
    if !unchecked_hypotheses {
        if !law.variance().is_finite() {
            return Err(LimitsError::UncheckedHypothesis("a finite variance"));
        }
        if !h.is_square_integrable() {
            return Err(LimitsError::UncheckedHypothesis("a square-integrable response"));
        }
        if h.monotone_from() > 0.0 {
            return Err(LimitsError::UncheckedHypothesis("a nonincreasing response"));
        }
    }
    let mut acc = NeumaierSum::default();
    for s in Arrivals::new(law, truncation, DelayKind::Stationary, rng)? {
        acc.add(h.eval(s));
    }
    acc.add(-h.integral(truncation) / law.mean());
    Ok(acc.value())
}
