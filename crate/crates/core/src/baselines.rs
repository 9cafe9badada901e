//! Comparison policies.
//!
//! [`Oful`] is optimistic ridge regression with the standard self-normalized
//! radius. [`AhrUcb`] uses the same schedule and selection rule as
//! [`HvtUcb`](crate::estimator::HvtUcb) but re-solves the full adaptive Huber
//! regression over every stored sample each round, so its per-round cost
//! grows linearly with `t`.

use log::warn;

use crate::error::{Error, Result};
use crate::estimator::{compute_beta, round_schedule, HuberParams, RoundSchedule};
use crate::huber::{huber_value, psi};
use crate::linalg::{ensure_finite, SpdMatrix, Vector};
use crate::policy::{ucb_argmax, BanditPolicy};

fn project_euclidean(theta: &mut Vector, radius: f64) {
    let n = theta.norm();
    if n > radius {
        *theta *= radius / n;
        while theta.norm() > radius {
            *theta *= 1.0 - f64::EPSILON;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OfulConfig {
    pub d: usize,
    pub lambda: f64,
    pub s: f64,
    pub l: f64,
    pub delta: f64,
    /// Sub-Gaussian scale assumed for the noise.
    pub r: f64,
}

/// Ridge-regression UCB.
#[derive(Debug, Clone)]
pub struct Oful {
    cfg: OfulConfig,
    t: u64,
    a: SpdMatrix,
    b: Vector,
    theta_hat: Vector,
    beta: f64,
}

impl Oful {
    pub fn new(cfg: OfulConfig) -> Result<Self> {
        if !(cfg.delta > 0.0 && cfg.delta < 1.0) {
            return Err(Error::invalid(format!("delta must lie in (0, 1), got {}", cfg.delta)));
        }
        if !(cfg.r >= 0.0 && cfg.s > 0.0 && cfg.l > 0.0) {
            return Err(Error::invalid("OFUL needs R >= 0 and S, L > 0"));
        }
        let a = SpdMatrix::scaled_identity(cfg.lambda, cfg.d)?;
        let mut me = Self { cfg, t: 0, a, b: Vector::zeros(cfg.d), theta_hat: Vector::zeros(cfg.d), beta: 0.0 };
        me.beta = me.radius(0);
        Ok(me)
    }

    /// `√λ S + R √(d log((1 + t L²/λ)/δ))`.
    pub fn radius(&self, t: u64) -> f64 {
        let c = &self.cfg;
        let growth = (1.0 + t as f64 * c.l * c.l / c.lambda).ln() - c.delta.ln();
        c.lambda.sqrt() * c.s + c.r * (c.d as f64 * growth).sqrt()
    }

    pub fn gram(&self) -> &SpdMatrix {
        &self.a
    }
    pub fn moment(&self) -> &Vector {
        &self.b
    }
    pub fn beta(&self) -> f64 {
        self.beta
    }
    pub fn rounds(&self) -> u64 {
        self.t
    }

    pub fn update(&mut self, x: &Vector, reward: f64) -> Result<()> {
        if x.len() != self.cfg.d {
            return Err(Error::invalid("arm dimension does not match the estimator"));
        }
        ensure_finite(x, "arm")?;
        self.a.rank1_update(x, 1.0)?;
        self.b.axpy(reward, x, 1.0);
        self.theta_hat = self.a.inverse() * &self.b;
        self.t += 1;
        self.beta = self.radius(self.t);
        Ok(())
    }
}

impl BanditPolicy for Oful {
    fn name(&self) -> &'static str {
        "oful"
    }

    fn select_arm(&self, arms: &[Vector]) -> Result<usize> {
        ucb_argmax(arms, &self.theta_hat, &self.a, self.beta).map(|(i, _)| i)
    }

    fn observe(&mut self, x: &Vector, reward: f64, _nu: f64) -> Result<Option<RoundSchedule>> {
        self.update(x, reward)?;
        Ok(None)
    }

    fn theta_hat(&self) -> &Vector {
        &self.theta_hat
    }

    fn confidence(&self) -> (&SpdMatrix, f64) {
        (&self.a, self.beta)
    }
}

/// One stored observation with the normalization and threshold it was
/// given when it arrived. Never modified afterwards.
#[derive(Debug, Clone, PartialEq)]
pub struct HuberSample {
    pub x: Vector,
    pub reward: f64,
    pub sigma: f64,
    pub tau: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GdSettings {
    pub tolerance: f64,
    pub max_iter: usize,
}

impl GdSettings {
    /// Tolerance `1/√T`, budget `⌈10 log T⌉` iterations.
    pub fn for_horizon(horizon: u64) -> Self {
        let t = horizon.max(2) as f64;
        Self { tolerance: 1.0 / t.sqrt(), max_iter: (10.0 * t.ln()).ceil().max(1.0) as usize }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitReport {
    pub theta: Vector,
    pub objective: f64,
    /// Norm of the projected-gradient mapping at `theta`; equals the
    /// gradient norm whenever `theta` is interior.
    pub grad_norm: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// `(λ/2)‖θ‖² + Σ f_{τ_s}((r_s - x_sᵀθ)/σ_s)`.
pub fn ahr_objective(samples: &[HuberSample], lambda: f64, theta: &Vector) -> f64 {
    let data: f64 = samples.iter().map(|s| huber_value((s.reward - s.x.dot(theta)) / s.sigma, s.tau)).sum();
    0.5 * lambda * theta.norm_squared() + data
}

pub fn ahr_gradient(samples: &[HuberSample], lambda: f64, theta: &Vector) -> Vector {
    let mut g = theta * lambda;
    for s in samples {
        let z = (s.reward - s.x.dot(theta)) / s.sigma;
        g.axpy(-psi(z, s.tau) / s.sigma, &s.x, 1.0);
    }
    g
}

/// Smoothness bound `λ + Σ ‖x_s/σ_s‖²` for [`ahr_objective`].
pub fn ahr_smoothness(samples: &[HuberSample], lambda: f64) -> f64 {
    lambda + samples.iter().map(|s| s.x.norm_squared() / (s.sigma * s.sigma)).sum::<f64>()
}

/// Projected gradient descent on [`ahr_objective`] over the `radius`-ball.
///
/// Steps start at twice the last accepted step (capped at `1/λ`) and halve
/// until the sufficient-decrease test passes; `1/smoothness` always passes.
/// Exhausting the iteration budget logs a warning and returns the best
/// iterate with `converged = false`.
pub fn ahr_fit(
    samples: &[HuberSample],
    lambda: f64,
    radius: f64,
    smoothness: f64,
    warm_start: &Vector,
    settings: GdSettings,
) -> FitReport {
    let min_step = 1.0 / smoothness;
    let max_step = (1.0 / lambda).max(min_step);
    let mut theta = warm_start.clone();
    project_euclidean(&mut theta, radius);
    let mut f = ahr_objective(samples, lambda, &theta);
    let mut step = min_step;
    let mut iterations = 0;

    let grad_map_norm = |theta: &Vector, g: &Vector| -> f64 {
        let mut probe = theta - g * min_step;
        project_euclidean(&mut probe, radius);
        (theta - probe).norm() / min_step
    };

    loop {
        let g = ahr_gradient(samples, lambda, &theta);
        let gm = grad_map_norm(&theta, &g);
        if gm <= settings.tolerance {
            return FitReport { theta, objective: f, grad_norm: gm, iterations, converged: true };
        }
        if iterations >= settings.max_iter {
            warn!(
                "adaptive Huber GD budget of {} iterations exhausted (gradient mapping {gm:.3e} > {:.3e})",
                settings.max_iter, settings.tolerance
            );
            return FitReport { theta, objective: f, grad_norm: gm, iterations, converged: false };
        }
        iterations += 1;

        step = (2.0 * step).min(max_step);
        loop {
            let mut cand = &theta - &g * step;
            project_euclidean(&mut cand, radius);
            let diff = &cand - &theta;
            let fc = ahr_objective(samples, lambda, &cand);
            let model = f + g.dot(&diff) + diff.norm_squared() / (2.0 * step);
            // The 1/smoothness step always descends; accepting it outright keeps
            // round-off in the objective from stalling progress near the optimum.
            if fc <= model || step <= min_step {
                theta = cand;
                f = fc;
                break;
            }
            step = (0.5 * step).max(min_step);
        }
    }
}

/// UCB over an adaptive Huber regression refit on the full history each round.
#[derive(Debug, Clone)]
pub struct AhrUcb {
    params: HuberParams,
    t: u64,
    history: Vec<HuberSample>,
    theta_hat: Vector,
    v: SpdMatrix,
    beta_prev: f64,
    smoothness: f64,
    gd: GdSettings,
    last_fit: Option<FitReport>,
    budget_exhausted: usize,
}

impl AhrUcb {
    pub fn new(params: HuberParams) -> Result<Self> {
        let d = params.d();
        Ok(Self {
            v: SpdMatrix::scaled_identity(params.lambda(), d)?,
            theta_hat: Vector::zeros(d),
            beta_prev: compute_beta(0, &params),
            smoothness: params.lambda(),
            gd: GdSettings::for_horizon(params.horizon()),
            history: Vec::new(),
            t: 0,
            last_fit: None,
            budget_exhausted: 0,
            params,
        })
    }

    pub fn with_gd_settings(mut self, gd: GdSettings) -> Self {
        self.gd = gd;
        self
    }

    pub fn history(&self) -> &[HuberSample] {
        &self.history
    }
    pub fn last_fit(&self) -> Option<&FitReport> {
        self.last_fit.as_ref()
    }
    /// Number of refits that ran out of iterations.
    pub fn budget_exhausted(&self) -> usize {
        self.budget_exhausted
    }
    pub fn gd_settings(&self) -> GdSettings {
        self.gd
    }
    pub fn v(&self) -> &SpdMatrix {
        &self.v
    }
    pub fn beta_prev(&self) -> f64 {
        self.beta_prev
    }

    /// Refit `θ̂` on the full history, warm-started at the current estimate.
    pub fn fit(&mut self) -> &FitReport {
        let report =
            ahr_fit(&self.history, self.params.lambda(), self.params.s(), self.smoothness, &self.theta_hat, self.gd);
        if !report.converged {
            self.budget_exhausted += 1;
        }
        self.theta_hat = report.theta.clone();
        self.last_fit.insert(report)
    }

    pub fn advance(&mut self, x: &Vector, reward: f64, nu_t: f64) -> Result<Option<RoundSchedule>> {
        if x.len() != self.params.d() {
            return Err(Error::invalid("arm dimension does not match the estimator"));
        }
        ensure_finite(x, "arm")?;
        if !reward.is_finite() {
            return Err(Error::invalid(format!("reward must be finite, got {reward}")));
        }
        let t = self.t + 1;
        let sched = round_schedule(&self.params, &self.v, self.beta_prev, t, x, nu_t)?;
        if let Some(s) = &sched {
            let inv_sigma_sq = 1.0 / (s.sigma * s.sigma);
            self.v.rank1_update(x, inv_sigma_sq / self.params.alpha())?;
            self.smoothness += x.norm_squared() * inv_sigma_sq;
            self.history.push(HuberSample { x: x.clone(), reward, sigma: s.sigma, tau: s.tau });
            self.fit();
        }
        self.t = t;
        self.beta_prev = compute_beta(t, &self.params);
        Ok(sched)
    }
}

impl BanditPolicy for AhrUcb {
    fn name(&self) -> &'static str {
        "heavy_oful_gd"
    }

    fn select_arm(&self, arms: &[Vector]) -> Result<usize> {
        ucb_argmax(arms, &self.theta_hat, &self.v, self.beta_prev).map(|(i, _)| i)
    }

    fn observe(&mut self, x: &Vector, reward: f64, nu: f64) -> Result<Option<RoundSchedule>> {
        self.advance(x, reward, nu)
    }

    fn theta_hat(&self) -> &Vector {
        &self.theta_hat
    }

    fn confidence(&self) -> (&SpdMatrix, f64) {
        (&self.v, self.beta_prev)
    }
}
