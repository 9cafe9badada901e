//! One-pass Huber estimator with optimistic arm selection.
//!
//! Each round the policy
//!
//! 1. scores arms by `⟨x, θ̂_t⟩ + β_{t-1} ‖x‖_{V_{t-1}⁻¹}`,
//! 2. picks the normalization `σ_t` and Huber threshold `τ_t` for the played
//!    arm from the current confidence radius,
//! 3. folds `x xᵀ / (α σ_t²)` into `V`,
//! 4. takes one projected gradient step
//!    `θ̂_{t+1} = Π_{V_t}(θ̂_t - V_t⁻¹ ∇ℓ_t(θ̂_t))` onto the `S`-ball,
//! 5. advances `β_t`.
//!
//! Nothing about past rounds is stored beyond `V_t`, its inverse and `θ̂`.

use crate::error::{Error, Result};
use crate::huber::loss_gradient;
use crate::linalg::{ensure_finite, project_ball_vnorm, SpdMatrix, Vector};
use crate::policy::{ucb_argmax, ucb_score, BanditPolicy};

/// Leading constant of the confidence radius.
pub const BETA_SCALE: f64 = 107.0;

/// User-facing inputs to the schedule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScheduleConfig {
    pub d: usize,
    pub epsilon: f64,
    pub alpha: f64,
    pub lambda: f64,
    pub sigma_min: f64,
    pub delta: f64,
    pub horizon: u64,
    pub s: f64,
    pub l: f64,
}

impl ScheduleConfig {
    /// `α = 4`, `λ = d`, `σ_min = 1/√T`, `δ = 1/(8T)`, `S = L = 1`.
    pub fn recommended(d: usize, horizon: u64, epsilon: f64) -> Self {
        let t = horizon.max(1) as f64;
        Self {
            d,
            epsilon,
            alpha: 4.0,
            lambda: d as f64,
            sigma_min: 1.0 / t.sqrt(),
            delta: 1.0 / (8.0 * t),
            horizon,
            s: 1.0,
            l: 1.0,
        }
    }
}

/// Validated schedule constants plus the derived `κ` and `τ₀`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HuberParams {
    cfg: ScheduleConfig,
    kappa: f64,
    tau0: f64,
    /// `log(2T²/δ)`
    log_conf: f64,
    /// `(1-ε) / (2(1+ε))`
    t_exponent: f64,
}

impl HuberParams {
    pub fn new(cfg: ScheduleConfig) -> Result<Self> {
        let pos = |v: f64, name: &str| -> Result<()> {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::invalid(format!("{name} must be positive and finite, got {v}")))
            }
        };
        if cfg.d == 0 {
            return Err(Error::invalid("dimension must be at least 1"));
        }
        if !(cfg.epsilon > 0.0 && cfg.epsilon <= 1.0) {
            return Err(Error::invalid(format!("epsilon must lie in (0, 1], got {}", cfg.epsilon)));
        }
        if !(cfg.delta > 0.0 && cfg.delta < 1.0) {
            return Err(Error::invalid(format!("delta must lie in (0, 1), got {}", cfg.delta)));
        }
        if cfg.horizon == 0 {
            return Err(Error::invalid("horizon must be at least 1"));
        }
        pos(cfg.alpha, "alpha")?;
        pos(cfg.lambda, "lambda")?;
        pos(cfg.sigma_min, "sigma_min")?;
        pos(cfg.s, "S")?;
        pos(cfg.l, "L")?;

        let d = cfg.d as f64;
        let t = cfg.horizon as f64;
        let ln_t = t.ln();
        let kappa = d * (cfg.l * cfg.l * t / (cfg.sigma_min * cfg.sigma_min * cfg.lambda * cfg.alpha * d)).ln_1p();
        let log_conf = std::f64::consts::LN_2 + 2.0 * ln_t - cfg.delta.ln();
        let t_exponent = (1.0 - cfg.epsilon) / (2.0 * (1.0 + cfg.epsilon));
        let log3t = 3f64.ln() + ln_t;
        let tau0 = (2.0 * kappa).sqrt() * log3t.powf(t_exponent) / log_conf.powf(1.0 / (1.0 + cfg.epsilon));
        Ok(Self { cfg, kappa, tau0, log_conf, t_exponent })
    }

    pub fn config(&self) -> &ScheduleConfig {
        &self.cfg
    }
    pub fn d(&self) -> usize {
        self.cfg.d
    }
    pub fn epsilon(&self) -> f64 {
        self.cfg.epsilon
    }
    pub fn alpha(&self) -> f64 {
        self.cfg.alpha
    }
    pub fn lambda(&self) -> f64 {
        self.cfg.lambda
    }
    pub fn sigma_min(&self) -> f64 {
        self.cfg.sigma_min
    }
    pub fn delta(&self) -> f64 {
        self.cfg.delta
    }
    pub fn horizon(&self) -> u64 {
        self.cfg.horizon
    }
    pub fn s(&self) -> f64 {
        self.cfg.s
    }
    pub fn l(&self) -> f64 {
        self.cfg.l
    }
    pub fn kappa(&self) -> f64 {
        self.kappa
    }
    pub fn tau0(&self) -> f64 {
        self.tau0
    }
    pub fn log_conf(&self) -> f64 {
        self.log_conf
    }
    pub fn t_exponent(&self) -> f64 {
        self.t_exponent
    }

    fn t_power(&self, t: u64) -> f64 {
        (t as f64).powf(self.t_exponent)
    }
}

/// Confidence radius `β_t`. At `t = 0` the growth term vanishes unless
/// `ε = 1`, where the exponent is zero and the term is constant.
pub fn compute_beta(t: u64, p: &HuberParams) -> f64 {
    BETA_SCALE * p.log_conf * p.tau0 * p.t_power(t) + (p.lambda() * (2.0 + 4.0 * p.s() * p.s())).sqrt()
}

/// Which term of the three-way max fixed `σ_t`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SigmaBranch {
    Moment,
    Floor,
    Confidence,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SigmaChoice {
    pub sigma: f64,
    pub branch: SigmaBranch,
}

/// `σ_t = max{ν_t, σ_min, √(2β_{t-1} / (τ₀ √α t^c)) ‖X_t‖_{V_{t-1}⁻¹}}`.
///
/// Pass the global moment bound as `nu_t` when per-round moments are not
/// available.
pub fn compute_sigma(nu_t: f64, x_vnorm: f64, beta_prev: f64, t: u64, p: &HuberParams) -> SigmaChoice {
    let conf = (2.0 * beta_prev / (p.tau0 * p.alpha().sqrt() * p.t_power(t))).sqrt() * x_vnorm;
    let (mut sigma, mut branch) =
        if nu_t >= p.sigma_min() { (nu_t, SigmaBranch::Moment) } else { (p.sigma_min(), SigmaBranch::Floor) };
    if conf > sigma {
        sigma = conf;
        branch = SigmaBranch::Confidence;
    }
    SigmaChoice { sigma, branch }
}

/// `τ_t = τ₀ (√(1+w²)/w) t^c`.
pub fn compute_tau(w: f64, t: u64, p: &HuberParams) -> Result<f64> {
    if !(w > 0.0) || !w.is_finite() {
        return Err(Error::DegenerateArm(format!("w = {w} leaves the Huber threshold undefined")));
    }
    Ok(p.tau0 * ((1.0 + w * w).sqrt() / w) * p.t_power(t))
}

/// Per-round normalization and threshold for the arm just played.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoundSchedule {
    pub t: u64,
    pub sigma: f64,
    pub branch: SigmaBranch,
    pub w: f64,
    pub tau: f64,
    /// `‖X_t‖_{V_{t-1}⁻¹}`
    pub x_vnorm: f64,
}

impl RoundSchedule {
    /// `α w²`, which stays at most 1/8 when the confidence branch sets `σ_t`.
    pub fn alpha_w_sq(&self, alpha: f64) -> f64 {
        alpha * self.w * self.w
    }
}

/// Schedule for round `t` given `V_{t-1}` and `β_{t-1}`. Returns `None`
/// for an arm with zero `V⁻¹`-norm, which carries no information.
pub fn round_schedule(
    p: &HuberParams,
    v_prev: &SpdMatrix,
    beta_prev: f64,
    t: u64,
    x: &Vector,
    nu_t: f64,
) -> Result<Option<RoundSchedule>> {
    if t == 0 {
        return Err(Error::invalid("rounds are numbered from 1"));
    }
    if !(nu_t >= 0.0 && nu_t.is_finite()) {
        return Err(Error::invalid(format!("moment bound must be finite and >= 0, got {nu_t}")));
    }
    let x_vnorm = v_prev.inv_norm(x)?;
    if x_vnorm == 0.0 {
        return Ok(None);
    }
    let SigmaChoice { sigma, branch } = compute_sigma(nu_t, x_vnorm, beta_prev, t, p);
    let w = x_vnorm / (p.alpha().sqrt() * sigma);
    let tau = compute_tau(w, t, p)?;
    Ok(Some(RoundSchedule { t, sigma, branch, w, tau, x_vnorm }))
}

/// One mirror-descent step with the local-norm regularizer `½‖θ‖²_{V_t}`:
/// a gradient step preconditioned by `V_t⁻¹`, then the `V_t`-projection onto
/// the `radius`-ball. `v_t` must already include the current arm.
pub fn omd_step(
    theta: &Vector,
    v_t: &SpdMatrix,
    x: &Vector,
    reward: f64,
    sched: &RoundSchedule,
    radius: f64,
) -> Result<Vector> {
    let grad = loss_gradient(theta, x, reward, sched.sigma, sched.tau);
    let stepped = theta - v_t.inverse() * grad;
    project_ball_vnorm(&stepped, v_t, radius)
}

/// The one-pass Huber UCB policy.
#[derive(Debug, Clone)]
pub struct HvtUcb {
    params: HuberParams,
    /// Rounds completed.
    t: u64,
    theta_hat: Vector,
    v: SpdMatrix,
    beta_prev: f64,
}

impl HvtUcb {
    pub fn new(params: HuberParams) -> Result<Self> {
        let d = params.d();
        Ok(Self {
            v: SpdMatrix::scaled_identity(params.lambda(), d)?,
            theta_hat: Vector::zeros(d),
            beta_prev: compute_beta(0, &params),
            t: 0,
            params,
        })
    }

    /// See [`SpdMatrix::with_refresh_every`].
    pub fn with_inverse_refresh(mut self, every: Option<usize>) -> Self {
        self.v = self.v.with_refresh_every(every);
        self
    }

    pub fn params(&self) -> &HuberParams {
        &self.params
    }
    pub fn rounds(&self) -> u64 {
        self.t
    }
    pub fn v(&self) -> &SpdMatrix {
        &self.v
    }
    pub fn beta_prev(&self) -> f64 {
        self.beta_prev
    }

    pub fn ucb_score(&self, x: &Vector) -> Result<f64> {
        ucb_score(x, &self.theta_hat, &self.v, self.beta_prev)
    }

    pub fn select<'a>(&self, arms: &'a [Vector]) -> Result<(usize, &'a Vector)> {
        let (i, _) = ucb_argmax(arms, &self.theta_hat, &self.v, self.beta_prev)?;
        Ok((i, &arms[i]))
    }

    /// Schedule the next round would use for arm `x`, without committing.
    pub fn schedule(&self, x: &Vector, nu_t: f64) -> Result<Option<RoundSchedule>> {
        round_schedule(&self.params, &self.v, self.beta_prev, self.t + 1, x, nu_t)
    }

    /// Complete one round: schedule, `V` update, OMD step, `β` update, in
    /// that order.
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
            let alpha = self.params.alpha();
            self.v.rank1_update(x, 1.0 / (alpha * s.sigma * s.sigma))?;
            self.theta_hat = omd_step(&self.theta_hat, &self.v, x, reward, s, self.params.s())?;
        }
        self.t = t;
        self.beta_prev = compute_beta(t, &self.params);
        Ok(sched)
    }
}

impl BanditPolicy for HvtUcb {
    fn name(&self) -> &'static str {
        "hvt_ucb"
    }

    fn select_arm(&self, arms: &[Vector]) -> Result<usize> {
        self.select(arms).map(|(i, _)| i)
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

#[cfg(test)]
mod tests {
    use super::*;
    use crate::huber::loss_gradient;
    use crate::linalg::vnorm;
    use nalgebra::{dvector, DMatrix, DVector};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn experiment_params(epsilon: f64) -> HuberParams {
        HuberParams::new(ScheduleConfig::recommended(2, 18_000, epsilon)).unwrap()
    }

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    // Reference values evaluated at 50 significant digits (mpmath) for
    // d = 2, T = 18000, λ = 2, σ_min = 1/√T, δ = 1/(8T), S = L = 1, α = 4.
    const KAPPA: f64 = 33.647330801799074162;
    const TAU0_EPS099: f64 = 1.4424608707036728294;
    const TAU0_EPS1: f64 = 1.4463894017749287375;
    const BETA100_EPS099: f64 = 5026.0005381102619381;
    const BETA_EPS1: f64 = 4981.7422767379040542;
    const TAU_W025_T16_EPS099: f64 = 5.9889947001658203031;

    #[test]
    fn derived_constants_match_reference() {
        let p = experiment_params(0.99);
        assert!(rel(p.kappa(), KAPPA) < 1e-12);
        assert!(rel(p.tau0(), TAU0_EPS099) < 1e-12);
        assert!(rel(experiment_params(1.0).tau0(), TAU0_EPS1) < 1e-12);
        let literal = 2.0 * (1.0f64 + 18_000.0 / (4.0 * (1.0 / 18_000.0) * 2.0 * 2.0)).ln();
        assert!(rel(p.kappa(), literal) < 1e-12);
    }

    #[test]
    fn params_reject_out_of_range() {
        let base = ScheduleConfig::recommended(2, 100, 0.5);
        for bad in [
            ScheduleConfig { epsilon: 0.0, ..base },
            ScheduleConfig { epsilon: 1.5, ..base },
            ScheduleConfig { delta: 1.0, ..base },
            ScheduleConfig { lambda: 0.0, ..base },
            ScheduleConfig { horizon: 0, ..base },
            ScheduleConfig { d: 0, ..base },
            ScheduleConfig { sigma_min: -1.0, ..base },
        ] {
            assert!(HuberParams::new(bad).is_err(), "{bad:?}");
        }
    }

    #[test]
    fn beta_at_zero() {
        let p = experiment_params(0.99);
        assert!((compute_beta(0, &p) - 12f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn beta_constant_when_epsilon_one() {
        let p = experiment_params(1.0);
        for t in [0, 1, 17, 18_000] {
            assert!(rel(compute_beta(t, &p), BETA_EPS1) < 1e-12);
        }
    }

    #[test]
    fn beta_matches_reference() {
        assert!(rel(compute_beta(100, &experiment_params(0.99)), BETA100_EPS099) < 1e-9);
    }

    #[test]
    fn sigma_branches() {
        let p = experiment_params(0.99);
        let s = compute_sigma(1.31, 1e-6, 3.0, 5, &p);
        assert_eq!(s.sigma, 1.31);
        assert_eq!(s.branch, SigmaBranch::Moment);
        let s = compute_sigma(1.31, 0.0, 5000.0, 5, &p);
        assert_eq!(s.sigma, 1.31);
        let s = compute_sigma(0.0, 0.0, 5000.0, 5, &p);
        assert_eq!(s.sigma, p.sigma_min());
        assert_eq!(s.branch, SigmaBranch::Floor);
    }

    #[test]
    fn sigma_confidence_branch_hand_value() {
        // τ₀ = 1 and α = 4 drive the branch to √(2·10/(1·2·1))·1 = √10.
        let raw =
            HuberParams::new(ScheduleConfig { epsilon: 1.0, ..ScheduleConfig::recommended(2, 100, 1.0) }).unwrap();
        let p = HuberParams { tau0: 1.0, ..raw };
        let s = compute_sigma(0.5, 1.0, 10.0, 1, &p);
        assert_eq!(s.branch, SigmaBranch::Confidence);
        assert!((s.sigma - 10f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn tau_examples() {
        let p1 = experiment_params(1.0);
        assert!((compute_tau(1.0, 1, &p1).unwrap() - p1.tau0() * 2f64.sqrt()).abs() < 1e-12);
        assert!(rel(compute_tau(1e6, 1, &p1).unwrap(), p1.tau0()) < 1e-6);
        let p = experiment_params(0.99);
        assert!(rel(compute_tau(0.25, 16, &p).unwrap(), TAU_W025_T16_EPS099) < 1e-9);
        assert!(matches!(compute_tau(0.0, 1, &p), Err(Error::DegenerateArm(_))));
    }

    #[test]
    fn tau_decreasing_in_w_and_floored() {
        let p = experiment_params(0.5);
        let mut prev = f64::INFINITY;
        for k in 1..200 {
            let w = k as f64 * 0.05;
            let tau = compute_tau(w, 40, &p).unwrap();
            assert!(tau < prev);
            assert!(tau >= p.tau0() * 40f64.powf(p.t_exponent()));
            prev = tau;
        }
    }

    #[test]
    fn confidence_branch_keeps_alpha_w_sq_small() {
        let p = experiment_params(0.99);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..1000 {
            let t = rng.random_range(1..18_000);
            let beta_prev = compute_beta(t - 1, &p);
            let xv = rng.random_range(1e-3..5.0);
            let s = compute_sigma(1.31, xv, beta_prev, t, &p);
            if s.branch == SigmaBranch::Confidence {
                let w = xv / (p.alpha().sqrt() * s.sigma);
                assert!(p.alpha() * w * w <= 0.125 + 1e-10);
            }
        }
    }

    #[test]
    fn ucb_score_terms() {
        let mut est = HvtUcb::new(experiment_params(0.99)).unwrap();
        assert_eq!(est.ucb_score(&dvector![0.0, 0.0]).unwrap(), 0.0);
        est.theta_hat = dvector![0.3, -0.1];
        est.beta_prev = 0.0;
        assert_eq!(est.ucb_score(&dvector![1.0, 2.0]).unwrap(), dvector![1.0, 2.0].dot(&est.theta_hat));

        let mut rng = ChaCha8Rng::seed_from_u64(2);
        est.beta_prev = 2.5;
        for _ in 0..20 {
            est.v.rank1_update(&dvector![rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)], 0.3).unwrap();
        }
        for _ in 0..100 {
            let x = dvector![rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
            let mean = x.dot(&est.theta_hat);
            let bonus = 2.5 * (x.transpose() * est.v.inverse() * &x)[(0, 0)].sqrt();
            assert!((est.ucb_score(&x).unwrap() - (mean + bonus)).abs() <= 1e-12);
        }
    }

    #[test]
    fn select_arm_rules() {
        let est = HvtUcb::new(experiment_params(0.99)).unwrap();
        assert!(est.select(&[]).is_err());
        let one = [dvector![0.2, 0.1]];
        assert_eq!(est.select(&one).unwrap().0, 0);
        let twins = [dvector![0.2, 0.1], dvector![0.2, 0.1]];
        assert_eq!(est.select(&twins).unwrap().0, 0);
    }

    fn exhaustive_argmax(arms: &[Vector], theta: &Vector, vinv: &DMatrix<f64>, beta: f64) -> usize {
        let scores: Vec<f64> =
            arms.iter().map(|x| x.dot(theta) + beta * (x.transpose() * vinv * x)[(0, 0)].max(0.0).sqrt()).collect();
        let mut best = 0;
        for i in 1..scores.len() {
            if scores[i] > scores[best] {
                best = i;
            }
        }
        best
    }

    #[test]
    fn select_arm_matches_exhaustive() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let mut est = HvtUcb::new(experiment_params(0.99)).unwrap();
        for _ in 0..200 {
            est.theta_hat = dvector![rng.random_range(-0.7..0.7), rng.random_range(-0.7..0.7)];
            est.beta_prev = rng.random_range(0.0..3.0);
            est.v.rank1_update(&dvector![rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)], 2.0).unwrap();
            let arms: Vec<Vector> =
                (0..50).map(|_| dvector![rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)]).collect();
            let want = exhaustive_argmax(&arms, &est.theta_hat, est.v.inverse(), est.beta_prev);
            assert_eq!(est.select(&arms).unwrap().0, want);
        }
    }

    #[test]
    fn zero_gradient_is_fixed_point() {
        let mut est = HvtUcb::new(experiment_params(0.99)).unwrap();
        est.theta_hat = dvector![0.4, -0.3];
        let x = dvector![0.5, 0.5];
        let r = x.dot(&est.theta_hat);
        let before = est.theta_hat.clone();
        est.advance(&x, r, 1.31).unwrap();
        assert_eq!(est.theta_hat, before);
        assert_eq!(est.rounds(), 1);
        assert!(rel(est.beta_prev(), compute_beta(1, est.params())) < 1e-15);
    }

    #[test]
    fn zero_arm_is_noop_on_estimate() {
        let mut est = HvtUcb::new(experiment_params(0.99)).unwrap();
        let x = dvector![0.0, 0.0];
        assert_eq!(est.ucb_score(&x).unwrap(), 0.0);
        assert!(est.schedule(&x, 1.31).unwrap().is_none());
        let v_before = est.v.clone();
        assert!(est.advance(&x, 10.0, 1.31).unwrap().is_none());
        assert_eq!(est.v, v_before);
        assert_eq!(est.theta_hat, dvector![0.0, 0.0]);
        assert_eq!(est.rounds(), 1);
    }

    /// Minimizes ⟨θ, g⟩ + ½‖θ - θ̂‖²_V over the ball by a dense polar grid
    /// with local pattern-search refinement.
    fn omd_objective_minimizer(g: &Vector, theta_hat: &Vector, m: &DMatrix<f64>, radius: f64) -> Vector {
        let f = |u: &Vector| u.dot(g) + 0.5 * vnorm(&(u - theta_hat), m).unwrap().powi(2);
        let mut best = (f64::INFINITY, dvector![0.0, 0.0]);
        let (nr, na) = (400, 800);
        for i in 0..=nr {
            let rr = radius * i as f64 / nr as f64;
            for j in 0..na {
                let a = 2.0 * std::f64::consts::PI * j as f64 / na as f64;
                let u = dvector![rr * a.cos(), rr * a.sin()];
                let val = f(&u);
                if val < best.0 {
                    best = (val, u);
                }
            }
        }
        let mut step = radius / nr as f64;
        let mut u = best.1;
        let mut fu = best.0;
        while step > 1e-12 {
            let mut moved = false;
            for dir in [dvector![1.0, 0.0], dvector![-1.0, 0.0], dvector![0.0, 1.0], dvector![0.0, -1.0]] {
                let mut cand = &u + dir * step;
                let n = cand.norm();
                if n > radius {
                    cand *= radius / n;
                }
                let fc = f(&cand);
                if fc < fu {
                    u = cand;
                    fu = fc;
                    moved = true;
                }
            }
            if !moved {
                step *= 0.5;
            }
        }
        u
    }

    #[test]
    fn single_step_matches_bregman_objective_minimizer() {
        // Small-constant schedule so the step is large enough to hit the ball.
        let cfg = ScheduleConfig { delta: 0.5, sigma_min: 0.5, ..ScheduleConfig::recommended(2, 10, 1.0) };
        let params = HuberParams::new(cfg).unwrap();
        let cases = [(dvector![1.0, 0.0], 40.0), (dvector![0.6, 0.8], -25.0), (dvector![0.3, -0.2], 0.4)];
        for (x, r) in cases {
            let mut est = HvtUcb::new(params).unwrap();
            est.beta_prev = 0.01;
            let sched = est.advance(&x, r, 0.01).unwrap().unwrap();
            let g = loss_gradient(&Vector::zeros(2), &x, r, sched.sigma, sched.tau);
            let want = omd_objective_minimizer(&g, &Vector::zeros(2), est.v.matrix(), params.s());
            assert!((&est.theta_hat - &want).norm() < 1e-6, "{} vs {}", est.theta_hat, want);
        }
    }

    #[test]
    fn v_recursion_matches_direct_accumulation() {
        let p = experiment_params(0.99);
        let mut est = HvtUcb::new(p).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let mut direct = DMatrix::<f64>::identity(2, 2) * p.lambda();
        for _ in 0..500 {
            let x = dvector![rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
            let r = x.dot(&dvector![0.6, 0.8]) + rng.random_range(-1.0..1.0);
            let s = est.advance(&x, r, 1.31).unwrap().unwrap();
            direct += &x * x.transpose() / (p.alpha() * s.sigma * s.sigma);
            assert!(est.theta_hat.norm() <= p.s() + 1e-10);
        }
        assert!((est.v.matrix() - direct).norm() <= 1e-8);
        assert!(est.v.inverse_residual() <= 1e-8);
    }

    #[test]
    fn schedule_identities() {
        let p = experiment_params(0.99);
        let est = HvtUcb::new(p).unwrap();
        let x = dvector![0.6, -0.3];
        let s = est.schedule(&x, 1.31).unwrap().unwrap();
        assert_eq!(s.w, (1.0 / p.alpha().sqrt()) * s.x_vnorm / s.sigma);
        assert!(rel(s.tau, p.tau0() * (1.0 + s.w * s.w).sqrt() / s.w) < 1e-15);
    }

    proptest! {
        #[test]
        fn beta_monotone(eps in 0.01f64..=1.0, t in 0u64..100_000) {
            let p = HuberParams::new(ScheduleConfig::recommended(3, 100_000, eps)).unwrap();
            prop_assert!(compute_beta(t + 1, &p) >= compute_beta(t, &p));
            prop_assert!(compute_beta(t, &p) > 0.0);
        }

        #[test]
        fn estimate_stays_in_ball(seed in any::<u64>(), eps in 0.1f64..=1.0) {
            let cfg = ScheduleConfig { delta: 0.3, ..ScheduleConfig::recommended(2, 50, eps) };
            let mut est = HvtUcb::new(HuberParams::new(cfg).unwrap()).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for _ in 0..50 {
                let x = DVector::from_fn(2, |_, _| rng.random_range(-1.0..1.0));
                let r = rng.random_range(-50.0..50.0);
                est.advance(&x, r, rng.random_range(0.0..2.0)).unwrap();
                prop_assert!(est.theta_hat.norm() <= 1.0 + 1e-10);
            }
        }
    }
}
