//! Synthetic linear bandit instances, noise, rewards and regret.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StudentT};

use crate::error::{Error, Result};
use crate::linalg::Vector;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoiseFamily {
    /// Standard (unit-scale) Student-t.
    StudentT { df: f64 },
    /// Zero-mean normal; `std = 0` gives noiseless rewards.
    Gaussian { std: f64 },
}

/// Noise law plus the moment bound `E|η|^{1+ε} ≤ ν^{1+ε}` that the
/// learners are told about.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    family: NoiseFamily,
    epsilon: f64,
    nu: f64,
}

impl NoiseSpec {
    pub fn new(family: NoiseFamily, epsilon: f64, nu: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon <= 1.0) {
            return Err(Error::invalid(format!("epsilon must lie in (0, 1], got {epsilon}")));
        }
        if !(nu >= 0.0 && nu.is_finite()) {
            return Err(Error::invalid(format!("nu must be finite and >= 0, got {nu}")));
        }
        match family {
            NoiseFamily::StudentT { df } if !(df > 1.0 + epsilon && df.is_finite()) => {
                return Err(Error::invalid(format!(
                    "student-t with df = {df} has no finite moment of order 1 + {epsilon}"
                )));
            }
            NoiseFamily::Gaussian { std } if !(std >= 0.0 && std.is_finite()) => {
                return Err(Error::invalid(format!("gaussian std must be >= 0, got {std}")));
            }
            _ => {}
        }
        Ok(Self { family, epsilon, nu })
    }

    /// Student-t with `df = 2.1`, `ε = 0.99`, `ν = 1.31`.
    pub fn heavy_tailed_default() -> Self {
        Self { family: NoiseFamily::StudentT { df: 2.1 }, epsilon: 0.99, nu: 1.31 }
    }

    /// Standard normal with `ε = 1`, `ν = 1`.
    pub fn gaussian_default() -> Self {
        Self { family: NoiseFamily::Gaussian { std: 1.0 }, epsilon: 1.0, nu: 1.0 }
    }

    pub fn family(&self) -> NoiseFamily {
        self.family
    }
    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }
    pub fn nu(&self) -> f64 {
        self.nu
    }

    pub fn sampler(&self) -> NoiseSampler {
        match self.family {
            NoiseFamily::StudentT { df } => NoiseSampler::StudentT(StudentT::new(df).expect("validated df")),
            NoiseFamily::Gaussian { std: 0.0 } => NoiseSampler::Zero,
            NoiseFamily::Gaussian { std } => NoiseSampler::Gaussian(Normal::new(0.0, std).expect("validated std")),
        }
    }
}

/// Pre-built distribution for repeated draws.
#[derive(Debug, Clone, Copy)]
pub enum NoiseSampler {
    StudentT(StudentT<f64>),
    Gaussian(Normal<f64>),
    Zero,
}

impl NoiseSampler {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            NoiseSampler::StudentT(d) => d.sample(rng),
            NoiseSampler::Gaussian(d) => d.sample(rng),
            NoiseSampler::Zero => 0.0,
        }
    }
}

/// One draw from `spec`'s noise law.
pub fn sample_noise<R: Rng + ?Sized>(spec: &NoiseSpec, rng: &mut R) -> f64 {
    spec.sampler().sample(rng)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BanditInstance {
    theta_star: Vector,
    arms: Vec<Vector>,
    noise: NoiseSpec,
    s: f64,
    l: f64,
    best_value: f64,
}

fn uniform_vector<R: Rng + ?Sized>(rng: &mut R, d: usize) -> Vector {
    Vector::from_fn(d, |_, _| rng.random_range(-1.0..=1.0))
}

/// `n` arms with coordinates uniform on `[-1, 1]`, each scaled by
/// `L / max(1, ‖x‖₂)`.
pub fn sample_arms<R: Rng + ?Sized>(rng: &mut R, d: usize, n: usize, l: f64) -> Vec<Vector> {
    (0..n)
        .map(|_| {
            let x = uniform_vector(rng, d);
            let scale = l / x.norm().max(1.0);
            x * scale
        })
        .collect()
}

impl BanditInstance {
    pub fn new(theta_star: Vector, arms: Vec<Vector>, noise: NoiseSpec, s: f64, l: f64) -> Result<Self> {
        if arms.is_empty() {
            return Err(Error::invalid("an instance needs at least one arm"));
        }
        if arms.iter().any(|a| a.len() != theta_star.len()) {
            return Err(Error::invalid("arm and parameter dimensions differ"));
        }
        if (theta_star.norm() - s).abs() > 1e-10 {
            return Err(Error::invalid(format!("‖θ*‖ = {} but S = {s}", theta_star.norm())));
        }
        if let Some(a) = arms.iter().find(|a| a.norm() > l + 1e-12) {
            return Err(Error::invalid(format!("arm norm {} exceeds L = {l}", a.norm())));
        }
        let best_value = best_value(&arms, &theta_star);
        Ok(Self { theta_star, arms, noise, s, l, best_value })
    }

    pub fn theta_star(&self) -> &Vector {
        &self.theta_star
    }
    pub fn arms(&self) -> &[Vector] {
        &self.arms
    }
    pub fn noise(&self) -> &NoiseSpec {
        &self.noise
    }
    pub fn s(&self) -> f64 {
        self.s
    }
    pub fn l(&self) -> f64 {
        self.l
    }
    pub fn dim(&self) -> usize {
        self.theta_star.len()
    }
    pub fn best_value(&self) -> f64 {
        self.best_value
    }

    /// Same parameter and noise, fresh arm set.
    pub fn redraw_arms<R: Rng + ?Sized>(&self, rng: &mut R) -> Self {
        let arms = sample_arms(rng, self.dim(), self.arms.len(), self.l);
        let best_value = best_value(&arms, &self.theta_star);
        Self { arms, best_value, ..self.clone() }
    }

    fn arm(&self, idx: usize) -> Result<&Vector> {
        self.arms
            .get(idx)
            .ok_or_else(|| Error::invalid(format!("arm index {idx} out of range (n = {})", self.arms.len())))
    }

    pub fn expected_reward(&self, idx: usize) -> Result<f64> {
        Ok(self.arm(idx)?.dot(&self.theta_star))
    }

    /// Reward for `idx` and the moment bound reported with it.
    pub fn play<R: Rng + ?Sized>(&self, idx: usize, sampler: &NoiseSampler, rng: &mut R) -> Result<(f64, f64)> {
        let mean = self.expected_reward(idx)?;
        Ok((mean + sampler.sample(rng), self.noise.nu))
    }

    /// `max_x xᵀθ* - x_idxᵀθ*`.
    pub fn regret_increment(&self, idx: usize) -> Result<f64> {
        Ok((self.best_value - self.expected_reward(idx)?).max(0.0))
    }
}

fn best_value(arms: &[Vector], theta: &Vector) -> f64 {
    arms.iter().map(|a| a.dot(theta)).fold(f64::NEG_INFINITY, f64::max)
}

/// Arms and `θ*` drawn coordinate-wise uniform on `[-1, 1]`; arms clamped
/// to norm at most `L`, `θ*` rescaled to norm exactly `S`.
pub fn sample_instance<R: Rng + ?Sized>(
    d: usize,
    n: usize,
    s: f64,
    l: f64,
    noise: NoiseSpec,
    rng: &mut R,
) -> Result<BanditInstance> {
    if d == 0 || n == 0 {
        return Err(Error::invalid("instance needs d >= 1 and n >= 1"));
    }
    if !(s > 0.0 && l > 0.0) {
        return Err(Error::invalid("S and L must be positive"));
    }
    let arms = sample_arms(rng, d, n, l);
    let mut theta = uniform_vector(rng, d);
    while theta.norm() == 0.0 {
        theta = uniform_vector(rng, d);
    }
    let theta_star = &theta * (s / theta.norm());
    BanditInstance::new(theta_star, arms, noise, s, l)
}

pub fn sample_instance_seeded(
    d: usize,
    n: usize,
    s: f64,
    l: f64,
    noise: NoiseSpec,
    seed: u64,
) -> Result<BanditInstance> {
    sample_instance(d, n, s, l, noise, &mut ChaCha8Rng::seed_from_u64(seed))
}

/// Independent random streams for one trial, derived from the master seed
/// and the trial index.
#[derive(Debug, Clone)]
pub struct TrialStreams {
    pub instance: ChaCha8Rng,
    pub noise: ChaCha8Rng,
    pub arms: ChaCha8Rng,
}

impl TrialStreams {
    pub fn new(master_seed: u64, trial: u64) -> Self {
        let stream = |k: u64| {
            let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
            rng.set_stream(trial.wrapping_mul(3).wrapping_add(k));
            rng
        };
        Self { instance: stream(0), noise: stream(1), arms: stream(2) }
    }
}
