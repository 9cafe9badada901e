//! Huber loss, its clipped derivative, and the per-round loss on a
//! normalized residual `z = (r - xᵀθ) / σ`.

use crate::error::{Error, Result};
use crate::linalg::Vector;

/// Huber loss with threshold `tau`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HuberKernel {
    tau: f64,
}

impl HuberKernel {
    pub fn new(tau: f64) -> Result<Self> {
        if tau > 0.0 && !tau.is_nan() {
            Ok(Self { tau })
        } else {
            Err(Error::invalid(format!("huber threshold must be positive, got {tau}")))
        }
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn value(&self, x: f64) -> f64 {
        huber_value(x, self.tau)
    }

    pub fn psi(&self, x: f64) -> f64 {
        psi(x, self.tau)
    }
}

/// Normalized residual of one observation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Residual(pub f64);

impl Residual {
    pub fn of(theta: &Vector, x: &Vector, reward: f64, sigma: f64) -> Self {
        Residual((reward - x.dot(theta)) / sigma)
    }
}

pub fn huber_value(x: f64, tau: f64) -> f64 {
    let a = x.abs();
    if a <= tau {
        0.5 * x * x
    } else {
        tau * a - 0.5 * tau * tau
    }
}

/// Derivative of [`huber_value`]: `x` clipped to `[-tau, tau]`.
pub fn psi(x: f64, tau: f64) -> f64 {
    x.clamp(-tau, tau)
}

pub fn loss_value(theta: &Vector, x: &Vector, reward: f64, sigma: f64, tau: f64) -> f64 {
    huber_value(Residual::of(theta, x, reward, sigma).0, tau)
}

/// `∇_θ ℓ(θ) = -ψ(z) x / σ`.
pub fn loss_gradient(theta: &Vector, x: &Vector, reward: f64, sigma: f64, tau: f64) -> Vector {
    let z = Residual::of(theta, x, reward, sigma).0;
    x * (-psi(z, tau) / sigma)
}
