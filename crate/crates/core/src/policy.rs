//! The interface shared by every bandit policy the runner can drive.

use crate::error::{Error, Result};
use crate::estimator::RoundSchedule;
use crate::linalg::{SpdMatrix, Vector};

pub trait BanditPolicy {
    fn name(&self) -> &'static str;

    /// Index of the arm to play next; ties go to the lowest index.
    fn select_arm(&self, arms: &[Vector]) -> Result<usize>;

    /// Feed back the reward for the arm just played, together with the
    /// moment bound `nu` reported for that round.
    fn observe(&mut self, x: &Vector, reward: f64, nu: f64) -> Result<Option<RoundSchedule>>;

    fn theta_hat(&self) -> &Vector;

    /// The Gram-type matrix and radius that define the current confidence
    /// ellipsoid around [`theta_hat`](Self::theta_hat).
    fn confidence(&self) -> (&SpdMatrix, f64);

    /// Select, query `reward(index) -> (reward, nu)`, then observe.
    fn round<F>(&mut self, arms: &[Vector], mut reward: F) -> Result<(usize, Option<RoundSchedule>)>
    where
        F: FnMut(usize) -> Result<(f64, f64)>,
        Self: Sized,
    {
        let idx = self.select_arm(arms)?;
        let (r, nu) = reward(idx)?;
        let sched = self.observe(&arms[idx], r, nu)?;
        Ok((idx, sched))
    }
}

/// `⟨x, θ⟩ + β ‖x‖_{V⁻¹}`.
pub fn ucb_score(x: &Vector, theta: &Vector, v: &SpdMatrix, beta: f64) -> Result<f64> {
    if x.len() != theta.len() {
        return Err(Error::invalid("arm dimension does not match the estimator"));
    }
    let mean = x.dot(theta);
    if beta == 0.0 {
        return Ok(mean);
    }
    Ok(mean + beta * v.inv_norm(x)?)
}

/// Arg-max of [`ucb_score`] over `arms`, lowest index on ties.
pub fn ucb_argmax(arms: &[Vector], theta: &Vector, v: &SpdMatrix, beta: f64) -> Result<(usize, f64)> {
    if arms.is_empty() {
        return Err(Error::invalid("arm set is empty"));
    }
    let mut best = (0, f64::NEG_INFINITY);
    for (i, x) in arms.iter().enumerate() {
        let s = ucb_score(x, theta, v, beta)?;
        if s > best.1 {
            best = (i, s);
        }
    }
    Ok(best)
}
