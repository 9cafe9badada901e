//! Small dense vectors and symmetric positive-definite matrices.
//!
//! [`SpdMatrix`] carries its own inverse, kept current through
//! Sherman-Morrison rank-one updates so that `‖x‖_{M^{-1}}` costs O(d²)
//! per query without ever re-factoring.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

pub type Vector = DVector<f64>;

/// Radicands below this are treated as a numerical failure rather than
/// round-off.
const NEG_RADICAND_TOL: f64 = -1e-12;

const PROJ_TOL: f64 = 1e-12;
const PROJ_MAX_ITER: usize = 200;

pub(crate) fn ensure_finite(x: &Vector, what: &str) -> Result<()> {
    if x.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::invalid(format!("{what} has non-finite entries")))
    }
}

/// A symmetric positive-definite matrix together with its inverse.
#[derive(Debug, Clone, PartialEq)]
pub struct SpdMatrix {
    m: DMatrix<f64>,
    m_inv: DMatrix<f64>,
    /// log det(M) - log det(M_0), tracked through the determinant lemma.
    log_det_ratio: f64,
    updates: usize,
    refresh_every: Option<usize>,
}

impl SpdMatrix {
    /// `lambda * I_d` with inverse `I_d / lambda`.
    pub fn scaled_identity(lambda: f64, d: usize) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::invalid(format!("lambda must be positive, got {lambda}")));
        }
        if d == 0 {
            return Err(Error::invalid("dimension must be at least 1"));
        }
        Ok(Self {
            m: DMatrix::from_diagonal_element(d, d, lambda),
            m_inv: DMatrix::from_diagonal_element(d, d, 1.0 / lambda),
            log_det_ratio: 0.0,
            updates: 0,
            refresh_every: None,
        })
    }

    /// Re-derive the inverse from scratch every `n` updates. Off by default.
    pub fn with_refresh_every(mut self, n: Option<usize>) -> Self {
        self.refresh_every = n.filter(|&n| n > 0);
        self
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.m
    }

    pub fn inverse(&self) -> &DMatrix<f64> {
        &self.m_inv
    }

    pub fn log_det_ratio(&self) -> f64 {
        self.log_det_ratio
    }

    pub fn updates(&self) -> usize {
        self.updates
    }

    /// `M <- M + c x xᵀ`, with the inverse updated in closed form.
    pub fn rank1_update(&mut self, x: &Vector, c: f64) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::invalid(format!(
                "vector has length {}, matrix is {}x{}",
                x.len(),
                self.dim(),
                self.dim()
            )));
        }
        ensure_finite(x, "update vector")?;
        if !(c >= 0.0 && c.is_finite()) {
            return Err(Error::invalid(format!("update weight must be finite and >= 0, got {c}")));
        }
        if c == 0.0 {
            return Ok(());
        }

        let u = &self.m_inv * x;
        let quad = x.dot(&u);
        let denom = 1.0 + c * quad;
        self.m_inv.ger(-c / denom, &u, &u, 1.0);
        symmetrize(&mut self.m_inv);
        self.m.ger(c, x, x, 1.0);
        self.log_det_ratio += denom.ln();
        self.updates += 1;

        if let Some(n) = self.refresh_every {
            if self.updates.is_multiple_of(n) {
                self.refresh_inverse()?;
            }
        }
        Ok(())
    }

    /// Recompute the inverse by Cholesky factorization of `M`.
    pub fn refresh_inverse(&mut self) -> Result<()> {
        let chol = self
            .m
            .clone()
            .cholesky()
            .ok_or_else(|| Error::NumericalDegeneracy("matrix lost positive definiteness".into()))?;
        self.m_inv = chol.inverse();
        symmetrize(&mut self.m_inv);
        Ok(())
    }

    /// `‖x‖_M`.
    pub fn norm(&self, x: &Vector) -> Result<f64> {
        vnorm(x, &self.m)
    }

    /// `‖x‖_{M^{-1}}`.
    pub fn inv_norm(&self, x: &Vector) -> Result<f64> {
        vnorm(x, &self.m_inv)
    }

    /// Relative Frobenius residual `‖M M⁻¹ - I‖_F / ‖I‖_F`.
    pub fn inverse_residual(&self) -> f64 {
        let d = self.dim();
        let prod = &self.m * &self.m_inv - DMatrix::<f64>::identity(d, d);
        prod.norm() / (d as f64).sqrt()
    }
}

fn symmetrize(a: &mut DMatrix<f64>) {
    let n = a.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let avg = 0.5 * (a[(i, j)] + a[(j, i)]);
            a[(i, j)] = avg;
            a[(j, i)] = avg;
        }
    }
}

/// `√(xᵀ M x)` for symmetric positive-definite `M`.
///
/// Tiny negative radicands from round-off are clamped to zero.
pub fn vnorm(x: &Vector, m: &DMatrix<f64>) -> Result<f64> {
    if x.len() != m.nrows() || m.nrows() != m.ncols() {
        return Err(Error::invalid("dimension mismatch in vnorm"));
    }
    let mut quad = 0.0;
    for j in 0..x.len() {
        let xj = x[j];
        if xj == 0.0 {
            continue;
        }
        let mut col = 0.0;
        for i in 0..x.len() {
            col += x[i] * m[(i, j)];
        }
        quad += col * xj;
    }
    if quad < NEG_RADICAND_TOL {
        return Err(Error::NumericalDegeneracy(format!("negative quadratic form {quad:e} in vnorm")));
    }
    Ok(quad.max(0.0).sqrt())
}

/// Projection onto the Euclidean ball of radius `radius` in the geometry of
/// `V`: the minimizer of `‖u - theta‖_V` subject to `‖u‖₂ ≤ radius`.
///
/// Feasible points are returned untouched. Otherwise `V` is diagonalized and
/// the KKT multiplier `μ` solving `‖(V + μI)⁻¹ V theta‖₂ = radius` is found by
/// bisection.
pub fn project_ball_vnorm(theta: &Vector, v: &SpdMatrix, radius: f64) -> Result<Vector> {
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::invalid(format!("ball radius must be positive, got {radius}")));
    }
    if theta.len() != v.dim() {
        return Err(Error::invalid("dimension mismatch in projection"));
    }
    ensure_finite(theta, "projection input")?;
    let norm = theta.norm();
    if norm <= radius {
        return Ok(theta.clone());
    }

    let eig = v.matrix().clone().symmetric_eigen();
    let lam = &eig.eigenvalues;
    if lam.iter().any(|&l| l <= 0.0) {
        return Err(Error::NumericalDegeneracy("projection metric is not positive definite".into()));
    }
    let coords = eig.eigenvectors.transpose() * theta;
    let radius_sq = radius * radius;
    let norm_sq_at = |mu: f64| -> f64 {
        coords
            .iter()
            .zip(lam.iter())
            .map(|(&c, &l)| {
                let u = l * c / (l + mu);
                u * u
            })
            .sum()
    };

    // At mu_hi every coordinate shrinks by at least lambda_max / mu_hi.
    let lam_max = lam.iter().cloned().fold(0.0_f64, f64::max);
    let mut lo = 0.0_f64;
    let mut hi = lam_max * norm / radius;
    let mut converged = false;
    for _ in 0..PROJ_MAX_ITER {
        let mid = 0.5 * (lo + hi);
        if norm_sq_at(mid) > radius_sq {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= PROJ_TOL * hi.max(1.0) {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::Convergence { what: "ball projection", iterations: PROJ_MAX_ITER });
    }

    let scaled = DVector::from_iterator(coords.len(), coords.iter().zip(lam.iter()).map(|(&c, &l)| l * c / (l + hi)));
    let mut u = &eig.eigenvectors * scaled;
    // hi sits on the feasible side; pull back any last-ulp excess.
    let un = u.norm();
    if un > radius {
        u *= radius / un;
        while u.norm() > radius {
            u *= 1.0 - f64::EPSILON;
        }
    }
    Ok(u)
}
