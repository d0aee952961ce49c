//! First-order Nash stationarity measures and the ε-FNE verdict.
//!
//! The X measure is the best linearized decrease available to the min
//! player inside the feasible set intersected with a unit ball; the Y
//! measure is the analogous ascent quantity for the max player. A point is
//! an ε-FNE when both are at most ε.

use crate::error::{Error, Result};
use crate::geometry::linear_min_local;
use crate::linalg::{all_finite, scale};
use crate::oracle::ProblemOracle;

/// The pair (X, Y) of stationarity measures at a point.
#[derive(Debug, Clone)]
pub struct StationarityReport {
    pub x_measure: f64,
    pub y_measure: f64,
    pub point_theta: Vec<f64>,
    pub point_alpha: Vec<f64>,
}

impl StationarityReport {
    pub fn worst(&self) -> f64 {
        self.x_measure.max(self.y_measure)
    }
}

/// X(θ, α) = -min { <∇_θ f(θ,α), s> : θ+s ∈ Θ, ||s|| ≤ 1 }.
///
/// Equals ||∇_θ f|| when Θ is unconstrained. Negative round-off is
/// clamped to zero.
pub fn x_measure(problem: &ProblemOracle, theta: &[f64], alpha: &[f64]) -> Result<f64> {
    let g = problem.grad_theta(theta, alpha);
    if !all_finite(&g) {
        return Err(Error::Numeric("x_measure: non-finite ∇_θ f".into()));
    }
    let r = linear_min_local(&problem.theta_set, theta, &g)?;
    Ok((-r.value).max(0.0))
}

/// Y(θ, α) = max { <∇_α f(θ,α), s> : α+s ∈ 𝒜, ||s|| ≤ 1 }, computed as
/// the negated linear minimum of -∇_α f. Clamped to zero like X.
pub fn y_measure(problem: &ProblemOracle, theta: &[f64], alpha: &[f64]) -> Result<f64> {
    let g = problem.grad_alpha(theta, alpha);
    if !all_finite(&g) {
        return Err(Error::Numeric("y_measure: non-finite ∇_α f".into()));
    }
    let r = linear_min_local(&problem.alpha_set, alpha, &scale(&g, -1.0))?;
    Ok((-r.value).max(0.0))
}

/// Evaluate both measures at once.
pub fn stationarity(
    problem: &ProblemOracle,
    theta: &[f64],
    alpha: &[f64],
) -> Result<StationarityReport> {
    Ok(StationarityReport {
        x_measure: x_measure(problem, theta, alpha)?,
        y_measure: y_measure(problem, theta, alpha)?,
        point_theta: theta.to_vec(),
        point_alpha: alpha.to_vec(),
    })
}

/// True iff both measures are at most eps. The comparison is raw: the
/// inner-solver tolerance is not subtracted, so callers should pick eps
/// comfortably above it.
pub fn is_eps_fne(report: &StationarityReport, eps: f64) -> Result<bool> {
    if eps <= 0.0 {
        return Err(Error::InvalidInput("eps must be positive".into()));
    }
    Ok(report.x_measure <= eps && report.y_measure <= eps)
}
