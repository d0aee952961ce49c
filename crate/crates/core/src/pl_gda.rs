//! Multi-step gradient descent ascent for PL games: an inner plain
//! gradient-ascent loop estimates the inner maximizer, the outer loop takes
//! projected gradient steps on the value function, and the theory-side
//! iteration counts are exposed for the prescribed-accuracy mode.

use crate::error::{Error, Result};
use crate::geometry::project;
use crate::linalg::{all_finite, norm};
use crate::measures::stationarity;
use crate::oracle::ProblemOracle;
use std::time::Instant;

/// Configuration for [`solve_pl`].
#[derive(Debug, Clone)]
pub struct PlConfig {
    /// Target accuracy; used for early exit when `early_exit` is set.
    pub eps: f64,
    /// Inner ascent iterations per outer step.
    pub k_inner: usize,
    /// Outer iterations.
    pub t_outer: usize,
    /// Inner step, 1/l22.
    pub eta1: f64,
    /// Outer step, 1/L with L = l11 + l12^2/(2 mu).
    pub eta2: f64,
    /// Reuse the previous inner solution as the next inner start.
    pub warm_start: bool,
    /// Compute X/Y every `measure_stride` outer iterations.
    pub measure_stride: usize,
    /// Stop once a measured iterate is an eps-FNE.
    pub early_exit: bool,
}

impl PlConfig {
    /// Steps from the oracle's constants, caller-chosen loop counts.
    pub fn from_oracle(problem: &ProblemOracle, eps: f64, k_inner: usize, t_outer: usize) -> Result<Self> {
        let mu = problem
            .mu
            .ok_or_else(|| Error::InvalidInput("PL solver requires mu".into()))?;
        if problem.l22 <= 0.0 {
            return Err(Error::InvalidInput("PL solver requires l22 > 0".into()));
        }
        let l = problem.l11 + problem.l12 * problem.l12 / (2.0 * mu);
        Ok(Self {
            eps,
            k_inner,
            t_outer,
            eta1: 1.0 / problem.l22,
            eta2: 1.0 / l,
            warm_start: true,
            measure_stride: 1,
            early_exit: false,
        })
    }

    fn validate(&self) -> Result<()> {
        if self.t_outer < 1 {
            return Err(Error::InvalidInput("t_outer must be >= 1".into()));
        }
        if self.eta1 <= 0.0 || self.eta2 <= 0.0 {
            return Err(Error::InvalidInput("steps must be positive".into()));
        }
        if self.measure_stride < 1 {
            return Err(Error::InvalidInput("measure_stride must be >= 1".into()));
        }
        Ok(())
    }
}

/// Proof-level constants feeding the prescribed iteration counts.
#[derive(Debug, Clone, serde::Serialize)]
pub struct RateConstants {
    /// Condition number: l22/mu (PL) or l22/lambda (regularized concave).
    pub kappa: f64,
    /// Inner contraction factor 1 - mu/l22 (PL case only).
    pub rho: f64,
    /// Smoothness of the value function.
    pub l_value: f64,
    /// max{l12, l22, L, g_max, 1}.
    pub l_bar: f64,
    /// max{L, l12, g_max}, the Frank-Wolfe step constant.
    pub l_tilde: f64,
    /// max{R, 1}.
    pub r_bar: f64,
    /// Enclosing radius of the relevant feasible set.
    pub r: f64,
    /// Bound on the initial inner gap g(θ_t) - f(θ_t, α_0(θ_t)).
    pub delta: f64,
    /// Bound on g(θ_0) - g*.
    pub delta_g: f64,
    /// max{sup ||∇g||, sup ||∇_α f||, 1}, sampled estimate.
    pub g_max: f64,
    /// PL constant (PL case) or regularizer λ (concave case).
    pub mu: f64,
}

impl RateConstants {
    /// Gradient-error target δ = L ε² / (2⁶ R (g_max + L R)²).
    pub fn delta_error(&self, eps: f64) -> f64 {
        self.l_value * eps * eps
            / (64.0 * self.r * (self.g_max + self.l_value * self.r).powi(2))
    }

    fn validate_pl(&self) -> Result<()> {
        if !(self.rho > 0.0 && self.rho < 1.0) {
            return Err(Error::InvalidInput(format!(
                "rho must lie in (0,1), got {}",
                self.rho
            )));
        }
        Ok(())
    }
}

/// One outer-iteration record of a solve.
#[derive(Debug, Clone)]
pub struct TrajectoryRecord {
    pub iter: usize,
    pub theta: Vec<f64>,
    pub alpha: Vec<f64>,
    pub x_measure: f64,
    pub y_measure: f64,
    pub f_value: f64,
    /// f_λ at the recorded pair; `None` for unregularized solves.
    pub g_lambda_value: Option<f64>,
    /// ||θ_t - θ_{t-1}||; zero on the first record.
    pub step_norm: f64,
    pub wall_time_ns: u128,
}

/// Per-outer-iteration log of a solve, with the best iterate marked.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub records: Vec<TrajectoryRecord>,
    pub best_index: usize,
}

impl Trajectory {
    pub fn best(&self) -> &TrajectoryRecord {
        &self.records[self.best_index]
    }

    /// Smallest recorded iter whose pair satisfies max(X, Y) <= eps.
    pub fn first_reaching(&self, eps: f64) -> Option<&TrajectoryRecord> {
        self.records
            .iter()
            .find(|r| r.x_measure.max(r.y_measure) <= eps)
    }

    pub(crate) fn push_and_track(&mut self, rec: TrajectoryRecord) {
        let worst = rec.x_measure.max(rec.y_measure);
        let cur_best = self
            .records
            .get(self.best_index)
            .map(|r| r.x_measure.max(r.y_measure))
            .unwrap_or(f64::INFINITY);
        self.records.push(rec);
        if worst < cur_best {
            self.best_index = self.records.len() - 1;
        }
    }
}

const ALPHA_DIVERGENCE_BOUND: f64 = 1e6;

/// K plain gradient-ascent steps on α ↦ f(θ, α) with step `eta1`.
/// Requires an unconstrained α player.
pub fn inner_ascent(
    problem: &ProblemOracle,
    theta: &[f64],
    alpha0: &[f64],
    k: usize,
    eta1: f64,
) -> Result<Vec<f64>> {
    if problem.alpha_set.is_bounded() {
        return Err(Error::InvalidInput(
            "inner_ascent requires an unconstrained α player".into(),
        ));
    }
    let mut alpha = alpha0.to_vec();
    for step in 0..k {
        let g = problem.grad_alpha(theta, &alpha);
        if !all_finite(&g) {
            return Err(Error::Numeric(format!(
                "inner_ascent: non-finite gradient at inner step {step}"
            )));
        }
        for (a, gi) in alpha.iter_mut().zip(&g) {
            *a += eta1 * gi;
        }
        if !all_finite(&alpha) || norm(&alpha) > ALPHA_DIVERGENCE_BOUND {
            return Err(Error::Numeric(format!(
                "inner_ascent: iterate diverged at inner step {step}"
            )));
        }
    }
    Ok(alpha)
}

/// Multi-step gradient descent ascent. Each outer iteration runs K inner
/// ascent steps from the warm-started α, records the pair
/// (θ_t, α_K(θ_t)) with its measures, then takes a projected gradient step
/// on θ.
pub fn solve_pl(problem: &ProblemOracle, config: &PlConfig) -> Result<Trajectory> {
    config.validate()?;
    if problem.mu.is_none() {
        return Err(Error::InvalidInput("solve_pl requires problem.mu".into()));
    }
    if problem.alpha_set.is_bounded() {
        return Err(Error::InvalidInput(
            "solve_pl requires an unconstrained α player".into(),
        ));
    }
    if !problem.theta_set.is_bounded() {
        return Err(Error::InvalidInput(
            "solve_pl requires a bounded θ set".into(),
        ));
    }

    let start = Instant::now();
    let mut theta = project(&problem.theta_set, &problem.theta_set.centroid())?;
    let cold_alpha = vec![0.0; problem.alpha_dim()];
    let mut alpha = cold_alpha.clone();
    let mut trajectory = Trajectory {
        records: Vec::new(),
        best_index: 0,
    };
    let mut prev_theta = theta.clone();

    for t in 0..config.t_outer {
        let alpha_k = inner_ascent(problem, &theta, &alpha, config.k_inner, config.eta1)?;

        if t % config.measure_stride == 0 {
            let report = stationarity(problem, &theta, &alpha_k)?;
            trajectory.push_and_track(TrajectoryRecord {
                iter: t,
                theta: theta.clone(),
                alpha: alpha_k.clone(),
                x_measure: report.x_measure,
                y_measure: report.y_measure,
                f_value: problem.f(&theta, &alpha_k),
                g_lambda_value: None,
                step_norm: crate::linalg::dist(&theta, &prev_theta),
                wall_time_ns: start.elapsed().as_nanos(),
            });
            if config.early_exit
                && report.x_measure <= config.eps
                && report.y_measure <= config.eps
            {
                break;
            }
        }

        let g = problem.grad_theta(&theta, &alpha_k);
        if !all_finite(&g) {
            return Err(Error::Numeric(format!(
                "solve_pl: non-finite ∇_θ f at outer iteration {t}"
            )));
        }
        prev_theta = theta.clone();
        let stepped: Vec<f64> = theta
            .iter()
            .zip(&g)
            .map(|(x, gi)| x - config.eta2 * gi)
            .collect();
        theta = project(&problem.theta_set, &stepped)?;

        alpha = if config.warm_start {
            alpha_k
        } else {
            cold_alpha.clone()
        };
    }

    if trajectory.records.is_empty() {
        return Err(Error::Config(
            "solve_pl produced no records; lower measure_stride".into(),
        ));
    }
    Ok(trajectory)
}

/// Iteration counts prescribed by the PL-game analysis:
///
/// K = ⌈(4 log(1/ε) + log(2¹⁵ L̄⁶ R̄⁶ Δ / (L² μ))) / log(1/ρ)⌉,
/// T = ⌈32 Δ_g (g_max + L R)² / (L ε²)⌉.
pub fn pl_iteration_counts(constants: &RateConstants, eps: f64) -> Result<(usize, usize)> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidInput("eps must lie in (0,1)".into()));
    }
    constants.validate_pl()?;
    let c = &constants;
    let k_raw = (4.0 * (1.0 / eps).ln()
        + (2f64.powi(15) * c.l_bar.powi(6) * c.r_bar.powi(6) * c.delta
            / (c.l_value * c.l_value * c.mu))
            .ln())
        / (1.0 / c.rho).ln();
    let t_raw =
        32.0 * c.delta_g * (c.g_max + c.l_value * c.r).powi(2) / (c.l_value * eps * eps);
    Ok((t_raw.ceil().max(1.0) as usize, k_raw.ceil().max(1.0) as usize))
}
