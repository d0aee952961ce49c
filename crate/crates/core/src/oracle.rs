//! The user-facing problem description: objective, partial gradients,
//! feasible sets and smoothness constants.

use crate::error::{Error, Result};
use crate::geometry::FeasibleSet;
use crate::linalg::{dist, norm, sub};
use rand::Rng;
use std::sync::Arc;

type ScalarFn = Arc<dyn Fn(&[f64], &[f64]) -> f64 + Send + Sync>;
type GradFn = Arc<dyn Fn(&[f64], &[f64]) -> Vec<f64> + Send + Sync>;

/// A two-player zero-sum game `min_θ max_α f(θ, α)` with first-order
/// oracles and declared Lipschitz constants for the partial gradients.
///
/// Oracles must be safe to call from several threads at once; all closures
/// are `Send + Sync` and the struct is immutable after construction.
#[derive(Clone)]
pub struct ProblemOracle {
    pub name: String,
    f: ScalarFn,
    grad_theta: GradFn,
    grad_alpha: GradFn,
    pub theta_set: FeasibleSet,
    pub alpha_set: FeasibleSet,
    /// Lipschitz constant of θ ↦ ∇_θ f.
    pub l11: f64,
    /// Lipschitz constant of the mixed partials (both directions).
    pub l12: f64,
    /// Lipschitz constant of α ↦ ∇_α f.
    pub l22: f64,
    /// PL constant of α ↦ -f(θ, α), when the game is a PL game.
    pub mu: Option<f64>,
}

impl std::fmt::Debug for ProblemOracle {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ProblemOracle")
            .field("name", &self.name)
            .field("theta_set", &self.theta_set)
            .field("alpha_set", &self.alpha_set)
            .field("l11", &self.l11)
            .field("l12", &self.l12)
            .field("l22", &self.l22)
            .field("mu", &self.mu)
            .finish()
    }
}

impl ProblemOracle {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        name: impl Into<String>,
        f: impl Fn(&[f64], &[f64]) -> f64 + Send + Sync + 'static,
        grad_theta: impl Fn(&[f64], &[f64]) -> Vec<f64> + Send + Sync + 'static,
        grad_alpha: impl Fn(&[f64], &[f64]) -> Vec<f64> + Send + Sync + 'static,
        theta_set: FeasibleSet,
        alpha_set: FeasibleSet,
        l11: f64,
        l12: f64,
        l22: f64,
        mu: Option<f64>,
    ) -> Result<Self> {
        if l11 < 0.0 || l12 < 0.0 || l22 < 0.0 {
            return Err(Error::InvalidInput(
                "Lipschitz constants must be nonnegative".into(),
            ));
        }
        if let Some(m) = mu {
            if m <= 0.0 {
                return Err(Error::InvalidInput("mu must be positive".into()));
            }
        }
        Ok(Self {
            name: name.into(),
            f: Arc::new(f),
            grad_theta: Arc::new(grad_theta),
            grad_alpha: Arc::new(grad_alpha),
            theta_set,
            alpha_set,
            l11,
            l12,
            l22,
            mu,
        })
    }

    pub fn f(&self, theta: &[f64], alpha: &[f64]) -> f64 {
        (self.f)(theta, alpha)
    }

    pub fn grad_theta(&self, theta: &[f64], alpha: &[f64]) -> Vec<f64> {
        (self.grad_theta)(theta, alpha)
    }

    pub fn grad_alpha(&self, theta: &[f64], alpha: &[f64]) -> Vec<f64> {
        (self.grad_alpha)(theta, alpha)
    }

    pub fn theta_dim(&self) -> usize {
        self.theta_set.dim()
    }

    pub fn alpha_dim(&self) -> usize {
        self.alpha_set.dim()
    }

    /// Sampled check that the declared Lipschitz constants hold between
    /// `pairs` random feasible pairs. Returns the violations found.
    pub fn check_lipschitz<R: Rng>(
        &self,
        pairs: usize,
        tol: f64,
        rng: &mut R,
    ) -> Vec<String> {
        let mut violations = Vec::new();
        for _ in 0..pairs {
            let t1 = self.theta_set.sample(rng);
            let t2 = self.theta_set.sample(rng);
            let a1 = self.alpha_set.sample(rng);
            let a2 = self.alpha_set.sample(rng);

            let dt = dist(&t1, &t2);
            let da = dist(&a1, &a2);

            let g11 = norm(&sub(&self.grad_theta(&t1, &a1), &self.grad_theta(&t2, &a1)));
            if g11 > (self.l11 + tol) * dt {
                violations.push(format!("l11: {g11:.4e} > {:.4e}", (self.l11 + tol) * dt));
            }
            let g22 = norm(&sub(&self.grad_alpha(&t1, &a1), &self.grad_alpha(&t1, &a2)));
            if g22 > (self.l22 + tol) * da {
                violations.push(format!("l22: {g22:.4e} > {:.4e}", (self.l22 + tol) * da));
            }
            let g12a = norm(&sub(&self.grad_alpha(&t1, &a1), &self.grad_alpha(&t2, &a1)));
            if g12a > (self.l12 + tol) * dt {
                violations.push(format!("l12(θ): {g12a:.4e} > {:.4e}", (self.l12 + tol) * dt));
            }
            let g12b = norm(&sub(&self.grad_theta(&t1, &a1), &self.grad_theta(&t1, &a2)));
            if g12b > (self.l12 + tol) * da {
                violations.push(format!("l12(α): {g12b:.4e} > {:.4e}", (self.l12 + tol) * da));
            }
        }
        violations
    }
}
