//! Solver for non-convex concave games. The inner problem is made
//! strongly concave by subtracting (λ/2)||α - ᾱ||², solved by accelerated
//! projected gradient ascent with periodic restart, and the outer player
//! moves by either a projected gradient step or a Frank-Wolfe step on the
//! smoothed value function.

use crate::error::{Error, Result};
use crate::geometry::{linear_min_local, project, FEASIBILITY_TOL};
use crate::linalg::{all_finite, dist};
use crate::measures::stationarity;
use crate::oracle::ProblemOracle;
use crate::pl_gda::{RateConstants, Trajectory, TrajectoryRecord};
use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};
use std::time::Instant;

/// Outer update rule for [`solve_ncc`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OuterRule {
    #[serde(rename = "pgd")]
    ProjectedGradient,
    #[serde(rename = "fw")]
    FrankWolfe,
}

/// The base game with the strongly-concavizing regularizer applied to the
/// inner player: f_λ(θ, α) = f(θ, α) - (λ/2)||α - ᾱ||².
#[derive(Debug, Clone)]
pub struct RegularizedOracle {
    pub base: ProblemOracle,
    pub lambda: f64,
    pub alpha_bar: Vec<f64>,
    /// Smoothness of α ↦ ∇_α f_λ: l22 + λ.
    pub l22_reg: f64,
    /// Smoothness of the regularized value function: l11 + l12²/λ.
    pub l_g: f64,
}

impl RegularizedOracle {
    pub fn f_lambda(&self, theta: &[f64], alpha: &[f64]) -> f64 {
        let d = dist(alpha, &self.alpha_bar);
        self.base.f(theta, alpha) - 0.5 * self.lambda * d * d
    }

    pub fn grad_theta_lambda(&self, theta: &[f64], alpha: &[f64]) -> Vec<f64> {
        self.base.grad_theta(theta, alpha)
    }

    pub fn grad_alpha_lambda(&self, theta: &[f64], alpha: &[f64]) -> Vec<f64> {
        let g = self.base.grad_alpha(theta, alpha);
        g.iter()
            .zip(alpha.iter().zip(&self.alpha_bar))
            .map(|(gi, (a, ab))| gi - self.lambda * (a - ab))
            .collect()
    }
}

/// Wrap `problem` with regularizer λ anchored at ᾱ.
pub fn regularize(
    problem: &ProblemOracle,
    lambda: f64,
    alpha_bar: &[f64],
) -> Result<RegularizedOracle> {
    if lambda <= 0.0 {
        return Err(Error::InvalidInput("lambda must be positive".into()));
    }
    if !problem.alpha_set.contains(alpha_bar, FEASIBILITY_TOL) {
        return Err(Error::InvalidInput("alpha_bar must be feasible".into()));
    }
    Ok(RegularizedOracle {
        base: problem.clone(),
        lambda,
        alpha_bar: alpha_bar.to_vec(),
        l22_reg: problem.l22 + lambda,
        l_g: problem.l11 + problem.l12 * problem.l12 / lambda,
    })
}

/// Accelerated projected gradient ascent with periodic restart. Runs
/// ⌊K/N⌋ + 1 blocks of N accelerated steps on α ↦ f_λ(θ, α), restarting
/// the momentum from the last proximal iterate, and returns the final x_N.
pub fn apga(
    oracle: &RegularizedOracle,
    theta: &[f64],
    alpha0: &[f64],
    eta: f64,
    n_restart: usize,
    k_total: usize,
) -> Result<Vec<f64>> {
    if n_restart < 1 {
        return Err(Error::InvalidInput("restart period must be >= 1".into()));
    }
    if !oracle.base.alpha_set.contains(alpha0, FEASIBILITY_TOL) {
        return Err(Error::InvalidInput("apga start must be feasible".into()));
    }
    let set = &oracle.base.alpha_set;
    let blocks = k_total / n_restart + 1;
    let mut x = alpha0.to_vec();
    for _ in 0..blocks {
        let mut y = x.clone();
        // the first extrapolation sees x_0 = y_1, making it a no-op
        let mut x_prev = y.clone();
        let mut gamma = 1.0f64;
        for i in 0..n_restart {
            let g = oracle.grad_alpha_lambda(theta, &y);
            if !all_finite(&g) {
                return Err(Error::Numeric(format!(
                    "apga: non-finite gradient at accelerated step {i}"
                )));
            }
            let stepped: Vec<f64> = y.iter().zip(&g).map(|(v, gi)| v + eta * gi).collect();
            let x_next = project(set, &stepped)?;
            let gamma_next = 0.5 * (1.0 + (1.0 + 4.0 * gamma * gamma).sqrt());
            let beta = (gamma - 1.0) / gamma_next;
            y = x_next
                .iter()
                .zip(&x_prev)
                .map(|(xn, xp)| xn + beta * (xn - xp))
                .collect();
            x_prev = std::mem::replace(&mut x, x_next);
            gamma = gamma_next;
        }
    }
    Ok(x)
}

/// One projected gradient step on θ: proj_Θ(θ - (1/L_g) ∇_θ f_λ(θ, α)).
pub fn outer_step_pgd(
    oracle: &RegularizedOracle,
    theta: &[f64],
    alpha: &[f64],
) -> Result<Vec<f64>> {
    let g = oracle.grad_theta_lambda(theta, alpha);
    if !all_finite(&g) {
        return Err(Error::Numeric("outer_step_pgd: non-finite gradient".into()));
    }
    let stepped: Vec<f64> = theta
        .iter()
        .zip(&g)
        .map(|(x, gi)| x - gi / oracle.l_g)
        .collect();
    project(&oracle.base.theta_set, &stepped)
}

/// One Frank-Wolfe step: θ + (X_t/L̃) ŝ_t with (X_t, ŝ_t) from the local
/// linear minimization of ∇_θ f_λ over Θ. Also returns X_t.
pub fn outer_step_fw(
    oracle: &RegularizedOracle,
    theta: &[f64],
    alpha: &[f64],
    l_tilde: f64,
) -> Result<(Vec<f64>, f64)> {
    let g = oracle.grad_theta_lambda(theta, alpha);
    if !all_finite(&g) {
        return Err(Error::Numeric("outer_step_fw: non-finite gradient".into()));
    }
    let lin = linear_min_local(&oracle.base.theta_set, theta, &g)?;
    let x_t = (-lin.value).max(0.0);
    let scale_factor = x_t / l_tilde;
    if scale_factor > 1.0 + 1e-9 {
        return Err(Error::Config(format!(
            "outer_step_fw: X_t/L̃ = {scale_factor:.4} exceeds 1; L̃ is too small"
        )));
    }
    let next: Vec<f64> = theta
        .iter()
        .zip(&lin.direction)
        .map(|(x, s)| x + scale_factor.min(1.0) * s)
        .collect();
    Ok((next, x_t))
}

/// Configuration for [`solve_ncc`].
#[derive(Debug, Clone)]
pub struct NccConfig {
    pub eps: f64,
    /// Regularizer; the analysis-backed default is ε/(4R).
    pub lambda: f64,
    /// Inner step; defaults to 1/(l22 + λ), the smoothness of f_λ in α.
    pub eta: f64,
    /// Restart period ⌊sqrt(8 l22_reg / λ)⌋, floored at 1.
    pub n_restart: usize,
    /// Inner iterations per outer step (K >= N for a full block).
    pub k_inner: usize,
    pub t_outer: usize,
    pub outer_rule: OuterRule,
    /// Frank-Wolfe step constant, at least max{L_g, l12, g_max}.
    pub l_tilde: f64,
    pub measure_stride: usize,
    /// Stop once a measured iterate is an eps-FNE of the original game.
    pub early_exit: bool,
    /// Anchor ᾱ; defaults to the α set's centroid.
    pub alpha_bar: Option<Vec<f64>>,
}

impl NccConfig {
    /// Practical-mode config: caller-chosen loop counts, analysis-backed
    /// step sizes and restart period for the given λ.
    pub fn practical(
        problem: &ProblemOracle,
        eps: f64,
        lambda: f64,
        k_inner: usize,
        t_outer: usize,
        outer_rule: OuterRule,
    ) -> Result<Self> {
        if lambda <= 0.0 {
            return Err(Error::InvalidInput("lambda must be positive".into()));
        }
        let l22_reg = problem.l22 + lambda;
        let n_restart = ((8.0 * l22_reg / lambda).sqrt().floor() as usize).max(1);
        let l_g = problem.l11 + problem.l12 * problem.l12 / lambda;
        Ok(Self {
            eps,
            lambda,
            eta: 1.0 / l22_reg,
            n_restart,
            k_inner,
            t_outer,
            outer_rule,
            l_tilde: l_g.max(problem.l12).max(1.0),
            measure_stride: 1,
            early_exit: true,
            alpha_bar: None,
        })
    }

    /// λ = ε/(4R) from the enclosing radius of the α set.
    pub fn theory_lambda(problem: &ProblemOracle, eps: f64) -> Result<f64> {
        let r = problem
            .alpha_set
            .enclosing_radius()
            .ok_or_else(|| Error::InvalidInput("α set must be bounded".into()))?;
        Ok(eps / (4.0 * r))
    }

    fn validate(&self) -> Result<()> {
        if self.lambda <= 0.0 {
            return Err(Error::InvalidInput("lambda must be positive".into()));
        }
        if self.n_restart < 1 {
            return Err(Error::InvalidInput("n_restart must be >= 1".into()));
        }
        if self.t_outer < 1 {
            return Err(Error::InvalidInput("t_outer must be >= 1".into()));
        }
        if self.measure_stride < 1 {
            return Err(Error::InvalidInput("measure_stride must be >= 1".into()));
        }
        Ok(())
    }
}

/// Sampled midpoint-concavity check of f(θ, ·); returns the number of
/// violating triples out of `samples`.
pub fn sampled_concavity_violations<R: Rng>(
    problem: &ProblemOracle,
    samples: usize,
    rng: &mut R,
) -> usize {
    let mut violations = 0;
    for _ in 0..samples {
        let theta = problem.theta_set.sample(rng);
        let a1 = problem.alpha_set.sample(rng);
        let a2 = problem.alpha_set.sample(rng);
        let mid: Vec<f64> = a1.iter().zip(&a2).map(|(x, y)| 0.5 * (x + y)).collect();
        let lhs = problem.f(&theta, &mid);
        let rhs = 0.5 * (problem.f(&theta, &a1) + problem.f(&theta, &a2));
        if lhs < rhs - 1e-10 {
            violations += 1;
        }
    }
    violations
}

/// Multi-step framework for non-convex concave games. The recorded X/Y
/// measures are taken on the original, unregularized game.
pub fn solve_ncc(problem: &ProblemOracle, config: &NccConfig) -> Result<Trajectory> {
    config.validate()?;
    if !problem.alpha_set.is_bounded() {
        return Err(Error::InvalidInput(
            "solve_ncc requires a bounded α set".into(),
        ));
    }

    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0x5eed);
    let violations = sampled_concavity_violations(problem, 100, &mut rng);
    if violations > 0 {
        log::warn!(
            "solve_ncc: {} of 100 sampled triples violate α-concavity of '{}'; continuing",
            violations,
            problem.name
        );
    }

    let alpha_bar = match &config.alpha_bar {
        Some(a) => project(&problem.alpha_set, a)?,
        None => project(&problem.alpha_set, &problem.alpha_set.centroid())?,
    };
    let oracle = regularize(problem, config.lambda, &alpha_bar)?;

    let start = Instant::now();
    let mut theta = project(&problem.theta_set, &problem.theta_set.centroid())?;
    let mut alpha = alpha_bar.clone();
    let mut prev_theta = theta.clone();
    let mut trajectory = Trajectory {
        records: Vec::new(),
        best_index: 0,
    };

    for t in 0..config.t_outer {
        alpha = apga(
            &oracle,
            &theta,
            &alpha,
            config.eta,
            config.n_restart,
            config.k_inner,
        )?;

        if t % config.measure_stride == 0 {
            let report = stationarity(problem, &theta, &alpha)?;
            trajectory.push_and_track(TrajectoryRecord {
                iter: t,
                theta: theta.clone(),
                alpha: alpha.clone(),
                x_measure: report.x_measure,
                y_measure: report.y_measure,
                f_value: problem.f(&theta, &alpha),
                g_lambda_value: Some(oracle.f_lambda(&theta, &alpha)),
                step_norm: dist(&theta, &prev_theta),
                wall_time_ns: start.elapsed().as_nanos(),
            });
            if config.early_exit
                && report.x_measure <= config.eps
                && report.y_measure <= config.eps
            {
                break;
            }
        }

        prev_theta = theta.clone();
        theta = match config.outer_rule {
            OuterRule::ProjectedGradient => outer_step_pgd(&oracle, &theta, &alpha)?,
            OuterRule::FrankWolfe => outer_step_fw(&oracle, &theta, &alpha, config.l_tilde)?.0,
        };
        if !all_finite(&theta) {
            return Err(Error::Numeric(format!(
                "solve_ncc: θ diverged at outer iteration {t}"
            )));
        }
    }

    if trajectory.records.is_empty() {
        return Err(Error::Config(
            "solve_ncc produced no records; lower measure_stride".into(),
        ));
    }
    Ok(trajectory)
}

/// Parameter schedule prescribed for non-convex concave games:
/// λ = ε/(4R), κ = l22/λ, N = ⌊√(8κ)⌋,
/// K = ⌈(√(8κ)/log 2)(4 log(1/ε) + log(2¹⁷ L̄⁶ R̄⁶ Δ / (L² λ)))⌉,
/// T per outer rule: 32 Δ_g (g_max + LR)²/(L ε²) for projected gradient,
/// 8 L̃ Δ / ε² for Frank-Wolfe.
pub fn ncc_iteration_counts(
    constants: &RateConstants,
    eps: f64,
    rule: OuterRule,
) -> Result<(usize, usize, f64, usize)> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidInput("eps must lie in (0,1)".into()));
    }
    let c = constants;
    let lambda = eps / (4.0 * c.r);
    let kappa = c.kappa; // l22/λ for the concave case
    let n = ((8.0 * kappa).sqrt().floor() as usize).max(1);
    let k_raw = ((8.0 * kappa).sqrt() / 2f64.ln())
        * (4.0 * (1.0 / eps).ln()
            + (2f64.powi(17) * c.l_bar.powi(6) * c.r_bar.powi(6) * c.delta
                / (c.l_value * c.l_value * lambda))
                .ln());
    let t_raw = match rule {
        OuterRule::ProjectedGradient => {
            32.0 * c.delta_g * (c.g_max + c.l_value * c.r).powi(2) / (c.l_value * eps * eps)
        }
        OuterRule::FrankWolfe => 8.0 * c.l_tilde * c.delta / (eps * eps),
    };
    Ok((
        t_raw.ceil().max(1.0) as usize,
        k_raw.ceil().max(1.0) as usize,
        lambda,
        n,
    ))
}

/// Solve the regularized inner problem to high accuracy by a long APGA
/// run. Used by diagnostics and tests that need α*(θ).
pub fn inner_argmax_accurate(
    oracle: &RegularizedOracle,
    theta: &[f64],
    iters: usize,
) -> Result<Vec<f64>> {
    let n = ((8.0 * oracle.l22_reg / oracle.lambda).sqrt().floor() as usize).max(1);
    apga(
        oracle,
        theta,
        &oracle.alpha_bar.clone(),
        1.0 / oracle.l22_reg,
        n,
        iters,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::FeasibleSet;
    use crate::problems::{abs_value_game, quadratic_saddle};
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn regularize_formula_and_anchor() {
        // f = (2α-1)θ, ᾱ = 0.5, λ = 1: f_λ(θ, 1) = θ - 0.125
        let p = abs_value_game();
        let reg = regularize(&p, 1.0, &[0.5]).unwrap();
        assert_abs_diff_eq!(reg.f_lambda(&[1.0], &[1.0]), 1.0 - 0.125, epsilon = 1e-15);
        // at α = ᾱ the regularizer vanishes
        assert_abs_diff_eq!(
            reg.f_lambda(&[0.7], &[0.5]),
            p.f(&[0.7], &[0.5]),
            epsilon = 1e-15
        );
        // λ → 0 limit recovers f
        let tiny = regularize(&p, 1e-12, &[0.5]).unwrap();
        assert_abs_diff_eq!(tiny.f_lambda(&[1.0], &[1.0]), p.f(&[1.0], &[1.0]), epsilon = 1e-10);
        assert!(regularize(&p, 0.0, &[0.5]).is_err());
        assert!(regularize(&p, 1.0, &[2.0]).is_err());
    }

    #[test]
    fn regularized_gradient_matches_finite_difference() {
        let p = quadratic_saddle();
        let reg = regularize(&p, 0.3, &[0.25]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..20 {
            let theta = p.theta_set.sample(&mut rng);
            let alpha = p.alpha_set.sample(&mut rng);
            // identity ∇_α f_λ = ∇_α f - λ(α - ᾱ)
            let ga = reg.grad_alpha_lambda(&theta, &alpha);
            let expected = p.grad_alpha(&theta, &alpha)[0] - 0.3 * (alpha[0] - 0.25);
            assert_abs_diff_eq!(ga[0], expected, epsilon = 1e-12);
            // finite-difference cross-check
            let h = 1e-6;
            let fd = (reg.f_lambda(&theta, &[alpha[0] + h])
                - reg.f_lambda(&theta, &[alpha[0] - h]))
                / (2.0 * h);
            assert_abs_diff_eq!(ga[0], fd, epsilon = 1e-4);
            // f_λ definition holds pointwise
            let d = alpha[0] - 0.25;
            assert_abs_diff_eq!(
                reg.f_lambda(&theta, &alpha),
                p.f(&theta, &alpha) - 0.15 * d * d,
                epsilon = 1e-12
            );
        }
    }

    // maximize h(α) = -(α-c)²/2 over a box via a throwaway oracle
    fn box_quadratic(c: f64, lo: f64, hi: f64) -> ProblemOracle {
        ProblemOracle::new(
            "box-quadratic",
            move |_, a| -0.5 * (a[0] - c) * (a[0] - c),
            |_, _| vec![0.0],
            move |_, a| vec![c - a[0]],
            FeasibleSet::new_box(vec![0.0], vec![0.0]).unwrap(),
            FeasibleSet::new_box(vec![lo], vec![hi]).unwrap(),
            0.0,
            0.0,
            1.0,
            None,
        )
        .unwrap()
    }

    #[test]
    fn apga_first_step_hits_constrained_maximizer() {
        let p = box_quadratic(2.0, 0.0, 1.0);
        let reg = regularize(&p, 1e-9, &[0.0]).unwrap();
        let out = apga(&reg, &[0.0], &[0.0], 1.0, 5, 5).unwrap();
        assert_abs_diff_eq!(out[0], 1.0, epsilon = 1e-9);
    }

    #[test]
    fn apga_zero_k_runs_single_block() {
        let p = box_quadratic(0.5, 0.0, 1.0);
        let reg = regularize(&p, 1e-9, &[0.0]).unwrap();
        // one block of N=3 steps still makes progress from 0 toward 0.5
        let out = apga(&reg, &[0.0], &[0.0], 0.5, 3, 0).unwrap();
        assert!(out[0] > 0.4 && out[0] <= 0.5 + 1e-12);
    }

    #[test]
    fn apga_block_contraction_on_quadratic() {
        // h(α) = -||α - c||²/2, interior c: gap halves per block
        let c = [0.3, -0.2];
        let p = ProblemOracle::new(
            "interior-quadratic",
            move |_, a| -0.5 * ((a[0] - c[0]).powi(2) + (a[1] - c[1]).powi(2)),
            |_, _| vec![0.0],
            move |_, a| vec![c[0] - a[0], c[1] - a[1]],
            FeasibleSet::new_box(vec![0.0], vec![0.0]).unwrap(),
            FeasibleSet::new_box(vec![-1.0, -1.0], vec![1.0, 1.0]).unwrap(),
            0.0,
            0.0,
            1.0,
            None,
        )
        .unwrap();
        let lambda = 1e-9;
        let reg = regularize(&p, lambda, &[0.0, 0.0]).unwrap();
        let h_star = 0.0;
        let gap = |a: &[f64]| h_star - p.f(&[0.0], a);
        let mut a = vec![-1.0, 1.0];
        // strong concavity modulus is 1 here, smoothness 1: N from κ = 1
        let n = 8usize;
        let g0 = gap(&a);
        let mut prev = g0;
        for _ in 0..4 {
            a = apga(&reg, &[0.0], &a, 1.0, n, n - 1).unwrap();
            let g = gap(&a);
            // the 1e-16 slack covers the floor set by machine precision
            // and the tiny regularizer bias once the gap has collapsed
            assert!(g <= (0.5 + 1e-3) * prev + 1e-16, "gap {g} vs prev {prev}");
            prev = g;
        }
        assert!(prev <= g0 * (0.5f64).powi(4) * 1.1);
    }

    #[test]
    fn outer_step_pgd_fixed_point_and_clamp() {
        let p = quadratic_saddle();
        let reg = regularize(&p, 1.0, &[0.0]).unwrap();
        // zero gradient leaves θ unchanged: ∇_θ f = -2θ + 4α = 0 at (0, 0)
        let t = outer_step_pgd(&reg, &[0.0], &[0.0]).unwrap();
        assert_abs_diff_eq!(t[0], 0.0, epsilon = 1e-15);
        // a unit-sized step clamps at the box edge
        let big = ProblemOracle::new(
            "unit-grad",
            |_, _| 0.0,
            |_, _| vec![1.0],
            |_, _| vec![0.0],
            FeasibleSet::new_box(vec![-1.0], vec![1.0]).unwrap(),
            FeasibleSet::new_box(vec![-1.0], vec![1.0]).unwrap(),
            1.0,
            0.0,
            0.0,
            None,
        )
        .unwrap();
        let reg = regularize(&big, 1.0, &[0.0]).unwrap();
        // l_g = 1 + 0 = 1, gradient 1: step lands exactly at -1
        let t = outer_step_pgd(&reg, &[0.0], &[0.0]).unwrap();
        assert_abs_diff_eq!(t[0], -1.0, epsilon = 1e-12);
    }

    #[test]
    fn outer_step_fw_examples() {
        let p = abs_value_game();
        let reg = regularize(&p, 0.1, &[0.5]).unwrap();
        // α = 0.5 zeroes the gradient: stationary fixed point
        let (t, x) = outer_step_fw(&reg, &[0.3], &[0.5], 2.0).unwrap();
        assert_abs_diff_eq!(x, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(t[0], 0.3, epsilon = 1e-12);
        // θ = 0.5, g = -1 (α = 0): ŝ = 0.5, X = 0.5, θ' = 0.5 + 0.25·0.5
        let (t, x) = outer_step_fw(&reg, &[0.5], &[0.0], 2.0).unwrap();
        assert_abs_diff_eq!(x, 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(t[0], 0.625, epsilon = 1e-12);
    }

    #[test]
    fn outer_step_fw_unconstrained_is_gradient_step() {
        let p = ProblemOracle::new(
            "free",
            |t, _| 0.5 * (t[0] * t[0] + t[1] * t[1]),
            |t, _| vec![t[0], t[1]],
            |_, _| vec![0.0],
            FeasibleSet::Unconstrained { dim: 2 },
            FeasibleSet::new_box(vec![-1.0], vec![1.0]).unwrap(),
            1.0,
            0.0,
            0.0,
            None,
        )
        .unwrap();
        let reg = regularize(&p, 1.0, &[0.0]).unwrap();
        let theta = [0.3, -0.4]; // gradient norm 0.5
        let l_tilde = 2.0;
        let (next, x) = outer_step_fw(&reg, &theta, &[0.0], l_tilde).unwrap();
        assert_abs_diff_eq!(x, 0.5, epsilon = 1e-12);
        for i in 0..2 {
            assert_abs_diff_eq!(next[i], theta[i] - theta[i] / l_tilde, epsilon = 1e-10);
        }
    }

    #[test]
    fn outer_step_fw_rejects_small_l_tilde() {
        let p = abs_value_game();
        let reg = regularize(&p, 0.1, &[0.5]).unwrap();
        // X = 1 at θ=0, α=1 (gradient 1, s = -1 feasible); L̃ = 0.5 < X
        let err = outer_step_fw(&reg, &[0.0], &[1.0], 0.5);
        assert!(matches!(err, Err(Error::Config(_))));
    }

    #[test]
    fn solve_ncc_abs_value_game() {
        let p = abs_value_game();
        let eps = 0.05;
        let lambda = NccConfig::theory_lambda(&p, eps).unwrap();
        assert_abs_diff_eq!(lambda, 0.0125, epsilon = 1e-15);
        let cfg = NccConfig::practical(&p, eps, lambda, 60, 10_000, OuterRule::ProjectedGradient)
            .unwrap();
        let traj = solve_ncc(&p, &cfg).unwrap();
        let best = traj.best();
        assert!(best.x_measure <= eps, "X = {}", best.x_measure);
        assert!(best.y_measure <= eps, "Y = {}", best.y_measure);
        assert!(best.theta[0].abs() <= 0.1, "θ = {}", best.theta[0]);
    }

    #[test]
    fn solve_ncc_single_iteration_contract() {
        let p = abs_value_game();
        let mut cfg =
            NccConfig::practical(&p, 0.5, 0.1, 10, 1, OuterRule::FrankWolfe).unwrap();
        cfg.early_exit = false;
        let traj = solve_ncc(&p, &cfg).unwrap();
        assert_eq!(traj.records.len(), 1);
    }

    #[test]
    fn ncc_iteration_counts_worked_example() {
        let c = RateConstants {
            kappa: 8.0, // l22 = 0.8, λ = 0.1
            rho: 0.5,
            l_value: 1.0,
            l_bar: 1.0,
            l_tilde: 1.0,
            r_bar: 1.0,
            r: 1.0,
            delta: 1.0,
            delta_g: 1.0,
            g_max: 1.0,
            mu: 0.1,
        };
        let (_, _, lambda, n) =
            ncc_iteration_counts(&c, 0.4, OuterRule::ProjectedGradient).unwrap();
        assert_abs_diff_eq!(lambda, 0.1, epsilon = 1e-15);
        assert_eq!(n, 8);
    }

    #[test]
    fn ncc_halving_eps_quadruples_fw_t() {
        let c = RateConstants {
            kappa: 8.0,
            rho: 0.5,
            l_value: 1.0,
            l_bar: 1.0,
            l_tilde: 4.0,
            r_bar: 1.0,
            r: 1.0,
            delta: 1.0,
            delta_g: 1.0,
            g_max: 1.0,
            mu: 0.1,
        };
        let (t1, _, _, _) = ncc_iteration_counts(&c, 0.4, OuterRule::FrankWolfe).unwrap();
        let (t2, _, _, _) = ncc_iteration_counts(&c, 0.2, OuterRule::FrankWolfe).unwrap();
        assert_eq!(t2, 4 * t1);
    }

    #[test]
    fn ncc_k_scales_like_inverse_sqrt_lambda() {
        // K grows ~ sqrt(1/λ) ∝ ε^{-1/2} up to log factors: check the
        // ratio K(ε/4)/K(ε) stays below 2·(1 + log slack)
        let mk = |kappa: f64| RateConstants {
            kappa,
            rho: 0.5,
            l_value: 1.0,
            l_bar: 1.0,
            l_tilde: 1.0,
            r_bar: 1.0,
            r: 1.0,
            delta: 1.0,
            delta_g: 1.0,
            g_max: 1.0,
            mu: 0.1,
        };
        // λ = ε/4 with R = 1; κ = l22/λ, take l22 = 1
        let eps1 = 0.4;
        let eps2 = 0.1;
        let (_, k1, l1, _) =
            ncc_iteration_counts(&mk(1.0 / (eps1 / 4.0)), eps1, OuterRule::FrankWolfe).unwrap();
        let (_, k2, l2, _) =
            ncc_iteration_counts(&mk(1.0 / (eps2 / 4.0)), eps2, OuterRule::FrankWolfe).unwrap();
        assert_abs_diff_eq!(l1 / l2, 4.0, epsilon = 1e-12);
        let ratio = k2 as f64 / k1 as f64;
        assert!(ratio > 2.0 && ratio < 4.0, "ratio {ratio}");
    }

    #[test]
    fn regularized_stability_bound() {
        // ||α*(θ1) - α*(θ2)|| <= (l12/λ)||θ1 - θ2|| on the abs-value game
        let p = abs_value_game();
        let lambda = 0.5;
        let reg = regularize(&p, lambda, &[0.5]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..10 {
            let t1 = p.theta_set.sample(&mut rng);
            let t2 = p.theta_set.sample(&mut rng);
            let a1 = inner_argmax_accurate(&reg, &t1, 400).unwrap();
            let a2 = inner_argmax_accurate(&reg, &t2, 400).unwrap();
            let lhs = dist(&a1, &a2);
            let rhs = (p.l12 / lambda) * dist(&t1, &t2);
            assert!(lhs <= rhs + 1e-6, "{lhs} > {rhs}");
        }
    }

    #[test]
    fn regularization_bias_bound() {
        // |g_λ(θ) - g(θ)| <= (λ/2)(2R)² on the abs-value game, where
        // g(θ) = |θ| exactly
        let p = abs_value_game();
        let lambda = 0.05;
        let r = p.alpha_set.enclosing_radius().unwrap();
        let reg = regularize(&p, lambda, &[0.5]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..10 {
            let t = p.theta_set.sample(&mut rng);
            let a_star = inner_argmax_accurate(&reg, &t, 600).unwrap();
            let g_lambda = reg.f_lambda(&t, &a_star);
            let g = t[0].abs();
            assert!((g_lambda - g).abs() <= 0.5 * lambda * (2.0 * r).powi(2) + 1e-8);
        }
    }

    #[test]
    fn g_lambda_smoothness_sampled() {
        // finite-difference gradients of g_λ are (l11 + l12²/λ)-Lipschitz
        let p = abs_value_game();
        let lambda = 0.2;
        let reg = regularize(&p, lambda, &[0.5]).unwrap();
        let l_g = reg.l_g;
        let g_lambda = |t: f64| {
            let a = inner_argmax_accurate(&reg, &[t], 800).unwrap();
            reg.f_lambda(&[t], &a)
        };
        let grad = |t: f64| (g_lambda(t + 1e-5) - g_lambda(t - 1e-5)) / 2e-5;
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..6 {
            let t1: f64 = rng.gen_range(-0.9..0.9);
            let t2: f64 = rng.gen_range(-0.9..0.9);
            if (t1 - t2).abs() < 1e-3 {
                continue;
            }
            let lhs = (grad(t1) - grad(t2)).abs();
            assert!(lhs <= (l_g + 1e-2) * (t1 - t2).abs() + 1e-4);
        }
    }

    #[test]
    fn regularized_danskin_matches_finite_difference() {
        let p = abs_value_game();
        let lambda = 0.1;
        let reg = regularize(&p, lambda, &[0.5]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let h = 1e-5;
        for _ in 0..10 {
            // stay away from the smoothed-kink boundary |θ| = λ/4
            let t = loop {
                let t: f64 = rng.gen_range(-0.9..0.9);
                if (t.abs() - lambda / 4.0).abs() > 1e-3 {
                    break t;
                }
            };
            let a_star = inner_argmax_accurate(&reg, &[t], 800).unwrap();
            let analytic = reg.grad_theta_lambda(&[t], &a_star)[0];
            let gp = {
                let a = inner_argmax_accurate(&reg, &[t + h], 800).unwrap();
                reg.f_lambda(&[t + h], &a)
            };
            let gm = {
                let a = inner_argmax_accurate(&reg, &[t - h], 800).unwrap();
                reg.f_lambda(&[t - h], &a)
            };
            let fd = (gp - gm) / (2.0 * h);
            assert!(
                (fd - analytic).abs() / analytic.abs().max(1.0) <= 1e-4,
                "fd {fd} vs analytic {analytic} at θ = {t}"
            );
        }
    }
}
