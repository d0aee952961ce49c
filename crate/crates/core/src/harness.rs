//! Run orchestration: JSON configs, solver dispatch, diagnostics
//! (finite differences, constant estimation), trajectory CSV and report
//! JSON emission.

use crate::error::{Error, Result};
use crate::linalg::{dist, norm};
use crate::measures::is_eps_fne;
use crate::ncc::{solve_ncc, ncc_iteration_counts, NccConfig, OuterRule};
use crate::oracle::ProblemOracle;
use crate::pl_gda::{pl_iteration_counts, solve_pl, PlConfig, RateConstants, Trajectory};
use crate::problems;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

/// Central finite differences of a scalar field, coordinate by coordinate.
pub fn finite_diff_grad(
    f: impl Fn(&[f64]) -> f64,
    point: &[f64],
    h: f64,
) -> Result<Vec<f64>> {
    if h <= 0.0 {
        return Err(Error::InvalidInput("h must be positive".into()));
    }
    let mut grad = Vec::with_capacity(point.len());
    let mut probe = point.to_vec();
    for i in 0..point.len() {
        probe[i] = point[i] + h;
        let fp = f(&probe);
        probe[i] = point[i] - h;
        let fm = f(&probe);
        probe[i] = point[i];
        if !fp.is_finite() || !fm.is_finite() {
            return Err(Error::Numeric(format!(
                "finite_diff_grad: non-finite evaluation at coordinate {i}"
            )));
        }
        grad.push((fp - fm) / (2.0 * h));
    }
    Ok(grad)
}

/// Max sampled difference quotients (l11̂, l12̂, l22̂) over random feasible
/// pairs. Estimates are lower bounds on the true constants; compare
/// against the declared values with slack.
pub fn estimate_lipschitz(
    problem: &ProblemOracle,
    samples: usize,
    seed: u64,
) -> Result<(f64, f64, f64)> {
    if samples < 2 {
        return Err(Error::InvalidInput("need at least 2 samples".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut l11, mut l12, mut l22) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..samples {
        let t1 = problem.theta_set.sample(&mut rng);
        let t2 = problem.theta_set.sample(&mut rng);
        let a1 = problem.alpha_set.sample(&mut rng);
        let a2 = problem.alpha_set.sample(&mut rng);
        let dt = dist(&t1, &t2);
        let da = dist(&a1, &a2);
        if dt > 1e-12 {
            l11 = l11.max(
                dist(
                    &problem.grad_theta(&t1, &a1),
                    &problem.grad_theta(&t2, &a1),
                ) / dt,
            );
            l12 = l12.max(
                dist(
                    &problem.grad_alpha(&t1, &a1),
                    &problem.grad_alpha(&t2, &a1),
                ) / dt,
            );
        }
        if da > 1e-12 {
            l22 = l22.max(
                dist(
                    &problem.grad_alpha(&t1, &a1),
                    &problem.grad_alpha(&t1, &a2),
                ) / da,
            );
            l12 = l12.max(
                dist(
                    &problem.grad_theta(&t1, &a1),
                    &problem.grad_theta(&t1, &a2),
                ) / da,
            );
        }
    }
    Ok((l11, l12, l22))
}

/// Sampled snapshot of the proof-level constants for a problem. The
/// suprema (g_max, Δ, Δ_g) are sampled estimates, floored at 1.
pub fn estimate_constants(problem: &ProblemOracle, seed: u64) -> RateConstants {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut g_max = 1.0f64;
    let mut f_min = f64::INFINITY;
    let mut f_max = f64::NEG_INFINITY;
    for _ in 0..200 {
        let t = problem.theta_set.sample(&mut rng);
        let a = problem.alpha_set.sample(&mut rng);
        g_max = g_max
            .max(norm(&problem.grad_theta(&t, &a)))
            .max(norm(&problem.grad_alpha(&t, &a)));
        let v = problem.f(&t, &a);
        f_min = f_min.min(v);
        f_max = f_max.max(v);
    }
    let spread = (f_max - f_min).max(1.0);
    let mu = problem.mu.unwrap_or(problem.l22.max(1e-12));
    let l_value = problem.l11 + problem.l12 * problem.l12 / (2.0 * mu);
    let r = problem
        .theta_set
        .enclosing_radius()
        .into_iter()
        .chain(problem.alpha_set.enclosing_radius())
        .fold(1.0f64, f64::max);
    RateConstants {
        kappa: if problem.mu.is_some() {
            problem.l22 / mu
        } else {
            problem.l22.max(1.0)
        },
        rho: if problem.mu.is_some() && problem.l22 > 0.0 {
            (1.0 - mu / problem.l22).clamp(f64::MIN_POSITIVE, 1.0 - 1e-12)
        } else {
            0.5
        },
        l_value,
        l_bar: [problem.l12, problem.l22, l_value, g_max, 1.0]
            .into_iter()
            .fold(f64::NEG_INFINITY, f64::max),
        l_tilde: [l_value, problem.l12, g_max]
            .into_iter()
            .fold(f64::NEG_INFINITY, f64::max),
        r_bar: r.max(1.0),
        r,
        delta: spread,
        delta_g: spread,
        g_max,
        mu,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverKind {
    Pl,
    Ncc,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Theory,
    Practical,
}

/// Problem selector with per-problem parameters; unused fields stay null.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSpec {
    /// quadratic_saddle | abs_value | pl_hyperplane | fair
    pub name: String,
    /// pl_hyperplane: hyperplane normal.
    #[serde(default)]
    pub a: Option<Vec<f64>>,
    /// pl_hyperplane: θ bounds.
    #[serde(default)]
    pub theta_box: Option<(f64, f64)>,
    /// fair: dataset seed.
    #[serde(default)]
    pub dataset_seed: Option<u64>,
    /// fair: samples per group.
    #[serde(default)]
    pub n_per_group: Option<usize>,
    /// fair: inner regularizer for the KKT shortcut.
    #[serde(default)]
    pub lambda: Option<f64>,
}

impl ProblemSpec {
    pub fn named(name: &str) -> Self {
        Self {
            name: name.into(),
            a: None,
            theta_box: None,
            dataset_seed: None,
            n_per_group: None,
            lambda: None,
        }
    }

    pub fn build(&self) -> Result<ProblemOracle> {
        match self.name.as_str() {
            "quadratic_saddle" => Ok(problems::quadratic_saddle()),
            "abs_value" => Ok(problems::abs_value_game()),
            "pl_hyperplane" => {
                let a = self.a.clone().unwrap_or_else(|| vec![1.0, 1.0]);
                let theta_box = self.theta_box.unwrap_or((-1.0, 1.0));
                problems::pl_hyperplane_game(&a, theta_box)
            }
            "fair" => {
                let dataset = problems::synth_fair_dataset(
                    self.dataset_seed.unwrap_or(0),
                    self.n_per_group.unwrap_or(200),
                )?;
                problems::fair_classification_problem(&dataset, self.lambda.unwrap_or(0.1))
            }
            other => Err(Error::Config(format!("unknown problem '{other}'"))),
        }
    }
}

/// Manual overrides for the schedule parameters; flags beat file values.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Overrides {
    #[serde(default)]
    pub k_inner: Option<usize>,
    #[serde(default)]
    pub t_outer: Option<usize>,
    #[serde(default)]
    pub lambda: Option<f64>,
    #[serde(default)]
    pub n_restart: Option<usize>,
    #[serde(default)]
    pub eta: Option<f64>,
}

fn default_stride() -> usize {
    1
}

fn default_true() -> bool {
    true
}

fn default_outer() -> OuterRule {
    OuterRule::ProjectedGradient
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub problem: ProblemSpec,
    pub solver: SolverKind,
    pub mode: Mode,
    pub eps: f64,
    #[serde(default = "default_outer")]
    pub outer: OuterRule,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub overrides: Overrides,
    #[serde(default = "default_stride")]
    pub measure_stride: usize,
    #[serde(default = "default_true")]
    pub early_exit: bool,
    /// Directory for trajectory.csv and report.json; nothing is written
    /// when absent.
    #[serde(default)]
    pub out_dir: Option<PathBuf>,
}

impl RunConfig {
    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }

    /// SHA-256 of the canonical JSON form (object keys sorted).
    pub fn hash(&self) -> Result<String> {
        let value = serde_json::to_value(self)?;
        let canonical = serde_json::to_string(&value)?;
        let mut hasher = Sha256::new();
        hasher.update(canonical.as_bytes());
        Ok(format!("{:x}", hasher.finalize()))
    }

    fn validate(&self) -> Result<()> {
        if self.mode == Mode::Theory && !(self.eps > 0.0 && self.eps < 1.0) {
            return Err(Error::InvalidInput(
                "theory mode requires eps in (0,1)".into(),
            ));
        }
        if self.eps <= 0.0 {
            return Err(Error::InvalidInput("eps must be positive".into()));
        }
        if self.measure_stride < 1 {
            return Err(Error::InvalidInput("measure_stride must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub problem: String,
    pub solver: SolverKind,
    pub mode: Mode,
    pub eps: f64,
    pub constants: RateConstants,
    pub lambda: Option<f64>,
    pub k_inner: usize,
    pub t_outer: usize,
    pub best_iter: usize,
    pub best_theta: Vec<f64>,
    pub best_alpha: Vec<f64>,
    pub best_x: f64,
    pub best_y: f64,
    pub verdict_eps_fne: bool,
    pub iterations_recorded: usize,
    pub wall_time_ms: f64,
    pub seed: u64,
    pub config_hash: String,
    pub warnings: Vec<String>,
    pub trajectory_path: Option<PathBuf>,
}

fn csv_float(v: f64) -> String {
    format!("{v}")
}

/// Exact column order: iter, x_measure, y_measure, f_value,
/// g_lambda_value (empty for unregularized solves), step_norm, wall_ns.
/// wall_ns is logged as 0 so identical configs produce byte-identical
/// files; real timing lives in the report.
pub fn write_trajectory_csv(trajectory: &Trajectory, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path)?;
    let mut w = std::io::BufWriter::new(file);
    writeln!(
        w,
        "iter,x_measure,y_measure,f_value,g_lambda_value,step_norm,wall_ns"
    )?;
    for r in &trajectory.records {
        let g_lambda = r.g_lambda_value.map(csv_float).unwrap_or_default();
        writeln!(
            w,
            "{},{},{},{},{},{},0",
            r.iter,
            csv_float(r.x_measure),
            csv_float(r.y_measure),
            csv_float(r.f_value),
            g_lambda,
            csv_float(r.step_norm),
        )?;
    }
    Ok(())
}

/// Dispatch to the PL or non-convex-concave solver, write artifacts, and
/// summarize. Deterministic given config + seed (trajectory CSV is
/// byte-identical across repeats).
pub fn run(config: &RunConfig) -> Result<RunReport> {
    config.validate()?;
    let config_hash = config.hash()?;
    let problem = config.problem.build()?;
    let constants = estimate_constants(&problem, config.seed);

    let mut warnings = Vec::new();
    let (l11_hat, l12_hat, l22_hat) = estimate_lipschitz(&problem, 100, config.seed)?;
    for (name, est, declared) in [
        ("l11", l11_hat, problem.l11),
        ("l12", l12_hat, problem.l12),
        ("l22", l22_hat, problem.l22),
    ] {
        if est > declared * 1.05 + 1e-9 {
            warnings.push(format!(
                "sampled {name} quotient {est:.6} exceeds declared {declared:.6} by >5%"
            ));
        }
    }

    let started = Instant::now();
    let (trajectory, lambda, k_inner, t_outer) = match config.solver {
        SolverKind::Pl => {
            let (k, t) = match config.mode {
                Mode::Theory => {
                    let (t, k) = pl_iteration_counts(&constants, config.eps)?;
                    (
                        config.overrides.k_inner.unwrap_or(k),
                        config.overrides.t_outer.unwrap_or(t),
                    )
                }
                Mode::Practical => (
                    config.overrides.k_inner.unwrap_or(50),
                    config.overrides.t_outer.unwrap_or(2000),
                ),
            };
            let mut cfg = PlConfig::from_oracle(&problem, config.eps, k, t)?;
            if let Some(eta) = config.overrides.eta {
                cfg.eta1 = eta;
            }
            cfg.measure_stride = config.measure_stride;
            cfg.early_exit = config.early_exit;
            let traj = solve_pl(&problem, &cfg)
                .map_err(|e| Error::Config(format!("pl solve of '{}': {e}", problem.name)))?;
            (traj, None, k, t)
        }
        SolverKind::Ncc => {
            let (lambda, k, t, n) = match config.mode {
                Mode::Theory => {
                    let lambda_theory = NccConfig::theory_lambda(&problem, config.eps)?;
                    let kappa = problem.l22 / lambda_theory;
                    let mut c = constants.clone();
                    c.kappa = kappa;
                    let (t, k, lambda, n) =
                        ncc_iteration_counts(&c, config.eps, config.outer)?;
                    (
                        config.overrides.lambda.unwrap_or(lambda),
                        config.overrides.k_inner.unwrap_or(k),
                        config.overrides.t_outer.unwrap_or(t),
                        config.overrides.n_restart.unwrap_or(n),
                    )
                }
                Mode::Practical => {
                    let lambda = match config.overrides.lambda {
                        Some(l) => l,
                        None => NccConfig::theory_lambda(&problem, config.eps)?,
                    };
                    let n = ((8.0 * (problem.l22 + lambda) / lambda).sqrt().floor()
                        as usize)
                        .max(1);
                    (
                        lambda,
                        config.overrides.k_inner.unwrap_or(4 * n.max(15)),
                        config.overrides.t_outer.unwrap_or(10_000),
                        config.overrides.n_restart.unwrap_or(n),
                    )
                }
            };
            let mut cfg = NccConfig::practical(
                &problem,
                config.eps,
                lambda,
                k,
                t,
                config.outer,
            )?;
            cfg.n_restart = n;
            if let Some(eta) = config.overrides.eta {
                cfg.eta = eta;
            }
            cfg.measure_stride = config.measure_stride;
            cfg.early_exit = config.early_exit;
            let traj = solve_ncc(&problem, &cfg)
                .map_err(|e| Error::Config(format!("ncc solve of '{}': {e}", problem.name)))?;
            (traj, Some(lambda), k, t)
        }
    };
    let wall_time_ms = started.elapsed().as_secs_f64() * 1e3;

    let best = trajectory.best().clone();
    let report_for_verdict = crate::measures::stationarity(&problem, &best.theta, &best.alpha)?;
    let verdict = is_eps_fne(&report_for_verdict, config.eps)?;

    let mut trajectory_path = None;
    if let Some(dir) = &config.out_dir {
        std::fs::create_dir_all(dir)?;
        let csv_path = dir.join("trajectory.csv");
        write_trajectory_csv(&trajectory, &csv_path)?;
        trajectory_path = Some(csv_path);
    }

    let report = RunReport {
        problem: problem.name.clone(),
        solver: config.solver,
        mode: config.mode,
        eps: config.eps,
        constants,
        lambda,
        k_inner,
        t_outer,
        best_iter: best.iter,
        best_theta: best.theta,
        best_alpha: best.alpha,
        best_x: best.x_measure,
        best_y: best.y_measure,
        verdict_eps_fne: verdict,
        iterations_recorded: trajectory.records.len(),
        wall_time_ms,
        seed: config.seed,
        config_hash,
        warnings,
        trajectory_path,
    };
    if let Some(dir) = &config.out_dir {
        let json = serde_json::to_string_pretty(&report)?;
        std::fs::write(dir.join("report.json"), json)?;
    }
    Ok(report)
}
