//! CLI front end: single solves from JSON configs, gradient checks of the
//! built-in problems, and parallel benchmark suites.

use clap::{Parser, Subcommand, ValueEnum};
use minimax::harness::{
    estimate_lipschitz, finite_diff_grad, run, ProblemSpec, RunConfig, RunReport, SolverKind,
};
use minimax::ncc::OuterRule;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "minimax-solve",
    about = "First-order solvers for smooth two-player zero-sum games",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SolverArg {
    Pl,
    Ncc,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum OuterArg {
    Pgd,
    Fw,
}

#[derive(Subcommand)]
enum Command {
    /// Run one solve described by a JSON config; flags override the file.
    Solve {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        eps: Option<f64>,
        #[arg(long, value_enum)]
        solver: Option<SolverArg>,
        #[arg(long, value_enum)]
        outer: Option<OuterArg>,
        /// Output directory for trajectory.csv and report.json.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Finite-difference gradient check of a built-in problem.
    CheckGrad {
        /// quadratic_saddle | abs_value | pl_hyperplane | fair
        #[arg(long)]
        problem: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Run every config in a suite file (JSON array of run configs) in
    /// parallel and print one summary line per run.
    Bench {
        #[arg(long)]
        suite: PathBuf,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn dispatch(command: Command) -> minimax::error::Result<ExitCode> {
    match command {
        Command::Solve {
            config,
            eps,
            solver,
            outer,
            out,
        } => {
            let mut cfg = RunConfig::from_json_file(&config)?;
            if let Some(e) = eps {
                cfg.eps = e;
            }
            if let Some(s) = solver {
                cfg.solver = match s {
                    SolverArg::Pl => SolverKind::Pl,
                    SolverArg::Ncc => SolverKind::Ncc,
                };
            }
            if let Some(o) = outer {
                cfg.outer = match o {
                    OuterArg::Pgd => OuterRule::ProjectedGradient,
                    OuterArg::Fw => OuterRule::FrankWolfe,
                };
            }
            if let Some(dir) = out {
                cfg.out_dir = Some(dir);
            }
            let report = run(&cfg)?;
            print_report(&report);
            Ok(ExitCode::SUCCESS)
        }
        Command::CheckGrad { problem, seed } => {
            let oracle = ProblemSpec::named(&problem).build()?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut worst = 0.0f64;
            for _ in 0..20 {
                let theta = oracle.theta_set.sample(&mut rng);
                let alpha = oracle.alpha_set.sample(&mut rng);
                for (analytic, fd) in [
                    (
                        oracle.grad_theta(&theta, &alpha),
                        finite_diff_grad(|t| oracle.f(t, &alpha), &theta, 1e-6)?,
                    ),
                    (
                        oracle.grad_alpha(&theta, &alpha),
                        finite_diff_grad(|a| oracle.f(&theta, a), &alpha, 1e-6)?,
                    ),
                ] {
                    let num = minimax::linalg::dist(&analytic, &fd);
                    let rel = num / minimax::linalg::norm(&analytic).max(1.0);
                    worst = worst.max(rel);
                }
            }
            let (l11, l12, l22) = estimate_lipschitz(&oracle, 200, seed)?;
            println!("problem: {}", oracle.name);
            println!("max relative gradient error over 20 points: {worst:.3e}");
            println!(
                "sampled lipschitz quotients: l11 {:.4} (declared {:.4}), l12 {:.4} ({:.4}), l22 {:.4} ({:.4})",
                l11, oracle.l11, l12, oracle.l12, l22, oracle.l22
            );
            if worst <= 1e-5 {
                println!("gradient check: PASS");
                Ok(ExitCode::SUCCESS)
            } else {
                println!("gradient check: FAIL (tolerance 1e-5)");
                Ok(ExitCode::FAILURE)
            }
        }
        Command::Bench { suite } => {
            let text = std::fs::read_to_string(&suite)?;
            let configs: Vec<RunConfig> = serde_json::from_str(&text)?;
            let handles: Vec<_> = configs
                .into_iter()
                .enumerate()
                .map(|(i, cfg)| std::thread::spawn(move || (i, run(&cfg))))
                .collect();
            let mut results: Vec<_> = handles
                .into_iter()
                .map(|h| h.join().expect("bench worker panicked"))
                .collect();
            results.sort_by_key(|(i, _)| *i);
            let mut failures = 0;
            for (i, result) in results {
                match result {
                    Ok(r) => println!(
                        "run {i}: {} {:?} eps={} best X={:.3e} Y={:.3e} verdict={} wall={:.1}ms",
                        r.problem, r.solver, r.eps, r.best_x, r.best_y, r.verdict_eps_fne,
                        r.wall_time_ms
                    ),
                    Err(e) => {
                        failures += 1;
                        println!("run {i}: error: {e}");
                    }
                }
            }
            Ok(if failures == 0 {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            })
        }
    }
}

fn print_report(r: &RunReport) {
    println!("problem:   {}", r.problem);
    println!("solver:    {:?} ({:?} mode)", r.solver, r.mode);
    if let Some(l) = r.lambda {
        println!("lambda:    {l}");
    }
    println!("schedule:  T={} K={}", r.t_outer, r.k_inner);
    println!("best iter: {}", r.best_iter);
    println!("best X/Y:  {:.6e} / {:.6e}", r.best_x, r.best_y);
    println!("verdict:   {}-FNE: {}", r.eps, r.verdict_eps_fne);
    println!("wall time: {:.1} ms", r.wall_time_ms);
    println!("config:    sha256 {}", r.config_hash);
    for w in &r.warnings {
        println!("warning:   {w}");
    }
    if let Some(p) = &r.trajectory_path {
        println!("trajectory: {}", p.display());
    }
}
