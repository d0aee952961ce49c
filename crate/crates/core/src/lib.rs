//! First-order solvers for smooth two-player zero-sum min-max games.
//!
//! The library centers on two solvers for `min_θ max_α f(θ, α)`:
//!
//! * [`pl_gda::solve_pl`] — multi-step gradient descent ascent for games
//!   whose inner (max) player is unconstrained and Polyak-Łojasiewicz.
//! * [`ncc::solve_ncc`] — a regularized framework for non-convex concave
//!   games, with an accelerated projected gradient ascent inner loop and
//!   either a projected-gradient or Frank-Wolfe outer update.
//!
//! Progress is judged by the first-order Nash stationarity measures in
//! [`measures`], which reduce to linear minimization over the feasible set
//! intersected with a unit ball ([`geometry`]). Built-in test problems live
//! in [`problems`]; run orchestration, diagnostics and file output in
//! [`harness`].

pub mod error;
pub mod geometry;
pub mod harness;
pub mod linalg;
pub mod measures;
pub mod ncc;
pub mod oracle;
pub mod pl_gda;
pub mod problems;

pub use error::Error;
pub use geometry::FeasibleSet;
pub use oracle::ProblemOracle;
