//! Convex feasible sets with Euclidean projection and local linear
//! minimization over the intersection of the set with a unit ball.

use crate::error::{Error, Result};
use crate::linalg::{all_finite, dist, dot, norm, sub};
use rand::Rng;
use serde::{Deserialize, Serialize};

/// Tolerance used when deciding whether a point counts as feasible.
pub const FEASIBILITY_TOL: f64 = 1e-8;

/// A convex feasible set for one player.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum FeasibleSet {
    /// All of R^dim. No enclosing radius exists.
    Unconstrained { dim: usize },
    /// Axis-aligned box `lower[i] <= x[i] <= upper[i]`.
    Box { lower: Vec<f64>, upper: Vec<f64> },
    /// Euclidean ball of the given radius around `center`.
    Ball { center: Vec<f64>, radius: f64 },
    /// Probability simplex: nonnegative entries summing to one.
    Simplex { dim: usize },
}

/// Result of [`linear_min_local`]: the minimizing direction and the
/// attained inner-product value.
#[derive(Debug, Clone)]
pub struct LocalLinearResult {
    pub direction: Vec<f64>,
    pub value: f64,
}

impl FeasibleSet {
    pub fn new_box(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::InvalidInput(
                "box bounds have mismatched dimensions".into(),
            ));
        }
        if lower.iter().zip(&upper).any(|(l, u)| l > u) {
            return Err(Error::InvalidInput("box has lower[i] > upper[i]".into()));
        }
        Ok(FeasibleSet::Box { lower, upper })
    }

    pub fn new_ball(center: Vec<f64>, radius: f64) -> Result<Self> {
        if radius <= 0.0 {
            return Err(Error::InvalidInput("ball radius must be positive".into()));
        }
        Ok(FeasibleSet::Ball { center, radius })
    }

    pub fn new_simplex(dim: usize) -> Result<Self> {
        if dim < 1 {
            return Err(Error::InvalidInput("simplex dimension must be >= 1".into()));
        }
        Ok(FeasibleSet::Simplex { dim })
    }

    pub fn dim(&self) -> usize {
        match self {
            FeasibleSet::Unconstrained { dim } => *dim,
            FeasibleSet::Box { lower, .. } => lower.len(),
            FeasibleSet::Ball { center, .. } => center.len(),
            FeasibleSet::Simplex { dim } => *dim,
        }
    }

    pub fn is_bounded(&self) -> bool {
        !matches!(self, FeasibleSet::Unconstrained { .. })
    }

    /// Radius of an origin-centered ball that contains the set.
    /// `None` for unconstrained sets.
    pub fn enclosing_radius(&self) -> Option<f64> {
        match self {
            FeasibleSet::Unconstrained { .. } => None,
            FeasibleSet::Box { lower, upper } => Some(
                lower
                    .iter()
                    .zip(upper)
                    .map(|(l, u)| l.abs().max(u.abs()).powi(2))
                    .sum::<f64>()
                    .sqrt(),
            ),
            FeasibleSet::Ball { center, radius } => Some(norm(center) + radius),
            FeasibleSet::Simplex { .. } => Some(1.0),
        }
    }

    /// A canonical interior-ish point: box midpoint, ball center, uniform
    /// simplex weights, origin for unconstrained sets.
    pub fn centroid(&self) -> Vec<f64> {
        match self {
            FeasibleSet::Unconstrained { dim } => vec![0.0; *dim],
            FeasibleSet::Box { lower, upper } => lower
                .iter()
                .zip(upper)
                .map(|(l, u)| 0.5 * (l + u))
                .collect(),
            FeasibleSet::Ball { center, .. } => center.clone(),
            FeasibleSet::Simplex { dim } => vec![1.0 / *dim as f64; *dim],
        }
    }

    pub fn contains(&self, point: &[f64], tol: f64) -> bool {
        point.len() == self.dim() && dist(point, &self.project_unchecked(point)) <= tol
    }

    /// Draw a random feasible point. Unconstrained sets sample a standard
    /// normal vector (there is no uniform measure to use instead).
    pub fn sample<R: Rng>(&self, rng: &mut R) -> Vec<f64> {
        match self {
            FeasibleSet::Unconstrained { dim } => {
                (0..*dim).map(|_| normal_sample(rng)).collect()
            }
            FeasibleSet::Box { lower, upper } => lower
                .iter()
                .zip(upper)
                .map(|(l, u)| rng.gen_range(*l..=*u))
                .collect(),
            FeasibleSet::Ball { center, radius } => {
                // gaussian direction, radius^dim-corrected length
                let dim = center.len();
                let g: Vec<f64> = (0..dim).map(|_| normal_sample(rng)).collect();
                let n = norm(&g).max(1e-300);
                let r = *radius * rng.gen::<f64>().powf(1.0 / dim as f64);
                center.iter().zip(&g).map(|(c, gi)| c + r * gi / n).collect()
            }
            FeasibleSet::Simplex { dim } => {
                // normalized exponentials are uniform on the simplex
                let e: Vec<f64> = (0..*dim).map(|_| -rng.gen::<f64>().ln()).collect();
                let s: f64 = e.iter().sum();
                e.iter().map(|x| x / s).collect()
            }
        }
    }

    fn project_unchecked(&self, point: &[f64]) -> Vec<f64> {
        match self {
            FeasibleSet::Unconstrained { .. } => point.to_vec(),
            FeasibleSet::Box { lower, upper } => point
                .iter()
                .zip(lower.iter().zip(upper))
                .map(|(x, (l, u))| x.clamp(*l, *u))
                .collect(),
            FeasibleSet::Ball { center, radius } => {
                let d = sub(point, center);
                let n = norm(&d);
                if n <= *radius {
                    point.to_vec()
                } else {
                    center.iter().zip(&d).map(|(c, di)| c + di * radius / n).collect()
                }
            }
            FeasibleSet::Simplex { .. } => project_simplex(point),
        }
    }
}

fn normal_sample<R: Rng>(rng: &mut R) -> f64 {
    // Box-Muller; avoids pulling in rand_distr for one distribution.
    let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.gen::<f64>();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// Euclidean projection onto the probability simplex, by sort and
/// threshold. O(n log n).
pub fn project_simplex(point: &[f64]) -> Vec<f64> {
    let n = point.len();
    let mut sorted = point.to_vec();
    sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let mut cumsum = 0.0;
    let mut tau = 0.0;
    let mut support = 0;
    for (i, &v) in sorted.iter().enumerate() {
        cumsum += v;
        let t = (cumsum - 1.0) / (i + 1) as f64;
        if v - t > 0.0 {
            tau = t;
            support = i + 1;
        }
    }
    debug_assert!(support >= 1 || n == 0);
    point.iter().map(|&x| (x - tau).max(0.0)).collect()
}

/// Euclidean projection of `point` onto `set`.
pub fn project(set: &FeasibleSet, point: &[f64]) -> Result<Vec<f64>> {
    if point.len() != set.dim() {
        return Err(Error::InvalidInput(format!(
            "projection dimension mismatch: point has {}, set has {}",
            point.len(),
            set.dim()
        )));
    }
    if !all_finite(point) {
        return Err(Error::Numeric("projection of non-finite point".into()));
    }
    Ok(set.project_unchecked(point))
}

/// Solve `min_s <g, s>` subject to `center + s in set` and `||s|| <= 1`.
///
/// Closed forms for the unconstrained case and the one-dimensional box;
/// everything else runs projected gradient on the linear objective with
/// Dykstra's alternating projections onto the intersection.
pub fn linear_min_local(
    set: &FeasibleSet,
    center: &[f64],
    g: &[f64],
) -> Result<LocalLinearResult> {
    if center.len() != set.dim() || g.len() != set.dim() {
        return Err(Error::InvalidInput(
            "linear_min_local dimension mismatch".into(),
        ));
    }
    if !all_finite(g) {
        return Err(Error::Numeric("linear_min_local with non-finite g".into()));
    }
    let center = {
        let proj = project(set, center)?;
        let d = dist(center, &proj);
        if d > FEASIBILITY_TOL {
            if d > 1e-3 {
                return Err(Error::InvalidInput(format!(
                    "linear_min_local center infeasible (distance {d:.3e})"
                )));
            }
            log::warn!("linear_min_local: center off-set by {d:.3e}, projecting");
        }
        proj
    };

    let gnorm = norm(g);
    if gnorm == 0.0 {
        return Ok(LocalLinearResult {
            direction: vec![0.0; g.len()],
            value: 0.0,
        });
    }

    match set {
        FeasibleSet::Unconstrained { .. } => {
            let direction: Vec<f64> = g.iter().map(|x| -x / gnorm).collect();
            Ok(LocalLinearResult {
                direction,
                value: -gnorm,
            })
        }
        FeasibleSet::Box { lower, upper } if lower.len() == 1 => {
            // feasible s is the interval [max(-1, l-c), min(1, u-c)]
            let lo = (lower[0] - center[0]).max(-1.0);
            let hi = (upper[0] - center[0]).min(1.0);
            let s = if g[0] >= 0.0 { lo } else { hi };
            Ok(LocalLinearResult {
                direction: vec![s],
                value: g[0] * s,
            })
        }
        _ => Ok(linear_min_pgd(set, &center, g, gnorm)),
    }
}

/// Projected gradient on the linear objective with step 1/(sqrt(k)*||g||),
/// projecting each iterate onto {s : center+s in set} ∩ unit ball via
/// Dykstra. Returns the best iterate seen.
fn linear_min_pgd(set: &FeasibleSet, center: &[f64], g: &[f64], gnorm: f64) -> LocalLinearResult {
    let n = g.len();
    let mut s = vec![0.0; n];
    let mut best = s.clone();
    let mut best_val = 0.0;
    for k in 1..=1000usize {
        let step = 1.0 / ((k as f64).sqrt() * gnorm);
        for i in 0..n {
            s[i] -= step * g[i];
        }
        s = dykstra_intersection(set, center, &s);
        let val = dot(g, &s);
        if val < best_val {
            best_val = val;
            best.copy_from_slice(&s);
        }
    }
    LocalLinearResult {
        direction: best,
        value: best_val,
    }
}

/// Dykstra's alternating projections onto
/// {s : center + s in set} ∩ {||s|| <= 1}.
fn dykstra_intersection(set: &FeasibleSet, center: &[f64], start: &[f64]) -> Vec<f64> {
    let n = start.len();
    let mut x = start.to_vec();
    let mut p = vec![0.0; n]; // correction for the set constraint
    let mut q = vec![0.0; n]; // correction for the ball constraint
    for _ in 0..50 {
        let prev = x.clone();

        let y: Vec<f64> = (0..n).map(|i| x[i] + p[i]).collect();
        let shifted: Vec<f64> = (0..n).map(|i| center[i] + y[i]).collect();
        let proj = set.project_unchecked(&shifted);
        let xs: Vec<f64> = (0..n).map(|i| proj[i] - center[i]).collect();
        for i in 0..n {
            p[i] = y[i] - xs[i];
        }

        let z: Vec<f64> = (0..n).map(|i| xs[i] + q[i]).collect();
        let zn = norm(&z);
        let xb: Vec<f64> = if zn <= 1.0 {
            z.clone()
        } else {
            z.iter().map(|v| v / zn).collect()
        };
        for i in 0..n {
            q[i] = z[i] - xb[i];
        }
        x = xb;

        if dist(&x, &prev) < 1e-10 {
            break;
        }
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn ball(center: Vec<f64>, radius: f64) -> FeasibleSet {
        FeasibleSet::new_ball(center, radius).unwrap()
    }

    #[test]
    fn project_ball_radial_scaling() {
        let s = ball(vec![0.0, 0.0], 1.0);
        let p = project(&s, &[3.0, 4.0]).unwrap();
        assert_abs_diff_eq!(p[0], 0.6, epsilon = 1e-12);
        assert_abs_diff_eq!(p[1], 0.8, epsilon = 1e-12);
    }

    #[test]
    fn project_box_clamps() {
        let s = FeasibleSet::new_box(vec![-1.0], vec![1.0]).unwrap();
        let p = project(&s, &[2.5]).unwrap();
        assert_abs_diff_eq!(p[0], 1.0, epsilon = 1e-15);
    }

    #[test]
    fn project_simplex_matches_grid_oracle() {
        let s = FeasibleSet::new_simplex(3).unwrap();
        let x = [0.9, 0.2, -0.1];
        let p = project(&s, &x).unwrap();
        assert_abs_diff_eq!(p[0], 0.85, epsilon = 1e-12);
        assert_abs_diff_eq!(p[1], 0.15, epsilon = 1e-12);
        assert_abs_diff_eq!(p[2], 0.0, epsilon = 1e-12);

        // independent dense-grid check of the squared distance
        let steps = 400usize;
        let mut best = f64::INFINITY;
        for i in 0..=steps {
            for j in 0..=(steps - i) {
                let a = i as f64 / steps as f64;
                let b = j as f64 / steps as f64;
                let c = 1.0 - a - b;
                let d2 = (a - x[0]).powi(2) + (b - x[1]).powi(2) + (c - x[2]).powi(2);
                best = best.min(d2);
            }
        }
        let d2 = (p[0] - x[0]).powi(2) + (p[1] - x[1]).powi(2) + (p[2] - x[2]).powi(2);
        assert!(d2 <= best + 1e-4);
    }

    #[test]
    fn project_dimension_mismatch_errors() {
        let s = ball(vec![0.0, 0.0], 1.0);
        assert!(matches!(
            project(&s, &[1.0]),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn project_idempotent_and_nonexpansive() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let sets = vec![
            FeasibleSet::new_box(vec![-1.0, 0.0, 2.0], vec![1.5, 0.5, 3.0]).unwrap(),
            ball(vec![1.0, -2.0], 0.7),
            FeasibleSet::new_simplex(4).unwrap(),
        ];
        for set in &sets {
            for _ in 0..50 {
                let x: Vec<f64> = (0..set.dim()).map(|_| rng.gen_range(-3.0..3.0)).collect();
                let y: Vec<f64> = (0..set.dim()).map(|_| rng.gen_range(-3.0..3.0)).collect();
                let px = project(set, &x).unwrap();
                let py = project(set, &y).unwrap();
                let ppx = project(set, &px).unwrap();
                assert!(dist(&px, &ppx) <= 1e-12);
                assert!(dist(&px, &py) <= dist(&x, &y) + 1e-12);
            }
        }
    }

    #[test]
    fn enclosing_radius_bounds_sampled_members() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let sets = vec![
            FeasibleSet::new_box(vec![-1.0, -2.0], vec![0.5, 2.0]).unwrap(),
            ball(vec![1.0, 1.0, 1.0], 2.0),
            FeasibleSet::new_simplex(5).unwrap(),
        ];
        for set in &sets {
            let r = set.enclosing_radius().unwrap();
            for _ in 0..10_000 {
                let x = set.sample(&mut rng);
                assert!(norm(&x) <= r + 1e-9, "sample escaped enclosing radius");
            }
        }
    }

    #[test]
    fn linear_min_unconstrained_closed_form() {
        let s = FeasibleSet::Unconstrained { dim: 2 };
        let r = linear_min_local(&s, &[0.0, 0.0], &[3.0, 4.0]).unwrap();
        assert_abs_diff_eq!(r.direction[0], -0.6, epsilon = 1e-12);
        assert_abs_diff_eq!(r.direction[1], -0.8, epsilon = 1e-12);
        assert_abs_diff_eq!(r.value, -5.0, epsilon = 1e-12);
    }

    #[test]
    fn linear_min_box_boundary_outward_gradient() {
        let s = FeasibleSet::new_box(vec![-1.0], vec![1.0]).unwrap();
        let r = linear_min_local(&s, &[1.0], &[-2.0]).unwrap();
        assert_abs_diff_eq!(r.direction[0], 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(r.value, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn linear_min_box_interior_endpoint() {
        let s = FeasibleSet::new_box(vec![-1.0], vec![1.0]).unwrap();
        let r = linear_min_local(&s, &[0.5], &[-1.0]).unwrap();
        assert_abs_diff_eq!(r.direction[0], 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(r.value, -0.5, epsilon = 1e-12);
    }

    #[test]
    fn linear_min_zero_gradient_is_zero() {
        let s = FeasibleSet::new_simplex(3).unwrap();
        let c = [0.5, 0.25, 0.25];
        let r = linear_min_local(&s, &c, &[0.0, 0.0, 0.0]).unwrap();
        assert_eq!(r.value, 0.0);
        assert!(norm(&r.direction) <= 1e-12);
    }

    #[test]
    fn linear_min_direction_stays_feasible() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let sets = vec![
            FeasibleSet::new_box(vec![-1.0, -1.0], vec![1.0, 1.0]).unwrap(),
            ball(vec![0.5, 0.5], 1.2),
            FeasibleSet::new_simplex(3).unwrap(),
        ];
        for set in &sets {
            for _ in 0..20 {
                let c = set.sample(&mut rng);
                let g: Vec<f64> = (0..set.dim()).map(|_| rng.gen_range(-2.0..2.0)).collect();
                let r = linear_min_local(set, &c, &g).unwrap();
                assert!(norm(&r.direction) <= 1.0 + 1e-8);
                let moved: Vec<f64> =
                    c.iter().zip(&r.direction).map(|(a, b)| a + b).collect();
                let proj = project(set, &moved).unwrap();
                assert!(dist(&moved, &proj) <= 1e-6, "direction left the set");
                assert!(r.value <= 1e-12, "value must be nonpositive");
            }
        }
    }

    // brute-force oracle: grid over feasible s
    fn grid_oracle(set: &FeasibleSet, center: &[f64], g: &[f64], step: f64) -> f64 {
        let n = center.len();
        let mut best = 0.0f64;
        let half = (1.0 / step) as i64;
        let mut idx = vec![-half; n];
        loop {
            let s: Vec<f64> = idx.iter().map(|&i| i as f64 * step).collect();
            if norm(&s) <= 1.0 {
                let moved: Vec<f64> = center.iter().zip(&s).map(|(a, b)| a + b).collect();
                if set.contains(&moved, 1e-9) {
                    best = best.min(dot(g, &s));
                }
            }
            // odometer increment
            let mut i = 0;
            loop {
                idx[i] += 1;
                if idx[i] <= half {
                    break;
                }
                idx[i] = -half;
                i += 1;
                if i == n {
                    return best;
                }
            }
        }
    }

    #[test]
    fn linear_min_matches_grid_oracle_2d() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let sets = vec![
            FeasibleSet::new_box(vec![-1.0, -1.0], vec![1.0, 1.0]).unwrap(),
            ball(vec![0.0, 0.0], 0.8),
        ];
        for set in &sets {
            for _ in 0..4 {
                let c = set.sample(&mut rng);
                let g: Vec<f64> = (0..2).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let r = linear_min_local(set, &c, &g).unwrap();
                let oracle = grid_oracle(set, &c, &g, 5e-3);
                assert!(
                    (r.value - oracle).abs() <= 5e-3 * (1.0 + norm(&g)),
                    "value {} vs oracle {}",
                    r.value,
                    oracle
                );
            }
        }
    }

    #[test]
    fn linear_min_simplex_matches_grid_oracle() {
        // 3-simplex: enumerate barycentric grid directly
        let set = FeasibleSet::new_simplex(3).unwrap();
        let c = [0.6, 0.3, 0.1];
        let g = [1.0, -0.5, 0.25];
        let r = linear_min_local(&set, &c, &g).unwrap();
        let steps = 1000usize;
        let mut best = 0.0f64;
        for i in 0..=steps {
            for j in 0..=(steps - i) {
                let t = [
                    i as f64 / steps as f64,
                    j as f64 / steps as f64,
                    1.0 - (i + j) as f64 / steps as f64,
                ];
                let s = sub(&t, &c);
                if norm(&s) <= 1.0 {
                    best = best.min(dot(&g, &s));
                }
            }
        }
        assert!((r.value - best).abs() <= 5e-3);
    }

    #[test]
    fn linear_min_positive_scaling() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let set = ball(vec![0.2, -0.1], 1.5);
        for _ in 0..10 {
            let c = set.sample(&mut rng);
            let g: Vec<f64> = (0..2).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let g3: Vec<f64> = g.iter().map(|x| 3.0 * x).collect();
            let r1 = linear_min_local(&set, &c, &g).unwrap();
            let r3 = linear_min_local(&set, &c, &g3).unwrap();
            assert!((r3.value - 3.0 * r1.value).abs() <= 3.0 * 5e-3);
        }
    }
}
