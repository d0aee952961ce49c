//! Built-in test problems plus the finite-max-over-simplex machinery:
//! a KKT inner solver for the regularized weight problem and a synthetic
//! fair-classification generator.

use crate::error::{Error, Result};
use crate::geometry::{project_simplex, FeasibleSet};
use crate::linalg::{dot, norm};
use crate::oracle::ProblemOracle;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::io::{BufRead, BufWriter, Write};
use std::path::Path;

/// min_{−1≤θ≤1} max_{−2≤α≤2} −θ² + α² + 4θα. The origin is the only
/// first-order Nash equilibrium.
pub fn quadratic_saddle() -> ProblemOracle {
    ProblemOracle::new(
        "quadratic-saddle",
        |t, a| -t[0] * t[0] + a[0] * a[0] + 4.0 * t[0] * a[0],
        |t, a| vec![-2.0 * t[0] + 4.0 * a[0]],
        |t, a| vec![2.0 * a[0] + 4.0 * t[0]],
        FeasibleSet::new_box(vec![-1.0], vec![1.0]).unwrap(),
        FeasibleSet::new_box(vec![-2.0], vec![2.0]).unwrap(),
        2.0,
        4.0,
        2.0,
        None,
    )
    .unwrap()
}

/// f(θ, α) = (2α − 1)θ on [−1,1] × [0,1]; the value function is g(θ) = |θ|.
pub fn abs_value_game() -> ProblemOracle {
    ProblemOracle::new(
        "abs-value",
        |t, a| (2.0 * a[0] - 1.0) * t[0],
        |_, a| vec![2.0 * a[0] - 1.0],
        |t, _| vec![2.0 * t[0]],
        FeasibleSet::new_box(vec![-1.0], vec![1.0]).unwrap(),
        FeasibleSet::new_box(vec![0.0], vec![1.0]).unwrap(),
        0.0,
        2.0,
        0.0,
        None,
    )
    .unwrap()
}

/// f(θ, α) = −(a·α − θ)² with α unconstrained. h_θ(α) = (a·α − θ)²
/// satisfies ½‖∇h‖² = 2‖a‖² h, so −f is PL in α with μ = 2‖a‖², without
/// being strongly concave for dim α ≥ 2.
pub fn pl_hyperplane_game(a: &[f64], theta_box: (f64, f64)) -> Result<ProblemOracle> {
    let a_norm_sq = dot(a, a);
    if a.is_empty() || a_norm_sq == 0.0 {
        return Err(Error::InvalidInput(
            "hyperplane normal must be nonzero".into(),
        ));
    }
    let (lo, hi) = theta_box;
    let av = a.to_vec();
    let av2 = a.to_vec();
    let av3 = a.to_vec();
    ProblemOracle::new(
        "pl-hyperplane",
        move |t, al| {
            let r = dot(&av, al) - t[0];
            -r * r
        },
        move |t, al| vec![2.0 * (dot(&av2, al) - t[0])],
        move |t, al| {
            let r = dot(&av3, al) - t[0];
            av3.iter().map(|ai| -2.0 * r * ai).collect()
        },
        FeasibleSet::new_box(vec![lo], vec![hi])?,
        FeasibleSet::Unconstrained { dim: a.len() },
        2.0,
        2.0 * a_norm_sq.sqrt(),
        2.0 * a_norm_sq,
        Some(2.0 * a_norm_sq),
    )
}

/// Maximizer of Σᵢ tᵢℓᵢ − (λ/2)‖t‖² over the probability simplex.
/// KKT gives tᵢ = max(0, (ℓᵢ − ν)/λ) with ν fixing Σtᵢ = 1, which is the
/// Euclidean projection of ℓ/λ onto the simplex.
pub fn simplex_inner_argmax(losses: &[f64], lambda: f64) -> Result<Vec<f64>> {
    if lambda <= 0.0 {
        return Err(Error::InvalidInput(
            "lambda must be positive; use simplex_vertex_argmax for λ = 0".into(),
        ));
    }
    if losses.is_empty() || losses.iter().any(|l| !l.is_finite()) {
        return Err(Error::InvalidInput("losses must be finite".into()));
    }
    let scaled: Vec<f64> = losses.iter().map(|l| l / lambda).collect();
    Ok(project_simplex(&scaled))
}

/// Unregularized inner argmax: the vertex of the largest loss, breaking
/// ties toward the lowest index.
pub fn simplex_vertex_argmax(losses: &[f64]) -> Result<Vec<f64>> {
    if losses.is_empty() || losses.iter().any(|l| !l.is_finite()) {
        return Err(Error::InvalidInput("losses must be finite".into()));
    }
    let mut best = 0;
    for (i, l) in losses.iter().enumerate().skip(1) {
        if *l > losses[best] {
            best = i;
        }
    }
    let mut t = vec![0.0; losses.len()];
    t[best] = 1.0;
    Ok(t)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LossKind {
    Logistic,
    Quadratic,
}

/// One demographic group's samples. Labels are ±1 for logistic losses and
/// free reals for quadratic ones.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupDataset {
    pub features: Vec<Vec<f64>>,
    pub labels: Vec<f64>,
}

/// Per-group empirical losses ℓᵢ(θ) of a shared linear model, the basis
/// of the finite-max fair-classification game.
#[derive(Debug, Clone)]
pub struct GroupLossModel {
    pub groups: Vec<GroupDataset>,
    pub loss_kind: LossKind,
}

impl GroupLossModel {
    pub fn new(groups: Vec<GroupDataset>, loss_kind: LossKind) -> Result<Self> {
        if groups.is_empty() {
            return Err(Error::InvalidInput("at least one group required".into()));
        }
        let dim = groups
            .first()
            .and_then(|g| g.features.first())
            .map(|x| x.len())
            .unwrap_or(0);
        if dim == 0 {
            return Err(Error::InvalidInput("groups must be non-empty".into()));
        }
        for (i, g) in groups.iter().enumerate() {
            if g.features.is_empty() || g.features.len() != g.labels.len() {
                return Err(Error::InvalidInput(format!(
                    "group {i}: needs matching, non-empty features and labels"
                )));
            }
            if g.features.iter().any(|x| x.len() != dim) {
                return Err(Error::InvalidInput(format!(
                    "group {i}: inconsistent feature dimension"
                )));
            }
            if loss_kind == LossKind::Logistic && g.labels.iter().any(|y| *y != 1.0 && *y != -1.0)
            {
                return Err(Error::InvalidInput(format!(
                    "group {i}: logistic labels must be ±1"
                )));
            }
        }
        Ok(Self { groups, loss_kind })
    }

    pub fn dim(&self) -> usize {
        self.groups[0].features[0].len()
    }

    pub fn num_groups(&self) -> usize {
        self.groups.len()
    }

    /// ℓᵢ(θ): mean logistic loss log(1 + exp(−y θ·x)) or mean squared
    /// error (θ·x − y)² over group i.
    pub fn group_loss(&self, i: usize, theta: &[f64]) -> f64 {
        let g = &self.groups[i];
        let n = g.features.len() as f64;
        g.features
            .iter()
            .zip(&g.labels)
            .map(|(x, y)| {
                let z = dot(theta, x);
                match self.loss_kind {
                    LossKind::Logistic => log1p_exp(-y * z),
                    LossKind::Quadratic => (z - y) * (z - y),
                }
            })
            .sum::<f64>()
            / n
    }

    pub fn group_grad(&self, i: usize, theta: &[f64]) -> Vec<f64> {
        let g = &self.groups[i];
        let n = g.features.len() as f64;
        let mut acc = vec![0.0; self.dim()];
        for (x, y) in g.features.iter().zip(&g.labels) {
            let z = dot(theta, x);
            let coef = match self.loss_kind {
                LossKind::Logistic => -y * sigmoid(-y * z),
                LossKind::Quadratic => 2.0 * (z - y),
            };
            for (a, xi) in acc.iter_mut().zip(x) {
                *a += coef * xi / n;
            }
        }
        acc
    }

    pub fn all_losses(&self, theta: &[f64]) -> Vec<f64> {
        (0..self.num_groups())
            .map(|i| self.group_loss(i, theta))
            .collect()
    }

    fn mean_sq_feature_norm(&self, i: usize) -> f64 {
        let g = &self.groups[i];
        g.features.iter().map(|x| dot(x, x)).sum::<f64>() / g.features.len() as f64
    }
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

fn log1p_exp(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

/// Half-width of the θ box used by [`fair_classification_problem`].
pub const FAIR_THETA_BOUND: f64 = 10.0;

/// min_θ max_{t∈Δ} Σᵢ tᵢ ℓᵢ(θ). The oracle is the unregularized bilinear
/// mixture; the −(λ/2)‖t − ᾱ‖² term is added by the regularization step
/// of the non-convex-concave solver, which keeps the exact inner shortcut
/// [`simplex_inner_argmax`] applicable with the same λ.
pub fn fair_classification_problem(
    dataset: &GroupLossModel,
    lambda: f64,
) -> Result<ProblemOracle> {
    if lambda <= 0.0 {
        return Err(Error::InvalidInput("lambda must be positive".into()));
    }
    let m = dataset.num_groups();
    let d = dataset.dim();
    let theta_radius = FAIR_THETA_BOUND * (d as f64).sqrt();

    // conservative smoothness bounds from mean feature norms; the mixture
    // over t preserves the per-group constants
    let mut l11: f64 = 0.0;
    let mut l12_sq = 0.0;
    for i in 0..m {
        let msq = dataset.mean_sq_feature_norm(i);
        let mean_norm = dataset.groups[i]
            .features
            .iter()
            .map(|x| norm(x))
            .sum::<f64>()
            / dataset.groups[i].features.len() as f64;
        let max_abs_label = dataset.groups[i]
            .labels
            .iter()
            .fold(0.0f64, |acc, y| acc.max(y.abs()));
        let (smooth, grad_bound) = match dataset.loss_kind {
            LossKind::Logistic => (0.25 * msq, mean_norm),
            LossKind::Quadratic => {
                let msq_root = msq.sqrt();
                (
                    2.0 * msq,
                    2.0 * (msq_root * theta_radius * msq_root + mean_norm * max_abs_label),
                )
            }
        };
        l11 = l11.max(smooth);
        l12_sq += grad_bound * grad_bound;
    }

    let model = dataset.clone();
    let model_gt = dataset.clone();
    let model_ga = dataset.clone();
    ProblemOracle::new(
        "fair-classification",
        move |theta, t| {
            (0..model.num_groups())
                .map(|i| t[i] * model.group_loss(i, theta))
                .sum()
        },
        move |theta, t| {
            let mut acc = vec![0.0; model_gt.dim()];
            for (i, ti) in t.iter().enumerate().take(model_gt.num_groups()) {
                let gi = model_gt.group_grad(i, theta);
                for (a, v) in acc.iter_mut().zip(&gi) {
                    *a += ti * v;
                }
            }
            acc
        },
        move |theta, _| model_ga.all_losses(theta),
        FeasibleSet::new_box(vec![-FAIR_THETA_BOUND; d], vec![FAIR_THETA_BOUND; d])?,
        FeasibleSet::new_simplex(m)?,
        l11,
        l12_sq.sqrt(),
        0.0,
        None,
    )
}

/// Three 2-D Gaussian-blob groups with a bias feature column. Groups 0
/// and 1 separate along the first coordinate; group 2 separates along the
/// second, so a uniform-average classifier, pulled by the majority,
/// sacrifices it. Deterministic per seed.
pub fn synth_fair_dataset(seed: u64, n_per_group: usize) -> Result<GroupLossModel> {
    if n_per_group < 10 {
        return Err(Error::InvalidInput("n_per_group must be >= 10".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // (positive-class center, negative-class center) per group
    let centers = [
        ([2.0, 2.0], [-2.0, 2.0]),
        ([2.0, -2.0], [-2.0, -2.0]),
        ([0.0, 0.7], [0.0, -0.7]),
    ];
    let sigma = 0.5;
    let mut groups = Vec::with_capacity(3);
    for (pos, neg) in centers {
        let mut features = Vec::with_capacity(n_per_group);
        let mut labels = Vec::with_capacity(n_per_group);
        for k in 0..n_per_group {
            let (center, label) = if k % 2 == 0 { (pos, 1.0) } else { (neg, -1.0) };
            let x1 = center[0] + sigma * normal_sample(&mut rng);
            let x2 = center[1] + sigma * normal_sample(&mut rng);
            features.push(vec![x1, x2, 1.0]);
            labels.push(label);
        }
        groups.push(GroupDataset { features, labels });
    }
    GroupLossModel::new(groups, LossKind::Logistic)
}

fn normal_sample<R: Rng>(rng: &mut R) -> f64 {
    // Box-Muller; one draw per call keeps the stream simple to reason about
    let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
    let u2: f64 = rng.gen_range(0.0..1.0);
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// Write `group_id,label,x1,…,xd` rows with a header line.
pub fn export_dataset_csv(model: &GroupLossModel, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path)?;
    let mut w = BufWriter::new(file);
    let d = model.dim();
    let header: Vec<String> = ["group_id".into(), "label".into()]
        .into_iter()
        .chain((1..=d).map(|i| format!("x{i}")))
        .collect();
    writeln!(w, "{}", header.join(","))?;
    for (gid, g) in model.groups.iter().enumerate() {
        for (x, y) in g.features.iter().zip(&g.labels) {
            let cols: Vec<String> = [gid.to_string(), format_f64(*y)]
                .into_iter()
                .chain(x.iter().map(|v| format_f64(*v)))
                .collect();
            writeln!(w, "{}", cols.join(","))?;
        }
    }
    Ok(())
}

fn format_f64(v: f64) -> String {
    // round-trippable without trailing-zero noise
    let mut s = format!("{v}");
    if !s.contains('.') && !s.contains('e') && !s.contains("inf") && !s.contains("NaN") {
        s.push_str(".0");
    }
    s
}

/// Read a dataset written by [`export_dataset_csv`]. Group ids must be
/// 0..m contiguous; rows may arrive in any order.
pub fn import_dataset_csv(path: &Path, loss_kind: LossKind) -> Result<GroupLossModel> {
    let file = std::fs::File::open(path)?;
    let reader = std::io::BufReader::new(file);
    let mut lines = reader.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::InvalidInput("empty csv".into()))??;
    let cols: Vec<&str> = header.split(',').collect();
    if cols.len() < 3 || cols[0] != "group_id" || cols[1] != "label" {
        return Err(Error::InvalidInput(
            "csv header must start with group_id,label,x1".into(),
        ));
    }
    let d = cols.len() - 2;
    let mut groups: Vec<GroupDataset> = Vec::new();
    for (lineno, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != d + 2 {
            return Err(Error::InvalidInput(format!(
                "csv row {}: expected {} fields, got {}",
                lineno + 2,
                d + 2,
                fields.len()
            )));
        }
        let gid: usize = fields[0]
            .trim()
            .parse()
            .map_err(|_| Error::InvalidInput(format!("csv row {}: bad group id", lineno + 2)))?;
        let mut nums = Vec::with_capacity(d + 1);
        for f in &fields[1..] {
            let v: f64 = f.trim().parse().map_err(|_| {
                Error::InvalidInput(format!("csv row {}: bad number '{f}'", lineno + 2))
            })?;
            nums.push(v);
        }
        while groups.len() <= gid {
            groups.push(GroupDataset {
                features: Vec::new(),
                labels: Vec::new(),
            });
        }
        groups[gid].labels.push(nums[0]);
        groups[gid].features.push(nums[1..].to_vec());
    }
    GroupLossModel::new(groups, loss_kind)
}
