//! Synthetic problems with controlled structure.

use nalgebra::{DMatrix, DVector};
use rand::distr::Distribution;
use rand_distr::{Exp1, StandardNormal};

use super::{Dataset, SparseExample, Task};
use crate::error::{Error, Result};
use crate::models::{self, ModelSpec};
use crate::param::ParamVector;
use crate::rng::{IndexBatch, RngState};

/// A dataset together with the exact minimizer of its objective.
#[derive(Debug, Clone)]
pub struct SyntheticProblem {
    pub dataset: Dataset,
    pub optimum: ParamVector,
    pub optimal_value: f64,
}

impl SyntheticProblem {
    /// Model spec under which `optimum` is optimal (unregularized least squares).
    pub fn spec(&self) -> ModelSpec {
        ModelSpec::least_squares(self.dataset.dim())
    }
}

/// Least squares `F(x) = (1/m) sum_i 1/2 (a_i . x - b_i)^2` with Hessian
/// exactly `a * I`.
///
/// The design is `sqrt(a m) * U` where `U` (m x d) has orthonormal columns, so
/// `(1/m) A^T A = a I` for any `m >= d`. Targets are `A x_true + noise * eps`
/// with standard normal `x_true` and `eps`; the noise makes `F(x*) > 0`
/// whenever `m > d`.
pub fn gen_least_squares(
    rng: &mut RngState,
    m: usize,
    d: usize,
    curvature: f64,
    noise: f64,
) -> Result<SyntheticProblem> {
    if !(curvature > 0.0 && curvature.is_finite()) {
        return Err(Error::InvalidProblem(format!(
            "curvature must be positive, got {curvature}"
        )));
    }
    if d == 0 || m < d {
        return Err(Error::InvalidProblem(format!(
            "need m >= d >= 1, got m = {m}, d = {d}"
        )));
    }
    if !(noise >= 0.0 && noise.is_finite()) {
        return Err(Error::InvalidProblem(format!(
            "noise must be >= 0, got {noise}"
        )));
    }

    let gaussian = DMatrix::from_fn(m, d, |_, _| normal(rng));
    let q = gaussian.qr().q();
    let design = q * (curvature * m as f64).sqrt();
    let truth = DVector::from_fn(d, |_, _| normal(rng));
    let clean = &design * truth;
    let targets: Vec<f64> = clean.iter().map(|v| v + noise * normal(rng)).collect();

    let rows: Vec<Vec<f64>> = (0..m)
        .map(|i| design.row(i).iter().copied().collect())
        .collect();
    least_squares_from_rows(&rows, &targets)
}

/// Builds a least-squares problem from explicit rows and solves its normal
/// equations (Cholesky) for the optimum.
pub fn least_squares_from_rows(rows: &[Vec<f64>], targets: &[f64]) -> Result<SyntheticProblem> {
    let m = rows.len();
    if m == 0 || targets.len() != m {
        return Err(Error::InvalidProblem(format!(
            "{m} rows but {} targets",
            targets.len()
        )));
    }
    let d = rows[0].len();
    if d == 0 || rows.iter().any(|r| r.len() != d) {
        return Err(Error::InvalidProblem(
            "rows must share a positive length".into(),
        ));
    }
    if m < d {
        return Err(Error::InvalidProblem(format!(
            "underdetermined: {m} rows for {d} unknowns"
        )));
    }

    let design = DMatrix::from_fn(m, d, |i, j| rows[i][j]);
    let rhs = DVector::from_column_slice(targets);
    let normal_matrix = design.transpose() * &design;
    let chol = normal_matrix
        .cholesky()
        .ok_or_else(|| Error::InvalidProblem("design matrix is rank deficient".into()))?;
    let solution = chol.solve(&(design.transpose() * rhs));
    let optimum = ParamVector::from_vec(solution.iter().copied().collect());

    let examples = rows
        .iter()
        .zip(targets)
        .map(|(row, &b)| SparseExample::from_dense(b, row))
        .collect();
    let dataset = Dataset::new(examples, d, Task::Regression)?;

    let spec = ModelSpec::least_squares(d);
    let full = IndexBatch::full(m)?;
    let at_opt = models::loss_grad(&spec, &optimum, &dataset, &full)?;
    let grad_norm = at_opt.grad.norm();
    if grad_norm > 1e-10 {
        return Err(Error::InvalidProblem(format!(
            "normal equations too ill-conditioned: gradient norm {grad_norm:e} at the solution"
        )));
    }
    Ok(SyntheticProblem {
        dataset,
        optimum,
        optimal_value: at_opt.loss,
    })
}

/// Category counts of an a8a-like one-hot encoding: 14 attributes, 123 binary
/// features, exactly one active feature per attribute.
pub const A8A_LIKE_GROUPS: [usize; 14] = [5, 8, 5, 16, 5, 7, 14, 6, 5, 2, 2, 2, 5, 41];

/// Sparse binary classification data shaped like a8a: every example activates
/// one category per group (value 1.0), category frequencies are skewed, and
/// labels come from a planted logistic model so classes overlap.
pub fn gen_categorical_binary(rng: &mut RngState, m: usize, groups: &[usize]) -> Result<Dataset> {
    if m == 0 || groups.is_empty() || groups.contains(&0) {
        return Err(Error::InvalidProblem(
            "need m >= 1 and non-empty groups".into(),
        ));
    }
    let dim: usize = groups.iter().sum();

    // Per-group category frequencies, normalized exponential draws squared for skew.
    let mut cumulative: Vec<Vec<f64>> = Vec::with_capacity(groups.len());
    for &size in groups {
        let raw: Vec<f64> = (0..size)
            .map(|_| {
                let e: f64 = Exp1.sample(rng.inner_mut());
                e * e
            })
            .collect();
        let total: f64 = raw.iter().sum();
        let mut acc = 0.0;
        cumulative.push(
            raw.iter()
                .map(|w| {
                    acc += w / total;
                    acc
                })
                .collect(),
        );
    }
    let planted: Vec<f64> = (0..dim).map(|_| 0.7 * normal(rng)).collect();
    let bias = -1.2;

    let mut examples = Vec::with_capacity(m);
    for _ in 0..m {
        let mut features = Vec::with_capacity(groups.len());
        let mut offset = 0;
        for (g, &size) in groups.iter().enumerate() {
            let u = rng.uniform(0.0, 1.0);
            let k = cumulative[g]
                .iter()
                .position(|&c| u < c)
                .unwrap_or(size - 1);
            features.push((offset + k, 1.0));
            offset += size;
        }
        let score: f64 = bias + features.iter().map(|&(j, _)| planted[j]).sum::<f64>();
        let p = 1.0 / (1.0 + (-score).exp());
        let label = if rng.uniform(0.0, 1.0) < p { 1.0 } else { -1.0 };
        examples.push(SparseExample::new(label, features));
    }
    Dataset::new(examples, dim, Task::Binary)
}

fn normal(rng: &mut RngState) -> f64 {
    StandardNormal.sample(rng.inner_mut())
}
