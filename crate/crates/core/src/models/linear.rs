//! Linear models: logistic regression, squared-hinge SVM, least squares.

use super::{add_l2, check_batch, check_shapes, Evaluation, LossGrad, ModelKind, ModelSpec};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::param::ParamVector;
use crate::rng::IndexBatch;

/// `(1/|B|) sum ln(1 + exp(-y w.x)) + (l2/2)|w|^2`.
pub fn logistic_loss_grad(
    spec: &ModelSpec,
    w: &ParamVector,
    data: &Dataset,
    batch: &IndexBatch,
) -> Result<LossGrad> {
    expect_kind(spec, ModelKind::Logistic)?;
    linear_loss_grad(spec, w, data, batch, logistic_term)
}

/// `(1/|B|) sum max(0, 1 - y w.x)^2 + (l2/2)|w|^2`.
pub fn svm_loss_grad(
    spec: &ModelSpec,
    w: &ParamVector,
    data: &Dataset,
    batch: &IndexBatch,
) -> Result<LossGrad> {
    expect_kind(spec, ModelKind::Svm)?;
    linear_loss_grad(spec, w, data, batch, squared_hinge_term)
}

/// `(1/|B|) sum 1/2 (w.x - y)^2 + (l2/2)|w|^2`.
pub fn least_squares_loss_grad(
    spec: &ModelSpec,
    w: &ParamVector,
    data: &Dataset,
    batch: &IndexBatch,
) -> Result<LossGrad> {
    expect_kind(spec, ModelKind::LeastSquares)?;
    linear_loss_grad(spec, w, data, batch, squared_error_term)
}

/// Loss of one example and its derivative with respect to `z = w.x`.
type Term = fn(z: f64, y: f64) -> (f64, f64);

fn logistic_term(z: f64, y: f64) -> (f64, f64) {
    let t = y * z;
    // softplus(-t) and sigmoid(-t), both overflow-free.
    let loss = (-t).max(0.0) + (-t.abs()).exp().ln_1p();
    let sig_neg = if t >= 0.0 {
        let e = (-t).exp();
        e / (1.0 + e)
    } else {
        1.0 / (1.0 + t.exp())
    };
    (loss, -y * sig_neg)
}

fn squared_hinge_term(z: f64, y: f64) -> (f64, f64) {
    let slack = 1.0 - y * z;
    if slack > 0.0 {
        (slack * slack, -2.0 * slack * y)
    } else {
        (0.0, 0.0)
    }
}

fn squared_error_term(z: f64, y: f64) -> (f64, f64) {
    let r = z - y;
    (0.5 * r * r, r)
}

fn term_for(kind: ModelKind) -> Term {
    match kind {
        ModelKind::Logistic => logistic_term,
        ModelKind::Svm => squared_hinge_term,
        ModelKind::LeastSquares => squared_error_term,
        ModelKind::Mlp => unreachable!("not a linear model"),
    }
}

fn expect_kind(spec: &ModelSpec, kind: ModelKind) -> Result<()> {
    if spec.kind == kind {
        Ok(())
    } else {
        Err(Error::TaskMismatch(format!(
            "expected a {} spec, got {}",
            kind.name(),
            spec.kind.name()
        )))
    }
}

fn check_label(kind: ModelKind, y: f64) -> Result<()> {
    if matches!(kind, ModelKind::Logistic | ModelKind::Svm) && y != 1.0 && y != -1.0 {
        return Err(Error::TaskMismatch(format!(
            "{} needs labels in {{-1, +1}}, got {y}",
            kind.name()
        )));
    }
    Ok(())
}

fn linear_loss_grad(
    spec: &ModelSpec,
    w: &ParamVector,
    data: &Dataset,
    batch: &IndexBatch,
    term: Term,
) -> Result<LossGrad> {
    check_shapes(spec, w, data)?;
    check_batch(data, batch)?;
    let mut grad = ParamVector::zeros(w.dim());
    let mut loss = 0.0;
    for &i in batch.indices() {
        let ex = data.example(i);
        check_label(spec.kind, ex.label)?;
        let (l, dz) = term(ex.dot(w), ex.label);
        loss += l;
        if dz != 0.0 {
            for &(j, v) in &ex.features {
                grad[j] += dz * v;
            }
        }
    }
    let inv = 1.0 / batch.len() as f64;
    grad.scale(inv);
    let mut out = LossGrad {
        loss: loss * inv,
        grad,
    };
    add_l2(spec.l2, w, &mut out);
    Ok(out)
}

pub(super) fn evaluate(spec: &ModelSpec, w: &ParamVector, data: &Dataset) -> Result<Evaluation> {
    let term = term_for(spec.kind);
    let mut loss = 0.0;
    let mut correct = 0usize;
    for ex in data.examples() {
        check_label(spec.kind, ex.label)?;
        let z = ex.dot(w);
        loss += term(z, ex.label).0;
        let predicted = if z >= 0.0 { 1.0 } else { -1.0 };
        if predicted == ex.label {
            correct += 1;
        }
    }
    let m = data.len().max(1) as f64;
    let loss = loss / m + 0.5 * spec.l2 * w.norm_sq();
    let accuracy = match spec.kind {
        ModelKind::LeastSquares => None,
        _ => Some(correct as f64 / m),
    };
    Ok(Evaluation { loss, accuracy })
}
