//! Loss and gradient oracles.
//!
//! Every oracle returns the mean loss over a batch plus its exact gradient,
//! with an optional `(l2 / 2) * |theta|^2` penalty added once per batch.

pub mod gradcheck;
mod linear;
mod mlp;

use crate::data::{Dataset, Task};
use crate::error::{Error, Result};
use crate::param::ParamVector;
use crate::rng::{IndexBatch, RngState};

pub use linear::{least_squares_loss_grad, logistic_loss_grad, svm_loss_grad};
pub use mlp::mlp_loss_grad;

/// Hidden width used when none is given.
pub const DEFAULT_HIDDEN: usize = 300;
pub const DEFAULT_CLASSES: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    /// Log-loss on `{-1, +1}` labels.
    Logistic,
    /// Squared hinge `max(0, 1 - y w.x)^2` on `{-1, +1}` labels.
    Svm,
    /// One sigmoid hidden layer, softmax output, cross-entropy.
    Mlp,
    /// `1/2 (w.x - y)^2` on real targets.
    LeastSquares,
}

impl ModelKind {
    pub fn name(&self) -> &'static str {
        match self {
            ModelKind::Logistic => "logistic",
            ModelKind::Svm => "svm",
            ModelKind::Mlp => "mlp",
            ModelKind::LeastSquares => "lsq",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "logistic" => Some(ModelKind::Logistic),
            "svm" => Some(ModelKind::Svm),
            "mlp" => Some(ModelKind::Mlp),
            "lsq" | "least_squares" => Some(ModelKind::LeastSquares),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelSpec {
    pub kind: ModelKind,
    pub d_in: usize,
    /// MLP only.
    pub hidden: usize,
    /// MLP only.
    pub classes: usize,
    pub l2: f64,
}

impl ModelSpec {
    pub fn logistic(d_in: usize, l2: f64) -> Self {
        Self::linear(ModelKind::Logistic, d_in, l2)
    }

    pub fn svm(d_in: usize, l2: f64) -> Self {
        Self::linear(ModelKind::Svm, d_in, l2)
    }

    pub fn least_squares(d_in: usize) -> Self {
        Self::linear(ModelKind::LeastSquares, d_in, 0.0)
    }

    pub fn mlp(d_in: usize, hidden: usize, classes: usize, l2: f64) -> Self {
        ModelSpec {
            kind: ModelKind::Mlp,
            d_in,
            hidden,
            classes,
            l2,
        }
    }

    fn linear(kind: ModelKind, d_in: usize, l2: f64) -> Self {
        ModelSpec {
            kind,
            d_in,
            hidden: 0,
            classes: 0,
            l2,
        }
    }

    /// Default regularization for a dataset of `m` examples: `1/m` for the
    /// linear classifiers, `0` otherwise.
    pub fn default_l2(kind: ModelKind, m: usize) -> f64 {
        match kind {
            ModelKind::Logistic | ModelKind::Svm if m > 0 => 1.0 / m as f64,
            _ => 0.0,
        }
    }

    pub fn param_count(&self) -> usize {
        match self.kind {
            ModelKind::Mlp => {
                self.hidden * self.d_in + self.hidden + self.classes * self.hidden + self.classes
            }
            _ => self.d_in,
        }
    }

    /// Task a dataset must have to be fed to this model.
    pub fn expected_task(&self) -> Task {
        match self.kind {
            ModelKind::Logistic | ModelKind::Svm => Task::Binary,
            ModelKind::Mlp => Task::Multiclass(self.classes),
            ModelKind::LeastSquares => Task::Regression,
        }
    }

    /// Initial parameters: zeros for linear models; for the MLP every weight
    /// and bias is uniform in `+-1/sqrt(fan_in)` of its layer.
    pub fn init_params(&self, rng: &mut RngState) -> ParamVector {
        match self.kind {
            ModelKind::Mlp => {
                let mut theta = ParamVector::zeros(self.param_count());
                let first = self.hidden * self.d_in + self.hidden;
                let r1 = 1.0 / (self.d_in.max(1) as f64).sqrt();
                let r2 = 1.0 / (self.hidden.max(1) as f64).sqrt();
                for (k, v) in theta.iter_mut().enumerate() {
                    let r = if k < first { r1 } else { r2 };
                    *v = rng.uniform(-r, r);
                }
                theta
            }
            _ => ParamVector::zeros(self.param_count()),
        }
    }
}

/// Mean loss over a batch and its gradient.
#[derive(Debug, Clone, PartialEq)]
pub struct LossGrad {
    pub loss: f64,
    pub grad: ParamVector,
}

/// Full-dataset objective and, for classifiers, training accuracy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation {
    pub loss: f64,
    pub accuracy: Option<f64>,
}

/// Dispatches to the oracle for `spec.kind`.
pub fn loss_grad(
    spec: &ModelSpec,
    params: &ParamVector,
    data: &Dataset,
    batch: &IndexBatch,
) -> Result<LossGrad> {
    match spec.kind {
        ModelKind::Logistic => logistic_loss_grad(spec, params, data, batch),
        ModelKind::Svm => svm_loss_grad(spec, params, data, batch),
        ModelKind::Mlp => mlp_loss_grad(spec, params, data, batch),
        ModelKind::LeastSquares => least_squares_loss_grad(spec, params, data, batch),
    }
}

/// Full objective and accuracy. Binary models predict `sign(w.x)` with
/// `sign(0) = +1`; the MLP predicts the arg-max class, lowest index on ties.
pub fn evaluate(spec: &ModelSpec, params: &ParamVector, data: &Dataset) -> Result<Evaluation> {
    check_shapes(spec, params, data)?;
    match spec.kind {
        ModelKind::Mlp => mlp::evaluate(spec, params, data),
        _ => linear::evaluate(spec, params, data),
    }
}

/// Anything the training loop can minimize: a finite sum over `num_examples`
/// components with a gradient oracle for any subset.
pub trait Objective: Sync {
    fn num_examples(&self) -> usize;
    fn num_params(&self) -> usize;
    fn loss_grad(&self, params: &ParamVector, batch: &IndexBatch) -> Result<LossGrad>;
    fn evaluate(&self, params: &ParamVector) -> Result<Evaluation>;
}

/// A model spec bound to a dataset.
#[derive(Debug, Clone, Copy)]
pub struct Problem<'a> {
    pub spec: ModelSpec,
    pub data: &'a Dataset,
}

impl<'a> Problem<'a> {
    pub fn new(spec: ModelSpec, data: &'a Dataset) -> Result<Self> {
        if spec.d_in != data.dim() {
            return Err(Error::Shape {
                expected: spec.d_in,
                actual: data.dim(),
            });
        }
        if spec.expected_task() != data.task() {
            return Err(Error::TaskMismatch(format!(
                "{} model needs a {} dataset, got {}",
                spec.kind.name(),
                spec.expected_task().name(),
                data.task().name()
            )));
        }
        if data.is_empty() {
            return Err(Error::InvalidProblem("dataset is empty".into()));
        }
        Ok(Problem { spec, data })
    }
}

impl Objective for Problem<'_> {
    fn num_examples(&self) -> usize {
        self.data.len()
    }

    fn num_params(&self) -> usize {
        self.spec.param_count()
    }

    fn loss_grad(&self, params: &ParamVector, batch: &IndexBatch) -> Result<LossGrad> {
        loss_grad(&self.spec, params, self.data, batch)
    }

    fn evaluate(&self, params: &ParamVector) -> Result<Evaluation> {
        evaluate(&self.spec, params, self.data)
    }
}

fn check_shapes(spec: &ModelSpec, params: &ParamVector, data: &Dataset) -> Result<()> {
    if params.dim() != spec.param_count() {
        return Err(Error::Shape {
            expected: spec.param_count(),
            actual: params.dim(),
        });
    }
    if data.dim() != spec.d_in {
        return Err(Error::Shape {
            expected: spec.d_in,
            actual: data.dim(),
        });
    }
    Ok(())
}

fn check_batch(data: &Dataset, batch: &IndexBatch) -> Result<()> {
    if batch.source_size() != data.len() {
        return Err(Error::InvalidBatch {
            size: batch.len(),
            population: data.len(),
        });
    }
    Ok(())
}

/// `loss += l2/2 |theta|^2`, `grad += l2 * theta`.
fn add_l2(l2: f64, params: &ParamVector, out: &mut LossGrad) {
    if l2 != 0.0 {
        out.loss += 0.5 * l2 * params.norm_sq();
        out.grad.axpy(l2, params);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn param_counts() {
        assert_eq!(ModelSpec::logistic(123, 0.0).param_count(), 123);
        assert_eq!(
            ModelSpec::mlp(784, 300, 10, 0.0).param_count(),
            300 * 784 + 300 + 10 * 300 + 10
        );
    }

    #[test]
    fn mlp_init_is_bounded_and_seeded() {
        let spec = ModelSpec::mlp(16, 9, 10, 0.0);
        let a = spec.init_params(&mut RngState::new(3));
        let b = spec.init_params(&mut RngState::new(3));
        assert_eq!(a, b);
        let first = 9 * 16 + 9;
        assert!(a[..first].iter().all(|v| v.abs() <= 0.25));
        assert!(a[first..].iter().all(|v| v.abs() <= 1.0 / 3.0));
        assert!(ModelSpec::svm(4, 0.0)
            .init_params(&mut RngState::new(3))
            .iter()
            .all(|&v| v == 0.0));
    }

    #[test]
    fn problem_checks_task_and_dimension() {
        let data = Dataset::new(
            vec![crate::data::SparseExample::new(1.0, vec![(0, 1.0)])],
            2,
            Task::Binary,
        )
        .unwrap();
        assert!(Problem::new(ModelSpec::logistic(2, 0.0), &data).is_ok());
        assert!(matches!(
            Problem::new(ModelSpec::logistic(3, 0.0), &data),
            Err(Error::Shape { .. })
        ));
        assert!(matches!(
            Problem::new(ModelSpec::mlp(2, 3, 10, 0.0), &data),
            Err(Error::TaskMismatch(_))
        ));
    }
}
