//! Central finite-difference verification of analytic gradients.

use super::Objective;
use crate::error::Result;
use crate::param::ParamVector;
use crate::rng::IndexBatch;

/// Smallest denominator used by [`relative_error`]. Below this magnitude the
/// comparison is effectively absolute, since central differences cannot
/// resolve tiny partials relative to themselves.
pub const RELATIVE_FLOOR: f64 = 1e-4;

/// `|a - b| / max(|a|, |b|, RELATIVE_FLOOR)`.
pub fn relative_error(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(RELATIVE_FLOOR)
}

/// `(f(x + h e_k) - f(x - h e_k)) / 2h` for each requested coordinate.
pub fn central_differences<F>(mut f: F, x: &[f64], coords: &[usize], step: f64) -> Vec<f64>
where
    F: FnMut(&[f64]) -> f64,
{
    let mut probe = x.to_vec();
    coords
        .iter()
        .map(|&k| {
            probe[k] = x[k] + step;
            let plus = f(&probe);
            probe[k] = x[k] - step;
            let minus = f(&probe);
            probe[k] = x[k];
            (plus - minus) / (2.0 * step)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradCheck {
    pub max_relative_error: f64,
    pub worst_coord: usize,
    pub analytic: f64,
    pub numeric: f64,
}

/// Compares the objective's analytic gradient on `batch` with central
/// differences of its loss on the chosen coordinates.
pub fn check_gradient<O: Objective + ?Sized>(
    objective: &O,
    params: &ParamVector,
    batch: &IndexBatch,
    coords: &[usize],
    step: f64,
) -> Result<GradCheck> {
    let analytic = objective.loss_grad(params, batch)?.grad;
    let mut failure = None;
    let numeric = central_differences(
        |x| match objective.loss_grad(&ParamVector::from_vec(x.to_vec()), batch) {
            Ok(out) => out.loss,
            Err(e) => {
                failure.get_or_insert(e);
                f64::NAN
            }
        },
        params,
        coords,
        step,
    );
    if let Some(e) = failure {
        return Err(e);
    }
    let mut report = GradCheck {
        max_relative_error: 0.0,
        worst_coord: coords.first().copied().unwrap_or(0),
        analytic: 0.0,
        numeric: 0.0,
    };
    for (&k, &n) in coords.iter().zip(&numeric) {
        let err = relative_error(analytic[k], n);
        if err > report.max_relative_error || err.is_nan() {
            report = GradCheck {
                max_relative_error: err,
                worst_coord: k,
                analytic: analytic[k],
                numeric: n,
            };
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{Dataset, SparseExample, Task};
    use crate::models::{ModelSpec, Problem};
    use crate::rng::{sample_batch, RngState};

    #[test]
    fn differences_of_a_cubic() {
        let f = |v: &[f64]| v[0].powi(3) + 2.0 * v[0] * v[1];
        let g = central_differences(f, &[1.0, 2.0], &[0, 1], 1e-5);
        assert!((g[0] - 7.0).abs() < 1e-8);
        assert!((g[1] - 2.0).abs() < 1e-8);
    }

    #[test]
    fn relative_error_floor() {
        assert_eq!(relative_error(2.0, 1.0), 0.5);
        assert!(relative_error(1e-9, 2e-9) < 1e-4);
    }

    fn dense_binary(m: usize, d: usize, rng: &mut RngState) -> Dataset {
        let examples = (0..m)
            .map(|_| {
                let row: Vec<f64> = (0..d).map(|_| rng.uniform(-2.0, 2.0)).collect();
                let y = if rng.uniform(0.0, 1.0) < 0.5 {
                    1.0
                } else {
                    -1.0
                };
                SparseExample::from_dense(y, &row)
            })
            .collect();
        Dataset::new(examples, d, Task::Binary).unwrap()
    }

    #[test]
    fn linear_models_pass_at_random_points() {
        let mut rng = RngState::new(77);
        let data = dense_binary(30, 8, &mut rng);
        for spec in [ModelSpec::logistic(8, 0.05), ModelSpec::svm(8, 0.05)] {
            let problem = Problem::new(spec, &data).unwrap();
            for _ in 0..20 {
                let w = ParamVector::from_vec((0..8).map(|_| rng.uniform(-1.0, 1.0)).collect());
                let batch = sample_batch(&mut rng, 30, 5).unwrap();
                let coords: Vec<usize> = (0..8).collect();
                let r = check_gradient(&problem, &w, &batch, &coords, 1e-5).unwrap();
                assert!(r.max_relative_error <= 1e-5, "{spec:?}: {r:?}");
            }
        }
    }

    #[test]
    fn mlp_passes_at_random_points() {
        let mut rng = RngState::new(78);
        let examples = (0..12)
            .map(|i| {
                let row: Vec<f64> = (0..6).map(|_| rng.uniform(-1.0, 1.0)).collect();
                SparseExample::from_dense((i % 10) as f64, &row)
            })
            .collect();
        let data = Dataset::new(examples, 6, Task::Multiclass(10)).unwrap();
        let spec = ModelSpec::mlp(6, 4, 10, 0.01);
        let problem = Problem::new(spec, &data).unwrap();
        let n = spec.param_count();
        for _ in 0..10 {
            let theta = ParamVector::from_vec((0..n).map(|_| rng.uniform(-1.0, 1.0)).collect());
            let batch = sample_batch(&mut rng, 12, 4).unwrap();
            let coords: Vec<usize> = (0..n).step_by(3).collect();
            let r = check_gradient(&problem, &theta, &batch, &coords, 1e-5).unwrap();
            assert!(r.max_relative_error <= 1e-5, "{r:?}");
        }
    }
}
