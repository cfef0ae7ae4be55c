//! Step rules and the training loop.
//!
//! Every iteration of an adaptive run draws two independent batches: `S_H`
//! (size `b_H`) to set the learning rate from `grad F_SH(x)` and
//! `grad F_SH(x + grad F_SH(x))`, and `S` (size `b`) for the step itself.
//! Baseline runs draw only `S`, except BB which also draws `S_H` to compare
//! gradients at the current and previous iterate.

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::lr::{LrRegime, LrRule, LrSignal};
use crate::metrics::{MetricLog, MetricRecord};
use crate::models::{Evaluation, ModelSpec, Objective, Problem};
use crate::param::ParamVector;
use crate::rng::{sample_batch, RngState};

/// Default momentum coefficient.
pub const DEFAULT_BETA: f64 = 0.9;
/// Default iteration-record cadence.
pub const DEFAULT_LOG_EVERY: u64 = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Optimizer {
    Sgd,
    /// Heavy-ball momentum.
    Sgdm,
    SignSgd,
}

impl Optimizer {
    pub fn name(&self) -> &'static str {
        match self {
            Optimizer::Sgd => "sgd",
            Optimizer::Sgdm => "sgdm",
            Optimizer::SignSgd => "signsgd",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "sgd" => Some(Optimizer::Sgd),
            "sgdm" => Some(Optimizer::Sgdm),
            "signsgd" => Some(Optimizer::SignSgd),
            _ => None,
        }
    }
}

/// `x - alpha g`.
pub fn sgd_step(x: &ParamVector, g: &ParamVector, alpha: f64) -> Result<ParamVector> {
    x.check_dim(g)?;
    Ok(x.iter()
        .zip(g.iter())
        .map(|(xi, gi)| xi - alpha * gi)
        .collect::<Vec<_>>()
        .into())
}

/// `x - alpha g + beta (x - x_prev)`.
pub fn sgdm_step(
    x: &ParamVector,
    x_prev: &ParamVector,
    g: &ParamVector,
    alpha: f64,
    beta: f64,
) -> Result<ParamVector> {
    x.check_dim(g)?;
    x.check_dim(x_prev)?;
    Ok(x.iter()
        .zip(x_prev.iter())
        .zip(g.iter())
        .map(|((xi, pi), gi)| xi - alpha * gi + beta * (xi - pi))
        .collect::<Vec<_>>()
        .into())
}

/// `x - alpha sign(g)` with `sign(0) = 0`.
pub fn signsgd_step(x: &ParamVector, g: &ParamVector, alpha: f64) -> Result<ParamVector> {
    x.check_dim(g)?;
    Ok(x.iter()
        .zip(g.iter())
        .map(|(xi, gi)| {
            let s = if *gi > 0.0 {
                1.0
            } else if *gi < 0.0 {
                -1.0
            } else {
                0.0
            };
            xi - alpha * s
        })
        .collect::<Vec<_>>()
        .into())
}

/// `sum / n`.
pub fn average_iterates(sum: &ParamVector, n: u64) -> Result<ParamVector> {
    if n == 0 {
        return Err(Error::config("n", "cannot average zero iterates"));
    }
    let mut out = sum.clone();
    out.scale(1.0 / n as f64);
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub optimizer: Optimizer,
    pub rule: LrRule,
    pub b: usize,
    pub b_h: usize,
    pub epochs: u64,
    pub beta: f64,
    pub log_every: u64,
    /// Also evaluate the averaged iterate at the end of the run.
    pub average: bool,
}

impl TrainConfig {
    pub fn new(optimizer: Optimizer, rule: LrRule, b: usize, b_h: usize, epochs: u64) -> Self {
        TrainConfig {
            optimizer,
            rule,
            b,
            b_h,
            epochs,
            beta: DEFAULT_BETA,
            log_every: DEFAULT_LOG_EVERY,
            average: false,
        }
    }

    /// Iterations per epoch on `m` examples: `m / (b + b_H)` for the adaptive
    /// rule, `m / b` otherwise, never below one.
    pub fn iterations_per_epoch(&self, m: usize) -> u64 {
        let per_iteration = match self.rule {
            LrRule::Adaptive => self.b + self.b_h,
            _ => self.b,
        };
        (m / per_iteration.max(1)).max(1) as u64
    }

    pub fn validate(&self, m: usize) -> Result<()> {
        self.rule.validate()?;
        if self.b == 0 {
            return Err(Error::config("b", "must be at least 1"));
        }
        if self.b > m {
            return Err(Error::config(
                "b",
                format!("{} exceeds the {m} examples", self.b),
            ));
        }
        if self.rule.uses_lr_batch() {
            if self.b_h == 0 {
                return Err(Error::config("b_h", "must be at least 1"));
            }
            if self.b_h > m {
                return Err(Error::config(
                    "b_h",
                    format!("{} exceeds the {m} examples", self.b_h),
                ));
            }
        }
        if !(0.0..1.0).contains(&self.beta) {
            return Err(Error::config(
                "beta",
                format!("must lie in [0,1), got {}", self.beta),
            ));
        }
        if self.log_every == 0 {
            return Err(Error::config("log_every", "must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub params: ParamVector,
    /// Mean of all post-update iterates; the starting point when no step ran.
    pub averaged: ParamVector,
    pub log: MetricLog,
}

/// Runs the training loop on any objective from `x0`.
///
/// Metadata keys set on the log: `iterations_per_epoch`, `iterations`,
/// `guarded_steps`, `capped_steps`, `gradient_evaluations`,
/// `examples_touched`, `budgeted_examples`, and, with averaging on,
/// `averaged_loss` (plus `averaged_accuracy` for classifiers).
pub fn train_objective(
    objective: &dyn Objective,
    x0: ParamVector,
    config: &TrainConfig,
    rng: &mut RngState,
) -> Result<TrainOutcome> {
    let m = objective.num_examples();
    config.validate(m)?;
    if x0.dim() != objective.num_params() {
        return Err(Error::Shape {
            expected: objective.num_params(),
            actual: x0.dim(),
        });
    }
    let ipe = config.iterations_per_epoch(m);
    let mut regime = LrRegime::new(config.rule, config.b_h)?;
    let mut log = MetricLog::new();
    let mut x = x0;
    let mut x_prev = x.clone();
    let mut sum = ParamVector::zeros(x.dim());
    let mut t: u64 = 0;
    let mut grad_evals: u64 = 0;
    let mut touched: u64 = 0;

    for epoch in 1..=config.epochs {
        for k in 1..=ipe {
            t += 1;
            let (step, lr_grad_norm) = match config.rule {
                LrRule::Adaptive => {
                    let s_h = sample_batch(rng, m, config.b_h)?;
                    let g = objective.loss_grad(&x, &s_h)?.grad;
                    let mut probe = x.clone();
                    probe.axpy(1.0, &g);
                    let g_probe = objective.loss_grad(&probe, &s_h)?.grad;
                    grad_evals += 2;
                    touched += 2 * config.b_h as u64;
                    let step = regime.next_lr(LrSignal::Probe {
                        g: &g,
                        g_probe: &g_probe,
                    })?;
                    (Some(step), Some(g.norm()))
                }
                LrRule::Bb { .. } if t > 1 => {
                    let s_h = sample_batch(rng, m, config.b_h)?;
                    let g = objective.loss_grad(&x, &s_h)?.grad;
                    let g_prev = objective.loss_grad(&x_prev, &s_h)?.grad;
                    grad_evals += 2;
                    touched += 2 * config.b_h as u64;
                    let step = regime.next_lr(LrSignal::Secant {
                        x: &x,
                        x_prev: &x_prev,
                        g: &g,
                        g_prev: &g_prev,
                    })?;
                    (Some(step), None)
                }
                LrRule::Polyak { .. } | LrRule::Multiplicative { .. } => (None, None),
                _ => (Some(regime.next_lr(LrSignal::None)?), None),
            };

            let s = sample_batch(rng, m, config.b)?;
            let batch = objective.loss_grad(&x, &s)?;
            grad_evals += 1;
            touched += config.b as u64;
            if !batch.loss.is_finite() || !batch.grad.is_finite() {
                return Err(Error::Divergence {
                    iteration: t,
                    reason: format!("non-finite batch loss {} or gradient", batch.loss),
                });
            }
            let step = match step {
                Some(step) => step,
                None => regime.next_lr(LrSignal::Batch {
                    loss: batch.loss,
                    grad: &batch.grad,
                })?,
            };

            let next = match config.optimizer {
                Optimizer::Sgd => sgd_step(&x, &batch.grad, step.lr)?,
                Optimizer::Sgdm => sgdm_step(&x, &x_prev, &batch.grad, step.lr, config.beta)?,
                Optimizer::SignSgd => signsgd_step(&x, &batch.grad, step.lr)?,
            };
            if !next.is_finite() {
                return Err(Error::Divergence {
                    iteration: t,
                    reason: format!("non-finite parameters after a step of size {}", step.lr),
                });
            }
            x_prev = std::mem::replace(&mut x, next);
            sum.axpy(1.0, &x);

            if t.is_multiple_of(config.log_every) {
                let grad_norm = lr_grad_norm.unwrap_or_else(|| batch.grad.norm());
                let progress = (epoch - 1) as f64 + k as f64 / ipe as f64;
                log.push(MetricRecord::iteration(
                    progress,
                    t,
                    grad_norm,
                    step.lr,
                    step.guarded,
                ));
            }
        }
        let eval = checked_eval(objective, &x, t)?;
        log.push(MetricRecord::epoch(epoch, t, eval.loss, eval.accuracy));
    }

    let averaged = if t == 0 {
        x.clone()
    } else {
        average_iterates(&sum, t)?
    };
    log.set_meta("iterations_per_epoch", ipe);
    log.set_meta("iterations", t);
    log.set_meta("guarded_steps", regime.guarded_steps());
    log.set_meta("capped_steps", regime.capped_steps());
    log.set_meta("gradient_evaluations", grad_evals);
    log.set_meta("examples_touched", touched);
    let per_iteration = match config.rule {
        LrRule::Adaptive => config.b + config.b_h,
        _ => config.b,
    };
    log.set_meta("budgeted_examples", t * per_iteration as u64);
    if config.average {
        let eval = checked_eval(objective, &averaged, t)?;
        log.set_meta("averaged_loss", format!("{:.16e}", eval.loss));
        if let Some(acc) = eval.accuracy {
            log.set_meta("averaged_accuracy", format!("{acc:.16e}"));
        }
    }
    Ok(TrainOutcome {
        params: x,
        averaged,
        log,
    })
}

fn checked_eval(objective: &dyn Objective, x: &ParamVector, t: u64) -> Result<Evaluation> {
    let eval = objective.evaluate(x)?;
    if !eval.loss.is_finite() {
        return Err(Error::Divergence {
            iteration: t,
            reason: format!("training loss is {}", eval.loss),
        });
    }
    Ok(eval)
}

/// Initializes the model from `rng` and trains it on `data`.
pub fn train(
    spec: &ModelSpec,
    data: &Dataset,
    config: &TrainConfig,
    rng: &mut RngState,
) -> Result<TrainOutcome> {
    let problem = Problem::new(*spec, data)?;
    let x0 = spec.init_params(rng);
    train_objective(&problem, x0, config, rng)
}
