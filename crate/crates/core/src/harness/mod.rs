//! Experiment drivers: single runs, learning-rate sweeps, comparisons, and
//! their CSV/SVG artifacts.

mod config;
mod plot;
mod stats;
mod table;

use rayon::prelude::*;

use crate::data::{load_libsvm_file, load_mnist_files, Dataset, Task};
use crate::error::{Error, Result};
use crate::metrics::MetricLog;
use crate::models::{ModelKind, ModelSpec};
use crate::optim::train;
use crate::rng::{RngState, GENERATOR_NAME};

pub use config::{RegimeKind, RunConfig, DEFAULT_IDX_LIMIT};
pub use plot::{emit_plot, series_from_log, PlotStyle, Series};
pub use stats::{average_ranks, pearson, relative_spread, spearman};
pub use table::{read_csv, write_csv, write_merged_csv, HEADER};

/// Learning rates tried by [`grid_search`] in [`compare`].
pub const CONSTANT_GRID: [f64; 4] = [0.001, 0.01, 0.05, 0.1];
/// Diminishing-rule constants tried in [`compare`].
pub const DIMINISHING_GRID: [f64; 3] = [0.01, 0.1, 1.0];
/// LR-batch sizes tried by [`bh_sweep`] by default.
pub const BH_GRID: [usize; 4] = [10, 50, 100, 150];

/// Loads the dataset a config points at: IDX when `labels` is set (keeping
/// the first `limit` examples, 10,000 by default), LIBSVM text otherwise.
pub fn load_dataset(config: &RunConfig) -> Result<Dataset> {
    let path = config
        .data
        .as_deref()
        .ok_or_else(|| Error::config("data", "no dataset path given"))?;
    let data = match &config.labels {
        Some(labels) => load_mnist_files(
            path,
            labels,
            Some(config.limit.unwrap_or(DEFAULT_IDX_LIMIT)),
        )?,
        None => {
            let data = load_libsvm_file(path, None)?;
            match config.limit {
                Some(n) => data.truncated(n),
                None => data,
            }
        }
    };
    Ok(data)
}

/// The model a config describes, sized for `data`.
pub fn model_spec(config: &RunConfig, data: &Dataset) -> Result<ModelSpec> {
    let l2 = config
        .l2
        .unwrap_or_else(|| ModelSpec::default_l2(config.model, data.len()));
    Ok(match config.model {
        ModelKind::Logistic => ModelSpec::logistic(data.dim(), l2),
        ModelKind::Svm => ModelSpec::svm(data.dim(), l2),
        ModelKind::LeastSquares => {
            let mut spec = ModelSpec::least_squares(data.dim());
            spec.l2 = l2;
            spec
        }
        ModelKind::Mlp => match data.task() {
            Task::Multiclass(k) => ModelSpec::mlp(data.dim(), config.hidden, k, l2),
            other => {
                return Err(Error::TaskMismatch(format!(
                    "mlp needs a multiclass dataset, got {}",
                    other.name()
                )))
            }
        },
    })
}

/// Loads the data and runs one experiment.
pub fn run_experiment(config: &RunConfig) -> Result<MetricLog> {
    config.validate()?;
    let data = load_dataset(config)?;
    run_experiment_on(config, &data)
}

/// Runs one experiment on already loaded data. The result depends only on
/// the config and the data.
pub fn run_experiment_on(config: &RunConfig, data: &Dataset) -> Result<MetricLog> {
    config.validate()?;
    let spec = model_spec(config, data)?;
    let mut rng = RngState::new(config.seed);
    let outcome = train(&spec, data, &config.train_config(), &mut rng)?;
    let mut log = MetricLog::new();
    for (k, v) in config.to_pairs() {
        log.set_meta(k, v);
    }
    log.set_meta("examples", data.len());
    log.set_meta("dim", data.dim());
    log.set_meta("l2", spec.l2);
    log.set_meta("generator", GENERATOR_NAME);
    log.set_meta("version", env!("CARGO_PKG_VERSION"));
    for (k, v) in outcome.log.metadata {
        log.set_meta(k, v);
    }
    log.records = outcome.log.records;
    Ok(log)
}

/// One point of a sweep.
#[derive(Debug, Clone)]
pub struct Candidate {
    pub value: f64,
    /// Last epoch's training loss; infinite if the run diverged.
    pub final_loss: f64,
    /// `None` if the run diverged.
    pub log: Option<MetricLog>,
    pub diverged_at: Option<u64>,
}

/// All candidates of a sweep in input order and the winning value.
#[derive(Debug, Clone)]
pub struct SweepResult {
    pub best: f64,
    pub candidates: Vec<Candidate>,
}

impl SweepResult {
    pub fn best_candidate(&self) -> &Candidate {
        self.candidates
            .iter()
            .find(|c| c.value == self.best)
            .expect("best value comes from the candidates")
    }
}

/// Runs `base` once per value with `apply` setting the swept field; the
/// winner has the lowest final loss, ties going to the smaller value.
/// Candidates run in parallel and share the dataset.
pub fn sweep<F>(base: &RunConfig, data: &Dataset, values: &[f64], apply: F) -> Result<SweepResult>
where
    F: Fn(&mut RunConfig, f64) + Sync,
{
    if values.is_empty() {
        return Err(Error::config("grid", "no candidate values"));
    }
    let candidates: Vec<Candidate> = values
        .par_iter()
        .map(|&value| {
            let mut cfg = base.clone();
            apply(&mut cfg, value);
            match run_experiment_on(&cfg, data) {
                Ok(log) => Ok(Candidate {
                    value,
                    final_loss: log.final_loss().unwrap_or(f64::INFINITY),
                    log: Some(log),
                    diverged_at: None,
                }),
                Err(Error::Divergence { iteration, .. }) => Ok(Candidate {
                    value,
                    final_loss: f64::INFINITY,
                    log: None,
                    diverged_at: Some(iteration),
                }),
                Err(e) => Err(e),
            }
        })
        .collect::<Result<_>>()?;
    let best = candidates
        .iter()
        .min_by(|a, b| {
            a.final_loss
                .total_cmp(&b.final_loss)
                .then(a.value.total_cmp(&b.value))
        })
        .map(|c| c.value)
        .expect("values is non-empty");
    Ok(SweepResult { best, candidates })
}

/// Constant-rate sweep; `base` must use the constant regime.
pub fn grid_search(base: &RunConfig, data: &Dataset, lrs: &[f64]) -> Result<SweepResult> {
    if base.regime != RegimeKind::Constant {
        return Err(Error::config(
            "regime",
            format!(
                "grid search needs the constant regime, got {}",
                base.regime.name()
            ),
        ));
    }
    if lrs.is_empty() {
        return Err(Error::config("lr", "empty learning-rate grid"));
    }
    sweep(base, data, lrs, |cfg, lr| cfg.lr = lr)
}

/// Adaptive run against the best diminishing and best constant run of the
/// same optimizer.
#[derive(Debug, Clone)]
pub struct Comparison {
    pub adaptive: MetricLog,
    pub diminishing: SweepResult,
    pub constant: SweepResult,
}

impl Comparison {
    /// `(name, log)` of the three headline runs; diverged winners are skipped.
    pub fn headline(&self) -> Vec<(String, &MetricLog)> {
        let mut runs = vec![("adaptive".to_string(), &self.adaptive)];
        let d = self.diminishing.best_candidate();
        if let Some(log) = &d.log {
            runs.push((format!("diminishing-c{}", d.value), log));
        }
        let c = self.constant.best_candidate();
        if let Some(log) = &c.log {
            runs.push((format!("constant-lr{}", c.value), log));
        }
        runs
    }
}

pub fn compare(base: &RunConfig, data: &Dataset, cs: &[f64], lrs: &[f64]) -> Result<Comparison> {
    let mut adaptive = base.clone();
    adaptive.regime = RegimeKind::Adaptive;
    let adaptive = run_experiment_on(&adaptive, data)?;
    let mut dim = base.clone();
    dim.regime = RegimeKind::Diminishing;
    let diminishing = sweep(&dim, data, cs, |cfg, c| cfg.c = Some(c))?;
    let mut constant = base.clone();
    constant.regime = RegimeKind::Constant;
    let constant = grid_search(&constant, data, lrs)?;
    Ok(Comparison {
        adaptive,
        diminishing,
        constant,
    })
}

/// Adaptive runs over several LR-batch sizes.
pub fn bh_sweep(base: &RunConfig, data: &Dataset, bhs: &[usize]) -> Result<SweepResult> {
    let mut cfg = base.clone();
    cfg.regime = RegimeKind::Adaptive;
    let values: Vec<f64> = bhs.iter().map(|&b| b as f64).collect();
    sweep(&cfg, data, &values, |cfg, b_h| cfg.b_h = b_h as usize)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{gen_categorical_binary, A8A_LIKE_GROUPS};

    fn data() -> Dataset {
        gen_categorical_binary(&mut RngState::new(9), 600, &A8A_LIKE_GROUPS).unwrap()
    }

    fn base() -> RunConfig {
        RunConfig {
            b: 20,
            b_h: 20,
            epochs: 3,
            ..RunConfig::default()
        }
    }

    #[test]
    fn run_is_deterministic_and_echoes_config() {
        let d = data();
        let a = run_experiment_on(&base(), &d).unwrap();
        let b = run_experiment_on(&base(), &d).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.meta("regime"), Some("adaptive"));
        assert_eq!(a.meta("generator"), Some(GENERATOR_NAME));
        assert!(a.meta("guarded_steps").is_some());
        assert_eq!(a.epochs().count(), 3);
    }

    #[test]
    fn grid_winner_dominates() {
        let d = data();
        let mut cfg = base();
        cfg.regime = RegimeKind::Constant;
        let r = grid_search(&cfg, &d, &CONSTANT_GRID).unwrap();
        assert_eq!(r.candidates.len(), 4);
        let best = r.best_candidate().final_loss;
        assert!(r.candidates.iter().all(|c| best <= c.final_loss));
        let single = grid_search(&cfg, &d, &[0.05]).unwrap();
        assert_eq!(single.best, 0.05);
        assert!(grid_search(&cfg, &d, &[]).is_err());
        assert!(grid_search(&base(), &d, &[0.1]).is_err());
    }

    #[test]
    fn ties_go_to_smaller_value() {
        let d = data();
        let mut cfg = base();
        cfg.regime = RegimeKind::Constant;
        cfg.epochs = 0;
        // No epochs: every candidate has the same (infinite) final loss.
        let r = grid_search(&cfg, &d, &[0.1, 0.01, 0.05]).unwrap();
        assert_eq!(r.best, 0.01);
    }

    #[test]
    fn diverged_candidates_lose() {
        let d = data();
        let mut cfg = base();
        cfg.regime = RegimeKind::Constant;
        cfg.model = ModelKind::Svm;
        let r = grid_search(&cfg, &d, &[1e200, 0.01]).unwrap();
        assert_eq!(r.best, 0.01);
        assert!(r.candidates[0].diverged_at.is_some());
    }

    #[test]
    fn mlp_requires_multiclass() {
        let mut cfg = base();
        cfg.model = ModelKind::Mlp;
        assert!(matches!(
            run_experiment_on(&cfg, &data()),
            Err(Error::TaskMismatch(_))
        ));
    }

    #[test]
    fn missing_data_path_is_a_config_error() {
        assert!(matches!(
            run_experiment(&base()),
            Err(Error::InvalidConfig { field, .. }) if field == "data"
        ));
    }
}
