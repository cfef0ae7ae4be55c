use std::fs::{self, File};
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use secantlr::error::ErrorCategory;
use secantlr::harness::{
    self, bh_sweep, compare, emit_plot, grid_search, load_dataset, read_csv, run_experiment_on,
    series_from_log, write_csv, write_merged_csv, PlotStyle, RegimeKind, RunConfig, SweepResult,
};
use secantlr::metrics::MetricLog;
use secantlr::{Error, Result};

#[derive(Parser)]
#[command(
    name = "secantlr",
    version,
    about = "Train with tuning-free learning rates and compare against baselines"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// One run: CSV of metrics, optionally a loss plot.
    Train(RunArgs),
    /// Constant learning-rate sweep.
    Grid {
        #[command(flatten)]
        run: RunArgs,
        /// Candidate rates.
        #[arg(long, value_delimiter = ',', default_values_t = harness::CONSTANT_GRID)]
        lrs: Vec<f64>,
    },
    /// Adaptive vs best diminishing vs best constant; `--plot` writes the loss
    /// plot and a second `-lr` plot of rates and gradient norms.
    Compare {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, value_delimiter = ',', default_values_t = harness::DIMINISHING_GRID)]
        cs: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_values_t = harness::CONSTANT_GRID)]
        lrs: Vec<f64>,
    },
    /// Adaptive runs over several LR-batch sizes.
    BhSweep {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, value_delimiter = ',', default_values_t = harness::BH_GRID)]
        bhs: Vec<usize>,
    },
    /// Render a metrics CSV as SVG.
    Plot {
        /// CSV written by another subcommand.
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = Style::Loss)]
        style: Style,
        /// Output file; stdout if absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Style {
    /// Training loss per epoch.
    Loss,
    /// Learning rate and gradient norm per iteration.
    Lr,
}

impl From<Style> for PlotStyle {
    fn from(s: Style) -> Self {
        match s {
            Style::Loss => PlotStyle::LossVsEpoch,
            Style::Lr => PlotStyle::LrAndGradNormVsIter,
        }
    }
}

/// Flags override values read from `--config`.
#[derive(Args)]
struct RunArgs {
    /// key=value file with run settings.
    #[arg(long)]
    config: Option<PathBuf>,
    /// logistic, svm, mlp or lsq.
    #[arg(long)]
    model: Option<String>,
    /// LIBSVM file, or IDX images when --labels is given.
    #[arg(long)]
    data: Option<String>,
    /// IDX label file.
    #[arg(long)]
    labels: Option<String>,
    /// Keep only the first N examples.
    #[arg(long)]
    limit: Option<String>,
    /// sgd, sgdm or signsgd.
    #[arg(long)]
    optimizer: Option<String>,
    /// adaptive, constant, diminishing, bb, polyak or multiplicative.
    #[arg(long)]
    regime: Option<String>,
    #[arg(long)]
    lr: Option<String>,
    #[arg(long)]
    c: Option<String>,
    #[arg(long)]
    gamma: Option<String>,
    #[arg(long)]
    b: Option<String>,
    #[arg(long)]
    bh: Option<String>,
    #[arg(long)]
    epochs: Option<String>,
    #[arg(long)]
    beta: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    hidden: Option<String>,
    #[arg(long)]
    log_every: Option<String>,
    /// Also evaluate the averaged iterate.
    #[arg(long)]
    average: bool,
    /// Output CSV; stdout if absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Output SVG.
    #[arg(long)]
    plot: Option<PathBuf>,
}

impl RunArgs {
    fn config(&self) -> Result<RunConfig> {
        let mut cfg = RunConfig::default();
        if let Some(path) = &self.config {
            let text = fs::read_to_string(path).map_err(|e| Error::InvalidConfig {
                field: "config".into(),
                reason: format!("cannot read {}: {e}", path.display()),
            })?;
            cfg.apply_text(&text)?;
        }
        let overrides = [
            ("model", &self.model),
            ("data", &self.data),
            ("labels", &self.labels),
            ("limit", &self.limit),
            ("optimizer", &self.optimizer),
            ("regime", &self.regime),
            ("lr", &self.lr),
            ("c", &self.c),
            ("gamma", &self.gamma),
            ("b", &self.b),
            ("b_h", &self.bh),
            ("epochs", &self.epochs),
            ("beta", &self.beta),
            ("seed", &self.seed),
            ("hidden", &self.hidden),
            ("log_every", &self.log_every),
        ];
        for (key, value) in overrides {
            if let Some(v) = value {
                cfg.set(key, v)?;
            }
        }
        if self.average {
            cfg.average = true;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn with_output<F>(path: Option<&Path>, write: F) -> Result<()>
where
    F: FnOnce(&mut dyn Write) -> Result<u64>,
{
    match path {
        Some(p) => {
            let mut w = BufWriter::new(File::create(p)?);
            write(&mut w)?;
            w.flush()?;
        }
        None => {
            let stdout = io::stdout();
            let mut w = stdout.lock();
            write(&mut w)?;
            w.flush()?;
        }
    }
    Ok(())
}

fn plot_runs(runs: &[(String, &MetricLog)], style: PlotStyle, path: &Path) -> Result<()> {
    let series: Vec<_> = runs
        .iter()
        .flat_map(|(name, log)| series_from_log(log, style, name))
        .filter(|s| !s.points.is_empty())
        .collect();
    with_output(Some(path), |w| emit_plot(&series, style, w))
}

fn lr_plot_path(path: &Path) -> PathBuf {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("plot");
    let ext = path.extension().and_then(|s| s.to_str()).unwrap_or("svg");
    path.with_file_name(format!("{stem}-lr.{ext}"))
}

fn sweep_runs<'a>(result: &'a SweepResult, prefix: &str) -> Vec<(String, &'a MetricLog)> {
    result
        .candidates
        .iter()
        .filter_map(|c| {
            c.log
                .as_ref()
                .map(|log| (format!("{prefix}{}", c.value), log))
        })
        .collect()
}

fn report_sweep(what: &str, result: &SweepResult) {
    for c in &result.candidates {
        match c.diverged_at {
            Some(t) => eprintln!("{what}={}: diverged at iteration {t}", c.value),
            None => eprintln!("{what}={}: final loss {:.6e}", c.value, c.final_loss),
        }
    }
    eprintln!("best {what}: {}", result.best);
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Train(args) => {
            let cfg = args.config()?;
            let data = load_dataset(&cfg)?;
            let log = run_experiment_on(&cfg, &data)?;
            with_output(args.out.as_deref(), |w| write_csv(&log, w))?;
            if let Some(p) = &args.plot {
                plot_runs(&[(String::new(), &log)], PlotStyle::LossVsEpoch, p)?;
            }
        }
        Command::Grid { run, lrs } => {
            let mut cfg = run.config()?;
            cfg.regime = RegimeKind::Constant;
            let data = load_dataset(&cfg)?;
            let result = grid_search(&cfg, &data, &lrs)?;
            report_sweep("lr", &result);
            let runs = sweep_runs(&result, "lr");
            with_output(run.out.as_deref(), |w| write_merged_csv(&runs, w))?;
            if let Some(p) = &run.plot {
                plot_runs(&runs, PlotStyle::LossVsEpoch, p)?;
            }
        }
        Command::Compare { run, cs, lrs } => {
            let cfg = run.config()?;
            let data = load_dataset(&cfg)?;
            let result = compare(&cfg, &data, &cs, &lrs)?;
            report_sweep("c", &result.diminishing);
            report_sweep("lr", &result.constant);
            eprintln!(
                "adaptive: final loss {:.6e}",
                result.adaptive.final_loss().unwrap_or(f64::NAN)
            );
            let runs = result.headline();
            with_output(run.out.as_deref(), |w| write_merged_csv(&runs, w))?;
            if let Some(p) = &run.plot {
                plot_runs(&runs, PlotStyle::LossVsEpoch, p)?;
                plot_runs(&runs, PlotStyle::LrAndGradNormVsIter, &lr_plot_path(p))?;
            }
        }
        Command::BhSweep { run, bhs } => {
            let cfg = run.config()?;
            let data = load_dataset(&cfg)?;
            let result = bh_sweep(&cfg, &data, &bhs)?;
            report_sweep("b_h", &result);
            let finals: Vec<f64> = result.candidates.iter().map(|c| c.final_loss).collect();
            if let Some(spread) = harness::relative_spread(&finals) {
                eprintln!("relative spread of final loss: {spread:.4}");
            }
            let runs = sweep_runs(&result, "bh");
            with_output(run.out.as_deref(), |w| write_merged_csv(&runs, w))?;
            if let Some(p) = &run.plot {
                plot_runs(&runs, PlotStyle::LossVsEpoch, p)?;
            }
        }
        Command::Plot { input, style, out } => {
            let runs = read_csv(BufReader::new(File::open(&input)?))?;
            let style = PlotStyle::from(style);
            let series: Vec<_> = runs
                .iter()
                .flat_map(|(name, log)| series_from_log(log, style, name))
                .filter(|s| !s.points.is_empty())
                .collect();
            with_output(out.as_deref(), |w| emit_plot(&series, style, w))?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e.category() {
                ErrorCategory::Config => 1,
                ErrorCategory::Data => 2,
                ErrorCategory::Divergence => 3,
            })
        }
    }
}
