//! Acceptance suite: one check per criterion, one PASS/FAIL line each.
//!
//! Runs every criterion by default; numeric arguments select a subset, e.g.
//! `cargo test --test acceptance -- 1 4 9`.

use std::collections::BTreeSet;
use std::io::Read;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use secantlr::data::{
    gen_categorical_binary, gen_least_squares, least_squares_from_rows, load_mnist_files,
    load_mnist_idx, open_maybe_gz, parse_libsvm, write_libsvm, Dataset, A8A_LIKE_GROUPS,
};
use secantlr::harness::{
    self, compare, relative_spread, run_experiment, spearman, write_csv, RunConfig,
};
use secantlr::lr::LrRule;
use secantlr::metrics::MetricLog;
use secantlr::models::gradcheck::check_gradient;
use secantlr::models::{Evaluation, LossGrad, ModelKind, ModelSpec, Objective, Problem};
use secantlr::optim::{train_objective, Optimizer, TrainConfig};
use secantlr::{sample_batch, Error, IndexBatch, ParamVector, Result, RngState};

type Outcome = std::result::Result<String, String>;

fn data_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data")
}

fn mnist_config() -> RunConfig {
    let dir = data_dir().join("mnist-10k");
    RunConfig {
        model: ModelKind::Mlp,
        data: Some(dir.join("images-idx3-ubyte.gz")),
        labels: Some(dir.join("labels-idx1-ubyte.gz")),
        limit: Some(10_000),
        b: 100,
        b_h: 100,
        seed: 42,
        ..RunConfig::default()
    }
}

fn dense_rows(data: &Dataset) -> Vec<Vec<f64>> {
    data.examples()
        .iter()
        .map(|ex| {
            let mut row = vec![0.0; data.dim()];
            for &(j, v) in &ex.features {
                row[j] = v;
            }
            row
        })
        .collect()
}

/// `F(x) = 1/2 a |x|^2` as a least-squares problem with zero targets and a
/// design whose scaled Gram matrix is `a I`.
fn scaled_identity_quadratic(a: f64, m: usize, d: usize, seed: u64) -> Result<Dataset> {
    let shaped = gen_least_squares(&mut RngState::new(seed), m, d, a, 0.0)?;
    let rows = dense_rows(&shaped.dataset);
    Ok(least_squares_from_rows(&rows, &vec![0.0; m])?.dataset)
}

fn quadratic_alphas(a: f64, m: usize) -> Result<Vec<(f64, bool)>> {
    let data = scaled_identity_quadratic(a, m, 5, 1000 + m as u64)?;
    let problem = Problem::new(ModelSpec::least_squares(5), &data)?;
    let mut cfg = TrainConfig::new(Optimizer::Sgd, LrRule::Adaptive, m, m, 40);
    cfg.log_every = 1;
    let x0 = ParamVector::from_vec(vec![1.0, -2.0, 0.5, 3.0, -1.5]);
    let out = train_objective(&problem, x0, &cfg, &mut RngState::new(0))?;
    Ok(out
        .log
        .iterations()
        .map(|r| (r.lr.unwrap(), r.guarded.unwrap()))
        .collect())
}

const CURVATURES: [f64; 5] = [0.25, 0.5, 1.0, 2.0, 4.0];

fn criterion_1() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut checked = 0;
    for m in [16usize, 100] {
        for a in CURVATURES {
            let expected = 1.0 / ((m as f64).sqrt() * (1.0 + a));
            for (alpha, guarded) in quadratic_alphas(a, m).map_err(|e| e.to_string())? {
                if !guarded {
                    worst = worst.max((alpha - expected).abs());
                    checked += 1;
                }
            }
        }
    }
    let detail = format!("{checked} unguarded steps, max |alpha - 1/(sqrt(m)(1+a))| = {worst:.3e}");
    if checked > 0 && worst <= 1e-12 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn criterion_2() -> Outcome {
    let mut lines = Vec::new();
    for m in [16usize, 100] {
        let mut steady = Vec::new();
        for a in CURVATURES {
            let alphas: Vec<f64> = quadratic_alphas(a, m)
                .map_err(|e| e.to_string())?
                .into_iter()
                .filter(|(_, g)| !g)
                .map(|(lr, _)| lr)
                .collect();
            let tail = &alphas[alphas.len() / 2..];
            steady.push(tail.iter().sum::<f64>() / tail.len() as f64);
        }
        let decreasing = steady.windows(2).all(|w| w[1] < w[0]);
        lines.push(format!("m={m}: {steady:.5?}"));
        if !decreasing {
            return Err(format!(
                "not strictly decreasing in a: {}",
                lines.join("; ")
            ));
        }
    }
    Ok(lines.join("; "))
}

fn random_coords(rng: &mut RngState, n: usize, k: usize) -> Vec<usize> {
    sample_batch(rng, n, k).unwrap().indices().to_vec()
}

fn criterion_3() -> Outcome {
    let run = || -> Result<String> {
        let mut rng = RngState::new(3);
        let a8a = gen_categorical_binary(&mut rng, 500, &A8A_LIKE_GROUPS)?;
        let mut report = Vec::new();
        let mut worst_all: f64 = 0.0;
        for spec in [
            ModelSpec::logistic(123, 1.0 / 500.0),
            ModelSpec::svm(123, 1.0 / 500.0),
        ] {
            let problem = Problem::new(spec, &a8a)?;
            let mut worst: f64 = 0.0;
            for _ in 0..100 {
                let w = ParamVector::from_vec((0..123).map(|_| rng.uniform(-1.0, 1.0)).collect());
                let batch = sample_batch(&mut rng, 500, 10)?;
                // Coordinates hit by the batch carry the interesting partials.
                let mut coords: BTreeSet<usize> = batch
                    .indices()
                    .iter()
                    .flat_map(|&i| a8a.example(i).features.iter().map(|&(j, _)| j))
                    .collect();
                while coords.len() < 30 {
                    coords.extend(random_coords(&mut rng, 123, 1));
                }
                let coords: Vec<usize> = coords.into_iter().collect();
                worst = worst
                    .max(check_gradient(&problem, &w, &batch, &coords, 1e-5)?.max_relative_error);
            }
            report.push(format!("{} {worst:.2e}", spec.kind.name()));
            worst_all = worst_all.max(worst);
        }

        let dir = data_dir().join("mnist-10k");
        let mnist = load_mnist_files(
            &dir.join("images-idx3-ubyte.gz"),
            &dir.join("labels-idx1-ubyte.gz"),
            Some(200),
        )?;
        let spec = ModelSpec::mlp(784, 300, 10, 1e-4);
        let problem = Problem::new(spec, &mnist)?;
        let hidden = 300;
        let b1 = hidden * 784;
        let w2 = b1 + hidden;
        let b2 = w2 + 10 * hidden;
        let mut worst: f64 = 0.0;
        for _ in 0..100 {
            let theta = spec.init_params(&mut rng);
            let batch = sample_batch(&mut rng, 200, 5)?;
            let mut coords = Vec::new();
            // W1 entries fed by pixels that are lit in the batch.
            let lit: Vec<usize> = mnist
                .example(batch.indices()[0])
                .features
                .iter()
                .map(|&(j, _)| j)
                .collect();
            for _ in 0..8 {
                let j = lit[rng.uniform(0.0, lit.len() as f64) as usize % lit.len()];
                let h = rng.uniform(0.0, hidden as f64) as usize % hidden;
                coords.push(j * hidden + h);
            }
            coords.extend(
                random_coords(&mut rng, hidden, 4)
                    .into_iter()
                    .map(|h| b1 + h),
            );
            coords.extend(
                random_coords(&mut rng, 10 * hidden, 6)
                    .into_iter()
                    .map(|k| w2 + k),
            );
            coords.extend(random_coords(&mut rng, 10, 2).into_iter().map(|c| b2 + c));
            worst = worst
                .max(check_gradient(&problem, &theta, &batch, &coords, 1e-5)?.max_relative_error);
        }
        report.push(format!("mlp {worst:.2e}"));
        worst_all = worst_all.max(worst);
        let detail = format!(
            "max relative error over 100 points x 20 coords: {}",
            report.join(", ")
        );
        if worst_all <= 1e-5 {
            Ok(detail)
        } else {
            Err(Error::InvalidProblem(detail))
        }
    };
    run().map_err(|e| e.to_string())
}

fn criterion_4() -> Outcome {
    let run = || -> Result<(f64, usize)> {
        let generated = gen_categorical_binary(&mut RngState::new(2024), 5000, &A8A_LIKE_GROUPS)?;
        let dir = tempfile::tempdir()?;
        let path = dir.path().join("a8a-like.txt");
        write_libsvm(&generated, std::fs::File::create(&path)?)?;
        let cfg = RunConfig {
            model: ModelKind::Logistic,
            data: Some(path),
            b: 5000,
            b_h: 5000,
            epochs: 250,
            log_every: 1,
            ..RunConfig::default()
        };
        let log = run_experiment(&cfg)?;
        let (lg, lr): (Vec<f64>, Vec<f64>) = log
            .iterations()
            .map(|r| (r.grad_norm.unwrap().ln(), r.lr.unwrap()))
            .unzip();
        let rho = spearman(&lg, &lr).ok_or_else(|| Error::Degenerate("constant series".into()))?;
        Ok((rho, lg.len()))
    };
    match run() {
        Ok((rho, n)) if n >= 200 && rho <= -0.5 => Ok(format!(
            "{n} full-batch iterations, spearman rho = {rho:.4}"
        )),
        Ok((rho, n)) => Err(format!(
            "{n} iterations, spearman rho = {rho:.4} (need <= -0.5)"
        )),
        Err(e) => Err(e.to_string()),
    }
}

fn criterion_5() -> Outcome {
    let mut cfg = mnist_config();
    cfg.epochs = 10;
    let run = || -> Result<Vec<(usize, f64)>> {
        let data = harness::load_dataset(&cfg)?;
        let sweep = harness::bh_sweep(&cfg, &data, &harness::BH_GRID)?;
        Ok(sweep
            .candidates
            .iter()
            .map(|c| (c.value as usize, c.final_loss))
            .collect())
    };
    let finals = run().map_err(|e| e.to_string())?;
    let losses: Vec<f64> = finals.iter().map(|&(_, l)| l).collect();
    let spread = relative_spread(&losses).unwrap_or(f64::INFINITY);
    let detail = format!(
        "final loss by b_H: {}; relative spread {spread:.4}",
        finals
            .iter()
            .map(|(b, l)| format!("{b}={l:.4}"))
            .collect::<Vec<_>>()
            .join(", ")
    );
    if spread <= 0.2 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn criterion_6() -> Outcome {
    let mut cfg = mnist_config();
    cfg.epochs = 30;
    let data = harness::load_dataset(&cfg).map_err(|e| e.to_string())?;
    let mut lines = Vec::new();
    let mut ok = true;
    for optimizer in [Optimizer::Sgd, Optimizer::Sgdm, Optimizer::SignSgd] {
        let mut base = cfg.clone();
        base.optimizer = optimizer;
        let cmp = compare(
            &base,
            &data,
            &harness::DIMINISHING_GRID,
            &harness::CONSTANT_GRID,
        )
        .map_err(|e| e.to_string())?;
        let adaptive = cmp.adaptive.final_loss().unwrap_or(f64::INFINITY);
        let dim = cmp.diminishing.best_candidate();
        let con = cmp.constant.best_candidate();
        let beats = adaptive <= dim.final_loss;
        let matches = adaptive <= 1.1 * con.final_loss;
        ok &= beats && matches;
        lines.push(format!(
            "{}: adaptive {adaptive:.4}, diminishing(c={}) {:.4} [{}], constant(lr={}) {:.4} [{}]",
            optimizer.name(),
            dim.value,
            dim.final_loss,
            if beats { "beaten" } else { "NOT beaten" },
            con.value,
            con.final_loss,
            if matches {
                "within 10%"
            } else {
                "NOT within 10%"
            },
        ));
    }
    if ok {
        Ok(lines.join("; "))
    } else {
        Err(lines.join("; "))
    }
}

fn criterion_7() -> Outcome {
    let run = || -> Result<(f64, f64)> {
        let mut gaps = [0.0; 2];
        for seed in 0..5u64 {
            let p = gen_least_squares(&mut RngState::new(100 + seed), 1000, 10, 1.0, 1.0)?;
            let problem = Problem::new(p.spec(), &p.dataset)?;
            // 1000 / (10 + 10) = 50 iterations per epoch.
            for (slot, epochs) in [(0, 10u64), (1, 40)] {
                let mut cfg = TrainConfig::new(Optimizer::Sgd, LrRule::Adaptive, 10, 10, epochs);
                cfg.average = true;
                let out = train_objective(
                    &problem,
                    ParamVector::zeros(10),
                    &cfg,
                    &mut RngState::new(seed),
                )?;
                assert_eq!(
                    out.log.meta("iterations"),
                    Some(if slot == 0 { "500" } else { "2000" })
                );
                gaps[slot] += (problem.evaluate(&out.averaged)?.loss - p.optimal_value) / 5.0;
            }
        }
        Ok((gaps[0], gaps[1]))
    };
    match run() {
        Ok((g500, g2000)) if g2000 < g500 => Ok(format!(
            "mean averaged-iterate gap: n=500 {g500:.4e}, n=2000 {g2000:.4e}"
        )),
        Ok((g500, g2000)) => Err(format!(
            "gap did not shrink: n=500 {g500:.4e}, n=2000 {g2000:.4e}"
        )),
        Err(e) => Err(e.to_string()),
    }
}

fn criterion_8() -> Outcome {
    let run = || -> Result<Vec<String>> {
        let mut notes = Vec::new();
        let dir = tempfile::tempdir()?;
        let generated = gen_categorical_binary(&mut RngState::new(42), 1000, &A8A_LIKE_GROUPS)?;
        let path = dir.path().join("a8a-slice.txt");
        write_libsvm(&generated, std::fs::File::create(&path)?)?;
        let cfg = RunConfig {
            model: ModelKind::Logistic,
            data: Some(path),
            b: 10,
            b_h: 10,
            epochs: 10,
            seed: 42,
            ..RunConfig::default()
        };
        let mut bytes = Vec::new();
        for _ in 0..2 {
            let mut buf = Vec::new();
            write_csv(&run_experiment(&cfg)?, &mut buf)?;
            bytes.push(buf);
        }
        if bytes[0] != bytes[1] {
            return Err(Error::InvalidProblem(
                "CSV bytes differ between identical runs".into(),
            ));
        }
        notes.push(format!("identical CSVs ({} bytes)", bytes[0].len()));

        let mut rng = RngState::new(8);
        let mut mixed = Vec::new();
        for ex in generated.examples().iter().take(200) {
            let feats = ex
                .features
                .iter()
                .map(|&(j, _)| (j, rng.uniform(-1e3, 1e3)))
                .collect();
            mixed.push(secantlr::data::SparseExample::new(ex.label, feats));
        }
        for original in [
            generated.clone(),
            Dataset::new(mixed, 123, generated.task())?,
        ] {
            let mut text = Vec::new();
            write_libsvm(&original, &mut text)?;
            let back = parse_libsvm(text.as_slice(), Some(123))?;
            if back.examples() != original.examples() {
                return Err(Error::InvalidProblem(
                    "LIBSVM round-trip changed a triple".into(),
                ));
            }
        }
        notes.push("LIBSVM round-trip exact".into());

        let mnist = data_dir().join("mnist-10k");
        let mut images = Vec::new();
        open_maybe_gz(&mnist.join("images-idx3-ubyte.gz"))?.read_to_end(&mut images)?;
        let mut labels = Vec::new();
        open_maybe_gz(&mnist.join("labels-idx1-ubyte.gz"))?.read_to_end(&mut labels)?;
        let mut bad_images = images.clone();
        bad_images[3] = 0x04;
        let mut bad_labels = labels.clone();
        bad_labels[2] = 0x09;
        for (what, imgs, lbls) in [
            ("image", &bad_images, &labels),
            ("label", &images, &bad_labels),
            ("swapped", &labels, &images),
        ] {
            match load_mnist_idx(imgs.as_slice(), lbls.as_slice()) {
                Err(Error::Format { .. }) => {}
                other => {
                    return Err(Error::InvalidProblem(format!(
                        "{what} magic not rejected: {:?}",
                        other.map(|d| d.len())
                    )))
                }
            }
        }
        notes.push("wrong IDX magic rejected".into());
        Ok(notes)
    };
    run().map(|n| n.join(", ")).map_err(|e| e.to_string())
}

/// `f_i(x) = 1 + sin(3x)` for every component: non-negative, nonconvex, and
/// the probe `x + f'(x)` often lands where the derivative has the other sign.
struct Wavy {
    m: usize,
}

impl Objective for Wavy {
    fn num_examples(&self) -> usize {
        self.m
    }

    fn num_params(&self) -> usize {
        1
    }

    fn loss_grad(&self, params: &ParamVector, _batch: &IndexBatch) -> Result<LossGrad> {
        let x = params[0];
        Ok(LossGrad {
            loss: 1.0 + (3.0 * x).sin(),
            grad: ParamVector::from_vec(vec![3.0 * (3.0 * x).cos()]),
        })
    }

    fn evaluate(&self, params: &ParamVector) -> Result<Evaluation> {
        Ok(Evaluation {
            loss: 1.0 + (3.0 * params[0]).sin(),
            accuracy: None,
        })
    }
}

fn criterion_9() -> Outcome {
    let objective = Wavy { m: 4 };
    let mut guarded = 0u64;
    let mut runs = 0;
    for start in [0.1, 0.7, 1.3, 2.0, -0.4] {
        let mut cfg = TrainConfig::new(Optimizer::Sgd, LrRule::Adaptive, 2, 2, 50);
        cfg.log_every = 1;
        let out = train_objective(
            &objective,
            ParamVector::from_vec(vec![start]),
            &cfg,
            &mut RngState::new(9),
        )
        .map_err(|e| e.to_string())?;
        let log: &MetricLog = &out.log;
        let finite = out.params.is_finite()
            && log.records.iter().all(|r| {
                [r.loss, r.grad_norm, r.lr]
                    .iter()
                    .flatten()
                    .all(|v| v.is_finite())
            });
        if !finite {
            return Err(format!("non-finite value in run from x0 = {start}"));
        }
        guarded += log.meta("guarded_steps").unwrap().parse::<u64>().unwrap();
        runs += 1;
    }
    let detail = format!("{runs} runs x 50 steps, {guarded} guarded steps, all values finite");
    if guarded > 0 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

type Criterion = (u32, &'static str, Duration, fn() -> Outcome);

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        (
            1,
            "quadratic LR oracle",
            Duration::from_secs(1),
            criterion_1,
        ),
        (
            2,
            "curvature monotonicity",
            Duration::from_secs(1),
            criterion_2,
        ),
        (
            3,
            "gradient correctness",
            Duration::from_secs(30),
            criterion_3,
        ),
        (
            4,
            "anti-correlation of LR and gradient norm",
            Duration::from_secs(60),
            criterion_4,
        ),
        (
            5,
            "insensitivity to b_H",
            Duration::from_secs(600),
            criterion_5,
        ),
        (
            6,
            "beats diminishing, matches tuned constant",
            Duration::from_secs(1800),
            criterion_6,
        ),
        (
            7,
            "averaged-iterate gap shrinks with n",
            Duration::from_secs(60),
            criterion_7,
        ),
        (
            8,
            "determinism and formats",
            Duration::from_secs(10),
            criterion_8,
        ),
        (
            9,
            "guard accounting on a nonconvex objective",
            Duration::from_secs(1),
            criterion_9,
        ),
    ];
    let selected: BTreeSet<u32> = std::env::args()
        .skip(1)
        .filter_map(|a| a.parse().ok())
        .collect();
    let mut failures = 0;
    for (n, name, budget, check) in criteria {
        if !selected.is_empty() && !selected.contains(&n) {
            continue;
        }
        let start = Instant::now();
        let result = check();
        let elapsed = start.elapsed();
        let timing = format!(
            "{:.2}s, budget {}s",
            elapsed.as_secs_f64(),
            budget.as_secs()
        );
        match result {
            Ok(detail) => println!("[PASS] criterion {n} ({name}): {detail} [{timing}]"),
            Err(detail) => {
                failures += 1;
                println!("[FAIL] criterion {n} ({name}): {detail} [{timing}]");
            }
        }
        if elapsed > budget {
            println!("       note: criterion {n} exceeded its runtime budget");
        }
    }
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failures} criteria failed");
        ExitCode::FAILURE
    }
}
