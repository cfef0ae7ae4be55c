//! Run configuration as flat `key=value` text.

use std::fmt::Display;
use std::path::PathBuf;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::lr::{LrRule, MULTIPLICATIVE_GROW, MULTIPLICATIVE_SHRINK};
use crate::models::{ModelKind, DEFAULT_HIDDEN};
use crate::optim::{Optimizer, TrainConfig, DEFAULT_BETA, DEFAULT_LOG_EVERY};

/// Examples kept from an IDX dataset unless `limit` says otherwise.
pub const DEFAULT_IDX_LIMIT: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegimeKind {
    Adaptive,
    Constant,
    Diminishing,
    Bb,
    Polyak,
    Multiplicative,
}

impl RegimeKind {
    pub fn name(&self) -> &'static str {
        match self {
            RegimeKind::Adaptive => "adaptive",
            RegimeKind::Constant => "constant",
            RegimeKind::Diminishing => "diminishing",
            RegimeKind::Bb => "bb",
            RegimeKind::Polyak => "polyak",
            RegimeKind::Multiplicative => "multiplicative",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "adaptive" => Some(RegimeKind::Adaptive),
            "constant" => Some(RegimeKind::Constant),
            "diminishing" => Some(RegimeKind::Diminishing),
            "bb" => Some(RegimeKind::Bb),
            "polyak" => Some(RegimeKind::Polyak),
            "multiplicative" => Some(RegimeKind::Multiplicative),
            _ => None,
        }
    }
}

/// Everything needed to reproduce one training run.
///
/// Keys in the text form match the field names. `lr` is the constant rate
/// and the starting rate of BB, Polyak and multiplicative runs; `c` defaults
/// to 0.1 for the diminishing rule and 1 for Polyak.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub model: ModelKind,
    pub hidden: usize,
    /// `None` picks the model's default for the dataset size.
    pub l2: Option<f64>,
    pub data: Option<PathBuf>,
    /// IDX label file; its presence selects the IDX reader for `data`.
    pub labels: Option<PathBuf>,
    pub limit: Option<usize>,
    pub optimizer: Optimizer,
    pub regime: RegimeKind,
    pub lr: f64,
    pub c: Option<f64>,
    pub gamma: f64,
    pub f_star: f64,
    pub shrink: f64,
    pub grow: f64,
    pub b: usize,
    pub b_h: usize,
    pub epochs: u64,
    pub seed: u64,
    pub beta: f64,
    pub log_every: u64,
    pub average: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            model: ModelKind::Logistic,
            hidden: DEFAULT_HIDDEN,
            l2: None,
            data: None,
            labels: None,
            limit: None,
            optimizer: Optimizer::Sgd,
            regime: RegimeKind::Adaptive,
            lr: 0.01,
            c: None,
            gamma: 1.0,
            f_star: 0.0,
            shrink: MULTIPLICATIVE_SHRINK,
            grow: MULTIPLICATIVE_GROW,
            b: 100,
            b_h: 100,
            epochs: 30,
            seed: 42,
            beta: DEFAULT_BETA,
            log_every: DEFAULT_LOG_EVERY,
            average: false,
        }
    }
}

fn parse_num<T: FromStr>(field: &str, value: &str) -> Result<T>
where
    T::Err: Display,
{
    value
        .parse()
        .map_err(|e| Error::config(field, format!("cannot parse `{value}`: {e}")))
}

impl RunConfig {
    /// Parses `key=value` lines; blank lines and `#` comments are ignored.
    pub fn parse(text: &str) -> Result<Self> {
        let mut config = RunConfig::default();
        config.apply_text(text)?;
        Ok(config)
    }

    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::config(
                    format!("line {}", n + 1),
                    format!("expected key=value, got `{line}`"),
                )
            })?;
            self.set(key.trim(), value.trim())?;
        }
        Ok(())
    }

    /// Sets one field from its text form.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "model" => {
                self.model = ModelKind::parse(value)
                    .ok_or_else(|| Error::config(key, format!("unknown model `{value}`")))?
            }
            "hidden" => self.hidden = parse_num(key, value)?,
            "l2" => self.l2 = Some(parse_num(key, value)?),
            "data" => self.data = Some(PathBuf::from(value)),
            "labels" => self.labels = Some(PathBuf::from(value)),
            "limit" => self.limit = Some(parse_num(key, value)?),
            "optimizer" => {
                self.optimizer = Optimizer::parse(value)
                    .ok_or_else(|| Error::config(key, format!("unknown optimizer `{value}`")))?
            }
            "regime" => {
                self.regime = RegimeKind::parse(value)
                    .ok_or_else(|| Error::config(key, format!("unknown regime `{value}`")))?
            }
            "lr" => self.lr = parse_num(key, value)?,
            "c" => self.c = Some(parse_num(key, value)?),
            "gamma" => self.gamma = parse_num(key, value)?,
            "f_star" => self.f_star = parse_num(key, value)?,
            "shrink" => self.shrink = parse_num(key, value)?,
            "grow" => self.grow = parse_num(key, value)?,
            "b" => self.b = parse_num(key, value)?,
            "b_h" => self.b_h = parse_num(key, value)?,
            "epochs" => self.epochs = parse_num(key, value)?,
            "seed" => self.seed = parse_num(key, value)?,
            "beta" => self.beta = parse_num(key, value)?,
            "log_every" => self.log_every = parse_num(key, value)?,
            "average" => self.average = parse_num(key, value)?,
            _ => return Err(Error::config(key, "unknown key")),
        }
        Ok(())
    }

    /// Every field as `key=value` pairs, in a fixed order; parsing the
    /// output reproduces the config.
    pub fn to_pairs(&self) -> Vec<(String, String)> {
        let mut out = vec![
            ("model", self.model.name().to_string()),
            ("hidden", self.hidden.to_string()),
        ];
        if let Some(l2) = self.l2 {
            out.push(("l2", l2.to_string()));
        }
        if let Some(p) = &self.data {
            out.push(("data", p.display().to_string()));
        }
        if let Some(p) = &self.labels {
            out.push(("labels", p.display().to_string()));
        }
        if let Some(n) = self.limit {
            out.push(("limit", n.to_string()));
        }
        out.extend([
            ("optimizer", self.optimizer.name().to_string()),
            ("regime", self.regime.name().to_string()),
            ("lr", self.lr.to_string()),
        ]);
        if let Some(c) = self.c {
            out.push(("c", c.to_string()));
        }
        out.extend([
            ("gamma", self.gamma.to_string()),
            ("f_star", self.f_star.to_string()),
            ("shrink", self.shrink.to_string()),
            ("grow", self.grow.to_string()),
            ("b", self.b.to_string()),
            ("b_h", self.b_h.to_string()),
            ("epochs", self.epochs.to_string()),
            ("seed", self.seed.to_string()),
            ("beta", self.beta.to_string()),
            ("log_every", self.log_every.to_string()),
            ("average", self.average.to_string()),
        ]);
        out.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
    }

    pub fn to_text(&self) -> String {
        self.to_pairs()
            .into_iter()
            .map(|(k, v)| format!("{k}={v}\n"))
            .collect()
    }

    pub fn rule(&self) -> LrRule {
        match self.regime {
            RegimeKind::Adaptive => LrRule::Adaptive,
            RegimeKind::Constant => LrRule::Constant { lr: self.lr },
            RegimeKind::Diminishing => LrRule::Diminishing {
                c: self.c.unwrap_or(0.1),
            },
            RegimeKind::Bb => LrRule::Bb {
                gamma: self.gamma,
                initial: self.lr,
            },
            RegimeKind::Polyak => LrRule::Polyak {
                c: self.c.unwrap_or(1.0),
                f_star: self.f_star,
                initial: self.lr,
            },
            RegimeKind::Multiplicative => LrRule::Multiplicative {
                shrink: self.shrink,
                grow: self.grow,
                initial: self.lr,
            },
        }
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            optimizer: self.optimizer,
            rule: self.rule(),
            b: self.b,
            b_h: self.b_h,
            epochs: self.epochs,
            beta: self.beta,
            log_every: self.log_every,
            average: self.average,
        }
    }

    /// Checks everything that does not depend on the dataset.
    pub fn validate(&self) -> Result<()> {
        self.rule().validate()?;
        if self.b == 0 {
            return Err(Error::config("b", "must be at least 1"));
        }
        if self.rule().uses_lr_batch() && self.b_h == 0 {
            return Err(Error::config("b_h", "must be at least 1"));
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
        if self.model == ModelKind::Mlp && self.hidden == 0 {
            return Err(Error::config("hidden", "must be at least 1"));
        }
        if let Some(l2) = self.l2 {
            if !(l2 >= 0.0 && l2.is_finite()) {
                return Err(Error::config("l2", format!("must be >= 0, got {l2}")));
            }
        }
        if self.limit == Some(0) {
            return Err(Error::config("limit", "must be at least 1"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_pairs_and_comments() {
        let c = RunConfig::parse(
            "# a comment\nmodel = mlp\nregime=constant  # trailing\nlr=0.05\n\nb=64\naverage=true\n",
        )
        .unwrap();
        assert_eq!(c.model, ModelKind::Mlp);
        assert_eq!(c.rule(), LrRule::Constant { lr: 0.05 });
        assert_eq!(c.b, 64);
        assert!(c.average);
        assert_eq!(c.b_h, 100);
    }

    #[test]
    fn text_round_trip() {
        let mut c = RunConfig::default();
        c.set("data", "x/y.txt").unwrap();
        c.set("c", "0.3").unwrap();
        c.set("regime", "polyak").unwrap();
        c.set("l2", "0.001").unwrap();
        assert_eq!(RunConfig::parse(&c.to_text()).unwrap(), c);
    }

    #[test]
    fn errors_name_the_field() {
        match RunConfig::parse("regime=adamw") {
            Err(Error::InvalidConfig { field, reason }) => {
                assert_eq!(field, "regime");
                assert!(reason.contains("unknown regime"));
            }
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            RunConfig::parse("b=ten"),
            Err(Error::InvalidConfig { field, .. }) if field == "b"
        ));
        assert!(RunConfig::parse("nonsense=1").is_err());
        assert!(RunConfig::parse("just words").is_err());
    }

    #[test]
    fn validation() {
        let mut c = RunConfig::default();
        assert!(c.validate().is_ok());
        c.beta = 1.0;
        assert!(c.validate().is_err());
        c.beta = 0.5;
        c.b_h = 0;
        assert!(c.validate().is_err());
        c.regime = RegimeKind::Constant;
        assert!(c.validate().is_ok());
        c.lr = -1.0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn diminishing_and_polyak_defaults_differ() {
        let mut c = RunConfig {
            regime: RegimeKind::Diminishing,
            ..RunConfig::default()
        };
        assert_eq!(c.rule(), LrRule::Diminishing { c: 0.1 });
        c.regime = RegimeKind::Polyak;
        assert!(matches!(c.rule(), LrRule::Polyak { c, .. } if c == 1.0));
    }
}
