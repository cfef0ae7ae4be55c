//! Learning-rate rules.
//!
//! Each rule exists as a pure function of its inputs plus an [`LrRegime`]
//! wrapper that carries the state a training run needs (iteration counter,
//! previous rate, previous gradient) and applies the guard logic that keeps
//! every emitted rate finite and positive.

use crate::error::{Error, Result};
use crate::param::ParamVector;

/// Below this squared gradient norm the adaptive and Polyak rules are not applied.
pub const EPS_GRAD: f64 = 1e-12;
/// Below this curvature denominator the adaptive and BB rules are not applied.
pub const EPS_DENOM: f64 = 1e-12;

/// Rate used by the adaptive rule before any rate has been emitted.
pub fn adaptive_initial(b_h: usize) -> f64 {
    0.5 / (b_h as f64).sqrt()
}

/// Upper bound on the adaptive rate.
pub fn adaptive_cap(b_h: usize) -> f64 {
    10.0 / (b_h as f64).sqrt()
}

/// One emitted learning rate and how it was obtained.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LrStep {
    pub lr: f64,
    /// The rule's formula was not applicable and a fallback rate was used.
    pub guarded: bool,
    /// The formula's value exceeded the cap and was clipped.
    pub capped: bool,
}

impl LrStep {
    fn plain(lr: f64) -> Self {
        LrStep {
            lr,
            guarded: false,
            capped: false,
        }
    }

    fn fallback(lr: f64) -> Self {
        LrStep {
            lr,
            guarded: true,
            capped: false,
        }
    }
}

/// `alpha = (1/sqrt(b_H)) |g|^2 / <g_probe, g>` with `g = grad F_SH(x)` and
/// `g_probe = grad F_SH(x + g)`, capped at [`adaptive_cap`].
///
/// When `|g|^2 < EPS_GRAD` or the denominator is below `EPS_DENOM`, returns
/// `previous` (or [`adaptive_initial`] if there is none) flagged as guarded.
pub fn adaptive_lr(
    g: &ParamVector,
    g_probe: &ParamVector,
    b_h: usize,
    previous: Option<f64>,
) -> Result<LrStep> {
    if b_h == 0 {
        return Err(Error::config("b_h", "must be at least 1"));
    }
    g.check_dim(g_probe)?;
    let fallback = previous.unwrap_or_else(|| adaptive_initial(b_h));
    let g_sq = g.norm_sq();
    let denom = g_probe.dot(g);
    if !(g_sq >= EPS_GRAD && denom >= EPS_DENOM) {
        return Ok(LrStep::fallback(fallback));
    }
    let alpha = g_sq / denom / (b_h as f64).sqrt();
    if !alpha.is_finite() {
        return Ok(LrStep::fallback(fallback));
    }
    let cap = adaptive_cap(b_h);
    Ok(if alpha > cap {
        LrStep {
            lr: cap,
            guarded: false,
            capped: true,
        }
    } else {
        LrStep::plain(alpha)
    })
}

/// `c / (t + 1)`.
pub fn diminishing_lr(c: f64, t: u64) -> Result<f64> {
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::config("c", format!("must be positive, got {c}")));
    }
    Ok(c / (t as f64 + 1.0))
}

/// Barzilai-Borwein rate `(gamma/b_H) |s|^2 / <dg, s>` with `s = x_t - x_prev`
/// and `dg = g_t - g_prev` (both gradients on the same LR batch).
///
/// Returns `Ok(None)` when the denominator is below `EPS_DENOM`, and a
/// [`Error::Degenerate`] when the displacement is zero.
pub fn bb_lr(
    x_t: &ParamVector,
    x_prev: &ParamVector,
    g_t: &ParamVector,
    g_prev: &ParamVector,
    gamma: f64,
    b_h: usize,
) -> Result<Option<f64>> {
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(Error::config(
            "gamma",
            format!("must be positive, got {gamma}"),
        ));
    }
    if b_h == 0 {
        return Err(Error::config("b_h", "must be at least 1"));
    }
    x_t.check_dim(x_prev)?;
    x_t.check_dim(g_t)?;
    x_t.check_dim(g_prev)?;
    let s = x_t.sub(x_prev);
    let s_sq = s.norm_sq();
    if s_sq == 0.0 {
        return Err(Error::Degenerate(
            "zero displacement between iterates".into(),
        ));
    }
    let denom = g_t.sub(g_prev).dot(&s);
    if denom.is_nan() || denom <= EPS_DENOM {
        return Ok(None);
    }
    let lr = gamma / b_h as f64 * s_sq / denom;
    Ok(lr.is_finite().then_some(lr))
}

/// Stochastic Polyak rate `(f_i - f_star) / (c |g|^2)`, zero at or below `f_star`.
pub fn polyak_lr(f_i: f64, f_star: f64, grad_norm_sq: f64, c: f64) -> Result<f64> {
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::config("c", format!("must be positive, got {c}")));
    }
    let gap = f_i - f_star;
    if gap <= 0.0 {
        return Ok(0.0);
    }
    if grad_norm_sq <= EPS_GRAD {
        return Err(Error::Degenerate(format!(
            "gradient norm^2 {grad_norm_sq:e} with positive gap {gap:e}"
        )));
    }
    let lr = gap / (c * grad_norm_sq);
    if !lr.is_finite() {
        return Err(Error::Degenerate("polyak rate overflowed".into()));
    }
    Ok(lr)
}

/// `grow * alpha_prev` if `<g_t, g_prev> > 0`, else `shrink * alpha_prev`.
pub fn multiplicative_lr(
    alpha_prev: f64,
    g_t: &ParamVector,
    g_prev: &ParamVector,
    shrink: f64,
    grow: f64,
) -> Result<f64> {
    if !(alpha_prev > 0.0 && alpha_prev.is_finite()) {
        return Err(Error::config(
            "lr",
            format!("previous rate must be positive, got {alpha_prev}"),
        ));
    }
    g_t.check_dim(g_prev)?;
    Ok(if g_t.dot(g_prev) > 0.0 {
        grow * alpha_prev
    } else {
        shrink * alpha_prev
    })
}

/// Shrink factor of the multiplicative rule.
pub const MULTIPLICATIVE_SHRINK: f64 = 0.95;
/// Growth factor of the multiplicative rule.
pub const MULTIPLICATIVE_GROW: f64 = 1.01;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LrRule {
    Adaptive,
    Constant {
        lr: f64,
    },
    Diminishing {
        c: f64,
    },
    Bb {
        gamma: f64,
        initial: f64,
    },
    Polyak {
        c: f64,
        f_star: f64,
        initial: f64,
    },
    Multiplicative {
        shrink: f64,
        grow: f64,
        initial: f64,
    },
}

impl LrRule {
    pub fn name(&self) -> &'static str {
        match self {
            LrRule::Adaptive => "adaptive",
            LrRule::Constant { .. } => "constant",
            LrRule::Diminishing { .. } => "diminishing",
            LrRule::Bb { .. } => "bb",
            LrRule::Polyak { .. } => "polyak",
            LrRule::Multiplicative { .. } => "multiplicative",
        }
    }

    /// Whether the rule consumes the LR batch `S_H`.
    pub fn uses_lr_batch(&self) -> bool {
        matches!(self, LrRule::Adaptive | LrRule::Bb { .. })
    }

    pub fn validate(&self) -> Result<()> {
        fn positive(field: &str, v: f64) -> Result<()> {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::config(field, format!("must be positive, got {v}")))
            }
        }
        match *self {
            LrRule::Adaptive => Ok(()),
            LrRule::Constant { lr } => positive("lr", lr),
            LrRule::Diminishing { c } => positive("c", c),
            LrRule::Bb { gamma, initial } => {
                positive("gamma", gamma)?;
                positive("lr", initial)
            }
            LrRule::Polyak { c, f_star, initial } => {
                positive("c", c)?;
                positive("lr", initial)?;
                if f_star.is_finite() {
                    Ok(())
                } else {
                    Err(Error::config("f_star", "must be finite"))
                }
            }
            LrRule::Multiplicative {
                shrink,
                grow,
                initial,
            } => {
                if !(shrink > 0.0 && shrink < 1.0) {
                    return Err(Error::config(
                        "shrink",
                        format!("must lie in (0,1), got {shrink}"),
                    ));
                }
                if !(grow > 1.0 && grow.is_finite()) {
                    return Err(Error::config("grow", format!("must exceed 1, got {grow}")));
                }
                positive("lr", initial)
            }
        }
    }
}

/// What the training loop measured for the rule this iteration.
#[derive(Debug, Clone, Copy)]
pub enum LrSignal<'a> {
    /// Nothing beyond the iteration count.
    None,
    /// Gradients at `x` and at the probe point `x + g`, both on `S_H`.
    Probe {
        g: &'a ParamVector,
        g_probe: &'a ParamVector,
    },
    /// Current and previous iterates with gradients on one shared `S_H`.
    Secant {
        x: &'a ParamVector,
        x_prev: &'a ParamVector,
        g: &'a ParamVector,
        g_prev: &'a ParamVector,
    },
    /// Loss and gradient of the step batch `S`.
    Batch { loss: f64, grad: &'a ParamVector },
}

/// A rule plus the state it carries across one run.
#[derive(Debug, Clone)]
pub struct LrRegime {
    rule: LrRule,
    b_h: usize,
    t: u64,
    previous: Option<f64>,
    previous_grad: Option<ParamVector>,
    guarded: u64,
    capped: u64,
}

impl LrRegime {
    pub fn new(rule: LrRule, b_h: usize) -> Result<Self> {
        rule.validate()?;
        if rule.uses_lr_batch() && b_h == 0 {
            return Err(Error::config("b_h", "must be at least 1"));
        }
        Ok(LrRegime {
            rule,
            b_h,
            t: 0,
            previous: None,
            previous_grad: None,
            guarded: 0,
            capped: 0,
        })
    }

    pub fn rule(&self) -> LrRule {
        self.rule
    }

    /// Rates emitted so far.
    pub fn steps(&self) -> u64 {
        self.t
    }

    pub fn guarded_steps(&self) -> u64 {
        self.guarded
    }

    pub fn capped_steps(&self) -> u64 {
        self.capped
    }

    /// Emits the next rate. A signal that does not match the rule yields an
    /// invalid-config error.
    pub fn next_lr(&mut self, signal: LrSignal<'_>) -> Result<LrStep> {
        let step = match (self.rule, signal) {
            (LrRule::Adaptive, LrSignal::Probe { g, g_probe }) => {
                adaptive_lr(g, g_probe, self.b_h, self.previous)?
            }
            (LrRule::Constant { lr }, _) => LrStep::plain(lr),
            (LrRule::Diminishing { c }, _) => LrStep::plain(diminishing_lr(c, self.t)?),
            (LrRule::Bb { initial, .. }, LrSignal::None) => {
                LrStep::plain(self.previous.unwrap_or(initial))
            }
            (
                LrRule::Bb { gamma, initial },
                LrSignal::Secant {
                    x,
                    x_prev,
                    g,
                    g_prev,
                },
            ) => {
                let fallback = self.previous.unwrap_or(initial);
                match bb_lr(x, x_prev, g, g_prev, gamma, self.b_h) {
                    Ok(Some(lr)) => LrStep::plain(lr),
                    Ok(None) | Err(Error::Degenerate(_)) => LrStep::fallback(fallback),
                    Err(e) => return Err(e),
                }
            }
            (LrRule::Polyak { c, f_star, initial }, LrSignal::Batch { loss, grad }) => {
                let fallback = self.previous.unwrap_or(initial);
                match polyak_lr(loss, f_star, grad.norm_sq(), c) {
                    Ok(lr) if lr > 0.0 => LrStep::plain(lr),
                    Ok(_) | Err(Error::Degenerate(_)) => LrStep::fallback(fallback),
                    Err(e) => return Err(e),
                }
            }
            (
                LrRule::Multiplicative {
                    shrink,
                    grow,
                    initial,
                },
                LrSignal::Batch { grad, .. },
            ) => {
                let step = match (&self.previous_grad, self.previous) {
                    (Some(g_prev), Some(prev)) => {
                        LrStep::plain(multiplicative_lr(prev, grad, g_prev, shrink, grow)?)
                    }
                    _ => LrStep::plain(initial),
                };
                self.previous_grad = Some(grad.clone());
                step
            }
            (rule, _) => {
                return Err(Error::config(
                    "regime",
                    format!("{} rule was given the wrong signal", rule.name()),
                ))
            }
        };
        if !(step.lr > 0.0 && step.lr.is_finite()) {
            return Err(Error::Divergence {
                iteration: self.t + 1,
                reason: format!("{} rule produced rate {}", self.rule.name(), step.lr),
            });
        }
        self.t += 1;
        self.previous = Some(step.lr);
        self.guarded += u64::from(step.guarded);
        self.capped += u64::from(step.capped);
        Ok(step)
    }
}
