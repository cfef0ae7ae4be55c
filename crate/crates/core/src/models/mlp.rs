//! One-hidden-layer perceptron: `h = sigmoid(W1 x + b1)`, `p = softmax(W2 h + b2)`,
//! cross-entropy loss, exact backpropagation.
//!
//! Parameter layout (flat, in this order):
//!
//! | block | shape              | storage                           |
//! |-------|--------------------|-----------------------------------|
//! | `W1`  | hidden x d_in      | input-major: `W1[h, j]` at `j * hidden + h` |
//! | `b1`  | hidden             |                                   |
//! | `W2`  | classes x hidden   | row-major: `W2[c, h]` at `c * hidden + h`   |
//! | `b2`  | classes            |                                   |
//!
//! `W1` is stored input-major so a sparse input touches contiguous columns.

use super::{add_l2, check_batch, check_shapes, Evaluation, LossGrad, ModelKind, ModelSpec};
use crate::data::{Dataset, SparseExample};
use crate::error::{Error, Result};
use crate::param::ParamVector;
use crate::rng::IndexBatch;

struct Layout {
    hidden: usize,
    classes: usize,
    b1: usize,
    w2: usize,
    b2: usize,
}

impl Layout {
    fn of(spec: &ModelSpec) -> Self {
        let b1 = spec.hidden * spec.d_in;
        let w2 = b1 + spec.hidden;
        let b2 = w2 + spec.classes * spec.hidden;
        Layout {
            hidden: spec.hidden,
            classes: spec.classes,
            b1,
            w2,
            b2,
        }
    }
}

struct Scratch {
    hidden: Vec<f64>,
    probs: Vec<f64>,
    delta: Vec<f64>,
}

impl Scratch {
    fn new(layout: &Layout) -> Self {
        Scratch {
            hidden: vec![0.0; layout.hidden],
            probs: vec![0.0; layout.classes],
            delta: vec![0.0; layout.hidden],
        }
    }
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Fills `scratch.hidden` and `scratch.probs`; returns `ln sum_c exp(logit_c)`.
fn forward(lay: &Layout, theta: &[f64], ex: &SparseExample, scratch: &mut Scratch) -> f64 {
    let h = lay.hidden;
    let hid = &mut scratch.hidden;
    hid.copy_from_slice(&theta[lay.b1..lay.b1 + h]);
    for &(j, v) in &ex.features {
        let col = &theta[j * h..(j + 1) * h];
        for (z, w) in hid.iter_mut().zip(col) {
            *z += v * w;
        }
    }
    for z in hid.iter_mut() {
        *z = sigmoid(*z);
    }

    let probs = &mut scratch.probs;
    for (c, logit) in probs.iter_mut().enumerate() {
        let row = &theta[lay.w2 + c * h..lay.w2 + (c + 1) * h];
        *logit = theta[lay.b2 + c] + row.iter().zip(hid.iter()).map(|(w, a)| w * a).sum::<f64>();
    }
    let max = probs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    for p in probs.iter_mut() {
        *p = (*p - max).exp();
        total += *p;
    }
    for p in probs.iter_mut() {
        *p /= total;
    }
    max + total.ln()
}

fn class_of(spec: &ModelSpec, label: f64) -> Result<usize> {
    if label >= 0.0 && label.fract() == 0.0 && (label as usize) < spec.classes {
        Ok(label as usize)
    } else {
        Err(Error::TaskMismatch(format!(
            "label {label} is not a class in 0..{}",
            spec.classes
        )))
    }
}

/// Mean cross-entropy over the batch (plus optional L2) and its gradient.
pub fn mlp_loss_grad(
    spec: &ModelSpec,
    theta: &ParamVector,
    data: &Dataset,
    batch: &IndexBatch,
) -> Result<LossGrad> {
    if spec.kind != ModelKind::Mlp {
        return Err(Error::TaskMismatch(format!(
            "expected an mlp spec, got {}",
            spec.kind.name()
        )));
    }
    check_shapes(spec, theta, data)?;
    check_batch(data, batch)?;
    let lay = Layout::of(spec);
    let h = lay.hidden;
    let mut scratch = Scratch::new(&lay);
    let mut grad = ParamVector::zeros(theta.dim());
    let mut loss = 0.0;

    for &i in batch.indices() {
        let ex = data.example(i);
        let y = class_of(spec, ex.label)?;
        let log_norm = forward(&lay, theta, ex, &mut scratch);
        // -ln p[y] computed from the log-normalizer to avoid ln(0).
        let row = &theta[lay.w2 + y * h..lay.w2 + (y + 1) * h];
        let logit_y = theta[lay.b2 + y]
            + row
                .iter()
                .zip(&scratch.hidden)
                .map(|(w, a)| w * a)
                .sum::<f64>();
        loss += (log_norm - logit_y).max(0.0);

        // Output layer: dL/dlogits = p - onehot(y).
        scratch.probs[y] -= 1.0;
        scratch.delta.iter_mut().for_each(|d| *d = 0.0);
        for c in 0..lay.classes {
            let dc = scratch.probs[c];
            grad[lay.b2 + c] += dc;
            let w_row = &theta[lay.w2 + c * h..lay.w2 + (c + 1) * h];
            let g_row = &mut grad[lay.w2 + c * h..lay.w2 + (c + 1) * h];
            for ((g, a), (w, d)) in g_row
                .iter_mut()
                .zip(&scratch.hidden)
                .zip(w_row.iter().zip(scratch.delta.iter_mut()))
            {
                *g += dc * a;
                *d += dc * w;
            }
        }
        // Hidden layer: through the sigmoid.
        for (d, a) in scratch.delta.iter_mut().zip(&scratch.hidden) {
            *d *= a * (1.0 - a);
        }
        for (g, d) in grad[lay.b1..lay.b1 + h].iter_mut().zip(&scratch.delta) {
            *g += d;
        }
        for &(j, v) in &ex.features {
            for (g, d) in grad[j * h..(j + 1) * h].iter_mut().zip(&scratch.delta) {
                *g += v * d;
            }
        }
    }

    let inv = 1.0 / batch.len() as f64;
    grad.scale(inv);
    let mut out = LossGrad {
        loss: loss * inv,
        grad,
    };
    add_l2(spec.l2, theta, &mut out);
    Ok(out)
}

pub(super) fn evaluate(
    spec: &ModelSpec,
    theta: &ParamVector,
    data: &Dataset,
) -> Result<Evaluation> {
    let lay = Layout::of(spec);
    let mut scratch = Scratch::new(&lay);
    let mut loss = 0.0;
    let mut correct = 0usize;
    for ex in data.examples() {
        let y = class_of(spec, ex.label)?;
        let log_norm = forward(&lay, theta, ex, &mut scratch);
        let p = &scratch.probs;
        let mut best = 0;
        for c in 1..p.len() {
            if p[c] > p[best] {
                best = c;
            }
        }
        if best == y {
            correct += 1;
        }
        let row = &theta[lay.w2 + y * lay.hidden..lay.w2 + (y + 1) * lay.hidden];
        let logit_y = theta[lay.b2 + y]
            + row
                .iter()
                .zip(&scratch.hidden)
                .map(|(w, a)| w * a)
                .sum::<f64>();
        loss += (log_norm - logit_y).max(0.0);
    }
    let m = data.len().max(1) as f64;
    Ok(Evaluation {
        loss: loss / m + 0.5 * spec.l2 * theta.norm_sq(),
        accuracy: Some(correct as f64 / m),
    })
}
