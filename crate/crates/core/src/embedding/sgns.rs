//! Negative-sampling surrogate of the joint objective.
//!
//! Each training step touches one *tuple*: a centre vector `v`, one positive
//! target `u⁺` and a handful of sampled negatives `u⁻`. The local part uses
//! word output vectors as targets, the global part uses document vectors and
//! is scaled by λ. Both share the same sampled loss
//!
//! ```text
//! ℓ(v, u⁺, u⁻) = −log σ(v·u⁺) − Σ log σ(−v·u⁻)
//! ```

pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Sampled loss of one tuple.
pub fn sampled_loss(center: &[f64], positive: &[f64], negatives: &[&[f64]]) -> f64 {
    let mut loss = -sigmoid(dot(center, positive)).ln();
    for n in negatives {
        loss -= sigmoid(-dot(center, n)).ln();
    }
    loss
}

/// Local-context part of one tuple: centre word predicting a context word.
pub fn local_loss(center: &[f64], context: &[f64], negatives: &[&[f64]]) -> f64 {
    sampled_loss(center, context, negatives)
}

/// Global-context part of one tuple: centre word predicting its document, scaled by λ.
pub fn global_loss(center: &[f64], doc: &[f64], negative_docs: &[&[f64]], lambda: f64) -> f64 {
    lambda * sampled_loss(center, doc, negative_docs)
}

#[derive(Clone, Debug, PartialEq)]
pub struct TupleGrad {
    pub center: Vec<f64>,
    pub positive: Vec<f64>,
    pub negatives: Vec<Vec<f64>>,
}

/// Analytic gradient of `scale · sampled_loss` with respect to every vector in the tuple.
pub fn sampled_grad(
    center: &[f64],
    positive: &[f64],
    negatives: &[&[f64]],
    scale: f64,
) -> TupleGrad {
    let g = scale * (sigmoid(dot(center, positive)) - 1.0);
    let mut dc: Vec<f64> = positive.iter().map(|u| g * u).collect();
    let dp: Vec<f64> = center.iter().map(|v| g * v).collect();
    let mut dn = Vec::with_capacity(negatives.len());
    for n in negatives {
        let g = scale * sigmoid(dot(center, n));
        for (d, u) in dc.iter_mut().zip(n.iter()) {
            *d += g * u;
        }
        dn.push(center.iter().map(|v| g * v).collect());
    }
    TupleGrad {
        center: dc,
        positive: dp,
        negatives: dn,
    }
}

/// In-place SGD on one tuple whose targets live in the row-major `targets`
/// matrix. Target rows are updated immediately; the centre gradient is added
/// into `center_grad` so the caller can apply it after all tuples for the
/// position have been processed.
///
/// The arithmetic is the same as [`sampled_grad`] followed by `x -= lr · g`.
pub(crate) fn sgd_tuple(
    center: &[f64],
    center_grad: &mut [f64],
    targets: &mut [f64],
    positive: usize,
    negatives: &[usize],
    scale: f64,
    lr: f64,
) {
    let dim = center.len();
    let mut step = |row: usize, label: f64| {
        let u = &mut targets[row * dim..(row + 1) * dim];
        let g = scale * (sigmoid(dot(center, u)) - label);
        for ((cg, uu), v) in center_grad.iter_mut().zip(u.iter_mut()).zip(center) {
            *cg += g * *uu;
            *uu -= lr * g * v;
        }
    };
    step(positive, 1.0);
    for &n in negatives {
        step(n, 0.0);
    }
}
