//! Structure loss (boundary-weighted BCE + weighted IoU) over the four
//! deep-supervision maps, plus a class-rebalanced BCE on the edge map.
//!
//! Every loss returns its value together with the gradient with respect to
//! its logits, so the training loop can attach them to the tape as fused
//! scalar nodes. Sums run in ascending pixel order.

use ndarray::{Array2, ArrayView2, Zip};
use serde::{Deserialize, Serialize};

use crate::autograd::sigmoid;
use crate::error::{shape_err, Error, Result};

/// Boundary weighting constants: `w = 1 + factor · |boxmean_window(gt) − gt|`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundaryWeighting {
    pub factor: f64,
    pub window: usize,
}

impl Default for BoundaryWeighting {
    fn default() -> Self {
        BoundaryWeighting {
            factor: 5.0,
            window: 31,
        }
    }
}

fn check_binary(gt: ArrayView2<f64>, what: &str) -> Result<()> {
    if gt.iter().any(|&v| v != 0.0 && v != 1.0) {
        return Err(Error::Data(format!("{what} must be binary (0/1)")));
    }
    Ok(())
}

fn check_same(a: (usize, usize), b: (usize, usize), what: &str) -> Result<()> {
    if a != b {
        return Err(shape_err!("{what}: {a:?} vs {b:?}"));
    }
    Ok(())
}

/// Mean over a `window × window` box with replicate padding, via a summed-area table.
pub fn box_mean_replicate(x: ArrayView2<f64>, window: usize) -> Array2<f64> {
    let (h, w) = x.dim();
    let r = (window / 2) as isize;
    let ph = h + 2 * r as usize;
    let pw = w + 2 * r as usize;
    let clampi = |v: isize, n: usize| v.clamp(0, n as isize - 1) as usize;
    // sat[i][j] = sum of padded[..i, ..j]
    let mut sat = Array2::<f64>::zeros((ph + 1, pw + 1));
    for i in 0..ph {
        let mut row = 0.0;
        let si = clampi(i as isize - r, h);
        for j in 0..pw {
            row += x[[si, clampi(j as isize - r, w)]];
            sat[[i + 1, j + 1]] = sat[[i, j + 1]] + row;
        }
    }
    let k = window;
    let area = (k * k) as f64;
    Array2::from_shape_fn((h, w), |(i, j)| {
        (sat[[i + k, j + k]] - sat[[i, j + k]] - sat[[i + k, j]] + sat[[i, j]]) / area
    })
}

/// Pixel weights in `[1, 1 + factor]`, larger near mask boundaries.
pub fn boundary_weights(gt: ArrayView2<f64>, cfg: BoundaryWeighting) -> Array2<f64> {
    let pooled = box_mean_replicate(gt, cfg.window);
    let mut w = pooled;
    w.zip_mut_with(&gt, |p, &g| *p = 1.0 + cfg.factor * (*p - g).abs());
    w
}

/// `log(1 + exp(x))` without overflow.
fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

/// `Σ w·BCE(σ(x), y) / Σ w` and its gradient with respect to the logits.
pub fn weighted_bce_with_grad(
    logits: ArrayView2<f64>,
    gt: ArrayView2<f64>,
    w: ArrayView2<f64>,
) -> Result<(f64, Array2<f64>)> {
    check_same(logits.dim(), gt.dim(), "weighted_bce logits/gt")?;
    check_same(logits.dim(), w.dim(), "weighted_bce logits/weights")?;
    check_binary(gt, "ground truth")?;
    let wsum: f64 = w.iter().sum();
    let mut total = 0.0;
    let mut grad = Array2::<f64>::zeros(logits.dim());
    Zip::from(&mut grad).and(logits).and(gt).and(w).for_each(|g, &x, &y, &wv| {
        // BCE(σ(x), y) = softplus(x) − x·y
        total += wv * (softplus(x) - x * y);
        *g = wv * (sigmoid(x) - y) / wsum;
    });
    Ok((total / wsum, grad))
}

pub fn weighted_bce(logits: ArrayView2<f64>, gt: ArrayView2<f64>, w: ArrayView2<f64>) -> Result<f64> {
    weighted_bce_with_grad(logits, gt, w).map(|(v, _)| v)
}

/// `1 − (inter + 1) / (union + 1)` with `inter = Σ w·p·y`, `union = Σ w·(p + y) − inter`.
pub fn weighted_iou_with_grad(
    logits: ArrayView2<f64>,
    gt: ArrayView2<f64>,
    w: ArrayView2<f64>,
) -> Result<(f64, Array2<f64>)> {
    check_same(logits.dim(), gt.dim(), "weighted_iou logits/gt")?;
    check_same(logits.dim(), w.dim(), "weighted_iou logits/weights")?;
    check_binary(gt, "ground truth")?;
    let p = logits.mapv(sigmoid);
    let mut inter = 0.0;
    let mut sum_pg = 0.0;
    Zip::from(&p).and(gt).and(w).for_each(|&pv, &y, &wv| {
        inter += wv * pv * y;
        sum_pg += wv * (pv + y);
    });
    let union = sum_pg - inter;
    let num = inter + 1.0;
    let den = union + 1.0;
    let loss = 1.0 - num / den;
    let mut grad = Array2::<f64>::zeros(logits.dim());
    Zip::from(&mut grad).and(&p).and(gt).and(w).for_each(|g, &pv, &y, &wv| {
        let d_inter = wv * y;
        let d_union = wv * (1.0 - y);
        let d_loss_dp = -(d_inter * den - num * d_union) / (den * den);
        *g = d_loss_dp * pv * (1.0 - pv);
    });
    Ok((loss, grad))
}

pub fn weighted_iou(logits: ArrayView2<f64>, gt: ArrayView2<f64>, w: ArrayView2<f64>) -> Result<f64> {
    weighted_iou_with_grad(logits, gt, w).map(|(v, _)| v)
}

/// Mean BCE on the edge map with positives up-weighted by `max(#neg / #pos, 1)`.
pub fn edge_bce_with_grad(logits: ArrayView2<f64>, edge_gt: ArrayView2<f64>) -> Result<(f64, Array2<f64>)> {
    check_same(logits.dim(), edge_gt.dim(), "edge_bce logits/gt")?;
    check_binary(edge_gt, "edge ground truth")?;
    let n = logits.len() as f64;
    let pos = edge_gt.iter().filter(|&&v| v == 1.0).count() as f64;
    let pos_weight = if pos > 0.0 { ((n - pos) / pos).max(1.0) } else { 1.0 };
    let mut total = 0.0;
    let mut grad = Array2::<f64>::zeros(logits.dim());
    Zip::from(&mut grad).and(logits).and(edge_gt).for_each(|g, &x, &y| {
        // −log σ(x) = softplus(−x);  −log(1 − σ(x)) = softplus(x)
        total += pos_weight * y * softplus(-x) + (1.0 - y) * softplus(x);
        let s = sigmoid(x);
        *g = (pos_weight * y * (s - 1.0) + (1.0 - y) * s) / n;
    });
    Ok((total / n, grad))
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LossBreakdown {
    pub wbce: [f64; 4],
    pub wiou: [f64; 4],
    pub edge_bce: f64,
    pub total: f64,
}

impl LossBreakdown {
    fn finish(mut self) -> Self {
        self.total = self.wbce.iter().sum::<f64>() + self.wiou.iter().sum::<f64>() + self.edge_bce;
        self
    }

    /// Elementwise mean of several breakdowns.
    pub fn mean(items: &[LossBreakdown]) -> LossBreakdown {
        let n = items.len().max(1) as f64;
        let mut out = LossBreakdown::default();
        for b in items {
            for i in 0..4 {
                out.wbce[i] += b.wbce[i] / n;
                out.wiou[i] += b.wiou[i] / n;
            }
            out.edge_bce += b.edge_bce / n;
        }
        out.finish()
    }
}

/// Gradients of [`total_loss`] with respect to each logit map.
#[derive(Clone, Debug)]
pub struct LossGrads {
    pub masks: Vec<Array2<f64>>,
    pub edge: Option<Array2<f64>>,
}

/// `Σ_i [wbce(P_i) + wiou(P_i)] + edge_bce(E)` for one sample.
///
/// `edge_logits = None` (edge branch ablated) drops the edge term.
pub fn total_loss(
    masks: &[ArrayView2<f64>],
    edge_logits: Option<ArrayView2<f64>>,
    gt: ArrayView2<f64>,
    edge_gt: ArrayView2<f64>,
    weighting: BoundaryWeighting,
) -> Result<(LossBreakdown, LossGrads)> {
    if masks.len() != 4 {
        return Err(shape_err!("expected 4 supervised maps, got {}", masks.len()));
    }
    check_binary(gt, "ground truth")?;
    let w = boundary_weights(gt, weighting);
    let mut out = LossBreakdown::default();
    let mut grads = Vec::with_capacity(4);
    for (i, p) in masks.iter().enumerate() {
        let (b, gb) = weighted_bce_with_grad(*p, gt, w.view())?;
        let (u, gu) = weighted_iou_with_grad(*p, gt, w.view())?;
        out.wbce[i] = b;
        out.wiou[i] = u;
        grads.push(gb + gu);
    }
    let edge = match edge_logits {
        Some(e) => {
            let (v, g) = edge_bce_with_grad(e, edge_gt)?;
            out.edge_bce = v;
            Some(g)
        }
        None => None,
    };
    Ok((out.finish(), LossGrads { masks: grads, edge }))
}
