//! Camouflaged-object evaluation: S-measure, weighted F-measure, MAE,
//! E-measure and F-measure curves over 256 thresholds.
//!
//! Conventions pinned here:
//! - thresholds are `k / 255` for `k = 0..=255`, a pixel is foreground when `pred >= t`;
//! - F-measure uses `β² = 0.3`, weighted F-measure `β² = 1` with a 7×7 Gaussian (σ = 5);
//! - the adaptive threshold is `min(2 · mean(pred), 1)`;
//! - S-measure uses `α = 0.5`;
//! - E-measure scores are means over pixels, so a perfect map scores exactly 1;
//! - on an empty ground truth, F and weighted F are 1 when nothing is predicted and 0
//!   otherwise; S is `1 − mean(pred)`; E is the fraction of background-predicted pixels.
//!
//! Where several nearest foreground pixels are equidistant (weighted F), the
//! one first in raster order is used.

use std::path::{Path, PathBuf};

use ndarray::{s, Array2, ArrayView2};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{shape_err, Error, Result};

pub const NUM_THRESHOLDS: usize = 256;
pub const F_BETA_SQ: f64 = 0.3;
pub const WF_BETA_SQ: f64 = 1.0;
pub const S_ALPHA: f64 = 0.5;
const EPS: f64 = f64::EPSILON;

/// One row of the evaluation table, fields in column order.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub s_alpha: f64,
    pub f_w_beta: f64,
    pub mae: f64,
    pub e_adp: f64,
    pub e_mean: f64,
    pub e_max: f64,
    pub f_adp: f64,
    pub f_mean: f64,
    pub f_max: f64,
}

/// Column headers with their better-direction arrows.
pub const COLUMNS: [&str; 9] = [
    "$S_\\alpha$ ↑",
    "$F^{w}_\\beta$ ↑",
    "$M$ ↓",
    "$E^{adp}_\\phi$ ↑",
    "$E^{mean}_\\phi$ ↑",
    "$E^{max}_\\phi$ ↑",
    "$F^{adp}_\\beta$ ↑",
    "$F^{mean}_\\beta$ ↑",
    "$F^{max}_\\beta$ ↑",
];

impl MetricReport {
    pub fn values(&self) -> [f64; 9] {
        [
            self.s_alpha,
            self.f_w_beta,
            self.mae,
            self.e_adp,
            self.e_mean,
            self.e_max,
            self.f_adp,
            self.f_mean,
            self.f_max,
        ]
    }

    fn from_values(v: [f64; 9]) -> Self {
        MetricReport {
            s_alpha: v[0],
            f_w_beta: v[1],
            mae: v[2],
            e_adp: v[3],
            e_mean: v[4],
            e_max: v[5],
            f_adp: v[6],
            f_mean: v[7],
            f_max: v[8],
        }
    }

    /// Uniform mean, accumulated in input order.
    pub fn mean(reports: &[MetricReport]) -> MetricReport {
        let mut acc = [0.0; 9];
        for r in reports {
            for (a, v) in acc.iter_mut().zip(r.values()) {
                *a += v;
            }
        }
        let n = reports.len().max(1) as f64;
        MetricReport::from_values(acc.map(|a| a / n))
    }
}

/// Markdown table with one row per `(label, report)`; `label_header` names the first column.
pub fn markdown_table(label_header: &str, rows: &[(String, MetricReport)]) -> String {
    let mut out = format!("| {label_header} | {} |\n", COLUMNS.join(" | "));
    out.push_str(&format!("|---|{}\n", "---:|".repeat(COLUMNS.len())));
    for (label, r) in rows {
        let cells: Vec<String> = r.values().iter().map(|v| format!("{v:.4}")).collect();
        out.push_str(&format!("| {label} | {} |\n", cells.join(" | ")));
    }
    out
}

/// A threshold sweep and its summary statistics.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Curve {
    pub values: Vec<f64>,
    pub adaptive: f64,
    pub mean: f64,
    pub max: f64,
}

impl Curve {
    fn from_values(values: Vec<f64>, adaptive: f64) -> Self {
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Curve {
            values,
            adaptive,
            mean,
            max,
        }
    }
}

fn check_inputs(pred: ArrayView2<f64>, gt: ArrayView2<u8>) -> Result<()> {
    if pred.dim() != gt.dim() {
        return Err(shape_err!("prediction {:?} vs ground truth {:?}", pred.dim(), gt.dim()));
    }
    if pred.is_empty() {
        return Err(shape_err!("empty prediction"));
    }
    if let Some(v) = pred.iter().find(|v| !(0.0..=1.0).contains(*v)) {
        return Err(Error::Data(format!("prediction value {v} outside [0, 1]")));
    }
    if gt.iter().any(|&g| g > 1) {
        return Err(Error::Data("ground truth must be binary (0/1)".into()));
    }
    Ok(())
}

/// Min-max rescales `pred` only when its range leaves `[0, 1]`.
pub fn normalize_prediction(pred: ArrayView2<f64>) -> Array2<f64> {
    let lo = pred.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = pred.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if lo >= 0.0 && hi <= 1.0 {
        return pred.to_owned();
    }
    if hi - lo <= 0.0 {
        return Array2::from_elem(pred.dim(), lo.clamp(0.0, 1.0));
    }
    pred.mapv(|v| (v - lo) / (hi - lo))
}

pub fn mae(pred: ArrayView2<f64>, gt: ArrayView2<u8>) -> Result<f64> {
    check_inputs(pred, gt)?;
    let sum: f64 = pred.iter().zip(gt.iter()).map(|(&p, &g)| (p - g as f64).abs()).sum();
    Ok(sum / pred.len() as f64)
}

pub fn threshold(k: usize) -> f64 {
    k as f64 / 255.0
}

pub fn adaptive_threshold(pred: ArrayView2<f64>) -> f64 {
    (2.0 * pred.mean().unwrap_or(0.0)).min(1.0)
}

/// Largest `k` with `k / 255 <= p`.
fn top_bin(p: f64) -> usize {
    let mut k = ((p * 255.0).floor().max(0.0) as usize).min(255);
    while k < 255 && threshold(k + 1) <= p {
        k += 1;
    }
    while k > 0 && threshold(k) > p {
        k -= 1;
    }
    k
}

/// Per-threshold counts of predicted positives and true positives.
#[derive(Clone, Debug)]
pub struct SweepCounts {
    pub predicted: Vec<u64>,
    pub true_pos: Vec<u64>,
    pub gt_pos: u64,
    pub total: u64,
}

pub fn sweep_counts(pred: ArrayView2<f64>, gt: ArrayView2<u8>) -> SweepCounts {
    let mut hist_all = [0u64; NUM_THRESHOLDS];
    let mut hist_fg = [0u64; NUM_THRESHOLDS];
    let mut gt_pos = 0;
    for (&p, &g) in pred.iter().zip(gt.iter()) {
        let k = top_bin(p);
        hist_all[k] += 1;
        if g == 1 {
            hist_fg[k] += 1;
            gt_pos += 1;
        }
    }
    // Pixels in bin k are positive for thresholds 0..=k; accumulate from the top.
    let mut predicted = vec![0u64; NUM_THRESHOLDS];
    let mut true_pos = vec![0u64; NUM_THRESHOLDS];
    let (mut a, mut f) = (0, 0);
    for k in (0..NUM_THRESHOLDS).rev() {
        a += hist_all[k];
        f += hist_fg[k];
        predicted[k] = a;
        true_pos[k] = f;
    }
    SweepCounts {
        predicted,
        true_pos,
        gt_pos,
        total: pred.len() as u64,
    }
}

fn f_from_counts(tp: u64, predicted: u64, gt_pos: u64) -> f64 {
    if gt_pos == 0 {
        return if predicted == 0 { 1.0 } else { 0.0 };
    }
    if predicted == 0 || tp == 0 {
        return 0.0;
    }
    let precision = tp as f64 / predicted as f64;
    let recall = tp as f64 / gt_pos as f64;
    (1.0 + F_BETA_SQ) * precision * recall / (F_BETA_SQ * precision + recall)
}

fn binary_counts(pred: ArrayView2<f64>, gt: ArrayView2<u8>, t: f64) -> (u64, u64, u64, u64) {
    let mut tp = 0;
    let mut predicted = 0;
    let mut gt_pos = 0;
    for (&p, &g) in pred.iter().zip(gt.iter()) {
        let fm = p >= t;
        predicted += fm as u64;
        gt_pos += (g == 1) as u64;
        tp += (fm && g == 1) as u64;
    }
    (tp, predicted, gt_pos, pred.len() as u64)
}

pub fn f_measure_curve(pred: ArrayView2<f64>, gt: ArrayView2<u8>) -> Result<Curve> {
    check_inputs(pred, gt)?;
    let c = sweep_counts(pred, gt);
    let values = (0..NUM_THRESHOLDS)
        .map(|k| f_from_counts(c.true_pos[k], c.predicted[k], c.gt_pos))
        .collect();
    let (tp, pp, g, _) = binary_counts(pred, gt, adaptive_threshold(pred));
    Ok(Curve::from_values(values, f_from_counts(tp, pp, g)))
}

/// Enhanced alignment of a binary map given its confusion counts.
fn e_from_counts(tp: u64, predicted: u64, gt_pos: u64, total: u64) -> f64 {
    let n = total as f64;
    if gt_pos == 0 {
        return (total - predicted) as f64 / n;
    }
    if gt_pos == total {
        return predicted as f64 / n;
    }
    let mean_fm = predicted as f64 / n;
    let mean_gt = gt_pos as f64 / n;
    let cells = [
        (1.0, 1.0, tp),
        (1.0, 0.0, predicted - tp),
        (0.0, 1.0, gt_pos - tp),
        (0.0, 0.0, total + tp - predicted - gt_pos),
    ];
    let mut sum = 0.0;
    for (fm, g, count) in cells {
        if count == 0 {
            continue;
        }
        let d_fm = fm - mean_fm;
        let d_gt = g - mean_gt;
        let align = 2.0 * d_gt * d_fm / (d_gt * d_gt + d_fm * d_fm + EPS);
        sum += count as f64 * (align + 1.0).powi(2) / 4.0;
    }
    sum / n
}

pub fn e_measure_curve(pred: ArrayView2<f64>, gt: ArrayView2<u8>) -> Result<Curve> {
    check_inputs(pred, gt)?;
    let c = sweep_counts(pred, gt);
    let values = (0..NUM_THRESHOLDS)
        .map(|k| e_from_counts(c.true_pos[k], c.predicted[k], c.gt_pos, c.total))
        .collect();
    let (tp, pp, g, n) = binary_counts(pred, gt, adaptive_threshold(pred));
    Ok(Curve::from_values(values, e_from_counts(tp, pp, g, n)))
}

/// Round half to even, matching the reference toolchains.
fn round_even(v: f64) -> f64 {
    v.round_ties_even()
}

fn object_score(values: &[f64]) -> f64 {
    let n = values.len();
    if n == 0 {
        return 0.0;
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let sd = if n > 1 {
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
    } else {
        0.0
    };
    2.0 * mean / (mean * mean + 1.0 + sd + EPS)
}

fn s_object(pred: ArrayView2<f64>, gt: ArrayView2<u8>, gt_mean: f64) -> f64 {
    let fg: Vec<f64> = pred.iter().zip(gt.iter()).filter(|(_, &g)| g == 1).map(|(&p, _)| p).collect();
    let bg: Vec<f64> = pred.iter().zip(gt.iter()).filter(|(_, &g)| g == 0).map(|(&p, _)| 1.0 - p).collect();
    gt_mean * object_score(&fg) + (1.0 - gt_mean) * object_score(&bg)
}

/// 1-based centroid `(x, y)` of the foreground.
fn centroid(gt: ArrayView2<u8>) -> (usize, usize) {
    let (h, w) = gt.dim();
    let mut sy = 0.0;
    let mut sx = 0.0;
    let mut count = 0.0;
    for ((i, j), &g) in gt.indexed_iter() {
        if g == 1 {
            sy += i as f64;
            sx += j as f64;
            count += 1.0;
        }
    }
    if count == 0.0 {
        return (round_even(w as f64 / 2.0) as usize, round_even(h as f64 / 2.0) as usize);
    }
    (round_even(sx / count) as usize + 1, round_even(sy / count) as usize + 1)
}

fn ssim_region(pred: ArrayView2<f64>, gt: ArrayView2<u8>) -> f64 {
    let n = pred.len() as f64;
    let x = pred.iter().sum::<f64>() / n;
    let y = gt.iter().map(|&g| g as f64).sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    let mut sxy = 0.0;
    for (&p, &g) in pred.iter().zip(gt.iter()) {
        let (dx, dy) = (p - x, g as f64 - y);
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    let denom = n - 1.0 + EPS;
    let (sxx, syy, sxy) = (sxx / denom, syy / denom, sxy / denom);
    let alpha = 4.0 * x * y * sxy;
    let beta = (x * x + y * y) * (sxx + syy);
    if alpha != 0.0 {
        alpha / (beta + EPS)
    } else if beta == 0.0 {
        1.0
    } else {
        0.0
    }
}

fn s_region(pred: ArrayView2<f64>, gt: ArrayView2<u8>) -> f64 {
    let (h, w) = gt.dim();
    let (cx, cy) = centroid(gt);
    let area = (h * w) as f64;
    let quads = [
        (0..cy, 0..cx),
        (0..cy, cx..w),
        (cy..h, 0..cx),
        (cy..h, cx..w),
    ];
    let mut score = 0.0;
    for (rows, cols) in quads {
        let weight = (rows.len() * cols.len()) as f64 / area;
        if weight == 0.0 {
            continue;
        }
        let sl = s![rows.start..rows.end, cols.start..cols.end];
        score += weight * ssim_region(pred.slice(sl), gt.slice(sl));
    }
    score
}

pub fn s_measure(pred: ArrayView2<f64>, gt: ArrayView2<u8>) -> Result<f64> {
    check_inputs(pred, gt)?;
    let y = gt.iter().map(|&g| g as f64).sum::<f64>() / gt.len() as f64;
    let pm = pred.iter().sum::<f64>() / pred.len() as f64;
    Ok(if y == 0.0 {
        1.0 - pm
    } else if y == 1.0 {
        pm
    } else {
        (S_ALPHA * s_object(pred, gt, y) + (1.0 - S_ALPHA) * s_region(pred, gt)).max(0.0)
    })
}

/// Distance to, and raster index of, the nearest foreground pixel (first in raster order on ties).
pub fn nearest_foreground(gt: ArrayView2<u8>) -> (Array2<f64>, Array2<usize>) {
    let (h, w) = gt.dim();
    // Per column: for each row, the nearest foreground row (upper one on ties).
    let mut col_near = Array2::<Option<usize>>::from_elem((h, w), None);
    for j in 0..w {
        let mut last: Option<usize> = None;
        let mut up = vec![None; h];
        for i in 0..h {
            if gt[[i, j]] == 1 {
                last = Some(i);
            }
            up[i] = last;
        }
        let mut next: Option<usize> = None;
        for i in (0..h).rev() {
            if gt[[i, j]] == 1 {
                next = Some(i);
            }
            col_near[[i, j]] = match (up[i], next) {
                (Some(a), Some(b)) => Some(if i - a <= b - i { a } else { b }),
                (a, b) => a.or(b),
            };
        }
    }
    let mut dist = Array2::<f64>::zeros((h, w));
    let mut idx = Array2::<usize>::zeros((h, w));
    for i in 0..h {
        for j in 0..w {
            let mut best: Option<(usize, usize, usize)> = None; // (d², row, col)
            // Walk columns outward; stop once the horizontal offset alone exceeds the best.
            for off in 0..w {
                let dx2 = off * off;
                if let Some((bd, _, _)) = best {
                    if dx2 > bd {
                        break;
                    }
                }
                let cands = if off == 0 {
                    [Some(j), None]
                } else {
                    [j.checked_sub(off), (j + off < w).then_some(j + off)]
                };
                for c in cands.into_iter().flatten() {
                    if let Some(r) = col_near[[i, c]] {
                        let d2 = dx2 + (r as isize - i as isize).pow(2) as usize;
                        let better = match best {
                            None => true,
                            Some((bd, br, bc)) => d2 < bd || (d2 == bd && (r, c) < (br, bc)),
                        };
                        if better {
                            best = Some((d2, r, c));
                        }
                    }
                }
            }
            if let Some((d2, r, c)) = best {
                dist[[i, j]] = (d2 as f64).sqrt();
                idx[[i, j]] = r * w + c;
            }
        }
    }
    (dist, idx)
}

/// Normalised 7×7 Gaussian with σ = 5.
pub fn gaussian_kernel() -> [[f64; 7]; 7] {
    let sigma: f64 = 5.0;
    let mut k = [[0.0; 7]; 7];
    let mut sum = 0.0;
    for (i, row) in k.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            let (y, x) = (i as f64 - 3.0, j as f64 - 3.0);
            *v = (-(x * x + y * y) / (2.0 * sigma * sigma)).exp();
            sum += *v;
        }
    }
    for row in k.iter_mut() {
        for v in row.iter_mut() {
            *v /= sum;
        }
    }
    k
}

pub fn weighted_f_measure(pred: ArrayView2<f64>, gt: ArrayView2<u8>) -> Result<f64> {
    check_inputs(pred, gt)?;
    let (h, w) = gt.dim();
    let any_gt = gt.iter().any(|&g| g == 1);
    let any_pred = pred.iter().any(|&p| p != 0.0);
    if !any_gt {
        return Ok(if any_pred { 0.0 } else { 1.0 });
    }
    if !any_pred {
        return Ok(0.0);
    }
    let (dist, idx) = nearest_foreground(gt);
    let err = Array2::from_shape_fn((h, w), |(i, j)| (pred[[i, j]] - gt[[i, j]] as f64).abs());
    let err_flat = err.as_slice().unwrap();
    // Background errors take the error of their nearest foreground pixel.
    let et = Array2::from_shape_fn((h, w), |(i, j)| {
        if gt[[i, j]] == 1 {
            err[[i, j]]
        } else {
            err_flat[idx[[i, j]]]
        }
    });
    let k = gaussian_kernel();
    let mut ea = Array2::<f64>::zeros((h, w));
    for i in 0..h {
        for j in 0..w {
            let mut acc = 0.0;
            for (ki, row) in k.iter().enumerate() {
                let y = i as isize + ki as isize - 3;
                if y < 0 || y >= h as isize {
                    continue;
                }
                for (kj, &kv) in row.iter().enumerate() {
                    let x = j as isize + kj as isize - 3;
                    if x >= 0 && x < w as isize {
                        acc += kv * et[[y as usize, x as usize]];
                    }
                }
            }
            ea[[i, j]] = acc;
        }
    }
    let mut tp_w = 0.0;
    let mut fp_w = 0.0;
    let mut ew_fg = 0.0;
    let mut n_fg = 0.0;
    for i in 0..h {
        for j in 0..w {
            let e = err[[i, j]];
            if gt[[i, j]] == 1 {
                let m = if ea[[i, j]] < e { ea[[i, j]] } else { e };
                ew_fg += m;
                n_fg += 1.0;
            } else {
                let importance = 2.0 - ((0.5f64).ln() / 5.0 * dist[[i, j]]).exp();
                fp_w += e * importance;
            }
        }
    }
    tp_w += n_fg - ew_fg;
    let recall = 1.0 - ew_fg / n_fg;
    let precision = tp_w / (tp_w + fp_w + EPS);
    Ok((1.0 + WF_BETA_SQ) * recall * precision / (recall + WF_BETA_SQ * precision + EPS))
}

/// Every metric for one `(pred, gt)` pair; `pred` is range-normalised first if needed.
pub fn evaluate_pair(pred: ArrayView2<f64>, gt: ArrayView2<u8>) -> Result<MetricReport> {
    let pred = normalize_prediction(pred);
    let pred = pred.view();
    let f = f_measure_curve(pred, gt)?;
    let e = e_measure_curve(pred, gt)?;
    Ok(MetricReport {
        s_alpha: s_measure(pred, gt)?,
        f_w_beta: weighted_f_measure(pred, gt)?,
        mae: mae(pred, gt)?,
        e_adp: e.adaptive,
        e_mean: e.mean,
        e_max: e.max,
        f_adp: f.adaptive,
        f_mean: f.mean,
        f_max: f.max,
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SampleMetrics {
    pub id: String,
    pub report: MetricReport,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DatasetEvaluation {
    pub report: MetricReport,
    pub samples: Vec<SampleMetrics>,
    /// Mean F and E curves over samples, one value per threshold.
    pub f_curve: Vec<f64>,
    pub e_curve: Vec<f64>,
}

impl DatasetEvaluation {
    /// `threshold,f_measure,e_measure` rows.
    pub fn curves_csv(&self) -> String {
        let mut out = String::from("threshold,f_measure,e_measure\n");
        for k in 0..NUM_THRESHOLDS {
            out.push_str(&format!("{:.6},{:.10},{:.10}\n", threshold(k), self.f_curve[k], self.e_curve[k]));
        }
        out
    }
}

/// Evaluates in-memory `(id, pred, gt)` triples; per-sample work may run in parallel,
/// the reduction is always in input order.
pub fn evaluate_samples(items: &[(String, Array2<f64>, Array2<u8>)]) -> Result<DatasetEvaluation> {
    let per: Vec<Result<(MetricReport, Curve, Curve)>> = items
        .par_iter()
        .map(|(id, p, g)| {
            let p = normalize_prediction(p.view());
            let rep = evaluate_pair(p.view(), g.view()).map_err(|e| Error::Data(format!("{id}: {e}")))?;
            Ok((rep, f_measure_curve(p.view(), g.view())?, e_measure_curve(p.view(), g.view())?))
        })
        .collect();
    let mut samples = Vec::with_capacity(items.len());
    let mut f_curve = vec![0.0; NUM_THRESHOLDS];
    let mut e_curve = vec![0.0; NUM_THRESHOLDS];
    let n = items.len().max(1) as f64;
    for ((id, _, _), r) in items.iter().zip(per) {
        let (rep, f, e) = r?;
        for k in 0..NUM_THRESHOLDS {
            f_curve[k] += f.values[k] / n;
            e_curve[k] += e.values[k] / n;
        }
        samples.push(SampleMetrics { id: id.clone(), report: rep });
    }
    let reports: Vec<MetricReport> = samples.iter().map(|s| s.report).collect();
    Ok(DatasetEvaluation {
        report: MetricReport::mean(&reports),
        samples,
        f_curve,
        e_curve,
    })
}

fn png_names(dir: &Path) -> Result<Vec<String>> {
    let mut names = Vec::new();
    for entry in std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let entry = entry.map_err(|e| Error::io(dir, e))?;
        let name = entry.file_name().to_string_lossy().into_owned();
        if name.to_ascii_lowercase().ends_with(".png") {
            names.push(name);
        }
    }
    names.sort();
    Ok(names)
}

pub fn read_gray(path: &Path) -> Result<Array2<f64>> {
    let img = image::open(path)
        .map_err(|e| Error::Image {
            path: path.to_path_buf(),
            source: e,
        })?
        .to_luma8();
    let (w, h) = img.dimensions();
    Ok(Array2::from_shape_fn((h as usize, w as usize), |(i, j)| {
        img.get_pixel(j as u32, i as u32)[0] as f64 / 255.0
    }))
}

/// Binarises at half intensity.
pub fn read_mask(path: &Path) -> Result<Array2<u8>> {
    Ok(read_gray(path)?.mapv(|v| (v >= 0.5) as u8))
}

/// Metrics over every PNG in `pred_dir` against the same-named file in `gt_dir`.
pub fn evaluate_dataset(pred_dir: &Path, gt_dir: &Path) -> Result<DatasetEvaluation> {
    let preds = png_names(pred_dir)?;
    let gts = png_names(gt_dir)?;
    if let Some(missing) = preds.iter().find(|n| !gts.contains(n)) {
        return Err(Error::Data(format!(
            "prediction {missing} has no ground truth in {}",
            gt_dir.display()
        )));
    }
    if let Some(missing) = gts.iter().find(|n| !preds.contains(n)) {
        return Err(Error::Data(format!(
            "ground truth {missing} has no prediction in {}",
            pred_dir.display()
        )));
    }
    if preds.is_empty() {
        return Err(Error::Data(format!("no PNG predictions in {}", pred_dir.display())));
    }
    let items = preds
        .iter()
        .map(|name| {
            let p: PathBuf = pred_dir.join(name);
            let pred = read_gray(&p)?;
            let gt = read_mask(&gt_dir.join(name))?;
            if pred.dim() != gt.dim() {
                return Err(shape_err!("{name}: prediction {:?} vs ground truth {:?}", pred.dim(), gt.dim()));
            }
            let id = name.rsplit_once('.').map_or(name.as_str(), |(s, _)| s).to_string();
            Ok((id, pred, gt))
        })
        .collect::<Result<Vec<_>>>()?;
    evaluate_samples(&items)
}
