//! Independent reference implementations used by the integration tests.
//!
//! Everything here is written the slow, obvious way: per-pixel loops, brute
//! force searches, no shared code with the library beyond array types.

#![allow(dead_code)]

use ndarray::{Array2, ArrayView2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const EPS: f64 = f64::EPSILON;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random binary mask: a few rectangles, or scattered pixels when `speckle` is set.
pub fn random_mask(r: &mut ChaCha8Rng, h: usize, w: usize, speckle: bool) -> Array2<u8> {
    if speckle {
        let p = r.random_range(0.05..0.6);
        return Array2::from_shape_fn((h, w), |_| r.random_bool(p) as u8);
    }
    let mut m = Array2::<u8>::zeros((h, w));
    for _ in 0..r.random_range(1..=3) {
        let (i0, j0) = (r.random_range(0..h), r.random_range(0..w));
        let (i1, j1) = (r.random_range(i0..h) + 1, r.random_range(j0..w) + 1);
        for i in i0..i1 {
            for j in j0..j1 {
                m[[i, j]] = 1;
            }
        }
    }
    m
}

/// Soft prediction loosely correlated with `gt`, with some exact 0/1 values and
/// values on threshold boundaries so ties get exercised.
pub fn random_pred(r: &mut ChaCha8Rng, gt: &Array2<u8>) -> Array2<f64> {
    gt.mapv(|g| match r.random_range(0..10) {
        0 => 0.0,
        1 => 1.0,
        2 => r.random_range(0..=255) as f64 / 255.0,
        _ => (0.6 * g as f64 + 0.4 * r.random::<f64>()).clamp(0.0, 1.0),
    })
}

pub fn oracle_mae(pred: ArrayView2<f64>, gt: ArrayView2<u8>) -> f64 {
    let mut s = 0.0;
    for (p, g) in pred.iter().zip(gt.iter()) {
        s += (p - *g as f64).abs();
    }
    s / pred.len() as f64
}

fn binarize(pred: ArrayView2<f64>, t: f64) -> Array2<u8> {
    pred.mapv(|p| (p >= t) as u8)
}

fn f_binary(bin: &Array2<u8>, gt: ArrayView2<u8>) -> f64 {
    let mut tp = 0.0;
    let mut fp = 0.0;
    let mut fneg = 0.0;
    for (b, g) in bin.iter().zip(gt.iter()) {
        match (*b, *g) {
            (1, 1) => tp += 1.0,
            (1, 0) => fp += 1.0,
            (0, 1) => fneg += 1.0,
            _ => {}
        }
    }
    if tp + fneg == 0.0 {
        return if tp + fp == 0.0 { 1.0 } else { 0.0 };
    }
    if tp == 0.0 {
        return 0.0;
    }
    let p = tp / (tp + fp);
    let r = tp / (tp + fneg);
    1.3 * p * r / (0.3 * p + r)
}

fn e_binary(bin: &Array2<u8>, gt: ArrayView2<u8>) -> f64 {
    let n = gt.len() as f64;
    let fg: f64 = gt.iter().map(|&g| g as f64).sum();
    let enhanced: Array2<f64> = if fg == 0.0 {
        bin.mapv(|b| 1.0 - b as f64)
    } else if fg == n {
        bin.mapv(|b| b as f64)
    } else {
        let mb = bin.iter().map(|&b| b as f64).sum::<f64>() / n;
        let mg = fg / n;
        Array2::from_shape_fn(gt.dim(), |ix| {
            let a = bin[ix] as f64 - mb;
            let b = gt[ix] as f64 - mg;
            let align = 2.0 * a * b / (a * a + b * b + EPS);
            (align + 1.0) * (align + 1.0) / 4.0
        })
    };
    enhanced.sum() / n
}

pub struct OracleCurve {
    pub values: Vec<f64>,
    pub adaptive: f64,
}

fn adaptive(pred: ArrayView2<f64>) -> f64 {
    (2.0 * pred.sum() / pred.len() as f64).min(1.0)
}

pub fn oracle_f_curve(pred: ArrayView2<f64>, gt: ArrayView2<u8>) -> OracleCurve {
    OracleCurve {
        values: (0..256).map(|k| f_binary(&binarize(pred, k as f64 / 255.0), gt)).collect(),
        adaptive: f_binary(&binarize(pred, adaptive(pred)), gt),
    }
}

pub fn oracle_e_curve(pred: ArrayView2<f64>, gt: ArrayView2<u8>) -> OracleCurve {
    OracleCurve {
        values: (0..256).map(|k| e_binary(&binarize(pred, k as f64 / 255.0), gt)).collect(),
        adaptive: e_binary(&binarize(pred, adaptive(pred)), gt),
    }
}

fn mean_std(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    let var = if v.len() > 1 {
        v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    (m, var.sqrt())
}

fn ssim(pred: &[f64], gt: &[f64]) -> f64 {
    let n = pred.len() as f64;
    let x = pred.iter().sum::<f64>() / n;
    let y = gt.iter().sum::<f64>() / n;
    let sx = pred.iter().map(|p| (p - x).powi(2)).sum::<f64>() / (n - 1.0 + EPS);
    let sy = gt.iter().map(|g| (g - y).powi(2)).sum::<f64>() / (n - 1.0 + EPS);
    let sxy = pred.iter().zip(gt).map(|(p, g)| (p - x) * (g - y)).sum::<f64>() / (n - 1.0 + EPS);
    let a = 4.0 * x * y * sxy;
    let b = (x * x + y * y) * (sx + sy);
    if a != 0.0 {
        a / (b + EPS)
    } else if b == 0.0 {
        1.0
    } else {
        0.0
    }
}

pub fn oracle_s_measure(pred: ArrayView2<f64>, gt: ArrayView2<u8>) -> f64 {
    let (h, w) = gt.dim();
    let n = (h * w) as f64;
    let y = gt.iter().map(|&g| g as f64).sum::<f64>() / n;
    if y == 0.0 {
        return 1.0 - pred.sum() / n;
    }
    if y == 1.0 {
        return pred.sum() / n;
    }
    // Object part.
    let mut fg = vec![];
    let mut bg = vec![];
    for ((i, j), &g) in gt.indexed_iter() {
        if g == 1 {
            fg.push(pred[[i, j]]);
        } else {
            bg.push(1.0 - pred[[i, j]]);
        }
    }
    let obj = |v: &[f64]| {
        let (m, s) = mean_std(v);
        2.0 * m / (m * m + 1.0 + s + EPS)
    };
    let s_obj = y * obj(&fg) + (1.0 - y) * obj(&bg);

    // Region part: split at the rounded centroid (1-based, numpy rounding).
    let (mut cx, mut cy, mut cnt) = (0.0, 0.0, 0.0);
    for ((i, j), &g) in gt.indexed_iter() {
        if g == 1 {
            cy += i as f64;
            cx += j as f64;
            cnt += 1.0;
        }
    }
    let x = (cx / cnt).round_ties_even() as usize + 1;
    let yc = (cy / cnt).round_ties_even() as usize + 1;
    let mut s_reg = 0.0;
    for (r0, r1, c0, c1) in [(0, yc, 0, x), (0, yc, x, w), (yc, h, 0, x), (yc, h, x, w)] {
        let mut p = vec![];
        let mut g = vec![];
        for i in r0..r1.min(h) {
            for j in c0..c1.min(w) {
                p.push(pred[[i, j]]);
                g.push(gt[[i, j]] as f64);
            }
        }
        if p.is_empty() {
            continue;
        }
        s_reg += p.len() as f64 / n * ssim(&p, &g);
    }
    (0.5 * s_obj + 0.5 * s_reg).max(0.0)
}

pub fn oracle_weighted_f(pred: ArrayView2<f64>, gt: ArrayView2<u8>) -> f64 {
    let (h, w) = gt.dim();
    let fgs: Vec<(usize, usize)> = gt
        .indexed_iter()
        .filter(|(_, &g)| g == 1)
        .map(|(ix, _)| ix)
        .collect();
    let any_pred = pred.iter().any(|&p| p != 0.0);
    if fgs.is_empty() {
        return if any_pred { 0.0 } else { 1.0 };
    }
    if !any_pred {
        return 0.0;
    }
    let e = Array2::from_shape_fn((h, w), |(i, j)| (pred[[i, j]] - gt[[i, j]] as f64).abs());
    // Brute-force nearest foreground; the first in raster order wins ties.
    let mut dist = Array2::<f64>::zeros((h, w));
    let mut et = e.clone();
    for i in 0..h {
        for j in 0..w {
            if gt[[i, j]] == 1 {
                continue;
            }
            let mut best = (usize::MAX, (0, 0));
            for &(a, b) in &fgs {
                let d2 = (a as isize - i as isize).pow(2) as usize + (b as isize - j as isize).pow(2) as usize;
                if d2 < best.0 {
                    best = (d2, (a, b));
                }
            }
            dist[[i, j]] = (best.0 as f64).sqrt();
            et[[i, j]] = e[best.1];
        }
    }
    let mut k = [[0.0f64; 7]; 7];
    let mut ks = 0.0;
    for (a, row) in k.iter_mut().enumerate() {
        for (b, v) in row.iter_mut().enumerate() {
            let (dy, dx) = (a as f64 - 3.0, b as f64 - 3.0);
            *v = (-(dx * dx + dy * dy) / 50.0).exp();
            ks += *v;
        }
    }
    let ea = Array2::from_shape_fn((h, w), |(i, j)| {
        let mut s = 0.0;
        for a in 0..7 {
            for b in 0..7 {
                let (y, x) = (i as isize + a as isize - 3, j as isize + b as isize - 3);
                if y >= 0 && x >= 0 && (y as usize) < h && (x as usize) < w {
                    s += k[a][b] / ks * et[[y as usize, x as usize]];
                }
            }
        }
        s
    });
    let mut ew_fg = 0.0;
    let mut ew_bg = 0.0;
    for i in 0..h {
        for j in 0..w {
            if gt[[i, j]] == 1 {
                ew_fg += ea[[i, j]].min(e[[i, j]]);
            } else {
                let b = 2.0 - (0.5f64.ln() / 5.0 * dist[[i, j]]).exp();
                ew_bg += e[[i, j]] * b;
            }
        }
    }
    let n_fg = fgs.len() as f64;
    let tpw = n_fg - ew_fg;
    let r = 1.0 - ew_fg / n_fg;
    let p = tpw / (tpw + ew_bg + EPS);
    2.0 * r * p / (r + p + EPS)
}

/// Edge ground truth by scanning every window: `max − min` with replicate padding.
pub fn oracle_edge(mask: &Array2<u8>, k: usize) -> Array2<u8> {
    let (h, w) = mask.dim();
    let r = (k / 2) as isize;
    Array2::from_shape_fn((h, w), |(i, j)| {
        let mut hi = 0u8;
        let mut lo = 1u8;
        for di in -r..=r {
            for dj in -r..=r {
                let y = (i as isize + di).clamp(0, h as isize - 1) as usize;
                let x = (j as isize + dj).clamp(0, w as isize - 1) as usize;
                hi = hi.max(mask[[y, x]]);
                lo = lo.min(mask[[y, x]]);
            }
        }
        hi - lo
    })
}

/// Central-difference derivative of `f` at `x` along coordinate `i`.
pub fn central_difference(f: &mut dyn FnMut(&[f64]) -> f64, x: &[f64], i: usize, step: f64) -> f64 {
    let mut xp = x.to_vec();
    let mut xm = x.to_vec();
    xp[i] += step;
    xm[i] -= step;
    (f(&xp) - f(&xm)) / (2.0 * step)
}

/// `|a − n| / max(|a|, |n|, floor)`; the floor keeps vanishing gradients from
/// turning rounding noise into large ratios.
pub fn relative_error(analytic: f64, numeric: f64, floor: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(floor)
}
