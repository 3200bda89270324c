//! Dense `(N, C, H, W)` kernels in `f64` and their adjoints.
//!
//! Everything here works on standard-layout (row-major) arrays. The autodiff
//! tape in [`crate::autograd`] calls the forward kernels when recording and
//! the `*_backward` kernels when propagating gradients.

use ndarray::linalg::general_mat_mul;
use ndarray::{s, Array2, Array4, ArrayView2, ArrayViewMut2, Axis};

use crate::error::{shape_err, Result};

pub type Tensor = Array4<f64>;

/// Output length of a convolution along one axis.
pub fn conv_out_len(input: usize, kernel: usize, stride: usize, pad: usize) -> usize {
    (input + 2 * pad - kernel) / stride + 1
}

fn im2col(
    x: &[f64],
    (c, h, w): (usize, usize, usize),
    k: usize,
    stride: usize,
    pad: usize,
    (ho, wo): (usize, usize),
) -> Array2<f64> {
    let mut cols = Array2::<f64>::zeros((c * k * k, ho * wo));
    let out = cols.as_slice_mut().expect("fresh array is contiguous");
    for ci in 0..c {
        let plane = &x[ci * h * w..(ci + 1) * h * w];
        for ki in 0..k {
            for kj in 0..k {
                let row = (ci * k + ki) * k + kj;
                let dst = &mut out[row * ho * wo..(row + 1) * ho * wo];
                for oh in 0..ho {
                    let ih = (oh * stride + ki) as isize - pad as isize;
                    if ih < 0 || ih >= h as isize {
                        continue;
                    }
                    let src_row = &plane[ih as usize * w..(ih as usize + 1) * w];
                    let dst_row = &mut dst[oh * wo..(oh + 1) * wo];
                    for (ow, d) in dst_row.iter_mut().enumerate() {
                        let iw = (ow * stride + kj) as isize - pad as isize;
                        if iw >= 0 && iw < w as isize {
                            *d = src_row[iw as usize];
                        }
                    }
                }
            }
        }
    }
    cols
}

fn col2im_add(
    cols: &Array2<f64>,
    gx: &mut [f64],
    (c, h, w): (usize, usize, usize),
    k: usize,
    stride: usize,
    pad: usize,
    (ho, wo): (usize, usize),
) {
    let src = cols.as_slice().expect("contiguous");
    for ci in 0..c {
        let plane = &mut gx[ci * h * w..(ci + 1) * h * w];
        for ki in 0..k {
            for kj in 0..k {
                let row = (ci * k + ki) * k + kj;
                let from = &src[row * ho * wo..(row + 1) * ho * wo];
                for oh in 0..ho {
                    let ih = (oh * stride + ki) as isize - pad as isize;
                    if ih < 0 || ih >= h as isize {
                        continue;
                    }
                    let dst_row = &mut plane[ih as usize * w..(ih as usize + 1) * w];
                    for ow in 0..wo {
                        let iw = (ow * stride + kj) as isize - pad as isize;
                        if iw >= 0 && iw < w as isize {
                            dst_row[iw as usize] += from[oh * wo + ow];
                        }
                    }
                }
            }
        }
    }
}

fn is_pointwise(k: usize, stride: usize, pad: usize) -> bool {
    k == 1 && stride == 1 && pad == 0
}

/// Zero-padded 2-D cross-correlation. `w` is `(C_out, C_in, k, k)`, `b` is `(1, C_out, 1, 1)`.
pub fn conv2d(x: &Tensor, w: &Tensor, b: Option<&Tensor>, stride: usize, pad: usize) -> Result<Tensor> {
    let (n, c, h, wd) = x.dim();
    let (co, ci, k, k2) = w.dim();
    if ci != c || k != k2 {
        return Err(shape_err!(
            "conv2d expects {ci} input channels with a square kernel, got input {:?} and weight {:?}",
            x.dim(),
            w.dim()
        ));
    }
    if h + 2 * pad < k || wd + 2 * pad < k || stride == 0 {
        return Err(shape_err!("conv2d input {:?} too small for kernel {k}", x.dim()));
    }
    if let Some(b) = b {
        if b.len() != co {
            return Err(shape_err!("conv2d bias has {} entries, expected {co}", b.len()));
        }
    }
    let ho = conv_out_len(h, k, stride, pad);
    let wo = conv_out_len(wd, k, stride, pad);
    let wmat = ArrayView2::from_shape((co, ci * k * k), w.as_slice().expect("contiguous weight")).unwrap();
    let xs = x.as_slice().expect("contiguous input");
    let mut out = Tensor::zeros((n, co, ho, wo));
    let plane_in = c * h * wd;
    for s in 0..n {
        let xn = &xs[s * plane_in..(s + 1) * plane_in];
        let mut on = out.index_axis_mut(Axis(0), s);
        let mut omat: ArrayViewMut2<f64> = on.view_mut().into_shape_with_order((co, ho * wo)).unwrap();
        if is_pointwise(k, stride, pad) {
            let xmat = ArrayView2::from_shape((c, h * wd), xn).unwrap();
            general_mat_mul(1.0, &wmat, &xmat, 0.0, &mut omat);
        } else {
            let cols = im2col(xn, (c, h, wd), k, stride, pad, (ho, wo));
            general_mat_mul(1.0, &wmat, &cols, 0.0, &mut omat);
        }
        if let Some(b) = b {
            let bs = b.as_slice().expect("contiguous bias");
            for (mut row, &bv) in omat.outer_iter_mut().zip(bs) {
                row += bv;
            }
        }
    }
    Ok(out)
}

/// Gradients of [`conv2d`] with respect to input, weight and bias.
pub fn conv2d_backward(
    x: &Tensor,
    w: &Tensor,
    gy: &Tensor,
    stride: usize,
    pad: usize,
) -> (Tensor, Tensor, Tensor) {
    let (n, c, h, wd) = x.dim();
    let (co, _, k, _) = w.dim();
    let (_, _, ho, wo) = gy.dim();
    let wmat = ArrayView2::from_shape((co, c * k * k), w.as_slice().unwrap()).unwrap();
    let mut gx = Tensor::zeros(x.dim());
    let mut gw = Tensor::zeros(w.dim());
    let mut gb = Tensor::zeros((1, co, 1, 1));
    let xs = x.as_slice().unwrap();
    let gys = gy.as_slice().unwrap();
    let plane_in = c * h * wd;
    let plane_out = co * ho * wo;
    {
        let mut gwmat =
            ArrayViewMut2::from_shape((co, c * k * k), gw.as_slice_mut().unwrap()).unwrap();
        let gxs = gx.as_slice_mut().unwrap();
        for s in 0..n {
            let xn = &xs[s * plane_in..(s + 1) * plane_in];
            let gyn = ArrayView2::from_shape((co, ho * wo), &gys[s * plane_out..(s + 1) * plane_out]).unwrap();
            let gxn = &mut gxs[s * plane_in..(s + 1) * plane_in];
            if is_pointwise(k, stride, pad) {
                let xmat = ArrayView2::from_shape((c, h * wd), xn).unwrap();
                general_mat_mul(1.0, &gyn, &xmat.t(), 1.0, &mut gwmat);
                let mut gxmat = ArrayViewMut2::from_shape((c, h * wd), gxn).unwrap();
                general_mat_mul(1.0, &wmat.t(), &gyn, 0.0, &mut gxmat);
            } else {
                let cols = im2col(xn, (c, h, wd), k, stride, pad, (ho, wo));
                general_mat_mul(1.0, &gyn, &cols.t(), 1.0, &mut gwmat);
                let mut gcols = Array2::<f64>::zeros((c * k * k, ho * wo));
                general_mat_mul(1.0, &wmat.t(), &gyn, 0.0, &mut gcols);
                col2im_add(&gcols, gxn, (c, h, wd), k, stride, pad, (ho, wo));
            }
        }
    }
    for (ch, g) in gb.iter_mut().enumerate() {
        *g = gy.slice(s![.., ch, .., ..]).sum();
    }
    (gx, gw, gb)
}

/// Source taps for one output coordinate of a half-pixel-centred bilinear resample.
#[derive(Clone, Copy, Debug)]
pub struct LinearTap {
    pub lo: usize,
    pub hi: usize,
    pub w_lo: f64,
    pub w_hi: f64,
}

/// Half-pixel-centred (non-corner-aligned) linear interpolation taps.
pub fn linear_taps(in_len: usize, out_len: usize) -> Vec<LinearTap> {
    let scale = in_len as f64 / out_len as f64;
    (0..out_len)
        .map(|o| {
            let src = ((o as f64 + 0.5) * scale - 0.5).max(0.0);
            let lo = (src.floor() as usize).min(in_len - 1);
            let hi = (lo + 1).min(in_len - 1);
            let frac = src - lo as f64;
            LinearTap {
                lo,
                hi,
                w_lo: 1.0 - frac,
                w_hi: frac,
            }
        })
        .collect()
}

/// Bilinear resample of every `(n, c)` plane to `out_h × out_w`.
pub fn resize_bilinear(x: &Tensor, out_h: usize, out_w: usize) -> Tensor {
    let (n, c, h, w) = x.dim();
    if (h, w) == (out_h, out_w) {
        return x.clone();
    }
    let ty = linear_taps(h, out_h);
    let tx = linear_taps(w, out_w);
    let mut out = Tensor::zeros((n, c, out_h, out_w));
    for (s, ch) in ndarray::indices((n, c)) {
        let src = x.slice(s![s, ch, .., ..]);
        let mut dst = out.slice_mut(s![s, ch, .., ..]);
        for (oy, ay) in ty.iter().enumerate() {
            for (ox, ax) in tx.iter().enumerate() {
                dst[[oy, ox]] = ay.w_lo * (ax.w_lo * src[[ay.lo, ax.lo]] + ax.w_hi * src[[ay.lo, ax.hi]])
                    + ay.w_hi * (ax.w_lo * src[[ay.hi, ax.lo]] + ax.w_hi * src[[ay.hi, ax.hi]]);
            }
        }
    }
    out
}

/// Adjoint of [`resize_bilinear`]: scatters output gradients back onto the input grid.
pub fn resize_bilinear_backward(gy: &Tensor, in_h: usize, in_w: usize) -> Tensor {
    let (n, c, oh, ow) = gy.dim();
    if (oh, ow) == (in_h, in_w) {
        return gy.clone();
    }
    let ty = linear_taps(in_h, oh);
    let tx = linear_taps(in_w, ow);
    let mut gx = Tensor::zeros((n, c, in_h, in_w));
    for s in 0..n {
        for ch in 0..c {
            let g = gy.slice(s![s, ch, .., ..]);
            let mut dst = gx.slice_mut(s![s, ch, .., ..]);
            for (oy, ay) in ty.iter().enumerate() {
                for (ox, ax) in tx.iter().enumerate() {
                    let v = g[[oy, ox]];
                    dst[[ay.lo, ax.lo]] += ay.w_lo * ax.w_lo * v;
                    dst[[ay.lo, ax.hi]] += ay.w_lo * ax.w_hi * v;
                    dst[[ay.hi, ax.lo]] += ay.w_hi * ax.w_lo * v;
                    dst[[ay.hi, ax.hi]] += ay.w_hi * ax.w_hi * v;
                }
            }
        }
    }
    gx
}

/// Per-sample, per-channel normalization followed by an affine map.
pub fn instance_norm(x: &Tensor, gamma: &Tensor, beta: &Tensor, eps: f64) -> Tensor {
    let (n, c, _, _) = x.dim();
    let mut out = Tensor::zeros(x.dim());
    for s in 0..n {
        for ch in 0..c {
            let plane = x.slice(s![s, ch, .., ..]);
            let (mean, inv_std) = plane_stats(plane.as_slice().unwrap(), eps);
            let (g, b) = (gamma[[0, ch, 0, 0]], beta[[0, ch, 0, 0]]);
            out.slice_mut(s![s, ch, .., ..])
                .zip_mut_with(&plane, |o, &v| *o = g * (v - mean) * inv_std + b);
        }
    }
    out
}

fn plane_stats(v: &[f64], eps: f64) -> (f64, f64) {
    let len = v.len() as f64;
    let mean = v.iter().sum::<f64>() / len;
    let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / len;
    (mean, 1.0 / (var + eps).sqrt())
}

/// Gradients of [`instance_norm`] with respect to input, scale and shift.
pub fn instance_norm_backward(
    x: &Tensor,
    gamma: &Tensor,
    gy: &Tensor,
    eps: f64,
) -> (Tensor, Tensor, Tensor) {
    let (n, c, h, w) = x.dim();
    let m = (h * w) as f64;
    let mut gx = Tensor::zeros(x.dim());
    let mut gg = Tensor::zeros(gamma.dim());
    let mut gb = Tensor::zeros(gamma.dim());
    for s in 0..n {
        for ch in 0..c {
            let xs = x.slice(s![s, ch, .., ..]);
            let xs = xs.as_slice().unwrap();
            let gys = gy.slice(s![s, ch, .., ..]);
            let gys = gys.as_slice().unwrap();
            let (mean, inv_std) = plane_stats(xs, eps);
            let g = gamma[[0, ch, 0, 0]];
            let mut sum_d = 0.0;
            let mut sum_dx = 0.0;
            for (&xv, &gv) in xs.iter().zip(gys) {
                let xhat = (xv - mean) * inv_std;
                gg[[0, ch, 0, 0]] += gv * xhat;
                gb[[0, ch, 0, 0]] += gv;
                sum_d += gv * g;
                sum_dx += gv * g * xhat;
            }
            let mut dst = gx.slice_mut(s![s, ch, .., ..]);
            let dst = dst.as_slice_mut().unwrap();
            for ((d, &xv), &gv) in dst.iter_mut().zip(xs).zip(gys) {
                let xhat = (xv - mean) * inv_std;
                *d = inv_std / m * (m * gv * g - sum_d - xhat * sum_dx);
            }
        }
    }
    (gx, gg, gb)
}

/// Sums `g` down to `shape`, undoing a broadcast of a tensor of that shape.
pub fn reduce_to(g: &Tensor, shape: (usize, usize, usize, usize)) -> Tensor {
    let target = [shape.0, shape.1, shape.2, shape.3];
    let mut out = g.clone();
    for (axis, &len) in target.iter().enumerate() {
        if len == 1 && out.shape()[axis] != 1 {
            out = out.sum_axis(Axis(axis)).insert_axis(Axis(axis));
        }
    }
    out.as_standard_layout().into_owned()
}

/// Whether `small` broadcasts to `big` (each axis equal or 1).
pub fn broadcasts_to(small: &[usize], big: &[usize]) -> bool {
    small.len() == big.len() && small.iter().zip(big).all(|(&s, &b)| s == b || s == 1)
}
