//! Bimodal gated fusion of the RGB and NIR pyramids.
//!
//! For each modality a per-channel gate `g = sigmoid(Conv1x1(GAP(f)))` scales
//! the features; the two gated maps are concatenated, projected back to `C`
//! channels by a 1x1 convolution and passed through CBAM. Gate convolutions
//! are independent per modality.

use rand::Rng;

use crate::attention::{maybe_cbam, Cbam};
use crate::autograd::{ParamStore, Tape, Var};
use crate::backbone::FeaturePyramid;
use crate::blocks::ConvBlock;
use crate::error::{shape_err, Result};
use crate::nn::Conv2d;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Modality {
    Rgb,
    Nir,
}

#[derive(Clone, Debug)]
pub struct GatedFusion {
    pub channels: usize,
    gate_rgb: Conv2d,
    gate_nir: Conv2d,
    integrate: Conv2d,
    cbam: Option<Cbam>,
}

impl GatedFusion {
    /// `cbam_ratio = None` disables the attention pass.
    pub fn new(prefix: &str, channels: usize, cbam_ratio: Option<usize>) -> Result<Self> {
        let cbam = cbam_ratio
            .map(|r| Cbam::new(&format!("{prefix}.cbam"), channels, r))
            .transpose()?;
        Ok(GatedFusion {
            channels,
            gate_rgb: Conv2d::new(format!("{prefix}.gate_rgb"), channels, channels, 1),
            gate_nir: Conv2d::new(format!("{prefix}.gate_nir"), channels, channels, 1),
            integrate: Conv2d::new(format!("{prefix}.integrate"), 2 * channels, channels, 1),
            cbam,
        })
    }

    pub fn init<R: Rng>(&self, store: &mut ParamStore, rng: &mut R) {
        self.gate_rgb.init(store, rng);
        self.gate_nir.init(store, rng);
        self.integrate.init(store, rng);
        if let Some(c) = &self.cbam {
            c.init(store, rng);
        }
    }

    pub fn gate_conv(&self, m: Modality) -> &Conv2d {
        match m {
            Modality::Rgb => &self.gate_rgb,
            Modality::Nir => &self.gate_nir,
        }
    }

    /// Pre-sigmoid gate logits `(N, C, 1, 1)` for one modality.
    pub fn gate_logits(&self, tape: &mut Tape, f: Var, m: Modality) -> Result<Var> {
        let pooled = tape.global_avg_pool(f);
        self.gate_conv(m).forward(tape, pooled)
    }

    pub fn forward(&self, tape: &mut Tape, f_rgb: Var, f_nir: Var) -> Result<Var> {
        let (sr, sn) = (tape.shape(f_rgb), tape.shape(f_nir));
        if sr != sn {
            return Err(shape_err!("gated fusion inputs differ: {sr:?} vs {sn:?}"));
        }
        if sr.1 != self.channels {
            return Err(shape_err!("gated fusion expects {} channels, got {}", self.channels, sr.1));
        }
        let lr = self.gate_logits(tape, f_rgb, Modality::Rgb)?;
        let ln = self.gate_logits(tape, f_nir, Modality::Nir)?;
        let gr = tape.sigmoid(lr);
        let gn = tape.sigmoid(ln);
        let a = tape.mul(f_rgb, gr)?;
        let b = tape.mul(f_nir, gn)?;
        let cat = tape.concat(a, b)?;
        let fused = self.integrate.forward(tape, cat)?;
        maybe_cbam(self.cbam.as_ref(), tape, fused)
    }
}

/// One projection per modality and one fusion block per pyramid stage.
#[derive(Clone, Debug)]
pub struct PyramidFusion {
    pub width: usize,
    stages: Vec<(ConvBlock, ConvBlock, GatedFusion)>,
}

impl PyramidFusion {
    pub fn new(
        prefix: &str,
        rgb_channels: [usize; 4],
        nir_channels: [usize; 4],
        width: usize,
        cbam_ratio: Option<usize>,
    ) -> Result<Self> {
        let stages = (0..4)
            .map(|i| {
                let p = format!("{prefix}.stage{}", i + 1);
                Ok((
                    ConvBlock::new(&format!("{p}.proj_rgb"), rgb_channels[i], width),
                    ConvBlock::new(&format!("{p}.proj_nir"), nir_channels[i], width),
                    GatedFusion::new(&format!("{p}.fuse"), width, cbam_ratio)?,
                ))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(PyramidFusion { width, stages })
    }

    pub fn init<R: Rng>(&self, store: &mut ParamStore, rng: &mut R) {
        for (a, b, f) in &self.stages {
            a.init(store, rng);
            b.init(store, rng);
            f.init(store, rng);
        }
    }

    pub fn stage(&self, i: usize) -> &GatedFusion {
        &self.stages[i].2
    }

    /// Fused maps at strides 4..32, all `width` channels wide.
    pub fn forward(&self, tape: &mut Tape, rgb: &FeaturePyramid, nir: &FeaturePyramid) -> Result<[Var; 4]> {
        let mut out = [rgb.stages[0]; 4];
        for (i, (pr, pn, fuse)) in self.stages.iter().enumerate() {
            let (a, b) = (tape.shape(rgb.stages[i]), tape.shape(nir.stages[i]));
            if (a.0, a.2, a.3) != (b.0, b.2, b.3) {
                return Err(shape_err!("pyramid stage {} differs: {a:?} vs {b:?}", i + 1));
            }
            let fr = pr.forward(tape, rgb.stages[i])?;
            let fn_ = pn.forward(tape, nir.stages[i])?;
            out[i] = fuse.forward(tape, fr, fn_)?;
        }
        Ok(out)
    }
}
