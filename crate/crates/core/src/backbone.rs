//! Four-stage pyramid encoders.
//!
//! [`ToyPyramid`] is a small convolutional stand-in for a transformer
//! backbone: each stage is a strided 3x3 convolution followed by one
//! [`ResidualBlock`], with strides 4, 2, 2, 2. It has no self-attention, so
//! its receptive field is purely local. Any type implementing
//! [`PyramidEncoder`] can replace it as long as it keeps the stride and
//! channel contract of [`FeaturePyramid`].

use serde::{Deserialize, Serialize};

use crate::autograd::{ParamStore, Tape, Var};
use crate::blocks::ResidualBlock;
use crate::error::{shape_err, Error, Result};
use crate::nn::Conv2d;

pub const STAGE_STRIDES: [usize; 4] = [4, 8, 16, 32];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackboneKind {
    ToyPyramid,
    ExternalPyramid,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BackboneConfig {
    pub kind: BackboneKind,
    pub channels: [usize; 4],
    #[serde(default = "default_in_channels")]
    pub in_channels: usize,
}

fn default_in_channels() -> usize {
    3
}

impl Default for BackboneConfig {
    fn default() -> Self {
        BackboneConfig {
            kind: BackboneKind::ToyPyramid,
            channels: [8, 16, 32, 64],
            in_channels: 3,
        }
    }
}

impl BackboneConfig {
    /// Channel widths of a PVTv2-B2-class encoder.
    pub fn pvt_like() -> Self {
        BackboneConfig {
            channels: [64, 128, 320, 512],
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.channels.iter().any(|&c| c == 0) || self.in_channels == 0 {
            return Err(Error::Config(format!(
                "backbone channel counts must be positive, got {:?}",
                self.channels
            )));
        }
        Ok(())
    }
}

/// Stage outputs at strides 4, 8, 16 and 32.
#[derive(Clone, Copy, Debug)]
pub struct FeaturePyramid {
    pub stages: [Var; 4],
}

impl FeaturePyramid {
    /// Checks the stride/channel contract against an input of `h × w`.
    pub fn check(&self, tape: &Tape, h: usize, w: usize, channels: &[usize; 4]) -> Result<()> {
        for (i, (&v, &stride)) in self.stages.iter().zip(&STAGE_STRIDES).enumerate() {
            let (_, c, fh, fw) = tape.shape(v);
            if (c, fh, fw) != (channels[i], h / stride, w / stride) {
                return Err(shape_err!(
                    "pyramid stage {} is {c}x{fh}x{fw}, expected {}x{}x{}",
                    i + 1,
                    channels[i],
                    h / stride,
                    w / stride
                ));
            }
        }
        Ok(())
    }
}

pub trait PyramidEncoder: Send + Sync {
    fn channels(&self) -> [usize; 4];
    fn init(&self, store: &mut ParamStore, rng: &mut dyn rand::RngCore);
    fn encode(&self, tape: &mut Tape, image: Var) -> Result<FeaturePyramid>;
}

/// Rejects inputs whose sides are not multiples of 32.
pub fn check_input_side(h: usize, w: usize) -> Result<()> {
    if h == 0 || w == 0 || h % 32 != 0 || w % 32 != 0 {
        return Err(shape_err!(
            "input {h}x{w} is not divisible by 32; resize it first (e.g. to 416 or 64)"
        ));
    }
    Ok(())
}

#[derive(Clone, Debug)]
pub struct ToyPyramid {
    channels: [usize; 4],
    stages: Vec<(Conv2d, ResidualBlock)>,
}

impl ToyPyramid {
    pub fn new(prefix: &str, cfg: &BackboneConfig) -> Result<Self> {
        cfg.validate()?;
        let strides = [4, 2, 2, 2];
        let mut in_ch = cfg.in_channels;
        let stages = (0..4)
            .map(|i| {
                let c = cfg.channels[i];
                let down = Conv2d::new(format!("{prefix}.stage{}.down", i + 1), in_ch, c, 3)
                    .with_stride(strides[i]);
                let res = ResidualBlock::new(&format!("{prefix}.stage{}.res", i + 1), c);
                in_ch = c;
                (down, res)
            })
            .collect();
        Ok(ToyPyramid {
            channels: cfg.channels,
            stages,
        })
    }
}

impl PyramidEncoder for ToyPyramid {
    fn channels(&self) -> [usize; 4] {
        self.channels
    }

    fn init(&self, store: &mut ParamStore, mut rng: &mut dyn rand::RngCore) {
        for (down, res) in &self.stages {
            down.init(store, &mut rng);
            res.init(store, &mut rng);
        }
    }

    fn encode(&self, tape: &mut Tape, image: Var) -> Result<FeaturePyramid> {
        let (_, _, h, w) = tape.shape(image);
        check_input_side(h, w)?;
        let mut x = image;
        let mut out = Vec::with_capacity(4);
        for (down, res) in &self.stages {
            x = down.forward(tape, x)?;
            x = res.forward(tape, x)?;
            out.push(x);
        }
        let pyramid = FeaturePyramid {
            stages: [out[0], out[1], out[2], out[3]],
        };
        pyramid.check(tape, h, w, &self.channels)?;
        Ok(pyramid)
    }
}
