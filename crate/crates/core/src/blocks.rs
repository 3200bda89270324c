//! Residual refinement unit and the projecting ConvBlock built from it.

use rand::Rng;

use crate::autograd::{ParamStore, Tape, Var};
use crate::error::{shape_err, Result};
use crate::nn::{Conv2d, InstanceNorm};

pub const LEAKY_SLOPE: f64 = 0.01;
pub const NORM_EPS: f64 = 1e-5;

/// `y = LeakyReLU(InstanceNorm(Conv3x3(x))) + x`.
#[derive(Clone, Debug)]
pub struct ResidualBlock {
    pub channels: usize,
    conv: Conv2d,
    norm: InstanceNorm,
}

impl ResidualBlock {
    pub fn new(prefix: &str, channels: usize) -> Self {
        ResidualBlock {
            channels,
            conv: Conv2d::new(format!("{prefix}.conv"), channels, channels, 3),
            norm: InstanceNorm::new(format!("{prefix}.norm"), channels, NORM_EPS),
        }
    }

    pub fn init<R: Rng>(&self, store: &mut ParamStore, rng: &mut R) {
        self.conv.init(store, rng);
        self.norm.init(store);
    }

    /// The pre-activation branch value `InstanceNorm(Conv3x3(x))`.
    pub fn branch(&self, tape: &mut Tape, x: Var) -> Result<Var> {
        let c = tape.shape(x).1;
        if c != self.channels {
            return Err(shape_err!(
                "residual block `{}` expects {} channels, got {c}",
                self.conv.name,
                self.channels
            ));
        }
        let z = self.conv.forward(tape, x)?;
        self.norm.forward(tape, z)
    }

    pub fn forward(&self, tape: &mut Tape, x: Var) -> Result<Var> {
        let z = self.branch(tape, x)?;
        let a = tape.leaky_relu(z, LEAKY_SLOPE);
        tape.add(a, x)
    }
}

/// 1x1 projection to the working width followed by two residual blocks.
#[derive(Clone, Debug)]
pub struct ConvBlock {
    pub in_ch: usize,
    pub out_ch: usize,
    proj: Conv2d,
    refine: [ResidualBlock; 2],
}

impl ConvBlock {
    pub fn new(prefix: &str, in_ch: usize, out_ch: usize) -> Self {
        ConvBlock {
            in_ch,
            out_ch,
            proj: Conv2d::new(format!("{prefix}.proj"), in_ch, out_ch, 1),
            refine: [
                ResidualBlock::new(&format!("{prefix}.res0"), out_ch),
                ResidualBlock::new(&format!("{prefix}.res1"), out_ch),
            ],
        }
    }

    pub fn init<R: Rng>(&self, store: &mut ParamStore, rng: &mut R) {
        self.proj.init(store, rng);
        for r in &self.refine {
            r.init(store, rng);
        }
    }

    pub fn forward(&self, tape: &mut Tape, x: Var) -> Result<Var> {
        let c = tape.shape(x).1;
        if c != self.in_ch {
            return Err(shape_err!(
                "conv block `{}` expects {} channels, got {c}",
                self.proj.name,
                self.in_ch
            ));
        }
        let mut y = self.proj.forward(tape, x)?;
        for r in &self.refine {
            y = r.forward(tape, y)?;
        }
        Ok(y)
    }
}
