//! Parameterised layers. Each layer owns only its dotted name prefix and
//! hyperparameters; the values live in a [`ParamStore`].

use rand::Rng;

use crate::autograd::{ParamStore, Tape, Var};
use crate::error::Result;
use crate::tensor::Tensor;

#[derive(Clone, Debug)]
pub struct Conv2d {
    pub name: String,
    pub in_ch: usize,
    pub out_ch: usize,
    pub kernel: usize,
    pub stride: usize,
    pub pad: usize,
    pub bias: bool,
}

impl Conv2d {
    /// Stride-1, size-preserving convolution with bias.
    pub fn new(name: impl Into<String>, in_ch: usize, out_ch: usize, kernel: usize) -> Self {
        Conv2d {
            name: name.into(),
            in_ch,
            out_ch,
            kernel,
            stride: 1,
            pad: kernel / 2,
            bias: true,
        }
    }

    pub fn with_stride(mut self, stride: usize) -> Self {
        self.stride = stride;
        self
    }

    pub fn without_bias(mut self) -> Self {
        self.bias = false;
        self
    }

    pub fn weight_name(&self) -> String {
        format!("{}.weight", self.name)
    }

    pub fn bias_name(&self) -> String {
        format!("{}.bias", self.name)
    }

    /// Uniform fan-in initialisation, bound `1/sqrt(fan_in)` for weight and bias.
    pub fn init<R: Rng>(&self, store: &mut ParamStore, rng: &mut R) {
        let fan_in = (self.in_ch * self.kernel * self.kernel) as f64;
        let bound = 1.0 / fan_in.sqrt();
        let w = Tensor::from_shape_fn((self.out_ch, self.in_ch, self.kernel, self.kernel), |_| {
            rng.random_range(-bound..bound)
        });
        store.insert(self.weight_name(), w);
        if self.bias {
            let b = Tensor::from_shape_fn((1, self.out_ch, 1, 1), |_| rng.random_range(-bound..bound));
            store.insert(self.bias_name(), b);
        }
    }

    pub fn forward(&self, tape: &mut Tape, x: Var) -> Result<Var> {
        let w = tape.param(&self.weight_name())?;
        let b = if self.bias {
            Some(tape.param(&self.bias_name())?)
        } else {
            None
        };
        tape.conv2d(x, w, b, self.stride, self.pad)
    }
}

#[derive(Clone, Debug)]
pub struct InstanceNorm {
    pub name: String,
    pub channels: usize,
    pub eps: f64,
}

impl InstanceNorm {
    pub fn new(name: impl Into<String>, channels: usize, eps: f64) -> Self {
        InstanceNorm {
            name: name.into(),
            channels,
            eps,
        }
    }

    pub fn init(&self, store: &mut ParamStore) {
        store.insert(format!("{}.weight", self.name), Tensor::ones((1, self.channels, 1, 1)));
        store.insert(format!("{}.bias", self.name), Tensor::zeros((1, self.channels, 1, 1)));
    }

    pub fn forward(&self, tape: &mut Tape, x: Var) -> Result<Var> {
        let g = tape.param(&format!("{}.weight", self.name))?;
        let b = tape.param(&format!("{}.bias", self.name))?;
        tape.instance_norm(x, g, b, self.eps)
    }
}

/// Copies a single-channel batch into `channels` identical channels.
pub fn replicate_channels(x: &Tensor, channels: usize) -> Tensor {
    let (n, _, h, w) = x.dim();
    Tensor::from_shape_fn((n, channels, h, w), |(s, _, y, xx)| x[[s, 0, y, xx]])
}
