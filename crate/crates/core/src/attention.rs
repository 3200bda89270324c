//! Sequential channel-then-spatial attention (CBAM).

use rand::Rng;

use crate::autograd::{ParamStore, Tape, Var};
use crate::error::{Error, Result};
use crate::nn::Conv2d;

/// `a = sigmoid(MLP(avgpool(x)) + MLP(maxpool(x)))`, output `x * a`.
///
/// The MLP is `C -> C/r` (no bias), ReLU, `C/r -> C` (with bias), shared by both descriptors.
#[derive(Clone, Debug)]
pub struct ChannelGate {
    pub channels: usize,
    hidden: Conv2d,
    out: Conv2d,
}

impl ChannelGate {
    pub fn new(prefix: &str, channels: usize, ratio: usize) -> Result<Self> {
        if ratio == 0 || channels % ratio != 0 {
            return Err(Error::Config(format!(
                "CBAM reduction ratio {ratio} must divide the channel count {channels}"
            )));
        }
        let hidden = channels / ratio;
        Ok(ChannelGate {
            channels,
            hidden: Conv2d::new(format!("{prefix}.mlp.hidden"), channels, hidden, 1).without_bias(),
            out: Conv2d::new(format!("{prefix}.mlp.out"), hidden, channels, 1),
        })
    }

    pub fn init<R: Rng>(&self, store: &mut ParamStore, rng: &mut R) {
        self.hidden.init(store, rng);
        self.out.init(store, rng);
    }

    fn mlp(&self, tape: &mut Tape, v: Var) -> Result<Var> {
        let h = self.hidden.forward(tape, v)?;
        let h = tape.relu(h);
        self.out.forward(tape, h)
    }

    /// The `(N, C, 1, 1)` attention vector.
    pub fn attention(&self, tape: &mut Tape, x: Var) -> Result<Var> {
        let avg = tape.global_avg_pool(x);
        let max = tape.global_max_pool(x);
        let a = self.mlp(tape, avg)?;
        let m = self.mlp(tape, max)?;
        let s = tape.add(a, m)?;
        Ok(tape.sigmoid(s))
    }

    pub fn forward(&self, tape: &mut Tape, x: Var) -> Result<Var> {
        let a = self.attention(tape, x)?;
        tape.mul(x, a)
    }
}

/// `s = sigmoid(Conv7x7([mean_c(x); max_c(x)]))`, output `x * s`.
#[derive(Clone, Debug)]
pub struct SpatialGate {
    conv: Conv2d,
}

impl SpatialGate {
    pub fn new(prefix: &str) -> Self {
        SpatialGate {
            conv: Conv2d::new(format!("{prefix}.conv"), 2, 1, 7),
        }
    }

    pub fn init<R: Rng>(&self, store: &mut ParamStore, rng: &mut R) {
        self.conv.init(store, rng);
    }

    /// The `(N, 1, H, W)` spatial mask.
    pub fn attention(&self, tape: &mut Tape, x: Var) -> Result<Var> {
        let mean = tape.channel_mean(x);
        let max = tape.channel_max(x);
        let pooled = tape.concat(mean, max)?;
        let s = self.conv.forward(tape, pooled)?;
        Ok(tape.sigmoid(s))
    }

    pub fn forward(&self, tape: &mut Tape, x: Var) -> Result<Var> {
        let s = self.attention(tape, x)?;
        tape.mul(x, s)
    }
}

#[derive(Clone, Debug)]
pub struct Cbam {
    pub channel: ChannelGate,
    pub spatial: SpatialGate,
}

impl Cbam {
    pub fn new(prefix: &str, channels: usize, ratio: usize) -> Result<Self> {
        Ok(Cbam {
            channel: ChannelGate::new(&format!("{prefix}.channel"), channels, ratio)?,
            spatial: SpatialGate::new(&format!("{prefix}.spatial")),
        })
    }

    pub fn init<R: Rng>(&self, store: &mut ParamStore, rng: &mut R) {
        self.channel.init(store, rng);
        self.spatial.init(store, rng);
    }

    pub fn forward(&self, tape: &mut Tape, x: Var) -> Result<Var> {
        let y = self.channel.forward(tape, x)?;
        self.spatial.forward(tape, y)
    }
}

/// Applies `cbam` when present; an absent module is the identity (ablation switch).
pub fn maybe_cbam(cbam: Option<&Cbam>, tape: &mut Tape, x: Var) -> Result<Var> {
    match cbam {
        Some(c) => c.forward(tape, x),
        None => Ok(x),
    }
}
