//! Progressive decoder with deep-supervision heads, the edge head and
//! boundary refinement of the averaged mask.

use ndarray::Array2;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::autograd::{sigmoid, ParamStore, Tape, Var};
use crate::blocks::LEAKY_SLOPE;
use crate::error::{shape_err, Result};
use crate::nn::Conv2d;

/// Which enhancement modules are active.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Ablation {
    /// CBAM in fusion, edge head, edge loss and refinement.
    #[default]
    Full,
    /// CBAM replaced by identity; edge branch kept.
    EdgeOnly,
    /// Edge head, edge loss and refinement removed; CBAM kept.
    CbamOnly,
}

impl Ablation {
    pub fn uses_cbam(self) -> bool {
        !matches!(self, Ablation::EdgeOnly)
    }

    pub fn uses_edge(self) -> bool {
        !matches!(self, Ablation::CbamOnly)
    }

    pub fn label(self) -> &'static str {
        match self {
            Ablation::Full => "Edge + CBAM",
            Ablation::EdgeOnly => "only Edge",
            Ablation::CbamOnly => "only CBAM",
        }
    }
}

impl std::str::FromStr for Ablation {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "full" => Ok(Ablation::Full),
            "edge_only" => Ok(Ablation::EdgeOnly),
            "cbam_only" => Ok(Ablation::CbamOnly),
            other => Err(format!("unknown ablation `{other}` (full|edge_only|cbam_only)")),
        }
    }
}

/// `Smooth(Concat(BilinearUp2(x), skip))` with `Smooth` = two 3x3 convs + LeakyReLU.
#[derive(Clone, Debug)]
pub struct DecoderBlock {
    pub width: usize,
    smooth_in: Conv2d,
    smooth_out: Conv2d,
}

impl DecoderBlock {
    pub fn new(prefix: &str, width: usize) -> Self {
        DecoderBlock {
            width,
            smooth_in: Conv2d::new(format!("{prefix}.smooth_in"), 2 * width, width, 3),
            smooth_out: Conv2d::new(format!("{prefix}.smooth_out"), width, width, 3),
        }
    }

    pub fn init<R: Rng>(&self, store: &mut ParamStore, rng: &mut R) {
        self.smooth_in.init(store, rng);
        self.smooth_out.init(store, rng);
    }

    pub fn forward(&self, tape: &mut Tape, x: Var, skip: Var) -> Result<Var> {
        let (n, c, h, w) = tape.shape(x);
        let (sn, sc, sh, sw) = tape.shape(skip);
        if n != sn || c != self.width || sc != self.width || (sh, sw) != (2 * h, 2 * w) {
            return Err(shape_err!(
                "decoder block expects x (C={}) at half the skip resolution, got {:?} and {:?}",
                self.width,
                (n, c, h, w),
                (sn, sc, sh, sw)
            ));
        }
        let up = tape.resize(x, sh, sw);
        let cat = tape.concat(up, skip)?;
        let y = self.smooth_in.forward(tape, cat)?;
        let y = tape.leaky_relu(y, LEAKY_SLOPE);
        let y = self.smooth_out.forward(tape, y)?;
        Ok(tape.leaky_relu(y, LEAKY_SLOPE))
    }
}

/// `Smooth(BilinearUp2(x))`: the last stage, lifting the stride-4 feature to half
/// the input resolution without a skip connection.
#[derive(Clone, Debug)]
pub struct RefineStage {
    pub width: usize,
    smooth_in: Conv2d,
    smooth_out: Conv2d,
}

impl RefineStage {
    pub fn new(prefix: &str, width: usize) -> Self {
        RefineStage {
            width,
            smooth_in: Conv2d::new(format!("{prefix}.smooth_in"), width, width, 3),
            smooth_out: Conv2d::new(format!("{prefix}.smooth_out"), width, width, 3),
        }
    }

    pub fn init<R: Rng>(&self, store: &mut ParamStore, rng: &mut R) {
        self.smooth_in.init(store, rng);
        self.smooth_out.init(store, rng);
    }

    pub fn forward(&self, tape: &mut Tape, x: Var) -> Result<Var> {
        let (_, c, h, w) = tape.shape(x);
        if c != self.width {
            return Err(shape_err!("refine stage expects C={}, got {c}", self.width));
        }
        let up = tape.resize(x, 2 * h, 2 * w);
        let y = self.smooth_in.forward(tape, up)?;
        let y = tape.leaky_relu(y, LEAKY_SLOPE);
        let y = self.smooth_out.forward(tape, y)?;
        Ok(tape.leaky_relu(y, LEAKY_SLOPE))
    }
}

/// Logit maps at full input resolution, as recorded on the tape.
#[derive(Clone, Copy, Debug)]
pub struct DecoderOutput {
    /// Deep-supervision mask logits, coarsest tap first.
    pub masks: [Var; 4],
    pub edge: Option<Var>,
}

#[derive(Clone, Debug)]
pub struct Decoder {
    pub width: usize,
    blocks: Vec<DecoderBlock>,
    refine: RefineStage,
    seg_heads: Vec<Conv2d>,
    edge_head: Option<Conv2d>,
}

impl Decoder {
    pub fn new(prefix: &str, width: usize, with_edge: bool) -> Self {
        Decoder {
            width,
            blocks: (0..3)
                .map(|i| DecoderBlock::new(&format!("{prefix}.block{i}"), width))
                .collect(),
            refine: RefineStage::new(&format!("{prefix}.refine"), width),
            seg_heads: (0..4)
                .map(|i| Conv2d::new(format!("{prefix}.seg_head{i}"), width, 1, 1))
                .collect(),
            edge_head: with_edge.then(|| Conv2d::new(format!("{prefix}.edge_head"), width, 1, 1)),
        }
    }

    pub fn init<R: Rng>(&self, store: &mut ParamStore, rng: &mut R) {
        for b in &self.blocks {
            b.init(store, rng);
        }
        self.refine.init(store, rng);
        for h in &self.seg_heads {
            h.init(store, rng);
        }
        if let Some(e) = &self.edge_head {
            e.init(store, rng);
        }
    }

    /// Decodes from the deepest fused map. Taps are the three block outputs
    /// (strides 16, 8, 4) and the refine stage (stride 2), which also feeds the edge head.
    pub fn forward(&self, tape: &mut Tape, fused: &[Var; 4], out_h: usize, out_w: usize) -> Result<DecoderOutput> {
        let mut taps = [fused[3]; 4];
        let mut x = fused[3];
        for (i, block) in self.blocks.iter().enumerate() {
            x = block.forward(tape, x, fused[2 - i])?;
            taps[i] = x;
        }
        x = self.refine.forward(tape, x)?;
        taps[3] = x;
        let mut masks = taps;
        for (m, (tap, head)) in masks.iter_mut().zip(taps.iter().zip(&self.seg_heads)) {
            let logits = head.forward(tape, *tap)?;
            *m = tape.resize(logits, out_h, out_w);
        }
        let edge = match &self.edge_head {
            Some(head) => {
                let logits = head.forward(tape, x)?;
                Some(tape.resize(logits, out_h, out_w))
            }
            None => None,
        };
        Ok(DecoderOutput { masks, edge })
    }
}

/// `clamp(mask · (1 + sigmoid(edge)), 0, 1)`; without edge logits the mask passes through.
pub fn refine(mask: &Array2<f64>, edge_logits: Option<&Array2<f64>>) -> Array2<f64> {
    match edge_logits {
        Some(e) => {
            let mut out = mask.clone();
            out.zip_mut_with(e, |m, &e| *m = (*m * (1.0 + sigmoid(e))).clamp(0.0, 1.0));
            out
        }
        None => mask.clone(),
    }
}

/// Predictions for one sample.
#[derive(Clone, Debug, PartialEq)]
pub struct PredictionBundle {
    /// Four mask logit maps at input resolution.
    pub masks: Vec<Array2<f64>>,
    /// Edge logit map at input resolution, absent when the edge branch is ablated.
    pub edge: Option<Array2<f64>>,
    /// Refined probability map in `[0, 1]`.
    pub final_map: Array2<f64>,
}

impl PredictionBundle {
    pub fn from_logits(masks: Vec<Array2<f64>>, edge: Option<Array2<f64>>) -> Self {
        let mean = mean_probability(&masks);
        let final_map = refine(&mean, edge.as_ref());
        PredictionBundle {
            masks,
            edge,
            final_map,
        }
    }

    /// `mean_i sigmoid(P_i)`.
    pub fn mask_probability(&self) -> Array2<f64> {
        mean_probability(&self.masks)
    }
}

fn mean_probability(masks: &[Array2<f64>]) -> Array2<f64> {
    let mut acc = Array2::<f64>::zeros(masks[0].dim());
    for m in masks {
        acc.zip_mut_with(m, |a, &l| *a += sigmoid(l));
    }
    acc / masks.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::Tensor;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn block_shape_contract() {
        let b = DecoderBlock::new("d", 4);
        let mut store = ParamStore::new();
        b.init(&mut store, &mut ChaCha8Rng::seed_from_u64(1));
        let mut tape = Tape::with_params(&store);
        let x = tape.leaf(Tensor::zeros((1, 4, 13, 13)));
        let skip = tape.leaf(Tensor::zeros((1, 4, 26, 26)));
        let y = b.forward(&mut tape, x, skip).unwrap();
        assert_eq!(tape.shape(y), (1, 4, 26, 26));
        let bad = tape.leaf(Tensor::zeros((1, 4, 20, 20)));
        assert!(b.forward(&mut tape, x, bad).is_err());
    }

    #[test]
    fn zero_block_outputs_zero() {
        let b = DecoderBlock::new("d", 4);
        let mut store = ParamStore::new();
        b.init(&mut store, &mut ChaCha8Rng::seed_from_u64(1));
        store.zero_all();
        let mut tape = Tape::with_params(&store);
        let x = tape.leaf(Tensor::from_elem((1, 4, 4, 4), 2.5));
        let skip = tape.leaf(Tensor::from_elem((1, 4, 8, 8), -1.0));
        let y = b.forward(&mut tape, x, skip).unwrap();
        assert!(tape.value(y).iter().all(|&v| v == 0.0));
    }

    fn probs() -> Array2<f64> {
        Array2::from_shape_fn((5, 5), |(i, j)| ((i * 5 + j) as f64) / 24.0)
    }

    #[test]
    fn refinement_is_noop_when_edge_saturates_low() {
        let m = probs();
        let e = Array2::from_elem((5, 5), -1e4);
        let out = refine(&m, Some(&e));
        for (a, b) in out.iter().zip(m.iter()) {
            assert!((a - b).abs() < 1e-7);
        }
    }

    #[test]
    fn zero_edge_scales_by_one_and_a_half() {
        let m = probs();
        let out = refine(&m, Some(&Array2::zeros((5, 5))));
        for (a, b) in out.iter().zip(m.iter()) {
            assert!((a - (1.5 * b).min(1.0)).abs() < 1e-15);
        }
    }

    #[test]
    fn zero_mask_annihilates() {
        let e = Array2::from_shape_fn((5, 5), |(i, j)| i as f64 - j as f64 * 3.0);
        let out = refine(&Array2::zeros((5, 5)), Some(&e));
        assert!(out.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn refined_never_below_mask() {
        let m = probs();
        let e = Array2::from_shape_fn((5, 5), |(i, j)| (i as f64 - 2.0) * (j as f64 - 1.0));
        let out = refine(&m, Some(&e));
        for (a, b) in out.iter().zip(m.iter()) {
            assert!(a >= b);
        }
    }

    #[test]
    fn ablation_parses() {
        assert_eq!("edge_only".parse::<Ablation>().unwrap(), Ablation::EdgeOnly);
        assert!("both".parse::<Ablation>().is_err());
        assert!(!Ablation::EdgeOnly.uses_cbam());
        assert!(!Ablation::CbamOnly.uses_edge());
    }
}
