//! The full two-branch network: encoders, per-stage gated fusion, decoder.

use ndarray::{s, Array2};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::autograd::{ParamStore, Tape};
use crate::backbone::{check_input_side, BackboneConfig, BackboneKind, PyramidEncoder, ToyPyramid};
use crate::decoder::{Ablation, Decoder, DecoderOutput, PredictionBundle};
use crate::error::{shape_err, Error, Result};
use crate::fusion::PyramidFusion;
use crate::nn::replicate_channels;
use crate::tensor::Tensor;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelConfig {
    pub backbone: BackboneConfig,
    /// Uniform decoder / fusion width `C`.
    pub width: usize,
    pub cbam_ratio: usize,
    pub ablation: Ablation,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            backbone: BackboneConfig::default(),
            width: 16,
            cbam_ratio: 4,
            ablation: Ablation::Full,
        }
    }
}

pub struct SwNet {
    pub cfg: ModelConfig,
    rgb_encoder: Box<dyn PyramidEncoder>,
    nir_encoder: Box<dyn PyramidEncoder>,
    fusion: PyramidFusion,
    decoder: Decoder,
}

impl std::fmt::Debug for SwNet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SwNet").field("cfg", &self.cfg).finish_non_exhaustive()
    }
}

impl SwNet {
    /// Builds the network with two independent toy pyramid encoders.
    pub fn new(cfg: ModelConfig) -> Result<Self> {
        match cfg.backbone.kind {
            BackboneKind::ToyPyramid => {
                let rgb = ToyPyramid::new("encoder_rgb", &cfg.backbone)?;
                let nir = ToyPyramid::new("encoder_nir", &cfg.backbone)?;
                Self::with_encoders(cfg, Box::new(rgb), Box::new(nir))
            }
            BackboneKind::ExternalPyramid => Err(Error::Config(
                "external_pyramid backbones must be supplied through SwNet::with_encoders".into(),
            )),
        }
    }

    pub fn with_encoders(
        cfg: ModelConfig,
        rgb_encoder: Box<dyn PyramidEncoder>,
        nir_encoder: Box<dyn PyramidEncoder>,
    ) -> Result<Self> {
        if cfg.width == 0 {
            return Err(Error::Config("decoder width must be positive".into()));
        }
        let ratio = cfg.ablation.uses_cbam().then_some(cfg.cbam_ratio);
        let fusion = PyramidFusion::new(
            "fusion",
            rgb_encoder.channels(),
            nir_encoder.channels(),
            cfg.width,
            ratio,
        )?;
        let decoder = Decoder::new("decoder", cfg.width, cfg.ablation.uses_edge());
        Ok(SwNet {
            cfg,
            rgb_encoder,
            nir_encoder,
            fusion,
            decoder,
        })
    }

    /// Freshly initialised parameters, deterministic in `seed`.
    pub fn init(&self, seed: u64) -> ParamStore {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut store = ParamStore::new();
        self.rgb_encoder.init(&mut store, &mut rng);
        self.nir_encoder.init(&mut store, &mut rng);
        self.fusion.init(&mut store, &mut rng);
        self.decoder.init(&mut store, &mut rng);
        store
    }

    pub fn fusion(&self) -> &PyramidFusion {
        &self.fusion
    }

    /// Records one forward pass. Both inputs are `(N, 3, H, W)`.
    pub fn forward(&self, tape: &mut Tape, rgb: &Tensor, nir: &Tensor) -> Result<DecoderOutput> {
        let (n, c, h, w) = rgb.dim();
        if nir.dim() != (n, c, h, w) || c != 3 {
            return Err(shape_err!(
                "network inputs must both be (N, 3, H, W), got {:?} and {:?}",
                rgb.dim(),
                nir.dim()
            ));
        }
        check_input_side(h, w)?;
        let x_rgb = tape.leaf(rgb.clone());
        let x_nir = tape.leaf(nir.clone());
        let p_rgb = self.rgb_encoder.encode(tape, x_rgb)?;
        let p_nir = self.nir_encoder.encode(tape, x_nir)?;
        let fused = self.fusion.forward(tape, &p_rgb, &p_nir)?;
        self.decoder.forward(tape, &fused, h, w)
    }

    /// Inference on a batch; a single-channel NIR input is replicated to three channels.
    pub fn predict(&self, store: &ParamStore, rgb: &Tensor, nir: &Tensor) -> Result<Vec<PredictionBundle>> {
        let nir = if nir.dim().1 == 1 {
            replicate_channels(nir, 3)
        } else {
            nir.clone()
        };
        let mut tape = Tape::with_params(store);
        let out = self.forward(&mut tape, rgb, &nir)?;
        Ok((0..rgb.dim().0)
            .map(|i| {
                let plane = |v| -> Array2<f64> { tape.value(v).slice(s![i, 0, .., ..]).to_owned() };
                let masks = out.masks.iter().map(|&m| plane(m)).collect();
                PredictionBundle::from_logits(masks, out.edge.map(plane))
            })
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(ablation: Ablation) -> SwNet {
        SwNet::new(ModelConfig {
            backbone: BackboneConfig {
                channels: [4, 8, 8, 8],
                ..Default::default()
            },
            width: 8,
            cbam_ratio: 4,
            ablation,
        })
        .unwrap()
    }

    fn input(c: usize, seed: u64) -> Tensor {
        Tensor::from_shape_fn((2, c, 32, 32), |(n, ch, y, x)| {
            (((n * 7 + ch * 3 + y * 5 + x) as f64 + seed as f64) * 0.37).sin() * 0.5 + 0.5
        })
    }

    #[test]
    fn bundle_shapes_and_ranges() {
        let net = small(Ablation::Full);
        let store = net.init(3);
        let out = net.predict(&store, &input(3, 0), &input(1, 1)).unwrap();
        assert_eq!(out.len(), 2);
        for b in &out {
            assert_eq!(b.masks.len(), 4);
            assert!(b.masks.iter().all(|m| m.dim() == (32, 32)));
            assert_eq!(b.edge.as_ref().unwrap().dim(), (32, 32));
            assert!(b.final_map.iter().all(|&v| (0.0..=1.0).contains(&v)));
        }
    }

    #[test]
    fn cbam_only_has_no_edge_branch() {
        let net = small(Ablation::CbamOnly);
        let store = net.init(3);
        assert!(store.names().all(|n| !n.contains("edge_head")));
        let out = net.predict(&store, &input(3, 0), &input(1, 1)).unwrap();
        assert!(out[0].edge.is_none());
        assert_eq!(out[0].final_map, out[0].mask_probability());
    }

    #[test]
    fn edge_only_has_no_cbam_params() {
        let net = small(Ablation::EdgeOnly);
        let store = net.init(3);
        assert!(store.names().all(|n| !n.contains("cbam")));
        assert!(store.names().any(|n| n.contains("edge_head")));
    }

    #[test]
    fn external_backbone_requires_encoders() {
        let cfg = ModelConfig {
            backbone: BackboneConfig {
                kind: BackboneKind::ExternalPyramid,
                ..Default::default()
            },
            ..Default::default()
        };
        assert!(SwNet::new(cfg).is_err());
    }

    #[test]
    fn branches_do_not_share_parameters() {
        let net = small(Ablation::Full);
        let store = net.init(5);
        let rgb = input(3, 0);
        let nir = replicate_channels(&input(1, 2), 3);
        let stage1 = |store: &ParamStore| {
            let mut tape = Tape::with_params(store);
            let x_rgb = tape.leaf(rgb.clone());
            let x_nir = tape.leaf(nir.clone());
            let a = net.rgb_encoder.encode(&mut tape, x_rgb).unwrap();
            let b = net.nir_encoder.encode(&mut tape, x_nir).unwrap();
            (tape.value(a.stages[3]).clone(), tape.value(b.stages[3]).clone())
        };
        let (rgb0, nir0) = stage1(&store);
        let mut perturbed = store.clone();
        *perturbed.get_mut("encoder_rgb.stage1.down.weight").unwrap() += 0.5;
        let (rgb1, nir1) = stage1(&perturbed);
        assert_ne!(rgb0, rgb1);
        assert_eq!(nir0, nir1);
    }
}
