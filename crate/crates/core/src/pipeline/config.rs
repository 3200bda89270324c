use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::data::{SynthConfig, DEFAULT_EDGE_WINDOW};
use crate::error::{Error, Result};
use crate::losses::BoundaryWeighting;
use crate::model::ModelConfig;

/// What each encoder branch is fed.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InputModality {
    /// RGB into the RGB branch, NIR into the NIR branch.
    #[default]
    Both,
    /// RGB into both branches.
    RgbOnly,
    /// NIR into both branches.
    NirOnly,
}

impl std::str::FromStr for InputModality {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "both" => Ok(InputModality::Both),
            "rgb_only" => Ok(InputModality::RgbOnly),
            "nir_only" => Ok(InputModality::NirOnly),
            other => Err(format!("unknown modality `{other}` (both|rgb_only|nir_only)")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DataSource {
    /// A dataset root in the `rgb/ nir/ mask/` layout, split 80/20 by sorted id.
    Disk { path: PathBuf },
    /// Generated in memory; the first 80% of indices train, the rest test.
    Synthetic(SynthConfig),
}

impl Default for DataSource {
    fn default() -> Self {
        DataSource::Synthetic(SynthConfig::default())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OptimizerConfig {
    pub lr: f64,
    /// The cosine schedule ends at `lr · floor_ratio`.
    pub floor_ratio: f64,
    pub weight_decay: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            lr: 3e-3,
            floor_ratio: 0.01,
            weight_decay: 1e-4,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

impl OptimizerConfig {
    /// The full-scale setting: lr 1e-4.
    pub fn full_scale() -> Self {
        OptimizerConfig {
            lr: 1e-4,
            ..Default::default()
        }
    }
}

/// Every knob of a run. Defaults are the desk-scale setting.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub seed: u64,
    pub input_side: usize,
    pub batch_size: usize,
    pub epochs: usize,
    pub optimizer: OptimizerConfig,
    pub model: ModelConfig,
    pub edge_window: usize,
    pub boundary: BoundaryWeighting,
    pub modality: InputModality,
    pub data: DataSource,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 0,
            input_side: 64,
            batch_size: 4,
            epochs: 20,
            optimizer: OptimizerConfig::default(),
            model: ModelConfig::default(),
            edge_window: DEFAULT_EDGE_WINDOW,
            boundary: BoundaryWeighting::default(),
            modality: InputModality::Both,
            data: DataSource::default(),
        }
    }
}

impl RunConfig {
    /// Full-scale values: 416 px, batch 10, 200 epochs, lr 1e-4, PVT-like widths.
    pub fn full_scale() -> Self {
        let mut cfg = RunConfig {
            input_side: 416,
            batch_size: 10,
            epochs: 200,
            optimizer: OptimizerConfig::full_scale(),
            ..Default::default()
        };
        cfg.model.backbone = crate::backbone::BackboneConfig::pvt_like();
        cfg.model.width = 64;
        cfg
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.input_side == 0 || self.input_side % 32 != 0 {
            return bad(format!("input_side must be a positive multiple of 32, got {}", self.input_side));
        }
        if self.batch_size == 0 || self.epochs == 0 {
            return bad("batch_size and epochs must be positive".into());
        }
        let o = &self.optimizer;
        if !(o.lr > 0.0) || !(o.floor_ratio >= 0.0 && o.floor_ratio <= 1.0) || !(o.weight_decay >= 0.0) {
            return bad("lr must be positive, floor_ratio in [0, 1], weight_decay non-negative".into());
        }
        if !(0.0..1.0).contains(&o.beta1) || !(0.0..1.0).contains(&o.beta2) || !(o.eps > 0.0) {
            return bad("adam betas must lie in [0, 1) and eps be positive".into());
        }
        if self.edge_window % 2 == 0 {
            return bad(format!("edge_window must be odd, got {}", self.edge_window));
        }
        if self.model.width == 0 || self.model.cbam_ratio == 0 {
            return bad("model width and cbam_ratio must be positive".into());
        }
        self.model.backbone.validate()?;
        if let DataSource::Synthetic(s) = &self.data {
            s.validate()?;
        }
        Ok(())
    }

    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }
}
