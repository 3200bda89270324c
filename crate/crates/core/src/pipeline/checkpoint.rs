//! Single-file checkpoint container.
//!
//! Layout: the 8-byte magic `SWNETCKP`, a little-endian `u32` format version,
//! a `u64` header length, the JSON header, then every tensor as raw
//! little-endian `f64` in header order.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::autograd::ParamStore;
use crate::error::{Error, Result};
use crate::pipeline::config::RunConfig;
use crate::pipeline::optim::AdamW;
use crate::tensor::Tensor;

pub const MAGIC: &[u8; 8] = b"SWNETCKP";
pub const VERSION: u32 = 1;

/// Position of the data-order generator, enough to reconstruct it exactly.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RngState {
    pub seed: u64,
    pub stream: u64,
    /// `u128` word position, stored as a decimal string.
    pub word_pos: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct TensorEntry {
    group: String,
    name: String,
    shape: [usize; 4],
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct Header {
    config: RunConfig,
    /// Completed epochs.
    epoch: usize,
    /// Optimizer steps taken so far.
    global_step: u64,
    rng: RngState,
    tensors: Vec<TensorEntry>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub config: RunConfig,
    pub epoch: usize,
    pub global_step: u64,
    pub params: ParamStore,
    pub optimizer: AdamW,
    pub rng: RngState,
}

const GROUPS: [&str; 3] = ["param", "adam_m", "adam_v"];

impl Checkpoint {
    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let groups: [Vec<(&String, &Tensor)>; 3] = [
            self.params.iter().collect(),
            self.optimizer.m.iter().collect(),
            self.optimizer.v.iter().collect(),
        ];
        let mut tensors = Vec::new();
        for (g, items) in GROUPS.iter().zip(&groups) {
            for (name, t) in items {
                let (a, b, c, d) = t.dim();
                tensors.push(TensorEntry {
                    group: g.to_string(),
                    name: name.to_string(),
                    shape: [a, b, c, d],
                });
            }
        }
        let header = Header {
            config: self.config.clone(),
            epoch: self.epoch,
            global_step: self.global_step,
            rng: self.rng.clone(),
            tensors,
        };
        let json = serde_json::to_vec(&header)?;
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&(json.len() as u64).to_le_bytes());
        out.extend_from_slice(&json);
        for items in &groups {
            for (_, t) in items {
                for v in t.iter() {
                    out.extend_from_slice(&v.to_le_bytes());
                }
            }
        }
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let bad = |m: &str| Error::Checkpoint(m.to_string());
        let mut r = bytes;
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic).map_err(|_| bad("truncated header"))?;
        if &magic != MAGIC {
            return Err(bad("not a checkpoint (bad magic)"));
        }
        let mut u32b = [0u8; 4];
        r.read_exact(&mut u32b).map_err(|_| bad("truncated header"))?;
        let version = u32::from_le_bytes(u32b);
        if version != VERSION {
            return Err(Error::Checkpoint(format!("unsupported checkpoint version {version}")));
        }
        let mut u64b = [0u8; 8];
        r.read_exact(&mut u64b).map_err(|_| bad("truncated header"))?;
        let len = u64::from_le_bytes(u64b) as usize;
        if r.len() < len {
            return Err(bad("truncated header"));
        }
        let header: Header = serde_json::from_slice(&r[..len])?;
        r = &r[len..];
        let mut stores: [BTreeMap<String, Tensor>; 3] = Default::default();
        for e in &header.tensors {
            let gi = GROUPS
                .iter()
                .position(|g| *g == e.group)
                .ok_or_else(|| Error::Checkpoint(format!("unknown tensor group {}", e.group)))?;
            let n: usize = e.shape.iter().product();
            if r.len() < n * 8 {
                return Err(Error::Checkpoint(format!("truncated data for {}", e.name)));
            }
            let vals: Vec<f64> = r[..n * 8]
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
                .collect();
            r = &r[n * 8..];
            let [a, b, c, d] = e.shape;
            let t = Tensor::from_shape_vec((a, b, c, d), vals).map_err(|err| Error::Checkpoint(err.to_string()))?;
            stores[gi].insert(e.name.clone(), t);
        }
        if !r.is_empty() {
            return Err(bad("trailing bytes after tensor data"));
        }
        let [p, m, v] = stores;
        let mut params = ParamStore::new();
        for (k, t) in p {
            params.insert(k, t);
        }
        let optimizer = AdamW {
            cfg: header.config.optimizer.clone(),
            step: header.global_step,
            m,
            v,
        };
        Ok(Checkpoint {
            config: header.config,
            epoch: header.epoch,
            global_step: header.global_step,
            params,
            optimizer,
            rng: header.rng,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
        let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        f.write_all(&self.to_bytes()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }
}
