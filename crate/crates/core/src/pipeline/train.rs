use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use ndarray::{s, Array2};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::autograd::{ParamStore, Tape};
use crate::data::{self, BimodalSample, Split};
use crate::error::{Error, Result};
use crate::losses::{total_loss, LossBreakdown};
use crate::metrics::{evaluate_samples, DatasetEvaluation};
use crate::model::SwNet;
use crate::nn::replicate_channels;
use crate::pipeline::checkpoint::{Checkpoint, RngState};
use crate::pipeline::config::{DataSource, InputModality, RunConfig};
use crate::pipeline::optim::{cosine_lr, AdamW};
use crate::tensor::Tensor;

/// Stream of the data-order generator, kept apart from parameter initialisation.
const ORDER_STREAM: u64 = 1;

/// Forces a single rayon worker when `SWNET_DETERMINISTIC=1`.
pub fn configure_threads() {
    if std::env::var("SWNET_DETERMINISTIC").is_ok_and(|v| v == "1") {
        // Fails only if a pool already exists, in which case nothing can be done.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(1).build_global();
    }
}

/// `(rgb, nir)` network inputs, both `(N, 3, H, W)`, according to `modality`.
pub fn network_inputs(samples: &[&BimodalSample], modality: InputModality) -> Result<(Tensor, Tensor)> {
    let first = samples
        .first()
        .ok_or_else(|| Error::Data("empty batch".into()))?;
    let (h, w) = first.side();
    let n = samples.len();
    let mut rgb = Tensor::zeros((n, 3, h, w));
    let mut nir = Tensor::zeros((n, 1, h, w));
    for (i, s) in samples.iter().enumerate() {
        if s.side() != (h, w) {
            return Err(Error::Shape(format!("batch mixes sizes: {} is {:?}, expected {:?}", s.id, s.side(), (h, w))));
        }
        rgb.slice_mut(s![i, .., .., ..]).assign(&s.rgb);
        nir.slice_mut(s![i, 0, .., ..]).assign(&s.nir);
    }
    let nir = replicate_channels(&nir, 3);
    Ok(match modality {
        InputModality::Both => (rgb, nir),
        InputModality::RgbOnly => (rgb.clone(), rgb),
        InputModality::NirOnly => (nir.clone(), nir),
    })
}

/// Mean loss over the batch and the gradient of that mean for every parameter.
pub fn batch_loss_and_grads(
    net: &SwNet,
    params: &ParamStore,
    batch: &[&BimodalSample],
    cfg: &RunConfig,
) -> Result<(LossBreakdown, BTreeMap<String, Tensor>)> {
    let (rgb, nir) = network_inputs(batch, cfg.modality)?;
    let mut tape = Tape::with_params(params);
    let out = net.forward(&mut tape, &rgb, &nir)?;
    let n = batch.len();
    let (_, _, h, w) = rgb.dim();
    let mut mask_grads: Vec<Tensor> = (0..4).map(|_| Tensor::zeros((n, 1, h, w))).collect();
    let mut edge_grad = out.edge.map(|_| Tensor::zeros((n, 1, h, w)));
    let mut parts = Vec::with_capacity(n);
    for (i, s) in batch.iter().enumerate() {
        let gt = s.mask.mapv(f64::from);
        let edge_gt: Array2<f64> = match &s.edge {
            Some(e) => e.mapv(f64::from),
            None => data::derive_edge_gt(&s.mask, cfg.edge_window)?.mapv(f64::from),
        };
        let masks: Vec<_> = out.masks.iter().map(|&m| tape.value(m).slice(s![i, 0, .., ..])).collect();
        let edge = out.edge.map(|e| tape.value(e).slice(s![i, 0, .., ..]));
        let (b, g) = total_loss(&masks, edge, gt.view(), edge_gt.view(), cfg.boundary)?;
        for (acc, gi) in mask_grads.iter_mut().zip(&g.masks) {
            acc.slice_mut(s![i, 0, .., ..]).assign(&(gi / n as f64));
        }
        if let (Some(acc), Some(ge)) = (edge_grad.as_mut(), &g.edge) {
            acc.slice_mut(s![i, 0, .., ..]).assign(&(ge / n as f64));
        }
        parts.push(b);
    }
    let breakdown = LossBreakdown::mean(&parts);
    let mut local: Vec<_> = out.masks.iter().copied().zip(mask_grads).collect();
    if let (Some(e), Some(g)) = (out.edge, edge_grad) {
        local.push((e, g));
    }
    let root = tape.fused_scalar(breakdown.total, local)?;
    let grads = tape.backward(root)?.param_grads(params);
    Ok((breakdown, grads))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepLog {
    pub epoch: usize,
    pub step: u64,
    pub lr: f64,
    pub ids: Vec<String>,
    pub loss: LossBreakdown,
}

/// Train and test samples for `cfg`, resized to the input side, edges attached.
pub fn prepare_data(cfg: &RunConfig) -> Result<(Vec<BimodalSample>, Vec<BimodalSample>)> {
    let k = cfg.edge_window;
    let (train, test) = match &cfg.data {
        DataSource::Synthetic(s) => {
            let mut all = data::synthesize(s)?;
            let test = all.split_off(data::train_count(all.len()));
            (all, test)
        }
        DataSource::Disk { path } => (
            data::load_dataset(path, Split::Train)?.load_samples(k)?,
            data::load_dataset(path, Split::Test)?.load_samples(k)?,
        ),
    };
    let fit = |v: Vec<BimodalSample>| -> Result<Vec<BimodalSample>> {
        v.iter().map(|s| data::resize_sample(&s.clone().with_edge(k)?, cfg.input_side, k)).collect()
    };
    Ok((fit(train)?, fit(test)?))
}

/// Owns the parameters, the optimizer and the data order of one run.
pub struct Trainer {
    pub cfg: RunConfig,
    pub net: SwNet,
    pub params: ParamStore,
    pub optimizer: AdamW,
    /// Completed epochs.
    pub epoch: usize,
    pub global_step: u64,
    order_rng: ChaCha8Rng,
    train: Vec<BimodalSample>,
}

impl Trainer {
    pub fn new(cfg: RunConfig, train: Vec<BimodalSample>) -> Result<Self> {
        cfg.validate()?;
        if train.is_empty() {
            return Err(Error::Data("no training samples".into()));
        }
        let net = SwNet::new(cfg.model.clone())?;
        let params = net.init(cfg.seed);
        let optimizer = AdamW::new(cfg.optimizer.clone(), &params);
        let mut order_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        order_rng.set_stream(ORDER_STREAM);
        Ok(Trainer {
            cfg,
            net,
            params,
            optimizer,
            epoch: 0,
            global_step: 0,
            order_rng,
            train,
        })
    }

    pub fn from_checkpoint(ck: Checkpoint, train: Vec<BimodalSample>) -> Result<Self> {
        let net = SwNet::new(ck.config.model.clone())?;
        net.init(ck.config.seed).check_compatible(&ck.params)?;
        let mut order_rng = ChaCha8Rng::seed_from_u64(ck.rng.seed);
        order_rng.set_stream(ck.rng.stream);
        let pos: u128 = ck
            .rng
            .word_pos
            .parse()
            .map_err(|_| Error::Checkpoint(format!("bad rng position {}", ck.rng.word_pos)))?;
        order_rng.set_word_pos(pos);
        Ok(Trainer {
            cfg: ck.config,
            net,
            params: ck.params,
            optimizer: ck.optimizer,
            epoch: ck.epoch,
            global_step: ck.global_step,
            order_rng,
            train,
        })
    }

    pub fn checkpoint(&self) -> Checkpoint {
        Checkpoint {
            config: self.cfg.clone(),
            epoch: self.epoch,
            global_step: self.global_step,
            params: self.params.clone(),
            optimizer: self.optimizer.clone(),
            rng: RngState {
                seed: self.cfg.seed,
                stream: ORDER_STREAM,
                word_pos: self.order_rng.get_word_pos().to_string(),
            },
        }
    }

    pub fn current_lr(&self) -> f64 {
        let o = &self.cfg.optimizer;
        cosine_lr(o.lr, o.floor_ratio, self.epoch, self.cfg.epochs)
    }

    /// One optimizer step on `batch` at learning rate `lr`.
    pub fn step(&mut self, batch: &[&BimodalSample], lr: f64) -> Result<LossBreakdown> {
        let (loss, grads) = batch_loss_and_grads(&self.net, &self.params, batch, &self.cfg)?;
        if !loss.total.is_finite() || grads.values().any(|g| g.iter().any(|v| !v.is_finite())) {
            return Err(Error::NonFinite {
                epoch: self.epoch,
                step: self.global_step as usize,
                ids: batch.iter().map(|s| s.id.clone()).collect(),
            });
        }
        self.optimizer.update(&mut self.params, &grads, lr)?;
        self.global_step += 1;
        Ok(loss)
    }

    /// One pass over the shuffled training set.
    pub fn run_epoch(&mut self) -> Result<Vec<StepLog>> {
        let lr = self.current_lr();
        let mut order: Vec<usize> = (0..self.train.len()).collect();
        order.shuffle(&mut self.order_rng);
        let train = std::mem::take(&mut self.train);
        let result = (|| {
            let mut logs = Vec::new();
            for chunk in order.chunks(self.cfg.batch_size) {
                let batch: Vec<&BimodalSample> = chunk.iter().map(|&i| &train[i]).collect();
                let loss = self.step(&batch, lr)?;
                logs.push(StepLog {
                    epoch: self.epoch,
                    step: self.global_step,
                    lr,
                    ids: batch.iter().map(|s| s.id.clone()).collect(),
                    loss,
                });
            }
            Ok(logs)
        })();
        self.train = train;
        self.epoch += 1;
        result
    }

    /// Runs the remaining epochs. With `out`, appends JSON lines to
    /// `train_log.jsonl` and writes `checkpoints/epoch_NNN.ckpt` after every epoch;
    /// a non-finite loss also leaves `nonfinite_batch.json` there.
    pub fn fit(&mut self, out: Option<&Path>) -> Result<Vec<StepLog>> {
        let mut all = Vec::new();
        let mut log = match out {
            Some(dir) => {
                std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
                let path = dir.join("train_log.jsonl");
                let f = std::fs::OpenOptions::new()
                    .create(true)
                    .append(true)
                    .open(&path)
                    .map_err(|e| Error::io(&path, e))?;
                Some((path, f))
            }
            None => None,
        };
        while self.epoch < self.cfg.epochs {
            let logs = match self.run_epoch() {
                Ok(l) => l,
                Err(Error::NonFinite { epoch, step, ids }) => {
                    if let Some(dir) = out {
                        let path = dir.join("nonfinite_batch.json");
                        let dump = serde_json::json!({ "epoch": epoch, "step": step, "ids": ids });
                        std::fs::write(&path, serde_json::to_string_pretty(&dump)?).map_err(|e| Error::io(&path, e))?;
                    }
                    return Err(Error::NonFinite { epoch, step, ids });
                }
                Err(e) => return Err(e),
            };
            if let Some((path, f)) = log.as_mut() {
                for l in &logs {
                    writeln!(f, "{}", serde_json::to_string(l)?).map_err(|e| Error::io(path.as_path(), e))?;
                }
            }
            if let Some(dir) = out {
                self.checkpoint().save(&checkpoint_path(dir, self.epoch))?;
            }
            if let Some(last) = logs.last() {
                log::info!("epoch {} done, loss {:.5}", self.epoch, last.loss.total);
            }
            all.extend(logs);
        }
        Ok(all)
    }

    pub fn evaluate(&self, samples: &[BimodalSample]) -> Result<DatasetEvaluation> {
        evaluate_model(&self.net, &self.params, samples, &self.cfg)
    }
}

pub fn checkpoint_path(dir: &Path, epoch: usize) -> PathBuf {
    dir.join("checkpoints").join(format!("epoch_{epoch:03}.ckpt"))
}

/// Final probability maps for `samples`, in order.
pub fn predict_samples(net: &SwNet, params: &ParamStore, samples: &[BimodalSample], cfg: &RunConfig) -> Result<Vec<Array2<f64>>> {
    let mut out = Vec::with_capacity(samples.len());
    for chunk in samples.chunks(cfg.batch_size.max(1)) {
        let refs: Vec<&BimodalSample> = chunk.iter().collect();
        let (rgb, nir) = network_inputs(&refs, cfg.modality)?;
        out.extend(net.predict(params, &rgb, &nir)?.into_iter().map(|b| b.final_map));
    }
    Ok(out)
}

/// Metrics of the refined maps against the sample masks.
pub fn evaluate_model(net: &SwNet, params: &ParamStore, samples: &[BimodalSample], cfg: &RunConfig) -> Result<DatasetEvaluation> {
    let preds = predict_samples(net, params, samples, cfg)?;
    let items: Vec<_> = samples
        .iter()
        .zip(preds)
        .map(|(s, p)| (s.id.clone(), p, s.mask.clone()))
        .collect();
    evaluate_samples(&items)
}
