use std::path::{Path, PathBuf};

use image::RgbImage;
use ndarray::{Array2, Array3};

use crate::autograd::ParamStore;
use crate::data::{self, BimodalSample};
use crate::error::{Error, Result};
use crate::model::SwNet;
use crate::pipeline::checkpoint::Checkpoint;
use crate::pipeline::config::RunConfig;
use crate::pipeline::train::predict_samples;
use crate::tensor::{resize_bilinear, Tensor};

/// A network with parameters restored from a checkpoint.
pub struct LoadedModel {
    pub config: RunConfig,
    pub net: SwNet,
    pub params: ParamStore,
}

impl LoadedModel {
    /// Fails with the list of mismatched parameter names if the checkpoint
    /// does not fit the architecture its own config describes.
    pub fn from_checkpoint(ck: Checkpoint) -> Result<Self> {
        let net = SwNet::new(ck.config.model.clone())?;
        net.init(ck.config.seed).check_compatible(&ck.params)?;
        Ok(LoadedModel {
            config: ck.config,
            net,
            params: ck.params,
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_checkpoint(Checkpoint::load(path)?)
    }

    /// Refined probability map at the input's own resolution. `rgb` is `(3, H, W)`.
    pub fn predict(&self, rgb: &Array3<f64>, nir: &Array2<f64>) -> Result<Array2<f64>> {
        if rgb.iter().chain(nir.iter()).any(|v| !v.is_finite()) {
            return Err(Error::Data("input images contain non-finite values".into()));
        }
        let (h, w) = nir.dim();
        let s = BimodalSample::new("input", rgb.clone(), nir.clone(), Array2::zeros((h, w)))?;
        Ok(self.predict_samples(&[s])?.remove(0))
    }

    /// Refined maps for samples of any size, each returned at its original size.
    pub fn predict_samples(&self, samples: &[BimodalSample]) -> Result<Vec<Array2<f64>>> {
        let side = self.config.input_side;
        let k = self.config.edge_window;
        let resized = samples
            .iter()
            .map(|s| data::resize_sample(s, side, k))
            .collect::<Result<Vec<_>>>()?;
        let maps = predict_samples(&self.net, &self.params, &resized, &self.config)?;
        Ok(samples
            .iter()
            .zip(maps)
            .map(|(s, m)| {
                let (h, w) = s.side();
                let t = m.into_shape_with_order((1, 1, side, side)).expect("map is side x side");
                let back: Tensor = resize_bilinear(&t, h, w);
                back.into_shape_with_order((h, w))
                    .expect("resized map has the input size")
                    .mapv(|v| v.clamp(0.0, 1.0))
            })
            .collect())
    }
}

/// Error overlay: white true positive, black true negative, red false positive,
/// blue false negative; the prediction is binarised at 0.5.
pub fn overlay(pred: &Array2<f64>, gt: &Array2<u8>) -> RgbImage {
    let (h, w) = gt.dim();
    RgbImage::from_fn(w as u32, h as u32, |x, y| {
        let (i, j) = (y as usize, x as usize);
        match (pred[[i, j]] >= 0.5, gt[[i, j]] == 1) {
            (true, true) => image::Rgb([255, 255, 255]),
            (false, false) => image::Rgb([0, 0, 0]),
            (true, false) => image::Rgb([255, 0, 0]),
            (false, true) => image::Rgb([0, 0, 255]),
        }
    })
}

/// Samples for prediction: every id with both `rgb/` and `nir/` images. The
/// flag tells whether a ground-truth mask was found (otherwise the mask is empty).
pub fn load_inputs(dir: &Path) -> Result<Vec<(BimodalSample, bool)>> {
    let stems = |sub: &str| -> Result<Vec<String>> {
        let d = dir.join(sub);
        let mut v = Vec::new();
        if d.is_dir() {
            for e in std::fs::read_dir(&d).map_err(|e| Error::io(&d, e))? {
                let p = e.map_err(|e| Error::io(&d, e))?.path();
                if p.extension().is_some_and(|x| x.eq_ignore_ascii_case("png")) {
                    v.push(p.file_stem().unwrap().to_string_lossy().into_owned());
                }
            }
        }
        v.sort();
        Ok(v)
    };
    let rgb = stems("rgb")?;
    let nir = stems("nir")?;
    if let Some(id) = rgb.iter().find(|i| !nir.contains(i)).or_else(|| nir.iter().find(|i| !rgb.contains(i))) {
        return Err(Error::Data(format!("input `{id}` lacks its rgb/nir counterpart")));
    }
    if rgb.is_empty() {
        return Err(Error::Data(format!("no complete samples under {}", dir.display())));
    }
    rgb.iter()
        .map(|id| {
            let has_mask = data::sample_path(dir, "mask", id).is_file();
            if has_mask {
                return Ok((data::load_sample(dir, id)?, true));
            }
            let rgb = read_rgb(&data::sample_path(dir, "rgb", id))?;
            let nir = crate::metrics::read_gray(&data::sample_path(dir, "nir", id))?;
            let (h, w) = nir.dim();
            Ok((BimodalSample::new(id.clone(), rgb, nir, Array2::zeros((h, w)))?, false))
        })
        .collect()
}

fn read_rgb(path: &Path) -> Result<Array3<f64>> {
    let img = image::open(path)
        .map_err(|e| Error::Image {
            path: path.to_path_buf(),
            source: e,
        })?
        .to_rgb8();
    let (w, h) = img.dimensions();
    Ok(Array3::from_shape_fn((3, h as usize, w as usize), |(c, i, j)| {
        img.get_pixel(j as u32, i as u32)[c] as f64 / 255.0
    }))
}

/// Writes `<out>/<id>.png` for every input and `<out>/overlay/<id>.png` where a mask exists.
pub fn predict_dir(checkpoint: &Path, input_dir: &Path, out_dir: &Path) -> Result<Vec<PathBuf>> {
    let model = LoadedModel::load(checkpoint)?;
    let inputs = load_inputs(input_dir)?;
    let samples: Vec<BimodalSample> = inputs.iter().map(|(s, _)| s.clone()).collect();
    let maps = model.predict_samples(&samples)?;
    let mut written = Vec::new();
    for ((s, has_mask), map) in inputs.iter().zip(&maps) {
        let path = out_dir.join(format!("{}.png", s.id));
        data::save_png(&data::gray_image(map), &path)?;
        written.push(path);
        if *has_mask {
            data::save_png(&overlay(map, &s.mask), &out_dir.join("overlay").join(format!("{}.png", s.id)))?;
        }
    }
    Ok(written)
}
