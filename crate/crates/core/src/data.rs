//! Bimodal datasets: the `rgb/ nir/ mask/` directory layout, a synthetic
//! spectral-camouflage generator, edge ground truth and resizing.
//!
//! RGB is held channel-first `(3, H, W)`; NIR and masks as `(H, W)`.
//! All intensities are quantised to 8 bits on construction, so a sample
//! written to disk and read back is identical to the in-memory one.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use image::{GrayImage, RgbImage};
use ndarray::{Array2, Array3, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{shape_err, Error, Result};
use crate::tensor::{linear_taps, LinearTap};

pub const DEFAULT_EDGE_WINDOW: usize = 3;
pub const SUBDIRS: [&str; 3] = ["rgb", "nir", "mask"];
pub const TRAIN_FRACTION: f64 = 0.8;

#[derive(Clone, Debug, PartialEq)]
pub struct BimodalSample {
    pub id: String,
    /// `(3, H, W)` in `[0, 1]`.
    pub rgb: Array3<f64>,
    pub nir: Array2<f64>,
    pub mask: Array2<u8>,
    pub edge: Option<Array2<u8>>,
}

impl BimodalSample {
    pub fn new(id: impl Into<String>, rgb: Array3<f64>, nir: Array2<f64>, mask: Array2<u8>) -> Result<Self> {
        let id = id.into();
        let (c, h, w) = rgb.dim();
        if c != 3 || nir.dim() != (h, w) || mask.dim() != (h, w) {
            return Err(shape_err!(
                "sample {id}: rgb {:?}, nir {:?}, mask {:?} must share H×W with 3 RGB channels",
                rgb.dim(),
                nir.dim(),
                mask.dim()
            ));
        }
        if mask.iter().any(|&m| m > 1) {
            return Err(Error::Data(format!("sample {id}: mask must be binary")));
        }
        Ok(BimodalSample {
            id,
            rgb,
            nir,
            mask,
            edge: None,
        })
    }

    pub fn with_edge(mut self, k: usize) -> Result<Self> {
        self.edge = Some(derive_edge_gt(&self.mask, k)?);
        Ok(self)
    }

    pub fn side(&self) -> (usize, usize) {
        self.mask.dim()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Test,
    /// Every complete sample, ignoring the split.
    All,
}

impl std::str::FromStr for Split {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "train" => Ok(Split::Train),
            "test" => Ok(Split::Test),
            "all" => Ok(Split::All),
            other => Err(format!("unknown split `{other}` (train|test|all)")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    Disk,
    Synthetic { seed: u64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub root: PathBuf,
    pub samples: Vec<String>,
    pub split: Split,
    pub source: Source,
}

impl DatasetManifest {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Reads every listed sample, attaching edges computed with window `k`.
    pub fn load_samples(&self, k: usize) -> Result<Vec<BimodalSample>> {
        self.samples.iter().map(|id| load_sample(&self.root, id)?.with_edge(k)).collect()
    }
}

/// Number of training ids out of `n` under the 80/20 split.
pub fn train_count(n: usize) -> usize {
    ((n as f64) * TRAIN_FRACTION).ceil() as usize
}

/// Deterministic split of already-sorted ids.
pub fn split_ids(ids: &[String], split: Split) -> Vec<String> {
    let cut = train_count(ids.len());
    match split {
        Split::Train => ids[..cut].to_vec(),
        Split::Test => ids[cut..].to_vec(),
        Split::All => ids.to_vec(),
    }
}

fn stems(dir: &Path) -> Result<BTreeSet<String>> {
    let mut out = BTreeSet::new();
    if !dir.is_dir() {
        return Ok(out);
    }
    for entry in std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("png")) {
            if let Some(stem) = path.file_stem() {
                out.insert(stem.to_string_lossy().into_owned());
            }
        }
    }
    Ok(out)
}

/// Lists the complete samples under `root` (sorted), restricted to `split`.
pub fn load_dataset(root: &Path, split: Split) -> Result<DatasetManifest> {
    let sets = SUBDIRS.map(|d| stems(&root.join(d)));
    let [rgb, nir, mask] = sets;
    let (rgb, nir, mask) = (rgb?, nir?, mask?);
    let all: BTreeSet<&String> = rgb.iter().chain(&nir).chain(&mask).collect();
    for id in &all {
        let missing: Vec<&str> = SUBDIRS
            .iter()
            .zip([&rgb, &nir, &mask])
            .filter(|(_, set)| !set.contains(*id))
            .map(|(d, _)| *d)
            .collect();
        if !missing.is_empty() {
            return Err(Error::Data(format!(
                "sample `{id}` is missing its counterpart in {}",
                missing.join(", ")
            )));
        }
    }
    if all.is_empty() {
        return Err(Error::Data(format!("no complete samples under {}", root.display())));
    }
    let ids: Vec<String> = all.into_iter().cloned().collect();
    Ok(DatasetManifest {
        root: root.to_path_buf(),
        samples: split_ids(&ids, split),
        split,
        source: Source::Disk,
    })
}

fn open(path: &Path) -> Result<image::DynamicImage> {
    image::open(path).map_err(|e| Error::Image {
        path: path.to_path_buf(),
        source: e,
    })
}

pub fn sample_path(root: &Path, subdir: &str, id: &str) -> PathBuf {
    root.join(subdir).join(format!("{id}.png"))
}

/// Reads one sample; the mask is binarised at half intensity. No edge is attached.
pub fn load_sample(root: &Path, id: &str) -> Result<BimodalSample> {
    let rgb = open(&sample_path(root, "rgb", id))?.to_rgb8();
    let nir = open(&sample_path(root, "nir", id))?.to_luma8();
    let mask = open(&sample_path(root, "mask", id))?.to_luma8();
    let (w, h) = rgb.dimensions();
    if nir.dimensions() != (w, h) || mask.dimensions() != (w, h) {
        return Err(shape_err!(
            "sample {id}: rgb {:?}, nir {:?}, mask {:?} differ in size",
            rgb.dimensions(),
            nir.dimensions(),
            mask.dimensions()
        ));
    }
    let (h, w) = (h as usize, w as usize);
    let rgb_arr = Array3::from_shape_fn((3, h, w), |(c, i, j)| rgb.get_pixel(j as u32, i as u32)[c] as f64 / 255.0);
    let nir_arr = Array2::from_shape_fn((h, w), |(i, j)| nir.get_pixel(j as u32, i as u32)[0] as f64 / 255.0);
    let mask_arr = Array2::from_shape_fn((h, w), |(i, j)| (mask.get_pixel(j as u32, i as u32)[0] >= 128) as u8);
    BimodalSample::new(id, rgb_arr, nir_arr, mask_arr)
}

fn to_u8(v: f64) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

/// Snaps an intensity onto the 8-bit grid.
pub fn quantize(v: f64) -> f64 {
    to_u8(v) as f64 / 255.0
}

pub fn gray_image(a: &Array2<f64>) -> GrayImage {
    let (h, w) = a.dim();
    GrayImage::from_fn(w as u32, h as u32, |x, y| image::Luma([to_u8(a[[y as usize, x as usize]])]))
}

pub fn mask_image(m: &Array2<u8>) -> GrayImage {
    let (h, w) = m.dim();
    GrayImage::from_fn(w as u32, h as u32, |x, y| image::Luma([m[[y as usize, x as usize]] * 255]))
}

pub fn rgb_image(a: &Array3<f64>) -> RgbImage {
    let (_, h, w) = a.dim();
    RgbImage::from_fn(w as u32, h as u32, |x, y| {
        let (i, j) = (y as usize, x as usize);
        image::Rgb([to_u8(a[[0, i, j]]), to_u8(a[[1, i, j]]), to_u8(a[[2, i, j]])])
    })
}

pub(crate) fn save_png<P, C>(img: &image::ImageBuffer<P, C>, path: &Path) -> Result<()>
where
    P: image::PixelWithColorType,
    [P::Subpixel]: image::EncodableLayout,
    C: std::ops::Deref<Target = [P::Subpixel]>,
{
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    img.save_with_format(path, image::ImageFormat::Png).map_err(|e| Error::Image {
        path: path.to_path_buf(),
        source: e,
    })
}

/// Writes the sample in the `rgb/ nir/ mask/` layout.
pub fn save_sample(root: &Path, s: &BimodalSample) -> Result<()> {
    save_png(&rgb_image(&s.rgb), &sample_path(root, "rgb", &s.id))?;
    save_png(&gray_image(&s.nir), &sample_path(root, "nir", &s.id))?;
    save_png(&mask_image(&s.mask), &sample_path(root, "mask", &s.id))
}

/// `maxpool_k(mask) − minpool_k(mask)` with replicate padding: 1 exactly where
/// the `k × k` window holds both classes.
pub fn derive_edge_gt(mask: &Array2<u8>, k: usize) -> Result<Array2<u8>> {
    if k == 0 || k % 2 == 0 {
        return Err(Error::Config(format!("edge window must be odd and positive, got {k}")));
    }
    if mask.iter().any(|&m| m > 1) {
        return Err(Error::Data("edge ground truth needs a binary mask".into()));
    }
    let (h, w) = mask.dim();
    let r = (k / 2) as isize;
    let clamp = |v: isize, n: usize| v.clamp(0, n as isize - 1) as usize;
    // Separable: row-wise max/min, then column-wise.
    let mut row_max = Array2::<u8>::zeros((h, w));
    let mut row_min = Array2::<u8>::zeros((h, w));
    for i in 0..h {
        for j in 0..w {
            let (mut hi, mut lo) = (0u8, 1u8);
            for d in -r..=r {
                let v = mask[[i, clamp(j as isize + d, w)]];
                hi = hi.max(v);
                lo = lo.min(v);
            }
            row_max[[i, j]] = hi;
            row_min[[i, j]] = lo;
        }
    }
    Ok(Array2::from_shape_fn((h, w), |(i, j)| {
        let (mut hi, mut lo) = (0u8, 1u8);
        for d in -r..=r {
            let y = clamp(i as isize + d, h);
            hi = hi.max(row_max[[y, j]]);
            lo = lo.min(row_min[[y, j]]);
        }
        hi - lo
    }))
}

fn resample_plane(src: &Array2<f64>, ty: &[LinearTap], tx: &[LinearTap]) -> Array2<f64> {
    Array2::from_shape_fn((ty.len(), tx.len()), |(i, j)| {
        let (a, b) = (&ty[i], &tx[j]);
        a.w_lo * (b.w_lo * src[[a.lo, b.lo]] + b.w_hi * src[[a.lo, b.hi]])
            + a.w_hi * (b.w_lo * src[[a.hi, b.lo]] + b.w_hi * src[[a.hi, b.hi]])
    })
}

fn nearest_index(o: usize, in_len: usize, out_len: usize) -> usize {
    (((o as f64 + 0.5) * in_len as f64 / out_len as f64).floor() as usize).min(in_len - 1)
}

/// Resamples to `side × side`: bilinear for images, nearest for the mask; any
/// edge map is recomputed from the new mask with window `k`.
pub fn resize_sample(s: &BimodalSample, side: usize, k: usize) -> Result<BimodalSample> {
    if side == 0 {
        return Err(Error::Config("resize side must be positive".into()));
    }
    let (h, w) = s.side();
    let mut out = if (h, w) == (side, side) {
        s.clone()
    } else {
        let ty = linear_taps(h, side);
        let tx = linear_taps(w, side);
        let mut rgb = Array3::<f64>::zeros((3, side, side));
        for (c, mut plane) in rgb.axis_iter_mut(Axis(0)).enumerate() {
            let src = s.rgb.index_axis(Axis(0), c).to_owned();
            plane.assign(&resample_plane(&src, &ty, &tx).mapv(quantize));
        }
        let nir = resample_plane(&s.nir, &ty, &tx).mapv(quantize);
        let mask = Array2::from_shape_fn((side, side), |(i, j)| {
            s.mask[[nearest_index(i, h, side), nearest_index(j, w, side)]]
        });
        BimodalSample::new(s.id.clone(), rgb, nir, mask)?
    };
    if s.edge.is_some() {
        out = out.with_edge(k)?;
    }
    Ok(out)
}

/// Parameters of the spectral-camouflage generator.
///
/// Each image has a smooth value-noise texture shared by foreground and
/// background; foreground blobs differ only by `±rgb_gap` per RGB channel
/// and by `nir_gap` in NIR. Optional decoys are background blobs exactly as
/// bright as targets in NIR but carrying a zero-mean stripe pattern in RGB,
/// so neither modality alone separates targets from decoys.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub n_samples: usize,
    pub size: usize,
    /// Inclusive range of target blobs per image.
    pub n_blobs: (usize, usize),
    /// Inclusive range of NIR decoys per image.
    pub n_decoys: (usize, usize),
    pub rgb_gap: f64,
    pub nir_gap: f64,
    /// Lattice spacing of the value noise, in pixels.
    pub texture_scale: f64,
    pub noise_sigma: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            n_samples: 200,
            size: 64,
            n_blobs: (1, 3),
            n_decoys: (0, 1),
            rgb_gap: 0.0,
            nir_gap: 0.4,
            texture_scale: 8.0,
            noise_sigma: 0.02,
            seed: 0,
        }
    }
}

const RGB_TEXTURE_AMP: f64 = 0.15;
const NIR_TEXTURE_AMP: f64 = 0.05;
const DECOY_STRIPE_AMP: f64 = 0.12;

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(format!("synthetic data: {m}")));
        if self.rgb_gap == 0.0 && self.nir_gap == 0.0 {
            return bad("rgb_gap and nir_gap are both 0, targets would be undetectable");
        }
        if self.size < 64 {
            return bad("size must be at least 64");
        }
        if self.n_samples == 0 {
            return bad("n_samples must be positive");
        }
        if self.n_blobs.0 == 0 || self.n_blobs.0 > self.n_blobs.1 {
            return bad("n_blobs must be a range with a minimum of at least 1");
        }
        if self.n_decoys.0 > self.n_decoys.1 {
            return bad("n_decoys must be an ordered range");
        }
        if !(0.0..=1.0).contains(&self.rgb_gap) || !(0.0..=1.0).contains(&self.nir_gap) {
            return bad("gaps must lie in [0, 1]");
        }
        if !(self.texture_scale > 0.0) || !(self.noise_sigma >= 0.0) {
            return bad("texture_scale must be positive and noise_sigma non-negative");
        }
        Ok(())
    }

    pub fn sample_id(index: usize) -> String {
        format!("synth_{index:05}")
    }
}

/// Smooth value noise in `[-1, 1]` on a lattice of spacing `scale`.
fn value_noise(rng: &mut ChaCha8Rng, size: usize, scale: f64) -> Array2<f64> {
    let cells = (size as f64 / scale).ceil() as usize + 2;
    let lattice = Array2::from_shape_fn((cells, cells), |_| rng.random_range(-1.0..1.0));
    let smooth = |t: f64| t * t * (3.0 - 2.0 * t);
    Array2::from_shape_fn((size, size), |(i, j)| {
        let (y, x) = (i as f64 / scale, j as f64 / scale);
        let (y0, x0) = (y.floor() as usize, x.floor() as usize);
        let (ty, tx) = (smooth(y - y0 as f64), smooth(x - x0 as f64));
        let top = lattice[[y0, x0]] * (1.0 - tx) + lattice[[y0, x0 + 1]] * tx;
        let bottom = lattice[[y0 + 1, x0]] * (1.0 - tx) + lattice[[y0 + 1, x0 + 1]] * tx;
        top * (1.0 - ty) + bottom * ty
    })
}

/// Star-shaped blob `r(θ) = r0 · (1 + Σ a_k cos(kθ + φ_k))`, rasterised into `out`.
fn paint_blob(rng: &mut ChaCha8Rng, out: &mut Array2<u8>) {
    let size = out.dim().0 as f64;
    let r0 = size * rng.random_range(0.08..0.13);
    let harmonics: Vec<(f64, f64, f64)> = (2..=4)
        .map(|k| (k as f64, rng.random_range(-0.15..0.15), rng.random_range(0.0..std::f64::consts::TAU)))
        .collect();
    let reach = r0 * 1.45;
    let cy = rng.random_range(reach..size - reach);
    let cx = rng.random_range(reach..size - reach);
    for ((i, j), m) in out.indexed_iter_mut() {
        let (dy, dx) = (i as f64 + 0.5 - cy, j as f64 + 0.5 - cx);
        let theta = dy.atan2(dx);
        let r = r0 * (1.0 + harmonics.iter().map(|(k, a, p)| a * (k * theta + p).cos()).sum::<f64>());
        if dy.hypot(dx) <= r {
            *m = 1;
        }
    }
}

/// One synthetic sample; depends only on `(cfg, index)`.
pub fn synthesize_sample(cfg: &SynthConfig, index: usize) -> Result<BimodalSample> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(index as u64);
    let n = cfg.size;

    let mut mask = Array2::<u8>::zeros((n, n));
    for _ in 0..rng.random_range(cfg.n_blobs.0..=cfg.n_blobs.1) {
        paint_blob(&mut rng, &mut mask);
    }
    let mut decoy = Array2::<u8>::zeros((n, n));
    for _ in 0..rng.random_range(cfg.n_decoys.0..=cfg.n_decoys.1) {
        paint_blob(&mut rng, &mut decoy);
    }
    decoy.zip_mut_with(&mask, |d, &m| *d &= 1 - m);

    let noise = Normal::new(0.0, cfg.noise_sigma).map_err(|e| Error::Config(e.to_string()))?;
    let base = [rng.random_range(0.3..0.6), rng.random_range(0.4..0.7), rng.random_range(0.2..0.5)];
    let mut rgb = Array3::<f64>::zeros((3, n, n));
    for c in 0..3 {
        let tex = value_noise(&mut rng, n, cfg.texture_scale);
        let sign = if c % 2 == 0 { 1.0 } else { -1.0 };
        for i in 0..n {
            for j in 0..n {
                let mut v = base[c] + RGB_TEXTURE_AMP * tex[[i, j]];
                if mask[[i, j]] == 1 {
                    v += sign * cfg.rgb_gap;
                }
                if decoy[[i, j]] == 1 {
                    let stripe = if (i + j) / 2 % 2 == 0 { 1.0 } else { -1.0 };
                    v += DECOY_STRIPE_AMP * stripe;
                }
                rgb[[c, i, j]] = quantize(v + noise.sample(&mut rng));
            }
        }
    }
    let tex = value_noise(&mut rng, n, cfg.texture_scale);
    let nir = Array2::from_shape_fn((n, n), |(i, j)| {
        let bright = mask[[i, j]] == 1 || decoy[[i, j]] == 1;
        let level = if bright { 0.5 + cfg.nir_gap / 2.0 } else { 0.5 - cfg.nir_gap / 2.0 };
        quantize(level + NIR_TEXTURE_AMP * tex[[i, j]] + noise.sample(&mut rng))
    });
    BimodalSample::new(SynthConfig::sample_id(index), rgb, nir, mask)
}

/// All samples of `cfg`, in index order, without touching disk.
pub fn synthesize(cfg: &SynthConfig) -> Result<Vec<BimodalSample>> {
    cfg.validate()?;
    (0..cfg.n_samples).map(|i| synthesize_sample(cfg, i)).collect()
}

/// Generates and persists a synthetic dataset under `root`, plus `manifest.json`.
pub fn generate_synthetic(cfg: &SynthConfig, root: &Path) -> Result<(DatasetManifest, Vec<BimodalSample>)> {
    let samples = synthesize(cfg)?;
    for s in &samples {
        save_sample(root, s)?;
    }
    let manifest = DatasetManifest {
        root: root.to_path_buf(),
        samples: samples.iter().map(|s| s.id.clone()).collect(),
        split: Split::All,
        source: Source::Synthetic { seed: cfg.seed },
    };
    let path = root.join("manifest.json");
    std::fs::write(&path, serde_json::to_string_pretty(&manifest)?).map_err(|e| Error::io(&path, e))?;
    Ok((manifest, samples))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn window_oracle(m: &Array2<u8>, k: usize) -> Array2<u8> {
        let (h, w) = m.dim();
        let r = (k / 2) as isize;
        Array2::from_shape_fn((h, w), |(i, j)| {
            let mut seen = [false; 2];
            for di in -r..=r {
                for dj in -r..=r {
                    let y = (i as isize + di).clamp(0, h as isize - 1) as usize;
                    let x = (j as isize + dj).clamp(0, w as isize - 1) as usize;
                    seen[m[[y, x]] as usize] = true;
                }
            }
            (seen[0] && seen[1]) as u8
        })
    }

    #[test]
    fn edge_of_centered_block() {
        let m = Array2::from_shape_fn((5, 5), |(i, j)| ((1..4).contains(&i) && (1..4).contains(&j)) as u8);
        let e = derive_edge_gt(&m, 3).unwrap();
        for ((i, j), &v) in e.indexed_iter() {
            assert_eq!(v, ((i, j) != (2, 2)) as u8);
        }
    }

    #[test]
    fn edge_matches_window_scan_for_several_k() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for k in [1, 3, 5, 7] {
            let m = Array2::from_shape_fn((12, 9), |_| rng.random_bool(0.3) as u8);
            assert_eq!(derive_edge_gt(&m, k).unwrap(), window_oracle(&m, k));
        }
    }

    #[test]
    fn edge_rejects_bad_inputs() {
        let m = Array2::<u8>::zeros((4, 4));
        assert!(derive_edge_gt(&m, 2).is_err());
        let mut bad = m.clone();
        bad[[0, 0]] = 2;
        assert!(derive_edge_gt(&bad, 3).is_err());
        assert!(derive_edge_gt(&m, 3).unwrap().iter().all(|&v| v == 0));
        assert!(derive_edge_gt(&Array2::ones((4, 4)), 3).unwrap().iter().all(|&v| v == 0));
    }

    #[test]
    fn split_is_eighty_twenty() {
        let ids: Vec<String> = (0..10).map(|i| format!("{i:02}")).collect();
        assert_eq!(split_ids(&ids, Split::Train).len(), 8);
        assert_eq!(split_ids(&ids, Split::Test), vec!["08".to_string(), "09".to_string()]);
        assert_eq!(train_count(7), 6);
    }

    #[test]
    fn synth_refuses_invisible_targets() {
        let cfg = SynthConfig {
            nir_gap: 0.0,
            ..Default::default()
        };
        assert!(synthesize_sample(&cfg, 0).is_err());
        let small = SynthConfig {
            size: 32,
            ..Default::default()
        };
        assert!(small.validate().is_err());
    }

    #[test]
    fn synth_is_deterministic_per_index() {
        let cfg = SynthConfig {
            seed: 7,
            ..Default::default()
        };
        assert_eq!(synthesize_sample(&cfg, 3).unwrap(), synthesize_sample(&cfg, 3).unwrap());
        assert_ne!(synthesize_sample(&cfg, 3).unwrap().mask, synthesize_sample(&cfg, 4).unwrap().mask);
    }

    #[test]
    fn identity_resize_keeps_arrays() {
        let s = synthesize_sample(&SynthConfig::default(), 0).unwrap().with_edge(3).unwrap();
        let r = resize_sample(&s, 64, 3).unwrap();
        assert_eq!(r, s);
        let up = resize_sample(&s, 96, 3).unwrap();
        assert_eq!(up.rgb.dim(), (3, 96, 96));
        assert_eq!(up.edge.unwrap(), derive_edge_gt(&up.mask, 3).unwrap());
    }
}
