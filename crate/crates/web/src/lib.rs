//! WebAssembly bindings for the browser demo: build a noisy synthetic
//! scene, segment it, and score the result. Images cross the boundary as
//! RGBA byte buffers ready for `ImageData`.
//!
//! The `try_*` methods are the plain Rust API; the exported wrappers only
//! turn their errors into JavaScript exceptions.

use aitv::aicv::{self, AicvConfig};
use aitv::aifr::{self, AifrConfig};
use aitv::eval::{self, GroundTruth, NoiseKind, NoiseSpec, SyntheticSpec};
use aitv::{Image, LabelMap, SegmentationResult};
use wasm_bindgen::prelude::*;

/// Distinct label colors; labels past the end reuse them.
const PALETTE: [[u8; 3]; 8] = [
    [31, 119, 180],
    [255, 127, 14],
    [44, 160, 44],
    [214, 39, 40],
    [148, 103, 189],
    [140, 86, 75],
    [227, 119, 194],
    [127, 127, 127],
];

fn to_byte(v: f64) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

/// RGBA bytes of a gray or RGB image.
pub fn image_rgba(img: &Image) -> Vec<u8> {
    let ch = img.channels();
    let (m, n) = img.shape();
    let mut out = Vec::with_capacity(4 * m * n);
    for p in 0..m * n {
        let px = |c: usize| to_byte(ch[c.min(ch.len() - 1)].as_slice()[p]);
        out.extend_from_slice(&[px(0), px(1), px(2), 255]);
    }
    out
}

pub fn labels_rgba(labels: &LabelMap) -> Vec<u8> {
    labels
        .as_slice()
        .iter()
        .flat_map(|&l| {
            let [r, g, b] = PALETTE[(l as usize - 1) % PALETTE.len()];
            [r, g, b, 255]
        })
        .collect()
}

fn preset(name: &str) -> Result<SyntheticSpec, String> {
    match name {
        "two-region" => Ok(SyntheticSpec::two_region()),
        "four-quadrants" => Ok(SyntheticSpec::four_quadrants()),
        "four-region-color" => Ok(SyntheticSpec::four_region_color()),
        other => Err(format!("unknown scene {other:?}")),
    }
}

/// A synthetic image, its ground truth, and the corrupted copy that gets
/// segmented.
#[wasm_bindgen]
pub struct Scene {
    clean: Image,
    noisy: Image,
    truth: GroundTruth,
}

#[wasm_bindgen]
impl Scene {
    #[wasm_bindgen(constructor)]
    pub fn new(preset: &str, noise: &str, level: f64, seed: u32) -> Result<Scene, JsError> {
        Self::try_new(preset, noise, level, u64::from(seed)).map_err(|e| JsError::new(&e))
    }

    pub fn width(&self) -> usize {
        self.clean.shape().1
    }

    pub fn height(&self) -> usize {
        self.clean.shape().0
    }

    #[wasm_bindgen(js_name = numLabels)]
    pub fn num_labels(&self) -> usize {
        self.truth.num_labels()
    }

    #[wasm_bindgen(js_name = noisyRgba)]
    pub fn noisy_rgba(&self) -> Vec<u8> {
        image_rgba(&self.noisy)
    }

    #[wasm_bindgen(js_name = truthRgba)]
    pub fn truth_rgba(&self) -> Vec<u8> {
        labels_rgba(&self.truth.labels)
    }

    /// Segments the noisy image with `"aicv"` or `"aifr"`, using as many
    /// regions as the ground truth has.
    pub fn segment(&self, model: &str, alpha: f64, lambda: f64, max_outer: usize) -> Result<Segmentation, JsError> {
        self.try_segment(model, alpha, lambda, max_outer).map_err(|e| JsError::new(&e))
    }
}

impl Scene {
    pub fn try_new(preset_name: &str, noise: &str, level: f64, seed: u64) -> Result<Scene, String> {
        let (clean, truth) = preset(preset_name)?.generate().map_err(|e| e.to_string())?;
        let kind: NoiseKind = noise.parse().map_err(|e: aitv::Error| e.to_string())?;
        let spec = NoiseSpec::new(kind, level, seed).map_err(|e| e.to_string())?;
        let noisy = eval::corrupt(&clean, &spec).map_err(|e| e.to_string())?;
        Ok(Scene { clean, noisy, truth })
    }

    pub fn try_segment(&self, model: &str, alpha: f64, lambda: f64, max_outer: usize) -> Result<Segmentation, String> {
        let n = self.truth.num_labels();
        let result = match model {
            "aicv" => {
                let phases = n.trailing_zeros() as usize;
                let cfg = AicvConfig { alpha, lambda, max_outer_iters: max_outer, ..AicvConfig::default_for(phases) };
                aicv::segment(&self.noisy, &cfg)
            }
            "aifr" => {
                let cfg = AifrConfig { alpha, lambda, max_outer_iters: max_outer, ..AifrConfig::default_for(n) };
                aifr::segment_fr(&self.noisy, &cfg)
            }
            other => return Err(format!("unknown model {other:?}")),
        }
        .map_err(|e| e.to_string())?;
        Segmentation::score(result, &self.clean, &self.truth)
    }
}

/// Outcome of one segmentation with its scores.
#[wasm_bindgen]
pub struct Segmentation {
    labels: LabelMap,
    recon: Image,
    dice: f64,
    psnr: f64,
    iterations: usize,
    trace: Vec<f64>,
}

impl Segmentation {
    fn score(res: SegmentationResult, clean: &Image, truth: &GroundTruth) -> Result<Self, String> {
        let dice = eval::score(&res.labels, &res.constants, truth).map_err(|e| e.to_string())?;
        let recon = eval::reconstruct(&res.labels, &res.constants).map_err(|e| e.to_string())?;
        let psnr = eval::psnr(&recon, clean).map_err(|e| e.to_string())?;
        // show labels in ground-truth colors
        let labels = eval::align_to_ground_truth(&res.labels, &res.constants, truth).map_err(|e| e.to_string())?;
        Ok(Segmentation { labels, recon, dice, psnr, iterations: res.iterations, trace: res.objective_trace })
    }
}

#[wasm_bindgen]
impl Segmentation {
    /// DICE against the ground truth after matching labels by constant.
    pub fn dice(&self) -> f64 {
        self.dice
    }

    /// PSNR of the piecewise-constant reconstruction against the clean
    /// image; infinite for an exact match.
    pub fn psnr(&self) -> f64 {
        self.psnr
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    /// Objective at the start and after every outer iteration.
    #[wasm_bindgen(js_name = objectiveTrace)]
    pub fn objective_trace(&self) -> Vec<f64> {
        self.trace.clone()
    }

    #[wasm_bindgen(js_name = labelsRgba)]
    pub fn labels_rgba(&self) -> Vec<u8> {
        labels_rgba(&self.labels)
    }

    #[wasm_bindgen(js_name = reconstructionRgba)]
    pub fn reconstruction_rgba(&self) -> Vec<u8> {
        image_rgba(&self.recon)
    }
}
