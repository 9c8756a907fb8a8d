//! Run manifests: everything needed to reproduce one segmentation run.
//!
//! Values come from the built-in defaults, then the `--config` JSON file,
//! then command-line flags, each layer overriding the previous one.
//! [`RunManifest::resolve`] fills the model-dependent defaults so the
//! manifest written next to the outputs is complete.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use aitv::aicv::AicvConfig;
use aitv::aifr::AifrConfig;
use aitv::eval::{GroundTruth, NoiseKind, NoiseSpec, SyntheticSpec};
use aitv::image::LUMA_WEIGHTS;
use aitv::pdhg::PdhglsParams;
use aitv::{Constants, Image, InitPolicy};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};
use crate::io;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Model {
    /// Multiphase Chan-Vese with binary phase fields.
    #[default]
    Aicv,
    /// Fuzzy region model with one membership per region.
    Aifr,
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Model::Aicv => "aicv",
            Model::Aifr => "aifr",
        })
    }
}

/// Inner stopping rule, see `PdhglsParams::safeguard`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum InnerRule {
    #[default]
    Safeguard,
    Plain,
}

/// `kind:level`, for example `spin:0.6`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseArg {
    pub kind: NoiseKind,
    pub level: f64,
}

impl FromStr for NoiseArg {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let (kind, level) = s.split_once(':').ok_or_else(|| format!("expected kind:level, got {s:?}"))?;
        let kind = kind.parse::<NoiseKind>().map_err(|e| e.to_string())?;
        let level = level.parse::<f64>().map_err(|e| format!("noise level {level:?}: {e}"))?;
        Ok(Self { kind, level })
    }
}

/// A preset name or an inline layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SyntheticSource {
    Preset(String),
    Spec(SyntheticSpec),
}

pub const PRESETS: [&str; 3] = ["two-region", "four-quadrants", "four-region-color"];

pub fn preset(name: &str) -> Result<SyntheticSpec> {
    match name {
        "two-region" => Ok(SyntheticSpec::two_region()),
        "four-quadrants" => Ok(SyntheticSpec::four_quadrants()),
        "four-region-color" => Ok(SyntheticSpec::four_region_color()),
        other => Err(CliError::Config(format!("unknown synthetic preset {other:?}, expected one of {PRESETS:?}"))),
    }
}

impl SyntheticSource {
    /// A preset name, or a path to a JSON layout when it ends in `.json`.
    pub fn from_arg(arg: &str) -> Result<Self> {
        if arg.ends_with(".json") {
            Ok(SyntheticSource::Spec(io::read_json(arg.as_ref())?))
        } else {
            preset(arg)?;
            Ok(SyntheticSource::Preset(arg.to_owned()))
        }
    }

    pub fn spec(&self) -> Result<SyntheticSpec> {
        match self {
            SyntheticSource::Preset(name) => preset(name),
            SyntheticSource::Spec(spec) => Ok(spec.clone()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunManifest {
    /// PNG to segment. Exactly one of `input` and `synthetic` is set.
    pub input: Option<PathBuf>,
    pub synthetic: Option<SyntheticSource>,
    /// Ground-truth JSON as written by `aitv synth`, for PNG inputs.
    pub ground_truth: Option<PathBuf>,
    /// Convert color input to luminance.
    pub grayscale: bool,
    pub model: Model,
    pub alpha: f64,
    pub lambda: f64,
    pub c: f64,
    /// Sum-to-one penalty weight, fuzzy model only.
    pub nu: f64,
    pub phases: Option<usize>,
    pub regions: Option<usize>,
    pub tol_outer: Option<f64>,
    pub max_outer: Option<usize>,
    pub tol_inner: f64,
    pub max_inner: usize,
    pub inner_rule: InnerRule,
    pub tau0: f64,
    pub beta: f64,
    pub delta: f64,
    pub mu: f64,
    pub max_shrinks: usize,
    pub init: Option<InitPolicy>,
    /// Corruption applied to the input before segmenting.
    pub noise: Option<NoiseArg>,
    /// Noise seed, and the seed of the default random initialization.
    pub seed: u64,
    pub out: Option<PathBuf>,
}

impl Default for RunManifest {
    fn default() -> Self {
        let p = PdhglsParams::default();
        let fr = AifrConfig::default_for(2);
        Self {
            input: None,
            synthetic: None,
            ground_truth: None,
            grayscale: false,
            model: Model::Aicv,
            alpha: fr.alpha,
            lambda: fr.lambda,
            c: fr.c,
            nu: fr.nu,
            phases: None,
            regions: None,
            tol_outer: None,
            max_outer: None,
            tol_inner: p.inner_tol,
            max_inner: p.max_inner_iters,
            inner_rule: InnerRule::Safeguard,
            tau0: p.tau0,
            beta: p.beta,
            delta: p.delta,
            mu: p.mu,
            max_shrinks: p.max_shrinks,
            init: None,
            noise: None,
            seed: 0,
            out: None,
        }
    }
}

/// Clean image, its ground truth when known, and the image to segment.
pub struct Inputs {
    pub clean: Image,
    pub observed: Image,
    pub ground_truth: Option<GroundTruth>,
}

impl RunManifest {
    /// Fills phase or region counts, outer tolerances and the initialization
    /// from the model defaults, then validates the result.
    pub fn resolve(mut self) -> Result<Self> {
        match (&self.input, &self.synthetic) {
            (Some(_), Some(_)) => return Err(CliError::Config("give either `input` or `synthetic`, not both".into())),
            (None, None) => return Err(CliError::Config("no input: set `input` or `synthetic`".into())),
            _ => {}
        }
        if self.synthetic.is_some() && self.ground_truth.is_some() {
            return Err(CliError::Config("`ground_truth` is implied by `synthetic`".into()));
        }
        match self.model {
            Model::Aicv => {
                let m = match (self.phases, self.regions) {
                    (Some(m), _) => m,
                    (None, Some(n)) if n.is_power_of_two() && n >= 2 => n.trailing_zeros() as usize,
                    (None, Some(n)) => {
                        return Err(CliError::Config(format!("`regions` = {n} is not a power of two for aicv")))
                    }
                    (None, None) => 1,
                };
                self.phases = Some(m);
                self.regions = Some(1 << m.min(usize::BITS as usize - 1));
                let d = AicvConfig::default_for(m);
                self.tol_outer.get_or_insert(d.outer_tol);
                self.max_outer.get_or_insert(d.max_outer_iters);
                self.init.get_or_insert_with(|| seeded(d.init, self.seed));
            }
            Model::Aifr => {
                let n = match (self.regions, self.phases) {
                    (Some(n), _) => n,
                    (None, Some(m)) if m < 16 => 1 << m,
                    (None, Some(m)) => return Err(CliError::Config(format!("`phases` = {m} is too large"))),
                    (None, None) => 2,
                };
                self.regions = Some(n);
                self.phases = None;
                let d = AifrConfig::default_for(n);
                self.tol_outer.get_or_insert(d.outer_tol);
                self.max_outer.get_or_insert(d.max_outer_iters);
                self.init.get_or_insert_with(|| seeded(d.init, self.seed));
            }
        }
        if let Some(noise) = self.noise {
            NoiseSpec::new(noise.kind, noise.level, self.seed)?;
        }
        match self.model {
            Model::Aicv => self.aicv_config()?.validate()?,
            Model::Aifr => self.aifr_config()?.validate()?,
        }
        Ok(self)
    }

    fn pdhgls(&self) -> PdhglsParams {
        PdhglsParams {
            tau0: self.tau0,
            beta: self.beta,
            delta: self.delta,
            mu: self.mu,
            inner_tol: self.tol_inner,
            max_inner_iters: self.max_inner,
            max_shrinks: self.max_shrinks,
            safeguard: self.inner_rule == InnerRule::Safeguard,
        }
    }

    fn unresolved() -> CliError {
        CliError::Config("manifest used before resolve".into())
    }

    pub fn aicv_config(&self) -> Result<AicvConfig> {
        Ok(AicvConfig {
            alpha: self.alpha,
            lambda: self.lambda,
            c: self.c,
            num_phases: self.phases.ok_or_else(Self::unresolved)?,
            outer_tol: self.tol_outer.ok_or_else(Self::unresolved)?,
            max_outer_iters: self.max_outer.ok_or_else(Self::unresolved)?,
            pdhgls: self.pdhgls(),
            init: self.init.clone().ok_or_else(Self::unresolved)?,
        })
    }

    pub fn aifr_config(&self) -> Result<AifrConfig> {
        Ok(AifrConfig {
            alpha: self.alpha,
            lambda: self.lambda,
            c: self.c,
            num_regions: self.regions.ok_or_else(Self::unresolved)?,
            nu: self.nu,
            outer_tol: self.tol_outer.ok_or_else(Self::unresolved)?,
            max_outer_iters: self.max_outer.ok_or_else(Self::unresolved)?,
            pdhgls: self.pdhgls(),
            init: self.init.clone().ok_or_else(Self::unresolved)?,
        })
    }

    pub fn noise_spec(&self) -> Option<NoiseSpec> {
        self.noise.map(|n| NoiseSpec { kind: n.kind, level: n.level, seed: self.seed })
    }

    /// Loads the clean image and ground truth, then applies the noise.
    pub fn load(&self) -> Result<Inputs> {
        let (mut clean, mut gt) = match (&self.input, &self.synthetic) {
            (Some(path), _) => {
                let gt = self.ground_truth.as_deref().map(io::read_json::<GroundTruth>).transpose()?;
                (io::read_image(path, false)?, gt)
            }
            (None, Some(source)) => {
                let (img, gt) = source.spec()?.generate()?;
                (img, Some(gt))
            }
            (None, None) => return Err(Self::unresolved()),
        };
        if self.grayscale {
            clean = clean.to_luma();
            if let Some(gt) = gt.as_mut() {
                gt.constants = luma_constants(&gt.constants);
            }
        }
        if let Some(gt) = &gt {
            if gt.labels.shape() != clean.shape() {
                return Err(CliError::Config(format!(
                    "ground truth is {:?} but the image is {:?}",
                    gt.labels.shape(),
                    clean.shape()
                )));
            }
        }
        let observed = match self.noise_spec() {
            Some(spec) => aitv::eval::corrupt(&clean, &spec)?,
            None => clean.clone(),
        };
        Ok(Inputs { clean, observed, ground_truth: gt })
    }
}

fn seeded(init: InitPolicy, seed: u64) -> InitPolicy {
    match init {
        InitPolicy::UniformRandom { .. } => InitPolicy::UniformRandom { seed },
        other => other,
    }
}

fn luma_constants(c: &Constants) -> Constants {
    Constants(
        c.0.iter()
            .map(|v| if v.len() == 3 { vec![v.iter().zip(LUMA_WEIGHTS).map(|(a, w)| a * w).sum()] } else { v.clone() })
            .collect(),
    )
}
