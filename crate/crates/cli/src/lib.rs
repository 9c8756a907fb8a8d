//! Command-line frontend: image I/O, run manifests, the `segment`,
//! `corrupt`, `sweep` and `synth` verbs, and their report files.

pub mod commands;
pub mod error;
pub mod io;
pub mod manifest;

use std::path::PathBuf;

use aitv::eval::NoiseKind;
use clap::{Args, Parser, Subcommand};

use crate::commands::SweepAxes;
use crate::error::Result;
use crate::manifest::{InnerRule, Model, NoiseArg, RunManifest, SyntheticSource};

#[derive(Debug, Parser)]
#[command(name = "aitv", version, about = "AITV piecewise-constant image segmentation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Segment one image and write labels, reconstruction, memberships and
    /// reports.
    Segment(RunArgs),
    /// Corrupt a PNG with impulse noise.
    Corrupt(CorruptArgs),
    /// Run an alpha × noise level × seed grid and tabulate mean DICE.
    Sweep(SweepArgs),
    /// Write a synthetic image with its ground truth.
    Synth(SynthArgs),
}

/// Run settings. Flags override the `--config` file, which overrides the
/// defaults.
#[derive(Debug, Default, Args)]
pub struct RunArgs {
    /// JSON run manifest.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// PNG to segment.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Synthetic preset (two-region, four-quadrants, four-region-color) or a
    /// layout JSON file.
    #[arg(long)]
    pub synthetic: Option<String>,
    /// Ground-truth JSON written by `synth`, for scoring a PNG input.
    #[arg(long)]
    pub ground_truth: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub model: Option<Model>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub nu: Option<f64>,
    #[arg(long)]
    pub c: Option<f64>,
    /// Phase count for aicv.
    #[arg(long)]
    pub phases: Option<usize>,
    /// Region count for aifr.
    #[arg(long)]
    pub regions: Option<usize>,
    /// Corrupt the input before segmenting, as `spin:0.3` or `rvin:0.3`.
    #[arg(long)]
    pub noise: Option<NoiseArg>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub max_outer: Option<usize>,
    #[arg(long)]
    pub max_inner: Option<usize>,
    #[arg(long)]
    pub tol_outer: Option<f64>,
    #[arg(long)]
    pub tol_inner: Option<f64>,
    #[arg(long, value_enum)]
    pub inner_rule: Option<InnerRule>,
    /// Convert color input to luminance.
    #[arg(long)]
    pub grayscale: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl RunArgs {
    pub fn manifest(&self) -> Result<RunManifest> {
        let mut m = match &self.config {
            Some(path) => io::read_json(path)?,
            None => RunManifest::default(),
        };
        if let Some(v) = &self.input {
            m.input = Some(v.clone());
            m.synthetic = None;
        }
        if let Some(v) = &self.synthetic {
            m.synthetic = Some(SyntheticSource::from_arg(v)?);
            m.input = None;
        }
        macro_rules! set {
            ($($field:ident),*) => { $(if let Some(v) = self.$field.clone() { m.$field = v; })* };
        }
        macro_rules! set_opt {
            ($($field:ident),*) => { $(if let Some(v) = self.$field.clone() { m.$field = Some(v); })* };
        }
        set!(model, alpha, lambda, nu, c, seed, max_inner, tol_inner, inner_rule);
        set_opt!(ground_truth, phases, regions, noise, max_outer, tol_outer, out);
        m.grayscale |= self.grayscale;
        Ok(m)
    }
}

#[derive(Debug, Args)]
pub struct CorruptArgs {
    pub input: PathBuf,
    #[arg(long)]
    pub noise: NoiseArg,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub grayscale: bool,
    /// Output PNG.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub run: RunArgs,
    #[arg(long, value_delimiter = ',', required = true)]
    pub alphas: Vec<f64>,
    #[arg(long, value_delimiter = ',', required = true)]
    pub levels: Vec<f64>,
    #[arg(long, value_delimiter = ',', required = true)]
    pub seeds: Vec<u64>,
    /// Noise kind for every level; defaults to the manifest's kind or spin.
    #[arg(long)]
    pub kind: Option<NoiseKind>,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Preset name or layout JSON file.
    pub source: String,
    #[arg(long)]
    pub out: PathBuf,
}

/// Runs one command and returns the text for stdout.
pub fn run(cli: Cli) -> Result<String> {
    match cli.command {
        Command::Segment(args) => {
            let rep = commands::segment(args.manifest()?)?;
            let mut line = format!(
                "{} labels, {} iterations, converged {}, objective {:.6}, psnr {:.2}",
                rep.num_labels, rep.iterations, rep.converged, rep.objective, rep.psnr
            );
            if let Some(d) = rep.dice {
                line.push_str(&format!(", dice {d:.4}"));
            }
            Ok(line)
        }
        Command::Corrupt(args) => {
            let n = commands::corrupt(&args.input, args.noise, args.seed, args.grayscale, &args.out)?;
            Ok(format!("corrupted {n} positions per channel -> {}", args.out.display()))
        }
        Command::Sweep(args) => {
            let base = args.run.manifest()?;
            let kind = args.kind.or(base.noise.map(|n| n.kind)).unwrap_or(NoiseKind::Spin);
            let axes = SweepAxes { alphas: args.alphas, levels: args.levels, seeds: args.seeds, kind };
            let table = commands::sweep(base.clone(), axes)?;
            Ok(commands::table_csv(&base, &table).trim_end().to_owned())
        }
        Command::Synth(args) => {
            let gt = commands::synth(&SyntheticSource::from_arg(&args.source)?, &args.out)?;
            let (m, n) = gt.labels.shape();
            Ok(format!("{m}×{n}, {} labels -> {}", gt.num_labels(), args.out.display()))
        }
    }
}
