//! The four verbs. Each writes its files under the output directory and
//! returns what it reports on stdout.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use aitv::eval::{self, align_to_ground_truth, dice_per_label, reconstruct, score, GroundTruth, NoiseKind, NoiseSpec};
use aitv::segment::OuterRecord;
use aitv::{aicv, aifr, Image, SegmentationResult};
use serde::{Serialize, Serializer};

use crate::error::{CliError, Result};
use crate::io;
use crate::manifest::{Model, NoiseArg, RunManifest, SyntheticSource};

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(CliError::io(dir))
}

fn out_dir(manifest: &RunManifest) -> PathBuf {
    manifest.out.clone().unwrap_or_else(|| PathBuf::from("out"))
}

/// Runs the configured model, recording wall time per outer iteration.
pub fn run_model(manifest: &RunManifest, f: &Image) -> Result<(SegmentationResult, Vec<f64>)> {
    let start = Instant::now();
    let mut wall_ms = Vec::new();
    let mut observer = |_: &OuterRecord| wall_ms.push(start.elapsed().as_secs_f64() * 1e3);
    let res = match manifest.model {
        Model::Aicv => aicv::segment_observed(f, &manifest.aicv_config()?, &mut observer)?,
        Model::Aifr => aifr::segment_fr_observed(f, &manifest.aifr_config()?, &mut observer)?,
    };
    Ok((res, wall_ms))
}

fn finite_or_inf<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if v.is_finite() {
        s.serialize_f64(*v)
    } else {
        s.serialize_str(if *v > 0.0 { "inf" } else { "-inf" })
    }
}

#[derive(Debug, Serialize)]
pub struct RunReport {
    pub model: Model,
    pub shape: (usize, usize),
    pub channels: usize,
    pub num_labels: usize,
    pub iterations: usize,
    pub converged: bool,
    pub objective: f64,
    pub descent_violations: usize,
    pub constants: Vec<Vec<f64>>,
    pub label_pixels: Vec<usize>,
    /// Reconstruction against the clean image.
    #[serde(serialize_with = "finite_or_inf")]
    pub psnr: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dice: Option<f64>,
    /// Per ground-truth label, after matching labels by constant.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dice_per_label: Option<Vec<f64>>,
}

fn report(
    manifest: &RunManifest,
    res: &SegmentationResult,
    clean: &Image,
    gt: Option<&GroundTruth>,
) -> Result<RunReport> {
    let recon = reconstruct(&res.labels, &res.constants)?;
    let (dice, per_label) = match gt {
        Some(gt) if gt.num_labels() == res.labels.num_labels() => {
            let aligned = align_to_ground_truth(&res.labels, &res.constants, gt)?;
            (Some(score(&res.labels, &res.constants, gt)?), Some(dice_per_label(&aligned, &gt.labels)?))
        }
        Some(gt) => {
            return Err(CliError::Config(format!(
                "ground truth has {} labels but the model produces {}",
                gt.num_labels(),
                res.labels.num_labels()
            )))
        }
        None => (None, None),
    };
    Ok(RunReport {
        model: manifest.model,
        shape: res.labels.shape(),
        channels: clean.num_channels(),
        num_labels: res.labels.num_labels(),
        iterations: res.iterations,
        converged: res.converged,
        objective: *res.objective_trace.last().expect("trace holds the initial value"),
        descent_violations: res.descent_violations(manifest.c, 1e-8).len(),
        constants: res.constants.0.clone(),
        label_pixels: res.labels.histogram(),
        psnr: eval::psnr(&recon, clean)?,
        dice,
        dice_per_label: per_label,
    })
}

fn trace_csv(res: &SegmentationResult) -> String {
    let mut s = String::from("outer_iter,objective,max_relerr,step_sq\n");
    writeln!(s, "0,{},,", res.objective_trace[0]).unwrap();
    for (r, obj) in res.records.iter().zip(&res.objective_trace[1..]) {
        writeln!(s, "{},{},{},{}", r.iteration, obj, r.max_relerr, r.step_sq).unwrap();
    }
    s
}

fn timing_csv(wall_ms: &[f64]) -> String {
    let mut s = String::from("outer_iter,wall_ms\n");
    for (k, ms) in wall_ms.iter().enumerate() {
        writeln!(s, "{},{ms:.3}", k + 1).unwrap();
    }
    s
}

/// Segments one image and writes the label map, reconstruction,
/// memberships, `result.json`, `trace.csv`, `timing.csv` and the resolved
/// `manifest.json`.
pub fn segment(manifest: RunManifest) -> Result<RunReport> {
    let manifest = manifest.resolve()?;
    let inputs = manifest.load()?;
    let dir = out_dir(&manifest);
    create_dir(&dir)?;
    io::write_json(&dir.join("manifest.json"), &manifest)?;
    let (res, wall_ms) = run_model(&manifest, &inputs.observed)?;
    let rep = report(&manifest, &res, &inputs.clean, inputs.ground_truth.as_ref())?;

    io::write_image(&dir.join("input.png"), &inputs.observed)?;
    io::write_labels(&dir.join("labels.png"), &res.labels)?;
    io::write_image(&dir.join("reconstruction.png"), &reconstruct(&res.labels, &res.constants)?)?;
    for (k, u) in res.memberships.iter().enumerate() {
        io::write_field(&dir.join(format!("membership_{}.png", k + 1)), u)?;
    }
    io::write_json(&dir.join("result.json"), &rep)?;
    io::write_text(&dir.join("trace.csv"), &trace_csv(&res))?;
    io::write_text(&dir.join("timing.csv"), &timing_csv(&wall_ms))?;
    Ok(rep)
}

/// Corrupts a PNG and writes the result. Returns the number of corrupted
/// positions per channel.
pub fn corrupt(input: &Path, noise: NoiseArg, seed: u64, grayscale: bool, output: &Path) -> Result<usize> {
    let spec = NoiseSpec::new(noise.kind, noise.level, seed)?;
    let img = io::read_image(input, grayscale)?;
    let (out, positions) = eval::corrupt_with_positions(&img, &spec)?;
    if let Some(parent) = output.parent().filter(|p| !p.as_os_str().is_empty()) {
        create_dir(parent)?;
    }
    io::write_image(output, &out)?;
    Ok(positions[0].len())
}

/// Writes a synthetic image, its label map and the ground-truth JSON that
/// `segment --ground-truth` reads back.
pub fn synth(source: &SyntheticSource, dir: &Path) -> Result<GroundTruth> {
    let spec = source.spec()?;
    let (img, gt) = spec.generate()?;
    create_dir(dir)?;
    io::write_image(&dir.join("image.png"), &img)?;
    io::write_labels(&dir.join("ground_truth.png"), &gt.labels)?;
    io::write_json(&dir.join("ground_truth.json"), &gt)?;
    io::write_json(&dir.join("spec.json"), &spec)?;
    Ok(gt)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepAxes {
    pub alphas: Vec<f64>,
    pub levels: Vec<f64>,
    pub seeds: Vec<u64>,
    pub kind: NoiseKind,
}

#[derive(Debug, Clone)]
pub struct SweepRun {
    pub alpha: f64,
    pub level: f64,
    pub seed: u64,
    pub outcome: std::result::Result<(f64, usize, bool), String>,
}

/// Mean DICE per `(alpha, level)` cell; `None` marks a cell with a failed
/// run.
#[derive(Debug, Clone)]
pub struct SweepTable {
    pub axes: SweepAxes,
    pub runs: Vec<SweepRun>,
    pub cells: Vec<Vec<Option<f64>>>,
}

/// Worker count from `AITV_THREADS`, else the available parallelism.
pub fn thread_budget() -> usize {
    std::env::var("AITV_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, usize::from))
}

/// Runs the α × level × seed grid on the base manifest. Runs are
/// independent and spread over [`thread_budget`] workers; results are
/// gathered in grid order so the output does not depend on scheduling.
pub fn sweep(base: RunManifest, axes: SweepAxes) -> Result<SweepTable> {
    if axes.alphas.is_empty() || axes.levels.is_empty() || axes.seeds.is_empty() {
        return Err(CliError::Config("sweep axes must be nonempty".into()));
    }
    let base = RunManifest { noise: None, ..base }.resolve()?;
    for &level in &axes.levels {
        NoiseSpec::new(axes.kind, level, 0)?;
    }
    for &alpha in &axes.alphas {
        RunManifest { alpha, ..base.clone() }.resolve()?;
    }
    let inputs = base.load()?;
    let gt = inputs
        .ground_truth
        .as_ref()
        .ok_or_else(|| CliError::Config("sweep needs ground truth: use `synthetic` or `ground_truth`".into()))?;

    let mut jobs = Vec::new();
    for &alpha in &axes.alphas {
        for &level in &axes.levels {
            for &seed in &axes.seeds {
                jobs.push((alpha, level, seed));
            }
        }
    }
    let results: Mutex<Vec<Option<SweepRun>>> = Mutex::new(vec![None; jobs.len()]);
    let next = AtomicUsize::new(0);
    let run_one = |&(alpha, level, seed): &(f64, f64, u64)| -> std::result::Result<(f64, usize, bool), String> {
        let m = RunManifest { alpha, seed, noise: Some(NoiseArg { kind: axes.kind, level }), ..base.clone() };
        let spec = m.noise_spec().expect("noise is set");
        let observed = eval::corrupt(&inputs.clean, &spec).map_err(|e| e.to_string())?;
        let (res, _) = run_model(&m, &observed).map_err(|e| e.to_string())?;
        let d = score(&res.labels, &res.constants, gt).map_err(|e| e.to_string())?;
        Ok((d, res.iterations, res.converged))
    };
    std::thread::scope(|s| {
        for _ in 0..thread_budget().min(jobs.len()) {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(job) = jobs.get(i) else { break };
                let outcome = run_one(job);
                let run = SweepRun { alpha: job.0, level: job.1, seed: job.2, outcome };
                results.lock().expect("no worker panics while holding the lock")[i] = Some(run);
            });
        }
    });
    let runs: Vec<SweepRun> = results.into_inner().unwrap().into_iter().map(|r| r.expect("every job ran")).collect();

    let per_cell = axes.seeds.len();
    let cells = (0..axes.alphas.len())
        .map(|a| {
            (0..axes.levels.len())
                .map(|l| {
                    let chunk = &runs[(a * axes.levels.len() + l) * per_cell..][..per_cell];
                    let dice: Option<Vec<f64>> = chunk.iter().map(|r| r.outcome.as_ref().ok().map(|o| o.0)).collect();
                    dice.map(|d| d.iter().sum::<f64>() / d.len() as f64)
                })
                .collect()
        })
        .collect();
    let table = SweepTable { axes, runs, cells };
    let dir = out_dir(&base);
    create_dir(&dir)?;
    io::write_json(&dir.join("manifest.json"), &base)?;
    io::write_json(&dir.join("axes.json"), &table.axes)?;
    io::write_text(&dir.join("table.csv"), &table_csv(&base, &table))?;
    io::write_text(&dir.join("runs.csv"), &runs_csv(&table))?;
    Ok(table)
}

/// Rows per model and α, one column per noise level, cells are mean DICE
/// over seeds or `ERR`.
pub fn table_csv(base: &RunManifest, table: &SweepTable) -> String {
    let mut s = String::from("model,alpha");
    for level in &table.axes.levels {
        write!(s, ",{}:{level}", table.axes.kind).unwrap();
    }
    s.push('\n');
    for (alpha, row) in table.axes.alphas.iter().zip(&table.cells) {
        write!(s, "{},{alpha}", base.model).unwrap();
        for cell in row {
            match cell {
                Some(d) => write!(s, ",{d:.4}").unwrap(),
                None => s.push_str(",ERR"),
            }
        }
        s.push('\n');
    }
    s
}

fn runs_csv(table: &SweepTable) -> String {
    let mut s = String::from("alpha,level,seed,dice,iterations,converged,error\n");
    for r in &table.runs {
        match &r.outcome {
            Ok((d, it, conv)) => writeln!(s, "{},{},{},{d},{it},{conv},", r.alpha, r.level, r.seed).unwrap(),
            Err(e) => writeln!(s, "{},{},{},ERR,,,\"{}\"", r.alpha, r.level, r.seed, e.replace('"', "'")).unwrap(),
        }
    }
    s
}
