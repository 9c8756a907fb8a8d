//! Impulse-noise corruption, DICE and PSNR, reconstruction from labels, and
//! synthetic piecewise-constant test images.

use std::fmt;
use std::str::FromStr;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::image::{Constants, Image};
use crate::segment::LabelMap;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseKind {
    /// Salt and pepper: corrupted pixels become 0 or 1 with equal odds.
    Spin,
    /// Random valued: corrupted pixels are redrawn uniformly from `[0, 1]`.
    Rvin,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub kind: NoiseKind,
    /// Fraction of pixels replaced, per channel.
    pub level: f64,
    pub seed: u64,
}

impl NoiseSpec {
    pub fn new(kind: NoiseKind, level: f64, seed: u64) -> Result<Self> {
        let spec = Self { kind, level, seed };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if (0.0..=1.0).contains(&self.level) {
            Ok(())
        } else {
            Err(Error::config("noise", format!("level must lie in [0, 1], got {}", self.level)))
        }
    }
}

impl fmt::Display for NoiseKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NoiseKind::Spin => "spin",
            NoiseKind::Rvin => "rvin",
        })
    }
}

impl FromStr for NoiseKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "spin" => Ok(NoiseKind::Spin),
            "rvin" => Ok(NoiseKind::Rvin),
            other => Err(Error::config("noise", format!("unknown noise kind {other:?}"))),
        }
    }
}

/// Number of positions corrupted per channel: `⌊level·m·n⌋`.
pub fn corrupted_count(spec: &NoiseSpec, pixels: usize) -> usize {
    (spec.level * pixels as f64).floor() as usize
}

/// Corrupts each channel independently. Deterministic in `spec.seed`.
pub fn corrupt(f: &Image, spec: &NoiseSpec) -> Result<Image> {
    corrupt_with_positions(f, spec).map(|(img, _)| img)
}

/// [`corrupt`], also returning the sorted corrupted positions per channel.
pub fn corrupt_with_positions(f: &Image, spec: &NoiseSpec) -> Result<(Image, Vec<Vec<usize>>)> {
    spec.validate()?;
    if !f.is_in_unit_box() {
        return Err(Error::InvalidInput("image intensities must lie in [0, 1]".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut out = f.clone();
    let mut all_positions = Vec::with_capacity(f.num_channels());
    for ch in out.channels_mut() {
        let total = ch.len();
        let mut positions = sample(&mut rng, total, corrupted_count(spec, total)).into_vec();
        positions.sort_unstable();
        let data = ch.as_mut_slice();
        for &p in &positions {
            data[p] = match spec.kind {
                NoiseKind::Spin => {
                    if rng.random_bool(0.5) {
                        1.0
                    } else {
                        0.0
                    }
                }
                NoiseKind::Rvin => rng.random::<f64>(),
            };
        }
        all_positions.push(positions);
    }
    Ok((out, all_positions))
}

/// Reference labels with the constant of each label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub labels: LabelMap,
    pub constants: Constants,
    /// Label of the object of interest for two-region scoring.
    pub foreground: Option<u32>,
}

impl GroundTruth {
    pub fn new(labels: LabelMap, constants: Constants, foreground: Option<u32>) -> Result<Self> {
        if constants.num_regions() != labels.num_labels() {
            return Err(Error::InvalidInput(format!(
                "{} labels but {} constants",
                labels.num_labels(),
                constants.num_regions()
            )));
        }
        if let Some(fg) = foreground {
            if fg == 0 || fg as usize > labels.num_labels() {
                return Err(Error::InvalidInput(format!("foreground label {fg} out of range")));
            }
        }
        Ok(Self { labels, constants, foreground })
    }

    pub fn num_labels(&self) -> usize {
        self.labels.num_labels()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DiceMode {
    ForegroundOnly,
    MeanAll,
}

impl DiceMode {
    /// Foreground-only for two labels with a declared object, mean-all
    /// otherwise.
    pub fn default_for(gt: &GroundTruth) -> Self {
        if gt.num_labels() == 2 && gt.foreground.is_some() {
            DiceMode::ForegroundOnly
        } else {
            DiceMode::MeanAll
        }
    }
}

/// Maps estimated labels to reference labels by nearest constant
/// (Euclidean over channels), taking pairs in increasing distance and never
/// reusing a label on either side. `result[l − 1]` is the reference label
/// assigned to estimated label `l`.
pub fn match_labels(estimated: &Constants, reference: &Constants) -> Result<Vec<u32>> {
    if estimated.num_regions() != reference.num_regions() {
        return Err(Error::InvalidInput(format!(
            "cannot match {} estimated labels to {} reference labels",
            estimated.num_regions(),
            reference.num_regions()
        )));
    }
    let n = estimated.num_regions();
    let mut pairs = Vec::with_capacity(n * n);
    for (i, a) in estimated.0.iter().enumerate() {
        for (j, b) in reference.0.iter().enumerate() {
            if a.len() != b.len() {
                return Err(Error::InvalidInput("constants differ in channel count".into()));
            }
            let d: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
            pairs.push((d, i, j));
        }
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut map = vec![0u32; n];
    let mut taken = vec![false; n];
    for (_, i, j) in pairs {
        if map[i] == 0 && !taken[j] {
            map[i] = j as u32 + 1;
            taken[j] = true;
        }
    }
    Ok(map)
}

/// Relabels a segmentation into the reference label space.
pub fn align_to_ground_truth(labels: &LabelMap, constants: &Constants, gt: &GroundTruth) -> Result<LabelMap> {
    let map = match_labels(constants, &gt.constants)?;
    labels.relabel(&map, gt.num_labels())
}

/// DICE of every label `1..=N` between two label fields; 1 when a label is
/// absent from both, 0 when absent from exactly one.
pub fn dice_per_label(a: &LabelMap, b: &LabelMap) -> Result<Vec<f64>> {
    if a.shape() != b.shape() {
        return Err(Error::DimensionMismatch { expected: a.shape(), found: b.shape() });
    }
    let n = a.num_labels().max(b.num_labels());
    let mut size_a = vec![0usize; n];
    let mut size_b = vec![0usize; n];
    let mut both = vec![0usize; n];
    for (&la, &lb) in a.as_slice().iter().zip(b.as_slice()) {
        size_a[la as usize - 1] += 1;
        size_b[lb as usize - 1] += 1;
        if la == lb {
            both[la as usize - 1] += 1;
        }
    }
    Ok((0..n)
        .map(|l| {
            let denom = size_a[l] + size_b[l];
            if denom == 0 {
                1.0
            } else {
                2.0 * both[l] as f64 / denom as f64
            }
        })
        .collect())
}

/// DICE of already aligned labels against the reference.
pub fn dice(labels: &LabelMap, gt: &GroundTruth, mode: DiceMode) -> Result<f64> {
    let per = dice_per_label(labels, &gt.labels)?;
    match mode {
        DiceMode::ForegroundOnly => {
            let fg =
                gt.foreground.ok_or_else(|| Error::InvalidInput("ground truth declares no foreground label".into()))?;
            Ok(per[fg as usize - 1])
        }
        DiceMode::MeanAll => Ok(per.iter().sum::<f64>() / per.len() as f64),
    }
}

/// Aligns by constants, then scores with the mode suited to `gt`.
pub fn score(labels: &LabelMap, constants: &Constants, gt: &GroundTruth) -> Result<f64> {
    let aligned = align_to_ground_truth(labels, constants, gt)?;
    dice(&aligned, gt, DiceMode::default_for(gt))
}

/// Piecewise-constant image `Σ_k c_k 1{label = k}`, per channel.
pub fn reconstruct(labels: &LabelMap, constants: &Constants) -> Result<Image> {
    if constants.num_regions() < labels.num_labels() {
        return Err(Error::InvalidInput(format!(
            "{} labels but {} constants",
            labels.num_labels(),
            constants.num_regions()
        )));
    }
    let channels = constants.0.first().map_or(0, Vec::len);
    if channels == 0 || constants.0.iter().any(|c| c.len() != channels) {
        return Err(Error::InvalidInput("constants must share a nonzero channel count".into()));
    }
    let (m, n) = labels.shape();
    Image::new(
        (0..channels)
            .map(|ch| {
                let data = labels.as_slice().iter().map(|&l| constants.0[l as usize - 1][ch]).collect();
                ScalarField::from_vec(m, n, data)
            })
            .collect::<Result<_>>()?,
    )
}

/// `10 log₁₀(C·m·n / Σ err²)` over `C` channels; `+∞` for identical images.
pub fn psnr(recon: &Image, original: &Image) -> Result<f64> {
    if recon.num_channels() != original.num_channels() {
        return Err(Error::InvalidInput("channel count mismatch".into()));
    }
    let mut err = 0.0;
    let mut count = 0usize;
    for (a, b) in recon.channels().iter().zip(original.channels()) {
        a.check_shape(b)?;
        err += a.as_slice().iter().zip(b.as_slice()).map(|(x, y)| (x - y) * (x - y)).sum::<f64>();
        count += a.len();
    }
    if err == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (count as f64 / err).log10())
}

/// Geometry of one painted shape; coordinates are `(row, col)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Geometry {
    Disk { center: (f64, f64), radius: f64 },
    Rect { top: usize, left: usize, height: usize, width: usize },
}

impl Geometry {
    fn contains(&self, i: usize, j: usize) -> bool {
        match *self {
            Geometry::Disk { center, radius } => {
                let (di, dj) = (i as f64 - center.0, j as f64 - center.1);
                di * di + dj * dj <= radius * radius
            }
            Geometry::Rect { top, left, height, width } => {
                (top..top + height).contains(&i) && (left..left + width).contains(&j)
            }
        }
    }
}

/// One region of a synthetic image: a constant painted over one or more
/// shapes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Region {
    /// One value per channel.
    pub value: Vec<f64>,
    pub shapes: Vec<Geometry>,
}

impl Region {
    pub fn new(value: Vec<f64>, shapes: Vec<Geometry>) -> Self {
        Self { value, shapes }
    }
}

/// Layout of a synthetic image.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "layout", rename_all = "kebab-case")]
pub enum SyntheticSpec {
    /// Regions painted in order over a background. Any two shapes must be
    /// disjoint or nested, a later shape inside an earlier one. Label 1 is
    /// the background, label `i + 2` region `i`.
    Shapes { rows: usize, cols: usize, background: Vec<f64>, regions: Vec<Region> },
    /// Four quadrants labeled in reading order.
    Quadrants { rows: usize, cols: usize, values: [Vec<f64>; 4] },
}

impl SyntheticSpec {
    /// 128×128 gray disk of radius 48, value 0.8 on a 0.2 background.
    pub fn two_region() -> Self {
        SyntheticSpec::Shapes {
            rows: 128,
            cols: 128,
            background: vec![0.2],
            regions: vec![Region::new(vec![0.8], vec![Geometry::Disk { center: (63.5, 63.5), radius: 48.0 }])],
        }
    }

    /// 64×64 gray quadrants at `0, 1/3, 2/3, 1`.
    pub fn four_quadrants() -> Self {
        SyntheticSpec::Quadrants {
            rows: 64,
            cols: 64,
            values: [vec![0.0], vec![1.0 / 3.0], vec![2.0 / 3.0], vec![1.0]],
        }
    }

    /// 100×100 color image: a red center disk between a green bar on the left
    /// and a near-white bar on the right, on blue.
    pub fn four_region_color() -> Self {
        let bar = |left| Geometry::Rect { top: 15, left, height: 70, width: 18 };
        SyntheticSpec::Shapes {
            rows: 100,
            cols: 100,
            background: vec![0.1, 0.2, 0.6],
            regions: vec![
                Region::new(vec![0.9, 0.2, 0.2], vec![Geometry::Disk { center: (49.5, 49.5), radius: 20.0 }]),
                Region::new(vec![0.2, 0.8, 0.3], vec![bar(4)]),
                Region::new(vec![0.95, 0.95, 0.9], vec![bar(78)]),
            ],
        }
    }

    pub fn shape(&self) -> (usize, usize) {
        match self {
            SyntheticSpec::Shapes { rows, cols, .. } | SyntheticSpec::Quadrants { rows, cols, .. } => (*rows, *cols),
        }
    }

    /// Builds the image and its labels. The foreground is declared for
    /// two-region layouts.
    pub fn generate(&self) -> Result<(Image, GroundTruth)> {
        let (rows, cols) = self.shape();
        if rows == 0 || cols == 0 {
            return Err(Error::config("synthetic", "canvas must be nonempty"));
        }
        let (values, labels) = match self {
            SyntheticSpec::Shapes { background, regions, .. } => {
                let mut masks: Vec<(usize, Vec<bool>)> = Vec::new();
                for (r, region) in regions.iter().enumerate() {
                    if region.shapes.is_empty() {
                        return Err(Error::config("synthetic", format!("region {} has no shapes", r + 2)));
                    }
                    for g in &region.shapes {
                        masks.push((r, (0..rows * cols).map(|p| g.contains(p / cols, p % cols)).collect()));
                    }
                }
                for a in 0..masks.len() {
                    for b in a + 1..masks.len() {
                        if !disjoint_or_nested(&masks[a].1, &masks[b].1) {
                            return Err(Error::config(
                                "synthetic",
                                format!("shapes {a} and {b} overlap without nesting"),
                            ));
                        }
                    }
                }
                let mut labels = vec![1u32; rows * cols];
                for (r, mask) in &masks {
                    for (l, &inside) in labels.iter_mut().zip(mask) {
                        if inside {
                            *l = *r as u32 + 2;
                        }
                    }
                }
                let mut values = vec![background.clone()];
                values.extend(regions.iter().map(|r| r.value.clone()));
                (values, labels)
            }
            SyntheticSpec::Quadrants { values, .. } => {
                let labels = (0..rows * cols)
                    .map(|p| {
                        let (i, j) = (p / cols, p % cols);
                        1 + 2 * u32::from(i >= rows / 2) + u32::from(j >= cols / 2)
                    })
                    .collect();
                (values.to_vec(), labels)
            }
        };
        let channels = values[0].len();
        if channels == 0 || values.iter().any(|v| v.len() != channels) {
            return Err(Error::config("synthetic", "every region needs the same nonzero channel count"));
        }
        if values.iter().flatten().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::config("synthetic", "region values must lie in [0, 1]"));
        }
        for a in 0..values.len() {
            for b in a + 1..values.len() {
                if values[a] == values[b] {
                    return Err(Error::config("synthetic", format!("regions {} and {} share a value", a + 1, b + 1)));
                }
            }
        }
        let num_labels = values.len();
        let labels = LabelMap::new(rows, cols, num_labels, labels)?;
        if let Some(empty) = labels.histogram().iter().position(|&c| c == 0) {
            return Err(Error::config("synthetic", format!("region {} covers no pixels", empty + 1)));
        }
        let constants = Constants(values);
        let image = reconstruct(&labels, &constants)?;
        let foreground = (num_labels == 2).then_some(2);
        Ok((image, GroundTruth::new(labels, constants, foreground)?))
    }
}

fn disjoint_or_nested(a: &[bool], b: &[bool]) -> bool {
    let mut a_only = false;
    let mut b_only = false;
    let mut shared = false;
    for (&x, &y) in a.iter().zip(b) {
        a_only |= x && !y;
        b_only |= y && !x;
        shared |= x && y;
    }
    !shared || !a_only || !b_only
}
