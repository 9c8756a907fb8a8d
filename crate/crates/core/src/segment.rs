//! Types shared by both segmentation models: label maps, initialization
//! policies, per-iteration records and the result bundle.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::image::Constants;
use crate::region::{region_indicators, RegionCode};

/// Integer label per pixel, values in `1..=num_labels`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelMap {
    rows: usize,
    cols: usize,
    num_labels: usize,
    labels: Vec<u32>,
}

impl LabelMap {
    pub fn new(rows: usize, cols: usize, num_labels: usize, labels: Vec<u32>) -> Result<Self> {
        if labels.len() != rows * cols {
            return Err(Error::DimensionMismatch { expected: (rows, cols), found: (labels.len(), 1) });
        }
        if let Some(bad) = labels.iter().find(|&&l| l == 0 || l as usize > num_labels) {
            return Err(Error::InvalidInput(format!("label {bad} outside 1..={num_labels}")));
        }
        Ok(Self { rows, cols, num_labels, labels })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn num_labels(&self) -> usize {
        self.num_labels
    }

    pub fn as_slice(&self) -> &[u32] {
        &self.labels
    }

    pub fn get(&self, i: usize, j: usize) -> u32 {
        self.labels[i * self.cols + j]
    }

    /// Pixel count per label; index 0 holds label 1.
    pub fn histogram(&self) -> Vec<usize> {
        let mut h = vec![0; self.num_labels];
        for &l in &self.labels {
            h[l as usize - 1] += 1;
        }
        h
    }

    /// Relabels through `map`, where `map[l - 1]` is the new label of `l`.
    pub fn relabel(&self, map: &[u32], num_labels: usize) -> Result<Self> {
        let labels = self.labels.iter().map(|&l| map[l as usize - 1]).collect();
        Self::new(self.rows, self.cols, num_labels, labels)
    }

    /// Binary indicator of one label.
    pub fn indicator(&self, label: u32) -> ScalarField {
        let data = self.labels.iter().map(|&l| if l == label { 1.0 } else { 0.0 }).collect();
        ScalarField::from_vec(self.rows, self.cols, data).expect("shape is consistent")
    }
}

/// How the relaxed fields are initialized.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum InitPolicy {
    /// One binary disk; `center` is `(row, col)` and defaults to the image
    /// center.
    Circle {
        #[serde(default = "default_circle_radius")]
        radius: f64,
        #[serde(default)]
        center: Option<(f64, f64)>,
    },
    /// Two binary disks shifted horizontally by `±shift` from the center,
    /// the first to the right.
    TwinCircles {
        #[serde(default = "default_twin_radius")]
        radius: f64,
        #[serde(default = "default_twin_shift")]
        shift: f64,
    },
    /// Independent uniform draws on `[0, 1]`; fuzzy memberships are then
    /// divided by their pixelwise sum.
    UniformRandom { seed: u64 },
    /// Explicit fields, row-major, one per phase or membership.
    Masks { fields: Vec<Vec<f64>> },
}

fn default_circle_radius() -> f64 {
    10.0
}

fn default_twin_radius() -> f64 {
    30.0
}

fn default_twin_shift() -> f64 {
    5.0
}

impl InitPolicy {
    pub fn circle() -> Self {
        InitPolicy::Circle { radius: default_circle_radius(), center: None }
    }

    pub fn twin_circles() -> Self {
        InitPolicy::TwinCircles { radius: default_twin_radius(), shift: default_twin_shift() }
    }

    /// Circle for one phase, twin circles for two, seeded random otherwise.
    pub fn default_for_phases(num_phases: usize) -> Self {
        match num_phases {
            1 => Self::circle(),
            2 => Self::twin_circles(),
            _ => InitPolicy::UniformRandom { seed: 0 },
        }
    }

    /// Circle-derived partitions for two and four regions, seeded random
    /// otherwise.
    pub fn default_for_regions(num_regions: usize) -> Self {
        match num_regions {
            2 => Self::circle(),
            4 => Self::twin_circles(),
            _ => InitPolicy::UniformRandom { seed: 0 },
        }
    }

    /// Phase fields for the Chan-Vese model.
    pub fn phases(&self, shape: (usize, usize), num_phases: usize) -> Result<Vec<ScalarField>> {
        let (m, n) = shape;
        match self {
            InitPolicy::Circle { radius, center } => {
                if num_phases != 1 {
                    return Err(Error::config("init", "a single circle initializes exactly one phase"));
                }
                Ok(vec![disk(m, n, center.unwrap_or_else(|| image_center(m, n)), *radius)])
            }
            InitPolicy::TwinCircles { radius, shift } => {
                if num_phases != 2 {
                    return Err(Error::config("init", "twin circles initialize exactly two phases"));
                }
                let (ci, cj) = image_center(m, n);
                Ok(vec![disk(m, n, (ci, cj + shift), *radius), disk(m, n, (ci, cj - shift), *radius)])
            }
            InitPolicy::UniformRandom { seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                Ok((0..num_phases).map(|_| ScalarField::from_fn(m, n, |_, _| rng.random::<f64>())).collect())
            }
            InitPolicy::Masks { fields } => masks(fields, shape, num_phases),
        }
    }

    /// Membership fields for the fuzzy model. Circle policies produce the
    /// binary partition induced by their phase fields, so they need two
    /// (one circle) or four (twin circles) regions.
    pub fn memberships(&self, shape: (usize, usize), num_regions: usize) -> Result<Vec<ScalarField>> {
        let (m, n) = shape;
        match self {
            InitPolicy::Circle { .. } | InitPolicy::TwinCircles { .. } => {
                let phases = if matches!(self, InitPolicy::Circle { .. }) { 1 } else { 2 };
                if num_regions != 1 << phases {
                    return Err(Error::config(
                        "init",
                        format!("circle initialization yields {} regions, not {num_regions}", 1 << phases),
                    ));
                }
                let u = self.phases(shape, phases)?;
                region_indicators(&RegionCode::new(phases)?, &u)
            }
            InitPolicy::UniformRandom { seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                let mut fields: Vec<ScalarField> =
                    (0..num_regions).map(|_| ScalarField::from_fn(m, n, |_, _| rng.random::<f64>())).collect();
                for p in 0..m * n {
                    let total: f64 = fields.iter().map(|f| f.as_slice()[p]).sum();
                    if total > 0.0 {
                        for f in fields.iter_mut() {
                            f.as_mut_slice()[p] /= total;
                        }
                    } else {
                        for f in fields.iter_mut() {
                            f.as_mut_slice()[p] = 1.0 / num_regions as f64;
                        }
                    }
                }
                Ok(fields)
            }
            InitPolicy::Masks { fields } => masks(fields, shape, num_regions),
        }
    }
}

fn image_center(m: usize, n: usize) -> (f64, f64) {
    ((m as f64 - 1.0) / 2.0, (n as f64 - 1.0) / 2.0)
}

fn disk(m: usize, n: usize, center: (f64, f64), radius: f64) -> ScalarField {
    let r2 = radius * radius;
    ScalarField::from_fn(m, n, |i, j| {
        let di = i as f64 - center.0;
        let dj = j as f64 - center.1;
        if di * di + dj * dj <= r2 {
            1.0
        } else {
            0.0
        }
    })
}

fn masks(fields: &[Vec<f64>], (m, n): (usize, usize), count: usize) -> Result<Vec<ScalarField>> {
    if fields.len() != count {
        return Err(Error::config("init", format!("expected {count} mask fields, got {}", fields.len())));
    }
    fields
        .iter()
        .map(|f| {
            let field = ScalarField::from_vec(m, n, f.clone())?;
            if !field.is_in_unit_box() {
                return Err(Error::config("init", "mask values must lie in [0, 1]"));
            }
            Ok(field)
        })
        .collect()
}

/// Summary of one outer iteration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OuterRecord {
    /// 1-based outer iteration count.
    pub iteration: usize,
    /// Model objective after both the field and the constants update.
    pub objective: f64,
    /// Stopping statistic: stacked relative change (Chan-Vese) or the
    /// largest per-membership relative change (fuzzy).
    pub max_relerr: f64,
    /// `Σ_k ‖u_k^{t+1} − u_k^t‖²`.
    pub step_sq: f64,
    /// Inner iterations summed over the fields updated in this pass.
    pub inner_iterations: usize,
}

#[derive(Debug, Clone)]
pub struct SegmentationResult {
    /// Relaxed fields in `[0, 1]`.
    pub memberships: Vec<ScalarField>,
    pub constants: Constants,
    /// Post-processed region labels in `1..=N`.
    pub labels: LabelMap,
    /// Objective at the initialization followed by one value per outer
    /// iteration.
    pub objective_trace: Vec<f64>,
    pub records: Vec<OuterRecord>,
    pub iterations: usize,
    /// Whether the outer stopping rule fired before the iteration cap.
    pub converged: bool,
}

impl SegmentationResult {
    /// Iterations whose decrease falls short of `2c·Σ‖Δu‖² − slack`.
    pub fn descent_violations(&self, strong_convexity: f64, slack: f64) -> Vec<usize> {
        self.records
            .iter()
            .zip(self.objective_trace.windows(2))
            .filter(|(rec, w)| w[0] - w[1] < 2.0 * strong_convexity * rec.step_sq - slack)
            .map(|(rec, _)| rec.iteration)
            .collect()
    }
}

/// Thresholds each phase at 0.5 (values `≥ 0.5` count as inside) and maps
/// the per-pixel bit pattern to its region label.
pub fn postprocess_binary(phases: &[ScalarField]) -> Result<LabelMap> {
    let code = RegionCode::new(phases.len())?;
    for w in &phases[1..] {
        phases[0].check_shape(w)?;
    }
    let (m, n) = phases[0].shape();
    let labels = (0..m * n).map(|p| code.region_of(phases.iter().map(|u| u.as_slice()[p] >= 0.5)) as u32 + 1).collect();
    LabelMap::new(m, n, code.num_regions(), labels)
}

/// Label of the largest membership per pixel, ties going to the smallest
/// index.
pub fn postprocess_argmax(memberships: &[ScalarField]) -> Result<LabelMap> {
    let first = memberships.first().ok_or_else(|| Error::InvalidInput("no membership fields".into()))?;
    for w in &memberships[1..] {
        first.check_shape(w)?;
    }
    let (m, n) = first.shape();
    let labels = (0..m * n)
        .map(|p| {
            let mut best = 0;
            let mut best_v = memberships[0].as_slice()[p];
            for (l, u) in memberships.iter().enumerate().skip(1) {
                let v = u.as_slice()[p];
                if v > best_v {
                    best = l;
                    best_v = v;
                }
            }
            best as u32 + 1
        })
        .collect();
    LabelMap::new(m, n, memberships.len(), labels)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn threshold_is_inclusive_at_one_half() {
        let l = postprocess_binary(&[ScalarField::from_rows(&[[0.5, 0.49]]).unwrap()]).unwrap();
        assert_eq!(l.as_slice(), &[1, 2]);
    }

    #[test]
    fn binary_phases_reproduce_region_support() {
        let u1 = ScalarField::from_rows(&[[1.0, 1.0, 0.0, 0.0]]).unwrap();
        let u2 = ScalarField::from_rows(&[[1.0, 0.0, 1.0, 0.0]]).unwrap();
        let l = postprocess_binary(&[u1, u2]).unwrap();
        assert_eq!(l.as_slice(), &[1, 2, 3, 4]);
    }

    #[test]
    fn mixed_pixel_maps_through_region_code() {
        let u1 = ScalarField::filled(1, 1, 0.6);
        let u2 = ScalarField::filled(1, 1, 0.2);
        // bits (inside, outside) -> u1 (1 - u2) -> second region
        assert_eq!(postprocess_binary(&[u1, u2]).unwrap().as_slice(), &[2]);
    }

    #[test]
    fn argmax_with_ties() {
        let a = ScalarField::from_rows(&[[0.9, 0.5, 0.1]]).unwrap();
        let b = ScalarField::from_rows(&[[0.1, 0.5, 0.3]]).unwrap();
        let c = ScalarField::from_rows(&[[0.0, 0.0, 0.6]]).unwrap();
        assert_eq!(postprocess_argmax(&[a, b, c]).unwrap().as_slice(), &[1, 1, 3]);
    }

    #[test]
    fn argmax_of_one_hot_recovers_index() {
        let hot = [2u32, 1, 3, 3, 1];
        let fields: Vec<_> = (1..=3u32)
            .map(|l| ScalarField::from_vec(1, 5, hot.iter().map(|&h| f64::from(h == l)).collect()).unwrap())
            .collect();
        assert_eq!(postprocess_argmax(&fields).unwrap().as_slice(), &hot);
    }

    #[test]
    fn circle_init_is_binary_and_centered() {
        let u = InitPolicy::circle().phases((64, 64), 1).unwrap();
        assert!(u[0].as_slice().iter().all(|&v| v == 0.0 || v == 1.0));
        let area = u[0].sum();
        // disk of radius 10 holds about π·100 pixels
        assert!((area - std::f64::consts::PI * 100.0).abs() < 20.0);
        assert_eq!(u[0].get(31, 31), 1.0);
        assert_eq!(u[0].get(0, 0), 0.0);
    }

    #[test]
    fn twin_circles_are_shifted_apart() {
        let u = InitPolicy::twin_circles().phases((100, 100), 2).unwrap();
        // the first disk reaches further right than the second
        assert_eq!(u[0].get(50, 84), 1.0);
        assert_eq!(u[1].get(50, 84), 0.0);
        assert_eq!(u[1].get(50, 15), 1.0);
        assert_eq!(u[0].get(50, 15), 0.0);
        assert!(InitPolicy::twin_circles().phases((100, 100), 1).is_err());
    }

    #[test]
    fn fuzzy_inits_partition_unity() {
        for (policy, n) in
            [(InitPolicy::circle(), 2), (InitPolicy::twin_circles(), 4), (InitPolicy::UniformRandom { seed: 3 }, 5)]
        {
            let u = policy.memberships((40, 40), n).unwrap();
            assert_eq!(u.len(), n);
            for p in 0..1600 {
                let s: f64 = u.iter().map(|f| f.as_slice()[p]).sum();
                assert!((s - 1.0).abs() < 1e-12);
            }
        }
        assert!(InitPolicy::circle().memberships((10, 10), 3).is_err());
    }

    #[test]
    fn random_init_is_seeded() {
        let a = InitPolicy::UniformRandom { seed: 9 }.memberships((8, 8), 3).unwrap();
        let b = InitPolicy::UniformRandom { seed: 9 }.memberships((8, 8), 3).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn label_map_validates() {
        assert!(LabelMap::new(1, 2, 2, vec![1, 3]).is_err());
        assert!(LabelMap::new(1, 2, 2, vec![0, 1]).is_err());
        let l = LabelMap::new(1, 3, 2, vec![1, 2, 2]).unwrap();
        assert_eq!(l.histogram(), vec![1, 2]);
        assert_eq!(l.relabel(&[2, 1], 2).unwrap().as_slice(), &[2, 1, 1]);
    }
}
