//! Multiphase Chan-Vese segmentation with the AITV regularizer.
//!
//! `M` relaxed phase fields encode `2^M` regions. Each outer iteration
//! linearizes the isotropic part of every phase at its current value, solves
//! the resulting convex problem for `u_k` with the others held fixed
//! (Gauss-Seidel order), then refits the region constants in closed form.

use serde::{Deserialize, Serialize};

use crate::aitv::{aitv_value, isotropic_subgradient, validate_alpha};
use crate::error::{Error, Result};
use crate::field::{inner_x, relerr_stacked, ScalarField};
use crate::image::{weighted_means, Constants, Image};
use crate::pdhg::{self, PdhglsParams, Subproblem};
use crate::region::{fidelity_fields, linear_coefficient, region_indicators, RegionCode};
use crate::segment::{postprocess_binary, InitPolicy, OuterRecord, SegmentationResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AicvConfig {
    pub alpha: f64,
    pub lambda: f64,
    /// Strong-convexity weight added to every subproblem.
    pub c: f64,
    pub num_phases: usize,
    pub outer_tol: f64,
    pub max_outer_iters: usize,
    pub pdhgls: PdhglsParams,
    pub init: InitPolicy,
}

impl AicvConfig {
    /// Defaults for `num_phases` phases: tolerance `1e-6` for one phase and
    /// `1e-4` otherwise, circle-based initialization where one exists.
    pub fn default_for(num_phases: usize) -> Self {
        Self {
            alpha: 0.5,
            lambda: 2.0,
            c: 1e-8,
            num_phases,
            outer_tol: if num_phases == 1 { 1e-6 } else { 1e-4 },
            max_outer_iters: 20,
            pdhgls: PdhglsParams::default(),
            init: InitPolicy::default_for_phases(num_phases),
        }
    }

    pub fn validate(&self) -> Result<()> {
        validate_alpha(self.alpha)?;
        validate_common(self.lambda, self.c, self.outer_tol, self.max_outer_iters)?;
        RegionCode::new(self.num_phases)?;
        self.pdhgls.validate()
    }
}

pub(crate) fn validate_common(lambda: f64, c: f64, outer_tol: f64, max_outer: usize) -> Result<()> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::config("lambda", format!("must be positive, got {lambda}")));
    }
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::config("c", format!("must be positive, got {c}")));
    }
    if outer_tol.is_nan() || outer_tol < 0.0 {
        return Err(Error::config("tol_outer", "must be nonnegative"));
    }
    if max_outer == 0 {
        return Err(Error::config("max_outer", "must be at least 1"));
    }
    Ok(())
}

pub(crate) fn check_input(f: &Image) -> Result<()> {
    if !f.is_in_unit_box() {
        return Err(Error::InvalidInput("image intensities must lie in [0, 1]".into()));
    }
    Ok(())
}

/// Region means `⟨f, R_ℓ⟩ / ⟨1, R_ℓ⟩` per channel, 0 for empty regions.
pub fn update_constants(f: &Image, phases: &[ScalarField], code: &RegionCode) -> Result<Constants> {
    check_phases(f, phases)?;
    Ok(weighted_means(f, &region_indicators(code, phases)?))
}

/// `Σ_k AITV(u_k) + λ Σ_ℓ ⟨f_ℓ(c), R_ℓ(u)⟩`, or `+∞` when a phase leaves
/// `[0, 1]`.
pub fn objective(f: &Image, phases: &[ScalarField], constants: &Constants, alpha: f64, lambda: f64) -> Result<f64> {
    check_phases(f, phases)?;
    let code = RegionCode::new(phases.len())?;
    if constants.num_regions() != code.num_regions() {
        return Err(Error::InvalidInput(format!(
            "expected {} region constants, got {}",
            code.num_regions(),
            constants.num_regions()
        )));
    }
    if !phases.iter().all(ScalarField::is_in_unit_box) {
        return Ok(f64::INFINITY);
    }
    let reg: f64 = phases.iter().map(|u| aitv_value(u, alpha)).sum();
    let fid: f64 = fidelity_fields(f, constants)
        .iter()
        .zip(region_indicators(&code, phases)?)
        .map(|(fl, rl)| inner_x(fl, &rl))
        .sum();
    Ok(reg + lambda * fid)
}

fn check_phases(f: &Image, phases: &[ScalarField]) -> Result<()> {
    let first = phases.first().ok_or_else(|| Error::InvalidInput("no phase fields".into()))?;
    for u in phases {
        f.channels()[0].check_shape(u)?;
    }
    first.check_shape(&f.channels()[0])
}

pub fn segment(f: &Image, config: &AicvConfig) -> Result<SegmentationResult> {
    segment_observed(f, config, &mut |_| {})
}

/// Like [`segment`], calling `observer` after every outer iteration.
pub fn segment_observed(
    f: &Image,
    config: &AicvConfig,
    observer: &mut dyn FnMut(&OuterRecord),
) -> Result<SegmentationResult> {
    config.validate()?;
    check_input(f)?;
    let code = RegionCode::new(config.num_phases)?;
    let phases = config.init.phases(f.shape(), config.num_phases)?;
    run(f, config, &code, phases, observer)
}

/// Runs from explicit phase fields instead of the configured policy.
pub fn segment_from(f: &Image, config: &AicvConfig, phases: Vec<ScalarField>) -> Result<SegmentationResult> {
    config.validate()?;
    check_input(f)?;
    let code = RegionCode::new(config.num_phases)?;
    if phases.len() != config.num_phases || !phases.iter().all(ScalarField::is_in_unit_box) {
        return Err(Error::InvalidInput("initial phases must be num_phases fields in [0, 1]".into()));
    }
    check_phases(f, &phases)?;
    run(f, config, &code, phases, &mut |_| {})
}

fn run(
    f: &Image,
    config: &AicvConfig,
    code: &RegionCode,
    mut u: Vec<ScalarField>,
    observer: &mut dyn FnMut(&OuterRecord),
) -> Result<SegmentationResult> {
    let mut constants = update_constants(f, &u, code)?;
    let mut objective_trace = vec![objective(f, &u, &constants, config.alpha, config.lambda)?];
    let mut records = Vec::new();
    let mut converged = false;
    // per-block duals carried between outer iterations under the safeguard
    let mut duals = vec![None; u.len()];

    for t in 1..=config.max_outer_iters {
        let previous = u.clone();
        let fid = fidelity_fields(f, &constants);
        let mut inner_iterations = 0;
        let mut any_reverted = false;
        for k in 0..code.num_phases() {
            let q = isotropic_subgradient(&u[k]);
            let mut r = linear_coefficient(code, k, &fid, &u)?;
            r.as_mut_slice().iter_mut().for_each(|v| *v *= config.lambda);
            let sub = Subproblem::new(r, u[k].clone(), q, config.alpha, config.c)?;
            let sol = match &duals[k] {
                Some(p) => pdhg::solve_warm(&sub, &u[k], p, &config.pdhgls)?,
                None => pdhg::solve(&sub, &u[k], &config.pdhgls)?,
            };
            inner_iterations += sol.iterations;
            any_reverted |= sol.reverted;
            if config.pdhgls.safeguard {
                duals[k] = Some(sol.p.clone());
            }
            u[k] = sol.u;
        }
        constants = update_constants(f, &u, code)?;
        let value = objective(f, &u, &constants, config.alpha, config.lambda)?;
        let change = relerr_stacked(&u, &previous);
        let record = OuterRecord {
            iteration: t,
            objective: value,
            max_relerr: change,
            step_sq: step_sq(&u, &previous),
            inner_iterations,
        };
        observer(&record);
        objective_trace.push(value);
        records.push(record);
        // a reverted block has not settled, it only failed to make progress
        if change < config.outer_tol && !any_reverted {
            converged = true;
            break;
        }
    }

    let labels = postprocess_binary(&u)?;
    Ok(SegmentationResult {
        iterations: records.len(),
        memberships: u,
        constants,
        labels,
        objective_trace,
        records,
        converged,
    })
}

pub(crate) fn step_sq(u: &[ScalarField], previous: &[ScalarField]) -> f64 {
    u.iter()
        .zip(previous)
        .flat_map(|(a, b)| a.as_slice().iter().zip(b.as_slice()))
        .map(|(x, y)| (x - y) * (x - y))
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_rows() -> Image {
        Image::gray(ScalarField::from_rows(&[[0.0, 0.0], [1.0, 1.0]]).unwrap())
    }

    #[test]
    fn constants_of_exact_partition() {
        let code = RegionCode::new(1).unwrap();
        let u = [ScalarField::from_rows(&[[1.0, 1.0], [0.0, 0.0]]).unwrap()];
        assert_eq!(update_constants(&two_rows(), &u, &code).unwrap(), Constants::gray(&[0.0, 1.0]));
    }

    #[test]
    fn constants_of_empty_and_fractional_regions() {
        let code = RegionCode::new(1).unwrap();
        let all = [ScalarField::filled(2, 2, 1.0)];
        let c = update_constants(&two_rows(), &all, &code).unwrap();
        assert_eq!(c.region(1), &[0.0]);
        let half = [ScalarField::filled(2, 2, 0.5)];
        assert_eq!(update_constants(&two_rows(), &half, &code).unwrap(), Constants::gray(&[0.5, 0.5]));
    }

    #[test]
    fn exact_fit_objective_is_boundary_aitv() {
        let f = two_rows();
        let u = [ScalarField::from_rows(&[[1.0, 1.0], [0.0, 0.0]]).unwrap()];
        let c = Constants::gray(&[0.0, 1.0]);
        let v = objective(&f, &u, &c, 0.5, 3.0).unwrap();
        assert!((v - aitv_value(&u[0], 0.5)).abs() < 1e-15);
        let outside = [ScalarField::filled(2, 2, 1.5)];
        assert_eq!(objective(&f, &outside, &c, 0.5, 3.0).unwrap(), f64::INFINITY);
    }

    #[test]
    fn defaults_follow_phase_count() {
        let one = AicvConfig::default_for(1);
        assert_eq!(one.outer_tol, 1e-6);
        assert_eq!(one.c, 1e-8);
        assert_eq!(one.init, InitPolicy::circle());
        let two = AicvConfig::default_for(2);
        assert_eq!(two.outer_tol, 1e-4);
        assert_eq!(two.init, InitPolicy::twin_circles());
    }

    #[test]
    fn rejects_bad_config_and_input() {
        let f = two_rows();
        let mut cfg = AicvConfig::default_for(1);
        cfg.alpha = 1.5;
        assert!(matches!(segment(&f, &cfg), Err(Error::InvalidConfig { field: "alpha", .. })));
        cfg = AicvConfig::default_for(1);
        cfg.lambda = 0.0;
        assert!(matches!(segment(&f, &cfg), Err(Error::InvalidConfig { field: "lambda", .. })));
        let bright = Image::gray(ScalarField::filled(2, 2, 2.0));
        assert!(matches!(segment(&bright, &AicvConfig::default_for(1)), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn constant_image_yields_one_region() {
        let f = Image::gray(ScalarField::filled(16, 16, 0.4));
        let res = segment(&f, &AicvConfig::default_for(1)).unwrap();
        let hist = res.labels.histogram();
        assert!(hist.contains(&256), "{hist:?}");
        for c in &res.constants.0 {
            assert!(c[0] == 0.0 || (c[0] - 0.4).abs() < 1e-12);
        }
    }
}
