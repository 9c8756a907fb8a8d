//! Fuzzy region segmentation with the AITV regularizer.
//!
//! `N` membership fields, each in `[0, 1]`, are pushed toward a partition
//! of unity by the penalty `ν/2 ‖Σ_ℓ u_ℓ − 1‖²` instead of a hard
//! constraint. Memberships are updated one at a time against the current
//! sum of the others.

use serde::{Deserialize, Serialize};

use crate::aicv::{check_input, step_sq, validate_common};
use crate::aitv::{aitv_value, isotropic_subgradient, validate_alpha};
use crate::error::{Error, Result};
use crate::field::{inner_x, relerr, ScalarField};
use crate::image::{weighted_means, Constants, Image};
use crate::pdhg::{self, PdhglsParams, Subproblem};
use crate::region::fidelity_fields;
use crate::segment::{postprocess_argmax, InitPolicy, OuterRecord, SegmentationResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AifrConfig {
    pub alpha: f64,
    pub lambda: f64,
    pub c: f64,
    pub num_regions: usize,
    /// Weight of the sum-to-one penalty.
    pub nu: f64,
    /// Stop once every membership's relative change is below this.
    pub outer_tol: f64,
    pub max_outer_iters: usize,
    pub pdhgls: PdhglsParams,
    pub init: InitPolicy,
}

impl AifrConfig {
    pub fn default_for(num_regions: usize) -> Self {
        Self {
            alpha: 0.5,
            lambda: 2.0,
            c: 1e-8,
            num_regions,
            nu: 10.0,
            outer_tol: 1e-4,
            max_outer_iters: 40,
            pdhgls: PdhglsParams::default(),
            init: InitPolicy::default_for_regions(num_regions),
        }
    }

    pub fn validate(&self) -> Result<()> {
        validate_alpha(self.alpha)?;
        validate_common(self.lambda, self.c, self.outer_tol, self.max_outer_iters)?;
        if self.num_regions < 2 {
            return Err(Error::config("regions", format!("must be at least 2, got {}", self.num_regions)));
        }
        if !(self.nu > 0.0 && self.nu.is_finite()) {
            return Err(Error::config("nu", format!("must be positive, got {}", self.nu)));
        }
        self.pdhgls.validate()
    }
}

/// Membership-weighted means `⟨f, u_ℓ⟩ / ⟨1, u_ℓ⟩`, 0 on zero mass.
pub fn update_constants_fr(f: &Image, memberships: &[ScalarField]) -> Result<Constants> {
    check_memberships(f, memberships)?;
    Ok(weighted_means(f, memberships))
}

/// `Σ_ℓ AITV(u_ℓ) + λ Σ_ℓ ⟨f_ℓ(c), u_ℓ⟩ + ν/2 ‖Σ_ℓ u_ℓ − 1‖²`, or `+∞`
/// outside the box.
pub fn objective_fr(
    f: &Image,
    memberships: &[ScalarField],
    constants: &Constants,
    alpha: f64,
    lambda: f64,
    nu: f64,
) -> Result<f64> {
    check_memberships(f, memberships)?;
    if constants.num_regions() != memberships.len() {
        return Err(Error::InvalidInput(format!(
            "expected {} region constants, got {}",
            memberships.len(),
            constants.num_regions()
        )));
    }
    if !memberships.iter().all(ScalarField::is_in_unit_box) {
        return Ok(f64::INFINITY);
    }
    let reg: f64 = memberships.iter().map(|u| aitv_value(u, alpha)).sum();
    let fid: f64 = fidelity_fields(f, constants).iter().zip(memberships).map(|(fl, ul)| inner_x(fl, ul)).sum();
    let gap: f64 = partition_defect(memberships).as_slice().iter().map(|v| v * v).sum();
    Ok(reg + lambda * fid + 0.5 * nu * gap)
}

/// `Σ_ℓ u_ℓ − 1` per pixel.
pub fn partition_defect(memberships: &[ScalarField]) -> ScalarField {
    let (m, n) = memberships[0].shape();
    let mut out = ScalarField::filled(m, n, -1.0);
    for u in memberships {
        out.add_scaled(1.0, u);
    }
    out
}

fn check_memberships(f: &Image, memberships: &[ScalarField]) -> Result<()> {
    if memberships.is_empty() {
        return Err(Error::InvalidInput("no membership fields".into()));
    }
    for u in memberships {
        f.channels()[0].check_shape(u)?;
    }
    Ok(())
}

pub fn segment_fr(f: &Image, config: &AifrConfig) -> Result<SegmentationResult> {
    segment_fr_observed(f, config, &mut |_| {})
}

pub fn segment_fr_observed(
    f: &Image,
    config: &AifrConfig,
    observer: &mut dyn FnMut(&OuterRecord),
) -> Result<SegmentationResult> {
    config.validate()?;
    check_input(f)?;
    let u = config.init.memberships(f.shape(), config.num_regions)?;
    run(f, config, u, observer)
}

/// Runs from explicit memberships instead of the configured policy.
pub fn segment_fr_from(f: &Image, config: &AifrConfig, memberships: Vec<ScalarField>) -> Result<SegmentationResult> {
    config.validate()?;
    check_input(f)?;
    if memberships.len() != config.num_regions || !memberships.iter().all(ScalarField::is_in_unit_box) {
        return Err(Error::InvalidInput("initial memberships must be num_regions fields in [0, 1]".into()));
    }
    check_memberships(f, &memberships)?;
    run(f, config, memberships, &mut |_| {})
}

fn run(
    f: &Image,
    config: &AifrConfig,
    mut u: Vec<ScalarField>,
    observer: &mut dyn FnMut(&OuterRecord),
) -> Result<SegmentationResult> {
    let n_regions = u.len();
    let mut constants = update_constants_fr(f, &u)?;
    let mut objective_trace = vec![objective_fr(f, &u, &constants, config.alpha, config.lambda, config.nu)?];
    let mut records = Vec::new();
    let mut converged = false;
    // per-block duals carried between outer iterations under the safeguard
    let mut duals = vec![None; u.len()];
    let (m, n) = f.shape();

    for t in 1..=config.max_outer_iters {
        let previous = u.clone();
        let fid = fidelity_fields(f, &constants);
        // running sum of all memberships, kept current as each one changes
        let mut total = ScalarField::zeros(m, n);
        for ul in &u {
            total.add_scaled(1.0, ul);
        }
        let mut inner_iterations = 0;
        let mut any_reverted = false;
        for ell in 0..n_regions {
            let q = isotropic_subgradient(&u[ell]);
            let others = total.zip_map(&u[ell], |s, v| s - v);
            let linear = fid[ell].map(|v| config.lambda * v);
            let sub = Subproblem::with_coupling(
                linear,
                u[ell].clone(),
                q,
                config.alpha,
                config.c,
                config.nu,
                others.clone(),
            )?;
            let sol = match &duals[ell] {
                Some(p) => pdhg::solve_warm(&sub, &u[ell], p, &config.pdhgls)?,
                None => pdhg::solve(&sub, &u[ell], &config.pdhgls)?,
            };
            inner_iterations += sol.iterations;
            any_reverted |= sol.reverted;
            if config.pdhgls.safeguard {
                duals[ell] = Some(sol.p.clone());
            }
            total = others;
            total.add_scaled(1.0, &sol.u);
            u[ell] = sol.u;
        }
        constants = update_constants_fr(f, &u)?;
        let value = objective_fr(f, &u, &constants, config.alpha, config.lambda, config.nu)?;
        let change = u.iter().zip(&previous).map(|(a, b)| relerr(a, b)).fold(0.0, f64::max);
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

    let labels = postprocess_argmax(&u)?;
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
