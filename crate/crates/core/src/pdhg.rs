//! Primal-dual hybrid gradient with linesearch for the convex per-phase
//! subproblem
//!
//! ```text
//! min_{0 ≤ u ≤ 1}  ‖Du‖₁ + ⟨g, u⟩ + c‖u‖² − α⟨Du, q⟩ − 2c⟨u, a⟩ + ν/2 ‖s + u − 1‖²
//! ```
//!
//! where `g` is the linear field, `a` the linearization anchor (previous
//! outer iterate), `q` the fixed isotropic subgradient at `a`, and `s` the
//! sum of the other memberships (only when `ν > 0`). The anisotropic term
//! is dualized as `max_{|p| ≤ 1} ⟨Du, p⟩` with `p` clipped entrywise.
//!
//! Each iteration takes a closed-form clipped primal step with the current
//! `τ`, grows the step to `τ·√(1 + θ)`, and backtracks on the dual step by
//! the factor `μ` until
//! `√β·τ·‖(Dxᵀ Δpx, Dyᵀ Δpy)‖ ≤ δ·‖Δp‖`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{
    grad_adjoint, grad_into, grad_x_adjoint_into, grad_y_adjoint_into, inner_x, norm_l1, relerr, GradientField,
    ScalarField,
};

/// One linearized convex subproblem.
#[derive(Debug, Clone)]
pub struct Subproblem {
    linear: ScalarField,
    anchor: ScalarField,
    q: GradientField,
    alpha: f64,
    strong_convexity: f64,
    coupling_weight: f64,
    coupling_residual: ScalarField,
    /// `2c·a + ν(1 − s) − g + α·Dᵀq`, constant over the inner iterations.
    offset: ScalarField,
}

impl Subproblem {
    /// A subproblem without the sum-to-one coupling (`ν = 0`).
    pub fn new(
        linear: ScalarField,
        anchor: ScalarField,
        q: GradientField,
        alpha: f64,
        strong_convexity: f64,
    ) -> Result<Self> {
        let (m, n) = anchor.shape();
        Self::with_coupling(linear, anchor, q, alpha, strong_convexity, 0.0, ScalarField::zeros(m, n))
    }

    pub fn with_coupling(
        linear: ScalarField,
        anchor: ScalarField,
        q: GradientField,
        alpha: f64,
        strong_convexity: f64,
        coupling_weight: f64,
        coupling_residual: ScalarField,
    ) -> Result<Self> {
        anchor.check_shape(&linear)?;
        anchor.check_shape(&q.x)?;
        anchor.check_shape(&q.y)?;
        anchor.check_shape(&coupling_residual)?;
        crate::aitv::validate_alpha(alpha)?;
        if !(strong_convexity > 0.0 && strong_convexity.is_finite()) {
            return Err(Error::config("c", format!("must be positive, got {strong_convexity}")));
        }
        if !(coupling_weight >= 0.0 && coupling_weight.is_finite()) {
            return Err(Error::config("nu", format!("must be nonnegative, got {coupling_weight}")));
        }
        if q.pairs().any(|(a, b)| a.hypot(b) > 1.0 + 1e-12) {
            return Err(Error::InvalidInput("subgradient field exceeds unit norm".into()));
        }
        let adj_q = grad_adjoint(&q);
        let c2 = 2.0 * strong_convexity;
        let mut offset = anchor.map(|a| c2 * a);
        offset.add_scaled(-1.0, &linear);
        offset.add_scaled(alpha, &adj_q);
        if coupling_weight > 0.0 {
            for (o, &s) in offset.as_mut_slice().iter_mut().zip(coupling_residual.as_slice()) {
                *o += coupling_weight * (1.0 - s);
            }
        }
        Ok(Self { linear, anchor, q, alpha, strong_convexity, coupling_weight, coupling_residual, offset })
    }

    pub fn linear(&self) -> &ScalarField {
        &self.linear
    }

    pub fn anchor(&self) -> &ScalarField {
        &self.anchor
    }

    pub fn q(&self) -> &GradientField {
        &self.q
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn strong_convexity(&self) -> f64 {
        self.strong_convexity
    }

    pub fn coupling_weight(&self) -> f64 {
        self.coupling_weight
    }

    pub fn coupling_residual(&self) -> &ScalarField {
        &self.coupling_residual
    }

    pub fn shape(&self) -> (usize, usize) {
        self.anchor.shape()
    }

    /// Subproblem objective; `+∞` outside the unit box.
    pub fn objective(&self, u: &ScalarField) -> f64 {
        if !u.is_in_unit_box() {
            return f64::INFINITY;
        }
        let g = crate::field::grad(u);
        let c = self.strong_convexity;
        let mut value = norm_l1(&g) + inner_x(&self.linear, u) + c * inner_x(u, u)
            - self.alpha * crate::field::inner_y(&g, &self.q)
            - 2.0 * c * inner_x(u, &self.anchor);
        if self.coupling_weight > 0.0 {
            let r: f64 =
                u.as_slice().iter().zip(self.coupling_residual.as_slice()).map(|(&v, &s)| (s + v - 1.0).powi(2)).sum();
            value += 0.5 * self.coupling_weight * r;
        }
        value
    }

    /// Proximal primal step: the minimizer over `[0, 1]` of the smooth part
    /// plus `‖u − (u_prev − τ·Dᵀp)‖² / 2τ`, in closed form.
    pub fn primal_step(&self, u_prev: &ScalarField, dual_adjoint: &ScalarField, tau: f64) -> ScalarField {
        let (m, n) = self.shape();
        let mut out = ScalarField::zeros(m, n);
        self.primal_step_into(u_prev, dual_adjoint, tau, &mut out);
        out
    }

    fn primal_step_into(&self, u_prev: &ScalarField, dual_adjoint: &ScalarField, tau: f64, out: &mut ScalarField) {
        let inv_tau = 1.0 / tau;
        let denom = 2.0 * self.strong_convexity + inv_tau + self.coupling_weight;
        for (((o, &off), &u), &dp) in out
            .as_mut_slice()
            .iter_mut()
            .zip(self.offset.as_slice())
            .zip(u_prev.as_slice())
            .zip(dual_adjoint.as_slice())
        {
            *o = ((off + inv_tau * u - dp) / denom).clamp(0.0, 1.0);
        }
    }
}

/// Step-size and stopping parameters of the inner solver.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PdhglsParams {
    pub tau0: f64,
    pub beta: f64,
    pub delta: f64,
    pub mu: f64,
    pub inner_tol: f64,
    pub max_inner_iters: usize,
    /// Linesearch shrink attempts before giving up on one iteration.
    #[serde(default = "default_max_shrinks")]
    pub max_shrinks: usize,
    /// Stop only on a settled dual and a sufficient objective decrease, as
    /// described on [`solve`]. Off means stopping on the primal relative
    /// change alone and returning the last iterate.
    #[serde(default = "default_safeguard")]
    pub safeguard: bool,
}

fn default_safeguard() -> bool {
    true
}

fn default_max_shrinks() -> usize {
    60
}

impl Default for PdhglsParams {
    fn default() -> Self {
        Self {
            tau0: 1.0 / 8.0,
            beta: 1.0,
            delta: 0.9999,
            mu: 7.5e-5,
            inner_tol: 1e-6,
            max_inner_iters: 300,
            max_shrinks: default_max_shrinks(),
            safeguard: default_safeguard(),
        }
    }
}

impl PdhglsParams {
    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64| v > 0.0 && v.is_finite();
        if !positive(self.tau0) {
            return Err(Error::config("tau0", "must be positive"));
        }
        if !positive(self.beta) {
            return Err(Error::config("beta", "must be positive"));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::config("delta", "must lie in (0, 1)"));
        }
        if !(self.mu > 0.0 && self.mu < 1.0) {
            return Err(Error::config("mu", "must lie in (0, 1)"));
        }
        if self.inner_tol.is_nan() || self.inner_tol < 0.0 {
            return Err(Error::config("tol_inner", "must be nonnegative"));
        }
        if self.max_inner_iters == 0 {
            return Err(Error::config("max_inner", "must be at least 1"));
        }
        if self.max_shrinks == 0 {
            return Err(Error::config("max_shrinks", "must be at least 1"));
        }
        Ok(())
    }
}

/// Iterate of the inner solver. `adj_x` and `adj_y` cache `Dxᵀ p.x` and
/// `Dyᵀ p.y`.
#[derive(Debug, Clone)]
pub struct PdhglsState {
    pub u: ScalarField,
    pub p: GradientField,
    pub tau: f64,
    pub theta: f64,
    pub iteration: usize,
    adj_x: ScalarField,
    adj_y: ScalarField,
}

impl PdhglsState {
    /// Cold start: the given primal point, zero dual, `θ = 1`.
    pub fn new(u: ScalarField, tau0: f64) -> Self {
        let (m, n) = u.shape();
        Self {
            u,
            p: GradientField::zeros(m, n),
            tau: tau0,
            theta: 1.0,
            iteration: 0,
            adj_x: ScalarField::zeros(m, n),
            adj_y: ScalarField::zeros(m, n),
        }
    }

    /// Warm start from an explicit dual point.
    pub fn with_dual(u: ScalarField, p: GradientField, tau0: f64) -> Result<Self> {
        u.check_shape(&p.x)?;
        let mut s = Self::new(u, tau0);
        grad_x_adjoint_into(&p.x, &mut s.adj_x);
        grad_y_adjoint_into(&p.y, &mut s.adj_y);
        s.p = p;
        Ok(s)
    }

    /// `Dᵀp` of the current dual.
    pub fn dual_adjoint(&self) -> ScalarField {
        self.adj_x.zip_map(&self.adj_y, |a, b| a + b)
    }
}

/// `Proj_P(p + σ·D ū)` with the projection applied entrywise to each
/// component.
pub fn dual_step(p: &GradientField, u_bar: &ScalarField, sigma: f64) -> GradientField {
    let (m, n) = u_bar.shape();
    let mut g = GradientField::zeros(m, n);
    grad_into(u_bar, &mut g.x, &mut g.y);
    dual_update_in_place(p, sigma, &mut g);
    g
}

/// Overwrites `g` (holding `D ū`) with the projected dual update.
fn dual_update_in_place(p: &GradientField, sigma: f64, g: &mut GradientField) {
    for (o, &pv) in g.x.as_mut_slice().iter_mut().zip(p.x.as_slice()) {
        *o = project_unit(pv + sigma * *o);
    }
    for (o, &pv) in g.y.as_mut_slice().iter_mut().zip(p.y.as_slice()) {
        *o = project_unit(pv + sigma * *o);
    }
}

#[inline]
fn project_unit(v: f64) -> f64 {
    v / v.abs().max(1.0)
}

/// Outcome of one accepted iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepReport {
    /// Step used for the primal update.
    pub tau_used: f64,
    /// Accepted step carried to the next iteration.
    pub tau_next: f64,
    /// Step proposed before backtracking, `τ·√(1 + θ)`.
    pub tau_proposed: f64,
    pub shrinks: usize,
    /// `relerr(u_new, u_old)`.
    pub relerr: f64,
    /// Relative change of the dual, both components stacked.
    pub dual_relerr: f64,
}

/// Scratch buffers reused across iterations.
struct Workspace {
    u_new: ScalarField,
    u_bar: ScalarField,
    dual_adj: ScalarField,
    p_cand: GradientField,
    adj_x_cand: ScalarField,
    adj_y_cand: ScalarField,
}

impl Workspace {
    fn new(m: usize, n: usize) -> Self {
        Self {
            u_new: ScalarField::zeros(m, n),
            u_bar: ScalarField::zeros(m, n),
            dual_adj: ScalarField::zeros(m, n),
            p_cand: GradientField::zeros(m, n),
            adj_x_cand: ScalarField::zeros(m, n),
            adj_y_cand: ScalarField::zeros(m, n),
        }
    }
}

/// Performs one accepted primal-dual iteration with backtracking on the
/// dual step, updating `state` in place.
pub fn linesearch_iterate(state: &mut PdhglsState, sub: &Subproblem, params: &PdhglsParams) -> Result<StepReport> {
    let (m, n) = state.u.shape();
    let mut ws = Workspace::new(m, n);
    iterate_with(state, sub, params, &mut ws)
}

fn iterate_with(
    state: &mut PdhglsState,
    sub: &Subproblem,
    params: &PdhglsParams,
    ws: &mut Workspace,
) -> Result<StepReport> {
    for ((d, &a), &b) in ws.dual_adj.as_mut_slice().iter_mut().zip(state.adj_x.as_slice()).zip(state.adj_y.as_slice()) {
        *d = a + b;
    }
    let tau = state.tau;
    sub.primal_step_into(&state.u, &ws.dual_adj, tau, &mut ws.u_new);

    let tau_proposed = tau * (1.0 + state.theta).sqrt();
    let mut tau_next = tau_proposed;
    let sqrt_beta = params.beta.sqrt();
    let mut tau_trace = Vec::new();
    let mut shrinks = 0;
    let (theta, dual_diff) = loop {
        let theta = tau_next / tau;
        let sigma = params.beta * tau_next;
        for ((b, &un), &uo) in ws.u_bar.as_mut_slice().iter_mut().zip(ws.u_new.as_slice()).zip(state.u.as_slice()) {
            *b = un + theta * (un - uo);
        }
        grad_into(&ws.u_bar, &mut ws.p_cand.x, &mut ws.p_cand.y);
        dual_update_in_place(&state.p, sigma, &mut ws.p_cand);
        grad_x_adjoint_into(&ws.p_cand.x, &mut ws.adj_x_cand);
        grad_y_adjoint_into(&ws.p_cand.y, &mut ws.adj_y_cand);

        let adj_diff = sq_dist(&ws.adj_x_cand, &state.adj_x) + sq_dist(&ws.adj_y_cand, &state.adj_y);
        let dual_diff = sq_dist(&ws.p_cand.x, &state.p.x) + sq_dist(&ws.p_cand.y, &state.p.y);
        if sqrt_beta * tau_next * adj_diff.sqrt() <= params.delta * dual_diff.sqrt() {
            break (theta, dual_diff);
        }
        tau_trace.push(tau_next);
        shrinks += 1;
        if shrinks >= params.max_shrinks {
            return Err(Error::LinesearchFailure { attempts: shrinks, tau_trace });
        }
        tau_next *= params.mu;
    };

    // With an unchanged dual the test above carries no information, so the
    // step is held instead of growing without bound.
    let (tau_next, theta) = if dual_diff == 0.0 { (tau, 1.0) } else { (tau_next, theta) };
    let step_relerr = relerr(&ws.u_new, &state.u);
    let dual_scale = stacked_norm_sq(&ws.p_cand).max(stacked_norm_sq(&state.p)).sqrt();
    let dual_relerr = dual_diff.sqrt() / dual_scale.max(f64::EPSILON);
    std::mem::swap(&mut state.u, &mut ws.u_new);
    std::mem::swap(&mut state.p, &mut ws.p_cand);
    std::mem::swap(&mut state.adj_x, &mut ws.adj_x_cand);
    std::mem::swap(&mut state.adj_y, &mut ws.adj_y_cand);
    state.tau = tau_next;
    state.theta = theta;
    state.iteration += 1;
    Ok(StepReport { tau_used: tau, tau_next, tau_proposed, shrinks, relerr: step_relerr, dual_relerr })
}

fn stacked_norm_sq(p: &GradientField) -> f64 {
    p.x.as_slice().iter().chain(p.y.as_slice()).map(|v| v * v).sum()
}

fn sq_dist(a: &ScalarField, b: &ScalarField) -> f64 {
    a.as_slice().iter().zip(b.as_slice()).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Per-iteration record handed to an optional trace sink.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InnerEvent {
    pub iteration: usize,
    pub tau: f64,
    pub relerr: f64,
    pub objective: f64,
}

/// Result of an inner solve.
#[derive(Debug, Clone)]
pub struct InnerSolution {
    pub u: ScalarField,
    pub p: GradientField,
    pub iterations: usize,
    /// Whether the stopping test fired before the iteration cap.
    pub converged: bool,
    /// Whether the cap was reached without sufficient decrease, in which
    /// case `u` is the starting point.
    pub reverted: bool,
}

/// Runs the linesearch iteration from `u_init` with a zero dual.
///
/// With `params.safeguard` set, stops once the relative changes of `u` and `p` are both below
/// `params.inner_tol` and the objective has dropped by at least
/// `c‖u − u_init‖²` from its value at `u_init`. The decrease condition is what
/// an exact minimizer would satisfy by strong convexity; requiring it keeps
/// the outer iteration monotone even when steps are small after a
/// backtracking collapse. If the cap is reached without it, `u_init` is
/// returned. Without the safeguard the primal relative change alone decides
/// and the last iterate is returned.
pub fn solve(sub: &Subproblem, u_init: &ScalarField, params: &PdhglsParams) -> Result<InnerSolution> {
    solve_traced(sub, u_init, params, None)
}

/// Like [`solve`], starting the dual at `p_init` instead of zero.
pub fn solve_warm(
    sub: &Subproblem,
    u_init: &ScalarField,
    p_init: &GradientField,
    params: &PdhglsParams,
) -> Result<InnerSolution> {
    run_solve(sub, u_init, Some(p_init), params, None)
}

pub fn solve_traced(
    sub: &Subproblem,
    u_init: &ScalarField,
    params: &PdhglsParams,
    sink: Option<&mut dyn FnMut(InnerEvent)>,
) -> Result<InnerSolution> {
    run_solve(sub, u_init, None, params, sink)
}

fn run_solve(
    sub: &Subproblem,
    u_init: &ScalarField,
    p_init: Option<&GradientField>,
    params: &PdhglsParams,
    mut sink: Option<&mut dyn FnMut(InnerEvent)>,
) -> Result<InnerSolution> {
    params.validate()?;
    u_init.check_shape(sub.anchor())?;
    if !u_init.is_in_unit_box() {
        return Err(Error::InvalidInput("initial primal point outside [0, 1]".into()));
    }
    let (m, n) = u_init.shape();
    let start_value = sub.objective(u_init);
    // rounding allowance on objective comparisons
    let slack = 1e-12 * start_value.abs().max(1.0);
    let decreased =
        |u: &ScalarField| sub.objective(u) <= start_value - sub.strong_convexity() * sq_dist(u, u_init) + slack;
    let mut ws = Workspace::new(m, n);
    let mut state = match p_init {
        Some(p) => {
            if !p.x.as_slice().iter().chain(p.y.as_slice()).all(|v| v.abs() <= 1.0) {
                return Err(Error::InvalidInput("initial dual outside the unit box".into()));
            }
            PdhglsState::with_dual(u_init.clone(), p.clone(), params.tau0)?
        }
        None => PdhglsState::new(u_init.clone(), params.tau0),
    };
    let mut converged = false;
    while state.iteration < params.max_inner_iters {
        let report = iterate_with(&mut state, sub, params, &mut ws)?;
        if let Some(sink) = sink.as_deref_mut() {
            sink(InnerEvent {
                iteration: state.iteration,
                tau: report.tau_used,
                relerr: report.relerr,
                objective: sub.objective(&state.u),
            });
        }
        // A clipped primal step can stall while the dual is still growing
        // from zero, so both sides must settle.
        if !params.safeguard {
            if report.relerr < params.inner_tol {
                converged = true;
                break;
            }
        } else if report.relerr < params.inner_tol && report.dual_relerr < params.inner_tol && decreased(&state.u) {
            converged = true;
            break;
        }
    }
    let reverted = params.safeguard && !converged && !decreased(&state.u);
    let u = if reverted { u_init.clone() } else { state.u };
    Ok(InnerSolution { iterations: state.iteration, u, p: state.p, converged, reverted })
}
