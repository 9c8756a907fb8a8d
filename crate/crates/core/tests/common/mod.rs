//! Helpers shared by the integration tests: random instances and
//! independent reference solvers.

#![allow(dead_code)]

use aitv::aitv::isotropic_subgradient;
use aitv::field::{grad, grad_adjoint, GradientField, ScalarField};
use aitv::pdhg::Subproblem;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn uniform_field(rng: &mut impl Rng, m: usize, n: usize, lo: f64, hi: f64) -> ScalarField {
    ScalarField::from_fn(m, n, |_, _| rng.random_range(lo..=hi))
}

pub fn binary_field(rng: &mut impl Rng, m: usize, n: usize) -> ScalarField {
    ScalarField::from_fn(m, n, |_, _| if rng.random_bool(0.5) { 1.0 } else { 0.0 })
}

/// A random subproblem with a moderate strong-convexity weight, optionally
/// with the sum-to-one coupling.
pub fn random_subproblem(rng: &mut impl Rng, m: usize, n: usize, coupled: bool) -> Subproblem {
    let linear = uniform_field(rng, m, n, -2.0, 2.0);
    let anchor = uniform_field(rng, m, n, 0.0, 1.0);
    let q = isotropic_subgradient(&binary_field(rng, m, n));
    let alpha = rng.random_range(0.0..=1.0);
    let c = rng.random_range(0.05..=0.5);
    if coupled {
        let nu = rng.random_range(1.0..=10.0);
        let others = uniform_field(rng, m, n, 0.0, 1.0);
        Subproblem::with_coupling(linear, anchor, q, alpha, c, nu, others).unwrap()
    } else {
        Subproblem::new(linear, anchor, q, alpha, c).unwrap()
    }
}

/// Minimizes a subproblem by accelerated projected gradient ascent on its
/// dual. The smooth part is rebuilt from the subproblem's data as
/// `κ/2‖u − w‖²` up to a constant, so the dual is
/// `max_{|p|≤1} min_{u∈[0,1]} ⟨Du, p⟩ + κ/2‖u − w‖²` with the inner minimum
/// `u(p) = clip(w − Dᵀp/κ)`. Stops on a duality gap below `gap_tol`.
pub fn dual_fista(sub: &Subproblem, gap_tol: f64, max_iters: usize) -> ScalarField {
    let (m, n) = sub.shape();
    let c = sub.strong_convexity();
    let nu = sub.coupling_weight();
    let kappa = 2.0 * c + nu;
    let adj_q = grad_adjoint(sub.q());
    let w = ScalarField::from_fn(m, n, |i, j| {
        let mut off = 2.0 * c * sub.anchor().get(i, j) - sub.linear().get(i, j) + sub.alpha() * adj_q.get(i, j);
        if nu > 0.0 {
            off += nu * (1.0 - sub.coupling_residual().get(i, j));
        }
        off / kappa
    });
    let primal_of = |p: &GradientField| {
        let adj = grad_adjoint(p);
        w.zip_map(&adj, |wv, a| (wv - a / kappa).clamp(0.0, 1.0))
    };
    let half_sq = |u: &ScalarField| -> f64 {
        u.as_slice().iter().zip(w.as_slice()).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() * 0.5 * kappa
    };
    let step = kappa / 8.0;
    let project = |v: f64| v.clamp(-1.0, 1.0);

    let mut p = GradientField::zeros(m, n);
    let mut y = p.clone();
    let mut t = 1.0_f64;
    let mut last = primal_of(&p);
    for _ in 0..max_iters {
        let u = primal_of(&y);
        let g = grad(&u);
        let next = GradientField::new(
            y.x.zip_map(&g.x, |a, b| project(a + step * b)),
            y.y.zip_map(&g.y, |a, b| project(a + step * b)),
        )
        .unwrap();
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        let beta = (t - 1.0) / t_next;
        y = GradientField::new(
            next.x.zip_map(&p.x, |a, b| a + beta * (a - b)),
            next.y.zip_map(&p.y, |a, b| a + beta * (a - b)),
        )
        .unwrap();
        p = next;
        t = t_next;

        let u = primal_of(&p);
        let gu = grad(&u);
        let primal = gu.x.as_slice().iter().chain(gu.y.as_slice()).map(|v| v.abs()).sum::<f64>() + half_sq(&u);
        let dual = gu.x.as_slice().iter().zip(p.x.as_slice()).map(|(a, b)| a * b).sum::<f64>()
            + gu.y.as_slice().iter().zip(p.y.as_slice()).map(|(a, b)| a * b).sum::<f64>()
            + half_sq(&u);
        last = u;
        if primal - dual <= gap_tol * primal.abs().max(1.0) {
            break;
        }
    }
    last
}

/// Golden-section minimizer of a unimodal function on `[lo, hi]`.
pub fn golden_section(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut a = hi - r * (hi - lo);
    let mut b = lo + r * (hi - lo);
    let (mut fa, mut fb) = (f(a), f(b));
    while hi - lo > tol {
        if fa < fb {
            hi = b;
            b = a;
            fb = fa;
            a = hi - r * (hi - lo);
            fa = f(a);
        } else {
            lo = a;
            a = b;
            fa = fb;
            b = lo + r * (hi - lo);
            fb = f(b);
        }
    }
    0.5 * (lo + hi)
}
