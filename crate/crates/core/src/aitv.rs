//! The weighted anisotropic-minus-isotropic total variation
//! `‖Du‖₁ − α‖Du‖₂,₁` and the subgradient of its isotropic part.

use crate::error::{Error, Result};
use crate::field::{grad, norm_l1, norm_l21, GradientField, ScalarField};

/// Weight of the isotropic term, restricted to `[0, 1]` so the functional
/// stays nonnegative.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct AitvParams {
    alpha: f64,
}

impl AitvParams {
    pub fn new(alpha: f64) -> Result<Self> {
        validate_alpha(alpha)?;
        Ok(Self { alpha })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }
}

pub(crate) fn validate_alpha(alpha: f64) -> Result<()> {
    if (0.0..=1.0).contains(&alpha) {
        Ok(())
    } else {
        Err(Error::config("alpha", format!("must lie in [0, 1], got {alpha}")))
    }
}

/// `‖Du‖₁ − α‖Du‖₂,₁`.
pub fn aitv_value(u: &ScalarField, alpha: f64) -> f64 {
    let g = grad(u);
    gradient_aitv(&g, alpha)
}

pub(crate) fn gradient_aitv(g: &GradientField, alpha: f64) -> f64 {
    if alpha == 0.0 {
        return norm_l1(g);
    }
    norm_l1(g) - alpha * norm_l21(g)
}

/// Pixelwise `Du / |Du|`, with `(0, 0)` wherever the gradient vanishes
/// exactly. The result is an element of `∂‖D·‖₂,₁` lifted to gradient space.
pub fn isotropic_subgradient(u: &ScalarField) -> GradientField {
    let mut g = grad(u);
    for (a, b) in g.x.as_mut_slice().iter_mut().zip(g.y.as_mut_slice()) {
        let norm = a.hypot(*b);
        if norm == 0.0 {
            *a = 0.0;
            *b = 0.0;
        } else {
            *a /= norm;
            *b /= norm;
        }
    }
    g
}
