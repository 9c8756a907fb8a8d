//! Region indicators for the multiphase Chan-Vese encoding.
//!
//! `M` relaxed phase fields `u_1..u_M` encode `N = 2^M` regions. Region `ℓ`
//! (0-based here; region `ℓ + 1` in 1-based numbering) is the product over
//! phases `k` of either `u_k` or `1 − u_k`. Writing `ℓ` in binary with `M`
//! digits, most significant digit first, digit `k` selects `u_k` when it is
//! 0 and `1 − u_k` when it is 1. Region 0 is `Π u_k` and region `N − 1` is
//! `Π (1 − u_k)`; for `M = 2` the order is `u₁u₂, u₁(1−u₂), (1−u₁)u₂,
//! (1−u₁)(1−u₂)`.

use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::image::{Constants, Image};

/// Largest supported phase count. Coefficient assembly costs `O(M·2^M)` per
/// pixel, which grows quickly past a handful of phases.
pub const MAX_PHASES: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RegionCode {
    num_phases: usize,
}

impl RegionCode {
    pub fn new(num_phases: usize) -> Result<Self> {
        if num_phases == 0 || num_phases > MAX_PHASES {
            return Err(Error::config("phases", format!("must be between 1 and {MAX_PHASES}, got {num_phases}")));
        }
        Ok(Self { num_phases })
    }

    pub fn num_phases(&self) -> usize {
        self.num_phases
    }

    pub fn num_regions(&self) -> usize {
        1 << self.num_phases
    }

    /// Whether region `ell` takes the factor `1 − u_k` (rather than `u_k`).
    #[inline]
    pub fn uses_complement(&self, ell: usize, k: usize) -> bool {
        (ell >> (self.num_phases - 1 - k)) & 1 == 1
    }

    /// Region selected by a per-phase binary decision (`true` means the
    /// pixel belongs to `u_k`).
    pub fn region_of(&self, inside: impl IntoIterator<Item = bool>) -> usize {
        inside.into_iter().fold(0, |acc, b| (acc << 1) | usize::from(!b))
    }

    fn check_stack(&self, u: &[ScalarField]) -> Result<()> {
        if u.len() != self.num_phases {
            return Err(Error::InvalidInput(format!("expected {} phase fields, got {}", self.num_phases, u.len())));
        }
        for w in &u[1..] {
            u[0].check_shape(w)?;
        }
        Ok(())
    }

    #[inline]
    fn factor(&self, ell: usize, k: usize, value: f64) -> f64 {
        if self.uses_complement(ell, k) {
            1.0 - value
        } else {
            value
        }
    }
}

/// `R_ℓ(u)`: the pixelwise product of the factors selected by `ell`.
pub fn region_indicator(code: &RegionCode, ell: usize, u: &[ScalarField]) -> Result<ScalarField> {
    code.check_stack(u)?;
    if ell >= code.num_regions() {
        return Err(Error::InvalidInput(format!("region index {ell} out of range")));
    }
    let (m, n) = u[0].shape();
    let mut out = ScalarField::filled(m, n, 1.0);
    for (k, uk) in u.iter().enumerate() {
        for (o, &v) in out.as_mut_slice().iter_mut().zip(uk.as_slice()) {
            *o *= code.factor(ell, k, v);
        }
    }
    Ok(out)
}

/// All `N` indicators in region order.
pub fn region_indicators(code: &RegionCode, u: &[ScalarField]) -> Result<Vec<ScalarField>> {
    (0..code.num_regions()).map(|ell| region_indicator(code, ell, u)).collect()
}

/// `f_ℓ(c) = Σ_channels (f − c_ℓ)²`, one field per region.
pub fn fidelity_fields(f: &Image, c: &Constants) -> Vec<ScalarField> {
    let (m, n) = f.shape();
    c.0.iter()
        .map(|cl| {
            debug_assert_eq!(cl.len(), f.num_channels());
            let mut out = ScalarField::zeros(m, n);
            for (ch, &cv) in f.channels().iter().zip(cl) {
                for (o, &v) in out.as_mut_slice().iter_mut().zip(ch.as_slice()) {
                    *o += (v - cv) * (v - cv);
                }
            }
            out
        })
        .collect()
}

/// Coefficient of `u_k` in `Σ_ℓ ⟨f_ℓ, R_ℓ(u)⟩`, each `R_ℓ` being affine in
/// `u_k`. The other phases are read from `u` as given, so the caller decides
/// which of them are already updated.
pub fn linear_coefficient(code: &RegionCode, k: usize, fid: &[ScalarField], u: &[ScalarField]) -> Result<ScalarField> {
    code.check_stack(u)?;
    if k >= code.num_phases() {
        return Err(Error::InvalidInput(format!("phase index {k} out of range")));
    }
    if fid.len() != code.num_regions() {
        return Err(Error::InvalidInput(format!("expected {} fidelity fields, got {}", code.num_regions(), fid.len())));
    }
    for f in fid {
        u[0].check_shape(f)?;
    }
    let (m, n) = u[0].shape();
    let mut out = ScalarField::zeros(m, n);
    let mut values = vec![0.0; code.num_phases()];
    for (p, o) in out.as_mut_slice().iter_mut().enumerate() {
        for (v, uj) in values.iter_mut().zip(u) {
            *v = uj.as_slice()[p];
        }
        let mut acc = 0.0;
        for (ell, f) in fid.iter().enumerate() {
            let mut prod = f.as_slice()[p];
            for (j, &v) in values.iter().enumerate() {
                if j != k {
                    prod *= code.factor(ell, j, v);
                }
            }
            if code.uses_complement(ell, k) {
                acc -= prod;
            } else {
                acc += prod;
            }
        }
        *o = acc;
    }
    Ok(out)
}
