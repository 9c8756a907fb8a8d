//! Multi-channel images and per-region constant vectors.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::ScalarField;

/// One or more same-sized channels. Grayscale images have one channel,
/// color images three.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    channels: Vec<ScalarField>,
}

impl Image {
    pub fn new(channels: Vec<ScalarField>) -> Result<Self> {
        let first = channels.first().ok_or_else(|| Error::InvalidInput("image has no channels".into()))?;
        for c in &channels[1..] {
            first.check_shape(c)?;
        }
        Ok(Self { channels })
    }

    pub fn gray(f: ScalarField) -> Self {
        Self { channels: vec![f] }
    }

    pub fn channels(&self) -> &[ScalarField] {
        &self.channels
    }

    pub fn channels_mut(&mut self) -> &mut [ScalarField] {
        &mut self.channels
    }

    pub fn num_channels(&self) -> usize {
        self.channels.len()
    }

    pub fn shape(&self) -> (usize, usize) {
        self.channels[0].shape()
    }

    pub fn is_in_unit_box(&self) -> bool {
        self.channels.iter().all(ScalarField::is_in_unit_box)
    }

    /// Largest absolute intensity over all channels.
    pub fn max_abs(&self) -> f64 {
        self.channels.iter().flat_map(|c| c.as_slice().iter()).fold(0.0, |acc: f64, v| acc.max(v.abs()))
    }

    /// ITU-R BT.601 luma for three-channel input; other inputs are returned
    /// unchanged.
    pub fn to_luma(&self) -> Image {
        if self.channels.len() != 3 {
            return self.clone();
        }
        let [r, g, b] = [&self.channels[0], &self.channels[1], &self.channels[2]];
        let y = ScalarField::from_fn(r.rows(), r.cols(), |i, j| {
            LUMA_WEIGHTS[0] * r.get(i, j) + LUMA_WEIGHTS[1] * g.get(i, j) + LUMA_WEIGHTS[2] * b.get(i, j)
        });
        Image::gray(y)
    }
}

/// BT.601 luma weights for (R, G, B).
pub const LUMA_WEIGHTS: [f64; 3] = [0.299, 0.587, 0.114];

/// Region means, indexed `[region][channel]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Constants(pub Vec<Vec<f64>>);

impl Constants {
    pub fn num_regions(&self) -> usize {
        self.0.len()
    }

    pub fn region(&self, ell: usize) -> &[f64] {
        &self.0[ell]
    }

    /// Grayscale convenience: one value per region.
    pub fn gray(values: &[f64]) -> Self {
        Self(values.iter().map(|&v| vec![v]).collect())
    }
}

/// Weighted channel means `⟨f, w⟩ / ⟨1, w⟩` for each weight field, with 0
/// for weights of zero total mass.
pub(crate) fn weighted_means(f: &Image, weights: &[ScalarField]) -> Constants {
    Constants(
        weights
            .iter()
            .map(|w| {
                let mass = w.sum();
                f.channels()
                    .iter()
                    .map(|ch| if mass == 0.0 { 0.0 } else { crate::field::inner_x(ch, w) / mass })
                    .collect()
            })
            .collect(),
    )
}
