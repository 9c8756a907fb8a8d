//! Piecewise-constant image segmentation regularized by the weighted
//! anisotropic-minus-isotropic total variation `‖Du‖₁ − α‖Du‖₂,₁`.

pub mod aicv;
pub mod aifr;
pub mod aitv;
pub mod error;
pub mod eval;
pub mod field;
pub mod image;
pub mod pdhg;
pub mod region;
pub mod segment;

pub use error::{Error, Result};
pub use field::{GradientField, ScalarField};
pub use image::{Constants, Image};
pub use segment::{InitPolicy, LabelMap, SegmentationResult};
