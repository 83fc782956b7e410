//! Real spherical harmonics, least-squares fitting of sampled fields and the
//! per-band coefficient representation of a property distribution.

mod basis;
mod fit;
mod pdf;

use thiserror::Error;

pub use basis::{coeff_count, sh_basis, sh_basis_all, sh_index};
pub use fit::{fit_pdf, FitOptions, FitResult, OutOfMask, ShFitter, Solver, SphericalSamples};
pub use pdf::{Pdf, Property};

#[derive(Debug, Error)]
pub enum ShError {
    #[error("order index m = {m} is out of range for band l = {l}")]
    InvalidOrder { l: usize, m: i64 },
    #[error("direction {index} is not unit length (|d| = {norm})")]
    NotUnit { index: usize, norm: f64 },
    #[error("sample arrays disagree in length ({directions} directions, {values} values, {mask} mask entries)")]
    LengthMismatch {
        directions: usize,
        values: usize,
        mask: usize,
    },
    #[error("normal equations are rank deficient ({samples} samples for {coefficients} coefficients, no regularization)")]
    RankDeficient { samples: usize, coefficients: usize },
    #[error("PDF orders differ ({0} vs {1})")]
    OrderMismatch(usize, usize),
    #[error("malformed PDF: {0}")]
    Malformed(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
