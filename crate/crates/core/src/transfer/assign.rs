use serde::{Deserialize, Serialize};

use crate::harmonics::Property;
use crate::linalg::Matrix;
use crate::scalar::Scalar;

use super::{Pdm, TransferError};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AssignParams {
    pub mu_s: f64,
    pub f_s: f64,
    pub mu_h: f64,
    /// Boundary blend radius as sphere arc length. `None` means two mean
    /// sphere edge lengths.
    pub blend_sigma: Option<f64>,
    /// Use the frequency weights `(n+1) + f_s i` without dividing by `n+1`.
    pub raw_sigma: bool,
}

impl Default for AssignParams {
    fn default() -> Self {
        AssignParams {
            mu_s: 1.0,
            f_s: 0.0,
            mu_h: 1.0,
            blend_sigma: None,
            raw_sigma: false,
        }
    }
}

impl AssignParams {
    pub fn validate(&self) -> Result<(), TransferError> {
        let ok = |x: f64| x.is_finite() && x > 0.0;
        if !ok(self.mu_s) || !ok(self.mu_h) || !self.f_s.is_finite() {
            return Err(TransferError::Params(format!(
                "mu_s and mu_h must be positive, f_s finite (got {}, {}, {})",
                self.mu_s, self.mu_h, self.f_s
            )));
        }
        if let Some(s) = self.blend_sigma {
            if !ok(s) {
                return Err(TransferError::Params(format!("blend sigma must be positive, got {s}")));
            }
        }
        Ok(())
    }
}

/// Raw per-band frequency weight `(n+1) + f_s i`.
pub fn raw_frequency_weight(n: usize, f_s: f64, band: usize) -> f64 {
    (n + 1) as f64 + f_s * band as f64
}

/// Frequency weight as applied: raw, or divided by `n+1` so that `f_s = 0`
/// is neutral.
pub fn frequency_weight(n: usize, f_s: f64, band: usize, raw: bool) -> f64 {
    let w = raw_frequency_weight(n, f_s, band);
    if raw {
        w
    } else {
        w / (n + 1) as f64
    }
}

/// `A B A⁻¹`, or `B` alone when `A` is singular.
fn conjugate<T: Scalar>(a: &Matrix<T>, b: &Matrix<T>) -> (Matrix<T>, bool) {
    match a.inverse() {
        Some(inv) => (a.matmul(b).matmul(&inv), true),
        None => (b.clone(), false),
    }
}

fn chain<T: Scalar>(
    mm: &Pdm<T>,
    q: &Pdm<T>,
    out: Property,
    scale: impl Fn(usize) -> T,
) -> Result<Pdm<T>, TransferError> {
    if mm.order() != q.order() {
        return Err(TransferError::OrderMismatch(mm.order(), q.order()));
    }
    let mut bands = Vec::with_capacity(q.bands.len());
    let mut excluded = q.excluded.clone();
    for (i, (a, b)) in mm.bands.iter().zip(&q.bands).enumerate() {
        let (m, ok) = if mm.is_excluded(i) {
            (b.clone(), false)
        } else {
            conjugate(a, b)
        };
        if !ok && !excluded.contains(&i) {
            excluded.push(i);
        }
        bands.push(m.scaled(scale(i)));
    }
    excluded.sort_unstable();
    Ok(Pdm {
        from: out,
        to: out,
        bands,
        excluded,
    })
}

/// Saturation map `μ_s σ^i · T_cs T_c T_cs⁻¹` per band.
pub fn saturation_transform<T: Scalar>(
    mm_cs: &Pdm<T>,
    q_c: &Pdm<T>,
    params: &AssignParams,
) -> Result<Pdm<T>, TransferError> {
    let n = q_c.order();
    chain(mm_cs, q_c, Property::Saturation, |i| {
        T::lit(params.mu_s * frequency_weight(n, params.f_s, i, params.raw_sigma))
    })
}

/// Hue map `μ_h · T_mh T_m T_mh⁻¹` per band.
pub fn hue_transform<T: Scalar>(mm_mh: &Pdm<T>, q_m: &Pdm<T>, mu_h: f64) -> Result<Pdm<T>, TransferError> {
    chain(mm_mh, q_m, Property::Hue, |_| T::lit(mu_h))
}
