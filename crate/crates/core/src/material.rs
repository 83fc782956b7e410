//! Colour conversions and material measurements derived from the
//! bispectral reflectance channel.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::mesh::{channel, Mesh, MeshError};
use crate::scalar::Scalar;

/// Parameters of the linear fluorescence model `I_f = k I_o φ ε b c`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FluorescenceParams {
    pub k: f64,
    pub incident: f64,
    pub quantum_yield: f64,
    pub absorptivity: f64,
    pub path_length: f64,
}

impl FluorescenceParams {
    pub fn is_valid(&self) -> bool {
        let v = [self.k, self.incident, self.quantum_yield, self.absorptivity, self.path_length];
        v.iter().all(|x| x.is_finite() && *x >= 0.0) && self.quantum_yield <= 1.0
    }
}

/// Emitted intensity for concentration `c`. Linear in `c`.
pub fn fluorescent_intensity(p: &FluorescenceParams, c: f64) -> f64 {
    p.k * p.incident * p.quantum_yield * p.absorptivity * p.path_length * c
}

/// Per-vertex material measurements: composition (circular), concentration
/// and the value component kept for final shading.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaterialSample<T> {
    pub composition: T,
    pub concentration: T,
    pub detail: T,
}

/// Hexcone HSV. Achromatic colours get hue 0.
pub fn rgb_to_hsv<T: Scalar>(rgb: [T; 3]) -> [T; 3] {
    let [r, g, b] = rgb;
    let max = r.max(g).max(b);
    let min = r.min(g).min(b);
    let delta = max - min;
    let v = max;
    let s = if max > T::zero() { delta / max } else { T::zero() };
    if delta <= T::zero() {
        return [T::zero(), s, v];
    }
    let six = T::lit(6.0);
    let sector = if max == r {
        let x = (g - b) / delta;
        if x < T::zero() {
            x + six
        } else {
            x
        }
    } else if max == g {
        (b - r) / delta + T::lit(2.0)
    } else {
        (r - g) / delta + T::lit(4.0)
    };
    let mut h = sector / six;
    if h >= T::one() {
        h -= T::one();
    }
    [h, s, v]
}

pub fn hsv_to_rgb<T: Scalar>(hsv: [T; 3]) -> [T; 3] {
    let [h, s, v] = hsv;
    let six = T::lit(6.0);
    let h = wrap_unit(h) * six;
    let i = h.floor();
    let f = h - i;
    let p = v * (T::one() - s);
    let q = v * (T::one() - s * f);
    let t = v * (T::one() - s * (T::one() - f));
    match i.to_usize().unwrap_or(0) % 6 {
        0 => [v, t, p],
        1 => [q, v, p],
        2 => [p, v, t],
        3 => [p, q, v],
        4 => [t, p, v],
        _ => [v, p, q],
    }
}

/// BT.601 luma.
pub fn rgb_to_yuv_luminance<T: Scalar>(rgb: [T; 3]) -> T {
    T::lit(0.299) * rgb[0] + T::lit(0.587) * rgb[1] + T::lit(0.114) * rgb[2]
}

/// Maps any real hue into `[0, 1)`.
pub fn wrap_unit<T: Scalar>(h: T) -> T {
    let w = h - h.floor();
    if w >= T::one() {
        T::zero()
    } else {
        w
    }
}

/// Circular distance on the unit hue circle, in `[0, 0.5]`.
pub fn hue_distance<T: Scalar>(a: T, b: T) -> T {
    let d = wrap_unit(a - b);
    d.min(T::one() - d)
}

/// Signed shortest step from `a` to `b` on the hue circle, in `[-0.5, 0.5)`.
pub fn hue_delta<T: Scalar>(a: T, b: T) -> T {
    let half = T::lit(0.5);
    wrap_unit(b - a + half) - half
}

pub fn measure<T: Scalar>(rgb: [T; 3]) -> MaterialSample<T> {
    let hsv = rgb_to_hsv(rgb);
    MaterialSample {
        composition: hsv[0],
        concentration: rgb_to_yuv_luminance(rgb),
        detail: hsv[2],
    }
}

/// Adds `composition`, `concentration` and `value` channels computed from
/// `bispectral_rgb`. Re-running overwrites them with identical values.
pub fn extract_measurements<T: Scalar>(mesh: &mut Mesh<T>) -> Result<(), MeshError> {
    let rgb = mesh.vector(channel::BISPECTRAL)?;
    let samples: Vec<MaterialSample<T>> = rgb.par_iter().map(|c| measure(c.0)).collect();
    mesh.set_scalar(channel::COMPOSITION, samples.iter().map(|s| s.composition).collect())?;
    mesh.set_scalar(channel::CONCENTRATION, samples.iter().map(|s| s.concentration).collect())?;
    mesh.set_scalar(channel::VALUE, samples.iter().map(|s| s.detail).collect())?;
    Ok(())
}
