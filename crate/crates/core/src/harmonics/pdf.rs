use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::mesh::channel;
use crate::scalar::Scalar;
use crate::vec3::Vec3;

use super::basis::{coeff_count, sh_basis_all};
use super::ShError;

/// The per-vertex quantity a PDF describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Property {
    Curvature,
    Composition,
    Concentration,
    Hue,
    Saturation,
    /// Indicator of the patch mask; used to undo the zero fill outside a patch.
    Support,
}

impl Property {
    pub const MATERIAL: [Property; 3] = [Property::Curvature, Property::Composition, Property::Concentration];
    pub const SOURCE: [Property; 5] = [
        Property::Curvature,
        Property::Composition,
        Property::Concentration,
        Property::Hue,
        Property::Saturation,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Property::Curvature => "curvature",
            Property::Composition => "composition",
            Property::Concentration => "concentration",
            Property::Hue => "hue",
            Property::Saturation => "saturation",
            Property::Support => "support",
        }
    }

    /// Mesh channel holding the samples, if the property is stored on meshes.
    pub fn channel(self) -> Option<&'static str> {
        match self {
            Property::Curvature => Some(channel::CURVATURE),
            Property::Composition => Some(channel::COMPOSITION),
            Property::Concentration => Some(channel::CONCENTRATION),
            Property::Hue => Some(channel::HUE),
            Property::Saturation => Some(channel::SATURATION),
            Property::Support => None,
        }
    }
}

impl fmt::Display for Property {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Property {
    type Err = ShError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "curvature" => Property::Curvature,
            "composition" => Property::Composition,
            "concentration" => Property::Concentration,
            "hue" => Property::Hue,
            "saturation" => Property::Saturation,
            "support" => Property::Support,
            _ => return Err(ShError::Malformed(format!("unknown property `{s}`"))),
        })
    }
}

/// Spherical-harmonic coefficients of one property, grouped by band.
/// Band `i` holds `2i + 1` coefficients ordered `m = -i ..= i`.
#[derive(Debug, Clone, PartialEq)]
pub struct Pdf<T> {
    property: Property,
    bands: Vec<Vec<T>>,
}

#[derive(Serialize, Deserialize)]
struct PdfRecord {
    property: Property,
    order: usize,
    bands: Vec<Vec<f64>>,
}

impl<T: Scalar> Serialize for Pdf<T> {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.record().serialize(s)
    }
}

impl<'de, T: Scalar> Deserialize<'de> for Pdf<T> {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        Self::from_record(PdfRecord::deserialize(d)?).map_err(serde::de::Error::custom)
    }
}

const BINARY_MAGIC: &[u8; 4] = b"SHPD";

impl<T: Scalar> Pdf<T> {
    pub fn zeros(property: Property, order: usize) -> Self {
        Pdf {
            property,
            bands: (0..=order).map(|i| vec![T::zero(); 2 * i + 1]).collect(),
        }
    }

    pub fn from_bands(property: Property, bands: Vec<Vec<T>>) -> Result<Self, ShError> {
        if bands.is_empty() {
            return Err(ShError::Malformed("a PDF needs at least band 0".into()));
        }
        for (i, b) in bands.iter().enumerate() {
            if b.len() != 2 * i + 1 {
                return Err(ShError::Malformed(format!(
                    "band {i} has {} coefficients, expected {}",
                    b.len(),
                    2 * i + 1
                )));
            }
        }
        Ok(Pdf { property, bands })
    }

    /// Builds from coefficients in flat `l² + l + m` order.
    pub fn from_flat(property: Property, order: usize, coeffs: &[T]) -> Result<Self, ShError> {
        if coeffs.len() != coeff_count(order) {
            return Err(ShError::Malformed(format!(
                "{} coefficients for order {order}, expected {}",
                coeffs.len(),
                coeff_count(order)
            )));
        }
        let bands = (0..=order)
            .map(|i| coeffs[i * i..(i + 1) * (i + 1)].to_vec())
            .collect();
        Ok(Pdf { property, bands })
    }

    pub fn property(&self) -> Property {
        self.property
    }

    pub fn with_property(mut self, property: Property) -> Self {
        self.property = property;
        self
    }

    pub fn order(&self) -> usize {
        self.bands.len() - 1
    }

    pub fn bands(&self) -> &[Vec<T>] {
        &self.bands
    }

    pub fn band(&self, i: usize) -> &[T] {
        &self.bands[i]
    }

    pub fn band_mut(&mut self, i: usize) -> &mut [T] {
        &mut self.bands[i]
    }

    pub fn flat(&self) -> Vec<T> {
        self.bands.iter().flatten().copied().collect()
    }

    pub fn band_norms(&self) -> Vec<T> {
        self.bands
            .iter()
            .map(|b| b.iter().map(|&c| c * c).sum::<T>().sqrt())
            .collect()
    }

    pub fn is_zero(&self) -> bool {
        self.bands.iter().flatten().all(|c| c.is_zero())
    }

    pub fn scaled(&self, s: T) -> Self {
        Pdf {
            property: self.property,
            bands: self.bands.iter().map(|b| b.iter().map(|&c| c * s).collect()).collect(),
        }
    }

    pub fn max_abs_diff(&self, other: &Self) -> T {
        self.flat()
            .iter()
            .zip(other.flat())
            .fold(T::zero(), |m, (&a, b)| m.max((a - b).abs()))
    }

    /// `Σ_{i,m} Π^i[m] Y_i^m(dir)`.
    pub fn eval(&self, dir: Vec3<T>) -> T {
        let mut basis = vec![T::zero(); coeff_count(self.order())];
        self.eval_with(dir, &mut basis)
    }

    /// As [`Pdf::eval`], reusing a caller-provided basis buffer.
    pub fn eval_with(&self, dir: Vec3<T>, basis: &mut [T]) -> T {
        sh_basis_all(self.order(), dir, basis);
        self.bands
            .iter()
            .flatten()
            .zip(basis.iter())
            .map(|(&c, &y)| c * y)
            .sum()
    }

    pub fn cast<U: Scalar>(&self) -> Pdf<U> {
        Pdf {
            property: self.property,
            bands: self
                .bands
                .iter()
                .map(|b| b.iter().map(|&c| U::lit(c.as_f64())).collect())
                .collect(),
        }
    }

    fn record(&self) -> PdfRecord {
        PdfRecord {
            property: self.property,
            order: self.order(),
            bands: self
                .bands
                .iter()
                .map(|b| b.iter().map(|c| c.as_f64()).collect())
                .collect(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.record()).expect("PDF record serialises")
    }

    pub fn from_json(text: &str) -> Result<Self, ShError> {
        let rec: PdfRecord = serde_json::from_str(text).map_err(|e| ShError::Malformed(e.to_string()))?;
        Self::from_record(rec)
    }

    fn from_record(rec: PdfRecord) -> Result<Self, ShError> {
        if rec.bands.len() != rec.order + 1 {
            return Err(ShError::Malformed(format!(
                "order {} but {} bands",
                rec.order,
                rec.bands.len()
            )));
        }
        let bands = rec
            .bands
            .into_iter()
            .map(|b| b.into_iter().map(T::lit).collect())
            .collect();
        Self::from_bands(rec.property, bands)
    }

    /// Little-endian binary form: magic, property name, order, then the flat
    /// coefficients as `f64`.
    pub fn to_binary(&self) -> Vec<u8> {
        let name = self.property.name().as_bytes();
        let mut out = Vec::with_capacity(16 + name.len() + 8 * coeff_count(self.order()));
        out.extend_from_slice(BINARY_MAGIC);
        out.push(name.len() as u8);
        out.extend_from_slice(name);
        out.extend_from_slice(&(self.order() as u32).to_le_bytes());
        for c in self.bands.iter().flatten() {
            out.extend_from_slice(&c.as_f64().to_le_bytes());
        }
        out
    }

    pub fn from_binary(bytes: &[u8]) -> Result<Self, ShError> {
        let bad = |what: &str| ShError::Malformed(format!("binary PDF: {what}"));
        if bytes.len() < 5 || &bytes[..4] != BINARY_MAGIC {
            return Err(bad("bad magic"));
        }
        let nlen = bytes[4] as usize;
        let name = bytes.get(5..5 + nlen).ok_or_else(|| bad("truncated name"))?;
        let property: Property = std::str::from_utf8(name).map_err(|_| bad("name not UTF-8"))?.parse()?;
        let at = 5 + nlen;
        let order_bytes = bytes.get(at..at + 4).ok_or_else(|| bad("truncated order"))?;
        let order = u32::from_le_bytes(order_bytes.try_into().expect("4 bytes")) as usize;
        let body = &bytes[at + 4..];
        if body.len() != 8 * coeff_count(order) {
            return Err(bad("coefficient count does not match order"));
        }
        let coeffs: Vec<T> = body
            .chunks_exact(8)
            .map(|c| T::lit(f64::from_le_bytes(c.try_into().expect("8 bytes"))))
            .collect();
        Self::from_flat(property, order, &coeffs)
    }

    /// Writes JSON, or the binary form when the extension is `.bin`.
    pub fn save(&self, path: &Path) -> Result<(), ShError> {
        if path.extension().is_some_and(|e| e == "bin") {
            std::fs::write(path, self.to_binary())?;
        } else {
            std::fs::write(path, self.to_json())?;
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, ShError> {
        if path.extension().is_some_and(|e| e == "bin") {
            Self::from_binary(&std::fs::read(path)?)
        } else {
            Self::from_json(&std::fs::read_to_string(path)?)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Pdf<f64> {
        let coeffs: Vec<f64> = (0..16).map(|i| (i as f64 * 0.37).sin()).collect();
        Pdf::from_flat(Property::Hue, 3, &coeffs).unwrap()
    }

    #[test]
    fn layout_invariants() {
        let p = sample();
        assert_eq!(p.order(), 3);
        assert_eq!(p.bands().iter().map(Vec::len).collect::<Vec<_>>(), vec![1, 3, 5, 7]);
        assert_eq!(p.flat().len(), 16);
        assert!(Pdf::<f64>::from_bands(Property::Hue, vec![vec![1.0], vec![1.0, 2.0]]).is_err());
    }

    #[test]
    fn constant_pdf_evaluates_to_one() {
        let mut p = Pdf::<f64>::zeros(Property::Concentration, 4);
        assert_eq!(p.eval(Vec3::new(0.0, 1.0, 0.0)), 0.0);
        p.band_mut(0)[0] = 2.0 * std::f64::consts::PI.sqrt();
        for d in [Vec3::new(0.0, 0.0, 1.0), Vec3::new(0.6, 0.0, 0.8)] {
            assert!((p.eval(d) - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn json_and_binary_round_trip() {
        let p = sample();
        assert_eq!(Pdf::<f64>::from_json(&p.to_json()).unwrap(), p);
        assert_eq!(Pdf::<f64>::from_binary(&p.to_binary()).unwrap(), p);
        let mut bytes = p.to_binary();
        bytes.pop();
        assert!(Pdf::<f64>::from_binary(&bytes).is_err());
    }
}
