use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::harmonics::{Pdf, Property};
use crate::linalg::{norm, Matrix};
use crate::scalar::Scalar;

use super::TransferError;

/// Band vectors shorter than this count as zero.
pub const ZERO_BAND: f64 = 1e-12;

/// Proper rotation taking unit vector `u` to unit vector `v`, built as two
/// Householder reflections: across the hyperplane normal to `u + v`
/// (sending `u` to `-v`), then across the one normal to `v`.
///
/// In one dimension no rotation can flip a sign, so `[-1]` is returned when
/// `u = -v`; that band then has determinant -1.
pub fn householder_rotation<T: Scalar>(u: &[T], v: &[T]) -> Matrix<T> {
    let d = u.len();
    if u == v {
        return Matrix::identity(d);
    }
    if d == 1 {
        return Matrix::scalar(1, if u[0] * v[0] < T::zero() { -T::one() } else { T::one() });
    }
    let s: Vec<T> = u.iter().zip(v).map(|(&a, &b)| a + b).collect();
    let sn = norm(&s);
    if sn > T::lit(1e-8) {
        let w: Vec<T> = s.iter().map(|&x| x / sn).collect();
        return Matrix::householder(v).matmul(&Matrix::householder(&w));
    }
    // u ≈ -v: reflect u onto v directly, then reflect across any hyperplane
    // containing v to restore det +1.
    let diff: Vec<T> = u.iter().zip(v).map(|(&a, &b)| a - b).collect();
    let dn = norm(&diff);
    let a: Vec<T> = diff.iter().map(|&x| x / dn).collect();
    let k = (0..d)
        .min_by(|&i, &j| v[i].abs().partial_cmp(&v[j].abs()).expect("finite"))
        .expect("non-empty band");
    let mut b: Vec<T> = (0..d).map(|i| if i == k { T::one() } else { T::zero() }).collect();
    let vk = v[k];
    for (bi, &vi) in b.iter_mut().zip(v) {
        *bi -= vk * vi;
    }
    let bn = norm(&b);
    b.iter_mut().for_each(|x| *x /= bn);
    Matrix::householder(&b).matmul(&Matrix::householder(&a))
}

/// Per-band map between two coefficient vectors: `T = (l_tar / l_src) R`.
#[derive(Debug, Clone, PartialEq)]
pub struct BandMap<T> {
    pub matrix: Matrix<T>,
    pub rotation: Matrix<T>,
    pub l_src: T,
    pub l_tar: T,
    /// Set when the source band vanishes but the target does not; no map
    /// exists and the identity is stored instead.
    pub excluded: bool,
}

pub fn band_map<T: Scalar>(src: &[T], tar: &[T]) -> BandMap<T> {
    let d = src.len();
    let (ls, lt) = (norm(src), norm(tar));
    let eps = T::lit(ZERO_BAND);
    if ls < eps {
        return BandMap {
            matrix: Matrix::identity(d),
            rotation: Matrix::identity(d),
            l_src: ls,
            l_tar: lt,
            excluded: lt >= eps,
        };
    }
    let u: Vec<T> = src.iter().map(|&x| x / ls).collect();
    if lt < eps {
        return BandMap {
            matrix: Matrix::zeros(d, d),
            rotation: Matrix::identity(d),
            l_src: ls,
            l_tar: lt,
            excluded: false,
        };
    }
    let v: Vec<T> = tar.iter().map(|&x| x / lt).collect();
    let rotation = householder_rotation(&u, &v);
    let matrix = if src == tar {
        Matrix::identity(d)
    } else {
        rotation.scaled(lt / ls)
    };
    BandMap {
        matrix,
        rotation,
        l_src: ls,
        l_tar: lt,
        excluded: false,
    }
}

/// Per-band transforms between two distributions. A property distribution
/// map has `from == to`; a material map links a material property to an
/// appearance property on the same patch.
#[derive(Debug, Clone, PartialEq)]
pub struct Pdm<T> {
    pub from: Property,
    pub to: Property,
    pub bands: Vec<Matrix<T>>,
    /// Bands left out of costs and transform chains.
    pub excluded: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
struct PdmRecord {
    from: Property,
    to: Property,
    order: usize,
    /// Row-major band matrices.
    bands: Vec<Vec<f64>>,
    excluded: Vec<usize>,
}

impl<T: Scalar> Pdm<T> {
    pub fn identity(property: Property, order: usize) -> Self {
        Pdm {
            from: property,
            to: property,
            bands: (0..=order).map(|i| Matrix::identity(2 * i + 1)).collect(),
            excluded: Vec::new(),
        }
    }

    /// `s · I` in every band.
    pub fn uniform_scale(property: Property, order: usize, s: T) -> Self {
        Pdm {
            from: property,
            to: property,
            bands: (0..=order).map(|i| Matrix::scalar(2 * i + 1, s)).collect(),
            excluded: Vec::new(),
        }
    }

    pub fn order(&self) -> usize {
        self.bands.len() - 1
    }

    pub fn is_excluded(&self, band: usize) -> bool {
        self.excluded.contains(&band)
    }

    /// Largest entrywise deviation from the identity over all bands.
    pub fn identity_deviation(&self) -> T {
        self.bands
            .iter()
            .map(|m| m.max_abs_diff(&Matrix::identity(m.rows())))
            .fold(T::zero(), T::max)
    }

    pub fn inverse(&self) -> Option<Self> {
        Some(Pdm {
            from: self.to,
            to: self.from,
            bands: self.bands.iter().map(Matrix::inverse).collect::<Option<Vec<_>>>()?,
            excluded: self.excluded.clone(),
        })
    }

    pub fn to_json(&self) -> String {
        let rec = PdmRecord {
            from: self.from,
            to: self.to,
            order: self.order(),
            bands: self
                .bands
                .iter()
                .map(|m| m.as_slice().iter().map(|x| x.as_f64()).collect())
                .collect(),
            excluded: self.excluded.clone(),
        };
        serde_json::to_string_pretty(&rec).expect("PDM record serialises")
    }

    pub fn from_json(text: &str) -> Result<Self, TransferError> {
        let rec: PdmRecord = serde_json::from_str(text).map_err(|e| TransferError::Malformed(e.to_string()))?;
        if rec.bands.len() != rec.order + 1 {
            return Err(TransferError::Malformed(format!("order {} but {} bands", rec.order, rec.bands.len())));
        }
        let mut bands = Vec::with_capacity(rec.bands.len());
        for (i, b) in rec.bands.into_iter().enumerate() {
            let d = 2 * i + 1;
            if b.len() != d * d {
                return Err(TransferError::Malformed(format!("band {i} has {} entries, expected {}", b.len(), d * d)));
            }
            bands.push(Matrix::from_row_major(d, d, b.into_iter().map(T::lit).collect()));
        }
        Ok(Pdm {
            from: rec.from,
            to: rec.to,
            bands,
            excluded: rec.excluded,
        })
    }

    /// Writes JSON, or little-endian `f64` binary when the extension is `.bin`.
    pub fn save(&self, path: &Path) -> Result<(), TransferError> {
        if path.extension().is_some_and(|e| e == "bin") {
            std::fs::write(path, self.to_binary())?;
        } else {
            std::fs::write(path, self.to_json())?;
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, TransferError> {
        if path.extension().is_some_and(|e| e == "bin") {
            Self::from_binary(&std::fs::read(path)?)
        } else {
            Self::from_json(&std::fs::read_to_string(path)?)
        }
    }

    /// Magic `SHPM`, both property names, order, excluded list, then every
    /// band matrix row-major.
    pub fn to_binary(&self) -> Vec<u8> {
        let mut out = b"SHPM".to_vec();
        for p in [self.from, self.to] {
            let n = p.name().as_bytes();
            out.push(n.len() as u8);
            out.extend_from_slice(n);
        }
        out.extend_from_slice(&(self.order() as u32).to_le_bytes());
        out.extend_from_slice(&(self.excluded.len() as u32).to_le_bytes());
        for &e in &self.excluded {
            out.extend_from_slice(&(e as u32).to_le_bytes());
        }
        for m in &self.bands {
            for x in m.as_slice() {
                out.extend_from_slice(&x.as_f64().to_le_bytes());
            }
        }
        out
    }

    pub fn from_binary(bytes: &[u8]) -> Result<Self, TransferError> {
        let bad = |w: &str| TransferError::Malformed(format!("binary PDM: {w}"));
        if bytes.get(..4) != Some(b"SHPM".as_slice()) {
            return Err(bad("bad magic"));
        }
        let mut at = 4;
        let mut take = |n: usize| -> Result<&[u8], TransferError> {
            let s = bytes.get(at..at + n).ok_or_else(|| bad("truncated"))?;
            at += n;
            Ok(s)
        };
        let mut props = [Property::Support; 2];
        for p in &mut props {
            let len = take(1)?[0] as usize;
            let name = std::str::from_utf8(take(len)?).map_err(|_| bad("name not UTF-8"))?;
            *p = name.parse().map_err(|_| bad("unknown property"))?;
        }
        let u32_at = |s: &[u8]| u32::from_le_bytes(s.try_into().expect("4 bytes")) as usize;
        let order = u32_at(take(4)?);
        let ne = u32_at(take(4)?);
        let mut excluded = Vec::with_capacity(ne);
        for _ in 0..ne {
            excluded.push(u32_at(take(4)?));
        }
        let mut bands = Vec::with_capacity(order + 1);
        for i in 0..=order {
            let d = 2 * i + 1;
            let raw = take(8 * d * d)?;
            let data = raw
                .chunks_exact(8)
                .map(|c| T::lit(f64::from_le_bytes(c.try_into().expect("8 bytes"))))
                .collect();
            bands.push(Matrix::from_row_major(d, d, data));
        }
        if take(1).is_ok() {
            return Err(bad("trailing bytes"));
        }
        Ok(Pdm {
            from: props[0],
            to: props[1],
            bands,
            excluded,
        })
    }
}

fn check_orders<T: Scalar>(a: &Pdf<T>, b: &Pdf<T>) -> Result<(), TransferError> {
    if a.order() != b.order() {
        return Err(TransferError::OrderMismatch(a.order(), b.order()));
    }
    Ok(())
}

fn build<T: Scalar>(src: &Pdf<T>, tar: &Pdf<T>) -> Pdm<T> {
    let mut bands = Vec::with_capacity(src.order() + 1);
    let mut excluded = Vec::new();
    for i in 0..=src.order() {
        let m = band_map(src.band(i), tar.band(i));
        if m.excluded {
            excluded.push(i);
        }
        bands.push(m.matrix);
    }
    Pdm {
        from: src.property(),
        to: tar.property(),
        bands,
        excluded,
    }
}

/// Map taking every band of `src` onto the matching band of `tar`.
pub fn compute_pdm<T: Scalar>(src: &Pdf<T>, tar: &Pdf<T>) -> Result<Pdm<T>, TransferError> {
    check_orders(src, tar)?;
    if src.property() != tar.property() {
        return Err(TransferError::PropertyMismatch(src.property(), tar.property()));
    }
    Ok(build(src, tar))
}

/// Same construction between a material and an appearance PDF of one patch.
pub fn compute_material_map<T: Scalar>(material: &Pdf<T>, appearance: &Pdf<T>) -> Result<Pdm<T>, TransferError> {
    check_orders(material, appearance)?;
    Ok(build(material, appearance))
}

/// `Σ_i |1 - det T^i|` over the bands that are not excluded.
pub fn pdm_cost<T: Scalar>(pdm: &Pdm<T>) -> T {
    pdm.bands
        .iter()
        .enumerate()
        .filter(|(i, _)| !pdm.is_excluded(*i))
        .map(|(_, m)| (T::one() - m.determinant()).abs())
        .sum()
}

/// Band-wise product `T^i Π^i`, tagged with the map's target property.
pub fn apply_pdm<T: Scalar>(q: &Pdm<T>, pdf: &Pdf<T>) -> Result<Pdf<T>, TransferError> {
    if q.order() != pdf.order() {
        return Err(TransferError::OrderMismatch(q.order(), pdf.order()));
    }
    let bands = q
        .bands
        .iter()
        .zip(pdf.bands())
        .map(|(m, b)| m.mul_vec(b))
        .collect();
    Ok(Pdf::from_bands(q.to, bands)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quarter_turn_in_two_dimensions() {
        let m = band_map(&[1.0f64, 0.0], &[0.0, 2.0]);
        let t = &m.matrix;
        assert!((t.mul_vec(&[1.0, 0.0])[1] - 2.0).abs() < 1e-15);
        assert!(t.mul_vec(&[1.0, 0.0])[0].abs() < 1e-15);
        assert!((t.determinant() - 4.0).abs() < 1e-12);
        // Rotation by +90°: (0, 1) goes to (-1, 0).
        let r = m.rotation.mul_vec(&[0.0, 1.0]);
        assert!((r[0] + 1.0).abs() < 1e-15 && r[1].abs() < 1e-15);
    }

    #[test]
    fn antiparallel_vectors_give_proper_rotation() {
        let u = [0.6f64, 0.0, 0.8];
        let v = [-0.6, 0.0, -0.8];
        let r = householder_rotation(&u, &v);
        let ru = r.mul_vec(&u);
        for k in 0..3 {
            assert!((ru[k] - v[k]).abs() < 1e-12);
        }
        assert!((r.determinant() - 1.0).abs() < 1e-12);
        assert!(r.orthogonality_error() < 1e-12);
    }

    #[test]
    fn zero_bands() {
        let both = band_map(&[0.0, 0.0, 0.0], &[0.0, 0.0, 0.0]);
        assert!(!both.excluded && both.matrix == Matrix::identity(3));
        let src_only = band_map(&[0.0, 0.0, 0.0], &[1.0, 0.0, 0.0]);
        assert!(src_only.excluded && src_only.matrix == Matrix::identity(3));
        let tar_only = band_map(&[1.0, 0.0, 0.0], &[0.0, 0.0, 0.0]);
        assert!(!tar_only.excluded && tar_only.matrix.determinant() == 0.0);
    }

    #[test]
    fn uniform_scale_cost() {
        let src = Pdf::from_flat(Property::Concentration, 1, &[1.0, 0.2, -0.4, 0.3]).unwrap();
        let tar = src.scaled(2.0);
        let q = compute_pdm(&src, &tar).unwrap();
        assert!((pdm_cost(&q) - 8.0f64).abs() < 1e-12);
        assert_eq!(pdm_cost(&compute_pdm(&src, &src).unwrap()), 0.0);
    }

    #[test]
    fn json_and_binary_round_trip() {
        let src = Pdf::from_flat(Property::Hue, 2, &(1..=9).map(f64::from).collect::<Vec<_>>()).unwrap();
        let tar = Pdf::from_flat(Property::Hue, 2, &(1..=9).map(|x| (x * x) as f64 - 3.0).collect::<Vec<_>>()).unwrap();
        let q = compute_pdm(&src, &tar).unwrap();
        assert_eq!(Pdm::from_json(&q.to_json()).unwrap(), q);
        assert_eq!(Pdm::from_binary(&q.to_binary()).unwrap(), q);
    }

    #[test]
    fn mismatched_inputs_are_rejected() {
        let a = Pdf::<f64>::zeros(Property::Hue, 2);
        let b = Pdf::<f64>::zeros(Property::Hue, 3);
        let c = Pdf::<f64>::zeros(Property::Saturation, 2);
        assert!(matches!(compute_pdm(&a, &b), Err(TransferError::OrderMismatch(2, 3))));
        assert!(matches!(compute_pdm(&a, &c), Err(TransferError::PropertyMismatch(..))));
        assert!(compute_material_map(&a, &c).is_ok());
    }
}
