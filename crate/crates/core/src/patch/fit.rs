use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::harmonics::{FitOptions, Pdf, Property, ShFitter};
use crate::material::wrap_unit;
use crate::mesh::{channel, lumped_vertex_areas, Mesh};
use crate::scalar::Scalar;
use crate::spheremap::SphericalMesh;

use super::{FitMask, Patch, PatchError, PatchSet};

/// Fitted distributions for one patch. `support` is the fit of the mask
/// indicator; dividing an evaluated PDF by it undoes the zero fill outside
/// the patch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct PatchPdfs<T> {
    pub id: i32,
    pub pdfs: BTreeMap<Property, Pdf<T>>,
    pub residuals: BTreeMap<Property, f64>,
    /// Circular mean of the hue inside the patch. Hue is fitted after a
    /// shift that moves this mean to 0.5.
    pub hue_center: Option<f64>,
}

impl<T: Scalar> PatchPdfs<T> {
    pub fn get(&self, p: Property) -> Option<&Pdf<T>> {
        self.pdfs.get(&p)
    }
}

/// Fitter bound to one spherical mesh. The normal matrix is shared by every
/// patch and property.
pub struct PatchFitter<'a, T> {
    sm: &'a SphericalMesh<T>,
    fitter: ShFitter<T>,
    weights: Vec<T>,
}

impl<'a, T: Scalar> PatchFitter<'a, T> {
    pub fn new(sm: &'a SphericalMesh<T>, opts: FitOptions) -> Result<Self, PatchError> {
        let weights = lumped_vertex_areas(sm.sphere_positions(), sm.faces());
        let fitter = ShFitter::new(sm.sphere_positions(), weights.clone(), opts)?;
        Ok(PatchFitter { sm, fitter, weights })
    }

    pub fn mesh(&self) -> &Mesh<T> {
        self.sm.base()
    }

    pub fn fitter(&self) -> &ShFitter<T> {
        &self.fitter
    }

    /// Fits `properties` (plus the support indicator) of patch `id` over
    /// the vertices selected by `mask`.
    pub fn fit(&self, id: i32, mask: &[bool], properties: &[Property]) -> Result<PatchPdfs<T>, PatchError> {
        let n = self.sm.vertex_count();
        let mut out = PatchPdfs {
            id,
            pdfs: BTreeMap::new(),
            residuals: BTreeMap::new(),
            hue_center: None,
        };
        let mut props: Vec<Property> = properties.to_vec();
        props.push(Property::Support);
        props.sort();
        props.dedup();
        for p in props {
            let values: Vec<T> = match p {
                Property::Support => vec![T::one(); n],
                Property::Hue => {
                    let hue = self.mesh().scalar(channel::HUE)?;
                    let c = circular_mean(hue, &self.weights, mask);
                    out.hue_center = Some(c.as_f64());
                    let shift = T::lit(0.5) - c;
                    hue.iter().map(|&h| wrap_unit(h + shift)).collect()
                }
                _ => self
                    .mesh()
                    .scalar(p.channel().expect("stored property"))?
                    .to_vec(),
            };
            let r = self.fitter.fit(p, &values, mask)?;
            out.residuals.insert(p, r.residual.as_f64());
            out.pdfs.insert(p, r.pdf);
        }
        Ok(out)
    }

    /// Fits every patch of `set`, in patch order.
    pub fn fit_all(&self, set: &PatchSet, kind: FitMask, properties: &[Property]) -> Result<Vec<PatchPdfs<T>>, PatchError> {
        let faces = self.sm.faces();
        set.patches
            .par_iter()
            .map(|p| self.fit(p.id, &set.fit_mask(p.id, kind, faces), properties))
            .collect()
    }
}

/// Area-weighted circular mean of values on the unit hue circle, in `[0, 1)`.
pub(crate) fn circular_mean<T: Scalar>(values: &[T], weights: &[T], mask: &[bool]) -> T {
    let tau = T::TAU();
    let (mut s, mut c) = (T::zero(), T::zero());
    for i in (0..values.len()).filter(|&i| mask[i]) {
        let a = values[i] * tau;
        s += weights[i] * a.sin();
        c += weights[i] * a.cos();
    }
    if s == T::zero() && c == T::zero() {
        return T::zero();
    }
    wrap_unit(s.atan2(c) / tau)
}

/// One-off fit of `properties` (plus the support indicator) over `patch`.
pub fn build_patch_pdfs<T: Scalar>(
    patch: &Patch,
    sm: &SphericalMesh<T>,
    properties: &[Property],
    opts: FitOptions,
) -> Result<PatchPdfs<T>, PatchError> {
    PatchFitter::new(sm, opts)?.fit(patch.id, &patch.vertex_mask(sm.vertex_count()), properties)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::primitives;

    #[test]
    fn circular_mean_wraps() {
        let v = [0.95, 0.05];
        let m = circular_mean(&v, &[1.0, 1.0], &[true, true]);
        assert!(m < 1e-12 || (1.0 - m) < 1e-12, "{m}");
        let m = circular_mean(&[0.2, 0.4], &[1.0, 1.0], &[true, true]);
        assert!((m - 0.3f64).abs() < 1e-12);
    }

    #[test]
    fn whole_sphere_constant_concentration() {
        let mut m = primitives::icosphere::<f64>(3);
        m.set_scalar(channel::CONCENTRATION, vec![1.0; m.vertex_count()]).unwrap();
        let sphere = m.positions.clone();
        let sm = SphericalMesh::new(m.clone(), sphere).unwrap();
        let p = Patch::new(0, (0..m.face_count()).collect(), &m);
        let opts = FitOptions { order: 4, ..FitOptions::default() };
        let pdfs = build_patch_pdfs(&p, &sm, &[Property::Concentration], opts).unwrap();
        let c = pdfs.get(Property::Concentration).unwrap().flat();
        assert!((c[0] - 2.0 * std::f64::consts::PI.sqrt()).abs() < 1e-6);
        assert!(c[1..].iter().all(|x| x.abs() < 1e-6));
        let again = build_patch_pdfs(&p, &sm, &[Property::Concentration], opts).unwrap();
        assert_eq!(again, pdfs);
    }
}
