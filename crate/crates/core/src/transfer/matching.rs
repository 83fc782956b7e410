use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::harmonics::Property;
use crate::mesh::Mesh;
use crate::patch::{PatchPdfs, PatchSet};
use crate::scalar::Scalar;
use crate::spheremap::disk_shape_energy;

use super::{compute_pdm, pdm_cost, TransferError};

/// Weights of the shape, area, curvature, composition and concentration
/// costs. Always normalized to sum to one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MatchWeights {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub delta: f64,
    pub lambda: f64,
}

#[derive(Deserialize)]
struct RawWeights {
    alpha: f64,
    beta: f64,
    gamma: f64,
    delta: f64,
    lambda: f64,
}

impl<'de> Deserialize<'de> for MatchWeights {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let r = RawWeights::deserialize(d)?;
        MatchWeights::new(r.alpha, r.beta, r.gamma, r.delta, r.lambda).map_err(serde::de::Error::custom)
    }
}

impl Default for MatchWeights {
    fn default() -> Self {
        MatchWeights::preset("paper-similar").expect("built-in preset")
    }
}

impl MatchWeights {
    pub fn new(alpha: f64, beta: f64, gamma: f64, delta: f64, lambda: f64) -> Result<Self, TransferError> {
        let w = [alpha, beta, gamma, delta, lambda];
        if w.iter().any(|x| !x.is_finite() || *x < 0.0) {
            return Err(TransferError::Params(format!("match weights must be finite and non-negative, got {w:?}")));
        }
        let s: f64 = w.iter().sum();
        if s <= 0.0 {
            return Err(TransferError::Params("match weights sum to zero".into()));
        }
        Ok(MatchWeights {
            alpha: alpha / s,
            beta: beta / s,
            gamma: gamma / s,
            delta: delta / s,
            lambda: lambda / s,
        })
    }

    pub const PRESETS: [&'static str; 3] = ["paper-similar", "paper-diffcolor", "paper-teaser"];

    /// Weight presets for similar objects, objects with different colours,
    /// and the teaser configuration.
    pub fn preset(name: &str) -> Option<Self> {
        let w = match name {
            "paper-similar" => [0.2, 0.2, 0.2, 0.2, 0.2],
            "paper-diffcolor" => [0.2, 0.2, 0.2, 0.35, 0.05],
            "paper-teaser" => [0.2, 0.2, 0.2, 0.25, 0.15],
            _ => return None,
        };
        MatchWeights::new(w[0], w[1], w[2], w[3], w[4]).ok()
    }

    pub fn sum(&self) -> f64 {
        self.alpha + self.beta + self.gamma + self.delta + self.lambda
    }

    fn total(&self, c: &Costs) -> f64 {
        self.alpha * c.shape
            + self.beta * c.area
            + self.gamma * c.curvature
            + self.delta * c.composition
            + self.lambda * c.concentration
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CostNormalization {
    /// Each cost column rescaled to `[0, 1]` over the candidate matrix.
    #[default]
    MinMax,
    Raw,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Costs {
    pub shape: f64,
    pub area: f64,
    pub curvature: f64,
    pub composition: f64,
    pub concentration: f64,
}

impl Costs {
    fn columns(&self) -> [f64; 5] {
        [self.shape, self.area, self.curvature, self.composition, self.concentration]
    }

    fn from_columns(c: [f64; 5]) -> Self {
        Costs {
            shape: c[0],
            area: c[1],
            curvature: c[2],
            composition: c[3],
            concentration: c[4],
        }
    }
}

/// What matching needs to know about one patch.
#[derive(Debug, Clone, PartialEq)]
pub struct PatchDescriptor<T> {
    pub id: i32,
    pub area: f64,
    /// Mean harmonic energy of the disk map; `None` when the patch is not a
    /// topological disk.
    pub shape_energy: Option<f64>,
    pub pdfs: PatchPdfs<T>,
}

/// Descriptors for every patch of `set`, in patch order.
pub fn describe_patches<T: Scalar>(
    mesh: &Mesh<T>,
    set: &PatchSet,
    pdfs: &[PatchPdfs<T>],
) -> Result<Vec<PatchDescriptor<T>>, TransferError> {
    if pdfs.len() != set.patches.len() {
        return Err(TransferError::Params(format!(
            "{} PDF bundles for {} patches",
            pdfs.len(),
            set.patches.len()
        )));
    }
    Ok(set
        .patches
        .par_iter()
        .zip(pdfs)
        .map(|(p, f)| PatchDescriptor {
            id: p.id,
            area: p.area,
            shape_energy: if p.is_background {
                None
            } else {
                disk_shape_energy(&mesh.positions, &mesh.faces, &p.face_ids)
                    .ok()
                    .map(|e| e.as_f64())
            },
            pdfs: f.clone(),
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchEntry {
    pub tar_id: i32,
    pub src_id: i32,
    /// Costs as weighted (normalized unless raw mode is selected).
    pub costs: Costs,
    pub raw_costs: Costs,
    pub total: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Assignment {
    pub matches: Vec<MatchEntry>,
    pub weights: MatchWeights,
    pub normalization: CostNormalization,
    /// Every evaluated foreground pair, target-major.
    pub candidates: Vec<MatchEntry>,
}

impl Assignment {
    pub fn source_for(&self, tar_id: i32) -> Option<i32> {
        self.matches.iter().find(|m| m.tar_id == tar_id).map(|m| m.src_id)
    }
}

fn pdf_cost<T: Scalar>(s: &PatchPdfs<T>, t: &PatchPdfs<T>, p: Property) -> Result<f64, TransferError> {
    let a = s.get(p).ok_or(TransferError::MissingPdf(s.id, p))?;
    let b = t.get(p).ok_or(TransferError::MissingPdf(t.id, p))?;
    Ok(pdm_cost(&compute_pdm(a, b)?).as_f64())
}

/// Shape and area costs of one pair. `None` shape cost means one side is
/// not a disk.
pub fn shape_cost<T>(src: &PatchDescriptor<T>, tar: &PatchDescriptor<T>) -> Option<f64> {
    Some((src.shape_energy? - tar.shape_energy?).abs())
}

pub fn area_cost<T>(src: &PatchDescriptor<T>, tar: &PatchDescriptor<T>) -> f64 {
    (src.area - tar.area).abs()
}

/// Independent argmin of the weighted cost for every foreground target
/// patch; ties go to the lowest source id. Background is paired with
/// background directly.
pub fn match_patches<T: Scalar>(
    src: &[PatchDescriptor<T>],
    tar: &[PatchDescriptor<T>],
    weights: &MatchWeights,
    normalization: CostNormalization,
) -> Result<Assignment, TransferError> {
    let mut sf: Vec<&PatchDescriptor<T>> = src.iter().filter(|p| p.id != 0).collect();
    let mut tf: Vec<&PatchDescriptor<T>> = tar.iter().filter(|p| p.id != 0).collect();
    if sf.is_empty() || tf.is_empty() {
        return Err(TransferError::EmptyForeground {
            sources: sf.len(),
            targets: tf.len(),
        });
    }
    sf.sort_by_key(|p| p.id);
    tf.sort_by_key(|p| p.id);

    let pairs: Vec<(usize, usize)> = (0..tf.len()).flat_map(|t| (0..sf.len()).map(move |s| (t, s))).collect();
    let raw: Vec<(Option<f64>, Costs)> = pairs
        .par_iter()
        .map(|&(t, s)| -> Result<_, TransferError> {
            let (a, b) = (sf[s], tf[t]);
            Ok((
                shape_cost(a, b),
                Costs {
                    shape: 0.0,
                    area: area_cost(a, b),
                    curvature: pdf_cost(&a.pdfs, &b.pdfs, Property::Curvature)?,
                    composition: pdf_cost(&a.pdfs, &b.pdfs, Property::Composition)?,
                    concentration: pdf_cost(&a.pdfs, &b.pdfs, Property::Concentration)?,
                },
            ))
        })
        .collect::<Result<_, _>>()?;

    let shape_max = raw.iter().filter_map(|r| r.0).fold(0.0, f64::max);
    let raw: Vec<Costs> = raw
        .into_iter()
        .map(|(shape, mut c)| {
            // Non-disk pairs get the worst observed shape cost.
            c.shape = shape.unwrap_or(f64::NAN);
            c
        })
        .collect();
    let mut lo = [f64::INFINITY; 5];
    let mut hi = [f64::NEG_INFINITY; 5];
    for c in &raw {
        for (k, v) in c.columns().into_iter().enumerate() {
            if v.is_finite() {
                lo[k] = lo[k].min(v);
                hi[k] = hi[k].max(v);
            }
        }
    }
    let weighted: Vec<Costs> = raw
        .iter()
        .map(|c| {
            let mut cols = c.columns();
            for (k, v) in cols.iter_mut().enumerate() {
                *v = match normalization {
                    CostNormalization::MinMax if v.is_nan() => 1.0,
                    CostNormalization::MinMax if hi[k] > lo[k] => (*v - lo[k]) / (hi[k] - lo[k]),
                    CostNormalization::MinMax => 0.0,
                    CostNormalization::Raw if v.is_nan() => shape_max,
                    CostNormalization::Raw => *v,
                };
            }
            Costs::from_columns(cols)
        })
        .collect();
    let raw: Vec<Costs> = raw
        .into_iter()
        .map(|mut c| {
            if c.shape.is_nan() {
                c.shape = shape_max;
            }
            c
        })
        .collect();

    let candidates: Vec<MatchEntry> = pairs
        .iter()
        .zip(weighted.iter().zip(&raw))
        .map(|(&(t, s), (w, r))| MatchEntry {
            tar_id: tf[t].id,
            src_id: sf[s].id,
            costs: *w,
            raw_costs: *r,
            total: weights.total(w),
        })
        .collect();

    let mut matches = vec![MatchEntry {
        tar_id: 0,
        src_id: 0,
        costs: Costs::default(),
        raw_costs: Costs::default(),
        total: 0.0,
    }];
    for row in candidates.chunks(sf.len()) {
        let best = row
            .iter()
            .fold(None::<&MatchEntry>, |best, e| match best {
                Some(b) if b.total <= e.total => Some(b),
                _ => Some(e),
            })
            .expect("non-empty row");
        matches.push(best.clone());
    }
    Ok(Assignment {
        matches,
        weights: *weights,
        normalization,
        candidates,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_normalize() {
        for name in MatchWeights::PRESETS {
            let w = MatchWeights::preset(name).unwrap();
            assert!((w.sum() - 1.0).abs() < 1e-12);
        }
        let d = MatchWeights::preset("paper-diffcolor").unwrap();
        assert!((d.delta - 0.35).abs() < 1e-12 && (d.lambda - 0.05).abs() < 1e-12);
        let w = MatchWeights::new(1.0, 1.0, 1.0, 1.0, 1.0).unwrap();
        assert!((w.alpha - 0.2).abs() < 1e-15);
        assert!(MatchWeights::new(-1.0, 1.0, 1.0, 1.0, 1.0).is_err());
        let json = r#"{"alpha": 2, "beta": 2, "gamma": 2, "delta": 2, "lambda": 2}"#;
        let parsed: MatchWeights = serde_json::from_str(json).unwrap();
        assert!((parsed.sum() - 1.0).abs() < 1e-12);
    }
}
