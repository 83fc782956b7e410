use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::material::hue_distance;
use crate::mesh::{channel, Mesh};
use crate::scalar::Scalar;

use super::{PipelineError, Provenance, REGION};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatchEval {
    pub id: i32,
    pub vertices: usize,
    pub mean_abs_err_hue: f64,
    pub mean_abs_err_sat: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<Provenance>,
    pub vertex_count: usize,
    pub mean_abs_err_hue: f64,
    pub mean_abs_err_sat: f64,
    pub accuracy_hue: f64,
    pub accuracy_sat: f64,
    /// Errors grouped by the ground-truth region label when present,
    /// otherwise by the reconstructed patch label.
    pub per_patch: Vec<PatchEval>,
}

/// Per-vertex absolute hue (circular) and saturation error, averaged over
/// all vertices.
pub fn evaluate<T: Scalar>(reconstructed: &Mesh<T>, ground_truth: &Mesh<T>) -> Result<EvalReport, PipelineError> {
    let n = reconstructed.vertex_count();
    if n != ground_truth.vertex_count() {
        return Err(PipelineError::VertexCount {
            reconstructed: n,
            ground_truth: ground_truth.vertex_count(),
        });
    }
    let (hr, sr) = (reconstructed.scalar(channel::HUE)?, reconstructed.scalar(channel::SATURATION)?);
    let (hg, sg) = (ground_truth.scalar(channel::HUE)?, ground_truth.scalar(channel::SATURATION)?);
    let groups = ground_truth
        .label(REGION)
        .or_else(|_| reconstructed.label(channel::PATCH_ID))
        .ok();

    let mut per: BTreeMap<i32, (usize, f64, f64)> = BTreeMap::new();
    let (mut eh, mut es) = (0.0, 0.0);
    for v in 0..n {
        let dh = hue_distance(hr[v], hg[v]).as_f64();
        let ds = (sr[v] - sg[v]).abs().as_f64();
        eh += dh;
        es += ds;
        if let Some(g) = groups {
            let e = per.entry(g[v]).or_default();
            e.0 += 1;
            e.1 += dh;
            e.2 += ds;
        }
    }
    let denom = n.max(1) as f64;
    let (eh, es) = ((eh / denom).min(1.0), (es / denom).min(1.0));
    Ok(EvalReport {
        provenance: None,
        vertex_count: n,
        mean_abs_err_hue: eh,
        mean_abs_err_sat: es,
        accuracy_hue: 1.0 - eh,
        accuracy_sat: 1.0 - es,
        per_patch: per
            .into_iter()
            .map(|(id, (k, h, s))| PatchEval {
                id,
                vertices: k,
                mean_abs_err_hue: h / k as f64,
                mean_abs_err_sat: s / k as f64,
            })
            .collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::primitives;

    fn with(h: f64, s: f64) -> Mesh<f64> {
        let mut m = primitives::icosphere::<f64>(1);
        let n = m.vertex_count();
        m.set_scalar(channel::HUE, vec![h; n]).unwrap();
        m.set_scalar(channel::SATURATION, vec![s; n]).unwrap();
        m
    }

    #[test]
    fn perfect_reconstruction() {
        let r = evaluate(&with(0.3, 0.4), &with(0.3, 0.4)).unwrap();
        assert_eq!((r.accuracy_hue, r.accuracy_sat), (1.0, 1.0));
    }

    #[test]
    fn hue_error_is_circular() {
        let r = evaluate(&with(0.48, 0.5), &with(0.50, 0.5)).unwrap();
        assert!((r.mean_abs_err_hue - 0.02).abs() < 1e-12);
        assert!((r.accuracy_hue - 0.98).abs() < 1e-12);
        let r = evaluate(&with(0.99, 0.5), &with(0.01, 0.5)).unwrap();
        assert!((r.mean_abs_err_hue - 0.02).abs() < 1e-12);
    }

    #[test]
    fn vertex_count_mismatch_names_both() {
        let mut big = primitives::icosphere::<f64>(2);
        let n = big.vertex_count();
        big.set_scalar(channel::HUE, vec![0.0; n]).unwrap();
        big.set_scalar(channel::SATURATION, vec![0.0; n]).unwrap();
        let e = evaluate(&with(0.0, 0.0), &big).unwrap_err();
        let msg = e.to_string();
        assert!(msg.contains("42") && msg.contains("162"), "{msg}");
    }
}
