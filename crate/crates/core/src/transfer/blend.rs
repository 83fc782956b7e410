use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::harmonics::{coeff_count, sh_basis_all, Pdf};
use crate::material::{hsv_to_rgb, hue_delta, wrap_unit};
use crate::mesh::{channel, Mesh};
use crate::patch::PatchSet;
use crate::scalar::Scalar;
use crate::spheremap::SphericalMesh;
use crate::vec3::Vec3;

use super::{PatchReconstruction, TransferError};

/// Evaluations of a reconstructed patch below this support level are
/// divided by the floor instead.
pub const SUPPORT_FLOOR: f64 = 0.05;

/// Weight given to the other side of a boundary at arc distance `d`:
/// `0.5 exp(-d² / 2σ²)`, so a point on the boundary is an even mix.
pub fn partner_weight(d: f64, sigma: f64) -> f64 {
    if d > 3.0 * sigma {
        0.0
    } else {
        0.5 * (-(d * d) / (2.0 * sigma * sigma)).exp()
    }
}

/// Blends two hues along the shorter arc; `w` is the weight of `b`.
pub fn blend_hue<T: Scalar>(a: T, b: T, w: T) -> T {
    wrap_unit(a + w * hue_delta(a, b))
}

/// Mean arc length of the sphere edges.
pub fn mean_arc_length<T: Scalar>(sphere: &[Vec3<T>], faces: &[[usize; 3]]) -> f64 {
    let (mut sum, mut n) = (0.0, 0usize);
    for f in faces {
        for k in 0..3 {
            let (a, b) = (f[k], f[(k + 1) % 3]);
            if a < b {
                sum += arc(sphere[a], sphere[b]);
                n += 1;
            }
        }
    }
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

fn arc<T: Scalar>(a: Vec3<T>, b: Vec3<T>) -> f64 {
    a.dot(&b).as_f64().clamp(-1.0, 1.0).acos()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlendStats {
    pub sigma: f64,
    pub blended_vertices: usize,
    pub floored_evaluations: usize,
}

struct Flat<T> {
    hue: Vec<T>,
    sat: Vec<T>,
    support: Vec<T>,
    center: T,
}

fn flatten<T: Scalar>(r: &PatchReconstruction<T>) -> Flat<T> {
    Flat {
        hue: r.hue.flat(),
        sat: r.saturation.flat(),
        support: r.support.flat(),
        center: T::lit(r.hue_center),
    }
}

fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

/// `(hue, saturation, floored)` of one patch at a direction whose basis
/// values are `y`.
fn eval_patch<T: Scalar>(f: &Flat<T>, y: &[T], floor: T) -> (T, T, bool) {
    let sup = dot(&f.support, y);
    let floored = sup < floor;
    let d = sup.max(floor);
    let h = dot(&f.hue, y) / d;
    let s = dot(&f.sat, y) / d;
    (wrap_unit(h - T::lit(0.5) + f.center), s, floored)
}

/// Evaluates each vertex's reconstructed hue and saturation, blends across
/// patch boundaries and composes the final colour with the target's value
/// channel. Returns the target mesh with `hue`, `saturation` and
/// `final_rgb` channels.
pub fn blend_and_compose<T: Scalar>(
    tar: &SphericalMesh<T>,
    patches: &PatchSet,
    recon: &[PatchReconstruction<T>],
    sigma: Option<f64>,
) -> Result<(Mesh<T>, BlendStats), TransferError> {
    let base = tar.base();
    let value = base.scalar(channel::VALUE)?;
    let sphere = tar.sphere_positions();
    let order = recon.first().map(|r| r.hue.order()).unwrap_or(0);
    let flats: BTreeMap<i32, Flat<T>> = recon.iter().map(|r| (r.tar_id, flatten(r))).collect();
    for p in &patches.patches {
        if !flats.contains_key(&p.id) {
            return Err(TransferError::MissingReconstruction(p.id));
        }
    }
    let sigma = sigma.unwrap_or_else(|| 2.0 * mean_arc_length(sphere, tar.faces()));
    let labels = &patches.vertex_labels;

    // The boundary curve is sampled at the midpoints of edges whose end
    // labels differ. Each sample keeps both sides' reconstructions evaluated
    // at their own endpoint, where each patch is fully supported.
    let floor = T::lit(SUPPORT_FLOOR);
    let k = coeff_count(order);
    let eval_at = |v: usize, label: i32| {
        let mut y = vec![T::zero(); k];
        sh_basis_all(order, sphere[v], &mut y);
        eval_patch(&flats[&label], &y, floor)
    };
    let mut samples: Vec<(Vec3<T>, [i32; 2], [(T, T); 2])> = Vec::new();
    for f in tar.faces() {
        for j in 0..3 {
            let (a, b) = (f[j], f[(j + 1) % 3]);
            if a < b && labels[a] != labels[b] {
                let (ha, sa, _) = eval_at(a, labels[a]);
                let (hb, sb, _) = eval_at(b, labels[b]);
                samples.push((
                    (sphere[a] + sphere[b]).normalized(),
                    [labels[a], labels[b]],
                    [(ha, sa), (hb, sb)],
                ));
            }
        }
    }

    let per_vertex: Vec<(T, T, bool, bool)> = (0..tar.vertex_count())
        .into_par_iter()
        .map(|v| {
            let own = labels[v];
            let (mut h, mut s, floored) = eval_at(v, own);
            // Nearest sample on this vertex's own patch boundary; the
            // partner is whatever lies across it.
            let hit = samples
                .iter()
                .filter_map(|b| {
                    let side = if b.1[0] == own {
                        1
                    } else if b.1[1] == own {
                        0
                    } else {
                        return None;
                    };
                    Some((arc(sphere[v], b.0), b.2[side]))
                })
                .fold(None, |best: Option<(f64, (T, T))>, c| match best {
                    Some(b) if b.0 <= c.0 => Some(b),
                    _ => Some(c),
                });
            let mut blended = false;
            if let Some((d, (ph, ps))) = hit {
                let w = partner_weight(d, sigma);
                if w > 0.0 {
                    let w = T::lit(w);
                    h = blend_hue(h, ph, w);
                    s = (T::one() - w) * s + w * ps;
                    blended = true;
                }
            }
            (wrap_unit(h), s.max(T::zero()).min(T::one()), blended, floored)
        })
        .collect();

    let mut out = base.clone();
    let hue: Vec<T> = per_vertex.iter().map(|p| p.0).collect();
    let sat: Vec<T> = per_vertex.iter().map(|p| p.1).collect();
    let rgb: Vec<Vec3<T>> = (0..out.vertex_count())
        .map(|v| Vec3(hsv_to_rgb([hue[v], sat[v], value[v]])))
        .collect();
    let stats = BlendStats {
        sigma,
        blended_vertices: per_vertex.iter().filter(|p| p.2).count(),
        floored_evaluations: per_vertex.iter().filter(|p| p.3).count(),
    };
    out.set_scalar(channel::HUE, hue)?;
    out.set_scalar(channel::SATURATION, sat)?;
    out.set_vector(channel::FINAL_RGB, rgb)?;
    Ok((out, stats))
}

/// Evaluates one patch's reconstructed distribution at `dir`, divided by
/// its support.
pub fn eval_normalized<T: Scalar>(value: &Pdf<T>, support: &Pdf<T>, dir: Vec3<T>) -> T {
    value.eval(dir) / support.eval(dir).max(T::lit(SUPPORT_FLOOR))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn boundary_is_an_even_mix() {
        assert_eq!(partner_weight(0.0, 0.1), 0.5);
        assert_eq!(partner_weight(0.31, 0.1), 0.0);
        let h = blend_hue(0.98, 0.02, 0.5);
        assert!(h < 1e-12 || 1.0 - h < 1e-12, "{h}");
        assert!((blend_hue(0.2, 0.4, 0.5) - 0.3f64).abs() < 1e-12);
    }
}
