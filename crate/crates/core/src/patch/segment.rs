use serde::{Deserialize, Serialize};

use crate::mesh::{face_areas, HalfEdgeMesh, UnionFind};
use crate::scalar::Scalar;
use crate::vec3::Vec3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SegmentOptions {
    /// Explicit scale. When unset, `k_fraction` times the face count times
    /// the gap between the Otsu class means.
    pub k: Option<f64>,
    pub k_fraction: f64,
    /// Floor for the class-mean gap, so a field without real contrast is
    /// not split along quantization noise.
    pub min_gap: f64,
    /// Components with fewer faces are merged into a neighbour.
    pub min_size: usize,
}

impl Default for SegmentOptions {
    fn default() -> Self {
        SegmentOptions {
            k: None,
            k_fraction: 0.05,
            min_gap: 0.05,
            min_size: 20,
        }
    }
}

/// Face labels produced by [`segment_faces`]: 0 is background, foreground
/// components are numbered from 1 in order of their lowest face index.
#[derive(Debug, Clone, PartialEq)]
pub struct Segmentation {
    pub face_labels: Vec<i32>,
    pub foreground: usize,
    pub k: f64,
    pub otsu_threshold: f64,
    pub warning: Option<String>,
}

/// Felzenszwalb graph segmentation on the face-adjacency graph.
pub fn segment_faces<T: Scalar>(
    positions: &[Vec3<T>],
    faces: &[[usize; 3]],
    hem: &HalfEdgeMesh,
    values: &[T],
    opts: &SegmentOptions,
) -> Segmentation {
    let nf = faces.len();
    let third = T::lit(1.0 / 3.0);
    let fv: Vec<f64> = faces
        .iter()
        .map(|f| ((values[f[0]] + values[f[1]] + values[f[2]]) * third).as_f64())
        .collect();
    let areas: Vec<f64> = face_areas(positions, faces).iter().map(|a| a.as_f64()).collect();

    let mut edges: Vec<(f64, usize, usize)> = hem
        .edges()
        .filter_map(|h| {
            let t = hem.twin(h)?;
            let (a, b) = (hem.face(h), hem.face(t));
            Some(((fv[a] - fv[b]).abs(), a.min(b), a.max(b)))
        })
        .collect();
    edges.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)).then(x.2.cmp(&y.2)));

    let otsu = otsu_threshold(&fv, &areas, 256);
    let k = opts.k.unwrap_or_else(|| opts.k_fraction * nf as f64 * class_gap(&fv, &areas, otsu).max(opts.min_gap));

    let mut uf = UnionFind::new(nf);
    let mut internal = vec![0.0f64; nf];
    for &(w, a, b) in &edges {
        let (ra, rb) = (uf.find(a), uf.find(b));
        if ra == rb {
            continue;
        }
        let ta = internal[ra] + k / uf.size_of(ra) as f64;
        let tb = internal[rb] + k / uf.size_of(rb) as f64;
        if w <= ta.min(tb) {
            if let Some(r) = uf.union(ra, rb) {
                internal[r] = w.max(internal[ra]).max(internal[rb]);
            }
        }
    }
    for &(_, a, b) in &edges {
        let (ra, rb) = (uf.find(a), uf.find(b));
        if ra != rb && (uf.size_of(ra) < opts.min_size || uf.size_of(rb) < opts.min_size) {
            uf.union(ra, rb);
        }
    }

    // Per-root area and weighted mean, keyed by root; roots are listed in
    // order of first face so numbering is deterministic.
    let mut roots: Vec<usize> = Vec::new();
    let mut slot = vec![usize::MAX; nf];
    let mut stats: Vec<(f64, f64)> = Vec::new();
    for f in 0..nf {
        let r = uf.find(f);
        if slot[r] == usize::MAX {
            slot[r] = roots.len();
            roots.push(r);
            stats.push((0.0, 0.0));
        }
        let s = &mut stats[slot[r]];
        s.0 += areas[f];
        s.1 += areas[f] * fv[f];
    }
    let count = roots.len();
    let mean = |i: usize| {
        if stats[i].0 > 0.0 {
            stats[i].1 / stats[i].0
        } else {
            0.0
        }
    };
    let pick = |low_only: bool| {
        (0..count)
            .filter(|&i| !low_only || mean(i) < otsu)
            .fold(None, |best: Option<usize>, i| match best {
                Some(b) if stats[b].0 >= stats[i].0 => Some(b),
                _ => Some(i),
            })
    };
    let background = pick(true).or_else(|| pick(false));

    let mut label_of = vec![0i32; count];
    let mut next = 1;
    for (i, l) in label_of.iter_mut().enumerate() {
        if Some(i) != background {
            *l = next;
            next += 1;
        }
    }
    let face_labels = (0..nf).map(|f| label_of[slot[uf.find(f)]]).collect();
    let warning = (count < 2).then(|| format!("segmentation found {count} component(s); everything is background"));
    Segmentation {
        face_labels,
        foreground: count.saturating_sub(1),
        k,
        otsu_threshold: otsu,
        warning,
    }
}

/// Difference of the weighted means above and below `threshold`.
fn class_gap(values: &[f64], weights: &[f64], threshold: f64) -> f64 {
    let mut acc = [(0.0, 0.0); 2];
    for (&v, &w) in values.iter().zip(weights) {
        let a = &mut acc[(v >= threshold) as usize];
        a.0 += w;
        a.1 += w * v;
    }
    if acc[0].0 > 0.0 && acc[1].0 > 0.0 {
        acc[1].1 / acc[1].0 - acc[0].1 / acc[0].0
    } else {
        0.0
    }
}

/// Weighted Otsu threshold over `bins` equal-width bins spanning the data.
pub fn otsu_threshold(values: &[f64], weights: &[f64], bins: usize) -> f64 {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(hi > lo) {
        return if lo.is_finite() { lo } else { 0.0 };
    }
    let width = (hi - lo) / bins as f64;
    let mut hist = vec![0.0; bins];
    for (&v, &w) in values.iter().zip(weights) {
        let b = (((v - lo) / width) as usize).min(bins - 1);
        hist[b] += w;
    }
    let total: f64 = hist.iter().sum();
    let centre = |b: usize| lo + (b as f64 + 0.5) * width;
    let sum_all: f64 = hist.iter().enumerate().map(|(b, h)| h * centre(b)).sum();
    let (mut w0, mut s0) = (0.0, 0.0);
    let (mut best, mut best_b) = (-1.0, 0);
    for b in 0..bins - 1 {
        w0 += hist[b];
        s0 += hist[b] * centre(b);
        let w1 = total - w0;
        if w0 <= 0.0 || w1 <= 0.0 {
            continue;
        }
        let m0 = s0 / w0;
        let m1 = (sum_all - s0) / w1;
        let between = w0 * w1 * (m0 - m1) * (m0 - m1);
        if between > best {
            best = between;
            best_b = b;
        }
    }
    lo + (best_b + 1) as f64 * width
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn otsu_splits_two_clusters() {
        let v = [0.1, 0.12, 0.11, 0.9, 0.88];
        let t = otsu_threshold(&v, &[1.0; 5], 64);
        assert!(t > 0.12 && t < 0.88, "{t}");
    }

    #[test]
    fn otsu_of_constant_is_the_constant() {
        assert_eq!(otsu_threshold(&[0.4; 3], &[1.0; 3], 16), 0.4);
    }
}
