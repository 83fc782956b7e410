use serde::{Deserialize, Serialize};

use crate::mesh::{mean_edge_length, HalfEdgeMesh};
use crate::scalar::Scalar;
use crate::vec3::Vec3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FilterOptions {
    /// Spatial kernel width in mean edge lengths.
    pub sigma_s: f64,
    /// Range kernel width in value units.
    pub sigma_r: f64,
    pub diffusion_iters: usize,
    pub white_thresh: f64,
}

impl Default for FilterOptions {
    fn default() -> Self {
        FilterOptions {
            sigma_s: 2.0,
            sigma_r: 0.1,
            diffusion_iters: 5,
            white_thresh: 0.98,
        }
    }
}

/// One bilateral pass over one-rings, then edge-stopping diffusion, then
/// the white clamp. Constant fields pass through unchanged.
pub fn prefilter<T: Scalar>(
    positions: &[Vec3<T>],
    hem: &HalfEdgeMesh,
    values: &[T],
    opts: &FilterOptions,
) -> Vec<T> {
    let n = values.len();
    let rings: Vec<Vec<usize>> = (0..n).map(|v| hem.neighbors(v)).collect();
    let sigma_s = T::lit(opts.sigma_s) * mean_edge_length(positions, hem);
    let sigma_r = T::lit(opts.sigma_r);
    let two = T::lit(2.0);
    let ss = two * sigma_s * sigma_s;
    let rr = two * sigma_r * sigma_r;

    let mut out: Vec<T> = (0..n)
        .map(|v| {
            let (mut num, mut den) = (values[v], T::one());
            for &w in &rings[v] {
                let d2 = positions[v].distance(&positions[w]).powi(2);
                let dv = values[w] - values[v];
                let k = (-(d2 / ss) - dv * dv / rr).exp();
                num += k * values[w];
                den += k;
            }
            num / den
        })
        .collect();

    let step = T::lit(0.25);
    for _ in 0..opts.diffusion_iters {
        let prev = out.clone();
        for v in 0..n {
            if rings[v].is_empty() {
                continue;
            }
            let mut flux = T::zero();
            for &w in &rings[v] {
                let dv = prev[w] - prev[v];
                flux += (-(dv * dv) / rr).exp() * dv;
            }
            out[v] = prev[v] + step * flux / T::of_usize(rings[v].len());
        }
    }

    let white = T::lit(opts.white_thresh);
    for x in &mut out {
        if *x > white {
            *x = T::one();
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::primitives;

    #[test]
    fn constant_field_is_fixed() {
        let m = primitives::icosphere::<f64>(2);
        let hem = m.half_edges().unwrap();
        let v = vec![0.37; m.vertex_count()];
        let f = prefilter(&m.positions, &hem, &v, &FilterOptions::default());
        for x in f {
            assert!((x - 0.37).abs() < 1e-15);
        }
    }

    #[test]
    fn near_white_is_clamped() {
        let m = primitives::icosphere::<f64>(1);
        let hem = m.half_edges().unwrap();
        let v = vec![0.99; m.vertex_count()];
        let opts = FilterOptions {
            white_thresh: 0.95,
            ..FilterOptions::default()
        };
        assert!(prefilter(&m.positions, &hem, &v, &opts).iter().all(|&x| x == 1.0));
    }
}
