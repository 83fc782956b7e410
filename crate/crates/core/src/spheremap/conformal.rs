use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::linalg::{Lu, Matrix};
use crate::mesh::{lumped_vertex_areas, Mesh};
use crate::scalar::Scalar;
use crate::vec3::Vec3;

use super::{CotanWeights, SpheremapError, SphericalMesh};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ConformalOptions {
    pub max_iters: usize,
    /// Stop once a step lowers the energy by less than this fraction.
    pub energy_tol: f64,
    /// Damping of the Jacobi step toward the weighted neighbour average.
    pub step_size: f64,
}

impl Default for ConformalOptions {
    fn default() -> Self {
        ConformalOptions {
            max_iters: 5000,
            energy_tol: 1e-6,
            step_size: 0.5,
        }
    }
}

/// Maps a closed genus-zero mesh to the unit sphere.
///
/// Starts from the Gauss map about the area-weighted centroid, then runs
/// tangential cotangent-Laplacian descent with reprojection. Each step is
/// halved until the energy does not increase, and the step direction is kept
/// orthogonal to the three infinitesimal Möbius boosts so the image cannot
/// drift toward a point. A final Möbius transformation centres the
/// area-weighted mass at the origin.
///
/// The energy trace records the start energy and every accepted step. A step
/// whose relative improvement is below `energy_tol` ends the iteration
/// without being applied.
pub fn conformal_map_to_sphere<T: Scalar>(
    mesh: &Mesh<T>,
    opts: &ConformalOptions,
) -> Result<SphericalMesh<T>, SpheremapError> {
    mesh.validate_genus_zero()?;
    let hem = mesh.half_edges()?;
    let weights = CotanWeights::new(&mesh.positions, &mesh.faces, &hem)?;

    let areas = lumped_vertex_areas(&mesh.positions, &mesh.faces);
    let centre = weighted_centroid(&mesh.positions, &areas);
    let mut x: Vec<Vec3<T>> = mesh.positions.iter().map(|&p| (p - centre).normalized()).collect();
    if let Some(v) = x.iter().position(|p| p.norm_squared().is_zero()) {
        return Err(SpheremapError::NotADisk(format!(
            "vertex {v} coincides with the centroid; Gauss map undefined"
        )));
    }

    let mut energy = weights.energy(&x);
    let mut trace = vec![energy];
    let tol = T::lit(opts.energy_tol);
    let max_step = T::lit(opts.step_size);
    let min_step = T::lit(1e-10);
    let mut step = max_step;
    let mut converged = false;

    for _ in 0..opts.max_iters {
        let mut dir = descent_direction(&weights, &x);
        remove_boosts(&x, &mut dir);
        let mut accepted = None;
        while step >= min_step {
            let cand: Vec<Vec3<T>> = x
                .par_iter()
                .zip(dir.par_iter())
                .map(|(&p, &d)| (p + d * step).normalized())
                .collect();
            let e = weights.energy(&cand);
            if e <= energy {
                accepted = Some((cand, e));
                break;
            }
            step *= T::lit(0.5);
        }
        let Some((cand, e)) = accepted else {
            converged = true;
            break;
        };
        if energy - e < tol * e {
            converged = true;
            break;
        }
        x = cand;
        energy = e;
        trace.push(e);
        step = (step * T::lit(2.0)).min(max_step);
    }

    mobius_normalize(&mut x, &areas, T::lit(1e-6), 200);
    let mut sm = SphericalMesh::new(mesh.clone(), x)?;
    sm.energy_trace = trace;
    sm.converged = converged;
    Ok(sm)
}

/// Jacobi-scaled Laplacian, projected onto each vertex's tangent plane.
fn descent_direction<T: Scalar>(w: &CotanWeights<T>, x: &[Vec3<T>]) -> Vec<Vec3<T>> {
    (0..x.len())
        .into_par_iter()
        .map(|v| {
            let mut lap = Vec3::zero();
            let mut diag = T::zero();
            for &(j, k) in w.neighbors(v) {
                lap += (x[j] - x[v]) * k;
                diag += k;
            }
            if diag <= T::zero() {
                return Vec3::zero();
            }
            let d = lap / diag;
            d - x[v] * d.dot(&x[v])
        })
        .collect()
}

/// Projects the vertex displacement field off the span of the boost fields
/// `a - (a·x) x`, `a ∈ {e_x, e_y, e_z}`.
fn remove_boosts<T: Scalar>(x: &[Vec3<T>], dir: &mut [Vec3<T>]) {
    let axes = [
        Vec3::new(T::one(), T::zero(), T::zero()),
        Vec3::new(T::zero(), T::one(), T::zero()),
        Vec3::new(T::zero(), T::zero(), T::one()),
    ];
    let boost = |a: usize, p: Vec3<T>| axes[a] - p * axes[a].dot(&p);
    let mut g = Matrix::zeros(3, 3);
    let mut b = [T::zero(); 3];
    for (p, d) in x.iter().zip(dir.iter()) {
        for a in 0..3 {
            let ba = boost(a, *p);
            b[a] += ba.dot(d);
            for c in 0..3 {
                g[(a, c)] += ba.dot(&boost(c, *p));
            }
        }
    }
    let Some(coef) = Lu::new(&g).solve(&b) else {
        return;
    };
    for (p, d) in x.iter().zip(dir.iter_mut()) {
        for a in 0..3 {
            *d -= boost(a, *p) * coef[a];
        }
    }
}

pub fn weighted_centroid<T: Scalar>(points: &[Vec3<T>], weights: &[T]) -> Vec3<T> {
    let mut c = Vec3::zero();
    let mut total = T::zero();
    for (&p, &w) in points.iter().zip(weights) {
        c += p * w;
        total += w;
    }
    if total > T::zero() {
        c / total
    } else {
        c
    }
}

/// `φ_a(x) = ((1 - |a|²)(x - a) - |x - a|² a) / (1 - 2a·x + |a|²|x|²)`, the
/// Möbius automorphism of the unit ball sending `a` to the origin.
fn mobius<T: Scalar>(a: Vec3<T>, x: Vec3<T>) -> Vec3<T> {
    let aa = a.norm_squared();
    let xa = x - a;
    let num = xa * (T::one() - aa) - a * xa.norm_squared();
    let den = T::one() - T::lit(2.0) * a.dot(&x) + aa * x.norm_squared();
    (num / den).normalized()
}

/// Applies Möbius transformations until the centroid of the sphere positions,
/// weighted by the vertex areas of the original surface, is within `tol` of
/// the origin. Returns the final centroid norm.
///
/// The weights must come from the source surface: weighting by the spherical
/// triangulation's own areas gives the centroid of the sphere itself, which
/// is zero for every map.
pub fn mobius_normalize<T: Scalar>(x: &mut [Vec3<T>], weights: &[T], tol: T, max_iters: usize) -> T {
    let centroid = |x: &[Vec3<T>]| weighted_centroid(x, weights);
    let mut c = centroid(x);
    for _ in 0..max_iters {
        if c.norm() < tol {
            break;
        }
        // Damp the shift if a full step overshoots.
        let mut scale = T::one();
        let mut improved = false;
        for _ in 0..20 {
            let a = c * scale;
            let cand: Vec<Vec3<T>> = x.iter().map(|&p| mobius(a, p)).collect();
            let cc = centroid(&cand);
            if cc.norm() < c.norm() {
                x.copy_from_slice(&cand);
                c = cc;
                improved = true;
                break;
            }
            scale *= T::lit(0.5);
        }
        if !improved {
            break;
        }
    }
    c.norm()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::primitives;

    #[test]
    fn mobius_keeps_points_on_sphere() {
        let a = Vec3::new(0.2f64, -0.1, 0.3);
        let p = Vec3::new(0.0, 0.6, 0.8);
        assert!((mobius(a, p).norm() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn normalization_centres_shifted_sphere() {
        let m = primitives::icosphere::<f64>(3);
        let a = Vec3::new(0.0, 0.0, -0.4);
        let mut x: Vec<_> = m.positions.iter().map(|&p| mobius(a, p)).collect();
        let w = lumped_vertex_areas(&m.positions, &m.faces);
        assert!(weighted_centroid(&x, &w).norm() > 0.1);
        let c = mobius_normalize(&mut x, &w, 1e-8, 200);
        assert!(c < 1e-8);
    }
}
