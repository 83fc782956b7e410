use crate::scalar::Scalar;
use crate::vec3::{triangle_area, Vec3};

use super::{HalfEdgeMesh, MeshError};

pub fn face_areas<T: Scalar>(positions: &[Vec3<T>], faces: &[[usize; 3]]) -> Vec<T> {
    faces
        .iter()
        .map(|f| triangle_area(positions[f[0]], positions[f[1]], positions[f[2]]))
        .collect()
}

pub fn total_area<T: Scalar>(positions: &[Vec3<T>], faces: &[[usize; 3]]) -> T {
    face_areas(positions, faces).into_iter().sum()
}

/// Sum of triangle areas over `face_ids`; an empty set has area zero.
pub fn patch_area<T: Scalar>(
    positions: &[Vec3<T>],
    faces: &[[usize; 3]],
    face_ids: impl IntoIterator<Item = usize>,
) -> T {
    face_ids
        .into_iter()
        .map(|f| {
            let t = faces[f];
            triangle_area(positions[t[0]], positions[t[1]], positions[t[2]])
        })
        .sum()
}

/// Barycentric lumped vertex areas: each face gives a third of its area to
/// each corner. Sums to the total surface area.
pub fn lumped_vertex_areas<T: Scalar>(positions: &[Vec3<T>], faces: &[[usize; 3]]) -> Vec<T> {
    let mut out = vec![T::zero(); positions.len()];
    let third = T::lit(1.0 / 3.0);
    for f in faces {
        let a = triangle_area(positions[f[0]], positions[f[1]], positions[f[2]]) * third;
        for &v in f {
            out[v] += a;
        }
    }
    out
}

/// Unit vertex normals from face normals weighted by the corner angle.
pub fn angle_weighted_normals<T: Scalar>(positions: &[Vec3<T>], faces: &[[usize; 3]]) -> Vec<Vec3<T>> {
    let mut out = vec![Vec3::zero(); positions.len()];
    for f in faces {
        let p = [positions[f[0]], positions[f[1]], positions[f[2]]];
        let n = (p[1] - p[0]).cross(&(p[2] - p[0])).normalized();
        for k in 0..3 {
            let u = p[(k + 1) % 3] - p[k];
            let w = p[(k + 2) % 3] - p[k];
            out[f[k]] += n * u.angle_to(&w);
        }
    }
    for n in &mut out {
        *n = n.normalized();
    }
    out
}

pub fn mean_edge_length<T: Scalar>(positions: &[Vec3<T>], hem: &HalfEdgeMesh) -> T {
    let mut sum = T::zero();
    let mut count = 0usize;
    for h in hem.edges() {
        sum += positions[hem.origin(h)].distance(&positions[hem.dest(h)]);
        count += 1;
    }
    if count == 0 {
        T::zero()
    } else {
        sum / T::of_usize(count)
    }
}

/// Mean over the one-ring of the edge normal-curvature estimate
/// `2 <n_v, p_v - p_w> / |p_v - p_w|^2`.
pub fn normal_curvature<T: Scalar>(
    positions: &[Vec3<T>],
    normals: &[Vec3<T>],
    hem: &HalfEdgeMesh,
    v: usize,
) -> Result<T, MeshError> {
    let ring = hem.neighbors(v);
    if ring.is_empty() {
        return Err(MeshError::IsolatedVertex(v));
    }
    let two = T::lit(2.0);
    let mut sum = T::zero();
    for &w in &ring {
        let d = positions[v] - positions[w];
        sum += two * normals[v].dot(&d) / d.norm_squared();
    }
    Ok(sum / T::of_usize(ring.len()))
}

pub fn normal_curvatures<T: Scalar>(
    positions: &[Vec3<T>],
    faces: &[[usize; 3]],
    hem: &HalfEdgeMesh,
) -> Result<Vec<T>, MeshError> {
    let normals = angle_weighted_normals(positions, faces);
    (0..positions.len())
        .map(|v| normal_curvature(positions, &normals, hem, v))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::primitives;

    #[test]
    fn right_triangle_area() {
        let p = vec![
            Vec3::new(0.0, 0.0, 0.0),
            Vec3::new(3.0, 0.0, 0.0),
            Vec3::new(0.0, 4.0, 0.0),
        ];
        assert_eq!(patch_area(&p, &[[0, 1, 2]], [0]), 6.0);
        assert_eq!(patch_area(&p, &[[0, 1, 2]], []), 0.0);
    }

    #[test]
    fn lumped_areas_sum_to_total() {
        let m = primitives::icosphere::<f64>(3);
        let total = total_area(&m.positions, &m.faces);
        let lumped: f64 = lumped_vertex_areas(&m.positions, &m.faces).iter().sum();
        assert!((total - lumped).abs() < 1e-12 * total);
    }

    #[test]
    fn sphere_normals_are_radial() {
        let m = primitives::icosphere::<f64>(2);
        for (n, p) in angle_weighted_normals(&m.positions, &m.faces).iter().zip(&m.positions) {
            assert!(n.dot(p) > 0.999);
        }
    }
}
