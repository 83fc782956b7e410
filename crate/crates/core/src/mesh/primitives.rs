//! Procedural meshes used by the generator and by tests.

use std::collections::HashMap;

use crate::scalar::Scalar;
use crate::vec3::Vec3;

use super::Mesh;

/// Unit icosphere. Level `k` has `10 * 4^k + 2` vertices; the first twelve
/// are the vertices of the base icosahedron at every level.
pub fn icosphere<T: Scalar>(subdivisions: u32) -> Mesh<T> {
    let t = (1.0 + 5f64.sqrt()) / 2.0;
    let base = [
        [-1.0, t, 0.0],
        [1.0, t, 0.0],
        [-1.0, -t, 0.0],
        [1.0, -t, 0.0],
        [0.0, -1.0, t],
        [0.0, 1.0, t],
        [0.0, -1.0, -t],
        [0.0, 1.0, -t],
        [t, 0.0, -1.0],
        [t, 0.0, 1.0],
        [-t, 0.0, -1.0],
        [-t, 0.0, 1.0],
    ];
    let mut pos: Vec<[f64; 3]> = base.iter().map(|p| unit(*p)).collect();
    let mut faces: Vec<[usize; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    for _ in 0..subdivisions {
        let mut cache: HashMap<(usize, usize), usize> = HashMap::new();
        let mut mid = |a: usize, b: usize, pos: &mut Vec<[f64; 3]>| -> usize {
            let key = (a.min(b), a.max(b));
            *cache.entry(key).or_insert_with(|| {
                let (p, q) = (pos[a], pos[b]);
                pos.push(unit([p[0] + q[0], p[1] + q[1], p[2] + q[2]]));
                pos.len() - 1
            })
        };
        let mut next = Vec::with_capacity(faces.len() * 4);
        for &[a, b, c] in &faces {
            let ab = mid(a, b, &mut pos);
            let bc = mid(b, c, &mut pos);
            let ca = mid(c, a, &mut pos);
            next.extend_from_slice(&[[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
        }
        faces = next;
    }
    build(pos, faces)
}

/// Icosphere scaled by `(a, b, c)` along the axes.
pub fn ellipsoid<T: Scalar>(subdivisions: u32, a: f64, b: f64, c: f64) -> Mesh<T> {
    let mut m = icosphere::<T>(subdivisions);
    let s = [T::lit(a), T::lit(b), T::lit(c)];
    for p in &mut m.positions {
        *p = Vec3::new(p.x() * s[0], p.y() * s[1], p.z() * s[2]);
    }
    m
}

/// Egg shape: an ellipsoid with semi-axes `(a, a, b)` whose horizontal
/// cross-sections widen by `1 + taper * z` toward +z.
pub fn egg<T: Scalar>(subdivisions: u32, a: f64, b: f64, taper: f64) -> Mesh<T> {
    let mut m = icosphere::<T>(subdivisions);
    for p in &mut m.positions {
        let (x, y, z) = (p.x().as_f64(), p.y().as_f64(), p.z().as_f64());
        let w = a * (1.0 + taper * z);
        *p = Vec3::new(T::lit(w * x), T::lit(w * y), T::lit(b * z));
    }
    m
}

/// Regular tetrahedron inscribed in the unit sphere, outward oriented.
pub fn tetrahedron<T: Scalar>() -> Mesh<T> {
    let pos = vec![
        unit([1.0, 1.0, 1.0]),
        unit([1.0, -1.0, -1.0]),
        unit([-1.0, 1.0, -1.0]),
        unit([-1.0, -1.0, 1.0]),
    ];
    build(pos, vec![[0, 1, 2], [0, 3, 1], [0, 2, 3], [1, 3, 2]])
}

/// Flat `nx × ny` grid of squares in the z = 0 plane, split along one diagonal.
pub fn plane_grid<T: Scalar>(nx: usize, ny: usize, spacing: f64) -> Mesh<T> {
    let mut pos = Vec::with_capacity((nx + 1) * (ny + 1));
    for j in 0..=ny {
        for i in 0..=nx {
            pos.push([i as f64 * spacing, j as f64 * spacing, 0.0]);
        }
    }
    let id = |i: usize, j: usize| j * (nx + 1) + i;
    let mut faces = Vec::with_capacity(2 * nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            faces.push([id(i, j), id(i + 1, j), id(i + 1, j + 1)]);
            faces.push([id(i, j), id(i + 1, j + 1), id(i, j + 1)]);
        }
    }
    build(pos, faces)
}

/// Open cylinder of the given radius around the z axis.
pub fn cylinder<T: Scalar>(radius: f64, height: f64, segments: usize, rings: usize) -> Mesh<T> {
    let mut pos = Vec::with_capacity(segments * (rings + 1));
    for j in 0..=rings {
        let z = height * (j as f64 / rings as f64 - 0.5);
        for i in 0..segments {
            let a = std::f64::consts::TAU * i as f64 / segments as f64;
            pos.push([radius * a.cos(), radius * a.sin(), z]);
        }
    }
    let id = |i: usize, j: usize| j * segments + i % segments;
    let mut faces = Vec::with_capacity(2 * segments * rings);
    for j in 0..rings {
        for i in 0..segments {
            faces.push([id(i, j), id(i + 1, j), id(i + 1, j + 1)]);
            faces.push([id(i, j), id(i + 1, j + 1), id(i, j + 1)]);
        }
    }
    build(pos, faces)
}

/// Flat unit disk with a centre vertex and `rings` concentric rings of
/// `6 r` vertices each.
pub fn unit_disk<T: Scalar>(rings: usize) -> Mesh<T> {
    let mut pos = vec![[0.0, 0.0, 0.0]];
    let mut ring_ids: Vec<Vec<usize>> = vec![vec![0]];
    for r in 1..=rings {
        let n = 6 * r;
        let rad = r as f64 / rings as f64;
        let ids: Vec<usize> = (0..n)
            .map(|i| {
                let a = std::f64::consts::TAU * i as f64 / n as f64;
                pos.push([rad * a.cos(), rad * a.sin(), 0.0]);
                pos.len() - 1
            })
            .collect();
        ring_ids.push(ids);
    }
    let mut faces = Vec::new();
    for r in 1..=rings {
        let inner = &ring_ids[r - 1];
        let outer = &ring_ids[r];
        if inner.len() == 1 {
            for i in 0..outer.len() {
                faces.push([inner[0], outer[i], outer[(i + 1) % outer.len()]]);
            }
            continue;
        }
        // Zip the two rings together in angular order.
        let (ni, no) = (inner.len(), outer.len());
        let (mut i, mut o) = (0, 0);
        while i < ni || o < no {
            let ai = (i + 1) as f64 / ni as f64;
            let ao = (o + 1) as f64 / no as f64;
            if o < no && (i >= ni || ao <= ai) {
                faces.push([inner[i % ni], outer[o], outer[(o + 1) % no]]);
                o += 1;
            } else {
                faces.push([inner[i], outer[o % no], inner[(i + 1) % ni]]);
                i += 1;
            }
        }
    }
    build(pos, faces)
}

fn unit(p: [f64; 3]) -> [f64; 3] {
    let n = (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt();
    [p[0] / n, p[1] / n, p[2] / n]
}

fn build<T: Scalar>(pos: Vec<[f64; 3]>, faces: Vec<[usize; 3]>) -> Mesh<T> {
    let positions = pos
        .into_iter()
        .map(|p| Vec3::new(T::lit(p[0]), T::lit(p[1]), T::lit(p[2])))
        .collect();
    Mesh::new(positions, faces).expect("procedural mesh is valid")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn icosphere_counts() {
        for k in 0..4 {
            let m = icosphere::<f64>(k);
            assert_eq!(m.vertex_count(), 10 * 4usize.pow(k) + 2);
            m.validate_genus_zero().unwrap();
        }
    }

    #[test]
    fn closed_primitives_are_genus_zero() {
        tetrahedron::<f64>().validate_genus_zero().unwrap();
        egg::<f64>(2, 1.0, 1.3, 0.2).validate_genus_zero().unwrap();
    }

    #[test]
    fn disk_is_a_single_boundary_loop() {
        let m = unit_disk::<f64>(4);
        let t = m.topology();
        assert_eq!(t.euler_characteristic(), 1);
        assert_eq!(t.boundary_edges.len(), 24);
        assert!(t.misoriented_edges.is_empty());
        let hem = m.half_edges().unwrap();
        assert!(hem.check_invariants());
    }

    #[test]
    fn faces_point_outward() {
        let m = icosphere::<f64>(1);
        for f in &m.faces {
            let p = [m.positions[f[0]], m.positions[f[1]], m.positions[f[2]]];
            let n = (p[1] - p[0]).cross(&(p[2] - p[0]));
            assert!(n.dot(&p[0]) > 0.0);
        }
    }
}
