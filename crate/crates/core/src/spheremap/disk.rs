use std::collections::BTreeMap;

use crate::linalg::conjugate_gradient;
use crate::mesh::{HalfEdgeMesh, TopologyReport};
use crate::scalar::Scalar;
use crate::vec3::Vec3;

use super::{CotanWeights, SpheremapError};

/// A patch flattened onto the unit disk.
#[derive(Debug, Clone)]
pub struct DiskMap<T> {
    /// Global vertex id of each local vertex.
    pub vertices: Vec<usize>,
    pub faces: Vec<[usize; 3]>,
    /// Disk coordinates (z = 0) per local vertex.
    pub uv: Vec<Vec3<T>>,
    /// Local ids of the boundary loop in traversal order.
    pub boundary: Vec<usize>,
    /// Harmonic energy of the disk map divided by the edge count.
    pub energy: T,
}

/// Flattens the faces `face_ids` of a mesh onto the unit disk: the boundary
/// goes to the circle by arc length, interior vertices solve the cotangent
/// Laplace equation.
pub fn disk_map<T: Scalar>(
    positions: &[Vec3<T>],
    faces: &[[usize; 3]],
    face_ids: &[usize],
) -> Result<DiskMap<T>, SpheremapError> {
    let mut ids: Vec<usize> = face_ids.to_vec();
    ids.sort_unstable();
    ids.dedup();
    let mut local: BTreeMap<usize, usize> = BTreeMap::new();
    let mut vertices = Vec::new();
    let mut lf = Vec::with_capacity(ids.len());
    for &f in &ids {
        let mut t = [0; 3];
        for (k, &g) in faces[f].iter().enumerate() {
            t[k] = *local.entry(g).or_insert_with(|| {
                vertices.push(g);
                vertices.len() - 1
            });
        }
        lf.push(t);
    }
    if lf.is_empty() {
        return Err(SpheremapError::NotADisk("patch has no faces".into()));
    }
    let lp: Vec<Vec3<T>> = vertices.iter().map(|&g| positions[g]).collect();

    let topo = TopologyReport::analyze(lp.len(), &lf);
    if !topo.nonmanifold_edges.is_empty() || !topo.misoriented_edges.is_empty() {
        return Err(SpheremapError::NotADisk("non-manifold face set".into()));
    }
    if topo.components != 1 {
        return Err(SpheremapError::NotADisk(format!("{} connected components", topo.components)));
    }
    let hem = HalfEdgeMesh::new(lp.len(), &lf)?;
    let loops = boundary_loops(&hem)?;
    if loops.len() != 1 {
        return Err(SpheremapError::NotADisk(format!("{} boundary loops", loops.len())));
    }
    if topo.euler_characteristic() != 1 {
        return Err(SpheremapError::NotADisk(format!(
            "Euler characteristic {} (expected 1)",
            topo.euler_characteristic()
        )));
    }
    let boundary = loops.into_iter().next().expect("one loop");

    let weights = CotanWeights::new(&lp, &lf, &hem)?;
    let n = lp.len();
    let mut uv = vec![Vec3::zero(); n];
    let mut on_boundary = vec![false; n];
    let mut cumulative = Vec::with_capacity(boundary.len());
    let mut length = T::zero();
    for k in 0..boundary.len() {
        cumulative.push(length);
        length += lp[boundary[k]].distance(&lp[boundary[(k + 1) % boundary.len()]]);
    }
    for (k, &v) in boundary.iter().enumerate() {
        let angle = T::TAU() * cumulative[k] / length;
        uv[v] = Vec3::new(angle.cos(), angle.sin(), T::zero());
        on_boundary[v] = true;
    }

    let interior: Vec<usize> = (0..n).filter(|&v| !on_boundary[v]).collect();
    if !interior.is_empty() {
        let mut slot = vec![usize::MAX; n];
        for (i, &v) in interior.iter().enumerate() {
            slot[v] = i;
        }
        let m = interior.len();
        let mut diag = vec![T::zero(); m];
        let mut bx = vec![T::zero(); m];
        let mut by = vec![T::zero(); m];
        for (i, &v) in interior.iter().enumerate() {
            for &(j, k) in weights.neighbors(v) {
                diag[i] += k;
                if on_boundary[j] {
                    bx[i] += k * uv[j].x();
                    by[i] += k * uv[j].y();
                }
            }
        }
        let apply = |x: &[T], out: &mut [T]| {
            for (i, &v) in interior.iter().enumerate() {
                let mut s = diag[i] * x[i];
                for &(j, k) in weights.neighbors(v) {
                    if !on_boundary[j] {
                        s -= k * x[slot[j]];
                    }
                }
                out[i] = s;
            }
        };
        let tol = T::lit(1e-12).max(T::epsilon() * T::lit(10.0));
        let mut xs = vec![T::zero(); m];
        let mut ys = vec![T::zero(); m];
        conjugate_gradient(apply, &diag, &bx, &mut xs, tol, 20 * m + 100);
        conjugate_gradient(apply, &diag, &by, &mut ys, tol, 20 * m + 100);
        for (i, &v) in interior.iter().enumerate() {
            uv[v] = Vec3::new(xs[i], ys[i], T::zero());
        }
    }

    let energy = weights.energy(&uv) / T::of_usize(weights.edges.len());
    Ok(DiskMap {
        vertices,
        faces: lf,
        uv,
        boundary,
        energy,
    })
}

/// Average per-edge harmonic energy of the disk map of a patch.
pub fn disk_shape_energy<T: Scalar>(
    positions: &[Vec3<T>],
    faces: &[[usize; 3]],
    face_ids: &[usize],
) -> Result<T, SpheremapError> {
    Ok(disk_map(positions, faces, face_ids)?.energy)
}

/// Boundary loops of an open surface, each starting at its smallest vertex.
fn boundary_loops(hem: &HalfEdgeMesh) -> Result<Vec<Vec<usize>>, SpheremapError> {
    let mut next_of: BTreeMap<usize, usize> = BTreeMap::new();
    for h in hem.boundary_half_edges() {
        if next_of.insert(hem.origin(h), hem.dest(h)).is_some() {
            return Err(SpheremapError::NotADisk(format!(
                "vertex {} is pinched between boundary loops",
                hem.origin(h)
            )));
        }
    }
    let mut loops = Vec::new();
    let mut seen = std::collections::BTreeSet::new();
    for &start in next_of.keys() {
        if seen.contains(&start) {
            continue;
        }
        let mut cycle = vec![start];
        seen.insert(start);
        let mut v = next_of[&start];
        while v != start {
            if !seen.insert(v) {
                return Err(SpheremapError::NotADisk("boundary does not close".into()));
            }
            cycle.push(v);
            v = *next_of
                .get(&v)
                .ok_or_else(|| SpheremapError::NotADisk("boundary does not close".into()))?;
        }
        loops.push(cycle);
    }
    Ok(loops)
}
