//! Conformal maps of genus-zero meshes onto the unit sphere and of patches
//! onto the unit disk, with the harmonic (string) energy that drives both.

mod align;
mod conformal;
mod disk;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mesh::{channel, HalfEdgeMesh, Mesh, MeshError};
use crate::scalar::Scalar;
use crate::vec3::{cotangent_at, triangle_area, Vec3};

pub use align::{align_spheres, procrustes_rotation, LandmarkSet};
pub use conformal::{conformal_map_to_sphere, mobius_normalize, weighted_centroid, ConformalOptions};
pub use disk::{disk_map, disk_shape_energy, DiskMap};

#[derive(Debug, Error)]
pub enum SpheremapError {
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error("face {0} has zero area; cotangent weights are undefined")]
    DegenerateTriangle(usize),
    #[error("need at least 3 landmark pairs, got {0}")]
    TooFewLandmarks(usize),
    #[error("landmark directions are collinear; rotation is not determined")]
    CollinearLandmarks,
    #[error("landmark vertex {vertex} is out of range ({count} vertices)")]
    LandmarkOutOfRange { vertex: usize, count: usize },
    #[error("patch is not a topological disk: {0}")]
    NotADisk(String),
    #[error("landmark file: {0}")]
    Landmarks(String),
}

/// Cotangent string constants `k_ij = (cot α_ij + cot β_ij) / 2`, clamped at
/// zero, stored per undirected edge and as per-vertex adjacency.
#[derive(Debug, Clone)]
pub struct CotanWeights<T> {
    pub edges: Vec<(usize, usize, T)>,
    offsets: Vec<usize>,
    adjacency: Vec<(usize, T)>,
}

impl<T: Scalar> CotanWeights<T> {
    pub fn new(positions: &[Vec3<T>], faces: &[[usize; 3]], hem: &HalfEdgeMesh) -> Result<Self, SpheremapError> {
        for (f, t) in faces.iter().enumerate() {
            if triangle_area(positions[t[0]], positions[t[1]], positions[t[2]]) <= T::zero() {
                return Err(SpheremapError::DegenerateTriangle(f));
            }
        }
        let half = T::lit(0.5);
        let cot = |h: usize| {
            let apex = hem.opposite(h);
            cotangent_at(positions[apex], positions[hem.origin(h)], positions[hem.dest(h)]) * half
        };
        let edges: Vec<(usize, usize, T)> = hem
            .edges()
            .map(|h| {
                let mut k = cot(h);
                if let Some(t) = hem.twin(h) {
                    k += cot(t);
                }
                (hem.origin(h), hem.dest(h), k.max(T::zero()))
            })
            .collect();
        let n = positions.len();
        let mut degree = vec![0usize; n + 1];
        for &(i, j, _) in &edges {
            degree[i + 1] += 1;
            degree[j + 1] += 1;
        }
        for v in 0..n {
            degree[v + 1] += degree[v];
        }
        let offsets = degree;
        let mut fill = offsets.clone();
        let mut adjacency = vec![(0, T::zero()); 2 * edges.len()];
        for &(i, j, k) in &edges {
            adjacency[fill[i]] = (j, k);
            fill[i] += 1;
            adjacency[fill[j]] = (i, k);
            fill[j] += 1;
        }
        for v in 0..n {
            adjacency[offsets[v]..offsets[v + 1]].sort_by_key(|&(j, _)| j);
        }
        Ok(CotanWeights {
            edges,
            offsets,
            adjacency,
        })
    }

    pub fn vertex_count(&self) -> usize {
        self.offsets.len() - 1
    }

    /// `(neighbour, k)` pairs around `v`, sorted by neighbour.
    pub fn neighbors(&self, v: usize) -> &[(usize, T)] {
        &self.adjacency[self.offsets[v]..self.offsets[v + 1]]
    }

    /// `Σ_edges k_ij |f_i - f_j|²`.
    pub fn energy(&self, f: &[Vec3<T>]) -> T {
        self.edges
            .iter()
            .map(|&(i, j, k)| k * (f[i] - f[j]).norm_squared())
            .sum()
    }
}

/// Harmonic energy of the map `src -> mapped`: the cotangent-weighted sum of
/// squared edge lengths in the image, with weights from the source geometry.
pub fn harmonic_energy<T: Scalar>(
    src_positions: &[Vec3<T>],
    mapped: &[Vec3<T>],
    faces: &[[usize; 3]],
    hem: &HalfEdgeMesh,
) -> Result<T, SpheremapError> {
    Ok(CotanWeights::new(src_positions, faces, hem)?.energy(mapped))
}

/// A mesh together with its image on the unit sphere.
#[derive(Debug, Clone, PartialEq)]
pub struct SphericalMesh<T> {
    base: Mesh<T>,
    sphere: Vec<Vec3<T>>,
    pub energy_trace: Vec<T>,
    pub converged: bool,
}

/// Serialised form of an energy trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyTrace {
    pub iters: Vec<usize>,
    pub energy: Vec<f64>,
    pub converged: bool,
}

impl<T: Scalar> SphericalMesh<T> {
    /// Wraps precomputed sphere positions; they must be unit length.
    pub fn new(base: Mesh<T>, sphere: Vec<Vec3<T>>) -> Result<Self, MeshError> {
        if sphere.len() != base.vertex_count() {
            return Err(MeshError::ChannelLength {
                name: channel::SPHERE.into(),
                got: sphere.len(),
                expected: base.vertex_count(),
            });
        }
        Ok(SphericalMesh {
            base,
            sphere,
            energy_trace: Vec::new(),
            converged: true,
        })
    }

    /// Reads sphere positions from the mesh's `sphere` channel.
    pub fn from_mesh(mut mesh: Mesh<T>) -> Result<Self, MeshError> {
        let sphere = mesh.vector(channel::SPHERE)?.to_vec();
        mesh.remove_channel(channel::SPHERE);
        Self::new(mesh, sphere)
    }

    pub fn base(&self) -> &Mesh<T> {
        &self.base
    }

    pub fn base_mut(&mut self) -> &mut Mesh<T> {
        &mut self.base
    }

    pub fn sphere_positions(&self) -> &[Vec3<T>] {
        &self.sphere
    }

    pub fn vertex_count(&self) -> usize {
        self.sphere.len()
    }

    pub fn faces(&self) -> &[[usize; 3]] {
        &self.base.faces
    }

    /// Applies a rotation to every sphere position.
    pub fn rotate(&mut self, r: &crate::linalg::Matrix<T>) {
        for p in &mut self.sphere {
            let v = r.mul_vec(&p.0);
            *p = Vec3::new(v[0], v[1], v[2]);
        }
    }

    /// The base mesh with every channel accumulated so far plus the sphere
    /// positions as the `sphere` channel. Geometry is the stored original.
    pub fn inverse_map(&self) -> Mesh<T> {
        let mut m = self.base.clone();
        m.set_vector(channel::SPHERE, self.sphere.clone())
            .expect("sphere positions cover every vertex");
        m
    }

    pub fn trace(&self) -> EnergyTrace {
        EnergyTrace {
            iters: (0..self.energy_trace.len()).collect(),
            energy: self.energy_trace.iter().map(|e| e.as_f64()).collect(),
            converged: self.converged,
        }
    }
}
