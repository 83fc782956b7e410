//! Triangle meshes with named per-vertex channels.

mod geometry;
mod halfedge;
pub mod io;
pub mod primitives;
mod topology;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Scalar;
use crate::vec3::Vec3;

pub use geometry::{
    angle_weighted_normals, face_areas, lumped_vertex_areas, mean_edge_length, normal_curvature,
    normal_curvatures, patch_area, total_area,
};
pub use halfedge::{HalfEdge, HalfEdgeMesh};
pub use topology::{TopologyReport, UnionFind};

/// Well-known channel names shared by the file formats and pipeline stages.
pub mod channel {
    pub const BISPECTRAL: &str = "bispectral_rgb";
    pub const HUE: &str = "hue";
    pub const SATURATION: &str = "saturation";
    pub const VALUE: &str = "value";
    pub const CONCENTRATION: &str = "concentration";
    pub const COMPOSITION: &str = "composition";
    pub const CURVATURE: &str = "curvature";
    pub const PATCH_ID: &str = "patch_id";
    pub const SPHERE: &str = "sphere";
    pub const FINAL_RGB: &str = "final_rgb";
    pub const FILTERED: &str = "filtered_concentration";
}

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("face {face} references vertex {index} but the mesh has {count} vertices")]
    IndexOutOfRange {
        face: usize,
        index: usize,
        count: usize,
    },
    #[error("face {face} is degenerate (repeated vertex indices {indices:?})")]
    DegenerateFace { face: usize, indices: [usize; 3] },
    #[error("channel `{name}` has {got} entries, expected {expected}")]
    ChannelLength {
        name: String,
        got: usize,
        expected: usize,
    },
    #[error("channel `{0}` is missing")]
    MissingChannel(String),
    #[error("channel `{name}` has the wrong kind (expected {expected})")]
    ChannelKind { name: String, expected: &'static str },
    #[error("non-manifold topology: {0}")]
    NonManifold(String),
    #[error("surface is not a closed genus-zero manifold: {0}")]
    NotGenusZero(String),
    #[error("vertex {0} has no incident edges")]
    IsolatedVertex(usize),
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// One per-vertex attribute channel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Channel<T> {
    Scalar(Vec<T>),
    Vector(Vec<Vec3<T>>),
    Label(Vec<i32>),
}

impl<T> Channel<T> {
    pub fn len(&self) -> usize {
        match self {
            Channel::Scalar(v) => v.len(),
            Channel::Vector(v) => v.len(),
            Channel::Label(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Indexed triangle mesh. Channels are flat per-vertex arrays keyed by name.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mesh<T> {
    pub positions: Vec<Vec3<T>>,
    pub faces: Vec<[usize; 3]>,
    channels: BTreeMap<String, Channel<T>>,
}

impl<T: Scalar> Mesh<T> {
    /// Builds a mesh after checking face indices and rejecting degenerate faces.
    pub fn new(positions: Vec<Vec3<T>>, faces: Vec<[usize; 3]>) -> Result<Self, MeshError> {
        let count = positions.len();
        for (f, tri) in faces.iter().enumerate() {
            for &index in tri {
                if index >= count {
                    return Err(MeshError::IndexOutOfRange {
                        face: f,
                        index,
                        count,
                    });
                }
            }
            if tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2] {
                return Err(MeshError::DegenerateFace {
                    face: f,
                    indices: *tri,
                });
            }
        }
        Ok(Mesh {
            positions,
            faces,
            channels: BTreeMap::new(),
        })
    }

    #[inline]
    pub fn vertex_count(&self) -> usize {
        self.positions.len()
    }

    #[inline]
    pub fn face_count(&self) -> usize {
        self.faces.len()
    }

    pub fn channels(&self) -> impl Iterator<Item = (&str, &Channel<T>)> {
        self.channels.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn has_channel(&self, name: &str) -> bool {
        self.channels.contains_key(name)
    }

    pub fn channel(&self, name: &str) -> Option<&Channel<T>> {
        self.channels.get(name)
    }

    pub fn remove_channel(&mut self, name: &str) -> Option<Channel<T>> {
        self.channels.remove(name)
    }

    pub fn set_channel(&mut self, name: &str, ch: Channel<T>) -> Result<(), MeshError> {
        if ch.len() != self.vertex_count() {
            return Err(MeshError::ChannelLength {
                name: name.to_string(),
                got: ch.len(),
                expected: self.vertex_count(),
            });
        }
        self.channels.insert(name.to_string(), ch);
        Ok(())
    }

    pub fn set_scalar(&mut self, name: &str, values: Vec<T>) -> Result<(), MeshError> {
        self.set_channel(name, Channel::Scalar(values))
    }

    pub fn set_vector(&mut self, name: &str, values: Vec<Vec3<T>>) -> Result<(), MeshError> {
        self.set_channel(name, Channel::Vector(values))
    }

    pub fn set_label(&mut self, name: &str, values: Vec<i32>) -> Result<(), MeshError> {
        self.set_channel(name, Channel::Label(values))
    }

    pub fn scalar(&self, name: &str) -> Result<&[T], MeshError> {
        match self.channels.get(name) {
            Some(Channel::Scalar(v)) => Ok(v),
            Some(_) => Err(MeshError::ChannelKind {
                name: name.to_string(),
                expected: "scalar",
            }),
            None => Err(MeshError::MissingChannel(name.to_string())),
        }
    }

    pub fn vector(&self, name: &str) -> Result<&[Vec3<T>], MeshError> {
        match self.channels.get(name) {
            Some(Channel::Vector(v)) => Ok(v),
            Some(_) => Err(MeshError::ChannelKind {
                name: name.to_string(),
                expected: "vector",
            }),
            None => Err(MeshError::MissingChannel(name.to_string())),
        }
    }

    pub fn label(&self, name: &str) -> Result<&[i32], MeshError> {
        match self.channels.get(name) {
            Some(Channel::Label(v)) => Ok(v),
            Some(_) => Err(MeshError::ChannelKind {
                name: name.to_string(),
                expected: "label",
            }),
            None => Err(MeshError::MissingChannel(name.to_string())),
        }
    }

    pub fn topology(&self) -> TopologyReport {
        TopologyReport::analyze(self.vertex_count(), &self.faces)
    }

    /// Fails unless the mesh is a single closed, orientable genus-zero manifold.
    pub fn validate_genus_zero(&self) -> Result<TopologyReport, MeshError> {
        let report = self.topology();
        report.require_genus_zero()?;
        Ok(report)
    }

    pub fn half_edges(&self) -> Result<HalfEdgeMesh, MeshError> {
        HalfEdgeMesh::new(self.vertex_count(), &self.faces)
    }

    /// Converts the scalar type of geometry and channels.
    pub fn cast<U: Scalar>(&self) -> Mesh<U> {
        let channels = self
            .channels
            .iter()
            .map(|(k, ch)| {
                let c = match ch {
                    Channel::Scalar(v) => Channel::Scalar(v.iter().map(|&x| U::lit(x.as_f64())).collect()),
                    Channel::Vector(v) => Channel::Vector(v.iter().map(|p| p.cast()).collect()),
                    Channel::Label(v) => Channel::Label(v.clone()),
                };
                (k.clone(), c)
            })
            .collect();
        Mesh {
            positions: self.positions.iter().map(|p| p.cast()).collect(),
            faces: self.faces.clone(),
            channels,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tri() -> Mesh<f64> {
        Mesh::new(
            vec![
                Vec3::new(0.0, 0.0, 0.0),
                Vec3::new(1.0, 0.0, 0.0),
                Vec3::new(0.0, 1.0, 0.0),
            ],
            vec![[0, 1, 2]],
        )
        .unwrap()
    }

    #[test]
    fn rejects_out_of_range_and_degenerate_faces() {
        let p = vec![Vec3::<f64>::zero(); 3];
        assert!(matches!(
            Mesh::new(p.clone(), vec![[0, 1, 3]]),
            Err(MeshError::IndexOutOfRange { index: 3, .. })
        ));
        assert!(matches!(
            Mesh::new(p, vec![[0, 1, 1]]),
            Err(MeshError::DegenerateFace { .. })
        ));
    }

    #[test]
    fn channel_length_is_enforced() {
        let mut m = tri();
        assert!(matches!(
            m.set_scalar("hue", vec![0.0; 2]),
            Err(MeshError::ChannelLength { got: 2, expected: 3, .. })
        ));
        m.set_scalar("hue", vec![0.1, 0.2, 0.3]).unwrap();
        assert_eq!(m.scalar("hue").unwrap()[1], 0.2);
        assert!(matches!(m.vector("hue"), Err(MeshError::ChannelKind { .. })));
        assert!(matches!(m.scalar("nope"), Err(MeshError::MissingChannel(_))));
    }
}
