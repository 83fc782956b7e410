//! Segmentation of the concentration field into patches, patch boundaries
//! and per-patch property distributions.

mod filter;
mod fit;
mod segment;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::harmonics::ShError;
use crate::mesh::{channel, patch_area, HalfEdgeMesh, Mesh, MeshError};
use crate::scalar::Scalar;

pub use filter::{prefilter, FilterOptions};
pub use fit::{build_patch_pdfs, PatchFitter, PatchPdfs};
pub use segment::{otsu_threshold, segment_faces, SegmentOptions, Segmentation};

#[derive(Debug, Error)]
pub enum PatchError {
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Fit(#[from] ShError),
    #[error("face label array has {got} entries, expected {expected}")]
    LabelCount { got: usize, expected: usize },
    #[error("patch {0} has no faces")]
    EmptyPatch(i32),
    #[error("no background patch (label 0)")]
    NoBackground,
    #[error("malformed patch manifest: {0}")]
    Manifest(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Patch {
    pub id: i32,
    pub face_ids: Vec<usize>,
    /// Vertices of `face_ids`, plus the extension ring once extended.
    pub vertex_ids: Vec<usize>,
    pub boundary_loops: Vec<Vec<usize>>,
    pub area: f64,
    pub is_background: bool,
}

impl Patch {
    pub fn new<T: Scalar>(id: i32, mut face_ids: Vec<usize>, mesh: &Mesh<T>) -> Self {
        face_ids.sort_unstable();
        face_ids.dedup();
        let vertex_ids: BTreeSet<usize> = face_ids.iter().flat_map(|&f| mesh.faces[f]).collect();
        let area = patch_area(&mesh.positions, &mesh.faces, face_ids.iter().copied()).as_f64();
        Patch {
            id,
            face_ids,
            vertex_ids: vertex_ids.into_iter().collect(),
            boundary_loops: Vec::new(),
            area,
            is_background: id == 0,
        }
    }

    pub fn face_mask(&self, face_count: usize) -> Vec<bool> {
        let mut m = vec![false; face_count];
        for &f in &self.face_ids {
            m[f] = true;
        }
        m
    }

    pub fn vertex_mask(&self, vertex_count: usize) -> Vec<bool> {
        let mut m = vec![false; vertex_count];
        for &v in &self.vertex_ids {
            m[v] = true;
        }
        m
    }

    pub fn boundary_edge_count(&self) -> usize {
        self.boundary_loops.iter().map(Vec::len).sum()
    }

    /// Vertices on any boundary loop, sorted.
    pub fn boundary_vertices(&self) -> Vec<usize> {
        let set: BTreeSet<usize> = self.boundary_loops.iter().flatten().copied().collect();
        set.into_iter().collect()
    }

    /// Grows `vertex_ids` by the outside one-ring of the boundary. Faces are
    /// left alone.
    pub fn extend_boundary(mut self, hem: &HalfEdgeMesh) -> Self {
        let mut verts: BTreeSet<usize> = self.vertex_ids.iter().copied().collect();
        for v in self.boundary_vertices() {
            verts.extend(hem.neighbors(v));
        }
        self.vertex_ids = verts.into_iter().collect();
        self
    }
}

/// Ordered boundary loops of a face set. The patch lies to the left of each
/// loop, matching the mesh orientation. A vertex where the patch touches
/// itself (a bowtie) appears once per visit; such vertices are returned in
/// the second list.
pub fn extract_boundary(face_mask: &[bool], hem: &HalfEdgeMesh) -> (Vec<Vec<usize>>, Vec<usize>) {
    let on_boundary = |h: usize| {
        face_mask[hem.face(h)] && hem.twin(h).is_none_or(|t| !face_mask[hem.face(t)])
    };
    let mut visited = vec![false; hem.half_edge_count()];
    let mut loops = Vec::new();
    for start in 0..hem.half_edge_count() {
        if visited[start] || !on_boundary(start) {
            continue;
        }
        let mut lp = Vec::new();
        let mut h = start;
        loop {
            visited[h] = true;
            lp.push(hem.origin(h));
            // Rotate around the destination, staying inside the patch, until
            // the next boundary half-edge.
            let mut g = hem.next(h);
            while !on_boundary(g) {
                g = hem.next(hem.twin(g).expect("interior half-edge has a twin"));
            }
            h = g;
            if h == start || visited[h] {
                break;
            }
        }
        loops.push(lp);
    }
    let mut seen = BTreeMap::<usize, usize>::new();
    for &v in loops.iter().flatten() {
        *seen.entry(v).or_default() += 1;
    }
    let junctions = seen.into_iter().filter(|&(_, c)| c > 1).map(|(v, _)| v).collect();
    (loops, junctions)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatchSet {
    pub patches: Vec<Patch>,
    pub face_labels: Vec<i32>,
    pub vertex_labels: Vec<i32>,
    pub warnings: Vec<String>,
}

impl PatchSet {
    /// Builds patches from per-face labels (0 = background), extracting and
    /// extending every boundary.
    pub fn from_face_labels<T: Scalar>(
        mesh: &Mesh<T>,
        hem: &HalfEdgeMesh,
        face_labels: Vec<i32>,
    ) -> Result<Self, PatchError> {
        if face_labels.len() != mesh.face_count() {
            return Err(PatchError::LabelCount {
                got: face_labels.len(),
                expected: mesh.face_count(),
            });
        }
        let mut groups: BTreeMap<i32, Vec<usize>> = BTreeMap::new();
        for (f, &l) in face_labels.iter().enumerate() {
            groups.entry(l).or_default().push(f);
        }
        if !groups.contains_key(&0) {
            return Err(PatchError::NoBackground);
        }
        let mut warnings = Vec::new();
        let mut patches = Vec::with_capacity(groups.len());
        for (id, faces) in groups {
            let mut p = Patch::new(id, faces, mesh);
            let (loops, junctions) = extract_boundary(&p.face_mask(mesh.face_count()), hem);
            if !junctions.is_empty() {
                warnings.push(format!(
                    "patch {id}: boundary touches itself at vertices {junctions:?}; junctions duplicated in loops"
                ));
            }
            p.boundary_loops = loops;
            patches.push(p.extend_boundary(hem));
        }
        let vertex_labels = majority_vertex_labels(mesh, &face_labels);
        Ok(PatchSet {
            patches,
            face_labels,
            vertex_labels,
            warnings,
        })
    }

    pub fn background(&self) -> &Patch {
        self.patches.iter().find(|p| p.is_background).expect("patch set has a background")
    }

    pub fn foreground(&self) -> impl Iterator<Item = &Patch> {
        self.patches.iter().filter(|p| !p.is_background)
    }

    pub fn foreground_count(&self) -> usize {
        self.foreground().count()
    }

    pub fn get(&self, id: i32) -> Option<&Patch> {
        self.patches.iter().find(|p| p.id == id)
    }

    /// Re-decides the label of vertices shared by several patches: each takes
    /// the incident patch whose mean value is closest to its own value, so
    /// a vertex on a sharp step joins the side it belongs to. Ties keep the
    /// majority label.
    pub fn refine_vertex_labels<T: Scalar>(&mut self, mesh: &Mesh<T>, values: &[T]) {
        let third = T::lit(1.0 / 3.0);
        let mut sums: BTreeMap<i32, (f64, f64)> = BTreeMap::new();
        let mut incident: Vec<BTreeSet<i32>> = vec![BTreeSet::new(); mesh.vertex_count()];
        for (f, tri) in mesh.faces.iter().enumerate() {
            let l = self.face_labels[f];
            let fv = ((values[tri[0]] + values[tri[1]] + values[tri[2]]) * third).as_f64();
            let e = sums.entry(l).or_default();
            e.0 += 1.0;
            e.1 += fv;
            for &v in tri {
                incident[v].insert(l);
            }
        }
        let mean: BTreeMap<i32, f64> = sums.into_iter().map(|(l, (n, s))| (l, s / n)).collect();
        for (v, labels) in incident.iter().enumerate() {
            if labels.len() < 2 {
                continue;
            }
            let x = values[v].as_f64();
            let current = self.vertex_labels[v];
            let mut best = (current, (mean[&current] - x).abs());
            for &l in labels {
                let d = (mean[&l] - x).abs();
                if d < best.1 {
                    best = (l, d);
                }
            }
            self.vertex_labels[v] = best.0;
        }
    }

    /// Sample mask used when fitting the distributions of patch `id`.
    pub fn fit_mask(&self, id: i32, kind: FitMask, faces: &[[usize; 3]]) -> Vec<bool> {
        let n = self.vertex_labels.len();
        match kind {
            FitMask::Labelled => self.vertex_labels.iter().map(|&l| l == id).collect(),
            FitMask::Faces => {
                let mut m = vec![false; n];
                for (f, tri) in faces.iter().enumerate() {
                    if self.face_labels[f] == id {
                        for &v in tri {
                            m[v] = true;
                        }
                    }
                }
                m
            }
            FitMask::Extended => self.get(id).map(|p| p.vertex_mask(n)).unwrap_or_else(|| vec![false; n]),
        }
    }

    /// Writes the per-vertex `patch_id` label channel.
    pub fn label_mesh<T: Scalar>(&self, mesh: &mut Mesh<T>) -> Result<(), MeshError> {
        mesh.set_label(channel::PATCH_ID, self.vertex_labels.clone())
    }

    pub fn manifest(&self) -> PatchManifest {
        PatchManifest {
            patches: self
                .patches
                .iter()
                .map(|p| PatchEntry {
                    id: p.id,
                    area: p.area,
                    n_faces: p.face_ids.len(),
                    n_vertices: p.vertex_ids.len(),
                    is_background: p.is_background,
                })
                .collect(),
            face_labels: self.face_labels.clone(),
            vertex_labels: self.vertex_labels.clone(),
            warnings: self.warnings.clone(),
        }
    }

    pub fn from_manifest<T: Scalar>(
        mesh: &Mesh<T>,
        hem: &HalfEdgeMesh,
        manifest: &PatchManifest,
    ) -> Result<Self, PatchError> {
        let mut set = Self::from_face_labels(mesh, hem, manifest.face_labels.clone())?;
        let ids: Vec<i32> = manifest.patches.iter().map(|p| p.id).collect();
        let have: Vec<i32> = set.patches.iter().map(|p| p.id).collect();
        if ids != have {
            return Err(PatchError::Manifest(format!(
                "listed patch ids {ids:?} disagree with face labels {have:?}"
            )));
        }
        if !manifest.vertex_labels.is_empty() {
            if manifest.vertex_labels.len() != mesh.vertex_count() {
                return Err(PatchError::Manifest(format!(
                    "{} vertex labels for {} vertices",
                    manifest.vertex_labels.len(),
                    mesh.vertex_count()
                )));
            }
            set.vertex_labels = manifest.vertex_labels.clone();
        }
        set.warnings = manifest.warnings.clone();
        Ok(set)
    }
}

/// Each vertex takes the label held by most of its incident faces; ties go
/// to the lower label.
fn majority_vertex_labels<T: Scalar>(mesh: &Mesh<T>, face_labels: &[i32]) -> Vec<i32> {
    let mut votes: Vec<BTreeMap<i32, usize>> = vec![BTreeMap::new(); mesh.vertex_count()];
    for (f, tri) in mesh.faces.iter().enumerate() {
        for &v in tri {
            *votes[v].entry(face_labels[f]).or_default() += 1;
        }
    }
    votes
        .into_iter()
        .map(|m| {
            m.into_iter()
                .fold((-1, 0), |best, (l, c)| if c > best.1 { (l, c) } else { best })
                .0
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatchEntry {
    pub id: i32,
    pub area: f64,
    pub n_faces: usize,
    pub n_vertices: usize,
    pub is_background: bool,
}

/// Which vertices enter a patch's fits.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FitMask {
    /// Vertices whose `patch_id` label is the patch.
    #[default]
    Labelled,
    /// Every vertex of the patch's faces.
    Faces,
    /// Face vertices plus the one-ring extension beyond the boundary.
    Extended,
}

/// JSON form of a patch set. Face labels are kept so later stages can
/// rebuild the exact face partition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatchManifest {
    pub patches: Vec<PatchEntry>,
    pub face_labels: Vec<i32>,
    #[serde(default)]
    pub vertex_labels: Vec<i32>,
    #[serde(default)]
    pub warnings: Vec<String>,
}

/// Felzenszwalb segmentation of `filtered` into a background and numbered
/// foreground patches.
pub fn segment<T: Scalar>(
    mesh: &Mesh<T>,
    hem: &HalfEdgeMesh,
    filtered: &[T],
    opts: &SegmentOptions,
) -> Result<(PatchSet, Segmentation), PatchError> {
    let seg = segment_faces(&mesh.positions, &mesh.faces, hem, filtered, opts);
    let mut set = PatchSet::from_face_labels(mesh, hem, seg.face_labels.clone())?;
    set.refine_vertex_labels(mesh, filtered);
    if let Some(w) = &seg.warning {
        set.warnings.insert(0, w.clone());
    }
    Ok((set, seg))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::primitives;

    #[test]
    fn single_triangle_loop() {
        let m = primitives::icosphere::<f64>(1);
        let hem = m.half_edges().unwrap();
        let mut mask = vec![false; m.face_count()];
        mask[7] = true;
        let (loops, junctions) = extract_boundary(&mask, &hem);
        assert_eq!(loops, vec![m.faces[7].to_vec()]);
        assert!(junctions.is_empty());
    }

    #[test]
    fn annulus_has_two_loops() {
        let m = primitives::icosphere::<f64>(3);
        let hem = m.half_edges().unwrap();
        let mask: Vec<bool> = m
            .faces
            .iter()
            .map(|f| {
                let z = (m.positions[f[0]].z() + m.positions[f[1]].z() + m.positions[f[2]].z()) / 3.0;
                z.abs() < 0.3
            })
            .collect();
        let (loops, _) = extract_boundary(&mask, &hem);
        assert_eq!(loops.len(), 2);
    }

    #[test]
    fn extension_covers_missing_vertex() {
        let m = primitives::icosphere::<f64>(2);
        let hem = m.half_edges().unwrap();
        // Every face except those touching vertex 0.
        let faces: Vec<usize> = (0..m.face_count()).filter(|&f| !m.faces[f].contains(&0)).collect();
        let mut p = Patch::new(1, faces.clone(), &m);
        assert_eq!(p.vertex_ids.len(), m.vertex_count() - 1);
        p.boundary_loops = extract_boundary(&p.face_mask(m.face_count()), &hem).0;
        let p = p.extend_boundary(&hem);
        assert_eq!(p.vertex_ids.len(), m.vertex_count());
        assert_eq!(p.face_ids, faces);
    }

    #[test]
    fn manifest_round_trip() {
        let m = primitives::icosphere::<f64>(2);
        let hem = m.half_edges().unwrap();
        let labels: Vec<i32> = (0..m.face_count()).map(|f| if f < 20 { 1 } else { 0 }).collect();
        let set = PatchSet::from_face_labels(&m, &hem, labels).unwrap();
        let json = serde_json::to_string(&set.manifest()).unwrap();
        let back: PatchManifest = serde_json::from_str(&json).unwrap();
        assert_eq!(PatchSet::from_manifest(&m, &hem, &back).unwrap(), set);
        let total: f64 = set.patches.iter().map(|p| p.area).sum();
        assert!((total - crate::mesh::total_area(&m.positions, &m.faces)).abs() < 1e-12);
    }
}
