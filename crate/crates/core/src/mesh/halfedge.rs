use std::collections::HashMap;

use super::MeshError;

/// Half-edge `3f + k` starts at corner `k` of face `f`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HalfEdge {
    pub origin: usize,
    pub twin: Option<usize>,
    pub face: usize,
}

/// Index-based half-edge connectivity derived from a triangle list.
///
/// Half-edges without a twin lie on the surface boundary.
#[derive(Debug, Clone)]
pub struct HalfEdgeMesh {
    half_edges: Vec<HalfEdge>,
    outgoing: Vec<Vec<usize>>,
}

impl HalfEdgeMesh {
    /// Fails when a directed edge appears twice (inconsistent orientation or
    /// more than two faces on an edge).
    pub fn new(vertex_count: usize, faces: &[[usize; 3]]) -> Result<Self, MeshError> {
        let mut half_edges = Vec::with_capacity(faces.len() * 3);
        let mut outgoing = vec![Vec::new(); vertex_count];
        let mut directed: HashMap<(usize, usize), usize> = HashMap::with_capacity(faces.len() * 3);
        for (f, tri) in faces.iter().enumerate() {
            for k in 0..3 {
                let h = 3 * f + k;
                let (a, b) = (tri[k], tri[(k + 1) % 3]);
                if let Some(prev) = directed.insert((a, b), h) {
                    return Err(MeshError::NonManifold(format!(
                        "directed edge ({a}, {b}) used by faces {} and {f}",
                        prev / 3
                    )));
                }
                half_edges.push(HalfEdge {
                    origin: a,
                    twin: None,
                    face: f,
                });
                outgoing[a].push(h);
            }
        }
        for h in 0..half_edges.len() {
            let a = half_edges[h].origin;
            let b = half_edges[Self::next_of(h)].origin;
            if let Some(&t) = directed.get(&(b, a)) {
                half_edges[h].twin = Some(t);
            }
        }
        Ok(HalfEdgeMesh {
            half_edges,
            outgoing,
        })
    }

    #[inline]
    fn next_of(h: usize) -> usize {
        h - h % 3 + (h % 3 + 1) % 3
    }

    #[inline]
    pub fn next(&self, h: usize) -> usize {
        Self::next_of(h)
    }

    #[inline]
    pub fn prev(&self, h: usize) -> usize {
        h - h % 3 + (h % 3 + 2) % 3
    }

    #[inline]
    pub fn twin(&self, h: usize) -> Option<usize> {
        self.half_edges[h].twin
    }

    #[inline]
    pub fn origin(&self, h: usize) -> usize {
        self.half_edges[h].origin
    }

    #[inline]
    pub fn dest(&self, h: usize) -> usize {
        self.half_edges[self.next(h)].origin
    }

    #[inline]
    pub fn face(&self, h: usize) -> usize {
        self.half_edges[h].face
    }

    /// The vertex opposite half-edge `h` in its face.
    #[inline]
    pub fn opposite(&self, h: usize) -> usize {
        self.half_edges[self.prev(h)].origin
    }

    pub fn half_edge_count(&self) -> usize {
        self.half_edges.len()
    }

    pub fn vertex_count(&self) -> usize {
        self.outgoing.len()
    }

    pub fn outgoing(&self, v: usize) -> &[usize] {
        &self.outgoing[v]
    }

    /// Sorted, de-duplicated one-ring of `v`.
    pub fn neighbors(&self, v: usize) -> Vec<usize> {
        let mut ring: Vec<usize> = Vec::with_capacity(self.outgoing[v].len() + 1);
        for &h in &self.outgoing[v] {
            ring.push(self.dest(h));
            // Boundary fans: the incoming half-edge of the first face has no
            // outgoing counterpart from `v`.
            let incoming = self.prev(h);
            if self.twin(incoming).is_none() {
                ring.push(self.origin(incoming));
            }
        }
        ring.sort_unstable();
        ring.dedup();
        ring
    }

    /// Faces incident to `v`, sorted.
    pub fn vertex_faces(&self, v: usize) -> Vec<usize> {
        let mut f: Vec<usize> = self.outgoing[v].iter().map(|&h| self.face(h)).collect();
        f.sort_unstable();
        f
    }

    /// One representative half-edge per undirected edge.
    pub fn edges(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.half_edges.len()).filter(move |&h| match self.twin(h) {
            None => true,
            Some(t) => h < t,
        })
    }

    pub fn edge_count(&self) -> usize {
        self.edges().count()
    }

    pub fn boundary_half_edges(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.half_edges.len()).filter(move |&h| self.twin(h).is_none())
    }

    pub fn is_closed(&self) -> bool {
        self.boundary_half_edges().next().is_none()
    }

    /// Checks `twin(twin(h)) = h`, that twins run in opposite directions, and
    /// that every `next` cycle has length three.
    pub fn check_invariants(&self) -> bool {
        (0..self.half_edges.len()).all(|h| {
            let twin_ok = match self.twin(h) {
                Some(t) => {
                    self.twin(t) == Some(h)
                        && self.origin(t) == self.dest(h)
                        && self.dest(t) == self.origin(h)
                }
                None => true,
            };
            let cycle_ok = self.next(self.next(self.next(h))) == h && self.next(h) != h;
            twin_ok && cycle_ok
        })
    }

    /// Walks the fan around a vertex of a closed surface starting at
    /// outgoing half-edge `h`, returning the outgoing half-edges in order.
    pub fn fan(&self, h: usize) -> Vec<usize> {
        let mut out = vec![h];
        let mut cur = h;
        loop {
            match self.twin(self.prev(cur)) {
                Some(t) if t != h => {
                    if out.len() > self.half_edges.len() {
                        break;
                    }
                    out.push(t);
                    cur = t;
                }
                _ => break,
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::primitives;

    #[test]
    fn icosphere_invariants_and_counts() {
        let m = primitives::icosphere::<f64>(2);
        let hem = m.half_edges().unwrap();
        assert!(hem.check_invariants());
        assert!(hem.is_closed());
        assert_eq!(hem.edge_count(), 3 * m.face_count() / 2);
        for v in 0..m.vertex_count() {
            let ring = hem.neighbors(v);
            assert!(ring.len() == 5 || ring.len() == 6);
            assert_eq!(hem.fan(hem.outgoing(v)[0]).len(), ring.len());
        }
    }

    #[test]
    fn open_triangle_has_three_boundary_half_edges() {
        let hem = HalfEdgeMesh::new(3, &[[0, 1, 2]]).unwrap();
        assert_eq!(hem.boundary_half_edges().count(), 3);
        assert_eq!(hem.neighbors(0), vec![1, 2]);
        assert!(hem.check_invariants());
    }

    #[test]
    fn inconsistent_orientation_is_rejected() {
        assert!(matches!(
            HalfEdgeMesh::new(4, &[[0, 1, 2], [0, 1, 3]]),
            Err(MeshError::NonManifold(_))
        ));
    }
}
