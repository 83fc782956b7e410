use std::collections::BTreeMap;

use super::MeshError;

/// Counts and defects of a triangle list, computed without building half-edges.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TopologyReport {
    pub vertices: usize,
    pub edges: usize,
    pub faces: usize,
    pub components: usize,
    /// Undirected edges with exactly one incident face.
    pub boundary_edges: Vec<(usize, usize)>,
    /// Undirected edges with three or more incident faces.
    pub nonmanifold_edges: Vec<(usize, usize)>,
    /// Edges traversed in the same direction by both incident faces.
    pub misoriented_edges: Vec<(usize, usize)>,
    pub isolated_vertices: Vec<usize>,
}

impl TopologyReport {
    pub fn analyze(vertex_count: usize, faces: &[[usize; 3]]) -> Self {
        // (min, max) -> list of (face, forward?) uses
        let mut uses: BTreeMap<(usize, usize), Vec<bool>> = BTreeMap::new();
        for tri in faces {
            for k in 0..3 {
                let (a, b) = (tri[k], tri[(k + 1) % 3]);
                uses.entry((a.min(b), a.max(b))).or_default().push(a < b);
            }
        }
        let mut boundary_edges = Vec::new();
        let mut nonmanifold_edges = Vec::new();
        let mut misoriented_edges = Vec::new();
        for (&e, dirs) in &uses {
            match dirs.len() {
                1 => boundary_edges.push(e),
                2 => {
                    if dirs[0] == dirs[1] {
                        misoriented_edges.push(e);
                    }
                }
                _ => nonmanifold_edges.push(e),
            }
        }

        let mut used = vec![false; vertex_count];
        let mut uf = UnionFind::new(vertex_count);
        for tri in faces {
            for &v in tri {
                used[v] = true;
            }
            uf.union(tri[0], tri[1]);
            uf.union(tri[1], tri[2]);
        }
        let isolated_vertices: Vec<usize> = (0..vertex_count).filter(|&v| !used[v]).collect();
        let mut roots: Vec<usize> = (0..vertex_count)
            .filter(|&v| used[v])
            .map(|v| uf.find(v))
            .collect();
        roots.sort_unstable();
        roots.dedup();

        TopologyReport {
            vertices: vertex_count,
            edges: uses.len(),
            faces: faces.len(),
            components: roots.len(),
            boundary_edges,
            nonmanifold_edges,
            misoriented_edges,
            isolated_vertices,
        }
    }

    pub fn euler_characteristic(&self) -> i64 {
        self.vertices as i64 - self.edges as i64 + self.faces as i64
    }

    pub fn is_closed(&self) -> bool {
        self.boundary_edges.is_empty()
    }

    pub fn is_genus_zero(&self) -> bool {
        self.require_genus_zero().is_ok()
    }

    /// Reports the first class of defect found, listing up to ten offending edges.
    pub fn require_genus_zero(&self) -> Result<(), MeshError> {
        fn list(edges: &[(usize, usize)]) -> String {
            let shown: Vec<String> = edges.iter().take(10).map(|(a, b)| format!("({a}, {b})")).collect();
            let more = if edges.len() > 10 {
                format!(" and {} more", edges.len() - 10)
            } else {
                String::new()
            };
            format!("{}{}", shown.join(", "), more)
        }
        if let Some(&v) = self.isolated_vertices.first() {
            return Err(MeshError::IsolatedVertex(v));
        }
        if !self.nonmanifold_edges.is_empty() {
            return Err(MeshError::NonManifold(format!(
                "{} edges shared by more than two faces: {}",
                self.nonmanifold_edges.len(),
                list(&self.nonmanifold_edges)
            )));
        }
        if !self.misoriented_edges.is_empty() {
            return Err(MeshError::NonManifold(format!(
                "{} edges with inconsistent face orientation: {}",
                self.misoriented_edges.len(),
                list(&self.misoriented_edges)
            )));
        }
        if !self.boundary_edges.is_empty() {
            return Err(MeshError::NotGenusZero(format!(
                "{} boundary edges: {}",
                self.boundary_edges.len(),
                list(&self.boundary_edges)
            )));
        }
        if self.components != 1 {
            return Err(MeshError::NotGenusZero(format!(
                "{} connected components",
                self.components
            )));
        }
        if self.euler_characteristic() != 2 {
            return Err(MeshError::NotGenusZero(format!(
                "Euler characteristic V - E + F = {} - {} + {} = {}",
                self.vertices,
                self.edges,
                self.faces,
                self.euler_characteristic()
            )));
        }
        Ok(())
    }
}

/// Disjoint-set forest with path halving and union by size.
#[derive(Debug, Clone)]
pub struct UnionFind {
    parent: Vec<usize>,
    size: Vec<usize>,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
            size: vec![1; n],
        }
    }

    pub fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    /// Returns the new root, or `None` when already joined.
    pub fn union(&mut self, a: usize, b: usize) -> Option<usize> {
        let (mut ra, mut rb) = (self.find(a), self.find(b));
        if ra == rb {
            return None;
        }
        // Deterministic: larger set wins, ties go to the lower index.
        if self.size[ra] < self.size[rb] || (self.size[ra] == self.size[rb] && rb < ra) {
            std::mem::swap(&mut ra, &mut rb);
        }
        self.parent[rb] = ra;
        self.size[ra] += self.size[rb];
        Some(ra)
    }

    pub fn size_of(&mut self, x: usize) -> usize {
        let r = self.find(x);
        self.size[r]
    }
}
