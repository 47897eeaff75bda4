use std::collections::BTreeMap;

use super::TriangleMesh;

/// Two facets meeting along an interior edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SharedEdge {
    pub facet_a: usize,
    pub facet_b: usize,
    /// The shared edge, smaller index first.
    pub edge: [usize; 2],
    /// Vertex of `facet_a` opposite the edge.
    pub opposite_a: usize,
    /// Vertex of `facet_b` opposite the edge.
    pub opposite_b: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeshTopology {
    pub vertex_degree: Vec<usize>,
    /// Sorted adjacency lists.
    pub vertex_neighbors: Vec<Vec<usize>>,
    pub shared_edge_pairs: Vec<SharedEdge>,
    /// Unique undirected edges, sorted.
    pub edges: Vec<[usize; 2]>,
    /// Edges used by one facet or by more than two.
    pub open_edge_count: usize,
}

impl MeshTopology {
    pub fn build(mesh: &TriangleMesh) -> Self {
        let nv = mesh.vertex_count();
        // edge -> (facet, opposite vertex) incidences
        let mut incidence: BTreeMap<[usize; 2], Vec<(usize, usize)>> = BTreeMap::new();
        for (j, f) in mesh.facets.iter().enumerate() {
            for k in 0..3 {
                let a = f[k];
                let b = f[(k + 1) % 3];
                let opp = f[(k + 2) % 3];
                let key = if a < b { [a, b] } else { [b, a] };
                incidence.entry(key).or_default().push((j, opp));
            }
        }

        let mut vertex_neighbors = vec![Vec::new(); nv];
        let mut shared_edge_pairs = Vec::new();
        let mut open_edge_count = 0;
        let mut edges = Vec::with_capacity(incidence.len());
        for (edge, inc) in &incidence {
            edges.push(*edge);
            vertex_neighbors[edge[0]].push(edge[1]);
            vertex_neighbors[edge[1]].push(edge[0]);
            if inc.len() == 2 {
                shared_edge_pairs.push(SharedEdge {
                    facet_a: inc[0].0,
                    facet_b: inc[1].0,
                    edge: *edge,
                    opposite_a: inc[0].1,
                    opposite_b: inc[1].1,
                });
            } else {
                open_edge_count += 1;
            }
        }
        for n in &mut vertex_neighbors {
            n.sort_unstable();
        }
        let vertex_degree = vertex_neighbors.iter().map(Vec::len).collect();

        Self {
            vertex_degree,
            vertex_neighbors,
            shared_edge_pairs,
            edges,
            open_edge_count,
        }
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{box_mesh, icosphere};
    use nalgebra::Vector3;

    #[test]
    fn degree_sum_is_twice_edge_count() {
        let mesh = icosphere(2, 1.0).unwrap();
        let topo = MeshTopology::build(&mesh);
        let total: usize = topo.vertex_degree.iter().sum();
        assert_eq!(total, 2 * topo.edge_count());
        for (d, n) in topo.vertex_degree.iter().zip(&topo.vertex_neighbors) {
            assert_eq!(*d, n.len());
        }
    }

    #[test]
    fn open_strip_has_boundary_edges() {
        let mesh = TriangleMesh::with_unit_scattering(
            vec![
                Vector3::new(0.0, 0.0, 0.0),
                Vector3::new(1.0, 0.0, 0.0),
                Vector3::new(0.0, 1.0, 0.0),
                Vector3::new(1.0, 1.0, 0.0),
            ],
            vec![[0, 1, 2], [1, 3, 2]],
        )
        .unwrap();
        let topo = MeshTopology::build(&mesh);
        assert_eq!(topo.edge_count(), 5);
        assert_eq!(topo.shared_edge_pairs.len(), 1);
        assert_eq!(topo.open_edge_count, 4);
        let se = topo.shared_edge_pairs[0];
        assert_eq!(se.edge, [1, 2]);
        assert_eq!(se.opposite_a, 0);
        assert_eq!(se.opposite_b, 3);
    }

    #[test]
    fn closed_box_has_no_open_edges() {
        let b = box_mesh(Vector3::zeros(), Vector3::new(1.0, 2.0, 3.0));
        let topo = MeshTopology::build(&b);
        assert_eq!(topo.open_edge_count, 0);
        assert_eq!(topo.shared_edge_pairs.len(), topo.edge_count());
    }
}
