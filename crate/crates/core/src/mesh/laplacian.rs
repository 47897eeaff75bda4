//! Random-walk normalised graph Laplacian on mesh vertices.
//!
//! Row `i` of `L·V` is `v_i - mean(neighbours of v_i)`. Isolated vertices
//! produce a zero row.

use nalgebra::Vector3;

use super::{MeshTopology, TriangleMesh};

pub fn laplacian_apply(mesh: &TriangleMesh, topology: &MeshTopology) -> Vec<Vector3<f64>> {
    apply_to(&mesh.vertices, topology)
}

pub(crate) fn apply_to(vertices: &[Vector3<f64>], topology: &MeshTopology) -> Vec<Vector3<f64>> {
    vertices
        .iter()
        .zip(&topology.vertex_neighbors)
        .map(|(v, nbrs)| {
            if nbrs.is_empty() {
                return Vector3::zeros();
            }
            let sum: Vector3<f64> = nbrs.iter().map(|&j| vertices[j]).sum();
            v - sum / nbrs.len() as f64
        })
        .collect()
}

/// Computes `Lᵀ·Y` for per-vertex rows `Y`.
pub fn laplacian_transpose_apply(rows: &[Vector3<f64>], topology: &MeshTopology) -> Vec<Vector3<f64>> {
    let mut out = vec![Vector3::zeros(); rows.len()];
    for (i, nbrs) in topology.vertex_neighbors.iter().enumerate() {
        if nbrs.is_empty() {
            continue;
        }
        out[i] += rows[i];
        let share = rows[i] / nbrs.len() as f64;
        for &j in nbrs {
            out[j] -= share;
        }
    }
    out
}
