//! Triangle meshes with one scalar scattering value per facet.
//!
//! Facet indices are 0-based in memory. Every facet must have three distinct
//! vertex indices and a non-degenerate world-space area.

mod fixtures;
mod icosphere;
mod laplacian;
mod obj;
mod topology;
pub mod voxel;

pub use fixtures::{box_mesh, building_scene, cuboid_with_turret, station, triangle_soup, BuildingPart, BuildingScene};
pub use icosphere::icosphere;
pub use laplacian::{laplacian_apply, laplacian_transpose_apply};
pub use obj::{load_mesh, load_obj, load_scat, save_obj, save_scat, scat_sidecar_path, ObjGeometry};
pub use topology::{MeshTopology, SharedEdge};
pub use voxel::{mesh_voxel_iou, voxel_iou, voxelize, voxelize_in, Aabb, VoxelGrid};

use nalgebra::Vector3;

use crate::error::{Error, Result};

/// Facets whose world-space area falls below this are rejected (m²).
pub const DEGENERATE_AREA: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct TriangleMesh {
    pub vertices: Vec<Vector3<f64>>,
    pub facets: Vec<[usize; 3]>,
    pub scattering: Vec<f64>,
}

impl TriangleMesh {
    /// Builds a mesh and checks every invariant.
    pub fn new(vertices: Vec<Vector3<f64>>, facets: Vec<[usize; 3]>, scattering: Vec<f64>) -> Result<Self> {
        let mesh = Self {
            vertices,
            facets,
            scattering,
        };
        mesh.validate()?;
        Ok(mesh)
    }

    /// Mesh with every facet's scattering set to `1.0`.
    pub fn with_unit_scattering(vertices: Vec<Vector3<f64>>, facets: Vec<[usize; 3]>) -> Result<Self> {
        let n = facets.len();
        Self::new(vertices, facets, vec![1.0; n])
    }

    pub fn empty() -> Self {
        Self {
            vertices: Vec::new(),
            facets: Vec::new(),
            scattering: Vec::new(),
        }
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn facet_count(&self) -> usize {
        self.facets.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.scattering.len() != self.facets.len() {
            return Err(Error::InvalidMesh(format!(
                "{} scattering values for {} facets",
                self.scattering.len(),
                self.facets.len()
            )));
        }
        for (j, &s) in self.scattering.iter().enumerate() {
            if !(s >= 0.0) || !s.is_finite() {
                return Err(Error::InvalidMesh(format!(
                    "facet {j}: scattering {s} is not a finite non-negative value"
                )));
            }
        }
        for (i, v) in self.vertices.iter().enumerate() {
            if !v.iter().all(|c| c.is_finite()) {
                return Err(Error::InvalidMesh(format!("vertex {i} is not finite")));
            }
        }
        let nv = self.vertices.len();
        for (j, f) in self.facets.iter().enumerate() {
            if let Some(&bad) = f.iter().find(|&&i| i >= nv) {
                return Err(Error::InvalidMesh(format!(
                    "facet {j}: vertex index {bad} out of range ({nv} vertices)"
                )));
            }
            if f[0] == f[1] || f[1] == f[2] || f[0] == f[2] {
                return Err(Error::InvalidMesh(format!("facet {j}: repeated vertex index {:?}", f)));
            }
            let area = self.facet_area(j);
            if area < DEGENERATE_AREA {
                return Err(Error::InvalidMesh(format!("facet {j}: degenerate (area {area:e} m²)")));
            }
        }
        Ok(())
    }

    pub fn facet_vertices(&self, j: usize) -> [Vector3<f64>; 3] {
        let f = self.facets[j];
        [self.vertices[f[0]], self.vertices[f[1]], self.vertices[f[2]]]
    }

    pub fn facet_area(&self, j: usize) -> f64 {
        let [a, b, c] = self.facet_vertices(j);
        0.5 * (b - a).cross(&(c - a)).norm()
    }

    pub fn facet_normal(&self, j: usize) -> Vector3<f64> {
        let [a, b, c] = self.facet_vertices(j);
        (b - a).cross(&(c - a)).normalize()
    }

    /// Axis-aligned bounds of the vertex set, `None` for an empty mesh.
    pub fn bounds(&self) -> Option<Aabb> {
        Aabb::from_points(self.vertices.iter())
    }

    pub fn translated(&self, offset: Vector3<f64>) -> Self {
        let mut out = self.clone();
        for v in &mut out.vertices {
            *v += offset;
        }
        out
    }

    /// Appends `other`, reindexing its facets.
    pub fn merge(&mut self, other: &TriangleMesh) {
        let base = self.vertices.len();
        self.vertices.extend_from_slice(&other.vertices);
        self.facets
            .extend(other.facets.iter().map(|f| [f[0] + base, f[1] + base, f[2] + base]));
        self.scattering.extend_from_slice(&other.scattering);
    }

    /// True when every edge is shared by exactly two facets.
    pub fn is_watertight(&self) -> bool {
        MeshTopology::build(self).open_edge_count == 0 && !self.facets.is_empty()
    }
}
