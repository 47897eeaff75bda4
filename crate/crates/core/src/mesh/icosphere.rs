use std::collections::HashMap;

use nalgebra::Vector3;

use super::TriangleMesh;
use crate::error::{Error, Result};

pub const MAX_SUBDIVISIONS: u32 = 6;

/// Subdivided icosahedron centred at the origin with `20 * 4^subdivisions`
/// facets and outward winding.
pub fn icosphere(subdivisions: u32, radius: f64) -> Result<TriangleMesh> {
    if subdivisions > MAX_SUBDIVISIONS {
        return Err(Error::InvalidParameter(format!(
            "icosphere subdivisions {subdivisions} outside 0..={MAX_SUBDIVISIONS}"
        )));
    }
    if !(radius > 0.0) || !radius.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "icosphere radius must be positive, got {radius}"
        )));
    }

    let t = (1.0 + 5f64.sqrt()) / 2.0;
    let mut vertices: Vec<Vector3<f64>> = [
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
    ]
    .iter()
    .map(|p| Vector3::new(p[0], p[1], p[2]).normalize())
    .collect();

    let mut facets: Vec<[usize; 3]> = vec![
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
        let mut midpoints: HashMap<(usize, usize), usize> = HashMap::new();
        let mut midpoint = |a: usize, b: usize, verts: &mut Vec<Vector3<f64>>| -> usize {
            let key = if a < b { (a, b) } else { (b, a) };
            *midpoints.entry(key).or_insert_with(|| {
                verts.push(((verts[a] + verts[b]) * 0.5).normalize());
                verts.len() - 1
            })
        };
        let mut next = Vec::with_capacity(facets.len() * 4);
        for &[a, b, c] in &facets {
            let ab = midpoint(a, b, &mut vertices);
            let bc = midpoint(b, c, &mut vertices);
            let ca = midpoint(c, a, &mut vertices);
            next.push([a, ab, ca]);
            next.push([b, bc, ab]);
            next.push([c, ca, bc]);
            next.push([ab, bc, ca]);
        }
        facets = next;
    }

    for v in &mut vertices {
        *v *= radius;
    }
    TriangleMesh::with_unit_scattering(vertices, facets)
}
