//! Shared fixtures for unit tests.

use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::geometry::{grid_from_view, GridSpec, RadarView};
use crate::mesh::{icosphere, TriangleMesh};

/// Square grid of `n × n` cells covering `extent` metres of slant range.
pub fn grid_for(view: &RadarView, n: usize, extent: f64) -> GridSpec {
    grid_from_view(n, n, extent / n as f64, view).unwrap()
}

/// Builds a mesh from radar-frame vertices for a view without pose.
pub fn radar_mesh(view: &RadarView, radar: &[Vector3<f64>], facets: Vec<[usize; 3]>) -> TriangleMesh {
    let vertices = radar.iter().map(|v| view.radar_to_world(v)).collect();
    TriangleMesh::with_unit_scattering(vertices, facets).unwrap()
}

/// Radar-frame point at `y = 0` landing on mapping-plane coordinates
/// `(u, w)` (columns, rows).
pub fn at_mapping(view: &RadarView, grid: &GridSpec, u: f64, w: f64) -> Vector3<f64> {
    Vector3::new(
        (u - grid.nx as f64 / 2.0) * grid.raz,
        0.0,
        view.reference_range + (w - grid.nz as f64 / 2.0) * grid.rz,
    )
}

/// Icosphere with every vertex pushed radially by up to `amount` of the
/// radius, so that no two facets are related by symmetry.
pub fn jittered_sphere(subdivisions: u32, radius: f64, amount: f64, seed: u64) -> TriangleMesh {
    let mut mesh = icosphere(subdivisions, radius).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let amount = amount.max(f64::MIN_POSITIVE);
    for v in &mut mesh.vertices {
        let s = 1.0 + rng.random_range(-amount..amount);
        *v *= s;
        *v += Vector3::new(
            rng.random_range(-amount..amount),
            rng.random_range(-amount..amount),
            rng.random_range(-amount..amount),
        ) * radius;
    }
    for s in &mut mesh.scattering {
        *s = rng.random_range(0.2..1.0);
    }
    mesh
}

pub fn random_image(len: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..len).map(|_| rng.random_range(-1.0..1.0)).collect()
}
