//! Procedural test scenes: boxes, a flat-roofed building on a ground plane,
//! a tank-like cuboid with turret, and a cylinder-with-wings station.

use std::f64::consts::PI;

use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::TriangleMesh;

/// Closed axis-aligned box with outward winding and unit scattering.
pub fn box_mesh(center: Vector3<f64>, size: Vector3<f64>) -> TriangleMesh {
    let h = size / 2.0;
    let corner = |sx: f64, sy: f64, sz: f64| center + Vector3::new(sx * h.x, sy * h.y, sz * h.z);
    let vertices = vec![
        corner(-1.0, -1.0, -1.0),
        corner(1.0, -1.0, -1.0),
        corner(1.0, 1.0, -1.0),
        corner(-1.0, 1.0, -1.0),
        corner(-1.0, -1.0, 1.0),
        corner(1.0, -1.0, 1.0),
        corner(1.0, 1.0, 1.0),
        corner(-1.0, 1.0, 1.0),
    ];
    let facets = vec![
        [0, 2, 1],
        [0, 3, 2],
        [4, 5, 6],
        [4, 6, 7],
        [0, 1, 5],
        [0, 5, 4],
        [1, 2, 6],
        [1, 6, 5],
        [2, 3, 7],
        [2, 7, 6],
        [3, 0, 4],
        [3, 4, 7],
    ];
    TriangleMesh::with_unit_scattering(vertices, facets).expect("box with positive size")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BuildingPart {
    Ground,
    Wall,
    Roof,
}

/// A flat-roofed building standing on a square ground plane.
#[derive(Debug, Clone)]
pub struct BuildingScene {
    pub mesh: TriangleMesh,
    pub parts: Vec<BuildingPart>,
}

impl BuildingScene {
    /// Scattering vector with one value per part.
    pub fn textured(&self, ground: f64, wall: f64, roof: f64) -> Vec<f64> {
        self.parts
            .iter()
            .map(|p| match p {
                BuildingPart::Ground => ground,
                BuildingPart::Wall => wall,
                BuildingPart::Roof => roof,
            })
            .collect()
    }

    /// Indicator scattering selecting one part.
    pub fn indicator(&self, part: BuildingPart) -> Vec<f64> {
        self.parts.iter().map(|&p| (p == part) as u8 as f64).collect()
    }
}

/// World frame is y-up. The roof spans `width` along z (the ground-range
/// direction for a zero azimuth view), `length` along x, at height `height`.
/// The ground is a square of side `ground` centred on the origin.
pub fn building_scene(width: f64, height: f64, length: f64, ground: f64) -> BuildingScene {
    let g = ground / 2.0;
    let (hx, hz) = (length / 2.0, width / 2.0);
    let vertices = vec![
        // ground
        Vector3::new(-g, 0.0, -g),
        Vector3::new(g, 0.0, -g),
        Vector3::new(g, 0.0, g),
        Vector3::new(-g, 0.0, g),
        // building footprint
        Vector3::new(-hx, 0.0, -hz),
        Vector3::new(hx, 0.0, -hz),
        Vector3::new(hx, 0.0, hz),
        Vector3::new(-hx, 0.0, hz),
        // roof
        Vector3::new(-hx, height, -hz),
        Vector3::new(hx, height, -hz),
        Vector3::new(hx, height, hz),
        Vector3::new(-hx, height, hz),
    ];
    use BuildingPart::*;
    let facets_parts = [
        ([0, 2, 1], Ground),
        ([0, 3, 2], Ground),
        ([8, 10, 9], Roof),
        ([8, 11, 10], Roof),
        // walls: +z (front), -z (back), +x, -x
        ([7, 6, 10], Wall),
        ([7, 10, 11], Wall),
        ([5, 4, 8], Wall),
        ([5, 8, 9], Wall),
        ([6, 5, 9], Wall),
        ([6, 9, 10], Wall),
        ([4, 7, 11], Wall),
        ([4, 11, 8], Wall),
    ];
    let facets = facets_parts.iter().map(|(f, _)| *f).collect();
    let parts: Vec<BuildingPart> = facets_parts.iter().map(|(_, p)| *p).collect();
    let mesh = TriangleMesh::with_unit_scattering(vertices, facets).expect("valid building");
    BuildingScene { mesh, parts }
}

/// Tank-like target: hull, turret and barrel as three closed boxes that
/// touch but do not overlap. Roughly 2 m long, centred near the origin.
pub fn cuboid_with_turret() -> TriangleMesh {
    let mut mesh = box_mesh(Vector3::new(0.0, -0.15, 0.0), Vector3::new(1.6, 0.5, 1.0));
    mesh.merge(&box_mesh(Vector3::new(-0.1, 0.25, 0.0), Vector3::new(0.7, 0.3, 0.6)));
    mesh.merge(&box_mesh(Vector3::new(0.625, 0.25, 0.0), Vector3::new(0.75, 0.1, 0.1)));
    mesh
}

/// Space-station-like target: a capped cylinder along x with two flat
/// wing panels along z.
pub fn station() -> TriangleMesh {
    let segments = 16;
    let (radius, half_len) = (0.25, 0.8);
    let mut vertices = Vec::new();
    for &x in &[-half_len, half_len] {
        for s in 0..segments {
            let t = 2.0 * PI * s as f64 / segments as f64;
            vertices.push(Vector3::new(x, radius * t.cos(), radius * t.sin()));
        }
    }
    vertices.push(Vector3::new(-half_len, 0.0, 0.0));
    vertices.push(Vector3::new(half_len, 0.0, 0.0));
    let (c0, c1) = (2 * segments, 2 * segments + 1);
    let mut facets = Vec::new();
    for s in 0..segments {
        let n = (s + 1) % segments;
        facets.push([s, n, segments + n]);
        facets.push([s, segments + n, segments + s]);
        facets.push([c0, n, s]);
        facets.push([c1, segments + s, segments + n]);
    }
    let mut mesh = TriangleMesh::with_unit_scattering(vertices, facets).expect("valid cylinder");
    for side in [-1.0, 1.0] {
        mesh.merge(&box_mesh(
            Vector3::new(0.0, 0.0, side * 0.9),
            Vector3::new(0.45, 0.03, 1.2),
        ));
    }
    mesh
}

/// `count` independent triangles with centres uniform in the cube
/// `[-half_extent, half_extent]³` and vertices within `max_edge / 2` of the
/// centre. Triangles thinner than a tenth of `max_edge²` are redrawn.
pub fn triangle_soup(count: usize, half_extent: f64, max_edge: f64, seed: u64) -> TriangleMesh {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut vertices = Vec::with_capacity(3 * count);
    let mut facets = Vec::with_capacity(count);
    let coord = |rng: &mut ChaCha8Rng, r: f64| rng.random_range(-r..r);
    while facets.len() < count {
        let c = Vector3::new(
            coord(&mut rng, half_extent),
            coord(&mut rng, half_extent),
            coord(&mut rng, half_extent),
        );
        let tri: [Vector3<f64>; 3] = std::array::from_fn(|_| {
            c + Vector3::new(
                coord(&mut rng, max_edge / 2.0),
                coord(&mut rng, max_edge / 2.0),
                coord(&mut rng, max_edge / 2.0),
            )
        });
        if (tri[1] - tri[0]).cross(&(tri[2] - tri[0])).norm() < 0.1 * max_edge * max_edge {
            continue;
        }
        let base = vertices.len();
        vertices.extend(tri);
        facets.push([base, base + 1, base + 2]);
    }
    TriangleMesh::with_unit_scattering(vertices, facets).expect("non-degenerate soup")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::MeshTopology;

    #[test]
    fn boxes_are_closed_and_outward() {
        let b = box_mesh(Vector3::new(1.0, 2.0, 3.0), Vector3::new(2.0, 1.0, 0.5));
        assert!(b.is_watertight());
        for j in 0..b.facet_count() {
            let [p, q, r] = b.facet_vertices(j);
            let c = (p + q + r) / 3.0 - Vector3::new(1.0, 2.0, 3.0);
            assert!(b.facet_normal(j).dot(&c) > 0.0, "facet {j} points inward");
        }
    }

    #[test]
    fn composite_fixtures_are_watertight() {
        assert!(cuboid_with_turret().is_watertight());
        assert!(station().is_watertight());
        let topo = MeshTopology::build(&station());
        assert_eq!(topo.open_edge_count, 0);
    }

    #[test]
    fn soup_is_seeded() {
        let a = triangle_soup(20, 1.0, 0.3, 4);
        assert_eq!(a.facet_count(), 20);
        assert_eq!(a, triangle_soup(20, 1.0, 0.3, 4));
        assert_ne!(a, triangle_soup(20, 1.0, 0.3, 5));
    }

    #[test]
    fn building_parts_line_up_with_facets() {
        let b = building_scene(2.0, 1.0, 3.0, 10.0);
        assert_eq!(b.parts.len(), b.mesh.facet_count());
        let s = b.textured(0.1, 0.5, 1.0);
        assert_eq!(s.iter().filter(|&&x| x == 1.0).count(), 2);
        assert_eq!(s.iter().filter(|&&x| x == 0.5).count(), 8);
    }
}
