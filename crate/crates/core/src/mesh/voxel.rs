//! Occupancy voxelization by ray parity and voxel IoU.

use std::fmt::Write as _;

use nalgebra::Vector3;
use rayon::prelude::*;

use super::TriangleMesh;
use crate::error::{Error, Result};

/// Fractional padding added on each side of a tight bounding box.
pub const BOUNDS_PADDING: f64 = 0.02;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aabb {
    pub min: Vector3<f64>,
    pub max: Vector3<f64>,
}

impl Aabb {
    pub fn new(min: Vector3<f64>, max: Vector3<f64>) -> Self {
        Self { min, max }
    }

    pub fn from_points<'a>(points: impl Iterator<Item = &'a Vector3<f64>>) -> Option<Self> {
        let mut it = points.peekable();
        let first = **it.peek()?;
        let (min, max) = it.fold((first, first), |(lo, hi), p| (lo.inf(p), hi.sup(p)));
        Some(Self { min, max })
    }

    pub fn union(&self, other: &Aabb) -> Aabb {
        Aabb::new(self.min.inf(&other.min), self.max.sup(&other.max))
    }

    pub fn extent(&self) -> Vector3<f64> {
        self.max - self.min
    }

    /// Grows every side by `fraction` of that axis' extent. Flat axes borrow
    /// the largest extent so the box never has zero thickness.
    pub fn padded(&self, fraction: f64) -> Aabb {
        let ext = self.extent();
        let largest = ext.max().max(1e-9);
        let pad = ext.map(|e| if e > 0.0 { e * fraction } else { largest * fraction });
        Aabb::new(self.min - pad, self.max + pad)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VoxelGrid {
    pub resolution: usize,
    /// `x + res * (y + res * z)` ordering.
    pub occupancy: Vec<bool>,
    pub bounds: Aabb,
}

impl VoxelGrid {
    pub fn index(&self, ix: usize, iy: usize, iz: usize) -> usize {
        ix + self.resolution * (iy + self.resolution * iz)
    }

    pub fn get(&self, ix: usize, iy: usize, iz: usize) -> bool {
        self.occupancy[self.index(ix, iy, iz)]
    }

    pub fn occupied_count(&self) -> usize {
        self.occupancy.iter().filter(|&&b| b).count()
    }

    pub fn cell_size(&self) -> Vector3<f64> {
        self.bounds.extent() / self.resolution as f64
    }

    pub fn cell_center(&self, ix: usize, iy: usize, iz: usize) -> Vector3<f64> {
        let c = self.cell_size();
        self.bounds.min
            + Vector3::new(
                (ix as f64 + 0.5) * c.x,
                (iy as f64 + 0.5) * c.y,
                (iz as f64 + 0.5) * c.z,
            )
    }

    /// Text dump: a `VOX` header with resolution and bounds, then run lengths
    /// alternating empty/occupied, starting with an empty run.
    pub fn to_vox_string(&self) -> String {
        let b = &self.bounds;
        let mut out = format!(
            "VOX {} {:?} {:?} {:?} {:?} {:?} {:?}\n",
            self.resolution, b.min.x, b.min.y, b.min.z, b.max.x, b.max.y, b.max.z
        );
        let mut current = false;
        let mut run = 0usize;
        let mut runs = Vec::new();
        for &o in &self.occupancy {
            if o == current {
                run += 1;
            } else {
                runs.push(run);
                current = o;
                run = 1;
            }
        }
        runs.push(run);
        for (i, r) in runs.iter().enumerate() {
            if i > 0 {
                out.push(' ');
            }
            write!(out, "{r}").unwrap();
        }
        out.push('\n');
        out
    }

    pub fn from_vox_str(text: &str) -> Result<VoxelGrid> {
        let bad = |m: &str| Error::Config(format!("vox: {m}"));
        let mut lines = text.lines();
        let header: Vec<&str> = lines
            .next()
            .ok_or_else(|| bad("empty file"))?
            .split_whitespace()
            .collect();
        if header.len() != 8 || header[0] != "VOX" {
            return Err(bad("malformed header"));
        }
        let resolution: usize = header[1].parse().map_err(|_| bad("bad resolution"))?;
        let nums: Vec<f64> = header[2..]
            .iter()
            .map(|t| t.parse::<f64>().map_err(|_| bad("bad bound")))
            .collect::<Result<_>>()?;
        let bounds = Aabb::new(
            Vector3::new(nums[0], nums[1], nums[2]),
            Vector3::new(nums[3], nums[4], nums[5]),
        );
        let mut occupancy = Vec::with_capacity(resolution.pow(3));
        let mut value = false;
        for tok in lines.next().unwrap_or("").split_whitespace() {
            let n: usize = tok.parse().map_err(|_| bad("bad run length"))?;
            occupancy.extend(std::iter::repeat_n(value, n));
            value = !value;
        }
        if occupancy.len() != resolution.pow(3) {
            return Err(bad("run lengths do not cover the grid"));
        }
        Ok(VoxelGrid {
            resolution,
            occupancy,
            bounds,
        })
    }
}

/// Voxelizes the interior of a watertight mesh inside its own padded bounds.
pub fn voxelize(mesh: &TriangleMesh, resolution: usize) -> Result<VoxelGrid> {
    let bounds = mesh
        .bounds()
        .ok_or_else(|| Error::InvalidMesh("cannot voxelize an empty mesh".into()))?
        .padded(BOUNDS_PADDING);
    voxelize_in(mesh, bounds, resolution)
}

/// A cell is occupied iff its centre is inside the mesh, decided by the
/// parity of crossings along a +X ray.
pub fn voxelize_in(mesh: &TriangleMesh, bounds: Aabb, resolution: usize) -> Result<VoxelGrid> {
    if resolution < 2 {
        return Err(Error::InvalidParameter(format!(
            "voxel resolution must be at least 2, got {resolution}"
        )));
    }
    let topo = super::MeshTopology::build(mesh);
    if topo.open_edge_count > 0 || mesh.facets.is_empty() {
        return Err(Error::NotWatertight {
            open_edges: topo.open_edge_count,
        });
    }

    let mut grid = VoxelGrid {
        resolution,
        occupancy: vec![false; resolution.pow(3)],
        bounds,
    };
    let cell = grid.cell_size();
    let tris: Vec<[Vector3<f64>; 3]> = (0..mesh.facet_count()).map(|j| mesh.facet_vertices(j)).collect();

    let rows: Vec<Vec<bool>> = (0..resolution * resolution)
        .into_par_iter()
        .map(|row| {
            let iy = row % resolution;
            let iz = row / resolution;
            let y = bounds.min.y + (iy as f64 + 0.5) * cell.y;
            let z = bounds.min.z + (iz as f64 + 0.5) * cell.z;
            let crossings = ray_crossings(&tris, y, z, cell.y.min(cell.z));
            (0..resolution)
                .map(|ix| {
                    let x = bounds.min.x + (ix as f64 + 0.5) * cell.x;
                    crossings.iter().filter(|&&c| c < x).count() % 2 == 1
                })
                .collect()
        })
        .collect();

    for (row, occ) in rows.into_iter().enumerate() {
        let base = row * resolution;
        grid.occupancy[base..base + resolution].copy_from_slice(&occ);
    }
    Ok(grid)
}

/// Sorted x positions where the +X line through (y, z) crosses the surface.
/// Lines grazing an edge or vertex are re-cast from a slightly jittered
/// origin so every crossing is counted exactly once.
fn ray_crossings(tris: &[[Vector3<f64>; 3]], y: f64, z: f64, scale: f64) -> Vec<f64> {
    const JITTER: [(f64, f64); 8] = [
        (0.0, 0.0),
        (1.3e-7, 0.7e-7),
        (-0.9e-7, 1.1e-7),
        (0.6e-7, -1.7e-7),
        (2.3e-7, 1.9e-7),
        (-2.9e-7, -0.4e-7),
        (3.7e-7, -3.1e-7),
        (-4.1e-7, 2.7e-7),
    ];
    'attempt: for (jy, jz) in JITTER {
        let py = y + jy * scale;
        let pz = z + jz * scale;
        let mut hits = Vec::new();
        for t in tris {
            // edge functions of the triangle projected on the YZ plane
            let e = |a: &Vector3<f64>, b: &Vector3<f64>| (b.y - a.y) * (pz - a.z) - (b.z - a.z) * (py - a.y);
            let w0 = e(&t[1], &t[2]);
            let w1 = e(&t[2], &t[0]);
            let w2 = e(&t[0], &t[1]);
            let area = w0 + w1 + w2;
            let tol = 1e-12 * scale * scale;
            if area.abs() <= tol {
                continue; // parallel to the ray
            }
            let inside = if area > 0.0 {
                w0 >= 0.0 && w1 >= 0.0 && w2 >= 0.0
            } else {
                w0 <= 0.0 && w1 <= 0.0 && w2 <= 0.0
            };
            if !inside {
                continue;
            }
            if w0.abs() <= tol || w1.abs() <= tol || w2.abs() <= tol {
                continue 'attempt;
            }
            let x = (w0 * t[0].x + w1 * t[1].x + w2 * t[2].x) / area;
            hits.push(x);
        }
        hits.sort_by(f64::total_cmp);
        return hits;
    }
    Vec::new()
}

/// Voxel IoU of two meshes sampled on one grid spanning both, padded like
/// [`voxelize`].
pub fn mesh_voxel_iou(a: &TriangleMesh, b: &TriangleMesh, resolution: usize) -> Result<f64> {
    let empty = || Error::InvalidMesh("cannot voxelize an empty mesh".into());
    let bounds = a
        .bounds()
        .ok_or_else(empty)?
        .union(&b.bounds().ok_or_else(empty)?)
        .padded(BOUNDS_PADDING);
    voxel_iou(
        &voxelize_in(a, bounds, resolution)?,
        &voxelize_in(b, bounds, resolution)?,
    )
}

/// Intersection over union of two occupancy grids with identical layout.
/// Two empty grids score 1.
pub fn voxel_iou(a: &VoxelGrid, b: &VoxelGrid) -> Result<f64> {
    if a.resolution != b.resolution {
        return Err(Error::ShapeMismatch(format!(
            "voxel resolutions {} and {}",
            a.resolution, b.resolution
        )));
    }
    let same_bounds =
        (a.bounds.min - b.bounds.min).abs().max() <= 1e-12 && (a.bounds.max - b.bounds.max).abs().max() <= 1e-12;
    if !same_bounds {
        return Err(Error::ShapeMismatch("voxel grids have different bounds".into()));
    }
    let (mut inter, mut union) = (0usize, 0usize);
    for (&x, &y) in a.occupancy.iter().zip(&b.occupancy) {
        inter += (x && y) as usize;
        union += (x || y) as usize;
    }
    if union == 0 {
        return Ok(1.0);
    }
    Ok(inter as f64 / union as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{box_mesh, icosphere};
    use proptest::prelude::*;

    fn unit_cube() -> TriangleMesh {
        box_mesh(Vector3::new(0.5, 0.5, 0.5), Vector3::new(1.0, 1.0, 1.0))
    }

    #[test]
    fn mesh_iou_on_shared_grid() {
        let c = unit_cube();
        assert_eq!(mesh_voxel_iou(&c, &c, 32).unwrap(), 1.0);
        let shifted = c.translated(Vector3::new(0.5, 0.0, 0.0));
        let iou = mesh_voxel_iou(&c, &shifted, 32).unwrap();
        assert!((iou - 1.0 / 3.0).abs() < 0.03, "{iou}");
        assert!(mesh_voxel_iou(&c, &TriangleMesh::empty(), 32).is_err());
    }

    #[test]
    fn cube_fills_exact_bounds() {
        let bounds = Aabb::new(Vector3::zeros(), Vector3::new(1.0, 1.0, 1.0));
        let g = voxelize_in(&unit_cube(), bounds, 4).unwrap();
        assert_eq!(g.occupied_count(), 64);
    }

    #[test]
    fn sphere_fill_fraction_near_pi_over_six() {
        let r = 1.0;
        let s = icosphere(4, r).unwrap();
        let bounds = Aabb::new(Vector3::repeat(-r), Vector3::repeat(r));
        let g = voxelize_in(&s, bounds, 32).unwrap();
        let frac = g.occupied_count() as f64 / 32f64.powi(3);
        let expected = std::f64::consts::PI / 6.0;
        assert!((frac - expected).abs() / expected < 0.10, "fraction {frac}");
    }

    #[test]
    fn empty_region_cells_are_unoccupied() {
        let bounds = Aabb::new(Vector3::zeros(), Vector3::new(4.0, 1.0, 1.0));
        let g = voxelize_in(&unit_cube(), bounds, 4).unwrap();
        // cube occupies only x in [0, 1]: first column of cells
        for iz in 0..4 {
            for iy in 0..4 {
                assert!(g.get(0, iy, iz));
                for ix in 1..4 {
                    assert!(!g.get(ix, iy, iz));
                }
            }
        }
    }

    #[test]
    fn open_mesh_is_rejected() {
        let mut cube = unit_cube();
        cube.facets.pop();
        cube.scattering.pop();
        assert!(matches!(voxelize(&cube, 8), Err(Error::NotWatertight { .. })));
    }

    #[test]
    fn half_overlapping_cubes_score_one_third() {
        let a = unit_cube();
        let b = a.translated(Vector3::new(0.5, 0.0, 0.0));
        let bounds = Aabb::new(Vector3::zeros(), Vector3::new(1.5, 1.0, 1.0));
        let ga = voxelize_in(&a, bounds, 6).unwrap();
        let gb = voxelize_in(&b, bounds, 6).unwrap();
        // direct count: each cube covers 4 of 6 x-slabs, overlapping in 2
        let inter = ga
            .occupancy
            .iter()
            .zip(&gb.occupancy)
            .filter(|(x, y)| **x && **y)
            .count();
        assert_eq!(inter, 2 * 36);
        assert!((voxel_iou(&ga, &gb).unwrap() - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn identical_and_disjoint_and_empty() {
        let bounds = Aabb::new(Vector3::zeros(), Vector3::new(3.0, 1.0, 1.0));
        let a = voxelize_in(&unit_cube(), bounds, 6).unwrap();
        let b = voxelize_in(&unit_cube().translated(Vector3::new(2.0, 0.0, 0.0)), bounds, 6).unwrap();
        assert_eq!(voxel_iou(&a, &a).unwrap(), 1.0);
        assert_eq!(voxel_iou(&a, &b).unwrap(), 0.0);
        let empty = VoxelGrid {
            resolution: 6,
            occupancy: vec![false; 216],
            bounds,
        };
        assert_eq!(voxel_iou(&empty, &empty).unwrap(), 1.0);
    }

    #[test]
    fn mismatched_grids_are_rejected() {
        let bounds = Aabb::new(Vector3::zeros(), Vector3::repeat(1.0));
        let a = voxelize_in(&unit_cube(), bounds, 4).unwrap();
        let b = voxelize_in(&unit_cube(), bounds, 5).unwrap();
        assert!(voxel_iou(&a, &b).is_err());
        let c = voxelize_in(&unit_cube(), bounds.padded(0.1), 4).unwrap();
        assert!(voxel_iou(&a, &c).is_err());
    }

    #[test]
    fn vox_text_round_trip() {
        let g = voxelize(&icosphere(2, 1.0).unwrap(), 8).unwrap();
        let back = VoxelGrid::from_vox_str(&g.to_vox_string()).unwrap();
        assert_eq!(back, g);
    }

    proptest! {
        #[test]
        fn iou_symmetric_reflexive_bounded(
            a in proptest::collection::vec(any::<bool>(), 27),
            b in proptest::collection::vec(any::<bool>(), 27),
        ) {
            let bounds = Aabb::new(Vector3::zeros(), Vector3::repeat(1.0));
            let ga = VoxelGrid { resolution: 3, occupancy: a, bounds };
            let gb = VoxelGrid { resolution: 3, occupancy: b, bounds };
            let ab = voxel_iou(&ga, &gb).unwrap();
            prop_assert_eq!(ab, voxel_iou(&gb, &ga).unwrap());
            prop_assert!((0.0..=1.0).contains(&ab));
            prop_assert_eq!(voxel_iou(&ga, &ga).unwrap(), 1.0);
        }
    }
}
