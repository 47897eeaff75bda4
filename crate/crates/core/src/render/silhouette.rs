//! Silhouette aggregation `1 - Π_j (1 - δ_j)` on the mapping plane and its
//! backward pass. The image is split into fixed square tiles; within a tile
//! facets are processed in index order, so results do not depend on the
//! number of worker threads.

use nalgebra::{Vector2, Vector3};
use rayon::prelude::*;

use super::{ImageKind, PreparedScene, RenderedImage};
use crate::error::Result;
use crate::geometry::{GridSpec, RadarView};
use crate::mesh::TriangleMesh;
use crate::raster::RenderParams;

/// Tile side in pixels.
const TILE: usize = 16;

#[derive(Debug, Clone, Copy)]
struct Tile {
    r0: usize,
    r1: usize,
    c0: usize,
    c1: usize,
}

impl Tile {
    fn width(&self) -> usize {
        self.c1 - self.c0
    }

    fn len(&self) -> usize {
        (self.r1 - self.r0) * self.width()
    }
}

fn tiles(grid: &GridSpec) -> Vec<Tile> {
    let mut out = Vec::new();
    for r0 in (0..grid.nz).step_by(TILE) {
        for c0 in (0..grid.nx).step_by(TILE) {
            out.push(Tile {
                r0,
                r1: (r0 + TILE).min(grid.nz),
                c0,
                c1: (c0 + TILE).min(grid.nx),
            });
        }
    }
    out
}

/// Facets overlapping each tile, in facet order.
fn bin_facets(scene: &PreparedScene, grid: &GridSpec) -> Vec<Vec<u32>> {
    let tiles_x = grid.nx.div_ceil(TILE);
    let tiles_y = grid.nz.div_ceil(TILE);
    let mut bins = vec![Vec::new(); tiles_x * tiles_y];
    for (j, b) in scene.map_box.iter().enumerate() {
        let Some(b) = b else { continue };
        for ty in b.r0 / TILE..=b.r1 / TILE {
            for tx in b.c0 / TILE..=b.c1 / TILE {
                bins[ty * tiles_x + tx].push(j as u32);
            }
        }
    }
    bins
}

/// Visits every (pixel, facet) pair of a tile with nonzero coverage, in
/// facet-major order. `pix` is the pixel index within the tile.
fn for_each_coverage(
    scene: &PreparedScene,
    tile: &Tile,
    bin: &[u32],
    sigma: f64,
    mut visit: impl FnMut(usize, usize, &crate::raster::Coverage),
) {
    for (slot, &j) in bin.iter().enumerate() {
        let j = j as usize;
        let b = scene.map_box[j].expect("binned facets have a footprint");
        let (r0, r1) = (b.r0.max(tile.r0), b.r1.min(tile.r1 - 1));
        let (c0, c1) = (b.c0.max(tile.c0), b.c1.min(tile.c1 - 1));
        for k in r0..=r1 {
            for l in c0..=c1 {
                let p = Vector2::new(l as f64 + 0.5, k as f64 + 0.5);
                let cov = scene.map[j].coverage(&p, sigma);
                if cov.delta > 0.0 {
                    visit((k - tile.r0) * tile.width() + (l - tile.c0), slot, &cov);
                }
            }
        }
    }
}

/// Per-pixel product of the nonzero complements and count of exact zeros.
fn tile_products(scene: &PreparedScene, tile: &Tile, bin: &[u32], sigma: f64) -> (Vec<f64>, Vec<u32>) {
    let mut prod = vec![1.0; tile.len()];
    let mut zeros = vec![0u32; tile.len()];
    for_each_coverage(scene, tile, bin, sigma, |pix, _, cov| {
        if cov.complement == 0.0 {
            zeros[pix] += 1;
        } else {
            prod[pix] *= cov.complement;
        }
    });
    (prod, zeros)
}

/// Forward state kept for the backward pass: facet bins and per-tile
/// complement products.
pub(crate) struct SilhouetteForward {
    tiles: Vec<Tile>,
    bins: Vec<Vec<u32>>,
    products: Vec<(Vec<f64>, Vec<u32>)>,
    pub image: RenderedImage,
}

pub(crate) fn silhouette_forward(scene: &PreparedScene, grid: &GridSpec, sigma: f64) -> SilhouetteForward {
    let tiles = tiles(grid);
    let bins = bin_facets(scene, grid);
    let products: Vec<(Vec<f64>, Vec<u32>)> = tiles
        .par_iter()
        .zip(bins.par_iter())
        .map(|(tile, bin)| tile_products(scene, tile, bin, sigma))
        .collect();
    let mut image = RenderedImage::zeros(ImageKind::Silhouette, grid);
    for (tile, (prod, zeros)) in tiles.iter().zip(&products) {
        for k in tile.r0..tile.r1 {
            for l in tile.c0..tile.c1 {
                let pix = (k - tile.r0) * tile.width() + (l - tile.c0);
                image.data[k * grid.nx + l] = if zeros[pix] > 0 { 1.0 } else { 1.0 - prod[pix] };
            }
        }
    }
    SilhouetteForward {
        tiles,
        bins,
        products,
        image,
    }
}

/// Soft silhouette of the mesh on the mapping plane.
pub fn render_silhouette(
    mesh: &TriangleMesh,
    view: &RadarView,
    grid: &GridSpec,
    params: &RenderParams,
) -> Result<RenderedImage> {
    let scene = PreparedScene::new(mesh, view, grid, params)?;
    Ok(silhouette_forward(&scene, grid, params.sigma).image)
}

/// `∂L/∂v_r` for every vertex in the radar frame, given `∂L/∂I_sil`
/// (row-major, `N_z × N_x`).
pub(crate) fn silhouette_backward_radar(
    scene: &PreparedScene,
    grid: &GridSpec,
    sigma: f64,
    upstream: &[f64],
) -> Vec<Vector3<f64>> {
    let forward = silhouette_forward(scene, grid, sigma);
    silhouette_backward_with(scene, grid, sigma, &forward, upstream)
}

/// As [`silhouette_backward_radar`], reusing the products of a forward pass
/// over the same scene.
pub(crate) fn silhouette_backward_with(
    scene: &PreparedScene,
    grid: &GridSpec,
    sigma: f64,
    forward: &SilhouetteForward,
    upstream: &[f64],
) -> Vec<Vector3<f64>> {
    let per_tile: Vec<Vec<[Vector2<f64>; 3]>> = forward
        .tiles
        .par_iter()
        .zip(forward.bins.par_iter())
        .zip(forward.products.par_iter())
        .map(|((tile, bin), (prod, zeros))| {
            let mut grads = vec![[Vector2::zeros(); 3]; bin.len()];
            let up = |pix: usize| {
                let k = tile.r0 + pix / tile.width();
                let l = tile.c0 + pix % tile.width();
                upstream[k * grid.nx + l]
            };
            for_each_coverage(scene, tile, bin, sigma, |pix, slot, cov| {
                let g = up(pix);
                if g == 0.0 {
                    return;
                }
                // ∂I/∂δ_j = Π_{k≠j} (1 - δ_k)
                let others = match (zeros[pix], cov.complement == 0.0) {
                    (0, _) => prod[pix] / cov.complement,
                    (1, true) => prod[pix],
                    _ => 0.0,
                };
                let s = g * others;
                if s != 0.0 {
                    for n in 0..3 {
                        grads[slot][n] += cov.grad[n] * s;
                    }
                }
            });
            grads
        })
        .collect();

    let mut screen_grads = vec![[Vector2::zeros(); 3]; scene.map.len()];
    for (bin, grads) in forward.bins.iter().zip(per_tile) {
        for (&j, g) in bin.iter().zip(grads) {
            for n in 0..3 {
                screen_grads[j as usize][n] += g[n];
            }
        }
    }
    screen_to_radar(scene, grid, &screen_grads)
}

/// Chains mapping-plane vertex gradients `(∂/∂u, ∂/∂w)` back to radar-frame
/// vertex positions. `u = x/R_az + N_x/2`, `w = (√(y²+z²) - f)/R_z + N_z/2`.
fn screen_to_radar(scene: &PreparedScene, grid: &GridSpec, screen_grads: &[[Vector2<f64>; 3]]) -> Vec<Vector3<f64>> {
    let mut out = vec![Vector3::zeros(); scene.radar_vertices.len()];
    for (facet, g) in scene.facets.iter().zip(screen_grads) {
        for n in 0..3 {
            if g[n] == Vector2::zeros() {
                continue;
            }
            let v = scene.radar_vertices[facet[n]];
            let rho = (v.y * v.y + v.z * v.z).sqrt();
            out[facet[n]] += Vector3::new(
                g[n].x / grid.raz,
                g[n].y * v.y / (rho * grid.rz),
                g[n].y * v.z / (rho * grid.rz),
            );
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tiles_cover_grid_once() {
        let grid = GridSpec {
            nx: 37,
            nz: 20,
            ny: 20,
            rz: 1.0,
            ry: 1.0,
            raz: 1.0,
        };
        let t = tiles(&grid);
        assert_eq!(t.iter().map(Tile::len).sum::<usize>(), 37 * 20);
    }
}
