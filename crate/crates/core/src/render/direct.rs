//! Reference SAR renderer that materialises every shadowing weight before
//! aggregating. Memory grows as `N_y · N_x · N_f`; intended for checking the
//! streamed renderer on small scenes.

use nalgebra::Vector2;

use super::{energy_transfer, range_offset, shadowing_weights, ImageKind, PreparedScene, RenderedImage};
use crate::error::Result;
use crate::geometry::{GridSpec, RadarView};
use crate::mesh::TriangleMesh;
use crate::raster::{clip_barycentric, normalized_depth_unchecked, RenderParams};

/// Shadowing weights and hit depths for every ray and facet, without
/// culling. Both arrays are indexed `(i * N_x + l) * N_f + j`.
pub fn shadowing_weights_direct(
    mesh: &TriangleMesh,
    view: &RadarView,
    grid: &GridSpec,
    params: &RenderParams,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let scene = PreparedScene::new(mesh, view, grid, params)?;
    let nf = mesh.facet_count();
    let mut rho = vec![0.0; grid.ny * grid.nx * nf];
    let mut depth = vec![0.0; grid.ny * grid.nx * nf];
    let mut deltas = vec![0.0; nf];
    let mut zs = vec![0.0; nf];
    for i in 0..grid.ny {
        for l in 0..grid.nx {
            let p = Vector2::new(l as f64 + 0.5, i as f64 + 0.5);
            let base = (i * grid.nx + l) * nf;
            for (j, facet) in scene.proj.iter().enumerate() {
                deltas[j] = facet.probability(&p, params.sigma);
                zs[j] = 0.0;
                if let Some(b) = facet.barycentric(&p) {
                    let (z, d) = normalized_depth_unchecked(&facet.depths, clip_barycentric(b), view.near, view.far);
                    zs[j] = z;
                    depth[base + j] = d;
                }
            }
            let r = shadowing_weights(&deltas, &zs, params.gamma);
            rho[base..base + nf].copy_from_slice(&r);
        }
    }
    Ok((rho, depth))
}

/// `I(k,l) = Σ_j δ_j^{(k,l)} S_j Σ_i ω_j^{(k,l)|(i,l)}` evaluated over all
/// rays, rows and facets with no truncation.
pub fn render_sar_direct(
    mesh: &TriangleMesh,
    view: &RadarView,
    grid: &GridSpec,
    params: &RenderParams,
) -> Result<RenderedImage> {
    let scene = PreparedScene::new(mesh, view, grid, params)?;
    let (rho, depth) = shadowing_weights_direct(mesh, view, grid, params)?;
    let nf = mesh.facet_count();
    let mut image = RenderedImage::zeros(ImageKind::Sar, grid);
    for k in 0..grid.nz {
        let z_cell = grid.row_center(k);
        for l in 0..grid.nx {
            let p = Vector2::new(l as f64 + 0.5, k as f64 + 0.5);
            let mut acc = 0.0;
            for j in 0..nf {
                let dm = scene.map[j].probability(&p, params.sigma);
                if dm == 0.0 {
                    continue;
                }
                let mut omega = 0.0;
                for i in 0..grid.ny {
                    let idx = (i * grid.nx + l) * nf + j;
                    let d_z = range_offset(depth[idx], z_cell, view.reference_range, grid.rz);
                    omega += energy_transfer(rho[idx], d_z, params.sigma_g);
                }
                acc += dm * mesh.scattering[j] * omega;
            }
            image.data[k * grid.nx + l] = acc;
        }
    }
    Ok(image)
}
