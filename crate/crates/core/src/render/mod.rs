//! Forward rendering of SAR intensity and silhouette images.
//!
//! Rays are cast along the radar line of sight from the projection plane
//! (radar `x`, `y`) and resolve occlusion with depth-weighted soft
//! probabilities. Each ray's energy is spread along slant range with a
//! Gaussian and collected in the mapping plane (radar `x`, slant offset `ẑ`)
//! where the facet probabilities after the slant transform gate it.

mod direct;
mod sar;
mod silhouette;

pub use direct::{render_sar_direct, shadowing_weights_direct};
pub use sar::{render_sar, render_sar_with_stats, ForwardCache, RenderStats};
pub use silhouette::render_silhouette;
pub(crate) use silhouette::{silhouette_backward_radar, silhouette_backward_with, silhouette_forward};

pub(crate) use sar::{stream_column, ColumnScratch, StreamCtx};

use std::hash::{DefaultHasher, Hash, Hasher};

use nalgebra::{Vector2, Vector3};

use crate::error::{Error, Result};
use crate::geometry::{GridSpec, PoseTransform, RadarView};
use crate::mesh::TriangleMesh;
use crate::raster::{FacetScreen2D, RenderParams};

/// Rays whose raw normaliser `Σ δ·exp(z/γ)` falls below this carry no energy.
pub const RAY_EPSILON: f64 = 1e-12;

/// The Gaussian range spread is truncated at this many standard deviations.
pub const GAUSS_WINDOW_SIGMAS: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ImageKind {
    Sar,
    Silhouette,
}

/// `height` (slant rows, `N_z`) × `width` (azimuth columns, `N_x`) image,
/// stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct RenderedImage {
    pub kind: ImageKind,
    pub width: usize,
    pub height: usize,
    pub data: Vec<f64>,
}

impl RenderedImage {
    pub fn zeros(kind: ImageKind, grid: &GridSpec) -> Self {
        Self {
            kind,
            width: grid.nx,
            height: grid.nz,
            data: vec![0.0; grid.nx * grid.nz],
        }
    }

    pub fn from_data(kind: ImageKind, width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != width * height {
            return Err(Error::ShapeMismatch(format!(
                "{} values for a {width}x{height} image",
                data.len()
            )));
        }
        Ok(Self {
            kind,
            width,
            height,
            data,
        })
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.width + col]
    }

    pub fn sum(&self) -> f64 {
        self.data.iter().sum()
    }

    pub fn max(&self) -> f64 {
        self.data.iter().copied().fold(0.0, f64::max)
    }

    pub fn check_shape(&self, grid: &GridSpec) -> Result<()> {
        if self.width != grid.nx || self.height != grid.nz {
            return Err(Error::ShapeMismatch(format!(
                "image is {}x{}, grid is {}x{}",
                self.width, self.height, grid.nx, grid.nz
            )));
        }
        Ok(())
    }
}

/// `ρ_j = δ_j e^{z_j/γ} / Σ_k δ_k e^{z_k/γ}`, evaluated with the largest
/// depth subtracted. Returns all zeros when the raw normaliser is below
/// [`RAY_EPSILON`].
pub fn shadowing_weights(deltas: &[f64], depths: &[f64], gamma: f64) -> Vec<f64> {
    assert_eq!(deltas.len(), depths.len());
    let zmax = deltas
        .iter()
        .zip(depths)
        .filter(|(d, _)| **d > 0.0)
        .map(|(_, z)| *z)
        .fold(f64::NEG_INFINITY, f64::max);
    if zmax == f64::NEG_INFINITY {
        return vec![0.0; deltas.len()];
    }
    let terms: Vec<f64> = deltas
        .iter()
        .zip(depths)
        .map(|(d, z)| if *d > 0.0 { d * ((z - zmax) / gamma).exp() } else { 0.0 })
        .collect();
    let total: f64 = terms.iter().sum();
    if zmax / gamma + total.ln() < RAY_EPSILON.ln() {
        return vec![0.0; deltas.len()];
    }
    terms.iter().map(|t| t / total).collect()
}

/// `ρ · N(d_z; 0, σ_g)` with `d_z` in slant cells.
pub fn energy_transfer(rho: f64, d_z: f64, sigma_g: f64) -> f64 {
    rho * gaussian(d_z, sigma_g)
}

/// Slant-cell offset between a ray's hit depth `Z` and a mapping cell at
/// slant offset `z_cell`: `((Z - f) - z_cell) / R_z`.
pub fn range_offset(depth: f64, z_cell: f64, reference_range: f64, rz: f64) -> f64 {
    ((depth - reference_range) - z_cell) / rz
}

#[inline]
pub(crate) fn gaussian(x: f64, sigma: f64) -> f64 {
    (-(x * x) / (2.0 * sigma * sigma)).exp() / ((2.0 * std::f64::consts::PI).sqrt() * sigma)
}

/// Inclusive pixel ranges of a facet's footprint, clipped to the image.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct PixelBox {
    pub c0: usize,
    pub c1: usize,
    pub r0: usize,
    pub r1: usize,
}

impl PixelBox {
    /// Cells whose centres lie within `pad` of the facet's bounding box.
    fn of(screen: &FacetScreen2D, pad: f64, cols: usize, rows: usize) -> Option<Self> {
        if screen.is_degenerate() {
            return None;
        }
        let (lo, hi) = screen.bbox();
        let range = |lo: f64, hi: f64, n: usize| -> Option<(usize, usize)> {
            let a = (lo - pad - 0.5).ceil().max(0.0);
            let b = (hi + pad - 0.5).floor().min(n as f64 - 1.0);
            (a <= b).then_some((a as usize, b as usize))
        };
        let (c0, c1) = range(lo.x, hi.x, cols)?;
        let (r0, r1) = range(lo.y, hi.y, rows)?;
        Some(Self { c0, c1, r0, r1 })
    }

    #[inline]
    pub fn has_col(&self, l: usize) -> bool {
        self.c0 <= l && l <= self.c1
    }

    #[inline]
    pub fn has_row(&self, r: usize) -> bool {
        self.r0 <= r && r <= self.r1
    }
}

/// Mesh transformed into both image planes.
pub(crate) struct PreparedScene {
    pub pose: PoseTransform,
    pub facets: Vec<[usize; 3]>,
    pub radar_vertices: Vec<Vector3<f64>>,
    /// Projection plane: (column, projection row) with radar-frame depth.
    pub proj: Vec<FacetScreen2D>,
    pub proj_box: Vec<Option<PixelBox>>,
    /// Mapping plane: (column, slant row).
    pub map: Vec<FacetScreen2D>,
    pub map_box: Vec<Option<PixelBox>>,
}

impl PreparedScene {
    pub fn new(mesh: &TriangleMesh, view: &RadarView, grid: &GridSpec, params: &RenderParams) -> Result<Self> {
        view.validate()?;
        grid.validate()?;
        params.validate()?;
        let pose = view.pose_transform();
        let radar_vertices: Vec<Vector3<f64>> = mesh.vertices.iter().map(|v| pose.apply(v)).collect();
        if let Some(v) = radar_vertices.iter().find(|v| !(v.z > 0.0)) {
            return Err(Error::InvalidParameter(format!(
                "vertex at radar-frame depth {} lies behind the radar",
                v.z
            )));
        }
        let f = view.reference_range;
        let pad = params.cull_radius();
        let mut proj = Vec::with_capacity(mesh.facet_count());
        let mut map = Vec::with_capacity(mesh.facet_count());
        for facet in &mesh.facets {
            let vr = facet.map(|n| radar_vertices[n]);
            proj.push(FacetScreen2D::new(
                vr.map(|v| Vector2::new(grid.col_coord(v.x), grid.proj_row_coord(v.y))),
                vr.map(|v| v.z),
            ));
            map.push(FacetScreen2D::flat(vr.map(|v| {
                let z_hat = (v.y * v.y + v.z * v.z).sqrt() - f;
                Vector2::new(grid.col_coord(v.x), grid.row_coord(z_hat))
            })));
        }
        let proj_box = proj.iter().map(|s| PixelBox::of(s, pad, grid.nx, grid.ny)).collect();
        let map_box = map.iter().map(|s| PixelBox::of(s, pad, grid.nx, grid.nz)).collect();
        Ok(Self {
            pose,
            facets: mesh.facets.clone(),
            radar_vertices,
            proj,
            proj_box,
            map,
            map_box,
        })
    }
}

/// Identifies the geometry, view, grid and softness a forward pass ran
/// with. Scattering values are excluded: ray normalisers do not depend on
/// them.
pub(crate) fn scene_fingerprint(mesh: &TriangleMesh, view: &RadarView, grid: &GridSpec, params: &RenderParams) -> u64 {
    let mut h = DefaultHasher::new();
    for v in &mesh.vertices {
        for c in v.iter() {
            c.to_bits().hash(&mut h);
        }
    }
    mesh.facets.hash(&mut h);
    let pose = view.pose_transform();
    for c in pose.linear.iter().chain(pose.translation.iter()) {
        c.to_bits().hash(&mut h);
    }
    for c in [
        view.reference_range,
        view.near,
        view.far,
        grid.rz,
        grid.ry,
        grid.raz,
        params.sigma,
        params.gamma,
        params.sigma_g,
    ] {
        c.to_bits().hash(&mut h);
    }
    (grid.nx, grid.ny, grid.nz).hash(&mut h);
    h.finish()
}

#[cfg(test)]
mod invariants;
