//! Streamed SAR rendering: one mapping column at a time, one ray at a time,
//! so working memory does not grow with the number of projection cells.

use nalgebra::Vector2;
use rayon::prelude::*;

use super::{gaussian, scene_fingerprint, ImageKind, PreparedScene, RenderedImage, GAUSS_WINDOW_SIGMAS, RAY_EPSILON};
use crate::error::Result;
use crate::geometry::{GridSpec, RadarView};
use crate::mesh::TriangleMesh;
use crate::raster::{clip_barycentric, normalized_depth_unchecked, RenderParams};

/// Per-ray normalisers of a forward pass. The normaliser of ray `(i, l)` is
/// `T = exp(z_max/γ) · t_sum`; rays that carried no energy store `t_sum = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardCache {
    pub(crate) fingerprint: u64,
    nx: usize,
    ny: usize,
    /// Column-major: ray `(i, l)` at `l * ny + i`.
    zmax: Vec<f64>,
    tsum: Vec<f64>,
}

impl ForwardCache {
    /// `ln T` for ray `(i, l)`; `None` when the ray carried no energy.
    pub fn log_normalizer(&self, i: usize, l: usize, gamma: f64) -> Option<f64> {
        let idx = l * self.ny + i;
        (self.tsum[idx] > 0.0).then(|| self.zmax[idx] / gamma + self.tsum[idx].ln())
    }

    pub(crate) fn ray(&self, i: usize, l: usize) -> Option<(f64, f64)> {
        let idx = l * self.ny + i;
        (self.tsum[idx] > 0.0).then(|| (self.zmax[idx], self.tsum[idx]))
    }

    pub fn ray_count(&self) -> usize {
        self.nx * self.ny
    }

    pub fn hit_ray_count(&self) -> usize {
        self.tsum.iter().filter(|&&t| t > 0.0).count()
    }
}

/// Bookkeeping for a streamed render.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct RenderStats {
    /// Largest scratch footprint of any column pass, in 8-byte words,
    /// excluding the scene inputs and the output image and cache.
    pub peak_scratch_words: usize,
    pub hit_rays: usize,
    pub ny: usize,
}

#[derive(Debug, Clone, Copy)]
struct Hit {
    facet: u32,
    delta: f64,
    z: f64,
    depth: f64,
}

/// Reusable per-worker buffers.
#[derive(Debug, Default)]
pub(crate) struct ColumnScratch {
    proj_list: Vec<u32>,
    hits: Vec<Hit>,
    peak_words: usize,
}

impl ColumnScratch {
    fn note_peak(&mut self, extra: usize) {
        // a hit is four words, a facet index half a word
        let words = self.proj_list.len().div_ceil(2) + 4 * self.hits.len() + extra;
        self.peak_words = self.peak_words.max(words);
    }
}

/// Shared, read-only state for streaming columns.
pub(crate) struct StreamCtx<'a> {
    pub scene: &'a PreparedScene,
    pub grid: &'a GridSpec,
    pub params: &'a RenderParams,
    pub reference_range: f64,
    pub near: f64,
    pub far: f64,
}

impl<'a> StreamCtx<'a> {
    pub fn new(scene: &'a PreparedScene, view: &RadarView, grid: &'a GridSpec, params: &'a RenderParams) -> Self {
        Self {
            scene,
            grid,
            params,
            reference_range: view.reference_range,
            near: view.near,
            far: view.far,
        }
    }
}

/// Streams every ray of column `l`. For each ray the normaliser is computed
/// and passed to `normalizer`, which returns the one to use (the computed
/// one in a forward pass, the cached one in a backward pass). `visit(k, j, c)`
/// then receives every nonzero `δ_j^{(k,l)} · ω_j^{(k,l)|(i,l)}`.
pub(crate) fn stream_column(
    ctx: &StreamCtx<'_>,
    l: usize,
    scratch: &mut ColumnScratch,
    mut normalizer: impl FnMut(usize, Option<(f64, f64)>) -> Option<(f64, f64)>,
    mut visit: impl FnMut(usize, usize, f64),
) {
    let scene = ctx.scene;
    let grid = ctx.grid;
    let sigma = ctx.params.sigma;
    let gamma = ctx.params.gamma;
    let sigma_g = ctx.params.sigma_g;
    let window = GAUSS_WINDOW_SIGMAS * sigma_g;
    let u = l as f64 + 0.5;

    scratch.proj_list.clear();
    scratch.proj_list.extend(
        scene
            .proj_box
            .iter()
            .enumerate()
            .filter(|(_, b)| b.is_some_and(|b| b.has_col(l)))
            .map(|(j, _)| j as u32),
    );

    for i in 0..grid.ny {
        let p = Vector2::new(u, i as f64 + 0.5);
        scratch.hits.clear();
        for &j in &scratch.proj_list {
            let jj = j as usize;
            if !scene.proj_box[jj].is_some_and(|b| b.has_row(i)) {
                continue;
            }
            let facet = &scene.proj[jj];
            let delta = facet.probability(&p, sigma);
            if delta == 0.0 {
                continue;
            }
            let bary = clip_barycentric(facet.barycentric(&p).expect("culled degenerate facet"));
            let (z, depth) = normalized_depth_unchecked(&facet.depths, bary, ctx.near, ctx.far);
            scratch.hits.push(Hit {
                facet: j,
                delta,
                z,
                depth,
            });
        }
        scratch.note_peak(grid.nz);

        let computed = ray_normalizer(&scratch.hits, gamma);
        let Some((zmax, tsum)) = normalizer(i, computed) else {
            continue;
        };
        for hit in &scratch.hits {
            let rho = hit.delta * ((hit.z - zmax) / gamma).exp() / tsum;
            if rho == 0.0 {
                continue;
            }
            let j = hit.facet as usize;
            let Some(mb) = scene.map_box[j].filter(|b| b.has_col(l)) else {
                continue;
            };
            // slant-row coordinate of the hit
            let w = grid.row_coord(hit.depth - ctx.reference_range);
            let k0 = ((w - window - 0.5).ceil().max(mb.r0 as f64)) as usize;
            let k1f = (w + window - 0.5).floor().min(mb.r1 as f64);
            if k1f < k0 as f64 {
                continue;
            }
            for k in k0..=k1f as usize {
                let dm = scene.map[j].probability(&Vector2::new(u, k as f64 + 0.5), sigma);
                if dm == 0.0 {
                    continue;
                }
                let d_z = w - (k as f64 + 0.5);
                visit(k, j, dm * rho * gaussian(d_z, sigma_g));
            }
        }
    }
}

/// `(z_max, Σ δ e^{(z - z_max)/γ})`, or `None` for rays below the epsilon
/// guard.
fn ray_normalizer(hits: &[Hit], gamma: f64) -> Option<(f64, f64)> {
    if hits.is_empty() {
        return None;
    }
    let zmax = hits.iter().map(|h| h.z).fold(f64::NEG_INFINITY, f64::max);
    let tsum: f64 = hits.iter().map(|h| h.delta * ((h.z - zmax) / gamma).exp()).sum();
    (zmax / gamma + tsum.ln() >= RAY_EPSILON.ln()).then_some((zmax, tsum))
}

/// Renders the SAR intensity image and the ray normalisers needed by the
/// scattering gradient.
pub fn render_sar(
    mesh: &TriangleMesh,
    view: &RadarView,
    grid: &GridSpec,
    params: &RenderParams,
) -> Result<(RenderedImage, ForwardCache)> {
    render_sar_with_stats(mesh, view, grid, params).map(|(img, cache, _)| (img, cache))
}

pub fn render_sar_with_stats(
    mesh: &TriangleMesh,
    view: &RadarView,
    grid: &GridSpec,
    params: &RenderParams,
) -> Result<(RenderedImage, ForwardCache, RenderStats)> {
    let scene = PreparedScene::new(mesh, view, grid, params)?;
    let ctx = StreamCtx::new(&scene, view, grid, params);
    // per column: image values, ray normalisers, peak scratch words
    type Column = (Vec<f64>, Vec<(f64, f64)>, usize);
    let columns: Vec<Column> = (0..grid.nx)
        .into_par_iter()
        .map_init(ColumnScratch::default, |scratch, l| {
            let mut col = vec![0.0; grid.nz];
            let mut rays = vec![(0.0, 0.0); grid.ny];
            stream_column(
                &ctx,
                l,
                scratch,
                |i, computed| {
                    if let Some(r) = computed {
                        rays[i] = r;
                    }
                    computed
                },
                |k, j, c| col[k] += mesh.scattering[j] * c,
            );
            (col, rays, scratch.peak_words)
        })
        .collect();

    let mut image = RenderedImage::zeros(ImageKind::Sar, grid);
    let mut zmax = Vec::with_capacity(grid.nx * grid.ny);
    let mut tsum = Vec::with_capacity(grid.nx * grid.ny);
    let mut peak = 0;
    for (l, (col, rays, words)) in columns.into_iter().enumerate() {
        for (k, v) in col.into_iter().enumerate() {
            image.data[k * grid.nx + l] = v;
        }
        for (z, t) in rays {
            zmax.push(z);
            tsum.push(t);
        }
        peak = peak.max(words);
    }
    let cache = ForwardCache {
        fingerprint: scene_fingerprint(mesh, view, grid, params),
        nx: grid.nx,
        ny: grid.ny,
        zmax,
        tsum,
    };
    let stats = RenderStats {
        peak_scratch_words: peak,
        hit_rays: cache.hit_ray_count(),
        ny: grid.ny,
    };
    Ok((image, cache, stats))
}
