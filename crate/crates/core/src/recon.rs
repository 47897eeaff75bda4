//! Multi-view mesh reconstruction and silhouette-driven pose estimation.

use nalgebra::Vector3;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{ImageSize, RadarView};
use crate::grad::{backward_pose, backward_scattering, pose_vector, with_pose_vector};
use crate::loss::{hybrid_loss, loss_silhouette, silhouette_iou, ImagePair, LossMode, LossTerms, LossWeights};
use crate::mesh::{MeshTopology, TriangleMesh};
use crate::optim::{Adam, AdamConfig};
use crate::raster::RenderParams;
use crate::render::{
    render_sar, render_silhouette, silhouette_backward_with, silhouette_forward, PreparedScene, RenderedImage,
};

/// Incident angles of the standard multi-view acquisition, in degrees.
pub const STANDARD_INCIDENT_DEG: [f64; 4] = [15.0, 30.0, 45.0, 60.0];
/// Number of evenly spaced azimuths per incident angle.
pub const STANDARD_AZIMUTH_COUNT: usize = 8;

/// `(α, β)` pairs in degrees: every standard incident angle at eight
/// azimuths 45° apart.
pub fn standard_view_angles() -> Vec<(f64, f64)> {
    STANDARD_INCIDENT_DEG
        .iter()
        .flat_map(|&a| (0..STANDARD_AZIMUTH_COUNT).map(move |i| (a, i as f64 * 360.0 / STANDARD_AZIMUTH_COUNT as f64)))
        .collect()
}

/// One observation: where it was taken from and what was seen.
#[derive(Debug, Clone, PartialEq)]
pub struct ViewSample {
    pub view: RadarView,
    /// Row-major `N_z × N_x` silhouette in [0, 1].
    pub silhouette: Vec<f64>,
    /// Row-major `N_z × N_x` SAR intensity, when available.
    pub sar: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ViewSet {
    pub size: ImageSize,
    pub views: Vec<ViewSample>,
}

impl ViewSet {
    pub fn new(size: ImageSize, views: Vec<ViewSample>) -> Result<Self> {
        let set = Self { size, views };
        set.validate()?;
        Ok(set)
    }

    pub fn validate(&self) -> Result<()> {
        if self.views.is_empty() {
            return Err(Error::InvalidParameter("view set is empty".into()));
        }
        let n = self.size.pixel_count();
        for (i, v) in self.views.iter().enumerate() {
            v.view.validate()?;
            self.size.grid_for(&v.view)?;
            let sar_len = v.sar.as_ref().map_or(n, Vec::len);
            if v.silhouette.len() != n || sar_len != n {
                return Err(Error::ShapeMismatch(format!(
                    "view {i} images do not match the {}×{} grid",
                    self.size.nz, self.size.nx
                )));
            }
            if v.silhouette.iter().any(|x| !(0.0..=1.0).contains(x)) {
                return Err(Error::InvalidParameter(format!("view {i} silhouette leaves [0, 1]")));
            }
        }
        Ok(())
    }

    /// Renders ground-truth observations of `mesh` for each view.
    pub fn render(
        mesh: &TriangleMesh,
        views: &[RadarView],
        size: ImageSize,
        params: &RenderParams,
        with_sar: bool,
    ) -> Result<Self> {
        let samples = views
            .iter()
            .map(|view| {
                let grid = size.grid_for(view)?;
                let silhouette = render_silhouette(mesh, view, &grid, params)?.data;
                let sar = if with_sar {
                    Some(render_sar(mesh, view, &grid, params)?.0.data)
                } else {
                    None
                };
                Ok(ViewSample {
                    view: *view,
                    silhouette,
                    sar,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(size, samples)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReconConfig {
    pub params: RenderParams,
    pub weights: LossWeights,
    pub mode: LossMode,
    pub adam: AdamConfig,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
    /// When false only scattering is optimised.
    pub optimize_vertices: bool,
}

impl Default for ReconConfig {
    fn default() -> Self {
        Self {
            params: RenderParams::default(),
            weights: LossWeights::default(),
            mode: LossMode::Full,
            adam: AdamConfig::default(),
            batch_size: 8,
            epochs: 500,
            seed: 0,
            optimize_vertices: true,
        }
    }
}

impl ReconConfig {
    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        self.weights.validate()?;
        self.adam.validate()?;
        if self.batch_size == 0 {
            return Err(Error::InvalidParameter("batch size must be positive".into()));
        }
        Ok(())
    }

    fn fits_scattering(&self) -> bool {
        self.mode == LossMode::Full
    }
}

/// Loss and gradients for one view or the mean over a batch.
#[derive(Debug, Clone, PartialEq)]
pub struct ViewGradient {
    pub terms: LossTerms,
    pub total: f64,
    /// World-frame vertex gradients, regularisers included.
    pub d_vertices: Vec<Vector3<f64>>,
    pub d_scattering: Vec<f64>,
}

/// Forward and backward pass of the hybrid loss for a single view.
pub fn view_gradient(
    sample: &ViewSample,
    size: &ImageSize,
    mesh: &TriangleMesh,
    topo: &MeshTopology,
    config: &ReconConfig,
) -> Result<ViewGradient> {
    let grid = size.grid_for(&sample.view)?;
    let scene = PreparedScene::new(mesh, &sample.view, &grid, &config.params)?;
    let forward = silhouette_forward(&scene, &grid, config.params.sigma);
    let silhouette = &forward.image;
    let wants_sar = config.fits_scattering() && sample.sar.is_some();
    let sar = if wants_sar {
        Some(render_sar(mesh, &sample.view, &grid, &config.params)?)
    } else {
        None
    };
    let pred = ImagePair {
        silhouette: &silhouette.data,
        sar: sar.as_ref().map(|(img, _)| img.data.as_slice()),
    };
    let truth = ImagePair {
        silhouette: &sample.silhouette,
        sar: sample.sar.as_deref(),
    };
    let loss = hybrid_loss(pred, truth, mesh, topo, &config.weights, config.mode)?;

    let mut d_vertices = loss.d_vertices;
    if config.optimize_vertices {
        let lt = scene.pose.linear.transpose();
        let g_r = silhouette_backward_with(&scene, &grid, config.params.sigma, &forward, &loss.d_silhouette);
        for (d, g) in d_vertices.iter_mut().zip(&g_r) {
            *d += lt * g;
        }
    }
    let d_scattering = match (&loss.d_sar, &sar) {
        (Some(up), Some((_, cache))) => {
            backward_scattering(up, mesh, &sample.view, &grid, &config.params, cache)?.d_scattering
        }
        _ => vec![0.0; mesh.facet_count()],
    };
    Ok(ViewGradient {
        terms: loss.terms,
        total: loss.total,
        d_vertices,
        d_scattering,
    })
}

/// Arithmetic mean of [`view_gradient`] over the views in `batch`.
pub fn batch_gradient(
    views: &ViewSet,
    batch: &[usize],
    mesh: &TriangleMesh,
    topo: &MeshTopology,
    config: &ReconConfig,
) -> Result<ViewGradient> {
    if batch.is_empty() {
        return Err(Error::InvalidParameter("empty batch".into()));
    }
    let per_view: Vec<ViewGradient> = batch
        .par_iter()
        .map(|&i| view_gradient(&views.views[i], &views.size, mesh, topo, config))
        .collect::<Result<_>>()?;
    let w = 1.0 / batch.len() as f64;
    let mut mean = ViewGradient {
        terms: LossTerms::default(),
        total: 0.0,
        d_vertices: vec![Vector3::zeros(); mesh.vertex_count()],
        d_scattering: vec![0.0; mesh.facet_count()],
    };
    for g in &per_view {
        mean.terms.silhouette += w * g.terms.silhouette;
        mean.terms.texture += w * g.terms.texture;
        mean.terms.laplacian += w * g.terms.laplacian;
        mean.terms.flatness += w * g.terms.flatness;
        mean.total += w * g.total;
        for (a, b) in mean.d_vertices.iter_mut().zip(&g.d_vertices) {
            *a += b * w;
        }
        for (a, b) in mean.d_scattering.iter_mut().zip(&g.d_scattering) {
            *a += b * w;
        }
    }
    Ok(mean)
}

/// One row of the loss history.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HistoryRow {
    pub epoch: usize,
    pub batch: usize,
    pub terms: LossTerms,
    pub total: f64,
}

pub const HISTORY_HEADER: &str = "epoch,batch,L_sil,L_tex,L_lap,L_flat,total";

impl HistoryRow {
    pub fn csv_line(&self) -> String {
        let t = &self.terms;
        format!(
            "{},{},{},{},{},{},{}",
            self.epoch, self.batch, t.silhouette, t.texture, t.laplacian, t.flatness, self.total
        )
    }
}

pub fn history_csv(rows: &[HistoryRow]) -> String {
    let mut out = String::from(HISTORY_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&r.csv_line());
        out.push('\n');
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReconResult {
    pub mesh: TriangleMesh,
    pub history: Vec<HistoryRow>,
}

/// [`reconstruct_with`] without an epoch callback.
pub fn reconstruct(views: &ViewSet, template: &TriangleMesh, config: &ReconConfig) -> Result<ReconResult> {
    reconstruct_with(views, template, config, |_, _| Ok(()))
}

/// Deforms `template` (and fits its scattering in full mode) to the views.
/// `on_epoch(epoch, mesh)` runs after every completed epoch; an error from it
/// stops the run. A non-finite loss aborts with [`Error::NonFinite`].
pub fn reconstruct_with(
    views: &ViewSet,
    template: &TriangleMesh,
    config: &ReconConfig,
    mut on_epoch: impl FnMut(usize, &TriangleMesh) -> Result<()>,
) -> Result<ReconResult> {
    config.validate()?;
    views.validate()?;
    template.validate()?;
    let topo = MeshTopology::build(template);
    let mut mesh = template.clone();
    let mut coords: Vec<f64> = mesh.vertices.iter().flat_map(|v| [v.x, v.y, v.z]).collect();
    let mut vertex_opt = Adam::new(coords.len(), config.adam)?;
    let mut scatter_opt = Adam::new(mesh.facet_count(), config.adam)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let batch_size = config.batch_size.min(views.views.len());
    let mut order: Vec<usize> = (0..views.views.len()).collect();
    let mut history = Vec::new();

    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        for (b, batch) in order.chunks(batch_size).enumerate() {
            let g = batch_gradient(views, batch, &mesh, &topo, config)?;
            if !g.total.is_finite() {
                return Err(Error::NonFinite(format!("loss diverged at epoch {epoch}, batch {b}")));
            }
            history.push(HistoryRow {
                epoch,
                batch: b,
                terms: g.terms,
                total: g.total,
            });
            if config.optimize_vertices {
                let flat: Vec<f64> = g.d_vertices.iter().flat_map(|v| [v.x, v.y, v.z]).collect();
                vertex_opt.step(&mut coords, &flat)?;
                for (v, c) in mesh.vertices.iter_mut().zip(coords.chunks(3)) {
                    *v = Vector3::new(c[0], c[1], c[2]);
                }
            }
            if config.fits_scattering() {
                scatter_opt.step(&mut mesh.scattering, &g.d_scattering)?;
                for s in &mut mesh.scattering {
                    *s = s.max(0.0);
                }
            }
        }
        log::debug!("epoch {epoch}: loss {:?}", history.last().map(|r| r.total));
        on_epoch(epoch, &mesh)?;
    }
    Ok(ReconResult { mesh, history })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoseConfig {
    pub params: RenderParams,
    pub adam: AdamConfig,
    pub epochs: usize,
    /// Which of `(α, β, θx, θy, θz, scale)` are optimised.
    pub free: [bool; 6],
}

impl Default for PoseConfig {
    fn default() -> Self {
        Self {
            params: RenderParams::default(),
            adam: AdamConfig::default(),
            epochs: 500,
            free: [true; 6],
        }
    }
}

/// Incident angles are kept this far inside (0°, 90°).
pub const POSE_INCIDENT_MARGIN_DEG: f64 = 0.5;
/// Smallest scale the pose search may reach.
pub const POSE_MIN_SCALE: f64 = 1e-3;

/// IoU below which a pose estimate is reported as not converged.
pub const POSE_CONVERGED_IOU: f64 = 0.5;

#[derive(Debug, Clone, PartialEq)]
pub struct PoseResult {
    pub initial: RadarView,
    pub estimate: RadarView,
    pub initial_iou: f64,
    /// IoU at the estimate.
    pub final_iou: f64,
    /// IoU at the last optimiser iterate.
    pub last_iou: f64,
    /// Silhouette rendered at the estimate.
    pub predicted: RenderedImage,
    /// Silhouette loss before each step.
    pub history: Vec<f64>,
}

impl PoseResult {
    pub fn converged(&self) -> bool {
        self.final_iou >= POSE_CONVERGED_IOU
    }
}

fn clamp_pose(p: &mut [f64; 6]) {
    let lo = POSE_INCIDENT_MARGIN_DEG.to_radians();
    let hi = (90.0 - POSE_INCIDENT_MARGIN_DEG).to_radians();
    p[0] = p[0].clamp(lo, hi);
    p[5] = p[5].max(POSE_MIN_SCALE);
}

/// Fits `(α, β, θx, θy, θz, scale)` so that the silhouette of `mesh`
/// matches `observed`, minimising the silhouette loss alone. The returned
/// estimate is the iterate whose silhouette has the highest IoU against
/// `observed`, ties going to the earliest.
pub fn estimate_pose(
    observed: &[f64],
    mesh: &TriangleMesh,
    init: &RadarView,
    size: ImageSize,
    config: &PoseConfig,
) -> Result<PoseResult> {
    config.params.validate()?;
    if observed.len() != size.pixel_count() {
        return Err(Error::ShapeMismatch(format!(
            "observed silhouette has {} pixels, grid has {}",
            observed.len(),
            size.pixel_count()
        )));
    }
    let render = |p: &[f64; 6]| -> Result<(RadarView, crate::geometry::GridSpec, RenderedImage, f64)> {
        let view = with_pose_vector(init, p);
        let grid = size.grid_for(&view)?;
        let img = render_silhouette(mesh, &view, &grid, &config.params)?;
        let iou = silhouette_iou(&img.data, observed)?;
        Ok((view, grid, img, iou))
    };
    let mut p = pose_vector(init);
    let mut adam = Adam::new(6, config.adam)?;
    let mut history = Vec::with_capacity(config.epochs);
    let (_, _, first_img, initial_iou) = render(&p)?;
    let mut best = (initial_iou, p, first_img);
    for epoch in 0..config.epochs {
        let (view, grid, pred, iou) = render(&p)?;
        if epoch > 0 && iou > best.0 {
            best = (iou, p, pred.clone());
        }
        let (loss, upstream) = loss_silhouette(&pred.data, observed)?;
        if !loss.is_finite() {
            return Err(Error::NonFinite("pose loss diverged".into()));
        }
        history.push(loss);
        let mut g = backward_pose(&upstream, mesh, &view, &grid, &config.params)?
            .d_pose
            .expect("pose gradients requested");
        for (gi, free) in g.iter_mut().zip(config.free) {
            if !free {
                *gi = 0.0;
            }
        }
        adam.step(&mut p, &g)?;
        clamp_pose(&mut p);
    }
    let (_, _, last_img, last_iou) = render(&p)?;
    if last_iou > best.0 {
        best = (last_iou, p, last_img);
    }
    Ok(PoseResult {
        initial: *init,
        estimate: with_pose_vector(init, &best.1),
        initial_iou,
        final_iou: best.0,
        last_iou,
        predicted: best.2,
        history,
    })
}
