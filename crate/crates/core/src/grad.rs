//! Analytic backward passes: silhouette to vertex positions, SAR intensity to
//! per-facet scattering, silhouette to pose, plus a central-difference
//! oracle used to check all of them.
//!
//! Geometry gradients flow only through the silhouette; the SAR image is
//! differentiated with respect to scattering alone.

use nalgebra::Vector3;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{euler_derivatives, rotation_derivatives, GridSpec, RadarView};
use crate::mesh::TriangleMesh;
use crate::raster::RenderParams;
use crate::render::{
    scene_fingerprint, silhouette_backward_radar, stream_column, ColumnScratch, ForwardCache, PreparedScene, StreamCtx,
};

/// Names of the pose parameters, in the order used by [`pose_vector`].
pub const POSE_PARAMETERS: [&str; 6] = ["alpha", "beta", "theta_x", "theta_y", "theta_z", "scale"];

#[derive(Debug, Clone, PartialEq)]
pub struct GradientSet {
    /// `∂L/∂v` in the world frame, one per vertex.
    pub d_vertices: Vec<Vector3<f64>>,
    /// `∂L/∂S_j`, one per facet.
    pub d_scattering: Vec<f64>,
    /// `∂L/∂(α, β, θx, θy, θz, scale)`, angles per radian.
    pub d_pose: Option<[f64; 6]>,
}

impl GradientSet {
    pub fn zeros(mesh: &TriangleMesh) -> Self {
        Self {
            d_vertices: vec![Vector3::zeros(); mesh.vertex_count()],
            d_scattering: vec![0.0; mesh.facet_count()],
            d_pose: None,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.d_vertices.iter().all(|v| v.iter().all(|c| c.is_finite()))
            && self.d_scattering.iter().all(|s| s.is_finite())
            && self.d_pose.is_none_or(|p| p.iter().all(|c| c.is_finite()))
    }

    /// `self += a · other`.
    pub fn add_scaled(&mut self, other: &GradientSet, a: f64) {
        for (x, y) in self.d_vertices.iter_mut().zip(&other.d_vertices) {
            *x += y * a;
        }
        for (x, y) in self.d_scattering.iter_mut().zip(&other.d_scattering) {
            *x += y * a;
        }
        if let Some(q) = other.d_pose {
            let p = self.d_pose.get_or_insert([0.0; 6]);
            for (x, y) in p.iter_mut().zip(q) {
                *x += y * a;
            }
        }
    }
}

/// `(α, β, θx, θy, θz)` in radians followed by the scale.
pub fn pose_vector(view: &RadarView) -> [f64; 6] {
    [
        view.incident_deg.to_radians(),
        view.azimuth_deg.to_radians(),
        view.euler_deg[0].to_radians(),
        view.euler_deg[1].to_radians(),
        view.euler_deg[2].to_radians(),
        view.scale,
    ]
}

/// Copy of `view` with the pose taken from a [`pose_vector`].
pub fn with_pose_vector(view: &RadarView, p: &[f64; 6]) -> RadarView {
    RadarView {
        incident_deg: p[0].to_degrees(),
        azimuth_deg: p[1].to_degrees(),
        euler_deg: [p[2].to_degrees(), p[3].to_degrees(), p[4].to_degrees()],
        scale: p[5],
        ..*view
    }
}

fn check_upstream(upstream: &[f64], grid: &GridSpec) -> Result<()> {
    if upstream.len() != grid.nx * grid.nz {
        return Err(Error::ShapeMismatch(format!(
            "upstream gradient has {} values, image has {}",
            upstream.len(),
            grid.nx * grid.nz
        )));
    }
    if let Some(x) = upstream.iter().find(|x| !x.is_finite()) {
        return Err(Error::NonFinite(format!("upstream gradient contains {x}")));
    }
    Ok(())
}

fn silhouette_radar_grads(
    upstream: &[f64],
    mesh: &TriangleMesh,
    view: &RadarView,
    grid: &GridSpec,
    params: &RenderParams,
) -> Result<(PreparedScene, Vec<Vector3<f64>>)> {
    check_upstream(upstream, grid)?;
    let scene = PreparedScene::new(mesh, view, grid, params)?;
    let g = silhouette_backward_radar(&scene, grid, params.sigma, upstream);
    Ok((scene, g))
}

/// Vertex gradients of `Σ upstream · I_sil`.
pub fn backward_silhouette(
    upstream: &[f64],
    mesh: &TriangleMesh,
    view: &RadarView,
    grid: &GridSpec,
    params: &RenderParams,
) -> Result<GradientSet> {
    let (scene, g_r) = silhouette_radar_grads(upstream, mesh, view, grid, params)?;
    let lt = scene.pose.linear.transpose();
    Ok(GradientSet {
        d_vertices: g_r.iter().map(|g| lt * g).collect(),
        d_scattering: vec![0.0; mesh.facet_count()],
        d_pose: None,
    })
}

/// Pose gradients of `Σ upstream · I_sil`, chained through
/// `v_r = s · R_e · Rᵀ · v + t`. Vertex gradients are filled in as well.
pub fn backward_pose(
    upstream: &[f64],
    mesh: &TriangleMesh,
    view: &RadarView,
    grid: &GridSpec,
    params: &RenderParams,
) -> Result<GradientSet> {
    let (scene, g_r) = silhouette_radar_grads(upstream, mesh, view, grid, params)?;
    let (alpha, beta) = (view.incident_deg.to_radians(), view.azimuth_deg.to_radians());
    let r_t = view.rotation_matrix().transpose();
    let r_e = view.euler_matrix();
    let (dr_a, dr_b) = rotation_derivatives(alpha, beta);
    let de = euler_derivatives(view.euler_deg);
    let s = view.scale;
    // with an explicit radar position the translation -Rᵀ p_r moves too
    let p_r = view.radar_position.map(Vector3::from);
    let dt = |dr: &nalgebra::Matrix3<f64>| p_r.map_or(Vector3::zeros(), |p| -(dr.transpose() * p));
    let (dt_a, dt_b) = (dt(&dr_a), dt(&dr_b));

    let mut d = [0.0; 6];
    for (v, g) in mesh.vertices.iter().zip(&g_r) {
        if *g == Vector3::zeros() {
            continue;
        }
        let a = r_t * v;
        d[0] += g.dot(&(s * r_e * dr_a.transpose() * v + dt_a));
        d[1] += g.dot(&(s * r_e * dr_b.transpose() * v + dt_b));
        for (n, de_n) in de.iter().enumerate() {
            d[2 + n] += g.dot(&(s * de_n * a));
        }
        d[5] += g.dot(&(r_e * a));
    }
    let lt = scene.pose.linear.transpose();
    Ok(GradientSet {
        d_vertices: g_r.iter().map(|g| lt * g).collect(),
        d_scattering: vec![0.0; mesh.facet_count()],
        d_pose: Some(d),
    })
}

/// Scattering gradients of `Σ upstream · I_sar`, streaming the rays again
/// with the normalisers stored by the forward pass.
pub fn backward_scattering(
    upstream: &[f64],
    mesh: &TriangleMesh,
    view: &RadarView,
    grid: &GridSpec,
    params: &RenderParams,
    cache: &ForwardCache,
) -> Result<GradientSet> {
    check_upstream(upstream, grid)?;
    if cache.fingerprint != scene_fingerprint(mesh, view, grid, params) {
        return Err(Error::CacheMismatch);
    }
    let scene = PreparedScene::new(mesh, view, grid, params)?;
    let ctx = StreamCtx::new(&scene, view, grid, params);
    let columns: Vec<Vec<(u32, f64)>> = (0..grid.nx)
        .into_par_iter()
        .map_init(ColumnScratch::default, |scratch, l| {
            let mut out = Vec::new();
            stream_column(
                &ctx,
                l,
                scratch,
                |i, _| cache.ray(i, l),
                |k, j, c| {
                    let u = upstream[k * grid.nx + l];
                    if u != 0.0 {
                        out.push((j as u32, u * c));
                    }
                },
            );
            out
        })
        .collect();
    let mut d_scattering = vec![0.0; mesh.facet_count()];
    for col in columns {
        for (j, c) in col {
            d_scattering[j as usize] += c;
        }
    }
    Ok(GradientSet {
        d_vertices: vec![Vector3::zeros(); mesh.vertex_count()],
        d_scattering,
        d_pose: None,
    })
}

/// Central differences `(f(x + h e_i) - f(x - h e_i)) / 2h` for every
/// coordinate.
pub fn finite_difference_oracle(mut f: impl FnMut(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
    let mut p = x.to_vec();
    (0..x.len())
        .map(|i| {
            p[i] = x[i] + h;
            let up = f(&p);
            p[i] = x[i] - h;
            let down = f(&p);
            p[i] = x[i];
            (up - down) / (2.0 * h)
        })
        .collect()
}
