//! Radar viewing geometry: world-to-radar rotation, slant-range mapping,
//! Euler pose, image/projection grids and ISAR resolution.
//!
//! The radar frame has `x` along the flight (azimuth) direction, `z` along
//! the line of sight and `y` completing the frame. The mapping (image) plane
//! is spanned by azimuth and slant range, the projection plane by `x` and `y`.
//! Angles are stored in degrees and converted at the point of use.

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Speed of light in vacuum (m/s).
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RadarView {
    /// Incident angle in degrees. Negative values look from below the
    /// horizontal plane.
    pub incident_deg: f64,
    pub azimuth_deg: f64,
    /// Antenna phase centre in world coordinates. `None` places the radar at
    /// `reference_range` from the origin along the line of sight, so the
    /// scene centre maps to zero slant offset.
    pub radar_position: Option<[f64; 3]>,
    pub reference_range: f64,
    pub near: f64,
    pub far: f64,
    /// Target attitude (θx, θy, θz) in degrees, applied in the radar frame
    /// about the scene centre.
    pub euler_deg: [f64; 3],
    pub scale: f64,
}

impl Default for RadarView {
    fn default() -> Self {
        Self {
            incident_deg: 45.0,
            azimuth_deg: 0.0,
            radar_position: None,
            reference_range: 1000.0,
            near: 990.0,
            far: 1010.0,
            euler_deg: [0.0; 3],
            scale: 1.0,
        }
    }
}

impl RadarView {
    pub fn new(incident_deg: f64, azimuth_deg: f64) -> Self {
        Self {
            incident_deg,
            azimuth_deg,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.near < self.far) {
            return Err(Error::InvalidParameter(format!(
                "near plane {} must be closer than far plane {}",
                self.near, self.far
            )));
        }
        if !(self.scale > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "scale must be positive, got {}",
                self.scale
            )));
        }
        let finite = [
            self.incident_deg,
            self.azimuth_deg,
            self.reference_range,
            self.euler_deg[0],
            self.euler_deg[1],
            self.euler_deg[2],
        ]
        .iter()
        .all(|v| v.is_finite());
        if !finite {
            return Err(Error::InvalidParameter("non-finite view parameter".into()));
        }
        Ok(())
    }

    /// Rotation whose columns are the radar axes expressed in world
    /// coordinates.
    pub fn rotation_matrix(&self) -> Matrix3<f64> {
        rotation_from_angles(self.incident_deg.to_radians(), self.azimuth_deg.to_radians())
    }

    pub fn radar_position(&self) -> Vector3<f64> {
        match self.radar_position {
            Some(p) => Vector3::from(p),
            None => -self.reference_range * self.rotation_matrix().column(2).into_owned(),
        }
    }

    /// `Rᵀ (v - p_r)` without any pose applied.
    pub fn world_to_radar(&self, v: &Vector3<f64>) -> Vector3<f64> {
        self.rotation_matrix().transpose() * (v - self.radar_position())
    }

    pub fn radar_to_world(&self, v_r: &Vector3<f64>) -> Vector3<f64> {
        self.rotation_matrix() * v_r + self.radar_position()
    }

    pub fn euler_matrix(&self) -> Matrix3<f64> {
        euler_matrix(self.euler_deg[0], self.euler_deg[1], self.euler_deg[2])
    }

    /// Affine map from world vertices to the radar frame including the
    /// target pose: `v_r = scale · R_e · Rᵀ · v - Rᵀ · p_r`.
    pub fn pose_transform(&self) -> PoseTransform {
        let r = self.rotation_matrix();
        let translation = match self.radar_position {
            // exact: Rᵀ·(f·R e₃) = f·e₃
            None => Vector3::new(0.0, 0.0, self.reference_range),
            Some(p) => -(r.transpose() * Vector3::from(p)),
        };
        PoseTransform {
            linear: self.scale * self.euler_matrix() * r.transpose(),
            translation,
        }
    }
}

/// `v ↦ linear · v + translation`
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoseTransform {
    pub linear: Matrix3<f64>,
    pub translation: Vector3<f64>,
}

impl PoseTransform {
    pub fn apply(&self, v: &Vector3<f64>) -> Vector3<f64> {
        self.linear * v + self.translation
    }
}

/// Radar rotation for incident angle `alpha` and azimuth `beta` (radians).
pub fn rotation_from_angles(alpha: f64, beta: f64) -> Matrix3<f64> {
    let (sa, ca) = alpha.sin_cos();
    let (sb, cb) = beta.sin_cos();
    Matrix3::new(
        -cb,
        -ca * sb,
        -sa * sb, //
        0.0,
        sa,
        -ca, //
        sb,
        -ca * cb,
        -sa * cb,
    )
}

/// Partial derivatives of [`rotation_from_angles`] with respect to
/// `alpha` and `beta`.
pub fn rotation_derivatives(alpha: f64, beta: f64) -> (Matrix3<f64>, Matrix3<f64>) {
    let (sa, ca) = alpha.sin_cos();
    let (sb, cb) = beta.sin_cos();
    let d_alpha = Matrix3::new(
        0.0,
        sa * sb,
        -ca * sb, //
        0.0,
        ca,
        sa, //
        0.0,
        sa * cb,
        -ca * cb,
    );
    let d_beta = Matrix3::new(
        sb,
        -ca * cb,
        -sa * cb, //
        0.0,
        0.0,
        0.0, //
        cb,
        ca * sb,
        sa * sb,
    );
    (d_alpha, d_beta)
}

pub fn rot_x(theta: f64) -> Matrix3<f64> {
    let (s, c) = theta.sin_cos();
    Matrix3::new(1.0, 0.0, 0.0, 0.0, c, s, 0.0, -s, c)
}

pub fn rot_y(theta: f64) -> Matrix3<f64> {
    let (s, c) = theta.sin_cos();
    Matrix3::new(c, 0.0, -s, 0.0, 1.0, 0.0, s, 0.0, c)
}

pub fn rot_z(theta: f64) -> Matrix3<f64> {
    let (s, c) = theta.sin_cos();
    Matrix3::new(c, s, 0.0, -s, c, 0.0, 0.0, 0.0, 1.0)
}

fn d_rot_x(theta: f64) -> Matrix3<f64> {
    let (s, c) = theta.sin_cos();
    Matrix3::new(0.0, 0.0, 0.0, 0.0, -s, c, 0.0, -c, -s)
}

fn d_rot_y(theta: f64) -> Matrix3<f64> {
    let (s, c) = theta.sin_cos();
    Matrix3::new(-s, 0.0, -c, 0.0, 0.0, 0.0, c, 0.0, -s)
}

fn d_rot_z(theta: f64) -> Matrix3<f64> {
    let (s, c) = theta.sin_cos();
    Matrix3::new(-s, c, 0.0, -c, -s, 0.0, 0.0, 0.0, 0.0)
}

/// `R_y(θy) · R_x(θx) · R_z(θz)`, angles in degrees.
pub fn euler_matrix(theta_x_deg: f64, theta_y_deg: f64, theta_z_deg: f64) -> Matrix3<f64> {
    rot_y(theta_y_deg.to_radians()) * rot_x(theta_x_deg.to_radians()) * rot_z(theta_z_deg.to_radians())
}

/// Derivatives of the Euler matrix with respect to θx, θy, θz (per radian).
pub fn euler_derivatives(theta_deg: [f64; 3]) -> [Matrix3<f64>; 3] {
    let [tx, ty, tz] = theta_deg.map(f64::to_radians);
    let (rx, ry, rz) = (rot_x(tx), rot_y(ty), rot_z(tz));
    [ry * d_rot_x(tx) * rz, d_rot_y(ty) * rx * rz, ry * rx * d_rot_z(tz)]
}

/// Maps a radar-frame point to the mapping plane: `(x, 0, √(y²+z²) - f)`.
pub fn slant_range_transform(v_r: &Vector3<f64>, reference_range: f64) -> Vector3<f64> {
    Vector3::new(v_r.x, 0.0, v_r.y.hypot(v_r.z) - reference_range)
}

/// Discretisation of the mapping plane (`nz` × `nx`) and the projection
/// plane (`ny` × `nx`). Cell sizes are in metres.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub nx: usize,
    pub nz: usize,
    pub ny: usize,
    /// Slant-range cell size.
    pub rz: f64,
    /// Projection cell size along radar `y`.
    pub ry: f64,
    /// Azimuth cell size.
    pub raz: f64,
}

impl GridSpec {
    /// Continuous column coordinate; column `l` has its centre at `l + 0.5`.
    pub fn col_coord(&self, x: f64) -> f64 {
        x / self.raz + self.nx as f64 / 2.0
    }

    /// Continuous mapping-row coordinate of a slant offset `ẑ`.
    pub fn row_coord(&self, z_hat: f64) -> f64 {
        z_hat / self.rz + self.nz as f64 / 2.0
    }

    /// Continuous projection-row coordinate of a radar-frame `y`.
    pub fn proj_row_coord(&self, y: f64) -> f64 {
        y / self.ry + self.ny as f64 / 2.0
    }

    /// Slant offset `ẑ` of mapping row `k`'s centre.
    pub fn row_center(&self, k: usize) -> f64 {
        (k as f64 + 0.5 - self.nz as f64 / 2.0) * self.rz
    }

    pub fn col_center(&self, l: usize) -> f64 {
        (l as f64 + 0.5 - self.nx as f64 / 2.0) * self.raz
    }

    pub fn proj_row_center(&self, i: usize) -> f64 {
        (i as f64 + 0.5 - self.ny as f64 / 2.0) * self.ry
    }

    pub fn pixel_count(&self) -> usize {
        self.nx * self.nz
    }

    pub fn validate(&self) -> Result<()> {
        if self.nx == 0 || self.nz == 0 || self.ny == 0 {
            return Err(Error::InvalidParameter("grid counts must be at least 1".into()));
        }
        if !(self.rz > 0.0 && self.ry > 0.0 && self.raz > 0.0) {
            return Err(Error::InvalidParameter("grid cell sizes must be positive".into()));
        }
        Ok(())
    }
}

/// Builds the grid for a view: `R_y = R_z·cot|α|`, `N_y = ⌈N_z·tan|α|⌉`,
/// azimuth cells square with slant cells.
pub fn grid_from_view(nx: usize, nz: usize, rz: f64, view: &RadarView) -> Result<GridSpec> {
    let alpha = view.incident_deg.abs();
    if !(alpha > 0.0 && alpha < 90.0) {
        return Err(Error::InvalidParameter(format!(
            "incident angle {}° must satisfy 0° < |α| < 90°",
            view.incident_deg
        )));
    }
    if nx == 0 || nz == 0 || !(rz > 0.0) {
        return Err(Error::InvalidParameter(
            "grid needs positive counts and cell size".into(),
        ));
    }
    let tan = alpha.to_radians().tan();
    let raw = nz as f64 * tan;
    // absorb one-ulp noise so exact products (e.g. tan 45°) do not round up
    let ny = ((raw - raw * 1e-12).ceil() as usize).max(1);
    Ok(GridSpec {
        nx,
        nz,
        ny,
        rz,
        ry: rz / tan,
        raz: rz,
    })
}

/// Mapping-plane size shared by every view of a scene; the projection plane
/// is derived per view from the incident angle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ImageSize {
    pub nx: usize,
    pub nz: usize,
    /// Slant-range (and azimuth) cell size in metres.
    pub rz: f64,
}

impl Default for ImageSize {
    fn default() -> Self {
        Self {
            nx: 128,
            nz: 128,
            rz: 3.0 / 128.0,
        }
    }
}

impl ImageSize {
    pub fn grid_for(&self, view: &RadarView) -> Result<GridSpec> {
        grid_from_view(self.nx, self.nz, self.rz, view)
    }

    pub fn pixel_count(&self) -> usize {
        self.nx * self.nz
    }
}

/// ISAR azimuth and range resolutions `(r_a, r_r)` in metres for centre
/// frequency `fc` (Hz), bandwidth `bandwidth` (Hz) and angular aperture
/// `aperture` (radians).
pub fn isar_resolution(fc: f64, bandwidth: f64, aperture: f64) -> Result<(f64, f64)> {
    if !(fc > 0.0 && bandwidth > 0.0 && aperture > 0.0) {
        return Err(Error::InvalidParameter(
            "ISAR frequency, bandwidth and aperture must be positive".into(),
        ));
    }
    Ok((
        SPEED_OF_LIGHT / (2.0 * fc * aperture),
        SPEED_OF_LIGHT / (2.0 * bandwidth),
    ))
}
