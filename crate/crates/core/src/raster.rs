//! Soft rasterization primitives: barycentric coordinates, point-to-triangle
//! distance, facet occupation probability and normalised depth.
//!
//! All 2D quantities are in cell units of the plane being rasterized, so
//! `sigma` is independent of the physical cell size.

use nalgebra::Vector2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Projected facets with doubled area below this (cell units²) occupy nothing.
pub const DEGENERATE_AREA_2D: f64 = 1e-12;

/// Occupation probabilities below this are treated as exactly zero. This
/// also bounds the footprint of a facet, see [`RenderParams::cull_radius`].
pub const DELTA_CUTOFF: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RenderParams {
    /// Sharpness of the occupation probability (cell units²).
    pub sigma: f64,
    /// Occlusion softness on normalised depth.
    pub gamma: f64,
    /// Standard deviation of the range energy spread (slant cells).
    pub sigma_g: f64,
}

impl Default for RenderParams {
    fn default() -> Self {
        Self {
            sigma: 1e-5,
            gamma: 1e-5,
            sigma_g: 0.5,
        }
    }
}

impl RenderParams {
    pub fn new(sigma: f64, gamma: f64, sigma_g: f64) -> Self {
        Self { sigma, gamma, sigma_g }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("sigma", self.sigma), ("gamma", self.gamma), ("sigma_g", self.sigma_g)] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be positive and finite, got {v}"
                )));
            }
        }
        Ok(())
    }

    /// Distance outside a facet beyond which its probability is below
    /// [`DELTA_CUTOFF`].
    pub fn cull_radius(&self) -> f64 {
        (self.sigma * (1.0 / DELTA_CUTOFF - 1.0).ln()).sqrt()
    }
}

/// A facet projected onto a plane, in cell units, with the depth of each
/// vertex along the viewing direction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FacetScreen2D {
    pub verts: [Vector2<f64>; 3],
    pub depths: [f64; 3],
}

/// Result of the closest-edge search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeDistance {
    /// Squared distance to the closest point on the boundary.
    pub d2: f64,
    /// `+1` inside (or on) the triangle, `-1` outside.
    pub sign: f64,
    /// Index `k` of the closest edge `v_k -> v_{k+1}`.
    pub edge: usize,
    /// Clamped position of the closest point along that edge.
    pub u: f64,
    /// `closest point - p`.
    pub offset: Vector2<f64>,
}

impl EdgeDistance {
    pub fn distance(&self) -> f64 {
        self.d2.sqrt()
    }
}

impl FacetScreen2D {
    pub fn new(verts: [Vector2<f64>; 3], depths: [f64; 3]) -> Self {
        Self { verts, depths }
    }

    pub fn flat(verts: [Vector2<f64>; 3]) -> Self {
        Self {
            verts,
            depths: [1.0; 3],
        }
    }

    /// Twice the signed area.
    pub fn double_area(&self) -> f64 {
        let [a, b, c] = self.verts;
        (b - a).perp(&(c - a))
    }

    pub fn is_degenerate(&self) -> bool {
        self.double_area().abs() < DEGENERATE_AREA_2D
    }

    /// `(min, max)` corners of the vertex bounding box.
    pub fn bbox(&self) -> (Vector2<f64>, Vector2<f64>) {
        let [a, b, c] = self.verts;
        (a.inf(&b).inf(&c), a.sup(&b).sup(&c))
    }

    /// Barycentric coordinates of `p`; `None` for a degenerate facet.
    pub fn barycentric(&self, p: &Vector2<f64>) -> Option<[f64; 3]> {
        let area = self.double_area();
        if area.abs() < DEGENERATE_AREA_2D {
            return None;
        }
        let [a, b, c] = self.verts;
        let b0 = (c - b).perp(&(p - b)) / area;
        let b1 = (a - c).perp(&(p - c)) / area;
        Some([b0, b1, 1.0 - b0 - b1])
    }

    /// Closest point on the facet boundary. Ties between edges go to the
    /// lowest edge index.
    pub fn edge_distance(&self, p: &Vector2<f64>) -> Option<EdgeDistance> {
        let bary = self.barycentric(p)?;
        let sign = if bary.iter().all(|&b| b >= 0.0) { 1.0 } else { -1.0 };
        let mut best: Option<EdgeDistance> = None;
        for k in 0..3 {
            let a = self.verts[k];
            let b = self.verts[(k + 1) % 3];
            let e = b - a;
            let u = ((p - a).dot(&e) / e.dot(&e)).clamp(0.0, 1.0);
            let offset = a + e * u - p;
            let d2 = offset.norm_squared();
            if best.is_none_or(|cur| d2 < cur.d2) {
                best = Some(EdgeDistance {
                    d2,
                    sign,
                    edge: k,
                    u,
                    offset,
                });
            }
        }
        best
    }

    /// Unsigned distance and inside/outside sign.
    pub fn point_triangle_distance(&self, p: &Vector2<f64>) -> Option<(f64, f64)> {
        self.edge_distance(p).map(|e| (e.distance(), e.sign))
    }

    /// Occupation probability at `p`, zero for degenerate facets and below
    /// the cutoff.
    pub fn probability(&self, p: &Vector2<f64>, sigma: f64) -> f64 {
        match self.edge_distance(p) {
            Some(e) => cutoff(sigmoid(e.sign * e.d2 / sigma)),
            None => 0.0,
        }
    }

    /// Probability and its gradient with respect to each projected vertex.
    /// The clamp on the edge parameter is treated as constant.
    pub fn probability_with_grad(&self, p: &Vector2<f64>, sigma: f64) -> (f64, [Vector2<f64>; 3]) {
        let c = self.coverage(p, sigma);
        (c.delta, c.grad)
    }

    /// Probability, its complement and its vertex gradient in one pass.
    pub fn coverage(&self, p: &Vector2<f64>, sigma: f64) -> Coverage {
        let Some(e) = self.edge_distance(p) else {
            return Coverage::EMPTY;
        };
        let x = e.sign * e.d2 / sigma;
        // same values as sigmoid(x) and sigmoid(-x) with a single exp
        let t = (-x.abs()).exp();
        let (delta, complement) = if x >= 0.0 {
            (1.0 / (1.0 + t), t / (1.0 + t))
        } else {
            (t / (1.0 + t), 1.0 / (1.0 + t))
        };
        if delta < DELTA_CUTOFF {
            return Coverage::EMPTY;
        }
        // dδ/dx = δ(1-δ)
        let slope = delta * complement * e.sign / sigma;
        // d(d²)/dv_k = 2 r (1-u), d(d²)/dv_{k+1} = 2 r u, r = closest - p
        let mut grad = [Vector2::zeros(); 3];
        grad[e.edge] = e.offset * (2.0 * (1.0 - e.u) * slope);
        grad[(e.edge + 1) % 3] = e.offset * (2.0 * e.u * slope);
        Coverage {
            delta,
            complement,
            grad,
        }
    }
}

/// Soft coverage of one point by one facet.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coverage {
    pub delta: f64,
    /// `1 - delta`, accurate when `delta` is close to one.
    pub complement: f64,
    /// `∂delta/∂vertex` for the three projected vertices.
    pub grad: [Vector2<f64>; 3],
}

impl Coverage {
    pub const EMPTY: Coverage = Coverage {
        delta: 0.0,
        complement: 1.0,
        grad: [Vector2::new(0.0, 0.0); 3],
    };
}

/// Numerically safe logistic function.
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn cutoff(delta: f64) -> f64 {
    if delta < DELTA_CUTOFF {
        0.0
    } else {
        delta
    }
}

/// `sigmoid(sign · d² / σ)`, saturating to 0 or 1 for large arguments.
pub fn facet_probability(d: f64, sign: f64, sigma: f64) -> f64 {
    sigmoid(sign * d * d / sigma)
}

/// Probability of the complement, `1 - δ`, evaluated without cancellation.
pub fn facet_probability_complement(d: f64, sign: f64, sigma: f64) -> f64 {
    sigmoid(-sign * d * d / sigma)
}

/// Harmonic depth interpolation and normalisation against the near/far
/// planes. Returns `(z_norm, Z)` where `z_norm = (far - Z) / (far - near)`.
pub fn normalized_depth(facet: &FacetScreen2D, bary: [f64; 3], near: f64, far: f64) -> Result<(f64, f64)> {
    if let Some(&z) = facet.depths.iter().find(|&&z| !(z > 0.0)) {
        return Err(Error::InvalidParameter(format!("vertex depth {z} must be positive")));
    }
    if !(near < far) {
        return Err(Error::InvalidParameter(format!(
            "near {near} must be less than far {far}"
        )));
    }
    Ok(normalized_depth_unchecked(&facet.depths, bary, near, far))
}

#[inline]
pub(crate) fn normalized_depth_unchecked(depths: &[f64; 3], bary: [f64; 3], near: f64, far: f64) -> (f64, f64) {
    let inv: f64 = bary.iter().zip(depths).map(|(b, z)| b / z).sum();
    let depth = 1.0 / inv;
    ((far - depth) / (far - near), depth)
}

/// Clamps barycentric coordinates onto the triangle (negative weights set to
/// zero, then renormalised). Used when interpolating depth for points just
/// outside a facet.
pub fn clip_barycentric(b: [f64; 3]) -> [f64; 3] {
    let c = b.map(|x| x.max(0.0));
    let s: f64 = c.iter().sum();
    if s > 0.0 {
        c.map(|x| x / s)
    } else {
        [1.0 / 3.0; 3]
    }
}
