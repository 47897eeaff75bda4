//! Loss terms and their gradients: silhouette IoU, L1 texture, Laplacian
//! smoothness and dihedral flatness, and their weighted combination.

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::{laplacian_transpose_apply, MeshTopology, TriangleMesh};

/// Perpendicular feet closer than this to the shared edge skip the term.
pub const FLATNESS_EPSILON: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LossWeights {
    /// Texture (L1) weight.
    pub texture: f64,
    /// Laplacian smoothness weight.
    pub laplacian: f64,
    /// Flatness weight.
    pub flatness: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        Self {
            texture: 1.0,
            laplacian: 0.03,
            flatness: 0.003,
        }
    }
}

impl LossWeights {
    pub fn validate(&self) -> Result<()> {
        for (name, w) in [
            ("texture", self.texture),
            ("laplacian", self.laplacian),
            ("flatness", self.flatness),
        ] {
            if !(w >= 0.0) || !w.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "{name} weight must be non-negative, got {w}"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LossMode {
    /// Silhouette, texture and both regularisers.
    #[default]
    Full,
    /// Texture term dropped; scattering is not optimised.
    SilhouetteOnly,
}

fn same_len(a: &[f64], b: &[f64]) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::ShapeMismatch(format!(
            "images have {} and {} pixels",
            a.len(),
            b.len()
        )));
    }
    Ok(())
}

/// `1 - Σ p·t / Σ (p + t - p·t)` and its gradient with respect to `pred`.
/// Two empty images give zero loss.
pub fn loss_silhouette(pred: &[f64], truth: &[f64]) -> Result<(f64, Vec<f64>)> {
    same_len(pred, truth)?;
    let inter: f64 = pred.iter().zip(truth).map(|(p, t)| p * t).sum();
    let union: f64 = pred.iter().zip(truth).map(|(p, t)| p + t - p * t).sum();
    if union <= 0.0 {
        return Ok((0.0, vec![0.0; pred.len()]));
    }
    let grad = truth
        .iter()
        .map(|t| -(t * union - inter * (1.0 - t)) / (union * union))
        .collect();
    Ok((1.0 - inter / union, grad))
}

/// `Σ |pred - truth|` with gradient `sign(pred - truth)` (zero at ties).
pub fn loss_texture(pred: &[f64], truth: &[f64]) -> Result<(f64, Vec<f64>)> {
    same_len(pred, truth)?;
    let mut total = 0.0;
    let grad = pred
        .iter()
        .zip(truth)
        .map(|(p, t)| {
            let d = p - t;
            total += d.abs();
            if d > 0.0 {
                1.0
            } else if d < 0.0 {
                -1.0
            } else {
                0.0
            }
        })
        .collect();
    Ok((total, grad))
}

/// `Σ_i |L v_i|²` with gradient `2 Lᵀ L V`.
pub fn loss_laplacian(mesh: &TriangleMesh, topo: &MeshTopology) -> (f64, Vec<Vector3<f64>>) {
    let lv = crate::mesh::laplacian_apply(mesh, topo);
    let value = lv.iter().map(|r| r.norm_squared()).sum();
    let doubled: Vec<Vector3<f64>> = lv.iter().map(|r| r * 2.0).collect();
    (value, laplacian_transpose_apply(&doubled, topo))
}

/// `Σ_edges (1 + cos θ)²` where θ is the angle between the perpendiculars
/// dropped from the two opposite vertices onto the shared edge.
pub fn loss_flatness(mesh: &TriangleMesh, topo: &MeshTopology) -> (f64, Vec<Vector3<f64>>) {
    let mut value = 0.0;
    let mut grad = vec![Vector3::zeros(); mesh.vertex_count()];
    for pair in &topo.shared_edge_pairs {
        let [i1, i2] = pair.edge;
        let (v1, v2) = (mesh.vertices[i1], mesh.vertices[i2]);
        let (v3, v4) = (mesh.vertices[pair.opposite_a], mesh.vertices[pair.opposite_b]);
        let e = v2 - v1;
        let n = e.norm_squared();
        if n < FLATNESS_EPSILON * FLATNESS_EPSILON {
            continue;
        }
        let perp = |w: Vector3<f64>| w - e * (w.dot(&e) / n);
        let (w3, w4) = (v3 - v1, v4 - v1);
        let (a, b) = (perp(w3), perp(w4));
        let (la, lb) = (a.norm(), b.norm());
        if la < FLATNESS_EPSILON || lb < FLATNESS_EPSILON {
            continue;
        }
        let cos = a.dot(&b) / (la * lb);
        value += (1.0 + cos).powi(2);
        let dl_dcos = 2.0 * (1.0 + cos);
        let ga = (b / (la * lb) - a * (cos / (la * la))) * dl_dcos;
        let gb = (a / (la * lb) - b * (cos / (lb * lb))) * dl_dcos;

        let p = Matrix3::identity() - e * e.transpose() / n;
        // ∂/∂e of w - e (w·e)/n, contracted with g
        let de = |w: Vector3<f64>, g: Vector3<f64>| {
            let (c, eg) = (w.dot(&e), e.dot(&g));
            -(w * (eg / n) + g * (c / n) - e * (2.0 * c * eg / (n * n)))
        };
        let (pa, pb) = (p * ga, p * gb);
        let d_e = de(w3, ga) + de(w4, gb);
        grad[pair.opposite_a] += pa;
        grad[pair.opposite_b] += pb;
        grad[i1] -= pa + pb + d_e;
        grad[i2] += d_e;
    }
    (value, grad)
}

/// Individual loss values, unweighted.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LossTerms {
    pub silhouette: f64,
    pub texture: f64,
    pub laplacian: f64,
    pub flatness: f64,
}

impl LossTerms {
    pub fn total(&self, w: &LossWeights, mode: LossMode) -> f64 {
        let tex = match mode {
            LossMode::Full => w.texture * self.texture,
            LossMode::SilhouetteOnly => 0.0,
        };
        self.silhouette + tex + w.laplacian * self.laplacian + w.flatness * self.flatness
    }
}

/// Weighted loss with gradients routed to the rendered images and the mesh.
#[derive(Debug, Clone, PartialEq)]
pub struct HybridLoss {
    pub terms: LossTerms,
    pub total: f64,
    /// `∂L/∂I_sil`.
    pub d_silhouette: Vec<f64>,
    /// `∂L/∂I_sar`; `None` in silhouette-only mode.
    pub d_sar: Option<Vec<f64>>,
    /// Regulariser gradients with respect to vertex positions.
    pub d_vertices: Vec<Vector3<f64>>,
}

/// Predicted or observed images for one view.
#[derive(Debug, Clone, Copy)]
pub struct ImagePair<'a> {
    pub silhouette: &'a [f64],
    pub sar: Option<&'a [f64]>,
}

/// `L_sil + λ1 L_tex + λ2 L_lap + λ3 L_flat`; the texture term is dropped in
/// silhouette-only mode or when either SAR image is missing.
pub fn hybrid_loss(
    pred: ImagePair<'_>,
    truth: ImagePair<'_>,
    mesh: &TriangleMesh,
    topo: &MeshTopology,
    weights: &LossWeights,
    mode: LossMode,
) -> Result<HybridLoss> {
    weights.validate()?;
    let (sil, d_silhouette) = loss_silhouette(pred.silhouette, truth.silhouette)?;
    let mut terms = LossTerms {
        silhouette: sil,
        ..Default::default()
    };
    let d_sar = match (mode, pred.sar, truth.sar) {
        (LossMode::Full, Some(p), Some(t)) => {
            let (tex, g) = loss_texture(p, t)?;
            terms.texture = tex;
            Some(g.into_iter().map(|x| x * weights.texture).collect())
        }
        _ => None,
    };
    let mut d_vertices = vec![Vector3::zeros(); mesh.vertex_count()];
    if weights.laplacian > 0.0 {
        let (v, g) = loss_laplacian(mesh, topo);
        terms.laplacian = v;
        for (d, x) in d_vertices.iter_mut().zip(g) {
            *d += x * weights.laplacian;
        }
    }
    if weights.flatness > 0.0 {
        let (v, g) = loss_flatness(mesh, topo);
        terms.flatness = v;
        for (d, x) in d_vertices.iter_mut().zip(g) {
            *d += x * weights.flatness;
        }
    }
    let total = terms.total(weights, mode);
    if !total.is_finite() {
        return Err(Error::NonFinite(format!("loss evaluated to {total}")));
    }
    Ok(HybridLoss {
        terms,
        total,
        d_silhouette,
        d_sar,
        d_vertices,
    })
}

/// Intersection over union of two silhouettes binarised at 0.5. Two empty
/// masks score 1.
pub fn silhouette_iou(a: &[f64], b: &[f64]) -> Result<f64> {
    same_len(a, b)?;
    let (mut inter, mut union) = (0usize, 0usize);
    for (x, y) in a.iter().zip(b) {
        let (p, q) = (*x > 0.5, *y > 0.5);
        inter += (p && q) as usize;
        union += (p || q) as usize;
    }
    Ok(if union == 0 { 1.0 } else { inter as f64 / union as f64 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grad::finite_difference_oracle;
    use crate::mesh::icosphere;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    fn rng(seed: u64) -> rand_chacha::ChaCha8Rng {
        rand_chacha::ChaCha8Rng::seed_from_u64(seed)
    }

    fn set_vertices(mesh: &TriangleMesh, x: &[f64]) -> TriangleMesh {
        let mut m = mesh.clone();
        for (v, c) in m.vertices.iter_mut().zip(x.chunks(3)) {
            *v = Vector3::new(c[0], c[1], c[2]);
        }
        m
    }

    fn flat(mesh: &TriangleMesh) -> Vec<f64> {
        mesh.vertices.iter().flat_map(|v| [v.x, v.y, v.z]).collect()
    }

    fn bumpy_sphere(seed: u64) -> TriangleMesh {
        let mut m = icosphere(1, 1.0).unwrap();
        let mut r = rng(seed);
        for v in &mut m.vertices {
            *v *= 1.0 + r.random_range(-0.2..0.2);
        }
        m
    }

    #[test]
    fn silhouette_examples() {
        let t = [1.0, 1.0, 0.0, 0.0];
        assert_eq!(loss_silhouette(&t, &t).unwrap().0, 0.0);
        assert_eq!(loss_silhouette(&[0.0, 0.0, 1.0, 1.0], &t).unwrap().0, 1.0);
        let half: Vec<f64> = t.iter().map(|x| 0.5 * x).collect();
        assert!((loss_silhouette(&half, &t).unwrap().0 - 0.5).abs() < 1e-15);
        let (l, g) = loss_silhouette(&[0.0; 4], &[0.0; 4]).unwrap();
        assert_eq!(l, 0.0);
        assert!(g.iter().all(|&x| x == 0.0));
        assert!(loss_silhouette(&[0.0; 3], &[0.0; 4]).is_err());
    }

    #[test]
    fn silhouette_gradient_matches_finite_differences() {
        let mut r = rng(1);
        let truth: Vec<f64> = (0..50).map(|_| r.random_range(0.0..1.0)).collect();
        let pred: Vec<f64> = (0..50).map(|_| r.random_range(0.0..1.0)).collect();
        let (_, g) = loss_silhouette(&pred, &truth).unwrap();
        let fd = finite_difference_oracle(|p| loss_silhouette(p, &truth).unwrap().0, &pred, 1e-6);
        for (a, b) in g.iter().zip(&fd) {
            assert!((a - b).abs() < 1e-3 * (b.abs() + 1e-6));
        }
    }

    #[test]
    fn texture_examples() {
        let mut r = rng(2);
        let a: Vec<f64> = (0..64).map(|_| r.random_range(0.0..2.0)).collect();
        let b: Vec<f64> = (0..64).map(|_| r.random_range(0.0..2.0)).collect();
        assert_eq!(loss_texture(&a, &a).unwrap().0, 0.0);
        let shifted: Vec<f64> = a.iter().map(|x| x + 0.25).collect();
        assert!((loss_texture(&shifted, &a).unwrap().0 - 16.0).abs() < 1e-12);
        let mut oracle = 0.0;
        for i in 0..64 {
            oracle += (a[i] - b[i]).abs();
        }
        let (l, g) = loss_texture(&a, &b).unwrap();
        assert_eq!(l, oracle);
        assert_eq!(g[0], (a[0] - b[0]).signum());
        assert_eq!(loss_texture(&[1.0], &[1.0]).unwrap().1, vec![0.0]);
    }

    #[test]
    fn laplacian_loss_gradient_and_invariance() {
        let m = bumpy_sphere(3);
        let topo = MeshTopology::build(&m);
        let (value, g) = loss_laplacian(&m, &topo);
        let fd = finite_difference_oracle(|x| loss_laplacian(&set_vertices(&m, x), &topo).0, &flat(&m), 1e-6);
        let analytic: Vec<f64> = g.iter().flat_map(|v| [v.x, v.y, v.z]).collect();
        for (a, b) in analytic.iter().zip(&fd) {
            assert!((a - b).abs() < 1e-6 * (b.abs() + 1e-6) + 1e-8, "{a} vs {b}");
        }
        let moved = m.translated(Vector3::new(3.0, -1.0, 2.0));
        assert!((loss_laplacian(&moved, &topo).0 - value).abs() < 1e-10);
    }

    #[test]
    fn laplacian_row_vanishes_at_neighbour_centroid() {
        let v = vec![
            Vector3::new(0.0, 0.0, 0.0),
            Vector3::new(1.0, 0.0, 0.0),
            Vector3::new(0.0, 1.0, 0.0),
            Vector3::new(-1.0, 0.0, 0.0),
            Vector3::new(0.0, -1.0, 0.0),
        ];
        let f = vec![[0, 1, 2], [0, 2, 3], [0, 3, 4], [0, 4, 1]];
        let m = TriangleMesh::with_unit_scattering(v, f).unwrap();
        let topo = MeshTopology::build(&m);
        let rows = crate::mesh::laplacian_apply(&m, &topo);
        assert_eq!(rows[0], Vector3::zeros());
        let rim: f64 = rows[1..].iter().map(|r| r.norm_squared()).sum();
        assert!((loss_laplacian(&m, &topo).0 - rim).abs() < 1e-15);
    }

    fn hinge(angle: f64) -> TriangleMesh {
        // shared edge along z, one wing along +x, the other rotated by angle
        let v = vec![
            Vector3::new(0.0, 0.0, 0.0),
            Vector3::new(0.0, 0.0, 1.0),
            Vector3::new(1.0, 0.0, 0.5),
            Vector3::new(angle.cos(), angle.sin(), 0.3),
        ];
        TriangleMesh::with_unit_scattering(v, vec![[0, 1, 2], [1, 0, 3]]).unwrap()
    }

    #[test]
    fn flatness_examples() {
        let eval = |angle: f64| {
            let m = hinge(angle);
            loss_flatness(&m, &MeshTopology::build(&m)).0
        };
        assert!(eval(std::f64::consts::PI).abs() < 1e-15);
        assert!((eval(std::f64::consts::FRAC_PI_2) - 1.0).abs() < 1e-12);
        assert!((eval(1e-9) - 4.0).abs() < 1e-9);
    }

    #[test]
    fn flatness_skips_degenerate_feet() {
        let mut m = hinge(1.0);
        let topo = MeshTopology::build(&m);
        m.vertices[3] = Vector3::new(0.0, 0.0, 2.0);
        let (value, g) = loss_flatness(&m, &topo);
        assert_eq!(value, 0.0);
        assert!(g.iter().all(|x| x.iter().all(|c| c.is_finite())));
    }

    #[test]
    fn flatness_gradient_matches_finite_differences() {
        let m = bumpy_sphere(5);
        let topo = MeshTopology::build(&m);
        let (_, g) = loss_flatness(&m, &topo);
        let fd = finite_difference_oracle(|x| loss_flatness(&set_vertices(&m, x), &topo).0, &flat(&m), 1e-6);
        let analytic: Vec<f64> = g.iter().flat_map(|v| [v.x, v.y, v.z]).collect();
        for (a, b) in analytic.iter().zip(&fd) {
            assert!((a - b).abs() < 1e-3 * (b.abs() + 1e-6), "{a} vs {b}");
        }
    }

    #[test]
    fn hybrid_routes_terms() {
        let m = bumpy_sphere(7);
        let topo = MeshTopology::build(&m);
        let pred_sil = [0.2, 0.9, 0.4];
        let truth_sil = [0.0, 1.0, 1.0];
        let pred = ImagePair {
            silhouette: &pred_sil,
            sar: Some(&[1.0, 2.0, 3.0]),
        };
        let truth = ImagePair {
            silhouette: &truth_sil,
            sar: Some(&[1.5, 2.0, 2.0]),
        };
        let w = LossWeights::default();
        assert_eq!((w.texture, w.laplacian, w.flatness), (1.0, 0.03, 0.003));

        let full = hybrid_loss(pred, truth, &m, &topo, &w, LossMode::Full).unwrap();
        let t = full.terms;
        assert!((full.total - (t.silhouette + t.texture + 0.03 * t.laplacian + 0.003 * t.flatness)).abs() < 1e-12);
        assert_eq!(full.d_sar.as_deref(), Some(&[-1.0, 0.0, 1.0][..]));

        let only_lap = LossWeights {
            texture: 0.0,
            laplacian: 0.5,
            flatness: 0.0,
        };
        let sil_only = ImagePair {
            silhouette: &truth_sil,
            sar: None,
        };
        let h = hybrid_loss(sil_only, sil_only, &m, &topo, &only_lap, LossMode::Full).unwrap();
        assert!((h.total - 0.5 * loss_laplacian(&m, &topo).0).abs() < 1e-12);

        let other = ImagePair {
            silhouette: &pred_sil,
            sar: Some(&[100.0, -4.0, 0.0]),
        };
        let a = hybrid_loss(pred, truth, &m, &topo, &w, LossMode::SilhouetteOnly).unwrap();
        let b = hybrid_loss(other, truth, &m, &topo, &w, LossMode::SilhouetteOnly).unwrap();
        assert_eq!(a.total, b.total);
        assert!(a.d_sar.is_none());
    }

    #[test]
    fn binary_iou() {
        assert_eq!(silhouette_iou(&[1.0, 1.0, 0.0], &[1.0, 0.0, 0.0]).unwrap(), 0.5);
        assert_eq!(silhouette_iou(&[0.0; 3], &[0.0; 3]).unwrap(), 1.0);
    }

    proptest! {
        #[test]
        fn silhouette_loss_properties(v in proptest::collection::vec((0.0f64..1.0, 0.0f64..1.0), 1..40)) {
            let a: Vec<f64> = v.iter().map(|x| x.0).collect();
            let b: Vec<f64> = v.iter().map(|x| x.1).collect();
            let lab = loss_silhouette(&a, &b).unwrap().0;
            let lba = loss_silhouette(&b, &a).unwrap().0;
            prop_assert!((lab - lba).abs() < 1e-12);
            prop_assert!((-1e-12..=1.0 + 1e-12).contains(&lab));
            let laa = loss_silhouette(&a, &a).unwrap().0;
            // soft self-overlap is below one unless the image is binary
            prop_assert!((0.0..=1.0).contains(&laa));
        }

        #[test]
        fn regularisers_are_rigid_invariant(ax in -3.0f64..3.0, ay in -3.0f64..3.0, t in -5.0f64..5.0, s in 0.2f64..5.0) {
            let m = bumpy_sphere(9);
            let topo = MeshTopology::build(&m);
            let rot = nalgebra::Rotation3::from_euler_angles(ax, ay, 0.3);
            let mut moved = m.clone();
            for v in &mut moved.vertices {
                *v = rot * *v + Vector3::new(t, -t, 0.5 * t);
            }
            let (l0, f0) = (loss_laplacian(&m, &topo).0, loss_flatness(&m, &topo).0);
            prop_assert!((loss_laplacian(&moved, &topo).0 - l0).abs() < 1e-9 * (1.0 + l0));
            prop_assert!((loss_flatness(&moved, &topo).0 - f0).abs() < 1e-9 * (1.0 + f0));
            let mut scaled = m.clone();
            for v in &mut scaled.vertices {
                *v *= s;
            }
            prop_assert!((loss_flatness(&scaled, &topo).0 - f0).abs() < 1e-9 * (1.0 + f0));
        }
    }
}
