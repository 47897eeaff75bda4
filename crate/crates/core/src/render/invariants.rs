use nalgebra::Vector3;
use proptest::prelude::*;

use super::*;
use crate::geometry::RadarView;
use crate::mesh::{triangle_soup, TriangleMesh};
use crate::raster::RenderParams;
use crate::testutil::{at_mapping, grid_for, jittered_sphere, radar_mesh};

fn view() -> RadarView {
    RadarView::new(45.0, 30.0)
}

fn params() -> RenderParams {
    RenderParams::default()
}

/// Mirror a mesh across the radar frame's `x = 0` plane.
fn mirrored(mesh: &TriangleMesh, view: &RadarView) -> TriangleMesh {
    let mut out = mesh.clone();
    for v in &mut out.vertices {
        let mut r = view.world_to_radar(v);
        r.x = -r.x;
        *v = view.radar_to_world(&r);
    }
    out
}

#[test]
fn empty_mesh_renders_zero() {
    let v = view();
    let grid = grid_for(&v, 16, 2.0);
    let (sar, cache) = render_sar(&TriangleMesh::empty(), &v, &grid, &params()).unwrap();
    assert!(sar.data.iter().all(|&x| x == 0.0));
    assert_eq!(cache.hit_ray_count(), 0);
    let sil = render_silhouette(&TriangleMesh::empty(), &v, &grid, &params()).unwrap();
    assert!(sil.data.iter().all(|&x| x == 0.0));
}

#[test]
fn small_facet_lights_its_own_cell() {
    let v = view();
    let grid = grid_for(&v, 32, 3.0);
    // centred on a projection ray as well as on a mapping cell
    let c = at_mapping(&v, &grid, 13.5, 17.5) + Vector3::new(0.0, 0.5 * grid.ry, 0.0);
    let (a, b, r) = (grid.raz, grid.ry, grid.rz);
    let verts = [
        c + Vector3::new(-0.3 * a, -0.3 * b, -0.3 * r),
        c + Vector3::new(0.3 * a, -0.3 * b, 0.0),
        c + Vector3::new(0.0, 0.3 * b, 0.3 * r),
    ];
    let mesh = radar_mesh(&v, &verts, vec![[0, 1, 2]]);
    let (img, cache) = render_sar(&mesh, &v, &grid, &params()).unwrap();
    let (mut best, mut at) = (0.0, (0, 0));
    for k in 0..grid.nz {
        for l in 0..grid.nx {
            if img.get(k, l) > best {
                best = img.get(k, l);
                at = (k, l);
            }
        }
    }
    assert!(best > 0.0);
    assert_eq!(at, (17, 13));
    let f0 = gaussian(0.0, params().sigma_g);
    assert!(cache.hit_ray_count() > 0);
    assert!(img.sum() <= cache.hit_ray_count() as f64 * f0 + 1e-12);
}

/// Two congruent facets tilted 45° to the line of sight, one `gap` behind
/// the other.
fn stacked_pair(v: &RadarView, gap: f64) -> TriangleMesh {
    let c = Vector3::new(0.0, 0.0, v.reference_range - 0.3);
    let d = Vector3::new(0.0, 1.0, 1.0).normalize();
    let tri = [
        c + Vector3::new(-0.5, 0.0, 0.0) - d * 0.4,
        c + Vector3::new(0.5, 0.0, 0.0) - d * 0.4,
        c + d * 0.5,
    ];
    let back = tri.map(|p| p + Vector3::new(0.0, 0.0, gap));
    let mut all = tri.to_vec();
    all.extend(back);
    radar_mesh(v, &all, vec![[0, 1, 2], [3, 4, 5]])
}

#[test]
fn occluded_facet_contributes_almost_nothing() {
    let v = view();
    let grid = grid_for(&v, 32, 3.0);
    let mut mesh = stacked_pair(&v, 4.0 * grid.rz);
    mesh.scattering = vec![1.0, 0.0];
    let front = render_sar(&mesh, &v, &grid, &params()).unwrap().0.sum();
    mesh.scattering = vec![0.0, 1.0];
    let back = render_sar(&mesh, &v, &grid, &params()).unwrap().0.sum();
    assert!(front > 1.0);
    assert!(back < 1e-3 * front, "front {front} back {back}");
}

#[test]
fn silhouette_single_and_double_cover() {
    let v = view();
    let grid = grid_for(&v, 16, 2.0);
    // pixel (8, 8) centre sits 0.5 cells outside the facet's edge u = 9
    let target = 0.3f64;
    let sigma = 0.25 / (1.0 / target - 1.0).ln();
    let p = RenderParams::new(sigma, 1e-5, 0.5);
    let pts = [
        at_mapping(&v, &grid, 9.0, 4.0),
        at_mapping(&v, &grid, 13.0, 8.5),
        at_mapping(&v, &grid, 9.0, 13.0),
    ];
    let mesh = radar_mesh(&v, &pts, vec![[0, 1, 2]]);
    let sil = render_silhouette(&mesh, &v, &grid, &p).unwrap();
    assert!((sil.get(8, 8) - 0.3).abs() < 1e-9, "{}", sil.get(8, 8));

    // two facets sharing the edge u = 8.5 through pixel (8, 8): 1 - 0.5²
    let pts = [
        at_mapping(&v, &grid, 8.5, 3.0),
        at_mapping(&v, &grid, 8.5, 13.0),
        at_mapping(&v, &grid, 12.0, 8.0),
        at_mapping(&v, &grid, 5.0, 8.0),
    ];
    let mesh = radar_mesh(&v, &pts, vec![[0, 2, 1], [0, 1, 3]]);
    let sil = render_silhouette(&mesh, &v, &grid, &params()).unwrap();
    assert!((sil.get(8, 8) - 0.75).abs() < 1e-9, "{}", sil.get(8, 8));
}

#[test]
fn silhouette_values_are_probabilities() {
    let v = view();
    let grid = grid_for(&v, 24, 3.0);
    let mesh = jittered_sphere(1, 0.8, 0.1, 3);
    let p = RenderParams::new(0.5, 1e-3, 0.5);
    let sil = render_silhouette(&mesh, &v, &grid, &p).unwrap();
    assert!(sil.data.iter().all(|&x| (0.0..=1.0).contains(&x)));
    assert!(sil.max() > 0.99);
}

#[test]
fn sar_is_linear_in_scattering() {
    let v = view();
    let grid = grid_for(&v, 32, 3.0);
    let mesh = jittered_sphere(2, 0.9, 0.05, 1);
    let a = render_sar(&mesh, &v, &grid, &params()).unwrap().0;
    let mut doubled = mesh.clone();
    doubled.scattering.iter_mut().for_each(|s| *s *= 2.0);
    let b = render_sar(&doubled, &v, &grid, &params()).unwrap().0;
    assert!(a.sum() > 0.0);
    for (x, y) in a.data.iter().zip(&b.data) {
        assert_eq!(2.0 * x, *y);
    }
}

#[test]
fn facet_order_does_not_matter() {
    let v = view();
    let grid = grid_for(&v, 32, 3.0);
    let mesh = jittered_sphere(2, 0.9, 0.05, 2);
    let mut perm = mesh.clone();
    let n = mesh.facet_count();
    let order: Vec<usize> = (0..n).map(|j| (j * 37 + 11) % n).collect();
    perm.facets = order.iter().map(|&j| mesh.facets[j]).collect();
    perm.scattering = order.iter().map(|&j| mesh.scattering[j]).collect();
    let p = RenderParams::new(0.3, 1e-3, 0.5);
    let a = render_sar(&mesh, &v, &grid, &p).unwrap().0;
    let b = render_sar(&perm, &v, &grid, &p).unwrap().0;
    for (x, y) in a.data.iter().zip(&b.data) {
        assert!((x - y).abs() <= 1e-9 * (1.0 + x.abs()));
    }
    let a = render_silhouette(&mesh, &v, &grid, &p).unwrap();
    let b = render_silhouette(&perm, &v, &grid, &p).unwrap();
    for (x, y) in a.data.iter().zip(&b.data) {
        assert!((x - y).abs() <= 1e-9);
    }
}

#[test]
fn mirrored_scene_gives_mirrored_image() {
    let v = view();
    let grid = grid_for(&v, 32, 3.0);
    let mesh = jittered_sphere(2, 0.9, 0.05, 5);
    let m = mirrored(&mesh, &v);
    let p = RenderParams::new(0.2, 1e-3, 0.5);
    let a = render_sar(&mesh, &v, &grid, &p).unwrap().0;
    let b = render_sar(&m, &v, &grid, &p).unwrap().0;
    let sa = render_silhouette(&mesh, &v, &grid, &p).unwrap();
    let sb = render_silhouette(&m, &v, &grid, &p).unwrap();
    for k in 0..grid.nz {
        for l in 0..grid.nx {
            let lm = grid.nx - 1 - l;
            assert!((a.get(k, l) - b.get(k, lm)).abs() <= 1e-9 * (1.0 + a.get(k, l)));
            assert!((sa.get(k, l) - sb.get(k, lm)).abs() <= 1e-9);
        }
    }
}

#[test]
fn streamed_matches_direct() {
    let v = view();
    let grid = grid_for(&v, 24, 3.0);
    let mut mesh = triangle_soup(30, 0.8, 0.6, 9);
    mesh.scattering = (0..30).map(|j| 0.2 + 0.03 * j as f64).collect();
    for p in [RenderParams::default(), RenderParams::new(0.4, 0.01, 0.7)] {
        let streamed = render_sar(&mesh, &v, &grid, &p).unwrap().0;
        let direct = render_sar_direct(&mesh, &v, &grid, &p).unwrap();
        assert!(direct.sum() > 1.0);
        for (a, b) in streamed.data.iter().zip(&direct.data) {
            assert!((a - b).abs() < 1e-6, "{a} vs {b}");
        }
    }
}

#[test]
fn rays_distribute_unit_energy() {
    let v = view();
    let grid = grid_for(&v, 16, 3.0);
    let mesh = triangle_soup(40, 0.8, 0.7, 4);
    let p = RenderParams::new(0.5, 0.05, 0.5);
    let (rho, _) = shadowing_weights_direct(&mesh, &v, &grid, &p).unwrap();
    let nf = mesh.facet_count();
    let mut hit = 0;
    for ray in rho.chunks(nf) {
        let s: f64 = ray.iter().sum();
        if s > 0.0 {
            hit += 1;
            assert!((s - 1.0).abs() < 1e-9);
        }
    }
    assert!(hit > 10);
}

#[test]
fn results_do_not_depend_on_thread_count() {
    let v = view();
    let grid = grid_for(&v, 48, 3.0);
    let mesh = jittered_sphere(2, 0.9, 0.05, 8);
    let p = RenderParams::new(0.3, 1e-4, 0.5);
    let run = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| {
            (
                render_sar(&mesh, &v, &grid, &p).unwrap().0,
                render_silhouette(&mesh, &v, &grid, &p).unwrap(),
            )
        })
    };
    assert_eq!(run(1), run(4));
}

#[test]
fn rejects_geometry_behind_the_radar() {
    let v = view();
    let grid = grid_for(&v, 8, 2.0);
    let pts = [
        Vector3::new(0.0, 0.0, -1.0),
        Vector3::new(1.0, 0.0, 5.0),
        Vector3::new(0.0, 1.0, 5.0),
    ];
    let mesh = radar_mesh(&v, &pts, vec![[0, 1, 2]]);
    assert!(render_silhouette(&mesh, &v, &grid, &params()).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn adding_a_facet_never_darkens_the_silhouette(seed in 0u64..1000) {
        let v = view();
        let grid = grid_for(&v, 16, 3.0);
        let base = triangle_soup(6, 0.8, 0.8, seed);
        let mut more = base.clone();
        more.merge(&triangle_soup(1, 0.8, 0.8, seed + 7777));
        let p = RenderParams::new(0.3, 1e-3, 0.5);
        let a = render_silhouette(&base, &v, &grid, &p).unwrap();
        let b = render_silhouette(&more, &v, &grid, &p).unwrap();
        for (x, y) in a.data.iter().zip(&b.data) {
            prop_assert!(y >= x);
        }
    }
}
