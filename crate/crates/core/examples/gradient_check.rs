//! Compares the analytic vertex, scattering and pose gradients against
//! central finite differences on a small scene.
//!
//! `cargo run --release --example gradient_check`

use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use diffsar::geometry::{ImageSize, RadarView};
use diffsar::grad::{
    backward_pose, backward_scattering, backward_silhouette, finite_difference_oracle, pose_vector, with_pose_vector,
    POSE_PARAMETERS,
};
use diffsar::mesh::{icosphere, TriangleMesh};
use diffsar::raster::RenderParams;
use diffsar::render::{render_sar, render_silhouette};

fn worst_relative(analytic: &[f64], fd: &[f64]) -> f64 {
    analytic
        .iter()
        .zip(fd)
        .map(|(g, f)| (g - f).abs() / (f.abs() + 1e-6))
        .fold(0.0, f64::max)
}

/// Worst relative errors for (vertices, scattering, pose).
pub fn run_example() -> diffsar::Result<[f64; 3]> {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut mesh = icosphere(0, 0.9)?;
    for v in &mut mesh.vertices {
        *v *= 1.0 + rng.random_range(-0.15..0.15);
    }
    for s in &mut mesh.scattering {
        *s = rng.random_range(0.2..1.0);
    }
    let view = RadarView {
        euler_deg: [5.0, -10.0, 20.0],
        ..RadarView::new(40.0, 25.0)
    };
    let grid = ImageSize {
        nx: 32,
        nz: 32,
        rz: 3.0 / 32.0,
    }
    .grid_for(&view)?;
    let params = RenderParams::new(0.8, 1e-3, 0.5);
    let weights: Vec<f64> = (0..grid.pixel_count()).map(|_| rng.random_range(-1.0..1.0)).collect();
    let loss = |img: &[f64]| img.iter().zip(&weights).map(|(a, b)| a * b).sum::<f64>();

    let analytic = backward_silhouette(&weights, &mesh, &view, &grid, &params)?;
    let analytic: Vec<f64> = analytic.d_vertices.iter().flat_map(|d| [d.x, d.y, d.z]).collect();
    let coords: Vec<f64> = mesh.vertices.iter().flat_map(|v| [v.x, v.y, v.z]).collect();
    let moved = |x: &[f64]| {
        let vertices = x.chunks(3).map(|c| Vector3::new(c[0], c[1], c[2])).collect();
        TriangleMesh::new(vertices, mesh.facets.clone(), mesh.scattering.clone()).unwrap()
    };
    let fd = finite_difference_oracle(
        |x| loss(&render_silhouette(&moved(x), &view, &grid, &params).unwrap().data),
        &coords,
        1e-4 * grid.rz,
    );
    let vertex = worst_relative(&analytic, &fd);

    let (_, cache) = render_sar(&mesh, &view, &grid, &params)?;
    let analytic = backward_scattering(&weights, &mesh, &view, &grid, &params, &cache)?.d_scattering;
    let fd = finite_difference_oracle(
        |s| {
            let mut m = mesh.clone();
            m.scattering = s.to_vec();
            loss(&render_sar(&m, &view, &grid, &params).unwrap().0.data)
        },
        &mesh.scattering,
        1e-4,
    );
    let scattering = worst_relative(&analytic, &fd);

    let analytic = backward_pose(&weights, &mesh, &view, &grid, &params)?
        .d_pose
        .unwrap_or_default();
    let fd = finite_difference_oracle(
        |p| {
            let posed = with_pose_vector(&view, &[p[0], p[1], p[2], p[3], p[4], p[5]]);
            loss(&render_silhouette(&mesh, &posed, &grid, &params).unwrap().data)
        },
        &pose_vector(&view),
        1e-5,
    );
    for (name, (a, f)) in POSE_PARAMETERS.iter().zip(analytic.iter().zip(&fd)) {
        println!("d/d{name:<8} analytic {a:>12.6}  finite difference {f:>12.6}");
    }
    let pose = worst_relative(&analytic, &fd);
    println!("worst relative error: vertices {vertex:.2e}, scattering {scattering:.2e}, pose {pose:.2e}");
    Ok([vertex, scattering, pose])
}

fn main() -> diffsar::Result<()> {
    run_example().map(|_| ())
}
