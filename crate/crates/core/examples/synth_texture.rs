//! Draws Gamma-distributed scattering for a target and its background and
//! compares sample moments with the distribution parameters.
//!
//! `cargo run --example synth_texture`

use diffsar::imaging::{synthesize_textures, GammaTextureSpec, BACKGROUND_GAMMA, TARGET_GAMMA};
use diffsar::mesh::{box_mesh, cuboid_with_turret};
use nalgebra::Vector3;

/// Sample means `(target, background)`.
pub fn run_example() -> diffsar::Result<(f64, f64)> {
    let mut mesh = cuboid_with_turret();
    let split = mesh.facet_count();
    // a large flat slab standing in for the ground around the target
    for i in 0..40 {
        let x = (i % 8) as f64 - 3.5;
        let z = (i / 8) as f64 - 2.0;
        mesh.merge(&box_mesh(Vector3::new(x, -0.45, z), Vector3::new(0.9, 0.05, 0.9)));
    }
    let spec = GammaTextureSpec::target_and_background(split, mesh.facet_count());
    mesh.scattering = synthesize_textures(mesh.facet_count(), &spec, 3)?;
    let stats = |s: &[f64]| {
        let mean = s.iter().sum::<f64>() / s.len() as f64;
        let var = s.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / s.len() as f64;
        (mean, var)
    };
    let (target, background) = mesh.scattering.split_at(split);
    let mut means = (0.0, 0.0);
    for (name, s, (k, theta)) in [
        ("target", target, TARGET_GAMMA),
        ("background", background, BACKGROUND_GAMMA),
    ] {
        let (m, v) = stats(s);
        println!(
            "{name:<10} {:4} facets: mean {m:.4} (expected {:.4}), variance {v:.5} (expected {:.5})",
            s.len(),
            k * theta,
            k * theta * theta
        );
        if name == "target" {
            means.0 = m
        } else {
            means.1 = m
        }
    }
    Ok(means)
}

fn main() -> diffsar::Result<()> {
    run_example().map(|_| ())
}
