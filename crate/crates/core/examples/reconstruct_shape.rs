//! Reconstructs the tank-like fixture from multi-view silhouettes, starting
//! from a sphere, and reports the voxel IoU against the truth.
//!
//! `cargo run --release --example reconstruct_shape -- [epochs] [views] [pixels]`
//!
//! Defaults are sized for a quick run; `500 32 128` is the full setting.

use diffsar::geometry::{ImageSize, RadarView};
use diffsar::loss::{loss_flatness, LossMode};
use diffsar::mesh::{cuboid_with_turret, icosphere, mesh_voxel_iou, MeshTopology};
use diffsar::recon::{reconstruct_with, standard_view_angles, ReconConfig, ViewSet};

/// Voxel IoU at 32³ of the template and of the result.
pub fn run_example(epochs: usize, views: usize, pixels: usize) -> diffsar::Result<(f64, f64)> {
    let truth = cuboid_with_turret();
    let angles = standard_view_angles();
    // spread the chosen views over the standard acquisition
    let chosen: Vec<RadarView> = (0..views)
        .map(|i| angles[i * angles.len() / views])
        .map(|(a, b)| RadarView::new(a, b))
        .collect();
    let config = ReconConfig {
        mode: LossMode::SilhouetteOnly,
        epochs,
        ..ReconConfig::default()
    };
    let size = ImageSize {
        nx: pixels,
        nz: pixels,
        rz: 3.0 / pixels as f64,
    };
    let set = ViewSet::render(&truth, &chosen, size, &config.params, false)?;
    let template = icosphere(3, 0.8)?;
    let topo = MeshTopology::build(&template);
    let before = mesh_voxel_iou(&truth, &template, 32)?;
    let result = reconstruct_with(&set, &template, &config, |epoch, mesh| {
        if epoch % 10 == 0 || epoch + 1 == epochs {
            println!(
                "epoch {epoch:4}: voxel IoU {:.4}, flatness {:.3}",
                mesh_voxel_iou(&truth, mesh, 32)?,
                loss_flatness(mesh, &topo).0
            );
        }
        Ok(())
    })?;
    let after = mesh_voxel_iou(&truth, &result.mesh, 32)?;
    println!("voxel IoU {before:.4} -> {after:.4}");
    Ok((before, after))
}

fn main() -> diffsar::Result<()> {
    let arg = |i: usize, default: usize| std::env::args().nth(i).and_then(|s| s.parse().ok()).unwrap_or(default);
    run_example(arg(1, 60), arg(2, 16), arg(3, 96)).map(|_| ())
}
