//! Estimates the viewing pose of the station fixture from a single observed
//! silhouette, starting 15° away in incidence.
//!
//! `cargo run --release --example pose_estimation -- [epochs]`

use diffsar::commands::pose_table;
use diffsar::geometry::{ImageSize, RadarView};
use diffsar::mesh::station;
use diffsar::raster::RenderParams;
use diffsar::recon::{estimate_pose, PoseConfig, PoseResult};
use diffsar::render::render_silhouette;

pub fn run_example(epochs: usize) -> diffsar::Result<PoseResult> {
    let mesh = station();
    let size = ImageSize {
        nx: 128,
        nz: 128,
        rz: 4.5 / 128.0,
    };
    let params = RenderParams::default();
    let truth = RadarView {
        euler_deg: [0.0, 0.0, 135.0],
        ..RadarView::new(75.0, 0.0)
    };
    let init = RadarView {
        incident_deg: 60.0,
        ..truth
    };
    let observed = render_silhouette(&mesh, &truth, &size.grid_for(&truth)?, &params)?.data;
    let result = estimate_pose(
        &observed,
        &mesh,
        &init,
        size,
        &PoseConfig {
            params,
            epochs,
            ..PoseConfig::default()
        },
    )?;
    print!("{}", pose_table(&result, Some(&truth)));
    Ok(result)
}

fn main() -> diffsar::Result<()> {
    let epochs = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(500);
    run_example(epochs).map(|_| ())
}
