//! Renders one scene with the streamed renderer and with the reference
//! renderer that stores every shadowing weight, and compares the images and
//! the working memory each needs as the projection plane grows.
//!
//! `cargo run --release --example streamed_vs_direct`

use diffsar::geometry::{ImageSize, RadarView};
use diffsar::mesh::triangle_soup;
use diffsar::raster::RenderParams;
use diffsar::render::{render_sar_direct, render_sar_with_stats};

/// Largest per-pixel difference across the views.
pub fn run_example() -> diffsar::Result<f64> {
    let mesh = triangle_soup(50, 0.8, 0.7, 8);
    let params = RenderParams::default();
    let size = ImageSize {
        nx: 48,
        nz: 48,
        rz: 3.0 / 48.0,
    };
    let mut worst = 0.0f64;
    println!("  α    N_y  streamed words  direct words  max |Δ|");
    for alpha in [15.0, 45.0, 60.0, 75.0] {
        let view = RadarView::new(alpha, 30.0);
        let grid = size.grid_for(&view)?;
        let direct = render_sar_direct(&mesh, &view, &grid, &params)?;
        let (streamed, _, stats) = render_sar_with_stats(&mesh, &view, &grid, &params)?;
        let diff = direct
            .data
            .iter()
            .zip(&streamed.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        worst = worst.max(diff);
        let direct_words = 2 * grid.ny * grid.nx * mesh.facet_count();
        println!(
            "{alpha:4}  {:5}  {:14}  {direct_words:12}  {diff:.1e}",
            grid.ny, stats.peak_scratch_words
        );
    }
    Ok(worst)
}

fn main() -> diffsar::Result<()> {
    run_example().map(|_| ())
}
