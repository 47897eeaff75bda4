//! Range profiles of a flat-roofed building at 45° incidence. A wide
//! building shows roof returns beyond the layover band, a narrow one shows
//! wall returns, and the radar shadow behind it lengthens with height.
//!
//! `cargo run --release --example building_layover`

use diffsar::geometry::{ImageSize, RadarView};
use diffsar::mesh::{building_scene, BuildingPart};
use diffsar::raster::RenderParams;
use diffsar::render::render_sar;

/// Mean `(ground, wall, roof)` intensity per slant row, averaged over the
/// columns under the middle of the building, with textures 0.1 / 0.5 / 1.0.
pub fn range_profile(width: f64, height: f64) -> diffsar::Result<Vec<[f64; 3]>> {
    let scene = building_scene(width, height, 4.0, 16.0);
    let view = RadarView::new(45.0, 0.0);
    let grid = ImageSize {
        nx: 64,
        nz: 64,
        rz: 0.25,
    }
    .grid_for(&view)?;
    let params = RenderParams::default();
    let mut parts = Vec::new();
    for (part, texture) in [
        (BuildingPart::Ground, 0.1),
        (BuildingPart::Wall, 0.5),
        (BuildingPart::Roof, 1.0),
    ] {
        let mut mesh = scene.mesh.clone();
        mesh.scattering = scene.indicator(part).iter().map(|s| s * texture).collect();
        parts.push(render_sar(&mesh, &view, &grid, &params)?.0);
    }
    let cols = grid.nx / 2 - 4..grid.nx / 2 + 4;
    Ok((0..grid.nz)
        .map(|k| std::array::from_fn(|p| cols.clone().map(|l| parts[p].get(k, l)).sum::<f64>() / cols.len() as f64))
        .collect())
}

fn print_profile(label: &str, profile: &[[f64; 3]]) {
    println!("{label}");
    println!("  row  ground   wall   roof");
    for (k, [g, w, r]) in profile.iter().enumerate() {
        if g + w + r > 0.0 {
            println!("  {k:3}  {g:.3}  {w:.3}  {r:.3}");
        } else {
            println!("  {k:3}  -");
        }
    }
}

pub fn run_example() -> diffsar::Result<()> {
    print_profile("wide building, w/h = 2", &range_profile(4.0, 2.0)?);
    print_profile("narrow building, w/h = 0.5", &range_profile(1.0, 2.0)?);
    for h in [1.0, 2.0, 3.0] {
        let profile = range_profile(4.0, h)?;
        let ground = profile.iter().map(|p| p[0]).fold(0.0, f64::max);
        let building_end = profile.iter().rposition(|p| p[1] + p[2] > 0.0).unwrap_or(0);
        let shadow = profile[building_end + 1..]
            .iter()
            .take_while(|p| p.iter().sum::<f64>() < 0.1 * ground)
            .count();
        println!("height {h} m: shadow {shadow} rows behind the building");
    }
    Ok(())
}

fn main() -> diffsar::Result<()> {
    run_example()
}
