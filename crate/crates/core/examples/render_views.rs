//! Renders SAR intensity and silhouette images of the tank-like fixture from
//! four viewpoints and writes them as `.fimg` and PNG files.
//!
//! `cargo run --release --example render_views -- [out_dir]`

use std::path::{Path, PathBuf};

use diffsar::geometry::{ImageSize, RadarView};
use diffsar::io::{FloatImageFile, ValueDomain};
use diffsar::mesh::cuboid_with_turret;
use diffsar::raster::RenderParams;
use diffsar::render::{render_sar, render_silhouette};

pub fn run_example(out: &Path) -> diffsar::Result<Vec<PathBuf>> {
    std::fs::create_dir_all(out).map_err(|e| diffsar::Error::io(out, e))?;
    let mesh = cuboid_with_turret();
    let size = ImageSize {
        nx: 96,
        nz: 96,
        rz: 3.0 / 96.0,
    };
    let params = RenderParams::default();
    let mut files = Vec::new();
    for (i, (alpha, beta)) in [(30.0, 0.0), (45.0, 60.0), (60.0, 150.0), (45.0, 270.0)]
        .into_iter()
        .enumerate()
    {
        let view = RadarView::new(alpha, beta);
        let grid = size.grid_for(&view)?;
        let (sar, _) = render_sar(&mesh, &view, &grid, &params)?;
        let sil = render_silhouette(&mesh, &view, &grid, &params)?;
        for (tag, img, domain) in [("sar", &sar, ValueDomain::Linear), ("sil", &sil, ValueDomain::Binary)] {
            let file = FloatImageFile::new(img.width, img.height, domain, &img.data)?;
            let stem = out.join(format!("view_{i}_{tag}"));
            file.save(stem.with_extension("fimg"))?;
            file.save_png(stem.with_extension("png"), -50.0)?;
            files.push(stem.with_extension("png"));
        }
        println!(
            "α {alpha:>4}° β {beta:>5}°: SAR peak {:.3}, silhouette area {:.0} px",
            sar.max(),
            sil.sum()
        );
    }
    Ok(files)
}

fn main() -> diffsar::Result<()> {
    let out = std::env::args().nth(1).unwrap_or_else(|| "out/render_views".into());
    let files = run_example(Path::new(&out))?;
    println!("wrote {} images to {out}", files.len());
    Ok(())
}
