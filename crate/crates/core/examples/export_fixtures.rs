//! Writes the bundled test scenes as OBJ files for use with the `diffsar`
//! command line tool.
//!
//! `cargo run --example export_fixtures -- [dir]`

use std::path::{Path, PathBuf};

use diffsar::mesh::{building_scene, cuboid_with_turret, save_obj, save_scat, station};

pub fn run_example(dir: &Path) -> diffsar::Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| diffsar::Error::io(dir, e))?;
    let mut building = building_scene(4.0, 2.0, 4.0, 16.0);
    building.mesh.scattering = building.textured(0.1, 0.5, 1.0);
    let mut files = Vec::new();
    for (name, mesh) in [
        ("tank", cuboid_with_turret()),
        ("station", station()),
        ("building", building.mesh),
    ] {
        let obj = dir.join(format!("{name}.obj"));
        save_obj(&mesh, &obj)?;
        save_scat(&mesh, obj.with_extension("scat"))?;
        println!(
            "{}: {} vertices, {} facets",
            obj.display(),
            mesh.vertex_count(),
            mesh.facet_count()
        );
        files.push(obj);
    }
    Ok(files)
}

fn main() -> diffsar::Result<()> {
    let dir = std::env::args().nth(1).unwrap_or_else(|| "data".into());
    run_example(Path::new(&dir)).map(|_| ())
}
