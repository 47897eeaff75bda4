//! Voxel IoU between a box and shifted, scaled and spherical variants.
//!
//! `cargo run --release --example voxel_iou`

use nalgebra::Vector3;

use diffsar::mesh::{box_mesh, icosphere, mesh_voxel_iou};

/// IoU of each variant against the reference box.
pub fn run_example() -> diffsar::Result<Vec<(String, f64)>> {
    let reference = box_mesh(Vector3::zeros(), Vector3::new(1.0, 1.0, 1.0));
    let variants = [
        ("identical", reference.clone()),
        (
            "shifted by half a side",
            reference.translated(Vector3::new(0.5, 0.0, 0.0)),
        ),
        ("scaled by 1.2", box_mesh(Vector3::zeros(), Vector3::new(1.2, 1.2, 1.2))),
        ("inscribed sphere", icosphere(3, 0.5)?),
    ];
    let mut out = Vec::new();
    for (name, mesh) in variants {
        let iou = mesh_voxel_iou(&reference, &mesh, 32)?;
        println!("{name:<24} {iou:.4}");
        out.push((name.to_string(), iou));
    }
    Ok(out)
}

fn main() -> diffsar::Result<()> {
    run_example().map(|_| ())
}
