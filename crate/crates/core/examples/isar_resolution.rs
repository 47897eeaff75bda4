//! ISAR range and azimuth resolution for a few radar configurations.
//!
//! `cargo run --example isar_resolution`

use diffsar::geometry::isar_resolution;

/// `(azimuth, range)` resolution in metres for the Ku-band example.
pub fn run_example() -> diffsar::Result<(f64, f64)> {
    println!("   fc (GHz)  B (GHz)  aperture (°)  azimuth (m)  range (m)");
    let mut ku = (0.0, 0.0);
    for (fc, b, deg) in [(16.7, 1.0, 3.5), (10.0, 0.5, 2.0), (35.0, 2.0, 5.0)] {
        let (ra, rr) = isar_resolution(fc * 1e9, b * 1e9, f64::to_radians(deg))?;
        println!("{fc:11.1}  {b:7.1}  {deg:12.1}  {ra:11.4}  {rr:9.4}");
        if fc == 16.7 {
            ku = (ra, rr);
        }
    }
    Ok(ku)
}

fn main() -> diffsar::Result<()> {
    run_example().map(|_| ())
}
