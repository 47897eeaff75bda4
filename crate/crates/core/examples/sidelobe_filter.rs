//! Builds an image holding bright point scatterers with sinc² sidelobes and
//! a patch of distributed clutter, suppresses the sidelobes, then extracts
//! the patch as the target silhouette.
//!
//! `cargo run --release --example sidelobe_filter`

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use diffsar::imaging::{extract_silhouette, sidelobe_filter, Psf, SidelobeOptions};

const SIZE: usize = 64;
const RADIUS: usize = 8;

/// Nonzero pixel counts before and after filtering, and the silhouette area.
pub fn run_example() -> diffsar::Result<(usize, usize, f64)> {
    let psf = Psf::sinc_db(RADIUS, 1.5, -120.0);
    let mut image = vec![0.0; SIZE * SIZE];
    for (r, c, amplitude) in [(12, 12, 1.0), (12, 48, 0.7), (48, 12, 0.5)] {
        for dr in -(RADIUS as isize)..=RADIUS as isize {
            for dc in -(RADIUS as isize)..=RADIUS as isize {
                let db = psf.at(dr, dc).unwrap_or(-120.0);
                if db <= -120.0 {
                    continue; // nulls of the response
                }
                let p = (r as isize + dr) as usize * SIZE + (c as isize + dc) as usize;
                image[p] += amplitude * 10f64.powf(db / 10.0);
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for r in 36..54 {
        for c in 34..56 {
            image[r * SIZE + c] = rng.random_range(0.1..0.2);
        }
    }
    let filtered = sidelobe_filter(&image, SIZE, SIZE, &psf, &SidelobeOptions::default())?;
    let count = |img: &[f64]| img.iter().filter(|&&x| x > 0.0).count();
    let (before, after) = (count(&image), count(&filtered));
    println!("nonzero pixels: {before} before, {after} after sidelobe suppression");
    let mask = extract_silhouette(&filtered, SIZE, SIZE, 0.0)?;
    let area = mask.iter().sum::<f64>();
    println!("silhouette area {area} px (patch is 18 x 22)");
    for (row, mrow) in filtered.chunks(SIZE).zip(mask.chunks(SIZE)).step_by(2) {
        let line: String = row
            .iter()
            .zip(mrow)
            .map(|(&x, &m)| match (x > 0.0, m > 0.5) {
                (_, true) => '#',
                (true, false) => '+',
                _ => '.',
            })
            .collect();
        println!("{line}");
    }
    Ok((before, after, area))
}

fn main() -> diffsar::Result<()> {
    run_example().map(|_| ())
}
