//! Recovers per-facet scattering from one SAR image with the geometry held
//! fixed.
//!
//! `cargo run --release --example texture_recovery -- [steps]`

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use diffsar::geometry::{ImageSize, RadarView};
use diffsar::loss::{LossMode, LossWeights};
use diffsar::mesh::cuboid_with_turret;
use diffsar::recon::{reconstruct, ReconConfig, ViewSet};

/// Texture loss before the first step and before the last.
pub fn run_example(steps: usize) -> diffsar::Result<(f64, f64)> {
    let mut truth = cuboid_with_turret();
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for s in &mut truth.scattering {
        *s = rng.random_range(0.05..0.6);
    }
    let config = ReconConfig {
        weights: LossWeights {
            texture: 1.0,
            laplacian: 0.0,
            flatness: 0.0,
        },
        mode: LossMode::Full,
        batch_size: 1,
        epochs: steps,
        optimize_vertices: false,
        ..ReconConfig::default()
    };
    let view = RadarView::new(45.0, 30.0);
    let set = ViewSet::render(
        &truth,
        &[view],
        ImageSize {
            nx: 64,
            nz: 64,
            rz: 3.0 / 64.0,
        },
        &config.params,
        true,
    )?;
    let mut start = truth.clone();
    start.scattering.fill(0.5);
    let result = reconstruct(&set, &start, &config)?;
    for row in result.history.iter().step_by((steps / 10).max(1)) {
        println!("step {:4}: texture loss {:.4}", row.epoch, row.terms.texture);
    }
    let first = result.history.first().map_or(0.0, |r| r.terms.texture);
    let last = result.history.last().map_or(0.0, |r| r.terms.texture);
    println!("facet  truth  recovered");
    for (j, (t, r)) in truth
        .scattering
        .iter()
        .zip(&result.mesh.scattering)
        .enumerate()
        .take(12)
    {
        println!("{j:5}  {t:.3}  {r:.3}");
    }
    Ok((first, last))
}

fn main() -> diffsar::Result<()> {
    let steps = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(500);
    run_example(steps).map(|_| ())
}
