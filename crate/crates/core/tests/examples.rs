//! Runs each example with light settings and checks what it reports.

#[allow(dead_code)]
#[path = "../examples/building_layover.rs"]
mod building_layover;
#[allow(dead_code)]
#[path = "../examples/export_fixtures.rs"]
mod export_fixtures;
#[allow(dead_code)]
#[path = "../examples/gradient_check.rs"]
mod gradient_check;
#[allow(dead_code)]
#[path = "../examples/isar_resolution.rs"]
mod isar_resolution;
#[allow(dead_code)]
#[path = "../examples/pose_estimation.rs"]
mod pose_estimation;
#[allow(dead_code)]
#[path = "../examples/reconstruct_shape.rs"]
mod reconstruct_shape;
#[allow(dead_code)]
#[path = "../examples/render_views.rs"]
mod render_views;
#[allow(dead_code)]
#[path = "../examples/sidelobe_filter.rs"]
mod sidelobe_filter;
#[allow(dead_code)]
#[path = "../examples/streamed_vs_direct.rs"]
mod streamed_vs_direct;
#[allow(dead_code)]
#[path = "../examples/synth_texture.rs"]
mod synth_texture;
#[allow(dead_code)]
#[path = "../examples/texture_recovery.rs"]
mod texture_recovery;
#[allow(dead_code)]
#[path = "../examples/voxel_iou.rs"]
mod voxel_iou;

#[test]
fn render_views_writes_images() {
    let dir = tempfile::tempdir().unwrap();
    let files = render_views::run_example(dir.path()).unwrap();
    assert_eq!(files.len(), 8);
    assert!(files.iter().all(|f| f.exists()));
}

#[test]
fn building_layover_runs() {
    building_layover::run_example().unwrap();
    let wide = building_layover::range_profile(4.0, 2.0).unwrap();
    assert!(
        wide.iter().any(|p| p[2] > 0.0 && p[1] == 0.0),
        "roof-only rows expected"
    );
}

#[test]
fn gradient_check_agrees() {
    let errors = gradient_check::run_example().unwrap();
    assert!(errors.iter().all(|&e| e < 1e-3), "{errors:?}");
}

#[test]
fn streamed_matches_direct() {
    assert!(streamed_vs_direct::run_example().unwrap() < 1e-9);
}

#[test]
fn isar_resolution_ku_band() {
    let (ra, rr) = isar_resolution::run_example().unwrap();
    assert!((ra - 0.1469).abs() < 1e-4 && (rr - 0.1499).abs() < 1e-4);
}

#[test]
fn synth_texture_moments() {
    let (target, background) = synth_texture::run_example().unwrap();
    assert!((target - 0.1802).abs() < 0.05 && (background - 0.0481).abs() < 0.01);
}

#[test]
fn voxel_iou_of_variants() {
    let r = voxel_iou::run_example().unwrap();
    assert_eq!(r[0].1, 1.0);
    assert!((r[1].1 - 1.0 / 3.0).abs() < 0.03);
    assert!(r.iter().all(|(_, iou)| (0.0..=1.0).contains(iou)));
}

#[test]
fn sidelobe_filter_keeps_peaks_and_patch() {
    let (before, after, area) = sidelobe_filter::run_example().unwrap();
    assert!(before > after);
    assert_eq!(after, 396 + 3);
    assert_eq!(area, 396.0);
}

#[test]
fn export_fixtures_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    for f in export_fixtures::run_example(dir.path()).unwrap() {
        let mesh = diffsar::mesh::load_mesh(&f).unwrap();
        assert!(mesh.facet_count() > 0);
    }
}

#[test]
fn texture_recovery_reduces_loss() {
    let (first, last) = texture_recovery::run_example(100).unwrap();
    assert!(last < 0.5 * first, "{first} -> {last}");
}

#[test]
fn pose_estimation_improves_iou() {
    let r = pose_estimation::run_example(100).unwrap();
    assert!(r.final_iou > r.initial_iou && r.converged());
}

#[test]
fn reconstruct_shape_improves_iou() {
    let (before, after) = reconstruct_shape::run_example(10, 8, 48).unwrap();
    assert!(after > before, "{before} -> {after}");
}

#[test]
fn bundled_configs_parse() {
    let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("examples/configs");
    let mut n = 0;
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        let cfg = diffsar::io::RunConfig::load(&path).unwrap();
        cfg.views.resolve().unwrap();
        n += 1;
    }
    assert_eq!(n, 2);
}
