//! Command implementations behind the `diffsar` binary. Each command reads a
//! [`RunConfig`], writes its artefacts under `config.out` and returns a
//! summary.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::grad::pose_vector;
use crate::imaging::{sidelobe_filter, synthesize_textures, CompareDomain, GammaTextureSpec, Psf, SidelobeOptions};
use crate::io::{view_name, FloatImageFile, ManifestEntry, RunConfig, ValueDomain, ViewManifest};
use crate::loss::LossMode;
use crate::mesh::{icosphere, load_mesh, mesh_voxel_iou, save_obj, save_scat, TriangleMesh};
use crate::optim::AdamConfig;
use crate::recon::{
    estimate_pose, history_csv, reconstruct_with, HistoryRow, PoseConfig, PoseResult, ReconConfig, ViewSample, ViewSet,
};
use crate::render::{render_sar, render_silhouette};

/// Voxel resolution used when reporting reconstruction quality.
pub const REPORT_VOXEL_RESOLUTION: usize = 32;

fn create_out(cfg: &RunConfig) -> Result<&Path> {
    fs::create_dir_all(&cfg.out).map_err(|e| Error::io(&cfg.out, e))?;
    Ok(&cfg.out)
}

fn target_mesh(cfg: &RunConfig) -> Result<TriangleMesh> {
    let path = cfg
        .mesh
        .path
        .as_ref()
        .ok_or_else(|| Error::Config("mesh.path is required".into()))?;
    load_mesh(path)
}

fn write_image(out: &Path, stem: &str, img: &FloatImageFile, floor_db: f64, files: &mut Vec<PathBuf>) -> Result<()> {
    let fimg = out.join(format!("{stem}.fimg"));
    let png = out.join(format!("{stem}.png"));
    img.save(&fimg)?;
    img.save_png(&png, floor_db)?;
    files.push(fimg);
    files.push(png);
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct RenderReport {
    pub files: Vec<PathBuf>,
    /// Largest silhouette value per view.
    pub silhouette_max: Vec<f64>,
}

/// Renders SAR and silhouette images of `mesh.path` for every configured
/// view, plus a manifest that `reconstruct` can read back.
pub fn cmd_render(cfg: &RunConfig) -> Result<RenderReport> {
    let mesh = target_mesh(cfg)?;
    let views = cfg.views.resolve()?;
    let out = create_out(cfg)?;
    let mut files = Vec::new();
    let mut silhouette_max = Vec::new();
    let mut entries = Vec::new();
    for (i, view) in views.iter().enumerate() {
        let grid = cfg.grid.grid_for(view)?;
        let (sar, _) = render_sar(&mesh, view, &grid, &cfg.render)?;
        let sil = render_silhouette(&mesh, view, &grid, &cfg.render)?;
        let name = view_name(i);
        let sar_file = FloatImageFile::new(grid.nx, grid.nz, ValueDomain::Linear, &sar.data)?;
        let sil_file = FloatImageFile::new(grid.nx, grid.nz, ValueDomain::Binary, &sil.data)?;
        write_image(out, &format!("{name}_sar"), &sar_file, cfg.display_floor_db, &mut files)?;
        write_image(out, &format!("{name}_sil"), &sil_file, cfg.display_floor_db, &mut files)?;
        silhouette_max.push(sil.max());
        entries.push(ManifestEntry { name, view: *view });
    }
    ViewManifest {
        grid: cfg.grid,
        views: entries,
    }
    .save(out)?;
    Ok(RenderReport { files, silhouette_max })
}

/// Reads the views listed in the manifest of `dir`. SAR images are loaded
/// only when `with_sar` is set and the file exists.
pub fn load_view_set(dir: &Path, with_sar: bool) -> Result<ViewSet> {
    let manifest = ViewManifest::load(dir)?;
    let check = |f: &FloatImageFile, path: &Path| {
        if f.width != manifest.grid.nx || f.height != manifest.grid.nz {
            return Err(Error::ShapeMismatch(format!(
                "{} is {}×{}, manifest grid is {}×{}",
                path.display(),
                f.width,
                f.height,
                manifest.grid.nx,
                manifest.grid.nz
            )));
        }
        Ok(())
    };
    let mut samples = Vec::new();
    for entry in &manifest.views {
        let sil_path = dir.join(format!("{}_sil.fimg", entry.name));
        let sil = FloatImageFile::load(&sil_path)?;
        check(&sil, &sil_path)?;
        let sar_path = dir.join(format!("{}_sar.fimg", entry.name));
        let sar = if with_sar && sar_path.exists() {
            let f = FloatImageFile::load(&sar_path)?;
            check(&f, &sar_path)?;
            Some(f.to_f64())
        } else {
            None
        };
        samples.push(ViewSample {
            view: entry.view,
            silhouette: sil.to_f64(),
            sar,
        });
    }
    ViewSet::new(manifest.grid, samples)
}

fn recon_config(cfg: &RunConfig) -> ReconConfig {
    ReconConfig {
        params: cfg.render,
        weights: cfg.loss.weights,
        mode: cfg.loss.mode,
        adam: AdamConfig::with_learning_rate(cfg.optim.learning_rate),
        batch_size: cfg.optim.batch_size,
        epochs: cfg.optim.epochs,
        seed: cfg.seed,
        optimize_vertices: true,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReconReport {
    pub files: Vec<PathBuf>,
    pub history: Vec<HistoryRow>,
    /// Voxel IoU against `mesh.path`, when a target mesh is configured.
    pub voxel_iou: Option<f64>,
}

/// Reconstructs a mesh from the views in `config.input`. Snapshots written
/// before a divergence stay on disk.
pub fn cmd_reconstruct(cfg: &RunConfig) -> Result<ReconReport> {
    let input = cfg
        .input
        .as_ref()
        .ok_or_else(|| Error::Config("input directory is required".into()))?;
    let views = load_view_set(input, cfg.loss.mode == LossMode::Full)?;
    let template = match &cfg.mesh.template {
        Some(p) => load_mesh(p)?,
        None => icosphere(cfg.mesh.template_subdivisions, cfg.mesh.template_radius)?,
    };
    let truth = cfg.mesh.path.as_ref().map(load_mesh).transpose()?;
    let out = create_out(cfg)?;
    let mut files = Vec::new();
    let snapshot_every = cfg.optim.snapshot_every.filter(|&k| k > 0);
    let result = reconstruct_with(&views, &template, &recon_config(cfg), |epoch, mesh| {
        if let Some(k) = snapshot_every {
            if (epoch + 1) % k == 0 {
                save_obj(mesh, out.join(format!("snapshot_{:04}.obj", epoch + 1)))?;
            }
        }
        Ok(())
    })?;

    let obj = out.join("recon.obj");
    save_obj(&result.mesh, &obj)?;
    files.push(obj);
    if cfg.loss.mode == LossMode::Full {
        let scat = out.join("recon.scat");
        save_scat(&result.mesh, &scat)?;
        files.push(scat);
    }
    let csv = out.join("history.csv");
    fs::write(&csv, history_csv(&result.history)).map_err(|e| Error::io(&csv, e))?;
    files.push(csv);
    let voxel_iou = match &truth {
        Some(t) => Some(mesh_voxel_iou(t, &result.mesh, REPORT_VOXEL_RESOLUTION)?),
        None => None,
    };
    Ok(ReconReport {
        files,
        history: result.history,
        voxel_iou,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PoseReport {
    pub result: PoseResult,
    pub table: String,
    pub files: Vec<PathBuf>,
}

/// Side-by-side table of pose parameters and silhouette IoU.
pub fn pose_table(result: &PoseResult, truth: Option<&crate::geometry::RadarView>) -> String {
    let row = |v: &crate::geometry::RadarView| {
        let p = pose_vector(v);
        [
            p[0].to_degrees(),
            p[1].to_degrees(),
            p[2].to_degrees(),
            p[3].to_degrees(),
            p[4].to_degrees(),
            p[5],
        ]
    };
    let names = [
        "alpha_deg",
        "beta_deg",
        "theta_x_deg",
        "theta_y_deg",
        "theta_z_deg",
        "scale",
    ];
    let (init, pred) = (row(&result.initial), row(&result.estimate));
    let gt = truth.map(row);
    let mut s = String::new();
    writeln!(
        s,
        "{:<12} {:>14} {:>14} {:>14}",
        "parameter", "ground_truth", "initialization", "prediction"
    )
    .unwrap();
    for (i, name) in names.iter().enumerate() {
        let g = gt.map_or("-".to_string(), |g| format!("{:.4}", g[i]));
        writeln!(s, "{:<12} {:>14} {:>14.4} {:>14.4}", name, g, init[i], pred[i]).unwrap();
    }
    let g_iou = if truth.is_some() {
        "1.0000".to_string()
    } else {
        "-".to_string()
    };
    writeln!(
        s,
        "{:<12} {:>14} {:>14.4} {:>14.4}",
        "iou", g_iou, result.initial_iou, result.final_iou
    )
    .unwrap();
    let status = if result.converged() {
        "converged"
    } else {
        "not converged"
    };
    writeln!(s, "status: {status}").unwrap();
    s
}

/// Fits the pose of `mesh.path` to the silhouette in `pose.observed`.
pub fn cmd_estimate_pose(cfg: &RunConfig) -> Result<PoseReport> {
    let mesh = target_mesh(cfg)?;
    let observed_path = cfg
        .pose
        .observed
        .as_ref()
        .ok_or_else(|| Error::Config("pose.observed is required".into()))?;
    let observed = FloatImageFile::load(observed_path)?;
    if observed.width != cfg.grid.nx || observed.height != cfg.grid.nz {
        return Err(Error::ShapeMismatch(format!(
            "{} is {}×{}, grid is {}×{}",
            observed_path.display(),
            observed.width,
            observed.height,
            cfg.grid.nx,
            cfg.grid.nz
        )));
    }
    let pose_cfg = PoseConfig {
        params: cfg.render,
        adam: AdamConfig::with_learning_rate(cfg.pose.learning_rate),
        epochs: cfg.pose.epochs,
        ..PoseConfig::default()
    };
    let result = estimate_pose(&observed.to_f64(), &mesh, &cfg.pose.init, cfg.grid, &pose_cfg)?;
    let table = pose_table(&result, cfg.pose.truth.as_ref());
    let out = create_out(cfg)?;
    let mut files = Vec::new();
    let report = out.join("pose.txt");
    fs::write(&report, &table).map_err(|e| Error::io(&report, e))?;
    files.push(report);
    let pred = FloatImageFile::new(cfg.grid.nx, cfg.grid.nz, ValueDomain::Binary, &result.predicted.data)?;
    write_image(out, "predicted_sil", &pred, cfg.display_floor_db, &mut files)?;
    Ok(PoseReport { result, table, files })
}

/// Voxel IoU of two watertight meshes on a shared grid.
pub fn cmd_eval_iou(a: &Path, b: &Path, resolution: usize) -> Result<f64> {
    mesh_voxel_iou(&load_mesh(a)?, &load_mesh(b)?, resolution)
}

/// Suppresses sidelobes in a linear-intensity image. The PSF file holds
/// values in the comparison domain; `linear` selects raw differencing.
pub fn cmd_filter_sidelobes(
    cfg: &RunConfig,
    image: &Path,
    psf: &Path,
    linear: bool,
    peak_threshold: Option<f64>,
) -> Result<Vec<PathBuf>> {
    let img = FloatImageFile::load(image)?;
    if img.domain == ValueDomain::Db {
        return Err(Error::Image(format!(
            "{} must hold linear intensities",
            image.display()
        )));
    }
    let kernel = FloatImageFile::load(psf)?;
    let kernel = Psf::new(kernel.width, kernel.height, kernel.to_f64())?;
    let opts = SidelobeOptions {
        domain: if linear {
            CompareDomain::Linear
        } else {
            CompareDomain::Db
        },
        peak_threshold,
        ..SidelobeOptions::default()
    };
    let filtered = sidelobe_filter(&img.to_f64(), img.width, img.height, &kernel, &opts)?;
    let out = create_out(cfg)?;
    let stem = image.file_stem().and_then(|s| s.to_str()).unwrap_or("image");
    let mut files = Vec::new();
    let f = FloatImageFile::new(img.width, img.height, img.domain, &filtered)?;
    write_image(out, &format!("{stem}_filtered"), &f, cfg.display_floor_db, &mut files)?;
    Ok(files)
}

/// Draws Gamma scattering for `mesh.path`: facets before `target_facets`
/// use the target distribution, the rest the background one. Writes the
/// mesh and its `.scat` sidecar.
pub fn cmd_synth_texture(cfg: &RunConfig, target_facets: Option<usize>) -> Result<Vec<PathBuf>> {
    let mut mesh = target_mesh(cfg)?;
    let n = mesh.facet_count();
    let split = target_facets.unwrap_or(n);
    if split > n {
        return Err(Error::InvalidParameter(format!(
            "{split} target facets requested, mesh has {n}"
        )));
    }
    mesh.scattering = synthesize_textures(n, &GammaTextureSpec::target_and_background(split, n), cfg.seed)?;
    let out = create_out(cfg)?;
    let obj = out.join("textured.obj");
    let scat = out.join("textured.scat");
    save_obj(&mesh, &obj)?;
    save_scat(&mesh, &scat)?;
    Ok(vec![obj, scat])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::RadarView;
    use crate::io::ViewsSection;
    use crate::mesh::{box_mesh, building_scene};
    use nalgebra::Vector3;

    fn small_cfg(dir: &Path) -> RunConfig {
        let mut cfg = RunConfig::default();
        cfg.out = dir.join("out");
        cfg.grid = crate::geometry::ImageSize {
            nx: 24,
            nz: 24,
            rz: 3.0 / 24.0,
        };
        cfg.render = crate::raster::RenderParams::new(0.3, 1e-3, 0.5);
        cfg
    }

    fn write_mesh(mesh: &TriangleMesh, path: &Path) {
        save_obj(mesh, path).unwrap();
        save_scat(mesh, crate::mesh::scat_sidecar_path(path)).unwrap();
    }

    #[test]
    fn render_writes_four_files_per_view() {
        let dir = tempfile::tempdir().unwrap();
        let scene = building_scene(1.0, 0.5, 1.0, 2.0);
        let mut mesh = scene.mesh.clone();
        mesh.scattering = scene.textured(0.1, 0.5, 1.0);
        let path = dir.path().join("building.obj");
        write_mesh(&mesh, &path);
        let mut cfg = small_cfg(dir.path());
        cfg.mesh.path = Some(path);
        let r = cmd_render(&cfg).unwrap();
        assert_eq!(r.files.len(), 4);
        assert!(r.silhouette_max[0] > 0.99);
        for f in &r.files {
            assert!(f.exists());
        }
        cfg.views = ViewsSection {
            standard: Some(32),
            list: vec![],
        };
        cfg.grid.nx = 8;
        cfg.grid.nz = 8;
        assert_eq!(cmd_render(&cfg).unwrap().files.len(), 128);
        assert_eq!(ViewManifest::load(&cfg.out).unwrap().views.len(), 32);
    }

    #[test]
    fn missing_mesh_names_path() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = small_cfg(dir.path());
        let missing = dir.path().join("nowhere.obj");
        cfg.mesh.path = Some(missing.clone());
        let err = cmd_render(&cfg).unwrap_err();
        assert!(matches!(err, Error::Io { .. }));
        assert!(err.to_string().contains("nowhere.obj"));
    }

    #[test]
    fn reconstruct_round_trip_and_modes() {
        let dir = tempfile::tempdir().unwrap();
        let truth = box_mesh(Vector3::zeros(), Vector3::new(1.4, 0.8, 1.0));
        let path = dir.path().join("truth.obj");
        write_mesh(&truth, &path);
        let mut cfg = small_cfg(dir.path());
        cfg.mesh.path = Some(path);
        cfg.views = ViewsSection {
            standard: Some(4),
            list: vec![],
        };
        cmd_render(&cfg).unwrap();

        let mut rc = cfg.clone();
        rc.input = Some(cfg.out.clone());
        rc.out = dir.path().join("recon");
        rc.mesh.template_subdivisions = 1;
        rc.mesh.template_radius = 0.7;
        rc.optim.epochs = 0;
        let r = cmd_reconstruct(&rc).unwrap();
        assert!(r.history.is_empty());
        let back = load_mesh(rc.out.join("recon.obj")).unwrap();
        assert_eq!(back.vertices, icosphere(1, 0.7).unwrap().vertices);
        assert!(rc.out.join("recon.scat").exists());

        rc.out = dir.path().join("recon_sil");
        rc.loss.mode = LossMode::SilhouetteOnly;
        rc.optim.epochs = 4;
        rc.optim.snapshot_every = Some(2);
        let r = cmd_reconstruct(&rc).unwrap();
        assert!(!rc.out.join("recon.scat").exists());
        assert!(rc.out.join("snapshot_0002.obj").exists() && rc.out.join("snapshot_0004.obj").exists());
        assert!(r.voxel_iou.unwrap() > 0.0);
        let csv = fs::read_to_string(rc.out.join("history.csv")).unwrap();
        assert_eq!(csv.lines().count(), 1 + 4);
    }

    #[test]
    fn pose_report_and_iou() {
        let dir = tempfile::tempdir().unwrap();
        let mesh = box_mesh(Vector3::zeros(), Vector3::new(1.5, 0.6, 0.9));
        let path = dir.path().join("m.obj");
        write_mesh(&mesh, &path);
        let mut cfg = small_cfg(dir.path());
        cfg.mesh.path = Some(path.clone());
        let truth = RadarView::new(50.0, 20.0);
        cfg.views = ViewsSection {
            standard: None,
            list: vec![truth],
        };
        cmd_render(&cfg).unwrap();
        cfg.pose.observed = Some(cfg.out.join("view_00_sil.fimg"));
        cfg.pose.init = truth;
        cfg.pose.truth = Some(truth);
        cfg.pose.epochs = 5;
        let r = cmd_estimate_pose(&cfg).unwrap();
        assert!(r.result.final_iou >= r.result.initial_iou);
        assert!(r.table.contains("ground_truth") && r.table.contains("status: converged"));

        assert_eq!(cmd_eval_iou(&path, &path, 16).unwrap(), 1.0);
    }

    #[test]
    fn far_pose_is_flagged() {
        let mesh = box_mesh(Vector3::zeros(), Vector3::new(1.5, 0.6, 0.9));
        let size = crate::geometry::ImageSize {
            nx: 24,
            nz: 24,
            rz: 3.0 / 24.0,
        };
        let params = crate::raster::RenderParams::new(0.3, 1e-3, 0.5);
        let truth = RadarView::new(50.0, 20.0);
        let observed = render_silhouette(&mesh, &truth, &size.grid_for(&truth).unwrap(), &params)
            .unwrap()
            .data;
        let init = RadarView {
            scale: 0.2,
            ..RadarView::new(20.0, 200.0)
        };
        let cfg = PoseConfig {
            params,
            epochs: 3,
            ..PoseConfig::default()
        };
        let r = estimate_pose(&observed, &mesh, &init, size, &cfg).unwrap();
        assert!(!r.converged());
        assert!(pose_table(&r, None).contains("not converged"));
    }

    #[test]
    fn filter_and_texture_commands() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = small_cfg(dir.path());
        let mut img = vec![0.0; 49];
        img[24] = 1.0;
        img[26] = 0.001;
        let image = dir.path().join("img.fimg");
        FloatImageFile::new(7, 7, ValueDomain::Linear, &img)
            .unwrap()
            .save(&image)
            .unwrap();
        let psf = Psf::sinc_db(2, 1.5, -25.0);
        let psf_path = dir.path().join("psf.fimg");
        FloatImageFile::new(psf.width, psf.height, ValueDomain::Db, &psf.values)
            .unwrap()
            .save(&psf_path)
            .unwrap();
        let files = cmd_filter_sidelobes(&cfg, &image, &psf_path, false, None).unwrap();
        let out = FloatImageFile::load(&files[0]).unwrap();
        assert_eq!(out.data[24], 1.0);
        assert_eq!(out.data[26], 0.0);

        let mut tcfg = cfg.clone();
        let path = dir.path().join("cube.obj");
        write_mesh(&box_mesh(Vector3::zeros(), Vector3::repeat(1.0)), &path);
        tcfg.mesh.path = Some(path);
        tcfg.seed = 5;
        let files = cmd_synth_texture(&tcfg, Some(6)).unwrap();
        let textured = load_mesh(&files[0]).unwrap();
        assert_eq!(textured.facet_count(), 12);
        assert!(textured.scattering.iter().all(|&s| s > 0.0));
        let again = cmd_synth_texture(&tcfg, Some(6)).unwrap();
        assert_eq!(load_mesh(&again[0]).unwrap().scattering, textured.scattering);
    }
}
