use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use diffsar::commands::{
    cmd_estimate_pose, cmd_eval_iou, cmd_filter_sidelobes, cmd_reconstruct, cmd_render, cmd_synth_texture,
};
use diffsar::io::{RunConfig, ViewsSection};
use diffsar::loss::LossMode;
use diffsar::Error;

/// Differentiable SAR rendering, reconstruction and pose estimation.
///
/// Settings come from the TOML file given by --config; flags override it.
#[derive(Parser)]
#[command(version)]
struct Cli {
    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Full,
    SilhouetteOnly,
}

#[derive(Subcommand)]
enum Command {
    /// Render SAR and silhouette images of a mesh.
    Render {
        #[arg(long)]
        mesh: Option<PathBuf>,
        /// Use the first N views of the standard 32-view acquisition.
        #[arg(long)]
        views: Option<usize>,
    },
    /// Reconstruct a mesh from rendered views.
    Reconstruct {
        /// Directory written by `render`.
        #[arg(long)]
        input: Option<PathBuf>,
        /// Target mesh for the voxel IoU report.
        #[arg(long)]
        mesh: Option<PathBuf>,
        #[arg(long)]
        template: Option<PathBuf>,
        #[arg(long, value_enum)]
        mode: Option<Mode>,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        snapshot_every: Option<usize>,
    },
    /// Fit the viewing pose of a known mesh to an observed silhouette.
    EstimatePose {
        #[arg(long)]
        mesh: Option<PathBuf>,
        #[arg(long)]
        observed: Option<PathBuf>,
        #[arg(long)]
        epochs: Option<usize>,
    },
    /// Voxel IoU of two watertight meshes.
    EvalIou {
        a: PathBuf,
        b: PathBuf,
        #[arg(long, default_value_t = 32)]
        resolution: usize,
    },
    /// Suppress PSF sidelobes in a linear-intensity image.
    FilterSidelobes {
        image: PathBuf,
        psf: PathBuf,
        /// Compare raw intensities instead of dB.
        #[arg(long)]
        linear: bool,
        /// Peak threshold in the comparison domain.
        #[arg(long)]
        threshold: Option<f64>,
    },
    /// Draw Gamma-distributed scattering for a mesh.
    SynthTexture {
        #[arg(long)]
        mesh: Option<PathBuf>,
        /// Facets before this index are target, the rest background.
        #[arg(long)]
        target_facets: Option<usize>,
    },
}

fn run(cli: Cli) -> diffsar::Result<()> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(t) = cli.threads {
        cfg.threads = Some(t);
    }
    if let Some(o) = cli.out {
        cfg.out = o;
    }
    if let Some(n) = cfg.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Config(e.to_string()))?;
    }
    match cli.command {
        Command::Render { mesh, views } => {
            cfg.mesh.path = mesh.or(cfg.mesh.path);
            if let Some(n) = views {
                cfg.views = ViewsSection {
                    standard: Some(n),
                    list: vec![],
                };
            }
            let r = cmd_render(&cfg)?;
            println!("wrote {} files to {}", r.files.len(), cfg.out.display());
        }
        Command::Reconstruct {
            input,
            mesh,
            template,
            mode,
            epochs,
            snapshot_every,
        } => {
            cfg.input = input.or(cfg.input);
            cfg.mesh.path = mesh.or(cfg.mesh.path);
            cfg.mesh.template = template.or(cfg.mesh.template);
            if let Some(m) = mode {
                cfg.loss.mode = match m {
                    Mode::Full => LossMode::Full,
                    Mode::SilhouetteOnly => LossMode::SilhouetteOnly,
                };
            }
            cfg.optim.epochs = epochs.unwrap_or(cfg.optim.epochs);
            cfg.optim.snapshot_every = snapshot_every.or(cfg.optim.snapshot_every);
            let r = cmd_reconstruct(&cfg)?;
            if let Some(last) = r.history.last() {
                println!("final loss {:.6} (silhouette {:.6})", last.total, last.terms.silhouette);
            }
            if let Some(iou) = r.voxel_iou {
                println!("voxel IoU {iou:.4}");
            }
            println!("wrote {} files to {}", r.files.len(), cfg.out.display());
        }
        Command::EstimatePose { mesh, observed, epochs } => {
            cfg.mesh.path = mesh.or(cfg.mesh.path);
            cfg.pose.observed = observed.or(cfg.pose.observed);
            cfg.pose.epochs = epochs.unwrap_or(cfg.pose.epochs);
            let r = cmd_estimate_pose(&cfg)?;
            print!("{}", r.table);
        }
        Command::EvalIou { a, b, resolution } => {
            println!("{:.6}", cmd_eval_iou(&a, &b, resolution)?);
        }
        Command::FilterSidelobes {
            image,
            psf,
            linear,
            threshold,
        } => {
            for f in cmd_filter_sidelobes(&cfg, &image, &psf, linear, threshold)? {
                println!("{}", f.display());
            }
        }
        Command::SynthTexture { mesh, target_facets } => {
            cfg.mesh.path = mesh.or(cfg.mesh.path);
            for f in cmd_synth_texture(&cfg, target_facets)? {
                println!("{}", f.display());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Io { .. } | Error::Config(_) => ExitCode::from(2),
                _ => ExitCode::FAILURE,
            }
        }
    }
}
