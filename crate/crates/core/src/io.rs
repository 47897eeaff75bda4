//! Run configuration, float-image files, PNG export and view manifests.

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{ImageSize, RadarView};
use crate::imaging::{db_to_u8, image_to_db};
use crate::loss::{LossMode, LossWeights};
use crate::raster::RenderParams;
use crate::recon::standard_view_angles;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MeshSection {
    /// Target mesh (`.obj`, with an optional `.scat` sidecar).
    pub path: Option<PathBuf>,
    /// Reconstruction starting mesh; an icosphere when absent.
    pub template: Option<PathBuf>,
    pub template_subdivisions: u32,
    pub template_radius: f64,
}

impl Default for MeshSection {
    fn default() -> Self {
        Self {
            path: None,
            template: None,
            template_subdivisions: 3,
            template_radius: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ViewsSection {
    /// Use the first `n` views of the standard 32-view acquisition.
    pub standard: Option<usize>,
    /// Explicit views, used when `standard` is absent.
    pub list: Vec<RadarView>,
}

impl Default for ViewsSection {
    fn default() -> Self {
        Self {
            standard: None,
            list: vec![RadarView::new(45.0, 0.0)],
        }
    }
}

impl ViewsSection {
    pub fn resolve(&self) -> Result<Vec<RadarView>> {
        let views = match self.standard {
            Some(n) => {
                let all = standard_view_angles();
                if n == 0 || n > all.len() {
                    return Err(Error::Config(format!(
                        "standard view count must be 1..={}, got {n}",
                        all.len()
                    )));
                }
                all[..n].iter().map(|&(a, b)| RadarView::new(a, b)).collect()
            }
            None => self.list.clone(),
        };
        if views.is_empty() {
            return Err(Error::Config("no views configured".into()));
        }
        for v in &views {
            v.validate()?;
        }
        Ok(views)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LossSection {
    #[serde(flatten)]
    pub weights: LossWeights,
    pub mode: LossMode,
}

impl Default for LossSection {
    fn default() -> Self {
        Self {
            weights: LossWeights::default(),
            mode: LossMode::Full,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimSection {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    /// Write `snapshot_<epoch>.obj` every this many epochs.
    pub snapshot_every: Option<usize>,
}

impl Default for OptimSection {
    fn default() -> Self {
        Self {
            learning_rate: 0.01,
            batch_size: 8,
            epochs: 500,
            snapshot_every: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PoseSection {
    /// Observed silhouette (`.fimg`).
    pub observed: Option<PathBuf>,
    pub init: RadarView,
    /// Known pose, reported alongside the estimate when given.
    pub truth: Option<RadarView>,
    pub epochs: usize,
    pub learning_rate: f64,
}

impl Default for PoseSection {
    fn default() -> Self {
        Self {
            observed: None,
            init: RadarView::default(),
            truth: None,
            epochs: 500,
            learning_rate: 0.01,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub out: PathBuf,
    /// Worker threads; all available cores when absent.
    pub threads: Option<usize>,
    /// Directory holding rendered views and their manifest.
    pub input: Option<PathBuf>,
    /// Lower end of the dB range used for PNG export.
    pub display_floor_db: f64,
    pub mesh: MeshSection,
    pub grid: ImageSize,
    pub render: RenderParams,
    pub views: ViewsSection,
    pub loss: LossSection,
    pub optim: OptimSection,
    pub pose: PoseSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            out: PathBuf::from("out"),
            threads: None,
            input: None,
            display_floor_db: -50.0,
            mesh: MeshSection::default(),
            grid: ImageSize::default(),
            render: RenderParams::default(),
            views: ViewsSection::default(),
            loss: LossSection::default(),
            optim: OptimSection::default(),
            pose: PoseSection::default(),
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }
}

/// Value domain recorded in a float-image header.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ValueDomain {
    Linear,
    Db,
    Binary,
}

impl fmt::Display for ValueDomain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ValueDomain::Linear => "linear",
            ValueDomain::Db => "db",
            ValueDomain::Binary => "binary",
        })
    }
}

impl std::str::FromStr for ValueDomain {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linear" => Ok(ValueDomain::Linear),
            "db" => Ok(ValueDomain::Db),
            "binary" => Ok(ValueDomain::Binary),
            other => Err(Error::Image(format!("unknown value domain '{other}'"))),
        }
    }
}

/// Row-major `f32` image: `FIMG <width> <height> <domain>\n` followed by
/// little-endian values.
#[derive(Debug, Clone, PartialEq)]
pub struct FloatImageFile {
    pub width: usize,
    pub height: usize,
    pub domain: ValueDomain,
    pub data: Vec<f32>,
}

impl FloatImageFile {
    pub fn new(width: usize, height: usize, domain: ValueDomain, data: &[f64]) -> Result<Self> {
        if width == 0 || height == 0 || data.len() != width * height {
            return Err(Error::Image(format!(
                "{} values do not form a {width}×{height} image",
                data.len()
            )));
        }
        if data.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("image contains non-finite values".into()));
        }
        Ok(Self {
            width,
            height,
            domain,
            data: data.iter().map(|&x| x as f32).collect(),
        })
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.data.iter().map(|&x| x as f64).collect()
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = format!("FIMG {} {} {}\n", self.width, self.height, self.domain).into_bytes();
        out.reserve(self.data.len() * 4);
        for x in &self.data {
            out.extend_from_slice(&x.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let nl = bytes
            .iter()
            .position(|&b| b == b'\n')
            .ok_or_else(|| Error::Image("missing header line".into()))?;
        let header = std::str::from_utf8(&bytes[..nl]).map_err(|_| Error::Image("header is not text".into()))?;
        let fields: Vec<&str> = header.split_whitespace().collect();
        let [magic, w, h, domain] = fields[..] else {
            return Err(Error::Image(format!("malformed header '{header}'")));
        };
        if magic != "FIMG" {
            return Err(Error::Image(format!("bad magic '{magic}'")));
        }
        let parse = |s: &str| {
            s.parse::<usize>()
                .map_err(|_| Error::Image(format!("bad dimension '{s}'")))
        };
        let (width, height) = (parse(w)?, parse(h)?);
        let body = &bytes[nl + 1..];
        if width == 0 || height == 0 || body.len() != width * height * 4 {
            return Err(Error::Image(format!(
                "{width}×{height} image needs {} data bytes, found {}",
                width * height * 4,
                body.len()
            )));
        }
        let data: Vec<f32> = body
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
            .collect();
        if data.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("image contains non-finite values".into()));
        }
        Ok(Self {
            width,
            height,
            domain: domain.parse()?,
            data,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
        f.write_all(&self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes).map_err(|e| match e {
            Error::Image(msg) => Error::Image(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    /// 8-bit grey levels: dB-mapped for linear intensities, scaled by 255
    /// for binary or probability images, range-mapped for dB images.
    pub fn to_gray8(&self, floor_db: f64) -> Vec<u8> {
        let data = self.to_f64();
        match self.domain {
            ValueDomain::Linear => db_to_u8(&image_to_db(&data, floor_db), floor_db),
            ValueDomain::Db => db_to_u8(&data, floor_db),
            ValueDomain::Binary => data
                .iter()
                .map(|&x| (x.clamp(0.0, 1.0) * 255.0).round() as u8)
                .collect(),
        }
    }

    pub fn save_png(&self, path: impl AsRef<Path>, floor_db: f64) -> Result<()> {
        let path = path.as_ref();
        let img = image::GrayImage::from_raw(self.width as u32, self.height as u32, self.to_gray8(floor_db))
            .ok_or_else(|| Error::Image("pixel buffer does not match dimensions".into()))?;
        img.save(path)
            .map_err(|e| Error::Image(format!("{}: {e}", path.display())))
    }
}

pub const MANIFEST_FILE: &str = "views.toml";

/// Views rendered into a directory, with the grid they share.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViewManifest {
    pub grid: ImageSize,
    pub views: Vec<ManifestEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    /// File stem: `<name>_sil.fimg`, `<name>_sar.fimg`.
    pub name: String,
    pub view: RadarView,
}

impl ViewManifest {
    pub fn save(&self, dir: &Path) -> Result<()> {
        let path = dir.join(MANIFEST_FILE);
        let text = toml::to_string(self).map_err(|e| Error::Config(e.to_string()))?;
        fs::write(&path, text).map_err(|e| Error::io(&path, e))
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let path = dir.join(MANIFEST_FILE);
        let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }
}

pub fn view_name(index: usize) -> String {
    format!("view_{index:02}")
}
