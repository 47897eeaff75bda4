//! Scene preparation and image post-processing: Gamma-distributed scattering
//! textures, point-spread-function sidelobe suppression, dB display mapping
//! and binary silhouette extraction.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Gamma shape and scale fitted to target returns.
pub const TARGET_GAMMA: (f64, f64) = (1.1948, 0.1508);
/// Gamma shape and scale fitted to ground clutter.
pub const BACKGROUND_GAMMA: (f64, f64) = (2.7179, 0.0177);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GammaRegion {
    pub shape: f64,
    pub scale: f64,
    pub facets: Vec<usize>,
}

impl GammaRegion {
    pub fn new((shape, scale): (f64, f64), facets: Vec<usize>) -> Self {
        Self { shape, scale, facets }
    }
}

/// Disjoint facet regions, each with its own Gamma distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GammaTextureSpec {
    pub regions: Vec<GammaRegion>,
}

impl GammaTextureSpec {
    /// Target facets `0..split`, background facets `split..facet_count`.
    pub fn target_and_background(split: usize, facet_count: usize) -> Self {
        Self {
            regions: vec![
                GammaRegion::new(TARGET_GAMMA, (0..split).collect()),
                GammaRegion::new(BACKGROUND_GAMMA, (split..facet_count).collect()),
            ],
        }
    }

    /// Region index of every facet.
    fn assignment(&self, facet_count: usize) -> Result<Vec<usize>> {
        let mut owner = vec![usize::MAX; facet_count];
        for (r, region) in self.regions.iter().enumerate() {
            if !(region.shape > 0.0 && region.scale > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "region {r} has shape {} and scale {}; both must be positive",
                    region.shape, region.scale
                )));
            }
            for &j in &region.facets {
                let slot = owner
                    .get_mut(j)
                    .ok_or_else(|| Error::InvalidParameter(format!("region {r} names facet {j} of {facet_count}")))?;
                if *slot != usize::MAX {
                    return Err(Error::InvalidParameter(format!(
                        "facet {j} is in regions {} and {r}",
                        *slot
                    )));
                }
                *slot = r;
            }
        }
        if let Some(j) = owner.iter().position(|&r| r == usize::MAX) {
            return Err(Error::InvalidParameter(format!(
                "facet {j} is not covered by any region"
            )));
        }
        Ok(owner)
    }
}

/// Independent Gamma draws per facet, in facet order, from `seed`.
pub fn synthesize_textures(facet_count: usize, spec: &GammaTextureSpec, seed: u64) -> Result<Vec<f64>> {
    let owner = spec.assignment(facet_count)?;
    let dists = spec
        .regions
        .iter()
        .map(|r| Gamma::new(r.shape, r.scale).map_err(|e| Error::InvalidParameter(e.to_string())))
        .collect::<Result<Vec<_>>>()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(owner.iter().map(|&r| dists[r].sample(&mut rng)).collect())
}

/// `10·log10(max(x, 10^(floor/10)))`.
pub fn to_db(x: f64, floor_db: f64) -> f64 {
    10.0 * x.max(10f64.powf(floor_db / 10.0)).log10()
}

pub fn image_to_db(data: &[f64], floor_db: f64) -> Vec<f64> {
    data.iter().map(|&x| to_db(x, floor_db)).collect()
}

/// Linear remap of `[floor_db, max]` onto `[0, 255]`.
pub fn db_to_u8(db: &[f64], floor_db: f64) -> Vec<u8> {
    let max = db.iter().copied().fold(floor_db, f64::max);
    let span = max - floor_db;
    db.iter()
        .map(|&v| {
            if span <= 0.0 {
                0
            } else {
                (((v - floor_db) / span).clamp(0.0, 1.0) * 255.0).round() as u8
            }
        })
        .collect()
}

/// Centred kernel of odd size. Cells outside it impose no constraint.
#[derive(Debug, Clone, PartialEq)]
pub struct Psf {
    pub width: usize,
    pub height: usize,
    /// Row-major values in the comparison domain; the centre must be zero.
    pub values: Vec<f64>,
}

impl Psf {
    pub fn new(width: usize, height: usize, values: Vec<f64>) -> Result<Self> {
        if width.is_multiple_of(2) || height.is_multiple_of(2) || values.len() != width * height {
            return Err(Error::ShapeMismatch(format!(
                "PSF must have odd dimensions and {width}×{height} values, got {}",
                values.len()
            )));
        }
        let psf = Self { width, height, values };
        if psf.at(0, 0) != Some(0.0) {
            return Err(Error::InvalidParameter("PSF centre must be 0".into()));
        }
        Ok(psf)
    }

    /// Separable `sinc²` response in dB, `radius` cells each way, with the
    /// first null `resolution` cells from the centre; floored at `floor_db`.
    pub fn sinc_db(radius: usize, resolution: f64, floor_db: f64) -> Self {
        let n = 2 * radius + 1;
        let sinc = |x: f64| {
            if x == 0.0 {
                1.0
            } else {
                let a = std::f64::consts::PI * x / resolution;
                a.sin() / a
            }
        };
        let mut values = Vec::with_capacity(n * n);
        for r in 0..n {
            for c in 0..n {
                let (dy, dx) = (r as f64 - radius as f64, c as f64 - radius as f64);
                values.push(to_db((sinc(dx) * sinc(dy)).powi(2), floor_db));
            }
        }
        Self {
            width: n,
            height: n,
            values,
        }
    }

    /// Value at offset `(di, dj)` (rows, columns) from the centre.
    pub fn at(&self, di: isize, dj: isize) -> Option<f64> {
        let (hr, hc) = ((self.height / 2) as isize, (self.width / 2) as isize);
        if di.abs() > hr || dj.abs() > hc {
            return None;
        }
        Some(self.values[((di + hr) as usize) * self.width + (dj + hc) as usize])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CompareDomain {
    /// Image converted to dB before differencing.
    #[default]
    Db,
    /// Raw intensities differenced directly.
    Linear,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SidelobeOptions {
    pub domain: CompareDomain,
    /// Peaks must exceed this, in the comparison domain. `None` means
    /// 30 dB below the image maximum (or `max · 10⁻³` in linear mode).
    pub peak_threshold: Option<f64>,
    /// Floor for the dB conversion.
    pub floor_db: f64,
    /// Margin a pixel must clear above the PSF prediction, in the comparison
    /// domain. Absorbs rounding when a pixel is exactly a scaled PSF value.
    pub tolerance: f64,
}

impl Default for SidelobeOptions {
    fn default() -> Self {
        Self {
            domain: CompareDomain::Db,
            peak_threshold: None,
            floor_db: -120.0,
            tolerance: 1e-9,
        }
    }
}

/// Pixels that are at least as large as all 8 neighbours and above `threshold`.
fn local_maxima(values: &[f64], width: usize, height: usize, threshold: f64) -> Vec<(usize, usize)> {
    let mut peaks = Vec::new();
    for i in 0..height {
        for j in 0..width {
            let v = values[i * width + j];
            if !(v > threshold) {
                continue;
            }
            let mut is_max = true;
            'scan: for ni in i.saturating_sub(1)..=(i + 1).min(height - 1) {
                for nj in j.saturating_sub(1)..=(j + 1).min(width - 1) {
                    if values[ni * width + nj] > v {
                        is_max = false;
                        break 'scan;
                    }
                }
            }
            if is_max {
                peaks.push((i, j));
            }
        }
    }
    peaks
}

fn filter_once(data: &[f64], width: usize, height: usize, psf: &Psf, opts: &SidelobeOptions) -> Vec<f64> {
    let cmp: Vec<f64> = match opts.domain {
        CompareDomain::Db => image_to_db(data, opts.floor_db),
        CompareDomain::Linear => data.to_vec(),
    };
    let max = data.iter().copied().fold(0.0, f64::max);
    let threshold = opts.peak_threshold.unwrap_or(match opts.domain {
        CompareDomain::Db => to_db(max, opts.floor_db) - 30.0,
        CompareDomain::Linear => max * 1e-3,
    });
    // zero pixels are already suppressed and never act as peaks
    let mut candidates: Vec<(usize, usize)> = local_maxima(&cmp, width, height, threshold)
        .into_iter()
        .filter(|&(i, j)| data[i * width + j] > 0.0)
        .collect();
    candidates.sort_by(|a, b| cmp[b.0 * width + b.1].total_cmp(&cmp[a.0 * width + a.1]));
    // strongest first; a candidate that fails against an accepted peak is a
    // sidelobe, not a reference
    let passes = |(i, j): (usize, usize), (pi, pj): (usize, usize)| {
        let (di, dj) = (i as isize - pi as isize, j as isize - pj as isize);
        psf.at(di, dj)
            .is_none_or(|limit| cmp[i * width + j] - cmp[pi * width + pj] > limit + opts.tolerance)
    };
    let mut peaks: Vec<(usize, usize)> = Vec::new();
    for c in candidates {
        if peaks.iter().all(|&p| passes(c, p)) {
            peaks.push(c);
        }
    }
    if peaks.is_empty() {
        return data.to_vec();
    }
    let is_peak = {
        let mut m = vec![false; data.len()];
        for &(i, j) in &peaks {
            m[i * width + j] = true;
        }
        m
    };
    let (hr, hc) = ((psf.height / 2) as isize, (psf.width / 2) as isize);
    let mut out = data.to_vec();
    for &(pi, pj) in &peaks {
        let reference = cmp[pi * width + pj];
        let (pi, pj) = (pi as isize, pj as isize);
        for di in -hr..=hr {
            for dj in -hc..=hc {
                let (i, j) = (pi + di, pj + dj);
                if i < 0 || j < 0 || i >= height as isize || j >= width as isize {
                    continue;
                }
                let idx = i as usize * width + j as usize;
                if is_peak[idx] {
                    continue;
                }
                let limit = psf.at(di, dj).expect("offset inside support");
                if !(cmp[idx] - reference > limit + opts.tolerance) {
                    out[idx] = 0.0;
                }
            }
        }
    }
    out
}

/// Zeroes every pixel that fails `x' - x > PSF(Δ) + tolerance` against some peak whose
/// PSF support covers it. Peaks are local maxima above the threshold,
/// accepted from the strongest down unless they fail against a stronger
/// accepted peak; accepted peaks always survive. Repeated until nothing changes, so the result is a fixed
/// point of the filter.
pub fn sidelobe_filter(
    data: &[f64],
    width: usize,
    height: usize,
    psf: &Psf,
    opts: &SidelobeOptions,
) -> Result<Vec<f64>> {
    if data.len() != width * height {
        return Err(Error::ShapeMismatch(format!(
            "image has {} values, expected {width}×{height}",
            data.len()
        )));
    }
    if let Some(x) = data.iter().find(|x| !x.is_finite() || **x < 0.0) {
        return Err(Error::InvalidParameter(format!(
            "sidelobe filter needs finite non-negative intensities, got {x}"
        )));
    }
    let mut current = data.to_vec();
    loop {
        let next = filter_once(&current, width, height, psf, opts);
        if next == current {
            return Ok(current);
        }
        current = next;
    }
}

/// Threshold, keep the largest 8-connected component (the first in raster
/// order on ties), then fill enclosed holes. Returns 0/1 values.
pub fn extract_silhouette(data: &[f64], width: usize, height: usize, threshold: f64) -> Result<Vec<f64>> {
    if data.len() != width * height {
        return Err(Error::ShapeMismatch(format!(
            "image has {} values, expected {width}×{height}",
            data.len()
        )));
    }
    let fg: Vec<bool> = data.iter().map(|&x| x > threshold).collect();
    let mut label = vec![0u32; data.len()];
    let (mut best, mut best_size, mut next) = (0u32, 0usize, 0u32);
    let mut stack = Vec::new();
    for start in 0..data.len() {
        if !fg[start] || label[start] != 0 {
            continue;
        }
        next += 1;
        label[start] = next;
        stack.push(start);
        let mut size = 0;
        while let Some(p) = stack.pop() {
            size += 1;
            let (i, j) = (p / width, p % width);
            for ni in i.saturating_sub(1)..=(i + 1).min(height - 1) {
                for nj in j.saturating_sub(1)..=(j + 1).min(width - 1) {
                    let q = ni * width + nj;
                    if fg[q] && label[q] == 0 {
                        label[q] = next;
                        stack.push(q);
                    }
                }
            }
        }
        if size > best_size {
            (best, best_size) = (next, size);
        }
    }
    if best_size == 0 {
        return Ok(vec![0.0; data.len()]);
    }
    // background reachable from the border through 4-connected steps
    let inside: Vec<bool> = label.iter().map(|&l| l == best).collect();
    let mut outside = vec![false; data.len()];
    for p in 0..data.len() {
        let (i, j) = (p / width, p % width);
        let border = i == 0 || j == 0 || i + 1 == height || j + 1 == width;
        if border && !inside[p] && !outside[p] {
            outside[p] = true;
            stack.push(p);
        }
    }
    while let Some(p) = stack.pop() {
        let (i, j) = (p / width, p % width);
        let mut visit = |q: usize| {
            if !inside[q] && !outside[q] {
                outside[q] = true;
                stack.push(q);
            }
        };
        if i > 0 {
            visit(p - width);
        }
        if i + 1 < height {
            visit(p + width);
        }
        if j > 0 {
            visit(p - 1);
        }
        if j + 1 < width {
            visit(p + 1);
        }
    }
    Ok(outside.iter().map(|&o| if o { 0.0 } else { 1.0 }).collect())
}
