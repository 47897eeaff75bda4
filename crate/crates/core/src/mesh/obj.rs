//! Wavefront OBJ subset (`v` and triangular `f` records) plus the `.scat`
//! sidecar carrying one scattering value per facet.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use log::warn;
use nalgebra::Vector3;

use super::TriangleMesh;
use crate::error::{Error, Result};

/// `mesh.obj` -> `mesh.scat`.
pub fn scat_sidecar_path(obj: &Path) -> PathBuf {
    obj.with_extension("scat")
}

/// Loads an OBJ file and, when present, its `.scat` sidecar. Without a
/// sidecar every facet gets scattering `1.0`.
pub fn load_mesh(path: impl AsRef<Path>) -> Result<TriangleMesh> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let (vertices, facets) = load_obj(&text, path)?;
    let sidecar = scat_sidecar_path(path);
    let scattering = if sidecar.exists() {
        let text = fs::read_to_string(&sidecar).map_err(|e| Error::io(&sidecar, e))?;
        let s = load_scat(&text, &sidecar)?;
        if s.len() != facets.len() {
            return Err(Error::InvalidMesh(format!(
                "{}: {} scattering values for {} facets",
                sidecar.display(),
                s.len(),
                facets.len()
            )));
        }
        s
    } else {
        vec![1.0; facets.len()]
    };
    TriangleMesh::new(vertices, facets, scattering)
}

/// Vertex positions and 0-based facet indices.
pub type ObjGeometry = (Vec<Vector3<f64>>, Vec<[usize; 3]>);

/// Parses OBJ text. `origin` is only used in error messages.
pub fn load_obj(text: &str, origin: &Path) -> Result<ObjGeometry> {
    let err = |line: usize, msg: String| Error::Parse {
        path: origin.to_path_buf(),
        line,
        msg,
    };

    let mut vertices = Vec::new();
    let mut raw_facets: Vec<([i64; 3], usize)> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut tokens = line.split_whitespace();
        let tag = tokens.next().unwrap();
        match tag {
            "v" => {
                let coords: Vec<f64> = tokens
                    .take(3)
                    .map(|t| {
                        t.parse::<f64>()
                            .map_err(|_| err(line_no, format!("bad vertex coordinate `{t}`")))
                    })
                    .collect::<Result<_>>()?;
                if coords.len() != 3 {
                    return Err(err(line_no, "vertex needs three coordinates".into()));
                }
                vertices.push(Vector3::new(coords[0], coords[1], coords[2]));
            }
            "f" => {
                let idx: Vec<i64> = tokens
                    .map(|t| {
                        let first = t.split('/').next().unwrap_or("");
                        first
                            .parse::<i64>()
                            .map_err(|_| err(line_no, format!("bad face index `{t}`")))
                    })
                    .collect::<Result<_>>()?;
                if idx.len() != 3 {
                    return Err(err(line_no, format!("non-triangular face with {} vertices", idx.len())));
                }
                raw_facets.push(([idx[0], idx[1], idx[2]], line_no));
            }
            other => warn!("{}:{line_no}: ignoring `{other}` record", origin.display()),
        }
    }

    let nv = vertices.len() as i64;
    let mut facets = Vec::with_capacity(raw_facets.len());
    for (idx, line_no) in raw_facets {
        let mut f = [0usize; 3];
        for (slot, &i) in f.iter_mut().zip(&idx) {
            if i <= 0 {
                return Err(err(
                    line_no,
                    format!("face index {i} not supported (indices are 1-based and positive)"),
                ));
            }
            if i > nv {
                return Err(err(line_no, format!("face index {i} out of range ({nv} vertices)")));
            }
            *slot = (i - 1) as usize;
        }
        if f[0] == f[1] || f[1] == f[2] || f[0] == f[2] {
            return Err(err(line_no, format!("face repeats a vertex index {idx:?}")));
        }
        let a = vertices[f[0]];
        let area = 0.5 * (vertices[f[1]] - a).cross(&(vertices[f[2]] - a)).norm();
        if area < super::DEGENERATE_AREA {
            return Err(err(line_no, format!("degenerate face (area {area:e})")));
        }
        facets.push(f);
    }
    Ok((vertices, facets))
}

pub fn load_scat(text: &str, origin: &Path) -> Result<Vec<f64>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            let v = l.trim().parse::<f64>().map_err(|_| Error::Parse {
                path: origin.to_path_buf(),
                line: i + 1,
                msg: format!("bad scattering value `{}`", l.trim()),
            })?;
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::Parse {
                    path: origin.to_path_buf(),
                    line: i + 1,
                    msg: format!("scattering value {v} must be finite and non-negative"),
                });
            }
            Ok(v)
        })
        .collect()
}

pub fn save_obj(mesh: &TriangleMesh, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::new();
    for v in &mesh.vertices {
        writeln!(out, "v {:?} {:?} {:?}", v.x, v.y, v.z).unwrap();
    }
    for f in &mesh.facets {
        writeln!(out, "f {} {} {}", f[0] + 1, f[1] + 1, f[2] + 1).unwrap();
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

pub fn save_scat(mesh: &TriangleMesh, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::new();
    for s in &mesh.scattering {
        writeln!(out, "{s:?}").unwrap();
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}
