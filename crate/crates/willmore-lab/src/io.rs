//! Mesh file formats: OBJ for R³, extended OBJ (four floats per vertex line,
//! `# ambient_dim 4` header) for R⁴, and a JSON container for either.
//! Floats are written with 17 significant digits so that load(save(m))
//! reproduces positions bit-exactly.

use std::fs;
use std::io::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use willmore_core::geom::Vec4;
use willmore_core::TriMesh;

use crate::error::LabError;

/// 17 significant digits: round-trips any f64 exactly.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn save_obj(mesh: &TriMesh, path: &Path) -> Result<(), LabError> {
    let dim = mesh.ambient_dim();
    let mut out = String::new();
    out.push_str(&format!("# ambient_dim {dim}\n"));
    for p in mesh.positions() {
        out.push('v');
        for c in p.iter().take(dim) {
            out.push(' ');
            out.push_str(&fmt_f64(*c));
        }
        out.push('\n');
    }
    for f in mesh.faces() {
        out.push_str(&format!("f {} {} {}\n", f[0] + 1, f[1] + 1, f[2] + 1));
    }
    let mut file = fs::File::create(path)?;
    file.write_all(out.as_bytes())?;
    Ok(())
}

pub fn load_obj(path: &Path) -> Result<TriMesh, LabError> {
    let text = fs::read_to_string(path)?;
    let mut positions: Vec<Vec4> = Vec::new();
    let mut faces: Vec<[usize; 3]> = Vec::new();
    let mut dim: Option<usize> = None;
    for (lineno, line) in text.lines().enumerate() {
        let bad = |msg: &str| LabError::Format(format!("{}:{}: {msg}", path.display(), lineno + 1));
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut tok = line.split_whitespace();
        match tok.next() {
            Some("v") => {
                let coords: Vec<f64> = tok
                    .map(|t| t.parse::<f64>())
                    .collect::<Result<_, _>>()
                    .map_err(|_| bad("unparseable vertex coordinate"))?;
                if coords.len() != 3 && coords.len() != 4 {
                    return Err(bad("vertex line needs 3 or 4 coordinates"));
                }
                match dim {
                    None => dim = Some(coords.len()),
                    Some(d) if d != coords.len() => {
                        return Err(bad("mixed ambient dimension"));
                    }
                    _ => {}
                }
                let mut p = [0.0f64; 4];
                p[..coords.len()].copy_from_slice(&coords);
                positions.push(p);
            }
            Some("f") => {
                let idx: Vec<usize> = tok
                    .map(|t| {
                        // tolerate v/vt/vn references
                        t.split('/')
                            .next()
                            .unwrap_or("")
                            .parse::<usize>()
                            .map_err(|_| bad("unparseable face index"))
                    })
                    .collect::<Result<_, _>>()?;
                if idx.len() != 3 {
                    return Err(bad("only triangle faces are supported"));
                }
                if idx.iter().any(|&i| i == 0) {
                    return Err(bad("face indices are 1-based"));
                }
                faces.push([idx[0] - 1, idx[1] - 1, idx[2] - 1]);
            }
            // ignore normals, texture coords, groups, materials
            Some("vn") | Some("vt") | Some("o") | Some("g") | Some("s")
            | Some("usemtl") | Some("mtllib") => {}
            Some(other) => {
                return Err(bad(&format!("unsupported OBJ element '{other}'")));
            }
            None => {}
        }
    }
    let dim = dim.ok_or_else(|| LabError::Format(format!("{}: no vertices", path.display())))?;
    Ok(TriMesh::new(dim, positions, faces)?)
}

#[derive(Serialize, Deserialize)]
struct MeshFile {
    ambient_dim: usize,
    positions: Vec<Vec<f64>>,
    faces: Vec<[usize; 3]>,
}

pub fn save_json(mesh: &TriMesh, path: &Path) -> Result<(), LabError> {
    let dim = mesh.ambient_dim();
    let file = MeshFile {
        ambient_dim: dim,
        positions: mesh
            .positions()
            .iter()
            .map(|p| p[..dim].to_vec())
            .collect(),
        faces: mesh.faces().to_vec(),
    };
    let mut text = serde_json::to_string_pretty(&file).expect("mesh serialization");
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

pub fn load_json(path: &Path) -> Result<TriMesh, LabError> {
    let text = fs::read_to_string(path)?;
    let file: MeshFile = serde_json::from_str(&text)
        .map_err(|e| LabError::Format(format!("{}: {e}", path.display())))?;
    let mut positions = Vec::with_capacity(file.positions.len());
    for row in &file.positions {
        if row.len() != file.ambient_dim {
            return Err(LabError::Format(format!(
                "{}: vertex row length {} != ambient_dim {}",
                path.display(),
                row.len(),
                file.ambient_dim
            )));
        }
        let mut p = [0.0f64; 4];
        p[..row.len()].copy_from_slice(row);
        positions.push(p);
    }
    Ok(TriMesh::new(file.ambient_dim, positions, file.faces)?)
}

/// Dispatch on extension: `.json` or OBJ otherwise.
pub fn load_mesh(path: &Path) -> Result<TriMesh, LabError> {
    if path.extension().is_some_and(|e| e == "json") {
        load_json(path)
    } else {
        load_obj(path)
    }
}

pub fn save_mesh(mesh: &TriMesh, path: &Path) -> Result<(), LabError> {
    if path.extension().is_some_and(|e| e == "json") {
        save_json(mesh, path)
    } else {
        save_obj(mesh, path)
    }
}
