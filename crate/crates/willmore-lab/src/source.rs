//! Mesh sources: built-in generators or files.

use std::path::PathBuf;

use serde::Serialize;
use willmore_core::generate::{generate, SurfaceSpec};
use willmore_core::TriMesh;

use crate::error::LabError;
use crate::io::load_mesh;

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "gen", rename_all = "kebab-case")]
pub enum GenSpec {
    Sphere {
        subdiv: usize,
    },
    Torus {
        major: f64,
        minor: f64,
        res_u: usize,
        res_v: usize,
    },
    Clifford {
        res: usize,
    },
    CliffordStereo {
        res: usize,
    },
    Necked {
        genus: usize,
        gap: f64,
        neck: f64,
        subdiv: usize,
    },
}

impl GenSpec {
    pub fn build(&self) -> Result<TriMesh, LabError> {
        let spec = match *self {
            GenSpec::Sphere { subdiv } => SurfaceSpec::Sphere { subdiv },
            GenSpec::Torus {
                major,
                minor,
                res_u,
                res_v,
            } => SurfaceSpec::TorusOfRevolution {
                major,
                minor,
                res_u,
                res_v,
            },
            GenSpec::Clifford { res } => SurfaceSpec::CliffordR4 { res },
            GenSpec::CliffordStereo { res } => SurfaceSpec::CliffordStereographic { res },
            GenSpec::Necked {
                genus,
                gap,
                neck,
                subdiv,
            } => SurfaceSpec::NeckedSpheres {
                genus,
                gap,
                neck_radius: neck,
                subdiv,
            },
        };
        Ok(generate(&spec)?)
    }

    pub fn id(&self) -> String {
        match self {
            GenSpec::Sphere { subdiv } => format!("sphere-s{subdiv}"),
            GenSpec::Torus {
                major,
                minor,
                res_u,
                res_v,
            } => format!("torus-{major}-{minor}-{res_u}x{res_v}"),
            GenSpec::Clifford { res } => format!("clifford-{res}"),
            GenSpec::CliffordStereo { res } => format!("clifford-stereo-{res}"),
            GenSpec::Necked {
                genus,
                gap,
                neck,
                subdiv,
            } => format!("necked-p{genus}-gap{gap}-neck{neck}-s{subdiv}"),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum MeshSource {
    Gen(GenSpec),
    Input(PathBuf),
}

impl MeshSource {
    pub fn load(&self) -> Result<TriMesh, LabError> {
        match self {
            MeshSource::Gen(spec) => spec.build(),
            MeshSource::Input(path) => load_mesh(path),
        }
    }

    pub fn id(&self) -> String {
        match self {
            MeshSource::Gen(spec) => spec.id(),
            MeshSource::Input(path) => path.display().to_string(),
        }
    }
}
