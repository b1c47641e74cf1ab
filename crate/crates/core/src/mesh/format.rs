//! JSON mesh files.
//!
//! The on-disk form lists vertices, simplices per dimension (0-simplices are
//! implicit), and the cell membership lists per dimension. Boundary relations
//! are never stored — assembly derives them — so a file cannot contradict
//! itself. Saving a mesh writes the face-completed simplex lists; reloading
//! is id-stable.

use std::collections::BTreeMap;
use std::path::Path;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::{CellSpec, Mesh, MeshInput};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MeshFile {
    pub ambient_dim: usize,
    pub vertices: Vec<Vec<f64>>,
    /// Vertex tuples per dimension, keyed by the dimension in decimal.
    #[serde(default)]
    pub simplices: BTreeMap<String, Vec<Vec<usize>>>,
    /// Cell records per dimension, keyed by the dimension in decimal.
    pub cells: BTreeMap<String, Vec<CellRecord>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CellRecord {
    pub simplices: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub star_point: Option<Vec<f64>>,
}

fn parse_dim_key(key: &str, what: &str) -> Result<usize> {
    key.parse::<usize>()
        .map_err(|_| Error::Parse(format!("{what} key {key:?} is not a dimension")))
}

impl MeshFile {
    pub fn into_input(self) -> Result<MeshInput> {
        let mut simplices: Vec<Vec<Vec<usize>>> = Vec::new();
        for (key, list) in self.simplices {
            let k = parse_dim_key(&key, "simplices")?;
            if k == 0 {
                return Err(Error::Parse("0-simplices are implicit, do not list them".into()));
            }
            if simplices.len() <= k {
                simplices.resize(k + 1, Vec::new());
            }
            simplices[k] = list;
        }
        let mut cells: Vec<Vec<CellSpec>> = Vec::new();
        for (key, list) in self.cells {
            let k = parse_dim_key(&key, "cells")?;
            if cells.len() <= k {
                cells.resize(k + 1, Vec::new());
            }
            cells[k] = list
                .into_iter()
                .map(|rec| CellSpec {
                    members: rec.simplices,
                    star_point: rec.star_point.map(|p| DVector::from_vec(p)),
                })
                .collect();
        }
        Ok(MeshInput {
            ambient_dim: self.ambient_dim,
            vertices: self
                .vertices
                .into_iter()
                .map(DVector::from_vec)
                .collect(),
            simplices,
            cells,
        })
    }

    pub fn from_mesh(mesh: &Mesh) -> MeshFile {
        let mut simplices = BTreeMap::new();
        for k in 1..=mesh.dim() {
            simplices.insert(
                k.to_string(),
                mesh.simplices(k).iter().map(|s| s.verts.clone()).collect(),
            );
        }
        let mut cells = BTreeMap::new();
        for k in 0..=mesh.dim() {
            let records: Vec<CellRecord> = mesh
                .cells(k)
                .iter()
                .map(|c| CellRecord {
                    simplices: c.members.clone(),
                    star_point: Some(c.star_point().iter().copied().collect()),
                })
                .collect();
            cells.insert(k.to_string(), records);
        }
        MeshFile {
            ambient_dim: mesh.ambient_dim(),
            vertices: mesh.vertices().iter().map(|v| v.iter().copied().collect()).collect(),
            simplices,
            cells,
        }
    }
}

impl Mesh {
    pub fn from_json(text: &str) -> Result<Mesh> {
        let file: MeshFile = serde_json::from_str(text)?;
        Mesh::assemble(file.into_input()?)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Mesh> {
        Mesh::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> String {
        // BTreeMap keys and stable vector orders make this deterministic
        serde_json::to_string_pretty(&MeshFile::from_mesh(self)).expect("mesh serializes")
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json() + "\n")?;
        Ok(())
    }
}
