//! Versioned JSON instance files.
//!
//! A file stores the generator parameters (seed included) next to the full
//! instance data, so a benchmark can be replayed without the RNG.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::lp::{LpInstance, LpParams};
use super::snl::{Edge, SnlInstance, SnlParams};
use crate::error::{Error, Result};
use crate::problem::Objective;

pub const FORMAT_NAME: &str = "drsom-instance";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub enum Instance {
    Lp { params: Option<LpParams>, inst: LpInstance },
    Snl { params: Option<SnlParams>, inst: SnlInstance },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct InstanceFile {
    format: String,
    version: u32,
    #[serde(flatten)]
    body: Body,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum Body {
    Lp { params: Option<LpParams>, data: LpData },
    Snl { params: Option<SnlParams>, data: SnlData },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct LpData {
    /// Row-major `n x m`.
    a: Vec<Vec<f64>>,
    b: Vec<f64>,
    lambda: f64,
    p: f64,
    eps: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct SnlData {
    anchors: Vec<[f64; 2]>,
    sensor_edges: Vec<Edge>,
    anchor_edges: Vec<Edge>,
    truth: Vec<[f64; 2]>,
}

impl Instance {
    pub fn kind(&self) -> &'static str {
        match self {
            Instance::Lp { .. } => "lp",
            Instance::Snl { .. } => "snl",
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Instance::Lp { inst, .. } => inst.a.ncols(),
            Instance::Snl { inst, .. } => inst.dim(),
        }
    }

    pub fn objective(&self) -> Objective {
        match self {
            Instance::Lp { inst, .. } => Objective::new(inst.objective()),
            Instance::Snl { inst, .. } => Objective::new(inst.objective()),
        }
    }

    /// Zero start for both families.
    pub fn start(&self) -> DVector<f64> {
        DVector::zeros(self.dim())
    }

    fn to_file(&self) -> InstanceFile {
        let body = match self {
            Instance::Lp { params, inst } => Body::Lp {
                params: params.clone(),
                data: LpData {
                    a: inst.a.row_iter().map(|r| r.iter().copied().collect()).collect(),
                    b: inst.b.iter().copied().collect(),
                    lambda: inst.lambda,
                    p: inst.p,
                    eps: inst.eps,
                },
            },
            Instance::Snl { params, inst } => Body::Snl {
                params: params.clone(),
                data: SnlData {
                    anchors: inst.anchors.clone(),
                    sensor_edges: inst.sensor_edges.clone(),
                    anchor_edges: inst.anchor_edges.clone(),
                    truth: inst.truth.clone(),
                },
            },
        };
        InstanceFile {
            format: FORMAT_NAME.into(),
            version: FORMAT_VERSION,
            body,
        }
    }

    fn from_file(file: InstanceFile) -> Result<Self> {
        if file.format != FORMAT_NAME {
            return Err(Error::InvalidInstance(format!("unknown format '{}'", file.format)));
        }
        if file.version != FORMAT_VERSION {
            return Err(Error::InvalidInstance(format!("unsupported version {}", file.version)));
        }
        match file.body {
            Body::Lp { params, data } => {
                let n = data.a.len();
                let m = data.a.first().map_or(0, Vec::len);
                if data.a.iter().any(|r| r.len() != m) {
                    return Err(Error::InvalidInstance("ragged matrix rows".into()));
                }
                let a = DMatrix::from_fn(n, m, |i, j| data.a[i][j]);
                let inst = LpInstance {
                    a,
                    b: DVector::from_vec(data.b),
                    lambda: data.lambda,
                    p: data.p,
                    eps: data.eps,
                };
                inst.validate()?;
                Ok(Instance::Lp { params, inst })
            }
            Body::Snl { params, data } => {
                let inst = SnlInstance {
                    anchors: data.anchors,
                    sensor_edges: data.sensor_edges,
                    anchor_edges: data.anchor_edges,
                    truth: data.truth,
                };
                inst.validate()?;
                Ok(Instance::Snl { params, inst })
            }
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&self.to_file())?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Self::from_file(serde_json::from_str(s)?)
    }

    /// SHA-256 of the compact JSON encoding, hex encoded.
    pub fn digest(&self) -> Result<String> {
        let bytes = serde_json::to_vec(&self.to_file())?;
        Ok(hex::encode(Sha256::digest(&bytes)))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}
