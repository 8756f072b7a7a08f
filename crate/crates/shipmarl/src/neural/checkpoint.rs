//! Parameter checkpoints: a JSON shape manifest next to a flat binary
//! blob of little-endian f64 values. Round-trips are bit-exact.

use std::fs;
use std::io::Write;
use std::path::Path;

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::adam::AdamState;
use super::mlp::{HeadSegment, LayerParams, MlpParams};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const DATA_FILE: &str = "params.bin";

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("manifest error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unknown checkpoint entry '{0}'")]
    MissingEntry(String),
    #[error("entry '{name}' is a {actual}, not a {requested}")]
    WrongKind {
        name: String,
        actual: &'static str,
        requested: &'static str,
    },
    #[error("corrupt checkpoint: {0}")]
    Corrupt(String),
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct LayerShape {
    pub rows: usize,
    pub cols: usize,
}

impl LayerShape {
    fn f64_len(&self) -> usize {
        self.rows * self.cols + self.cols
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum EntryMeta {
    Mlp {
        name: String,
        layers: Vec<LayerShape>,
        heads: Vec<HeadSegment>,
        offset: usize,
        len: usize,
    },
    Adam {
        name: String,
        layers: Vec<LayerShape>,
        step: u64,
        alpha: f64,
        beta1: f64,
        beta2: f64,
        eps: f64,
        offset: usize,
        len: usize,
    },
}

impl EntryMeta {
    fn name(&self) -> &str {
        match self {
            EntryMeta::Mlp { name, .. } | EntryMeta::Adam { name, .. } => name,
        }
    }
}

#[derive(Serialize, Deserialize)]
struct Manifest {
    format: String,
    version: u32,
    entries: Vec<EntryMeta>,
}

fn layer_shapes(params: &[LayerParams]) -> Vec<LayerShape> {
    params
        .iter()
        .map(|l| LayerShape {
            rows: l.w.nrows(),
            cols: l.w.ncols(),
        })
        .collect()
}

fn push_layers(data: &mut Vec<f64>, layers: &[LayerParams]) {
    for l in layers {
        data.extend(l.w.iter());
        data.extend(l.b.iter());
    }
}

fn read_layers(
    data: &[f64],
    shapes: &[LayerShape],
    mut offset: usize,
) -> Result<Vec<LayerParams>, CheckpointError> {
    let mut out = Vec::with_capacity(shapes.len());
    for s in shapes {
        let w_len = s.rows * s.cols;
        let end = offset + w_len + s.cols;
        if end > data.len() {
            return Err(CheckpointError::Corrupt(format!(
                "layer data runs past end of blob ({} > {})",
                end,
                data.len()
            )));
        }
        let w = Array2::from_shape_vec((s.rows, s.cols), data[offset..offset + w_len].to_vec())
            .map_err(|e| CheckpointError::Corrupt(e.to_string()))?;
        let b = Array1::from_vec(data[offset + w_len..end].to_vec());
        out.push(LayerParams { w, b });
        offset = end;
    }
    Ok(out)
}

/// Accumulates named parameter sets, then writes the manifest + blob.
#[derive(Default)]
pub struct CheckpointBuilder {
    entries: Vec<EntryMeta>,
    data: Vec<f64>,
}

impl CheckpointBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_mlp(&mut self, name: &str, params: &MlpParams) {
        let offset = self.data.len();
        push_layers(&mut self.data, &params.layers);
        self.entries.push(EntryMeta::Mlp {
            name: name.to_string(),
            layers: layer_shapes(&params.layers),
            heads: params.heads.clone(),
            offset,
            len: self.data.len() - offset,
        });
    }

    pub fn add_adam(&mut self, name: &str, state: &AdamState) {
        let offset = self.data.len();
        push_layers(&mut self.data, &state.m);
        push_layers(&mut self.data, &state.v);
        self.entries.push(EntryMeta::Adam {
            name: name.to_string(),
            layers: layer_shapes(&state.m),
            step: state.step,
            alpha: state.alpha,
            beta1: state.beta1,
            beta2: state.beta2,
            eps: state.eps,
            offset,
            len: self.data.len() - offset,
        });
    }

    pub fn save(&self, dir: &Path) -> Result<(), CheckpointError> {
        fs::create_dir_all(dir)?;
        let manifest = Manifest {
            format: "shipmarl-checkpoint".to_string(),
            version: 1,
            entries: self.entries.clone(),
        };
        let json = serde_json::to_string_pretty(&manifest)?;
        fs::write(dir.join(MANIFEST_FILE), json)?;

        let mut bytes = Vec::with_capacity(self.data.len() * 8);
        for v in &self.data {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
        let mut f = fs::File::create(dir.join(DATA_FILE))?;
        f.write_all(&bytes)?;
        Ok(())
    }
}

/// A loaded checkpoint; individual entries are reconstructed on demand.
pub struct Checkpoint {
    manifest: Manifest,
    data: Vec<f64>,
}

impl Checkpoint {
    pub fn load(dir: &Path) -> Result<Self, CheckpointError> {
        let manifest: Manifest =
            serde_json::from_str(&fs::read_to_string(dir.join(MANIFEST_FILE))?)?;
        if manifest.format != "shipmarl-checkpoint" {
            return Err(CheckpointError::Corrupt(format!(
                "unexpected format tag '{}'",
                manifest.format
            )));
        }
        let bytes = fs::read(dir.join(DATA_FILE))?;
        if bytes.len() % 8 != 0 {
            return Err(CheckpointError::Corrupt(
                "data blob is not a whole number of f64 values".to_string(),
            ));
        }
        let data = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
            .collect();
        Ok(Self { manifest, data })
    }

    pub fn names(&self) -> Vec<&str> {
        self.manifest.entries.iter().map(EntryMeta::name).collect()
    }

    fn find(&self, name: &str) -> Result<&EntryMeta, CheckpointError> {
        self.manifest
            .entries
            .iter()
            .find(|e| e.name() == name)
            .ok_or_else(|| CheckpointError::MissingEntry(name.to_string()))
    }

    pub fn mlp(&self, name: &str) -> Result<MlpParams, CheckpointError> {
        match self.find(name)? {
            EntryMeta::Mlp {
                layers,
                heads,
                offset,
                ..
            } => {
                let layer_params = read_layers(&self.data, layers, *offset)?;
                MlpParams::from_parts(layer_params, heads.clone())
                    .map_err(|e| CheckpointError::Corrupt(e.to_string()))
            }
            EntryMeta::Adam { .. } => Err(CheckpointError::WrongKind {
                name: name.to_string(),
                actual: "adam",
                requested: "mlp",
            }),
        }
    }

    pub fn adam(&self, name: &str) -> Result<AdamState, CheckpointError> {
        match self.find(name)? {
            EntryMeta::Adam {
                layers,
                step,
                alpha,
                beta1,
                beta2,
                eps,
                offset,
                ..
            } => {
                let m = read_layers(&self.data, layers, *offset)?;
                let half: usize = layers.iter().map(LayerShape::f64_len).sum();
                let v = read_layers(&self.data, layers, *offset + half)?;
                Ok(AdamState {
                    alpha: *alpha,
                    beta1: *beta1,
                    beta2: *beta2,
                    eps: *eps,
                    step: *step,
                    m,
                    v,
                })
            }
            EntryMeta::Mlp { .. } => Err(CheckpointError::WrongKind {
                name: name.to_string(),
                actual: "mlp",
                requested: "adam",
            }),
        }
    }
}
