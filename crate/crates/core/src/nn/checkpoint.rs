//! Checkpoint container.
//!
//! ```text
//! <dir>/manifest.json   architecture, preset, dims, flags, tensor table
//! <dir>/weights.f32     b"CPTW", u32 LE version, then f32 LE values in table order
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::io::{decode_f32, encode_f32, prepare_dir, read_bytes, read_json, write_bytes, write_json};
use crate::nn::model::{Architecture, ModelDims, ModelFlags, ModelParams, ParamTensor, SizePreset};

pub const CHECKPOINT_VERSION: u32 = 1;
pub const WEIGHTS_MAGIC: [u8; 4] = *b"CPTW";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const WEIGHTS_FILE: &str = "weights.f32";
const FORMAT: &str = "causalpt-checkpoint";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TensorEntry {
    pub name: String,
    pub shape: Vec<usize>,
    /// Offset in values (not bytes) from the start of the weight payload.
    pub offset: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointManifest {
    pub format: String,
    pub version: u32,
    pub architecture: Architecture,
    pub preset: SizePreset,
    pub dims: ModelDims,
    pub flags: ModelFlags,
    pub hidden: usize,
    pub param_count: usize,
    pub tensors: Vec<TensorEntry>,
    /// SHA-256 of `weights.f32`.
    pub weights_sha256: String,
    /// Caller-supplied description of how the weights were produced.
    pub fingerprint: Option<String>,
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Writes `params` as f32. Weights produced by `init_params` and the
/// trainer are already f32-representable, so loading restores them exactly.
pub fn save_checkpoint(
    params: &ModelParams,
    dir: &Path,
    fingerprint: Option<String>,
    force: bool,
) -> Result<CheckpointManifest> {
    params.check_layout()?;
    prepare_dir(dir, force)?;
    let mut bytes = Vec::with_capacity(8 + 4 * params.param_count());
    bytes.extend_from_slice(&WEIGHTS_MAGIC);
    bytes.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
    let mut tensors = Vec::with_capacity(params.tensors.len());
    let mut offset = 0;
    for t in &params.tensors {
        tensors.push(TensorEntry {
            name: t.name.clone(),
            shape: t.shape.clone(),
            offset,
        });
        offset += t.len();
        encode_f32(t.values.iter().copied(), &mut bytes);
    }
    let manifest = CheckpointManifest {
        format: FORMAT.to_string(),
        version: CHECKPOINT_VERSION,
        architecture: params.architecture,
        preset: params.preset,
        dims: params.dims,
        flags: params.flags,
        hidden: params.hidden,
        param_count: offset,
        tensors,
        weights_sha256: hex(&Sha256::digest(&bytes)),
        fingerprint,
    };
    write_bytes(&dir.join(WEIGHTS_FILE), &bytes)?;
    write_json(&dir.join(MANIFEST_FILE), &manifest)?;
    Ok(manifest)
}

pub fn read_checkpoint_manifest(dir: &Path) -> Result<CheckpointManifest> {
    let path = dir.join(MANIFEST_FILE);
    let manifest: CheckpointManifest = read_json(&path)?;
    if manifest.format != FORMAT {
        return Err(Error::format(&path, format!("unexpected format '{}'", manifest.format)));
    }
    if manifest.version != CHECKPOINT_VERSION {
        return Err(Error::format(
            &path,
            format!(
                "checkpoint version {} is not supported (expected {CHECKPOINT_VERSION})",
                manifest.version
            ),
        ));
    }
    Ok(manifest)
}

pub fn load_checkpoint(dir: &Path) -> Result<ModelParams> {
    let manifest = read_checkpoint_manifest(dir)?;
    let path = dir.join(WEIGHTS_FILE);
    let bytes = read_bytes(&path)?;
    if bytes.len() < 8 || bytes[..4] != WEIGHTS_MAGIC {
        return Err(Error::format(&path, "bad magic bytes"));
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().expect("4 bytes"));
    if version != CHECKPOINT_VERSION {
        return Err(Error::format(
            &path,
            format!("weights version {version} is not supported (expected {CHECKPOINT_VERSION})"),
        ));
    }
    if hex(&Sha256::digest(&bytes)) != manifest.weights_sha256 {
        return Err(Error::format(&path, "checksum does not match manifest"));
    }
    let values = decode_f32(&path, &bytes[8..])?;
    if values.len() != manifest.param_count {
        return Err(Error::format(
            &path,
            format!("{} values, manifest lists {}", values.len(), manifest.param_count),
        ));
    }
    let mut tensors = Vec::with_capacity(manifest.tensors.len());
    for entry in &manifest.tensors {
        let len: usize = entry.shape.iter().product();
        let end = entry.offset + len;
        if end > values.len() {
            return Err(Error::format(&path, format!("tensor {} overruns payload", entry.name)));
        }
        tensors.push(ParamTensor {
            name: entry.name.clone(),
            shape: entry.shape.clone(),
            values: values[entry.offset..end].to_vec(),
            grad: vec![0.0; len],
        });
    }
    let params = ModelParams {
        architecture: manifest.architecture,
        preset: manifest.preset,
        dims: manifest.dims,
        flags: manifest.flags,
        hidden: manifest.hidden,
        tensors,
    };
    params
        .check_layout()
        .map_err(|e| Error::format(dir.join(MANIFEST_FILE), e.to_string()))?;
    Ok(params)
}
