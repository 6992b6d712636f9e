//! Dataset container.
//!
//! ```text
//! <dir>/manifest.json
//! <dir>/<split>/series.f32     f32 LE, [sample][t][v]
//! <dir>/<split>/coeffs.f32     f32 LE, [sample][i][j][lag]
//! <dir>/<split>/funcs.u8       u8,     [sample][i][j][lag]
//! <dir>/<split>/seeds.u64      u64 LE, [sample]
//! <dir>/<split>/nonlinear.u8   u8 0/1, [sample]
//! ```
//!
//! Splits with zero samples are listed in the manifest but have no files.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::{decode_f32, decode_u64, encode_f32, prepare_dir, read_bytes, read_json, write_bytes, write_json};
use crate::semgen::config::SplitKind;
use crate::semgen::dataset::{Dataset, DatasetSource, Sample};
use crate::semgen::functions::FunctionSetId;
use crate::semgen::structure::CoeffTensor;
use crate::series::Series;

pub const DATASET_SCHEMA_VERSION: u32 = 1;
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub schema_version: u32,
    pub format: String,
    pub source: DatasetSource,
    pub master_seed: u64,
    pub num_vars: usize,
    pub max_lag: usize,
    pub series_len: usize,
    pub function_set: FunctionSetId,
    pub ignore_diagonal: bool,
    pub splits: Vec<SplitEntry>,
    pub layout: Vec<FileLayout>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitEntry {
    pub name: SplitKind,
    pub samples: usize,
    pub dir: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileLayout {
    pub file: String,
    pub dtype: String,
    pub byte_order: String,
    pub order: String,
    pub per_sample: Vec<usize>,
}

const FORMAT: &str = "causalpt-dataset";

fn layout(v: usize, n: usize, t: usize) -> Vec<FileLayout> {
    let entry = |file: &str, dtype: &str, order: &str, per_sample: Vec<usize>| FileLayout {
        file: file.to_string(),
        dtype: dtype.to_string(),
        byte_order: "little-endian".to_string(),
        order: order.to_string(),
        per_sample,
    };
    vec![
        entry("series.f32", "f32", "sample, t, v (row-major)", vec![t, v]),
        entry("coeffs.f32", "f32", "sample, i (effect), j (cause), lag 1..N (row-major)", vec![v, v, n]),
        entry("funcs.u8", "u8", "sample, i, j, lag (row-major); index into function_set", vec![v, v, n]),
        entry("seeds.u64", "u64", "sample", vec![1]),
        entry("nonlinear.u8", "u8", "sample; 1 if any present edge is non-identity", vec![1]),
    ]
}

pub fn write_dataset(dataset: &Dataset, dir: &Path, force: bool) -> Result<()> {
    prepare_dir(dir, force)?;
    let mut splits = Vec::new();
    for kind in SplitKind::ALL {
        let samples = dataset.split(kind);
        splits.push(SplitEntry {
            name: kind,
            samples: samples.len(),
            dir: kind.as_str().to_string(),
        });
        let split_dir = dir.join(kind.as_str());
        if samples.is_empty() {
            continue;
        }
        std::fs::create_dir_all(&split_dir).map_err(|e| Error::io(&split_dir, e))?;
        let (mut series, mut coeffs, mut funcs, mut seeds, mut nl) =
            (Vec::new(), Vec::new(), Vec::new(), Vec::new(), Vec::new());
        for s in samples {
            encode_f32(s.series.as_slice().iter().copied(), &mut series);
            encode_f32(s.coeffs.values().iter().copied(), &mut coeffs);
            funcs.extend_from_slice(s.coeffs.func_ids());
            seeds.extend_from_slice(&s.sample_seed.to_le_bytes());
            nl.push(s.nonlinear as u8);
        }
        write_bytes(&split_dir.join("series.f32"), &series)?;
        write_bytes(&split_dir.join("coeffs.f32"), &coeffs)?;
        write_bytes(&split_dir.join("funcs.u8"), &funcs)?;
        write_bytes(&split_dir.join("seeds.u64"), &seeds)?;
        write_bytes(&split_dir.join("nonlinear.u8"), &nl)?;
    }
    let manifest = DatasetManifest {
        schema_version: DATASET_SCHEMA_VERSION,
        format: FORMAT.to_string(),
        source: dataset.source.clone(),
        master_seed: dataset.source.master_seed(),
        num_vars: dataset.num_vars,
        max_lag: dataset.max_lag,
        series_len: dataset.series_len,
        function_set: dataset.function_set,
        ignore_diagonal: dataset.ignore_diagonal,
        splits,
        layout: layout(dataset.num_vars, dataset.max_lag, dataset.series_len),
    };
    write_json(&dir.join(MANIFEST_FILE), &manifest)
}

pub fn read_manifest(dir: &Path) -> Result<DatasetManifest> {
    let path = dir.join(MANIFEST_FILE);
    let manifest: DatasetManifest = read_json(&path)?;
    if manifest.format != FORMAT {
        return Err(Error::format(&path, format!("unexpected format '{}'", manifest.format)));
    }
    if manifest.schema_version != DATASET_SCHEMA_VERSION {
        return Err(Error::format(
            &path,
            format!(
                "schema version {} not supported (expected {})",
                manifest.schema_version, DATASET_SCHEMA_VERSION
            ),
        ));
    }
    Ok(manifest)
}

pub fn read_dataset(dir: &Path) -> Result<Dataset> {
    let m = read_manifest(dir)?;
    let mut dataset = Dataset {
        source: m.source.clone(),
        num_vars: m.num_vars,
        max_lag: m.max_lag,
        series_len: m.series_len,
        function_set: m.function_set,
        ignore_diagonal: m.ignore_diagonal,
        train: Vec::new(),
        val: Vec::new(),
        test1: Vec::new(),
        test2: Vec::new(),
    };
    for entry in &m.splits {
        if entry.samples == 0 {
            continue;
        }
        *dataset.split_mut(entry.name) = read_split(&dir.join(&entry.dir), &m, entry.samples)?;
    }
    Ok(dataset)
}

fn read_split(dir: &Path, m: &DatasetManifest, count: usize) -> Result<Vec<Sample>> {
    let (v, n, t) = (m.num_vars, m.max_lag, m.series_len);
    let entries = v * v * n;
    let load = |name: &str, expected: usize| -> Result<Vec<u8>> {
        let path = dir.join(name);
        let bytes = read_bytes(&path)?;
        if bytes.len() != expected {
            return Err(Error::format(
                &path,
                format!("expected {expected} bytes, found {}", bytes.len()),
            ));
        }
        Ok(bytes)
    };
    let series = decode_f32(&dir.join("series.f32"), &load("series.f32", count * t * v * 4)?)?;
    let coeffs = decode_f32(&dir.join("coeffs.f32"), &load("coeffs.f32", count * entries * 4)?)?;
    let funcs = load("funcs.u8", count * entries)?;
    let seeds = decode_u64(&dir.join("seeds.u64"), &load("seeds.u64", count * 8)?)?;
    let nl = load("nonlinear.u8", count)?;
    let num_fns = m.function_set.functions().len();
    if funcs.iter().any(|&f| f as usize >= num_fns) {
        return Err(Error::format(dir.join("funcs.u8"), "function id out of range"));
    }

    (0..count)
        .map(|k| {
            Ok(Sample {
                series: Series::new(t, v, series[k * t * v..(k + 1) * t * v].to_vec())?,
                coeffs: CoeffTensor::from_parts(
                    v,
                    n,
                    coeffs[k * entries..(k + 1) * entries].to_vec(),
                    funcs[k * entries..(k + 1) * entries].to_vec(),
                )?,
                sample_seed: seeds[k],
                nonlinear: nl[k] != 0,
            })
        })
        .collect()
}
