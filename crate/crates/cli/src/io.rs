//! File formats: witness JSON, counts CSV with its JSON sidecar, splitting
//! ratios, and content hashes for provenance.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use entcert::simulate::{CountTable, SplittingRatios};
use entcert::table::Dims;
use entcert::witness::{builtin, WitnessSpec};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::Failure;

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// A witness together with where it came from.
pub struct LoadedWitness {
    pub spec: WitnessSpec,
    pub source: String,
    pub sha256: String,
}

/// `w` and `v` name the built-in witnesses; anything else is a file path.
pub fn load_witness(arg: &str) -> Result<LoadedWitness, Failure> {
    if let Some(spec) = builtin(arg) {
        let sha256 = sha256_hex(spec.to_json().as_bytes());
        return Ok(LoadedWitness {
            spec,
            source: format!("builtin:{arg}"),
            sha256,
        });
    }
    let text = fs::read(arg).map_err(|e| Failure::parse(format!("cannot read witness file {arg}: {e}")))?;
    let spec = WitnessSpec::from_json(&String::from_utf8_lossy(&text))
        .map_err(|e| Failure::parse(format!("{arg}: {e}")))?;
    Ok(LoadedWitness {
        spec,
        source: arg.to_string(),
        sha256: sha256_hex(&text),
    })
}

#[derive(Debug, Serialize, Deserialize)]
struct CountRow {
    z: usize,
    x: usize,
    y: usize,
    c: usize,
    count: u64,
}

/// Writes `z,x,y,c,count` rows; `c` is 1-based in the file.
pub fn write_counts(path: &Path, counts: &CountTable) -> Result<(), Failure> {
    let mut w = csv::Writer::from_path(path)
        .map_err(|e| Failure::io(format!("cannot write {}: {e}", path.display())))?;
    let d = counts.dims();
    for z in 0..d.nz {
        for x in 0..d.nx {
            for y in 0..d.ny {
                for c in 0..d.nc {
                    w.serialize(CountRow {
                        z,
                        x,
                        y,
                        c: c + 1,
                        count: counts.count(c, x, y, z),
                    })
                    .map_err(|e| Failure::io(e.to_string()))?;
                }
            }
        }
    }
    w.flush().map_err(|e| Failure::io(e.to_string()))
}

/// Reads a counts file. Dimensions are inferred from the largest indices;
/// rows that are absent count as zero. Every `(x, y, z)` group must hold
/// the same number of events.
pub fn read_counts(path: &Path) -> Result<(CountTable, Vec<u8>), Failure> {
    let bytes = fs::read(path)
        .map_err(|e| Failure::parse(format!("cannot read counts file {}: {e}", path.display())))?;
    let mut reader = csv::Reader::from_reader(bytes.as_slice());
    let mut rows = BTreeMap::new();
    for (i, row) in reader.deserialize::<CountRow>().enumerate() {
        let row = row.map_err(|e| Failure::parse(format!("{}: {e}", path.display())))?;
        if row.c == 0 {
            return Err(Failure::parse(format!(
                "{}: row {}: outcome index c is 1-based",
                path.display(),
                i + 2
            )));
        }
        let key = (row.z, row.x, row.y, row.c - 1);
        if rows.insert(key, row.count).is_some() {
            return Err(Failure::parse(format!(
                "{}: duplicate row z={} x={} y={} c={}",
                path.display(),
                row.z,
                row.x,
                row.y,
                row.c
            )));
        }
    }
    if rows.is_empty() {
        return Err(Failure::parse(format!("{}: no count rows", path.display())));
    }
    let max = |f: fn(&(usize, usize, usize, usize)) -> usize| rows.keys().map(f).max().unwrap() + 1;
    let dims = Dims::new(max(|k| k.1), max(|k| k.2), max(|k| k.0), max(|k| k.3));
    let mut counts = vec![0u64; dims.len()];
    for (&(z, x, y, c), &n) in &rows {
        counts[dims.index(c, x, y, z)] = n;
    }
    let shots = counts[..dims.nc].iter().sum();
    let table = CountTable::new(dims, shots, counts)
        .map_err(|e| Failure::parse(format!("{}: {e}", path.display())))?;
    Ok((table, bytes))
}

/// Metadata stored next to a counts file as `<counts>.meta.json`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Sidecar {
    pub shots: u64,
    pub seed: u64,
    pub witness: String,
    pub visibility: f64,
    /// Splitting ratios keyed by 1-based outcome.
    pub ratios: BTreeMap<usize, f64>,
    pub notes: String,
    pub tool: String,
}

pub fn sidecar_path(counts: &Path) -> PathBuf {
    let mut name = counts.as_os_str().to_owned();
    name.push(".meta.json");
    PathBuf::from(name)
}

pub fn write_sidecar(counts: &Path, meta: &Sidecar) -> Result<(), Failure> {
    let path = sidecar_path(counts);
    let text = serde_json::to_string_pretty(meta).expect("sidecar serializes");
    fs::write(&path, text).map_err(|e| Failure::io(format!("cannot write {}: {e}", path.display())))
}

pub fn read_sidecar(counts: &Path) -> Result<Option<Sidecar>, Failure> {
    let path = sidecar_path(counts);
    if !path.exists() {
        return Ok(None);
    }
    let text = fs::read_to_string(&path)
        .map_err(|e| Failure::parse(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map(Some)
        .map_err(|e| Failure::parse(format!("{}: {e}", path.display())))
}

/// Ratios file: a JSON object from 1-based outcome to resolved fraction,
/// e.g. `{"3": 0.5}`.
pub fn read_ratios(path: &Path) -> Result<(SplittingRatios, BTreeMap<usize, f64>, Vec<u8>), Failure> {
    let bytes = fs::read(path)
        .map_err(|e| Failure::parse(format!("cannot read ratios file {}: {e}", path.display())))?;
    let raw: BTreeMap<usize, f64> = serde_json::from_slice(&bytes)
        .map_err(|e| Failure::parse(format!("{}: {e}", path.display())))?;
    let ratios = to_ratios(&raw)?;
    Ok((ratios, raw, bytes))
}

pub fn to_ratios(raw: &BTreeMap<usize, f64>) -> Result<SplittingRatios, Failure> {
    if raw.contains_key(&0) {
        return Err(Failure::parse("splitting ratios are keyed by 1-based outcome".into()));
    }
    SplittingRatios::new(raw.iter().map(|(&c, &r)| (c - 1, r))).map_err(Failure::from)
}
