//! Machine-readable outputs of the `--json` flag.

use std::collections::BTreeMap;
use std::path::PathBuf;

use entcert::bounds::BoundResult;
use entcert::optimize::{OptResult, SeesawConfig};
use entcert::simulate::Estimate;
use entcert::witness::CertificationVerdict;
use entcert::Dims;
use serde::Serialize;

use crate::io::Sidecar;

#[derive(Serialize)]
pub struct BoundsReport {
    pub witness: String,
    pub witness_source: String,
    pub witness_sha256: String,
    pub alphabet: usize,
    pub budget: u64,
    pub result: BoundResult,
}

#[derive(Serialize)]
pub struct OptimizeReport<'a> {
    pub witness_source: String,
    pub witness_sha256: String,
    pub config: SeesawConfig,
    pub strategy_dump: Option<PathBuf>,
    pub result: &'a OptResult,
}

#[derive(Serialize)]
pub struct SimulateReport {
    pub witness: String,
    pub witness_source: String,
    pub visibility: f64,
    pub shots: u64,
    pub seed: u64,
    pub counts_file: PathBuf,
    pub sidecar_file: PathBuf,
    pub exact_value: f64,
    pub estimate: Estimate,
}

/// Verdict fields at the top level, plus where the inputs came from and
/// the settings used.
#[derive(Serialize)]
pub struct CertificationReport {
    #[serde(flatten)]
    pub verdict: CertificationVerdict,
    pub provenance: Provenance,
    pub config: CertifyConfig,
}

#[derive(Serialize)]
pub struct Provenance {
    pub counts_file: PathBuf,
    pub counts_sha256: String,
    pub sidecar_file: Option<PathBuf>,
    pub sidecar: Option<Sidecar>,
    /// Sampling seed recorded in the sidecar.
    pub seed: Option<u64>,
    pub witness_source: String,
    pub witness_sha256: String,
    pub ratios_file: Option<PathBuf>,
    pub ratios_sha256: Option<String>,
}

#[derive(Serialize)]
pub struct CertifyConfig {
    pub significance: f64,
    pub shots: u64,
    pub dims: Dims,
    /// Splitting ratios applied, keyed by 1-based outcome.
    pub ratios: BTreeMap<usize, f64>,
}

#[derive(Serialize)]
pub struct SweepPoint {
    pub visibility: f64,
    pub value: f64,
}

#[derive(Serialize)]
pub struct SweepReport {
    pub witness: String,
    pub unentangled_bound: Option<f64>,
    pub points: Vec<SweepPoint>,
}

#[derive(Serialize)]
pub struct PrepRow {
    pub party: String,
    pub setting: usize,
    pub h: f64,
    pub v: f64,
}
