//! `entcert`: certify two-qubit measurement devices from outcome statistics.
//!
//! Exit codes: 0 success, 1 internal error, 2 bad input, 3 enumeration
//! budget exceeded, 4 no convergence under `--strict`, 5 dimension mismatch.

mod io;
mod report;

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use entcert::bounds::{classical_bound_with, EnumerationConfig};
use entcert::model::{
    born_table, partial_bsm_noisy, trigonal_preparations, unentangled_povm_pair, MeasurementAssembly,
    Party, VisibilityModel,
};
use entcert::optimize::{seesaw, Mode, SeesawConfig};
use entcert::simulate::{
    apply_splitting_correction, estimate, prep_characterization, sample_counts, visibility_sweep,
};
use entcert::witness::{evaluate, verdict, WitnessValue, DEFAULT_SIGNIFICANCE};
use entcert::{Dims, Error};

use crate::io::{LoadedWitness, Sidecar};
use crate::report::{CertificationReport, CertifyConfig, Provenance};

/// Error carrying the process exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn parse(message: String) -> Self {
        Self { code: 2, message }
    }

    pub fn io(message: String) -> Self {
        Self { code: 1, message }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::BudgetExceeded { .. } => 3,
            Error::DimensionMismatch(_) | Error::WrongDimension { .. } => 5,
            Error::InvalidConfig(_)
            | Error::InvalidWitness(_)
            | Error::VisibilityOutOfRange(_)
            | Error::RatioOutOfRange(_) => 2,
            _ => 1,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

#[derive(Parser)]
#[command(name = "entcert", version, about = "Certify two-qubit measurements from outcome statistics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Classical bound of a witness by exhaustive enumeration.
    Bounds {
        /// Built-in witness (`w`, `v`) or path to a witness JSON file.
        #[arg(long, default_value = "w")]
        witness: String,
        /// Message alphabet size per preparation device.
        #[arg(long, default_value_t = 2)]
        alphabet: usize,
        /// Largest number of strategies to enumerate.
        #[arg(long, default_value_t = 100_000_000)]
        budget: u64,
        #[arg(long)]
        json: bool,
    },
    /// See-saw maximization of a witness over a strategy class.
    Optimize {
        #[arg(long, default_value = "w")]
        witness: String,
        /// `general`, `locc` or `separable`.
        #[arg(long, default_value = "general")]
        mode: String,
        /// Number of random restarts (default 100, or 1000 for separable).
        #[arg(long)]
        restarts: Option<usize>,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Exit with code 4 when the best restart did not converge.
        #[arg(long)]
        strict: bool,
        /// Write the optimal strategy as JSON to this path.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        json: bool,
    },
    /// Sample finite-statistics counts from the model experiment.
    Simulate {
        #[arg(long, default_value = "w")]
        witness: String,
        /// HOM visibility of the Bell-state measurement.
        #[arg(long, default_value_t = 1.0)]
        visibility: f64,
        /// Trials per (x, y, z) setting.
        #[arg(long, default_value_t = 1_000_000, value_parser = clap::value_parser!(u64).range(1..))]
        shots: u64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Counts CSV to write; metadata goes to `<out>.meta.json`.
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Estimate a witness from a counts file and issue a verdict.
    Certify {
        #[arg(long)]
        counts: PathBuf,
        #[arg(long, default_value = "w")]
        witness: String,
        /// JSON object of splitting ratios keyed by 1-based outcome.
        /// Defaults to the ratios recorded in the sidecar, if any.
        #[arg(long)]
        ratios: Option<PathBuf>,
        /// Significance, in standard errors, needed to exclude a class.
        #[arg(long, default_value_t = DEFAULT_SIGNIFICANCE)]
        sigma: f64,
        /// Also write the report JSON to this path.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        json: bool,
    },
    /// Exact witness value of the model experiment over a visibility grid.
    Sweep {
        #[arg(long, default_value = "w")]
        witness: String,
        /// Comma-separated visibilities; defaults to 0, 0.05, ..., 1.
        #[arg(long, value_delimiter = ',')]
        grid: Vec<f64>,
        #[arg(long)]
        json: bool,
    },
    /// H/V populations of the trigonal preparations.
    PrepTable {
        #[arg(long)]
        json: bool,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Bounds {
            witness,
            alphabet,
            budget,
            json,
        } => cmd_bounds(&witness, alphabet, budget, json),
        Command::Optimize {
            witness,
            mode,
            restarts,
            seed,
            strict,
            out,
            json,
        } => cmd_optimize(&witness, &mode, restarts, seed, strict, out, json),
        Command::Simulate {
            witness,
            visibility,
            shots,
            seed,
            out,
            json,
        } => cmd_simulate(&witness, visibility, shots, seed, out, json),
        Command::Certify {
            counts,
            witness,
            ratios,
            sigma,
            out,
            json,
        } => cmd_certify(counts, &witness, ratios, sigma, out, json),
        Command::Sweep {
            witness,
            grid,
            json,
        } => cmd_sweep(&witness, grid, json),
        Command::PrepTable { json } => cmd_prep_table(json),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {f}");
            ExitCode::from(f.code)
        }
    }
}

fn print_json(value: &impl serde::Serialize) {
    println!("{}", serde_json::to_string_pretty(value).expect("output serializes"));
}

fn cmd_bounds(witness: &str, alphabet: usize, budget: u64, json: bool) -> Result<(), Failure> {
    let w = io::load_witness(witness)?;
    let result = classical_bound_with(&w.spec, &EnumerationConfig { alphabet, budget })?;
    if json {
        print_json(&report::BoundsReport {
            witness: w.spec.name.clone(),
            witness_source: w.source,
            witness_sha256: w.sha256,
            alphabet,
            budget,
            result,
        });
        return Ok(());
    }
    let d = w.spec.dims();
    let s = &result.argmax;
    let one_based = |v: &[usize]| v.iter().map(|c| (c + 1).to_string()).collect::<Vec<_>>().join(" ");
    println!("classical bound: {}", result.max_value);
    println!("strategies enumerated: {}", result.n_enumerated);
    println!("optimal strategy:");
    println!("  alice message by x: {}", s.alice_msg.iter().map(|m| m.to_string()).collect::<Vec<_>>().join(" "));
    println!("  bob message by y:   {}", s.bob_msg.iter().map(|m| m.to_string()).collect::<Vec<_>>().join(" "));
    for z in 0..d.nz {
        println!("  charlie outcome for z={}:", z + 1);
        for ba in 0..s.alphabet {
            let row: Vec<usize> = (0..s.alphabet).map(|bb| s.output(ba, bb, z, d.nz)).collect();
            println!("    a={ba}: {}", one_based(&row));
        }
    }
    Ok(())
}

fn cmd_optimize(
    witness: &str,
    mode: &str,
    restarts: Option<usize>,
    seed: u64,
    strict: bool,
    out: Option<PathBuf>,
    json: bool,
) -> Result<(), Failure> {
    let w = io::load_witness(witness)?;
    let mode: Mode = mode.parse()?;
    let mut cfg = SeesawConfig::new(mode).with_seed(seed);
    if let Some(r) = restarts {
        cfg = cfg.with_restarts(r);
    }
    let result = seesaw(&w.spec, &cfg)?;
    if let Some(path) = &out {
        std::fs::write(path, result.to_json())
            .map_err(|e| Failure::io(format!("cannot write {}: {e}", path.display())))?;
    }
    if json {
        print_json(&report::OptimizeReport {
            witness_source: w.source,
            witness_sha256: w.sha256,
            config: cfg.clone(),
            strategy_dump: out.clone(),
            result: &result,
        });
    } else {
        let hits = result
            .trace
            .iter()
            .filter(|t| (t.value - result.best_value).abs() <= 1e-6)
            .count();
        println!("witness: {}", result.witness);
        println!("mode: {mode}");
        println!("seed: {seed}");
        println!("best value: {:.9}", result.best_value);
        println!("best restart: {}", result.best_restart);
        println!("restarts within 1e-6 of best: {hits}/{}", result.trace.len());
        if let Some(gap) = result.certificate_gap {
            println!("certificate gap: {gap:.3e}");
        }
        if let Some(res) = result.completeness_residual {
            println!("completeness residual: {res:.3e}");
        }
        println!("converged: {}", result.converged);
        if let Some(path) = &out {
            println!("strategy dump: {}", path.display());
        }
    }
    if strict && !result.converged {
        return Err(Failure {
            code: 4,
            message: "best restart did not converge".into(),
        });
    }
    Ok(())
}

/// The model experiment behind a witness: the noisy partial Bell-state
/// measurement for single-setting witnesses, the unentangled POVM pair for
/// two-setting binary ones.
fn model_assembly(w: &LoadedWitness, visibility: f64) -> Result<(MeasurementAssembly, String), Failure> {
    let d = w.spec.dims();
    if d.nx != 3 || d.ny != 3 {
        return Err(Error::DimensionMismatch(format!(
            "the model experiment has 3 preparations per party, witness has {d}"
        ))
        .into());
    }
    match (d.nz, d.nc) {
        (1, 3) => Ok((
            partial_bsm_noisy(VisibilityModel::new(visibility)?),
            format!("trigonal preparations, partial Bell-state measurement at visibility {visibility}"),
        )),
        (2, 2) => {
            if visibility != 1.0 {
                return Err(Failure::parse(
                    "--visibility applies to the Bell-state measurement model only".into(),
                ));
            }
            Ok((
                unentangled_povm_pair(),
                "trigonal preparations, unentangled two-setting POVM pair".into(),
            ))
        }
        _ => Err(Error::DimensionMismatch(format!("no model experiment for witness dimensions {d}")).into()),
    }
}

fn cmd_simulate(
    witness: &str,
    visibility: f64,
    shots: u64,
    seed: u64,
    out: PathBuf,
    json: bool,
) -> Result<(), Failure> {
    let w = io::load_witness(witness)?;
    let (assembly, notes) = model_assembly(&w, visibility)?;
    let table = born_table(
        &trigonal_preparations(Party::A),
        &trigonal_preparations(Party::B),
        &assembly,
    )?;
    let exact = evaluate(&w.spec, &table)?.value;
    let counts = sample_counts(&table, shots, seed)?;
    let est = estimate(&w.spec, &counts)?;
    io::write_counts(&out, &counts)?;
    io::write_sidecar(
        &out,
        &Sidecar {
            shots,
            seed,
            witness: w.source.clone(),
            visibility,
            ratios: BTreeMap::new(),
            notes,
            tool: format!("entcert {}", env!("CARGO_PKG_VERSION")),
        },
    )?;
    if json {
        print_json(&report::SimulateReport {
            witness: w.spec.name.clone(),
            witness_source: w.source,
            visibility,
            shots,
            seed,
            counts_file: out.clone(),
            sidecar_file: io::sidecar_path(&out),
            exact_value: exact,
            estimate: est,
        });
    } else {
        println!("witness: {}", w.spec.name);
        println!("estimate: {} ± {}", est.value, est.stderr);
        println!("exact value: {exact}");
        println!("counts: {}", out.display());
    }
    Ok(())
}

fn cmd_certify(
    counts_path: PathBuf,
    witness: &str,
    ratios_path: Option<PathBuf>,
    sigma: f64,
    out: Option<PathBuf>,
    json: bool,
) -> Result<(), Failure> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Failure::parse(format!("--sigma must be positive, got {sigma}")));
    }
    let w = io::load_witness(witness)?;
    let (raw, counts_bytes) = io::read_counts(&counts_path)?;
    let sidecar = io::read_sidecar(&counts_path)?;
    w.spec.dims().check_same(&raw.dims())?;

    let (ratios, ratio_map, ratios_sha256) = match &ratios_path {
        Some(p) => {
            let (r, map, bytes) = io::read_ratios(p)?;
            (r, map, Some(io::sha256_hex(&bytes)))
        }
        None => {
            let map = sidecar.as_ref().map(|s| s.ratios.clone()).unwrap_or_default();
            (io::to_ratios(&map)?, map, None)
        }
    };
    let corrected = apply_splitting_correction(&raw, &ratios)?;
    let est = estimate(&w.spec, &corrected)?;
    let v = verdict(&w.spec, WitnessValue { value: est.value }, est.stderr, sigma);

    let report = CertificationReport {
        verdict: v,
        provenance: Provenance {
            counts_file: counts_path.clone(),
            counts_sha256: io::sha256_hex(&counts_bytes),
            sidecar_file: sidecar.as_ref().map(|_| io::sidecar_path(&counts_path)),
            seed: sidecar.as_ref().map(|s| s.seed),
            sidecar,
            witness_source: w.source.clone(),
            witness_sha256: w.sha256.clone(),
            ratios_file: ratios_path,
            ratios_sha256,
        },
        config: CertifyConfig {
            significance: sigma,
            shots: raw.shots(),
            dims: raw.dims(),
            ratios: ratio_map,
        },
    };
    if let Some(path) = &out {
        let text = serde_json::to_string_pretty(&report).expect("report serializes");
        std::fs::write(path, text).map_err(|e| Failure::io(format!("cannot write {}: {e}", path.display())))?;
    }
    if json {
        print_json(&report);
        return Ok(());
    }
    let v = &report.verdict;
    println!("witness: {}", v.witness);
    println!("estimate: {} ± {}", v.value, v.stderr);
    for d in &v.distances {
        println!("  {} bound {}: {:+.2}σ", d.class.as_str(), d.bound, d.sigma);
    }
    if v.exceeds_quantum_max {
        println!("warning: value exceeds the qubit quantum maximum");
    }
    println!("verdict: {}", v.label);
    Ok(())
}

fn cmd_sweep(witness: &str, grid: Vec<f64>, json: bool) -> Result<(), Failure> {
    let w = io::load_witness(witness)?;
    let d = w.spec.dims();
    if (d.nx, d.ny, d.nz, d.nc) != (3, 3, 1, 3) {
        return Err(Error::DimensionMismatch(format!(
            "the visibility sweep needs a witness over {}, got {d}",
            Dims::new(3, 3, 1, 3)
        ))
        .into());
    }
    let grid = if grid.is_empty() {
        (0..=20).map(|i| i as f64 / 20.0).collect()
    } else {
        grid
    };
    let points = visibility_sweep(&w.spec, &grid)?;
    let unentangled = w.spec.bounds.unentangled;
    if json {
        print_json(&report::SweepReport {
            witness: w.spec.name.clone(),
            unentangled_bound: unentangled,
            points: points
                .iter()
                .map(|&(visibility, value)| report::SweepPoint { visibility, value })
                .collect(),
        });
        return Ok(());
    }
    println!("{:>10} {:>12}", "visibility", w.spec.name);
    for (vis, value) in points {
        let mark = match unentangled {
            Some(b) if value > b => "  entangled",
            _ => "",
        };
        println!("{vis:>10.4} {value:>12.6}{mark}");
    }
    Ok(())
}

fn cmd_prep_table(json: bool) -> Result<(), Failure> {
    let alice = prep_characterization(&trigonal_preparations(Party::A));
    let bob = prep_characterization(&trigonal_preparations(Party::B).sigma_x_relabelled());
    let rows: Vec<report::PrepRow> = [("alice", alice), ("bob", bob)]
        .into_iter()
        .flat_map(|(party, pops)| {
            pops.into_iter().enumerate().map(move |(x, (h, v))| report::PrepRow {
                party: party.into(),
                setting: x + 1,
                h,
                v,
            })
        })
        .collect();
    if json {
        print_json(&rows);
        return Ok(());
    }
    println!("{:<6} {:>7} {:>8} {:>8}", "party", "setting", "<H>", "<V>");
    for r in rows {
        println!("{:<6} {:>7} {:>8.4} {:>8.4}", r.party, r.setting, r.h, r.v);
    }
    Ok(())
}
