//! Finite-statistics simulation and estimation.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    born_table, partial_bsm_noisy, trigonal_preparations, Party, PreparationFamily,
    VisibilityModel,
};
use crate::table::{Dims, ProbabilityTable, NORMALIZATION_TOL};
use crate::witness::{evaluate, WitnessSpec};

/// Event counts with `N` trials per `(x, y, z)` group.
///
/// Raw integer counts are never modified; corrections live in per-entry
/// weights (1 for uncorrected data).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountTable {
    dims: Dims,
    shots: u64,
    counts: Vec<u64>,
    weights: Vec<f64>,
}

impl CountTable {
    pub fn new(dims: Dims, shots: u64, counts: Vec<u64>) -> Result<Self> {
        if counts.len() != dims.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} counts for {dims}",
                counts.len()
            )));
        }
        if shots == 0 {
            return Err(Error::InvalidConfig("shots per setting must be at least 1".into()));
        }
        for (x, y, z) in dims.cells() {
            let off = dims.group_offset(x, y, z);
            let sum: u64 = counts[off..off + dims.nc].iter().sum();
            if sum != shots {
                return Err(Error::InvalidConfig(format!(
                    "group (x={x}, y={y}, z={z}) has {sum} events, expected {shots}"
                )));
            }
        }
        Ok(Self {
            dims,
            shots,
            weights: vec![1.0; counts.len()],
            counts,
        })
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn shots(&self) -> u64 {
        self.shots
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn count(&self, c: usize, x: usize, y: usize, z: usize) -> u64 {
        self.counts[self.dims.index(c, x, y, z)]
    }

    pub fn weight(&self, c: usize, x: usize, y: usize, z: usize) -> f64 {
        self.weights[self.dims.index(c, x, y, z)]
    }

    /// Raw frequencies `count / N`.
    pub fn raw_frequencies(&self) -> ProbabilityTable {
        let n = self.shots as f64;
        let values = self.counts.iter().map(|&k| k as f64 / n).collect();
        ProbabilityTable::from_values(self.dims, values).expect("dims match")
    }

    /// Weighted frequencies renormalized within each group.
    pub fn corrected_table(&self) -> ProbabilityTable {
        let d = self.dims;
        let mut values = vec![0.0; d.len()];
        for (x, y, z) in d.cells() {
            let off = d.group_offset(x, y, z);
            let total: f64 = (off..off + d.nc)
                .map(|i| self.counts[i] as f64 * self.weights[i])
                .sum();
            for i in off..off + d.nc {
                values[i] = self.counts[i] as f64 * self.weights[i] / total;
            }
        }
        ProbabilityTable::from_values(d, values).expect("dims match")
    }
}

/// Draws `shots` independent events per `(x, y, z)` group.
pub fn sample_counts(table: &ProbabilityTable, shots: u64, seed: u64) -> Result<CountTable> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sample_with(table, shots, &mut rng)
}

fn sample_with(table: &ProbabilityTable, shots: u64, rng: &mut ChaCha8Rng) -> Result<CountTable> {
    if shots == 0 {
        return Err(Error::InvalidConfig("shots per setting must be at least 1".into()));
    }
    table.check_normalized(NORMALIZATION_TOL)?;
    let d = table.dims();
    let mut counts = vec![0u64; d.len()];
    for (x, y, z) in d.cells() {
        let off = d.group_offset(x, y, z);
        let probs = table.group(x, y, z);
        // sequential conditional binomials
        let mut left = shots;
        let mut mass = 1.0;
        for (ci, &p) in probs.iter().enumerate() {
            if left == 0 {
                break;
            }
            if ci + 1 == probs.len() {
                counts[off + ci] = left;
                break;
            }
            let q = if mass > 0.0 { (p / mass).clamp(0.0, 1.0) } else { 0.0 };
            let k = Binomial::new(left, q)
                .map_err(|e| Error::InvalidConfig(format!("binomial: {e}")))?
                .sample(rng);
            counts[off + ci] = k;
            left -= k;
            mass -= p;
        }
    }
    CountTable::new(d, shots, counts)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub stderr: f64,
}

/// Witness estimate with first-order (delta-method) multinomial errors.
///
/// Within a group the corrected frequencies are `q_c = w_c f_c / S` with
/// `S = sum_c w_c f_c`; the group term `g = sum_c a_c q_c` has gradient
/// `d_c = w_c (a_c - g) / S` in the raw frequencies `f`, whose covariance is
/// `(diag(f) - f f^T) / N`. Groups are independent.
pub fn estimate(spec: &WitnessSpec, counts: &CountTable) -> Result<Estimate> {
    let d = counts.dims();
    spec.dims().check_same(&d)?;
    let n = counts.shots as f64;
    let mut value = 0.0;
    let mut var = 0.0;
    for (x, y, z) in d.cells() {
        let off = d.group_offset(x, y, z);
        let f: Vec<f64> = (0..d.nc).map(|ci| counts.counts[off + ci] as f64 / n).collect();
        let w = &counts.weights[off..off + d.nc];
        let a: Vec<f64> = (0..d.nc).map(|ci| spec.coeff(ci, x, y, z)).collect();
        let s: f64 = f.iter().zip(w).map(|(fi, wi)| fi * wi).sum();
        let g: f64 = (0..d.nc).map(|ci| a[ci] * w[ci] * f[ci]).sum::<f64>() / s;
        let grad: Vec<f64> = (0..d.nc).map(|ci| w[ci] * (a[ci] - g) / s).collect();
        let mean: f64 = grad.iter().zip(&f).map(|(gi, fi)| gi * fi).sum();
        let second: f64 = grad.iter().zip(&f).map(|(gi, fi)| gi * gi * fi).sum();
        value += g;
        var += (second - mean * mean).max(0.0) / n;
    }
    Ok(Estimate {
        value,
        stderr: var.sqrt(),
    })
}

/// Parametric bootstrap: standard deviation of the estimate over
/// `resamples` tables redrawn from the observed raw frequencies, with the
/// same weights. Resample `i` uses seed `seed ^ i`.
pub fn bootstrap_stderr(
    spec: &WitnessSpec,
    counts: &CountTable,
    resamples: usize,
    seed: u64,
) -> Result<f64> {
    if resamples < 2 {
        return Err(Error::InvalidConfig("bootstrap needs at least 2 resamples".into()));
    }
    spec.dims().check_same(&counts.dims())?;
    let freq = counts.raw_frequencies();
    let values = (0..resamples)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ i as u64);
            let mut redraw = sample_with(&freq, counts.shots, &mut rng)?;
            redraw.weights = counts.weights.clone();
            Ok(estimate(spec, &redraw)?.value)
        })
        .collect::<Result<Vec<f64>>>()?;
    let mean = values.iter().sum::<f64>() / resamples as f64;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (resamples - 1) as f64;
    Ok(var.sqrt())
}

/// Fraction of photon pairs resolved by the pseudo-number-resolving
/// splitter behind each bunched outcome, keyed by 0-based outcome index.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SplittingRatios {
    pub ratios: BTreeMap<usize, f64>,
}

impl SplittingRatios {
    pub fn new(ratios: impl IntoIterator<Item = (usize, f64)>) -> Result<Self> {
        let ratios: BTreeMap<usize, f64> = ratios.into_iter().collect();
        for &r in ratios.values() {
            if !(r > 0.0 && r <= 1.0) {
                return Err(Error::RatioOutOfRange(r));
            }
        }
        Ok(Self { ratios })
    }
}

/// Scales the weight of each mapped outcome by `1 / r` in every group.
pub fn apply_splitting_correction(
    counts: &CountTable,
    ratios: &SplittingRatios,
) -> Result<CountTable> {
    let d = counts.dims();
    let mut out = counts.clone();
    for (&ci, &r) in &ratios.ratios {
        if !(r > 0.0 && r <= 1.0) {
            return Err(Error::RatioOutOfRange(r));
        }
        if ci >= d.nc {
            return Err(Error::DimensionMismatch(format!(
                "splitting ratio for outcome {} but only {} outcomes",
                ci + 1,
                d.nc
            )));
        }
        for (x, y, z) in d.cells() {
            out.weights[d.index(ci, x, y, z)] /= r;
        }
    }
    Ok(out)
}

/// Exact witness value on the trigonal preparations and the noisy partial
/// BSM, for each visibility in `grid`.
pub fn visibility_sweep(spec: &WitnessSpec, grid: &[f64]) -> Result<Vec<(f64, f64)>> {
    let alice = trigonal_preparations(Party::A);
    let bob = trigonal_preparations(Party::B);
    grid.iter()
        .map(|&v| {
            let m = partial_bsm_noisy(VisibilityModel::new(v)?);
            let table = born_table(&alice, &bob, &m)?;
            Ok((v, evaluate(spec, &table)?.value))
        })
        .collect()
}

/// `(<H|rho|H>, <V|rho|V>)` for each state of the family.
pub fn prep_characterization(family: &PreparationFamily) -> Vec<(f64, f64)> {
    family
        .states
        .iter()
        .map(|s| (s.density[(0, 0)].re, s.density[(1, 1)].re))
        .collect()
}
