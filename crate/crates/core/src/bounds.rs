//! Classical bound of a witness by exhaustive enumeration of deterministic
//! strategies: each preparation device forwards a message from a finite
//! alphabet (one bit by default) and the measurement device outputs a fixed
//! function of both messages and the setting.
//!
//! Shared randomness cannot beat the best deterministic strategy because
//! the witness is linear, so the maximum over this finite set is the bound.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::table::{Dims, ProbabilityTable};
use crate::witness::{evaluate, WitnessSpec};

const TIE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnumerationConfig {
    /// Message alphabet size per preparation device.
    pub alphabet: usize,
    /// Largest number of strategies to enumerate.
    pub budget: u64,
}

impl Default for EnumerationConfig {
    fn default() -> Self {
        Self {
            alphabet: 2,
            budget: 100_000_000,
        }
    }
}

/// A deterministic classical strategy. Outcomes are 0-based.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassicalStrategy {
    pub alphabet: usize,
    /// Message sent by Alice for each `x`.
    pub alice_msg: Vec<usize>,
    /// Message sent by Bob for each `y`.
    pub bob_msg: Vec<usize>,
    /// Outcome for `(b_A, b_B, z)`, stored at `(b_A * alphabet + b_B) * nz + z`.
    pub charlie_out: Vec<usize>,
}

impl ClassicalStrategy {
    pub fn output(&self, ba: usize, bb: usize, z: usize, nz: usize) -> usize {
        self.charlie_out[(ba * self.alphabet + bb) * nz + z]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundResult {
    pub max_value: f64,
    pub argmax: ClassicalStrategy,
    pub n_enumerated: u64,
}

/// Deterministic table: `p(c|x,y,z) = 1` iff `c = f(a(x), b(y), z)`.
pub fn strategy_to_table(s: &ClassicalStrategy, dims: Dims) -> Result<ProbabilityTable> {
    let m = s.alphabet;
    let mismatch = |what: &str| Err(Error::DimensionMismatch(format!("strategy {what} vs {dims}")));
    if s.alice_msg.len() != dims.nx || s.bob_msg.len() != dims.ny {
        return mismatch("message table length");
    }
    if s.charlie_out.len() != m * m * dims.nz {
        return mismatch("output table length");
    }
    if s.alice_msg.iter().chain(&s.bob_msg).any(|&b| b >= m) {
        return mismatch("message outside alphabet");
    }
    if s.charlie_out.iter().any(|&c| c >= dims.nc) {
        return mismatch("outcome outside range");
    }
    let mut table = ProbabilityTable::zeros(dims);
    for (x, y, z) in dims.cells() {
        let c = s.output(s.alice_msg[x], s.bob_msg[y], z, dims.nz);
        table.set(c, x, y, z, 1.0);
    }
    Ok(table)
}

/// Number of deterministic strategies, as a float so huge counts do not
/// overflow before the budget check.
pub fn strategy_count(dims: Dims, alphabet: usize) -> f64 {
    let m = alphabet as f64;
    m.powi(dims.nx as i32)
        * m.powi(dims.ny as i32)
        * (dims.nc as f64).powi((alphabet * alphabet * dims.nz) as i32)
}

pub fn classical_bound(spec: &WitnessSpec) -> Result<BoundResult> {
    classical_bound_with(spec, &EnumerationConfig::default())
}

/// Exact maximum over all deterministic strategies. Among equal maxima the
/// first strategy in lexicographic order of `(alice_msg, bob_msg,
/// charlie_out)` wins, independent of how the work is partitioned.
pub fn classical_bound_with(spec: &WitnessSpec, config: &EnumerationConfig) -> Result<BoundResult> {
    let dims = spec.dims();
    let m = config.alphabet;
    if m == 0 {
        return Err(Error::InvalidConfig("message alphabet must be non-empty".into()));
    }
    let required = strategy_count(dims, m);
    if required > config.budget as f64 {
        return Err(Error::BudgetExceeded {
            required,
            budget: config.budget,
        });
    }
    let n_alice = m.pow(dims.nx as u32);
    let n_bob = m.pow(dims.ny as u32);

    let best = (0..n_alice)
        .into_par_iter()
        .map(|ai| best_for_alice(spec, m, ai, n_bob))
        .reduce_with(|a, b| {
            if b.value > a.value + TIE_TOL {
                b
            } else if a.value > b.value + TIE_TOL {
                a
            } else if (b.alice, b.bob) < (a.alice, a.bob) {
                b
            } else {
                a
            }
        })
        .expect("at least one strategy");

    let argmax = ClassicalStrategy {
        alphabet: m,
        alice_msg: digits(best.alice, m, dims.nx),
        bob_msg: digits(best.bob, m, dims.ny),
        charlie_out: best.charlie,
    };
    let max_value = evaluate(spec, &strategy_to_table(&argmax, dims)?)?.value;
    Ok(BoundResult {
        max_value,
        argmax,
        n_enumerated: required as u64,
    })
}

struct Candidate {
    value: f64,
    alice: usize,
    bob: usize,
    charlie: Vec<usize>,
}

/// Mixed-radix digits, most significant first.
fn digits(mut index: usize, base: usize, len: usize) -> Vec<usize> {
    let mut out = vec![0; len];
    for slot in out.iter_mut().rev() {
        *slot = index % base;
        index /= base;
    }
    out
}

fn best_for_alice(spec: &WitnessSpec, m: usize, alice: usize, n_bob: usize) -> Candidate {
    let dims = spec.dims();
    let a_msg = digits(alice, m, dims.nx);
    let slots = m * m * dims.nz;
    let mut best = Candidate {
        value: f64::NEG_INFINITY,
        alice,
        bob: 0,
        charlie: vec![0; slots],
    };
    // gain[slot * nc + c]: witness weight collected when slot (ba, bb, z) outputs c
    let mut gain = vec![0.0; slots * dims.nc];
    let mut out = vec![0usize; slots];
    for bob in 0..n_bob {
        let b_msg = digits(bob, m, dims.ny);
        gain.iter_mut().for_each(|g| *g = 0.0);
        for (x, y, z) in dims.cells() {
            let slot = (a_msg[x] * m + b_msg[y]) * dims.nz + z;
            for c in 0..dims.nc {
                gain[slot * dims.nc + c] += spec.coeff(c, x, y, z);
            }
        }
        out.iter_mut().for_each(|o| *o = 0);
        loop {
            let value: f64 = out
                .iter()
                .enumerate()
                .map(|(s, &c)| gain[s * dims.nc + c])
                .sum();
            if value > best.value + TIE_TOL {
                best.value = value;
                best.bob = bob;
                best.charlie.copy_from_slice(&out);
            }
            // odometer, last slot fastest
            let mut wrapped = true;
            for k in (0..slots).rev() {
                out[k] += 1;
                if out[k] < dims.nc {
                    wrapped = false;
                    break;
                }
                out[k] = 0;
            }
            if wrapped {
                break;
            }
        }
    }
    best
}
