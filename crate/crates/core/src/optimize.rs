//! See-saw maximization of a witness over qubit preparations and two-qubit
//! measurements.
//!
//! Each sweep maximizes the witness over one block of variables with the
//! others held fixed: every preparation in turn (top eigenvector of a 2 x 2
//! objective operator), then the measurement of every setting. Three
//! measurement families are supported:
//!
//! * `general`: any POVM, updated by a shifted fixed-point iteration and
//!   checked with a dual certificate;
//! * `locc`: qubit A measured first, qubit B measured conditioned on the
//!   result, and the pair of results mapped to an outcome;
//! * `separable`: every effect a sum of `K` products of positive factors,
//!   with completeness enforced by an augmented quadratic penalty.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    c, contract_a, contract_b, eig_hermitian, kron, partial_transpose, psd_inv_sqrt, psd_part,
    ComplexMatrix,
};
use crate::model::{MeasurementAssembly, Party, PreparationFamily, QubitPreparation};
use crate::table::Dims;
use crate::witness::WitnessSpec;

/// Regularization added to the POVM normalizer before inversion.
pub const NORMALIZER_REG: f64 = 1e-12;
/// Eigen-gap below which a state update is reported as degenerate.
pub const DEGENERATE_GAP: f64 = 1e-12;
/// Allowed per-sweep decrease of the objective (roundoff).
pub const MONOTONE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    General,
    Locc,
    Separable,
}

impl std::str::FromStr for Mode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "general" => Ok(Mode::General),
            "locc" => Ok(Mode::Locc),
            "separable" => Ok(Mode::Separable),
            other => Err(Error::InvalidConfig(format!("unknown mode '{other}'"))),
        }
    }
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Mode::General => "general",
            Mode::Locc => "locc",
            Mode::Separable => "separable",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeesawConfig {
    pub restarts: usize,
    pub max_iters: usize,
    /// Stop once a sweep improves the objective by less than this.
    pub conv_tol: f64,
    pub seed: u64,
    pub mode: Mode,
    /// Product terms per effect in separable mode.
    pub separable_rank: usize,
    /// Inner iterations of the POVM fixed point per sweep (general mode).
    pub povm_iters: usize,
    /// Penalty weight of the first separable stage.
    pub penalty_start: f64,
    /// Penalty growth factor between separable stages.
    pub penalty_growth: f64,
    pub penalty_stages: usize,
}

impl SeesawConfig {
    pub fn new(mode: Mode) -> Self {
        Self {
            restarts: match mode {
                Mode::Separable => 1000,
                _ => 100,
            },
            max_iters: 500,
            conv_tol: 1e-9,
            seed: 0,
            mode,
            separable_rank: 4,
            povm_iters: 50,
            penalty_start: 1.0,
            penalty_growth: 10.0,
            penalty_stages: 6,
        }
    }

    pub fn with_restarts(mut self, restarts: usize) -> Self {
        self.restarts = restarts;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.into()));
        if self.restarts == 0 {
            return bad("restarts must be at least 1");
        }
        if !(self.conv_tol > 0.0) {
            return bad("conv_tol must be positive");
        }
        if self.max_iters == 0 || self.povm_iters == 0 {
            return bad("iteration limits must be positive");
        }
        if self.mode == Mode::Separable
            && (self.separable_rank == 0
                || self.penalty_stages == 0
                || !(self.penalty_start > 0.0)
                || !(self.penalty_growth >= 1.0))
        {
            return bad("separable mode needs rank >= 1 and a positive, non-shrinking penalty");
        }
        Ok(())
    }
}

/// Summary of one restart.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RestartTrace {
    pub restart: usize,
    pub seed: u64,
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Most negative sweep-to-sweep objective change (0 when monotone).
    pub worst_step: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptResult {
    pub mode: Mode,
    pub witness: String,
    pub best_value: f64,
    pub best_restart: usize,
    pub best_preparations: (PreparationFamily, PreparationFamily),
    pub best_assembly: MeasurementAssembly,
    /// Dual gap of the POVM subproblem at the best point (general mode).
    pub certificate_gap: Option<f64>,
    /// `||sum_c M_c - I||_F` reached by the penalty ladder before the
    /// final completion (separable mode).
    pub completeness_residual: Option<f64>,
    /// Whether the best restart met `conv_tol` within `max_iters`.
    pub converged: bool,
    pub trace: Vec<RestartTrace>,
}

impl OptResult {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("result serializes")
    }
}

/// Result of a single preparation update.
#[derive(Debug, Clone)]
pub struct StateUpdate {
    pub state: QubitPreparation,
    /// Top eigenvalue of the local objective operator.
    pub local_value: f64,
    /// The top eigenvalue is (nearly) degenerate, so the maximizer is not
    /// unique; the eigensolver's deterministic choice was returned.
    pub degenerate: bool,
}

/// Best pure state for `party` at `index` with everything else fixed.
pub fn state_update(
    spec: &WitnessSpec,
    alice: &PreparationFamily,
    bob: &PreparationFamily,
    assembly: &MeasurementAssembly,
    party: Party,
    index: usize,
) -> Result<StateUpdate> {
    check_scenario(spec, alice.len(), bob.len(), assembly)?;
    assembly.validate(crate::model::ASSEMBLY_TOL)?;
    let a: Vec<ComplexMatrix> = alice.states.iter().map(|s| s.density.clone()).collect();
    let b: Vec<ComplexMatrix> = bob.states.iter().map(|s| s.density.clone()).collect();
    best_state(spec, &a, &b, assembly.settings(), party, index)
}

fn check_scenario(spec: &WitnessSpec, nx: usize, ny: usize, m: &MeasurementAssembly) -> Result<()> {
    let d = spec.dims();
    if d.nx != nx || d.ny != ny || d.nz != m.n_settings() || d.nc < m.n_outcomes() {
        return Err(Error::DimensionMismatch(format!(
            "witness {d} vs scenario ({nx}, {ny}, {}, {})",
            m.n_settings(),
            m.n_outcomes()
        )));
    }
    Ok(())
}

fn local_operator(
    spec: &WitnessSpec,
    alice: &[ComplexMatrix],
    bob: &[ComplexMatrix],
    effects: &[Vec<ComplexMatrix>],
    party: Party,
    index: usize,
) -> ComplexMatrix {
    let d = spec.dims();
    let mut g = ComplexMatrix::zeros(2);
    for (z, setting) in effects.iter().enumerate() {
        for (ci, m) in setting.iter().enumerate() {
            match party {
                Party::A => {
                    for (y, sigma) in bob.iter().enumerate() {
                        let w = spec.coeff(ci, index, y, z);
                        if w != 0.0 {
                            g.add_scaled(&contract_b(m, sigma), w);
                        }
                    }
                }
                Party::B => {
                    for (x, rho) in alice.iter().enumerate() {
                        let w = spec.coeff(ci, x, index, z);
                        if w != 0.0 {
                            g.add_scaled(&contract_a(m, rho), w);
                        }
                    }
                }
            }
        }
    }
    debug_assert!(d.nc >= effects.iter().map(Vec::len).max().unwrap_or(0));
    g.hermitian_part()
}

fn best_state(
    spec: &WitnessSpec,
    alice: &[ComplexMatrix],
    bob: &[ComplexMatrix],
    effects: &[Vec<ComplexMatrix>],
    party: Party,
    index: usize,
) -> Result<StateUpdate> {
    let g = local_operator(spec, alice, bob, effects, party, index);
    let eig = eig_hermitian(&g)?;
    let top = eig.vectors.column(0);
    Ok(StateUpdate {
        state: QubitPreparation::from_ket([top[0], top[1]]),
        local_value: eig.values[0],
        degenerate: eig.values[0] - eig.values[1] < DEGENERATE_GAP,
    })
}

/// `F_{c|z} = sum_{x,y} W[c,x,y,z] rho_x (x) sigma_y` for every setting.
pub fn effect_objectives(
    spec: &WitnessSpec,
    alice: &[ComplexMatrix],
    bob: &[ComplexMatrix],
) -> Vec<Vec<ComplexMatrix>> {
    let d = spec.dims();
    let products: Vec<ComplexMatrix> = alice
        .iter()
        .flat_map(|a| bob.iter().map(move |b| kron(a, b)))
        .collect();
    (0..d.nz)
        .map(|z| {
            (0..d.nc)
                .map(|ci| {
                    let mut f = ComplexMatrix::zeros(4);
                    for x in 0..d.nx {
                        for y in 0..d.ny {
                            let w = spec.coeff(ci, x, y, z);
                            if w != 0.0 {
                                f.add_scaled(&products[x * d.ny + y], w);
                            }
                        }
                    }
                    f
                })
                .collect()
        })
        .collect()
}

/// `sum_c Tr(M_c F_c)`
pub fn povm_objective(f: &[ComplexMatrix], m: &[ComplexMatrix]) -> f64 {
    f.iter().zip(m).map(|(fc, mc)| fc.trace_product_re(mc)).sum()
}

fn total_objective(f: &[Vec<ComplexMatrix>], m: &[Vec<ComplexMatrix>]) -> f64 {
    f.iter().zip(m).map(|(fz, mz)| povm_objective(fz, mz)).sum()
}

#[derive(Debug, Clone)]
pub struct PovmUpdate {
    pub effects: Vec<ComplexMatrix>,
    pub objective: f64,
    pub iterations: usize,
}

/// Ascent on `max sum_c Tr(M_c F_c)` over POVMs, starting from `start`.
///
/// All `F_c` are shifted by a common multiple of the identity so they are
/// positive definite (this moves the objective by a constant), then
/// `M_c <- R^{-1/2} F_c M_c F_c R^{-1/2}` with `R = sum_c F_c M_c F_c` is
/// iterated until the objective gains less than `tol` per step. An
/// iterate that would lower the objective is rejected and the loop stops.
pub fn povm_update(
    f: &[ComplexMatrix],
    start: &[ComplexMatrix],
    max_iters: usize,
    tol: f64,
) -> Result<PovmUpdate> {
    if f.len() != start.len() || f.is_empty() {
        return Err(Error::DimensionMismatch(format!(
            "{} objectives for {} effects",
            f.len(),
            start.len()
        )));
    }
    let dim = f[0].dim();
    let mut min_eig = f64::INFINITY;
    let mut scale: f64 = 1.0;
    for fc in f {
        if !fc.is_hermitian(crate::linalg::HERMITIAN_TOL) {
            return Err(Error::NotHermitian {
                deviation: fc.hermitian_deviation(),
            });
        }
        min_eig = min_eig.min(eig_hermitian(fc)?.min());
        scale = scale.max(fc.max_abs());
    }
    let shift = (-min_eig).max(0.0) + 1e-6 * scale;
    let id = ComplexMatrix::identity(dim);
    let shifted: Vec<ComplexMatrix> = f
        .iter()
        .map(|fc| {
            let mut s = fc.hermitian_part();
            s.add_scaled(&id, shift);
            s
        })
        .collect();

    let mut m: Vec<ComplexMatrix> = start.to_vec();
    let mut value = povm_objective(f, &m);
    let mut iterations = 0;
    while iterations < max_iters {
        iterations += 1;
        let sandwiched: Vec<ComplexMatrix> = shifted
            .iter()
            .zip(&m)
            .map(|(fc, mc)| &(fc * mc) * fc)
            .collect();
        let mut r = ComplexMatrix::zeros(dim);
        for s in &sandwiched {
            r += s;
        }
        let r_inv_sqrt = psd_inv_sqrt(&r.hermitian_part(), NORMALIZER_REG)?;
        let next: Vec<ComplexMatrix> = sandwiched
            .iter()
            .map(|s| (&(&r_inv_sqrt * s) * &r_inv_sqrt).hermitian_part())
            .collect();
        let next = renormalize(next)?;
        let next_value = povm_objective(f, &next);
        if next_value < value - MONOTONE_TOL * value.abs().max(1.0) {
            break;
        }
        let gain = next_value - value;
        m = next;
        value = next_value;
        if gain < tol {
            break;
        }
    }
    Ok(PovmUpdate {
        effects: m,
        objective: value,
        iterations,
    })
}

/// Removes the small completeness drift left by the regularized inverse.
fn renormalize(m: Vec<ComplexMatrix>) -> Result<Vec<ComplexMatrix>> {
    let dim = m[0].dim();
    let mut s = ComplexMatrix::zeros(dim);
    for e in &m {
        s += e;
    }
    let drift = s.max_abs_diff(&ComplexMatrix::identity(dim));
    if drift < 1e-13 {
        return Ok(m);
    }
    let inv = psd_inv_sqrt(&s.hermitian_part(), 0.0)?;
    Ok(m.iter()
        .map(|e| (&(&inv * e) * &inv).hermitian_part())
        .collect())
}

/// Dual gap of a POVM for `max sum_c Tr(M_c F_c)`.
///
/// With `Y = sum_c (F_c M_c + M_c F_c)/2`, `Tr Y` equals the primal value
/// and `Y + gap * I` is dual feasible (`>= F_c` for all `c`), so the POVM
/// is within `gap * dim` of optimal.
pub fn certify_povm_optimality(f: &[ComplexMatrix], m: &[ComplexMatrix]) -> Result<f64> {
    if f.len() != m.len() || f.is_empty() {
        return Err(Error::DimensionMismatch(format!(
            "{} objectives for {} effects",
            f.len(),
            m.len()
        )));
    }
    let dim = f[0].dim();
    let mut y = ComplexMatrix::zeros(dim);
    for (fc, mc) in f.iter().zip(m) {
        let fm = fc * mc;
        y += &fm.hermitian_part();
    }
    let mut gap: f64 = 0.0;
    for fc in f {
        gap = gap.max(eig_hermitian(&(fc - &y).hermitian_part())?.max());
    }
    Ok(gap.max(0.0))
}

/// Random start for one restart.
#[derive(Debug, Clone)]
pub struct StartPoint {
    pub alice: PreparationFamily,
    pub bob: PreparationFamily,
    pub assembly: MeasurementAssembly,
    params: MeasParams,
}

#[derive(Debug, Clone)]
enum MeasParams {
    General(Vec<Vec<ComplexMatrix>>),
    Locc(Vec<LoccSetting>),
    Separable(Vec<Vec<Vec<(ComplexMatrix, ComplexMatrix)>>>),
}

/// One-way LOCC measurement of one setting.
#[derive(Debug, Clone)]
struct LoccSetting {
    first: [ComplexMatrix; 2],
    /// `second[a][b]`: effect for result `b` on qubit B after result `a`.
    second: [[ComplexMatrix; 2]; 2],
    /// Outcome index for `(a, b)`.
    post: [[usize; 2]; 2],
}

impl LoccSetting {
    fn effects(&self, nc: usize) -> Vec<ComplexMatrix> {
        let mut out = vec![ComplexMatrix::zeros(4); nc];
        for a in 0..2 {
            for b in 0..2 {
                out[self.post[a][b]] += &kron(&self.first[a], &self.second[a][b]);
            }
        }
        out
    }
}

fn separable_effects(factors: &[Vec<(ComplexMatrix, ComplexMatrix)>]) -> Vec<ComplexMatrix> {
    factors
        .iter()
        .map(|terms| {
            let mut m = ComplexMatrix::zeros(4);
            for (a, b) in terms {
                m += &kron(a, b);
            }
            m
        })
        .collect()
}

impl MeasParams {
    fn effects(&self, nc: usize) -> Vec<Vec<ComplexMatrix>> {
        match self {
            MeasParams::General(m) => m.clone(),
            MeasParams::Locc(settings) => settings.iter().map(|s| s.effects(nc)).collect(),
            MeasParams::Separable(f) => f.iter().map(|s| separable_effects(s)).collect(),
        }
    }
}

fn random_ket(rng: &mut ChaCha8Rng) -> [num_complex::Complex64; 2] {
    let mut g = || rng.sample::<f64, _>(StandardNormal);
    [c(g(), g()), c(g(), g())]
}

fn random_psd(rng: &mut ChaCha8Rng, dim: usize) -> ComplexMatrix {
    let entries = (0..dim * dim)
        .map(|_| c(rng.sample(StandardNormal), rng.sample(StandardNormal)))
        .collect();
    let x = ComplexMatrix::from_vec(dim, entries);
    (&x * &x.adjoint()).hermitian_part()
}

/// Random full-rank POVM: random positive operators congruence-normalized
/// to sum to the identity.
fn random_povm(rng: &mut ChaCha8Rng, dim: usize, outcomes: usize) -> Vec<ComplexMatrix> {
    let raw: Vec<ComplexMatrix> = (0..outcomes).map(|_| random_psd(rng, dim)).collect();
    let mut s = ComplexMatrix::zeros(dim);
    for g in &raw {
        s += g;
    }
    let inv = psd_inv_sqrt(&s, 0.0).expect("positive definite sum");
    let mut m: Vec<ComplexMatrix> = raw
        .iter()
        .map(|g| (&(&inv * g) * &inv).hermitian_part())
        .collect();
    // put the last effect exactly on the complement
    let last = m.len() - 1;
    let mut rest = ComplexMatrix::identity(dim);
    for e in &m[..last] {
        rest = &rest - e;
    }
    m[last] = rest.hermitian_part();
    m
}

/// Draws random pure preparations and a random measurement of the family
/// required by `mode`.
pub fn start_point(rng: &mut ChaCha8Rng, mode: Mode, dims: Dims, rank: usize) -> StartPoint {
    let alice = PreparationFamily {
        party: Party::A,
        states: (0..dims.nx)
            .map(|_| QubitPreparation::from_ket(random_ket(rng)))
            .collect(),
    };
    let bob = PreparationFamily {
        party: Party::B,
        states: (0..dims.ny)
            .map(|_| QubitPreparation::from_ket(random_ket(rng)))
            .collect(),
    };
    let params = match mode {
        Mode::General => MeasParams::General(
            (0..dims.nz).map(|_| random_povm(rng, 4, dims.nc)).collect(),
        ),
        Mode::Locc => MeasParams::Locc(
            (0..dims.nz)
                .map(|_| {
                    let first = random_povm(rng, 2, 2);
                    let s0 = random_povm(rng, 2, 2);
                    let s1 = random_povm(rng, 2, 2);
                    let mut post = [[0usize; 2]; 2];
                    for row in post.iter_mut() {
                        for p in row.iter_mut() {
                            *p = rng.random_range(0..dims.nc);
                        }
                    }
                    LoccSetting {
                        first: [first[0].clone(), first[1].clone()],
                        second: [
                            [s0[0].clone(), s0[1].clone()],
                            [s1[0].clone(), s1[1].clone()],
                        ],
                        post,
                    }
                })
                .collect(),
        ),
        Mode::Separable => MeasParams::Separable(
            (0..dims.nz)
                .map(|_| random_product_povm(rng, dims.nc, rank))
                .collect(),
        ),
    };
    let assembly = MeasurementAssembly::new_unchecked(params.effects(dims.nc));
    StartPoint {
        alice,
        bob,
        assembly,
        params,
    }
}

/// Complete separable start: all products of an `nc`-outcome POVM on A and
/// a `rank`-outcome POVM on B, shuffled and dealt `rank` per outcome.
fn random_product_povm(
    rng: &mut ChaCha8Rng,
    nc: usize,
    rank: usize,
) -> Vec<Vec<(ComplexMatrix, ComplexMatrix)>> {
    let pa = random_povm(rng, 2, nc);
    let pb = random_povm(rng, 2, rank);
    let mut pairs: Vec<(ComplexMatrix, ComplexMatrix)> = pa
        .iter()
        .flat_map(|a| pb.iter().map(move |b| (a.clone(), b.clone())))
        .collect();
    for i in (1..pairs.len()).rev() {
        let j = rng.random_range(0..=i);
        pairs.swap(i, j);
    }
    pairs.chunks(rank).map(|c| c.to_vec()).collect()
}

struct RestartOutcome {
    value: f64,
    alice: Vec<ComplexMatrix>,
    bob: Vec<ComplexMatrix>,
    effects: Vec<Vec<ComplexMatrix>>,
    iterations: usize,
    converged: bool,
    worst_step: f64,
    residual: Option<f64>,
}

fn densities(f: &PreparationFamily) -> Vec<ComplexMatrix> {
    f.states.iter().map(|s| s.density.clone()).collect()
}

/// One pass of exact state updates; returns the effect objectives for the
/// new states.
fn sweep_states(
    spec: &WitnessSpec,
    alice: &mut [ComplexMatrix],
    bob: &mut [ComplexMatrix],
    effects: &[Vec<ComplexMatrix>],
) -> Result<()> {
    for x in 0..alice.len() {
        alice[x] = best_state(spec, alice, bob, effects, Party::A, x)?.state.density;
    }
    for y in 0..bob.len() {
        bob[y] = best_state(spec, alice, bob, effects, Party::B, y)?.state.density;
    }
    Ok(())
}

fn run_restart(spec: &WitnessSpec, cfg: &SeesawConfig, seed: u64) -> Result<RestartOutcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let start = start_point(&mut rng, cfg.mode, spec.dims(), cfg.separable_rank);
    let alice = densities(&start.alice);
    let bob = densities(&start.bob);
    match start.params {
        MeasParams::General(m) => run_general(spec, cfg, alice, bob, m),
        MeasParams::Locc(s) => run_locc(spec, cfg, alice, bob, s),
        MeasParams::Separable(f) => run_separable(spec, cfg, alice, bob, f),
    }
}

struct Progress {
    prev: f64,
    worst_step: f64,
}

impl Progress {
    fn new() -> Self {
        Self {
            prev: f64::NEG_INFINITY,
            worst_step: 0.0,
        }
    }

    /// Records a new objective value; returns `true` once converged.
    fn step(&mut self, value: f64, tol: f64) -> bool {
        let delta = value - self.prev;
        if self.prev.is_finite() {
            self.worst_step = self.worst_step.min(delta);
        }
        self.prev = value;
        delta.abs() < tol
    }
}

fn run_general(
    spec: &WitnessSpec,
    cfg: &SeesawConfig,
    mut alice: Vec<ComplexMatrix>,
    mut bob: Vec<ComplexMatrix>,
    mut m: Vec<Vec<ComplexMatrix>>,
) -> Result<RestartOutcome> {
    let mut climb = climb_general(spec, cfg, &mut alice, &mut bob, &mut m)?;
    let mut iterations = climb.iterations;
    // Escape: components of a POVM that collapse to zero never regrow under
    // the multiplicative update, which can pin a run at a poor fixed point.
    // Mixing in the uniform POVM revives them; the result is kept only if
    // it climbs higher.
    for _ in 0..ESCAPE_ATTEMPTS {
        let (mut a, mut b) = (alice.clone(), bob.clone());
        let mut mixed: Vec<Vec<ComplexMatrix>> = m
            .iter()
            .map(|mz| {
                let share = ComplexMatrix::identity(4).scale(ESCAPE_MIX / mz.len() as f64);
                mz.iter().map(|e| &e.scale(1.0 - ESCAPE_MIX) + &share).collect()
            })
            .collect();
        let trial = climb_general(spec, cfg, &mut a, &mut b, &mut mixed)?;
        iterations += trial.iterations;
        if trial.value > climb.value + cfg.conv_tol {
            (alice, bob, m, climb) = (a, b, mixed, trial);
        } else {
            break;
        }
    }
    Ok(RestartOutcome {
        value: climb.value,
        alice,
        bob,
        effects: m,
        iterations,
        converged: climb.converged,
        worst_step: climb.worst_step,
        residual: None,
    })
}

struct Climb {
    value: f64,
    iterations: usize,
    converged: bool,
    worst_step: f64,
}

/// Plain see-saw from the given point until the objective stalls.
fn climb_general(
    spec: &WitnessSpec,
    cfg: &SeesawConfig,
    alice: &mut [ComplexMatrix],
    bob: &mut [ComplexMatrix],
    m: &mut [Vec<ComplexMatrix>],
) -> Result<Climb> {
    let mut progress = Progress::new();
    let mut converged = false;
    let mut iterations = 0;
    let mut value = f64::NEG_INFINITY;
    while iterations < cfg.max_iters {
        iterations += 1;
        sweep_states(spec, alice, bob, m)?;
        let f = effect_objectives(spec, alice, bob);
        for (mz, fz) in m.iter_mut().zip(&f) {
            *mz = povm_update(fz, mz, cfg.povm_iters, cfg.conv_tol * 1e-3)?.effects;
        }
        value = total_objective(&f, m);
        if progress.step(value, cfg.conv_tol) {
            // The multiplicative update cannot regrow a component that has
            // collapsed to zero. If the dual certificate shows the POVM is
            // not optimal for the current states, re-solve from a full-rank
            // start and keep sweeping when that helps.
            if max_certificate_gap(&f, m)? > ESCAPE_GAP && reseed_povms(&f, m, cfg)? {
                value = total_objective(&f, m);
                progress.prev = value;
                continue;
            }
            converged = true;
            break;
        }
    }
    Ok(Climb {
        value,
        iterations,
        converged,
        worst_step: progress.worst_step,
    })
}

/// Escape attempts per general-mode restart.
const ESCAPE_ATTEMPTS: usize = 3;
/// Weight of the uniform POVM mixed in by an escape attempt.
const ESCAPE_MIX: f64 = 0.1;

/// Dual gap above which a converged general-mode restart retries the POVM
/// subproblem from scratch.
const ESCAPE_GAP: f64 = 1e-6;

/// Replaces each setting's POVM by the fixed point reached from the uniform
/// POVM when that is strictly better. Returns whether anything changed.
fn reseed_povms(
    f: &[Vec<ComplexMatrix>],
    m: &mut [Vec<ComplexMatrix>],
    cfg: &SeesawConfig,
) -> Result<bool> {
    let mut improved = false;
    for (mz, fz) in m.iter_mut().zip(f) {
        let n = fz.len();
        let uniform = vec![ComplexMatrix::identity(4).scale(1.0 / n as f64); n];
        let fresh = povm_update(fz, &uniform, 20 * cfg.povm_iters, cfg.conv_tol * 1e-3)?;
        if fresh.objective > povm_objective(fz, mz) + cfg.conv_tol {
            *mz = fresh.effects;
            improved = true;
        }
    }
    Ok(improved)
}

/// Projector onto the non-negative eigenspace of `k0 - k1`, and its
/// complement: the best two-outcome POVM for `Tr(E_0 k0) + Tr(E_1 k1)`.
fn best_binary(k0: &ComplexMatrix, k1: &ComplexMatrix) -> Result<[ComplexMatrix; 2]> {
    let eig = eig_hermitian(&(k0 - k1).hermitian_part())?;
    let e0 = eig.reconstruct_with(|l| if l > 0.0 { 1.0 } else { 0.0 });
    let e1 = &ComplexMatrix::identity(k0.dim()) - &e0;
    Ok([e0, e1])
}

fn locc_update(s: &mut LoccSetting, f: &[ComplexMatrix]) -> Result<()> {
    // post-processing: each (a, b) goes to its best outcome
    for a in 0..2 {
        for b in 0..2 {
            let prod = kron(&s.first[a], &s.second[a][b]);
            let mut best = 0;
            let mut best_val = f64::NEG_INFINITY;
            for (ci, fc) in f.iter().enumerate() {
                let v = prod.trace_product_re(fc);
                if v > best_val + 1e-15 {
                    best_val = v;
                    best = ci;
                }
            }
            s.post[a][b] = best;
        }
    }
    // first measurement on qubit A
    let k: Vec<ComplexMatrix> = (0..2)
        .map(|a| {
            let mut acc = ComplexMatrix::zeros(2);
            for b in 0..2 {
                acc += &contract_b(&f[s.post[a][b]], &s.second[a][b]);
            }
            acc
        })
        .collect();
    s.first = best_binary(&k[0], &k[1])?;
    // conditional measurement on qubit B
    for a in 0..2 {
        let l0 = contract_a(&f[s.post[a][0]], &s.first[a]);
        let l1 = contract_a(&f[s.post[a][1]], &s.first[a]);
        s.second[a] = best_binary(&l0, &l1)?;
    }
    Ok(())
}

fn run_locc(
    spec: &WitnessSpec,
    cfg: &SeesawConfig,
    mut alice: Vec<ComplexMatrix>,
    mut bob: Vec<ComplexMatrix>,
    mut settings: Vec<LoccSetting>,
) -> Result<RestartOutcome> {
    let nc = spec.dims().nc;
    let mut effects: Vec<Vec<ComplexMatrix>> = settings.iter().map(|s| s.effects(nc)).collect();
    let mut progress = Progress::new();
    let mut converged = false;
    let mut iterations = 0;
    let mut value = f64::NEG_INFINITY;
    while iterations < cfg.max_iters {
        iterations += 1;
        sweep_states(spec, &mut alice, &mut bob, &effects)?;
        let f = effect_objectives(spec, &alice, &bob);
        for (s, fz) in settings.iter_mut().zip(&f) {
            locc_update(s, fz)?;
        }
        effects = settings.iter().map(|s| s.effects(nc)).collect();
        value = total_objective(&f, &effects);
        if progress.step(value, cfg.conv_tol) {
            converged = true;
            break;
        }
    }
    Ok(RestartOutcome {
        value,
        alice,
        bob,
        effects,
        iterations,
        converged,
        worst_step: progress.worst_step,
        residual: None,
    })
}

/// Penalty state of one separable setting.
struct SeparableSetting {
    factors: Vec<Vec<(ComplexMatrix, ComplexMatrix)>>,
    effects: Vec<ComplexMatrix>,
    multiplier: ComplexMatrix,
}

impl SeparableSetting {
    fn new(factors: Vec<Vec<(ComplexMatrix, ComplexMatrix)>>) -> Self {
        let effects = separable_effects(&factors);
        Self {
            factors,
            effects,
            multiplier: ComplexMatrix::zeros(4),
        }
    }

    /// `sum_c M_c - I`
    fn excess(&self) -> ComplexMatrix {
        let mut s = ComplexMatrix::identity(4).scale(-1.0);
        for e in &self.effects {
            s += e;
        }
        s
    }

    /// `sum_c Tr(M_c F_c) - Tr(L (S - I)) - mu ||S - I||^2`
    fn augmented(&self, f: &[ComplexMatrix], mu: f64) -> f64 {
        let e = self.excess();
        povm_objective(f, &self.effects)
            - self.multiplier.trace_product_re(&e)
            - mu * e.frobenius_norm().powi(2)
    }

    /// Exact maximization over each factor in turn.
    fn update(&mut self, f: &[ComplexMatrix], mu: f64) -> Result<()> {
        let id = ComplexMatrix::identity(4);
        let mut excess = self.excess();
        for ci in 0..self.factors.len() {
            for k in 0..self.factors[ci].len() {
                let (a, b) = self.factors[ci][k].clone();
                let old = kron(&a, &b);
                // everything except this term, minus the identity
                let rest = &excess - &old;
                let mut g = &f[ci] - &self.multiplier;
                g.add_scaled(&rest, -2.0 * mu);
                let g = g.hermitian_part();

                let nb = b.frobenius_norm().powi(2);
                let a = if nb > 1e-300 {
                    psd_part(&contract_b(&g, &b))?.scale(1.0 / (2.0 * mu * nb))
                } else {
                    a
                };
                let na = a.frobenius_norm().powi(2);
                let b = if na > 1e-300 {
                    psd_part(&contract_a(&g, &a))?.scale(1.0 / (2.0 * mu * na))
                } else {
                    b
                };
                let (a, b) = balance(a, b);
                let new = kron(&a, &b);
                self.effects[ci] = &(&self.effects[ci] - &old) + &new;
                excess = &rest + &new;
                self.factors[ci][k] = (a, b);
            }
        }
        let _ = id;
        Ok(())
    }
}

fn balance(a: ComplexMatrix, b: ComplexMatrix) -> (ComplexMatrix, ComplexMatrix) {
    let (na, nb) = (a.frobenius_norm(), b.frobenius_norm());
    if na > 1e-150 && nb > 1e-150 {
        let s = (nb / na).sqrt();
        (a.scale(s), b.scale(1.0 / s))
    } else {
        (a, b)
    }
}

/// Makes a near-complete separable measurement exactly complete while
/// keeping every effect positive under partial transpose.
///
/// All effects shrink by `1 + eta` and the deficit `(eta I - E)/(1 + eta)`
/// (with `E = sum_c M_c - I`) goes to the outcome where it helps the
/// objective most. Choosing `eta >= max(lambda_max(E), lambda_max(E^T_B))`
/// makes the deficit PSD and PPT, so PPT effects stay PPT.
fn complete_separable(effects: &[ComplexMatrix], f: &[ComplexMatrix]) -> Result<Vec<ComplexMatrix>> {
    let id = ComplexMatrix::identity(4);
    let mut excess = id.scale(-1.0);
    for e in effects {
        excess += e;
    }
    let eta = eig_hermitian(&excess)?
        .max()
        .max(eig_hermitian(&partial_transpose(&excess)?)?.max())
        .max(0.0);
    let shrink = 1.0 / (1.0 + eta);
    let mut out: Vec<ComplexMatrix> = effects.iter().map(|e| e.scale(shrink)).collect();
    let mut deficit = id.clone();
    for e in &out {
        deficit = &deficit - e;
    }
    let deficit = deficit.hermitian_part();
    let target = f
        .iter()
        .enumerate()
        .map(|(ci, fc)| (ci, fc.trace_product_re(&deficit)))
        .fold((0, f64::NEG_INFINITY), |best, cur| if cur.1 > best.1 { cur } else { best })
        .0;
    out[target] += &deficit;
    Ok(out)
}

fn run_separable(
    spec: &WitnessSpec,
    cfg: &SeesawConfig,
    mut alice: Vec<ComplexMatrix>,
    mut bob: Vec<ComplexMatrix>,
    factors: Vec<Vec<Vec<(ComplexMatrix, ComplexMatrix)>>>,
) -> Result<RestartOutcome> {
    let mut settings: Vec<SeparableSetting> = factors.into_iter().map(SeparableSetting::new).collect();
    let mut mu = cfg.penalty_start;
    let mut iterations = 0;
    let mut worst_step: f64 = 0.0;
    let mut converged = true;
    for stage in 0..cfg.penalty_stages {
        let mut progress = Progress::new();
        let mut stage_converged = false;
        for _ in 0..cfg.max_iters {
            iterations += 1;
            let effects: Vec<Vec<ComplexMatrix>> =
                settings.iter().map(|s| s.effects.clone()).collect();
            sweep_states(spec, &mut alice, &mut bob, &effects)?;
            let f = effect_objectives(spec, &alice, &bob);
            let mut value = 0.0;
            for (s, fz) in settings.iter_mut().zip(&f) {
                s.update(fz, mu)?;
                value += s.augmented(fz, mu);
            }
            if progress.step(value, cfg.conv_tol) {
                stage_converged = true;
                break;
            }
        }
        worst_step = worst_step.min(progress.worst_step);
        if stage + 1 == cfg.penalty_stages {
            converged = stage_converged;
        }
        for s in settings.iter_mut() {
            let e = s.excess();
            s.multiplier.add_scaled(&e, 2.0 * mu);
        }
        mu *= cfg.penalty_growth;
    }
    let residual = settings
        .iter()
        .map(|s| s.excess().frobenius_norm())
        .fold(0.0, f64::max);
    let f = effect_objectives(spec, &alice, &bob);
    let effects = settings
        .iter()
        .zip(&f)
        .map(|(s, fz)| complete_separable(&s.effects, fz))
        .collect::<Result<Vec<_>>>()?;
    let value = total_objective(&f, &effects);
    Ok(RestartOutcome {
        value,
        alice,
        bob,
        effects,
        iterations,
        converged,
        worst_step,
        residual: Some(residual),
    })
}

/// Extra POVM iterations on the best general-mode point so the dual
/// certificate reflects a converged subproblem.
fn polish_general(spec: &WitnessSpec, out: &mut RestartOutcome, cfg: &SeesawConfig) -> Result<()> {
    for _ in 0..20 {
        sweep_states(spec, &mut out.alice, &mut out.bob, &out.effects)?;
        let f = effect_objectives(spec, &out.alice, &out.bob);
        for (mz, fz) in out.effects.iter_mut().zip(&f) {
            *mz = povm_update(fz, mz, 20 * cfg.povm_iters, 0.0)?.effects;
        }
        out.value = total_objective(&f, &out.effects);
        let gap = max_certificate_gap(&f, &out.effects)?;
        if gap < 1e-9 {
            break;
        }
    }
    Ok(())
}

fn max_certificate_gap(f: &[Vec<ComplexMatrix>], m: &[Vec<ComplexMatrix>]) -> Result<f64> {
    let mut gap: f64 = 0.0;
    for (fz, mz) in f.iter().zip(m) {
        gap = gap.max(certify_povm_optimality(fz, mz)?);
    }
    Ok(gap)
}

/// Best witness value over `cfg.restarts` independent see-saw runs.
///
/// Restart `i` is seeded with `cfg.seed ^ i`; ties between restarts go to
/// the lower index, so results do not depend on scheduling.
pub fn seesaw(spec: &WitnessSpec, cfg: &SeesawConfig) -> Result<OptResult> {
    cfg.validate()?;
    let dims = spec.dims();
    if dims.nc > 8 {
        return Err(Error::InvalidConfig("at most 8 outcomes per setting".into()));
    }
    let outcomes: Vec<(usize, u64, RestartOutcome)> = (0..cfg.restarts)
        .into_par_iter()
        .map(|i| {
            let seed = cfg.seed ^ i as u64;
            run_restart(spec, cfg, seed).map(|o| (i, seed, o))
        })
        .collect::<Result<Vec<_>>>()?;

    let trace: Vec<RestartTrace> = outcomes
        .iter()
        .map(|(i, seed, o)| RestartTrace {
            restart: *i,
            seed: *seed,
            value: o.value,
            iterations: o.iterations,
            converged: o.converged,
            worst_step: o.worst_step,
        })
        .collect();
    let (best_restart, _, mut best) = outcomes
        .into_iter()
        .reduce(|a, b| if b.2.value > a.2.value { b } else { a })
        .expect("restarts >= 1");

    let mut certificate_gap = None;
    if cfg.mode == Mode::General {
        polish_general(spec, &mut best, cfg)?;
        let f = effect_objectives(spec, &best.alice, &best.bob);
        certificate_gap = Some(max_certificate_gap(&f, &best.effects)?);
    }

    let family = |party, states: &[ComplexMatrix]| PreparationFamily {
        party,
        states: states
            .iter()
            .map(|d| QubitPreparation {
                angle: None,
                density: d.clone(),
            })
            .collect(),
    };
    let alice = family(Party::A, &best.alice);
    let bob = family(Party::B, &best.bob);
    let assembly = MeasurementAssembly::new(best.effects)?;
    // report the value through the independent Born-rule path
    let table = crate::model::born_table(&alice, &bob, &assembly)?;
    let best_value = crate::witness::evaluate(spec, &table)?.value;

    Ok(OptResult {
        mode: cfg.mode,
        witness: spec.name.clone(),
        best_value,
        best_restart,
        best_preparations: (alice, bob),
        best_assembly: assembly,
        certificate_gap,
        completeness_residual: best.residual,
        converged: best.converged,
        trace,
    })
}
