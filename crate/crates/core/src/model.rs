//! Qubit preparations, two-qubit measurement assemblies and the Born rule.
//!
//! States in the x-z plane of the Bloch sphere are parametrized as
//! `|psi(theta)> = cos(theta/2)|0> + sin(theta/2)|1>`, with `|0> = H` and
//! `|1> = V`. With this convention the partial Bell measurement gives
//! `p(c|x,y) = (1 + cos(alpha_x + (-1)^c beta_y)) / 4` for `c = 1, 2`.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{cr, eig_hermitian, kron, partial_transpose, ComplexMatrix};
use crate::table::{Dims, ProbabilityTable};

/// Tolerance for effect positivity and completeness.
pub const ASSEMBLY_TOL: f64 = 1e-10;
/// A normalized effect whose partial transpose has an eigenvalue below
/// `-PPT_TOL` is classified as entangled.
pub const PPT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Party {
    A,
    B,
}

/// A qubit state sent by Alice or Bob.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QubitPreparation {
    /// Generating angle for x-z plane states; `None` for general states.
    pub angle: Option<f64>,
    pub density: ComplexMatrix,
}

impl QubitPreparation {
    /// `cos(theta/2)|0> + sin(theta/2)|1>`
    pub fn from_angle(theta: f64) -> Self {
        let ket = [cr((theta / 2.0).cos()), cr((theta / 2.0).sin())];
        Self {
            angle: Some(theta),
            density: ComplexMatrix::projector(&ket),
        }
    }

    /// Pure state from an arbitrary (normalized on the fly) ket.
    pub fn from_ket(ket: [Complex64; 2]) -> Self {
        let norm = (ket[0].norm_sqr() + ket[1].norm_sqr()).sqrt();
        let k = [ket[0] / norm, ket[1] / norm];
        Self {
            angle: None,
            density: ComplexMatrix::projector(&k),
        }
    }

    pub fn from_density(density: ComplexMatrix) -> Result<Self> {
        if density.dim() != 2 {
            return Err(Error::WrongDimension {
                expected: 2,
                actual: density.dim(),
            });
        }
        Ok(Self {
            angle: None,
            density,
        })
    }

    /// Bloch vector `(<sx>, <sy>, <sz>)`.
    pub fn bloch(&self) -> [f64; 3] {
        let d = &self.density;
        [
            2.0 * d[(0, 1)].re,
            -2.0 * d[(0, 1)].im,
            d[(0, 0)].re - d[(1, 1)].re,
        ]
    }

    pub fn purity(&self) -> f64 {
        self.density.trace_product_re(&self.density)
    }
}

/// Indexed preparations of one party.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreparationFamily {
    pub party: Party,
    pub states: Vec<QubitPreparation>,
}

impl PreparationFamily {
    pub fn new(party: Party, states: Vec<QubitPreparation>) -> Result<Self> {
        if states.is_empty() {
            return Err(Error::InvalidConfig("preparation family is empty".into()));
        }
        Ok(Self { party, states })
    }

    pub fn from_angles(party: Party, angles: &[f64]) -> Result<Self> {
        Self::new(
            party,
            angles.iter().map(|&t| QubitPreparation::from_angle(t)).collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// The same family after a `sigma_x` (H <-> V) relabelling.
    pub fn sigma_x_relabelled(&self) -> Self {
        let x = ComplexMatrix::pauli_x();
        Self {
            party: self.party,
            states: self
                .states
                .iter()
                .map(|s| QubitPreparation {
                    angle: s.angle,
                    density: &(&x * &s.density) * &x,
                })
                .collect(),
        }
    }
}

/// Three states at `theta_j = 2 pi j / 3`.
pub fn trigonal_preparations(party: Party) -> PreparationFamily {
    let angles: Vec<f64> = (0..3).map(|j| 2.0 * PI * j as f64 / 3.0).collect();
    PreparationFamily::from_angles(party, &angles).expect("three angles")
}

/// POVM effects for each measurement setting `z`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasurementAssembly {
    settings: Vec<Vec<ComplexMatrix>>,
}

impl MeasurementAssembly {
    /// Validates positivity and completeness of every setting.
    pub fn new(settings: Vec<Vec<ComplexMatrix>>) -> Result<Self> {
        let m = Self { settings };
        m.validate(ASSEMBLY_TOL)?;
        Ok(m)
    }

    /// Skips validation; used inside the optimizer on operators that are
    /// valid by construction.
    pub(crate) fn new_unchecked(settings: Vec<Vec<ComplexMatrix>>) -> Self {
        Self { settings }
    }

    pub fn validate(&self, tol: f64) -> Result<()> {
        if self.settings.is_empty() {
            return Err(Error::InvalidAssembly("no settings".into()));
        }
        let dim = self.settings[0]
            .first()
            .map(|e| e.dim())
            .ok_or_else(|| Error::InvalidAssembly("setting 0 has no effects".into()))?;
        for (z, effects) in self.settings.iter().enumerate() {
            if effects.is_empty() {
                return Err(Error::InvalidAssembly(format!("setting {z} has no effects")));
            }
            let mut sum = ComplexMatrix::zeros(dim);
            for (ci, e) in effects.iter().enumerate() {
                if e.dim() != dim {
                    return Err(Error::InvalidAssembly(format!(
                        "effect {} of setting {z} has dimension {}",
                        ci + 1,
                        e.dim()
                    )));
                }
                let eig = eig_hermitian(e).map_err(|err| {
                    Error::InvalidAssembly(format!("effect {} of setting {z}: {err}", ci + 1))
                })?;
                if eig.min() < -tol {
                    return Err(Error::InvalidAssembly(format!(
                        "effect {} of setting {z} has eigenvalue {:e}",
                        ci + 1,
                        eig.min()
                    )));
                }
                sum += e;
            }
            let dev = sum.max_abs_diff(&ComplexMatrix::identity(dim));
            if dev > tol {
                return Err(Error::InvalidAssembly(format!(
                    "setting {z} sums to identity only within {dev:e}"
                )));
            }
        }
        Ok(())
    }

    pub fn settings(&self) -> &[Vec<ComplexMatrix>] {
        &self.settings
    }

    pub fn n_settings(&self) -> usize {
        self.settings.len()
    }

    /// Largest outcome count over settings.
    pub fn n_outcomes(&self) -> usize {
        self.settings.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn effect(&self, c: usize, z: usize) -> &ComplexMatrix {
        &self.settings[z][c]
    }

    /// PPT verdict for every effect, indexed `[z][c]`.
    pub fn classify(&self) -> Result<Vec<Vec<EffectClass>>> {
        self.settings
            .iter()
            .map(|s| s.iter().map(classify_effect).collect())
            .collect()
    }

    /// `true` if any effect fails the PPT test. Zero effects never fire and
    /// count as separable.
    pub fn is_entangled(&self) -> Result<bool> {
        for e in self.settings.iter().flatten() {
            match classify_effect(e) {
                Ok(EffectClass::EntangledEffect) => return Ok(true),
                Ok(EffectClass::SeparableEffect) | Err(Error::ZeroEffect) => {}
                Err(err) => return Err(err),
            }
        }
        Ok(false)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EffectClass {
    SeparableEffect,
    EntangledEffect,
}

/// HOM interference visibility in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VisibilityModel {
    visibility: f64,
}

impl VisibilityModel {
    pub fn new(visibility: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&visibility) {
            return Err(Error::VisibilityOutOfRange(visibility));
        }
        Ok(Self { visibility })
    }

    pub fn visibility(&self) -> f64 {
        self.visibility
    }
}

fn ket(amps: [f64; 4]) -> [Complex64; 4] {
    amps.map(cr)
}

/// `(|00> + |11>)/sqrt 2`
pub fn phi_plus() -> [Complex64; 4] {
    ket([FRAC_1_SQRT_2, 0.0, 0.0, FRAC_1_SQRT_2])
}

/// `(|00> - |11>)/sqrt 2`
pub fn phi_minus() -> [Complex64; 4] {
    ket([FRAC_1_SQRT_2, 0.0, 0.0, -FRAC_1_SQRT_2])
}

/// `(|01> + |10>)/sqrt 2`
pub fn psi_plus() -> [Complex64; 4] {
    ket([0.0, FRAC_1_SQRT_2, FRAC_1_SQRT_2, 0.0])
}

/// `(|01> - |10>)/sqrt 2`
pub fn psi_minus() -> [Complex64; 4] {
    ket([0.0, FRAC_1_SQRT_2, -FRAC_1_SQRT_2, 0.0])
}

fn with_remainder(mut effects: Vec<ComplexMatrix>) -> Vec<ComplexMatrix> {
    let mut rest = ComplexMatrix::identity(effects[0].dim());
    for e in &effects {
        rest = &rest - e;
    }
    effects.push(rest);
    effects
}

/// Partial Bell-state measurement `{|phi+><phi+|, |phi-><phi-|, rest}`.
pub fn partial_bsm_ideal() -> MeasurementAssembly {
    MeasurementAssembly::new_unchecked(vec![with_remainder(vec![
        ComplexMatrix::projector(&phi_plus()),
        ComplexMatrix::projector(&phi_minus()),
    ])])
}

/// Partial BSM with the `|00><11|` coherences scaled by the visibility.
///
/// Equivalently a mixture `V * ideal + (1 - V) * (|00><00| + |11><11|)/2`
/// on the first two outcomes.
pub fn partial_bsm_noisy(model: VisibilityModel) -> MeasurementAssembly {
    let v = model.visibility();
    let bell_like = |sign: f64| {
        let mut m = ComplexMatrix::from_diag(&[0.5, 0.0, 0.0, 0.5]);
        m[(0, 3)] = cr(sign * v / 2.0);
        m[(3, 0)] = cr(sign * v / 2.0);
        m
    };
    MeasurementAssembly::new_unchecked(vec![with_remainder(vec![
        bell_like(1.0),
        bell_like(-1.0),
    ])])
}

/// Two dichotomic product-basis measurements: `|00><00|` in the Z basis and
/// `|++><++| + |--><--|` in the X basis, each with its complement.
pub fn unentangled_povm_pair() -> MeasurementAssembly {
    let zero = ComplexMatrix::from_diag(&[1.0, 0.0]);
    let plus = ComplexMatrix::from_real(2, &[0.5, 0.5, 0.5, 0.5]);
    let minus = ComplexMatrix::from_real(2, &[0.5, -0.5, -0.5, 0.5]);
    let z0 = kron(&zero, &zero);
    let z1 = &kron(&plus, &plus) + &kron(&minus, &minus);
    MeasurementAssembly::new_unchecked(vec![with_remainder(vec![z0]), with_remainder(vec![z1])])
}

/// Born-rule table `p(c|x,y,z) = Tr((rho_x (x) sigma_y) M_{c|z})`.
///
/// Settings with fewer effects than the largest setting get zero
/// probability on the missing outcomes.
pub fn born_table(
    alice: &PreparationFamily,
    bob: &PreparationFamily,
    assembly: &MeasurementAssembly,
) -> Result<ProbabilityTable> {
    for (name, fam) in [("alice", alice), ("bob", bob)] {
        if let Some(s) = fam.states.iter().find(|s| s.density.dim() != 2) {
            return Err(Error::InvalidAssembly(format!(
                "{name} state has dimension {}",
                s.density.dim()
            )));
        }
    }
    if assembly.settings.iter().flatten().any(|e| e.dim() != 4) {
        return Err(Error::InvalidAssembly("effects must act on two qubits".into()));
    }
    assembly.validate(ASSEMBLY_TOL)?;
    let dims = Dims::new(
        alice.len(),
        bob.len(),
        assembly.n_settings(),
        assembly.n_outcomes(),
    );
    let products: Vec<ComplexMatrix> = alice
        .states
        .iter()
        .flat_map(|a| bob.states.iter().map(move |b| kron(&a.density, &b.density)))
        .collect();
    let mut table = ProbabilityTable::zeros(dims);
    for (z, effects) in assembly.settings.iter().enumerate() {
        for x in 0..dims.nx {
            for y in 0..dims.ny {
                let rho = &products[x * dims.ny + y];
                for (c, e) in effects.iter().enumerate() {
                    table.set(c, x, y, z, rho.trace_product_re(e));
                }
            }
        }
    }
    Ok(table)
}

/// PPT test on the trace-normalized effect.
pub fn classify_effect(m: &ComplexMatrix) -> Result<EffectClass> {
    if m.dim() != 4 {
        return Err(Error::WrongDimension {
            expected: 4,
            actual: m.dim(),
        });
    }
    let eig = eig_hermitian(m)?;
    let tr: f64 = eig.values.iter().sum();
    if tr <= 1e-14 * m.max_abs().max(1.0) {
        if eig.min() < -ASSEMBLY_TOL {
            return Err(Error::NotPsd {
                min_eigenvalue: eig.min(),
            });
        }
        return Err(Error::ZeroEffect);
    }
    if eig.min() < -ASSEMBLY_TOL * tr.max(1.0) {
        return Err(Error::NotPsd {
            min_eigenvalue: eig.min(),
        });
    }
    let pt = partial_transpose(&m.scale(1.0 / tr))?;
    let min = eig_hermitian(&pt)?.min();
    Ok(if min < -PPT_TOL {
        EffectClass::EntangledEffect
    } else {
        EffectClass::SeparableEffect
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::c;
    use std::f64::consts::FRAC_PI_3;

    const EPS: f64 = 1e-12;

    #[test]
    fn trigonal_states() {
        let fam = trigonal_preparations(Party::A);
        let p0 = ComplexMatrix::from_diag(&[1.0, 0.0]);
        assert!(fam.states[0].density.max_abs_diff(&p0) < EPS);
        assert!((fam.states[1].density[(0, 0)].re - 0.25).abs() < EPS);
        let s2 = &fam.states[2];
        assert!((s2.density[(0, 0)].re - 0.25).abs() < EPS);
        let plus = ComplexMatrix::from_real(2, &[0.5, 0.5, 0.5, 0.5]);
        let plus_overlap = s2.density.trace_product_re(&plus);
        assert!((plus_overlap - (1.0 - 3f64.sqrt() / 2.0) / 2.0).abs() < EPS);
        for s in &fam.states {
            assert!((s.density.trace().re - 1.0).abs() < EPS);
            assert!((s.purity() - 1.0).abs() < EPS);
        }
        assert!((fam.states[1].angle.unwrap() - 2.0 * FRAC_PI_3).abs() < EPS);
    }

    #[test]
    fn ideal_bsm() {
        let m = partial_bsm_ideal();
        assert!(m.validate(ASSEMBLY_TOL).is_ok());
        let e00 = ComplexMatrix::from_diag(&[1.0, 0.0, 0.0, 0.0]);
        assert!((m.effect(0, 0).trace_product_re(&e00) - 0.5).abs() < EPS);
        let rank = eig_hermitian(m.effect(2, 0))
            .unwrap()
            .values
            .iter()
            .filter(|&&l| l > 1e-9)
            .count();
        assert_eq!(rank, 2);
        assert_eq!(
            m.classify().unwrap(),
            vec![vec![
                EffectClass::EntangledEffect,
                EffectClass::EntangledEffect,
                EffectClass::SeparableEffect
            ]]
        );
    }

    #[test]
    fn noisy_bsm_limits() {
        let one = partial_bsm_noisy(VisibilityModel::new(1.0).unwrap());
        for (a, b) in one.settings()[0].iter().zip(&partial_bsm_ideal().settings()[0]) {
            assert!(a.max_abs_diff(b) < EPS);
        }
        let zero = partial_bsm_noisy(VisibilityModel::new(0.0).unwrap());
        let background = ComplexMatrix::from_diag(&[0.5, 0.0, 0.0, 0.5]);
        for c in 0..2 {
            assert!(zero.effect(c, 0).max_abs_diff(&background) < EPS);
            assert_eq!(
                classify_effect(zero.effect(c, 0)).unwrap(),
                EffectClass::SeparableEffect
            );
        }
        assert!(matches!(
            VisibilityModel::new(1.2),
            Err(Error::VisibilityOutOfRange(_))
        ));
    }

    #[test]
    fn noisy_bsm_is_a_mixture() {
        let bell = ComplexMatrix::projector(&phi_plus());
        let background = ComplexMatrix::from_diag(&[0.5, 0.0, 0.0, 0.5]);
        for v in [0.0, 0.3, 0.5, 0.9, 1.0] {
            let m = partial_bsm_noisy(VisibilityModel::new(v).unwrap());
            assert!(m.validate(ASSEMBLY_TOL).is_ok());
            let mix = &bell.scale(v) + &background.scale(1.0 - v);
            assert!(m.effect(0, 0).max_abs_diff(&mix) < EPS);
        }
    }

    #[test]
    fn separable_pair() {
        let m = unentangled_povm_pair();
        assert!(m.validate(ASSEMBLY_TOL).is_ok());
        assert!((m.effect(0, 0)[(0, 0)].re - 1.0).abs() < EPS);
        assert!((m.effect(0, 1).trace().re - 2.0).abs() < EPS);
        assert!(m
            .classify()
            .unwrap()
            .iter()
            .flatten()
            .all(|c| *c == EffectClass::SeparableEffect));
    }

    #[test]
    fn born_closed_form_cells() {
        let a = trigonal_preparations(Party::A);
        let b = trigonal_preparations(Party::B);
        let t = born_table(&a, &b, &partial_bsm_ideal()).unwrap();
        assert!((t.get(0, 0, 0, 0) - 0.5).abs() < EPS);
        assert!((t.get(1, 0, 0, 0) - 0.5).abs() < EPS);
        assert!(t.get(2, 0, 0, 0).abs() < EPS);
        assert!((t.get(0, 0, 1, 0) - 0.125).abs() < EPS);
        assert!(t.check_normalized(1e-10).is_ok());

        let trivial = MeasurementAssembly::new(vec![vec![ComplexMatrix::identity(4)]]).unwrap();
        let t = born_table(&a, &b, &trivial).unwrap();
        assert!(t.values().iter().all(|&p| (p - 1.0).abs() < EPS));
    }

    #[test]
    fn born_rejects_invalid_assembly() {
        let a = trigonal_preparations(Party::A);
        let b = trigonal_preparations(Party::B);
        let bad = MeasurementAssembly::new_unchecked(vec![vec![ComplexMatrix::identity(4).scale(0.5)]]);
        assert!(matches!(born_table(&a, &b, &bad), Err(Error::InvalidAssembly(_))));
    }

    #[test]
    fn classify_examples() {
        let bell = ComplexMatrix::projector(&phi_plus());
        assert_eq!(classify_effect(&bell).unwrap(), EffectClass::EntangledEffect);
        let e00 = ComplexMatrix::from_diag(&[1.0, 0.0, 0.0, 0.0]);
        assert_eq!(classify_effect(&e00).unwrap(), EffectClass::SeparableEffect);
        assert_eq!(
            classify_effect(&ComplexMatrix::zeros(4)),
            Err(Error::ZeroEffect)
        );
        assert!(matches!(
            classify_effect(&ComplexMatrix::from_diag(&[1.0, -0.5, 0.0, 0.0])),
            Err(Error::NotPsd { .. })
        ));
    }

    #[test]
    fn noisy_effect_ppt_eigenvalues() {
        // Oracle: PT of M1(V) = diag(1,0,0,1)/2 + V/2 (|01><10| + |10><01|).
        // The {|01>,|10>} block [[0, V/2], [V/2, 0]] has eigenvalues +-V/2,
        // so the effect is entangled for every V > 0.
        for v in [0.1, 0.4, 0.5, 0.6, 0.9] {
            let m = partial_bsm_noisy(VisibilityModel::new(v).unwrap());
            let pt = partial_transpose(m.effect(0, 0)).unwrap();
            let min = eig_hermitian(&pt).unwrap().min();
            assert!((min + v / 2.0).abs() < 1e-12, "v={v} min={min}");
            assert_eq!(
                classify_effect(m.effect(0, 0)).unwrap(),
                EffectClass::EntangledEffect
            );
        }
    }

    #[test]
    fn classification_invariant_under_local_unitaries() {
        let theta = 0.37f64;
        let u = ComplexMatrix::from_vec(
            2,
            vec![
                cr(theta.cos()),
                c(0.0, theta.sin()),
                c(0.0, theta.sin()),
                cr(theta.cos()),
            ],
        );
        let v = ComplexMatrix::from_vec(
            2,
            vec![c(0.6, 0.0), c(0.0, 0.8), c(0.0, 0.8), c(0.6, 0.0)],
        );
        let uv = kron(&u, &v);
        for e in partial_bsm_ideal().settings()[0].iter() {
            let rotated = &(&uv * e) * &uv.adjoint();
            assert_eq!(
                classify_effect(e).unwrap(),
                classify_effect(&rotated.scale(3.5)).unwrap()
            );
        }
    }
}
