#![allow(dead_code)]

use entcert::linalg::{eig_hermitian, ComplexMatrix};
use entcert::model::{MeasurementAssembly, Party, PreparationFamily, QubitPreparation};
use num_complex::Complex64;
use proptest::prelude::*;

pub fn matrix_from(dim: usize, raw: &[f64]) -> ComplexMatrix {
    let entries = (0..dim * dim)
        .map(|i| Complex64::new(raw[2 * i], raw[2 * i + 1]))
        .collect();
    ComplexMatrix::from_vec(dim, entries)
}

pub fn hermitian_from(dim: usize, raw: &[f64]) -> ComplexMatrix {
    matrix_from(dim, raw).hermitian_part()
}

pub fn psd_from(dim: usize, raw: &[f64]) -> ComplexMatrix {
    let x = matrix_from(dim, raw);
    (&x * &x.adjoint()).hermitian_part()
}

/// `exp(iH)` for Hermitian `H`, through its eigendecomposition.
pub fn unitary_from(raw: &[f64]) -> ComplexMatrix {
    let h = hermitian_from(2, raw);
    let eig = eig_hermitian(&h).unwrap();
    let v = &eig.vectors;
    let d = ComplexMatrix::from_vec(
        2,
        vec![
            Complex64::from_polar(1.0, eig.values[0]),
            Complex64::new(0.0, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::from_polar(1.0, eig.values[1]),
        ],
    );
    &(v * &d) * &v.adjoint()
}

/// Random POVM: positive operators congruence-normalized to the identity.
pub fn povm_from(dim: usize, outcomes: usize, raw: &[f64]) -> Vec<ComplexMatrix> {
    let step = 2 * dim * dim;
    let effects: Vec<ComplexMatrix> = (0..outcomes)
        .map(|k| &psd_from(dim, &raw[k * step..(k + 1) * step]) + &ComplexMatrix::identity(dim).scale(1e-3))
        .collect();
    let mut s = ComplexMatrix::zeros(dim);
    for e in &effects {
        s += e;
    }
    let inv = eig_hermitian(&s).unwrap().reconstruct_with(|l| 1.0 / l.sqrt());
    let mut out: Vec<ComplexMatrix> = effects
        .iter()
        .map(|e| (&(&inv * e) * &inv).hermitian_part())
        .collect();
    let last = out.len() - 1;
    let mut rest = ComplexMatrix::identity(dim);
    for e in &out[..last] {
        rest = &rest - e;
    }
    out[last] = rest.hermitian_part();
    out
}

pub fn family_from(party: Party, raw: &[f64]) -> PreparationFamily {
    let states = raw
        .chunks(4)
        .map(|k| {
            QubitPreparation::from_ket([
                Complex64::new(k[0], k[1]),
                Complex64::new(k[2], k[3] + 1e-9),
            ])
        })
        .collect();
    PreparationFamily::new(party, states).unwrap()
}

pub fn assembly_from(settings: usize, outcomes: usize, raw: &[f64]) -> MeasurementAssembly {
    let step = outcomes * 32;
    MeasurementAssembly::new(
        (0..settings)
            .map(|z| povm_from(4, outcomes, &raw[z * step..(z + 1) * step]))
            .collect(),
    )
    .unwrap()
}

pub fn reals(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0f64..1.0, n)
}
