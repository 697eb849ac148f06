mod common;

use common::{assembly_from, family_from, psd_from, reals, unitary_from};
use entcert::linalg::{eig_hermitian, kron, partial_transpose};
use entcert::model::{
    born_table, classify_effect, partial_bsm_ideal, partial_bsm_noisy, trigonal_preparations,
    EffectClass, Party, VisibilityModel, ASSEMBLY_TOL,
};
use entcert::ComplexMatrix;
use proptest::prelude::*;
use std::f64::consts::PI;

#[test]
fn born_table_matches_closed_form() {
    let t = born_table(
        &trigonal_preparations(Party::A),
        &trigonal_preparations(Party::B),
        &partial_bsm_ideal(),
    )
    .unwrap();
    for x in 0..3 {
        for y in 0..3 {
            let (a, b) = (2.0 * PI * x as f64 / 3.0, 2.0 * PI * y as f64 / 3.0);
            for (c, sign) in [(0, -1.0), (1, 1.0)] {
                let closed = (1.0 + (a + sign * b).cos()) / 4.0;
                assert!((t.get(c, x, y, 0) - closed).abs() < 1e-12);
            }
        }
    }
}

fn complete_and_psd(settings: &[Vec<ComplexMatrix>]) -> bool {
    settings.iter().all(|effects| {
        let mut sum = ComplexMatrix::zeros(4);
        for e in effects {
            sum += e;
        }
        sum.max_abs_diff(&ComplexMatrix::identity(4)) <= 1e-10
            && effects
                .iter()
                .all(|e| eig_hermitian(e).unwrap().min() >= -ASSEMBLY_TOL)
    })
}

/// Lowest eigenvalue of the partial transpose of the trace-normalized effect.
fn ppt_margin(m: &ComplexMatrix) -> f64 {
    let pt = partial_transpose(&m.scale(1.0 / m.trace().re)).unwrap();
    eig_hermitian(&pt).unwrap().min()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn noisy_assemblies_are_valid(v in 0.0f64..=1.0) {
        let m = partial_bsm_noisy(VisibilityModel::new(v).unwrap());
        prop_assert!(complete_and_psd(m.settings()));
    }

    #[test]
    fn random_assemblies_are_valid(raw in reals(2 * 3 * 32)) {
        let m = assembly_from(2, 3, &raw);
        prop_assert!(complete_and_psd(m.settings()));
    }

    #[test]
    fn born_tables_are_normalized(ra in reals(12), rb in reals(12), rm in reals(2 * 3 * 32)) {
        let t = born_table(
            &family_from(Party::A, &ra),
            &family_from(Party::B, &rb),
            &assembly_from(2, 3, &rm),
        )
        .unwrap();
        prop_assert!(t.check_normalized(1e-10).is_ok());
        prop_assert!(t.values().iter().all(|&p| p >= -1e-12));
    }

    #[test]
    fn ppt_verdict_survives_scaling_and_local_unitaries(
        raw in reals(32),
        ru in reals(8),
        rv in reals(8),
        scale in 0.01f64..100.0,
    ) {
        let m = psd_from(4, &raw);
        // verdicts right at the numerical threshold are not meaningful
        prop_assume!(ppt_margin(&m).abs() > 1e-6);
        let before = classify_effect(&m).unwrap();
        prop_assert_eq!(classify_effect(&m.scale(scale)).unwrap(), before);
        let u = kron(&unitary_from(&ru), &unitary_from(&rv));
        let rotated = (&(&u * &m) * &u.adjoint()).hermitian_part();
        prop_assert_eq!(classify_effect(&rotated).unwrap(), before);
    }

    #[test]
    fn product_effects_are_separable(ra in reals(8), rb in reals(8)) {
        let m = kron(&psd_from(2, &ra), &psd_from(2, &rb));
        prop_assume!(m.trace().re > 1e-6);
        prop_assert_eq!(classify_effect(&m).unwrap(), EffectClass::SeparableEffect);
    }
}
