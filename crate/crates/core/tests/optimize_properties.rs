use entcert::model::{born_table, classify_effect, EffectClass};
use entcert::optimize::{seesaw, Mode, SeesawConfig, MONOTONE_TOL};
use entcert::witness::{evaluate, witness_v, witness_w};
use entcert::Error;
use proptest::prelude::*;

fn check_common(r: &entcert::optimize::OptResult, spec: &entcert::witness::WitnessSpec) -> Result<(), TestCaseError> {
    for t in &r.trace {
        prop_assert!(t.worst_step >= -MONOTONE_TOL, "restart {} fell by {}", t.restart, t.worst_step);
    }
    let (a, b) = &r.best_preparations;
    let table = born_table(a, b, &r.best_assembly).unwrap();
    let again = evaluate(spec, &table).unwrap().value;
    prop_assert!((again - r.best_value).abs() < 1e-12);
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn general_mode_respects_quantum_maximum(seed in any::<u64>()) {
        let spec = witness_w();
        let r = seesaw(&spec, &SeesawConfig::new(Mode::General).with_restarts(4).with_seed(seed)).unwrap();
        check_common(&r, &spec)?;
        prop_assert!(r.best_value <= 1.5 + 1e-9);
        prop_assert!(r.trace.iter().all(|t| t.value <= 1.5 + 1e-9));
    }

    #[test]
    fn locc_mode_stays_unentangled(seed in any::<u64>()) {
        for spec in [witness_w(), witness_v()] {
            let r = seesaw(&spec, &SeesawConfig::new(Mode::Locc).with_restarts(8).with_seed(seed)).unwrap();
            check_common(&r, &spec)?;
            prop_assert!(!r.best_assembly.is_entangled().unwrap());
        }
    }

    #[test]
    fn separable_mode_effects_pass_ppt(seed in any::<u64>()) {
        let spec = witness_w();
        let r = seesaw(&spec, &SeesawConfig::new(Mode::Separable).with_restarts(4).with_seed(seed)).unwrap();
        check_common(&r, &spec)?;
        for effect in r.best_assembly.settings().iter().flatten() {
            match classify_effect(effect) {
                Ok(class) => prop_assert_eq!(class, EffectClass::SeparableEffect),
                Err(Error::ZeroEffect) => {}
                Err(e) => return Err(TestCaseError::fail(e.to_string())),
            }
        }
        prop_assert!(r.best_value <= 1.0 + 1e-4);
    }
}

#[test]
fn general_mode_on_w_reaches_the_maximum() {
    let spec = witness_w();
    let r = seesaw(&spec, &SeesawConfig::new(Mode::General).with_restarts(100).with_seed(1)).unwrap();
    let hits = r.trace.iter().filter(|t| t.value >= 1.5 - 1e-6).count();
    assert!(hits >= 90, "{hits} of 100 restarts reached 1.5");
    assert!(r.certificate_gap.unwrap() <= 1e-6);
}

#[test]
fn seeded_runs_repeat_exactly() {
    let cfg = SeesawConfig::new(Mode::General).with_restarts(6).with_seed(99);
    let a = seesaw(&witness_w(), &cfg).unwrap();
    let b = seesaw(&witness_w(), &cfg).unwrap();
    assert_eq!(a, b);
}
