use entcert::model::{
    born_table, partial_bsm_ideal, partial_bsm_noisy, trigonal_preparations, Party,
    VisibilityModel,
};
use entcert::simulate::{estimate, sample_counts, CountTable};
use entcert::table::ProbabilityTable;
use entcert::witness::{evaluate, witness_w};
use proptest::prelude::*;

fn noisy_table(v: f64) -> ProbabilityTable {
    born_table(
        &trigonal_preparations(Party::A),
        &trigonal_preparations(Party::B),
        &partial_bsm_noisy(VisibilityModel::new(v).unwrap()),
    )
    .unwrap()
}

#[test]
fn sampled_frequencies_converge() {
    let t = born_table(
        &trigonal_preparations(Party::A),
        &trigonal_preparations(Party::B),
        &partial_bsm_ideal(),
    )
    .unwrap();
    let n = 1_000_000u64;
    let counts = sample_counts(&t, n, 17).unwrap();
    for (i, &k) in counts.counts().iter().enumerate() {
        let p = t.values()[i].clamp(0.0, 1.0);
        let freq = k as f64 / n as f64;
        assert!((freq - p).abs() <= 5.0 * (p * (1.0 - p) / n as f64).sqrt() + 1e-12);
    }
}

#[test]
fn propagated_stderr_matches_spread() {
    let spec = witness_w();
    let t = noisy_table(0.9);
    let n = 10_000;
    let values: Vec<f64> = (0..1000)
        .map(|s| estimate(&spec, &sample_counts(&t, n, s).unwrap()).unwrap().value)
        .collect();
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let spread = (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 999.0).sqrt();
    let propagated = estimate(&spec, &sample_counts(&t, n, 5000).unwrap()).unwrap().stderr;
    assert!((propagated / spread - 1.0).abs() < 0.1, "{propagated} vs {spread}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn estimate_on_counts_equals_evaluate(raw in prop::collection::vec(0u64..50, 27), pad in 1u64..20) {
        // any integer table with equal group totals
        let spec = witness_w();
        let d = spec.dims();
        let mut counts = raw.clone();
        let shots = (0..9).map(|g| raw[3 * g..3 * g + 3].iter().sum::<u64>()).max().unwrap() + pad;
        for g in 0..9 {
            let sum: u64 = raw[3 * g..3 * g + 3].iter().sum();
            counts[3 * g + 2] += shots - sum;
        }
        let table = CountTable::new(d, shots, counts).unwrap();
        let e = estimate(&spec, &table).unwrap();
        let direct = evaluate(&spec, &table.raw_frequencies()).unwrap().value;
        prop_assert!((e.value - direct).abs() < 1e-12);
        prop_assert!(e.stderr >= 0.0);
    }

    #[test]
    fn sampling_is_deterministic(seed in any::<u64>(), v in 0.0f64..=1.0) {
        let t = noisy_table(v);
        prop_assert_eq!(sample_counts(&t, 500, seed).unwrap(), sample_counts(&t, 500, seed).unwrap());
    }
}
