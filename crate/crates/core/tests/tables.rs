use proptest::prelude::*;

use taplab_core::classify::Prediction;
use taplab_core::linalg::Matrix;
use taplab_core::pca::{FeatureTable, RowKey};
use taplab_core::signal::{detect_cycles, PeakParams};
use taplab_core::synth::{generate_signal, SynthParams};
use taplab_core::tables::*;

fn ident() -> impl Strategy<Value = String> {
    // readers trim surrounding whitespace
    "[A-Za-z0-9_,\"-]([A-Za-z0-9_ ,\"-]{0,10}[A-Za-z0-9_,\"-])?"
}

fn finite() -> impl Strategy<Value = f64> {
    prop_oneof![-1e6f64..1e6, -1e-6f64..1e-6, Just(0.0)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn features_round_trip(
        rows in prop::collection::vec((ident(), ident(), prop::option::of(0u8..=4), prop::collection::vec(finite(), 3)), 1..12)
    ) {
        let keys = rows.iter().map(|(v, p, _, _)| RowKey::new(v.clone(), p.clone())).collect();
        let data = Matrix::from_rows(&rows.iter().map(|r| r.3.clone()).collect::<Vec<_>>());
        let file = FeatureFile {
            table: FeatureTable::new(vec!["a".into(), "b c".into(), "d,e".into()], keys, data).unwrap(),
            labels: rows.iter().map(|r| r.2).collect(),
        };
        let back: FeatureFile<f64> = read_features(&write_features(&file)).unwrap();
        prop_assert_eq!(back, file);
    }

    #[test]
    fn predictions_round_trip(rows in prop::collection::vec((ident(), 0u8..=4, prop::array::uniform5(0.0f64..1.0)), 0..12)) {
        let rows: Vec<PredictionRow<f64>> = rows
            .into_iter()
            .map(|(video_id, truth, probs)| PredictionRow { video_id, truth, prediction: Prediction::from_probs(probs) })
            .collect();
        prop_assert_eq!(read_predictions::<f64>(&write_predictions(&rows)).unwrap(), rows);
    }

    #[test]
    fn metrics_round_trip(rows in prop::collection::vec((ident(), ident(), finite(), prop::option::of((finite(), finite()))), 0..12)) {
        let rows: Vec<MetricRow> = rows
            .into_iter()
            .map(|(model, metric, value, ci)| MetricRow { model, metric, value, ci })
            .collect();
        prop_assert_eq!(read_metrics(&write_metrics(&rows)).unwrap(), rows);
    }

    #[test]
    fn matrix_round_trip(labels in prop::collection::vec(ident(), 1..6), vals in prop::collection::vec(finite(), 12)) {
        let n = labels.len();
        let m = LabelledMatrix {
            corner: "feature".into(),
            row_labels: labels,
            columns: vec!["PC1".into(), "PC2".into()],
            data: Matrix::from_vec(n, 2, vals[..2 * n].to_vec()),
        };
        prop_assert_eq!(read_matrix::<f64>(&write_matrix(&m)).unwrap(), m);
    }

    #[test]
    fn signal_and_cycles_round_trip(seed in 0u64..500, first in 0usize..100) {
        let p = SynthParams { amp_jitter_cov: 0.1, interval_jitter_cov: 0.1, seed, ..SynthParams::default() };
        let s = generate_signal::<f64>(&p).unwrap().0;
        let rows = signal_rows(&s, first);
        prop_assert_eq!(read_signal(&write_signal(&rows)).unwrap(), rows);
        let c = detect_cycles(&s, &PeakParams::default()).unwrap();
        let rows = cycle_rows(&c, first);
        prop_assert_eq!(read_cycles(&write_cycles(&rows)).unwrap(), rows);
    }

    #[test]
    fn pairs_round_trip(rows in prop::collection::vec((ident(), ident()), 0..10)) {
        prop_assert_eq!(read_pairs(&write_pairs(["video_id", "reason"], &rows), ["video_id", "reason"]).unwrap(), rows);
    }
}

#[test]
fn wrong_header_is_rejected() {
    let err = read_pairs("a,b\nx,y\n", ["video_id", "reason"]).unwrap_err();
    assert_eq!(err.class(), taplab_core::ErrorClass::Input);
}
