use gapband_core::corruption::RemovalMode;
use gapband_core::eval::{
    compare_dae_svm, majority_vote, run_protocol, session_pairs, trial_accuracy, window_accuracy, ClassifierKind,
    Protocol,
};
use gapband_core::synth::{generate_surrogate_dataset, SurrogateDatasetSpec};

fn small_dataset() -> gapband_core::Dataset {
    generate_surrogate_dataset(&SurrogateDatasetSpec {
        subjects: 1,
        sessions: 2,
        ..SurrogateDatasetSpec::default()
    })
    .unwrap()
}

#[test]
fn report_has_one_row_per_cell_and_beats_shuffled_labels() {
    let data = small_dataset();
    assert_eq!(session_pairs(&data), vec![(1, 1, 2)]);
    let protocol = Protocol {
        removal_levels: vec![0.0, 0.8],
        modes: vec![RemovalMode::Point],
        ..Protocol::default()
    };
    let report = run_protocol(&data, &protocol).unwrap();
    assert_eq!(report.rows.len(), 2 * 2);
    let shuffled = run_protocol(
        &data,
        &Protocol {
            shuffle_training_labels: true,
            ..protocol.clone()
        },
    )
    .unwrap();
    for kind in [ClassifierKind::Dae, ClassifierKind::Svm] {
        let real = report.mean_window_accuracy(RemovalMode::Point, 0.8, kind).unwrap();
        let chance = shuffled.mean_window_accuracy(RemovalMode::Point, 0.8, kind).unwrap();
        assert!(real >= chance, "{kind:?}: {real} vs {chance}");
    }
    assert_eq!(report, run_protocol(&data, &protocol).unwrap());

    let cmp = compare_dae_svm(&report).unwrap();
    assert_eq!(cmp.cells.len(), 2);
    for cell in &cmp.cells {
        let dae = report
            .rows
            .iter()
            .find(|r| r.classifier == ClassifierKind::Dae && r.removal_fraction == cell.removal_fraction)
            .unwrap();
        let svm = report
            .rows
            .iter()
            .find(|r| r.classifier == ClassifierKind::Svm && r.removal_fraction == cell.removal_fraction)
            .unwrap();
        assert_eq!(cell.window_difference, dae.window_accuracy - svm.window_accuracy);
    }
}

#[test]
fn trial_votes_skip_missing_windows() {
    assert_eq!(majority_vote(&[None, Some(1), Some(0), Some(1)]), Some(1));
    assert_eq!(majority_vote(&[None, None]), None);
    let score = trial_accuracy(&[vec![Some(0), Some(0)], vec![None], vec![Some(1)]], &[0, 1, 0]).unwrap();
    assert_eq!(score.evaluated, 2);
    assert_eq!(score.excluded, vec![1]);
    assert_eq!(score.accuracy, 0.5);
    let w = window_accuracy(&[Some(1), None, Some(0)], &[1, 1, 1]).unwrap();
    assert_eq!(w.accuracy, 0.5);
}
