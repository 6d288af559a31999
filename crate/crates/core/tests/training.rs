mod common;

use socialkc::classifier::{classifier_manifest, train_classifier, CategoryClassifier, ClassifierConfig};
use socialkc::qa::{
    evaluate, grid_search, train_qa, AugmentationMode, HyperGrid, QATrainConfig, QaModel, TrialStatus,
    TRIALS_FILE,
};
use socialkc::{Error, TaggedExample};

fn quick(epochs: usize) -> QATrainConfig {
    QATrainConfig {
        encoder_name: "tiny".into(),
        learning_rate: 1e-3,
        batch_size: 4,
        gradient_accumulation: 1,
        max_epochs: epochs,
        max_sequence_length: 64,
        allow_off_grid: true,
        ..QATrainConfig::default()
    }
}

fn small() -> (Vec<TaggedExample>, Vec<TaggedExample>) {
    let train = common::labeled("train").into_iter().take(16).collect();
    let dev = common::labeled("dev").into_iter().take(8).collect();
    (train, dev)
}

#[test]
fn scores_follow_answer_permutations() {
    let (train, dev) = small();
    let (model, _) = train_qa(&train, &dev, &quick(1), AugmentationMode::Relation).unwrap();
    let base = model.scores(&dev).unwrap();
    for order in [[1, 2, 0], [2, 1, 0], [0, 2, 1]] {
        let permuted: Vec<TaggedExample> = dev
            .iter()
            .map(|t| TaggedExample {
                example: t.example.permuted(order),
                ..t.clone()
            })
            .collect();
        let scores = model.scores(&permuted).unwrap();
        for (row, orig) in scores.iter().zip(&base) {
            for i in 0..3 {
                assert!((row[i] - orig[order[i]]).abs() < 1e-5, "{row:?} vs {orig:?} under {order:?}");
            }
        }
    }
}

#[test]
fn evaluation_rejects_other_modes() {
    let (train, dev) = small();
    let (model, _) = train_qa(&train, &dev, &quick(1), AugmentationMode::Relation).unwrap();
    let err = evaluate(&model, &dev, AugmentationMode::Category).unwrap_err();
    assert!(matches!(err, Error::ModeMismatch { .. }), "{err}");
    let ok = evaluate(&model, &dev, AugmentationMode::Relation).unwrap();
    assert_eq!(ok.split, "dev");
    assert_eq!(ok.correctness.len(), dev.len());
}

#[test]
fn tags_must_be_registered_before_scoring() {
    let (train, dev) = small();
    let model = QaModel::new(&quick(1), AugmentationMode::Relation, &train).unwrap();
    let err = model.scores(&dev).unwrap_err();
    assert!(matches!(err, Error::UnregisteredToken(_)), "{err}");

    let plain = QaModel::new(&quick(1), AugmentationMode::None, &train).unwrap();
    assert_eq!(plain.scores(&dev).unwrap().len(), dev.len());
}

#[test]
fn off_grid_values_need_opt_in() {
    let (train, _) = small();
    let cfg = QATrainConfig {
        allow_off_grid: false,
        ..quick(1)
    };
    assert!(matches!(
        QaModel::new(&cfg, AugmentationMode::None, &train),
        Err(Error::Config(_))
    ));
}

#[test]
fn checkpoint_round_trip_preserves_scores() {
    let (train, dev) = small();
    let (model, _) = train_qa(&train, &dev, &quick(1), AugmentationMode::Both).unwrap();
    let dir = tempfile::tempdir().unwrap();
    model.save(dir.path()).unwrap();
    let loaded = QaModel::load(dir.path()).unwrap();
    assert_eq!(loaded.mode(), AugmentationMode::Both);
    assert_eq!(loaded.config(), model.config());
    assert_eq!(loaded.scores(&dev).unwrap(), model.scores(&dev).unwrap());
}

#[test]
fn same_seed_same_model() {
    let (train, dev) = small();
    let (a, ra) = train_qa(&train, &dev, &quick(2), AugmentationMode::Category).unwrap();
    let (b, rb) = train_qa(&train, &dev, &quick(2), AugmentationMode::Category).unwrap();
    assert_eq!(ra, rb);
    assert_eq!(a.scores(&dev).unwrap(), b.scores(&dev).unwrap());
}

#[test]
fn default_grid_writes_twelve_trials() {
    let train: Vec<TaggedExample> = common::tagged("train").into_iter().take(8).collect();
    let dev: Vec<TaggedExample> = common::tagged("dev").into_iter().take(4).collect();
    let base = QATrainConfig {
        max_epochs: 1,
        allow_off_grid: false,
        ..quick(1)
    };
    let root = tempfile::tempdir().unwrap();
    let grid = HyperGrid::default();
    let outcome = grid_search(&train, &dev, AugmentationMode::Relation, &grid, &base, Some(root.path())).unwrap();

    assert_eq!(outcome.trials.len(), 12);
    assert!(outcome.trials.iter().all(|t| t.status == TrialStatus::Completed));
    let dirs: Vec<_> = std::fs::read_dir(root.path())
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.is_dir())
        .collect();
    assert_eq!(dirs.len(), 12);
    for d in &dirs {
        for f in ["config.json", "metrics.json", "predictions.txt", "dev_result.json", "trial.json"] {
            assert!(d.join(f).is_file(), "{} missing {f}", d.display());
        }
        assert!(d.join("checkpoint").is_dir());
        let preds = std::fs::read_to_string(d.join("predictions.txt")).unwrap();
        assert_eq!(preds.lines().count(), dev.len());
        assert!(preds.lines().all(|l| matches!(l, "1" | "2" | "3")));
    }
    assert!(root.path().join(TRIALS_FILE).is_file());

    let best = outcome.dev_result.accuracy;
    let top = outcome
        .trials
        .iter()
        .filter_map(|t| t.dev_accuracy)
        .fold(f64::MIN, f64::max);
    assert_eq!(best, top);
    assert_eq!(outcome.trials[outcome.best_trial].config, outcome.best_config);
}

#[test]
fn classifier_checkpoint_round_trip() {
    let train: Vec<_> = common::annotated("train").into_iter().take(16).collect();
    let dev: Vec<_> = common::annotated("dev").into_iter().take(8).collect();
    let cfg = ClassifierConfig {
        encoder_name: "tiny".into(),
        learning_rate: 5e-4,
        batch_size: 4,
        max_epochs: 1,
        max_sequence_length: 64,
        ..ClassifierConfig::default()
    };
    let (model, report) = train_classifier(&train, &dev, &cfg).unwrap();
    assert_eq!(report.total(), dev.len());
    let manifest = classifier_manifest(&report, &train, &dev).unwrap();
    let dir = tempfile::tempdir().unwrap();
    model.save(dir.path(), &manifest).unwrap();
    let (loaded, back) = CategoryClassifier::load(dir.path()).unwrap();
    assert_eq!(back, manifest);
    let refs: Vec<_> = dev.iter().map(|(e, _)| e).collect();
    assert_eq!(loaded.classify(&refs).unwrap(), model.classify(&refs).unwrap());
}
