//! Cross-validation must fit every stage on the training folds only.

use std::cell::RefCell;

use intent_core::classify::{fit_scheme, Prediction, SchemeConfig, SchemeId, TestSplit, TrainSplit};
use intent_core::corpus::{IntentLabel, LabeledMessage};
use intent_core::eval::{cross_validate, stratified_kfold, SchemeRunner};
use intent_core::seed;
use intent_core::synth::{generate, SynthConfig};

/// Fits B1 per fold and records what it saw plus its predictions on a fixed
/// probe set, which fingerprints the fitted model.
struct Recorder<'a> {
    probe: &'a [String],
    seen: RefCell<Vec<(Vec<String>, Vec<String>, Vec<Prediction>)>>,
}

impl SchemeRunner for Recorder<'_> {
    fn name(&self) -> String {
        "recorder".into()
    }

    fn run(&self, train: &TrainSplit<'_>, test: &TestSplit<'_>, seed: u64) -> intent_core::Result<Vec<Prediction>> {
        let fitted = fit_scheme(SchemeId::B1BowLogit, train, &SchemeConfig::default(), None, seed)?;
        let fingerprint = fitted.predict(&TestSplit { texts: self.probe })?;
        self.seen
            .borrow_mut()
            .push((train.texts.to_vec(), test.texts.to_vec(), fingerprint));
        fitted.predict(test)
    }
}

fn corpus() -> Vec<LabeledMessage> {
    generate(&SynthConfig {
        messages: 200,
        seed: 2,
        ..SynthConfig::default()
    })
    .messages
}

#[test]
fn train_and_test_texts_partition_the_corpus() {
    let corpus = corpus();
    let probe = vec!["lx001 tx002".to_string()];
    let rec = Recorder {
        probe: &probe,
        seen: RefCell::new(Vec::new()),
    };
    cross_validate(&rec, &corpus, 5, 3).unwrap();
    let seen = rec.seen.into_inner();
    assert_eq!(seen.len(), 5);
    let mut all_test: Vec<String> = Vec::new();
    for (train, test, _) in &seen {
        assert_eq!(train.len() + test.len(), corpus.len());
        // synthetic texts can repeat, so compare multisets
        let mut both: Vec<&String> = train.iter().chain(test).collect();
        let mut expected: Vec<&String> = corpus.iter().map(|m| &m.message.text).collect();
        both.sort();
        expected.sort();
        assert_eq!(both, expected);
        all_test.extend(test.iter().cloned());
    }
    let mut expected: Vec<String> = corpus.iter().map(|m| m.message.text.clone()).collect();
    all_test.sort();
    expected.sort();
    assert_eq!(all_test, expected);
}

#[test]
fn poisoning_a_test_fold_leaves_its_model_unchanged() {
    let corpus = corpus();
    let (k, root) = (5, 3);
    let labels: Vec<IntentLabel> = corpus.iter().map(|m| m.label).collect();
    let folds = stratified_kfold(&labels, k, seed::derive(root, &["cv", "folds"], &[])).unwrap();
    let target = 2;
    let mut poisoned = corpus.clone();
    // labels stay put so the fold assignment is the same for both runs
    for i in folds.members(target) {
        poisoned[i].message.text = format!("poison{i} lx000 ty000 nz0000");
    }
    let probe: Vec<String> = corpus.iter().take(30).map(|m| m.message.text.clone()).collect();
    let run = |c: &[LabeledMessage]| {
        let rec = Recorder {
            probe: &probe,
            seen: RefCell::new(Vec::new()),
        };
        cross_validate(&rec, c, k, root).unwrap();
        rec.seen.into_inner()
    };
    let clean = run(&corpus);
    let dirty = run(&poisoned);
    assert_eq!(clean[target].0, dirty[target].0);
    assert_eq!(clean[target].2, dirty[target].2);
    for f in (0..k).filter(|&f| f != target) {
        assert_ne!(clean[f].0, dirty[f].0);
    }
}

#[test]
fn predictions_do_not_depend_on_the_rest_of_the_test_set() {
    let corpus = corpus();
    let (train, test) = corpus.split_at(150);
    let texts: Vec<String> = train.iter().map(|m| m.message.text.clone()).collect();
    let labels: Vec<IntentLabel> = train.iter().map(|m| m.label).collect();
    let test_texts: Vec<String> = test.iter().map(|m| m.message.text.clone()).collect();
    let split = TrainSplit {
        texts: &texts,
        labels: &labels,
    };
    let fitted = fit_scheme(SchemeId::B1BowLogit, &split, &SchemeConfig::default(), None, 1).unwrap();
    let batch = fitted.predict(&TestSplit { texts: &test_texts }).unwrap();
    for (i, t) in test_texts.iter().enumerate() {
        let alone = fitted.predict(&TestSplit { texts: std::slice::from_ref(t) }).unwrap();
        assert_eq!(alone[0], batch[i]);
    }
}
