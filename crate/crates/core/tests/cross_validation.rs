use intent_core::classify::{SchemeConfig, SchemeId};
use intent_core::corpus::IntentLabel;
use intent_core::eval::{comparison_report, cross_validate, write_predictions_csv, BuiltinScheme};
use intent_core::nnet::CnnConfig;
use intent_core::synth::{generate, SynthConfig};

fn quick_config() -> SchemeConfig {
    SchemeConfig {
        cnn: CnnConfig {
            filters_per_width: 8,
            fc_size: 16,
            epochs: 3,
            ..CnnConfig::default()
        },
        embedding_dim: 16,
        ..SchemeConfig::default()
    }
}

#[test]
fn every_scheme_runs_through_cross_validation() {
    let corpus = generate(&SynthConfig {
        messages: 120,
        dimension: 16,
        ..SynthConfig::default()
    });
    let config = quick_config();
    let mut reports = Vec::new();
    for scheme in SchemeId::ALL {
        let runner = BuiltinScheme {
            scheme,
            config: &config,
            table: Some(&corpus.embeddings),
        };
        let report = cross_validate(&runner, &corpus.messages, 3, 5).unwrap();
        assert_eq!(report.scheme, scheme.to_string());
        assert_eq!(report.folds.len(), 3);
        assert_eq!(report.predictions.len(), corpus.messages.len());
        let m = &report.aggregate;
        assert!((m.micro_f - m.accuracy).abs() < 1e-12);
        assert!((0.0..=1.0).contains(&m.macro_f));
        for row in &report.predictions {
            assert_eq!(row.probabilities.len(), IntentLabel::COUNT);
            assert!((row.probabilities.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
        reports.push(report);
    }
    let comparison = comparison_report(&reports).unwrap();
    assert_eq!(comparison.json["schemes"].as_array().unwrap().len(), 6);
    assert!(comparison.text.lines().count() > 6);
}

#[test]
fn reports_are_reproducible() {
    let corpus = generate(&SynthConfig {
        messages: 80,
        dimension: 16,
        ..SynthConfig::default()
    });
    let config = quick_config();
    let runner = BuiltinScheme {
        scheme: SchemeId::B5RandCnnCodesLogit,
        config: &config,
        table: None,
    };
    let a = cross_validate(&runner, &corpus.messages, 4, 11).unwrap();
    let b = cross_validate(&runner, &corpus.messages, 4, 11).unwrap();
    assert_eq!(a, b);
    let mut csv_a = Vec::new();
    let mut csv_b = Vec::new();
    write_predictions_csv(&mut csv_a, &a.predictions).unwrap();
    write_predictions_csv(&mut csv_b, &b.predictions).unwrap();
    assert_eq!(csv_a, csv_b);
}

#[test]
fn word2vec_schemes_need_a_table() {
    let corpus = generate(&SynthConfig {
        messages: 40,
        ..SynthConfig::default()
    });
    let config = quick_config();
    for scheme in [SchemeId::B2W2vAvgLogit, SchemeId::B4W2vCnnSoftmax, SchemeId::ProposedW2vCnnCodesLogit] {
        let runner = BuiltinScheme {
            scheme,
            config: &config,
            table: None,
        };
        let err = cross_validate(&runner, &corpus.messages, 2, 0).unwrap_err();
        assert!(err.to_string().contains(scheme.as_str()), "{err}");
    }
}
