use intent_core::seed;
use intent_core::topics::{lda_fit, LdaModel, LdaParams};
use rand::Rng;
use rand_distr::{Beta, Distribution};

const WORDS_PER_TOPIC: usize = 50;

/// Two disjoint 50-word topics; each document mixes them with a Beta(0.5, 0.5)
/// weight, so most documents lean strongly one way.
fn planted_corpus(docs: usize, len: usize, seed_value: u64) -> Vec<Vec<String>> {
    let mut rng = seed::rng(seed_value);
    let mix = Beta::new(0.5, 0.5).unwrap();
    (0..docs)
        .map(|_| {
            let theta: f64 = mix.sample(&mut rng);
            (0..len)
                .map(|_| {
                    let topic = if rng.random::<f64>() < theta { "red" } else { "blue" };
                    format!("{topic}{:02}", rng.random_range(0..WORDS_PER_TOPIC))
                })
                .collect()
        })
        .collect()
}

/// Greedy matching: each planted topic takes the unmatched inferred topic
/// holding most of its words' probability mass. Returns the masses.
fn matched_purity(model: &LdaModel) -> Vec<f64> {
    let mut free: Vec<usize> = (0..model.topics).collect();
    ["red", "blue"]
        .iter()
        .map(|prefix| {
            let mass = |k: usize| -> f64 {
                (0..model.vocab_size())
                    .filter(|&w| model.vocabulary[w].starts_with(prefix))
                    .map(|w| model.word_probability(k, w))
                    .sum()
            };
            let (pos, best) = free
                .iter()
                .enumerate()
                .map(|(i, &k)| (i, mass(k)))
                .max_by(|a, b| a.1.total_cmp(&b.1))
                .unwrap();
            free.remove(pos);
            best
        })
        .collect()
}

fn params() -> LdaParams {
    LdaParams {
        topics: 2,
        iterations: 1000,
        ..LdaParams::default()
    }
}

#[test]
fn planted_topics_are_recovered() {
    for s in [1, 2, 3] {
        let docs = planted_corpus(200, 40, s);
        let model = lda_fit(&docs, &params(), s).unwrap();
        assert!(model.counts_consistent());
        for purity in matched_purity(&model) {
            assert!(purity >= 0.9, "seed {s}: purity {purity}");
        }
    }
}

#[test]
fn log_likelihood_trends_upward() {
    let docs = planted_corpus(200, 40, 7);
    let model = lda_fit(&docs, &params(), 7).unwrap();
    let ll = &model.log_likelihood;
    assert_eq!(ll.len(), 1000);
    let mean = |s: &[f64]| s.iter().sum::<f64>() / s.len() as f64;
    assert!(mean(&ll[900..]) >= mean(&ll[..100]));
}

#[test]
fn same_seed_same_assignments() {
    let docs = planted_corpus(30, 20, 4);
    let short = LdaParams {
        iterations: 50,
        ..params()
    };
    let a = lda_fit(&docs, &short, 8).unwrap();
    let b = lda_fit(&docs, &short, 8).unwrap();
    assert_eq!(a, b);
}
