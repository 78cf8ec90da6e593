use std::io::Cursor;

use intent_core::corpus::{dedup, levenshtein_similarity, Message};
use intent_core::embeddings::{read_word2vec, read_word2vec_binary, write_word2vec, write_word2vec_binary, EmbeddingTable};
use proptest::prelude::*;

fn token() -> impl Strategy<Value = String> {
    // any non-whitespace text, including multi-byte characters
    "[a-zA-Z0-9éßøœ中文ёж_'#@-]{1,12}"
}

fn table() -> impl Strategy<Value = EmbeddingTable> {
    (1usize..8).prop_flat_map(|dim| {
        prop::collection::vec((token(), prop::collection::vec(any::<f32>(), dim)), 0..20).prop_map(move |rows| {
            let mut t = EmbeddingTable::new(dim);
            for (w, v) in rows {
                t.push(w, &v).unwrap();
            }
            t
        })
    })
}

fn bits(t: &EmbeddingTable) -> Vec<(String, Vec<u32>)> {
    t.iter().map(|(w, v)| (w.to_owned(), v.iter().map(|x| x.to_bits()).collect())).collect()
}

/// Independent full-matrix Levenshtein.
fn distance(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let mut dp = vec![vec![0usize; b.len() + 1]; a.len() + 1];
    for (i, row) in dp.iter_mut().enumerate() {
        row[0] = i;
    }
    for j in 0..=b.len() {
        dp[0][j] = j;
    }
    for i in 1..=a.len() {
        for j in 1..=b.len() {
            let sub = dp[i - 1][j - 1] + usize::from(a[i - 1] != b[j - 1]);
            dp[i][j] = sub.min(dp[i - 1][j] + 1).min(dp[i][j - 1] + 1);
        }
    }
    dp[a.len()][b.len()]
}

fn similar(a: &str, b: &str, threshold: f64) -> bool {
    let (a, b) = (a.to_lowercase(), b.to_lowercase());
    let longest = a.chars().count().max(b.chars().count());
    let sim = if longest == 0 { 1.0 } else { 1.0 - distance(&a, &b) as f64 / longest as f64 };
    sim >= threshold
}

fn brute_force_dedup(texts: &[String], threshold: f64) -> Vec<usize> {
    let mut kept: Vec<usize> = Vec::new();
    for i in 0..texts.len() {
        if kept.iter().all(|&j| !similar(&texts[i], &texts[j], threshold)) {
            kept.push(i);
        }
    }
    kept
}

fn messages(texts: &[String]) -> Vec<Message> {
    texts
        .iter()
        .enumerate()
        .map(|(i, t)| Message {
            id: format!("m{i}"),
            text: t.clone(),
            created_at: None,
            ordinal: i,
        })
        .collect()
}

proptest! {
    #[test]
    fn word2vec_roundtrip_is_bit_exact(t in table()) {
        let mut bytes = Vec::new();
        write_word2vec(&mut bytes, &t).unwrap();
        let back = read_word2vec(Cursor::new(bytes)).unwrap();
        prop_assert_eq!(back.dimension(), t.dimension());
        prop_assert_eq!(bits(&back), bits(&t));
    }

    #[test]
    fn dedup_matches_brute_force_and_is_idempotent(
        texts in prop::collection::vec("[abAB ]{0,8}", 0..40),
        threshold in prop::sample::select(vec![0.5, 0.8, 1.0]),
    ) {
        let msgs = messages(&texts);
        let once = dedup(&msgs, threshold).unwrap();
        let ids: Vec<String> = once.iter().map(|m| m.id.clone()).collect();
        let expected: Vec<String> = brute_force_dedup(&texts, threshold).iter().map(|i| format!("m{i}")).collect();
        prop_assert_eq!(&ids, &expected);
        let twice = dedup(&once, threshold).unwrap();
        prop_assert_eq!(twice, once);
    }

    #[test]
    fn similarity_agrees_with_full_matrix(a in "\\PC{0,10}", b in "\\PC{0,10}") {
        let longest = a.chars().count().max(b.chars().count());
        let expected = if longest == 0 { 1.0 } else { 1.0 - distance(&a, &b) as f64 / longest as f64 };
        prop_assert_eq!(levenshtein_similarity(&a, &b), expected);
    }
}

#[test]
fn binary_file_roundtrip() {
    let mut t = EmbeddingTable::new(3);
    t.push("naïve", &[1.5, -0.0, f32::MIN_POSITIVE]).unwrap();
    t.push("東京", &[f32::MAX, 2.0, -3.25]).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("vectors.bin");
    write_word2vec_binary(&t, &path).unwrap();
    let back = read_word2vec_binary(&path).unwrap();
    assert_eq!(bits(&back), bits(&t));
}

#[test]
fn kitten_sitting() {
    assert_eq!(levenshtein_similarity("kitten", "sitting"), 1.0 - 3.0 / 7.0);
}
