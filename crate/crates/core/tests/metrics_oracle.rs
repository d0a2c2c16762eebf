//! Corpus metrics against values pinned from independent implementations
//! (see tools/metric_oracle.py).

use artctx_core::metrics::{evaluate_corpus, lcs_len, EvalPair, MetricConfig};
use proptest::prelude::*;
use serde::Deserialize;

#[derive(Deserialize)]
struct Expected {
    corpus: Scores,
    pairs: Vec<PairExpected>,
}

#[derive(Deserialize)]
struct Scores {
    bleu: Vec<f64>,
    rouge_l: f64,
}

#[derive(Deserialize)]
struct PairExpected {
    id: String,
    bleu: Vec<f64>,
    rouge_l: f64,
}

fn corpus() -> Vec<EvalPair> {
    include_str!("data/metric_pairs.jsonl")
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

#[test]
fn pinned_corpus_matches_reference_values() {
    let expected: Expected = serde_json::from_str(include_str!("data/metric_expected.json")).unwrap();
    let report = evaluate_corpus(&corpus(), &MetricConfig::default()).unwrap();
    assert_eq!(report.pair_count, 20);
    for n in 0..4 {
        assert!(
            (report.corpus.bleu[n] - expected.corpus.bleu[n]).abs() < 1e-6,
            "BLEU-{}: {} vs {}",
            n + 1,
            report.corpus.bleu[n],
            expected.corpus.bleu[n]
        );
    }
    assert!((report.corpus.rouge_l - expected.corpus.rouge_l).abs() < 1e-6);
    for (got, want) in report.pairs.iter().zip(&expected.pairs) {
        assert_eq!(got.id, want.id);
        for n in 0..4 {
            assert!((got.bleu[n] - want.bleu[n]).abs() < 1e-6, "{} BLEU-{}", got.id, n + 1);
        }
        assert!((got.rouge_l - want.rouge_l).abs() < 1e-6, "{} ROUGE-L", got.id);
    }
}

#[test]
fn corpus_bleu_is_not_mean_of_pairs() {
    let report = evaluate_corpus(&corpus(), &MetricConfig::default()).unwrap();
    let mean = report.pairs.iter().map(|p| p.bleu[0]).sum::<f64>() / 20.0;
    assert!((mean - report.corpus.bleu[0]).abs() > 1e-3);
}

fn brute_force_lcs(a: &[u8], b: &[u8]) -> usize {
    // Longest subsequence of `a` (by bitmask) that is also a subsequence of `b`.
    let is_subseq = |s: &[u8]| {
        let mut it = b.iter();
        s.iter().all(|x| it.any(|y| y == x))
    };
    (0u32..1 << a.len())
        .filter_map(|mask| {
            let s: Vec<u8> = (0..a.len()).filter(|i| mask >> i & 1 == 1).map(|i| a[i]).collect();
            is_subseq(&s).then_some(s.len())
        })
        .max()
        .unwrap_or(0)
}

proptest! {
    #[test]
    fn lcs_matches_subsequence_enumeration(
        a in prop::collection::vec(0u8..4, 0..=8),
        b in prop::collection::vec(0u8..4, 0..=8),
    ) {
        prop_assert_eq!(lcs_len(&a, &b), brute_force_lcs(&a, &b));
    }
}
