use std::collections::HashMap;

use artctx_core::construct::chunk::window_spans;
use artctx_core::construct::clean::{dedup_nodes, levenshtein, normalized_levenshtein, DEFAULT_DEDUP_THRESHOLD};
use artctx_core::construct::{chunk_document, ChunkConfig};
use artctx_core::graph::{Ackg, KgNode, NodeId, NodeType};
use proptest::prelude::*;

/// Plain recursive edit distance with memoization; shares no code with the
/// library's two-row version.
fn edit_distance_oracle(a: &[char], b: &[char]) -> usize {
    fn go(a: &[char], b: &[char], memo: &mut HashMap<(usize, usize), usize>) -> usize {
        if a.is_empty() {
            return b.len();
        }
        if b.is_empty() {
            return a.len();
        }
        let key = (a.len(), b.len());
        if let Some(&d) = memo.get(&key) {
            return d;
        }
        let d = if a[0] == b[0] {
            go(&a[1..], &b[1..], memo)
        } else {
            1 + go(&a[1..], b, memo)
                .min(go(a, &b[1..], memo))
                .min(go(&a[1..], &b[1..], memo))
        };
        memo.insert(key, d);
        d
    }
    go(a, b, &mut HashMap::new())
}

fn similarity_oracle(a: &str, b: &str) -> f64 {
    let (a, b): (Vec<char>, Vec<char>) = (a.chars().collect(), b.chars().collect());
    let longest = a.len().max(b.len());
    if longest == 0 {
        return 1.0;
    }
    1.0 - edit_distance_oracle(&a, &b) as f64 / longest as f64
}

/// Names built from a few long bases with up to two character edits each,
/// so that some pairs land above the merge threshold.
fn arb_names() -> impl Strategy<Value = Vec<(String, u8)>> {
    let base = prop::sample::select(vec![
        "Rembrandt Harmenszoon van Rijn",
        "Johannes Vermeer of Delft",
        "Flemish Baroque painting school",
        "Dutch Golden Age landscape",
        "Pope Gregory XIII",
        "Pope Gregory XIV",
        "Elizabeth I",
        "Elizabeth II",
    ]);
    let edit = (0usize..40, prop::sample::select(vec!['a', 'e', 'x', ' ']), 0u8..3);
    prop::collection::vec((base, prop::collection::vec(edit, 0..3), 0u8..2), 1..16).prop_map(|items| {
        items
            .into_iter()
            .map(|(base, edits, ty)| {
                let mut chars: Vec<char> = base.chars().collect();
                for (pos, c, kind) in edits {
                    let p = pos % (chars.len() + 1);
                    match kind {
                        0 => chars.insert(p, c),
                        1 if p < chars.len() => chars[p] = c,
                        _ if p < chars.len() && chars.len() > 1 => {
                            chars.remove(p);
                        }
                        _ => {}
                    }
                }
                (chars.into_iter().collect::<String>().trim().to_owned(), ty)
            })
            .filter(|(n, _)| !n.is_empty())
            .collect()
    })
}

fn graph_of(names: &[(String, u8)]) -> Ackg {
    let mut g = Ackg::new();
    let mut ids = Vec::new();
    for (name, ty) in names {
        let t = if *ty == 0 { NodeType::Artist } else { NodeType::Theme };
        ids.push(
            g.upsert_node(KgNode::new(name.clone(), t, format!("about {name}")))
                .unwrap(),
        );
    }
    for w in ids.windows(2) {
        if w[0] != w[1] {
            g.add_edge(&w[0], &w[1], "next").unwrap();
        }
    }
    g
}

proptest! {
    #[test]
    fn spans_cover_every_token(n in 0usize..3000, window in 1usize..600, overlap_frac in 0.0f64..1.0) {
        let overlap = ((window as f64) * overlap_frac) as usize;
        prop_assume!(overlap < window);
        let cfg = ChunkConfig::new(window, overlap).unwrap();
        let spans = window_spans(n, &cfg);
        let mut covered = vec![false; n];
        for &(s, e) in &spans {
            prop_assert!(s < e && e <= n && e - s <= window);
            covered[s..e].iter_mut().for_each(|c| *c = true);
        }
        prop_assert!(covered.iter().all(|&c| c));
        prop_assert_eq!(spans.is_empty(), n == 0);
        for pair in spans.windows(2) {
            let ((s0, e0), (s1, _)) = (pair[0], pair[1]);
            // Every window but the last is full; consecutive windows share exactly `overlap` tokens.
            prop_assert_eq!(e0 - s0, window);
            prop_assert_eq!(e0 - s1, overlap);
        }
    }

    #[test]
    fn chunk_text_matches_token_span(words in prop::collection::vec("[a-z]{1,6}", 0..200), window in 2usize..40) {
        let text = words.join("  ");
        let cfg = ChunkConfig::new(window, window / 2).unwrap();
        let chunks = chunk_document("doc", &text, &cfg).unwrap();
        for (i, c) in chunks.iter().enumerate() {
            prop_assert_eq!(c.index, i);
            let want = words[c.span.0..c.span.1].join("  ");
            prop_assert_eq!(&c.text, &want);
        }
    }

    #[test]
    fn levenshtein_matches_recursive_oracle(a in "[abc ]{0,12}", b in "[abcé ]{0,12}") {
        let (ac, bc): (Vec<char>, Vec<char>) = (a.chars().collect(), b.chars().collect());
        prop_assert_eq!(levenshtein(&a, &b), edit_distance_oracle(&ac, &bc));
        prop_assert_eq!(levenshtein(&a, &b), levenshtein(&b, &a));
        prop_assert_eq!(normalized_levenshtein(&a, &b), similarity_oracle(&a, &b));
    }

    #[test]
    fn dedup_is_sound_and_idempotent(names in arb_names()) {
        let g = graph_of(&names);
        let (once, report) = dedup_nodes(g.clone(), DEFAULT_DEDUP_THRESHOLD);
        prop_assert!(once.node_count() <= g.node_count());
        prop_assert!(once.edge_count() <= g.edge_count());
        prop_assert_eq!(once.node_count() + report.merges.len(), g.node_count());
        once.check_consistency().unwrap();
        for m in &report.merges {
            let (a, b) = (g.node(&m.survivor).unwrap(), g.node(&m.absorbed).unwrap());
            prop_assert_eq!(a.node_type, b.node_type);
            prop_assert!(similarity_oracle(&a.name, &b.name) > DEFAULT_DEDUP_THRESHOLD, "{:?}", m);
            prop_assert!(!(a.name.starts_with("Elizabeth I") && b.name.starts_with("Elizabeth I") && a.name != b.name));
        }
        let (twice, again) = dedup_nodes(once.clone(), DEFAULT_DEDUP_THRESHOLD);
        prop_assert!(again.merges.is_empty());
        prop_assert_eq!(twice, once);
    }
}

#[test]
fn thousand_nine_hundred_tokens_make_two_chunks() {
    let cfg = ChunkConfig::new(1000, 100).unwrap();
    assert_eq!(window_spans(1900, &cfg), [(0, 1000), (900, 1900)]);
}

#[test]
fn regnal_numbers_stay_apart() {
    let names = [("Elizabeth I".to_owned(), 0), ("Elizabeth II".to_owned(), 0)];
    let (g, report) = dedup_nodes(graph_of(&names), DEFAULT_DEDUP_THRESHOLD);
    assert!(report.merges.is_empty());
    assert_eq!(g.node_count(), 2);
    let ids: Vec<&NodeId> = g.node_ids().collect();
    assert_eq!(ids.len(), 2);
}
