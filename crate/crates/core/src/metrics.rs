//! Corpus BLEU-1..4 and ROUGE-L.
//!
//! BLEU aggregates clipped n-gram counts over the whole corpus before taking
//! precisions, uses the closest reference length (shorter on ties) for the
//! brevity penalty and applies no smoothing: an order with zero matches
//! makes that BLEU-n and every higher one 0. Scores are on a 0-100 scale.
//! ROUGE-L is the LCS F-measure, best over references, averaged over pairs.

use std::collections::HashMap;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MAX_ORDER: usize = 4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MetricConfig {
    /// Recall weight in the ROUGE-L F-measure.
    pub beta: f64,
    pub lowercase: bool,
}

impl Default for MetricConfig {
    fn default() -> Self {
        MetricConfig {
            beta: 1.0,
            lowercase: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalPair {
    pub id: String,
    pub candidate: String,
    pub references: Vec<String>,
}

impl EvalPair {
    pub fn validate(&self) -> Result<()> {
        if self.candidate.trim().is_empty() {
            return Err(Error::Validation(format!("pair {:?}: empty candidate", self.id)));
        }
        if !self.references.iter().any(|r| !r.trim().is_empty()) {
            return Err(Error::Validation(format!("pair {:?}: no non-empty reference", self.id)));
        }
        Ok(())
    }
}

/// Whitespace split with non-alphanumeric characters stripped from both
/// ends of each token; tokens left empty are dropped.
pub fn tokenize_with(text: &str, lowercase: bool) -> Vec<String> {
    text.split_whitespace()
        .map(|t| t.trim_matches(|c: char| !c.is_alphanumeric()))
        .filter(|t| !t.is_empty())
        .map(|t| if lowercase { t.to_lowercase() } else { t.to_owned() })
        .collect()
}

pub fn tokenize(text: &str) -> Vec<String> {
    tokenize_with(text, true)
}

fn ngram_counts(tokens: &[String], n: usize) -> HashMap<&[String], usize> {
    let mut counts = HashMap::new();
    if tokens.len() >= n {
        for g in tokens.windows(n) {
            *counts.entry(g).or_insert(0) += 1;
        }
    }
    counts
}

/// Sufficient statistics for BLEU; add them up across pairs for corpus BLEU.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct BleuStats {
    pub matches: [usize; MAX_ORDER],
    pub totals: [usize; MAX_ORDER],
    pub candidate_len: usize,
    pub reference_len: usize,
}

impl BleuStats {
    pub fn from_tokens(candidate: &[String], references: &[Vec<String>]) -> Self {
        let mut s = BleuStats {
            candidate_len: candidate.len(),
            reference_len: closest_reference_len(candidate.len(), references),
            ..Default::default()
        };
        for n in 1..=MAX_ORDER {
            let cand = ngram_counts(candidate, n);
            let mut max_ref: HashMap<&[String], usize> = HashMap::new();
            for r in references {
                for (g, c) in ngram_counts(r, n) {
                    let e = max_ref.entry(g).or_insert(0);
                    *e = (*e).max(c);
                }
            }
            s.matches[n - 1] = cand
                .iter()
                .map(|(g, c)| (*c).min(max_ref.get(g).copied().unwrap_or(0)))
                .sum();
            s.totals[n - 1] = candidate.len().saturating_sub(n - 1);
        }
        s
    }

    pub fn add(&mut self, other: &BleuStats) {
        for i in 0..MAX_ORDER {
            self.matches[i] += other.matches[i];
            self.totals[i] += other.totals[i];
        }
        self.candidate_len += other.candidate_len;
        self.reference_len += other.reference_len;
    }

    /// Modified precision for order `n`; an empty denominator counts as 1.
    pub fn precision(&self, n: usize) -> f64 {
        self.matches[n - 1] as f64 / self.totals[n - 1].max(1) as f64
    }

    pub fn brevity_penalty(&self) -> f64 {
        let (c, r) = (self.candidate_len as f64, self.reference_len as f64);
        if c == 0.0 {
            0.0
        } else if c > r {
            1.0
        } else {
            (1.0 - r / c).exp()
        }
    }

    /// BLEU-n with uniform weights, 0-100.
    pub fn bleu(&self, n: usize) -> f64 {
        assert!((1..=MAX_ORDER).contains(&n), "BLEU order {n} outside 1..=4");
        if self.matches[..n].contains(&0) {
            return 0.0;
        }
        let log_mean = (1..=n).map(|i| self.precision(i).ln()).sum::<f64>() / n as f64;
        100.0 * self.brevity_penalty() * log_mean.exp()
    }

    pub fn bleu_all(&self) -> [f64; MAX_ORDER] {
        [self.bleu(1), self.bleu(2), self.bleu(3), self.bleu(4)]
    }
}

fn closest_reference_len(c: usize, references: &[Vec<String>]) -> usize {
    references
        .iter()
        .map(Vec::len)
        .min_by_key(|&r| (r.abs_diff(c), r))
        .unwrap_or(0)
}

/// Corpus BLEU-1..`max_n` over tokenized pairs.
pub fn bleu(pairs: &[(Vec<String>, Vec<Vec<String>>)], max_n: usize) -> Result<Vec<f64>> {
    if !(1..=MAX_ORDER).contains(&max_n) {
        return Err(Error::Validation(format!("BLEU order {max_n} outside 1..=4")));
    }
    if pairs.is_empty() {
        return Err(Error::Validation("no pairs to score".into()));
    }
    let mut total = BleuStats::default();
    for (c, refs) in pairs {
        total.add(&BleuStats::from_tokens(c, refs));
    }
    Ok((1..=max_n).map(|n| total.bleu(n)).collect())
}

pub fn lcs_len<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    let mut prev = vec![0usize; b.len() + 1];
    let mut cur = vec![0usize; b.len() + 1];
    for x in a {
        for (j, y) in b.iter().enumerate() {
            cur[j + 1] = if x == y { prev[j] + 1 } else { prev[j + 1].max(cur[j]) };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// LCS F-measure `(1+β²)PR / (R + β²P)`, best over references. 0 when
/// there is no common token.
pub fn rouge_l(candidate: &[String], references: &[Vec<String>], beta: f64) -> f64 {
    references
        .iter()
        .map(|r| {
            let lcs = lcs_len(candidate, r);
            if lcs == 0 {
                return 0.0;
            }
            let p = lcs as f64 / candidate.len() as f64;
            let rec = lcs as f64 / r.len() as f64;
            let b2 = beta * beta;
            (1.0 + b2) * p * rec / (rec + b2 * p)
        })
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairScores {
    pub id: String,
    pub bleu: [f64; MAX_ORDER],
    pub rouge_l: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusScores {
    pub bleu: [f64; MAX_ORDER],
    pub rouge_l: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub pair_count: usize,
    pub corpus: CorpusScores,
    pub pairs: Vec<PairScores>,
}

impl MetricReport {
    pub fn render_table(&self) -> String {
        let mut out = String::new();
        let header = ["BLEU-1", "BLEU-2", "BLEU-3", "BLEU-4", "ROUGE-L"];
        let _ = write!(out, "{:<12}", "");
        for h in header {
            let _ = write!(out, "{h:>9}");
        }
        out.push('\n');
        let mut row = |label: &str, b: &[f64; MAX_ORDER], r: f64| {
            let _ = write!(out, "{label:<12}");
            for v in b {
                let _ = write!(out, "{v:>9.2}");
            }
            let _ = writeln!(out, "{:>9.2}", r * 100.0);
        };
        row("corpus", &self.corpus.bleu, self.corpus.rouge_l);
        for p in &self.pairs {
            row(&p.id, &p.bleu, p.rouge_l);
        }
        out
    }
}

/// Per-pair and corpus scores. ROUGE-L is shown ×100 in the table only.
pub fn evaluate_corpus(pairs: &[EvalPair], config: &MetricConfig) -> Result<MetricReport> {
    if pairs.is_empty() {
        return Err(Error::Validation("no pairs to score".into()));
    }
    for p in pairs {
        p.validate()?;
    }
    let scored: Vec<(BleuStats, PairScores)> = pairs
        .par_iter()
        .map(|p| {
            let c = tokenize_with(&p.candidate, config.lowercase);
            let refs: Vec<Vec<String>> = p
                .references
                .iter()
                .filter(|r| !r.trim().is_empty())
                .map(|r| tokenize_with(r, config.lowercase))
                .collect();
            let stats = BleuStats::from_tokens(&c, &refs);
            let scores = PairScores {
                id: p.id.clone(),
                bleu: stats.bleu_all(),
                rouge_l: rouge_l(&c, &refs, config.beta),
            };
            (stats, scores)
        })
        .collect();

    let mut total = BleuStats::default();
    for (s, _) in &scored {
        total.add(s);
    }
    let pairs: Vec<PairScores> = scored.into_iter().map(|(_, p)| p).collect();
    let rouge = pairs.iter().map(|p| p.rouge_l).sum::<f64>() / pairs.len() as f64;
    Ok(MetricReport {
        pair_count: pairs.len(),
        corpus: CorpusScores {
            bleu: total.bleu_all(),
            rouge_l: rouge,
        },
        pairs,
    })
}
