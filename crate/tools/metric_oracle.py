"""Reference BLEU / ROUGE-L values for crates/core/tests/data/metric_pairs.jsonl.

BLEU comes from sacrebleu and ROUGE-L from the rouge-score package, both fed
pre-tokenized text so only the tokenization rule is shared with the Rust
implementation. nltk's corpus_bleu is printed to stderr as a cross-check; it
differs on BLEU-n when a candidate has fewer than n tokens, because it floors
each sentence's n-gram denominator at 1.

    pip install sacrebleu nltk rouge-score
    python3 tools/metric_oracle.py > crates/core/tests/data/metric_expected.json
"""
import json
import sys
import warnings
from pathlib import Path

from nltk.translate.bleu_score import corpus_bleu
from sacrebleu.metrics import BLEU
from rouge_score import rouge_scorer

warnings.filterwarnings("ignore")


def tokenize(text):
    out = []
    for raw in text.lower().split():
        i, j = 0, len(raw)
        while i < j and not raw[i].isalnum():
            i += 1
        while j > i and not raw[j - 1].isalnum():
            j -= 1
        if i < j:
            out.append(raw[i:j])
    return out


class PreTokenized:
    def tokenize(self, text):
        return text.split(" ") if text else []


def bleu(cands, refs):
    hyps = [" ".join(c) for c in cands]
    width = max(len(r) for r in refs)
    streams = [[" ".join(r[i]) if i < len(r) else None for r in refs] for i in range(width)]
    out = []
    for n in range(1, 5):
        metric = BLEU(max_ngram_order=n, tokenize="none", smooth_method="none", effective_order=False)
        out.append(metric.corpus_score(hyps, streams).score)
    return out


def nltk_bleu(cands, refs):
    return [100.0 * corpus_bleu(refs, cands, weights=tuple([1.0 / n] * n)) for n in range(1, 5)]


def main():
    path = Path(sys.argv[1] if len(sys.argv) > 1 else "crates/core/tests/data/metric_pairs.jsonl")
    pairs = [json.loads(l) for l in path.read_text().splitlines() if l.strip()]
    scorer = rouge_scorer.RougeScorer(["rougeL"], tokenizer=PreTokenized())
    cands = [tokenize(p["candidate"]) for p in pairs]
    refs = [[tokenize(r) for r in p["references"]] for p in pairs]
    per_pair = []
    for p, c, rs in zip(pairs, cands, refs):
        rl = max(scorer.score(" ".join(r), " ".join(c))["rougeL"].fmeasure for r in rs)
        per_pair.append({"id": p["id"], "bleu": bleu([c], [rs]), "rouge_l": rl})
    corpus = {
        "bleu": bleu(cands, refs),
        "rouge_l": sum(p["rouge_l"] for p in per_pair) / len(per_pair),
    }
    print("nltk corpus BLEU:", nltk_bleu(cands, refs), file=sys.stderr)
    json.dump({"corpus": corpus, "pairs": per_pair}, sys.stdout, indent=1)
    print()


if __name__ == "__main__":
    main()
