"""Sentence similarity metrics over canonical token lists.

All metrics operate on token lists produced by :func:`tokenize` (lowercase,
punctuation stripped, whitespace split) and score a candidate sentence
against a single reference:

* ``bleu_n``  -- geometric mean of clipped k-gram precisions (k = 1..n)
  times a brevity penalty; a zero precision is smoothed to 1/(2c) where c is
  the candidate length.
* ``rouge_l`` -- LCS recall: LCS(candidate, reference) / len(reference).
* ``cider``   -- mean over n = 1..4 of the cosine similarity between tf-idf
  n-gram vectors; idf comes from document frequencies over a corpus, with
  unseen n-grams falling back to idf = log(corpus_size).
* ``meteor``  -- harmonic-mean F-score of exact unigram matches (recall
  weighted 10:1) discounted by a fragmentation penalty 0.5 * (chunks/matches)^3.
  An optional synonym table widens what counts as a match.

Scores are floats in [0, 1]. Empty sentences are rejected.
"""

import json
import math
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .errors import FileFormatError

METRIC_NAMES = ("bleu1", "bleu2", "bleu3", "bleu4", "rouge", "cider", "meteor")

_PUNCTUATION = str.maketrans("", "", "?.,!'\";:")
_CIDER_ORDERS = (1, 2, 3, 4)


def tokenize(raw: str) -> list[str]:
    """Lowercase, drop ? . , ! ' \" ; : and split on whitespace."""
    return raw.lower().translate(_PUNCTUATION).split()


def _ngrams(tokens: Sequence[str], n: int) -> list[tuple[str, ...]]:
    return [tuple(tokens[i:i + n]) for i in range(len(tokens) - n + 1)]


def _require_tokens(name: str, tokens: Sequence[str]) -> None:
    if len(tokens) == 0:
        raise ValueError(f"{name} sentence is empty")


def bleu_n(candidate: Sequence[str], reference: Sequence[str], n: int) -> float:
    if n not in (1, 2, 3, 4):
        raise ValueError(f"n must be 1..4, got {n}")
    _require_tokens("candidate", candidate)
    _require_tokens("reference", reference)
    c, r = len(candidate), len(reference)
    product = 1.0
    for k in range(1, n + 1):
        cand_counts = Counter(_ngrams(candidate, k))
        ref_counts = Counter(_ngrams(reference, k))
        total = sum(cand_counts.values())
        clipped = sum(min(count, ref_counts[gram]) for gram, count in cand_counts.items())
        precision = clipped / total if total > 0 else 0.0
        if precision == 0.0:
            precision = 1.0 / (2.0 * c)
        product *= precision
    brevity = 1.0 if c > r else math.exp(1.0 - r / c)
    return brevity * product ** (1.0 / n)


def lcs_length(a: Sequence[str], b: Sequence[str]) -> int:
    """Longest common subsequence length, O(len(a) * len(b))."""
    if not a or not b:
        return 0
    previous = [0] * (len(b) + 1)
    for token in a:
        current = [0]
        for j, other in enumerate(b, start=1):
            if token == other:
                current.append(previous[j - 1] + 1)
            else:
                current.append(max(previous[j], current[j - 1]))
        previous = current
    return previous[len(b)]


def rouge_l(candidate: Sequence[str], reference: Sequence[str]) -> float:
    _require_tokens("candidate", candidate)
    _require_tokens("reference", reference)
    return lcs_length(candidate, reference) / len(reference)


@dataclass(frozen=True)
class CiderCorpusStats:
    """Document frequencies of n-grams (n = 1..4) over a scoring corpus."""

    doc_freq: Mapping[tuple[str, ...], int]
    corpus_size: int

    def __post_init__(self):
        if self.corpus_size < 1:
            raise ValueError(f"corpus_size must be >= 1, got {self.corpus_size}")
        for gram, freq in self.doc_freq.items():
            if not 1 <= freq <= self.corpus_size:
                raise ValueError(
                    f"document frequency {freq} for {gram!r} outside 1..{self.corpus_size}"
                )

    @classmethod
    def from_corpus(cls, sentences: Iterable[Sequence[str]]) -> "CiderCorpusStats":
        doc_freq: Counter[tuple[str, ...]] = Counter()
        size = 0
        for tokens in sentences:
            size += 1
            grams: set[tuple[str, ...]] = set()
            for n in _CIDER_ORDERS:
                grams.update(_ngrams(tokens, n))
            doc_freq.update(grams)
        if size == 0:
            raise ValueError("corpus is empty")
        return cls(doc_freq=dict(doc_freq), corpus_size=size)

    def idf(self, gram: tuple[str, ...]) -> float:
        # Unseen grams use doc_freq 1, i.e. idf = log(corpus_size).
        return math.log(self.corpus_size / self.doc_freq.get(gram, 1))


def _tfidf_vector(tokens: Sequence[str], n: int, stats: CiderCorpusStats) -> dict[tuple[str, ...], float]:
    return {gram: count * stats.idf(gram) for gram, count in Counter(_ngrams(tokens, n)).items()}


def _cosine(u: Mapping, v: Mapping) -> float:
    norm_u = math.sqrt(sum(x * x for x in u.values()))
    norm_v = math.sqrt(sum(x * x for x in v.values()))
    if norm_u == 0.0 or norm_v == 0.0:
        return 0.0
    dot = sum(weight * v[gram] for gram, weight in u.items() if gram in v)
    return dot / (norm_u * norm_v)


def cider(candidate: Sequence[str], reference: Sequence[str], stats: CiderCorpusStats) -> float:
    _require_tokens("candidate", candidate)
    _require_tokens("reference", reference)
    if stats is None:
        raise ValueError("cider requires corpus stats")
    total = 0.0
    for n in _CIDER_ORDERS:
        total += _cosine(_tfidf_vector(candidate, n, stats), _tfidf_vector(reference, n, stats))
    return total / len(_CIDER_ORDERS)


def meteor(
    candidate: Sequence[str],
    reference: Sequence[str],
    synonyms: Mapping[str, frozenset[str]] | None = None,
) -> float:
    _require_tokens("candidate", candidate)
    _require_tokens("reference", reference)

    def equivalent(a: str, b: str) -> bool:
        if a == b:
            return True
        return synonyms is not None and b in synonyms.get(a, ())

    # Leftmost-greedy alignment: each candidate token takes the first
    # still-unmatched reference occurrence, at most one match per token.
    taken = [False] * len(reference)
    pairs: list[tuple[int, int]] = []
    for ci, ct in enumerate(candidate):
        for ri, rt in enumerate(reference):
            if not taken[ri] and equivalent(ct, rt):
                taken[ri] = True
                pairs.append((ci, ri))
                break
    matches = len(pairs)
    if matches == 0:
        return 0.0
    precision = matches / len(candidate)
    recall = matches / len(reference)
    fscore = 10.0 * precision * recall / (recall + 9.0 * precision)
    chunks = 1
    for (prev_c, prev_r), (cur_c, cur_r) in zip(pairs, pairs[1:]):
        if not (cur_c == prev_c + 1 and cur_r == prev_r + 1):
            chunks += 1
    penalty = 0.5 * (chunks / matches) ** 3
    return fscore * (1.0 - penalty)


def load_synonym_table(path) -> dict[str, frozenset[str]]:
    """One synonym set per line, tokens space-separated; overlapping sets merge."""
    groups: dict[str, set[str]] = {}
    for line in Path(path).read_text(encoding="utf-8").split("\n"):
        tokens = line.split()
        if not tokens:
            continue
        merged = set(tokens)
        for token in tokens:
            merged |= groups.get(token, set())
        for token in merged:
            groups[token] = merged
    return {token: frozenset(group) for token, group in groups.items()}


def save_cider_stats(stats: CiderCorpusStats, path) -> None:
    payload = {
        "corpus_size": stats.corpus_size,
        "doc_freq": {" ".join(gram): freq for gram, freq in stats.doc_freq.items()},
    }
    Path(path).write_text(json.dumps(payload, sort_keys=True) + "\n", encoding="utf-8")


def load_cider_stats(path) -> CiderCorpusStats:
    try:
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise FileFormatError(f"{path}: invalid JSON: {exc}") from None
    if not isinstance(payload, dict) or "corpus_size" not in payload or "doc_freq" not in payload:
        raise FileFormatError(f"{path}: expected an object with corpus_size and doc_freq")
    try:
        doc_freq = {tuple(key.split(" ")): int(freq) for key, freq in payload["doc_freq"].items()}
        return CiderCorpusStats(doc_freq=doc_freq, corpus_size=int(payload["corpus_size"]))
    except (ValueError, AttributeError, TypeError) as exc:
        raise FileFormatError(f"{path}: {exc}") from None
