"""Metric hand values, bounds, and agreement with naive re-implementations.

The oracles below recompute each score straight from its definition with
plain list operations (no shared helpers with the package) so agreement is
meaningful.
"""

import math

import numpy as np
import pytest

from bqrank.errors import FileFormatError
from bqrank.metrics import (
    CiderCorpusStats,
    bleu_n,
    cider,
    lcs_length,
    load_cider_stats,
    load_synonym_table,
    meteor,
    rouge_l,
    save_cider_stats,
    tokenize,
)


# --- naive oracles ---------------------------------------------------------

def _grams(tokens, n):
    return [tuple(tokens[i:i + n]) for i in range(len(tokens) - n + 1)]


def naive_bleu(candidate, reference, n):
    c, r = len(candidate), len(reference)
    product = 1.0
    for k in range(1, n + 1):
        cand = _grams(candidate, k)
        ref = _grams(reference, k)
        clipped = sum(min(cand.count(g), ref.count(g)) for g in set(cand))
        p = clipped / len(cand) if cand else 0.0
        if p == 0.0:
            p = 1.0 / (2.0 * c)
        product *= p
    bp = 1.0 if c > r else math.exp(1.0 - r / c)
    return bp * product ** (1.0 / n)


def naive_lcs(a, b):
    table = [[0] * (len(b) + 1) for _ in range(len(a) + 1)]
    for i in range(1, len(a) + 1):
        for j in range(1, len(b) + 1):
            if a[i - 1] == b[j - 1]:
                table[i][j] = table[i - 1][j - 1] + 1
            else:
                table[i][j] = max(table[i - 1][j], table[i][j - 1])
    return table[len(a)][len(b)]


def naive_rouge(candidate, reference):
    return naive_lcs(candidate, reference) / len(reference)


def naive_cider(candidate, reference, doc_freq, corpus_size):
    total = 0.0
    for n in range(1, 5):
        grams = sorted(set(_grams(candidate, n)) | set(_grams(reference, n)))
        u, v = [], []
        for g in grams:
            idf = math.log(corpus_size / doc_freq.get(g, 1))
            u.append(_grams(candidate, n).count(g) * idf)
            v.append(_grams(reference, n).count(g) * idf)
        nu = math.sqrt(sum(x * x for x in u))
        nv = math.sqrt(sum(x * x for x in v))
        if nu > 0.0 and nv > 0.0:
            total += sum(x * y for x, y in zip(u, v)) / (nu * nv)
    return total / 4.0


def naive_meteor(candidate, reference):
    used = set()
    alignment = []
    for ci, token in enumerate(candidate):
        for ri, other in enumerate(reference):
            if ri not in used and token == other:
                used.add(ri)
                alignment.append((ci, ri))
                break
    m = len(alignment)
    if m == 0:
        return 0.0
    p, r = m / len(candidate), m / len(reference)
    f = 10.0 * p * r / (r + 9.0 * p)
    chunks = 0
    previous = None
    for pair in alignment:
        if previous is None or pair != (previous[0] + 1, previous[1] + 1):
            chunks += 1
        previous = pair
    return f * (1.0 - 0.5 * (chunks / m) ** 3)


def _random_sentence(rng, vocab, low=1, high=10):
    return [vocab[i] for i in rng.integers(0, len(vocab), size=int(rng.integers(low, high + 1)))]


# --- tests -----------------------------------------------------------------

class TestTokenize:
    def test_examples(self):
        assert tokenize("How old is the car?") == ["how", "old", "is", "the", "car"]
        assert tokenize("What's the cat sitting on?") == ["whats", "the", "cat", "sitting", "on"]
        assert tokenize("  Hello,   WORLD!  ") == ["hello", "world"]
        assert tokenize("???") == []
        assert tokenize("") == []

    def test_strips_all_listed_punctuation(self):
        assert tokenize("a? b. c, d! e' f\" g; h:") == list("abcdefgh")


class TestBleu:
    def test_brevity_penalty_hand_value(self):
        value = bleu_n(["the", "cat", "sat"], ["the", "cat", "sat", "on", "the", "mat"], 1)
        assert value == math.exp(-1.0)

    def test_identical_long_sentences_score_one(self):
        tokens = ["a", "b", "c", "d", "e"]
        for n in (1, 2, 3, 4):
            assert bleu_n(tokens, tokens, n) == 1.0

    def test_disjoint_vocabulary_smoothing(self):
        value = bleu_n(["a", "b", "c", "d"], ["w", "x", "y", "z"], 1)
        assert value == 1.0 / 8.0

    def test_bounds_and_errors(self):
        with pytest.raises(ValueError):
            bleu_n([], ["a"], 1)
        with pytest.raises(ValueError):
            bleu_n(["a"], [], 1)
        with pytest.raises(ValueError):
            bleu_n(["a"], ["a"], 5)

    def test_candidate_shorter_than_order_smooths(self):
        value = bleu_n(["a"], ["a", "b"], 2)
        assert 0.0 < value <= 1.0


class TestRouge:
    def test_hand_value(self):
        assert rouge_l(["the", "cat"], ["the", "cat", "sat"]) == 2.0 / 3.0

    def test_lcs_examples(self):
        assert lcs_length(list("abcde"), list("ace")) == 3
        assert lcs_length(list("abc"), list("xyz")) == 0

    def test_subsequence_scores_full_recall_of_overlap(self):
        assert rouge_l(["a", "x", "b", "y", "c"], ["a", "b", "c"]) == 1.0


class TestCider:
    def test_self_pair_with_positive_idf_is_one(self):
        rng = np.random.default_rng(31)
        vocab = ["red", "blue", "car", "cat", "tree", "sky", "dog", "sun"]
        corpus = [_random_sentence(rng, vocab, 4, 9) for _ in range(30)]
        stats = CiderCorpusStats.from_corpus(corpus)
        for _ in range(20):
            tokens = _random_sentence(rng, vocab, 4, 9)
            assert cider(tokens, tokens, stats) == pytest.approx(1.0, abs=1e-12)

    def test_requires_stats(self):
        with pytest.raises(ValueError, match="corpus stats"):
            cider(["a"], ["a"], None)

    def test_stats_validation(self):
        with pytest.raises(ValueError):
            CiderCorpusStats(doc_freq={}, corpus_size=0)
        with pytest.raises(ValueError):
            CiderCorpusStats(doc_freq={("a",): 5}, corpus_size=2)
        with pytest.raises(ValueError):
            CiderCorpusStats.from_corpus([])

    def test_unseen_gram_idf_is_log_corpus_size(self):
        stats = CiderCorpusStats.from_corpus([["a", "b"]] * 8)
        assert stats.idf(("zzz",)) == math.log(8)
        assert stats.idf(("a",)) == 0.0

    def test_stats_round_trip(self, tmp_path):
        stats = CiderCorpusStats.from_corpus([["a", "b", "c"], ["a", "x"]])
        save_cider_stats(stats, tmp_path / "stats.json")
        loaded = load_cider_stats(tmp_path / "stats.json")
        assert loaded.corpus_size == 2
        assert dict(loaded.doc_freq) == dict(stats.doc_freq)
        with pytest.raises(FileFormatError):
            (tmp_path / "bad.json").write_text("{not json")
            load_cider_stats(tmp_path / "bad.json")


class TestMeteor:
    def test_two_token_identity(self):
        assert meteor(["the", "cat"], ["the", "cat"]) == 0.9375

    def test_single_token_identity(self):
        assert meteor(["a"], ["a"]) == 0.5

    def test_no_match_is_zero(self):
        assert meteor(["a", "b"], ["x", "y"]) == 0.0

    def test_order_sensitivity(self):
        # Same multiset, scrambled order: more chunks, lower score.
        assert meteor(["b", "a"], ["a", "b"]) < meteor(["a", "b"], ["a", "b"])

    def test_synonym_table_extends_alignment(self, tmp_path):
        (tmp_path / "syn.txt").write_text("car automobile\nbig large huge\n\nlarge vast\n")
        synonyms = load_synonym_table(tmp_path / "syn.txt")
        assert synonyms["car"] == frozenset({"car", "automobile"})
        # Overlapping lines merge into one group.
        assert synonyms["big"] == frozenset({"big", "large", "huge", "vast"})
        without = meteor(["automobile"], ["car"])
        with_table = meteor(["automobile"], ["car"], synonyms)
        assert without == 0.0 and with_table == 0.5


class TestOracleAgreement:
    def test_all_metrics_match_naive_on_random_pairs(self):
        rng = np.random.default_rng(1234)
        vocab = ["a", "b", "c", "d", "red", "blue", "cat", "dog"]
        pairs = [
            (_random_sentence(rng, vocab), _random_sentence(rng, vocab))
            for _ in range(400)
        ]
        corpus = [cand for cand, _ in pairs] + [ref for _, ref in pairs]
        stats = CiderCorpusStats.from_corpus(corpus)
        doc_freq = dict(stats.doc_freq)
        for cand, ref in pairs:
            for n in (1, 2, 3, 4):
                assert bleu_n(cand, ref, n) == pytest.approx(naive_bleu(cand, ref, n), abs=1e-12)
            assert rouge_l(cand, ref) == pytest.approx(naive_rouge(cand, ref), abs=1e-12)
            assert cider(cand, ref, stats) == pytest.approx(
                naive_cider(cand, ref, doc_freq, stats.corpus_size), abs=1e-12
            )
            assert meteor(cand, ref) == pytest.approx(naive_meteor(cand, ref), abs=1e-12)

    def test_scores_stay_in_unit_interval(self):
        rng = np.random.default_rng(99)
        vocab = ["u", "v", "w", "x", "y"]
        corpus = [_random_sentence(rng, vocab) for _ in range(50)]
        stats = CiderCorpusStats.from_corpus(corpus)
        for _ in range(200):
            cand = _random_sentence(rng, vocab)
            ref = _random_sentence(rng, vocab)
            for n in (1, 2, 3, 4):
                assert 0.0 <= bleu_n(cand, ref, n) <= 1.0
            assert 0.0 <= rouge_l(cand, ref) <= 1.0
            assert 0.0 <= cider(cand, ref, stats) <= 1.0
            assert 0.0 <= meteor(cand, ref) <= 1.0

    def test_self_similarity_is_maximal(self):
        rng = np.random.default_rng(7)
        vocab = ["p", "q", "r", "s", "t", "u"]
        corpus = [_random_sentence(rng, vocab, 4, 9) for _ in range(40)]
        stats = CiderCorpusStats.from_corpus(corpus)
        for _ in range(40):
            ref = _random_sentence(rng, vocab, 4, 9)
            self_scores = {
                "bleu4": bleu_n(ref, ref, 4),
                "rouge": rouge_l(ref, ref),
                "cider": cider(ref, ref, stats),
                "meteor": meteor(ref, ref),
            }
            cand = _random_sentence(rng, vocab, 4, 9)
            if cand == ref:
                continue
            assert bleu_n(cand, ref, 4) <= self_scores["bleu4"] + 1e-12
            assert rouge_l(cand, ref) <= self_scores["rouge"] + 1e-12
            assert cider(cand, ref, stats) <= self_scores["cider"] + 1e-12
            assert meteor(cand, ref) <= self_scores["meteor"] + 1e-12
