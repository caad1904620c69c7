"""Candidate ranking pipeline: pool preprocessing, top-k scoring, partitions.

A candidate pool is scored against one main question either with sparse
coding (LASSO coefficients of the query over the candidate dictionary) or
with a sentence similarity metric. Before scoring, candidates whose
normalized text equals the main question are removed and textual duplicates
collapse onto their lowest-index occurrence. Ranked entries are sorted by
descending score with ties broken by ascending candidate index; the LASSO
path drops scores <= 0, the metric path keeps zeros.

Ranked records serialize to line-delimited JSON with a fixed field order
and 17 significant digits for scores, so identical inputs reproduce the
file byte for byte.
"""

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, NamedTuple, Sequence

import numpy as np

from . import lasso as lasso_mod
from .embeddings import EmbeddingMatrix, QueryEmbedding
from .errors import FileFormatError
from .metrics import CiderCorpusStats, bleu_n, cider, meteor, rouge_l, tokenize

DEFAULT_TOP_K = 21
PARTITION_COUNT = 7
PARTITION_SIZE = 3


class Candidate(NamedTuple):
    """A pool member; ``index`` is its position in the original pool."""

    index: int
    cand_id: str
    text: str


@dataclass(frozen=True)
class RankedEntry:
    bq_id: str
    bq_text: str
    score: float


@dataclass(frozen=True)
class RankedRecord:
    mq_id: str
    mq_text: str
    image_id: str | None
    entries: tuple[RankedEntry, ...]


@dataclass(frozen=True)
class Partition:
    index: int
    entries: tuple[tuple[str, float], ...]


class Question(NamedTuple):
    id: str
    text: str
    image_id: str | None


def preprocess_pool(pool: Sequence[tuple[str, str]], mq_text: str) -> list[Candidate]:
    """Drop candidates that normalize to the main question, dedup by text.

    Duplicates keep the lowest-index occurrence. Raises if nothing survives.
    """
    mq_tokens = tokenize(mq_text)
    survivors: list[Candidate] = []
    seen: set[tuple[str, ...]] = set()
    for index, (cand_id, text) in enumerate(pool):
        tokens = tuple(tokenize(text))
        if list(tokens) == mq_tokens:
            continue
        if tokens in seen:
            continue
        seen.add(tokens)
        survivors.append(Candidate(index=index, cand_id=cand_id, text=text))
    if not survivors:
        raise ValueError("empty pool after preprocessing")
    return survivors


def rank_from_scores(
    scores: Sequence[float],
    pool: Sequence[Candidate],
    mq_id: str,
    mq_text: str,
    *,
    image_id: str | None = None,
    k: int = DEFAULT_TOP_K,
    drop_nonpositive: bool,
) -> RankedRecord:
    """Order precomputed per-candidate scores into a ranked record."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if len(scores) != len(pool):
        raise ValueError(f"got {len(scores)} scores for {len(pool)} candidates")
    values = [float(s) for s in scores]
    if not all(np.isfinite(values)):
        raise ValueError("scores contain non-finite entries")
    paired = [
        (score, cand)
        for score, cand in zip(values, pool)
        if score > 0.0 or not drop_nonpositive
    ]
    paired.sort(key=lambda item: (-item[0], item[1].index))
    entries = tuple(
        RankedEntry(bq_id=cand.cand_id, bq_text=cand.text, score=score)
        for score, cand in paired[:k]
    )
    return RankedRecord(mq_id=mq_id, mq_text=mq_text, image_id=image_id, entries=entries)


def rank_lasso(
    matrix: EmbeddingMatrix,
    query: QueryEmbedding,
    pool: Sequence[Candidate],
    mq_text: str,
    *,
    image_id: str | None = None,
    config: lasso_mod.LassoConfig | None = None,
    k: int = DEFAULT_TOP_K,
    normalize: bool = False,
) -> RankedRecord:
    """Rank by LASSO coefficient; candidate i maps to matrix column pool[i].index."""
    if not pool:
        raise ValueError("empty pool")
    for cand in pool:
        if not 0 <= cand.index < matrix.count:
            raise ValueError(f"candidate index {cand.index} out of range for count={matrix.count}")
    design = np.asarray(matrix.values[:, [cand.index for cand in pool]], dtype=np.float64)
    target = query.vector
    if target.shape[0] != matrix.dim:
        raise ValueError(f"query dim {target.shape[0]} does not match matrix dim {matrix.dim}")
    if normalize:
        norms = np.linalg.norm(design, axis=0)
        nonzero = norms > 0.0
        design[:, nonzero] /= norms[nonzero]
        target_norm = np.linalg.norm(target)
        if target_norm > 0.0:
            target = target / target_norm
    solution = lasso_mod.solve(design, target, config)
    return rank_from_scores(
        solution.coefficients, pool, query.id, mq_text,
        image_id=image_id, k=k, drop_nonpositive=True,
    )


def _metric_scorer(
    metric: str,
    stats: CiderCorpusStats | None,
    synonyms,
) -> Callable[[list[str], list[str]], float]:
    if metric in ("bleu1", "bleu2", "bleu3", "bleu4"):
        n = int(metric[4])
        return lambda cand, mq: bleu_n(cand, mq, n)
    if metric == "rouge":
        return rouge_l
    if metric == "cider":
        if stats is None:
            raise ValueError("cider requires corpus stats")
        return lambda cand, mq: cider(cand, mq, stats)
    if metric == "meteor":
        return lambda cand, mq: meteor(cand, mq, synonyms)
    raise ValueError(f"unknown metric {metric!r}")


def rank_metric(
    pool: Sequence[Candidate],
    mq_text: str,
    metric: str,
    mq_id: str,
    *,
    image_id: str | None = None,
    k: int = DEFAULT_TOP_K,
    stats: CiderCorpusStats | None = None,
    synonyms=None,
) -> RankedRecord:
    """Rank by metric(candidate, main question); zero scores are kept."""
    if not pool:
        raise ValueError("empty pool")
    scorer = _metric_scorer(metric, stats, synonyms)
    mq_tokens = tokenize(mq_text)
    if not mq_tokens:
        raise ValueError("main question has no tokens")
    scores = []
    for cand in pool:
        tokens = tokenize(cand.text)
        # A candidate with no tokens cannot overlap anything: score 0.
        scores.append(0.0 if not tokens else scorer(tokens, mq_tokens))
    return rank_from_scores(
        scores, pool, mq_id, mq_text, image_id=image_id, k=k, drop_nonpositive=False,
    )


def partition(record: RankedRecord) -> list[Partition]:
    """Split exactly 21 ranked entries into 7 consecutive groups of 3."""
    expected = PARTITION_COUNT * PARTITION_SIZE
    if len(record.entries) != expected:
        raise ValueError(f"partitioning needs exactly {expected} entries, got {len(record.entries)}")
    parts = []
    for p in range(PARTITION_COUNT):
        chunk = record.entries[p * PARTITION_SIZE:(p + 1) * PARTITION_SIZE]
        parts.append(Partition(index=p + 1, entries=tuple((e.bq_id, e.score) for e in chunk)))
    return parts


def concat_question(mq_text: str, bq_texts: Sequence[str]) -> str:
    """Main question first, then appended questions in rank order."""
    return " ".join([mq_text, *bq_texts])


def _score_repr(value: float) -> str:
    return format(float(value), ".17g")


def _record_line(record: RankedRecord, method: str, l1_penalty: float | None, normalize: bool) -> str:
    entries = ",".join(
        "{"
        + f'"bq_id":{json.dumps(entry.bq_id)},"bq_text":{json.dumps(entry.bq_text)},'
        + f'"score":{_score_repr(entry.score)}'
        + "}"
        for entry in record.entries
    )
    fields = [
        f'"mq_id":{json.dumps(record.mq_id)}',
        f'"image_id":{json.dumps(record.image_id)}',
        f'"mq_text":{json.dumps(record.mq_text)}',
        f'"entries":[{entries}]',
        f'"method":{json.dumps(method)}',
    ]
    if method == "lasso":
        fields.append(f'"lambda":{json.dumps(float(l1_penalty))}')
    else:
        fields.append(f'"metric":{json.dumps(method)}')
    fields.append(f'"normalize":{"true" if normalize else "false"}')
    return "{" + ",".join(fields) + "}"


def write_ranked_records(
    records: Sequence[RankedRecord],
    path,
    *,
    method: str,
    l1_penalty: float | None = None,
    normalize: bool = False,
) -> None:
    if method == "lasso" and l1_penalty is None:
        raise ValueError("lasso records need the l1 penalty used")
    lines = [_record_line(record, method, l1_penalty, normalize) for record in records]
    Path(path).write_text("".join(line + "\n" for line in lines), encoding="utf-8")


def read_ranked_records(path) -> list[RankedRecord]:
    records = []
    text = Path(path).read_text(encoding="utf-8")
    for lineno, line in enumerate(text.split("\n"), start=1):
        if not line:
            continue
        try:
            payload = json.loads(line)
        except json.JSONDecodeError as exc:
            raise FileFormatError(f"{path}: line {lineno}: invalid JSON: {exc}") from None
        try:
            entries = tuple(
                RankedEntry(bq_id=e["bq_id"], bq_text=e["bq_text"], score=float(e["score"]))
                for e in payload["entries"]
            )
            record = RankedRecord(
                mq_id=payload["mq_id"],
                mq_text=payload["mq_text"],
                image_id=payload.get("image_id"),
                entries=entries,
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise FileFormatError(f"{path}: line {lineno}: {exc!r}") from None
        scores = [e.score for e in record.entries]
        if any(not np.isfinite(s) for s in scores):
            raise FileFormatError(f"{path}: line {lineno}: non-finite score")
        if any(a < b for a, b in zip(scores, scores[1:])):
            raise FileFormatError(f"{path}: line {lineno}: scores are not non-increasing")
        records.append(record)
    return records


def load_pool_file(path) -> list[tuple[str, str]]:
    """Line-delimited JSON objects {"id": ..., "text": ...}."""
    pool = []
    text = Path(path).read_text(encoding="utf-8")
    for lineno, line in enumerate(text.split("\n"), start=1):
        if not line:
            continue
        try:
            payload = json.loads(line)
        except json.JSONDecodeError as exc:
            raise FileFormatError(f"{path}: line {lineno}: invalid JSON: {exc}") from None
        if not isinstance(payload, dict) or not isinstance(payload.get("id"), str) \
                or not isinstance(payload.get("text"), str):
            raise FileFormatError(f"{path}: line {lineno}: expected string fields 'id' and 'text'")
        pool.append((payload["id"], payload["text"]))
    return pool


def load_question_file(path) -> list[Question]:
    """Like a pool file, plus an optional string field "image_id"."""
    questions = []
    seen: dict[str, int] = {}
    text = Path(path).read_text(encoding="utf-8")
    for lineno, line in enumerate(text.split("\n"), start=1):
        if not line:
            continue
        try:
            payload = json.loads(line)
        except json.JSONDecodeError as exc:
            raise FileFormatError(f"{path}: line {lineno}: invalid JSON: {exc}") from None
        if not isinstance(payload, dict) or not isinstance(payload.get("id"), str) \
                or not isinstance(payload.get("text"), str):
            raise FileFormatError(f"{path}: line {lineno}: expected string fields 'id' and 'text'")
        image_id = payload.get("image_id")
        if image_id is not None and not isinstance(image_id, str):
            raise FileFormatError(f"{path}: line {lineno}: image_id must be a string when present")
        qid = payload["id"]
        if qid in seen:
            raise FileFormatError(
                f"{path}: line {lineno}: duplicate question id {qid!r} (first at line {seen[qid]})"
            )
        seen[qid] = lineno
        questions.append(Question(id=qid, text=payload["text"], image_id=image_id))
    return questions
