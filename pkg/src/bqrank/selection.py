"""Threshold-gated selection of how many ranked questions to append.

Given the top three scores of a ranked record (non-increasing, >= 0) and
three thresholds in [0, 1], the default cascade appends:

    BQ1  iff score1 > s1
    BQ2  iff BQ1 was appended and score2 / score1 > s2
    BQ3  iff BQ2 was appended and score3 / score2 > s3

All comparisons are strict and a zero denominator fails its test, so a
later question never outlives a failed earlier gate. ``cascade=False``
switches to reading the three tests independently, where the last passing
test decides how many questions are appended even if an earlier one failed.
"""

from dataclasses import dataclass
from typing import Iterable, Sequence

from .ranking import RankedRecord, concat_question

DEFAULT_S1 = 0.60
DEFAULT_S2 = 0.58
DEFAULT_S3 = 0.41


@dataclass(frozen=True)
class SelectionThresholds:
    s1: float = DEFAULT_S1
    s2: float = DEFAULT_S2
    s3: float = DEFAULT_S3

    def __post_init__(self):
        for name in ("s1", "s2", "s3"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} must be in [0, 1], got {value}")


@dataclass(frozen=True)
class SelectionResult:
    appended_count: int
    concatenated_text: str


def select(scores: Sequence[float], thresholds: SelectionThresholds, *, cascade: bool = True) -> int:
    """Number of questions to append (0..3) for the top-3 ``scores``."""
    if len(scores) != 3:
        raise ValueError(f"expected exactly 3 scores, got {len(scores)}")
    score1, score2, score3 = (float(s) for s in scores)
    if score3 < 0.0:
        raise ValueError(f"scores must be >= 0, got {scores}")
    if not score1 >= score2 >= score3:
        raise ValueError(f"scores must be non-increasing, got {scores}")
    test1 = score1 > thresholds.s1
    test2 = score1 > 0.0 and score2 / score1 > thresholds.s2
    test3 = score2 > 0.0 and score3 / score2 > thresholds.s3
    if cascade:
        if test1 and test2 and test3:
            return 3
        if test1 and test2:
            return 2
        if test1:
            return 1
        return 0
    if test3:
        return 3
    if test2:
        return 2
    if test1:
        return 1
    return 0


def apply_selection(
    record: RankedRecord,
    thresholds: SelectionThresholds,
    *,
    cascade: bool = True,
) -> SelectionResult:
    """Gate a ranked record; missing entries count as score 0."""
    scores = [entry.score for entry in record.entries[:3]]
    scores += [0.0] * (3 - len(scores))
    count = select(scores, thresholds, cascade=cascade)
    appended = [entry.bq_text for entry in record.entries[:count]]
    return SelectionResult(
        appended_count=count,
        concatenated_text=concat_question(record.mq_text, appended),
    )


def selection_histogram(counts: Iterable[int]) -> dict:
    """Distribution of appended counts: totals and percentages for 0..3."""
    tally = {appended: 0 for appended in range(4)}
    total = 0
    for count in counts:
        if count not in tally:
            raise ValueError(f"appended count must be 0..3, got {count}")
        tally[count] += 1
        total += 1
    if total == 0:
        raise ValueError("no selection results")
    return {
        "total": total,
        "counts": tally,
        "percentages": {appended: 100.0 * n / total for appended, n in tally.items()},
    }
