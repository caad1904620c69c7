"""Answer-file accuracy and the robustness measure built on it.

A record holds one predicted answer and ten ground-truth annotations; its
accuracy is min(matches / 3, 1), so three agreeing annotators already mean
full credit. Dataset accuracy is 100 times the mean of per-record scores
(per-category numbers are reported alongside but never replace the overall
mean). Robustness compares a clean run against a degraded one:

    acc_di  = |acc_vqa - acc_bqd|
    r_score = clamp_0_1( (sqrt(m) - sqrt(acc_di)) / (sqrt(m) - sqrt(t)) )

with defaults t = 0.05 and m = 20 and the constraint 0 <= t < m <= 100.
Answers are normalized (lowercase, trim, collapse runs of whitespace)
before comparison; no stemming or article stripping is applied.
"""

import json
import math
from dataclasses import dataclass
from pathlib import Path

from .errors import FileFormatError

CATEGORIES = ("yes/no", "number", "other")
ANNOTATIONS_PER_RECORD = 10

DEFAULT_T = 0.05
DEFAULT_M = 20.0


@dataclass(frozen=True)
class AnswerRecord:
    question_id: str
    predicted: str
    ground_truth: tuple[str, ...]
    category: str

    def __post_init__(self):
        ground_truth = tuple(self.ground_truth)
        if len(ground_truth) != ANNOTATIONS_PER_RECORD:
            raise ValueError(
                f"expected {ANNOTATIONS_PER_RECORD} ground-truth annotations, got {len(ground_truth)}"
            )
        if self.category not in CATEGORIES:
            raise ValueError(f"category must be one of {CATEGORIES}, got {self.category!r}")
        object.__setattr__(self, "ground_truth", ground_truth)


@dataclass(frozen=True)
class AccuracyReport:
    all: float
    per_category: dict[str, float]
    n: int


@dataclass(frozen=True)
class RobustnessReport:
    acc_vqa: float
    acc_bqd: float
    acc_di: float
    r_score: float
    t: float
    m: float

    def __post_init__(self):
        for name in ("acc_vqa", "acc_bqd"):
            value = getattr(self, name)
            if not 0.0 <= value <= 100.0:
                raise ValueError(f"{name} must be in [0, 100], got {value}")
        if abs(self.acc_di - abs(self.acc_vqa - self.acc_bqd)) > 1e-9:
            raise ValueError("acc_di does not equal |acc_vqa - acc_bqd|")


def normalize_answer(text: str) -> str:
    """Lowercase, trim, and collapse internal whitespace."""
    return " ".join(text.lower().split())


def record_accuracy(record: AnswerRecord) -> float:
    """min(matches / 3, 1) over the ten annotations."""
    predicted = normalize_answer(record.predicted)
    matches = sum(1 for annotation in record.ground_truth if normalize_answer(annotation) == predicted)
    return min(matches / 3.0, 1.0)


def dataset_accuracy(records) -> AccuracyReport:
    if not records:
        raise ValueError("no answer records")
    scores = [record_accuracy(record) for record in records]
    overall = 100.0 * math.fsum(scores) / len(scores)
    per_category: dict[str, float] = {}
    for category in CATEGORIES:
        cat_scores = [s for s, r in zip(scores, records) if r.category == category]
        if cat_scores:
            per_category[category] = 100.0 * math.fsum(cat_scores) / len(cat_scores)
    return AccuracyReport(all=overall, per_category=per_category, n=len(records))


def accuracy_difference(acc_vqa: float, acc_bqd: float) -> float:
    for name, value in (("acc_vqa", acc_vqa), ("acc_bqd", acc_bqd)):
        if not 0.0 <= value <= 100.0:
            raise ValueError(f"{name} must be in [0, 100], got {value}")
    return abs(acc_vqa - acc_bqd)


def robustness_score(acc_di: float, t: float = DEFAULT_T, m: float = DEFAULT_M) -> float:
    if not (0.0 <= t < m <= 100.0):
        raise ValueError(f"need 0 <= t < m <= 100, got t={t}, m={m}")
    if acc_di < 0.0:
        raise ValueError(f"acc_di must be >= 0, got {acc_di}")
    value = (math.sqrt(m) - math.sqrt(acc_di)) / (math.sqrt(m) - math.sqrt(t))
    return min(1.0, max(0.0, value))


def evaluate_robustness(
    clean_records,
    degraded_records,
    t: float = DEFAULT_T,
    m: float = DEFAULT_M,
) -> tuple[RobustnessReport, AccuracyReport, AccuracyReport]:
    clean = dataset_accuracy(clean_records)
    degraded = dataset_accuracy(degraded_records)
    diff = accuracy_difference(clean.all, degraded.all)
    report = RobustnessReport(
        acc_vqa=clean.all,
        acc_bqd=degraded.all,
        acc_di=diff,
        r_score=robustness_score(diff, t, m),
        t=t,
        m=m,
    )
    return report, clean, degraded


def load_answer_records(path) -> list[AnswerRecord]:
    """Line-delimited JSON: question_id, predicted, ground_truth[10], category."""
    records = []
    seen: dict[str, int] = {}
    text = Path(path).read_text(encoding="utf-8")
    for lineno, line in enumerate(text.split("\n"), start=1):
        if not line:
            continue
        try:
            payload = json.loads(line)
        except json.JSONDecodeError as exc:
            raise FileFormatError(f"{path}: line {lineno}: invalid JSON: {exc}") from None
        if not isinstance(payload, dict):
            raise FileFormatError(f"{path}: line {lineno}: expected a JSON object")
        try:
            ground_truth = payload["ground_truth"]
            if not isinstance(ground_truth, list) or not all(isinstance(a, str) for a in ground_truth):
                raise ValueError("ground_truth must be a list of strings")
            record = AnswerRecord(
                question_id=payload["question_id"],
                predicted=payload["predicted"],
                ground_truth=tuple(ground_truth),
                category=payload["category"],
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise FileFormatError(f"{path}: line {lineno}: {exc}") from None
        if record.question_id in seen:
            raise FileFormatError(
                f"{path}: line {lineno}: duplicate question id {record.question_id!r} "
                f"(first at line {seen[record.question_id]})"
            )
        seen[record.question_id] = lineno
        records.append(record)
    return records
