"""Classifier fairness auditing for a binary protected attribute.

Checks two things about a scoring classifier: per-sample individual bias
(does the decision change when only the protected attribute flips?) and
group-level disparate impact (the ratio of favorable rates, unprivileged
over privileged, against reciprocal bounds set by epsilon). Mitigation is
greedy label post-processing restricted to individually biased samples.

Conventions: d = 1 is the privileged group, y = 1 the favorable outcome,
scores live in [0, 1] and threshold at tau into hard decisions.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import EmptyGroup, ScoreOutOfRange

DEFAULT_EPSILON = 0.2
DEFAULT_THRESHOLD = 0.5


@dataclass(frozen=True)
class AuditSample:
    """One labeled sample: features, protected attribute, observed label."""

    x: tuple[float, ...]
    d: int
    y: int

    def __post_init__(self) -> None:
        if self.d not in (0, 1):
            raise ValueError(f"d must be 0 or 1, got {self.d}")
        if self.y not in (0, 1):
            raise ValueError(f"y must be 0 or 1, got {self.y}")


@dataclass(frozen=True)
class AuditedClassifier:
    """Scoring interface under audit: score(x, d) in [0, 1], thresholded at tau."""

    score_fn: Callable[[np.ndarray, int], float]
    threshold: float = DEFAULT_THRESHOLD

    def score(self, x: Sequence[float], d: int) -> float:
        value = float(self.score_fn(np.asarray(x, dtype=np.float64), d))
        if not 0.0 <= value <= 1.0:
            raise ScoreOutOfRange(f"score {value} outside [0, 1]")
        return value

    def predict(self, x: Sequence[float], d: int) -> int:
        return 1 if self.score(x, d) >= self.threshold else 0


@dataclass
class AuditReport:
    """Per-sample bias indicators and scores plus the group-level verdict."""

    b: list[int]
    b_s: list[float]
    predictions: list[int]
    bias_summary: float
    di_ratio: float
    epsilon: float
    di_flag: bool
    mitigation_flips: list[tuple[int, int, int]] = field(default_factory=list)


def individual_bias(clf: AuditedClassifier, x: Sequence[float]) -> tuple[int, float]:
    """Indicator and signed score of a decision change under a d-flip.

    The score is score(x, d=1) - score(x, d=0), in [-1, 1]; the indicator is
    1 exactly when the thresholded predictions differ.
    """
    score_unpriv = clf.score(x, 0)
    score_priv = clf.score(x, 1)
    pred_unpriv = 1 if score_unpriv >= clf.threshold else 0
    pred_priv = 1 if score_priv >= clf.threshold else 0
    return int(pred_unpriv != pred_priv), score_priv - score_unpriv


def _di_bounds(epsilon: float) -> tuple[float, float]:
    return 1.0 - epsilon, 1.0 / (1.0 - epsilon)


def disparate_impact(
    preds: Sequence[int],
    d: Sequence[int],
    epsilon: float = DEFAULT_EPSILON,
) -> tuple[float, bool]:
    """Favorable-rate ratio mean(pred | d=0) / mean(pred | d=1) and its flag.

    A zero privileged rate yields +inf (flagged) unless the unprivileged
    rate is also zero, which counts as parity. The flag is strict: ratios
    exactly at 1 - epsilon or its reciprocal do not flag.
    """
    if not 0.0 < epsilon < 1.0:
        raise ValueError(f"epsilon must be in (0, 1), got {epsilon}")
    if len(preds) != len(d):
        raise ValueError("preds and d must have equal length")
    fav = [0, 0]
    total = [0, 0]
    for pred, group in zip(preds, d):
        total[group] += 1
        fav[group] += 1 if pred else 0
    if total[0] == 0 or total[1] == 0:
        raise EmptyGroup(f"group sizes {total[0]} and {total[1]}")

    unpriv_rate = fav[0] / total[0]
    priv_rate = fav[1] / total[1]
    if priv_rate == 0.0:
        ratio = 1.0 if unpriv_rate == 0.0 else math.inf
    else:
        ratio = unpriv_rate / priv_rate
    lower, upper = _di_bounds(epsilon)
    return ratio, ratio < lower or ratio > upper


def audit(
    clf: AuditedClassifier,
    samples: Sequence[AuditSample],
    epsilon: float = DEFAULT_EPSILON,
) -> AuditReport:
    """Two-step test: per-sample individual bias, then the group metric.

    Step 1 computes b and b_s for every sample; step 2 always runs,
    averaging b into the summary statistic and computing disparate impact
    over the classifier's predictions at each sample's own d.
    """
    if not samples:
        raise EmptyGroup("no samples to audit")
    b: list[int] = []
    b_s: list[float] = []
    predictions: list[int] = []
    for sample in samples:
        bi, bsi = individual_bias(clf, sample.x)
        b.append(bi)
        b_s.append(bsi)
        predictions.append(clf.predict(sample.x, sample.d))
    ratio, flagged = disparate_impact(predictions, [s.d for s in samples], epsilon)
    return AuditReport(
        b=b,
        b_s=b_s,
        predictions=predictions,
        bias_summary=sum(b) / len(b),
        di_ratio=ratio,
        epsilon=epsilon,
        di_flag=flagged,
    )


def mitigate(
    clf: AuditedClassifier,
    samples: Sequence[AuditSample],
    report: AuditReport,
    epsilon: float = DEFAULT_EPSILON,
) -> tuple[list[int], list[tuple[int, int, int]]]:
    """Greedy label post-processing until disparate impact clears or stalls.

    Only individually biased samples (b = 1) are eligible. While the ratio
    sits below the lower bound, the eligible unprivileged sample with the
    largest |b_s| is promoted from unfavorable to favorable; while it sits
    above the upper bound, the same promotion is applied on the privileged
    side, raising its favorable rate back toward parity. Each flip is
    logged as (index, old, new); the loop may end still flagged when no
    eligible samples remain.
    """
    adjusted = list(report.predictions)
    flips: list[tuple[int, int, int]] = []
    d = [s.d for s in samples]
    lower, _ = _di_bounds(epsilon)

    while True:
        ratio, flagged = disparate_impact(adjusted, d, epsilon)
        if not flagged:
            break
        target_group = 0 if ratio < lower else 1
        candidates = [
            i for i in range(len(samples))
            if report.b[i] == 1 and d[i] == target_group and adjusted[i] == 0
        ]
        if not candidates:
            break
        pick = max(candidates, key=lambda i: (abs(report.b_s[i]), -i))
        flips.append((pick, adjusted[pick], 1))
        adjusted[pick] = 1
    return adjusted, flips


AUDIT_CSV_COLUMNS = ("index", "b", "b_s", "y_hat", "d")


def write_audit_csv(report: AuditReport, samples: Sequence[AuditSample], path) -> None:
    """Per-sample audit rows: index, b, b_s, y_hat, d."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(AUDIT_CSV_COLUMNS)
        for i, sample in enumerate(samples):
            writer.writerow([i, report.b[i], repr(report.b_s[i]),
                             report.predictions[i], sample.d])


def read_samples_csv(path) -> tuple[list[AuditSample], list[str]]:
    """Read a labeled audit dataset: feature columns, then d, then y."""
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or len(header) < 3 or header[-2:] != ["d", "y"]:
            raise ValueError(f"audit CSV must end with columns d,y: {path}")
        feature_names = header[:-2]
        samples = []
        for row in reader:
            if not row:
                continue
            values = [float(v) for v in row]
            samples.append(AuditSample(
                x=tuple(values[:-2]),
                d=int(values[-2]),
                y=int(values[-1]),
            ))
    return samples, feature_names
