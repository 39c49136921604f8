"""End-to-end analysis pipeline.

Stage order: aggregate records into flows, scale, cluster with k=3 and
label the clusters not-suspicious / transitional / suspicious, train the
supervised classifier on those labels with a 0.66/0.33 split, re-cluster
the transitional flows with k=2, then flag suspicious plus more-suspicious
and score each flagged flow's likelihood against the maximum rate seen.

Flagging authority stays with the cluster labels; the classifier's verdict
is recorded per flow so disagreement is visible in the report.
"""

from __future__ import annotations

import csv
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from . import classifier, kmeans
from .aggregate import AggregatedFlow, FlowKey, aggregate, fit_scaler, vectorize
from .errors import DegenerateLabels, ZeroMaxRate
from .ingest import LogRecord
from .kmeans import TierLabel

RESULT_COLUMNS = (
    "src_ip", "dst_ip", "bucket", "count",
    "tier1", "tier2", "classifier_label", "flagged", "likelihood_pct",
)

CLUSTERS_COLUMNS = ("x", "y", "tier_label")


@dataclass(frozen=True)
class AnalysisConfig:
    """Tunables for one pipeline run; defaults mirror the method's choices."""

    bucket_seconds: int = 1
    k1: int = 3
    k2: int = 2
    split_ratio: float = classifier.DEFAULT_SPLIT_RATIO
    seed: int = 0
    max_iter: int = 300
    tol: float = 1e-6
    restarts: int = 10
    learning_rate: float = classifier.DEFAULT_LEARNING_RATE
    epochs: int = classifier.DEFAULT_EPOCHS
    l2: float = classifier.DEFAULT_L2


@dataclass(frozen=True)
class SuspicionRecord:
    """Per-flow verdict; tier2 is present only for transitional flows."""

    key: FlowKey
    count: int
    tier1: TierLabel
    tier2: TierLabel | None
    classifier_label: TierLabel
    flagged: bool
    likelihood_pct: float | None


@dataclass
class AnalysisReport:
    """Everything a run produced, ready for serialization."""

    records: list[SuspicionRecord]
    max_rate: int
    holdout_accuracy: float
    config_echo: dict
    summary: dict[str, int]
    notes: list[str] = field(default_factory=list)
    projection_xy: np.ndarray = None
    tier1_k: int = 3
    tier2_k: int | None = None
    train_size: int = 0
    test_size: int = 0


def score_likelihood(count: int, max_rate: int) -> float:
    """Percentage of the dataset's maximum responses per second: 100 * count / max_rate."""
    if max_rate < 1:
        raise ZeroMaxRate(f"max_rate must be >= 1, got {max_rate}")
    if not 0 <= count <= max_rate:
        raise ValueError(f"count {count} outside [0, {max_rate}]")
    return 100.0 * count / max_rate


def analyze(records: Sequence[LogRecord], config: AnalysisConfig = AnalysisConfig()) -> AnalysisReport:
    """Run the full two-tier pipeline over parsed records.

    Deterministic under ``config.seed``. Tier 2 is skipped (and noted) when
    fewer than two flows are transitional; that is not an error.
    """
    notes: list[str] = []
    flows = aggregate(records, config.bucket_seconds)
    scaler = fit_scaler(flows)
    matrix = vectorize(flows, scaler)
    X = matrix.values
    n = len(flows)

    tier1_model, tier1_assign = kmeans.fit(
        X, config.k1, seed=config.seed, max_iter=config.max_iter,
        tol=config.tol, restarts=config.restarts,
    )
    tier1_map = kmeans.tier_labels(tier1_model, count_column_index=0)
    tier1 = [tier1_map[int(c)] for c in tier1_assign]

    split = classifier.split(n, config.seed, config.split_ratio)
    train_labels = [tier1[i] for i in split.train]
    try:
        clf = classifier.train(
            X[split.train], train_labels,
            learning_rate=config.learning_rate, epochs=config.epochs,
            l2=config.l2, seed=config.seed,
        )
        probs = classifier.predict_proba(clf, X)
        predicted = [clf.classes[i] for i in np.argmax(probs, axis=1)]
        test_labels = [tier1[i] for i in split.test]
        holdout_accuracy = classifier.accuracy(clf, X[split.test], test_labels)
    except DegenerateLabels:
        # All training flows share one cluster; nothing to learn, echo tier 1.
        predicted = list(tier1)
        holdout_accuracy = 1.0
        notes.append("classifier skipped: training split has a single cluster label")

    transitional = [i for i in range(n) if tier1[i] is TierLabel.TRANSITIONAL]
    tier2: list[TierLabel | None] = [None] * n
    tier2_k = None
    if len(transitional) >= 2:
        sub_flows = [flows[i] for i in transitional]
        sub_matrix = vectorize(sub_flows, fit_scaler(sub_flows))
        tier2_model, tier2_assign = kmeans.fit(
            sub_matrix.values, config.k2, seed=config.seed,
            max_iter=config.max_iter, tol=config.tol, restarts=config.restarts,
        )
        tier2_map = kmeans.tier_labels(tier2_model, count_column_index=0)
        for local, i in enumerate(transitional):
            tier2[i] = tier2_map[int(tier2_assign[local])]
        tier2_k = config.k2
    else:
        notes.append(
            f"tier 2 skipped: {len(transitional)} transitional flow(s), need >= 2"
        )

    max_rate = max(flow.count for flow in flows)
    out: list[SuspicionRecord] = []
    for i, flow in enumerate(flows):
        flagged = tier1[i] is TierLabel.SUSPICIOUS or tier2[i] is TierLabel.MORE_SUSPICIOUS
        out.append(SuspicionRecord(
            key=flow.key,
            count=flow.count,
            tier1=tier1[i],
            tier2=tier2[i],
            classifier_label=predicted[i],
            flagged=flagged,
            likelihood_pct=score_likelihood(flow.count, max_rate) if flagged else None,
        ))

    summary: dict[str, int] = {label.value: 0 for label in kmeans.TIER1_LABELS}
    for record in out:
        summary[record.tier1.value] += 1

    _check_invariants(out, max_rate, summary)
    return AnalysisReport(
        records=out,
        max_rate=max_rate,
        holdout_accuracy=holdout_accuracy,
        config_echo=asdict(config),
        summary=summary,
        notes=notes,
        projection_xy=X[:, :2].copy(),
        tier1_k=config.k1,
        tier2_k=tier2_k,
        train_size=len(split.train),
        test_size=len(split.test),
    )


def _check_invariants(records: list[SuspicionRecord], max_rate: int, summary: dict[str, int]) -> None:
    # Flag closure and likelihood bounds are enforced on every run.
    for r in records:
        expected = r.tier1 is TierLabel.SUSPICIOUS or r.tier2 is TierLabel.MORE_SUSPICIOUS
        assert r.flagged == expected, f"flag closure violated for {r.key}"
        assert (r.likelihood_pct is not None) == r.flagged, f"likelihood presence for {r.key}"
        if r.likelihood_pct is not None:
            assert 0.0 <= r.likelihood_pct <= 100.0
        assert r.tier2 is None or r.tier1 is TierLabel.TRANSITIONAL
    assert max_rate == max(r.count for r in records)
    assert sum(summary.values()) == len(records)


def _format_record(r: SuspicionRecord) -> list[str]:
    return [
        r.key.src_ip, r.key.dst_ip, str(r.key.bucket), str(r.count),
        r.tier1.value,
        r.tier2.value if r.tier2 is not None else "",
        r.classifier_label.value,
        "true" if r.flagged else "false",
        repr(r.likelihood_pct) if r.likelihood_pct is not None else "",
    ]


def write_reports(report: AnalysisReport, out_dir) -> list[Path]:
    """Write result.csv, suspicious_activity.csv and clusters.csv; return paths."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    result_path = out_dir / "result.csv"
    with open(result_path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(RESULT_COLUMNS)
        for record in report.records:
            writer.writerow(_format_record(record))

    flagged = [r for r in report.records if r.flagged]
    flagged.sort(key=lambda r: (-r.likelihood_pct, r.key))
    suspicious_path = out_dir / "suspicious_activity.csv"
    with open(suspicious_path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(RESULT_COLUMNS)
        for record in flagged:
            writer.writerow(_format_record(record))

    clusters_path = out_dir / "clusters.csv"
    with open(clusters_path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CLUSTERS_COLUMNS)
        for i, record in enumerate(report.records):
            label = record.tier2 if record.tier2 is not None else record.tier1
            x, y = report.projection_xy[i]
            writer.writerow([repr(float(x)), repr(float(y)), label.value])

    return [result_path, suspicious_path, clusters_path]


def read_result_csv(path) -> list[SuspicionRecord]:
    """Re-read a result.csv (or suspicious_activity.csv) exactly."""
    out: list[SuspicionRecord] = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if tuple(header or ()) != RESULT_COLUMNS:
            raise ValueError(f"bad result header in {path}")
        for row in reader:
            src, dst, bucket, count, tier1, tier2, clf_label, flagged, likelihood = row
            out.append(SuspicionRecord(
                key=FlowKey(src, dst, int(bucket)),
                count=int(count),
                tier1=TierLabel(tier1),
                tier2=TierLabel(tier2) if tier2 else None,
                classifier_label=TierLabel(clf_label),
                flagged=flagged == "true",
                likelihood_pct=float(likelihood) if likelihood else None,
            ))
    return out
