"""Flow aggregation and feature scaling.

Compresses per-request records into per-(src, dst, time-bucket) flows and
turns them into min-max scaled feature vectors. The flow count doubles as
the responses-per-second rate used for likelihood scoring downstream.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import EmptyDataset, ScalerMismatch
from .ingest import LogRecord

FEATURE_COLUMNS = ("count", "mean_bytes", "error_ratio", "distinct_paths")

FLOWS_CSV_HEADER = "src_ip,dst_ip,bucket,count,mean_bytes,error_ratio,distinct_paths"


@dataclass(frozen=True, order=True)
class FlowKey:
    """Grouping key: source, destination, and time bucket."""

    src_ip: str
    dst_ip: str
    bucket: int


@dataclass(frozen=True)
class AggregatedFlow:
    """All records sharing one FlowKey, with derived features."""

    key: FlowKey
    count: int
    mean_bytes: float
    error_ratio: float
    distinct_paths: int

    def features(self) -> tuple[float, float, float, float]:
        """Raw feature vector in FEATURE_COLUMNS order."""
        return (float(self.count), self.mean_bytes, self.error_ratio, float(self.distinct_paths))


@dataclass(frozen=True)
class MinMaxScaler:
    """Per-column (min, max) pairs; a degenerate column scales to 0."""

    mins: np.ndarray
    maxs: np.ndarray

    @property
    def ranges(self) -> np.ndarray:
        spread = self.maxs - self.mins
        return np.where(spread > 0, spread, 1.0)

    @property
    def n_columns(self) -> int:
        return int(self.mins.shape[0])


@dataclass(frozen=True)
class FeatureMatrix:
    """Scaled feature rows (one per flow) plus the scaler that made them."""

    values: np.ndarray
    scaler: MinMaxScaler


def aggregate(records: Sequence[LogRecord], bucket_seconds: int | float = 1) -> list[AggregatedFlow]:
    """Group records into flows keyed by (src, dst, floor(ts / bucket_seconds)).

    Output is sorted lexicographically by key and conserves the record count:
    the flow counts always sum to ``len(records)``. ``bucket_seconds`` may be
    ``math.inf`` to collapse each (src, dst) pair into a single flow.
    """
    if not records:
        raise EmptyDataset("no records to aggregate")
    if not (bucket_seconds >= 1):
        raise ValueError(f"bucket_seconds must be >= 1, got {bucket_seconds}")

    groups: dict[FlowKey, list[LogRecord]] = {}
    for record in records:
        bucket = 0 if math.isinf(bucket_seconds) else record.timestamp // int(bucket_seconds)
        key = FlowKey(record.src_ip, record.dst_ip, int(bucket))
        groups.setdefault(key, []).append(record)

    flows = []
    for key in sorted(groups):
        members = groups[key]
        count = len(members)
        flows.append(AggregatedFlow(
            key=key,
            count=count,
            mean_bytes=sum(r.bytes for r in members) / count,
            error_ratio=sum(1 for r in members if r.status >= 400) / count,
            distinct_paths=len({r.path for r in members}),
        ))
    return flows


def feature_rows(flows: Sequence[AggregatedFlow]) -> np.ndarray:
    """Unscaled (n, 4) feature array in flow order."""
    return np.array([flow.features() for flow in flows], dtype=np.float64)


def fit_scaler(flows: Sequence[AggregatedFlow]) -> MinMaxScaler:
    """Fit per-column min-max bounds over the given flows."""
    if not flows:
        raise EmptyDataset("cannot fit a scaler on zero flows")
    raw = feature_rows(flows)
    return MinMaxScaler(mins=raw.min(axis=0), maxs=raw.max(axis=0))


def vectorize(flows: Sequence[AggregatedFlow], scaler: MinMaxScaler) -> FeatureMatrix:
    """Scale flows into [0, 1] with the fitted scaler, clamping out-of-range values."""
    raw = feature_rows(flows)
    if raw.shape[1] != scaler.n_columns:
        raise ScalerMismatch(
            f"{raw.shape[1]} feature columns vs scaler with {scaler.n_columns}"
        )
    scaled = np.clip((raw - scaler.mins) / scaler.ranges, 0.0, 1.0)
    return FeatureMatrix(values=scaled, scaler=scaler)


def write_flows_csv(flows: Iterable[AggregatedFlow], path) -> None:
    """Dump flows to CSV for inspection (schema in FLOWS_CSV_HEADER)."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(FLOWS_CSV_HEADER.split(","))
        for flow in flows:
            writer.writerow([
                flow.key.src_ip, flow.key.dst_ip, flow.key.bucket,
                flow.count, repr(flow.mean_bytes), repr(flow.error_ratio),
                flow.distinct_paths,
            ])
