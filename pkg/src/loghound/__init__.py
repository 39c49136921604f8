"""loghound: two-tier K-means threat analytics for web access logs.

Pipeline: parse access logs, compress them into per-second flows, cluster
with k=3 (not-suspicious / transitional / suspicious), train a supervised
classifier on the cluster labels, re-cluster the transitional flows with
k=2, and flag suspicious plus more-suspicious flows with a likelihood
score. A separate module audits any binary classifier for individual bias
and disparate impact, with greedy label-flip mitigation.
"""

from .aggregate import AggregatedFlow, FeatureMatrix, FlowKey, MinMaxScaler, aggregate
from .bias_audit import AuditReport, AuditSample, AuditedClassifier, audit, disparate_impact
from .errors import LoghoundError
from .ingest import IngestSummary, LogFormat, LogRecord, load_dataset, parse_line
from .kmeans import KMeansModel, TierLabel
from .pipeline import AnalysisConfig, AnalysisReport, SuspicionRecord, analyze, write_reports
from .synth import AttackWindow, GroundTruth, SynthConfig, generate

__version__ = "0.1.0"

__all__ = [
    "AggregatedFlow",
    "AnalysisConfig",
    "AnalysisReport",
    "AttackWindow",
    "AuditReport",
    "AuditSample",
    "AuditedClassifier",
    "FeatureMatrix",
    "FlowKey",
    "GroundTruth",
    "IngestSummary",
    "KMeansModel",
    "LogFormat",
    "LogRecord",
    "LoghoundError",
    "MinMaxScaler",
    "SuspicionRecord",
    "SynthConfig",
    "TierLabel",
    "aggregate",
    "analyze",
    "audit",
    "disparate_impact",
    "generate",
    "load_dataset",
    "parse_line",
    "write_reports",
    "__version__",
]
