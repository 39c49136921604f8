"""Command-line front end.

Subcommands: ``gen`` (synthetic logs), ``analyze`` (two-tier pipeline),
``audit`` (fairness audit of a labeled CSV), ``inspect`` (ingest and flow
statistics). Configuration precedence is flags, then a key=value config
file, then the LOGHOUND_SEED environment variable (seed only), then the
built-in defaults. Exit codes: 0 success, 1 usage error, 2 data error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import bias_audit, classifier, pipeline, synth
from .aggregate import aggregate
from .errors import LoghoundError
from .ingest import DEFAULT_DST_IP, LogRecord, load_dataset, write_csv
from .pipeline import AnalysisConfig

SEED_ENV_VAR = "LOGHOUND_SEED"

_SVG_COLORS = {
    "not_suspicious": "#4daf4a",
    "transitional": "#ff7f00",
    "suspicious": "#e41a1c",
    "less_suspicious": "#377eb8",
    "more_suspicious": "#984ea3",
}


@dataclass(frozen=True)
class RunConfig:
    """Effective configuration of an analyze run after precedence resolution."""

    inputs: tuple[str, ...]
    format: str
    bucket_seconds: int
    k1: int
    k2: int
    split_ratio: float
    seed: int
    epsilon: float
    out_dir: str
    learning_rate: float
    epochs: int
    l2: float

    def __post_init__(self) -> None:
        if not 0.0 < self.split_ratio < 1.0:
            raise ValueError(f"split ratio must be in (0, 1), got {self.split_ratio}")


class _Parser(argparse.ArgumentParser):
    """argparse variant that exits 1 on usage errors (argparse default is 2)."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _read_config_file(path: str | None) -> dict[str, str]:
    if path is None:
        return {}
    config: dict[str, str] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for raw in fh:
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise LoghoundError(f"bad config line (expected key=value): {line!r}")
            key, value = line.split("=", 1)
            config[key.strip()] = value.strip()
    return config


def _resolve(flag_value, file_config: dict[str, str], key: str, default, cast):
    if flag_value is not None:
        return flag_value
    if key in file_config:
        return cast(file_config[key])
    return default


def _resolve_seed(flag_value, file_config: dict[str, str]) -> int:
    if flag_value is not None:
        return flag_value
    if "seed" in file_config:
        return int(file_config["seed"])
    env = os.environ.get(SEED_ENV_VAR)
    if env is not None:
        return int(env)
    return 0


def _load_inputs(paths, fmt: str, dst_ip: str) -> tuple[list[LogRecord], list]:
    records: list[LogRecord] = []
    summaries = []
    for path in paths:
        recs, summary = load_dataset(path, fmt, dst_ip=dst_ip)
        records.extend(recs)
        summaries.append(summary)
    return records, summaries


def write_clusters_svg(report: pipeline.AnalysisReport, path, size: int = 480) -> None:
    """Static scatter of the 2-D projection, colored by tier label."""
    margin = 40
    span = size - 2 * margin
    lines = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}">',
        f'<rect x="{margin}" y="{margin}" width="{span}" height="{span}" '
        'fill="white" stroke="black"/>',
    ]
    for i, record in enumerate(report.records):
        x, y = report.projection_xy[i]
        label = (record.tier2 or record.tier1).value
        px = margin + float(x) * span
        py = size - margin - float(y) * span
        lines.append(
            f'<circle cx="{px:.2f}" cy="{py:.2f}" r="3" fill="{_SVG_COLORS[label]}" '
            'fill-opacity="0.7"/>'
        )
    for i, (label, color) in enumerate(_SVG_COLORS.items()):
        ly = 14 + 14 * i
        lines.append(f'<circle cx="{margin + 6}" cy="{ly}" r="4" fill="{color}"/>')
        lines.append(
            f'<text x="{margin + 14}" y="{ly + 4}" font-size="11" '
            f'font-family="sans-serif">{label}</text>'
        )
    lines.append("</svg>")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def _parse_attack(spec_text: str) -> synth.AttackWindow:
    parts = spec_text.split(":")
    if len(parts) != 4:
        raise LoghoundError(f"attack spec must be src:start:length:multiplier, got {spec_text!r}")
    return synth.AttackWindow(
        src_ip=parts[0], start_s=int(parts[1]),
        length_s=int(parts[2]), multiplier=float(parts[3]),
    )


def _cmd_gen(args) -> int:
    file_config = _read_config_file(args.config)
    seed = _resolve_seed(args.seed, file_config)
    out_dir = Path(_resolve(args.out, file_config, "out", "out", str))
    config = synth.SynthConfig(
        duration_s=_resolve(args.duration, file_config, "duration", 600, int),
        benign_sources=_resolve(args.sources, file_config, "sources", 10, int),
        benign_rate=_resolve(args.rate, file_config, "rate", 2.0, float),
        attack_windows=tuple(_parse_attack(a) for a in (args.attack or [])),
        seed=seed,
        dst_ip=_resolve(args.dst_ip, file_config, "dst_ip", "10.0.0.1", str),
        retry_burst_rate=_resolve(args.retry_burst_rate, file_config,
                                  "retry_burst_rate", 0.01, float),
        attack_error_rate=_resolve(args.attack_error_rate, file_config,
                                   "attack_error_rate", 0.5, float),
    )
    records, truth = synth.generate(config)
    out_dir.mkdir(parents=True, exist_ok=True)
    log_path = out_dir / "access_log.csv"
    truth_path = out_dir / "ground_truth.csv"
    write_csv(records, log_path)
    synth.write_ground_truth_csv(truth, truth_path)
    print(f"wrote {len(records)} records to {log_path}")
    print(f"wrote {len(truth)} ground-truth keys to {truth_path}")
    return 0


def _cmd_analyze(args) -> int:
    file_config = _read_config_file(args.config)
    run = RunConfig(
        inputs=tuple(args.input),
        format=_resolve(args.format, file_config, "format", "csv", str),
        bucket_seconds=_resolve(args.bucket_seconds, file_config, "bucket_seconds", 1, int),
        k1=_resolve(None, file_config, "k1", 3, int),
        k2=_resolve(None, file_config, "k2", 2, int),
        split_ratio=_resolve(None, file_config, "split_ratio",
                             classifier.DEFAULT_SPLIT_RATIO, float),
        seed=_resolve_seed(args.seed, file_config),
        epsilon=_resolve(args.epsilon, file_config, "epsilon", bias_audit.DEFAULT_EPSILON, float),
        out_dir=_resolve(args.out, file_config, "out", "out", str),
        learning_rate=_resolve(None, file_config, "learning_rate",
                               classifier.DEFAULT_LEARNING_RATE, float),
        epochs=_resolve(None, file_config, "epochs", classifier.DEFAULT_EPOCHS, int),
        l2=_resolve(None, file_config, "l2", classifier.DEFAULT_L2, float),
    )
    dst_ip = _resolve(args.dst_ip, file_config, "dst_ip", DEFAULT_DST_IP, str)
    records, _ = _load_inputs(run.inputs, run.format, dst_ip)
    config = AnalysisConfig(
        bucket_seconds=run.bucket_seconds, k1=run.k1, k2=run.k2,
        split_ratio=run.split_ratio, seed=run.seed,
        learning_rate=run.learning_rate, epochs=run.epochs, l2=run.l2,
    )
    report = pipeline.analyze(records, config)
    paths = pipeline.write_reports(report, run.out_dir)
    if args.svg:
        svg_path = Path(run.out_dir) / "clusters.svg"
        write_clusters_svg(report, svg_path)
        paths.append(svg_path)
    flagged = sum(1 for r in report.records if r.flagged)
    print(f"flows analyzed: {len(report.records)}")
    for label, count in report.summary.items():
        print(f"  tier1 {label}: {count}")
    print(f"flagged: {flagged}")
    print(f"max responses/bucket: {report.max_rate}")
    print(f"holdout accuracy vs cluster labels: {report.holdout_accuracy:.4f}")
    for note in report.notes:
        print(f"note: {note}")
    for path in paths:
        print(f"wrote {path}")
    return 0


def _cmd_audit(args) -> int:
    file_config = _read_config_file(args.config)
    seed = _resolve_seed(args.seed, file_config)
    epsilon = _resolve(args.epsilon, file_config, "epsilon", bias_audit.DEFAULT_EPSILON, float)
    threshold = _resolve(None, file_config, "threshold", bias_audit.DEFAULT_THRESHOLD, float)
    out_dir = Path(_resolve(args.out, file_config, "out", "out", str))

    samples, _ = bias_audit.read_samples_csv(args.input)
    labels = [s.y for s in samples]
    if len(set(labels)) < 2:
        raise LoghoundError("audit dataset needs both label values present")
    X = np.array([list(s.x) + [float(s.d)] for s in samples], dtype=np.float64)
    model = classifier.train(X, labels, seed=seed)
    favorable_idx = model.classes.index(1)

    def score_fn(x: np.ndarray, d: int) -> float:
        row = np.concatenate([x, [float(d)]])
        _, scores = classifier.predict(model, row)
        return float(scores[favorable_idx])

    clf = bias_audit.AuditedClassifier(score_fn=score_fn, threshold=threshold)
    report = bias_audit.audit(clf, samples, epsilon)

    summary = {
        "bias_summary": report.bias_summary,
        "di_ratio": report.di_ratio,
        "epsilon": report.epsilon,
        "di_flag": report.di_flag,
        "flips": [],
    }
    if args.mitigate:
        adjusted, flips = bias_audit.mitigate(clf, samples, report, epsilon)
        report.mitigation_flips = flips
        summary["flips"] = [list(f) for f in flips]
        post_ratio, post_flag = bias_audit.disparate_impact(
            adjusted, [s.d for s in samples], epsilon)
        summary["mitigated_di_ratio"] = post_ratio
        summary["mitigated_di_flag"] = post_flag

    out_dir.mkdir(parents=True, exist_ok=True)
    report_path = out_dir / "audit_report.csv"
    summary_path = out_dir / "audit_summary.json"
    bias_audit.write_audit_csv(report, samples, report_path)
    summary_path.write_text(json.dumps(summary, sort_keys=True, indent=2) + "\n",
                            encoding="utf-8")
    print(f"samples audited: {len(samples)}")
    print(f"bias_summary: {report.bias_summary!r}")
    print(f"di_ratio: {report.di_ratio!r} (flag: {report.di_flag})")
    if args.mitigate:
        print(f"mitigation flips: {len(summary['flips'])}")
        print(f"mitigated di_ratio: {summary['mitigated_di_ratio']!r} "
              f"(flag: {summary['mitigated_di_flag']})")
    print(f"wrote {report_path}")
    print(f"wrote {summary_path}")
    return 0


def _cmd_inspect(args) -> int:
    file_config = _read_config_file(args.config)
    fmt = _resolve(args.format, file_config, "format", "csv", str)
    dst_ip = _resolve(args.dst_ip, file_config, "dst_ip", DEFAULT_DST_IP, str)
    bucket_seconds = _resolve(args.bucket_seconds, file_config, "bucket_seconds", 1, int)
    records, summaries = _load_inputs(args.input, fmt, dst_ip)
    total = sum(s.total_lines for s in summaries)
    parsed = sum(s.parsed for s in summaries)
    malformed = sum(s.dropped_malformed for s in summaries)
    filtered = sum(s.dropped_by_filter for s in summaries)
    print(f"lines: {total} parsed: {parsed} "
          f"dropped_malformed: {malformed} dropped_by_filter: {filtered}")
    flows = aggregate(records, bucket_seconds)
    counts = [f.count for f in flows]
    print(f"flows ({bucket_seconds}s buckets): {len(flows)}")
    print(f"responses/bucket: min {min(counts)} max {max(counts)} "
          f"mean {sum(counts) / len(counts):.3f}")
    print(f"distinct sources: {len({f.key.src_ip for f in flows})}")
    return 0


def build_parser() -> _Parser:
    parser = _Parser(prog="loghound", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="PRNG seed")
    common.add_argument("--config", default=None, help="key=value config file")

    gen = sub.add_parser("gen", parents=[common], help="generate synthetic logs")
    gen.add_argument("--duration", type=int, default=None, help="seconds to simulate")
    gen.add_argument("--sources", type=int, default=None, help="benign source count")
    gen.add_argument("--rate", type=float, default=None, help="benign requests/s per source")
    gen.add_argument("--retry-burst-rate", type=float, default=None,
                     help="per-second chance of a benign failed-login retry burst")
    gen.add_argument("--attack-error-rate", type=float, default=None)
    gen.add_argument("--attack", action="append", default=None,
                     metavar="SRC:START:LENGTH:MULT", help="attack window (repeatable)")
    gen.add_argument("--dst-ip", default=None)
    gen.add_argument("--out", default=None, help="output directory")
    gen.set_defaults(func=_cmd_gen)

    analyze = sub.add_parser("analyze", parents=[common], help="run the detection pipeline")
    analyze.add_argument("--input", nargs="+", required=True, help="log file(s)")
    analyze.add_argument("--format", choices=["clf", "csv"], default=None)
    analyze.add_argument("--dst-ip", default=None, help="destination IP for CLF input")
    analyze.add_argument("--bucket-seconds", type=int, default=None)
    analyze.add_argument("--epsilon", type=float, default=None)
    analyze.add_argument("--out", default=None, help="output directory")
    analyze.add_argument("--svg", action="store_true", help="also write clusters.svg")
    analyze.set_defaults(func=_cmd_analyze)

    audit = sub.add_parser("audit", parents=[common], help="fairness-audit a labeled CSV")
    audit.add_argument("--input", required=True, help="CSV with feature columns then d,y")
    audit.add_argument("--epsilon", type=float, default=None)
    audit.add_argument("--mitigate", action="store_true", help="apply label post-processing")
    audit.add_argument("--out", default=None, help="output directory")
    audit.set_defaults(func=_cmd_audit)

    inspect = sub.add_parser("inspect", parents=[common], help="print ingest and flow stats")
    inspect.add_argument("--input", nargs="+", required=True)
    inspect.add_argument("--format", choices=["clf", "csv"], default=None)
    inspect.add_argument("--dst-ip", default=None)
    inspect.add_argument("--bucket-seconds", type=int, default=None)
    inspect.set_defaults(func=_cmd_inspect)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (LoghoundError, OSError) as exc:
        print(f"loghound: {exc.__class__.__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
