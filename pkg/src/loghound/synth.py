"""Seeded synthetic access-log generator with injected attack bursts.

Benign sources emit Poisson traffic against a single login endpoint, with
occasional failed-login retry bursts (a user fat-fingers a password a few
times in one second); an attack window multiplies one source's rate and
mixes failed logins in. Every window second is exported as ground truth so
detection quality can be scored exactly. Each source draws from its own
PCG64 stream, so adding or removing one source never disturbs the others.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .aggregate import FlowKey
from .errors import InvalidConfig
from .ingest import LogRecord, is_ipv4

# Login pages serve fixed-size responses; sizes keyed by outcome.
BYTES_OK = 2048
BYTES_ERR = 512

GROUND_TRUTH_HEADER = "src_ip,dst_ip,bucket"


@dataclass(frozen=True)
class AttackWindow:
    """One burst: a source runs at multiplier x benign_rate for length_s seconds."""

    src_ip: str
    start_s: int
    length_s: int
    multiplier: float

    @property
    def end_s(self) -> int:
        return self.start_s + self.length_s


@dataclass(frozen=True)
class SynthConfig:
    duration_s: int
    benign_sources: int
    benign_rate: float
    attack_windows: tuple[AttackWindow, ...] = ()
    seed: int = 0
    dst_ip: str = "10.0.0.1"
    retry_burst_rate: float = 0.01
    attack_error_rate: float = 0.5
    paths: tuple[str, ...] = ("/login",)

    def __post_init__(self) -> None:
        object.__setattr__(self, "attack_windows", tuple(self.attack_windows))
        object.__setattr__(self, "paths", tuple(self.paths))
        validate_config(self)


def validate_config(config: SynthConfig) -> None:
    if config.duration_s < 1:
        raise InvalidConfig(f"duration_s must be >= 1, got {config.duration_s}")
    if config.benign_sources < 0:
        raise InvalidConfig(f"benign_sources must be >= 0, got {config.benign_sources}")
    if not (config.benign_rate >= 0.0 and np.isfinite(config.benign_rate)):
        raise InvalidConfig(f"benign_rate must be finite and >= 0, got {config.benign_rate}")
    if not config.paths:
        raise InvalidConfig("paths must not be empty")
    if not is_ipv4(config.dst_ip):
        raise InvalidConfig(f"dst_ip {config.dst_ip!r} is not IPv4")
    for rate in (config.retry_burst_rate, config.attack_error_rate):
        if not 0.0 <= rate <= 1.0:
            raise InvalidConfig(f"rate {rate} outside [0, 1]")
    per_src: dict[str, list[AttackWindow]] = {}
    for window in config.attack_windows:
        if not is_ipv4(window.src_ip):
            raise InvalidConfig(f"window src_ip {window.src_ip!r} is not IPv4")
        if window.multiplier < 2:
            raise InvalidConfig(f"multiplier must be >= 2, got {window.multiplier}")
        if window.length_s < 1:
            raise InvalidConfig(f"window length must be >= 1, got {window.length_s}")
        if window.start_s < 0 or window.end_s > config.duration_s:
            raise InvalidConfig(
                f"window [{window.start_s}, {window.end_s}) outside [0, {config.duration_s})"
            )
        for other in per_src.get(window.src_ip, []):
            if window.start_s < other.end_s and other.start_s < window.end_s:
                raise InvalidConfig(f"overlapping windows for {window.src_ip}")
        per_src.setdefault(window.src_ip, []).append(window)


def benign_source_ips(count: int) -> list[str]:
    """Deterministic 10.0.x.y addresses for the benign sources."""
    return [f"10.0.{i // 250}.{i % 250 + 1}" for i in range(count)]


@dataclass
class GroundTruth:
    """Flow keys that fall inside attack windows (bucket_seconds = 1)."""

    keys: set[FlowKey] = field(default_factory=set)

    def __contains__(self, key: FlowKey) -> bool:
        return key in self.keys

    def __len__(self) -> int:
        return len(self.keys)


def generate(config: SynthConfig) -> tuple[list[LogRecord], GroundTruth]:
    """Produce records sorted by timestamp plus the attack-window ground truth."""
    validate_config(config)

    benign = benign_source_ips(config.benign_sources)
    sources = list(benign)
    for window in config.attack_windows:
        if window.src_ip not in sources:
            sources.append(window.src_ip)
    benign_set = set(benign)

    windows_by_src: dict[str, list[AttackWindow]] = {}
    for window in config.attack_windows:
        windows_by_src.setdefault(window.src_ip, []).append(window)

    records: list[LogRecord] = []
    truth = GroundTruth()
    for window in config.attack_windows:
        for second in range(window.start_s, window.end_s):
            truth.keys.add(FlowKey(window.src_ip, config.dst_ip, second))

    duration = config.duration_s
    for idx, src in enumerate(sources):
        rng = np.random.default_rng([config.seed, idx])
        is_benign = src in benign_set
        rates = np.full(duration, config.benign_rate if is_benign else 0.0)
        in_window = np.zeros(duration, dtype=bool)
        for window in windows_by_src.get(src, []):
            rates[window.start_s:window.end_s] = window.multiplier * config.benign_rate
            in_window[window.start_s:window.end_s] = True
        counts = rng.poisson(rates)
        # Retry bursts ride on top of benign traffic, never inside a window.
        if is_benign and config.benign_rate > 0 and config.retry_burst_rate > 0:
            burst_here = (rng.random(duration) < config.retry_burst_rate) & ~in_window
            burst_sizes = rng.integers(3, 7, size=duration)
        else:
            burst_here = np.zeros(duration, dtype=bool)
            burst_sizes = np.zeros(duration, dtype=np.int64)

        for second in np.nonzero((counts > 0) | burst_here)[0]:
            n = int(counts[second])
            if in_window[second]:
                failed = rng.random(n) < config.attack_error_rate
            else:
                failed = np.zeros(n, dtype=bool)
                if burst_here[second]:
                    failed = np.concatenate(
                        [failed, np.ones(int(burst_sizes[second]), dtype=bool)])
                    n += int(burst_sizes[second])
            if len(config.paths) > 1:
                path_idx = rng.integers(0, len(config.paths), size=n)
            else:
                path_idx = np.zeros(n, dtype=np.intp)
            for i in range(n):
                # Failed logins always hit the login endpoint.
                path = "/login" if failed[i] else config.paths[int(path_idx[i])]
                records.append(LogRecord(
                    timestamp=int(second),
                    src_ip=src,
                    dst_ip=config.dst_ip,
                    method="POST" if path == "/login" else "GET",
                    path=path,
                    status=401 if failed[i] else 200,
                    bytes=BYTES_ERR if failed[i] else BYTES_OK,
                ))

    records.sort(key=lambda r: (r.timestamp, r.src_ip))
    return records, truth


def write_ground_truth_csv(truth: GroundTruth, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(GROUND_TRUTH_HEADER.split(","))
        for key in sorted(truth.keys):
            writer.writerow([key.src_ip, key.dst_ip, key.bucket])


def read_ground_truth_csv(path) -> GroundTruth:
    truth = GroundTruth()
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != GROUND_TRUTH_HEADER.split(","):
            raise ValueError(f"bad ground truth header in {path}")
        for src, dst, bucket in reader:
            truth.keys.add(FlowKey(src, dst, int(bucket)))
    return truth
