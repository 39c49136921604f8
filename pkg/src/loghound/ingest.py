"""Access-log ingestion.

Parses Common Log Format lines and the internal CSV schema into validated
``LogRecord`` objects, dropping fields that carry no signal for rate-based
detection (identd, authuser, referrer, user agent) and counting every line
that could not be kept.
"""

from __future__ import annotations

import csv
import io
import re
from dataclasses import dataclass
from datetime import datetime, timedelta, timezone
from enum import Enum
from typing import Callable, Iterable, Mapping, Sequence

from .errors import EmptyDataset, InvalidStatus, MalformedLine

CSV_COLUMNS = ("timestamp", "src_ip", "dst_ip", "method", "path", "status", "bytes")
CSV_HEADER = ",".join(CSV_COLUMNS)

DEFAULT_DST_IP = "0.0.0.0"

_MONTHS = {
    "Jan": 1, "Feb": 2, "Mar": 3, "Apr": 4, "May": 5, "Jun": 6,
    "Jul": 7, "Aug": 8, "Sep": 9, "Oct": 10, "Nov": 11, "Dec": 12,
}

# host identd authuser [timestamp] "request" status bytes [trailing fields ignored]
_CLF_RE = re.compile(
    r'^(?P<src>\S+) (?P<identd>\S+) (?P<authuser>\S+) \[(?P<ts>[^\]]+)\] '
    r'"(?P<request>[^"]*)" (?P<status>\S+) (?P<bytes>\S+)(?:\s|$)'
)

_TS_RE = re.compile(
    r"^(\d{2})/([A-Za-z]{3})/(\d{4}):(\d{2}):(\d{2}):(\d{2}) ([+-])(\d{2})(\d{2})$"
)

_IPV4_RE = re.compile(r"^(\d{1,3})\.(\d{1,3})\.(\d{1,3})\.(\d{1,3})$")


class LogFormat(str, Enum):
    """Supported raw input formats."""

    CLF = "clf"
    CSV = "csv"


def is_ipv4(text: str) -> bool:
    """True when ``text`` is a dotted quad with all octets in 0..255."""
    m = _IPV4_RE.match(text)
    return bool(m) and all(0 <= int(octet) <= 255 for octet in m.groups())


@dataclass(frozen=True)
class LogRecord:
    """One parsed access-log line.

    ``timestamp`` is whole seconds since the Unix epoch (UTC); sub-second
    precision in the source is truncated. ``bytes`` is 0 when the log wrote
    the size as "-".
    """

    timestamp: int
    src_ip: str
    dst_ip: str
    method: str
    path: str
    status: int
    bytes: int

    def __post_init__(self) -> None:
        if not 100 <= self.status <= 599:
            raise InvalidStatus(f"status {self.status} outside 100..599")
        if self.timestamp < 0:
            raise MalformedLine(f"negative timestamp {self.timestamp}")
        if self.bytes < 0:
            raise MalformedLine(f"negative byte count {self.bytes}")
        if not is_ipv4(self.src_ip):
            raise MalformedLine(f"bad src_ip {self.src_ip!r}")
        if not is_ipv4(self.dst_ip):
            raise MalformedLine(f"bad dst_ip {self.dst_ip!r}")


@dataclass(frozen=True)
class IngestSummary:
    """Accounting of where every input line went."""

    total_lines: int
    parsed: int
    dropped_malformed: int
    dropped_by_filter: int

    def __post_init__(self) -> None:
        if self.total_lines != self.parsed + self.dropped_malformed + self.dropped_by_filter:
            raise ValueError("ingest summary does not balance")


def _parse_clf_timestamp(text: str) -> int:
    m = _TS_RE.match(text)
    if m is None:
        raise MalformedLine(f"unparseable timestamp {text!r}")
    day, mon, year, hh, mm, ss, sign, off_h, off_m = m.groups()
    month = _MONTHS.get(mon)
    if month is None:
        raise MalformedLine(f"unknown month {mon!r}")
    offset = timedelta(hours=int(off_h), minutes=int(off_m))
    if sign == "-":
        offset = -offset
    try:
        dt = datetime(int(year), month, int(day), int(hh), int(mm), int(ss),
                      tzinfo=timezone(offset))
    except ValueError as exc:
        raise MalformedLine(f"invalid date in {text!r}") from exc
    return int(dt.timestamp())


def _parse_status(text: str) -> int:
    try:
        status = int(text)
    except ValueError as exc:
        raise MalformedLine(f"non-numeric status {text!r}") from exc
    if not 100 <= status <= 599:
        raise InvalidStatus(f"status {status} outside 100..599")
    return status


def _parse_bytes(text: str) -> int:
    if text == "-":
        return 0
    try:
        size = int(text)
    except ValueError as exc:
        raise MalformedLine(f"non-numeric byte count {text!r}") from exc
    if size < 0:
        raise MalformedLine(f"negative byte count {size}")
    return size


def _parse_clf_line(line: str, dst_ip: str) -> LogRecord:
    m = _CLF_RE.match(line)
    if m is None:
        raise MalformedLine(f"not a CLF line: {line[:80]!r}")
    request = m.group("request").split()
    if len(request) < 2:
        raise MalformedLine(f"bad request field {m.group('request')!r}")
    return LogRecord(
        timestamp=_parse_clf_timestamp(m.group("ts")),
        src_ip=m.group("src"),
        dst_ip=dst_ip,
        method=request[0],
        path=request[1],
        status=_parse_status(m.group("status")),
        bytes=_parse_bytes(m.group("bytes")),
    )


def _parse_csv_line(line: str) -> LogRecord:
    fields = next(csv.reader(io.StringIO(line)))
    if len(fields) != len(CSV_COLUMNS):
        raise MalformedLine(f"expected {len(CSV_COLUMNS)} fields, got {len(fields)}")
    ts_text, src, dst, method, path, status_text, bytes_text = fields
    try:
        timestamp = int(float(ts_text)) if "." in ts_text else int(ts_text)
    except ValueError as exc:
        raise MalformedLine(f"unparseable timestamp {ts_text!r}") from exc
    return LogRecord(
        timestamp=timestamp,
        src_ip=src,
        dst_ip=dst,
        method=method,
        path=path,
        status=_parse_status(status_text),
        bytes=_parse_bytes(bytes_text),
    )


def parse_line(line: str, format: LogFormat | str, dst_ip: str = DEFAULT_DST_IP) -> LogRecord:
    """Parse one log line.

    ``dst_ip`` supplies the destination address for CLF input, which does not
    carry one; CSV input has its own dst_ip column. Raises ``MalformedLine``
    or ``InvalidStatus`` on bad input.
    """
    fmt = LogFormat(format)
    line = line.rstrip("\r\n")
    if fmt is LogFormat.CLF:
        return _parse_clf_line(line, dst_ip)
    return _parse_csv_line(line)


def to_csv_row(record: LogRecord) -> str:
    """Serialize a record to one internal-schema CSV line (no newline)."""
    out = io.StringIO()
    csv.writer(out, lineterminator="").writerow([
        record.timestamp, record.src_ip, record.dst_ip,
        record.method, record.path, record.status, record.bytes,
    ])
    return out.getvalue()


def write_csv(records: Iterable[LogRecord], path) -> None:
    """Write records in the internal CSV schema, header first."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(CSV_HEADER + "\n")
        for record in records:
            fh.write(to_csv_row(record) + "\n")


FieldFilters = Mapping[str, Callable[[object], bool]]


def load_dataset(
    path,
    format: LogFormat | str,
    filters: FieldFilters | None = None,
    dst_ip: str = DEFAULT_DST_IP,
) -> tuple[list[LogRecord], IngestSummary]:
    """Load a log file, returning records in file order plus a summary.

    ``filters`` maps LogRecord field names to predicates; a record failing
    any predicate is dropped and counted as ``dropped_by_filter``. Malformed
    lines are dropped and counted, never repaired. Raises ``EmptyDataset``
    when nothing parses, and propagates ``OSError`` for unreadable paths.
    """
    fmt = LogFormat(format)
    if filters:
        valid_fields = set(CSV_COLUMNS)
        unknown = set(filters) - valid_fields
        if unknown:
            raise ValueError(f"unknown filter fields: {sorted(unknown)}")

    records: list[LogRecord] = []
    total = parsed = malformed = filtered = 0
    with open(path, "r", encoding="utf-8") as fh:
        if fmt is LogFormat.CSV:
            header = fh.readline().rstrip("\r\n")
            if header != CSV_HEADER:
                raise MalformedLine(f"missing or wrong CSV header: {header!r}")
        for line in fh:
            total += 1
            try:
                record = parse_line(line, fmt, dst_ip=dst_ip)
            except MalformedLine:
                malformed += 1
                continue
            if filters and not all(pred(getattr(record, name)) for name, pred in filters.items()):
                filtered += 1
                continue
            parsed += 1
            records.append(record)
    summary = IngestSummary(total, parsed, malformed, filtered)
    if parsed == 0:
        raise EmptyDataset(f"no usable records in {path}")
    return records, summary
