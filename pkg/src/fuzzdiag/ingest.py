"""Flow-record parsing, fixed-window bucketing and per-module feature extraction.

Flow-record format, version 1: one JSON object per line with keys ``ts``
(seconds since epoch, number), ``proto`` (string) and ``bytes`` (non-negative
integer).  Blank lines and lines starting with ``#`` are skipped.  Protocol
strings other than ``IP`` and ``IPX`` (case-insensitive) are tagged OTHER.
"""
from __future__ import annotations

import enum
import json
import logging
import math
from dataclasses import dataclass
from typing import Iterable, Iterator, TextIO

from .rulebook import ModuleKind

log = logging.getLogger(__name__)

DEFAULT_WINDOW = 60.0


class Proto(enum.Enum):
    IP = "IP"
    IPX = "IPX"
    OTHER = "OTHER"


class RecordError(ValueError):
    def __init__(self, message: str, lineno: int | None = None):
        self.lineno = lineno
        super().__init__(f"line {lineno}: {message}" if lineno is not None else message)


class ConfigError(ValueError):
    pass


@dataclass(frozen=True, slots=True)
class FlowRecord:
    ts: float
    proto: Proto
    bytes: int

    def to_line(self) -> str:
        return json.dumps({"ts": self.ts, "proto": self.proto.value, "bytes": self.bytes},
                          separators=(",", ":"))


@dataclass(frozen=True, slots=True)
class Bucket:
    window_start: float
    window_len: float
    ip_count: int = 0
    ipx_count: int = 0
    total_count: int = 0
    total_bytes: int = 0


@dataclass(frozen=True, slots=True)
class FeatureSample:
    module: ModuleKind
    ts: float
    value: float


_PROTOS = {"IP": Proto.IP, "IPX": Proto.IPX}


def parse_record(line: str, lineno: int | None = None) -> FlowRecord:
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as exc:
        raise RecordError(f"malformed record: {exc.msg}", lineno) from None
    if not isinstance(obj, dict):
        raise RecordError("record must be a JSON object", lineno)
    try:
        ts, proto, nbytes = obj["ts"], obj["proto"], obj["bytes"]
    except KeyError as exc:
        raise RecordError(f"missing field {exc.args[0]!r}", lineno) from None
    if isinstance(ts, bool) or not isinstance(ts, (int, float)) or not math.isfinite(ts):
        raise RecordError(f"ts must be a finite number, got {ts!r}", lineno)
    if not isinstance(proto, str):
        raise RecordError(f"proto must be a string, got {proto!r}", lineno)
    if isinstance(nbytes, bool) or not isinstance(nbytes, int):
        raise RecordError(f"bytes must be an integer, got {nbytes!r}", lineno)
    if nbytes < 0:
        raise RecordError(f"bytes must be non-negative, got {nbytes}", lineno)
    return FlowRecord(float(ts), _PROTOS.get(proto.upper(), Proto.OTHER), nbytes)


def read_records(stream: Iterable[str], strict: bool = True, errors: list | None = None) -> Iterator[FlowRecord]:
    """Parse a line stream.  With ``strict=False`` bad lines are logged, appended to `errors` and skipped."""
    for lineno, line in enumerate(stream, start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        try:
            yield parse_record(stripped, lineno)
        except RecordError as exc:
            if strict:
                raise
            log.warning("skipping record: %s", exc)
            if errors is not None:
                errors.append(exc)


def write_records(records: Iterable[FlowRecord], out: TextIO) -> int:
    n = 0
    for rec in records:
        out.write(rec.to_line())
        out.write("\n")
        n += 1
    return n


class Bucketizer:
    """Streaming assignment of records to half-open windows ``[start, start + len)``.

    Two windows stay open so a record may arrive up to one window late; anything
    older is rejected and counted.  Empty windows between data are emitted as
    zero buckets.
    """

    def __init__(self, window_len: float = DEFAULT_WINDOW, origin: float = 0.0):
        if not window_len > 0:
            raise ConfigError(f"window_len must be positive, got {window_len}")
        self.window_len = float(window_len)
        self.origin = float(origin)
        self.rejected = 0
        self.rejected_bytes = 0
        self._open: dict[int, list[int]] = {}
        self._low: int | None = None  # oldest window not yet emitted
        self._head: int | None = None  # newest window seen

    def _index(self, ts: float) -> int:
        return math.floor((ts - self.origin) / self.window_len)

    def _emit(self, idx: int) -> Bucket:
        ip, ipx, total, nbytes = self._open.pop(idx, (0, 0, 0, 0))
        return Bucket(self.origin + idx * self.window_len, self.window_len, ip, ipx, total, nbytes)

    def push(self, rec: FlowRecord) -> list[Bucket]:
        idx = self._index(rec.ts)
        out = []
        if self._head is None:
            self._low = self._head = idx
        elif idx < self._low:
            self.rejected += 1
            self.rejected_bytes += rec.bytes
            log.debug("rejecting late record at ts=%s", rec.ts)
            return out
        elif idx > self._head:
            while self._low < idx - 1:
                out.append(self._emit(self._low))
                self._low += 1
            self._head = idx
        acc = self._open.setdefault(idx, [0, 0, 0, 0])
        if rec.proto is Proto.IP:
            acc[0] += 1
        elif rec.proto is Proto.IPX:
            acc[1] += 1
        acc[2] += 1
        acc[3] += rec.bytes
        return out

    def flush(self) -> list[Bucket]:
        if self._head is None:
            return []
        out = [self._emit(k) for k in range(self._low, self._head + 1)]
        self._low = self._head = None
        return out


def bucketize(records: Iterable[FlowRecord], window_len: float = DEFAULT_WINDOW,
              origin: float = 0.0) -> Iterator[Bucket]:
    b = Bucketizer(window_len, origin)
    for rec in records:
        yield from b.push(rec)
    yield from b.flush()


def features(bucket: Bucket, link_capacity_bps: float) -> tuple[FeatureSample, ...]:
    if not link_capacity_bps > 0:
        raise ConfigError(f"link capacity must be positive, got {link_capacity_bps}")
    w = bucket.window_len
    ts = bucket.window_start
    return (
        FeatureSample(ModuleKind.IP_COUNT, ts, float(bucket.ip_count)),
        FeatureSample(ModuleKind.IPX_COUNT, ts, float(bucket.ipx_count)),
        FeatureSample(ModuleKind.UTILIZATION, ts, bucket.total_bytes * 8 / (link_capacity_bps * w) * 100.0),
        FeatureSample(ModuleKind.BYTES_PER_SEC, ts, bucket.total_bytes / w),
    )


def time_of_day(ts: float, utc_offset: float = 0.0) -> float:
    """Hour of day in [0, 24)."""
    h = (ts / 3600.0 + utc_offset) % 24.0
    # float modulo can land exactly on 24.0 for tiny negative inputs
    return 0.0 if h >= 24.0 else h
