"""Seeded synthetic flow-record generator with injectable anomalies.

Traffic is built minute by minute.  Per-hour packet rates set the expected
count for each protocol; a clipped log-normal factor adds jitter, and packet
sizes scatter around the profile's mean size.  Anomalies rewrite the counts
of the minutes they cover.
"""
from __future__ import annotations

import enum
import math
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, Union

import numpy as np

from .ingest import FlowRecord, Proto, time_of_day

try:
    import tomllib
except ModuleNotFoundError:  # python < 3.11
    import tomli as tomllib

TICK = 60
DAY = 86400
NOISE_CLIP = 3.0
MIN_SIZE, MAX_SIZE = 64, 1518

# packets per minute by UTC hour
DEFAULT_IP_RATE = (40, 40, 40, 40, 40, 40, 40, 60, 90, 110, 110, 110,
                   110, 110, 110, 110, 110, 90, 70, 70, 70, 50, 50, 50)
DEFAULT_IPX_RATE = (25,) * 7 + (30,) * 14 + (25,) * 3


class ScenarioError(ValueError):
    pass


class AnomalyKind(enum.Enum):
    FLASH_CROWD = "FlashCrowd"
    DEVICE_OUTAGE = "DeviceOutage"
    ROUTER_FAILURE = "RouterFailure"
    NIC_FAILURE_IPX = "NicFailureIpx"


@dataclass(frozen=True)
class Anomaly:
    """`magnitude` multiplies the affected packet counts: >1 for a surge, a
    small residual fraction for failures (ignored for DeviceOutage)."""

    kind: AnomalyKind
    start: float
    duration: float
    magnitude: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "kind", AnomalyKind(self.kind))

    @property
    def end(self) -> float:
        return self.start + self.duration

    def covers(self, t: float) -> bool:
        return self.start <= t < self.end


@dataclass(frozen=True)
class DiurnalProfile:
    ip_rate: tuple[float, ...] = DEFAULT_IP_RATE
    ipx_rate: tuple[float, ...] = DEFAULT_IPX_RATE
    mean_size: float = 600.0
    noise: float = 0.02
    size_spread: float = 0.1

    def __post_init__(self):
        object.__setattr__(self, "ip_rate", tuple(float(r) for r in self.ip_rate))
        object.__setattr__(self, "ipx_rate", tuple(float(r) for r in self.ipx_rate))


@dataclass(frozen=True)
class ScenarioSpec:
    duration: float
    start: float = 0.0
    base: DiurnalProfile = field(default_factory=DiurnalProfile)
    anomalies: tuple[Anomaly, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "anomalies", tuple(self.anomalies))

    def validate(self) -> None:
        b = self.base
        if not self.duration > 0:
            raise ScenarioError("duration must be positive")
        if len(b.ip_rate) != 24 or len(b.ipx_rate) != 24:
            raise ScenarioError("ip_rate and ipx_rate need one entry per hour (24)")
        if any(r < 0 or not math.isfinite(r) for r in b.ip_rate + b.ipx_rate):
            raise ScenarioError("packet rates must be finite and non-negative")
        if not 0 <= b.noise < 1:
            raise ScenarioError(f"noise fraction must lie in [0, 1), got {b.noise}")
        if not 0 <= b.size_spread < 1:
            raise ScenarioError(f"size_spread must lie in [0, 1), got {b.size_spread}")
        if not MIN_SIZE <= b.mean_size <= MAX_SIZE:
            raise ScenarioError(f"mean_size must lie in [{MIN_SIZE}, {MAX_SIZE}]")
        for a in self.anomalies:
            if a.duration <= 0 or a.magnitude < 0:
                raise ScenarioError(f"bad anomaly {a}")
            if a.start < self.start or a.end > self.start + self.duration:
                raise ScenarioError(f"anomaly {a.kind.value} at {a.start} falls outside the scenario")


def _factor(rng: np.random.Generator, sigma: float) -> float:
    z = min(max(rng.standard_normal(), -NOISE_CLIP), NOISE_CLIP)
    return math.exp(sigma * z)


def generate(spec: ScenarioSpec, seed: int = 0) -> Iterator[FlowRecord]:
    """Records in non-decreasing timestamp order, fully determined by (spec, seed)."""
    spec.validate()
    rng = np.random.default_rng(seed)
    b = spec.base
    ticks = math.ceil(spec.duration / TICK)
    end = spec.start + spec.duration
    for m in range(ticks):
        t0 = spec.start + m * TICK
        span = min(TICK, end - t0)
        hour = int(time_of_day(t0))
        lam_ip = b.ip_rate[hour] * span / TICK
        lam_ipx = b.ipx_rate[hour] * span / TICK
        f_ip, f_ipx = _factor(rng, b.noise), _factor(rng, b.noise)
        for a in spec.anomalies:
            if not a.covers(t0):
                continue
            if a.kind is AnomalyKind.FLASH_CROWD:
                f_ip *= a.magnitude
                f_ipx *= a.magnitude
            elif a.kind is AnomalyKind.DEVICE_OUTAGE:
                f_ip = f_ipx = 0.0
            elif a.kind is AnomalyKind.ROUTER_FAILURE:
                f_ip *= a.magnitude
                f_ipx *= a.magnitude
            elif a.kind is AnomalyKind.NIC_FAILURE_IPX:
                f_ipx *= a.magnitude
        n_ip = int(lam_ip * f_ip + 0.5)
        n_ipx = int(lam_ipx * f_ipx + 0.5)
        n = n_ip + n_ipx
        if n == 0:
            continue
        offsets = np.floor(rng.random(n) * span * 1000.0) / 1000.0
        z = np.clip(rng.standard_normal(n), -NOISE_CLIP, NOISE_CLIP)
        sizes = np.clip(np.rint(b.mean_size * np.exp(b.size_spread * z)), MIN_SIZE, MAX_SIZE).astype(int)
        order = np.argsort(offsets, kind="stable")
        for i in order.tolist():
            yield FlowRecord(round(t0 + float(offsets[i]), 3), Proto.IP if i < n_ip else Proto.IPX,
                             int(sizes[i]))


def reference_scenarios() -> dict[str, ScenarioSpec]:
    """One spec per anomaly kind plus a clean week.

    Anomaly scenarios start right after the clean week so a profile surveyed
    on it applies directly.  The IPX failure runs in business hours, where the
    IP table maps normal traffic to IGNORE.
    """
    week = 7 * DAY
    h = 3600
    return {
        "baseline_week": ScenarioSpec(duration=week, start=0.0),
        "flash_crowd": ScenarioSpec(duration=DAY, start=week, anomalies=(
            Anomaly(AnomalyKind.FLASH_CROWD, week + 10 * h, 3 * h, 3.0),)),
        "device_outage": ScenarioSpec(duration=DAY, start=week, anomalies=(
            Anomaly(AnomalyKind.DEVICE_OUTAGE, week + 15 * h, 20 * 60),)),
        "router_failure": ScenarioSpec(duration=DAY, start=week, anomalies=(
            Anomaly(AnomalyKind.ROUTER_FAILURE, week + 11 * h, 10 * 60, 0.02),)),
        "nic_failure_ipx": ScenarioSpec(duration=8 * h, start=week + 10 * h, anomalies=(
            Anomaly(AnomalyKind.NIC_FAILURE_IPX, week + 12 * h, 2 * h, 0.0),)),
    }


def scenario_from_dict(d: dict) -> ScenarioSpec:
    try:
        base = DiurnalProfile(**d.get("base", {}))
        anomalies = tuple(Anomaly(AnomalyKind(a["kind"]), float(a["start"]), float(a["duration"]),
                                  float(a.get("magnitude", 1.0)))
                          for a in d.get("anomaly", ()))
        spec = ScenarioSpec(float(d["duration"]), float(d.get("start", 0.0)), base, anomalies)
    except (KeyError, TypeError, ValueError) as exc:
        raise ScenarioError(f"bad scenario definition: {exc}") from None
    spec.validate()
    return spec


def load_scenario(path: Union[str, os.PathLike]) -> ScenarioSpec:
    """TOML: top-level ``duration``/``start``, a ``[base]`` table and ``[[anomaly]]`` entries."""
    try:
        data = tomllib.loads(Path(path).read_text())
    except tomllib.TOMLDecodeError as exc:
        raise ScenarioError(f"{path}: {exc}") from None
    return scenario_from_dict(data)
